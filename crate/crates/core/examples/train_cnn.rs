//! Train the audio CNN on synthetic features, check gradients, save and reload.
//!
//! cargo run --release --example train_cnn

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxguard::cnn::{build_model, forward, grad_check, layer_specs, load_model, save_model, train, TrainConfig};
use voxguard::features::FeatureVector;
use voxguard::Label;

fn dataset(n: usize, seed: u64) -> Vec<(FeatureVector, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Hate } else { Label::NonHate };
            let shift = if label.is_hate() { 0.4 } else { -0.4 };
            let x = (0..40).map(|_| shift + noise.sample(&mut rng)).collect();
            (FeatureVector::new(format!("s{i}#0"), x, 0.1, false).unwrap(), label)
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for spec in layer_specs(40) {
        println!("{spec}");
    }
    let model = build_model(40, 1)?;
    let (probe, label) = &dataset(1, 99)[0];
    let check = grad_check(&model, probe, *label, 1e-5)?;
    println!("gradient check: max relative error {:.2e} ({} weights)", check.max_relative_error, check.checked);

    let config = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let trained = train(model, &dataset(600, 1), &config)?;
    for h in trained.history.iter().step_by(5) {
        println!("epoch {:>2}: loss {:.4} accuracy {:.3}", h.epoch, h.loss, h.accuracy);
    }

    let bytes = save_model(&trained.model);
    let reloaded = load_model(&bytes)?;
    let test = dataset(200, 2);
    let correct = test.iter().filter(|(fv, l)| forward(&reloaded, fv).unwrap().label == *l).count();
    println!("model file {} bytes; held-out accuracy {:.3}", bytes.len(), correct as f64 / test.len() as f64);
    Ok(())
}
