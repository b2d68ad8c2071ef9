use super::AudioClip;

/// Linear-interpolation resampler.
///
/// Output length is `round(n * target / source)`. Output sample `j` sits at input position
/// `j * source / target`; positions past the last input sample hold the final value.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target rate must be positive");
    let source_rate = clip.sample_rate();
    if source_rate == target_rate || clip.is_empty() {
        return AudioClip {
            samples: clip.samples().to_vec(),
            sample_rate: target_rate,
            source_id: clip.source_id().to_string(),
        };
    }

    let input = clip.samples();
    let n = input.len();
    let out_len = (n as f64 * target_rate as f64 / source_rate as f64).round() as usize;
    let step = source_rate as f64 / target_rate as f64;
    let samples = (0..out_len)
        .map(|j| {
            let pos = j as f64 * step;
            let i0 = pos.floor() as usize;
            if i0 + 1 >= n {
                return input[n - 1];
            }
            let frac = pos - i0 as f64;
            input[i0] + (input[i0 + 1] - input[i0]) * frac
        })
        .collect();

    AudioClip {
        samples,
        sample_rate: target_rate,
        source_id: clip.source_id().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact-position oracle: integer arithmetic for the source index and remainder.
    fn oracle(input: &[f64], from: u32, to: u32) -> Vec<f64> {
        let n = input.len() as u64;
        let out = ((n * to as u64) as f64 / from as f64).round() as u64;
        (0..out)
            .map(|j| {
                let num = j * from as u64;
                let i0 = num / to as u64;
                let rem = num % to as u64;
                if i0 + 1 >= n {
                    input[(n - 1) as usize]
                } else {
                    let a = input[i0 as usize];
                    let b = input[(i0 + 1) as usize];
                    a * (1.0 - rem as f64 / to as f64) + b * (rem as f64 / to as f64)
                }
            })
            .collect()
    }

    #[test]
    fn identity_when_rates_match() {
        let clip = AudioClip::new(vec![0.1, -0.2, 0.3], 44_100, "id").unwrap();
        let out = resample(&clip, 44_100);
        assert_eq!(out, clip);
    }

    #[test]
    fn constant_signal_upsampled() {
        let clip = AudioClip::new(vec![0.5; 100], 22_050, "c").unwrap();
        let out = resample(&clip, 44_100);
        assert_eq!(out.samples().len(), 200);
        assert!(out.samples().iter().all(|&x| x == 0.5));
        assert_eq!(out.sample_rate(), 44_100);
    }

    #[test]
    fn ramp_matches_oracle() {
        let ramp: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let clip = AudioClip::new(ramp.clone(), 22_050, "r").unwrap();
        for target in [44_100, 16_000, 48_000, 8_000] {
            let out = resample(&clip, target);
            let expected = oracle(&ramp, 22_050, target);
            assert_eq!(out.samples().len(), expected.len());
            for (a, b) in out.samples().iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "{target}: {a} vs {b}");
            }
        }
    }
}
