//! Layer arithmetic over a flat parameter buffer.
//!
//! Stack: conv(32, 3x1, same) -> ReLU -> maxpool(2) -> conv(64, 3x1, same) -> ReLU ->
//! maxpool(2) -> flatten -> dense(64) -> ReLU -> dense(1) -> sigmoid.
//! Kernels are generic over the parameter scalar so inference can run straight off the
//! stored `f32` weights while training and gradient checks use `f64`.

use std::ops::Range;

pub const CONV1_FILTERS: usize = 32;
pub const CONV2_FILTERS: usize = 64;
pub const KERNEL: usize = 3;
pub const POOL: usize = 2;
pub const DENSE_UNITS: usize = 64;

/// Offsets of each tensor in the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub input_dim: usize,
    pub pooled1: usize,
    pub pooled2: usize,
    pub flat: usize,
    conv1_w: usize,
    conv1_b: usize,
    conv2_w: usize,
    conv2_b: usize,
    dense1_w: usize,
    dense1_b: usize,
    dense2_w: usize,
    dense2_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(input_dim: usize) -> Self {
        let pooled1 = input_dim / POOL;
        let pooled2 = pooled1 / POOL;
        let flat = CONV2_FILTERS * pooled2;
        let conv1_w = 0;
        let conv1_b = conv1_w + CONV1_FILTERS * KERNEL;
        let conv2_w = conv1_b + CONV1_FILTERS;
        let conv2_b = conv2_w + CONV2_FILTERS * CONV1_FILTERS * KERNEL;
        let dense1_w = conv2_b + CONV2_FILTERS;
        let dense1_b = dense1_w + DENSE_UNITS * flat;
        let dense2_w = dense1_b + DENSE_UNITS;
        let dense2_b = dense2_w + DENSE_UNITS;
        Self {
            input_dim,
            pooled1,
            pooled2,
            flat,
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            dense1_w,
            dense1_b,
            dense2_w,
            dense2_b,
            total: dense2_b + 1,
        }
    }

    /// Named tensor ranges with their fan-in, in buffer order.
    pub fn tensors(&self) -> [Tensor; 8] {
        [
            Tensor::new("conv1.weight", self.conv1_w..self.conv1_b, KERNEL, false),
            Tensor::new("conv1.bias", self.conv1_b..self.conv2_w, KERNEL, true),
            Tensor::new(
                "conv2.weight",
                self.conv2_w..self.conv2_b,
                CONV1_FILTERS * KERNEL,
                false,
            ),
            Tensor::new("conv2.bias", self.conv2_b..self.dense1_w, CONV1_FILTERS * KERNEL, true),
            Tensor::new("dense1.weight", self.dense1_w..self.dense1_b, self.flat, false),
            Tensor::new("dense1.bias", self.dense1_b..self.dense2_w, self.flat, true),
            Tensor::new("dense2.weight", self.dense2_w..self.dense2_b, DENSE_UNITS, false),
            Tensor::new("dense2.bias", self.dense2_b..self.total, DENSE_UNITS, true),
        ]
    }

    pub fn dense2(&self) -> Range<usize> {
        self.dense2_w..self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub name: &'static str,
    pub range: Range<usize>,
    pub fan_in: usize,
    pub is_bias: bool,
}

impl Tensor {
    fn new(name: &'static str, range: Range<usize>, fan_in: usize, is_bias: bool) -> Self {
        Self {
            name,
            range,
            fan_in,
            is_bias,
        }
    }
}

/// Activations kept from the forward pass for backprop.
#[derive(Debug, Clone)]
pub struct Cache {
    x: Vec<f64>,
    a1: Vec<f64>,
    p1: Vec<f64>,
    p1_idx: Vec<usize>,
    a2: Vec<f64>,
    p2_idx: Vec<usize>,
    flat: Vec<f64>,
    z1: Vec<f64>,
    r1: Vec<f64>,
    // backward scratch
    d_a2: Vec<f64>,
    d_p1: Vec<f64>,
    d_a1: Vec<f64>,
    d_flat: Vec<f64>,
    d_z1: Vec<f64>,
}

impl Cache {
    pub fn new(layout: &Layout) -> Self {
        let l0 = layout.input_dim;
        let l1 = layout.pooled1;
        Self {
            x: vec![0.0; l0],
            a1: vec![0.0; CONV1_FILTERS * l0],
            p1: vec![0.0; CONV1_FILTERS * l1],
            p1_idx: vec![0; CONV1_FILTERS * l1],
            a2: vec![0.0; CONV2_FILTERS * l1],
            p2_idx: vec![0; CONV2_FILTERS * layout.pooled2],
            flat: vec![0.0; layout.flat],
            z1: vec![0.0; DENSE_UNITS],
            r1: vec![0.0; DENSE_UNITS],
            d_a2: vec![0.0; CONV2_FILTERS * l1],
            d_p1: vec![0.0; CONV1_FILTERS * l1],
            d_a1: vec![0.0; CONV1_FILTERS * l0],
            d_flat: vec![0.0; layout.flat],
            d_z1: vec![0.0; DENSE_UNITS],
        }
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    // NaN passes through so divergence stays visible
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

#[inline]
fn w<T: Copy + Into<f64>>(params: &[T], i: usize) -> f64 {
    params[i].into()
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy evaluated from the logit.
pub fn bce_from_logit(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

/// Same-padded 3-tap convolution over `in_ch` channels of length `len`.
fn conv_same<T: Copy + Into<f64>>(
    params: &[T],
    w_off: usize,
    b_off: usize,
    input: &[f64],
    in_ch: usize,
    out_ch: usize,
    len: usize,
    out: &mut [f64],
) {
    for o in 0..out_ch {
        let bias = w(params, b_off + o);
        let row = &mut out[o * len..(o + 1) * len];
        row.fill(bias);
        for c in 0..in_ch {
            let x = &input[c * len..(c + 1) * len];
            let base = w_off + (o * in_ch + c) * KERNEL;
            let (k0, k1, k2) = (w(params, base), w(params, base + 1), w(params, base + 2));
            for i in 0..len {
                let mut s = k1 * x[i];
                if i > 0 {
                    s += k0 * x[i - 1];
                }
                if i + 1 < len {
                    s += k2 * x[i + 1];
                }
                row[i] += s;
            }
        }
    }
}

/// ReLU followed by non-overlapping max-pool of width 2; records winning indices.
fn relu_pool(pre: &[f64], channels: usize, len: usize, out: &mut [f64], idx: &mut [usize]) {
    let pooled = len / POOL;
    for c in 0..channels {
        for j in 0..pooled {
            let i0 = c * len + POOL * j;
            let (v0, v1) = (relu(pre[i0]), relu(pre[i0 + 1]));
            let (v, i) = if v0 >= v1 { (v0, i0) } else { (v1, i0 + 1) };
            out[c * pooled + j] = v;
            idx[c * pooled + j] = i;
        }
    }
}

/// Forward pass; returns the output logit and fills `cache`.
pub fn forward<T: Copy + Into<f64>>(
    layout: &Layout,
    params: &[T],
    input: &[f64],
    cache: &mut Cache,
) -> f64 {
    let l0 = layout.input_dim;
    let l1 = layout.pooled1;
    let l2 = layout.pooled2;
    cache.x.copy_from_slice(input);

    conv_same(
        params,
        layout.conv1_w,
        layout.conv1_b,
        &cache.x,
        1,
        CONV1_FILTERS,
        l0,
        &mut cache.a1,
    );
    relu_pool(&cache.a1, CONV1_FILTERS, l0, &mut cache.p1, &mut cache.p1_idx);
    conv_same(
        params,
        layout.conv2_w,
        layout.conv2_b,
        &cache.p1,
        CONV1_FILTERS,
        CONV2_FILTERS,
        l1,
        &mut cache.a2,
    );
    let mut p2 = vec![0.0; CONV2_FILTERS * l2];
    relu_pool(&cache.a2, CONV2_FILTERS, l1, &mut p2, &mut cache.p2_idx);
    // flatten position-major: flat[j * C2 + d]
    for d in 0..CONV2_FILTERS {
        for j in 0..l2 {
            cache.flat[j * CONV2_FILTERS + d] = p2[d * l2 + j];
        }
    }

    let f = layout.flat;
    for u in 0..DENSE_UNITS {
        let row = layout.dense1_w + u * f;
        let mut s = w(params, layout.dense1_b + u);
        for (k, x) in cache.flat.iter().enumerate() {
            s += w(params, row + k) * x;
        }
        cache.z1[u] = s;
        cache.r1[u] = relu(s);
    }

    let mut logit = w(params, layout.dense2_b);
    for u in 0..DENSE_UNITS {
        logit += w(params, layout.dense2_w + u) * cache.r1[u];
    }
    logit
}

/// Accumulate `d_logit * d(logit)/d(params)` into `grad`.
pub fn backward<T: Copy + Into<f64>>(
    layout: &Layout,
    params: &[T],
    cache: &mut Cache,
    d_logit: f64,
    grad: &mut [f64],
) {
    let l0 = layout.input_dim;
    let l1 = layout.pooled1;
    let l2 = layout.pooled2;
    let f = layout.flat;

    grad[layout.dense2_b] += d_logit;
    for u in 0..DENSE_UNITS {
        grad[layout.dense2_w + u] += d_logit * cache.r1[u];
        cache.d_z1[u] = if cache.z1[u] > 0.0 {
            d_logit * w(params, layout.dense2_w + u)
        } else {
            0.0
        };
    }

    cache.d_flat.fill(0.0);
    for u in 0..DENSE_UNITS {
        let g = cache.d_z1[u];
        if g == 0.0 {
            continue;
        }
        grad[layout.dense1_b + u] += g;
        let row = layout.dense1_w + u * f;
        for k in 0..f {
            grad[row + k] += g * cache.flat[k];
            cache.d_flat[k] += g * w(params, row + k);
        }
    }

    cache.d_a2.fill(0.0);
    for d in 0..CONV2_FILTERS {
        for j in 0..l2 {
            let i = cache.p2_idx[d * l2 + j];
            if cache.a2[i] > 0.0 {
                cache.d_a2[i] += cache.d_flat[j * CONV2_FILTERS + d];
            }
        }
    }

    cache.d_p1.fill(0.0);
    for d in 0..CONV2_FILTERS {
        for i in 0..l1 {
            let g = cache.d_a2[d * l1 + i];
            if g == 0.0 {
                continue;
            }
            grad[layout.conv2_b + d] += g;
            for c in 0..CONV1_FILTERS {
                let base = layout.conv2_w + (d * CONV1_FILTERS + c) * KERNEL;
                for k in 0..KERNEL {
                    let Some(j) = (i + k).checked_sub(1) else { continue };
                    if j >= l1 {
                        continue;
                    }
                    grad[base + k] += g * cache.p1[c * l1 + j];
                    cache.d_p1[c * l1 + j] += g * w(params, base + k);
                }
            }
        }
    }

    cache.d_a1.fill(0.0);
    for c in 0..CONV1_FILTERS {
        for j in 0..l1 {
            let i = cache.p1_idx[c * l1 + j];
            if cache.a1[i] > 0.0 {
                cache.d_a1[i] += cache.d_p1[c * l1 + j];
            }
        }
    }

    for c in 0..CONV1_FILTERS {
        let base = layout.conv1_w + c * KERNEL;
        for i in 0..l0 {
            let g = cache.d_a1[c * l0 + i];
            if g == 0.0 {
                continue;
            }
            grad[layout.conv1_b + c] += g;
            for k in 0..KERNEL {
                let Some(j) = (i + k).checked_sub(1) else { continue };
                if j < l0 {
                    grad[base + k] += g * cache.x[j];
                }
            }
        }
    }
}
