//! Dense layers, ReLU, batch normalization and softmax cross-entropy over
//! row-major batches.

/// Dense layer referencing parameter buffers by index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDesc {
    pub weight: usize,
    pub bias: Option<usize>,
    pub inputs: usize,
    pub outputs: usize,
    pub relu: bool,
}

/// Stack of dense layers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mlp {
    pub layers: Vec<DenseDesc>,
}

/// Activations kept from the forward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    /// Input of every layer.
    inputs: Vec<Vec<f64>>,
    /// Post-activation output of every layer.
    outputs: Vec<Vec<f64>>,
    rows: usize,
}

impl MlpCache {
    /// Hash of the ReLU on/off pattern, used to detect kinks in finite
    /// difference checks.
    pub fn relu_pattern(&self, mlp: &Mlp, hasher: &mut impl std::hash::Hasher) {
        for (layer, out) in mlp.layers.iter().zip(&self.outputs) {
            if layer.relu {
                for v in out {
                    hasher.write_u8((*v > 0.0) as u8);
                }
            }
        }
    }
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn forward(&self, params: &[Vec<f64>], x: &[f64], rows: usize) -> (Vec<f64>, MlpCache) {
        let mut cache = MlpCache { rows, ..Default::default() };
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let out = dense_forward(layer, params, &cur, rows);
            cache.inputs.push(std::mem::replace(&mut cur, out));
            cache.outputs.push(cur.clone());
        }
        (cur, cache)
    }

    /// Forward pass without keeping intermediates.
    pub fn infer(&self, params: &[Vec<f64>], x: &[f64], rows: usize) -> Vec<f64> {
        let mut cur = dense_forward(&self.layers[0], params, x, rows);
        for layer in &self.layers[1..] {
            cur = dense_forward(layer, params, &cur, rows);
        }
        cur
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward(
        &self,
        params: &[Vec<f64>],
        cache: &MlpCache,
        dout: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let rows = cache.rows;
        let mut d = dout.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.relu {
                for (g, y) in d.iter_mut().zip(&cache.outputs[i]) {
                    if *y <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            d = dense_backward(layer, params, &cache.inputs[i], &d, rows, grads);
        }
        d
    }
}

fn dense_forward(layer: &DenseDesc, params: &[Vec<f64>], x: &[f64], rows: usize) -> Vec<f64> {
    let (nin, nout) = (layer.inputs, layer.outputs);
    debug_assert_eq!(x.len(), rows * nin);
    let w = &params[layer.weight];
    let mut y = vec![0.0; rows * nout];
    for (xr, yr) in x.chunks_exact(nin).zip(y.chunks_exact_mut(nout)) {
        for (o, yo) in yr.iter_mut().enumerate() {
            let wr = &w[o * nin..(o + 1) * nin];
            let mut acc = 0.0;
            for (a, b) in xr.iter().zip(wr) {
                acc += a * b;
            }
            *yo = acc;
        }
        if let Some(b) = layer.bias {
            for (yo, bo) in yr.iter_mut().zip(&params[b]) {
                *yo += bo;
            }
        }
        if layer.relu {
            for v in yr.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }
    y
}

fn dense_backward(
    layer: &DenseDesc,
    params: &[Vec<f64>],
    x: &[f64],
    dy: &[f64],
    rows: usize,
    grads: &mut [Vec<f64>],
) -> Vec<f64> {
    let (nin, nout) = (layer.inputs, layer.outputs);
    let w = &params[layer.weight];
    let mut dx = vec![0.0; rows * nin];
    {
        let dw = &mut grads[layer.weight];
        for ((xr, dyr), dxr) in x.chunks_exact(nin).zip(dy.chunks_exact(nout)).zip(dx.chunks_exact_mut(nin)) {
            for (o, &g) in dyr.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let wr = &w[o * nin..(o + 1) * nin];
                let dwr = &mut dw[o * nin..(o + 1) * nin];
                for ((dwi, xi), (dxi, wi)) in dwr.iter_mut().zip(xr).zip(dxr.iter_mut().zip(wr)) {
                    *dwi += g * xi;
                    *dxi += g * wi;
                }
            }
        }
    }
    if let Some(b) = layer.bias {
        let db = &mut grads[b];
        for dyr in dy.chunks_exact(nout) {
            for (a, g) in db.iter_mut().zip(dyr) {
                *a += g;
            }
        }
    }
    dx
}

pub const BATCHNORM_EPS: f64 = 1e-5;

/// Batch normalization over the columns of a row-major batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormDesc {
    pub gamma: usize,
    pub beta: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BatchNormCache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
    rows: usize,
}

impl BatchNormDesc {
    /// Training-mode forward with batch statistics.
    pub fn forward_train(&self, params: &[Vec<f64>], x: &[f64], rows: usize) -> (Vec<f64>, BatchNormCache) {
        let d = self.dim;
        let n = rows as f64;
        let mut mean = vec![0.0; d];
        for r in x.chunks_exact(d) {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in x.chunks_exact(d) {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BATCHNORM_EPS).sqrt()).collect();
        let mut normalized = vec![0.0; x.len()];
        let mut y = vec![0.0; x.len()];
        let (gamma, beta) = (&params[self.gamma], &params[self.beta]);
        for ((xr, nr), yr) in x.chunks_exact(d).zip(normalized.chunks_exact_mut(d)).zip(y.chunks_exact_mut(d)) {
            for j in 0..d {
                nr[j] = (xr[j] - mean[j]) * inv_std[j];
                yr[j] = gamma[j] * nr[j] + beta[j];
            }
        }
        let cache = BatchNormCache { normalized, inv_std, batch_mean: mean, batch_var: var, rows };
        (y, cache)
    }

    /// Inference-mode forward with running statistics.
    pub fn forward_infer(&self, params: &[Vec<f64>], mean: &[f64], var: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let (gamma, beta) = (&params[self.gamma], &params[self.beta]);
        let scale: Vec<f64> = var.iter().zip(gamma).map(|(v, g)| g / (v + BATCHNORM_EPS).sqrt()).collect();
        let mut y = vec![0.0; x.len()];
        for (xr, yr) in x.chunks_exact(d).zip(y.chunks_exact_mut(d)) {
            for j in 0..d {
                yr[j] = (xr[j] - mean[j]) * scale[j] + beta[j];
            }
        }
        y
    }

    pub fn backward(&self, params: &[Vec<f64>], cache: &BatchNormCache, dy: &[f64], grads: &mut [Vec<f64>]) -> Vec<f64> {
        let d = self.dim;
        let n = cache.rows as f64;
        let gamma = &params[self.gamma];
        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        for (dyr, nr) in dy.chunks_exact(d).zip(cache.normalized.chunks_exact(d)) {
            for j in 0..d {
                dgamma[j] += dyr[j] * nr[j];
                dbeta[j] += dyr[j];
            }
        }
        for (g, v) in grads[self.gamma].iter_mut().zip(&dgamma) {
            *g += v;
        }
        for (g, v) in grads[self.beta].iter_mut().zip(&dbeta) {
            *g += v;
        }
        // dx = gamma * inv_std / n * (n dy - sum dy - xhat * sum(dy xhat))
        let mut dx = vec![0.0; dy.len()];
        for ((dyr, nr), dxr) in dy.chunks_exact(d).zip(cache.normalized.chunks_exact(d)).zip(dx.chunks_exact_mut(d)) {
            for j in 0..d {
                dxr[j] = gamma[j] * cache.inv_std[j] / n * (n * dyr[j] - dbeta[j] - nr[j] * dgamma[j]);
            }
        }
        dx
    }
}

/// Mean softmax cross-entropy over rows of `logits` (`rows x classes`).
/// Entries equal to `-inf` are excluded from the softmax. Returns the loss and
/// the gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], targets: &[u32], classes: usize) -> (f64, Vec<f64>) {
    let rows = targets.len();
    let mut grad = vec![0.0; logits.len()];
    let mut total = 0.0;
    for ((row, g), &t) in logits.chunks_exact(classes).zip(grad.chunks_exact_mut(classes)).zip(targets) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (gi, &z) in g.iter_mut().zip(row) {
            let e = if z == f64::NEG_INFINITY { 0.0 } else { (z - max).exp() };
            *gi = e;
            sum += e;
        }
        let log_sum = sum.ln() + max;
        total += log_sum - row[t as usize];
        for gi in g.iter_mut() {
            *gi /= sum * rows as f64;
        }
        g[t as usize] -= 1.0 / rows as f64;
    }
    (total / rows as f64, grad)
}
