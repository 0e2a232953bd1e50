//! Finite-difference checks of the analytic gradients.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{softmax_cross_entropy, BatchNormDesc, DenseDesc, Mlp};
use super::{Mode, NetworkSpec, NetworkState, MISSING_DISTANCE};
use crate::error::Result;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error per parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_param: Vec<(String, f64)>,
    /// Entries skipped because a ReLU switched within `±h`.
    pub skipped: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.per_param.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    /// Largest error over buffers whose name starts with `prefix`.
    pub fn max_error_for(&self, prefix: &str) -> f64 {
        self.per_param
            .iter()
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, e)| *e)
            .fold(0.0, f64::max)
    }
}

/// Checks every parameter of a network built from `spec` against central
/// differences of the training-mode cross-entropy on a random batch. All
/// weights, including the output layer, are randomized so no gradient is
/// trivially zero; one candidate per row is marked missing.
pub fn gradient_check(spec: &NetworkSpec, rows: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = NetworkState::init(spec, &mut rng)?;
    let decls = state.param_decls();
    for (p, d) in state.params.iter_mut().zip(&decls) {
        for v in p.iter_mut() {
            *v = if d.name == "norm.gamma" { rng.gen_range(0.5..1.5) } else { rng.gen_range(-0.5..0.5) };
        }
    }
    let len = spec.input_len();
    let mut x: Vec<f64> = (0..rows * len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut targets = Vec::with_capacity(rows);
    for r in 0..rows {
        let missing = rng.gen_range(0..spec.q);
        if spec.q > 1 {
            x[r * len + spec.m + missing] = MISSING_DISTANCE;
        }
        let mut t = rng.gen_range(0..spec.q);
        if spec.q > 1 && t == missing {
            t = (t + 1) % spec.q;
        }
        targets.push(t as u32);
    }
    let layout = state.layout();
    let loss_at = |params: &[Vec<f64>]| -> Result<(f64, u64)> {
        let (logits, cache) = state.forward_with(params, &x, rows, Mode::Train)?;
        let mut h = DefaultHasher::new();
        cache.relu_pattern(&layout, &mut h);
        Ok((softmax_cross_entropy(&logits, &targets, spec.q).0, h.finish()))
    };
    let (logits, cache) = state.forward_with(&state.params, &x, rows, Mode::Train)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, &targets, spec.q);
    let grads = state.backward_with(&state.params, &cache, &dlogits);
    let (_, base_pattern) = loss_at(&state.params)?;

    let mut report = GradCheckReport { per_param: Vec::new(), skipped: 0, checked: 0 };
    let mut params = state.params.clone();
    for (b, decl) in decls.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..params[b].len() {
            let orig = params[b][i];
            params[b][i] = orig + FD_STEP;
            let (lp, pp) = loss_at(&params)?;
            params[b][i] = orig - FD_STEP;
            let (lm, pm) = loss_at(&params)?;
            params[b][i] = orig;
            if pp != base_pattern || pm != base_pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(grads[b][i], numeric));
            report.checked += 1;
        }
        report.per_param.push((decl.name.clone(), worst));
    }
    Ok(report)
}

/// Weighted-sum loss `sum(y * w)` over a layer output, for layer-level checks.
fn probe_loss(y: &[f64], w: &[f64]) -> f64 {
    y.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Checks a standalone training-mode batch normalization layer, including
/// the gradient with respect to its input. Returns the largest relative error.
pub fn check_batchnorm(dim: usize, rows: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bn = BatchNormDesc { gamma: 0, beta: 1, dim };
    let mut params = vec![
        (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect::<Vec<f64>>(),
        (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect(),
    ];
    let mut x: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let probe: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = bn.forward_train(&params, &x, rows);
    let mut grads = vec![vec![0.0; dim], vec![0.0; dim]];
    let dx = bn.backward(&params, &cache, &probe, &mut grads);

    let mut worst: f64 = 0.0;
    for b in 0..2 {
        for i in 0..dim {
            let orig = params[b][i];
            params[b][i] = orig + FD_STEP;
            let lp = probe_loss(&bn.forward_train(&params, &x, rows).0, &probe);
            params[b][i] = orig - FD_STEP;
            let lm = probe_loss(&bn.forward_train(&params, &x, rows).0, &probe);
            params[b][i] = orig;
            worst = worst.max(relative_error(grads[b][i], (lp - lm) / (2.0 * FD_STEP)));
        }
    }
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let lp = probe_loss(&bn.forward_train(&params, &x, rows).0, &probe);
        x[i] = orig - FD_STEP;
        let lm = probe_loss(&bn.forward_train(&params, &x, rows).0, &probe);
        x[i] = orig;
        worst = worst.max(relative_error(dx[i], (lp - lm) / (2.0 * FD_STEP)));
    }
    worst
}

/// Random dense stack with ReLU on all but the last layer.
fn random_mlp(sizes: &[usize], rng: &mut ChaCha8Rng) -> (Mlp, Vec<Vec<f64>>) {
    let mut layers = Vec::new();
    let mut params = Vec::new();
    for (i, w) in sizes.windows(2).enumerate() {
        let weight = params.len();
        params.push((0..w[0] * w[1]).map(|_| rng.gen_range(-0.7..0.7)).collect());
        params.push((0..w[1]).map(|_| rng.gen_range(-0.3..0.3)).collect());
        layers.push(DenseDesc {
            weight,
            bias: Some(weight + 1),
            inputs: w[0],
            outputs: w[1],
            relu: i + 2 < sizes.len(),
        });
    }
    (Mlp { layers }, params)
}

/// Checks a dense + ReLU stack with layer sizes `sizes`, including the input
/// gradient. Entries near a ReLU kink are skipped.
pub fn check_dense_stack(sizes: &[usize], rows: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mlp, mut params) = random_mlp(sizes, &mut rng);
    let mut x: Vec<f64> = (0..rows * sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let out = rows * sizes[sizes.len() - 1];
    let probe: Vec<f64> = (0..out).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let eval = |params: &[Vec<f64>], x: &[f64]| {
        let (y, cache) = mlp.forward(params, x, rows);
        let mut h = DefaultHasher::new();
        cache.relu_pattern(&mlp, &mut h);
        (probe_loss(&y, &probe), h.finish())
    };
    let (_, cache) = mlp.forward(&params, &x, rows);
    let mut grads: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
    let dx = mlp.backward(&params, &cache, &probe, &mut grads);
    let base = eval(&params, &x).1;

    let mut worst: f64 = 0.0;
    for b in 0..params.len() {
        for i in 0..params[b].len() {
            let orig = params[b][i];
            params[b][i] = orig + FD_STEP;
            let (lp, pp) = eval(&params, &x);
            params[b][i] = orig - FD_STEP;
            let (lm, pm) = eval(&params, &x);
            params[b][i] = orig;
            if pp == base && pm == base {
                worst = worst.max(relative_error(grads[b][i], (lp - lm) / (2.0 * FD_STEP)));
            }
        }
    }
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let (lp, pp) = eval(&params, &x);
        x[i] = orig - FD_STEP;
        let (lm, pm) = eval(&params, &x);
        x[i] = orig;
        if pp == base && pm == base {
            worst = worst.max(relative_error(dx[i], (lp - lm) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Runs one shared reducer over `instances` stacked inputs and compares its
/// parameter gradients with the sum of per-instance gradients. Returns the
/// largest relative error.
pub fn check_shared_weights(sizes: &[usize], instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mlp, params) = random_mlp(sizes, &mut rng);
    let (nin, nout) = (sizes[0], sizes[sizes.len() - 1]);
    let x: Vec<f64> = (0..instances * nin).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dy: Vec<f64> = (0..instances * nout).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let zeros = || -> Vec<Vec<f64>> { params.iter().map(|p| vec![0.0; p.len()]).collect() };

    let mut stacked = zeros();
    let (_, cache) = mlp.forward(&params, &x, instances);
    mlp.backward(&params, &cache, &dy, &mut stacked);

    let mut summed = zeros();
    for k in 0..instances {
        let mut g = zeros();
        let (_, c) = mlp.forward(&params, &x[k * nin..(k + 1) * nin], 1);
        mlp.backward(&params, &c, &dy[k * nout..(k + 1) * nout], &mut g);
        for (s, gi) in summed.iter_mut().flatten().zip(g.iter().flatten()) {
            *s += gi;
        }
    }
    stacked
        .iter()
        .flatten()
        .zip(summed.iter().flatten())
        .map(|(a, b)| relative_error(*a, *b))
        .fold(0.0, f64::max)
}
