//! Minibatch training with softmax cross-entropy and Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{layers, round_f32, Mode, NetworkState, TrainingSample, SENTINEL_DROPPED};
use crate::error::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch: usize,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, batch: 64, momentum: 0.9 }
    }
}

/// Flat storage of training samples. Inputs are kept as `f32` to keep large
/// datasets in memory; rows with target [`SENTINEL_DROPPED`] are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub m: usize,
    pub q: usize,
    inputs: Vec<f32>,
    targets: Vec<u32>,
}

impl SampleSet {
    pub fn new(m: usize, q: usize) -> Self {
        SampleSet { m, q, inputs: Vec::new(), targets: Vec::new() }
    }

    pub fn input_len(&self) -> usize {
        self.m + self.q + self.q * self.m
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Appends a row; dropped rows are ignored. Returns whether it was kept.
    pub fn push(&mut self, input: &[f64], target: u32) -> Result<bool> {
        if input.len() != self.input_len() {
            return Err(Error::LengthMismatch { expected: self.input_len(), found: input.len() });
        }
        if target == SENTINEL_DROPPED {
            return Ok(false);
        }
        if target as usize >= self.q {
            return Err(Error::InvalidParameter(format!("target {target} outside [0, {})", self.q)));
        }
        self.inputs.extend(input.iter().map(|&v| v as f32));
        self.targets.push(target);
        Ok(true)
    }

    pub fn push_sample(&mut self, sample: &TrainingSample) -> Result<bool> {
        self.push(&sample.input_vector(), sample.target)
    }

    pub fn input(&self, i: usize) -> &[f32] {
        let len = self.input_len();
        &self.inputs[i * len..(i + 1) * len]
    }

    pub fn target(&self, i: usize) -> u32 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn sample(&self, i: usize) -> TrainingSample {
        let v: Vec<f64> = self.input(i).iter().map(|&x| x as f64).collect();
        TrainingSample::from_input_vector(&v, self.m, self.q, self.targets[i]).expect("stored rows have the right length")
    }

    /// Rows `indices` gathered into an `f64` batch.
    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<u32>) {
        let mut x = Vec::with_capacity(indices.len() * self.input_len());
        let mut t = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend(self.input(i).iter().map(|&v| v as f64));
            t.push(self.targets[i]);
        }
        (x, t)
    }

    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        let mut out = SampleSet::new(self.m, self.q);
        for &i in indices {
            out.inputs.extend_from_slice(self.input(i));
            out.targets.push(self.targets[i]);
        }
        out
    }

    pub fn extend(&mut self, other: &SampleSet) -> Result<()> {
        if (other.m, other.q) != (self.m, self.q) {
            return Err(Error::DimMismatch(format!(
                "M={} Q={} vs M={} Q={}",
                other.m, other.q, self.m, self.q
            )));
        }
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
        Ok(())
    }

    /// Shuffles row indices with `seed` and holds out the last `val_frac`
    /// of them. Returns `(train, validation)`.
    pub fn split(&self, val_frac: f64, seed: u64) -> (SampleSet, SampleSet) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_val = ((self.len() as f64) * val_frac.clamp(0.0, 1.0)).round() as usize;
        let cut = self.len() - n_val.min(self.len());
        (self.subset(&idx[..cut]), self.subset(&idx[cut..]))
    }

    /// Histogram of targets over `[0, Q)`.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.q];
        for &t in &self.targets {
            h[t as usize] += 1;
        }
        h
    }
}

fn check_dims(state: &NetworkState, samples: &SampleSet) -> Result<()> {
    if (samples.m, samples.q) != (state.spec.m, state.spec.q) {
        return Err(Error::SpecMismatch(format!(
            "samples have M={} Q={}, network has M={} Q={}",
            samples.m, samples.q, state.spec.m, state.spec.q
        )));
    }
    Ok(())
}

/// One Adam update from accumulated gradients. Parameters and moments are
/// stored at `f32` precision.
pub fn adam_step(state: &mut NetworkState, grads: &[Vec<f64>], cfg: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in state.params.iter_mut().zip(grads).zip(&mut state.adam_m).zip(&mut state.adam_v) {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = round_f32(cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi);
            v[i] = round_f32(cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi);
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] = round_f32(p[i] - cfg.lr * mh / (vh.sqrt() + cfg.eps));
        }
    }
}

/// One pass over `samples` in shuffled minibatches. Returns the mean training
/// loss over batches (weighted by batch size).
pub fn train_epoch(state: &mut NetworkState, samples: &SampleSet, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dims(state, samples)?;
    if cfg.batch == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for chunk in order.chunks(cfg.batch) {
        let (x, t) = samples.gather(chunk);
        let (loss, grads, cache) = state.loss_and_gradients(&x, &t)?;
        if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss(state.step + 1));
        }
        if let Some((mean, var)) = cache.batch_stats() {
            let n = chunk.len() as f64;
            let unbias = if chunk.len() > 1 { n / (n - 1.0) } else { 1.0 };
            let mo = cfg.momentum;
            for (r, b) in state.running_mean.iter_mut().zip(mean) {
                *r = round_f32(mo * *r + (1.0 - mo) * b);
            }
            for (r, b) in state.running_var.iter_mut().zip(var) {
                *r = round_f32(mo * *r + (1.0 - mo) * b * unbias);
            }
        }
        adam_step(state, &grads, cfg);
        total += loss * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

const EVAL_BATCH: usize = 4096;

/// Inference-mode logits for every sample, computed in fixed-size batches.
pub fn predict_logits(state: &NetworkState, samples: &SampleSet) -> Result<Vec<f64>> {
    check_dims(state, samples)?;
    let idx: Vec<usize> = (0..samples.len()).collect();
    let mut out = Vec::with_capacity(samples.len() * samples.q);
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, _) = samples.gather(chunk);
        out.extend(state.forward_with(&state.params, &x, chunk.len(), Mode::Infer)?.0);
    }
    Ok(out)
}

/// Mean inference-mode cross-entropy.
pub fn evaluate_loss(state: &NetworkState, samples: &SampleSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let logits = predict_logits(state, samples)?;
    Ok(layers::softmax_cross_entropy(&logits, samples.targets(), samples.q).0)
}

/// Fraction of samples whose arg-max logit (ties to the lower index) equals
/// the target.
pub fn accuracy(state: &NetworkState, samples: &SampleSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let logits = predict_logits(state, samples)?;
    let keys: Vec<u32> = (0..samples.q as u32).collect();
    let hits = logits
        .chunks_exact(samples.q)
        .zip(samples.targets())
        .filter(|(row, &t)| super::argmax_masked(row, &keys) == Some(t as usize))
        .count();
    Ok(hits as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_classifier, build_regression};
    use rand::Rng;

    fn random_set(m: usize, q: usize, n: usize, seed: u64) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = SampleSet::new(m, q);
        for _ in 0..n {
            let x: Vec<f64> = (0..set.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            set.push(&x, rng.gen_range(0..q as u32)).unwrap();
        }
        set
    }

    #[test]
    fn initial_loss_is_log_q() {
        let set = random_set(4, 7, 200, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for spec in [build_classifier(4, 7).unwrap(), build_regression(4, 7, 3).unwrap()] {
            let state = NetworkState::init(&spec, &mut rng).unwrap();
            let loss = evaluate_loss(&state, &set).unwrap();
            assert!((loss - 7f64.ln()).abs() < 0.05, "{loss}");
        }
    }

    #[test]
    fn fits_separable_samples() {
        // Target is the candidate whose first diff is smallest.
        let (m, q) = (2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut set = SampleSet::new(m, q);
        for i in 0..10 {
            let target = i % q;
            let mut x = vec![0.0; set.input_len()];
            for c in 0..q {
                x[m + c] = 0.3;
                let d = if c == target { 0.1 } else { 2.0 + rng.gen_range(0.0..1.0) };
                x[m + q + c * m] = d;
                x[m + q + c * m + 1] = rng.gen_range(-0.2..0.2);
            }
            set.push(&x, target as u32).unwrap();
        }
        let spec = build_classifier(m, q).unwrap();
        let mut state = NetworkState::init(&spec, &mut rng).unwrap();
        let cfg = TrainConfig { batch: 5, ..Default::default() };
        for _ in 0..100 {
            train_epoch(&mut state, &set, &cfg, &mut rng).unwrap();
        }
        assert_eq!(accuracy(&state, &set).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let set = random_set(3, 4, 50, 5);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut state = NetworkState::init(&build_classifier(3, 4).unwrap(), &mut rng).unwrap();
            for _ in 0..3 {
                train_epoch(&mut state, &set, &TrainConfig { batch: 8, ..Default::default() }, &mut rng).unwrap();
            }
            state
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_and_dropped() {
        let mut set = SampleSet::new(1, 2);
        assert!(!set.push(&[0.0; 5], SENTINEL_DROPPED).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut state = NetworkState::init(&build_regression(1, 2, 1).unwrap(), &mut rng).unwrap();
        assert!(matches!(
            train_epoch(&mut state, &set, &TrainConfig::default(), &mut rng),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn masked_target_reports_non_finite() {
        let mut set = SampleSet::new(1, 2);
        set.push(&[0.0, 0.0, 1e5, 0.0, 0.0], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut state = NetworkState::init(&build_regression(1, 2, 1).unwrap(), &mut rng).unwrap();
        state.params[0] = vec![1.0, 1.0];
        let r = train_epoch(&mut state, &set, &TrainConfig::default(), &mut rng);
        assert!(matches!(r, Err(Error::NonFiniteLoss(1))), "{r:?}");
    }

    #[test]
    fn split_is_seeded() {
        let set = random_set(1, 2, 100, 3);
        let (a, b) = set.split(0.1, 42);
        assert_eq!((a.len(), b.len()), (90, 10));
        assert_eq!(set.split(0.1, 42), (a, b));
    }
}
