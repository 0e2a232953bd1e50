//! Small neural networks for per-pixel cluster assignment.
//!
//! Two architectures share one input layout per pixel,
//! `[pixel features (M)] ++ [normalized spatial distance D_q (Q)] ++ [feature
//! differences (Q x M), candidate-major]`, and emit `Q` logits:
//!
//! - **classification**: batch normalization over the whole input, a
//!   dimensionality reducer for the pixel features (DRP), one reducer applied
//!   to every candidate's differences with shared weights (DRC), and a fully
//!   connected classifier (FC) on `[DRP out, D, DRC out x Q]`.
//! - **regression distance**: a distance module applied to
//!   `[diff_1^2 .. diff_M^2, D_q^2]` of every candidate with shared weights;
//!   logits are the negated distances. With depth 1 the module is a bias-free
//!   linear layer, i.e. a learned weighting of the SLIC distance terms.
//!
//! Candidates whose distance is at least [`MISSING_DISTANCE`] are padding and
//! get a logit of `-inf`.

pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod train;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use layers::{BatchNormCache, BatchNormDesc, DenseDesc, Mlp, MlpCache};

pub use gradcheck::gradient_check;
pub use io::{load_network, load_network_expecting, save_network};
pub use train::{train_epoch, SampleSet, TrainConfig};

/// Spatial distance assigned to padding candidates.
pub const MISSING_DISTANCE: f64 = 1e4;

/// Target value of samples dropped during label generation.
pub const SENTINEL_DROPPED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Classification,
    RegressionDistance,
}

/// Architecture description. The DRC reducer is shared by all `Q`
/// candidates; in regression networks the distance module is shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    /// Pixel feature count.
    pub m: usize,
    /// Candidate cluster count.
    pub q: usize,
    pub drp: Vec<usize>,
    pub drc: Vec<usize>,
    /// Hidden sizes of the classifier head; its output size is `q`.
    pub fc: Vec<usize>,
    /// Hidden sizes of the distance module; its output size is 1.
    pub distance: Vec<usize>,
}

impl NetworkSpec {
    pub fn input_len(&self) -> usize {
        self.m + self.q + self.q * self.m
    }

    /// Regression depth (number of dense layers in the distance module).
    pub fn depth(&self) -> usize {
        self.distance.len() + 1
    }

    /// FC input width: `drp_out + q + q * drc_out`.
    pub fn fc_input(&self) -> usize {
        self.drp.last().copied().unwrap_or(self.m) + self.q + self.q * self.drc.last().copied().unwrap_or(self.m)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.q == 0 {
            return Err(Error::BadDims(format!("M={} Q={}", self.m, self.q)));
        }
        let sizes = self.drp.iter().chain(&self.drc).chain(&self.fc).chain(&self.distance);
        if sizes.clone().any(|&s| s == 0) {
            return Err(Error::BadDims("zero-width layer".into()));
        }
        Ok(())
    }
}

/// Classifier with DRP `M -> 100 -> 15`, shared DRC `M -> 100 -> 15` and FC
/// `(15 + Q + 15 Q) -> 120 -> 105 -> 15 -> Q`.
pub fn build_classifier(m: usize, q: usize) -> Result<NetworkSpec> {
    let spec = NetworkSpec {
        kind: NetworkKind::Classification,
        m,
        q,
        drp: vec![100, 15],
        drc: vec![100, 15],
        fc: vec![120, 105, 15],
        distance: Vec::new(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Distance-module network: depth 1 is a bias-free linear map `M + 1 -> 1`,
/// depth 3 is `M + 1 -> 32 -> 16 -> 1`.
pub fn build_regression(m: usize, q: usize, depth: usize) -> Result<NetworkSpec> {
    let distance = match depth {
        1 => Vec::new(),
        3 => vec![32, 16],
        d => return Err(Error::BadDepth(d)),
    };
    let spec = NetworkSpec {
        kind: NetworkKind::RegressionDistance,
        m,
        q,
        drp: Vec::new(),
        drc: Vec::new(),
        fc: Vec::new(),
        distance,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parameter declaration: name and element count.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub len: usize,
}

/// Resolved layer structure with parameter indices.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub params: Vec<ParamDecl>,
    pub norm: Option<BatchNormDesc>,
    pub drp: Mlp,
    pub drc: Mlp,
    pub fc: Mlp,
    pub distance: Mlp,
}

fn push_mlp(params: &mut Vec<ParamDecl>, prefix: &str, input: usize, hidden: &[usize], output: Option<usize>, bias_last: bool) -> Mlp {
    let mut layers = Vec::new();
    let mut prev = input;
    let sizes: Vec<(usize, bool)> = hidden
        .iter()
        .map(|&h| (h, true))
        .chain(output.map(|o| (o, false)))
        .collect();
    for (i, &(size, relu)) in sizes.iter().enumerate() {
        let weight = params.len();
        params.push(ParamDecl { name: format!("{prefix}.{i}.weight"), len: size * prev });
        let last = i + 1 == sizes.len();
        let bias = if !last || bias_last || relu {
            params.push(ParamDecl { name: format!("{prefix}.{i}.bias"), len: size });
            Some(weight + 1)
        } else {
            None
        };
        layers.push(DenseDesc { weight, bias, inputs: prev, outputs: size, relu });
        prev = size;
    }
    Mlp { layers }
}

impl Layout {
    pub fn new(spec: &NetworkSpec) -> Layout {
        let mut params = Vec::new();
        match spec.kind {
            NetworkKind::Classification => {
                let dim = spec.input_len();
                params.push(ParamDecl { name: "norm.gamma".into(), len: dim });
                params.push(ParamDecl { name: "norm.beta".into(), len: dim });
                let norm = Some(BatchNormDesc { gamma: 0, beta: 1, dim });
                let drp = push_mlp(&mut params, "drp", spec.m, &spec.drp, None, true);
                let drc = push_mlp(&mut params, "drc", spec.m, &spec.drc, None, true);
                let fc = push_mlp(&mut params, "fc", spec.fc_input(), &spec.fc, Some(spec.q), true);
                Layout { params, norm, drp, drc, fc, distance: Mlp::default() }
            }
            NetworkKind::RegressionDistance => {
                let bias_last = !spec.distance.is_empty();
                let distance = push_mlp(&mut params, "distance", spec.m + 1, &spec.distance, Some(1), bias_last);
                Layout { params, norm: None, drp: Mlp::default(), drc: Mlp::default(), fc: Mlp::default(), distance }
            }
        }
    }

    /// Index of the final (logit or distance) layer's weight buffer.
    fn final_layer(&self) -> &DenseDesc {
        self.fc.layers.last().or(self.distance.layers.last()).expect("network has an output layer")
    }
}

/// Learned weights plus optimizer and normalization state.
///
/// Every stored value is representable in `f32`, so saving to the `SPNN`
/// format loses nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub spec: NetworkSpec,
    pub params: Vec<Vec<f64>>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub adam_m: Vec<Vec<f64>>,
    pub adam_v: Vec<Vec<f64>>,
    pub step: u64,
}

#[inline]
pub(crate) fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// Intermediate values of a training-mode forward pass.
pub struct ForwardCache {
    rows: usize,
    missing: Vec<bool>,
    norm: Option<BatchNormCache>,
    drp: MlpCache,
    drc: MlpCache,
    fc: MlpCache,
    distance: MlpCache,
    /// Raw regression inputs, for building distance-module gradients.
    diffs: Vec<f64>,
}

impl ForwardCache {
    pub fn batch_stats(&self) -> Option<(&[f64], &[f64])> {
        self.norm.as_ref().map(|c| (c.batch_mean.as_slice(), c.batch_var.as_slice()))
    }

    pub(crate) fn relu_pattern(&self, layout: &Layout, hasher: &mut impl std::hash::Hasher) {
        self.drp.relu_pattern(&layout.drp, hasher);
        self.drc.relu_pattern(&layout.drc, hasher);
        self.fc.relu_pattern(&layout.fc, hasher);
        self.distance.relu_pattern(&layout.distance, hasher);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

impl NetworkState {
    /// He-uniform weights for ReLU layers, zero biases, identity batchnorm,
    /// and a zero output layer so initial logits are uniform.
    pub fn init(spec: &NetworkSpec, rng: &mut ChaCha8Rng) -> Result<NetworkState> {
        spec.validate()?;
        let layout = Layout::new(spec);
        let mut params: Vec<Vec<f64>> = layout.params.iter().map(|p| vec![0.0; p.len]).collect();
        if let Some(norm) = &layout.norm {
            params[norm.gamma].iter_mut().for_each(|g| *g = 1.0);
        }
        let output_weight = layout.final_layer().weight;
        for mlp in [&layout.drp, &layout.drc, &layout.fc, &layout.distance] {
            for layer in &mlp.layers {
                if layer.weight == output_weight {
                    continue;
                }
                let bound = (6.0 / layer.inputs as f64).sqrt();
                for w in params[layer.weight].iter_mut() {
                    *w = round_f32(rng.gen_range(-bound..bound));
                }
            }
        }
        let zeros: Vec<Vec<f64>> = layout.params.iter().map(|p| vec![0.0; p.len]).collect();
        let dim = layout.norm.as_ref().map_or(0, |n| n.dim);
        Ok(NetworkState {
            spec: spec.clone(),
            params,
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            adam_m: zeros.clone(),
            adam_v: zeros,
            step: 0,
        })
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(&self.spec)
    }

    pub fn param_decls(&self) -> Vec<ParamDecl> {
        self.layout().params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    /// Weights of a depth-1 distance module: one per squared feature
    /// difference followed by the weight of `D_q^2`.
    pub fn distance_weights(&self) -> Option<&[f64]> {
        (self.spec.kind == NetworkKind::RegressionDistance && self.spec.distance.is_empty())
            .then(|| self.params[0].as_slice())
    }

    pub fn set_distance_weights(&mut self, weights: &[f64]) -> Result<()> {
        if self.distance_weights().is_none() {
            return Err(Error::SpecMismatch("not a depth-1 regression network".into()));
        }
        if weights.len() != self.spec.m + 1 {
            return Err(Error::LengthMismatch { expected: self.spec.m + 1, found: weights.len() });
        }
        self.params[0] = weights.to_vec();
        Ok(())
    }

    /// Inference-mode logits (`rows x Q`); rows are independent.
    pub fn forward(&self, inputs: &[f64], rows: usize) -> Result<Vec<f64>> {
        Ok(self.forward_with(&self.params, inputs, rows, Mode::Infer)?.0)
    }

    pub(crate) fn forward_with(
        &self,
        params: &[Vec<f64>],
        inputs: &[f64],
        rows: usize,
        mode: Mode,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        let spec = &self.spec;
        let len = spec.input_len();
        if inputs.len() != rows * len {
            return Err(Error::ShapeMismatch(format!(
                "{} input values for {rows} rows of {len}",
                inputs.len()
            )));
        }
        let layout = self.layout();
        let (m, q) = (spec.m, spec.q);
        let missing: Vec<bool> = inputs
            .chunks_exact(len)
            .flat_map(|r| r[m..m + q].iter().map(|&d| d >= MISSING_DISTANCE))
            .collect();
        let mut cache = ForwardCache {
            rows,
            missing,
            norm: None,
            drp: MlpCache::default(),
            drc: MlpCache::default(),
            fc: MlpCache::default(),
            distance: MlpCache::default(),
            diffs: Vec::new(),
        };

        let mut logits = match spec.kind {
            NetworkKind::Classification => {
                let norm = layout.norm.as_ref().expect("classifier has batchnorm");
                let xh = match mode {
                    Mode::Train => {
                        let (y, c) = norm.forward_train(params, inputs, rows);
                        cache.norm = Some(c);
                        y
                    }
                    Mode::Infer => norm.forward_infer(params, &self.running_mean, &self.running_var, inputs),
                };
                let mut pix = Vec::with_capacity(rows * m);
                let mut diff = Vec::with_capacity(rows * q * m);
                for r in xh.chunks_exact(len) {
                    pix.extend_from_slice(&r[..m]);
                    diff.extend_from_slice(&r[m + q..]);
                }
                let (p, pc) = layout.drp.forward(params, &pix, rows);
                let (c, cc) = layout.drc.forward(params, &diff, rows * q);
                let (po, co) = (layout.drp.output_dim(), layout.drc.output_dim());
                let mut fc_in = Vec::with_capacity(rows * spec.fc_input());
                for ((r, pr), cr) in xh.chunks_exact(len).zip(p.chunks_exact(po)).zip(c.chunks_exact(q * co)) {
                    fc_in.extend_from_slice(pr);
                    fc_in.extend_from_slice(&r[m..m + q]);
                    fc_in.extend_from_slice(cr);
                }
                let (out, fcc) = layout.fc.forward(params, &fc_in, rows);
                cache.drp = pc;
                cache.drc = cc;
                cache.fc = fcc;
                out
            }
            NetworkKind::RegressionDistance => {
                let z = regression_inputs(inputs, m, q);
                let (d, dc) = layout.distance.forward(params, &z, rows * q);
                cache.distance = dc;
                cache.diffs = z;
                d.into_iter().map(|v| -v).collect()
            }
        };
        for (l, &miss) in logits.iter_mut().zip(&cache.missing) {
            if miss {
                *l = f64::NEG_INFINITY;
            }
        }
        Ok((logits, cache))
    }

    /// Gradients of a loss with respect to every parameter buffer, given the
    /// loss gradient with respect to the logits.
    pub(crate) fn backward_with(&self, params: &[Vec<f64>], cache: &ForwardCache, dlogits: &[f64]) -> Vec<Vec<f64>> {
        let layout = self.layout();
        let spec = &self.spec;
        let (m, q, rows) = (spec.m, spec.q, cache.rows);
        let mut grads: Vec<Vec<f64>> = layout.params.iter().map(|p| vec![0.0; p.len]).collect();
        let mut dl = dlogits.to_vec();
        for (g, &miss) in dl.iter_mut().zip(&cache.missing) {
            if miss {
                *g = 0.0;
            }
        }
        match spec.kind {
            NetworkKind::Classification => {
                let dfc = layout.fc.backward(params, &cache.fc, &dl, &mut grads);
                let (po, co) = (layout.drp.output_dim(), layout.drc.output_dim());
                let width = po + q + q * co;
                let mut dp = Vec::with_capacity(rows * po);
                let mut dc = Vec::with_capacity(rows * q * co);
                let mut dd = Vec::with_capacity(rows * q);
                for r in dfc.chunks_exact(width) {
                    dp.extend_from_slice(&r[..po]);
                    dd.extend_from_slice(&r[po..po + q]);
                    dc.extend_from_slice(&r[po + q..]);
                }
                let dpix = layout.drp.backward(params, &cache.drp, &dp, &mut grads);
                let ddiff = layout.drc.backward(params, &cache.drc, &dc, &mut grads);
                let len = spec.input_len();
                let mut dxh = Vec::with_capacity(rows * len);
                for ((a, b), c) in dpix.chunks_exact(m).zip(dd.chunks_exact(q)).zip(ddiff.chunks_exact(q * m)) {
                    dxh.extend_from_slice(a);
                    dxh.extend_from_slice(b);
                    dxh.extend_from_slice(c);
                }
                let norm = layout.norm.as_ref().expect("classifier has batchnorm");
                let norm_cache = cache.norm.as_ref().expect("training-mode cache");
                norm.backward(params, norm_cache, &dxh, &mut grads);
            }
            NetworkKind::RegressionDistance => {
                let dd: Vec<f64> = dl.iter().map(|g| -g).collect();
                layout.distance.backward(params, &cache.distance, &dd, &mut grads);
            }
        }
        grads
    }

    /// Mean cross-entropy and parameter gradients for one batch in training
    /// mode.
    pub fn loss_and_gradients(&self, inputs: &[f64], targets: &[u32]) -> Result<(f64, Vec<Vec<f64>>, ForwardCache)> {
        let rows = targets.len();
        let (logits, cache) = self.forward_with(&self.params, inputs, rows, Mode::Train)?;
        let (loss, dlogits) = layers::softmax_cross_entropy(&logits, targets, self.spec.q);
        let grads = self.backward_with(&self.params, &cache, &dlogits);
        Ok((loss, grads, cache))
    }
}

/// Per-candidate distance-module inputs `[diff^2 (M), D_q^2]`, rows ordered
/// `(sample, candidate)`.
fn regression_inputs(inputs: &[f64], m: usize, q: usize) -> Vec<f64> {
    let len = m + q + q * m;
    let mut z = Vec::with_capacity(inputs.len() / len * q * (m + 1));
    for r in inputs.chunks_exact(len) {
        for c in 0..q {
            let diffs = &r[m + q + c * m..m + q + (c + 1) * m];
            z.extend(diffs.iter().map(|d| d * d));
            let d = r[m + c];
            z.push(d * d);
        }
    }
    z
}

/// Index of the best finite logit in `row`; ties go to the lower entry of
/// `tie_keys`. `None` when every logit is `-inf`.
pub fn argmax_masked(row: &[f64], tie_keys: &[u32]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in row.iter().enumerate() {
        if v == f64::NEG_INFINITY || v.is_nan() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if v > row[b] || (v == row[b] && tie_keys[i] < tie_keys[b]) => Some(i),
            keep => keep,
        };
    }
    best
}

/// One training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub pixel_features: Vec<f64>,
    pub spatial_distances: Vec<f64>,
    /// Candidate-major: `(f_k - f_i)` for candidate 0, then 1, ...
    pub feature_diffs: Vec<f64>,
    pub target: u32,
}

impl TrainingSample {
    /// Flat input vector in network layout.
    pub fn input_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.pixel_features.len() + self.spatial_distances.len() + self.feature_diffs.len());
        v.extend_from_slice(&self.pixel_features);
        v.extend_from_slice(&self.spatial_distances);
        v.extend_from_slice(&self.feature_diffs);
        v
    }

    pub fn from_input_vector(input: &[f64], m: usize, q: usize, target: u32) -> Result<Self> {
        if input.len() != m + q + q * m {
            return Err(Error::LengthMismatch { expected: m + q + q * m, found: input.len() });
        }
        Ok(TrainingSample {
            pixel_features: input[..m].to_vec(),
            spatial_distances: input[m..m + q].to_vec(),
            feature_diffs: input[m + q..].to_vec(),
            target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn classifier_dimensions() {
        let spec = build_classifier(81, 7).unwrap();
        assert_eq!(spec.fc_input(), 127);
        let state = NetworkState::init(&spec, &mut rng()).unwrap();
        let decls = state.param_decls();
        let drc: usize = decls.iter().filter(|d| d.name.starts_with("drc.")).map(|d| d.len).sum();
        assert_eq!(drc, 81 * 100 + 100 + 100 * 15 + 15);
        let spec13 = build_classifier(81, 13).unwrap();
        let state13 = NetworkState::init(&spec13, &mut rng()).unwrap();
        let drc13: usize = state13.param_decls().iter().filter(|d| d.name.starts_with("drc.")).map(|d| d.len).sum();
        assert_eq!(drc13, drc);
        let fc_out = decls.iter().find(|d| d.name == "fc.3.weight").unwrap();
        assert_eq!(fc_out.len, 15 * 7);
        assert!(matches!(build_classifier(0, 7), Err(Error::BadDims(_))));
    }

    #[test]
    fn regression_dimensions() {
        let spec = build_regression(3, 7, 1).unwrap();
        let state = NetworkState::init(&spec, &mut rng()).unwrap();
        assert_eq!(state.parameter_count(), 4);
        let deep = NetworkState::init(&build_regression(3, 7, 3).unwrap(), &mut rng()).unwrap();
        assert_eq!(deep.parameter_count(), 4 * 32 + 32 + 32 * 16 + 16 + 16 + 1);
        assert!(matches!(build_regression(3, 7, 2), Err(Error::BadDepth(2))));
    }

    #[test]
    fn shared_modules_give_identical_branch_outputs() {
        let spec = build_regression(2, 3, 3).unwrap();
        let mut state = NetworkState::init(&spec, &mut rng()).unwrap();
        state.params.last_mut().unwrap()[0] = 0.25;
        for w in state.params[spec.distance.len() * 2].iter_mut() {
            *w = 0.5;
        }
        // pixel (2) | D (3) | diffs (3 x 2): candidates 0 and 2 identical
        let input = [1.0, 2.0, 1.5, 0.7, 1.5, 0.3, -0.4, 2.0, 2.0, 0.3, -0.4];
        let out = state.forward(&input, 1).unwrap();
        assert_eq!(out[0], out[2]);
        assert_ne!(out[0], out[1]);
    }

    #[test]
    fn zero_output_layer_gives_uniform_logits() {
        for spec in [build_classifier(4, 5).unwrap(), build_regression(4, 5, 3).unwrap()] {
            let state = NetworkState::init(&spec, &mut rng()).unwrap();
            let out = state.forward(&vec![0.0; spec.input_len()], 1).unwrap();
            assert!(out.iter().all(|&v| v == out[0]), "{out:?}");
        }
    }

    #[test]
    fn missing_candidates_are_masked() {
        let spec = build_regression(1, 3, 1).unwrap();
        let state = NetworkState::init(&spec, &mut rng()).unwrap();
        let input = [0.0, 1.0, MISSING_DISTANCE, 2.0, 0.5, 0.0, 0.0];
        let out = state.forward(&input, 1).unwrap();
        assert_eq!(out[1], f64::NEG_INFINITY);
        assert!(out[0].is_finite() && out[2].is_finite());
    }

    #[test]
    fn argmax_ties_use_keys() {
        assert_eq!(argmax_masked(&[1.0, 3.0, 3.0], &[0, 5, 2]), Some(2));
        assert_eq!(argmax_masked(&[0.0, 0.0, 0.0], &[4, 1, 9]), Some(1));
        let inf = f64::NEG_INFINITY;
        assert_eq!(argmax_masked(&[inf, inf], &[0, 1]), None);
        assert_eq!(argmax_masked(&[inf, -5.0], &[0, 1]), Some(1));
    }

    #[test]
    fn batch_independent_inference() {
        let spec = build_classifier(3, 4).unwrap();
        let state = NetworkState::init(&spec, &mut rng()).unwrap();
        let mut r = rng();
        let len = spec.input_len();
        let batch: Vec<f64> = (0..64 * len).map(|_| r.gen_range(-2.0..2.0)).collect();
        let all = state.forward(&batch, 64).unwrap();
        for row in [0, 17, 63] {
            let single = state.forward(&batch[row * len..(row + 1) * len], 1).unwrap();
            assert_eq!(single, all[row * 4..(row + 1) * 4]);
        }
    }

    #[test]
    fn sample_layout() {
        let s = TrainingSample {
            pixel_features: vec![1.0, 2.0],
            spatial_distances: vec![3.0],
            feature_diffs: vec![4.0, 5.0],
            target: 0,
        };
        let v = s.input_vector();
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(TrainingSample::from_input_vector(&v, 2, 1, 0).unwrap(), s);
    }
}
