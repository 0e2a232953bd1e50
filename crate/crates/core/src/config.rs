//! Plain-text `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected. Values set later (for example from the command line) override
//! earlier ones.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::labels::{LabelGenConfig, LabelMethod};
use crate::nn::{build_classifier, build_regression, NetworkSpec, TrainConfig};
use crate::slic::SlicParams;
use crate::trainpix::TrainpixParams;

/// Which image channels the scattering transform is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterChannels {
    /// Lightness only.
    L,
    /// `L`, `a` and `b` separately.
    Lab,
    /// Raw 8-bit intensity of a gray image (RGB inputs are averaged).
    Gray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    Slic,
    Trainable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Classification,
    Regression,
}

/// Every tunable parameter with its default.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub slic_step: usize,
    pub slic_compactness: f64,
    pub slic_iterations: usize,
    pub slic_alpha: [f64; 3],
    /// One value broadcast to every feature channel, or one per channel.
    pub slic_beta: Vec<f64>,
    pub slic_min_component_frac: f64,
    pub slic_perturb_seeds: bool,
    pub scattering_j: usize,
    pub scattering_l: usize,
    pub scattering_mask: String,
    pub scattering_channels: ScatterChannels,
    pub net_kind: NetKind,
    pub net_depth: usize,
    pub net_q: usize,
    pub train_lr: f64,
    pub train_batch: usize,
    pub train_epochs: usize,
    pub train_seed: u64,
    pub train_val_frac: f64,
    pub labels_method: LabelMethod,
    pub labels_x: usize,
    pub labels_warmup_iterations: usize,
    pub labels_only_corrected: bool,
    pub labels_use_edges: bool,
    pub eval_tol: usize,
    pub segment_mode: SegmentMode,
    pub segment_batch: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            slic_step: 16,
            slic_compactness: 10.0,
            slic_iterations: 5,
            slic_alpha: [1.0; 3],
            slic_beta: vec![1.0],
            slic_min_component_frac: 0.25,
            slic_perturb_seeds: false,
            scattering_j: 2,
            scattering_l: 8,
            scattering_mask: String::new(),
            scattering_channels: ScatterChannels::L,
            net_kind: NetKind::Classification,
            net_depth: 3,
            net_q: 7,
            train_lr: 1e-3,
            train_batch: 64,
            train_epochs: 10,
            train_seed: 0,
            train_val_frac: 0.1,
            labels_method: LabelMethod::GtCorrected,
            labels_x: 3,
            labels_warmup_iterations: 2,
            labels_only_corrected: false,
            labels_use_edges: false,
            eval_tol: crate::metrics::DEFAULT_TOLERANCE,
            segment_mode: SegmentMode::Slic,
            segment_batch: crate::trainpix::DEFAULT_BATCH,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Every accepted key, in the order used by [`Config::resolved`].
pub const KEYS: &[&str] = &[
    "slic.step",
    "slic.compactness",
    "slic.iterations",
    "slic.alpha",
    "slic.beta",
    "slic.min_component_frac",
    "slic.perturb_seeds",
    "scattering.J",
    "scattering.L",
    "scattering.mask",
    "scattering.channels",
    "net.kind",
    "net.depth",
    "net.Q",
    "train.lr",
    "train.batch",
    "train.epochs",
    "train.seed",
    "train.val_frac",
    "labels.method",
    "labels.X",
    "labels.warmup_iterations",
    "labels.only_corrected",
    "labels.use_edges",
    "eval.tol",
    "segment.mode",
    "segment.batch",
];

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "slic.step" => self.slic_step = parse(key, v)?,
            "slic.compactness" => self.slic_compactness = parse(key, v)?,
            "slic.iterations" => self.slic_iterations = parse(key, v)?,
            "slic.alpha" => {
                let a = parse_list(key, v)?;
                self.slic_alpha = match a[..] {
                    [x] => [x; 3],
                    [x, y, z] => [x, y, z],
                    _ => return Err(Error::Config(format!("{key}: expected 1 or 3 values"))),
                }
            }
            "slic.beta" => self.slic_beta = parse_list(key, v)?,
            "slic.min_component_frac" => self.slic_min_component_frac = parse(key, v)?,
            "slic.perturb_seeds" => self.slic_perturb_seeds = parse_bool(key, v)?,
            "scattering.J" => self.scattering_j = parse(key, v)?,
            "scattering.L" => self.scattering_l = parse(key, v)?,
            "scattering.mask" => self.scattering_mask = v.to_string(),
            "scattering.channels" => {
                self.scattering_channels = match v {
                    "L" => ScatterChannels::L,
                    "Lab" => ScatterChannels::Lab,
                    "gray" => ScatterChannels::Gray,
                    _ => return Err(Error::Config(format!("{key}: expected L, Lab or gray, got {v:?}"))),
                }
            }
            "net.kind" => {
                self.net_kind = match v {
                    "classification" => NetKind::Classification,
                    "regression" | "regression_distance" => NetKind::Regression,
                    _ => return Err(Error::Config(format!("{key}: expected classification or regression, got {v:?}"))),
                }
            }
            "net.depth" => self.net_depth = parse(key, v)?,
            "net.Q" => self.net_q = parse(key, v)?,
            "train.lr" => self.train_lr = parse(key, v)?,
            "train.batch" => self.train_batch = parse(key, v)?,
            "train.epochs" => self.train_epochs = parse(key, v)?,
            "train.seed" => self.train_seed = parse(key, v)?,
            "train.val_frac" => self.train_val_frac = parse(key, v)?,
            "labels.method" => self.labels_method = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "labels.X" => self.labels_x = parse(key, v)?,
            "labels.warmup_iterations" => self.labels_warmup_iterations = parse(key, v)?,
            "labels.only_corrected" => self.labels_only_corrected = parse_bool(key, v)?,
            "labels.use_edges" => self.labels_use_edges = parse_bool(key, v)?,
            "eval.tol" => self.eval_tol = parse(key, v)?,
            "segment.mode" => {
                self.segment_mode = match v {
                    "slic" => SegmentMode::Slic,
                    "trainable" => SegmentMode::Trainable,
                    _ => return Err(Error::Config(format!("{key}: expected slic or trainable, got {v:?}"))),
                }
            }
            "segment.batch" => self.segment_batch = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(k.trim(), v)
    }

    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.apply(line).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Config> {
        let mut cfg = Config::default();
        cfg.merge_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "slic.step" => self.slic_step.to_string(),
            "slic.compactness" => self.slic_compactness.to_string(),
            "slic.iterations" => self.slic_iterations.to_string(),
            "slic.alpha" => join(&self.slic_alpha),
            "slic.beta" => join(&self.slic_beta),
            "slic.min_component_frac" => self.slic_min_component_frac.to_string(),
            "slic.perturb_seeds" => self.slic_perturb_seeds.to_string(),
            "scattering.J" => self.scattering_j.to_string(),
            "scattering.L" => self.scattering_l.to_string(),
            "scattering.mask" => self.scattering_mask.clone(),
            "scattering.channels" => match self.scattering_channels {
                ScatterChannels::L => "L",
                ScatterChannels::Lab => "Lab",
                ScatterChannels::Gray => "gray",
            }
            .into(),
            "net.kind" => match self.net_kind {
                NetKind::Classification => "classification",
                NetKind::Regression => "regression",
            }
            .into(),
            "net.depth" => self.net_depth.to_string(),
            "net.Q" => self.net_q.to_string(),
            "train.lr" => self.train_lr.to_string(),
            "train.batch" => self.train_batch.to_string(),
            "train.epochs" => self.train_epochs.to_string(),
            "train.seed" => self.train_seed.to_string(),
            "train.val_frac" => self.train_val_frac.to_string(),
            "labels.method" => match self.labels_method {
                LabelMethod::SlicReplication => "slic_replication",
                LabelMethod::GtCorrected => "gt_corrected",
                LabelMethod::WeaklySupervised => "weakly_supervised",
            }
            .into(),
            "labels.X" => self.labels_x.to_string(),
            "labels.warmup_iterations" => self.labels_warmup_iterations.to_string(),
            "labels.only_corrected" => self.labels_only_corrected.to_string(),
            "labels.use_edges" => self.labels_use_edges.to_string(),
            "eval.tol" => self.eval_tol.to_string(),
            "segment.mode" => match self.segment_mode {
                SegmentMode::Slic => "slic",
                SegmentMode::Trainable => "trainable",
            }
            .into(),
            "segment.batch" => self.segment_batch.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Every key with its effective value, one `key = value` per line. The
    /// output parses back to the same config.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    /// SLIC parameters for an image with `feature_channels` channels beyond
    /// Lab. A single beta value is broadcast.
    pub fn slic_params(&self, feature_channels: usize) -> Result<SlicParams> {
        let beta = match self.slic_beta.len() {
            _ if feature_channels == 0 => Vec::new(),
            1 => vec![self.slic_beta[0]; feature_channels],
            n if n == feature_channels => self.slic_beta.clone(),
            n => {
                return Err(Error::Config(format!(
                    "slic.beta has {n} values for {feature_channels} feature channels"
                )))
            }
        };
        let params = SlicParams {
            step: self.slic_step,
            compactness: self.slic_compactness,
            iterations: self.slic_iterations,
            alpha: self.slic_alpha,
            beta,
            min_component_frac: self.slic_min_component_frac,
            perturb_seeds: self.slic_perturb_seeds,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn trainpix_params(&self, feature_channels: usize) -> Result<TrainpixParams> {
        let params = TrainpixParams { q: self.net_q, slic: self.slic_params(feature_channels)?, batch: self.segment_batch };
        params.validate()?;
        Ok(params)
    }

    pub fn label_config(&self, feature_channels: usize, seed: u64) -> Result<LabelGenConfig> {
        let mut slic = self.slic_params(feature_channels)?;
        slic.iterations = self.labels_warmup_iterations;
        let cfg = LabelGenConfig {
            method: self.labels_method,
            x: self.labels_x,
            q: self.net_q,
            slic,
            warmup_iterations: self.labels_warmup_iterations,
            only_corrected: self.labels_only_corrected,
            use_edges: self.labels_use_edges,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn network_spec(&self, m: usize) -> Result<NetworkSpec> {
        match self.net_kind {
            NetKind::Classification => build_classifier(m, self.net_q),
            NetKind::Regression => build_regression(m, self.net_q, self.net_depth),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { lr: self.train_lr, batch: self.train_batch, ..TrainConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut cfg = Config::default();
        cfg.merge_str("# comment\nslic.step = 8\n\nslic.beta = 2\nnet.kind = regression\n").unwrap();
        cfg.apply("slic.step=12").unwrap();
        assert_eq!(cfg.slic_step, 12);
        assert_eq!(cfg.net_kind, NetKind::Regression);
        assert_eq!(cfg.slic_params(3).unwrap().beta, vec![2.0; 3]);
        assert!(cfg.slic_params(0).unwrap().beta.is_empty());
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        let mut cfg = Config::default();
        assert!(matches!(cfg.apply("slic.stepp=3"), Err(Error::Config(_))));
        assert!(matches!(cfg.apply("slic.step=abc"), Err(Error::Config(_))));
        assert!(matches!(cfg.merge_str("slic.step 3"), Err(Error::Config(_))));
        cfg.apply("slic.beta=1,2").unwrap();
        assert!(cfg.slic_params(3).is_err());
    }

    #[test]
    fn resolved_roundtrips() {
        let mut cfg = Config::default();
        cfg.apply("slic.alpha=1,0.5,0.25").unwrap();
        cfg.apply("scattering.mask=order2,3-5").unwrap();
        cfg.apply("labels.method=weakly_supervised").unwrap();
        let mut back = Config::default();
        back.merge_str(&cfg.resolved()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.resolved().lines().count(), KEYS.len());
    }
}
