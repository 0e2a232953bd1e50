//! Bottom-up trainable superpixels.
//!
//! Clusters are seeded on the SLIC grid. Every iteration each pixel is
//! classified over its `Q` spatially nearest cluster centers, then centers move
//! to the mean of their pixels. After the last iteration the SLIC connectivity
//! rule is applied.
//!
//! The classifier is either a trained network or [`Classifier::AnalyticSlic`],
//! which scores candidates with the SLIC distance (including its `2S` window).
//! With `Q` at least the cluster count the oracle reproduces SLIC exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgio::MultiChannelImage;
use crate::nn::{argmax_masked, NetworkState, MISSING_DISTANCE};
use crate::slic::{
    enforce_connectivity, init_clusters, perturb_seeds, update_table, ClusterCenter, ClusterGrid, DistanceWeights,
    PixelTable, SlicParams, SuperpixelMap, UNASSIGNED,
};

/// Padding entry in a candidate list with fewer than `Q` real clusters.
pub const MISSING: u32 = u32::MAX;

pub const DEFAULT_Q: usize = 7;
pub const DEFAULT_BATCH: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainpixParams {
    pub q: usize,
    /// Grid step, compactness, iterations and connectivity settings. The
    /// channel weights are only used by the analytic oracle.
    pub slic: SlicParams,
    /// Pixels per network forward pass.
    pub batch: usize,
}

impl TrainpixParams {
    pub fn new(step: usize, compactness: f64) -> Self {
        TrainpixParams { q: DEFAULT_Q, slic: SlicParams::new(step, compactness), batch: DEFAULT_BATCH }
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.slic.validate()?;
        if self.q == 0 {
            return Err(Error::InvalidParameter("Q must be at least 1".into()));
        }
        if self.slic.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParameter("batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Classifier {
    Network(NetworkState),
    AnalyticSlic,
}

/// The `Q` clusters spatially nearest to `(x, y)`, ascending by distance with
/// ties to the lower index, padded with [`MISSING`].
pub fn nearest_q_clusters(x: f64, y: f64, clusters: &[ClusterCenter], q: usize) -> Vec<u32> {
    let mut all: Vec<(f64, u32)> = clusters
        .iter()
        .enumerate()
        .map(|(k, c)| ((c.x - x).powi(2) + (c.y - y).powi(2), k as u32))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<u32> = all.into_iter().take(q).map(|(_, k)| k).collect();
    out.resize(q, MISSING);
    out
}

/// Grid-accelerated version of [`nearest_q_clusters`] with identical output.
pub(crate) struct NearestSearch<'a> {
    clusters: &'a [ClusterCenter],
    grid: ClusterGrid,
    step: f64,
    max_radius: f64,
}

impl<'a> NearestSearch<'a> {
    pub fn new(clusters: &'a [ClusterCenter], width: usize, height: usize, step: usize) -> Self {
        // centers lie inside the image, so this radius covers all of them
        let max_radius = (width + height) as f64 + step as f64;
        NearestSearch {
            clusters,
            grid: ClusterGrid::new(clusters, width, height, step),
            step: step.max(1) as f64,
            max_radius,
        }
    }

    pub fn query(&self, x: f64, y: f64, q: usize, scratch: &mut Vec<(f64, u32)>, out: &mut Vec<u32>) {
        let mut r = self.step;
        loop {
            scratch.clear();
            self.grid.for_each_near(x, y, r, |k| {
                let c = &self.clusters[k as usize];
                scratch.push(((c.x - x).powi(2) + (c.y - y).powi(2), k));
            });
            scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // Unvisited clusters lie outside the square of half-width r.
            let done = scratch.len() >= q && scratch[q - 1].0 <= r * r;
            if done || r > self.max_radius {
                break;
            }
            r += self.step;
        }
        out.clear();
        out.extend(scratch.iter().take(q).map(|&(_, k)| k));
        out.resize(q, MISSING);
    }
}

/// Appends the network input for pixel `(x, y)`:
/// `[features (M)] ++ [D_q (Q)] ++ [f_k - f_i per candidate (Q x M)]` with
/// `D_q = sigma * dist_q / S`. Missing candidates get [`MISSING_DISTANCE`]
/// and zero differences.
#[allow(clippy::too_many_arguments)]
pub fn build_input_vector_into(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    step: usize,
    compactness: f64,
    out: &mut Vec<f64>,
) {
    out.extend_from_slice(pixel);
    let scale = compactness / step as f64;
    for &k in candidates {
        out.push(match clusters.get(k as usize) {
            Some(c) => scale * ((c.x - x).powi(2) + (c.y - y).powi(2)).sqrt(),
            None => MISSING_DISTANCE,
        });
    }
    for &k in candidates {
        match clusters.get(k as usize) {
            Some(c) => out.extend(c.features.iter().zip(pixel).map(|(f, p)| f - p)),
            None => out.extend(std::iter::repeat_n(0.0, pixel.len())),
        }
    }
}

pub fn build_input_vector(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    params: &TrainpixParams,
) -> Vec<f64> {
    let mut v = Vec::with_capacity(pixel.len() * (1 + candidates.len()) + candidates.len());
    build_input_vector_into(pixel, x, y, candidates, clusters, params.slic.step, params.slic.compactness, &mut v);
    v
}

/// Oracle logits: negated SLIC distance for candidates inside the `2S`
/// Chebyshev window, `-inf` otherwise.
#[allow(clippy::too_many_arguments)]
pub(crate) fn oracle_logits(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    weights: &DistanceWeights,
    step: usize,
    out: &mut Vec<f64>,
) {
    let radius = 2.0 * step as f64;
    out.clear();
    for &k in candidates {
        out.push(match clusters.get(k as usize) {
            Some(c) if (c.x - x).abs() <= radius && (c.y - y).abs() <= radius => -weights.total(pixel, x, y, c),
            _ => f64::NEG_INFINITY,
        });
    }
}

fn check_classifier(classifier: &Classifier, channels: usize, params: &TrainpixParams) -> Result<()> {
    match classifier {
        Classifier::Network(state) => {
            if state.spec.m != channels || state.spec.q != params.q {
                return Err(Error::SpecMismatch(format!(
                    "network expects M={} Q={}, got M={} Q={}",
                    state.spec.m, state.spec.q, channels, params.q
                )));
            }
            Ok(())
        }
        Classifier::AnalyticSlic => params.slic.check_channels(channels),
    }
}

fn assign_table_classifier(
    table: &PixelTable,
    clusters: &[ClusterCenter],
    params: &TrainpixParams,
    classifier: &Classifier,
    labels: &mut [u32],
) -> Result<()> {
    let search = NearestSearch::new(clusters, table.width, table.height, params.slic.step);
    let weights = DistanceWeights::from_params(&params.slic);
    let (q, width) = (params.q, table.width);
    let n = labels.len();
    let batch = params.batch;
    let results: Vec<Result<()>> = labels
        .par_chunks_mut(batch)
        .enumerate()
        .map(|(b, chunk)| {
            let start = b * batch;
            let rows = chunk.len();
            let mut scratch = Vec::new();
            let mut cands = Vec::with_capacity(q);
            let mut all_cands = Vec::with_capacity(rows * q);
            for i in start..start + rows {
                let (x, y) = ((i % width) as f64, (i / width) as f64);
                search.query(x, y, q, &mut scratch, &mut cands);
                all_cands.extend_from_slice(&cands);
            }
            let logits = match classifier {
                Classifier::AnalyticSlic => {
                    let mut all = Vec::with_capacity(rows * q);
                    let mut row = Vec::with_capacity(q);
                    for (r, c) in all_cands.chunks_exact(q).enumerate() {
                        let i = start + r;
                        let (x, y) = ((i % width) as f64, (i / width) as f64);
                        oracle_logits(table.pixel(i), x, y, c, clusters, &weights, params.slic.step, &mut row);
                        all.extend_from_slice(&row);
                    }
                    all
                }
                Classifier::Network(state) => {
                    let mut inputs = Vec::with_capacity(rows * state.spec.input_len());
                    for (r, c) in all_cands.chunks_exact(q).enumerate() {
                        let i = start + r;
                        let (x, y) = ((i % width) as f64, (i / width) as f64);
                        build_input_vector_into(
                            table.pixel(i),
                            x,
                            y,
                            c,
                            clusters,
                            params.slic.step,
                            params.slic.compactness,
                            &mut inputs,
                        );
                    }
                    state.forward(&inputs, rows)?
                }
            };
            for ((label, row), c) in chunk.iter_mut().zip(logits.chunks_exact(q)).zip(all_cands.chunks_exact(q)) {
                if let Some(best) = argmax_masked(row, c) {
                    *label = c[best];
                }
            }
            Ok(())
        })
        .collect();
    debug_assert_eq!(results.len(), n.div_ceil(batch));
    results.into_iter().collect()
}

/// One classification pass over all pixels. `previous` supplies labels for
/// pixels where no candidate is admissible (`None` means [`UNASSIGNED`]).
pub fn assign_by_classifier(
    img: &MultiChannelImage,
    clusters: &[ClusterCenter],
    params: &TrainpixParams,
    classifier: &Classifier,
    previous: Option<&[u32]>,
) -> Result<Vec<u32>> {
    params.validate()?;
    check_classifier(classifier, img.channel_count(), params)?;
    if clusters.is_empty() {
        return Err(Error::InvalidParameter("no clusters".into()));
    }
    let mut labels = match previous {
        Some(p) if p.len() == img.pixel_count() => p.to_vec(),
        Some(p) => return Err(Error::LengthMismatch { expected: img.pixel_count(), found: p.len() }),
        None => vec![UNASSIGNED; img.pixel_count()],
    };
    assign_table_classifier(&PixelTable::new(img), clusters, params, classifier, &mut labels)?;
    Ok(labels)
}

/// State of a finished clustering run, before connectivity enforcement.
#[derive(Debug, Clone)]
pub struct TrainableRun {
    /// Centers the last assignment was made against.
    pub assignment_clusters: Vec<ClusterCenter>,
    /// Centers after the final update.
    pub clusters: Vec<ClusterCenter>,
    pub labels: Vec<u32>,
}

pub fn trainable_cluster(img: &MultiChannelImage, params: &TrainpixParams, classifier: &Classifier) -> Result<TrainableRun> {
    params.validate()?;
    check_classifier(classifier, img.channel_count(), params)?;
    let mut clusters = init_clusters(img, params.slic.step)?;
    if params.slic.perturb_seeds {
        perturb_seeds(img, &mut clusters);
    }
    let table = PixelTable::new(img);
    let mut labels = vec![UNASSIGNED; img.pixel_count()];
    let mut assignment_clusters = clusters.clone();
    for _ in 0..params.slic.iterations {
        assignment_clusters = clusters.clone();
        assign_table_classifier(&table, &clusters, params, classifier, &mut labels)?;
        clusters = update_table(&table, &labels, &clusters);
    }
    Ok(TrainableRun { assignment_clusters, clusters, labels })
}

/// Full pipeline: grid init, `iterations` rounds of classification and center
/// update, then connectivity enforcement.
pub fn trainable_segment(img: &MultiChannelImage, params: &TrainpixParams, classifier: &Classifier) -> Result<SuperpixelMap> {
    let run = trainable_cluster(img, params, classifier)?;
    enforce_connectivity(&run.labels, img.width(), img.height(), params.slic.step, params.slic.min_component_frac)
}
