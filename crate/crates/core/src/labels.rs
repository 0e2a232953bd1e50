//! Training labels for the pixel classifier, derived from ground-truth
//! segmentations.
//!
//! Candidate clusters come from a short SLIC run. For every pixel the `Q`
//! nearest clusters are the candidates and the target is one of:
//!
//! - **SLIC replication**: the candidate with the smallest SLIC distance.
//! - **GT-corrected**: the same, restricted to candidates whose majority
//!   ground-truth segment equals the pixel's segment.
//! - **weakly supervised**: among in-segment candidates, the one with the
//!   fewest annotated edges on the straight line to its center, then the
//!   spatially nearest.
//!
//! Pixels whose candidates cover fewer than `X` distinct majority segments are
//! dropped (hard-example mining).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgio::{check_magic, check_version, save_image, MultiChannelImage, RawImage, FORMAT_VERSION};
use crate::metrics::boundary_pixels;
use crate::nn::{argmax_masked, SampleSet, SENTINEL_DROPPED};
use crate::slic::{slic_cluster, ClusterCenter, DistanceWeights, SlicParams, SuperpixelMap};
use crate::trainpix::{build_input_vector_into, oracle_logits, NearestSearch, MISSING};

/// Ground-truth segment ids per pixel.
pub type GroundTruthSegmentation = SuperpixelMap;

/// Majority entry of a cluster without any pixels.
pub const NO_SEGMENT: u32 = u32::MAX;

/// Per-pixel count of annotations marking the pixel as a boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub strength: Vec<u32>,
    pub annotations: u32,
}

impl EdgeMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.strength[y * self.width + x]
    }

    /// 8-bit gray rendering; strengths above 255 saturate.
    pub fn to_image(&self) -> RawImage {
        let data = self.strength.iter().map(|&s| s.min(255) as u8).collect();
        RawImage::new(self.width, self.height, 1, data).expect("edge map has valid dimensions")
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        save_image(path, &self.to_image())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMethod {
    SlicReplication,
    GtCorrected,
    WeaklySupervised,
}

impl std::str::FromStr for LabelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slic_replication" => Ok(LabelMethod::SlicReplication),
            "gt_corrected" => Ok(LabelMethod::GtCorrected),
            "weakly_supervised" => Ok(LabelMethod::WeaklySupervised),
            _ => Err(Error::InvalidParameter(format!("unknown label method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelGenConfig {
    pub method: LabelMethod,
    /// Minimum number of distinct majority segments among the candidates.
    pub x: usize,
    pub q: usize,
    pub slic: SlicParams,
    /// SLIC iterations before candidates are harvested.
    pub warmup_iterations: usize,
    /// GT-corrected only: keep just the pixels whose label differs from SLIC
    /// replication.
    pub only_corrected: bool,
    /// Weakly supervised only: rank candidates by crossed annotation edges.
    pub use_edges: bool,
    pub seed: u64,
}

impl LabelGenConfig {
    pub fn new(method: LabelMethod, slic: SlicParams) -> Self {
        LabelGenConfig {
            method,
            x: 1,
            q: crate::trainpix::DEFAULT_Q,
            slic,
            warmup_iterations: 2,
            only_corrected: false,
            use_edges: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.slic.validate()?;
        if self.q == 0 || self.x == 0 || self.x > self.q {
            return Err(Error::InvalidParameter(format!("need 1 <= X <= Q, got X={} Q={}", self.x, self.q)));
        }
        if self.warmup_iterations == 0 {
            return Err(Error::InvalidParameter("warmup_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_dims(a: &SuperpixelMap, b: &SuperpixelMap) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// For every cluster id `0..=max label`, the GT segment covering most of its
/// pixels (ties to the lower segment id), or [`NO_SEGMENT`] for ids without
/// pixels.
pub fn cluster_majority_segment(labels: &SuperpixelMap, gt: &GroundTruthSegmentation) -> Result<Vec<u32>> {
    check_dims(labels, gt)?;
    let mut pairs: Vec<(u32, u32)> = labels
        .labels()
        .iter()
        .zip(gt.labels())
        .filter(|(&l, _)| l != u32::MAX)
        .map(|(&l, &g)| (l, g))
        .collect();
    let clusters = pairs.iter().map(|p| p.0 as usize + 1).max().unwrap_or(0);
    pairs.sort_unstable();
    let mut best = vec![(0usize, NO_SEGMENT); clusters];
    for run in pairs.chunk_by(|a, b| a == b) {
        let (l, g) = run[0];
        let entry = &mut best[l as usize];
        // runs arrive in ascending segment order, so strict > keeps the lower id on ties
        if run.len() > entry.0 {
            *entry = (run.len(), g);
        }
    }
    Ok(best.into_iter().map(|(_, g)| g).collect())
}

fn majority_of(majority: &[u32], k: u32) -> u32 {
    majority.get(k as usize).copied().unwrap_or(NO_SEGMENT)
}

/// Index into `candidates` of the smallest SLIC distance within the `2S`
/// window (ties to the lower cluster id), or [`SENTINEL_DROPPED`].
pub fn slic_replication_label(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    params: &SlicParams,
) -> u32 {
    restricted_slic_label(pixel, x, y, candidates, clusters, &DistanceWeights::from_params(params), params.step, |_| true)
}

#[allow(clippy::too_many_arguments)]
fn restricted_slic_label(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    weights: &DistanceWeights,
    step: usize,
    allowed: impl Fn(u32) -> bool,
) -> u32 {
    let mut logits = Vec::with_capacity(candidates.len());
    oracle_logits(pixel, x, y, candidates, clusters, weights, step, &mut logits);
    for (l, &k) in logits.iter_mut().zip(candidates) {
        if k == MISSING || !allowed(k) {
            *l = f64::NEG_INFINITY;
        }
    }
    argmax_masked(&logits, candidates).map_or(SENTINEL_DROPPED, |i| i as u32)
}

/// SLIC label restricted to candidates whose majority segment is `segment`.
#[allow(clippy::too_many_arguments)]
pub fn gt_corrected_label(
    pixel: &[f64],
    x: f64,
    y: f64,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    params: &SlicParams,
    segment: u32,
    majority: &[u32],
) -> u32 {
    let weights = DistanceWeights::from_params(params);
    restricted_slic_label(pixel, x, y, candidates, clusters, &weights, params.step, |k| majority_of(majority, k) == segment)
}

/// Number of distinct majority segments among real candidates.
pub fn distinct_segments(candidate_majorities: &[u32]) -> usize {
    let mut seen: Vec<u32> = candidate_majorities.iter().copied().filter(|&s| s != NO_SEGMENT).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Keep iff the candidates cover at least `x` distinct segments.
pub fn hard_example_filter(candidate_majorities: &[u32], x: usize) -> bool {
    distinct_segments(candidate_majorities) >= x
}

/// Marks, per annotation, pixels with a 4-neighbor in another segment and
/// counts the marks.
pub fn combine_edge_maps(annotations: &[GroundTruthSegmentation]) -> Result<EdgeMap> {
    let first = annotations.first().ok_or(Error::EmptyList)?;
    let mut strength = vec![0u32; first.width() * first.height()];
    for a in annotations {
        check_dims(first, a)?;
        for (s, b) in strength.iter_mut().zip(boundary_pixels(a)) {
            *s += b as u32;
        }
    }
    Ok(EdgeMap { width: first.width(), height: first.height(), strength, annotations: annotations.len() as u32 })
}

/// Pixels strictly between `a` and `b` on the Bresenham line. Endpoints are
/// put in canonical order first so the path does not depend on direction.
pub fn bresenham_interior(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (start, end) = if a <= b { (a, b) } else { (b, a) };
    let (mut x, mut y) = start;
    let dx = (end.0 - x).abs();
    let dy = -(end.1 - y).abs();
    let sx = if x < end.0 { 1 } else { -1 };
    let sy = if y < end.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::new();
    while (x, y) != end {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        if (x, y) != end {
            out.push((x, y));
        }
    }
    out
}

/// Sum of edge strengths on the line from `p` to the rounded center `c`,
/// endpoints excluded.
pub fn edge_crossing_distance(p: (i64, i64), c: (f64, f64), edges: &EdgeMap) -> Result<u64> {
    let c = (c.0.round() as i64, c.1.round() as i64);
    let (w, h) = (edges.width, edges.height);
    for (x, y) in [p, c] {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            return Err(Error::OutOfBounds { x, y, width: w, height: h });
        }
    }
    Ok(bresenham_interior(p, c)
        .into_iter()
        .map(|(x, y)| edges.get(x as usize, y as usize) as u64)
        .sum())
}

/// Among in-segment candidates, the one with the fewest crossed edges (when
/// `edges` is given), then the smallest spatial distance, then the lowest
/// cluster id. [`SENTINEL_DROPPED`] if the hard-example filter rejects the
/// pixel or no candidate is in-segment.
#[allow(clippy::too_many_arguments)]
pub fn weakly_supervised_label(
    x: usize,
    y: usize,
    candidates: &[u32],
    clusters: &[ClusterCenter],
    segment: u32,
    majority: &[u32],
    edges: Option<&EdgeMap>,
    min_segments: usize,
) -> Result<u32> {
    let majorities: Vec<u32> = candidates.iter().map(|&k| majority_of(majority, k)).collect();
    if !hard_example_filter(&majorities, min_segments) {
        return Ok(SENTINEL_DROPPED);
    }
    let mut best: Option<(u64, f64, u32, usize)> = None;
    for (i, &k) in candidates.iter().enumerate() {
        if k == MISSING || majorities[i] != segment {
            continue;
        }
        let c = &clusters[k as usize];
        let crossings = match edges {
            Some(e) => edge_crossing_distance((x as i64, y as i64), (c.x, c.y), e)?,
            None => 0,
        };
        let d = (c.x - x as f64).powi(2) + (c.y - y as f64).powi(2);
        let key = (crossings, d, k, i);
        let better = match &best {
            None => true,
            Some(b) => (key.0, key.1, key.2) < (b.0, b.1, b.2),
        };
        if better {
            best = Some(key);
        }
    }
    Ok(best.map_or(SENTINEL_DROPPED, |b| b.3 as u32))
}

/// One training image.
#[derive(Debug, Clone)]
pub struct LabelSource {
    pub image: MultiChannelImage,
    /// One or more annotations. The first provides segment ids; all of them
    /// contribute to the edge map.
    pub annotations: Vec<GroundTruthSegmentation>,
}

/// Pixel a sample was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOrigin {
    pub image: u32,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelStats {
    /// Pixels with at least one candidate cluster.
    pub candidate_pixels: usize,
    pub kept: usize,
    /// Rejected by the hard-example filter.
    pub dropped_filter: usize,
    /// No admissible target.
    pub dropped_no_label: usize,
    /// Label equal to SLIC replication while `only_corrected` is set.
    pub dropped_unchanged: usize,
    /// `histogram[n]` = pixels whose candidates span `n` distinct segments.
    pub segment_histogram: Vec<usize>,
}

impl LabelStats {
    pub fn dropped(&self) -> usize {
        self.dropped_filter + self.dropped_no_label + self.dropped_unchanged
    }

    fn merge(&mut self, other: &LabelStats) {
        self.candidate_pixels += other.candidate_pixels;
        self.kept += other.kept;
        self.dropped_filter += other.dropped_filter;
        self.dropped_no_label += other.dropped_no_label;
        self.dropped_unchanged += other.dropped_unchanged;
        if self.segment_histogram.len() < other.segment_histogram.len() {
            self.segment_histogram.resize(other.segment_histogram.len(), 0);
        }
        for (a, b) in self.segment_histogram.iter_mut().zip(&other.segment_histogram) {
            *a += b;
        }
    }
}

impl std::fmt::Display for LabelStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "candidate_pixels={} kept={} dropped={} (filter={} no_label={} unchanged={}) segments_hist={:?}",
            self.candidate_pixels,
            self.kept,
            self.dropped(),
            self.dropped_filter,
            self.dropped_no_label,
            self.dropped_unchanged,
            self.segment_histogram
        )
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: SampleSet,
    /// Aligned with `samples`.
    pub origins: Vec<SampleOrigin>,
    pub stats: LabelStats,
}

struct RowOutput {
    inputs: Vec<f64>,
    targets: Vec<u32>,
    positions: Vec<(u32, u32)>,
    stats: LabelStats,
}

fn label_image(index: usize, src: &LabelSource, cfg: &LabelGenConfig) -> Result<RowOutput> {
    let img = &src.image;
    let gt = src.annotations.first().ok_or(Error::EmptyList)?;
    if (gt.width(), gt.height()) != (img.width(), img.height()) {
        return Err(Error::DimMismatch(format!(
            "image {} is {}x{}, ground truth {}x{}",
            index,
            img.width(),
            img.height(),
            gt.width(),
            gt.height()
        )));
    }
    let edges = if cfg.use_edges && cfg.method == LabelMethod::WeaklySupervised {
        Some(combine_edge_maps(&src.annotations)?)
    } else {
        None
    };
    let (clusters, raw) = slic_cluster(img, &cfg.slic, cfg.warmup_iterations)?;
    let raw = SuperpixelMap::new(img.width(), img.height(), raw)?;
    let majority = cluster_majority_segment(&raw, gt)?;
    let search = NearestSearch::new(&clusters, img.width(), img.height(), cfg.slic.step);
    let weights = DistanceWeights::from_params(&cfg.slic);
    let (w, q, step) = (img.width(), cfg.q, cfg.slic.step);

    let rows: Vec<Result<RowOutput>> = (0..img.height())
        .into_par_iter()
        .map(|y| {
            let mut out = RowOutput {
                inputs: Vec::new(),
                targets: Vec::new(),
                positions: Vec::new(),
                stats: LabelStats { segment_histogram: vec![0; q + 1], ..Default::default() },
            };
            let (mut scratch, mut cands) = (Vec::new(), Vec::new());
            let mut pixel = vec![0.0; img.channel_count()];
            for x in 0..w {
                let i = y * w + x;
                img.pixel_into(i, &mut pixel);
                let (fx, fy) = (x as f64, y as f64);
                search.query(fx, fy, q, &mut scratch, &mut cands);
                if cands[0] == MISSING {
                    continue;
                }
                out.stats.candidate_pixels += 1;
                let majorities: Vec<u32> = cands.iter().map(|&k| majority_of(&majority, k)).collect();
                let distinct = distinct_segments(&majorities);
                out.stats.segment_histogram[distinct] += 1;
                if distinct < cfg.x {
                    out.stats.dropped_filter += 1;
                    continue;
                }
                let segment = gt.labels()[i];
                let target = match cfg.method {
                    LabelMethod::SlicReplication => {
                        restricted_slic_label(&pixel, fx, fy, &cands, &clusters, &weights, step, |_| true)
                    }
                    LabelMethod::GtCorrected => {
                        let t = restricted_slic_label(&pixel, fx, fy, &cands, &clusters, &weights, step, |k| {
                            majority_of(&majority, k) == segment
                        });
                        if cfg.only_corrected && t != SENTINEL_DROPPED {
                            let plain = restricted_slic_label(&pixel, fx, fy, &cands, &clusters, &weights, step, |_| true);
                            if plain == t {
                                out.stats.dropped_unchanged += 1;
                                continue;
                            }
                        }
                        t
                    }
                    LabelMethod::WeaklySupervised => {
                        weakly_supervised_label(x, y, &cands, &clusters, segment, &majority, edges.as_ref(), cfg.x)?
                    }
                };
                if target == SENTINEL_DROPPED {
                    out.stats.dropped_no_label += 1;
                    continue;
                }
                build_input_vector_into(&pixel, fx, fy, &cands, &clusters, step, cfg.slic.compactness, &mut out.inputs);
                out.targets.push(target);
                out.positions.push((x as u32, y as u32));
                out.stats.kept += 1;
            }
            Ok(out)
        })
        .collect();

    let mut merged = RowOutput {
        inputs: Vec::new(),
        targets: Vec::new(),
        positions: Vec::new(),
        stats: LabelStats { segment_histogram: vec![0; q + 1], ..Default::default() },
    };
    for row in rows {
        let row = row?;
        merged.inputs.extend(row.inputs);
        merged.targets.extend(row.targets);
        merged.positions.extend(row.positions);
        merged.stats.merge(&row.stats);
    }
    Ok(merged)
}

/// Builds the training set for all images and shuffles it with `cfg.seed`.
pub fn generate_dataset(sources: &[LabelSource], cfg: &LabelGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let m = sources.first().map_or(0, |s| s.image.channel_count());
    if let Some(s) = sources.iter().find(|s| s.image.channel_count() != m) {
        return Err(Error::DimMismatch(format!("channel counts {} and {}", m, s.image.channel_count())));
    }
    let mut all = SampleSet::new(m, cfg.q);
    let mut origins = Vec::new();
    let mut stats = LabelStats { segment_histogram: vec![0; cfg.q + 1], ..Default::default() };
    let len = all.input_len();
    for (index, src) in sources.iter().enumerate() {
        let out = label_image(index, src, cfg)?;
        for ((input, &t), &(x, y)) in out.inputs.chunks_exact(len).zip(&out.targets).zip(&out.positions) {
            all.push(input, t)?;
            origins.push(SampleOrigin { image: index as u32, x, y });
        }
        stats.merge(&out.stats);
    }
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let samples = all.subset(&order);
    let origins = order.iter().map(|&i| origins[i]).collect();
    Ok(Dataset { samples, origins, stats })
}

const SPDS_MAGIC: &[u8; 4] = b"SPDS";

/// `SPDS` layout: magic, u32 version, u32 `N, M, Q`, then per sample the
/// `M + Q + QM` f32 inputs followed by the u32 target (all little-endian).
pub fn encode_dataset(set: &SampleSet) -> Vec<u8> {
    let len = set.input_len();
    let mut out = Vec::with_capacity(20 + set.len() * (4 * len + 4));
    out.extend_from_slice(SPDS_MAGIC);
    for v in [FORMAT_VERSION, set.len() as u32, set.m as u32, set.q as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..set.len() {
        for v in set.input(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&set.target(i).to_le_bytes());
    }
    out
}

pub fn decode_dataset(bytes: &[u8]) -> Result<SampleSet> {
    check_magic(bytes, SPDS_MAGIC)?;
    check_version(bytes)?;
    if bytes.len() < 20 {
        return Err(Error::TruncatedData { expected: 20, found: bytes.len() });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize;
    let (n, m, q) = (word(2), word(3), word(4));
    let mut set = SampleSet::new(m, q);
    let row = 4 * set.input_len() + 4;
    let expected = n.checked_mul(row).and_then(|b| b.checked_add(20)).unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(Error::TruncatedData { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::MalformedHeader(format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut input = vec![0.0; set.input_len()];
    for r in bytes[20..].chunks_exact(row) {
        for (v, c) in input.iter_mut().zip(r.chunks_exact(4)) {
            *v = f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64;
        }
        let t = u32::from_le_bytes(r[row - 4..].try_into().expect("4 bytes"));
        if t == SENTINEL_DROPPED {
            return Err(Error::MalformedHeader("dropped sample stored in dataset".into()));
        }
        set.push(&input, t)?;
    }
    Ok(set)
}

pub fn write_dataset(path: impl AsRef<Path>, set: &SampleSet) -> Result<()> {
    std::fs::write(path, encode_dataset(set))?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<SampleSet> {
    decode_dataset(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slic::{assign_step, init_clusters};
    use crate::testutil::{image_from_fn, random_image};
    use crate::trainpix::nearest_q_clusters;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> SuperpixelMap {
        let labels = (0..w * h).map(|i| f(i % w, i / w)).collect();
        SuperpixelMap::new(w, h, labels).unwrap()
    }

    fn center(x: f64, y: f64, f: f64) -> ClusterCenter {
        ClusterCenter { x, y, features: vec![f, 0.0, 0.0], pixel_count: 1 }
    }

    #[test]
    fn majority_vote() {
        // cluster 0: all in segment 3; cluster 1: 6/4 split 1,2; cluster 2: 5/5 split 5,2
        let sp = map(10, 3, |_, y| y as u32);
        let gt = map(10, 3, |x, y| match y {
            0 => 3,
            1 => {
                if x < 6 {
                    1
                } else {
                    2
                }
            }
            _ => {
                if x < 5 {
                    5
                } else {
                    2
                }
            }
        });
        assert_eq!(cluster_majority_segment(&sp, &gt).unwrap(), vec![3, 1, 2]);
        let bad = map(9, 3, |_, _| 0);
        assert!(matches!(cluster_majority_segment(&sp, &bad), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn replication_cases() {
        let params = SlicParams::new(16, 10.0);
        let clusters = vec![center(0.0, 0.0, 50.0), center(10.0, 0.0, 30.0), center(5.0, 5.0, 10.0)];
        let t = slic_replication_label(&[10.0, 0.0, 0.0], 5.0, 5.0, &[0, 1, 2], &clusters, &params);
        assert_eq!(t, 2);
        let t = slic_replication_label(&[10.0, 0.0, 0.0], 5.0, 5.0, &[1], &clusters, &params);
        assert_eq!(t, 0);
    }

    #[test]
    fn replication_agrees_with_slic() {
        for seed in 0..3 {
            let img = random_image(32, 32, 3, seed);
            let params = SlicParams::new(8, 10.0);
            let clusters = init_clusters(&img, 8).unwrap();
            let full = assign_step(&img, &clusters, &params, None).unwrap();
            for i in 0..32 * 32 {
                let (x, y) = ((i % 32) as f64, (i / 32) as f64);
                let cands = nearest_q_clusters(x, y, &clusters, 7);
                let Some(pos) = cands.iter().position(|&k| k == full[i]) else { continue };
                let t = slic_replication_label(&img.pixel(i % 32, i / 32), x, y, &cands, &clusters, &params);
                assert_eq!(t as usize, pos);
            }
        }
    }

    #[test]
    fn correction_cases() {
        let params = SlicParams::new(16, 10.0);
        // winner is cluster 0 (segment 1); pixel is in segment 2
        let clusters = vec![center(0.0, 0.0, 10.0), center(3.0, 0.0, 40.0), center(8.0, 0.0, 20.0)];
        let majority = vec![1, 2, 2];
        let pixel = [10.0, 0.0, 0.0];
        let plain = slic_replication_label(&pixel, 1.0, 0.0, &[0, 1, 2], &clusters, &params);
        assert_eq!(plain, 0);
        let corrected = gt_corrected_label(&pixel, 1.0, 0.0, &[0, 1, 2], &clusters, &params, 2, &majority);
        // brute force over in-segment candidates
        let d = |k: usize| crate::slic::total_distance_sq(&pixel, 1.0, 0.0, &clusters[k], &params).unwrap();
        let expect = if d(1) <= d(2) { 1 } else { 2 };
        assert_eq!(corrected, expect);
        assert_eq!(gt_corrected_label(&pixel, 1.0, 0.0, &[0, 1, 2], &clusters, &params, 1, &majority), 0);
        assert_eq!(
            gt_corrected_label(&pixel, 1.0, 0.0, &[0, 1, 2], &clusters, &params, 7, &majority),
            SENTINEL_DROPPED
        );
    }

    #[test]
    fn filter_cases() {
        assert!(!hard_example_filter(&[4; 7], 3));
        assert!(hard_example_filter(&[1, 2, 4, 1, 1, 2, 4], 3));
        assert!(hard_example_filter(&[9; 7], 1));
        assert!(!hard_example_filter(&[1, NO_SEGMENT, NO_SEGMENT], 2));
    }

    #[test]
    fn edge_maps() {
        let a = map(6, 4, |x, _| (x >= 3) as u32);
        let b = map(6, 4, |_, y| (y >= 2) as u32 + 5);
        let five = combine_edge_maps(&vec![a.clone(); 5]).unwrap();
        let boundary = boundary_pixels(&a);
        for (s, b) in five.strength.iter().zip(&boundary) {
            assert_eq!(*s, if *b { 5 } else { 0 });
        }
        let one = combine_edge_maps(std::slice::from_ref(&a)).unwrap();
        assert!(one.strength.iter().all(|&s| s <= 1));
        let ab = combine_edge_maps(&[a.clone(), b.clone()]).unwrap();
        let ba = combine_edge_maps(&[b, a]).unwrap();
        assert_eq!(ab, ba);
        assert!(ab.strength.iter().all(|&s| s <= 2));
        assert!(matches!(combine_edge_maps(&[]), Err(Error::EmptyList)));
    }

    fn edges(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> EdgeMap {
        let strength = (0..w * h).map(|i| f(i % w, i / w)).collect();
        EdgeMap { width: w, height: h, strength, annotations: 5 }
    }

    #[test]
    fn crossing_distance() {
        let e = edges(10, 10, |x, _| if x == 4 { 3 } else { 0 });
        assert_eq!(edge_crossing_distance((2, 2), (2.0, 2.0), &e).unwrap(), 0);
        assert_eq!(edge_crossing_distance((1, 5), (8.0, 5.0), &e).unwrap(), 3);
        let along = edges(10, 10, |x, y| (x == 4 && (2..=7).contains(&y)) as u32);
        assert_eq!(edge_crossing_distance((4, 2), (4.0, 7.0), &along).unwrap(), 4);
        assert!(matches!(edge_crossing_distance((4, 2), (40.0, 7.0), &along), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn bresenham_is_symmetric() {
        for (a, b) in [((0, 0), (7, 3)), ((5, 1), (0, 9)), ((2, 2), (2, 8)), ((9, 9), (1, 4))] {
            let mut ab = bresenham_interior(a, b);
            let mut ba = bresenham_interior(b, a);
            ab.sort();
            ba.sort();
            assert_eq!(ab, ba);
            let steps = (a.0 - b.0).abs().max((a.1 - b.1).abs());
            assert_eq!(ab.len() as i64, steps - 1);
        }
    }

    #[test]
    fn weak_labels() {
        let clusters = vec![center(3.0, 5.0, 0.0), center(9.0, 5.0, 0.0), center(0.0, 0.0, 0.0)];
        let majority = vec![1, 1, 2];
        let cands = [0, 1, 2];
        // one in-segment candidate
        assert_eq!(weakly_supervised_label(5, 5, &cands, &clusters, 2, &majority, None, 1).unwrap(), 2);
        // nearer wins without edges
        assert_eq!(weakly_supervised_label(5, 5, &cands, &clusters, 1, &majority, None, 1).unwrap(), 0);
        // nearer one behind a strength-5 edge
        let e = edges(12, 12, |x, _| if x == 4 { 5 } else { 0 });
        assert_eq!(weakly_supervised_label(5, 5, &cands, &clusters, 1, &majority, Some(&e), 1).unwrap(), 1);
        // filter
        assert_eq!(
            weakly_supervised_label(5, 5, &cands, &clusters, 1, &majority, None, 3).unwrap(),
            SENTINEL_DROPPED
        );
    }

    fn two_segment_source() -> LabelSource {
        let image = image_from_fn(48, 48, 3, |x, _| {
            let v = if x < 20 { 30.0 } else { 70.0 };
            vec![v, (x % 3) as f64, 0.0]
        });
        LabelSource { image, annotations: vec![map(48, 48, |x, _| (x >= 20) as u32)] }
    }

    #[test]
    fn dataset_accounting_and_monotonicity() {
        let src = two_segment_source();
        let mut cfg = LabelGenConfig::new(LabelMethod::GtCorrected, SlicParams::new(8, 10.0));
        let mut last = usize::MAX;
        for x in 1..=7 {
            cfg.x = x;
            let ds = generate_dataset(std::slice::from_ref(&src), &cfg).unwrap();
            assert_eq!(ds.stats.kept + ds.stats.dropped(), ds.stats.candidate_pixels);
            assert_eq!(ds.stats.kept, ds.samples.len());
            assert!(ds.samples.len() <= last);
            last = ds.samples.len();
        }
        cfg.x = 1;
        cfg.method = LabelMethod::SlicReplication;
        let ds = generate_dataset(std::slice::from_ref(&src), &cfg).unwrap();
        assert_eq!(ds.samples.len(), 48 * 48);
    }

    #[test]
    fn dataset_is_deterministic_and_roundtrips() {
        let src = two_segment_source();
        let mut cfg = LabelGenConfig::new(LabelMethod::WeaklySupervised, SlicParams::new(8, 10.0));
        cfg.x = 2;
        cfg.use_edges = true;
        let a = generate_dataset(std::slice::from_ref(&src), &cfg).unwrap();
        let b = generate_dataset(std::slice::from_ref(&src), &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.origins, b.origins);
        assert!(!a.samples.is_empty());
        let bytes = encode_dataset(&a.samples);
        assert_eq!(decode_dataset(&bytes).unwrap(), a.samples);
        assert!(matches!(decode_dataset(&bytes[..bytes.len() - 1]), Err(Error::TruncatedData { .. })));
        // boundary pixels are columns 19 and 20; near image corners the 7th
        // nearest center lies beyond 2S, so a few samples there reach farther
        let dist = |o: &SampleOrigin| (o.x as i64 - 19).abs().min((o.x as i64 - 20).abs());
        assert!(a.origins.iter().all(|o| dist(o) <= 20));
        let near = a.origins.iter().filter(|o| dist(o) <= 16).count();
        assert!(near as f64 >= 0.9 * a.origins.len() as f64, "{near} of {}", a.origins.len());
    }
}
