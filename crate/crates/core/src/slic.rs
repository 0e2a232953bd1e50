//! SLIC clustering over multi-channel images.
//!
//! The color term is a per-channel weighted squared distance: three weights
//! for the Lab channels and one weight per appended feature channel. The full
//! distance adds the spatial term scaled by `(compactness / step)^2`:
//!
//! ```text
//! D^2 = sum_c w_c (f_c,k - f_c,i)^2 + (sigma / S)^2 * ((x_k - x_i)^2 + (y_k - y_i)^2)
//! ```
//!
//! Pixels are assigned to the nearest center among those within Chebyshev
//! distance `2S`, centers are moved to the mean of their pixels, and after the
//! last iteration small disconnected fragments are merged into neighbors.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgio::MultiChannelImage;

/// Marker for pixels that have not been assigned to any cluster yet.
pub const UNASSIGNED: u32 = u32::MAX;

/// Rows per partial sum in [`update_step`]; fixed so results do not depend on
/// the thread count.
const UPDATE_CHUNK_ROWS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SlicParams {
    /// Grid step `S` in pixels (nominal superpixel side).
    pub step: usize,
    /// Compactness `sigma`.
    pub compactness: f64,
    pub iterations: usize,
    /// Weights for the L, a, b channels.
    pub alpha: [f64; 3],
    /// Weights for channels after the first three.
    pub beta: Vec<f64>,
    /// Components smaller than `min_component_frac * S^2` are merged away.
    pub min_component_frac: f64,
    /// Move seeds to the lowest-gradient position of their 3x3 neighborhood.
    pub perturb_seeds: bool,
}

impl SlicParams {
    pub fn new(step: usize, compactness: f64) -> Self {
        SlicParams {
            step,
            compactness,
            iterations: 5,
            alpha: [1.0; 3],
            beta: Vec::new(),
            min_component_frac: 0.25,
            perturb_seeds: false,
        }
    }

    pub fn with_beta(mut self, beta: Vec<f64>) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.step < 2 {
            return Err(Error::InvalidParameter(format!("step size {} < 2", self.step)));
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(Error::InvalidParameter(format!("compactness {} <= 0", self.compactness)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        let weights = self.alpha.iter().chain(&self.beta);
        if weights.clone().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        if !weights.clone().any(|&w| w > 0.0) {
            return Err(Error::InvalidParameter("at least one weight must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.min_component_frac) {
            return Err(Error::InvalidParameter("min_component_frac outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Channel weights `[alpha..., beta...]`.
    pub fn weights(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    /// Multiplier of the squared spatial distance, `(sigma / S)^2`.
    pub fn spatial_weight(&self) -> f64 {
        let r = self.compactness / self.step as f64;
        r * r
    }

    pub(crate) fn check_channels(&self, channels: usize) -> Result<()> {
        if channels != 3 + self.beta.len() {
            return Err(Error::LengthMismatch { expected: 3 + self.beta.len(), found: channels });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCenter {
    pub x: f64,
    pub y: f64,
    pub features: Vec<f64>,
    pub pixel_count: usize,
}

/// Label map; `labels[y * width + x]` is the cluster id of pixel `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl SuperpixelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::LengthMismatch { expected: width * height, found: labels.len() });
        }
        Ok(SuperpixelMap { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u32> {
        self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Number of distinct labels.
    pub fn num_labels(&self) -> usize {
        let mut seen = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Precomputed distance weights; the single place where `D^2` is evaluated so
/// that every code path produces bit-identical distances.
#[derive(Debug, Clone)]
pub(crate) struct DistanceWeights {
    pub channel: Vec<f64>,
    pub spatial: f64,
}

impl DistanceWeights {
    pub fn from_params(params: &SlicParams) -> Self {
        DistanceWeights { channel: params.weights(), spatial: params.spatial_weight() }
    }

    #[inline]
    pub fn color(&self, pixel: &[f64], cluster: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((w, p), k) in self.channel.iter().zip(pixel).zip(cluster) {
            let d = k - p;
            acc += w * d * d;
        }
        acc
    }

    #[inline]
    pub fn total(&self, pixel: &[f64], px: f64, py: f64, cluster: &ClusterCenter) -> f64 {
        let dx = cluster.x - px;
        let dy = cluster.y - py;
        self.color(pixel, &cluster.features) + self.spatial * (dx * dx + dy * dy)
    }
}

/// Weighted squared color distance between a pixel and a cluster.
pub fn color_distance_sq(
    pixel_features: &[f64],
    cluster_features: &[f64],
    alpha: &[f64; 3],
    beta: &[f64],
) -> Result<f64> {
    let n = 3 + beta.len();
    if pixel_features.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: pixel_features.len() });
    }
    if cluster_features.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: cluster_features.len() });
    }
    let channel: Vec<f64> = alpha.iter().chain(beta).copied().collect();
    Ok(DistanceWeights { channel, spatial: 0.0 }.color(pixel_features, cluster_features))
}

/// Full SLIC distance `d_c^2 + (sigma/S)^2 d_s^2` for a pixel at `(x, y)`.
pub fn total_distance_sq(
    pixel_features: &[f64],
    x: f64,
    y: f64,
    cluster: &ClusterCenter,
    params: &SlicParams,
) -> Result<f64> {
    params.check_channels(pixel_features.len())?;
    params.check_channels(cluster.features.len())?;
    Ok(DistanceWeights::from_params(params).total(pixel_features, x, y, cluster))
}

/// Pixel-major copy of an image; clustering loops read whole feature vectors.
pub(crate) struct PixelTable {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PixelTable {
    pub fn new(img: &MultiChannelImage) -> Self {
        PixelTable {
            width: img.width(),
            height: img.height(),
            channels: img.channel_count(),
            data: img.interleaved(),
        }
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }
}

/// Seeds on a regular grid: `(S/2 + i*S, S/2 + j*S)` for every position that
/// falls inside the image.
pub fn init_clusters(img: &MultiChannelImage, step: usize) -> Result<Vec<ClusterCenter>> {
    let (w, h) = (img.width(), img.height());
    if step == 0 || step > w.min(h) {
        return Err(Error::StepTooLarge { step, width: w, height: h });
    }
    let half = step / 2;
    let mut clusters = Vec::new();
    for cy in (half..h).step_by(step) {
        for cx in (half..w).step_by(step) {
            clusters.push(ClusterCenter {
                x: cx as f64,
                y: cy as f64,
                features: img.pixel(cx, cy),
                pixel_count: 0,
            });
        }
    }
    Ok(clusters)
}

/// Moves every seed to the lowest-gradient pixel of its 3x3 neighborhood,
/// measuring the gradient on the first three channels.
pub fn perturb_seeds(img: &MultiChannelImage, clusters: &mut [ClusterCenter]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let channels = img.channel_count().min(3);
    let gradient = |x: i64, y: i64| -> f64 {
        let at = |x: i64, y: i64, c: usize| img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize, c);
        (0..channels)
            .map(|c| {
                let gx = at(x + 1, y, c) - at(x - 1, y, c);
                let gy = at(x, y + 1, c) - at(x, y - 1, c);
                gx * gx + gy * gy
            })
            .sum()
    };
    for cluster in clusters.iter_mut() {
        let (cx, cy) = (cluster.x as i64, cluster.y as i64);
        let mut best = (gradient(cx, cy), cx, cy);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= w || y >= h {
                    continue;
                }
                let g = gradient(x, y);
                if g < best.0 {
                    best = (g, x, y);
                }
            }
        }
        cluster.x = best.1 as f64;
        cluster.y = best.2 as f64;
        cluster.features = img.pixel(best.1 as usize, best.2 as usize);
    }
}

/// Uniform grid of buckets holding cluster indices, for window queries.
pub(crate) struct ClusterGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
}

impl ClusterGrid {
    pub fn new(clusters: &[ClusterCenter], width: usize, height: usize, cell: usize) -> Self {
        let cell_f = cell.max(1) as f64;
        let cols = width.div_ceil(cell.max(1)).max(1);
        let rows = height.div_ceil(cell.max(1)).max(1);
        let mut cells = vec![Vec::new(); cols * rows];
        for (k, c) in clusters.iter().enumerate() {
            let cx = ((c.x / cell_f).floor().max(0.0) as usize).min(cols - 1);
            let cy = ((c.y / cell_f).floor().max(0.0) as usize).min(rows - 1);
            cells[cy * cols + cx].push(k as u32);
        }
        ClusterGrid { cell: cell_f, cols, rows, cells }
    }

    /// Calls `f` with every cluster index whose bucket may intersect the
    /// square `[x - r, x + r] x [y - r, y + r]`; callers apply the exact test.
    #[inline]
    pub fn for_each_near(&self, x: f64, y: f64, r: f64, mut f: impl FnMut(u32)) {
        let lo = |v: f64| ((v / self.cell).floor().max(0.0)) as usize;
        let x0 = lo(x - r);
        let y0 = lo(y - r);
        let x1 = (((x + r) / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let y1 = (((y + r) / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &k in &self.cells[cy * self.cols + cx] {
                    f(k);
                }
            }
        }
    }
}

pub(crate) fn assign_table(
    table: &PixelTable,
    clusters: &[ClusterCenter],
    weights: &DistanceWeights,
    step: usize,
    labels: &mut [u32],
) {
    let radius = 2.0 * step as f64;
    let grid = ClusterGrid::new(clusters, table.width, table.height, step);
    let width = table.width;
    labels.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let py = y as f64;
        for (x, label) in row.iter_mut().enumerate() {
            let px = x as f64;
            let pixel = table.pixel(y * width + x);
            let mut best: Option<(f64, u32)> = None;
            grid.for_each_near(px, py, radius, |k| {
                let c = &clusters[k as usize];
                if (c.x - px).abs() > radius || (c.y - py).abs() > radius {
                    return;
                }
                let d = weights.total(pixel, px, py, c);
                let better = match best {
                    None => true,
                    Some((bd, bk)) => d < bd || (d == bd && k < bk),
                };
                if better {
                    best = Some((d, k));
                }
            });
            if let Some((_, k)) = best {
                *label = k;
            }
        }
    });
}

/// One assignment pass. `previous` supplies labels for pixels without any
/// cluster inside their `2S` window (pass `None` to use [`UNASSIGNED`]).
pub fn assign_step(
    img: &MultiChannelImage,
    clusters: &[ClusterCenter],
    params: &SlicParams,
    previous: Option<&[u32]>,
) -> Result<Vec<u32>> {
    if clusters.is_empty() {
        return Err(Error::InvalidParameter("no clusters".into()));
    }
    params.check_channels(img.channel_count())?;
    let mut labels = match previous {
        Some(p) if p.len() == img.pixel_count() => p.to_vec(),
        Some(p) => return Err(Error::LengthMismatch { expected: img.pixel_count(), found: p.len() }),
        None => vec![UNASSIGNED; img.pixel_count()],
    };
    let table = PixelTable::new(img);
    assign_table(&table, clusters, &DistanceWeights::from_params(params), params.step, &mut labels);
    Ok(labels)
}

#[derive(Clone)]
struct ClusterSums {
    features: Vec<f64>,
    x: f64,
    y: f64,
    count: usize,
}

pub(crate) fn update_table(table: &PixelTable, labels: &[u32], clusters: &[ClusterCenter]) -> Vec<ClusterCenter> {
    let k = clusters.len();
    let c = table.channels;
    let width = table.width;
    let empty = ClusterSums { features: vec![0.0; c], x: 0.0, y: 0.0, count: 0 };
    let partials: Vec<Vec<ClusterSums>> = labels
        .par_chunks(width * UPDATE_CHUNK_ROWS)
        .enumerate()
        .map(|(chunk, rows)| {
            let mut sums = vec![empty.clone(); k];
            let base = chunk * width * UPDATE_CHUNK_ROWS;
            for (offset, &label) in rows.iter().enumerate() {
                if label as usize >= k {
                    continue;
                }
                let index = base + offset;
                let s = &mut sums[label as usize];
                for (acc, v) in s.features.iter_mut().zip(table.pixel(index)) {
                    *acc += v;
                }
                s.x += (index % width) as f64;
                s.y += (index / width) as f64;
                s.count += 1;
            }
            sums
        })
        .collect();

    let mut totals = vec![empty; k];
    for part in &partials {
        for (t, p) in totals.iter_mut().zip(part) {
            if p.count == 0 {
                continue;
            }
            for (a, b) in t.features.iter_mut().zip(&p.features) {
                *a += b;
            }
            t.x += p.x;
            t.y += p.y;
            t.count += p.count;
        }
    }

    clusters
        .iter()
        .zip(totals)
        .map(|(old, s)| {
            if s.count == 0 {
                // empty clusters keep their previous state
                return ClusterCenter { pixel_count: 0, ..old.clone() };
            }
            let n = s.count as f64;
            ClusterCenter {
                x: s.x / n,
                y: s.y / n,
                features: s.features.iter().map(|v| v / n).collect(),
                pixel_count: s.count,
            }
        })
        .collect()
}

/// Moves every cluster to the mean position and features of its pixels.
pub fn update_step(
    img: &MultiChannelImage,
    labels: &[u32],
    clusters: &[ClusterCenter],
) -> Result<Vec<ClusterCenter>> {
    if labels.len() != img.pixel_count() {
        return Err(Error::LengthMismatch { expected: img.pixel_count(), found: labels.len() });
    }
    if let Some(c) = clusters.iter().find(|c| c.features.len() != img.channel_count()) {
        return Err(Error::LengthMismatch { expected: img.channel_count(), found: c.features.len() });
    }
    Ok(update_table(&PixelTable::new(img), labels, clusters))
}

/// Sum of `D^2(i, cluster(i))` over assigned pixels.
pub fn clustering_objective(
    img: &MultiChannelImage,
    labels: &[u32],
    clusters: &[ClusterCenter],
    params: &SlicParams,
) -> f64 {
    let table = PixelTable::new(img);
    let weights = DistanceWeights::from_params(params);
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l as usize) < clusters.len())
        .map(|(i, &l)| {
            let (x, y) = ((i % table.width) as f64, (i / table.width) as f64);
            weights.total(table.pixel(i), x, y, &clusters[l as usize])
        })
        .sum()
}

/// Runs the clustering loop without connectivity enforcement and returns the
/// final centers and raw labels.
pub fn slic_cluster(
    img: &MultiChannelImage,
    params: &SlicParams,
    iterations: usize,
) -> Result<(Vec<ClusterCenter>, Vec<u32>)> {
    params.validate()?;
    params.check_channels(img.channel_count())?;
    let mut clusters = init_clusters(img, params.step)?;
    if params.perturb_seeds {
        perturb_seeds(img, &mut clusters);
    }
    let table = PixelTable::new(img);
    let weights = DistanceWeights::from_params(params);
    let mut labels = vec![UNASSIGNED; img.pixel_count()];
    for _ in 0..iterations {
        assign_table(&table, &clusters, &weights, params.step, &mut labels);
        clusters = update_table(&table, &labels, &clusters);
    }
    Ok((clusters, labels))
}

/// Full SLIC: grid init, `iterations` rounds of assign/update, connectivity.
pub fn slic_segment(img: &MultiChannelImage, params: &SlicParams) -> Result<SuperpixelMap> {
    let (_, labels) = slic_cluster(img, params, params.iterations)?;
    enforce_connectivity(&labels, img.width(), img.height(), params.step, params.min_component_frac)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Splits labels into 4-connected components, merges components smaller than
/// `min_component_frac * S^2` into the neighbor sharing the longest boundary
/// (ties go to the lower label), and renumbers ids in raster order.
pub fn enforce_connectivity(
    labels: &[u32],
    width: usize,
    height: usize,
    step: usize,
    min_component_frac: f64,
) -> Result<SuperpixelMap> {
    let n = width * height;
    if labels.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: labels.len() });
    }
    let mut comp = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut comp_label: Vec<u32> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let label = labels[start];
        let mut pixels = Vec::new();
        comp[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            pixels.push(p);
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && labels[q] == label {
                    comp[q] = id;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        members.push(pixels);
        comp_label.push(label);
    }

    let min_size = min_component_frac * (step * step) as f64;
    let count = members.len();
    let mut parent: Vec<usize> = (0..count).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for c in 0..count {
            if parent[c] != c || (members[c].len() as f64) >= min_size {
                continue;
            }
            let mut shared: BTreeMap<usize, usize> = BTreeMap::new();
            for &p in &members[c] {
                let (x, y) = (p % width, p / width);
                let mut neighbors = [usize::MAX; 4];
                if x > 0 {
                    neighbors[0] = p - 1;
                }
                if x + 1 < width {
                    neighbors[1] = p + 1;
                }
                if y > 0 {
                    neighbors[2] = p - width;
                }
                if y + 1 < height {
                    neighbors[3] = p + width;
                }
                for q in neighbors.into_iter().filter(|&q| q != usize::MAX) {
                    let r = find(&mut parent, comp[q]);
                    if r != c {
                        *shared.entry(r).or_insert(0) += 1;
                    }
                }
            }
            let target = shared
                .iter()
                .max_by(|(ra, ca), (rb, cb)| {
                    ca.cmp(cb)
                        .then(comp_label[**rb].cmp(&comp_label[**ra]))
                        .then(rb.cmp(ra))
                })
                .map(|(&r, _)| r);
            if let Some(t) = target {
                parent[c] = t;
                let moved = std::mem::take(&mut members[c]);
                members[t].extend(moved);
                changed = true;
            }
        }
    }

    let mut renumber = vec![u32::MAX; count];
    let mut next = 0u32;
    let mut out = vec![0u32; n];
    for (p, o) in out.iter_mut().enumerate() {
        let r = find(&mut parent, comp[p]);
        if renumber[r] == u32::MAX {
            renumber[r] = next;
            next += 1;
        }
        *o = renumber[r];
    }
    SuperpixelMap::new(width, height, out)
}
