//! Superpixel quality metrics.
//!
//! All functions take the superpixel map first and the ground-truth
//! segmentation second; both are plain label maps of equal size.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::slic::SuperpixelMap;

/// Default boundary-recall tolerance in pixels.
pub const DEFAULT_TOLERANCE: usize = 2;

fn check_dims(sp: &SuperpixelMap, gt: &SuperpixelMap) -> Result<()> {
    if sp.width() != gt.width() || sp.height() != gt.height() {
        return Err(Error::DimMismatch(format!(
            "superpixels {}x{} vs ground truth {}x{}",
            sp.width(),
            sp.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// A pixel is a boundary pixel iff one of its 4-neighbors has another label.
pub fn boundary_pixels(labels: &SuperpixelMap) -> Vec<bool> {
    let (w, h) = (labels.width(), labels.height());
    let l = labels.labels();
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && l[i] != l[i + 1] {
                out[i] = true;
                out[i + 1] = true;
            }
            if y + 1 < h && l[i] != l[i + w] {
                out[i] = true;
                out[i + w] = true;
            }
        }
    }
    out
}

/// Fraction of ground-truth boundary pixels with a superpixel boundary pixel
/// within Chebyshev distance `tol`. A ground truth without boundaries scores 1.
pub fn boundary_recall(sp: &SuperpixelMap, gt: &SuperpixelMap, tol: usize) -> Result<f64> {
    check_dims(sp, gt)?;
    let (w, h) = (sp.width(), sp.height());
    let sb = boundary_pixels(sp);
    let gb = boundary_pixels(gt);

    // summed-area table of superpixel boundary pixels
    let mut sat = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += sb[y * w + x] as u32;
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    let window = |x: usize, y: usize| -> u32 {
        let (x0, y0) = (x.saturating_sub(tol), y.saturating_sub(tol));
        let (x1, y1) = ((x + tol + 1).min(w), (y + tol + 1).min(h));
        sat[y1 * (w + 1) + x1] + sat[y0 * (w + 1) + x0] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0]
    };

    let mut total = 0usize;
    let mut hit = 0usize;
    for (i, _) in gb.iter().enumerate().filter(|(_, &b)| b) {
        total += 1;
        if window(i % w, i / w) > 0 {
            hit += 1;
        }
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

/// One-dimensional squared Euclidean distance transform (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[v[k]].is_infinite() {
            v[k] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = if f[p].is_infinite() { f64::INFINITY } else { d * d + f[p] };
    }
}

/// Exact squared Euclidean distance from every pixel to the nearest `true`
/// pixel of `mask` (infinite when the mask is empty).
pub fn squared_distance_transform(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let len = width.max(height);
    let mut f = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut v = vec![0usize; len];
    let mut z = vec![0.0; len + 1];
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        grid[y * width..(y + 1) * width].copy_from_slice(&out[..width]);
    }
    grid
}

/// Mean Euclidean distance from ground-truth boundary pixels to the nearest
/// superpixel boundary pixel. Zero when the ground truth has no boundary.
///
/// A map with a single superpixel has no boundary of its own; the image frame
/// stands in for it so the value stays finite.
pub fn mean_distance_to_edge(sp: &SuperpixelMap, gt: &SuperpixelMap) -> Result<f64> {
    check_dims(sp, gt)?;
    let (w, h) = (sp.width(), sp.height());
    let gb = boundary_pixels(gt);
    if !gb.iter().any(|&b| b) {
        return Ok(0.0);
    }
    let mut sb = boundary_pixels(sp);
    if !sb.iter().any(|&b| b) {
        for (i, b) in sb.iter_mut().enumerate() {
            let (x, y) = (i % w, i / w);
            *b = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
        }
    }
    let dist = squared_distance_transform(&sb, w, h);
    let (sum, count) = gb
        .iter()
        .zip(&dist)
        .filter(|(&b, _)| b)
        .fold((0.0, 0usize), |(s, c), (_, d)| (s + d.sqrt(), c + 1));
    Ok(sum / count as f64)
}

fn overlaps(sp: &SuperpixelMap, gt: &SuperpixelMap) -> HashMap<(u32, u32), usize> {
    let mut counts = HashMap::new();
    for (&s, &g) in sp.labels().iter().zip(gt.labels()) {
        *counts.entry((s, g)).or_insert(0) += 1;
    }
    counts
}

fn sizes(map: &SuperpixelMap) -> HashMap<u32, usize> {
    let mut sizes = HashMap::new();
    for &l in map.labels() {
        *sizes.entry(l).or_insert(0) += 1;
    }
    sizes
}

/// Undersegmentation error after Neubert and Protzel:
/// `(1/N) sum_G sum_{P : P∩G≠∅} min(|P∩G|, |P \ G|)`.
pub fn undersegmentation_error(sp: &SuperpixelMap, gt: &SuperpixelMap) -> Result<f64> {
    check_dims(sp, gt)?;
    let sp_sizes = sizes(sp);
    let mut pairs: Vec<_> = overlaps(sp, gt).into_iter().collect();
    pairs.sort_unstable();
    let leak: usize = pairs
        .iter()
        .map(|&((s, _), inside)| inside.min(sp_sizes[&s] - inside))
        .sum();
    Ok(leak as f64 / sp.labels().len() as f64)
}

/// Area-weighted isoperimetric quotient, `sum_P |P|/N * min(1, 4 pi |P| / perimeter(P)^2)`,
/// where the perimeter counts pixel edges facing another label or the frame.
pub fn compactness(sp: &SuperpixelMap) -> f64 {
    let (w, h) = (sp.width(), sp.height());
    let l = sp.labels();
    let mut stats: HashMap<u32, (usize, usize)> = HashMap::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let label = l[i];
            let mut edges = 0;
            if x == 0 || l[i - 1] != label {
                edges += 1;
            }
            if x + 1 == w || l[i + 1] != label {
                edges += 1;
            }
            if y == 0 || l[i - w] != label {
                edges += 1;
            }
            if y + 1 == h || l[i + w] != label {
                edges += 1;
            }
            let e = stats.entry(label).or_insert((0, 0));
            e.0 += 1;
            e.1 += edges;
        }
    }
    let n = (w * h) as f64;
    // summing in (area, perimeter) order makes the result independent of ids
    let mut entries: Vec<(usize, usize)> = stats.into_values().collect();
    entries.sort_unstable();
    entries
        .iter()
        .map(|&(area, perimeter)| {
            let a = area as f64;
            let p = perimeter as f64;
            a / n * (4.0 * std::f64::consts::PI * a / (p * p)).min(1.0)
        })
        .sum()
}

/// Mean IoU over ground-truth segments of the best reconstruction built by
/// assigning each superpixel to the segment it overlaps most (ties go to the
/// lower segment id).
pub fn achievable_iou(sp: &SuperpixelMap, gt: &SuperpixelMap) -> Result<f64> {
    check_dims(sp, gt)?;
    let mut best: HashMap<u32, (usize, u32)> = HashMap::new();
    for (&(s, g), &count) in &overlaps(sp, gt) {
        let e = best.entry(s).or_insert((count, g));
        if count > e.0 || (count == e.0 && g < e.1) {
            *e = (count, g);
        }
    }
    let gt_sizes = sizes(gt);
    let mut recon_sizes: HashMap<u32, usize> = HashMap::new();
    let mut inter: HashMap<u32, usize> = HashMap::new();
    for (&s, &g) in sp.labels().iter().zip(gt.labels()) {
        let r = best[&s].1;
        *recon_sizes.entry(r).or_insert(0) += 1;
        if r == g {
            *inter.entry(g).or_insert(0) += 1;
        }
    }
    let mut segments: Vec<_> = gt_sizes.iter().collect();
    segments.sort_unstable();
    let total: f64 = segments
        .iter()
        .map(|(&g, &size)| {
            let i = inter.get(&g).copied().unwrap_or(0);
            let r = recon_sizes.get(&g).copied().unwrap_or(0);
            i as f64 / (size + r - i) as f64
        })
        .sum();
    Ok(total / segments.len() as f64)
}

/// Metrics of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMetrics {
    pub name: String,
    pub rec: f64,
    pub mde: f64,
    pub ue: f64,
    pub co: f64,
    pub iou: f64,
}

impl ImageMetrics {
    pub fn compute(name: impl Into<String>, sp: &SuperpixelMap, gt: &SuperpixelMap, tol: usize) -> Result<Self> {
        Ok(ImageMetrics {
            name: name.into(),
            rec: boundary_recall(sp, gt, tol)?,
            mde: mean_distance_to_edge(sp, gt)?,
            ue: undersegmentation_error(sp, gt)?,
            co: compactness(sp),
            iou: achievable_iou(sp, gt)?,
        })
    }
}

/// Dataset means plus the per-image rows they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rec: f64,
    pub mde: f64,
    pub ue: f64,
    pub co: f64,
    pub iou: f64,
    pub per_image: Vec<ImageMetrics>,
}

impl MetricReport {
    pub fn from_rows(per_image: Vec<ImageMetrics>) -> Self {
        let n = per_image.len().max(1) as f64;
        let mean = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).sum::<f64>() / n;
        MetricReport {
            rec: mean(|r| r.rec),
            mde: mean(|r| r.mde),
            ue: mean(|r| r.ue),
            co: mean(|r| r.co),
            iou: mean(|r| r.iou),
            per_image,
        }
    }

    /// CSV with header `image,rec,mde,ue,co,iou`, one row per image and a
    /// final `MEAN` row, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,rec,mde,ue,co,iou\n");
        let rows = self
            .per_image
            .iter()
            .map(|r| (r.name.as_str(), r.rec, r.mde, r.ue, r.co, r.iou))
            .chain(std::iter::once(("MEAN", self.rec, self.mde, self.ue, self.co, self.iou)));
        for (name, rec, mde, ue, co, iou) in rows {
            writeln!(out, "{name},{rec:.6},{mde:.6},{ue:.6},{co:.6},{iou:.6}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Evaluates paired superpixel maps and ground truths. Images are named by
/// index unless `names` is given.
pub fn evaluate(
    sp_set: &[SuperpixelMap],
    gt_set: &[SuperpixelMap],
    tol: usize,
    names: Option<&[String]>,
) -> Result<MetricReport> {
    if sp_set.len() != gt_set.len() {
        return Err(Error::CountMismatch(sp_set.len(), gt_set.len()));
    }
    if let Some(names) = names {
        if names.len() != sp_set.len() {
            return Err(Error::CountMismatch(sp_set.len(), names.len()));
        }
    }
    use rayon::prelude::*;
    let rows = sp_set
        .par_iter()
        .zip(gt_set)
        .enumerate()
        .map(|(i, (sp, gt))| {
            let name = names.map(|n| n[i].clone()).unwrap_or_else(|| i.to_string());
            ImageMetrics::compute(name, sp, gt, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_rows(rows))
}
