//! Two-layer wavelet scattering transform.
//!
//! A fixed bank of Morlet band-pass filters (`J` scales, `L` orientations)
//! and a Gaussian low-pass produce, for one image channel:
//!
//! - order 0: `x * phi`
//! - order 1: `|x * psi(j, l)| * phi` for every filter
//! - order 2: `||x * psi(j1, l1)| * psi(j2, l2)| * phi` for `j2 > j1`
//!
//! every map downsampled by average pooling over `2^J x 2^J` blocks, giving
//! `1 + J L + L^2 J (J - 1) / 2` maps (81 for `J = 2, L = 8`). Convolutions run
//! in the spatial domain with reflect padding.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgio::FeatureTensor;

/// Square real kernel of side `2 * radius + 1`, row-major.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub radius: usize,
    pub data: Vec<f64>,
}

/// Complex kernel stored as separate real and imaginary parts.
#[derive(Debug, Clone)]
pub struct ComplexKernel {
    pub scale: usize,
    pub orientation: usize,
    pub re: Kernel,
    pub im: Kernel,
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    pub scales: usize,
    pub orientations: usize,
    /// Band-pass filters, scale-major.
    pub psi: Vec<ComplexKernel>,
    pub phi: Kernel,
    /// 1-D factor of `phi` (the low-pass is separable).
    phi_1d: Vec<f64>,
}

impl FilterBank {
    pub fn map_count(&self) -> usize {
        map_count(self.scales, self.orientations)
    }

    /// Downsampling factor `2^J`.
    pub fn factor(&self) -> usize {
        1 << self.scales
    }

    /// Scattering order (0, 1 or 2) of every output map, in output order.
    pub fn map_orders(&self) -> Vec<u8> {
        let (j, l) = (self.scales, self.orientations);
        let second = l * l * j * j.saturating_sub(1) / 2;
        std::iter::once(0)
            .chain(std::iter::repeat_n(1, j * l))
            .chain(std::iter::repeat_n(2, second))
            .collect()
    }

    /// Largest distance (in input pixels) over which an output value depends
    /// on the input, not counting the pooling window.
    pub fn support_radius(&self) -> usize {
        let max_psi = self.psi.iter().map(|p| p.re.radius).max().unwrap_or(0);
        let orders = if self.scales > 1 { 2 } else { 1 };
        orders * max_psi + self.phi.radius
    }
}

/// `1 + J L + L^2 J (J - 1) / 2`.
pub fn map_count(scales: usize, orientations: usize) -> usize {
    let (j, l) = (scales, orientations);
    1 + j * l + l * l * j * j.saturating_sub(1) / 2
}

fn gaussian_1d(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as i64;
    let g: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn morlet(scale: usize, orientation: usize, orientations: usize) -> ComplexKernel {
    let sigma = 0.8 * (1u64 << scale) as f64;
    let xi = 0.75 * PI / (1u64 << scale) as f64;
    let theta = PI * orientation as f64 / orientations as f64;
    let (st, ct) = theta.sin_cos();
    let radius = (4.0 * sigma).ceil() as usize;
    let r = radius as i64;
    let side = 2 * radius + 1;

    let mut env = Vec::with_capacity(side * side);
    let mut wave_re = Vec::with_capacity(side * side);
    let mut wave_im = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (dx as f64, dy as f64);
            env.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp());
            let phase = xi * (x * ct + y * st);
            wave_re.push(phase.cos());
            wave_im.push(phase.sin());
        }
    }
    // subtract kappa * envelope so the truncated kernel has zero mean
    let env_sum: f64 = env.iter().sum();
    let kappa_re = env.iter().zip(&wave_re).map(|(g, w)| g * w).sum::<f64>() / env_sum;
    let kappa_im = env.iter().zip(&wave_im).map(|(g, w)| g * w).sum::<f64>() / env_sum;
    let mut re: Vec<f64> = env.iter().zip(&wave_re).map(|(g, w)| g * (w - kappa_re)).collect();
    let mut im: Vec<f64> = env.iter().zip(&wave_im).map(|(g, w)| g * (w - kappa_im)).collect();

    // unit L1 norm keeps every modulus stage contractive
    let l1: f64 = re.iter().zip(&im).map(|(a, b)| a.hypot(*b)).sum();
    re.iter_mut().chain(im.iter_mut()).for_each(|v| *v /= l1);
    ComplexKernel {
        scale,
        orientation,
        re: Kernel { radius, data: re },
        im: Kernel { radius, data: im },
    }
}

/// Morlet band-pass filters at scales `2^j` (`j < J`) and orientations
/// `pi l / L`, plus a Gaussian low-pass at scale `2^J`.
pub fn build_scattering_filters(scales: usize, orientations: usize) -> Result<FilterBank> {
    if scales == 0 || orientations == 0 {
        return Err(Error::InvalidParameter(format!(
            "scattering needs J >= 1 and L >= 1, got J={scales}, L={orientations}"
        )));
    }
    let mut psi = Vec::with_capacity(scales * orientations);
    for j in 0..scales {
        for l in 0..orientations {
            psi.push(morlet(j, l, orientations));
        }
    }
    let sigma = 0.8 * (1u64 << scales) as f64;
    let radius = (4.0 * sigma).ceil() as usize;
    let phi_1d = gaussian_1d(sigma, radius);
    let phi = Kernel {
        radius,
        data: phi_1d.iter().flat_map(|a| phi_1d.iter().map(move |b| a * b)).collect(),
    };
    Ok(FilterBank { scales, orientations, psi, phi, phi_1d })
}

#[inline]
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    (if m >= n as i64 { period - m } else { m }) as usize
}

/// Reflect-padded copy of a `width x height` plane.
fn pad(src: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let pw = width + 2 * radius;
    let ph = height + 2 * radius;
    let cols: Vec<usize> = (0..pw).map(|x| reflect(x as i64 - radius as i64, width)).collect();
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let row = &src[reflect(y as i64 - radius as i64, height) * width..][..width];
        out.extend(cols.iter().map(|&c| row[c]));
    }
    out
}

/// Correlates a plane with one or two kernels of equal radius.
fn correlate(src: &[f64], width: usize, height: usize, kernels: &[&Kernel]) -> Vec<Vec<f64>> {
    let radius = kernels[0].radius;
    let side = 2 * radius + 1;
    let padded = pad(src, width, height, radius);
    let pw = width + 2 * radius;
    let mut outs = vec![vec![0.0; width * height]; kernels.len()];
    for y in 0..height {
        for x in 0..width {
            for (k, out) in kernels.iter().zip(outs.iter_mut()) {
                let mut acc = 0.0;
                for ky in 0..side {
                    let row = &padded[(y + ky) * pw + x..][..side];
                    let krow = &k.data[ky * side..][..side];
                    for (a, b) in row.iter().zip(krow) {
                        acc += a * b;
                    }
                }
                out[y * width + x] = acc;
            }
        }
    }
    outs
}

/// `|src * psi|`.
pub fn modulus_response(src: &[f64], width: usize, height: usize, psi: &ComplexKernel) -> Vec<f64> {
    let outs = correlate(src, width, height, &[&psi.re, &psi.im]);
    outs[0].iter().zip(&outs[1]).map(|(a, b)| a.hypot(*b)).collect()
}

/// Real correlation with a single kernel (reflect padding).
pub fn convolve(src: &[f64], width: usize, height: usize, kernel: &Kernel) -> Vec<f64> {
    correlate(src, width, height, &[kernel]).pop().unwrap()
}

fn lowpass_pool(src: &[f64], width: usize, height: usize, bank: &FilterBank) -> Vec<f32> {
    let r = bank.phi.radius;
    let taps = &bank.phi_1d;
    // horizontal pass
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        let row = &src[y * width..][..width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in taps.iter().enumerate() {
                acc += k * row[reflect(x as i64 + t as i64 - r as i64, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    // vertical pass fused with average pooling
    let f = bank.factor();
    let (ow, oh) = (width / f, height / f);
    let mut out = vec![0.0f64; ow * oh];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in taps.iter().enumerate() {
                acc += k * tmp[reflect(y as i64 + t as i64 - r as i64, height) * width + x];
            }
            out[(y / f) * ow + x / f] += acc;
        }
    }
    let norm = (f * f) as f64;
    out.into_iter().map(|v| (v / norm) as f32).collect()
}

/// Scattering maps of one channel; output is `(W / 2^J) x (H / 2^J) x M`.
pub fn scattering_transform(
    channel: &[f64],
    width: usize,
    height: usize,
    bank: &FilterBank,
) -> Result<FeatureTensor> {
    if channel.len() != width * height {
        return Err(Error::LengthMismatch { expected: width * height, found: channel.len() });
    }
    let f = bank.factor();
    if width == 0 || height == 0 || !width.is_multiple_of(f) || !height.is_multiple_of(f) {
        return Err(Error::IndivisibleDims { width, height, factor: f });
    }

    let first: Vec<Vec<f64>> = bank
        .psi
        .par_iter()
        .map(|psi| modulus_response(channel, width, height, psi))
        .collect();

    // (source order-1 index, filter index) for j2 > j1
    let pairs: Vec<(usize, usize)> = bank
        .psi
        .iter()
        .enumerate()
        .flat_map(|(a, p1)| {
            bank.psi
                .iter()
                .enumerate()
                .filter(move |(_, p2)| p2.scale > p1.scale)
                .map(move |(b, _)| (a, b))
        })
        .collect();

    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(bank.map_count());
    sources.push(channel.to_vec());
    let second: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| modulus_response(&first[a], width, height, &bank.psi[b]))
        .collect();
    sources.extend(first);
    sources.extend(second);

    let maps: Vec<Vec<f32>> = sources
        .par_iter()
        .map(|s| lowpass_pool(s, width, height, bank))
        .collect();
    let data = maps.concat();
    FeatureTensor::new(width / f, height / f, maps.len(), data)
}

/// Default selection: every map.
pub fn default_channel_mask(bank: &FilterBank) -> Vec<bool> {
    vec![true; bank.map_count()]
}

/// Builds a mask from a comma-separated list of maps to leave out. Items are
/// map indices (`7`), inclusive ranges (`1-16`) or whole orders (`order0`,
/// `order1`, `order2`). An empty string keeps every map.
pub fn parse_channel_mask(exclude: &str, bank: &FilterBank) -> Result<Vec<bool>> {
    let mut mask = default_channel_mask(bank);
    let orders = bank.map_orders();
    let bad = |item: &str| Error::Config(format!("bad scattering.mask item {item:?}"));
    for item in exclude.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(order) = item.strip_prefix("order") {
            let order: u8 = order.parse().map_err(|_| bad(item))?;
            if order > 2 {
                return Err(bad(item));
            }
            for (m, o) in mask.iter_mut().zip(&orders) {
                if *o == order {
                    *m = false;
                }
            }
            continue;
        }
        let (lo, hi) = match item.split_once('-') {
            Some((a, b)) => (a.trim().parse::<usize>(), b.trim().parse::<usize>()),
            None => (item.parse::<usize>(), item.parse::<usize>()),
        };
        let (lo, hi) = (lo.map_err(|_| bad(item))?, hi.map_err(|_| bad(item))?);
        if lo > hi || hi >= mask.len() {
            return Err(bad(item));
        }
        mask[lo..=hi].iter_mut().for_each(|m| *m = false);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_count_formula() {
        assert_eq!(map_count(2, 8), 81);
        assert_eq!(map_count(1, 1), 2);
        for j in 1..=3 {
            for l in 1..=8 {
                let bank = build_scattering_filters(j, l).unwrap();
                assert_eq!(bank.psi.len(), j * l);
                assert_eq!(bank.map_orders().len(), 1 + j * l + l * l * j * (j - 1) / 2);
            }
        }
    }

    #[test]
    fn filters_are_normalized() {
        let bank = build_scattering_filters(2, 8).unwrap();
        for psi in &bank.psi {
            let re: f64 = psi.re.data.iter().sum();
            let im: f64 = psi.im.data.iter().sum();
            assert!(re.abs() < 1e-6 && im.abs() < 1e-6);
        }
        let s: f64 = bank.phi.data.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!(bank.phi.data.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn psi_kills_constants() {
        let bank = build_scattering_filters(2, 8).unwrap();
        let img = vec![3.7; 32 * 32];
        for psi in &bank.psi {
            assert!(modulus_response(&img, 32, 32, psi).iter().all(|v| v.abs() < 1e-5));
        }
    }

    #[test]
    fn reflect_indexing() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn rejects_indivisible_dims() {
        let bank = build_scattering_filters(2, 8).unwrap();
        let err = scattering_transform(&vec![0.0; 30 * 32], 30, 32, &bank).unwrap_err();
        assert!(matches!(err, Error::IndivisibleDims { factor: 4, .. }));
    }

    #[test]
    fn mask_parsing() {
        let bank = build_scattering_filters(2, 8).unwrap();
        assert_eq!(parse_channel_mask("", &bank).unwrap(), default_channel_mask(&bank));
        let m = parse_channel_mask("order1", &bank).unwrap();
        assert_eq!(m.iter().filter(|&&b| b).count(), 65);
        let m = parse_channel_mask("0, 3-5", &bank).unwrap();
        assert_eq!(m.iter().filter(|&&b| !b).count(), 4);
        assert!(!m[0] && !m[3] && !m[5] && m[6]);
        assert!(parse_channel_mask("81", &bank).is_err());
        assert!(parse_channel_mask("order3", &bank).is_err());
    }
}
