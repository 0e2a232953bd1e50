//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpix::imgio::MultiChannelImage;
use superpix::slic::SuperpixelMap;

pub fn names(channels: usize) -> Vec<String> {
    let lab = ["L", "a", "b"];
    (0..channels).map(|c| if c < 3 { lab[c].to_string() } else { format!("f{}", c - 3) }).collect()
}

/// Every channel is an independent Voronoi partition with random constant
/// values plus uniform noise, so channel differences are not collinear.
pub fn voronoi_image(w: usize, h: usize, channels: usize, sites: usize, seed: u64) -> MultiChannelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(w * h * channels);
    for c in 0..channels {
        let (lo, hi) = if c == 0 { (0.0, 100.0) } else { (-40.0, 40.0) };
        let pts: Vec<(f64, f64, f64)> = (0..sites)
            .map(|_| (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64), rng.gen_range(lo..hi)))
            .collect();
        for y in 0..h {
            for x in 0..w {
                let (fx, fy) = (x as f64, y as f64);
                let v = pts
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.0 - fx).powi(2) + (a.1 - fy).powi(2);
                        let db = (b.0 - fx).powi(2) + (b.1 - fy).powi(2);
                        da.total_cmp(&db)
                    })
                    .unwrap()
                    .2;
                data.push(v + rng.gen_range(-3.0..3.0));
            }
        }
    }
    MultiChannelImage::new(w, h, data, names(channels)).unwrap()
}

/// Two regions separated by a random line. Both have the same mean color;
/// one has horizontal stripes, the other vertical ones.
pub struct TexturePair {
    pub rgb: superpix::imgio::RawImage,
    pub gt: SuperpixelMap,
}

pub fn texture_pair(size: usize, seed: u64) -> TexturePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    let (nx, ny) = (angle.cos(), angle.sin());
    let (cx, cy) = (rng.gen_range(0.35 * s..0.65 * s), rng.gen_range(0.35 * s..0.65 * s));
    let base: [f64; 3] = [rng.gen_range(90.0..160.0), rng.gen_range(90.0..160.0), rng.gen_range(90.0..160.0)];
    let amp = 18.0;
    let flip = rng.gen_bool(0.5);
    let mut data = Vec::with_capacity(size * size * 3);
    let mut labels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let side = (x as f64 - cx) * nx + (y as f64 - cy) * ny >= 0.0;
            let region = side ^ flip;
            let coord = if region { y } else { x };
            let stripe = if (coord / 2) % 2 == 0 { amp } else { -amp };
            labels.push(region as u32);
            for b in base {
                let v = b + stripe + rng.gen_range(-4.0..4.0);
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    TexturePair {
        rgb: superpix::imgio::RawImage::new(size, size, 3, data).unwrap(),
        gt: SuperpixelMap::new(size, size, labels).unwrap(),
    }
}
