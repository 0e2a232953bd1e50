use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgio::MultiChannelImage;

/// Image whose channel values at `(x, y)` are `f(x, y)`.
pub fn image_from_fn(w: usize, h: usize, channels: usize, f: impl Fn(usize, usize) -> Vec<f64>) -> MultiChannelImage {
    let mut planes = vec![Vec::with_capacity(w * h); channels];
    for y in 0..h {
        for x in 0..w {
            for (p, v) in planes.iter_mut().zip(f(x, y)) {
                p.push(v);
            }
        }
    }
    let planes = planes.into_iter().enumerate().map(|(c, p)| (format!("c{c}"), p)).collect();
    MultiChannelImage::from_planes(w, h, planes).unwrap()
}

/// Piecewise-smooth random image: a few random blobs plus noise.
pub fn random_image(w: usize, h: usize, channels: usize, seed: u64) -> MultiChannelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, Vec<f64>)> = (0..4)
        .map(|_| {
            let v = (0..channels).map(|_| rng.gen_range(0.0..100.0)).collect();
            (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64), v)
        })
        .collect();
    let noise: Vec<f64> = (0..w * h * channels).map(|_| rng.gen_range(-5.0..5.0)).collect();
    image_from_fn(w, h, channels, |x, y| {
        let nearest = blobs
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - x as f64).powi(2) + (a.1 - y as f64).powi(2);
                let db = (b.0 - x as f64).powi(2) + (b.1 - y as f64).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        (0..channels).map(|c| nearest.2[c] + noise[(y * w + x) * channels + c]).collect()
    })
}
