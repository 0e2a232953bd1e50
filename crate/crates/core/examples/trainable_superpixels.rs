//! Bottom-up superpixels driven by a classifier over the Q nearest clusters.
//! With the analytic SLIC distance as classifier the result equals SLIC; a
//! network with a hand-set SLIC weight pattern behaves the same way.
//!
//! cargo run --release --example trainable_superpixels [net.spnn]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superpix::imgio::MultiChannelImage;
use superpix::nn::{build_regression, load_network, NetworkState};
use superpix::slic::{init_clusters, slic_segment};
use superpix::trainpix::{trainable_segment, Classifier, TrainpixParams};

fn main() -> superpix::Result<()> {
    let (w, h) = (48, 40);
    let data: Vec<f64> = (0..3)
        .flat_map(|c| {
            (0..w * h).map(move |i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                let blob = ((x - 16.0).hypot(y - 20.0) < 11.0) as u8 as f64;
                [40.0 + 40.0 * blob, 20.0 * (x / 12.0).sin(), -25.0 + 50.0 * (y > 28.0) as u8 as f64][c]
            })
        })
        .collect();
    let img = MultiChannelImage::new(w, h, data, ["L", "a", "b"].map(String::from).to_vec())?;

    let mut params = TrainpixParams::new(8, 10.0);
    let slic = slic_segment(&img, &params.slic)?;

    params.q = init_clusters(&img, 8)?.len();
    let oracle = trainable_segment(&img, &params, &Classifier::AnalyticSlic)?;
    let diff = |a: &[u32], b: &[u32]| a.iter().zip(b).filter(|(x, y)| x != y).count();
    println!("oracle with Q={}: {} labels differ from SLIC", params.q, diff(oracle.labels(), slic.labels()));

    params.q = 7;
    let net = match std::env::args().nth(1) {
        Some(path) => load_network(path)?,
        None => {
            let mut net = NetworkState::init(&build_regression(3, 7, 1)?, &mut ChaCha8Rng::seed_from_u64(0))?;
            net.set_distance_weights(&[1.0, 1.0, 1.0, 1.0])?;
            net
        }
    };
    let learned = trainable_segment(&img, &params, &Classifier::Network(net))?;
    println!(
        "network with Q=7: {} superpixels, {} labels differ from SLIC",
        learned.num_labels(),
        diff(learned.labels(), slic.labels())
    );
    Ok(())
}
