//! The one-layer distance network learns the SLIC channel weights from
//! SLIC-replication labels.
//!
//! cargo run --release --example train_regression

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpix::imgio::MultiChannelImage;
use superpix::labels::{generate_dataset, LabelGenConfig, LabelMethod, LabelSource};
use superpix::nn::train::{accuracy, evaluate_loss};
use superpix::nn::{build_regression, save_network, train_epoch, NetworkState, TrainConfig};
use superpix::slic::{SlicParams, SuperpixelMap};

/// Five channels, each an independent patchwork of random values.
fn image(seed: u64) -> superpix::Result<MultiChannelImage> {
    let (w, h) = (64, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(5 * w * h);
    for c in 0..5 {
        let cells: Vec<f64> = (0..16).map(|_| if c == 0 { rng.gen_range(0.0..100.0) } else { rng.gen_range(-40.0..40.0) }).collect();
        let jitter: (usize, usize) = (rng.gen_range(0..16), rng.gen_range(0..16));
        for i in 0..w * h {
            let (x, y) = ((i % w + jitter.0) / 20 % 4, (i / w + jitter.1) / 20 % 4);
            data.push(cells[y * 4 + x] + rng.gen_range(-3.0..3.0));
        }
    }
    MultiChannelImage::new(w, h, data, ["L", "a", "b", "f0", "f1"].map(String::from).to_vec())
}

fn main() -> superpix::Result<()> {
    let mut slic = SlicParams::new(8, 10.0).with_beta(vec![1.5, 0.3]);
    slic.alpha = [1.0, 0.5, 2.0];
    let sources = |seeds: std::ops::Range<u64>| -> superpix::Result<Vec<LabelSource>> {
        seeds.map(|s| Ok(LabelSource { image: image(s)?, annotations: vec![SuperpixelMap::new(64, 64, vec![0; 4096])?] })).collect()
    };
    let cfg = LabelGenConfig::new(LabelMethod::SlicReplication, slic.clone());
    let train = generate_dataset(&sources(0..8)?, &cfg)?.samples;
    let held = generate_dataset(&sources(50..52)?, &cfg)?.samples;
    println!("{} training samples, {} held out", train.len(), held.len());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = NetworkState::init(&build_regression(5, 7, 1)?, &mut rng)?;
    for (epoch, lr) in [1e-3; 100].into_iter().chain([1e-4; 10]).enumerate() {
        let loss = train_epoch(&mut net, &train, &TrainConfig { lr, batch: 256, ..TrainConfig::default() }, &mut rng)?;
        if epoch % 20 == 19 {
            println!("epoch {:>2}: train {loss:.4} held-out {:.4}", epoch + 1, evaluate_loss(&net, &held)?);
        }
    }

    let w = net.distance_weights().expect("depth-1 network");
    let truth = [slic.alpha[0], slic.alpha[1], slic.alpha[2], slic.beta[0], slic.beta[1]];
    println!("weight / spatial weight vs SLIC:");
    for (i, t) in truth.iter().enumerate() {
        println!("  channel {i}: learned {:.3}  true {t:.3}", w[i] / w[5]);
    }
    println!("held-out agreement with SLIC: {:.2}%", 100.0 * accuracy(&net, &held)?);

    let out = std::env::temp_dir().join("superpix-examples/regression1.spnn");
    std::fs::create_dir_all(out.parent().unwrap())?;
    save_network(&out, &net)?;
    println!("saved {}", out.display());
    Ok(())
}
