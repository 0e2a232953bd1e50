//! Training labels from ground truth with the three labeling methods, plus
//! the effect of the hard-example threshold X.
//!
//! cargo run --release --example label_generation

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpix::imgio::MultiChannelImage;
use superpix::labels::{combine_edge_maps, generate_dataset, write_dataset, LabelGenConfig, LabelMethod, LabelSource};
use superpix::slic::{SlicParams, SuperpixelMap};

/// Voronoi segments with one random Lab color each, plus a second, slightly
/// shifted annotation of the same scene.
fn source(seed: u64) -> superpix::Result<LabelSource> {
    let (w, h) = (64, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0))).collect();
    let colors: Vec<[f64; 3]> = (0..10).map(|_| [rng.gen_range(20.0..90.0), rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)]).collect();
    let segment = |x: f64, y: f64| {
        (0..sites.len())
            .min_by(|&a, &b| (sites[a].0 - x).hypot(sites[a].1 - y).total_cmp(&(sites[b].0 - x).hypot(sites[b].1 - y)))
            .unwrap() as u32
    };
    let gt: Vec<u32> = (0..w * h).map(|i| segment((i % w) as f64, (i / w) as f64)).collect();
    let shifted: Vec<u32> = (0..w * h).map(|i| segment((i % w) as f64 + 1.0, (i / w) as f64)).collect();
    let mut data = vec![0.0; 3 * w * h];
    for c in 0..3 {
        for i in 0..w * h {
            data[c * w * h + i] = colors[gt[i] as usize][c] + rng.gen_range(-3.0..3.0);
        }
    }
    let image = MultiChannelImage::new(w, h, data, vec!["L".into(), "a".into(), "b".into()])?;
    Ok(LabelSource { image, annotations: vec![SuperpixelMap::new(w, h, gt)?, SuperpixelMap::new(w, h, shifted)?] })
}

fn main() -> superpix::Result<()> {
    let sources = (0..3).map(source).collect::<superpix::Result<Vec<_>>>()?;
    let edges = combine_edge_maps(&sources[0].annotations)?;
    println!("edge map: {} pixels marked by both annotations", edges.strength.iter().filter(|&&s| s == 2).count());

    // same seed and filter, so the three sets list the same pixels in the same order
    let slic = SlicParams::new(8, 10.0);
    let mut replication = None;
    for method in [LabelMethod::SlicReplication, LabelMethod::GtCorrected, LabelMethod::WeaklySupervised] {
        let mut cfg = LabelGenConfig::new(method, slic.clone());
        cfg.x = 2;
        cfg.use_edges = true;
        let ds = generate_dataset(&sources, &cfg)?;
        println!("{method:?}: {}", ds.stats);
        let targets = ds.samples.targets().to_vec();
        let reference = replication.get_or_insert_with(|| targets.clone());
        if reference.len() == targets.len() {
            let changed = reference.iter().zip(&targets).filter(|(a, b)| a != b).count();
            println!("  targets differing from replication: {changed}");
        }
    }

    println!("hard-example threshold:");
    for x in 1..=7 {
        let mut cfg = LabelGenConfig::new(LabelMethod::GtCorrected, slic.clone());
        cfg.x = x;
        println!("  X={x}: {} samples", generate_dataset(&sources, &cfg)?.samples.len());
    }

    let mut cfg = LabelGenConfig::new(LabelMethod::GtCorrected, slic);
    cfg.only_corrected = true;
    let ds = generate_dataset(&sources, &cfg)?;
    let out = std::env::temp_dir().join("superpix-examples/corrected.spds");
    std::fs::create_dir_all(out.parent().unwrap())?;
    write_dataset(&out, &ds.samples)?;
    println!("{} corrected samples written to {}", ds.samples.len(), out.display());
    Ok(())
}
