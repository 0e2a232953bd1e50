//! Superpixel metrics against ground truth and the CSV report.
//!
//! cargo run --example evaluate_metrics

use superpix::metrics::{boundary_pixels, evaluate, mean_distance_to_edge, undersegmentation_error};
use superpix::slic::SuperpixelMap;

fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> SuperpixelMap {
    SuperpixelMap::new(w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
}

fn main() -> superpix::Result<()> {
    let gt = map(32, 32, |x, _| (x >= 16) as u32);
    println!("gt boundary pixels: {}", boundary_pixels(&gt).iter().filter(|&&b| b).count());

    let exact = map(32, 32, |x, y| (x / 16 + 2 * (y / 16)) as u32);
    let shifted = map(32, 32, |x, y| ((x + 3) / 16 + 3 * (y / 16)) as u32);
    let grid = map(32, 32, |x, y| (x / 8 + 4 * (y / 8)) as u32);
    println!("shifted by 3: MDE={:.3} UE={:.4}", mean_distance_to_edge(&shifted, &gt)?, undersegmentation_error(&shifted, &gt)?);

    let names: Vec<String> = ["exact", "shifted", "grid"].map(String::from).to_vec();
    let report = evaluate(&[exact, shifted, grid], &[gt.clone(), gt.clone(), gt], 2, Some(&names))?;
    print!("{}", report.to_csv());

    let out = std::env::temp_dir().join("superpix-examples/metrics.csv");
    std::fs::create_dir_all(out.parent().unwrap())?;
    report.write_csv(&out)?;
    println!("written to {}", out.display());
    Ok(())
}
