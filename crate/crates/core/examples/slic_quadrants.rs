//! Plain SLIC on a four-quadrant color image with the standard settings
//! (step 16, compactness 10, 5 iterations).
//!
//! cargo run --example slic_quadrants

use superpix::imgio::{boundary_overlay, rgb_to_lab, save_image, RawImage};
use superpix::metrics::ImageMetrics;
use superpix::slic::{slic_segment, SlicParams, SuperpixelMap};

fn main() -> superpix::Result<()> {
    let size = 64;
    let colors = [[200u8, 30, 30], [30, 180, 40], [40, 60, 210], [230, 220, 40]];
    let quadrant = |x: usize, y: usize| (y >= size / 2) as usize * 2 + (x >= size / 2) as usize;
    let data = (0..size * size).flat_map(|i| colors[quadrant(i % size, i / size)]).collect();
    let rgb = RawImage::new(size, size, 3, data)?;
    let gt = SuperpixelMap::new(size, size, (0..size * size).map(|i| quadrant(i % size, i / size) as u32).collect())?;

    let params = SlicParams::new(16, 10.0);
    let map = slic_segment(&rgb_to_lab(&rgb)?, &params)?;
    println!("{} superpixels", map.num_labels());
    for y in (0..size).step_by(8) {
        let row: Vec<String> = (0..size).step_by(8).map(|x| format!("{:>2}", map.get(x, y))).collect();
        println!("  {}", row.join(" "));
    }

    let m = ImageMetrics::compute("quadrants", &map, &gt, 2)?;
    println!("rec={:.3} mde={:.3} ue={:.3} co={:.3} iou={:.3}", m.rec, m.mde, m.ue, m.co, m.iou);

    let out = std::env::temp_dir().join("superpix-examples/quadrants_overlay.ppm");
    std::fs::create_dir_all(out.parent().unwrap())?;
    save_image(&out, &boundary_overlay(&rgb, &map)?)?;
    println!("overlay written to {}", out.display());
    Ok(())
}
