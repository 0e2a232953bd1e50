//! Scattering features of a gray image: 81 maps at a quarter of the input
//! resolution for J=2, L=8.
//!
//! cargo run --release --example scattering_features [image.pgm|ppm]

use superpix::features::{build_scattering_filters, parse_channel_mask, scattering_transform};
use superpix::imgio::{load_image, rgb_to_lab, write_feature_file, RawImage};

fn main() -> superpix::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(path) => load_image(path)?,
        None => {
            // concentric rings on the left, stripes on the right
            let data = (0..256 * 256)
                .map(|i| {
                    let (x, y) = ((i % 256) as f64, (i / 256) as f64);
                    let v = if x < 128.0 { ((x - 64.0).hypot(y - 128.0) * 0.5).sin() } else { (y * 0.8).sin() };
                    (128.0 + 90.0 * v) as u8
                })
                .collect();
            RawImage::new(256, 256, 1, data)?
        }
    };
    let lab = rgb_to_lab(&img.to_rgb())?;
    let bank = build_scattering_filters(2, 8)?;
    let t = scattering_transform(lab.channel(0), lab.width(), lab.height(), &bank)?;
    println!("{}x{} input -> {} maps of {}x{}", lab.width(), lab.height(), t.map_count, t.width, t.height);

    let orders = bank.map_orders();
    for order in 0..3u8 {
        let maps: Vec<usize> = (0..t.map_count).filter(|&m| orders[m] == order).collect();
        let mean: f64 = maps.iter().flat_map(|&m| t.map(m)).map(|&v| v as f64).sum::<f64>()
            / (maps.len() * t.width * t.height) as f64;
        println!("order {order}: {:>2} maps, mean response {mean:.4}", maps.len());
    }

    let mask = parse_channel_mask("order2", &bank)?;
    println!("mask `order2` keeps {} maps", mask.iter().filter(|&&k| k).count());

    let out = std::env::temp_dir().join("superpix-examples/scattering.ften");
    std::fs::create_dir_all(out.parent().unwrap())?;
    write_feature_file(&out, &t)?;
    println!("wrote {}", out.display());
    Ok(())
}
