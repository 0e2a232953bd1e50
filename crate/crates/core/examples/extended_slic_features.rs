//! SLIC with scattering channels appended to the Lab image. Two regions share
//! their mean color and differ only in stripe orientation, so color-only SLIC
//! cannot see the border while the feature channels can.
//!
//! cargo run --release --example extended_slic_features

use superpix::features::{build_scattering_filters, scattering_transform};
use superpix::imgio::{concat_channels, rgb_to_lab, upscale_nearest, RawImage};
use superpix::metrics::{compactness, undersegmentation_error};
use superpix::slic::{slic_segment, SlicParams, SuperpixelMap};

fn main() -> superpix::Result<()> {
    let size = 64;
    let region = |x: usize, y: usize| x + y / 2 >= 40;
    let mut data = Vec::new();
    for y in 0..size {
        for x in 0..size {
            let coord = if region(x, y) { y } else { x };
            let v = if coord / 2 % 2 == 0 { 150u8 } else { 114 };
            data.extend([v, v, v]);
        }
    }
    let rgb = RawImage::new(size, size, 3, data)?;
    let gt = SuperpixelMap::new(size, size, (0..size * size).map(|i| region(i % size, i / size) as u32).collect())?;

    let lab = rgb_to_lab(&rgb)?;
    let bank = build_scattering_filters(2, 8)?;
    let t = upscale_nearest(&scattering_transform(lab.channel(0), size, size, &bank)?, size, size)?;
    let extended = concat_channels(&lab, &t, &vec![true; t.map_count])?;
    println!("{} channels after concatenation", extended.channel_count());

    let color_only = slic_segment(&lab, &SlicParams::new(8, 10.0))?;
    report("color only", &color_only, &gt)?;
    for beta in [0.5, 2.0, 8.0] {
        let params = SlicParams::new(8, 10.0).with_beta(vec![beta; t.map_count]);
        report(&format!("beta={beta}"), &slic_segment(&extended, &params)?, &gt)?;
    }
    Ok(())
}

fn report(name: &str, map: &SuperpixelMap, gt: &SuperpixelMap) -> superpix::Result<()> {
    println!("{name:>10}: UE={:.4} CO={:.3} superpixels={}", undersegmentation_error(map, gt)?, compactness(map), map.num_labels());
    Ok(())
}
