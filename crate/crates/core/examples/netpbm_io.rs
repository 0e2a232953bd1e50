//! Netpbm and container I/O: write a PPM, read it back, convert to CIELAB and
//! round-trip feature tensors and label maps.
//!
//! cargo run --example netpbm_io [image.ppm]

use superpix::imgio::{
    load_image, read_feature_file, read_labelmap, rgb_to_lab, save_image, srgb_pixel_to_lab, upscale_nearest,
    write_feature_file, write_labelmap, FeatureTensor, RawImage,
};
use superpix::slic::SuperpixelMap;

fn main() -> superpix::Result<()> {
    let out = std::env::temp_dir().join("superpix-examples");
    std::fs::create_dir_all(&out)?;

    let img = match std::env::args().nth(1) {
        Some(path) => load_image(path)?,
        None => {
            let data = (0..32 * 24).flat_map(|i| [(i % 32 * 8) as u8, (i / 32 * 10) as u8, 128]).collect();
            RawImage::new(32, 24, 3, data)?
        }
    };
    let path = out.join("gradient.ppm");
    save_image(&path, &img)?;
    assert_eq!(load_image(&path)?, img);
    println!("{}: {}x{} with {} channel(s)", path.display(), img.width, img.height, img.channels);

    for rgb in [[255, 255, 255], [0, 0, 0], [255, 0, 0], [0, 0, 255]] {
        let [l, a, b] = srgb_pixel_to_lab(rgb);
        println!("rgb {rgb:?} -> L={l:.2} a={a:.2} b={b:.2}");
    }
    let lab = rgb_to_lab(&img.to_rgb())?;
    println!("Lab image channels {:?}", lab.channel_names());

    let t = FeatureTensor::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0])?;
    let up = upscale_nearest(&t, 4, 4)?;
    println!("upscaled map: {:?}", up.map(0));
    let ften = out.join("tiny.ften");
    write_feature_file(&ften, &up)?;
    assert_eq!(read_feature_file(&ften)?, up);

    let map = SuperpixelMap::new(2, 1, vec![3, 7])?;
    let spxl = out.join("tiny.spxl");
    write_labelmap(&spxl, &map)?;
    assert_eq!(read_labelmap(&spxl)?, map);
    println!("round trips ok in {}", out.display());
    Ok(())
}
