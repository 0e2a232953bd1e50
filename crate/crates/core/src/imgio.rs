//! Image and tensor I/O.
//!
//! Reads 8-bit binary netpbm images (P5/P6), converts sRGB to CIELAB, and
//! handles the two binary container formats used across the pipeline:
//!
//! - `FTEN`: feature tensors (`u32` version, width, height, map count, then
//!   `f32` samples, map-planar and row-major), all little-endian.
//! - `SPXL`: superpixel label maps (`u32` version, width, height, then `u32`
//!   labels row-major), all little-endian.
//!
//! Label maps can also be exported as 16-bit PGM for interchange with other
//! tools, and 16-bit PGMs are accepted as ground-truth segmentations.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::slic::SuperpixelMap;

const FTEN_MAGIC: &[u8; 4] = b"FTEN";
const SPXL_MAGIC: &[u8; 4] = b"SPXL";
pub(crate) const FORMAT_VERSION: u32 = 1;

/// 8-bit image, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::WrongChannelCount { expected: 3, found: channels });
        }
        if data.len() != width * height * channels {
            return Err(Error::LengthMismatch {
                expected: width * height * channels,
                found: data.len(),
            });
        }
        Ok(RawImage { width, height, channels, data })
    }

    /// Expands a gray image to three identical channels; RGB images are cloned.
    pub fn to_rgb(&self) -> RawImage {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RawImage { width: self.width, height: self.height, channels: 3, data }
    }
}

/// Real-valued image with named channels, stored channel-planar.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl MultiChannelImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height * names.len() {
            return Err(Error::LengthMismatch {
                expected: width * height * names.len(),
                found: data.len(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::ShapeMismatch(format!("duplicate channel name {name:?}")));
            }
        }
        Ok(MultiChannelImage { width, height, data, names })
    }

    /// Builds an image from individual planes of `width * height` samples.
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * planes.len());
        let mut names = Vec::with_capacity(planes.len());
        for (name, plane) in planes {
            if plane.len() != width * height {
                return Err(Error::LengthMismatch { expected: width * height, found: plane.len() });
            }
            data.extend_from_slice(&plane);
            names.push(name);
        }
        Self::new(width, height, data, names)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel_count(&self) -> usize {
        self.names.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn channel_names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|c| self.channel(c))
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + y * self.width + x]
    }

    /// Copies the feature vector of pixel `index` (row-major) into `out`.
    #[inline]
    pub fn pixel_into(&self, index: usize, out: &mut [f64]) {
        let n = self.pixel_count();
        for (c, v) in out.iter_mut().enumerate() {
            *v = self.data[c * n + index];
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.channel_count()];
        self.pixel_into(y * self.width + x, &mut out);
        out
    }

    /// Interleaved copy (`pixel_count * channel_count`, pixel-major), which is
    /// the layout the clustering loops read from.
    pub fn interleaved(&self) -> Vec<f64> {
        let n = self.pixel_count();
        let c = self.channel_count();
        let mut out = vec![0.0; n * c];
        for ch in 0..c {
            let plane = self.channel(ch);
            for (i, &v) in plane.iter().enumerate() {
                out[i * c + ch] = v;
            }
        }
        out
    }

    /// Keeps only the first `count` channels.
    pub fn truncate_channels(&self, count: usize) -> MultiChannelImage {
        let count = count.min(self.channel_count());
        MultiChannelImage {
            width: self.width,
            height: self.height,
            data: self.data[..count * self.pixel_count()].to_vec(),
            names: self.names[..count].to_vec(),
        }
    }
}

/// Stack of real-valued feature maps, map-planar and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub width: usize,
    pub height: usize,
    pub map_count: usize,
    pub data: Vec<f32>,
}

impl FeatureTensor {
    pub fn new(width: usize, height: usize, map_count: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * map_count {
            return Err(Error::LengthMismatch {
                expected: width * height * map_count,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature tensor holds non-finite values".into()));
        }
        Ok(FeatureTensor { width, height, map_count, data })
    }

    pub fn map(&self, m: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[m * n..(m + 1) * n]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, m: usize) -> f32 {
        self.data[(m * self.height + y) * self.width + x]
    }
}

// ---------------------------------------------------------------------------
// netpbm

struct NetpbmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_netpbm_header(bytes: &[u8]) -> Result<NetpbmHeader> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::MalformedHeader("missing netpbm magic".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::MalformedHeader("header ends early".into())),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!("expected a number at byte {start}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("number out of range: {text}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("invalid maxval {maxval}")));
    }
    Ok(NetpbmHeader {
        magic,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_offset: pos,
    })
}

/// Decodes an 8-bit binary PGM (P5) or PPM (P6).
pub fn decode_netpbm(bytes: &[u8]) -> Result<RawImage> {
    let header = parse_netpbm_header(bytes)?;
    let channels = match &header.magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unsupported netpbm type {}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    if header.maxval > 255 {
        return Err(Error::UnsupportedDepth(header.maxval));
    }
    let expected = header.width * header.height * channels;
    let payload = &bytes[header.data_offset..];
    if payload.len() < expected {
        return Err(Error::TruncatedData { expected, found: payload.len() });
    }
    RawImage::new(header.width, header.height, channels, payload[..expected].to_vec())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RawImage> {
    decode_netpbm(&fs::read(path)?)
}

/// Gray image with up to 16-bit samples, used for ground-truth segmentations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage16 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

/// Decodes a P5 PGM with either 8-bit or 16-bit (big-endian) samples.
pub fn decode_pgm16(bytes: &[u8]) -> Result<GrayImage16> {
    let header = parse_netpbm_header(bytes)?;
    if &header.magic != b"P5" {
        return Err(Error::MalformedHeader("expected a P5 PGM".into()));
    }
    let n = header.width * header.height;
    let payload = &bytes[header.data_offset..];
    let data = if header.maxval > 255 {
        if payload.len() < 2 * n {
            return Err(Error::TruncatedData { expected: 2 * n, found: payload.len() });
        }
        payload[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        if payload.len() < n {
            return Err(Error::TruncatedData { expected: n, found: payload.len() });
        }
        payload[..n].iter().map(|&v| v as u16).collect()
    };
    Ok(GrayImage16 { width: header.width, height: header.height, data })
}

pub fn load_pgm16(path: impl AsRef<Path>) -> Result<GrayImage16> {
    decode_pgm16(&fs::read(path)?)
}

pub fn encode_netpbm(img: &RawImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn save_image(path: impl AsRef<Path>, img: &RawImage) -> Result<()> {
    fs::write(path, encode_netpbm(img))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// color

// sRGB primaries to XYZ (D65).
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

fn srgb_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one sRGB triple to CIELAB (D65, L in [0, 100]).
pub fn srgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    let mut white = [0.0; 3];
    for (row, (x, w)) in RGB_TO_XYZ.iter().zip(xyz.iter_mut().zip(white.iter_mut())) {
        *x = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
        // reference white is the image of (1,1,1) so neutral grays map to a = b = 0
        *w = row[0] + row[1] + row[2];
    }
    let fx = lab_f(xyz[0] / white[0]);
    let fy = lab_f(xyz[1] / white[1]);
    let fz = lab_f(xyz[2] / white[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn rgb_to_lab(img: &RawImage) -> Result<MultiChannelImage> {
    if img.channels != 3 {
        return Err(Error::WrongChannelCount { expected: 3, found: img.channels });
    }
    let n = img.width * img.height;
    let mut data = vec![0.0; 3 * n];
    for (i, px) in img.data.chunks_exact(3).enumerate() {
        let lab = srgb_pixel_to_lab([px[0], px[1], px[2]]);
        data[i] = lab[0];
        data[n + i] = lab[1];
        data[2 * n + i] = lab[2];
    }
    MultiChannelImage::new(img.width, img.height, data, vec!["L".into(), "a".into(), "b".into()])
}

// ---------------------------------------------------------------------------
// feature maps

/// Nearest-neighbor upscaling of every map to `target_w x target_h`.
pub fn upscale_nearest(t: &FeatureTensor, target_w: usize, target_h: usize) -> Result<FeatureTensor> {
    if target_w < t.width || target_h < t.height {
        return Err(Error::Downscale {
            src_w: t.width,
            src_h: t.height,
            dst_w: target_w,
            dst_h: target_h,
        });
    }
    if target_w == t.width && target_h == t.height {
        return Ok(t.clone());
    }
    let src_x: Vec<usize> = (0..target_w).map(|x| x * t.width / target_w).collect();
    let mut data = Vec::with_capacity(target_w * target_h * t.map_count);
    for m in 0..t.map_count {
        let map = t.map(m);
        for y in 0..target_h {
            let row = &map[(y * t.height / target_h) * t.width..][..t.width];
            data.extend(src_x.iter().map(|&sx| row[sx]));
        }
    }
    Ok(FeatureTensor { width: target_w, height: target_h, map_count: t.map_count, data })
}

/// Appends the maps selected by `mask` as channels named `f<m>`.
pub fn concat_channels(
    img: &MultiChannelImage,
    t: &FeatureTensor,
    mask: &[bool],
) -> Result<MultiChannelImage> {
    concat_channels_named(img, t, mask, "f")
}

/// Same as [`concat_channels`] with a custom channel-name prefix, for stacking
/// several feature tensors onto one image.
pub fn concat_channels_named(
    img: &MultiChannelImage,
    t: &FeatureTensor,
    mask: &[bool],
    prefix: &str,
) -> Result<MultiChannelImage> {
    if t.width != img.width || t.height != img.height {
        return Err(Error::ShapeMismatch(format!(
            "feature tensor {}x{} vs image {}x{}",
            t.width, t.height, img.width, img.height
        )));
    }
    if mask.len() != t.map_count {
        return Err(Error::ShapeMismatch(format!(
            "mask has {} entries for {} maps",
            mask.len(),
            t.map_count
        )));
    }
    let mut data = img.data.clone();
    let mut names = img.names.clone();
    for (m, _) in mask.iter().enumerate().filter(|(_, &keep)| keep) {
        data.extend(t.map(m).iter().map(|&v| v as f64));
        names.push(format!("{prefix}{m}"));
    }
    MultiChannelImage::new(img.width, img.height, data, names)
}

// ---------------------------------------------------------------------------
// binary containers

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::TruncatedData { expected: offset + 4, found: bytes.len() })
}

pub(crate) fn check_magic(bytes: &[u8], magic: &'static [u8; 4]) -> Result<()> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned();
        return Err(Error::BadMagic {
            expected: std::str::from_utf8(magic).unwrap_or("?"),
            found,
        });
    }
    Ok(())
}

pub(crate) fn check_version(bytes: &[u8]) -> Result<()> {
    let version = read_u32(bytes, 4)?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { expected: FORMAT_VERSION, found: version });
    }
    Ok(())
}

pub fn encode_feature_tensor(t: &FeatureTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * t.data.len());
    out.extend_from_slice(FTEN_MAGIC);
    for v in [FORMAT_VERSION, t.width as u32, t.height as u32, t.map_count as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_feature_tensor(bytes: &[u8]) -> Result<FeatureTensor> {
    check_magic(bytes, FTEN_MAGIC)?;
    check_version(bytes)?;
    let width = read_u32(bytes, 8)? as usize;
    let height = read_u32(bytes, 12)? as usize;
    let maps = read_u32(bytes, 16)? as usize;
    let count = width * height * maps;
    let expected = 20 + 4 * count;
    if bytes.len() < expected {
        return Err(Error::TruncatedData { expected, found: bytes.len() });
    }
    let data = bytes[20..expected]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    FeatureTensor::new(width, height, maps, data)
}

pub fn write_feature_file(path: impl AsRef<Path>, t: &FeatureTensor) -> Result<()> {
    fs::write(path, encode_feature_tensor(t))?;
    Ok(())
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureTensor> {
    decode_feature_tensor(&fs::read(path)?)
}

pub fn encode_labelmap(map: &SuperpixelMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * map.labels().len());
    out.extend_from_slice(SPXL_MAGIC);
    for v in [FORMAT_VERSION, map.width() as u32, map.height() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in map.labels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_labelmap(bytes: &[u8]) -> Result<SuperpixelMap> {
    check_magic(bytes, SPXL_MAGIC)?;
    check_version(bytes)?;
    let width = read_u32(bytes, 8)? as usize;
    let height = read_u32(bytes, 12)? as usize;
    let expected = 16 + 4 * width * height;
    if bytes.len() < expected {
        return Err(Error::TruncatedData { expected, found: bytes.len() });
    }
    let labels = bytes[16..expected]
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    SuperpixelMap::new(width, height, labels)
}

pub fn write_labelmap(path: impl AsRef<Path>, map: &SuperpixelMap) -> Result<()> {
    fs::write(path, encode_labelmap(map))?;
    Ok(())
}

pub fn read_labelmap(path: impl AsRef<Path>) -> Result<SuperpixelMap> {
    decode_labelmap(&fs::read(path)?)
}

/// 16-bit PGM (maxval 65535, big-endian samples).
pub fn encode_labelmap_pgm16(map: &SuperpixelMap) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n65535\n", map.width(), map.height()).into_bytes();
    for &label in map.labels() {
        let v = u16::try_from(label).map_err(|_| Error::LabelOverflow(label))?;
        out.extend_from_slice(&v.to_be_bytes());
    }
    Ok(out)
}

pub fn export_labelmap_pgm(path: impl AsRef<Path>, map: &SuperpixelMap) -> Result<()> {
    fs::write(path, encode_labelmap_pgm16(map)?)?;
    Ok(())
}

/// Reads a label map from either an SPXL file or a (8- or 16-bit) PGM,
/// deciding by the leading magic bytes.
pub fn read_label_source(path: impl AsRef<Path>) -> Result<SuperpixelMap> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(SPXL_MAGIC) {
        decode_labelmap(&bytes)
    } else {
        let gray = decode_pgm16(&bytes)?;
        SuperpixelMap::new(gray.width, gray.height, gray.data.iter().map(|&v| v as u32).collect())
    }
}

/// Copy of `img` with superpixel boundary pixels painted red.
pub fn boundary_overlay(img: &RawImage, map: &SuperpixelMap) -> Result<RawImage> {
    if img.width != map.width() || img.height != map.height() {
        return Err(Error::DimMismatch(format!(
            "image {}x{} vs label map {}x{}",
            img.width,
            img.height,
            map.width(),
            map.height()
        )));
    }
    let mut out = img.to_rgb();
    let edges = crate::metrics::boundary_pixels(map);
    for (px, _) in out.data.chunks_exact_mut(3).zip(&edges).filter(|(_, &e)| e) {
        px.copy_from_slice(&[255, 0, 0]);
    }
    Ok(out)
}
