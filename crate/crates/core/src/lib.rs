//! Superpixel segmentation with deep image features.
//!
//! The crate covers the whole pipeline around SLIC-style clustering:
//!
//! - [`imgio`]: netpbm images, CIELAB conversion, feature tensors and label maps
//! - [`features`]: a two-layer wavelet scattering transform producing per-pixel
//!   texture features
//! - [`slic`]: SLIC with a per-channel weighted color distance, so feature maps
//!   concatenated to the Lab image take part in the clustering
//! - [`nn`]: a small dense network toolkit with the pixel classifier and the
//!   distance-module regression networks
//! - [`trainpix`]: the bottom-up superpixel algorithm that assigns every pixel to
//!   one of its `Q` nearest clusters using a classifier
//! - [`labels`]: training-label generation from semantic segmentation ground truth
//! - [`metrics`]: boundary recall, mean distance to edge, undersegmentation
//!   error, compactness and achievable IoU
//! - [`config`] and [`cli`]: the batch front-end behind the `superpix` binary
//!
//! ```no_run
//! use superpix::imgio::{load_image, rgb_to_lab};
//! use superpix::slic::{slic_segment, SlicParams};
//!
//! let img = rgb_to_lab(&load_image("input.ppm").unwrap()).unwrap();
//! let params = SlicParams::new(16, 10.0);
//! let map = slic_segment(&img, &params).unwrap();
//! println!("{} superpixels", map.num_labels());
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod imgio;
pub mod labels;
pub mod metrics;
pub mod nn;
pub mod slic;
#[cfg(test)]
mod testutil;
pub mod trainpix;

pub use error::{Error, Result};
