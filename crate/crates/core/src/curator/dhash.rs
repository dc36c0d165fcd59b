use std::path::Path;

use crate::numcore::{bilinear_resize, Tensor};

use super::{CuratorError, Result};

const HASH_W: usize = 9;
const HASH_H: usize = 8;

/// Difference hash of a grayscale raster given as `[h, w]`.
///
/// The raster is resized to 9×8 (bilinear), then bit `r·8 + c` is set when
/// pixel `(r, c)` is darker than `(r, c + 1)`. Bit 0 is the most
/// significant bit of the result.
pub fn dhash(gray: &Tensor) -> Result<u64> {
    if gray.rank() != 2 || gray.is_empty() {
        return Err(CuratorError::Image(format!("raster shape {:?}", gray.shape())));
    }
    let (h, w) = (gray.shape()[0], gray.shape()[1]);
    let small = bilinear_resize(&gray.reshape(&[h, w, 1])?, HASH_H, HASH_W)?;
    let p = |r: usize, c: usize| small.data()[r * HASH_W + c];
    let mut hash = 0u64;
    for r in 0..HASH_H {
        for c in 0..HASH_W - 1 {
            hash = (hash << 1) | u64::from(p(r, c) < p(r, c + 1));
        }
    }
    Ok(hash)
}

/// Luma with ITU-R 601 weights, alpha ignored.
pub fn decode_gray(bytes: &[u8]) -> Result<Tensor> {
    let img = image::load_from_memory(bytes).map_err(|e| CuratorError::Image(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb
        .pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect();
    Ok(Tensor::new(vec![h as usize, w as usize], data)?)
}

pub fn dhash_bytes(bytes: &[u8]) -> Result<u64> {
    dhash(&decode_gray(bytes)?)
}

pub fn dhash_file(path: impl AsRef<Path>) -> Result<u64> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CuratorError::Image(format!("{}: {e}", path.display())))?;
    dhash_bytes(&bytes).map_err(|e| CuratorError::Image(format!("{}: {e}", path.display())))
}

pub fn to_hex(hash: u64) -> String {
    format!("{hash:016x}")
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_zero() {
        assert_eq!(dhash(&Tensor::full(&[30, 20], 7.0)).unwrap(), 0);
    }

    #[test]
    fn rising_ramp_is_all_ones() {
        let t = Tensor::from_fn(&[5, 40], |i| (i % 40) as f64);
        assert_eq!(dhash(&t).unwrap(), u64::MAX);
        assert_eq!(to_hex(u64::MAX), "ffffffffffffffff");
    }

    #[test]
    fn png_decodes() {
        let img = image::GrayImage::from_fn(12, 12, |x, _| image::Luma([(x * 20) as u8]));
        let mut buf = std::io::Cursor::new(Vec::new());
        img.write_to(&mut buf, image::ImageFormat::Png).unwrap();
        assert_eq!(dhash_bytes(buf.get_ref()).unwrap(), u64::MAX);
        assert!(dhash_bytes(b"not an image").is_err());
    }
}
