//! 8-bit grayscale raster, row-major.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    values: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive"));
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidArgument("pixel buffer size mismatch"));
        }
        Ok(GrayImage {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![value; (width as usize) * (height as usize)],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.values[y as usize * self.width as usize + x as usize] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(GrayImage::new(4, 4, vec![0; 15]).is_err());
        assert!(GrayImage::new(0, 4, vec![]).is_err());
    }

    #[test]
    fn row_major_indexing() {
        let mut img = GrayImage::filled(3, 2, 0).unwrap();
        img.set(2, 1, 9);
        assert_eq!(img.get(2, 1), 9);
        assert_eq!(img.pixels()[5], 9);
    }
}
