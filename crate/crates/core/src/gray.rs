//! Single-channel 8-bit raster shared by every image operation.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat};
use thiserror::Error;

pub const BLACK: u8 = 0;
pub const WHITE: u8 = 255;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("pixel buffer holds {len} bytes, expected {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("image has zero area")]
    Empty,
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("png codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty);
        }
        if data.len() != width * height {
            return Err(ImageError::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// # Panics
    /// Panics on zero width or height.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image must have positive area");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel read with coordinates clamped into the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn same_shape(&self, other: &ImageGray) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// True when every pixel is 0 or 255.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == BLACK || v == WHITE)
    }

    pub fn count_value(&self, value: u8) -> usize {
        self.data.iter().filter(|&&v| v == value).count()
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>, ImageError> {
        let buf = GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Decodes any PNG, converting color input to 8-bit luma.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_luma8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn read_png(path: &Path) -> Result<Self, ImageError> {
        Self::from_png_bytes(&std::fs::read(path)?)
    }

    pub fn write_png(&self, path: &Path) -> Result<Vec<u8>, ImageError> {
        let bytes = self.to_png_bytes()?;
        std::fs::write(path, &bytes)?;
        Ok(bytes)
    }
}
