use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::mlp::MlpModel;
use crate::targets::{Dataset, Provenance};

/// An RGB image with channel values in `[0, 1]`, indexed `(row, col, channel)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub pixels: Array3<f64>,
}

impl RgbImage {
    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    /// Largest channel value anywhere in the image.
    pub fn max_intensity(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }
}

pub fn read_png(path: &Path) -> Result<RgbImage> {
    let open = |e: std::io::Error| Error::Image(format!("{}: {e}", path.display()));
    let file = File::open(path).map_err(open)?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let bad = |e: png::DecodingError| Error::Image(format!("{}: {e}", path.display()));
    let mut reader = decoder.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Image(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::Image(format!(
                "{}: palette was not expanded",
                path.display()
            )))
        }
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let pixels = Array3::from_shape_fn((h, w, 3), |(r, c, ch)| {
        let base = r * info.line_size + c * channels;
        let src = if channels < 3 { 0 } else { ch };
        f64::from(buf[base + src]) / 255.0
    });
    Ok(RgbImage { pixels })
}

/// Writes an 8-bit RGB PNG, clamping to `[0, 1]`.
pub fn write_png(path: &Path, image: &RgbImage) -> Result<()> {
    let (h, w, _) = image.pixels.dim();
    let mut bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut bytes, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let err = |e: png::EncodingError| Error::Image(e.to_string());
        let mut writer = enc.write_header().map_err(err)?;
        let data: Vec<u8> = image
            .pixels
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        writer.write_image_data(&data).map_err(err)?;
    }
    write_atomic(path, &bytes)
}

/// A smooth color gradient overlaid with diagonal stripes of period
/// `size / 6` pixels.
pub fn synthetic_image(size: usize) -> RgbImage {
    let n = (size.max(2) - 1) as f64;
    let pixels = Array3::from_shape_fn((size, size, 3), |(r, c, ch)| {
        let (x, y) = (c as f64 / n, r as f64 / n);
        let gradient = match ch {
            0 => x,
            1 => y,
            _ => 1.0 - 0.5 * (x + y),
        };
        let stripes = 0.5 + 0.5 * (2.0 * PI * 6.0 * (x + 0.5 * y)).sin();
        0.6 * gradient + 0.4 * stripes
    });
    RgbImage { pixels }
}

/// The centered `size × size` window.
pub fn crop_center(image: &RgbImage, size: usize) -> Result<RgbImage> {
    let (h, w) = (image.height(), image.width());
    if size == 0 || h < size || w < size {
        return Err(Error::Image(format!(
            "cannot crop a {size}x{size} window from a {w}x{h} image"
        )));
    }
    let (r0, c0) = ((h - size) / 2, (w - size) / 2);
    Ok(RgbImage {
        pixels: image
            .pixels
            .slice(ndarray::s![r0..r0 + size, c0..c0 + size, ..])
            .to_owned(),
    })
}

/// Training and test pixels of one image.
#[derive(Clone, Debug)]
pub struct ImageData {
    /// Pixels with both coordinates even.
    pub train: Dataset,
    /// Pixels with both coordinates odd.
    pub test: Dataset,
    pub max_intensity: f64,
    pub size: usize,
}

/// Pixel `(row, col)` maps to `(col, row) / (size − 1)` in `[0, 1]²`.
pub fn pixel_coordinates(size: usize, row: usize, col: usize) -> [f64; 2] {
    let n = (size.max(2) - 1) as f64;
    [col as f64 / n, row as f64 / n]
}

/// Splits a square image by coordinate parity.
pub fn split_parity(image: &RgbImage) -> Result<ImageData> {
    let size = image.height();
    if image.width() != size || size < 2 {
        return Err(Error::Image(format!(
            "expected a square image of side at least 2, got {}x{}",
            image.width(),
            size
        )));
    }
    let part = |parity: usize| -> Result<Dataset> {
        let idx: Vec<(usize, usize)> = (0..size)
            .filter(|r| r % 2 == parity)
            .flat_map(|r| (0..size).filter(|c| c % 2 == parity).map(move |c| (r, c)))
            .collect();
        let x = Array2::from_shape_fn((idx.len(), 2), |(i, j)| {
            pixel_coordinates(size, idx[i].0, idx[i].1)[j]
        });
        let y = Array2::from_shape_fn((idx.len(), 3), |(i, ch)| {
            image.pixels[[idx[i].0, idx[i].1, ch]]
        });
        Dataset::new(x, y, Provenance::Image)
    };
    Ok(ImageData {
        train: part(0)?,
        test: part(1)?,
        max_intensity: image.max_intensity(),
        size,
    })
}

/// Reads, crops and splits an image file.
pub fn ingest_image(path: &Path, crop: usize) -> Result<ImageData> {
    split_parity(&crop_center(&read_png(path)?, crop)?)
}

/// Evaluates an RGB model on every pixel of a `size × size` grid.
pub fn render(model: &MlpModel, size: usize) -> Result<RgbImage> {
    let coords = Array2::from_shape_fn((size * size, 2), |(i, j)| {
        pixel_coordinates(size, i / size, i % size)[j]
    });
    let out = model.forward(coords.view())?;
    if out.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            what: "rendered channels",
            expected: 3,
            found: out.ncols(),
        });
    }
    Ok(RgbImage {
        pixels: Array3::from_shape_fn((size, size, 3), |(r, c, ch)| out[[r * size + c, ch]]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_split_of_four_by_four() {
        let d = split_parity(&synthetic_image(4)).unwrap();
        assert_eq!((d.train.len(), d.test.len()), (4, 4));
        for a in d.train.inputs.rows() {
            assert!(d.test.inputs.rows().into_iter().all(|b| a != b));
        }
    }

    #[test]
    fn synthetic_image_is_in_range() {
        let img = synthetic_image(64);
        assert!(img.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(img.max_intensity() > 0.9);
    }

    #[test]
    fn crop_rejects_small_images() {
        assert!(crop_center(&synthetic_image(8), 16).is_err());
        assert_eq!(crop_center(&synthetic_image(9), 4).unwrap().height(), 4);
    }

    #[test]
    fn png_round_trip_at_eight_bits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.png");
        let img = synthetic_image(10);
        write_png(&p, &img).unwrap();
        let back = read_png(&p).unwrap();
        assert!(back
            .pixels
            .iter()
            .zip(img.pixels.iter())
            .all(|(a, b)| (a - b).abs() <= 0.5 / 255.0 + 1e-12));
    }
}
