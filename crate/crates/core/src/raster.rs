//! Raster container, mirror padding and region sample extraction.

use crate::error::{invalid, Error, Result};
use crate::masks::RegionMask;

/// A single-band image of non-negative intensities stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("raster dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != width * height {
            return invalid(format!(
                "{} values supplied for a {width}x{height} raster",
                data.len()
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!(
                "pixel {i} has intensity {}, expected a finite value >= 0",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Intensities at `center + offset` for every offset of `mask`, in mask order.
    pub fn extract(&self, center: (usize, usize), mask: &RegionMask) -> Result<PixelSample> {
        let mut values = Vec::with_capacity(mask.len());
        for &(dr, dc) in mask.offsets() {
            let r = center.0 as i64 + dr as i64;
            let c = center.1 as i64 + dc as i64;
            if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
                return Err(Error::OutOfBounds {
                    row: r,
                    col: c,
                    height: self.height,
                    width: self.width,
                });
            }
            values.push(self.get(r as usize, c as usize));
        }
        PixelSample::new(values)
    }
}

/// Reflects an index about the edges of `0..len` without repeating the edge
/// sample. Axes of length one replicate their single value.
fn reflect(i: i64, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let n = len as i64;
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Pads `img` by `margin` pixels on every side with a mirror reflection about
/// the edge pixels.
pub fn pad_mirror(img: &Raster, margin: usize) -> Result<Raster> {
    if margin == 0 {
        return Ok(img.clone());
    }
    for (name, dim) in [("width", img.width), ("height", img.height)] {
        if dim > 1 && margin >= dim {
            return invalid(format!(
                "mirror margin {margin} must be smaller than the image {name} {dim}"
            ));
        }
    }
    let m = margin as i64;
    let w = img.width + 2 * margin;
    let h = img.height + 2 * margin;
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        let src_r = reflect(r as i64 - m, img.height);
        let src = img.row(src_r);
        for c in 0..w {
            data.push(src[reflect(c as i64 - m, img.width)]);
        }
    }
    Ok(Raster {
        width: w,
        height: h,
        data,
    })
}

/// A non-empty sample of observed intensities taken from one region.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSample {
    values: Vec<f64>,
}

impl PixelSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("a pixel sample needs at least one value");
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!(
                "sample value {v} is not a finite non-negative intensity"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        crate::sum::mean(&self.values)
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Concatenation of two samples, used for pooled estimates.
    pub fn pooled(&self, other: &PixelSample) -> PixelSample {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        PixelSample { values }
    }
}
