//! Lee local-statistics (MMSE) filter for multiplicative speckle.
//!
//! `ẑ = z̄ + W (z − z̄)` with `W = clamp(1 − C_u² / C_z², 0, 1)`, where
//! `C_u² = 1/L` is the squared speckle coefficient of variation and
//! `C_z² = s² / z̄²` is measured over the window.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::raster::{pad_mirror, Raster};
use crate::sum::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeeSpec {
    pub window: usize,
    pub nominal_looks: f64,
}

impl LeeSpec {
    pub fn new(window: usize, nominal_looks: f64) -> Result<Self> {
        let spec = Self {
            window,
            nominal_looks,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return invalid(format!("Lee window must be odd and >= 3, got {}", self.window));
        }
        if !(self.nominal_looks.is_finite() && self.nominal_looks >= 1.0) {
            return invalid(format!("nominal looks must be >= 1, got {}", self.nominal_looks));
        }
        Ok(())
    }
}

/// Lee gain for a window with mean `mean` and unbiased variance `var`.
pub fn lee_gain(mean: f64, var: f64, nominal_looks: f64) -> f64 {
    if mean <= 0.0 || var <= 0.0 {
        return 0.0;
    }
    let cz2 = var / (mean * mean);
    let cu2 = 1.0 / nominal_looks;
    (1.0 - cu2 / cz2).clamp(0.0, 1.0)
}

pub fn lee_filter(img: &Raster, spec: &LeeSpec) -> Result<Raster> {
    spec.validate()?;
    let side = spec.window;
    if img.width() < side || img.height() < side {
        return invalid(format!(
            "a {}x{} image is smaller than the {side}x{side} window",
            img.width(),
            img.height()
        ));
    }
    let radius = side / 2;
    let padded = pad_mirror(img, radius)?;
    let n = (side * side) as f64;
    let rows: Vec<Vec<f64>> = (0..img.height())
        .into_par_iter()
        .map(|r| {
            (0..img.width())
                .map(|c| {
                    let mut s = KahanSum::default();
                    for dr in 0..side {
                        for &v in &padded.row(r + dr)[c..c + side] {
                            s.add(v);
                        }
                    }
                    let mean = s.total() / n;
                    if mean == 0.0 {
                        return 0.0;
                    }
                    let mut ss = KahanSum::default();
                    for dr in 0..side {
                        for &v in &padded.row(r + dr)[c..c + side] {
                            ss.add((v - mean) * (v - mean));
                        }
                    }
                    let var = ss.total() / (n - 1.0);
                    let w = lee_gain(mean, var, spec.nominal_looks);
                    let z = img.get(r, c);
                    mean + w * (z - mean)
                })
                .collect()
        })
        .collect();
    Raster::new(img.width(), img.height(), rows.into_iter().flatten().collect())
}
