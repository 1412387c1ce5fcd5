//! Test-and-average speckle filter over Nagao-Matsuyama windows.
//!
//! For every pixel, the central block of its window is fitted under the Gamma
//! model and each of the eight surrounding regions is tested against it. The
//! output is the mean of all pixels in the central block and in the regions
//! whose test did not reject. Pixels are weighted equally, not regions.

use rayon::prelude::*;

use crate::divergence::{decide, statistic, SharedLooks, TestConfig, DistanceKind};
use crate::error::{invalid, Result};
use crate::gamma::{mle, mle_mean, GammaParams};
use crate::masks::{nm_masks, RegionMask, Window};
use crate::raster::{pad_mirror, Raster};
use crate::sum::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub window: Window,
    pub test: TestConfig,
}

impl FilterSpec {
    /// The number of tests is forced to eight, one per outer region.
    pub fn new(window: Window, mut test: TestConfig) -> Result<Self> {
        test.num_tests = 8;
        test.validate()?;
        Ok(Self { window, test })
    }

    pub fn hellinger(window: Window, overall_alpha: f64) -> Self {
        Self {
            window,
            test: TestConfig::new(DistanceKind::Hellinger, overall_alpha),
        }
    }

    pub fn masks(&self) -> &'static [RegionMask; 9] {
        nm_masks(self.window)
    }
}

/// Outcome for one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelDecision {
    pub value: f64,
    /// Acceptance of regions 2..=9, in region order.
    pub accepted: [bool; 8],
    /// The central block was constant, so no tests were run.
    pub degenerate: bool,
}

impl PixelDecision {
    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// Filtered value at `center` of an already padded raster.
pub fn filter_pixel(img: &Raster, center: (usize, usize), spec: &FilterSpec) -> Result<f64> {
    let eta = spec.test.level()?;
    filter_pixel_detailed(img, center, spec, eta).map(|d| d.value)
}

/// Like [`filter_pixel`] but reports which regions were accepted. `eta` is
/// the per-test level, normally `spec.test.level()`.
///
/// A region whose pixels are all zero cannot be fitted and counts as rejected.
pub fn filter_pixel_detailed(
    img: &Raster,
    center: (usize, usize),
    spec: &FilterSpec,
    eta: f64,
) -> Result<PixelDecision> {
    let masks = spec.masks();
    let central = img.extract(center, &masks[0])?;
    if central.is_constant() {
        return Ok(PixelDecision {
            value: central.values()[0],
            accepted: [false; 8],
            degenerate: true,
        });
    }
    let fit1 = mle(&central)?;
    let m = central.count();

    let mut acc = KahanSum::default();
    let mut pixels = m;
    for &v in central.values() {
        acc.add(v);
    }
    let mut accepted = [false; 8];
    for (k, mask) in masks[1..].iter().enumerate() {
        let region = img.extract(center, mask)?;
        // the statistics only read the means; the looks come from `shared`
        let Ok(mean_i) = mle_mean(&region) else {
            continue;
        };
        let shared = match spec.test.shared_looks {
            SharedLooks::Central => fit1.params.looks(),
            SharedLooks::Pooled => mle(&central.pooled(&region))?.params.looks(),
        };
        let params_i = GammaParams::new(shared, mean_i)?;
        let s = statistic(&spec.test, &fit1.params, &params_i, m, region.count(), shared)?;
        if !decide(s, spec.test.dof, eta)?.rejected {
            accepted[k] = true;
            pixels += region.count();
            for &v in region.values() {
                acc.add(v);
            }
        }
    }
    Ok(PixelDecision {
        value: acc.total() / pixels as f64,
        accepted,
        degenerate: false,
    })
}

fn check_size(img: &Raster, window: Window) -> Result<()> {
    let side = window.side();
    if img.width() < side || img.height() < side {
        return invalid(format!(
            "a {}x{} image is smaller than the {side}x{side} window",
            img.width(),
            img.height()
        ));
    }
    Ok(())
}

/// Per-pixel decisions for the whole image, row-major.
pub fn filter_decisions(img: &Raster, spec: &FilterSpec) -> Result<Vec<PixelDecision>> {
    spec.test.validate()?;
    check_size(img, spec.window)?;
    let radius = spec.window.radius();
    let padded = pad_mirror(img, radius)?;
    let eta = spec.test.level()?;
    let rows: Vec<Vec<PixelDecision>> = (0..img.height())
        .into_par_iter()
        .map(|r| {
            (0..img.width())
                .map(|c| filter_pixel_detailed(&padded, (r + radius, c + radius), spec, eta))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Filters every pixel once; output has the input's dimensions.
pub fn filter_image(img: &Raster, spec: &FilterSpec) -> Result<Raster> {
    let decisions = filter_decisions(img, spec)?;
    Raster::new(
        img.width(),
        img.height(),
        decisions.into_iter().map(|d| d.value).collect(),
    )
}
