//! Speckle reduction for intensity SAR images.
//!
//! The main filter compares the central block of a Nagao-Matsuyama window
//! against the eight surrounding sub-regions with a stochastic-distance test
//! under the Gamma speckle model, and averages the regions that pass. A Lee
//! filter baseline, the image quality measures used to compare the two, and a
//! seeded Monte Carlo harness are included.
//!
//! ```
//! use despeckle::{filter_image, FilterSpec, Raster, Window};
//!
//! let img = Raster::filled(16, 16, 3.0).unwrap();
//! let out = filter_image(&img, &FilterSpec::hellinger(Window::W5, 0.2)).unwrap();
//! assert_eq!(out, img);
//! ```

pub mod cli;
pub mod divergence;
pub mod error;
pub mod filter;
pub mod gamma;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod lee;
pub mod masks;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod special;
mod sum;

pub use divergence::{
    chi2_survival, hellinger_stat, kl_stat, renyi_stat, run_test, sidak_level, DistanceKind,
    SharedLooks, TestConfig, TestOutcome,
};
pub use error::{Error, Result};
pub use filter::{filter_image, filter_pixel, FilterSpec, PixelDecision};
pub use gamma::{density, log_density, mle, sample, GammaParams, MleFit, L_MAX};
pub use geometry::{PhantomGeometry, Rect};
pub use harness::{corrupt, make_phantom, run_protocol, FilterChoice, RunPlan, Situation};
pub use io::{read_raster, write_raster, RasterFormat};
pub use lee::{lee_filter, LeeSpec};
pub use masks::{nm_masks, RegionMask, Window};
pub use metrics::{
    beta_rho, edge_measures, enl, error_metrics, line_contrast, q_index, ErrorMetrics,
    MetricReport, QIndex,
};
pub use raster::{pad_mirror, PixelSample, Raster};
pub use rng::SpeckleStream;
