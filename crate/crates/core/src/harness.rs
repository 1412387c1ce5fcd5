//! Monte Carlo protocol: phantom, speckle corruption, filtering and
//! ground-truth metrics for every (situation, replicate) pair.
//!
//! Replicate `k` of situation `s` always draws its speckle from stream
//! `(seed, s << 32 | k)`, so every filter sees the same corrupted image and
//! results do not depend on scheduling or thread count.

use std::fmt::Write;

use rayon::prelude::*;

use crate::divergence::{DistanceKind, SharedLooks, TestConfig};
use crate::error::{invalid, Result};
use crate::filter::{filter_image, FilterSpec};
use crate::geometry::PhantomGeometry;
use crate::lee::{lee_filter, LeeSpec};
use crate::masks::Window;
use crate::metrics::{csv_cell, MetricReport};
use crate::raster::Raster;
use crate::rng::SpeckleStream;

/// One row of the simulated-situation table: looks, strip level and
/// background mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Situation {
    pub id: u8,
    pub looks: f64,
    pub strip: f64,
    pub background: f64,
}

pub const SITUATIONS: [Situation; 4] = [
    Situation { id: 1, looks: 1.0, strip: 200.0, background: 70.0 },
    Situation { id: 2, looks: 3.0, strip: 195.0, background: 55.0 },
    Situation { id: 3, looks: 5.0, strip: 150.0, background: 30.0 },
    Situation { id: 4, looks: 7.0, strip: 170.0, background: 35.0 },
];

impl Situation {
    pub fn by_id(id: u8) -> Result<Situation> {
        SITUATIONS
            .iter()
            .find(|s| s.id == id)
            .copied()
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown situation {id}, expected 1..4")))
    }
}

/// Noiseless phantom: features at the strip level, the rest at the
/// background mean.
pub fn make_phantom(geom: &PhantomGeometry, sit: &Situation) -> Raster {
    let mut data = vec![sit.background; geom.width * geom.height];
    for (r, c) in geom.feature_pixels() {
        data[r * geom.width + c] = sit.strip;
    }
    Raster::new(geom.width, geom.height, data).expect("validated geometry")
}

/// Multiplies every pixel by independent unit-mean Γ(L, L) speckle, i.e.
/// replaces a pixel of value λ by a draw from Γ(L, L/λ).
pub fn corrupt(phantom: &Raster, looks: f64, stream: &mut SpeckleStream) -> Result<Raster> {
    if !(looks.is_finite() && looks >= 1.0) {
        return invalid(format!("looks must be >= 1, got {looks}"));
    }
    let data = phantom.data().iter().map(|&v| v * stream.speckle(looks)).collect();
    Raster::new(phantom.width(), phantom.height(), data)
}

pub fn stream_id(situation: u8, replicate: u32) -> u64 {
    (situation as u64) << 32 | replicate as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterChoice {
    /// The corrupted image itself, as a reference row.
    Identity,
    Stochastic { kind: DistanceKind, window: Window },
    Lee { window: usize },
}

impl FilterChoice {
    pub fn name(&self) -> &'static str {
        match self {
            FilterChoice::Identity => "none",
            FilterChoice::Stochastic { kind, .. } => kind.name(),
            FilterChoice::Lee { .. } => "lee",
        }
    }

    pub fn window(&self) -> usize {
        match self {
            FilterChoice::Identity => 1,
            FilterChoice::Stochastic { window, .. } => window.side(),
            FilterChoice::Lee { window } => *window,
        }
    }

    fn uses_level(&self) -> bool {
        matches!(self, FilterChoice::Stochastic { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub situations: Vec<u8>,
    pub replicates: u32,
    pub filters: Vec<FilterChoice>,
    /// Whole-series significance levels α.
    pub levels: Vec<f64>,
    pub seed: u64,
    pub geometry: PhantomGeometry,
    pub renyi_order: f64,
    pub dof: u32,
    pub shared_looks: SharedLooks,
}

impl RunPlan {
    /// Lee and Hellinger at both window sizes.
    pub fn default_filters() -> Vec<FilterChoice> {
        vec![
            FilterChoice::Lee { window: 5 },
            FilterChoice::Lee { window: 7 },
            FilterChoice::Stochastic { kind: DistanceKind::Hellinger, window: Window::W5 },
            FilterChoice::Stochastic { kind: DistanceKind::Hellinger, window: Window::W7 },
        ]
    }

    /// 128×128 phantom, 100 replicates per situation, α = 0.01.
    pub fn standard(seed: u64) -> Self {
        Self::sized(seed, 128, 100)
    }

    /// 64×64 phantom, 20 replicates per situation.
    pub fn fast(seed: u64) -> Self {
        Self::sized(seed, 64, 20)
    }

    fn sized(seed: u64, size: usize, replicates: u32) -> Self {
        RunPlan {
            situations: vec![1, 2, 3, 4],
            replicates,
            filters: Self::default_filters(),
            levels: vec![0.01],
            seed,
            geometry: PhantomGeometry::standard(size).expect("standard size"),
            renyi_order: 0.5,
            dof: 1,
            shared_looks: SharedLooks::Central,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return invalid("a plan needs at least one replicate");
        }
        if self.filters.is_empty() {
            return invalid("a plan needs at least one filter");
        }
        if self.situations.is_empty() {
            return invalid("a plan needs at least one situation");
        }
        if self.levels.is_empty() {
            return invalid("a plan needs at least one significance level");
        }
        for &s in &self.situations {
            Situation::by_id(s)?;
        }
        for f in &self.filters {
            if let FilterChoice::Lee { window } = f {
                LeeSpec::new(*window, 1.0)?;
            }
        }
        for &alpha in &self.levels {
            self.test_config(DistanceKind::Hellinger, alpha).validate()?;
        }
        self.test_config(DistanceKind::Renyi, self.levels[0]).validate()?;
        self.geometry.validate()
    }

    fn test_config(&self, kind: DistanceKind, alpha: f64) -> TestConfig {
        TestConfig {
            renyi_order: self.renyi_order,
            dof: self.dof,
            shared_looks: self.shared_looks,
            ..TestConfig::new(kind, alpha)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRow {
    pub filter: &'static str,
    pub window: usize,
    pub level: f64,
    pub situation: u8,
    pub replicate: u32,
    pub report: MetricReport,
}

pub const CSV_HEADER: &str = "filter,window,level,situation,replicate,enl,line_contrast_error,edge_gradient,edge_variance,q_mean,q_std,beta_rho";

impl ProtocolRow {
    pub fn csv_line(&self) -> String {
        let r = &self.report;
        let metrics = [r.enl, r.line_contrast_error, r.edge_gradient, r.edge_variance, r.q_mean, r.q_std, r.beta_rho];
        let cells: Vec<String> = metrics.iter().map(|v| csv_cell(*v)).collect();
        format!(
            "{},{},{},{},{},{}",
            self.filter,
            self.window,
            self.level,
            self.situation,
            self.replicate,
            cells.join(",")
        )
    }
}

fn ground_truth(phantom: &Raster, test: &Raster, geom: &PhantomGeometry) -> MetricReport {
    let mut r = MetricReport::default();
    r.fill_geometry(phantom, test, geom);
    let q = crate::metrics::q_index(phantom, test).ok();
    r.q_mean = q.map(|q| q.mean);
    r.q_std = q.map(|q| q.std);
    r.beta_rho = crate::metrics::beta_rho(phantom, test).ok();
    r
}

fn run_replicate(plan: &RunPlan, sit: &Situation, replicate: u32) -> Vec<ProtocolRow> {
    let phantom = make_phantom(&plan.geometry, sit);
    let mut stream = SpeckleStream::new(plan.seed, stream_id(sit.id, replicate));
    let noisy = corrupt(&phantom, sit.looks, &mut stream).expect("situation looks are valid");
    let mut rows = Vec::new();
    for f in &plan.filters {
        let run = |alpha: f64| -> MetricReport {
            let out = match *f {
                FilterChoice::Identity => Ok(noisy.clone()),
                FilterChoice::Lee { window } => {
                    LeeSpec::new(window, sit.looks).and_then(|spec| lee_filter(&noisy, &spec))
                }
                FilterChoice::Stochastic { kind, window } => FilterSpec::new(window, plan.test_config(kind, alpha))
                    .and_then(|spec| filter_image(&noisy, &spec)),
            };
            match out {
                Ok(img) => ground_truth(&phantom, &img, &plan.geometry),
                Err(_) => MetricReport::default(),
            }
        };
        // level-free filters are computed once and repeated per level
        let shared = (!f.uses_level()).then(|| run(plan.levels[0]));
        for &alpha in &plan.levels {
            let report = shared.unwrap_or_else(|| run(alpha));
            rows.push(ProtocolRow {
                filter: f.name(),
                window: f.window(),
                level: alpha,
                situation: sit.id,
                replicate,
                report,
            });
        }
    }
    rows
}

/// Runs every (situation, replicate) of `plan`; rows come back ordered by
/// situation, replicate, filter and level.
pub fn run_protocol(plan: &RunPlan) -> Result<Vec<ProtocolRow>> {
    plan.validate()?;
    let mut tasks = Vec::new();
    for &s in &plan.situations {
        let sit = Situation::by_id(s)?;
        for k in 0..plan.replicates {
            tasks.push((sit, k));
        }
    }
    let rows: Vec<Vec<ProtocolRow>> = tasks
        .par_iter()
        .map(|(sit, k)| run_replicate(plan, sit, *k))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// CSV text with optional `#` comment lines before the header.
pub fn to_csv(rows: &[ProtocolRow], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    writeln!(out, "{CSV_HEADER}").unwrap();
    for row in rows {
        writeln!(out, "{}", row.csv_line()).unwrap();
    }
    out
}
