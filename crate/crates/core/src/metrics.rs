//! Image quality measures, with and without a ground-truth phantom.

use std::fmt::Write;

use crate::error::{invalid, Error, Result};
use crate::geometry::PhantomGeometry;
use crate::raster::{pad_mirror, PixelSample, Raster};
use crate::sum::{self, KahanSum};

/// Gray-level constant of the contrast distortion measure.
pub const DCON_ALPHA: f64 = 23.0 / 255.0;

/// Side of the square windows the Q index is computed on.
pub const Q_WINDOW: usize = 8;

/// Equivalent number of looks, `(mean / stdev)²` with the unbiased variance.
pub fn enl(region: &PixelSample) -> Result<f64> {
    if region.count() < 2 {
        return invalid("ENL needs at least two pixels");
    }
    if region.is_constant() {
        return Err(Error::Degenerate("ENL of a constant region".into()));
    }
    let m = region.mean();
    Ok(m * m / sum::variance(region.values()))
}

fn gather(img: &Raster, pixels: &[(usize, usize)]) -> Vec<f64> {
    pixels.iter().map(|&(r, c)| img.get(r, c)).collect()
}

fn check_geometry(img: &Raster, geom: &PhantomGeometry) -> Result<()> {
    if img.height() != geom.height || img.width() != geom.width {
        return invalid(format!(
            "{}x{} image does not match the {}x{} geometry",
            img.width(),
            img.height(),
            geom.width,
            geom.height
        ));
    }
    Ok(())
}

fn line_contrast_of(img: &Raster, geom: &PhantomGeometry) -> Result<f64> {
    let probe = geom.contrast_probe()?;
    let mean = |px: &[(usize, usize)]| sum::mean(&gather(img, px));
    Ok(2.0 * mean(&probe.line) - mean(&probe.above) - mean(&probe.below))
}

/// `|contrast(img) − contrast(phantom)|` with `contrast = 2 x_ℓ − x_ℓ1 − x_ℓ2`
/// over the geometry's horizontal line and the rows flanking it.
pub fn line_contrast(img: &Raster, phantom: &Raster, geom: &PhantomGeometry) -> Result<f64> {
    check_geometry(img, geom)?;
    check_geometry(phantom, geom)?;
    Ok((line_contrast_of(img, geom)? - line_contrast_of(phantom, geom)?).abs())
}

fn edge_differences(img: &Raster, geom: &PhantomGeometry) -> Result<(f64, f64)> {
    let probe = geom.edge_probe()?;
    let a = gather(img, &probe.outside);
    let b = gather(img, &probe.inside);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate("edge bands need at least two pixels".into()));
    }
    Ok((
        (sum::mean(&a) - sum::mean(&b)).abs(),
        (sum::variance(&a) - sum::variance(&b)).abs(),
    ))
}

/// Edge gradient and edge variance, each as the deviation from the phantom's
/// own value across the geometry's edge bands.
pub fn edge_measures(img: &Raster, phantom: &Raster, geom: &PhantomGeometry) -> Result<(f64, f64)> {
    check_geometry(img, geom)?;
    check_geometry(phantom, geom)?;
    let (gi, vi) = edge_differences(img, geom)?;
    let (gp, vp) = edge_differences(phantom, geom)?;
    Ok(((gi - gp).abs(), (vi - vp).abs()))
}

/// Universal quality index over sliding windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QIndex {
    pub mean: f64,
    pub std: f64,
    pub windows: usize,
    /// Windows left out because a factor had a zero denominator.
    pub skipped: usize,
}

/// Q of one window, `None` when a factor is undefined.
fn window_q(x: &Raster, y: &Raster, r0: usize, c0: usize) -> Option<f64> {
    let n = (Q_WINDOW * Q_WINDOW) as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for r in r0..r0 + Q_WINDOW {
        for c in c0..c0 + Q_WINDOW {
            sx += x.get(r, c);
            sy += y.get(r, c);
        }
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut vxx, mut vyy, mut vxy) = (0.0, 0.0, 0.0);
    for r in r0..r0 + Q_WINDOW {
        for c in c0..c0 + Q_WINDOW {
            let dx = x.get(r, c) - mx;
            let dy = y.get(r, c) - my;
            vxx += dx * dx;
            vyy += dy * dy;
            vxy += dx * dy;
        }
    }
    let (vxx, vyy, vxy) = (vxx / (n - 1.0), vyy / (n - 1.0), vxy / (n - 1.0));
    let (sdx, sdy) = (vxx.sqrt(), vyy.sqrt());
    let lum_den = mx * mx + my * my;
    if sdx * sdy == 0.0 || lum_den == 0.0 {
        return None;
    }
    let correlation = vxy / (sdx * sdy);
    let luminance = 2.0 * mx * my / lum_den;
    let contrast = 2.0 * sdx * sdy / (vxx + vyy);
    Some(correlation * luminance * contrast)
}

/// `Q = (s_xy / (s_x s_y)) (2 x̄ ȳ / (x̄² + ȳ²)) (2 s_x s_y / (s_x² + s_y²))` on
/// every 8×8 window at stride 1; mean and standard deviation over windows.
pub fn q_index(x: &Raster, y: &Raster) -> Result<QIndex> {
    if !x.same_shape(y) {
        return invalid("Q index needs images of the same size");
    }
    if x.width() < Q_WINDOW || x.height() < Q_WINDOW {
        return invalid(format!("Q index needs at least one {Q_WINDOW}x{Q_WINDOW} window"));
    }
    let mut values = Vec::new();
    let mut skipped = 0;
    for r in 0..=x.height() - Q_WINDOW {
        for c in 0..=x.width() - Q_WINDOW {
            match window_q(x, y, r, c) {
                Some(q) => values.push(q),
                None => skipped += 1,
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Degenerate("no window with a defined Q index".into()));
    }
    let mean = sum::mean(&values);
    let std = if values.len() > 1 { sum::variance(&values).sqrt() } else { 0.0 };
    Ok(QIndex {
        mean,
        std,
        windows: values.len(),
        skipped,
    })
}

/// 4-neighbour Laplacian on the mirror-padded image.
pub fn laplacian(img: &Raster) -> Result<Vec<f64>> {
    let p = pad_mirror(img, 1)?;
    let mut out = Vec::with_capacity(img.width() * img.height());
    for r in 1..=img.height() {
        for c in 1..=img.width() {
            out.push(p.get(r - 1, c) + p.get(r + 1, c) + p.get(r, c - 1) + p.get(r, c + 1) - 4.0 * p.get(r, c));
        }
    }
    Ok(out)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ma, mb) = (sum::mean(a), sum::mean(b));
    let (mut sab, mut saa, mut sbb) = (KahanSum::default(), KahanSum::default(), KahanSum::default());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab.add(dx * dy);
        saa.add(dx * dx);
        sbb.add(dy * dy);
    }
    let den = saa.total().sqrt() * sbb.total().sqrt();
    if den == 0.0 {
        return Err(Error::Degenerate("constant Laplacian".into()));
    }
    Ok((sab.total() / den).clamp(-1.0, 1.0))
}

/// Pearson correlation between the Laplacians of `x` and `y`.
pub fn beta_rho(x: &Raster, y: &Raster) -> Result<f64> {
    if !x.same_shape(y) {
        return invalid("β_ρ needs images of the same size");
    }
    if x.width() < 3 || x.height() < 3 {
        return invalid("β_ρ needs images of at least 3x3");
    }
    pearson(&laplacian(x)?, &laplacian(y)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub mae: f64,
    pub mse: f64,
    pub nmse: f64,
    pub dcon: f64,
}

/// MAE, MSE, NMSE and DCON of `y` against the reference `x`, after both are
/// jointly rescaled so their common range maps onto [0, 1].
pub fn error_metrics(x: &Raster, y: &Raster) -> Result<ErrorMetrics> {
    if !x.same_shape(y) {
        return invalid("error metrics need images of the same size");
    }
    let (lx, hx) = x.min_max();
    let (ly, hy) = y.min_max();
    let (lo, hi) = (lx.min(ly), hx.max(hy));
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::Degenerate("both images hold the same single value".into()));
    }
    let norm = |v: f64| (v - lo) / range;
    let n = x.data().len() as f64;
    let (mut abs, mut sq, mut ref_sq, mut dcon) =
        (KahanSum::default(), KahanSum::default(), KahanSum::default(), KahanSum::default());
    for (&a, &b) in x.data().iter().zip(y.data()) {
        let (a, b) = (norm(a), norm(b));
        let d = (a - b).abs();
        abs.add(d);
        sq.add(d * d);
        ref_sq.add(a * a);
        dcon.add(d / (DCON_ALPHA + a + b));
    }
    if ref_sq.total() == 0.0 {
        return Err(Error::Degenerate("NMSE reference has zero energy after normalization".into()));
    }
    Ok(ErrorMetrics {
        mae: abs.total() / n,
        mse: sq.total() / n,
        nmse: sq.total() / ref_sq.total(),
        dcon: dcon.total() / n,
    })
}

/// Named quality values for one (test, reference) pair. `None` marks a
/// measure that could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub enl: Option<f64>,
    pub line_contrast_error: Option<f64>,
    pub edge_gradient: Option<f64>,
    pub edge_variance: Option<f64>,
    pub q_mean: Option<f64>,
    pub q_std: Option<f64>,
    pub beta_rho: Option<f64>,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub nmse: Option<f64>,
    pub dcon: Option<f64>,
}

impl MetricReport {
    pub const HEADER: &'static str =
        "enl,line_contrast_error,edge_gradient,edge_variance,q_mean,q_std,beta_rho,mae,mse,nmse,dcon";

    /// Measures that need only the two images.
    pub fn compare(reference: &Raster, test: &Raster) -> Self {
        let q = q_index(reference, test).ok();
        let e = error_metrics(reference, test).ok();
        MetricReport {
            q_mean: q.map(|q| q.mean),
            q_std: q.map(|q| q.std),
            beta_rho: beta_rho(reference, test).ok(),
            mae: e.map(|e| e.mae),
            mse: e.map(|e| e.mse),
            nmse: e.map(|e| e.nmse),
            dcon: e.map(|e| e.dcon),
            ..Default::default()
        }
    }

    /// All measures, with `phantom` as ground truth laid out by `geom`.
    pub fn with_ground_truth(phantom: &Raster, test: &Raster, geom: &PhantomGeometry) -> Self {
        let mut report = Self::compare(phantom, test);
        report.fill_geometry(phantom, test, geom);
        report
    }

    pub(crate) fn fill_geometry(&mut self, phantom: &Raster, test: &Raster, geom: &PhantomGeometry) {
        if check_geometry(test, geom).is_err() {
            return;
        }
        self.enl = PixelSample::new(gather(test, &geom.background.pixels()))
            .and_then(|s| enl(&s))
            .ok();
        self.line_contrast_error = line_contrast(test, phantom, geom).ok();
        let edges = edge_measures(test, phantom, geom).ok();
        self.edge_gradient = edges.map(|e| e.0);
        self.edge_variance = edges.map(|e| e.1);
    }

    pub fn fields(&self) -> [Option<f64>; 11] {
        [
            self.enl,
            self.line_contrast_error,
            self.edge_gradient,
            self.edge_variance,
            self.q_mean,
            self.q_std,
            self.beta_rho,
            self.mae,
            self.mse,
            self.nmse,
            self.dcon,
        ]
    }

    pub fn csv_row(&self) -> String {
        let cells: Vec<String> = self.fields().iter().map(|v| csv_cell(*v)).collect();
        cells.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", Self::HEADER).unwrap();
        writeln!(out, "{}", self.csv_row()).unwrap();
        out
    }
}

/// Shortest round-trip decimal, or `NA`.
pub fn csv_cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => "NA".to_string(),
    }
}
