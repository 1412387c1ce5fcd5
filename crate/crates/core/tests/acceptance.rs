//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use despeckle::divergence::{chi2_survival, kl_stat, renyi_stat, run_test, sidak_level, hellinger_stat};
use despeckle::metrics::{beta_rho, enl, error_metrics, q_index};
use despeckle::{
    mle, sample, DistanceKind, GammaParams, PixelSample, Raster, SharedLooks, SpeckleStream, TestConfig,
};

const SITUATIONS: [(f64, f64, f64); 4] = [(1.0, 200.0, 70.0), (3.0, 195.0, 55.0), (5.0, 150.0, 30.0), (7.0, 170.0, 35.0)];
const KINDS: [DistanceKind; 3] = [DistanceKind::Hellinger, DistanceKind::KullbackLeibler, DistanceKind::Renyi];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn binomial_band(eta: f64, trials: usize) -> (f64, f64) {
    let sigma = (eta * (1.0 - eta) / trials as f64).sqrt();
    (eta - 3.0 * sigma, eta + 3.0 * sigma)
}

/// Rejection counts at the three whole-series levels for `trials` null pairs.
fn null_rejections(shared: SharedLooks, trials: usize) -> [usize; 3] {
    let p = GammaParams::new(3.0, 195.0).unwrap();
    let cfg = TestConfig { shared_looks: shared, ..TestConfig::new(DistanceKind::Hellinger, 0.2) };
    let mut rejections = [0usize; 3];
    for k in 0..trials {
        let mut s = SpeckleStream::new(1, k as u64);
        let a = sample(&p, 49, &mut s).unwrap();
        let b = sample(&p, 49, &mut s).unwrap();
        let out = run_test(&a, &b, &cfg).unwrap();
        for (j, &alpha) in NULL_ALPHAS.iter().enumerate() {
            if out.p_value <= sidak_level(alpha, 8).unwrap() {
                rejections[j] += 1;
            }
        }
    }
    rejections
}

const NULL_ALPHAS: [f64; 3] = [0.2, 0.1, 0.01];

/// Calibration is judged with the looks estimated under the null (pooled
/// samples). The central-only estimate, the filter default, is reported
/// alongside for reference.
fn null_calibration() -> Outcome {
    let trials = 10_000;
    let start = Instant::now();
    let pooled = null_rejections(SharedLooks::Pooled, trials);
    let elapsed = start.elapsed();
    let central = null_rejections(SharedLooks::Central, trials);
    let mut ok = elapsed <= Duration::from_secs(60);
    let mut parts = Vec::new();
    for (j, &alpha) in NULL_ALPHAS.iter().enumerate() {
        let eta = sidak_level(alpha, 8).unwrap();
        let rate = pooled[j] as f64 / trials as f64;
        let (lo, hi) = binomial_band(eta, trials);
        ok &= rate >= lo && rate <= hi;
        parts.push(format!(
            "eta={eta:.4e} rate={rate:.4e} band=[{lo:.3e},{hi:.3e}] (central looks: {:.4e})",
            central[j] as f64 / trials as f64
        ));
    }
    check(ok, format!("{} ({:.1}s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn mle_consistency() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for (i, &(looks, strip, background)) in SITUATIONS.iter().enumerate() {
        for (j, mean) in [strip, background].into_iter().enumerate() {
            let p = GammaParams::new(looks, mean).unwrap();
            let mut s = SpeckleStream::new(42, (i * 2 + j) as u64);
            let fit = mle(&sample(&p, 10_000, &mut s).unwrap()).unwrap().params;
            let dm = (fit.mean() / mean - 1.0).abs();
            let dl = (fit.looks() / looks - 1.0).abs();
            ok &= dm <= 0.02 && dl <= 0.10;
            worst = (worst.0.max(dm), worst.1.max(dl));
        }
    }
    let t = start.elapsed().as_secs_f64();
    check(ok, format!("max |mean ratio - 1| = {:.4}, max |looks ratio - 1| = {:.4} ({t:.2}s)", worst.0, worst.1))
}

fn statistic_identities() -> Outcome {
    let mut ok = true;
    for l in [1.0, 3.0, 5.0, 7.0] {
        for mean in [30.0, 70.0, 195.0] {
            let p = GammaParams::new(l, mean).unwrap();
            ok &= hellinger_stat(&p, &p, 9, 9, l).unwrap() == 0.0;
            ok &= kl_stat(&p, &p, 9, 9, l).unwrap() == 0.0;
            ok &= renyi_stat(&p, &p, 9, 9, l, 0.5).unwrap() == 0.0;
        }
    }
    let g = |m: f64| GammaParams::new(1.0, m).unwrap();
    let h = hellinger_stat(&g(1.0), &g(3.0), 9, 9, 1.0).unwrap();
    let kl = kl_stat(&g(2.0), &g(1.0), 9, 9, 1.0).unwrap();
    ok &= (h - 4.8231).abs() <= 1e-3 && kl == 2.25;
    check(ok, format!("zero at equal means; hellinger(1,3) = {h:.6}; kl(2,1) = {kl}"))
}

/// Composite Simpson over [a, b] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn sidak_and_chi2() -> Outcome {
    let eta = sidak_level(0.01, 8).unwrap();
    // independent oracle: the power form of the same correction
    let eta_oracle = 1.0 - 0.99f64.powf(1.0 / 8.0);
    // χ²₁ tail via t = √x: P(X > s) = 2 ∫_{√s}^∞ φ(t) dt
    let s: f64 = 3.8415;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let tail = 2.0 * simpson(phi, s.sqrt(), 40.0, 200_000);
    let q = chi2_survival(s, 1).unwrap();
    let ok = (eta - eta_oracle).abs() <= 1e-8 && (q - tail).abs() <= 1e-4 && (q - 0.05).abs() <= 1e-4;
    check(ok, format!("eta(0.01,8) = {eta:.6e} (oracle {eta_oracle:.6e}); chi2_survival(3.8415,1) = {q:.6} (quadrature {tail:.6})"))
}

fn enl_recovery() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for (i, &(looks, _, background)) in SITUATIONS.iter().enumerate() {
        for seed in 0..20u64 {
            let flat = Raster::filled(64, 64, background).unwrap();
            let noisy = despeckle::corrupt(&flat, looks, &mut SpeckleStream::new(seed, i as u64)).unwrap();
            let e = enl(&PixelSample::new(noisy.into_data()).unwrap()).unwrap();
            let dev = (e / looks - 1.0).abs();
            worst = worst.max(dev);
            ok &= dev <= 0.15;
        }
    }
    check(ok, format!("80 regions, max |ENL/L - 1| = {worst:.4}"))
}

/// Rows of one (filter, window, situation) group, one cell per column.
type Groups = BTreeMap<(String, usize, u8), Vec<Vec<Option<f64>>>>;

/// One `--fast` protocol run, parsed: (filter, window, situation) -> column -> values.
struct FastRun {
    csv: String,
    elapsed: Duration,
    columns: Vec<String>,
    groups: Groups,
}

impl FastRun {
    fn launch(threads: usize) -> FastRun {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("fast.csv");
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_despeckle"))
            .args(["montecarlo", "--fast", "--include-input", "--seed", "2024", "--threads"])
            .arg(threads.to_string())
            .arg("--out")
            .arg(&out)
            .status()
            .expect("spawn despeckle");
        let elapsed = start.elapsed();
        assert!(status.success(), "montecarlo exited with {status}");
        let csv = std::fs::read_to_string(&out).unwrap();
        let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
        let columns: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        let mut groups = Groups::new();
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            let key = (cells[0].to_string(), cells[1].parse().unwrap(), cells[3].parse().unwrap());
            let values = cells.iter().map(|c| c.parse::<f64>().ok().filter(|_| *c != "NA")).collect();
            groups.entry(key).or_default().push(values);
        }
        FastRun { csv, elapsed, columns, groups }
    }

    fn column(&self, filter: &str, window: usize, situation: u8, name: &str) -> Vec<Option<f64>> {
        let idx = self.columns.iter().position(|c| c == name).unwrap();
        self.groups[&(filter.to_string(), window, situation)].iter().map(|row| row[idx]).collect()
    }

    fn median(&self, filter: &str, window: usize, situation: u8, name: &str) -> f64 {
        let mut v: Vec<f64> = self.column(filter, window, situation, name).into_iter().flatten().collect();
        assert!(!v.is_empty(), "no values for {filter}{window} situation {situation} {name}");
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
    }
}

fn filter_effectiveness(run: &FastRun) -> Outcome {
    let h = run.median("hellinger", 5, 2, "enl");
    let lee = run.median("lee", 5, 2, "enl");
    let input = run.median("none", 1, 2, "enl");
    let ok = h > lee && lee > input && run.elapsed <= Duration::from_secs(600);
    check(ok, format!("situation 2 median ENL: hellinger5 {h:.3} > lee5 {lee:.3} > input {input:.3} ({:.1}s)", run.elapsed.as_secs_f64()))
}

fn q_ordering(run: &FastRun) -> Outcome {
    let mut wins = 0;
    let mut parts = Vec::new();
    for s in 1..=4 {
        let h = run.median("hellinger", 5, s, "q_mean");
        let lee = run.median("lee", 5, s, "q_mean");
        wins += usize::from(h > lee);
        parts.push(format!("#{s}: {h:.4} vs {lee:.4}"));
    }
    check(wins >= 3, format!("hellinger5 ahead in {wins}/4 ({})", parts.join(", ")))
}

fn edge_variance_visible(run: &FastRun) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in 1..=4u8 {
        let mut cells = Vec::new();
        for (f, w) in [("lee", 5), ("hellinger", 5), ("lee", 7), ("hellinger", 7)] {
            let col = run.column(f, w, s, "edge_variance");
            let present = col.iter().filter(|v| v.is_some()).count() as f64 / col.len() as f64;
            ok &= present >= 0.95;
            cells.push(format!("{f}{w} {:.2}", run.median(f, w, s, "edge_variance")));
        }
        parts.push(format!("#{s}: {}", cells.join(" ")));
    }
    check(ok, format!("median edge variance, {}", parts.join("; ")))
}

fn random_raster(stream: &mut SpeckleStream) -> Raster {
    let w = 8 + (stream.uniform() * 24.0) as usize;
    let h = 8 + (stream.uniform() * 24.0) as usize;
    let looks = 1.0 + (stream.uniform() * 6.0).floor();
    let mean = 10.0 + stream.uniform() * 300.0;
    Raster::from_fn(w, h, |_, _| mean * stream.speckle(looks)).unwrap()
}

fn metric_identities() -> Outcome {
    let mut ok = true;
    let mut stream = SpeckleStream::new(9, 0);
    for _ in 0..50 {
        let x = random_raster(&mut stream);
        let e = error_metrics(&x, &x).unwrap();
        ok &= e.mae == 0.0 && e.mse == 0.0 && e.nmse == 0.0 && e.dcon == 0.0;
        let q = q_index(&x, &x).unwrap();
        ok &= (q.mean - 1.0).abs() <= 1e-12 && q.std.abs() <= 1e-12;
        ok &= (beta_rho(&x, &x).unwrap() - 1.0).abs() <= 1e-12;
        let y = Raster::from_fn(x.width(), x.height(), |r, c| x.get(r, c) * stream.speckle(3.0)).unwrap();
        let e = error_metrics(&x, &y).unwrap();
        ok &= e.mse >= e.mae * e.mae;
    }
    check(ok, "50 rasters: zero error, Q = (1, 0), beta_rho = 1, MSE >= MAE^2".into())
}

fn decision_agreement() -> Outcome {
    let trials = 2_000;
    let base = 195.0;
    let mut cells: Vec<(f64, f64)> = [0.2, 0.1, 0.01].iter().map(|&a| (1.0, a)).collect();
    cells.extend([1.5, 3.0, 10.0].iter().map(|&r| (r, 0.01)));
    let mut agree = [[0usize; 3]; 3];
    let mut total = 0usize;
    for (c, &(ratio, alpha)) in cells.iter().enumerate() {
        let p1 = GammaParams::new(3.0, base).unwrap();
        let pi = GammaParams::new(3.0, base * ratio).unwrap();
        for k in 0..trials {
            let mut s = SpeckleStream::new(10 + c as u64, k as u64);
            let a = sample(&p1, 49, &mut s).unwrap();
            let b = sample(&pi, 49, &mut s).unwrap();
            let d: Vec<bool> = KINDS
                .iter()
                .map(|&kind| run_test(&a, &b, &TestConfig::new(kind, alpha)).unwrap().rejected)
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    agree[i][j] += usize::from(d[i] == d[j]);
                }
            }
            total += 1;
        }
    }
    let rate = |i: usize, j: usize| agree[i][j] as f64 / total as f64;
    let min = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| rate(i, j)).fold(1.0, f64::min);
    let matrix: Vec<String> = (0..3)
        .map(|i| (0..3).map(|j| format!("{:.4}", rate(i, j))).collect::<Vec<_>>().join(" "))
        .collect();
    check(min >= 0.95, format!("agreement [H KL R] rows: {} (min {min:.4})", matrix.join(" | ")))
}

fn determinism(a: &FastRun, b: &FastRun) -> Outcome {
    check(a.csv == b.csv, format!("1 thread vs 4 threads: {} bytes, identical = {}", a.csv.len(), a.csv == b.csv))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail}");
            }
        }
    };

    report(1, "null calibration", &mut null_calibration);
    report(2, "MLE consistency", &mut mle_consistency);
    report(3, "statistic identities", &mut statistic_identities);
    report(4, "Sidak and chi-square", &mut sidak_and_chi2);
    report(5, "ENL recovery", &mut enl_recovery);

    let single = catch_unwind(|| FastRun::launch(1));
    let multi = catch_unwind(|| FastRun::launch(4));
    match (&single, &multi) {
        (Ok(a), Ok(b)) => {
            report(6, "filter effectiveness", &mut || filter_effectiveness(a));
            report(7, "Q-index ordering", &mut || q_ordering(a));
            report(8, "edge-variance diagnostic", &mut || edge_variance_visible(a));
            report(9, "metric identities", &mut metric_identities);
            report(10, "decision agreement", &mut decision_agreement);
            report(11, "determinism", &mut || determinism(a, b));
        }
        _ => {
            for (id, name) in [(6, "filter effectiveness"), (7, "Q-index ordering"), (8, "edge-variance diagnostic"), (11, "determinism")] {
                report(id, name, &mut || Err("fast montecarlo run failed".into()));
            }
            report(9, "metric identities", &mut metric_identities);
            report(10, "decision agreement", &mut decision_agreement);
        }
    }

    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
