//! Built-in invariant suite, run by `rfskit verify`.
//!
//! Every check is deterministic and self-contained: it needs no input files
//! and finishes in well under a second on an optimised build.

use serde::Serialize;

use crate::analysis::{geometric_grid, growth_diagnostic};
use crate::factors::{
    build_table, eirfs_factor, eirfs_first_derivative, eirfs_second_derivative, irfs_factor, irfs_inner, rfs_factor,
    RebalanceConfig, DEFAULT_ALPHA, DEFAULT_THRESHOLD,
};
use crate::fixtures::{dataset_from_counts, UAV_TRAINING};
use crate::frequency::compute_frequencies;
use crate::sampling::{draw_epoch, expand_epoch, manifest_to_string};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Side of the square frequency grid used by the derivative checks.
pub const GRID_SIDE: usize = 20;

/// `GRID_SIDE²` `(f_i, f_b)` pairs, geometric over `[1e-6, 1]` on each axis.
pub fn frequency_grid() -> Vec<(f64, f64)> {
    let axis = geometric_grid(1e-6, 1.0, GRID_SIDE);
    axis.iter()
        .flat_map(|&fi| axis.iter().map(move |&fb| (fi, fb)))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

type Check = fn() -> CheckResult;

const CHECKS: [Check; 10] = [
    derivative_signs,
    first_derivative_fd,
    second_derivative_fd,
    monotonic_decreasing,
    convexity,
    collapse_identity,
    exponential_linkage,
    growth_slopes,
    normalization,
    operating_point,
];

/// Runs every check in a fixed order. The manifest determinism check is
/// appended last.
pub fn run_checks() -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = CHECKS.iter().map(|c| c()).collect();
    out.push(manifest_determinism());
    out
}

fn derivative_signs() -> CheckResult {
    let (t, a) = (DEFAULT_THRESHOLD, DEFAULT_ALPHA);
    let mut bad = 0;
    for (fi, fb) in frequency_grid() {
        let d1 = eirfs_first_derivative(fi, fb, t, a);
        let d2 = eirfs_second_derivative(fi, fb, t, a);
        if !matches!((d1, d2), (Ok(x), Ok(y)) if x < 0.0 && y > 0.0) {
            bad += 1;
        }
    }
    CheckResult::new(
        "derivative_signs",
        bad == 0,
        format!("{bad} of {} grid points with r' >= 0 or r'' <= 0", GRID_SIDE * GRID_SIDE),
    )
}

// Central differences in f_i. The effective step is recomputed from the
// representable neighbours so that rounding of f ± h does not bias it.
fn central_first(fi: f64, fb: f64, rel_step: f64) -> f64 {
    let (t, a) = (DEFAULT_THRESHOLD, DEFAULT_ALPHA);
    let (lo, hi) = (fi * (1.0 - rel_step), fi * (1.0 + rel_step));
    let r = |f| eirfs_factor(f, fb, t, a).expect("grid inside domain");
    (r(hi) - r(lo)) / (hi - lo)
}

fn central_second(fi: f64, fb: f64, rel_step: f64) -> f64 {
    let (t, a) = (DEFAULT_THRESHOLD, DEFAULT_ALPHA);
    let h = fi * rel_step;
    let r = |f| eirfs_factor(f, fb, t, a).expect("grid inside domain");
    (r(fi + h) - 2.0 * r(fi) + r(fi - h)) / (h * h)
}

fn first_derivative_fd() -> CheckResult {
    let worst = frequency_grid()
        .into_iter()
        .map(|(fi, fb)| {
            let exact = eirfs_first_derivative(fi, fb, DEFAULT_THRESHOLD, DEFAULT_ALPHA).unwrap();
            rel(central_first(fi, fb, 1e-6), exact)
        })
        .fold(0.0, f64::max);
    CheckResult::new(
        "first_derivative_fd",
        worst <= 1e-6,
        format!("max relative error {worst:.3e} (tolerance 1e-6)"),
    )
}

fn second_derivative_fd() -> CheckResult {
    let worst = frequency_grid()
        .into_iter()
        .map(|(fi, fb)| {
            let exact = eirfs_second_derivative(fi, fb, DEFAULT_THRESHOLD, DEFAULT_ALPHA).unwrap();
            rel(central_second(fi, fb, 1e-4), exact)
        })
        .fold(0.0, f64::max);
    CheckResult::new(
        "second_derivative_fd",
        worst <= 1e-4,
        format!("max relative error {worst:.3e} (tolerance 1e-4)"),
    )
}

fn monotonic_decreasing() -> CheckResult {
    let axis = geometric_grid(1e-6, 1.0, GRID_SIDE);
    let mut bad = 0;
    for &fb in &axis {
        let r: Vec<f64> = axis
            .iter()
            .map(|&fi| eirfs_factor(fi, fb, DEFAULT_THRESHOLD, DEFAULT_ALPHA).unwrap())
            .collect();
        bad += r.windows(2).filter(|w| w[1] >= w[0]).count();
    }
    CheckResult::new("monotonic_decreasing", bad == 0, format!("{bad} non-decreasing steps in f_i"))
}

fn convexity() -> CheckResult {
    let mut bad = 0;
    for (fi, fb) in frequency_grid() {
        let h = fi * 1e-2;
        let r = |f| eirfs_factor(f, fb, DEFAULT_THRESHOLD, DEFAULT_ALPHA).unwrap();
        if r(fi - h) + r(fi + h) < 2.0 * r(fi) {
            bad += 1;
        }
    }
    CheckResult::new("convexity", bad == 0, format!("{bad} grid points with r(f-h) + r(f+h) < 2 r(f)"))
}

fn collapse_identity() -> CheckResult {
    let mut bad = 0;
    let mut total = 0;
    for f in geometric_grid(1e-6, 1.0, GRID_SIDE) {
        for t in [1.0, 0.1, 0.01, 1e-3, 1e-4] {
            total += 1;
            if irfs_factor(f, f, t).unwrap().to_bits() != rfs_factor(f, t).unwrap().to_bits() {
                bad += 1;
            }
        }
    }
    CheckResult::new(
        "collapse_identity",
        bad == 0,
        format!("{bad} of {total} points where irfs(f, f, t) != rfs(f, t)"),
    )
}

// ln(exp(x)) is not bit-exact in floating point, so the linkage is checked
// to a few ulps.
fn exponential_linkage() -> CheckResult {
    let t = 1e-3;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (fi, fb) in frequency_grid() {
        if irfs_inner(fi, fb, t).unwrap() < 1.0 {
            continue;
        }
        points += 1;
        for a in [0.5, 1.0, 2.0] {
            let lhs = eirfs_factor(fi, fb, t, a).unwrap().ln();
            let rhs = a * irfs_factor(fi, fb, t).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    CheckResult::new(
        "exponential_linkage",
        points > 0 && worst <= 1e-13,
        format!("max relative gap {worst:.3e} over {points} unclamped points"),
    )
}

fn growth_slopes() -> CheckResult {
    let diag: Vec<(f64, f64)> = geometric_grid(1e-6, 1e-3, 25).into_iter().map(|f| (f, f)).collect();
    let full: Vec<(f64, f64)> = frequency_grid();
    let runs = [
        (RebalanceConfig::rfs(1e-3), &diag),
        (RebalanceConfig::irfs(1e-3), &diag),
        (RebalanceConfig::eirfs(DEFAULT_THRESHOLD, DEFAULT_ALPHA), &full),
    ];
    let mut detail = Vec::new();
    let mut passed = true;
    for (cfg, probe) in runs {
        match growth_diagnostic(&cfg, probe) {
            Ok(d) => {
                passed &= d.slope_error() <= 1e-6;
                detail.push(format!("{} slope {:.9} (expected {})", cfg.method, d.slope, d.expected_slope));
            }
            Err(e) => {
                passed = false;
                detail.push(format!("{}: {e}", cfg.method));
            }
        }
    }
    CheckResult::new("growth_slopes", passed, detail.join("; "))
}

fn normalization() -> CheckResult {
    let idx = dataset_from_counts(&UAV_TRAINING);
    let freqs = compute_frequencies(&idx).expect("fixture is non-empty");
    let mut worst: f64 = 0.0;
    for cfg in [
        RebalanceConfig::baseline(),
        RebalanceConfig::rfs(0.3),
        RebalanceConfig::irfs(0.3),
        RebalanceConfig::eirfs(0.3, 2.0),
    ] {
        match build_table(&freqs, &idx, &cfg) {
            Ok(t) => worst = worst.max((t.probabilities().iter().sum::<f64>() - 1.0).abs()),
            Err(e) => return CheckResult::new("normalization", false, e.to_string()),
        }
    }
    CheckResult::new("normalization", worst <= 1e-9, format!("max |sum p - 1| = {worst:.3e}"))
}

/// Training split at the default configuration: IRFS is inert, E-IRFS is
/// not, and it favours the rarest class.
fn operating_point() -> CheckResult {
    let idx = dataset_from_counts(&UAV_TRAINING);
    let freqs = compute_frequencies(&idx).expect("fixture is non-empty");
    let irfs = build_table(&freqs, &idx, &RebalanceConfig::irfs(DEFAULT_THRESHOLD));
    let eirfs = build_table(&freqs, &idx, &RebalanceConfig::default());
    let (Ok(irfs), Ok(eirfs)) = (irfs, eirfs) else {
        return CheckResult::new("operating_point", false, "table construction failed");
    };
    let flat = irfs.classes.iter().all(|c| c.factor == 1.0);
    let by_name = |n: &str| eirfs.classes.iter().find(|c| c.name == n).map(|c| c.factor).unwrap_or(f64::NAN);
    let (fire, lake) = (by_name("Fire"), by_name("Lake"));
    CheckResult::new(
        "operating_point",
        flat && lake > fire && fire > 1.0,
        format!("irfs all 1: {flat}; eirfs Fire {fire:.6}, Lake {lake:.6}"),
    )
}

fn manifest_determinism() -> CheckResult {
    let idx = dataset_from_counts(&UAV_TRAINING);
    let freqs = compute_frequencies(&idx).expect("fixture is non-empty");
    let table = build_table(&freqs, &idx, &RebalanceConfig::default()).expect("default config is valid");
    let render = |draw: bool| {
        let m = if draw {
            draw_epoch(&table, 1000, 3, 42)
        } else {
            expand_epoch(&table, 3, 42)
        };
        m.map_err(|e| e.to_string())
            .and_then(|m| manifest_to_string(&m, &table).map_err(|e| e.to_string()))
    };
    let same = [true, false].iter().all(|&d| matches!((render(d), render(d)), (Ok(a), Ok(b)) if a == b));
    CheckResult::new("manifest_determinism", same, "draw and expand epoch 3, seed 42, rendered twice")
}
