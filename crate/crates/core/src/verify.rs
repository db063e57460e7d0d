//! The end-to-end mixed-derivative pipeline and its JSON report.
//!
//! Starting from samples `u` of a boundary-flat `f`, the pipeline analyses
//! `u`, forms `h` from the coefficients `−nm·a_nm`, integrates back to
//! `F = ∫₀ʸ h` and `G = ∫₀ˣ∫₀ʸ h`, and compares each leg with an independent
//! computation: `F` against `f_x`, `G` against `f`, `h` against a finite
//! difference of `u`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calculus::{fd_mixed, fd_partial_x, primitive_xy, primitive_y};
use crate::error::{Error, Result};
use crate::fourier::{
    analyze, decay_norms, derivative_x, mixed_operator, parseval_residual, synthesize, DecayNorms,
    FourierCoeffs2D,
};
use crate::grid::{sample, sample_field, AnalyticFunction2D, GridFunction2D, Partial, PeriodicGrid2D};

/// Separable C² plateau `W(x, y) = w(x) w(y)`.
///
/// `w` vanishes on `[0, π/n]` and `[2π − π/n, 2π)`, equals 1 on
/// `[2π/n, 2π − 2π/n]`, and ramps with the quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFunction {
    n: u32,
    ramp: f64,
}

pub fn make_window(n: u32) -> Result<WindowFunction> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("window parameter must be at least 3, got {n}")));
    }
    Ok(WindowFunction {
        n,
        ramp: std::f64::consts::PI / n as f64,
    })
}

// S(s) = 6s⁵ − 15s⁴ + 10s³ and its first two derivatives.
fn smoothstep(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    (
        s2 * s * (10.0 + s * (-15.0 + 6.0 * s)),
        30.0 * s2 * (1.0 - s) * (1.0 - s),
        60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
    )
}

impl WindowFunction {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Plateau `[lo, hi]` on each axis.
    pub fn plateau(&self) -> (f64, f64) {
        (2.0 * self.ramp, TAU - 2.0 * self.ramp)
    }

    /// `(w, w′, w″)` at `x`.
    pub fn profile(&self, x: f64) -> (f64, f64, f64) {
        let l = self.ramp;
        if x <= l || x >= TAU - l {
            (0.0, 0.0, 0.0)
        } else if x < 2.0 * l {
            let (s, s1, s2) = smoothstep((x - l) / l);
            (s, s1 / l, s2 / (l * l))
        } else if x <= TAU - 2.0 * l {
            (1.0, 0.0, 0.0)
        } else {
            let (s, s1, s2) = smoothstep((TAU - l - x) / l);
            (s, -s1 / l, s2 / (l * l))
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.profile(x).0 * self.profile(y).0
    }

    pub fn as_analytic(&self) -> AnalyticFunction2D {
        let w = *self;
        AnalyticFunction2D::new(move |x, y| w.eval(x, y))
            .with(Partial::X, move |x, y| w.profile(x).1 * w.profile(y).0)
            .with(Partial::Y, move |x, y| w.profile(x).0 * w.profile(y).1)
            .with(Partial::XX, move |x, y| w.profile(x).2 * w.profile(y).0)
            .with(Partial::YY, move |x, y| w.profile(x).0 * w.profile(y).2)
            .with(Partial::XY, move |x, y| w.profile(x).1 * w.profile(y).1)
    }
}

/// `f·W` with Leibniz-rule partials. `f` must supply `d_x`, `d_y`, `d_xx`
/// and `d_yy`; `d_xy` of the product is provided only when `f` has one.
pub fn apply_window(f: &AnalyticFunction2D, w: &WindowFunction) -> Result<AnalyticFunction2D> {
    let f0 = Arc::clone(f.field());
    let fx = Arc::clone(f.require(Partial::X)?);
    let fy = Arc::clone(f.require(Partial::Y)?);
    let fxx = Arc::clone(f.require(Partial::XX)?);
    let fyy = Arc::clone(f.require(Partial::YY)?);
    let fxy = f.partial(Partial::XY).cloned();
    let w = *w;

    let (a, b) = (Arc::clone(&f0), Arc::clone(&fx));
    let dx = move |x: f64, y: f64| {
        let ((p, p1, _), (q, _, _)) = (w.profile(x), w.profile(y));
        b(x, y) * p * q + a(x, y) * p1 * q
    };
    let (a, b) = (Arc::clone(&f0), Arc::clone(&fy));
    let dy = move |x: f64, y: f64| {
        let ((p, _, _), (q, q1, _)) = (w.profile(x), w.profile(y));
        b(x, y) * p * q + a(x, y) * p * q1
    };
    let (a, b, c) = (Arc::clone(&f0), Arc::clone(&fx), fxx);
    let dxx = move |x: f64, y: f64| {
        let ((p, p1, p2), (q, _, _)) = (w.profile(x), w.profile(y));
        (c(x, y) * p + 2.0 * b(x, y) * p1 + a(x, y) * p2) * q
    };
    let (a, b, c) = (Arc::clone(&f0), Arc::clone(&fy), fyy);
    let dyy = move |x: f64, y: f64| {
        let ((p, _, _), (q, q1, q2)) = (w.profile(x), w.profile(y));
        (c(x, y) * q + 2.0 * b(x, y) * q1 + a(x, y) * q2) * p
    };
    let a = Arc::clone(&f0);
    let mut out = AnalyticFunction2D::new(move |x, y| a(x, y) * w.eval(x, y))
        .with(Partial::X, dx)
        .with(Partial::Y, dy)
        .with(Partial::XX, dxx)
        .with(Partial::YY, dyy);
    if let Some(fxy) = fxy {
        let a = f0;
        out = out.with(Partial::XY, move |x, y| {
            let ((p, p1, _), (q, q1, _)) = (w.profile(x), w.profile(y));
            fxy(x, y) * p * q + fx(x, y) * p * q1 + fy(x, y) * p1 * q + a(x, y) * p1 * q1
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Legs that are exact for band-limited input.
    pub spectral: f64,
    /// Legs limited by second-order quadrature or differencing.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectral: 1e-8,
            quad: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub nmax: usize,
    pub mmax: usize,
    pub tolerances: Tolerances,
    /// Wall-clock stage timings make the report non-reproducible, so they
    /// are opt-in.
    pub record_timings: bool,
}

impl PipelineConfig {
    pub fn new(nmax: usize, mmax: usize) -> Self {
        Self {
            nmax,
            mmax,
            tolerances: Tolerances::default(),
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l2: Option<f64>,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Check {
    fn new(max: f64, l2: Option<f64>, tol: f64) -> Self {
        Self {
            max,
            l2,
            tol,
            pass: max <= tol,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn between(a: &GridFunction2D, b: &GridFunction2D, tol: f64) -> Self {
        Self::new(a.max_abs_diff(b), Some(a.l2_diff(b)), tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid: [usize; 2],
    #[serde(rename = "box")]
    pub coeff_box: [usize; 2],
    pub tolerances: Tolerances,
    pub checks: BTreeMap<String, Check>,
    pub decay: DecayNorms,
    pub timings_ms: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(grid: PeriodicGrid2D, nmax: usize, mmax: usize, tolerances: Tolerances) -> Self {
        Self {
            grid: [grid.nx(), grid.ny()],
            coeff_box: [nmax, mmax],
            tolerances,
            checks: BTreeMap::new(),
            decay: DecayNorms {
                s4x: 0.0,
                s4y: 0.0,
                sxy: 0.0,
            },
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    /// First failing check in key order.
    pub fn first_failure(&self) -> Option<(&str, &Check)> {
        self.checks.iter().find(|(_, c)| !c.pass).map(|(k, c)| (k.as_str(), c))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.get(name)
    }

    /// Every recorded number must be finite and every error nonnegative,
    /// and pass flags must agree with `max <= tol`.
    pub fn validate(&self) -> Result<()> {
        let finite = |what: String, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::NonFiniteReport(what))
            }
        };
        finite("tolerances.spectral".into(), self.tolerances.spectral)?;
        finite("tolerances.quad".into(), self.tolerances.quad)?;
        for (k, c) in &self.checks {
            finite(format!("checks.{k}.max"), c.max)?;
            finite(format!("checks.{k}.tol"), c.tol)?;
            if let Some(l2) = c.l2 {
                finite(format!("checks.{k}.l2"), l2)?;
            }
            if c.pass != (c.max <= c.tol) {
                return Err(Error::InvalidArgument(format!("checks.{k}: pass flag disagrees with max and tol")));
            }
        }
        finite("decay.s4x".into(), self.decay.s4x)?;
        finite("decay.s4y".into(), self.decay.s4y)?;
        finite("decay.sxy".into(), self.decay.sxy)?;
        for (k, v) in &self.timings_ms {
            finite(format!("timings_ms.{k}"), *v)?;
        }
        Ok(())
    }
}

/// Pretty JSON with keys sorted at every level, newline-terminated.
pub fn serialize_report(r: &VerificationReport) -> Result<Vec<u8>> {
    r.validate()?;
    // serde_json::Value keeps object keys in a BTreeMap, which sorts them
    let v = serde_json::to_value(r)?;
    let mut out = serde_json::to_vec_pretty(&v)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_report(bytes: &[u8]) -> Result<VerificationReport> {
    let r: VerificationReport = serde_json::from_slice(bytes)?;
    r.validate()?;
    Ok(r)
}

/// Everything the pipeline computed, for callers that need the fields.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: VerificationReport,
    pub u: GridFunction2D,
    pub coeffs: FourierCoeffs2D,
    pub h: GridFunction2D,
    pub primitive_f: GridFunction2D,
    pub primitive_g: GridFunction2D,
}

/// Exact reference fields for the comparison legs, sampled on the grid.
#[derive(Debug, Clone, Default)]
pub struct Reference {
    pub d_x: Option<GridFunction2D>,
    pub d_xy: Option<GridFunction2D>,
    /// Annotation for the `F_vs_fx` check when `d_x` is absent.
    pub d_x_note: Option<String>,
}

/// Samples `f` and its available partials on `grid` and runs the pipeline.
///
/// A partial that is undefined at some node (a NaN sample) is dropped and the
/// corresponding check falls back or is omitted, with a note in the report.
pub fn run_pipeline_full(f: &AnalyticFunction2D, grid: PeriodicGrid2D, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let t0 = Instant::now();
    let u = sample(f, grid)?;
    let sample_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut reference = Reference::default();
    match f.partial(Partial::X).map(|d| sample_field(d, grid)) {
        Some(Ok(g)) => reference.d_x = Some(g),
        Some(Err(Error::NonFinite { x, y, .. })) => {
            reference.d_x_note = Some(format!("fd_fallback: exact d_x undefined at ({x}, {y})"))
        }
        Some(Err(e)) => return Err(e),
        None => reference.d_x_note = Some("fd_fallback: no exact d_x supplied".into()),
    }
    if let Some(Ok(g)) = f.partial(Partial::XY).map(|d| sample_field(d, grid)) {
        reference.d_xy = Some(g);
    }
    let mut run = run_on_samples(u, &reference, cfg)?;
    if cfg.record_timings {
        run.report.timings_ms.insert("sample".into(), sample_ms);
    }
    Ok(run)
}

pub fn run_pipeline(
    f: &AnalyticFunction2D,
    grid: PeriodicGrid2D,
    nmax: usize,
    mmax: usize,
    tolerances: Tolerances,
) -> Result<VerificationReport> {
    let cfg = PipelineConfig {
        tolerances,
        ..PipelineConfig::new(nmax, mmax)
    };
    Ok(run_pipeline_full(f, grid, &cfg)?.report)
}

/// The pipeline proper, on samples `u` already taken.
pub fn run_on_samples(u: GridFunction2D, reference: &Reference, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let grid = u.grid();
    let tol = cfg.tolerances;
    let flat_tol = tol.spectral.max(1e-12);
    let edge = u.boundary_max();
    if edge > flat_tol {
        return Err(Error::NotBoundaryFlat { max: edge, tol: flat_tol });
    }
    let mut report = VerificationReport::new(grid, cfg.nmax, cfg.mmax, tol);
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str| {
        if cfg.record_timings {
            timings.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
            clock = Instant::now();
        }
    };

    let coeffs = analyze(&u, cfg.nmax, cfg.mmax)?;
    lap("analyze");

    let decay = decay_norms(&coeffs);
    report.decay = decay;
    let mut dc = Check::new(decay.excess(), None, 0.0);
    dc.pass = decay.inequality_holds();
    report.checks.insert("decay".into(), dc);

    let h = synthesize(&mixed_operator(&coeffs), grid)?;
    lap("synthesize_h");

    let primitive_f = primitive_y(&h);
    let f_check = match &reference.d_x {
        Some(fx) => Check::between(&primitive_f, fx, tol.quad).with_note("exact"),
        None => {
            let fd = fd_partial_x(&u)?;
            let note = reference.d_x_note.clone().unwrap_or_else(|| "fd_fallback".into());
            Check::between(&primitive_f, &fd, tol.quad).with_note(note)
        }
    };
    report.checks.insert("F_vs_fx".into(), f_check);

    let primitive_g = primitive_xy(&h);
    report
        .checks
        .insert("g_vs_f".into(), Check::between(&primitive_g, &u, tol.quad));
    lap("primitives");

    if let Some(exact) = &reference.d_xy {
        report
            .checks
            .insert("h_vs_exact".into(), Check::between(&h, exact, tol.spectral));
    }
    let fdm = fd_mixed(&u)?;
    report
        .checks
        .insert("h_vs_fd_mixed".into(), Check::between(&h, &fdm, tol.quad));
    lap("fd_mixed");

    let parseval = parseval_residual(&u, &coeffs);
    report.checks.insert(
        "parseval".into(),
        Check::new(parseval, None, tol.spectral).with_note("relative"),
    );
    let ux = synthesize(&derivative_x(&coeffs), grid)?;
    let cx = analyze(&ux, cfg.nmax, cfg.mmax)?;
    let row_zero = cx.m_range().map(|m| cx.get(0, m).norm()).fold(0.0, f64::max);
    report
        .checks
        .insert("row_zero".into(), Check::new(row_zero, None, tol.spectral));
    lap("residuals");

    report.timings_ms = timings;
    Ok(PipelineRun {
        report,
        u,
        coeffs,
        h,
        primitive_f,
        primitive_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn sinsin() -> AnalyticFunction2D {
        AnalyticFunction2D::new(|x, y| x.sin() * y.sin())
            .with(Partial::X, |x, y| x.cos() * y.sin())
            .with(Partial::Y, |x, y| x.sin() * y.cos())
            .with(Partial::XX, |x, y| -x.sin() * y.sin())
            .with(Partial::YY, |x, y| -x.sin() * y.sin())
            .with(Partial::XY, |x, y| x.cos() * y.cos())
    }

    #[test]
    fn window_shape() {
        assert!(make_window(2).is_err());
        let w = make_window(4).unwrap();
        assert_eq!(w.eval(PI, PI), 1.0);
        assert_eq!(w.eval(0.0, PI), 0.0);
        assert_eq!(w.profile(0.0), (0.0, 0.0, 0.0));
        let (lo, hi) = w.plateau();
        assert_eq!(w.profile(lo).0, 1.0);
        assert_eq!(w.profile(hi).0, 1.0);
    }

    #[test]
    fn window_derivatives_match_differences() {
        let w = make_window(3).unwrap();
        let h = 1e-4;
        for k in 0..1000 {
            let x = TAU * (k as f64 + 0.5) / 1000.0;
            let p = |d: f64| w.profile(x + d * h);
            let d1 = (p(-2.0).0 - 8.0 * p(-1.0).0 + 8.0 * p(1.0).0 - p(2.0).0) / (12.0 * h);
            let d2 = (-p(-2.0).0 + 16.0 * p(-1.0).0 - 30.0 * p(0.0).0 + 16.0 * p(1.0).0 - p(2.0).0) / (12.0 * h * h);
            assert!((d1 - w.profile(x).1).abs() < 1e-6, "x={x}");
            assert!((d2 - w.profile(x).2).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn windowed_product_has_leibniz_partials() {
        let f = apply_window(&sinsin(), &make_window(3).unwrap()).unwrap();
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|k| (0.3 + 5.6 * ((k * 37) % 200) as f64 / 200.0, 0.3 + 5.6 * ((k * 91) % 200) as f64 / 200.0))
            .collect();
        assert!(f.fd_discrepancy(&pts, 1e-4) < 1e-5);
        for x in [0.0, 0.1, TAU - 0.1] {
            for p in [Partial::X, Partial::Y, Partial::XX, Partial::YY] {
                assert_eq!(f.partial(p).unwrap()(x, 2.0), 0.0);
            }
            assert_eq!(f.eval(x, 2.0), 0.0);
        }
        assert_eq!(f.eval(2.5, 3.5), sinsin().eval(2.5, 3.5));
    }

    #[test]
    fn sinsin_pipeline_passes() {
        let r = run_pipeline(&sinsin(), make_grid(64, 64).unwrap(), 8, 8, Tolerances::default()).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!(r.check("h_vs_exact").unwrap().max <= 1e-8);
        assert!(r.check("g_vs_f").unwrap().max <= 1e-2);
        assert!(r.timings_ms.is_empty());
    }

    #[test]
    fn zero_function_gives_zero_errors() {
        let f = AnalyticFunction2D::new(|_, _| 0.0).with(Partial::X, |_, _| 0.0).with(Partial::XY, |_, _| 0.0);
        let r = run_pipeline(&f, make_grid(16, 16).unwrap(), 4, 4, Tolerances::default()).unwrap();
        for (k, c) in &r.checks {
            assert_eq!(c.max, 0.0, "{k}");
            assert!(c.pass);
        }
    }

    #[test]
    fn rejects_non_flat_input() {
        let f = AnalyticFunction2D::new(|x, _| x.cos());
        let e = run_pipeline(&f, make_grid(16, 16).unwrap(), 4, 4, Tolerances::default());
        assert!(matches!(e, Err(Error::NotBoundaryFlat { .. })));
    }

    #[test]
    fn missing_dx_falls_back_to_differences() {
        let f = AnalyticFunction2D::new(|x, y| x.sin() * y.sin());
        let r = run_pipeline(&f, make_grid(64, 64).unwrap(), 8, 8, Tolerances::default()).unwrap();
        assert!(r.check("F_vs_fx").unwrap().note.as_deref().unwrap().starts_with("fd_fallback"));
        assert!(r.check("h_vs_exact").is_none());
    }

    #[test]
    fn report_roundtrip_and_nan_rejection() {
        let empty = VerificationReport::new(make_grid(8, 8).unwrap(), 2, 2, Tolerances::default());
        let bytes = serialize_report(&empty).unwrap();
        assert_eq!(serialize_report(&parse_report(&bytes).unwrap()).unwrap(), bytes);

        let r = run_pipeline(&sinsin(), make_grid(32, 32).unwrap(), 8, 8, Tolerances::default()).unwrap();
        let bytes = serialize_report(&r).unwrap();
        let back = parse_report(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(serialize_report(&back).unwrap(), bytes);

        let mut bad = r.clone();
        bad.checks.get_mut("g_vs_f").unwrap().max = f64::NAN;
        assert!(matches!(serialize_report(&bad), Err(Error::NonFiniteReport(_))));
        let mut bad = r;
        bad.decay.sxy = f64::INFINITY;
        assert!(serialize_report(&bad).is_err());
    }
}
