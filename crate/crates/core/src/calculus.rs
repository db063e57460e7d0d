//! Real-variable numerics on the periodic grid: central differences,
//! cumulative trapezoid primitives, and the Hölder / joint-continuity scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample, AnalyticFunction2D, GridFunction2D, PeriodicGrid2D};

/// Above this many samples [`holder_modulus`] stops checking every pair.
pub const HOLDER_ALL_PAIRS_LIMIT: usize = 4096;

const HOLDER_RANDOM_PAIRS: usize = 4_000_000;
const HOLDER_DEFAULT_SEED: u64 = 0x5eed;

fn require_nx(u: &GridFunction2D, min: usize) -> Result<()> {
    let g = u.grid();
    if g.nx() < min {
        return Err(Error::GridTooSmall { nx: g.nx(), ny: g.ny(), min });
    }
    Ok(())
}

fn require_ny(u: &GridFunction2D, min: usize) -> Result<()> {
    let g = u.grid();
    if g.ny() < min {
        return Err(Error::GridTooSmall { nx: g.nx(), ny: g.ny(), min });
    }
    Ok(())
}

/// Periodic central difference along x.
pub fn fd_partial_x(u: &GridFunction2D) -> Result<GridFunction2D> {
    require_nx(u, 3)?;
    let g = u.grid();
    let nx = g.nx();
    let inv = 1.0 / (2.0 * g.dx());
    Ok(GridFunction2D::from_index_fn(g, |i, j| {
        (u.get((i + 1) % nx, j) - u.get((i + nx - 1) % nx, j)) * inv
    }))
}

/// Periodic central difference along y.
pub fn fd_partial_y(u: &GridFunction2D) -> Result<GridFunction2D> {
    require_ny(u, 3)?;
    let g = u.grid();
    let ny = g.ny();
    let inv = 1.0 / (2.0 * g.dy());
    Ok(GridFunction2D::from_index_fn(g, |i, j| {
        (u.get(i, (j + 1) % ny) - u.get(i, (j + ny - 1) % ny)) * inv
    }))
}

/// Four-point mixed stencil
/// `(u[i+1,j+1] − u[i+1,j−1] − u[i−1,j+1] + u[i−1,j−1]) / (4ΔxΔy)`,
/// evaluated as the composition of the two central differences.
pub fn fd_mixed(u: &GridFunction2D) -> Result<GridFunction2D> {
    require_nx(u, 3)?;
    require_ny(u, 3)?;
    fd_partial_y(&fd_partial_x(u)?)
}

/// Cumulative trapezoid rule starting at 0: `out[0] = 0`,
/// `out[k] = out[k−1] + step·(v[k−1] + v[k])/2`.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, &v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * step * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// `F(x, y) = ∫₀ʸ h(x, t) dt` by cumulative trapezoid along each column.
pub fn primitive_y(h: &GridFunction2D) -> GridFunction2D {
    let g = h.grid();
    let ny = g.ny();
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.nx() {
        values.extend(cumulative_trapezoid(h.column(i), g.dy()));
    }
    GridFunction2D::from_index_fn(g, |i, j| values[i * ny + j])
}

/// `∫₀ˣ u(s, y) ds` by cumulative trapezoid along each row.
pub fn primitive_x(u: &GridFunction2D) -> GridFunction2D {
    let g = u.grid();
    let ny = g.ny();
    let mut values = vec![0.0; g.len()];
    for j in 0..ny {
        for (i, v) in cumulative_trapezoid(&u.row(j), g.dx()).into_iter().enumerate() {
            values[i * ny + j] = v;
        }
    }
    GridFunction2D::from_index_fn(g, |i, j| values[i * ny + j])
}

/// `G(x, y) = ∫₀ˣ du ∫₀ʸ h(u, v) dv`.
pub fn primitive_xy(h: &GridFunction2D) -> GridFunction2D {
    primitive_x(&primitive_y(h))
}

/// Outcome of [`tolstov_slice_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub residual: f64,
    pub column: usize,
    pub snapped_x: f64,
    pub snap_distance: f64,
}

/// Builds `f = ∫₀ˣ∫₀ʸ h` on the grid, differentiates it in x at the column
/// nearest `x0`, and compares with `∫₀ʸ h(x0, v) dv` (trapezoid on the same
/// y-nodes, at the snapped abscissa). Returns the max residual over y-nodes.
pub fn tolstov_slice_check(h: &AnalyticFunction2D, x0: f64, grid: PeriodicGrid2D) -> Result<SliceCheck> {
    let hs = sample(h, grid)?;
    let f = primitive_xy(&hs);
    let nx = grid.nx();
    let i0 = grid.nearest_column(x0);
    let xs = grid.x(i0);
    let dx = grid.dx();
    // f is a primitive from x = 0, not periodic; stay one-sided at the ends
    let dfdx = |j: usize| -> f64 {
        if i0 == 0 {
            (-3.0 * f.get(0, j) + 4.0 * f.get(1, j) - f.get(2, j)) / (2.0 * dx)
        } else if i0 == nx - 1 {
            (3.0 * f.get(nx - 1, j) - 4.0 * f.get(nx - 2, j) + f.get(nx - 3, j)) / (2.0 * dx)
        } else {
            (f.get(i0 + 1, j) - f.get(i0 - 1, j)) / (2.0 * dx)
        }
    };
    let line: Vec<f64> = (0..grid.ny()).map(|j| h.eval(xs, grid.y(j))).collect();
    let quad = cumulative_trapezoid(&line, grid.dy());
    let residual = quad
        .iter()
        .enumerate()
        .map(|(j, q)| (dfdx(j) - q).abs())
        .fold(0.0, f64::max);
    Ok(SliceCheck {
        residual,
        column: i0,
        snapped_x: xs,
        snap_distance: (xs - x0.rem_euclid(std::f64::consts::TAU)).abs(),
    })
}

/// Result of [`holder_modulus`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderResult {
    pub worst_ratio: f64,
    pub pass: bool,
    pub pairs_checked: u64,
}

/// Largest `|g(x₁) − g(x₀)| / sqrt(x₁ − x₀)` over sample pairs on `[0, 2π)`,
/// tested against `sqrt(c)` with a relative slack of `1e−9`.
pub fn holder_modulus(g: &[f64], c: f64) -> Result<HolderResult> {
    holder_modulus_seeded(g, c, HOLDER_DEFAULT_SEED)
}

/// As [`holder_modulus`]; `seed` drives the pair sampling used past
/// [`HOLDER_ALL_PAIRS_LIMIT`] samples.
pub fn holder_modulus_seeded(g: &[f64], c: f64, seed: u64) -> Result<HolderResult> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("Hölder constant must be >= 0, got {c}")));
    }
    let len = g.len();
    if len < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {len}")));
    }
    let dx = std::f64::consts::TAU / len as f64;
    let ratio = |a: usize, b: usize| -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (g[hi] - g[lo]).abs() / (dx * (hi - lo) as f64).sqrt()
    };
    let mut worst = 0.0f64;
    let mut pairs = 0u64;
    if len <= HOLDER_ALL_PAIRS_LIMIT {
        for a in 0..len {
            for b in a + 1..len {
                worst = worst.max(ratio(a, b));
            }
        }
        pairs = (len * (len - 1) / 2) as u64;
    } else {
        for a in 0..len - 1 {
            worst = worst.max(ratio(a, a + 1));
            pairs += 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..HOLDER_RANDOM_PAIRS {
            let a = rng.gen_range(0..len);
            let b = rng.gen_range(0..len);
            if a != b {
                worst = worst.max(ratio(a, b));
                pairs += 1;
            }
        }
    }
    Ok(HolderResult {
        worst_ratio: worst,
        pass: worst <= c.sqrt() * (1.0 + 1e-9),
        pairs_checked: pairs,
    })
}

/// Per-row Hölder results and the largest local oscillation of a sampled
/// first partial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityScan {
    pub rows: usize,
    pub rows_passed: usize,
    pub worst_ratio: f64,
    pub max_oscillation: f64,
    /// Node whose 3x3 periodic neighbourhood attains `max_oscillation`.
    pub oscillation_node: (usize, usize),
}

impl ContinuityScan {
    pub fn all_rows_pass(&self) -> bool {
        self.rows_passed == self.rows
    }
}

/// Runs [`holder_modulus`] on every y-row of `fx` and records the maximum
/// oscillation `max − min` over periodic neighbourhoods of radius one node.
pub fn joint_continuity_scan(fx: &GridFunction2D, c: f64) -> Result<ContinuityScan> {
    let g = fx.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut rows_passed = 0;
    let mut worst = 0.0f64;
    for j in 0..ny {
        let r = holder_modulus(&fx.row(j), c)?;
        worst = worst.max(r.worst_ratio);
        if r.pass {
            rows_passed += 1;
        }
    }
    let mut max_osc = 0.0f64;
    let mut at = (0, 0);
    for i in 0..nx {
        for j in 0..ny {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for di in [nx - 1, 0, 1] {
                for dj in [ny - 1, 0, 1] {
                    let v = fx.get((i + di) % nx, (j + dj) % ny);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi - lo > max_osc {
                max_osc = hi - lo;
                at = (i, j);
            }
        }
    }
    Ok(ContinuityScan {
        rows: ny,
        rows_passed,
        worst_ratio: worst,
        max_oscillation: max_osc,
        oscillation_node: at,
    })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol` and at most `depth` bisections along any branch.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    step(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}
