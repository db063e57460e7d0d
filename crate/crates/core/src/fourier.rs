//! Truncated 2D Fourier analysis and synthesis on the periodic grid, plus the
//! coefficient-space operators: spectral partials, the mixed operator
//! `−nm·a_nm`, decay sums, slices and the integration-by-parts moments.
//!
//! Coefficients follow `a_nm = (1/4π²) ∫∫ f e^{−inx} e^{−imy}`, discretised by
//! the trapezoid rule; synthesis carries no prefactor.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_norm, GridFunction2D, PeriodicGrid2D};

/// Bound on the imaginary residual of a synthesis, relative to `max(1, max|Re|)`.
pub const HERMITIAN_RESIDUAL_BOUND: f64 = 1e-9;

/// JSON export threshold on coefficient modulus.
pub const EXPORT_THRESHOLD: f64 = 1e-15;

/// Coefficients `coeff(n, m)` for `|n| <= nmax`, `|m| <= mmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs2D {
    nmax: usize,
    mmax: usize,
    data: Vec<Complex64>,
}

impl FourierCoeffs2D {
    pub fn zeros(nmax: usize, mmax: usize) -> Self {
        Self {
            nmax,
            mmax,
            data: vec![Complex64::new(0.0, 0.0); (2 * nmax + 1) * (2 * mmax + 1)],
        }
    }

    /// Builds a box from a generator called once per `(n, m)` in lexicographic order.
    pub fn from_fn(nmax: usize, mmax: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let mut c = Self::zeros(nmax, mmax);
        for n in c.n_range() {
            for m in c.m_range() {
                let k = c.index(n, m);
                c.data[k] = f(n, m);
            }
        }
        c
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn mmax(&self) -> usize {
        self.mmax
    }

    pub fn n_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.nmax as i64)..=self.nmax as i64
    }

    pub fn m_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.mmax as i64)..=self.mmax as i64
    }

    #[inline]
    fn index(&self, n: i64, m: i64) -> usize {
        debug_assert!(n.unsigned_abs() as usize <= self.nmax && m.unsigned_abs() as usize <= self.mmax);
        (n + self.nmax as i64) as usize * (2 * self.mmax + 1) + (m + self.mmax as i64) as usize
    }

    pub fn contains(&self, n: i64, m: i64) -> bool {
        n.unsigned_abs() as usize <= self.nmax && m.unsigned_abs() as usize <= self.mmax
    }

    /// Coefficient at `(n, m)`; zero outside the box.
    pub fn get(&self, n: i64, m: i64) -> Complex64 {
        if self.contains(n, m) {
            self.data[self.index(n, m)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, n: i64, m: i64, v: Complex64) {
        assert!(self.contains(n, m), "({n}, {m}) outside the {}x{} box", self.nmax, self.mmax);
        let k = self.index(n, m);
        self.data[k] = v;
    }

    /// Iterates `(n, m, coeff)` in lexicographic `(n, m)` order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let w = 2 * self.mmax + 1;
        self.data.iter().enumerate().map(move |(k, &c)| {
            (
                (k / w) as i64 - self.nmax as i64,
                (k % w) as i64 - self.mmax as i64,
                c,
            )
        })
    }

    fn map(&self, f: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let data = self.iter().map(|(n, m, c)| f(n, m, c)).collect();
        Self {
            nmax: self.nmax,
            mmax: self.mmax,
            data,
        }
    }

    /// `max |coeff(−n,−m) − conj(coeff(n,m))|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.iter()
            .map(|(n, m, c)| (self.get(-n, -m) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Coefficients of `f(y, x)`: `coeff'(n, m) = coeff(m, n)`.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.mmax, self.nmax, |n, m| self.get(m, n))
    }

    pub fn to_json(&self) -> CoeffsJson {
        CoeffsJson {
            nmax: self.nmax,
            mmax: self.mmax,
            coeffs: self
                .iter()
                .filter(|(_, _, c)| c.norm() > EXPORT_THRESHOLD)
                .map(|(n, m, c)| CoeffEntry {
                    n,
                    m,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &CoeffsJson) -> Result<Self> {
        let mut c = Self::zeros(j.nmax, j.mmax);
        for e in &j.coeffs {
            if !c.contains(e.n, e.m) {
                return Err(Error::IndexOutOfRange {
                    index: if e.n.unsigned_abs() as usize > j.nmax { e.n } else { e.m },
                    max: if e.n.unsigned_abs() as usize > j.nmax { j.nmax } else { j.mmax },
                });
            }
            c.set(e.n, e.m, Complex64::new(e.re, e.im));
        }
        Ok(c)
    }
}

/// Serialized coefficient box; only entries above [`EXPORT_THRESHOLD`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsJson {
    pub nmax: usize,
    pub mmax: usize,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub n: i64,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

/// 1D coefficients `coeff(m)` for `|m| <= mmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs1D {
    mmax: usize,
    data: Vec<Complex64>,
}

impl FourierCoeffs1D {
    pub fn zeros(mmax: usize) -> Self {
        Self {
            mmax,
            data: vec![Complex64::new(0.0, 0.0); 2 * mmax + 1],
        }
    }

    pub fn mmax(&self) -> usize {
        self.mmax
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize <= self.mmax {
            self.data[(m + self.mmax as i64) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, m: i64, v: Complex64) {
        assert!(m.unsigned_abs() as usize <= self.mmax);
        self.data[(m + self.mmax as i64) as usize] = v;
    }

    /// Partial sum `Σ coeff(m) e^{i m t_j}` at the nodes `t_j = 2πj/len`.
    pub fn synthesize(&self, len: usize) -> Vec<Complex64> {
        let tw = twiddles(len, 1.0);
        (0..len)
            .map(|j| {
                (-(self.mmax as i64)..=self.mmax as i64)
                    .map(|m| self.get(m) * tw[phase(m, j, len)])
                    .sum()
            })
            .collect()
    }
}

/// `e^{sign·2πik/len}` for `k = 0..len`.
fn twiddles(len: usize, sign: f64) -> Vec<Complex64> {
    (0..len)
        .map(|k| Complex64::from_polar(1.0, sign * TAU * k as f64 / len as f64))
        .collect()
}

/// Index of `e^{±i n t_j}` in a twiddle table of length `len`.
#[inline]
fn phase(n: i64, j: usize, len: usize) -> usize {
    (n * j as i64).rem_euclid(len as i64) as usize
}

fn check_box(grid: PeriodicGrid2D, nmax: usize, mmax: usize) -> Result<()> {
    if 2 * nmax + 1 > grid.nx() || 2 * mmax + 1 > grid.ny() {
        return Err(Error::BoxTooLarge {
            nmax,
            mmax,
            nx: grid.nx(),
            ny: grid.ny(),
        });
    }
    Ok(())
}

/// Discrete analysis by the separable route: one x-transform per retained
/// `n`, then a y-transform per retained `m`.
pub fn analyze(u: &GridFunction2D, nmax: usize, mmax: usize) -> Result<FourierCoeffs2D> {
    let grid = u.grid();
    check_box(grid, nmax, mmax)?;
    let ny = grid.ny();
    let twy = twiddles(ny, -1.0);
    let mut out = FourierCoeffs2D::zeros(nmax, mmax);
    for n in out.n_range() {
        let alpha = row_transform_unchecked(u, n);
        for m in out.m_range() {
            let s: Complex64 = alpha
                .iter()
                .enumerate()
                .map(|(j, &a)| a * twy[phase(m, j, ny)])
                .sum();
            out.set(n, m, s / ny as f64);
        }
    }
    Ok(out)
}

/// Reference analysis: the plain nested sum
/// `a_nm = (1/(nx·ny)) Σ_ij u_ij e^{−inx_i} e^{−imy_j}`.
pub fn analyze_direct(u: &GridFunction2D, nmax: usize, mmax: usize) -> Result<FourierCoeffs2D> {
    let grid = u.grid();
    check_box(grid, nmax, mmax)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    let twx = twiddles(nx, -1.0);
    let twy = twiddles(ny, -1.0);
    let scale = 1.0 / (nx * ny) as f64;
    Ok(FourierCoeffs2D::from_fn(nmax, mmax, |n, m| {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..nx {
            for j in 0..ny {
                s += u.get(i, j) * twx[phase(n, i, nx)] * twy[phase(m, j, ny)];
            }
        }
        s * scale
    }))
}

/// Evaluates the partial sum on `grid`, returning the real part and the
/// largest imaginary residual.
pub fn synthesize_with_residual(c: &FourierCoeffs2D, grid: PeriodicGrid2D) -> (GridFunction2D, f64) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let twx = twiddles(nx, 1.0);
    let twy = twiddles(ny, 1.0);
    // inner[n][j] = Σ_m c(n,m) e^{imy_j}
    let inner: Vec<Vec<Complex64>> = c
        .n_range()
        .map(|n| {
            (0..ny)
                .map(|j| c.m_range().map(|m| c.get(n, m) * twy[phase(m, j, ny)]).sum())
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(nx * ny);
    let mut resid = 0.0f64;
    for i in 0..nx {
        for j in 0..ny {
            let z: Complex64 = c
                .n_range()
                .zip(&inner)
                .map(|(n, row)| row[j] * twx[phase(n, i, nx)])
                .sum();
            values.push(z.re);
            resid = resid.max(z.im.abs());
        }
    }
    (GridFunction2D::from_index_fn(grid, |i, j| values[i * ny + j]), resid)
}

/// Real synthesis; rejects coefficient boxes whose imaginary residual shows
/// they are not Hermitian.
pub fn synthesize(c: &FourierCoeffs2D, grid: PeriodicGrid2D) -> Result<GridFunction2D> {
    let (u, resid) = synthesize_with_residual(c, grid);
    let bound = HERMITIAN_RESIDUAL_BOUND * u.max_abs().max(1.0);
    if resid >= bound {
        return Err(Error::NonHermitian {
            residual: resid,
            bound,
        });
    }
    Ok(u)
}

/// `i·n·coeff(n, m)`.
pub fn derivative_x(c: &FourierCoeffs2D) -> FourierCoeffs2D {
    c.map(|n, _, z| times_i_k(z, n))
}

/// `i·m·coeff(n, m)`.
pub fn derivative_y(c: &FourierCoeffs2D) -> FourierCoeffs2D {
    c.map(|_, m, z| times_i_k(z, m))
}

/// `−n·m·coeff(n, m)`, the symbol of the mixed second partial.
pub fn mixed_operator(c: &FourierCoeffs2D) -> FourierCoeffs2D {
    c.map(|n, m, z| {
        let k = -((n * m) as f64);
        Complex64::new(k * z.re, k * z.im)
    })
}

#[inline]
fn times_i_k(z: Complex64, k: i64) -> Complex64 {
    let k = k as f64;
    Complex64::new(-(k * z.im), k * z.re)
}

/// Weighted coefficient energies `Σn⁴|a|²`, `Σm⁴|a|²`, `Σn²m²|a|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayNorms {
    pub s4x: f64,
    pub s4y: f64,
    pub sxy: f64,
}

impl DecayNorms {
    /// `Sxy <= S4x + S4y`.
    pub fn inequality_holds(&self) -> bool {
        self.sxy <= self.s4x + self.s4y
    }

    pub fn excess(&self) -> f64 {
        (self.sxy - (self.s4x + self.s4y)).max(0.0)
    }
}

pub fn decay_norms(c: &FourierCoeffs2D) -> DecayNorms {
    let mut d = DecayNorms {
        s4x: 0.0,
        s4y: 0.0,
        sxy: 0.0,
    };
    for (n, m, z) in c.iter() {
        let a2 = z.norm_sqr();
        let (n2, m2) = ((n * n) as f64, (m * m) as f64);
        d.s4x += n2 * n2 * a2;
        d.s4y += m2 * m2 * a2;
        d.sxy += n2 * m2 * a2;
    }
    d
}

/// The 1D coefficients `m ↦ coeff(n, m)` of the x-frequency-`n` slice.
pub fn slice(c: &FourierCoeffs2D, n: i64) -> Result<FourierCoeffs1D> {
    if n.unsigned_abs() as usize > c.nmax() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: c.nmax(),
        });
    }
    let mut s = FourierCoeffs1D::zeros(c.mmax());
    for m in c.m_range() {
        s.set(m, c.get(n, m));
    }
    Ok(s)
}

/// `(1/nx) Σ_i u(i, j) e^{−inx_i}` at every y-node: the discrete
/// x-frequency-`n` projection taken directly from samples.
pub fn row_transform(u: &GridFunction2D, n: i64) -> Result<Vec<Complex64>> {
    let nx = u.grid().nx();
    if 2 * n.unsigned_abs() as usize + 1 > nx {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: (nx - 1) / 2,
        });
    }
    Ok(row_transform_unchecked(u, n))
}

fn row_transform_unchecked(u: &GridFunction2D, n: i64) -> Vec<Complex64> {
    let grid = u.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let tw = twiddles(nx, -1.0);
    let mut out = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        let w = tw[phase(n, i, nx)];
        for (o, &v) in out.iter_mut().zip(u.column(i)) {
            *o += w * v;
        }
    }
    let s = 1.0 / nx as f64;
    out.iter_mut().for_each(|o| *o *= s);
    out
}

/// 1D discrete analysis of equispaced samples on `[0, 2π)`.
pub fn analyze_1d(samples: &[f64], mmax: usize) -> Result<FourierCoeffs1D> {
    let len = samples.len();
    if 2 * mmax + 1 > len {
        return Err(Error::InvalidArgument(format!(
            "mmax {mmax} too large for {len} samples"
        )));
    }
    let tw = twiddles(len, -1.0);
    let mut c = FourierCoeffs1D::zeros(mmax);
    for m in -(mmax as i64)..=mmax as i64 {
        let s: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(j, &v)| v * tw[phase(m, j, len)])
            .sum();
        c.set(m, s / len as f64);
    }
    Ok(c)
}

/// `l2_norm(u)²` versus `4π²Σ|a|²`, relative to `l2_norm(u)²` (absolute when `u = 0`).
pub fn parseval_residual(u: &GridFunction2D, c: &FourierCoeffs2D) -> f64 {
    let lhs = l2_norm(u).powi(2);
    let rhs = 4.0 * PI * PI * c.energy();
    let diff = (lhs - rhs).abs();
    if lhs > 0.0 {
        diff / lhs
    } else {
        diff
    }
}

/// Integration-by-parts moments for `f` and `g = f′` at frequency `n`.
///
/// The cosine identity is `∫f cos nx = −(1/n) ∫g sin nx` and the sine identity
/// `∫f sin nx = (1/n) ∫g cos nx`. The `printed_*` fields carry the variant with
/// factor `−n` (resp. `n`) in place of `−1/n` (resp. `1/n`), which only agrees
/// at `n = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub printed_rhs: f64,
    pub printed_residual: f64,
    pub sin_lhs: f64,
    pub sin_rhs: f64,
    pub sin_residual: f64,
}

/// `∫₀^{2π} f cos nx dx` from coefficients.
fn cos_moment(c: &FourierCoeffs1D, n: i64) -> f64 {
    PI * (c.get(n) + c.get(-n)).re
}

/// `∫₀^{2π} f sin nx dx` from coefficients.
fn sin_moment(c: &FourierCoeffs1D, n: i64) -> f64 {
    -PI * (c.get(n) - c.get(-n)).im
}

pub fn ibp_check(fc: &FourierCoeffs1D, gc: &FourierCoeffs1D, n: i64) -> Result<IbpCheck> {
    if n <= 0 {
        return Err(Error::InvalidArgument(format!("ibp_check needs n >= 1, got {n}")));
    }
    let lim = fc.mmax().min(gc.mmax());
    if n as usize > lim {
        return Err(Error::IndexOutOfRange { index: n, max: lim });
    }
    let k = n as f64;
    let lhs = cos_moment(fc, n);
    let gs = sin_moment(gc, n);
    let rhs = -gs / k;
    let printed_rhs = -k * gs;
    let sin_lhs = sin_moment(fc, n);
    let sin_rhs = cos_moment(gc, n) / k;
    Ok(IbpCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        printed_rhs,
        printed_residual: (lhs - printed_rhs).abs(),
        sin_lhs,
        sin_rhs,
        sin_residual: (sin_lhs - sin_rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, AnalyticFunction2D};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid_fn(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> GridFunction2D {
        sample(&AnalyticFunction2D::new(f), make_grid(nx, ny).unwrap()).unwrap()
    }

    fn assert_box_close(a: &FourierCoeffs2D, b: &FourierCoeffs2D, tol: f64) {
        assert_eq!((a.nmax(), a.mmax()), (b.nmax(), b.mmax()));
        for (n, m, z) in a.iter() {
            assert!((z - b.get(n, m)).norm() <= tol, "({n},{m}): {z} vs {}", b.get(n, m));
        }
    }

    #[test]
    fn analyze_constant() {
        let u = grid_fn(6, 6, |_, _| 1.0);
        let a = analyze(&u, 2, 2).unwrap();
        for (n, m, z) in a.iter() {
            let want = if (n, m) == (0, 0) { 1.0 } else { 0.0 };
            assert!((z - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn analyze_cos_x() {
        let u = grid_fn(8, 8, |x, _| x.cos());
        let a = analyze(&u, 3, 3).unwrap();
        let mut want = FourierCoeffs2D::zeros(3, 3);
        want.set(1, 0, c(0.5, 0.0));
        want.set(-1, 0, c(0.5, 0.0));
        assert_box_close(&a, &want, 1e-12);
    }

    #[test]
    fn analyze_sin_sin() {
        let u = grid_fn(8, 8, |x, y| x.sin() * y.sin());
        let a = analyze(&u, 3, 3).unwrap();
        let mut want = FourierCoeffs2D::zeros(3, 3);
        want.set(1, 1, c(-0.25, 0.0));
        want.set(-1, -1, c(-0.25, 0.0));
        want.set(1, -1, c(0.25, 0.0));
        want.set(-1, 1, c(0.25, 0.0));
        assert_box_close(&a, &want, 1e-12);
    }

    #[test]
    fn analyze_rejects_oversized_box() {
        let u = grid_fn(8, 8, |_, _| 0.0);
        assert!(matches!(analyze(&u, 4, 3), Err(Error::BoxTooLarge { .. })));
        assert!(matches!(analyze(&u, 3, 4), Err(Error::BoxTooLarge { .. })));
        assert!(analyze(&u, 3, 3).is_ok());
    }

    #[test]
    fn fast_path_matches_direct_sum() {
        let u = grid_fn(12, 10, |x, y| (x + 0.3).sin().exp() * (2.0 * y).cos() + (x * y).sin());
        let fast = analyze(&u, 5, 4).unwrap();
        let slow = analyze_direct(&u, 5, 4).unwrap();
        assert_box_close(&fast, &slow, 1e-12);
    }

    #[test]
    fn synthesize_examples() {
        let g = make_grid(7, 5).unwrap();
        let mut one = FourierCoeffs2D::zeros(1, 1);
        one.set(0, 0, c(1.0, 0.0));
        let s = synthesize(&one, g).unwrap();
        assert!(s.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let mut cosx = FourierCoeffs2D::zeros(1, 0);
        cosx.set(1, 0, c(0.5, 0.0));
        cosx.set(-1, 0, c(0.5, 0.0));
        let s = synthesize(&cosx, g).unwrap();
        assert!(s.max_abs_diff(&grid_fn(7, 5, |x, _| x.cos())) < 1e-15);
    }

    #[test]
    fn round_trip_band_limited() {
        let u = grid_fn(16, 16, |x, y| (2.0 * x).sin() * (3.0 * y).cos());
        let back = synthesize(&analyze(&u, 4, 4).unwrap(), u.grid()).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn synthesize_flags_non_hermitian_input() {
        let mut z = FourierCoeffs2D::zeros(1, 1);
        z.set(1, 0, c(1.0, 0.0));
        let err = synthesize(&z, make_grid(8, 8).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonHermitian { .. }));
    }

    #[test]
    fn derivative_examples() {
        let z = FourierCoeffs2D::zeros(2, 2);
        assert_eq!(derivative_x(&z), z);
        assert_eq!(derivative_y(&z), z);
        assert_eq!(mixed_operator(&z), z);

        let mut e = FourierCoeffs2D::zeros(2, 2);
        e.set(1, 0, c(1.0, 0.0));
        assert_eq!(derivative_x(&e).get(1, 0), c(0.0, 1.0));

        let mut e = FourierCoeffs2D::zeros(2, 2);
        e.set(0, 1, c(1.0, 0.0));
        assert_eq!(derivative_y(&e).get(0, 1), c(0.0, 1.0));

        let mut e = FourierCoeffs2D::zeros(2, 2);
        e.set(1, 1, c(1.0, 0.0));
        assert_eq!(mixed_operator(&e).get(1, 1), c(-1.0, 0.0));
    }

    #[test]
    fn spectral_derivatives_match_analyzed_exact_derivatives() {
        let u = grid_fn(16, 16, |x, y| (2.0 * x).sin() * y.cos());
        let du = grid_fn(16, 16, |x, y| 2.0 * (2.0 * x).cos() * y.cos());
        assert_box_close(&derivative_x(&analyze(&u, 5, 5).unwrap()), &analyze(&du, 5, 5).unwrap(), 1e-12);

        let v = grid_fn(16, 16, |x, y| x.cos() * (3.0 * y).sin());
        let dv = grid_fn(16, 16, |x, y| 3.0 * x.cos() * (3.0 * y).cos());
        assert_box_close(&derivative_y(&analyze(&v, 5, 5).unwrap()), &analyze(&dv, 5, 5).unwrap(), 1e-12);
    }

    #[test]
    fn decay_norm_examples() {
        let mut e = FourierCoeffs2D::zeros(3, 3);
        e.set(2, 3, c(1.0, 0.0));
        let d = decay_norms(&e);
        assert_eq!((d.s4x, d.s4y, d.sxy), (16.0, 81.0, 36.0));
        assert!(d.inequality_holds());
        let d = decay_norms(&FourierCoeffs2D::zeros(2, 2));
        assert_eq!((d.s4x, d.s4y, d.sxy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn slice_examples() {
        let mut e = FourierCoeffs2D::zeros(2, 2);
        e.set(1, 2, c(5.0, 0.0));
        assert_eq!(slice(&e, 1).unwrap().get(2), c(5.0, 0.0));
        let s0 = slice(&e, 0).unwrap();
        assert!((-2..=2).all(|m| s0.get(m) == c(0.0, 0.0)));
        assert!(slice(&e, 3).is_err());

        let u = grid_fn(8, 8, |x, y| x.sin() * y.sin());
        let s = slice(&analyze(&u, 3, 3).unwrap(), 1).unwrap();
        assert!((s.get(1) - c(-0.25, 0.0)).norm() < 1e-12);
        assert!((s.get(-1) - c(0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn slices_resum_to_synthesis() {
        let u = grid_fn(12, 12, |x, y| (x + 2.0 * y).cos() + (3.0 * x).sin() * y.sin());
        let a = analyze(&u, 4, 4).unwrap();
        let g = make_grid(9, 11).unwrap();
        let direct = synthesize(&a, g).unwrap();
        let slices: Vec<Vec<Complex64>> = a.n_range().map(|n| slice(&a, n).unwrap().synthesize(g.ny())).collect();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let z: Complex64 = a
                    .n_range()
                    .zip(&slices)
                    .map(|(n, s)| s[j] * Complex64::from_polar(1.0, n as f64 * g.x(i)))
                    .sum();
                assert!((z.re - direct.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_transform_examples() {
        let one = grid_fn(8, 6, |_, _| 1.0);
        assert!(row_transform(&one, 0).unwrap().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        assert!(row_transform(&one, 1).unwrap().iter().all(|z| z.norm() < 1e-15));
        assert!(row_transform(&one, 4).is_err());

        let u = grid_fn(8, 6, |x, y| x.cos() * y.sin());
        let g = u.grid();
        for (j, z) in row_transform(&u, 1).unwrap().iter().enumerate() {
            assert!((z - c(0.5 * g.y(j).sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn row_transform_agrees_with_slice_synthesis() {
        let u = grid_fn(10, 12, |x, y| (x - y).sin() + (2.0 * x).cos() * (3.0 * y).cos());
        let a = analyze(&u, 4, 5).unwrap();
        for n in -4..=4 {
            let direct = row_transform(&u, n).unwrap();
            let via = slice(&a, n).unwrap().synthesize(12);
            for (p, q) in direct.iter().zip(&via) {
                assert!((p - q).norm() < 1e-12);
            }
        }
    }

    fn coeffs_1d(f: impl Fn(f64) -> f64, len: usize, mmax: usize) -> FourierCoeffs1D {
        let s: Vec<f64> = (0..len).map(|j| f(TAU * j as f64 / len as f64)).collect();
        analyze_1d(&s, mmax).unwrap()
    }

    #[test]
    fn ibp_first_harmonic() {
        let fc = coeffs_1d(f64::cos, 16, 4);
        let gc = coeffs_1d(|x| -x.sin(), 16, 4);
        let r = ibp_check(&fc, &gc, 1).unwrap();
        assert!((r.lhs - PI).abs() < 1e-12);
        assert!((r.rhs - PI).abs() < 1e-12);
        assert!(r.residual <= 1e-12);
        assert!(r.printed_residual <= 1e-12);
        assert!(r.sin_residual <= 1e-12);
    }

    #[test]
    fn ibp_second_harmonic_discriminates() {
        let fc = coeffs_1d(|x| (2.0 * x).cos(), 16, 4);
        let gc = coeffs_1d(|x| -2.0 * (2.0 * x).sin(), 16, 4);
        let r = ibp_check(&fc, &gc, 2).unwrap();
        assert!((r.lhs - PI).abs() < 1e-12);
        assert!((r.rhs - PI).abs() < 1e-12);
        assert!((r.printed_rhs - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ibp_zero_and_errors() {
        let z = FourierCoeffs1D::zeros(3);
        let r = ibp_check(&z, &z, 2).unwrap();
        assert_eq!((r.lhs, r.rhs, r.residual), (0.0, 0.0, 0.0));
        assert!(ibp_check(&z, &z, 0).is_err());
        assert!(ibp_check(&z, &z, 4).is_err());
    }

    #[test]
    fn json_lists_nonzero_entries_in_order() {
        let u = grid_fn(16, 16, |x, y| x.sin() * y.sin());
        let j = analyze(&u, 4, 4).unwrap().to_json();
        let idx: Vec<(i64, i64)> = j.coeffs.iter().map(|e| (e.n, e.m)).collect();
        assert_eq!(idx, vec![(-1, -1), (-1, 1), (1, -1), (1, 1)]);
        let back = FourierCoeffs2D::from_json(&j).unwrap();
        assert_eq!(back.to_json(), j);
    }
}
