//! The normalised exponential bump `ψ(t) = exp(4 − 1/(t(1−t)))` on `(0, 1)`.

/// Golden-section maximiser of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Smooth bump with support exactly `(0, 1)` and peak `ψ(1/2) = 1`.
///
/// `A = max|ψ′|` and `max|ψ″|` are located once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpFunction {
    t_star: f64,
    a: f64,
    max_abs_d2: f64,
}

impl BumpFunction {
    pub fn eval(&self, t: f64) -> f64 {
        psi(t)
    }

    pub fn d1(&self, t: f64) -> f64 {
        psi_d1(t)
    }

    pub fn d2(&self, t: f64) -> f64 {
        psi_d2(t)
    }

    /// `A = max|ψ′|`, attained at [`BumpFunction::t_star`] (where `ψ′ = +A`)
    /// and at `1 − t_star` (where `ψ′ = −A`).
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn max_abs_d2(&self) -> f64 {
        self.max_abs_d2
    }
}

pub fn standard_bump() -> BumpFunction {
    let t_star = golden_max(psi_d1, 0.0, 0.5, 1e-13);
    let a = psi_d1(t_star);
    // |ψ″| has several local maxima; locate the best on a scan, then refine
    let n = 20_000;
    let (k, _) = (1..n)
        .map(|k| (k, psi_d2(k as f64 / n as f64).abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let h = 1.0 / n as f64;
    let tm = golden_max(|t| psi_d2(t).abs(), (k as f64 - 1.0) * h, (k as f64 + 1.0) * h, 1e-13);
    BumpFunction {
        t_star,
        a,
        max_abs_d2: psi_d2(tm).abs(),
    }
}

#[inline]
fn psi(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (t * (1.0 - t))).exp()
}

// With s = t(1−t) and g = −1/s: ψ = e^{4+g}, ψ′ = ψ g′, ψ″ = ψ (g″ + g′²),
// g′ = s′/s², g″ = (s″ s − 2 s′²)/s³, s′ = 1 − 2t, s″ = −2.

#[inline]
fn psi_d1(t: f64) -> f64 {
    let p = psi(t);
    if p == 0.0 {
        return 0.0;
    }
    let s = t * (1.0 - t);
    p * (1.0 - 2.0 * t) / (s * s)
}

#[inline]
fn psi_d2(t: f64) -> f64 {
    let p = psi(t);
    if p == 0.0 {
        return 0.0;
    }
    let s = t * (1.0 - t);
    let sp = 1.0 - 2.0 * t;
    let g1 = sp / (s * s);
    let g2 = (-2.0 * s - 2.0 * sp * sp) / (s * s * s);
    p * (g2 + g1 * g1)
}
