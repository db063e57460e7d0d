//! The two counterexample series built from a fat Cantor set.
//!
//! * [`SeriesKind::Thm51`]: `f = Σ ε_n ψ((x−a_n)/ε_n) ψ((y−c_n)/ε_n)` over
//!   pairwise disjoint rectangles `W_n = U_n × V_n` cut from removed
//!   intervals. Separately smooth, with `sup_y ∫|f_xx| dx` finite, yet `f_x`
//!   jumps by `A = max|ψ′|` next to every point of `C × C`.
//! * [`SeriesKind::Thm52`]: `f = Σ φ_n(x) ψ((y−a_n)/(b_n−a_n))` with `φ_n` a
//!   slope-±1 zigzag of height `ε_n`. `f_xx = 0` off finite break sets, `f_yy`
//!   is continuous, and `f_x` flips between `±1` and `0` across `B`.
//!
//! Every point of `[0, 1]²` meets at most one term, so all derivatives are
//! evaluated term-wise and exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bump::{standard_bump, BumpFunction};
use super::cantor::{FatCantorSet, Interval};
use crate::calculus::adaptive_simpson;
use crate::error::{Error, Result};
use crate::grid::{AnalyticFunction2D, Partial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Thm51,
    Thm52,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Thm51 => "thm51",
            SeriesKind::Thm52 => "thm52",
        }
    }
}

/// Quantity requested from [`CounterexampleSeries::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    F,
    Fx,
    Fy,
    Fxx,
    Fyy,
    Fxy,
}

/// One term of a series. For `Thm52`, `x_support` is all of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// 1-based term index.
    pub n: usize,
    /// Cantor level the supporting interval(s) were cut from.
    pub level: usize,
    pub eps: f64,
    pub x_support: Interval,
    pub y_support: Interval,
    /// `(u_n, v_n)`: a point where `|f_x| = A` (Thm51) or `f_x = 1` (Thm52).
    pub witness: (f64, f64),
    /// `(k, m, l)` from the enumeration of triples (Thm51 only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub triple: Option<(u64, u64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSeries {
    kind: SeriesKind,
    bump: BumpFunction,
    terms: Vec<Term>,
    /// Term positions sorted by the left endpoint of the key interval
    /// (`x_support` for Thm51, `y_support` for Thm52).
    order: Vec<usize>,
    cantor_levels: usize,
    cantor_removal: f64,
    cantor_measure: f64,
}

/// Inverse of Cantor pairing on `N₀`.
fn unpair(z: u64) -> (u64, u64) {
    let mut w = ((((8 * z as u128 + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
    // correct the float estimate
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let t = w * (w + 1) / 2;
    let b = z - t;
    (w - b, b)
}

/// The bijection `N → N³` fixed as the inverse of Cantor three-tupling
/// `π(π(k−1, m−1), l−1) = n − 1`.
pub fn triple_of(n: u64) -> (u64, u64, u64) {
    assert!(n >= 1);
    let (z, c) = unpair(n - 1);
    let (a, b) = unpair(z);
    (a + 1, b + 1, c + 1)
}

/// Unused interval of `level` lying inside `[p − r, p + r]`, closest to `p`.
fn pick(level: &[Interval], used: &[bool], p: f64, r: f64) -> Option<usize> {
    let lo = level.partition_point(|iv| iv.a < p - r);
    let hi = level.partition_point(|iv| iv.b <= p + r);
    (lo..hi)
        .filter(|&k| !used[k])
        .min_by(|&i, &j| (level[i].mid() - p).abs().total_cmp(&(level[j].mid() - p).abs()))
}

/// Greedy realisation of the rectangles `W_n = U_n × V_n`.
///
/// Term `n` uses the triple `(k, m, l)` from [`triple_of`]; `U_n` and `V_n`
/// are equal-length removed intervals, unused by earlier terms on their axis,
/// inside the `1/l` box around `(p_k, p_m)`. Levels are tried coarsest first.
pub fn construct_thm51(set: &FatCantorSet, nterms: usize) -> Result<CounterexampleSeries> {
    let bump = standard_bump();
    let p = set.endpoints();
    let levels = set.levels();
    let mut used_u: Vec<Vec<bool>> = (1..=levels).map(|n| vec![false; set.level(n).len()]).collect();
    let mut used_v = used_u.clone();
    let mut terms = Vec::with_capacity(nterms.min(set.removed_count()));
    for n in 1..=nterms {
        if n > set.removed_count() {
            return Err(Error::Unconstructible {
                term: n,
                reason: format!("only {} removed intervals exist for the disjoint U_n", set.removed_count()),
            });
        }
        let (k, m, l) = triple_of(n as u64);
        if k as usize > p.len() || m as usize > p.len() {
            return Err(Error::Unconstructible {
                term: n,
                reason: format!("triple ({k}, {m}, {l}) needs endpoint index beyond the {} available", p.len()),
            });
        }
        let (pk, pm, r) = (p[k as usize - 1], p[m as usize - 1], 1.0 / l as f64);
        let found = (1..=levels).find_map(|lv| {
            let ivs = set.level(lv);
            let iu = pick(ivs, &used_u[lv - 1], pk, r)?;
            let iv = pick(ivs, &used_v[lv - 1], pm, r)?;
            Some((lv, iu, iv))
        });
        let Some((lv, iu, iv)) = found else {
            return Err(Error::Unconstructible {
                term: n,
                reason: format!(
                    "no unused equal-length pair within 1/{l} of (p_{k}, p_{m}) = ({pk}, {pm})"
                ),
            });
        };
        used_u[lv - 1][iu] = true;
        used_v[lv - 1][iv] = true;
        let (u, v) = (set.level(lv)[iu], set.level(lv)[iv]);
        let eps = u.len();
        terms.push(Term {
            n,
            level: lv,
            eps,
            x_support: u,
            y_support: v,
            witness: (u.a + bump.t_star() * eps, v.a + 0.5 * v.len()),
            triple: Some((k, m, l)),
        });
    }
    Ok(CounterexampleSeries::new(SeriesKind::Thm51, bump, terms, set))
}

/// `ε_n = (b_n − a_n)³ / n²`, so `ε_n/(b_n − a_n)²` is strictly decreasing to 0.
pub fn thm52_epsilon(len: f64, n: usize) -> f64 {
    len * len * len / (n * n) as f64
}

/// One term per removed interval of `set`, in construction order.
pub fn construct_thm52(set: &FatCantorSet, nterms: usize) -> Result<CounterexampleSeries> {
    if nterms > set.removed_count() {
        return Err(Error::Unconstructible {
            term: set.removed_count() + 1,
            reason: format!("the set has only {} removed intervals", set.removed_count()),
        });
    }
    let bump = standard_bump();
    let terms = set
        .removed()
        .take(nterms)
        .enumerate()
        .map(|(k, (level, iv))| {
            let n = k + 1;
            let eps = thm52_epsilon(iv.len(), n);
            Term {
                n,
                level,
                eps,
                x_support: Interval { a: 0.0, b: 1.0 },
                y_support: *iv,
                witness: (0.5 * eps, iv.a + 0.5 * iv.len()),
                triple: None,
            }
        })
        .collect();
    Ok(CounterexampleSeries::new(SeriesKind::Thm52, bump, terms, set))
}

impl CounterexampleSeries {
    fn new(kind: SeriesKind, bump: BumpFunction, terms: Vec<Term>, set: &FatCantorSet) -> Self {
        let key = |t: &Term| match kind {
            SeriesKind::Thm51 => t.x_support.a,
            SeriesKind::Thm52 => t.y_support.a,
        };
        let mut order: Vec<usize> = (0..terms.len()).collect();
        order.sort_by(|&i, &j| key(&terms[i]).total_cmp(&key(&terms[j])));
        Self {
            kind,
            bump,
            terms,
            order,
            cantor_levels: set.levels(),
            cantor_removal: set.removal(),
            cantor_measure: set.measure(),
        }
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    pub fn cantor_measure(&self) -> f64 {
        self.cantor_measure
    }

    /// Term whose support contains `(x, y)`, if any.
    pub fn active_term(&self, x: f64, y: f64) -> Option<&Term> {
        let (key, other) = match self.kind {
            SeriesKind::Thm51 => (x, y),
            SeriesKind::Thm52 => (y, x),
        };
        let k = self.order.partition_point(|&i| self.key_interval(&self.terms[i]).a < key);
        if k == 0 {
            return None;
        }
        let t = &self.terms[self.order[k - 1]];
        let (ki, oi) = match self.kind {
            SeriesKind::Thm51 => (t.x_support, t.y_support),
            SeriesKind::Thm52 => (t.y_support, t.x_support),
        };
        (ki.contains(key) && (self.kind == SeriesKind::Thm52 || oi.contains(other))).then_some(t)
    }

    fn key_interval(&self, t: &Term) -> Interval {
        match self.kind {
            SeriesKind::Thm51 => t.x_support,
            SeriesKind::Thm52 => t.y_support,
        }
    }

    /// Exact value of `what` for the finite partial sum at `(x, y) ∈ [0, 1]²`.
    pub fn eval(&self, x: f64, y: f64, what: Quantity) -> Result<f64> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(Error::InvalidArgument(format!("({x}, {y}) outside [0, 1]²")));
        }
        match self.active_term(x, y) {
            Some(t) => self.term_value(t, x, y, what),
            None => Ok(0.0),
        }
    }

    /// Sums every term; used to cross-check the active-term lookup.
    pub fn eval_naive(&self, x: f64, y: f64, what: Quantity) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            let inside = match self.kind {
                SeriesKind::Thm51 => t.x_support.contains(x) && t.y_support.contains(y),
                SeriesKind::Thm52 => t.y_support.contains(y),
            };
            if inside {
                s += self.term_value(t, x, y, what)?;
            }
        }
        Ok(s)
    }

    fn term_value(&self, t: &Term, x: f64, y: f64, what: Quantity) -> Result<f64> {
        let b = &self.bump;
        match self.kind {
            SeriesKind::Thm51 => {
                let e = t.eps;
                let tx = (x - t.x_support.a) / e;
                let ty = (y - t.y_support.a) / e;
                Ok(match what {
                    Quantity::F => e * b.eval(tx) * b.eval(ty),
                    Quantity::Fx => b.d1(tx) * b.eval(ty),
                    Quantity::Fy => b.eval(tx) * b.d1(ty),
                    Quantity::Fxx => b.d2(tx) * b.eval(ty) / e,
                    Quantity::Fyy => b.eval(tx) * b.d2(ty) / e,
                    Quantity::Fxy => b.d1(tx) * b.d1(ty) / e,
                })
            }
            SeriesKind::Thm52 => {
                let len = t.y_support.len();
                let ty = (y - t.y_support.a) / len;
                let (phi, slope) = zigzag(x, t.eps);
                let slope = || slope.ok_or(Error::BreakNode { term: t.n, x });
                Ok(match what {
                    Quantity::F => phi * b.eval(ty),
                    Quantity::Fx => slope()? * b.eval(ty),
                    Quantity::Fy => phi * b.d1(ty) / len,
                    Quantity::Fxx => {
                        slope()?;
                        0.0
                    }
                    Quantity::Fyy => phi * b.d2(ty) / (len * len),
                    Quantity::Fxy => slope()? * b.d1(ty) / len,
                })
            }
        }
    }

    /// `(sup_y ∫|f_xx| dx, sup_x ∫|f_yy| dy)` for a Thm51 series.
    ///
    /// A line meets at most one `W_n`, and along it the integral is
    /// proportional to the cross-factor `ψ(·)`, which peaks at 1 on the
    /// centre line of `W_n`; each supremum is therefore taken over the centre
    /// lines, integrated by adaptive Simpson split at the zeros of `ψ″`.
    pub fn l1_second_derivative_bound(&self) -> Result<(f64, f64)> {
        if self.kind != SeriesKind::Thm51 {
            return Err(Error::InvalidArgument(
                "the L1 bound on second derivatives applies to thm51 series only".into(),
            ));
        }
        let ts = self.bump.t_star();
        let mut sx = 0.0f64;
        let mut sy = 0.0f64;
        for t in &self.terms {
            let e = t.eps;
            let line = |lo: f64, f: &dyn Fn(f64) -> f64| -> f64 {
                let knots = [lo, lo + ts * e, lo + (1.0 - ts) * e, lo + e];
                knots
                    .windows(2)
                    .map(|w| adaptive_simpson(f, w[0], w[1], 1e-11, 50))
                    .sum()
            };
            let yc = t.y_support.mid();
            let xc = t.x_support.mid();
            let ix = line(t.x_support.a, &|x| {
                self.term_value(t, x, yc, Quantity::Fxx).unwrap_or(0.0).abs()
            });
            let iy = line(t.y_support.a, &|y| {
                self.term_value(t, xc, y, Quantity::Fyy).unwrap_or(0.0).abs()
            });
            sx = sx.max(ix);
            sy = sy.max(iy);
        }
        Ok((sx, sy))
    }

    /// Per-term `ε_n / (b_n − a_n)²` for Thm52.
    pub fn thm52_ratios(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| t.eps / (t.y_support.len() * t.y_support.len()))
            .collect()
    }

    /// Per-term uniform bound `sup|φ_n ψ_n″| ≤ ε_n max|ψ″| / (b_n − a_n)²` (Thm52).
    pub fn thm52_fyy_bounds(&self) -> Vec<f64> {
        let m = self.bump.max_abs_d2();
        self.thm52_ratios().into_iter().map(|r| r * m).collect()
    }

    /// Number of break nodes `{jε_n} ∩ [0, 1]` of a Thm52 term.
    pub fn break_count(&self, t: &Term) -> u64 {
        (1.0 / t.eps).floor() as u64 + 1
    }

    /// Construction invariants; returns the first violation, named.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        match self.kind {
            SeriesKind::Thm51 => self.check_thm51(),
            SeriesKind::Thm52 => self.check_thm52(),
        }
    }

    fn check_thm51(&self) -> std::result::Result<(), String> {
        let disjoint = |name: &str, ivs: Vec<Interval>| -> std::result::Result<(), String> {
            let mut ivs = ivs;
            ivs.sort_by(|p, q| p.a.total_cmp(&q.a));
            match ivs.windows(2).find(|w| w[0].b > w[1].a) {
                Some(w) => Err(format!("{name} intervals ({}, {}) and ({}, {}) intersect", w[0].a, w[0].b, w[1].a, w[1].b)),
                None => Ok(()),
            }
        };
        disjoint("U_n", self.terms.iter().map(|t| t.x_support).collect())?;
        disjoint("V_n", self.terms.iter().map(|t| t.y_support).collect())?;
        let a = self.bump.a();
        for t in &self.terms {
            let (lu, lv) = (t.x_support.len(), t.y_support.len());
            if lu != t.eps || (lv - t.eps).abs() > 4.0 * f64::EPSILON * t.y_support.b {
                return Err(format!("term {}: side lengths {lu} and {lv} differ from eps {}", t.n, t.eps));
            }
            let fx = self.eval(t.witness.0, t.witness.1, Quantity::Fx).map_err(|e| e.to_string())?;
            if (fx.abs() - a).abs() > 1e-12 {
                return Err(format!("term {}: |f_x| at the witness is {} not A = {a}", t.n, fx.abs()));
            }
        }
        Ok(())
    }

    fn check_thm52(&self) -> std::result::Result<(), String> {
        let ratios = self.thm52_ratios();
        if let Some(k) = ratios.windows(2).position(|w| w[1] >= w[0]) {
            return Err(format!(
                "eps_n/(b_n-a_n)^2 not strictly decreasing at term {}: {} -> {}",
                k + 2,
                ratios[k],
                ratios[k + 1]
            ));
        }
        for t in &self.terms {
            let fx = self.eval(t.witness.0, t.witness.1, Quantity::Fx).map_err(|e| e.to_string())?;
            if (fx - 1.0).abs() > 1e-12 {
                return Err(format!("term {}: f_x at the peak-row witness is {fx}, expected 1", t.n));
            }
        }
        Ok(())
    }

    /// Checks condition (d): each `W_n` lies in the `1/l` box around
    /// `(p_k, p_m)` for the endpoint list of the originating set.
    pub fn check_boxes(&self, endpoints: &[f64]) -> std::result::Result<(), String> {
        for t in &self.terms {
            let Some((k, m, l)) = t.triple else { continue };
            let (pk, pm, r) = (endpoints[k as usize - 1], endpoints[m as usize - 1], 1.0 / l as f64);
            let inside = |iv: Interval, p: f64| iv.a >= p - r && iv.b <= p + r;
            if !inside(t.x_support, pk) || !inside(t.y_support, pm) {
                return Err(format!("term {}: W_n leaves the 1/{l} box around (p_{k}, p_{m})", t.n));
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> SeriesMetadata {
        let ratios = (self.kind == SeriesKind::Thm52).then(|| self.thm52_ratios());
        let bounds = (self.kind == SeriesKind::Thm52).then(|| self.thm52_fyy_bounds());
        SeriesMetadata {
            kind: self.kind,
            nterms: self.terms.len(),
            cantor: CantorMetadata {
                levels: self.cantor_levels,
                removal: self.cantor_removal,
                measure: self.cantor_measure,
            },
            params: SeriesParams {
                bump: "exp(4 - 1/(t(1-t))) on (0,1)".into(),
                a: self.bump.a(),
                t_star: self.bump.t_star(),
                max_abs_d2: self.bump.max_abs_d2(),
                bijection: match self.kind {
                    SeriesKind::Thm51 => Some("inverse Cantor three-tupling".into()),
                    SeriesKind::Thm52 => None,
                },
                eps_rule: match self.kind {
                    SeriesKind::Thm51 => "eps_n = b_n - a_n = d_n - c_n".into(),
                    SeriesKind::Thm52 => "eps_n = (b_n - a_n)^3 / n^2".into(),
                },
                zigzag: (self.kind == SeriesKind::Thm52)
                    .then(|| "phi_n(x) = eps_n - |(x mod 2 eps_n) - eps_n|, breaks at j*eps_n".into()),
            },
            terms: self
                .terms
                .iter()
                .enumerate()
                .map(|(k, t)| TermMetadata {
                    term: *t,
                    ratio: ratios.as_ref().map(|r| r[k]),
                    fyy_bound: bounds.as_ref().map(|b| b[k]),
                })
                .collect(),
        }
    }
}

/// Triangular zigzag of slope ±1 and period `2ε`, `φ(0) = 0`, range `[0, ε]`.
/// Returns `(φ(x), φ′(x))`, with `None` for the slope at an interior break
/// node `jε`. At `x = 0` the one-sided slope `+1` is returned.
fn zigzag(x: f64, eps: f64) -> (f64, Option<f64>) {
    let r = x.rem_euclid(2.0 * eps);
    let phi = eps - (r - eps).abs();
    if x == 0.0 {
        return (0.0, Some(1.0));
    }
    let tol = 4.0 * f64::EPSILON * x.abs().max(eps);
    let at_break = r <= tol || (r - eps).abs() <= tol || 2.0 * eps - r <= tol;
    let slope = if at_break {
        None
    } else if r < eps {
        Some(1.0)
    } else {
        Some(-1.0)
    };
    (phi, slope)
}

/// `F(X, Y) = f(X/2π, Y/2π)` on `[0, 2π)²` with chain-rule partials.
/// Points where a partial is undefined evaluate to NaN.
pub fn rescale_to_2pi(s: &CounterexampleSeries) -> AnalyticFunction2D {
    let s = Arc::new(s.clone());
    let k = 1.0 / std::f64::consts::TAU;
    let mk = |what: Quantity, scale: f64| {
        let s = Arc::clone(&s);
        move |x: f64, y: f64| s.eval(x * k, y * k, what).map(|v| v * scale).unwrap_or(f64::NAN)
    };
    AnalyticFunction2D::new(mk(Quantity::F, 1.0))
        .with(Partial::X, mk(Quantity::Fx, k))
        .with(Partial::Y, mk(Quantity::Fy, k))
        .with(Partial::XX, mk(Quantity::Fxx, k * k))
        .with(Partial::YY, mk(Quantity::Fyy, k * k))
        .with(Partial::XY, mk(Quantity::Fxy, k * k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub kind: SeriesKind,
    pub nterms: usize,
    pub cantor: CantorMetadata,
    pub params: SeriesParams,
    pub terms: Vec<TermMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorMetadata {
    pub levels: usize,
    pub removal: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub bump: String,
    pub a: f64,
    pub t_star: f64,
    pub max_abs_d2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bijection: Option<String>,
    pub eps_rule: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zigzag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermMetadata {
    #[serde(flatten)]
    pub term: Term,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fyy_bound: Option<f64>,
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathology::build_fat_cantor;

    fn thm51() -> (FatCantorSet, CounterexampleSeries) {
        let set = build_fat_cantor(6, 1.0).unwrap();
        let s = construct_thm51(&set, 8).unwrap();
        (set, s)
    }

    #[test]
    fn triples_enumerate_a_bijection_prefix() {
        assert_eq!(triple_of(1), (1, 1, 1));
        let mut seen = std::collections::HashSet::new();
        for n in 1..=5000 {
            assert!(seen.insert(triple_of(n)));
        }
        // every triple with coordinates ≤ 5 appears early
        for k in 1..=5 {
            for m in 1..=5 {
                for l in 1..=5 {
                    assert!(seen.contains(&(k, m, l)));
                }
            }
        }
    }

    #[test]
    fn thm51_conditions_and_witnesses() {
        let (set, s) = thm51();
        s.check_invariants().unwrap();
        s.check_boxes(&set.endpoints()).unwrap();
        let a = s.bump().a();
        for t in s.terms() {
            assert_eq!(t.x_support.len(), t.eps);
            let fx = s.eval(t.witness.0, t.witness.1, Quantity::Fx).unwrap();
            assert!((fx.abs() - a).abs() < 1e-12);
        }
        for &p in &set.endpoints() {
            for q in [0.1, 0.5, p] {
                for what in [Quantity::F, Quantity::Fx, Quantity::Fy, Quantity::Fxx, Quantity::Fyy, Quantity::Fxy] {
                    assert_eq!(s.eval(p, q, what).unwrap(), 0.0);
                    assert_eq!(s.eval(q, p, what).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn thm51_fxx_matches_local_differences() {
        let (_, s) = thm51();
        for t in s.terms() {
            let h = t.eps * 1e-3;
            for k in 1..20 {
                let x = t.x_support.a + t.eps * k as f64 / 20.0;
                let y = t.witness.1;
                let f = |d: f64| s.eval(x + d * h, y, Quantity::Fx).unwrap();
                let fd = (f(-2.0) - 8.0 * f(-1.0) + 8.0 * f(1.0) - f(2.0)) / (12.0 * h);
                let exact = s.eval(x, y, Quantity::Fxx).unwrap();
                assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1.0 / t.eps), "term {} k {k}", t.n);
                let g = |d: f64| s.eval(x + d * h, y, Quantity::F).unwrap();
                let fd1 = (g(-2.0) - 8.0 * g(-1.0) + 8.0 * g(1.0) - g(2.0)) / (12.0 * h);
                assert!((fd1 - s.eval(x, y, Quantity::Fx).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn active_lookup_agrees_with_naive_sum() {
        let (_, s) = thm51();
        let set = build_fat_cantor(6, 1.0).unwrap();
        let s2 = construct_thm52(&set, 16).unwrap();
        for k in 0..=400 {
            for l in 0..=40 {
                let (x, y) = (k as f64 / 400.0, l as f64 / 40.0 + 0.001 * (k % 7) as f64);
                let y = y.min(1.0);
                for series in [&s, &s2] {
                    for what in [Quantity::F, Quantity::Fy, Quantity::Fyy] {
                        let a = series.eval(x, y, what).unwrap();
                        let b = series.eval_naive(x, y, what).unwrap();
                        assert!((a - b).abs() <= 1e-15, "{x} {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn l1_bound_is_stable_and_matches_four_a() {
        let set = build_fat_cantor(6, 1.0).unwrap();
        let one = construct_thm51(&set, 1).unwrap().l1_second_derivative_bound().unwrap();
        let many = construct_thm51(&set, 20).unwrap().l1_second_derivative_bound().unwrap();
        let four_a = 4.0 * standard_bump().a();
        for v in [one.0, one.1, many.0, many.1] {
            assert!((v - four_a).abs() < 1e-8);
        }
        let none = construct_thm51(&set, 0).unwrap().l1_second_derivative_bound().unwrap();
        assert_eq!(none, (0.0, 0.0));
        assert!(construct_thm52(&set, 4).unwrap().l1_second_derivative_bound().is_err());
    }

    #[test]
    fn thm51_reports_first_unconstructible_term() {
        let set = build_fat_cantor(6, 1.0).unwrap();
        match construct_thm51(&set, 1_000_000_000) {
            Err(Error::Unconstructible { term, .. }) => assert!(term > 8 && term <= 63),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn thm52_properties() {
        let set = build_fat_cantor(6, 1.0).unwrap();
        let s = construct_thm52(&set, 16).unwrap();
        s.check_invariants().unwrap();
        let b = s.thm52_fyy_bounds();
        assert!(b.windows(2).all(|w| w[1] < w[0]));
        assert!(*b.last().unwrap() < 1e-3);
        for t in s.terms() {
            let yn = t.witness.1;
            for k in 0..50 {
                let x = (k as f64 + 0.5) * t.eps * 0.37;
                let fx = s.eval(x, yn, Quantity::Fx).unwrap();
                assert_eq!(fx.abs(), 1.0);
                assert_eq!(s.eval(x, yn, Quantity::Fxx).unwrap(), 0.0);
            }
            // interior break node
            assert!(matches!(s.eval(t.eps, yn, Quantity::Fxx), Err(Error::BreakNode { .. })));
            assert!(matches!(s.eval(t.eps, yn, Quantity::Fx), Err(Error::BreakNode { .. })));
            for y in [t.y_support.a, t.y_support.b] {
                assert_eq!(s.eval(0.3, y, Quantity::Fx).unwrap(), 0.0);
            }
        }
        assert!(construct_thm52(&set, 64).is_err());
    }

    #[test]
    fn zigzag_shape() {
        let e = 0.25;
        assert_eq!(zigzag(0.0, e), (0.0, Some(1.0)));
        assert_eq!(zigzag(0.125, e), (0.125, Some(1.0)));
        assert_eq!(zigzag(0.375, e), (0.125, Some(-1.0)));
        assert_eq!(zigzag(0.5, e).1, None);
        assert_eq!(zigzag(0.25, e), (0.25, None));
    }

    #[test]
    fn rescaled_handle_applies_chain_rule() {
        let (_, s) = thm51();
        let f = rescale_to_2pi(&s);
        let t = s.terms()[0];
        let (x, y) = (t.witness.0 * std::f64::consts::TAU, t.witness.1 * std::f64::consts::TAU);
        assert!((f.eval(x, y) - s.eval(t.witness.0, t.witness.1, Quantity::F).unwrap()).abs() < 1e-15);
        let fx = f.partial(Partial::X).unwrap()(x, y);
        assert!((fx - s.eval(t.witness.0, t.witness.1, Quantity::Fx).unwrap() / std::f64::consts::TAU).abs() < 1e-14);
        let px = t.x_support.a + 0.4 * t.eps;
        let fxx = f.partial(Partial::XX).unwrap()(px * std::f64::consts::TAU, y);
        let expect = s.eval(px, t.witness.1, Quantity::Fxx).unwrap() / (std::f64::consts::TAU * std::f64::consts::TAU);
        assert!((fxx - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn metadata_roundtrips() {
        let (_, s) = thm51();
        let m = s.metadata();
        let j = serde_json::to_string(&m).unwrap();
        let back: SeriesMetadata = serde_json::from_str(&j).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.nterms, 8);
    }
}
