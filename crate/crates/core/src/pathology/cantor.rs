//! Smith–Volterra–Cantor style sets of positive measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LEVELS: usize = 24;

/// Open interval `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

/// Removed-interval hierarchy of a fat Cantor set in `[0, 1]`. Level `n`
/// (1-based) holds `2^{n−1}` removed intervals ordered left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct FatCantorSet {
    removal: f64,
    levels: Vec<Vec<Interval>>,
    /// Nominal removed length `r·4^{−n}` per level, before endpoint rounding.
    lengths: Vec<f64>,
    /// All removed intervals sorted by left endpoint.
    sorted: Vec<Interval>,
    measure: f64,
}

/// `1 − r Σ_{n≤L} 2^{n−1} 4^{−n} = 1 − (r/2)(1 − 2^{−L})`.
pub fn closed_form_measure(levels: usize, removal: f64) -> f64 {
    1.0 - 0.5 * removal * (1.0 - 0.5f64.powi(levels as i32))
}

/// At level `n`, removes the centred open interval of length `r·4^{−n}` from
/// each of the `2^{n−1}` closed intervals left by the previous level.
pub fn build_fat_cantor(levels: usize, removal: f64) -> Result<FatCantorSet> {
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "levels must be in 1..={MAX_LEVELS}, got {levels}"
        )));
    }
    if !(removal > 0.0 && removal.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "removal fraction must be positive, got {removal}"
        )));
    }
    let mut current = vec![(0.0f64, 1.0f64)];
    let mut out = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    let mut removed_total = 0.0;
    for n in 1..=levels {
        let len = removal * 0.25f64.powi(n as i32);
        let mut level = Vec::with_capacity(current.len());
        let mut next = Vec::with_capacity(2 * current.len());
        for &(lo, hi) in &current {
            let mid = 0.5 * (lo + hi);
            let (a, b) = (mid - 0.5 * len, mid + 0.5 * len);
            if !(lo < a && b < hi) {
                return Err(Error::InvalidArgument(format!(
                    "level {n}: removing length {len} exhausts the interval [{lo}, {hi}]"
                )));
            }
            level.push(Interval { a, b });
            next.push((lo, a));
            next.push((b, hi));
        }
        // nominal lengths: r·4^{-n}·2^{n-1} is an exact power-of-two rescaling of r
        removed_total += len * level.len() as f64;
        lengths.push(len);
        out.push(level);
        current = next;
    }
    let mut sorted: Vec<Interval> = out.iter().flatten().copied().collect();
    sorted.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(FatCantorSet {
        removal,
        levels: out,
        lengths,
        sorted,
        measure: 1.0 - removed_total,
    })
}

impl FatCantorSet {
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn removal(&self) -> f64 {
        self.removal
    }

    /// `1 − Σ removed lengths`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// `Σ` of the nominal removed lengths; equals `1 − measure`.
    pub fn removed_length(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.lengths)
            .map(|(lv, len)| len * lv.len() as f64)
            .sum()
    }

    /// `Σ (b − a)` over the stored, rounded endpoints.
    pub fn removed_length_from_endpoints(&self) -> f64 {
        self.levels.iter().flatten().map(Interval::len).sum()
    }

    /// Removed intervals at level `n` (1-based).
    pub fn level(&self, n: usize) -> &[Interval] {
        &self.levels[n - 1]
    }

    pub fn removed_count(&self) -> usize {
        self.sorted.len()
    }

    /// Removed intervals in construction order: level by level, left to right.
    pub fn removed(&self) -> impl Iterator<Item = (usize, &Interval)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(n, lv)| lv.iter().map(move |iv| (n + 1, iv)))
    }

    /// Endpoints `p_1, p_2, …` enumerated as `a_{1,1}, b_{1,1}, a_{2,1}, b_{2,1}, a_{2,2}, …`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.removed().flat_map(|(_, iv)| [iv.a, iv.b]).collect()
    }

    /// Whether `x ∈ [0, 1]` survives every removal.
    pub fn contains(&self, x: f64) -> bool {
        if !(0.0..=1.0).contains(&x) {
            return false;
        }
        let k = self.sorted.partition_point(|iv| iv.a < x);
        k == 0 || !self.sorted[k - 1].contains(x)
    }

    /// Checks the endpoint conditions and disjointness by direct scan:
    /// `0 < a < b < 1`, equal lengths within a level, all endpoints pairwise
    /// distinct, removed intervals pairwise disjoint, positive measure.
    pub fn check_conditions(&self) -> std::result::Result<(), String> {
        for (n, lv) in self.levels.iter().enumerate() {
            let len0 = lv[0].len();
            for (k, iv) in lv.iter().enumerate() {
                if !(0.0 < iv.a && iv.a < iv.b && iv.b < 1.0) {
                    return Err(format!("interval ({}, {}) at level {} is not inside (0, 1)", iv.a, iv.b, n + 1));
                }
                if (iv.len() - len0).abs() > 4.0 * f64::EPSILON * len0.max(iv.b) {
                    return Err(format!("level {} interval {} has length {} != {}", n + 1, k + 1, iv.len(), len0));
                }
            }
        }
        let mut ends = self.endpoints();
        ends.sort_by(f64::total_cmp);
        if let Some(w) = ends.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("endpoint {} is repeated", w[0]));
        }
        if let Some(w) = self.sorted.windows(2).find(|w| w[0].b >= w[1].a) {
            return Err(format!(
                "removed intervals ({}, {}) and ({}, {}) overlap",
                w[0].a, w[0].b, w[1].a, w[1].b
            ));
        }
        if self.measure <= 0.0 {
            return Err(format!("measure {} is not positive", self.measure));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_level() {
        let c = build_fat_cantor(1, 1.0).unwrap();
        assert_eq!(c.level(1), &[Interval { a: 0.375, b: 0.625 }]);
        assert_eq!(c.measure(), 0.75);
    }

    #[test]
    fn twenty_levels_approach_half() {
        let c = build_fat_cantor(20, 1.0).unwrap();
        assert!((c.measure() - 0.5).abs() < 1e-6);
        assert_eq!(c.removed_count(), (1 << 20) - 1);
        c.check_conditions().unwrap();
    }

    #[test]
    fn measure_matches_closed_form() {
        for (levels, r) in [(3, 0.5), (1, 1.0), (7, 0.3), (12, 1.0)] {
            let c = build_fat_cantor(levels, r).unwrap();
            // brute-force geometric sum, independent of the closed form
            let sum: f64 = (1..=levels).map(|n| r * 2f64.powi(n as i32 - 1) / 4f64.powi(n as i32)).sum();
            assert!((c.measure() - (1.0 - sum)).abs() < 1e-15);
            assert!((c.measure() - closed_form_measure(levels, r)).abs() < 1e-15);
            assert!((c.measure() + c.removed_length() - 1.0).abs() < 1e-15);
            assert!((c.removed_length_from_endpoints() - c.removed_length()).abs() < 1e-13);
            c.check_conditions().unwrap();
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_fat_cantor(0, 0.5).is_err());
        assert!(build_fat_cantor(25, 0.5).is_err());
        assert!(build_fat_cantor(3, 0.0).is_err());
        assert!(build_fat_cantor(3, -1.0).is_err());
        // removes everything at level 1
        assert!(build_fat_cantor(1, 4.0).is_err());
        // level 1 fits, level 2 exhausts
        assert!(build_fat_cantor(2, 3.5).is_err());
    }

    #[test]
    fn membership() {
        let c = build_fat_cantor(2, 1.0).unwrap();
        assert!(c.contains(0.0));
        assert!(c.contains(1.0));
        assert!(c.contains(0.375));
        assert!(!c.contains(0.5));
        assert!(!c.contains(1.5));
        for iv in c.level(2) {
            assert!(!c.contains(iv.mid()));
            assert!(c.contains(iv.a) && c.contains(iv.b));
        }
    }

    #[test]
    fn endpoint_enumeration_order() {
        let c = build_fat_cantor(2, 1.0).unwrap();
        let p = c.endpoints();
        assert_eq!(p.len(), 6);
        assert_eq!(&p[..2], &[0.375, 0.625]);
        assert!(p[2] < p[3] && p[3] < p[4] && p[4] < p[5]);
    }
}

