//! Uniform epsilon-nets over boxes.
//!
//! The grid is implicit: a point is identified by one index per axis and the
//! net is never materialised. With spacing `λ` in `D` dimensions every point
//! of the box lies within `α = λ√D/2` (Euclidean) of its snapped grid point,
//! and within `λ/2` in the max-norm.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapped {
    pub index: Vec<usize>,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsNet {
    dim: usize,
    lo: f64,
    hi: f64,
    spacing: f64,
    per_axis: usize,
}

impl EpsNet {
    /// Net over the unit box `[0, 1]^dim`.
    pub fn unit(dim: usize, spacing: f64) -> Result<Self> {
        Self::new(dim, 0.0, 1.0, spacing)
    }

    pub fn new(dim: usize, lo: f64, hi: f64, spacing: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("range", format!("[{lo}, {hi}] is empty or unbounded")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid("lambda", format!("must be positive, got {spacing}")));
        }
        let cells = ceil_snapped((hi - lo) / spacing);
        if cells > (usize::MAX - 1) as f64 {
            return Err(Error::Overflow(format!("grid with spacing {spacing}")));
        }
        Ok(EpsNet {
            dim,
            lo,
            hi,
            spacing,
            per_axis: cells as usize + 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `⌈(hi − lo)/λ⌉ + 1`.
    pub fn points_per_axis(&self) -> usize {
        self.per_axis
    }

    /// Euclidean covering radius `λ√D/2`.
    pub fn alpha(&self) -> f64 {
        self.spacing * (self.dim as f64).sqrt() / 2.0
    }

    /// Max-norm covering radius `λ/2`.
    pub fn alpha_inf(&self) -> f64 {
        self.spacing / 2.0
    }

    /// Exact number of grid points, if it fits in a `u64`.
    pub fn cardinality(&self) -> Result<u64> {
        (self.per_axis as u64)
            .checked_pow(self.dim as u32)
            .filter(|_| self.dim <= u32::MAX as usize)
            .ok_or_else(|| Error::Overflow(format!("{}^{} grid points", self.per_axis, self.dim)))
    }

    /// Coordinate of grid index `i` on any axis. The last point is pulled
    /// back to `hi` so the grid never leaves the box.
    pub fn coordinate(&self, i: usize) -> f64 {
        (self.lo + i as f64 * self.spacing).min(self.hi)
    }

    fn snap_axis(&self, x: f64) -> usize {
        let last = self.per_axis - 1;
        let below = (((x - self.lo) / self.spacing).floor().max(0.0) as usize).min(last);
        if below == last {
            return last;
        }
        let d_below = x - self.coordinate(below);
        let d_above = self.coordinate(below + 1) - x;
        // round half up
        if d_above <= d_below {
            below + 1
        } else {
            below
        }
    }

    /// Nearest grid point, axis by axis.
    pub fn snap(&self, x: &[f64]) -> Result<Snapped> {
        if x.len() != self.dim {
            return Err(invalid(
                "point",
                format!("expected dimension {}, got {}", self.dim, x.len()),
            ));
        }
        if let Some(&bad) = x.iter().find(|v| !(self.lo..=self.hi).contains(*v)) {
            return Err(invalid(
                "point",
                format!("coordinate {bad} outside [{}, {}]", self.lo, self.hi),
            ));
        }
        let index: Vec<usize> = x.iter().map(|&v| self.snap_axis(v)).collect();
        let point = index.iter().map(|&i| self.coordinate(i)).collect();
        Ok(Snapped { index, point })
    }

    pub fn point(&self, index: &[usize]) -> Result<Vec<f64>> {
        if index.len() != self.dim {
            return Err(invalid("index", "dimension mismatch"));
        }
        index
            .iter()
            .map(|&i| {
                if i < self.per_axis {
                    Ok(self.coordinate(i))
                } else {
                    Err(Error::IndexOutOfRange {
                        what: "grid",
                        index: i as u64,
                        limit: self.per_axis as u64,
                    })
                }
            })
            .collect()
    }

    /// Mixed-radix code of a grid index, first axis most significant.
    pub fn flatten(&self, index: &[usize]) -> Result<u64> {
        if index.len() != self.dim {
            return Err(invalid("index", "dimension mismatch"));
        }
        let base = self.per_axis as u64;
        index.iter().try_fold(0u64, |acc, &i| {
            if i >= self.per_axis {
                return Err(Error::IndexOutOfRange {
                    what: "grid",
                    index: i as u64,
                    limit: base,
                });
            }
            acc.checked_mul(base)
                .and_then(|v| v.checked_add(i as u64))
                .ok_or_else(|| Error::Overflow("grid code".into()))
        })
    }

    pub fn unflatten(&self, mut code: u64) -> Result<Vec<usize>> {
        let total = self.cardinality()?;
        if code >= total {
            return Err(Error::IndexOutOfRange {
                what: "grid code",
                index: code,
                limit: total,
            });
        }
        let base = self.per_axis as u64;
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (code % base) as usize;
            code /= base;
        }
        Ok(out)
    }
}

/// `ceil`, except values within a relative 1e-9 of an integer snap to it, so
/// `2√2/√2` counts as exactly 2.
pub(crate) fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `⌈2R/λ + 1⌉^D`, the point count of a `λ`-grid over a radius-`R` ball.
pub fn cardinality_bound(dim: u32, radius: f64, lambda: f64) -> Result<u128> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    if !(radius >= 0.0) {
        return Err(invalid("radius", "must be nonnegative"));
    }
    let base = ceil_snapped(2.0 * radius / lambda + 1.0);
    if !base.is_finite() || base >= u128::MAX as f64 {
        return Err(Error::Overflow(format!("base {base}")));
    }
    (base as u128)
        .checked_pow(dim)
        .ok_or_else(|| Error::Overflow(format!("{base}^{dim} grid points")))
}

/// `(|S||A|)^{n·h}` meta-states for trajectory windows.
pub fn trajectory_state_count(n_players: u32, card_sa: u64, h: u32) -> Result<u128> {
    if n_players == 0 || card_sa == 0 {
        return Err(invalid("trajectory_state_count", "arguments must be positive"));
    }
    let exp = n_players
        .checked_mul(h)
        .ok_or_else(|| Error::Overflow("exponent n·h".into()))?;
    (card_sa as u128)
        .checked_pow(exp)
        .ok_or_else(|| Error::Overflow(format!("{card_sa}^{exp} trajectory states")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashSet;

    fn dist2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    #[test]
    fn snap_one_dimensional() {
        let net = EpsNet::unit(1, 0.5).unwrap();
        assert_eq!(net.points_per_axis(), 3);
        let s = net.snap(&[0.3]).unwrap();
        assert_eq!(s.index, vec![1]);
        assert_eq!(s.point, vec![0.5]);
    }

    #[test]
    fn grid_points_are_fixed() {
        let net = EpsNet::unit(2, 0.25).unwrap();
        let s = net.snap(&[0.75, 0.0]).unwrap();
        assert_eq!(s.point, vec![0.75, 0.0]);
        assert_eq!(dist2(&s.point, &[0.75, 0.0]), 0.0);
    }

    #[test]
    fn midpoint_rounds_up() {
        let net = EpsNet::unit(2, 0.5).unwrap();
        let s = net.snap(&[0.25, 0.25]).unwrap();
        assert_eq!(s.index, vec![1, 1]);
        // exactly on the covering radius: 0.125 == λ²D/4
        assert!(dist2(&s.point, &[0.25, 0.25]) <= 0.25 * 2.0 / 4.0);
    }

    #[test]
    fn last_cell_is_clamped_to_box() {
        let net = EpsNet::unit(1, 0.3).unwrap();
        assert_eq!(net.points_per_axis(), 5);
        assert_eq!(net.coordinate(4), 1.0);
        assert_eq!(net.snap(&[0.97]).unwrap().point, vec![1.0]);
        assert!((net.snap(&[0.94]).unwrap().point[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let net = EpsNet::unit(2, 0.5).unwrap();
        assert!(net.snap(&[1.1, 0.0]).is_err());
        assert!(net.snap(&[0.5]).is_err());
        assert!(EpsNet::unit(1, 0.0).is_err());
    }

    #[test]
    fn covering_two_dimensional() {
        let net = EpsNet::unit(2, 0.5).unwrap();
        let alpha2 = net.alpha().powi(2);
        assert!((net.alpha() - 0.3535533905932738).abs() < 1e-15);
        let mut rng = seeded_rng(1);
        for _ in 0..100_000 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let s = net.snap(&x).unwrap();
            assert!(dist2(&x, &s.point) <= alpha2 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cardinality_examples() {
        let r2 = 2f64.sqrt();
        assert_eq!(cardinality_bound(2, r2, r2).unwrap(), 9);
        assert_eq!(cardinality_bound(1, 1.0, 2.0).unwrap(), 2);
        assert_eq!(cardinality_bound(2, r2, r2 / 2.0).unwrap(), 25);
        assert!(matches!(cardinality_bound(200, 10.0, 0.1), Err(Error::Overflow(_))));
    }

    #[test]
    fn trajectory_counts() {
        assert_eq!(trajectory_state_count(2, 2, 2).unwrap(), 16);
        assert_eq!(trajectory_state_count(2, 2, 0).unwrap(), 1);
        assert_eq!(trajectory_state_count(2, 2, 3).unwrap(), 64);
        assert!(trajectory_state_count(2, 2, 200).is_err());
    }

    #[test]
    fn box_grid_within_ball_bound() {
        for dim in 1..6u32 {
            for &lambda in &[0.1, 0.25, 0.5, 1.0] {
                let net = EpsNet::unit(dim as usize, lambda).unwrap();
                let bound = cardinality_bound(dim, (dim as f64).sqrt(), lambda).unwrap();
                assert!(net.cardinality().unwrap() as u128 <= bound);
            }
        }
    }

    #[test]
    fn observed_indices_within_bound() {
        let net = EpsNet::unit(2, 0.25).unwrap();
        let mut rng = seeded_rng(9);
        let seen: HashSet<Vec<usize>> = (0..20_000)
            .map(|_| net.snap(&[rng.gen(), rng.gen()]).unwrap().index)
            .collect();
        assert!(seen.len() as u128 <= cardinality_bound(2, 2f64.sqrt(), 0.25).unwrap());
        assert_eq!(seen.len() as u64, net.cardinality().unwrap());
    }

    proptest! {
        #[test]
        fn snap_is_idempotent(x in proptest::collection::vec(0.0f64..=1.0, 3), lambda in 0.05f64..1.0) {
            let net = EpsNet::unit(3, lambda).unwrap();
            let once = net.snap(&x).unwrap();
            let twice = net.snap(&once.point).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn flatten_roundtrip(x in proptest::collection::vec(0.0f64..=1.0, 4), lambda in 0.1f64..1.0) {
            let net = EpsNet::unit(4, lambda).unwrap();
            let s = net.snap(&x).unwrap();
            let code = net.flatten(&s.index).unwrap();
            prop_assert!(code < net.cardinality().unwrap());
            prop_assert_eq!(net.unflatten(code).unwrap(), s.index);
        }

        #[test]
        fn max_norm_radius(x in proptest::collection::vec(0.0f64..=1.0, 2), lambda in 0.05f64..1.0) {
            let net = EpsNet::unit(2, lambda).unwrap();
            let s = net.snap(&x).unwrap();
            for (a, b) in x.iter().zip(&s.point) {
                prop_assert!((a - b).abs() <= net.alpha_inf() * (1.0 + 1e-12));
            }
        }
    }
}
