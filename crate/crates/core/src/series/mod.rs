//! Exact population-size laws for lattice lifetimes.
//!
//! For integer `t` the generating function `F(t; s) = E s^{Z(t)}` obeys
//!
//! ```text
//! F(0; s) = s
//! F(t; s) = (1 - G(t)) s + sum_{l <= t} g_l f(F(t - l; s))
//! ```
//!
//! which is iterated here on power series truncated at a fixed order `K`.

mod diagnostics;
pub mod jet;
pub mod poly;

use std::collections::VecDeque;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::numeric::compensated_sum;

pub use diagnostics::{
    derivative_ratio, difference_ratio, local_limit_error, local_limit_profile, local_limit_sweep,
    DerivativeRatio, DifferenceRatio, LocalLimitReport,
};
pub use jet::{compositions, faa_di_bruno, jet_at, Composition, Jet};

/// Coefficients `c_0..c_K` of a probability generating function, with the
/// mass beyond order `K` tracked separately.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
    tail_mass: f64,
}

impl TruncatedSeries {
    /// Builds a series from coefficients, padding to `order + 1` terms and
    /// clamping negative round-off.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        poly::clamp_nonnegative(&mut coeffs);
        let tail_mass = 1.0 - compensated_sum(coeffs.iter().copied());
        TruncatedSeries { coeffs, tail_mass }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn coeff(&self, k: usize) -> Result<f64> {
        self.coeffs.get(k).copied().ok_or(Error::Truncation { k, order: self.order() })
    }

    /// Value of the truncated polynomial at `s`.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    /// Upper bound on the contribution of the discarded tail at `s` in `[0, 1]`.
    pub fn eval_error_bound(&self, s: f64) -> f64 {
        self.tail_mass.max(0.0) * s.powi(self.order() as i32 + 1)
    }

    /// `sum_{m >= k} c_m m!/(m-k)! w^{m-k}`.
    pub fn derivative_at(&self, k: usize, w: f64) -> Result<f64> {
        if k > self.order() {
            return Err(Error::Truncation { k, order: self.order() });
        }
        let mut acc = 0.0;
        for m in (k..self.coeffs.len()).rev() {
            let falling: f64 = ((m - k + 1)..=m).map(|i| i as f64).product();
            acc = acc * w + self.coeffs[m] * falling;
        }
        Ok(acc)
    }

    /// `sum_k k c_k`.
    pub fn mean(&self) -> f64 {
        compensated_sum(self.coeffs.iter().enumerate().map(|(k, c)| k as f64 * c))
    }
}

/// Default truncation order `max(8 B t, 256)`.
pub fn default_order(model: &Model, t: usize) -> usize {
    ((8.0 * model.b() * t as f64).ceil() as usize).max(256)
}

/// Iterates `F(0; .), F(1; .), ...` truncated at a fixed order.
pub struct PgfRecursion<'a> {
    model: &'a Model,
    g: &'a [f64],
    order: usize,
    next_t: usize,
    /// `f(F(n; .))` for the last `lmax` values of `n`, newest last.
    composed: VecDeque<Vec<f64>>,
    planner: FftPlanner<f64>,
}

impl<'a> PgfRecursion<'a> {
    pub fn new(model: &'a Model, order: usize) -> Result<Self> {
        let g = model.require_lattice("pgf_recursion")?;
        if order < 1 {
            return Err(Error::Precondition("truncation order must be at least 1".into()));
        }
        Ok(PgfRecursion {
            model,
            g,
            order,
            next_t: 0,
            composed: VecDeque::with_capacity(g.len() + 1),
            planner: FftPlanner::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn step(&mut self) -> Vec<f64> {
        let t = self.next_t;
        let mut coeffs = vec![0.0; self.order + 1];
        if t == 0 {
            coeffs[1] = 1.0;
        } else {
            let survival: f64 = if t < self.g.len() { self.g[t..].iter().sum() } else { 0.0 };
            coeffs[1] += survival;
            for (l, &gl) in self.g.iter().enumerate().take(t) {
                let past = &self.composed[self.composed.len() - 1 - l];
                for (c, p) in coeffs.iter_mut().zip(past) {
                    *c += gl * p;
                }
            }
        }
        poly::clamp_nonnegative(&mut coeffs);
        let next = poly::compose(self.model.offspring.pmf(), &coeffs, self.order, &mut self.planner);
        self.composed.push_back(next);
        if self.composed.len() > self.g.len() {
            self.composed.pop_front();
        }
        self.next_t += 1;
        coeffs
    }
}

impl Iterator for PgfRecursion<'_> {
    type Item = TruncatedSeries;

    fn next(&mut self) -> Option<TruncatedSeries> {
        let coeffs = self.step();
        Some(TruncatedSeries::new(coeffs, self.order))
    }
}

/// `F(t; .)` truncated at `order`.
pub fn pgf_recursion(model: &Model, t: usize, order: usize) -> Result<TruncatedSeries> {
    let mut rec = PgfRecursion::new(model, order)?;
    for _ in 0..t {
        rec.step();
    }
    Ok(rec.next().expect("recursion is infinite"))
}

/// `Q(t) = P(Z(t) > 0)` by the scalar recursion on `1 - F(t; 0)`.
pub fn survival_prob(model: &Model, t: usize) -> Result<f64> {
    Ok(jet::complement_curve(model, t, 0.0)?[t])
}

/// `Q(0..=t)`.
pub fn survival_curve(model: &Model, t: usize) -> Result<Vec<f64>> {
    jet::complement_curve(model, t, 0.0)
}

/// `P(Z(t) = k)` using the default truncation order (raised to `k` if needed).
pub fn point_prob(model: &Model, t: usize, k: usize) -> Result<f64> {
    let order = default_order(model, t).max(k);
    pgf_recursion(model, t, order)?.coeff(k)
}

/// Generating function of `Y(t)`, the process started from a random number
/// of particles distributed as one offspring generation: `f(F(t; s))`.
pub fn y_pgf(model: &Model, t: usize, order: usize) -> Result<TruncatedSeries> {
    let f_t = pgf_recursion(model, t, order)?;
    let mut planner = FftPlanner::new();
    let coeffs = poly::compose(model.offspring.pmf(), f_t.coeffs(), order, &mut planner);
    Ok(TruncatedSeries::new(coeffs, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Builtin;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn bin_lat_first_steps() {
        let m = Builtin::BinLat.model();
        let f1 = pgf_recursion(&m, 1, 8).unwrap();
        assert_eq!(&f1.coeffs()[..3], &[0.25, 0.5, 0.25]);
        let f2 = pgf_recursion(&m, 2, 8).unwrap();
        let want = [33.0 / 64.0, 1.0 / 16.0, 11.0 / 32.0, 1.0 / 16.0, 1.0 / 64.0];
        for (c, w) in f2.coeffs().iter().zip(want) {
            assert_close(*c, w, 1e-15);
        }
        assert_close(f2.tail_mass(), 0.0, 1e-15);
    }

    #[test]
    fn geo_det_three_steps() {
        let m = Builtin::GeoDet.model();
        let f3 = pgf_recursion(&m, 3, 40).unwrap();
        assert_close(f3.coeffs()[0], 0.75, 1e-15);
        for k in 1..=40 {
            let want = 3f64.powi(k - 1) / 4f64.powi(k + 1);
            assert_close(f3.coeffs()[k as usize], want, 1e-15);
        }
    }

    #[test]
    fn survival_examples() {
        assert_close(survival_prob(&Builtin::GeoDet.model(), 10).unwrap(), 1.0 / 11.0, 1e-16);
        let m = Builtin::BinLat.model();
        assert_close(survival_prob(&m, 1).unwrap(), 0.75, 1e-16);
        assert_close(survival_prob(&m, 2).unwrap(), 31.0 / 64.0, 1e-16);
    }

    #[test]
    fn scalar_and_series_survival_agree() {
        let m = Builtin::BinLat.model();
        let mut rec = PgfRecursion::new(&m, 64).unwrap();
        let curve = survival_curve(&m, 200).unwrap();
        for (t, series) in rec.by_ref().take(201).enumerate() {
            assert_close(1.0 - series.coeffs()[0], curve[t], 1e-14);
        }
    }

    #[test]
    fn point_prob_examples() {
        let m = Builtin::GeoDet.model();
        let p = point_prob(&m, 100, 100).unwrap();
        let want = (99.0 * 100f64.ln() - 101.0 * 101f64.ln()).exp();
        assert!((p / want - 1.0).abs() < 1e-10, "{p} vs {want}");
        let b = Builtin::BinLat.model();
        assert_close(point_prob(&b, 2, 3).unwrap(), 1.0 / 16.0, 1e-16);
        assert_eq!(point_prob(&b, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn truncation_errors() {
        let s = pgf_recursion(&Builtin::BinLat.model(), 3, 4).unwrap();
        assert!(matches!(s.coeff(5), Err(Error::Truncation { k: 5, order: 4 })));
        assert!(s.derivative_at(5, 0.5).is_err());
    }

    #[test]
    fn continuous_model_unsupported() {
        let m = Builtin::GeoExp.model();
        assert!(matches!(pgf_recursion(&m, 3, 10), Err(Error::Unsupported(_))));
        assert!(survival_prob(&m, 3).is_err());
    }

    #[test]
    fn derivative_examples() {
        let id = TruncatedSeries::new(vec![0.0, 1.0], 4);
        assert_eq!(id.derivative_at(1, 0.37).unwrap(), 1.0);
        let s = TruncatedSeries::new(vec![0.25, 0.5, 0.25], 2);
        assert_eq!(s.derivative_at(2, 0.0).unwrap(), 0.5);
        assert_eq!(s.derivative_at(1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn y_pgf_examples() {
        let geo = Builtin::GeoDet.model();
        let y = y_pgf(&geo, 10, 300).unwrap();
        assert_close(1.0 - y.coeffs()[0], 1.0 / 12.0, 1e-15);
        let bin = Builtin::BinLat.model();
        let y1 = y_pgf(&bin, 1, 16).unwrap();
        assert_close(1.0 - y1.coeffs()[0], 15.0 / 32.0, 1e-16);
        let y0 = y_pgf(&bin, 0, 16).unwrap();
        assert_eq!(&y0.coeffs()[..3], bin.offspring.pmf());
    }

    #[test]
    fn extinction_is_monotone_and_mean_is_one() {
        let m = Builtin::BinLat.model();
        let mut prev = 0.0;
        for (t, s) in PgfRecursion::new(&m, 400).unwrap().take(60).enumerate() {
            assert!(s.coeffs()[0] >= prev);
            prev = s.coeffs()[0];
            assert!(s.coeffs().iter().all(|c| *c >= 0.0));
            assert!(s.tail_mass() < 1e-10, "t={t}");
            assert!((s.mean() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fft_route_matches_direct_route() {
        // order 300 goes through the FFT for late steps; order 64 stays direct.
        let m = Builtin::BinLat.model();
        let big = pgf_recursion(&m, 120, 300).unwrap();
        let small = pgf_recursion(&m, 120, 64).unwrap();
        for k in 0..=64 {
            assert_close(big.coeffs()[k], small.coeffs()[k], 1e-15);
        }
    }
}
