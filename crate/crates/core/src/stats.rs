//! Empirical distributions, Wilson intervals, chi-square and KS comparisons,
//! and convergence sweeps.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit_laws::yaglom_cdf;
use crate::special::{chi_square_sf, normal_quantile};

/// Expected count below which a cell is pooled into the tail.
pub const POOL_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EmpiricalDist {
    counts: BTreeMap<u64, u64>,
    n: u64,
}

impl EmpiricalDist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = u64>>(values: I) -> Self {
        let mut d = Self::new();
        values.into_iter().for_each(|v| d.push(v));
        d
    }

    pub fn push(&mut self, value: u64) {
        *self.counts.entry(value).or_insert(0) += 1;
        self.n += 1;
    }

    pub fn add(&mut self, value: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(value).or_insert(0) += count;
            self.n += count;
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn proportion(&self, value: u64) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.count(value) as f64 / self.n as f64
        }
    }

    /// Support labels with positive counts, ascending.
    pub fn support(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::EmptySample("Wilson interval needs n >= 1".into()));
    }
    if successes > n {
        return Err(Error::Precondition(format!("successes {successes} exceed n {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Precondition(format!("confidence {confidence} outside (0, 1)")));
    }
    let z = normal_quantile(0.5 + confidence / 2.0);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}

/// `|empirical - target| <= max(wilson_multiplier * half-width, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancePolicy {
    pub wilson_multiplier: f64,
    pub absolute: f64,
    pub confidence: f64,
}

impl TolerancePolicy {
    /// Three 95% Wilson half-widths or 0.05, whichever is larger.
    pub const DESK: TolerancePolicy = TolerancePolicy { wilson_multiplier: 3.0, absolute: 0.05, confidence: 0.95 };

    /// Three standard errors, no absolute floor.
    pub const STRICT: TolerancePolicy = TolerancePolicy { wilson_multiplier: 3.0, absolute: 0.0, confidence: 0.95 };
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self::DESK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionCheck {
    pub successes: u64,
    pub n: u64,
    pub empirical: f64,
    pub wilson: (f64, f64),
    pub target: f64,
    pub deviation: f64,
    pub tolerance: f64,
    /// `|empirical - target| / sqrt(target (1 - target) / n)`
    pub z: f64,
    pub pass: bool,
}

pub fn compare_proportion(successes: u64, n: u64, target: f64, policy: TolerancePolicy) -> Result<ProportionCheck> {
    let wilson = wilson_interval(successes, n, policy.confidence)?;
    let empirical = successes as f64 / n as f64;
    let deviation = (empirical - target).abs();
    let tolerance = (policy.wilson_multiplier * (wilson.1 - wilson.0) / 2.0).max(policy.absolute);
    let se = (target * (1.0 - target) / n as f64).sqrt();
    let z = if se > 0.0 {
        deviation / se
    } else if deviation == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ProportionCheck { successes, n, empirical, wilson, target, deviation, tolerance, z, pass: deviation <= tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub label: u64,
    pub check: ProportionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n: u64,
    pub cells: Vec<CellReport>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub total_variation: f64,
    pub policy: TolerancePolicy,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn max_z(&self) -> f64 {
        self.cells.iter().map(|c| c.check.z).fold(0.0, f64::max)
    }
}

/// Compares an empirical distribution with analytic cell probabilities.
///
/// Mass not covered by `analytic` forms a tail cell. Cells whose expected
/// count falls below [`POOL_THRESHOLD`] are pooled into that tail before the
/// chi-square statistic is formed; the per-cell checks use every labelled cell.
pub fn compare_pmf(empirical: &EmpiricalDist, analytic: &[(u64, f64)], policy: TolerancePolicy) -> Result<ComparisonReport> {
    let n = empirical.n();
    if n == 0 {
        return Err(Error::EmptySample("no accepted replicates to compare".into()));
    }
    let total: f64 = analytic.iter().map(|(_, p)| p).sum();
    if analytic.iter().any(|(_, p)| *p < 0.0) || total > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!("analytic cells must be a sub-probability vector, sum = {total}")));
    }
    let nf = n as f64;
    let cells = analytic
        .iter()
        .map(|&(label, p)| Ok(CellReport { label, check: compare_proportion(empirical.count(label), n, p, policy)? }))
        .collect::<Result<Vec<_>>>()?;

    let covered: u64 = analytic.iter().map(|(label, _)| empirical.count(*label)).sum();
    let mut pooled = (n - covered, (1.0 - total).max(0.0));
    let mut kept = Vec::new();
    for &(label, p) in analytic {
        if nf * p < POOL_THRESHOLD {
            pooled.0 += empirical.count(label);
            pooled.1 += p;
        } else {
            kept.push((empirical.count(label), p));
        }
    }
    if pooled.1 * nf >= POOL_THRESHOLD {
        kept.push(pooled);
    } else if let Some(smallest) = kept.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)) {
        smallest.0 += pooled.0;
        smallest.1 += pooled.1;
    }
    let chi_square: f64 = kept
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(o, p)| {
            let e = nf * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = kept.len().saturating_sub(1);

    let mut tv: f64 = analytic.iter().map(|&(label, p)| (empirical.proportion(label) - p).abs()).sum();
    tv += ((n - covered) as f64 / nf - (1.0 - total).max(0.0)).abs();
    let pass = cells.iter().all(|c| c.check.pass);
    Ok(ComparisonReport {
        n,
        cells,
        chi_square,
        dof,
        p_value: chi_square_sf(chi_square, dof),
        total_variation: tv / 2.0,
        policy,
        pass,
    })
}

/// Kolmogorov-Smirnov distance between the sample and exponential(1).
pub fn ks_exponential(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample("KS statistic of an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan() || *x < 0.0) {
        return Err(Error::Precondition("KS samples must be nonnegative".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = yaglom_cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub quantity: String,
    pub value: f64,
    pub predicted: f64,
    pub ratio: f64,
}

impl SweepRow {
    pub fn error(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln |ratio - 1|` against `ln t`.
    pub log_error_slope: Option<f64>,
    /// Every ratio equals 1 to within 1e-12.
    pub trivially_converged: bool,
    /// `|ratio - 1|` strictly decreases over the final three grid points.
    pub converging: bool,
}

impl SweepReport {
    pub fn flagged(&self) -> bool {
        !(self.trivially_converged || self.converging)
    }
}

/// Evaluates `(value, predicted)` along an increasing `t` grid and checks
/// that `value / predicted` approaches 1.
pub fn convergence_sweep<F>(quantity: &str, t_grid: &[f64], mut eval: F) -> Result<SweepReport>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("sweep grid must be nonempty and increasing".into()));
    }
    let rows = t_grid
        .iter()
        .map(|&t| {
            let (value, predicted) = eval(t)?;
            Ok(SweepRow { t, quantity: quantity.to_string(), value, predicted, ratio: value / predicted })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_sweep(rows))
}

pub fn summarize_sweep(rows: Vec<SweepRow>) -> SweepReport {
    let errors: Vec<f64> = rows.iter().map(SweepRow::error).collect();
    let trivially_converged = errors.iter().all(|e| *e <= 1e-12);
    let tail = &errors[errors.len().saturating_sub(3)..];
    let converging = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(r, e)| (r.t.ln(), e.ln()))
        .collect();
    let log_error_slope = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    SweepReport { rows, log_error_slope, trivially_converged, converging }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn wilson_boundaries() {
        assert_eq!(wilson_interval(0, 100, 0.95).unwrap().0, 0.0);
        assert_eq!(wilson_interval(100, 100, 0.95).unwrap().1, 1.0);
        let (lo, hi) = wilson_interval(632, 1000, 0.95).unwrap();
        assert!((lo - 0.602).abs() < 1e-3 && (hi - 0.661).abs() < 1e-3, "({lo}, {hi})");
        assert!(wilson_interval(1, 0, 0.95).is_err());
    }

    #[test]
    fn wilson_closed_form() {
        let z: f64 = 1.959963984540054;
        let (n, p) = (1000.0, 0.632);
        let c = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
        let h = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
        let (lo, hi) = wilson_interval(632, 1000, 0.95).unwrap();
        assert!((lo - (c - h)).abs() < 1e-12 && (hi - (c + h)).abs() < 1e-12);
    }

    #[test]
    fn exact_match_compares_clean() {
        let emp = EmpiricalDist::from_values((0..1000).map(|i| (i % 4) as u64));
        let report = compare_pmf(&emp, &[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)], TolerancePolicy::STRICT).unwrap();
        assert_eq!(report.chi_square, 0.0);
        assert_eq!(report.total_variation, 0.0);
        assert_eq!(report.dof, 3);
        assert!(report.pass);
    }

    #[test]
    fn lopsided_sample_fails() {
        let mut emp = EmpiricalDist::new();
        emp.add(0, 1000);
        let report = compare_pmf(&emp, &[(0, 0.5), (1, 0.5)], TolerancePolicy::DESK).unwrap();
        assert!(!report.pass);
        assert!((report.max_z() - 31.62).abs() < 0.01, "{}", report.max_z());
    }

    #[test]
    fn empty_sample_refused() {
        assert!(matches!(compare_pmf(&EmpiricalDist::new(), &[(0, 1.0)], TolerancePolicy::DESK), Err(Error::EmptySample(_))));
        assert!(ks_exponential(&[]).is_err());
    }

    #[test]
    fn small_cells_are_pooled() {
        let emp = EmpiricalDist::from_values((0..100).map(|i| if i < 98 { 0 } else { 1 + i as u64 % 2 }));
        let report = compare_pmf(&emp, &[(0, 0.98), (1, 0.01), (2, 0.01)], TolerancePolicy::DESK).unwrap();
        // cells 1 and 2 (expected 1 each) pool with the empty tail and then
        // merge into cell 0, leaving a single cell
        assert_eq!(report.dof, 0);
        assert_eq!(report.cells.len(), 3);
    }

    fn exp_samples(n: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        (0..n).map(|_| -scale * (1.0 - rng.random::<f64>()).ln()).collect()
    }

    #[test]
    fn ks_on_exponential_sample() {
        let n = 100_000;
        let d = ks_exponential(&exp_samples(n, 1.0, 7)).unwrap();
        assert!(d < 1.95 / (n as f64).sqrt(), "{d}");
        assert!(d < 0.0062);
    }

    #[test]
    fn ks_detects_wrong_law() {
        let d = ks_exponential(&vec![1.0; 500]).unwrap();
        assert!(d >= 1.0 - (-1f64).exp());
        let d = ks_exponential(&exp_samples(10_000, 0.5, 8)).unwrap();
        assert!(d > 0.1, "{d}");
    }

    #[test]
    fn sweep_flags() {
        let r = convergence_sweep("q", &[1.0, 2.0, 4.0, 8.0], |t| Ok((1.0 + 1.0 / t, 1.0))).unwrap();
        assert!(r.converging && !r.flagged());
        assert!((r.log_error_slope.unwrap() + 1.0).abs() < 1e-12);
        let r = convergence_sweep("const", &[1.0, 2.0, 4.0], |_| Ok((3.0, 3.0))).unwrap();
        assert!(r.trivially_converged && !r.flagged());
        let r = convergence_sweep("bad", &[1.0, 2.0, 4.0], |t| Ok((t, 1.0))).unwrap();
        assert!(r.flagged());
        assert!(convergence_sweep("x", &[2.0, 1.0], |_| Ok((1.0, 1.0))).is_err());
    }

    proptest! {
        #[test]
        fn wilson_contains_point_and_widens(n in 1u64..5000, frac in 0.0f64..=1.0, c1 in 0.5f64..0.9, dc in 0.01f64..0.09) {
            let k = ((n as f64) * frac).round() as u64;
            let (lo, hi) = wilson_interval(k, n, c1).unwrap();
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
            let (lo2, hi2) = wilson_interval(k, n, c1 + dc).unwrap();
            prop_assert!(lo2 <= lo + 1e-15 && hi2 >= hi - 1e-15);
        }

        #[test]
        fn comparison_invariant_under_relabeling(counts in proptest::collection::vec(0u64..400, 2..8), shift in 1u64..1000) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let k = counts.len();
            let target: Vec<f64> = (0..k).map(|_| 1.0 / k as f64).collect();
            let mut a = EmpiricalDist::new();
            let mut b = EmpiricalDist::new();
            for (i, &c) in counts.iter().enumerate() {
                a.add(i as u64, c);
                b.add((k - 1 - i) as u64 * 7 + shift, c);
            }
            let cells_a: Vec<(u64, f64)> = (0..k).map(|i| (i as u64, target[i])).collect();
            let cells_b: Vec<(u64, f64)> = (0..k).map(|i| ((k - 1 - i) as u64 * 7 + shift, target[i])).collect();
            let ra = compare_pmf(&a, &cells_a, TolerancePolicy::DESK).unwrap();
            let rb = compare_pmf(&b, &cells_b, TolerancePolicy::DESK).unwrap();
            prop_assert!((ra.chi_square - rb.chi_square).abs() <= 1e-9 * ra.chi_square.max(1.0));
            prop_assert_eq!(ra.dof, rb.dof);
            prop_assert!((ra.total_variation - rb.total_variation).abs() < 1e-12);
            prop_assert_eq!(ra.pass, rb.pass);
        }

        #[test]
        fn ks_power_against_rescaling(seed in 0u64..1000, half in proptest::bool::ANY) {
            let c = if half { 0.5 } else { 2.0 };
            let d = ks_exponential(&exp_samples(10_000, c, seed)).unwrap();
            prop_assert!(d > 1.95 / 100.0);
        }
    }
}
