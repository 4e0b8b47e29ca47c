//! Discrete renewal quantities: the renewal function, expected counts of
//! young particles, and the tail condition on lifetimes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{LifetimeLaw, Model};
use crate::schedule::Schedule;

/// Renewal masses `u(n)` and their prefix sums `U(n)` on `0..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTable {
    u: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RenewalTable {
    pub fn mass(&self, n: usize) -> f64 {
        self.u[n]
    }

    /// `U(n) = sum_{m <= n} u(m)`.
    pub fn cumulative(&self, n: usize) -> f64 {
        self.cumulative[n]
    }

    /// `U(x)` for real `x >= 0`.
    pub fn cumulative_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.cumulative[(x.floor() as usize).min(self.cumulative.len() - 1)]
    }

    pub fn t_max(&self) -> usize {
        self.u.len() - 1
    }

    pub fn masses(&self) -> &[f64] {
        &self.u
    }
}

/// `u(0) = 1`, `u(n) = sum_l g_l u(n - l)`.
pub fn renewal_function(lifetime: &LifetimeLaw, t_max: usize) -> Result<RenewalTable> {
    let g = lifetime
        .lattice_pmf()
        .ok_or_else(|| Error::Unsupported("renewal table requires a lattice lifetime law".into()))?;
    let mut u = Vec::with_capacity(t_max + 1);
    u.push(1.0);
    for n in 1..=t_max {
        let v: f64 = g.iter().enumerate().take(n).map(|(l, gl)| gl * u[n - l - 1]).sum();
        u.push(v);
    }
    let mut acc = 0.0;
    let cumulative = u
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    Ok(RenewalTable { u, cumulative })
}

/// Closed form for exponential lifetimes: `U(t) = 1 + rate t`.
pub fn exponential_renewal(rate: f64, t: f64) -> f64 {
    1.0 + rate * t.max(0.0)
}

/// `A(t, x) = sum_{n <= t} (1 - G(t - n)) J(x - (t - n)) u(n)`: the expected
/// number of particles alive at `t` whose age does not exceed `x`.
pub fn expected_young(model: &Model, t: usize, x: f64) -> Result<f64> {
    let table = renewal_function(&model.lifetime, t)?;
    Ok(expected_young_with(&table, &model.lifetime, t, x))
}

pub fn expected_young_with(table: &RenewalTable, lifetime: &LifetimeLaw, t: usize, x: f64) -> f64 {
    (0..=t)
        .filter(|&n| (t - n) as f64 <= x)
        .map(|n| lifetime.survival((t - n) as f64) * table.mass(n))
        .sum()
}

/// `U(t) (1 - G(eps phi(t)))`, an upper bound for `P(Z*(t, eps phi(t)) >= 1)`.
pub fn neglig_bound(model: &Model, t: usize, epsilon: f64, phi: Schedule) -> Result<f64> {
    let table = renewal_function(&model.lifetime, t)?;
    Ok(table.cumulative(t) * model.lifetime.survival(epsilon * phi.eval(t as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegligRow {
    pub t: usize,
    pub bound: f64,
    /// `phi(t) / (B t^2)`
    pub predictor: f64,
    pub ratio: f64,
}

pub fn neglig_sweep(model: &Model, t_grid: &[usize], epsilon: f64, phi: Schedule) -> Result<Vec<NegligRow>> {
    let tmax = t_grid.iter().copied().max().unwrap_or(0);
    let table = renewal_function(&model.lifetime, tmax)?;
    let b = model.b();
    Ok(t_grid
        .iter()
        .map(|&t| {
            let tf = t as f64;
            let bound = table.cumulative(t) * model.lifetime.survival(epsilon * phi.eval(tf));
            let predictor = phi.eval(tf) / (b * tf * tf);
            NegligRow { t, bound, predictor, ratio: bound / predictor }
        })
        .collect())
}

pub const TAIL_EPSILONS: [f64; 3] = [0.1, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub phi: f64,
    /// `t^3 (1 - G(eps phi(t))) / phi(t)` for each of [`TAIL_EPSILONS`].
    pub values: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    /// Per epsilon: the sequence is positive and non-decreasing at the end
    /// of the grid, i.e. shows no sign of vanishing.
    pub flagged: [bool; 3],
}

impl TailReport {
    pub fn passes(&self) -> bool {
        !self.flagged.iter().any(|f| *f)
    }
}

/// Tabulates the tail condition for an arbitrary lifetime survival function.
pub fn check_tail_with<F: Fn(f64) -> f64>(survival: F, phi: Schedule, t_grid: &[f64]) -> Result<TailReport> {
    if !phi.is_increasing() {
        return Err(Error::Schedule(format!("{phi} is not monotone increasing")));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t grid must be increasing".into()));
    }
    if let Some(t) = t_grid.iter().find(|&&t| phi.eval(t) >= t) {
        return Err(Error::Schedule(format!("{phi} is not o(t): phi({t}) >= {t}")));
    }
    let rows: Vec<TailRow> = t_grid
        .iter()
        .map(|&t| {
            let p = phi.eval(t);
            let values = TAIL_EPSILONS.map(|eps| t.powi(3) * survival(eps * p) / p);
            TailRow { t, phi: p, values }
        })
        .collect();
    let mut flagged = [false; 3];
    for (e, flag) in flagged.iter_mut().enumerate() {
        let seq: Vec<f64> = rows.iter().map(|r| r.values[e]).collect();
        let tail = &seq[seq.len().saturating_sub(3)..];
        *flag = tail.last().is_some_and(|v| *v > 0.0) && tail.windows(2).all(|w| w[1] >= w[0]);
    }
    Ok(TailReport { rows, flagged })
}

pub fn check_tail_condition(model: &Model, phi: Schedule, t_grid: &[f64]) -> Result<TailReport> {
    check_tail_with(|x| model.lifetime.survival(x), phi, t_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Builtin;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn bin_lat_table_by_hand() {
        let table = renewal_function(&Builtin::BinLat.model().lifetime, 400).unwrap();
        assert_eq!(&table.masses()[..4], &[1.0, 0.5, 0.75, 0.625]);
        assert_eq!(table.cumulative(2), 2.25);
        assert!((table.mass(400) - 2.0 / 3.0).abs() < 1e-6);
        for n in 200..=400 {
            assert!((table.mass(n) - 2.0 / 3.0).abs() < 0.01);
        }
        assert!(table.masses().windows(1).all(|w| w[0] >= 0.0));
    }

    #[test]
    fn deterministic_renewals() {
        let table = renewal_function(&Builtin::GeoDet.model().lifetime, 50).unwrap();
        assert!(table.masses().iter().all(|u| *u == 1.0));
        assert_eq!(table.cumulative(50), 51.0);
    }

    #[test]
    fn continuous_needs_closed_form() {
        assert!(renewal_function(&Builtin::GeoExp.model().lifetime, 10).is_err());
        assert_eq!(exponential_renewal(1.0, 3.0), 4.0);
    }

    #[test]
    fn expected_young_examples() {
        let m = Builtin::BinLat.model();
        assert!((expected_young(&m, 2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(expected_young(&m, 10, -0.5).unwrap(), 0.0);
        for t in [0, 1, 7, 100, 500] {
            assert!((expected_young(&m, t, t as f64).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn renewal_ratio_at_1000() {
        let table = renewal_function(&Builtin::BinLat.model().lifetime, 1000).unwrap();
        assert!((table.cumulative(1000) * 1.5 / 1000.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn neglig_bound_examples() {
        let m = Builtin::BinLat.model();
        // eps * phi(100) = 1.5 with phi = const
        let b = neglig_bound(&m, 100, 1.0, Schedule::Const(1.5)).unwrap();
        let table = renewal_function(&m.lifetime, 100).unwrap();
        assert!((b - table.cumulative(100) / 2.0).abs() < 1e-12);
        assert_eq!(neglig_bound(&m, 100, 1.0, Schedule::Const(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn neglig_ratio_vanishes_for_bin_lat() {
        let m = Builtin::BinLat.model();
        let rows = neglig_sweep(&m, &[10, 20, 40, 80], 0.5, Schedule::Pow(0.6)).unwrap();
        assert!(rows.last().unwrap().ratio == 0.0);
        assert!(rows.windows(2).all(|w| w[1].ratio <= w[0].ratio));
    }

    #[test]
    fn tail_condition_bin_lat() {
        let m = Builtin::BinLat.model();
        let grid: Vec<f64> = (40..=400).step_by(40).map(|t| t as f64).collect();
        let report = check_tail_condition(&m, Schedule::Pow(0.6), &grid).unwrap();
        // eps = 0.1 needs phi(t) >= 20 before the lifetime tail is exhausted
        assert!(report.rows.iter().all(|r| r.values[1] == 0.0 && r.values[2] == 0.0));
        assert!(report.rows.iter().filter(|r| r.t >= 160.0).all(|r| r.values[0] == 0.0));
        assert!(report.rows[0].values[0] > 0.0);
        assert!(report.passes());
    }

    #[test]
    fn tail_condition_rejects_linear_schedule() {
        let m = Builtin::BinLat.model();
        assert!(check_tail_condition(&m, Schedule::Lin(1.0), &[10.0, 20.0]).is_err());
        assert!(check_tail_condition(&m, Schedule::Const(3.0), &[10.0, 20.0]).is_err());
    }

    #[test]
    fn heavy_tail_is_flagged() {
        let grid = [10.0, 100.0, 1000.0, 10000.0];
        let report = check_tail_with(|x: f64| if x <= 1.0 { 1.0 } else { x.powi(-2) }, Schedule::Pow(0.6), &grid).unwrap();
        assert!(report.flagged.iter().all(|f| *f));
        let row = &report.rows[3];
        let want = 1e12 * (0.1 * row.phi).powi(-2) / row.phi;
        assert!((row.values[0] / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renewal_matches_monte_carlo_counting() {
        let law = Builtin::BinLat.model().lifetime;
        let table = renewal_function(&law, 20).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let (mut s, mut count) = (0.0, 0u32);
            while s <= 20.0 {
                count += 1;
                s += law.sample(&mut rng);
            }
            let c = count as f64;
            sum += c;
            sum_sq += c * c;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - table.cumulative(20)).abs() < 3.0 * se, "{mean} vs {}", table.cumulative(20));
    }
}
