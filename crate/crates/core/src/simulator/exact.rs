//! Exhaustive enumeration of the joint law of `(Z(s, t), Z(t))` for small
//! lattice models.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::Model;

pub const MAX_ENUMERATION_T: usize = 4;
pub const MAX_ENUMERATION_OFFSPRING: usize = 8;
const MAX_STATES: usize = 200_000;

type Joint = BTreeMap<(u64, u64), f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactJoint {
    pub t: usize,
    pub s: f64,
    /// `P(Z(s, t) = r, Z(t) = z)` keyed by `(r, z)`.
    pub pmf: BTreeMap<(u64, u64), f64>,
}

impl ExactJoint {
    pub fn prob(&self, r: u64, z: u64) -> f64 {
        self.pmf.get(&(r, z)).copied().unwrap_or(0.0)
    }

    /// Law of `Z(t)`.
    pub fn population_marginal(&self) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (&(_, z), p) in &self.pmf {
            *out.entry(z).or_insert(0.0) += p;
        }
        out
    }

    /// Law of `Z(s, t)`.
    pub fn reduced_marginal(&self) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (&(r, _), p) in &self.pmf {
            *out.entry(r).or_insert(0.0) += p;
        }
        out
    }
}

fn convolve(a: &Joint, b: &Joint) -> Result<Joint> {
    let mut out = Joint::new();
    for (&(r1, z1), p1) in a {
        for (&(r2, z2), p2) in b {
            *out.entry((r1 + r2, z1 + z2)).or_insert(0.0) += p1 * p2;
        }
    }
    if out.len() > MAX_STATES {
        return Err(Error::StateSpace(format!("more than {MAX_STATES} joint states")));
    }
    Ok(out)
}

/// Exact joint law by recursion over all lifetime and offspring outcomes of
/// a particle born at each integer time.
pub fn enumerate_exact(model: &Model, t: usize, s: f64) -> Result<ExactJoint> {
    let g = model.require_lattice("enumerate_exact")?;
    if t > MAX_ENUMERATION_T {
        return Err(Error::StateSpace(format!("t = {t} exceeds the enumeration guard {MAX_ENUMERATION_T}")));
    }
    if model.offspring.max_offspring() > MAX_ENUMERATION_OFFSPRING {
        return Err(Error::StateSpace(format!(
            "offspring support {} exceeds the enumeration guard {MAX_ENUMERATION_OFFSPRING}",
            model.offspring.max_offspring()
        )));
    }
    if !(0.0..=t as f64).contains(&s) {
        return Err(Error::Precondition(format!("s = {s} outside [0, {t}]")));
    }
    let f = model.offspring.pmf();
    // memo[b] = joint law of the contributions of a particle born at b
    let mut memo: Vec<Joint> = vec![Joint::new(); t + 1];
    for b in (0..=t).rev() {
        let mut dist = Joint::new();
        for (l, &gl) in g.iter().enumerate() {
            if gl == 0.0 {
                continue;
            }
            let d = b + l + 1;
            let alive_at_s = b as f64 <= s && s < d as f64;
            if d > t {
                *dist.entry((alive_at_s as u64, 1)).or_insert(0.0) += gl;
                continue;
            }
            let child = &memo[d];
            let mut power = Joint::from([((0, 0), 1.0)]);
            for (k, &fk) in f.iter().enumerate() {
                if k > 0 {
                    power = convolve(&power, child)?;
                }
                if fk == 0.0 {
                    continue;
                }
                for (&(r, z), p) in &power {
                    let r = if alive_at_s { (z > 0) as u64 } else { r };
                    *dist.entry((r, z)).or_insert(0.0) += gl * fk * p;
                }
            }
        }
        memo[b] = dist;
    }
    Ok(ExactJoint { t, s, pmf: std::mem::take(&mut memo[0]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Builtin;
    use crate::series::pgf_recursion;

    #[test]
    fn bin_lat_t2_s1() {
        let m = Builtin::BinLat.model();
        let joint = enumerate_exact(&m, 2, 1.0).unwrap();
        let reduced = joint.reduced_marginal();
        assert!((reduced[&0] - 33.0 / 64.0).abs() < 1e-15);
        assert!((reduced[&1] - 11.0 / 32.0).abs() < 1e-15);
        assert!((reduced[&2] - 9.0 / 64.0).abs() < 1e-15);
        assert!((joint.population_marginal()[&0] - 33.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_series() {
        let m = Builtin::BinLat.model();
        for t in 0..=4 {
            let joint = enumerate_exact(&m, t, t as f64 / 2.0).unwrap();
            let series = pgf_recursion(&m, t, 64).unwrap();
            for (z, p) in joint.population_marginal() {
                assert!((series.coeffs()[z as usize] - p).abs() < 1e-14, "t={t} z={z}");
            }
            let total: f64 = joint.pmf.values().sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ancestry_identity() {
        let m = Builtin::BinLat.model();
        for t in 1..=4 {
            for s in [0.0, 0.5, 1.0, t as f64 - 0.5, t as f64] {
                let joint = enumerate_exact(&m, t, s).unwrap();
                for (&(r, z), &p) in &joint.pmf {
                    assert!(p > 0.0);
                    assert_eq!(r > 0, z > 0, "t={t} s={s}");
                    assert!(r <= z);
                    if s == t as f64 {
                        assert_eq!(r, z);
                    }
                }
            }
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(enumerate_exact(&Builtin::BinLat.model(), 5, 1.0), Err(Error::StateSpace(_))));
        assert!(enumerate_exact(&Builtin::GeoExp.model(), 2, 1.0).is_err());
        assert!(enumerate_exact(&Builtin::GeoDet.model(), 2, 1.0).is_err());
    }
}
