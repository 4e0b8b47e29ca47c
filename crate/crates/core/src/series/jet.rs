//! Higher-order chain rule and point-wise recursions.
//!
//! Besides the truncated-series route, `F(t; s)` and its derivatives at a
//! single point can be propagated through the lattice recursion directly:
//! values by a complement recursion on `1 - F` (all terms nonnegative, no
//! cancellation near `s = 1`), derivatives by Faà di Bruno's formula.

use crate::error::{Error, Result};
use crate::models::Model;

/// One element of `D(k)`: multiplicities `i_1..i_k` with `sum r i_r = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub multiplicities: Vec<usize>,
    /// `k! / (prod i_r! (r!)^{i_r})`
    pub weight: f64,
    /// `I_k = sum i_r`
    pub order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Enumerates `D(k)`.
pub fn compositions(k: usize) -> Vec<Composition> {
    fn rec(r: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if r == 0 {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        for i in 0..=remaining / r {
            current[r - 1] = i;
            rec(r - 1, remaining - i * r, current, out);
        }
        current[r - 1] = 0;
    }
    let mut raw = Vec::new();
    if k > 0 {
        rec(k, k, &mut vec![0; k], &mut raw);
    }
    let kf = factorial(k);
    raw.into_iter()
        .map(|m| {
            let denom: f64 = m
                .iter()
                .enumerate()
                .map(|(r, &i)| factorial(i) * factorial(r + 1).powi(i as i32))
                .product();
            let order = m.iter().sum();
            Composition { multiplicities: m, weight: kf / denom, order }
        })
        .collect()
}

/// `d^k/dz^k H(T(z))` from `h_derivs[i] = H^{(i)}(T(z))` (`i = 0..=k`) and
/// `t_derivs[r-1] = T^{(r)}(z)` (`r = 1..=k`).
pub fn faa_di_bruno(h_derivs: &[f64], t_derivs: &[f64], k: usize) -> Result<f64> {
    if h_derivs.len() < k + 1 || t_derivs.len() < k {
        return Err(Error::Precondition(format!(
            "order {k} needs {} outer and {k} inner derivatives, got {} and {}",
            k + 1,
            h_derivs.len(),
            t_derivs.len()
        )));
    }
    if k == 0 {
        return Ok(h_derivs[0]);
    }
    Ok(chain_rule(&compositions(k), h_derivs, t_derivs))
}

fn chain_rule(table: &[Composition], h_derivs: &[f64], t_derivs: &[f64]) -> f64 {
    table
        .iter()
        .map(|c| {
            let inner: f64 = c
                .multiplicities
                .iter()
                .zip(t_derivs)
                .filter(|(i, _)| **i > 0)
                .map(|(&i, &d)| d.powi(i as i32))
                .product();
            c.weight * h_derivs[c.order] * inner
        })
        .sum()
}

/// `1 - F(t; s)` for integer `t` by the scalar complement recursion.
/// Returns the whole curve `n = 0..=t`.
pub fn complement_curve(model: &Model, t: usize, s: f64) -> Result<Vec<f64>> {
    let g = model.require_lattice("complement recursion")?;
    let mut q = Vec::with_capacity(t + 1);
    q.push(1.0 - s);
    // h[n] = 1 - f(F(n; s))
    let mut h = Vec::with_capacity(t + 1);
    h.push(model.offspring.pgf_complement(q[0]));
    let mut survival_g: f64 = 1.0; // 1 - G(n)
    for n in 1..=t {
        if n <= g.len() {
            survival_g = g[n..].iter().sum();
        }
        let mut acc = survival_g * (1.0 - s);
        for (l, &gl) in g.iter().enumerate().take(n) {
            acc += gl * h[n - l - 1];
        }
        q.push(acc);
        h.push(model.offspring.pgf_complement(acc));
    }
    Ok(q)
}

/// Value and derivatives of `F(t; .)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// `1 - F(t; w)`
    pub complement: f64,
    /// `derivs[r - 1] = F^{(r)}(t; w)`
    pub derivs: Vec<f64>,
}

impl Jet {
    pub fn value(&self) -> f64 {
        1.0 - self.complement
    }
}

/// `(F(t; w), F'(t; w), ..., F^{(order)}(t; w))` via the lattice recursion
/// with Faà di Bruno for the composition with the offspring pgf.
pub fn jet_at(model: &Model, t: usize, w: f64, order: usize) -> Result<Jet> {
    let g = model.require_lattice("jet recursion")?;
    let table: Vec<Vec<Composition>> = (1..=order).map(compositions).collect();

    // Jets of f(F(n; .)) at w, for the last lmax values of n.
    let compose = |jet: &Jet| -> Jet {
        let u = jet.value();
        let f_derivs = model.offspring.pgf_derivatives(u, order);
        let derivs = (1..=order).map(|r| chain_rule(&table[r - 1], &f_derivs, &jet.derivs)).collect();
        Jet { complement: model.offspring.pgf_complement(jet.complement), derivs }
    };

    let mut base = vec![0.0; order];
    if order >= 1 {
        base[0] = 1.0;
    }
    let mut current = Jet { complement: 1.0 - w, derivs: base };
    let mut composed: Vec<Jet> = vec![compose(&current)];
    let mut survival_g: f64;
    for n in 1..=t {
        survival_g = if n < g.len() { g[n..].iter().sum() } else { 0.0 };
        let mut complement = survival_g * (1.0 - w);
        let mut derivs = vec![0.0; order];
        if order >= 1 {
            derivs[0] = survival_g;
        }
        for (l, &gl) in g.iter().enumerate().take(n) {
            let past = &composed[composed.len() - 1 - l];
            complement += gl * past.complement;
            for (d, pd) in derivs.iter_mut().zip(&past.derivs) {
                *d += gl * pd;
            }
        }
        current = Jet { complement, derivs };
        if n < t {
            composed.push(compose(&current));
            if composed.len() > g.len() {
                composed.remove(0);
            }
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Builtin;

    #[test]
    fn composition_sets() {
        assert_eq!(compositions(1).len(), 1);
        assert_eq!(compositions(4).len(), 5);
        assert_eq!(compositions(6).len(), 11);
        for k in 1..7 {
            for c in compositions(k) {
                let total: usize = c.multiplicities.iter().enumerate().map(|(r, i)| (r + 1) * i).sum();
                assert_eq!(total, k);
            }
        }
        // sum of weights over D(k) with all derivatives 1 is the Bell number
        let bell = [1.0, 2.0, 5.0, 15.0, 52.0];
        for k in 1..=5 {
            let w: f64 = compositions(k).iter().map(|c| c.weight).sum();
            assert_eq!(w, bell[k - 1]);
        }
    }

    #[test]
    fn first_order_is_chain_rule() {
        assert_eq!(faa_di_bruno(&[9.0, 3.0], &[5.0], 1).unwrap(), 15.0);
    }

    #[test]
    fn square_of_shifted_identity() {
        // H(u) = u^2, T(z) = z + z^2 at z = 0: T = 0, T' = 1, T'' = 2.
        let h = [0.0, 0.0, 2.0];
        let t = [1.0, 2.0];
        assert_eq!(faa_di_bruno(&h, &t, 2).unwrap(), 2.0);
    }

    #[test]
    fn insufficient_derivatives_rejected() {
        assert!(faa_di_bruno(&[1.0, 1.0], &[1.0, 1.0], 2).is_err());
        assert!(faa_di_bruno(&[1.0, 1.0, 1.0], &[1.0], 2).is_err());
    }

    #[test]
    fn complement_curve_geometric_closed_form() {
        let model = Builtin::GeoDet.model();
        let q = complement_curve(&model, 10, 0.0).unwrap();
        for (n, v) in q.iter().enumerate() {
            assert!((v - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn jet_geometric_closed_form() {
        // 1 - F_t(s) = u / (1 + t u), F^{(k)} = k! t^{k-1} (1 + t u)^{-(k+1)}, u = 1 - s
        let model = Builtin::GeoDet.model();
        let (t, w) = (50usize, 0.9);
        let jet = jet_at(&model, t, w, 4).unwrap();
        let u = 1.0 - w;
        let tf = t as f64;
        assert!((jet.complement - u / (1.0 + tf * u)).abs() < 1e-15);
        for k in 1..=4 {
            let want = factorial(k) * tf.powi(k as i32 - 1) * (1.0 + tf * u).powi(-(k as i32 + 1));
            assert!((jet.derivs[k - 1] / want - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn jet_time_zero_is_identity() {
        let model = Builtin::BinLat.model();
        let jet = jet_at(&model, 0, 0.4, 3).unwrap();
        assert_eq!(jet.value(), 0.4);
        assert_eq!(jet.derivs, vec![1.0, 0.0, 0.0]);
    }
}
