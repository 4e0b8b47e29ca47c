//! Finite-`t` checks of the local limit, difference and derivative
//! asymptotics of `F(t; s)`.

use serde::Serialize;

use super::jet::{complement_curve, jet_at};
use super::{default_order, PgfRecursion, TruncatedSeries};
use crate::error::{Error, Result};
use crate::models::Model;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalLimitReport {
    pub t: usize,
    /// `sup_{1 <= k <= C t} |t^2 e^{k/(Bt)} P(Z(t)=k) - 1/B^2|`
    pub sup_error: f64,
    pub argmax_k: usize,
    /// `max_{k >= 1} t^2 P(Z(t) = k)` over the computed coefficients.
    pub c1_bound: f64,
    pub order: usize,
    pub tail_mass: f64,
}

fn profile_of(series: &TruncatedSeries, t: usize, b: f64, c: f64) -> Vec<f64> {
    let tf = t as f64;
    let kmax = ((c * tf).floor() as usize).min(series.order());
    (1..=kmax)
        .map(|k| tf * tf * (k as f64 / (b * tf)).exp() * series.coeffs()[k] - 1.0 / (b * b))
        .collect()
}

fn report_of(series: &TruncatedSeries, t: usize, b: f64, c: f64) -> LocalLimitReport {
    let profile = profile_of(series, t, b, c);
    let (argmax, sup) = profile
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(ai, av), (i, v)| if v.abs() > av { (i + 1, v.abs()) } else { (ai, av) });
    let tf = t as f64;
    let c1 = series.coeffs()[1..].iter().fold(0.0f64, |m, p| m.max(tf * tf * p));
    LocalLimitReport {
        t,
        sup_error: sup,
        argmax_k: argmax,
        c1_bound: c1,
        order: series.order(),
        tail_mass: series.tail_mass(),
    }
}

fn local_limit_order(model: &Model, t: usize, c: f64) -> usize {
    default_order(model, t).max((c * t as f64).floor() as usize)
}

/// Signed values `t^2 e^{k/(Bt)} P(Z(t)=k) - 1/B^2` for `k = 1..=floor(C t)`.
pub fn local_limit_profile(model: &Model, t: usize, c: f64) -> Result<Vec<f64>> {
    let series = super::pgf_recursion(model, t, local_limit_order(model, t, c))?;
    Ok(profile_of(&series, t, model.b(), c))
}

pub fn local_limit_error(model: &Model, t: usize, c: f64) -> Result<LocalLimitReport> {
    if t < 1 {
        return Err(Error::Precondition("local limit needs t >= 1".into()));
    }
    let series = super::pgf_recursion(model, t, local_limit_order(model, t, c))?;
    Ok(report_of(&series, t, model.b(), c))
}

/// [`local_limit_error`] at several times from a single recursion pass.
pub fn local_limit_sweep(model: &Model, ts: &[usize], c: f64) -> Result<Vec<LocalLimitReport>> {
    let Some(&tmax) = ts.iter().max() else {
        return Ok(Vec::new());
    };
    if ts.contains(&0) {
        return Err(Error::Precondition("local limit needs t >= 1".into()));
    }
    let order = local_limit_order(model, tmax, c);
    let b = model.b();
    let mut out = Vec::with_capacity(ts.len());
    for (t, series) in PgfRecursion::new(model, order)?.take(tmax + 1).enumerate() {
        if ts.contains(&t) {
            out.push(report_of(&series, t, b, c));
        }
    }
    out.sort_by_key(|r| ts.iter().position(|&x| x == r.t));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceRatio {
    pub t: usize,
    pub psi: f64,
    /// `F(t; 1 - 1/psi) - F(t; 0)`
    pub difference: f64,
    /// `psi / (B^2 t^2)`
    pub predicted: f64,
    pub ratio: f64,
    /// Rounding-error estimate; the scalar route has no truncation error.
    pub error_bound: f64,
}

/// `[F(t; 1 - 1/psi) - F(t; 0)] B^2 t^2 / psi`, computed by the scalar
/// complement recursion at both points.
pub fn difference_ratio(model: &Model, t: usize, psi: f64) -> Result<DifferenceRatio> {
    let tf = t as f64;
    if !(psi > 1.0 && psi < tf) {
        return Err(Error::Precondition(format!("need 1 < psi < t, got psi = {psi}, t = {t}")));
    }
    let s0 = 1.0 - 1.0 / psi;
    let q0 = complement_curve(model, t, 0.0)?[t];
    let qs = complement_curve(model, t, s0)?[t];
    let difference = q0 - qs;
    let b = model.b();
    let predicted = psi / (b * b * tf * tf);
    Ok(DifferenceRatio {
        t,
        psi,
        difference,
        predicted,
        ratio: difference / predicted,
        error_bound: 4.0 * tf * f64::EPSILON * q0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeRatio {
    pub t: usize,
    pub psi: f64,
    pub k: usize,
    /// Evaluation point `f(F(psi; 0))`.
    pub w: f64,
    pub derivative: f64,
    /// `(B psi)^{k+1} k! / (B^2 t^2)`
    pub predicted: f64,
    pub ratio: f64,
}

/// `F^{(k)}(t; w) B^2 t^2 / ((B psi)^{k+1} k!)` with `w = f(F(psi; 0))`.
///
/// For lattice lifetimes `Z` is constant between integer times, so
/// `F(psi; 0) = F(floor(psi); 0)`.
pub fn derivative_ratio(model: &Model, t: usize, psi: f64, k: usize) -> Result<DerivativeRatio> {
    let tf = t as f64;
    if !(psi > 1.0 && psi < tf) {
        return Err(Error::Precondition(format!("need 1 < psi < t, got psi = {psi}, t = {t}")));
    }
    if k < 1 {
        return Err(Error::Precondition("derivative order must be at least 1".into()));
    }
    let n_psi = psi.floor() as usize;
    let q_psi = complement_curve(model, n_psi, 0.0)?[n_psi];
    let w = 1.0 - model.offspring.pgf_complement(q_psi);
    let jet = jet_at(model, t, w, k)?;
    let derivative = jet.derivs[k - 1];
    let b = model.b();
    let k_fact: f64 = (1..=k).map(|i| i as f64).product();
    let predicted = (b * psi).powi(k as i32 + 1) * k_fact / (b * b * tf * tf);
    Ok(DerivativeRatio { t, psi, k, w, derivative, predicted, ratio: derivative / predicted })
}
