//! Closed-form limit laws and asymptotic predictors.

use crate::event::ConditioningEvent;
use crate::models::ModelConstants;
use crate::special::reg_lower_gamma;

/// Default truncation of the infinite sums over `j`.
pub const J_TRUNCATION: usize = 400;

/// Limit of `P(Z(t - y phi(t), t) = j | H(t))`:
/// `y / (j-1)! * int_0^{1/y} z^{j-1} e^{-z} dz`.
pub fn theorem1_limit(j: usize, y: f64) -> f64 {
    assert!(j >= 1 && y > 0.0, "need j >= 1 and y > 0");
    y * reg_lower_gamma(j as f64, 1.0 / y)
}

/// Limit of `P(d(t) <= y phi(t) | H(t))`: `y (1 - e^{-1/y})`.
pub fn corollary1_mrca(y: f64) -> f64 {
    assert!(y > 0.0, "need y > 0");
    -y * (-1.0 / y).exp_m1()
}

/// Limit of `P(Z(xt, t) = j | 0 < Z(t) < Bat)`.
pub fn theorem2_limit(j: usize, x: f64, a: f64) -> f64 {
    assert!(j >= 1 && x > 0.0 && x < 1.0 && a > 0.0, "need j >= 1, x in (0,1), a > 0");
    reg_lower_gamma(j as f64, a / (1.0 - x)) * (1.0 - x) * x.powi(j as i32 - 1) / -(-a).exp_m1()
}

/// Limit of `P(d(t) <= xt | 0 < Z(t) < Bat)`: `x (1 - e^{-a/x}) / (1 - e^{-a})`.
/// Defined on `(0, 1]`; the value at `x = 1` is the left limit 1.
pub fn corollary2_mrca(x: f64, a: f64) -> f64 {
    assert!(x > 0.0 && x <= 1.0 && a > 0.0, "need x in (0,1], a > 0");
    x * (-a / x).exp_m1() / (-a).exp_m1()
}

/// `E exp(-lambda W) = 1 / (1 + lambda)` for the exponential(1) limit `W`.
pub fn yaglom_laplace(lambda: f64) -> f64 {
    assert!(lambda >= 0.0, "need lambda >= 0");
    1.0 / (1.0 + lambda)
}

pub fn yaglom_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        -(-z).exp_m1()
    }
}

/// `P(Z(t) > 0) ~ 1 / (B t)`.
pub fn survival_predictor(constants: &ModelConstants, t: f64) -> f64 {
    1.0 / (constants.b * t)
}

/// Asymptotic probability of a conditioning event.
pub fn event_predictor(constants: &ModelConstants, t: f64, event: &ConditioningEvent) -> f64 {
    let b = constants.b;
    match *event {
        ConditioningEvent::Survival => 1.0 / (b * t),
        ConditioningEvent::SmallPopulation { phi } => phi.eval(t) / (b * t * t),
        ConditioningEvent::Linear { a } => -(-a).exp_m1() / (b * t),
    }
}

/// `P(Z(t) = k) ~ e^{-k/(Bt)} / (B t)^2`.
pub fn local_limit_predictor(constants: &ModelConstants, t: f64, k: u64) -> f64 {
    let bt = constants.b * t;
    (-(k as f64) / bt).exp() / (bt * bt)
}

/// Limit of `P(Z(xt, t) = j) / P(Z(t) > 0)`: `(1 - x) x^{j-1}`.
pub fn intermediate_reduced_limit(j: usize, x: f64) -> f64 {
    assert!(j >= 1 && x > 0.0 && x < 1.0, "need j >= 1 and x in (0,1)");
    (1.0 - x) * x.powi(j as i32 - 1)
}

/// `theorem1_limit(j, y)` for `j = 1..=jmax`, plus the analytic bound
/// `y (1/y)^{jmax+1} / (jmax+1)!` on the omitted remainder.
pub fn theorem1_pmf(y: f64, jmax: usize) -> (Vec<f64>, f64) {
    let pmf = (1..=jmax).map(|j| theorem1_limit(j, y)).collect();
    let next = jmax as f64 + 1.0;
    let log_bound = y.ln() - next * y.ln() - crate::special::ln_gamma(next + 1.0);
    (pmf, log_bound.exp())
}

/// `theorem2_limit(j, x, a)` for `j = 1..=jmax`, plus a bound on the
/// remainder: each term is at most `(1-x) x^{j-1} / (1 - e^{-a})`.
pub fn theorem2_pmf(x: f64, a: f64, jmax: usize) -> (Vec<f64>, f64) {
    let pmf = (1..=jmax).map(|j| theorem2_limit(j, x, a)).collect();
    let bound = x.powi(jmax as i32) / -(-a).exp_m1();
    (pmf, bound)
}
