//! Truncated polynomial arithmetic.
//!
//! Products are truncated at a fixed order `K`; coefficients up to `K` are
//! exact (modulo rounding) because truncation commutes with multiplication
//! of power series. Long products go through an FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Below this operand length the schoolbook product is cheaper.
const DIRECT_THRESHOLD: usize = 96;

/// Schoolbook product of `a` and `b`, truncated to `order + 1` coefficients.
pub fn mul_direct(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let n = (a.len() + b.len()).saturating_sub(1).min(order + 1);
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate().take(n) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Replaces negative round-off with zero.
pub fn clamp_nonnegative(coeffs: &mut [f64]) {
    for c in coeffs.iter_mut() {
        if *c < 0.0 {
            *c = 0.0;
        }
    }
}

/// Multiplies many polynomials by one fixed operand `p`.
///
/// `p` is split as `p0 + q(s)` with `q(0) = 0`; the constant part is applied
/// exactly and only `q` goes through the FFT, which keeps the absolute
/// rounding error proportional to the (small) coefficients of `q`.
pub struct FixedOperand {
    order: usize,
    constant: f64,
    rest: Vec<f64>,
    fft: Option<FftCache>,
}

struct FftCache {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    rest_hat: Vec<Complex64>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl FixedOperand {
    pub fn new(p: &[f64], order: usize, planner: &mut FftPlanner<f64>) -> Self {
        let p = &p[..p.len().min(order + 1)];
        let constant = p.first().copied().unwrap_or(0.0);
        let mut rest = p.to_vec();
        if let Some(first) = rest.first_mut() {
            *first = 0.0;
        }
        let fft = if order + 1 > DIRECT_THRESHOLD && rest.len() > DIRECT_THRESHOLD {
            let size = (2 * (order + 1)).next_power_of_two();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let scratch_len =
                forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
            let mut rest_hat = vec![Complex64::new(0.0, 0.0); size];
            for (slot, &c) in rest_hat.iter_mut().zip(&rest) {
                slot.re = c;
            }
            let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
            forward.process_with_scratch(&mut rest_hat, &mut scratch);
            Some(FftCache {
                size,
                forward,
                inverse,
                rest_hat,
                scratch,
                buf: vec![Complex64::new(0.0, 0.0); size],
            })
        } else {
            None
        };
        FixedOperand { order, constant, rest, fft }
    }

    /// `acc * p` truncated at the operand's order, written back into `acc`.
    pub fn mul_into(&mut self, acc: &mut Vec<f64>) {
        let n = self.order + 1;
        acc.truncate(n);
        let product_rest = match self.fft.as_mut() {
            Some(cache) if acc.len() > DIRECT_THRESHOLD => {
                for (slot, i) in cache.buf.iter_mut().zip(0..) {
                    *slot = Complex64::new(if i < acc.len() { acc[i] } else { 0.0 }, 0.0);
                }
                cache.forward.process_with_scratch(&mut cache.buf, &mut cache.scratch);
                for (x, y) in cache.buf.iter_mut().zip(&cache.rest_hat) {
                    *x *= *y;
                }
                cache.inverse.process_with_scratch(&mut cache.buf, &mut cache.scratch);
                let scale = 1.0 / cache.size as f64;
                let len = (acc.len() + self.rest.len() - 1).min(n);
                cache.buf[..len].iter().map(|z| z.re * scale).collect::<Vec<f64>>()
            }
            _ => mul_direct(acc, &self.rest, self.order),
        };
        let len = product_rest.len().max(acc.len());
        acc.resize(len, 0.0);
        for (i, a) in acc.iter_mut().enumerate() {
            *a = *a * self.constant + product_rest.get(i).copied().unwrap_or(0.0);
        }
    }
}

/// `f(p(s))` truncated at `order`, where `f` is given by its coefficients.
/// Horner's scheme with one fixed multiplicand.
pub fn compose(f: &[f64], p: &[f64], order: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let Some((&lead, lower)) = f.split_last() else {
        return vec![0.0];
    };
    let mut op = FixedOperand::new(p, order, planner);
    let mut acc = vec![lead];
    for &c in lower.iter().rev() {
        op.mul_into(&mut acc);
        acc[0] += c;
        clamp_nonnegative(&mut acc);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_compose(f: &[f64], p: &[f64], order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        let mut power = vec![1.0];
        for &c in f {
            for (o, &x) in out.iter_mut().zip(&power) {
                *o += c * x;
            }
            power = mul_direct(&power, p, order);
        }
        out
    }

    #[test]
    fn direct_product_truncates() {
        assert_eq!(mul_direct(&[1.0, 1.0], &[1.0, 1.0], 5), vec![1.0, 2.0, 1.0]);
        assert_eq!(mul_direct(&[1.0, 1.0], &[1.0, 1.0], 1), vec![1.0, 2.0]);
    }

    #[test]
    fn fft_product_matches_direct() {
        let order = 700;
        let a: Vec<f64> = (0..600).map(|i| ((i * 37 % 101) as f64) / 1000.0).collect();
        let p: Vec<f64> = (0..500).map(|i| ((i * 13 % 89) as f64) / 5000.0).collect();
        let mut planner = FftPlanner::new();
        let mut op = FixedOperand::new(&p, order, &mut planner);
        assert!(op.fft.is_some());
        let mut acc = a.clone();
        op.mul_into(&mut acc);
        let direct = mul_direct(&a, &p, order);
        assert_eq!(acc.len(), direct.len());
        for (x, y) in acc.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn compose_matches_naive() {
        let f = [0.2, 0.3, 0.1, 0.25, 0.15];
        let p: Vec<f64> = (0..150).map(|i| 0.9f64.powi(i) * 0.1).collect();
        let mut planner = FftPlanner::new();
        for order in [5, 60, 300] {
            let got = compose(&f, &p, order, &mut planner);
            let want = naive_compose(&f, &p, order);
            for (k, (x, y)) in got.iter().zip(&want).enumerate() {
                assert!((x - y).abs() < 1e-13, "order {order} k {k}: {x} vs {y}");
            }
        }
    }
}
