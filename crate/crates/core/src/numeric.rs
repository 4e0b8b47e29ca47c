//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(v) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn gcd_basics() {
        assert_eq!(gcd(4, 6), 2);
        assert_eq!(gcd(3, 0), 3);
        assert_eq!(gcd(1, 7), 1);
    }
}
