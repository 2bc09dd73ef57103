//! Binomial point probabilities and the `e^4 / sqrt(np)` mode bound.
//!
//! The pmf uses Loader's saddle-point form: Stirling remainders plus the
//! deviance term `bd0`, both evaluated in log space. Accuracy stays near
//! machine precision for n in the tens of millions, where differencing
//! log-gamma values would lose about eight digits.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmfCheck {
    pub n: u64,
    pub p: f64,
    pub max_pmf: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// `ln(k!) - ln(sqrt(2 pi k) (k/e)^k)`.
fn stirlerr(k: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = k as f64;
    if k <= 15 {
        let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
        return ln_fact - (x * x.ln() - x + 0.5 * (LN_2PI + x.ln()));
    }
    let xx = x * x;
    if k > 500 {
        (S0 - S1 / xx) / x
    } else if k > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// `x ln(x / np) + np - x`, summed as a series when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `P(X = k)` for `X ~ Bin(n, p)`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return param(format!("k = {k} outside 0..={n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return param(format!("probability {p} outside [0, 1]"));
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if q == 0.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return Ok(1.0);
        }
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return Ok(lc.exp());
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return Ok(lc.exp());
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    Ok((lc - 0.5 * lf).exp())
}

/// Evaluates the pmf at both candidate modes and compares against
/// `e^4 / sqrt(np)`. Requires `np >= 2` and `p <= 1/3`.
pub fn check_pmf_bound(n: u64, p: f64) -> Result<PmfCheck> {
    let np = n as f64 * p;
    // 1e-9 slack so that e.g. n = 6, p = 1/3 counts as np = 2
    if np < 2.0 - 1e-9 {
        return param(format!("need np >= 2, got {np}"));
    }
    if p > 1.0 / 3.0 + 1e-12 {
        return param(format!("need p <= 1/3, got {p}"));
    }
    let lo = np.floor() as u64;
    let hi = (np.ceil() as u64).min(n);
    let max_pmf = binomial_pmf(lo, n, p)?.max(binomial_pmf(hi, n, p)?);
    let bound = 4f64.exp() / np.sqrt();
    Ok(PmfCheck {
        n,
        p,
        max_pmf,
        bound,
        satisfied: max_pmf <= bound,
    })
}

/// The `(n, np)` grid: n in 10^2..10^7, np in {2, 10, 10^2, 10^3, 10^4},
/// keeping only cells with `p <= 1/3`.
pub fn pmf_grid() -> Vec<(u64, f64)> {
    let mut cells = Vec::new();
    for e in 2..=7 {
        let n = 10u64.pow(e);
        for np in [2.0, 10.0, 100.0, 1e3, 1e4] {
            if np / n as f64 <= 1.0 / 3.0 {
                cells.push((n, np));
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{One, ToPrimitive, Zero};

    /// Exact `C(n, k) p^k (1 - p)^(n - k)` with `p` taken as the exact value of
    /// its binary representation.
    fn exact_pmf(k: u64, n: u64, p: f64) -> f64 {
        let p = BigRational::from_float(p).unwrap();
        let q = BigRational::one() - &p;
        let mut binom = BigInt::one();
        for i in 0..k {
            binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        let mut value = BigRational::from_integer(binom);
        for _ in 0..k {
            value *= &p;
        }
        for _ in 0..(n - k) {
            value *= &q;
        }
        if value.is_zero() {
            return 0.0;
        }
        value.to_f64().unwrap()
    }

    #[test]
    fn small_exact_values() {
        assert_eq!(binomial_pmf(0, 7, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(0, 0, 0.3).unwrap(), 1.0);
        assert!((binomial_pmf(2, 4, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(binomial_pmf(3, 3, 1.0).unwrap(), 1.0);
        assert!(binomial_pmf(5, 4, 0.5).is_err());
    }

    #[test]
    fn matches_rational_oracle_up_to_30() {
        for n in 1..=30u64 {
            for &p in &[0.01, 0.1, 1.0 / 3.0, 0.5, 0.77, 0.999] {
                for k in 0..=n {
                    let exact = exact_pmf(k, n, p);
                    let got = binomial_pmf(k, n, p).unwrap();
                    if exact < 1e-300 {
                        continue;
                    }
                    let rel = ((got - exact) / exact).abs();
                    assert!(rel <= 1e-10, "n={n} k={k} p={p}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn larger_spot_check() {
        let exact = exact_pmf(10, 1000, 0.01);
        let got = binomial_pmf(10, 1000, 0.01).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-10, "{got} vs {exact}");
    }

    #[test]
    fn sums_to_one() {
        for &(n, p) in &[(10u64, 0.3), (1000, 0.01), (10_000, 0.5), (10_000, 0.001)] {
            let total: f64 = (0..=n).map(|k| binomial_pmf(k, n, p).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} p={p}: {total}");
        }
    }

    #[test]
    fn bound_examples() {
        let c = check_pmf_bound(1_000_000, 0.01).unwrap();
        assert!(c.satisfied);
        let normal = 1.0 / (2.0 * std::f64::consts::PI * 1e4 * 0.99).sqrt();
        assert!((c.max_pmf / normal - 1.0).abs() < 1e-3);
        assert!((c.bound - 4f64.exp() / 100.0).abs() < 1e-12);

        let c = check_pmf_bound(6, 1.0 / 3.0).unwrap();
        assert!(c.satisfied);
        assert!((c.bound - 4f64.exp() / 2f64.sqrt()).abs() < 1e-9);

        assert!(check_pmf_bound(10, 0.1).is_err());
        assert!(check_pmf_bound(100, 0.5).is_err());
    }

    #[test]
    fn grid_cells_hold() {
        let cells = pmf_grid();
        assert_eq!(cells.len(), 24);
        for (n, np) in cells {
            assert!(check_pmf_bound(n, np / n as f64).unwrap().satisfied);
        }
    }
}
