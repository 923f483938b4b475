//! Exact H-numbers and the binomial identities built on them.
//!
//! `H_{n,i}(x) = sum_{j=0}^{n} (-1)^j C(n,j) (x-j)^i` is the n-th backward
//! difference of `x^i`. Everything here is exact rational arithmetic; a
//! residual is either zero or the identity is false.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational. `BigRational` keeps itself reduced with a
/// positive denominator, so `==` is structural equality of values.
pub type ExactScalar = BigRational;

/// Arguments of `H_{n,i}(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HArgs {
    pub n: u32,
    pub i: u32,
    pub x: ExactScalar,
}

impl HArgs {
    pub fn new(n: u32, i: u32, x: ExactScalar) -> Self {
        Self { n, i, x }
    }

    pub fn at_integer(n: u32, i: u32, x: i64) -> Self {
        Self { n, i, x: int(x) }
    }
}

pub fn int(v: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> ExactScalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `C(a, b)`, zero outside `0 <= b <= a`.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 || b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for step in 0..b {
        acc *= a - step;
        acc /= step + 1;
    }
    acc
}

pub fn factorial(n: u32) -> BigInt {
    (1..=u64::from(n)).fold(BigInt::one(), |acc, v| acc * v)
}

/// Integer power with `0^0 = 1`.
pub(crate) fn pow_u(base: &ExactScalar, exp: u32) -> ExactScalar {
    Pow::pow(base, exp)
}

/// Rational power allowing negative exponents. Fails on `0^negative`.
pub(crate) fn pow_i(base: &ExactScalar, exp: i64) -> Result<ExactScalar> {
    let magnitude = u32::try_from(exp.unsigned_abs())
        .map_err(|_| Error::InvalidArgument(format!("exponent {exp} out of range")))?;
    let p = pow_u(base, magnitude);
    if exp >= 0 {
        Ok(p)
    } else if p.is_zero() {
        Err(Error::InvalidArgument(
            "zero raised to a negative power".into(),
        ))
    } else {
        Ok(p.recip())
    }
}

/// `H_{n,i}(x) = sum_{j=0}^{n} (-1)^j C(n,j) (x-j)^i`, exactly.
pub fn h_number(args: &HArgs) -> ExactScalar {
    let n = i64::from(args.n);
    let mut acc = ExactScalar::zero();
    for j in 0..=n {
        let term = pow_u(&(&args.x - int(j)), args.i) * BigRational::from_integer(binomial(n, j));
        if j.is_even() {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// `H_{n,i}(x)` at an integer point.
pub fn h_at(n: u32, i: u32, x: i64) -> ExactScalar {
    h_number(&HArgs::at_integer(n, i, x))
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}

/// `H_{s,r}(s+1) + H_{s+1,r}(s+2) - H_{s,r}(s+2)`.
pub fn check_pascal_step(s: u32, r: u32) -> Result<ExactScalar> {
    require(s >= 1 && r >= 1, || {
        format!("pascal step needs s, r >= 1 (s={s}, r={r})")
    })?;
    let x = i64::from(s);
    Ok(h_at(s, r, x + 1) + h_at(s + 1, r, x + 2) - h_at(s, r, x + 2))
}

/// `sum_{l=0}^{m} C(m,l) H_{n-k+l,i}(n-k+l+1) - H_{n-k,i}(n-k+m+1)`.
pub fn check_lemma2(n: u32, k: u32, m: u32, i: u32) -> Result<ExactScalar> {
    require(k >= 1 && k <= n, || {
        format!("need 1 <= k <= n (n={n}, k={k})")
    })?;
    require(m >= 1, || "need m >= 1".into())?;
    let s = n - k;
    let mut lhs = ExactScalar::zero();
    for l in 0..=m {
        let c = BigRational::from_integer(binomial(i64::from(m), i64::from(l)));
        lhs += c * h_at(s + l, i, i64::from(s + l + 1));
    }
    Ok(lhs - h_at(s, i, i64::from(s + m + 1)))
}

fn weighted_sum_order(n: u32, k: u32) -> Result<u32> {
    require(k >= 1, || "need k >= 1".into())?;
    require(k < n, || {
        format!("need k <= n-1 (n={n}, k={k}); the geometric ratio step divides by t+1-j")
    })?;
    Ok(n - k - 1)
}

/// `sum_{i=0}^{r} base^i H_{t,t+r+1-i}(x)`.
fn weighted_h_sum(base: i64, t: u32, r: u32, x: i64) -> ExactScalar {
    let base = int(base);
    (0..=r)
        .map(|i| pow_u(&base, i) * h_at(t, t + r + 1 - i, x))
        .fold(ExactScalar::zero(), |a, b| a + b)
}

/// `(1/(t+1)) H_{t+1,t+r+2}(n) - base^{r+1} t!`, the common closed form.
fn weighted_sum_closed(base: i64, n: u32, t: u32, r: u32) -> ExactScalar {
    let lead = h_at(t + 1, t + r + 2, i64::from(n)) / int(i64::from(t) + 1);
    lead - pow_u(&int(base), r + 1) * BigRational::from_integer(factorial(t))
}

/// Residual of `sum_i k^i H_{t,t+r+1-i}(n) = H_{t+1,t+r+2}(n)/(t+1) - k^{r+1} t!`.
pub fn check_lemma3_k(n: u32, k: u32, r: u32) -> Result<ExactScalar> {
    let t = weighted_sum_order(n, k)?;
    let k = i64::from(k);
    Ok(weighted_h_sum(k, t, r, i64::from(n)) - weighted_sum_closed(k, n, t, r))
}

/// Residual of `sum_i n^i H_{t,t+r+1-i}(n-1) = H_{t+1,t+r+2}(n)/(t+1) - n^{r+1} t!`.
pub fn check_lemma3_n(n: u32, k: u32, r: u32) -> Result<ExactScalar> {
    let t = weighted_sum_order(n, k)?;
    let nn = i64::from(n);
    Ok(weighted_h_sum(nn, t, r, nn - 1) - weighted_sum_closed(nn, n, t, r))
}

/// `sum_{l=0}^{k+d} C(k+1+d,l) H_{k,l}(k+1) - H_{k+1,k+1+d}(k+2)`.
pub fn check_binsum(k: u32, d: u32) -> Result<ExactScalar> {
    require(k >= 1 && d >= 1, || {
        format!("need k, d >= 1 (k={k}, d={d})")
    })?;
    let top = i64::from(k + 1 + d);
    let x = i64::from(k);
    let mut lhs = ExactScalar::zero();
    for l in 0..=(k + d) {
        lhs += BigRational::from_integer(binomial(top, i64::from(l))) * h_at(k, l, x + 1);
    }
    Ok(lhs - h_at(k + 1, k + 1 + d, x + 2))
}

/// `(n^{r+1} - k^{r+1}) t! - [sum_i k^i H_{t,t+r+1-i}(n) - sum_i n^i H_{t,t+r+1-i}(n-1)]`.
///
/// This is the combinatorial core of the induction step; it is the
/// difference of the two [`check_lemma3_k`] / [`check_lemma3_n`] identities.
pub fn final_identity_residual(n: u32, k: u32, r: u32) -> Result<ExactScalar> {
    final_identity_with_sign(n, k, r, false)
}

pub(crate) fn final_identity_with_sign(
    n: u32,
    k: u32,
    r: u32,
    tamper: bool,
) -> Result<ExactScalar> {
    let t = weighted_sum_order(n, k)?;
    let (nn, kk) = (i64::from(n), i64::from(k));
    let lhs =
        (pow_u(&int(nn), r + 1) - pow_u(&int(kk), r + 1)) * BigRational::from_integer(factorial(t));
    let k_sum = weighted_h_sum(kk, t, r, nn);
    let k_sum = if tamper { -k_sum } else { k_sum };
    Ok(lhs - (k_sum - weighted_h_sum(nn, t, r, nn - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent route: n-fold backward difference table of p(y) = y^i.
    fn h_by_difference_table(n: u32, i: u32, x: &ExactScalar) -> ExactScalar {
        let mut row: Vec<ExactScalar> = (0..=n)
            .map(|j| pow_u(&(x - int(i64::from(j))), i))
            .collect();
        for _ in 0..n {
            row = row.windows(2).map(|w| &w[0] - &w[1]).collect();
        }
        row.pop().unwrap()
    }

    #[test]
    fn h_number_examples() {
        assert_eq!(h_at(3, 3, 5), int(6));
        assert_eq!(h_number(&HArgs::new(2, 1, ratio(17, 2))), int(0));
        assert_eq!(h_at(1, 2, 2), int(3));
        assert_eq!(h_at(0, 4, 3), int(81));
    }

    #[test]
    fn zero_to_zero_is_one() {
        // j = x term contributes (x-j)^0 = 1
        assert_eq!(h_at(0, 0, 0), int(1));
        assert_eq!(h_at(2, 0, 2), int(0));
        assert_eq!(h_at(2, 0, 1), h_by_difference_table(2, 0, &int(1)));
    }

    #[test]
    fn h_matches_difference_table() {
        for n in 0..=8 {
            for i in 0..=14 {
                for x in [-3i64, 0, 1, 5, 9] {
                    assert_eq!(
                        h_at(n, i, x),
                        h_by_difference_table(n, i, &int(x)),
                        "n={n} i={i} x={x}"
                    );
                }
                let x = ratio(7, 3);
                assert_eq!(
                    h_number(&HArgs::new(n, i, x.clone())),
                    h_by_difference_table(n, i, &x)
                );
            }
        }
    }

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial(3, 4), BigInt::zero());
        assert_eq!(binomial(3, -1), BigInt::zero());
        assert_eq!(binomial(0, 0), BigInt::one());
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(factorial(6), BigInt::from(720));
    }

    #[test]
    fn pascal_step_examples() {
        for (s, r) in [(1, 3), (2, 2), (1, 1)] {
            assert!(check_pascal_step(s, r).unwrap().is_zero());
        }
        assert!(check_pascal_step(0, 2).is_err());
    }

    #[test]
    fn shifted_sum_examples() {
        for (n, k, m, i) in [(3, 1, 2, 5), (2, 1, 1, 0), (5, 2, 3, 8)] {
            assert!(check_lemma2(n, k, m, i).unwrap().is_zero());
        }
        // k = n is allowed here
        assert!(check_lemma2(3, 3, 2, 4).unwrap().is_zero());
        assert!(check_lemma2(3, 4, 1, 1).is_err());
        assert!(check_lemma2(3, 1, 0, 1).is_err());
    }

    #[test]
    fn weighted_sum_examples() {
        for (n, k, r) in [(3, 2, 0), (4, 1, 2), (2, 1, 1)] {
            assert!(check_lemma3_k(n, k, r).unwrap().is_zero());
        }
        for (n, k, r) in [(3, 2, 0), (5, 3, 1), (2, 1, 3)] {
            assert!(check_lemma3_n(n, k, r).unwrap().is_zero());
        }
        assert!(matches!(
            check_lemma3_k(3, 3, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            check_lemma3_n(3, 3, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn binsum_examples() {
        for (k, d) in [(1, 1), (2, 1), (1, 3)] {
            assert!(check_binsum(k, d).unwrap().is_zero());
        }
        assert!(check_binsum(0, 1).is_err());
    }

    #[test]
    fn final_identity_examples() {
        for (n, k, r) in [(3, 2, 0), (4, 1, 2), (2, 1, 5)] {
            assert!(final_identity_residual(n, k, r).unwrap().is_zero());
        }
        assert!(!final_identity_with_sign(3, 2, 0, true).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn low_powers_vanish(n in 1u32..=10, num in -20i64..=20, den in 1i64..=7) {
            let x = ratio(num, den);
            for i in 0..n {
                prop_assert!(h_number(&HArgs::new(n, i, x.clone())).is_zero());
            }
        }

        #[test]
        fn top_power_is_factorial(n in 0u32..=10, xs in proptest::collection::vec((-50i64..50, 1i64..9), 5)) {
            let expected = BigRational::from_integer(factorial(n));
            for (num, den) in xs {
                prop_assert_eq!(h_number(&HArgs::new(n, n, ratio(num, den))), expected.clone());
            }
        }

        #[test]
        fn backward_difference_recursion(n in 1u32..=9, i in 0u32..=14, num in -30i64..30, den in 1i64..5) {
            let x = ratio(num, den);
            let lhs = h_number(&HArgs::new(n, i, x.clone()));
            let rhs = h_number(&HArgs::new(n - 1, i, x.clone())) - h_number(&HArgs::new(n - 1, i, x - int(1)));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
