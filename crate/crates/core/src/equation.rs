//! The shift equations under test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which distributional equation a [`ShiftEquationSpec`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `X_{n-k:n-1} + X_n/n  =d  X_{n-k:n} + X_{n+1}/k`.
    TwoSided,
    /// `X_{n-1:n-1} + X_n/n  =d  X_{n:n}`.
    OneSidedMax,
    /// `X_{n-k:n} + X_{n+1}/k  =d  X_{n-k+1:n}`.
    OneSidedConsecutive,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::TwoSided => "two_sided",
            Variant::OneSidedMax => "one_sided_max",
            Variant::OneSidedConsecutive => "one_sided_consecutive",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "two_sided" => Ok(Variant::TwoSided),
            "one_sided_max" => Ok(Variant::OneSidedMax),
            "one_sided_consecutive" => Ok(Variant::OneSidedConsecutive),
            other => Err(Error::Parse(format!("unknown variant {other:?}"))),
        }
    }
}

/// One side of an equation: the `rank`-th order statistic of `size` draws,
/// optionally plus an independent draw divided by `shift_divisor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideLaw {
    pub rank: u32,
    pub size: u32,
    pub shift_divisor: Option<u32>,
}

impl SideLaw {
    /// Number of parent draws one realisation consumes.
    pub fn draws(&self) -> usize {
        self.size as usize + usize::from(self.shift_divisor.is_some())
    }
}

/// `(n, k)` with `1 <= k <= n-1` and the equation variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ShiftEquationSpec {
    n: u32,
    k: u32,
    variant: Variant,
}

impl ShiftEquationSpec {
    /// The two-sided equation.
    pub fn new(n: u32, k: u32) -> Result<Self> {
        Self::with_variant(n, k, Variant::TwoSided)
    }

    /// `X_{n-1:n-1} + X_n/n =d X_{n:n}`; stored with `k = 1`.
    pub fn one_sided_max(n: u32) -> Result<Self> {
        Self::with_variant(n, 1, Variant::OneSidedMax)
    }

    pub fn one_sided_consecutive(n: u32, k: u32) -> Result<Self> {
        Self::with_variant(n, k, Variant::OneSidedConsecutive)
    }

    pub fn with_variant(n: u32, k: u32, variant: Variant) -> Result<Self> {
        if k < 1 || k >= n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k <= n-1, got n={n}, k={k}"
            )));
        }
        if variant == Variant::OneSidedMax && k != 1 {
            return Err(Error::InvalidArgument(
                "the one-sided maximum equation has k = 1".into(),
            ));
        }
        Ok(Self { n, k, variant })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `t = n - k - 1 >= 0`.
    pub fn t(&self) -> u32 {
        self.n - self.k - 1
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn lhs(&self) -> SideLaw {
        let (n, k) = (self.n, self.k);
        match self.variant {
            Variant::TwoSided | Variant::OneSidedMax => SideLaw {
                rank: n - k,
                size: n - 1,
                shift_divisor: Some(n),
            },
            Variant::OneSidedConsecutive => SideLaw {
                rank: n - k,
                size: n,
                shift_divisor: Some(k),
            },
        }
    }

    pub fn rhs(&self) -> SideLaw {
        let (n, k) = (self.n, self.k);
        match self.variant {
            Variant::TwoSided => SideLaw {
                rank: n - k,
                size: n,
                shift_divisor: Some(k),
            },
            Variant::OneSidedMax => SideLaw {
                rank: n,
                size: n,
                shift_divisor: None,
            },
            Variant::OneSidedConsecutive => SideLaw {
                rank: n - k + 1,
                size: n,
                shift_divisor: None,
            },
        }
    }

    pub(crate) fn require_two_sided(&self) -> Result<()> {
        if self.variant == Variant::TwoSided {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "operation defined for the two-sided equation only, got {}",
                self.variant
            )))
        }
    }
}

impl fmt::Display for ShiftEquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, k={})", self.variant, self.n, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ShiftEquationSpec::new(3, 2).is_ok());
        assert!(ShiftEquationSpec::new(3, 3).is_err());
        assert!(ShiftEquationSpec::new(3, 0).is_err());
        assert!(ShiftEquationSpec::new(1, 1).is_err());
        assert!(ShiftEquationSpec::with_variant(4, 2, Variant::OneSidedMax).is_err());
        assert_eq!(ShiftEquationSpec::new(7, 3).unwrap().t(), 3);
        assert_eq!(ShiftEquationSpec::new(2, 1).unwrap().t(), 0);
    }

    #[test]
    fn side_laws() {
        let s = ShiftEquationSpec::new(3, 2).unwrap();
        assert_eq!(
            s.lhs(),
            SideLaw {
                rank: 1,
                size: 2,
                shift_divisor: Some(3)
            }
        );
        assert_eq!(
            s.rhs(),
            SideLaw {
                rank: 1,
                size: 3,
                shift_divisor: Some(2)
            }
        );
        let m = ShiftEquationSpec::one_sided_max(4).unwrap();
        assert_eq!(
            m.lhs(),
            SideLaw {
                rank: 3,
                size: 3,
                shift_divisor: Some(4)
            }
        );
        assert_eq!(m.rhs().draws(), 4);
        let c = ShiftEquationSpec::one_sided_consecutive(5, 2).unwrap();
        assert_eq!(
            c.rhs(),
            SideLaw {
                rank: 4,
                size: 5,
                shift_divisor: None
            }
        );
    }

    #[test]
    fn variant_names() {
        for v in [
            Variant::TwoSided,
            Variant::OneSidedMax,
            Variant::OneSidedConsecutive,
        ] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(
            "one-sided-max".parse::<Variant>().unwrap(),
            Variant::OneSidedMax
        );
        assert!("sideways".parse::<Variant>().is_err());
    }
}
