//! Truncated derivative sequences ("jets") at the origin.
//!
//! A [`Jet`] of order `R` stores the raw derivatives `g(0), g'(0), ...,
//! g^(R)(0)` (not Taylor coefficients). Products follow the Leibniz rule
//! and everything stays exact until [`reconstruct_pdf`] evaluates a
//! partial Maclaurin sum as `f64`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{binomial, factorial, h_at, pow_i, pow_u, ExactScalar};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Jet {
    derivs: Vec<ExactScalar>,
}

impl Jet {
    /// Builds a jet from `g(0), ..., g^(R)(0)`; at least one entry is required.
    pub fn new(derivs: Vec<ExactScalar>) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::InvalidArgument("a jet needs at least g(0)".into()));
        }
        Ok(Self { derivs })
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect(),
        )
    }

    pub fn zero(order: usize) -> Self {
        Self {
            derivs: vec![ExactScalar::zero(); order + 1],
        }
    }

    /// The constant function 1.
    pub fn unit(order: usize) -> Self {
        let mut jet = Self::zero(order);
        jet.derivs[0] = ExactScalar::one();
        jet
    }

    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn derivs(&self) -> &[ExactScalar] {
        &self.derivs
    }

    pub fn deriv(&self, m: usize) -> Option<&ExactScalar> {
        self.derivs.get(m)
    }

    pub fn into_derivs(self) -> Vec<ExactScalar> {
        self.derivs
    }

    /// Keeps derivatives `0..=order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::InsufficientOrder {
                have: self.order(),
                need: order,
            });
        }
        Ok(Self {
            derivs: self.derivs[..=order].to_vec(),
        })
    }

    /// Appends `g^(R+1)(0)`.
    pub fn push(&mut self, next: ExactScalar) {
        self.derivs.push(next);
    }

    /// Pads with zeros up to `order`; higher derivatives are left as they are.
    pub fn padded(&self, order: usize) -> Self {
        let mut derivs = self.derivs.clone();
        if derivs.len() < order + 1 {
            derivs.resize(order + 1, ExactScalar::zero());
        }
        Self { derivs }
    }

    /// A pdf jet must have `f(0) > 0`.
    pub fn is_pdf_jet(&self) -> bool {
        self.derivs[0].is_positive()
    }

    /// Largest `m <= order` such that `f^(i)(0) = (-1)^i f(0)^(i+1)` for all `i <= m`.
    pub fn exponential_prefix(&self) -> usize {
        let f0 = &self.derivs[0];
        let mut last = 0;
        for (m, value) in self.derivs.iter().enumerate().skip(1) {
            if *value != exp_coefficient(f0, m) {
                break;
            }
            last = m;
        }
        last
    }

    /// Text form: one `num/den` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.derivs {
            out.push_str(&format!("{}/{}\n", v.numer(), v.denom()));
        }
        out
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.derivs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Parses the line-oriented jet format. Blank lines and `#` comments are
/// skipped; a bare integer is accepted as `num/1`.
impl FromStr for Jet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut derivs = Vec::new();
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            derivs.push(
                parse_rational(line)
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
            );
        }
        Jet::new(derivs)
    }
}

pub fn parse_rational(text: &str) -> Result<ExactScalar> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(num, den))
}

fn exp_coefficient(lambda: &ExactScalar, m: usize) -> ExactScalar {
    let magnitude = pow_u(lambda, m as u32 + 1);
    if m.is_multiple_of(2) {
        magnitude
    } else {
        -magnitude
    }
}

/// Leibniz rule: `(ab)^(m)(0) = sum_i C(m,i) a^(i)(0) b^(m-i)(0)`.
pub fn jet_mul(a: &Jet, b: &Jet) -> Result<Jet> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch {
            left: a.order(),
            right: b.order(),
        });
    }
    let order = a.order();
    let mut out = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut acc = ExactScalar::zero();
        for i in 0..=m {
            let (x, y) = (&a.derivs[i], &b.derivs[m - i]);
            if x.is_zero() || y.is_zero() {
                continue;
            }
            acc += BigRational::from_integer(binomial(m as i64, i as i64)) * x * y;
        }
        out.push(acc);
    }
    Ok(Jet { derivs: out })
}

/// Jet of `F(x) = int_0^x f`, truncated to the order of `f`.
pub fn jet_antiderivative(f: &Jet) -> Jet {
    let mut derivs = Vec::with_capacity(f.derivs.len());
    derivs.push(ExactScalar::zero());
    derivs.extend(f.derivs[..f.order()].iter().cloned());
    Jet { derivs }
}

/// Jet of `x -> f(c x)`.
pub fn jet_scale_arg(f: &Jet, c: &ExactScalar) -> Jet {
    let derivs = f
        .derivs
        .iter()
        .enumerate()
        .map(|(i, v)| v * pow_u(c, i as u32))
        .collect();
    Jet { derivs }
}

/// Jet of `lambda * exp(-lambda x)`: `f^(m)(0) = (-1)^m lambda^(m+1)`.
pub fn exp_jet(lambda: &ExactScalar, order: usize) -> Result<Jet> {
    if !lambda.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "exponential rate must be positive, got {lambda}"
        )));
    }
    Ok(Jet {
        derivs: (0..=order).map(|m| exp_coefficient(lambda, m)).collect(),
    })
}

/// Jet of `G_j = F^j f`, where `F` is the antiderivative of `f` with `F(0) = 0`.
pub fn g_jet(f: &Jet, j: u32) -> Jet {
    g_family(f, j).pop().expect("family is never empty")
}

/// `[G_0, G_1, ..., G_top]` sharing the repeated products.
pub fn g_family(f: &Jet, top: u32) -> Vec<Jet> {
    let cdf = jet_antiderivative(f);
    let mut out = Vec::with_capacity(top as usize + 1);
    out.push(f.clone());
    for _ in 0..top {
        let next = jet_mul(&cdf, out.last().unwrap()).expect("orders agree by construction");
        out.push(next);
    }
    out
}

/// `G_j^(j+d)(0) = H_{j,j+d}(j+1) f0^(j+1-d) f1^d` for `d >= 0`, zero for
/// `-j <= d < 0`. Valid when `f^(m)(0) = (-1)^m f0^(m+1)` holds for `m <= d`.
pub fn lemma4_closed_form(
    f0: &ExactScalar,
    f1: &ExactScalar,
    j: u32,
    d: i64,
) -> Result<ExactScalar> {
    if j < 1 {
        return Err(Error::InvalidArgument("closed form needs j >= 1".into()));
    }
    let total = i64::from(j) + d;
    if total < 0 {
        return Err(Error::InvalidArgument(format!(
            "derivative order j+d = {total} is negative"
        )));
    }
    if d < 0 {
        return Ok(ExactScalar::zero());
    }
    let h = h_at(j, total as u32, i64::from(j) + 1);
    Ok(h * pow_i(f0, i64::from(j) + 1 - d)? * pow_u(f1, d as u32))
}

/// Partial Maclaurin sum `sum_{m < terms} f^(m)(0) x^m / m!`, evaluated
/// exactly and rounded once.
pub fn reconstruct_pdf(f: &Jet, x: &ExactScalar, terms: usize) -> Result<f64> {
    if terms > f.order() + 1 {
        return Err(Error::InsufficientOrder {
            have: f.order(),
            need: terms.saturating_sub(1),
        });
    }
    let mut acc = ExactScalar::zero();
    for (m, d) in f.derivs.iter().take(terms).enumerate() {
        acc += d * pow_u(x, m as u32) / BigRational::from_integer(factorial(m as u32));
    }
    acc.to_f64()
        .ok_or_else(|| Error::InvalidArgument("partial sum not representable as f64".into()))
}
