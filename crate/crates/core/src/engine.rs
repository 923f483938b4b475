//! The differentiated integral equation and the Maclaurin recursion it forces.
//!
//! With `t = n-k-1` and `G_j = F^j f`, differentiating the equality of the
//! two (constant-free) convolution kernels `t+r+2` times at 0 gives
//!
//! ```text
//! sum_l (-1)^l C(k-1,l) sum_i n^i G_{t+l}^{(t+r+1-i)}(0) f^(i)(0)
//!   = sum_l (-1)^l C(k,l)   sum_i k^i G_{t+l}^{(t+r+1-i)}(0) f^(i)(0)
//! ```
//!
//! for every `r >= 0`. [`residual_eq23`] evaluates that from raw jets;
//! [`solve_next_derivative`] isolates `f^(r+1)(0)` using the closed form of
//! [`lemma4_closed_form`]. The two are kept on separate routes so that the
//! round trip between them is genuine evidence.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::combinatorics::{binomial, final_identity_residual, int, pow_u, ExactScalar};
use crate::taylor_jet::{g_family, lemma4_closed_form, Jet};
use crate::{Error, Result, ShiftEquationSpec};

fn coeff(v: BigInt) -> ExactScalar {
    BigRational::from_integer(v)
}

fn alternating(l: u32) -> ExactScalar {
    if l.is_multiple_of(2) {
        int(1)
    } else {
        int(-1)
    }
}

/// LHS minus RHS of the differentiated equation at order `t+r+2`.
/// `G`-derivatives come from Leibniz products of the jet itself.
pub fn residual_eq23(f: &Jet, spec: &ShiftEquationSpec, r: u32) -> Result<ExactScalar> {
    spec.require_two_sided()?;
    let (n, k, t) = (spec.n(), spec.k(), spec.t());
    let top = (t + r + 1) as usize;
    let f = f.truncate(top)?;
    let family = g_family(&f, t + k);
    let n_pow: Vec<ExactScalar> = (0..=top).map(|i| pow_u(&int(n.into()), i as u32)).collect();
    let k_pow: Vec<ExactScalar> = (0..=top).map(|i| pow_u(&int(k.into()), i as u32)).collect();

    let mut residual = ExactScalar::zero();
    for l in 0..=k {
        let g = &family[(t + l) as usize];
        let mut n_sum = ExactScalar::zero();
        let mut k_sum = ExactScalar::zero();
        for i in 0..=top {
            let prod = &g.derivs()[top - i] * &f.derivs()[i];
            if prod.is_zero() {
                continue;
            }
            n_sum += &n_pow[i] * &prod;
            k_sum += &k_pow[i] * prod;
        }
        let sign = alternating(l);
        let c_left = coeff(binomial(i64::from(k) - 1, i64::from(l)));
        let c_right = coeff(binomial(i64::from(k), i64::from(l)));
        residual += sign * (c_left * n_sum - c_right * k_sum);
    }
    Ok(residual)
}

/// `(t+1) G_t^(t)(0) f'(0) + G_{t+1}^(t+1)(0) f(0)`; zero iff `f'(0) = -f(0)^2`.
pub fn base_case_residual(f: &Jet, spec: &ShiftEquationSpec) -> Result<ExactScalar> {
    let t = spec.t();
    let top = t as usize + 1;
    let f = f.truncate(top)?;
    let family = g_family(&f, t + 1);
    let g_t = &family[t as usize].derivs()[t as usize];
    let g_t1 = &family[top].derivs()[top];
    Ok(int(i64::from(t) + 1) * g_t * &f.derivs()[1] + g_t1 * &f.derivs()[0])
}

/// `G_j^(j+d)(0)` under the exponential-prefix hypothesis; `G_0 = f` is read
/// straight from the jet.
fn g_closed(f: &Jet, j: u32, d: i64) -> Result<ExactScalar> {
    if d < 0 {
        return Ok(ExactScalar::zero());
    }
    if j == 0 {
        return f
            .deriv(d as usize)
            .cloned()
            .ok_or(Error::InsufficientOrder {
                have: f.order(),
                need: d as usize,
            });
    }
    let f1 = f.deriv(1).cloned().unwrap_or_else(ExactScalar::zero);
    lemma4_closed_form(&f.derivs()[0], &f1, j, d)
}

/// Solves the collected induction-step equation
///
/// ```text
/// (n^{r+1} - k^{r+1}) f^(r+1)(0) G_t^(t)(0)
///   = sum_{i<=r} f^(i)(0) sum_l [k^i C(k,l) - n^i C(k-1,l)] (-1)^l G_{t+l}^{(t+r+1-i)}(0)
/// ```
///
/// for `f^(r+1)(0)`, given `f^(0..=r)(0)`. The prefix must already satisfy
/// `f^(m)(0) = (-1)^m f(0)^(m+1)` for `m <= r`; otherwise the closed forms
/// on the right are not valid and the call fails.
pub fn solve_next_derivative(
    f_partial: &Jet,
    spec: &ShiftEquationSpec,
    r: u32,
) -> Result<ExactScalar> {
    spec.require_two_sided()?;
    let f = f_partial.truncate(r as usize)?;
    if !f.is_pdf_jet() {
        return Err(Error::InvalidArgument("f(0) must be positive".into()));
    }
    if f.exponential_prefix() < r as usize {
        return Err(Error::HypothesisViolated {
            order: f.exponential_prefix() + 1,
        });
    }
    let (n, k, t) = (i64::from(spec.n()), i64::from(spec.k()), spec.t());

    let mut rhs = ExactScalar::zero();
    for i in 0..=r {
        let mut inner = ExactScalar::zero();
        for l in 0..=(r - i + 1).min(spec.k()) {
            let c = pow_u(&int(k), i) * coeff(binomial(k, l.into()))
                - pow_u(&int(n), i) * coeff(binomial(k - 1, l.into()));
            if c.is_zero() {
                continue;
            }
            let d = i64::from(r + 1 - i - l);
            inner += c * alternating(l) * g_closed(&f, t + l, d)?;
        }
        rhs += &f.derivs()[i as usize] * inner;
    }

    let lead = (pow_u(&int(n), r + 1) - pow_u(&int(k), r + 1)) * g_closed(&f, t, 0)?;
    if lead.is_zero() {
        return Err(Error::Degenerate {
            order: r as usize + 1,
        });
    }
    Ok(rhs / lead)
}

/// Runs the induction from `f(0) = lambda` up to order `order`.
pub fn characterize(lambda: &ExactScalar, spec: &ShiftEquationSpec, order: usize) -> Result<Jet> {
    if !lambda.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "f(0) must be positive, got {lambda}"
        )));
    }
    let mut jet = Jet::new(vec![lambda.clone()])?;
    for r in 0..order {
        let next = solve_next_derivative(&jet, spec, r as u32)?;
        jet.push(next);
    }
    Ok(jet)
}

/// Residual of `(n^{r+1}-k^{r+1}) t! = sum_i k^i H_{t,t+r+1-i}(n) - sum_i n^i H_{t,t+r+1-i}(n-1)`.
pub fn check_final_identity(spec: &ShiftEquationSpec, r: u32) -> Result<ExactScalar> {
    final_identity_residual(spec.n(), spec.k(), r)
}

/// One line of a per-`r` residual table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualRow {
    pub n: u32,
    pub k: u32,
    pub r: u32,
    pub residual: ExactScalar,
}

/// `residual_eq23` for every `r` the jet supports, up to `r_max`.
pub fn residual_table(f: &Jet, spec: &ShiftEquationSpec, r_max: u32) -> Result<Vec<ResidualRow>> {
    let t = spec.t() as usize;
    if f.order() < t + 1 {
        return Err(Error::InsufficientOrder {
            have: f.order(),
            need: t + 1,
        });
    }
    let supported = (f.order() - t - 1) as u32;
    (0..=r_max.min(supported))
        .map(|r| {
            Ok(ResidualRow {
                n: spec.n(),
                k: spec.k(),
                r,
                residual: residual_eq23(f, spec, r)?,
            })
        })
        .collect()
}

pub fn write_residual_csv<W: std::io::Write>(
    mut out: W,
    rows: &[ResidualRow],
) -> std::io::Result<()> {
    writeln!(out, "n,k,r,residual_num,residual_den")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.n,
            row.k,
            row.r,
            row.residual.numer(),
            row.residual.denom()
        )?;
    }
    Ok(())
}
