//! Densities of both sides of a shift equation by numerical convolution.
//!
//! A side `X_{j:m} + Y/c` has density
//! `int_0^x p_{j:m}(u) c f(c(x-u)) du`, where `p_{j:m}` is the order-statistic
//! density. For the two-sided equation both sides reduce to
//! `n!/(t!(k-1)!)` times the constant-free kernels, so lhs and rhs agree
//! exactly when the parent is exponential.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::equation::SideLaw;
use crate::quadrature::Quadrature;
use crate::{Error, ParentModel, Result, ShiftEquationSpec};

/// `m!/((j-1)!(m-j)!)` as a float.
fn os_constant(j: u32, m: u32) -> f64 {
    // m * C(m-1, j-1)
    let (top, pick) = (m - 1, (j - 1).min(m - j));
    let mut c = 1.0;
    for s in 0..pick {
        c = c * f64::from(top - s) / f64::from(s + 1);
    }
    f64::from(m) * c
}

fn os_density(model: &ParentModel, j: u32, m: u32, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let f = model.pdf(x);
    if f == 0.0 {
        return 0.0;
    }
    os_constant(j, m) * model.cdf(x).powi((j - 1) as i32) * model.sf(x).powi((m - j) as i32) * f
}

/// Density of the `j`-th order statistic of `n` draws at `x`.
pub fn os_pdf(model: &ParentModel, j: u32, n: u32, x: f64) -> Result<f64> {
    if j < 1 || j > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= j <= n, got j={j}, n={n}"
        )));
    }
    if x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "x must be non-negative, got {x}"
        )));
    }
    Ok(os_density(model, j, n, x))
}

/// Density of one side of an equation at `x`.
pub fn side_pdf(model: &ParentModel, side: SideLaw, x: f64, quad: &Quadrature) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "x must be non-negative, got {x}"
        )));
    }
    let Some(c) = side.shift_divisor else {
        return Ok(os_density(model, side.rank, side.size, x));
    };
    if x == 0.0 {
        return Ok(0.0);
    }
    let c = f64::from(c);
    let integrand = |u: f64| {
        let os = os_density(model, side.rank, side.size, u);
        if os == 0.0 {
            0.0
        } else {
            os * c * model.pdf(c * (x - u))
        }
    };
    let breaks: Vec<f64> = model
        .support_upper()
        .map(|b| vec![b, x - b / c])
        .unwrap_or_default();
    Ok(quad
        .integrate_with_breaks(integrand, 0.0, x, &breaks)?
        .value)
}

/// Density of `X_{n-k:n-1} + X_n/n` (or the variant's left side).
pub fn lhs_pdf(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    x: f64,
    quad_tol: f64,
) -> Result<f64> {
    side_pdf(model, spec.lhs(), x, &Quadrature::with_tolerance(quad_tol)?)
}

/// Density of `X_{n-k:n} + X_{n+1}/k` (or the variant's right side).
pub fn rhs_pdf(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    x: f64,
    quad_tol: f64,
) -> Result<f64> {
    side_pdf(model, spec.rhs(), x, &Quadrature::with_tolerance(quad_tol)?)
}

/// Side densities on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityGrid {
    pub points: Vec<f64>,
    pub lhs_values: Vec<f64>,
    pub rhs_values: Vec<f64>,
    pub quad_tol: f64,
    pub max_abs_diff: f64,
}

impl DensityGrid {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,lhs,rhs,absdiff")?;
        for ((x, l), r) in self
            .points
            .iter()
            .zip(&self.lhs_values)
            .zip(&self.rhs_values)
        {
            writeln!(out, "{x},{l},{r},{}", (l - r).abs())?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }
}

/// Evaluates both sides at every point. Points are processed in parallel;
/// the result does not depend on the thread count.
pub fn compare_densities(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    points: &[f64],
    quad_tol: f64,
) -> Result<DensityGrid> {
    let quad = Quadrature::with_tolerance(quad_tol)?;
    if let Some(bad) = points.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "grid point {bad} is not a finite non-negative number"
        )));
    }
    let values: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&x| {
            Ok((
                side_pdf(model, spec.lhs(), x, &quad)?,
                side_pdf(model, spec.rhs(), x, &quad)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (lhs_values, rhs_values): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let max_abs_diff = lhs_values
        .iter()
        .zip(&rhs_values)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    Ok(DensityGrid {
        points: points.to_vec(),
        lhs_values,
        rhs_values,
        quad_tol,
        max_abs_diff,
    })
}

/// Right end beyond which a side carries less than `10 * tail` mass: the
/// order statistic and the shift each exceed the parent's upper
/// `tail / (size+1)` quantile with total probability below `tail`.
pub fn side_upper_bound(model: &ParentModel, side: SideLaw, tail: f64) -> Result<f64> {
    let q = model.upper_quantile(tail / f64::from(side.size + 1))?;
    Ok(match side.shift_divisor {
        Some(c) => q * (1.0 + 1.0 / f64::from(c)),
        None => q,
    })
}

/// Total mass of a side's density over `[0, side_upper_bound(1e-12)]`.
pub fn side_mass(model: &ParentModel, side: SideLaw, quad_tol: f64) -> Result<f64> {
    let inner = Quadrature::with_tolerance(quad_tol)?;
    let outer = Quadrature::with_tolerance(10.0 * quad_tol)?;
    let upper = side_upper_bound(model, side, 1e-12)?;
    let mut breaks = Vec::new();
    if let Some(b) = model.support_upper() {
        breaks.push(b);
        if let Some(c) = side.shift_divisor {
            breaks.push(b / f64::from(c));
            breaks.push(b * (1.0 + 1.0 / f64::from(c)));
        }
    }
    // side_pdf cannot fail for x >= 0 other than by quadrature; surface the first failure
    let failure = std::sync::Mutex::new(None);
    let est = outer.integrate_with_breaks(
        |x| match side_pdf(model, side, x, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                0.0
            }
        },
        0.0,
        upper,
        &breaks,
    )?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(est.value)
}

/// `count` equispaced points on `[a, b]`, both ends included.
pub fn grid_points(a: f64, b: f64, count: usize) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid {a}:{b}:{count} needs 0 <= a < b and at least 2 points"
        )));
    }
    let step = (b - a) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                b
            } else {
                a + step * i as f64
            }
        })
        .collect())
}

/// CDF of a sum of independent exponentials with distinct rates.
fn hypoexponential_cdf(rates: &[f64], x: f64) -> f64 {
    let mut sf = 0.0;
    for (i, &ri) in rates.iter().enumerate() {
        let mut weight = 1.0;
        for (j, &rj) in rates.iter().enumerate() {
            if i != j {
                weight *= rj / (rj - ri);
            }
        }
        sf += weight * (-ri * x).exp();
    }
    (1.0 - sf).clamp(0.0, 1.0)
}

/// Default grid: `count` points on `[0, q]`, where `q` is the 0.999
/// quantile of the left side when the parent is replaced by the
/// exponential law with the same mean.
pub fn default_grid(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    count: usize,
) -> Result<Vec<f64>> {
    let lambda = 1.0 / model.mean();
    let side = spec.lhs();
    // X_{j:m} is a sum of spacings Exp((m-i) lambda), i < j
    let mut rates: Vec<f64> = (0..side.rank)
        .map(|i| f64::from(side.size - i) * lambda)
        .collect();
    if let Some(c) = side.shift_divisor {
        rates.push(f64::from(c) * lambda);
    }
    let mut sorted = rates.clone();
    sorted.sort_by(f64::total_cmp);
    let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
    let upper = if distinct && rates.len() <= 30 {
        let (mut lo, mut hi) = (0.0, rates.iter().map(|r| 1.0 / r).sum::<f64>());
        while hypoexponential_cdf(&rates, hi) < 0.999 {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hypoexponential_cdf(&rates, mid) < 0.999 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    } else {
        let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
        let sd = rates.iter().map(|r| 1.0 / (r * r)).sum::<f64>().sqrt();
        mean + 6.0 * sd
    };
    grid_points(0.0, upper, count)
}
