//! Parent distributions on `[0, inf)` with `F(0) = 0`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform, Weibull};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur, ln_gamma};

use crate::combinatorics::{pow_u, ExactScalar};
use crate::taylor_jet::Jet;
use crate::{Error, Result};

/// Built-in model families. All have bounded densities near 0; families
/// whose density blows up at the origin are rejected on construction.
#[derive(Clone, Debug, PartialEq)]
pub enum ParentModel {
    Exponential {
        rate: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        upper: f64,
    },
    /// `(weight, rate)` pairs; weights sum to 1.
    MixExp {
        components: Vec<(f64, f64)>,
    },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ParentModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        let shape = positive("shape", shape)?;
        if shape < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "weibull shape {shape} < 1 has an unbounded density at 0"
            )));
        }
        Ok(Self::Weibull {
            shape,
            scale: positive("scale", scale)?,
        })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let shape = positive("shape", shape)?;
        if shape < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma shape {shape} < 1 has an unbounded density at 0"
            )));
        }
        Ok(Self::Gamma {
            shape,
            scale: positive("scale", scale)?,
        })
    }

    pub fn uniform(upper: f64) -> Result<Self> {
        Ok(Self::Uniform {
            upper: positive("upper bound", upper)?,
        })
    }

    pub fn mix_exp(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "mixture needs at least one component".into(),
            ));
        }
        let mut total = 0.0;
        for &(w, rate) in &components {
            total += positive("mixture weight", w)?;
            positive("mixture rate", rate)?;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self::MixExp { components })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => rate * (-rate * x).exp(),
            Self::Weibull { shape, scale } => {
                let z = x / scale;
                shape / scale * z.powf(shape - 1.0) * (-z.powf(*shape)).exp()
            }
            Self::Gamma { shape, scale } => {
                if x == 0.0 {
                    return if *shape == 1.0 { 1.0 / scale } else { 0.0 };
                }
                ((shape - 1.0) * x.ln() - x / scale - ln_gamma(*shape) - shape * scale.ln()).exp()
            }
            Self::Uniform { upper } => {
                if x <= *upper {
                    1.0 / upper
                } else {
                    0.0
                }
            }
            Self::MixExp { components } => components
                .iter()
                .map(|(w, rate)| w * rate * (-rate * x).exp())
                .sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * x).exp_m1(),
            Self::Weibull { shape, scale } => -(-(x / scale).powf(*shape)).exp_m1(),
            Self::Gamma { shape, scale } => gamma_lr(*shape, x / scale),
            Self::Uniform { upper } => (x / upper).min(1.0),
            Self::MixExp { components } => components
                .iter()
                .map(|(w, rate)| -w * (-rate * x).exp_m1())
                .sum(),
        }
    }

    /// `1 - F(x)`, computed directly to keep precision in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => (-rate * x).exp(),
            Self::Weibull { shape, scale } => (-(x / scale).powf(*shape)).exp(),
            Self::Gamma { shape, scale } => gamma_ur(*shape, x / scale),
            Self::Uniform { upper } => ((upper - x) / upper).max(0.0),
            Self::MixExp { components } => components
                .iter()
                .map(|(w, rate)| w * (-rate * x).exp())
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            Self::Gamma { shape, scale } => shape * scale,
            Self::Uniform { upper } => upper / 2.0,
            Self::MixExp { components } => components.iter().map(|(w, rate)| w / rate).sum(),
        }
    }

    /// Right end of the support when finite.
    pub fn support_upper(&self) -> Option<f64> {
        match self {
            Self::Uniform { upper } => Some(*upper),
            _ => None,
        }
    }

    pub fn is_exponential(&self) -> bool {
        match self {
            Self::Exponential { .. } => true,
            Self::Weibull { shape, .. } | Self::Gamma { shape, .. } => *shape == 1.0,
            Self::MixExp { components } => components.windows(2).all(|w| w[0].1 == w[1].1),
            Self::Uniform { .. } => false,
        }
    }

    /// `x` with `sf(x) = tail`, for `0 < tail < 1`.
    pub fn upper_quantile(&self, tail: f64) -> Result<f64> {
        if !(tail > 0.0 && tail < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tail probability {tail} outside (0, 1)"
            )));
        }
        Ok(match self {
            Self::Exponential { rate } => -tail.ln() / rate,
            Self::Weibull { shape, scale } => scale * (-tail.ln()).powf(1.0 / shape),
            Self::Uniform { upper } => upper * (1.0 - tail),
            _ => {
                let mut hi = self.mean().max(f64::MIN_POSITIVE);
                while self.sf(hi) > tail {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.sf(mid) > tail {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        })
    }

    /// Exact derivative jet at 0, for families where it has a closed form
    /// over the (binary-exact) parameter values.
    pub fn exact_jet(&self, order: usize) -> Option<Jet> {
        let exact = |v: f64| BigRational::from_float(v);
        let components: Vec<(ExactScalar, ExactScalar)> = match self {
            Self::Exponential { rate } => vec![(exact(1.0)?, exact(*rate)?)],
            Self::MixExp { components } => components
                .iter()
                .map(|&(w, r)| Some((exact(w)?, exact(r)?)))
                .collect::<Option<_>>()?,
            _ => return None,
        };
        let derivs = (0..=order)
            .map(|m| {
                let mut acc = ExactScalar::zero();
                for (w, rate) in &components {
                    acc += w * pow_u(rate, m as u32 + 1);
                }
                if m % 2 == 1 {
                    -acc
                } else {
                    acc
                }
            })
            .collect();
        let jet = Jet::new(derivs).ok()?;
        jet.derivs()[0].is_positive().then_some(jet)
    }

    pub fn sampler(&self) -> Result<ModelSampler> {
        let bad = |e: &dyn fmt::Display| Error::InvalidArgument(format!("sampler: {e}"));
        Ok(match self {
            Self::Exponential { rate } => ModelSampler::Exp(Exp::new(*rate).map_err(|e| bad(&e))?),
            Self::Weibull { shape, scale } => {
                ModelSampler::Weibull(Weibull::new(*scale, *shape).map_err(|e| bad(&e))?)
            }
            Self::Gamma { shape, scale } => {
                ModelSampler::Gamma(Gamma::new(*shape, *scale).map_err(|e| bad(&e))?)
            }
            Self::Uniform { upper } => {
                ModelSampler::Uniform(Uniform::new(0.0, *upper).map_err(|e| bad(&e))?)
            }
            Self::MixExp { components } => {
                let mut cumulative = Vec::with_capacity(components.len());
                let mut arms = Vec::with_capacity(components.len());
                let mut acc = 0.0;
                for &(w, rate) in components {
                    acc += w;
                    cumulative.push(acc);
                    arms.push(Exp::new(rate).map_err(|e| bad(&e))?);
                }
                ModelSampler::Mix { cumulative, arms }
            }
        })
    }
}

/// Pre-built samplers for a [`ParentModel`].
#[derive(Clone, Debug)]
pub enum ModelSampler {
    Exp(Exp<f64>),
    Weibull(Weibull<f64>),
    Gamma(Gamma<f64>),
    Uniform(Uniform<f64>),
    Mix {
        cumulative: Vec<f64>,
        arms: Vec<Exp<f64>>,
    },
}

impl ModelSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exp(d) => d.sample(rng),
            Self::Weibull(d) => d.sample(rng),
            Self::Gamma(d) => d.sample(rng),
            Self::Uniform(d) => d.sample(rng),
            Self::Mix { cumulative, arms } => {
                let u: f64 = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                let idx = cumulative.partition_point(|&c| c <= u).min(arms.len() - 1);
                arms[idx].sample(rng)
            }
        }
    }
}

impl fmt::Display for ParentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Weibull { shape, scale } => write!(f, "weibull:{shape},{scale}"),
            Self::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            Self::Uniform { upper } => write!(f, "uniform:0,{upper}"),
            Self::MixExp { components } => {
                write!(f, "mixexp:")?;
                for (i, (w, rate)) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w},{rate}")?;
                }
                Ok(())
            }
        }
    }
}

/// `exp:λ`, `weibull:shape,scale`, `gamma:shape,scale`, `uniform:0,b`,
/// `mixexp:w1,λ1,w2,λ2,...`.
impl FromStr for ParentModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model {s:?} lacks a `family:` prefix")))?;
        let values: Vec<f64> = params
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {p:?} in model {s:?}")))
            })
            .collect::<Result<_>>()?;
        let arity = |want: usize| {
            if values.len() == want {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "{family} takes {want} parameter(s), got {}",
                    values.len()
                )))
            }
        };
        match family {
            "exp" => {
                arity(1)?;
                Self::exponential(values[0])
            }
            "weibull" => {
                arity(2)?;
                Self::weibull(values[0], values[1])
            }
            "gamma" => {
                arity(2)?;
                Self::gamma(values[0], values[1])
            }
            "uniform" => {
                arity(2)?;
                if values[0] != 0.0 {
                    return Err(Error::InvalidArgument(
                        "uniform models must start at 0 (F(0) = 0)".into(),
                    ));
                }
                Self::uniform(values[1])
            }
            "mixexp" => {
                if values.is_empty() || !values.len().is_multiple_of(2) {
                    return Err(Error::Parse("mixexp takes weight,rate pairs".into()));
                }
                Self::mix_exp(values.chunks(2).map(|c| (c[0], c[1])).collect())
            }
            other => Err(Error::Parse(format!("unknown model family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(s: &str) -> ParentModel {
        s.parse().unwrap()
    }

    #[test]
    fn grammar() {
        assert_eq!(model("exp:2.5"), ParentModel::Exponential { rate: 2.5 });
        assert_eq!(
            model("weibull:2,1"),
            ParentModel::Weibull {
                shape: 2.0,
                scale: 1.0
            }
        );
        assert_eq!(model("uniform:0,3"), ParentModel::Uniform { upper: 3.0 });
        let mix = model("mixexp:0.5,1,0.5,2");
        assert_eq!(mix.to_string(), "mixexp:0.5,1,0.5,2");
        assert_eq!(model(&mix.to_string()), mix);
        for bad in [
            "exp",
            "exp:-1",
            "exp:1,2",
            "weibull:0.5,1",
            "gamma:0.3,1",
            "uniform:1,2",
            "mixexp:0.3,1",
            "mixexp:0.5,1,0.2,3",
            "cauchy:1",
        ] {
            assert!(bad.parse::<ParentModel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn boundary_values() {
        for m in [
            "exp:1.5",
            "weibull:2,1",
            "weibull:1,2",
            "gamma:1,2",
            "gamma:3,1",
            "uniform:0,2",
            "mixexp:0.5,1,0.5,2",
        ] {
            let m = model(m);
            assert_eq!(m.cdf(0.0), 0.0);
            assert_eq!(m.sf(0.0), 1.0);
            let x = 0.7;
            assert!((m.cdf(x) + m.sf(x) - 1.0).abs() < 1e-14, "{m}");
        }
        assert_eq!(model("gamma:1,2").pdf(0.0), 0.5);
        assert_eq!(model("weibull:2,1").pdf(0.0), 0.0);
        assert_eq!(model("mixexp:0.5,1,0.5,2").pdf(0.0), 1.5);
    }

    #[test]
    fn quantiles_invert_sf() {
        for m in [
            "exp:2",
            "weibull:2,1",
            "gamma:2.5,1.5",
            "uniform:0,4",
            "mixexp:0.25,1,0.75,3",
        ] {
            let m = model(m);
            for tail in [0.5, 1e-3, 1e-9] {
                let q = m.upper_quantile(tail).unwrap();
                // absolute slack covers rounding of q itself near a finite endpoint
                assert!(
                    (m.sf(q) - tail).abs() < 1e-9 * tail + 1e-15,
                    "{m} tail={tail}"
                );
            }
        }
    }

    #[test]
    fn sample_means() {
        for m in [
            "exp:2",
            "weibull:2,1",
            "gamma:2.5,1.5",
            "uniform:0,4",
            "mixexp:0.25,1,0.75,3",
        ] {
            let m = model(m);
            let sampler = m.sampler().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let count = 200_000;
            let xs: Vec<f64> = (0..count).map(|_| sampler.draw(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / count as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64;
            assert!(
                (mean - m.mean()).abs() < 5.0 * (var / count as f64).sqrt(),
                "{m}"
            );
            assert!(xs.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn exact_jets() {
        let j = model("mixexp:0.5,1,0.5,2").exact_jet(2).unwrap();
        assert_eq!(j.derivs(), &[ratio(3, 2), ratio(-5, 2), ratio(9, 2)]);
        assert!(model("weibull:2,1").exact_jet(3).is_none());
        assert!(model("exp:0.5").exact_jet(3).unwrap().exponential_prefix() == 3);
    }
}
