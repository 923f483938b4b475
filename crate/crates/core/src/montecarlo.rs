//! Seeded simulation of both sides and two-sample testing.
//!
//! Random streams: every stream is a `ChaCha8Rng` seeded from the user
//! seed via `seed_from_u64`, with the 64-bit ChaCha stream id set to
//! `(purpose << 32) | chunk`. Purposes are `0` (left side), `1` (right
//! side), `2` (goodness-of-fit shuffle) and `3` (permutations). Samples are
//! produced in fixed chunks of [`CHUNK`] realisations, one stream each, so
//! output is identical for any thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equation::SideLaw;
use crate::model::ModelSampler;
use crate::{Error, ParentModel, Result, ShiftEquationSpec};

pub const CHUNK: usize = 4096;

const STREAM_LHS: u64 = 0;
const STREAM_RHS: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_PERMUTE: u64 = 3;

/// Below this many realisations per side the permutation test is flagged.
pub const LOW_POWER_BLOCKS: usize = 30;

pub fn stream_rng(seed: u64, purpose: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | chunk);
    rng
}

/// One realisation of a side from a block of parent draws:
/// `block[..size]` feed the order statistic, `block[size]` the shift.
fn realise(side: SideLaw, block: &mut [f64]) -> f64 {
    let size = side.size as usize;
    let (os_part, rest) = block.split_at_mut(size);
    let (_, os, _) = os_part.select_nth_unstable_by(side.rank as usize - 1, f64::total_cmp);
    match side.shift_divisor {
        Some(c) => *os + rest[0] / f64::from(c),
        None => *os,
    }
}

fn sample_side(
    sampler: &ModelSampler,
    side: SideLaw,
    count: usize,
    seed: u64,
    purpose: u64,
) -> Vec<f64> {
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, purpose, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut block = vec![0.0; side.draws()];
            (0..len)
                .map(|_| {
                    for v in block.iter_mut() {
                        *v = sampler.draw(&mut rng);
                    }
                    realise(side, &mut block)
                })
                .collect()
        })
        .collect();
    parts.concat()
}

/// `count` independent realisations of each side.
pub fn sample_sides(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    count: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if count < 1 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let sampler = model.sampler()?;
    let (lhs, rhs) = rayon::join(
        || sample_side(&sampler, spec.lhs(), count, seed, STREAM_LHS),
        || sample_side(&sampler, spec.rhs(), count, seed, STREAM_RHS),
    );
    Ok((lhs, rhs))
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `sup |F_a - F_b|` scaled by `na * nb`, from pooled values sorted
/// ascending with their sample labels (`true` = first sample).
fn ks_scaled(pooled: &[(f64, bool)], na: u64, nb: u64) -> u64 {
    let (mut ca, mut cb, mut best) = (0u64, 0u64, 0u64);
    for (i, &(v, from_a)) in pooled.iter().enumerate() {
        if from_a {
            ca += 1;
        } else {
            cb += 1;
        }
        let group_end = pooled.get(i + 1).is_none_or(|next| next.0 != v);
        if group_end {
            best = best.max((ca * nb).abs_diff(cb * na));
        }
    }
    best
}

fn pooled_sorted(a: &[f64], b: &[f64]) -> Result<Vec<(f64, bool)>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "both samples must be non-empty".into(),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN".into()));
    }
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pooled)
}

fn scaled_to_statistic(scaled: u64, na: u64, nb: u64) -> f64 {
    scaled as f64 / (na as f64 * nb as f64)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small arguments
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for j in 1..=20 {
            let odd = f64::from(2 * j - 1);
            cdf += (odd * odd * y).exp();
        }
        let cdf = cdf * (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..=100 {
            let j = f64::from(j);
            let term = (-2.0 * j * j * lambda * lambda).exp();
            sf += if j as u32 % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Two-sample KS statistic with the asymptotic p-value for effective size
/// `na nb / (na + nb)` (Stephens' small-sample correction applied to the
/// argument).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let pooled = pooled_sorted(a, b)?;
    let (na, nb) = (a.len() as u64, b.len() as u64);
    let statistic = scaled_to_statistic(ks_scaled(&pooled, na, nb), na, nb);
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    let p_value = kolmogorov_sf((en + 0.12 + 0.11 / en) * statistic);
    Ok(KsResult { statistic, p_value })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Rejected,
}

/// Outcome of a two-sample comparison of the sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n_lhs: usize,
    pub n_rhs: usize,
    pub seed: u64,
    pub spec: ShiftEquationSpec,
    pub alpha: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serialisable")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn verdict(p_value: f64, alpha: f64) -> Verdict {
    if p_value < alpha {
        Verdict::Rejected
    } else {
        Verdict::Consistent
    }
}

/// Simulates both sides and compares them with the asymptotic KS test.
pub fn equation_test(
    model: &ParentModel,
    spec: &ShiftEquationSpec,
    count: usize,
    seed: u64,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let (lhs, rhs) = sample_sides(model, spec, count, seed)?;
    let ks = ks_two_sample(&lhs, &rhs)?;
    Ok(TestReport {
        statistic: ks.statistic,
        p_value: ks.p_value,
        n_lhs: lhs.len(),
        n_rhs: rhs.len(),
        seed,
        spec: *spec,
        alpha,
        verdict: verdict(ks.p_value, alpha),
        note: None,
    })
}

/// Exponentiality test on observed data built on the shift equation.
///
/// The data are shuffled once, then cut into consecutive disjoint blocks
/// that alternate between the two sides: a left block holds the draws for
/// one left realisation (order-statistic draws first, shift last), a right
/// block likewise. No observation is used twice, so the two constructed
/// samples are independent and, under exponentiality, identically
/// distributed. The p-value is a permutation p-value: the pooled
/// realisations are relabelled at random `permutations` times and
/// `p = (1 + #{D* >= D}) / (permutations + 1)`.
pub fn gof_exponentiality(
    data: &[f64],
    spec: &ShiftEquationSpec,
    permutations: usize,
    seed: u64,
    alpha: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    if permutations < 1 {
        return Err(Error::InvalidArgument(
            "need at least one permutation".into(),
        ));
    }
    let (left, right) = (spec.lhs(), spec.rhs());
    let pair = left.draws() + right.draws();
    let need = pair.max(2 * (spec.n() as usize + 1));
    if data.len() < need {
        return Err(Error::InsufficientData {
            need,
            have: data.len(),
        });
    }
    if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "observations must be positive, got {bad}"
        )));
    }

    let mut shuffled = data.to_vec();
    shuffled.shuffle(&mut stream_rng(seed, STREAM_SHUFFLE, 0));

    let pairs = shuffled.len() / pair;
    let mut lhs = Vec::with_capacity(pairs);
    let mut rhs = Vec::with_capacity(pairs);
    for block in shuffled.chunks_exact_mut(pair) {
        let (a, b) = block.split_at_mut(left.draws());
        lhs.push(realise(left, a));
        rhs.push(realise(right, b));
    }

    let pooled = pooled_sorted(&lhs, &rhs)?;
    let (na, nb) = (lhs.len() as u64, rhs.len() as u64);
    let observed = ks_scaled(&pooled, na, nb);

    let values: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let mut labels: Vec<bool> = pooled.iter().map(|p| p.1).collect();
    let mut relabelled: Vec<(f64, bool)> = pooled.clone();
    let mut rng = stream_rng(seed, STREAM_PERMUTE, 0);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        labels.shuffle(&mut rng);
        for ((slot, &v), &l) in relabelled.iter_mut().zip(&values).zip(&labels) {
            *slot = (v, l);
        }
        if ks_scaled(&relabelled, na, nb) >= observed {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (permutations + 1) as f64;
    let note = (pairs < LOW_POWER_BLOCKS).then(|| {
        format!(
            "low power: only {pairs} realisation(s) per side; the permutation p-value is coarse"
        )
    });
    Ok(TestReport {
        statistic: scaled_to_statistic(observed, na, nb),
        p_value,
        n_lhs: lhs.len(),
        n_rhs: rhs.len(),
        seed,
        spec: *spec,
        alpha,
        verdict: verdict(p_value, alpha),
        note,
    })
}

pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!("line {}: {:?} is not a number", i + 1, l.trim()))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Exp};

    fn model(s: &str) -> ParentModel {
        s.parse().unwrap()
    }

    fn spec(n: u32, k: u32) -> ShiftEquationSpec {
        ShiftEquationSpec::new(n, k).unwrap()
    }

    #[test]
    fn realise_block() {
        let side = SideLaw {
            rank: 1,
            size: 1,
            shift_divisor: Some(2),
        };
        assert_eq!(realise(side, &mut [3.0, 4.0]), 5.0);
        let side = SideLaw {
            rank: 2,
            size: 3,
            shift_divisor: None,
        };
        assert_eq!(realise(side, &mut [9.0, 1.0, 5.0]), 5.0);
    }

    #[test]
    fn n2_lhs_is_first_plus_half_second() {
        // the lhs of n=2, k=1 is X_1 + X_2/2 drawn from the lhs stream
        let (lhs, _) = sample_sides(&model("exp:1"), &spec(2, 1), 1, 42).unwrap();
        let exp = Exp::new(1.0).unwrap();
        let mut rng = stream_rng(42, STREAM_LHS, 0);
        let x1 = exp.sample(&mut rng);
        let x2 = exp.sample(&mut rng);
        assert_eq!(lhs, vec![x1 + x2 / 2.0]);
    }

    #[test]
    fn uniform_support() {
        let (lhs, rhs) = sample_sides(&model("uniform:0,1"), &spec(3, 2), 5000, 3).unwrap();
        assert!(lhs.iter().all(|&v| v > 0.0 && v < 1.5));
        assert!(rhs.iter().all(|&v| v > 0.0 && v < 1.5));
    }

    #[test]
    fn exponential_means_agree() {
        let count = 100_000;
        let (lhs, rhs) = sample_sides(&model("exp:1"), &spec(3, 2), count, 11).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let expected = 0.5 + 1.0 / 3.0;
        for side in [&lhs, &rhs] {
            assert!((mean(side) - expected).abs() < 3.0 * sd(side) / (count as f64).sqrt());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    sample_sides(&model("gamma:2,1"), &spec(4, 3), 3 * CHUNK + 17, 5).unwrap()
                })
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(1));
        let other = sample_sides(&model("gamma:2,1"), &spec(4, 3), 10, 6).unwrap();
        assert_ne!(other.0[..10], one.0[..10]);
    }

    #[test]
    fn ks_examples() {
        let v = vec![0.3, 1.2, 2.2, 0.1];
        let r = ks_two_sample(&v, &v).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0]).unwrap().statistic, 1.0);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
        assert!(ks_two_sample(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn ks_handles_ties() {
        // F_a jumps to 1 at 1, F_b is 1/2 there
        let r = ks_two_sample(&[1.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
    }

    #[test]
    fn ks_same_law_is_small() {
        let n = 200_000;
        let exp = Exp::new(1.0).unwrap();
        let mut r1 = stream_rng(7, 9, 0);
        let mut r2 = stream_rng(7, 9, 1);
        let a: Vec<f64> = (0..n).map(|_| exp.sample(&mut r1)).collect();
        let b: Vec<f64> = (0..n).map(|_| exp.sample(&mut r2)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().statistic < 0.006);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_sf(1.358_1) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_sf(1.627_6) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(0.5) - 0.963_945).abs() < 1e-5);
        // both branches agree where they meet
        assert!((kolmogorov_sf(1.179_999) - kolmogorov_sf(1.18)).abs() < 1e-6);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn equation_test_examples() {
        let r = equation_test(&model("exp:1"), &spec(3, 2), 20_000, 1, 0.01).unwrap();
        assert_eq!(r.n_lhs, 20_000);
        assert!((0.0..=1.0).contains(&r.statistic));
        let one = ShiftEquationSpec::one_sided_max(4).unwrap();
        assert_eq!(
            equation_test(&model("exp:1"), &one, 50_000, 2, 0.01)
                .unwrap()
                .verdict,
            Verdict::Consistent
        );
        assert!(equation_test(&model("exp:1"), &spec(3, 2), 10, 1, 1.5).is_err());
    }

    #[test]
    fn gof_boundary_and_errors() {
        let s = spec(3, 2);
        let data: Vec<f64> = (1..=8).map(f64::from).collect();
        let r = gof_exponentiality(&data, &s, 99, 4, 0.01).unwrap();
        assert_eq!((r.n_lhs, r.n_rhs), (1, 1));
        assert!(r.note.as_deref().unwrap().contains("low power"));
        assert!(matches!(
            gof_exponentiality(&data[..7], &s, 99, 4, 0.01),
            Err(Error::InsufficientData { need: 8, have: 7 })
        ));
        let mut bad = data.clone();
        bad[3] = -1.0;
        assert!(gof_exponentiality(&bad, &s, 99, 4, 0.01).is_err());
        assert!(gof_exponentiality(&data, &s, 0, 4, 0.01).is_err());
    }

    #[test]
    fn gof_statistic_is_scale_invariant() {
        let exp = Exp::new(3.0).unwrap();
        let mut rng = stream_rng(1, 99, 0);
        let data: Vec<f64> = (0..2000).map(|_| exp.sample(&mut rng)).collect();
        let s = spec(3, 2);
        let base = gof_exponentiality(&data, &s, 99, 8, 0.01).unwrap();
        for c in [0.1, 7.3] {
            let scaled: Vec<f64> = data.iter().map(|v| v * c).collect();
            let r = gof_exponentiality(&scaled, &s, 99, 8, 0.01).unwrap();
            assert_eq!(r.statistic.to_bits(), base.statistic.to_bits());
            assert_eq!(r.p_value, base.p_value);
        }
    }

    fn draws<D: Distribution<f64>>(law: D, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 99, 0);
        (0..count).map(|_| law.sample(&mut rng)).collect()
    }

    #[test]
    fn gof_keeps_exponential_data() {
        for seed in 1..=5 {
            let data = draws(Exp::new(3.0).unwrap(), 10_000, seed);
            let r = gof_exponentiality(&data, &spec(3, 2), 999, seed, 0.01).unwrap();
            assert_eq!(r.verdict, Verdict::Consistent, "seed {seed}: {r:?}");
            assert_eq!((r.n_lhs, r.n_rhs), (1428, 1428));
            assert!(r.note.is_none());
        }
    }

    #[test]
    fn gof_rejects_uniform_data() {
        let uniform = rand_distr::Uniform::new(0.0, 1.0).unwrap();
        for seed in 1..=5 {
            // n=4, k=1 separates the sides strongly
            let data = draws(uniform, 10_000, seed);
            let r = gof_exponentiality(&data, &spec(4, 1), 999, seed, 0.01).unwrap();
            assert_eq!(r.verdict, Verdict::Rejected, "seed {seed}: {r:?}");
            // n=3, k=2 has sup-distance ~0.037 between the sides and needs more data
            let data = draws(uniform, 100_000, seed);
            let r = gof_exponentiality(&data, &spec(3, 2), 199, seed, 0.01).unwrap();
            assert_eq!(r.verdict, Verdict::Rejected, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn exponential_rejection_rate_matches_alpha() {
        let (runs, alpha) = (200u64, 0.05);
        let rejected = (0..runs)
            .filter(|&seed| {
                equation_test(&model("exp:1"), &spec(3, 2), 2000, 1000 + seed, alpha)
                    .unwrap()
                    .verdict
                    == Verdict::Rejected
            })
            .count() as f64;
        let se = (alpha * (1.0 - alpha) / runs as f64).sqrt();
        assert!(
            (rejected / runs as f64 - alpha).abs() <= 3.0 * se,
            "{rejected} rejections"
        );
    }

    #[test]
    fn report_json_shape() {
        let r = equation_test(&model("exp:1"), &spec(3, 2), 100, 9, 0.05).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["spec"]["n"], 3);
        assert_eq!(v["spec"]["variant"], "two_sided");
        assert_eq!(v["seed"], 9);
        assert!(v.get("note").is_none());
        assert!(matches!(
            v["verdict"].as_str(),
            Some("consistent" | "rejected")
        ));
    }

    #[test]
    fn parse_data_lines() {
        assert_eq!(parse_data("1.5\n\n2e-1\n").unwrap(), vec![1.5, 0.2]);
        assert!(parse_data("1\nx\n").is_err());
    }
}
