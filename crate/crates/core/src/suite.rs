//! Batch residual checks over a parameter grid.

use std::fmt::Write as _;

use num_traits::Zero;
use rayon::prelude::*;

use crate::combinatorics::{
    check_binsum, check_lemma2, check_lemma3_k, check_lemma3_n, check_pascal_step,
    final_identity_with_sign, int, ratio, ExactScalar,
};
use crate::engine::{characterize, residual_eq23};
use crate::taylor_jet::{exp_jet, g_family, lemma4_closed_form};
use crate::{Error, Result, ShiftEquationSpec};

/// Bounds of the identity grid.
#[derive(Clone, Debug)]
pub struct SuiteGrid {
    /// `2 <= n <= n_max`, `1 <= k <= n-1` (and `k = n` where allowed).
    pub n_max: u32,
    /// `1 <= m <= m_max` for the binomial-sum telescoping identity.
    pub m_max: u32,
    /// Powers `0 <= i <= i_max` of the H-numbers.
    pub i_max: u32,
    pub r_max: u32,
    pub d_max: u32,
    /// `1 <= j <= j_max` for `G_j` closed forms.
    pub j_max: u32,
    /// Order of the solved jets compared against the exponential jet.
    pub solve_order: usize,
    pub lambdas: Vec<ExactScalar>,
}

impl SuiteGrid {
    /// Grid driven by the two CLI bounds; the rest follow from them.
    pub fn from_bounds(n_max: u32, r_max: u32) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidArgument(format!(
                "need nmax >= 2, got {n_max}"
            )));
        }
        Ok(Self {
            n_max,
            m_max: r_max.max(1),
            i_max: 2 * n_max - 2,
            r_max,
            d_max: r_max.max(1),
            j_max: (n_max - 2).max(1),
            solve_order: r_max as usize,
            lambdas: default_lambdas(),
        })
    }
}

pub fn default_lambdas() -> Vec<ExactScalar> {
    vec![ratio(1, 2), int(1), int(2), int(3)]
}

/// One failed check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckFailure {
    pub check: &'static str,
    pub args: String,
    pub residual: ExactScalar,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOutcome {
    pub checked: usize,
    pub failures: Vec<CheckFailure>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug)]
enum Task {
    Pascal {
        s: u32,
        r: u32,
    },
    Lemma2 {
        n: u32,
        k: u32,
        m: u32,
        i: u32,
    },
    Lemma3K {
        n: u32,
        k: u32,
        r: u32,
    },
    Lemma3N {
        n: u32,
        k: u32,
        r: u32,
    },
    Binsum {
        k: u32,
        d: u32,
    },
    Final {
        n: u32,
        k: u32,
        r: u32,
        tamper: bool,
    },
    Lemma4 {
        lambda: usize,
        j_max: u32,
        d_max: u32,
    },
    Eq23 {
        lambda: usize,
        n: u32,
        k: u32,
        r_max: u32,
    },
    Solve {
        lambda: usize,
        n: u32,
        k: u32,
        order: usize,
    },
}

fn grid_tasks(grid: &SuiteGrid, tamper: bool) -> Vec<Task> {
    let mut tasks = Vec::new();
    for s in 1..=grid.n_max {
        for r in 1..=grid.i_max.max(1) {
            tasks.push(Task::Pascal { s, r });
        }
    }
    for n in 1..=grid.n_max {
        for k in 1..=n {
            for m in 1..=grid.m_max {
                for i in 0..=grid.i_max {
                    tasks.push(Task::Lemma2 { n, k, m, i });
                }
            }
        }
    }
    let mut tampered = !tamper;
    for n in 2..=grid.n_max {
        for k in 1..n {
            for r in 0..=grid.r_max {
                tasks.push(Task::Lemma3K { n, k, r });
                tasks.push(Task::Lemma3N { n, k, r });
                tasks.push(Task::Final {
                    n,
                    k,
                    r,
                    tamper: !tampered,
                });
                tampered = true;
            }
        }
    }
    for k in 1..=grid.n_max {
        for d in 1..=grid.d_max {
            tasks.push(Task::Binsum { k, d });
        }
    }
    for lambda in 0..grid.lambdas.len() {
        tasks.push(Task::Lemma4 {
            lambda,
            j_max: grid.j_max,
            d_max: grid.d_max,
        });
        for n in 2..=grid.n_max {
            for k in 1..n {
                tasks.push(Task::Eq23 {
                    lambda,
                    n,
                    k,
                    r_max: grid.r_max,
                });
                tasks.push(Task::Solve {
                    lambda,
                    n,
                    k,
                    order: grid.solve_order,
                });
            }
        }
    }
    tasks
}

fn failure(check: &'static str, args: String, residual: ExactScalar) -> Vec<CheckFailure> {
    if residual.is_zero() {
        Vec::new()
    } else {
        vec![CheckFailure {
            check,
            args,
            residual,
        }]
    }
}

fn run_task(task: &Task, grid: &SuiteGrid) -> Result<(usize, Vec<CheckFailure>)> {
    let one = |check, args, v| Ok((1, failure(check, args, v)));
    match *task {
        Task::Pascal { s, r } => one(
            "pascal_step",
            format!("s={s};r={r}"),
            check_pascal_step(s, r)?,
        ),
        Task::Lemma2 { n, k, m, i } => one(
            "lemma2",
            format!("n={n};k={k};m={m};i={i}"),
            check_lemma2(n, k, m, i)?,
        ),
        Task::Lemma3K { n, k, r } => one(
            "lemma3_k",
            format!("n={n};k={k};r={r}"),
            check_lemma3_k(n, k, r)?,
        ),
        Task::Lemma3N { n, k, r } => one(
            "lemma3_n",
            format!("n={n};k={k};r={r}"),
            check_lemma3_n(n, k, r)?,
        ),
        Task::Binsum { k, d } => one("binsum", format!("k={k};d={d}"), check_binsum(k, d)?),
        Task::Final { n, k, r, tamper } => one(
            "final_identity",
            format!("n={n};k={k};r={r}"),
            final_identity_with_sign(n, k, r, tamper)?,
        ),
        Task::Lemma4 {
            lambda,
            j_max,
            d_max,
        } => {
            let lam = &grid.lambdas[lambda];
            let f = exp_jet(lam, (j_max + d_max) as usize)?;
            let family = g_family(&f, j_max);
            let (f0, f1) = (&f.derivs()[0], &f.derivs()[1]);
            let mut count = 0;
            let mut fails = Vec::new();
            for j in 1..=j_max {
                for d in -i64::from(j)..=i64::from(d_max) {
                    let leibniz = &family[j as usize].derivs()[(i64::from(j) + d) as usize];
                    let closed = lemma4_closed_form(f0, f1, j, d)?;
                    count += 1;
                    fails.extend(failure(
                        "lemma4",
                        format!("lambda={lam};j={j};d={d}"),
                        leibniz - closed,
                    ));
                }
            }
            Ok((count, fails))
        }
        Task::Eq23 {
            lambda,
            n,
            k,
            r_max,
        } => {
            let lam = &grid.lambdas[lambda];
            let spec = ShiftEquationSpec::new(n, k)?;
            let f = exp_jet(lam, (spec.t() + r_max + 1) as usize)?;
            let mut fails = Vec::new();
            for r in 0..=r_max {
                fails.extend(failure(
                    "eq23_exponential",
                    format!("lambda={lam};n={n};k={k};r={r}"),
                    residual_eq23(&f, &spec, r)?,
                ));
            }
            Ok((r_max as usize + 1, fails))
        }
        Task::Solve {
            lambda,
            n,
            k,
            order,
        } => {
            let lam = &grid.lambdas[lambda];
            let spec = ShiftEquationSpec::new(n, k)?;
            let solved = characterize(lam, &spec, order)?;
            let reference = exp_jet(lam, order)?;
            let mut fails = Vec::new();
            for (m, (a, b)) in solved.derivs().iter().zip(reference.derivs()).enumerate() {
                fails.extend(failure(
                    "characterize",
                    format!("lambda={lam};n={n};k={k};m={m}"),
                    a - b,
                ));
            }
            Ok((order + 1, fails))
        }
    }
}

/// Evaluates every identity on the grid. With `tamper`, one sign in the
/// first final-identity check is flipped so the harness can be seen to fail.
pub fn run_identity_suite(grid: &SuiteGrid, tamper: bool) -> Result<SuiteOutcome> {
    let tasks = grid_tasks(grid, tamper);
    let results: Vec<(usize, Vec<CheckFailure>)> = tasks
        .par_iter()
        .map(|task| run_task(task, grid))
        .collect::<Result<_>>()?;
    let mut outcome = SuiteOutcome::default();
    for (count, fails) in results {
        outcome.checked += count;
        outcome.failures.extend(fails);
    }
    Ok(outcome)
}

pub fn failures_csv(failures: &[CheckFailure]) -> String {
    let mut out = String::from("check,args,residual_num,residual_den\n");
    for f in failures {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            f.check,
            f.args,
            f.residual.numer(),
            f.residual.denom()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_passes() {
        let grid = SuiteGrid::from_bounds(4, 3).unwrap();
        let outcome = run_identity_suite(&grid, false).unwrap();
        assert!(outcome.passed(), "{:?}", outcome.failures);
        assert!(outcome.checked > 500);
    }

    #[test]
    fn tamper_produces_exactly_one_failure() {
        let grid = SuiteGrid::from_bounds(4, 3).unwrap();
        let outcome = run_identity_suite(&grid, true).unwrap();
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].check, "final_identity");
        let csv = failures_csv(&outcome.failures);
        assert!(
            csv.starts_with("check,args,residual_num,residual_den\nfinal_identity,n=2;k=1;r=0,")
        );
    }

    #[test]
    fn bounds_validation() {
        assert!(SuiteGrid::from_bounds(0, 3).is_err());
        assert!(SuiteGrid::from_bounds(1, 3).is_err());
    }
}
