//! Self-check battery run by `sfwkit verify`.
//!
//! Each check draws small random problems from a seeded generator and tests
//! one property of the solvers or bounds. The report is plain data so the CLI
//! can emit it as JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{kappa, ConstraintSet, Norm};
use crate::diagnostics::{
    expected_h_after_refresh, gap_discrepancy_bound, h_error, lemma3_bound, one_step_bound, recurrence_worst_case,
    taylor_constants, RateConstants, RecurrenceParams,
};
use crate::error::Result;
use crate::numkit::DesignMatrix;
use crate::problem::{LossKind, LossModel, Problem};
use crate::solvers::{reference_optimum, run_solver, RunConfig, Schedule, SolverKind, SolverState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual comparisons made.
    pub cases: u64,
    /// Worst observed slack (bound minus value); negative means a violation.
    pub worst_slack: f64,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

struct Tally {
    cases: u64,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self { cases: 0, worst: f64::INFINITY }
    }

    fn record(&mut self, slack: f64) {
        self.cases += 1;
        self.worst = self.worst.min(slack);
    }

    fn finish(self, name: &'static str, tol: f64) -> CheckResult {
        CheckResult { name, passed: self.worst >= -tol, cases: self.cases, worst_slack: self.worst, detail: None }
    }
}

/// Random sparse problem with `n` and `d` drawn from the given ranges.
fn random_problem(
    rng: &mut ChaCha8Rng,
    n: std::ops::Range<usize>,
    d: std::ops::Range<usize>,
    loss: LossKind,
) -> Result<Problem> {
    let n = rng.random_range(n);
    let d = rng.random_range(d);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::new();
        for j in 0..d {
            if rng.random_bool(0.7) {
                row.push((j, rng.random_range(-1.0..1.0)));
            }
        }
        rows.push(row);
    }
    let y = (0..n)
        .map(|_| match loss {
            LossKind::Logistic => if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            _ => rng.random_range(-2.0..2.0),
        })
        .collect();
    Problem::new(DesignMatrix::from_sparse_rows(d, &rows)?, LossModel::new(loss, y)?)
}

fn gap_discrepancy(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for k in 0..8 {
        let loss = if k % 2 == 0 { LossKind::Logistic } else { LossKind::Squared };
        let p = random_problem(rng, 5..30, 2..10, loss)?;
        let set = ConstraintSet::l1_ball(rng.random_range(0.5..3.0))?;
        let d_inf = set.diameter(p.x(), Norm::Linf)?;
        for kind in SolverKind::ALL {
            let mut cfg = RunConfig::new(kind, 1, 40 * p.n() as u64, rng.random());
            cfg.exact_diagnostics = true;
            for row in run_solver(&p, &set, &cfg)?.rows {
                let (g, h) = (row.exact_gap.unwrap_or(0.0), row.h_error.unwrap_or(0.0));
                let bound = gap_discrepancy_bound(d_inf, h) + 1e-9 * (1.0 + g.abs());
                tally.record(bound - (g - row.stochastic_gap).abs());
            }
        }
    }
    Ok(tally.finish("gap_discrepancy", 0.0))
}

fn table_error_expectation(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for _ in 0..50 {
        let n = rng.random_range(2..21);
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let closed = (1.0 - 1.0 / n as f64) * h_error(&alpha, &grad)?;
        tally.record(1e-12 - (expected_h_after_refresh(&alpha, &grad)? - closed).abs());
    }
    Ok(tally.finish("table_error_expectation", 0.0))
}

fn one_step_descent(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for _ in 0..4 {
        let p = random_problem(rng, 5..20, 2..8, LossKind::Squared)?;
        let set = ConstraintSet::l1_ball(1.0)?;
        let f_star = reference_optimum(&p, &set, 20_000)?.value;
        let w0 = set.origin_vertex(p.d())?.to_dense(p.d());
        let c = RateConstants::for_problem(&p, &set, &w0, f_star)?;
        let sched = Schedule::for_problem(SolverKind::Sfw, p.n(), 1)?;
        let mut st = SolverState::new(&p, &set, SolverKind::Sfw, rng.random())?;
        for _ in 0..2000 {
            let prev = st.w();
            let eps_prev = p.objective(&prev)? - f_star;
            st.step(&p, &set, &sched, 1)?;
            let gamma = sched.step_size(st.t())?.gamma;
            let h = h_error(st.alpha(), &p.grad_table(&prev)?)?;
            let eps = p.objective(&st.w())? - f_star;
            tally.record(one_step_bound(eps_prev, gamma, &c, h) - eps);
        }
    }
    Ok(tally.finish("one_step_descent", 1e-9))
}

fn recurrence_domination() -> Result<CheckResult> {
    let mut tally = Tally::new();
    for rho in [0.5, 0.9, 0.99] {
        for k in [0.1, 1.0, 10.0] {
            for u0 in [0.0, 1.0, 100.0] {
                let p = RecurrenceParams::new(rho, k, u0)?;
                let u = recurrence_worst_case(&p, 10_000)?;
                for (t, v) in u.iter().enumerate().skip(2) {
                    let b = lemma3_bound(&p, t)?;
                    tally.record(b - v + 1e-12 * b.abs());
                }
            }
        }
    }
    Ok(tally.finish("recurrence_domination", 0.0))
}

fn series_constants() -> Result<CheckResult> {
    let mut tally = Tally::new();
    for n in 2..=64usize {
        let nf = n as f64;
        for t in [10, 100, 1000, 10_000] {
            let (b, c) = taylor_constants(n, t)?;
            tally.record(16.0 * nf.powi(3) - b);
            tally.record(nf * nf - c);
        }
    }
    Ok(tally.finish("series_constants", 0.0))
}

fn lp_smoothness(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for loss in [LossKind::Logistic, LossKind::Squared, LossKind::GemanMcClure] {
        for _ in 0..30 {
            let p = random_problem(rng, 1..15, 1..6, loss)?;
            let ball = ConstraintSet::l1_ball(1.0)?;
            let mut draw = || ball.project(&(0..p.d()).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>());
            let (u, v) = (draw(), draw());
            let gu = p.grad_table(&u)?;
            let gv = p.grad_table(&v)?;
            let xu = p.x().mul_vec(&u)?;
            let xv = p.x().mul_vec(&v)?;
            let dg: Vec<f64> = gu.iter().zip(&gv).map(|(a, b)| a - b).collect();
            let dx: Vec<f64> = xu.iter().zip(&xv).map(|(a, b)| a - b).collect();
            for norm in Norm::ALL {
                tally.record(p.smoothness() / p.n() as f64 * norm.of(&dx) - norm.of(&dg));
            }
        }
    }
    Ok(tally.finish("lp_smoothness", 1e-12))
}

fn sparse_dense_agreement(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for _ in 0..5 {
        let sparse = random_problem(rng, 5..40, 2..12, LossKind::Logistic)?;
        let dense = sparse.with_matrix(sparse.x().to_dense())?;
        let set = ConstraintSet::l1_ball(2.0)?;
        let cfg = RunConfig::new(SolverKind::Sfw, 2, 50 * sparse.n() as u64, rng.random());
        let a = run_solver(&sparse, &set, &cfg)?;
        let b = run_solver(&dense, &set, &cfg)?;
        let diff = a.final_w.iter().zip(&b.final_w).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        tally.record(1e-12 - diff);
    }
    Ok(tally.finish("sparse_dense_agreement", 0.0))
}

fn oracle_optimality(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for _ in 0..100 {
        let d = rng.random_range(1..=10);
        let radius = rng.random_range(0.1..5.0);
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for set in [ConstraintSet::l1_ball(radius)?, ConstraintSet::simplex(radius)?, ConstraintSet::linf_ball(radius)?] {
            let best = set.vertices(d)?.iter().map(|v| v.dot(&r)).fold(f64::INFINITY, f64::min);
            tally.record(1e-12 - (set.lmo(&r)?.dot(&r) - best).abs());
        }
    }
    Ok(tally.finish("oracle_optimality", 0.0))
}

fn kappa_identities(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut tally = Tally::new();
    for n in 1..6 {
        let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        tally.record(-(kappa(&DesignMatrix::from_dense_rows(&eye)?)? - 1.0).abs());
        let ones = vec![vec![1.0; 3]; n];
        tally.record(-(kappa(&DesignMatrix::from_dense_rows(&ones)?)? - n as f64).abs());
    }
    let set = ConstraintSet::l1_ball(1.0)?;
    for _ in 0..20 {
        let p = random_problem(rng, 1..10, 1..6, LossKind::Squared)?;
        let (Ok(k), Ok(d1), Ok(dinf)) = (kappa(p.x()), set.diameter(p.x(), Norm::L1), set.diameter(p.x(), Norm::Linf))
        else {
            continue;
        };
        tally.record(-(d1 / dinf - k).abs());
    }
    Ok(tally.finish("kappa_identities", 0.0))
}

fn wrap(name: &'static str, r: Result<CheckResult>) -> CheckResult {
    r.unwrap_or_else(|e| CheckResult {
        name,
        passed: false,
        cases: 0,
        worst_slack: f64::NEG_INFINITY,
        detail: Some(e.to_string()),
    })
}

/// Runs the full battery with problems drawn from `seed`.
pub fn run_battery(seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        wrap("gap_discrepancy", gap_discrepancy(&mut rng)),
        wrap("table_error_expectation", table_error_expectation(&mut rng)),
        wrap("one_step_descent", one_step_descent(&mut rng)),
        wrap("recurrence_domination", recurrence_domination()),
        wrap("series_constants", series_constants()),
        wrap("lp_smoothness", lp_smoothness(&mut rng)),
        wrap("sparse_dense_agreement", sparse_dense_agreement(&mut rng)),
        wrap("oracle_optimality", oracle_optimality(&mut rng)),
        wrap("kappa_identities", kappa_identities(&mut rng)),
    ];
    Report { schema_version: crate::bench::SCHEMA_VERSION, seed, passed: checks.iter().all(|c| c.passed), checks }
}
