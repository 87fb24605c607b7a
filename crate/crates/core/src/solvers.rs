//! The four iterative methods and the run loop that drives them.
//!
//! All methods share one state layout: the iterate `w`, a per-sample table
//! `alpha` standing in for `grad f(Xw)`, and the aggregated direction
//! `r = X^T alpha` that feeds the linear minimization oracle. They differ only
//! in how `alpha` is refreshed and in their step-size schedules:
//!
//! | kind       | refresh of sampled `alpha_i`                          | step `gamma_t`                        |
//! |------------|-------------------------------------------------------|---------------------------------------|
//! | `sfw`      | `f_i'(x_i^T w_{t-1}) / n`                             | `2 / (t + 2)`                         |
//! | `fw`       | every coordinate, exact gradient                      | `2 / (t + 2)`                         |
//! | `mokhtari` | `(1 - rho_t) alpha_i + rho_t f_i'(x_i^T w_{t-1})`     | `1 / (t + 1)`                         |
//! | `lufreund` | `f_i'(sigma_i) / n`, `sigma` averaged toward `X s_t`  | `2(2 n_b + t) / ((t + 1)(4 n_b + t + 1))` |
//!
//! `lufreund` calls the oracle on the previous direction `r_{t-1}` before
//! sampling. One iteration costs `b` derivative evaluations (`n` for `fw`)
//! and one oracle call.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintKind, ConstraintSet, Norm, VertexStep};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::numkit::{ArgmaxTracker, ScaledVector};
use crate::problem::Problem;

/// Tolerance for `r = X^T alpha`, relative to `1 + ||alpha||_1 max|X|`.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Tolerance on the membership residual of `w`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sfw,
    Fw,
    Mokhtari,
    LuFreund,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Sfw, SolverKind::Fw, SolverKind::Mokhtari, SolverKind::LuFreund];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sfw => "sfw",
            SolverKind::Fw => "fw",
            SolverKind::Mokhtari => "mokhtari",
            SolverKind::LuFreund => "lufreund",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sfw" => Ok(SolverKind::Sfw),
            "fw" => Ok(SolverKind::Fw),
            "mokhtari" => Ok(SolverKind::Mokhtari),
            "lufreund" => Ok(SolverKind::LuFreund),
            other => Err(Error::usage(format!("unknown solver '{other}' (sfw|fw|mokhtari|lufreund)"))),
        }
    }
}

/// Step sizes for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub gamma: f64,
    /// `rho_t` for mokhtari, `delta_t` for lufreund.
    pub aux: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    kind: SolverKind,
    n_batches: usize,
}

impl Schedule {
    pub fn new(kind: SolverKind, n_batches: usize) -> Result<Self> {
        if n_batches == 0 {
            return Err(Error::usage("batch count must be at least 1"));
        }
        Ok(Self { kind, n_batches })
    }

    /// Schedule for `n` samples split into batches of size `b` (`n_b = floor(n / b)`).
    pub fn for_problem(kind: SolverKind, n: usize, b: usize) -> Result<Self> {
        if b == 0 || b > n {
            return Err(Error::usage(format!("batch size {b} outside [1, {n}]")));
        }
        Self::new(kind, n / b)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn n_batches(&self) -> usize {
        self.n_batches
    }

    pub fn step_size(&self, t: u64) -> Result<StepSizes> {
        if t == 0 {
            return Err(Error::usage("step sizes are defined for t >= 1"));
        }
        let t = t as f64;
        Ok(match self.kind {
            SolverKind::Sfw | SolverKind::Fw => StepSizes { gamma: 2.0 / (t + 2.0), aux: None },
            SolverKind::Mokhtari => StepSizes {
                gamma: 1.0 / (t + 1.0),
                aux: Some((t + 1.0).powf(-2.0 / 3.0)),
            },
            SolverKind::LuFreund => {
                let nb = self.n_batches as f64;
                StepSizes {
                    gamma: 2.0 * (2.0 * nb + t) / ((t + 1.0) * (4.0 * nb + t + 1.0)),
                    aux: Some(2.0 * nb / (2.0 * nb + t + 1.0)),
                }
            }
        })
    }
}

/// `b` distinct indices from `0..n`, uniform over subsets.
pub fn sample_batch<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, b: usize) -> Result<Vec<usize>> {
    if b == 0 || b > n {
        return Err(Error::usage(format!("cannot sample {b} distinct indices out of {n}")));
    }
    Ok(rand::seq::index::sample(rng, n, b).into_vec())
}

/// Mutable state of one solver run.
#[derive(Debug, Clone)]
pub struct SolverState {
    kind: SolverKind,
    w: ScaledVector,
    alpha: Vec<f64>,
    r: Vec<f64>,
    tracker: Option<ArgmaxTracker>,
    /// `<r, w.raw>`, so that `<r, w> = w.scale * rw` is O(1).
    rw: f64,
    sigma: Option<Vec<f64>>,
    t: u64,
    grad_calls: u64,
    rng: ChaCha8Rng,
    last_gap: f64,
}

impl SolverState {
    /// Fresh state at the default start: the oracle's vertex for `r = 0`,
    /// with `alpha_0 = 0` and `r_0 = 0`.
    pub fn new(problem: &Problem, set: &ConstraintSet, kind: SolverKind, seed: u64) -> Result<Self> {
        let w0 = set.origin_vertex(problem.d())?.to_dense(problem.d());
        Self::with_start(problem, set, kind, seed, w0)
    }

    pub fn with_start(
        problem: &Problem,
        set: &ConstraintSet,
        kind: SolverKind,
        seed: u64,
        w0: Vec<f64>,
    ) -> Result<Self> {
        if w0.len() != problem.d() {
            return Err(Error::usage(format!("start point has length {}, expected {}", w0.len(), problem.d())));
        }
        if w0.iter().any(|v| !v.is_finite()) || !set.contains(&w0, FEASIBILITY_TOL) {
            return Err(Error::usage(format!("start point is not in {set}")));
        }
        let sigma = match kind {
            SolverKind::LuFreund => Some(problem.x().mul_vec(&w0)?),
            _ => None,
        };
        let d = problem.d();
        let r = vec![0.0; d];
        let tracker = (set.kind() == ConstraintKind::L1Ball).then(|| ArgmaxTracker::new(&r));
        let mut state = Self {
            kind,
            w: ScaledVector::from_dense(w0),
            alpha: vec![0.0; problem.n()],
            r,
            tracker,
            rw: 0.0,
            sigma,
            t: 0,
            grad_calls: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_gap: 0.0,
        };
        state.last_gap = state.stochastic_gap(set)?;
        Ok(state)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn grad_calls(&self) -> u64 {
        self.grad_calls
    }

    /// The iterate `w_t`, materialized.
    pub fn w(&self) -> Vec<f64> {
        self.w.to_dense()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    /// `g_hat_t = max_s <alpha_t, X(w_{t-1} - s)>` as recorded by the last
    /// step (for `t = 0`, evaluated at `w_0`).
    pub fn last_stochastic_gap(&self) -> f64 {
        self.last_gap
    }

    /// `<r, w>` for the current `r` and `w`.
    pub fn r_dot_w(&self) -> f64 {
        self.w.scale() * self.rw
    }

    /// `max_s <r_t, w_t - s>` for the state as it is now. O(1) for the l1
    /// ball, one oracle call otherwise.
    pub fn stochastic_gap(&mut self, set: &ConstraintSet) -> Result<f64> {
        let s = self.lmo(set)?;
        Ok(self.r_dot_w() - s.dot(&self.r))
    }

    /// `||r - X^T alpha||_inf`.
    pub fn consistency_error(&self, problem: &Problem) -> Result<f64> {
        let exact = problem.x().tmul_vec(&self.alpha)?;
        Ok(self.r.iter().zip(&exact).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// The admissible drift in `r` for the current `alpha`.
    pub fn consistency_tolerance(&self, problem: &Problem) -> f64 {
        CONSISTENCY_TOL * (1.0 + Norm::L1.of(&self.alpha) * problem.x().max_abs())
    }

    /// Checks feasibility of `w`, then recomputes `r` (and the cached
    /// `<r, w>`) from scratch if its drift exceeds half the tolerance.
    pub fn resync(&mut self, problem: &Problem, set: &ConstraintSet) -> Result<()> {
        let w = self.w();
        if !set.contains(&w, FEASIBILITY_TOL) {
            return Err(Error::Invariant(format!(
                "iterate left {set} at t = {} (violation {:.3e})",
                self.t,
                set.violation(&w)
            )));
        }
        if self.consistency_error(problem)? > 0.5 * self.consistency_tolerance(problem) {
            self.r = problem.x().tmul_vec(&self.alpha)?;
            if let Some(t) = self.tracker.as_mut() {
                *t = ArgmaxTracker::new(&self.r);
            }
        }
        self.rw = self.r.iter().zip(self.w.raw()).map(|(a, b)| a * b).sum();
        Ok(())
    }

    fn lmo(&mut self, set: &ConstraintSet) -> Result<VertexStep> {
        match self.tracker.as_mut() {
            Some(t) => set.lmo_tracked(t),
            None => set.lmo(&self.r),
        }
    }

    fn check_batch(&self, problem: &Problem, batch: &[usize]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::usage("empty batch"));
        }
        if let Some(&i) = batch.iter().find(|&&i| i >= problem.n()) {
            return Err(Error::usage(format!("batch index {i} out of range (n = {})", problem.n())));
        }
        Ok(())
    }

    fn check_schedule(&self, schedule: &Schedule, expect: SolverKind) -> Result<()> {
        if self.kind != expect || schedule.kind() != expect {
            return Err(Error::usage(format!(
                "{expect} step on a {} state with a {} schedule",
                self.kind,
                schedule.kind()
            )));
        }
        Ok(())
    }

    /// Sets `alpha_i` to `value` and pushes the change into `r` and the
    /// cached `<r, w>`. `row_raw` is `x_i^T w.raw`.
    fn refresh(&mut self, problem: &Problem, i: usize, value: f64, row_raw: f64) {
        let delta = value - self.alpha[i];
        if delta == 0.0 {
            return;
        }
        self.alpha[i] = value;
        problem.x().scatter_axpy_raw(&mut self.r, delta, i, self.tracker.as_mut());
        self.rw += delta * row_raw;
    }

    /// `w <- (1 - gamma) w + gamma s`, O(|supp s|).
    fn move_toward(&mut self, s: &VertexStep, gamma: f64) {
        if let Some(f) = self.w.shrink(1.0 - gamma) {
            self.rw *= f;
        }
        for &(j, v) in s.support() {
            let raw_delta = self.w.add(j, gamma * v);
            self.rw += self.r[j] * raw_delta;
        }
    }

    /// Oracle on the current `r`, record the stochastic gap at `w_{t-1}`,
    /// then take the convex step.
    fn finish_iteration(&mut self, set: &ConstraintSet, gamma: f64) -> Result<()> {
        let s = self.lmo(set)?;
        self.last_gap = self.r_dot_w() - s.dot(&self.r);
        self.move_toward(&s, gamma);
        Ok(())
    }

    /// One SFW iteration on the given batch: refresh `alpha_i = f_i'(x_i^T w) / n`
    /// for every sampled `i`, then one oracle call and one convex step.
    pub fn sfw_step(&mut self, problem: &Problem, set: &ConstraintSet, schedule: &Schedule, batch: &[usize]) -> Result<()> {
        self.check_schedule(schedule, SolverKind::Sfw)?;
        self.check_batch(problem, batch)?;
        let t = self.t + 1;
        let gamma = schedule.step_size(t)?.gamma;
        let inv_n = 1.0 / problem.n() as f64;
        for &i in batch {
            let row_raw = problem.x().row_dot_raw(i, self.w.raw());
            let z = self.w.scale() * row_raw;
            let value = inv_n * problem.loss().deriv(i, z);
            self.refresh(problem, i, value, row_raw);
        }
        self.finish_iteration(set, gamma)?;
        self.t = t;
        self.grad_calls += batch.len() as u64;
        Ok(())
    }

    /// One deterministic FW iteration: `alpha = grad f(Xw)`, `r = X^T alpha`.
    pub fn fw_step(&mut self, problem: &Problem, set: &ConstraintSet, schedule: &Schedule) -> Result<()> {
        self.check_schedule(schedule, SolverKind::Fw)?;
        let t = self.t + 1;
        let gamma = schedule.step_size(t)?.gamma;
        let w = self.w();
        self.alpha = problem.grad_table(&w)?;
        self.r = problem.x().tmul_vec(&self.alpha)?;
        if let Some(tr) = self.tracker.as_mut() {
            *tr = ArgmaxTracker::new(&self.r);
        }
        self.rw = self.r.iter().zip(self.w.raw()).map(|(a, b)| a * b).sum();
        self.finish_iteration(set, gamma)?;
        self.t = t;
        self.grad_calls += problem.n() as u64;
        Ok(())
    }

    /// Momentum refresh on the sampled coordinates only, with the
    /// un-normalized derivative `f_i'` (no `1/n`).
    pub fn mokhtari_step(&mut self, problem: &Problem, set: &ConstraintSet, schedule: &Schedule, batch: &[usize]) -> Result<()> {
        self.check_schedule(schedule, SolverKind::Mokhtari)?;
        self.check_batch(problem, batch)?;
        let t = self.t + 1;
        let steps = schedule.step_size(t)?;
        let rho = steps.aux.expect("mokhtari schedule carries rho");
        for &i in batch {
            let row_raw = problem.x().row_dot_raw(i, self.w.raw());
            let z = self.w.scale() * row_raw;
            let value = (1.0 - rho) * self.alpha[i] + rho * problem.loss().deriv(i, z);
            self.refresh(problem, i, value, row_raw);
        }
        self.finish_iteration(set, steps.gamma)?;
        self.t = t;
        self.grad_calls += batch.len() as u64;
        Ok(())
    }

    /// Oracle on `r_{t-1}` first; then for each sampled `i` average
    /// `sigma_i` toward `x_i^T s_t` and set `alpha_i = f_i'(sigma_i) / n`.
    pub fn lufreund_step(&mut self, problem: &Problem, set: &ConstraintSet, schedule: &Schedule, batch: &[usize]) -> Result<()> {
        self.check_schedule(schedule, SolverKind::LuFreund)?;
        self.check_batch(problem, batch)?;
        let t = self.t + 1;
        let steps = schedule.step_size(t)?;
        let delta = steps.aux.expect("lufreund schedule carries delta");
        let s = self.lmo(set)?;
        let inv_n = 1.0 / problem.n() as f64;
        for &i in batch {
            let xs = problem.x().row_dot_support(i, s.support());
            let sigma = self.sigma.as_mut().expect("lufreund state carries sigma");
            sigma[i] = (1.0 - delta) * sigma[i] + delta * xs;
            let value = inv_n * problem.loss().deriv(i, sigma[i]);
            let row_raw = problem.x().row_dot_raw(i, self.w.raw());
            self.refresh(problem, i, value, row_raw);
        }
        // the gap estimate uses the refreshed r_t, not the r_{t-1} that chose s_t
        let s_hat = self.lmo(set)?;
        self.last_gap = self.r_dot_w() - s_hat.dot(&self.r);
        self.move_toward(&s, steps.gamma);
        self.t = t;
        self.grad_calls += batch.len() as u64;
        Ok(())
    }

    /// Samples a batch of size `b` from the state's generator and runs one
    /// iteration of the state's method.
    pub fn step(&mut self, problem: &Problem, set: &ConstraintSet, schedule: &Schedule, b: usize) -> Result<()> {
        if self.kind == SolverKind::Fw {
            return self.fw_step(problem, set, schedule);
        }
        let batch = sample_batch(&mut self.rng, problem.n(), b)?;
        match self.kind {
            SolverKind::Sfw => self.sfw_step(problem, set, schedule, &batch),
            SolverKind::Mokhtari => self.mokhtari_step(problem, set, schedule, &batch),
            SolverKind::LuFreund => self.lufreund_step(problem, set, schedule, &batch),
            SolverKind::Fw => unreachable!(),
        }
    }
}

/// Settings of a single solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: SolverKind,
    pub batch_size: usize,
    /// Maximum number of `f_i'` evaluations.
    pub grad_budget: u64,
    pub seed: u64,
    /// Emit a trace row every this many iterations (plus t = 0 and the last).
    pub trace_every: u64,
    /// Stop once the stochastic gap drops below this value.
    pub gap_stop: Option<f64>,
    /// Also evaluate the exact gap and `H_t` at checkpoints (O(nnz) each).
    pub exact_diagnostics: bool,
    /// Starting point; the oracle's vertex for `r = 0` when absent.
    pub start: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(kind: SolverKind, batch_size: usize, grad_budget: u64, seed: u64) -> Self {
        Self {
            kind,
            batch_size,
            grad_budget,
            seed,
            trace_every: 1,
            gap_stop: None,
            exact_diagnostics: false,
            start: None,
        }
    }
}

/// One checkpoint of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub grad_calls: u64,
    /// `f(X w_t)`
    pub objective: f64,
    /// `max_s <alpha_t, X(w_{t-1} - s)>`
    pub stochastic_gap: f64,
    /// `max_s <grad f(X w_{t-1}), X(w_{t-1} - s)>`
    pub exact_gap: Option<f64>,
    /// `||alpha_t - grad f(X w_{t-1})||_1`
    pub h_error: Option<f64>,
    /// Solver time since the start of the run, diagnostics excluded.
    pub wall_nanos: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<TraceRow>,
    pub final_w: Vec<f64>,
    pub stopped_by_gap: bool,
}

/// Runs one solver until the gradient budget is spent or the stochastic gap
/// falls below the configured threshold. Deterministic for a fixed config.
pub fn run_solver(problem: &Problem, set: &ConstraintSet, config: &RunConfig) -> Result<RunOutput> {
    let n = problem.n();
    let b = if config.kind == SolverKind::Fw { n } else { config.batch_size };
    let schedule = Schedule::for_problem(config.kind, n, b)?;
    if config.trace_every == 0 {
        return Err(Error::usage("trace cadence must be at least 1"));
    }
    let mut state = match &config.start {
        Some(w0) => SolverState::with_start(problem, set, config.kind, config.seed, w0.clone())?,
        None => SolverState::new(problem, set, config.kind, config.seed)?,
    };
    let cost = b as u64;
    let mut rows = Vec::new();
    let mut solver_nanos: u64 = 0;
    // w_{t-1}, kept only when exact diagnostics are requested
    let mut prev_w = config.exact_diagnostics.then(|| state.w());
    rows.push(checkpoint(problem, set, &mut state, prev_w.as_deref(), solver_nanos)?);

    let mut stopped_by_gap = false;
    while state.grad_calls() + cost <= config.grad_budget {
        if let Some(p) = prev_w.as_mut() {
            *p = state.w();
        }
        let start = Instant::now();
        state.step(problem, set, &schedule, b)?;
        solver_nanos += start.elapsed().as_nanos() as u64;

        stopped_by_gap = config.gap_stop.is_some_and(|th| state.last_stochastic_gap() < th);
        let last = stopped_by_gap || state.grad_calls() + cost > config.grad_budget;
        if last || state.t() % config.trace_every == 0 {
            rows.push(checkpoint(problem, set, &mut state, prev_w.as_deref(), solver_nanos)?);
        }
        if stopped_by_gap {
            break;
        }
    }
    Ok(RunOutput { rows, final_w: state.w(), stopped_by_gap })
}

fn checkpoint(
    problem: &Problem,
    set: &ConstraintSet,
    state: &mut SolverState,
    prev_w: Option<&[f64]>,
    wall_nanos: u64,
) -> Result<TraceRow> {
    state.resync(problem, set)?;
    let w = state.w();
    let objective = problem.objective(&w)?;
    let (exact_gap, h_error) = match prev_w {
        Some(prev) => {
            let grad = problem.grad_table(prev)?;
            (
                Some(diagnostics::exact_gap_from_table(problem, set, prev, &grad)?),
                Some(diagnostics::h_error(state.alpha(), &grad)?),
            )
        }
        None => (None, None),
    };
    Ok(TraceRow {
        t: state.t(),
        grad_calls: state.grad_calls(),
        objective,
        stochastic_gap: state.last_stochastic_gap(),
        exact_gap,
        h_error,
        wall_nanos,
    })
}

/// A feasible point used as a stand-in for the minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub w: Vec<f64>,
    pub value: f64,
    /// Always true: the value is that of a computed feasible point.
    pub approximate: bool,
}

/// Approximates `min_{w in C} f(Xw)`.
///
/// Runs deterministic FW for `fw_grad_budget` derivative evaluations, then
/// polishes with accelerated projected gradient (with adaptive restart) from
/// the FW point. The better of the two points is returned. For non-convex
/// losses this is a stationary point, not necessarily a global minimizer.
pub fn reference_optimum(problem: &Problem, set: &ConstraintSet, fw_grad_budget: u64) -> Result<Reference> {
    let n = problem.n() as u64;
    let schedule = Schedule::for_problem(SolverKind::Fw, problem.n(), problem.n())?;
    let mut state = SolverState::new(problem, set, SolverKind::Fw, 0)?;
    while state.grad_calls() + n <= fw_grad_budget {
        state.fw_step(problem, set, &schedule)?;
    }
    let fw_w = set.project(&state.w());
    let fw_value = problem.objective(&fw_w)?;

    let (pg_w, pg_value) = projected_gradient(problem, set, fw_w.clone(), 20_000)?;
    let (w, value) = if pg_value < fw_value { (pg_w, pg_value) } else { (fw_w, fw_value) };
    Ok(Reference { w, value, approximate: true })
}

/// Largest singular value of `X`, by power iteration on `X^T X`.
fn spectral_norm(problem: &Problem) -> Result<f64> {
    let x = problem.x();
    let d = problem.d();
    let mut v: Vec<f64> = (0..d).map(|j| 1.0 + (j as f64 * 0.618).fract()).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let norm = Norm::L2.of(&v);
        if norm == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|a| *a /= norm);
        let xv = x.mul_vec(&v)?;
        let next = x.tmul_vec(&xv)?;
        let new_est = Norm::L2.of(&next).sqrt();
        v = next;
        if (new_est - est).abs() <= 1e-12 * new_est {
            est = new_est;
            break;
        }
        est = new_est;
    }
    Ok(est)
}

fn projected_gradient(problem: &Problem, set: &ConstraintSet, w0: Vec<f64>, iters: usize) -> Result<(Vec<f64>, f64)> {
    let sigma = spectral_norm(problem)?;
    let lip = problem.smoothness() / problem.n() as f64 * sigma * sigma * 1.01;
    if lip == 0.0 {
        let v = problem.objective(&w0)?;
        return Ok((w0, v));
    }
    let step = 1.0 / lip;
    let mut best = problem.objective(&w0)?;
    let mut best_w = w0.clone();
    let mut w = w0.clone();
    let mut y = w0;
    let mut momentum = 1.0f64;
    let mut prev_value = best;
    for _ in 0..iters {
        let g = problem.full_gradient(&y)?;
        let trial: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = set.project(&trial);
        let value = problem.objective(&next)?;
        if value > prev_value {
            // restart momentum
            momentum = 1.0;
            y = w.clone();
            continue;
        }
        let next_m = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_m;
        y = next.iter().zip(&w).map(|(a, b)| a + beta * (a - b)).collect();
        momentum = next_m;
        let moved = next.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        w = next;
        prev_value = value;
        if value < best {
            best = value;
            best_w = w.clone();
        }
        if moved <= 1e-15 * (1.0 + set.radius()) {
            break;
        }
    }
    Ok((best_w, best))
}
