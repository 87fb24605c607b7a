//! Gaps, gradient-table error, and the scalar bounds used to check runs
//! against the convergence analysis.

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSet, Norm};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::solvers::{SolverState, FEASIBILITY_TOL};

/// `||alpha - grad||_1`.
pub fn h_error(alpha: &[f64], grad: &[f64]) -> Result<f64> {
    if alpha.len() != grad.len() {
        return Err(Error::usage(format!("length mismatch: {} vs {}", alpha.len(), grad.len())));
    }
    Ok(alpha.iter().zip(grad).map(|(a, g)| (a - g).abs()).sum())
}

/// `max_{s in C} <r, w - s>` for a given direction `r`.
pub fn stochastic_gap(set: &ConstraintSet, r: &[f64], w: &[f64]) -> Result<f64> {
    if r.len() != w.len() {
        return Err(Error::usage(format!("length mismatch: {} vs {}", r.len(), w.len())));
    }
    let s = set.lmo(r)?;
    let rw: f64 = r.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok(rw - s.dot(r))
}

/// The Frank-Wolfe gap `max_{s in C} <grad f(Xw), X(w - s)>`.
pub fn exact_gap(problem: &Problem, set: &ConstraintSet, w: &[f64]) -> Result<f64> {
    let grad = problem.grad_table(w)?;
    exact_gap_from_table(problem, set, w, &grad)
}

/// [`exact_gap`] with the gradient table already evaluated at `w`.
pub fn exact_gap_from_table(problem: &Problem, set: &ConstraintSet, w: &[f64], grad: &[f64]) -> Result<f64> {
    if w.len() != problem.d() {
        return Err(Error::usage(format!("w has length {}, expected {}", w.len(), problem.d())));
    }
    if !set.contains(w, FEASIBILITY_TOL) {
        return Err(Error::usage(format!("gap requested at a point outside {set}")));
    }
    let r = problem.x().tmul_vec(grad)?;
    stochastic_gap(set, &r, w)
}

/// Upper bound on `|g_t - g_hat_t|`: `D_inf * H_t`.
pub fn gap_discrepancy_bound(d_inf: f64, h: f64) -> f64 {
    d_inf * h
}

/// Exact `E[H_t]` over a unit batch drawn uniformly from the state's `n`
/// samples, at the state's current `alpha` and `w`.
pub fn expected_h_enumeration(state: &SolverState, problem: &Problem) -> Result<f64> {
    let grad = problem.grad_table(&state.w())?;
    expected_h_after_refresh(state.alpha(), &grad)
}

/// Average over `i` of `||alpha' - grad||_1`, where `alpha'` is `alpha` with
/// coordinate `i` replaced by `grad_i`. O(n): each choice removes exactly one
/// term from the full error.
pub fn expected_h_after_refresh(alpha: &[f64], grad: &[f64]) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::usage("empty gradient table"));
    }
    let diffs: Vec<f64> = alpha.iter().zip(grad).map(|(a, g)| (a - g).abs()).collect();
    let total = h_error(alpha, grad)?;
    let sum: f64 = diffs.iter().map(|d| total - d).sum();
    Ok(sum / alpha.len() as f64)
}

/// Right-hand side of the one-step suboptimality bound:
/// `(1 - gamma) eps_prev + gamma^2 L D_2^2 / (2n) + gamma D_inf H`.
pub fn one_step_bound(eps_prev: f64, gamma: f64, c: &RateConstants, h: f64) -> f64 {
    (1.0 - gamma) * eps_prev + gamma * gamma * c.l * c.d2 * c.d2 / (2.0 * c.n) + gamma * c.d_inf * h
}

/// Parameters of the scalar recurrence `u_t <= rho (u_{t-1} + K / (t + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceParams {
    pub rho: f64,
    pub k: f64,
    pub u0: f64,
}

impl RecurrenceParams {
    pub fn new(rho: f64, k: f64, u0: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) || !(k > 0.0 && k.is_finite()) || !(u0 >= 0.0 && u0.is_finite()) {
            return Err(Error::usage(format!("need 0 < rho < 1, K > 0, u0 >= 0 (got {rho}, {k}, {u0})")));
        }
        Ok(Self { rho, k, u0 })
    }

    /// The parameters governing `E[H_t]` for unit-batch SFW:
    /// `rho = 1 - 1/n`, `K = 2 L D_1 / n`, `u0 = H_0`.
    pub fn for_table_error(n: usize, l: f64, d1: f64, h0: f64) -> Result<Self> {
        let n = n as f64;
        Self::new(1.0 - 1.0 / n, 2.0 * l * d1 / n, h0)
    }
}

/// `u_0, ..., u_{t_max}` with the recurrence taken as an equality.
pub fn recurrence_worst_case(p: &RecurrenceParams, t_max: usize) -> Result<Vec<f64>> {
    if t_max < 2 {
        return Err(Error::usage("recurrence horizon must be at least 2"));
    }
    let mut u = Vec::with_capacity(t_max + 1);
    u.push(p.u0);
    for t in 1..=t_max {
        let prev = u[t - 1];
        u.push(p.rho * (prev + p.k / (t as f64 + 1.0)));
    }
    Ok(u)
}

/// `K (rho / (1 - rho) * 2 / (t + 2) + rho^{t/2} ln t) + rho^t u0`.
pub fn lemma3_bound(p: &RecurrenceParams, t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::usage("bound holds for t >= 2"));
    }
    let tf = t as f64;
    let ln_rho = p.rho.ln();
    let half = (0.5 * tf * ln_rho).exp();
    let full = (tf * ln_rho).exp();
    Ok(p.k * (p.rho / (1.0 - p.rho) * 2.0 / (tf + 2.0) + half * tf.ln()) + full * p.u0)
}

/// Partial sums `B_t = sum (k+1) rho^{k/2} ln k` and `C_t = sum (k+1) rho^k`
/// over `k = 1..=t`, with `rho = 1 - 1/n`.
pub fn taylor_constants(n: usize, t: usize) -> Result<(f64, f64)> {
    if n < 2 || t < 1 {
        return Err(Error::usage("need n >= 2 and t >= 1"));
    }
    let rho = 1.0 - 1.0 / n as f64;
    let sq = rho.sqrt();
    let (mut b, mut c) = (0.0, 0.0);
    let (mut pow_half, mut pow_full) = (1.0, 1.0);
    for k in 1..=t {
        pow_half *= sq;
        pow_full *= rho;
        let kf = k as f64;
        b += (kf + 1.0) * pow_half * kf.ln();
        c += (kf + 1.0) * pow_full;
    }
    Ok((b, c))
}

/// Constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub l: f64,
    pub d1: f64,
    pub d2: f64,
    pub d_inf: f64,
    pub n: f64,
    /// `||alpha_0 - grad f(X w_0)||_1`
    pub h0: f64,
    /// `f(X w_0) - f_star`
    pub eps0: f64,
}

impl RateConstants {
    pub fn new(l: f64, d1: f64, d2: f64, d_inf: f64, n: usize, h0: f64, eps0: f64) -> Result<Self> {
        let vals = [l, d1, d2, d_inf, h0, eps0];
        if n == 0 || vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::usage("rate constants must be finite and non-negative, n >= 1"));
        }
        Ok(Self { l, d1, d2, d_inf, n: n as f64, h0, eps0 })
    }

    /// Constants for a problem started at `w0` with `alpha_0 = 0`, measured
    /// against the optimal value `f_star`.
    pub fn for_problem(problem: &Problem, set: &ConstraintSet, w0: &[f64], f_star: f64) -> Result<Self> {
        let x = problem.x();
        let h0 = Norm::L1.of(&problem.grad_table(w0)?);
        let eps0 = (problem.objective(w0)? - f_star).max(0.0);
        Self::new(
            problem.smoothness(),
            set.diameter(x, Norm::L1)?,
            set.diameter(x, Norm::L2)?,
            set.diameter(x, Norm::Linf)?,
            problem.n(),
            h0,
            eps0,
        )
    }
}

/// Expected suboptimality bound for unit-batch SFW with `gamma_t = 2/(t+2)`.
pub fn theorem1_bound(c: &RateConstants, t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::usage("bound holds for t >= 2"));
    }
    let tf = t as f64;
    let denom = (tf + 1.0) * (tf + 2.0);
    let lead = 2.0 * c.l * ((c.d2 * c.d2 + 4.0 * (c.n - 1.0) * c.d1 * c.d_inf) / c.n) * tf / denom;
    let tail = (2.0 * c.eps0 + (2.0 * c.d_inf * c.h0 + 64.0 * c.l * c.d1 * c.d_inf) * c.n * c.n) / denom;
    Ok(lead + tail)
}

/// Deterministic FW rate `2 L D_2^2 / t`.
pub fn fw_rate_bound(l: f64, d2: f64, t: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::usage("rate holds for t >= 1"));
    }
    Ok(2.0 * l * d2 * d2 / t as f64)
}
