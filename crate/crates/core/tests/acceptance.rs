//! Acceptance gate: one check per criterion, each printing a PASS/FAIL line.
//!
//! Reference quantities (losses, gradients, oracle calls, diameters, optima)
//! are recomputed here from their definitions with dense arithmetic and
//! brute-force enumeration rather than taken from the library.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sfwkit::bench::{relative_suboptimality, synth_dataset, SynthSpec, Task};
use sfwkit::constraints::kappa;
use sfwkit::diagnostics::{
    expected_h_enumeration, fw_rate_bound, lemma3_bound, recurrence_worst_case, taylor_constants, theorem1_bound,
    RateConstants, RecurrenceParams,
};
use sfwkit::solvers::{reference_optimum, run_solver};
use sfwkit::{
    ConstraintSet, DesignMatrix, LossKind, LossModel, Norm, Problem, RunConfig, Schedule, SolverKind, SolverState,
};

/// Dense re-implementation of the objective and its pieces.
mod oracle {
    use sfwkit::LossKind;

    #[derive(Clone)]
    pub struct Dense {
        pub x: Vec<Vec<f64>>,
        pub y: Vec<f64>,
        pub loss: LossKind,
    }

    pub fn value(loss: LossKind, y: f64, z: f64) -> f64 {
        match loss {
            LossKind::Logistic => {
                let m = -y * z;
                if m > 0.0 {
                    m + (-m).exp().ln_1p()
                } else {
                    m.exp().ln_1p()
                }
            }
            LossKind::Squared => 0.5 * (z - y) * (z - y),
            LossKind::GemanMcClure => {
                let u = z - y;
                u * u / (1.0 + u * u)
            }
        }
    }

    pub fn deriv(loss: LossKind, y: f64, z: f64) -> f64 {
        match loss {
            LossKind::Logistic => -y / (1.0 + (y * z).exp()),
            LossKind::Squared => z - y,
            LossKind::GemanMcClure => {
                let u = z - y;
                2.0 * u / ((1.0 + u * u) * (1.0 + u * u))
            }
        }
    }

    pub fn lipschitz(loss: LossKind) -> f64 {
        match loss {
            LossKind::Logistic => 0.25,
            LossKind::Squared => 1.0,
            LossKind::GemanMcClure => 2.0,
        }
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    impl Dense {
        pub fn n(&self) -> usize {
            self.x.len()
        }

        pub fn d(&self) -> usize {
            self.x[0].len()
        }

        pub fn xw(&self, w: &[f64]) -> Vec<f64> {
            self.x.iter().map(|row| dot(row, w)).collect()
        }

        pub fn xt(&self, a: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; self.d()];
            for (row, ai) in self.x.iter().zip(a) {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += ai * v;
                }
            }
            out
        }

        pub fn objective(&self, w: &[f64]) -> f64 {
            let z = self.xw(w);
            z.iter().zip(&self.y).map(|(&z, &y)| value(self.loss, y, z)).sum::<f64>() / self.n() as f64
        }

        /// `[grad f(Xw)]_i = f_i'(x_i^T w) / n`
        pub fn grad_table(&self, w: &[f64]) -> Vec<f64> {
            let n = self.n() as f64;
            self.xw(w).iter().zip(&self.y).map(|(&z, &y)| deriv(self.loss, y, z) / n).collect()
        }

        pub fn full_gradient(&self, w: &[f64]) -> Vec<f64> {
            self.xt(&self.grad_table(w))
        }
    }

    /// `+-radius e_j` in the order `+e_0, -e_0, +e_1, ...`.
    pub fn l1_vertices(d: usize, radius: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; d];
                v[j] = sign * radius;
                out.push(v);
            }
        }
        out
    }

    pub fn simplex_vertices(d: usize, radius: f64) -> Vec<Vec<f64>> {
        (0..d)
            .map(|j| {
                let mut v = vec![0.0; d];
                v[j] = radius;
                v
            })
            .collect()
    }

    pub fn box_vertices(d: usize, radius: f64) -> Vec<Vec<f64>> {
        (0..1usize << d)
            .map(|mask| (0..d).map(|j| if mask >> j & 1 == 1 { radius } else { -radius }).collect())
            .collect()
    }

    /// `min_v <v, r>` over a vertex list.
    pub fn min_linear(vertices: &[Vec<f64>], r: &[f64]) -> f64 {
        vertices.iter().map(|v| dot(v, r)).fold(f64::INFINITY, f64::min)
    }

    pub fn norm(v: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            v.iter().fold(0.0, |m, x| m.max(x.abs()))
        } else if p == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else {
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }

    /// `max_{u, v} ||X(u - v)||_p` over all vertex pairs.
    pub fn diameter(x: &Dense, vertices: &[Vec<f64>], p: f64) -> f64 {
        let images: Vec<Vec<f64>> = vertices.iter().map(|v| x.xw(v)).collect();
        let mut best = 0.0f64;
        for a in &images {
            for b in &images {
                let diff: Vec<f64> = a.iter().zip(b).map(|(s, t)| s - t).collect();
                best = best.max(norm(&diff, p));
            }
        }
        best
    }

    /// Euclidean projection onto `{w : ||w||_1 <= radius}` by bisection on the
    /// soft threshold.
    pub fn project_l1(v: &[f64], radius: f64) -> Vec<f64> {
        if norm(v, 1.0) <= radius {
            return v.to_vec();
        }
        let shrink = |th: f64| v.iter().map(|x| x.signum() * (x.abs() - th).max(0.0)).collect::<Vec<_>>();
        let (mut lo, mut hi) = (0.0, norm(v, f64::INFINITY));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm(&shrink(mid), 1.0) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        shrink(hi)
    }

    /// Minimum of a convex problem over the l1 ball by plain projected
    /// gradient with step `1 / L_f`, `L_f = (L/n) ||X||_F^2`.
    pub fn l1_minimum(x: &Dense, radius: f64, iters: usize) -> (Vec<f64>, f64) {
        let frob: f64 = x.x.iter().flatten().map(|v| v * v).sum();
        let step = x.n() as f64 / (lipschitz(x.loss) * frob);
        let mut w = vec![0.0; x.d()];
        let mut best = (w.clone(), x.objective(&w));
        for _ in 0..iters {
            let g = x.full_gradient(&w);
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            w = project_l1(&trial, radius);
            let f = x.objective(&w);
            if f < best.1 {
                best = (w.clone(), f);
            }
        }
        best
    }
}

use oracle::Dense;

fn library_problem(o: &Dense, sparse: bool) -> Problem {
    let x = DesignMatrix::from_dense_rows(&o.x).unwrap();
    let x = if sparse { x.to_csr() } else { x };
    Problem::new(x, LossModel::new(o.loss, o.y.clone()).unwrap()).unwrap()
}

/// Random problem with roughly 30% zero features.
fn random_dense(rng: &mut ChaCha8Rng, n: usize, d: usize, loss: LossKind) -> Dense {
    let x = (0..n)
        .map(|_| (0..d).map(|_| if rng.random_bool(0.7) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect())
        .collect();
    let y = (0..n)
        .map(|_| match loss {
            LossKind::Logistic => if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            _ => rng.random_range(-2.0..2.0),
        })
        .collect();
    Dense { x, y, loss }
}

/// The regression problem used for the rate checks: `n = 20`, `d = 5`,
/// Gaussian design, dense planted weights with l1 norm 3 (so the unit-ball
/// constraint is active), small Gaussian noise.
fn rate_problem() -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (n, d) = (20, 5);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let planted = [1.0, -0.8, 0.6, -0.4, 0.2];
    let y = x
        .iter()
        .map(|row| oracle::dot(row, &planted) + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Dense { x, y, loss: LossKind::Squared }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

// 1. |g_t - g_hat_t| <= D_inf H_t at every step of every solver.
fn gap_discrepancy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checks = 0u64;
    let mut worst = f64::INFINITY;
    for k in 0..20 {
        let loss = if k % 2 == 0 { LossKind::Logistic } else { LossKind::Squared };
        let (n, d) = (rng.random_range(5..=50), rng.random_range(2..=20));
        let o = random_dense(&mut rng, n, d, loss);
        let p = library_problem(&o, k % 3 == 0);
        let radius = rng.random_range(0.5..3.0);
        let set = ConstraintSet::l1_ball(radius).unwrap();
        let verts = oracle::l1_vertices(d, radius);
        let d_inf = oracle::diameter(&o, &verts, f64::INFINITY);
        for kind in SolverKind::ALL {
            let b = [1, 2, (n / 4).max(1)][k % 3];
            let sched = Schedule::for_problem(kind, n, b).unwrap();
            let mut st = SolverState::new(&p, &set, kind, rng.random()).unwrap();
            for _ in 0..300 {
                let prev = st.w();
                st.step(&p, &set, &sched, b).unwrap();
                let grad = o.grad_table(&prev);
                let r_true = o.xt(&grad);
                let g = oracle::dot(&r_true, &prev) - oracle::min_linear(&verts, &r_true);
                let h: f64 = st.alpha().iter().zip(&grad).map(|(a, b)| (a - b).abs()).sum();
                let g_hat = st.last_stochastic_gap();
                let r_hat = o.xt(st.alpha());
                let g_hat_oracle = oracle::dot(&r_hat, &prev) - oracle::min_linear(&verts, &r_hat);
                if (g_hat - g_hat_oracle).abs() > 1e-9 * (1.0 + g_hat_oracle.abs()) {
                    return outcome(false, format!("{kind}: recorded gap {g_hat} but alpha gives {g_hat_oracle}"));
                }
                let slack = d_inf * h + 1e-9 * (1.0 + g.abs()) - (g - g_hat).abs();
                worst = worst.min(slack);
                checks += 1;
            }
        }
    }
    outcome(worst >= 0.0, format!("{checks} checkpoints, min slack {worst:.3e}"))
}

// 2. Exact enumeration of one unit-batch refresh.
fn table_error_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = rng.random_range(2..=20);
        let loss = if k % 2 == 0 { LossKind::Logistic } else { LossKind::Squared };
        let o = random_dense(&mut rng, n, 4, loss);
        let p = library_problem(&o, false);
        let set = ConstraintSet::l1_ball(1.0).unwrap();
        let sched = Schedule::for_problem(SolverKind::Sfw, n, 1).unwrap();
        let mut st = SolverState::new(&p, &set, SolverKind::Sfw, rng.random()).unwrap();
        for _ in 0..rng.random_range(0..3 * n) {
            st.step(&p, &set, &sched, 1).unwrap();
        }
        let grad = o.grad_table(&st.w());
        let brute = (0..n)
            .map(|i| {
                let mut a = st.alpha().to_vec();
                a[i] = grad[i];
                a.iter().zip(&grad).map(|(x, g)| (x - g).abs()).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        let h: f64 = st.alpha().iter().zip(&grad).map(|(a, g)| (a - g).abs()).sum();
        let closed = (1.0 - 1.0 / n as f64) * h;
        let lib = expected_h_enumeration(&st, &p).unwrap();
        worst = worst.max((lib - closed).abs()).max((brute - closed).abs());
    }
    outcome(worst <= 1e-12, format!("100 states, max deviation {worst:.3e}"))
}

// 3. One-step suboptimality inequality for SFW's table and for random tables.
fn one_step_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut checks = 0u64;
    for k in 0..10 {
        let loss = if k % 2 == 0 { LossKind::Squared } else { LossKind::Logistic };
        let (n, d) = (rng.random_range(5..=30), rng.random_range(2..=8));
        let o = random_dense(&mut rng, n, d, loss);
        let p = library_problem(&o, false);
        let radius = 1.0;
        let set = ConstraintSet::l1_ball(radius).unwrap();
        let verts = oracle::l1_vertices(d, radius);
        let d2 = oracle::diameter(&o, &verts, 2.0);
        let d_inf = oracle::diameter(&o, &verts, f64::INFINITY);
        let l = oracle::lipschitz(loss);
        // any feasible comparator works for this inequality
        let (_, f_ref) = oracle::l1_minimum(&o, radius, 2000);
        let sched = Schedule::for_problem(SolverKind::Sfw, n, 1).unwrap();
        let mut st = SolverState::new(&p, &set, SolverKind::Sfw, rng.random()).unwrap();
        for t in 1..=10_000u64 {
            let prev = st.w();
            let eps_prev = o.objective(&prev) - f_ref;
            let grad = o.grad_table(&prev);
            let gamma = 2.0 / (t as f64 + 2.0);
            let rhs = |h: f64| (1.0 - gamma) * eps_prev + gamma * gamma * l * d2 * d2 / (2.0 * n as f64) + gamma * d_inf * h;

            st.step(&p, &set, &sched, 1).unwrap();
            let h: f64 = st.alpha().iter().zip(&grad).map(|(a, g)| (a - g).abs()).sum();
            worst = worst.min(rhs(h) - (o.objective(&st.w()) - f_ref));

            // the same step driven by a uniformly random table
            let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = o.xt(&alpha);
            let s = verts
                .iter()
                .min_by(|a, b| oracle::dot(a, &r).total_cmp(&oracle::dot(b, &r)))
                .unwrap();
            let w_next: Vec<f64> = prev.iter().zip(s).map(|(w, s)| (1.0 - gamma) * w + gamma * s).collect();
            let h_rand: f64 = alpha.iter().zip(&grad).map(|(a, g)| (a - g).abs()).sum();
            worst = worst.min(rhs(h_rand) - (o.objective(&w_next) - f_ref));
            checks += 2;
        }
    }
    outcome(worst >= -1e-9, format!("{checks} steps, min slack {worst:.3e}"))
}

// 4. Extremal recurrence against its closed-form bound.
fn recurrence_domination() -> Outcome {
    let mut violations = 0;
    let mut checks = 0;
    for rho in [0.5, 0.9, 0.99] {
        for k in [0.1, 1.0, 10.0] {
            for u0 in [0.0, 1.0, 100.0] {
                let p = RecurrenceParams::new(rho, k, u0).unwrap();
                let lib = recurrence_worst_case(&p, 10_000).unwrap();
                let mut u = u0;
                for t in 1..=10_000usize {
                    u = rho * (u + k / (t as f64 + 1.0));
                    if u != lib[t] {
                        return outcome(false, format!("recurrence differs at t = {t}"));
                    }
                    if t >= 2 {
                        let tf = t as f64;
                        let own = k * (rho / (1.0 - rho) * 2.0 / (tf + 2.0) + rho.powf(tf / 2.0) * tf.ln()) + rho.powf(tf) * u0;
                        let bound = lemma3_bound(&p, t).unwrap();
                        if (own - bound).abs() > 1e-12 * (1.0 + own) {
                            return outcome(false, format!("bound evaluation differs at t = {t}: {own} vs {bound}"));
                        }
                        checks += 1;
                        if u > bound + 1e-12 * bound {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("{checks} comparisons, {violations} violations"))
}

// 5. Series constants against their polynomial bounds.
fn series_bounds() -> Outcome {
    let mut violations = 0;
    for n in 2..=64usize {
        let rho = 1.0 - 1.0 / n as f64;
        for t in [10usize, 100, 1000, 10_000] {
            let (b, c) = taylor_constants(n, t).unwrap();
            let own_c: f64 = (1..=t).map(|k| (k as f64 + 1.0) * rho.powi(k as i32)).sum();
            let own_b: f64 = (1..=t).map(|k| (k as f64 + 1.0) * rho.powf(k as f64 / 2.0) * (k as f64).ln()).sum();
            if (own_c - c).abs() > 1e-9 * own_c || (own_b - b).abs() > 1e-9 * (1.0 + own_b) {
                return outcome(false, format!("partial sums differ at n = {n}, t = {t}"));
            }
            let nf = n as f64;
            violations += usize::from(b > 16.0 * nf.powi(3)) + usize::from(c > nf * nf);
        }
    }
    outcome(violations == 0, format!("252 (n, t) pairs, {violations} violations"))
}

/// Constants and optimum for the rate problem, from the oracle.
fn rate_setup() -> (Dense, Problem, ConstraintSet, RateConstants, f64) {
    let o = rate_problem();
    let p = library_problem(&o, false);
    let set = ConstraintSet::l1_ball(1.0).unwrap();
    let verts = oracle::l1_vertices(o.d(), 1.0);
    let (_, f_star) = oracle::l1_minimum(&o, 1.0, 200_000);
    let w0 = {
        let mut w = vec![0.0; o.d()];
        w[0] = -1.0;
        w
    };
    let h0: f64 = o.grad_table(&w0).iter().map(|g| g.abs()).sum();
    let c = RateConstants::new(
        1.0,
        oracle::diameter(&o, &verts, 1.0),
        oracle::diameter(&o, &verts, 2.0),
        oracle::diameter(&o, &verts, f64::INFINITY),
        o.n(),
        h0,
        o.objective(&w0) - f_star,
    )
    .unwrap();
    (o, p, set, c, f_star)
}

// 6. Mean SFW suboptimality over 200 seeds under the expected-value bound.
fn expected_rate() -> Outcome {
    let (o, p, set, c, f_star) = rate_setup();
    // the constants the library reports must match the oracle's
    let w0 = set.origin_vertex(p.d()).unwrap().to_dense(p.d());
    let lib = RateConstants::for_problem(&p, &set, &w0, f_star).unwrap();
    for (a, b) in [(lib.d1, c.d1), (lib.d2, c.d2), (lib.d_inf, c.d_inf), (lib.h0, c.h0), (lib.l, c.l)] {
        if (a - b).abs() > 1e-12 * (1.0 + b) {
            return outcome(false, format!("library constant {a} differs from oracle {b}"));
        }
    }
    let t_max = 10_000usize;
    let seeds = 200u64;
    let sched = Schedule::for_problem(SolverKind::Sfw, p.n(), 1).unwrap();
    let mut sums = vec![0.0; t_max + 1];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..8u64)
            .map(|lane| {
                let (o, p, set) = (&o, &p, &set);
                scope.spawn(move || {
                    let mut local = vec![0.0; t_max + 1];
                    for seed in (lane..seeds).step_by(8) {
                        let mut st = SolverState::new(p, set, SolverKind::Sfw, seed).unwrap();
                        for t in 1..=t_max {
                            st.step(p, set, &sched, 1).unwrap();
                            local[t] += o.objective(&st.w()) - f_star;
                        }
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            for (s, v) in sums.iter_mut().zip(h.join().unwrap()) {
                *s += v;
            }
        }
    });
    let mut worst_ratio = 0.0f64;
    for t in 2..=t_max {
        let mean = sums[t] / seeds as f64;
        let bound = theorem1_bound(&c, t).unwrap();
        worst_ratio = worst_ratio.max(mean / bound);
    }
    outcome(worst_ratio <= 1.0, format!("max mean/bound over t in [2, 1e4] = {worst_ratio:.3e}"))
}

// 7. Deterministic FW: eps_t <= 2 L D_2^2 / t.
fn fw_rate() -> Outcome {
    let (o, p, set, c, f_star) = rate_setup();
    let sched = Schedule::for_problem(SolverKind::Fw, p.n(), p.n()).unwrap();
    let mut st = SolverState::new(&p, &set, SolverKind::Fw, 0).unwrap();
    let mut worst = 0.0f64;
    for t in 1..=20_000usize {
        st.step(&p, &set, &sched, p.n()).unwrap();
        let eps = o.objective(&st.w()) - f_star;
        let bound = fw_rate_bound(c.l, c.d2, t).unwrap();
        if (bound - 2.0 * c.d2 * c.d2 / t as f64).abs() > 1e-12 * bound {
            return outcome(false, "rate evaluator disagrees with 2 L D_2^2 / t");
        }
        worst = worst.max(eps / bound);
    }
    outcome(worst <= 1.0, format!("20000 iterations, max eps_t / bound = {worst:.3e}"))
}

// 8. Log-log slope of the seed-averaged suboptimality over t in [1e3, 1e5].
fn empirical_slope() -> Outcome {
    let (o, p, set, _, f_star) = rate_setup();
    let grid: Vec<usize> = (0..=40).map(|k| 10f64.powf(3.0 + k as f64 * 0.05).round() as usize).collect();
    let t_max = *grid.last().unwrap();
    let seeds = 20u64;
    let sched = Schedule::for_problem(SolverKind::Sfw, p.n(), 1).unwrap();
    let per_seed: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..seeds)
            .map(|seed| {
                let (o, p, set, grid) = (&o, &p, &set, &grid);
                scope.spawn(move || {
                    let mut st = SolverState::new(p, set, SolverKind::Sfw, 1000 + seed).unwrap();
                    let mut out = Vec::with_capacity(grid.len());
                    let mut next = 0;
                    for t in 1..=t_max {
                        st.step(p, set, &sched, 1).unwrap();
                        if t == grid[next] {
                            out.push(o.objective(&st.w()) - f_star);
                            next += 1;
                        }
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let xs: Vec<f64> = grid.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = (0..grid.len())
        .map(|k| (per_seed.iter().map(|s| s[k]).sum::<f64>() / seeds as f64).ln())
        .collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return outcome(false, "mean suboptimality reached zero or below");
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    outcome((-1.3..=-0.7).contains(&slope), format!("slope {slope:.4} (20 seeds, 41 points)"))
}

// 9. ||grad(w) - grad(v)||_p <= (L/n) ||X(w - v)||_p for p in {1, 2, inf}.
fn lp_smoothness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for loss in [LossKind::Logistic, LossKind::Squared, LossKind::GemanMcClure] {
        for _ in 0..100 {
            let (n, d) = (rng.random_range(1..=30), rng.random_range(1..=10));
            let o = random_dense(&mut rng, n, d, loss);
            let p = library_problem(&o, true);
            let mut draw = || oracle::project_l1(&(0..d).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<_>>(), 1.0);
            let (u, v) = (draw(), draw());
            let lib_u = p.grad_table(&u).unwrap();
            let own_u = o.grad_table(&u);
            if lib_u.iter().zip(&own_u).any(|(a, b)| (a - b).abs() > 1e-14) {
                return outcome(false, format!("{loss}: gradient table differs from the oracle"));
            }
            let gv = p.grad_table(&v).unwrap();
            let dg: Vec<f64> = lib_u.iter().zip(&gv).map(|(a, b)| a - b).collect();
            let dx: Vec<f64> = o.xw(&u).iter().zip(o.xw(&v)).map(|(a, b)| a - b).collect();
            for pn in [1.0, 2.0, f64::INFINITY] {
                let slack = oracle::lipschitz(loss) / n as f64 * oracle::norm(&dx, pn) - oracle::norm(&dg, pn);
                worst = worst.min(slack);
            }
        }
    }
    outcome(worst >= -1e-12, format!("900 comparisons, min slack {worst:.3e}"))
}

// 10. CSR and dense storage give the same SFW trajectory.
fn storage_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for seed in 0..4u64 {
        let data = synth_dataset(&SynthSpec { seed, n: 200, d: 30, density: 0.2, task: Task::Classification }).unwrap();
        let sparse = data.problem(LossKind::Logistic).unwrap();
        let dense = sparse.with_matrix(sparse.x().to_dense()).unwrap();
        assert!(sparse.x().is_sparse() && !dense.x().is_sparse());
        let set = ConstraintSet::l1_ball(3.0).unwrap();
        let b = 1 + seed as usize * 3;
        let sched = Schedule::for_problem(SolverKind::Sfw, 200, b).unwrap();
        let mut a = SolverState::new(&sparse, &set, SolverKind::Sfw, seed).unwrap();
        let mut c = SolverState::new(&dense, &set, SolverKind::Sfw, seed).unwrap();
        for _ in 0..5000 {
            a.step(&sparse, &set, &sched, b).unwrap();
            c.step(&dense, &set, &sched, b).unwrap();
            let diff = a.w().iter().zip(c.w()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(diff);
            checks += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{checks} checkpoints, max |w_csr - w_dense| = {worst:.3e}"))
}

// 11. The oracle's choice attains the minimum over all vertices.
fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for kind in ["l1", "simplex", "linf"] {
        for _ in 0..200 {
            let d = rng.random_range(1..=10);
            let radius = rng.random_range(0.1..10.0);
            let r: Vec<f64> = (0..d)
                .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(-3.0..3.0) })
                .collect();
            let (set, verts) = match kind {
                "l1" => (ConstraintSet::l1_ball(radius).unwrap(), oracle::l1_vertices(d, radius)),
                "simplex" => (ConstraintSet::simplex(radius).unwrap(), oracle::simplex_vertices(d, radius)),
                _ => (ConstraintSet::linf_ball(radius).unwrap(), oracle::box_vertices(d, radius)),
            };
            let s = set.lmo(&r).unwrap().to_dense(d);
            if !verts.iter().any(|v| v == &s) {
                return outcome(false, format!("{kind}: returned point {s:?} is not a vertex"));
            }
            worst = worst.max((oracle::dot(&s, &r) - oracle::min_linear(&verts, &r)).abs());
        }
    }
    outcome(worst <= 1e-12, format!("600 directions, max objective gap {worst:.3e}"))
}

// 12. Non-convex loss: running minimum of the stochastic gap decays.
fn nonconvex_decay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (n, d) = (50, 10);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let planted: Vec<f64> = (0..d).map(|j| if j < 3 { 0.5 } else { 0.0 }).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|row| {
            let clean = oracle::dot(row, &planted);
            if rng.random_bool(0.2) { clean + rng.random_range(-10.0..10.0) } else { clean + 0.05 * rng.sample::<f64, _>(StandardNormal) }
        })
        .collect();
    let o = Dense { x, y, loss: LossKind::GemanMcClure };
    let p = library_problem(&o, false);
    let set = ConstraintSet::l1_ball(1.0).unwrap();
    let verts = oracle::l1_vertices(d, 1.0);
    let sched = Schedule::for_problem(SolverKind::Sfw, n, 1).unwrap();
    let results: Vec<(f64, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..20u64)
            .map(|seed| {
                let (o, p, set, verts) = (&o, &p, &set, &verts);
                scope.spawn(move || {
                    let mut st = SolverState::new(p, set, SolverKind::Sfw, seed).unwrap();
                    let mut at_10 = f64::NAN;
                    let mut running = f64::INFINITY;
                    for t in 1..=100_000u64 {
                        let prev = if t == 10 { Some(st.w()) } else { None };
                        st.step(p, set, &sched, 1).unwrap();
                        let g = st.last_stochastic_gap();
                        if let Some(prev) = prev {
                            let r = o.xt(st.alpha());
                            let own = oracle::dot(&r, &prev) - oracle::min_linear(verts, &r);
                            assert!((own - g).abs() <= 1e-9 * (1.0 + own.abs()));
                            at_10 = g;
                        }
                        running = running.min(g);
                    }
                    (at_10, running)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let good = results.iter().filter(|(g10, min)| *min < 0.1 * g10).count();
    let worst = results.iter().map(|(g10, min)| min / g10).fold(f64::NEG_INFINITY, f64::max);
    outcome(good >= 18, format!("{good}/20 seeds decayed below 10%, worst ratio {worst:.3e}"))
}

// 13. SFW ends no worse than the momentum baseline on the breast-cancer-scale stand-in.
fn method_ordering() -> Outcome {
    let data = synth_dataset(&SynthSpec { seed: 683, n: 683, d: 10, density: 1.0, task: Task::Classification }).unwrap();
    let p = data.problem(LossKind::Logistic).unwrap();
    let set = ConstraintSet::l1_ball(5.0).unwrap();
    let budget = 50 * 683;
    let reference = reference_optimum(&p, &set, 200 * 683).unwrap().value;
    let wins: Vec<bool> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..20u64)
            .map(|seed| {
                let (p, set) = (&p, &set);
                scope.spawn(move || {
                    let sfw = run_solver(p, set, &RunConfig::new(SolverKind::Sfw, 6, budget, seed)).unwrap();
                    let mok = run_solver(p, set, &RunConfig::new(SolverKind::Mokhtari, 6, budget, seed)).unwrap();
                    let objs = |o: &sfwkit::solvers::RunOutput| o.rows.iter().map(|r| r.objective).collect::<Vec<_>>();
                    let rel = relative_suboptimality(&[objs(&sfw), objs(&mok)], Some(reference)).unwrap();
                    let (a, b) = (*rel[0].last().unwrap(), *rel[1].last().unwrap());
                    let (fa, fb) = (sfw.rows.last().unwrap().objective, mok.rows.last().unwrap().objective);
                    assert_eq!(a <= b, fa <= fb, "normalization must preserve order");
                    a <= b
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let count = wins.iter().filter(|&&w| w).count();
    outcome(count >= 15, format!("SFW at or below baseline in {count}/20 seeds"))
}

// 14. kappa identities and D_1 / D_inf = kappa on the unit l1 ball.
fn kappa_sanity() -> Outcome {
    for n in 1..=12usize {
        let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        if kappa(&DesignMatrix::from_dense_rows(&eye).unwrap()).unwrap() != 1.0 {
            return outcome(false, format!("kappa(I_{n}) != 1"));
        }
        for d in [1usize, 3, 7] {
            let ones = DesignMatrix::from_dense_rows(&vec![vec![1.0; d]; n]).unwrap();
            if kappa(&ones).unwrap() != n as f64 || kappa(&ones.to_csr()).unwrap() != n as f64 {
                return outcome(false, format!("kappa(ones {n}x{d}) != {n}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let set = ConstraintSet::l1_ball(1.0).unwrap();
    for k in 0..50 {
        let (n, d) = (rng.random_range(1..=40), rng.random_range(1..=15));
        let mut o = random_dense(&mut rng, n, d, LossKind::Squared);
        o.x[0][0] = 0.5; // at least one nonzero
        let x = library_problem(&o, k % 2 == 0).x().clone();
        let kap = kappa(&x).unwrap();
        let ratio = set.diameter(&x, Norm::L1).unwrap() / set.diameter(&x, Norm::Linf).unwrap();
        let col_max = (0..d).map(|j| o.x.iter().map(|r| r[j].abs()).sum::<f64>()).fold(0.0, f64::max);
        let entry_max = o.x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let own = col_max / entry_max;
        if ratio != kap || (own - kap).abs() > 1e-12 * own || !(1.0..=n as f64).contains(&kap) {
            return outcome(false, format!("matrix {k}: D1/Dinf = {ratio}, kappa = {kap}, oracle = {own}"));
        }
        let verts = oracle::l1_vertices(d, 1.0);
        let (d1, dinf) = (oracle::diameter(&o, &verts, 1.0), oracle::diameter(&o, &verts, f64::INFINITY));
        if (d1 / dinf - kap).abs() > 1e-12 * kap {
            return outcome(false, format!("matrix {k}: brute-force diameters disagree"));
        }
    }
    outcome(true, "identity, all-ones and 50 random matrices")
}

#[test]
fn acceptance_criteria() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, u64, Check); 14] = [
        (1, "gap discrepancy bound", 10, gap_discrepancy),
        (2, "table error enumeration", 1, table_error_enumeration),
        (3, "one-step suboptimality inequality", 30, one_step_inequality),
        (4, "recurrence domination", 1, recurrence_domination),
        (5, "series constant bounds", 1, series_bounds),
        (6, "expected rate, 200-seed mean", 300, expected_rate),
        (7, "deterministic FW rate", 10, fw_rate),
        (8, "empirical O(1/t) slope", 300, empirical_slope),
        (9, "lp smoothness", 1, lp_smoothness),
        (10, "CSR/dense trajectory equivalence", 10, storage_equivalence),
        (11, "oracle vs vertex enumeration", 1, oracle_equivalence),
        (12, "non-convex gap decay", 120, nonconvex_decay),
        (13, "SFW vs momentum baseline ordering", 120, method_ordering),
        (14, "kappa sanity", 1, kappa_sanity),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let passed = out.passed && in_time;
        println!(
            "[{}] criterion {id:>2} {name}: {} ({:.2} s, limit {limit} s{})",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
        if !passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
