//! Compact convex feasible sets: linear minimization oracles, extreme-point
//! enumeration, data-dependent diameters, and the `kappa` statistic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{argmax_abs, ArgmaxTracker, DesignMatrix};

/// Largest vertex list `vertices` will materialize.
pub const VERTEX_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `{ w : ||w||_1 <= radius }`
    L1Ball,
    /// `{ w >= 0 : sum w = radius }`
    Simplex,
    /// `{ w : ||w||_inf <= radius }`
    LinfBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Linf => "inf",
        })
    }
}

/// An extreme point of a constraint set, stored by its support (sorted by index).
#[derive(Debug, Clone, PartialEq)]
pub struct VertexStep {
    support: Vec<(usize, f64)>,
}

impl VertexStep {
    pub fn new(mut support: Vec<(usize, f64)>) -> Self {
        support.sort_by_key(|&(j, _)| j);
        Self { support }
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for &(j, v) in &self.support {
            out[j] = v;
        }
        out
    }

    /// `<s, r>`
    pub fn dot(&self, r: &[f64]) -> f64 {
        self.support.iter().map(|&(j, v)| v * r[j]).sum()
    }
}

/// `sign` with `sign(0) = +1`.
fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    kind: ConstraintKind,
    radius: f64,
}

impl ConstraintSet {
    pub fn new(kind: ConstraintKind, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::usage(format!("constraint radius must be positive and finite, got {radius}")));
        }
        Ok(Self { kind, radius })
    }

    pub fn l1_ball(radius: f64) -> Result<Self> {
        Self::new(ConstraintKind::L1Ball, radius)
    }

    pub fn simplex(radius: f64) -> Result<Self> {
        Self::new(ConstraintKind::Simplex, radius)
    }

    pub fn linf_ball(radius: f64) -> Result<Self> {
        Self::new(ConstraintKind::LinfBall, radius)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// An extreme point minimizing `<s, r>`.
    ///
    /// Ties go to the smallest index and `sign(0) = +1`, so the oracle is a
    /// deterministic function of `r`.
    pub fn lmo(&self, r: &[f64]) -> Result<VertexStep> {
        if r.is_empty() {
            return Err(Error::usage("LMO over a zero-dimensional space"));
        }
        let lam = self.radius;
        Ok(match self.kind {
            ConstraintKind::L1Ball => {
                let (j, v) = argmax_abs(r)?;
                VertexStep { support: vec![(j, -lam * sign(v))] }
            }
            ConstraintKind::Simplex => {
                let mut best = 0;
                for (j, v) in r.iter().enumerate().skip(1) {
                    if *v < r[best] {
                        best = j;
                    }
                }
                VertexStep { support: vec![(best, lam)] }
            }
            ConstraintKind::LinfBall => VertexStep {
                support: r.iter().enumerate().map(|(j, &v)| (j, -lam * sign(v))).collect(),
            },
        })
    }

    /// Same as [`lmo`](Self::lmo) on the tracker's values; O(1) amortized for
    /// the l1 ball, a scan otherwise.
    pub fn lmo_tracked(&self, tracker: &mut ArgmaxTracker) -> Result<VertexStep> {
        match self.kind {
            ConstraintKind::L1Ball => {
                let (j, v) = tracker.query()?;
                Ok(VertexStep { support: vec![(j, -self.radius * sign(v))] })
            }
            _ => self.lmo(tracker.values()),
        }
    }

    /// The vertex selected for `r = 0`; the default starting point.
    pub fn origin_vertex(&self, d: usize) -> Result<VertexStep> {
        self.lmo(&vec![0.0; d])
    }

    /// All extreme points in a fixed order.
    pub fn vertices(&self, d: usize) -> Result<Vec<VertexStep>> {
        let lam = self.radius;
        let count: u128 = match self.kind {
            ConstraintKind::L1Ball => 2 * d as u128,
            ConstraintKind::Simplex => d as u128,
            ConstraintKind::LinfBall => 1u128.checked_shl(d as u32).unwrap_or(u128::MAX),
        };
        if count > VERTEX_CAP as u128 {
            return Err(Error::Capacity { what: "vertex enumeration", needed: count, cap: VERTEX_CAP });
        }
        Ok(match self.kind {
            ConstraintKind::L1Ball => (0..d)
                .flat_map(|j| [VertexStep { support: vec![(j, lam)] }, VertexStep { support: vec![(j, -lam)] }])
                .collect(),
            ConstraintKind::Simplex => (0..d).map(|j| VertexStep { support: vec![(j, lam)] }).collect(),
            ConstraintKind::LinfBall => (0..count as usize)
                .map(|mask| VertexStep {
                    support: (0..d).map(|j| (j, if mask >> j & 1 == 1 { -lam } else { lam })).collect(),
                })
                .collect(),
        })
    }

    /// `D_p = max_{u,v in C} ||X(u - v)||_p`.
    ///
    /// The l1 ball and simplex have closed forms over columns of `X`. The
    /// l-inf ball maximizes over the vertices of `C - C`, which is the box of
    /// radius `2 * radius`, and is subject to the vertex cap.
    pub fn diameter(&self, x: &DesignMatrix, p: Norm) -> Result<f64> {
        let lam = self.radius;
        let d = x.ncols();
        match self.kind {
            ConstraintKind::L1Ball => {
                Ok(2.0 * lam * x.column_norms(p).into_iter().fold(0.0, f64::max))
            }
            ConstraintKind::Simplex => {
                let cols = dense_columns(x);
                let mut best = 0.0f64;
                let mut diff = vec![0.0; x.nrows()];
                for j in 0..d {
                    for k in j + 1..d {
                        for (i, slot) in diff.iter_mut().enumerate() {
                            *slot = cols[j][i] - cols[k][i];
                        }
                        best = best.max(p.of(&diff));
                    }
                }
                Ok(lam * best)
            }
            ConstraintKind::LinfBall => {
                let verts = ConstraintSet::linf_ball(2.0 * lam)?.vertices(d)?;
                let mut best = 0.0f64;
                for v in verts {
                    let z = x.mul_vec(&v.to_dense(d))?;
                    best = best.max(p.of(&z));
                }
                Ok(best)
            }
        }
    }

    /// How far `w` is from the set (0 when feasible).
    pub fn violation(&self, w: &[f64]) -> f64 {
        let lam = self.radius;
        match self.kind {
            ConstraintKind::L1Ball => (Norm::L1.of(w) - lam).max(0.0),
            ConstraintKind::Simplex => {
                let sum: f64 = w.iter().sum();
                let neg = w.iter().fold(0.0f64, |m, &v| m.max(-v));
                (sum - lam).abs().max(neg)
            }
            ConstraintKind::LinfBall => (Norm::Linf.of(w) - lam).max(0.0),
        }
    }

    /// Membership with an absolute slack scaled by the radius.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.violation(w) <= tol * (1.0 + self.radius)
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let lam = self.radius;
        match self.kind {
            ConstraintKind::L1Ball => {
                if Norm::L1.of(v) <= lam {
                    return v.to_vec();
                }
                let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                let theta = simplex_threshold(&abs, lam);
                v.iter().map(|&x| sign(x) * (x.abs() - theta).max(0.0)).collect()
            }
            ConstraintKind::Simplex => {
                let theta = simplex_threshold(v, lam);
                v.iter().map(|&x| (x - theta).max(0.0)).collect()
            }
            ConstraintKind::LinfBall => v.iter().map(|&x| x.clamp(-lam, lam)).collect(),
        }
    }
}

/// Threshold `theta` with `sum max(v_i - theta, 0) = lam` (sort-based).
fn simplex_threshold(v: &[f64], lam: f64) -> f64 {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - lam) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    theta
}

fn dense_columns(x: &DesignMatrix) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![0.0; x.nrows()]; x.ncols()];
    for i in 0..x.nrows() {
        for (j, v) in x.row(i) {
            cols[j][i] = v;
        }
    }
    cols
}

/// `kappa = ||X||_{1,1} / ||X||_{1,inf}`: largest column l1 norm over largest
/// absolute entry. Lies in `[1, n]`.
pub fn kappa(x: &DesignMatrix) -> Result<f64> {
    let max_abs = x.max_abs();
    if max_abs == 0.0 {
        return Err(Error::UndefinedStatistic("kappa of an all-zero matrix"));
    }
    let col = x.column_norms(Norm::L1).into_iter().fold(0.0, f64::max);
    Ok(col / max_abs)
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ConstraintKind::L1Ball => "l1",
            ConstraintKind::Simplex => "simplex",
            ConstraintKind::LinfBall => "linf",
        };
        write!(f, "{tag}:{}", self.radius)
    }
}

impl FromStr for ConstraintSet {
    type Err = Error;

    /// `l1:<radius>`, `simplex:<radius>` or `linf:<radius>`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, value) = s
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("constraint '{s}' is not of the form kind:radius")))?;
        let radius: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("bad constraint radius '{value}'")))?;
        let kind = match tag.trim() {
            "l1" => ConstraintKind::L1Ball,
            "simplex" => ConstraintKind::Simplex,
            "linf" => ConstraintKind::LinfBall,
            other => return Err(Error::usage(format!("unknown constraint kind '{other}' (l1|simplex|linf)"))),
        };
        Self::new(kind, radius)
    }
}
