//! Finite-sum objectives `f(Xw) = (1/n) sum_i f_i(x_i^T w)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::DesignMatrix;

/// Per-sample loss family. Each `f_i` is a function of the scalar
/// `z = x_i^T w` and the sample's target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `log(1 + exp(-y z))`, targets in {-1, +1}.
    Logistic,
    /// `(z - y)^2 / 2`.
    Squared,
    /// `u^2 / (1 + u^2)` with `u = z - y`; smooth, bounded, non-convex.
    GemanMcClure,
}

impl LossKind {
    /// Lipschitz constant of `f_i'`.
    pub fn smoothness(self) -> f64 {
        match self {
            LossKind::Logistic => 0.25,
            LossKind::Squared => 1.0,
            LossKind::GemanMcClure => 2.0,
        }
    }

    pub fn is_convex(self) -> bool {
        !matches!(self, LossKind::GemanMcClure)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
            LossKind::GemanMcClure => "geman",
        }
    }

    /// `f(z; y)`.
    pub fn value(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::Logistic => {
                // log(1 + e^{-a}) = max(0, -a) + log1p(e^{-|a|})
                let a = y * z;
                (-a).max(0.0) + (-a.abs()).exp().ln_1p()
            }
            LossKind::Squared => 0.5 * (z - y) * (z - y),
            LossKind::GemanMcClure => {
                let u2 = (z - y) * (z - y);
                u2 / (1.0 + u2)
            }
        }
    }

    /// `f'(z; y)`.
    pub fn deriv(self, y: f64, z: f64) -> f64 {
        match self {
            LossKind::Logistic => {
                let a = y * z;
                if a >= 0.0 {
                    let e = (-a).exp();
                    -y * e / (1.0 + e)
                } else {
                    -y / (1.0 + a.exp())
                }
            }
            LossKind::Squared => z - y,
            LossKind::GemanMcClure => {
                let u = z - y;
                let q = 1.0 + u * u;
                2.0 * u / (q * q)
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            "geman" | "geman_mcclure" => Ok(LossKind::GemanMcClure),
            other => Err(Error::usage(format!("unknown loss '{other}' (logistic|squared|geman)"))),
        }
    }
}

/// A loss family bound to its per-sample targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    kind: LossKind,
    targets: Vec<f64>,
}

impl LossModel {
    pub fn new(kind: LossKind, targets: Vec<f64>) -> Result<Self> {
        if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
            return Err(Error::usage(format!("target {i} is not finite")));
        }
        if kind == LossKind::Logistic {
            if let Some(i) = targets.iter().position(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::usage(format!(
                    "logistic target {i} is {}, expected -1 or +1",
                    targets[i]
                )));
            }
        }
        Ok(Self { kind, targets })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// `f_i(z)`.
    pub fn value(&self, i: usize, z: f64) -> f64 {
        self.kind.value(self.targets[i], z)
    }

    /// `f_i'(z)`.
    pub fn deriv(&self, i: usize, z: f64) -> f64 {
        self.kind.deriv(self.targets[i], z)
    }

    pub fn smoothness(&self) -> f64 {
        self.kind.smoothness()
    }
}

/// Data matrix plus loss: the whole objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    x: DesignMatrix,
    loss: LossModel,
}

impl Problem {
    pub fn new(x: DesignMatrix, loss: LossModel) -> Result<Self> {
        if loss.len() != x.nrows() {
            return Err(Error::usage(format!(
                "{} targets for a matrix with {} rows",
                loss.len(),
                x.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::usage(format!(
                "empty problem ({}x{})",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(Self { x, loss })
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn loss(&self) -> &LossModel {
        &self.loss
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Same loss, other matrix storage (dense <-> CSR).
    pub fn with_matrix(&self, x: DesignMatrix) -> Result<Self> {
        Self::new(x, self.loss.clone())
    }

    /// `(1/n) sum_i f_i(x_i^T w)`.
    pub fn objective(&self, w: &[f64]) -> Result<f64> {
        let theta = self.x.mul_vec(w)?;
        Ok(self.objective_at(&theta))
    }

    /// Objective as a function of `theta = Xw`.
    pub fn objective_at(&self, theta: &[f64]) -> f64 {
        let sum: f64 = theta.iter().enumerate().map(|(i, &z)| self.loss.value(i, z)).sum();
        sum / self.n() as f64
    }

    /// Exact `grad f(Xw)` in R^n: entry i is `f_i'(x_i^T w) / n`.
    pub fn grad_table(&self, w: &[f64]) -> Result<Vec<f64>> {
        let theta = self.x.mul_vec(w)?;
        Ok(self.grad_table_at(&theta))
    }

    pub fn grad_table_at(&self, theta: &[f64]) -> Vec<f64> {
        let inv_n = 1.0 / self.n() as f64;
        theta.iter().enumerate().map(|(i, &z)| inv_n * self.loss.deriv(i, z)).collect()
    }

    /// `X^T grad f(Xw)`, the gradient with respect to `w`.
    pub fn full_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let g = self.grad_table(w)?;
        self.x.tmul_vec(&g)
    }

    pub fn smoothness(&self) -> f64 {
        self.loss.smoothness()
    }
}
