//! Gradient dynamics on differentiable games.
//!
//! Every method produces a direction that the learning rule subtracts:
//! `w ← project(w − γ·direction)`.
//!
//! | method        | direction                          |
//! |---------------|------------------------------------|
//! | Simul-Ind     | `ξ`                                |
//! | Simul-Co      | `ξ_c`                              |
//! | CGA           | `ξ + λ Hᵀξ`                        |
//! | SGA           | `ξ + λ Aᵀξ`, signed `λ`            |
//! | AgA           | `ξ_c + λ (ξ + H_cᵀξ_c)`, signed `λ` |
//! | AgA-no-sign   | as AgA with `λ = +|λ|`             |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deriv::{self, check_point};
use crate::games::GameDefinition;
use crate::linalg::{axpy, dot, norm, Matrix};
use crate::scalar::EvalError;
use crate::{Error, Result};

/// Derivative information for one game at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    /// Simultaneous gradient: block `i` is `∇_{w_i} ℓ_i`.
    pub xi: Vec<f64>,
    /// Collective gradient `∇ℓ_c`.
    pub xi_c: Vec<f64>,
    /// `∇ ½‖ξ_c‖² = H_cᵀ ξ_c`.
    pub grad_hc: Vec<f64>,
    /// Jacobian of `ξ`; row block `i` comes from player `i`'s loss.
    pub h: Matrix,
    /// Hessian of `ℓ_c`.
    pub h_c: Matrix,
    pub s: Matrix,
    pub a: Matrix,
}

/// `ξ` at `w`.
pub fn simultaneous_gradient(game: &GameDefinition, w: &[f64]) -> std::result::Result<Vec<f64>, EvalError> {
    game.check_dim(w)?;
    check_point(w)?;
    (0..w.len())
        .map(|k| deriv::partial(game.loss(game.owner(k)), w, k))
        .collect()
}

/// Jacobian of `ξ` at `w`.
pub fn game_hessian(game: &GameDefinition, w: &[f64]) -> std::result::Result<Matrix, EvalError> {
    game.check_dim(w)?;
    check_point(w)?;
    let d = w.len();
    let mut h = Matrix::zeros(d, d);
    for r in 0..d {
        let loss = game.loss(game.owner(r));
        for c in 0..d {
            h[(r, c)] = deriv::second_partial(loss, w, r, c)?;
        }
    }
    Ok(h)
}

/// `ξ_c` at `w`.
pub fn collective_gradient(game: &GameDefinition, w: &[f64]) -> std::result::Result<Vec<f64>, EvalError> {
    game.check_dim(w)?;
    deriv::grad_scalar(game.collective(), w)
}

pub fn bundle(game: &GameDefinition, w: &[f64]) -> std::result::Result<GradientBundle, EvalError> {
    let xi = simultaneous_gradient(game, w)?;
    let xi_c = collective_gradient(game, w)?;
    let h = game_hessian(game, w)?;
    let h_c = deriv::hess_scalar(game.collective(), w)?;
    let grad_hc = h_c.tr_mul_vec(&xi_c);
    let s = h.symmetric_part();
    let a = h.antisymmetric_part();
    Ok(GradientBundle {
        xi,
        xi_c,
        grad_hc,
        h,
        h_c,
        s,
        a,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SimulInd,
    SimulCo,
    Cga,
    Sga,
    Aga,
    AgaNoSign,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SimulInd,
        Method::SimulCo,
        Method::Cga,
        Method::Sga,
        Method::Aga,
        Method::AgaNoSign,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::SimulInd => "Simul-Ind",
            Method::SimulCo => "Simul-Co",
            Method::Cga => "CGA",
            Method::Sga => "SGA",
            Method::Aga => "AgA",
            Method::AgaNoSign => "AgA-no-sign",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Method::SimulInd => "simul_ind",
            Method::SimulCo => "simul_co",
            Method::Cga => "cga",
            Method::Sga => "sga",
            Method::Aga => "aga",
            Method::AgaNoSign => "aga_no_sign",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Box constraint applied after each step. Coordinates are clamped, which is
/// the Euclidean projection onto an axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Projection {
    pub fn uniform(lo: f64, hi: f64, d: usize) -> Self {
        Self {
            lo: vec![lo; d],
            hi: vec![hi; d],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::InvalidArgument(
                "projection bounds have different lengths".into(),
            ));
        }
        if let Some(k) = (0..self.lo.len()).find(|&k| !(self.lo[k] <= self.hi[k])) {
            return Err(Error::InvalidArgument(format!(
                "projection bound {k}: lo {} > hi {}",
                self.lo[k], self.hi[k]
            )));
        }
        Ok(())
    }

    pub fn apply(&self, w: &mut [f64]) {
        for ((x, &lo), &hi) in w.iter_mut().zip(&self.lo).zip(&self.hi) {
            *x = x.clamp(lo, hi);
        }
    }
}

fn default_epsilon() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub method: Method,
    /// Magnitude of the alignment parameter; the sign is chosen per step
    /// for SGA and AgA.
    #[serde(default, rename = "lambda")]
    pub lambda_mag: f64,
    pub gamma: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub max_steps: usize,
    #[serde(default)]
    pub stop_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Projection>,
}

impl MethodConfig {
    pub fn new(method: Method, lambda_mag: f64, gamma: f64, max_steps: usize) -> Self {
        Self {
            method,
            lambda_mag,
            gamma,
            epsilon: default_epsilon(),
            max_steps,
            stop_tol: 0.0,
            projection: None,
        }
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = Some(projection);
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.lambda_mag >= 0.0 && self.lambda_mag.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda magnitude must be >= 0, got {}",
                self.lambda_mag
            )));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stop_tol must be >= 0, got {}",
                self.stop_tol
            )));
        }
        if let Some(p) = &self.projection {
            p.validate()?;
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// SGA's sign: `sign((1/d)⟨ξ, Hᵀξ⟩⟨Aᵀξ, Hᵀξ⟩ + ε)`.
pub fn sga_sign(xi: &[f64], h: &Matrix, epsilon: f64) -> f64 {
    let ht_xi = h.tr_mul_vec(xi);
    let at_xi = h.antisymmetric_part().tr_mul_vec(xi);
    let d = xi.len() as f64;
    sign(dot(xi, &ht_xi) * dot(&at_xi, &ht_xi) / d + epsilon)
}

/// AgA's sign: `sign((1/d)⟨ξ_c, ∇H_c⟩(⟨ξ, ∇H_c⟩ + ‖∇H_c‖²) + ε)`.
pub fn aga_sign(xi: &[f64], xi_c: &[f64], grad_hc: &[f64], epsilon: f64) -> f64 {
    let d = xi.len() as f64;
    let arg = dot(xi_c, grad_hc) * (dot(xi, grad_hc) + dot(grad_hc, grad_hc)) / d;
    sign(arg + epsilon)
}

/// Update direction and the signed `λ` that produced it (0 for methods
/// without an alignment term).
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub vector: Vec<f64>,
    pub lambda: f64,
}

pub fn direction(game: &GameDefinition, w: &[f64], cfg: &MethodConfig) -> std::result::Result<Direction, EvalError> {
    let lam = cfg.lambda_mag;
    let (vector, lambda) = match cfg.method {
        Method::SimulInd => (simultaneous_gradient(game, w)?, 0.0),
        Method::SimulCo => (collective_gradient(game, w)?, 0.0),
        Method::Cga => {
            let xi = simultaneous_gradient(game, w)?;
            let h = game_hessian(game, w)?;
            (axpy(&xi, lam, &h.tr_mul_vec(&xi)), lam)
        }
        Method::Sga => {
            let xi = simultaneous_gradient(game, w)?;
            let h = game_hessian(game, w)?;
            let lambda = lam * sga_sign(&xi, &h, cfg.epsilon);
            let at_xi = h.antisymmetric_part().tr_mul_vec(&xi);
            (axpy(&xi, lambda, &at_xi), lambda)
        }
        Method::Aga | Method::AgaNoSign => {
            let xi = simultaneous_gradient(game, w)?;
            let xi_c = collective_gradient(game, w)?;
            let grad_hc = deriv::hess_scalar(game.collective(), w)?.tr_mul_vec(&xi_c);
            let lambda = if cfg.method == Method::Aga {
                lam * aga_sign(&xi, &xi_c, &grad_hc, cfg.epsilon)
            } else {
                lam
            };
            let adj: Vec<f64> = xi.iter().zip(&grad_hc).map(|(a, b)| a + b).collect();
            (axpy(&xi_c, lambda, &adj), lambda)
        }
    };
    Ok(Direction { vector, lambda })
}

/// How a step turns a direction into a parameter update.
pub trait Stepper {
    fn step(&mut self, w: &mut [f64], direction: &[f64], gamma: f64);
}

/// `w ← w − γ·d`
#[derive(Clone, Copy, Debug, Default)]
pub struct PlainStep;

impl Stepper for PlainStep {
    fn step(&mut self, w: &mut [f64], direction: &[f64], gamma: f64) {
        for (x, d) in w.iter_mut().zip(direction) {
            *x -= gamma * d;
        }
    }
}

/// Adagrad-style step: `w ← w − γ·d / (√G + δ)` with `G` the running sum of
/// squared directions.
#[derive(Clone, Debug)]
pub struct Adagrad {
    accum: Vec<f64>,
    delta: f64,
}

impl Adagrad {
    pub fn new(delta: f64) -> Self {
        Self {
            accum: Vec::new(),
            delta,
        }
    }
}

impl Stepper for Adagrad {
    fn step(&mut self, w: &mut [f64], direction: &[f64], gamma: f64) {
        if self.accum.len() != w.len() {
            self.accum = vec![0.0; w.len()];
        }
        for ((x, d), g) in w.iter_mut().zip(direction).zip(self.accum.iter_mut()) {
            *g += d * d;
            *x -= gamma * d / (g.sqrt() + self.delta);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub w: Vec<f64>,
    pub rewards: Vec<f64>,
    pub loss_c: f64,
    pub dir_norm: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory always holds the initial point")
    }

    /// Number of updates applied.
    pub fn steps(&self) -> usize {
        self.last().step
    }
}

#[derive(Debug, Error)]
#[error("evaluation failed at step {step}: {source}")]
pub struct DescentError {
    pub step: usize,
    /// Records up to, but not including, the failing step.
    pub partial: Vec<StepRecord>,
    #[source]
    pub source: EvalError,
}

/// Plain gradient descent with the configured direction.
pub fn descend(game: &GameDefinition, w0: &[f64], cfg: &MethodConfig) -> std::result::Result<Trajectory, DescentError> {
    descend_with(game, w0, cfg, &mut PlainStep, |_| {})
}

/// Descent with a custom stepper; `recorder` sees every record as it is
/// produced.
pub fn descend_with(
    game: &GameDefinition,
    w0: &[f64],
    cfg: &MethodConfig,
    stepper: &mut dyn Stepper,
    mut recorder: impl FnMut(&StepRecord),
) -> std::result::Result<Trajectory, DescentError> {
    let mut w = w0.to_vec();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut step = 0;
    loop {
        let evaluated =
            direction(game, &w, cfg).and_then(|dir| Ok((dir, game.rewards_at(&w)?, game.collective_loss_at(&w)?)));
        let (dir, rewards, loss_c) = match evaluated {
            Ok(v) => v,
            Err(source) => {
                return Err(DescentError {
                    step,
                    partial: records,
                    source,
                })
            }
        };
        let dir_norm = norm(&dir.vector);
        let record = StepRecord {
            step,
            w: w.clone(),
            rewards,
            loss_c,
            dir_norm,
            lambda: dir.lambda,
        };
        recorder(&record);
        records.push(record);
        if step >= cfg.max_steps {
            return Ok(Trajectory {
                records,
                stop: StopReason::MaxSteps,
            });
        }
        if dir_norm <= cfg.stop_tol {
            return Ok(Trajectory {
                records,
                stop: StopReason::Converged,
            });
        }
        stepper.step(&mut w, &dir.vector, cfg.gamma);
        if let Some(p) = &cfg.projection {
            p.apply(&mut w);
        }
        step += 1;
    }
}
