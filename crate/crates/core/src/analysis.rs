//! Fixed-point classification, symmetric eigenvalues, angles and the
//! welfare/equality metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjust::{aga_sign, bundle, collective_gradient, game_hessian, simultaneous_gradient};
use crate::deriv;
use crate::games::GameDefinition;
use crate::linalg::{norm, Matrix};
use crate::scalar::EvalError;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigvals(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.max_asymmetry() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {:e})",
            m.max_asymmetry()
        )));
    }
    let n = m.rows();
    let mut a = m.symmetric_part();
    let target = 1e-12 * m.frobenius();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// `A ← Jᵀ A J` for the Givens rotation in the `(p, q)` plane.
fn rotate(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable,
    Indefinite,
    NotFixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub classification: Classification,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyTolerances {
    /// Largest gradient norm still counted as a fixed point.
    pub residual: f64,
    /// Slack below zero allowed for "positive semidefinite".
    pub eig_slack: f64,
    /// Smallest `|eigenvalue|` counted as invertible.
    pub det: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            eig_slack: 1e-9,
            det: 1e-8,
        }
    }
}

/// Classifies `w` as a fixed point of `ξ_c` (`use_collective`) or of `ξ`.
///
/// Definiteness of the game Hessian is judged through its symmetric part,
/// since `xᵀHx = xᵀSx`.
pub fn classify_point(game: &GameDefinition, w: &[f64], tol: f64, use_collective: bool) -> Result<FixedPointReport> {
    classify_point_with(
        game,
        w,
        use_collective,
        ClassifyTolerances {
            residual: tol,
            ..ClassifyTolerances::default()
        },
    )
}

pub fn classify_point_with(
    game: &GameDefinition,
    w: &[f64],
    use_collective: bool,
    tol: ClassifyTolerances,
) -> Result<FixedPointReport> {
    if !(tol.residual > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "residual tolerance must be positive, got {}",
            tol.residual
        )));
    }
    let (residual, sym) = if use_collective {
        (
            norm(&collective_gradient(game, w)?),
            deriv::hess_scalar(game.collective(), w)?,
        )
    } else {
        (
            norm(&simultaneous_gradient(game, w)?),
            game_hessian(game, w)?.symmetric_part(),
        )
    };
    let eigenvalues = sym_eigvals(&sym)?;
    let min = eigenvalues.first().copied().unwrap_or(0.0);
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    let classification = if residual > tol.residual {
        Classification::NotFixed
    } else if min >= -tol.eig_slack && eigenvalues.iter().all(|e| e.abs() > tol.det) {
        Classification::Stable
    } else if max < 0.0 {
        Classification::Unstable
    } else {
        Classification::Indefinite
    };
    Ok(FixedPointReport {
        point: w.to_vec(),
        residual,
        eigenvalues,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("equality is undefined when the mean reward is zero")]
pub struct UndefinedEquality;

pub fn social_welfare(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}

/// Gini coefficient and equality `E = 1 − G` over ascending-ranked rewards:
/// `G = 2/(n² p̄) Σ_i i (p_i − p̄)` with `i` running from 1.
pub fn equality(rewards: &[f64]) -> std::result::Result<(f64, f64), UndefinedEquality> {
    let n = rewards.len();
    if n == 0 {
        return Err(UndefinedEquality);
    }
    let mut p = rewards.to_vec();
    p.sort_by(f64::total_cmp);
    let mean = p.iter().sum::<f64>() / n as f64;
    if mean == 0.0 || !mean.is_finite() {
        return Err(UndefinedEquality);
    }
    let weighted: f64 = p.iter().enumerate().map(|(i, &pi)| (i + 1) as f64 * (pi - mean)).sum();
    let g = 2.0 / ((n * n) as f64 * mean) * weighted;
    Ok((g, 1.0 - g))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub sw: f64,
    /// `None` when the mean reward is zero.
    pub equality: Option<f64>,
    pub gini: Option<f64>,
    pub rewards: Vec<f64>,
}

impl MetricsRecord {
    pub fn from_rewards(rewards: &[f64]) -> Self {
        let ge = equality(rewards).ok();
        Self {
            sw: social_welfare(rewards),
            equality: ge.map(|(_, e)| e),
            gini: ge.map(|(g, _)| g),
            rewards: rewards.to_vec(),
        }
    }
}

/// Angle between two vectors in radians.
pub fn angle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument("angle with a zero vector".into()));
    }
    // 2·atan2(‖â − b̂‖, ‖â + b̂‖) stays accurate near 0 and π, unlike acos.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

/// Sign AgA assigns to `λ` at `w`, with tie-break `epsilon`.
pub fn alignment_sign(game: &GameDefinition, w: &[f64], epsilon: f64) -> std::result::Result<i8, EvalError> {
    let b = bundle(game, w)?;
    Ok(aga_sign(&b.xi, &b.xi_c, &b.grad_hc, epsilon) as i8)
}
