//! Differentiable mixed-motive games.
//!
//! A game is a partition of the joint parameter vector into per-player
//! blocks, one loss per player and a collective loss (by default the sum of
//! the individual losses). Rewards are always the negated losses.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deriv;
use crate::linalg::Matrix;
use crate::scalar::{EvalError, Objective, Scalar, ScalarFn};
use crate::{Error, Result};

#[derive(Clone)]
pub struct GameDefinition {
    name: String,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    losses: Vec<Arc<dyn Objective>>,
    collective: Arc<dyn Objective>,
}

impl fmt::Debug for GameDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameDefinition")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

/// Collective loss `Σ_i ℓ_i`.
struct SumLoss(Vec<Arc<dyn Objective>>);

impl ScalarFn for SumLoss {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let mut acc = S::zero();
        for loss in &self.0 {
            acc = acc + S::eval(loss.as_ref(), w)?;
        }
        Ok(acc)
    }
}

impl GameDefinition {
    /// Game whose collective loss is the sum of the individual losses.
    pub fn new(name: impl Into<String>, dims: Vec<usize>, losses: Vec<Arc<dyn Objective>>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "every player needs at least one parameter".into(),
            ));
        }
        if dims.len() != losses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} players but {} losses",
                dims.len(),
                losses.len()
            )));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0);
        for d in &dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        let collective: Arc<dyn Objective> = Arc::new(SumLoss(losses.clone()));
        Ok(Self {
            name: name.into(),
            dims,
            offsets,
            losses,
            collective,
        })
    }

    /// Replaces the collective loss.
    pub fn with_collective(mut self, collective: Arc<dyn Objective>) -> Self {
        self.collective = collective;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_players(&self) -> usize {
        self.dims.len()
    }

    /// Total parameter dimension `d`.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Coordinate range owned by `player`.
    pub fn block(&self, player: usize) -> std::ops::Range<usize> {
        self.offsets[player]..self.offsets[player + 1]
    }

    /// Player that owns coordinate `k`.
    pub fn owner(&self, k: usize) -> usize {
        self.offsets.partition_point(|&o| o <= k) - 1
    }

    pub fn loss(&self, player: usize) -> &dyn Objective {
        self.losses[player].as_ref()
    }

    pub fn losses(&self) -> &[Arc<dyn Objective>] {
        &self.losses
    }

    pub fn collective(&self) -> &dyn Objective {
        self.collective.as_ref()
    }

    /// Shared handle to the collective loss, for building derived games.
    pub fn collective_arc(&self) -> Arc<dyn Objective> {
        Arc::clone(&self.collective)
    }

    pub fn check_dim(&self, w: &[f64]) -> std::result::Result<(), EvalError> {
        if w.len() != self.dim() {
            return Err(EvalError::Dimension {
                expected: self.dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    pub fn losses_at(&self, w: &[f64]) -> std::result::Result<Vec<f64>, EvalError> {
        self.check_dim(w)?;
        self.losses.iter().map(|l| deriv::value(l.as_ref(), w)).collect()
    }

    /// Per-player rewards `r_i = -ℓ_i(w)`.
    pub fn rewards_at(&self, w: &[f64]) -> std::result::Result<Vec<f64>, EvalError> {
        Ok(self.losses_at(w)?.into_iter().map(|l| -l).collect())
    }

    pub fn collective_loss_at(&self, w: &[f64]) -> std::result::Result<f64, EvalError> {
        self.check_dim(w)?;
        deriv::value(self.collective(), w)
    }

    pub fn param_vector(&self, entries: Vec<f64>) -> Result<ParamVector> {
        ParamVector::new(entries, &self.dims)
    }
}

/// Joint parameter point with its per-player partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    entries: Vec<f64>,
    offsets: Vec<usize>,
}

impl ParamVector {
    pub fn new(entries: Vec<f64>, dims: &[usize]) -> Result<Self> {
        let mut offsets = vec![0];
        for d in dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        if *offsets.last().unwrap() != entries.len() {
            return Err(Error::InvalidArgument(format!(
                "partition covers {} entries, vector has {}",
                offsets.last().unwrap(),
                entries.len()
            )));
        }
        Ok(Self { entries, offsets })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn n_players(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn slice(&self, player: usize) -> &[f64] {
        &self.entries[self.offsets[player]..self.offsets[player + 1]]
    }
}

struct ToyLoss1;

impl ScalarFn for ToyLoss1 {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let (a1, a2) = (w[0], w[1]);
        Ok(-(a1 * a2 + a2 * a2).sin())
    }
}

struct ToyLoss2;

impl ScalarFn for ToyLoss2 {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let (a1, a2) = (w[0], w[1]);
        let one = S::one();
        Ok(-((one + a1 - (one + a2).powi(2)).cos() + a1 * a2 * a2))
    }
}

/// Two-player mixed-motive toy game:
/// `ℓ1 = -sin(a1·a2 + a2²)`, `ℓ2 = -[cos(1 + a1 - (1 + a2)²) + a1·a2²]`.
pub fn toy_example() -> GameDefinition {
    GameDefinition::new("toy", vec![1, 1], vec![Arc::new(ToyLoss1), Arc::new(ToyLoss2)])
        .expect("static game is well formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicGoodsParams {
    /// Budget; contributions live in `[0, b]`.
    pub b: f64,
    /// Multiplier on the pooled contributions, `1 < c <= 2`.
    pub c: f64,
    #[serde(default = "two")]
    pub n: usize,
}

fn two() -> usize {
    2
}

impl Default for PublicGoodsParams {
    fn default() -> Self {
        Self { b: 1.0, c: 1.5, n: 2 }
    }
}

impl PublicGoodsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "budget b must be positive, got {}",
                self.b
            )));
        }
        if !(self.c > 1.0 && self.c <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "multiplier c must satisfy 1 < c <= 2, got {}",
                self.c
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "public goods needs at least two players, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

struct PublicGoodsLoss {
    player: usize,
    params: PublicGoodsParams,
}

impl ScalarFn for PublicGoodsLoss {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let PublicGoodsParams { b, c, n } = self.params;
        let pool = w.iter().fold(S::zero(), |acc, &a| acc + a);
        let payoff = S::from_f64(b) - w[self.player] + S::from_f64(c / n as f64) * pool;
        Ok(-payoff)
    }
}

/// Linear public goods game with payoff `b - a_i + (c/n)·Σ_j a_j` and loss
/// equal to the negated payoff. Each player owns one contribution.
pub fn public_goods(params: PublicGoodsParams) -> Result<GameDefinition> {
    params.validate()?;
    let losses: Vec<Arc<dyn Objective>> = (0..params.n)
        .map(|player| Arc::new(PublicGoodsLoss { player, params }) as Arc<dyn Objective>)
        .collect();
    GameDefinition::new("public_goods", vec![1; params.n], losses)
}

struct QuadraticLoss {
    q: Matrix,
    target: Vec<f64>,
}

impl ScalarFn for QuadraticLoss {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let diff: Vec<S> = w.iter().zip(&self.target).map(|(&x, &t)| x - S::from_f64(t)).collect();
        let d = diff.len();
        let mut acc = S::zero();
        for i in 0..d {
            for j in 0..d {
                let q = self.q[(i, j)];
                if q != 0.0 {
                    acc = acc + S::from_f64(q) * diff[i] * diff[j];
                }
            }
        }
        Ok(S::from_f64(0.5) * acc)
    }
}

/// Quadratic game `ℓ_i = ½ (w - t_i)ᵀ Q_i (w - t_i)` with the given
/// per-player block sizes.
pub fn quadratic_game(dims: Vec<usize>, qs: Vec<Matrix>, targets: Vec<Vec<f64>>) -> Result<GameDefinition> {
    let d: usize = dims.iter().sum();
    if qs.len() != dims.len() || targets.len() != dims.len() {
        return Err(Error::InvalidArgument(format!(
            "{} players need {} matrices and targets, got {} and {}",
            dims.len(),
            dims.len(),
            qs.len(),
            targets.len()
        )));
    }
    let mut losses: Vec<Arc<dyn Objective>> = Vec::with_capacity(qs.len());
    for (i, (q, target)) in qs.into_iter().zip(targets).enumerate() {
        if q.rows() != d || q.cols() != d {
            return Err(Error::InvalidArgument(format!(
                "Q_{i} must be {d}x{d}, got {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        if q.max_asymmetry() > 1e-12 * q.frobenius().max(1.0) {
            return Err(Error::InvalidArgument(format!("Q_{i} is not symmetric")));
        }
        if target.len() != d {
            return Err(Error::InvalidArgument(format!(
                "target {i} has length {}, expected {d}",
                target.len()
            )));
        }
        losses.push(Arc::new(QuadraticLoss { q, target }));
    }
    GameDefinition::new("quadratic", dims, losses)
}

struct BilinearLoss {
    sign: f64,
}

impl ScalarFn for BilinearLoss {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        Ok(S::from_f64(self.sign) * w[0] * w[1])
    }
}

/// Cyclic zero-sum game `ℓ1 = w1·w2`, `ℓ2 = -w1·w2`.
pub fn bilinear_zero_sum() -> GameDefinition {
    GameDefinition::new(
        "bilinear_zero_sum",
        vec![1, 1],
        vec![
            Arc::new(BilinearLoss { sign: 1.0 }),
            Arc::new(BilinearLoss { sign: -1.0 }),
        ],
    )
    .expect("static game is well formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvoParams {
    pub alpha: f64,
}

impl SvoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "svo alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Negated shaped reward `r_i - α(1 - atan(Σ_{j≠i} r_j / r_i))`.
struct SvoLoss {
    player: usize,
    base: Vec<Arc<dyn Objective>>,
    alpha: f64,
}

impl ScalarFn for SvoLoss {
    fn call<S: Scalar>(&self, w: &[S]) -> std::result::Result<S, EvalError> {
        let mut own = S::zero();
        let mut others = S::zero();
        for (j, loss) in self.base.iter().enumerate() {
            let r = -S::eval(loss.as_ref(), w)?;
            if j == self.player {
                own = r;
            } else {
                others = others + r;
            }
        }
        if self.alpha == 0.0 {
            return Ok(-own);
        }
        if own.value() == 0.0 {
            return Err(EvalError::DivisionByZero {
                player: self.player,
                point: w.iter().map(Scalar::value).collect(),
            });
        }
        let penalty = S::from_f64(self.alpha) * (S::one() - (others / own).atan());
        Ok(-(own - penalty))
    }
}

/// Reward shaping with a social-value-orientation penalty. Angles are in
/// radians. The collective loss is the sum of the shaped losses.
pub fn svo_shaped(game: &GameDefinition, params: SvoParams) -> Result<GameDefinition> {
    params.validate()?;
    let losses: Vec<Arc<dyn Objective>> = (0..game.n_players())
        .map(|player| {
            Arc::new(SvoLoss {
                player,
                base: game.losses.clone(),
                alpha: params.alpha,
            }) as Arc<dyn Objective>
        })
        .collect();
    GameDefinition::new(format!("svo({})", game.name), game.dims.clone(), losses)
}

/// Serializable description of a built-in game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Toy,
    PublicGoods {
        #[serde(default = "one")]
        b: f64,
        #[serde(default = "one_half")]
        c: f64,
        #[serde(default = "two")]
        n: usize,
    },
    BilinearZeroSum,
    Quadratic {
        dims: Vec<usize>,
        q: Vec<Vec<Vec<f64>>>,
        targets: Vec<Vec<f64>>,
    },
    Svo {
        alpha: f64,
        base: Box<GameSpec>,
    },
}

fn one() -> f64 {
    1.0
}

fn one_half() -> f64 {
    1.5
}

impl GameSpec {
    pub fn build(&self) -> Result<GameDefinition> {
        match self {
            GameSpec::Toy => Ok(toy_example()),
            GameSpec::PublicGoods { b, c, n } => public_goods(PublicGoodsParams { b: *b, c: *c, n: *n }),
            GameSpec::BilinearZeroSum => Ok(bilinear_zero_sum()),
            GameSpec::Quadratic { dims, q, targets } => {
                let qs = q
                    .iter()
                    .map(|rows| {
                        Matrix::from_rows(rows).ok_or_else(|| Error::InvalidArgument("ragged quadratic matrix".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                quadratic_game(dims.clone(), qs, targets.clone())
            }
            GameSpec::Svo { alpha, base } => svo_shaped(&base.build()?, SvoParams { alpha: *alpha }),
        }
    }

    /// True for the public goods game, possibly under reward shaping.
    pub fn is_public_goods(&self) -> bool {
        match self {
            GameSpec::PublicGoods { .. } => true,
            GameSpec::Svo { base, .. } => base.is_public_goods(),
            _ => false,
        }
    }
}
