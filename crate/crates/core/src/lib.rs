//! Gradient dynamics for differentiable mixed-motive games.
//!
//! The crate bundles exact forward-mode derivatives ([`scalar`], [`deriv`]),
//! a set of built-in games ([`games`]), the update rules compared in
//! mixed-motive optimisation ([`adjust`]): simultaneous descent on individual
//! or collective losses, consensus and symplectic gradient adjustment, and
//! altruistic gradient adjustment (AgA). It also has fixed-point and welfare
//! analysis ([`analysis`]) and a deterministic experiment runner
//! ([`experiment`]).
//!
//! ```
//! use aga_core::adjust::{descend, Method, MethodConfig, Projection};
//! use aga_core::games::{public_goods, PublicGoodsParams};
//!
//! let game = public_goods(PublicGoodsParams::default()).unwrap();
//! let cfg = MethodConfig::new(Method::Aga, 1.0, 0.05, 200)
//!     .with_projection(Projection::uniform(0.0, 1.0, 2));
//! let traj = descend(&game, &[0.2, 0.4], &cfg).unwrap();
//! assert_eq!(traj.last().w, vec![1.0, 1.0]);
//! ```

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod analysis;
pub mod deriv;
pub mod experiment;
pub mod games;
pub mod linalg;
pub mod scalar;

pub use adjust::{bundle, descend, direction, GradientBundle, Method, MethodConfig, Trajectory};
pub use games::{GameDefinition, ParamVector};
pub use linalg::Matrix;
pub use scalar::{Dual, Dual1, Dual2, EvalError, Objective, Scalar, ScalarFn};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
