#![allow(dead_code)]

use std::sync::Arc;

use aga_core::games::{
    bilinear_zero_sum, public_goods, quadratic_game, svo_shaped, toy_example, PublicGoodsParams, SvoParams,
};
use aga_core::scalar::{EvalError, Objective, Scalar, ScalarFn};
use aga_core::{GameDefinition, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

/// Two players, one coordinate each, with coupled targets.
pub fn coupled_quadratic() -> GameDefinition {
    let q0 = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let q1 = Matrix::from_rows(&[vec![1.0, -0.3], vec![-0.3, 3.0]]).unwrap();
    quadratic_game(vec![1, 1], vec![q0, q1], vec![vec![0.5, -1.0], vec![-0.2, 0.7]]).unwrap()
}

/// Every built-in game with the box its derivatives are checked on. The
/// shaped game divides by each player's reward, so it is sampled where the
/// public goods rewards stay at or above 0.75.
pub fn builtin_games() -> Vec<(GameDefinition, f64, f64)> {
    let pg = public_goods(PublicGoodsParams::default()).unwrap();
    vec![
        (toy_example(), -2.0, 2.0),
        (pg.clone(), -2.0, 2.0),
        (
            public_goods(PublicGoodsParams { b: 1.0, c: 1.8, n: 4 }).unwrap(),
            -2.0,
            2.0,
        ),
        (coupled_quadratic(), -2.0, 2.0),
        (bilinear_zero_sum(), -2.0, 2.0),
        (svo_shaped(&pg, SvoParams { alpha: 0.5 }).unwrap(), 0.0, 1.0),
    ]
}

/// Independent transcription of the toy game: (ℓ1, ℓ2).
pub fn toy_reference(a1: f64, a2: f64) -> (f64, f64) {
    let l1 = -f64::sin(a1 * a2 + a2 * a2);
    let l2 = -(f64::cos(1.0 + a1 - (1.0 + a2) * (1.0 + a2)) + a1 * a2 * a2);
    (l1, l2)
}

/// Hand-derived ξ_c of the toy game.
pub fn toy_reference_xi_c(a1: f64, a2: f64) -> [f64; 2] {
    let u = a1 * a2 + a2 * a2;
    let v = 1.0 + a1 - (1.0 + a2) * (1.0 + a2);
    let d1 = -a2 * u.cos() + v.sin() - a2 * a2;
    let d2 = -(a1 + 2.0 * a2) * u.cos() - 2.0 * (1.0 + a2) * v.sin() - 2.0 * a1 * a2;
    [d1, d2]
}

/// `‖a − b‖∞ ≤ max(rel · max(‖a‖∞, ‖b‖∞), abs)`
pub fn gradients_agree(a: &[f64], b: &[f64], rel: f64, abs: f64) -> bool {
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    err <= abs || err <= rel * inf(a).max(inf(b))
}

/// `k · f`
pub struct Scaled(pub f64, pub Arc<dyn Objective>);

impl ScalarFn for Scaled {
    fn call<S: Scalar>(&self, w: &[S]) -> Result<S, EvalError> {
        Ok(S::from_f64(self.0) * S::eval(self.1.as_ref(), w)?)
    }
}

/// `½ wᵀ D w` split so that player `k` owns coordinate `k` and contributes
/// the `k`-th diagonal term; the collective Hessian is `diag(d)`.
pub fn diagonal_collective(diag: &[f64]) -> GameDefinition {
    let n = diag.len();
    let qs = (0..n)
        .map(|k| {
            let mut v = vec![0.0; n];
            v[k] = diag[k];
            Matrix::from_diag(&v)
        })
        .collect();
    quadratic_game(vec![1; n], qs, vec![vec![0.0; n]; n]).unwrap()
}

/// Quadratic game whose collective Hessian is `sign·(MᵀM + δI)`, spread
/// over two players that each own one coordinate.
pub fn definite_quadratic(rng: &mut ChaCha8Rng, sign: f64) -> GameDefinition {
    let d = 2;
    let mut qs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..2 {
        let m: Vec<f64> = uniform(rng, -1.0, 1.0, d * d);
        let mut q = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += m[k * d + i] * m[k * d + j];
                }
                q[(i, j)] = sign * (s + if i == j { 0.1 } else { 0.0 });
            }
        }
        qs.push(q);
        targets.push(uniform(rng, -1.0, 1.0, d));
    }
    quadratic_game(vec![1, 1], qs, targets).unwrap()
}
