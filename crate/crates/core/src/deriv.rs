//! Exact gradients and Hessians by forward-mode seeding, plus a central
//! finite-difference gradient kept around as a verification oracle.

use crate::linalg::Matrix;
use crate::scalar::{Dual, Dual1, Dual2, EvalError, Objective, Scalar};
use crate::{Error, Result};

fn non_finite(coordinate: Option<usize>, w: &[f64]) -> EvalError {
    EvalError::NonFinite {
        coordinate,
        point: w.to_vec(),
    }
}

pub(crate) fn check_point(w: &[f64]) -> std::result::Result<(), EvalError> {
    match w.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(non_finite(Some(i), w)),
        None => Ok(()),
    }
}

/// Value of `f` at `w`, rejecting non-finite results.
pub fn value(f: &dyn Objective, w: &[f64]) -> std::result::Result<f64, EvalError> {
    check_point(w)?;
    let v = f.eval_real(w)?;
    if !v.is_finite() {
        return Err(non_finite(None, w));
    }
    Ok(v)
}

/// `∂f/∂w_i` from one first-order pass.
pub fn partial(f: &dyn Objective, w: &[f64], i: usize) -> std::result::Result<f64, EvalError> {
    let seeded: Vec<Dual1> = w
        .iter()
        .enumerate()
        .map(|(k, &x)| Dual::new(x, if k == i { 1.0 } else { 0.0 }))
        .collect();
    let out = f.eval_dual(&seeded)?;
    if !(out.re.is_finite() && out.eps.is_finite()) {
        return Err(non_finite(Some(i), w));
    }
    Ok(out.eps)
}

/// `∂²f/∂w_i∂w_j` from one hyper-dual pass.
pub fn second_partial(f: &dyn Objective, w: &[f64], i: usize, j: usize) -> std::result::Result<f64, EvalError> {
    let seeded: Vec<Dual2> = w
        .iter()
        .enumerate()
        .map(|(k, &x)| Dual2::seeded(x, (k == i) as u8 as f64, (k == j) as u8 as f64))
        .collect();
    let out = f.eval_hyper(&seeded)?;
    let finite = [out.value(), out.d_dx(), out.d_dy(), out.d2_dxdy()]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(non_finite(Some(i), w));
    }
    Ok(out.d2_dxdy())
}

/// Exact gradient using one forward pass per coordinate.
pub fn grad_scalar(f: &dyn Objective, w: &[f64]) -> std::result::Result<Vec<f64>, EvalError> {
    check_point(w)?;
    (0..w.len()).map(|i| partial(f, w, i)).collect()
}

/// Hessian before symmetrization; entry `(i, j)` comes from the pass
/// seeded with `i` first and `j` second.
pub fn hess_scalar_raw(f: &dyn Objective, w: &[f64]) -> std::result::Result<Matrix, EvalError> {
    check_point(w)?;
    let d = w.len();
    let mut h = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            h[(i, j)] = second_partial(f, w, i, j)?;
        }
    }
    Ok(h)
}

/// Exact Hessian, symmetrized by averaging each `(i, j)`/`(j, i)` pair.
pub fn hess_scalar(f: &dyn Objective, w: &[f64]) -> std::result::Result<Matrix, EvalError> {
    Ok(hess_scalar_raw(f, w)?.symmetric_part())
}

/// Central differences `(f(w + h·e_i) - f(w - h·e_i)) / 2h`.
pub fn fd_grad(f: &dyn Objective, w: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    check_point(w)?;
    let mut probe = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        probe[i] = w[i] + h;
        let up = f.eval_real(&probe)?;
        probe[i] = w[i] - h;
        let down = f.eval_real(&probe)?;
        probe[i] = w[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(non_finite(Some(i), w).into());
        }
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarFn;

    macro_rules! scalar_fn {
        ($name:ident, |$w:ident| $body:expr) => {
            struct $name;
            impl ScalarFn for $name {
                fn call<S: Scalar>(&self, $w: &[S]) -> std::result::Result<S, EvalError> {
                    Ok($body)
                }
            }
        };
    }

    scalar_fn!(Sin, |w| w[0].sin());
    scalar_fn!(Prod, |w| w[0] * w[1]);
    scalar_fn!(Square, |w| w[0] * w[0]);
    scalar_fn!(HalfNormSq, |w| S::from_f64(0.5) * (w[0] * w[0] + w[1] * w[1]));
    scalar_fn!(XYSq, |w| w[0] * w[1].powi(2));
    scalar_fn!(Recip, |w| S::one() / w[0]);

    #[test]
    fn gradient_examples() {
        assert_eq!(grad_scalar(&Sin, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(grad_scalar(&Prod, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn hessian_examples() {
        assert_eq!(hess_scalar(&HalfNormSq, &[0.3, -1.2]).unwrap(), Matrix::identity(2));
        let h = hess_scalar(&XYSq, &[1.0, 1.0]).unwrap();
        assert_eq!(h.to_rows(), vec![vec![0.0, 2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn fd_examples() {
        assert!((fd_grad(&Square, &[3.0], 1e-5).unwrap()[0] - 6.0).abs() < 1e-8);
        assert!((fd_grad(&Sin, &[0.0], 1e-5).unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fd_rejects_non_positive_step() {
        assert!(matches!(fd_grad(&Sin, &[0.0], 0.0), Err(Error::InvalidArgument(_))));
        assert!(fd_grad(&Sin, &[0.0], -1e-3).is_err());
    }

    #[test]
    fn non_finite_names_coordinate() {
        match grad_scalar(&Recip, &[0.0]) {
            Err(EvalError::NonFinite { coordinate, point }) => {
                assert_eq!(coordinate, Some(0));
                assert_eq!(point, vec![0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        match grad_scalar(&Prod, &[1.0, f64::NAN]) {
            Err(EvalError::NonFinite { coordinate, .. }) => assert_eq!(coordinate, Some(1)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
