use thiserror::Error;

use crate::float_core::WorkingFloat;
use crate::kernels::{IterationOutcome, LuFactors, Matrix};
use crate::summation::ExactSum;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape mismatch: {left} vs {right}")]
pub struct ShapeMismatch {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("iteration gap needs two converged runs (original converged: {orig}, accurate converged: {acc})")]
pub struct NotConverged {
    pub orig: bool,
    pub acc: bool,
}

pub fn abs_error(computed: f64, reference: f64) -> f64 {
    (computed - reference).abs()
}

/// Max-norm of `computed − reference`, with each difference rounded once.
pub fn abs_error_vec<T: WorkingFloat>(computed: &[T], reference: &[f64]) -> Result<f64, ShapeMismatch> {
    if computed.len() != reference.len() {
        return Err(ShapeMismatch {
            left: format!("vector of length {}", computed.len()),
            right: format!("vector of length {}", reference.len()),
        });
    }
    Ok(computed
        .iter()
        .zip(reference)
        .map(|(c, r)| {
            let mut acc = ExactSum::new();
            acc.add(c.to_f64()).and_then(|_| acc.add(-r)).map_or(f64::INFINITY, |_| acc.to_f64().abs())
        })
        .fold(0.0, f64::max))
}

/// Percentage of bitwise-equal elements.
pub fn repro_pct<T: WorkingFloat>(run_a: &Matrix<T>, run_b: &Matrix<T>) -> Result<f64, ShapeMismatch> {
    if (run_a.rows(), run_a.cols()) != (run_b.rows(), run_b.cols()) {
        return Err(ShapeMismatch {
            left: format!("{}x{}", run_a.rows(), run_a.cols()),
            right: format!("{}x{}", run_b.rows(), run_b.cols()),
        });
    }
    let total = run_a.as_slice().len();
    if total == 0 {
        return Ok(100.0);
    }
    let equal = run_a
        .as_slice()
        .iter()
        .zip(run_b.as_slice())
        .filter(|(a, b)| a.to_raw() == b.to_raw())
        .count();
    Ok(100.0 * equal as f64 / total as f64)
}

/// `orig.iterations − acc.iterations`.
pub fn iteration_gap<T>(orig: &IterationOutcome<T>, acc: &IterationOutcome<T>) -> Result<i64, NotConverged> {
    if !(orig.converged && acc.converged) {
        return Err(NotConverged {
            orig: orig.converged,
            acc: acc.converged,
        });
    }
    Ok(orig.iterations as i64 - acc.iterations as i64)
}

/// `‖A·x − b‖∞` evaluated exactly and rounded once.
pub fn residual_inf<T: WorkingFloat>(a: &Matrix<T>, x: &[T], b: &[T]) -> Result<f64, ShapeMismatch> {
    if a.cols() != x.len() || a.rows() != b.len() {
        return Err(ShapeMismatch {
            left: format!("{}x{} matrix", a.rows(), a.cols()),
            right: format!("x of length {}, b of length {}", x.len(), b.len()),
        });
    }
    Ok((0..a.rows())
        .map(|i| {
            let mut acc = ExactSum::new();
            for (aij, xj) in a.row(i).iter().zip(x) {
                acc.add_product(aij.to_f64(), xj.to_f64()).expect("finite");
            }
            acc.add(-b[i].to_f64()).expect("finite");
            acc.to_f64().abs()
        })
        .fold(0.0, f64::max))
}

/// `‖L·U·x − A·x‖∞`, every product and sum exact, rounded once per row.
///
/// Each `l·u` is split into a rounded head and its exact tail, so the triple
/// products enter the accumulator without error.
pub fn lu_residual<T: WorkingFloat>(f: &LuFactors<T>, a: &Matrix<T>, x: &[T]) -> Result<f64, ShapeMismatch> {
    let n = a.rows();
    if f.l.rows() != n || f.u.rows() != n || a.cols() != n || x.len() != n {
        return Err(ShapeMismatch {
            left: format!("factors of order {}", f.l.rows()),
            right: format!("{}x{} matrix with x of length {}", a.rows(), a.cols(), x.len()),
        });
    }
    Ok((0..n)
        .map(|i| {
            let mut acc = ExactSum::new();
            for k in 0..=i {
                let lik = f.l[(i, k)].to_f64();
                if lik == 0.0 {
                    continue;
                }
                for (u, xj) in f.u.row(k)[k..].iter().zip(&x[k..]) {
                    let (u, xj) = (u.to_f64(), xj.to_f64());
                    let head = lik * u;
                    let tail = lik.mul_add(u, -head);
                    acc.add_product(head, xj).expect("finite");
                    acc.add_product(tail, xj).expect("finite");
                }
            }
            for (aij, xj) in a.row(i).iter().zip(x) {
                acc.add_product(-aij.to_f64(), xj.to_f64()).expect("finite");
            }
            acc.to_f64().abs()
        })
        .fold(0.0, f64::max))
}

/// `A·B` with every entry exact, rounded once to binary64.
pub fn exact_matmul<T: WorkingFloat>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Vec<f64>, ShapeMismatch> {
    if a.cols() != b.rows() {
        return Err(ShapeMismatch {
            left: format!("{}x{}", a.rows(), a.cols()),
            right: format!("{}x{}", b.rows(), b.cols()),
        });
    }
    let mut out = Vec::with_capacity(a.rows() * b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = ExactSum::new();
            for (k, aik) in a.row(i).iter().enumerate() {
                acc.add_product(aik.to_f64(), b[(k, j)].to_f64()).expect("finite");
            }
            out.push(acc.to_f64());
        }
    }
    Ok(out)
}
