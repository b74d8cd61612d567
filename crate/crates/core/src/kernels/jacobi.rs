use crate::datagen::is_strictly_diagonally_dominant;
use crate::float_core::WorkingFloat;
use crate::parallel::{map_ranks, partition, ExecPlan};

use super::{IterationOutcome, KernelError, Matrix};

/// Jacobi iteration from `x⁰ = 0`:
///
/// `x_i ← (b_i − Σ_{j≠i} a_ij·x_j) / a_ii`
///
/// Rows are split into `P` blocks; the row sum of each update is one strategy
/// sum over the rounded products. Stops once `max_i |x_i^{k+1} − x_i^k| < eps`
/// or after `max_iter` sweeps; the latter returns `converged = false`.
pub fn jacobi_solve<T: WorkingFloat>(
    a: &Matrix<T>,
    b: &[T],
    eps: f64,
    max_iter: usize,
    plan: &ExecPlan,
) -> Result<IterationOutcome<T>, KernelError> {
    let n = a.require_square()?;
    if b.len() != n {
        return Err(KernelError::DimensionMismatch(format!(
            "{n}x{n} system with right-hand side of length {}",
            b.len()
        )));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(KernelError::NonFiniteInput);
    }
    if let Some(row) = is_strictly_diagonally_dominant(a) {
        return Err(KernelError::NotDiagonallyDominant { row });
    }

    let rows = partition(n, plan.procs);
    let mut x = vec![T::ZERO; n];
    let mut step = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next: Vec<T> = {
            let x = &x;
            map_ranks(plan, |rank| {
                let mut terms = Vec::with_capacity(n.saturating_sub(1));
                rows.blocks[rank]
                    .clone()
                    .map(|i| {
                        terms.clear();
                        let row = a.row(i);
                        terms.extend((0..n).filter(|&j| j != i).map(|j| row[j] * x[j]));
                        let s = plan.strategy.sum(&terms)?;
                        Ok((b[i] - s) / row[i])
                    })
                    .collect::<Result<Vec<T>, KernelError>>()
            })?
            .into_iter()
            .flatten()
            .collect()
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteInput);
        }
        step = next
            .iter()
            .zip(&x)
            .map(|(new, old)| (*new - *old).abs().to_f64())
            .fold(0.0, f64::max);
        x = next;
        if step < eps {
            return Ok(IterationOutcome {
                solution: x,
                iterations: iteration,
                converged: true,
                final_residual: step,
            });
        }
    }
    Ok(IterationOutcome {
        solution: x,
        iterations: max_iter,
        converged: false,
        final_residual: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summation::SummationStrategy;

    #[test]
    fn diagonal_system() {
        let a = Matrix::from_fn(3, 3, |i, j| if i == j { 2.0f32 } else { 0.0 });
        let b = [2.0f32, 4.0, 6.0];
        let plan = ExecPlan::sequential(SummationStrategy::Bucketed);
        let one = jacobi_solve(&a, &b, 1e-6, 1, &plan).unwrap();
        assert_eq!(one.solution, vec![1.0, 2.0, 3.0]);
        assert!(!one.converged);
        let done = jacobi_solve(&a, &b, 1e-6, 50, &plan).unwrap();
        assert_eq!(done.solution, vec![1.0, 2.0, 3.0]);
        assert!(done.converged);
        // The second sweep confirms the fixed point.
        assert_eq!(done.iterations, 2);
        assert_eq!(done.final_residual, 0.0);
    }

    #[test]
    fn rejects_weak_diagonal() {
        let a = Matrix::from_vec(2, 2, vec![2.0f64, 1.0, 1.0, 1.0]).unwrap();
        let plan = ExecPlan::sequential(SummationStrategy::Naive);
        assert_eq!(
            jacobi_solve(&a, &[1.0, 1.0], 1e-6, 10, &plan),
            Err(KernelError::NotDiagonallyDominant { row: 1 })
        );
        let a = Matrix::<f64>::identity(2);
        assert!(matches!(
            jacobi_solve(&a, &[1.0], 1e-6, 10, &plan),
            Err(KernelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn reports_non_convergence() {
        let a = Matrix::from_vec(2, 2, vec![1.0f64, 0.99, 0.99, 1.0]).unwrap();
        let plan = ExecPlan::sequential(SummationStrategy::Naive);
        let out = jacobi_solve(&a, &[1.0, 2.0], 1e-12, 5, &plan).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
        assert!(out.final_residual >= 1e-12);
    }

    #[test]
    fn procs_do_not_change_the_iterates() {
        let a = Matrix::from_vec(3, 3, vec![4.0f32, 1.0, -1.0, 2.0, 5.0, 1.0, -1.0, 1.0, 3.0]).unwrap();
        let b = [1.0f32, -2.0, 0.5];
        let base = jacobi_solve(&a, &b, 1e-6, 200, &ExecPlan::sequential(SummationStrategy::Naive)).unwrap();
        for procs in [2, 3, 8] {
            let plan = ExecPlan {
                strategy: SummationStrategy::Naive,
                procs,
                threads: 4,
            };
            assert_eq!(jacobi_solve(&a, &b, 1e-6, 200, &plan).unwrap(), base);
        }
        assert!(base.converged);
    }
}
