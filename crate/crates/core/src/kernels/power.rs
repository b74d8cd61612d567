use crate::float_core::WorkingFloat;
use crate::parallel::{map_ranks, partition, ExecPlan};

use super::{IterationOutcome, KernelError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome<T> {
    pub eigenvalue: T,
    /// `solution` is the eigenvector estimate with component 0 equal to 1.
    pub outcome: IterationOutcome<T>,
}

/// Power iteration normalised on component 0, starting from `e₀`:
/// `y = A·x`, `λ = y₀`, `x = y / λ`. Stops once `|λ_k − λ_{k−1}| < eps`.
pub fn power_method<T: WorkingFloat>(
    a: &Matrix<T>,
    eps: f64,
    max_iter: usize,
    plan: &ExecPlan,
) -> Result<PowerOutcome<T>, KernelError> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(KernelError::DimensionMismatch("empty matrix".into()));
    }
    let rows = partition(n, plan.procs);
    let mut x = vec![T::ZERO; n];
    x[0] = T::ONE;
    let mut lambda: Option<T> = None;
    let mut step = f64::INFINITY;
    for iteration in 1..=max_iter {
        let y: Vec<T> = {
            let x = &x;
            map_ranks(plan, |rank| {
                let mut terms = Vec::with_capacity(n);
                rows.blocks[rank]
                    .clone()
                    .map(|i| {
                        terms.clear();
                        terms.extend(a.row(i).iter().zip(x).map(|(aij, xj)| *aij * *xj));
                        plan.strategy.sum(&terms)
                    })
                    .collect::<Result<Vec<T>, _>>()
            })?
            .into_iter()
            .flatten()
            .collect()
        };
        let estimate = y[0];
        if estimate == T::ZERO {
            return Err(KernelError::ZeroNormalizer { iteration });
        }
        x = y.iter().map(|&v| v / estimate).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFiniteInput);
        }
        let previous = lambda.replace(estimate);
        if let Some(prev) = previous {
            step = (estimate - prev).abs().to_f64();
            if step < eps {
                return Ok(PowerOutcome {
                    eigenvalue: estimate,
                    outcome: IterationOutcome {
                        solution: x,
                        iterations: iteration,
                        converged: true,
                        final_residual: step,
                    },
                });
            }
        }
    }
    Ok(PowerOutcome {
        eigenvalue: lambda.unwrap_or(T::ZERO),
        outcome: IterationOutcome {
            solution: x,
            iterations: max_iter,
            converged: false,
            final_residual: step,
        },
    })
}
