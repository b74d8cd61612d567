use crate::float_core::WorkingFloat;
use crate::parallel::{map_ranks, partition, ExecPlan};

use super::{KernelError, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors<T> {
    /// Unit lower triangular.
    pub l: Matrix<T>,
    /// Upper triangular.
    pub u: Matrix<T>,
}

/// Doolittle factorisation `A = L·U` without pivoting.
///
/// Step `k` produces row `k` of `U` and then column `k` of `L`:
///
/// ```text
/// u_kj = a_kj - Σ_{m<k} l_km·u_mj              (j >= k)
/// l_ik = (a_ik - Σ_{m<k} l_im·u_mk) / u_kk     (i > k)
/// ```
///
/// Each entry is one strategy sum over `[a, -l·u, -l·u, ...]`, products
/// rounded to `T`. The entries of a step are split into `P` contiguous blocks,
/// one per worker, so the arithmetic is independent of `P` and thread count.
pub fn lu_factorize<T: WorkingFloat>(a: &Matrix<T>, plan: &ExecPlan) -> Result<LuFactors<T>, KernelError> {
    let n = a.require_square()?;
    let mut l = Matrix::<T>::identity(n);
    let mut u = Matrix::<T>::zeros(n, n);
    for k in 0..n {
        let cols = partition(n - k, plan.procs).offset(k);
        let u_row = {
            let (l, u) = (&l, &u);
            map_ranks(plan, |rank| {
                let mut terms = Vec::with_capacity(k + 1);
                cols.blocks[rank]
                    .clone()
                    .map(|j| {
                        terms.clear();
                        terms.push(a[(k, j)]);
                        terms.extend((0..k).map(|m| -(l[(k, m)] * u[(m, j)])));
                        plan.strategy.sum(&terms)
                    })
                    .collect::<Result<Vec<T>, _>>()
            })?
        };
        for (j, v) in (k..n).zip(u_row.into_iter().flatten()) {
            u[(k, j)] = v;
        }
        let pivot = u[(k, k)];
        if pivot == T::ZERO {
            return Err(KernelError::ZeroPivot { row: k });
        }

        let rows = partition(n - k - 1, plan.procs).offset(k + 1);
        let l_col = {
            let (l, u) = (&l, &u);
            map_ranks(plan, |rank| {
                let mut terms = Vec::with_capacity(k + 1);
                rows.blocks[rank]
                    .clone()
                    .map(|i| {
                        terms.clear();
                        terms.push(a[(i, k)]);
                        terms.extend((0..k).map(|m| -(l[(i, m)] * u[(m, k)])));
                        Ok(plan.strategy.sum(&terms)? / pivot)
                    })
                    .collect::<Result<Vec<T>, KernelError>>()
            })?
        };
        for (i, v) in (k + 1..n).zip(l_col.into_iter().flatten()) {
            if !v.is_finite() {
                return Err(KernelError::NonFiniteInput);
            }
            l[(i, k)] = v;
        }
    }
    Ok(LuFactors { l, u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summation::SummationStrategy;

    #[test]
    fn identity_factors_to_identity() {
        for s in SummationStrategy::ALL {
            let plan = ExecPlan::sequential(s).with_threads(1);
            let f = lu_factorize(&Matrix::<f32>::identity(4), &ExecPlan { procs: 3, ..plan }).unwrap();
            assert_eq!(f.l, Matrix::identity(4));
            assert_eq!(f.u, Matrix::identity(4));
        }
    }

    #[test]
    fn textbook_two_by_two() {
        let a = Matrix::from_vec(2, 2, vec![4.0f32, 3.0, 6.0, 3.0]).unwrap();
        let f = lu_factorize(&a, &ExecPlan::sequential(SummationStrategy::Naive)).unwrap();
        assert_eq!(f.l.as_slice(), &[1.0, 0.0, 1.5, 1.0]);
        assert_eq!(f.u.as_slice(), &[4.0, 3.0, 0.0, -1.5]);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Matrix::from_vec(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            lu_factorize(&a, &ExecPlan::sequential(SummationStrategy::Naive)),
            Err(KernelError::ZeroPivot { row: 0 })
        );
        let b = Matrix::from_vec(2, 2, vec![1.0f64, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            lu_factorize(&b, &ExecPlan::sequential(SummationStrategy::Bucketed)),
            Err(KernelError::ZeroPivot { row: 1 })
        );
        let c = Matrix::from_vec(1, 2, vec![1.0f64, 2.0]).unwrap();
        assert!(matches!(
            lu_factorize(&c, &ExecPlan::sequential(SummationStrategy::Naive)),
            Err(KernelError::NotSquare { .. })
        ));
    }

    #[test]
    fn three_by_three_reconstructs() {
        let a = Matrix::from_vec(3, 3, vec![2.0f64, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        let plan = ExecPlan {
            strategy: SummationStrategy::Bucketed,
            procs: 2,
            threads: 2,
        };
        let f = lu_factorize(&a, &plan).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| f.l[(i, k)] * f.u[(k, j)]).sum();
                assert!((v - a[(i, j)]).abs() < 1e-15);
            }
        }
    }
}
