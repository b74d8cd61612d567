use crate::float_core::WorkingFloat;
use crate::parallel::{map_ranks, partition, ExecPlan, ReductionPlan};

use super::{KernelError, Matrix};

/// `C = A·B` with the inner dimension split into `P` contiguous chunks.
///
/// Rank `r` reduces `a_ik·b_kj` over its chunk of `k` with the strategy; the
/// per-rank partial matrices are then added in ascending rank order. The
/// evaluation order of each `c_ij` therefore depends on `P`, exactly as a
/// `parallel_sum` over the product sequence would.
pub fn matmul<T: WorkingFloat>(a: &Matrix<T>, b: &Matrix<T>, plan: &ExecPlan) -> Result<Matrix<T>, KernelError> {
    if a.cols() != b.rows() {
        return Err(KernelError::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (rows, cols) = (a.rows(), b.cols());
    let chunks = partition(a.cols(), plan.procs);
    let partials = map_ranks(plan, |rank| {
        let block = chunks.blocks[rank].clone();
        let mut terms = Vec::with_capacity(block.len());
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let a_row = a.row(i);
            for j in 0..cols {
                terms.clear();
                terms.extend(block.clone().map(|k| a_row[k] * b[(k, j)]));
                out.push(plan.strategy.sum(&terms)?);
            }
        }
        Ok::<_, KernelError>(out)
    })?;
    let reduction = ReductionPlan::ascending(plan.procs);
    let mut locals = vec![T::ZERO; plan.procs];
    let mut data = Vec::with_capacity(rows * cols);
    for idx in 0..rows * cols {
        for (l, p) in locals.iter_mut().zip(&partials) {
            *l = p[idx];
        }
        let v = reduction.reduce(&locals);
        if !v.is_finite() {
            return Err(KernelError::NonFiniteInput);
        }
        data.push(v);
    }
    Matrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_matrix, MagnitudeProfile};
    use crate::summation::SummationStrategy;

    fn textbook(a: &Matrix<f32>, b: &Matrix<f32>) -> Matrix<f32> {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut c = 0.0f32;
            for k in 0..a.cols() {
                c += a[(i, k)] * b[(k, j)];
            }
            c
        })
    }

    #[test]
    fn identity_times_b_is_b() {
        let b: Matrix<f32> = gen_matrix(7, &MagnitudeProfile::half_large(), 2, false);
        let id = Matrix::identity(7);
        for s in SummationStrategy::ALL {
            for procs in [1, 2, 3, 8] {
                let plan = ExecPlan {
                    strategy: s,
                    procs,
                    threads: 2,
                };
                let c = matmul(&id, &b, &plan).unwrap();
                let bits = |m: &Matrix<f32>| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&c), bits(&b), "{s} P={procs}");
            }
        }
    }

    #[test]
    fn ones_times_ones() {
        let ones = Matrix::from_fn(2, 2, |_, _| 1.0f64);
        for s in SummationStrategy::ALL {
            let c = matmul(&ones, &ones, &ExecPlan::sequential(s)).unwrap();
            assert_eq!(c.as_slice(), &[2.0; 4]);
        }
    }

    #[test]
    fn single_rank_naive_is_textbook_loop() {
        let p = MagnitudeProfile::half_large();
        let a: Matrix<f32> = gen_matrix(20, &p, 8, false);
        let b: Matrix<f32> = gen_matrix(20, &p, 9, false);
        let c = matmul(&a, &b, &ExecPlan::sequential(SummationStrategy::Naive)).unwrap();
        assert_eq!(c, textbook(&a, &b));
    }

    #[test]
    fn shape_checks() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            matmul(&a, &a, &ExecPlan::sequential(SummationStrategy::Naive)),
            Err(KernelError::DimensionMismatch(_))
        ));
        let b = Matrix::<f64>::zeros(3, 1);
        let c = matmul(&a, &b, &ExecPlan::sequential(SummationStrategy::Naive)).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 1));
    }
}
