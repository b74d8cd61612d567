//! Summation strategies over sequences of finite working-precision floats.
//!
//! * [`sum_naive`]: left-to-right fold.
//! * [`sum_bucketed`]: accumulate per exponent, then add the cells in
//!   increasing exponent order. Linear time, no wider accumulator.
//! * [`sum_sorted`]: fold after sorting by increasing magnitude.
//! * [`sum_compensated`]: Kahan-Babuska-Neumaier compensated fold.
//! * [`sum_exact`]: exact dyadic result, correctly rounded on request.

mod buckets;
mod exact;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::float_core::WorkingFloat;

pub use buckets::{sum_bucketed, ExponentBuckets};
pub use exact::ExactSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SumError {
    #[error("non-finite input at position {index}")]
    NonFiniteInput { index: usize },
    #[error("sum overflowed the working format")]
    Overflow,
}

fn finite_or_overflow<T: WorkingFloat>(x: T) -> Result<T, SumError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(SumError::Overflow)
    }
}

/// `(((x1 + x2) + x3) + ... + xn)` starting from `+0.0`.
pub fn sum_naive<T: WorkingFloat>(xs: &[T]) -> Result<T, SumError> {
    let mut acc = T::ZERO;
    for (index, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(SumError::NonFiniteInput { index });
        }
        acc += x;
    }
    finite_or_overflow(acc)
}

/// Naive fold after a stable sort by increasing `|x|`; equal magnitudes put
/// negatives first and otherwise keep arrival order.
pub fn sum_sorted<T: WorkingFloat>(xs: &[T]) -> Result<T, SumError> {
    if let Some(index) = xs.iter().position(|x| !x.is_finite()) {
        return Err(SumError::NonFiniteInput { index });
    }
    let mut sorted = xs.to_vec();
    sort_by_magnitude(&mut sorted);
    sum_naive(&sorted)
}

fn sort_by_magnitude<T: WorkingFloat>(xs: &mut [T]) {
    xs.sort_by(|a, b| {
        a.abs()
            .partial_cmp(&b.abs())
            .expect("finite values are ordered")
            .then_with(|| b.is_sign_negative().cmp(&a.is_sign_negative()))
    });
}

/// Compensated summation with Neumaier's magnitude test, so the correction is
/// also captured when the incoming term dominates the running sum.
pub fn sum_compensated<T: WorkingFloat>(xs: &[T]) -> Result<T, SumError> {
    let mut sum = T::ZERO;
    let mut comp = T::ZERO;
    for (index, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(SumError::NonFiniteInput { index });
        }
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    finite_or_overflow(sum + comp)
}

pub fn sum_exact<T: WorkingFloat>(xs: &[T]) -> Result<ExactSum, SumError> {
    let mut acc = ExactSum::new();
    for (index, &x) in xs.iter().enumerate() {
        acc.add(x.to_f64())
            .map_err(|_| SumError::NonFiniteInput { index })?;
    }
    Ok(acc)
}

/// Exact sum rounded to nearest-even in `T`.
pub fn sum_exact_rounded<T: WorkingFloat>(xs: &[T]) -> Result<T, SumError> {
    finite_or_overflow(sum_exact(xs)?.round::<T>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SummationStrategy {
    Naive,
    Bucketed,
    Sorted,
    Compensated,
    ExactOracle,
}

impl SummationStrategy {
    pub const ALL: [SummationStrategy; 5] = [
        SummationStrategy::Naive,
        SummationStrategy::Bucketed,
        SummationStrategy::Sorted,
        SummationStrategy::Compensated,
        SummationStrategy::ExactOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SummationStrategy::Naive => "naive",
            SummationStrategy::Bucketed => "bucketed",
            SummationStrategy::Sorted => "sorted",
            SummationStrategy::Compensated => "compensated",
            SummationStrategy::ExactOracle => "exact",
        }
    }

    pub fn sum<T: WorkingFloat>(self, xs: &[T]) -> Result<T, SumError> {
        match self {
            SummationStrategy::Naive => sum_naive(xs),
            SummationStrategy::Bucketed => sum_bucketed(xs),
            SummationStrategy::Sorted => sum_sorted(xs),
            SummationStrategy::Compensated => sum_compensated(xs),
            SummationStrategy::ExactOracle => sum_exact_rounded(xs),
        }
    }
}

impl fmt::Display for SummationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown summation strategy `{0}` (expected naive, bucketed, sorted, compensated or exact)")]
pub struct UnknownStrategy(pub String);

impl FromStr for SummationStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SummationStrategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| UnknownStrategy(s.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQ1: [f32; 3] = [1e9, -1e9, 1e-9];

    fn permutations(xs: &[f32]) -> Vec<Vec<f32>> {
        if xs.len() <= 1 {
            return vec![xs.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..xs.len() {
            let mut rest = xs.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn naive_is_order_dependent() {
        assert_eq!(sum_naive::<f32>(&[]).unwrap().to_bits(), 0);
        assert_eq!(sum_naive(&EQ1).unwrap().to_bits(), 1e-9f32.to_bits());
        assert_eq!(sum_naive(&[-1e9f32, 1e-9, 1e9]).unwrap().to_bits(), 0.0f32.to_bits());
    }

    #[test]
    fn bucketed_is_permutation_independent_on_witness() {
        let perms = permutations(&EQ1);
        assert_eq!(perms.len(), 6);
        for p in perms {
            assert_eq!(sum_bucketed(&p).unwrap().to_bits(), 1e-9f32.to_bits(), "{p:?}");
        }
    }

    #[test]
    fn bucketed_singleton() {
        for x in [1.5f64, -3e-310, 7e300, -2.0, 0.0] {
            assert_eq!(sum_bucketed(&[x]).unwrap(), x);
        }
    }

    #[test]
    fn sorted_examples() {
        assert_eq!(sum_sorted(&[1e9f32, 1e-9, -1e9]).unwrap().to_bits(), 0.0f32.to_bits());
        assert_eq!(sum_sorted::<f64>(&[]).unwrap().to_bits(), 0);
        let already = [1e-3f64, -0.5, 2.0, -40.0, 1e6];
        assert_eq!(sum_sorted(&already).unwrap(), sum_naive(&already).unwrap());
    }

    #[test]
    fn sorted_tie_break_puts_negatives_first() {
        let mut xs = [2.0f64, -0.5, 0.5, -2.0, 1.0, 0.0, -0.0];
        sort_by_magnitude(&mut xs);
        let bits: Vec<u64> = xs.iter().map(|x| x.to_bits()).collect();
        let expected: Vec<u64> = [-0.0f64, 0.0, -0.5, 0.5, 1.0, -2.0, 2.0]
            .iter()
            .map(|x| x.to_bits())
            .collect();
        assert_eq!(bits, expected);
    }

    #[test]
    fn compensated_examples() {
        assert_eq!(sum_compensated::<f32>(&[]).unwrap().to_bits(), 0);
        for p in permutations(&EQ1) {
            assert_eq!(sum_compensated(&p).unwrap(), 1e-9f32, "{p:?}");
        }
        let tenths = vec![0.1f32; 10_000];
        let exact = sum_exact(&tenths).unwrap();
        let naive_err = exact.abs_diff(sum_naive(&tenths).unwrap() as f64).unwrap();
        let comp_err = exact.abs_diff(sum_compensated(&tenths).unwrap() as f64).unwrap();
        assert!(comp_err < naive_err, "{comp_err} vs {naive_err}");
        let comp = sum_compensated(&tenths).unwrap();
        let naive = sum_naive(&tenths).unwrap();
        assert!((comp - 1000.0).abs() < (naive - 1000.0).abs());
    }

    #[test]
    fn exact_examples() {
        let e = sum_exact(&EQ1).unwrap();
        assert_eq!(e, sum_exact(&[1e-9f32]).unwrap());
        assert_eq!(sum_exact_rounded(&EQ1).unwrap(), 1e-9f32);
        assert!(sum_exact::<f64>(&[]).unwrap().is_zero());
    }

    #[test]
    fn every_strategy_rejects_non_finite() {
        for s in SummationStrategy::ALL {
            assert_eq!(
                s.sum(&[1.0f32, 2.0, f32::NAN]),
                Err(SumError::NonFiniteInput { index: 2 }),
                "{s}"
            );
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SummationStrategy::ALL {
            assert_eq!(s.name().parse::<SummationStrategy>().unwrap(), s);
        }
        assert!("kahan".parse::<SummationStrategy>().is_err());
    }
}
