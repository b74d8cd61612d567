use crate::float_core::{FloatFormat, NonFiniteInput, WorkingFloat};

use super::SumError;

/// One working-precision accumulator per raw exponent value.
///
/// Each summand is added to the cell selected by its own exponent field; the
/// cells are then summed in increasing exponent order. All arithmetic stays in
/// `T`.
#[derive(Debug, Clone)]
pub struct ExponentBuckets<T: WorkingFloat> {
    cells: Vec<T>,
    overflow_events: u64,
}

impl<T: WorkingFloat> Default for ExponentBuckets<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: WorkingFloat> ExponentBuckets<T> {
    pub fn new() -> Self {
        Self {
            cells: vec![T::ZERO; T::FORMAT.bucket_count()],
            overflow_events: 0,
        }
    }

    pub fn format(&self) -> FloatFormat {
        T::FORMAT
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    /// Number of additions whose result left its cell's exponent class.
    pub fn overflow_events(&self) -> u64 {
        self.overflow_events
    }

    pub fn reset(&mut self) {
        self.cells.fill(T::ZERO);
        self.overflow_events = 0;
    }

    #[inline]
    pub fn accumulate(&mut self, x: T) -> Result<(), NonFiniteInput> {
        let idx = x.raw_exponent();
        let Some(cell) = self.cells.get_mut(idx) else {
            return Err(NonFiniteInput);
        };
        let updated = *cell + x;
        if updated.raw_exponent() > idx {
            self.overflow_events += 1;
        }
        *cell = updated;
        Ok(())
    }

    pub fn extend(&mut self, xs: &[T]) -> Result<(), SumError> {
        let cells = &mut self.cells[..];
        let mut overflow = 0u64;
        for (index, &x) in xs.iter().enumerate() {
            let idx = x.raw_exponent();
            // The Inf/NaN exponent code is exactly one past the last cell.
            if idx >= cells.len() {
                self.overflow_events += overflow;
                return Err(SumError::NonFiniteInput { index });
            }
            let updated = cells[idx] + x;
            overflow += (updated.raw_exponent() > idx) as u64;
            cells[idx] = updated;
        }
        self.overflow_events += overflow;
        Ok(())
    }

    /// Sums the cells from the lowest exponent to the highest.
    pub fn finalize(&self) -> Result<T, SumError> {
        let mut cells = self.cells.iter();
        let first = *cells.next().expect("bucket array is never empty");
        let total = cells.fold(first, |acc, &c| acc + c);
        if total.is_finite() {
            Ok(total)
        } else {
            Err(SumError::Overflow)
        }
    }
}

pub fn sum_bucketed<T: WorkingFloat>(xs: &[T]) -> Result<T, SumError> {
    let mut buckets = ExponentBuckets::new();
    buckets.extend(xs)?;
    buckets.finalize()
}
