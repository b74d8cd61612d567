//! IEEE 754 binary format parameters and bit-level decomposition.
//!
//! A finite value is viewed as `sign · significand · 2^(exponent - precision + 1)`.
//! The raw (biased) exponent field doubles as the bucket index used by the
//! exponent-bucketed summation: zeros and subnormals share index 0 and the
//! all-ones Inf/NaN code is never a valid index.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("non-finite input (NaN or infinity)")]
pub struct NonFiniteInput;

/// Parameters of a binary interchange format (base 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    pub name: &'static str,
    pub total_bits: u32,
    /// Significand digits including the implicit leading bit.
    pub precision: u32,
    pub exp_bits: u32,
    pub exp_min: i32,
    pub exp_max: i32,
}

impl FloatFormat {
    pub const BINARY16: FloatFormat = FloatFormat {
        name: "b16",
        total_bits: 16,
        precision: 11,
        exp_bits: 5,
        exp_min: -14,
        exp_max: 15,
    };
    pub const BINARY32: FloatFormat = FloatFormat {
        name: "b32",
        total_bits: 32,
        precision: 24,
        exp_bits: 8,
        exp_min: -126,
        exp_max: 127,
    };
    // IEEE 754 values; some published tables misprint these as -1122/+1223.
    pub const BINARY64: FloatFormat = FloatFormat {
        name: "b64",
        total_bits: 64,
        precision: 53,
        exp_bits: 11,
        exp_min: -1022,
        exp_max: 1023,
    };
    pub const BINARY128: FloatFormat = FloatFormat {
        name: "b128",
        total_bits: 128,
        precision: 113,
        exp_bits: 15,
        exp_min: -16382,
        exp_max: 16383,
    };

    /// Number of exponent buckets: every raw exponent value except the Inf/NaN code.
    pub const fn bucket_count(&self) -> usize {
        (self.exp_max - self.exp_min + 2) as usize
    }

    pub const fn bias(&self) -> i32 {
        self.exp_max
    }

    pub const fn fraction_bits(&self) -> u32 {
        self.precision - 1
    }

    /// Raw exponent field value reserved for Inf/NaN.
    pub const fn special_exponent(&self) -> u32 {
        (1u32 << self.exp_bits) - 1
    }

    const fn fraction_mask(&self) -> u128 {
        (1u128 << self.fraction_bits()) - 1
    }

    /// Splits a raw bit pattern (right-aligned in a `u128`) into its fields.
    pub fn decompose_bits(&self, bits: u128) -> Result<DecomposedFloat, NonFiniteInput> {
        let fraction = bits & self.fraction_mask();
        let biased = ((bits >> self.fraction_bits()) as u32) & self.special_exponent();
        if biased == self.special_exponent() {
            return Err(NonFiniteInput);
        }
        let negative = (bits >> (self.total_bits - 1)) & 1 == 1;
        Ok(DecomposedFloat {
            sign: if negative { -1 } else { 1 },
            mantissa_bits: fraction,
            biased_exponent: biased,
            is_subnormal: biased == 0 && fraction != 0,
            is_zero: biased == 0 && fraction == 0,
        })
    }

    pub fn recompose_bits(&self, d: &DecomposedFloat) -> u128 {
        let sign = if d.sign < 0 { 1u128 << (self.total_bits - 1) } else { 0 };
        sign | ((d.biased_exponent as u128) << self.fraction_bits()) | (d.mantissa_bits & self.fraction_mask())
    }

    pub fn bucket_index_bits(&self, bits: u128) -> Result<usize, NonFiniteInput> {
        let biased = ((bits >> self.fraction_bits()) as u32) & self.special_exponent();
        if biased == self.special_exponent() {
            Err(NonFiniteInput)
        } else {
            Ok(biased as usize)
        }
    }

    /// Unit roundoff `2^-precision` for round-to-nearest.
    pub fn unit_roundoff(&self) -> f64 {
        (-(self.precision as f64)).exp2()
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

/// Fields of a finite floating-point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecomposedFloat {
    /// +1 or -1.
    pub sign: i8,
    /// Stored fraction field, without the implicit bit.
    pub mantissa_bits: u128,
    /// Raw exponent field.
    pub biased_exponent: u32,
    pub is_subnormal: bool,
    pub is_zero: bool,
}

impl DecomposedFloat {
    /// Significand with the implicit bit restored for normal numbers.
    pub fn significand(&self, fmt: &FloatFormat) -> u128 {
        if self.biased_exponent == 0 {
            self.mantissa_bits
        } else {
            self.mantissa_bits | (1u128 << fmt.fraction_bits())
        }
    }

    /// Unbiased exponent `e` with `2^e <= |x| < 2^(e+1)` for normal `x`;
    /// subnormals and zero report `exp_min`.
    pub fn exponent(&self, fmt: &FloatFormat) -> i32 {
        (self.biased_exponent.max(1) as i32) - fmt.bias()
    }
}

/// A binary working precision the summation strategies and kernels run in.
pub trait WorkingFloat:
    Copy
    + Default
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    const FORMAT: FloatFormat;
    const ZERO: Self;
    const ONE: Self;
    /// Bytes per value in raw dumps.
    const BYTES: usize;

    fn to_raw(self) -> u64;
    fn from_raw(bits: u64) -> Self;
    /// Exact widening.
    fn to_f64(self) -> f64;
    /// Round-to-nearest narrowing.
    fn from_f64(x: f64) -> Self;
    fn is_finite(self) -> bool;
    fn abs(self) -> Self;
    fn is_sign_negative(self) -> bool;
    fn next_up(self) -> Self;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    /// Raw exponent field. Equals `special_exponent()` for Inf/NaN.
    #[inline(always)]
    fn raw_exponent(self) -> usize {
        ((self.to_raw() >> Self::FORMAT.fraction_bits()) & ((1u64 << Self::FORMAT.exp_bits) - 1)) as usize
    }
}

macro_rules! impl_working_float {
    ($t:ty, $fmt:expr, $bits:ty) => {
        impl WorkingFloat for $t {
            const FORMAT: FloatFormat = $fmt;
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const BYTES: usize = std::mem::size_of::<$t>();

            #[inline(always)]
            fn to_raw(self) -> u64 {
                self.to_bits() as u64
            }
            #[inline(always)]
            fn from_raw(bits: u64) -> Self {
                <$t>::from_bits(bits as $bits)
            }
            #[inline(always)]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline(always)]
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            #[inline(always)]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline(always)]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline(always)]
            fn is_sign_negative(self) -> bool {
                <$t>::is_sign_negative(self)
            }
            fn next_up(self) -> Self {
                <$t>::next_up(self)
            }
            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }
        }
    };
}

impl_working_float!(f32, FloatFormat::BINARY32, u32);
impl_working_float!(f64, FloatFormat::BINARY64, u64);

pub fn decompose<T: WorkingFloat>(x: T) -> Result<DecomposedFloat, NonFiniteInput> {
    T::FORMAT.decompose_bits(x.to_raw() as u128)
}

pub fn recompose<T: WorkingFloat>(d: &DecomposedFloat) -> T {
    T::from_raw(T::FORMAT.recompose_bits(d) as u64)
}

/// Bucket of `x`: its raw exponent field.
#[inline]
pub fn bucket_index<T: WorkingFloat>(x: T) -> Result<usize, NonFiniteInput> {
    let idx = x.raw_exponent();
    if idx < T::FORMAT.bucket_count() {
        Ok(idx)
    } else {
        Err(NonFiniteInput)
    }
}
