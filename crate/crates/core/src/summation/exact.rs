//! Exact dyadic accumulation.
//!
//! Every finite binary64 value is an integer multiple of `2^-1074`, so a sum of
//! such values is a (large) integer scaled by `2^-1074`. The accumulator keeps
//! that integer in 32-bit digits stored in `i64` limbs; carries are deferred and
//! propagated only every `NORMALIZE_EVERY` additions. binary32 inputs widen
//! exactly and share the same grid.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};

use crate::float_core::{FloatFormat, NonFiniteInput, WorkingFloat};

const DIGIT_BITS: usize = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
/// Weight of bit 0 of limb 0.
const LSB_EXP: i32 = -1074;
/// 2098 bits of binary64 range plus headroom for ~2^60 summands.
const LIMBS: usize = 68;
const NORMALIZE_EVERY: u32 = 1 << 29;

/// Exact sum of finite binary64 (or narrower) values.
#[derive(Clone)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
        }
    }

    pub fn from_slice<T: WorkingFloat>(xs: &[T]) -> Result<Self, NonFiniteInput> {
        let mut acc = Self::new();
        for &x in xs {
            acc.add(x.to_f64())?;
        }
        Ok(acc)
    }

    #[inline]
    pub fn add(&mut self, x: f64) -> Result<(), NonFiniteInput> {
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as usize;
        if biased == 0x7ff {
            return Err(NonFiniteInput);
        }
        let fraction = bits & ((1u64 << 52) - 1);
        let (significand, offset) = if biased == 0 {
            (fraction, 0)
        } else {
            (fraction | (1u64 << 52), biased - 1)
        };
        if significand == 0 {
            return Ok(());
        }
        let limb = offset / DIGIT_BITS;
        let shifted = (significand as u128) << (offset % DIGIT_BITS);
        let negative = bits >> 63 == 1;
        for k in 0..3 {
            let digit = ((shifted >> (DIGIT_BITS * k)) as i64) & DIGIT_MASK;
            if negative {
                self.limbs[limb + k] -= digit;
            } else {
                self.limbs[limb + k] += digit;
            }
        }
        self.bump(1);
        Ok(())
    }

    /// Adds `a·b` exactly (product plus its FMA-recovered error term).
    ///
    /// The error term is exact unless the product lies in the subnormal range.
    pub fn add_product(&mut self, a: f64, b: f64) -> Result<(), NonFiniteInput> {
        let p = a * b;
        if !p.is_finite() {
            return Err(NonFiniteInput);
        }
        let e = a.mul_add(b, -p);
        self.add(p)?;
        self.add(e)
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for (l, r) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            *l += r;
        }
        self.bump(other.pending.max(1));
    }

    fn bump(&mut self, n: u32) {
        self.pending = self.pending.saturating_add(n);
        if self.pending >= NORMALIZE_EVERY {
            carry(&mut self.limbs);
            self.pending = 0;
        }
    }

    /// Sign and magnitude digits, each digit in `[0, 2^32)`.
    fn sign_magnitude(&self) -> (bool, [u64; LIMBS + 1]) {
        let mut limbs = self.limbs;
        let mut top = carry(&mut limbs);
        let negative = top < 0 || (top == 0 && limbs[LIMBS - 1] < 0);
        if negative {
            for l in limbs.iter_mut() {
                *l = -*l;
            }
            top = -top + carry(&mut limbs);
        }
        let mut digits = [0u64; LIMBS + 1];
        for (d, l) in digits.iter_mut().zip(limbs.iter()) {
            *d = *l as u64;
        }
        digits[LIMBS] = top as u64;
        (negative, digits)
    }

    pub fn is_zero(&self) -> bool {
        let (_, digits) = self.sign_magnitude();
        digits.iter().all(|&d| d == 0)
    }

    pub fn signum(&self) -> i8 {
        let (negative, digits) = self.sign_magnitude();
        if digits.iter().all(|&d| d == 0) {
            0
        } else if negative {
            -1
        } else {
            1
        }
    }

    /// The sum as `numerator · 2^scale_exponent()`.
    pub fn numerator(&self) -> BigInt {
        let (negative, digits) = self.sign_magnitude();
        let words: Vec<u32> = digits.iter().map(|&d| d as u32).collect();
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        BigInt::from_slice(sign, &words)
    }

    pub const fn scale_exponent() -> i32 {
        LSB_EXP
    }

    /// Round-to-nearest-even into `fmt`, returned as the (exactly
    /// representable) binary64 value. Overflow yields ±infinity.
    ///
    /// Supports formats no wider than binary64.
    pub fn round_to(&self, fmt: FloatFormat) -> f64 {
        assert!(fmt.precision <= 53 && fmt.exp_min >= FloatFormat::BINARY64.exp_min);
        let (negative, digits) = self.sign_magnitude();
        let signed = |v: f64| if negative { -v } else { v };
        let Some(msb) = highest_bit(&digits) else {
            return 0.0;
        };
        let p = fmt.precision as i32;
        let exp = msb as i32 + LSB_EXP;
        let quantum = (exp - (p - 1)).max(fmt.exp_min - (p - 1));
        let shift = (quantum - LSB_EXP) as usize;
        let mut mantissa = extract_bits(&digits, shift, msb + 1);
        if shift > 0 && bit(&digits, shift - 1) {
            let sticky = shift > 1 && any_below(&digits, shift - 1);
            if sticky || mantissa & 1 == 1 {
                mantissa += 1;
            }
        }
        if mantissa == 0 {
            return signed(0.0);
        }
        let top = 63 - mantissa.leading_zeros() as i32 + quantum;
        if top > fmt.exp_max {
            return signed(f64::INFINITY);
        }
        signed(scale_pow2(mantissa as f64, quantum))
    }

    pub fn round<T: WorkingFloat>(&self) -> T {
        T::from_f64(self.round_to(T::FORMAT))
    }

    pub fn to_f64(&self) -> f64 {
        self.round_to(FloatFormat::BINARY64)
    }

    /// `|self - x|`, computed exactly then rounded once to binary64.
    pub fn abs_diff(&self, x: f64) -> Result<f64, NonFiniteInput> {
        let mut d = self.clone();
        d.add(-x)?;
        Ok(d.to_f64().abs())
    }
}

impl PartialEq for ExactSum {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_exact(other) == Ordering::Equal
    }
}

impl ExactSum {
    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        let mut d = self.clone();
        for (l, r) in d.limbs.iter_mut().zip(other.limbs.iter()) {
            *l -= r;
        }
        d.signum().cmp(&0)
    }
}

impl fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactSum({} * 2^{})", self.numerator(), LSB_EXP)
    }
}

/// Propagates carries so limbs `0..LIMBS-1` lie in `[0, 2^32)`; returns the
/// carry out of the top limb folded back as the top limb's overflow.
fn carry(limbs: &mut [i64; LIMBS]) -> i64 {
    let mut c = 0i64;
    for l in limbs.iter_mut() {
        let v = *l + c;
        c = v >> DIGIT_BITS;
        *l = v & DIGIT_MASK;
    }
    c
}

fn highest_bit(digits: &[u64]) -> Option<usize> {
    digits
        .iter()
        .enumerate()
        .rev()
        .find(|(_, &d)| d != 0)
        .map(|(i, &d)| i * DIGIT_BITS + 63 - d.leading_zeros() as usize)
}

#[inline]
fn bit(digits: &[u64], i: usize) -> bool {
    (digits[i / DIGIT_BITS] >> (i % DIGIT_BITS)) & 1 == 1
}

/// Bits `[lo, hi)` as an integer; callers keep `hi - lo <= 64`.
fn extract_bits(digits: &[u64], lo: usize, hi: usize) -> u64 {
    let mut out = 0u64;
    for i in (lo..hi).rev() {
        out = (out << 1) | bit(digits, i) as u64;
    }
    out
}

fn any_below(digits: &[u64], i: usize) -> bool {
    let limb = i / DIGIT_BITS;
    let partial = digits[limb] & ((1u64 << (i % DIGIT_BITS)) - 1);
    partial != 0 || digits[..limb].iter().any(|&d| d != 0)
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1074..=1023).contains(&k));
    if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// `m · 2^q` for a result known to be representable.
fn scale_pow2(m: f64, q: i32) -> f64 {
    if q < -1022 {
        m * pow2(q + 600) * pow2(-600)
    } else if q > 1023 {
        m * pow2(q - 600) * pow2(600)
    } else {
        m * pow2(q)
    }
}
