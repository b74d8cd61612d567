//! Seeded generators for ill-conditioned vectors and matrices.
//!
//! Streams come from a pinned SplitMix64 recurrence, and every draw is turned
//! into a value by a fixed recipe, so the same `(seed, parameters)` produce the
//! same bits on every platform and thread count.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::float_core::WorkingFloat;
use crate::kernels::Matrix;
use crate::summation::ExactSum;

/// SplitMix64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Stream for worker `rank` of a parallel generator.
    pub fn for_rank(seed: u64, rank: u64) -> Self {
        Self::new(seed ^ rank)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..bound` by multiply-high.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Top bit of the next draw.
    pub fn next_negative(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MagnitudeClass {
    Large,
    Medium,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeProfile {
    pub frac_large: f64,
    pub large_scale: f64,
    pub medium_scale: f64,
    pub small_scale: f64,
    pub sign_mix: bool,
}

impl MagnitudeProfile {
    pub fn with_large_fraction(frac_large: f64) -> Self {
        assert!((0.0..=1.0).contains(&frac_large), "fraction must lie in [0, 1]");
        Self {
            frac_large,
            large_scale: 1e7,
            medium_scale: 1.0,
            small_scale: 1e-7,
            sign_mix: true,
        }
    }

    /// 30% large values among medium and small ones.
    pub fn ill_conditioned() -> Self {
        Self::with_large_fraction(0.3)
    }

    /// Half large values.
    pub fn half_large() -> Self {
        Self::with_large_fraction(0.5)
    }

    /// Only `±[1, 10)` values: no large draws and the small class shares the
    /// medium scale.
    pub fn medium_only() -> Self {
        Self {
            small_scale: 1.0,
            ..Self::with_large_fraction(0.0)
        }
    }

    /// Exact class sizes for `n` draws: `floor(frac_large·n)` large, the
    /// remainder split with medium taking the odd one.
    pub fn class_counts(&self, n: usize) -> (usize, usize, usize) {
        let large = ((self.frac_large * n as f64).floor() as usize).min(n);
        let rest = n - large;
        (large, rest.div_ceil(2), rest / 2)
    }

    fn scale(&self, class: MagnitudeClass) -> f64 {
        match class {
            MagnitudeClass::Large => self.large_scale,
            MagnitudeClass::Medium => self.medium_scale,
            MagnitudeClass::Small => self.small_scale,
        }
    }

    /// Class of a generated value by the lower end of its decade.
    pub fn classify(&self, x: f64) -> MagnitudeClass {
        let a = x.abs();
        if a >= self.large_scale {
            MagnitudeClass::Large
        } else if a >= self.medium_scale {
            MagnitudeClass::Medium
        } else {
            MagnitudeClass::Small
        }
    }
}

/// Counts per magnitude class.
pub fn audit<T: WorkingFloat>(xs: &[T], profile: &MagnitudeProfile) -> (usize, usize, usize) {
    xs.iter().fold((0, 0, 0), |(l, m, s), x| match profile.classify(x.to_f64()) {
        MagnitudeClass::Large => (l + 1, m, s),
        MagnitudeClass::Medium => (l, m + 1, s),
        MagnitudeClass::Small => (l, m, s + 1),
    })
}

fn draw_value(rng: &mut Rng, scale: f64, sign_mix: bool) -> f64 {
    let magnitude = (1.0 + 9.0 * rng.next_f64()) * scale;
    if sign_mix && rng.next_negative() {
        -magnitude
    } else {
        magnitude
    }
}

fn gen_classes(n: usize, profile: &MagnitudeProfile, rng: &mut Rng) -> Vec<MagnitudeClass> {
    let (large, medium, small) = profile.class_counts(n);
    let mut classes = Vec::with_capacity(n);
    classes.extend(std::iter::repeat_n(MagnitudeClass::Large, large));
    classes.extend(std::iter::repeat_n(MagnitudeClass::Medium, medium));
    classes.extend(std::iter::repeat_n(MagnitudeClass::Small, small));
    // Fisher-Yates, high index first.
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        classes.swap(i, j);
    }
    classes
}

/// Values of magnitude `[1, 10)·scale` with exact per-class counts in shuffled
/// positions. Each value is drawn in binary64 and rounded once to `T`.
pub fn gen_vector<T: WorkingFloat>(n: usize, profile: &MagnitudeProfile, seed: u64) -> Vec<T> {
    let mut rng = Rng::new(seed);
    gen_classes(n, profile, &mut rng)
        .into_iter()
        .map(|c| T::from_f64(draw_value(&mut rng, profile.scale(c), profile.sign_mix)))
        .collect()
}

/// `n × n` matrix from one `gen_vector` stream, row-major.
///
/// With `diagonal_boost`, each diagonal entry grows in magnitude by the
/// largest absolute row sum, which makes every row strictly diagonally
/// dominant and keeps unpivoted LU away from small pivots.
pub fn gen_matrix<T: WorkingFloat>(
    n: usize,
    profile: &MagnitudeProfile,
    seed: u64,
    diagonal_boost: bool,
) -> Matrix<T> {
    let mut m = Matrix::<T>::from_vec(n, n, gen_vector(n * n, profile, seed))
        .expect("generated entries are finite");
    if diagonal_boost {
        let boost = (0..n)
            .map(|i| m.row(i).iter().map(|x| x.to_f64().abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        for i in 0..n {
            let d = m[(i, i)];
            let mut boosted = T::from_f64(d.to_f64().abs() + boost);
            while !row_dominated_by(m.row(i), i, boosted) {
                boosted = boosted.next_up();
            }
            m[(i, i)] = if d.is_sign_negative() { -boosted } else { boosted };
        }
    }
    m
}

/// Exact test of `|diag| > sum_{j != i} |row[j]|`.
fn row_dominated_by<T: WorkingFloat>(row: &[T], i: usize, diag: T) -> bool {
    let mut acc = ExactSum::new();
    for (j, x) in row.iter().enumerate() {
        if j != i {
            acc.add(x.to_f64().abs()).expect("finite");
        }
    }
    acc.add(-diag.to_f64().abs()).expect("finite");
    acc.signum() < 0
}

pub fn is_strictly_diagonally_dominant<T: WorkingFloat>(a: &Matrix<T>) -> Option<usize> {
    (0..a.rows()).find(|&i| !row_dominated_by(a.row(i), i, a[(i, i)]))
}

/// A diagonally dominant system close to the dominance boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSystem<T: WorkingFloat> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub x_true: Vec<T>,
}

const X_TRUE_STREAM: u64 = 0x5851_F42D_4C95_7F2D;

/// Off-diagonals from the 30%-large profile, `a_ii = ±(1+delta)·Σ_{j≠i}|a_ij|`,
/// `x_true` from the medium profile, and `b = A·x_true` rounded once.
pub fn gen_jacobi_system<T: WorkingFloat>(n: usize, delta: f64, seed: u64) -> JacobiSystem<T> {
    assert!(delta > 0.0, "delta must be positive");
    let profile = MagnitudeProfile::ill_conditioned();
    let mut a = Matrix::<T>::from_vec(n, n, gen_vector(n * n, &profile, seed)).expect("finite");
    let mut sign_rng = Rng::new(seed.rotate_left(17) ^ 0xD1B5_4A32_D192_ED03);
    for i in 0..n {
        let off: f64 = {
            let mut acc = ExactSum::new();
            for (j, x) in a.row(i).iter().enumerate() {
                if j != i {
                    acc.add(x.to_f64().abs()).expect("finite");
                }
            }
            acc.to_f64()
        };
        let mut diag = T::from_f64((1.0 + delta) * off);
        if n == 1 {
            diag = T::ONE;
        }
        while !row_dominated_by(a.row(i), i, diag) {
            diag = diag.next_up();
        }
        a[(i, i)] = if sign_rng.next_negative() { -diag } else { diag };
    }
    let x_true: Vec<T> = gen_vector(n, &MagnitudeProfile::medium_only(), seed ^ X_TRUE_STREAM);
    let b = exact_mat_vec(&a, &x_true).into_iter().map(T::from_f64).collect();
    JacobiSystem { a, b, x_true }
}

/// `A·x` with exact accumulation, rounded once to binary64.
pub fn exact_mat_vec<T: WorkingFloat>(a: &Matrix<T>, x: &[T]) -> Vec<f64> {
    assert_eq!(a.cols(), x.len());
    (0..a.rows())
        .map(|i| {
            let mut acc = ExactSum::new();
            for (aij, xj) in a.row(i).iter().zip(x) {
                acc.add_product(aij.to_f64(), xj.to_f64()).expect("finite product");
            }
            acc.to_f64()
        })
        .collect()
}

/// `d` on the diagonal, `0.01` elsewhere.
pub fn gen_power_matrix<T: WorkingFloat>(n: usize, d: f64) -> Matrix<T> {
    assert!(d > 0.0, "diagonal must be positive");
    let off = T::from_f64(0.01);
    let diag = T::from_f64(d);
    Matrix::from_fn(n, n, |i, j| if i == j { diag } else { off })
}

/// Dominant eigenvalue of [`gen_power_matrix`] in real arithmetic.
pub fn power_matrix_eigenvalue(n: usize, d: f64) -> f64 {
    d - 0.01 + 0.01 * n as f64
}

pub const DATASET_MAGIC: &[u8; 8] = b"EXSUMDAT";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset header is not EXSUMDAT")]
    BadMagic,
    #[error("payload of {len} bytes is not a whole number of {width}-byte values")]
    Truncated { len: usize, width: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `EXSUMDAT` followed by little-endian values.
pub fn write_dataset<T: WorkingFloat, W: Write>(mut w: W, xs: &[T]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(8 + xs.len() * T::BYTES);
    buf.extend_from_slice(DATASET_MAGIC);
    for &x in xs {
        x.write_le(&mut buf);
    }
    w.write_all(&buf)?;
    w.flush()
}

pub fn read_dataset<T: WorkingFloat, R: Read>(mut r: R) -> Result<Vec<T>, DatasetError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 8 || &buf[..8] != DATASET_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let payload = &buf[8..];
    if payload.len() % T::BYTES != 0 {
        return Err(DatasetError::Truncated {
            len: payload.len(),
            width: T::BYTES,
        });
    }
    Ok(payload.chunks_exact(T::BYTES).map(T::read_le).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // Published SplitMix64 outputs for seed 0.
        let mut rng = Rng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn thirty_percent_large() {
        let p = MagnitudeProfile::ill_conditioned();
        let v: Vec<f32> = gen_vector(10, &p, 7);
        assert_eq!(audit(&v, &p), (3, 4, 3));
        assert!(gen_vector::<f64>(0, &p, 7).is_empty());
    }

    #[test]
    fn vectors_are_deterministic() {
        let p = MagnitudeProfile::half_large();
        let a: Vec<f64> = gen_vector(257, &p, 99);
        let b: Vec<f64> = gen_vector(257, &p, 99);
        let c: Vec<f64> = gen_vector(257, &p, 100);
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, c);
    }

    #[test]
    fn magnitudes_and_signs() {
        let p = MagnitudeProfile::ill_conditioned();
        let v: Vec<f64> = gen_vector(3000, &p, 1);
        assert!(v.iter().any(|x| *x < 0.0) && v.iter().any(|x| *x > 0.0));
        for x in &v {
            let a = x.abs();
            let ok = (1e7..1e8).contains(&a) || (1.0..10.0).contains(&a) || (1e-7..1e-6).contains(&a);
            assert!(ok, "{x}");
        }
        let unsigned = MagnitudeProfile {
            sign_mix: false,
            ..p
        };
        assert!(gen_vector::<f32>(500, &unsigned, 3).iter().all(|x| *x > 0.0));
    }

    #[test]
    fn matrix_examples() {
        let m: Matrix<f32> = gen_matrix(2, &MagnitudeProfile::medium_only(), 5, false);
        assert_eq!(m.as_slice().len(), 4);
        assert!(m.as_slice().iter().all(|x| (1.0..=10.0).contains(&x.abs())));
        let a: Matrix<f32> = gen_matrix(30, &MagnitudeProfile::ill_conditioned(), 11, true);
        assert_eq!(is_strictly_diagonally_dominant(&a), None);
        let b: Matrix<f32> = gen_matrix(30, &MagnitudeProfile::ill_conditioned(), 11, true);
        assert_eq!(a, b);
    }

    #[test]
    fn jacobi_system_is_near_boundary() {
        let sys: JacobiSystem<f32> = gen_jacobi_system(10, 1e-3, 3);
        assert_eq!(is_strictly_diagonally_dominant(&sys.a), None);
        let ratio = (0..10)
            .map(|i| {
                let off: f64 = (0..10).filter(|&j| j != i).map(|j| sys.a[(i, j)].abs() as f64).sum();
                off / sys.a[(i, i)].abs() as f64
            })
            .fold(0.0f64, f64::max);
        assert!(ratio > 0.999 && ratio < 1.0, "{ratio}");
        let recomputed: Vec<f32> = exact_mat_vec(&sys.a, &sys.x_true).into_iter().map(|v| v as f32).collect();
        assert_eq!(recomputed, sys.b);
    }

    #[test]
    fn power_matrix_layout() {
        let m: Matrix<f64> = gen_power_matrix(2, 300.0);
        assert_eq!(m.as_slice(), &[300.0, 0.01, 0.01, 300.0]);
        assert!((power_matrix_eigenvalue(100, 300.0) - 300.99).abs() < 1e-12);
    }

    #[test]
    fn dataset_round_trip() {
        let v: Vec<f32> = gen_vector(33, &MagnitudeProfile::ill_conditioned(), 4);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &v).unwrap();
        assert_eq!(&buf[..8], b"EXSUMDAT");
        assert_eq!(buf.len(), 8 + 33 * 4);
        assert_eq!(&buf[8..12], &v[0].to_le_bytes());
        let back: Vec<f32> = read_dataset(&buf[..]).unwrap();
        assert_eq!(back, v);
        assert!(matches!(read_dataset::<f64, _>(&buf[..]), Err(DatasetError::Truncated { .. })));
        assert!(matches!(read_dataset::<f32, _>(&b"NOTMAGIC"[..]), Err(DatasetError::BadMagic)));
    }
}
