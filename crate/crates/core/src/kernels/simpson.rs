use std::fmt;
use std::str::FromStr;

use crate::float_core::WorkingFloat;
use crate::parallel::{parallel_sum, ExecPlan};

use super::KernelError;

/// Integrands on `[0, b]`, each scaled by a constant `C` at evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrand {
    Cos,
    /// `1 / (x² + 1)`.
    InvSqPlusOne,
    Tanh,
}

impl Integrand {
    pub const ALL: [Integrand; 3] = [Integrand::Cos, Integrand::InvSqPlusOne, Integrand::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Integrand::Cos => "cos",
            Integrand::InvSqPlusOne => "inv-sq-plus",
            Integrand::Tanh => "tanh",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Integrand::Cos => x.cos(),
            Integrand::InvSqPlusOne => 1.0 / (x * x + 1.0),
            Integrand::Tanh => x.tanh(),
        }
    }

    /// `∫₀ᵇ f(x) dx`.
    pub fn integral(self, b: f64) -> f64 {
        match self {
            Integrand::Cos => b.sin(),
            Integrand::InvSqPlusOne => b.atan(),
            Integrand::Tanh => b.cosh().ln(),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Integrand::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown integrand `{s}` (expected cos, inv-sq-plus or tanh)"))
    }
}

/// Weighted Simpson samples `w_i · C · f(x_i)`, `x_i = i·b/m`, weights
/// `1, 4, 2, 4, ..., 4, 1`. Each sample is evaluated in binary64 and rounded
/// once to `T`.
pub fn simpson_samples<T: WorkingFloat>(f: Integrand, b: f64, m: usize, c: f64) -> Result<Vec<T>, KernelError> {
    if m < 2 || m % 2 == 1 {
        return Err(KernelError::OddSubintervalCount(m));
    }
    let h = b / m as f64;
    (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let v = T::from_f64(w * c * f.eval(i as f64 * h));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(KernelError::NonFiniteInput)
            }
        })
        .collect()
}

/// Composite Simpson approximation of `C · ∫₀ᵇ f(x) dx` with `m` subintervals.
/// The weighted samples are summed by `parallel_sum`, then scaled by `h/3`
/// in working precision.
pub fn simpson_integrate<T: WorkingFloat>(
    f: Integrand,
    b: f64,
    m: usize,
    c: f64,
    plan: &ExecPlan,
) -> Result<T, KernelError> {
    let samples = simpson_samples::<T>(f, b, m, c)?;
    let s = parallel_sum(&samples, plan)?;
    let h3 = T::from_f64(b / m as f64 / 3.0);
    Ok(h3 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summation::SummationStrategy;

    #[test]
    fn rejects_odd_counts() {
        let plan = ExecPlan::sequential(SummationStrategy::Naive);
        assert_eq!(
            simpson_integrate::<f64>(Integrand::Cos, 1.0, 3, 1.0, &plan),
            Err(KernelError::OddSubintervalCount(3))
        );
        assert_eq!(
            simpson_integrate::<f64>(Integrand::Cos, 1.0, 0, 1.0, &plan),
            Err(KernelError::OddSubintervalCount(0))
        );
    }

    #[test]
    fn single_panel_matches_three_point_formula() {
        let b = 0.25;
        let plan = ExecPlan::sequential(SummationStrategy::Naive);
        let got = simpson_integrate::<f64>(Integrand::Cos, b, 2, 1.0, &plan).unwrap();
        let h = b / 2.0;
        let expected = h / 3.0 * (1.0 + 4.0 * h.cos() + b.cos());
        assert!((got - expected).abs() <= 4.0 * f64::EPSILON * expected);
    }

    #[test]
    fn exact_strategy_hits_antiderivatives() {
        let plan = ExecPlan::sequential(SummationStrategy::ExactOracle);
        for f in Integrand::ALL {
            for b in [2.0, 5.0] {
                let got = simpson_integrate::<f64>(f, b, 10_000, 1e6, &plan).unwrap();
                let exact = 1e6 * f.integral(b);
                assert!(((got - exact) / exact).abs() < 1e-9, "{f} b={b}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for f in Integrand::ALL {
            assert_eq!(f.name().parse::<Integrand>().unwrap(), f);
        }
    }
}
