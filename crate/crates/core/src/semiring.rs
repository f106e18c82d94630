//! Semirings in which automata weights are interpreted.
//!
//! Automata store their weights as plain `f64` values in the linear domain;
//! a [`SemiringKind`] tag selects how those numbers combine. Generic
//! algorithms are written against the [`Semiring`] trait and lift the stored
//! weights with [`Semiring::from_weight`].

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub trait Semiring: Copy + fmt::Debug + PartialEq + Send + Sync {
    const COMMUTATIVE: bool;
    const IDEMPOTENT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn plus(self, other: Self) -> Self;
    fn times(self, other: Self) -> Self;

    /// Lift a stored linear-domain weight into the semiring.
    fn from_weight(w: f64) -> Self;
    /// Project back to a linear-domain number.
    fn to_weight(self) -> f64;

    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

/// Ordinary real arithmetic `(+, ×)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl Semiring for Real {
    const COMMUTATIVE: bool = true;
    const IDEMPOTENT: bool = false;

    fn zero() -> Self {
        Real(0.0)
    }
    fn one() -> Self {
        Real(1.0)
    }
    fn plus(self, other: Self) -> Self {
        Real(self.0 + other.0)
    }
    fn times(self, other: Self) -> Self {
        Real(self.0 * other.0)
    }
    fn from_weight(w: f64) -> Self {
        Real(w)
    }
    fn to_weight(self) -> f64 {
        self.0
    }
}

/// Real arithmetic carried out on natural logarithms. Only non-negative
/// weights are representable; `ln 0 = -inf` is the zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogReal(pub f64);

impl Semiring for LogReal {
    const COMMUTATIVE: bool = true;
    const IDEMPOTENT: bool = false;

    fn zero() -> Self {
        LogReal(f64::NEG_INFINITY)
    }
    fn one() -> Self {
        LogReal(0.0)
    }
    fn plus(self, other: Self) -> Self {
        let (hi, lo) = if self.0 >= other.0 {
            (self.0, other.0)
        } else {
            (other.0, self.0)
        };
        if hi == f64::NEG_INFINITY {
            return self;
        }
        LogReal(hi + (lo - hi).exp().ln_1p())
    }
    fn times(self, other: Self) -> Self {
        LogReal(self.0 + other.0)
    }
    fn from_weight(w: f64) -> Self {
        LogReal(w.ln())
    }
    fn to_weight(self) -> f64 {
        self.0.exp()
    }
}

/// `(max, ×)` over non-negative reals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ViterbiMaxTimes(pub f64);

impl Semiring for ViterbiMaxTimes {
    const COMMUTATIVE: bool = true;
    const IDEMPOTENT: bool = true;

    fn zero() -> Self {
        ViterbiMaxTimes(0.0)
    }
    fn one() -> Self {
        ViterbiMaxTimes(1.0)
    }
    fn plus(self, other: Self) -> Self {
        ViterbiMaxTimes(self.0.max(other.0))
    }
    fn times(self, other: Self) -> Self {
        ViterbiMaxTimes(self.0 * other.0)
    }
    fn from_weight(w: f64) -> Self {
        ViterbiMaxTimes(w)
    }
    fn to_weight(self) -> f64 {
        self.0
    }
}

/// `(∨, ∧)`; any nonzero stored weight is `true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boolean(pub bool);

impl Semiring for Boolean {
    const COMMUTATIVE: bool = true;
    const IDEMPOTENT: bool = true;

    fn zero() -> Self {
        Boolean(false)
    }
    fn one() -> Self {
        Boolean(true)
    }
    fn plus(self, other: Self) -> Self {
        Boolean(self.0 || other.0)
    }
    fn times(self, other: Self) -> Self {
        Boolean(self.0 && other.0)
    }
    fn from_weight(w: f64) -> Self {
        Boolean(w != 0.0)
    }
    fn to_weight(self) -> f64 {
        if self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Runtime tag naming one of the provided semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SemiringKind {
    #[default]
    Real,
    Log,
    Viterbi,
    Bool,
}

impl SemiringKind {
    pub fn is_commutative(self) -> bool {
        match self {
            SemiringKind::Real => Real::COMMUTATIVE,
            SemiringKind::Log => LogReal::COMMUTATIVE,
            SemiringKind::Viterbi => ViterbiMaxTimes::COMMUTATIVE,
            SemiringKind::Bool => Boolean::COMMUTATIVE,
        }
    }

    /// Real and log-real both denote real arithmetic.
    pub fn is_real(self) -> bool {
        matches!(self, SemiringKind::Real | SemiringKind::Log)
    }

    /// `a ⊕ b` on linear-domain numbers.
    pub fn plus(self, a: f64, b: f64) -> f64 {
        match self {
            SemiringKind::Real | SemiringKind::Log => a + b,
            SemiringKind::Viterbi => a.max(b),
            SemiringKind::Bool => Boolean::from_weight(a).plus(Boolean::from_weight(b)).to_weight(),
        }
    }

    /// `a ⊗ b` on linear-domain numbers; every provided semiring multiplies.
    pub fn times(self, a: f64, b: f64) -> f64 {
        match self {
            SemiringKind::Bool => Boolean::from_weight(a).times(Boolean::from_weight(b)).to_weight(),
            _ => a * b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Real => "real",
            SemiringKind::Log => "log",
            SemiringKind::Viterbi => "viterbi",
            SemiringKind::Bool => "bool",
        }
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiringKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "real" => Ok(SemiringKind::Real),
            "log" => Ok(SemiringKind::Log),
            "viterbi" => Ok(SemiringKind::Viterbi),
            "bool" => Ok(SemiringKind::Bool),
            other => Err(Error::InvalidModel(format!("unknown semiring `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
    }

    fn laws<S: Semiring>(a: f64, b: f64, c: f64) -> Result<(), TestCaseError> {
        let (x, y, z) = (S::from_weight(a), S::from_weight(b), S::from_weight(c));
        let eq = |l: S, r: S| close(l.to_weight(), r.to_weight());
        prop_assert!(eq(x.plus(y).plus(z), x.plus(y.plus(z))));
        prop_assert!(eq(x.plus(y), y.plus(x)));
        prop_assert!(eq(x.plus(S::zero()), x));
        prop_assert!(eq(x.times(y).times(z), x.times(y.times(z))));
        prop_assert!(eq(x.times(S::one()), x));
        prop_assert!(eq(S::one().times(x), x));
        prop_assert!(eq(x.times(y.plus(z)), x.times(y).plus(x.times(z))));
        prop_assert!(eq(y.plus(z).times(x), y.times(x).plus(z.times(x))));
        prop_assert!(S::zero().times(x).is_zero());
        prop_assert!(x.times(S::zero()).is_zero());
        if S::COMMUTATIVE {
            prop_assert!(eq(x.times(y), y.times(x)));
        }
        if S::IDEMPOTENT {
            prop_assert!(eq(x.plus(x), x));
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn real_laws(a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64) {
            laws::<Real>(a, b, c)?;
        }

        #[test]
        fn log_laws(a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64) {
            laws::<LogReal>(a, b, c)?;
        }

        #[test]
        fn viterbi_laws(a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64) {
            laws::<ViterbiMaxTimes>(a, b, c)?;
        }

        #[test]
        fn bool_laws(a in 0u8..2, b in 0u8..2, c in 0u8..2) {
            laws::<Boolean>(a as f64, b as f64, c as f64)?;
        }
    }

    #[test]
    fn log_zero_is_absorbing() {
        let z = LogReal::zero();
        assert_eq!(z.plus(z), z);
        assert_eq!(LogReal::from_weight(0.5).plus(z).to_weight(), 0.5);
        assert!(close(LogReal::from_weight(0.25).plus(LogReal::from_weight(0.5)).to_weight(), 0.75));
    }

    #[test]
    fn kind_roundtrip() {
        for k in [SemiringKind::Real, SemiringKind::Log, SemiringKind::Viterbi, SemiringKind::Bool] {
            assert_eq!(k.name().parse::<SemiringKind>().unwrap(), k);
        }
        assert!("tropical".parse::<SemiringKind>().is_err());
    }
}
