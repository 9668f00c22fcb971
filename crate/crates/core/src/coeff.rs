//! Exact coefficient arithmetic: arbitrary-precision integers and rationals,
//! the field with two elements, dyadic rationals, and the group Q/Z.
//!
//! Q/Z is deliberately modeled as a group with an integer scalar action only;
//! multiplying two Q/Z values is a type error surfaced as
//! [`EngineError::NonRingCoefficients`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// n! as an exact integer.
pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=u64::from(n) {
        acc *= i;
    }
    acc
}

/// The field Z/2Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2(pub bool);

impl F2 {
    pub const ZERO: F2 = F2(false);
    pub const ONE: F2 = F2(true);

    pub fn add(self, other: F2) -> F2 {
        F2(self.0 ^ other.0)
    }

    pub fn mul(self, other: F2) -> F2 {
        F2(self.0 & other.0)
    }

    pub fn is_zero(self) -> bool {
        !self.0
    }

    /// Coefficient-wise reduction of an integer.
    pub fn from_int(n: &BigInt) -> F2 {
        F2(n.is_odd())
    }
}

impl fmt::Display for F2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(self.0))
    }
}

/// An element of Q/Z, stored as its canonical representative in `[0, 1)`.
///
/// Equality is structural, which the canonical representative makes sound.
/// Only the integer scalar action is provided.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QmodZ {
    rep: BigRational,
}

impl QmodZ {
    pub fn new(q: BigRational) -> QmodZ {
        QmodZ {
            rep: &q - q.floor(),
        }
    }

    pub fn zero() -> QmodZ {
        QmodZ {
            rep: BigRational::zero(),
        }
    }

    pub fn half() -> QmodZ {
        QmodZ {
            rep: BigRational::new(BigInt::one(), BigInt::from(2)),
        }
    }

    pub fn representative(&self) -> &BigRational {
        &self.rep
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_zero()
    }

    pub fn add(&self, other: &QmodZ) -> QmodZ {
        QmodZ::new(&self.rep + &other.rep)
    }

    pub fn neg(&self) -> QmodZ {
        QmodZ::new(-&self.rep)
    }

    pub fn scalar_mul(&self, n: &BigInt) -> QmodZ {
        QmodZ::new(&self.rep * n)
    }
}

impl fmt::Display for QmodZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod Z", rational_text(&self.rep))
    }
}

/// Canonical reduction Q -> Q/Z. Its kernel is exactly Z.
pub fn reduce_mod_z(q: &BigRational) -> QmodZ {
    QmodZ::new(q.clone())
}

/// The coefficient map Z/2Z -> Q/Z sending 1 to 1/2.
pub fn half_lift(b: F2) -> QmodZ {
    if b.0 {
        QmodZ::half()
    } else {
        QmodZ::zero()
    }
}

/// Which coefficient system a ring presentation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoeffTag {
    Z,
    Q,
    F2,
    ZHalf,
    QmodZ,
}

impl CoeffTag {
    pub fn token(self) -> &'static str {
        match self {
            CoeffTag::Z => "Z",
            CoeffTag::Q => "Q",
            CoeffTag::F2 => "F2",
            CoeffTag::ZHalf => "Zhalf",
            CoeffTag::QmodZ => "QmodZ",
        }
    }

    pub fn parse(s: &str) -> Result<CoeffTag> {
        match s {
            "Z" => Ok(CoeffTag::Z),
            "Q" => Ok(CoeffTag::Q),
            "F2" => Ok(CoeffTag::F2),
            "Zhalf" | "Z1/2" | "ZHalf" => Ok(CoeffTag::ZHalf),
            "QmodZ" | "Q/Z" => Ok(CoeffTag::QmodZ),
            other => Err(EngineError::UnknownCoeffTag(other.to_string())),
        }
    }

    /// Tags whose values embed into rational cohomology classes of the
    /// integral lattice: Z, Z[1/2] and Q itself.
    pub fn is_lattice_family(self) -> bool {
        matches!(self, CoeffTag::Z | CoeffTag::Q | CoeffTag::ZHalf)
    }
}

impl fmt::Display for CoeffTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

fn rational_text(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A scalar in one of the supported coefficient systems.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Coeff {
    Int(BigInt),
    Rat(BigRational),
    F2(F2),
    QmodZ(QmodZ),
}

impl Coeff {
    pub fn zero(tag: CoeffTag) -> Coeff {
        match tag {
            CoeffTag::Z => Coeff::Int(BigInt::zero()),
            CoeffTag::Q | CoeffTag::ZHalf => Coeff::Rat(BigRational::zero()),
            CoeffTag::F2 => Coeff::F2(F2::ZERO),
            CoeffTag::QmodZ => Coeff::QmodZ(QmodZ::zero()),
        }
    }

    pub fn one(tag: CoeffTag) -> Coeff {
        match tag {
            CoeffTag::Z => Coeff::Int(BigInt::one()),
            CoeffTag::Q | CoeffTag::ZHalf => Coeff::Rat(BigRational::one()),
            CoeffTag::F2 => Coeff::F2(F2::ONE),
            // Q/Z has no multiplicative unit; the "coefficient one" slot is
            // only used when building elements term by term, never for
            // multiplication. 1 mod Z is 0, so insist callers are explicit.
            CoeffTag::QmodZ => Coeff::QmodZ(QmodZ::zero()),
        }
    }

    pub fn from_int(tag: CoeffTag, n: BigInt) -> Coeff {
        match tag {
            CoeffTag::Z => Coeff::Int(n),
            CoeffTag::Q | CoeffTag::ZHalf => Coeff::Rat(BigRational::from_integer(n)),
            CoeffTag::F2 => Coeff::F2(F2::from_int(&n)),
            CoeffTag::QmodZ => Coeff::QmodZ(QmodZ::zero()),
        }
    }

    /// Interpret a rational scalar in the given coefficient system.
    pub fn from_rational(tag: CoeffTag, q: BigRational) -> Result<Coeff> {
        match tag {
            CoeffTag::Z => {
                if q.denom().is_one() {
                    Ok(Coeff::Int(q.to_integer()))
                } else {
                    Err(EngineError::NonIntegralCoefficient {
                        coeff: rational_text(&q),
                    })
                }
            }
            CoeffTag::Q => Ok(Coeff::Rat(q)),
            CoeffTag::ZHalf => {
                if is_dyadic(&q) {
                    Ok(Coeff::Rat(q))
                } else {
                    Err(EngineError::NonIntegralCoefficient {
                        coeff: rational_text(&q),
                    })
                }
            }
            CoeffTag::F2 => {
                if q.denom().is_one() {
                    Ok(Coeff::F2(F2::from_int(q.numer())))
                } else {
                    Err(EngineError::NonIntegralCoefficient {
                        coeff: rational_text(&q),
                    })
                }
            }
            CoeffTag::QmodZ => Ok(Coeff::QmodZ(QmodZ::new(q))),
        }
    }

    pub fn tag_kind(&self) -> &'static str {
        match self {
            Coeff::Int(_) => "Z",
            Coeff::Rat(_) => "Q",
            Coeff::F2(_) => "F2",
            Coeff::QmodZ(_) => "Q/Z",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Int(n) => n.is_zero(),
            Coeff::Rat(q) => q.is_zero(),
            Coeff::F2(b) => b.is_zero(),
            Coeff::QmodZ(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Coeff::Int(n) => n.is_one(),
            Coeff::Rat(q) => q.is_one(),
            Coeff::F2(b) => b.0,
            Coeff::QmodZ(_) => false,
        }
    }

    /// The rational value, when the scalar lives in the lattice family.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Coeff::Int(n) => Some(BigRational::from_integer(n.clone())),
            Coeff::Rat(q) => Some(q.clone()),
            _ => None,
        }
    }

    pub fn add(&self, other: &Coeff) -> Result<Coeff> {
        match (self, other) {
            (Coeff::Int(a), Coeff::Int(b)) => Ok(Coeff::Int(a + b)),
            (Coeff::Rat(a), Coeff::Rat(b)) => Ok(Coeff::Rat(a + b)),
            (Coeff::F2(a), Coeff::F2(b)) => Ok(Coeff::F2(a.add(*b))),
            (Coeff::QmodZ(a), Coeff::QmodZ(b)) => Ok(Coeff::QmodZ(a.add(b))),
            _ => Err(EngineError::Internal(format!(
                "cannot add {} and {} coefficients",
                self.tag_kind(),
                other.tag_kind()
            ))),
        }
    }

    pub fn neg(&self) -> Coeff {
        match self {
            Coeff::Int(n) => Coeff::Int(-n),
            Coeff::Rat(q) => Coeff::Rat(-q),
            Coeff::F2(b) => Coeff::F2(*b),
            Coeff::QmodZ(q) => Coeff::QmodZ(q.neg()),
        }
    }

    /// Ring multiplication where it exists, plus the integer action on Q/Z.
    pub fn mul(&self, other: &Coeff) -> Result<Coeff> {
        match (self, other) {
            (Coeff::Int(a), Coeff::Int(b)) => Ok(Coeff::Int(a * b)),
            (Coeff::Rat(a), Coeff::Rat(b)) => Ok(Coeff::Rat(a * b)),
            (Coeff::Int(n), Coeff::Rat(q)) | (Coeff::Rat(q), Coeff::Int(n)) => {
                Ok(Coeff::Rat(q * BigRational::from_integer(n.clone())))
            }
            (Coeff::F2(a), Coeff::F2(b)) => Ok(Coeff::F2(a.mul(*b))),
            (Coeff::Int(n), Coeff::QmodZ(q)) | (Coeff::QmodZ(q), Coeff::Int(n)) => {
                Ok(Coeff::QmodZ(q.scalar_mul(n)))
            }
            (Coeff::QmodZ(_), _) | (_, Coeff::QmodZ(_)) => Err(EngineError::NonRingCoefficients),
            _ => Err(EngineError::Internal(format!(
                "cannot multiply {} and {} coefficients",
                self.tag_kind(),
                other.tag_kind()
            ))),
        }
    }

    /// True when the scalar is an even integer; used to discharge formal
    /// 2-torsion marks.
    pub fn is_even_integer(&self) -> bool {
        match self {
            Coeff::Int(n) => n.is_even(),
            Coeff::Rat(q) => q.denom().is_one() && q.numer().is_even(),
            _ => false,
        }
    }

    /// Scalar text as it appears inside the canonical element form.
    pub fn text(&self) -> String {
        match self {
            Coeff::Int(n) => n.to_string(),
            Coeff::Rat(q) => rational_text(q),
            Coeff::F2(b) => b.to_string(),
            Coeff::QmodZ(q) => rational_text(q.representative()),
        }
    }

    /// Sign-magnitude split used by the pretty-printer. Q/Z representatives
    /// are canonical in [0,1), hence never negative.
    pub fn is_negative(&self) -> bool {
        match self {
            Coeff::Int(n) => n.is_negative(),
            Coeff::Rat(q) => q.is_negative(),
            _ => false,
        }
    }

    pub fn abs(&self) -> Coeff {
        match self {
            Coeff::Int(n) => Coeff::Int(n.abs()),
            Coeff::Rat(q) => Coeff::Rat(q.abs()),
            other => other.clone(),
        }
    }
}

pub fn is_dyadic(q: &BigRational) -> bool {
    let mut d = q.denom().clone();
    while d.is_even() {
        d /= 2;
    }
    d.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn factorial_small_values() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(5), BigInt::from(120));
    }

    #[test]
    fn factorial_twenty_matches_repeated_multiplication() {
        let mut by_hand = BigInt::one();
        for i in 1..=20u64 {
            by_hand = by_hand * i;
        }
        assert_eq!(factorial(20), by_hand);
        assert_eq!(factorial(20).to_string(), "2432902008176640000");
    }

    #[test]
    fn factorial_recursion_step() {
        for n in 0..25u32 {
            assert_eq!(factorial(n) * BigInt::from(n + 1), factorial(n + 1));
        }
    }

    #[test]
    fn reduce_mod_z_canonicalizes() {
        assert_eq!(reduce_mod_z(&rat(3, 2)), QmodZ::half());
        assert!(reduce_mod_z(&rat(2, 1)).is_zero());
        assert_eq!(reduce_mod_z(&rat(-1, 2)), QmodZ::half());
    }

    #[test]
    fn reduce_mod_z_is_homomorphism_with_kernel_z() {
        let a = rat(7, 3);
        let b = rat(-5, 6);
        assert_eq!(
            reduce_mod_z(&(&a + &b)),
            reduce_mod_z(&a).add(&reduce_mod_z(&b))
        );
        for n in -4..=4i64 {
            assert!(reduce_mod_z(&rat(n, 1)).is_zero());
        }
        assert!(!reduce_mod_z(&rat(1, 3)).is_zero());
    }

    #[test]
    fn half_lift_values_and_torsion() {
        assert!(half_lift(F2::ZERO).is_zero());
        assert_eq!(half_lift(F2::ONE), QmodZ::half());
        assert!(half_lift(F2::ONE).add(&half_lift(F2::ONE)).is_zero());
        let two = BigInt::from(2);
        assert!(half_lift(F2::ONE).scalar_mul(&two).is_zero());
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        let a = rat(22, 7);
        let b = rat(-355, 113);
        assert_eq!(&(&a + &b) - &b, a);
    }

    #[test]
    fn qmodz_rejects_ring_multiplication() {
        let h = Coeff::QmodZ(QmodZ::half());
        assert!(matches!(
            h.mul(&h),
            Err(EngineError::NonRingCoefficients)
        ));
        // but the integer action works
        let two = Coeff::Int(BigInt::from(2));
        assert!(two.mul(&h).unwrap().is_zero());
    }

    #[test]
    fn dyadic_check() {
        assert!(is_dyadic(&rat(3, 8)));
        assert!(is_dyadic(&rat(5, 1)));
        assert!(!is_dyadic(&rat(1, 6)));
        assert!(Coeff::from_rational(CoeffTag::ZHalf, rat(1, 6)).is_err());
        assert!(Coeff::from_rational(CoeffTag::ZHalf, rat(7, 4)).is_ok());
    }

    #[test]
    fn qmodz_display_form() {
        assert_eq!(QmodZ::half().to_string(), "1/2 mod Z");
        assert_eq!(QmodZ::zero().to_string(), "0 mod Z");
    }
}
