//! Error type shared by every engine layer.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("elements live in different ring presentations: {left} vs {right}")]
    PresentationMismatch { left: String, right: String },

    #[error("coefficients in Q/Z form a group, not a ring; the requested product is undefined")]
    NonRingCoefficients,

    #[error("no cohomology ring is registered for {space} with {coeff} coefficients")]
    UnknownEntry { space: String, coeff: String },

    #[error("{space} has no Z of connected components")]
    NotAComponentSpace { space: String },

    #[error("no loop rule is registered for {ring}")]
    NoLoopRule { ring: String },

    #[error("loop rule for {ring} has no image for the generator {gen}")]
    NoLoopImage { ring: String, gen: String },

    #[error("map {map} consumes elements of {expected}, got {found}")]
    SourceMismatch {
        map: String,
        expected: String,
        found: String,
    },

    #[error("map {map} has no registered image for {what}")]
    UnregisteredMonomial { map: String, what: String },

    #[error("mod-2 reduction is not registered for {ring}")]
    NoMod2Rule { ring: String },

    #[error("coefficient {coeff} is not integral")]
    NonIntegralCoefficient { coeff: String },

    #[error("cannot reduce a class carrying an unresolved 2-torsion summand")]
    TorsionObstruction,

    #[error("the formal 2-torsion mark is not supported in {ring}")]
    TorsionUnsupported { ring: String },

    #[error("quotient rewriting failed to terminate on {monomial}")]
    NonTerminatingRewrite { monomial: String },

    #[error("degree 4k+1-n = {degree} is negative for n={n}, k={k}")]
    DegreeExhausted { n: u32, k: u32, degree: i64 },

    #[error("degree {degree} exceeds the ring cap {cap}")]
    DegreeCapExceeded { degree: u32, cap: u32 },

    #[error("Chern character components exist in even degrees only, got {degree}")]
    OddDegree { degree: u32 },

    #[error("the formal-roots oracle needs at least {needed} roots, got {got}")]
    InsufficientRoots { needed: u32, got: u32 },

    #[error("unknown generator `{name}` in {ring}")]
    UnknownGenerator { name: String, ring: String },

    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown space `{0}`")]
    UnknownSpace(String),

    #[error("unknown coefficient tag `{0}` (expected Z, Q, F2, Zhalf or QmodZ)")]
    UnknownCoeffTag(String),

    #[error("malformed JSON element: {0}")]
    Json(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
