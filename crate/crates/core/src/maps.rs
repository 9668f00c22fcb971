//! The homomorphism engine: generator-image tables for the canonical maps
//! between the classifying spaces, the loop operator on cohomology, mod-2
//! reduction, and the coefficient map Z/2 -> Q/Z.
//!
//! Maps are stored contravariantly: a map named after the space map
//! `X -> Y` consumes cohomology classes of `Y` and produces classes of `X`.
//! Applications are pure functions over the immutable registry.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::algebra::{Element, Monomial, RingPresentation, TorsionPolicy};
use crate::coeff::{Coeff, CoeffTag, QmodZ};
use crate::error::{EngineError, Result};
use crate::spaces::{Registry, SpaceId};
use crate::symfunc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Extended multiplicatively over monomials.
    RingHom,
    /// Defined monomial by monomial; no products are formed.
    AdditiveRename,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Z, Z[1/2] or Q coefficients (the integral lattice and its extensions).
    Lattice,
    F2,
    QmodZ,
}

impl Family {
    fn admits(self, tag: CoeffTag) -> bool {
        match self {
            Family::Lattice => tag.is_lattice_family(),
            Family::F2 => tag == CoeffTag::F2,
            Family::QmodZ => tag == CoeffTag::QmodZ,
        }
    }
}

/// The image of one generator family under a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageSpec {
    /// The zero class, optionally "plus an unspecified 2-torsion summand".
    Zero { torsion: bool },
    /// `scale` times the same-degree generator named `base` in the target.
    Single {
        base: &'static str,
        scale: i64,
        torsion: bool,
    },
    /// The component class: `ch0 -> scale * ch0`.
    Ch0 { scale: i64 },
    /// `sum_{i+j=deg/2} (-1)^i c_{2i} c_{2j}` with `c_0 = 1`.
    AlternatingSquareSum,
    /// Twice an integral class that is not itself registered; enough to
    /// decide divisibility questions, not to expand the image.
    EvenOpaque,
    /// A degree-(4k+1) generator renamed to the monomial `w_{2k} w_{2k+1}`.
    PairRename { base: &'static str },
}

#[derive(Debug, Clone, Copy)]
pub struct FamilyRule {
    pub base: &'static str,
    pub modulus: u32,
    pub residue: u32,
    pub image: ImageSpec,
}

impl FamilyRule {
    fn matches(&self, gen_base: &str, degree: u32) -> bool {
        gen_base == self.base && degree % self.modulus == self.residue
    }
}

/// A graded homomorphism (or additive rule) given by generator images.
#[derive(Debug, Clone)]
pub struct GenMap {
    pub name: &'static str,
    pub space_map: &'static str,
    /// Cohomological source: the codomain of the underlying space map.
    pub source_space: SpaceId,
    pub target_space: SpaceId,
    pub family: Family,
    pub kind: MapKind,
    pub rules: Vec<FamilyRule>,
    pub note: &'static str,
}

/// Result of a pullback that tolerates the partially-registered rows:
/// `exact` collects the fully expanded terms; `deferred_even` records that
/// the remaining terms are twice integral classes (and integral overall),
/// which is all the Q/Z pipeline needs to discharge them.
#[derive(Debug, Clone)]
pub struct Pullback {
    pub exact: Element,
    pub deferred_even: bool,
}

impl GenMap {
    fn rule_for(&self, base: &str, degree: u32) -> Option<&FamilyRule> {
        self.rules.iter().find(|r| r.matches(base, degree))
    }

    fn target_ring(&self, reg: &Registry, src_tag: CoeffTag) -> Result<Arc<RingPresentation>> {
        match self.family {
            Family::F2 => reg.ring_of(self.target_space, CoeffTag::F2),
            Family::QmodZ => reg.ring_of(self.target_space, CoeffTag::QmodZ),
            Family::Lattice => match reg.ring_of(self.target_space, src_tag) {
                Ok(r) => Ok(r),
                // dyadic coefficients embed rationally when the target has
                // no Z[1/2] presentation of its own
                Err(EngineError::UnknownEntry { .. }) if src_tag == CoeffTag::ZHalf => {
                    reg.ring_of(self.target_space, CoeffTag::Q)
                }
                Err(e) => Err(e),
            },
        }
    }

    fn resolve_image(
        &self,
        spec: ImageSpec,
        degree: u32,
        target: &Arc<RingPresentation>,
    ) -> Result<Element> {
        let tag = target.coeff_tag();
        match spec {
            ImageSpec::Zero { torsion } => {
                let z = Element::zero(target);
                if torsion && target.torsion_policy() == TorsionPolicy::Formal2Torsion {
                    z.with_torsion_mark()
                } else {
                    Ok(z)
                }
            }
            ImageSpec::Single {
                base,
                scale,
                torsion,
            } => {
                let g = Element::generator(target, base, degree)?;
                let scaled = g.scale(&Coeff::from_rational(
                    tag,
                    BigRational::from_integer(BigInt::from(scale)),
                )?)?;
                if torsion && target.torsion_policy() == TorsionPolicy::Formal2Torsion {
                    scaled.with_torsion_mark()
                } else {
                    Ok(scaled)
                }
            }
            ImageSpec::Ch0 { scale } => Element::generator(target, "ch0", 0)?.scale(
                &Coeff::from_rational(tag, BigRational::from_integer(BigInt::from(scale)))?,
            ),
            ImageSpec::AlternatingSquareSum => {
                let half = degree / 2;
                let mut acc = Element::zero(target);
                for i in 0..=half / 2 * 2 {
                    if i > half {
                        break;
                    }
                    let j = half - i;
                    let mut term =
                        Element::scalar(target, Coeff::from_int(tag, BigInt::from(1)));
                    if i > 0 {
                        term = term.mul(&Element::generator(target, "c", 2 * i)?)?;
                    }
                    if j > 0 {
                        term = term.mul(&Element::generator(target, "c", 2 * j)?)?;
                    }
                    acc = if i % 2 == 0 {
                        acc.add(&term)?
                    } else {
                        acc.sub(&term)?
                    };
                }
                Ok(acc)
            }
            ImageSpec::EvenOpaque => Err(EngineError::Internal(
                "opaque image cannot be materialized".to_string(),
            )),
            ImageSpec::PairRename { .. } => Err(EngineError::Internal(
                "pair rename is only valid in additive maps".to_string(),
            )),
        }
    }

    /// Apply the map, insisting on a fully expanded image.
    pub fn apply(&self, reg: &Registry, e: &Element) -> Result<Element> {
        let out = self.apply_split(reg, e)?;
        if out.deferred_even {
            return Err(EngineError::UnregisteredMonomial {
                map: self.name.to_string(),
                what: "a monomial involving a generator without a registered image".to_string(),
            });
        }
        Ok(out.exact)
    }

    /// Apply the map, accounting for generators whose image is only known to
    /// be twice an integral class.
    pub fn apply_split(&self, reg: &Registry, e: &Element) -> Result<Pullback> {
        let (space, tag) = reg.locate(e.ring())?;
        if space != self.source_space || !self.family.admits(tag) {
            return Err(EngineError::SourceMismatch {
                map: self.name.to_string(),
                expected: format!("{}:{:?}", self.source_space, self.family),
                found: e.ring().id().to_string(),
            });
        }
        let target = self.target_ring(reg, tag)?;
        match self.kind {
            MapKind::RingHom => self.apply_ring_hom(e, &target),
            MapKind::AdditiveRename => {
                let exact = self.apply_additive(e, &target)?;
                Ok(Pullback {
                    exact,
                    deferred_even: false,
                })
            }
        }
    }

    fn apply_ring_hom(&self, e: &Element, target: &Arc<RingPresentation>) -> Result<Pullback> {
        let src_ring = e.ring().clone();
        let tag = target.coeff_tag();
        let mut acc = Element::zero(target);
        let mut deferred_even = false;
        let mut torsion_out = e.has_torsion_mark();
        for (mono, coeff) in e.terms() {
            let mut opaque = false;
            let mut factors: Vec<(ImageSpec, u32, u32)> = Vec::new(); // (spec, degree, exp)
            for &(idx, exp) in mono.factors() {
                let g = src_ring.generator(idx);
                let rule = self.rule_for(&g.base, g.degree).ok_or_else(|| {
                    EngineError::UnregisteredMonomial {
                        map: self.name.to_string(),
                        what: g.token(),
                    }
                })?;
                if rule.image == ImageSpec::EvenOpaque {
                    opaque = true;
                }
                factors.push((rule.image, g.degree, exp));
            }
            let coeff_target = if tag.is_lattice_family() {
                let q = coeff.as_rational().ok_or_else(|| {
                    EngineError::Internal("lattice coefficient expected".into())
                })?;
                if opaque {
                    // Every registered image here is an even integral class,
                    // so the whole monomial image is twice an integral class;
                    // its half is integral and dies in Q/Z. Insist the
                    // coefficient is integral so that claim survives scaling.
                    if !q.denom().is_one() {
                        return Err(EngineError::NonIntegralCoefficient {
                            coeff: coeff.text(),
                        });
                    }
                    deferred_even = true;
                    continue;
                }
                Coeff::from_rational(tag, q)?
            } else {
                if opaque {
                    return Err(EngineError::Internal(
                        "opaque images are registered for lattice maps only".into(),
                    ));
                }
                coeff.clone()
            };
            let mut term = Element::scalar(target, coeff_target);
            for (spec, degree, exp) in factors {
                let img = self.resolve_image(spec, degree, target)?;
                for _ in 0..exp {
                    term = term.mul(&img)?;
                }
            }
            torsion_out |= term.has_torsion_mark();
            acc = acc.add(&term)?;
        }
        if torsion_out && target.torsion_policy() == TorsionPolicy::Formal2Torsion {
            acc = acc.with_torsion_mark()?;
        }
        Ok(Pullback {
            exact: acc,
            deferred_even,
        })
    }

    fn apply_additive(&self, e: &Element, target: &Arc<RingPresentation>) -> Result<Element> {
        let src_ring = e.ring().clone();
        let mut terms: Vec<(Monomial, Coeff)> = Vec::new();
        for (mono, coeff) in e.terms() {
            let mut factors: Vec<(u16, u32)> = Vec::new();
            for &(idx, exp) in mono.factors() {
                let g = src_ring.generator(idx);
                let rule = self.rule_for(&g.base, g.degree).ok_or_else(|| {
                    EngineError::UnregisteredMonomial {
                        map: self.name.to_string(),
                        what: g.token(),
                    }
                })?;
                match rule.image {
                    ImageSpec::Single { base, scale: 1, .. } => {
                        let t = target.find(base, g.degree).ok_or_else(|| {
                            EngineError::UnknownGenerator {
                                name: format!("{base}_{}", g.degree),
                                ring: target.id().to_string(),
                            }
                        })?;
                        factors.push((t, exp));
                    }
                    ImageSpec::PairRename { base } => {
                        let k = (g.degree - 1) / 4;
                        for half in [2 * k, 2 * k + 1] {
                            let t = target.find(base, half).ok_or_else(|| {
                                EngineError::UnknownGenerator {
                                    name: format!("{base}_{half}"),
                                    ring: target.id().to_string(),
                                }
                            })?;
                            factors.push((t, exp));
                        }
                    }
                    _ => {
                        return Err(EngineError::Internal(format!(
                            "additive map {} carries a non-rename image",
                            self.name
                        )))
                    }
                }
            }
            factors.sort_by_key(|&(i, _)| i);
            terms.push((Monomial::from_sorted(factors, target), coeff.clone()));
        }
        Element::from_terms(target, terms, false)
    }
}

// ---------------------------------------------------------------------------
// Loop rules

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopImages {
    /// `c_{2k} -> c_{2k-1}` on BU.
    ComplexBase,
    /// `c_{2j-1} -> (j-1)! ch_{2j-2}`, expanded through the Newton
    /// polynomials: `sigma_{j-1}` for `j > 1` and the component class `ch0`
    /// for `j = 1`.
    ComplexLoop,
    /// `y_{4k} -> y_{4k-1}` on BSp.
    QuaternionBase,
    /// `p_{4k} -> 2 v_{4k-1}` plus 2-torsion on BO.
    RealBase,
    /// Only the rule that decomposables die; generator images deliberately
    /// unregistered.
    KillOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct LoopRule {
    pub space: SpaceId,
    pub family: Family,
    pub target_space: SpaceId,
    pub images: LoopImages,
}

/// All registered maps and loop rules.
pub struct MapTable {
    maps: Vec<GenMap>,
    loops: Vec<LoopRule>,
}

impl Registry {
    pub fn map_table(&self) -> &MapTable {
        self.maps.get_or_init(MapTable::build)
    }
}

impl MapTable {
    pub fn maps(&self) -> &[GenMap] {
        &self.maps
    }

    pub fn get(&self, name: &str) -> Result<&GenMap> {
        self.maps
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| EngineError::UnregisteredMonomial {
                map: name.to_string(),
                what: "no such map".to_string(),
            })
    }

    pub fn loop_rule(&self, space: SpaceId, tag: CoeffTag) -> Option<&LoopRule> {
        self.loops
            .iter()
            .find(|r| r.space == space && r.family.admits(tag))
    }

    fn build() -> MapTable {
        use Family::*;
        use ImageSpec::*;
        use MapKind::*;
        let rule = |base, modulus, residue, image| FamilyRule {
            base,
            modulus,
            residue,
            image,
        };
        let maps = vec![
            GenMap {
                name: "alpha",
                space_map: "U/O -> U",
                source_space: SpaceId::U,
                target_space: SpaceId::UO,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 1, Single { base: "a", scale: 1, torsion: true }),
                    rule("c", 4, 3, Zero { torsion: true }),
                ],
                note: "c_{4k+1} -> a_{4k+1} plus 2-torsion; c_{4k+3} -> 2-torsion",
            },
            GenMap {
                name: "Bc",
                space_map: "BOxZ -> BUxZ",
                source_space: SpaceId::BU,
                target_space: SpaceId::BO,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 0, Single { base: "p", scale: 1, torsion: false }),
                    // c_{4k+2} pulls back to the square of the integral lift
                    // w_{2k+1}, which is annihilated by 2
                    rule("c", 4, 2, Zero { torsion: true }),
                    rule("ch0", 1, 0, Ch0 { scale: 1 }),
                ],
                note: "complexification: c_{4k} -> p_{4k}; c_{4k+2} -> 2-torsion; ch0 -> ch0",
            },
            GenMap {
                name: "c",
                space_map: "O -> U",
                source_space: SpaceId::U,
                target_space: SpaceId::O,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 3, Single { base: "v", scale: 2, torsion: true }),
                    rule("c", 4, 1, Zero { torsion: true }),
                ],
                note: "c_{4k+3} -> 2 v_{4k+3} plus 2-torsion; c_{4k+1} -> 2-torsion",
            },
            GenMap {
                name: "phi",
                space_map: "O/U -> BU",
                source_space: SpaceId::BU,
                target_space: SpaceId::OU,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 2, Single { base: "u", scale: 2, torsion: false }),
                    // the c_{4k} image is determined only recursively; it is
                    // an even class, which is all the engine records
                    rule("c", 4, 0, EvenOpaque),
                ],
                note: "c_{4k+2} -> 2 u_{4k+2}; c_{4k} -> twice an unregistered integral class",
            },
            GenMap {
                name: "beta",
                space_map: "U/Sp -> U",
                source_space: SpaceId::U,
                target_space: SpaceId::USp,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 1, Single { base: "a", scale: 2, torsion: false }),
                    rule("c", 4, 3, Zero { torsion: false }),
                ],
                note: "c_{4k+1} -> 2 a_{4k+1}; c_{4k+3} -> 0",
            },
            GenMap {
                name: "Bj",
                space_map: "BSpxZ -> BUxZ",
                source_space: SpaceId::BU,
                target_space: SpaceId::BSp,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 0, Single { base: "y", scale: 1, torsion: false }),
                    rule("c", 4, 2, Zero { torsion: false }),
                    rule("ch0", 1, 0, Ch0 { scale: 2 }),
                ],
                note: "c_{4k} -> y_{4k}; c_{4k+2} -> 0; ch0 -> 2 ch0",
            },
            GenMap {
                name: "j",
                space_map: "Sp -> U",
                source_space: SpaceId::U,
                target_space: SpaceId::Sp,
                family: Lattice,
                kind: RingHom,
                rules: vec![
                    rule("c", 4, 3, Single { base: "y", scale: 1, torsion: false }),
                    rule("c", 4, 1, Zero { torsion: false }),
                ],
                note: "c_{4k+3} -> y_{4k+3}; c_{4k+1} -> 0",
            },
            GenMap {
                name: "I",
                space_map: "Sp/U -> BU",
                source_space: SpaceId::BU,
                target_space: SpaceId::SpU,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("c", 2, 0, Single { base: "c", scale: 1, torsion: false })],
                note: "c_{2k} -> c_{2k} in the quotient ring",
            },
            GenMap {
                name: "q",
                space_map: "U -> Sp",
                source_space: SpaceId::Sp,
                target_space: SpaceId::U,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("y", 4, 3, Single { base: "c", scale: 2, torsion: false })],
                note: "y_{4k-1} -> 2 c_{4k-1}",
            },
            GenMap {
                name: "Bq",
                space_map: "BU -> BSp",
                source_space: SpaceId::BSp,
                target_space: SpaceId::BU,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("y", 4, 0, AlternatingSquareSum)],
                note: "y_{4k} -> sum_{i+j=2k} (-1)^i c_{2i} c_{2j}",
            },
            GenMap {
                name: "Bf",
                space_map: "BU -> BO",
                source_space: SpaceId::BO,
                target_space: SpaceId::BU,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("p", 4, 0, AlternatingSquareSum)],
                note: "p_{4k} -> sum_{i+j=2k} (-1)^i c_{2i} c_{2j}",
            },
            GenMap {
                name: "f",
                space_map: "U -> O",
                source_space: SpaceId::O,
                target_space: SpaceId::U,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("v", 4, 3, Single { base: "c", scale: 1, torsion: false })],
                note: "v_{4k+3} -> c_{4k+3}",
            },
            GenMap {
                name: "p",
                space_map: "U -> U/O",
                source_space: SpaceId::UO,
                target_space: SpaceId::U,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("a", 4, 1, Single { base: "c", scale: 2, torsion: false })],
                note: "a_{4k+1} -> 2 c_{4k+1}",
            },
            GenMap {
                name: "i",
                space_map: "U/O -> BO",
                source_space: SpaceId::BO,
                target_space: SpaceId::UO,
                family: F2,
                kind: RingHom,
                rules: vec![rule("w", 1, 0, Single { base: "w", scale: 1, torsion: false })],
                note: "restriction of Stiefel-Whitney classes: w_k -> w_k",
            },
            GenMap {
                name: "i_int",
                space_map: "U/O -> BO",
                source_space: SpaceId::BO,
                target_space: SpaceId::UO,
                family: Lattice,
                kind: RingHom,
                rules: vec![rule("p", 4, 0, Zero { torsion: false })],
                note: "p_{4k} restricts to 0 on U/O",
            },
            GenMap {
                name: "i_mod_z",
                space_map: "U/O -> BO",
                source_space: SpaceId::BO,
                target_space: SpaceId::UO,
                family: QmodZ,
                kind: AdditiveRename,
                rules: vec![rule("w", 1, 0, Single { base: "w", scale: 1, torsion: false })],
                note: "restriction of Q/Z classes named by Stiefel-Whitney monomials",
            },
            GenMap {
                name: "rho",
                space_map: "U/O mod-2 identification",
                source_space: SpaceId::UO,
                target_space: SpaceId::UO,
                family: QmodZ,
                kind: AdditiveRename,
                rules: vec![rule("a", 4, 1, PairRename { base: "w" })],
                note: "a_{4k+1} -> w_{2k} w_{2k+1}; the remaining Bockstein-image \
                       summand of the honest mod-2 reduction dies in Q/Z",
            },
        ];
        let loops = vec![
            LoopRule {
                space: SpaceId::BU,
                family: Lattice,
                target_space: SpaceId::U,
                images: LoopImages::ComplexBase,
            },
            LoopRule {
                space: SpaceId::U,
                family: Lattice,
                target_space: SpaceId::BU,
                images: LoopImages::ComplexLoop,
            },
            LoopRule {
                space: SpaceId::BSp,
                family: Lattice,
                target_space: SpaceId::Sp,
                images: LoopImages::QuaternionBase,
            },
            LoopRule {
                space: SpaceId::BO,
                family: Lattice,
                target_space: SpaceId::O,
                images: LoopImages::RealBase,
            },
            LoopRule {
                space: SpaceId::UO,
                family: F2,
                target_space: SpaceId::BO,
                images: LoopImages::KillOnly,
            },
        ];
        MapTable { maps, loops }
    }
}

/// The loop map on cohomology: degree -1, kills decomposables, generator
/// images per the registered rule of the element's ring.
pub fn loop_apply(reg: &Registry, e: &Element) -> Result<Element> {
    let (space, tag) = reg.locate(e.ring())?;
    let rule = reg
        .map_table()
        .loop_rule(space, tag)
        .ok_or_else(|| EngineError::NoLoopRule {
            ring: e.ring().id().to_string(),
        })?;
    let target = reg.ring_of(rule.target_space, tag)?;
    let src_ring = e.ring().clone();
    let mut acc = Element::zero(&target);
    for (mono, coeff) in e.terms() {
        if mono.is_unit() || mono.total_exponent() >= 2 {
            // constants and decomposables die
            continue;
        }
        let (idx, _) = mono.factors()[0];
        let g = src_ring.generator(idx);
        let image: Element = match rule.images {
            LoopImages::ComplexBase => {
                if g.base == "c" && g.degree >= 2 {
                    Element::generator(&target, "c", g.degree - 1)?
                } else {
                    return Err(EngineError::NoLoopImage {
                        ring: src_ring.id().to_string(),
                        gen: g.token(),
                    });
                }
            }
            LoopImages::ComplexLoop => {
                if g.base == "c" {
                    let j = (g.degree + 1) / 2;
                    if j == 1 {
                        Element::generator(&target, "ch0", 0)?
                    } else {
                        symfunc::newton(reg, j - 1)?.transport(&target)?
                    }
                } else {
                    return Err(EngineError::NoLoopImage {
                        ring: src_ring.id().to_string(),
                        gen: g.token(),
                    });
                }
            }
            LoopImages::QuaternionBase => {
                if g.base == "y" {
                    Element::generator(&target, "y", g.degree - 1)?
                } else {
                    return Err(EngineError::NoLoopImage {
                        ring: src_ring.id().to_string(),
                        gen: g.token(),
                    });
                }
            }
            LoopImages::RealBase => {
                if g.base == "p" {
                    Element::generator(&target, "v", g.degree - 1)?
                        .scale_int(2)?
                        .with_torsion_mark()?
                } else {
                    return Err(EngineError::NoLoopImage {
                        ring: src_ring.id().to_string(),
                        gen: g.token(),
                    });
                }
            }
            LoopImages::KillOnly => {
                return Err(EngineError::NoLoopImage {
                    ring: src_ring.id().to_string(),
                    gen: g.token(),
                })
            }
        };
        acc = acc.add(&image.scale(coeff)?)?;
    }
    if e.has_torsion_mark() && target.torsion_policy() == TorsionPolicy::Formal2Torsion {
        acc = acc.with_torsion_mark()?;
    }
    Ok(acc)
}

/// Mod-2 reduction with the registered generator renaming: `p_{4k}` on BO
/// reduces to `w_{2k}^2`; the Sp/U quotient classes reduce to the exterior
/// classes of the same name.
pub fn mod2_reduce(reg: &Registry, e: &Element) -> Result<Element> {
    let (space, tag) = reg.locate(e.ring())?;
    if !tag.is_lattice_family() {
        return Err(EngineError::NoMod2Rule {
            ring: e.ring().id().to_string(),
        });
    }
    if e.has_torsion_mark() {
        return Err(EngineError::TorsionObstruction);
    }
    let target = reg.ring_of(space, CoeffTag::F2)?;
    let src_ring = e.ring().clone();
    let mut terms: Vec<(Monomial, Coeff)> = Vec::new();
    for (mono, coeff) in e.terms() {
        let q = coeff
            .as_rational()
            .ok_or_else(|| EngineError::Internal("lattice coefficient expected".into()))?;
        if !q.denom().is_one() {
            return Err(EngineError::NonIntegralCoefficient {
                coeff: coeff.text(),
            });
        }
        let bit = crate::coeff::F2::from_int(q.numer());
        if bit.is_zero() {
            continue;
        }
        let mut factors: Vec<(u16, u32)> = Vec::new();
        for &(idx, exp) in mono.factors() {
            let g = src_ring.generator(idx);
            let (new_base, new_degree, new_exp) = match (space, g.base.as_str()) {
                (SpaceId::BO, "p") => ("w", g.degree / 2, 2 * exp),
                (SpaceId::SpU, "c") => ("c", g.degree, exp),
                _ => {
                    return Err(EngineError::NoMod2Rule {
                        ring: format!("{} generator {}", src_ring.id(), g.token()),
                    })
                }
            };
            let t = target.find(new_base, new_degree).ok_or_else(|| {
                EngineError::UnknownGenerator {
                    name: format!("{new_base}_{new_degree}"),
                    ring: target.id().to_string(),
                }
            })?;
            factors.push((t, new_exp));
        }
        factors.sort_by_key(|&(i, _)| i);
        terms.push((Monomial::from_sorted(factors, &target), Coeff::F2(bit)));
    }
    Element::from_terms(&target, terms, false)
}

/// The coefficient map Z/2 -> Q/Z on classes: every monomial with
/// coefficient 1 goes to the same monomial with coefficient 1/2. Defined on
/// the image of the integral Bockstein, where it factors.
pub fn l_star(reg: &Registry, e: &Element) -> Result<Element> {
    let (space, tag) = reg.locate(e.ring())?;
    if tag != CoeffTag::F2 {
        return Err(EngineError::Internal(format!(
            "l_star consumes F2 classes, got {}",
            e.ring().id()
        )));
    }
    let target = reg.ring_of(space, CoeffTag::QmodZ)?;
    let src_ring = e.ring().clone();
    let mut terms: Vec<(Monomial, Coeff)> = Vec::new();
    for (mono, _) in e.terms() {
        let mut factors: Vec<(u16, u32)> = Vec::new();
        for &(idx, exp) in mono.factors() {
            let g = src_ring.generator(idx);
            let t = target
                .find(&g.base, g.degree)
                .ok_or_else(|| EngineError::UnknownGenerator {
                    name: g.token(),
                    ring: target.id().to_string(),
                })?;
            factors.push((t, exp));
        }
        factors.sort_by_key(|&(i, _)| i);
        terms.push((
            Monomial::from_sorted(factors, &target),
            Coeff::QmodZ(QmodZ::half()),
        ));
    }
    Element::from_terms(&target, terms, false)
}

/// The chain of maps modeling `Omega^n alpha : Omega^n(U/O) -> Omega^n U`,
/// 8-periodic in n.
pub fn chain_map(reg: &Registry, n: u32) -> Result<&GenMap> {
    const CHAIN: [&str; 8] = ["alpha", "Bc", "c", "phi", "beta", "Bj", "j", "I"];
    reg.map_table().get(CHAIN[(n % 8) as usize])
}

/// The registered Bockstein fact in degree 4k+2: the Stiefel-Whitney class
/// `w_{2k} w_{2k+1}` has integral Bockstein equal to the pullback of the
/// degree-(4k+2) Chern class, a 2-torsion class.
#[derive(Debug, Clone)]
pub struct BocksteinFact {
    pub k: u32,
    pub class_degree: u32,
    /// `w_{2k} w_{2k+1}` over F2 on BO.
    pub u: Element,
    /// Its Bockstein, pure 2-torsion: zero in the Z[1/2] model, marked.
    pub beta_u: Element,
}

pub fn bockstein_fact(reg: &Registry, k: u32) -> Result<BocksteinFact> {
    if k == 0 {
        return Err(EngineError::Internal(
            "the Bockstein fact is indexed by k >= 1".to_string(),
        ));
    }
    let f2 = reg.ring_of(SpaceId::BO, CoeffTag::F2)?;
    let u = Element::generator(&f2, "w", 2 * k)?.mul(&Element::generator(&f2, "w", 2 * k + 1)?)?;
    let half = reg.ring_of(SpaceId::BO, CoeffTag::ZHalf)?;
    let beta_u = Element::zero(&half).with_torsion_mark()?;
    Ok(BocksteinFact {
        k,
        class_degree: 4 * k + 2,
        u,
        beta_u,
    })
}

/// One side-by-side check of the loop functor against a registered pair of
/// maps `(f, loop f)`: for every source generator where both routes are
/// defined, looping the pullback equals pulling back the loop.
pub fn loop_naturality_check(
    reg: &Registry,
    f: &GenMap,
    looped: &GenMap,
    tag: CoeffTag,
) -> Result<Vec<(String, bool)>> {
    let source = reg.ring_of(f.source_space, tag)?;
    let mut results = Vec::new();
    for g in source.generators() {
        if g.degree == 0 || f.rule_for(&g.base, g.degree).is_none() {
            continue;
        }
        let gen_elem = Element::generator(&source, &g.base, g.degree)?;
        let lhs = match f
            .apply(reg, &gen_elem)
            .and_then(|img| loop_apply(reg, &img))
        {
            Ok(v) => v,
            Err(EngineError::NoLoopImage { .. }) | Err(EngineError::NoLoopRule { .. }) => continue,
            Err(e) => return Err(e),
        };
        let rhs = match loop_apply(reg, &gen_elem).and_then(|l| looped.apply(reg, &l)) {
            Ok(v) => v,
            Err(EngineError::NoLoopImage { .. }) | Err(EngineError::NoLoopRule { .. }) => continue,
            Err(e) => return Err(e),
        };
        // land both sides in the rational ring of the common space
        let (lspace, _) = reg.locate(lhs.ring())?;
        let common = reg.ring_of(lspace, CoeffTag::Q)?;
        let l = lhs.transport(&common)?;
        let r = rhs.transport(&common)?;
        results.push((format!("{}({})", f.name, g.token()), l == r));
    }
    Ok(results)
}

/// Space-level consistency of the chain against Bott iteration.
pub fn chain_consistency(reg: &Registry, n: u32) -> Result<bool> {
    let m = chain_map(reg, n)?;
    let expected_target = crate::spaces::loop_space_iter(SpaceId::UO, n);
    let expected_source = crate::spaces::loop_space_iter(SpaceId::U, n);
    Ok(m.target_space == expected_target && m.source_space == expected_source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> &'static Registry {
        Registry::global()
    }

    fn elem(space: SpaceId, tag: CoeffTag, base: &str, degree: u32) -> Element {
        Element::generator(&reg().ring_of(space, tag).unwrap(), base, degree).unwrap()
    }

    #[test]
    fn complexification_rows() {
        let bc = reg().map_table().get("Bc").unwrap();
        let c4 = elem(SpaceId::BU, CoeffTag::Z, "c", 4);
        assert_eq!(bc.apply(reg(), &c4).unwrap().to_string(), "p_4");
        let c6 = elem(SpaceId::BU, CoeffTag::Z, "c", 6);
        let img = bc.apply(reg(), &c6).unwrap();
        assert!(img.has_torsion_mark());
        assert_eq!(img.term_count(), 0);
        let ch0 = elem(SpaceId::BU, CoeffTag::Z, "ch0", 0);
        assert_eq!(bc.apply(reg(), &ch0).unwrap().to_string(), "ch0");
    }

    #[test]
    fn quaternionic_rows() {
        let j = reg().map_table().get("j").unwrap();
        assert_eq!(
            j.apply(reg(), &elem(SpaceId::U, CoeffTag::Z, "c", 7))
                .unwrap()
                .to_string(),
            "y_7"
        );
        assert!(j
            .apply(reg(), &elem(SpaceId::U, CoeffTag::Z, "c", 5))
            .unwrap()
            .is_zero());
        let beta = reg().map_table().get("beta").unwrap();
        assert_eq!(
            beta.apply(reg(), &elem(SpaceId::U, CoeffTag::Z, "c", 5))
                .unwrap()
                .to_string(),
            "2*a_5"
        );
    }

    #[test]
    fn alpha_carries_torsion() {
        let alpha = reg().map_table().get("alpha").unwrap();
        let img = alpha
            .apply(reg(), &elem(SpaceId::U, CoeffTag::Z, "c", 5))
            .unwrap();
        assert_eq!(img.to_string(), "a_5 + Tors");
        assert!(img.has_torsion_mark());
    }

    #[test]
    fn fiber_inclusion_into_the_quotient() {
        let i = reg().map_table().get("I").unwrap();
        // multiplicativity drives the image into normal form
        let c2 = elem(SpaceId::BU, CoeffTag::Z, "c", 2);
        let sq = c2.mul(&c2).unwrap();
        assert_eq!(i.apply(reg(), &sq).unwrap().to_string(), "2*c_4");
    }

    #[test]
    fn opaque_rows_defer() {
        let phi = reg().map_table().get("phi").unwrap();
        assert_eq!(
            phi.apply(reg(), &elem(SpaceId::BU, CoeffTag::Z, "c", 6))
                .unwrap()
                .to_string(),
            "2*u_6"
        );
        let c4 = elem(SpaceId::BU, CoeffTag::Z, "c", 4);
        assert!(matches!(
            phi.apply(reg(), &c4),
            Err(EngineError::UnregisteredMonomial { .. })
        ));
        let split = phi.apply_split(reg(), &c4).unwrap();
        assert!(split.deferred_even);
        assert!(split.exact.is_zero());
    }

    #[test]
    fn loop_rules_on_the_complex_tower() {
        let c4 = elem(SpaceId::BU, CoeffTag::Z, "c", 4);
        assert_eq!(loop_apply(reg(), &c4).unwrap().to_string(), "c_3");
        let c2 = elem(SpaceId::BU, CoeffTag::Z, "c", 2);
        assert!(loop_apply(reg(), &c2.mul(&c2).unwrap()).unwrap().is_zero());
        // c_3 -> 1! ch_2 = c_2
        let c3 = elem(SpaceId::U, CoeffTag::Z, "c", 3);
        assert_eq!(loop_apply(reg(), &c3).unwrap().to_string(), "c_2");
        // c_5 -> 2! ch_4 = sigma_2
        let c5 = elem(SpaceId::U, CoeffTag::Z, "c", 5);
        assert_eq!(loop_apply(reg(), &c5).unwrap().to_string(), "c_2^2 - 2*c_4");
        // c_1 -> ch0
        let c1 = elem(SpaceId::U, CoeffTag::Z, "c", 1);
        assert_eq!(loop_apply(reg(), &c1).unwrap().to_string(), "ch0");
    }

    #[test]
    fn loop_rules_on_the_real_side() {
        let y8 = elem(SpaceId::BSp, CoeffTag::Z, "y", 8);
        assert_eq!(loop_apply(reg(), &y8).unwrap().to_string(), "y_7");
        let p4 = elem(SpaceId::BO, CoeffTag::Z, "p", 4);
        let img = loop_apply(reg(), &p4).unwrap();
        assert_eq!(img.to_string(), "2*v_3 + Tors");
    }

    #[test]
    fn loop_kill_only_rule_on_uo() {
        let w2 = elem(SpaceId::UO, CoeffTag::F2, "w", 2);
        let w3 = elem(SpaceId::UO, CoeffTag::F2, "w", 3);
        let prod = w2.mul(&w3).unwrap();
        assert!(loop_apply(reg(), &prod).unwrap().is_zero());
        assert!(matches!(
            loop_apply(reg(), &w2),
            Err(EngineError::NoLoopImage { .. })
        ));
    }

    #[test]
    fn mod2_reduction_rows() {
        let p4 = elem(SpaceId::BO, CoeffTag::Z, "p", 4);
        assert_eq!(mod2_reduce(reg(), &p4).unwrap().to_string(), "w_2^2");
        let c4 = elem(SpaceId::SpU, CoeffTag::Z, "c", 4);
        assert_eq!(mod2_reduce(reg(), &c4).unwrap().to_string(), "c_4");
        let twice = elem(SpaceId::SpU, CoeffTag::Z, "c", 6).scale_int(2).unwrap();
        assert!(mod2_reduce(reg(), &twice).unwrap().is_zero());
        // marked classes cannot be reduced
        let marked = p4.with_torsion_mark().unwrap();
        assert!(matches!(
            mod2_reduce(reg(), &marked),
            Err(EngineError::TorsionObstruction)
        ));
    }

    #[test]
    fn l_star_halves_monomials() {
        let w2 = elem(SpaceId::BO, CoeffTag::F2, "w", 2);
        let w3 = elem(SpaceId::BO, CoeffTag::F2, "w", 3);
        let u = w2.mul(&w3).unwrap();
        let img = l_star(reg(), &u).unwrap();
        assert_eq!(img.to_string(), "1/2*w_2*w_3");
        assert!(img.scale_int(2).unwrap().is_zero());
        let zero = Element::zero(&reg().ring_of(SpaceId::BO, CoeffTag::F2).unwrap());
        assert!(l_star(reg(), &zero).unwrap().is_zero());
        // Sp/U: c_6 + c_2 c_4 -> half of each
        let c6 = elem(SpaceId::SpU, CoeffTag::F2, "c", 6);
        let c2c4 = elem(SpaceId::SpU, CoeffTag::F2, "c", 2)
            .mul(&elem(SpaceId::SpU, CoeffTag::F2, "c", 4))
            .unwrap();
        let sum = c6.add(&c2c4).unwrap();
        assert_eq!(
            l_star(reg(), &sum).unwrap().to_string(),
            "1/2*c_2*c_4 + 1/2*c_6"
        );
    }

    #[test]
    fn chain_map_is_periodic() {
        assert_eq!(chain_map(reg(), 0).unwrap().name, "alpha");
        assert_eq!(chain_map(reg(), 6).unwrap().name, "j");
        assert_eq!(chain_map(reg(), 8).unwrap().name, "alpha");
        for n in 0..16 {
            assert!(chain_consistency(reg(), n).unwrap(), "chain step {n}");
        }
    }

    #[test]
    fn bockstein_facts() {
        let fact = bockstein_fact(reg(), 1).unwrap();
        assert_eq!(fact.u.to_string(), "w_2*w_3");
        assert_eq!(fact.class_degree, 6);
        assert!(fact.beta_u.has_torsion_mark());
        assert!(fact.beta_u.scale_int(2).unwrap().is_zero());
        let fact2 = bockstein_fact(reg(), 2).unwrap();
        assert_eq!(fact2.u.to_string(), "w_4*w_5");
    }

    #[test]
    fn loop_naturality_of_registered_pairs() {
        let table = reg().map_table();
        for (f, looped) in [("Bc", "c"), ("Bj", "j"), ("Bq", "q"), ("Bf", "f")] {
            let results = loop_naturality_check(
                reg(),
                table.get(f).unwrap(),
                table.get(looped).unwrap(),
                CoeffTag::Z,
            )
            .unwrap();
            assert!(!results.is_empty(), "{f} audit is vacuous");
            for (case, ok) in results {
                assert!(ok, "naturality fails for {case}");
            }
        }
    }

    #[test]
    fn bq_instance_expands_to_twice_a_generator() {
        // looping sum_{i+j=2k} (-1)^i c_{2i} c_{2j} gives 2 c_{4k-1}
        let bq = reg().map_table().get("Bq").unwrap();
        for k in 1..=6u32 {
            let y = elem(SpaceId::BSp, CoeffTag::Z, "y", 4 * k);
            let pulled = bq.apply(reg(), &y).unwrap();
            let looped = loop_apply(reg(), &pulled).unwrap();
            let expected = elem(SpaceId::U, CoeffTag::Z, "c", 4 * k - 1)
                .scale_int(2)
                .unwrap();
            assert_eq!(looped, expected, "k = {k}");
        }
    }
}
