//! The registry of classifying spaces: Bott periodicity successors and the
//! cohomology-ring presentation of each space per coefficient system.
//!
//! The registry is built once (all rings materialized up to a degree cap,
//! default 48) and is read-only afterwards.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{
    merge_monomials, Element, Generator, Monomial, RawPoly, RingKind, RingPresentation,
    SquareStrategy, TorsionPolicy,
};
use crate::coeff::{Coeff, CoeffTag};
use crate::error::{EngineError, Result};

/// The ten spaces: the real Bott cycle of length eight plus the complex
/// cycle of length two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceId {
    UO,
    BO,
    O,
    OU,
    USp,
    BSp,
    Sp,
    SpU,
    BU,
    U,
}

pub const REAL_CYCLE: [SpaceId; 8] = [
    SpaceId::UO,
    SpaceId::BO,
    SpaceId::O,
    SpaceId::OU,
    SpaceId::USp,
    SpaceId::BSp,
    SpaceId::Sp,
    SpaceId::SpU,
];

impl SpaceId {
    pub fn token(self) -> &'static str {
        match self {
            SpaceId::UO => "U/O",
            SpaceId::BO => "BO",
            SpaceId::O => "O",
            SpaceId::OU => "O/U",
            SpaceId::USp => "U/Sp",
            SpaceId::BSp => "BSp",
            SpaceId::Sp => "Sp",
            SpaceId::SpU => "Sp/U",
            SpaceId::BU => "BU",
            SpaceId::U => "U",
        }
    }

    pub fn parse(s: &str) -> Result<SpaceId> {
        match s {
            "U/O" => Ok(SpaceId::UO),
            "BO" => Ok(SpaceId::BO),
            "O" => Ok(SpaceId::O),
            "O/U" => Ok(SpaceId::OU),
            "U/Sp" => Ok(SpaceId::USp),
            "BSp" => Ok(SpaceId::BSp),
            "Sp" => Ok(SpaceId::Sp),
            "Sp/U" => Ok(SpaceId::SpU),
            "BU" => Ok(SpaceId::BU),
            "U" => Ok(SpaceId::U),
            other => Err(EngineError::UnknownSpace(other.to_string())),
        }
    }

    /// True for the spaces that come with a Z of connected components.
    pub fn has_z_component(self) -> bool {
        matches!(self, SpaceId::BO | SpaceId::BSp | SpaceId::BU)
    }

    /// Display name of the ambient space, spelling out the Z of components.
    pub fn ambient(self) -> String {
        if self.has_z_component() {
            format!("{}xZ", self.token())
        } else {
            self.token().to_string()
        }
    }
}

impl std::fmt::Display for SpaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// The Bott successor: one application of the loop functor.
pub fn loop_space(s: SpaceId) -> SpaceId {
    match s {
        SpaceId::UO => SpaceId::BO,
        SpaceId::BO => SpaceId::O,
        SpaceId::O => SpaceId::OU,
        SpaceId::OU => SpaceId::USp,
        SpaceId::USp => SpaceId::BSp,
        SpaceId::BSp => SpaceId::Sp,
        SpaceId::Sp => SpaceId::SpU,
        SpaceId::SpU => SpaceId::UO,
        SpaceId::BU => SpaceId::U,
        SpaceId::U => SpaceId::BU,
    }
}

pub fn loop_space_iter(s: SpaceId, n: u32) -> SpaceId {
    let mut cur = s;
    let steps = if matches!(s, SpaceId::BU | SpaceId::U) {
        n % 2
    } else {
        n % 8
    };
    for _ in 0..steps {
        cur = loop_space(cur);
    }
    cur
}

fn gens_arith(base: &str, start: u32, stride: u32, cap: u32) -> Vec<Generator> {
    let mut v = Vec::new();
    let mut d = start;
    while d <= cap {
        v.push(Generator::new(base, d));
        d += stride;
    }
    v
}

fn with_ch0(mut gens: Vec<Generator>) -> Vec<Generator> {
    let mut v = vec![Generator::new("ch0", 0)];
    v.append(&mut gens);
    v
}

/// The alternating-sum relations of the integral Sp/U ring, each solved for
/// the square it contains.
fn spu_relation_data(cap: u32) -> (Vec<RawPoly>, BTreeMap<u16, RawPoly>) {
    let mut relations = Vec::new();
    let mut square_rules = BTreeMap::new();
    for k in 1..=cap / 4 {
        let mut rel: RawPoly = Vec::new();
        for i in 0..=2 * k {
            let j = 2 * k - i;
            let sign = if i % 2 == 0 { 1 } else { -1 };
            let mut fac: Vec<(u16, u32)> = Vec::new();
            for part in [i, j] {
                if part == 0 {
                    continue;
                }
                let idx = (part - 1) as u16;
                if let Some(last) = fac.last_mut().filter(|l| l.0 == idx) {
                    last.1 += 1;
                } else {
                    fac.push((idx, 1));
                }
            }
            fac.sort_by_key(|&(i, _)| i);
            rel.push((BigInt::from(sign), fac));
        }
        relations.push(rel);
        // c_{2k}^2 = 2 * sum_{0<=i<k} (-1)^{k+1+i} c_{2i} c_{4k-2i}
        let mut rhs: RawPoly = Vec::new();
        for i in 0..k {
            let sign = if (k + 1 + i) % 2 == 0 { 2 } else { -2 };
            let mut fac: Vec<(u16, u32)> = Vec::new();
            if i > 0 {
                fac.push(((i - 1) as u16, 1));
            }
            fac.push(((2 * k - i - 1) as u16, 1));
            fac.sort_by_key(|&(i, _)| i);
            rhs.push((BigInt::from(sign), fac));
        }
        square_rules.insert((k - 1) as u16, rhs);
    }
    (relations, square_rules)
}

pub struct Registry {
    max_degree: u32,
    rings: BTreeMap<(SpaceId, CoeffTag), Arc<RingPresentation>>,
    pub(crate) newton_cache: Mutex<Vec<Element>>,
    pub(crate) maps: OnceLock<crate::maps::MapTable>,
}

impl Registry {
    pub fn new(max_degree: u32) -> Result<Registry> {
        let cap = max_degree;
        let mut rings = BTreeMap::new();
        fn add_ring(
            rings: &mut BTreeMap<(SpaceId, CoeffTag), Arc<RingPresentation>>,
            cap: u32,
            space: SpaceId,
            tag: CoeffTag,
            kind: RingKind,
            policy: TorsionPolicy,
            gens: Vec<Generator>,
        ) -> Result<()> {
            let id = format!("{}:{}", space.token(), tag.token());
            let pres = RingPresentation::new(&id, tag, kind, policy, gens, cap)?;
            rings.insert((space, tag), pres);
            Ok(())
        }
        macro_rules! add {
            ($space:expr, $tag:expr, $kind:expr, $policy:expr, $gens:expr $(,)?) => {
                add_ring(&mut rings, cap, $space, $tag, $kind, $policy, $gens)
            };
        }

        use CoeffTag::*;
        use RingKind::*;
        use TorsionPolicy::*;

        // U/O
        for tag in [Q, ZHalf] {
            add!(
                SpaceId::UO,
                tag,
                Exterior,
                Formal2Torsion,
                gens_arith("a", 1, 4, cap),
            )?;
        }
        add!(SpaceId::UO, F2, Exterior, None, gens_arith("w", 1, 1, cap))?;
        add!(SpaceId::UO, QmodZ, Exterior, None, {
            let mut g = gens_arith("a", 1, 4, cap);
            g.append(&mut gens_arith("w", 1, 1, cap));
            g.sort_by(|x, y| (x.degree, x.base.clone()).cmp(&(y.degree, y.base.clone())));
            g
        })?;

        // BO
        for tag in [Q, ZHalf] {
            add!(
                SpaceId::BO,
                tag,
                FreePolynomial,
                Formal2Torsion,
                with_ch0(gens_arith("p", 4, 4, cap)),
            )?;
        }
        add!(
            SpaceId::BO,
            F2,
            FreePolynomial,
            None,
            gens_arith("w", 1, 1, cap),
        )?;
        add!(
            SpaceId::BO,
            QmodZ,
            FreePolynomial,
            None,
            with_ch0(gens_arith("w", 1, 1, cap)),
        )?;

        // O
        for tag in [Q, ZHalf] {
            add!(
                SpaceId::O,
                tag,
                Exterior,
                Formal2Torsion,
                gens_arith("v", 3, 4, cap),
            )?;
        }
        add!(
            SpaceId::O,
            F2,
            FreePolynomial,
            None,
            gens_arith("d", 1, 2, cap),
        )?;
        add!(SpaceId::O, QmodZ, Exterior, None, gens_arith("v", 3, 4, cap))?;

        // O/U
        for tag in [Z, Q] {
            add!(
                SpaceId::OU,
                tag,
                FreePolynomial,
                None,
                gens_arith("u", 2, 4, cap),
            )?;
        }
        add!(
            SpaceId::OU,
            QmodZ,
            FreePolynomial,
            None,
            gens_arith("u", 2, 4, cap),
        )?;

        // U/Sp
        for tag in [Z, Q] {
            add!(SpaceId::USp, tag, Exterior, None, gens_arith("a", 1, 4, cap))?;
        }
        add!(
            SpaceId::USp,
            QmodZ,
            Exterior,
            None,
            gens_arith("a", 1, 4, cap),
        )?;

        // BSp
        for tag in [Z, Q] {
            add!(
                SpaceId::BSp,
                tag,
                FreePolynomial,
                None,
                with_ch0(gens_arith("y", 4, 4, cap)),
            )?;
        }
        add!(
            SpaceId::BSp,
            QmodZ,
            FreePolynomial,
            None,
            with_ch0(gens_arith("y", 4, 4, cap)),
        )?;

        // Sp
        for tag in [Z, Q] {
            add!(SpaceId::Sp, tag, Exterior, None, gens_arith("y", 3, 4, cap))?;
        }
        add!(SpaceId::Sp, QmodZ, Exterior, None, gens_arith("y", 3, 4, cap))?;

        // Sp/U: integral and rational quotients, F2 exterior, Z[1/2] polynomial
        let (relations, square_rules) = spu_relation_data(cap);
        for tag in [Z, Q] {
            let id = format!("{}:{}", SpaceId::SpU.token(), tag.token());
            let pres = RingPresentation::new_quotient(
                &id,
                tag,
                gens_arith("c", 2, 2, cap),
                square_rules.clone(),
                relations.clone(),
                cap,
            )?;
            rings.insert((SpaceId::SpU, tag), pres);
        }
        add!(SpaceId::SpU, F2, Exterior, None, gens_arith("c", 2, 2, cap))?;
        add!(
            SpaceId::SpU,
            ZHalf,
            FreePolynomial,
            None,
            gens_arith("c", 2, 4, cap),
        )?;
        add!(
            SpaceId::SpU,
            QmodZ,
            Exterior,
            None,
            gens_arith("c", 2, 2, cap),
        )?;

        // BU, U (complex cycle)
        for tag in [Z, Q] {
            add!(
                SpaceId::BU,
                tag,
                FreePolynomial,
                None,
                with_ch0(gens_arith("c", 2, 2, cap)),
            )?;
            add!(SpaceId::U, tag, Exterior, None, gens_arith("c", 1, 2, cap))?;
        }

        let reg = Registry {
            max_degree,
            rings,
            newton_cache: Mutex::new(Vec::new()),
            maps: OnceLock::new(),
        };
        reg.confluence_self_test(40.min(cap))?;
        Ok(reg)
    }

    /// The process-wide registry with the default degree cap (48, or the
    /// TRANSGRESS_MAX_DEGREE environment variable).
    pub fn global() -> &'static Registry {
        static GLOBAL: OnceLock<Registry> = OnceLock::new();
        GLOBAL.get_or_init(|| {
            let cap = std::env::var("TRANSGRESS_MAX_DEGREE")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(48);
            Registry::new(cap).expect("registry construction failed")
        })
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Look up the registered presentation. Integral requests on BO, O and
    /// U/O resolve to the Z[1/2] presentation carrying the formal 2-torsion
    /// mark; their honest integral rings are not modeled elementwise.
    pub fn ring_of(&self, space: SpaceId, tag: CoeffTag) -> Result<Arc<RingPresentation>> {
        let tag = match (space, tag) {
            (SpaceId::BO | SpaceId::O | SpaceId::UO, CoeffTag::Z) => CoeffTag::ZHalf,
            _ => tag,
        };
        self.rings
            .get(&(space, tag))
            .cloned()
            .ok_or(EngineError::UnknownEntry {
                space: space.token().to_string(),
                coeff: tag.token().to_string(),
            })
    }

    pub fn registered_rings(&self) -> impl Iterator<Item = (SpaceId, CoeffTag, &Arc<RingPresentation>)> {
        self.rings.iter().map(|(&(s, t), p)| (s, t, p))
    }

    /// Recover (space, tag) from a presentation built by this registry.
    pub fn locate(&self, pres: &RingPresentation) -> Result<(SpaceId, CoeffTag)> {
        let (space_tok, tag_tok) = pres
            .id()
            .rsplit_once(':')
            .ok_or_else(|| EngineError::Internal(format!("foreign ring {}", pres.id())))?;
        Ok((SpaceId::parse(space_tok)?, CoeffTag::parse(tag_tok)?))
    }

    /// The degree-0 class `weight * ch0` on a space with a Z of components.
    pub fn h0_class(&self, space: SpaceId, weight: BigRational) -> Result<Element> {
        if !space.has_z_component() {
            return Err(EngineError::NotAComponentSpace {
                space: space.token().to_string(),
            });
        }
        let ring = self.ring_of(space, CoeffTag::Q)?;
        Element::generator(&ring, "ch0", 0)?.scale(&Coeff::Rat(weight))
    }

    /// Spot-check that quotient square-elimination is confluent: every free
    /// monomial up to the bound normalizes identically under the
    /// highest-square-first and lowest-square-first strategies, and every
    /// defining relation normalizes to zero. The rewrite rules of the Z and
    /// Q quotients coincide, so integral presentations suffice.
    fn confluence_self_test(&self, up_to: u32) -> Result<()> {
        for pres in self.rings.values() {
            if pres.kind() != RingKind::Quotient || pres.coeff_tag() != CoeffTag::Z {
                continue;
            }
            for rel in pres.relation_elements()? {
                let nf = rel.normalize()?;
                if !nf.is_zero() {
                    return Err(EngineError::Internal(format!(
                        "relation {rel} of {} fails to rewrite to zero",
                        pres.id()
                    )));
                }
            }
            let mut hi_cache = MemoCache::new();
            let mut lo_cache = MemoCache::new();
            for d in (2..=up_to).step_by(2) {
                for mono in free_monomials_of_degree(pres, d) {
                    if mono.factors().iter().all(|&(_, e)| e < 2) {
                        continue; // already normal
                    }
                    let a =
                        memoized_normal_form(pres, &mono, SquareStrategy::HighestFirst, &mut hi_cache)?;
                    let b =
                        memoized_normal_form(pres, &mono, SquareStrategy::LowestFirst, &mut lo_cache)?;
                    if a != b {
                        return Err(EngineError::NonTerminatingRewrite {
                            monomial: mono.text(pres),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

type MemoCache = std::collections::HashMap<Monomial, Arc<BTreeMap<Monomial, BigInt>>>;

/// Normal form of one monomial, memoized across the whole sweep: one square
/// is rewritten per step and the children resolve through the cache, so
/// overlapping rewrite chains are computed once.
fn memoized_normal_form(
    pres: &Arc<RingPresentation>,
    mono: &Monomial,
    strategy: SquareStrategy,
    cache: &mut MemoCache,
) -> Result<Arc<BTreeMap<Monomial, BigInt>>> {
    if let Some(hit) = cache.get(mono) {
        return Ok(hit.clone());
    }
    let squared: Vec<u16> = mono
        .factors()
        .iter()
        .filter(|&&(_, e)| e >= 2)
        .map(|&(i, _)| i)
        .collect();
    let target = match strategy {
        SquareStrategy::HighestFirst => squared.last().copied(),
        SquareStrategy::LowestFirst => squared.first().copied(),
    };
    let result = match target {
        None => {
            let mut nf = BTreeMap::new();
            nf.insert(mono.clone(), BigInt::from(1));
            nf
        }
        Some(g) => {
            let rule = pres
                .square_rule(g)
                .ok_or_else(|| EngineError::DegreeCapExceeded {
                    degree: 2 * pres.generator(g).degree,
                    cap: pres.max_degree(),
                })?
                .clone();
            let rest: Vec<(u16, u32)> = mono
                .factors()
                .iter()
                .filter_map(|&(i, e)| match (i == g, e) {
                    (true, e) if e > 2 => Some((i, e - 2)),
                    (true, _) => None,
                    (false, e) => Some((i, e)),
                })
                .collect();
            let rest = Monomial::from_sorted(rest, pres);
            let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
            for (rc, rfac) in &rule {
                let rhs = Monomial::from_sorted(rfac.clone(), pres);
                let Some((child, negate)) = merge_monomials(pres, &rest, &rhs) else {
                    continue;
                };
                let scale = if negate { -rc } else { rc.clone() };
                let sub = memoized_normal_form(pres, &child, strategy, cache)?;
                for (m, c) in sub.iter() {
                    let entry = acc.entry(m.clone()).or_default();
                    *entry += c * &scale;
                }
            }
            acc.retain(|_, c| !num_traits::Zero::is_zero(c));
            acc
        }
    };
    let arc = Arc::new(result);
    cache.insert(mono.clone(), arc.clone());
    Ok(arc)
}

/// All monomials of exact degree `d` ignoring the presentation's relations
/// (so quotient presentations enumerate squares too).
pub fn free_monomials_of_degree(pres: &Arc<RingPresentation>, d: u32) -> Vec<Monomial> {
    fn rec(
        pres: &Arc<RingPresentation>,
        start: usize,
        remaining: u32,
        current: &mut Vec<(u16, u32)>,
        out: &mut Vec<Monomial>,
    ) {
        if remaining == 0 {
            out.push(Monomial::from_sorted(current.clone(), pres));
            return;
        }
        for i in start..pres.generators().len() {
            let deg = pres.generator(i as u16).degree;
            if deg == 0 || deg > remaining {
                continue;
            }
            let mut e = 1;
            while deg * e <= remaining {
                current.push((i as u16, e));
                rec(pres, i + 1, remaining - deg * e, current, out);
                current.pop();
                e += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(pres, 0, d, &mut Vec::new(), &mut out);
    out
}

/// Coefficients of prod 1/(1 - t^d) over the listed degrees, up to `up_to`.
pub fn polynomial_series(degrees: &[u32], up_to: u32) -> Vec<u64> {
    let n = up_to as usize;
    let mut a = vec![0u64; n + 1];
    a[0] = 1;
    for &d in degrees {
        if d == 0 {
            continue;
        }
        for i in d as usize..=n {
            a[i] += a[i - d as usize];
        }
    }
    a
}

/// Coefficients of prod (1 + t^d) over the listed degrees, up to `up_to`.
pub fn exterior_series(degrees: &[u32], up_to: u32) -> Vec<u64> {
    let n = up_to as usize;
    let mut a = vec![0u64; n + 1];
    a[0] = 1;
    for &d in degrees {
        if d == 0 {
            continue;
        }
        for i in (d as usize..=n).rev() {
            a[i] += a[i - d as usize];
        }
    }
    a
}

/// Number of partitions of `n` into distinct positive parts.
pub fn partitions_distinct(n: u32) -> u64 {
    let series = exterior_series(&(1..=n.max(1)).collect::<Vec<_>>(), n);
    series[n as usize]
}

/// Degreewise count of normal-form monomials, for the Poincare audits.
pub fn basis_counts(pres: &Arc<RingPresentation>, up_to: u32) -> Vec<u64> {
    (0..=up_to)
        .map(|d| {
            if d == 0 {
                1
            } else {
                pres.monomials_of_degree(d).len() as u64
            }
        })
        .collect()
}

/// The closed-form Poincare series of a presentation, from its generator
/// degrees and kind alone.
pub fn expected_series(pres: &Arc<RingPresentation>, up_to: u32) -> Vec<u64> {
    let degrees: Vec<u32> = pres
        .generators()
        .iter()
        .filter(|g| g.degree > 0)
        .map(|g| g.degree)
        .collect();
    match pres.kind() {
        RingKind::FreePolynomial => polynomial_series(&degrees, up_to),
        // Quotient Sp/U has squarefree normal forms, the same count as an
        // exterior algebra on the same generators.
        RingKind::Exterior | RingKind::Quotient => exterior_series(&degrees, up_to),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bott_cycles_have_the_right_periods() {
        for &s in REAL_CYCLE.iter() {
            let mut cur = s;
            for i in 1..8 {
                cur = loop_space(cur);
                assert_ne!(cur, s, "real cycle closed early at step {i}");
            }
            assert_eq!(loop_space(cur), s);
        }
        assert_eq!(loop_space(loop_space(SpaceId::BU)), SpaceId::BU);
        assert_eq!(loop_space(SpaceId::BU), SpaceId::U);
    }

    #[test]
    fn loop_successors_match_the_periodicity_list() {
        // n-th loop space of U/O for n = 0..8
        let expected = [
            SpaceId::UO,
            SpaceId::BO,
            SpaceId::O,
            SpaceId::OU,
            SpaceId::USp,
            SpaceId::BSp,
            SpaceId::Sp,
            SpaceId::SpU,
            SpaceId::UO,
        ];
        for (n, &want) in expected.iter().enumerate() {
            assert_eq!(loop_space_iter(SpaceId::UO, n as u32), want);
        }
        assert_eq!(loop_space_iter(SpaceId::BSp, 5), SpaceId::O);
    }

    #[test]
    fn ring_lookups_match_the_tables() {
        let reg = Registry::global();
        let bu = reg.ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        assert_eq!(bu.kind(), RingKind::FreePolynomial);
        assert!(bu.find("c", 2).is_some());
        assert!(bu.find("c", 3).is_none());

        let spu2 = reg.ring_of(SpaceId::SpU, CoeffTag::F2).unwrap();
        assert_eq!(spu2.kind(), RingKind::Exterior);
        assert!(spu2.find("c", 4).is_some());

        let usp = reg.ring_of(SpaceId::USp, CoeffTag::Z).unwrap();
        assert_eq!(usp.kind(), RingKind::Exterior);
        assert!(usp.find("a", 5).is_some());
        assert!(usp.find("a", 3).is_none());

        // blank table cells error
        assert!(matches!(
            reg.ring_of(SpaceId::OU, CoeffTag::F2),
            Err(EngineError::UnknownEntry { .. })
        ));
    }

    #[test]
    fn integral_requests_on_torsion_spaces_get_the_half_ring() {
        let reg = Registry::global();
        let bo = reg.ring_of(SpaceId::BO, CoeffTag::Z).unwrap();
        assert_eq!(bo.coeff_tag(), CoeffTag::ZHalf);
        assert_eq!(bo.torsion_policy(), TorsionPolicy::Formal2Torsion);
        assert!(bo.find("p", 4).is_some());
        let o = reg.ring_of(SpaceId::O, CoeffTag::Z).unwrap();
        assert!(o.find("v", 3).is_some());
        assert_eq!(o.kind(), RingKind::Exterior);
    }

    #[test]
    fn h0_classes() {
        let reg = Registry::global();
        let one = BigRational::from_integer(BigInt::from(1));
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let two = BigRational::from_integer(BigInt::from(2));
        assert_eq!(reg.h0_class(SpaceId::BU, one).unwrap().to_string(), "ch0");
        assert_eq!(
            reg.h0_class(SpaceId::BO, half).unwrap().to_string(),
            "1/2*ch0"
        );
        assert_eq!(
            reg.h0_class(SpaceId::BSp, two).unwrap().to_string(),
            "2*ch0"
        );
        assert!(matches!(
            reg.h0_class(SpaceId::Sp, BigRational::from_integer(BigInt::from(1))),
            Err(EngineError::NotAComponentSpace { .. })
        ));
    }

    #[test]
    fn poincare_audit_of_f2_presentations() {
        let reg = Registry::global();
        for (space, tag, pres) in reg.registered_rings() {
            if tag != CoeffTag::F2 {
                continue;
            }
            assert_eq!(
                basis_counts(pres, 24),
                expected_series(pres, 24),
                "Poincare mismatch for {space}"
            );
        }
    }

    #[test]
    fn spu_rank_equals_distinct_partitions() {
        let reg = Registry::global();
        let spu = reg.ring_of(SpaceId::SpU, CoeffTag::Z).unwrap();
        for d in 1..=12u32 {
            let monos = spu.monomials_of_degree(2 * d);
            assert_eq!(
                monos.len() as u64,
                partitions_distinct(d),
                "degree {} rank",
                2 * d
            );
        }
    }

    #[test]
    fn spu_integral_and_mod2_bases_agree() {
        let reg = Registry::global();
        let spu_z = reg.ring_of(SpaceId::SpU, CoeffTag::Z).unwrap();
        let spu_f2 = reg.ring_of(SpaceId::SpU, CoeffTag::F2).unwrap();
        for d in (2..=24u32).step_by(2) {
            let a = spu_z.monomials_of_degree(d);
            let b = spu_f2.monomials_of_degree(d);
            assert_eq!(a.len(), b.len(), "degree {d}");
        }
    }

    #[test]
    fn partitions_distinct_small_values() {
        // partitions into distinct parts for n = 1..10
        let expect = [1u64, 1, 2, 2, 3, 4, 5, 6, 8, 10];
        for (n, &want) in expect.iter().enumerate() {
            assert_eq!(partitions_distinct(n as u32 + 1), want, "n = {}", n + 1);
        }
    }
}
