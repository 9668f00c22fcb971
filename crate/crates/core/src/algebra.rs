//! Sparse graded-commutative ring arithmetic with normal forms for free
//! polynomial, exterior, and relation-quotient presentations.
//!
//! Presentations are immutable after construction and shared through `Arc`;
//! elements are immutable values, so everything here is safe to send and
//! share across threads.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::coeff::{Coeff, CoeffTag};
use crate::error::{EngineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// A named ring generator. The display token carries the cohomological
/// degree as subscript: `c_4`, `w_3`. The degree-0 component class prints
/// bare as `ch0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Generator {
    pub base: String,
    pub degree: u32,
    pub parity: Parity,
}

impl Generator {
    pub fn new(base: &str, degree: u32) -> Generator {
        let parity = if degree % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        };
        Generator {
            base: base.to_string(),
            degree,
            parity,
        }
    }

    pub fn token(&self) -> String {
        if self.degree == 0 {
            self.base.clone()
        } else {
            format!("{}_{}", self.base, self.degree)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingKind {
    FreePolynomial,
    Exterior,
    Quotient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorsionPolicy {
    None,
    /// Integral computations run modulo an unspecified summand annihilated
    /// by 2, tracked as a formal mark on elements.
    Formal2Torsion,
}

/// Term data that does not yet reference a presentation; used to seed
/// quotient rewrite rules before the presentation exists.
pub type RawPoly = Vec<(BigInt, Vec<(u16, u32)>)>;

/// A cohomology ring presentation: ordered generators, a presentation kind,
/// a coefficient system and an optional formal-torsion policy. Generators
/// are materialized up to `max_degree`.
pub struct RingPresentation {
    id: String,
    generators: Vec<Generator>,
    kind: RingKind,
    coeff: CoeffTag,
    torsion_policy: TorsionPolicy,
    max_degree: u32,
    /// For quotient presentations: generator index -> right-hand side of its
    /// square, i.e. the relation solved for `g^2`.
    square_rules: BTreeMap<u16, RawPoly>,
    /// The defining relations themselves, kept for display and audits.
    relations: Vec<RawPoly>,
}

impl fmt::Debug for RingPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingPresentation({})", self.id)
    }
}

impl RingPresentation {
    pub fn new(
        id: &str,
        coeff: CoeffTag,
        kind: RingKind,
        torsion_policy: TorsionPolicy,
        generators: Vec<Generator>,
        max_degree: u32,
    ) -> Result<Arc<RingPresentation>> {
        let mut names = std::collections::HashSet::new();
        for pair in generators.windows(2) {
            let ord = (pair[0].degree, &pair[0].base) <= (pair[1].degree, &pair[1].base);
            if !ord {
                return Err(EngineError::Internal(format!(
                    "generators of {id} are not sorted by (degree, name)"
                )));
            }
        }
        for g in &generators {
            if !names.insert(g.token()) {
                return Err(EngineError::Internal(format!(
                    "duplicate generator {} in {id}",
                    g.token()
                )));
            }
            let expected = if g.degree % 2 == 0 {
                Parity::Even
            } else {
                Parity::Odd
            };
            if g.parity != expected {
                return Err(EngineError::Internal(format!(
                    "generator {} of {id} has parity inconsistent with its degree",
                    g.token()
                )));
            }
        }
        // Sign bookkeeping for odd generators in polynomial kinds over an
        // honest ring would force 2g^2 = 0; such presentations are rejected
        // outside characteristic 2.
        if kind != RingKind::Exterior && coeff != CoeffTag::F2 && coeff != CoeffTag::QmodZ {
            if let Some(g) = generators.iter().find(|g| g.parity == Parity::Odd) {
                return Err(EngineError::Internal(format!(
                    "odd generator {} in non-exterior presentation {id} over {coeff}",
                    g.token()
                )));
            }
        }
        Ok(Arc::new(RingPresentation {
            id: id.to_string(),
            generators,
            kind,
            coeff,
            torsion_policy,
            max_degree,
            square_rules: BTreeMap::new(),
            relations: Vec::new(),
        }))
    }

    /// A quotient presentation. `square_rules[g]` is the relation solved for
    /// the square of generator `g`; `relations` are the relations themselves.
    pub fn new_quotient(
        id: &str,
        coeff: CoeffTag,
        generators: Vec<Generator>,
        square_rules: BTreeMap<u16, RawPoly>,
        relations: Vec<RawPoly>,
        max_degree: u32,
    ) -> Result<Arc<RingPresentation>> {
        let base = RingPresentation::new(
            id,
            coeff,
            RingKind::Quotient,
            TorsionPolicy::None,
            generators,
            max_degree,
        )?;
        let mut pres = Arc::try_unwrap(base).map_err(|_| {
            EngineError::Internal("fresh presentation unexpectedly shared".to_string())
        })?;
        pres.square_rules = square_rules;
        pres.relations = relations;
        Ok(Arc::new(pres))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> RingKind {
        self.kind
    }

    pub fn coeff_tag(&self) -> CoeffTag {
        self.coeff
    }

    pub fn torsion_policy(&self) -> TorsionPolicy {
        self.torsion_policy
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, idx: u16) -> &Generator {
        &self.generators[idx as usize]
    }

    pub fn find(&self, base: &str, degree: u32) -> Option<u16> {
        self.generators
            .iter()
            .position(|g| g.degree == degree && g.base == base)
            .map(|i| i as u16)
    }

    pub fn find_token(&self, token: &str) -> Option<u16> {
        self.generators
            .iter()
            .position(|g| g.token() == token)
            .map(|i| i as u16)
    }

    /// The defining relations materialized as elements of this presentation.
    pub fn relation_elements(self: &Arc<Self>) -> Result<Vec<Element>> {
        self.relations
            .iter()
            .map(|raw| Element::from_raw_unreduced(self, raw))
            .collect()
    }

    pub fn has_square_rule(&self, idx: u16) -> bool {
        self.square_rules.contains_key(&idx)
    }

    pub fn square_rule(&self, idx: u16) -> Option<&RawPoly> {
        self.square_rules.get(&idx)
    }

    /// All normal-form monomials of exact degree `d`.
    pub fn monomials_of_degree(self: &Arc<Self>, d: u32) -> Vec<Monomial> {
        let squarefree = matches!(self.kind, RingKind::Exterior | RingKind::Quotient);
        let mut out = Vec::new();
        let mut current: Vec<(u16, u32)> = Vec::new();
        // Generators of degree 0 contribute arbitrarily high powers; they are
        // excluded from degree enumeration (only the component class ch0 has
        // degree 0 and it never enters a graded basis count).
        fn rec(
            pres: &RingPresentation,
            start: usize,
            remaining: u32,
            squarefree: bool,
            current: &mut Vec<(u16, u32)>,
            out: &mut Vec<Monomial>,
        ) {
            if remaining == 0 {
                out.push(Monomial::from_sorted(current.clone(), pres));
                return;
            }
            for i in start..pres.generators.len() {
                let deg = pres.generators[i].degree;
                if deg == 0 || deg > remaining {
                    continue;
                }
                let max_exp = if squarefree { 1 } else { remaining / deg };
                for e in 1..=max_exp {
                    if deg * e > remaining {
                        break;
                    }
                    current.push((i as u16, e));
                    rec(pres, i + 1, remaining - deg * e, squarefree, current, out);
                    current.pop();
                }
            }
        }
        rec(self, 0, d, squarefree, &mut current, &mut out);
        out.sort();
        out
    }
}

/// A normal-form monomial: factors sorted by generator index with positive
/// exponents, plus its cached total degree. The empty monomial is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    factors: Vec<(u16, u32)>,
    degree: u32,
}

impl Monomial {
    pub fn unit() -> Monomial {
        Monomial {
            factors: Vec::new(),
            degree: 0,
        }
    }

    pub fn generator(idx: u16, pres: &RingPresentation) -> Monomial {
        Monomial {
            factors: vec![(idx, 1)],
            degree: pres.generator(idx).degree,
        }
    }

    pub fn from_sorted(factors: Vec<(u16, u32)>, pres: &RingPresentation) -> Monomial {
        let degree = factors
            .iter()
            .map(|&(i, e)| pres.generator(i).degree * e)
            .sum();
        Monomial { factors, degree }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn factors(&self) -> &[(u16, u32)] {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_exponent(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn text(&self, pres: &RingPresentation) -> String {
        if self.is_unit() {
            return "1".to_string();
        }
        self.factors
            .iter()
            .map(|&(i, e)| {
                let tok = pres.generator(i).token();
                if e == 1 {
                    tok
                } else {
                    format!("{tok}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Canonical term order: ascending degree; within a degree, the monomial
/// with the larger power of the earliest generator comes first (the order
/// used for printing, so `c_2^2` precedes `c_4`).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| {
            let mut i = 0;
            loop {
                match (self.factors.get(i), other.factors.get(i)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some(&(ga, ea)), Some(&(gb, eb))) => {
                        if ga != gb {
                            return ga.cmp(&gb);
                        }
                        if ea != eb {
                            return eb.cmp(&ea);
                        }
                    }
                }
                i += 1;
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An element: a finite formal sum of (coefficient, monomial) pairs in one
/// presentation, always kept in normal form, plus an optional formal
/// 2-torsion mark.
#[derive(Clone)]
pub struct Element {
    ring: Arc<RingPresentation>,
    terms: BTreeMap<Monomial, Coeff>,
    torsion: bool,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element[{}]({})", self.ring.id(), self)
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.ring.id() == other.ring.id()
            && self.torsion == other.torsion
            && self.terms == other.terms
    }
}

impl Eq for Element {}

impl Element {
    pub fn zero(ring: &Arc<RingPresentation>) -> Element {
        Element {
            ring: ring.clone(),
            terms: BTreeMap::new(),
            torsion: false,
        }
    }

    pub fn scalar(ring: &Arc<RingPresentation>, c: Coeff) -> Element {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(), c);
        }
        Element {
            ring: ring.clone(),
            terms,
            torsion: false,
        }
    }

    pub fn generator(ring: &Arc<RingPresentation>, base: &str, degree: u32) -> Result<Element> {
        let idx = ring.find(base, degree).ok_or_else(|| {
            if degree > ring.max_degree() {
                EngineError::DegreeCapExceeded {
                    degree,
                    cap: ring.max_degree(),
                }
            } else {
                EngineError::UnknownGenerator {
                    name: Generator::new(base, degree).token(),
                    ring: ring.id().to_string(),
                }
            }
        })?;
        let mono = Monomial::generator(idx, ring);
        Element::from_terms(ring, vec![(mono, Coeff::one(ring.coeff_tag()))], false)
    }

    /// Build an element from term data, merging duplicates and applying the
    /// ring's normal form.
    pub fn from_terms(
        ring: &Arc<RingPresentation>,
        terms: Vec<(Monomial, Coeff)>,
        torsion: bool,
    ) -> Result<Element> {
        if torsion && ring.torsion_policy() == TorsionPolicy::None {
            return Err(EngineError::TorsionUnsupported {
                ring: ring.id().to_string(),
            });
        }
        let mut acc: BTreeMap<Monomial, Coeff> = BTreeMap::new();
        for (mono, coeff) in terms {
            if coeff.is_zero() {
                continue;
            }
            for (m, c) in normalize_monomial(ring, mono, coeff)? {
                merge_term(&mut acc, m, c)?;
            }
        }
        Ok(Element {
            ring: ring.clone(),
            terms: acc,
            torsion,
        })
    }

    fn from_raw_unreduced(ring: &Arc<RingPresentation>, raw: &RawPoly) -> Result<Element> {
        // Relations are displayed as stated, without rewriting them to zero.
        let mut terms = BTreeMap::new();
        for (c, factors) in raw {
            let mono = Monomial::from_sorted(factors.clone(), ring);
            let coeff = Coeff::from_rational(
                ring.coeff_tag(),
                BigRational::from_integer(c.clone()),
            )?;
            merge_term(&mut terms, mono, coeff)?;
        }
        Ok(Element {
            ring: ring.clone(),
            terms,
            torsion: false,
        })
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Option<&Coeff> {
        self.terms.get(mono)
    }

    pub fn has_torsion_mark(&self) -> bool {
        self.torsion
    }

    pub fn with_torsion_mark(mut self) -> Result<Element> {
        if self.ring.torsion_policy() == TorsionPolicy::None {
            return Err(EngineError::TorsionUnsupported {
                ring: self.ring.id().to_string(),
            });
        }
        self.torsion = true;
        Ok(self)
    }

    pub fn clear_torsion_mark(mut self) -> Element {
        self.torsion = false;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && !self.torsion
    }

    fn check_same_ring(&self, other: &Element) -> Result<()> {
        if self.ring.id() != other.ring.id() {
            return Err(EngineError::PresentationMismatch {
                left: self.ring.id().to_string(),
                right: other.ring.id().to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_same_ring(other)?;
        let mut acc = self.terms.clone();
        for (m, c) in &other.terms {
            merge_term(&mut acc, m.clone(), c.clone())?;
        }
        Ok(Element {
            ring: self.ring.clone(),
            terms: acc,
            torsion: self.torsion || other.torsion,
        })
    }

    pub fn neg(&self) -> Element {
        Element {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
            torsion: self.torsion,
        }
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.add(&other.neg())
    }

    /// Scalar action. An even integer scalar annihilates the formal
    /// 2-torsion mark.
    pub fn scale(&self, c: &Coeff) -> Result<Element> {
        let mut terms = BTreeMap::new();
        for (m, old) in &self.terms {
            let prod = old.mul(c)?;
            if !prod.is_zero() {
                terms.insert(m.clone(), prod);
            }
        }
        Ok(Element {
            ring: self.ring.clone(),
            terms,
            torsion: self.torsion && !c.is_even_integer(),
        })
    }

    pub fn scale_int(&self, n: i64) -> Result<Element> {
        if self.ring.coeff_tag() == CoeffTag::F2 {
            return self.scale(&Coeff::from_int(CoeffTag::F2, BigInt::from(n)));
        }
        self.scale(&Coeff::Int(BigInt::from(n)))
    }

    /// Graded-commutative product.
    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_same_ring(other)?;
        if self.ring.coeff_tag() == CoeffTag::QmodZ {
            return Err(EngineError::NonRingCoefficients);
        }
        let mut raw: Vec<(Monomial, Coeff)> = Vec::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some((mono, negate)) = merge_monomials(&self.ring, ma, mb) {
                    let mut c = ca.mul(cb)?;
                    if negate {
                        c = c.neg();
                    }
                    raw.push((mono, c));
                }
            }
        }
        let mut out = Element::from_terms(&self.ring, raw, false)?;
        out.torsion = (self.torsion || other.torsion)
            && self.ring.torsion_policy() == TorsionPolicy::Formal2Torsion;
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Element> {
        let mut acc = Element::scalar(&self.ring, Coeff::one(self.ring.coeff_tag()));
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Idempotent re-normalization.
    pub fn normalize(&self) -> Result<Element> {
        let mut out = Element::from_terms(
            &self.ring,
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
            false,
        )?;
        out.torsion = self.torsion;
        Ok(out)
    }

    /// The sum of terms of exact degree `d`.
    pub fn degree_part(&self, d: u32) -> Element {
        Element {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
            torsion: false,
        }
    }

    /// The common degree of all terms, when homogeneous. The zero element
    /// reports degree 0.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys();
        let first = match it.next() {
            None => return Some(0),
            Some(m) => m.degree(),
        };
        if it.all(|m| m.degree() == first) {
            Some(first)
        } else {
            None
        }
    }

    /// True iff every monomial has total exponent at least 2.
    pub fn is_decomposable(&self) -> bool {
        self.terms.keys().all(|m| m.total_exponent() >= 2)
    }

    /// Reinterpret this element in another presentation by matching
    /// generators on (name, degree). Coefficients are converted within the
    /// same family (lattice to lattice, F2 to F2, Q/Z to Q/Z); the result is
    /// normalized by the target presentation.
    pub fn transport(&self, target: &Arc<RingPresentation>) -> Result<Element> {
        let src_tag = self.ring.coeff_tag();
        let dst_tag = target.coeff_tag();
        let mut terms = Vec::new();
        for (mono, coeff) in &self.terms {
            let mut factors = Vec::new();
            for &(idx, e) in mono.factors() {
                let g = self.ring.generator(idx);
                let new_idx = target.find(&g.base, g.degree).ok_or_else(|| {
                    EngineError::UnknownGenerator {
                        name: g.token(),
                        ring: target.id().to_string(),
                    }
                })?;
                factors.push((new_idx, e));
            }
            factors.sort_by_key(|&(i, _)| i);
            let new_coeff = match (src_tag.is_lattice_family(), dst_tag.is_lattice_family()) {
                (true, true) => {
                    let q = coeff.as_rational().ok_or_else(|| {
                        EngineError::Internal("lattice coefficient expected".into())
                    })?;
                    Coeff::from_rational(dst_tag, q)?
                }
                _ => {
                    if (src_tag == CoeffTag::F2) != (dst_tag == CoeffTag::F2)
                        || (src_tag == CoeffTag::QmodZ) != (dst_tag == CoeffTag::QmodZ)
                    {
                        return Err(EngineError::Internal(format!(
                            "transport cannot convert {src_tag} coefficients to {dst_tag}"
                        )));
                    }
                    coeff.clone()
                }
            };
            terms.push((Monomial::from_sorted(factors, target), new_coeff));
        }
        let mut out = Element::from_terms(target, terms, false)?;
        out.torsion = self.torsion && target.torsion_policy() == TorsionPolicy::Formal2Torsion;
        Ok(out)
    }
}

fn merge_term(acc: &mut BTreeMap<Monomial, Coeff>, mono: Monomial, coeff: Coeff) -> Result<()> {
    if coeff.is_zero() {
        return Ok(());
    }
    match acc.remove(&mono) {
        None => {
            acc.insert(mono, coeff);
        }
        Some(old) => {
            let sum = old.add(&coeff)?;
            if !sum.is_zero() {
                acc.insert(mono, sum);
            }
        }
    }
    Ok(())
}

/// Merge two normal-form monomials. Returns `None` when the product dies
/// (exterior square), otherwise the merged monomial and whether the
/// graded sign is negative.
pub fn merge_monomials(
    pres: &RingPresentation,
    a: &Monomial,
    b: &Monomial,
) -> Option<(Monomial, bool)> {
    let mut merged: Vec<(u16, u32)> = Vec::with_capacity(a.factors().len() + b.factors().len());
    let (mut i, mut j) = (0, 0);
    let fa = a.factors();
    let fb = b.factors();
    while i < fa.len() || j < fb.len() {
        match (fa.get(i), fb.get(j)) {
            (Some(&(ga, ea)), Some(&(gb, eb))) => {
                if ga == gb {
                    merged.push((ga, ea + eb));
                    i += 1;
                    j += 1;
                } else if ga < gb {
                    merged.push((ga, ea));
                    i += 1;
                } else {
                    merged.push((gb, eb));
                    j += 1;
                }
            }
            (Some(&f), None) => {
                merged.push(f);
                i += 1;
            }
            (None, Some(&f)) => {
                merged.push(f);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    if pres.kind() == RingKind::Exterior && merged.iter().any(|&(_, e)| e >= 2) {
        return None;
    }
    let negate = if pres.coeff_tag().is_lattice_family() {
        graded_sign_is_negative(pres, fa, fb)
    } else {
        false
    };
    Some((Monomial::from_sorted(merged, pres), negate))
}

/// Count the transpositions of odd-parity factors needed to interleave the
/// factor sequence of `b` into that of `a`.
fn graded_sign_is_negative(
    pres: &RingPresentation,
    fa: &[(u16, u32)],
    fb: &[(u16, u32)],
) -> bool {
    let odd_exps = |f: &[(u16, u32)]| -> Vec<(u16, u32)> {
        f.iter()
            .filter(|&&(i, _)| pres.generator(i).parity == Parity::Odd)
            .copied()
            .collect()
    };
    let oa = odd_exps(fa);
    if oa.is_empty() {
        return false;
    }
    let ob = odd_exps(fb);
    let mut inversions: u64 = 0;
    for &(gb, eb) in &ob {
        let passed: u64 = oa
            .iter()
            .filter(|&&(ga, _)| ga > gb)
            .map(|&(_, ea)| u64::from(ea))
            .sum();
        inversions += passed * u64::from(eb);
    }
    inversions % 2 == 1
}

/// Rewrite a single scaled monomial into normal form with respect to the
/// presentation: exterior squares die, quotient squares are eliminated by
/// repeatedly rewriting the highest-degree square with its relation.
fn normalize_monomial(
    ring: &Arc<RingPresentation>,
    mono: Monomial,
    coeff: Coeff,
) -> Result<Vec<(Monomial, Coeff)>> {
    match ring.kind() {
        RingKind::FreePolynomial => Ok(vec![(mono, coeff)]),
        RingKind::Exterior => {
            if mono.factors().iter().any(|&(_, e)| e >= 2) {
                Ok(Vec::new())
            } else {
                Ok(vec![(mono, coeff)])
            }
        }
        RingKind::Quotient => rewrite_squares(ring, mono, coeff, SquareStrategy::HighestFirst),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum SquareStrategy {
    HighestFirst,
    LowestFirst,
}

/// Square-elimination rewriting for quotient presentations. Exposed with a
/// pluggable strategy so the registry can spot-check confluence.
pub fn rewrite_squares(
    ring: &Arc<RingPresentation>,
    mono: Monomial,
    coeff: Coeff,
    strategy: SquareStrategy,
) -> Result<Vec<(Monomial, Coeff)>> {
    // Pending terms are merged by monomial as they are produced; without the
    // merging, repeated squares branch exponentially.
    let mut work: BTreeMap<Monomial, Coeff> = BTreeMap::new();
    merge_term(&mut work, mono, coeff)?;
    let mut done: Vec<(Monomial, Coeff)> = Vec::new();
    let mut steps: u64 = 0;
    while let Some((m, c)) = work.pop_first() {
        steps += 1;
        if steps > 1_000_000 {
            return Err(EngineError::NonTerminatingRewrite {
                monomial: m.text(ring),
            });
        }
        let squared: Vec<u16> = m
            .factors()
            .iter()
            .filter(|&&(_, e)| e >= 2)
            .map(|&(i, _)| i)
            .collect();
        let target = match strategy {
            SquareStrategy::HighestFirst => squared.last().copied(),
            SquareStrategy::LowestFirst => squared.first().copied(),
        };
        let Some(g) = target else {
            done.push((m, c));
            continue;
        };
        let rule = ring.square_rules.get(&g).ok_or_else(|| {
            let gen = ring.generator(g);
            EngineError::DegreeCapExceeded {
                degree: 2 * gen.degree,
                cap: ring.max_degree(),
            }
        })?;
        // m = rest * g^2
        let rest: Vec<(u16, u32)> = m
            .factors()
            .iter()
            .filter_map(|&(i, e)| {
                if i == g {
                    if e > 2 {
                        Some((i, e - 2))
                    } else {
                        None
                    }
                } else {
                    Some((i, e))
                }
            })
            .collect();
        let rest = Monomial::from_sorted(rest, ring);
        for (rc, rfac) in rule {
            let rhs = Monomial::from_sorted(rfac.clone(), ring);
            // Quotient presentations have even generators only, so no sign.
            let Some((merged, negate)) = merge_monomials(ring, &rest, &rhs) else {
                continue;
            };
            let mut c2 = c.mul(&Coeff::from_rational(
                ring.coeff_tag(),
                BigRational::from_integer(rc.clone()),
            )?)?;
            if negate {
                c2 = c2.neg();
            }
            merge_term(&mut work, merged, c2)?;
        }
    }
    Ok(done)
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            if self.torsion {
                return f.write_str("Tors");
            }
            return f.write_str("0");
        }
        let mut first = true;
        for (mono, coeff) in &self.terms {
            let neg = coeff.is_negative();
            let mag = coeff.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if mono.is_unit() {
                write!(f, "{}", mag.text())?;
            } else if mag.is_one() {
                write!(f, "{}", mono.text(&self.ring))?;
            } else {
                write!(f, "{}*{}", mag.text(), mono.text(&self.ring))?;
            }
        }
        if self.torsion {
            f.write_str(" + Tors")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn free_z(id: &str, gens: &[(&str, u32)]) -> Arc<RingPresentation> {
        RingPresentation::new(
            id,
            CoeffTag::Z,
            RingKind::FreePolynomial,
            TorsionPolicy::None,
            gens.iter().map(|&(b, d)| Generator::new(b, d)).collect(),
            48,
        )
        .unwrap()
    }

    fn exterior(id: &str, tag: CoeffTag, gens: &[(&str, u32)]) -> Arc<RingPresentation> {
        RingPresentation::new(
            id,
            tag,
            RingKind::Exterior,
            TorsionPolicy::None,
            gens.iter().map(|&(b, d)| Generator::new(b, d)).collect(),
            48,
        )
        .unwrap()
    }

    /// The integral Sp/U quotient on c_2, c_4, ..., with each square
    /// rewritten by the alternating-sum relation in its degree.
    fn spu_quotient(cap: u32) -> Arc<RingPresentation> {
        let gens: Vec<Generator> = (1..=cap / 2)
            .map(|i| Generator::new("c", 2 * i))
            .collect();
        let mut square_rules = BTreeMap::new();
        let mut relations = Vec::new();
        for k in 1..=cap / 4 {
            // relation: sum_{i+j=2k} (-1)^i c_{2i} c_{2j} = 0, c_0 = 1
            let mut rel: RawPoly = Vec::new();
            for i in 0..=2 * k {
                let j = 2 * k - i;
                let sign = if i % 2 == 0 { 1 } else { -1 };
                let mut fac: Vec<(u16, u32)> = Vec::new();
                if i > 0 {
                    fac.push(((i - 1) as u16, 1));
                }
                if j > 0 {
                    let idx = (j - 1) as u16;
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
            // solved for c_{2k}^2:
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
        RingPresentation::new_quotient("test:SpU", CoeffTag::Z, gens, square_rules, relations, cap)
            .unwrap()
    }

    fn gen(ring: &Arc<RingPresentation>, tok: &str) -> Element {
        let (base, degree) = tok.rsplit_once('_').unwrap();
        Element::generator(ring, base, degree.parse().unwrap()).unwrap()
    }

    #[test]
    fn add_merges_and_cancels() {
        let r = free_z("test:BU", &[("c", 2), ("c", 4)]);
        let c2 = gen(&r, "c_2");
        let sum = c2.add(&c2).unwrap();
        assert_eq!(sum.to_string(), "2*c_2");
        let diff = sum.sub(&sum).unwrap();
        assert!(diff.is_zero());
        assert_eq!(diff.to_string(), "0");
    }

    #[test]
    fn add_over_f2_kills_doubles() {
        let r = RingPresentation::new(
            "test:BOf2",
            CoeffTag::F2,
            RingKind::FreePolynomial,
            TorsionPolicy::None,
            vec![Generator::new("w", 1), Generator::new("w", 2)],
            48,
        )
        .unwrap();
        let w2 = gen(&r, "w_2");
        assert!(w2.add(&w2).unwrap().is_zero());
    }

    #[test]
    fn cancellation_against_quotient_partner() {
        let r = free_z("test:BU", &[("c", 2), ("c", 4)]);
        let c2 = gen(&r, "c_2");
        let c4 = gen(&r, "c_4");
        // (c_2^2 - 2 c_4) + 2 c_4 = c_2^2
        let e = c2
            .pow(2)
            .unwrap()
            .sub(&c4.scale_int(2).unwrap())
            .unwrap()
            .add(&c4.scale_int(2).unwrap())
            .unwrap();
        assert_eq!(e.to_string(), "c_2^2");
    }

    #[test]
    fn exterior_anticommutes_over_z() {
        let r = exterior("test:USp", CoeffTag::Z, &[("a", 1), ("a", 5)]);
        let a1 = gen(&r, "a_1");
        let a5 = gen(&r, "a_5");
        let left = a1.mul(&a5).unwrap();
        let right = a5.mul(&a1).unwrap();
        assert_eq!(left.to_string(), "a_1*a_5");
        assert_eq!(right.to_string(), "-a_1*a_5");
        assert_eq!(left.neg(), right);
        assert!(a1.mul(&a1).unwrap().is_zero());
    }

    #[test]
    fn exterior_square_dies_over_f2() {
        let r = exterior("test:SpUf2", CoeffTag::F2, &[("c", 2), ("c", 4)]);
        let c2 = gen(&r, "c_2");
        assert!(c2.mul(&c2).unwrap().is_zero());
    }

    #[test]
    fn polynomial_square_survives_over_f2() {
        let r = RingPresentation::new(
            "test:BOf2",
            CoeffTag::F2,
            RingKind::FreePolynomial,
            TorsionPolicy::None,
            vec![Generator::new("w", 1), Generator::new("w", 2)],
            48,
        )
        .unwrap();
        let w1 = gen(&r, "w_1");
        assert_eq!(w1.mul(&w1).unwrap().to_string(), "w_1^2");
    }

    #[test]
    fn quotient_square_rewrites() {
        let r = spu_quotient(48);
        let c2 = gen(&r, "c_2");
        assert_eq!(c2.mul(&c2).unwrap().to_string(), "2*c_4");
        // c_2^3 -> 2 c_2 c_4
        assert_eq!(c2.pow(3).unwrap().to_string(), "2*c_2*c_4");
        // c_4^2 -> 2 c_2 c_6 - 2 c_8
        let c4 = gen(&r, "c_4");
        assert_eq!(c4.mul(&c4).unwrap().to_string(), "2*c_2*c_6 - 2*c_8");
    }

    #[test]
    fn quotient_relations_normalize_to_zero() {
        let r = spu_quotient(48);
        for rel in r.relation_elements().unwrap() {
            assert!(rel.normalize().unwrap().is_zero(), "relation {rel} survived");
        }
    }

    #[test]
    fn quotient_confluence_small_sample() {
        let r = spu_quotient(48);
        for d in (2..=24).step_by(2) {
            for mono in enumerate_free_monomials(&r, d) {
                let one = Coeff::one(CoeffTag::Z);
                let hi = rewrite_squares(&r, mono.clone(), one.clone(), SquareStrategy::HighestFirst)
                    .unwrap();
                let lo =
                    rewrite_squares(&r, mono.clone(), one, SquareStrategy::LowestFirst).unwrap();
                let a = Element::from_terms(&r, hi, false).unwrap();
                let b = Element::from_terms(&r, lo, false).unwrap();
                assert_eq!(a, b, "strategies disagree on {}", mono.text(&r));
            }
        }
    }

    /// All monomials of degree d ignoring ring relations (used to feed the
    /// confluence check monomials that are not in normal form).
    fn enumerate_free_monomials(r: &Arc<RingPresentation>, d: u32) -> Vec<Monomial> {
        fn rec(
            r: &Arc<RingPresentation>,
            start: usize,
            remaining: u32,
            current: &mut Vec<(u16, u32)>,
            out: &mut Vec<Monomial>,
        ) {
            if remaining == 0 {
                out.push(Monomial::from_sorted(current.clone(), r));
                return;
            }
            for i in start..r.generators().len() {
                let deg = r.generator(i as u16).degree;
                if deg == 0 || deg > remaining {
                    continue;
                }
                current.push((i as u16, 1));
                let pos = current.len() - 1;
                let mut e = 1;
                while deg * e <= remaining {
                    current[pos].1 = e;
                    rec(r, i + 1, remaining - deg * e, current, out);
                    e += 1;
                }
                current.pop();
            }
        }
        let mut out = Vec::new();
        rec(r, 0, d, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn normalize_is_idempotent() {
        let r = spu_quotient(48);
        let c2 = gen(&r, "c_2");
        let e = c2.pow(5).unwrap();
        let once = e.normalize().unwrap();
        assert_eq!(once, once.normalize().unwrap());
    }

    #[test]
    fn degree_part_extracts() {
        let r = free_z("test:BU", &[("c", 2), ("c", 4)]);
        let e = gen(&r, "c_2").add(&gen(&r, "c_4")).unwrap();
        assert_eq!(e.degree_part(4).to_string(), "c_4");
        assert!(e.degree_part(6).is_zero());
    }

    #[test]
    fn decomposability() {
        let r = free_z("test:BU", &[("c", 2), ("c", 4), ("c", 6)]);
        let c2c4 = gen(&r, "c_2").mul(&gen(&r, "c_4")).unwrap();
        assert!(c2c4.is_decomposable());
        assert!(!gen(&r, "c_6").is_decomposable());
        let mixed = gen(&r, "c_6").scale_int(2).unwrap().add(&c2c4).unwrap();
        assert!(!mixed.is_decomposable());
    }

    #[test]
    fn torsion_mark_dies_under_even_scalars() {
        let r = RingPresentation::new(
            "test:BO",
            CoeffTag::ZHalf,
            RingKind::FreePolynomial,
            TorsionPolicy::Formal2Torsion,
            vec![Generator::new("p", 4)],
            48,
        )
        .unwrap();
        let x = gen(&r, "p_4").with_torsion_mark().unwrap();
        assert!(x.has_torsion_mark());
        let doubled = x.scale_int(2).unwrap();
        assert!(!doubled.has_torsion_mark());
        let tripled = x.scale_int(3).unwrap();
        assert!(tripled.has_torsion_mark());
    }

    #[test]
    fn torsion_mark_rejected_without_policy() {
        let r = free_z("test:BU", &[("c", 2)]);
        assert!(gen(&r, "c_2").with_torsion_mark().is_err());
    }

    #[test]
    fn presentation_mismatch_is_reported() {
        let r1 = free_z("test:A", &[("c", 2)]);
        let r2 = free_z("test:B", &[("c", 2)]);
        let e1 = gen(&r1, "c_2");
        let e2 = gen(&r2, "c_2");
        assert!(matches!(
            e1.add(&e2),
            Err(EngineError::PresentationMismatch { .. })
        ));
    }

    #[test]
    fn canonical_term_order_in_display() {
        let r = free_z("test:BU", &[("c", 2), ("c", 4), ("c", 6)]);
        let c2 = gen(&r, "c_2");
        let c4 = gen(&r, "c_4");
        let c6 = gen(&r, "c_6");
        let sigma3 = c2
            .pow(3)
            .unwrap()
            .sub(&c2.mul(&c4).unwrap().scale_int(3).unwrap())
            .unwrap()
            .add(&c6.scale_int(3).unwrap())
            .unwrap();
        assert_eq!(sigma3.to_string(), "c_2^3 - 3*c_2*c_4 + 3*c_6");
    }

    #[test]
    fn monomial_enumeration_counts() {
        // free polynomial on c_2, c_4, c_6: monomials of degree 2d are the
        // partitions of d into parts <= 3
        let r = free_z("test:BU", &[("c", 2), ("c", 4), ("c", 6)]);
        assert_eq!(r.monomials_of_degree(12).len(), 7);
        // exterior: squarefree only
        let e = exterior("test:E", CoeffTag::Z, &[("a", 1), ("a", 5)]);
        assert_eq!(e.monomials_of_degree(6).len(), 1);
        assert_eq!(e.monomials_of_degree(2).len(), 0);
    }

    #[test]
    fn scalar_element_display() {
        let r = free_z("test:BU", &[("c", 2)]);
        let half = Element::scalar(
            &RingPresentation::new(
                "test:BUQ",
                CoeffTag::Q,
                RingKind::FreePolynomial,
                TorsionPolicy::None,
                vec![Generator::new("c", 2)],
                48,
            )
            .unwrap(),
            Coeff::Rat(BigRational::new(BigInt::from(1), BigInt::from(2))),
        );
        assert_eq!(half.to_string(), "1/2");
        assert_eq!(Element::zero(&r).to_string(), "0");
        assert!(BigInt::zero().is_zero());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_element(r: Arc<RingPresentation>) -> impl Strategy<Value = Element> {
            // low-degree generators only, so that triple products stay
            // inside the materialized rewrite rules
            let n_gens = 4.min(r.generators().len());
            proptest::collection::vec((0..n_gens, 1u32..3, -4i64..=4), 0..4).prop_map(
                move |picks| {
                    let mut acc = Element::zero(&r);
                    for (g, e, c) in picks {
                        let gene = Element::generator(
                            &r,
                            &r.generator(g as u16).base.clone(),
                            r.generator(g as u16).degree,
                        )
                        .unwrap();
                        let term = gene.pow(e).unwrap().scale_int(c).unwrap();
                        acc = acc.add(&term).unwrap();
                    }
                    acc
                },
            )
        }

        proptest! {
            #[test]
            fn addition_roundtrip(
                (a, b) in (Just(()))
                    .prop_flat_map(|_| {
                        let r = spu_quotient(48);
                        (arb_element(r.clone()), arb_element(r))
                    })
            ) {
                let sum = a.add(&b).unwrap();
                prop_assert_eq!(sum.sub(&b).unwrap(), a);
            }

            #[test]
            fn multiplication_associative_and_commutative_even(
                (a, b, c) in (Just(()))
                    .prop_flat_map(|_| {
                        let r = spu_quotient(48);
                        (arb_element(r.clone()), arb_element(r.clone()), arb_element(r))
                    })
            ) {
                // all generators even: plain commutativity
                prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
                let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
                let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
                prop_assert_eq!(ab_c, a_bc);
            }
        }

        #[test]
        fn graded_commutativity_odd_generators() {
            let r = exterior(
                "test:U",
                CoeffTag::Z,
                &[("c", 1), ("c", 3), ("c", 5), ("c", 7)],
            );
            let gens = ["c_1", "c_3", "c_5", "c_7"];
            for ga in gens {
                for gb in gens {
                    let a = gen(&r, ga);
                    let b = gen(&r, gb);
                    let left = a.mul(&b).unwrap();
                    // odd * odd anticommutes
                    let right = b.mul(&a).unwrap().neg();
                    assert_eq!(left, right, "{ga},{gb}");
                }
            }
        }
    }
}
