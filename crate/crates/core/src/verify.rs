//! Verification suites: oracle agreements, the final-answer reproduction,
//! map-table consistency audits, registry audits, and the randomized parser
//! round-trip properties. Randomized cases draw from a fixed seed so runs
//! are reproducible; the seed can be overridden.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Element, Monomial, RingPresentation, TorsionPolicy};
use crate::coeff::{Coeff, CoeffTag, QmodZ, F2};
use crate::emit;
use crate::error::{EngineError, Result};
use crate::maps;
use crate::parse;
use crate::spaces::{
    basis_counts, expected_series, loop_space, partitions_distinct, Registry, SpaceId, REAL_CYCLE,
};
use crate::symfunc;
use crate::universal;

pub const DEFAULT_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Newton,
    Revi1,
    FinalAnswer,
    MapConsistency,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite> {
        match s {
            "all" => Ok(Suite::All),
            "newton" => Ok(Suite::Newton),
            "revi1" => Ok(Suite::Revi1),
            "final-answer" => Ok(Suite::FinalAnswer),
            "map-consistency" => Ok(Suite::MapConsistency),
            other => Err(EngineError::Internal(format!(
                "unknown suite `{other}` (expected all, newton, revi1, final-answer or map-consistency)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Newton => "newton",
            Suite::Revi1 => "revi1",
            Suite::FinalAnswer => "final-answer",
            Suite::MapConsistency => "map-consistency",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub cases: Vec<CaseResult>,
    pub wall_ms: u128,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for case in &self.cases {
            if case.pass {
                out.push_str(&format!("ok   {}\n", case.name));
            } else {
                out.push_str(&format!(
                    "FAIL {}{}\n",
                    case.name,
                    case.detail
                        .as_deref()
                        .map(|d| format!(": {d}"))
                        .unwrap_or_default()
                ));
            }
        }
        let failed = self.cases.iter().filter(|c| !c.pass).count();
        out.push_str(&format!(
            "suite {}: {} cases, {} failed, {} ms\n",
            self.suite,
            self.cases.len(),
            failed,
            self.wall_ms
        ));
        out
    }
}

fn case(name: impl Into<String>, pass: bool, detail: Option<String>) -> CaseResult {
    CaseResult {
        name: name.into(),
        pass,
        detail,
    }
}

/// Run a closure per case, turning engine errors into failures.
fn checked(name: impl Into<String>, f: impl FnOnce() -> Result<(bool, Option<String>)>) -> CaseResult {
    let name = name.into();
    match f() {
        Ok((pass, detail)) => case(name, pass, detail),
        Err(e) => case(name, false, Some(format!("error: {e}"))),
    }
}

pub fn run_suite(reg: &Registry, suite: Suite, seed: u64) -> VerifyReport {
    let start = Instant::now();
    let mut cases = Vec::new();
    match suite {
        Suite::Newton => cases.extend(newton_cases(reg)),
        Suite::Revi1 => cases.extend(revi1_cases(reg)),
        Suite::FinalAnswer => cases.extend(final_answer_cases(reg)),
        Suite::MapConsistency => cases.extend(map_consistency_cases(reg, seed)),
        Suite::All => {
            cases.extend(newton_cases(reg));
            cases.extend(revi1_cases(reg));
            cases.extend(final_answer_cases(reg));
            cases.extend(map_consistency_cases(reg, seed));
            cases.extend(registry_cases(reg));
            cases.extend(parser_cases(reg, seed));
        }
    }
    VerifyReport {
        suite: suite.name().to_string(),
        cases,
        wall_ms: start.elapsed().as_millis(),
    }
}

// ---------------------------------------------------------------------------

pub fn newton_cases(reg: &Registry) -> Vec<CaseResult> {
    (1..=10u32)
        .map(|m| {
            checked(format!("newton-oracle(m={m})"), || {
                let recursion = symfunc::newton(reg, m)?;
                let oracle = symfunc::roots_oracle(reg, m, m + 2)?;
                let pass = recursion == oracle;
                Ok((
                    pass,
                    (!pass).then(|| format!("recursion {recursion} vs oracle {oracle}")),
                ))
            })
        })
        .collect()
}

pub fn revi1_cases(reg: &Registry) -> Vec<CaseResult> {
    (1..=10u32)
        .map(|m| {
            checked(format!("revi1-congruence(m={m})"), || {
                Ok((symfunc::revi1_check(reg, m)?, None))
            })
        })
        .collect()
}

/// The frozen mod-2 simplification target: `c_{4k-6} + c_2 c_{4k-8} + ... +
/// c_{2k-4} c_{2k-2}` in the exterior mod-2 ring of Sp/U.
fn mod2_newton_expected(reg: &Registry, k: u32) -> Result<Element> {
    let ring = reg.ring_of(SpaceId::SpU, CoeffTag::F2)?;
    let d = 4 * k - 6;
    let mut terms = Vec::new();
    let mut i = 0;
    while 2 * i < d - 2 * i {
        let mut factors = Vec::new();
        if i > 0 {
            factors.push((
                ring.find("c", 2 * i)
                    .ok_or_else(|| EngineError::Internal("generator missing".into()))?,
                1,
            ));
        }
        factors.push((
            ring.find("c", d - 2 * i)
                .ok_or_else(|| EngineError::Internal("generator missing".into()))?,
            1,
        ));
        factors.sort_by_key(|&(g, _)| g);
        terms.push((Monomial::from_sorted(factors, &ring), Coeff::F2(F2::ONE)));
        i += 1;
    }
    Element::from_terms(&ring, terms, false)
}

pub fn final_answer_cases(reg: &Registry) -> Vec<CaseResult> {
    let mut cases = Vec::new();
    for (n, k) in universal::parameter_range(15, 8) {
        cases.push(checked(format!("final-answer(n={n},k={k})"), || {
            let got = universal::d_universal(reg, n, k)?;
            let want = universal::expected_final_answer(reg, n, k)?;
            if got.value != want {
                return Ok((
                    false,
                    Some(format!("derived {} vs table {}", got.value, want)),
                ));
            }
            if !got.value.scale_int(2)?.is_zero() {
                return Ok((false, Some("class is not 2-torsion".to_string())));
            }
            Ok((true, None))
        }));
    }
    for (n, k) in universal::parameter_range(15, 8) {
        cases.push(checked(format!("omega-closed-form(n={n},k={k})"), || {
            let iterate = universal::omega_iterate(reg, k, n)?;
            let closed = universal::omega_closed_form(reg, k, n)?
                .scale_int(universal::omega_sign(n))?;
            let pass = iterate == closed;
            Ok((pass, (!pass).then(|| format!("{iterate} vs {closed}"))))
        }));
    }
    for k in 2..=8u32 {
        cases.push(checked(format!("mod2-newton(k={k})"), || {
            let sigma = symfunc::newton(reg, 2 * k - 3)?;
            let spu = reg.ring_of(SpaceId::SpU, CoeffTag::Z)?;
            let reduced = maps::mod2_reduce(reg, &sigma.transport(&spu)?)?;
            let expected = mod2_newton_expected(reg, k)?;
            let pass = reduced == expected;
            Ok((pass, (!pass).then(|| format!("{reduced} vs {expected}"))))
        }));
    }
    for k in 1..=8u32 {
        cases.push(checked(format!("d-tilde(k={k})"), || {
            let dt = universal::d_tilde(reg, k)?;
            let ring = reg.ring_of(SpaceId::BO, CoeffTag::QmodZ)?;
            let expected = {
                let lo = ring.find("w", 2 * k).unwrap();
                let hi = ring.find("w", 2 * k + 1).unwrap();
                Element::from_terms(
                    &ring,
                    vec![(
                        Monomial::from_sorted(vec![(lo, 1), (hi, 1)], &ring),
                        Coeff::QmodZ(QmodZ::half()),
                    )],
                    false,
                )?
            };
            if dt != expected {
                return Ok((false, Some(format!("{dt} vs {expected}"))));
            }
            Ok((dt.scale_int(2)?.is_zero(), Some("2x check".to_string()).filter(|_| false)))
        }));
    }
    for k in 1..=6u32 {
        cases.push(checked(format!("restriction(k={k})"), || {
            let table = reg.map_table();
            let lhs = table.get("i_mod_z")?.apply(reg, &universal::d_tilde(reg, k)?)?;
            let fiber = universal::d_universal(reg, 0, k)?.value;
            let rhs = table.get("rho")?.apply(reg, &fiber)?;
            let pass = lhs == rhs;
            Ok((pass, (!pass).then(|| format!("{lhs} vs {rhs}"))))
        }));
    }
    cases
}

pub fn map_consistency_cases(reg: &Registry, seed: u64) -> Vec<CaseResult> {
    let mut cases = Vec::new();
    for n in 0..=15u32 {
        cases.push(checked(format!("chain-spaces(n={n})"), || {
            Ok((maps::chain_consistency(reg, n)?, None))
        }));
    }
    for (f, looped) in [("Bc", "c"), ("Bj", "j"), ("Bq", "q"), ("Bf", "f")] {
        let audit = checked(format!("naturality({f}~{looped})"), || {
            let table = reg.map_table();
            let results =
                maps::loop_naturality_check(reg, table.get(f)?, table.get(looped)?, CoeffTag::Z)?;
            if results.is_empty() {
                return Ok((false, Some("audit is vacuous".to_string())));
            }
            let bad: Vec<&str> = results
                .iter()
                .filter(|(_, ok)| !ok)
                .map(|(n, _)| n.as_str())
                .collect();
            Ok((bad.is_empty(), (!bad.is_empty()).then(|| bad.join(", "))))
        });
        cases.push(audit);
    }
    for k in 1..=6u32 {
        cases.push(checked(format!("bq-loop-instance(k={k})"), || {
            let table = reg.map_table();
            let bsp = reg.ring_of(SpaceId::BSp, CoeffTag::Z)?;
            let y = Element::generator(&bsp, "y", 4 * k)?;
            let pulled = table.get("Bq")?.apply(reg, &y)?;
            let looped = maps::loop_apply(reg, &pulled)?;
            let u = reg.ring_of(SpaceId::U, CoeffTag::Z)?;
            let expected = Element::generator(&u, "c", 4 * k - 1)?.scale_int(2)?;
            let pass = looped == expected;
            Ok((pass, (!pass).then(|| format!("{looped} vs {expected}"))))
        }));
    }
    // randomized: the loop map kills random homogeneous decomposables
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for space in [SpaceId::BU, SpaceId::U, SpaceId::BSp, SpaceId::BO] {
        let name = format!("loop-kills-decomposables({space})");
        let ring = match reg.ring_of(space, CoeffTag::Z) {
            Ok(r) => r,
            Err(e) => {
                cases.push(case(name, false, Some(e.to_string())));
                continue;
            }
        };
        let positive: Vec<usize> = ring
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.degree > 0 && g.degree <= 15)
            .map(|(i, _)| i)
            .collect();
        let mut all_ok = true;
        let mut detail = None;
        for _ in 0..40 {
            let a = positive[rng.gen_range(0..positive.len())];
            let b = positive[rng.gen_range(0..positive.len())];
            let ga = ring.generator(a as u16).clone();
            let gb = ring.generator(b as u16).clone();
            if ga.degree + gb.degree > 30 {
                continue;
            }
            let scale = rng.gen_range(1..=5i64);
            let result = (|| -> Result<bool> {
                let ea = Element::generator(&ring, &ga.base, ga.degree)?;
                let eb = Element::generator(&ring, &gb.base, gb.degree)?;
                let product = ea.mul(&eb)?.scale_int(scale)?;
                if product.is_zero() {
                    return Ok(true);
                }
                Ok(maps::loop_apply(reg, &product)?.is_zero())
            })();
            match result {
                Ok(true) => {}
                Ok(false) => {
                    all_ok = false;
                    detail = Some(format!("{}*{} survived the loop", ga.token(), gb.token()));
                }
                Err(e) => {
                    all_ok = false;
                    detail = Some(e.to_string());
                }
            }
        }
        cases.push(case(name, all_ok, detail));
    }
    // randomized: l_star output is 2-torsion
    for space in [SpaceId::BO, SpaceId::UO, SpaceId::SpU] {
        let name = format!("l-star-torsion({space})");
        let result = (|| -> Result<bool> {
            let ring = reg.ring_of(space, CoeffTag::F2)?;
            let pool = monomial_pool(&ring, 20);
            for _ in 0..30 {
                let e = random_element(&ring, &pool, &mut rng)?;
                let img = maps::l_star(reg, &e)?;
                if !img.scale_int(2)?.is_zero() {
                    return Ok(false);
                }
            }
            Ok(true)
        })();
        match result {
            Ok(ok) => cases.push(case(name, ok, None)),
            Err(e) => cases.push(case(name, false, Some(e.to_string()))),
        }
    }
    cases
}

pub fn registry_cases(reg: &Registry) -> Vec<CaseResult> {
    let mut cases = Vec::new();
    cases.push(checked("bott-period-real", || {
        for &s in REAL_CYCLE.iter() {
            let mut cur = s;
            for step in 1..8 {
                cur = loop_space(cur);
                if cur == s {
                    return Ok((false, Some(format!("{s} closed after {step} loops"))));
                }
            }
            if loop_space(cur) != s {
                return Ok((false, Some(format!("{s} fails to close after 8 loops"))));
            }
        }
        Ok((true, None))
    }));
    cases.push(checked("bott-period-complex", || {
        let ok = loop_space(SpaceId::BU) == SpaceId::U
            && loop_space(SpaceId::U) == SpaceId::BU
            && loop_space(SpaceId::BU) != SpaceId::BU;
        Ok((ok, None))
    }));
    for (space, tag, pres) in reg.registered_rings() {
        if tag != CoeffTag::F2 {
            continue;
        }
        cases.push(checked(format!("poincare-series({space}:F2)"), || {
            let got = basis_counts(pres, 24);
            let want = expected_series(pres, 24);
            let pass = got == want;
            Ok((pass, (!pass).then(|| format!("{got:?} vs {want:?}"))))
        }));
    }
    cases.push(checked("spu-rank-distinct-partitions", || {
        let spu = reg.ring_of(SpaceId::SpU, CoeffTag::Z)?;
        for d in 1..=12u32 {
            if spu.monomials_of_degree(2 * d).len() as u64 != partitions_distinct(d) {
                return Ok((false, Some(format!("mismatch in degree {}", 2 * d))));
            }
        }
        Ok((true, None))
    }));
    cases.push(checked("spu-mod2-basis-consistency", || {
        let spu_z = reg.ring_of(SpaceId::SpU, CoeffTag::Z)?;
        let spu_f2 = reg.ring_of(SpaceId::SpU, CoeffTag::F2)?;
        for d in (2..=24u32).step_by(2) {
            let integral = spu_z.monomials_of_degree(d);
            let mut reduced = std::collections::BTreeSet::new();
            for mono in &integral {
                let e = Element::from_terms(
                    &spu_z,
                    vec![(mono.clone(), Coeff::Int(BigInt::from(1)))],
                    false,
                )?;
                let r = maps::mod2_reduce(reg, &e)?;
                if r.term_count() != 1 {
                    return Ok((false, Some(format!("{} reduced to {}", mono.text(&spu_z), r))));
                }
                reduced.insert(r.to_string());
            }
            let exterior: std::collections::BTreeSet<String> = spu_f2
                .monomials_of_degree(d)
                .iter()
                .map(|m| m.text(&spu_f2))
                .collect();
            if reduced != exterior {
                return Ok((false, Some(format!("bases differ in degree {d}"))));
            }
        }
        Ok((true, None))
    }));
    cases
}

// ---------------------------------------------------------------------------
// Randomized parser properties

fn monomial_pool(ring: &Arc<RingPresentation>, up_to: u32) -> Vec<Monomial> {
    let mut pool = Vec::new();
    for d in 1..=up_to {
        pool.extend(ring.monomials_of_degree(d));
    }
    pool
}

fn random_coeff(tag: CoeffTag, rng: &mut ChaCha8Rng) -> Coeff {
    match tag {
        CoeffTag::Z => {
            let mut n = 0;
            while n == 0 {
                n = rng.gen_range(-9..=9i64);
            }
            Coeff::Int(BigInt::from(n))
        }
        CoeffTag::Q => {
            let mut n = 0;
            while n == 0 {
                n = rng.gen_range(-9..=9i64);
            }
            let d = rng.gen_range(1..=4i64);
            Coeff::Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
        }
        CoeffTag::ZHalf => {
            let mut n = 0;
            while n == 0 {
                n = rng.gen_range(-9..=9i64);
            }
            let d = [1, 2, 4][rng.gen_range(0..3usize)];
            Coeff::Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
        }
        CoeffTag::F2 => Coeff::F2(F2::ONE),
        CoeffTag::QmodZ => {
            let d = [2, 3, 4, 6][rng.gen_range(0..4usize)];
            let mut n = rng.gen_range(1..d);
            // keep it a genuine fraction
            while n % d == 0 {
                n = rng.gen_range(1..d);
            }
            Coeff::QmodZ(QmodZ::new(BigRational::new(BigInt::from(n), BigInt::from(d))))
        }
    }
}

fn random_element(
    ring: &Arc<RingPresentation>,
    pool: &[Monomial],
    rng: &mut ChaCha8Rng,
) -> Result<Element> {
    let n_terms = rng.gen_range(0..=4usize);
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let mono = pool[rng.gen_range(0..pool.len())].clone();
        terms.push((mono, random_coeff(ring.coeff_tag(), rng)));
    }
    let mut e = Element::from_terms(ring, terms, false)?;
    if ring.torsion_policy() == TorsionPolicy::Formal2Torsion && rng.gen_range(0..4u8) == 0 {
        e = e.with_torsion_mark()?;
    }
    Ok(e)
}

pub fn parser_cases(reg: &Registry, seed: u64) -> Vec<CaseResult> {
    let mut cases = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    for (space, tag, ring) in reg.registered_rings() {
        let pool = monomial_pool(ring, 24);
        if pool.is_empty() {
            continue;
        }
        let name = format!("parse-round-trip({space}:{tag})", tag = tag.token());
        let mut all_ok = true;
        let mut detail = None;
        for i in 0..500 {
            let result = (|| -> Result<Option<String>> {
                let e = random_element(ring, &pool, &mut rng)?;
                let text = e.to_string();
                let back = parse::parse_element(reg, &text, ring)?;
                if back != e {
                    return Ok(Some(format!("sample {i}: `{text}` reparsed as `{back}`")));
                }
                let json = emit::element_to_json(&e);
                let back = emit::element_from_json(reg, &json)?;
                if back != e {
                    return Ok(Some(format!("sample {i}: JSON round trip of `{text}`")));
                }
                Ok(None)
            })();
            match result {
                Ok(None) => {}
                Ok(Some(d)) => {
                    all_ok = false;
                    detail = Some(d);
                    break;
                }
                Err(e) => {
                    all_ok = false;
                    detail = Some(format!("sample {i}: error {e}"));
                    break;
                }
            }
        }
        cases.push(case(name, all_ok, detail));
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> &'static Registry {
        Registry::global()
    }

    #[test]
    fn named_suites_pass() {
        for suite in [Suite::Newton, Suite::Revi1, Suite::MapConsistency] {
            let report = run_suite(reg(), suite, DEFAULT_SEED);
            assert!(
                report.passed(),
                "{} failures:\n{}",
                suite.name(),
                report.render_text()
            );
        }
    }

    #[test]
    fn registry_audits_pass() {
        for case in registry_cases(reg()) {
            assert!(case.pass, "{}: {:?}", case.name, case.detail);
        }
    }

    #[test]
    fn parser_round_trips_pass() {
        for case in parser_cases(reg(), DEFAULT_SEED) {
            assert!(case.pass, "{}: {:?}", case.name, case.detail);
        }
    }

    #[test]
    fn parser_cases_are_deterministic() {
        let a = parser_cases(reg(), 7);
        let b = parser_cases(reg(), 7);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.pass, y.pass);
            assert_eq!(x.name, y.name);
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!(Suite::parse("final-answer").unwrap(), Suite::FinalAnswer);
        assert!(Suite::parse("bogus").is_err());
    }
}
