//! Newton polynomials (power sums in the universal Chern classes), Chern
//! character components, and a formal-Chern-roots oracle that re-derives the
//! Newton polynomials by brute force, independently of the recursion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{Element, Monomial};
use crate::coeff::{factorial, Coeff, CoeffTag};
use crate::error::{EngineError, Result};
use crate::spaces::{Registry, SpaceId};

/// The Newton polynomial `sigma_m`: the m-th power sum of the formal Chern
/// roots written in the universal Chern classes, as an integral class of
/// degree 2m on BU. Computed by the Newton recursion
/// `sigma_m = c_2 sigma_{m-1} - c_4 sigma_{m-2} + ... + (-1)^{m-1} m c_{2m}`
/// and cached.
pub fn newton(reg: &Registry, m: u32) -> Result<Element> {
    if m == 0 {
        return Err(EngineError::Internal(
            "Newton polynomials are indexed from 1".to_string(),
        ));
    }
    let ring = reg.ring_of(SpaceId::BU, CoeffTag::Z)?;
    if 2 * m > reg.max_degree() {
        return Err(EngineError::DegreeCapExceeded {
            degree: 2 * m,
            cap: reg.max_degree(),
        });
    }
    let mut cache = reg
        .newton_cache
        .lock()
        .map_err(|_| EngineError::Internal("newton cache poisoned".to_string()))?;
    while cache.len() < m as usize {
        let next = cache.len() as u32 + 1;
        let value = if next == 1 {
            Element::generator(&ring, "c", 2)?
        } else {
            let mut acc = Element::zero(&ring);
            for i in 1..next {
                let ci = Element::generator(&ring, "c", 2 * i)?;
                let term = ci.mul(&cache[(next - i) as usize - 1])?;
                acc = if i % 2 == 1 {
                    acc.add(&term)?
                } else {
                    acc.sub(&term)?
                };
            }
            let lead = Element::generator(&ring, "c", 2 * next)?
                .scale_int(i64::from(next))?;
            if next % 2 == 1 {
                acc.add(&lead)?
            } else {
                acc.sub(&lead)?
            }
        };
        cache.push(value);
    }
    Ok(cache[m as usize - 1].clone())
}

/// The degree-d component of the Chern character, `ch_d = sigma_{d/2} / (d/2)!`,
/// a rational class on BU.
pub fn chern_component(reg: &Registry, d: u32) -> Result<Element> {
    if d == 0 || d % 2 != 0 {
        return Err(EngineError::OddDegree { degree: d });
    }
    let m = d / 2;
    let ring_q = reg.ring_of(SpaceId::BU, CoeffTag::Q)?;
    let sigma = newton(reg, m)?.transport(&ring_q)?;
    let inv_fact = BigRational::new(BigInt::from(1), factorial(m));
    sigma.scale(&Coeff::Rat(inv_fact))
}

/// Universal congruence behind the integral lift of the Chern character:
/// `(m-1)! ch_{2m} - (-1)^{m-1} c_{2m}` is decomposable.
pub fn revi1_check(reg: &Registry, m: u32) -> Result<bool> {
    let ring_q = reg.ring_of(SpaceId::BU, CoeffTag::Q)?;
    let ch = chern_component(reg, 2 * m)?;
    let scaled = ch.scale(&Coeff::Rat(BigRational::from_integer(factorial(m - 1))))?;
    let mut gen_term = Element::generator(&ring_q, "c", 2 * m)?;
    if m % 2 == 0 {
        gen_term = gen_term.neg();
    }
    let diff = scaled.sub(&gen_term)?;
    Ok(diff.is_decomposable()
        && (diff.is_zero() || diff.homogeneous_degree() == Some(2 * m)))
}

// ---------------------------------------------------------------------------
// The formal-roots oracle.
//
// Polynomials in the roots x_1..x_r are kept as exponent-vector maps with
// i128 coefficients; the magnitudes involved for m <= 16 stay far below the
// i128 range, and all arithmetic is overflow-checked.

type XPoly = BTreeMap<Vec<u8>, i128>;

fn xp_add_term(p: &mut XPoly, key: Vec<u8>, c: i128) {
    use std::collections::btree_map::Entry;
    if c == 0 {
        return;
    }
    match p.entry(key) {
        Entry::Vacant(slot) => {
            slot.insert(c);
        }
        Entry::Occupied(mut slot) => {
            let sum = slot
                .get()
                .checked_add(c)
                .expect("oracle coefficient overflow");
            if sum == 0 {
                slot.remove();
            } else {
                *slot.get_mut() = sum;
            }
        }
    }
}

fn xp_mul(a: &XPoly, b: &XPoly) -> XPoly {
    let mut out = XPoly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let key: Vec<u8> = ka.iter().zip(kb.iter()).map(|(x, y)| x + y).collect();
            let c = ca.checked_mul(*cb).expect("oracle coefficient overflow");
            xp_add_term(&mut out, key, c);
        }
    }
    out
}

fn xp_sub_scaled(a: &mut XPoly, b: &XPoly, scale: i128) {
    for (k, c) in b {
        let delta = c.checked_mul(scale).expect("oracle coefficient overflow");
        xp_add_term(a, k.clone(), -delta);
    }
}

/// The elementary symmetric polynomial e_i in r variables.
fn elem_sym(r: usize, i: usize) -> XPoly {
    let mut out = XPoly::new();
    let mut subset: Vec<usize> = (0..i).collect();
    loop {
        let mut key = vec![0u8; r];
        for &v in &subset {
            key[v] = 1;
        }
        out.insert(key, 1);
        // next combination
        let mut pos = i;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if subset[pos] != r - i + pos {
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        subset[pos] += 1;
        for j in pos + 1..i {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn power_sum(r: usize, m: u32) -> XPoly {
    let mut out = XPoly::new();
    for v in 0..r {
        let mut key = vec![0u8; r];
        key[v] = m as u8;
        out.insert(key, 1);
    }
    out
}

/// Expand the power sum `x_1^m + ... + x_r^m`, re-express it in elementary
/// symmetric polynomials by brute-force leading-term division, and return
/// the result with `e_i` renamed `c_{2i}`. Independent of [`newton`], which
/// it exists to validate.
pub fn roots_oracle(reg: &Registry, m: u32, r: u32) -> Result<Element> {
    if r < m {
        return Err(EngineError::InsufficientRoots { needed: m, got: r });
    }
    if m == 0 {
        return Err(EngineError::Internal(
            "power sums are indexed from 1".to_string(),
        ));
    }
    let rr = r as usize;
    let mut f = power_sum(rr, m);
    let elems: Vec<XPoly> = (0..=rr).map(|i| elem_sym(rr, i)).collect();

    // decomposition: list of (coefficient, e-exponents mu_1..mu_r)
    let mut decomposition: Vec<(i128, Vec<u8>)> = Vec::new();
    let mut rounds = 0;
    while !f.is_empty() {
        rounds += 1;
        if rounds > 100_000 {
            return Err(EngineError::Internal(
                "oracle division failed to terminate".to_string(),
            ));
        }
        let (lambda, &c) = f.iter().next_back().expect("nonempty");
        let lambda = lambda.clone();
        // for a symmetric polynomial the lex-leading exponent vector is
        // weakly decreasing; the matching e-product has exponents
        // mu_i = lambda_i - lambda_{i+1}
        let mut mu = vec![0u8; rr];
        for i in 0..rr {
            let next = if i + 1 < rr { lambda[i + 1] } else { 0 };
            if lambda[i] < next {
                return Err(EngineError::Internal(
                    "leading term of a symmetric polynomial not weakly decreasing".to_string(),
                ));
            }
            mu[i] = lambda[i] - next;
        }
        let mut prod = elems[0].clone(); // e_0 = 1
        for (i, &e) in mu.iter().enumerate() {
            for _ in 0..e {
                prod = xp_mul(&prod, &elems[i + 1]);
            }
        }
        xp_sub_scaled(&mut f, &prod, c);
        decomposition.push((c, mu));
    }

    // rename e_i -> c_{2i}
    let ring = reg.ring_of(SpaceId::BU, CoeffTag::Z)?;
    let mut terms: Vec<(Monomial, Coeff)> = Vec::new();
    for (c, mu) in decomposition {
        let mut factors: Vec<(u16, u32)> = Vec::new();
        for (i, &e) in mu.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let idx = ring
                .find("c", 2 * (i as u32 + 1))
                .ok_or(EngineError::DegreeCapExceeded {
                    degree: 2 * (i as u32 + 1),
                    cap: reg.max_degree(),
                })?;
            factors.push((idx, u32::from(e)));
        }
        factors.sort_by_key(|&(i, _)| i);
        terms.push((
            Monomial::from_sorted(factors, &ring),
            Coeff::Int(BigInt::from(c)),
        ));
    }
    Element::from_terms(&ring, terms, false)
}
