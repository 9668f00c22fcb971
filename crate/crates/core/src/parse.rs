//! Expression parser for ring elements.
//!
//! Grammar, loosest to tightest: sums and differences, products, unary
//! minus, powers. Atoms are rational literals (`3`, `1/2`), generator
//! tokens (`c_4`, `w_3`, `ch0`), the Chern character macro `ch[d]`, the
//! reserved torsion mark `Tors`, and parenthesized expressions. Whitespace
//! is insignificant.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::sync::Arc;

use crate::algebra::{merge_monomials, Element, Monomial, RingPresentation};
use crate::coeff::{reduce_mod_z, Coeff, CoeffTag};
use crate::error::{EngineError, Result};
use crate::spaces::Registry;
use crate::symfunc;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Rational(BigRational),
    Gen { base: String, degree: u32 },
    Ch(u32),
    Tors,
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Mul(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    /// Identifier with optional `_degree` subscript.
    Ident(String, Option<u32>),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> EngineError {
    EngineError::Syntax {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_whitespace() {
                lx.pos += 1;
            }
            if lx.pos >= lx.src.len() {
                return Ok(out);
            }
            let start = lx.pos;
            let c = lx.src[lx.pos];
            let tok = match c {
                b'+' => {
                    lx.pos += 1;
                    Tok::Plus
                }
                b'-' => {
                    lx.pos += 1;
                    Tok::Minus
                }
                b'*' => {
                    lx.pos += 1;
                    Tok::Star
                }
                b'/' => {
                    lx.pos += 1;
                    Tok::Slash
                }
                b'^' => {
                    lx.pos += 1;
                    Tok::Caret
                }
                b'(' => {
                    lx.pos += 1;
                    Tok::LParen
                }
                b')' => {
                    lx.pos += 1;
                    Tok::RParen
                }
                b'[' => {
                    lx.pos += 1;
                    Tok::LBracket
                }
                b']' => {
                    lx.pos += 1;
                    Tok::RBracket
                }
                b'0'..=b'9' => {
                    let mut end = lx.pos;
                    while end < lx.src.len() && lx.src[end].is_ascii_digit() {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&lx.src[lx.pos..end]).unwrap();
                    lx.pos = end;
                    Tok::Int(text.parse().unwrap())
                }
                b'a'..=b'z' | b'A'..=b'Z' => {
                    let mut end = lx.pos;
                    while end < lx.src.len() && lx.src[end].is_ascii_alphanumeric() {
                        end += 1;
                    }
                    let name = std::str::from_utf8(&lx.src[lx.pos..end]).unwrap().to_string();
                    lx.pos = end;
                    let mut degree = None;
                    if lx.pos < lx.src.len() && lx.src[lx.pos] == b'_' {
                        let sub_start = lx.pos + 1;
                        let mut sub_end = sub_start;
                        while sub_end < lx.src.len() && lx.src[sub_end].is_ascii_digit() {
                            sub_end += 1;
                        }
                        if sub_end == sub_start {
                            return Err(syntax(lx.pos, "expected digits after `_`"));
                        }
                        let text = std::str::from_utf8(&lx.src[sub_start..sub_end]).unwrap();
                        degree = Some(text.parse().map_err(|_| {
                            syntax(sub_start, "generator degree out of range")
                        })?);
                        lx.pos = sub_end;
                    }
                    Tok::Ident(name, degree)
                }
                other => {
                    return Err(syntax(start, format!("unexpected character `{}`", other as char)))
                }
            };
            out.push((start, tok));
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            _ => Err(syntax(pos, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let e: u32 = n
                        .try_into()
                        .map_err(|_| syntax(pos, "exponent out of range"))?;
                    return Ok(Expr::Pow(Box::new(base), e));
                }
                _ => return Err(syntax(pos, "expected integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => {
                // rational literal: INT ['/' INT]
                if self.peek() == Some(&Tok::Slash) {
                    self.bump();
                    let dpos = self.pos();
                    match self.bump() {
                        Some(Tok::Int(d)) => {
                            if d.is_zero() {
                                return Err(syntax(dpos, "zero denominator"));
                            }
                            Ok(Expr::Rational(BigRational::new(n, d)))
                        }
                        _ => Err(syntax(dpos, "expected denominator")),
                    }
                } else {
                    Ok(Expr::Rational(BigRational::from_integer(n)))
                }
            }
            Some(Tok::Ident(name, None)) if name == "Tors" => Ok(Expr::Tors),
            Some(Tok::Ident(name, None)) if name == "ch" && self.peek() == Some(&Tok::LBracket) => {
                self.bump();
                let dpos = self.pos();
                let d = match self.bump() {
                    Some(Tok::Int(n)) => n
                        .try_into()
                        .map_err(|_| syntax(dpos, "degree out of range"))?,
                    _ => return Err(syntax(dpos, "expected degree in ch[..]")),
                };
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expr::Ch(d))
            }
            Some(Tok::Ident(name, sub)) => {
                // `ch0` and friends have no subscript and live in degree 0
                let degree = sub.unwrap_or(0);
                Ok(Expr::Gen { base: name, degree })
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(syntax(pos, "expected a literal, generator or `(`")),
        }
    }
}

/// Parse source text to an expression tree.
pub fn parse(src: &str) -> Result<Expr> {
    let toks = Lexer::tokens(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(syntax(p.pos(), "trailing input"));
    }
    Ok(e)
}

/// Parse and evaluate in the given ring context.
pub fn parse_element(reg: &Registry, src: &str, ring: &Arc<RingPresentation>) -> Result<Element> {
    let expr = parse(src)?;
    eval(reg, &expr, ring)
}

/// Evaluate an expression tree as an element of a ring presentation.
pub fn eval(reg: &Registry, expr: &Expr, ring: &Arc<RingPresentation>) -> Result<Element> {
    if ring.coeff_tag() == CoeffTag::QmodZ {
        let terms = eval_formal(reg, expr, ring)?;
        let reduced = terms
            .into_iter()
            .map(|(m, q)| (m, Coeff::QmodZ(reduce_mod_z(&q))))
            .collect();
        return Element::from_terms(ring, reduced, false);
    }
    match expr {
        Expr::Rational(q) => Ok(Element::scalar(
            ring,
            Coeff::from_rational(ring.coeff_tag(), q.clone())?,
        )),
        Expr::Gen { base, degree } => Element::generator(ring, base, *degree),
        Expr::Ch(d) => chern_into(reg, *d, ring),
        Expr::Tors => Element::zero(ring).with_torsion_mark(),
        Expr::Neg(inner) => Ok(eval(reg, inner, ring)?.neg()),
        Expr::Pow(inner, e) => eval(reg, inner, ring)?.pow(*e),
        Expr::Mul(a, b) => eval(reg, a, ring)?.mul(&eval(reg, b, ring)?),
        Expr::Add(a, b) => eval(reg, a, ring)?.add(&eval(reg, b, ring)?),
        Expr::Sub(a, b) => eval(reg, a, ring)?.sub(&eval(reg, b, ring)?),
    }
}

/// Expand `ch[d]` and reinterpret it in the context ring; coefficients must
/// fit the context's coefficient system.
fn chern_into(reg: &Registry, d: u32, ring: &Arc<RingPresentation>) -> Result<Element> {
    symfunc::chern_component(reg, d)?.transport(ring)
}

/// Formal evaluation over Q for Q/Z contexts: Q/Z has no ring structure, so
/// arithmetic happens on formal rational combinations of monomials and the
/// coefficients reduce mod Z at the very end.
fn eval_formal(
    reg: &Registry,
    expr: &Expr,
    ring: &Arc<RingPresentation>,
) -> Result<Vec<(Monomial, BigRational)>> {
    match expr {
        Expr::Rational(q) => Ok(vec![(Monomial::unit(), q.clone())]),
        Expr::Gen { base, degree } => {
            let idx = ring.find(base, *degree).ok_or_else(|| {
                if *degree > ring.max_degree() {
                    EngineError::DegreeCapExceeded {
                        degree: *degree,
                        cap: ring.max_degree(),
                    }
                } else {
                    EngineError::UnknownGenerator {
                        name: if *degree == 0 {
                            base.clone()
                        } else {
                            format!("{base}_{degree}")
                        },
                        ring: ring.id().to_string(),
                    }
                }
            })?;
            Ok(vec![(Monomial::generator(idx, ring), BigRational::from_integer(BigInt::from(1)))])
        }
        Expr::Ch(d) => {
            let ch = symfunc::chern_component(reg, *d)?;
            let src = ch.ring().clone();
            let mut out = Vec::new();
            for (mono, coeff) in ch.terms() {
                let mut factors = Vec::new();
                for &(idx, e) in mono.factors() {
                    let g = src.generator(idx);
                    let t = ring.find(&g.base, g.degree).ok_or_else(|| {
                        EngineError::UnknownGenerator {
                            name: g.token(),
                            ring: ring.id().to_string(),
                        }
                    })?;
                    factors.push((t, e));
                }
                factors.sort_by_key(|&(i, _)| i);
                out.push((
                    Monomial::from_sorted(factors, ring),
                    coeff
                        .as_rational()
                        .ok_or_else(|| EngineError::Internal("rational expected".into()))?,
                ));
            }
            Ok(out)
        }
        Expr::Tors => Err(EngineError::TorsionUnsupported {
            ring: ring.id().to_string(),
        }),
        Expr::Neg(inner) => Ok(eval_formal(reg, inner, ring)?
            .into_iter()
            .map(|(m, q)| (m, -q))
            .collect()),
        Expr::Pow(inner, e) => {
            let base = eval_formal(reg, inner, ring)?;
            let mut acc = vec![(Monomial::unit(), BigRational::from_integer(BigInt::from(1)))];
            for _ in 0..*e {
                acc = formal_mul(ring, &acc, &base);
            }
            Ok(acc)
        }
        Expr::Mul(a, b) => {
            let left = eval_formal(reg, a, ring)?;
            let right = eval_formal(reg, b, ring)?;
            Ok(formal_mul(ring, &left, &right))
        }
        Expr::Add(a, b) => {
            let mut left = eval_formal(reg, a, ring)?;
            left.extend(eval_formal(reg, b, ring)?);
            Ok(left)
        }
        Expr::Sub(a, b) => {
            let mut left = eval_formal(reg, a, ring)?;
            left.extend(
                eval_formal(reg, b, ring)?
                    .into_iter()
                    .map(|(m, q)| (m, -q)),
            );
            Ok(left)
        }
    }
}

fn formal_mul(
    ring: &Arc<RingPresentation>,
    a: &[(Monomial, BigRational)],
    b: &[(Monomial, BigRational)],
) -> Vec<(Monomial, BigRational)> {
    let mut out = Vec::new();
    for (ma, qa) in a {
        for (mb, qb) in b {
            if let Some((m, negate)) = merge_monomials(ring, ma, mb) {
                let q = qa * qb;
                out.push((m, if negate { -q } else { q }));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceId;

    fn reg() -> &'static Registry {
        Registry::global()
    }

    #[test]
    fn parses_polynomials() {
        let ring = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        let e = parse_element(reg(), "c_2^2 - 2*c_4", &ring).unwrap();
        assert_eq!(e.to_string(), "c_2^2 - 2*c_4");
        let e = parse_element(reg(), "  c_2 ^ 2-2* c_4 ", &ring).unwrap();
        assert_eq!(e.to_string(), "c_2^2 - 2*c_4");
    }

    #[test]
    fn parses_ch_macro() {
        let ring = reg().ring_of(SpaceId::BU, CoeffTag::Q).unwrap();
        let e = parse_element(reg(), "ch[4]", &ring).unwrap();
        assert_eq!(e.to_string(), "1/2*c_2^2 - c_4");
        // integral context rejects the half-integral expansion
        let zring = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        assert!(parse_element(reg(), "ch[4]", &zring).is_err());
        assert_eq!(
            parse_element(reg(), "ch[2]", &zring).unwrap().to_string(),
            "c_2"
        );
    }

    #[test]
    fn parses_rational_scalars() {
        let ring = reg().ring_of(SpaceId::USp, CoeffTag::Q).unwrap();
        let e = parse_element(reg(), "1/2*a_5", &ring).unwrap();
        assert_eq!(e.to_string(), "1/2*a_5");
    }

    #[test]
    fn parses_torsion_mark() {
        let ring = reg().ring_of(SpaceId::UO, CoeffTag::ZHalf).unwrap();
        let e = parse_element(reg(), "a_5 + Tors", &ring).unwrap();
        assert!(e.has_torsion_mark());
        assert_eq!(e.to_string(), "a_5 + Tors");
        let plain = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        assert!(matches!(
            parse_element(reg(), "Tors", &plain),
            Err(EngineError::TorsionUnsupported { .. })
        ));
    }

    #[test]
    fn qmodz_context_reduces_coefficients() {
        let ring = reg().ring_of(SpaceId::BO, CoeffTag::QmodZ).unwrap();
        let e = parse_element(reg(), "1/2*w_2*w_3", &ring).unwrap();
        assert_eq!(e.to_string(), "1/2*w_2*w_3");
        // 3/2 wraps to 1/2, integers die
        let e = parse_element(reg(), "3/2*w_2*w_3 + 7*w_5", &ring).unwrap();
        assert_eq!(e.to_string(), "1/2*w_2*w_3");
        // negative halves are canonical halves
        let e = parse_element(reg(), "-1/2*w_5", &ring).unwrap();
        assert_eq!(e.to_string(), "1/2*w_5");
    }

    #[test]
    fn error_positions() {
        match parse("c_2 + + c_4") {
            Err(EngineError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse("c_") {
            Err(EngineError::Syntax { pos, .. }) => assert_eq!(pos, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse("c_2 $"),
            Err(EngineError::Syntax { pos: 4, .. })
        ));
    }

    #[test]
    fn unknown_generators_and_caps() {
        let ring = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        assert!(matches!(
            parse_element(reg(), "q_3", &ring),
            Err(EngineError::UnknownGenerator { .. })
        ));
        assert!(matches!(
            parse_element(reg(), "c_100", &ring),
            Err(EngineError::DegreeCapExceeded { .. })
        ));
    }

    #[test]
    fn precedence() {
        let ring = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        // ^ binds tighter than unary minus: -c_2^2 is -(c_2^2)
        let e = parse_element(reg(), "-c_2^2", &ring).unwrap();
        assert_eq!(e.to_string(), "-c_2^2");
        let e = parse_element(reg(), "2*c_2^2 - c_4", &ring).unwrap();
        assert_eq!(e.to_string(), "2*c_2^2 - c_4");
        let e = parse_element(reg(), "(c_2 + c_4)^2", &ring).unwrap();
        assert_eq!(e.to_string(), "c_2^2 + 2*c_2*c_4 + c_4^2");
    }

    #[test]
    fn zero_literal() {
        let ring = reg().ring_of(SpaceId::BU, CoeffTag::Z).unwrap();
        assert!(parse_element(reg(), "0", &ring).unwrap().is_zero());
    }
}
