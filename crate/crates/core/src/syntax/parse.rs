//! Hand-written recursive-descent parser for the formula grammar.
//!
//! Binding strength, loosest first: `<->`, `->` (right associative), `|`,
//! `&`, prefix `!`. The same levels are used for consequents, conditional
//! formulas and probability formulas.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::{InterventionSpec, LinearAtom, NonProbFormula, ProbFormula, PropFormula, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {pos}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("duplicate index X{0} in antecedent")]
    DuplicateIndex(Var),
    #[error("bare tape atom is not a conditional formula")]
    BareAtom,
    #[error("nested probability term")]
    NestedProbability,
    #[error("conditional inside a consequent")]
    NestedConditional,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("index out of range")]
    IndexOverflow,
    #[error("trailing input")]
    Trailing,
}

pub fn parse_prob_formula(text: &str) -> Result<ProbFormula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.prob_iff()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_nonprob_formula(text: &str) -> Result<NonProbFormula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.np_iff()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_prop_formula(text: &str) -> Result<PropFormula, ParseError> {
    let mut p = Parser::new(text);
    let f = p.prop_iff()?;
    p.finish()?;
    Ok(f)
}

/// Parses a bare antecedent list such as `X0,!X2` or `X1:=0` (no brackets).
pub fn parse_intervention(text: &str) -> Result<InterventionSpec, ParseError> {
    let mut p = Parser::new(text);
    let spec = p.antecedent(&[])?;
    p.finish()?;
    Ok(spec)
}

enum Rel {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self, tok: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(tok)
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            pos: self.pos,
            kind,
        }
    }

    fn unexpected(&mut self, expected: &str) -> ParseError {
        self.skip_ws();
        let found = match self.rest().chars().next() {
            None => "end of input".to_string(),
            Some(c) => format!("'{c}'"),
        };
        self.err(ParseErrorKind::Unexpected {
            expected: expected.to_string(),
            found,
        })
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{tok}'")))
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos < self.src.len() {
            Err(self.err(ParseErrorKind::Trailing))
        } else {
            Ok(())
        }
    }

    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let n = rest.bytes().take_while(u8::is_ascii_digit).count();
        if n == 0 {
            return None;
        }
        self.pos += n;
        Some(&rest[..n])
    }

    fn nat(&mut self) -> Result<BigInt, ParseError> {
        match self.digits() {
            Some(d) => Ok(d.parse().expect("ascii digits")),
            None => Err(self.unexpected("number")),
        }
    }

    fn index(&mut self) -> Result<Var, ParseError> {
        // no whitespace between `X` and its index
        let rest = self.rest();
        let n = rest.bytes().take_while(u8::is_ascii_digit).count();
        if n == 0 {
            return Err(self.unexpected("square index"));
        }
        let v = rest[..n]
            .parse()
            .map_err(|_| self.err(ParseErrorKind::IndexOverflow))?;
        self.pos += n;
        Ok(v)
    }

    /// `!` / `&` / `|` / `->` / `<->` chains shared by all three layers.
    fn binary_levels<T>(
        &mut self,
        unary: &mut impl FnMut(&mut Self) -> Result<T, ParseError>,
        and: fn(T, T) -> T,
        or: fn(T, T) -> T,
        implies: fn(T, T) -> T,
        iff: fn(T, T) -> T,
    ) -> Result<T, ParseError> {
        fn conj<'a, T>(
            p: &mut Parser<'a>,
            unary: &mut impl FnMut(&mut Parser<'a>) -> Result<T, ParseError>,
            and: fn(T, T) -> T,
        ) -> Result<T, ParseError> {
            let mut acc = unary(p)?;
            while p.eat("&") {
                acc = and(acc, unary(p)?);
            }
            Ok(acc)
        }
        fn disj<'a, T>(
            p: &mut Parser<'a>,
            unary: &mut impl FnMut(&mut Parser<'a>) -> Result<T, ParseError>,
            and: fn(T, T) -> T,
            or: fn(T, T) -> T,
        ) -> Result<T, ParseError> {
            let mut acc = conj(p, unary, and)?;
            while p.eat("|") {
                acc = or(acc, conj(p, unary, and)?);
            }
            Ok(acc)
        }
        fn imp<'a, T>(
            p: &mut Parser<'a>,
            unary: &mut impl FnMut(&mut Parser<'a>) -> Result<T, ParseError>,
            and: fn(T, T) -> T,
            or: fn(T, T) -> T,
            implies: fn(T, T) -> T,
        ) -> Result<T, ParseError> {
            let lhs = disj(p, unary, and, or)?;
            if p.eat("->") {
                let rhs = imp(p, unary, and, or, implies)?;
                Ok(implies(lhs, rhs))
            } else {
                Ok(lhs)
            }
        }
        let mut acc = imp(self, unary, and, or, implies)?;
        while self.eat("<->") {
            acc = iff(acc, imp(self, unary, and, or, implies)?);
        }
        Ok(acc)
    }

    // ---- propositional consequents ----

    fn prop_iff(&mut self) -> Result<PropFormula, ParseError> {
        self.binary_levels(
            &mut Self::prop_unary,
            PropFormula::and,
            PropFormula::or,
            |a, b| a.not().or(b),
            |a, b| a.clone().not().or(b.clone()).and(b.not().or(a)),
        )
    }

    fn prop_unary(&mut self) -> Result<PropFormula, ParseError> {
        if self.eat("!") {
            return Ok(self.prop_unary()?.not());
        }
        if self.eat("(") {
            let f = self.prop_iff()?;
            self.expect(")")?;
            return Ok(f);
        }
        match self.peek_char() {
            Some('T') => {
                self.pos += 1;
                Ok(PropFormula::Top)
            }
            Some('F') => {
                self.pos += 1;
                Ok(PropFormula::Bottom)
            }
            Some('X') => {
                self.pos += 1;
                Ok(PropFormula::Atom(self.index()?))
            }
            Some('<') | Some('[') => Err(self.err(ParseErrorKind::NestedConditional)),
            Some('P') => Err(self.err(ParseErrorKind::NestedProbability)),
            _ => Err(self.unexpected("propositional formula")),
        }
    }

    // ---- antecedents ----

    fn antecedent(&mut self, terminators: &[&str]) -> Result<InterventionSpec, ParseError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let mut entries = Vec::new();
        let at_end = |p: &mut Self| {
            p.skip_ws();
            p.pos == p.src.len() || terminators.iter().any(|t| p.rest().starts_with(t))
        };
        if !at_end(self) {
            loop {
                let negated = self.eat("!");
                self.expect("X")?;
                let i = self.index()?;
                let mut value = !negated;
                if !negated && self.eat(":=") {
                    if self.eat("1") {
                        value = true;
                    } else if self.eat("0") {
                        value = false;
                    } else {
                        return Err(self.unexpected("0 or 1"));
                    }
                }
                entries.push((i, value));
                if !self.eat(",") {
                    break;
                }
            }
        }
        InterventionSpec::new(entries).map_err(|d| ParseError {
            pos: start,
            kind: ParseErrorKind::DuplicateIndex(d.0),
        })
    }

    // ---- conditional formulas ----

    fn np_iff(&mut self) -> Result<NonProbFormula, ParseError> {
        self.binary_levels(
            &mut Self::np_unary,
            NonProbFormula::and,
            NonProbFormula::or,
            NonProbFormula::implies,
            NonProbFormula::iff,
        )
    }

    fn np_unary(&mut self) -> Result<NonProbFormula, ParseError> {
        if self.eat("!") {
            return Ok(self.np_unary()?.not());
        }
        if self.eat("(") {
            let f = self.np_iff()?;
            self.expect(")")?;
            return Ok(f);
        }
        match self.peek_char() {
            Some('T') => {
                self.pos += 1;
                Ok(NonProbFormula::Top)
            }
            Some('F') => {
                self.pos += 1;
                Ok(NonProbFormula::Bottom)
            }
            Some('<') => {
                self.pos += 1;
                let ante = self.antecedent(&[">"])?;
                self.expect(">")?;
                let cons = self.prop_unary()?;
                Ok(NonProbFormula::cond(ante, cons))
            }
            Some('[') => {
                self.pos += 1;
                let ante = self.antecedent(&["]"])?;
                self.expect("]")?;
                let cons = self.prop_unary()?;
                Ok(NonProbFormula::box_cond(ante, cons))
            }
            Some('X') => Err(self.err(ParseErrorKind::BareAtom)),
            Some('P') => Err(self.err(ParseErrorKind::NestedProbability)),
            _ => Err(self.unexpected("conditional formula")),
        }
    }

    // ---- probability formulas ----

    fn prob_iff(&mut self) -> Result<ProbFormula, ParseError> {
        self.binary_levels(
            &mut Self::prob_unary,
            ProbFormula::and,
            ProbFormula::or,
            ProbFormula::implies,
            ProbFormula::iff,
        )
    }

    fn prob_unary(&mut self) -> Result<ProbFormula, ParseError> {
        if self.eat("!") {
            return Ok(self.prob_unary()?.not());
        }
        if self.eat("(") {
            let f = self.prob_iff()?;
            self.expect(")")?;
            return Ok(f);
        }
        self.inequality()
    }

    fn rational(&mut self) -> Result<BigRational, ParseError> {
        let num = self.nat()?;
        if self.eat("/") {
            let den = self.nat()?;
            if den.is_zero() {
                return Err(self.err(ParseErrorKind::ZeroDenominator));
            }
            Ok(BigRational::new(num, den))
        } else {
            Ok(BigRational::from_integer(num))
        }
    }

    fn prob_term(&mut self) -> Result<NonProbFormula, ParseError> {
        self.expect("P")?;
        self.expect("(")?;
        let f = self.np_iff()?;
        self.expect(")")?;
        Ok(f)
    }

    /// `[sign] term (sign term)*`; returns probability terms and the constant.
    #[allow(clippy::type_complexity)]
    fn linear_sum(
        &mut self,
    ) -> Result<(Vec<(BigRational, NonProbFormula)>, BigRational), ParseError> {
        let mut terms = Vec::new();
        let mut constant = BigRational::zero();
        let mut negative = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        loop {
            let (coeff, is_term) = if self.peek("P") {
                (BigRational::one(), true)
            } else {
                let r = self.rational()?;
                let starred = self.eat("*");
                (r, starred || self.peek("P"))
            };
            let coeff = if negative { -coeff } else { coeff };
            if is_term {
                terms.push((coeff, self.prob_term()?));
            } else {
                constant += coeff;
            }
            if self.peek("->") {
                break;
            }
            if self.eat("+") {
                negative = self.eat("-");
            } else if self.eat("-") {
                negative = !self.eat("-");
            } else {
                break;
            }
        }
        Ok((terms, constant))
    }

    fn relation(&mut self) -> Result<Rel, ParseError> {
        for (tok, rel) in [
            ("<=", Rel::Le),
            (">=", Rel::Ge),
            ("<", Rel::Lt),
            (">", Rel::Gt),
            ("=", Rel::Eq),
        ] {
            if self.eat(tok) {
                return Ok(rel);
            }
        }
        Err(self.unexpected("one of <=, >=, <, >, ="))
    }

    /// `lhs REL rhs`, elaborated to `<=` atoms with integer coefficients.
    fn inequality(&mut self) -> Result<ProbFormula, ParseError> {
        let (mut terms, lhs_const) = self.linear_sum()?;
        let rel = self.relation()?;
        let (rhs_terms, rhs_const) = self.linear_sum()?;
        terms.extend(rhs_terms.into_iter().map(|(a, f)| (-a, f)));
        let bound = rhs_const - lhs_const;

        let scale = terms
            .iter()
            .map(|(a, _)| a.denom().clone())
            .fold(bound.denom().clone(), |acc, d| acc.lcm(&d));
        let to_int = |r: &BigRational| (r * &scale).to_integer();
        let atom = LinearAtom::new(
            terms.iter().map(|(a, f)| (to_int(a), f.clone())).collect(),
            to_int(&bound),
        );
        debug_assert!(!scale.is_negative());
        Ok(match rel {
            Rel::Le => ProbFormula::Atom(atom),
            Rel::Ge => ProbFormula::Atom(atom.negated()),
            Rel::Lt => ProbFormula::Atom(atom.negated()).not(),
            Rel::Gt => ProbFormula::Atom(atom).not(),
            Rel::Eq => {
                let neg = atom.negated();
                ProbFormula::Atom(atom).and(ProbFormula::Atom(neg))
            }
        })
    }
}
