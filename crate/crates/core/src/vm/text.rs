//! Line-oriented program text.
//!
//! ```text
//! # comment
//! hold X3 := 1
//! write X1 := X0 & !X2
//! flip X4
//! if X4 { halt } else { loop }
//! while !X0 { flip X0 }
//! ```
//!
//! `hold` lines may only appear before the first statement; they record the
//! squares held by an intervention. Expressions use `!`, `&`, `^`, `|` (in
//! decreasing binding strength), `0`, `1`, `X<n>` and parentheses.

use std::fmt::{self, Display, Formatter, Write};

use thiserror::Error;

use super::{Expr, SimProgram, Stmt};
use crate::syntax::Var;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ProgramParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Square(Var),
    Bit(bool),
    Assign,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Xor,
    Semi,
}

impl Display for Tok {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "'{w}'"),
            Tok::Square(i) => write!(f, "'X{i}'"),
            Tok::Bit(b) => write!(f, "'{}'", u8::from(*b)),
            Tok::Assign => f.write_str("':='"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Not => f.write_str("'!'"),
            Tok::And => f.write_str("'&'"),
            Tok::Or => f.write_str("'|'"),
            Tok::Xor => f.write_str("'^'"),
            Tok::Semi => f.write_str("';'"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ProgramParseError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut k = 0;
        while k < chars.len() {
            let (col, c) = chars[k];
            let err = |msg: String| ProgramParseError {
                line: ln + 1,
                col: col + 1,
                msg,
            };
            if c.is_whitespace() {
                k += 1;
                continue;
            }
            let single = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '!' => Some(Tok::Not),
                '&' => Some(Tok::And),
                '|' => Some(Tok::Or),
                '^' => Some(Tok::Xor),
                ';' => Some(Tok::Semi),
                '0' => Some(Tok::Bit(false)),
                '1' => Some(Tok::Bit(true)),
                _ => None,
            };
            let tok = if let Some(t) = single {
                k += 1;
                t
            } else if c == ':' {
                if chars.get(k + 1).map(|p| p.1) != Some('=') {
                    return Err(err("expected ':='".into()));
                }
                k += 2;
                Tok::Assign
            } else if c == 'X' && chars.get(k + 1).is_some_and(|p| p.1.is_ascii_digit()) {
                let start = k + 1;
                let mut end = start;
                while end < chars.len() && chars[end].1.is_ascii_digit() {
                    end += 1;
                }
                let digits: String = chars[start..end].iter().map(|p| p.1).collect();
                k = end;
                Tok::Square(
                    digits
                        .parse()
                        .map_err(|_| err("square index out of range".into()))?,
                )
            } else if c.is_ascii_alphabetic() {
                let mut end = k;
                while end < chars.len() && chars[end].1.is_ascii_alphanumeric() {
                    end += 1;
                }
                let word: String = chars[k..end].iter().map(|p| p.1).collect();
                k = end;
                Tok::Word(word)
            } else {
                return Err(err(format!("unexpected character '{c}'")));
            };
            out.push(Spanned {
                tok,
                line: ln + 1,
                col: col + 1,
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn error(&self, msg: String) -> ProgramParseError {
        match self.toks.get(self.pos) {
            Some(s) => ProgramParseError {
                line: s.line,
                col: s.col,
                msg,
            },
            None => {
                let (line, col) = self
                    .toks
                    .last()
                    .map(|s| (s.line, s.col + 1))
                    .unwrap_or((1, 1));
                ProgramParseError { line, col, msg }
            }
        }
    }

    fn unexpected(&self, expected: &str) -> ProgramParseError {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of input".into(),
        };
        self.error(format!("expected {expected}, found {found}"))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(x)) if x == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ProgramParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn square(&mut self) -> Result<Var, ProgramParseError> {
        match self.peek() {
            Some(&Tok::Square(i)) => {
                self.pos += 1;
                Ok(i)
            }
            _ => Err(self.unexpected("a square 'X<n>'")),
        }
    }

    fn bit(&mut self) -> Result<bool, ProgramParseError> {
        match self.peek() {
            Some(&Tok::Bit(b)) => {
                self.pos += 1;
                Ok(b)
            }
            _ => Err(self.unexpected("0 or 1")),
        }
    }

    fn program(&mut self) -> Result<SimProgram, ProgramParseError> {
        let mut p = SimProgram::default();
        while self.eat_word("hold") {
            let i = self.square()?;
            self.expect(Tok::Assign)?;
            let v = self.bit()?;
            p.holds.insert(i, v);
            self.eat(&Tok::Semi);
        }
        while self.peek().is_some() {
            if matches!(self.peek(), Some(Tok::Word(w)) if w == "hold") {
                return Err(self.error("'hold' must precede all statements".into()));
            }
            p.body.push(self.stmt()?);
        }
        Ok(p)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ProgramParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err(self.unexpected("'}'"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ProgramParseError> {
        let s = if self.eat_word("write") {
            let i = self.square()?;
            self.expect(Tok::Assign)?;
            Stmt::Write(i, self.expr()?)
        } else if self.eat_word("flip") {
            Stmt::Flip(self.square()?)
        } else if self.eat_word("if") {
            self.if_rest()?
        } else if self.eat_word("while") {
            let c = self.expr()?;
            Stmt::While(c, self.block()?)
        } else if self.eat_word("halt") {
            Stmt::Halt
        } else if self.eat_word("loop") {
            Stmt::Loop
        } else {
            return Err(self.unexpected("a statement"));
        };
        self.eat(&Tok::Semi);
        Ok(s)
    }

    fn if_rest(&mut self) -> Result<Stmt, ProgramParseError> {
        let c = self.expr()?;
        let then = self.block()?;
        let other = if self.eat_word("else") {
            if self.eat_word("if") {
                vec![self.if_rest()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If(c, then, other))
    }

    fn expr(&mut self) -> Result<Expr, ProgramParseError> {
        let mut acc = self.xor_expr()?;
        while self.eat(&Tok::Or) {
            acc = acc.or(self.xor_expr()?);
        }
        Ok(acc)
    }

    fn xor_expr(&mut self) -> Result<Expr, ProgramParseError> {
        let mut acc = self.and_expr()?;
        while self.eat(&Tok::Xor) {
            acc = acc.xor(self.and_expr()?);
        }
        Ok(acc)
    }

    fn and_expr(&mut self) -> Result<Expr, ProgramParseError> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::And) {
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ProgramParseError> {
        if self.eat(&Tok::Not) {
            return Ok(self.unary()?.not());
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        match self.peek() {
            Some(&Tok::Bit(b)) => {
                self.pos += 1;
                Ok(Expr::Const(b))
            }
            Some(&Tok::Square(i)) => {
                self.pos += 1;
                Ok(Expr::Read(i))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

pub fn parse_program(src: &str) -> Result<SimProgram, ProgramParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    p.program()
}

const OR: u8 = 1;
const XOR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

fn fmt_expr(e: &Expr, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
    let (prec, op, a, b) = match e {
        Expr::Const(b) => return write!(f, "{}", u8::from(*b)),
        Expr::Read(i) => return write!(f, "X{i}"),
        Expr::Not(a) => {
            f.write_char('!')?;
            return fmt_expr(a, f, UNARY);
        }
        Expr::And(a, b) => (AND, " & ", a, b),
        Expr::Xor(a, b) => (XOR, " ^ ", a, b),
        Expr::Or(a, b) => (OR, " | ", a, b),
    };
    let parens = min > prec;
    if parens {
        f.write_char('(')?;
    }
    fmt_expr(a, f, prec)?;
    f.write_str(op)?;
    fmt_expr(b, f, prec + 1)?;
    if parens {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

fn fmt_block(stmts: &[Stmt], f: &mut Formatter<'_>, depth: usize) -> fmt::Result {
    for s in stmts {
        fmt_stmt(s, f, depth)?;
    }
    Ok(())
}

fn fmt_stmt(s: &Stmt, f: &mut Formatter<'_>, depth: usize) -> fmt::Result {
    let pad = "    ".repeat(depth);
    match s {
        Stmt::Write(i, e) => writeln!(f, "{pad}write X{i} := {e}"),
        Stmt::Flip(i) => writeln!(f, "{pad}flip X{i}"),
        Stmt::Halt => writeln!(f, "{pad}halt"),
        Stmt::Loop => writeln!(f, "{pad}loop"),
        Stmt::While(c, body) => {
            writeln!(f, "{pad}while {c} {{")?;
            fmt_block(body, f, depth + 1)?;
            writeln!(f, "{pad}}}")
        }
        Stmt::If(c, then, other) => {
            writeln!(f, "{pad}if {c} {{")?;
            fmt_block(then, f, depth + 1)?;
            if other.is_empty() {
                writeln!(f, "{pad}}}")
            } else {
                writeln!(f, "{pad}}} else {{")?;
                fmt_block(other, f, depth + 1)?;
                writeln!(f, "{pad}}}")
            }
        }
    }
}

impl Display for SimProgram {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, v) in &self.holds {
            writeln!(f, "hold X{i} := {}", u8::from(*v))?;
        }
        fmt_block(&self.body, f, 0)
    }
}
