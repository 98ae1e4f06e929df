//! Expression language for forms.
//!
//! ```text
//! sum     := wedge (('+' | '-') wedge)*
//! wedge   := prod ('^' prod)*
//! prod    := unary ('*' unary | '/' INT)*
//! unary   := '-' unary | postfix
//! postfix := atom ('^' INT)*          -- '^' directly followed by a digit
//! atom    := INT | NAME | 'd' '[' slots ']' '(' sum ')'
//!          | 'c' '[' slots ']' '(' NAME ')' | '(' sum ')'
//! ```
//!
//! `NAME` is a coordinate or a contact alias such as `w0`; `c[L](u)` is the
//! adapted generator `θ^L` of the contact form led by `u`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::algebra::{IForm, SlotSet, MAX_ARITY};
use crate::calculus::differential_multi;
use crate::diffiety::{theta_raw, Patch, Role};
use crate::error::{Error, Result};
use crate::poly::{Poly, Var, Q};

#[derive(Debug, Clone)]
pub struct Node {
    pub pos: usize,
    pub expr: Expr,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(BigInt),
    Coord(Var),
    Contact(SlotSet, Var),
    D(SlotSet, Box<Node>),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, BigInt),
    Pow(Box<Node>, u32),
    Wedge(Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    /// `^` followed directly by a digit.
    Power,
    Caret,
    End,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, Tok::Int(text[start..i].parse().unwrap())));
            continue;
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Name(text[start..i].to_string())));
            continue;
        } else {
            match c {
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => Tok::Power,
                '^' => Tok::Caret,
                _ => return Err(syntax(start, format!("unexpected character '{c}'"))),
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    patch: &'a Patch,
    k: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<usize> {
        if *self.peek() == t {
            Ok(self.bump().0)
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn node(pos: usize, expr: Expr) -> Node {
        Node { pos, expr }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.wedge()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.wedge()?;
                    lhs = Self::node(pos, Expr::Add(Box::new(lhs), Box::new(rhs)));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.wedge()?;
                    lhs = Self::node(pos, Expr::Sub(Box::new(lhs), Box::new(rhs)));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn wedge(&mut self) -> Result<Node> {
        let mut lhs = self.prod()?;
        while *self.peek() == Tok::Caret {
            let pos = self.bump().0;
            let rhs = self.prod()?;
            lhs = Self::node(pos, Expr::Wedge(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn prod(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Self::node(pos, Expr::Mul(Box::new(lhs), Box::new(rhs)));
                }
                Tok::Slash => {
                    self.bump();
                    let p = self.pos();
                    match self.bump().1 {
                        Tok::Int(n) if !n.is_zero() => {
                            lhs = Self::node(pos, Expr::Div(Box::new(lhs), n));
                        }
                        Tok::Int(_) => return Err(syntax(p, "division by zero")),
                        _ => return Err(syntax(p, "expected an integer divisor")),
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Minus {
            let pos = self.bump().0;
            let inner = self.unary()?;
            return Ok(Self::node(pos, Expr::Neg(Box::new(inner))));
        }
        let mut base = self.atom()?;
        while *self.peek() == Tok::Power {
            let pos = self.bump().0;
            let p = self.pos();
            let e = match self.bump().1 {
                Tok::Int(n) => n.to_u32().ok_or_else(|| syntax(p, "exponent too large"))?,
                _ => return Err(syntax(p, "expected an exponent")),
            };
            base = Self::node(pos, Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn slots(&mut self) -> Result<SlotSet> {
        let open = self.expect(Tok::LBrack, "'['")?;
        let mut s = SlotSet::EMPTY;
        loop {
            let p = self.pos();
            match self.bump().1 {
                Tok::Int(n) => {
                    let m = n.to_usize().filter(|&m| (1..=MAX_ARITY).contains(&m));
                    let Some(m) = m else {
                        return Err(syntax(p, format!("malformed slot {n}")));
                    };
                    if m > self.k {
                        return Err(syntax(p, format!("slot {m} exceeds the arity {}", self.k)));
                    }
                    if s.contains(m) {
                        return Err(syntax(p, format!("slot {m} repeated")));
                    }
                    s = s.with(m);
                }
                _ => return Err(syntax(p, "malformed slot set")),
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrack => {
                    self.bump();
                    break;
                }
                _ => return Err(syntax(self.pos(), "malformed slot set")),
            }
        }
        if s.is_empty() {
            return Err(syntax(open, "empty slot set"));
        }
        Ok(s)
    }

    fn coordinate(&self, pos: usize, name: &str) -> Result<Var> {
        self.patch.var(name).ok_or_else(|| syntax(pos, format!("unknown coordinate '{name}'")))
    }

    fn atom(&mut self) -> Result<Node> {
        let (pos, tok) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Self::node(pos, Expr::Num(n))),
            Tok::LParen => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Name(name) if name == "d" && *self.peek() == Tok::LBrack => {
                let s = self.slots()?;
                self.expect(Tok::LParen, "'('")?;
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Self::node(pos, Expr::D(s, Box::new(inner))))
            }
            Tok::Name(name) if name == "c" && *self.peek() == Tok::LBrack => {
                let s = self.slots()?;
                self.expect(Tok::LParen, "'('")?;
                let p = self.pos();
                let v = match self.bump().1 {
                    Tok::Name(n) => self.coordinate(p, &n)?,
                    _ => return Err(syntax(p, "expected a coordinate")),
                };
                if !matches!(self.patch.role(v), Role::Leading(_)) {
                    return Err(syntax(p, format!("'{}' leads no contact form", self.patch.name(v))));
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(Self::node(pos, Expr::Contact(s, v)))
            }
            Tok::Name(name) => {
                if let Some(v) = self.patch.var(&name) {
                    return Ok(Self::node(pos, Expr::Coord(v)));
                }
                if let Some(i) = self.patch.contact_by_alias(&name) {
                    let v = self.patch.contacts()[i].leading;
                    return Ok(Self::node(pos, Expr::Contact(SlotSet::single(1), v)));
                }
                Err(syntax(pos, format!("unknown coordinate '{name}'")))
            }
            Tok::End => Err(syntax(pos, "unexpected end of input")),
            _ => Err(syntax(pos, "expected an expression")),
        }
    }
}

/// Parses `text` against the coordinates of `patch` with `k` slots.
pub fn parse(text: &str, patch: &Patch, k: usize) -> Result<Node> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, patch, k };
    let n = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(n)
}

const SUM: u8 = 0;
const WEDGE: u8 = 1;
const PROD: u8 = 2;
const UNARY: u8 = 3;
const POSTFIX: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Wedge(..) => WEDGE,
        Expr::Mul(..) | Expr::Div(..) => PROD,
        Expr::Neg(_) => UNARY,
        Expr::Pow(..) => POSTFIX,
        _ => ATOM,
    }
}

/// Prints an expression so that `parse` gives it back.
pub fn print(n: &Node, patch: &Patch) -> String {
    let mut s = String::new();
    print_at(n, patch, SUM, &mut s);
    s
}

fn print_at(n: &Node, patch: &Patch, min: u8, s: &mut String) {
    let lv = level(&n.expr);
    if lv < min {
        s.push('(');
        print_at(n, patch, SUM, s);
        s.push(')');
        return;
    }
    match &n.expr {
        Expr::Num(v) => {
            let _ = write!(s, "{v}");
        }
        Expr::Coord(v) => s.push_str(patch.name(*v)),
        Expr::Contact(l, v) => {
            let _ = write!(s, "c[{l}]({})", patch.name(*v));
        }
        Expr::D(l, a) => {
            let _ = write!(s, "d[{l}](");
            print_at(a, patch, SUM, s);
            s.push(')');
        }
        Expr::Neg(a) => {
            s.push('-');
            print_at(a, patch, UNARY, s);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            print_at(a, patch, SUM, s);
            s.push_str(if matches!(n.expr, Expr::Add(..)) { " + " } else { " - " });
            print_at(b, patch, WEDGE, s);
        }
        Expr::Wedge(a, b) => {
            print_at(a, patch, WEDGE, s);
            s.push_str(" ^ ");
            print_at(b, patch, PROD, s);
        }
        Expr::Mul(a, b) => {
            print_at(a, patch, PROD, s);
            s.push_str(" * ");
            print_at(b, patch, UNARY, s);
        }
        Expr::Div(a, d) => {
            print_at(a, patch, PROD, s);
            let _ = write!(s, "/{d}");
        }
        Expr::Pow(a, e) => {
            print_at(a, patch, POSTFIX, s);
            let _ = write!(s, "^{e}");
        }
    }
}

fn scalar(f: &IForm) -> Option<Poly> {
    f.terms().all(|(m, _)| m.is_one()).then(|| f.function_part())
}

/// Evaluates to a form in the raw alphabet of `Λ_k`.
pub fn eval(n: &Node, patch: &Patch, k: usize) -> Result<IForm> {
    Ok(match &n.expr {
        Expr::Num(v) => IForm::constant(k, Q::from_integer(v.clone())),
        Expr::Coord(v) => IForm::coordinate(k, *v),
        Expr::Contact(l, v) => {
            let Role::Leading(j) = patch.role(*v) else {
                return Err(syntax(n.pos, "not a contact generator"));
            };
            theta_raw(patch, k, *l, SlotSet::max(*l).unwrap(), j)?
        }
        Expr::D(l, a) => differential_multi(*l, &eval(a, patch, k)?)?,
        Expr::Neg(a) => eval(a, patch, k)?.neg(),
        Expr::Add(a, b) => eval(a, patch, k)?.add(&eval(b, patch, k)?)?,
        Expr::Sub(a, b) => eval(a, patch, k)?.sub(&eval(b, patch, k)?)?,
        Expr::Wedge(a, b) => eval(a, patch, k)?.wedge(&eval(b, patch, k)?)?,
        Expr::Mul(a, b) => {
            let (x, y) = (eval(a, patch, k)?, eval(b, patch, k)?);
            if let Some(f) = scalar(&x) {
                y.mul_poly(&f)
            } else if let Some(f) = scalar(&y) {
                x.mul_poly(&f)
            } else {
                return Err(syntax(n.pos, "'*' needs a function on one side; use '^' for forms"));
            }
        }
        Expr::Div(a, d) => eval(a, patch, k)?.scale(&Q::new(1.into(), d.clone())),
        Expr::Pow(a, e) => {
            let x = eval(a, patch, k)?;
            let Some(f) = scalar(&x) else {
                return Err(syntax(n.pos, "only functions can be raised to a power"));
            };
            let mut acc = Poly::one();
            for _ in 0..*e {
                acc = &acc * &f;
            }
            IForm::function(k, acc)
        }
    })
}

/// `parse` followed by `eval`.
pub fn parse_form(text: &str, patch: &Patch, k: usize) -> Result<IForm> {
    eval(&parse(text, patch, k)?, patch, k)
}

/// Parses an expression that must evaluate to a function.
pub fn parse_function(text: &str, patch: &Patch) -> Result<Poly> {
    let f = parse_form(text, patch, 1)?;
    scalar(&f).ok_or_else(|| syntax(0, "expected a function"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Generator;

    fn jet() -> Patch {
        Patch::jet(3)
    }

    #[test]
    fn generators_and_wedges() {
        let p = jet();
        let a = parse_form("d[1](x)^d[1](u0)", &p, 1).unwrap();
        assert_eq!(a.render(&p), "d[1](x) ^ d[1](u0)");
        let b = parse_form("d[1,2](x)", &p, 2).unwrap();
        let g = IForm::generator(2, Generator::raw(SlotSet::from_slots(&[1, 2]), Var(0)));
        assert_eq!(b, g);
        assert!(parse_form("d[1](x)^d[1](x)", &p, 1).unwrap().is_zero());
    }

    #[test]
    fn powers_and_fractions() {
        let p = jet();
        let f = parse_function("u1^2/2", &p).unwrap();
        assert_eq!(f.render(&|v| p.name(v).to_string()), "u1^2/2");
        // a spaced caret is a wedge, here with a constant
        let g = parse_function("u1 ^ 2", &p).unwrap();
        assert_eq!(g.render(&|v| p.name(v).to_string()), "2*u1");
    }

    #[test]
    fn alias_is_contact_form() {
        let p = jet();
        let w = parse_form("w0", &p, 1).unwrap();
        let raw = parse_form("d[1](u0) - u1 * d[1](x)", &p, 1).unwrap();
        assert_eq!(w, raw);
        assert_eq!(parse_form("c[1](u0)", &p, 1).unwrap(), raw);
    }

    #[test]
    fn errors_are_positioned() {
        let p = jet();
        let cases = [("d[1](y)", 5), ("d[3](x)", 2), ("d[1,](x)", 4), ("(x", 2), ("x $", 2)];
        for (text, pos) in cases {
            match parse(text, &p, 2) {
                Err(Error::Syntax { pos: got, .. }) => assert_eq!(got, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_form("d[1](x) * d[1](u0)", &p, 1),
            Err(Error::Syntax { pos: 8, .. })
        ));
    }

    #[test]
    fn print_parse_fixpoint() {
        let p = jet();
        for text in [
            "-u2 * w0 ^ d[1](x)",
            "(u0 + u1) * d[1](x) - -x^2/3",
            "d[1,2](x^2 * u1) ^ (d[1](u0) - d[2](u0))",
            "2*u2/3 * c[1,2](u1)",
            "(x^2)^3 ^ 2",
        ] {
            let a = parse(text, &p, 2).unwrap();
            let b = parse(&print(&a, &p), &p, 2).unwrap();
            assert_eq!(a, b, "{text} -> {}", print(&a, &p));
        }
    }
}
