//! Text format for maps ℝ⁴ → ℝ².
//!
//! Two forms are accepted:
//!
//! ```text
//! f = x*u - y*v; g = x*v + y*u       (real pair in x, y, u, v)
//! F = z*conj(w)                      (complex, z = x + iy, w = u + iv)
//! ```
//!
//! Precedence, tightest first: `^` (non-negative integer exponent), unary
//! `-`, `*`, then binary `+ -`. Binary operators associate to the left.
//! `conj` may only be applied directly to `z` or `w`.

use crate::error::{Error, Result};
use crate::mapcore::MapR4R2;
use crate::poly::{Poly4, Var};

const MAX_EXPONENT: u32 = 64;
const MAX_DEPTH: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Real,
    Complex,
}

/// A parsed map together with the source it came from.
#[derive(Clone, Debug)]
pub struct MapSource {
    pub text: String,
    pub kind: MapKind,
    pub map: MapR4R2,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num { value: f64, decimal: bool, text: String },
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    Semi,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Eq,
            ';' => Tok::Semi,
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push((
                    Tok::Num {
                        value,
                        decimal: text.contains('.'),
                        text: text.to_string(),
                    },
                    start,
                ));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

/// Polynomial arithmetic needed by the evaluator; implemented by real
/// polynomials and by (Re, Im) pairs.
trait Algebra: Sized + Clone {
    fn constant(c: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Resolves an identifier; `conj` marks `conj(<name>)`.
    fn variable(name: &str, conj: bool, pos: usize) -> Result<Self>;

    fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Algebra for Poly4 {
    fn constant(c: f64) -> Self {
        Poly4::constant(c)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn variable(name: &str, conj: bool, pos: usize) -> Result<Self> {
        match (Var::from_name(name), conj) {
            (Some(v), false) => Ok(Poly4::var(v)),
            (Some(_), true) => Err(Error::Syntax {
                pos,
                msg: "conj is only available in complex (F = ...) definitions".into(),
            }),
            (None, _) => Err(Error::UnknownIdentifier {
                name: name.to_string(),
                pos,
            }),
        }
    }
}

#[derive(Clone, Debug)]
struct Complex {
    re: Poly4,
    im: Poly4,
}

impl Algebra for Complex {
    fn constant(c: f64) -> Self {
        Complex {
            re: Poly4::constant(c),
            im: Poly4::zero(),
        }
    }
    fn add(&self, o: &Self) -> Self {
        Complex {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Complex {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Complex {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
    fn neg(&self) -> Self {
        Complex {
            re: -&self.re,
            im: -&self.im,
        }
    }
    fn variable(name: &str, conj: bool, pos: usize) -> Result<Self> {
        let (re, im) = match name {
            "z" => (Var::X, Var::Y),
            "w" => (Var::U, Var::V),
            "i" if !conj => {
                return Ok(Complex {
                    re: Poly4::zero(),
                    im: Poly4::constant(1.0),
                })
            }
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    pos,
                })
            }
        };
        let im = Poly4::var(im);
        Ok(Complex {
            re: Poly4::var(re),
            im: if conj { -im } else { im },
        })
    }
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    depth: usize,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [(Tok, usize)], end: usize) -> Self {
        Self {
            toks,
            pos: 0,
            end,
            depth: 0,
            warnings: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn expr<A: Algebra>(&mut self) -> Result<A> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.syntax("expression nested too deeply");
        }
        let mut acc = self.term::<A>()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term::<A>()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term::<A>()?);
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term<A: Algebra>(&mut self) -> Result<A> {
        let mut acc = self.unary::<A>()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary::<A>()?);
                }
                Some(Tok::Slash) => {
                    return Err(Error::NonPolynomial {
                        pos: self.offset(),
                        msg: "division is not allowed".into(),
                    })
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary<A: Algebra>(&mut self) -> Result<A> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            self.depth += 1;
            if self.depth > MAX_DEPTH {
                return self.syntax("expression nested too deeply");
            }
            let inner = self.unary::<A>()?;
            self.depth -= 1;
            return Ok(inner.neg());
        }
        self.power()
    }

    fn power<A: Algebra>(&mut self) -> Result<A> {
        let base = self.atom::<A>()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num { value, decimal: false, .. }) => {
                self.pos += 1;
                if value > MAX_EXPONENT as f64 {
                    return Err(Error::Syntax {
                        pos: at,
                        msg: format!("exponent exceeds {MAX_EXPONENT}"),
                    });
                }
                if self.peek() == Some(&Tok::Caret) {
                    return self.syntax("chained exponents need parentheses");
                }
                Ok(base.pow(value as u32))
            }
            Some(Tok::Minus) => Err(Error::NonPolynomial {
                pos: at,
                msg: "negative exponent".into(),
            }),
            _ => self.syntax("exponent must be a non-negative integer literal"),
        }
    }

    fn atom<A: Algebra>(&mut self) -> Result<A> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num { value, decimal, text }) => {
                self.pos += 1;
                if decimal {
                    self.warnings.push(format!(
                        "decimal literal `{text}` at position {at}; identity checks assume exact coefficients"
                    ));
                }
                Ok(A::constant(value))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr::<A>()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "conj" {
                    self.expect(Tok::LParen, "`(` after conj")?;
                    let inner_at = self.offset();
                    let inner = match self.peek().cloned() {
                        Some(Tok::Ident(n)) if n == "z" || n == "w" => n,
                        _ => {
                            return Err(Error::Syntax {
                                pos: inner_at,
                                msg: "conj applies only to z or w".into(),
                            })
                        }
                    };
                    self.pos += 1;
                    self.expect(Tok::RParen, "`)` closing conj")?;
                    return A::variable(&inner, true, inner_at);
                }
                if self.peek() == Some(&Tok::LParen) {
                    return Err(Error::NonPolynomial {
                        pos: at,
                        msg: format!("function `{name}` is not a polynomial operation"),
                    });
                }
                A::variable(&name, false, at)
            }
            Some(_) => self.syntax("expected a number, variable, or `(`"),
            None => self.syntax("unexpected end of input"),
        }
    }

    /// `<name> = <expr>`
    fn definition<A: Algebra>(&mut self) -> Result<(String, usize, A)> {
        let at = self.offset();
        let name = match self.peek().cloned() {
            Some(Tok::Ident(n)) => n,
            _ => return self.syntax("expected a definition like `f = ...`"),
        };
        self.pos += 1;
        self.expect(Tok::Eq, "`=`")?;
        let e = self.expr::<A>()?;
        Ok((name, at, e))
    }

    fn skip_semis(&mut self) -> bool {
        let mut any = false;
        while self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            any = true;
        }
        any
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn first_ident(toks: &[(Tok, usize)]) -> Option<&str> {
    match toks.first() {
        Some((Tok::Ident(n), _)) => Some(n),
        _ => None,
    }
}

fn parse_real_tokens(src: &str, toks: &[(Tok, usize)]) -> Result<(MapR4R2, Vec<String>)> {
    let mut p = Parser::new(toks, src.len());
    let mut f = None;
    let mut g = None;
    while !p.at_end() {
        let (name, at, e) = p.definition::<Poly4>()?;
        let slot = match name.as_str() {
            "f" => &mut f,
            "g" => &mut g,
            _ => {
                return Err(Error::Syntax {
                    pos: at,
                    msg: format!("expected `f` or `g`, found `{name}`"),
                })
            }
        };
        if slot.is_some() {
            return Err(Error::Syntax {
                pos: at,
                msg: format!("`{name}` defined twice"),
            });
        }
        *slot = Some(e);
        if !p.skip_semis() && !p.at_end() {
            return p.syntax("expected `;` or end of input");
        }
    }
    match (f, g) {
        (Some(f), Some(g)) => Ok((MapR4R2::new(f, g, src.trim())?, p.warnings)),
        _ => Err(Error::Syntax {
            pos: src.len(),
            msg: "both `f = ...` and `g = ...` are required".into(),
        }),
    }
}

fn parse_complex_tokens(src: &str, toks: &[(Tok, usize)]) -> Result<(MapR4R2, Vec<String>)> {
    let mut p = Parser::new(toks, src.len());
    let (name, at, e) = p.definition::<Complex>()?;
    if name != "F" {
        return Err(Error::Syntax {
            pos: at,
            msg: format!("expected `F`, found `{name}`"),
        });
    }
    p.skip_semis();
    if !p.at_end() {
        return p.syntax("unexpected input after definition");
    }
    Ok((MapR4R2::new(e.re, e.im, src.trim())?, p.warnings))
}

/// Parses `f = <poly>; g = <poly>`.
pub fn parse_real(src: &str) -> Result<MapR4R2> {
    let toks = tokenize(src)?;
    parse_real_tokens(src, &toks).map(|(m, _)| m)
}

/// Parses `F = <complex expr>` and returns `(Re F, Im F)`.
pub fn parse_complex(src: &str) -> Result<MapR4R2> {
    let toks = tokenize(src)?;
    parse_complex_tokens(src, &toks).map(|(m, _)| m)
}

/// Parses either form, deciding by whether the first definition is `F`.
pub fn parse_map(src: &str) -> Result<MapSource> {
    let toks = tokenize(src)?;
    let kind = if first_ident(&toks) == Some("F") {
        MapKind::Complex
    } else {
        MapKind::Real
    };
    let (map, warnings) = match kind {
        MapKind::Real => parse_real_tokens(src, &toks)?,
        MapKind::Complex => parse_complex_tokens(src, &toks)?,
    };
    Ok(MapSource {
        text: src.trim().to_string(),
        kind,
        map,
        warnings,
    })
}

/// `Some((p, q))` when the source is literally `F = z^p - w^q`.
pub fn brieskorn_exponents(src: &str) -> Option<(u32, u32)> {
    let toks = tokenize(src).ok()?;
    let mut toks: Vec<Tok> = toks.into_iter().map(|(t, _)| t).collect();
    while toks.last() == Some(&Tok::Semi) {
        toks.pop();
    }
    let ident = |t: &Tok, s: &str| matches!(t, Tok::Ident(n) if n == s);
    let int = |t: &Tok| match t {
        Tok::Num { value, decimal: false, .. } if *value >= 1.0 && *value <= MAX_EXPONENT as f64 => {
            Some(*value as u32)
        }
        _ => None,
    };
    match toks.as_slice() {
        [f, Tok::Eq, z, Tok::Caret, p, Tok::Minus, w, Tok::Caret, q]
            if ident(f, "F") && ident(z, "z") && ident(w, "w") =>
        {
            Some((int(p)?, int(q)?))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Var::*;

    fn var(v: Var) -> Poly4 {
        Poly4::var(v)
    }

    #[test]
    fn real_zw() {
        let m = parse_real("f = x*u - y*v; g = x*v + y*u").unwrap();
        assert_eq!(m.f(), &(&var(X) * &var(U) - &var(Y) * &var(V)));
        assert_eq!(m.g(), &(&var(X) * &var(V) + &var(Y) * &var(U)));
    }

    #[test]
    fn real_linear_and_constant_error() {
        let m = parse_real("f = x; g = y").unwrap();
        assert_eq!(m.f(), &var(X));
        assert_eq!(parse_real("f = x + 1; g = y"), Err(Error::NonzeroConstantTerm));
    }

    #[test]
    fn complex_examples() {
        let m = parse_complex("F = z*w").unwrap();
        assert!(m.same_map(&parse_real("f = x*u - y*v; g = x*v + y*u").unwrap()));
        let m = parse_complex("F = z*conj(w)").unwrap();
        assert!(m.same_map(&parse_real("f = x*u + y*v; g = y*u - x*v").unwrap()));
        let m = parse_complex("F = z^2 - w^3").unwrap();
        let expect = parse_real("f = x^2 - y^2 - u^3 + 3*u*v^2; g = 2*x*y - 3*u^2*v + v^3").unwrap();
        assert!(m.same_map(&expect));
    }

    #[test]
    fn precedence() {
        let a = parse_real("f = -x^2; g = 2*-y").unwrap();
        assert_eq!(a.f(), &(-var(X).pow(2)));
        assert_eq!(a.g(), &var(Y).scale(-2.0));
        let b = parse_real("f = x - y - u; g = (x + y)*u").unwrap();
        assert_eq!(b.f(), &(var(X) - var(Y) - var(U)));
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse_real("f = x +; g = y"), Err(Error::Syntax { pos: 7, .. })));
        assert!(matches!(
            parse_real("f = q; g = y"),
            Err(Error::UnknownIdentifier { pos: 4, .. })
        ));
        assert!(matches!(parse_complex("F = z/w"), Err(Error::NonPolynomial { .. })));
        assert!(matches!(parse_complex("F = conj(z*w)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_complex("F = z^-1"), Err(Error::NonPolynomial { .. })));
        assert!(matches!(parse_real("f = x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_real("f = x; f = y"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_real("f = x; g = y $"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn decimal_warning() {
        let s = parse_map("f = 0.5*x; g = y").unwrap();
        assert_eq!(s.kind, MapKind::Real);
        assert_eq!(s.warnings.len(), 1);
        assert!(parse_map("F = z*w").unwrap().warnings.is_empty());
    }

    #[test]
    fn pretty_print_round_trip() {
        for src in ["F = z^2 - w^3", "F = z*conj(w)", "f = 0.25*x^3 - y; g = 3*u*v - x"] {
            let m = parse_map(src).unwrap().map;
            let again = parse_real(&m.to_string()).unwrap();
            assert!(again.same_map(&m), "{src}");
        }
    }

    #[test]
    fn brieskorn_detection() {
        assert_eq!(brieskorn_exponents("F = z^2 - w^3"), Some((2, 3)));
        assert_eq!(brieskorn_exponents("F=z^3-w^4;"), Some((3, 4)));
        assert_eq!(brieskorn_exponents("F = z^2 + w^3"), None);
        assert_eq!(brieskorn_exponents("F = z*w"), None);
    }
}
