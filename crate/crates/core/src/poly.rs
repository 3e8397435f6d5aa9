//! Sparse real polynomials in the four coordinates `(x, y, u, v)` of ℝ⁴.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent tuples, so iteration order
//! (and therefore printing and evaluation order) is deterministic. A term with
//! coefficient exactly zero is never stored; the zero polynomial is the empty
//! map.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponents of `x, y, u, v`, in that order.
pub type Exponent = [u32; 4];

/// One of the four coordinates of ℝ⁴.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    U,
    V,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::U, Var::V];

    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::U => 2,
            Var::V => 3,
        }
    }

    pub fn name(self) -> &'static str {
        ["x", "y", "u", "v"][self.index()]
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "u" => Some(Var::U),
            "v" => Some(Var::V),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly4 {
    terms: BTreeMap<Exponent, f64>,
}

impl Poly4 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0; 4])
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 4];
        e[v.index()] = 1;
        Self::monomial(1.0, e)
    }

    pub fn monomial(coeff: f64, exp: Exponent) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, coeff);
        p
    }

    /// Builds a polynomial from `(coefficient, exponent)` pairs, merging
    /// repeated exponents.
    pub fn from_terms<I: IntoIterator<Item = (f64, Exponent)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (c, e) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exp: Exponent, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: Exponent) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff([0; 4])
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|e| e.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, k)| (k * c, *e)))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative.
    pub fn partial(&self, var: Var) -> Self {
        let i = var.index();
        Self::from_terms(self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
            let mut d = *e;
            d[i] -= 1;
            (c * e[i] as f64, d)
        }))
    }

    pub fn gradient(&self) -> [Poly4; 4] {
        Var::ALL.map(|v| self.partial(v))
    }

    /// Substitutes `var -> -var`.
    pub fn negate_var(&self, var: Var) -> Self {
        let i = var.index();
        Self::from_terms(
            self.terms
                .iter()
                .map(|(e, c)| (if e[i] % 2 == 1 { -c } else { *c }, *e)),
        )
    }

    pub fn eval(&self, p: &[f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * (0..4).map(|i| p[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    /// Largest absolute coefficient of `self - other`.
    pub fn max_abs_diff(&self, other: &Poly4) -> f64 {
        (self - other)
            .terms
            .values()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Add for &Poly4 {
    type Output = Poly4;
    fn add(self, rhs: &Poly4) -> Poly4 {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, *c);
        }
        out
    }
}

impl Sub for &Poly4 {
    type Output = Poly4;
    fn sub(self, rhs: &Poly4) -> Poly4 {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul for &Poly4 {
    type Output = Poly4;
    fn mul(self, rhs: &Poly4) -> Poly4 {
        let mut out = Poly4::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly4 {
    type Output = Poly4;
    fn neg(self) -> Poly4 {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly4 {
            type Output = Poly4;
            fn $m(self, rhs: Poly4) -> Poly4 {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly4 {
    type Output = Poly4;
    fn neg(self) -> Poly4 {
        -&self
    }
}

fn fmt_coeff(c: f64) -> String {
    // `{}` on f64 prints the shortest string that parses back to the same value.
    format!("{}", c)
}

impl fmt::Display for Poly4 {
    /// Prints in the map DSL syntax, e.g. `3*x^2*u - y*v + 0.5`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = *c < 0.0;
            let mag = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = e.iter().all(|&d| d == 0);
            if mag != 1.0 || is_const {
                factors.push(fmt_coeff(mag));
            }
            for (i, &d) in e.iter().enumerate() {
                match d {
                    0 => {}
                    1 => factors.push(Var::ALL[i].name().to_string()),
                    _ => factors.push(format!("{}^{}", Var::ALL[i].name(), d)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// A polynomial flattened for fast repeated evaluation.
///
/// Powers of each coordinate are tabulated once per point, so every term
/// costs four table lookups and four multiplications.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coeffs: Vec<f64>,
    exps: Vec<[u8; 4]>,
    max_exp: usize,
}

impl CompiledPoly {
    pub fn new(p: &Poly4) -> Self {
        let max_exp = p.max_exponent() as usize;
        assert!(max_exp < 256, "exponent too large for compiled evaluation");
        let (coeffs, exps) = p
            .terms()
            .map(|(e, c)| (*c, e.map(|d| d as u8)))
            .unzip();
        Self {
            coeffs,
            exps,
            max_exp,
        }
    }

    pub fn max_exp(&self) -> usize {
        self.max_exp
    }

    /// Evaluates against a power table built by [`PowerTable::fill`].
    pub fn eval_with(&self, table: &PowerTable) -> f64 {
        let mut acc = 0.0;
        for (c, e) in self.coeffs.iter().zip(&self.exps) {
            acc += c
                * table.get(0, e[0])
                * table.get(1, e[1])
                * table.get(2, e[2])
                * table.get(3, e[3]);
        }
        acc
    }

    pub fn eval(&self, p: &[f64; 4]) -> f64 {
        let mut t = PowerTable::new(self.max_exp);
        t.fill(p);
        self.eval_with(&t)
    }
}

/// Powers `p[i]^k` for `k <= max_exp`.
#[derive(Clone, Debug)]
pub struct PowerTable {
    stride: usize,
    data: Vec<f64>,
}

impl PowerTable {
    pub fn new(max_exp: usize) -> Self {
        let stride = max_exp + 1;
        Self {
            stride,
            data: vec![1.0; 4 * stride],
        }
    }

    pub fn fill(&mut self, p: &[f64; 4]) {
        for (i, &xi) in p.iter().enumerate() {
            let row = &mut self.data[i * self.stride..(i + 1) * self.stride];
            row[0] = 1.0;
            for k in 1..row.len() {
                row[k] = row[k - 1] * xi;
            }
        }
    }

    #[inline]
    fn get(&self, var: usize, k: u8) -> f64 {
        self.data[var * self.stride + k as usize]
    }
}
