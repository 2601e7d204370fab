//! Sparse multivariate complex polynomials and Laurent polynomials.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vector, so every
//! polynomial has one canonical representation and formatting, determinants
//! and test fixtures are reproducible.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Coefficients below `PRUNE_REL * max|coeff|` are dropped after products
/// and compositions; keeps Jacobian expansions free of numeric dust.
pub const PRUNE_REL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("negative exponent requires the laurent flag")]
    NegativeExponent,
    #[error("variable z{0} exceeds the declared dimension {1}")]
    VarOutOfRange(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("evaluation at a zero coordinate with a negative exponent")]
    ZeroCoordinate,
    #[error("map is not square ({components} components in {dim} variables)")]
    NonSquareMap { components: usize, dim: usize },
    #[error("cannot raise a multi-term polynomial to a negative power")]
    NegativePower,
    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,
}

/// Sparse polynomial in `dim` complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    laurent: bool,
    terms: BTreeMap<Vec<i32>, Complex64>,
}

impl Poly {
    pub fn zero(dim: usize, laurent: bool) -> Self {
        Poly { dim, laurent, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, laurent: bool, c: Complex64) -> Self {
        let mut p = Poly::zero(dim, laurent);
        if c.norm() > 0.0 {
            p.terms.insert(vec![0; dim], c);
        }
        p
    }

    /// Single variable `z_{var}` (0-based index).
    pub fn var(dim: usize, laurent: bool, var: usize) -> Self {
        let mut e = vec![0; dim];
        e[var] = 1;
        Poly::monomial(dim, laurent, e, Complex64::new(1.0, 0.0)).unwrap()
    }

    pub fn monomial(
        dim: usize,
        laurent: bool,
        exps: Vec<i32>,
        c: Complex64,
    ) -> Result<Self, PolyError> {
        if exps.len() != dim {
            return Err(PolyError::DimensionMismatch { expected: dim, got: exps.len() });
        }
        if !laurent && exps.iter().any(|&e| e < 0) {
            return Err(PolyError::NegativeExponent);
        }
        let mut p = Poly::zero(dim, laurent);
        if c.norm() > 0.0 {
            p.terms.insert(exps, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_laurent(&self) -> bool {
        self.laurent
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate terms in canonical (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree (max over terms of the sum of exponents); for Laurent
    /// polynomials the sum of absolute exponents. Zero polynomial: 0.
    pub fn total_degree(&self) -> i32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x.abs()).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn insert_term(&mut self, exps: Vec<i32>, c: Complex64) {
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.norm() > 0.0 {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().norm() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64, PolyError> {
        if z.len() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (zi, &e) in z.iter().zip(exps.iter()) {
                if e == 0 {
                    continue;
                }
                if e < 0 && zi.norm() == 0.0 {
                    return Err(PolyError::ZeroCoordinate);
                }
                t *= zi.powi(e);
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        out.laurent = self.laurent || other.laurent;
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -*v;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Poly {
        let mut out = Poly::zero(self.dim, self.laurent);
        if c.norm() == 0.0 {
            return out;
        }
        for (e, v) in &self.terms {
            out.terms.insert(e.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_dim(other)?;
        let mut out = Poly::zero(self.dim, self.laurent || other.laurent);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.insert_term(e, ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn pow(&self, n: i32) -> Result<Poly, PolyError> {
        if n < 0 {
            // only a single term can be inverted
            if self.terms.len() != 1 {
                return Err(PolyError::NegativePower);
            }
            let (e, c) = self.terms.iter().next().unwrap();
            let exps: Vec<i32> = e.iter().map(|&x| x * n).collect();
            return Poly::monomial(self.dim, true, exps, c.powi(n));
        }
        let mut out = Poly::constant(self.dim, self.laurent, Complex64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn differentiate(&self, var: usize) -> Result<Poly, PolyError> {
        if var >= self.dim {
            return Err(PolyError::VarOutOfRange(var + 1, self.dim));
        }
        let mut out = Poly::zero(self.dim, self.laurent);
        for (e, c) in &self.terms {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] = k - 1;
            out.insert_term(e2, c * Complex64::new(k as f64, 0.0));
        }
        Ok(out)
    }

    /// Substitute `subs[i]` for variable `i`. Negative exponents require the
    /// substituted polynomial to be a single term.
    pub fn compose(&self, subs: &[Poly]) -> Result<Poly, PolyError> {
        if subs.len() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: subs.len() });
        }
        let out_dim = subs.first().map(|p| p.dim).unwrap_or(0);
        let laurent = subs.iter().any(|p| p.laurent) || self.laurent;
        let mut out = Poly::zero(out_dim, laurent);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(out_dim, laurent, *c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                t = t.mul(&subs[i].pow(k)?)?;
            }
            out = out.add(&t)?;
        }
        out.prune();
        Ok(out)
    }

    /// Drop terms below `PRUNE_REL` relative to the largest coefficient.
    pub fn prune(&mut self) {
        let m = self.max_coeff();
        if m == 0.0 {
            return;
        }
        self.terms.retain(|_, c| c.norm() >= PRUNE_REL * m);
    }

    fn check_dim(&self, other: &Poly) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    /// Exponent range as (min, max) over all terms and variables.
    pub fn exponent_range(&self) -> (i32, i32) {
        let mut lo = 0;
        let mut hi = 0;
        for e in self.terms.keys() {
            for &x in e {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        (lo, hi)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for (e, c) in &self.terms {
            let t = self.format_term(e, *c);
            if out.is_empty() {
                out.push_str(&t);
            } else if let Some(rest) = t.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&t);
            }
        }
        write!(f, "{}", out)
    }
}

impl Poly {
    fn format_term(&self, e: &[i32], c: Complex64) -> String {
        let vars: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, &x)| {
                let name = if self.dim == 1 { "z".to_string() } else { format!("z{}", i + 1) };
                if x == 1 {
                    name
                } else {
                    format!("{}^{}", name, x)
                }
            })
            .collect();
        if vars.is_empty() {
            return format_coeff(c);
        }
        let v = vars.join("*");
        if c == Complex64::new(1.0, 0.0) {
            v
        } else if c == Complex64::new(-1.0, 0.0) {
            format!("-{}", v)
        } else {
            format!("{}*{}", format_coeff(c), v)
        }
    }
}

fn format_coeff(c: Complex64) -> String {
    let (re, im) = (c.re, c.im);
    if im == 0.0 {
        format_real(re)
    } else if re == 0.0 {
        if im == 1.0 {
            "i".into()
        } else if im == -1.0 {
            "-i".into()
        } else {
            format!("{}i", format_real(im))
        }
    } else {
        let sign = if im < 0.0 { "-" } else { "+" };
        format!("({}{}{}i)", format_real(re), sign, format_real(im.abs()))
    }
}

fn format_real(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{}", x)
    }
}

/// Parse the polynomial grammar: variables `z1`..`z9` (`z` when dim = 1),
/// `+ - *` and `^`, parentheses, complex literals like `i`, `2i`, `(1+2i)`.
/// Implicit multiplication is rejected.
pub fn parse_poly(text: &str, dim: usize, laurent: bool) -> Result<Poly, PolyError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim, laurent };
    p.skip_ws();
    let e = p.parse_expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    let mut poly = e;
    poly.prune();
    Ok(poly)
}

pub fn format_poly(p: &Poly) -> String {
    p.to_string()
}

/// Parse a standalone complex literal such as `0.5`, `i`, `-2i`, `1+2i`,
/// `0.5-0.25i`. Used by domain descriptors.
pub fn parse_complex(text: &str) -> Result<Complex64, PolyError> {
    let p = parse_poly(text, 1, false)?;
    if p.total_degree() != 0 {
        return Err(PolyError::Syntax { pos: 0, msg: "expected a constant".into() });
    }
    p.eval(&[Complex64::new(0.0, 0.0)])
}

pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format_real(c.re)
    } else if c.re == 0.0 {
        format!("{}i", format_real(c.im))
    } else {
        let sign = if c.im < 0.0 { "-" } else { "+" };
        format!("{}{}{}i", format_real(c.re), sign, format_real(c.im.abs()))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    laurent: bool,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn parse_expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.add(&t)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.sub(&t)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.parse_factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let t = self.parse_factor()?;
                    acc = acc.mul(&t)?;
                }
                // implicit multiplication is not allowed: a variable, digit or
                // '(' directly following a factor is a syntax error
                Some(c) if c == b'z' || c == b'(' || c.is_ascii_digit() || c == b'i' => {
                    return Err(self.err("implicit multiplication is not allowed; use '*'"));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Poly, PolyError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let f = self.parse_factor()?;
            return Ok(f.neg());
        }
        let base = self.parse_atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let mut neg = false;
            if self.peek() == Some(b'-') {
                neg = true;
                self.pos += 1;
            }
            let start = self.pos;
            while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.err("expected an integer exponent after '^'"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let mut k: i32 = digits
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            if neg {
                if !self.laurent {
                    return Err(PolyError::NegativeExponent);
                }
                k = -k;
            }
            return base.pow(k);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Poly, PolyError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'z') => {
                self.pos += 1;
                let idx = if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    let d = (self.src[self.pos] - b'0') as usize;
                    self.pos += 1;
                    if d == 0 {
                        return Err(self.err("variables are z1..z9"));
                    }
                    d
                } else {
                    if self.dim != 1 {
                        return Err(self.err("bare 'z' is only valid when dim = 1"));
                    }
                    1
                };
                if idx > self.dim {
                    return Err(PolyError::VarOutOfRange(idx, self.dim));
                }
                Ok(Poly::var(self.dim, self.laurent, idx - 1))
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Poly::constant(self.dim, self.laurent, Complex64::new(0.0, 1.0)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self
                    .peek()
                    .map(|c| c.is_ascii_digit() || c == b'.')
                    .unwrap_or(false)
                {
                    self.pos += 1;
                }
                let num = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let x: f64 = num.parse().map_err(|_| self.err("malformed number"))?;
                if self.peek() == Some(b'i') {
                    self.pos += 1;
                    Ok(Poly::constant(self.dim, self.laurent, Complex64::new(0.0, x)))
                } else {
                    Ok(Poly::constant(self.dim, self.laurent, Complex64::new(x, 0.0)))
                }
            }
            _ => Err(self.err("expected a variable, number, or '('")),
        }
    }
}

/// A tuple of polynomials sharing one variable space; the map Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    dim_in: usize,
    components: Vec<Poly>,
}

impl PolyMap {
    pub fn new(components: Vec<Poly>) -> Result<Self, PolyError> {
        let dim_in = components
            .first()
            .map(|p| p.dim())
            .ok_or(PolyError::DimensionMismatch { expected: 1, got: 0 })?;
        for p in &components {
            if p.dim() != dim_in {
                return Err(PolyError::DimensionMismatch { expected: dim_in, got: p.dim() });
            }
        }
        Ok(PolyMap { dim_in, components })
    }

    pub fn parse(texts: &[&str], dim: usize, laurent: bool) -> Result<Self, PolyError> {
        let comps: Result<Vec<_>, _> =
            texts.iter().map(|t| parse_poly(t, dim, laurent)).collect();
        PolyMap::new(comps?)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn is_square(&self) -> bool {
        self.components.len() == self.dim_in
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>, PolyError> {
        self.components.iter().map(|p| p.eval(z)).collect()
    }

    /// Matrix of partial derivatives ∂φ_i/∂z_j as polynomials.
    pub fn jacobian(&self) -> Result<Vec<Vec<Poly>>, PolyError> {
        self.components
            .iter()
            .map(|p| (0..self.dim_in).map(|j| p.differentiate(j)).collect())
            .collect()
    }

    /// Symbolic determinant of the Jacobian; requires a square map.
    pub fn jacobian_det(&self) -> Result<Poly, PolyError> {
        if !self.is_square() {
            return Err(PolyError::NonSquareMap {
                components: self.components.len(),
                dim: self.dim_in,
            });
        }
        let jac = self.jacobian()?;
        det_poly(&jac, self.dim_in, self.components.iter().any(|p| p.is_laurent()))
    }

    /// Numeric Jacobian matrix at a point (row-major d x d or n x d).
    pub fn jacobian_at(&self, z: &[Complex64]) -> Result<Vec<Vec<Complex64>>, PolyError> {
        let jac = self.jacobian()?;
        jac.iter()
            .map(|row| row.iter().map(|p| p.eval(z)).collect())
            .collect()
    }

    pub fn max_total_degree(&self) -> i32 {
        self.components.iter().map(|p| p.total_degree()).max().unwrap_or(0)
    }
}

/// Determinant of a square polynomial matrix by cofactor expansion.
fn det_poly(m: &[Vec<Poly>], n: usize, laurent: bool) -> Result<Poly, PolyError> {
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let dim = m[0][0].dim();
    let mut acc = Poly::zero(dim, laurent);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let mut t = m[0][j].mul(&det_poly(&minor, n - 1, laurent)?)?;
        if j % 2 == 1 {
            t = t.neg();
        }
        acc = acc.add(&t)?;
    }
    acc.prune();
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn parse_single_term() {
        let p = parse_poly("z1*z2", 2, false).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.eval(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap(), c(6.0, 0.0));
    }

    #[test]
    fn parse_sum_of_squares() {
        let p = parse_poly("z1^2+z2^2", 2, false).unwrap();
        let terms: Vec<_> = p.terms().collect();
        assert_eq!(terms.len(), 2);
        assert_eq!(p.eval(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap().norm(), 0.0);
    }

    #[test]
    fn parse_zhukovski_laurent() {
        let p = parse_poly("0.5*z + 0.5*z^-1", 1, true).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.eval(&[c(1.0, 0.0)]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn negative_exponent_rejected_without_laurent() {
        assert!(matches!(
            parse_poly("z^-1", 1, false),
            Err(PolyError::NegativeExponent)
        ));
    }

    #[test]
    fn var_out_of_range() {
        assert!(matches!(
            parse_poly("z3", 2, false),
            Err(PolyError::VarOutOfRange(3, 2))
        ));
    }

    #[test]
    fn implicit_multiplication_rejected() {
        assert!(parse_poly("2z1", 2, false).is_err());
        assert!(parse_poly("z1 z2", 2, false).is_err());
        assert!(parse_poly("(1+2i)z1", 2, false).is_err());
    }

    #[test]
    fn complex_literals() {
        let p = parse_poly("(1+2i)*z1", 2, false).unwrap();
        assert_eq!(p.eval(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("0.5i").unwrap(), c(0.0, 0.5));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-0.25").unwrap(), c(-0.25, 0.0));
    }

    #[test]
    fn differentiate_monomial() {
        let p = parse_poly("z1^2*z2^4", 2, false).unwrap();
        let d = p.differentiate(0).unwrap();
        assert_eq!(d, parse_poly("2*z1*z2^4", 2, false).unwrap());
    }

    #[test]
    fn compose_squares() {
        let p = parse_poly("z1+z2", 2, false).unwrap();
        let s1 = parse_poly("z1^2", 2, false).unwrap();
        let s2 = parse_poly("z2^2", 2, false).unwrap();
        assert_eq!(
            p.compose(&[s1, s2]).unwrap(),
            parse_poly("z1^2+z2^2", 2, false).unwrap()
        );
    }

    #[test]
    fn jacobian_det_identity() {
        let m = PolyMap::parse(&["z1", "z2"], 2, false).unwrap();
        let j = m.jacobian_det().unwrap();
        assert_eq!(j, Poly::constant(2, false, c(1.0, 0.0)));
    }

    #[test]
    fn jacobian_det_nonabel_map() {
        // oracle: by-hand cofactor expansion of the 2x2 derivative matrix
        let m = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let j = m.jacobian_det().unwrap();
        let expect = parse_poly("4*z1^3*z2 - 4*z1*z2^3", 2, false).unwrap();
        assert_eq!(j, expect);
    }

    #[test]
    fn jacobian_det_vieta() {
        let m = PolyMap::parse(&["z1+z2", "z1*z2"], 2, false).unwrap();
        let j = m.jacobian_det().unwrap();
        assert_eq!(j, parse_poly("z1 - z2", 2, false).unwrap());
    }

    #[test]
    fn format_round_trip() {
        for s in [
            "z1*z2",
            "z1^2+z2^2",
            "4*z1^3*z2 - 4*z1*z2^3",
            "(1+2i)*z1 - i*z2",
            "2i*z1^3",
        ] {
            let p = parse_poly(s, 2, false).unwrap();
            let q = parse_poly(&format_poly(&p), 2, false).unwrap();
            assert_eq!(p, q, "round trip for {s}");
        }
        let p = parse_poly("0.5*z + 0.5*z^-1", 1, true).unwrap();
        let q = parse_poly(&format_poly(&p), 1, true).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn eval_zero_coordinate_with_negative_exponent() {
        let p = parse_poly("z^-1", 1, true).unwrap();
        assert!(matches!(
            p.eval(&[c(0.0, 0.0)]),
            Err(PolyError::ZeroCoordinate)
        ));
    }

    #[test]
    fn laurent_power_of_monomial() {
        let p = parse_poly("z1*z2^2", 2, true).unwrap();
        let q = p.pow(-1).unwrap();
        let z = [c(0.5, 0.25), c(-1.25, 0.5)];
        let prod = p.eval(&z).unwrap() * q.eval(&z).unwrap();
        assert!((prod - c(1.0, 0.0)).norm() < 1e-12);
    }
}
