//! Polynomials over ℚ in `m` variables and polynomial vector fields on ℝᵐ.
//!
//! Axes are 0-based in the API (`x1` in the text syntax is axis 0).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Zero};
use rand::Rng;

use crate::exactlinalg::{rat, Rational};
use crate::Error;

/// Exponent vector of a monomial; also used for symmetric derivative multi-indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(m: usize) -> Self {
        Monomial(vec![0; m])
    }

    pub fn unit(m: usize, axis: usize) -> Self {
        let mut e = vec![0; m];
        e[axis] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    pub fn with_axis_shifted(&self, axis: usize, delta: i32) -> Option<Monomial> {
        let mut e = self.0.clone();
        let v = e[axis] as i64 + delta as i64;
        if v < 0 {
            return None;
        }
        e[axis] = v as u32;
        Some(Monomial(e))
    }

    /// All exponent vectors in `m` variables of total degree exactly `d`, in lexicographic order.
    pub fn all_of_degree(m: usize, d: u32) -> Vec<Monomial> {
        fn rec(m: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            if prefix.len() == m - 1 {
                prefix.push(d);
                out.push(Monomial(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=d).rev() {
                prefix.push(a);
                rec(m, d - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if m == 0 {
            if d == 0 {
                out.push(Monomial(Vec::new()));
            }
            return out;
        }
        rec(m, d, &mut Vec::new(), &mut out);
        out
    }

    /// Every `γ ≤ self` componentwise.
    pub fn divisors(&self) -> Vec<Monomial> {
        let mut out = vec![Vec::new()];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|p: Vec<u32>| {
                    (0..=a).map(move |b| {
                        let mut q = p.clone();
                        q.push(b);
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(Monomial).collect()
    }

    /// Product of binomial coefficients `C(self_l, other_l)`.
    pub fn binomial(&self, other: &Monomial) -> Rational {
        let mut acc = 1i64;
        for (&n, &k) in self.0.iter().zip(&other.0) {
            acc *= binom(n, k);
        }
        rat(acc)
    }
}

fn binom(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Polynomial with rational coefficients. Stored coefficients are nonzero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(m: usize) -> Self {
        Poly {
            nvars: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(m: usize) -> Self {
        Self::constant(m, Rational::one())
    }

    pub fn constant(m: usize, c: Rational) -> Self {
        Self::term(Monomial::one(m), c)
    }

    pub fn term(mono: Monomial, c: Rational) -> Self {
        let mut p = Poly::zero(mono.nvars());
        if !c.is_zero() {
            p.terms.insert(mono, c);
        }
        p
    }

    /// The coordinate function `x^{axis+1}`.
    pub fn var(m: usize, axis: usize) -> Self {
        Self::term(Monomial::unit(m, axis), Rational::one())
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(m: usize, terms: I) -> Self {
        let mut p = Poly::zero(m);
        for (mono, c) in terms {
            assert_eq!(mono.nvars(), m, "monomial arity");
            p.add_term(mono, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one(self.nvars))
    }

    pub fn add_term(&mut self, mono: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, mono: &Monomial, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(mono), v * c)).collect(),
        }
    }

    /// Formal partial derivative along `axis` (0-based).
    pub fn partial(&self, axis: usize) -> Result<Poly, Error> {
        if axis >= self.nvars {
            return Err(Error::AxisOutOfRange {
                axis,
                nvars: self.nvars,
            });
        }
        Ok(self.derivative(axis))
    }

    /// As [`Poly::partial`] but panics on a bad axis; for internal use where the axis is
    /// produced by iterating `0..m`.
    pub(crate) fn derivative(&self, axis: usize) -> Poly {
        assert!(axis < self.nvars, "axis {axis} out of range");
        let mut out = Poly::zero(self.nvars);
        for (mono, c) in &self.terms {
            let e = mono.0[axis];
            if e > 0 {
                let mut m2 = mono.clone();
                m2.0[axis] -= 1;
                out.terms.insert(m2, c * rat(e as i64));
            }
        }
        out
    }

    /// `∂^γ self` for an exponent vector `γ`.
    pub fn derivative_multi(&self, gamma: &Monomial) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (mono, c) in &self.terms {
            if let Some(rest) = mono.div(gamma) {
                let mut factor = 1i64;
                for (&a, &g) in mono.0.iter().zip(&gamma.0) {
                    for t in 0..g {
                        factor *= (a - t) as i64;
                    }
                }
                out.terms.insert(rest, c * rat(factor));
            }
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Rational::zero();
        for (mono, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&mono.0) {
                for _ in 0..e {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    /// Random polynomial of total degree at most `max_deg` with small integer coefficients.
    pub fn random<R: Rng + ?Sized>(m: usize, max_deg: u32, rng: &mut R) -> Poly {
        let nterms = rng.gen_range(1..=4);
        let mut p = Poly::zero(m);
        for _ in 0..nterms {
            let d = rng.gen_range(0..=max_deg);
            let choices = Monomial::all_of_degree(m, d);
            let mono = choices[rng.gen_range(0..choices.len())].clone();
            let mut c = rng.gen_range(-3i64..=3);
            if c == 0 {
                c = 1;
            }
            p.add_term(mono, rat(c));
        }
        p
    }

    /// Parses the text syntax `c * x1^a1 ... xm^am + ...`.
    pub fn parse(m: usize, s: &str) -> Result<Poly, Error> {
        let mut parser = TextParser::new(s, m);
        let p = parser.poly()?;
        parser.skip_ws();
        if !parser.at_end() {
            return Err(parser.error("trailing input"));
        }
        Ok(p)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn fmt_monomial(mono: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in mono.0.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("x{}", i + 1)),
            _ => parts.push(format!("x{}^{}", i + 1, e)),
        }
    }
    parts.join(" ")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest degree first reads more naturally.
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(b.0.cmp(a.0)));
        for (i, (mono, c)) in terms.into_iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let m = fmt_monomial(mono);
            if m.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} * {m}")?;
            }
        }
        Ok(())
    }
}

macro_rules! poly_binop {
    ($trait:ident, $method:ident, $assign:ident, $op:tt) => {
        impl $trait<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                let mut out = self.clone();
                out $op rhs;
                out
            }
        }
        impl $trait<Poly> for Poly {
            type Output = Poly;
            fn $method(mut self, rhs: Poly) -> Poly {
                self $op &rhs;
                self
            }
        }
    };
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        for (mono, c) in &rhs.terms {
            self.add_term(mono.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        for (mono, c) in &rhs.terms {
            self.add_term(mono.clone(), -c.clone());
        }
    }
}

poly_binop!(Add, add, add_assign, +=);
poly_binop!(Sub, sub, sub_assign, -=);

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v.clone())).collect(),
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul<Poly> for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

/// Polynomial vector field `X = X^i ∂_i`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VectorField {
    components: Vec<Poly>,
}

impl VectorField {
    pub fn new(components: Vec<Poly>) -> Result<Self, Error> {
        let m = components.len();
        if let Some(bad) = components.iter().find(|p| p.nvars() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.nvars(),
            });
        }
        Ok(VectorField { components })
    }

    pub fn zero(m: usize) -> Self {
        VectorField {
            components: vec![Poly::zero(m); m],
        }
    }

    /// The constant field `∂_axis`.
    pub fn coordinate(m: usize, axis: usize) -> Self {
        let mut v = Self::zero(m);
        v.components[axis] = Poly::one(m);
        v
    }

    /// The Euler field `x^i ∂_i`.
    pub fn euler(m: usize) -> Self {
        VectorField {
            components: (0..m).map(|i| Poly::var(m, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Poly {
        &self.components[i]
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        VectorField {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn mul_poly(&self, f: &Poly) -> Self {
        VectorField {
            components: self.components.iter().map(|p| p * f).collect(),
        }
    }

    /// Directional derivative `X·f = X^i ∂_i f`.
    pub fn apply(&self, f: &Poly) -> Poly {
        assert_eq!(f.nvars(), self.dim(), "field/function dimension mismatch");
        let mut out = Poly::zero(self.dim());
        for (i, xi) in self.components.iter().enumerate() {
            if !xi.is_zero() {
                out += &(xi * &f.derivative(i));
            }
        }
        out
    }

    /// `[X, Y]^i = X·Y^i − Y·X^i`.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, Error> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(VectorField {
            components: (0..self.dim())
                .map(|i| self.apply(&other.components[i]) - other.apply(&self.components[i]))
                .collect(),
        })
    }

    /// Jacobian matrix, entry `(i, j) = ∂_j X^i`.
    pub fn jacobian(&self) -> PolyMatrix {
        let m = self.dim();
        PolyMatrix {
            entries: (0..m)
                .map(|i| (0..m).map(|j| self.components[i].derivative(j)).collect())
                .collect(),
        }
    }

    /// `tr(DX)`, the divergence.
    pub fn trace_div(&self) -> Poly {
        let mut out = Poly::zero(self.dim());
        for (i, xi) in self.components.iter().enumerate() {
            out += &xi.derivative(i);
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(m: usize, max_deg: u32, rng: &mut R) -> Self {
        VectorField {
            components: (0..m)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        Poly::zero(m)
                    } else {
                        Poly::random(m, max_deg, rng)
                    }
                })
                .collect(),
        }
    }

    /// Parses `P1 d1 + ... + Pm dm`; multi-term coefficients go in parentheses.
    pub fn parse(m: usize, s: &str) -> Result<VectorField, Error> {
        let mut parser = TextParser::new(s, m);
        let comps = parser.graded_sum(1, 'd')?;
        parser.skip_ws();
        if !parser.at_end() {
            return Err(parser.error("trailing input"));
        }
        let mut out = VectorField::zero(m);
        for (idx, p) in comps {
            out.components[idx[0]] += &p;
        }
        Ok(out)
    }
}

impl Add<&VectorField> for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&VectorField> for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| format!("{} d{}", wrap_coeff(p), i + 1))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub(crate) fn wrap_coeff(p: &Poly) -> String {
    if p.num_terms() == 1 {
        format!("{p}")
    } else {
        format!("({p})")
    }
}

/// Square matrix of polynomials, used for Jacobians.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyMatrix {
    entries: Vec<Vec<Poly>>,
}

impl PolyMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn trace(&self) -> Poly {
        let m = self.dim();
        let mut out = Poly::zero(m);
        for i in 0..m {
            out += &self.entries[i][i];
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Poly::is_zero)
    }

    /// Constant matrix as polynomials in `m` variables.
    pub fn from_constants(m: usize, a: &[Vec<Rational>]) -> Self {
        PolyMatrix {
            entries: a
                .iter()
                .map(|row| row.iter().map(|c| Poly::constant(m, c.clone())).collect())
                .collect(),
        }
    }
}

/// Shared recursive-descent reader for the polynomial, field, form and multivector
/// text syntaxes.
pub(crate) struct TextParser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
}

impl<'a> TextParser<'a> {
    pub(crate) fn new(s: &'a str, m: usize) -> Self {
        TextParser {
            src: s.as_bytes(),
            pos: 0,
            m,
        }
    }

    pub(crate) fn error(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at byte {} of {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<u64> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    /// Optional leading `+`/`-` signs; returns true when the net sign is negative.
    fn signs(&mut self) -> bool {
        let mut neg = false;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => self.pos += 1,
                Some(b'-') => {
                    neg = !neg;
                    self.pos += 1
                }
                _ => return neg,
            }
        }
    }

    /// A single term: optional rational coefficient, optional `*`, then `xI^a` factors.
    fn term(&mut self) -> Result<Poly, Error> {
        let neg = self.signs();
        self.skip_ws();
        let mut coeff = Rational::one();
        let mut saw_any = false;
        if let Some(n) = self.number() {
            saw_any = true;
            coeff = rat(n as i64);
            self.skip_ws();
            if self.peek() == Some(b'/') {
                self.pos += 1;
                self.skip_ws();
                let d = self.number().ok_or_else(|| self.error("expected denominator"))?;
                if d == 0 {
                    return Err(self.error("zero denominator"));
                }
                coeff /= rat(d as i64);
            }
        }
        let mut mono = Monomial::one(self.m);
        loop {
            self.skip_ws();
            let save = self.pos;
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.skip_ws();
            }
            if self.peek() == Some(b'x') {
                self.pos += 1;
                let idx = self.number().ok_or_else(|| self.error("expected variable index"))? as usize;
                if idx == 0 || idx > self.m {
                    return Err(self.error("variable index out of range"));
                }
                let mut e = 1u32;
                self.skip_ws();
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    e = self.number().ok_or_else(|| self.error("expected exponent"))? as u32;
                }
                mono.0[idx - 1] += e;
                saw_any = true;
            } else {
                self.pos = save;
                break;
            }
        }
        if !saw_any {
            return Err(self.error("expected a term"));
        }
        if neg {
            coeff = -coeff;
        }
        Ok(Poly::term(mono, coeff))
    }

    /// A `+`-joined sum of terms. A `-` between terms is accepted as well.
    pub(crate) fn poly(&mut self) -> Result<Poly, Error> {
        let mut p = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') | Some(b'-') => {
                    let t = self.term()?;
                    p += &t;
                }
                _ => return Ok(p),
            }
        }
    }

    /// A coefficient: a parenthesised polynomial or a single term, with optional sign.
    fn coefficient(&mut self) -> Result<Poly, Error> {
        let save = self.pos;
        let neg = self.signs();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let p = self.poly()?;
            self.skip_ws();
            if self.peek() != Some(b')') {
                return Err(self.error("expected ')'"));
            }
            self.pos += 1;
            Ok(if neg { -p } else { p })
        } else {
            self.pos = save;
            self.term()
        }
    }

    /// Basis element `d1^d2^...` (letter given by `lead`, `dx` prefix handled by callers
    /// through `lead_prefix`).
    fn basis_word(&mut self, lead: &str) -> Result<Vec<usize>, Error> {
        let mut idx = Vec::new();
        loop {
            self.skip_ws();
            if !self.src[self.pos..].starts_with(lead.as_bytes()) {
                return Err(self.error(&format!("expected '{lead}'")));
            }
            self.pos += lead.len();
            let i = self.number().ok_or_else(|| self.error("expected basis index"))? as usize;
            if i == 0 || i > self.m {
                return Err(self.error("basis index out of range"));
            }
            idx.push(i - 1);
            self.skip_ws();
            if self.peek() == Some(b'^') {
                self.pos += 1;
            } else {
                return Ok(idx);
            }
        }
    }

    /// Sum of `coefficient [*] basis_word` items, or the literal `0`.
    pub(crate) fn graded_sum_word(&mut self, lead: &str) -> Result<Vec<(Vec<usize>, Poly)>, Error> {
        let mut out = Vec::new();
        self.skip_ws();
        if &self.src[self.pos..] == b"0" {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            let c = self.coefficient()?;
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            }
            let w = self.basis_word(lead)?;
            out.push((w, c));
            self.skip_ws();
            if !matches!(self.peek(), Some(b'+') | Some(b'-')) {
                return Ok(out);
            }
        }
    }

    pub(crate) fn graded_sum(&mut self, degree: usize, lead: char) -> Result<Vec<(Vec<usize>, Poly)>, Error> {
        let items = self.graded_sum_word(&lead.to_string())?;
        for (w, _) in &items {
            if w.len() != degree {
                return Err(self.error("wrong number of basis factors"));
            }
        }
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Poly {
        Poly::parse(2, s).unwrap()
    }

    fn vf(s: &str) -> VectorField {
        VectorField::parse(2, s).unwrap()
    }

    #[test]
    fn partial_examples() {
        assert!(p("5").partial(0).unwrap().is_zero());
        assert_eq!(p("x1 x2").partial(0).unwrap(), p("x2"));
        assert_eq!(p("x2^3").partial(1).unwrap(), p("3 * x2^2"));
    }

    #[test]
    fn partial_out_of_range() {
        assert!(matches!(
            p("x1").partial(2),
            Err(Error::AxisOutOfRange { axis: 2, nvars: 2 })
        ));
    }

    #[test]
    fn bracket_examples() {
        let d1 = VectorField::coordinate(2, 0);
        let d2 = VectorField::coordinate(2, 1);
        assert!(d1.bracket(&d2).unwrap().is_zero());
        assert_eq!(
            vf("x1 d2").bracket(&vf("x2 d1")).unwrap(),
            vf("x1 d1 + -1 * x2 d2")
        );
        let e = VectorField::euler(2);
        assert_eq!(e.bracket(&d1.scale(&rat(-1))).unwrap(), d1);
    }

    #[test]
    fn jacobian_examples() {
        assert!(VectorField::coordinate(2, 0).jacobian().is_zero());
        // X = -A^i_j x^j ∂_i with A = [[1,2],[3,4]]
        let x = vf("(-1 * x1 + -2 * x2) d1 + (-3 * x1 + -4 * x2) d2");
        let a = [[1, 2], [3, 4]];
        let j = x.jacobian();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(j.get(i, k), &Poly::constant(2, rat(-a[i][k])));
            }
        }
        // α* for α = e¹: x1 (x1 ∂1 + x2 ∂2)
        let alpha = vf("x1^2 d1 + x1 x2 d2");
        let j = alpha.jacobian();
        assert_eq!(j.get(0, 0), &p("2 * x1"));
        assert_eq!(j.get(0, 1), &p("0 * x1"));
        assert_eq!(j.get(1, 0), &p("x2"));
        assert_eq!(j.get(1, 1), &p("x1"));
        assert_eq!(j.trace(), p("3 * x1"));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(VectorField::euler(2).trace_div(), Poly::constant(2, rat(2)));
        assert_eq!(vf("x1^2 d1 + x1 x2 d2").trace_div(), p("3 * x1"));
        assert!(vf("x2 d1").trace_div().is_zero());
        assert_eq!(vf("x1^2 d1").trace_div(), p("2 * x1"));
    }

    #[test]
    fn text_round_trip() {
        let q = p("3 * x1^2 x2 + -1/2 + x2");
        assert_eq!(Poly::parse(2, &q.to_string()).unwrap(), q);
        let x = vf("(x1 + 2 * x2^2) d1 + -3 * x1 d2");
        assert_eq!(VectorField::parse(2, &x.to_string()).unwrap(), x);
        assert!(Poly::parse(2, "x3").is_err());
        assert!(Poly::parse(2, "1/0").is_err());
    }

    #[test]
    fn random_fields_satisfy_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = VectorField::random(3, 3, &mut rng);
            let y = VectorField::random(3, 3, &mut rng);
            let z = VectorField::random(3, 3, &mut rng);
            let a = x.bracket(&y).unwrap().bracket(&z).unwrap();
            let b = y.bracket(&z).unwrap().bracket(&x).unwrap();
            let c = z.bracket(&x).unwrap().bracket(&y).unwrap();
            assert!((&(&a + &b) + &c).is_zero());
        }
    }

    #[test]
    fn divergence_is_a_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = VectorField::random(2, 3, &mut rng);
            let y = VectorField::random(2, 3, &mut rng);
            let lhs = x.bracket(&y).unwrap().trace_div();
            let rhs = x.apply(&y.trace_div()) - y.apply(&x.trace_div());
            assert_eq!(lhs, rhs);
        }
        let x = vf("x1 x2 d1");
        let y = vf("x2^2 d2");
        let lhs = x.bracket(&y).unwrap().trace_div();
        assert_eq!(lhs, x.apply(&y.trace_div()) - y.apply(&x.trace_div()));
    }

    #[test]
    fn monomial_helpers() {
        assert_eq!(Monomial::all_of_degree(3, 2).len(), 6);
        assert_eq!(Monomial(vec![2, 1]).divisors().len(), 6);
        assert_eq!(Monomial(vec![3, 2]).binomial(&Monomial(vec![1, 1])), rat(6));
    }
}
