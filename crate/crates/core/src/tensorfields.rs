//! Skew contravariant tensor fields `Λ^p` and differential forms `Ω_p` with polynomial
//! coefficients on ℝᵐ.
//!
//! Basis elements are strictly increasing tuples of 0-based axes. `gl(m)` acts on the
//! contravariant fibre `Λ^p ℝᵐ` as a derivation extending `A e_j = A^i_j e_i`, and on the
//! covariant fibre `Λ^p ℝᵐ*` by the dual derivation `dx^i ↦ −A^i_j dx^j`. Both Lie
//! derivatives are `L_X f = X·f − ρ(DX) f`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;

use crate::exactlinalg::{rat, Rational};
use crate::polyfields::{wrap_coeff, Poly, TextParser, VectorField};
use crate::Error;

/// Strictly increasing `p`-tuples of `0..m`, lexicographic.
pub fn skew_tuples(m: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < left {
                break;
            }
            cur.push(i);
            rec(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= m {
        rec(0, m, p, &mut Vec::new(), &mut out);
    }
    out
}

/// Sorts `idx` and returns the permutation sign, or `None` on a repeated entry.
pub fn sort_with_sign(mut idx: Vec<usize>) -> Option<(Vec<usize>, i64)> {
    let mut sign = 1;
    // insertion sort, counting transpositions
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((idx, sign))
    }
}

/// `ρ(E^i_j)` on a contravariant basis tuple.
pub fn act_tangent(i: usize, j: usize, tuple: &[usize]) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    for (s, &t) in tuple.iter().enumerate() {
        if t == j {
            let mut nt = tuple.to_vec();
            nt[s] = i;
            if let Some((sorted, sign)) = sort_with_sign(nt) {
                out.push((sorted, sign));
            }
        }
    }
    out
}

/// `ρ*(E^i_j)` on a covariant basis tuple.
pub fn act_cotangent(i: usize, j: usize, tuple: &[usize]) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    for (s, &t) in tuple.iter().enumerate() {
        if t == i {
            let mut nt = tuple.to_vec();
            nt[s] = j;
            if let Some((sorted, sign)) = sort_with_sign(nt) {
                out.push((sorted, -sign));
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Variance {
    /// `Λ^p ℝᵐ`, multivectors.
    Contravariant,
    /// `Λ^p ℝᵐ*`, forms.
    Covariant,
}

/// A fibre `Λ^p ℝᵐ` or `Λ^p ℝᵐ*` with its basis and the `gl(m)` action matrices.
#[derive(Clone, Debug)]
pub struct Fiber {
    m: usize,
    p: usize,
    variance: Variance,
    tuples: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// `action[i*m + j]` lists `(row, col, value)` of `ρ(E^i_j)`.
    action: Vec<Vec<(usize, usize, Rational)>>,
}

impl Fiber {
    pub fn new(m: usize, p: usize, variance: Variance) -> Self {
        let tuples = skew_tuples(m, p);
        let index: HashMap<_, _> = tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut action = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut entries = Vec::new();
                for (col, t) in tuples.iter().enumerate() {
                    let images = match variance {
                        Variance::Contravariant => act_tangent(i, j, t),
                        Variance::Covariant => act_cotangent(i, j, t),
                    };
                    for (nt, sign) in images {
                        entries.push((index[&nt], col, rat(sign)));
                    }
                }
                action.push(entries);
            }
        }
        Fiber {
            m,
            p,
            variance,
            tuples,
            index,
            action,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuple(&self, idx: usize) -> &[usize] {
        &self.tuples[idx]
    }

    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    /// Nonzero entries `(row, col, value)` of `ρ(E^i_j)`.
    pub fn action(&self, i: usize, j: usize) -> &[(usize, usize, Rational)] {
        &self.action[i * self.m + j]
    }

    /// The scalar by which the identity matrix acts: `p` or `−p`.
    pub fn identity_scalar(&self) -> i64 {
        match self.variance {
            Variance::Contravariant => self.p as i64,
            Variance::Covariant => -(self.p as i64),
        }
    }
}

/// Constant covector `α = α_i dx^i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Covector(pub Vec<Rational>);

impl Covector {
    /// The dual basis covector `e^{axis+1}`.
    pub fn basis(m: usize, axis: usize) -> Self {
        let mut v = vec![Rational::zero(); m];
        v[axis] = Rational::one();
        Covector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_form(&self) -> PolyForm {
        let m = self.dim();
        let mut out = PolyForm::zero(m, 1);
        for (i, c) in self.0.iter().enumerate() {
            out.add_component(vec![i], Poly::constant(m, c.clone()));
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Skew {
    m: usize,
    p: usize,
    comps: BTreeMap<Vec<usize>, Poly>,
}

impl Skew {
    fn zero(m: usize, p: usize) -> Self {
        Skew {
            m,
            p,
            comps: BTreeMap::new(),
        }
    }

    fn add_component(&mut self, tuple: Vec<usize>, f: Poly) {
        if f.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.comps.entry(tuple) {
            Entry::Vacant(e) => {
                e.insert(f);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += &f;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Adds `sign · f` at an arbitrary (unsorted) index list.
    fn add_unsorted(&mut self, idx: Vec<usize>, f: &Poly) {
        if let Some((t, s)) = sort_with_sign(idx) {
            self.add_component(t, f.scale(&rat(s)));
        }
    }

    fn combine(&self, other: &Skew, sign: i64) -> Skew {
        assert_eq!((self.m, self.p), (other.m, other.p), "degree mismatch");
        let mut out = self.clone();
        for (t, f) in &other.comps {
            out.add_component(t.clone(), f.scale(&rat(sign)));
        }
        out
    }

    fn scale(&self, c: &Rational) -> Skew {
        let mut out = Skew::zero(self.m, self.p);
        for (t, f) in &self.comps {
            out.add_component(t.clone(), f.scale(c));
        }
        out
    }

    fn mul_poly(&self, g: &Poly) -> Skew {
        let mut out = Skew::zero(self.m, self.p);
        for (t, f) in &self.comps {
            out.add_component(t.clone(), f * g);
        }
        out
    }

    fn map_coeffs(&self, op: impl Fn(&Poly) -> Poly) -> Skew {
        let mut out = Skew::zero(self.m, self.p);
        for (t, f) in &self.comps {
            out.add_component(t.clone(), op(f));
        }
        out
    }

    fn lie_derivative(&self, x: &VectorField, variance: Variance) -> Result<Skew, Error> {
        if x.dim() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: x.dim(),
            });
        }
        let dx = x.jacobian();
        let mut out = Skew::zero(self.m, self.p);
        for (t, f) in &self.comps {
            out.add_component(t.clone(), x.apply(f));
            for i in 0..self.m {
                for j in 0..self.m {
                    let a = dx.get(i, j);
                    if a.is_zero() {
                        continue;
                    }
                    let images = match variance {
                        Variance::Contravariant => act_tangent(i, j, t),
                        Variance::Covariant => act_cotangent(i, j, t),
                    };
                    if images.is_empty() {
                        continue;
                    }
                    let af = a * f;
                    for (nt, sign) in images {
                        out.add_component(nt, af.scale(&rat(-sign)));
                    }
                }
            }
        }
        Ok(out)
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, lead: &str) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        if self.p == 0 {
            return write!(f, "{}", self.comps.values().next().unwrap());
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(t, c)| {
                let word: Vec<String> = t.iter().map(|i| format!("{lead}{}", i + 1)).collect();
                format!("{} * {}", wrap_coeff(c), word.join("^"))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }

    fn parse(m: usize, p: usize, s: &str, lead: &str) -> Result<Skew, Error> {
        let mut out = Skew::zero(m, p);
        let mut parser = TextParser::new(s, m);
        if p == 0 {
            let f = parser.poly()?;
            parser.skip_ws();
            if !parser.at_end() {
                return Err(parser.error("trailing input"));
            }
            out.add_component(Vec::new(), f);
            return Ok(out);
        }
        let items = parser.graded_sum_word(lead)?;
        parser.skip_ws();
        if !parser.at_end() {
            return Err(parser.error("trailing input"));
        }
        for (w, c) in items {
            if w.len() != p {
                return Err(Error::Parse(format!("expected degree {p}, got {}", w.len())));
            }
            out.add_unsorted(w, &c);
        }
        Ok(out)
    }

    fn random<R: Rng + ?Sized>(m: usize, p: usize, max_deg: u32, rng: &mut R) -> Skew {
        let mut out = Skew::zero(m, p);
        for t in skew_tuples(m, p) {
            if rng.gen_bool(0.7) {
                out.add_component(t, Poly::random(m, max_deg, rng));
            }
        }
        out
    }
}

macro_rules! skew_wrapper {
    ($name:ident, $variance:expr, $lead:expr) => {
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name(Skew);

        impl $name {
            pub fn zero(m: usize, p: usize) -> Self {
                $name(Skew::zero(m, p))
            }

            /// The basis element indexed by `tuple` (any order; sign is applied).
            pub fn basis(m: usize, tuple: &[usize]) -> Self {
                let mut s = Skew::zero(m, tuple.len());
                s.add_unsorted(tuple.to_vec(), &Poly::one(m));
                $name(s)
            }

            pub fn from_components<I>(m: usize, p: usize, comps: I) -> Result<Self, Error>
            where
                I: IntoIterator<Item = (Vec<usize>, Poly)>,
            {
                if p > m {
                    return Err(Error::DegreeOverflow { degree: p, m });
                }
                let mut s = Skew::zero(m, p);
                for (t, f) in comps {
                    if t.len() != p || t.iter().any(|&i| i >= m) {
                        return Err(Error::DimensionMismatch {
                            expected: p,
                            got: t.len(),
                        });
                    }
                    if f.nvars() != m {
                        return Err(Error::DimensionMismatch {
                            expected: m,
                            got: f.nvars(),
                        });
                    }
                    s.add_unsorted(t, &f);
                }
                Ok($name(s))
            }

            pub fn m(&self) -> usize {
                self.0.m
            }

            pub fn degree(&self) -> usize {
                self.0.p
            }

            pub fn is_zero(&self) -> bool {
                self.0.comps.is_empty()
            }

            pub fn component(&self, tuple: &[usize]) -> Poly {
                self.0
                    .comps
                    .get(tuple)
                    .cloned()
                    .unwrap_or_else(|| Poly::zero(self.0.m))
            }

            pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
                self.0.comps.iter()
            }

            pub fn add_component(&mut self, tuple: Vec<usize>, f: Poly) {
                self.0.add_unsorted(tuple, &f);
            }

            pub fn add(&self, other: &Self) -> Self {
                $name(self.0.combine(&other.0, 1))
            }

            pub fn sub(&self, other: &Self) -> Self {
                $name(self.0.combine(&other.0, -1))
            }

            pub fn scale(&self, c: &Rational) -> Self {
                $name(self.0.scale(c))
            }

            pub fn mul_poly(&self, g: &Poly) -> Self {
                $name(self.0.mul_poly(g))
            }

            /// Applies `op` to every coefficient (e.g. a partial derivative).
            pub fn map_coeffs(&self, op: impl Fn(&Poly) -> Poly) -> Self {
                $name(self.0.map_coeffs(op))
            }

            pub fn lie_derivative(&self, x: &VectorField) -> Result<Self, Error> {
                Ok($name(self.0.lie_derivative(x, $variance)?))
            }

            pub fn random<R: Rng + ?Sized>(m: usize, p: usize, max_deg: u32, rng: &mut R) -> Self {
                $name(Skew::random(m, p, max_deg, rng))
            }

            pub fn parse(m: usize, p: usize, s: &str) -> Result<Self, Error> {
                Ok($name(Skew::parse(m, p, s, $lead)?))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(f, $lead)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}[{}]({})", stringify!($name), self.0.p, self)
            }
        }
    };
}

skew_wrapper!(PolyMultiVector, Variance::Contravariant, "d");
skew_wrapper!(PolyForm, Variance::Covariant, "dx");

/// Lie derivative of a multivector field.
pub fn lie_derivative_mv(x: &VectorField, t: &PolyMultiVector) -> Result<PolyMultiVector, Error> {
    t.lie_derivative(x)
}

/// Lie derivative of a differential form.
pub fn lie_derivative_form(x: &VectorField, w: &PolyForm) -> Result<PolyForm, Error> {
    w.lie_derivative(x)
}

/// Contraction `ι_α T` with the first-slot convention
/// `ι_α(∂_{i₁}∧…∧∂_{i_p}) = Σ_s (−1)^{s−1} α_{i_s} ∂_{i₁}∧…(omit s)…∧∂_{i_p}`.
pub fn interior_product(alpha: &PolyForm, t: &PolyMultiVector) -> Result<PolyMultiVector, Error> {
    if alpha.degree() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: alpha.degree(),
        });
    }
    if t.degree() == 0 {
        return Err(Error::ZeroDegree);
    }
    if alpha.m() != t.m() {
        return Err(Error::DimensionMismatch {
            expected: t.m(),
            got: alpha.m(),
        });
    }
    let m = t.m();
    let mut out = Skew::zero(m, t.degree() - 1);
    for (tuple, f) in t.components() {
        for (s, &axis) in tuple.iter().enumerate() {
            let a = alpha.component(&[axis]);
            if a.is_zero() {
                continue;
            }
            let mut rest = tuple.clone();
            rest.remove(s);
            let sign = if s % 2 == 0 { 1 } else { -1 };
            out.add_component(rest, (&a * f).scale(&rat(sign)));
        }
    }
    Ok(PolyMultiVector(out))
}

/// `ι_α T` for a constant covector.
pub fn interior_covector(alpha: &Covector, t: &PolyMultiVector) -> Result<PolyMultiVector, Error> {
    interior_product(&alpha.to_form(), t)
}

/// `dω = Σ_i dx^i ∧ ∂_i ω`.
pub fn exterior_derivative(w: &PolyForm) -> PolyForm {
    let m = w.m();
    let mut out = Skew::zero(m, w.degree() + 1);
    if w.degree() >= m {
        return PolyForm(out);
    }
    for (tuple, f) in w.components() {
        for i in 0..m {
            if tuple.contains(&i) {
                continue;
            }
            let df = f.derivative(i);
            if df.is_zero() {
                continue;
            }
            let mut idx = vec![i];
            idx.extend_from_slice(tuple);
            out.add_unsorted(idx, &df);
        }
    }
    PolyForm(out)
}

pub fn wedge(a: &PolyForm, w: &PolyForm) -> Result<PolyForm, Error> {
    if a.m() != w.m() {
        return Err(Error::DimensionMismatch {
            expected: a.m(),
            got: w.m(),
        });
    }
    let m = a.m();
    let degree = a.degree() + w.degree();
    if degree > m {
        return Err(Error::DegreeOverflow { degree, m });
    }
    let mut out = Skew::zero(m, degree);
    for (ta, fa) in a.components() {
        for (tw, fw) in w.components() {
            let mut idx = ta.clone();
            idx.extend_from_slice(tw);
            out.add_unsorted(idx, &(fa * fw));
        }
    }
    Ok(PolyForm(out))
}

impl PolyForm {
    /// A function viewed as a 0-form.
    pub fn function(f: Poly) -> Self {
        let m = f.nvars();
        let mut s = Skew::zero(m, 0);
        s.add_component(Vec::new(), f);
        PolyForm(s)
    }

    /// Differential of a function.
    pub fn differential(f: &Poly) -> Self {
        exterior_derivative(&PolyForm::function(f.clone()))
    }
}

/// `d tr(DX)`, the differential of the divergence.
pub fn dtr(x: &VectorField) -> PolyForm {
    PolyForm::differential(&x.trace_div())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vf(s: &str) -> VectorField {
        VectorField::parse(2, s).unwrap()
    }

    fn mv(p: usize, s: &str) -> PolyMultiVector {
        PolyMultiVector::parse(2, p, s).unwrap()
    }

    fn form(p: usize, s: &str) -> PolyForm {
        PolyForm::parse(2, p, s).unwrap()
    }

    #[test]
    fn tuples_and_signs() {
        assert_eq!(skew_tuples(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(sort_with_sign(vec![1, 0]), Some((vec![0, 1], -1)));
        assert_eq!(sort_with_sign(vec![2, 0, 1]), Some((vec![0, 1, 2], 1)));
        assert_eq!(sort_with_sign(vec![1, 1]), None);
    }

    #[test]
    fn lie_derivative_mv_examples() {
        let t = mv(2, "(x1^2 + x2) * d1^d2");
        let d1 = VectorField::coordinate(2, 0);
        assert_eq!(lie_derivative_mv(&d1, &t).unwrap(), mv(2, "2 * x1 * d1^d2"));
        assert_eq!(
            lie_derivative_mv(&vf("x2 d1"), &mv(1, "1 * d2")).unwrap(),
            mv(1, "-1 * d1")
        );
        assert_eq!(
            lie_derivative_mv(&VectorField::euler(2), &mv(2, "1 * d1^d2")).unwrap(),
            mv(2, "-2 * d1^d2")
        );
    }

    #[test]
    fn lie_derivative_form_examples() {
        let w = form(1, "x1 x2 * dx1");
        let d1 = VectorField::coordinate(2, 0);
        assert_eq!(lie_derivative_form(&d1, &w).unwrap(), form(1, "x2 * dx1"));
        assert_eq!(
            lie_derivative_form(&VectorField::euler(2), &form(2, "1 * dx1^dx2")).unwrap(),
            form(2, "2 * dx1^dx2")
        );
        assert_eq!(
            lie_derivative_form(&vf("x2 d1"), &form(1, "1 * dx1")).unwrap(),
            form(1, "1 * dx2")
        );
    }

    #[test]
    fn interior_examples() {
        let t = mv(2, "1 * d1^d2");
        let e1 = Covector::basis(2, 0);
        let e2 = Covector::basis(2, 1);
        assert_eq!(interior_covector(&e1, &t).unwrap(), mv(1, "1 * d2"));
        assert_eq!(interior_covector(&e2, &t).unwrap(), mv(1, "-1 * d1"));
        assert_eq!(
            interior_covector(&e1, &PolyMultiVector::zero(2, 0)),
            Err(Error::ZeroDegree)
        );
    }

    #[test]
    fn exterior_derivative_examples() {
        let x1 = PolyForm::function(Poly::var(2, 0));
        assert_eq!(exterior_derivative(&x1), form(1, "1 * dx1"));
        assert_eq!(exterior_derivative(&form(1, "x2 * dx1")), form(2, "-1 * dx1^dx2"));
        assert_eq!(form(2, "1 * dx2^dx1"), form(2, "-1 * dx1^dx2"));
    }

    #[test]
    fn wedge_examples() {
        let a = form(1, "1 * dx1");
        let b = form(1, "1 * dx2");
        assert_eq!(wedge(&a, &b).unwrap(), form(2, "1 * dx1^dx2"));
        assert!(wedge(&a, &a).unwrap().is_zero());
        assert_eq!(wedge(&form(1, "x1 * dx1"), &b).unwrap(), form(2, "x1 * dx1^dx2"));
        let top = form(2, "1 * dx1^dx2");
        assert_eq!(wedge(&a, &top), Err(Error::DegreeOverflow { degree: 3, m: 2 }));
    }

    #[test]
    fn dtr_examples() {
        assert!(dtr(&VectorField::coordinate(2, 1)).is_zero());
        assert_eq!(dtr(&vf("x1^2 d1 + x1 x2 d2")), form(1, "3 * dx1"));
        assert_eq!(dtr(&vf("x1^2 d1")), form(1, "2 * dx1"));
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 0..=3 {
            let t = PolyMultiVector::random(3, p, 2, &mut rng);
            assert_eq!(PolyMultiVector::parse(3, p, &t.to_string()).unwrap(), t);
            let w = PolyForm::random(3, p, 2, &mut rng);
            assert_eq!(PolyForm::parse(3, p, &w.to_string()).unwrap(), w);
        }
    }

    #[test]
    fn fiber_identity_scalar_matches_action() {
        for variance in [Variance::Contravariant, Variance::Covariant] {
            let fib = Fiber::new(3, 2, variance);
            let mut diag = vec![Rational::zero(); fib.dim()];
            for i in 0..3 {
                for (r, c, v) in fib.action(i, i) {
                    assert_eq!(r, c);
                    diag[*r] += v;
                }
            }
            for d in diag {
                assert_eq!(d, rat(fib.identity_scalar()));
            }
        }
    }
}
