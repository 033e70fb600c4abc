//! Linear differential operators `Σ_{|β|≤k} A^β ∘ ∂^β` between multivector fields, forms
//! or functions on ℝᵐ, and their principal symbols.
//!
//! A derivative multi-index `i₁…i_r` is stored as its exponent vector `β` (a symmetric
//! multiset); `∂^β` is the plain product of partials, no factorials. Coefficients `A^β`
//! are `Hom(V, W)`-valued polynomials stored entrywise on (target, source) basis pairs.
//!
//! The `Vect` action `L_X A = L_X ∘ A − A ∘ L_X` is computed by composing with the
//! first-order operator `L_X = X^j ∂_j − ρ(DX)` and pushing derivatives right with the
//! Leibniz rule, so results stay in normal form.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};


use crate::exactlinalg::{rat, Rational};
use crate::polyfields::{wrap_coeff, Monomial, Poly, VectorField};
use crate::tensorfields::{Fiber, PolyForm, PolyMultiVector, Variance};
use crate::Error;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Species {
    Function,
    Multivector,
    Form,
}

impl Species {
    pub fn short_name(self) -> &'static str {
        match self {
            Species::Function => "fn",
            Species::Multivector => "mv",
            Species::Form => "form",
        }
    }

    fn variance(self) -> Variance {
        match self {
            Species::Form => Variance::Covariant,
            _ => Variance::Contravariant,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Level {
    Operator,
    Symbol,
}

/// Names a coefficient module: `D^k(Λ^p, Λ^q)`, `D^k(Ω_p, Ω_q)`, functions, or the
/// corresponding symbol space `S^k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct ModuleSpec {
    pub m: usize,
    pub species: Species,
    pub p: usize,
    pub q: usize,
    pub k: u32,
    pub level: Level,
}

impl ModuleSpec {
    pub fn new(m: usize, species: Species, p: usize, q: usize, k: u32, level: Level) -> Result<Self, Error> {
        if m == 0 {
            return Err(Error::InvalidSpec("m must be positive".into()));
        }
        if p > m || q > m {
            return Err(Error::InvalidSpec(format!("degrees p={p}, q={q} exceed m={m}")));
        }
        if species == Species::Function && (p != 0 || q != 0 || k != 0) {
            return Err(Error::InvalidSpec("the function module has p = q = k = 0".into()));
        }
        Ok(ModuleSpec {
            m,
            species,
            p,
            q,
            k,
            level,
        })
    }

    pub fn operator(m: usize, species: Species, p: usize, q: usize, k: u32) -> Result<Self, Error> {
        Self::new(m, species, p, q, k, Level::Operator)
    }

    pub fn symbol(m: usize, species: Species, p: usize, q: usize, k: u32) -> Result<Self, Error> {
        Self::new(m, species, p, q, k, Level::Symbol)
    }

    pub fn functions(m: usize) -> Self {
        ModuleSpec {
            m,
            species: Species::Function,
            p: 0,
            q: 0,
            k: 0,
            level: Level::Operator,
        }
    }

    pub fn with_level(self, level: Level) -> Self {
        ModuleSpec { level, ..self }
    }

    pub fn with_order(self, k: u32) -> Self {
        ModuleSpec { k, ..self }
    }

    pub fn source_fiber(&self) -> Arc<Fiber> {
        fiber(self.m, self.p, self.species.variance())
    }

    pub fn target_fiber(&self) -> Arc<Fiber> {
        fiber(self.m, self.q, self.species.variance())
    }

    /// File-name friendly label, e.g. `mv_m2_p1_q0_k1` or `form_m3_p0_q1_k1_sym`.
    pub fn label(&self) -> String {
        let base = match self.species {
            Species::Function => format!("fn_m{}", self.m),
            s => format!("{}_m{}_p{}_q{}_k{}", s.short_name(), self.m, self.p, self.q, self.k),
        };
        match self.level {
            Level::Operator => base,
            Level::Symbol => format!("{base}_sym"),
        }
    }

    /// `L_E`-eigenvalue of the monomial `x^β ∂^γ ⊗ (source → target)`:
    /// `|β| − |γ| − c_W + c_V`, where `ρ(Id)` acts by `c` on a fibre.
    pub fn monomial_weight(&self, x_degree: u32, deriv_degree: u32) -> i64 {
        let cv = self.source_fiber().identity_scalar();
        let cw = self.target_fiber().identity_scalar();
        x_degree as i64 - deriv_degree as i64 - cw + cv
    }
}

impl fmt::Display for ModuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.species {
            Species::Function => return write!(f, "C(R^{})", self.m),
            Species::Multivector => ("Λ", "Λ"),
            Species::Form => ("Ω", "Ω"),
        };
        let head = match self.level {
            Level::Operator => "D",
            Level::Symbol => "S",
        };
        write!(f, "{head}^{}({open}^{}, {close}^{}) on R^{}", self.k, self.p, self.q, self.m)
    }
}

fn fiber(m: usize, p: usize, variance: Variance) -> Arc<Fiber> {
    type Cache = RwLock<HashMap<(usize, usize, Variance), Arc<Fiber>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(f) = cache.read().unwrap().get(&(m, p, variance)) {
        return f.clone();
    }
    let f = Arc::new(Fiber::new(m, p, variance));
    cache.write().unwrap().entry((m, p, variance)).or_insert(f).clone()
}

/// Index of one coefficient entry: derivative exponent, target basis index, source basis index.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct OpKey {
    pub deriv: Monomial,
    pub target: usize,
    pub source: usize,
}

type Terms = BTreeMap<OpKey, Poly>;

fn add_term(terms: &mut Terms, key: OpKey, f: Poly) {
    if f.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match terms.entry(key) {
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

fn combine(a: &Terms, b: &Terms, sign: i64) -> Terms {
    let mut out = a.clone();
    for (k, f) in b {
        add_term(&mut out, k.clone(), f.scale(&rat(sign)));
    }
    out
}

/// `Σ A^β ∂^β ∘ Σ B^δ ∂^δ = Σ_{γ≤β} C(β,γ) A^β (∂^γ B^δ) ∂^{β−γ+δ}`.
fn compose(a: &Terms, b: &Terms) -> Terms {
    let mut b_by_target: HashMap<usize, Vec<(&OpKey, &Poly)>> = HashMap::new();
    for (k, f) in b {
        b_by_target.entry(k.target).or_default().push((k, f));
    }
    let mut out = Terms::new();
    for (ka, fa) in a {
        let Some(bs) = b_by_target.get(&ka.source) else {
            continue;
        };
        let divisors = ka.deriv.divisors();
        for (kb, fb) in bs {
            for gamma in &divisors {
                let dfb = fb.derivative_multi(gamma);
                if dfb.is_zero() {
                    continue;
                }
                let rest = ka.deriv.div(gamma).expect("divisor");
                let coeff = (fa * &dfb).scale(&ka.deriv.binomial(gamma));
                add_term(
                    &mut out,
                    OpKey {
                        deriv: rest.mul(&kb.deriv),
                        target: ka.target,
                        source: kb.source,
                    },
                    coeff,
                );
            }
        }
    }
    out
}

/// The first-order operator `L_X = X^j ∂_j − ρ(DX)` on sections of `fib`.
fn lie_operator(x: &VectorField, fib: &Fiber) -> Terms {
    let m = fib.m();
    let mut out = Terms::new();
    for j in 0..m {
        let xj = x.component(j);
        if xj.is_zero() {
            continue;
        }
        for a in 0..fib.dim() {
            add_term(
                &mut out,
                OpKey {
                    deriv: Monomial::unit(m, j),
                    target: a,
                    source: a,
                },
                xj.clone(),
            );
        }
    }
    add_rho(&mut out, x, fib, -1, |row, col| (row, col));
    out
}

/// Adds `sign · ρ(DX)` at derivative order zero; `place(row, col)` positions each entry.
fn add_rho(out: &mut Terms, x: &VectorField, fib: &Fiber, sign: i64, place: impl Fn(usize, usize) -> (usize, usize)) {
    let m = fib.m();
    let dx = x.jacobian();
    for i in 0..m {
        for j in 0..m {
            let a = dx.get(i, j);
            if a.is_zero() {
                continue;
            }
            for (row, col, v) in fib.action(i, j) {
                let (t, s) = place(*row, *col);
                add_term(
                    out,
                    OpKey {
                        deriv: Monomial::one(m),
                        target: t,
                        source: s,
                    },
                    a.scale(&(v * rat(sign))),
                );
            }
        }
    }
}

/// A section of the source or target bundle of an operator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Field {
    Function(Poly),
    Multivector(PolyMultiVector),
    Form(PolyForm),
}

impl Field {
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Field, Error> {
        Ok(match self {
            Field::Function(f) => Field::Function(x.apply(f)),
            Field::Multivector(t) => Field::Multivector(t.lie_derivative(x)?),
            Field::Form(w) => Field::Form(w.lie_derivative(x)?),
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Function(f) => f.is_zero(),
            Field::Multivector(t) => t.is_zero(),
            Field::Form(w) => w.is_zero(),
        }
    }

    fn species_degree(&self) -> (Species, usize) {
        match self {
            Field::Function(_) => (Species::Function, 0),
            Field::Multivector(t) => (Species::Multivector, t.degree()),
            Field::Form(w) => (Species::Form, w.degree()),
        }
    }

    /// Basis field `e_tuple` of the given species.
    pub fn basis(species: Species, m: usize, tuple: &[usize]) -> Field {
        match species {
            Species::Function => Field::Function(Poly::one(m)),
            Species::Multivector => Field::Multivector(PolyMultiVector::basis(m, tuple)),
            Species::Form => Field::Form(PolyForm::basis(m, tuple)),
        }
    }

    /// Coordinates on the basis of `fib`.
    pub fn components(&self, fib: &Fiber) -> Vec<(usize, Poly)> {
        match self {
            Field::Function(f) => vec![(0, f.clone())],
            Field::Multivector(t) => t
                .components()
                .map(|(tu, f)| (fib.index_of(tu).expect("tuple"), f.clone()))
                .collect(),
            Field::Form(w) => w
                .components()
                .map(|(tu, f)| (fib.index_of(tu).expect("tuple"), f.clone()))
                .collect(),
        }
    }

    pub fn from_components(species: Species, fib: &Fiber, comps: BTreeMap<usize, Poly>) -> Field {
        let m = fib.m();
        match species {
            Species::Function => Field::Function(comps.into_values().next().unwrap_or_else(|| Poly::zero(m))),
            Species::Multivector => Field::Multivector(
                PolyMultiVector::from_components(
                    m,
                    fib.degree(),
                    comps.into_iter().map(|(i, f)| (fib.tuple(i).to_vec(), f)),
                )
                .expect("valid components"),
            ),
            Species::Form => Field::Form(
                PolyForm::from_components(
                    m,
                    fib.degree(),
                    comps.into_iter().map(|(i, f)| (fib.tuple(i).to_vec(), f)),
                )
                .expect("valid components"),
            ),
        }
    }
}

/// Differential operator in normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DiffOp {
    spec: ModuleSpec,
    terms: Terms,
}

impl DiffOp {
    pub fn zero(spec: ModuleSpec) -> Self {
        debug_assert_eq!(spec.level, Level::Operator);
        DiffOp {
            spec,
            terms: Terms::new(),
        }
    }

    /// The identity operator; needs `p == q`.
    pub fn identity(spec: ModuleSpec) -> Result<Self, Error> {
        if spec.p != spec.q {
            return Err(Error::InvalidSpec("identity needs p = q".into()));
        }
        Ok(Self::multiplication(spec, &Poly::one(spec.m)))
    }

    /// `f · id`, needs `p == q`.
    pub fn multiplication(spec: ModuleSpec, f: &Poly) -> Self {
        assert_eq!(spec.p, spec.q);
        let mut terms = Terms::new();
        for a in 0..spec.source_fiber().dim() {
            add_term(
                &mut terms,
                OpKey {
                    deriv: Monomial::one(spec.m),
                    target: a,
                    source: a,
                },
                f.clone(),
            );
        }
        DiffOp { spec, terms }
    }

    /// Builds an operator from `(deriv, target, source, coefficient)` entries.
    pub fn from_terms<I>(spec: ModuleSpec, entries: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (OpKey, Poly)>,
    {
        let (sdim, tdim) = (spec.source_fiber().dim(), spec.target_fiber().dim());
        let mut terms = Terms::new();
        for (key, f) in entries {
            if key.deriv.nvars() != spec.m || f.nvars() != spec.m {
                return Err(Error::DimensionMismatch {
                    expected: spec.m,
                    got: f.nvars(),
                });
            }
            if key.deriv.degree() > spec.k {
                return Err(Error::InvalidSpec(format!(
                    "derivative order {} exceeds k = {}",
                    key.deriv.degree(),
                    spec.k
                )));
            }
            if key.source >= sdim || key.target >= tdim {
                return Err(Error::InvalidSpec("basis index out of range".into()));
            }
            add_term(&mut terms, key, f);
        }
        Ok(DiffOp { spec, terms })
    }

    pub fn spec(&self) -> &ModuleSpec {
        &self.spec
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &Poly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest derivative order actually present; `None` for the zero operator.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.deriv.degree()).max()
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        debug_assert_eq!(self.spec, other.spec);
        DiffOp {
            spec: self.spec,
            terms: combine(&self.terms, &other.terms, 1),
        }
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        debug_assert_eq!(self.spec, other.spec);
        DiffOp {
            spec: self.spec,
            terms: combine(&self.terms, &other.terms, -1),
        }
    }

    pub fn scale(&self, c: &Rational) -> DiffOp {
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), f.scale(c));
        }
        DiffOp { spec: self.spec, terms }
    }

    pub fn mul_poly(&self, g: &Poly) -> DiffOp {
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), f * g);
        }
        DiffOp { spec: self.spec, terms }
    }

    /// Builds `D` from the images of basis sections: for each `∂^β` in `derivs`,
    /// `image(β, e_s)` is the coefficient `A^β e_s`.
    pub fn from_images<F>(spec: ModuleSpec, derivs: &[Monomial], image: F) -> Result<DiffOp, Error>
    where
        F: FnMut(&Monomial, Field) -> Result<Field, Error>,
    {
        DiffOp::from_terms(spec, image_entries(&spec, derivs, image)?)
    }

    /// `self ∘ inner`, kept in normal form; the result lives in order `k`.
    pub fn compose(&self, inner: &DiffOp, k: u32) -> Result<DiffOp, Error> {
        let (a, b) = (&self.spec, &inner.spec);
        if a.species != b.species || a.m != b.m || a.p != b.q {
            return Err(Error::ModuleMismatch(format!("cannot compose {a} after {b}")));
        }
        let spec = ModuleSpec::new(a.m, a.species, b.p, a.q, k, Level::Operator)?;
        let terms = compose(&self.terms, &inner.terms);
        if terms.keys().any(|key| key.deriv.degree() > k) {
            return Err(Error::ModuleMismatch(format!("composite exceeds order {k}")));
        }
        Ok(DiffOp { spec, terms })
    }

    /// Reinterprets the operator in a module with another order bound.
    pub fn with_order(&self, k: u32) -> Result<DiffOp, Error> {
        if self.order().is_some_and(|o| o > k) {
            return Err(Error::ModuleMismatch(format!(
                "operator of order {} does not fit in order {k}",
                self.order().unwrap()
            )));
        }
        Ok(DiffOp {
            spec: self.spec.with_order(k),
            terms: self.terms.clone(),
        })
    }

    /// Evaluates every coefficient at a point.
    pub fn eval_at(&self, point: &[Rational]) -> DiffOp {
        let m = self.spec.m;
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), Poly::constant(m, f.eval(point)));
        }
        DiffOp { spec: self.spec, terms }
    }

    /// `Σ_β A^β (∂^β T)` with the `Hom` part contracted.
    pub fn apply(&self, t: &Field) -> Result<Field, Error> {
        let (species, degree) = t.species_degree();
        if species != self.spec.species || degree != self.spec.p {
            return Err(Error::ModuleMismatch(format!(
                "operator on {:?}^{} applied to {:?}^{}",
                self.spec.species, self.spec.p, species, degree
            )));
        }
        let src = self.spec.source_fiber();
        let tgt = self.spec.target_fiber();
        let comps: HashMap<usize, Poly> = t.components(&src).into_iter().collect();
        let mut out: BTreeMap<usize, Poly> = BTreeMap::new();
        for (k, a) in &self.terms {
            if let Some(f) = comps.get(&k.source) {
                let df = f.derivative_multi(&k.deriv);
                if df.is_zero() {
                    continue;
                }
                let e = out.entry(k.target).or_insert_with(|| Poly::zero(self.spec.m));
                *e += &(a * &df);
            }
        }
        out.retain(|_, f| !f.is_zero());
        Ok(Field::from_components(species, &tgt, out))
    }

    /// `L_X D = L_X ∘ D − D ∘ L_X`, returned in the same module.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<DiffOp, Error> {
        if x.dim() != self.spec.m {
            return Err(Error::DimensionMismatch {
                expected: self.spec.m,
                got: x.dim(),
            });
        }
        let lw = lie_operator(x, &self.spec.target_fiber());
        let lv = lie_operator(x, &self.spec.source_fiber());
        let terms = combine(&compose(&lw, &self.terms), &compose(&self.terms, &lv), -1);
        if let Some(k) = terms.keys().find(|k| k.deriv.degree() > self.spec.k) {
            return Err(Error::Internal(format!(
                "L_X raised the order to {}",
                k.deriv.degree()
            )));
        }
        Ok(DiffOp { spec: self.spec, terms })
    }

    /// The order-`k` layer as a symbol.
    pub fn principal_symbol(&self) -> SymbolTensor {
        let k = self.spec.k;
        SymbolTensor {
            spec: self.spec.with_level(Level::Symbol),
            terms: self
                .terms
                .iter()
                .filter(|(key, _)| key.deriv.degree() == k)
                .map(|(key, f)| (key.clone(), f.clone()))
                .collect(),
        }
    }
}

fn fmt_terms(terms: &Terms, spec: &ModuleSpec, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    let src = spec.source_fiber();
    let tgt = spec.target_fiber();
    let parts: Vec<String> = terms
        .iter()
        .map(|(k, c)| {
            let d: Vec<String> = k
                .deriv
                .0
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat(format!("{var}{}", i + 1)).take(e as usize))
                .collect();
            let d = if d.is_empty() { String::new() } else { format!(" {}", d.join(" ")) };
            let t: Vec<String> = tgt.tuple(k.target).iter().map(|i| (i + 1).to_string()).collect();
            let s: Vec<String> = src.tuple(k.source).iter().map(|i| (i + 1).to_string()).collect();
            format!("{} [{}<-{}]{}", wrap_coeff(c), t.join(","), s.join(","), d)
        })
        .collect();
    write!(f, "{}", parts.join(" + "))
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(&self.terms, &self.spec, "∂", f)
    }
}

impl fmt::Debug for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffOp<{}>({})", self.spec, self)
    }
}

fn image_entries<F>(spec: &ModuleSpec, derivs: &[Monomial], mut image: F) -> Result<Vec<(OpKey, Poly)>, Error>
where
    F: FnMut(&Monomial, Field) -> Result<Field, Error>,
{
    let src = spec.source_fiber();
    let tgt = spec.target_fiber();
    let mut entries = Vec::new();
    for deriv in derivs {
        for s in 0..src.dim() {
            let img = image(deriv, Field::basis(spec.species, spec.m, src.tuple(s)))?;
            let (species, degree) = img.species_degree();
            if species != spec.species || degree != spec.q {
                return Err(Error::ModuleMismatch(format!(
                    "image of degree {degree} in a module with q = {}",
                    spec.q
                )));
            }
            for (t, f) in img.components(&tgt) {
                entries.push((
                    OpKey {
                        deriv: deriv.clone(),
                        target: t,
                        source: s,
                    },
                    f,
                ));
            }
        }
    }
    Ok(entries)
}

/// Principal symbol: a `Hom(V, W)`-valued polynomial homogeneous of degree `k` in `η`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymbolTensor {
    spec: ModuleSpec,
    terms: Terms,
}

impl SymbolTensor {
    pub fn zero(spec: ModuleSpec) -> Self {
        SymbolTensor {
            spec: spec.with_level(Level::Symbol),
            terms: Terms::new(),
        }
    }

    /// Builds a symbol from `(η-exponent, target, source, coefficient)` entries; every
    /// η-exponent must have degree exactly `k`.
    pub fn from_terms<I>(spec: ModuleSpec, entries: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (OpKey, Poly)>,
    {
        let spec = spec.with_level(Level::Symbol);
        let mut terms = Terms::new();
        for (key, f) in entries {
            if key.deriv.degree() != spec.k {
                return Err(Error::InvalidSpec(format!(
                    "symbol entry of η-degree {} in S^{}",
                    key.deriv.degree(),
                    spec.k
                )));
            }
            add_term(&mut terms, key, f);
        }
        Ok(SymbolTensor { spec, terms })
    }

    pub fn spec(&self) -> &ModuleSpec {
        &self.spec
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OpKey, &Poly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &SymbolTensor) -> SymbolTensor {
        SymbolTensor {
            spec: self.spec,
            terms: combine(&self.terms, &other.terms, 1),
        }
    }

    pub fn sub(&self, other: &SymbolTensor) -> SymbolTensor {
        SymbolTensor {
            spec: self.spec,
            terms: combine(&self.terms, &other.terms, -1),
        }
    }

    pub fn scale(&self, c: &Rational) -> SymbolTensor {
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), f.scale(c));
        }
        SymbolTensor { spec: self.spec, terms }
    }

    pub fn mul_poly(&self, g: &Poly) -> SymbolTensor {
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), f * g);
        }
        SymbolTensor { spec: self.spec, terms }
    }

    pub fn eval_at(&self, point: &[Rational]) -> SymbolTensor {
        let m = self.spec.m;
        let mut terms = Terms::new();
        for (k, f) in &self.terms {
            add_term(&mut terms, k.clone(), Poly::constant(m, f.eval(point)));
        }
        SymbolTensor { spec: self.spec, terms }
    }

    /// Symbol from the images of basis sections, one `η`-monomial at a time.
    pub fn from_images<F>(spec: ModuleSpec, etas: &[Monomial], image: F) -> Result<SymbolTensor, Error>
    where
        F: FnMut(&Monomial, Field) -> Result<Field, Error>,
    {
        SymbolTensor::from_terms(spec, image_entries(&spec, etas, image)?)
    }

    /// True when every coefficient is a constant polynomial.
    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|f| f.degree().unwrap_or(0) == 0)
    }

    /// `L_X S = X·S − ρ(DX) S` for the canonical `gl(m)` action on
    /// `∨^k ℝᵐ ⊗ Hom(V, W)`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<SymbolTensor, Error> {
        let m = self.spec.m;
        if x.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: x.dim(),
            });
        }
        let dx = x.jacobian();
        let src = self.spec.source_fiber();
        let tgt = self.spec.target_fiber();
        let mut out = Terms::new();
        for (key, f) in &self.terms {
            add_term(&mut out, key.clone(), x.apply(f));
            for i in 0..m {
                for j in 0..m {
                    let a = dx.get(i, j);
                    if a.is_zero() {
                        continue;
                    }
                    let af = a * f;
                    // ∨^k ℝᵐ: η_j ↦ η_i, as a derivation on the monomial η^β.
                    let bj = key.deriv.0[j];
                    if bj > 0 {
                        let mut nb = key.deriv.clone();
                        nb.0[j] -= 1;
                        nb.0[i] += 1;
                        add_term(
                            &mut out,
                            OpKey {
                                deriv: nb,
                                ..key.clone()
                            },
                            af.scale(&rat(-(bj as i64))),
                        );
                    }
                    // target factor: −ρ_W(E^i_j) ∘ S
                    for (row, col, v) in tgt.action(i, j) {
                        if *col == key.target {
                            add_term(
                                &mut out,
                                OpKey {
                                    target: *row,
                                    ..key.clone()
                                },
                                af.scale(&-v.clone()),
                            );
                        }
                    }
                    // source factor: + S ∘ ρ_V(E^i_j)
                    for (row, col, v) in src.action(i, j) {
                        if *row == key.source {
                            add_term(
                                &mut out,
                                OpKey {
                                    source: *col,
                                    ..key.clone()
                                },
                                af.scale(v),
                            );
                        }
                    }
                }
            }
        }
        Ok(SymbolTensor { spec: self.spec, terms: out })
    }

    /// The section of `σ` that reuses the coefficients with `∂` in place of `η` and no
    /// lower-order terms.
    pub fn lift(&self) -> DiffOp {
        DiffOp {
            spec: self.spec.with_level(Level::Operator),
            terms: self.terms.clone(),
        }
    }
}

impl fmt::Display for SymbolTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(&self.terms, &self.spec, "η", f)
    }
}

impl fmt::Debug for SymbolTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol<{}>({})", self.spec, self)
    }
}

/// `L_X D` for an operator.
pub fn lie_derivative_op(x: &VectorField, d: &DiffOp) -> Result<DiffOp, Error> {
    d.lie_derivative(x)
}

pub fn principal_symbol(d: &DiffOp) -> SymbolTensor {
    d.principal_symbol()
}

pub fn symbol_lie_derivative(x: &VectorField, s: &SymbolTensor) -> Result<SymbolTensor, Error> {
    s.lie_derivative(x)
}

pub fn lift_symbol(s: &SymbolTensor) -> DiffOp {
    s.lift()
}

/// `T ↦ Σ_i ι_{dx^i} ∂_i T` from `Λ^p` to `Λ^{p−1}`, the operator whose coboundary is
/// `X ↦ ι_{d tr DX}`.
pub fn divergence_operator(m: usize, p: usize, k: u32) -> Result<DiffOp, Error> {
    if p == 0 {
        return Err(Error::ZeroDegree);
    }
    let spec = ModuleSpec::operator(m, Species::Multivector, p, p - 1, k.max(1))?;
    let src = spec.source_fiber();
    let tgt = spec.target_fiber();
    let mut entries = Vec::new();
    for s in 0..src.dim() {
        let tuple = src.tuple(s);
        for (slot, &axis) in tuple.iter().enumerate() {
            let mut rest = tuple.to_vec();
            rest.remove(slot);
            let sign = if slot % 2 == 0 { 1 } else { -1 };
            entries.push((
                OpKey {
                    deriv: Monomial::unit(m, axis),
                    target: tgt.index_of(&rest).expect("tuple"),
                    source: s,
                },
                Poly::constant(m, rat(sign)),
            ));
        }
    }
    DiffOp::from_terms(spec, entries)
}

/// Exterior derivative `d: Ω_p → Ω_{p+1}` as a first-order operator.
pub fn exterior_derivative_operator(m: usize, p: usize, k: u32) -> Result<DiffOp, Error> {
    let spec = ModuleSpec::operator(m, Species::Form, p, p + 1, k.max(1))?;
    let src = spec.source_fiber();
    let tgt = spec.target_fiber();
    let mut entries = Vec::new();
    for s in 0..src.dim() {
        let tuple = src.tuple(s);
        for axis in 0..m {
            if tuple.contains(&axis) {
                continue;
            }
            let mut idx = vec![axis];
            idx.extend_from_slice(tuple);
            let (sorted, sign) = crate::tensorfields::sort_with_sign(idx).expect("distinct");
            entries.push((
                OpKey {
                    deriv: Monomial::unit(m, axis),
                    target: tgt.index_of(&sorted).expect("tuple"),
                    source: s,
                },
                Poly::constant(m, rat(sign)),
            ));
        }
    }
    DiffOp::from_terms(spec, entries)
}

/// Zero-order operator given by a constant or polynomial `Hom(V, W)` matrix built entrywise.
pub fn zero_order_operator<F>(spec: ModuleSpec, mut entry: F) -> Result<DiffOp, Error>
where
    F: FnMut(&[usize], &[usize]) -> Poly,
{
    let src = spec.source_fiber();
    let tgt = spec.target_fiber();
    let mut entries = Vec::new();
    for s in 0..src.dim() {
        for t in 0..tgt.dim() {
            let f = entry(tgt.tuple(t), src.tuple(s));
            if !f.is_zero() {
                entries.push((
                    OpKey {
                        deriv: Monomial::one(spec.m),
                        target: t,
                        source: s,
                    },
                    f,
                ));
            }
        }
    }
    DiffOp::from_terms(spec, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorfields::interior_product;

    fn vf(s: &str) -> VectorField {
        VectorField::parse(2, s).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ModuleSpec::operator(2, Species::Multivector, 3, 0, 1).is_err());
        assert!(ModuleSpec::new(2, Species::Function, 1, 0, 0, Level::Operator).is_err());
        assert_eq!(
            ModuleSpec::operator(2, Species::Multivector, 1, 0, 1).unwrap().label(),
            "mv_m2_p1_q0_k1"
        );
    }

    #[test]
    fn apply_examples() {
        let spec = ModuleSpec::operator(2, Species::Multivector, 2, 2, 0).unwrap();
        let id = DiffOp::identity(spec).unwrap();
        let t = Field::Multivector(PolyMultiVector::parse(2, 2, "(x1 + x2^2) * d1^d2").unwrap());
        assert_eq!(id.apply(&t).unwrap(), t);

        // ι_{dx¹} ∂₁ on x¹ ∂₁∧∂₂
        let spec = ModuleSpec::operator(2, Species::Multivector, 2, 1, 1).unwrap();
        let d = DiffOp::from_terms(
            spec,
            [(
                OpKey {
                    deriv: Monomial::unit(2, 0),
                    target: 1, // (1) = ∂₂
                    source: 0,
                },
                Poly::one(2),
            )],
        )
        .unwrap();
        let t = Field::Multivector(PolyMultiVector::parse(2, 2, "x1 * d1^d2").unwrap());
        assert_eq!(
            d.apply(&t).unwrap(),
            Field::Multivector(PolyMultiVector::parse(2, 1, "1 * d2").unwrap())
        );
        let zero = Field::Multivector(PolyMultiVector::zero(2, 2));
        assert!(d.apply(&zero).unwrap().is_zero());
    }

    #[test]
    fn apply_rejects_wrong_species() {
        let spec = ModuleSpec::operator(2, Species::Multivector, 1, 1, 0).unwrap();
        let id = DiffOp::identity(spec).unwrap();
        let w = Field::Form(PolyForm::zero(2, 1));
        assert!(matches!(id.apply(&w), Err(Error::ModuleMismatch(_))));
    }

    #[test]
    fn lie_derivative_op_examples() {
        let spec = ModuleSpec::operator(2, Species::Multivector, 1, 1, 2).unwrap();
        let id = DiffOp::identity(spec).unwrap();
        assert!(id.lie_derivative(&vf("x1 x2^2 d1 + x1^3 d2")).unwrap().is_zero());

        let fspec = ModuleSpec::operator(2, Species::Function, 0, 0, 0).unwrap().with_order(1);
        let fspec = ModuleSpec { k: 1, ..fspec };
        let d1 = DiffOp::from_terms(
            fspec,
            [(
                OpKey {
                    deriv: Monomial::unit(2, 0),
                    target: 0,
                    source: 0,
                },
                Poly::one(2),
            )],
        )
        .unwrap();
        assert_eq!(d1.lie_derivative(&VectorField::euler(2)).unwrap(), d1.scale(&rat(-1)));

        let mult = DiffOp::multiplication(fspec, &Poly::var(2, 0));
        assert_eq!(
            mult.lie_derivative(&VectorField::coordinate(2, 0)).unwrap(),
            DiffOp::multiplication(fspec, &Poly::one(2))
        );
    }

    #[test]
    fn symbol_examples() {
        let spec = ModuleSpec::operator(2, Species::Multivector, 1, 1, 1).unwrap();
        let id = DiffOp::identity(spec).unwrap();
        assert!(id.principal_symbol().is_zero());

        let div = divergence_operator(2, 1, 1).unwrap();
        let s = div.principal_symbol();
        assert_eq!(s.lift(), div);

        let fspec = ModuleSpec {
            k: 2,
            ..ModuleSpec::functions(2)
        };
        let op = DiffOp::from_terms(
            fspec,
            [(
                OpKey {
                    deriv: Monomial(vec![2, 0]),
                    target: 0,
                    source: 0,
                },
                Poly::var(2, 0),
            )],
        )
        .unwrap();
        let sym = op.principal_symbol();
        assert_eq!(sym.terms().count(), 1);
        let (k, f) = sym.terms().next().unwrap();
        assert_eq!(k.deriv, Monomial(vec![2, 0]));
        assert_eq!(f, &Poly::var(2, 0));
    }

    #[test]
    fn divergence_operator_matches_interior_products() {
        let div = divergence_operator(2, 2, 1).unwrap();
        let t = PolyMultiVector::parse(2, 2, "(x1^2 x2 + 3 * x2) * d1^d2").unwrap();
        let mut expected = PolyMultiVector::zero(2, 1);
        for i in 0..2 {
            let dt = t.map_coeffs(|f| f.derivative(i));
            let dxi = crate::tensorfields::Covector::basis(2, i).to_form();
            expected = expected.add(&interior_product(&dxi, &dt).unwrap());
        }
        assert_eq!(div.apply(&Field::Multivector(t)).unwrap(), Field::Multivector(expected));
    }

    #[test]
    fn euler_acts_diagonally_on_symbol_monomials() {
        let spec = ModuleSpec::symbol(2, Species::Multivector, 2, 1, 1).unwrap();
        let s = SymbolTensor::from_terms(
            spec,
            [(
                OpKey {
                    deriv: Monomial::unit(2, 1),
                    target: 0,
                    source: 0,
                },
                Poly::parse(2, "x1 x2^2").unwrap(),
            )],
        )
        .unwrap();
        // weight = |β| − |γ| − q + p = 3 − 1 − 1 + 2 = 3
        assert_eq!(s.lie_derivative(&VectorField::euler(2)).unwrap(), s.scale(&rat(3)));
        assert_eq!(spec.monomial_weight(3, 1), 3);
    }
}
