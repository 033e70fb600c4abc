//! Chevalley–Eilenberg cochains of a finite-dimensional algebra of polynomial vector
//! fields (usually the projective `sl(m+1)`) with values in functions, differential
//! operators or symbols.
//!
//! Cochains are stored on strictly increasing tuples of basis indices. The Euler field
//! grades everything: a coordinate `(τ, v)` of a cochain has weight
//! `λ(v) − Σ_{a∈τ} w(a)`, where `λ(v)` is the `L_E`-eigenvalue of the module monomial
//! `v`. The differential preserves this weight and the complex is acyclic off weight
//! zero, so cohomology is computed on the finite weight-zero blocks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use rayon::prelude::*;

use crate::diffops::{DiffOp, Level, ModuleSpec, OpKey, Species, SymbolTensor};
use crate::exactlinalg::{self, rat, Rational, SparseMatrix};
use crate::polyfields::{Monomial, Poly, VectorField};
use crate::slstructure;
use crate::tensorfields::{skew_tuples, sort_with_sign};
use crate::Error;

/// A monomial of a coefficient module: `x^x ∂^{key.deriv} ⊗ (source → target)`.
/// For functions the key is trivial.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ModuleMonomial {
    pub x: Monomial,
    pub key: OpKey,
}

impl ModuleMonomial {
    fn function(x: Monomial) -> Self {
        let m = x.nvars();
        ModuleMonomial {
            x,
            key: OpKey {
                deriv: Monomial::one(m),
                target: 0,
                source: 0,
            },
        }
    }

    /// `L_E`-eigenvalue from the degrees alone.
    pub fn weight(&self, spec: &ModuleSpec) -> i64 {
        match spec.species {
            Species::Function => self.x.degree() as i64,
            _ => spec.monomial_weight(self.x.degree(), self.key.deriv.degree()),
        }
    }
}

/// Value of a cochain: an element of the coefficient module.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ModuleElement {
    Function(Poly),
    Operator(DiffOp),
    Symbol(SymbolTensor),
}

impl ModuleElement {
    pub fn zero(spec: &ModuleSpec) -> Self {
        match (spec.species, spec.level) {
            (Species::Function, _) => ModuleElement::Function(Poly::zero(spec.m)),
            (_, Level::Operator) => ModuleElement::Operator(DiffOp::zero(*spec)),
            (_, Level::Symbol) => ModuleElement::Symbol(SymbolTensor::zero(*spec)),
        }
    }

    pub fn from_coords<I>(spec: &ModuleSpec, coords: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (ModuleMonomial, Rational)>,
    {
        let coords = coords.into_iter();
        Ok(match (spec.species, spec.level) {
            (Species::Function, _) => {
                ModuleElement::Function(Poly::from_terms(spec.m, coords.map(|(mono, c)| (mono.x, c))))
            }
            (_, Level::Operator) => ModuleElement::Operator(DiffOp::from_terms(
                *spec,
                coords.map(|(mono, c)| (mono.key, Poly::term(mono.x, c))),
            )?),
            (_, Level::Symbol) => ModuleElement::Symbol(SymbolTensor::from_terms(
                *spec,
                coords.map(|(mono, c)| (mono.key, Poly::term(mono.x, c))),
            )?),
        })
    }

    pub fn monomial(spec: &ModuleSpec, mono: ModuleMonomial) -> Result<Self, Error> {
        Self::from_coords(spec, [(mono, rat(1))])
    }

    pub fn coords(&self) -> Vec<(ModuleMonomial, Rational)> {
        fn expand<'a>(terms: impl Iterator<Item = (&'a OpKey, &'a Poly)>) -> Vec<(ModuleMonomial, Rational)> {
            terms
                .flat_map(|(key, f)| {
                    f.terms().map(move |(x, c)| {
                        (
                            ModuleMonomial {
                                x: x.clone(),
                                key: key.clone(),
                            },
                            c.clone(),
                        )
                    })
                })
                .collect()
        }
        match self {
            ModuleElement::Function(f) => f
                .terms()
                .map(|(x, c)| (ModuleMonomial::function(x.clone()), c.clone()))
                .collect(),
            ModuleElement::Operator(d) => expand(d.terms()),
            ModuleElement::Symbol(s) => expand(s.terms()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ModuleElement::Function(f) => f.is_zero(),
            ModuleElement::Operator(d) => d.is_zero(),
            ModuleElement::Symbol(s) => s.is_zero(),
        }
    }

    pub fn lie_derivative(&self, x: &VectorField) -> Result<Self, Error> {
        Ok(match self {
            ModuleElement::Function(f) => ModuleElement::Function(x.apply(f)),
            ModuleElement::Operator(d) => ModuleElement::Operator(d.lie_derivative(x)?),
            ModuleElement::Symbol(s) => ModuleElement::Symbol(s.lie_derivative(x)?),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        Ok(match (self, other) {
            (ModuleElement::Function(a), ModuleElement::Function(b)) => ModuleElement::Function(a + b),
            (ModuleElement::Operator(a), ModuleElement::Operator(b)) if a.spec() == b.spec() => {
                ModuleElement::Operator(a.add(b))
            }
            (ModuleElement::Symbol(a), ModuleElement::Symbol(b)) if a.spec() == b.spec() => {
                ModuleElement::Symbol(a.add(b))
            }
            _ => return Err(Error::ModuleMismatch("adding elements of different modules".into())),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        match self {
            ModuleElement::Function(f) => ModuleElement::Function(f.scale(c)),
            ModuleElement::Operator(d) => ModuleElement::Operator(d.scale(c)),
            ModuleElement::Symbol(s) => ModuleElement::Symbol(s.scale(c)),
        }
    }

    fn fits(&self, spec: &ModuleSpec) -> bool {
        match self {
            ModuleElement::Function(f) => spec.species == Species::Function && f.nvars() == spec.m,
            ModuleElement::Operator(d) => d.spec() == spec,
            ModuleElement::Symbol(s) => s.spec() == spec,
        }
    }
}

impl fmt::Display for ModuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleElement::Function(p) => write!(f, "{p}"),
            ModuleElement::Operator(d) => write!(f, "{d}"),
            ModuleElement::Symbol(s) => write!(f, "{s}"),
        }
    }
}

/// `L_E`-eigenvalue of a single module monomial, computed through the module action.
pub fn module_weight(spec: &ModuleSpec, v: &ModuleElement) -> Result<i64, Error> {
    let coords = v.coords();
    let [(_, c)] = coords.as_slice() else {
        return Err(Error::NotPure(v.to_string()));
    };
    let image = v.lie_derivative(&VectorField::euler(spec.m))?;
    let lambda = image
        .coords()
        .first()
        .map(|(_, d)| d / c)
        .unwrap_or_else(Rational::zero);
    if image != v.scale(&lambda) || !lambda.is_integer() {
        return Err(Error::Internal(format!("{v} is not an L_E eigenvector")));
    }
    Ok(lambda.to_integer().try_into().expect("small weight"))
}

/// A finite-dimensional Lie algebra of vector fields with its structure constants.
#[derive(Clone, Debug)]
pub struct Algebra {
    m: usize,
    fields: Vec<VectorField>,
    weights: Option<Vec<i64>>,
    /// `brackets[a][b]` expands `[X_a, X_b]`.
    brackets: Vec<Vec<Vec<(usize, Rational)>>>,
    /// `preimages[k]` lists `(i, j, c^k_{ij})` with `i < j`.
    preimages: Vec<Vec<(usize, usize, Rational)>>,
}

impl Algebra {
    /// The projective `sl(m+1)` in the basis of [`slstructure::basis`].
    pub fn sl(m: usize) -> Result<Self, Error> {
        let fields = slstructure::basis_fields(m)?;
        let weights = (0..fields.len()).map(|a| slstructure::basis_weight(m, a)).collect();
        let brackets = slstructure::structure_constants(m)?;
        Ok(Self::assemble(m, fields, Some(weights), brackets))
    }

    /// Any bracket-closed, linearly independent family of fields.
    pub fn from_fields(fields: Vec<VectorField>) -> Result<Self, Error> {
        let Some(m) = fields.first().map(VectorField::dim) else {
            return Err(Error::InvalidSpec("empty family".into()));
        };
        let mut index: HashMap<(usize, Monomial), usize> = HashMap::new();
        let mut coords = |x: &VectorField| -> Vec<(usize, Rational)> {
            let mut out = Vec::new();
            for (i, f) in x.components().iter().enumerate() {
                for (mono, c) in f.terms() {
                    let n = index.len();
                    let row = *index.entry((i, mono.clone())).or_insert(n);
                    out.push((row, c.clone()));
                }
            }
            out
        };
        let cols: Vec<Vec<(usize, Rational)>> = fields.iter().map(&mut coords).collect();
        let mut brackets = vec![vec![Vec::new(); fields.len()]; fields.len()];
        let mut targets = Vec::new();
        for a in 0..fields.len() {
            for b in a + 1..fields.len() {
                targets.push((a, b, coords(&fields[a].bracket(&fields[b])?)));
            }
        }
        let rows = index.len();
        let trip = cols
            .iter()
            .enumerate()
            .flat_map(|(c, v)| v.iter().map(move |(r, x)| (*r, c, x.clone())));
        let mat = SparseMatrix::from_triplets(rows, fields.len(), trip)?;
        if exactlinalg::rank(&mat) != fields.len() {
            return Err(Error::InvalidSpec("fields are linearly dependent".into()));
        }
        for (a, b, v) in targets {
            let mut rhs = vec![Rational::zero(); rows];
            for (r, x) in v {
                rhs[r] = x;
            }
            let sol = exactlinalg::solve(&mat, &rhs)?
                .ok_or_else(|| Error::InvalidSpec(format!("[X_{a}, X_{b}] leaves the span")))?;
            let exp: Vec<(usize, Rational)> = sol.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
            brackets[b][a] = exp.iter().map(|(k, c)| (*k, -c.clone())).collect();
            brackets[a][b] = exp;
        }
        Ok(Self::assemble(m, fields, None, brackets))
    }

    fn assemble(
        m: usize,
        fields: Vec<VectorField>,
        weights: Option<Vec<i64>>,
        brackets: Vec<Vec<Vec<(usize, Rational)>>>,
    ) -> Self {
        let n = fields.len();
        let mut preimages = vec![Vec::new(); n];
        for (i, row) in brackets.iter().enumerate() {
            for (j, exp) in row.iter().enumerate().skip(i + 1) {
                for (k, c) in exp {
                    preimages[*k].push((i, j, c.clone()));
                }
            }
        }
        Algebra {
            m,
            fields,
            weights,
            brackets,
            preimages,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, a: usize) -> &VectorField {
        &self.fields[a]
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn bracket(&self, a: usize, b: usize) -> &[(usize, Rational)] {
        &self.brackets[a][b]
    }

    /// Euler weights of the basis, when the algebra is graded by `E`.
    pub fn weights(&self) -> Option<&[i64]> {
        self.weights.as_deref()
    }

    fn weight_of(&self, tuple: &[usize]) -> Result<i64, Error> {
        let w = self
            .weights
            .as_ref()
            .ok_or_else(|| Error::InvalidSpec("algebra carries no Euler grading".into()))?;
        Ok(tuple.iter().map(|a| w[*a]).sum())
    }

    /// The terms of `∂` applied to a cochain supported on `tau`: `(σ, coefficient, Some(a))`
    /// stands for `coefficient · L_{X_a} c(τ)` at `σ`, and `(σ, coefficient, None)` for
    /// `coefficient · c(τ)` at `σ`.
    fn coboundary_pieces(&self, tau: &[usize]) -> Vec<(Vec<usize>, Rational, Option<usize>)> {
        let mut out = Vec::new();
        for a in 0..self.dim() {
            if tau.contains(&a) {
                continue;
            }
            let pos = tau.partition_point(|&t| t < a);
            let mut sigma = tau.to_vec();
            sigma.insert(pos, a);
            out.push((sigma, alt(pos), Some(a)));
        }
        for (slot, &k) in tau.iter().enumerate() {
            let rest: Vec<usize> = tau.iter().copied().filter(|&t| t != k).collect();
            for (i, j, c) in &self.preimages[k] {
                if rest.contains(i) || rest.contains(j) {
                    continue;
                }
                let mut sigma = rest.clone();
                sigma.push(*i);
                sigma.push(*j);
                sigma.sort_unstable();
                let pi = sigma.binary_search(i).unwrap();
                let pj = sigma.binary_search(j).unwrap();
                out.push((sigma, alt(pi + pj + slot) * c, None));
            }
        }
        out
    }
}

fn alt(k: usize) -> Rational {
    if k % 2 == 0 {
        rat(1)
    } else {
        rat(-1)
    }
}

/// Alternating `u`-cochain on an algebra basis, stored on increasing tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cochain {
    spec: ModuleSpec,
    degree: usize,
    values: BTreeMap<Vec<usize>, ModuleElement>,
}

impl Cochain {
    pub fn new(spec: ModuleSpec, degree: usize) -> Self {
        Cochain {
            spec,
            degree,
            values: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> &ModuleSpec {
        &self.spec
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = (&Vec<usize>, &ModuleElement)> {
        self.values.iter()
    }

    /// Adds `value` at the (possibly unsorted) argument list; repeated arguments are
    /// rejected since the cochain is alternating.
    pub fn add_value(&mut self, args: &[usize], value: ModuleElement) -> Result<(), Error> {
        if args.len() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: args.len(),
            });
        }
        if !value.fits(&self.spec) {
            return Err(Error::ModuleMismatch(format!("value does not lie in {}", self.spec)));
        }
        let (sorted, sign) = sort_with_sign(args.to_vec())
            .ok_or_else(|| Error::InvalidSpec("repeated argument in alternating cochain".into()))?;
        let value = value.scale(&rat(sign));
        let sum = match self.values.remove(&sorted) {
            Some(old) => old.add(&value)?,
            None => value,
        };
        if !sum.is_zero() {
            self.values.insert(sorted, sum);
        }
        Ok(())
    }

    /// `c(X_{a_1}, …, X_{a_u})` for any argument order.
    pub fn eval(&self, args: &[usize]) -> ModuleElement {
        match sort_with_sign(args.to_vec()) {
            Some((sorted, sign)) => match self.values.get(&sorted) {
                Some(v) => v.scale(&rat(sign)),
                None => ModuleElement::zero(&self.spec),
            },
            None => ModuleElement::zero(&self.spec),
        }
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, Error> {
        if self.spec != other.spec || self.degree != other.degree {
            return Err(Error::ModuleMismatch("cochains of different shape".into()));
        }
        let mut out = self.clone();
        for (t, v) in &other.values {
            out.add_value(t, v.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain, Error> {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rational) -> Cochain {
        let mut out = Cochain::new(self.spec, self.degree);
        if !c.is_zero() {
            for (t, v) in &self.values {
                out.values.insert(t.clone(), v.scale(c));
            }
        }
        out
    }

    pub fn coords(&self) -> BTreeMap<(Vec<usize>, ModuleMonomial), Rational> {
        let mut out = BTreeMap::new();
        for (t, v) in &self.values {
            for (mono, c) in v.coords() {
                out.insert((t.clone(), mono), c);
            }
        }
        out
    }

    pub fn from_coords<I>(spec: ModuleSpec, degree: usize, coords: I) -> Result<Cochain, Error>
    where
        I: IntoIterator<Item = ((Vec<usize>, ModuleMonomial), Rational)>,
    {
        let mut grouped: BTreeMap<Vec<usize>, Vec<(ModuleMonomial, Rational)>> = BTreeMap::new();
        for ((t, mono), c) in coords {
            grouped.entry(t).or_default().push((mono, c));
        }
        let mut out = Cochain::new(spec, degree);
        for (t, cs) in grouped {
            out.add_value(&t, ModuleElement::from_coords(&spec, cs)?)?;
        }
        Ok(out)
    }

    /// Moves an operator-valued cochain into another order bound (e.g. after the top
    /// layer of a coboundary is known to vanish).
    pub fn with_order(&self, k: u32) -> Result<Cochain, Error> {
        let spec = self.spec.with_order(k);
        let mut out = Cochain::new(spec, self.degree);
        for (t, v) in &self.values {
            let v = match v {
                ModuleElement::Operator(d) => ModuleElement::Operator(d.with_order(k)?),
                _ => return Err(Error::ModuleMismatch("only operator cochains change order".into())),
            };
            out.values.insert(t.clone(), v);
        }
        Ok(out)
    }

    /// Weights present among the coordinates.
    pub fn weights(&self, alg: &Algebra) -> Result<BTreeSet<i64>, Error> {
        let mut out = BTreeSet::new();
        for (t, v) in &self.values {
            let tw = alg.weight_of(t)?;
            for (mono, _) in v.coords() {
                out.insert(mono.weight(&self.spec) - tw);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return write!(f, "0");
        }
        for (t, v) in &self.values {
            writeln!(f, "{t:?} ↦ {v}")?;
        }
        Ok(())
    }
}

/// Tabulates a cochain given as a function of vector fields on the algebra basis.
pub fn cochain_on_basis<F>(spec: ModuleSpec, degree: usize, alg: &Algebra, f: F) -> Result<Cochain, Error>
where
    F: Fn(&[VectorField]) -> Result<ModuleElement, Error>,
{
    let mut out = Cochain::new(spec, degree);
    for t in skew_tuples(alg.dim(), degree) {
        let args: Vec<VectorField> = t.iter().map(|a| alg.field(*a).clone()).collect();
        let v = f(&args)?;
        if !v.is_zero() {
            out.add_value(&t, v)?;
        }
    }
    Ok(out)
}

/// `(∂c)(X_0…X_u) = Σ_i (−1)^i L_{X_i} c(…X̂_i…) + Σ_{i<j} (−1)^{i+j} c([X_i,X_j], …)`
/// on the algebra basis, brackets taken from the structure constants.
pub fn ce_differential(c: &Cochain, alg: &Algebra) -> Result<Cochain, Error> {
    let mut out = Cochain::new(c.spec, c.degree + 1);
    for (tau, v) in &c.values {
        for (sigma, coeff, piece) in alg.coboundary_pieces(tau) {
            let val = match piece {
                Some(a) => v.lie_derivative(alg.field(a))?,
                None => v.clone(),
            };
            out.add_value(&sigma, val.scale(&coeff))?;
        }
    }
    Ok(out)
}

/// The same coboundary formula for a cochain given as a function, evaluated on arbitrary
/// fields with their actual brackets.
pub fn coboundary_on_fields<F>(c: F, xs: &[VectorField]) -> Result<ModuleElement, Error>
where
    F: Fn(&[VectorField]) -> Result<ModuleElement, Error>,
{
    let without = |skip: &[usize]| -> Vec<VectorField> {
        xs.iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, x)| x.clone())
            .collect()
    };
    let mut acc: Option<ModuleElement> = None;
    let mut push = |v: ModuleElement| -> Result<(), Error> {
        acc = Some(match acc.take() {
            Some(a) => a.add(&v)?,
            None => v,
        });
        Ok(())
    };
    for i in 0..xs.len() {
        push(c(&without(&[i]))?.lie_derivative(&xs[i])?.scale(&alt(i)))?;
    }
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let mut args = vec![xs[i].bracket(&xs[j])?];
            args.extend(without(&[i, j]));
            push(c(&args)?.scale(&alt(i + j)))?;
        }
    }
    acc.ok_or_else(|| Error::Arity { expected: 1, got: 0 })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum BlockOrder {
    #[default]
    Lexicographic,
    Reversed,
}

/// Enumerated basis of the degree-`u` cochains of a fixed weight.
#[derive(Clone, Debug)]
pub struct WeightBlock {
    pub spec: ModuleSpec,
    pub degree: usize,
    pub weight: i64,
    pub basis: Vec<(Vec<usize>, ModuleMonomial)>,
    index: HashMap<(Vec<usize>, ModuleMonomial), usize>,
}

impl WeightBlock {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn index_of(&self, tuple: &[usize], mono: &ModuleMonomial) -> Option<usize> {
        self.index.get(&(tuple.to_vec(), mono.clone())).copied()
    }

    /// The cochain with the given coordinates in this block.
    pub fn cochain(&self, coords: &[Rational]) -> Result<Cochain, Error> {
        Cochain::from_coords(
            self.spec,
            self.degree,
            self.basis
                .iter()
                .zip(coords)
                .filter(|(_, c)| !c.is_zero())
                .map(|(b, c)| (b.clone(), c.clone())),
        )
    }
}

/// Module monomials of `L_E`-eigenvalue `lambda`, sorted.
fn module_monomials(spec: &ModuleSpec, lambda: i64) -> Vec<ModuleMonomial> {
    let m = spec.m;
    if spec.species == Species::Function {
        return if lambda < 0 {
            Vec::new()
        } else {
            Monomial::all_of_degree(m, lambda as u32)
                .into_iter()
                .map(ModuleMonomial::function)
                .collect()
        };
    }
    let (src, tgt) = (spec.source_fiber(), spec.target_fiber());
    let shift = tgt.identity_scalar() - src.identity_scalar();
    let orders: Vec<u32> = match spec.level {
        Level::Operator => (0..=spec.k).collect(),
        Level::Symbol => vec![spec.k],
    };
    let mut out = Vec::new();
    for r in orders {
        let xdeg = lambda + r as i64 + shift;
        if xdeg < 0 {
            continue;
        }
        let xs = Monomial::all_of_degree(m, xdeg as u32);
        for deriv in Monomial::all_of_degree(m, r) {
            for target in 0..tgt.dim() {
                for source in 0..src.dim() {
                    for x in &xs {
                        out.push(ModuleMonomial {
                            x: x.clone(),
                            key: OpKey {
                                deriv: deriv.clone(),
                                target,
                                source,
                            },
                        });
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// All `(tuple, monomial)` pairs of cochain weight `w` in degree `u`.
pub fn weight_block(spec: ModuleSpec, u: usize, w: i64, alg: &Algebra, order: BlockOrder) -> Result<WeightBlock, Error> {
    if alg.m() != spec.m {
        return Err(Error::DimensionMismatch {
            expected: spec.m,
            got: alg.m(),
        });
    }
    let mut cache: BTreeMap<i64, Vec<ModuleMonomial>> = BTreeMap::new();
    let mut basis = Vec::new();
    for t in skew_tuples(alg.dim(), u) {
        let lambda = w + alg.weight_of(&t)?;
        let monos = cache.entry(lambda).or_insert_with(|| module_monomials(&spec, lambda));
        basis.extend(monos.iter().map(|mono| (t.clone(), mono.clone())));
    }
    if order == BlockOrder::Reversed {
        basis.reverse();
    }
    let index = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
    Ok(WeightBlock {
        spec,
        degree: u,
        weight: w,
        basis,
        index,
    })
}

/// The weight-zero block of `sl(m+1)` cochains.
pub fn weight_zero_basis(spec: ModuleSpec, u: usize) -> Result<WeightBlock, Error> {
    weight_block(spec, u, 0, &Algebra::sl(spec.m)?, BlockOrder::Lexicographic)
}

/// Matrix of `∂` from `source` (degree `u`) to `target` (degree `u+1`, same weight).
pub fn block_differential(source: &WeightBlock, target: &WeightBlock, alg: &Algebra) -> Result<SparseMatrix, Error> {
    let spec = source.spec;
    let mut monos: Vec<&ModuleMonomial> = source.basis.iter().map(|(_, m)| m).collect();
    monos.sort();
    monos.dedup();
    let lie: HashMap<&ModuleMonomial, Vec<Vec<(ModuleMonomial, Rational)>>> = monos
        .par_iter()
        .map(|mono| {
            let v = ModuleElement::monomial(&spec, (*mono).clone())?;
            let images = alg
                .fields()
                .iter()
                .map(|x| Ok(v.lie_derivative(x)?.coords()))
                .collect::<Result<Vec<_>, Error>>()?;
            Ok((*mono, images))
        })
        .collect::<Result<_, Error>>()?;
    let columns: Vec<Vec<(usize, usize, Rational)>> = source
        .basis
        .par_iter()
        .enumerate()
        .map(|(col, (tau, mono))| {
            let mut out = Vec::new();
            let mut put = |sigma: &[usize], m: &ModuleMonomial, c: Rational| -> Result<(), Error> {
                let row = target.index_of(sigma, m).ok_or_else(|| {
                    Error::Internal(format!("∂ left the weight block at {sigma:?} {m:?}"))
                })?;
                out.push((row, col, c));
                Ok(())
            };
            for (sigma, coeff, piece) in alg.coboundary_pieces(tau) {
                match piece {
                    Some(a) => {
                        for (m2, c2) in &lie[mono][a] {
                            put(&sigma, m2, &coeff * c2)?;
                        }
                    }
                    None => put(&sigma, mono, coeff)?,
                }
            }
            Ok(out)
        })
        .collect::<Result<_, Error>>()?;
    Ok(SparseMatrix::from_triplets(
        target.len(),
        source.len(),
        columns.into_iter().flatten(),
    )?)
}

/// Matrix of `∂_u` on the weight-`w` blocks.
pub fn differential_matrix_at(spec: ModuleSpec, u: usize, w: i64, alg: &Algebra, order: BlockOrder) -> Result<SparseMatrix, Error> {
    let (source, target) = rayon::join(
        || weight_block(spec, u, w, alg, order),
        || weight_block(spec, u + 1, w, alg, order),
    );
    block_differential(&source?, &target?, alg)
}

/// Matrix of `∂_u` on the weight-zero blocks of `sl(m+1)` cochains.
pub fn differential_matrix(spec: ModuleSpec, u: usize) -> Result<SparseMatrix, Error> {
    differential_matrix_at(spec, u, 0, &Algebra::sl(spec.m)?, BlockOrder::Lexicographic)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyData {
    pub spec: ModuleSpec,
    pub degree: usize,
    pub weight: i64,
    pub cochains: usize,
    /// `rank ∂_{u−1}`.
    pub rank_in: usize,
    /// `rank ∂_u`.
    pub rank_out: usize,
    pub dim: usize,
}

/// `dim H^u` on the weight-`w` block.
pub fn cohomology_at(spec: ModuleSpec, u: usize, w: i64, alg: &Algebra, order: BlockOrder) -> Result<CohomologyData, Error> {
    let block = weight_block(spec, u, w, alg, order)?;
    let (rank_in, rank_out) = rayon::join(
        || -> Result<usize, Error> {
            if u == 0 {
                return Ok(0);
            }
            let prev = weight_block(spec, u - 1, w, alg, order)?;
            Ok(exactlinalg::rank(&block_differential(&prev, &block, alg)?))
        },
        || -> Result<usize, Error> {
            let next = weight_block(spec, u + 1, w, alg, order)?;
            Ok(exactlinalg::rank(&block_differential(&block, &next, alg)?))
        },
    );
    let (rank_in, rank_out) = (rank_in?, rank_out?);
    Ok(CohomologyData {
        spec,
        degree: u,
        weight: w,
        cochains: block.len(),
        rank_in,
        rank_out,
        dim: block.len() - rank_out - rank_in,
    })
}

/// `dim H^u(sl(m+1), M)` for the module `spec`.
pub fn cohomology_dim(spec: ModuleSpec, u: usize) -> Result<usize, Error> {
    Ok(cohomology_at(spec, u, 0, &Algebra::sl(spec.m)?, BlockOrder::Lexicographic)?.dim)
}

/// Writes the weight-zero matrices of `∂_{u−1}` (when `u ≥ 1`) and `∂_u` as
/// `{spec}_{degree}.mtx` files.
pub fn dump_matrices(spec: ModuleSpec, u: usize, dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let io_err = |e: io::Error| Error::Internal(format!("writing matrices: {e}"));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let start = u.saturating_sub(1);
    let mut out = Vec::new();
    for d in start..=u {
        let path = dir.join(format!("{}_{}.mtx", spec.label(), d));
        let file = std::fs::File::create(&path).map_err(io_err)?;
        differential_matrix(spec, d)?
            .write_dump(io::BufWriter::new(file))
            .map_err(io_err)?;
        out.push(path);
    }
    Ok(out)
}

fn require_cocycle(c: &Cochain, alg: &Algebra) -> Result<(), Error> {
    if ce_differential(c, alg)?.is_zero() {
        Ok(())
    } else {
        Err(Error::NotCocycle)
    }
}

/// Linear system `Σ λ_i g_i + ∂b = c` over the weights involved.
struct ClassSystem {
    matrix: SparseMatrix,
    rhs: Vec<Rational>,
    gens: usize,
    prev_blocks: Vec<WeightBlock>,
}

fn class_system(c: &Cochain, gens: &[Cochain], alg: &Algebra) -> Result<ClassSystem, Error> {
    let spec = c.spec;
    let u = c.degree;
    let mut weights = c.weights(alg)?;
    for g in gens {
        if g.spec != spec || g.degree != u {
            return Err(Error::ModuleMismatch("generator of a different shape".into()));
        }
        weights.extend(g.weights(alg)?);
    }
    let mut blocks = Vec::new();
    let mut prev_blocks = Vec::new();
    for &w in &weights {
        blocks.push(weight_block(spec, u, w, alg, BlockOrder::Lexicographic)?);
        prev_blocks.push(weight_block(spec, u - 1, w, alg, BlockOrder::Lexicographic)?);
    }
    let row_offsets: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.len();
            Some(o)
        })
        .collect();
    let rows = blocks.iter().map(WeightBlock::len).sum();
    let locate = |t: &[usize], mono: &ModuleMonomial| -> Result<usize, Error> {
        blocks
            .iter()
            .zip(&row_offsets)
            .find_map(|(b, o)| b.index_of(t, mono).map(|i| i + o))
            .ok_or_else(|| Error::Internal("coordinate outside every weight block".into()))
    };
    let mut triplets = Vec::new();
    for (col, g) in gens.iter().enumerate() {
        for ((t, mono), v) in g.coords() {
            triplets.push((locate(&t, &mono)?, col, v));
        }
    }
    let mut col_offset = gens.len();
    for ((b, prev), ro) in blocks.iter().zip(&prev_blocks).zip(&row_offsets) {
        let d = block_differential(prev, b, alg)?;
        triplets.extend(d.entries().map(|(r, cc, v)| (r + ro, cc + col_offset, v.clone())));
        col_offset += prev.len();
    }
    let mut rhs = vec![Rational::zero(); rows];
    for ((t, mono), v) in c.coords() {
        rhs[locate(&t, &mono)?] = v;
    }
    Ok(ClassSystem {
        matrix: SparseMatrix::from_triplets(rows, col_offset, triplets)?,
        rhs,
        gens: gens.len(),
        prev_blocks,
    })
}

fn witness_from(sol: &[Rational], sys: &ClassSystem, spec: ModuleSpec, degree: usize) -> Result<Cochain, Error> {
    let mut coords = Vec::new();
    let mut off = sys.gens;
    for b in &sys.prev_blocks {
        for (i, key) in b.basis.iter().enumerate() {
            let v = &sol[off + i];
            if !v.is_zero() {
                coords.push((key.clone(), v.clone()));
            }
        }
        off += b.len();
    }
    Cochain::from_coords(spec, degree, coords)
}

/// A primitive `b` with `∂b = c`, if one exists.
pub fn is_coboundary(c: &Cochain, alg: &Algebra) -> Result<Option<Cochain>, Error> {
    if c.degree == 0 {
        return Err(Error::InvalidSpec("coboundaries start in degree 1".into()));
    }
    require_cocycle(c, alg)?;
    let sys = class_system(c, &[], alg)?;
    match exactlinalg::solve(&sys.matrix, &sys.rhs)? {
        Some(sol) => Ok(Some(witness_from(&sol, &sys, c.spec, c.degree - 1)?)),
        None => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCoordinates {
    pub coordinates: Vec<Rational>,
    pub witness: Cochain,
}

/// Writes `c = Σ λ_i g_i + ∂b` and returns the `λ_i` with a witness `b`; `None` when the
/// class of `c` is outside the span of the generators' classes.
pub fn class_coordinates(c: &Cochain, gens: &[Cochain], alg: &Algebra) -> Result<Option<ClassCoordinates>, Error> {
    if c.degree == 0 {
        return Err(Error::InvalidSpec("class coordinates need degree at least 1".into()));
    }
    require_cocycle(c, alg)?;
    for g in gens {
        require_cocycle(g, alg)?;
    }
    let sys = class_system(c, gens, alg)?;
    let Some(sol) = exactlinalg::solve(&sys.matrix, &sys.rhs)? else {
        return Ok(None);
    };
    let full = exactlinalg::rank(&sys.matrix);
    let cob_cols: Vec<Vec<(usize, Rational)>> = sys
        .matrix
        .transpose()
        .entries()
        .filter(|(c, _, _)| *c >= sys.gens)
        .fold(vec![Vec::new(); sys.matrix.cols() - sys.gens], |mut acc, (c, r, v)| {
            acc[c - sys.gens].push((r, v.clone()));
            acc
        });
    let cob = SparseMatrix::from_triplets(
        sys.matrix.rows(),
        cob_cols.len(),
        cob_cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v.clone()))),
    )?;
    if full - exactlinalg::rank(&cob) != sys.gens {
        return Err(Error::Internal("generators are dependent modulo coboundaries".into()));
    }
    Ok(Some(ClassCoordinates {
        coordinates: sol[..sys.gens].to_vec(),
        witness: witness_from(&sol, &sys, c.spec, c.degree - 1)?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::divergence_operator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mv(m: usize, p: usize, q: usize, k: u32) -> ModuleSpec {
        ModuleSpec::operator(m, Species::Multivector, p, q, k).unwrap()
    }

    #[test]
    fn zero_cochain_differential_is_the_action() {
        let alg = Algebra::sl(2).unwrap();
        let spec = ModuleSpec::functions(2);
        let mut b = Cochain::new(spec, 0);
        b.add_value(&[], ModuleElement::Function(Poly::parse(2, "x1 x2").unwrap())).unwrap();
        let db = ce_differential(&b, &alg).unwrap();
        for a in 0..alg.dim() {
            assert_eq!(
                db.eval(&[a]),
                ModuleElement::Function(alg.field(a).apply(&Poly::parse(2, "x1 x2").unwrap()))
            );
        }
    }

    #[test]
    fn divergence_is_a_cocycle() {
        let alg = Algebra::sl(2).unwrap();
        let spec = ModuleSpec::functions(2);
        let div = |xs: &[VectorField]| Ok(ModuleElement::Function(xs[0].trace_div()));
        let c = cochain_on_basis(spec, 1, &alg, div).unwrap();
        assert!(!c.is_zero());
        assert!(ce_differential(&c, &alg).unwrap().is_zero());
        let x = VectorField::parse(2, "x1 x2 d1").unwrap();
        let y = VectorField::parse(2, "x2^2 d2").unwrap();
        assert!(coboundary_on_fields(div, &[x, y]).unwrap().is_zero());
    }

    #[test]
    fn d_squared_vanishes_on_random_operators() {
        let alg = Algebra::sl(2).unwrap();
        let spec = mv(2, 1, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let coords: Vec<_> = module_monomials(&spec, 0)
                .into_iter()
                .chain(module_monomials(&spec, 1))
                .map(|mono| (mono, rat(rand::Rng::gen_range(&mut rng, -3..=3))))
                .collect();
            let mut b = Cochain::new(spec, 0);
            b.add_value(&[], ModuleElement::from_coords(&spec, coords).unwrap()).unwrap();
            let db = ce_differential(&b, &alg).unwrap();
            assert!(ce_differential(&db, &alg).unwrap().is_zero());
        }
    }

    #[test]
    fn module_weight_examples() {
        let f = ModuleSpec::functions(2);
        assert_eq!(module_weight(&f, &ModuleElement::Function(Poly::one(2))).unwrap(), 0);
        let s = ModuleSpec::operator(2, Species::Multivector, 2, 1, 2).unwrap();
        for mono in module_monomials(&s, 1).into_iter().chain(module_monomials(&s, -1)) {
            let v = ModuleElement::monomial(&s, mono.clone()).unwrap();
            assert_eq!(module_weight(&s, &v).unwrap(), mono.weight(&s));
        }
        let two = ModuleElement::Function(Poly::parse(2, "x1 + x2^2").unwrap());
        assert!(matches!(module_weight(&f, &two), Err(Error::NotPure(_))));
    }

    #[test]
    fn weight_zero_block_sizes() {
        assert_eq!(weight_zero_basis(ModuleSpec::functions(2), 0).unwrap().len(), 1);
        assert_eq!(weight_zero_basis(mv(2, 1, 1, 0), 0).unwrap().len(), 4);
        assert!(!weight_zero_basis(mv(2, 1, 1, 1), 1).unwrap().is_empty());
        assert!(weight_zero_basis(mv(2, 2, 1, 0), 0).unwrap().is_empty());
    }

    #[test]
    fn differential_matrices_compose_to_zero() {
        for spec in [ModuleSpec::functions(2), mv(2, 1, 1, 1), mv(2, 2, 1, 0)] {
            for u in 0..2 {
                let d0 = differential_matrix(spec, u).unwrap();
                let d1 = differential_matrix(spec, u + 1).unwrap();
                for c in 0..d0.cols() {
                    let mut e = vec![Rational::zero(); d0.cols()];
                    e[c] = rat(1);
                    let v = d0.mul_vec(&e).unwrap();
                    assert!(d1.mul_vec(&v).unwrap().iter().all(Zero::is_zero));
                }
            }
        }
        assert_eq!(exactlinalg::rank(&differential_matrix(ModuleSpec::functions(2), 0).unwrap()), 0);
    }

    #[test]
    fn matrix_columns_agree_with_cochain_differential() {
        let alg = Algebra::sl(2).unwrap();
        let spec = mv(2, 1, 0, 1);
        let src = weight_block(spec, 1, 0, &alg, BlockOrder::Lexicographic).unwrap();
        let tgt = weight_block(spec, 2, 0, &alg, BlockOrder::Lexicographic).unwrap();
        let d = block_differential(&src, &tgt, &alg).unwrap();
        for col in (0..src.len()).step_by(7) {
            let mut e = vec![Rational::zero(); src.len()];
            e[col] = rat(1);
            let want = ce_differential(&src.cochain(&e).unwrap(), &alg).unwrap();
            let got = tgt.cochain(&d.mul_vec(&e).unwrap()).unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn cohomology_examples() {
        for k in 0..=2 {
            assert_eq!(cohomology_dim(mv(2, 1, 1, k), 0).unwrap(), 1);
        }
        assert_eq!(cohomology_dim(mv(2, 1, 1, 1), 1).unwrap(), 1);
        assert_eq!(cohomology_dim(mv(2, 2, 1, 0), 1).unwrap(), 1);
        assert_eq!(cohomology_dim(mv(2, 2, 1, 1), 1).unwrap(), 0);
    }

    #[test]
    fn from_fields_recovers_structure() {
        let sl = Algebra::sl(2).unwrap();
        let alg = Algebra::from_fields(sl.fields().to_vec()).unwrap();
        for a in 0..sl.dim() {
            for b in 0..sl.dim() {
                assert_eq!(sl.bracket(a, b), alg.bracket(a, b));
            }
        }
        let open = vec![VectorField::parse(2, "1 d1").unwrap(), VectorField::parse(2, "x1^2 d1").unwrap()];
        assert!(Algebra::from_fields(open).is_err());
    }

    #[test]
    fn coboundary_witnesses() {
        let alg = Algebra::sl(2).unwrap();
        let spec = mv(2, 1, 0, 1);
        let div = divergence_operator(2, 1, 1).unwrap();
        // c(X) = L_X(div) is a coboundary by construction
        let mut b = Cochain::new(spec, 0);
        b.add_value(&[], ModuleElement::Operator(div)).unwrap();
        let c = ce_differential(&b, &alg).unwrap();
        let w = is_coboundary(&c, &alg).unwrap().expect("witness");
        assert_eq!(ce_differential(&w, &alg).unwrap(), c);

        // tr(DX)·id is not
        let sid = mv(2, 1, 1, 1);
        let id = DiffOp::identity(sid).unwrap();
        let c = cochain_on_basis(sid, 1, &alg, |xs| Ok(ModuleElement::Operator(id.mul_poly(&xs[0].trace_div())))).unwrap();
        assert!(is_coboundary(&c, &alg).unwrap().is_none());

        let gens = [c.clone()];
        let shifted = c.add(&ce_differential(&b_of(sid), &alg).unwrap()).unwrap();
        let cc = class_coordinates(&shifted, &gens, &alg).unwrap().unwrap();
        assert_eq!(cc.coordinates, vec![rat(1)]);
        assert_eq!(
            shifted.sub(&c).unwrap(),
            ce_differential(&cc.witness, &alg).unwrap()
        );
    }

    fn b_of(spec: ModuleSpec) -> Cochain {
        let mut b = Cochain::new(spec, 0);
        let op = DiffOp::multiplication(spec, &Poly::parse(spec.m, "x1 x2 + 2 * x2").unwrap());
        b.add_value(&[], ModuleElement::Operator(op)).unwrap();
        b
    }

    #[test]
    fn not_cocycle_is_rejected() {
        let alg = Algebra::sl(2).unwrap();
        let spec = ModuleSpec::functions(2);
        let mut c = Cochain::new(spec, 1);
        c.add_value(&[0], ModuleElement::Function(Poly::one(2))).unwrap();
        assert_eq!(is_coboundary(&c, &alg), Err(Error::NotCocycle));
    }
}
