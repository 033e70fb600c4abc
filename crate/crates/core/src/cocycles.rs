//! The `χ` map from `gl(m)`-data to `sl(m+1)`-cochains, the invariant families
//! `I₀, I₁, J₀, J₁`, the named first-order cocycles built from the divergence, and the
//! connecting-homomorphism constant of the symbol sequence
//! `0 → D^{k−1} → D^k → S^k → 0` at `k = 1`.
//!
//! `χ(γ⊗F)(X_0, …, X_{n−1}) = (−1)^t / (t! u! (m+1)^u) · Σ_ν sign(ν)
//! γ(DX_{ν_0}, …, DX_{ν_{t−1}}) · F(d tr DX_{ν_t}, …, d tr DX_{ν_{n−1}})`,
//! with `γ` of degree `t` on `gl(m)` and `F` alternating in `u` covectors. Both slots are
//! expanded multilinearly on the basis `E^i_j` (local index `i·m + j`) and `e^l`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cecomplex::{
    ce_differential, class_coordinates, coboundary_on_fields, cochain_on_basis, is_coboundary, Algebra, Cochain,
    ModuleElement,
};
use crate::diffops::{DiffOp, Field, Level, ModuleSpec, Species, SymbolTensor};
use crate::exactlinalg::{rat, Rational};
use crate::polyfields::{Monomial, Poly, VectorField};
use crate::tensorfields::{dtr, interior_covector, sort_with_sign, wedge, Covector, PolyForm};
use crate::Error;

/// The `gl(m)`-invariant forms used as `γ`: the constant `1` and the trace.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum GlForm {
    One,
    Trace,
}

impl GlForm {
    pub fn degree(self) -> usize {
        match self {
            GlForm::One => 0,
            GlForm::Trace => 1,
        }
    }

    pub fn from_degree(a: usize) -> Result<Self, Error> {
        match a {
            0 => Ok(GlForm::One),
            1 => Ok(GlForm::Trace),
            _ => Err(Error::InvalidSpec(format!("no invariant form of degree {a} is provided"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Invariant {
    /// `T ↦ ι_{α_1} ⋯ ι_{α_r} T`
    I0,
    /// `T ↦ ι_η ι_{α_1} ⋯ ι_{α_r} T`
    I1,
    /// `ω ↦ α_1 ∧ ⋯ ∧ α_r ∧ ω`
    J0,
    /// `ω ↦ η ∧ α_1 ∧ ⋯ ∧ α_r ∧ ω`
    J1,
}

impl Invariant {
    pub fn species(self) -> Species {
        match self {
            Invariant::I0 | Invariant::I1 => Species::Multivector,
            Invariant::J0 | Invariant::J1 => Species::Form,
        }
    }

    pub fn eta_degree(self) -> u32 {
        match self {
            Invariant::I0 | Invariant::J0 => 0,
            Invariant::I1 | Invariant::J1 => 1,
        }
    }

    /// Number of covector arguments for `Λ^p → Λ^q` (or `Ω_p → Ω_q`).
    pub fn arity(self, p: usize, q: usize) -> Result<usize, Error> {
        let (hi, lo) = match self.species() {
            Species::Multivector => (p, q),
            _ => (q, p),
        };
        let need = self.eta_degree() as usize;
        if hi < lo + need {
            return Err(Error::IncompatibleFamily(format!("{self:?} needs p = {p}, q = {q} further apart")));
        }
        Ok(hi - lo - need)
    }

    pub fn spec(self, m: usize, p: usize, q: usize) -> Result<ModuleSpec, Error> {
        ModuleSpec::symbol(m, self.species(), p, q, self.eta_degree())
    }
}

/// `I₀` or `I₁` at the given covectors.
#[allow(non_snake_case)]
pub fn invariant_I(variant: Invariant, m: usize, p: usize, q: usize, alphas: &[Covector]) -> Result<SymbolTensor, Error> {
    if variant.species() != Species::Multivector {
        return Err(Error::IncompatibleFamily(format!("{variant:?} acts on forms")));
    }
    invariant(variant, m, p, q, alphas)
}

/// `J₀` or `J₁` at the given covectors.
#[allow(non_snake_case)]
pub fn invariant_J(variant: Invariant, m: usize, p: usize, q: usize, alphas: &[Covector]) -> Result<SymbolTensor, Error> {
    if variant.species() != Species::Form {
        return Err(Error::IncompatibleFamily(format!("{variant:?} acts on multivectors")));
    }
    invariant(variant, m, p, q, alphas)
}

fn invariant(variant: Invariant, m: usize, p: usize, q: usize, alphas: &[Covector]) -> Result<SymbolTensor, Error> {
    let arity = variant.arity(p, q)?;
    if alphas.len() != arity {
        return Err(Error::Arity {
            expected: arity,
            got: alphas.len(),
        });
    }
    if alphas.iter().any(|a| a.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: alphas.iter().map(Covector::dim).find(|d| *d != m).unwrap(),
        });
    }
    let spec = variant.spec(m, p, q)?;
    let etas: Vec<Monomial> = match variant.eta_degree() {
        0 => vec![Monomial::one(m)],
        _ => (0..m).map(|l| Monomial::unit(m, l)).collect(),
    };
    let eta_covector = |eta: &Monomial| -> Option<Covector> {
        eta.0.iter().position(|e| *e == 1).map(|l| Covector::basis(m, l))
    };
    SymbolTensor::from_images(spec, &etas, |eta, basis| {
        let mut list: Vec<Covector> = eta_covector(eta).into_iter().collect();
        list.extend(alphas.iter().cloned());
        match basis {
            Field::Multivector(t) => {
                let mut t = t;
                for a in list.iter().rev() {
                    t = interior_covector(a, &t)?;
                }
                Ok(Field::Multivector(t))
            }
            Field::Form(w) => {
                let mut w = w;
                for a in list.iter().rev() {
                    w = wedge(&a.to_form(), &w)?;
                }
                Ok(Field::Form(w))
            }
            Field::Function(_) => Err(Error::IncompatibleFamily("invariants act on tensor fields".into())),
        }
    })
}

/// Element of `Λ^t gl(m)* ⊗ Λ^u(ℝᵐ*, V)` with `V` a space of constant symbols, stored on
/// increasing index tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GlCochain {
    m: usize,
    t: usize,
    u: usize,
    value_spec: ModuleSpec,
    values: BTreeMap<(Vec<usize>, Vec<usize>), SymbolTensor>,
}

impl GlCochain {
    pub fn new(m: usize, t: usize, u: usize, value_spec: ModuleSpec) -> Self {
        GlCochain {
            m,
            t,
            u,
            value_spec: value_spec.with_level(Level::Symbol),
            values: BTreeMap::new(),
        }
    }

    /// `γ ⊗ F` for an invariant form `γ` and an invariant family `F`.
    pub fn tensor(gamma: GlForm, family: Invariant, m: usize, p: usize, q: usize) -> Result<Self, Error> {
        let u = family.arity(p, q)?;
        let mut out = GlCochain::new(m, gamma.degree(), u, family.spec(m, p, q)?);
        let gl_tuples: Vec<Vec<usize>> = match gamma {
            GlForm::One => vec![Vec::new()],
            GlForm::Trace => (0..m).map(|i| vec![i * m + i]).collect(),
        };
        for cov in crate::tensorfields::skew_tuples(m, u) {
            let alphas: Vec<Covector> = cov.iter().map(|l| Covector::basis(m, *l)).collect();
            let v = invariant(family, m, p, q, &alphas)?;
            for gl in &gl_tuples {
                out.insert(gl, &cov, v.clone())?;
            }
        }
        Ok(out)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn u(&self) -> usize {
        self.u
    }

    pub fn value_spec(&self) -> &ModuleSpec {
        &self.value_spec
    }

    pub fn insert(&mut self, gl: &[usize], cov: &[usize], v: SymbolTensor) -> Result<(), Error> {
        if gl.len() != self.t || cov.len() != self.u {
            return Err(Error::Arity {
                expected: self.t + self.u,
                got: gl.len() + cov.len(),
            });
        }
        let bad = || Error::InvalidSpec("repeated argument in alternating cochain".into());
        let (g, sg) = sort_with_sign(gl.to_vec()).ok_or_else(bad)?;
        let (c, sc) = sort_with_sign(cov.to_vec()).ok_or_else(bad)?;
        if !v.is_zero() {
            self.values.insert((g, c), v.scale(&rat(sg * sc)));
        }
        Ok(())
    }

    pub fn value(&self, gl: &[usize], cov: &[usize]) -> Option<SymbolTensor> {
        let (g, sg) = sort_with_sign(gl.to_vec())?;
        let (c, sc) = sort_with_sign(cov.to_vec())?;
        self.values.get(&(g, c)).map(|v| v.scale(&rat(sg * sc)))
    }
}

/// Permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let s = sort_with_sign(p.clone()).expect("permutation").1;
            (p, s)
        })
        .collect()
}

fn factorial(n: usize) -> Rational {
    (1..=n as i64).fold(Rational::one(), |acc, k| acc * rat(k))
}

/// Evaluates `χ(γ)` on `t + u` vector fields; the result is a symbol with polynomial
/// coefficients.
pub fn chi(g: &GlCochain, xs: &[VectorField]) -> Result<SymbolTensor, Error> {
    let n = g.t + g.u;
    if xs.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: xs.len(),
        });
    }
    let m = g.m;
    // (local index, coefficient) expansions of DX and d tr DX
    let gl_args: Vec<Vec<(usize, Poly)>> = xs
        .iter()
        .map(|x| {
            let dx = x.jacobian();
            (0..m * m)
                .map(|idx| (idx, dx.get(idx / m, idx % m).clone()))
                .filter(|(_, f)| !f.is_zero())
                .collect()
        })
        .collect();
    let cov_args: Vec<Vec<(usize, Poly)>> = xs
        .iter()
        .map(|x| {
            let w = dtr(x);
            (0..m)
                .map(|l| (l, w.component(&[l])))
                .filter(|(_, f)| !f.is_zero())
                .collect()
        })
        .collect();

    let mut acc = SymbolTensor::zero(g.value_spec);
    for (perm, sign) in permutations(n) {
        let slots: Vec<&Vec<(usize, Poly)>> = perm
            .iter()
            .enumerate()
            .map(|(s, &i)| if s < g.t { &gl_args[i] } else { &cov_args[i] })
            .collect();
        let mut choice = vec![0usize; n];
        'outer: loop {
            if slots.iter().all(|s| !s.is_empty()) {
                let idx: Vec<usize> = (0..n).map(|s| slots[s][choice[s]].0).collect();
                if let Some(v) = g.value(&idx[..g.t], &idx[g.t..]) {
                    let coeff = (0..n).fold(Poly::constant(m, rat(sign)), |f, s| &f * &slots[s][choice[s]].1);
                    acc = acc.add(&v.mul_poly(&coeff));
                }
            } else {
                break;
            }
            for s in (0..n).rev() {
                choice[s] += 1;
                if choice[s] < slots[s].len() {
                    continue 'outer;
                }
                choice[s] = 0;
            }
            break;
        }
    }
    let sign = if g.t % 2 == 0 { rat(1) } else { rat(-1) };
    let norm = sign / (factorial(g.t) * factorial(g.u) * num_traits::pow(rat(m as i64 + 1), g.u));
    Ok(acc.scale(&norm))
}

/// `χ(γ)` tabulated on the algebra basis, as a symbol-valued cochain.
pub fn chi_cochain(g: &GlCochain, alg: &Algebra) -> Result<Cochain, Error> {
    cochain_on_basis(g.value_spec, g.t + g.u, alg, |xs| Ok(ModuleElement::Symbol(chi(g, xs)?)))
}

/// Replaces every symbol value by its lift (same coefficients, `∂` for `η`).
pub fn lift_cochain(c: &Cochain) -> Result<Cochain, Error> {
    let spec = c.spec().with_level(Level::Operator);
    let mut out = Cochain::new(spec, c.degree());
    for (t, v) in c.values() {
        let ModuleElement::Symbol(s) = v else {
            return Err(Error::ModuleMismatch("lifting needs a symbol-valued cochain".into()));
        };
        out.add_value(t, ModuleElement::Operator(s.lift()))?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvarianceReport {
    /// First traceless generator of `gl(m)` that moves the family, if any.
    pub violation: Option<String>,
    /// Scalar by which the identity matrix acts, when it acts by a scalar.
    pub trace_scalar: Option<Rational>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks `sl(m)`-invariance of an alternating family `F(α_1, …, α_r)` of constant
/// symbols: for the linear field `X_A = A^i_j x^j ∂_i`,
/// `L_{X_A}(F(α…)) − Σ_i F(…, L_{X_A} α_i, …)` must vanish for traceless `A`.
pub fn verify_invariance<F>(m: usize, arity: usize, family: F) -> Result<InvarianceReport, Error>
where
    F: Fn(&[Covector]) -> Result<SymbolTensor, Error>,
{
    let linear = |a: &dyn Fn(usize, usize) -> Rational| -> VectorField {
        let comps = (0..m)
            .map(|i| (0..m).fold(Poly::zero(m), |f, j| f + Poly::var(m, j).scale(&a(i, j))))
            .collect();
        VectorField::new(comps).expect("dimension")
    };
    let act = |x: &VectorField, alphas: &[Covector]| -> Result<SymbolTensor, Error> {
        let mut out = family(alphas)?.lie_derivative(x)?;
        for i in 0..alphas.len() {
            let moved = alphas[i].to_form().lie_derivative(x)?;
            let moved = Covector((0..m).map(|l| moved.component(&[l]).constant_term()).collect());
            let mut args = alphas.to_vec();
            args[i] = moved;
            out = out.sub(&family(&args)?);
        }
        Ok(out)
    };
    let tuples: Vec<Vec<Covector>> = crate::tensorfields::skew_tuples(m, arity)
        .into_iter()
        .map(|t| t.iter().map(|l| Covector::basis(m, *l)).collect())
        .collect();
    let mut generators: Vec<(String, VectorField)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                generators.push((
                    format!("E^{}_{}", i + 1, j + 1),
                    linear(&|r, c| if (r, c) == (i, j) { rat(1) } else { rat(0) }),
                ));
            }
        }
    }
    for i in 0..m - 1 {
        generators.push((
            format!("E^{0}_{0} - E^{1}_{1}", i + 1, i + 2),
            linear(&|r, c| match (r == c, r) {
                (true, r) if r == i => rat(1),
                (true, r) if r == i + 1 => rat(-1),
                _ => rat(0),
            }),
        ));
    }
    let mut violation = None;
    'gens: for (name, x) in &generators {
        for t in &tuples {
            if !act(x, t)?.is_zero() {
                violation = Some(name.clone());
                break 'gens;
            }
        }
    }
    let id = linear(&|r, c| if r == c { rat(1) } else { rat(0) });
    let mut scalar: Option<Option<Rational>> = None;
    for t in &tuples {
        let base = family(t)?;
        let moved = act(&id, t)?;
        let lambda = match base.terms().next() {
            Some((key, f)) => {
                let g = moved.terms().find(|(k2, _)| *k2 == key).map(|(_, g)| g.constant_term());
                g.unwrap_or_else(Rational::zero) / f.constant_term()
            }
            None => continue,
        };
        let ok = moved == base.scale(&lambda);
        scalar = match scalar {
            None if ok => Some(Some(lambda)),
            Some(Some(prev)) if ok && prev == lambda => Some(Some(prev)),
            _ => Some(None),
        };
    }
    Ok(InvarianceReport {
        violation,
        trace_scalar: scalar.flatten(),
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum CocycleTag {
    /// `X ↦ tr DX` in functions.
    Div,
    /// `ω ↦ tr(DX) ω`
    C0,
    /// `ω ↦ tr(DX) dω`
    C01,
    /// `ω ↦ d tr(DX) ∧ ω`
    C10,
    /// `ω ↦ d tr(DX) ∧ dω`
    C2,
    /// `T ↦ ι_{d tr DX} T`
    IotaDc,
    /// `tr(DX) · id`
    IdTimes,
}

impl CocycleTag {
    pub const ALL: [CocycleTag; 7] = [
        CocycleTag::Div,
        CocycleTag::C0,
        CocycleTag::C01,
        CocycleTag::C10,
        CocycleTag::C2,
        CocycleTag::IotaDc,
        CocycleTag::IdTimes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CocycleTag::Div => "div",
            CocycleTag::C0 => "c0",
            CocycleTag::C01 => "c01",
            CocycleTag::C10 => "c10",
            CocycleTag::C2 => "c2",
            CocycleTag::IotaDc => "iota_dc",
            CocycleTag::IdTimes => "id_times",
        }
    }
}

impl fmt::Display for CocycleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CocycleTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "iota" {
            return Ok(CocycleTag::IotaDc);
        }
        CocycleTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown cocycle family `{s}`")))
    }
}

/// A named cocycle together with the module it takes values in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NamedCocycleFamily {
    pub tag: CocycleTag,
    pub spec: ModuleSpec,
}

impl NamedCocycleFamily {
    pub fn new(tag: CocycleTag, spec: ModuleSpec) -> Result<Self, Error> {
        let (sp, p, q, k) = (spec.species, spec.p, spec.q, spec.k);
        let ok = spec.level == Level::Operator
            && match tag {
                CocycleTag::Div => sp == Species::Function,
                CocycleTag::IdTimes => sp != Species::Function && p == q,
                CocycleTag::IotaDc => sp == Species::Multivector && p == q + 1,
                CocycleTag::C0 => sp == Species::Form && p == q,
                CocycleTag::C01 => sp == Species::Form && q == p + 1 && k >= 1,
                CocycleTag::C10 => sp == Species::Form && q == p + 1,
                CocycleTag::C2 => sp == Species::Form && q == p + 2 && k >= 1,
            };
        if !ok {
            let need = match tag {
                CocycleTag::Div => "the function module",
                CocycleTag::IdTimes => "p = q",
                CocycleTag::IotaDc => "multivectors with p = q + 1",
                CocycleTag::C0 => "forms with p = q",
                CocycleTag::C01 => "forms with q = p + 1 and k ≥ 1",
                CocycleTag::C10 => "forms with q = p + 1",
                CocycleTag::C2 => "forms with q = p + 2 and k ≥ 1",
            };
            return Err(Error::IncompatibleFamily(format!("{tag} needs {need}, got {spec}")));
        }
        Ok(NamedCocycleFamily { tag, spec })
    }

    /// The operator the family attaches to a function `g` in place of `tr DX`.
    pub fn operator_for(&self, g: &Poly) -> Result<ModuleElement, Error> {
        let spec = self.spec;
        let m = spec.m;
        let zero = [Monomial::one(m)];
        let first: Vec<Monomial> = (0..m).map(|a| Monomial::unit(m, a)).collect();
        let dg = PolyForm::differential(g);
        let form = |f: Field| match f {
            Field::Form(w) => Ok(w),
            _ => Err(Error::Internal("expected a form".into())),
        };
        let op = match self.tag {
            CocycleTag::Div => return Ok(ModuleElement::Function(g.clone())),
            CocycleTag::C0 | CocycleTag::IdTimes => DiffOp::multiplication(spec, g),
            CocycleTag::C01 => DiffOp::from_images(spec, &first, |d, w| {
                let a = d.0.iter().position(|e| *e == 1).unwrap();
                Ok(Field::Form(wedge(&Covector::basis(m, a).to_form(), &form(w)?)?.mul_poly(g)))
            })?,
            CocycleTag::C10 => DiffOp::from_images(spec, &zero, |_, w| Ok(Field::Form(wedge(&dg, &form(w)?)?)))?,
            CocycleTag::C2 => DiffOp::from_images(spec, &first, |d, w| {
                let a = d.0.iter().position(|e| *e == 1).unwrap();
                let dw = wedge(&Covector::basis(m, a).to_form(), &form(w)?)?;
                Ok(Field::Form(wedge(&dg, &dw)?))
            })?,
            CocycleTag::IotaDc => DiffOp::from_images(spec, &zero, |_, t| match t {
                Field::Multivector(t) => Ok(Field::Multivector(crate::tensorfields::interior_product(&dg, &t)?)),
                _ => Err(Error::Internal("expected a multivector".into())),
            })?,
        };
        Ok(ModuleElement::Operator(op))
    }

    /// `c(X)`.
    pub fn eval(&self, x: &VectorField) -> Result<ModuleElement, Error> {
        self.operator_for(&x.trace_div())
    }

    /// The cocycle tabulated on the algebra basis.
    pub fn cochain(&self, alg: &Algebra) -> Result<Cochain, Error> {
        cochain_on_basis(self.spec, 1, alg, |xs| self.eval(&xs[0]))
    }
}

/// `c(X)` for a named family.
pub fn named_cocycle(fam: &NamedCocycleFamily, x: &VectorField) -> Result<ModuleElement, Error> {
    fam.eval(x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleReport {
    pub basis_pairs: usize,
    pub random_pairs: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Seeded random pairs of fields with components of degree at most `max_deg`.
pub fn random_pairs(m: usize, trials: usize, max_deg: u32, seed: u64) -> Vec<(VectorField, VectorField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            (
                VectorField::random(m, max_deg, &mut rng),
                VectorField::random(m, max_deg, &mut rng),
            )
        })
        .collect()
}

/// `L_X c(Y) − L_Y c(X) − c([X, Y]) = 0` on every `sl(m+1)` basis pair and on `trials`
/// seeded random pairs.
pub fn verify_cocycle(fam: &NamedCocycleFamily, trials: usize, max_deg: u32, seed: u64) -> Result<CocycleReport, Error> {
    let alg = Algebra::sl(fam.spec.m)?;
    let mut pairs = Vec::new();
    for a in 0..alg.dim() {
        for b in a + 1..alg.dim() {
            pairs.push((alg.field(a).clone(), alg.field(b).clone()));
        }
    }
    let basis_pairs = pairs.len();
    pairs.extend(random_pairs(fam.spec.m, trials, max_deg, seed));
    let results: Vec<bool> = pairs
        .par_iter()
        .map(|(x, y)| Ok(coboundary_on_fields(|xs| fam.eval(&xs[0]), &[x.clone(), y.clone()])?.is_zero()))
        .collect::<Result<_, Error>>()?;
    let failures = results.iter().filter(|ok| !**ok).count();
    let first_failure = results.iter().position(|ok| !ok).map(|i| {
        let (x, y) = &pairs[i];
        format!("X = {x}, Y = {y}")
    });
    Ok(CocycleReport {
        basis_pairs,
        random_pairs: trials,
        failures,
        first_failure,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub trials: usize,
    pub failures: usize,
    /// Whether the cocycle, tabulated on `sl(m+1)`, is found to be a coboundary.
    pub sl_coboundary: bool,
}

/// `∂(T ↦ Σ_i ι_{dx^i} ∂_i T)(X) = ι_{d tr DX}` on seeded random fields, as operators of
/// order at most 1 from `Λ^{q+1}` to `Λ^q`.
pub fn verify_iota_witness(m: usize, q: usize, trials: usize, max_deg: u32, seed: u64) -> Result<WitnessReport, Error> {
    let witness = crate::diffops::divergence_operator(m, q + 1, 1)?;
    let fam = NamedCocycleFamily::new(CocycleTag::IotaDc, *witness.spec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<VectorField> = (0..trials).map(|_| VectorField::random(m, max_deg, &mut rng)).collect();
    let failures = xs
        .par_iter()
        .map(|x| Ok(ModuleElement::Operator(witness.lie_derivative(x)?) != fam.eval(x)?))
        .collect::<Result<Vec<bool>, Error>>()?
        .into_iter()
        .filter(|bad| *bad)
        .count();
    let alg = Algebra::sl(m)?;
    let sl_coboundary = is_coboundary(&fam.cochain(&alg)?, &alg)?.is_some();
    Ok(WitnessReport {
        trials,
        failures,
        sl_coboundary,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaReport {
    /// `λ` with `∂ lift χ(γ⊗I₁) = λ χ(γ⊗I₀)` modulo coboundaries.
    pub value: Rational,
    /// The same constant read off at `x = 0` on covector (and identity) arguments.
    pub at_origin: Rational,
    /// For each `i`, the multiple of `I₀(α_0, …)` given by
    /// `(−1)^i L_{α_i*} I₁(…α̂_i…)` at `x = 0`; empty for forms.
    pub per_term: Vec<Rational>,
}

/// Connecting-homomorphism constant for `γ` of degree `a` (`γ = 1` or the trace).
/// Multivectors need `p > q` and use `I₁ → I₀`; forms need `q > p` and use `J₁ → J₀`.
pub fn theta_constant(m: usize, p: usize, q: usize, a: usize, species: Species) -> Result<ThetaReport, Error> {
    let gamma = GlForm::from_degree(a)?;
    let (top, bottom) = match species {
        Species::Multivector => (Invariant::I1, Invariant::I0),
        Species::Form => (Invariant::J1, Invariant::J0),
        Species::Function => return Err(Error::IncompatibleFamily("θ needs tensor fields".into())),
    };
    let alg = Algebra::sl(m)?;
    let g1 = GlCochain::tensor(gamma, top, m, p, q)?;
    let g0 = GlCochain::tensor(gamma, bottom, m, p, q)?;
    let symbol = chi_cochain(&g1, &alg)?;
    if !ce_differential(&symbol, &alg)?.is_zero() {
        return Err(Error::Internal(format!("χ(γ⊗{top:?}) is not a cocycle")));
    }
    let lifted = lift_cochain(&symbol)?;
    let image = ce_differential(&lifted, &alg)?
        .with_order(0)
        .map_err(|_| Error::Internal("the coboundary of the lift has order 1".into()))?;
    let generator = lift_cochain(&chi_cochain(&g0, &alg)?)?;
    let coords = class_coordinates(&image, std::slice::from_ref(&generator), &alg)?
        .ok_or_else(|| Error::Internal("class comparison is not solvable".into()))?;
    let value = coords.coordinates[0].clone();

    // x = 0 on (Id*, α_0*, …, α_b*)
    let b = bottom.arity(p, q)?;
    let cov_index = |l: usize| m + m * m + l;
    let arg_lists: Vec<Vec<usize>> = match gamma {
        GlForm::One => vec![(0..b).map(cov_index).collect()],
        GlForm::Trace => (0..m)
            .map(|i| std::iter::once(m + i * m + i).chain((0..b).map(cov_index)).collect())
            .collect(),
    };
    let origin = vec![Rational::zero(); m];
    let sum_at_origin = |c: &Cochain| -> Result<DiffOp, Error> {
        let mut acc = DiffOp::zero(*c.spec());
        for args in &arg_lists {
            match c.eval(args) {
                ModuleElement::Operator(d) => acc = acc.add(&d.eval_at(&origin)),
                _ => return Err(Error::Internal("expected operator values".into())),
            }
        }
        Ok(acc)
    };
    let at_origin = proportionality(&sum_at_origin(&image)?, &sum_at_origin(&generator)?)
        .ok_or_else(|| Error::Internal("x = 0 evaluation is not proportional to the generator".into()))?;
    if at_origin != value {
        return Err(Error::Internal(format!(
            "θ modulo coboundaries is {value} but the x = 0 evaluation gives {at_origin}"
        )));
    }

    let mut per_term = Vec::new();
    if species == Species::Multivector {
        let alphas: Vec<Covector> = (0..b).map(|l| Covector::basis(m, l)).collect();
        let reference = invariant(bottom, m, p, q, &alphas)?.lift();
        let basis_fields = crate::slstructure::basis_fields(m)?;
        for i in 0..b {
            let rest: Vec<Covector> = alphas.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, a)| a.clone()).collect();
            let op = invariant(top, m, p, q, &rest)?.lift();
            let term = op
                .lie_derivative(&basis_fields[cov_index(i)])?
                .eval_at(&origin)
                .scale(&if i % 2 == 0 { rat(1) } else { rat(-1) });
            let mu = proportionality(&term.with_order(0)?, &reference)
                .ok_or_else(|| Error::Internal(format!("term {i} is not a multiple of I₀")))?;
            per_term.push(mu);
        }
    }
    Ok(ThetaReport {
        value,
        at_origin,
        per_term,
    })
}

/// `λ` with `a = λ b`, when `b ≠ 0` and such a `λ` exists.
fn proportionality(a: &DiffOp, b: &DiffOp) -> Option<Rational> {
    let (key, f) = b.terms().next()?;
    let g = a.terms().find(|(k, _)| *k == key).map(|(_, g)| g.constant_term()).unwrap_or_else(Rational::zero);
    let lambda = g / f.constant_term();
    (*a == b.scale(&lambda)).then_some(lambda)
}

/// Generators of `H¹(sl(m+1), D^k(Ω_p, Ω_q))` among the named form cocycles.
pub fn form_generators(m: usize, p: usize, q: usize, k: u32) -> Result<Vec<NamedCocycleFamily>, Error> {
    let spec = ModuleSpec::operator(m, Species::Form, p, q, k)?;
    let tags: Vec<CocycleTag> = if q == p {
        vec![CocycleTag::C0]
    } else if q == p + 1 && k == 0 {
        vec![CocycleTag::C10]
    } else if q == p + 1 {
        vec![CocycleTag::C01, CocycleTag::C10]
    } else if q == p + 2 && k >= 1 {
        vec![CocycleTag::C2]
    } else {
        Vec::new()
    };
    tags.into_iter().map(|t| NamedCocycleFamily::new(t, spec)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbationReport {
    pub tag: CocycleTag,
    pub generators: Vec<CocycleTag>,
    /// Class coordinates of the family built from `tr DX`.
    pub before: Vec<Rational>,
    /// Class coordinates after replacing `tr DX` by `tr DX + ξ(X)`.
    pub after: Vec<Rational>,
    /// Whether the difference is the coboundary of a constant-coefficient operator.
    pub constant_primitive: bool,
}

impl PerturbationReport {
    pub fn changed(&self) -> bool {
        self.before != self.after
    }
}

/// Adds the pairing `X ↦ ξ(X) = ξ_i X^i` of a constant (hence closed) 1-form to the
/// divergence inside a form family and compares class coordinates.
pub fn closed_form_perturbation(
    tag: CocycleTag,
    m: usize,
    p: usize,
    q: usize,
    k: u32,
    xi: &Covector,
) -> Result<PerturbationReport, Error> {
    let alg = Algebra::sl(m)?;
    let fam = NamedCocycleFamily::new(tag, ModuleSpec::operator(m, Species::Form, p, q, k)?)?;
    let gens = form_generators(m, p, q, k)?;
    let gen_cochains = gens.iter().map(|g| g.cochain(&alg)).collect::<Result<Vec<_>, _>>()?;
    let pairing = |x: &VectorField| {
        (0..m).fold(Poly::zero(m), |f, i| f + x.component(i).scale(&xi.0[i]))
    };
    let plain = fam.cochain(&alg)?;
    let moved = cochain_on_basis(fam.spec, 1, &alg, |xs| fam.operator_for(&(xs[0].trace_div() + pairing(&xs[0]))))?;
    let coords = |c: &Cochain| -> Result<Vec<Rational>, Error> {
        Ok(class_coordinates(c, &gen_cochains, &alg)?
            .ok_or_else(|| Error::Internal("class outside the generator span".into()))?
            .coordinates)
    };
    let diff = moved.sub(&plain)?;
    let constant_primitive = match is_coboundary(&diff, &alg)? {
        Some(b) => b
            .values()
            .all(|(_, v)| v.coords().iter().all(|(mono, _)| mono.x.degree() == 0)),
        None => false,
    };
    Ok(PerturbationReport {
        tag,
        generators: gens.iter().map(|g| g.tag).collect(),
        before: coords(&plain)?,
        after: coords(&moved)?,
        constant_primitive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorfields::PolyMultiVector;

    fn cov(m: usize, i: usize) -> Covector {
        Covector::basis(m, i)
    }

    #[test]
    fn invariant_examples() {
        let id = invariant_I(Invariant::I0, 2, 1, 1, &[]).unwrap();
        let spec = ModuleSpec::operator(2, Species::Multivector, 1, 1, 0).unwrap();
        assert_eq!(id.lift(), DiffOp::identity(spec).unwrap());

        let i0 = invariant_I(Invariant::I0, 2, 1, 0, &[cov(2, 0)]).unwrap().lift();
        let t = Field::Multivector(PolyMultiVector::parse(2, 1, "x2 d1 + 3 d2").unwrap());
        assert_eq!(i0.apply(&t).unwrap(), Field::Multivector(PolyMultiVector::parse(2, 0, "x2").unwrap()));

        let i1 = invariant_I(Invariant::I1, 2, 1, 0, &[]).unwrap();
        assert_eq!(i1.lift(), crate::diffops::divergence_operator(2, 1, 1).unwrap());

        let j0 = invariant_J(Invariant::J0, 2, 1, 1, &[]).unwrap();
        assert_eq!(j0.lift(), DiffOp::identity(ModuleSpec::operator(2, Species::Form, 1, 1, 0).unwrap()).unwrap());
        let j0 = invariant_J(Invariant::J0, 2, 0, 1, &[cov(2, 0)]).unwrap().lift();
        let w = Field::Form(PolyForm::function(Poly::var(2, 1)));
        assert_eq!(j0.apply(&w).unwrap(), Field::Form(PolyForm::parse(2, 1, "x2 dx1").unwrap()));
        let j1 = invariant_J(Invariant::J1, 2, 0, 1, &[]).unwrap().lift();
        assert_eq!(j1, crate::diffops::exterior_derivative_operator(2, 0, 1).unwrap());

        assert!(matches!(
            invariant_I(Invariant::I0, 2, 1, 0, &[]),
            Err(Error::Arity { expected: 1, got: 0 })
        ));
        assert!(invariant_I(Invariant::I0, 2, 0, 1, &[]).is_err());
    }

    #[test]
    fn invariants_alternate() {
        let a = invariant_I(Invariant::I0, 3, 2, 0, &[cov(3, 0), cov(3, 2)]).unwrap();
        let b = invariant_I(Invariant::I0, 3, 2, 0, &[cov(3, 2), cov(3, 0)]).unwrap();
        assert_eq!(a, b.scale(&rat(-1)));
        assert!(invariant_J(Invariant::J0, 3, 0, 2, &[cov(3, 1), cov(3, 1)]).unwrap().is_zero());
    }

    #[test]
    fn invariance_checks() {
        let r = verify_invariance(2, 1, |a| invariant_I(Invariant::I0, 2, 1, 0, a)).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = verify_invariance(2, 0, |a| invariant_J(Invariant::J1, 2, 0, 1, a)).unwrap();
        assert!(r.passed(), "{r:?}");
        let bump = SymbolTensor::from_terms(
            Invariant::I0.spec(2, 1, 0).unwrap(),
            [(
                crate::diffops::OpKey {
                    deriv: Monomial::one(2),
                    target: 0,
                    source: 0,
                },
                Poly::one(2),
            )],
        )
        .unwrap();
        let r = verify_invariance(2, 1, |a| {
            let base = invariant_I(Invariant::I0, 2, 1, 0, a)?;
            Ok(base.add(&bump.scale(&a[0].0[1])))
        })
        .unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn chi_examples() {
        let m = 2;
        let one = GlCochain::tensor(GlForm::One, Invariant::I0, m, 1, 1).unwrap();
        let v = chi(&one, &[]).unwrap();
        assert_eq!(v, invariant_I(Invariant::I0, m, 1, 1, &[]).unwrap());

        let tr = GlCochain::tensor(GlForm::Trace, Invariant::I0, m, 1, 1).unwrap();
        let x = VectorField::parse(m, "x1^2 x2 d1 + x2 d2").unwrap();
        let got = chi(&tr, &[x.clone()]).unwrap();
        assert_eq!(got, v.mul_poly(&x.trace_div()).scale(&rat(-1)));

        let i0 = GlCochain::tensor(GlForm::One, Invariant::I0, m, 1, 0).unwrap();
        let alpha = crate::slstructure::embed(&crate::slstructure::SlElement::covector(m, 0));
        assert_eq!(
            chi(&i0, &[alpha]).unwrap(),
            invariant_I(Invariant::I0, m, 1, 0, &[cov(m, 0)]).unwrap()
        );
        assert!(matches!(chi(&i0, &[]), Err(Error::Arity { .. })));
    }

    #[test]
    fn named_cocycle_examples() {
        let m = 2;
        let spec = ModuleSpec::operator(m, Species::Form, 1, 1, 0).unwrap();
        let c0 = NamedCocycleFamily::new(CocycleTag::C0, spec).unwrap();
        assert_eq!(
            c0.eval(&VectorField::euler(m)).unwrap(),
            ModuleElement::Operator(DiffOp::identity(spec).unwrap().scale(&rat(2)))
        );
        let spec = ModuleSpec::operator(m, Species::Form, 0, 1, 0).unwrap();
        let c10 = NamedCocycleFamily::new(CocycleTag::C10, spec).unwrap();
        let alpha = crate::slstructure::embed(&crate::slstructure::SlElement::covector(m, 0));
        let ModuleElement::Operator(op) = c10.eval(&alpha).unwrap() else { panic!() };
        let w = Field::Form(PolyForm::function(Poly::one(m)));
        assert_eq!(op.apply(&w).unwrap(), Field::Form(PolyForm::parse(m, 1, "3 dx1").unwrap()));

        let spec = ModuleSpec::operator(m, Species::Multivector, 1, 0, 1).unwrap();
        let iota = NamedCocycleFamily::new(CocycleTag::IotaDc, spec).unwrap();
        assert!(iota.eval(&VectorField::parse(m, "1 d1 + 2 d2").unwrap()).unwrap().is_zero());

        let bad = ModuleSpec::operator(m, Species::Form, 0, 0, 1).unwrap();
        assert!(NamedCocycleFamily::new(CocycleTag::C01, bad).is_err());
        assert_eq!("iota".parse::<CocycleTag>().unwrap(), CocycleTag::IotaDc);
    }

    #[test]
    fn cocycle_identities_hold() {
        let spec = ModuleSpec::operator(2, Species::Form, 0, 2, 1).unwrap();
        let fam = NamedCocycleFamily::new(CocycleTag::C2, spec).unwrap();
        let r = verify_cocycle(&fam, 5, 3, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.basis_pairs, 28);
    }
}
