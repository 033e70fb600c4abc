#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use veccoh::diffops::{DiffOp, Field, ModuleSpec, OpKey, Species};
use veccoh::polyfields::{Monomial, Poly, VectorField};
use veccoh::tensorfields::{PolyForm, PolyMultiVector};

/// Random operator in `spec` with a handful of nonzero entries of low polynomial degree.
pub fn random_op(spec: ModuleSpec, entries: usize, max_deg: u32, rng: &mut ChaCha8Rng) -> DiffOp {
    let m = spec.m;
    let derivs: Vec<Monomial> = (0..=spec.k).flat_map(|d| Monomial::all_of_degree(m, d)).collect();
    let (nt, ns) = (spec.target_fiber().dim(), spec.source_fiber().dim());
    let terms = (0..entries).map(|_| {
        let key = OpKey {
            deriv: derivs[rng.gen_range(0..derivs.len())].clone(),
            target: rng.gen_range(0..nt),
            source: rng.gen_range(0..ns),
        };
        (key, Poly::random(m, max_deg, rng))
    });
    DiffOp::from_terms(spec, terms.collect::<Vec<_>>()).unwrap()
}

pub fn random_source(spec: &ModuleSpec, max_deg: u32, rng: &mut ChaCha8Rng) -> Field {
    match spec.species {
        Species::Function => Field::Function(Poly::random(spec.m, max_deg, rng)),
        Species::Multivector => Field::Multivector(PolyMultiVector::random(spec.m, spec.p, max_deg, rng)),
        Species::Form => Field::Form(PolyForm::random(spec.m, spec.p, max_deg, rng)),
    }
}

pub fn random_field(m: usize, max_deg: u32, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::random(m, max_deg, rng)
}

/// A spread of operator modules for `m = 2` covering both species and `k ≤ 2`.
pub fn module_specs() -> Vec<ModuleSpec> {
    let mut out = Vec::new();
    for species in [Species::Multivector, Species::Form] {
        for (p, q) in [(0, 0), (1, 1), (1, 0), (0, 1), (2, 1), (0, 2)] {
            for k in 0..=2 {
                out.push(ModuleSpec::operator(2, species, p, q, k).unwrap());
            }
        }
    }
    out
}
