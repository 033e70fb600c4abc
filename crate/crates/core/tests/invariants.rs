use veccoh::cecomplex::{ce_differential, Algebra};
use veccoh::cocycles::{
    chi_cochain, verify_invariance, verify_iota_witness, GlCochain, GlForm, Invariant, invariant_I, invariant_J,
};
use veccoh::tensorfields::Covector;

#[test]
fn chi_of_invariants_is_closed() {
    let alg = Algebra::sl(2).unwrap();
    let cases = [
        (GlForm::One, Invariant::I0, 1, 0),
        (GlForm::Trace, Invariant::I0, 1, 1),
        (GlForm::One, Invariant::I1, 1, 0),
        (GlForm::Trace, Invariant::I1, 2, 1),
        (GlForm::One, Invariant::J0, 0, 1),
        (GlForm::Trace, Invariant::J1, 0, 1),
        (GlForm::One, Invariant::J1, 0, 2),
    ];
    for (g, inv, p, q) in cases {
        let c = chi_cochain(&GlCochain::tensor(g, inv, 2, p, q).unwrap(), &alg).unwrap();
        assert!(!c.is_zero(), "{g:?} {inv:?} {p} {q}");
        assert!(ce_differential(&c, &alg).unwrap().is_zero(), "{g:?} {inv:?} {p} {q}");
    }
}

#[test]
fn invariant_families_are_sl_invariant() {
    for m in 2..=3 {
        for (inv, p, q) in [(Invariant::I0, 2, 0), (Invariant::I1, 2, 0), (Invariant::J0, 0, 2), (Invariant::J1, 0, 2)] {
            let arity = inv.arity(p, q).unwrap();
            let report = verify_invariance(m, arity, |a: &[Covector]| match inv {
                Invariant::I0 | Invariant::I1 => invariant_I(inv, m, p, q, a),
                _ => invariant_J(inv, m, p, q, a),
            })
            .unwrap();
            assert!(report.passed(), "{inv:?} m = {m}: {report:?}");
            assert!(report.trace_scalar.is_some());
        }
    }
}

#[test]
fn divergence_operator_is_a_primitive_of_iota_dc() {
    let r = verify_iota_witness(3, 1, 4, 2, 99).unwrap();
    assert_eq!(r.failures, 0);
    assert!(r.sl_coboundary);
}
