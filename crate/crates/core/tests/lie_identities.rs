mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{module_specs, random_field, random_op, random_source};
use veccoh::diffops::Field;
use veccoh::polyfields::{Poly, VectorField};
use veccoh::tensorfields::{exterior_derivative, interior_product, wedge, PolyForm, PolyMultiVector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partials_obey_leibniz(seed in any::<u64>(), axis in 0usize..3) {
        let mut r = rng(seed);
        let f = Poly::random(3, 3, &mut r);
        let g = Poly::random(3, 3, &mut r);
        let lhs = (&f * &g).partial(axis).unwrap();
        let rhs = &f.partial(axis).unwrap() * &g + &f * &g.partial(axis).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_is_a_lie_bracket(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y, z) = (random_field(2, 2, &mut r), random_field(2, 2, &mut r), random_field(2, 2, &mut r));
        prop_assert_eq!(x.bracket(&y).unwrap(), y.bracket(&x).unwrap().scale(&veccoh::rat(-1)));
        let jac = [
            x.bracket(&y.bracket(&z).unwrap()).unwrap(),
            y.bracket(&z.bracket(&x).unwrap()).unwrap(),
            z.bracket(&x.bracket(&y).unwrap()).unwrap(),
        ];
        let sum = jac.iter().fold(VectorField::zero(2), |a, b| &a + b);
        prop_assert!(sum.is_zero());
    }

    #[test]
    fn lie_derivative_commutes_with_d(seed in any::<u64>(), p in 0usize..3) {
        let mut r = rng(seed);
        let x = random_field(3, 2, &mut r);
        let w = PolyForm::random(3, p, 3, &mut r);
        prop_assert_eq!(
            exterior_derivative(&w.lie_derivative(&x).unwrap()),
            exterior_derivative(&w).lie_derivative(&x).unwrap()
        );
        prop_assert!(exterior_derivative(&exterior_derivative(&w)).is_zero());
    }

    #[test]
    fn lie_derivative_is_a_derivation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_field(3, 2, &mut r);
        let a = PolyForm::random(3, 1, 2, &mut r);
        let w = PolyForm::random(3, 1, 2, &mut r);
        let lhs = wedge(&a, &w).unwrap().lie_derivative(&x).unwrap();
        let rhs = wedge(&a.lie_derivative(&x).unwrap(), &w).unwrap()
            .add(&wedge(&a, &w.lie_derivative(&x).unwrap()).unwrap());
        prop_assert_eq!(lhs, rhs);

        let t = PolyMultiVector::random(3, 2, 2, &mut r);
        let lhs = interior_product(&a, &t).unwrap().lie_derivative(&x).unwrap();
        let rhs = interior_product(&a.lie_derivative(&x).unwrap(), &t).unwrap()
            .add(&interior_product(&a, &t.lie_derivative(&x).unwrap()).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn lie_derivatives_represent_the_bracket_on_fields(seed in any::<u64>(), p in 0usize..3) {
        let mut r = rng(seed);
        let x = random_field(2, 2, &mut r);
        let y = random_field(2, 2, &mut r);
        let xy = x.bracket(&y).unwrap();
        for f in [
            Field::Function(Poly::random(2, 3, &mut r)),
            Field::Multivector(PolyMultiVector::random(2, p, 3, &mut r)),
            Field::Form(PolyForm::random(2, p, 3, &mut r)),
        ] {
            let lxy = f.lie_derivative(&y).unwrap().lie_derivative(&x).unwrap();
            let lyx = f.lie_derivative(&x).unwrap().lie_derivative(&y).unwrap();
            let expected = f.lie_derivative(&xy).unwrap();
            match (lxy, lyx, expected) {
                (Field::Function(a), Field::Function(b), Field::Function(c)) => prop_assert_eq!(&a - &b, c),
                (Field::Multivector(a), Field::Multivector(b), Field::Multivector(c)) => prop_assert_eq!(a.sub(&b), c),
                (Field::Form(a), Field::Form(b), Field::Form(c)) => prop_assert_eq!(a.sub(&b), c),
                _ => prop_assert!(false, "species changed"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lie_derivatives_represent_the_bracket_on_operators(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_field(2, 2, &mut r);
        let y = random_field(2, 2, &mut r);
        let xy = x.bracket(&y).unwrap();
        for spec in module_specs() {
            let d = random_op(spec, 4, 2, &mut r);
            let lhs = d.lie_derivative(&y).unwrap().lie_derivative(&x).unwrap()
                .sub(&d.lie_derivative(&x).unwrap().lie_derivative(&y).unwrap());
            prop_assert_eq!(lhs, d.lie_derivative(&xy).unwrap(), "{}", spec);

            let s = d.principal_symbol();
            let lhs = s.lie_derivative(&y).unwrap().lie_derivative(&x).unwrap()
                .sub(&s.lie_derivative(&x).unwrap().lie_derivative(&y).unwrap());
            prop_assert_eq!(lhs, s.lie_derivative(&xy).unwrap(), "{}", spec);
        }
    }

    #[test]
    fn principal_symbol_is_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_field(2, 3, &mut r);
        for spec in module_specs() {
            let d = random_op(spec, 6, 2, &mut r);
            prop_assert_eq!(
                d.lie_derivative(&x).unwrap().principal_symbol(),
                d.principal_symbol().lie_derivative(&x).unwrap(),
                "{}", spec
            );
            // the lift is a section of σ
            prop_assert_eq!(d.principal_symbol().lift().principal_symbol(), d.principal_symbol());
        }
    }

    #[test]
    fn operator_lie_derivative_is_the_commutator(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_field(2, 2, &mut r);
        for spec in module_specs() {
            let d = random_op(spec, 4, 2, &mut r);
            let t = random_source(&spec, 3, &mut r);
            let lhs = d.apply(&t).unwrap().lie_derivative(&x).unwrap();
            let rhs_a = d.lie_derivative(&x).unwrap().apply(&t).unwrap();
            let rhs_b = d.apply(&t.lie_derivative(&x).unwrap()).unwrap();
            let sum = match (rhs_a, rhs_b) {
                (Field::Multivector(a), Field::Multivector(b)) => Field::Multivector(a.add(&b)),
                (Field::Form(a), Field::Form(b)) => Field::Form(a.add(&b)),
                (Field::Function(a), Field::Function(b)) => Field::Function(a + b),
                _ => unreachable!(),
            };
            prop_assert_eq!(lhs, sum, "{}", spec);
        }
    }
}
