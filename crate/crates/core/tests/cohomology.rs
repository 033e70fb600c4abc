mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_op;
use veccoh::cecomplex::{
    ce_differential, cohomology_at, cohomology_dim, differential_matrix, dump_matrices, Algebra, BlockOrder, Cochain,
    ModuleElement,
};
use veccoh::diffops::{ModuleSpec, Species};
use veccoh::exactlinalg::{rank, SparseMatrix};
use veccoh::slstructure;

fn random_cochain(spec: ModuleSpec, degree: usize, alg: &Algebra, rng: &mut ChaCha8Rng) -> Cochain {
    let mut c = Cochain::new(spec, degree);
    for args in veccoh::tensorfields::skew_tuples(alg.dim(), degree) {
        if rng.gen_bool(0.3) {
            c.add_value(&args, ModuleElement::Operator(random_op(spec, 3, 2, rng))).unwrap();
        }
    }
    c
}

#[test]
fn coboundary_squares_to_zero() {
    let alg = Algebra::sl(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for spec in [
        ModuleSpec::operator(2, Species::Multivector, 1, 0, 1).unwrap(),
        ModuleSpec::operator(2, Species::Form, 0, 1, 2).unwrap(),
        ModuleSpec::operator(2, Species::Form, 1, 1, 0).unwrap(),
    ] {
        for degree in 0..2 {
            let c = random_cochain(spec, degree, &alg, &mut rng);
            let dc = ce_differential(&c, &alg).unwrap();
            assert!(ce_differential(&dc, &alg).unwrap().is_zero(), "{spec}, degree {degree}");
        }
    }
}

#[test]
fn structure_constants_satisfy_jacobi() {
    for m in 2..=3 {
        let c = slstructure::structure_constants(m).unwrap();
        let n = slstructure::dim(m);
        let bracket = |v: &[(usize, veccoh::Rational)], b: usize| {
            let mut out = vec![veccoh::rat(0); n];
            for (a, x) in v {
                for (k, y) in &c[*a][b] {
                    out[*k] += x * y;
                }
            }
            out
        };
        let unit = |a: usize| vec![(a, veccoh::rat(1))];
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let mut total = vec![veccoh::rat(0); n];
                    for (x, y, z) in [(a, b, d), (b, d, a), (d, a, b)] {
                        let inner: Vec<_> = bracket(&unit(x), y).into_iter().enumerate().collect();
                        for (k, v) in bracket(&inner, z).into_iter().enumerate() {
                            total[k] += v;
                        }
                    }
                    assert!(total.iter().all(|v| *v == veccoh::rat(0)));
                }
            }
        }
    }
}

#[test]
fn dimensions_ignore_enumeration_order() {
    let alg = Algebra::sl(2).unwrap();
    for spec in [
        ModuleSpec::operator(2, Species::Multivector, 1, 1, 1).unwrap(),
        ModuleSpec::operator(2, Species::Form, 0, 1, 1).unwrap(),
        ModuleSpec::operator(2, Species::Multivector, 2, 1, 0).unwrap(),
    ] {
        for u in 0..=1 {
            let a = cohomology_at(spec, u, 0, &alg, BlockOrder::Lexicographic).unwrap();
            let b = cohomology_at(spec, u, 0, &alg, BlockOrder::Reversed).unwrap();
            assert_eq!((a.dim, a.rank_in, a.rank_out), (b.dim, b.rank_in, b.rank_out), "{spec} u = {u}");
        }
    }
}

/// Nonzero weights carry no cohomology, so the weight-zero answer is the whole answer on
/// every truncation assembled from weight blocks.
#[test]
fn functions_have_no_cohomology_off_weight_zero() {
    let alg = Algebra::sl(2).unwrap();
    let spec = ModuleSpec::functions(2);
    for w in -4..=4 {
        if w == 0 {
            continue;
        }
        for u in 0..=1 {
            let data = cohomology_at(spec, u, w, &alg, BlockOrder::Lexicographic).unwrap();
            assert_eq!(data.dim, 0, "weight {w}, degree {u}");
        }
    }
    assert_eq!(cohomology_dim(spec, 0).unwrap(), 1);
    assert_eq!(cohomology_dim(spec, 1).unwrap(), 1);
}

#[test]
fn dumped_matrices_round_trip() {
    let spec = ModuleSpec::operator(2, Species::Form, 0, 1, 1).unwrap();
    let dir = std::env::temp_dir().join(format!("veccoh-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let paths = dump_matrices(spec, 1, &dir).unwrap();
    assert_eq!(paths.len(), 2);
    let read = |p: &std::path::Path| SparseMatrix::read_dump(std::io::BufReader::new(std::fs::File::open(p).unwrap())).unwrap();
    let d0 = read(&paths[0]);
    let d1 = read(&paths[1]);
    assert_eq!(d1, differential_matrix(spec, 1).unwrap());
    // dim H¹ = (#C¹ − rank d¹) − rank d⁰
    assert_eq!(d1.cols() - rank(&d1) - rank(&d0), cohomology_dim(spec, 1).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}
