//! `sl(m+1, ℝ) = ℝᵐ ⊕ gl(m, ℝ) ⊕ ℝᵐ*` and its projective realization by vector fields
//! of degree at most two on ℝᵐ.
//!
//! Basis order (stable; reports refer to these indices):
//!
//! * `0..m`: translations `e_i`,
//! * `m + i·m + j`: elementary matrices `E^i_j` (row `i`, column `j`),
//! * `m + m² + i`: covectors `e^i`.

use std::fmt;

use num_traits::{One, Zero};

use crate::exactlinalg::{rat, Rational};
use crate::polyfields::{Poly, VectorField};
use crate::Error;

/// `(h, A, α)` with `h ∈ ℝᵐ` of degree −1, `A ∈ gl(m)` of degree 0, `α ∈ ℝᵐ*` of degree +1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SlElement {
    pub h: Vec<Rational>,
    pub a: Vec<Vec<Rational>>,
    pub alpha: Vec<Rational>,
}

impl SlElement {
    pub fn zero(m: usize) -> Self {
        SlElement {
            h: vec![Rational::zero(); m],
            a: vec![vec![Rational::zero(); m]; m],
            alpha: vec![Rational::zero(); m],
        }
    }

    pub fn translation(m: usize, i: usize) -> Self {
        let mut e = Self::zero(m);
        e.h[i] = Rational::one();
        e
    }

    pub fn elementary(m: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero(m);
        e.a[i][j] = Rational::one();
        e
    }

    pub fn covector(m: usize, i: usize) -> Self {
        let mut e = Self::zero(m);
        e.alpha[i] = Rational::one();
        e
    }

    pub fn identity(m: usize) -> Self {
        let mut e = Self::zero(m);
        for i in 0..m {
            e.a[i][i] = Rational::one();
        }
        e
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coordinates().iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &SlElement) -> SlElement {
        SlElement::from_coordinates(
            self.m(),
            &self
                .coordinates()
                .iter()
                .zip(other.coordinates())
                .map(|(x, y)| x + y)
                .collect::<Vec<_>>(),
        )
    }

    pub fn scale(&self, c: &Rational) -> SlElement {
        SlElement::from_coordinates(self.m(), &self.coordinates().iter().map(|x| x * c).collect::<Vec<_>>())
    }

    /// Coordinates in the documented basis order.
    pub fn coordinates(&self) -> Vec<Rational> {
        let mut v = self.h.clone();
        for row in &self.a {
            v.extend(row.iter().cloned());
        }
        v.extend(self.alpha.iter().cloned());
        v
    }

    pub fn from_coordinates(m: usize, v: &[Rational]) -> SlElement {
        assert_eq!(v.len(), dim(m));
        SlElement {
            h: v[..m].to_vec(),
            a: (0..m).map(|i| v[m + i * m..m + (i + 1) * m].to_vec()).collect(),
            alpha: v[m + m * m..].to_vec(),
        }
    }
}

impl fmt::Debug for SlElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[Rational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let a: Vec<String> = self.a.iter().map(|r| show(r)).collect();
        write!(f, "(h=[{}], A=[{}], α=[{}])", show(&self.h), a.join("; "), show(&self.alpha))
    }
}

pub fn dim(m: usize) -> usize {
    m * m + 2 * m
}

/// Basis in the documented order; needs `m ≥ 2`.
pub fn basis(m: usize) -> Result<Vec<SlElement>, Error> {
    if m < 2 {
        return Err(Error::InvalidSpec(format!("m = {m}; the realization needs m ≥ 2")));
    }
    let mut out = Vec::with_capacity(dim(m));
    out.extend((0..m).map(|i| SlElement::translation(m, i)));
    for i in 0..m {
        out.extend((0..m).map(|j| SlElement::elementary(m, i, j)));
    }
    out.extend((0..m).map(|i| SlElement::covector(m, i)));
    Ok(out)
}

/// Grading degree of basis index `idx`.
pub fn basis_weight(m: usize, idx: usize) -> i64 {
    if idx < m {
        -1
    } else if idx < m + m * m {
        0
    } else {
        1
    }
}

pub fn basis_label(m: usize, idx: usize) -> String {
    if idx < m {
        format!("e_{}", idx + 1)
    } else if idx < m + m * m {
        let r = idx - m;
        format!("E^{}_{}", r / m + 1, r % m + 1)
    } else {
        format!("e^{}", idx - m - m * m + 1)
    }
}

/// Weight of a pure basis element: −1, 0 or +1.
pub fn weight(e: &SlElement) -> Result<i64, Error> {
    let nz = |v: &[Rational]| v.iter().any(|x| !x.is_zero());
    let parts = [
        (nz(&e.h), -1),
        (e.a.iter().any(|r| nz(r)), 0),
        (nz(&e.alpha), 1),
    ];
    let present: Vec<i64> = parts.iter().filter(|p| p.0).map(|p| p.1).collect();
    match present.as_slice() {
        [w] => Ok(*w),
        _ => Err(Error::NotPure(format!("{e:?}"))),
    }
}

/// `h* = −h^i ∂_i`, `A* = −A^i_j x^j ∂_i`, `α* = α(x) x^i ∂_i`.
pub fn embed(e: &SlElement) -> VectorField {
    let m = e.m();
    let alpha_x = (0..m).fold(Poly::zero(m), |acc, j| acc + Poly::var(m, j).scale(&e.alpha[j]));
    let comps = (0..m)
        .map(|i| {
            let mut c = Poly::constant(m, -e.h[i].clone());
            for j in 0..m {
                c = c - Poly::var(m, j).scale(&e.a[i][j]);
            }
            c + &alpha_x * &Poly::var(m, i)
        })
        .collect();
    VectorField::new(comps).expect("consistent dimension")
}

/// The Euler field `x^i ∂_i`, image of `−Id`.
pub fn euler(m: usize) -> VectorField {
    VectorField::euler(m)
}

/// Graded bracket: `[A, A']` commutator, `[A, h] = Ah`, `[A, α] = −α A`,
/// `[h, α] = α(h) Id + h ⊗ α`, and `[h, h'] = [α, α'] = 0`.
pub fn abstract_bracket(x: &SlElement, y: &SlElement) -> SlElement {
    let m = x.m();
    let mut out = SlElement::zero(m);
    let matmul = |a: &Vec<Vec<Rational>>, b: &Vec<Vec<Rational>>, i: usize, j: usize| {
        (0..m).fold(Rational::zero(), |s, k| s + &a[i][k] * &b[k][j])
    };
    for i in 0..m {
        for j in 0..m {
            // [A, A'] plus the h ⊗ α parts of [h, α'] and −[h', α]
            let mut v = matmul(&x.a, &y.a, i, j) - matmul(&y.a, &x.a, i, j);
            v += &x.h[i] * &y.alpha[j] - &y.h[i] * &x.alpha[j];
            out.a[i][j] = v;
        }
    }
    let pair_xy = (0..m).fold(Rational::zero(), |s, k| s + &y.alpha[k] * &x.h[k]);
    let pair_yx = (0..m).fold(Rational::zero(), |s, k| s + &x.alpha[k] * &y.h[k]);
    for i in 0..m {
        out.a[i][i] += &pair_xy - &pair_yx;
    }
    for i in 0..m {
        // [A, h'] = A h' and −[A', h] = −A' h
        out.h[i] = (0..m).fold(Rational::zero(), |s, k| s + &x.a[i][k] * &y.h[k] - &y.a[i][k] * &x.h[k]);
        // [A, α'] = −α' A and −[A', α] = α A'
        out.alpha[i] = (0..m).fold(Rational::zero(), |s, k| s - &y.alpha[k] * &x.a[k][i] + &x.alpha[k] * &y.a[k][i]);
    }
    out
}

/// Structure constants in the basis: `c[a][b]` lists `(k, c^k_{ab})` with `[e_a, e_b] = Σ c^k_{ab} e_k`.
pub fn structure_constants(m: usize) -> Result<Vec<Vec<Vec<(usize, Rational)>>>, Error> {
    let b = basis(m)?;
    Ok(b.iter()
        .map(|x| {
            b.iter()
                .map(|y| {
                    abstract_bracket(x, y)
                        .coordinates()
                        .into_iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// Embedded basis fields, in basis order.
pub fn basis_fields(m: usize) -> Result<Vec<VectorField>, Error> {
    Ok(basis(m)?.iter().map(embed).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub m: usize,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    /// First pair `(a, b)` where the embedding fails to intertwine the brackets.
    pub bracket_failure: Option<(usize, usize)>,
    /// First triple violating the Jacobi identity of the abstract bracket.
    pub jacobi_failure: Option<(usize, usize, usize)>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.bracket_failure.is_none() && self.jacobi_failure.is_none()
    }
}

/// Checks `[a*, b*] = [a, b]*` on all basis pairs and Jacobi on all basis triples.
pub fn verify_embedding(m: usize) -> Result<EmbeddingReport, Error> {
    let b = basis(m)?;
    let fields: Vec<VectorField> = b.iter().map(embed).collect();
    let n = b.len();
    let mut report = EmbeddingReport {
        m,
        pairs_checked: 0,
        triples_checked: 0,
        bracket_failure: None,
        jacobi_failure: None,
    };
    for i in 0..n {
        for j in i + 1..n {
            report.pairs_checked += 1;
            let lhs = fields[i].bracket(&fields[j])?;
            if report.bracket_failure.is_none() && lhs != embed(&abstract_bracket(&b[i], &b[j])) {
                report.bracket_failure = Some((i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                report.triples_checked += 1;
                let s = abstract_bracket(&b[i], &abstract_bracket(&b[j], &b[k]))
                    .add(&abstract_bracket(&b[j], &abstract_bracket(&b[k], &b[i])))
                    .add(&abstract_bracket(&b[k], &abstract_bracket(&b[i], &b[j])));
                if report.jacobi_failure.is_none() && !s.is_zero() {
                    report.jacobi_failure = Some((i, j, k));
                }
            }
        }
    }
    Ok(report)
}

/// `ad(E)` eigenvalue of an embedded basis field, computed from the bracket.
pub fn ad_euler_eigenvalue(m: usize, idx: usize) -> Result<Option<Rational>, Error> {
    let x = &basis_fields(m)?[idx];
    let ad = euler(m).bracket(x)?;
    for (c, a) in x.components().iter().zip(ad.components()) {
        if let Some((mono, coeff)) = c.terms().next() {
            let lambda = a.coeff(mono) / coeff;
            return Ok((ad == x.scale(&lambda)).then_some(lambda));
        }
    }
    Ok(None)
}

pub fn sign(k: usize) -> Rational {
    if k % 2 == 0 {
        rat(1)
    } else {
        rat(-1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes_and_weights() {
        assert!(basis(1).is_err());
        assert_eq!(basis(2).unwrap().len(), 8);
        assert_eq!(basis(3).unwrap().len(), 15);
        let w: Vec<i64> = basis(2).unwrap().iter().map(|e| weight(e).unwrap()).collect();
        assert_eq!(w, vec![-1, -1, 0, 0, 0, 0, 1, 1]);
        assert_eq!((0..8).map(|i| basis_weight(2, i)).collect::<Vec<_>>(), w);
        let mixed = SlElement::translation(2, 0).add(&SlElement::covector(2, 1));
        assert!(weight(&mixed).is_err());
    }

    #[test]
    fn embed_examples() {
        assert_eq!(embed(&SlElement::translation(2, 0)), VectorField::parse(2, "-1 d1").unwrap());
        assert_eq!(embed(&SlElement::identity(2)), VectorField::euler(2).scale(&rat(-1)));
        assert_eq!(
            embed(&SlElement::covector(2, 0)),
            VectorField::parse(2, "x1^2 d1 + x1 x2 d2").unwrap()
        );
    }

    #[test]
    fn bracket_examples() {
        let m = 2;
        let got = abstract_bracket(&SlElement::translation(m, 0), &SlElement::covector(m, 0));
        let want = SlElement::identity(m).add(&SlElement::elementary(m, 0, 0));
        assert_eq!(got, want);
        assert_eq!(
            abstract_bracket(&SlElement::elementary(m, 0, 1), &SlElement::translation(m, 1)),
            SlElement::translation(m, 0)
        );
        assert!(abstract_bracket(&SlElement::translation(m, 0), &SlElement::translation(m, 1)).is_zero());
    }

    #[test]
    fn spot_pair_both_sides() {
        let h = SlElement::translation(2, 0);
        let a = SlElement::covector(2, 0);
        let want = VectorField::parse(2, "-2 * x1 d1 + -1 * x2 d2").unwrap();
        assert_eq!(embed(&h).bracket(&embed(&a)).unwrap(), want);
        assert_eq!(embed(&abstract_bracket(&h, &a)), want);
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        let r2 = verify_embedding(2).unwrap();
        assert!(r2.passed(), "{r2:?}");
        assert_eq!(r2.pairs_checked, 28);
        let r3 = verify_embedding(3).unwrap();
        assert!(r3.passed(), "{r3:?}");
        assert_eq!(r3.pairs_checked, 105);
    }

    #[test]
    fn euler_grades_the_basis() {
        for m in [2, 3] {
            for idx in 0..dim(m) {
                assert_eq!(ad_euler_eigenvalue(m, idx).unwrap(), Some(rat(basis_weight(m, idx))));
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        for (i, e) in basis(3).unwrap().iter().enumerate() {
            let c = e.coordinates();
            assert!(c[i].is_one() && c.iter().filter(|x| !x.is_zero()).count() == 1);
            assert_eq!(&SlElement::from_coordinates(3, &c), e);
        }
        assert_eq!(basis_label(2, 3), "E^1_2");
    }
}
