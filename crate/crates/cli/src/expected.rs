//! Expected cohomology dimensions, stated once as data.

use veccoh::diffops::Species;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub dim: usize,
    pub citation: &'static str,
}

/// Offset `p − q` the row applies to.
#[derive(Clone, Copy, Debug)]
enum Shift {
    Is(i64),
    Positive,
    Any,
}

#[derive(Clone, Copy, Debug)]
enum Order {
    Zero,
    Positive,
    Any,
}

struct Row {
    species: Species,
    u: usize,
    shift: Shift,
    order: Order,
    dim: usize,
    citation: &'static str,
}

const MV_H0: &str = "invariant operators on multivectors: ℝ if p = q, 0 otherwise";
const MV_H1: &str = "H¹ on multivectors: ℝ if p = q; ℝ if p = q + 1 and k = 0; vanishing otherwise";
const FORM_H0: &str = "invariant operators on forms: ℝ if p = q, none lowering the degree";
const FORM_H1: &str = "H¹ on forms: ℝ if p = q; ℝ, ℝ² if q = p + 1; 0, ℝ if q = p + 2; 0 otherwise";

/// First matching row wins; a case with no matching row has no expectation.
const TABLE: &[Row] = &[
    Row { species: Species::Multivector, u: 0, shift: Shift::Is(0), order: Order::Any, dim: 1, citation: MV_H0 },
    Row { species: Species::Multivector, u: 0, shift: Shift::Any, order: Order::Any, dim: 0, citation: MV_H0 },
    Row { species: Species::Multivector, u: 1, shift: Shift::Is(0), order: Order::Any, dim: 1, citation: MV_H1 },
    Row { species: Species::Multivector, u: 1, shift: Shift::Is(1), order: Order::Zero, dim: 1, citation: MV_H1 },
    Row { species: Species::Multivector, u: 1, shift: Shift::Any, order: Order::Any, dim: 0, citation: MV_H1 },
    Row { species: Species::Form, u: 0, shift: Shift::Is(0), order: Order::Any, dim: 1, citation: FORM_H0 },
    Row { species: Species::Form, u: 0, shift: Shift::Positive, order: Order::Any, dim: 0, citation: FORM_H0 },
    Row { species: Species::Form, u: 1, shift: Shift::Is(0), order: Order::Any, dim: 1, citation: FORM_H1 },
    Row { species: Species::Form, u: 1, shift: Shift::Is(-1), order: Order::Zero, dim: 1, citation: FORM_H1 },
    Row { species: Species::Form, u: 1, shift: Shift::Is(-1), order: Order::Positive, dim: 2, citation: FORM_H1 },
    Row { species: Species::Form, u: 1, shift: Shift::Is(-2), order: Order::Zero, dim: 0, citation: FORM_H1 },
    Row { species: Species::Form, u: 1, shift: Shift::Is(-2), order: Order::Positive, dim: 1, citation: FORM_H1 },
    Row { species: Species::Form, u: 1, shift: Shift::Any, order: Order::Any, dim: 0, citation: FORM_H1 },
];

pub fn expected_dim(species: Species, p: usize, q: usize, k: u32, u: usize) -> Option<Expectation> {
    let d = p as i64 - q as i64;
    TABLE
        .iter()
        .find(|r| {
            r.species == species
                && r.u == u
                && match r.shift {
                    Shift::Is(s) => s == d,
                    Shift::Positive => d > 0,
                    Shift::Any => true,
                }
                && match r.order {
                    Order::Zero => k == 0,
                    Order::Positive => k > 0,
                    Order::Any => true,
                }
        })
        .map(|r| Expectation { dim: r.dim, citation: r.citation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lookups() {
        assert_eq!(expected_dim(Species::Multivector, 1, 1, 1, 1).unwrap().dim, 1);
        assert_eq!(expected_dim(Species::Multivector, 2, 1, 0, 1).unwrap().dim, 1);
        assert_eq!(expected_dim(Species::Multivector, 2, 1, 1, 1).unwrap().dim, 0);
        assert_eq!(expected_dim(Species::Form, 0, 1, 1, 1).unwrap().dim, 2);
        assert_eq!(expected_dim(Species::Form, 0, 2, 0, 1).unwrap().dim, 0);
        assert_eq!(expected_dim(Species::Form, 0, 2, 2, 1).unwrap().dim, 1);
        assert_eq!(expected_dim(Species::Form, 2, 0, 2, 1).unwrap().dim, 0);
        assert_eq!(expected_dim(Species::Form, 2, 1, 0, 0).unwrap().dim, 0);
        assert!(expected_dim(Species::Form, 0, 1, 1, 0).is_none());
        assert!(expected_dim(Species::Multivector, 0, 0, 0, 2).is_none());
    }
}
