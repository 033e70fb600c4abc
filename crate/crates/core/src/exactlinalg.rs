//! Exact rational scalars and sparse linear algebra over ℚ.
//!
//! Every dimension count in the crate reduces to [`rank`] of a [`SparseMatrix`].
//! Matrices are immutable once built; elimination always works on private copies.
//!
//! Rank splits the matrix into the connected components of its row/column
//! incidence graph first. The differential matrices of the cohomology code are
//! block diagonal under the torus weights, so this alone turns one large
//! elimination into many small independent ones, which are run on the rayon pool.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

/// Exact rational number. Always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Shorthand for the integer `n` as a [`Rational`].
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `num / den` as a [`Rational`]. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Writes a rational as `num/den`, the form used by the matrix dump format.
pub fn fmt_num_den(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed matrix dump: {0}")]
    Parse(String),
}

type Row = Vec<(usize, Rational)>;

/// Row-major sparse matrix over ℚ. Stored entries are nonzero and rows are sorted by column.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Row>,
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix({}x{}, nnz={})", self.rows, self.cols, self.nnz())
    }
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![Vec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            data: (0..n).map(|i| vec![(i, Rational::one())]).collect(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Repeated positions are summed
    /// and zero sums are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, Rational)>,
    {
        let mut acc: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LinalgError::OutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            *acc[r].entry(c).or_insert_with(Rational::zero) += v;
        }
        let data = acc
            .into_iter()
            .map(|row| row.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Ok(SparseMatrix { rows, cols, data })
    }

    /// Builds a matrix from dense rows; all rows must have the same length.
    pub fn from_dense(rows: &[Vec<Rational>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    triplets.push((r, c, v.clone()));
                }
            }
        }
        Self::from_triplets(rows.len(), cols, triplets)
    }

    /// Convenience constructor from small integer rows.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        let dense: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| rat(v)).collect())
            .collect();
        Self::from_dense(&dense).expect("ragged integer rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn get(&self, row: usize, col: usize) -> Rational {
        self.data[row]
            .binary_search_by_key(&col, |(c, _)| *c)
            .map(|i| self.data[row][i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// Stored entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> + '_ {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut data: Vec<Row> = vec![Vec::new(); self.cols];
        for (r, c, v) in self.entries() {
            data[c].push((r, v.clone()));
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Multiplies every entry of row `row` by `factor`, returning a new matrix.
    pub fn scale_row(&self, row: usize, factor: &Rational) -> Self {
        let mut out = self.clone();
        if factor.is_zero() {
            out.data[row].clear();
        } else {
            for (_, v) in out.data[row].iter_mut() {
                *v *= factor;
            }
        }
        out
    }

    /// Reorders rows so that new row `i` is old row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows);
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: perm.iter().map(|&i| self.data[i].clone()).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Rational::zero(), |acc, (c, v)| acc + v * &x[*c])
            })
            .collect())
    }

    /// Writes the text dump: a `rows cols nnz` header, then one `row col num/den` line
    /// per stored entry, 0-based and sorted by `(row, col)`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.entries() {
            writeln!(w, "{} {} {}", r, c, fmt_num_den(v))?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ascii")
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self, LinalgError> {
        let mut lines = r.lines();
        let bad = |msg: &str| LinalgError::Parse(msg.to_string());
        let header = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .map_err(|e| LinalgError::Parse(e.to_string()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("header")))
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 {
            return Err(bad("header needs rows cols nnz"));
        }
        let (rows, cols, nnz) = (nums[0], nums[1], nums[2]);
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines {
            let line = line.map_err(|e| LinalgError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(&line));
            }
            let r = parts[0].parse().map_err(|_| bad(&line))?;
            let c = parts[1].parse().map_err(|_| bad(&line))?;
            let v = parse_rational(parts[2]).ok_or_else(|| bad(&line))?;
            triplets.push((r, c, v));
        }
        if triplets.len() != nnz {
            return Err(bad("entry count does not match header"));
        }
        Self::from_triplets(rows, cols, triplets)
    }

    /// Groups rows and columns into the connected components of the bipartite
    /// incidence graph. Empty rows and columns belong to no component.
    fn components(&self) -> Vec<SparseMatrix> {
        let mut parent: Vec<usize> = (0..self.rows).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut first_row_of_col: Vec<Option<usize>> = vec![None; self.cols];
        for (r, row) in self.data.iter().enumerate() {
            for (c, _) in row {
                match first_row_of_col[*c] {
                    None => first_row_of_col[*c] = Some(r),
                    Some(r0) => {
                        let (a, b) = (find(&mut parent, r0), find(&mut parent, r));
                        if a != b {
                            let (lo, hi) = (a.min(b), a.max(b));
                            parent[hi] = lo;
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in 0..self.rows {
            if !self.data[r].is_empty() {
                let root = find(&mut parent, r);
                groups.entry(root).or_default().push(r);
            }
        }
        groups
            .into_values()
            .map(|rows| {
                let mut col_map: BTreeMap<usize, usize> = BTreeMap::new();
                for &r in &rows {
                    for (c, _) in &self.data[r] {
                        col_map.insert(*c, 0);
                    }
                }
                for (i, v) in col_map.values_mut().enumerate() {
                    *v = i;
                }
                let data = rows
                    .iter()
                    .map(|&r| {
                        self.data[r]
                            .iter()
                            .map(|(c, v)| (col_map[c], v.clone()))
                            .collect()
                    })
                    .collect();
                SparseMatrix {
                    rows: rows.len(),
                    cols: col_map.len(),
                    data,
                }
            })
            .collect()
    }
}

/// `row -= factor * pivot`, both sorted by column.
fn axpy(row: &[(usize, Rational)], factor: &Rational, pivot: &[(usize, Rational)]) -> Row {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map_or(usize::MAX, |e| e.0);
        let cj = pivot.get(j).map_or(usize::MAX, |e| e.0);
        if ci < cj {
            out.push(row[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, -(factor * &pivot[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - factor * &pivot[j].1;
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Sparse echelon form by leading-entry insertion.
///
/// Columns are renumbered so the sparsest come first (ties: lowest original index)
/// and rows are inserted sparsest first; `pinned_last` keeps the given column at the
/// end of the order (used for the right-hand side of [`solve`]).
struct Echelon {
    /// position -> original column
    order: Vec<usize>,
    /// pivot rows keyed by leading position, normalized so the leading entry is 1;
    /// entries are (position, value)
    pivots: BTreeMap<usize, Row>,
}

impl Echelon {
    fn build(m: &SparseMatrix, pinned_last: Option<usize>) -> Self {
        let mut col_count = vec![0usize; m.cols];
        for (_, c, _) in m.entries() {
            col_count[c] += 1;
        }
        let mut order: Vec<usize> = (0..m.cols).filter(|&c| Some(c) != pinned_last).collect();
        order.sort_by_key(|&c| (col_count[c], c));
        if let Some(c) = pinned_last {
            order.push(c);
        }
        let mut position = vec![0usize; m.cols];
        for (pos, &c) in order.iter().enumerate() {
            position[c] = pos;
        }

        let mut row_order: Vec<usize> = (0..m.rows).collect();
        row_order.sort_by_key(|&r| (m.data[r].len(), r));

        let mut pivots: BTreeMap<usize, Row> = BTreeMap::new();
        for r in row_order {
            let mut row: Row = m.data[r]
                .iter()
                .map(|(c, v)| (position[*c], v.clone()))
                .collect();
            row.sort_by_key(|e| e.0);
            while let Some((lead, lead_val)) = row.first().cloned() {
                match pivots.get(&lead) {
                    Some(p) => row = axpy(&row, &lead_val, p),
                    None => {
                        let inv = lead_val.recip();
                        for (_, v) in row.iter_mut() {
                            *v *= &inv;
                        }
                        pivots.insert(lead, row);
                        break;
                    }
                }
            }
        }
        Echelon { order, pivots }
    }
}

fn component_rank(m: &SparseMatrix) -> usize {
    // Eliminate along the shorter side.
    if m.rows > m.cols {
        Echelon::build(&m.transpose(), None).pivots.len()
    } else {
        Echelon::build(m, None).pivots.len()
    }
}

/// Rank over ℚ.
pub fn rank(m: &SparseMatrix) -> usize {
    let comps = m.components();
    let total: usize = comps.iter().map(|c| c.nnz()).sum();
    if total > 2_000 && comps.len() > 1 {
        comps.par_iter().map(component_rank).sum()
    } else {
        comps.iter().map(component_rank).sum()
    }
}

/// Dimension of the kernel of `x ↦ Mx`.
pub fn nullspace_dim(m: &SparseMatrix) -> usize {
    m.cols - rank(m)
}

/// Finds some `x` with `Mx = b`, or `None` if the system is inconsistent.
/// Free variables are set to zero.
pub fn solve(m: &SparseMatrix, b: &[Rational]) -> Result<Option<Vec<Rational>>, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows,
            got: b.len(),
        });
    }
    let rhs_col = m.cols;
    let mut aug = m.data.clone();
    for (r, v) in b.iter().enumerate() {
        if !v.is_zero() {
            aug[r].push((rhs_col, v.clone()));
        }
    }
    let augmented = SparseMatrix {
        rows: m.rows,
        cols: m.cols + 1,
        data: aug,
    };
    let ech = Echelon::build(&augmented, Some(rhs_col));
    let rhs_pos = ech.order.len() - 1;
    if ech.pivots.contains_key(&rhs_pos) {
        return Ok(None);
    }
    // Back substitution in decreasing pivot position, in permuted coordinates.
    let mut x_pos: HashMap<usize, Rational> = HashMap::new();
    for (&lead, row) in ech.pivots.iter().rev() {
        let mut val = Rational::zero();
        for (pos, v) in row.iter().skip(1) {
            if *pos == rhs_pos {
                val += v;
            } else if let Some(xv) = x_pos.get(pos) {
                val -= v * xv;
            }
        }
        if !val.is_zero() {
            x_pos.insert(lead, val);
        }
    }
    let mut x = vec![Rational::zero(); m.cols];
    for (pos, v) in x_pos {
        x[ech.order[pos]] = v;
    }
    debug_assert_eq!(m.mul_vec(&x).unwrap(), b);
    Ok(Some(x))
}

/// Clears denominators of a vector by the lcm and removes the common content,
/// giving a primitive integer vector with a positive first nonzero entry.
pub fn primitive_integer(v: &[Rational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, n| acc.gcd(n));
    if g.is_zero() {
        return ints;
    }
    let sign = ints
        .iter()
        .find(|n| !n.is_zero())
        .map_or(BigInt::one(), |n| if n.is_negative() { -BigInt::one() } else { BigInt::one() });
    ints.into_iter().map(|n| n / &g * &sign).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&SparseMatrix::zeros(3, 3)), 0);
        assert_eq!(rank(&SparseMatrix::identity(4)), 4);
        let m = SparseMatrix::from_int_rows(&[&[1, 2], &[2, 4], &[1, 1]]);
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace_dim(&SparseMatrix::zeros(3, 5)), 5);
        assert_eq!(nullspace_dim(&SparseMatrix::identity(4)), 0);
        let m = SparseMatrix::from_int_rows(&[&[1, 2], &[2, 4], &[1, 1]]);
        assert_eq!(nullspace_dim(&m), 0);
    }

    #[test]
    fn solve_examples() {
        let id = SparseMatrix::identity(2);
        let b = vec![rat(3), ratio(-1, 2)];
        assert_eq!(solve(&id, &b).unwrap(), Some(b.clone()));

        let m = SparseMatrix::from_int_rows(&[&[1, 1], &[2, 2]]);
        assert_eq!(solve(&m, &[rat(1), rat(3)]).unwrap(), None);

        let m = SparseMatrix::from_int_rows(&[&[2]]);
        assert_eq!(solve(&m, &[rat(5)]).unwrap(), Some(vec![ratio(5, 2)]));
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let m = SparseMatrix::identity(2);
        assert_eq!(
            solve(&m, &[rat(1)]),
            Err(LinalgError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn out_of_bounds_triplet() {
        let err = SparseMatrix::from_triplets(2, 2, [(2, 0, rat(1))]).unwrap_err();
        assert!(matches!(err, LinalgError::OutOfBounds { row: 2, .. }));
    }

    #[test]
    fn duplicate_triplets_cancel() {
        let m = SparseMatrix::from_triplets(1, 1, [(0, 0, rat(2)), (0, 0, rat(-2))]).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn dump_format() {
        let m = SparseMatrix::from_triplets(2, 3, [(1, 2, ratio(-3, 4)), (0, 1, rat(2))]).unwrap();
        assert_eq!(m.to_dump_string(), "2 3 2\n0 1 2/1\n1 2 -3/4\n");
        let back = SparseMatrix::read_dump(m.to_dump_string().as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn block_diagonal_rank_adds() {
        let m = SparseMatrix::from_int_rows(&[
            &[1, 1, 0, 0],
            &[2, 2, 0, 0],
            &[0, 0, 1, 0],
            &[0, 0, 0, 3],
        ]);
        assert_eq!(rank(&m), 3);
        assert_eq!(m.components().len(), 3);
    }

    #[test]
    fn primitive_vector() {
        let v = vec![ratio(-1, 2), ratio(1, 3), rat(0)];
        let p = primitive_integer(&v);
        assert_eq!(p, vec![BigInt::from(3), BigInt::from(-2), BigInt::from(0)]);
    }
}
