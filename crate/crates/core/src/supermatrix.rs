//! Block supermatrices over the Grassmann ring.
//!
//! Rows and columns are labelled even-first: a `(p, q)` layout means the
//! first `p` indices are even and the remaining `q` are odd. A parity-valid
//! (even) supermatrix has even entries in the even-even and odd-odd blocks and
//! odd entries in the off-diagonal blocks.

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result, ResultExt};
use crate::grassmann::{Grassmann, Parity, Rational};
use crate::json;
use crate::random::random_element;

pub type Layout = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperMatrix {
    num_generators: usize,
    row_layout: Layout,
    col_layout: Layout,
    entries: Vec<Vec<Grassmann>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityReport {
    pub valid: bool,
    pub violations: Vec<(usize, usize)>,
}

fn layout_parity(layout: Layout, index: usize) -> Parity {
    if index < layout.0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

impl SuperMatrix {
    pub fn new(
        num_generators: usize,
        row_layout: Layout,
        col_layout: Layout,
        entries: Vec<Vec<Grassmann>>,
    ) -> Result<Self> {
        let (rows, cols) = (row_layout.0 + row_layout.1, col_layout.0 + col_layout.1);
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(Error::LayoutMismatch(format!(
                "expected {rows}x{cols} entries for layouts {row_layout:?} x {col_layout:?}"
            )));
        }
        for row in &entries {
            for x in row {
                if x.num_generators() != num_generators {
                    return Err(Error::GeneratorMismatch {
                        left: num_generators,
                        right: x.num_generators(),
                    });
                }
            }
        }
        Ok(SuperMatrix {
            num_generators,
            row_layout,
            col_layout,
            entries,
        })
    }

    pub fn identity(num_generators: usize, layout: Layout) -> Self {
        let size = layout.0 + layout.1;
        let entries = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| {
                        if i == j {
                            Grassmann::one(num_generators)
                        } else {
                            Grassmann::zero(num_generators)
                        }
                    })
                    .collect()
            })
            .collect();
        SuperMatrix {
            num_generators,
            row_layout: layout,
            col_layout: layout,
            entries,
        }
    }

    pub fn zeros(num_generators: usize, row_layout: Layout, col_layout: Layout) -> Self {
        let entries = vec![
            vec![Grassmann::zero(num_generators); col_layout.0 + col_layout.1];
            row_layout.0 + row_layout.1
        ];
        SuperMatrix {
            num_generators,
            row_layout,
            col_layout,
            entries,
        }
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }
    pub fn row_layout(&self) -> Layout {
        self.row_layout
    }
    pub fn col_layout(&self) -> Layout {
        self.col_layout
    }
    pub fn rows(&self) -> usize {
        self.entries.len()
    }
    pub fn cols(&self) -> usize {
        self.col_layout.0 + self.col_layout.1
    }
    pub fn entries(&self) -> &[Vec<Grassmann>] {
        &self.entries
    }
    pub fn get(&self, i: usize, j: usize) -> &Grassmann {
        &self.entries[i][j]
    }
    pub fn set(&mut self, i: usize, j: usize, value: Grassmann) {
        assert_eq!(value.num_generators(), self.num_generators);
        self.entries[i][j] = value;
    }
    pub fn row_parity(&self, i: usize) -> Parity {
        layout_parity(self.row_layout, i)
    }
    pub fn col_parity(&self, j: usize) -> Parity {
        layout_parity(self.col_layout, j)
    }

    /// Parity an entry must have for the matrix to be even.
    pub fn expected_parity(&self, i: usize, j: usize) -> Parity {
        self.row_parity(i).add(self.col_parity(j))
    }

    pub fn validate_parity(&self) -> ParityReport {
        let mut violations = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if !x.has_parity(self.expected_parity(i, j)) {
                    violations.push((i, j));
                }
            }
        }
        ParityReport {
            valid: violations.is_empty(),
            violations,
        }
    }

    pub fn is_parity_valid(&self) -> bool {
        self.validate_parity().valid
    }

    pub fn body(&self) -> Vec<Vec<Rational>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(Grassmann::body).collect())
            .collect()
    }

    pub fn multiply(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        if self.col_layout != other.row_layout {
            return Err(Error::LayoutMismatch(format!(
                "cannot multiply column layout {:?} by row layout {:?}",
                self.col_layout, other.row_layout
            )));
        }
        if self.num_generators != other.num_generators {
            return Err(Error::GeneratorMismatch {
                left: self.num_generators,
                right: other.num_generators,
            });
        }
        let entries = mat_mul(&self.entries, &other.entries, self.num_generators);
        Ok(SuperMatrix {
            num_generators: self.num_generators,
            row_layout: self.row_layout,
            col_layout: other.col_layout,
            entries,
        })
    }

    /// Plain (entrywise) transpose with the layouts swapped.
    pub fn transpose(&self) -> SuperMatrix {
        let entries = (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.entries[i][j].clone()).collect())
            .collect();
        SuperMatrix {
            num_generators: self.num_generators,
            row_layout: self.col_layout,
            col_layout: self.row_layout,
            entries,
        }
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Vec<Grassmann>> {
        rows.map(|i| self.entries[i][cols.clone()].to_vec()).collect()
    }

    /// `Ber [[A, B], [C, D]] = det(A − B D⁻¹ C) · det(D)⁻¹`.
    pub fn berezinian(&self) -> Result<Grassmann> {
        if self.row_layout != self.col_layout {
            return Err(Error::NotSquare);
        }
        if let Some(&(row, col)) = self.validate_parity().violations.first() {
            return Err(Error::ParityViolation { row, col });
        }
        let n = self.num_generators;
        let (p, q) = self.row_layout;
        let size = p + q;
        let a = self.block(0..p, 0..p);
        if q == 0 {
            return determinant_even(&a, n);
        }
        let d = self.block(p..size, p..size);
        let det_d = determinant_even(&d, n)?;
        if det_d.body().is_zero() {
            return Err(Error::SingularOddBlock);
        }
        if p == 0 {
            return det_d.invert();
        }
        let b = self.block(0..p, p..size);
        let c = self.block(p..size, 0..p);
        let d_inv = invert_square(&d, n).map_err(|_| Error::SingularOddBlock)?;
        let bdc = mat_mul(&mat_mul(&b, &d_inv, n), &c, n);
        let schur: Vec<Vec<Grassmann>> = a
            .iter()
            .zip(&bdc)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
            .collect();
        let det_s = determinant_even(&schur, n)?;
        Ok(&det_s * &det_d.invert()?)
    }

    /// Deterministic left inverse `L` with `L·M = I`.
    ///
    /// A rational left inverse `L₀` of the body is read off the first
    /// independent body rows; the nilpotent remainder `K = L₀(M − body M)` is
    /// absorbed by the terminating Neumann series for `(I + K)⁻¹`.
    pub fn left_inverse(&self) -> Result<SuperMatrix> {
        let (m, k) = (self.rows(), self.cols());
        if m < k {
            return Err(Error::LayoutMismatch(format!(
                "left inverse needs at least as many rows as columns, got {m}x{k}"
            )));
        }
        let n = self.num_generators;
        let body = self.body();
        let pivots = independent_rows(&body, k).ok_or(Error::BodyRankDeficient)?;
        let square: Vec<Vec<Rational>> = pivots.iter().map(|&i| body[i].clone()).collect();
        let square_inv = invert_rational(&square).ok_or(Error::BodyRankDeficient)?;
        // L0 is k x m with the inverse spread over the pivot columns.
        let mut l0 = vec![vec![Grassmann::zero(n); m]; k];
        for (r, row) in square_inv.iter().enumerate() {
            for (c, &i) in pivots.iter().enumerate() {
                l0[r][i] = Grassmann::scalar(n, row[c].clone());
            }
        }
        let soul: Vec<Vec<Grassmann>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(Grassmann::soul).collect())
            .collect();
        let kmat = mat_mul(&l0, &soul, n);
        let correction = neumann_inverse(&kmat, n);
        Ok(SuperMatrix {
            num_generators: n,
            row_layout: self.col_layout,
            col_layout: self.row_layout,
            entries: mat_mul(&correction, &l0, n),
        })
    }

    /// Another left inverse, `L + Z(I − M L)` for a seeded random `Z` whose
    /// entries respect the block parities of `L`.
    pub fn left_inverse_randomized(&self, seed: u64) -> Result<SuperMatrix> {
        let l = self.left_inverse()?;
        let n = self.num_generators;
        let z = random_like(&l, seed);
        let ml = mat_mul(&self.entries, &l.entries, n);
        let proj = sub_from_identity(&ml, n);
        let extra = mat_mul(&z, &proj, n);
        Ok(SuperMatrix {
            entries: mat_add(&l.entries, &extra),
            ..l
        })
    }

    /// Deterministic right inverse `R` with `M·R = I`, mirroring
    /// [`SuperMatrix::left_inverse`] on columns.
    pub fn right_inverse(&self) -> Result<SuperMatrix> {
        let (m, k) = (self.rows(), self.cols());
        if k < m {
            return Err(Error::LayoutMismatch(format!(
                "right inverse needs at least as many columns as rows, got {m}x{k}"
            )));
        }
        let n = self.num_generators;
        let body_t = transpose_rational(&self.body());
        let pivots = independent_rows(&body_t, m).ok_or(Error::BodyRankDeficient)?;
        // Square block with the pivot columns, rows of M.
        let square: Vec<Vec<Rational>> = (0..m)
            .map(|i| pivots.iter().map(|&j| body_t[j][i].clone()).collect())
            .collect();
        let square_inv = invert_rational(&square).ok_or(Error::BodyRankDeficient)?;
        let mut r0 = vec![vec![Grassmann::zero(n); m]; k];
        for (c, &j) in pivots.iter().enumerate() {
            for r in 0..m {
                r0[j][r] = Grassmann::scalar(n, square_inv[c][r].clone());
            }
        }
        let soul: Vec<Vec<Grassmann>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(Grassmann::soul).collect())
            .collect();
        let kmat = mat_mul(&soul, &r0, n);
        let correction = neumann_inverse(&kmat, n);
        Ok(SuperMatrix {
            num_generators: n,
            row_layout: self.col_layout,
            col_layout: self.row_layout,
            entries: mat_mul(&r0, &correction, n),
        })
    }

    /// Another right inverse, `R + (I − R M) Z` for a seeded random `Z`.
    pub fn right_inverse_randomized(&self, seed: u64) -> Result<SuperMatrix> {
        let r = self.right_inverse()?;
        let n = self.num_generators;
        let z = random_like(&r, seed);
        let rm = mat_mul(&r.entries, &self.entries, n);
        let proj = sub_from_identity(&rm, n);
        let extra = mat_mul(&proj, &z, n);
        Ok(SuperMatrix {
            entries: mat_add(&r.entries, &extra),
            ..r
        })
    }

    pub fn to_json(&self) -> Value {
        json::object(vec![
            ("row_layout", serde_json::json!([self.row_layout.0, self.row_layout.1])),
            ("col_layout", serde_json::json!([self.col_layout.0, self.col_layout.1])),
            (
                "entries",
                Value::Array(
                    self.entries
                        .iter()
                        .map(|r| Value::Array(r.iter().map(json::element_to_json).collect()))
                        .collect(),
                ),
            ),
        ])
    }

    pub fn from_json(v: &Value, num_generators: usize) -> Result<SuperMatrix> {
        let layout = |name: &str| -> Result<Layout> {
            let arr = json::array_field(v, name)?;
            match arr.as_slice() {
                [p, q] => match (p.as_u64(), q.as_u64()) {
                    (Some(p), Some(q)) => Ok((p as usize, q as usize)),
                    _ => Err(Error::Malformed(format!("`{name}` must hold two nonnegative integers"))),
                },
                _ => Err(Error::Malformed(format!("`{name}` must have two entries"))),
            }
        };
        let row_layout = layout("row_layout")?;
        let col_layout = layout("col_layout")?;
        let rows = json::array_field(v, "entries")?;
        let mut entries = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Malformed("each row must be an array".into()))
                .at(format!("entries[{i}]"))?;
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, x)| json::element_from_json(x, num_generators).at(format!("entries[{i}][{j}]")))
                .collect::<Result<Vec<_>>>()?;
            entries.push(parsed);
        }
        SuperMatrix::new(num_generators, row_layout, col_layout, entries)
    }
}

pub(crate) fn mat_mul(a: &[Vec<Grassmann>], b: &[Vec<Grassmann>], n: usize) -> Vec<Vec<Grassmann>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(Grassmann::zero(n), |acc, (x, brow)| &acc + &(x * &brow[j]))
                })
                .collect()
        })
        .collect()
}

fn mat_add(a: &[Vec<Grassmann>], b: &[Vec<Grassmann>]) -> Vec<Vec<Grassmann>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

fn sub_from_identity(a: &[Vec<Grassmann>], n: usize) -> Vec<Vec<Grassmann>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| {
                    if i == j {
                        &Grassmann::one(n) - x
                    } else {
                        -x
                    }
                })
                .collect()
        })
        .collect()
}

fn random_like(m: &SuperMatrix, seed: u64) -> Vec<Vec<Grassmann>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| random_element(&mut rng, m.num_generators, m.expected_parity(i, j), 2))
                .collect()
        })
        .collect()
}

/// `(I + K)⁻¹` for a square `K` with nilpotent entries.
fn neumann_inverse(k: &[Vec<Grassmann>], n: usize) -> Vec<Vec<Grassmann>> {
    let size = k.len();
    let identity = SuperMatrix::identity(n, (size, 0)).entries;
    let neg_k: Vec<Vec<Grassmann>> = k.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let mut sum = identity.clone();
    let mut power = identity;
    loop {
        power = mat_mul(&power, &neg_k, n);
        if power.iter().all(|r| r.iter().all(Grassmann::is_zero)) {
            return sum;
        }
        sum = mat_add(&sum, &power);
    }
}

/// Indices of the first `want` rows that are linearly independent.
fn independent_rows(rows: &[Vec<Rational>], want: usize) -> Option<Vec<usize>> {
    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    let mut chosen = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if chosen.len() == want {
            break;
        }
        let mut v = row.clone();
        for (pivot, b) in &basis {
            if !v[*pivot].is_zero() {
                let factor = v[*pivot].clone() / b[*pivot].clone();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= factor.clone() * y;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|x| !x.is_zero()) {
            basis.push((pivot, v));
            chosen.push(i);
        }
    }
    (chosen.len() == want).then_some(chosen)
}

fn transpose_rational(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn invert_rational(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let size = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..size).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let inv = aug[col][col].recip();
        for x in aug[col].iter_mut() {
            *x *= inv.clone();
        }
        for r in 0..size {
            if r != col && !aug[r][col].is_zero() {
                let factor = aug[r][col].clone();
                let pivot_row = aug[col].clone();
                for (x, y) in aug[r].iter_mut().zip(pivot_row) {
                    *x -= factor.clone() * y;
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[size..].to_vec()).collect())
}

/// Inverse of a square matrix over the Grassmann ring by Gauss-Jordan
/// elimination with invertible-body pivots (row operations act from the left).
pub fn invert_square(a: &[Vec<Grassmann>], n: usize) -> Result<Vec<Vec<Grassmann>>> {
    let size = a.len();
    let mut left = a.to_vec();
    let mut right = SuperMatrix::identity(n, (size, 0)).entries;
    for col in 0..size {
        let pivot = (col..size)
            .find(|&r| !left[r][col].body().is_zero())
            .ok_or(Error::NotInvertible)?;
        left.swap(col, pivot);
        right.swap(col, pivot);
        let inv = left[col][col].invert()?;
        left[col] = left[col].iter().map(|x| &inv * x).collect();
        right[col] = right[col].iter().map(|x| &inv * x).collect();
        for r in 0..size {
            if r != col && !left[r][col].is_zero() {
                let factor = left[r][col].clone();
                let (pl, pr) = (left[col].clone(), right[col].clone());
                for (x, y) in left[r].iter_mut().zip(&pl) {
                    *x = &*x - &(&factor * y);
                }
                for (x, y) in right[r].iter_mut().zip(&pr) {
                    *x = &*x - &(&factor * y);
                }
            }
        }
    }
    Ok(right)
}

/// Determinant of a square matrix with entries in the even (commutative)
/// subring.
///
/// Fraction-free Bareiss elimination; each division is by a previous pivot
/// with invertible body, so it is exact. When no such pivot remains the body
/// is singular and the division-free subset expansion is used instead.
pub fn determinant_even(a: &[Vec<Grassmann>], n: usize) -> Result<Grassmann> {
    let size = a.len();
    if a.iter().any(|r| r.len() != size) {
        return Err(Error::NotSquare);
    }
    if size == 0 {
        return Ok(Grassmann::one(n));
    }
    let mut m = a.to_vec();
    let mut negate = false;
    let mut prev = Grassmann::one(n);
    for k in 0..size {
        let Some(pivot) = (k..size).find(|&r| !m[r][k].body().is_zero()) else {
            return Ok(determinant_by_subsets(a, n));
        };
        if pivot != k {
            m.swap(k, pivot);
            negate = !negate;
        }
        let prev_inv = prev.invert()?;
        for i in k + 1..size {
            for j in k + 1..size {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = &num * &prev_inv;
            }
            m[i][k] = Grassmann::zero(n);
        }
        prev = m[k][k].clone();
    }
    let det = m[size - 1][size - 1].clone();
    Ok(if negate { -det } else { det })
}

/// Division-free determinant: sums over column subsets row by row.
pub fn determinant_by_subsets(a: &[Vec<Grassmann>], n: usize) -> Grassmann {
    let size = a.len();
    assert!(size < 24, "subset expansion is exponential in the matrix size");
    let mut partial = vec![Grassmann::zero(n); 1 << size];
    partial[0] = Grassmann::one(n);
    for mask in 0usize..(1 << size) {
        if partial[mask].is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == size {
            continue;
        }
        for col in 0..size {
            if mask & (1 << col) != 0 || a[row][col].is_zero() {
                continue;
            }
            let above = (mask >> (col + 1)).count_ones();
            let term = &partial[mask] * &a[row][col];
            let next = mask | (1 << col);
            partial[next] = if above % 2 == 1 {
                &partial[next] - &term
            } else {
                &partial[next] + &term
            };
        }
    }
    partial[(1 << size) - 1].clone()
}
