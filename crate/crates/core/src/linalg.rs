//! Exact linear algebra over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    cols: usize,
    rows: Vec<Vec<BigRational>>,
}

impl Matrix {
    pub fn new(cols: usize) -> Matrix {
        Matrix {
            cols,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<BigRational>>) -> Matrix {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Matrix { cols, rows }
    }

    pub fn push_row(&mut self, row: Vec<BigRational>) {
        assert_eq!(row.len(), self.cols, "row length");
        self.rows.push(row);
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    /// Reduced row echelon form, dropping zero rows. Returns the pivot column
    /// of each remaining row.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut a = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == a.len() {
                break;
            }
            let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(r, p);
            let inv = a[r][c].recip();
            for v in a[r].iter_mut().skip(c) {
                *v *= &inv;
            }
            let pivot_row = a[r].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == r || row[c].is_zero() {
                    continue;
                }
                let k = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                    if !pv.is_zero() {
                        *v -= &k * pv;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        a.truncate(r);
        (
            Matrix {
                cols: self.cols,
                rows: a,
            },
            pivots,
        )
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : A v = 0}`, one vector per free column, each with a 1 in
    /// its free column.
    pub fn nullspace(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[free] = BigRational::one();
                for (row, &p) in r.rows.iter().zip(&pivots) {
                    v[p] = -row[free].clone();
                }
                v
            })
            .collect()
    }

    /// True when `v` lies in the row space.
    pub fn row_space_contains(&self, v: &[BigRational]) -> bool {
        let mut ext = self.clone();
        ext.push_row(v.to_vec());
        ext.rank() == self.rank()
    }
}

/// Canonical basis of the span of `vectors`: reduced echelon rows, each
/// rescaled to a primitive integer vector with a positive pivot.
pub fn canonical_basis(cols: usize, vectors: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let (r, _) = Matrix::from_rows(cols, vectors).rref();
    r.rows.into_iter().map(|v| primitive(&v)).collect()
}

/// Scales a nonzero vector to coprime integer entries whose first nonzero
/// entry is positive. The zero vector is returned unchanged.
pub fn primitive(v: &[BigRational]) -> Vec<BigRational> {
    let Some(first) = v.iter().find(|c| !c.is_zero()) else {
        return v.to_vec();
    };
    let lcm = v
        .iter()
        .filter(|c| !c.is_zero())
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints
        .iter()
        .filter(|c| !c.is_zero())
        .fold(BigInt::zero(), |acc, c| acc.gcd(c));
    let sign = if first.is_negative() {
        -BigInt::one()
    } else {
        BigInt::one()
    };
    let d = gcd * sign;
    ints.into_iter()
        .map(|c| BigRational::from_integer(c / &d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn row(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn rref_of_rank_deficient_matrix() {
        let m = Matrix::from_rows(3, vec![row(&[1, 2, 3]), row(&[2, 4, 6]), row(&[1, 0, 1])]);
        let (r, pivots) = m.rref();
        assert_eq!(pivots, vec![0, 1]);
        assert_eq!(r.rows()[0], row(&[1, 0, 1]));
        assert_eq!(r.rows()[1], row(&[0, 1, 1]));
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let m = Matrix::from_rows(
            4,
            vec![row(&[1, 2, 0, -1]), row(&[0, 0, 1, 3]), row(&[1, 2, 1, 2])],
        );
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for r in m.rows() {
                let dot: BigRational = r.iter().zip(v).map(|(a, b)| a * b).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn nullspace_of_full_rank_is_empty() {
        let m = Matrix::from_rows(2, vec![row(&[1, 1]), row(&[1, -1])]);
        assert!(m.nullspace().is_empty());
        assert!(Matrix::new(0).nullspace().is_empty());
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![q(0, 1), q(-1, 2), q(3, 4)];
        assert_eq!(primitive(&v), row(&[0, 2, -3]));
        assert_eq!(primitive(&row(&[4, 6])), row(&[2, 3]));
    }

    #[test]
    fn row_space_membership() {
        let m = Matrix::from_rows(3, vec![row(&[1, 0, 1]), row(&[0, 1, 1])]);
        assert!(m.row_space_contains(&row(&[2, -3, -1])));
        assert!(!m.row_space_contains(&row(&[0, 0, 1])));
    }
}
