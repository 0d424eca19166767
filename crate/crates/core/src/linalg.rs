//! Fraction-free exact inversion of integer matrices.

use num::{BigInt, BigRational, Integer, One, Zero};
use rayon::prelude::*;

/// Inverse of a square integer matrix, or `None` if it is singular.
///
/// Fraction-free Gauss–Jordan elimination (Bareiss' one-step rule applied to
/// every row of the augmented matrix `[A | I]`): each update
/// `a_rj ← (p·a_rj − a_rc·a_cj) / p_prev` divides exactly, so all intermediate
/// entries stay integral. On completion the left block is `det·I` and the
/// right block is `det·A⁻¹`. Pivots are taken in index order; a row swap
/// happens only when the pivot is zero. Row updates within a step are
/// independent and run in parallel; the arithmetic is exact, so the result
/// does not depend on scheduling.
pub fn invert_fraction_free(a: &[Vec<BigInt>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n), "matrix must be square");
    let width = 2 * n;
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            r
        })
        .collect();

    let mut prev = BigInt::one();
    for c in 0..n {
        if m[c][c].is_zero() {
            let swap = (c + 1..n).find(|&r| !m[r][c].is_zero())?;
            m.swap(c, swap);
        }
        let pivot_row = m[c].clone();
        let pivot = pivot_row[c].clone();
        m.par_iter_mut()
            .enumerate()
            .filter(|(r, _)| *r != c)
            .for_each(|(_, row)| {
                let factor = row[c].clone();
                for j in 0..width {
                    if j == c {
                        continue;
                    }
                    let num = &pivot * &row[j] - &factor * &pivot_row[j];
                    let (q, rem) = num.div_rem(&prev);
                    debug_assert!(rem.is_zero(), "fraction-free step must divide exactly");
                    row[j] = q;
                }
                row[c] = BigInt::zero();
            });
        prev = pivot;
    }

    // After the last step every diagonal entry equals the final pivot.
    let det = prev;
    Some(
        m.into_iter()
            .map(|row| {
                row[n..]
                    .iter()
                    .map(|x| BigRational::new(x.clone(), det.clone()))
                    .collect()
            })
            .collect(),
    )
}

/// Exact product of an integer matrix and a rational matrix.
pub fn mul_int_rational(a: &[Vec<BigInt>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.par_iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = BigRational::zero();
                    for t in 0..inner {
                        if !row[t].is_zero() && !b[t][j].is_zero() {
                            acc += BigRational::from_integer(row[t].clone()) * &b[t][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Whether a rational matrix is exactly the identity.
pub fn is_identity(m: &[Vec<BigRational>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
    })
}

/// Whether a matrix is symmetric.
pub fn is_symmetric<T: PartialEq>(m: &[Vec<T>]) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, x)| *x == m[j][i]))
}
