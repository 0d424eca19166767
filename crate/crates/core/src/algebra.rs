//! Value types shared by the cumulant and magic-unitary layers: exact
//! rationals and small dense complex matrices, behind one [`Ring`] trait.

use std::fmt;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The operations nested moment evaluation and magic-unitary sums need.
///
/// Matrix values carry their dimension, so constants are produced from an
/// existing value (`zero_like`, `one_like`) rather than from nothing.
pub trait Ring: Clone + fmt::Debug + Send + Sync {
    /// Whether equality is exact. Inexact rings are compared with a tolerance.
    const EXACT: bool;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, q: &BigRational) -> Self;
    fn adjoint(&self) -> Self;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn vanishes(&self) -> bool;
    /// Largest entry magnitude.
    fn max_abs(&self) -> f64;

    /// Entrywise sup-distance. Exact rings report 0 only on exact equality.
    fn distance(&self, other: &Self) -> f64 {
        let diff = self.sub(other);
        if diff.vanishes() {
            0.0
        } else {
            diff.max_abs().max(f64::MIN_POSITIVE)
        }
    }

    /// Equality at the ring's comparison standard: exact, or within `tol`.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self.sub(other).vanishes()
        } else {
            self.distance(other) <= tol
        }
    }
}

impl Ring for BigRational {
    const EXACT: bool = true;

    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, q: &BigRational) -> Self {
        self * q
    }
    fn adjoint(&self) -> Self {
        self.clone()
    }
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn max_abs(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Dense complex matrix used for operator-valued values and magic-unitary
/// blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix(pub DMatrix<Complex64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        CMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        CMatrix(DMatrix::from_fn(r, c, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    /// `self ⊗ 1_m` with the `self` index as the slow one.
    pub fn kron_identity(&self, m: usize) -> Self {
        CMatrix(self.0.kronecker(&DMatrix::<Complex64>::identity(m, m)))
    }

    /// Diagonal matrix with real entries.
    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        CMatrix(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::zero()
            }
        }))
    }
}

impl Ring for CMatrix {
    const EXACT: bool = false;

    fn add(&self, other: &Self) -> Self {
        CMatrix(&self.0 + &other.0)
    }
    fn sub(&self, other: &Self) -> Self {
        CMatrix(&self.0 - &other.0)
    }
    fn mul(&self, other: &Self) -> Self {
        CMatrix(&self.0 * &other.0)
    }
    fn scale(&self, q: &BigRational) -> Self {
        let s = q.to_f64().unwrap_or(f64::NAN);
        CMatrix(self.0.map(|z| z * s))
    }
    fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn one_like(&self) -> Self {
        CMatrix::identity(self.nrows())
    }
    fn vanishes(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
    fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Serializes a rational as `"p/q"` with `q > 0` and `gcd(p, q) = 1`.
pub fn rational_to_string(q: &BigRational) -> String {
    // BigRational is kept reduced with a positive denominator.
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::parse(format!("invalid integer {t:?} in rational {s:?}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let p = parse_int(p)?;
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(Error::parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

#[cfg(test)]
pub(crate) fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
pub(crate) fn int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}
