//! Exact rational scalars and a small dense linear-algebra kit that works over
//! both `BigRational` (exact) and `f64` (tolerance based).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact conversion: every finite double is a dyadic rational.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    Rat::from_float(x).ok_or_else(|| Error::param(format!("non-finite value {x}")))
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3/7"`, `"-2"`, or a decimal such as `"0.125"` (decimal parsed exactly).
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::parse(s, "bad numerator"))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::parse(s, "bad denominator"))?;
        if d.is_zero() {
            return Err(Error::parse(s, "zero denominator"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits
            .parse()
            .map_err(|_| Error::parse(s, "bad decimal"))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rat::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| Error::parse(s, "bad integer"))?;
    Ok(Rat::from_integer(n))
}

/// Scalar field used by the elimination and simplex routines.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Zero test: exact for rationals, absolute tolerance for floats.
    fn near_zero(&self) -> bool;

    fn is_positive(&self) -> bool {
        !self.near_zero() && *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        !self.near_zero() && *self < Self::zero()
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Field for Rat {
    fn near_zero(&self) -> bool {
        self.is_zero()
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }
}

pub const F64_EPS: f64 = 1e-11;

impl Field for f64 {
    fn near_zero(&self) -> bool {
        self.abs() <= F64_EPS
    }
}

/// Row-reduces a copy of `rows` and returns `(reduced, pivot_columns)`.
pub fn row_reduce<T: Field>(rows: &[Vec<T>]) -> (Vec<Vec<T>>, Vec<usize>) {
    let mut m: Vec<Vec<T>> = rows.to_vec();
    let n_rows = m.len();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n_cols {
        if r == n_rows {
            break;
        }
        // largest magnitude pivot keeps the float path stable; exact path just needs nonzero
        let mut best = None;
        let mut best_abs = T::zero();
        for (i, row) in m.iter().enumerate().skip(r) {
            if !row[c].near_zero() {
                let a = row[c].abs_val();
                if best.is_none() || a > best_abs {
                    best = Some(i);
                    best_abs = a;
                }
            }
        }
        let Some(p) = best else { continue };
        m.swap(r, p);
        let inv = T::one() / m[r][c].clone();
        for j in c..n_cols {
            m[r][j] = m[r][j].clone() * inv.clone();
        }
        for i in 0..n_rows {
            if i != r && !m[i][c].near_zero() {
                let f = m[i][c].clone();
                for j in c..n_cols {
                    let v = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

pub fn rank<T: Field>(rows: &[Vec<T>]) -> usize {
    row_reduce(rows).1.len()
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve<T: Field>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = a.len();
    let aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (red, piv) = row_reduce(&aug);
    if piv.len() != n || piv.iter().any(|&c| c >= n) {
        return None;
    }
    Some(red.iter().take(n).map(|row| row[n].clone()).collect())
}

/// Basis of `{x : rows · x = 0}`.
pub fn null_space<T: Field>(rows: &[Vec<T>], n_cols: usize) -> Vec<Vec<T>> {
    if rows.is_empty() {
        return (0..n_cols)
            .map(|i| {
                (0..n_cols)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect();
    }
    let (red, piv) = row_reduce(rows);
    let free: Vec<usize> = (0..n_cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); n_cols];
            v[f] = T::one();
            for (r, &pc) in piv.iter().enumerate() {
                v[pc] = -red[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn inverse<T: Field>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let aug: Vec<Vec<T>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            r
        })
        .collect();
    let (red, piv) = row_reduce(&aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    Some(red.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Canonical text form used in JSON output: `"p/q"` or `"p"`.
pub fn rat_string(x: &Rat) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rat("3/7").unwrap(), rat(3, 7));
        assert_eq!(parse_rat("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rat("12").unwrap(), rat_int(12));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn f64_round_trip_is_exact() {
        for x in [0.1, -3.75, 1e-300, 12345.678] {
            assert_eq!(rat_to_f64(&rat_from_f64(x).unwrap()), x);
        }
        assert!(rat_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn exact_solve_and_null_space() {
        let a = vec![vec![rat_int(2), rat_int(1)], vec![rat_int(1), rat_int(3)]];
        let x = solve(&a, &[rat_int(3), rat_int(5)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
        let k = null_space(&[vec![rat_int(1), rat_int(1), rat_int(0)]], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!((v[0].clone() + v[1].clone()).is_zero());
        }
        let inv = inverse(&a).unwrap();
        assert_eq!(inv[0][0], rat(3, 5));
        assert!(inverse(&[vec![rat_int(1), rat_int(2)], vec![rat_int(2), rat_int(4)]]).is_none());
    }
}
