//! Exact rational helpers and the [`Scalar`] abstraction shared by exact and
//! floating point algebra arithmetic.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Coefficient field for algebra elements: `f64` or exact [`Rational`].
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Picks the representation of a structure constant.
    fn from_constant(exact: &Rational, approx: f64) -> Self;
    fn from_f64(x: f64) -> Self;
    fn approx(&self) -> f64;
    fn magnitude(&self) -> f64 {
        self.approx().abs()
    }
    /// Exact zero test for rationals, `|x| <= tol` for floats.
    fn negligible(&self, tol: f64) -> bool;
    const EXACT: bool;
}

impl Scalar for f64 {
    fn from_constant(_: &Rational, approx: f64) -> Self {
        approx
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn approx(&self) -> f64 {
        *self
    }
    fn negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    const EXACT: bool = false;
}

impl Scalar for Rational {
    fn from_constant(exact: &Rational, _: f64) -> Self {
        exact.clone()
    }
    fn from_f64(x: f64) -> Self {
        rationalize(x)
    }
    fn approx(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn negligible(&self, _: f64) -> bool {
        self.is_zero()
    }
    const EXACT: bool = true;
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit()) {
            let neg = whole.starts_with('-');
            let w: BigInt = match whole.trim_start_matches(['-', '+']) {
                "" => BigInt::zero(),
                w => w.parse().map_err(|_| bad())?,
            };
            let f: BigInt = frac.parse().map_err(|_| bad())?;
            let den = num_traits::pow(BigInt::from(10), frac.len());
            let v = Rational::new(w * &den + f, den);
            return Ok(if neg { -v } else { v });
        }
    }
    Err(bad())
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Converts a float to a rational, snapping to a nearby fraction with
/// denominator at most 10^4 when one lies within `1e-13 * max(1,|x|)`.
/// Otherwise the exact binary value is returned.
pub fn rationalize(x: f64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize {x}");
    let tol = 1e-13 * x.abs().max(1.0);
    // continued fraction convergents
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x;
    for _ in 0..40 {
        let a = rest.floor();
        let ab = BigInt::from(a as i64);
        let h2 = &ab * &h1 + &h0;
        let k2 = &ab * &k1 + &k0;
        if k2 > BigInt::from(10_000) {
            break;
        }
        let approx = h2.to_f64().unwrap() / k2.to_f64().unwrap();
        if (approx - x).abs() <= tol {
            return Rational::new(h2, k2);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
        if !rest.is_finite() || rest.abs() > 1e15 {
            break;
        }
    }
    Rational::from_float(x).expect("finite float")
}

/// Floor of a rational as an integer.
pub fn floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<T: Scalar>(m: &mut [Vec<T>], tol: f64) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .filter(|&i| !m[i][c].negligible(tol))
            .max_by(|&a, &b| m[a][c].magnitude().total_cmp(&m[b][c].magnitude()));
        let Some(p) = best else { continue };
        m.swap(r, p);
        let piv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = m[r][j].clone();
                    m[i][j] = m[i][j].clone() - f.clone() * v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Scalar>(m: &[Vec<T>], tol: f64) -> usize {
    let mut m = m.to_vec();
    rref(&mut m, tol).len()
}

/// Basis of the null space of `m` (as column vectors).
pub fn nullspace<T: Scalar>(m: &[Vec<T>], cols: usize, tol: f64) -> Vec<Vec<T>> {
    let mut a = m.to_vec();
    let pivots = rref(&mut a, tol);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

/// Solves `a x = b` for square `a`; `None` when singular.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], tol: f64) -> Option<Vec<T>> {
    let n = a.len();
    let mut aug: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, tol);
    if pivots.len() < n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

/// Solves a possibly overdetermined system `a x = b` (a has full column rank
/// assumed); returns `None` if inconsistent or rank deficient.
pub fn solve_in_span<T: Scalar>(columns: &[Vec<T>], target: &[T], tol: f64) -> Option<Vec<T>> {
    let k = columns.len();
    let n = target.len();
    let mut aug: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut r: Vec<T> = columns.iter().map(|c| c[i].clone()).collect();
            r.push(target[i].clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, tol);
    if pivots.contains(&k) || pivots.len() < k {
        return None;
    }
    let mut x = vec![T::zero(); k];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[row][k].clone();
    }
    Some(x)
}

/// Determinant by elimination.
pub fn det<T: Scalar>(a: &[Vec<T>], tol: f64) -> T {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = T::one();
    for c in 0..n {
        let best = (c..n)
            .filter(|&i| !m[i][c].negligible(tol))
            .max_by(|&x, &y| m[x][c].magnitude().total_cmp(&m[y][c].magnitude()));
        let Some(p) = best else { return T::zero() };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let piv = m[c][c].clone();
        d = d * piv.clone();
        for i in c + 1..n {
            let f = m[i][c].clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = m[c][j].clone();
                m[i][j] = m[i][j].clone() - f.clone() * v;
            }
        }
    }
    d
}

/// Inertia `(positive, negative, zero)` of a symmetric rational matrix via
/// congruence diagonalization.
pub fn inertia(sym: &[Vec<Rational>]) -> (usize, usize, usize) {
    let n = sym.len();
    let mut m = sym.to_vec();
    let mut diag = Vec::new();
    let mut active: Vec<usize> = (0..n).collect();
    while let Some(&first) = active.first() {
        let _ = first;
        // pick a nonzero diagonal pivot, or create one from an off-diagonal entry
        let piv = active.iter().copied().find(|&i| !m[i][i].is_zero());
        let p = match piv {
            Some(p) => p,
            None => {
                let pair = active.iter().find_map(|&i| {
                    active.iter().find(|&&j| j != i && !m[i][j].is_zero()).map(|&j| (i, j))
                });
                match pair {
                    None => {
                        diag.extend(active.iter().map(|_| Rational::zero()));
                        break;
                    }
                    Some((i, j)) => {
                        // row/col i += row/col j makes m[i][i] = 2 m[i][j] (m[j][j] = 0)
                        for k in 0..n {
                            let v = m[j][k].clone();
                            m[i][k] = &m[i][k] + v;
                        }
                        for k in 0..n {
                            let v = m[k][j].clone();
                            m[k][i] = &m[k][i] + v;
                        }
                        i
                    }
                }
            }
        };
        let pv = m[p][p].clone();
        for &i in active.iter().filter(|&&i| i != p) {
            let f = &m[i][p] / &pv;
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                let v = &m[p][k] * &f;
                m[i][k] = &m[i][k] - v;
            }
            for k in 0..n {
                let v = &m[k][p] * &f;
                m[k][i] = &m[k][i] - v;
            }
        }
        diag.push(pv);
        active.retain(|&i| i != p);
    }
    let pos = diag.iter().filter(|x| x.is_positive()).count();
    let neg = diag.iter().filter(|x| x.is_negative()).count();
    (pos, neg, n - pos - neg)
}
