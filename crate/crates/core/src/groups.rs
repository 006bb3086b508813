//! Dilation groups `H < GL(d, R)`: the fixed families, generalized shearlet
//! groups `H = +-DS` built from a shearing subgroup `S` and a diagonal
//! generator `Y`, abelian groups `rho(A^x)^T` of an algebra, and direct products.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraJson, NilpotentAlgebra, StructureConstants};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, is_strictly_upper, span_coords, span_rank};
use crate::rational::int;

/// Relative tolerance for matching a matrix against a group pattern.
pub const PATTERN_TOL: f64 = 1e-9;

/// Outcome of a structural validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl ValidationReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        Self { passed: checks.iter().all(|c| c.passed), checks }
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

/// Checks that `basis` spans the Lie algebra of a shearing subgroup.
pub fn validate_shearing(basis: &[DMatrix<f64>]) -> ValidationReport {
    let mut checks = Vec::new();
    let d = basis.first().map(|m| m.nrows()).unwrap_or(0);
    let square = basis.iter().all(|m| m.nrows() == d && m.ncols() == d) && d >= 2;
    checks.push(check(
        "dimension",
        square && basis.len() + 1 == d && span_rank(basis, 1e-10) == basis.len(),
        format!("{} matrices for d = {d}", basis.len()),
    ));
    if !square {
        return ValidationReport::from_checks(checks);
    }
    let scale = basis.iter().fold(1.0f64, |m, x| m.max(x.amax()));
    let tol = PATTERN_TOL * scale;
    let upper: Vec<usize> = (0..basis.len()).filter(|&i| !is_strictly_upper(&basis[i], tol)).collect();
    checks.push(check("strictly_upper_triangular", upper.is_empty(), format!("offending indices {upper:?}")));
    let mut noncommuting = Vec::new();
    let mut not_closed = Vec::new();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let p = &basis[i] * &basis[j];
            let q = &basis[j] * &basis[i];
            if (&p - &q).amax() > tol * scale {
                noncommuting.push((i, j));
            }
            if span_coords(basis, &p, PATTERN_TOL).is_none() {
                not_closed.push((i, j));
            }
        }
    }
    checks.push(check("commuting", noncommuting.is_empty(), format!("non-commuting pairs {noncommuting:?}")));
    checks.push(check("closed_under_products", not_closed.is_empty(), format!("products outside span {not_closed:?}")));
    let f = first_rows(basis);
    let sv = f.clone().svd(false, false).singular_values;
    let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    checks.push(check(
        "first_rows_canonical",
        smin > 1e-10 * scale,
        format!("smallest singular value of the first-row map {smin:.3e}"),
    ));
    ValidationReport::from_checks(checks)
}

/// Checks that `exp(RY)` normalizes the shearing subgroup with `Y_11 != 0`.
pub fn validate_diagonal_complement(y: &[f64], basis: &[DMatrix<f64>]) -> ValidationReport {
    let mut checks = Vec::new();
    let d = y.len();
    checks.push(check("first_entry_nonzero", y.first().is_some_and(|v| *v != 0.0), format!("Y_11 = {:?}", y.first())));
    let ym = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(y));
    let mut bad = Vec::new();
    for (i, x) in basis.iter().enumerate() {
        if x.nrows() != d {
            bad.push(i);
            continue;
        }
        let br = x * &ym - &ym * x;
        if span_coords(basis, &br, PATTERN_TOL).is_none() {
            bad.push(i);
        }
    }
    checks.push(check("normalizes_shearing", bad.is_empty(), format!("[X_i, Y] outside span for {bad:?}")));
    ValidationReport::from_checks(checks)
}

/// `Y / Y_11`.
pub fn normalize_y(y: &[f64]) -> Result<Vec<f64>> {
    match y.first() {
        Some(&y0) if y0 != 0.0 => Ok(y.iter().map(|v| v / y0).collect()),
        _ => Err(Error::InvalidParameter("first diagonal entry of Y is zero".into())),
    }
}

fn first_rows(basis: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = basis.first().map(|m| m.nrows()).unwrap_or(1);
    DMatrix::from_fn(basis.len(), d - 1, |i, j| basis[i][(0, j + 1)])
}

/// Data of a generalized shearlet group `+-exp(RY) S`.
#[derive(Clone, Debug)]
pub struct ShearletData {
    dim: usize,
    basis: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    first_rows: DMatrix<f64>,
    first_rows_t_inv: DMatrix<f64>,
    nilpotency_class: usize,
}

impl ShearletData {
    pub fn new(basis: Vec<DMatrix<f64>>, y: &[f64]) -> Result<Self> {
        let rep = validate_shearing(&basis);
        if !rep.passed {
            return Err(Error::NotShearing(format!("failed checks {:?}", rep.failed())));
        }
        let dim = basis[0].nrows();
        check_dim(dim, y.len())?;
        let y = normalize_y(y)?;
        let rep = validate_diagonal_complement(&y, &basis);
        if !rep.passed {
            return Err(Error::NotShearing(format!("diagonal complement failed {:?}", rep.failed())));
        }
        let f = first_rows(&basis);
        let first_rows_t_inv = f.transpose().try_inverse().ok_or_else(|| Error::NotShearing("first-row map singular".into()))?;
        let nilpotency_class = matrix_algebra_class(&basis);
        Ok(Self { dim, basis, y, first_rows: f, first_rows_t_inv, nilpotency_class })
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Normalized diagonal of `Y`.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn trace_y(&self) -> f64 {
        self.y.iter().sum()
    }

    /// `max |Y_ii|`.
    pub fn y_norm(&self) -> f64 {
        linalg::norm_max(&self.y)
    }

    pub fn nilpotency_class(&self) -> usize {
        self.nilpotency_class
    }

    /// Matrix of first-row entries, `F[i][j] = (X_{i+2})_{1, j+2}`.
    pub fn first_rows(&self) -> &DMatrix<f64> {
        &self.first_rows
    }

    pub fn shear(&self, t: &[f64]) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.dim, self.dim);
        for (ti, b) in t.iter().zip(&self.basis) {
            x += b * *ti;
        }
        x
    }

    /// `eps (I + X(t)) exp(rY)`.
    pub fn matrix(&self, sign: f64, r: f64, t: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.dim, self.dim) + self.shear(t);
        for (j, yj) in self.y.iter().enumerate() {
            let s = sign * (r * yj).exp();
            m.column_mut(j).scale_mut(s);
        }
        m
    }

    /// `h^T e_1 = eps exp(rY) (1, F^T t)` without forming `h`.
    pub fn dual_base_point(&self, sign: f64, r: f64, t: &[f64], out: &mut [f64]) {
        out[0] = sign * r.exp();
        for j in 1..self.dim {
            let mut s = 0.0;
            for (i, ti) in t.iter().enumerate() {
                s += self.first_rows[(i, j - 1)] * ti;
            }
            out[j] = sign * (r * self.y[j]).exp() * s;
        }
    }

    /// Recovers `(eps, r, t)` from a matrix, or fails if off-pattern.
    pub fn factor(&self, h: &DMatrix<f64>) -> Result<(f64, f64, Vec<f64>)> {
        let d = self.dim;
        let h11 = h[(0, 0)];
        if !(h11.is_finite() && h11 != 0.0) {
            return Err(Error::NotInGroup("first diagonal entry is zero".into()));
        }
        let sign = h11.signum();
        let r = h11.abs().ln();
        let mut m = h.clone() * sign;
        for (j, yj) in self.y.iter().enumerate() {
            m.column_mut(j).scale_mut((-r * yj).exp());
        }
        m -= DMatrix::<f64>::identity(d, d);
        let row = nalgebra::DVector::from_fn(d - 1, |j, _| m[(0, j + 1)]);
        let t: Vec<f64> = (&self.first_rows_t_inv * row).iter().copied().collect();
        let resid = (&m - self.shear(&t)).amax();
        if resid > PATTERN_TOL * m.amax().max(1.0) {
            return Err(Error::NotInGroup(format!("off-pattern residual {resid:.3e}")));
        }
        Ok((sign, r, t))
    }

    /// Solves `h^T e_1 = xi` for `(eps, r, t)`.
    pub fn section(&self, xi: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
        if xi[0] == 0.0 || !xi[0].is_finite() {
            return Err(Error::NotInOrbit(xi.to_vec()));
        }
        let sign = xi[0].signum();
        let r = xi[0].abs().ln();
        let rhs = nalgebra::DVector::from_fn(self.dim - 1, |j, _| sign * (-r * self.y[j + 1]).exp() * xi[j + 1]);
        Ok((sign, r, (&self.first_rows_t_inv * rhs).iter().copied().collect()))
    }
}

/// Least `n` with every product of `n` elements of the span vanishing.
fn matrix_algebra_class(basis: &[DMatrix<f64>]) -> usize {
    let mut current = linalg::span_basis(basis, 1e-10);
    let mut n = 1;
    while !current.is_empty() {
        let products: Vec<DMatrix<f64>> =
            basis.iter().flat_map(|x| current.iter().map(move |p| x * p)).collect();
        current = linalg::span_basis(&products, 1e-10);
        n += 1;
        if n > basis.len() + 2 {
            break;
        }
    }
    n
}

/// An abelian dilation group `rho(A^x)^T` in adapted coordinates.
#[derive(Clone, Debug)]
pub struct AbelianData {
    algebra: StructureConstants,
}

impl AbelianData {
    pub fn new(alg: &StructureConstants) -> Result<Self> {
        if !alg.is_irreducible() {
            return Err(Error::Unsupported(
                "abelian groups need an irreducible algebra; pass reducible ones as a direct product".into(),
            ));
        }
        let algebra = alg.in_basis(&alg.adapted_basis()?)?;
        Ok(Self { algebra })
    }

    pub fn algebra(&self) -> &StructureConstants {
        &self.algebra
    }

    pub fn matrix(&self, a: &[f64]) -> DMatrix<f64> {
        self.algebra.regular_representation(&AlgebraElement::new(a.to_vec())).unwrap().transpose()
    }
}

/// Family of a dilation group.
#[derive(Clone, Debug)]
pub enum Family {
    Diagonal,
    Similitude,
    Shearlet2D { c: f64, data: Arc<ShearletData> },
    GeneralizedShearlet(Arc<ShearletData>),
    AbelianFromAlgebra(Arc<AbelianData>),
    DirectProduct(Vec<GroupSpec>),
}

/// A dilation group `H < GL(d, R)`.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    family: Family,
    dim: usize,
    name: Option<String>,
}

/// Factored coordinates of a group element.
#[derive(Clone, Debug, PartialEq)]
pub enum Coords {
    /// `eps (I + X(t)) exp(rY)`.
    Shear { sign: f64, r: f64, t: Vec<f64> },
    Diagonal(Vec<f64>),
    /// `scale * rotation` with `scale > 0`.
    Similitude { scale: f64 },
    /// Coordinates of `a` with `h = rho(a)^T`.
    Algebra(Vec<f64>),
    Product(Vec<GroupElement>),
}

/// A group element: its matrix and factored coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: DMatrix<f64>,
    pub coords: Coords,
}

impl GroupElement {
    /// `(eps, r, t)` for shearlet-type elements.
    pub fn factored(&self) -> Option<(f64, f64, &[f64])> {
        match &self.coords {
            Coords::Shear { sign, r, t } => Some((*sign, *r, t)),
            _ => None,
        }
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Determinant and modular functions at an element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularData {
    pub det: f64,
    pub delta_h: f64,
    pub delta_g: f64,
}

impl GroupSpec {
    pub fn diagonal(d: usize) -> Self {
        Self { family: Family::Diagonal, dim: d, name: None }
    }

    pub fn similitude(d: usize) -> Self {
        Self { family: Family::Similitude, dim: d, name: None }
    }

    /// `{ [[a, b], [0, |a|^c sgn a]] }`, embedded as the shearlet group with `Y = diag(1, c)`.
    pub fn shearlet2d(c: f64) -> Self {
        let x = DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        let data = ShearletData::new(vec![x], &[1.0, c]).expect("valid 2-D shearlet data");
        Self { family: Family::Shearlet2D { c, data: Arc::new(data) }, dim: 2, name: None }
    }

    pub fn generalized_shearlet(basis: Vec<DMatrix<f64>>, y: &[f64]) -> Result<Self> {
        let data = ShearletData::new(basis, y)?;
        let dim = data.dim;
        Ok(Self { family: Family::GeneralizedShearlet(Arc::new(data)), dim, name: None })
    }

    pub fn abelian(alg: &StructureConstants) -> Result<Self> {
        let data = AbelianData::new(alg)?;
        Ok(Self { dim: alg.dim(), family: Family::AbelianFromAlgebra(Arc::new(data)), name: None })
    }

    pub fn direct_product(factors: Vec<GroupSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("empty direct product".into()));
        }
        let dim = factors.iter().map(|f| f.dim).sum();
        Ok(Self { family: Family::DirectProduct(factors), dim, name: None })
    }

    /// Standard shearlet group: `N^2 = 0`.
    pub fn standard_shearlet(d: usize, y: Option<&[f64]>) -> Result<Self> {
        let default: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.5 }).collect();
        build_shearing_from_nilpotent(&NilpotentAlgebra::trivial(d - 1), Some(y.unwrap_or(&default)))
            .map(|g| g.named("standard"))
    }

    /// Toeplitz shearlet group from `R[X]/(X^d)`.
    pub fn toeplitz_shearlet(d: usize, y: Option<&[f64]>) -> Result<Self> {
        build_shearing_from_nilpotent(&NilpotentAlgebra::truncated(d - 1), y).map(|g| g.named("toeplitz"))
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Diagonal => "diagonal",
            Family::Similitude => "similitude",
            Family::Shearlet2D { .. } => "shearlet2d",
            Family::GeneralizedShearlet(_) => "generalized_shearlet",
            Family::AbelianFromAlgebra(_) => "abelian_from_algebra",
            Family::DirectProduct(_) => "direct_product",
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of `H` as a Lie group.
    pub fn dim_h(&self) -> usize {
        match &self.family {
            Family::Diagonal => self.dim,
            Family::Similitude => 1 + self.dim * (self.dim - 1) / 2,
            Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) | Family::AbelianFromAlgebra(_) => self.dim,
            Family::DirectProduct(fs) => fs.iter().map(|f| f.dim_h()).sum(),
        }
    }

    pub fn shear_data(&self) -> Option<&ShearletData> {
        match &self.family {
            Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => Some(data),
            _ => None,
        }
    }

    /// Nilpotency class of the associated algebra, where defined.
    pub fn nilpotency_class(&self) -> Option<usize> {
        match &self.family {
            Family::Diagonal => Some(1),
            Family::Similitude => (self.dim == 1).then_some(1),
            Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => Some(data.nilpotency_class),
            Family::AbelianFromAlgebra(a) => Some(a.algebra.nilradical().nilpotency_class),
            Family::DirectProduct(fs) => fs.iter().map(|f| f.nilpotency_class()).try_fold(0, |m, c| c.map(|c| m.max(c))),
        }
    }

    /// Base point `xi_0` of the open dual orbit.
    pub fn base_point(&self) -> Vec<f64> {
        match &self.family {
            Family::Diagonal => vec![1.0; self.dim],
            Family::DirectProduct(fs) => fs.iter().flat_map(|f| f.base_point()).collect(),
            _ => {
                let mut e = vec![0.0; self.dim];
                e[0] = 1.0;
                e
            }
        }
    }

    pub fn identity(&self) -> GroupElement {
        let d = self.dim;
        let coords = match &self.family {
            Family::Diagonal => Coords::Diagonal(vec![1.0; d]),
            Family::Similitude => Coords::Similitude { scale: 1.0 },
            Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) => Coords::Shear { sign: 1.0, r: 0.0, t: vec![0.0; d - 1] },
            Family::AbelianFromAlgebra(_) => {
                let mut a = vec![0.0; d];
                a[0] = 1.0;
                Coords::Algebra(a)
            }
            Family::DirectProduct(fs) => Coords::Product(fs.iter().map(|f| f.identity()).collect()),
        };
        GroupElement { matrix: DMatrix::identity(d, d), coords }
    }

    /// Element `eps (I + X(t)) exp(rY)` of a shearlet-type group.
    pub fn element_from_factored(&self, sign: f64, r: f64, t: &[f64]) -> Result<GroupElement> {
        let data = self.shear_data().ok_or_else(|| Error::Unsupported(format!("{} has no shear coordinates", self.family_name())))?;
        check_dim(self.dim - 1, t.len())?;
        if sign.abs() != 1.0 {
            return Err(Error::InvalidParameter(format!("sign must be +-1, got {sign}")));
        }
        Ok(GroupElement { matrix: data.matrix(sign, r, t), coords: Coords::Shear { sign, r, t: t.to_vec() } })
    }

    /// `(eps, r, t)` of a matrix in a shearlet-type group.
    pub fn factor(&self, h: &DMatrix<f64>) -> Result<(f64, f64, Vec<f64>)> {
        let data = self.shear_data().ok_or_else(|| Error::Unsupported(format!("{} has no shear coordinates", self.family_name())))?;
        check_dim(self.dim, h.nrows())?;
        data.factor(h)
    }

    /// The element `[[a, b], [0, sgn(a)|a|^c]]` of `Shearlet2D(c)`.
    pub fn shearlet2d_element(&self, a: f64, b: f64) -> Result<GroupElement> {
        let Family::Shearlet2D { c, .. } = self.family else {
            return Err(Error::Unsupported("not a Shearlet2D group".into()));
        };
        if a == 0.0 {
            return Err(Error::NotInGroup("a = 0".into()));
        }
        let sign = a.signum();
        self.element_from_factored(sign, a.abs().ln(), &[b / (sign * a.abs().powf(c))])
    }

    pub fn diagonal_element(&self, entries: &[f64]) -> Result<GroupElement> {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries));
        self.element_from_matrix(&m)
    }

    pub fn similitude_element(&self, scale: f64, rotation: &DMatrix<f64>) -> Result<GroupElement> {
        self.element_from_matrix(&(rotation * scale))
    }

    /// `rho(a)^T` for an abelian group (adapted coordinates).
    pub fn algebra_element(&self, a: &[f64]) -> Result<GroupElement> {
        let Family::AbelianFromAlgebra(data) = &self.family else {
            return Err(Error::Unsupported("not an abelian algebra group".into()));
        };
        check_dim(self.dim, a.len())?;
        let el = AlgebraElement::new(a.to_vec());
        if !data.algebra.is_unit(&el)? {
            return Err(Error::NotInGroup("algebra element is not a unit".into()));
        }
        Ok(GroupElement { matrix: data.matrix(a), coords: Coords::Algebra(a.to_vec()) })
    }

    pub fn product_element(&self, parts: Vec<GroupElement>) -> Result<GroupElement> {
        let Family::DirectProduct(fs) = &self.family else {
            return Err(Error::Unsupported("not a direct product".into()));
        };
        check_dim(fs.len(), parts.len())?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut off = 0;
        for (f, p) in fs.iter().zip(&parts) {
            check_dim(f.dim, p.dim())?;
            m.view_mut((off, off), (f.dim, f.dim)).copy_from(&p.matrix);
            off += f.dim;
        }
        Ok(GroupElement { matrix: m, coords: Coords::Product(parts) })
    }

    /// Membership test; returns the element with its coordinates.
    pub fn element_from_matrix(&self, m: &DMatrix<f64>) -> Result<GroupElement> {
        let d = self.dim;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
        let scale = m.amax().max(1.0);
        let tol = PATTERN_TOL * scale;
        let coords = match &self.family {
            Family::Diagonal => {
                let off = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).any(|(i, j)| m[(i, j)].abs() > tol);
                let entries: Vec<f64> = (0..d).map(|i| m[(i, i)]).collect();
                if off || entries.contains(&0.0) {
                    return Err(Error::NotInGroup("not an invertible diagonal matrix".into()));
                }
                Coords::Diagonal(entries)
            }
            Family::Similitude => {
                let det = m.determinant();
                if det <= 0.0 && d > 1 || det == 0.0 {
                    return Err(Error::NotInGroup("similitudes have positive determinant".into()));
                }
                let scale = if d == 1 { m[(0, 0)].abs() } else { det.powf(1.0 / d as f64) };
                let s = m / scale;
                let err = (s.transpose() * &s - DMatrix::identity(d, d)).amax();
                if err > PATTERN_TOL * 10.0 {
                    return Err(Error::NotInGroup(format!("not a scaled rotation (residual {err:.2e})")));
                }
                Coords::Similitude { scale }
            }
            Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => {
                let (sign, r, t) = data.factor(m)?;
                Coords::Shear { sign, r, t }
            }
            Family::AbelianFromAlgebra(data) => {
                let a: Vec<f64> = (0..d).map(|j| m[(0, j)]).collect();
                if (data.matrix(&a) - m).amax() > tol || a[0] == 0.0 {
                    return Err(Error::NotInGroup("not of the form rho(a)^T".into()));
                }
                Coords::Algebra(a)
            }
            Family::DirectProduct(fs) => {
                let mut parts = Vec::new();
                let mut off = 0;
                for f in fs {
                    for i in 0..d {
                        for j in 0..d {
                            let inside_i = (off..off + f.dim).contains(&i);
                            let inside_j = (off..off + f.dim).contains(&j);
                            if inside_i != inside_j && m[(i, j)].abs() > tol {
                                return Err(Error::NotInGroup("not block diagonal".into()));
                            }
                        }
                    }
                    parts.push(f.element_from_matrix(&m.view((off, off), (f.dim, f.dim)).into_owned())?);
                    off += f.dim;
                }
                Coords::Product(parts)
            }
        };
        Ok(GroupElement { matrix: m.clone(), coords })
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let matrix = &a.matrix * &b.matrix;
        let coords = match (&self.family, &a.coords, &b.coords) {
            (Family::Diagonal, Coords::Diagonal(x), Coords::Diagonal(y)) => {
                Coords::Diagonal(x.iter().zip(y).map(|(p, q)| p * q).collect())
            }
            (Family::Similitude, Coords::Similitude { scale: s }, Coords::Similitude { scale: t }) => Coords::Similitude { scale: s * t },
            (Family::AbelianFromAlgebra(data), Coords::Algebra(x), Coords::Algebra(y)) => {
                // rho(x)^T rho(y)^T = rho(xy)^T by commutativity
                let p = data.algebra.multiply(&AlgebraElement::new(x.clone()), &AlgebraElement::new(y.clone()))?;
                Coords::Algebra(p.coeffs)
            }
            (Family::DirectProduct(fs), Coords::Product(x), Coords::Product(y)) => {
                let parts = fs.iter().zip(x.iter().zip(y)).map(|(f, (p, q))| f.compose(p, q)).collect::<Result<Vec<_>>>()?;
                return self.product_element(parts);
            }
            _ => return self.element_from_matrix(&matrix),
        };
        Ok(GroupElement { matrix, coords })
    }

    pub fn inverse(&self, h: &GroupElement) -> Result<GroupElement> {
        let d = self.dim;
        match (&self.family, &h.coords) {
            (Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data), Coords::Shear { sign, r, t }) => {
                // exp(-rY) (I + X)^{-1} eps
                let mut m = linalg::unipotent_inverse(&data.shear(t), data.nilpotency_class);
                for (i, yi) in data.y.iter().enumerate() {
                    m.row_mut(i).scale_mut(sign * (-r * yi).exp());
                }
                self.element_from_matrix(&m)
            }
            (Family::Diagonal, Coords::Diagonal(x)) => {
                let inv: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
                Ok(GroupElement {
                    matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&inv)),
                    coords: Coords::Diagonal(inv),
                })
            }
            (Family::Similitude, Coords::Similitude { scale }) => {
                let rot = &h.matrix / *scale;
                Ok(GroupElement { matrix: rot.transpose() / *scale, coords: Coords::Similitude { scale: 1.0 / scale } })
            }
            (Family::AbelianFromAlgebra(data), Coords::Algebra(a)) => {
                let inv = data.algebra.invert(&AlgebraElement::new(a.clone()))?;
                Ok(GroupElement { matrix: data.matrix(&inv.coeffs), coords: Coords::Algebra(inv.coeffs) })
            }
            (Family::DirectProduct(fs), Coords::Product(parts)) => {
                let inv = fs.iter().zip(parts).map(|(f, p)| f.inverse(p)).collect::<Result<Vec<_>>>()?;
                self.product_element(inv)
            }
            _ => {
                let m = h.matrix.clone().try_inverse().ok_or(Error::SingularElement)?;
                let _ = d;
                self.element_from_matrix(&m)
            }
        }
    }

    /// `Delta_H(h)` from the family's closed form.
    pub fn delta_h(&self, h: &GroupElement) -> Result<f64> {
        match (&self.family, &h.coords) {
            (Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data), Coords::Shear { r, .. }) => {
                Ok((r * (data.trace_y() - self.dim as f64)).exp())
            }
            (Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_), _) => {
                let (_, r, _) = self.factor(&h.matrix)?;
                let data = self.shear_data().unwrap();
                Ok((r * (data.trace_y() - self.dim as f64)).exp())
            }
            (Family::DirectProduct(fs), Coords::Product(parts)) => {
                fs.iter().zip(parts).try_fold(1.0, |acc, (f, p)| Ok(acc * f.delta_h(p)?))
            }
            (Family::DirectProduct(_), _) => self.delta_h(&self.element_from_matrix(&h.matrix)?),
            _ => Ok(1.0),
        }
    }

    pub fn modular_data(&self, h: &GroupElement) -> Result<ModularData> {
        let det = h.det();
        let delta_h = self.delta_h(h)?;
        Ok(ModularData { det, delta_h, delta_g: delta_h / det.abs() })
    }

    /// `h^T xi`.
    pub fn dual_action(&self, h: &GroupElement, xi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, xi.len())?;
        Ok(linalg::transpose_apply(&h.matrix, xi))
    }

    /// Draws an element with scale parameters uniform in `[-r_box, r_box]`
    /// and shear (or nilpotent) parameters uniform in `[-t_box, t_box]`.
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R, r_box: f64, t_box: f64) -> GroupElement {
        let d = self.dim;
        let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
        match &self.family {
            Family::Diagonal => {
                // common scale r times anisotropy exp(t_i), t_1 = 0
                let r = rng.random_range(-r_box..=r_box);
                let e: Vec<f64> = (0..d)
                    .map(|i| {
                        let t = if i == 0 { 0.0 } else { rng.random_range(-t_box..=t_box) };
                        sign(rng) * (r + t).exp()
                    })
                    .collect();
                self.diagonal_element(&e).unwrap()
            }
            Family::Similitude => {
                let s = rng.random_range(-r_box..=r_box).exp();
                let rot = if d == 1 { DMatrix::from_element(1, 1, sign(rng)) } else { random_rotation(rng, d) };
                GroupElement { matrix: &rot * s, coords: Coords::Similitude { scale: s } }
            }
            Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) => {
                let s = sign(rng);
                let r = rng.random_range(-r_box..=r_box);
                let t: Vec<f64> = (1..d).map(|_| rng.random_range(-t_box..=t_box)).collect();
                self.element_from_factored(s, r, &t).unwrap()
            }
            Family::AbelianFromAlgebra(data) => {
                let s = sign(rng) * rng.random_range(-r_box..=r_box).exp();
                let mut a: Vec<f64> = vec![s; d];
                for x in a.iter_mut().skip(1) {
                    *x *= rng.random_range(-t_box..=t_box);
                }
                GroupElement { matrix: data.matrix(&a), coords: Coords::Algebra(a) }
            }
            Family::DirectProduct(fs) => {
                let parts = fs.iter().map(|f| f.sample_element(rng, r_box, t_box)).collect();
                self.product_element(parts).unwrap()
            }
        }
    }

    /// Random element of the identity component with every coordinate
    /// within `delta` of the identity's.
    pub fn sample_near_identity<R: Rng + ?Sized>(&self, rng: &mut R, delta: f64) -> GroupElement {
        let d = self.dim;
        let u = |rng: &mut R| rng.random_range(-delta..=delta);
        match &self.family {
            Family::Diagonal => {
                let e: Vec<f64> = (0..d).map(|_| u(rng).exp()).collect();
                self.diagonal_element(&e).unwrap()
            }
            Family::Similitude => {
                let s = u(rng).exp();
                // Cayley transform of a small skew matrix
                let mut k = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in i + 1..d {
                        let v = u(rng);
                        k[(i, j)] = v;
                        k[(j, i)] = -v;
                    }
                }
                let id = DMatrix::identity(d, d);
                let rot = (&id - &k).try_inverse().unwrap() * (&id + &k);
                GroupElement { matrix: rot * s, coords: Coords::Similitude { scale: s } }
            }
            Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) => {
                let r = u(rng);
                let t: Vec<f64> = (1..d).map(|_| u(rng)).collect();
                self.element_from_factored(1.0, r, &t).unwrap()
            }
            Family::AbelianFromAlgebra(data) => {
                let mut a = vec![u(rng).exp()];
                a.extend((1..d).map(|_| u(rng)));
                GroupElement { matrix: data.matrix(&a), coords: Coords::Algebra(a) }
            }
            Family::DirectProduct(fs) => {
                let parts = fs.iter().map(|f| f.sample_near_identity(rng, delta)).collect();
                self.product_element(parts).unwrap()
            }
        }
    }

    /// Every generalized shearlet group passes both validators.
    pub fn validate(&self) -> ValidationReport {
        match &self.family {
            Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => {
                let mut a = validate_shearing(&data.basis);
                let b = validate_diagonal_complement(&data.y, &data.basis);
                a.checks.extend(b.checks);
                ValidationReport::from_checks(a.checks)
            }
            Family::DirectProduct(fs) => {
                let checks = fs
                    .iter()
                    .enumerate()
                    .flat_map(|(i, f)| {
                        f.validate().checks.into_iter().map(move |mut c| {
                            c.name = format!("factor{i}.{}", c.name);
                            c
                        })
                    })
                    .collect();
                ValidationReport::from_checks(checks)
            }
            _ => ValidationReport::from_checks(vec![check("family", true, self.family_name())]),
        }
    }
}

/// Haar-distributed rotation in `SO(d)`.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Shearlet group whose shearing subgroup is the transposed regular
/// representation of `R 1 + N` in an adapted basis. `y` defaults to the identity.
pub fn build_shearing_from_nilpotent(nil: &NilpotentAlgebra, y: Option<&[f64]>) -> Result<GroupSpec> {
    let alg = nil.unitization();
    let adapted = alg.in_basis(&alg.adapted_basis()?)?;
    let d = alg.dim();
    let basis: Vec<DMatrix<f64>> = (1..d)
        .map(|i| adapted.regular_representation(&AlgebraElement::<f64>::basis(d, i)).unwrap().transpose())
        .collect();
    let rep = validate_shearing(&basis);
    if !rep.passed {
        return Err(Error::NotShearing(format!("failed checks {:?}", rep.failed())));
    }
    let ones = vec![1.0; d];
    GroupSpec::generalized_shearlet(basis, y.unwrap_or(&ones))
}

/// Shearlet group from the nilradical of an irreducible algebra.
pub fn build_shearing_from_algebra(alg: &StructureConstants, y: Option<&[f64]>) -> Result<GroupSpec> {
    build_shearing_from_nilpotent(&alg.nilpotent_part()?, y)
}

/// One class of the shearing-group classification.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub algebra: StructureConstants,
    pub spec: GroupSpec,
}

/// Shearing groups up to conjugacy in dimension 2, 3 or 4. The standard group
/// uses `Y = diag(1, 1/2, ..., 1/2)`, all others `Y = I`.
pub fn enumerate_catalog(d: usize) -> Result<Vec<CatalogEntry>> {
    let entry = |name: &str, nil: NilpotentAlgebra, y: Option<Vec<f64>>| -> Result<CatalogEntry> {
        let spec = build_shearing_from_nilpotent(&nil, y.as_deref())?.named(name);
        Ok(CatalogEntry { name: name.into(), algebra: nil.unitization(), spec })
    };
    let half: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.5 }).collect();
    match d {
        2 => Ok(vec![entry("standard", NilpotentAlgebra::trivial(1), Some(half))?]),
        3 => Ok(vec![
            entry("standard", NilpotentAlgebra::trivial(2), Some(half))?,
            entry("toeplitz", NilpotentAlgebra::truncated(2), None)?,
        ]),
        4 => {
            let mut v = vec![
                entry("standard", NilpotentAlgebra::trivial(3), Some(half))?,
                entry("toeplitz", NilpotentAlgebra::truncated(3), None)?,
            ];
            for a in [-1, 0, 1] {
                v.push(entry(&format!("h_a={a}"), NilpotentAlgebra::class_three(int(a)), None)?);
            }
            Ok(v)
        }
        _ => Err(Error::Unsupported(format!("classification is available for d in 2..=4, got {d}"))),
    }
}

/// JSON description of a group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupJson {
    Diagonal {
        dim: usize,
    },
    Similitude {
        dim: usize,
    },
    #[serde(rename = "shearlet2d")]
    Shearlet2D {
        c: f64,
    },
    GeneralizedShearlet {
        dim: usize,
        /// Row-major `d x d` matrices `X_2, ..., X_d`.
        shear_lie_basis: Vec<Vec<f64>>,
        /// Diagonal of `Y`.
        y: Vec<f64>,
    },
    StandardShearlet {
        dim: usize,
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    ToeplitzShearlet {
        dim: usize,
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    /// Shearlet group from the nilradical of an irreducible unital algebra.
    ShearingFromAlgebra {
        algebra: AlgebraJson,
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    AbelianFromAlgebra {
        algebra: AlgebraJson,
    },
    DirectProduct {
        factors: Vec<GroupJson>,
    },
}

impl TryFrom<GroupJson> for GroupSpec {
    type Error = Error;

    fn try_from(j: GroupJson) -> Result<Self> {
        let positive = |d: usize| {
            if d == 0 {
                Err(Error::Parse("dim must be positive".into()))
            } else {
                Ok(d)
            }
        };
        match j {
            GroupJson::Diagonal { dim } => Ok(GroupSpec::diagonal(positive(dim)?)),
            GroupJson::Similitude { dim } => Ok(GroupSpec::similitude(positive(dim)?)),
            GroupJson::Shearlet2D { c } => {
                if c.is_finite() {
                    Ok(GroupSpec::shearlet2d(c))
                } else {
                    Err(Error::Parse("c must be finite".into()))
                }
            }
            GroupJson::GeneralizedShearlet { dim, shear_lie_basis, y } => {
                let basis = shear_lie_basis
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        if m.len() != dim * dim {
                            Err(Error::Parse(format!("shear_lie_basis[{i}] needs {} entries, got {}", dim * dim, m.len())))
                        } else {
                            Ok(DMatrix::from_row_slice(dim, dim, m))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                GroupSpec::generalized_shearlet(basis, &y)
            }
            GroupJson::StandardShearlet { dim, y } => GroupSpec::standard_shearlet(dim.max(2), y.as_deref()),
            GroupJson::ToeplitzShearlet { dim, y } => GroupSpec::toeplitz_shearlet(dim.max(2), y.as_deref()),
            GroupJson::ShearingFromAlgebra { algebra, y } => build_shearing_from_algebra(&algebra.try_into()?, y.as_deref()),
            GroupJson::AbelianFromAlgebra { algebra } => GroupSpec::abelian(&algebra.try_into()?),
            GroupJson::DirectProduct { factors } => {
                GroupSpec::direct_product(factors.into_iter().map(GroupSpec::try_from).collect::<Result<Vec<_>>>()?)
            }
        }
    }
}

impl From<&GroupSpec> for GroupJson {
    fn from(g: &GroupSpec) -> Self {
        match &g.family {
            Family::Diagonal => GroupJson::Diagonal { dim: g.dim },
            Family::Similitude => GroupJson::Similitude { dim: g.dim },
            Family::Shearlet2D { c, .. } => GroupJson::Shearlet2D { c: *c },
            Family::GeneralizedShearlet(data) => GroupJson::GeneralizedShearlet {
                dim: g.dim,
                shear_lie_basis: data.basis.iter().map(|m| m.transpose().as_slice().to_vec()).collect(),
                y: data.y.clone(),
            },
            Family::AbelianFromAlgebra(a) => GroupJson::AbelianFromAlgebra { algebra: (&a.algebra).into() },
            Family::DirectProduct(fs) => GroupJson::DirectProduct { factors: fs.iter().map(GroupJson::from).collect() },
        }
    }
}

impl GroupSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let j: GroupJson = serde_json::from_str(s)?;
        j.try_into()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GroupJson::from(self)).expect("serializable")
    }
}
