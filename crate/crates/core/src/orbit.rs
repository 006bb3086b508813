//! The open dual orbit `O`, distances to its complement, the envelope `A`,
//! orbit sections, and integration over `O` and over `H`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::groups::{AbelianData, Family, GroupElement, GroupSpec, ShearletData};
use crate::linalg::{norm2, norm_max};
use crate::quad::{integrate, Axis, QuadConfig, QuadResult};

/// Shape of an open dual orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitKind {
    /// `R^d \ {0}`.
    PuncturedSpace,
    /// `R^x x R^{d-1}`.
    FirstCoordinateNonzero,
    /// All coordinates nonzero.
    CoordinateCross,
    BlockProduct(Vec<OrbitDescriptor>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitDescriptor {
    pub kind: OrbitKind,
    pub dim: usize,
    pub base_point: Vec<f64>,
}

/// Norm used for distances inside the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Euclidean,
    Max,
}

impl Norm {
    pub fn of(self, x: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => norm2(x),
            Norm::Max => norm_max(x),
        }
    }
}

/// `A(xi)` with the distance and nearest complement point behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeValue {
    pub a: f64,
    pub distance: f64,
    pub nearest: Vec<f64>,
}

pub fn orbit_of(spec: &GroupSpec) -> OrbitDescriptor {
    let kind = match spec.family() {
        Family::Similitude => OrbitKind::PuncturedSpace,
        Family::Diagonal => OrbitKind::CoordinateCross,
        Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) | Family::AbelianFromAlgebra(_) => {
            OrbitKind::FirstCoordinateNonzero
        }
        Family::DirectProduct(fs) => OrbitKind::BlockProduct(fs.iter().map(orbit_of).collect()),
    };
    OrbitDescriptor { kind, dim: spec.dim(), base_point: spec.base_point() }
}

impl OrbitDescriptor {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            OrbitKind::PuncturedSpace => "punctured-space",
            OrbitKind::FirstCoordinateNonzero => "first-coordinate-nonzero",
            OrbitKind::CoordinateCross => "coordinate-cross",
            OrbitKind::BlockProduct(_) => "block-product",
        }
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim && xi.iter().all(|v| v.is_finite()) && self.raw_distance(xi).0 > 0.0
    }

    /// `(distance to O^c, |eta|^2)` for the euclidean nearest point; no allocation.
    fn raw_distance(&self, xi: &[f64]) -> (f64, f64) {
        let sq: f64 = xi.iter().map(|v| v * v).sum();
        match &self.kind {
            OrbitKind::PuncturedSpace => (sq.sqrt(), 0.0),
            OrbitKind::FirstCoordinateNonzero => (xi[0].abs(), sq - xi[0] * xi[0]),
            OrbitKind::CoordinateCross => {
                let (i, _) = argmin_abs(xi);
                (xi[i].abs(), sq - xi[i] * xi[i])
            }
            OrbitKind::BlockProduct(blocks) => {
                let mut best = (f64::INFINITY, 0.0);
                let mut off = 0;
                for b in blocks {
                    let part = &xi[off..off + b.dim];
                    let (dist, eta_sq) = b.raw_distance(part);
                    if dist < best.0 {
                        let part_sq: f64 = part.iter().map(|v| v * v).sum();
                        best = (dist, sq - part_sq + eta_sq);
                    }
                    off += b.dim;
                }
                best
            }
        }
    }

    /// Euclidean distance to `O^c` and a nearest point.
    pub fn dist_to_complement(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim, xi.len())?;
        if !self.contains(xi) {
            return Err(Error::NotInOrbit(xi.to_vec()));
        }
        Ok(self.nearest(xi))
    }

    fn nearest(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        match &self.kind {
            OrbitKind::PuncturedSpace => (norm2(xi), vec![0.0; xi.len()]),
            OrbitKind::FirstCoordinateNonzero => {
                let mut eta = xi.to_vec();
                eta[0] = 0.0;
                (xi[0].abs(), eta)
            }
            OrbitKind::CoordinateCross => {
                let (i, d) = argmin_abs(xi);
                let mut eta = xi.to_vec();
                eta[i] = 0.0;
                (d, eta)
            }
            OrbitKind::BlockProduct(blocks) => {
                let mut best: Option<(f64, usize, Vec<f64>)> = None;
                let mut off = 0;
                for b in blocks {
                    let (dist, eta_b) = b.nearest(&xi[off..off + b.dim]);
                    if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
                        best = Some((dist, off, eta_b));
                    }
                    off += b.dim;
                }
                let (dist, off, eta_b) = best.expect("nonempty product");
                let mut eta = xi.to_vec();
                eta[off..off + eta_b.len()].copy_from_slice(&eta_b);
                (dist, eta)
            }
        }
    }

    /// `A(xi) = min(|xi - eta| / (1 + |eta|), 1 / (1 + |xi|))`.
    pub fn envelope(&self, xi: &[f64]) -> Result<EnvelopeValue> {
        let (distance, nearest) = self.dist_to_complement(xi)?;
        let a = (distance / (1.0 + norm2(&nearest))).min(1.0 / (1.0 + norm2(xi)));
        Ok(EnvelopeValue { a, distance, nearest })
    }

    /// Envelope with distances measured in `norm`, same nearest point.
    pub fn envelope_in(&self, xi: &[f64], norm: Norm) -> Result<f64> {
        let (_, eta) = self.dist_to_complement(xi)?;
        let diff: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - b).collect();
        Ok((norm.of(&diff) / (1.0 + norm.of(&eta))).min(1.0 / (1.0 + norm.of(xi))))
    }

    /// `A(xi)`, or 0 off the orbit. Allocation-free; used inside quadrature.
    pub fn a_value(&self, xi: &[f64]) -> f64 {
        let (dist, eta_sq) = self.raw_distance(xi);
        if !(dist > 0.0) {
            return 0.0;
        }
        let sq: f64 = xi.iter().map(|v| v * v).sum();
        (dist / (1.0 + eta_sq.max(0.0).sqrt())).min(1.0 / (1.0 + sq.sqrt()))
    }

    /// The complement as a union of linear subspaces `ker M_k`.
    pub fn complement(&self) -> LinearComplement {
        let d = self.dim;
        let kernels = match &self.kind {
            OrbitKind::PuncturedSpace => vec![DMatrix::identity(d, d)],
            OrbitKind::FirstCoordinateNonzero => vec![unit_row(d, 0)],
            OrbitKind::CoordinateCross => (0..d).map(|i| unit_row(d, i)).collect(),
            OrbitKind::BlockProduct(blocks) => {
                let mut out = Vec::new();
                let mut off = 0;
                for b in blocks {
                    for m in b.complement().kernels {
                        let mut lifted = DMatrix::zeros(m.nrows(), d);
                        lifted.view_mut((0, off), (m.nrows(), b.dim)).copy_from(&m);
                        out.push(lifted);
                    }
                    off += b.dim;
                }
                out
            }
        };
        LinearComplement { kernels }
    }

    /// Parametrization of `O` for quadrature.
    pub fn chart(&self) -> OrbitChart {
        let mut axes = Vec::new();
        let mut pieces = Vec::new();
        self.push_chart(&mut axes, &mut pieces, 0);
        OrbitChart { dim: self.dim, axes, pieces }
    }

    fn push_chart(&self, axes: &mut Vec<Axis>, pieces: &mut Vec<ChartPiece>, offset: usize) {
        let d = self.dim;
        let start = axes.len();
        match &self.kind {
            OrbitKind::FirstCoordinateNonzero => {
                axes.push(Axis::signed_log());
                axes.extend((1..d).map(|_| Axis::real()));
                pieces.push(ChartPiece::Cartesian { param: start, coord: offset, dim: d });
            }
            OrbitKind::CoordinateCross => {
                axes.extend((0..d).map(|_| Axis::signed_log()));
                pieces.push(ChartPiece::Cartesian { param: start, coord: offset, dim: d });
            }
            OrbitKind::PuncturedSpace => match d {
                1 => {
                    axes.push(Axis::signed_log());
                    pieces.push(ChartPiece::Cartesian { param: start, coord: offset, dim: 1 });
                }
                2 => {
                    axes.push(log_radius());
                    axes.push(Axis::interval(0.0, 2.0 * PI));
                    pieces.push(ChartPiece::Polar { param: start, coord: offset });
                }
                3 => {
                    axes.push(log_radius());
                    axes.push(Axis::interval(0.0, PI));
                    axes.push(Axis::interval(0.0, 2.0 * PI));
                    pieces.push(ChartPiece::Spherical { param: start, coord: offset });
                }
                _ => {
                    axes.extend((0..d).map(|_| Axis::real()));
                    pieces.push(ChartPiece::Cartesian { param: start, coord: offset, dim: d });
                }
            },
            OrbitKind::BlockProduct(blocks) => {
                let mut off = offset;
                for b in blocks {
                    b.push_chart(axes, pieces, off);
                    off += b.dim;
                }
            }
        }
    }

    /// `int_O F(xi) d xi`.
    pub fn integral<F>(&self, f: F, cfg: &QuadConfig) -> QuadResult
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let chart = self.chart();
        integrate(
            &chart.axes,
            |p| {
                let mut xi = [0.0; 16];
                let xi = &mut xi[..chart.dim];
                let jac = chart.point(p, xi);
                jac * f(xi)
            },
            cfg,
        )
    }
}

fn log_radius() -> Axis {
    Axis::Log { lo: -14.0, hi: 4.0, grow: 1.0 }
}

fn unit_row(d: usize, i: usize) -> DMatrix<f64> {
    DMatrix::from_fn(1, d, |_, j| if i == j { 1.0 } else { 0.0 })
}

/// Index and value of the smallest `|x_i|`, smallest index on ties.
fn argmin_abs(x: &[f64]) -> (usize, f64) {
    x.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v.abs() < bv { (i, v.abs()) } else { (bi, bv) })
}

/// `O^c` as a union of subspaces `ker M_k`; closed under `xi -> g^T xi`.
#[derive(Clone, Debug)]
pub struct LinearComplement {
    pub kernels: Vec<DMatrix<f64>>,
}

impl LinearComplement {
    /// Complement of `g^T O`: `ker M` becomes `ker (M g^{-T})`.
    pub fn transformed(&self, g: &DMatrix<f64>) -> Result<Self> {
        let g_inv_t = g.clone().try_inverse().ok_or(Error::SingularElement)?.transpose();
        Ok(Self { kernels: self.kernels.iter().map(|m| m * &g_inv_t).collect() })
    }

    /// Euclidean distance and nearest point, by orthogonal projection onto each kernel.
    pub fn nearest(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let x = nalgebra::DVector::from_column_slice(xi);
        let mut best = (f64::INFINITY, xi.to_vec());
        for m in &self.kernels {
            // component of x in the row space of m
            let gram = m * m.transpose();
            let Some(inv) = gram.try_inverse() else { continue };
            let along = m.transpose() * inv * (m * &x);
            let dist = along.norm();
            if dist < best.0 {
                best = (dist, (&x - along).iter().copied().collect());
            }
        }
        best
    }

    pub fn envelope(&self, xi: &[f64]) -> f64 {
        let (dist, eta) = self.nearest(xi);
        (dist / (1.0 + norm2(&eta))).min(1.0 / (1.0 + norm2(xi)))
    }
}

#[derive(Clone, Debug)]
enum ChartPiece {
    Cartesian { param: usize, coord: usize, dim: usize },
    Polar { param: usize, coord: usize },
    Spherical { param: usize, coord: usize },
}

/// Coordinates covering `O` up to a null set.
#[derive(Clone, Debug)]
pub struct OrbitChart {
    pub dim: usize,
    pub axes: Vec<Axis>,
    pieces: Vec<ChartPiece>,
}

impl OrbitChart {
    /// Writes the point for `params` into `xi` and returns the extra Jacobian.
    pub fn point(&self, p: &[f64], xi: &mut [f64]) -> f64 {
        let mut jac = 1.0;
        for piece in &self.pieces {
            match *piece {
                ChartPiece::Cartesian { param, coord, dim } => xi[coord..coord + dim].copy_from_slice(&p[param..param + dim]),
                ChartPiece::Polar { param, coord } => {
                    let (rho, th) = (p[param], p[param + 1]);
                    xi[coord] = rho * th.cos();
                    xi[coord + 1] = rho * th.sin();
                    jac *= rho;
                }
                ChartPiece::Spherical { param, coord } => {
                    let (rho, th, ph) = (p[param], p[param + 1], p[param + 2]);
                    xi[coord] = rho * th.cos();
                    xi[coord + 1] = rho * th.sin() * ph.cos();
                    xi[coord + 2] = rho * th.sin() * ph.sin();
                    jac *= rho * rho * th.sin();
                }
            }
        }
        jac
    }
}

/// `A_H(h) = A(h^T xi_0)`.
pub fn envelope_ah(spec: &GroupSpec, h: &GroupElement) -> Result<f64> {
    let o = orbit_of(spec);
    let xi = spec.dual_action(h, &o.base_point)?;
    Ok(o.a_value(&xi))
}

/// The unique (up to the compact stabilizer) `h` with `h^T xi_0 = xi`.
pub fn orbit_section(spec: &GroupSpec, xi: &[f64]) -> Result<GroupElement> {
    check_dim(spec.dim(), xi.len())?;
    let o = orbit_of(spec);
    if !o.contains(xi) {
        return Err(Error::NotInOrbit(xi.to_vec()));
    }
    match spec.family() {
        Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => {
            let (s, r, t) = data.section(xi)?;
            spec.element_from_factored(s, r, &t)
        }
        // h = diag(xi) since xi_0 = (1, ..., 1)
        Family::Diagonal => spec.diagonal_element(xi),
        Family::Similitude => {
            let d = xi.len();
            let n = norm2(xi);
            if d == 1 {
                return spec.element_from_matrix(&DMatrix::from_element(1, 1, xi[0]));
            }
            let u: Vec<f64> = xi.iter().map(|v| v / n).collect();
            spec.similitude_element(n, &rotation_with_first_row(&u))
        }
        // h^T e_1 = rho(a) 1 = a in adapted coordinates
        Family::AbelianFromAlgebra(_) => spec.algebra_element(xi),
        Family::DirectProduct(fs) => {
            let mut parts = Vec::new();
            let mut off = 0;
            for f in fs {
                parts.push(orbit_section(f, &xi[off..off + f.dim()])?);
                off += f.dim();
            }
            spec.product_element(parts)
        }
    }
}

/// A rotation whose first row is the unit vector `u`.
pub fn rotation_with_first_row(u: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let mut v: Vec<f64> = u.iter().map(|x| -x).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv < 1e-30 {
        return DMatrix::identity(d, d);
    }
    // Householder reflection sending e_1 to u, then fix the determinant
    let mut h = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vv);
    h.row_mut(d - 1).neg_mut();
    h
}

/// A point of a Haar chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaarPoint {
    pub det: f64,
    pub delta_h: f64,
    /// Density of left Haar measure with respect to the chart parameters.
    pub density: f64,
}

#[derive(Clone, Debug)]
enum HaarPiece {
    Shear { data: ShearletData, param: usize, coord: usize },
    Diagonal { param: usize, coord: usize, dim: usize },
    Similitude1 { param: usize, coord: usize },
    Similitude2 { param: usize, coord: usize },
    Abelian { data: AbelianData, param: usize, coord: usize },
}

/// Global coordinates on `H` (up to a null set) with the Haar density.
#[derive(Clone, Debug)]
pub struct HaarChart {
    pub dim: usize,
    pub axes: Vec<Axis>,
    pub roles: Vec<AxisRole>,
    pieces: Vec<HaarPiece>,
    spec: GroupSpec,
}

/// What a Haar chart coordinate parametrizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRole {
    Sign,
    /// Logarithmic scale.
    Scale,
    /// Shear or nilpotent coordinate.
    Shear,
    /// Rotation angle in `[0, 2 pi)`.
    Angle,
}

/// Default axis for logarithmic scale parameters.
pub fn scale_axis() -> Axis {
    Axis::Line { lo: -8.0, hi: 4.0, grow: 1.0 }
}

impl HaarChart {
    pub fn new(spec: &GroupSpec) -> Result<Self> {
        let mut axes = Vec::new();
        let mut pieces = Vec::new();
        Self::push(spec, &mut axes, &mut pieces, 0)?;
        let roles = axes
            .iter()
            .map(|a| match a {
                Axis::Discrete(_) => AxisRole::Sign,
                Axis::Real { .. } => AxisRole::Shear,
                Axis::Line { grow, .. } if *grow == 0.0 => AxisRole::Angle,
                _ => AxisRole::Scale,
            })
            .collect();
        Ok(Self { dim: spec.dim(), axes, roles, pieces, spec: spec.clone() })
    }

    fn push(spec: &GroupSpec, axes: &mut Vec<Axis>, pieces: &mut Vec<HaarPiece>, coord: usize) -> Result<()> {
        let d = spec.dim();
        let param = axes.len();
        match spec.family() {
            Family::Shearlet2D { data, .. } | Family::GeneralizedShearlet(data) => {
                axes.push(Axis::signs());
                axes.push(scale_axis());
                axes.extend((1..d).map(|_| Axis::real()));
                pieces.push(HaarPiece::Shear { data: (**data).clone(), param, coord });
            }
            Family::Diagonal => {
                for _ in 0..d {
                    axes.push(Axis::signs());
                    axes.push(scale_axis());
                }
                pieces.push(HaarPiece::Diagonal { param, coord, dim: d });
            }
            Family::Similitude => match d {
                1 => {
                    axes.push(Axis::signs());
                    axes.push(scale_axis());
                    pieces.push(HaarPiece::Similitude1 { param, coord });
                }
                2 => {
                    axes.push(scale_axis());
                    axes.push(Axis::interval(0.0, 2.0 * PI));
                    pieces.push(HaarPiece::Similitude2 { param, coord });
                }
                _ => return Err(Error::Unsupported(format!("no Haar chart for similitude groups in dimension {d}"))),
            },
            Family::AbelianFromAlgebra(data) => {
                axes.push(Axis::signs());
                axes.push(scale_axis());
                axes.extend((1..d).map(|_| Axis::real()));
                pieces.push(HaarPiece::Abelian { data: (**data).clone(), param, coord });
            }
            Family::DirectProduct(fs) => {
                let mut off = coord;
                for f in fs {
                    Self::push(f, axes, pieces, off)?;
                    off += f.dim();
                }
            }
        }
        Ok(())
    }

    /// Writes `h^T xi_0` into `dual` and returns determinant, modular function
    /// and Haar density at the chart point.
    pub fn eval(&self, p: &[f64], dual: &mut [f64]) -> HaarPoint {
        let mut out = HaarPoint { det: 1.0, delta_h: 1.0, density: 1.0 };
        for piece in &self.pieces {
            match piece {
                HaarPiece::Shear { data, param, coord } => {
                    let d = data.y().len();
                    let (s, r) = (p[*param], p[param + 1]);
                    let t = &p[param + 2..param + 1 + d];
                    data.dual_base_point(s, r, t, &mut dual[*coord..coord + d]);
                    let tr = data.trace_y();
                    let sign = if d % 2 == 0 { 1.0 } else { s };
                    out.det *= sign * (r * tr).exp();
                    let dh = (r * (tr - d as f64)).exp();
                    out.delta_h *= dh;
                    // d(left Haar) = Delta_H |det F| dr dt
                    out.density *= dh * data.first_rows().determinant().abs();
                }
                HaarPiece::Diagonal { param, coord, dim } => {
                    for i in 0..*dim {
                        let v = p[param + 2 * i] * p[param + 2 * i + 1].exp();
                        dual[coord + i] = v;
                        out.det *= v;
                    }
                }
                HaarPiece::Similitude1 { param, coord } => {
                    let v = p[*param] * p[param + 1].exp();
                    dual[*coord] = v;
                    out.det *= v;
                }
                HaarPiece::Similitude2 { param, coord } => {
                    let (r, th) = (p[*param], p[param + 1]);
                    // first row of e^r [[c, -s], [s, c]]
                    dual[*coord] = r.exp() * th.cos();
                    dual[coord + 1] = -r.exp() * th.sin();
                    out.det *= (2.0 * r).exp();
                }
                HaarPiece::Abelian { data, param, coord } => {
                    let d = data.algebra().dim();
                    let (s, r) = (p[*param], p[param + 1]);
                    dual[*coord] = s * r.exp();
                    dual[coord + 1..coord + d].copy_from_slice(&p[param + 2..param + 1 + d]);
                    out.det *= dual[*coord].powi(d as i32);
                    // Lebesgue da over |det rho(a)|
                    out.density *= (r * (1.0 - d as f64)).exp();
                }
            }
        }
        out
    }

    /// The group element at a chart point.
    pub fn element(&self, p: &[f64]) -> Result<GroupElement> {
        let mut parts = Vec::new();
        for piece in &self.pieces {
            let m = match piece {
                HaarPiece::Shear { data, param, .. } => {
                    let d = data.y().len();
                    data.matrix(p[*param], p[param + 1], &p[param + 2..param + 1 + d])
                }
                HaarPiece::Diagonal { param, dim, .. } => {
                    DMatrix::from_fn(*dim, *dim, |i, j| if i == j { p[param + 2 * i] * p[param + 2 * i + 1].exp() } else { 0.0 })
                }
                HaarPiece::Similitude1 { param, .. } => DMatrix::from_element(1, 1, p[*param] * p[param + 1].exp()),
                HaarPiece::Similitude2 { param, .. } => {
                    let (r, th) = (p[*param], p[param + 1]);
                    DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * r.exp()
                }
                HaarPiece::Abelian { data, param, .. } => {
                    let d = data.algebra().dim();
                    let (s, r) = (p[*param], p[param + 1]);
                    let mut a = vec![s * r.exp()];
                    a.extend_from_slice(&p[param + 2..param + 1 + d]);
                    data.matrix(&a)
                }
            };
            parts.push(m);
        }
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        let mut off = 0;
        for part in &parts {
            let k = part.nrows();
            m.view_mut((off, off), (k, k)).copy_from(part);
            off += k;
        }
        self.spec.element_from_matrix(&m)
    }

    /// `int_H F(h) dh`, with `F` seeing the chart point and `h^T xi_0`.
    pub fn integral<F>(&self, f: F, cfg: &QuadConfig) -> QuadResult
    where
        F: Fn(&[f64], &[f64], &HaarPoint) -> f64 + Sync,
    {
        integrate(
            &self.axes,
            |p| {
                let mut buf = [0.0; 16];
                let dual = &mut buf[..self.dim];
                let hp = self.eval(p, dual);
                if hp.density == 0.0 {
                    return 0.0;
                }
                hp.density * f(p, dual, &hp)
            },
            cfg,
        )
    }
}

/// Both sides of `int_O F = int_H F(h^T xi_0) |det h| / Delta_H(h) dh`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub haar: f64,
    pub orbit: f64,
    pub relative_error: f64,
    pub converged: bool,
}

pub fn haar_transfer_check<F>(spec: &GroupSpec, f: F, cfg: &QuadConfig) -> Result<TransferCheck>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let chart = HaarChart::new(spec)?;
    let lhs = chart.integral(|_, xi, hp| f(xi) * hp.det.abs() / hp.delta_h, cfg);
    let rhs = orbit_of(spec).integral(&f, cfg);
    Ok(TransferCheck {
        haar: lhs.value,
        orbit: rhs.value,
        relative_error: (lhs.value - rhs.value).abs() / rhs.value.abs().max(f64::MIN_POSITIVE),
        converged: lhs.converged && rhs.converged,
    })
}

/// Empirical constants behind the moderateness and norm-equivalence
/// properties of `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRobustness {
    pub samples: usize,
    /// `max A(h^T xi) / A(xi)` over `|h - id| < 1/2`.
    pub moderateness: f64,
    /// Range of `A_max / A_euclid`.
    pub norm_ratio: (f64, f64),
}

/// Samples `xi = g^T xi_0` with `g` from boxes of radius 6 and `h` near the
/// identity, and records the extreme ratios.
pub fn envelope_robustness(spec: &GroupSpec, samples: usize, seed: u64) -> Result<EnvelopeRobustness> {
    use rand::SeedableRng;
    let o = orbit_of(spec);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = EnvelopeRobustness { samples, moderateness: 0.0, norm_ratio: (f64::INFINITY, 0.0) };
    let id = DMatrix::identity(spec.dim(), spec.dim());
    for _ in 0..samples {
        let g = spec.sample_element(&mut rng, 6.0, 6.0);
        let xi = spec.dual_action(&g, &o.base_point)?;
        let a = o.a_value(&xi);
        let h = loop {
            let h = spec.sample_near_identity(&mut rng, 0.2);
            if crate::linalg::op_norm(&(&h.matrix - &id)) < 0.5 {
                break h;
            }
        };
        let hx = spec.dual_action(&h, &xi)?;
        out.moderateness = out.moderateness.max(o.a_value(&hx) / a);
        let ratio = o.envelope_in(&xi, Norm::Max)? / o.envelope_in(&xi, Norm::Euclidean)?;
        out.norm_ratio = (out.norm_ratio.0.min(ratio), out.norm_ratio.1.max(ratio));
    }
    Ok(out)
}
