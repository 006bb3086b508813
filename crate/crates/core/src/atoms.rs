//! Compactly supported candidate wavelets `psi = D^r f` built from tensor
//! B-splines, with checks for vanishing moments on the orbit complement and
//! for admissibility.

use std::io::{Read, Write};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::groups::{Family, GroupSpec};
use crate::orbit::{orbit_of, OrbitDescriptor, OrbitKind};
use crate::quad::{integrate, pairwise_sum, Axis, QuadConfig};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `m`-th derivative of the centered cardinal B-spline of degree `k`
/// (support `[-(k+1)/2, (k+1)/2]`), from truncated powers.
///
/// Evaluates on the left half and reflects, so only the few truncated
/// powers left of `x` enter and there is no cancellation.
pub fn bspline(k: usize, m: usize, x: f64) -> f64 {
    if m > k {
        return 0.0;
    }
    let half = (k + 1) as f64 / 2.0;
    if x.abs() >= half {
        return 0.0;
    }
    let (y, sign) = if x > 0.0 { (-x, if m.is_multiple_of(2) { 1.0 } else { -1.0 }) } else { (x, 1.0) };
    let p = (k - m) as i32;
    let mut s = 0.0;
    for j in 0..=k + 1 {
        let u = y + half - j as f64;
        if u <= 0.0 {
            break;
        }
        let term = binomial(k + 1, j) * u.powi(p);
        s += if j % 2 == 0 { term } else { -term };
    }
    sign * s / factorial(k - m)
}

/// `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (std::f64::consts::PI * x).powi(2) / 6.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Separable tensor B-spline: axis `j` carries a centered spline of degree
/// `degrees[j]` stretched onto `[lo[j], hi[j]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineBase {
    pub degrees: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SplineBase {
    pub fn new(degrees: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(degrees.len(), lo.len())?;
        check_dim(degrees.len(), hi.len())?;
        if degrees.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidParameter("spline support must be a nonempty box".into()));
        }
        Ok(Self { degrees, lo, hi })
    }

    /// Unit knot spacing, centered at the origin.
    pub fn cardinal(d: usize, k: usize) -> Self {
        let h = (k + 1) as f64 / 2.0;
        Self { degrees: vec![k; d], lo: vec![-h; d], hi: vec![h; d] }
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn knot_spacing(&self, j: usize) -> f64 {
        (self.hi[j] - self.lo[j]) / (self.degrees[j] + 1) as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.lo[j] + self.hi[j])
    }

    /// `d^m/dx^m` of the axis-`j` factor.
    pub fn factor(&self, j: usize, m: usize, x: f64) -> f64 {
        let w = self.knot_spacing(j);
        bspline(self.degrees[j], m, (x - self.center(j)) / w) / w.powi(m as i32)
    }

    /// Fourier transform of the axis-`j` factor, `int f(x) e^{-2 pi i x xi} dx`.
    pub fn factor_hat(&self, j: usize, xi: f64) -> Complex64 {
        let w = self.knot_spacing(j);
        let phase = Complex64::from_polar(1.0, -TWO_PI * self.center(j) * xi);
        phase * (w * sinc(w * xi).powi(self.degrees[j] as i32 + 1))
    }

    /// Knots of axis `j`, the breakpoints of every derivative.
    pub fn knots(&self, j: usize) -> Vec<f64> {
        let w = self.knot_spacing(j);
        (0..=self.degrees[j] + 1).map(|i| self.lo[j] + i as f64 * w).collect()
    }
}

/// One factor of the orbit operator `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorFactor {
    /// `d^alpha`; the `r`-th power is `d^{r alpha}`.
    Partial { alpha: Vec<u32> },
    /// Laplacian in coordinates `offset..offset+len`, applied `ceil(r/2)` times.
    Laplacian { offset: usize, len: usize },
}

/// Differential operator whose powers produce vanishing moments on `O^c`:
/// the product of its factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitOperator {
    pub dim: usize,
    pub factors: Vec<OperatorFactor>,
}

/// `coef * d^alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub alpha: Vec<u32>,
}

impl OrbitOperator {
    pub fn name(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| match f {
                OperatorFactor::Partial { alpha } => alpha
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a > 0)
                    .map(|(i, &a)| if a == 1 { format!("d{}", i + 1) } else { format!("d{}^{a}", i + 1) })
                    .collect::<Vec<_>>()
                    .join(" "),
                OperatorFactor::Laplacian { offset, len } if *offset == 0 && *len == self.dim => "laplacian".into(),
                OperatorFactor::Laplacian { offset, len } => format!("laplacian[{}..{}]", offset + 1, offset + len),
            })
            .collect();
        parts.join(" * ")
    }

    /// Expansion of `D^r` into monomials.
    pub fn expand(&self, r: u32) -> Vec<Term> {
        let mut terms = vec![Term { coef: 1.0, alpha: vec![0; self.dim] }];
        for f in &self.factors {
            let piece = match f {
                OperatorFactor::Partial { alpha } => {
                    vec![Term { coef: 1.0, alpha: alpha.iter().map(|a| a * r).collect() }]
                }
                OperatorFactor::Laplacian { offset, len } => laplacian_power(self.dim, *offset, *len, r.div_ceil(2)),
            };
            let mut next: Vec<Term> = Vec::new();
            for a in &terms {
                for b in &piece {
                    let alpha: Vec<u32> = a.alpha.iter().zip(&b.alpha).map(|(x, y)| x + y).collect();
                    match next.iter_mut().find(|t| t.alpha == alpha) {
                        Some(t) => t.coef += a.coef * b.coef,
                        None => next.push(Term { coef: a.coef * b.coef, alpha }),
                    }
                }
            }
            terms = next;
        }
        terms
    }
}

/// Multinomial expansion of the `p`-th power of a block Laplacian.
fn laplacian_power(dim: usize, offset: usize, len: usize, p: u32) -> Vec<Term> {
    let mut out = Vec::new();
    let mut beta = vec![0u32; len];
    fn rec(i: usize, left: u32, beta: &mut Vec<u32>, p: u32, dim: usize, offset: usize, out: &mut Vec<Term>) {
        if i + 1 == beta.len() {
            beta[i] = left;
            let coef = factorial(p as usize) / beta.iter().map(|&b| factorial(b as usize)).product::<f64>();
            let mut alpha = vec![0; dim];
            for (j, &b) in beta.iter().enumerate() {
                alpha[offset + j] = 2 * b;
            }
            out.push(Term { coef, alpha });
            return;
        }
        for b in 0..=left {
            beta[i] = b;
            rec(i + 1, left - b, beta, p, dim, offset, out);
        }
    }
    rec(0, p, &mut beta, p, dim, offset, &mut out);
    out
}

/// The operator `D_O` attached to the group's orbit.
pub fn orbit_differential_operator(spec: &GroupSpec) -> Result<OrbitOperator> {
    let d = spec.dim();
    let mut factors = Vec::new();
    push_factors(spec, 0, d, &mut factors);
    Ok(OrbitOperator { dim: d, factors })
}

fn push_factors(spec: &GroupSpec, offset: usize, total: usize, out: &mut Vec<OperatorFactor>) {
    let d = spec.dim();
    let unit = |js: &mut dyn Iterator<Item = usize>| {
        let mut alpha = vec![0; total];
        for j in js {
            alpha[offset + j] = 1;
        }
        OperatorFactor::Partial { alpha }
    };
    match spec.family() {
        Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) | Family::AbelianFromAlgebra(_) => {
            out.push(unit(&mut std::iter::once(0)))
        }
        Family::Diagonal => out.push(unit(&mut (0..d))),
        Family::Similitude => out.push(OperatorFactor::Laplacian { offset, len: d }),
        Family::DirectProduct(fs) => {
            let mut off = offset;
            for f in fs {
                push_factors(f, off, total, out);
                off += f.dim();
            }
        }
    }
}

/// `psi = D^r f` for a tensor spline `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomJson", into = "AtomJson")]
pub struct Atom {
    pub base: SplineBase,
    pub operator: OrbitOperator,
    pub order: u32,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    base: SplineBase,
    operator: OrbitOperator,
    order: u32,
}

impl TryFrom<AtomJson> for Atom {
    type Error = Error;
    fn try_from(j: AtomJson) -> Result<Self> {
        Atom::new(j.base, j.operator, j.order)
    }
}

impl From<Atom> for AtomJson {
    fn from(a: Atom) -> Self {
        AtomJson { base: a.base, operator: a.operator, order: a.order }
    }
}

/// Builds `D_O^r f`, refusing bases that are not at least one degree
/// smoother than the derivatives taken on each axis.
pub fn make_atom(spec: &GroupSpec, r: u32, base: SplineBase) -> Result<Atom> {
    check_dim(spec.dim(), base.dim())?;
    Atom::new(base, orbit_differential_operator(spec)?, r)
}

impl Atom {
    pub fn new(base: SplineBase, operator: OrbitOperator, order: u32) -> Result<Self> {
        check_dim(operator.dim, base.dim())?;
        let terms = operator.expand(order);
        for j in 0..base.dim() {
            let need = terms.iter().map(|t| t.alpha[j] as usize).max().unwrap_or(0);
            if need > 0 && base.degrees[j] < need + 1 {
                return Err(Error::InvalidParameter(format!(
                    "axis {} needs spline degree >= {} for {} derivatives, got {}",
                    j + 1,
                    need + 1,
                    need,
                    base.degrees[j]
                )));
            }
        }
        Ok(Self { base, operator, order, terms })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn support(&self) -> (&[f64], &[f64]) {
        (&self.base.lo, &self.base.hi)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef * t.alpha.iter().enumerate().map(|(j, &a)| self.base.factor(j, a as usize, x[j])).product::<f64>()
            })
            .sum()
    }

    /// Polynomial symbol of `D^r` at `xi`.
    pub fn symbol(&self, xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.alpha
                    .iter()
                    .zip(xi)
                    .fold(Complex64::new(t.coef, 0.0), |acc, (&a, &x)| acc * Complex64::new(0.0, TWO_PI * x).powu(a))
            })
            .sum()
    }

    pub fn base_spectrum(&self, xi: &[f64]) -> Complex64 {
        (0..self.dim()).map(|j| self.base.factor_hat(j, xi[j])).product()
    }

    /// Samples on a grid.
    pub fn sample(&self, grid: &Grid) -> SampledFunction {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                self.eval(&x)
            })
            .collect();
        SampledFunction { grid: grid.clone(), values }
    }

    /// `int x^alpha psi(x) e^{-2 pi i <eta, x>} dx` and `int |x^alpha psi|`,
    /// per term and per axis, with Gauss-Legendre on each knot interval.
    fn axis_moments(&self, eta: &[f64], max_power: usize) -> Vec<Vec<Vec<(Complex64, f64)>>> {
        let gl = GaussLegendre::new(NonZeroUsize::new(24).unwrap());
        let nodes: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        self.terms
            .iter()
            .map(|t| {
                (0..self.dim())
                    .map(|j| {
                        let knots = self.base.knots(j);
                        let mut acc = vec![(Complex64::new(0.0, 0.0), 0.0); max_power + 1];
                        for w in knots.windows(2) {
                            let (a, b) = (w[0], w[1]);
                            for &(u, wt) in &nodes {
                                let x = 0.5 * (a + b) + 0.5 * (b - a) * u;
                                let wx = 0.5 * (b - a) * wt;
                                let g = self.base.factor(j, t.alpha[j] as usize, x);
                                let e = Complex64::from_polar(1.0, -TWO_PI * eta[j] * x);
                                let mut xp = 1.0;
                                for slot in acc.iter_mut() {
                                    slot.0 += e * (wx * xp * g);
                                    slot.1 += wx * (xp * g).abs();
                                    xp *= x;
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// Anything with a Fourier transform and moment integrals.
pub trait Spectral: Sync {
    fn dim(&self) -> usize;
    /// `psi_hat(xi) = int psi(x) e^{-2 pi i <xi, x>} dx`.
    fn spectrum(&self, xi: &[f64]) -> Complex64;
    /// For every `alpha` with `|alpha| < order`: the moment integral at
    /// `eta` and the matching absolute integral `int |x^alpha psi|`.
    fn moments(&self, eta: &[f64], order: u32) -> Vec<(Vec<u32>, Complex64, f64)>;
    /// Magnitudes of the spectrum near `eta` below this are treated as noise.
    fn noise_floor(&self, _eta: &[f64]) -> f64 {
        0.0
    }
}

/// All `alpha` with `|alpha| < order`.
pub fn multi_indices(d: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut a = vec![0u32; d];
    fn rec(i: usize, left: u32, a: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for v in 0..=left {
            a[i] = v;
            rec(i + 1, left - v, a, out);
        }
        a[i] = 0;
    }
    if order > 0 {
        rec(0, order - 1, &mut a, &mut out);
    }
    out
}

impl Spectral for Atom {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        self.symbol(xi) * self.base_spectrum(xi)
    }

    fn moments(&self, eta: &[f64], order: u32) -> Vec<(Vec<u32>, Complex64, f64)> {
        if order == 0 {
            return vec![];
        }
        let table = self.axis_moments(eta, order as usize - 1);
        multi_indices(self.dim(), order)
            .into_iter()
            .map(|alpha| {
                let mut value = Complex64::new(0.0, 0.0);
                let mut scale = 0.0;
                for (t, per_axis) in self.terms.iter().zip(&table) {
                    let mut v = Complex64::new(t.coef, 0.0);
                    let mut s = t.coef.abs();
                    for (j, &a) in alpha.iter().enumerate() {
                        v *= per_axis[j][a as usize].0;
                        s *= per_axis[j][a as usize].1;
                    }
                    value += v;
                    scale += s;
                }
                (alpha, value, scale)
            })
            .collect()
    }
}

/// Wraps a closed-form spectrum.
pub struct SpectrumFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> Spectral for SpectrumFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        (self.f)(xi)
    }
    fn moments(&self, _eta: &[f64], _order: u32) -> Vec<(Vec<u32>, Complex64, f64)> {
        vec![]
    }
}

/// Uniform rectangular grid; axis `j` has points `origin[j] + i * spacing[j]`.
/// Flat indices are row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        check_dim(origin.len(), spacing.len())?;
        check_dim(origin.len(), counts.len())?;
        if origin.is_empty() || counts.iter().any(|&c| c < 2) || spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidParameter("grid needs counts >= 2 and spacing > 0 on every axis".into()));
        }
        Ok(Self { origin, spacing, counts })
    }

    /// `n` points per axis covering `[lo, hi]` including both ends.
    pub fn covering(lo: &[f64], hi: &[f64], n: usize) -> Result<Self> {
        let spacing = lo.iter().zip(hi).map(|(a, b)| (b - a) / (n - 1) as f64).collect();
        Self::new(lo.to_vec(), spacing, vec![n; lo.len()])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinates of flat index `i`.
    pub fn point(&self, mut i: usize, x: &mut [f64]) {
        for j in (0..self.dim()).rev() {
            let c = i % self.counts[j];
            i /= self.counts[j];
            x[j] = self.origin[j] + c as f64 * self.spacing[j];
        }
    }

    /// Trapezoid weight of flat index `i` (halved at the faces).
    pub fn weight(&self, mut i: usize) -> f64 {
        let mut w = self.cell_volume();
        for j in (0..self.dim()).rev() {
            let c = i % self.counts[j];
            i /= self.counts[j];
            if c == 0 || c + 1 == self.counts[j] {
                w *= 0.5;
            }
        }
        w
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.counts == other.counts
            && self.origin.iter().zip(&other.origin).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
            && self.spacing.iter().zip(&other.spacing).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs())
    }
}

const MAGIC: &[u8; 4] = b"ORBF";

/// Real samples on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sampled values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    /// Trapezoidal `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        let v: Vec<f64> = self.values.iter().enumerate().map(|(i, x)| self.grid.weight(i) * x * x).collect();
        pairwise_sum(&v).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        let v: Vec<f64> = self.values.iter().enumerate().map(|(i, x)| self.grid.weight(i) * x.abs()).collect();
        pairwise_sum(&v)
    }

    /// Text format:
    ///
    /// ```text
    /// # orbitlet sampled function
    /// origin,<x_1>,...,<x_d>
    /// spacing,<h_1>,...,<h_d>
    /// counts,<n_1>,...,<n_d>
    /// <row of n_d values>
    /// ...
    /// ```
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        writeln!(w, "# orbitlet sampled function")?;
        writeln!(w, "origin,{}", join(&self.grid.origin))?;
        writeln!(w, "spacing,{}", join(&self.grid.spacing))?;
        writeln!(w, "counts,{}", self.grid.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))?;
        let row = *self.grid.counts.last().unwrap();
        for chunk in self.values.chunks(row) {
            writeln!(w, "{}", join(chunk))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<Vec<String>> {
            let (n, line) = lines.next().ok_or_else(|| Error::Parse(format!("missing '{key}' line")))?;
            let mut parts = line.split(',').map(|s| s.trim().to_string());
            if parts.next().as_deref() != Some(key) {
                return Err(Error::Parse(format!("line {}: expected '{key}'", n + 1)));
            }
            Ok(parts.collect())
        };
        let num = |s: &String| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let origin = header("origin")?.iter().map(num).collect::<Result<Vec<_>>>()?;
        let spacing = header("spacing")?.iter().map(num).collect::<Result<Vec<_>>>()?;
        let counts = header("counts")?
            .iter()
            .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("'{s}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(origin, spacing, counts)?;
        let mut values = Vec::with_capacity(grid.len());
        for (n, line) in lines {
            for s in line.split(',') {
                values.push(s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?);
            }
        }
        Self::new(grid, values)
    }

    /// Binary format, all little-endian: magic `ORBF`, `u32` version (1),
    /// `u32` dimension `d`, then per axis `f64` origin, `f64` spacing,
    /// `u64` count, then the values as row-major `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        for j in 0..self.grid.dim() {
            w.write_all(&self.grid.origin[j].to_le_bytes())?;
            w.write_all(&self.grid.spacing[j].to_le_bytes())?;
            w.write_all(&(self.grid.counts[j] as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if &b4 != MAGIC {
            return Err(Error::Parse("not an ORBF file".into()));
        }
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(Error::Parse("unsupported ORBF version".into()));
        }
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        if d == 0 || d > 16 {
            return Err(Error::Parse(format!("bad dimension {d}")));
        }
        let (mut origin, mut spacing, mut counts) = (vec![], vec![], vec![]);
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            origin.push(f64::from_le_bytes(b8));
            r.read_exact(&mut b8)?;
            spacing.push(f64::from_le_bytes(b8));
            r.read_exact(&mut b8)?;
            counts.push(u64::from_le_bytes(b8) as usize);
        }
        let grid = Grid::new(origin, spacing, counts)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::new(grid, values)
    }
}

impl Spectral for SampledFunction {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn spectrum(&self, xi: &[f64]) -> Complex64 {
        self.spectrum_with_stride(xi, 1)
    }

    fn moments(&self, eta: &[f64], order: u32) -> Vec<(Vec<u32>, Complex64, f64)> {
        let mut x = vec![0.0; self.grid.dim()];
        multi_indices(self.grid.dim(), order)
            .into_iter()
            .map(|alpha| {
                let mut value = Complex64::new(0.0, 0.0);
                let mut scale = 0.0;
                for (i, v) in self.values.iter().enumerate() {
                    self.grid.point(i, &mut x);
                    let mono: f64 = x.iter().zip(&alpha).map(|(xj, &a)| xj.powi(a as i32)).product();
                    let ph = -TWO_PI * x.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>();
                    let w = self.grid.weight(i) * mono * v;
                    value += Complex64::from_polar(w, ph);
                    scale += w.abs();
                }
                (alpha, value, scale)
            })
            .collect()
    }

    /// Rounding noise plus ten times the gap between the trapezoid sums on
    /// this grid and on every other sample, an estimate of the aliasing error.
    fn noise_floor(&self, eta: &[f64]) -> f64 {
        let gap = (self.spectrum_with_stride(eta, 1) - self.spectrum_with_stride(eta, 2)).norm();
        1e-11 * self.l1_norm() + 10.0 * gap
    }
}

impl SampledFunction {
    /// Trapezoid sum over every `stride`-th sample on each axis.
    fn spectrum_with_stride(&self, xi: &[f64], stride: usize) -> Complex64 {
        let g = &self.grid;
        let d = g.dim();
        let coarse: Vec<usize> = g.counts.iter().map(|&c| (c - 1) / stride + 1).collect();
        let total: usize = coarse.iter().product();
        let mut re = Vec::with_capacity(total);
        let mut im = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for mut k in 0..total {
            let mut flat = 0;
            let mut w = 1.0;
            let mut ph = 0.0;
            for j in (0..d).rev() {
                idx[j] = k % coarse[j];
                k /= coarse[j];
            }
            for j in 0..d {
                let i = idx[j] * stride;
                flat = flat * g.counts[j] + i;
                let h = g.spacing[j] * stride as f64;
                w *= if idx[j] == 0 || idx[j] + 1 == coarse[j] { 0.5 * h } else { h };
                ph -= TWO_PI * (g.origin[j] + i as f64 * g.spacing[j]) * xi[j];
            }
            let v = w * self.values[flat];
            re.push(v * ph.cos());
            im.push(v * ph.sin());
        }
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }
}

/// Decay fit of `|psi_hat(eta + t u)|` as `t -> 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub eta: Vec<f64>,
    pub direction: Vec<f64>,
    pub t: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Least-squares slope of `ln |psi_hat|` against `ln t`.
    pub slope: f64,
    /// RMS deviation from the fitted line.
    pub residual: f64,
    /// Samples above the noise floor that entered the fit.
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub eta: Vec<f64>,
    pub alpha: Vec<u32>,
    pub value: f64,
    /// `|value| / int |x^alpha psi|`.
    pub relative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Verified,
    Failed,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProbe {
    pub claimed: u32,
    pub lines: Vec<LineFit>,
    /// Smallest fitted slope over all lines.
    pub fitted_order: f64,
    pub moments: Vec<MomentCheck>,
    /// Largest relative moment.
    pub worst_moment: f64,
    pub verdict: ProbeVerdict,
}

pub const MOMENT_TOL: f64 = 1e-6;
pub const SLOPE_TOL: f64 = 0.1;
pub const FIT_RESIDUAL_MAX: f64 = 0.05;

/// Points `eta` of `O^c` with unit normals into `O`.
pub fn complement_probes(o: &OrbitDescriptor) -> Vec<(Vec<f64>, Vec<f64>)> {
    const GENERIC: [f64; 4] = [0.137, -0.291, 0.053, 0.412];
    let d = o.dim;
    let unit = |i: usize| {
        let mut u = vec![0.0; d];
        u[i] = 1.0;
        u
    };
    match &o.kind {
        OrbitKind::FirstCoordinateNonzero => {
            let mut v = vec![(vec![0.0; d], unit(0))];
            let mut near = vec![0.0; d];
            let mut far = vec![0.0; d];
            for j in 1..d {
                near[j] = GENERIC[j % 4];
                far[j] = 3.3 + 0.1 * j as f64;
            }
            if d > 1 {
                v.push((near, unit(0)));
                v.push((far, unit(0)));
            }
            v
        }
        OrbitKind::PuncturedSpace => {
            let mut u: Vec<f64> = (0..d).map(|j| 1.0 / (1.0 + j as f64)).collect();
            let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.iter_mut().for_each(|x| *x /= n);
            vec![(vec![0.0; d], u)]
        }
        OrbitKind::CoordinateCross => (0..d)
            .map(|i| {
                let mut eta: Vec<f64> = (0..d).map(|j| GENERIC[j % 4]).collect();
                eta[i] = 0.0;
                (eta, unit(i))
            })
            .collect(),
        OrbitKind::BlockProduct(blocks) => {
            let mut out = Vec::new();
            let mut off = 0;
            for b in blocks {
                for (eta_b, u_b) in complement_probes(b) {
                    let mut eta: Vec<f64> = (0..d).map(|j| 0.5 + GENERIC[j % 4]).collect();
                    let mut u = vec![0.0; d];
                    eta[off..off + b.dim].copy_from_slice(&eta_b);
                    u[off..off + b.dim].copy_from_slice(&u_b);
                    out.push((eta, u));
                }
                off += b.dim;
            }
            out
        }
    }
}

fn fit_line(psi: &dyn Spectral, eta: &[f64], u: &[f64]) -> LineFit {
    let floor = psi.noise_floor(eta);
    let mut t = Vec::new();
    let mut magnitude = Vec::new();
    let mut xi = vec![0.0; eta.len()];
    for k in 6..=24 {
        let tk = 2f64.powi(-k);
        for j in 0..eta.len() {
            xi[j] = eta[j] + tk * u[j];
        }
        let m = psi.spectrum(&xi).norm();
        t.push(tk);
        magnitude.push(m);
    }
    let pts: Vec<(f64, f64)> =
        t.iter().zip(&magnitude).filter(|(_, &m)| m > floor && m > 0.0).map(|(t, m)| (t.ln(), m.ln())).collect();
    let (slope, residual) = if pts.len() < 3 {
        (f64::INFINITY, 0.0)
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let res = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
        (slope, res)
    };
    LineFit { eta: eta.to_vec(), direction: u.to_vec(), t, magnitude, slope, residual, points: pts.len() }
}

/// Checks that `psi` vanishes to order `r_claimed` on the orbit complement:
/// spectral slope fits along lines into `O`, and moment integrals at the
/// probe points.
pub fn verify_vanishing_moments(psi: &dyn Spectral, orbit: &OrbitDescriptor, r_claimed: u32) -> Result<SpectrumProbe> {
    check_dim(orbit.dim, psi.dim())?;
    let probes = complement_probes(orbit);
    let lines: Vec<LineFit> = probes.iter().map(|(eta, u)| fit_line(psi, eta, u)).collect();
    let fitted_order = lines.iter().map(|l| l.slope).fold(f64::INFINITY, f64::min);
    let mut moments = Vec::new();
    for (eta, _) in &probes {
        for (alpha, value, scale) in psi.moments(eta, r_claimed) {
            let relative = if scale > 0.0 { value.norm() / scale } else { 0.0 };
            moments.push(MomentCheck { eta: eta.clone(), alpha, value: value.norm(), relative });
        }
    }
    let worst_moment = moments.iter().map(|m| m.relative).fold(0.0, f64::max);
    // a line drowned in noise says nothing; a partly resolved one is ambiguous
    let informative: Vec<&LineFit> = lines.iter().filter(|l| l.points > 0).collect();
    let ambiguous = informative.is_empty()
        || informative.iter().any(|l| l.residual > FIT_RESIDUAL_MAX || !l.slope.is_finite());
    let verdict = if ambiguous {
        ProbeVerdict::Inconclusive
    } else if fitted_order >= r_claimed as f64 - SLOPE_TOL && worst_moment <= MOMENT_TOL {
        ProbeVerdict::Verified
    } else {
        ProbeVerdict::Failed
    };
    Ok(SpectrumProbe { claimed: r_claimed, lines, fitted_order, moments, worst_moment, verdict })
}

/// Density `Phi` with `int_H |psi_hat(h^T xi_0)|^2 dh = int_O |psi_hat|^2 Phi`,
/// that is `Delta_H(h) / |det h|` at the orbit section `h(xi)`.
pub fn orbit_density(spec: &GroupSpec, xi: &[f64]) -> f64 {
    let d = spec.dim();
    match spec.family() {
        Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) | Family::AbelianFromAlgebra(_) => {
            xi[0].abs().powi(-(d as i32))
        }
        Family::Similitude => xi.iter().map(|x| x * x).sum::<f64>().powf(-(d as f64) / 2.0),
        Family::Diagonal => xi.iter().map(|x| 1.0 / x.abs()).product(),
        Family::DirectProduct(fs) => {
            let mut off = 0;
            let mut p = 1.0;
            for f in fs {
                p *= orbit_density(f, &xi[off..off + f.dim()]);
                off += f.dim();
            }
            p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdict: AdmissibilityVerdict,
    /// Shell `k` covers distance `[2^{-k-1}, 2^{-k}]` to `O^c`.
    pub toward_complement: Vec<f64>,
    /// Shell `k` covers `[2^k, 2^{k+1}]`.
    pub toward_infinity: Vec<f64>,
    /// Running sums of both shell sequences, in order.
    pub partial_sums: Vec<f64>,
    pub converged: bool,
}

pub const SHELLS: usize = 12;
pub const SHELL_RATIO: f64 = 0.9;

/// Ratio test on the last four shells.
pub fn shell_verdict(shells: &[f64]) -> AdmissibilityVerdict {
    let n = shells.len();
    if n < 5 {
        return AdmissibilityVerdict::Inconclusive;
    }
    let ratios: Vec<f64> = (n - 4..n)
        .map(|k| {
            let (a, b) = (shells[k - 1], shells[k]);
            if b == 0.0 {
                0.0
            } else if a == 0.0 {
                f64::INFINITY
            } else {
                b / a
            }
        })
        .collect();
    if ratios.iter().all(|&r| r < SHELL_RATIO) {
        AdmissibilityVerdict::Finite
    } else if ratios.iter().all(|&r| r >= 1.0) {
        AdmissibilityVerdict::Divergent
    } else {
        AdmissibilityVerdict::Inconclusive
    }
}

/// `int |psi_hat|^2 Phi` split into dyadic shells toward `O^c` and toward
/// infinity. Supported for orbits whose complement is a hyperplane or the
/// origin (the latter in dimensions 1 to 3).
pub fn admissibility_check(spec: &GroupSpec, psi: &dyn Spectral, cfg: &QuadConfig) -> Result<AdmissibilityReport> {
    let d = spec.dim();
    check_dim(d, psi.dim())?;
    let o = orbit_of(spec);
    let density = |xi: &[f64]| orbit_density(spec, xi);
    let mut converged = true;
    let mut shell = |lo: f64, hi: f64| -> Result<f64> {
        let (lo, hi) = (lo.ln(), hi.ln());
        let r = match o.kind {
            OrbitKind::FirstCoordinateNonzero => {
                let mut axes = vec![Axis::SignedLog { lo, hi, grow: 0.0 }];
                axes.extend((1..d).map(|_| Axis::real()));
                integrate(&axes, |x| psi.spectrum(x).norm_sqr() * density(x), cfg)
            }
            OrbitKind::PuncturedSpace => {
                let radial = Axis::Log { lo, hi, grow: 0.0 };
                match d {
                    1 => integrate(&[Axis::signs(), radial], |p| {
                        let x = [p[0] * p[1]];
                        psi.spectrum(&x).norm_sqr() * density(&x)
                    }, cfg),
                    2 => integrate(&[radial, Axis::interval(0.0, TWO_PI)], |p| {
                        let x = [p[0] * p[1].cos(), p[0] * p[1].sin()];
                        p[0] * psi.spectrum(&x).norm_sqr() * density(&x)
                    }, cfg),
                    3 => integrate(&[radial, Axis::interval(0.0, std::f64::consts::PI), Axis::interval(0.0, TWO_PI)], |p| {
                        let (s, c) = p[1].sin_cos();
                        let x = [p[0] * s * p[2].cos(), p[0] * s * p[2].sin(), p[0] * c];
                        p[0] * p[0] * s * psi.spectrum(&x).norm_sqr() * density(&x)
                    }, cfg),
                    _ => return Err(Error::Unsupported(format!("admissibility shells for punctured space in dimension {d}"))),
                }
            }
            _ => return Err(Error::Unsupported(format!("admissibility shells for orbit kind {}", o.kind_name()))),
        };
        converged &= r.converged;
        Ok(r.value)
    };
    let toward_complement =
        (0..SHELLS).map(|k| shell(2f64.powi(-(k as i32) - 1), 2f64.powi(-(k as i32)))).collect::<Result<Vec<_>>>()?;
    let toward_infinity =
        (0..SHELLS).map(|k| shell(2f64.powi(k as i32), 2f64.powi(k as i32 + 1))).collect::<Result<Vec<_>>>()?;
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for v in toward_complement.iter().chain(&toward_infinity) {
        acc += v;
        partial_sums.push(acc);
    }
    use AdmissibilityVerdict::*;
    let verdict = match (shell_verdict(&toward_complement), shell_verdict(&toward_infinity)) {
        (Divergent, _) | (_, Divergent) => Divergent,
        (Finite, Finite) => Finite,
        _ => Inconclusive,
    };
    Ok(AdmissibilityReport { verdict, toward_complement, toward_infinity, partial_sums, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use crate::orbit::orbit_section;
    use proptest::prelude::*;

    #[test]
    fn bspline_partition_of_unity_and_integral() {
        for k in 0..8 {
            for x in [-0.3, 0.0, 0.41, 0.77] {
                let s: f64 = (-10..=10).map(|j| bspline(k, 0, x + j as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "k={k} x={x} s={s}");
            }
        }
    }

    #[test]
    fn bspline_derivative_matches_difference_recursion() {
        // B_k' (x) = B_{k-1}(x + 1/2) - B_{k-1}(x - 1/2)
        for k in 1..9 {
            // away from knots, where B_1' jumps
            for x in [-2.3, -0.7, 0.13, 0.2, 1.9] {
                let lhs = bspline(k, 1, x);
                let rhs = bspline(k - 1, 0, x + 0.5) - bspline(k - 1, 0, x - 0.5);
                assert!((lhs - rhs).abs() < 1e-12, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn cubic_values() {
        assert!((bspline(3, 0, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline(3, 0, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(bspline(3, 0, 2.0), 0.0);
    }

    #[test]
    fn operators_per_family() {
        let s = orbit_differential_operator(&GroupSpec::shearlet2d(0.5)).unwrap();
        assert_eq!(s.name(), "d1");
        let d = orbit_differential_operator(&GroupSpec::diagonal(3)).unwrap();
        assert_eq!(d.name(), "d1 d2 d3");
        let l = orbit_differential_operator(&GroupSpec::similitude(2)).unwrap();
        assert_eq!(l.name(), "laplacian");
        // order 5 -> three Laplacians: (a + b)^3 has 4 terms
        let t = l.expand(5);
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|t| t.alpha.iter().sum::<u32>() == 6));
        assert_eq!(t.iter().map(|t| t.coef).sum::<f64>(), 8.0);
    }

    #[test]
    fn degree_rule() {
        let g = GroupSpec::shearlet2d(0.5);
        assert!(make_atom(&g, 4, SplineBase::cardinal(2, 5)).is_ok());
        assert!(make_atom(&g, 5, SplineBase::cardinal(2, 5)).is_err());
        // only differentiated axes need smoothness
        let b = SplineBase::new(vec![5, 1], vec![-3.0, -1.0], vec![3.0, 1.0]).unwrap();
        assert!(make_atom(&g, 3, b).is_ok());
    }

    #[test]
    fn order_zero_is_the_base() {
        let g = GroupSpec::shearlet2d(0.5);
        let a = make_atom(&g, 0, SplineBase::cardinal(2, 3)).unwrap();
        let x = [0.3, -0.8];
        assert!((a.eval(&x) - bspline(3, 0, 0.3) * bspline(3, 0, -0.8)).abs() < 1e-16);
    }

    #[test]
    fn support_is_preserved() {
        let g = GroupSpec::shearlet2d(0.5);
        let base = SplineBase::new(vec![3, 3], vec![-1.0, 0.5], vec![2.0, 1.5]).unwrap();
        let a = make_atom(&g, 2, base).unwrap();
        for x in [[-1.0, 1.0], [2.0, 1.0], [0.3, 0.5], [0.3, 1.5], [-5.0, 1.0], [0.5, 9.0]] {
            assert_eq!(a.eval(&x), 0.0);
        }
        assert!(a.eval(&[0.2, 1.0]).abs() > 0.0);
    }

    #[test]
    fn spectrum_magnitude_is_symbol_times_base() {
        let g = GroupSpec::shearlet2d(0.5);
        let a = make_atom(&g, 3, SplineBase::cardinal(2, 5)).unwrap();
        for xi in [[0.2, 0.4], [-1.3, 0.05], [0.7, -2.2]] {
            let lhs = a.spectrum(&xi).norm();
            let rhs = (TWO_PI * xi[0].abs()).powi(3) * a.base_spectrum(&xi).norm();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1e-300));
        }
    }

    #[test]
    fn spectrum_matches_quadrature() {
        // the Fourier integral of the sampled atom against the closed form
        let g = GroupSpec::shearlet2d(0.5);
        let a = make_atom(&g, 2, SplineBase::cardinal(2, 5)).unwrap();
        let grid = Grid::covering(&[-3.0, -3.0], &[3.0, 3.0], 385).unwrap();
        let s = a.sample(&grid);
        for xi in [[0.3, 0.1], [0.5, -0.4], [-0.2, 0.25]] {
            let exact = a.spectrum(&xi);
            let num = s.spectrum(&xi);
            assert!((exact - num).norm() < 1e-6 * exact.norm(), "{xi:?} {exact} {num}");
        }
    }

    #[test]
    fn shearlet_moments_vanish() {
        let g = GroupSpec::shearlet2d(0.5);
        let o = orbit_of(&g);
        for r in 1..=4 {
            let a = make_atom(&g, r, SplineBase::cardinal(2, 5)).unwrap();
            let p = verify_vanishing_moments(&a, &o, r).unwrap();
            assert_eq!(p.verdict, ProbeVerdict::Verified, "{p:?}");
            assert!((p.fitted_order - r as f64).abs() < SLOPE_TOL);
        }
        // psi = f has order 0 and fails any positive claim
        let f = make_atom(&g, 0, SplineBase::cardinal(2, 5)).unwrap();
        let p = verify_vanishing_moments(&f, &o, 1).unwrap();
        assert!(p.fitted_order.abs() < SLOPE_TOL);
        assert_eq!(p.verdict, ProbeVerdict::Failed);
    }

    #[test]
    fn laplacian_adds_two() {
        let g = GroupSpec::similitude(2);
        let o = orbit_of(&g);
        let a = make_atom(&g, 2, SplineBase::cardinal(2, 5)).unwrap();
        let p = verify_vanishing_moments(&a, &o, 2).unwrap();
        assert_eq!(p.verdict, ProbeVerdict::Verified);
        assert!((p.fitted_order - 2.0).abs() < SLOPE_TOL);
        let b = make_atom(&g, 4, SplineBase::cardinal(2, 7)).unwrap();
        assert!((verify_vanishing_moments(&b, &o, 4).unwrap().fitted_order - 4.0).abs() < SLOPE_TOL);
    }

    #[test]
    fn diagonal_and_product_patterns() {
        let g = GroupSpec::diagonal(2);
        let a = make_atom(&g, 2, SplineBase::cardinal(2, 4)).unwrap();
        let p = verify_vanishing_moments(&a, &orbit_of(&g), 2).unwrap();
        assert_eq!(p.verdict, ProbeVerdict::Verified);
        let g = GroupSpec::direct_product(vec![GroupSpec::shearlet2d(0.5), GroupSpec::similitude(1)]).unwrap();
        let a = make_atom(&g, 2, SplineBase::cardinal(3, 4)).unwrap();
        let p = verify_vanishing_moments(&a, &orbit_of(&g), 2).unwrap();
        assert_eq!(p.verdict, ProbeVerdict::Verified, "{:?}", p.lines.iter().map(|l| l.slope).collect::<Vec<_>>());
    }

    #[test]
    fn sampled_function_probe_uses_noise_floor() {
        let g = GroupSpec::shearlet2d(0.5);
        let a = make_atom(&g, 1, SplineBase::cardinal(2, 4)).unwrap();
        let s = a.sample(&Grid::covering(&[-2.5, -2.5], &[2.5, 2.5], 101).unwrap());
        let p = verify_vanishing_moments(&s, &orbit_of(&g), 1).unwrap();
        assert!((p.fitted_order - 1.0).abs() < SLOPE_TOL, "{}", p.fitted_order);
        // second derivatives of a quintic: the aliasing floor hides the flat tail
        let a = make_atom(&g, 2, SplineBase::new(vec![5, 5], vec![-4.5, -4.5], vec![4.5, 4.5]).unwrap()).unwrap();
        for n in [129, 257] {
            let s = a.sample(&Grid::covering(&[-4.5, -4.5], &[4.5, 4.5], n).unwrap());
            let p = verify_vanishing_moments(&s, &orbit_of(&g), 2).unwrap();
            assert_eq!(p.verdict, ProbeVerdict::Verified, "n = {n}: {} {}", p.fitted_order, p.worst_moment);
        }
        let f = make_atom(&g, 0, SplineBase::cardinal(2, 5)).unwrap().sample(&Grid::covering(&[-3.0, -3.0], &[3.0, 3.0], 97).unwrap());
        assert_eq!(verify_vanishing_moments(&f, &orbit_of(&g), 1).unwrap().verdict, ProbeVerdict::Failed);
    }

    #[test]
    fn stride_one_is_the_plain_trapezoid_sum() {
        let grid = Grid::covering(&[-1.0, -0.5], &[1.5, 2.0], 9).unwrap();
        let s = SampledFunction::from_fn(&grid, |x| (x[0] - 0.3 * x[1]).cos() * (-x[1] * x[1]).exp());
        let xi = [0.37, -0.61];
        let mut x = [0.0; 2];
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 0..grid.len() {
            grid.point(i, &mut x);
            direct += Complex64::from_polar(grid.weight(i) * s.values[i], -TWO_PI * (x[0] * xi[0] + x[1] * xi[1]));
        }
        assert!((s.spectrum(&xi) - direct).norm() < 1e-14);
        // every other point of 9 is the 5-point trapezoid on the same box
        let coarse = Grid::covering(&[-1.0, -0.5], &[1.5, 2.0], 5).unwrap();
        let c = SampledFunction::from_fn(&coarse, |x| (x[0] - 0.3 * x[1]).cos() * (-x[1] * x[1]).exp());
        assert!((s.spectrum_with_stride(&xi, 2) - c.spectrum(&xi)).norm() < 1e-14);
    }

    #[test]
    fn density_matches_section() {
        for g in [
            GroupSpec::shearlet2d(0.5),
            GroupSpec::standard_shearlet(3, None).unwrap(),
            GroupSpec::similitude(3),
            GroupSpec::diagonal(2),
        ] {
            let xi: Vec<f64> = [0.7, -1.3, 0.4][..g.dim()].to_vec();
            let h = orbit_section(&g, &xi).unwrap();
            let m = g.modular_data(&h).unwrap();
            let phi = m.delta_h / m.det.abs();
            assert!((orbit_density(&g, &xi) - phi).abs() < 1e-10 * phi);
        }
    }

    #[test]
    fn admissibility_discriminates() {
        let cfg = QuadConfig { rel_tol: 1e-5, ..Default::default() };
        let g = GroupSpec::shearlet2d(0.5);
        let good = make_atom(&g, 2, SplineBase::cardinal(2, 4)).unwrap();
        let bad = make_atom(&g, 0, SplineBase::cardinal(2, 4)).unwrap();
        assert_eq!(admissibility_check(&g, &good, &cfg).unwrap().verdict, AdmissibilityVerdict::Finite);
        assert_eq!(admissibility_check(&g, &bad, &cfg).unwrap().verdict, AdmissibilityVerdict::Divergent);
        // compact spectral support away from O^c
        let band = SpectrumFn {
            dim: 2,
            f: |x: &[f64]| {
                if (1.0..=2.0).contains(&x[0]) && x[1].abs() <= 1.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
            },
        };
        assert_eq!(admissibility_check(&g, &band, &cfg).unwrap().verdict, AdmissibilityVerdict::Finite);
    }

    #[test]
    fn io_round_trips() {
        let grid = Grid::new(vec![-1.0, 0.5], vec![0.25, 0.1], vec![3, 4]).unwrap();
        let f = SampledFunction::from_fn(&grid, |x| x[0] * 3.0 + x[1].sin());
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(SampledFunction::read_csv(&buf[..]).unwrap(), f);
        let mut bin = Vec::new();
        f.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..4], b"ORBF");
        assert_eq!(SampledFunction::read_binary(&bin[..]).unwrap(), f);
        assert!(SampledFunction::read_binary(&b"XXXX"[..]).is_err());
        assert!(SampledFunction::read_csv(&b"origin,0\nspacing,1\ncounts,1\n0\n"[..]).is_err());
    }

    #[test]
    fn atom_json_round_trip() {
        let g = GroupSpec::similitude(2);
        let a = make_atom(&g, 3, SplineBase::cardinal(2, 6)).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let b: Atom = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn multi_index_count(d in 1usize..5, r in 0u32..7) {
            let n = multi_indices(d, r).len();
            // number of alpha in N^d with |alpha| <= r - 1 is C(r - 1 + d, d)
            let expect = if r == 0 { 0.0 } else { binomial(r as usize - 1 + d, d) };
            prop_assert_eq!(n as f64, expect);
        }

        #[test]
        fn bspline_is_symmetric(k in 1usize..10, m in 0usize..4, x in -6.0f64..6.0) {
            prop_assume!(m < k);
            let s = if m % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((bspline(k, m, x) - s * bspline(k, m, -x)).abs() < 1e-12);
        }
    }
}
