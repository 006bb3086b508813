//! Desk-scale continuous wavelet transform on `R^d x| H`: sampled
//! quasi-regular representation, coefficients, inversion and weighted
//! coefficient norms.
//!
//! Inner products and the inversion integral are trapezoidal sums. Both
//! are evaluated as linear correlations/convolutions with zero padding,
//! through FFTs, which is exact up to rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, Grid, SampledFunction, Spectral};
use crate::embeddedness::{group_weight, WeightSpec};
use crate::error::{check_dim, Error, Result};
use crate::groups::{GroupElement, GroupSpec};
use crate::linalg::{apply, transpose_apply};
use crate::orbit::{orbit_of, AxisRole, HaarChart};
use crate::quad::pairwise_sum;

/// Dilation sampling of the Haar chart: scales on a uniform grid in
/// `[-r_max, r_max]`, shear coordinates uniform in `[-t_max, t_max]`, both
/// signs, angles uniform on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DilationConfig {
    pub r_max: f64,
    pub r_points: usize,
    pub t_max: f64,
    pub t_points: usize,
    pub angle_points: usize,
}

impl Default for DilationConfig {
    fn default() -> Self {
        Self { r_max: 3.0, r_points: 25, t_max: 2.0, t_points: 9, angle_points: 16 }
    }
}

impl DilationConfig {
    /// Twice the points on every axis over the same ranges.
    pub fn refined(&self) -> Self {
        Self {
            r_points: 2 * self.r_points - 1,
            t_points: 2 * self.t_points - 1,
            angle_points: 2 * self.angle_points,
            ..self.clone()
        }
    }
}

/// A sampled dilation with its Haar cell measure.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub element: GroupElement,
    pub inverse: GroupElement,
    /// Chart coordinates.
    pub params: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct TransformGrid {
    pub translations: Grid,
    pub dilations: Vec<Dilation>,
}

fn trapezoid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    if n == 1 {
        return vec![(0.5 * (lo + hi), hi - lo)];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| (lo + i as f64 * h, if i == 0 || i + 1 == n { 0.5 * h } else { h })).collect()
}

impl TransformGrid {
    pub fn new(spec: &GroupSpec, translations: Grid, cfg: &DilationConfig) -> Result<Self> {
        check_dim(spec.dim(), translations.dim())?;
        if cfg.r_points == 0 || cfg.t_points == 0 || cfg.angle_points == 0 {
            return Err(Error::InvalidParameter("dilation grids need at least one point per axis".into()));
        }
        let chart = HaarChart::new(spec)?;
        let axes: Vec<Vec<(f64, f64)>> = chart
            .roles
            .iter()
            .map(|role| match role {
                AxisRole::Sign => vec![(-1.0, 1.0), (1.0, 1.0)],
                AxisRole::Scale => trapezoid(-cfg.r_max, cfg.r_max, cfg.r_points),
                AxisRole::Shear => trapezoid(-cfg.t_max, cfg.t_max, cfg.t_points),
                AxisRole::Angle => {
                    let n = cfg.angle_points;
                    let h = 2.0 * std::f64::consts::PI / n as f64;
                    (0..n).map(|i| (i as f64 * h, h)).collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut dilations = Vec::with_capacity(total);
        let mut p = vec![0.0; axes.len()];
        let mut dual = vec![0.0; spec.dim()];
        for mut i in 0..total {
            let mut w = 1.0;
            for j in (0..axes.len()).rev() {
                let (x, wj) = axes[j][i % axes[j].len()];
                i /= axes[j].len();
                p[j] = x;
                w *= wj;
            }
            let hp = chart.eval(&p, &mut dual);
            let element = chart.element(&p)?;
            let inverse = spec.inverse(&element)?;
            dilations.push(Dilation { element, inverse, params: p.clone(), weight: w * hp.density });
        }
        Ok(Self { translations, dilations })
    }
}

/// `(pi(x, h) psi)(y) = |det h|^{-1/2} psi(h^{-1}(y - x))` sampled on `grid`.
pub fn quasi_regular_apply(x: &[f64], h: &GroupElement, psi: &Atom, grid: &Grid) -> Result<SampledFunction> {
    check_dim(psi.dim(), x.len())?;
    check_dim(psi.dim(), grid.dim())?;
    let inv = h.matrix.clone().try_inverse().ok_or(Error::SingularElement)?;
    let scale = h.det().abs().powf(-0.5);
    let mut y = vec![0.0; grid.dim()];
    let values = (0..grid.len())
        .map(|i| {
            grid.point(i, &mut y);
            for (yj, xj) in y.iter_mut().zip(x) {
                *yj -= xj;
            }
            scale * psi.eval(&apply(&inv, &y))
        })
        .collect();
    SampledFunction::new(grid.clone(), values)
}

/// `W_psi f(x, h) = <f, pi(x, h) psi>` for every sampled `(x, h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub translations: Grid,
    /// `values[k][i]`: dilation `k`, translation `i`.
    pub values: Vec<Vec<f64>>,
}

/// FFT plans for a padded box.
struct Plans {
    dims: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl Plans {
    fn new(dims: Vec<usize>) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inv = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { dims, fwd, inv }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// In-place transform along every axis (row-major layout).
    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let d = self.dims.len();
        for j in 0..d {
            let n = self.dims[j];
            let stride: usize = self.dims[j + 1..].iter().product();
            let plan = if inverse { &self.inv[j] } else { &self.fwd[j] };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let outer = buf.len() / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for k in 0..n {
                        line[k] = buf[base + k * stride];
                    }
                    plan.process(&mut line);
                    for k in 0..n {
                        buf[base + k * stride] = line[k];
                    }
                }
            }
        }
        if inverse {
            let norm = 1.0 / buf.len() as f64;
            buf.iter_mut().for_each(|v| *v *= norm);
        }
    }
}

/// Multi-index of flat index `i` in a row-major box.
fn unflatten(mut i: usize, dims: &[usize], out: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        out[j] = i % dims[j];
        i /= dims[j];
    }
}

fn flatten(idx: &[isize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&k, &n)| acc * n + k.rem_euclid(n as isize) as usize)
}

/// Correlation geometry between a signal grid and a translation grid with
/// the same spacing.
struct Layout {
    plans: Plans,
    signal: Grid,
    translations: Grid,
}

impl Layout {
    fn new(signal: &Grid, translations: &Grid) -> Result<Self> {
        check_dim(signal.dim(), translations.dim())?;
        for j in 0..signal.dim() {
            let (a, b) = (signal.spacing[j], translations.spacing[j]);
            if (a - b).abs() > 1e-12 * a {
                return Err(Error::GridMismatch(format!("axis {}: signal spacing {a} vs translation spacing {b}", j + 1)));
            }
        }
        let dims =
            signal.counts.iter().zip(&translations.counts).map(|(a, b)| (a + b - 1).next_power_of_two()).collect();
        Ok(Self { plans: Plans::new(dims), signal: signal.clone(), translations: translations.clone() })
    }

    /// Spectrum of the kernel `g[m] = (pi(0, h) psi)(o_f - o_x + m h)` for
    /// offsets `m` in `(-N_x, N_f)` per axis, wrapped into the padded box.
    fn kernel(&self, psi: &Atom, d: &Dilation) -> Vec<Complex64> {
        let dim = self.signal.dim();
        let dims = &self.plans.dims;
        let scale = d.element.det().abs().powf(-0.5);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plans.len()];
        let span: Vec<usize> = (0..dim).map(|j| self.signal.counts[j] + self.translations.counts[j] - 1).collect();
        let total: usize = span.iter().product();
        let mut idx = vec![0usize; dim];
        let mut m = vec![0isize; dim];
        let mut z = vec![0.0; dim];
        for i in 0..total {
            unflatten(i, &span, &mut idx);
            for j in 0..dim {
                m[j] = idx[j] as isize - (self.translations.counts[j] as isize - 1);
                z[j] = self.signal.origin[j] - self.translations.origin[j] + m[j] as f64 * self.signal.spacing[j];
            }
            let v = scale * psi.eval(&apply(&d.inverse.matrix, &z));
            if v != 0.0 {
                buf[flatten(&m, dims)] = Complex64::new(v, 0.0);
            }
        }
        self.plans.run(&mut buf, false);
        buf
    }

    /// Zero-padded copy of `values` on `grid`, multiplied by trapezoid weights.
    fn padded(&self, grid: &Grid, values: &[f64]) -> Vec<Complex64> {
        let dim = grid.dim();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plans.len()];
        let mut idx = vec![0usize; dim];
        let mut m = vec![0isize; dim];
        for (i, v) in values.iter().enumerate() {
            unflatten(i, &grid.counts, &mut idx);
            for j in 0..dim {
                m[j] = idx[j] as isize;
            }
            buf[flatten(&m, &self.plans.dims)] = Complex64::new(grid.weight(i) * v, 0.0);
        }
        buf
    }

    fn extract(&self, grid: &Grid, buf: &[Complex64]) -> Vec<f64> {
        let dim = grid.dim();
        let mut idx = vec![0usize; dim];
        let mut m = vec![0isize; dim];
        (0..grid.len())
            .map(|i| {
                unflatten(i, &grid.counts, &mut idx);
                for j in 0..dim {
                    m[j] = idx[j] as isize;
                }
                buf[flatten(&m, &self.plans.dims)].re
            })
            .collect()
    }
}

/// Coefficients by trapezoidal inner products over the signal grid.
pub fn analyze(f: &SampledFunction, psi: &Atom, grid: &TransformGrid) -> Result<CoefficientField> {
    check_dim(psi.dim(), f.grid.dim())?;
    let layout = Layout::new(&f.grid, &grid.translations)?;
    let mut fhat = layout.padded(&f.grid, &f.values);
    layout.plans.run(&mut fhat, false);
    let values = grid
        .dilations
        .par_iter()
        .map(|d| {
            let g = layout.kernel(psi, d);
            let mut buf: Vec<Complex64> = fhat.iter().zip(&g).map(|(a, b)| a * b.conj()).collect();
            layout.plans.run(&mut buf, true);
            layout.extract(&grid.translations, &buf)
        })
        .collect();
    Ok(CoefficientField { translations: grid.translations.clone(), values })
}

/// Riemann sum of the inversion integral
/// `f = c^{-1} int W(x, h) pi(x, h) psi |det h|^{-1} dx dh` on `out`.
pub fn synthesize(
    coeffs: &CoefficientField,
    psi: &Atom,
    grid: &TransformGrid,
    c_psi: f64,
    out: &Grid,
) -> Result<SampledFunction> {
    if !(c_psi > 0.0) {
        return Err(Error::InvalidParameter(format!("c_psi must be positive, got {c_psi}")));
    }
    if coeffs.values.len() != grid.dilations.len() || !coeffs.translations.same_shape(&grid.translations) {
        return Err(Error::GridMismatch("coefficients do not match the transform grid".into()));
    }
    let layout = Layout::new(out, &grid.translations)?;
    const CHUNK: usize = 16;
    let pairs: Vec<(&Dilation, &Vec<f64>)> = grid.dilations.iter().zip(&coeffs.values).collect();
    let partial: Vec<Vec<Complex64>> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); layout.plans.len()];
            for (d, w) in chunk {
                let g = layout.kernel(psi, d);
                let mut buf = layout.padded(&grid.translations, w);
                layout.plans.run(&mut buf, false);
                let c = d.weight / d.element.det().abs();
                for ((a, b), gk) in acc.iter_mut().zip(&buf).zip(&g) {
                    *a += c * b * gk;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); layout.plans.len()];
    for p in &partial {
        for (a, b) in total.iter_mut().zip(p) {
            *a += b;
        }
    }
    layout.plans.run(&mut total, true);
    let values = layout.extract(out, &total).into_iter().map(|v| v / c_psi).collect();
    SampledFunction::new(out.clone(), values)
}

/// `sum_h weight(h) |psi_hat(h^T xi)|^2`, the sampled admissibility
/// integral at `xi`.
pub fn calderon_sum(psi: &dyn Spectral, grid: &TransformGrid, xi: &[f64]) -> f64 {
    let v: Vec<f64> =
        grid.dilations.iter().map(|d| d.weight * psi.spectrum(&transpose_apply(&d.element.matrix, xi)).norm_sqr()).collect();
    pairwise_sum(&v)
}

/// Admissibility constant of the truncated group: the sampled admissibility
/// integral at the orbit's base point.
pub fn c_psi(spec: &GroupSpec, psi: &dyn Spectral, grid: &TransformGrid) -> f64 {
    calderon_sum(psi, grid, &orbit_of(spec).base_point)
}

/// Discrete `L^{p,q}_v` norm: weighted `l^p` over translations inside,
/// `l^q` over dilations with cell weight `|det h|^{-1} dh` outside.
pub fn coefficient_norm(coeffs: &CoefficientField, grid: &TransformGrid, spec: &GroupSpec, w: &WeightSpec) -> Result<f64> {
    w.validate()?;
    let tr = &coeffs.translations;
    let mut x = vec![0.0; tr.dim()];
    let mut inner = Vec::with_capacity(grid.dilations.len());
    for (d, vals) in grid.dilations.iter().zip(&coeffs.values) {
        let mut terms = Vec::with_capacity(vals.len());
        for (i, c) in vals.iter().enumerate() {
            tr.point(i, &mut x);
            let v = group_weight(w, spec, &x, &d.element)?;
            terms.push(if w.p.is_infinite() { c.abs() * v } else { (c.abs() * v).powf(w.p) * tr.cell_volume() });
        }
        let n = if w.p.is_infinite() { terms.iter().fold(0.0, |a: f64, &b| a.max(b)) } else { pairwise_sum(&terms).powf(1.0 / w.p) };
        inner.push((n, d.weight / d.element.det().abs()));
    }
    Ok(if w.q.is_infinite() {
        inner.iter().fold(0.0, |a: f64, &(n, _)| a.max(n))
    } else {
        let t: Vec<f64> = inner.iter().map(|&(n, c)| n.powf(w.q) * c).collect();
        pairwise_sum(&t).powf(1.0 / w.q)
    })
}

/// Bundled test signals on a grid centered at the origin. Their spectra sit
/// near `+-(1, 0)`, away from the line `xi_1 = 0`, with Gaussian envelopes
/// of width `sigma`.
pub fn test_signals(grid: &Grid, sigma: f64) -> Vec<(&'static str, SampledFunction)> {
    use std::f64::consts::PI;
    let env = move |y: &[f64], c: [f64; 2], s: f64| (-((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)) / (2.0 * s * s)).exp();
    vec![
        ("packet", SampledFunction::from_fn(grid, |y| env(y, [0.0, 0.0], sigma) * (2.0 * PI * y[0]).cos())),
        ("sheared_packet", SampledFunction::from_fn(grid, |y| env(y, [0.0, 0.0], sigma) * (2.0 * PI * (y[0] + 0.3 * y[1])).cos())),
        (
            "two_packets",
            SampledFunction::from_fn(grid, |y| {
                let s = 0.8 * sigma;
                env(y, [-0.4 * sigma, 0.3 * sigma], s) * (2.0 * PI * 1.1 * y[0]).cos()
                    + 0.7 * env(y, [0.5 * sigma, -0.4 * sigma], s) * (2.0 * PI * (0.9 * y[0] - 0.2 * y[1])).sin()
            }),
        ),
    ]
}

/// Relative `L^2` distance between two samplings of the same grid.
pub fn relative_l2_error(a: &SampledFunction, b: &SampledFunction) -> Result<f64> {
    if !a.grid.same_shape(&b.grid) {
        return Err(Error::GridMismatch("functions live on different grids".into()));
    }
    let diff = SampledFunction { grid: a.grid.clone(), values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect() };
    Ok(diff.l2_norm() / b.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{make_atom, SplineBase};

    fn small_setup() -> (GroupSpec, Atom, Grid) {
        let g = GroupSpec::shearlet2d(0.5);
        let base = SplineBase::new(vec![5, 5], vec![-0.6, -0.6], vec![0.6, 0.6]).unwrap();
        let psi = make_atom(&g, 2, base).unwrap();
        let grid = Grid::new(vec![-1.5, -1.5], vec![0.05, 0.05], vec![61, 61]).unwrap();
        (g, psi, grid)
    }

    #[test]
    fn identity_action_is_psi() {
        let (g, psi, grid) = small_setup();
        let s = quasi_regular_apply(&[0.0, 0.0], &g.identity(), &psi, &grid).unwrap();
        assert_eq!(s, psi.sample(&grid));
    }

    #[test]
    fn quasi_regular_is_unitary() {
        let (g, psi, grid) = small_setup();
        let n0 = psi.sample(&grid).l2_norm();
        let h = g.shearlet2d_element(1.4, 0.3).unwrap();
        let s = quasi_regular_apply(&[0.2, -0.1], &h, &psi, &grid).unwrap();
        assert!((s.l2_norm() - n0).abs() < 1e-3 * n0);
    }

    #[test]
    fn representation_is_homomorphic() {
        // pi(x, h) pi(x', h') = pi(x + h x', h h')
        let (g, psi, grid) = small_setup();
        let (h1, h2) = (g.shearlet2d_element(1.2, 0.2).unwrap(), g.shearlet2d_element(0.9, -0.4).unwrap());
        let (x1, x2) = ([0.1, -0.2], [0.3, 0.05]);
        let hh = g.compose(&h1, &h2).unwrap();
        let hx = apply(&h1.matrix, &x2);
        let x = [x1[0] + hx[0], x1[1] + hx[1]];
        let lhs = quasi_regular_apply(&x, &hh, &psi, &grid).unwrap();
        // apply pi(x1, h1) to pi(x2, h2) psi pointwise
        let inv = h1.matrix.clone().try_inverse().unwrap();
        let inner = |y: &[f64]| {
            let z = [y[0] - x2[0], y[1] - x2[1]];
            h2.det().abs().powf(-0.5) * psi.eval(&apply(&h2.matrix.clone().try_inverse().unwrap(), &z))
        };
        let rhs = SampledFunction::from_fn(&grid, |y| {
            let z = apply(&inv, &[y[0] - x1[0], y[1] - x1[1]]);
            h1.det().abs().powf(-0.5) * inner(&z)
        });
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    fn small_transform(g: &GroupSpec) -> TransformGrid {
        let tr = Grid::new(vec![-1.0, -1.0], vec![0.05, 0.05], vec![41, 41]).unwrap();
        let cfg = DilationConfig { r_max: 0.5, r_points: 3, t_max: 0.5, t_points: 3, angle_points: 4 };
        TransformGrid::new(g, tr, &cfg).unwrap()
    }

    #[test]
    fn analyze_matches_direct_quadrature() {
        let (g, psi, grid) = small_setup();
        let f = SampledFunction::from_fn(&grid, |y| (-(y[0] * y[0] + 2.0 * y[1] * y[1])).exp() * (7.0 * y[0]).cos());
        let tg = small_transform(&g);
        let w = analyze(&f, &psi, &tg).unwrap();
        let scale = w.values.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut x = vec![0.0; 2];
        for (k, d) in tg.dilations.iter().enumerate().step_by(4) {
            for i in [0, 17, 840, 1200] {
                tg.translations.point(i, &mut x);
                let p = quasi_regular_apply(&x, &d.element, &psi, &grid).unwrap();
                let direct: f64 = (0..grid.len()).map(|j| grid.weight(j) * f.values[j] * p.values[j]).sum();
                assert!((w.values[k][i] - direct).abs() < 1e-8 * scale, "{k} {i}");
            }
        }
    }

    #[test]
    fn self_coefficient_is_squared_norm() {
        let (g, psi, grid) = small_setup();
        let f = psi.sample(&grid);
        let tr = Grid::new(vec![-0.5, -0.5], vec![0.05, 0.05], vec![21, 21]).unwrap();
        let tg = TransformGrid::new(&g, tr, &DilationConfig { r_max: 0.0, r_points: 1, t_max: 0.0, t_points: 1, angle_points: 1 })
            .unwrap();
        let w = analyze(&f, &psi, &tg).unwrap();
        // dilation index 1 is the identity (sign +1), translation 220 is x = 0
        let n2 = f.l2_norm().powi(2);
        assert!((w.values[1][220] - n2).abs() < 1e-3 * n2);
    }

    #[test]
    fn translation_covariance() {
        let (g, psi, grid) = small_setup();
        // compact support, so shifting does not cross the grid boundary
        let bump = |y: &[f64]| crate::atoms::bspline(3, 0, 4.0 * y[0]) * crate::atoms::bspline(3, 0, 4.0 * y[1]) * (5.0 * y[0]).sin();
        let f = SampledFunction::from_fn(&grid, bump);
        // shift by 3 grid cells along x_1
        let z = 3.0 * 0.05;
        let fz = SampledFunction::from_fn(&grid, |y| bump(&[y[0] - z, y[1]]));
        let tg = small_transform(&g);
        let (w, wz) = (analyze(&f, &psi, &tg).unwrap(), analyze(&fz, &psi, &tg).unwrap());
        for k in 0..tg.dilations.len() {
            for r in 5..30 {
                for c in 5..30 {
                    let (a, b) = (w.values[k][r * 41 + c], wz.values[k][(r + 3) * 41 + c]);
                    assert!((a - b).abs() < 1e-12, "{k} {r} {c} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let (g, psi, grid) = small_setup();
        let tg = small_transform(&g);
        let zero = CoefficientField { translations: tg.translations.clone(), values: vec![vec![0.0; 41 * 41]; tg.dilations.len()] };
        let f = synthesize(&zero, &psi, &tg, 1.0, &grid).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
        assert!(synthesize(&zero, &psi, &tg, 0.0, &grid).is_err());
        let w = WeightSpec::parse("2,2,0,power:0").unwrap();
        assert_eq!(coefficient_norm(&zero, &tg, &g, &w).unwrap(), 0.0);
    }

    #[test]
    fn norm_is_solid_and_order_free() {
        let (g, psi, grid) = small_setup();
        let f = SampledFunction::from_fn(&grid, |y| (-(y[0] * y[0] + y[1] * y[1]) * 3.0).exp() * (6.0 * y[0]).cos());
        let tg = small_transform(&g);
        let w = analyze(&f, &psi, &tg).unwrap();
        let ws = WeightSpec::parse("2,1,1,max-delta").unwrap();
        let n = coefficient_norm(&w, &tg, &g, &ws).unwrap();
        let mut bigger = w.clone();
        bigger.values[2][100] += 1.0;
        assert!(coefficient_norm(&bigger, &tg, &g, &ws).unwrap() > n);
        let mut rev_grid = tg.clone();
        rev_grid.dilations.reverse();
        let mut rev = w.clone();
        rev.values.reverse();
        let m = coefficient_norm(&rev, &rev_grid, &g, &ws).unwrap();
        assert!((m - n).abs() < 1e-12 * n);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let (g, psi, grid) = small_setup();
        let f = psi.sample(&grid);
        let tr = Grid::new(vec![0.0, 0.0], vec![0.1, 0.1], vec![4, 4]).unwrap();
        let tg = TransformGrid::new(&g, tr, &DilationConfig::default()).unwrap();
        assert!(matches!(analyze(&f, &psi, &tg), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn default_dilation_grid_size() {
        let g = GroupSpec::shearlet2d(0.5);
        let tr = Grid::new(vec![0.0, 0.0], vec![0.1, 0.1], vec![4, 4]).unwrap();
        let tg = TransformGrid::new(&g, tr, &DilationConfig::default()).unwrap();
        assert_eq!(tg.dilations.len(), 2 * 25 * 9);
        assert!(tg.dilations.iter().all(|d| d.weight > 0.0));
    }
}
