//! Tensor-product composite Gauss-Legendre quadrature with dyadic refinement.
//!
//! Each axis maps a parameter interval onto its domain; refinement level `k`
//! multiplies the panel density by `2^{k/2}` and widens growing axes by
//! `grow * k`. Levels are compared until the relative change drops below
//! the tolerance.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One coordinate axis of a quadrature chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    /// `x = scale * sinh(v)` for `|v| <= w0 + grow * k`; covers the real line.
    Real { scale: f64, w0: f64, grow: f64 },
    /// `x = v` on `[lo - grow*k, hi + grow*k]`.
    Line { lo: f64, hi: f64, grow: f64 },
    /// `x = e^u` on `[lo - grow*k, hi + grow*k]`; integrates `dx` over `x > 0`.
    Log { lo: f64, hi: f64, grow: f64 },
    /// `x = +-e^u`; integrates `dx` over both half-lines.
    SignedLog { lo: f64, hi: f64, grow: f64 },
    /// Counting measure on the listed values.
    Discrete(Vec<f64>),
}

impl Axis {
    pub fn real() -> Self {
        Axis::Real { scale: 1.0, w0: 4.0, grow: 0.5 }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Axis::Line { lo, hi, grow: 0.0 }
    }

    pub fn signed_log() -> Self {
        Axis::SignedLog { lo: -14.0, hi: 4.0, grow: 1.0 }
    }

    pub fn signs() -> Self {
        Axis::Discrete(vec![-1.0, 1.0])
    }

    /// Nodes `(x, weight)` at refinement level `k`.
    pub fn nodes(&self, k: usize, cfg: &QuadConfig) -> Vec<(f64, f64)> {
        let grow = |g: f64| g * k as f64;
        let per_unit = cfg.density * 2f64.powf(k as f64 / 2.0);
        match self {
            Axis::Real { scale, w0, grow: g } => {
                let w = w0 + grow(*g);
                composite(-w, w, per_unit, cfg.order, &[0.0])
                    .into_iter()
                    .map(|(v, wt)| (scale * v.sinh(), wt * scale * v.cosh()))
                    .collect()
            }
            Axis::Line { lo, hi, grow: g } => composite(lo - grow(*g), hi + grow(*g), per_unit, cfg.order, &[]),
            Axis::Log { lo, hi, grow: g } => composite(lo - grow(*g), hi + grow(*g), per_unit, cfg.order, &[])
                .into_iter()
                .map(|(u, wt)| (u.exp(), wt * u.exp()))
                .collect(),
            Axis::SignedLog { lo, hi, grow: g } => {
                let half: Vec<(f64, f64)> = composite(lo - grow(*g), hi + grow(*g), per_unit, cfg.order, &[])
                    .into_iter()
                    .map(|(u, wt)| (u.exp(), wt * u.exp()))
                    .collect();
                half.iter().rev().map(|&(x, w)| (-x, w)).chain(half.iter().copied()).collect()
            }
            Axis::Discrete(v) => v.iter().map(|&x| (x, 1.0)).collect(),
        }
    }
}

/// Gauss-Legendre rule on `[-1, 1]`, cached per order.
fn rule(order: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        (1..=32)
            .map(|n| {
                let gl = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
                let mut v: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v
            })
            .collect()
    });
    &all[order.clamp(1, 32) - 1]
}

/// Composite rule on `[a, b]` with about `per_unit` panels per unit length,
/// splitting at each breakpoint inside the interval.
pub fn composite(a: f64, b: f64, per_unit: f64, order: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    if b <= a {
        return vec![];
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    let r = rule(order);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let n = ((hi - lo) * per_unit).ceil().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        for p in 0..n {
            let c = lo + (p as f64 + 0.5) * h;
            for &(x, wt) in r {
                out.push((c + 0.5 * h * x, 0.5 * h * wt));
            }
        }
    }
    out
}

/// Refinement controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Panels per unit parameter length at level 0.
    pub density: f64,
    pub rel_tol: f64,
    pub max_levels: usize,
    /// Refuse levels whose tensor grid exceeds this many points.
    pub max_points: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { order: 8, density: 1.0, rel_tol: 1e-4, max_levels: 12, max_points: 40_000_000 }
    }
}

/// Outcome of a refined integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Last level evaluated.
    pub levels: usize,
    pub converged: bool,
    pub rel_change: f64,
    pub evaluations: usize,
}

/// Sum in a fixed binary tree, so the result does not depend on scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Single tensor-product sum over precomputed axis nodes.
pub fn tensor_sum<F>(nodes: &[Vec<(f64, f64)>], f: &F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = nodes.len();
    if d == 0 {
        return f(&[]);
    }
    let partial: Vec<f64> = nodes[0]
        .par_iter()
        .map(|&(x0, w0)| {
            let rest = &nodes[1..];
            if rest.iter().any(|n| n.is_empty()) {
                return 0.0;
            }
            let mut x = vec![0.0; d];
            x[0] = x0;
            let mut idx = vec![0usize; d - 1];
            let mut acc = Vec::with_capacity(64);
            let mut block = 0.0;
            let mut count = 0usize;
            loop {
                let mut w = w0;
                for (j, n) in rest.iter().enumerate() {
                    let (xj, wj) = n[idx[j]];
                    x[j + 1] = xj;
                    w *= wj;
                }
                let v = f(&x);
                if v != 0.0 {
                    block += w * v;
                }
                count += 1;
                if count.is_multiple_of(256) {
                    acc.push(block);
                    block = 0.0;
                }
                // odometer over the remaining axes
                let mut j = d - 1;
                loop {
                    if j == 0 {
                        acc.push(block);
                        return pairwise_sum(&acc);
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < rest[j].len() {
                        break;
                    }
                    idx[j] = 0;
                }
            }
        })
        .collect();
    pairwise_sum(&partial)
}

/// Integrates `f` over the product of `axes`, refining until two successive
/// levels agree to `cfg.rel_tol`.
pub fn integrate<F>(axes: &[Axis], f: F, cfg: &QuadConfig) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut prev: Option<f64> = None;
    let mut evaluations = 0;
    let mut last = QuadResult { value: 0.0, levels: 0, converged: false, rel_change: f64::INFINITY, evaluations: 0 };
    for k in 0..=cfg.max_levels {
        let nodes: Vec<Vec<(f64, f64)>> = axes.iter().map(|a| a.nodes(k, cfg)).collect();
        let points = nodes.iter().fold(1usize, |p, n| p.saturating_mul(n.len()));
        if points > cfg.max_points && prev.is_some() {
            break;
        }
        let value = tensor_sum(&nodes, &f);
        evaluations += points;
        let rel_change = match prev {
            Some(p) => (value - p).abs() / value.abs().max(p.abs()).max(f64::MIN_POSITIVE),
            None => f64::INFINITY,
        };
        last = QuadResult { value, levels: k, converged: rel_change < cfg.rel_tol, rel_change, evaluations };
        if value == 0.0 && prev == Some(0.0) {
            last.converged = true;
            last.rel_change = 0.0;
        }
        if last.converged {
            break;
        }
        prev = Some(value);
    }
    last
}

/// Fixed composite rule over a box: `panels` panels of `order` points per axis.
pub fn box_nodes(lo: &[f64], hi: &[f64], panels: usize, order: usize) -> Vec<Vec<(f64, f64)>> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| composite(a, b, panels as f64 / (b - a), order, &[]))
        .collect()
}
