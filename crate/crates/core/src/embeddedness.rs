//! Decay exponents `e_1..e_4` of the envelope on `H`, the temperate and strong
//! indices, vanishing-moment orders, control weights, and the `Phi_ell`
//! functions.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::groups::{Family, GroupElement, GroupSpec};
use crate::linalg::op_norm;
use crate::orbit::{orbit_of, HaarChart};
use crate::quad::{QuadConfig, QuadResult};
use crate::rational::{self, int, ratio, Rational};

/// Where an exponent set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Empirical,
    User,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub provenance: Provenance,
}

impl ExponentSet {
    pub fn new(e1: f64, e2: f64, e3: f64, e4: f64, provenance: Provenance) -> Result<Self> {
        let e = Self { e1, e2, e3, e4, provenance };
        if e.as_array().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("exponents must be finite and nonnegative: {:?}", e.as_array())));
        }
        Ok(e)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }

    pub fn with(&self, i: usize, v: f64) -> Self {
        let mut a = self.as_array();
        a[i] = v;
        Self { e1: a[0], e2: a[1], e3: a[2], e4: a[3], provenance: Provenance::User }
    }
}

/// Base weight `w` on `H`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseWeight {
    /// `(1 + |h|)^k (1 + |h^{-1}|)^k`.
    PowerWeight { k: f64 },
    /// `max(1, Delta_G(h))`.
    MaxDelta,
}

/// Coefficient space `L^{p,q}_v` with `v(x, h) = (1 + |x| + |h|)^s w(h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(serialize_with = "ser_exp", deserialize_with = "de_exp")]
    pub p: f64,
    #[serde(serialize_with = "ser_exp", deserialize_with = "de_exp")]
    pub q: f64,
    pub s: f64,
    pub w: BaseWeight,
}

fn ser_exp<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_exp<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum E {
        N(f64),
        S(String),
    }
    match E::deserialize(d)? {
        E::N(v) => Ok(v),
        E::S(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
        E::S(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self { p: 2.0, q: 2.0, s: 0.0, w: BaseWeight::MaxDelta }
    }
}

impl WeightSpec {
    pub fn max_delta() -> Self {
        Self::default()
    }

    /// Parses `p,q,s,w` with `w` one of `max-delta` or `power:k`; `inf` for infinite exponents.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("weight needs p,q,s,w; got {text:?}")));
        }
        let num = |s: &str| -> Result<f64> {
            match s {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))),
            }
        };
        let w = match parts[3] {
            "max-delta" | "maxdelta" | "max_delta" => BaseWeight::MaxDelta,
            other => match other.strip_prefix("power:") {
                Some(k) => BaseWeight::PowerWeight { k: num(k)? },
                None => return Err(Error::Parse(format!("unknown weight family {other:?}"))),
            },
        };
        let spec = Self { p: num(parts[0])?, q: num(parts[1])?, s: num(parts[2])?, w };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0) {
            return Err(Error::InvalidParameter("p and q must lie in [1, inf]".into()));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParameter("s must be finite and nonnegative".into()));
        }
        if let BaseWeight::PowerWeight { k } = self.w {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter("power weight exponent must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Quantities of a group element entering the weights.
#[derive(Clone, Copy, Debug)]
struct ElementData {
    norm: f64,
    norm_inv: f64,
    det: f64,
    delta_h: f64,
}

fn element_data(spec: &GroupSpec, h: &GroupElement) -> Result<ElementData> {
    let inv = spec.inverse(h)?;
    Ok(ElementData { norm: op_norm(&h.matrix), norm_inv: op_norm(&inv.matrix), det: h.det().abs(), delta_h: spec.delta_h(h)? })
}

impl ElementData {
    fn inverse(self) -> Self {
        Self { norm: self.norm_inv, norm_inv: self.norm, det: 1.0 / self.det, delta_h: 1.0 / self.delta_h }
    }

    fn delta_g(&self) -> f64 {
        self.delta_h / self.det
    }

    fn base(&self, w: BaseWeight) -> f64 {
        match w {
            BaseWeight::PowerWeight { k } => ((1.0 + self.norm) * (1.0 + self.norm_inv)).powf(k),
            BaseWeight::MaxDelta => self.delta_g().max(1.0),
        }
    }

    fn control(&self, w: &WeightSpec) -> f64 {
        let (ip, iq) = (recip(w.p), recip(w.q));
        let dg = self.delta_g();
        (self.base(w.w) + self.inverse().base(w.w))
            * dg.powf(-iq).max(dg.powf(iq - 1.0))
            * (self.det.powf(iq - ip) + self.det.powf(ip - iq))
            * (1.0 + self.norm + self.norm_inv).powf(w.s)
    }

    /// Weight entering the decay estimates. For `MaxDelta` this is
    /// `max(1, Delta_G)` itself, the control weight of unweighted `L^p`.
    fn estimate_weight(&self, w: &WeightSpec) -> f64 {
        match w.w {
            BaseWeight::MaxDelta => self.base(w.w) * (1.0 + self.norm + self.norm_inv).powf(w.s),
            BaseWeight::PowerWeight { .. } => self.control(w),
        }
    }
}

/// The control weight `w_0(h)`.
pub fn control_weight(w: &WeightSpec, spec: &GroupSpec, h: &GroupElement) -> Result<f64> {
    Ok(element_data(spec, h)?.control(w))
}

/// The weight `v(x, h) = (1 + |x| + |h|)^s w(h)` on the semidirect product.
pub fn group_weight(w: &WeightSpec, spec: &GroupSpec, x: &[f64], h: &GroupElement) -> Result<f64> {
    let e = element_data(spec, h)?;
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((1.0 + nx + e.norm).powf(w.s) * e.base(w.w))
}

/// Closed-form exponents where known.
pub fn analytic_exponents(spec: &GroupSpec, w: &WeightSpec) -> Result<ExponentSet> {
    let d = spec.dim() as f64;
    let max_delta = matches!(w.w, BaseWeight::MaxDelta);
    let (e1, e2, e3, e4) = match spec.family() {
        Family::Similitude | Family::Diagonal => (d, 1.0, d, 0.0),
        Family::Shearlet2D { c, .. } => (2.0, 1.0 + c.abs(), (1.0 + c).abs(), (1.0 - c).abs()),
        Family::AbelianFromAlgebra(a) => {
            let n = a.algebra().nilradical().nilpotency_class as f64;
            (d, 2.0 * n - 1.0, d, 0.0)
        }
        Family::GeneralizedShearlet(data) => {
            let n = data.nilpotency_class() as f64;
            let tr = data.trace_y();
            (d, n - 1.0 + 2.0 * data.y_norm(), tr.abs(), (d - tr).abs())
        }
        Family::DirectProduct(fs) => {
            let parts = fs.iter().map(|f| analytic_exponents(f, w)).collect::<Result<Vec<_>>>()?;
            return Ok(combine_exponents(&parts));
        }
    };
    if !max_delta {
        return Err(Error::Unsupported("analytic e1 is only tabulated for the max(1, Delta_G) weight; use the empirical search".into()));
    }
    ExponentSet::new(e1, e2, e3, e4, Provenance::Analytic)
}

/// `(e_3, e_4) = (d e_2, 2 e_2 dim H)`.
pub fn fallback_exponents(e2: f64, d: usize, dim_h: usize) -> (f64, f64) {
    (d as f64 * e2, 2.0 * e2 * dim_h as f64)
}

/// Exponents of a direct product: `e_1, e_3, e_4` add, `e_2` is the maximum.
pub fn combine_exponents(es: &[ExponentSet]) -> ExponentSet {
    let provenance = if es.iter().all(|e| e.provenance == Provenance::Analytic) { Provenance::Analytic } else { Provenance::User };
    ExponentSet {
        e1: es.iter().map(|e| e.e1).sum(),
        e2: es.iter().map(|e| e.e2).fold(0.0, f64::max),
        e3: es.iter().map(|e| e.e3).sum(),
        e4: es.iter().map(|e| e.e4).sum(),
        provenance,
    }
}

fn exact(x: f64) -> Rational {
    rational::rationalize(x)
}

fn index_with(e: &ExponentSet, coeff: Rational, d: usize) -> i64 {
    let arg = exact(e.e1) + exact(e.e2) * coeff + ratio(3, 2) * exact(e.e3) + exact(e.e4);
    let fl: BigInt = rational::floor(&arg);
    fl.to_i64().expect("index fits in i64") + d as i64 + 1
}

/// `floor(e1 + e2 (s + d + 1) + 3/2 e3 + e4) + d + 1`, in exact arithmetic.
pub fn index_temperate(e: &ExponentSet, s: f64, d: usize) -> i64 {
    index_with(e, exact(s) + int(d as i64 + 1), d)
}

/// `floor(e1 + e2 (2s + 2d + 2) + 3/2 e3 + e4) + d + 1`, in exact arithmetic.
pub fn index_strong(e: &ExponentSet, s: f64, d: usize) -> i64 {
    index_with(e, int(2) * exact(s) + int(2 * d as i64 + 2), d)
}

/// `ell + d + 1`.
pub fn required_moments(ell: i64, d: usize) -> i64 {
    ell + d as i64 + 1
}

/// `d(1 + 2n) + floor(4|Y|(d+1) + 3/2 |tr Y| + |d - tr Y|)` for generalized shearlet groups.
pub fn shearlet_atom_order(spec: &GroupSpec) -> Result<i64> {
    let data = spec.shear_data().ok_or_else(|| Error::Unsupported("atom order closed form needs a shearlet group".into()))?;
    let d = spec.dim() as i64;
    let n = data.nilpotency_class() as i64;
    let tr = exact(data.trace_y());
    let y = exact(data.y_norm());
    let dd = int(d);
    let abs = |r: Rational| if r < Rational::zero() { -r } else { r };
    let arg = int(4) * y * int(d + 1) + ratio(3, 2) * abs(tr.clone()) + abs(dd - tr);
    Ok(d * (1 + 2 * n) + rational::floor(&arg).to_i64().expect("small"))
}

/// Exponents, indices and moment orders for one group and weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub exponents: ExponentSet,
    pub s: f64,
    pub dim: usize,
    pub ell_temperate: i64,
    pub ell_strong: i64,
    pub moments_analyzing: i64,
    pub moments_atom: i64,
    pub notes: Vec<String>,
}

pub fn embedding_report(spec: &GroupSpec, w: &WeightSpec, exponents: ExponentSet) -> EmbeddingReport {
    let d = spec.dim();
    let ell_temperate = index_temperate(&exponents, w.s, d);
    let ell_strong = index_strong(&exponents, w.s, d);
    let mut notes = Vec::new();
    let di = d as i64;
    if matches!(spec.family(), Family::Similitude | Family::Diagonal) && w.s == 0.0 {
        let (l1, l2) = (di / 2 + 4 * di + 1, di / 2 + 5 * di + 2);
        if l1 != ell_temperate || l2 != ell_strong {
            notes.push(format!(
                "the tabulated closed forms floor(d/2)+4d+1 = {l1} and floor(d/2)+5d+2 = {l2} differ from the index formulas, which give {ell_temperate} and {ell_strong}; the index formulas are used"
            ));
        }
    }
    if let (Family::GeneralizedShearlet(_), Ok(r)) = (spec.family(), shearlet_atom_order(spec)) {
        let m = required_moments(ell_strong, d);
        if r != m {
            notes.push(format!("closed-form shearlet atom order is {r}, the strong index gives {m} (difference {})", m - r));
        }
    }
    EmbeddingReport {
        moments_analyzing: required_moments(ell_temperate, d),
        moments_atom: required_moments(ell_strong, d),
        exponents,
        s: w.s,
        dim: d,
        ell_temperate,
        ell_strong,
        notes,
    }
}

/// Verdict on a supremum trend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Settings for the sampled boundedness check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConfig {
    /// Total samples over all stages.
    pub budget: usize,
    pub stages: usize,
    pub seed: u64,
    /// Scale box of the first stage; doubles per stage.
    pub r0: f64,
    /// Shear box of the first stage; doubles per stage.
    pub t0: f64,
    pub slack: f64,
    /// Bisection resolution for least exponents.
    pub resolution: f64,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        Self { budget: 100_000, stages: 5, seed: 0, r0: 2.0, t0: 1.0, slack: 0.05, resolution: 0.1 }
    }
}

const CHUNK: usize = 512;

/// Log-quantities of one sample: `ln A_H(h)` and the four `ln max(Q(h), Q(h^{-1}))`.
#[derive(Clone, Copy, Debug)]
struct Sample {
    ln_a: f64,
    ln_q: [f64; 4],
}

pub const INEQUALITY_NAMES: [&str; 4] = ["weight", "norm", "det", "modular"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub exponent: f64,
    /// Running supremum after each stage.
    pub stage_sup: Vec<f64>,
    pub verdict: Verdict,
    /// Least exponent (to the resolution) still judged bounded, if any up to the cap.
    pub least_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub inequalities: Vec<InequalityReport>,
    pub verdict: Verdict,
    pub samples: usize,
    pub seed: u64,
}

fn draw_stage(spec: &GroupSpec, w: &WeightSpec, cfg: &EmpiricalConfig, stage: usize, n: usize) -> Vec<Sample> {
    let scale = 2f64.powi(stage as i32);
    let (rb, tb) = (cfg.r0 * scale, cfg.t0 * scale);
    let orbit = orbit_of(spec);
    let base = spec.base_point();
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((stage as u64) << 32) | c as u64);
            let count = CHUNK.min(n - c * CHUNK);
            let orbit = &orbit;
            let base = &base;
            (0..count)
                .filter_map(move |_| {
                    let h = spec.sample_element(&mut rng, rb, tb);
                    let ed = element_data(spec, &h).ok()?;
                    let xi = spec.dual_action(&h, base).ok()?;
                    let a = orbit.a_value(&xi);
                    let inv = ed.inverse();
                    let q = [
                        ed.estimate_weight(w).max(inv.estimate_weight(w)),
                        ed.norm.max(ed.norm_inv),
                        ed.det.max(inv.det),
                        ed.delta_h.max(inv.delta_h),
                    ];
                    (a > 0.0 && q.iter().all(|v| v.is_finite() && *v > 0.0)).then(|| Sample { ln_a: a.ln(), ln_q: q.map(f64::ln) })
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn running_sups(stages: &[Vec<Sample>], i: usize, e: f64) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    stages
        .iter()
        .map(|st| {
            for s in st {
                m = m.max(s.ln_q[i] + e * s.ln_a);
            }
            m
        })
        .collect()
}

/// Judges a sequence of log-suprema over the last two stage transitions.
pub fn trend_verdict(ln_sups: &[f64], slack: f64) -> Verdict {
    if ln_sups.len() < 3 {
        return Verdict::Inconclusive;
    }
    let tol = (1.0 + slack).ln();
    let steps: Vec<f64> = ln_sups.windows(2).rev().take(2).map(|w| w[1] - w[0]).collect();
    if steps.iter().all(|s| *s <= tol) {
        Verdict::Bounded
    } else if steps.iter().all(|s| *s > tol) {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    }
}

/// Samples `H` over doubling boxes and judges the four decay estimates
/// `Q(h^{+-1}) A_H(h)^{e_i} <= C`.
pub fn empirical_exponent_check(spec: &GroupSpec, e: &ExponentSet, w: &WeightSpec, cfg: &EmpiricalConfig) -> Result<EmpiricalReport> {
    if cfg.stages < 3 || cfg.budget < cfg.stages {
        return Err(Error::InvalidParameter("need at least 3 stages and one sample per stage".into()));
    }
    let per = cfg.budget / cfg.stages;
    let stages: Vec<Vec<Sample>> = (0..cfg.stages).map(|k| draw_stage(spec, w, cfg, k, per)).collect();
    let samples = stages.iter().map(Vec::len).sum();
    let exps = e.as_array();
    let inequalities: Vec<InequalityReport> = (0..4)
        .map(|i| {
            let sups = running_sups(&stages, i, exps[i]);
            let verdict = trend_verdict(&sups, cfg.slack);
            InequalityReport {
                name: INEQUALITY_NAMES[i].into(),
                exponent: exps[i],
                stage_sup: sups.iter().map(|v| v.exp()).collect(),
                verdict,
                least_exponent: least_exponent(&stages, i, exps[i], verdict, cfg),
            }
        })
        .collect();
    let verdict = if inequalities.iter().all(|r| r.verdict == Verdict::Bounded) {
        Verdict::Bounded
    } else if inequalities.iter().any(|r| r.verdict == Verdict::Unbounded) {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    };
    Ok(EmpiricalReport { inequalities, verdict, samples, seed: cfg.seed })
}

fn least_exponent(stages: &[Vec<Sample>], i: usize, given: f64, verdict: Verdict, cfg: &EmpiricalConfig) -> Option<f64> {
    let bounded = |e: f64| trend_verdict(&running_sups(stages, i, e), cfg.slack) == Verdict::Bounded;
    let mut hi = given;
    if verdict != Verdict::Bounded {
        hi = given.max(1.0);
        while !bounded(hi) {
            hi *= 2.0;
            if hi > 256.0 {
                return None;
            }
        }
    }
    if bounded(0.0) {
        return Some(0.0);
    }
    let mut lo = 0.0;
    while hi - lo > cfg.resolution {
        let mid = 0.5 * (lo + hi);
        if bounded(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((hi / cfg.resolution).ceil() * cfg.resolution)
}

/// Exponents from the least bounded values found by sampling.
pub fn empirical_exponents(spec: &GroupSpec, w: &WeightSpec, cfg: &EmpiricalConfig) -> Result<(ExponentSet, EmpiricalReport)> {
    let start = ExponentSet::new(0.0, 0.0, 0.0, 0.0, Provenance::Empirical)?;
    let rep = empirical_exponent_check(spec, &start, w, cfg)?;
    let mut v = [0.0; 4];
    for (i, r) in rep.inequalities.iter().enumerate() {
        v[i] = r.least_exponent.ok_or_else(|| Error::NonConvergence(format!("no bounded exponent found for the {} estimate", r.name)))?;
    }
    Ok((ExponentSet::new(v[0], v[1], v[2], v[3], Provenance::Empirical)?, rep))
}

/// `Phi_ell(h) = int_O A(xi)^ell A(h^T xi)^ell d xi`.
pub fn phi_ell_direct(spec: &GroupSpec, h: &GroupElement, ell: u32, cfg: &QuadConfig) -> QuadResult {
    let o = orbit_of(spec);
    let ht = h.matrix.transpose();
    let d = spec.dim();
    o.integral(
        |xi| {
            let mut buf = [0.0; 16];
            let y = &mut buf[..d];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = (0..d).map(|j| ht[(i, j)] * xi[j]).sum();
            }
            (o.a_value(xi) * o.a_value(y)).powi(ell as i32)
        },
        cfg,
    )
}

/// `Phi_ell(h) = int_H A_H(g^{-1})^ell |det g^{-1}| A_H(g^{-1} h)^ell dg`.
pub fn phi_ell_convolution(spec: &GroupSpec, h: &GroupElement, ell: u32, cfg: &QuadConfig) -> Result<QuadResult> {
    let chart = HaarChart::new(spec)?;
    let o = orbit_of(spec);
    let xi0 = spec.base_point();
    let d = spec.dim();
    let ht = h.matrix.transpose();
    Ok(haar_integral(&chart, cfg, |p| {
        let g = match chart.element(p) {
            Ok(g) => g,
            Err(_) => return 0.0,
        };
        let Some(gi) = g.matrix.clone().try_inverse() else { return 0.0 };
        // (g^{-1})^T xi_0
        let u: Vec<f64> = (0..d).map(|i| (0..d).map(|j| gi[(j, i)] * xi0[j]).sum()).collect();
        let v: Vec<f64> = (0..d).map(|i| (0..d).map(|j| ht[(i, j)] * u[j]).sum()).collect();
        (o.a_value(&u) * o.a_value(&v)).powi(ell as i32) * gi.determinant().abs()
    }))
}

fn haar_integral<F>(chart: &HaarChart, cfg: &QuadConfig, f: F) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    chart.integral(|p, _, _| f(p), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StructureConstants;
    use crate::groups::enumerate_catalog;
    use proptest::prelude::*;

    fn e(a: f64, b: f64, c: f64, d: f64) -> ExponentSet {
        ExponentSet::new(a, b, c, d, Provenance::User).unwrap()
    }

    #[test]
    fn shearlet2d_golden_indices() {
        let g = GroupSpec::shearlet2d(0.5);
        let ex = analytic_exponents(&g, &WeightSpec::max_delta()).unwrap();
        assert_eq!(ex.as_array(), [2.0, 1.5, 1.5, 0.5]);
        let rep = embedding_report(&g, &WeightSpec::max_delta(), ex);
        assert_eq!((rep.ell_temperate, rep.ell_strong), (12, 16));
        assert_eq!((rep.moments_analyzing, rep.moments_atom), (15, 19));
        // the case formula floor(3|c| + 3/2|1+c| + |1-c|) + 8
        let c: f64 = 0.5;
        assert_eq!(((3.0 * c.abs() + 1.5 * (1.0 + c).abs() + (1.0 - c).abs()).floor() as i64) + 8, 12);
    }

    #[test]
    fn similitude_index_and_note() {
        let g = GroupSpec::similitude(2);
        let ex = analytic_exponents(&g, &WeightSpec::max_delta()).unwrap();
        assert_eq!(ex.as_array(), [2.0, 1.0, 2.0, 0.0]);
        let rep = embedding_report(&g, &WeightSpec::max_delta(), ex);
        // floor(2 + 3 + 3 + 0) + 3
        assert_eq!(rep.ell_temperate, 11);
        assert_eq!(rep.notes.len(), 1);
    }

    #[test]
    fn trivial_indices() {
        let z = e(0.0, 0.0, 0.0, 0.0);
        assert_eq!(index_temperate(&z, 0.0, 1), 2);
        assert_eq!(index_strong(&z, 0.0, 1), 2);
        assert_eq!(required_moments(0, 1), 2);
    }

    #[test]
    fn floors_are_exact() {
        // 0.1 + 0.2 is not 0.3 in binary; the rational path must still floor 3 * 0.1 + ... correctly
        let x = e(0.1, 0.0, 0.2, 0.0);
        // 0.1 + 0.3 = 0.4 -> floor 0
        assert_eq!(index_temperate(&x, 0.0, 1), 2);
        let y = e(0.7, 0.1, 0.0, 0.0);
        // d = 2: 0.7 + 0.1 * 3 = 1 exactly
        assert_eq!(index_temperate(&y, 0.0, 2), 4);
    }

    #[test]
    fn fallback_and_combine() {
        assert_eq!(fallback_exponents(1.0, 2, 2), (2.0, 4.0));
        assert_eq!(fallback_exponents(0.0, 5, 3), (0.0, 0.0));
        assert_eq!(fallback_exponents(1.5, 2, 2), (3.0, 6.0));
        let one = e(1.0, 1.0, 1.0, 0.0);
        assert_eq!(combine_exponents(&[one.clone(), one.clone()]).as_array(), [2.0, 1.0, 2.0, 0.0]);
        assert_eq!(combine_exponents(std::slice::from_ref(&one)).as_array(), one.as_array());
        assert_eq!(combine_exponents(&vec![one; 4]).as_array(), [4.0, 1.0, 4.0, 0.0]);
        let g = GroupSpec::direct_product(vec![GroupSpec::diagonal(1), GroupSpec::diagonal(1)]).unwrap();
        assert_eq!(analytic_exponents(&g, &WeightSpec::max_delta()).unwrap().as_array(), [2.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn atom_order_closed_forms() {
        for d in 2..=5usize {
            let di = d as i64;
            let std = GroupSpec::standard_shearlet(d, None).unwrap();
            assert_eq!(shearlet_atom_order(&std).unwrap(), 10 * di + 4 + (di + 1) / 4);
            let toe = GroupSpec::toeplitz_shearlet(d, None).unwrap();
            assert_eq!(shearlet_atom_order(&toe).unwrap(), 2 * di * di + 6 * di + 4 + di / 2);
        }
        assert_eq!(shearlet_atom_order(&GroupSpec::standard_shearlet(2, None).unwrap()).unwrap(), 24);
        assert_eq!(shearlet_atom_order(&GroupSpec::toeplitz_shearlet(3, None).unwrap()).unwrap(), 41);
    }

    #[test]
    fn atom_order_differs_from_strong_index_by_2n() {
        for d in 2..=4 {
            for entry in enumerate_catalog(d).unwrap() {
                let g = &entry.spec;
                let n = g.nilpotency_class().unwrap() as i64;
                let ex = analytic_exponents(g, &WeightSpec::max_delta()).unwrap();
                let m = required_moments(index_strong(&ex, 0.0, d), d);
                assert_eq!(m - shearlet_atom_order(g).unwrap(), 2 * n, "{}", entry.name);
            }
        }
    }

    #[test]
    fn control_weight_at_identity() {
        let g = GroupSpec::shearlet2d(0.5);
        let id = g.identity();
        assert_eq!(control_weight(&WeightSpec::max_delta(), &g, &id).unwrap(), 4.0);
        let w = WeightSpec { p: 1.0, q: f64::INFINITY, s: 0.0, w: BaseWeight::PowerWeight { k: 0.0 } };
        assert_eq!(control_weight(&w, &g, &id).unwrap(), 4.0);
    }

    #[test]
    fn weight_parsing() {
        let w = WeightSpec::parse("1,inf,0.5,power:2").unwrap();
        assert_eq!(w.q, f64::INFINITY);
        assert_eq!(w.w, BaseWeight::PowerWeight { k: 2.0 });
        assert!(WeightSpec::parse("0.5,1,0,max-delta").is_err());
        assert!(WeightSpec::parse("1,1,0").is_err());
        let js = serde_json::to_string(&w).unwrap();
        assert!(js.contains("\"inf\""));
        let back: WeightSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn trend_verdicts() {
        assert_eq!(trend_verdict(&[1.0, 2.0, 2.0, 2.01], 0.05), Verdict::Bounded);
        assert_eq!(trend_verdict(&[1.0, 2.0, 3.0, 4.0], 0.05), Verdict::Unbounded);
        assert_eq!(trend_verdict(&[1.0, 2.0, 3.0, 3.0], 0.05), Verdict::Inconclusive);
        assert_eq!(trend_verdict(&[1.0, 2.0], 0.05), Verdict::Inconclusive);
    }

    #[test]
    fn empirical_shearlet_small_budget() {
        let g = GroupSpec::shearlet2d(0.5);
        let w = WeightSpec::max_delta();
        let ex = analytic_exponents(&g, &w).unwrap();
        let cfg = EmpiricalConfig { budget: 20_000, ..Default::default() };
        let rep = empirical_exponent_check(&g, &ex, &w, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded, "{rep:?}");
        let reduced = ex.with(1, ex.e2 - 1.0);
        let rep = empirical_exponent_check(&g, &reduced, &w, &cfg).unwrap();
        assert_eq!(rep.inequalities[1].verdict, Verdict::Unbounded);
        // reproducible
        let again = empirical_exponent_check(&g, &reduced, &w, &cfg).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn abelian_exponents() {
        let g = GroupSpec::abelian(&StructureConstants::truncated_polynomial(3)).unwrap();
        let ex = analytic_exponents(&g, &WeightSpec::max_delta()).unwrap();
        assert_eq!(ex.as_array(), [3.0, 5.0, 3.0, 0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn indices_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0, c in 0.0f64..5.0, dd in 0.0f64..5.0,
                            i in 0usize..4, bump in 0.0f64..2.0, s in 0.0f64..3.0, d in 1usize..5) {
            let x = e(a, b, c, dd);
            let y = x.with(i, x.as_array()[i] + bump);
            prop_assert!(index_temperate(&y, s, d) >= index_temperate(&x, s, d));
            prop_assert!(index_strong(&y, s, d) >= index_strong(&x, s, d));
            prop_assert!(index_temperate(&x, s + bump, d) >= index_temperate(&x, s, d));
            prop_assert!(index_strong(&x, s, d) >= index_temperate(&x, s, d));
        }

        #[test]
        fn control_weight_submultiplicative(seed in any::<u64>(), which in 0usize..3, p in 1.0f64..4.0, q in 1.0f64..4.0, s in 0.0f64..2.0, k in 0.0f64..2.0) {
            let g = [GroupSpec::shearlet2d(0.5), GroupSpec::toeplitz_shearlet(3, None).unwrap(), GroupSpec::similitude(2)][which].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = g.sample_element(&mut rng, 2.0, 2.0);
            let b = g.sample_element(&mut rng, 2.0, 2.0);
            let ab = g.compose(&a, &b).unwrap();
            for w in [BaseWeight::MaxDelta, BaseWeight::PowerWeight { k }] {
                let ws = WeightSpec { p, q, s, w };
                let lhs = control_weight(&ws, &g, &ab).unwrap();
                let rhs = control_weight(&ws, &g, &a).unwrap() * control_weight(&ws, &g, &b).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-9));
            }
        }
    }
}
