use orbitlet::atoms::{
    admissibility_check, make_atom, orbit_differential_operator, verify_vanishing_moments, Atom, Grid, SampledFunction,
    Spectral, SplineBase,
};
use orbitlet::embeddedness::{
    analytic_exponents, embedding_report, empirical_exponent_check, empirical_exponents, phi_ell_convolution,
    phi_ell_direct, shearlet_atom_order, EmpiricalConfig, ExponentSet, Provenance, WeightSpec,
};
use orbitlet::groups::{enumerate_catalog, Family, GroupSpec};
use orbitlet::orbit::{envelope_robustness, haar_transfer_check, orbit_of};
use orbitlet::quad::QuadConfig;
use orbitlet::transform::{
    analyze, c_psi, coefficient_norm, relative_l2_error, synthesize, test_signals, CoefficientField, DilationConfig,
    TransformGrid,
};
use rand::SeedableRng;
use serde_json::{json, Value};

use crate::files::{read_atom, read_group, read_sampled, write_json, write_sampled};
use crate::{
    AdmissibilityArgs, AtomBuildArgs, AtomCommand, AtomVerifyArgs, Command, CwtArgs, DilationArgs, EnvelopeArgs,
    ExponentArgs, ExponentMode, Failure, IcwtArgs, PhiArgs, PsiArgs, QuadArgs, SCHEMA,
};

type Out = Result<Value, Failure>;

pub fn run(cmd: &Command) -> Out {
    let (name, body) = match cmd {
        Command::Describe(g) => ("describe", describe(&read_group(&g.group)?)),
        Command::Validate(g) => ("validate", validate(&g.group)),
        Command::Classify { dim } => ("classify", classify(*dim)),
        Command::Exponents(a) => ("exponents", exponents(a, false)),
        Command::Moments(a) => ("moments", exponents(a, true)),
        Command::Envelope(a) => ("envelope", envelope(a)),
        Command::Atom(AtomCommand::Build(a)) => ("atom build", atom_build(a)),
        Command::Atom(AtomCommand::Verify(a)) => ("atom verify", atom_verify(a)),
        Command::Admissibility(a) => ("admissibility", admissibility(a)),
        Command::Cwt(a) => ("cwt", cwt(a)),
        Command::Icwt(a) => ("icwt", icwt(a)),
        Command::HaarCheck(a) => ("haar-check", haar_check(a)),
        Command::PhiCheck(a) => ("phi-check", phi_check(a)),
    };
    let mut v = json!({ "schema": SCHEMA, "command": name });
    if let Value::Object(m) = body? {
        v.as_object_mut().unwrap().extend(m);
    }
    Ok(v)
}

fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Chart, determinant and modular functions in closed form.
fn modular_forms(spec: &GroupSpec) -> Value {
    let d = spec.dim();
    match spec.family() {
        Family::Diagonal => json!({
            "element": "diag(h_1, ..., h_d)",
            "det": "h_1 ... h_d",
            "delta_h": "1",
            "delta_g": "1 / |h_1 ... h_d|",
        }),
        Family::Similitude => json!({
            "element": "s R, s > 0, R in O(d)",
            "det": format!("+-s^{d}"),
            "delta_h": "1",
            "delta_g": format!("s^-{d}"),
        }),
        Family::Shearlet2D { .. } | Family::GeneralizedShearlet(_) => {
            let data = spec.shear_data().unwrap();
            let tr = data.trace_y();
            json!({
                "element": "eps (I + X(t)) exp(r Y)",
                "y": data.y(),
                "det": format!("eps^{d} exp({} r)", num(tr)),
                "delta_h": format!("exp({} r)", num(tr - d as f64)),
                "delta_g": format!("exp(-{d} r)"),
            })
        }
        Family::AbelianFromAlgebra(_) => json!({
            "element": "rho(a)^T, a a unit",
            "det": "det rho(a)",
            "delta_h": "1",
            "delta_g": "1 / |det rho(a)|",
        }),
        Family::DirectProduct(fs) => json!({
            "element": "diag(h_1, ..., h_k)",
            "det": "det h_1 ... det h_k",
            "delta_h": "Delta_H1(h_1) ... Delta_Hk(h_k)",
            "delta_g": "Delta_G1(h_1) ... Delta_Gk(h_k)",
            "factors": fs.iter().map(modular_forms).collect::<Vec<_>>(),
        }),
    }
}

fn describe(spec: &GroupSpec) -> Out {
    let o = orbit_of(spec);
    let op = orbit_differential_operator(spec)?;
    Ok(json!({
        "name": spec.name(),
        "family": spec.family_name(),
        "dim": spec.dim(),
        "dim_h": spec.dim_h(),
        "group": spec.to_json(),
        "orbit": { "kind": o.kind_name(), "base_point": o.base_point },
        "modular": modular_forms(spec),
        "operator": { "name": op.name(), "factors": op.factors },
        "nilpotency_class": spec.nilpotency_class(),
        "valid": spec.validate().passed,
    }))
}

fn validate(arg: &str) -> Out {
    match read_group(arg) {
        Ok(spec) => {
            let rep = spec.validate();
            let v = json!({ "schema": SCHEMA, "command": "validate", "passed": rep.passed, "checks": rep.checks });
            if rep.passed {
                Ok(v)
            } else {
                Err(Failure::Rejected(format!("failed checks: {}", rep.failed().join(", ")), v))
            }
        }
        Err(f) => Err(f),
    }
}

fn classify(dim: usize) -> Out {
    let entries = enumerate_catalog(dim)?;
    let list = entries
        .iter()
        .map(|e| {
            let data = e.spec.shear_data().expect("catalog groups are shearlet groups");
            let generators: Vec<Vec<Vec<f64>>> = data
                .basis()
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                .collect();
            Ok(json!({
                "name": e.name,
                "invariants": e.algebra.isomorphism_invariants()?,
                "shear_generators": generators,
                "y": data.y(),
                "group": e.spec.to_json(),
            }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(json!({ "dim": dim, "count": list.len(), "classes": list }))
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Failure::Parse(format!("bad number {p:?} in {s:?}"))))
        .collect()
}

fn exponents(a: &ExponentArgs, pipeline: bool) -> Out {
    let spec = read_group(&a.group.group)?;
    let w = WeightSpec::parse(&a.weight)?;
    let cfg = EmpiricalConfig { budget: a.sampling.budget, stages: a.sampling.stages, seed: a.sampling.seed, ..Default::default() };
    let mut sampled = None;
    let e = if let Some(text) = &a.exponents {
        let v = parse_list(text)?;
        if v.len() != 4 {
            return Err(Failure::Parse(format!("--exponents needs 4 values, got {}", v.len())));
        }
        ExponentSet::new(v[0], v[1], v[2], v[3], Provenance::User)?
    } else {
        match a.mode {
            ExponentMode::Analytic => analytic_exponents(&spec, &w)?,
            ExponentMode::Empirical => {
                let (e, rep) = empirical_exponents(&spec, &w, &cfg)?;
                sampled = Some(rep);
                e
            }
            ExponentMode::Check => {
                let e = analytic_exponents(&spec, &w)?;
                sampled = Some(empirical_exponent_check(&spec, &e, &w, &cfg)?);
                e
            }
        }
    };
    let mut v = json!({ "weight": w, "exponents": e });
    if let Some(rep) = sampled {
        v["empirical"] = json!(rep);
    }
    if pipeline {
        let rep = embedding_report(&spec, &w, e);
        v["report"] = json!(rep);
        v["moments_analyzing"] = json!(rep.moments_analyzing);
        v["moments_atom"] = json!(rep.moments_atom);
        if matches!(spec.family(), Family::GeneralizedShearlet(_)) {
            v["shearlet_atom_order"] = json!(shearlet_atom_order(&spec)?);
        }
        v["operator"] = json!(orbit_differential_operator(&spec)?.name());
    }
    Ok(v)
}

fn envelope(a: &EnvelopeArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let o = orbit_of(&spec);
    let mut pts = a.xi.iter().map(|s| parse_list(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = &a.points {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            pts.push(parse_list(line)?);
        }
    }
    let values = pts
        .iter()
        .map(|xi| {
            if xi.len() != spec.dim() {
                return Err(Failure::Unsupported(format!("point {xi:?} is not in R^{}", spec.dim())));
            }
            if !o.contains(xi) {
                return Ok(json!({ "xi": xi, "in_orbit": false, "a": 0.0, "distance": 0.0, "nearest": xi }));
            }
            let e = o.envelope(xi)?;
            Ok(json!({ "xi": xi, "in_orbit": true, "a": e.a, "distance": e.distance, "nearest": e.nearest }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut v = json!({ "orbit": o.kind_name(), "values": values });
    if let Some(n) = a.robustness {
        v["robustness"] = json!(envelope_robustness(&spec, n, a.seed)?);
        v["seed"] = json!(a.seed);
    }
    Ok(v)
}

fn atom_build(a: &AtomBuildArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let d = spec.dim();
    let op = orbit_differential_operator(&spec)?;
    let need = op.expand(a.order).iter().flat_map(|t| t.alpha.clone()).max().unwrap_or(0) as usize;
    let k = a.degree.unwrap_or(need + 1).max(1);
    let base = match a.half_width {
        Some(w) => SplineBase::new(vec![k; d], vec![-w; d], vec![w; d])?,
        None => SplineBase::cardinal(d, k),
    };
    let atom = make_atom(&spec, a.order, base)?;
    let atom_json = serde_json::to_value(&atom).expect("serializable");
    if let Some(p) = &a.out {
        write_json(p, &atom_json)?;
    }
    let mut v = json!({ "operator": op.name(), "atom": atom_json });
    if let Some(p) = &a.samples {
        let (lo, hi) = atom.support();
        let grid = Grid::covering(lo, hi, a.sample_points.max(2))?;
        let s = atom.sample(&grid);
        write_sampled(p, &s)?;
        v["samples"] = json!({ "path": p, "grid": s.grid, "l2_norm": s.l2_norm() });
    }
    Ok(v)
}

enum Psi {
    Atom(Atom),
    Sampled(SampledFunction),
}

impl Psi {
    fn load(p: &PsiArgs) -> Result<Self, Failure> {
        match (&p.atom, &p.sampled) {
            (Some(a), _) => Ok(Psi::Atom(read_atom(a)?)),
            (None, Some(s)) => Ok(Psi::Sampled(read_sampled(s)?)),
            (None, None) => Err(Failure::Parse("one of --atom or --sampled is required".into())),
        }
    }

    fn spectral(&self) -> &dyn Spectral {
        match self {
            Psi::Atom(a) => a,
            Psi::Sampled(s) => s,
        }
    }

    fn dim(&self) -> usize {
        self.spectral().dim()
    }
}

fn check_dim(spec: &GroupSpec, d: usize) -> Result<(), Failure> {
    if spec.dim() != d {
        return Err(Failure::Unsupported(format!("group acts on R^{} but the function lives on R^{d}", spec.dim())));
    }
    Ok(())
}

fn atom_verify(a: &AtomVerifyArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let psi = Psi::load(&a.psi)?;
    check_dim(&spec, psi.dim())?;
    let order = match (&psi, a.order) {
        (_, Some(r)) => r,
        (Psi::Atom(at), None) => at.order,
        (Psi::Sampled(_), None) => return Err(Failure::Parse("--order is required for sampled functions".into())),
    };
    let probe = verify_vanishing_moments(psi.spectral(), &orbit_of(&spec), order)?;
    Ok(json!({ "probe": probe }))
}

fn quad_config(q: &QuadArgs) -> QuadConfig {
    QuadConfig { order: q.quad_order, rel_tol: q.rel_tol, max_levels: q.max_levels, ..Default::default() }
}

fn admissibility(a: &AdmissibilityArgs) -> Out {
    let spec = read_group(&a.quad.group.group)?;
    let psi = Psi::load(&a.psi)?;
    check_dim(&spec, psi.dim())?;
    let rep = admissibility_check(&spec, psi.spectral(), &quad_config(&a.quad))?;
    Ok(json!({ "report": rep }))
}

fn dilation_config(a: &DilationArgs) -> DilationConfig {
    let c = DilationConfig {
        r_max: a.r_max,
        r_points: a.r_points,
        t_max: a.t_max,
        t_points: a.t_points,
        angle_points: a.angle_points,
    };
    if a.refine {
        c.refined()
    } else {
        c
    }
}

fn padded(g: &Grid, pad: usize) -> Result<Grid, Failure> {
    Ok(Grid::new(
        g.origin.iter().zip(&g.spacing).map(|(o, h)| o - pad as f64 * h).collect(),
        g.spacing.clone(),
        g.counts.iter().map(|c| c + 2 * pad).collect(),
    )?)
}

/// Coefficients as one sampled function whose first axis indexes dilations.
fn stack(c: &CoefficientField) -> Result<SampledFunction, Failure> {
    let t = &c.translations;
    let grid = Grid::new(
        std::iter::once(0.0).chain(t.origin.iter().copied()).collect(),
        std::iter::once(1.0).chain(t.spacing.iter().copied()).collect(),
        std::iter::once(c.values.len()).chain(t.counts.iter().copied()).collect(),
    )?;
    Ok(SampledFunction::new(grid, c.values.concat())?)
}

fn unstack(s: SampledFunction) -> Result<CoefficientField, Failure> {
    let g = &s.grid;
    if g.dim() < 2 || g.origin[0] != 0.0 || g.spacing[0] != 1.0 {
        return Err(Failure::Parse("coefficient file must carry a leading dilation axis".into()));
    }
    let translations = Grid::new(g.origin[1..].to_vec(), g.spacing[1..].to_vec(), g.counts[1..].to_vec())?;
    let n = translations.len();
    Ok(CoefficientField { values: s.values.chunks(n).map(<[f64]>::to_vec).collect(), translations })
}

fn cwt(a: &CwtArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let psi = read_atom(&a.atom)?;
    check_dim(&spec, psi.dim())?;
    let signal = match (&a.signal, &a.test_signal) {
        (Some(p), _) => read_sampled(p)?,
        (None, Some(name)) => {
            let d = spec.dim();
            let o = -0.5 * (a.n as f64 - 1.0) * a.spacing;
            let grid = Grid::new(vec![o; d], vec![a.spacing; d], vec![a.n; d])?;
            let known: Vec<_> = test_signals(&grid, a.sigma);
            let names: Vec<&str> = known.iter().map(|(n, _)| *n).collect();
            known
                .into_iter()
                .find(|(n, _)| n == name)
                .map(|(_, f)| f)
                .ok_or_else(|| Failure::Parse(format!("unknown test signal {name:?}; known: {}", names.join(", "))))?
        }
        (None, None) => return Err(Failure::Parse("one of --signal or --test-signal is required".into())),
    };
    check_dim(&spec, signal.grid.dim())?;
    if let Some(p) = &a.signal_out {
        write_sampled(p, &signal)?;
    }
    let cfg = dilation_config(&a.dilations);
    let tg = TransformGrid::new(&spec, padded(&signal.grid, a.dilations.pad)?, &cfg)?;
    let coeffs = analyze(&signal, &psi, &tg)?;
    write_sampled(&a.out, &stack(&coeffs)?)?;
    let mut v = json!({
        "signal_grid": signal.grid,
        "signal_l2_norm": signal.l2_norm(),
        "translations": tg.translations,
        "dilation_config": cfg,
        "dilations": tg.dilations.len(),
        "c_psi": c_psi(&spec, &psi, &tg),
        "out": a.out,
    });
    if let Some(w) = &a.weight {
        let w = WeightSpec::parse(w)?;
        v["coefficient_norm"] = json!({ "weight": w, "value": coefficient_norm(&coeffs, &tg, &spec, &w)? });
    }
    Ok(v)
}

fn icwt(a: &IcwtArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let psi = read_atom(&a.atom)?;
    check_dim(&spec, psi.dim())?;
    let coeffs = unstack(read_sampled(&a.coeffs)?)?;
    let cfg = dilation_config(&a.dilations);
    let tg = TransformGrid::new(&spec, coeffs.translations.clone(), &cfg)?;
    if tg.dilations.len() != coeffs.values.len() {
        return Err(Failure::Unsupported(format!(
            "coefficients carry {} dilations, the dilation flags give {}",
            coeffs.values.len(),
            tg.dilations.len()
        )));
    }
    let reference = a.reference.as_deref().map(read_sampled).transpose()?;
    let out_grid = reference.as_ref().map_or_else(|| tg.translations.clone(), |r| r.grid.clone());
    let c = c_psi(&spec, &psi, &tg);
    let f = synthesize(&coeffs, &psi, &tg, c, &out_grid)?;
    if let Some(p) = &a.out {
        write_sampled(p, &f)?;
    }
    let mut v = json!({ "grid": out_grid, "dilations": tg.dilations.len(), "c_psi": c, "l2_norm": f.l2_norm() });
    if let Some(r) = &reference {
        v["relative_l2_error"] = json!(relative_l2_error(&f, r)?);
    }
    Ok(v)
}

fn haar_check(a: &QuadArgs) -> Out {
    let spec = read_group(&a.group.group)?;
    let f = |x: &[f64]| (-(x.iter().enumerate().map(|(i, v)| (1.0 + 0.3 * i as f64) * v * v).sum::<f64>())).exp();
    let c = haar_transfer_check(&spec, f, &quad_config(a))?;
    Ok(json!({ "test_function": "exp(-sum (1 + 0.3 i) x_i^2)", "check": c }))
}

fn phi_check(a: &PhiArgs) -> Out {
    let spec = read_group(&a.quad.group.group)?;
    let cfg = quad_config(&a.quad);
    let ell = a.ell.unwrap_or(spec.dim() as u32 + 2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::with_capacity(a.samples);
    let mut worst = 0.0f64;
    let mut converged = true;
    for _ in 0..a.samples {
        let h = spec.sample_element(&mut rng, 1.0, 1.5);
        let direct = phi_ell_direct(&spec, &h, ell, &cfg);
        let conv = phi_ell_convolution(&spec, &h, ell, &cfg)?;
        let rel = (direct.value - conv.value).abs() / direct.value.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        converged &= direct.converged && conv.converged;
        let m = &h.matrix;
        rows.push(json!({
            "h": (0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "direct": direct.value,
            "convolution": conv.value,
            "relative_error": rel,
        }));
    }
    Ok(json!({ "ell": ell, "seed": a.seed, "samples": rows, "max_relative_error": worst, "converged": converged }))
}
