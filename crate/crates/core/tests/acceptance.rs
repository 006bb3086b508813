//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines show up under a plain `cargo test`.

use std::time::{Duration, Instant};

use orbitlet::algebra::StructureConstants;
use orbitlet::atoms::{
    admissibility_check, make_atom, verify_vanishing_moments, AdmissibilityVerdict, Grid, ProbeVerdict, SplineBase,
    MOMENT_TOL, SLOPE_TOL,
};
use orbitlet::embeddedness::{
    analytic_exponents, embedding_report, empirical_exponent_check, phi_ell_convolution, phi_ell_direct,
    shearlet_atom_order, EmpiricalConfig, Verdict, WeightSpec,
};
use orbitlet::groups::{enumerate_catalog, GroupSpec};
use orbitlet::orbit::{envelope_robustness, haar_transfer_check, orbit_of};
use orbitlet::quad::QuadConfig;
use orbitlet::rational::int;
use orbitlet::transform::{analyze, c_psi, relative_l2_error, synthesize, test_signals, DilationConfig, TransformGrid};
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn catalog() -> Vec<GroupSpec> {
    let mut v = vec![
        GroupSpec::shearlet2d(0.5),
        GroupSpec::similitude(1),
        GroupSpec::similitude(2),
        GroupSpec::similitude(3),
        GroupSpec::diagonal(2),
        GroupSpec::diagonal(3),
        GroupSpec::abelian(&StructureConstants::class_three_quartic(int(-1))).unwrap(),
        GroupSpec::direct_product(vec![GroupSpec::similitude(2), GroupSpec::diagonal(1)]).unwrap(),
    ];
    for d in 2..=4 {
        v.extend(enumerate_catalog(d).unwrap().into_iter().map(|e| e.spec));
    }
    v
}

fn label(g: &GroupSpec) -> String {
    match g.name() {
        Some(n) => format!("{}({n}, d={})", g.family_name(), g.dim()),
        None => format!("{}(d={})", g.family_name(), g.dim()),
    }
}

fn golden_orders() -> Outcome {
    let g = GroupSpec::shearlet2d(0.5);
    let w = WeightSpec::max_delta();
    let r = embedding_report(&g, &w, analytic_exponents(&g, &w).unwrap());
    outcome(
        r.moments_analyzing == 15 && r.moments_atom == 19,
        format!("analyzing {} (want 15), atom {} (want 19)", r.moments_analyzing, r.moments_atom),
    )
}

fn atom_order_closed_forms() -> Outcome {
    let mut bad = Vec::new();
    let mut got = Vec::new();
    for d in 2..=5i64 {
        let s = shearlet_atom_order(&GroupSpec::standard_shearlet(d as usize, None).unwrap()).unwrap();
        let t = shearlet_atom_order(&GroupSpec::toeplitz_shearlet(d as usize, None).unwrap()).unwrap();
        let (ws, wt) = (10 * d + 4 + (d + 1) / 4, 2 * d * d + 6 * d + 4 + d / 2);
        if s != ws || t != wt {
            bad.push(format!("d={d}: {s}/{ws} {t}/{wt}"));
        }
        got.push(format!("{s}/{t}"));
    }
    let detail = format!("standard/toeplitz d=2..5: {}", got.join(" "));
    outcome(bad.is_empty(), if bad.is_empty() { detail } else { format!("{detail}; mismatches {}", bad.join("; ")) })
}

fn classification() -> Outcome {
    let counts: Vec<usize> = (2..=4).map(|d| enumerate_catalog(d).unwrap().len()).collect();
    let forms: Vec<_> = enumerate_catalog(4)
        .unwrap()
        .into_iter()
        .filter(|e| e.name.starts_with("h_a"))
        .map(|e| e.algebra.isomorphism_invariants().unwrap().form)
        .collect();
    let separated = forms.len() == 3 && forms.iter().all(Option::is_some) && forms[0] != forms[1] && forms[1] != forms[2] && forms[0] != forms[2];
    outcome(counts == [1, 2, 5] && separated, format!("counts {counts:?}, H_a (rank, |signature|) {forms:?}"))
}

fn gaussian(x: &[f64]) -> f64 {
    (-(x.iter().enumerate().map(|(i, v)| (1.0 + 0.3 * i as f64) * v * v).sum::<f64>())).exp()
}

fn measure_transfer() -> Outcome {
    let cfg = QuadConfig::default();
    let mut errs = Vec::new();
    for g in [GroupSpec::shearlet2d(0.5), GroupSpec::standard_shearlet(3, None).unwrap()] {
        errs.push(haar_transfer_check(&g, gaussian, &cfg).unwrap().relative_error);
    }
    outcome(errs.iter().all(|e| *e < 1e-3), format!("relative errors {:.2e} (d=2), {:.2e} (d=3), limit 1e-3", errs[0], errs[1]))
}

fn phi_convolution() -> Outcome {
    let g = GroupSpec::shearlet2d(0.5);
    let cfg = QuadConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let h = g.shearlet2d_element(sign * rng.random_range(0.3..3.0), rng.random_range(-1.5..1.5)).unwrap();
        let a = phi_ell_direct(&g, &h, 4, &cfg).value;
        let b = phi_ell_convolution(&g, &h, 4, &cfg).unwrap().value;
        worst = worst.max((a - b).abs() / a.abs());
    }
    outcome(worst < 1e-2, format!("ell = 4, worst relative gap over 10 h: {worst:.2e}, limit 1e-2"))
}

fn exponent_soundness() -> Outcome {
    let w = WeightSpec::max_delta();
    let cfg = EmpiricalConfig { budget: 100_000, stages: 5, seed: 1, ..Default::default() };
    let mut failing = Vec::new();
    let groups = catalog();
    for g in &groups {
        let e = analytic_exponents(g, &w).unwrap();
        let r = empirical_exponent_check(g, &e, &w, &cfg).unwrap();
        if r.verdict != Verdict::Bounded {
            failing.push(format!("{} {:?}", label(g), r.verdict));
        }
    }
    let g = GroupSpec::shearlet2d(0.5);
    let e = analytic_exponents(&g, &w).unwrap();
    let reduced = e.with(1, e.e2 - 1.0);
    let grow = empirical_exponent_check(&g, &reduced, &w, &cfg).unwrap().verdict;
    outcome(
        failing.is_empty() && grow == Verdict::Unbounded,
        format!("{}/{} groups bounded{}; e2 - 1 on shearlet: {grow:?}", groups.len() - failing.len(), groups.len(), failing.iter().map(|f| format!(", {f}")).collect::<String>()),
    )
}

fn envelope_moderateness() -> Outcome {
    let groups = catalog();
    let (mut m, mut lo, mut hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for g in &groups {
        let r = envelope_robustness(g, 10_000, 11).unwrap();
        m = m.max(r.moderateness);
        lo = lo.min(r.norm_ratio.0);
        hi = hi.max(r.norm_ratio.1);
    }
    outcome(
        m <= 64.0 && lo >= 1.0 / 16.0 && hi <= 16.0,
        format!("{} groups x 10^4 points: ratio max {m:.3} (<= 64), norm ratio [{lo:.3}, {hi:.3}] (within [1/16, 16])", groups.len()),
    )
}

fn vanishing_moments() -> Outcome {
    let g = GroupSpec::shearlet2d(0.5);
    let o = orbit_of(&g);
    let mut parts = Vec::new();
    let mut pass = true;
    for r in 1..=4 {
        let a = make_atom(&g, r, SplineBase::cardinal(2, 5)).unwrap();
        let p = verify_vanishing_moments(&a, &o, r).unwrap();
        pass &= p.verdict == ProbeVerdict::Verified && (p.fitted_order - r as f64).abs() <= SLOPE_TOL && p.worst_moment <= MOMENT_TOL;
        parts.push(format!("r={r}: slope {:.3}, moments {:.1e}", p.fitted_order, p.worst_moment));
    }
    outcome(pass, parts.join("; "))
}

fn admissibility() -> Outcome {
    let cfg = QuadConfig { rel_tol: 1e-5, ..Default::default() };
    let mut parts = Vec::new();
    let mut pass = true;
    for g in [GroupSpec::shearlet2d(0.5), GroupSpec::standard_shearlet(3, None).unwrap(), GroupSpec::toeplitz_shearlet(3, None).unwrap()] {
        let d = g.dim() as u32;
        let good = admissibility_check(&g, &make_atom(&g, d, SplineBase::cardinal(g.dim(), 5)).unwrap(), &cfg).unwrap();
        let bad = admissibility_check(&g, &make_atom(&g, 0, SplineBase::cardinal(g.dim(), 5)).unwrap(), &cfg).unwrap();
        pass &= good.verdict == AdmissibilityVerdict::Finite && bad.verdict == AdmissibilityVerdict::Divergent;
        parts.push(format!("{}: d1^{d} f {:?}, f {:?}", label(&g), good.verdict, bad.verdict));
    }
    outcome(pass, parts.join("; "))
}

fn inversion() -> Outcome {
    let g = GroupSpec::shearlet2d(0.5);
    let psi = make_atom(&g, 2, SplineBase::new(vec![5, 5], vec![-4.5, -4.5], vec![4.5, 4.5]).unwrap()).unwrap();
    let h = 0.08;
    let o = -31.5 * h;
    let signal_grid = Grid::new(vec![o; 2], vec![h; 2], vec![64; 2]).unwrap();
    let translations = Grid::new(vec![o - 32.0 * h; 2], vec![h; 2], vec![128; 2]).unwrap();
    let (_, f) = test_signals(&signal_grid, 0.6).into_iter().next().unwrap();
    let coarse = DilationConfig::default();
    let errs: Vec<f64> = [coarse.clone(), coarse.refined()]
        .iter()
        .map(|cfg| {
            let tg = TransformGrid::new(&g, translations.clone(), cfg).unwrap();
            let w = analyze(&f, &psi, &tg).unwrap();
            let rec = synthesize(&w, &psi, &tg, c_psi(&g, &psi, &tg), &signal_grid).unwrap();
            relative_l2_error(&rec, &f).unwrap()
        })
        .collect();
    outcome(
        errs[0] < 0.05 && errs[1] < errs[0],
        format!("64x64 packet: relative L2 error {:.4} -> {:.4} after doubling (limit 0.05, must decrease)", errs[0], errs[1]),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("moment-order golden values", golden_orders, Duration::from_secs(1)),
        ("shearlet atom-order closed forms", atom_order_closed_forms, Duration::from_secs(1)),
        ("classification counts", classification, Duration::from_secs(1)),
        ("measure-transfer identity", measure_transfer, Duration::from_secs(30)),
        ("Phi_ell convolution identity", phi_convolution, Duration::from_secs(120)),
        ("exponent soundness", exponent_soundness, Duration::from_secs(120)),
        ("envelope moderateness and norm robustness", envelope_moderateness, Duration::from_secs(30)),
        ("vanishing-moment verification", vanishing_moments, Duration::from_secs(60)),
        ("admissibility discrimination", admissibility, Duration::from_secs(60)),
        ("desk-scale inversion", inversion, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let dt = t.elapsed();
        let slow = dt > *budget;
        let pass = out.pass && !slow;
        failed += usize::from(!pass);
        let timing = if slow { format!("{dt:.1?} over the {budget:?} budget") } else { format!("{dt:.1?}") };
        println!("criterion {:>2} {} {name}: {} [{timing}]", i + 1, if pass { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
