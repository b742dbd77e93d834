//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use bellnet::lhv::{self, BoundMethod, SearchOptions};
use bellnet::network::{InterBobLink, NkmSpec};
use bellnet::pauli::{Letter, PauliString};
use bellnet::quantum::{self, Objective};
use bellnet::registry::{self, resolve_state, target_state, ScenarioParams, StateSpec};
use bellnet::sampler;
use bellnet::scenario::{self, AngleAssignment, FamilySelection, InequalityExpr};
use bellnet::states::{Expectation, StabilizerMixture};
use bellnet_cli::{report_for, Command, Report, RunArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<String>, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn run_args(scenario: &str) -> RunArgs {
    RunArgs {
        scenario: Some(scenario.into()),
        ..Default::default()
    }
}

fn certify(args: RunArgs) -> Result<Report, String> {
    report_for(&Command::Certify(args.clone()), &args).map_err(|e| e.to_string())
}

fn optimize(args: RunArgs) -> Result<Report, String> {
    report_for(&Command::Optimize(args.clone()), &args).map_err(|e| e.to_string())
}

fn star_args(k: usize, family: FamilySelection) -> RunArgs {
    RunArgs {
        k: Some(k),
        family: Some(family),
        ..run_args("star")
    }
}

fn collapsed_args(k: usize, family: FamilySelection) -> RunArgs {
    RunArgs {
        n: Some(k),
        k: Some(k),
        m: Some(1),
        alice_bobs: Some(vec![1; k]),
        family: Some(family),
        ..run_args("nkm")
    }
}

fn optimum_value(r: &Report) -> f64 {
    r.optimum.as_ref().expect("optimize report").value
}

fn lhv_max(r: &Report) -> f64 {
    r.certification.as_ref().expect("certify report").lhv_max
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn at_quarter_pi(r: &Report) -> bool {
    r.optimum
        .as_ref()
        .expect("optimize report")
        .angles
        .values
        .iter()
        .all(|t| close(*t, FRAC_PI_4, 1e-6))
}

fn target(expr: &InequalityExpr) -> StabilizerMixture {
    StabilizerMixture::pure(target_state(&expr.topology).expect("target state"))
}

fn chsh() -> Outcome {
    let cert = certify(run_args("chsh"))?;
    let c = cert.certification.as_ref().unwrap();
    ensure!(c.method == BoundMethod::Enumeration, "method {:?}", c.method);
    ensure!(c.raw_strategies == 16, "{} raw strategies", c.raw_strategies);
    ensure!(c.lhv_max == 2.0, "classical bound {}", c.lhv_max);
    let expr = scenario::build_chsh().unwrap();
    let raw = lhv::enumerate_raw(&expr, 16).map_err(|e| e.to_string())?;
    ensure!(lhv::linear_max_over(&expr, &raw) == 2.0, "raw enumeration bound");
    let opt = optimize(RunArgs {
        state: Some(StateSpec::Bell(bellnet::states::BellState::PhiPlus)),
        ..run_args("chsh")
    })?;
    let v = optimum_value(&opt);
    ensure!(close(v, 2.0 * SQRT_2, 1e-9), "optimum {v}");
    ensure!(at_quarter_pi(&opt), "angles {:?}", opt.optimum.unwrap().angles.values);
    Ok(vec![format!("bound 2 over 16 strategies, optimum {v:.12}")])
}

fn two_source() -> Outcome {
    let mut notes = Vec::new();
    for family in [FamilySelection::First, FamilySelection::Second] {
        let args = RunArgs {
            family: Some(family),
            ..run_args("two-source")
        };
        let cert = certify(args.clone())?;
        let c = cert.certification.as_ref().unwrap();
        ensure!(c.method == BoundMethod::Enumeration, "{family:?}: method {:?}", c.method);
        ensure!(c.strategies.is_some_and(|s| s <= 256), "{family:?}: {:?} strategies", c.strategies);
        ensure!(c.lhv_max == 1.0, "{family:?}: bound {}", c.lhv_max);
        let v = optimum_value(&optimize(args)?);
        ensure!(close(v, 2.0, 1e-9), "{family:?}: optimum {v}");
        notes.push(format!("{family:?}: bound 1, optimum {v:.12}"));
    }
    let v = optimum_value(&optimize(RunArgs {
        family: Some(FamilySelection::Combined),
        ..run_args("two-source")
    })?);
    ensure!(close(v, 4.0, 1e-9), "combined optimum {v}");
    notes.push(format!("combined optimum {v:.12}"));
    Ok(notes)
}

fn smolin() -> Outcome {
    let l = scenario::build_two_source(FamilySelection::First).unwrap();
    let c = scenario::build_two_source(FamilySelection::Combined).unwrap();
    let (bi, _) = scenario::build_bilocal_baseline().unwrap();
    let state = resolve_state(&StateSpec::Smolin, &c.topology).map_err(|e| e.to_string())?;
    let dense = state.to_dense().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (expr, want) in [(&l, 1.0), (&c, 2.0)] {
        let best = quantum::optimize_angles(expr, &state).map_err(|e| e.to_string())?;
        let oracle = quantum::evaluate_expanded(expr, &dense, &best.angles).map_err(|e| e.to_string())?;
        let quarter = AngleAssignment::uniform(expr, FRAC_PI_4).unwrap();
        let at_quarter = quantum::evaluate_expanded(expr, &dense, &quarter).map_err(|e| e.to_string())?;
        ensure!(close(best.value, want, 1e-12), "{}: maximum {}", expr.name, best.value);
        ensure!(close(oracle, want, 1e-12), "{}: dense value {oracle}", expr.name);
        ensure!(close(at_quarter, want, 1e-12), "{}: dense value at pi/4 {at_quarter}", expr.name);
        notes.push(format!("{}: {:.12} (no violation)", expr.name, best.value));
    }
    let best = quantum::optimize_angles(&bi, &state).map_err(|e| e.to_string())?;
    let oracle = quantum::evaluate_expanded(&bi, &dense, &best.angles).map_err(|e| e.to_string())?;
    ensure!(close(best.value, SQRT_2, 1e-9), "bi maximum {}", best.value);
    ensure!(close(oracle, SQRT_2, 1e-9), "bi dense value {oracle}");
    notes.push(format!("bilocal baseline reaches {:.12}", best.value));
    Ok(notes)
}

fn star() -> Outcome {
    let mut notes = Vec::new();
    for k in 2..=4usize {
        let per_family = 2f64.powf(k as f64 / 2.0);
        for family in [FamilySelection::First, FamilySelection::Second] {
            let opt = optimize(star_args(k, family))?;
            let v = optimum_value(&opt);
            ensure!(close(v, per_family, 1e-9), "K={k} {family:?}: optimum {v}");
            ensure!(at_quarter_pi(&opt), "K={k} {family:?}: angles off pi/4");
            let expr = scenario::build_star(k, family).unwrap();
            let bound = if k <= 3 {
                let cert = certify(star_args(k, family))?;
                let c = cert.certification.as_ref().unwrap();
                ensure!(c.method == BoundMethod::Enumeration, "K={k}: method {:?}", c.method);
                c.lhv_max
            } else {
                lhv::cross_polytope_certificate(&expr).map_err(|e| e.to_string())?.lhv_max
            };
            ensure!(bound == 1.0, "K={k} {family:?}: bound {bound}");
        }
        let opt = optimize(star_args(k, FamilySelection::Combined))?;
        let v = optimum_value(&opt);
        ensure!(close(v, 2.0 * per_family, 1e-9), "K={k} combined: optimum {v}");
        ensure!(at_quarter_pi(&opt), "K={k} combined: angles off pi/4");
        let method = if k <= 3 { "enumeration" } else { "cross-polytope" };
        notes.push(format!("K={k}: per family {per_family:.12}, combined {v:.12}, bound 1 by {method}"));
    }
    Ok(notes)
}

fn nonlinear() -> Outcome {
    let args = |family| RunArgs {
        r_num: Some(1),
        r_den: Some(3),
        ..star_args(3, family)
    };
    let expr = registry::build(
        "star",
        &ScenarioParams {
            k: Some(3),
            r_num: Some(1),
            r_den: Some(3),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let bound = lhv::nonlinear_lhv_max_with(&expr, SearchOptions::default()).map_err(|e| e.to_string())?;
    let analytic = bound.analytic.ok_or("no analytic bound")?;
    ensure!(close(analytic, 4.0, 1e-12), "analytic bound {analytic}");
    ensure!(close(bound.numeric, analytic, 1e-6), "numeric {} vs analytic {analytic}", bound.numeric);
    let cert = certify(args(FamilySelection::First))?;
    ensure!(close(lhv_max(&cert), 4.0, 1e-9), "certified bound {}", lhv_max(&cert));
    let first = optimum_value(&optimize(args(FamilySelection::First))?);
    ensure!(close(first, 2f64.powf(2.5), 1e-9), "first family optimum {first}");
    let combined = optimum_value(&optimize(args(FamilySelection::Combined))?);
    ensure!(close(combined, 2f64.powf(3.5), 1e-9), "combined optimum {combined}");
    Ok(vec![
        format!("bound analytic {analytic:.12}, numeric {:.12}", bound.numeric),
        format!("quantum {first:.12}, combined {combined:.12}"),
    ])
}

fn nkm() -> Outcome {
    let mut notes = Vec::new();
    for family in [FamilySelection::First, FamilySelection::Second] {
        let args = RunArgs {
            n: Some(3),
            k: Some(2),
            m: Some(2),
            wiring: Some(vec![InterBobLink { source: 3, bobs: (1, 2) }]),
            family: Some(family),
            ..run_args("nkm")
        };
        let v = optimum_value(&optimize(args)?);
        ensure!(close(v, 2.0, 1e-9), "(3,2,2) {family:?}: optimum {v}");
        notes.push(format!("(3,2,2) {family:?}: {v:.12}"));
    }
    for k in 2..=4usize {
        for family in [FamilySelection::First, FamilySelection::Second, FamilySelection::Combined] {
            let a = optimize(star_args(k, family))?;
            let b = optimize(collapsed_args(k, family))?;
            let (va, vb) = (optimum_value(&a), optimum_value(&b));
            ensure!(va.to_bits() == vb.to_bits(), "K={k} {family:?}: {va} vs {vb}");
            let (aa, ab) = (&a.optimum.as_ref().unwrap().angles, &b.optimum.as_ref().unwrap().angles);
            ensure!(aa.values == ab.values, "K={k} {family:?}: optimal angles differ");
            if k <= 3 {
                let (ca, cb) = (certify(star_args(k, family))?, certify(collapsed_args(k, family))?);
                ensure!(lhv_max(&ca).to_bits() == lhv_max(&cb).to_bits(), "K={k} {family:?}: bounds differ");
            }
        }
    }
    notes.push("collapse to star bit-identical for K = 2, 3, 4".into());
    Ok(notes)
}

fn pauli(s: &str) -> PauliString {
    PauliString::parse(s, 5).expect("pauli literal")
}

fn ghz() -> Outcome {
    let a = RunArgs {
        family: Some(FamilySelection::Combined),
        ..run_args("ghz-a")
    };
    let bound_a = lhv_max(&certify(a.clone())?);
    let opt_a = optimum_value(&optimize(a)?);
    ensure!(bound_a == 2.0, "case (a) bound {bound_a}");
    ensure!(close(opt_a, 4.0, 1e-9), "case (a) optimum {opt_a}");
    let bound_b = lhv_max(&certify(run_args("ghz-b"))?);
    let opt_b = optimum_value(&optimize(run_args("ghz-b"))?);
    ensure!(bound_b == 1.0, "case (b) bound {bound_b}");
    ensure!(close(opt_b, 2.0 * SQRT_2, 1e-9), "case (b) optimum {opt_b}");

    let expr = scenario::build_ghz_b().unwrap();
    let mut got: Vec<PauliString> = expr
        .compile()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|t| if t.sign < 0.0 { t.pauli.negated() } else { t.pauli })
        .collect();
    // 1-based qubits 1..5 are 0..4 here
    let mut want = Vec::new();
    for bell in ["+Z0 Z1", "+X0 X1"] {
        for g in ["+Z2 Z3 X4", "+Z2 X3 Z4", "+X2 Z3 Z4", "-X2 X3 X4"] {
            want.push(pauli(bell).multiply(&pauli(g)).unwrap());
        }
    }
    got.sort();
    want.sort();
    ensure!(got == want, "case (b) operators {got:?}");
    let state = target_state(&expr.topology).unwrap();
    ensure!(
        want.iter().all(|p| state.membership(p) == Some(1.0)),
        "case (b) operators do not stabilize the target"
    );
    Ok(vec![
        format!("case (a): bound 2, optimum {opt_a:.12}"),
        format!("case (b): bound 1, optimum {opt_b:.12}, 8 signed operators incl. -X3X4X5"),
    ])
}

fn scenario_exprs() -> Vec<InequalityExpr> {
    let nkm = NkmSpec::new(3, 2, 2, vec![InterBobLink { source: 3, bobs: (1, 2) }]);
    vec![
        scenario::build_chsh().unwrap(),
        scenario::build_two_source(FamilySelection::Combined).unwrap(),
        scenario::build_star(2, FamilySelection::Combined).unwrap(),
        scenario::build_star(3, FamilySelection::Combined).unwrap(),
        scenario::build_star(4, FamilySelection::Combined).unwrap(),
        scenario::build_nkm_spec(&nkm, FamilySelection::Combined).unwrap(),
        scenario::build_ghz_a(FamilySelection::Combined).unwrap(),
        scenario::build_ghz_b().unwrap(),
    ]
}

fn random_word(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
    let letters: Vec<Letter> = (0..n)
        .map(|_| [Letter::I, Letter::X, Letter::Y, Letter::Z][rng.random_range(0..4)])
        .collect();
    PauliString::from_letters(&letters).unwrap()
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut states = 0;
    let mut worst: f64 = 0.0;
    for expr in scenario_exprs() {
        for spec in ["target", "psi-", "rho1(0.3)", "rho2(0.7)"] {
            let spec: StateSpec = spec.parse().unwrap();
            let state = resolve_state(&spec, &expr.topology).map_err(|e| e.to_string())?;
            let dense = state.to_dense().map_err(|e| e.to_string())?;
            for _ in 0..1000 {
                let p = random_word(state.n_qubits(), &mut rng);
                let d = (state.expectation(&p).unwrap() - dense.expectation(&p).unwrap()).abs();
                worst = worst.max(d);
            }
            states += 1;
        }
    }
    ensure!(worst <= 1e-12, "backend disagreement {worst:e}");

    let mut families = 0;
    for expr in [
        scenario::build_star(2, FamilySelection::Combined).unwrap(),
        scenario::build_star(3, FamilySelection::Combined).unwrap(),
        scenario::build_ghz_a(FamilySelection::Combined).unwrap(),
    ] {
        for f in expr.families() {
            let part = lhv::family_part(&expr, f);
            let v = lhv::enumerate_vertices(&part).map_err(|e| e.to_string())?;
            ensure!(lhv::is_cross_polytope(&v, part.terms.len()), "{} {f:?}: not a cross-polytope", expr.name);
            families += 1;
        }
    }
    let b = scenario::build_ghz_b().unwrap();
    let v = lhv::enumerate_vertices(&b).map_err(|e| e.to_string())?;
    ensure!(lhv::is_cross_polytope(&v, b.terms.len()), "ghz-b: not a cross-polytope");

    let mut strategies = 0;
    for expr in scenario_exprs() {
        strategies += lhv::normalization_check(&expr).map_err(|f| format!("{}: {f:?}", expr.name))?;
    }

    for _ in 0..100_000 {
        let k = rng.random_range(1..=6);
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let m = quantum::mahler_check(&alpha, &beta).map_err(|e| e.to_string())?;
        ensure!(m.holds, "Mahler fails on {alpha:?} {beta:?}");
    }

    let mut gradient_worst: f64 = 0.0;
    let mut exprs = scenario_exprs();
    exprs.push(scenario::build_star_nonlinear(3, 1, 0, FamilySelection::Combined).unwrap());
    exprs.push(scenario::build_bilocal_baseline().unwrap().0);
    for expr in exprs {
        let objective = Objective::new(&expr, &target(&expr)).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let x: Vec<f64> = (0..objective.dimension()).map(|_| rng.random_range(0.2..1.35)).collect();
            let g = objective.gradient(&x);
            for (i, gi) in g.iter().enumerate() {
                let h = 1e-6;
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (objective.value(&up) - objective.value(&down)) / (2.0 * h);
                gradient_worst = gradient_worst.max((fd - gi).abs());
            }
        }
    }
    ensure!(gradient_worst <= 1e-6, "gradient mismatch {gradient_worst:e}");
    Ok(vec![
        format!("{states} states x 1000 words, worst backend gap {worst:e}"),
        format!("{families} star/GHZ families are cross-polytopes"),
        format!("normalization over {strategies} single-party strategies"),
        "Mahler holds on 100000 instances".into(),
        format!("worst gradient gap {gradient_worst:e}"),
    ])
}

fn monte_carlo() -> Outcome {
    let expr = scenario::build_star(2, FamilySelection::First).unwrap();
    let state = target(&expr);
    let angles = AngleAssignment::uniform(&expr, FRAC_PI_4).unwrap();
    let mut inside = 0;
    for seed in 0..100 {
        let r = sampler::simulate_estimate(&expr, &state, &angles, 1_000_000, seed).map_err(|e| e.to_string())?;
        if (r.value - 2.0).abs() <= 4.0 * r.standard_error {
            inside += 1;
        }
    }
    ensure!(inside >= 99, "{inside}/100 seeds within 4 standard errors");
    let small = sampler::simulate_estimate(&expr, &state, &angles, 1_000_000, 100).map_err(|e| e.to_string())?;
    let large = sampler::simulate_estimate(&expr, &state, &angles, 4_000_000, 100).map_err(|e| e.to_string())?;
    let ratio = small.standard_error / large.standard_error;
    ensure!((ratio / 2.0 - 1.0).abs() <= 0.2, "error ratio {ratio} under 4x rounds");
    Ok(vec![
        format!("{inside}/100 seeds within 4 standard errors"),
        format!("standard error ratio {ratio:.4} for 4x rounds"),
    ])
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("CHSH", chsh),
        ("two-source linear", two_source),
        ("Smolin discriminator", smolin),
        ("star networks", star),
        ("nonlinear star", nonlinear),
        ("(N,K,m) network", nkm),
        ("GHZ cases", ghz),
        ("property suites", properties),
        ("Monte Carlo", monte_carlo),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(notes) => {
                println!("criterion {} {name}: PASS", i + 1);
                for n in notes {
                    println!("    {n}");
                }
            }
            Err(why) => {
                println!("criterion {} {name}: FAIL ({why})", i + 1);
                failures.push(i + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
