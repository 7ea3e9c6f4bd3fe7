//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion. Runs as a
//! plain binary so the lines are always printed; exits nonzero on failure.

use std::f64::consts::PI;
use std::time::Instant;

use dcmax::experiments::{
    fit_rate, generate_phase_dataset, normality_check, population_risk_mc, run_consistency_experiment,
    saddle_start, ExperimentConfig, ExperimentReport, GeneratorSpec, StartPoint,
};
use dcmax_core::rng::Stream;
use dcmax_core::solver::SolveStatus;
use dcmax_core::stationarity::{clarke_probe_origin, directional_derivative, eps_argmax, stability_radius, surrogate_value};
use dcmax_core::{
    build_phase_retrieval_model, build_piecewise_affine_model, certify_strong_dstationarity, empirical_risk, mm_solve,
    relu_two_layer_value, CertifyConfig, Dataset, DifferenceMaxModel, FeasibleSet, LossKind, MMConfig,
    PhasePopulation, Verdict,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normals(rng: &mut Stream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

fn ones(p: usize) -> Vec<f64> {
    vec![1.0; p]
}

fn phase_dataset(seed: u64, signal: &[f64], sigma: f64, n: usize) -> Dataset {
    generate_phase_dataset(&GeneratorSpec { seed, stream: 0, signal: signal.to_vec(), sigma, n }).unwrap()
}

fn criterion_1() -> Check {
    let p = 20;
    let sigma = 0.1;
    let pop = PhasePopulation::new(ones(p), sigma).map_err(|e| e.to_string())?;
    let at_signal = pop.population_risk(&pop.signal).map_err(|e| e.to_string())?;
    ensure(at_signal == sigma * sigma, || format!("M(x̄) = {at_signal:e}, expected σ² = {:e}", sigma * sigma))?;
    let formula = sigma * sigma + (1.0 - 4.0 / (PI * PI)) * dot(&pop.signal, &pop.signal) / p as f64;
    let model = build_phase_retrieval_model(p).map_err(|e| e.to_string())?;
    let mut rng = Stream::new(101, 0);
    let mut worst_formula: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for k in 0..5 {
        let x = saddle_start(&pop.signal, &mut rng);
        let value = pop.population_risk(&x).map_err(|e| e.to_string())?;
        worst_formula = worst_formula.max((value - formula).abs());
        let mc = population_risk_mc(&model, LossKind::Squared, &pop.signal, sigma, &x, 100_000, 200 + k)
            .map_err(|e| e.to_string())?;
        worst_z = worst_z.max((mc.estimate - value).abs() / mc.standard_error);
    }
    ensure(worst_formula <= 1e-12, || format!("saddle value off the formula by {worst_formula:e}"))?;
    ensure(worst_z <= 4.0, || format!("Monte-Carlo disagreement of {worst_z:.2} standard errors"))?;
    Ok(format!("M(x̄)=σ² exactly; saddle |Δformula| ≤ {worst_formula:.1e}, max MC z = {worst_z:.2}"))
}

fn criterion_2() -> Check {
    let p = 20;
    let pop = PhasePopulation::new(ones(p), 0.1).map_err(|e| e.to_string())?;
    let grad_norm = |x: &[f64]| pop.population_gradient(x).map(|g| norm(&g)).map_err(|e| e.to_string());
    let neg: Vec<f64> = pop.signal.iter().map(|v| -v).collect();
    let mut stationary: f64 = grad_norm(&pop.signal)?.max(grad_norm(&neg)?);
    let mut rng = Stream::new(102, 0);
    for _ in 0..20 {
        stationary = stationary.max(grad_norm(&saddle_start(&pop.signal, &mut rng))?);
    }
    ensure(stationary <= 1e-8, || format!("gradient norm {stationary:e} on a stationary set"))?;
    let mut generic = f64::INFINITY;
    for _ in 0..100 {
        generic = generic.min(grad_norm(&normals(&mut rng, p))?);
    }
    ensure(generic >= 1e-3, || format!("gradient norm {generic:e} at a generic point"))?;
    Ok(format!("max ‖∇M‖ on ±x̄ ∪ 𝒟′ = {stationary:.1e}; min at generic points = {generic:.3}"))
}

fn criterion_3() -> Check {
    let pop = PhasePopulation::new(ones(20), 0.1).map_err(|e| e.to_string())?;
    let scale = dot(&pop.signal, &pop.signal);
    let mut rng = Stream::new(103, 0);
    let mut worst_trace: f64 = 0.0;
    let (mut max_neg, mut min_pos) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..10 {
        let x = saddle_start(&pop.signal, &mut rng);
        let d = pop.saddle_diagnostics(&x).map_err(|e| e.to_string())?;
        worst_trace = worst_trace.max(d.trace.abs());
        max_neg = max_neg.max(d.min_eigenvalue);
        min_pos = min_pos.min(d.max_eigenvalue);
    }
    ensure(worst_trace <= 1e-4 * scale, || format!("|trace| = {worst_trace:e}"))?;
    ensure(max_neg < 0.0 && min_pos > 0.0, || format!("eigen-signs not mixed: λmin ≤ {max_neg:e}, λmax ≥ {min_pos:e}"))?;
    Ok(format!("max |trace| = {worst_trace:.1e}; λmin ≤ {max_neg:.4}, λmax ≥ {min_pos:.4}"))
}

fn criterion_4() -> Check {
    let p = 20;
    let signal = ones(p);
    let data = phase_dataset(104, &signal, 0.1, 2000);
    let x_hat = saddle_start(&signal, &mut Stream::new(104, 1));
    let probe = clarke_probe_origin(&data, &x_hat, &signal, 1e6).map_err(|e| e.to_string())?;
    ensure(probe.averaged_gradient_norm <= 1e-10, || format!("averaged limiting gradient {:e}", probe.averaged_gradient_norm))?;
    ensure(probe.directional_derivative < 0.0, || format!("M_N′(0; x̄) = {}", probe.directional_derivative))?;
    let model = build_phase_retrieval_model(p).map_err(|e| e.to_string())?;
    let set = FeasibleSet::Ball { radius: 3.0 * norm(&signal) };
    let origin = vec![0.0; p];
    let cert = certify_strong_dstationarity(&model, LossKind::Squared, &data, &set, &origin, &CertifyConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Refuted, || format!("certificate at 0: {:?}", cert.verdict))?;
    let witness = cert.witness.as_ref().ok_or("refuted certificate without a witness")?;
    let at_origin = empirical_risk(&model, LossKind::Squared, &data, &origin).map_err(|e| e.to_string())?;
    let at_witness = empirical_risk(&model, LossKind::Squared, &data, witness).map_err(|e| e.to_string())?;
    ensure(at_witness < at_origin, || format!("witness risk {at_witness} ≥ M_N(0) = {at_origin}"))?;
    Ok(format!(
        "averaged gradient {:.1e}; M_N′(0; x̄) = {:.4}; refuted, witness lowers M_N {at_origin:.4} → {at_witness:.4}",
        probe.averaged_gradient_norm, probe.directional_derivative
    ))
}

fn affine_instance(rng: &mut Stream) -> (DifferenceMaxModel, Dataset, Vec<f64>) {
    let k_f = 1 + rng.index(3);
    let k_g = 1 + rng.index(3);
    let d = 2;
    let n = 8;
    let model = build_piecewise_affine_model(k_f, k_g, d).unwrap();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| normals(rng, d)).collect();
    let z = normals(rng, n);
    let x = normals(rng, model.param_dim);
    (model, Dataset::from_rows(&rows, z).unwrap(), x)
}

fn criterion_5() -> Check {
    let mut rng = Stream::new(105, 0);
    let (mut diag_worst, mut major_viol, mut incl_viol, mut stab_viol) = (0.0f64, 0, 0, 0);
    for _ in 0..200 {
        let (model, data, x) = affine_instance(&mut rng);
        let eps = rng.uniform_in(0.01, 1.0);
        for loss in [LossKind::Squared, LossKind::Absolute] {
            let mn = empirical_risk(&model, loss, &data, &x).unwrap();
            let diag = surrogate_value(&model, loss, &data, &x, eps, &x).unwrap().total;
            diag_worst = diag_worst.max((diag - mn).abs());
            for _ in 0..10 {
                let y: Vec<f64> = x.iter().map(|a| a + 2.0 * rng.normal()).collect();
                let r = surrogate_value(&model, loss, &data, &x, eps, &y).unwrap().total;
                let my = empirical_risk(&model, loss, &data, &y).unwrap();
                if r < my - 1e-12 * (1.0 + my.abs()) {
                    major_viol += 1;
                }
            }
        }
        let c0 = data
            .samples()
            .flat_map(|(xi, _)| model.f_pieces.iter().chain(&model.g_pieces).map(move |pc| pc.lipschitz(xi, 1.0)))
            .fold(0.0, f64::max);
        let u = normals(&mut rng, x.len());
        let delta = rng.uniform() * eps / (2.0 * c0);
        let x1: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + delta * b / norm(&u)).collect();
        for (xi, _) in data.samples() {
            let narrow = eps_argmax(&model, &x1, xi, eps).unwrap();
            let wide = eps_argmax(&model, &x, xi, 2.0 * eps).unwrap();
            if !narrow.f_set.iter().all(|j| wide.f_set.contains(j)) || !narrow.g_set.iter().all(|j| wide.g_set.contains(j)) {
                incl_viol += 1;
            }
            let radius = stability_radius(&model, &x, xi).unwrap();
            let exact = eps_argmax(&model, &x, xi, 0.0).unwrap();
            let top = if radius.is_finite() { radius } else { 1e6 };
            for frac in [0.0, 0.5, 1.0] {
                let s = eps_argmax(&model, &x, xi, frac * top).unwrap();
                if s.f_set != exact.f_set || s.g_set != exact.g_set {
                    stab_viol += 1;
                }
            }
        }
    }
    ensure(diag_worst <= 1e-12, || format!("diagonal identity off by {diag_worst:e}"))?;
    ensure(major_viol + incl_viol + stab_viol == 0, || {
        format!("violations: majorization {major_viol}, inclusion {incl_viol}, stability {stab_viol}")
    })?;
    Ok(format!("200 instances: max |R(x,x) − M_N(x)| = {diag_worst:.1e}; 0 violations"))
}

fn criterion_6() -> Check {
    let p = 20;
    let signal = ones(p);
    let model = build_phase_retrieval_model(p).map_err(|e| e.to_string())?;
    let radius = 3.0 * norm(&signal);
    let set = FeasibleSet::Ball { radius };
    let mut rng = Stream::new(106, 0);
    let (mut certified, mut worst_gap, mut worst_dd) = (0, 0.0f64, f64::INFINITY);
    let mut statuses = Vec::new();
    for run in 0..3 {
        let data = phase_dataset(106 + run, &signal, 0.1, 2000);
        let x0 = saddle_start(&signal, &mut rng);
        let (x, trace) = mm_solve(&model, LossKind::Squared, &data, &set, &x0, &MMConfig::default()).map_err(|e| e.to_string())?;
        statuses.push(trace.status);
        let monotone = trace.objectives.windows(2).all(|w| w[1] <= w[0]);
        ensure(monotone, || format!("run {run}: objective increased"))?;
        if trace.status != SolveStatus::Certified {
            continue;
        }
        certified += 1;
        let cert = trace.certificate.as_ref().ok_or("certified run without a certificate")?;
        let mn = trace.final_objective();
        let tol = 1e-7 * (1.0 + mn);
        ensure(cert.enumerated, || format!("run {run}: certificate did not enumerate every combination"))?;
        for c in &cert.combinations {
            worst_gap = worst_gap.max((-c.gap).max(0.0)).max(c.solver_gap_bound);
            ensure((-c.gap) <= tol && c.solver_gap_bound <= tol, || {
                format!("run {run}: subproblem gap {:e} / bound {:e} above {tol:e}", -c.gap, c.solver_gap_bound)
            })?;
        }
        let on_boundary = norm(&x) >= radius * (1.0 - 1e-9);
        for _ in 0..1000 {
            let mut v = normals(&mut rng, p);
            if on_boundary && dot(&v, &x) > 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|e| *e /= nv);
            let dd = directional_derivative(&model, LossKind::Squared, &data, &x, &v).map_err(|e| e.to_string())?;
            worst_dd = worst_dd.min(dd);
        }
        ensure(worst_dd >= -1e-6, || format!("run {run}: directional derivative {worst_dd:e}"))?;
    }
    ensure(certified > 0, || format!("no certified run among {statuses:?}"))?;
    Ok(format!(
        "3 runs monotone ({statuses:?}); {certified} certified: max subproblem gap {worst_gap:.1e}, min M_N′(x̂; v) = {worst_dd:.2e}"
    ))
}

fn study_config(p: usize, sizes: Vec<usize>, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        signal: ones(p),
        sigma: 0.1,
        sample_sizes: sizes,
        replications: reps,
        base_seed: seed,
        loss: LossKind::Squared,
        radius: None,
        start: StartPoint::Saddle,
        solver: MMConfig::default(),
    }
}

/// Uses the `N = 2000` slice of the rate study: same dimension, signal,
/// noise, starts and replication count.
fn criterion_7(report: &ExperimentReport) -> Check {
    let runs: Vec<_> = report.records.iter().filter(|r| r.n == 2000).collect();
    ensure(runs.len() == 20, || format!("{} replications at N = 2000", runs.len()))?;
    ensure(runs.iter().all(|r| r.error.is_none()), || "a replication failed".into())?;
    let worst = runs.iter().map(|r| r.angle.min(PI - r.angle)).fold(0.0, f64::max);
    let summary = report.summaries.iter().find(|s| s.n == 2000).ok_or("no N = 2000 summary")?;
    let median = summary.objective.median;
    ensure(worst <= 0.1, || format!("final angle {worst:.3} rad from {{0, π}}"))?;
    ensure((0.007..=0.013).contains(&median), || format!("median M_N(x̂) = {median:.5}"))?;
    Ok(format!("20 runs: max angle to {{0, π}} = {worst:.4} rad; median M_N(x̂) = {median:.5}; {} certified", summary.certified))
}

fn criterion_8(report: &ExperimentReport) -> Check {
    let medians = report.medians();
    let fit = fit_rate(&medians).map_err(|e| e.to_string())?;
    let slope = fit.slope.ok_or("slope undefined")?;
    let listing: Vec<String> = medians.iter().map(|(n, d)| format!("{n}:{d:.4}")).collect();
    ensure((-0.65..=-0.35).contains(&slope), || format!("slope {slope:.3} (medians {})", listing.join(" ")))?;
    Ok(format!("slope {slope:.3} ± {:.3}; medians {}", fit.slope_half_width.unwrap_or(f64::NAN), listing.join(" ")))
}

fn criterion_9() -> Check {
    let config = study_config(5, vec![2000], 100, 109);
    let pop = PhasePopulation::new(ones(5), 0.1).map_err(|e| e.to_string())?;
    let summary = normality_check(&config, 2000, &pop).map_err(|e| e.to_string())?;
    ensure(summary.mean.abs() <= 0.3, || format!("mean {:.3} (variance {:.3})", summary.mean, summary.variance))?;
    ensure((0.5..=1.6).contains(&summary.variance), || format!("variance {:.3} (mean {:.3})", summary.variance, summary.mean))?;
    Ok(format!("{} statistics: mean {:.3}, variance {:.3}, {} skipped", summary.records.len(), summary.mean, summary.variance, summary.skipped))
}

fn criterion_10() -> Check {
    let mut rng = Stream::new(110, 0);
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = 4;
        for _ in 0..1000 {
            let b = normals(&mut rng, k);
            let a = normals(&mut rng, k * d);
            let beta = rng.normal();
            let xi = normals(&mut rng, d);
            let hidden: f64 = (0..k).map(|i| b[i] * dot(&a[i * d..(i + 1) * d], &xi).max(0.0)).sum();
            let network = (hidden + beta).max(0.0);
            let split = relu_two_layer_value(&b, &a, beta, &xi).map_err(|e| e.to_string())?;
            worst = worst.max((split.f_value - split.g_value - network).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("|f − g − network| = {worst:e}"))?;
    Ok(format!("3000 instances, k ∈ {{1,2,3}}: max |f − g − network| = {worst:.1e}"))
}

fn main() {
    let mut results: Vec<(usize, Check, f64)> = Vec::new();
    let mut record = |n: usize, f: &dyn Fn() -> Check| {
        let clock = Instant::now();
        let outcome = f();
        let secs = clock.elapsed().as_secs_f64();
        print_line(n, &outcome, secs);
        results.push((n, outcome, secs));
    };
    record(1, &criterion_1);
    record(2, &criterion_2);
    record(3, &criterion_3);
    record(4, &criterion_4);
    record(5, &criterion_5);
    record(10, &criterion_10);
    record(6, &criterion_6);

    let clock = Instant::now();
    let study = run_consistency_experiment(&study_config(20, vec![400, 800, 1200, 1600, 2000], 20, 108));
    let study_secs = clock.elapsed().as_secs_f64();
    match &study {
        Ok(report) => {
            record(7, &|| criterion_7(report));
            record(8, &|| criterion_8(report));
        }
        Err(e) => {
            record(7, &|| Err(format!("study failed: {e}")));
            record(8, &|| Err(format!("study failed: {e}")));
        }
    }
    println!("(rate study shared by criteria 7 and 8: {study_secs:.0}s)");
    record(9, &criterion_9);

    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary");
    for (n, outcome, secs) in &results {
        print_line(*n, outcome, *secs);
    }
    let failed = results.iter().filter(|r| r.1.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn print_line(n: usize, outcome: &Check, secs: f64) {
    match outcome {
        Ok(msg) => println!("[PASS] criterion {n}: {msg} ({secs:.1}s)"),
        Err(msg) => println!("[FAIL] criterion {n}: {msg} ({secs:.1}s)"),
    }
}
