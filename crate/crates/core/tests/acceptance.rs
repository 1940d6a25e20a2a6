//! End-to-end acceptance checks at their pinned tolerances. Each check prints
//! one `PASS`/`FAIL` line; the test fails if any check fails.
//!
//! Run with `cargo test -p dgml --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use dgml::discretization::{source_vector, BoundaryCondition, DiscretizationConfig, OperatorRole};
use dgml::lfa::{self, block_eigenvalues, lambda_closed_form, symbol_e};
use dgml::optimize::{
    clustering_parameters, optimize_1d_alpha, optimize_1d_alpha_delta, optimize_2d, solve_clustering_system,
};
use dgml::solver::{gmres, stationary_solve, StationaryOptions};
use dgml::spectrum::{
    self, eigenvalues_dense, error_report, lanczos_radius, multiset_distance, LanczosOptions, DEFAULT_CLUSTER_TOL,
};
use dgml::twolevel::{MethodParams, TwoLevel};
use dgml::Error;
use faer::c64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Published clustering triple, rounded to six decimals.
const PUBLISHED_C: f64 = 0.564604;
const PUBLISHED_DELTA0: f64 = 1.516980;
const PUBLISHED_ALPHA: f64 = 0.908154;
const PUBLISHED_RHO: f64 = 0.19732;

/// Upper bound on the relative radius improvement of the 2D optimum over
/// the 1D clustering triple (measured: about 0.09).
const MAX_2D_IMPROVEMENT: f64 = 0.15;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn random_params(rng: &mut StdRng) -> MethodParams {
    MethodParams::new(
        rng.random_range(0.3..1.0),
        rng.random_range(1.2..4.0),
        rng.random_range(0.1..0.9),
    )
    .unwrap()
}

fn presets() -> Vec<MethodParams> {
    let (a, d, _) = optimize_1d_alpha_delta(0.5);
    vec![
        MethodParams::classical(),
        MethodParams::unchecked(a, d, 0.5),
        clustering_parameters().params,
    ]
}

fn optimal_parameters() -> Outcome {
    let t = Instant::now();
    let s = clustering_parameters();
    let elapsed = t.elapsed();
    let p = s.params;
    let dev = [
        (p.discontinuity - PUBLISHED_C).abs(),
        (p.penalty - PUBLISHED_DELTA0).abs(),
        (p.alpha - PUBLISHED_ALPHA).abs(),
    ];
    let quartic = s.quartic_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let ok = dev.iter().all(|d| *d <= 1e-6) && quartic < 1e-12 && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "c={:.9} δ₀={:.9} α={:.9}; |Δ| = ({:.1e}, {:.1e}, {:.1e}); quartic {quartic:.1e}; {elapsed:.2?}",
            p.discontinuity, p.penalty, p.alpha, dev[0], dev[1], dev[2]
        ),
    )
}

fn nonlinear_consistency() -> Outcome {
    let s = clustering_parameters();
    let worst = s.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    match solve_clustering_system(&MethodParams::new(0.9, 1.5, 0.55).unwrap()) {
        Ok(n) => {
            let gap = n
                .params
                .as_array()
                .iter()
                .zip(s.params.as_array())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            outcome(
                worst < 1e-9 && gap <= 1e-8,
                format!("residual {worst:.1e}; Newton gap {gap:.1e} after {} steps", n.iterations),
            )
        }
        Err(e) => outcome(false, format!("Newton failed: {e}")),
    }
}

fn perfect_clustering() -> Outcome {
    let p = clustering_parameters().params;
    let mods: Vec<f64> = lfa::phase_grid(100)
        .into_iter()
        .flat_map(|phi| {
            let s = lfa::lambda_closed_form_phase(phi, &p).unwrap();
            [s.lambda_plus.norm(), s.lambda_minus.norm()]
        })
        .collect();
    let mean = mods.iter().sum::<f64>() / mods.len() as f64;
    let spread = mods.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    outcome(
        spread < 1e-8 && (mean - PUBLISHED_RHO).abs() <= 1e-4,
        format!("|λ±| = {mean:.8}, spread {spread:.1e}"),
    )
}

fn baseline_radius() -> Outcome {
    let (a, d, rho) = optimize_1d_alpha_delta(0.5);
    let (ac, _) = optimize_1d_alpha(2.0, 0.5);
    outcome(
        (rho - 0.2).abs() <= 1e-3 && (ac - 8.0 / 9.0).abs() <= 1e-3,
        format!("c=½: α={a:.6} δ₀={d:.6} ρ={rho:.6}; δ₀=2: α={ac:.6}"),
    )
}

fn lfa_master_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let mut sets = presets();
    sets.extend((0..10).map(|_| random_params(&mut rng)));
    let mut worst = 0.0f64;
    for cells in [4, 8, 16, 32] {
        for p in &sets {
            match lfa::dense_oracle(cells, p) {
                Ok(d) => worst = worst.max(d.spectrum),
                Err(e) => return outcome(false, format!("J={cells} {p:?}: {e}")),
            }
        }
    }
    let elapsed = t.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(30),
        format!("{} parameter sets, max multiset distance {worst:.1e}; {elapsed:.2?}", sets.len()),
    )
}

fn closed_form_check() -> Outcome {
    let cells = 32;
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    let (mut checked, mut kernel) = (0, 0);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        for k in 0..cells / 2 {
            // Ê does not exist where Â₀ is singular; the deflated block there
            // is a different operator
            let e = match symbol_e(k, cells, &p) {
                Ok(b) => b,
                Err(Error::KernelFrequency { .. }) => {
                    kernel += 1;
                    continue;
                }
                Err(e) => return outcome(false, format!("k={k}: {e}")),
            };
            let s = match lambda_closed_form(k, cells, &p) {
                Ok(s) => s,
                Err(e) => return outcome(false, format!("k={k} {p:?}: {e}")),
            };
            let zero = c64::new(0.0, 0.0);
            let expect = [zero, zero, s.lambda_plus, s.lambda_minus];
            worst = worst.max(multiset_distance(&block_eigenvalues(&e.entries).unwrap(), &expect));
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-9 && checked > 0,
        format!("{checked} blocks, max deviation {worst:.1e}; {kernel} kernel-frequency blocks skipped"),
    )
}

fn gmres_finite_steps() -> Outcome {
    let t = Instant::now();
    let cluster = clustering_parameters().params;
    let classical = MethodParams::classical();
    let mut counts = Vec::new();
    for cells in [16, 32, 64, 128, 256] {
        let mut row = [0usize; 2];
        for (slot, p) in row.iter_mut().zip([cluster, classical]) {
            let cfg = DiscretizationConfig::one_d(cells, p.penalty, BoundaryCondition::Dirichlet).unwrap();
            let tl = TwoLevel::new(&cfg, &p).unwrap();
            let b = source_vector(&cfg);
            let r = gmres(|x| tl.apply_a(x), |x| tl.apply_preconditioner(x), &b, 1e-8, tl.dofs());
            *slot = if r.converged { r.iterations } else { usize::MAX };
        }
        counts.push((cells, row));
    }
    let elapsed = t.elapsed();
    let first = counts[0].1[0];
    let constant = counts.iter().all(|(_, r)| r[0] == first);
    let dominated = counts.iter().all(|(_, r)| r[1] > r[0]);
    let table: Vec<String> = counts.iter().map(|(j, r)| format!("J={j}: {}/{}", r[0], r[1])).collect();
    outcome(
        constant && first <= 8 && dominated && elapsed < Duration::from_secs(60),
        format!("clustering/classical {}; {elapsed:.2?}", table.join(", ")),
    )
}

fn stationary_contraction() -> Outcome {
    let p = clustering_parameters().params;
    let cfg = DiscretizationConfig::one_d(32, p.penalty, BoundaryCondition::Periodic).unwrap();
    let tl = TwoLevel::new(&cfg, &p).unwrap();
    let b: Vec<f64> = (0..tl.dofs()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
    let opts = StationaryOptions {
        tol: 1e-12,
        max_iter: 500,
        deflate_mean: true,
    };
    match stationary_solve(|x| tl.apply_a(x), |x| tl.apply_preconditioner(x), &b, None, opts) {
        Ok(r) => {
            let q = r.contraction.unwrap_or(f64::NAN);
            outcome(
                (q - PUBLISHED_RHO).abs() <= 0.005,
                format!("contraction {q:.6} over {} iterations", r.iterations),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn two_d_proximity() -> Outcome {
    let t = Instant::now();
    let p = clustering_parameters().params;
    let cfg = DiscretizationConfig::two_d(32, p.penalty, BoundaryCondition::Dirichlet).unwrap();
    let tl = TwoLevel::new(&cfg, &p).unwrap();
    let report = match error_report(&tl, DEFAULT_CLUSTER_TOL) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rho_dense = report.spectral_radius;
    let rho_lanczos = lanczos_radius(&tl, LanczosOptions::default()).unwrap();
    let opt = match optimize_2d(&cfg, &p, 50) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let improvement = (opt.start_rho - opt.rho) / opt.start_rho;
    let ok = rho_dense < 1.0
        && (rho_dense - rho_lanczos).abs() <= 1e-6
        && (0.0..=MAX_2D_IMPROVEMENT).contains(&improvement)
        && report.clusters.len() > 3;
    outcome(
        ok,
        format!(
            "ρ(1D triple) = {rho_dense:.8} (Lanczos {rho_lanczos:.8}); 2D optimum ρ = {:.6} at α={:.4} δ₀={:.4} c={:.4}, improvement {improvement:.3}; {} clusters; {:.1?}",
            opt.rho,
            opt.params.alpha,
            opt.params.penalty,
            opt.params.discontinuity,
            report.clusters.len(),
            t.elapsed()
        ),
    )
}

fn positivity() -> Outcome {
    let p = clustering_parameters().params;
    let cfg = DiscretizationConfig::one_d(32, p.penalty, BoundaryCondition::Dirichlet).unwrap();
    let tl = TwoLevel::new(&cfg, &p).unwrap();
    let op = tl.preconditioned_operator();
    assert_eq!(op.role, OperatorRole::Preconditioned);
    let eigs = eigenvalues_dense(&op).unwrap();
    let report = spectrum::SpectrumReport::new(eigs, DEFAULT_CLUSTER_TOL, op.role);
    let (lo, im) = (report.min_real(), report.max_imag());
    outcome(lo > 0.0 && im < 1e-8, format!("min Re {lo:.6}, max |Im| {im:.1e}"))
}

#[test]
fn acceptance() {
    let checks: [Check; 10] = [
        ("optimal parameters", optimal_parameters),
        ("nonlinear-system consistency", nonlinear_consistency),
        ("perfect clustering", perfect_clustering),
        ("baseline radius", baseline_radius),
        ("LFA master oracle", lfa_master_oracle),
        ("closed-form eigenvalues", closed_form_check),
        ("GMRES finite-step behavior", gmres_finite_steps),
        ("stationary contraction", stationary_contraction),
        ("2D proximity", two_d_proximity),
        ("positivity of M⁻¹A", positivity),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        println!("[{}] {:>2} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed acceptance checks: {failed:?}");
}
