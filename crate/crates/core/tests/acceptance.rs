//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`). Every
//! tolerance is pinned here; all randomness is seeded, so reruns reproduce
//! these numbers exactly.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use arxlab::arx::{simulate, stream_rng, ArxSystem, GaussianController, NoiseSpec, SEARCH_STREAM};
use arxlab::dfc::{
    counterfactual_gradient, counterfactual_loss, default_horizon, run_dfc_adaptive,
    CounterfactualState, DfcPolicy, DfcRunConfig, DfcSet, LossOracle,
};
use arxlab::harness::{
    best_in_hindsight_dfc, fit_regret_exponent, fit_regret_polylog, regret_quadratic, RegretTrace,
};
use arxlab::hokalman::{
    build_hankel, default_split, markov_roundtrip_error, realize, RealizedSystem,
};
use arxlab::linalg::{gaussian_matrix, spectral_radius, sym_eig_range};
use arxlab::ofu::{
    bellman_residual, bellman_residual_mc, run_ofu_adaptive, run_with_controller, solve_dare,
    solve_dare_for_system, ModelMats, OfuRunConfig, QuadraticCost, SearchBudget,
};
use arxlab::sysid::{
    attach_confidence, ellipsoid_membership, estimation_error, rls_from_log, ConfidenceParams,
};
use arxlab::UpdateMode;

fn scalar_fixture(noise: NoiseSpec) -> ArxSystem {
    ArxSystem::scalar(0.5, 1.0, 1.0, 0.2, noise).unwrap()
}

fn unit_cost() -> QuadraticCost {
    QuadraticCost::identity(1, 1)
}

fn unit_loss() -> LossOracle {
    LossOracle::quadratic(DMatrix::identity(1, 1), DMatrix::identity(1, 1)).unwrap()
}

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} -- {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_stable_system(rng: &mut impl Rng, n: usize, m: usize, p: usize) -> ArxSystem {
    loop {
        let mut a = gaussian_matrix(rng, n, n);
        a *= 0.6 / spectral_radius(&a).max(1e-12);
        let b = gaussian_matrix(rng, n, p);
        let c = gaussian_matrix(rng, m, n);
        let f = gaussian_matrix(rng, n, m) * 0.1;
        if let Ok(sys) = ArxSystem::new(a, b, c, f, NoiseSpec::zero(m)) {
            return sys;
        }
    }
}

/// Criterion 1 -- noiseless identification on the scalar fixture.
///
/// Implemented exactly as stated: e = 0, lambda = 1e-9, h = 20, Gaussian
/// excitation, Frobenius recovery below 1e-6. This is expected to FAIL: with
/// zero noise the fixture satisfies y_t = 0.7 y_{t-1} + u_{t-1} exactly, so
/// the output lags of every regressor are linear functions of the windowed
/// history, the design matrix is exactly singular along h-1 directions, and
/// ridge regression returns the minimum-norm interpolant (~0.49 away from
/// the true coefficients) for every horizon, sample size and excitation.
/// Noise is what makes the deeper lags identifiable; the attainable parts
/// (exact interpolation, vanishing V-weighted error, recovery under noise)
/// are asserted in the sysid unit tests.
#[test]
fn criterion_01_noiseless_identification() {
    let start = Instant::now();
    let sys = scalar_fixture(NoiseSpec::zero(1));
    let mut ctrl = GaussianController::new(1, 1.0, 1);
    let log = simulate(&sys, &mut ctrl, 20_000, 1).unwrap();
    let h = 20;
    let est = rls_from_log(&log, h, 1e-9).unwrap();
    let truth = sys.markov_parameters(h).unwrap();
    let err = estimation_error(&est, &truth).unwrap();
    let elapsed = start.elapsed();
    let pass = err < 1e-6 && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "noiseless identification",
        pass,
        &format!(
            "|G_hat - G|_F = {err:.6e} (< 1e-6 required), runtime {elapsed:?}; \
             structurally unidentifiable without noise, see test doc comment"
        ),
    );
}

/// Criterion 2 -- 1/sqrt(T) estimation rate and confidence membership.
#[test]
fn criterion_02_estimation_rate_and_membership() {
    let start = Instant::now();
    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let h = default_horizon(&sys, 64_000).unwrap();
    let truth = sys.markov_parameters(h).unwrap();
    let delta = 0.05;
    let mut members = 0usize;
    let mut total = 0usize;
    let mut pts = Vec::new();
    for &t in &[1_000usize, 4_000, 16_000, 64_000] {
        let mut errs = Vec::new();
        for seed in 1..=20u64 {
            let mut ctrl = GaussianController::new(1, 1.0, seed);
            let log = simulate(&sys, &mut ctrl, t, seed).unwrap();
            let mut est = rls_from_log(&log, h, 1.0).unwrap();
            let params = ConfidenceParams {
                s: 2.0,
                delta,
                r: 1.0,
                t_total: t,
            };
            let beta = attach_confidence(&mut est, &params).unwrap();
            errs.push(estimation_error(&est, &truth).unwrap());
            members += ellipsoid_membership(&est, &truth, beta).unwrap() as usize;
            total += 1;
        }
        pts.push((t, median_of(errs)));
    }
    let fit = fit_regret_exponent(&pts).unwrap();
    let rate = members as f64 / total as f64;
    let elapsed = start.elapsed();
    let pass = (-0.65..=-0.35).contains(&fit.slope)
        && rate >= 1.0 - 2.0 * delta
        && elapsed.as_secs_f64() < 120.0;
    report(
        2,
        "estimation rate + membership",
        pass,
        &format!(
            "slope {:.3} in [-0.65, -0.35], membership {members}/{total} >= {:.2}, runtime {elapsed:?}",
            fit.slope,
            1.0 - 2.0 * delta
        ),
    );
}

/// Criterion 3 -- realization roundtrip on exact parameters, similarity
/// invariance of the error metric.
#[test]
fn criterion_03_realization_roundtrip() {
    let mut rng = stream_rng(3, SEARCH_STREAM);
    let mut worst_roundtrip = 0.0f64;
    let mut worst_invariance = 0.0f64;
    for _ in 0..10 {
        let sys = random_stable_system(&mut rng, 3, 2, 2);
        let op = sys.markov_parameters(9).unwrap();
        let (d1, d2) = default_split(9);
        let realized = realize(&build_hankel(&op, d1, d2).unwrap(), 3).unwrap();
        let err = markov_roundtrip_error(&realized, &op).unwrap();
        worst_roundtrip = worst_roundtrip.max(err);

        let q = gaussian_matrix(&mut rng, 3, 3).qr().q();
        let scales = DMatrix::from_diagonal(&DVector::from_vec(vec![0.6, 1.1, 1.7]));
        let t = q * scales;
        let t_inv = t.clone().try_inverse().unwrap();
        let moved = RealizedSystem {
            a_hat: &t * &realized.a_hat * &t_inv,
            b_hat: &t * &realized.b_hat,
            c_hat: &realized.c_hat * &t_inv,
            f_hat: &t * &realized.f_hat,
            n: realized.n,
            sigma_n: realized.sigma_n,
        };
        let moved_err = markov_roundtrip_error(&moved, &op).unwrap();
        worst_invariance = worst_invariance.max((moved_err - err).abs());
    }
    let pass = worst_roundtrip < 1e-6 && worst_invariance < 1e-9;
    report(
        3,
        "realization roundtrip",
        pass,
        &format!(
            "worst roundtrip {worst_roundtrip:.3e} (< 1e-6), worst similarity drift \
             {worst_invariance:.3e} (< 1e-9) over 10 random order-3 systems"
        ),
    );
}

/// Criterion 4 -- Riccati correctness: scalar closed form plus residuals on
/// random stabilizable systems.
#[test]
fn criterion_04_riccati_correctness() {
    // Oracle: for Abar = 0.7 the fixed point solves P^2 - 0.49 P - 1 = 0.
    let p_star = (0.49 + (0.49f64 * 0.49 + 4.0).sqrt()) / 2.0;
    let kx_star = -p_star * 0.5 / (1.0 + p_star);
    let ky_star = -p_star * 0.2 / (1.0 + p_star);
    let j_star = 1.0 + 0.04 * p_star / (1.0 + p_star);

    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let sol = solve_dare_for_system(&sys, &unit_cost(), 1e-13, 200_000).unwrap();
    let scalar_ok = (sol.p[(0, 0)] - p_star).abs() < 1e-6
        && (sol.k_x[(0, 0)] - kx_star).abs() < 1e-6
        && (sol.k_y[(0, 0)] - ky_star).abs() < 1e-6
        && (sol.j_star - j_star).abs() < 1e-6;

    let mut rng = stream_rng(4, SEARCH_STREAM);
    let mut worst_residual = 0.0f64;
    let mut worst_eig = 0.0f64;
    for _ in 0..20 {
        let n = 2 + (rng.random::<u32>() % 2) as usize;
        let m = 1 + (rng.random::<u32>() % 2) as usize;
        let p = 1 + (rng.random::<u32>() % 2) as usize;
        let sys = random_stable_system(&mut rng, n, m, p);
        let qroot = gaussian_matrix(&mut rng, m, m);
        let rroot = gaussian_matrix(&mut rng, p, p);
        let cost = QuadraticCost::new(
            &qroot * qroot.transpose(),
            DMatrix::identity(p, p) + &rroot * rroot.transpose(),
        )
        .unwrap();
        let sig = DMatrix::identity(m, m);
        let sol = solve_dare(
            sys.a(),
            sys.b(),
            sys.c(),
            sys.f(),
            &sig,
            &cost,
            1e-13,
            200_000,
        )
        .unwrap();
        worst_residual = worst_residual.max(sol.residual / (1.0 + sol.p.norm()));
        let (lmin, _) = sym_eig_range(&sol.p);
        worst_eig = worst_eig.max((-lmin).max(0.0));
    }
    let pass = scalar_ok && worst_residual <= 1e-10 && worst_eig <= 1e-10;
    report(
        4,
        "riccati correctness",
        pass,
        &format!(
            "scalar P {:.6} K_x {:.6} K_y {:.6} J* {:.6} each within 1e-6 of the \
             quadratic-root oracle; worst relative residual {worst_residual:.3e} <= 1e-10, \
             worst negative eigenvalue {worst_eig:.3e} over 20 random systems",
            sol.p[(0, 0)],
            sol.k_x[(0, 0)],
            sol.k_y[(0, 0)],
            sol.j_star
        ),
    );
}

/// Criterion 5 -- the optimality-equation oracle: analytic residual at
/// machine precision, and a 10% wrong fixed point detected far outside the
/// Monte Carlo band.
#[test]
fn criterion_05_bellman_oracle() {
    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let cost = unit_cost();
    let sol = solve_dare_for_system(&sys, &cost, 1e-13, 200_000).unwrap();
    let analytic = bellman_residual(&sys, &cost, &sol, 500, 5).unwrap();
    let (mc_ok, band_ok) = bellman_residual_mc(&sys, &cost, &sol, 2_000_000, 5).unwrap();

    let mut wrong = sol.clone();
    wrong.p *= 1.1;
    let btp = sys.b().transpose() * &wrong.p;
    let s = &cost.r + &btp * sys.b();
    let chol = nalgebra::Cholesky::new(s).unwrap();
    wrong.k_x = -chol.solve(&(&btp * sys.a()));
    wrong.k_y = -chol.solve(&(&btp * sys.f()));
    let pbar = wrong.p_bar(sys.b(), &cost).unwrap();
    wrong.j_star = (&sys.noise.sigma_e * (&cost.q + sys.f().transpose() * &pbar * sys.f())).trace();
    let (wrong_mc, wrong_band) = bellman_residual_mc(&sys, &cost, &wrong, 2_000_000, 5).unwrap();

    let pass = analytic <= 1e-9 && mc_ok <= band_ok && wrong_mc > 10.0 * wrong_band;
    report(
        5,
        "bellman oracle",
        pass,
        &format!(
            "analytic residual {analytic:.3e} <= 1e-9; correct MC {mc_ok:.3e} within band \
             {band_ok:.3e}; perturbed MC {wrong_mc:.3e} > 10 x band {wrong_band:.3e}"
        ),
    );
}

/// Criterion 6 -- analytic counterfactual gradients match central finite
/// differences on 20 random instances.
#[test]
fn criterion_06_gradient_check() {
    let mut rng = stream_rng(6, SEARCH_STREAM);
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let m = 1 + (rng.random::<u32>() % 2) as usize;
        let p = 1 + (rng.random::<u32>() % 2) as usize;
        let n = 1 + (rng.random::<u32>() % 3) as usize;
        let sys = loop {
            let mut a = gaussian_matrix(&mut rng, n, n);
            a *= 0.55 / spectral_radius(&a).max(1e-12);
            let b = gaussian_matrix(&mut rng, n, p);
            let c = gaussian_matrix(&mut rng, m, n);
            let f = gaussian_matrix(&mut rng, n, m) * 0.1;
            if let Ok(sys) = ArxSystem::new(a, b, c, f, NoiseSpec::gaussian_iso(m, 1.0).unwrap()) {
                break sys;
            }
        };
        let qroot = gaussian_matrix(&mut rng, m, m);
        let rroot = gaussian_matrix(&mut rng, p, p);
        let loss = LossOracle::quadratic(
            &qroot * qroot.transpose() + DMatrix::identity(m, m) * 0.1,
            &rroot * rroot.transpose() + DMatrix::identity(p, p) * 0.1,
        )
        .unwrap();

        let h = 3;
        let window = 9;
        let steps = 30;
        let mut ctrl = GaussianController::new(p, 1.0, 100 + trial);
        let log = simulate(&sys, &mut ctrl, steps, 100 + trial).unwrap();
        let mut st = CounterfactualState::new(sys.markov_parameters(h).unwrap(), 0);
        st.rebuild_history(&log.outputs, &log.inputs, steps);
        let policy = DfcPolicy {
            taps: (0..window)
                .map(|_| gaussian_matrix(&mut rng, p, m) * 0.2)
                .collect(),
        };
        let t = steps - 1;
        let grad = counterfactual_gradient(&policy, &st, &loss, t);
        let step = 1e-6;
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for l in 0..window {
            for i in 0..p {
                for j in 0..m {
                    let mut plus = policy.clone();
                    plus.taps[l][(i, j)] += step;
                    let mut minus = policy.clone();
                    minus.taps[l][(i, j)] -= step;
                    let fd = (counterfactual_loss(&plus, &st, &loss, t)
                        - counterfactual_loss(&minus, &st, &loss, t))
                        / (2.0 * step);
                    diff2 += (grad[l][(i, j)] - fd).powi(2);
                    norm2 += grad[l][(i, j)].powi(2);
                }
            }
        }
        worst = worst.max((diff2.sqrt()) / norm2.sqrt().max(1.0));
    }
    let pass = worst <= 1e-5;
    report(
        6,
        "gradient check",
        pass,
        &format!("worst relative finite-difference mismatch {worst:.3e} <= 1e-5 over 20 instances"),
    );
}

/// Criterion 7 -- sublinear regret of the gradient-descent controller, with
/// the closed-loop variant beating explore-and-commit on the same grid; the
/// polylog-vs-power r^2 comparison is reported alongside.
#[test]
fn criterion_07_dfc_sublinearity() {
    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let loss = unit_loss();
    let grid = [5_000usize, 20_000, 80_000];
    let seeds: Vec<u64> = (1..=10).collect();
    let mut comparators: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();

    let mut fits = Vec::new();
    for mode in [UpdateMode::ClosedLoop, UpdateMode::ExploreCommit] {
        let mut pts = Vec::new();
        for &t in &grid {
            let h = default_horizon(&sys, t).unwrap();
            let set = DfcSet::new(0.5, 1.0, 3 * h, h).unwrap();
            let warmup = match mode {
                UpdateMode::ClosedLoop => 250,
                UpdateMode::ExploreCommit => (t as f64).sqrt().ceil() as usize,
            };
            let mut finals = Vec::new();
            for &seed in &seeds {
                let cfg = DfcRunConfig {
                    total_steps: t,
                    warmup,
                    horizon: h,
                    window: 3 * h,
                    sigma_u: 1.0,
                    eta_scale: 0.1,
                    lambda: 1.0,
                    seed,
                };
                let run = run_dfc_adaptive(&sys, &set, &loss, mode, &cfg).unwrap();
                // The noise stream is input-independent, so the hindsight
                // comparator is shared between the two modes of a cell.
                let comp = comparators.entry((t, seed)).or_insert_with(|| {
                    best_in_hindsight_dfc(&sys, &set, &loss, &run.log.noises, 300)
                        .unwrap()
                        .1
                });
                let trace = RegretTrace::new(run.costs, comp.clone(), mode, seed, warmup).unwrap();
                finals.push(trace.final_regret());
            }
            pts.push((t, median_of(finals)));
        }
        let fit = fit_regret_exponent(&pts).unwrap();
        let poly = fit_regret_polylog(&pts).unwrap();
        println!(
            "  dfc {mode}: median regrets {:?}, power slope {:.3} (r^2 {:.4}), \
             polylog k={} (r^2 {:.4})",
            pts.iter().map(|p| p.1.round()).collect::<Vec<_>>(),
            fit.slope,
            fit.r_squared,
            poly.k,
            poly.r_squared
        );
        fits.push((fit, poly));
    }
    let (clu, ec) = (&fits[0], &fits[1]);
    let pass = clu.0.slope < 0.6 && clu.0.slope < ec.0.slope && clu.1.r_squared >= clu.0.r_squared;
    report(
        7,
        "dfc sublinearity",
        pass,
        &format!(
            "closed-loop slope {:.3} < 0.6; closed-loop {:.3} < explore-commit {:.3}; \
             closed-loop polylog r^2 {:.4} >= power r^2 {:.4}",
            clu.0.slope, clu.0.slope, ec.0.slope, clu.1.r_squared, clu.0.r_squared
        ),
    );
}

/// Criterion 8 -- optimistic-control rates: closed-loop exponent in the
/// sqrt-T band and explore-and-commit above it.
#[test]
fn criterion_08_ofu_rates() {
    let start = Instant::now();
    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let cost = unit_cost();
    let grid = [5_000usize, 20_000, 80_000];
    let seeds: Vec<u64> = (1..=10).collect();
    let mut slopes = Vec::new();
    for mode in [UpdateMode::ClosedLoop, UpdateMode::ExploreCommit] {
        let mut pts = Vec::new();
        for &t in &grid {
            let warmup = match mode {
                UpdateMode::ClosedLoop => 300,
                UpdateMode::ExploreCommit => (t as f64).powf(2.0 / 3.0).ceil() as usize,
            };
            let mut finals = Vec::new();
            for &seed in &seeds {
                let cfg = OfuRunConfig {
                    total_steps: t,
                    warmup,
                    horizon: 9,
                    order: 1,
                    sigma_u: 1.0,
                    lambda: 1.0,
                    seed,
                    confidence: ConfidenceParams {
                        s: 2.0,
                        delta: 0.05,
                        r: 1.0,
                        t_total: t,
                    },
                    budget: SearchBudget {
                        samples: 128,
                        refine: 64,
                    },
                    adm: Default::default(),
                    certainty_equivalent: false,
                };
                let run = run_ofu_adaptive(&sys, &cost, mode, &cfg).unwrap();
                let trace =
                    regret_quadratic(run.costs, run.j_star_true, mode, seed, warmup).unwrap();
                finals.push(trace.final_regret());
            }
            pts.push((t, median_of(finals)));
        }
        let fit = fit_regret_exponent(&pts).unwrap();
        println!(
            "  ofu {mode}: median regrets {:?}, slope {:.3}",
            pts.iter().map(|p| p.1.round()).collect::<Vec<_>>(),
            fit.slope
        );
        slopes.push(fit.slope);
    }
    let elapsed = start.elapsed();
    let pass = (0.35..=0.75).contains(&slopes[0])
        && slopes[1] > slopes[0]
        && elapsed.as_secs_f64() < 600.0;
    report(
        8,
        "ofu rates",
        pass,
        &format!(
            "closed-loop slope {:.3} in [0.35, 0.75]; explore-commit {:.3} above it; runtime {elapsed:?}",
            slopes[0], slopes[1]
        ),
    );
}

/// Criterion 9 -- the true optimal controller's empirical average cost
/// matches J* within 2% over 1e5 steps.
#[test]
fn criterion_09_average_cost_consistency() {
    let sys = scalar_fixture(NoiseSpec::gaussian_iso(1, 1.0).unwrap());
    let cost = unit_cost();
    let sol = solve_dare_for_system(&sys, &cost, 1e-13, 200_000).unwrap();
    let mats = ModelMats {
        a: sys.a().clone(),
        b: sys.b().clone(),
        c: sys.c().clone(),
        f: sys.f().clone(),
    };
    let run = run_with_controller(&sys, &cost, &mats, &sol, 100_000, 4).unwrap();
    let mean = run.costs.iter().sum::<f64>() / run.costs.len() as f64;
    let rel = (mean - sol.j_star).abs() / sol.j_star;
    let pass = rel < 0.02;
    report(
        9,
        "average-cost consistency",
        pass,
        &format!(
            "empirical mean {mean:.5} vs J* {:.5} (relative gap {rel:.4} < 0.02)",
            sol.j_star
        ),
    );
}

/// Criterion 10 -- CLI determinism: identical config and seeds reproduce
/// byte-identical outputs.
#[test]
fn criterion_10_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_arxlab");
    let dir = std::env::temp_dir().join("arxlab_acceptance_determinism");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("exp.json");
    std::fs::write(
        &config,
        r#"{
  "name": "determinism",
  "system": {
    "n": 1, "m": 1, "p": 1,
    "a": [[0.5]], "b": [[1.0]], "c": [[1.0]], "f": [[0.2]],
    "noise": {"kind": "gaussian", "sub_gaussian_r": 1.0, "sigma_e": [[1.0]], "sigma_e_sq_lower": 1.0}
  },
  "algorithm": "dfc",
  "mode": "closed_loop",
  "cost": {"q": [[1.0]], "r": [[1.0]]},
  "t_grid": [400, 800],
  "seeds": [1, 2],
  "warmup": {"rule": "fixed", "tau": 50},
  "horizon": 6,
  "eta_scale": 0.1
}"#,
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args(["dfc", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--threads", "2"])
            .status()
            .unwrap();
        assert!(status.success(), "cli run failed");
    };
    let (out_a, out_b) = (dir.join("a"), dir.join("b"));
    run(&out_a);
    run(&out_b);

    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    let mut identical = true;
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        if a != b {
            identical = false;
            println!("  file {name} differs between reruns");
        }
    }
    report(
        10,
        "cli determinism",
        identical,
        &format!("{} output files byte-identical across reruns", names.len()),
    );
}
