//! Optimistic control for quadratic costs: Riccati fixed points, the optimal
//! feedback law, a Bellman-equation test oracle, optimistic model selection
//! over confidence balls, and the adaptive control loop in both variants.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::arx::{
    check_finite, stream_rng, ArxSystem, TrajectoryLog, INPUT_STREAM, NOISE_STREAM, SEARCH_STREAM,
};
use crate::error::{Error, Result};
use crate::hokalman::{
    build_hankel, default_split, parameter_confidence, realize, ParameterRadii, RealizedSystem,
};
use crate::linalg::{gaussian_matrix, gaussian_vector, spectral_norm, sym_eig_range, symmetrize};
use crate::sysid::{attach_confidence, pe_diagnostic, rls_from_log, ConfidenceParams};
use crate::UpdateMode;

/// Quadratic stage cost `c(y, u) = y^T Q y + u^T R u` with Q >= 0, R > 0.
#[derive(Clone, Debug)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl QuadraticCost {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(Error::Dimension("cost weights must be square".into()));
        }
        if !crate::linalg::is_symmetric(&q, 1e-9) || !crate::linalg::is_symmetric(&r, 1e-9) {
            return Err(Error::Argument("cost weights must be symmetric".into()));
        }
        let (qlo, _) = sym_eig_range(&q);
        let (rlo, _) = sym_eig_range(&r);
        if qlo < -1e-9 {
            return Err(Error::Argument("Q must be positive semidefinite".into()));
        }
        if rlo <= 1e-9 * spectral_norm(&r).max(1.0) {
            return Err(Error::Argument("R must be positive definite".into()));
        }
        Ok(Self { q, r })
    }

    pub fn identity(m: usize, p: usize) -> Self {
        Self {
            q: DMatrix::identity(m, m),
            r: DMatrix::identity(p, p),
        }
    }

    pub fn stage(&self, y: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (y.transpose() * &self.q * y)[(0, 0)] + (u.transpose() * &self.r * u)[(0, 0)]
    }
}

/// Riccati fixed point with derived gains and average cost.
#[derive(Clone, Debug)]
pub struct DareSolution {
    pub p: DMatrix<f64>,
    pub k_x: DMatrix<f64>,
    pub k_y: DMatrix<f64>,
    /// Optimal average cost `tr(Sigma_E (Q + F^T Pbar F))`.
    pub j_star: f64,
    /// `|P - rhs(P)|_F` at convergence.
    pub residual: f64,
    pub iterations: usize,
}

impl DareSolution {
    /// `P - P B (R + B^T P B)^{-1} B^T P`.
    pub fn p_bar(&self, b: &DMatrix<f64>, cost: &QuadraticCost) -> Result<DMatrix<f64>> {
        p_bar_of(&self.p, b, cost)
    }
}

fn p_bar_of(p: &DMatrix<f64>, b: &DMatrix<f64>, cost: &QuadraticCost) -> Result<DMatrix<f64>> {
    let btp = b.transpose() * p;
    let s = &cost.r + &btp * b;
    let chol = Cholesky::new(symmetrize(&s))
        .ok_or_else(|| Error::Numerical("R + B^T P B not positive definite".into()))?;
    Ok(symmetrize(&(p - btp.transpose() * chol.solve(&btp))))
}

fn dare_rhs(
    p: &DMatrix<f64>,
    acl: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ctqc: &DMatrix<f64>,
    cost: &QuadraticCost,
) -> Result<DMatrix<f64>> {
    let pbar = p_bar_of(p, b, cost)?;
    Ok(symmetrize(&(ctqc + acl.transpose() * pbar * acl)))
}

/// Solve the Riccati equation
/// `P = C^T Q C + (A+FC)^T (P - P B (R + B^T P B)^{-1} B^T P) (A+FC)`
/// by fixed-point iteration from `P_0 = C^T Q C`, then derive the gains
/// `K_x = -(R + B^T P B)^{-1} B^T P A`, `K_y = -(R + B^T P B)^{-1} B^T P F`
/// and the average cost under noise covariance `sigma_e`.
#[allow(clippy::too_many_arguments)]
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    f: &DMatrix<f64>,
    sigma_e: &DMatrix<f64>,
    cost: &QuadraticCost,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution> {
    let n = a.nrows();
    if b.nrows() != n || c.ncols() != n || f.nrows() != n {
        return Err(Error::Dimension("system matrices inconsistent".into()));
    }
    if cost.q.nrows() != c.nrows() || cost.r.nrows() != b.ncols() {
        return Err(Error::Dimension(
            "cost weights do not match system dims".into(),
        ));
    }
    let acl = a + f * c;
    let ctqc = symmetrize(&(c.transpose() * &cost.q * c));
    let mut p = ctqc.clone();
    let mut iterations = 0;
    loop {
        let next = dare_rhs(&p, &acl, b, &ctqc, cost)?;
        let delta = (&next - &p).norm();
        p = next;
        iterations += 1;
        if delta <= tol * (1.0 + p.norm()) {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::Numerical(format!(
                "riccati iteration did not converge in {max_iter} steps \
                 (last delta {delta:.3e}, |P| = {:.3e})",
                p.norm()
            )));
        }
    }
    let residual = (&p - dare_rhs(&p, &acl, b, &ctqc, cost)?).norm();

    let btp = b.transpose() * &p;
    let s = &cost.r + &btp * b;
    let chol = Cholesky::new(symmetrize(&s))
        .ok_or_else(|| Error::Numerical("R + B^T P B not positive definite".into()))?;
    let k_x = -chol.solve(&(&btp * a));
    let k_y = -chol.solve(&(&btp * f));
    let pbar = p_bar_of(&p, b, cost)?;
    let j_star = (sigma_e * (&cost.q + f.transpose() * &pbar * f)).trace();
    Ok(DareSolution {
        p,
        k_x,
        k_y,
        j_star,
        residual,
        iterations,
    })
}

pub fn solve_dare_for_system(
    system: &ArxSystem,
    cost: &QuadraticCost,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution> {
    solve_dare(
        system.a(),
        system.b(),
        system.c(),
        system.f(),
        &system.noise.sigma_e,
        cost,
        tol,
        max_iter,
    )
}

/// The optimal feedback `u = K_x x + K_y y`.
pub fn optimal_input(sol: &DareSolution, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    &sol.k_x * x + &sol.k_y * y
}

/// Mean absolute defect of the average-cost optimality equation at random
/// state/output pairs, with the one-step expectation evaluated in closed
/// form (the noise enters quadratically, so the expectation replaces the
/// noise outer product by its covariance). Normalized by |J*|.
pub fn bellman_residual(
    system: &ArxSystem,
    cost: &QuadraticCost,
    sol: &DareSolution,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let pbar = sol.p_bar(system.b(), cost)?;
    let acl = system.feedback_matrix();
    let next_quad = symmetrize(
        &(acl.transpose() * &pbar * &acl + system.c().transpose() * &cost.q * system.c()),
    );
    let noise_term =
        (&system.noise.sigma_e * (&cost.q + system.f().transpose() * &pbar * system.f())).trace();
    let mut rng = stream_rng(seed, SEARCH_STREAM);
    let (n, m) = (system.state_dim(), system.output_dim());
    let mut acc = 0.0;
    for _ in 0..samples {
        let x = gaussian_vector(&mut rng, n);
        let y = gaussian_vector(&mut rng, m);
        let u = optimal_input(sol, &x, &y);
        let xbar = system.a() * &x + system.f() * &y;
        let lhs = sol.j_star
            + (xbar.transpose() * &pbar * &xbar)[(0, 0)]
            + (y.transpose() * &cost.q * &y)[(0, 0)];
        let x1 = system.a() * &x + system.b() * &u + system.f() * &y;
        let rhs = cost.stage(&y, &u) + (x1.transpose() * &next_quad * &x1)[(0, 0)] + noise_term;
        acc += (lhs - rhs).abs();
    }
    Ok(acc / samples as f64 / sol.j_star.abs().max(1e-300))
}

/// Monte Carlo companion to [`bellman_residual`]: noise sampled per step,
/// returning the normalized |mean defect| together with a 3-standard-error
/// band for it. State/output pairs are drawn at scale 5 so a wrong fixed
/// point's quadratic defect stands clear of the noise floor, and each draw
/// is used antithetically (the noise distributions are symmetric), which
/// removes the linear-in-noise variance.
pub fn bellman_residual_mc(
    system: &ArxSystem,
    cost: &QuadraticCost,
    sol: &DareSolution,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    let pbar = sol.p_bar(system.b(), cost)?;
    let mut rng = stream_rng(seed, SEARCH_STREAM);
    let (n, m) = (system.state_dim(), system.output_dim());
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let x = gaussian_vector(&mut rng, n) * 5.0;
        let y = gaussian_vector(&mut rng, m) * 5.0;
        let u = optimal_input(sol, &x, &y);
        let xbar = system.a() * &x + system.f() * &y;
        let lhs = sol.j_star
            + (xbar.transpose() * &pbar * &xbar)[(0, 0)]
            + (y.transpose() * &cost.q * &y)[(0, 0)];
        let x1 = system.a() * &x + system.b() * &u + system.f() * &y;
        let e = system.noise.draw(&mut rng);
        let mut next = 0.0;
        for e_signed in [&e, &(-&e)] {
            let y1 = system.c() * &x1 + e_signed;
            let z = system.a() * &x1 + system.f() * &y1;
            next += 0.5
                * ((z.transpose() * &pbar * &z)[(0, 0)] + (y1.transpose() * &cost.q * &y1)[(0, 0)]);
        }
        let rhs = cost.stage(&y, &u) + next;
        let xi = lhs - rhs;
        sum += xi;
        sumsq += xi * xi;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    let se = (var / nf).sqrt();
    let scale = sol.j_star.abs().max(1e-300);
    Ok(((mean.abs()) / scale, 3.0 * se / scale))
}

/// Structural constraints a candidate model must meet before its optimal
/// controller may be deployed.
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityConfig {
    /// Bound on |A + B K_x|_2.
    pub rho: f64,
    /// Bound on |F + B K_y|_2.
    pub upsilon: f64,
    /// Relative singular-value floor for the rank tests.
    pub rank_tol: f64,
    pub dare_tol: f64,
    pub dare_max_iter: usize,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        Self {
            rho: 0.99,
            upsilon: 0.99,
            rank_tol: 1e-8,
            dare_tol: 1e-12,
            dare_max_iter: 20_000,
        }
    }
}

/// Candidate model matrices (a plain tuple of owned matrices).
#[derive(Clone, Debug)]
pub struct ModelMats {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl ModelMats {
    pub fn from_realized(r: &RealizedSystem) -> Self {
        Self {
            a: r.a_hat.clone(),
            b: r.b_hat.clone(),
            c: r.c_hat.clone(),
            f: r.f_hat.clone(),
        }
    }
}

fn staircase_rank_ok(a: &DMatrix<f64>, cols: &DMatrix<f64>, tol: f64) -> bool {
    // Full-rank test on [X, A X, ..., A^{n-1} X].
    let n = a.nrows();
    let mut blocks = DMatrix::zeros(n, cols.ncols() * n);
    let mut cur = cols.clone();
    for i in 0..n {
        blocks
            .view_mut((0, i * cols.ncols()), (n, cols.ncols()))
            .copy_from(&cur);
        cur = a * cur;
    }
    let sv = blocks.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0f64, f64::max);
    let smin = sv.iter().copied().take(n).fold(f64::INFINITY, f64::min);
    smin > tol * smax.max(1.0)
}

/// Check controllability of (A, B) and (A, F), observability of (A, C),
/// Riccati convergence and the contraction bounds. Returns the solution on
/// success.
pub fn admissible_solution(
    mats: &ModelMats,
    sigma_e: &DMatrix<f64>,
    cost: &QuadraticCost,
    adm: &AdmissibilityConfig,
) -> Option<DareSolution> {
    if !staircase_rank_ok(&mats.a, &mats.b, adm.rank_tol)
        || !staircase_rank_ok(&mats.a, &mats.f, adm.rank_tol)
        || !staircase_rank_ok(&mats.a.transpose(), &mats.c.transpose(), adm.rank_tol)
    {
        return None;
    }
    let sol = solve_dare(
        &mats.a,
        &mats.b,
        &mats.c,
        &mats.f,
        sigma_e,
        cost,
        adm.dare_tol,
        adm.dare_max_iter,
    )
    .ok()?;
    let (rho, upsilon) = closed_loop_norms(mats, &sol);
    if rho <= adm.rho && upsilon <= adm.upsilon {
        Some(sol)
    } else {
        None
    }
}

/// `(|A + B K_x|_2, |F + B K_y|_2)` for a model under a solution's gains.
pub fn closed_loop_norms(mats: &ModelMats, sol: &DareSolution) -> (f64, f64) {
    (
        spectral_norm(&(&mats.a + &mats.b * &sol.k_x)),
        spectral_norm(&(&mats.f + &mats.b * &sol.k_y)),
    )
}

/// Confidence ball around a realized model, with the noise covariance to use
/// when scoring candidates.
#[derive(Clone, Debug)]
pub struct ModelBall {
    pub center: ModelMats,
    pub radii: ParameterRadii,
    pub sigma_e: DMatrix<f64>,
    pub adm: AdmissibilityConfig,
}

/// Search budget of [`optimistic_select`].
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SearchBudget {
    pub samples: usize,
    pub refine: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            samples: 256,
            refine: 64,
        }
    }
}

/// Result of the optimistic search.
pub struct OptimisticChoice {
    pub mats: ModelMats,
    pub dare: DareSolution,
    /// Set when no admissible candidate was found and the raw center was
    /// returned instead.
    pub fell_back: bool,
}

fn sample_in_ball(rng: &mut impl Rng, center: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    if radius <= 0.0 {
        return center.clone();
    }
    let dir = gaussian_matrix(rng, center.nrows(), center.ncols());
    let norm = dir.norm().max(1e-300);
    let dof = (center.nrows() * center.ncols()) as f64;
    let scale: f64 = rng.random::<f64>().powf(1.0 / dof) * radius;
    center + dir * (scale / norm)
}

fn clip_to_ball(center: &DMatrix<f64>, x: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    let d = x - center;
    let norm = d.norm();
    if norm <= radius || norm == 0.0 {
        x.clone()
    } else {
        center + d * (radius / norm)
    }
}

/// Pick a model in the ball (intersected with the admissible set) whose
/// optimal average cost is as small as the search can make it: uniform
/// sampling in the per-matrix balls, then coordinate pattern descent around
/// the best candidate. The returned cost never exceeds the center's (when
/// the center is admissible); the additive-accuracy target of the selection
/// rule is a goal of the budget, not a certificate.
pub fn optimistic_select(
    ball: &ModelBall,
    cost: &QuadraticCost,
    budget: &SearchBudget,
    seed: u64,
) -> Result<OptimisticChoice> {
    let mut rng = stream_rng(seed, SEARCH_STREAM);
    let mut candidates: Vec<ModelMats> = Vec::with_capacity(budget.samples + 1);
    candidates.push(ball.center.clone());
    for _ in 0..budget.samples {
        candidates.push(ModelMats {
            a: sample_in_ball(&mut rng, &ball.center.a, ball.radii.a),
            b: sample_in_ball(&mut rng, &ball.center.b, ball.radii.b),
            c: sample_in_ball(&mut rng, &ball.center.c, ball.radii.c),
            f: sample_in_ball(&mut rng, &ball.center.f, ball.radii.f),
        });
    }

    let scored: Vec<Option<DareSolution>> = candidates
        .par_iter()
        .map(|mats| admissible_solution(mats, &ball.sigma_e, cost, &ball.adm))
        .collect();

    let mut best: Option<(usize, DareSolution)> = None;
    for (i, sol) in scored.into_iter().enumerate() {
        if let Some(sol) = sol {
            let better = match &best {
                None => true,
                Some((_, b)) => sol.j_star < b.j_star,
            };
            if better {
                best = Some((i, sol));
            }
        }
    }

    let (mut mats, mut sol) = match best {
        Some((i, sol)) => (candidates[i].clone(), sol),
        None => {
            // Nothing admissible: fall back to the raw center if its
            // Riccati equation at least converges.
            let center = ball.center.clone();
            let sol = solve_dare(
                &center.a,
                &center.b,
                &center.c,
                &center.f,
                &ball.sigma_e,
                cost,
                ball.adm.dare_tol,
                ball.adm.dare_max_iter,
            )?;
            return Ok(OptimisticChoice {
                mats: center,
                dare: sol,
                fell_back: true,
            });
        }
    };

    // Coordinate pattern descent within the ball around the incumbent.
    let mut evals = 0usize;
    let mut step = 0.5f64;
    while evals < budget.refine && step > 1e-3 {
        let mut improved = false;
        'outer: for which in 0..4 {
            let (center_x, radius) = match which {
                0 => (&ball.center.a, ball.radii.a),
                1 => (&ball.center.b, ball.radii.b),
                2 => (&ball.center.c, ball.radii.c),
                _ => (&ball.center.f, ball.radii.f),
            };
            if radius <= 0.0 {
                continue;
            }
            let (rows, cols) = center_x.shape();
            for i in 0..rows {
                for j in 0..cols {
                    for sign in [1.0f64, -1.0] {
                        if evals >= budget.refine {
                            break 'outer;
                        }
                        let mut trial = mats.clone();
                        {
                            let x = match which {
                                0 => &mut trial.a,
                                1 => &mut trial.b,
                                2 => &mut trial.c,
                                _ => &mut trial.f,
                            };
                            x[(i, j)] += sign * step * radius;
                            *x = clip_to_ball(center_x, x, radius);
                        }
                        evals += 1;
                        if let Some(s) = admissible_solution(&trial, &ball.sigma_e, cost, &ball.adm)
                        {
                            if s.j_star < sol.j_star {
                                mats = trial;
                                sol = s;
                                improved = true;
                            }
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    Ok(OptimisticChoice {
        mats,
        dare: sol,
        fell_back: false,
    })
}

/// Configuration of one optimistic-control run.
#[derive(Clone, Debug)]
pub struct OfuRunConfig {
    pub total_steps: usize,
    pub warmup: usize,
    /// Markov estimation horizon h.
    pub horizon: usize,
    /// Assumed state order n.
    pub order: usize,
    pub sigma_u: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Frobenius bound S, failure probability delta, noise proxy R.
    pub confidence: ConfidenceParams,
    pub budget: SearchBudget,
    pub adm: AdmissibilityConfig,
    /// Zero all radii (certainty-equivalent control) when set.
    pub certainty_equivalent: bool,
}

/// Per-epoch record of an optimistic run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OfuEpochInfo {
    pub start: usize,
    pub samples: usize,
    pub sigma_min: f64,
    pub sigma_min_rate: f64,
    pub g_error_bound: f64,
    pub j_optimistic: f64,
    pub fell_back: bool,
    pub contraction: (f64, f64),
}

pub struct OfuRun {
    pub log: TrajectoryLog,
    pub costs: Vec<f64>,
    /// Average cost of the true system's optimal controller.
    pub j_star_true: f64,
    pub epochs: Vec<OfuEpochInfo>,
}

/// Optimistic adaptive control: Gaussian warm-up, then per epoch estimate
/// the Markov parameters, realize a state-space model, widen it into a
/// confidence ball, pick the admissible model of lowest optimal cost, and
/// run its optimal controller with an internal predictor state propagated
/// through the chosen model. Explore-and-commit keeps the first choice.
pub fn run_ofu_adaptive(
    system: &ArxSystem,
    cost: &QuadraticCost,
    mode: UpdateMode,
    cfg: &OfuRunConfig,
) -> Result<OfuRun> {
    validate_ofu_config(system, cfg)?;
    let truth = solve_dare_for_system(system, cost, cfg.adm.dare_tol, cfg.adm.dare_max_iter)?;
    let p = system.input_dim();

    let mut noise_rng = stream_rng(cfg.seed, NOISE_STREAM);
    let mut input_rng = stream_rng(cfg.seed, INPUT_STREAM);
    let mut log = TrajectoryLog {
        states: Vec::with_capacity(cfg.total_steps),
        outputs: Vec::with_capacity(cfg.total_steps),
        inputs: Vec::with_capacity(cfg.total_steps),
        noises: Vec::with_capacity(cfg.total_steps),
        losses: Vec::with_capacity(cfg.total_steps),
        seed: cfg.seed,
    };
    let mut x = DVector::<f64>::zeros(system.state_dim());
    // Predictor state of the deployed controller, in the chosen model's
    // coordinates; starts at zero when control begins.
    let mut x_hat = DVector::<f64>::zeros(cfg.order);
    let mut controller: Option<OptimisticChoice> = None;
    let mut epochs: Vec<OfuEpochInfo> = Vec::new();
    let mut next_epoch_start = cfg.warmup;
    let mut epoch_index = 0usize;

    for t in 0..cfg.total_steps {
        let e = system.noise.draw(&mut noise_rng);
        let y = system.c() * &x + &e;
        check_finite(t, &x, &y)?;
        log.states.push(x.clone());
        log.outputs.push(y.clone());

        let u = if t < cfg.warmup {
            DVector::from_fn(p, |_, _| {
                cfg.sigma_u * input_rng.sample::<f64, _>(StandardNormal)
            })
        } else {
            if t == next_epoch_start {
                if t == cfg.warmup || mode == UpdateMode::ClosedLoop {
                    match select_for_epoch(system, cost, cfg, &log, t, epoch_index) {
                        Ok((choice, info)) => {
                            // Deploy only contraction-safe controllers; on a
                            // flagged fallback that violates the bounds keep
                            // the previous epoch's controller.
                            let safe = info.contraction.0 <= cfg.adm.rho
                                && info.contraction.1 <= cfg.adm.upsilon;
                            epochs.push(info);
                            if safe || controller.is_none() {
                                controller = Some(choice);
                            }
                        }
                        Err(err) => {
                            if controller.is_none() {
                                return Err(err);
                            }
                        }
                    }
                }
                epoch_index += 1;
                next_epoch_start = cfg.warmup * (1 << epoch_index);
            }
            let ctl = controller
                .as_ref()
                .expect("controller exists after warm-up");
            let u = optimal_input(&ctl.dare, &x_hat, &y);
            x_hat = &ctl.mats.a * &x_hat + &ctl.mats.b * &u + &ctl.mats.f * &y;
            u
        };

        log.losses.push(cost.stage(&y, &u));
        x = system.a() * &x + system.b() * &u + system.f() * &y;
        log.inputs.push(u);
        log.noises.push(e);
    }

    let costs = log.losses.clone();
    Ok(OfuRun {
        log,
        costs,
        j_star_true: truth.j_star,
        epochs,
    })
}

fn validate_ofu_config(system: &ArxSystem, cfg: &OfuRunConfig) -> Result<()> {
    if cfg.horizon < 3 {
        return Err(Error::Config("realization needs horizon >= 3".into()));
    }
    let (d1, d2) = default_split(cfg.horizon);
    if d1 * system.output_dim() < cfg.order
        || d2 * (system.output_dim() + system.input_dim()) < cfg.order
    {
        return Err(Error::Config(format!(
            "hankel split ({d1}, {d2}) cannot carry order {}",
            cfg.order
        )));
    }
    if cfg.warmup <= cfg.horizon {
        return Err(Error::Config(
            "warm-up must exceed the estimation horizon".into(),
        ));
    }
    if cfg.total_steps <= cfg.warmup {
        return Err(Error::Config("total steps must exceed the warm-up".into()));
    }
    if cfg.sigma_u <= 0.0 || cfg.lambda <= 0.0 {
        return Err(Error::Config("scales must be positive".into()));
    }
    cfg.confidence.validate()
}

fn select_for_epoch(
    system: &ArxSystem,
    cost: &QuadraticCost,
    cfg: &OfuRunConfig,
    log: &TrajectoryLog,
    t: usize,
    epoch_index: usize,
) -> Result<(OptimisticChoice, OfuEpochInfo)> {
    let prefix = TrajectoryLog {
        states: Vec::new(),
        outputs: log.outputs[..t].to_vec(),
        inputs: log.inputs[..t].to_vec(),
        noises: Vec::new(),
        losses: vec![0.0; t],
        seed: log.seed,
    };
    let mut est = rls_from_log(&prefix, cfg.horizon, cfg.lambda)?;
    let beta = attach_confidence(&mut est, &cfg.confidence)?;
    let (sigma_min, sigma_min_rate) = pe_diagnostic(&est);
    let g_error_bound = (beta / sigma_min.max(1e-300)).sqrt();

    let markov = est.markov()?;
    let (d1, d2) = default_split(cfg.horizon);
    let pair = build_hankel(&markov, d1, d2)?;
    let realized = realize(&pair, cfg.order)?;
    let radii = if cfg.certainty_equivalent {
        ParameterRadii::zero()
    } else {
        parameter_confidence(&realized, g_error_bound, &pair)?
    };
    let ball = ModelBall {
        center: ModelMats::from_realized(&realized),
        radii,
        sigma_e: system.noise.sigma_e.clone(),
        adm: cfg.adm,
    };
    let choice = optimistic_select(
        &ball,
        cost,
        &cfg.budget,
        cfg.seed.wrapping_add(1_000_003 * epoch_index as u64),
    )?;
    let contraction = closed_loop_norms(&choice.mats, &choice.dare);
    let info = OfuEpochInfo {
        start: t,
        samples: t,
        sigma_min,
        sigma_min_rate,
        g_error_bound,
        j_optimistic: choice.dare.j_star,
        fell_back: choice.fell_back,
        contraction,
    };
    Ok((choice, info))
}

/// Run a fixed model-based controller (gains plus predictor model) on the
/// true system for `steps` steps. Used to measure the average cost of the
/// optimal controller itself.
pub fn run_with_controller(
    system: &ArxSystem,
    cost: &QuadraticCost,
    mats: &ModelMats,
    sol: &DareSolution,
    steps: usize,
    seed: u64,
) -> Result<OfuRun> {
    if steps == 0 {
        return Err(Error::Argument("need steps >= 1".into()));
    }
    let mut noise_rng = stream_rng(seed, NOISE_STREAM);
    let mut log = TrajectoryLog {
        states: Vec::with_capacity(steps),
        outputs: Vec::with_capacity(steps),
        inputs: Vec::with_capacity(steps),
        noises: Vec::with_capacity(steps),
        losses: Vec::with_capacity(steps),
        seed,
    };
    let mut x = DVector::<f64>::zeros(system.state_dim());
    let mut x_hat = DVector::<f64>::zeros(mats.a.nrows());
    for t in 0..steps {
        let e = system.noise.draw(&mut noise_rng);
        let y = system.c() * &x + &e;
        check_finite(t, &x, &y)?;
        let u = optimal_input(sol, &x_hat, &y);
        log.states.push(x.clone());
        log.outputs.push(y.clone());
        log.losses.push(cost.stage(&y, &u));
        x_hat = &mats.a * &x_hat + &mats.b * &u + &mats.f * &y;
        x = system.a() * &x + system.b() * &u + system.f() * &y;
        log.inputs.push(u);
        log.noises.push(e);
    }
    let costs = log.losses.clone();
    Ok(OfuRun {
        log,
        costs,
        j_star_true: sol.j_star,
        epochs: Vec::new(),
    })
}
