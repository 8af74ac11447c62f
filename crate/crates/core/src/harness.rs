//! Experiment orchestration: hindsight comparators, regret traces, rate
//! fits, and the seeded (T, seed)-grid runner behind the CLI.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arx::{simulate, ArxSystem, GaussianController, TrajectoryLog};
use crate::dfc::{project, DfcPolicy, DfcRunConfig, DfcSet, LossOracle};
use crate::error::{Error, Result};
use crate::linalg::{iqr, median, ols_line};
use crate::ofu::{OfuRunConfig, QuadraticCost, SearchBudget};
use crate::sysid::{
    attach_confidence, ellipsoid_membership, estimation_error, pe_diagnostic, rls_from_log,
    ConfidenceParams,
};
use crate::UpdateMode;

/// Per-step costs, comparator values, and the running regret of one run.
#[derive(Clone, Debug)]
pub struct RegretTrace {
    pub costs: Vec<f64>,
    pub comparator: Vec<f64>,
    pub cum_regret: Vec<f64>,
    pub mode: UpdateMode,
    pub seed: u64,
    pub t_warm: usize,
}

impl RegretTrace {
    pub fn new(
        costs: Vec<f64>,
        comparator: Vec<f64>,
        mode: UpdateMode,
        seed: u64,
        t_warm: usize,
    ) -> Result<Self> {
        if costs.len() != comparator.len() || costs.is_empty() {
            return Err(Error::Dimension(
                "cost/comparator lengths differ or empty".into(),
            ));
        }
        let mut cum = Vec::with_capacity(costs.len());
        let mut acc = 0.0;
        for (c, b) in costs.iter().zip(&comparator) {
            acc += c - b;
            cum.push(acc);
        }
        Ok(Self {
            costs,
            comparator,
            cum_regret: cum,
            mode,
            seed,
            t_warm,
        })
    }

    /// Trace against a constant per-step benchmark (the average-cost J*).
    pub fn against_constant(
        costs: Vec<f64>,
        benchmark: f64,
        mode: UpdateMode,
        seed: u64,
        t_warm: usize,
    ) -> Result<Self> {
        let comparator = vec![benchmark; costs.len()];
        Self::new(costs, comparator, mode, seed, t_warm)
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        *self.cum_regret.last().expect("non-empty trace")
    }
}

/// Cumulative regret of quadratic-cost runs: prefix sums of `c_t - J*`.
pub fn regret_quadratic(
    costs: Vec<f64>,
    j_star: f64,
    mode: UpdateMode,
    seed: u64,
    t_warm: usize,
) -> Result<RegretTrace> {
    RegretTrace::against_constant(costs, j_star, mode, seed, t_warm)
}

/// Best fixed DFC policy in hindsight, by batch projected gradient descent
/// on the total cost of replaying the policy against the realized noise
/// sequence (the policy generates its own trajectory; with the true
/// operator and x_0 = 0 the uncertainties it taps are exactly the noises).
/// Returns the optimized policy and its per-step costs.
pub fn best_in_hindsight_dfc(
    system: &ArxSystem,
    set: &DfcSet,
    loss: &LossOracle,
    noises: &[DVector<f64>],
    iters: usize,
) -> Result<(DfcPolicy, Vec<f64>)> {
    if noises.is_empty() {
        return Err(Error::Argument("need a noise sequence".into()));
    }
    let (p, m) = (system.input_dim(), system.output_dim());
    let steps = noises.len();
    let acl = system.feedback_matrix();

    type Replay = (f64, Vec<f64>, Vec<DVector<f64>>, Vec<DVector<f64>>);
    // Forward replay: costs plus the per-step loss gradients.
    let replay = |policy: &DfcPolicy| -> Replay {
        let mut x = DVector::<f64>::zeros(system.state_dim());
        let mut costs = Vec::with_capacity(steps);
        let mut gys = Vec::with_capacity(steps);
        let mut gus = Vec::with_capacity(steps);
        let mut total = 0.0;
        for t in 0..steps {
            let y = system.c() * &x + &noises[t];
            let mut u = DVector::<f64>::zeros(p);
            for (l, tap) in policy.taps.iter().enumerate() {
                if t >= l {
                    u.gemv(1.0, tap, &noises[t - l], 1.0);
                }
            }
            let c = loss.value(&y, &u);
            let (gy, gu) = loss.gradient(&y, &u);
            total += c;
            costs.push(c);
            gys.push(gy);
            gus.push(gu);
            x = system.a() * &x + system.b() * &u + system.f() * &y;
        }
        (total, costs, gys, gus)
    };

    // Adjoint pass: dF/du_t = gu_t + B^T w_{t+1},
    // w_t = C^T gy_t + (A + F C)^T w_{t+1}; then fold with lagged noises.
    let gradient = |gys: &[DVector<f64>], gus: &[DVector<f64>]| -> Vec<DMatrix<f64>> {
        let mut grad = vec![DMatrix::<f64>::zeros(p, m); set.window];
        let mut w = DVector::<f64>::zeros(system.state_dim());
        let mut du = vec![DVector::<f64>::zeros(p); steps];
        for t in (0..steps).rev() {
            du[t] = &gus[t] + system.b().transpose() * &w;
            w = system.c().transpose() * &gys[t] + acl.transpose() * &w;
        }
        for (t, du_t) in du.iter().enumerate() {
            for (l, g) in grad.iter_mut().enumerate() {
                if t >= l {
                    g.ger(1.0, du_t, &noises[t - l], 1.0);
                }
            }
        }
        grad
    };

    let mut policy = DfcPolicy::zeros(set.window, p, m);
    let (mut best, _, mut gys, mut gus) = replay(&policy);
    let mut eta = 1.0 / steps as f64;
    for _ in 0..iters {
        let grad = gradient(&gys, &gus);
        let gnorm2: f64 = grad.iter().map(|g| g.norm_squared()).sum();
        if gnorm2 <= 1e-30 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial = project(&policy.sub_scaled(&grad, eta), set);
            let (val, _, tg, tu) = replay(&trial);
            if val <= best - 1e-4 * eta * gnorm2 {
                let rel_drop = (best - val) / best.abs().max(1.0);
                policy = trial;
                best = val;
                gys = tg;
                gus = tu;
                eta *= 1.5;
                accepted = rel_drop > 1e-8;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (_, costs, _, _) = replay(&policy);
    Ok((policy, costs))
}

/// Power-law fit of final regret against horizon length.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Grid points dropped for non-positive regret.
    pub dropped: usize,
}

/// OLS of log(median final regret) on log T. Non-positive medians are
/// dropped with a count; fewer than three surviving points is an error.
pub fn fit_regret_exponent(points: &[(usize, f64)]) -> Result<ExponentFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|(t, r)| ((*t as f64).ln(), r.ln()))
        .collect();
    let dropped = points.len() - kept.len();
    if kept.len() < 3 {
        return Err(Error::Argument(format!(
            "need >= 3 positive grid points for a rate fit, have {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, y)| *y).collect();
    let (slope, intercept, r_squared) = ols_line(&xs, &ys)?;
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        dropped,
    })
}

/// Polylogarithmic alternative: regret regressed on (log T)^k for
/// k in {1, 2, 3}, keeping the best r^2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PolylogFit {
    pub k: u32,
    pub coefficient: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_regret_polylog(points: &[(usize, f64)]) -> Result<PolylogFit> {
    if points.len() < 3 {
        return Err(Error::Argument("need >= 3 grid points".into()));
    }
    let mut best: Option<PolylogFit> = None;
    for k in 1..=3u32 {
        let xs: Vec<f64> = points
            .iter()
            .map(|(t, _)| (*t as f64).ln().powi(k as i32))
            .collect();
        let ys: Vec<f64> = points.iter().map(|(_, r)| *r).collect();
        let (coefficient, intercept, r_squared) = ols_line(&xs, &ys)?;
        if best.as_ref().is_none_or(|b| r_squared > b.r_squared) {
            best = Some(PolylogFit {
                k,
                coefficient,
                intercept,
                r_squared,
            });
        }
    }
    Ok(best.expect("k loop is non-empty"))
}

/// Group traces by horizon and take the median/IQR of final regrets.
pub fn summarize_by_horizon(traces: &[RegretTrace]) -> Result<Vec<(usize, f64, f64)>> {
    let mut lens: Vec<usize> = traces.iter().map(|t| t.len()).collect();
    lens.sort_unstable();
    lens.dedup();
    let mut out = Vec::with_capacity(lens.len());
    for len in lens {
        let finals: Vec<f64> = traces
            .iter()
            .filter(|t| t.len() == len)
            .map(|t| t.final_regret())
            .collect();
        out.push((len, median(&finals)?, iqr(&finals)?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Experiment configuration and runner
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dfc,
    Ofu,
    SysidOnly,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Dfc => write!(f, "dfc"),
            Algorithm::Ofu => write!(f, "ofu"),
            Algorithm::SysidOnly => write!(f, "sysid_only"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmupRule {
    /// ceil(sqrt(T)), the explore-and-commit preset for strongly convex cost.
    SqrtT,
    /// ceil(T^{2/3}), the explore-and-commit preset for quadratic cost.
    TwoThirdsT,
    /// A fixed epoch seed tau, the closed-loop preset.
    Fixed,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WarmupSpec {
    pub rule: WarmupRule,
    #[serde(default)]
    pub tau: Option<usize>,
}

impl WarmupSpec {
    pub fn resolve(&self, total_steps: usize) -> Result<usize> {
        let t = total_steps as f64;
        match self.rule {
            WarmupRule::SqrtT => Ok(t.sqrt().ceil() as usize),
            WarmupRule::TwoThirdsT => Ok(t.powf(2.0 / 3.0).ceil() as usize),
            WarmupRule::Fixed => self
                .tau
                .ok_or_else(|| Error::Config("fixed warm-up needs tau".into())),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostSpec {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

impl CostSpec {
    pub fn to_cost(&self) -> Result<QuadraticCost> {
        QuadraticCost::new(
            crate::io::rows_to_matrix(&self.q)?,
            crate::io::rows_to_matrix(&self.r)?,
        )
    }

    pub fn to_loss(&self) -> Result<LossOracle> {
        LossOracle::quadratic(
            crate::io::rows_to_matrix(&self.q)?,
            crate::io::rows_to_matrix(&self.r)?,
        )
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    pub s: f64,
    pub delta: f64,
    pub r: f64,
}

impl Default for ConfidenceSpec {
    fn default() -> Self {
        Self {
            s: 2.0,
            delta: 0.05,
            r: 1.0,
        }
    }
}

/// Pass/fail thresholds evaluated by `report --check`.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Checks {
    #[serde(default)]
    pub max_exponent: Option<f64>,
    #[serde(default)]
    pub exponent_range: Option<(f64, f64)>,
    #[serde(default)]
    pub min_membership: Option<f64>,
    #[serde(default)]
    pub sysid_slope_range: Option<(f64, f64)>,
}

fn default_sigma_u() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    1.0
}
fn default_eta_scale() -> f64 {
    1.0
}
fn default_kappa_psi() -> f64 {
    2.0
}
fn default_expansion() -> f64 {
    1.0
}
fn default_comparator_iters() -> usize {
    400
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: crate::io::SystemSpec,
    pub algorithm: Algorithm,
    pub mode: UpdateMode,
    pub cost: CostSpec,
    pub t_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub warmup: WarmupSpec,
    /// Estimation horizon; derived from the decay rule when absent.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Policy window; defaults to 3h.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default = "default_sigma_u")]
    pub sigma_u: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_eta_scale")]
    pub eta_scale: f64,
    #[serde(default = "default_kappa_psi")]
    pub kappa_psi: f64,
    #[serde(default = "default_expansion")]
    pub expansion_r: f64,
    /// Assumed state order for realization (OFU).
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub confidence: Option<ConfidenceSpec>,
    #[serde(default)]
    pub budget: Option<SearchBudget>,
    #[serde(default = "default_comparator_iters")]
    pub comparator_iters: usize,
    #[serde(default)]
    pub certainty_equivalent: bool,
    #[serde(default)]
    pub emit_trajectories: bool,
    #[serde(default)]
    pub checks: Option<Checks>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "t_grid must be non-empty and strictly increasing".into(),
            ));
        }
        self.system.to_system()?;
        self.cost.to_cost()?;
        Ok(())
    }
}

/// One (T, seed) cell's outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub t: usize,
    pub seed: u64,
    pub status: String,
    #[serde(default)]
    pub final_regret: Option<f64>,
    #[serde(default)]
    pub mean_cost: Option<f64>,
    #[serde(default)]
    pub sigma_min_rate: Option<f64>,
    #[serde(default)]
    pub sysid_error: Option<f64>,
    #[serde(default)]
    pub membership: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerHorizonSummary {
    pub t: usize,
    pub cells_ok: usize,
    #[serde(default)]
    pub median_final_regret: Option<f64>,
    #[serde(default)]
    pub iqr_final_regret: Option<f64>,
    #[serde(default)]
    pub median_sysid_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub algorithm: Algorithm,
    pub mode: UpdateMode,
    pub cells: Vec<CellResult>,
    pub per_t: Vec<PerHorizonSummary>,
    #[serde(default)]
    pub exponent_fit: Option<ExponentFit>,
    #[serde(default)]
    pub polylog_fit: Option<PolylogFit>,
    #[serde(default)]
    pub sysid_slope: Option<ExponentFit>,
    #[serde(default)]
    pub membership_rate: Option<f64>,
    /// Set when every seed of some horizon aborted.
    pub any_t_all_failed: bool,
    #[serde(default)]
    pub checks: Option<Checks>,
}

struct CellOutput {
    result: CellResult,
    trace: Option<RegretTrace>,
    trajectory: Option<TrajectoryLog>,
}

fn run_dfc_cell(
    system: &ArxSystem,
    cfg: &ExperimentConfig,
    t: usize,
    seed: u64,
) -> Result<(RegretTrace, TrajectoryLog, Option<f64>)> {
    let loss = cfg.cost.to_loss()?;
    let horizon = match cfg.horizon {
        Some(h) => h,
        None => crate::dfc::default_horizon(system, t)?,
    };
    let window = cfg.window.unwrap_or(3 * horizon);
    let set = DfcSet::new(cfg.kappa_psi, cfg.expansion_r, window, horizon)?;
    let warmup = cfg.warmup.resolve(t)?;
    let run_cfg = DfcRunConfig {
        total_steps: t,
        warmup,
        horizon,
        window,
        sigma_u: cfg.sigma_u,
        eta_scale: cfg.eta_scale,
        lambda: cfg.lambda,
        seed,
    };
    let run = crate::dfc::run_dfc_adaptive(system, &set, &loss, cfg.mode, &run_cfg)?;
    let pe = run.epochs.last().map(|e| e.sigma_min_rate);
    let (_, comparator_costs) =
        best_in_hindsight_dfc(system, &set, &loss, &run.log.noises, cfg.comparator_iters)?;
    let trace = RegretTrace::new(run.costs, comparator_costs, cfg.mode, seed, warmup)?;
    Ok((trace, run.log, pe))
}

fn run_ofu_cell(
    system: &ArxSystem,
    cfg: &ExperimentConfig,
    t: usize,
    seed: u64,
) -> Result<(RegretTrace, TrajectoryLog, Option<f64>)> {
    let cost = cfg.cost.to_cost()?;
    let horizon = match cfg.horizon {
        Some(h) => h,
        None => crate::dfc::default_horizon(system, t)?.max(3),
    };
    let warmup = cfg.warmup.resolve(t)?;
    let conf = cfg.confidence.unwrap_or_default();
    let run_cfg = OfuRunConfig {
        total_steps: t,
        warmup,
        horizon,
        order: cfg.order.unwrap_or(system.state_dim()),
        sigma_u: cfg.sigma_u,
        lambda: cfg.lambda,
        seed,
        confidence: ConfidenceParams {
            s: conf.s,
            delta: conf.delta,
            r: conf.r,
            t_total: t,
        },
        budget: cfg.budget.unwrap_or_default(),
        adm: Default::default(),
        certainty_equivalent: cfg.certainty_equivalent,
    };
    let run = crate::ofu::run_ofu_adaptive(system, &cost, cfg.mode, &run_cfg)?;
    let pe = run.epochs.last().map(|e| e.sigma_min_rate);
    let trace = regret_quadratic(run.costs, run.j_star_true, cfg.mode, seed, warmup)?;
    Ok((trace, run.log, pe))
}

struct SysidCellOutcome {
    error: f64,
    membership: bool,
    sigma_min_rate: f64,
}

fn run_sysid_cell(
    system: &ArxSystem,
    cfg: &ExperimentConfig,
    t: usize,
    seed: u64,
) -> Result<SysidCellOutcome> {
    let horizon = match cfg.horizon {
        Some(h) => h,
        None => crate::dfc::default_horizon(system, t)?,
    };
    let mut ctrl = GaussianController::new(system.input_dim(), cfg.sigma_u, seed);
    let log = simulate(system, &mut ctrl, t, seed)?;
    let mut est = rls_from_log(&log, horizon, cfg.lambda)?;
    let conf = cfg.confidence.unwrap_or_default();
    let params = ConfidenceParams {
        s: conf.s,
        delta: conf.delta,
        r: conf.r,
        t_total: t,
    };
    let beta = attach_confidence(&mut est, &params)?;
    let truth = system.markov_parameters(horizon)?;
    let error = estimation_error(&est, &truth)?;
    let membership = ellipsoid_membership(&est, &truth, beta)?;
    let (_, sigma_min_rate) = pe_diagnostic(&est);
    Ok(SysidCellOutcome {
        error,
        membership,
        sigma_min_rate,
    })
}

fn run_cell(system: &ArxSystem, cfg: &ExperimentConfig, t: usize, seed: u64) -> CellOutput {
    let outcome: Result<CellOutput> = (|| match cfg.algorithm {
        Algorithm::Dfc | Algorithm::Ofu => {
            let (trace, log, pe) = if cfg.algorithm == Algorithm::Dfc {
                run_dfc_cell(system, cfg, t, seed)?
            } else {
                run_ofu_cell(system, cfg, t, seed)?
            };
            let mean_cost = trace.costs.iter().sum::<f64>() / trace.len() as f64;
            Ok(CellOutput {
                result: CellResult {
                    t,
                    seed,
                    status: "ok".into(),
                    final_regret: Some(trace.final_regret()),
                    mean_cost: Some(mean_cost),
                    sigma_min_rate: pe,
                    sysid_error: None,
                    membership: None,
                },
                trajectory: cfg.emit_trajectories.then(|| log.clone()),
                trace: Some(trace),
            })
        }
        Algorithm::SysidOnly => {
            let out = run_sysid_cell(system, cfg, t, seed)?;
            Ok(CellOutput {
                result: CellResult {
                    t,
                    seed,
                    status: "ok".into(),
                    final_regret: None,
                    mean_cost: None,
                    sigma_min_rate: Some(out.sigma_min_rate),
                    sysid_error: Some(out.error),
                    membership: Some(out.membership),
                },
                trace: None,
                trajectory: None,
            })
        }
    })();
    outcome.unwrap_or_else(|err| CellOutput {
        result: CellResult {
            t,
            seed,
            status: format!("aborted: {err}"),
            final_regret: None,
            mean_cost: None,
            sigma_min_rate: None,
            sysid_error: None,
            membership: None,
        },
        trace: None,
        trajectory: None,
    })
}

/// Run every (T, seed) cell of the grid (in parallel), write per-cell CSVs
/// under `out_dir`, and return the aggregate summary. Aggregation is
/// order-independent in the seeds; rerunning with identical config and seeds
/// reproduces every byte.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &std::path::Path,
) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let system = cfg.system.to_system()?;
    std::fs::create_dir_all(out_dir)?;

    let mut cells: Vec<(usize, u64)> = Vec::new();
    for &t in &cfg.t_grid {
        for &seed in &cfg.seeds {
            cells.push((t, seed));
        }
    }

    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(t, seed)| run_cell(&system, cfg, t, seed))
        .collect();

    // Per-cell artifacts.
    for out in &outputs {
        let (t, seed) = (out.result.t, out.result.seed);
        if let Some(trace) = &out.trace {
            let path = out_dir.join(format!("trace_T{t:07}_s{seed:04}.csv"));
            crate::io::write_regret_csv(&path, trace)?;
        }
        if let Some(log) = &out.trajectory {
            let path = out_dir.join(format!("trajectory_T{t:07}_s{seed:04}.csv"));
            crate::io::write_trajectory_csv(&path, log)?;
        }
        if cfg.algorithm == Algorithm::SysidOnly {
            let path = out_dir.join(format!("sysid_T{t:07}_s{seed:04}.csv"));
            crate::io::write_sysid_cell_csv(&path, &out.result)?;
        }
    }

    let results: Vec<CellResult> = outputs.iter().map(|o| o.result.clone()).collect();

    // Aggregate per horizon.
    let mut per_t = Vec::new();
    let mut regret_points = Vec::new();
    let mut sysid_points = Vec::new();
    let mut any_t_all_failed = false;
    for &t in &cfg.t_grid {
        let ok: Vec<&CellResult> = results
            .iter()
            .filter(|c| c.t == t && c.status == "ok")
            .collect();
        if ok.is_empty() {
            any_t_all_failed = true;
            per_t.push(PerHorizonSummary {
                t,
                cells_ok: 0,
                median_final_regret: None,
                iqr_final_regret: None,
                median_sysid_error: None,
            });
            continue;
        }
        let regrets: Vec<f64> = ok.iter().filter_map(|c| c.final_regret).collect();
        let errors: Vec<f64> = ok.iter().filter_map(|c| c.sysid_error).collect();
        let med_r = if regrets.is_empty() {
            None
        } else {
            Some(median(&regrets)?)
        };
        let iqr_r = if regrets.is_empty() {
            None
        } else {
            Some(iqr(&regrets)?)
        };
        let med_e = if errors.is_empty() {
            None
        } else {
            Some(median(&errors)?)
        };
        if let Some(r) = med_r {
            regret_points.push((t, r));
        }
        if let Some(e) = med_e {
            sysid_points.push((t, e));
        }
        per_t.push(PerHorizonSummary {
            t,
            cells_ok: ok.len(),
            median_final_regret: med_r,
            iqr_final_regret: iqr_r,
            median_sysid_error: med_e,
        });
    }

    let exponent_fit = if regret_points.len() >= 3 {
        fit_regret_exponent(&regret_points).ok()
    } else {
        None
    };
    let polylog_fit = if regret_points.len() >= 3 {
        fit_regret_polylog(&regret_points).ok()
    } else {
        None
    };
    let sysid_slope = if sysid_points.len() >= 3 {
        fit_regret_exponent(&sysid_points).ok()
    } else {
        None
    };
    let memberships: Vec<&CellResult> = results.iter().filter(|c| c.membership.is_some()).collect();
    let membership_rate = if memberships.is_empty() {
        None
    } else {
        Some(
            memberships
                .iter()
                .filter(|c| c.membership == Some(true))
                .count() as f64
                / memberships.len() as f64,
        )
    };

    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        algorithm: cfg.algorithm,
        mode: cfg.mode,
        cells: results,
        per_t,
        exponent_fit,
        polylog_fit,
        sysid_slope,
        membership_rate,
        any_t_all_failed,
        checks: cfg.checks,
    };
    crate::io::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Evaluate the summary's embedded checks. Each entry is
/// (name, passed, detail).
pub fn apply_checks(summary: &ExperimentSummary) -> Vec<(String, bool, String)> {
    let mut out = Vec::new();
    let Some(checks) = &summary.checks else {
        return out;
    };
    if let Some(max_slope) = checks.max_exponent {
        let got = summary.exponent_fit.map(|f| f.slope);
        let pass = got.is_some_and(|s| s < max_slope);
        out.push((
            "max_exponent".into(),
            pass,
            format!("slope {got:?} must be < {max_slope}"),
        ));
    }
    if let Some((lo, hi)) = checks.exponent_range {
        let got = summary.exponent_fit.map(|f| f.slope);
        let pass = got.is_some_and(|s| s >= lo && s <= hi);
        out.push((
            "exponent_range".into(),
            pass,
            format!("slope {got:?} must lie in [{lo}, {hi}]"),
        ));
    }
    if let Some(min_rate) = checks.min_membership {
        let got = summary.membership_rate;
        let pass = got.is_some_and(|r| r >= min_rate);
        out.push((
            "min_membership".into(),
            pass,
            format!("membership rate {got:?} must be >= {min_rate}"),
        ));
    }
    if let Some((lo, hi)) = checks.sysid_slope_range {
        let got = summary.sysid_slope.map(|f| f.slope);
        let pass = got.is_some_and(|s| s >= lo && s <= hi);
        out.push((
            "sysid_slope_range".into(),
            pass,
            format!("sysid slope {got:?} must lie in [{lo}, {hi}]"),
        ));
    }
    out
}
