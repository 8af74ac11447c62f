//! Disturbance feedback control with projected online gradient descent on
//! counterfactual losses, in explore-and-commit and closed-loop
//! doubling-epoch variants.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::arx::{
    check_finite, stream_rng, ArxSystem, MarkovOperator, TrajectoryLog, INPUT_STREAM, NOISE_STREAM,
};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::sysid::{pe_diagnostic, rls_from_log, LsEstimate};
use crate::UpdateMode;

/// A policy of `window` taps, each p x m, acting on the most recent output
/// uncertainties: `u_t = sum_i M[i] b_{t-i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DfcPolicy {
    pub taps: Vec<DMatrix<f64>>,
}

impl DfcPolicy {
    pub fn zeros(window: usize, p: usize, m: usize) -> Self {
        Self {
            taps: vec![DMatrix::zeros(p, m); window],
        }
    }

    pub fn window(&self) -> usize {
        self.taps.len()
    }

    /// Sum of spectral norms of the taps, the set-membership functional.
    pub fn norm_sum(&self) -> f64 {
        self.taps.iter().map(spectral_norm).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t * factor).collect(),
        }
    }

    pub fn sub_scaled(&self, dir: &[DMatrix<f64>], step: f64) -> Self {
        Self {
            taps: self
                .taps
                .iter()
                .zip(dir)
                .map(|(t, d)| t - d * step)
                .collect(),
        }
    }
}

/// The feasible set: policies with `sum_i |M[i]|_2 <= kappa_psi (1 + r)`.
#[derive(Clone, Copy, Debug)]
pub struct DfcSet {
    pub kappa_psi: f64,
    pub r: f64,
    pub window: usize,
    /// Length of the un-expanded inner class, floor(window/2) - h.
    pub inner_window: usize,
}

impl DfcSet {
    pub fn new(kappa_psi: f64, r: f64, window: usize, h: usize) -> Result<Self> {
        if kappa_psi <= 0.0 || r < 0.0 {
            return Err(Error::Argument("set scales must be positive".into()));
        }
        if h == 0 || window < 3 * h {
            return Err(Error::Argument(format!(
                "policy window {window} must be at least 3h = {}",
                3 * h
            )));
        }
        Ok(Self {
            kappa_psi,
            r,
            window,
            inner_window: window / 2 - h,
        })
    }

    pub fn bound(&self) -> f64 {
        self.kappa_psi * (1.0 + self.r)
    }

    pub fn contains(&self, policy: &DfcPolicy, tol: f64) -> bool {
        policy.window() == self.window && policy.norm_sum() <= self.bound() + tol
    }
}

/// Map a policy into the set. In-set policies are returned unchanged;
/// violating ones have every tap scaled by the common factor
/// `bound / norm_sum`. This radial map is not the Euclidean projection onto
/// the spectral-norm-sum ball (that would be a second-order cone program),
/// but it is idempotent and preserves the boundedness the gradient method
/// needs.
pub fn project(policy: &DfcPolicy, set: &DfcSet) -> DfcPolicy {
    let sum = policy.norm_sum();
    let bound = set.bound();
    if sum <= bound {
        policy.clone()
    } else {
        policy.scale(bound / sum)
    }
}

type ValueFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>) + Send + Sync;

/// A loss `l(y, u)` with its gradient and curvature metadata.
pub struct LossOracle {
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
    /// Lower bound on the Hessian eigenvalues (strong convexity).
    pub alpha_lower: f64,
    /// Upper bound on the Hessian eigenvalues (smoothness).
    pub alpha_upper: f64,
    /// Lipschitz scale on bounded signal balls.
    pub lipschitz: f64,
}

impl LossOracle {
    pub fn new(
        value: impl Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>)
            + Send
            + Sync
            + 'static,
        alpha_lower: f64,
        alpha_upper: f64,
        lipschitz: f64,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            alpha_lower,
            alpha_upper,
            lipschitz,
        }
    }

    /// `l(y, u) = y^T Q y + u^T R u` with curvature read off 2Q, 2R.
    pub fn quadratic(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(Error::Dimension("loss weights must be square".into()));
        }
        let (qlo, qhi) = crate::linalg::sym_eig_range(&q);
        let (rlo, rhi) = crate::linalg::sym_eig_range(&r);
        if qlo < -1e-12 || rlo <= 0.0 {
            return Err(Error::Argument("need Q >= 0 and R > 0".into()));
        }
        let alpha_lower = 2.0 * qlo.min(rlo);
        let alpha_upper = 2.0 * qhi.max(rhi);
        let qv = q.clone();
        let rv = r.clone();
        let value = move |y: &DVector<f64>, u: &DVector<f64>| {
            (y.transpose() * &qv * y)[(0, 0)] + (u.transpose() * &rv * u)[(0, 0)]
        };
        let gradient = move |y: &DVector<f64>, u: &DVector<f64>| (2.0 * &q * y, 2.0 * &r * u);
        Ok(Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            alpha_lower,
            alpha_upper,
            lipschitz: alpha_upper,
        })
    }

    pub fn value(&self, y: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.value)(y, u)
    }

    pub fn gradient(&self, y: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (self.gradient)(y, u)
    }
}

/// Input-to-output and noise-to-output responses of the system once the
/// output feedback is folded in: `Phi_j = C (A + F C)^{j-1} B` and
/// `Psi_j = C (A + F C)^{j-1} F`, computed from the Markov parameters alone
/// by the convolution recursion
/// `Phi_j = G_u^j + sum_{k<j} G_y^k Phi_{j-k}` (same for Psi with G_y^j).
pub fn fold_output_feedback(op: &MarkovOperator) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let h = op.horizon();
    let mut phi: Vec<DMatrix<f64>> = Vec::with_capacity(h);
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(h);
    for j in 1..=h {
        let mut pj = op.g_u(j).clone();
        let mut sj = op.g_y(j).clone();
        for k in 1..j {
            pj += op.g_y(k) * &phi[j - k - 1];
            sj += op.g_y(k) * &psi[j - k - 1];
        }
        phi.push(pj);
        psi.push(sj);
    }
    (phi, psi)
}

/// Rolling context for counterfactual evaluation: the current Markov
/// estimate, its folded responses, and the history of estimated output
/// uncertainties indexed by step. Entries before recorded history are
/// zero-padded implicitly.
pub struct CounterfactualState {
    pub markov: MarkovOperator,
    pub phi_fold: Vec<DMatrix<f64>>,
    pub psi_fold: Vec<DMatrix<f64>>,
    pub b_history: Vec<DVector<f64>>,
    pub epoch: usize,
}

impl CounterfactualState {
    pub fn new(markov: MarkovOperator, epoch: usize) -> Self {
        let (phi_fold, psi_fold) = fold_output_feedback(&markov);
        Self {
            markov,
            phi_fold,
            psi_fold,
            b_history: Vec::new(),
            epoch,
        }
    }

    pub fn horizon(&self) -> usize {
        self.markov.horizon()
    }

    fn b(&self, t: isize) -> Option<&DVector<f64>> {
        if t < 0 {
            None
        } else {
            self.b_history.get(t as usize)
        }
    }

    /// Truncated output uncertainty at step `t` from the last `min(h, t)`
    /// lags of the raw signals.
    pub fn truncated_uncertainty(
        &self,
        outputs: &[DVector<f64>],
        inputs: &[DVector<f64>],
        t: usize,
    ) -> DVector<f64> {
        let h = self.horizon().min(t);
        let mut b = outputs[t].clone();
        for k in 0..h {
            b -= self.markov.g_u(k + 1) * &inputs[t - k - 1];
            b -= self.markov.g_y(k + 1) * &outputs[t - k - 1];
        }
        b
    }

    /// Rebuild the uncertainty history for all steps < `upto` under the
    /// current estimate, as the epoch refresh prescribes.
    pub fn rebuild_history(
        &mut self,
        outputs: &[DVector<f64>],
        inputs: &[DVector<f64>],
        upto: usize,
    ) {
        self.b_history.clear();
        for j in 0..upto {
            let b = self.truncated_uncertainty(outputs, inputs, j);
            self.b_history.push(b);
        }
    }

    /// Counterfactual input at offset `t - j`: the given policy applied to
    /// the uncertainty window ending there.
    fn counterfactual_input(&self, policy: &DfcPolicy, t: usize, j: usize) -> DVector<f64> {
        let p = policy.taps[0].nrows();
        let mut u = DVector::zeros(p);
        for (l, tap) in policy.taps.iter().enumerate() {
            if let Some(b) = self.b(t as isize - j as isize - l as isize) {
                u.gemv(1.0, tap, b, 1.0);
            }
        }
        u
    }
}

/// The policy's actual input at step `t`: `sum_l M[l] b_{t-l}` with
/// zero-padding before recorded history.
pub fn dfc_input(policy: &DfcPolicy, state: &CounterfactualState, t: usize) -> DVector<f64> {
    state.counterfactual_input(policy, t, 0)
}

/// Counterfactual output at step `t`: the nature part reconstructed from
/// uncertainties through the folded noise response, plus the folded input
/// response applied to the counterfactual inputs.
fn counterfactual_output(
    state: &CounterfactualState,
    t: usize,
    inputs: &[DVector<f64>],
) -> DVector<f64> {
    let m = state.markov.output_dim();
    let mut y = DVector::zeros(m);
    if let Some(b) = state.b(t as isize) {
        y += b;
    }
    for (j, (psi, phi)) in state.psi_fold.iter().zip(&state.phi_fold).enumerate() {
        if let Some(b) = state.b(t as isize - (j + 1) as isize) {
            y.gemv(1.0, psi, b, 1.0);
        }
        y.gemv(1.0, phi, &inputs[j + 1], 1.0);
    }
    y
}

fn counterfactual_inputs(
    state: &CounterfactualState,
    policy: &DfcPolicy,
    t: usize,
) -> Vec<DVector<f64>> {
    (0..=state.horizon())
        .map(|j| state.counterfactual_input(policy, t, j))
        .collect()
}

/// Loss the given policy would have incurred at step `t` had it been in
/// place long enough for the signals to reflect it.
pub fn counterfactual_loss(
    policy: &DfcPolicy,
    state: &CounterfactualState,
    loss: &LossOracle,
    t: usize,
) -> f64 {
    let inputs = counterfactual_inputs(state, policy, t);
    let y = counterfactual_output(state, t, &inputs);
    loss.value(&y, &inputs[0])
}

/// Exact gradient of [`counterfactual_loss`] in the policy taps. All maps
/// from taps to signals are linear, so the chain rule reduces to outer
/// products of loss gradients with lagged uncertainties.
pub fn counterfactual_gradient(
    policy: &DfcPolicy,
    state: &CounterfactualState,
    loss: &LossOracle,
    t: usize,
) -> Vec<DMatrix<f64>> {
    let inputs = counterfactual_inputs(state, policy, t);
    let y = counterfactual_output(state, t, &inputs);
    let (gy, gu) = loss.gradient(&y, &inputs[0]);
    // Pull the output gradient back through each folded input response.
    let pulled: Vec<DVector<f64>> = (1..=state.horizon())
        .map(|j| state.phi_fold[j - 1].transpose() * &gy)
        .collect();
    let p = policy.taps[0].nrows();
    let m = policy.taps[0].ncols();
    let mut grad = vec![DMatrix::zeros(p, m); policy.window()];
    for (l, g) in grad.iter_mut().enumerate() {
        if let Some(b) = state.b(t as isize - l as isize) {
            g.ger(1.0, &gu, b, 1.0);
        }
        for (j, pj) in pulled.iter().enumerate() {
            if let Some(b) = state.b(t as isize - (j + 1) as isize - l as isize) {
                g.ger(1.0, pj, b, 1.0);
            }
        }
    }
    grad
}

/// Configuration of one adaptive-control run with strongly convex losses.
#[derive(Clone, Copy, Debug)]
pub struct DfcRunConfig {
    pub total_steps: usize,
    /// Warm-up length (the explore-and-commit T_w, or the epoch seed tau).
    pub warmup: usize,
    /// Estimation horizon h.
    pub horizon: usize,
    /// Policy window h'.
    pub window: usize,
    pub sigma_u: f64,
    /// Multiplier on the 12 / (alpha t) step schedule.
    pub eta_scale: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl DfcRunConfig {
    fn validate(&self, loss: &LossOracle, set: &DfcSet) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.window < 3 * self.horizon {
            return Err(Error::Config(format!(
                "policy window {} below 3h = {}",
                self.window,
                3 * self.horizon
            )));
        }
        if set.window != self.window {
            return Err(Error::Config(
                "set window differs from config window".into(),
            ));
        }
        if self.warmup <= self.horizon {
            return Err(Error::Config(
                "warm-up must exceed the estimation horizon".into(),
            ));
        }
        if self.total_steps <= self.warmup {
            return Err(Error::Config("total steps must exceed the warm-up".into()));
        }
        if self.sigma_u <= 0.0 || self.eta_scale <= 0.0 || self.lambda <= 0.0 {
            return Err(Error::Config("scales must be positive".into()));
        }
        if loss.alpha_lower <= 0.0 {
            return Err(Error::Config(
                "loss must be strongly convex (alpha > 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch diagnostics of a run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EpochInfo {
    pub start: usize,
    pub samples: usize,
    pub sigma_min: f64,
    pub sigma_min_rate: f64,
}

/// Output of [`run_dfc_adaptive`].
pub struct DfcRun {
    pub log: TrajectoryLog,
    /// Realized per-step costs (same numbers as `log.losses`).
    pub costs: Vec<f64>,
    pub epochs: Vec<EpochInfo>,
    pub final_policy: DfcPolicy,
    /// Largest tap-norm sum any played policy reached.
    pub max_policy_norm: f64,
}

/// Adaptive control with strongly convex cost: Gaussian warm-up, then DFC
/// policies updated each step by projected online gradient descent on the
/// counterfactual loss, with the Markov estimate either committed once or
/// refreshed at doubling epochs from all data gathered so far.
pub fn run_dfc_adaptive(
    system: &ArxSystem,
    set: &DfcSet,
    loss: &LossOracle,
    mode: UpdateMode,
    cfg: &DfcRunConfig,
) -> Result<DfcRun> {
    cfg.validate(loss, set)?;
    let (n, m, p) = (system.state_dim(), system.output_dim(), system.input_dim());
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
    let mut x = DVector::<f64>::zeros(n);
    let mut policy = DfcPolicy::zeros(cfg.window, p, m);
    let mut state: Option<CounterfactualState> = None;
    let mut epochs = Vec::new();
    let mut next_epoch_start = cfg.warmup;
    let mut epoch_index = 0usize;
    let mut max_policy_norm = 0.0f64;
    let alpha = loss.alpha_lower;

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
                // Epoch boundary: re-estimate from everything so far. In
                // explore-and-commit only the first estimate is formed; the
                // uncertainty history is rebuilt under the fresh estimate.
                if t == cfg.warmup || mode == UpdateMode::ClosedLoop {
                    let est = fit_markov(&log, cfg, t)?;
                    let (sigma_min, sigma_min_rate) = pe_diagnostic(&est);
                    epochs.push(EpochInfo {
                        start: t,
                        samples: est.t + cfg.horizon,
                        sigma_min,
                        sigma_min_rate,
                    });
                    let mut st = CounterfactualState::new(est.markov()?, epoch_index);
                    st.rebuild_history(&log.outputs, &log.inputs, t);
                    state = Some(st);
                }
                epoch_index += 1;
                next_epoch_start = cfg.warmup * (1 << epoch_index);
            }
            let st = state.as_mut().expect("estimate exists after warm-up");
            let b_t = st.truncated_uncertainty(&log.outputs, &log.inputs, t);
            st.b_history.push(b_t);
            debug_assert_eq!(st.b_history.len(), t + 1);
            dfc_input(&policy, st, t)
        };

        let cost = loss.value(&y, &u);
        log.losses.push(cost);

        if t >= cfg.warmup {
            let st = state.as_ref().expect("estimate exists after warm-up");
            let grad = counterfactual_gradient(&policy, st, loss, t);
            let eta = cfg.eta_scale * 12.0 / (alpha * t as f64);
            policy = project(&policy.sub_scaled(&grad, eta), set);
            let norm = policy.norm_sum();
            max_policy_norm = max_policy_norm.max(norm);
            debug_assert!(norm <= set.bound() + 1e-9);
        }

        x = system.a() * &x + system.b() * &u + system.f() * &y;
        log.inputs.push(u);
        log.noises.push(e);
    }

    let costs = log.losses.clone();
    Ok(DfcRun {
        log,
        costs,
        epochs,
        final_policy: policy,
        max_policy_norm,
    })
}

fn fit_markov(log: &TrajectoryLog, cfg: &DfcRunConfig, upto: usize) -> Result<LsEstimate> {
    // Estimate from the completed prefix; the current y_t is already in the
    // log but its input is not chosen yet, so slice to `upto`.
    let prefix = TrajectoryLog {
        states: Vec::new(),
        outputs: log.outputs[..upto].to_vec(),
        inputs: log.inputs[..upto].to_vec(),
        noises: Vec::new(),
        losses: vec![0.0; upto],
        seed: log.seed,
    };
    rls_from_log(&prefix, cfg.horizon, cfg.lambda)
}

/// Smallest horizon whose decay tail is below 1 / (10 T), the default rule
/// for choosing h given a ground-truth system.
pub fn default_horizon(system: &ArxSystem, total_steps: usize) -> Result<usize> {
    let target = 1.0 / (10.0 * total_steps as f64);
    for h in 1..512 {
        if system.decay_psi(h, 256)? <= target {
            return Ok(h);
        }
    }
    Err(Error::Argument(
        "no horizon below 512 meets the decay target".into(),
    ))
}
