//! ARX systems in predictor form, trajectory simulation, Markov operators and
//! output uncertainties.
//!
//! Dynamics: `x_{t+1} = A x_t + B u_t + F y_t`, `y_t = C x_t + e_t`. The
//! input-to-output Markov parameters are `C A^{i-1} B` and the
//! output-to-output ones are `C A^{i-1} F`, indexed from 1.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, spectral_radius, sym_eig_range};

/// Eigenvalue-modulus tolerance for the stability checks at construction.
pub const STABILITY_TOL: f64 = 1e-9;

/// RNG stream carrying measurement noise draws.
pub const NOISE_STREAM: u64 = 0;
/// RNG stream carrying exploration inputs.
pub const INPUT_STREAM: u64 = 1;
/// RNG stream for algorithm-internal randomness (candidate sampling etc.).
pub const SEARCH_STREAM: u64 = 2;

/// Seeded RNG on one of the crate's named streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    UniformBounded,
    RademacherScaled,
}

/// Zero-mean sub-Gaussian measurement noise.
///
/// `sigma_e` is the per-step covariance; `sub_gaussian_r` the variance proxy
/// R (so coordinates are R^2-sub-Gaussian); `sigma_e_sq_lower` a scalar with
/// `Sigma_E >= sigma_e_sq_lower * I`. The non-Gaussian kinds draw independent
/// coordinates matching the diagonal of `sigma_e`. An all-zero covariance is
/// accepted and yields deterministic (noiseless) runs.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sub_gaussian_r: f64,
    pub sigma_e: DMatrix<f64>,
    pub sigma_e_sq_lower: f64,
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl NoiseSpec {
    pub fn new(
        kind: NoiseKind,
        sigma_e: DMatrix<f64>,
        sub_gaussian_r: f64,
        sigma_e_sq_lower: f64,
    ) -> Result<Self> {
        if !sigma_e.is_square() {
            return Err(Error::Dimension("noise covariance must be square".into()));
        }
        if (sigma_e.clone() - sigma_e.transpose()).norm() > 1e-9 * (1.0 + sigma_e.norm()) {
            return Err(Error::Argument("noise covariance must be symmetric".into()));
        }
        if sub_gaussian_r < 0.0 || sigma_e_sq_lower < 0.0 {
            return Err(Error::Argument("noise scales must be non-negative".into()));
        }
        let (lmin, _) = sym_eig_range(&sigma_e);
        if lmin < sigma_e_sq_lower - 1e-9 {
            return Err(Error::Argument(format!(
                "lambda_min(Sigma_E) = {lmin:.3e} below declared lower bound {sigma_e_sq_lower:.3e}"
            )));
        }
        let zero = sigma_e.norm() == 0.0;
        let chol = if zero {
            None
        } else {
            match kind {
                NoiseKind::Gaussian => Some(Cholesky::new(sigma_e.clone()).ok_or_else(|| {
                    Error::Argument("gaussian noise covariance not positive definite".into())
                })?),
                _ => None,
            }
        };
        Ok(Self {
            kind,
            sub_gaussian_r,
            sigma_e,
            sigma_e_sq_lower,
            chol,
        })
    }

    /// Isotropic Gaussian noise with covariance `sigma^2 I`.
    pub fn gaussian_iso(dim: usize, sigma: f64) -> Result<Self> {
        let cov = DMatrix::identity(dim, dim) * sigma * sigma;
        Self::new(NoiseKind::Gaussian, cov, sigma, sigma * sigma)
    }

    /// Independent uniform coordinates on [-a, a]; variance a^2/3, proxy R = a.
    pub fn uniform_iso(dim: usize, half_width: f64) -> Result<Self> {
        let var = half_width * half_width / 3.0;
        let cov = DMatrix::identity(dim, dim) * var;
        Self::new(NoiseKind::UniformBounded, cov, half_width, var)
    }

    /// Independent +-s coordinates; variance s^2, proxy R = s.
    pub fn rademacher_iso(dim: usize, scale: f64) -> Result<Self> {
        let var = scale * scale;
        let cov = DMatrix::identity(dim, dim) * var;
        Self::new(NoiseKind::RademacherScaled, cov, scale, var)
    }

    /// Noiseless spec, for deterministic regression fixtures.
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sub_gaussian_r: 0.0,
            sigma_e: DMatrix::zeros(dim, dim),
            sigma_e_sq_lower: 0.0,
            chol: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma_e.nrows()
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let m = self.dim();
        match self.kind {
            NoiseKind::Gaussian => match &self.chol {
                None => DVector::zeros(m),
                Some(ch) => {
                    let z = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
                    ch.l() * z
                }
            },
            NoiseKind::UniformBounded => DVector::from_fn(m, |i, _| {
                let a = (3.0 * self.sigma_e[(i, i)]).sqrt();
                if a == 0.0 {
                    0.0
                } else {
                    rng.random_range(-a..=a)
                }
            }),
            NoiseKind::RademacherScaled => DVector::from_fn(m, |i, _| {
                let s = self.sigma_e[(i, i)].sqrt();
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            }),
        }
    }
}

/// Ground-truth ARX model Theta = (A, B, C, F) with a noise specification.
///
/// Construction rejects systems with `rho(A) >= 1` or `rho(A + F C) >= 1`
/// (within [`STABILITY_TOL`]); both conditions carry distinct errors.
#[derive(Clone, Debug)]
pub struct ArxSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    f: DMatrix<f64>,
    pub noise: NoiseSpec,
}

impl ArxSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        f: DMatrix<f64>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        let (m, p) = (c.nrows(), b.ncols());
        if b.nrows() != n || c.ncols() != n || f.nrows() != n || f.ncols() != m {
            return Err(Error::Dimension(format!(
                "inconsistent dimensions: A {}x{}, B {}x{}, C {}x{}, F {}x{}",
                n,
                n,
                b.nrows(),
                p,
                m,
                c.ncols(),
                f.nrows(),
                f.ncols()
            )));
        }
        if noise.dim() != m {
            return Err(Error::Dimension(format!(
                "noise dimension {} does not match output dimension {}",
                noise.dim(),
                m
            )));
        }
        let rho_a = spectral_radius(&a);
        if rho_a >= 1.0 - STABILITY_TOL {
            return Err(Error::UnstableA { rho: rho_a });
        }
        let rho_cl = spectral_radius(&(&a + &f * &c));
        if rho_cl >= 1.0 - STABILITY_TOL {
            return Err(Error::UnstableClosedLoop { rho: rho_cl });
        }
        Ok(Self { a, b, c, f, noise })
    }

    /// Scalar convenience constructor used throughout the fixtures.
    pub fn scalar(a: f64, b: f64, c: f64, f: f64, noise: NoiseSpec) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, f),
            noise,
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// A + F C, the matrix that propagates the state once outputs are fed back.
    pub fn feedback_matrix(&self) -> DMatrix<f64> {
        &self.a + &self.f * &self.c
    }

    /// sup over tau <= cap of |A^tau| / rho(A)^tau. Diagnostic only.
    pub fn transient_amplification(&self, cap: usize) -> f64 {
        let rho = spectral_radius(&self.a).max(1e-300);
        let mut pow = DMatrix::<f64>::identity(self.state_dim(), self.state_dim());
        let mut best = 1.0f64;
        let mut denom = 1.0f64;
        for _ in 0..cap {
            pow = &pow * &self.a;
            denom *= rho;
            best = best.max(spectral_norm(&pow) / denom);
        }
        best
    }

    /// One step of the dynamics: returns `(x_next, y)` with
    /// `y = C x + e` and `x_next = A x + B u + F y`.
    pub fn step(
        &self,
        state: &DVector<f64>,
        input: &DVector<f64>,
        noise: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        if state.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "state has length {}, expected {}",
                state.len(),
                self.state_dim()
            )));
        }
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        if noise.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "noise has length {}, expected {}",
                noise.len(),
                self.output_dim()
            )));
        }
        let y = &self.c * state + noise;
        let x_next = &self.a * state + &self.b * input + &self.f * &y;
        Ok((x_next, y))
    }

    /// First `h` Markov parameters, by iterated multiplication with A.
    pub fn markov_parameters(&self, h: usize) -> Result<MarkovOperator> {
        if h == 0 {
            return Err(Error::Argument("markov horizon must be >= 1".into()));
        }
        let mut g_u = Vec::with_capacity(h);
        let mut g_y = Vec::with_capacity(h);
        let mut lead = self.c.clone();
        for _ in 0..h {
            g_u.push(&lead * &self.b);
            g_y.push(&lead * &self.f);
            lead = &lead * &self.a;
        }
        MarkovOperator::new(g_u, g_y)
    }

    /// Tail mass of the Markov operator from index `h` on, summed over
    /// `tail` explicit terms with a geometric bound on the remainder.
    pub fn decay_psi(&self, h: usize, tail: usize) -> Result<f64> {
        if tail == 0 {
            return Err(Error::Argument("decay tail must be >= 1".into()));
        }
        let start = h.max(1);
        let mut lead = self.c.clone();
        for _ in 0..start - 1 {
            lead = &lead * &self.a;
        }
        let mut terms = Vec::with_capacity(tail);
        for _ in 0..tail {
            let mu = spectral_norm(&(&lead * &self.b));
            let my = spectral_norm(&(&lead * &self.f));
            terms.push(mu.max(my));
            lead = &lead * &self.a;
        }
        let sum: f64 = terms.iter().sum();
        let last = *terms.last().expect("tail >= 1");
        if last == 0.0 {
            return Ok(sum);
        }
        // Estimate the geometric ratio from the trailing terms.
        let mut q = 0.0f64;
        let lookback = terms.len().saturating_sub(8).max(1);
        for w in terms[lookback - 1..].windows(2) {
            if w[0] > 0.0 {
                q = q.max(w[1] / w[0]);
            }
        }
        if q >= 1.0 - 1e-12 {
            return Err(Error::Argument(
                "decay tail too short: trailing terms are not yet geometric".into(),
            ));
        }
        Ok(sum + last * q / (1.0 - q))
    }
}

/// Paired h-length sequences of Markov parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovOperator {
    g_u: Vec<DMatrix<f64>>,
    g_y: Vec<DMatrix<f64>>,
    m: usize,
    p: usize,
}

impl MarkovOperator {
    pub fn new(g_u: Vec<DMatrix<f64>>, g_y: Vec<DMatrix<f64>>) -> Result<Self> {
        if g_u.is_empty() || g_u.len() != g_y.len() {
            return Err(Error::Argument(
                "markov sequences must be non-empty and of equal length".into(),
            ));
        }
        let m = g_u[0].nrows();
        let p = g_u[0].ncols();
        for gu in &g_u {
            if gu.nrows() != m || gu.ncols() != p {
                return Err(Error::Dimension("inconsistent block shape in g_u".into()));
            }
        }
        for gy in &g_y {
            if gy.nrows() != m || gy.ncols() != m {
                return Err(Error::Dimension("inconsistent block shape in g_y".into()));
            }
        }
        Ok(Self { g_u, g_y, m, p })
    }

    pub fn horizon(&self) -> usize {
        self.g_u.len()
    }
    pub fn output_dim(&self) -> usize {
        self.m
    }
    pub fn input_dim(&self) -> usize {
        self.p
    }

    /// Input-to-output parameter with 1-based index `i` (`C A^{i-1} B`).
    pub fn g_u(&self, i: usize) -> &DMatrix<f64> {
        &self.g_u[i - 1]
    }
    /// Output-to-output parameter with 1-based index `i` (`C A^{i-1} F`).
    pub fn g_y(&self, i: usize) -> &DMatrix<f64> {
        &self.g_y[i - 1]
    }

    pub fn g_u_blocks(&self) -> &[DMatrix<f64>] {
        &self.g_u
    }
    pub fn g_y_blocks(&self) -> &[DMatrix<f64>] {
        &self.g_y
    }

    /// The m x h(m+p) matrix `[G_u(h)  G_y(h)]` acting on stacked regressors.
    pub fn stacked(&self) -> DMatrix<f64> {
        let h = self.horizon();
        let mut out = DMatrix::zeros(self.m, h * (self.m + self.p));
        for (i, gu) in self.g_u.iter().enumerate() {
            out.view_mut((0, i * self.p), (self.m, self.p))
                .copy_from(gu);
        }
        let off = h * self.p;
        for (i, gy) in self.g_y.iter().enumerate() {
            out.view_mut((0, off + i * self.m), (self.m, self.m))
                .copy_from(gy);
        }
        out
    }

    /// Inverse of [`stacked`]: split an m x h(m+p) matrix into blocks.
    pub fn from_stacked(mat: &DMatrix<f64>, h: usize, m: usize, p: usize) -> Result<Self> {
        if mat.nrows() != m || mat.ncols() != h * (m + p) {
            return Err(Error::Dimension(format!(
                "stacked operator is {}x{}, expected {}x{}",
                mat.nrows(),
                mat.ncols(),
                m,
                h * (m + p)
            )));
        }
        let g_u = (0..h)
            .map(|i| mat.view((0, i * p), (m, p)).into_owned())
            .collect();
        let off = h * p;
        let g_y = (0..h)
            .map(|i| mat.view((0, off + i * m), (m, m)).into_owned())
            .collect();
        Self::new(g_u, g_y)
    }

    /// Truncate to the first `h` parameters.
    pub fn truncated(&self, h: usize) -> Result<Self> {
        if h == 0 || h > self.horizon() {
            return Err(Error::Argument(format!(
                "cannot truncate horizon {} to {h}",
                self.horizon()
            )));
        }
        Self::new(self.g_u[..h].to_vec(), self.g_y[..h].to_vec())
    }

    /// Tail mass from index `h` within the stored horizon (no remainder term;
    /// parameters beyond the stored horizon are treated as zero).
    pub fn decay_psi(&self, h: usize) -> f64 {
        let start = h.max(1);
        (start..=self.horizon())
            .map(|i| spectral_norm(self.g_u(i)).max(spectral_norm(self.g_y(i))))
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.stacked().norm()
    }
}

/// Everything recorded over one simulated run.
///
/// `states`, `outputs`, `inputs`, `noises` and `losses` share one length T;
/// `states[t]` is the state at the *start* of step t. CSV serialization keeps
/// only (t, u, y, loss), so logs read back from disk are not replayable.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub noises: Vec<DVector<f64>>,
    pub losses: Vec<f64>,
    pub seed: u64,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Build a log from bare input/output signals (no states or noises), as
    /// when loading the CSV interchange format.
    pub fn from_signals(inputs: Vec<DVector<f64>>, outputs: Vec<DVector<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Dimension("input/output lengths differ".into()));
        }
        let losses = vec![0.0; outputs.len()];
        Ok(Self {
            states: vec![],
            outputs,
            inputs,
            noises: vec![],
            losses,
            seed: 0,
        })
    }

    pub fn is_replayable(&self) -> bool {
        self.states.len() == self.len() && self.noises.len() == self.len()
    }

    /// Verify that pushing (x_0, u, e) through the dynamics reproduces the
    /// stored states and outputs within `tol` per step.
    pub fn replay_check(&self, system: &ArxSystem, tol: f64) -> Result<()> {
        if !self.is_replayable() {
            return Err(Error::Argument(
                "log carries no states/noises to replay".into(),
            ));
        }
        if self.is_empty() {
            return Ok(());
        }
        let mut x = self.states[0].clone();
        for t in 0..self.len() {
            let (x_next, y) = system.step(&x, &self.inputs[t], &self.noises[t])?;
            if (&y - &self.outputs[t]).norm() > tol || (&x - &self.states[t]).norm() > tol {
                return Err(Error::Numerical(format!("replay diverged at step {t}")));
            }
            x = x_next;
        }
        Ok(())
    }
}

/// What a controller is allowed to see when choosing the next input: the
/// outputs up to and including the current step, and inputs/losses of
/// completed steps.
pub struct Observation<'a> {
    pub t: usize,
    pub outputs: &'a [DVector<f64>],
    pub inputs: &'a [DVector<f64>],
    pub losses: &'a [f64],
}

pub trait Controller {
    fn control(&mut self, obs: &Observation<'_>) -> DVector<f64>;
}

impl<F> Controller for F
where
    F: FnMut(&Observation<'_>) -> DVector<f64>,
{
    fn control(&mut self, obs: &Observation<'_>) -> DVector<f64> {
        self(obs)
    }
}

/// Always outputs zero.
pub struct ZeroController {
    dim: usize,
}

impl ZeroController {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Controller for ZeroController {
    fn control(&mut self, _obs: &Observation<'_>) -> DVector<f64> {
        DVector::zeros(self.dim)
    }
}

/// i.i.d. N(0, sigma_u^2 I) exploration inputs on the input RNG stream.
pub struct GaussianController {
    dim: usize,
    sigma_u: f64,
    rng: ChaCha12Rng,
}

impl GaussianController {
    pub fn new(dim: usize, sigma_u: f64, seed: u64) -> Self {
        Self {
            dim,
            sigma_u,
            rng: stream_rng(seed, INPUT_STREAM),
        }
    }
}

impl Controller for GaussianController {
    fn control(&mut self, _obs: &Observation<'_>) -> DVector<f64> {
        let s = self.sigma_u;
        DVector::from_fn(self.dim, |_, _| {
            s * self.rng.sample::<f64, _>(StandardNormal)
        })
    }
}

/// Simulate `steps` steps from x_0 = 0 under the given controller,
/// deterministic in `seed`. `loss` is evaluated on each realized (y, u) pair
/// and recorded in the log.
pub fn simulate_traced<C: Controller>(
    system: &ArxSystem,
    controller: &mut C,
    steps: usize,
    seed: u64,
    loss: impl Fn(&DVector<f64>, &DVector<f64>) -> f64,
) -> Result<TrajectoryLog> {
    simulate_from(
        system,
        DVector::zeros(system.state_dim()),
        controller,
        steps,
        seed,
        loss,
    )
}

/// [`simulate_traced`] with an explicit initial state.
pub fn simulate_from<C: Controller>(
    system: &ArxSystem,
    x0: DVector<f64>,
    controller: &mut C,
    steps: usize,
    seed: u64,
    loss: impl Fn(&DVector<f64>, &DVector<f64>) -> f64,
) -> Result<TrajectoryLog> {
    if steps == 0 {
        return Err(Error::Argument("simulation needs steps >= 1".into()));
    }
    if x0.len() != system.state_dim() {
        return Err(Error::Dimension("x0 has the wrong dimension".into()));
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
    let mut x = x0;
    for t in 0..steps {
        let e = system.noise.draw(&mut noise_rng);
        let y = system.c() * &x + &e;
        check_finite(t, &x, &y)?;
        log.states.push(x.clone());
        log.outputs.push(y.clone());
        let u = {
            let obs = Observation {
                t,
                outputs: &log.outputs,
                inputs: &log.inputs,
                losses: &log.losses,
            };
            controller.control(&obs)
        };
        if u.len() != system.input_dim() {
            return Err(Error::BadControl {
                step: t,
                got: u.len(),
                expected: system.input_dim(),
            });
        }
        log.losses.push(loss(&y, &u));
        x = system.a() * &x + system.b() * &u + system.f() * &y;
        log.inputs.push(u);
        log.noises.push(e);
    }
    Ok(log)
}

/// Simulation without a loss attached (losses logged as zero).
pub fn simulate<C: Controller>(
    system: &ArxSystem,
    controller: &mut C,
    steps: usize,
    seed: u64,
) -> Result<TrajectoryLog> {
    simulate_traced(system, controller, steps, seed, |_, _| 0.0)
}

pub(crate) fn check_finite(step: usize, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
    let xn = x.norm();
    let yn = y.norm();
    if !xn.is_finite() || !yn.is_finite() || xn > 1e12 || yn > 1e12 {
        return Err(Error::Diverged {
            step,
            state_norm: xn,
            output_norm: yn,
        });
    }
    Ok(())
}

/// Output uncertainty: the residual of `y_t` after subtracting the
/// Markov-parameter-explained input/output history.
///
/// With `truncated` the sum runs over the last `min(h, t)` lags, which is the
/// quantity adaptive controllers can actually form from an estimate; with the
/// full window (up to the operator's horizon) and the true operator this
/// reproduces `C A^t x_0 + e_t`, hence exactly `e_t` when x_0 = 0.
pub fn output_uncertainty(
    log: &TrajectoryLog,
    op: &MarkovOperator,
    t: usize,
    truncated: bool,
) -> Result<DVector<f64>> {
    if t >= log.len() {
        return Err(Error::Argument(format!(
            "step {t} outside log of length {}",
            log.len()
        )));
    }
    if op.input_dim() != log.inputs[0].len() || op.output_dim() != log.outputs[0].len() {
        return Err(Error::Dimension(
            "operator dimensions do not match the log".into(),
        ));
    }
    let window = if truncated {
        op.horizon().min(t)
    } else {
        t.min(op.horizon())
    };
    let mut b = log.outputs[t].clone();
    for k in 0..window {
        b -= op.g_u(k + 1) * &log.inputs[t - k - 1];
        b -= op.g_y(k + 1) * &log.outputs[t - k - 1];
    }
    Ok(b)
}
