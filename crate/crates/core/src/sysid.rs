//! Regularized least-squares identification of Markov parameters, with
//! self-normalized confidence radii and persistence-of-excitation
//! diagnostics. The same estimator serves open-loop and closed-loop data.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::arx::{MarkovOperator, TrajectoryLog};
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, sym_eig_range};

/// Stacked covariate `[u_{i-1}; ...; u_{i-h}; y_{i-1}; ...; y_{i-h}]`,
/// newest first within each block.
#[derive(Clone, Debug, PartialEq)]
pub struct Regressor {
    pub phi: DVector<f64>,
    /// Step the target output `y_t` was observed at.
    pub t: usize,
}

/// One regressor per i in [h, T-1], in step order.
pub fn build_regressors(log: &TrajectoryLog, h: usize) -> Result<Vec<Regressor>> {
    if h == 0 {
        return Err(Error::Argument("regressor horizon must be >= 1".into()));
    }
    if log.len() <= h {
        return Err(Error::Argument(format!(
            "log of length {} is too short for horizon {h} (need > h)",
            log.len()
        )));
    }
    let p = log.inputs[0].len();
    let m = log.outputs[0].len();
    let d = h * (m + p);
    let mut out = Vec::with_capacity(log.len() - h);
    for i in h..log.len() {
        let mut phi = DVector::zeros(d);
        for k in 0..h {
            phi.rows_mut(k * p, p).copy_from(&log.inputs[i - k - 1]);
            phi.rows_mut(h * p + k * m, m)
                .copy_from(&log.outputs[i - k - 1]);
        }
        out.push(Regressor { phi, t: i });
    }
    Ok(out)
}

/// Solution of the regularized least-squares problem together with its
/// design matrix `V = lambda I + sum phi phi^T`.
#[derive(Clone, Debug)]
pub struct LsEstimate {
    /// m x h(m+p) coefficient matrix, blocks `[G_u(h)  G_y(h)]`.
    pub g_hat: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub lambda: f64,
    /// Number of regression samples folded into the estimate.
    pub t: usize,
    /// Confidence radius, once attached via [`attach_confidence`].
    pub beta: Option<f64>,
    pub h: usize,
    pub m: usize,
    pub p: usize,
}

impl LsEstimate {
    pub fn markov(&self) -> Result<MarkovOperator> {
        MarkovOperator::from_stacked(&self.g_hat, self.h, self.m, self.p)
    }
}

/// Solve `min_G lambda |G|_F^2 + sum_i |y_i - G phi_i|^2` by a Cholesky
/// factorization of the design matrix (never an explicit inverse).
///
/// `outputs[i]` is the target for `regressors[i]`.
pub fn rls_estimate(
    regressors: &[Regressor],
    outputs: &[DVector<f64>],
    lambda: f64,
    h: usize,
) -> Result<LsEstimate> {
    if regressors.is_empty() {
        return Err(Error::Argument(
            "least squares needs at least one regressor".into(),
        ));
    }
    if regressors.len() != outputs.len() {
        return Err(Error::Dimension("regressor/output counts differ".into()));
    }
    if lambda <= 0.0 {
        return Err(Error::Argument("regularizer must be positive".into()));
    }
    let d = regressors[0].phi.len();
    let m = outputs[0].len();
    if h == 0 || !d.is_multiple_of(h) || d / h <= m {
        return Err(Error::Dimension(format!(
            "regressor length {d} incompatible with horizon {h} and output dim {m}"
        )));
    }
    let p = d / h - m;

    let mut v = DMatrix::<f64>::identity(d, d) * lambda;
    let mut yphi = DMatrix::<f64>::zeros(m, d);
    for (reg, y) in regressors.iter().zip(outputs) {
        v.ger(1.0, &reg.phi, &reg.phi, 1.0);
        yphi.ger(1.0, y, &reg.phi, 1.0);
    }
    solve_normal_equations(v, yphi, lambda, regressors.len(), h, m, p)
}

/// Convenience: regressors and aligned targets straight from a log.
pub fn rls_from_log(log: &TrajectoryLog, h: usize, lambda: f64) -> Result<LsEstimate> {
    let regs = build_regressors(log, h)?;
    let ys: Vec<DVector<f64>> = regs.iter().map(|r| log.outputs[r.t].clone()).collect();
    rls_estimate(&regs, &ys, lambda, h)
}

fn solve_normal_equations(
    v: DMatrix<f64>,
    yphi: DMatrix<f64>,
    lambda: f64,
    t: usize,
    h: usize,
    m: usize,
    p: usize,
) -> Result<LsEstimate> {
    let chol = Cholesky::new(v.clone()).ok_or_else(|| {
        Error::Numerical("design matrix numerically singular despite regularization".into())
    })?;
    let g_hat = chol.solve(&yphi.transpose()).transpose();
    let residual = (&g_hat * &v - &yphi).norm();
    if residual > 1e-8 * v.norm() {
        return Err(Error::Numerical(format!(
            "normal-equation residual {residual:.3e} exceeds 1e-8 * |V|"
        )));
    }
    Ok(LsEstimate {
        g_hat,
        v,
        lambda,
        t,
        beta: None,
        h,
        m,
        p,
    })
}

/// Parameters of the confidence-set radius.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ConfidenceParams {
    /// Frobenius bound on the true stacked operator.
    pub s: f64,
    /// Failure probability in (0, 1).
    pub delta: f64,
    /// Sub-Gaussian variance proxy of the noise coordinates.
    pub r: f64,
    /// Total horizon; enters through the truncation-bias term t sqrt(h) / T^2.
    pub t_total: usize,
}

impl ConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Argument("delta must lie in (0, 1)".into()));
        }
        if self.s <= 0.0 || self.r < 0.0 || self.t_total == 0 {
            return Err(Error::Argument("confidence parameters out of range".into()));
        }
        Ok(())
    }
}

/// Radius beta_t of the self-normalized confidence ellipsoid
/// `{G' : tr((G_hat - G') V (G_hat - G')^T) <= beta_t}`:
///
/// `beta_t = (sqrt(m R log(det(V)^{1/2} det(lambda I)^{-1/2} / delta))
///            + S sqrt(lambda) + t sqrt(h)/T^2)^2`,
///
/// with the determinant ratio evaluated in log space from the Cholesky
/// factor, so no under- or overflow path exists.
pub fn confidence_radius(est: &LsEstimate, params: &ConfidenceParams) -> Result<f64> {
    params.validate()?;
    let d = est.v.nrows();
    let chol = Cholesky::new(est.v.clone())
        .ok_or_else(|| Error::Numerical("design matrix not factorizable".into()))?;
    let log_ratio = log_det_spd(&chol) - d as f64 * est.lambda.ln();
    let log_term = (1.0 / params.delta).ln() + 0.5 * log_ratio;
    let bias = est.t as f64 * (est.h as f64).sqrt() / (params.t_total as f64).powi(2);
    let root =
        (est.m as f64 * params.r * log_term).max(0.0).sqrt() + params.s * est.lambda.sqrt() + bias;
    Ok(root * root)
}

/// Attach the radius to the estimate and return it.
pub fn attach_confidence(est: &mut LsEstimate, params: &ConfidenceParams) -> Result<f64> {
    let beta = confidence_radius(est, params)?;
    est.beta = Some(beta);
    Ok(beta)
}

/// Smallest eigenvalue of the design matrix and its per-sample rate
/// `lambda_min(V_t) / t`: the empirical persistence-of-excitation reading.
pub fn pe_diagnostic(est: &LsEstimate) -> (f64, f64) {
    let (lmin, _) = sym_eig_range(&est.v);
    (lmin, lmin / est.t.max(1) as f64)
}

/// Frobenius distance between an estimate and a reference operator over
/// their (equal) horizons.
pub fn estimation_error(est: &LsEstimate, truth: &MarkovOperator) -> Result<f64> {
    if truth.horizon() != est.h {
        return Err(Error::Argument(format!(
            "horizon mismatch: estimate {} vs reference {}",
            est.h,
            truth.horizon()
        )));
    }
    if truth.output_dim() != est.m || truth.input_dim() != est.p {
        return Err(Error::Dimension("operator dimensions differ".into()));
    }
    Ok((&est.g_hat - truth.stacked()).norm())
}

/// Membership of a reference operator in the estimate's ellipsoid:
/// `tr((G_hat - G) V (G_hat - G)^T) <= beta`.
pub fn ellipsoid_membership(est: &LsEstimate, truth: &MarkovOperator, beta: f64) -> Result<bool> {
    if truth.horizon() != est.h {
        return Err(Error::Argument("horizon mismatch".into()));
    }
    let diff = &est.g_hat - truth.stacked();
    let weighted = (&diff * &est.v * diff.transpose()).trace();
    Ok(weighted <= beta)
}

/// Samples between from-scratch refactorizations of the streaming factor.
pub const REFACTOR_INTERVAL: usize = 256;

/// Streaming accumulator for the same normal equations: the design matrix
/// and its Cholesky factor grow by rank-one updates, with the factor
/// refreshed from scratch every [`REFACTOR_INTERVAL`] samples to bound drift.
#[derive(Clone, Debug)]
pub struct RlsAccumulator {
    v: DMatrix<f64>,
    yphi: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    since_refactor: usize,
    lambda: f64,
    count: usize,
    h: usize,
    m: usize,
    p: usize,
}

impl RlsAccumulator {
    pub fn new(h: usize, m: usize, p: usize, lambda: f64) -> Result<Self> {
        if h == 0 || m == 0 || p == 0 {
            return Err(Error::Argument("dimensions must be positive".into()));
        }
        if lambda <= 0.0 {
            return Err(Error::Argument("regularizer must be positive".into()));
        }
        let d = h * (m + p);
        let v = DMatrix::<f64>::identity(d, d) * lambda;
        let chol = Cholesky::new(v.clone()).expect("lambda I is positive definite");
        Ok(Self {
            v,
            yphi: DMatrix::zeros(m, d),
            chol,
            since_refactor: 0,
            lambda,
            count: 0,
            h,
            m,
            p,
        })
    }

    pub fn push(&mut self, phi: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if phi.len() != self.v.nrows() || y.len() != self.m {
            return Err(Error::Dimension(
                "sample dimensions do not match accumulator".into(),
            ));
        }
        self.v.ger(1.0, phi, phi, 1.0);
        self.yphi.ger(1.0, y, phi, 1.0);
        self.count += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor()?;
        } else {
            self.chol.rank_one_update(phi, 1.0);
        }
        Ok(())
    }

    fn refactor(&mut self) -> Result<()> {
        self.chol = Cholesky::new(self.v.clone())
            .ok_or_else(|| Error::Numerical("design matrix lost positive definiteness".into()))?;
        self.since_refactor = 0;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> Result<LsEstimate> {
        if self.count == 0 {
            return Err(Error::Argument("no samples accumulated".into()));
        }
        solve_normal_equations(
            self.v.clone(),
            self.yphi.clone(),
            self.lambda,
            self.count,
            self.h,
            self.m,
            self.p,
        )
    }
}
