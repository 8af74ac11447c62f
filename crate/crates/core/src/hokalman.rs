//! State-space realization from Markov parameters via Hankel-matrix SVD,
//! unique up to a similarity transform, plus per-matrix confidence radii.

use nalgebra::DMatrix;

use crate::arx::MarkovOperator;
use crate::error::{Error, Result};
use crate::linalg::{pinv, spectral_norm, spectral_radius};

/// Singular values below this relative threshold are treated as zero in
/// pseudoinverses.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Below this, the rank-n truncation is declared degenerate.
pub const ORDER_DEFICIENCY_TOL: f64 = 1e-12;

/// The two block-Hankel matrices `[H_{G_y->y}, H_{G_u->y}]` built from an
/// h-length operator with split d1 + d2 + 1 = h. Block (i, j) of each half
/// (0-based) holds the Markov parameter with 1-based index i + j + 1.
#[derive(Clone, Debug)]
pub struct HankelPair {
    pub h_y: DMatrix<f64>,
    pub h_u: DMatrix<f64>,
    pub d1: usize,
    pub d2: usize,
    pub m: usize,
    pub p: usize,
}

pub fn build_hankel(op: &MarkovOperator, d1: usize, d2: usize) -> Result<HankelPair> {
    if d1 == 0 || d2 == 0 || d1 + d2 + 1 != op.horizon() {
        return Err(Error::Argument(format!(
            "hankel split needs d1, d2 >= 1 with d1 + d2 + 1 = h; got d1 = {d1}, d2 = {d2}, h = {}",
            op.horizon()
        )));
    }
    let (m, p) = (op.output_dim(), op.input_dim());
    let mut h_y = DMatrix::zeros(m * d1, m * (d2 + 1));
    let mut h_u = DMatrix::zeros(m * d1, p * (d2 + 1));
    for i in 0..d1 {
        for j in 0..=d2 {
            h_y.view_mut((i * m, j * m), (m, m))
                .copy_from(op.g_y(i + j + 1));
            h_u.view_mut((i * m, j * p), (m, p))
                .copy_from(op.g_u(i + j + 1));
        }
    }
    Ok(HankelPair {
        h_y,
        h_u,
        d1,
        d2,
        m,
        p,
    })
}

impl HankelPair {
    /// `[H_y, H_u]`, the full m d1 x (m+p)(d2+1) concatenation.
    pub fn combined(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.h_y.nrows(), self.h_y.ncols() + self.h_u.ncols());
        out.view_mut((0, 0), self.h_y.shape()).copy_from(&self.h_y);
        out.view_mut((0, self.h_y.ncols()), self.h_u.shape())
            .copy_from(&self.h_u);
        out
    }

    /// Drop the last block column of each half (block columns d2+1 and
    /// 2d2+2 of the concatenation, counting from 1).
    pub fn minus(&self) -> DMatrix<f64> {
        self.select(0, self.d2)
    }

    /// Drop the first block column of each half (block columns 1 and d2+2).
    pub fn plus(&self) -> DMatrix<f64> {
        self.select(1, self.d2)
    }

    fn select(&self, start: usize, count: usize) -> DMatrix<f64> {
        let rows = self.h_y.nrows();
        let mut out = DMatrix::zeros(rows, (self.m + self.p) * count);
        out.view_mut((0, 0), (rows, self.m * count))
            .copy_from(&self.h_y.view((0, start * self.m), (rows, self.m * count)));
        out.view_mut((0, self.m * count), (rows, self.p * count))
            .copy_from(&self.h_u.view((0, start * self.p), (rows, self.p * count)));
        out
    }

    pub fn total_horizon(&self) -> usize {
        self.d1 + self.d2 + 1
    }
}

/// Balanced split `d1 = floor((h-1)/2)`, `d2 = h - 1 - d1`.
pub fn default_split(h: usize) -> (usize, usize) {
    let d1 = (h - 1) / 2;
    (d1, h - 1 - d1)
}

/// State-space matrices recovered from a Hankel pair, valid up to an
/// unknown similarity transform.
#[derive(Clone, Debug)]
pub struct RealizedSystem {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub f_hat: DMatrix<f64>,
    /// Assumed order.
    pub n: usize,
    /// n-th singular value of the rank-truncated Hankel.
    pub sigma_n: f64,
}

impl RealizedSystem {
    pub fn output_dim(&self) -> usize {
        self.c_hat.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b_hat.ncols()
    }

    /// Markov parameters of the realized matrices; similarity-invariant.
    pub fn markov_parameters(&self, h: usize) -> Result<MarkovOperator> {
        markov_from_matrices(&self.a_hat, &self.b_hat, &self.c_hat, &self.f_hat, h)
    }

    /// Realized dynamics are not stability-projected; report it instead.
    pub fn is_stable(&self) -> bool {
        spectral_radius(&self.a_hat) < 1.0
    }
}

/// Markov parameters of raw state-space matrices (no stability checks).
pub fn markov_from_matrices(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    f: &DMatrix<f64>,
    h: usize,
) -> Result<MarkovOperator> {
    if h == 0 {
        return Err(Error::Argument("markov horizon must be >= 1".into()));
    }
    let mut g_u = Vec::with_capacity(h);
    let mut g_y = Vec::with_capacity(h);
    let mut lead = c.clone();
    for _ in 0..h {
        g_u.push(&lead * b);
        g_y.push(&lead * f);
        lead = &lead * a;
    }
    MarkovOperator::new(g_u, g_y)
}

/// Recover (A, B, C, F) of order n from a Hankel pair.
///
/// The reduced Hankel (last block columns dropped) is truncated to rank n by
/// SVD; `O = U S^{1/2}` and `[C_F, C_B] = S^{1/2} V^T` factor it; C is the
/// first m rows of O, F and B the first columns of C_F and C_B; A comes from
/// the shifted Hankel through pseudoinverses.
pub fn realize(pair: &HankelPair, n: usize) -> Result<RealizedSystem> {
    let hm = pair.minus();
    if n == 0 || n > hm.nrows().min(hm.ncols()) {
        return Err(Error::Argument(format!(
            "order {n} outside [1, min({}, {})]",
            hm.nrows(),
            hm.ncols()
        )));
    }
    let svd = hm.svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Numerical("svd produced no U".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("svd produced no V^T".into()))?;
    let mut sv: Vec<(usize, f64)> = svd.singular_values.iter().copied().enumerate().collect();
    sv.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("singular values are finite"));
    let sigma_n = sv[n - 1].1;
    if sigma_n < ORDER_DEFICIENCY_TOL {
        return Err(Error::OrderDeficient {
            order: n,
            sigma: sigma_n,
        });
    }

    let m = pair.m;
    let mut obs = DMatrix::zeros(u.nrows(), n);
    let mut ctr = DMatrix::zeros(n, vt.ncols());
    for (rank, &(idx, s)) in sv.iter().take(n).enumerate() {
        let root = s.sqrt();
        obs.column_mut(rank).copy_from(&(u.column(idx) * root));
        ctr.row_mut(rank).copy_from(&(vt.row(idx) * root));
    }

    let c_hat = obs.rows(0, m).into_owned();
    let f_hat = ctr.columns(0, m).into_owned();
    let b_hat = ctr.columns(m * pair.d2, pair.p).into_owned();
    let hp = pair.plus();
    let a_hat = pinv(&obs, PINV_CUTOFF)? * hp * pinv(&ctr, PINV_CUTOFF)?;
    Ok(RealizedSystem {
        a_hat,
        b_hat,
        c_hat,
        f_hat,
        n,
        sigma_n,
    })
}

/// Frobenius error between the Markov parameters of a realized system and a
/// reference operator, over the reference horizon minus one lag (the range
/// the realization pins down); similarity-invariant by construction.
pub fn markov_roundtrip_error(realized: &RealizedSystem, op: &MarkovOperator) -> Result<f64> {
    if realized.output_dim() != op.output_dim() || realized.input_dim() != op.input_dim() {
        return Err(Error::Dimension("operator dimensions differ".into()));
    }
    let h = (op.horizon() - 1).max(1);
    let ours = realized.markov_parameters(h)?;
    let theirs = op.truncated(h)?;
    Ok((ours.stacked() - theirs.stacked()).norm())
}

/// Confidence radii propagated from a Markov-operator error bound through
/// the realization. B, C and F share `sqrt(20 n h) g_err / sqrt(sigma_n)`;
/// A has the two-term bound with the shifted-Hankel norm.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ParameterRadii {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: f64,
}

impl ParameterRadii {
    pub fn zero() -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            f: 0.0,
        }
    }
}

pub fn parameter_confidence(
    realized: &RealizedSystem,
    g_error_bound: f64,
    pair: &HankelPair,
) -> Result<ParameterRadii> {
    if g_error_bound < 0.0 {
        return Err(Error::Argument("error bound must be non-negative".into()));
    }
    if realized.sigma_n <= 0.0 {
        return Err(Error::Argument("sigma_n must be positive".into()));
    }
    let n = realized.n as f64;
    let h = pair.total_horizon() as f64;
    let sn = realized.sigma_n;
    let bcf = (20.0 * n * h).sqrt() * g_error_bound / sn.sqrt();
    let hplus = spectral_norm(&pair.plus());
    let a = 31.0 * (2.0 * n * h).sqrt() * hplus / (2.0 * sn * sn) * g_error_bound
        + 13.0 * (n * h).sqrt() / (2.0 * 2.0f64.sqrt() * sn) * g_error_bound;
    Ok(ParameterRadii {
        a,
        b: bcf,
        c: bcf,
        f: bcf,
    })
}

/// Order-selection diagnostic: the index with the largest relative gap in
/// the reduced Hankel's singular values, plus the spectrum itself.
pub fn order_gap_estimate(pair: &HankelPair) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = pair
        .minus()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    let floor = 1e-12 * sv.first().copied().unwrap_or(0.0);
    let mut best = (1, 0.0f64);
    for i in 0..sv.len().saturating_sub(1) {
        // Only significant leading values can open a gap; ratios between
        // noise-level values are meaningless.
        if sv[i] <= floor {
            break;
        }
        let gap = sv[i] / sv[i + 1].max(1e-300);
        if gap > best.1 {
            best = (i + 1, gap);
        }
    }
    (best.0, sv)
}
