//! Vector autoregression estimation and reduced-form impulse responses.
//!
//! The model is X_t = c + A_1 X_{t-1} + ... + A_p X_{t-p} + e_t, estimated
//! equation by equation with least squares (one multivariate solve). The
//! residual covariance uses the maximum-likelihood scaling E'E / T_eff, which
//! is what the Gaussian log likelihood and the BIC below assume.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::TimeSeriesPanel;

/// A fitted VAR(p).
#[derive(Debug, Clone)]
pub struct VarModel {
    labels: Vec<String>,
    p: usize,
    coefficients: Vec<DMatrix<f64>>,
    intercept: Option<DVector<f64>>,
    residuals: DMatrix<f64>,
    sigma: DMatrix<f64>,
    loglik: f64,
    /// The p rows of data immediately before the first fitted observation,
    /// kept so bootstrap replications can rebuild the sample recursively.
    initial: DMatrix<f64>,
}

impl VarModel {
    /// Lag order p (>= 1).
    pub fn lag_order(&self) -> usize {
        self.p
    }

    /// Number of series n.
    pub fn n_series(&self) -> usize {
        self.sigma.nrows()
    }

    /// Series labels in model order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coefficient matrices [A_1, ..., A_p], each n x n; A_l[(i, j)] is the
    /// effect of series j at lag l on series i.
    pub fn coefficients(&self) -> &[DMatrix<f64>] {
        &self.coefficients
    }

    /// Estimated intercept, if one was included.
    pub fn intercept(&self) -> Option<&DVector<f64>> {
        self.intercept.as_ref()
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

    /// Presample rows (p x n) preceding the first fitted observation.
    pub fn initial_rows(&self) -> &DMatrix<f64> {
        &self.initial
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept.is_some()
    }
}

/// Estimate a VAR(p) on the panel by least squares.
///
/// Requires T - p >= n p + 2 so the regression has more rows than columns
/// with at least one degree of freedom to spare.
pub fn estimate_var(panel: &TimeSeriesPanel, p: usize, intercept: bool) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag order must be >= 1".into()));
    }
    fit_window(panel, p, p, intercept)
}

/// Fit with the first dependent observation at row `start` (start >= p), so
/// lag-order candidates can share one effective sample.
fn fit_window(
    panel: &TimeSeriesPanel,
    p: usize,
    start: usize,
    intercept: bool,
) -> Result<VarModel> {
    fit_matrix(panel.data(), panel.labels(), p, start, intercept)
}

/// Same fit on a bare data matrix (rows are time), for callers that rebuild
/// samples without a panel around them.
pub(crate) fn fit_matrix(
    x: &DMatrix<f64>,
    labels: &[String],
    p: usize,
    start: usize,
    intercept: bool,
) -> Result<VarModel> {
    let t = x.nrows();
    let n = x.ncols();
    let needed = start + n * p + 2;
    if t < needed {
        return Err(Error::TooShort { rows: t, needed });
    }
    let t_eff = t - start;
    let c = usize::from(intercept);
    let m = c + n * p;

    let mut z = DMatrix::zeros(t_eff, m);
    let mut y = DMatrix::zeros(t_eff, n);
    for (row, tt) in (start..t).enumerate() {
        if intercept {
            z[(row, 0)] = 1.0;
        }
        for l in 1..=p {
            for j in 0..n {
                z[(row, c + (l - 1) * n + j)] = x[(tt - l, j)];
            }
        }
        for j in 0..n {
            y[(row, j)] = x[(tt, j)];
        }
    }

    let b = linalg::ols_solve(&z, &y)?;
    let residuals = &y - &z * &b;
    let sigma = residuals.transpose() * &residuals / t_eff as f64;
    // A singular covariance means the fit is exact in some direction; the
    // Gaussian likelihood is unbounded there, so record +inf rather than fail.
    let loglik = gaussian_loglik(&sigma, t_eff).unwrap_or(f64::INFINITY);

    let intercept_vec = intercept.then(|| b.row(0).transpose());
    let mut coefficients = Vec::with_capacity(p);
    for l in 0..p {
        let block = b.view((c + l * n, 0), (n, n));
        coefficients.push(block.transpose());
    }
    let initial = DMatrix::from_fn(p, n, |r, j| x[(start - p + r, j)]);

    Ok(VarModel {
        labels: labels.to_vec(),
        p,
        coefficients,
        intercept: intercept_vec,
        residuals,
        sigma,
        loglik,
        initial,
    })
}

pub(crate) fn gaussian_loglik(sigma: &DMatrix<f64>, t_eff: usize) -> Result<f64> {
    let n = sigma.nrows() as f64;
    let logdet = linalg::logdet_spd(sigma)?;
    Ok(-0.5 * t_eff as f64 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + n))
}

/// Select the lag order by BIC over p = 1..=p_max.
///
/// Every candidate is fit on the common effective sample starting at row
/// p_max, so likelihoods are comparable. BIC(p) = -2 loglik + kappa ln(T_eff)
/// with kappa the number of freely estimated mean parameters, n (n p + 1)
/// with an intercept. Ties resolve toward the smaller order. Returns the
/// winner and the full (p, BIC) table.
pub fn select_lag_bic(
    panel: &TimeSeriesPanel,
    p_max: usize,
    intercept: bool,
) -> Result<(usize, Vec<(usize, f64)>)> {
    if p_max == 0 {
        return Err(Error::InvalidArgument("p_max must be >= 1".into()));
    }
    let n = panel.n_series() as f64;
    let mut table = Vec::with_capacity(p_max);
    let mut best: Option<(usize, f64)> = None;
    for p in 1..=p_max {
        let fit = fit_window(panel, p, p_max, intercept)?;
        let t_eff = fit.t_effective() as f64;
        let kappa = n * (n * p as f64 + f64::from(u8::from(intercept)));
        let bic = -2.0 * fit.loglik() + kappa * t_eff.ln();
        table.push((p, bic));
        if best.is_none_or(|(_, b)| bic < b) {
            best = Some((p, bic));
        }
    }
    Ok((best.unwrap().0, table))
}

/// Reduced-form impulse responses Phi_0..Phi_H: Phi_0 = I and
/// Phi_h = sum_{l=1}^{min(h,p)} A_l Phi_{h-l}. Phi_h[(i, j)] is the response
/// of series i, h steps after a unit reduced-form innovation in series j.
pub fn reduced_irf(model: &VarModel, horizons: usize) -> Vec<DMatrix<f64>> {
    let n = model.n_series();
    let p = model.p;
    let mut phis = Vec::with_capacity(horizons + 1);
    phis.push(DMatrix::identity(n, n));
    for h in 1..=horizons {
        let mut phi = DMatrix::zeros(n, n);
        for l in 1..=h.min(p) {
            phi += &model.coefficients[l - 1] * &phis[h - l];
        }
        phis.push(phi);
    }
    phis
}

/// Deterministic VAR recursion: starting from `initial` (p x n), apply the
/// dynamics to each row of `shocks` in turn. Returns p + shocks.nrows() rows,
/// the initial block included.
pub(crate) fn recurse_var(
    initial: &DMatrix<f64>,
    coefficients: &[DMatrix<f64>],
    intercept: Option<&DVector<f64>>,
    shocks: &DMatrix<f64>,
) -> DMatrix<f64> {
    let p = initial.nrows();
    let n = initial.ncols();
    let t_new = shocks.nrows();
    let mut out = DMatrix::zeros(p + t_new, n);
    out.view_mut((0, 0), (p, n)).copy_from(initial);
    for t in 0..t_new {
        let mut next: DVector<f64> = shocks.row(t).transpose();
        if let Some(c) = intercept {
            next += c;
        }
        for (l, a) in coefficients.iter().enumerate() {
            let lagged: DVector<f64> = out.row(p + t - 1 - l).transpose();
            next += a * lagged;
        }
        out.row_mut(p + t).copy_from(&next.transpose());
    }
    out
}

/// Assemble a model directly from its parts, computing sigma and the log
/// likelihood from the residuals. Test fixture for modules that need a model
/// with a covariance known in closed form.
#[cfg(test)]
pub(crate) fn model_from_parts(
    labels: Vec<String>,
    coefficients: Vec<DMatrix<f64>>,
    intercept: Option<DVector<f64>>,
    residuals: DMatrix<f64>,
    initial: DMatrix<f64>,
) -> VarModel {
    let t_eff = residuals.nrows();
    let sigma = residuals.transpose() * &residuals / t_eff as f64;
    let loglik = gaussian_loglik(&sigma, t_eff).unwrap_or(f64::INFINITY);
    VarModel {
        labels,
        p: coefficients.len(),
        coefficients,
        intercept,
        residuals,
        sigma,
        loglik,
        initial,
    }
}

/// Variant of [`model_from_parts`] with a prescribed covariance, decoupled
/// from the residuals. Fixture for the noise-free resampling path, which real
/// estimation cannot produce (its covariance would be identically zero).
#[cfg(test)]
pub(crate) fn model_from_parts_with_sigma(
    labels: Vec<String>,
    coefficients: Vec<DMatrix<f64>>,
    intercept: Option<DVector<f64>>,
    residuals: DMatrix<f64>,
    sigma: DMatrix<f64>,
    initial: DMatrix<f64>,
) -> VarModel {
    let t_eff = residuals.nrows();
    let loglik = gaussian_loglik(&sigma, t_eff).unwrap_or(f64::INFINITY);
    VarModel {
        labels,
        p: coefficients.len(),
        coefficients,
        intercept,
        residuals,
        sigma,
        loglik,
        initial,
    }
}
