//! Impulse-response containers, wild-bootstrap confidence bands, and a
//! residual serial-correlation test.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ident::{identify_covariance, structural_irf};
use crate::linalg;
use crate::var::{fit_matrix, recurse_var, VarModel};
use crate::vecm::{estimate_vecm_matrix, level_var_coefficients, vecm_structural_irf, VecmModel};

/// Which transformation of the data an impulse response describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrfSpace {
    /// Responses of the series in levels.
    Level,
    /// Responses of first differences (or of data modeled in differences).
    Difference,
}

impl std::fmt::Display for IrfSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IrfSpace::Level => write!(f, "level"),
            IrfSpace::Difference => write!(f, "difference"),
        }
    }
}

/// Responses of every series to one normalized policy shock. `point` is
/// (H + 1) x n: row h, column i is the response of series i (in the
/// identification ordering) h steps after the shock. Bands are present only
/// after a bootstrap run.
#[derive(Debug, Clone)]
pub struct PolicyIrf {
    pub policy: usize,
    pub point: DMatrix<f64>,
    pub lower: Option<DMatrix<f64>>,
    pub upper: Option<DMatrix<f64>>,
}

/// A set of impulse responses, one [`PolicyIrf`] per policy shock.
#[derive(Debug, Clone)]
pub struct IrfBundle {
    pub space: IrfSpace,
    pub horizons: usize,
    /// Series labels in the identification ordering.
    pub series: Vec<String>,
    /// Band coverage level, when bands exist.
    pub level: Option<f64>,
    /// Successful bootstrap replications behind the bands (0 = point only).
    pub replications: usize,
    /// Replications dropped because re-estimation failed.
    pub skipped: usize,
    pub responses: Vec<PolicyIrf>,
}

impl IrfBundle {
    /// Point-only bundle.
    pub fn point(
        space: IrfSpace,
        horizons: usize,
        series: Vec<String>,
        responses: Vec<PolicyIrf>,
    ) -> IrfBundle {
        IrfBundle {
            space,
            horizons,
            series,
            level: None,
            replications: 0,
            skipped: 0,
            responses,
        }
    }

    /// Fraction of (horizon, series) cells where the point response escapes
    /// its own band. Percentile bands from a finite bootstrap can miss the
    /// point estimate on a small share of cells; anything beyond a stray cell
    /// signals a broken band construction.
    pub fn band_violation_rate(&self) -> Option<f64> {
        let mut cells = 0usize;
        let mut violations = 0usize;
        for r in &self.responses {
            let (lower, upper) = match (&r.lower, &r.upper) {
                (Some(l), Some(u)) => (l, u),
                _ => return None,
            };
            for (p, (lo, hi)) in r.point.iter().zip(lower.iter().zip(upper.iter())) {
                cells += 1;
                if p < lo || p > hi {
                    violations += 1;
                }
            }
        }
        Some(violations as f64 / cells as f64)
    }
}

/// Borrowed handle on either model class the bootstrap can resample.
#[derive(Clone, Copy)]
pub enum FitRef<'a> {
    Var(&'a VarModel),
    Vecm(&'a VecmModel),
}

impl<'a> FitRef<'a> {
    fn residuals(&self) -> &'a DMatrix<f64> {
        match self {
            FitRef::Var(m) => m.residuals(),
            FitRef::Vecm(m) => m.residuals(),
        }
    }

    fn point_irf(
        &self,
        ordering: Option<&[usize]>,
        n_policies: usize,
        horizons: usize,
        space: IrfSpace,
    ) -> Result<IrfBundle> {
        match self {
            FitRef::Var(m) => {
                let ident = identify_covariance(m.sigma(), m.labels(), ordering, n_policies)?;
                Ok(structural_irf(m, &ident, horizons, space))
            }
            FitRef::Vecm(m) => {
                let ident = identify_covariance(m.sigma(), m.labels(), ordering, n_policies)?;
                let (level, diff) = vecm_structural_irf(m, &ident, horizons)?;
                Ok(match space {
                    IrfSpace::Level => level,
                    IrfSpace::Difference => diff,
                })
            }
        }
    }
}

/// Multiplier distribution for the wild bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WildMultiplier {
    /// Sign flips: eta = +1 or -1 with equal probability. The default. Sign
    /// flips leave every residual outer product unchanged, so the resampled
    /// covariance varies only through coefficient re-estimation; bands at
    /// horizon 0 are much narrower than the impact estimator's sampling
    /// error and should not be read as a standard error for it.
    Rademacher,
    /// Standard normal multipliers. The squared multiplier varies, so the
    /// resampled covariance (and with it the horizon-0 impact) moves at the
    /// estimator's own rate; the implied impact standard error is mildly
    /// conservative under Gaussian errors.
    Gaussian,
}

/// One recursive-design wild-bootstrap replication: scale the residual rows
/// by independent multipliers, rebuild the sample from the fitted dynamics
/// and original initial conditions, re-estimate the same model class,
/// re-identify, and return the per-policy response matrices. None marks a
/// failed replication.
#[allow(clippy::too_many_arguments)]
fn replicate_once(
    fit: &FitRef<'_>,
    ordering: Option<&[usize]>,
    n_policies: usize,
    horizons: usize,
    space: IrfSpace,
    multiplier: WildMultiplier,
    seed: u64,
    rep: u64,
) -> Option<Vec<DMatrix<f64>>> {
    let residuals = fit.residuals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep + 1);
    let mut shocks = residuals.clone();
    for t in 0..shocks.nrows() {
        let eta: f64 = match multiplier {
            WildMultiplier::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WildMultiplier::Gaussian => StandardNormal.sample(&mut rng),
        };
        for j in 0..shocks.ncols() {
            shocks[(t, j)] *= eta;
        }
    }

    let bundle = match fit {
        FitRef::Var(m) => {
            let rebuilt = recurse_var(m.initial_rows(), m.coefficients(), m.intercept(), &shocks);
            if !rebuilt.iter().all(|v| v.is_finite()) {
                return None;
            }
            let refit = fit_matrix(
                &rebuilt,
                m.labels(),
                m.lag_order(),
                m.lag_order(),
                m.has_intercept(),
            )
            .ok()?;
            let ident =
                identify_covariance(refit.sigma(), refit.labels(), ordering, n_policies).ok()?;
            structural_irf(&refit, &ident, horizons, space)
        }
        FitRef::Vecm(m) => {
            let coeffs = level_var_coefficients(m);
            let rebuilt = recurse_var(m.initial_levels(), &coeffs, m.intercept(), &shocks);
            if !rebuilt.iter().all(|v| v.is_finite()) {
                return None;
            }
            let refit = estimate_vecm_matrix(
                &rebuilt,
                m.labels(),
                m.lag_order(),
                m.rank(),
                m.has_intercept(),
            )
            .ok()?;
            let ident =
                identify_covariance(refit.sigma(), refit.labels(), ordering, n_policies).ok()?;
            let (level, diff) = vecm_structural_irf(&refit, &ident, horizons).ok()?;
            match space {
                IrfSpace::Level => level,
                IrfSpace::Difference => diff,
            }
        }
    };

    let mats: Vec<DMatrix<f64>> = bundle.responses.into_iter().map(|r| r.point).collect();
    if mats.iter().any(|m| !m.iter().all(|v| v.is_finite())) {
        return None;
    }
    Some(mats)
}

/// Wild-bootstrap percentile bands around the structural impulse responses
/// of a fitted model. Per replication, residual rows are scaled by
/// independent Rademacher multipliers, the sample is rebuilt recursively
/// from the original initial conditions, and the model is re-estimated and
/// re-identified; bands are pointwise quantiles at (1 - level)/2 and
/// (1 + level)/2 over the replication responses.
///
/// Replications run in parallel but each draws from its own counter-derived
/// generator stream, so results are identical for any thread count. Failed
/// re-estimations are skipped and counted, up to 2 percent of `replications`.
#[allow(clippy::too_many_arguments)]
pub fn wild_bootstrap_irf(
    fit: FitRef<'_>,
    ordering: Option<&[usize]>,
    n_policies: usize,
    horizons: usize,
    replications: usize,
    level: f64,
    seed: u64,
    space: IrfSpace,
) -> Result<IrfBundle> {
    wild_bootstrap_irf_with(
        fit,
        ordering,
        n_policies,
        horizons,
        replications,
        level,
        seed,
        space,
        WildMultiplier::Rademacher,
    )
}

/// [`wild_bootstrap_irf`] with an explicit multiplier distribution; see
/// [`WildMultiplier`] for when the default sign flips are not appropriate.
#[allow(clippy::too_many_arguments)]
pub fn wild_bootstrap_irf_with(
    fit: FitRef<'_>,
    ordering: Option<&[usize]>,
    n_policies: usize,
    horizons: usize,
    replications: usize,
    level: f64,
    seed: u64,
    space: IrfSpace,
    multiplier: WildMultiplier,
) -> Result<IrfBundle> {
    if replications < 199 {
        return Err(Error::InvalidArgument(format!(
            "need at least 199 bootstrap replications, got {replications}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "band level must lie strictly inside (0, 1), got {level}"
        )));
    }
    let mut bundle = fit.point_irf(ordering, n_policies, horizons, space)?;

    // A noise-free fit resamples to its own sample with probability one
    // (every multiplier scales a zero residual), so the bootstrap
    // distribution is a point mass and the bands sit on the point response.
    if fit.residuals().amax() == 0.0 {
        for r in &mut bundle.responses {
            r.lower = Some(r.point.clone());
            r.upper = Some(r.point.clone());
        }
        bundle.level = Some(level);
        bundle.replications = replications;
        return Ok(bundle);
    }

    let results: Vec<Option<Vec<DMatrix<f64>>>> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            replicate_once(
                &fit, ordering, n_policies, horizons, space, multiplier, seed, rep,
            )
        })
        .collect();
    let kept: Vec<&Vec<DMatrix<f64>>> = results.iter().flatten().collect();
    let failed = replications - kept.len();
    if failed * 50 > replications {
        return Err(Error::BootstrapDegenerate {
            failed,
            total: replications,
        });
    }

    let lo_q = (1.0 - level) / 2.0;
    let hi_q = (1.0 + level) / 2.0;
    for (k, resp) in bundle.responses.iter_mut().enumerate() {
        let rows = resp.point.nrows();
        let cols = resp.point.ncols();
        let mut lower = DMatrix::zeros(rows, cols);
        let mut upper = DMatrix::zeros(rows, cols);
        let mut cell = Vec::with_capacity(kept.len());
        for h in 0..rows {
            for j in 0..cols {
                cell.clear();
                cell.extend(kept.iter().map(|mats| mats[k][(h, j)]));
                cell.sort_by(f64::total_cmp);
                lower[(h, j)] = linalg::quantile_sorted(&cell, lo_q);
                upper[(h, j)] = linalg::quantile_sorted(&cell, hi_q);
            }
        }
        resp.lower = Some(lower);
        resp.upper = Some(upper);
    }
    bundle.level = Some(level);
    bundle.replications = kept.len();
    bundle.skipped = failed;
    Ok(bundle)
}

/// Breusch-Godfrey LM test for residual serial correlation, summed across
/// equations. Each residual column is regressed on the model's own
/// regressors plus `h_lags` of its lagged values (zero-padded at the start),
/// and the statistic accumulates T_eff times the auxiliary R-squared per
/// equation; under the null it is asymptotically chi-square with n * h_lags
/// degrees of freedom.
#[derive(Debug, Clone)]
pub struct BgTestResult {
    pub statistic: f64,
    pub df: usize,
    /// Chi-square critical values at the 90, 95, and 99 percent levels.
    pub critical_values: [f64; 3],
    /// Whether the statistic exceeds each critical value.
    pub reject: [bool; 3],
}

/// Run the Breusch-Godfrey test on a fitted VECM's residuals.
pub fn breusch_godfrey(fit: &VecmModel, h_lags: usize) -> Result<BgTestResult> {
    if h_lags == 0 {
        return Err(Error::InvalidArgument(
            "serial-correlation test needs at least one lag".into(),
        ));
    }
    let resid = fit.residuals();
    let t_eff = resid.nrows();
    let n = resid.ncols();
    let base = &fit.regressors;
    if base.nrows() != t_eff {
        return Err(Error::InvalidArgument(
            "model carries no stored regressors for the auxiliary regression".into(),
        ));
    }
    let k = base.ncols();
    let m = k + h_lags;
    if t_eff < m + 2 {
        return Err(Error::TooFewObservations(t_eff));
    }

    let mut z = DMatrix::zeros(t_eff, m);
    z.view_mut((0, 0), (t_eff, k)).copy_from(base);
    let mut statistic = 0.0;
    for j in 0..n {
        for lag in 1..=h_lags {
            for t in 0..t_eff {
                z[(t, k + lag - 1)] = if t >= lag { resid[(t - lag, j)] } else { 0.0 };
            }
        }
        let y = resid.columns(j, 1).clone_owned();
        let aux = linalg::ols_residuals(&z, &y)?;
        let ssr = aux.norm_squared();
        let sst = if fit.has_intercept() {
            let mean = y.mean();
            y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        } else {
            y.norm_squared()
        };
        if sst <= 0.0 {
            return Err(Error::DegenerateSample(format!(
                "residual column {j} has zero variance"
            )));
        }
        statistic += t_eff as f64 * (1.0 - ssr / sst);
    }

    let df = n * h_lags;
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    let critical_values = [0.90, 0.95, 0.99].map(|q| chi.inverse_cdf(q));
    let reject = critical_values.map(|c| statistic > c);
    Ok(BgTestResult {
        statistic,
        df,
        critical_values,
        reject,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::{estimate_var, model_from_parts_with_sigma, testsim};
    use crate::vecm::estimate_vecm;
    use nalgebra::DVector;
    use rand_distr::{Distribution, StandardNormal};

    fn var1_fit(b1: &DMatrix<f64>, t: usize, seed: u64) -> crate::var::VarModel {
        let chol = DMatrix::identity(b1.nrows(), b1.nrows());
        let panel = testsim::simulate_var_panel(std::slice::from_ref(b1), None, &chol, t, seed);
        estimate_var(&panel, 1, true).unwrap()
    }

    #[test]
    fn bootstrap_validates_replications_and_level() {
        let b1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.4]);
        let fit = var1_fit(&b1, 200, 3);
        assert!(matches!(
            wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 8, 100, 0.95, 1, IrfSpace::Level),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 8, 199, 1.0, 1, IrfSpace::Level),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_noise_bands_collapse_onto_point() {
        let coeff = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.4]);
        let fit = model_from_parts_with_sigma(
            vec!["a".into(), "b".into()],
            vec![coeff],
            None,
            DMatrix::zeros(50, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
        );
        let bundle =
            wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 12, 199, 0.95, 7, IrfSpace::Level)
                .unwrap();
        assert_eq!(bundle.skipped, 0);
        for r in &bundle.responses {
            let lower = r.lower.as_ref().unwrap();
            let upper = r.upper.as_ref().unwrap();
            for ((lo, hi), p) in lower.iter().zip(upper.iter()).zip(r.point.iter()) {
                assert!((hi - lo).abs() < 1e-8);
                assert_eq!(lo, p);
            }
        }
    }

    #[test]
    fn same_seed_bootstrap_is_bit_identical() {
        let b1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.4]);
        let fit = var1_fit(&b1, 200, 11);
        let run = || {
            wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 10, 199, 0.95, 42, IrfSpace::Level)
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.replications, b.replications);
        for (ra, rb) in a.responses.iter().zip(&b.responses) {
            assert_eq!(ra.lower.as_ref().unwrap(), rb.lower.as_ref().unwrap());
            assert_eq!(ra.upper.as_ref().unwrap(), rb.upper.as_ref().unwrap());
        }
    }

    #[test]
    fn bands_widen_with_level() {
        let b1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.4]);
        let fit = var1_fit(&b1, 200, 5);
        let mean_width = |level: f64| {
            let bundle =
                wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 10, 299, level, 13, IrfSpace::Level)
                    .unwrap();
            let mut total = 0.0;
            let mut cells = 0usize;
            for r in &bundle.responses {
                let lower = r.lower.as_ref().unwrap();
                let upper = r.upper.as_ref().unwrap();
                total += (upper - lower).sum();
                cells += lower.len();
            }
            total / cells as f64
        };
        let (w68, w95, w99) = (mean_width(0.68), mean_width(0.95), mean_width(0.99));
        assert!(w68 < w95, "width at 68% ({w68}) not below 95% ({w95})");
        assert!(w95 < w99, "width at 95% ({w95}) not below 99% ({w99})");
    }

    #[test]
    fn gaussian_multipliers_open_impact_bands() {
        // Sign flips preserve every residual outer product, so the resampled
        // covariance (and the unit-normalized impact built from it) varies
        // only through coefficient re-estimation; Gaussian multipliers move
        // the covariance itself. The horizon-0 band width should differ by
        // an order of magnitude between the two.
        let b1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.4]);
        let fit = var1_fit(&b1, 400, 9);
        let impact_width = |m: WildMultiplier| {
            let bundle = wild_bootstrap_irf_with(
                FitRef::Var(&fit),
                None,
                1,
                6,
                299,
                0.95,
                21,
                IrfSpace::Level,
                m,
            )
            .unwrap();
            let r = &bundle.responses[0];
            r.upper.as_ref().unwrap()[(0, 1)] - r.lower.as_ref().unwrap()[(0, 1)]
        };
        let sign = impact_width(WildMultiplier::Rademacher);
        let gauss = impact_width(WildMultiplier::Gaussian);
        assert!(
            gauss > 5.0 * sign,
            "gaussian width {gauss} not well above sign-flip width {sign}"
        );
        // The Gaussian width is on the scale of the impact estimator's true
        // sampling error, roughly 1/sqrt(T) here; the sign-flip width is far
        // below it.
        let se_scale = 1.0 / (400.0_f64).sqrt();
        assert!(gauss > se_scale, "gaussian width {gauss} vs scale {se_scale}");
        assert!(sign < se_scale, "sign-flip width {sign} vs scale {se_scale}");
    }

    #[test]
    fn bootstrap_bands_cover_true_irf() {
        // True structural responses of the policy shock under sigma = I:
        // column 0 of B1^h. Pointwise coverage of nominal-95% bands is
        // checked at short, medium, and longer horizons.
        let b1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.4]);
        let horizons = [1usize, 4, 8];
        let runs = 120;
        let mut covered = [[0usize; 2]; 3];
        let mut violations = 0usize;
        let mut cells = 0usize;
        for seed in 0..runs as u64 {
            let chol = DMatrix::identity(2, 2);
            let panel = testsim::simulate_var_panel(std::slice::from_ref(&b1), None, &chol, 400, seed);
            let fit = estimate_var(&panel, 1, true).unwrap();
            let bundle = wild_bootstrap_irf(
                FitRef::Var(&fit),
                None,
                1,
                8,
                299,
                0.95,
                seed,
                IrfSpace::Level,
            )
            .unwrap();
            let resp = &bundle.responses[0];
            let (lower, upper) = (resp.lower.as_ref().unwrap(), resp.upper.as_ref().unwrap());
            let mut phis = vec![DMatrix::<f64>::identity(2, 2)];
            for h in 1..=8 {
                phis.push(&b1 * &phis[h - 1]);
            }
            for (hi, &h) in horizons.iter().enumerate() {
                for j in 0..2 {
                    let t = phis[h][(j, 0)];
                    if lower[(h, j)] <= t && t <= upper[(h, j)] {
                        covered[hi][j] += 1;
                    }
                }
            }
            for (p, (lo, hi)) in resp.point.iter().zip(lower.iter().zip(upper.iter())) {
                cells += 1;
                if p < lo || p > hi {
                    violations += 1;
                }
            }
        }
        for (hi, &h) in horizons.iter().enumerate() {
            for (j, &hits) in covered[hi].iter().enumerate() {
                let rate = hits as f64 / runs as f64;
                assert!(
                    (0.88..=0.99).contains(&rate),
                    "coverage {rate} at horizon {h}, series {j}"
                );
            }
        }
        assert!(
            violations as f64 / cells as f64 <= 0.01,
            "point escaped its own band too often: {violations}/{cells}"
        );
    }

    #[test]
    fn vecm_bootstrap_brackets_point_in_both_spaces() {
        let b1 = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.8]);
        let chol = DMatrix::identity(2, 2);
        let panel = testsim::simulate_var_panel(&[b1], None, &chol, 300, 21);
        let fit = estimate_vecm(&panel, 1, 1, true).unwrap();
        for space in [IrfSpace::Level, IrfSpace::Difference] {
            let bundle =
                wild_bootstrap_irf(FitRef::Vecm(&fit), None, 1, 20, 199, 0.95, 17, space).unwrap();
            assert_eq!(bundle.replications + bundle.skipped, 199);
            assert!(bundle.skipped <= 3, "too many skips: {}", bundle.skipped);
            assert!(bundle.band_violation_rate().unwrap() <= 0.01);
        }
    }

    #[test]
    fn explosive_rebuild_degenerates() {
        // Coefficient 10 overflows the recursion within 400 steps, so every
        // replication produces a non-finite sample and is skipped.
        let fit = model_from_parts_with_sigma(
            vec!["a".into(), "b".into()],
            vec![DMatrix::from_diagonal(&DVector::from_element(2, 10.0))],
            None,
            DMatrix::from_element(400, 2, 1.0),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        );
        assert!(matches!(
            wild_bootstrap_irf(FitRef::Var(&fit), None, 1, 4, 199, 0.95, 1, IrfSpace::Level),
            Err(Error::BootstrapDegenerate {
                failed: 199,
                total: 199
            })
        ));
    }

    fn stationary_vecm(n: usize, t: usize, seed: u64) -> crate::vecm::VecmModel {
        let b1 = DMatrix::from_diagonal(&DVector::from_element(n, 0.5));
        let chol = DMatrix::identity(n, n);
        let panel = testsim::simulate_var_panel(&[b1], None, &chol, t, seed);
        estimate_vecm(&panel, 1, n, true).unwrap()
    }

    #[test]
    fn bg_reproduces_chi_square_criticals() {
        let fit = stationary_vecm(5, 300, 2);
        let expected = [
            [9.24, 11.07, 15.09],
            [15.99, 18.31, 23.21],
            [22.31, 25.00, 30.58],
        ];
        for (h, row) in expected.iter().enumerate() {
            let res = breusch_godfrey(&fit, h + 1).unwrap();
            assert_eq!(res.df, 5 * (h + 1));
            for (got, want) in res.critical_values.iter().zip(row) {
                assert!(
                    (got - want).abs() < 0.005,
                    "df {} critical {got} vs {want}",
                    res.df
                );
            }
        }
    }

    #[test]
    fn bg_size_on_iid_residuals() {
        let mut rejections = 0;
        for seed in 0..500_u64 {
            let fit = stationary_vecm(5, 300, seed);
            if breusch_godfrey(&fit, 1).unwrap().reject[1] {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / 500.0;
        assert!(
            (0.02..=0.09).contains(&rate),
            "size {rate} outside [0.02, 0.09]"
        );
    }

    #[test]
    fn bg_detects_planted_autocorrelation() {
        use rand::SeedableRng;
        let mut rejections = 0;
        let runs = 100;
        for seed in 0..runs as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = 400;
            let mut x = DMatrix::zeros(t, 2);
            let mut u = [0.0f64; 2];
            for row in 1..t {
                for j in 0..2 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    u[j] = 0.5 * u[j] + e;
                    x[(row, j)] = 0.3 * x[(row - 1, j)] + u[j];
                }
            }
            let labels = vec!["a".to_string(), "b".to_string()];
            let roles = vec![
                crate::panel::SeriesRole::Policy(1),
                crate::panel::SeriesRole::TreatedOutcome(1),
            ];
            let panel = crate::panel::TimeSeriesPanel::new(labels, roles, x).unwrap();
            let fit = estimate_vecm(&panel, 1, 2, true).unwrap();
            if breusch_godfrey(&fit, 1).unwrap().reject[1] {
                rejections += 1;
            }
        }
        assert!(
            rejections >= 90,
            "autocorrelation detected in only {rejections}/{runs} runs"
        );
    }

    #[test]
    fn bg_validates_lags_and_sample() {
        let fit = stationary_vecm(2, 300, 4);
        assert!(matches!(
            breusch_godfrey(&fit, 0),
            Err(Error::InvalidArgument(_))
        ));
        let tiny = stationary_vecm(2, 12, 4);
        assert!(matches!(
            breusch_godfrey(&tiny, 20),
            Err(Error::TooFewObservations(_))
        ));
    }
}
