//! Control-series VAR constructions.
//!
//! A control VAR pairs treated outcomes with control series that share their
//! untreated dynamics but do not respond to the policy. Two constructions are
//! provided: a simple-difference system that replaces each treated outcome
//! with its treated-minus-control gap before fitting a VAR, and an
//! error-correction system that keeps all series in levels and lets the
//! controls enter through the cointegrating space. Both order the policy
//! first and identify its shock by Cholesky factorization, so the impact
//! coefficients in [`StructuralIdentification::gamma`] are the estimated
//! policy effects.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ident::{cholesky_identify, identify_covariance, StructuralIdentification};
use crate::inference::IrfBundle;
use crate::linalg;
use crate::panel::{SeriesRole, TimeSeriesPanel};
use crate::var::{estimate_var, VarModel};
use crate::vecm::{estimate_vecm, johansen_trace_test, vecm_structural_irf, VecmModel};

/// Which construction a control VAR uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvarMode {
    /// Each treated outcome enters as its difference from a paired control;
    /// the system is fit as a stationary VAR.
    SimpleDifference,
    /// All series enter in levels through a vector error-correction model of
    /// a given cointegration rank.
    Vecm,
}

/// Layout of a control VAR: which panel columns are policies, which are
/// treated outcomes, and which controls pair with them.
///
/// In [`CvarMode::SimpleDifference`] the pairing is positional:
/// `treated_columns[i]` is differenced against `control_columns[i]`, so the
/// two lists must have equal length. In [`CvarMode::Vecm`] the controls are
/// unpaired regressors and the counts may differ.
#[derive(Debug, Clone)]
pub struct CvarSpec {
    pub mode: CvarMode,
    pub policy_columns: Vec<usize>,
    pub treated_columns: Vec<usize>,
    pub control_columns: Vec<usize>,
    /// Cointegration rank; only read in [`CvarMode::Vecm`].
    pub rank: usize,
    /// Lag order of the fitted system (level lags in Vecm mode).
    pub lags: usize,
}

impl CvarSpec {
    /// Derive the column layout from the panel's role assignments, pairing
    /// treated and control series by their position within each role class.
    pub fn from_roles(
        panel: &TimeSeriesPanel,
        mode: CvarMode,
        rank: usize,
        lags: usize,
    ) -> CvarSpec {
        CvarSpec {
            mode,
            policy_columns: panel.policy_columns(),
            treated_columns: panel.treated_columns(),
            control_columns: panel.control_columns(),
            rank,
            lags,
        }
    }

    /// Check the layout against a panel. Columns must be in range, mutually
    /// distinct, and non-empty for policies and treated outcomes; the
    /// simple-difference pairing must be one-to-one; the error-correction
    /// mode needs a positive rank.
    pub fn validate(&self, panel: &TimeSeriesPanel) -> Result<()> {
        let n = panel.n_series();
        let all: Vec<usize> = self
            .policy_columns
            .iter()
            .chain(&self.treated_columns)
            .chain(&self.control_columns)
            .copied()
            .collect();
        if let Some(&c) = all.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidArgument(format!(
                "column index {c} out of range for {n} series"
            )));
        }
        let mut seen = vec![false; n];
        for &c in &all {
            if seen[c] {
                return Err(Error::InvalidArgument(format!(
                    "column {c} appears more than once in the layout"
                )));
            }
            seen[c] = true;
        }
        if self.policy_columns.is_empty() {
            return Err(Error::InvalidArgument("no policy columns".into()));
        }
        if self.treated_columns.is_empty() {
            return Err(Error::InvalidArgument("no treated outcome columns".into()));
        }
        if self.lags == 0 {
            return Err(Error::InvalidArgument("lag order must be at least 1".into()));
        }
        match self.mode {
            CvarMode::SimpleDifference => {
                if self.control_columns.len() != self.treated_columns.len() {
                    return Err(Error::InvalidArgument(format!(
                        "simple-difference mode needs exactly one control per treated \
                         series, got {} controls for {} treated",
                        self.control_columns.len(),
                        self.treated_columns.len()
                    )));
                }
            }
            CvarMode::Vecm => {
                if self.rank == 0 {
                    return Err(Error::InvalidArgument(
                        "error-correction mode needs rank at least 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Diagnostics attached to a simple-difference fit.
#[derive(Debug, Clone)]
pub struct CvarDiagnostics {
    /// Per treated outcome: mean fitted value over treated periods minus
    /// mean fitted value over untreated periods. A large gap means the
    /// autoregressive component moves with treatment, which the difference
    /// construction is supposed to cancel. Reported for inspection only;
    /// nothing is subtracted from the estimates. NaN when every effective
    /// period is treated, as under a continuous dose.
    pub delta_ar_proxy: Vec<f64>,
    /// Number of sample periods with an active (non-zero) policy.
    pub treated_time_count: usize,
}

/// Cutoff rule for converting a continuous policy series into a 0/1 dummy.
#[derive(Debug, Clone, Copy)]
pub enum DummyCutoff {
    /// Threshold at this sample quantile of the policy series itself;
    /// the fraction must lie strictly inside (0, 1).
    Quantile(f64),
    /// Threshold at a fixed value on the policy's own scale.
    Absolute(f64),
}

/// Replace a continuous policy column with the indicator of exceeding a
/// cutoff. Exceeding is strict, so for a quantile cutoff the dummy's mean is
/// 1 - q up to 1/T. Everything else about the panel is unchanged.
pub fn dummy_policy_transform(
    panel: &TimeSeriesPanel,
    policy_col: usize,
    cutoff: DummyCutoff,
) -> Result<TimeSeriesPanel> {
    let n = panel.n_series();
    if policy_col >= n {
        return Err(Error::InvalidArgument(format!(
            "column index {policy_col} out of range for {n} series"
        )));
    }
    if !matches!(panel.roles()[policy_col], SeriesRole::Policy(_)) {
        return Err(Error::InvalidArgument(format!(
            "column {policy_col} ({}) is not a policy series",
            panel.labels()[policy_col]
        )));
    }
    let values = panel.series(policy_col);
    let threshold = match cutoff {
        DummyCutoff::Quantile(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "dummy quantile must lie in (0, 1), got {q}"
                )));
            }
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                return Err(Error::ConstantPolicy);
            }
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            linalg::quantile_sorted(&sorted, q)
        }
        DummyCutoff::Absolute(a) => {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "absolute cutoff must be finite, got {a}"
                )));
            }
            a
        }
    };
    let mut data = panel.data().clone();
    for (t, &x) in values.iter().enumerate() {
        data[(t, policy_col)] = if x > threshold { 1.0 } else { 0.0 };
    }
    panel.with_data(data)
}

/// Rows (within `rows` sample positions starting at `offset`) where any of
/// the given policy columns is non-zero.
fn treated_mask(panel: &TimeSeriesPanel, policy_columns: &[usize], offset: usize) -> Vec<bool> {
    let data = panel.data();
    (offset..data.nrows())
        .map(|t| policy_columns.iter().any(|&k| data[(t, k)] != 0.0))
        .collect()
}

/// Fit the simple-difference construction: policies stay as they are, each
/// treated outcome is replaced by its gap to the paired control, and the
/// resulting system is fit as a VAR(p) with the policy ordered first.
///
/// Returns the fitted model, the recursive identification (whose
/// [`StructuralIdentification::gamma`] holds the policy impact estimates),
/// and the diagnostics described on [`CvarDiagnostics`].
pub fn simple_difference_cvar(
    panel: &TimeSeriesPanel,
    spec: &CvarSpec,
    p: usize,
) -> Result<(VarModel, StructuralIdentification, CvarDiagnostics)> {
    if spec.mode != CvarMode::SimpleDifference {
        return Err(Error::InvalidArgument(
            "spec mode is not simple-difference".into(),
        ));
    }
    spec.validate(panel)?;

    let full_mask = treated_mask(panel, &spec.policy_columns, 0);
    let treated_time_count = full_mask.iter().filter(|&&m| m).count();
    if treated_time_count == 0 {
        return Err(Error::NoTreatedPeriods);
    }

    let t = panel.len();
    let data = panel.data();
    let n_pol = spec.policy_columns.len();
    let n_tr = spec.treated_columns.len();
    let mut labels = Vec::with_capacity(n_pol + n_tr);
    let mut roles = Vec::with_capacity(n_pol + n_tr);
    let mut sys = DMatrix::<f64>::zeros(t, n_pol + n_tr);
    for (j, &k) in spec.policy_columns.iter().enumerate() {
        labels.push(panel.labels()[k].clone());
        roles.push(panel.roles()[k]);
        sys.set_column(j, &data.column(k));
    }
    for (j, (&ky, &kc)) in spec
        .treated_columns
        .iter()
        .zip(&spec.control_columns)
        .enumerate()
    {
        labels.push(format!(
            "{}_minus_{}",
            panel.labels()[ky],
            panel.labels()[kc]
        ));
        roles.push(panel.roles()[ky]);
        sys.set_column(n_pol + j, &(data.column(ky) - data.column(kc)));
    }
    let system = TimeSeriesPanel::new(labels, roles, sys)?;

    let model = estimate_var(&system, p, true)?;
    let ident = cholesky_identify(&model, None, n_pol)?;

    // Fitted values over the effective sample are observation minus residual;
    // contrast their means across treated and untreated periods.
    let resid = model.residuals();
    let eff_mask = &full_mask[p..];
    let n_treated_eff = eff_mask.iter().filter(|&&m| m).count();
    if n_treated_eff == 0 {
        return Err(Error::DegenerateSample(
            "no treated period survives into the effective sample; \
             the fitted-value contrast is undefined"
                .into(),
        ));
    }
    let sys_data = system.data();
    let mut delta_ar_proxy = Vec::with_capacity(n_tr);
    if n_treated_eff == eff_mask.len() {
        // A continuous dose treats every period, leaving no untreated group
        // to contrast against; NaN marks the contrast as undefined.
        delta_ar_proxy.resize(n_tr, f64::NAN);
    } else {
        for j in 0..n_tr {
            let col = n_pol + j;
            let (mut sum_tr, mut sum_un) = (0.0, 0.0);
            for (i, &is_treated) in eff_mask.iter().enumerate() {
                let fitted = sys_data[(p + i, col)] - resid[(i, col)];
                if is_treated {
                    sum_tr += fitted;
                } else {
                    sum_un += fitted;
                }
            }
            delta_ar_proxy.push(
                sum_tr / n_treated_eff as f64
                    - sum_un / (eff_mask.len() - n_treated_eff) as f64,
            );
        }
    }

    Ok((
        model,
        ident,
        CvarDiagnostics {
            delta_ar_proxy,
            treated_time_count,
        },
    ))
}

/// Fit the error-correction construction: the selected columns enter in
/// levels (policies first, then treated, then controls), the system is fit
/// as a VECM of the spec's rank and lag order with an unrestricted constant,
/// and the policy shock is identified recursively from the difference
/// equations' residual covariance.
///
/// Returns the fitted model, the identification, and the structural impulse
/// responses in level and difference space out to `horizons`.
pub fn vecm_cvar(
    panel: &TimeSeriesPanel,
    spec: &CvarSpec,
    horizons: usize,
) -> Result<(VecmModel, StructuralIdentification, IrfBundle, IrfBundle)> {
    if spec.mode != CvarMode::Vecm {
        return Err(Error::InvalidArgument(
            "spec mode is not error-correction".into(),
        ));
    }
    spec.validate(panel)?;
    if treated_mask(panel, &spec.policy_columns, 0)
        .iter()
        .all(|&m| !m)
    {
        return Err(Error::NoTreatedPeriods);
    }

    let cols: Vec<usize> = spec
        .policy_columns
        .iter()
        .chain(&spec.treated_columns)
        .chain(&spec.control_columns)
        .copied()
        .collect();
    let system = panel.select(&cols)?;
    let model = estimate_vecm(&system, spec.lags, spec.rank, true)?;
    let ident = identify_covariance(
        model.sigma(),
        model.labels(),
        None,
        spec.policy_columns.len(),
    )?;
    let (level, diff) = vecm_structural_irf(&model, &ident, horizons)?;
    Ok((model, ident, level, diff))
}

/// Score candidate control blocks by how strongly they cointegrate with the
/// base system. Each candidate panel's columns are appended to `base` (and
/// relabeled as controls), a trace test of lag order `p` is run on the
/// combined levels, and the candidate is scored by the statistic for
/// `target_rank` cointegrating relations, i.e. the test of the null of
/// `target_rank - 1` against more.
///
/// Returns `(candidate index, statistic)` pairs sorted by statistic,
/// strongest first. Candidates whose combined system fails to build or test
/// are skipped with a logged warning; the result can be shorter than the
/// input, or empty.
pub fn rank_controls(
    base: &TimeSeriesPanel,
    candidates: &[TimeSeriesPanel],
    p: usize,
    target_rank: usize,
) -> Result<Vec<(usize, f64)>> {
    if target_rank == 0 {
        return Err(Error::InvalidArgument(
            "target rank must be at least 1".into(),
        ));
    }
    let next_control = base
        .roles()
        .iter()
        .map(|r| match r {
            SeriesRole::ControlOutcome(j) => j + 1,
            _ => 0,
        })
        .max()
        .unwrap_or(0);

    let score = |idx: usize, cand: &TimeSeriesPanel| -> Result<f64> {
        if cand.len() != base.len() {
            return Err(Error::BadPanel(format!(
                "candidate {idx} has {} rows, base has {}",
                cand.len(),
                base.len()
            )));
        }
        let n = base.n_series() + cand.n_series();
        if target_rank > n {
            return Err(Error::RankOutOfBounds {
                rank: target_rank,
                n,
            });
        }
        let mut labels: Vec<String> = base.labels().to_vec();
        labels.extend(cand.labels().iter().cloned());
        let mut roles: Vec<SeriesRole> = base.roles().to_vec();
        roles.extend(
            (0..cand.n_series()).map(|j| SeriesRole::ControlOutcome(next_control + j as u32)),
        );
        let mut data = DMatrix::<f64>::zeros(base.len(), n);
        data.view_mut((0, 0), (base.len(), base.n_series()))
            .copy_from(base.data());
        data.view_mut((0, base.n_series()), (base.len(), cand.n_series()))
            .copy_from(cand.data());
        let combined = TimeSeriesPanel::new(labels, roles, data)?;
        let test = johansen_trace_test(&combined, p, 0.95, true)?;
        Ok(test.trace_stats[target_rank - 1])
    };

    let mut scored: Vec<(usize, f64)> = candidates
        .par_iter()
        .enumerate()
        .filter_map(|(idx, cand)| match score(idx, cand) {
            Ok(stat) => Some((idx, stat)),
            Err(e) => {
                log::warn!("control candidate {idx} skipped: {e}");
                None
            }
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::structural_irf;
    use crate::inference::{wild_bootstrap_irf_with, FitRef, IrfSpace, WildMultiplier};
    use crate::vecm::granger_representation;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn bernoulli(rng: &mut ChaCha8Rng, pi: f64) -> f64 {
        if rng.random::<f64>() < pi {
            1.0
        } else {
            0.0
        }
    }

    fn panel3(w: &[f64], y: &[f64], c: &[f64]) -> TimeSeriesPanel {
        let t = w.len();
        let mut data = DMatrix::<f64>::zeros(t, 3);
        for i in 0..t {
            data[(i, 0)] = w[i];
            data[(i, 1)] = y[i];
            data[(i, 2)] = c[i];
        }
        TimeSeriesPanel::new(
            vec!["w".into(), "y".into(), "c".into()],
            vec![
                SeriesRole::Policy(1),
                SeriesRole::TreatedOutcome(1),
                SeriesRole::ControlOutcome(1),
            ],
            data,
        )
        .unwrap()
    }

    fn diff_spec(p: usize) -> CvarSpec {
        CvarSpec {
            mode: CvarMode::SimpleDifference,
            policy_columns: vec![0],
            treated_columns: vec![1],
            control_columns: vec![2],
            rank: 0,
            lags: p,
        }
    }

    /// Paired treated/control units sharing a random-walk trend; `effect`
    /// shifts the treated outcome in treated periods only, `rho` adds common
    /// autoregressive dynamics to both units.
    fn paired_units(
        t: usize,
        effect: f64,
        rho: f64,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut w, mut y, mut c) = (vec![0.0; t], vec![0.0; t], vec![0.0; t]);
        let mut trend = 0.0;
        for i in 0..t {
            trend += 0.1 * normal(&mut rng);
            w[i] = bernoulli(&mut rng, 0.3);
            let prev_y = if i == 0 { 0.0 } else { y[i - 1] };
            let prev_c = if i == 0 { 0.0 } else { c[i - 1] };
            y[i] = rho * prev_y + trend + effect * w[i] + 0.5 * normal(&mut rng);
            c[i] = rho * prev_c + trend + 0.5 * normal(&mut rng);
        }
        (w, y, c)
    }

    #[test]
    fn dummy_transform_flags_top_quantile() {
        let w: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        let y: Vec<f64> = (1..=100).map(|x| (x as f64 * 0.7).sin()).collect();
        let panel = panel3(&w, &y, &vec![0.0; 100]);
        let out = dummy_policy_transform(&panel, 0, DummyCutoff::Quantile(0.95)).unwrap();
        let dummy = out.series(0);
        // Values 96..=100 exceed the 0.95 sample quantile of 1..=100.
        for (i, &d) in dummy.iter().enumerate() {
            assert_eq!(d, if i >= 95 { 1.0 } else { 0.0 }, "position {i}");
        }
        let mean = dummy.iter().sum::<f64>() / 100.0;
        assert!((mean - 0.05).abs() <= 1.0 / 100.0);
        // Non-policy columns are untouched.
        assert_eq!(out.series(1), panel.series(1));
    }

    #[test]
    fn dummy_transform_mean_tracks_quantile_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t = 1000;
        let w: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = (0..t).map(|_| normal(&mut rng)).collect();
        let panel = panel3(&w, &y, &vec![0.0; t]);
        for q in [0.5, 0.9, 0.99] {
            let out = dummy_policy_transform(&panel, 0, DummyCutoff::Quantile(q)).unwrap();
            let mean = out.series(0).iter().sum::<f64>() / t as f64;
            assert!(
                (mean - (1.0 - q)).abs() <= 1.0 / t as f64,
                "q={q}: mean {mean}"
            );
        }
    }

    #[test]
    fn dummy_transform_absolute_cutoff() {
        let w = vec![-1.0, 2.0, 0.5, 3.0, -2.0, 0.0];
        let y = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let panel = panel3(&w, &y, &[0.0; 6]);
        let out = dummy_policy_transform(&panel, 0, DummyCutoff::Absolute(0.0)).unwrap();
        assert_eq!(out.series(0), vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn dummy_transform_validates_input() {
        let panel = panel3(&[1.5; 10], &[1.0; 10], &[0.0; 10]);
        assert!(matches!(
            dummy_policy_transform(&panel, 0, DummyCutoff::Quantile(0.9)),
            Err(Error::ConstantPolicy)
        ));
        let w: Vec<f64> = (0..10).map(|x| x as f64).collect();
        let panel = panel3(&w, &[1.0; 10], &[0.0; 10]);
        for q in [0.0, 1.0, -0.5, 1.5] {
            assert!(matches!(
                dummy_policy_transform(&panel, 0, DummyCutoff::Quantile(q)),
                Err(Error::InvalidArgument(_))
            ));
        }
        assert!(matches!(
            dummy_policy_transform(&panel, 1, DummyCutoff::Quantile(0.9)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dummy_policy_transform(&panel, 7, DummyCutoff::Quantile(0.9)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            dummy_policy_transform(&panel, 0, DummyCutoff::Absolute(f64::NAN)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_control_reduces_to_plain_var() {
        let (w, y, _) = paired_units(500, 1.5, 0.5, 3);
        let panel = panel3(&w, &y, &vec![0.0; 500]);
        let (model, ident, _) = simple_difference_cvar(&panel, &diff_spec(1), 1).unwrap();

        let mut direct = DMatrix::<f64>::zeros(500, 2);
        for i in 0..500 {
            direct[(i, 0)] = w[i];
            direct[(i, 1)] = y[i];
        }
        let direct_panel = TimeSeriesPanel::new(
            vec!["w".into(), "y_minus_c".into()],
            vec![SeriesRole::Policy(1), SeriesRole::TreatedOutcome(1)],
            direct,
        )
        .unwrap();
        let direct_model = estimate_var(&direct_panel, 1, true).unwrap();
        let direct_ident = cholesky_identify(&direct_model, None, 1).unwrap();

        assert!(
            (model.coefficients()[0].clone() - direct_model.coefficients()[0].clone()).amax()
                < 1e-12
        );
        assert!((model.sigma().clone() - direct_model.sigma().clone()).amax() < 1e-12);
        assert!((ident.gamma() - direct_ident.gamma()).amax() < 1e-12);
    }

    #[test]
    fn recovers_treatment_effect_without_dynamics() {
        let (w, y, c) = paired_units(20000, 2.0, 0.0, 11);
        let panel = panel3(&w, &y, &c);
        let (_, ident, diag) = simple_difference_cvar(&panel, &diff_spec(1), 1).unwrap();
        let gamma = ident.gamma()[(0, 0)];
        assert!((gamma - 2.0).abs() < 0.1, "gamma {gamma}");
        let expected: usize = w.iter().filter(|&&x| x != 0.0).count();
        assert_eq!(diag.treated_time_count, expected);
        assert!(diag.delta_ar_proxy[0].is_finite());
    }

    #[test]
    fn common_dynamics_leave_small_ar_contrast() {
        let (w, y, c) = paired_units(20000, 2.0, 0.8, 17);
        let panel = panel3(&w, &y, &c);
        let (_, ident, diag) = simple_difference_cvar(&panel, &diff_spec(1), 1).unwrap();
        let gamma = ident.gamma()[(0, 0)];
        assert!((gamma - 2.0).abs() < 0.1, "gamma {gamma}");
        // The policy is independent over time, so lagged differences carry no
        // information about today's treatment and the contrast stays near 0.
        assert!(
            diag.delta_ar_proxy[0].abs() < 0.05,
            "proxy {}",
            diag.delta_ar_proxy[0]
        );
    }

    #[test]
    fn null_effect_estimates_near_zero() {
        let (w, y, c) = paired_units(20000, 0.0, 0.0, 23);
        let panel = panel3(&w, &y, &c);
        let (_, ident, _) = simple_difference_cvar(&panel, &diff_spec(1), 1).unwrap();
        assert!(ident.gamma()[(0, 0)].abs() < 0.05);
    }

    #[test]
    fn identical_units_are_degenerate() {
        // A treated series equal to its control makes the difference
        // identically zero, which has no usable regressors; the failure
        // surfaces as a singular design, not a silent zero estimate.
        let (w, y, _) = paired_units(500, 0.0, 0.0, 5);
        let panel = panel3(&w, &y.clone(), &y);
        assert!(matches!(
            simple_difference_cvar(&panel, &diff_spec(1), 1),
            Err(Error::SingularRegressorMatrix { .. })
        ));
    }

    #[test]
    fn all_zero_policy_has_no_treated_periods() {
        let (_, y, c) = paired_units(300, 0.0, 0.0, 7);
        let panel = panel3(&vec![0.0; 300], &y, &c);
        assert!(matches!(
            simple_difference_cvar(&panel, &diff_spec(1), 1),
            Err(Error::NoTreatedPeriods)
        ));
    }

    #[test]
    fn spec_validation_rejects_bad_layouts() {
        let (w, y, c) = paired_units(200, 1.0, 0.0, 9);
        let panel = panel3(&w, &y, &c);

        let mut spec = diff_spec(1);
        spec.mode = CvarMode::Vecm;
        spec.rank = 1;
        assert!(matches!(
            simple_difference_cvar(&panel, &spec, 1),
            Err(Error::InvalidArgument(_))
        ));

        let mut spec = diff_spec(1);
        spec.control_columns = vec![];
        assert!(matches!(
            simple_difference_cvar(&panel, &spec, 1),
            Err(Error::InvalidArgument(_))
        ));

        let mut spec = diff_spec(1);
        spec.control_columns = vec![1];
        assert!(matches!(
            simple_difference_cvar(&panel, &spec, 1),
            Err(Error::InvalidArgument(_))
        ));

        let mut spec = diff_spec(1);
        spec.treated_columns = vec![9];
        assert!(matches!(
            simple_difference_cvar(&panel, &spec, 1),
            Err(Error::InvalidArgument(_))
        ));

        let mut spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, 0, 1);
        assert!(matches!(spec.validate(&panel), Err(Error::InvalidArgument(_))));
        spec.rank = 1;
        spec.lags = 0;
        assert!(matches!(spec.validate(&panel), Err(Error::InvalidArgument(_))));
    }

    /// Five-series system: an independent dummy policy, two treated outcomes
    /// riding two random-walk trends, and two controls on the same trends.
    /// The policy adds `effect` to each treated outcome in the impact period
    /// only, so the true level response is transient.
    fn cointegrated_quad(t: usize, effect: f64, seed: u64) -> TimeSeriesPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = DMatrix::<f64>::zeros(t, 5);
        let (mut tau1, mut tau2) = (0.0, 0.0);
        for i in 0..t {
            tau1 += normal(&mut rng);
            tau2 += normal(&mut rng);
            let w = bernoulli(&mut rng, 0.2);
            data[(i, 0)] = w;
            data[(i, 1)] = tau1 + effect * w + 0.5 * normal(&mut rng);
            data[(i, 2)] = tau2 + effect * w + 0.5 * normal(&mut rng);
            data[(i, 3)] = tau1 + 0.5 * normal(&mut rng);
            data[(i, 4)] = tau2 + 0.5 * normal(&mut rng);
        }
        TimeSeriesPanel::new(
            vec!["w".into(), "y1".into(), "y2".into(), "c1".into(), "c2".into()],
            vec![
                SeriesRole::Policy(1),
                SeriesRole::TreatedOutcome(1),
                SeriesRole::TreatedOutcome(2),
                SeriesRole::ControlOutcome(1),
                SeriesRole::ControlOutcome(2),
            ],
            data,
        )
        .unwrap()
    }

    #[test]
    fn transient_effect_fades_in_difference_responses() {
        let panel = cointegrated_quad(4000, 1.0, 31);
        let spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, 3, 2);
        let (model, ident, level, diff) = vecm_cvar(&panel, &spec, 40).unwrap();

        // Impact: one unit on each treated outcome (positions 1 and 2).
        for pos in [1, 2] {
            let impact = diff.responses[0].point[(0, pos)];
            assert!((impact - 1.0).abs() < 0.15, "impact {impact} at {pos}");
            assert_eq!(level.responses[0].point[(0, pos)], impact);
        }
        // Difference responses die out at long horizons.
        for h in 20..=40 {
            for pos in 1..5 {
                assert!(
                    diff.responses[0].point[(h, pos)].abs() < 0.1,
                    "diff response {} at h={h}, series {pos}",
                    diff.responses[0].point[(h, pos)]
                );
            }
        }
        // The long-run level response of the policy shock is near zero: the
        // common-trend projection of its unit-normalized impact vanishes.
        let (c, _, ok) = granger_representation(&model);
        assert!(ok);
        let long_run = &c * ident.impact(0);
        assert!(long_run.amax() < 0.25, "long-run {}", long_run.amax());
    }

    #[test]
    fn controls_shrink_long_horizon_responses() {
        // Without controls the treated outcomes are unit-root series and a
        // levels VAR keeps the policy response alive for many horizons; the
        // control construction moves it into the cointegrating space where it
        // dies out. Compare tail norms over horizons 10..40.
        for seed in [41_u64, 42, 43, 44, 45] {
            let panel = cointegrated_quad(2000, 1.0, seed);
            let spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, 3, 2);
            let (_, _, _, diff) = vecm_cvar(&panel, &spec, 40).unwrap();

            let no_control = panel.select(&[0, 1, 2]).unwrap();
            let ur_model = estimate_var(&no_control, 2, true).unwrap();
            let ur_ident = cholesky_identify(&ur_model, None, 1).unwrap();
            let ur_level = structural_irf(&ur_model, &ur_ident, 40, IrfSpace::Level);

            let tail_norm = |m: &DMatrix<f64>, pos: usize| -> f64 {
                (10..=40).map(|h| m[(h, pos)].powi(2)).sum::<f64>().sqrt()
            };
            for pos in [1, 2] {
                let cvar_tail = tail_norm(&diff.responses[0].point, pos);
                let ur_tail = tail_norm(&ur_level.responses[0].point, pos);
                assert!(
                    cvar_tail < ur_tail,
                    "seed {seed} series {pos}: cvar {cvar_tail} vs unit-root {ur_tail}"
                );
            }
        }
    }

    #[test]
    fn vecm_null_effect_within_bootstrap_bands() {
        let panel = cointegrated_quad(2000, 0.0, 53);
        let spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, 3, 2);
        let (model, _, _, diff) = vecm_cvar(&panel, &spec, 10).unwrap();
        // Gaussian multipliers: sign flips leave the residual covariance
        // fixed, so only they give a usable standard error at horizon 0.
        let bands = wild_bootstrap_irf_with(
            FitRef::Vecm(&model),
            None,
            1,
            10,
            199,
            0.95,
            99,
            IrfSpace::Difference,
            WildMultiplier::Gaussian,
        )
        .unwrap();
        for pos in [1, 2] {
            let point = diff.responses[0].point[(0, pos)];
            let lo = bands.responses[0].lower.as_ref().unwrap()[(0, pos)];
            let hi = bands.responses[0].upper.as_ref().unwrap()[(0, pos)];
            let se = (hi - lo) / (2.0 * 1.96);
            assert!(
                point.abs() <= 3.0 * se,
                "series {pos}: point {point}, se {se}"
            );
        }
    }

    #[test]
    fn vecm_spec_validation_and_degenerate_policy() {
        let panel = cointegrated_quad(300, 1.0, 61);
        let diff_mode = CvarSpec::from_roles(&panel, CvarMode::SimpleDifference, 0, 1);
        assert!(matches!(
            vecm_cvar(&panel, &diff_mode, 10),
            Err(Error::InvalidArgument(_))
        ));
        let rank0 = CvarSpec::from_roles(&panel, CvarMode::Vecm, 0, 1);
        assert!(matches!(
            vecm_cvar(&panel, &rank0, 10),
            Err(Error::InvalidArgument(_))
        ));

        let mut zeroed = panel.data().clone();
        for i in 0..zeroed.nrows() {
            zeroed[(i, 0)] = 0.0;
        }
        let dead = panel.with_data(zeroed).unwrap();
        let spec = CvarSpec::from_roles(&dead, CvarMode::Vecm, 3, 1);
        assert!(matches!(
            vecm_cvar(&dead, &spec, 10),
            Err(Error::NoTreatedPeriods)
        ));
    }

    /// Base pair (dummy policy, trend-following treated outcome) plus one
    /// candidate control built on the same trend and one on an independent
    /// random walk.
    fn ranking_fixture(
        t: usize,
        seed: u64,
    ) -> (TimeSeriesPanel, TimeSeriesPanel, TimeSeriesPanel) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut base = DMatrix::<f64>::zeros(t, 2);
        let mut good = DMatrix::<f64>::zeros(t, 1);
        let mut noise = DMatrix::<f64>::zeros(t, 1);
        let (mut tau, mut other) = (0.0, 0.0);
        for i in 0..t {
            tau += normal(&mut rng);
            other += normal(&mut rng);
            base[(i, 0)] = bernoulli(&mut rng, 0.3);
            base[(i, 1)] = tau + 0.5 * normal(&mut rng);
            good[(i, 0)] = tau + 0.5 * normal(&mut rng);
            noise[(i, 0)] = other;
        }
        let base = TimeSeriesPanel::new(
            vec!["w".into(), "y".into()],
            vec![SeriesRole::Policy(1), SeriesRole::TreatedOutcome(1)],
            base,
        )
        .unwrap();
        let wrap = |m: DMatrix<f64>, label: &str| {
            TimeSeriesPanel::new(
                vec![label.into()],
                vec![SeriesRole::ControlOutcome(1)],
                m,
            )
            .unwrap()
        };
        (base, wrap(good, "shared_trend"), wrap(noise, "stray_walk"))
    }

    #[test]
    fn ranking_prefers_cointegrated_candidate() {
        let mut wins = 0;
        for seed in 0..50 {
            let (base, good, noise) = ranking_fixture(600, 1000 + seed);
            let ranked = rank_controls(&base, &[noise, good], 1, 2).unwrap();
            assert_eq!(ranked.len(), 2);
            if ranked[0].0 == 1 {
                wins += 1;
            }
        }
        assert!(wins >= 48, "cointegrated candidate ranked first {wins}/50");
    }

    #[test]
    fn ranking_handles_singletons_and_skips_bad_candidates() {
        let (base, good, _) = ranking_fixture(400, 77);
        let ranked = rank_controls(&base, std::slice::from_ref(&good), 1, 2).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].0, 0);
        assert!(ranked[0].1.is_finite());

        // Wrong length and duplicate label are skipped, not fatal.
        let (short_base, short_good, _) = ranking_fixture(200, 78);
        let dup = TimeSeriesPanel::new(
            vec!["y".into()],
            vec![SeriesRole::ControlOutcome(1)],
            short_good.data().clone(),
        )
        .unwrap();
        let ranked = rank_controls(&short_base, &[short_good.clone(), good, dup], 1, 2).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].0, 0);

        assert!(matches!(
            rank_controls(&short_base, &[short_good], 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ranking_statistic_matches_direct_test() {
        let (base, good, _) = ranking_fixture(500, 91);
        let ranked = rank_controls(&base, std::slice::from_ref(&good), 1, 2).unwrap();

        let mut data = DMatrix::<f64>::zeros(500, 3);
        data.view_mut((0, 0), (500, 2)).copy_from(base.data());
        data.view_mut((0, 2), (500, 1)).copy_from(good.data());
        let combined = TimeSeriesPanel::new(
            vec!["w".into(), "y".into(), "shared_trend".into()],
            vec![
                SeriesRole::Policy(1),
                SeriesRole::TreatedOutcome(1),
                SeriesRole::ControlOutcome(1),
            ],
            data,
        )
        .unwrap();
        let direct = johansen_trace_test(&combined, 1, 0.95, true).unwrap();
        assert!((ranked[0].1 - direct.trace_stats[1]).abs() < 1e-12);
    }
}
