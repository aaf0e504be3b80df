//! Command-line frontend for the cvarkit toolkit: model estimation,
//! structural impulse responses, cointegration rank testing, and Monte
//! Carlo verification of the causal identification results.
//!
//! Every subcommand writes machine-readable CSV tables plus a manifest
//! naming the inputs, parameters, and seed. Outputs carry no timestamps, so
//! replaying a manifest yields byte-identical files. Exit codes: 0 on
//! success, 2 on validation failures, 3 on numerical failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvarkit::estimands::DEFAULT_GRID_SIZE;
use cvarkit::inference::FitRef;
use cvarkit::panel::load_panel_files;
use cvarkit::{
    breusch_godfrey, cholesky_identify, dummy_policy_transform, estimate_var,
    johansen_trace_test, nonneg_weights, response_fn, simple_difference_cvar, simulate_dgp,
    structural_irf, verify_theorem, vecm_cvar, wild_bootstrap_irf, CvarDiagnostics, CvarMode,
    CvarSpec, DgpSpec, DummyCutoff, Error, IrfBundle, IrfSpace, PanelDesign, PolicyDist, Result,
    StructuralIdentification, TheoremId, TimeSeriesPanel, VarModel, VecmModel,
};

#[derive(Parser)]
#[command(
    name = "cvarkit",
    version,
    about = "Causal VAR/VECM toolkit: estimation, identification, rank tests, \
             bootstrap impulse responses, and Monte Carlo verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write coefficient and residual-diagnostic tables.
    Estimate(EstimateArgs),
    /// Structural impulse responses to policy shocks, with optional
    /// wild-bootstrap bands.
    Irf(IrfArgs),
    /// Johansen trace test for cointegration rank.
    RankTest(RankTestArgs),
    /// Verify an identification result on a simulated process with known
    /// potential outcomes.
    Verify(VerifyArgs),
}

/// Fitting pipeline selector.
#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Plain VAR in levels with a recursive policy shock.
    Var,
    /// Simple-difference construction: treated outcomes minus paired
    /// controls, fit as a VAR.
    CvarDiff,
    /// Error-correction construction: levels fit as a VECM of the given
    /// rank.
    CvarVecm,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Var => "var",
            Mode::CvarDiff => "cvar-diff",
            Mode::CvarVecm => "cvar-vecm",
        }
    }
}

#[derive(Args)]
struct PanelArgs {
    /// Input CSV: header row, first column the time axis.
    #[arg(long)]
    input: PathBuf,
    /// Role map: one `column = policy:k|treated:j|control:j` line per series.
    #[arg(long)]
    roles: PathBuf,
    /// Replace each policy column by a 0/1 dummy flagging values above this
    /// quantile before fitting.
    #[arg(long)]
    dummy_quantile: Option<f64>,
}

impl PanelArgs {
    fn load(&self) -> Result<TimeSeriesPanel> {
        let mut panel = load_panel_files(&self.input, &self.roles)?;
        if let Some(q) = self.dummy_quantile {
            for col in panel.policy_columns() {
                panel = dummy_policy_transform(&panel, col, DummyCutoff::Quantile(q))?;
            }
        }
        Ok(panel)
    }

    fn manifest(&self, entries: &mut Vec<(&'static str, String)>) {
        entries.push(("input", self.input.display().to_string()));
        entries.push(("roles", self.roles.display().to_string()));
        if let Some(q) = self.dummy_quantile {
            entries.push(("dummy_quantile", q.to_string()));
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    panel: PanelArgs,
    /// Lag order of the fitted system (level lags in VECM mode).
    #[arg(long)]
    lags: usize,
    #[arg(long, value_enum, default_value_t = Mode::Var)]
    mode: Mode,
    /// Cointegration rank; required in VECM mode.
    #[arg(long)]
    rank: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct IrfArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long)]
    lags: usize,
    #[arg(long, value_enum, default_value_t = Mode::Var)]
    mode: Mode,
    #[arg(long)]
    rank: Option<usize>,
    /// Response horizon; rows run from impact (0) through this value.
    #[arg(long, default_value_t = 40)]
    horizons: usize,
    /// Number of wild-bootstrap replications for percentile bands.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Band coverage level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Generator seed; required whenever bands are bootstrapped.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RankTestArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long)]
    lags: usize,
    /// Test level for the sequential rank decision.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Identification results the harness can verify.
#[derive(Copy, Clone, ValueEnum)]
enum TheoremArg {
    #[value(name = "T1")]
    T1,
    #[value(name = "T2")]
    T2,
    #[value(name = "T3")]
    T3,
    #[value(name = "T4")]
    T4,
    #[value(name = "T5")]
    T5,
    #[value(name = "T8")]
    T8,
    #[value(name = "T9")]
    T9,
}

impl TheoremArg {
    fn id(self) -> TheoremId {
        match self {
            TheoremArg::T1 => TheoremId::T1,
            TheoremArg::T2 => TheoremId::T2,
            TheoremArg::T3 => TheoremId::T3,
            TheoremArg::T4 => TheoremId::T4,
            TheoremArg::T5 => TheoremId::T5,
            TheoremArg::T8 => TheoremId::T8,
            TheoremArg::T9 => TheoremId::T9,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum PolicyArg {
    Bernoulli,
    Gaussian,
    Nonneg,
}

#[derive(Copy, Clone, ValueEnum)]
enum ResponseArg {
    /// m(w) = effect * w
    Linear,
    /// m(w) = effect * w^2
    Quadratic,
    /// m(w) = effect * w^3
    Cubic,
}

#[derive(Args)]
struct VerifyArgs {
    /// Result to verify; the matching pipeline and panel design are implied.
    #[arg(long, value_enum)]
    theorem: TheoremArg,
    /// Policy law; defaults to the law the result assumes.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Treatment probability of a Bernoulli policy.
    #[arg(long, default_value_t = 0.3)]
    pi: f64,
    /// Standard deviation of a Gaussian policy.
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Probability of an exact zero dose (non-negative policy).
    #[arg(long, default_value_t = 0.7)]
    zero_mass: f64,
    /// Rate of the truncated-exponential dose (non-negative policy).
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Smallest positive dose (non-negative policy).
    #[arg(long, default_value_t = 0.05)]
    dose_min: f64,
    /// Largest dose (non-negative policy).
    #[arg(long, default_value_t = 8.0)]
    dose_max: f64,
    /// Scale of the response function.
    #[arg(long, default_value_t = 1.0)]
    effect: f64,
    #[arg(long, value_enum, default_value_t = ResponseArg::Linear)]
    response: ResponseArg,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    /// Autoregressive coefficient of the outcome processes.
    #[arg(long, default_value_t = 0.0)]
    ar: f64,
    /// Sample length per replication.
    #[arg(long = "T", default_value_t = 10_000)]
    t: usize,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Tilt policy draws toward high-noise periods, breaking independence.
    #[arg(long, default_value_t = 0.0)]
    selection_bias: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("CVARKIT_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: CVARKIT_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Irf(args) => cmd_irf(args),
        Command::RankTest(args) => cmd_rank_test(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn require_lags(lags: usize) -> Result<()> {
    if lags == 0 {
        return Err(Error::InvalidArgument(
            "--lags must be at least 1".into(),
        ));
    }
    Ok(())
}

fn require_rank(mode: Mode, rank: Option<usize>) -> Result<usize> {
    match (mode, rank) {
        (Mode::CvarVecm, Some(r)) if r >= 1 => Ok(r),
        (Mode::CvarVecm, _) => Err(Error::InvalidArgument(
            "--rank (at least 1) is required with --mode cvar-vecm".into(),
        )),
        (_, _) => Ok(0),
    }
}

fn write_manifest(dir: &Path, subcommand: &str, entries: &[(&'static str, String)]) -> Result<()> {
    let mut text = format!(
        "tool = cvarkit {}\nsubcommand = {subcommand}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

/// Tidy long-format writer: one (block, equation, regressor, value) row per
/// scalar of the fitted model.
struct SummaryWriter {
    w: csv::Writer<fs::File>,
}

impl SummaryWriter {
    fn create(path: &Path) -> Result<Self> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["block", "equation", "regressor", "value"])?;
        Ok(SummaryWriter { w })
    }

    fn row(&mut self, block: &str, equation: &str, regressor: &str, value: f64) -> Result<()> {
        self.w
            .write_record([block, equation, regressor, &value.to_string()])?;
        Ok(())
    }

    fn matrix(
        &mut self,
        block: &str,
        rows: &[String],
        cols: &[String],
        m: &cvarkit::nalgebra::DMatrix<f64>,
    ) -> Result<()> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.row(block, &rows[i], &cols[j], m[(i, j)])?;
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

fn identification_blocks(
    out: &mut SummaryWriter,
    ident: &StructuralIdentification,
) -> Result<()> {
    let labels = ident.labels().to_vec();
    let n_pol = ident.n_policies();
    let shocks: Vec<String> = labels[..n_pol].to_vec();
    out.matrix("impact", &labels, &shocks, ident.impacts())?;
    let outcome_labels: Vec<String> = labels[n_pol..].to_vec();
    out.matrix("gamma", &outcome_labels, &shocks, &ident.gamma())?;
    Ok(())
}

fn write_var_summary(
    dir: &Path,
    model: &VarModel,
    ident: Option<&StructuralIdentification>,
) -> Result<()> {
    let mut out = SummaryWriter::create(&dir.join("model_summary.csv"))?;
    let labels = model.labels().to_vec();
    if let Some(c) = model.intercept() {
        for (i, label) in labels.iter().enumerate() {
            out.row("intercept", label, "const", c[i])?;
        }
    }
    for (l, mat) in model.coefficients().iter().enumerate() {
        out.matrix(&format!("lag{}", l + 1), &labels, &labels, mat)?;
    }
    out.matrix("sigma", &labels, &labels, model.sigma())?;
    if let Some(ident) = ident {
        identification_blocks(&mut out, ident)?;
    }
    out.finish()
}

fn write_vecm_summary(
    dir: &Path,
    model: &VecmModel,
    ident: &StructuralIdentification,
) -> Result<()> {
    let mut out = SummaryWriter::create(&dir.join("model_summary.csv"))?;
    let labels = model.labels().to_vec();
    let relations: Vec<String> = (1..=model.rank())
        .map(|k| format!("relation{k}"))
        .collect();
    out.matrix("alpha", &labels, &relations, model.alpha())?;
    out.matrix("beta", &labels, &relations, model.beta())?;
    for (l, mat) in model.short_run().iter().enumerate() {
        out.matrix(&format!("short_run_lag{}", l + 1), &labels, &labels, mat)?;
    }
    if let Some(c) = model.intercept() {
        for (i, label) in labels.iter().enumerate() {
            out.row("intercept", label, "const", c[i])?;
        }
    }
    out.matrix("sigma", &labels, &labels, model.sigma())?;
    identification_blocks(&mut out, ident)?;
    out.finish()
}

/// Per-series residual moments plus any extra diagnostic rows, in
/// (metric, series, value) long format.
fn write_diagnostics(
    dir: &Path,
    residuals: &cvarkit::nalgebra::DMatrix<f64>,
    labels: &[String],
    extra: &[(String, String, f64)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("residual_diagnostics.csv"))?;
    w.write_record(["metric", "series", "value"])?;
    let t = residuals.nrows() as f64;
    for (j, label) in labels.iter().enumerate() {
        let col = residuals.column(j);
        let mean = col.sum() / t;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
        let mut acf1 = 0.0;
        for i in 1..residuals.nrows() {
            acf1 += (col[i] - mean) * (col[i - 1] - mean);
        }
        let acf1 = if var > 0.0 { acf1 / (t * var) } else { 0.0 };
        w.write_record(["resid_mean", label, &mean.to_string()])?;
        w.write_record(["resid_sd", label, &var.sqrt().to_string()])?;
        w.write_record(["resid_acf1", label, &acf1.to_string()])?;
    }
    for (metric, series, value) in extra {
        w.write_record([metric.as_str(), series.as_str(), &value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn proxy_rows(diag: &CvarDiagnostics, labels: &[String], n_pol: usize) -> Vec<(String, String, f64)> {
    let mut rows = vec![(
        "treated_time_count".to_string(),
        String::new(),
        diag.treated_time_count as f64,
    )];
    for (j, v) in diag.delta_ar_proxy.iter().enumerate() {
        rows.push(("delta_ar_proxy".to_string(), labels[n_pol + j].clone(), *v));
    }
    rows
}

/// Breusch-Godfrey rows at one through three residual lags: the statistic,
/// degrees of freedom, and the 90/95/99 percent chi-square criticals.
fn bg_rows(model: &VecmModel) -> Result<Vec<(String, String, f64)>> {
    let mut rows = Vec::new();
    for h in 1..=3usize {
        let test = breusch_godfrey(model, h)?;
        rows.push((format!("bg_statistic_h{h}"), String::new(), test.statistic));
        rows.push((format!("bg_df_h{h}"), String::new(), test.df as f64));
        for (level, value) in [(90, 0), (95, 1), (99, 2)] {
            rows.push((
                format!("bg_critical_{level}_h{h}"),
                String::new(),
                test.critical_values[value],
            ));
        }
    }
    Ok(rows)
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    require_lags(args.lags)?;
    let rank = require_rank(args.mode, args.rank)?;
    let panel = args.panel.load()?;
    fs::create_dir_all(&args.out)?;

    let mut entries: Vec<(&'static str, String)> = Vec::new();
    args.panel.manifest(&mut entries);
    entries.push(("lags", args.lags.to_string()));
    entries.push(("mode", args.mode.name().to_string()));
    if args.mode == Mode::CvarVecm {
        entries.push(("rank", rank.to_string()));
    }

    match args.mode {
        Mode::Var => {
            let model = estimate_var(&panel, args.lags, true)?;
            let n_pol = panel.policy_columns().len();
            let ident = if n_pol > 0 {
                Some(cholesky_identify(&model, None, n_pol)?)
            } else {
                None
            };
            write_var_summary(&args.out, &model, ident.as_ref())?;
            write_diagnostics(&args.out, model.residuals(), model.labels(), &[])?;
            entries.push(("t_effective", model.t_effective().to_string()));
            entries.push(("loglik", model.loglik().to_string()));
        }
        Mode::CvarDiff => {
            let spec = CvarSpec::from_roles(&panel, CvarMode::SimpleDifference, 0, args.lags);
            let (model, ident, diag) = simple_difference_cvar(&panel, &spec, args.lags)?;
            write_var_summary(&args.out, &model, Some(&ident))?;
            let extra = proxy_rows(&diag, model.labels(), spec.policy_columns.len());
            write_diagnostics(&args.out, model.residuals(), model.labels(), &extra)?;
            entries.push(("t_effective", model.t_effective().to_string()));
            entries.push(("loglik", model.loglik().to_string()));
        }
        Mode::CvarVecm => {
            let spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, rank, args.lags);
            let (model, ident, _, _) = vecm_cvar(&panel, &spec, 1)?;
            write_vecm_summary(&args.out, &model, &ident)?;
            let extra = bg_rows(&model)?;
            write_diagnostics(&args.out, model.residuals(), model.labels(), &extra)?;
            entries.push(("t_effective", model.t_effective().to_string()));
            entries.push(("loglik", model.loglik().to_string()));
        }
    }

    write_manifest(&args.out, "estimate", &entries)
}

/// IRF rows: (horizon, series, response[, lower, upper]). When the system
/// has several policy shocks the series cell reads `shock:series`.
fn write_irf(path: &Path, bundle: &IrfBundle, bands: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if bands {
        w.write_record(["horizon", "series", "response", "lower", "upper"])?;
    } else {
        w.write_record(["horizon", "series", "response"])?;
    }
    let multi = bundle.responses.len() > 1;
    for resp in &bundle.responses {
        let shock = &bundle.series[resp.policy];
        for h in 0..resp.point.nrows() {
            for s in 0..resp.point.ncols() {
                let series = if multi {
                    format!("{shock}:{}", bundle.series[s])
                } else {
                    bundle.series[s].clone()
                };
                if bands {
                    let lower = resp.lower.as_ref().expect("bootstrap bands present");
                    let upper = resp.upper.as_ref().expect("bootstrap bands present");
                    w.write_record([
                        h.to_string(),
                        series,
                        resp.point[(h, s)].to_string(),
                        lower[(h, s)].to_string(),
                        upper[(h, s)].to_string(),
                    ])?;
                } else {
                    w.write_record([h.to_string(), series, resp.point[(h, s)].to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_irf(args: IrfArgs) -> Result<()> {
    require_lags(args.lags)?;
    let rank = require_rank(args.mode, args.rank)?;
    if args.horizons == 0 {
        return Err(Error::InvalidArgument("--horizons must be at least 1".into()));
    }
    let seed = match (args.bootstrap, args.seed) {
        (Some(_), None) => {
            return Err(Error::InvalidArgument(
                "--seed is required when --bootstrap is given".into(),
            ))
        }
        (_, s) => s.unwrap_or(0),
    };
    let panel = args.panel.load()?;
    let n_pol = panel.policy_columns().len();
    if n_pol == 0 {
        return Err(Error::InvalidArgument(
            "impulse responses need at least one policy column to define the shock".into(),
        ));
    }
    fs::create_dir_all(&args.out)?;

    let mut entries: Vec<(&'static str, String)> = Vec::new();
    args.panel.manifest(&mut entries);
    entries.push(("lags", args.lags.to_string()));
    entries.push(("mode", args.mode.name().to_string()));
    if args.mode == Mode::CvarVecm {
        entries.push(("rank", rank.to_string()));
    }
    entries.push(("horizons", args.horizons.to_string()));
    if let Some(b) = args.bootstrap {
        entries.push(("bootstrap", b.to_string()));
        entries.push(("level", args.level.to_string()));
        entries.push(("seed", seed.to_string()));
    }

    match args.mode {
        Mode::Var | Mode::CvarDiff => {
            let (model, ident) = match args.mode {
                Mode::Var => {
                    let model = estimate_var(&panel, args.lags, true)?;
                    let ident = cholesky_identify(&model, None, n_pol)?;
                    (model, ident)
                }
                _ => {
                    let spec =
                        CvarSpec::from_roles(&panel, CvarMode::SimpleDifference, 0, args.lags);
                    let (model, ident, _) = simple_difference_cvar(&panel, &spec, args.lags)?;
                    (model, ident)
                }
            };
            let point = structural_irf(&model, &ident, args.horizons, IrfSpace::Level);
            write_irf(&args.out.join("irf_point.csv"), &point, false)?;
            if let Some(b) = args.bootstrap {
                let bands = wild_bootstrap_irf(
                    FitRef::Var(&model),
                    None,
                    n_pol,
                    args.horizons,
                    b,
                    args.level,
                    seed,
                    IrfSpace::Level,
                )?;
                write_irf(&args.out.join("irf_bands.csv"), &bands, true)?;
                entries.push(("bootstrap_skipped", bands.skipped.to_string()));
            }
        }
        Mode::CvarVecm => {
            let spec = CvarSpec::from_roles(&panel, CvarMode::Vecm, rank, args.lags);
            let (model, _, level_bundle, diff_bundle) = vecm_cvar(&panel, &spec, args.horizons)?;
            write_irf(&args.out.join("irf_point_level.csv"), &level_bundle, false)?;
            write_irf(&args.out.join("irf_point_diff.csv"), &diff_bundle, false)?;
            if let Some(b) = args.bootstrap {
                for (space, name) in [
                    (IrfSpace::Level, "irf_bands_level.csv"),
                    (IrfSpace::Difference, "irf_bands_diff.csv"),
                ] {
                    let bands = wild_bootstrap_irf(
                        FitRef::Vecm(&model),
                        None,
                        n_pol,
                        args.horizons,
                        b,
                        args.level,
                        seed,
                        space,
                    )?;
                    write_irf(&args.out.join(name), &bands, true)?;
                }
            }
        }
    }

    write_manifest(&args.out, "irf", &entries)
}

fn cmd_rank_test(args: RankTestArgs) -> Result<()> {
    require_lags(args.lags)?;
    let panel = args.panel.load()?;
    if panel.n_series() < 2 {
        return Err(Error::InvalidArgument(
            "cointegration rank needs at least two series".into(),
        ));
    }
    let test = johansen_trace_test(&panel, args.lags, args.level, true)?;
    fs::create_dir_all(&args.out)?;

    let n = test.trace_stats.len();
    let mut w = csv::Writer::from_path(args.out.join("trace_table.csv"))?;
    w.write_record([
        "null_rank",
        "trace_statistic",
        "critical_value",
        "rejected",
        "selected",
    ])?;
    for r in 0..n {
        let stat = test.trace_stats[r];
        let crit = test.critical_values[r];
        w.write_record([
            r.to_string(),
            format!("{stat:.4}"),
            format!("{crit:.4}"),
            (stat > crit).to_string(),
            (test.selected_rank == r).to_string(),
        ])?;
    }
    // Full-rank display row: testing rank n leaves no eigenvalues, so the
    // statistic is zero by construction.
    w.write_record([
        n.to_string(),
        format!("{:.4}", 0.0),
        test.terminal_critical
            .map(|c| format!("{c:.4}"))
            .unwrap_or_default(),
        String::new(),
        (test.selected_rank == n).to_string(),
    ])?;
    w.flush()?;

    let mut entries: Vec<(&'static str, String)> = Vec::new();
    args.panel.manifest(&mut entries);
    entries.push(("lags", args.lags.to_string()));
    entries.push(("level", args.level.to_string()));
    entries.push(("selected_rank", test.selected_rank.to_string()));
    entries.push(("t_effective", test.t_effective.to_string()));
    write_manifest(&args.out, "rank-test", &entries)
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let theorem = args.theorem.id();
    let policy_kind = args.policy.unwrap_or(match theorem {
        TheoremId::T1 | TheoremId::T5 | TheoremId::T8 => PolicyArg::Bernoulli,
        TheoremId::T2 | TheoremId::T3 | TheoremId::T9 => PolicyArg::Gaussian,
        TheoremId::T4 => PolicyArg::Nonneg,
    });
    let policy = match policy_kind {
        PolicyArg::Bernoulli => PolicyDist::Bernoulli(args.pi),
        PolicyArg::Gaussian => PolicyDist::Gaussian(args.sd),
        PolicyArg::Nonneg => PolicyDist::NonNegative {
            zero_mass: args.zero_mass,
            rate: args.rate,
            d_l: args.dose_min,
            d_u: args.dose_max,
        },
    };
    let design = match theorem {
        TheoremId::T1 | TheoremId::T2 | TheoremId::T3 | TheoremId::T4 => PanelDesign::Plain,
        TheoremId::T5 => PanelDesign::PairedControl,
        TheoremId::T8 | TheoremId::T9 => PanelDesign::CointegratedControl,
    };
    let effect = args.effect;
    let response = match args.response {
        ResponseArg::Linear => response_fn(move |w| effect * w),
        ResponseArg::Quadratic => response_fn(move |w| effect * w * w),
        ResponseArg::Cubic => response_fn(move |w| effect * w * w * w),
    };
    let spec = DgpSpec {
        policy,
        response,
        noise_sd: args.noise_sd,
        ar: args.ar,
        t: args.t,
        seed: args.seed,
        selection_bias: args.selection_bias,
        design,
    };

    let report = verify_theorem(theorem, &spec, args.reps)?;
    fs::create_dir_all(&args.out)?;

    let mut text = report.render();
    if matches!(theorem, TheoremId::T4) {
        // Weight decomposition behind the mixture target, from the
        // simulated dose sample.
        let (panel, truth) = simulate_dgp(&spec)?;
        let profile = nonneg_weights(&panel.series(0), DEFAULT_GRID_SIZE)?;
        text.push_str("\nweight decomposition\n");
        text.push_str(&format!("q0 (jump mass) = {:.6}\n", profile.q0));
        text.push_str(&format!(
            "q1 integral = {:.6}\n",
            profile.mass_check - profile.q0
        ));
        text.push_str(&format!(
            "dose support = [{:.6}, {:.6}]\n",
            profile.d_l, profile.d_u
        ));
        if let Some(mixture) = truth.mixture {
            text.push_str(&format!("mixture target = {:.6}\n", mixture));
        }
        text.push_str(&format!("plain average derivative = {:.6}\n", truth.acr));
    }
    fs::write(args.out.join("verification_report.txt"), &text)?;

    println!(
        "theorem {}: {} (mean estimate {:.6}, truth {:.6}, bias {:+.6}, tolerance {:.6})",
        report.theorem,
        if report.pass { "PASS" } else { "FAIL" },
        report.mean_estimate,
        report.truth,
        report.bias,
        report.tolerance
    );

    let mut entries: Vec<(&'static str, String)> = vec![
        ("theorem", report.theorem.to_string()),
        (
            "policy",
            match policy_kind {
                PolicyArg::Bernoulli => format!("bernoulli pi={}", args.pi),
                PolicyArg::Gaussian => format!("gaussian sd={}", args.sd),
                PolicyArg::Nonneg => format!(
                    "nonneg zero_mass={} rate={} support=[{}, {}]",
                    args.zero_mass, args.rate, args.dose_min, args.dose_max
                ),
            },
        ),
        (
            "response",
            format!(
                "{} effect={}",
                match args.response {
                    ResponseArg::Linear => "linear",
                    ResponseArg::Quadratic => "quadratic",
                    ResponseArg::Cubic => "cubic",
                },
                args.effect
            ),
        ),
        ("noise_sd", args.noise_sd.to_string()),
        ("ar", args.ar.to_string()),
        ("T", args.t.to_string()),
        ("reps", args.reps.to_string()),
        ("seed", args.seed.to_string()),
        ("pass", report.pass.to_string()),
    ];
    if args.selection_bias != 0.0 {
        entries.push(("selection_bias", args.selection_bias.to_string()));
    }
    write_manifest(&args.out, "verify", &entries)
}
