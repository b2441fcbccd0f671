//! Batch front end: experiment config files, the five subcommands and exit codes.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use wigner_clt::harness::{
    self, compare, max_field_experiment, run_ensemble, EigensolveMode, RunConfig, CF_SLACK,
};
use wigner_clt::profile::{ProfileDescriptor, ProfileKind, ProfileParams};
use wigner_clt::{predict, Beta, EnsembleSpec, EntryDistribution, PredictOptions, TestFunction, VarianceProfile};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<wigner_clt::Error> for CliError {
    fn from(e: wigner_clt::Error) -> Self {
        match &e {
            wigner_clt::Error::Replica { .. } => CliError::Numerical(e.to_string()),
            _ if e.is_config() => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("cannot write {}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "wigner-clt", version, about = "CLT predictions and Monte Carlo checks for generalized Wigner matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the predicted variance, mean correction and cubic term.
    Predict(Common),
    /// Sample the ensemble and write the linear statistics.
    Simulate(Common),
    /// Simulate and compare against the prediction; exit 1 on any failed check.
    Verify(Common),
    /// Field-maximum and rigidity experiment.
    Maxpoly(Common),
    /// Build the variance profile and report its diagnostics.
    Profile(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reduced N and R from the config's [quick] section.
    #[arg(long)]
    pub quick: bool,
    /// Overrides the replica count after --quick is applied.
    #[arg(long)]
    pub replicas: Option<u64>,
}

/// `profile = { type = "flat", N = 400 }` or `profile = { path = "S.csv" }`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(rename = "type", default)]
    pub kind: Option<ProfileKind>,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub params: Option<ProfileParams>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn gaussian() -> EntryDistribution {
    EntryDistribution::Gaussian
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub beta: Beta,
    #[serde(default = "gaussian")]
    pub offdiag: EntryDistribution,
    #[serde(default = "gaussian")]
    pub diag: EntryDistribution,
}

/// A builtin name such as `"gauss(0.3,0.7)"` or a list of monomial coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestFnSpec {
    Named(String),
    Coefficients(Vec<f64>),
}

impl TestFnSpec {
    pub fn build(&self) -> CliResult<TestFunction> {
        match self {
            TestFnSpec::Named(s) => TestFunction::parse(s).map_err(|e| CliError::Config(format!("testfn: {e}"))),
            TestFnSpec::Coefficients(c) if c.is_empty() || c.iter().any(|v| !v.is_finite()) => {
                Err(CliError::Config("testfn: coefficient list must be non-empty and finite".into()))
            }
            TestFnSpec::Coefficients(c) => Ok(TestFunction::Polynomial(c.clone())),
        }
    }
}

fn default_lambda() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replicas: u64,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub eigensolve: EigensolveMode,
    #[serde(default = "yes")]
    pub clt: bool,
    /// Bulk fraction for the rigidity statistic in `simulate`.
    #[serde(default)]
    pub rigidity: Option<f64>,
    #[serde(default)]
    pub keep_eigenvalues: bool,
}

fn default_rigidity_kappa() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxFieldSection {
    pub kappa: f64,
    pub grid: usize,
    #[serde(default = "default_rigidity_kappa")]
    pub rigidity_kappa: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    pub start_order: Option<usize>,
    pub integral_nodes: Option<usize>,
    pub mean_nodes: Option<usize>,
    pub with_integral: Option<bool>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Multiplies the predicted variance before comparing; values other than
    /// 1 only make sense for checking that the comparison has power.
    #[serde(default = "one")]
    pub variance_scale: f64,
    #[serde(default = "default_cf_slack")]
    pub cf_slack: f64,
}

fn default_cf_slack() -> f64 {
    CF_SLACK
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            variance_scale: 1.0,
            cf_slack: CF_SLACK,
        }
    }
}

/// Reductions applied by `--quick`; missing values fall back to `min(current, default)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuickSection {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub replicas: Option<u64>,
    pub grid: Option<usize>,
}

pub const QUICK_N: usize = 200;
pub const QUICK_REPLICAS: u64 = 200;
pub const QUICK_GRID: usize = 500;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub profile: ProfileSection,
    pub ensemble: EnsembleSection,
    pub testfn: TestFnSpec,
    pub run: RunSection,
    #[serde(default)]
    pub maxfield: Option<MaxFieldSection>,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub quick: QuickSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A validated config together with the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

impl ExperimentConfig {
    /// Parse TOML, or JSON when the extension is `.json`. Parse errors carry line and column.
    pub fn from_str_with_format(text: &str, json: bool) -> CliResult<Self> {
        let cfg: ExperimentConfig = if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<LoadedConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        let config = Self::from_str_with_format(&text, json)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), strip_prefix(e))))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base })
    }

    /// Schema checks that need no computation.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let p = &self.profile;
        match (&p.path, p.kind, p.n) {
            (Some(_), None, None) if p.params.is_none() && p.seed.is_none() => {}
            (Some(_), _, _) => return bad("profile: `path` excludes `type`, `N`, `params` and `seed`".into()),
            (None, Some(ProfileKind::Matrix), _) => {
                return bad("profile: type \"matrix\" is given as `path = \"file.csv\"`".into())
            }
            (None, Some(_), Some(n)) if n >= 2 => {}
            (None, Some(_), Some(n)) => return bad(format!("profile: N must be at least 2, got {n}")),
            (None, _, _) => return bad("profile: need either `path` or both `type` and `N`".into()),
        }
        self.ensemble.offdiag.check().map_err(|e| CliError::Config(format!("ensemble.offdiag: {e}")))?;
        self.ensemble.diag.check().map_err(|e| CliError::Config(format!("ensemble.diag: {e}")))?;
        self.testfn.build()?;
        if self.run.replicas < 2 {
            return bad(format!("run.replicas must be at least 2, got {}", self.run.replicas));
        }
        if self.run.lambda.iter().any(|l| !l.is_finite()) {
            return bad("run.lambda must be finite".into());
        }
        if let Some(k) = self.run.rigidity {
            if !(k > 0.0 && k < 0.5) {
                return bad(format!("run.rigidity must lie in (0, 1/2), got {k}"));
            }
        }
        if let Some(m) = &self.maxfield {
            if !(m.kappa > 0.0 && m.kappa < 1.0) {
                return bad(format!("maxfield.kappa must lie in (0, 1), got {}", m.kappa));
            }
            if m.grid < 100 {
                return bad(format!("maxfield.grid must be at least 100, got {}", m.grid));
            }
            if !(m.rigidity_kappa > 0.0 && m.rigidity_kappa < 0.5) {
                return bad(format!("maxfield.rigidity_kappa must lie in (0, 1/2), got {}", m.rigidity_kappa));
            }
        }
        if !(self.verify.variance_scale > 0.0 && self.verify.variance_scale.is_finite()) {
            return bad("verify.variance_scale must be positive".into());
        }
        if !(self.verify.cf_slack >= 0.0) {
            return bad("verify.cf_slack must be non-negative".into());
        }
        Ok(())
    }

    /// Apply `--quick`, then the `--seed` and `--replicas` overrides.
    pub fn apply_overrides(&mut self, common: &Common) {
        if common.quick {
            if self.profile.path.is_none() {
                if let Some(n) = self.profile.n.as_mut() {
                    *n = self.quick.n.unwrap_or((*n).min(QUICK_N));
                }
            }
            self.run.replicas = self.quick.replicas.unwrap_or(self.run.replicas.min(QUICK_REPLICAS));
            if let Some(m) = self.maxfield.as_mut() {
                m.grid = self.quick.grid.unwrap_or(m.grid.min(QUICK_GRID));
            }
        }
        if let Some(s) = common.seed {
            self.seed = s;
        }
        if let Some(r) = common.replicas {
            self.run.replicas = r;
        }
    }

    pub fn predict_options(&self) -> PredictOptions {
        let d = PredictOptions::default();
        PredictOptions {
            start_order: self.predict.start_order.unwrap_or(d.start_order),
            integral_nodes: self.predict.integral_nodes.unwrap_or(d.integral_nodes),
            mean_nodes: self.predict.mean_nodes.unwrap_or(d.mean_nodes),
            with_integral: self.predict.with_integral.unwrap_or(d.with_integral),
        }
    }
}

fn strip_prefix(e: CliError) -> String {
    match e {
        CliError::Config(m) | CliError::Numerical(m) => m,
    }
}

impl LoadedConfig {
    pub fn build_profile(&self) -> CliResult<VarianceProfile> {
        let p = &self.config.profile;
        if let Some(path) = &p.path {
            let full = if path.is_absolute() { path.clone() } else { self.base.join(path) };
            return VarianceProfile::load(&full)
                .map_err(|e| CliError::Config(format!("profile {}: {e}", full.display())));
        }
        let d = ProfileDescriptor {
            kind: p.kind.expect("validated"),
            n: p.n.expect("validated"),
            params: p.params.clone().unwrap_or_default(),
            seed: p.seed,
        };
        Ok(d.build()?)
    }

    pub fn build_spec(&self) -> CliResult<EnsembleSpec> {
        let e = &self.config.ensemble;
        Ok(EnsembleSpec::new(e.beta, Arc::new(self.build_profile()?), e.offdiag, e.diag)?)
    }

    pub fn run_config(&self, spec: EnsembleSpec) -> CliResult<RunConfig> {
        let c = &self.config;
        let mut rc = RunConfig::new(spec, c.testfn.build()?, c.run.replicas, c.seed);
        rc.lambda_grid = c.run.lambda.clone();
        rc.eigensolve = c.run.eigensolve;
        rc.keep_eigenvalues = c.run.keep_eigenvalues;
        rc.experiments.clt = c.run.clt;
        rc.experiments.rigidity = c.run.rigidity;
        rc.predict = c.predict_options();
        Ok(rc)
    }

    pub fn out_dir(&self, common: &Common) -> Option<PathBuf> {
        common.out.clone().or_else(|| {
            self.config
                .output
                .dir
                .as_ref()
                .map(|d| if d.is_absolute() { d.clone() } else { self.base.join(d) })
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn warn_lambda_window(lambdas: &[f64], n: usize) {
    let limit = (n as f64).powf(0.4);
    for l in lambdas.iter().filter(|l| l.abs() > limit) {
        eprintln!("warning: lambda = {l} lies outside |lambda| <= N^0.4 = {limit:.3}; the expansion may not apply");
    }
}

/// Progress on stderr at every tenth of the run.
fn progress_printer(total: u64) -> impl Fn(u64) + Sync {
    let done = AtomicU64::new(0);
    let step = (total / 10).max(1);
    move |_| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if k.is_multiple_of(step) || k == total {
            eprintln!("  {k}/{total} replicas");
        }
    }
}

/// Write to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(Path::new("stdout"), e)),
        _ => Ok(()),
    }
}

fn cmd_predict(cfg: &LoadedConfig, common: &Common) -> CliResult<i32> {
    let spec = cfg.build_spec()?;
    let pred = predict(&cfg.config.testfn.build()?, &spec, &cfg.config.predict_options())?;
    if pred.tail_warning {
        eprintln!("warning: Chebyshev tail estimate {:e} exceeds the tolerance", pred.tail_estimate);
    }
    if pred.paths_agree == Some(false) {
        eprintln!(
            "warning: series and integral variances disagree ({} vs {:?})",
            pred.v_series, pred.v_integral
        );
    }
    let text = serde_json::to_string_pretty(&pred).map_err(|e| CliError::Numerical(e.to_string()))?;
    emit(&format!("{text}\n"))?;
    if let Some(dir) = cfg.out_dir(common) {
        prepare_dir(&dir)?;
        write_json(&dir.join("prediction.json"), &pred)?;
    }
    Ok(EXIT_PASS)
}

fn cmd_simulate(cfg: &LoadedConfig, common: &Common) -> CliResult<i32> {
    let spec = cfg.build_spec()?;
    let rc = cfg.run_config(spec)?;
    warn_lambda_window(&rc.lambda_grid, rc.spec.n());
    eprintln!("simulate: N = {}, R = {}, seed = {}", rc.spec.n(), rc.replicas, rc.master_seed);
    let progress = progress_printer(rc.replicas);
    let result = run_ensemble(&rc, Some(&progress))?;
    match cfg.out_dir(common) {
        Some(dir) => {
            prepare_dir(&dir)?;
            let csv_path = dir.join("samples.csv");
            let f = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
            harness::write_samples_csv(&result, f)?;
            write_json(&dir.join("result.json"), &result)?;
            eprintln!("wrote {} and result.json", csv_path.display());
        }
        None => {
            let mut out = Vec::new();
            harness::write_samples_csv(&result, &mut out)?;
            emit(std::str::from_utf8(&out).expect("csv is utf-8"))?;
            let text = serde_json::to_string_pretty(&result.kstats).map_err(|e| CliError::Numerical(e.to_string()))?;
            eprintln!("{text}");
        }
    }
    Ok(EXIT_PASS)
}

fn cmd_verify(cfg: &LoadedConfig, common: &Common) -> CliResult<i32> {
    let spec = cfg.build_spec()?;
    let mut rc = cfg.run_config(spec)?;
    rc.experiments.clt = true;
    warn_lambda_window(&rc.lambda_grid, rc.spec.n());
    eprintln!("verify: N = {}, R = {}, seed = {}", rc.spec.n(), rc.replicas, rc.master_seed);
    let progress = progress_printer(rc.replicas);
    let mut result = run_ensemble(&rc, Some(&progress))?;
    let mut pred = result.prediction.clone().expect("clt requested");
    let scale = cfg.config.verify.variance_scale;
    if scale != 1.0 {
        eprintln!("note: predicted variance scaled by {scale}");
        pred.v *= scale;
    }
    let report = compare(&result, &pred, cfg.config.verify.cf_slack);
    emit(&format_report(&report, &pred))?;
    result.prediction = Some(pred);
    result.comparison = Some(report.clone());
    if let Some(dir) = cfg.out_dir(common) {
        prepare_dir(&dir)?;
        write_json(&dir.join("report.json"), &report)?;
        write_json(&dir.join("result.json"), &result)?;
    }
    Ok(if report.pass { EXIT_PASS } else { EXIT_VERIFY_FAIL })
}

fn format_report(report: &harness::ComparisonReport, pred: &wigner_clt::CltPrediction) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "V = {:?}  E = {:?}  B = {:?}", pred.v, pred.e, pred.b);
    let _ = writeln!(
        s,
        "R = {}  N = {}  cf threshold = {:?} (4/sqrt(R) + {}/N)  z threshold = {}",
        report.replicas, report.n, report.cf_threshold, report.cf_slack, report.z_threshold
    );
    for i in &report.items {
        let _ = writeln!(
            s,
            "{:<16} observed {:>14.6e}  predicted {:>14.6e}  statistic {:>10.4}  threshold {:>8.4}  {}",
            i.name,
            i.observed,
            i.predicted,
            i.statistic,
            i.threshold,
            if i.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(t) = &report.third_cumulant {
        let _ = writeln!(
            s,
            "third cumulant: z(k3 = -2B) = {:.3}, z(k3 = B) = {:.3}, closer convention {:?}, sign of k3 {}",
            t.z_exponent, t.z_direct, t.convention, t.sign
        );
    }
    let _ = writeln!(s, "overall: {}", if report.pass { "PASS" } else { "FAIL" });
    s
}

fn cmd_maxpoly(cfg: &LoadedConfig, common: &Common) -> CliResult<i32> {
    let m = cfg
        .config
        .maxfield
        .clone()
        .ok_or_else(|| CliError::Config("maxpoly needs a [maxfield] section".into()))?;
    let spec = cfg.build_spec()?;
    let r = cfg.config.run.replicas;
    eprintln!(
        "maxpoly: N = {}, R = {r}, kappa = {}, grid = {}, seed = {}",
        spec.n(),
        m.kappa,
        m.grid,
        cfg.config.seed
    );
    let res = max_field_experiment(&spec, m.kappa, m.grid, r, cfg.config.seed, m.rigidity_kappa)?;
    for c in &res.collisions {
        eprintln!(
            "grid collision: replica {} point {} moved from {:?} to {:?}",
            c.replica, c.grid_index, c.energy, c.shifted_to
        );
    }
    let mut out = Vec::new();
    harness::write_ratios_csv(&res.ratios, &mut out)?;
    match cfg.out_dir(common) {
        Some(dir) => {
            prepare_dir(&dir)?;
            let p = dir.join("ratios.csv");
            fs::write(&p, &out).map_err(|e| io_err(&p, e))?;
            write_json(&dir.join("maxfield.json"), &res)?;
        }
        None => emit(std::str::from_utf8(&out).expect("csv is utf-8"))?,
    }
    eprintln!(
        "medians over {} replicas: re {:?}  +im {:?}  -im {:?}  ({} grid collisions)",
        res.ratios.len(),
        res.median_re,
        res.median_im_plus,
        res.median_im_minus,
        res.collisions.len()
    );
    Ok(EXIT_PASS)
}

fn cmd_profile(cfg: &LoadedConfig, common: &Common) -> CliResult<i32> {
    let profile = cfg.build_profile()?;
    #[derive(Serialize)]
    struct Inspect<'a> {
        descriptor: &'a ProfileDescriptor,
        report: wigner_clt::profile::ProfileReport,
        trace: f64,
        bounds: (f64, f64),
    }
    let view = Inspect {
        descriptor: profile.descriptor(),
        report: profile.report(),
        trace: profile.trace(),
        bounds: profile.bounds(),
    };
    let text = serde_json::to_string_pretty(&view).map_err(|e| CliError::Numerical(e.to_string()))?;
    emit(&format!("{text}\n"))?;
    if let Some(dir) = cfg.out_dir(common) {
        prepare_dir(&dir)?;
        profile.write_csv(&dir.join("profile.csv"))?;
        profile.write_descriptor(&dir.join("profile.json"))?;
    }
    Ok(EXIT_PASS)
}

type Handler = fn(&LoadedConfig, &Common) -> CliResult<i32>;

fn dispatch(cmd: &Command) -> CliResult<i32> {
    let (common, f): (&Common, Handler) = match cmd {
        Command::Predict(c) => (c, cmd_predict),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Verify(c) => (c, cmd_verify),
        Command::Maxpoly(c) => (c, cmd_maxpoly),
        Command::Profile(c) => (c, cmd_profile),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.config.apply_overrides(common);
    cfg.config.validate()?;
    match common.threads {
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            pool.install(|| f(&cfg, common))
        }
        None => f(&cfg, common),
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
