//! Subcommand arguments and pipelines.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use pauliest::batch_io::write_batch;
use pauliest::{
    amatrix, build_estimator, estimate_p0, eta_exact, eta_report, plan_budget, plan_samples,
    read_batch, recover_with, simulate_batch, ChannelSpec, Error, ErrorRateDistribution,
    EstimatorKind, KindPolicy, PauliString, Precision, ProbeBatch, RecoverOptions, Result,
    SpamParams,
};
use serde_json::json;

use crate::config::{
    require, EstimatorChoice, ExperimentConfig, PiSource, SampleCount, SpamConfig,
};
use crate::manifest::RunDir;

pub const DEFAULT_FAIL_PROB: f64 = 0.05;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file (or a previous run's manifest.json); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to runs/<subcommand>-<timestamp>.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Allow writing into a non-empty --out directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "PAULIEST_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpamArgs {
    #[arg(long = "rprep")]
    pub r_prep: Option<f64>,
    #[arg(long = "rmeas")]
    pub r_meas: Option<f64>,
}

impl SpamArgs {
    fn apply(&self, slot: &mut Option<SpamConfig>, what: &str) -> Result<()> {
        match (self.r_prep, self.r_meas) {
            (None, None) => Ok(()),
            (Some(r_prep), Some(r_meas)) => {
                *slot = Some(SpamConfig { r_prep, r_meas });
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "{what} needs both r_prep and r_meas"
            ))),
        }
    }
}

/// Where probe records come from: a saved batch, or a fresh simulation.
#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Saved batch (.jsonl or .csv).
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// Ground-truth distribution file; used to simulate, and to score results.
    #[arg(long)]
    pub pi: Option<PathBuf>,
    #[command(flatten)]
    pub spam: SpamArgs,
    /// Probe count, or "auto".
    #[arg(long)]
    pub m: Option<SampleCount>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SourceArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        cfg.batch = self.batch.clone().or(cfg.batch.take());
        if let Some(p) = &self.pi {
            cfg.pi = Some(PiSource::File(p.clone()));
        }
        self.spam.apply(&mut cfg.spam, "spam")?;
        cfg.m = self.m.or(cfg.m);
        cfg.seed = self.seed.or(cfg.seed);
        Ok(())
    }
}

/// Probe records plus whatever ground truth is known.
struct Source {
    batch: ProbeBatch,
    truth: Option<ErrorRateDistribution>,
}

fn load_truth(cfg: &ExperimentConfig) -> Result<Option<ErrorRateDistribution>> {
    cfg.pi.as_ref().map(PiSource::load).transpose()
}

/// Loads the batch, or simulates one with `m` resolved by `plan` when "auto".
fn obtain_source(
    cfg: &mut ExperimentConfig,
    plan: impl FnOnce(&ErrorRateDistribution, &SpamParams, &ExperimentConfig) -> Result<u64>,
) -> Result<Source> {
    let truth = load_truth(cfg)?;
    if let Some(path) = &cfg.batch {
        let batch = read_batch(path)?;
        if let Some(pi) = &truth {
            if pi.n() != batch.n {
                return Err(Error::LengthMismatch {
                    expected: batch.n,
                    got: pi.n(),
                });
            }
        }
        return Ok(Source { batch, truth });
    }
    let pi = truth.ok_or_else(|| {
        Error::InvalidParameter("give either a batch or a ground-truth pi to simulate".into())
    })?;
    let spam = require(cfg.spam_params()?, "spam")?;
    let m = match cfg.m.unwrap_or(SampleCount::Auto) {
        SampleCount::Fixed(m) => m,
        SampleCount::Auto => plan(&pi, &spam, cfg)?,
    };
    let seed = cfg.seed.unwrap_or(0);
    cfg.m = Some(SampleCount::Fixed(m));
    cfg.seed = Some(seed);
    let m = usize::try_from(m).map_err(|_| Error::TooLarge {
        what: "probe count",
        value: usize::MAX,
        limit: usize::MAX,
    })?;
    let batch = simulate_batch(&pi, &spam, m, seed)?;
    Ok(Source {
        batch,
        truth: Some(pi),
    })
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn to_json_line<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// What a subcommand produced, for the manifest and stdout.
pub struct Outcome {
    pub config: ExperimentConfig,
    pub timing: serde_json::Value,
    pub stdout: String,
}

// ---------------------------------------------------------------- amatrix

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelKind {
    Bec,
    Bsc,
    Z,
    Zflip,
}

#[derive(Debug, Clone, Args)]
pub struct AmatrixArgs {
    #[arg(long, value_enum)]
    pub kind: Option<ChannelKind>,
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Decimal places in the printed matrix; the CSV keeps full precision.
    #[arg(long, default_value_t = 4)]
    pub digits: u32,
}

impl AmatrixArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        cfg.n = self.n.or(cfg.n);
        cfg.nu1 = self.nu1.or(cfg.nu1);
        cfg.nu2 = self.nu2.or(cfg.nu2);
        let spec = match self.kind {
            None => return Ok(()),
            Some(ChannelKind::Bec) => ChannelSpec::Bec {
                lambda: require(self.lambda, "lambda")?,
            },
            Some(ChannelKind::Z) => ChannelSpec::Z {
                lambda: require(self.lambda, "lambda")?,
            },
            Some(ChannelKind::Bsc) => ChannelSpec::Bsc {
                b: require(self.b, "b")?,
            },
            Some(ChannelKind::Zflip) => ChannelSpec::Zflip {
                nu1: require(cfg.nu1, "nu1")?,
                nu2: require(cfg.nu2, "nu2")?,
            },
        };
        cfg.channel = Some(spec);
        Ok(())
    }
}

/// Rows rounded to `digits` places, printed compactly.
pub fn format_rows(rows: &[Vec<f64>], digits: u32) -> String {
    let scale = 10f64.powi(digits as i32);
    let row = |r: &Vec<f64>| {
        let cells: Vec<String> = r
            .iter()
            .map(|v| {
                let x = (v * scale).round() / scale;
                format!("{}", if x == 0.0 { 0.0 } else { x })
            })
            .collect();
        format!("[{}]", cells.join(","))
    };
    let rows: Vec<String> = rows.iter().map(row).collect();
    format!("[{}]", rows.join(","))
}

pub fn run_amatrix(
    args: &AmatrixArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    args.apply(&mut cfg)?;
    let spec = match cfg.channel {
        Some(spec) => spec,
        None => ChannelSpec::Zflip {
            nu1: require(cfg.nu1, "nu1")?,
            nu2: require(cfg.nu2, "nu2")?,
        },
    };
    spec.validate()?;
    cfg.channel = Some(spec);
    let n = require(cfg.n, "n")?;
    let t = Instant::now();
    let a = amatrix(&spec, n)?;
    let ms = elapsed_ms(t);
    let dir = open_run("amatrix", &cfg, run, common)?;
    dir.write("amatrix.csv", a.to_csv().as_bytes())?;
    dir.write(
        "amatrix.json",
        &to_json_line(&json!({ "channel": spec, "n": n, "rows": a.to_rows() }))?,
    )?;
    Ok(Outcome {
        config: cfg,
        timing: json!({ "amatrix_ms": ms }),
        stdout: format_rows(&a.to_rows(), args.digits),
    })
}

fn open_run<'a>(
    subcommand: &str,
    cfg: &ExperimentConfig,
    run: &'a mut Option<RunDir>,
    common: &Common,
) -> Result<&'a mut RunDir> {
    let out = common.out.clone().or(cfg.out_dir.clone());
    Ok(run.insert(RunDir::create(subcommand, out.as_deref(), common.force)?))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Accuracy used to plan m when it is "auto".
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub fail_prob: Option<f64>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: FormatArg,
}

fn plan_recovery_budget(
    pi: &ErrorRateDistribution,
    spam: &SpamParams,
    cfg: &ExperimentConfig,
) -> Result<u64> {
    plan_budget(
        pi.n(),
        require(cfg.epsilon, "epsilon")?,
        cfg.fail_prob.unwrap_or(DEFAULT_FAIL_PROB),
        spam,
        cfg.policy.unwrap_or_default(),
    )
}

pub fn run_simulate(
    args: &SimulateArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    args.source.apply(&mut cfg)?;
    cfg.epsilon = args.epsilon.or(cfg.epsilon);
    cfg.fail_prob = args.fail_prob.or(cfg.fail_prob);
    if cfg.batch.is_some() {
        return Err(Error::InvalidParameter(
            "simulate takes pi and spam, not a batch".into(),
        ));
    }
    let t = Instant::now();
    let src = obtain_source(&mut cfg, plan_recovery_budget)?;
    let ms = elapsed_ms(t);
    let name = match args.format {
        FormatArg::Jsonl => "batch.jsonl",
        FormatArg::Csv => "batch.csv",
    };
    let dir = open_run("simulate", &cfg, run, common)?;
    write_batch(&src.batch, &dir.file(name))?;
    dir.track(name)?;
    Ok(Outcome {
        stdout: format!("{}", dir.file(name).display()),
        config: cfg,
        timing: json!({ "simulate_ms": ms }),
    })
}

// ---------------------------------------------------------------- individual

#[derive(Debug, Clone, Args)]
pub struct IndividualArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Target string B; defaults to the identity.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub fail_prob: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<EstimatorArg>,
    /// Bias allowed to the LP estimator; defaults to epsilon/8.
    #[arg(long)]
    pub eps_bias: Option<f64>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    #[command(flatten)]
    pub assumed: AssumedSpamArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AssumedSpamArgs {
    /// SPAM preparation retention assumed by the estimator.
    #[arg(long = "assumed-rprep")]
    pub assumed_r_prep: Option<f64>,
    #[arg(long = "assumed-rmeas")]
    pub assumed_r_meas: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
    Auto,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
            PrecisionArg::Auto => Precision::Auto,
        }
    }
}

impl From<EstimatorArg> for EstimatorChoice {
    fn from(k: EstimatorArg) -> Self {
        match k {
            EstimatorArg::Exact => EstimatorChoice::Exact,
            EstimatorArg::Lp => EstimatorChoice::Lp,
        }
    }
}

fn apply_assumed(a: &AssumedSpamArgs, cfg: &mut ExperimentConfig) -> Result<()> {
    SpamArgs {
        r_prep: a.assumed_r_prep,
        r_meas: a.assumed_r_meas,
    }
    .apply(&mut cfg.assumed_spam, "assumed spam")
}

fn estimator_kind(cfg: &ExperimentConfig) -> Result<EstimatorKind> {
    Ok(match cfg.kind.unwrap_or(EstimatorChoice::Exact) {
        EstimatorChoice::Exact => EstimatorKind::ExactInverse,
        EstimatorChoice::Lp => EstimatorKind::LpRegularized {
            eps_bias: match cfg.eps_bias {
                Some(b) => b,
                None => require(cfg.epsilon, "epsilon or eps_bias")? / 8.0,
            },
        },
    })
}

pub fn run_individual(
    args: &IndividualArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    args.source.apply(&mut cfg)?;
    apply_assumed(&args.assumed, &mut cfg)?;
    cfg.target = args.target.clone().or(cfg.target.take());
    cfg.epsilon = args.epsilon.or(cfg.epsilon);
    cfg.fail_prob = args.fail_prob.or(cfg.fail_prob);
    cfg.kind = args.kind.map(Into::into).or(cfg.kind);
    cfg.eps_bias = args.eps_bias.or(cfg.eps_bias);
    cfg.precision = args.precision.map(Into::into).or(cfg.precision);
    let fail_prob = cfg.fail_prob.unwrap_or(DEFAULT_FAIL_PROB);
    let kind = estimator_kind(&cfg)?;
    let precision = cfg.precision.unwrap_or(Precision::Auto);
    let assumed = cfg.assumed_spam_params()?;
    let start = Instant::now();

    // Only known once the batch (and its SPAM) is known.
    let estimator_for = |spam: &SpamParams, n: usize| {
        let spam = assumed.unwrap_or(*spam);
        spam.check_recoverable()?;
        build_estimator(
            &ChannelSpec::probe_channel(spam.retention()),
            n,
            kind,
            precision,
        )
    };
    let src = obtain_source(&mut cfg, |pi, spam, cfg| {
        let est = estimator_for(spam, pi.n())?;
        plan_samples(&est, require(cfg.epsilon, "epsilon")?, fail_prob)
    })?;
    let n = src.batch.n;
    let target: PauliString = match &cfg.target {
        Some(s) => s.parse()?,
        None => PauliString::identity(n),
    };
    if target.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: target.len(),
        });
    }
    let t = Instant::now();
    let est = estimator_for(&src.batch.spam, n)?;
    let estimator_ms = elapsed_ms(t);
    let hist = src.batch.altered_histogram(&target)?;
    let e = estimate_p0(&hist, &est, fail_prob)?;
    let mut result = json!({
        "B": target.to_string(),
        "estimate": e.value,
        "raw": e.raw,
        "half_width": e.half_width,
        "m": e.m_used,
        "fail_prob": fail_prob,
        "kind": est.kind,
        "sup_norm": est.sup_norm,
        "precision": est.precision,
    });
    if let Some(pi) = &src.truth {
        let truth = pi.prob(&target);
        result["truth"] = json!(truth);
        result["abs_error"] = json!((e.value - truth).abs());
    }
    let total = elapsed_ms(start);
    let dir = open_run("individual", &cfg, run, common)?;
    dir.write("individual.json", &to_json_line(&result)?)?;
    Ok(Outcome {
        stdout: serde_json::to_string(&result)?,
        config: cfg,
        timing: json!({ "estimator_ms": estimator_ms, "total_ms": total }),
    })
}

// ---------------------------------------------------------------- recover

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Auto,
    Exact,
    ExactExtended,
    Lp,
}

impl From<PolicyArg> for KindPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Auto => KindPolicy::Auto,
            PolicyArg::Exact => KindPolicy::Exact,
            PolicyArg::ExactExtended => KindPolicy::ExactExtended,
            PolicyArg::Lp => KindPolicy::Lp,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub fail_prob: Option<f64>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[command(flatten)]
    pub assumed: AssumedSpamArgs,
}

pub fn run_recover(
    args: &RecoverArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    args.source.apply(&mut cfg)?;
    apply_assumed(&args.assumed, &mut cfg)?;
    cfg.epsilon = args.epsilon.or(cfg.epsilon);
    cfg.fail_prob = args.fail_prob.or(cfg.fail_prob);
    cfg.policy = args.policy.map(Into::into).or(cfg.policy);
    let eps = require(cfg.epsilon, "epsilon")?;
    let fail_prob = cfg.fail_prob.unwrap_or(DEFAULT_FAIL_PROB);
    let options = RecoverOptions {
        policy: cfg.policy.unwrap_or_default(),
        assumed_spam: cfg.assumed_spam_params()?,
    };
    let start = Instant::now();
    let src = obtain_source(&mut cfg, |pi, spam, _| {
        plan_budget(
            pi.n(),
            eps,
            fail_prob,
            &options.assumed_spam.unwrap_or(*spam),
            options.policy,
        )
    })?;
    let simulated_ms = elapsed_ms(start);
    let report = recover_with(&src.batch, &src.batch.spam, eps, fail_prob, &options)?;
    let mut summary = json!({
        "n": report.n,
        "epsilon": eps,
        "fail_prob": fail_prob,
        "m": report.m,
        "candidates": report.estimates.len(),
    });
    if let Some(pi) = &src.truth {
        let err = report.linf_error(pi);
        summary["linf_error"] = json!(err);
        summary["within_epsilon"] = json!(err <= eps);
    }
    let dir = open_run("recover", &cfg, run, common)?;
    dir.write("report.json", &to_json_line(&report)?)?;
    dir.write("report.csv", report.to_csv().as_bytes())?;
    dir.write("summary.json", &to_json_line(&summary)?)?;
    Ok(Outcome {
        stdout: serde_json::to_string(&summary)?,
        config: cfg,
        timing: json!({
            "source_ms": simulated_ms,
            "estimator_ms": report.timing.estimator_ms,
            "level_ms": report.timing.level_ms,
            "recover_ms": report.timing.total_ms,
        }),
    })
}

// ---------------------------------------------------------------- eta

#[derive(Debug, Clone, Args)]
pub struct EtaArgs {
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Grid points on the circle.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub c_theta: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Sweep over n, e.g. 4,8,12.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Sweep over epsilon, e.g. 0.05,0.1.
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
}

pub fn run_eta(
    args: &EtaArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    cfg.nu1 = args.nu1.or(cfg.nu1);
    cfg.nu2 = args.nu2.or(cfg.nu2);
    cfg.n = args.n.or(cfg.n);
    cfg.epsilon = args.epsilon.or(cfg.epsilon);
    cfg.grid = args.grid.or(cfg.grid);
    cfg.n_grid = args.n_grid.clone().or(cfg.n_grid.take());
    cfg.eps_grid = args.eps_grid.clone().or(cfg.eps_grid.take());
    let mut constants = cfg.constants.unwrap_or_default();
    constants.c_theta = args.c_theta.unwrap_or(constants.c_theta);
    constants.c1 = args.c1.unwrap_or(constants.c1);
    constants.c2 = args.c2.unwrap_or(constants.c2);
    cfg.constants = Some(constants);
    let nu1 = cfg.nu1.unwrap_or(2.0 / 3.0);
    let nu2 = require(cfg.nu2, "nu2")?;
    let grid = cfg.grid.unwrap_or(pauliest::eta::DEFAULT_GRID);
    let ns = match &cfg.n_grid {
        Some(g) => g.clone(),
        None => vec![require(cfg.n, "n or n_grid")?],
    };
    let epss = match &cfg.eps_grid {
        Some(g) => g.clone(),
        None => vec![require(cfg.epsilon, "epsilon or eps_grid")?],
    };
    // Cheap checks first, then the LPs.
    for &n in &ns {
        for &eps in &epss {
            pauliest::formula_bound(eps, nu1, nu2, n, &constants)?;
        }
    }
    let t = Instant::now();
    let mut results = Vec::new();
    for &n in &ns {
        for &eps in &epss {
            results.push(eta_report(nu1, nu2, n, eps, &constants, grid)?);
        }
    }
    let ms = elapsed_ms(t);
    let mut csv = String::from("n,epsilon,nu1,nu2,eta_exact,circle_value,formula_bound,regime\n");
    for r in &results {
        let regime = serde_json::to_value(r.regime)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.epsilon,
            r.nu1,
            r.nu2,
            r.eta_exact,
            r.circle_value,
            r.formula_bound,
            regime.as_str().unwrap_or_default()
        ));
    }
    let doc = if results.len() == 1 {
        serde_json::to_value(&results[0])?
    } else {
        serde_json::to_value(&results)?
    };
    let dir = open_run("eta", &cfg, run, common)?;
    dir.write("eta.json", &to_json_line(&doc)?)?;
    dir.write("eta.csv", csv.as_bytes())?;
    let stdout = if results.len() == 1 {
        serde_json::to_string(&json!({
            "eta_exact": results[0].eta_exact,
            "circle_value": results[0].circle_value,
            "formula_bound": results[0].formula_bound,
            "regime": results[0].regime,
        }))?
    } else {
        csv.trim_end().to_string()
    };
    Ok(Outcome {
        stdout,
        config: cfg,
        timing: json!({ "eta_ms": ms }),
    })
}

// ---------------------------------------------------------------- bench

pub const BENCH_HEADER: &str = "n,delta,eps,m_planned,sup_norm,wall_ms,eta_exact";

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Qubit counts, e.g. 8,16,27.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// SPAM rates δ = 1 − r.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub fail_prob: Option<f64>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
}

pub fn run_bench(
    args: &BenchArgs,
    mut cfg: ExperimentConfig,
    run: &mut Option<RunDir>,
    common: &Common,
) -> Result<Outcome> {
    cfg.n_grid = args
        .n_grid
        .clone()
        .or(cfg.n_grid.take())
        .or(Some(vec![8, 16, 27]));
    cfg.delta_grid = args
        .delta_grid
        .clone()
        .or(cfg.delta_grid.take())
        .or(Some(vec![0.0, 0.3]));
    cfg.eps_grid = args
        .eps_grid
        .clone()
        .or(cfg.eps_grid.take())
        .or(Some(vec![0.1]));
    cfg.fail_prob = args.fail_prob.or(cfg.fail_prob).or(Some(DEFAULT_FAIL_PROB));
    cfg.policy = args
        .policy
        .map(Into::into)
        .or(cfg.policy)
        .or(Some(KindPolicy::Auto));
    let (ns, deltas, epss) = (
        cfg.n_grid.clone().unwrap_or_default(),
        cfg.delta_grid.clone().unwrap_or_default(),
        cfg.eps_grid.clone().unwrap_or_default(),
    );
    let fail_prob = cfg.fail_prob.unwrap_or(DEFAULT_FAIL_PROB);
    let policy = cfg.policy.unwrap_or_default();
    let mut spams = Vec::new();
    for &delta in &deltas {
        spams.push(SpamParams::new(1.0 - delta, 1.0)?);
    }
    for &n in &ns {
        if n == 0 || n > 64 {
            return Err(Error::InvalidParameter(format!(
                "bench n = {n} outside 1..=64"
            )));
        }
    }
    for &eps in &epss {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "bench eps = {eps} outside (0, 1/2]"
            )));
        }
    }
    let start = Instant::now();
    let mut csv = format!("{BENCH_HEADER}\n");
    for &n in &ns {
        for (&delta, spam) in deltas.iter().zip(&spams) {
            for &eps in &epss {
                let t = Instant::now();
                let m = plan_budget(n, eps, fail_prob, spam, policy)?;
                let (kind, precision) = policy.choose(n, eps);
                let channel = ChannelSpec::probe_channel(spam.retention());
                let est = build_estimator(&channel, n, kind, precision)?;
                let wall = elapsed_ms(t);
                let eta = if n <= pauliest::eta::ETA_MAX_N {
                    eta_exact(&channel, n, eps)?.value.to_string()
                } else {
                    String::new()
                };
                csv.push_str(&format!(
                    "{n},{delta},{eps},{m},{},{wall:.3},{eta}\n",
                    est.sup_norm
                ));
            }
        }
    }
    let total = elapsed_ms(start);
    let dir = open_run("bench", &cfg, run, common)?;
    dir.write("bench.csv", csv.as_bytes())?;
    Ok(Outcome {
        stdout: csv.trim_end().to_string(),
        config: cfg,
        timing: json!({ "bench_ms": total }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_rows() {
        let rows = vec![vec![0.949_999_999, 0.050_000_01], vec![1.0, -1e-9]];
        assert_eq!(format_rows(&rows, 4), "[[0.95,0.05],[1,0]]");
    }

    #[test]
    fn lp_bias_defaults_to_eighth_of_eps() {
        let cfg = ExperimentConfig {
            kind: Some(EstimatorChoice::Lp),
            epsilon: Some(0.08),
            ..Default::default()
        };
        assert_eq!(
            estimator_kind(&cfg).unwrap(),
            EstimatorKind::LpRegularized { eps_bias: 0.01 }
        );
    }
}
