use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use poolscreen_core::adaptive::{sweep_tests_per_person, EvalMethod};
use poolscreen_core::hypothesis::{classify, evaluate, roc_sweep, threshold_v, tree_depth};
use poolscreen_core::nonadaptive::{outcomes_from_bits, outcomes_to_bits};
use poolscreen_core::report::{write_classify_table, write_identify_table, write_worstcase_table};
use poolscreen_core::worstcase::worstcase_sweep;
use poolscreen_core::{
    run_strategy, ClassifierConfig, ClassifierReport, EvalMode, HypothesisPair, InfectionVector, NoiseModel,
    TestingMatrix,
};
use poolscreen_session::ServiceConfig;
use serde::Serialize;

use crate::args::{
    Classifier, ClassifyEval, IdentifyEval, MatrixCommand, Mode, Output, Roc, Sampling, Serve, StartLevel, Trace,
    Worstcase,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<poolscreen_core::Error> for CliError {
    fn from(e: poolscreen_core::Error) -> Self {
        if e.is_input() {
            CliError::Input(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Everything needed to regenerate a table. No timestamps: identical
/// manifests describe identical outputs.
#[derive(Serialize)]
struct RunManifest<'a, P: Serialize> {
    subcommand: &'a str,
    parameters: &'a P,
    seed: Option<u64>,
    engine_version: &'static str,
    output: Option<&'a Path>,
}

/// Writes a rendered table to `--out` (or stdout) and its manifest to the
/// sidecar file (or stderr).
fn emit<P: Serialize>(
    subcommand: &str,
    parameters: &P,
    seed: Option<u64>,
    output: &Output,
    table: Vec<u8>,
) -> Result<()> {
    let manifest = RunManifest {
        subcommand,
        parameters,
        seed,
        engine_version: poolscreen_core::VERSION,
        output: output.out.as_deref(),
    };
    let mut manifest = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    manifest.push('\n');
    match &output.out {
        Some(path) => {
            write_file(path, &table)?;
            write_file(&sidecar(path), manifest.as_bytes())
        }
        None => {
            write_stdout(&table)?;
            io::stderr()
                .write_all(manifest.as_bytes())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut stdout = io::stdout().lock();
    stdout
        .write_all(bytes)
        .and_then(|()| stdout.flush())
        .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
}

fn eval_mode(sampling: &Sampling) -> EvalMode {
    let (trials, seed) = (sampling.trials, sampling.seed);
    match sampling.mode {
        Mode::Auto => EvalMode::Auto { trials, seed },
        Mode::Exact => EvalMode::Exact,
        Mode::Mc => EvalMode::MonteCarlo { trials, seed },
    }
}

pub fn identify_eval(args: &IdentifyEval) -> Result<()> {
    let noise = NoiseModel::new(args.sensitivity)?;
    let rows = sweep_tests_per_person(args.strategy, &args.n, &args.p, noise, eval_mode(&args.sampling))?;
    let mut table = Vec::new();
    write_identify_table(&mut table, &rows)?;
    let seed = rows.iter().find_map(|r| match r.report.method {
        EvalMethod::MonteCarlo { seed, .. } => Some(seed),
        EvalMethod::ExactEnumeration => None,
    });
    emit("identify-eval", args, seed, &args.output, table)
}

pub fn worstcase(args: &Worstcase) -> Result<()> {
    let rows = worstcase_sweep(args.strategy, args.n, &args.p)?;
    let mut table = Vec::new();
    write_worstcase_table(&mut table, &rows)?;
    emit("worstcase", args, None, &args.output, table)
}

fn pair(c: &Classifier) -> Result<HypothesisPair> {
    Ok(HypothesisPair::with_priors(c.p0, c.p1, c.pi0)?)
}

fn start_level(tau: StartLevel, subpools: usize) -> usize {
    match tau {
        StartLevel::Level(l) => l,
        StartLevel::Pairs => tree_depth(subpools).saturating_sub(1),
    }
}

fn config(c: &Classifier, pair: &HypothesisPair, pool_size: usize) -> Result<ClassifierConfig> {
    let threshold = match c.threshold {
        Some(v) => v,
        None => threshold_v(pair, pool_size, c.subpools)?,
    };
    let config = ClassifierConfig {
        pool_size,
        subpools: c.subpools,
        threshold,
        start_level: start_level(c.tau, c.subpools),
        sensitivity: c.rho,
        noise: c.noise,
    };
    config.validate()?;
    Ok(config)
}

fn classify_table(reports: &[ClassifierReport]) -> Result<Vec<u8>> {
    let mut table = Vec::new();
    write_classify_table(&mut table, reports)?;
    Ok(table)
}

pub fn classify_eval(args: &ClassifyEval) -> Result<()> {
    let pair = pair(&args.classifier)?;
    let config = config(&args.classifier, &pair, args.pool_size)?;
    let report = evaluate(&config, &pair, eval_mode(&args.sampling))?;
    let seed = report.method.seed();
    emit("classify-eval", args, seed, &args.output, classify_table(&[report])?)
}

pub fn roc(args: &Roc) -> Result<()> {
    let pair = pair(&args.classifier)?;
    let mode = eval_mode(&args.sampling);
    let reports: Vec<ClassifierReport> = if args.classifier.threshold.is_some() {
        let base = config(&args.classifier, &pair, args.pool_sizes[0])?;
        for &n in &args.pool_sizes {
            ClassifierConfig { pool_size: n, ..base }.validate()?;
        }
        roc_sweep(&pair, &base, &args.pool_sizes, mode)?
            .into_iter()
            .map(|r| r.report)
            .collect()
    } else {
        // The MAP threshold moves with N.
        args.pool_sizes
            .iter()
            .map(|&n| Ok(evaluate(&config(&args.classifier, &pair, n)?, &pair, mode)?))
            .collect::<Result<_>>()?
    };
    let seed = reports.iter().find_map(|r| r.method.seed());
    emit("roc", args, seed, &args.output, classify_table(&reports)?)
}

fn read_matrix(path: &Path) -> Result<TestingMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.parse()?)
}

pub fn matrix(command: &MatrixCommand) -> Result<()> {
    let line = match command {
        MatrixCommand::Encode { matrix, x } => {
            let x: InfectionVector = x.parse()?;
            outcomes_to_bits(&read_matrix(matrix)?.encode(&x)?)
        }
        MatrixCommand::Decode { matrix, outcomes, k } => {
            let found = read_matrix(matrix)?.decode(&outcomes_from_bits(outcomes)?, *k)?;
            let members: Vec<String> = found.iter().map(|i| (i + 1).to_string()).collect();
            format!("{{{}}}", members.join(","))
        }
        MatrixCommand::Separable { matrix, k, up_to } => read_matrix(matrix)?.is_separable(*k, *up_to)?.to_string(),
    };
    write_stdout(format!("{line}\n").as_bytes())
}

pub fn trace(args: &Trace) -> Result<()> {
    let x: InfectionVector = args.x.parse()?;
    let trace = match (args.strategy, args.pool_size, args.subpools, args.threshold) {
        (Some(kind), ..) => {
            let spec = kind.build(x.len(), args.p)?;
            run_strategy(&spec, &x, NoiseModel::new(args.rho)?, args.seed)?
        }
        (None, Some(pool_size), Some(subpools), Some(threshold)) => {
            let config = ClassifierConfig {
                pool_size,
                subpools,
                threshold,
                start_level: start_level(args.tau, subpools),
                sensitivity: args.rho,
                noise: args.noise,
            };
            classify(&x, &config, args.seed)?
        }
        _ => return Err(CliError::Input("trace needs --strategy, or --N, --L and --V".into())),
    };
    let mut json = serde_json::to_string_pretty(&trace).map_err(|e| CliError::Internal(e.to_string()))?;
    json.push('\n');
    write_stdout(json.as_bytes())
}

pub fn serve(args: &Serve) -> Result<()> {
    let filter = tracing_subscriber::EnvFilter::try_new(&args.log_level)
        .map_err(|e| CliError::Input(format!("bad log filter {:?}: {e}", args.log_level)))?;
    tracing_subscriber::fmt().with_env_filter(filter).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    let config = ServiceConfig {
        listen: args.listen,
        data_dir: args.data_dir.clone(),
    };
    runtime
        .block_on(poolscreen_session::serve(config))
        .map_err(|e| CliError::Internal(format!("server failed: {e}")))
}
