//! Command-line front end for private release and estimation in the p0
//! model.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use p0dp::denoise::denoise_l1;
use p0dp::estimation::{solve_p0, FitResult, SolverOptions, VarianceReport};
use p0dp::experiments::{
    run_realdata, run_simulation, EpsilonSpec, FilterMode, LSchedule, LSpec, RealDataOptions, SimConfig, DATASET_ENV,
};
use p0dp::graph::load_edge_list;
use p0dp::io::{read_degree_csv, to_integers, write_degree_csv, write_edge_list};
use p0dp::model::{linear_parameters, sample_graph};
use p0dp::privacy::{edge_flip, laplace_release, pairwise_edge_flip, PairwiseFlipSpec, PrivacyBudget};
use p0dp::seed::{stream_rng, tag};
use p0dp::IntegerBiSequence;
use serde_json::json;

/// Environment variable overriding the worker count.
const THREADS_ENV: &str = "P0DP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "p0dp", version, about = "Edge-private release and p0-model estimation for directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a p0 graph with the linear parameter design and write its edge list.
    Sample {
        #[arg(long)]
        n: usize,
        /// Spread: a number or one of zero, loglog_n, sqrt_log_n, log_n.
        #[arg(long = "L", visible_alias = "l", default_value = "0")]
        l: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Release an edge-flipped copy of a graph.
    Flip {
        #[arg(long = "in")]
        input: PathBuf,
        /// A positive number, or logn_q / logn_h.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Flip dyads jointly with probabilities g1,g2,g3 instead.
        #[arg(long, value_name = "G1,G2,G3")]
        pairwise: Option<String>,
    },
    /// Release a discrete-Laplace-noised bi-degree sequence of a graph.
    Laplace {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a noisy degree CSV onto the graphical sequences.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        /// Expected node count, checked against the input.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cost and exactness flag as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit the p0 model to an edge list or degree CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: FitMode,
        /// Required for `ldp`: the budget the input was flipped with.
        #[arg(long)]
        epsilon: Option<String>,
        /// Output JSON path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Size of the reported covariance block.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, default_value_t = 5000)]
        max_iterations: usize,
    },
    /// Run the simulation campaigns described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Run the real-network pipeline on an edge list.
    Analyze {
        /// Edge list; defaults to the path in the dataset environment variable.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Filter::Single)]
        filter: Filter,
        #[arg(long)]
        outdir: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FitMode {
    Mle,
    Laplace,
    Ldp,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Filter {
    Single,
    Iterated,
}

enum CliError {
    Usage(String),
    Data(p0dp::Error),
    Numerical(String),
}

impl From<p0dp::Error> for CliError {
    fn from(e: p0dp::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return ExitCode::from(e.code());
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {k} workers: {e}")))?;
    }
    Ok(())
}

fn parse_epsilon(s: &str, n: usize) -> CliResult<PrivacyBudget> {
    let spec: EpsilonSpec = s.parse().map_err(|e: p0dp::Error| CliError::Usage(e.to_string()))?;
    PrivacyBudget::new(spec.value(n)).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_l(s: &str) -> CliResult<LSpec> {
    Ok(match s.trim() {
        "zero" => LSpec::Schedule(LSchedule::Zero),
        "loglog_n" => LSpec::Schedule(LSchedule::LoglogN),
        "sqrt_log_n" => LSpec::Schedule(LSchedule::SqrtLogN),
        "log_n" => LSpec::Schedule(LSchedule::LogN),
        other => LSpec::Fixed(
            other
                .parse()
                .map_err(|_| CliError::Usage(format!("L must be a number or a schedule name, got {other:?}")))?,
        ),
    })
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into()))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Whether the text is a degree CSV rather than an edge list.
fn is_degree_csv(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.replace(' ', "") == "index,kind,value")
}

fn degree_target(text: &str) -> CliResult<Vec<f64>> {
    if is_degree_csv(text) {
        Ok(read_degree_csv(text)?)
    } else {
        Ok(load_edge_list(text)?.graph.bi_degree_sequence().to_f64_vec())
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Sample { n, l, seed, out } => {
            let l = parse_l(&l)?;
            let theta = linear_parameters(n, l.value(n)).map_err(|e| CliError::Usage(e.to_string()))?;
            let g = sample_graph(&theta, &mut stream_rng(seed, &[tag::GRAPH]));
            write(&out, &write_edge_list(&g))
        }
        Command::Flip { input, epsilon, seed, out, pairwise } => {
            let g = load_edge_list(&read(&input)?)?.graph;
            let flipped = match (pairwise, epsilon) {
                (Some(spec), None) => {
                    let gammas: Vec<f64> = spec
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| CliError::Usage(format!("--pairwise expects three numbers, got {spec:?}")))?;
                    let [g1, g2, g3] = gammas[..] else {
                        return Err(CliError::Usage(format!("--pairwise expects three numbers, got {spec:?}")));
                    };
                    let spec = PairwiseFlipSpec::new(g1, g2, g3).map_err(|e| CliError::Usage(e.to_string()))?;
                    pairwise_edge_flip(&g, &spec, &mut stream_rng(seed, &[tag::PAIRWISE_FLIP]))?
                }
                (None, Some(eps)) => {
                    let budget = parse_epsilon(&eps, g.n())?;
                    edge_flip(&g, &budget, &mut stream_rng(seed, &[tag::EDGE_FLIP]))
                }
                _ => return Err(CliError::Usage("flip needs exactly one of --epsilon or --pairwise".into())),
            };
            write(&out, &write_edge_list(&flipped))
        }
        Command::Laplace { input, epsilon, seed, out } => {
            let g = load_edge_list(&read(&input)?)?.graph;
            let budget = parse_epsilon(&epsilon, g.n())?;
            let z = laplace_release(&g.bi_degree_sequence(), &budget, &mut stream_rng(seed, &[tag::LAPLACE]));
            write(&out, &write_degree_csv(&z.values)?)
        }
        Command::Denoise { input, n, out, report } => {
            let values = to_integers(&read_degree_csv(&read(&input)?)?)?;
            let z = IntegerBiSequence::new(values)?;
            if let Some(n) = n {
                if n != z.n() {
                    return Err(CliError::Usage(format!("--n is {n} but the input has {} nodes", z.n())));
                }
            }
            let result = denoise_l1(&z);
            write(&out, &write_degree_csv(&result.sequence.to_integer().values)?)?;
            if let Some(path) = report {
                write(&path, &(serde_json::to_string_pretty(&result)? + "\n"))?;
            }
            Ok(())
        }
        Command::Fit { input, mode, epsilon, out, k, tolerance, max_iterations } => {
            let target = degree_target(&read(&input)?)?;
            let n = target.len() / 2;
            let p = match (mode, epsilon) {
                (FitMode::Ldp, Some(e)) => parse_epsilon(&e, n)?.keep_probability(),
                (FitMode::Ldp, None) => return Err(CliError::Usage("--mode ldp requires --epsilon".into())),
                (_, Some(_)) => return Err(CliError::Usage("--epsilon applies only to --mode ldp".into())),
                (_, None) => 1.0,
            };
            let options = SolverOptions { tolerance, max_iterations, ..Default::default() };
            options.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let fit: FitResult = solve_p0(&target, p, &options)?;
            let variance = if fit.converged {
                Some(VarianceReport::compute(&fit.theta_hat, p, k.max(1), "estimate")?)
            } else {
                None
            };
            let doc = json!({ "mode": format!("{mode:?}").to_lowercase(), "p": p, "fit": fit, "variance": variance });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            if fit.converged {
                Ok(())
            } else {
                Err(CliError::Numerical(format!("failure_reason={}", fit.failure_reason.as_str())))
            }
        }
        Command::Simulate { config, outdir } => {
            let cfg = SimConfig::from_json(&read(&config)?)?;
            let manifest = run_simulation(&cfg, &outdir, &SolverOptions::default())?;
            eprintln!("wrote {} files to {}", manifest.files.len() + 1, outdir.display());
            Ok(())
        }
        Command::Analyze { edges, epsilons, reps, seed, filter, outdir } => {
            let path = match edges.or_else(|| std::env::var_os(DATASET_ENV).map(PathBuf::from)) {
                Some(p) => p,
                None => return Err(CliError::Usage(format!("pass --edges or set {DATASET_ENV}"))),
            };
            let options = RealDataOptions {
                epsilons,
                repetitions: reps,
                base_seed: seed,
                filter: match filter {
                    Filter::Single => FilterMode::SinglePass,
                    Filter::Iterated => FilterMode::Iterated,
                },
                ..Default::default()
            };
            let report = run_realdata(&path, &options)?;
            fs::create_dir_all(&outdir)?;
            write(&outdir.join("realdata.csv"), &report.to_csv())?;
            write(&outdir.join("realdata.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(())
        }
    }
}
