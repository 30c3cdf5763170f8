mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use collat_core::document::{CollateralDocument, NetworkDocument};
use collat_core::{
    auto_method, gen_cycle_family, gen_fvs_gadget, gen_knapsack_star, is_viable,
    iterated_elimination, random_network, reducible_coordinates, solvability_check, solve_with,
    validate_network, InvestmentNetwork, Method, RandomProfile, Solvability, SolveError,
};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use report::{InputInfo, Report, Status};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NEGATIVE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "collat",
    version,
    about = "Minimum collateral schemes for investment networks"
)]
struct Cli {
    /// Worker threads for the solvers (defaults to all cores).
    #[arg(long, global = true, env = "COLLAT_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a network and decide whether any collateral matrix works.
    Check {
        network: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Compute a minimum-total viable collateral matrix and the NEC ratio.
    Solve {
        network: PathBuf,
        #[arg(long, default_value = "auto")]
        method: Method,
        #[command(flatten)]
        output: Output,
        /// Also write the collateral matrix as a collateral document.
        #[arg(long)]
        collaterals_file: Option<PathBuf>,
    },
    /// Check a user-supplied collateral matrix for viability and minimality.
    Verify {
        network: PathBuf,
        collaterals: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Generate an instance document.
    Gen {
        #[command(subcommand)]
        family: Family,
        #[arg(long, global = true)]
        out_file: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    out: Format,
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Family {
    /// Three enterprises on a cycle with spikes of weight 1 and k.
    Cycle {
        #[arg(long)]
        k: i64,
    },
    /// Seeded random network that passes validation.
    Random {
        #[arg(long)]
        n: usize,
        /// Maximum number of investors per enterprise.
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        acyclic: bool,
        /// Integer costs with alpha > Z everywhere.
        #[arg(long)]
        large_alpha: bool,
        #[arg(long, default_value_t = 1)]
        min_weight: i64,
        #[arg(long, default_value_t = 5)]
        max_weight: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Star whose optimum encodes an inverse knapsack instance.
    Knapsack {
        #[arg(long, value_delimiter = ',', required = true)]
        xs: Vec<i64>,
        #[arg(long)]
        t: i64,
    },
    /// Feedback-vertex-set gadget for a directed graph on 0..n.
    Fvs {
        #[arg(long)]
        n: usize,
        /// Arcs as `u>v`, comma separated.
        #[arg(long, value_delimiter = ',')]
        arcs: Vec<String>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    // Usage errors are operational errors; exit 2 is reserved for verdicts.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Check { network, output } => check(&network, &output),
        Command::Solve {
            network,
            method,
            output,
            collaterals_file,
        } => solve(&network, method, &output, collaterals_file.as_deref()),
        Command::Verify {
            network,
            collaterals,
            output,
        } => verify(&network, &collaterals, &output),
        Command::Gen { family, out_file } => generate(family, out_file.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read_input(path: &Path) -> Result<(String, InputInfo), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let info = InputInfo {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    };
    let text =
        String::from_utf8(bytes).map_err(|_| Failure(format!("{}: not UTF-8", path.display())))?;
    Ok((text, info))
}

fn load_network(path: &Path) -> Result<(InvestmentNetwork, InputInfo), Failure> {
    let (text, info) = read_input(path)?;
    let net = NetworkDocument::parse(&text)
        .and_then(|d| d.to_network())
        .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok((net, info))
}

fn write_out(text: &str, out_file: Option<&Path>) -> Result<(), Failure> {
    match out_file {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit(report: &Report, output: &Output) -> Result<(), Failure> {
    let text = match output.out {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    write_out(&text, output.out_file.as_deref())
}

fn check(path: &Path, output: &Output) -> Result<u8, Failure> {
    let start = Instant::now();
    let (net, info) = load_network(path)?;
    let validation = validate_network(&net);
    if !validation.is_valid() {
        let mut report =
            Report::new("check", vec![info], Status::Invalid).with_validation(&validation);
        report.timing_us = start.elapsed().as_micros();
        emit(&report, output)?;
        return Ok(EXIT_ERROR);
    }
    let (mut report, code) = match solvability_check(&net) {
        Solvability::Solvable(_) => (Report::new("check", vec![info], Status::Solvable), EXIT_OK),
        Solvability::Infeasible(w) => (
            Report::new("check", vec![info], Status::Infeasible).with_witness(&w),
            EXIT_NEGATIVE,
        ),
    };
    report.timing_us = start.elapsed().as_micros();
    emit(&report, output)?;
    Ok(code)
}

fn solve(
    path: &Path,
    method: Method,
    output: &Output,
    collaterals_file: Option<&Path>,
) -> Result<u8, Failure> {
    let start = Instant::now();
    let (net, info) = load_network(path)?;
    let validation = validate_network(&net);
    for msg in validation.messages() {
        log::warn!("{msg}");
    }
    match solve_with(&net, method) {
        Ok(sol) => {
            if method == Method::Auto {
                log::info!("solver: {} (auto)", sol.method);
            } else {
                log::info!("solver: {}", sol.method);
            }
            let mut report = Report::new("solve", vec![info], Status::Solved)
                .with_validation(&validation)
                .with_solution(&net, &sol);
            report.timing_us = start.elapsed().as_micros();
            if let Some(p) = collaterals_file {
                write_out(
                    &CollateralDocument::from_matrix(&net, &sol.collaterals).to_json(),
                    Some(p),
                )?;
            }
            emit(&report, output)?;
            Ok(EXIT_OK)
        }
        Err(SolveError::Infeasible(w)) => {
            let mut report = Report::new("solve", vec![info], Status::Infeasible)
                .with_validation(&validation)
                .with_witness(&w);
            report.timing_us = start.elapsed().as_micros();
            emit(&report, output)?;
            Ok(EXIT_NEGATIVE)
        }
        Err(e @ (SolveError::Precondition(_) | SolveError::CyclicInput)) => Err(Failure(format!(
            "{e}; `--method auto` would use the {} solver",
            auto_method(&net)
        ))),
        Err(e) => Err(e.into()),
    }
}

fn verify(net_path: &Path, c_path: &Path, output: &Output) -> Result<u8, Failure> {
    let start = Instant::now();
    let (net, net_info) = load_network(net_path)?;
    let (text, c_info) = read_input(c_path)?;
    let c = CollateralDocument::parse(&text)
        .and_then(|d| d.to_matrix(&net))
        .map_err(|e| Failure(format!("{}: {e}", c_path.display())))?;
    let inputs = vec![net_info, c_info];
    let (mut report, code) = if is_viable(&net, &c) {
        let reducible = reducible_coordinates(&net, &c);
        let mut r = Report::new("verify", inputs, Status::Viable).with_matrix(&net, c.values());
        r.minimal = Some(reducible.is_empty());
        r.reducible = reducible.iter().map(|&e| net.label(e)).collect();
        (r, EXIT_OK)
    } else {
        let elim = iterated_elimination(&net, &c);
        let mut r = Report::new("verify", inputs, Status::NotViable).with_matrix(&net, c.values());
        r.order = elim.order.edges().iter().map(|&e| net.label(e)).collect();
        r.stuck = elim.stuck.iter().map(|e| net.label(e)).collect();
        (r, EXIT_NEGATIVE)
    };
    report.timing_us = start.elapsed().as_micros();
    emit(&report, output)?;
    Ok(code)
}

fn parse_arc(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure(format!("arc `{s}` must look like `u>v`"));
    let (u, v) = s.split_once('>').ok_or_else(bad)?;
    Ok((
        u.trim().parse().map_err(|_| bad())?,
        v.trim().parse().map_err(|_| bad())?,
    ))
}

fn generate(family: Family, out_file: Option<&Path>) -> Result<u8, Failure> {
    let (net, meta) = match family {
        Family::Cycle { k } => (gen_cycle_family(k)?, json!({"generator": "cycle", "k": k})),
        Family::Random {
            n,
            d,
            acyclic,
            large_alpha,
            min_weight,
            max_weight,
            seed,
        } => {
            let profile = RandomProfile {
                n,
                max_out_degree: d,
                acyclic,
                weight_range: (min_weight, max_weight),
                large_alpha,
                seed,
            };
            (
                random_network(&profile)?,
                json!({
                    "generator": "random",
                    "n": n,
                    "d": d,
                    "acyclic": acyclic,
                    "large_alpha": large_alpha,
                    "min_weight": min_weight,
                    "max_weight": max_weight,
                    "seed": seed,
                }),
            )
        }
        Family::Knapsack { xs, t } => (
            gen_knapsack_star(&xs, t)?.to_network(),
            json!({"generator": "knapsack", "xs": xs, "t": t}),
        ),
        Family::Fvs { n, arcs } => {
            let parsed = arcs
                .iter()
                .map(|a| parse_arc(a))
                .collect::<Result<Vec<_>, _>>()?;
            (
                gen_fvs_gadget(n, &parsed)?,
                json!({"generator": "fvs", "n": n, "arcs": arcs}),
            )
        }
    };
    let meta: Map<String, Value> = match meta {
        Value::Object(m) => m,
        _ => unreachable!("metadata is built as an object"),
    };
    write_out(
        &NetworkDocument::from_network(&net)
            .with_meta(meta)
            .to_json(),
        out_file,
    )?;
    Ok(EXIT_OK)
}
