use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use biobj_core::anytime::{parse_lambda, run, Algorithm, RunConfig, RunControl, RunReport};
use biobj_core::bench::{
    generate_instance, load_instance, run_bench, write_output, BenchCase, BenchSpec, GeneratorParams, Reference,
};
use biobj_core::metrics::{brute_force_front, classify_supported, BRUTE_FORCE_LIMIT};
use biobj_core::model::{build_bi_objective, NrpInstance, Objective};
use biobj_core::oracle::{BranchAndBound, Oracle};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

#[derive(Parser)]
#[command(name = "biobj", version, about = "Exact anytime bi-objective Next Release Problem solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one instance and print the events.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        deadline: Option<f64>,
        /// Augmentation weight for the Augmecon variants, as P/Q.
        #[arg(long, value_parser = parse_lambda)]
        lambda: Option<Ratio<i64>>,
        #[arg(long, value_enum, default_value = "csv")]
        out: OutFormat,
    },
    /// Run an (instance x algorithm x repetition) matrix and write CSV and plot data.
    Bench {
        /// Directory of instance files (.json, classic or nrp-* realistic).
        #[arg(long)]
        instances: PathBuf,
        /// Comma-separated algorithm names, or `all`.
        #[arg(long)]
        algorithms: String,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        deadline: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random instance as a JSON document.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Precedence density.
        #[arg(long)]
        pdens: Option<f64>,
        /// Request density.
        #[arg(long)]
        qdens: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enumerate the exact front of a small instance.
    Front {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Start the HTTP run service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Append each run's events to `<dir>/<run>.jsonl`.
        #[arg(long)]
        persist: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve { instance, algorithm, deadline, lambda, out } => {
            solve(&instance, algorithm, deadline, lambda, out)
        }
        Command::Bench { instances, algorithms, reps, deadline, out } => {
            bench(&instances, &algorithms, reps, deadline, &out)
        }
        Command::Gen { n, m, seed, pdens, qdens, out } => {
            let mut params = GeneratorParams { n, m, ..GeneratorParams::with_seed(seed) };
            if let Some(p) = pdens {
                params.precedence_density = p;
            }
            if let Some(q) = qdens {
                params.request_density = q;
            }
            let inst = generate_instance(&params)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&out, inst.to_json_pretty() + "\n").with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} (n={n}, m={m})", out.display());
            Ok(())
        }
        Command::Front { instance } => front(&instance),
        Command::Serve { port, host, persist } => {
            let addr = SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            rt.block_on(biobj_service::serve(addr, persist))?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<NrpInstance> {
    load_instance(path).with_context(|| format!("loading {}", path.display()))
}

fn deadline_of(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).map_err(|_| anyhow::anyhow!("invalid deadline {secs}"))
}

#[cfg(feature = "external-solver")]
fn oracle(node_budget: u64) -> Box<dyn Oracle> {
    match biobj_core::oracle::external::ExternalSolver::from_env() {
        Some(s) => Box::new(s),
        None => Box::new(BranchAndBound::with_node_budget(node_budget)),
    }
}

#[cfg(not(feature = "external-solver"))]
fn oracle(node_budget: u64) -> Box<dyn Oracle> {
    Box::new(BranchAndBound::with_node_budget(node_budget))
}

fn solve(
    path: &Path,
    algorithm: Algorithm,
    deadline: Option<f64>,
    lambda: Option<Ratio<i64>>,
    out: OutFormat,
) -> Result<()> {
    let inst = load(path)?;
    let mut config = RunConfig::new(algorithm);
    if let Some(d) = deadline {
        config = config.with_deadline(deadline_of(d)?);
    }
    if let Some(l) = lambda {
        config = config.with_lambda(l);
    }
    let problem = build_bi_objective(&inst);
    let mut oracle = oracle(config.node_budget);
    let stdout = io::stdout();
    let report: RunReport = match out {
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["index", "elapsed_ms", "satisfaction", "cost", "oracle_calls", "requirements"])?;
            let mut failed = None;
            let mut sink = |ev: &biobj_core::RunEvent| {
                let reqs =
                    ev.solution.selected_requirements().iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
                let rec = [
                    ev.index.to_string(),
                    format!("{:.3}", ev.elapsed.as_secs_f64() * 1000.0),
                    (-ev.point.coord(Objective::Satisfaction)).to_string(),
                    ev.point.coord(Objective::Cost).to_string(),
                    ev.oracle_calls.to_string(),
                    reqs,
                ];
                // flush per event so a piped reader sees points as they come
                if let Err(e) = w.write_record(&rec).and_then(|_| Ok(w.flush()?)) {
                    failed.get_or_insert(e);
                }
            };
            let r = run(&problem, &config, oracle.as_mut(), &mut sink, &RunControl::new())?;
            if let Some(e) = failed {
                return Err(e.into());
            }
            r
        }
        OutFormat::Json => {
            let r = run(&problem, &config, oracle.as_mut(), &mut |_| {}, &RunControl::new())?;
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &r)?;
            writeln!(lock)?;
            r
        }
    };
    eprintln!(
        "{}: {} points, {} oracle calls, termination {:?}",
        report.algorithm,
        report.archive.len(),
        report.stats.oracle_calls,
        report.termination
    );
    Ok(())
}

fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    let algos = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Algorithm>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if algos.is_empty() {
        bail!("no algorithms given");
    }
    Ok(algos)
}

fn bench(dir: &Path, algorithms: &str, reps: usize, deadline: f64, out: &Path) -> Result<()> {
    let algorithms = parse_algorithms(algorithms)?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no instance files in {}", dir.display());
    }
    let mut cases = Vec::new();
    for f in &files {
        let instance = load(f)?;
        let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        eprintln!("reference front for {name} ...");
        let reference = if instance.n_requirements() + instance.n_stakeholders() <= BRUTE_FORCE_LIMIT {
            Reference::brute_force(&instance).ok()
        } else {
            Reference::exhaustive(&instance, Algorithm::AnyAugmecon(Objective::Satisfaction)).ok()
        };
        cases.push(BenchCase { name, instance, reference });
    }
    let spec = BenchSpec::new(algorithms, reps, Some(deadline_of(deadline)?));
    let output = run_bench(&cases, &spec);
    fs::create_dir_all(out)?;
    write_output(out, &output)?;
    for s in &output.summary {
        eprintln!(
            "{:<20} {:<16} %Hyper {:>8}  %PF {:>6}  errors {}",
            s.instance,
            s.algorithm,
            s.mean_hyper_pct.map_or("-".into(), |v| format!("{v:.3}")),
            s.mean_pf_pct.map_or("-".into(), |v| format!("{v:.1}")),
            s.errors
        );
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn front(path: &Path) -> Result<()> {
    let inst = load(path)?;
    let archive = brute_force_front(&inst)?;
    let points = archive.points();
    let flags = classify_supported(&points);
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["satisfaction", "cost", "supported", "requirements"])?;
    for ((p, sol), sup) in archive.entries().iter().zip(flags) {
        let reqs = sol.selected_requirements().iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([(-p.f1).to_string(), p.f2.to_string(), sup.to_string(), reqs])?;
    }
    w.flush()?;
    Ok(())
}
