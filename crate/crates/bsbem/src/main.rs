use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsbem::bench::run_bench;
use bsbem::config::{Overrides, RunConfig};
use bsbem::container::SurrogateFile;
use bsbem::output::{ensure_dir, fmt_f64, write_toml, Table};
use bsbem::parallel::thread_pool;
use bsbem::pipeline::{self, PointKind};
use bsbem::snapshots::{read_snapshots, write_snapshots};
use bsbem::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

/// Non-intrusive space-time surrogates for uncertainty propagation.
#[derive(Parser)]
#[command(name = "bsbem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps_t: Option<f64>,
    #[arg(long)]
    eps_s: Option<f64>,
    /// Spline degree in every dimension.
    #[arg(long)]
    degree: Option<usize>,
    /// Element count in every dimension.
    #[arg(long)]
    elements: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    reference_samples: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            eps_t: self.eps_t,
            eps_s: self.eps_s,
            degree: self.degree,
            elements: self.elements,
            oversample: self.oversample,
            output_dir: self.output_dir.clone(),
            threads: self.threads,
            reference_samples: self.reference_samples,
        });
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Offline stage: writes surrogate.bsbem and build_report.toml.
    Build(ConfigArgs),
    /// Mean and std over the space-time grid as CSV.
    Stats {
        surrogate: PathBuf,
        /// Output file (default: standard output).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Gauss points per dimension and element (default: degree + 1).
        #[arg(long, value_delimiter = ',')]
        quadrature: Option<Vec<usize>>,
    },
    /// Surrogate fields at given parameter points.
    Eval {
        surrogate: PathBuf,
        /// Physical point, comma separated; repeat for several points.
        #[arg(long, value_delimiter = ',', num_args = 1, action = clap::ArgAction::Append, conflicts_with = "xi")]
        eta: Vec<String>,
        /// Unit-hypercube point, comma separated; repeat for several points.
        #[arg(long, value_delimiter = ',', num_args = 1, action = clap::ArgAction::Append)]
        xi: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validates an external snapshot set, optionally against the
    /// collocation plan of a configuration.
    Ingest {
        snapshots: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Benchmark against a sampling reference; writes CSV tables.
    Bench(ConfigArgs),
    /// Writes the physical collocation plan for an external solver.
    Collocate {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Runs a built-in problem at the collocation plan and writes the
    /// snapshot file pair.
    Export {
        #[command(flatten)]
        args: ConfigArgs,
        /// Sidecar path; the payload goes next to it as `.bin`.
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(table: &Table, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(p) => table.write(p),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&table.to_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn parse_points(raw: &[String]) -> CliResult<Vec<f64>> {
    raw.iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("not a number: {s:?}")))
        })
        .collect()
}

fn load_surrogate(path: &Path) -> CliResult<(SurrogateFile, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let file = SurrogateFile::from_bytes(&bytes, path)?;
    Ok((file, bsbem::config::sha256_hex(&bytes)))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Build(args) => {
            let config = args.load()?;
            let built = thread_pool(config.threads)?.install(|| pipeline::build(&config))?;
            ensure_dir(&config.output_dir)?;
            let path = config.output_dir.join("surrogate.bsbem");
            built.file.save(&path)?;
            write_toml(&config.output_dir.join("build_report.toml"), &built.report)?;
            let r = &built.report;
            println!(
                "built {}: N_s = {}, L = {}, K = {:?} (total {}), {:.2} s",
                path.display(),
                r.n_samples,
                r.n_modes,
                r.temporal_ranks,
                r.total_temporal_modes,
                r.total_seconds
            );
            Ok(())
        }
        Command::Stats {
            surrogate,
            output,
            quadrature,
        } => {
            let (file, sha) = load_surrogate(&surrogate)?;
            let table = pipeline::stats_table(&file, &sha, quadrature.as_deref())?;
            emit(&table, output.as_deref())
        }
        Command::Eval {
            surrogate,
            eta,
            xi,
            output,
        } => {
            let (file, _) = load_surrogate(&surrogate)?;
            let dim = file.surrogate.inputs.dim();
            let (raw, kind) = if xi.is_empty() {
                (parse_points(&eta)?, PointKind::Physical)
            } else {
                (parse_points(&xi)?, PointKind::Unit)
            };
            if raw.is_empty() || raw.len() % dim != 0 {
                return Err(CliError::config(format!(
                    "give points with {dim} coordinates each via --eta or --xi"
                )));
            }
            let points: Vec<Vec<f64>> = raw.chunks(dim).map(<[f64]>::to_vec).collect();
            emit(&pipeline::eval_table(&file, &points, kind)?, output.as_deref())
        }
        Command::Ingest { snapshots, config } => {
            let set = read_snapshots(&snapshots)?;
            if let Some(c) = config {
                let config = RunConfig::load(&c)?;
                let (inputs, plan) = pipeline::collocation_points(&config)?;
                pipeline::check_against_plan(&set, &inputs, &plan, &snapshots)?;
            }
            let s = &set.snapshots;
            println!(
                "{}: {} nodes, {} samples, {} times, parameters {:?}",
                snapshots.display(),
                s.n_nodes(),
                s.n_samples(),
                s.n_times(),
                set.parameter_names
            );
            Ok(())
        }
        Command::Bench(args) => {
            let config = args.load()?;
            let result = thread_pool(config.threads)?.install(|| run_bench(&config))?;
            result.write(&config.output_dir)?;
            for e in &result.entries {
                println!(
                    "{} {}: mean error {}, std error {}, L = {}",
                    e.method,
                    fmt_f64(e.value),
                    fmt_f64(e.errors.mean_max),
                    fmt_f64(e.errors.std_max),
                    e.n_modes
                );
            }
            Ok(())
        }
        Command::Collocate { args, output } => {
            let config = args.load()?;
            let (inputs, plan) = pipeline::collocation_points(&config)?;
            let names: Vec<&str> = inputs.params().iter().map(|p| p.name.as_str()).collect();
            let mut t = Table::new(&[&["sample"][..], &names].concat());
            pipeline::header_comments(&mut t, &config.build_hash()?, config.seed);
            for s in 0..plan.len() {
                let mut row = vec![s.to_string()];
                row.extend(plan.physical_point(s).expect("mapped").iter().map(|v| fmt_f64(*v)));
                t.row(row);
            }
            emit(&t, output.as_deref())
        }
        Command::Export { args, output } => {
            let config = args.load()?;
            let set = thread_pool(config.threads)?.install(|| pipeline::export(&config))?;
            if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
            }
            write_snapshots(&output, &set)?;
            println!("wrote {} ({} samples)", output.display(), set.snapshots.n_samples());
            Ok(())
        }
    }
}
