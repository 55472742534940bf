use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lxe_core::cft;
use lxe_core::experiment::{
    self, collapse_residual, emit, estimate_leak_probability, find_crossings, group_curves,
    read_lxe_rows, Abscissa, ExperimentError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "lxe",
    version,
    about = "LXE sweeps of Z2-symmetric monitored Clifford circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    P,
    Q,
    RXx,
}

impl From<Axis> for Abscissa {
    fn from(a: Axis) -> Self {
        match a {
            Axis::P => Abscissa::P,
            Axis::Q => Abscissa::Q,
            Axis::RXx => Abscissa::RXx,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Obc,
    Pbc,
    SmallR,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON config and write the CSV and its .meta.json sidecar.
    Run {
        config: PathBuf,
        /// Overrides the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise crossings of the curves in a results CSV.
    Crossings {
        results: PathBuf,
        #[arg(long, value_enum, default_value = "p")]
        x: Axis,
    },
    /// Scaling-collapse residual of the curves in a results CSV.
    Collapse {
        results: PathBuf,
        #[arg(long)]
        pc: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long, value_enum, default_value = "p")]
        x: Axis,
    },
    /// Leak probability of random symmetric scramblers.
    Leak {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Tables of the critical predictions.
    Cft {
        #[arg(long, value_enum)]
        table: TableArg,
        #[arg(long, value_delimiter = ',', required = true)]
        aspects: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        r_over_l: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn stdout_csv() -> csv::Writer<io::Stdout> {
    csv::Writer::from_writer(io::stdout())
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let Some(path) = out.or_else(|| cfg.output_path.clone()) else {
                return Err(ExperimentError::Analysis(
                    "no output path: set output_path in the config or pass --out".into(),
                ));
            };
            let result = experiment::run(&cfg)?;
            emit(&result, &path)?;
            println!(
                "wrote {} rows to {} and {}",
                result.table.len(),
                path.display(),
                experiment::sidecar_path(&path).display()
            );
            for fit in &result.metadata.fits {
                println!("fit: {}", serde_json::to_string(fit)?);
            }
        }
        Command::Crossings { results, x } => {
            let rows = read_lxe_rows(&results)?;
            let mut w = stdout_csv();
            w.write_record(["group", "L_small", "L_large", "x_star", "stderr"])?;
            for (label, curves) in group_curves(&rows, x.into()) {
                if curves.len() < 2 {
                    continue;
                }
                for c in find_crossings(&curves)? {
                    w.write_record([
                        label.clone(),
                        c.l_small.to_string(),
                        c.l_large.to_string(),
                        c.x_star.to_string(),
                        c.stderr.to_string(),
                    ])?;
                }
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Command::Collapse { results, pc, nu, x } => {
            let rows = read_lxe_rows(&results)?;
            let mut w = stdout_csv();
            w.write_record(["group", "p_c", "nu", "residual"])?;
            for (label, curves) in group_curves(&rows, x.into()) {
                let residual = collapse_residual(&curves, pc, nu)?;
                w.write_record([label, pc.to_string(), nu.to_string(), residual.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Command::Leak { l, samples, seed } => {
            let est = estimate_leak_probability(l, samples, seed)?;
            let mut w = stdout_csv();
            w.write_record(["L", "samples", "seed", "q", "stderr"])?;
            w.write_record([
                l.to_string(),
                samples.to_string(),
                seed.to_string(),
                est.mean.to_string(),
                est.stderr.to_string(),
            ])?;
            w.flush().map_err(csv::Error::from)?;
        }
        Command::Cft {
            table,
            aspects,
            r_over_l,
            time_scale,
            amplitude,
        } => {
            let mut w = stdout_csv();
            w.write_record(experiment::CFT_COLUMNS)?;
            for &aspect in &aspects {
                for &r in &r_over_l {
                    let a = time_scale * aspect;
                    let (name, chi) = match table {
                        TableArg::Obc => ("obc", cft::cardy_chi_obc(a, r)?),
                        TableArg::SmallR => ("small_r", cft::chi_obc_small_r(a, r)?),
                        TableArg::Pbc => ("pbc", cft::chi_pbc(a, amplitude)),
                    };
                    w.write_record([
                        name.to_string(),
                        aspect.to_string(),
                        r.to_string(),
                        time_scale.to_string(),
                        amplitude.to_string(),
                        chi.to_string(),
                    ])?;
                }
            }
            w.flush().map_err(csv::Error::from)?;
        }
    }
    Ok(())
}
