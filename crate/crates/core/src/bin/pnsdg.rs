use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::error;

use pnsdg::bench::{markdown_tables, run_experiment, write_csv, BoundaryData, ExperimentConfig};
use pnsdg::constitutive::{ConvectiveVariant, ModelParams, StressVariant};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StressArg {
    Ldg,
    Sip,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvectiveArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "none")]
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Zero,
    Exact,
}

/// Convergence study for the DG discretization of the unsteady
/// p-Navier-Stokes equations with a singular manufactured solution.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Power-law exponents (comma separated).
    #[arg(long = "p", value_delimiter = ',', default_values_t = [2.0, 2.5])]
    p: Vec<f64>,
    /// Regularity parameters (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2])]
    rho: Vec<f64>,
    /// Finest refinement level; levels 1..=LEVELS are run.
    #[arg(long, default_value_t = 4)]
    levels: u32,
    #[arg(long, value_enum, default_value_t = StressArg::Ldg)]
    variant_stress: StressArg,
    #[arg(long, value_enum, default_value_t = ConvectiveArg::Two)]
    variant_convective: ConvectiveArg,
    #[arg(long, default_value_t = 2.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.1)]
    t_final: f64,
    /// Write the CSV report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print markdown EOC tables to stdout.
    #[arg(long)]
    table: bool,
    /// Use temporal means of the forcing instead of point values.
    #[arg(long)]
    clement: bool,
    /// Worker threads for the sparse factorization (1 is deterministic).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Boundary values the penalty is taken against.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Exact)]
    boundary_data: BoundaryArg,
    /// Write zeros instead of wall-clock times, for byte-reproducible CSV.
    #[arg(long)]
    no_timing: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    faer::set_global_parallelism(if cli.threads > 1 {
        faer::Par::rayon(cli.threads)
    } else {
        faer::Par::Seq
    });
    let mut params = ModelParams::new(2.0, cli.delta);
    params.alpha = cli.alpha;
    params.stress_variant = match cli.variant_stress {
        StressArg::Ldg => StressVariant::Ldg,
        StressArg::Sip => StressVariant::Sip,
    };
    params.convective_variant = match cli.variant_convective {
        ConvectiveArg::One => ConvectiveVariant::I,
        ConvectiveArg::Two => ConvectiveVariant::II,
        ConvectiveArg::Off => ConvectiveVariant::None,
    };
    let mut config = ExperimentConfig {
        cases: cli.p.iter().flat_map(|&p| cli.rho.iter().map(move |&r| (p, r))).collect(),
        levels: (1..=cli.levels).collect(),
        params,
        t_final: cli.t_final,
        boundary_data: match cli.boundary_data {
            BoundaryArg::Zero => BoundaryData::Zero,
            BoundaryArg::Exact => BoundaryData::Exact,
        },
        timing: !cli.no_timing,
        ..ExperimentConfig::default()
    };
    config.rothe.clement = cli.clement;

    let results = run_experiment(&config);
    let mut failed = false;
    let mut reports = Vec::new();
    for (p, rho, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                error!("p = {p}, rho = {rho}: {e}");
                failed = true;
            }
        }
    }
    if let Some(path) = &cli.out {
        let written = File::create(path)
            .map_err(pnsdg::Error::from)
            .and_then(|f| write_csv(BufWriter::new(f), &reports));
        if let Err(e) = written {
            error!("writing {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    if cli.table || cli.out.is_none() {
        print!("{}", markdown_tables(&reports));
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
