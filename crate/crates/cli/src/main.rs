use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nmdot::model::SystemModel;
use nmdot_cli::{
    emit_plot_script, presets, read_config, run_coefficients, run_propagate, run_validate, write_file, CliError, PlotLayout,
    RunConfig,
};

/// Exact non-Markovian dynamics of quantum dots coupled to fermionic leads.
#[derive(Parser)]
#[command(name = "nmdot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output file; defaults to `output.path` from the config or a per-command name.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for coefficient solves (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the coefficient table as CSV.
    Coefficients {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Write the propagated density matrix as CSV.
    Propagate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the check suite; exits with 1 if any check fails.
    Validate {
        /// Defaults to the built-in validation run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Coefficients of the single dot between symmetric biased leads.
    Fig1 {
        /// Lead bandwidth in μeV.
        #[arg(long)]
        d: f64,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plot: bool,
    },
}

fn output_path(common: &Common, config: &RunConfig, default: &str) -> PathBuf {
    common.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from(default))
}

fn layout(config: &RunConfig) -> PlotLayout {
    match config.model {
        SystemModel::Single(_) => PlotLayout::Single,
        SystemModel::Double(_) => PlotLayout::Double,
    }
}

fn with_pool<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn coefficients(config: &RunConfig, common: &Common, plot: bool) -> Result<(), CliError> {
    let csv = with_pool(common.threads, || run_coefficients(config))??;
    let out = output_path(common, config, "coefficients.csv");
    write_file(&out, &csv)?;
    println!("wrote {}", out.display());
    if plot {
        println!("wrote {}", emit_plot_script(&out, layout(config))?.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Coefficients { config, common, plot } => coefficients(&read_config(&config)?, &common, plot),
        Command::Propagate { config, common } => {
            let config = read_config(&config)?;
            let csv = with_pool(common.threads, || run_propagate(&config))??;
            let out = output_path(&common, &config, "propagation.csv");
            write_file(&out, &csv)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Validate { config, common } => {
            let config = config.as_deref().map(read_config).transpose()?.unwrap_or_else(presets::validation);
            let report = with_pool(common.threads, || run_validate(&config))??;
            print!("{}", report.render());
            if let Some(out) = common.out.clone().or_else(|| config.output.clone()) {
                write_file(&out, &report.csv)?;
                println!("wrote {}", out.display());
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::ValidationFailed { failed: report.failures(), total: report.checks.len() })
            }
        }
        Command::Fig1 { d, common, plot } => {
            if !(d.is_finite() && d > 0.0) {
                return Err(CliError::Usage(format!("--d must be a positive bandwidth in μeV, got {d}")));
            }
            let config = presets::fig1(d);
            let h = config.t_end_absolute() / config.grid.n_steps as f64;
            if d * h > 0.5 {
                eprintln!("note: d h = {:.2}; the memory kernel is under-resolved on this grid", d * h);
            }
            coefficients(&config, &common, plot)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
