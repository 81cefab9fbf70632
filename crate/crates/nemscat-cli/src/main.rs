use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nemscat_cli::config::{self, OutputKind};
use nemscat_cli::runner::{
    self, format_float, CsvPayload, OutputFormat, RunOptions,
};
use nemscat_cli::{exit_code, parse_config, preset_variants, CliError};

/// Entangled cavity/resonator dynamics: couplings, closed-form evolution,
/// decoherence, and a brute-force master-equation cross-check.
#[derive(Parser)]
#[command(name = "nemscat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory output files are written into.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Which artifacts to write.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the coupling pipeline of a device-units config.
    Couplings {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario config and write its outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the truncated-Fock-space cross-check of a scenario.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a built-in figure preset (fig2, fig3-orbits, fig4, fig5, fig6).
    Figure { name: String },
    /// Re-run a config across a linear range of one scalar parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path of the scalar to sweep, e.g. `model.kappa`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions::from_env();
    match run(cli, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("nemscat: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

fn run(cli: Cli, opts: &RunOptions) -> Result<(), CliError> {
    match cli.command {
        Command::Couplings { config } => couplings(&config, &cli.out_dir),
        Command::Simulate { config } => {
            let cfg = parse_config(&config)?;
            let result = runner::run_scenario(&cfg, opts)?;
            let written = runner::write_outputs(&result, &cli.out_dir, "", cli.format)?;
            report_written(&written);
            Ok(())
        }
        Command::Oracle { config } => {
            let mut cfg = parse_config(&config)?;
            if !cfg.outputs.contains(&OutputKind::OracleCompare) {
                cfg.outputs = vec![OutputKind::OracleCompare];
                cfg.validate()?;
            }
            let result = runner::run_scenario(&cfg, opts)?;
            let written = runner::write_outputs(&result, &cli.out_dir, "", cli.format)?;
            report_written(&written);
            Ok(())
        }
        Command::Figure { name } => {
            for (label, cfg) in preset_variants(&name)? {
                let prefix = if label.is_empty() {
                    format!("{name}_")
                } else {
                    format!("{name}_{label}_")
                };
                let result = runner::run_scenario(&cfg, opts)?;
                let written = runner::write_outputs(&result, &cli.out_dir, &prefix, cli.format)?;
                report_written(&written);
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            from,
            to,
            steps,
        } => {
            let cfg = parse_config(&config)?;
            let result = runner::sweep(&cfg, &param, from, to, steps, opts)?;
            let written = runner::write_sweep_outputs(&result, &cli.out_dir, cli.format)?;
            report_written(&written);
            Ok(())
        }
    }
}

fn couplings(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let cfg = parse_config(config_path)?;
    let device = cfg.device.as_ref().ok_or_else(|| {
        CliError::Config("the couplings command needs a device-units config".into())
    })?;
    let (raw, params) = config::device_couplings(device)?;
    let model = raw.effective_model(params.detuning)?;

    let mut payload = CsvPayload::new(&[
        "x_rms",
        "epsilon",
        "theta",
        "g",
        "lambda",
        "chi_cross",
        "chi",
        "omega",
        "kappa",
        "omega_bar",
        "delta",
        "splitting",
    ]);
    payload.rows.push(vec![
        raw.x_rms,
        raw.qubit_gap,
        raw.mixing_angle,
        raw.cavity_coupling,
        raw.nems_coupling,
        raw.cross_coupling,
        model.chi,
        model.omega,
        model.kappa,
        model.omega_bar(),
        model.delta(),
        model.normal_mode_splitting(),
    ]);

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("couplings.csv");
    std::fs::write(&path, payload.to_csv_string())?;
    for (name, value) in payload.columns.iter().zip(payload.rows[0].iter()) {
        println!("{name:>10} = {}", format_float(*value));
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn report_written(paths: &[PathBuf]) {
    for path in paths {
        println!("wrote {}", path.display());
    }
}
