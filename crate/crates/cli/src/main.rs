// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdslab::flows::builtin_sdes;
use rdslab::harness::{run_file, Overrides, MANIFEST_FILE, THREADS_ENV};
use rdslab::kernels::KERNEL_VARIANTS;
use rdslab::space::builtin_maps;

#[derive(Parser)]
#[command(name = "rdslab", version, about = "Random dynamical systems experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses named in a TOML experiment config.
    #[command(after_help = format!("Set {THREADS_ENV} to bound the number of worker threads."))]
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List builtin maps and SDEs with their default parameters.
    ListSystems,
    /// List transition kernel variants.
    ListKernels,
}

fn params(p: &[(&str, f64)]) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListSystems => {
            for m in builtin_maps() {
                println!("map  {:<20} [{}]  {}", m.name, params(m.params), m.description);
            }
            for m in builtin_sdes() {
                println!("sde  {:<20} [{}]  {}", m.name, params(m.params), m.description);
            }
            ExitCode::SUCCESS
        }
        Command::ListKernels => {
            for (name, desc) in KERNEL_VARIANTS {
                println!("{name:<12} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out } => match run_file(&config, &Overrides { seed, output_dir: out }) {
            Ok(manifest) => {
                for a in &manifest.analyses {
                    match &a.error {
                        None => println!("{:<14} ok     {}", a.analysis, a.files.join(" ")),
                        Some(e) => println!("{:<14} FAILED {e}", a.analysis),
                    }
                }
                println!("manifest: {MANIFEST_FILE}");
                if manifest.success() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
