use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecomarl_cli::harness::{
    self, ExportOptions, FieldExport, GridReport, PolicySource, ScaleOptions,
};
use ecomarl_cli::metrics::write_csv;
use ecomarl_cli::{CliError, CliResult};
use ecomarl_core::EnvId;

#[derive(Parser)]
#[command(name = "ecomarl", version, about = "Train, test and audit the ecomarl environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output root; defaults to $ECOMARL_OUTPUT_DIR, then ./ecomarl-out.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides max_steps of training (and of testing unless
    /// --test-max-steps is given).
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    test_max_steps: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    num_envs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train then test every (task, pattern/level, repeat) cell.
    Train(GridArgs),
    /// Test every cell with a frozen policy.
    Test {
        #[command(flatten)]
        grid: GridArgs,
        /// A checkpoint file, or a directory of `<cell>.ckpt` files.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Agent-count sweep.
    Scale {
        #[arg(long)]
        env: EnvId,
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        env_steps: u64,
        #[arg(long, default_value_t = 5000)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        task: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the task reward-scale table of an environment.
    DumpScales {
        #[arg(long)]
        env: EnvId,
    },
    /// Print a generated terrain or noise field as a text matrix.
    ExportField {
        /// terrain, wind, temperature, humidity or overcast
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        level: u32,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        #[arg(long, default_value_t = 200.0)]
        half_extent: f64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn grid(args: &GridArgs, source: PolicySource, subdir: Option<&str>) -> CliResult<()> {
    let mut config = harness::load_config(&args.config)?;
    config.set_max_steps(args.max_steps, args.test_max_steps);
    if let Some(r) = args.repeats {
        if r == 0 {
            return Err(CliError::config("--repeats must be at least 1"));
        }
        config.repeats = r;
    }
    if let Some(n) = args.num_envs {
        if n == 0 {
            return Err(CliError::config("--num-envs must be at least 1"));
        }
        config.num_envs = n;
    }
    let mut out = harness::output_root(args.output.as_deref()).join(config.env_id.short_name());
    if let Some(s) = subdir {
        out = out.join(s);
    }
    let report = harness::run_grid(&config, &out, &source)?;
    finish(&report)
}

fn finish(report: &GridReport) -> CliResult<()> {
    println!(
        "{} cells: {} ran, {} skipped, {} failed -> {}",
        report.cells,
        report.ran,
        report.skipped,
        report.failed.len(),
        report.out_dir.display()
    );
    if report.failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failed.iter().map(|(id, _)| id.as_str()).collect();
        Err(CliError::Runtime(format!("failed cells: {}", names.join(", "))))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => grid(&args, PolicySource::Train, None),
        Command::Test { grid: args, checkpoint } => {
            if !checkpoint.exists() {
                return Err(CliError::config(format!("checkpoint {} not found", checkpoint.display())));
            }
            grid(&args, PolicySource::from_path(&checkpoint), Some("eval"))
        }
        Command::Scale {
            env,
            counts,
            env_steps,
            seed,
            task,
            output,
        } => {
            let opts = ScaleOptions {
                env_steps,
                seed,
                task,
                trainer: None,
            };
            let rows = harness::run_scalability(env, &counts, &opts)?;
            let path = harness::output_root(output.as_deref()).join(format!("scale_{env}.csv"));
            write_csv(&path, &rows)?;
            println!("agents  cumulative_reward  env_metric  seconds_per_env_step");
            for r in &rows {
                println!(
                    "{:>6}  {:>17.4}  {:>10.4}  {:>20.6}",
                    r.agents, r.cumulative_reward, r.env_metric, r.seconds_per_env_step
                );
            }
            println!("-> {}", path.display());
            Ok(())
        }
        Command::DumpScales { env } => {
            print!("{}", harness::dump_scales(env));
            Ok(())
        }
        Command::ExportField {
            kind,
            seed,
            level,
            size,
            time,
            half_extent,
            out,
        } => {
            let kind: FieldExport = kind.parse()?;
            let text = harness::export_field(
                kind,
                &ExportOptions {
                    seed,
                    level,
                    size,
                    time,
                    half_extent,
                },
            )?;
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
