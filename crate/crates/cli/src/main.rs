//! `lacon`: data generation, training, self-checks, command simulation and
//! reports.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 configuration,
//! 4 data, 5 failed checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lacon::arena::{generate_dataset, read_dataset, simulate, write_dataset, DatasetHeader};
use lacon::config::RunConfig;
use lacon::control::{command_metrics, metrics_csv, read_traces, write_metrics_csv, write_traces, CommandTrace, ModelAgent};
use lacon::gradcheck::{render_report, run_checks, Fault};
use lacon::model::{attention_stats, checkpoint_load, checkpoint_load_matching, checkpoint_save, train, AttentionMode, ParameterStore};
use lacon::numerics::RngStream;
use lacon::par::Exec;
use lacon::Error;

#[derive(Parser)]
#[command(name = "lacon", version, about = "Latent alignment policies on a toy arena")]
struct Cli {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Det,
    Stoch,
}

impl From<Mode> for AttentionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Det => AttentionMode::Deterministic,
            Mode::Stoch => AttentionMode::Stochastic,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate expert train and validation datasets.
    GenData,
    /// Train a model on a generated dataset.
    Train {
        /// Directory holding train.jsonl and validation.jsonl.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "det")]
        mode: Mode,
        /// Deterministic checkpoint used as the prior in stochastic mode.
        #[arg(long)]
        prior_checkpoint: Option<PathBuf>,
    },
    /// Run the gradient and estimator self-checks.
    Gradcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Execute scripted commands in simulated episodes.
    Simulate {
        /// Trained model; an untrained one is used when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "det")]
        mode: Mode,
        /// Execute every command regardless of the intention gate.
        #[arg(long)]
        no_gate: bool,
    },
    /// Summarize trace files.
    Report {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

enum Failure {
    Lib(Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) => 2,
        Error::Config(_) | Error::CheckpointMismatch { .. } => 3,
        Error::Data(_) | Error::CorruptCheckpoint(_) | Error::Json(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(n)) => {
            eprintln!("error: {n} check(s) failed");
            ExitCode::from(5)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::parse("")?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn read_input<T>(path: &Path, f: impl FnOnce(&Path) -> lacon::Result<T>) -> Result<T, Error> {
    f(path).map_err(|e| match e {
        Error::Io(io) => Error::Data(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    fs::create_dir_all(out)?;
    fs::write(out.join("effective_config.txt"), cfg.render())?;
    let exec = Exec::default();
    match &cli.cmd {
        Cmd::GenData => {
            let d = generate_dataset(cfg.data.episodes, cfg.data.horizon, &cfg.arena, cfg.seed, exec)?;
            let hash = cfg.hash();
            for (split, samples) in [("train", &d.train), ("validation", &d.validation)] {
                let header = DatasetHeader::new(split, &hash, cfg.seed, samples.len());
                write_dataset(&out.join(format!("{split}.jsonl")), &header, samples)?;
            }
            println!("train: {} samples", d.train.len());
            println!("validation: {} samples", d.validation.len());
        }
        Cmd::Train { data, mode, prior_checkpoint } => {
            let mode = AttentionMode::from(*mode);
            let prior = match (mode, prior_checkpoint) {
                (AttentionMode::Stochastic, None) => {
                    return Err(Error::Usage("stochastic training requires --prior-checkpoint".into()).into())
                }
                (AttentionMode::Stochastic, Some(p)) => Some(read_input(p, |p| checkpoint_load_matching(p, &cfg.model))?),
                (AttentionMode::Deterministic, _) => None,
            };
            let (_, train_set) = read_input(&data.join("train.jsonl"), read_dataset)?;
            let (_, validation) = read_input(&data.join("validation.jsonl"), read_dataset)?;
            let init = ParameterStore::init(cfg.model.clone(), &mut RngStream::named(cfg.seed, "train.init", 0))?;
            let rng = RngStream::named(cfg.seed, "train", mode as u64);
            let (store, report) = train(&train_set, &validation, &cfg.train_config(mode), init, prior.as_ref(), &rng, exec)?;
            checkpoint_save(&store, &out.join("model.ckpt"))?;
            let mut log = String::new();
            for e in &report.epochs {
                log.push_str(&serde_json::to_string(e).map_err(Error::from)?);
                log.push('\n');
            }
            fs::write(out.join("epochs.jsonl"), log)?;
            let stats = attention_stats(
                &validation,
                &store,
                mode,
                cfg.metrics.faithful_mass,
                cfg.metrics.max_support,
                &RngStream::named(cfg.seed, "train.attention", 0),
                exec,
            )?;
            fs::write(out.join("attention.json"), serde_json::to_string_pretty(&stats).map_err(Error::from)?)?;
            let last = report.epochs.last().expect("epoch 0 is always recorded");
            println!("loss: {:.4} -> {:.4}", report.initial_loss(), report.final_loss());
            if let Some(v) = &last.validation {
                println!("validation level1 accuracy: {:.4}", v.level1);
            }
            println!("faithful states: {:.4}, sparse states: {:.4}", stats.faithful, stats.sparse);
        }
        Cmd::Gradcheck { inject_fault } => {
            let fault = inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
            let results = run_checks(cfg.seed, fault, exec)?;
            let text = render_report(&results);
            fs::write(out.join("gradcheck.txt"), &text)?;
            print!("{text}");
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Failure::Checks(failed));
            }
        }
        Cmd::Simulate { checkpoint, mode, no_gate } => {
            let store = match checkpoint {
                Some(p) => read_input(p, checkpoint_load)?,
                None => ParameterStore::init(cfg.model.clone(), &mut RngStream::named(cfg.seed, "train.init", 0))?,
            };
            let mut control = cfg.control.clone();
            control.gate = control.gate && !no_gate;
            let agent = ModelAgent::new(store, (*mode).into());
            let results = simulate(&agent, &cfg.arena, &control, &cfg.commands, cfg.simulate.episodes, cfg.simulate.frames, cfg.seed, exec)?;
            let traces: Vec<CommandTrace> = results.into_iter().flat_map(|r| r.traces).collect();
            write_traces(&out.join("traces.jsonl"), &traces)?;
            let m = command_metrics(&traces)?;
            write_metrics_csv(&out.join("metrics.csv"), &m)?;
            print!("{}", metrics_csv(&m));
        }
        Cmd::Report { traces } => {
            let mut all = Vec::new();
            let mut csv = String::from("source,scope,received,executed,success,abnormal,response_rate,success_rate,abnormal_rate\n");
            let mut text = String::new();
            for path in traces {
                let t = read_input(path, read_traces)?;
                let source = path.display().to_string();
                append_section(&mut csv, &mut text, &source, &t)?;
                all.extend(t);
            }
            append_section(&mut csv, &mut text, "all", &all)?;
            fs::write(out.join("report.csv"), &csv)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn append_section(csv: &mut String, text: &mut String, source: &str, traces: &[CommandTrace]) -> Result<(), Error> {
    if traces.is_empty() {
        return Err(Error::Data(format!("{source}: no command traces")));
    }
    let m = command_metrics(traces)?;
    let body = metrics_csv(&m);
    text.push_str(&format!("== {source} ({} commands)\n", traces.len()));
    text.push_str(&format!("{:<10} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10}\n", "scope", "received", "executed", "success", "abnormal", "response", "success", "abnormal"));
    for line in body.lines().skip(1) {
        csv.push_str(&format!("{source},{line}\n"));
        let f: Vec<&str> = line.split(',').collect();
        text.push_str(&format!("{:<10} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10}\n", f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]));
    }
    Ok(())
}
