//! `kvaudit`: audit key-value LDP mechanisms from the command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kvaudit_harness::selftest::{all_presets, oracle_table, selftest};
use kvaudit_harness::{
    emit_csv, emit_trace_csv, fmt_g, run_experiment, write_results, HarnessError, Overrides, Preset, Result,
};

#[derive(Parser)]
#[command(name = "kvaudit", version, about = "Empirical privacy auditing of key-value LDP mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit one mechanism configuration.
    Audit(Settings),
    /// Run a named experiment preset.
    Experiment {
        /// Preset name; omit with --list to see them all.
        preset: Option<String>,
        /// List the available presets and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        settings: Settings,
    },
    /// Print the certified ε of the audited input pairs.
    Oracle {
        /// Restrict to one preset.
        preset: Option<String>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Check the bound computations and the mechanism oracle.
    Selftest,
}

#[derive(Args, Clone, Default)]
struct Settings {
    /// Key-value config file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mechanism: Option<String>,
    /// hkv, vkv, mean or skv.
    #[arg(long)]
    auditor: Option<String>,
    /// key or value.
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated privacy budgets.
    #[arg(long)]
    eps: Option<String>,
    /// Users per group.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Seeds: a comma list of values and half-open ranges `a..b`.
    #[arg(long)]
    seed: Option<String>,
    /// conservative, per-outcome or optimistic.
    #[arg(long)]
    mode: Option<String>,
    /// Vector length (item domain or boundary points).
    #[arg(long)]
    bits: Option<String>,
    /// Key domain size.
    #[arg(long)]
    nkey: Option<String>,
    /// Padding length.
    #[arg(long)]
    pad: Option<String>,
    /// Rounds of an interactive mechanism.
    #[arg(long)]
    iters: Option<String>,
    /// Result CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round trace CSV path for interactive mechanisms.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads (all cores when omitted).
    #[arg(long)]
    threads: Option<String>,
    /// Allow whole-record auditing of long vectors.
    #[arg(long)]
    force: bool,
    /// Write 0 in the wall-time column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

impl Settings {
    fn overrides(&self) -> Result<Overrides> {
        let base = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let mut flags = Overrides::default();
        let pairs = [
            ("mechanism", &self.mechanism),
            ("auditor", &self.auditor),
            ("target", &self.target),
            ("eps", &self.eps),
            ("n", &self.n),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("bits", &self.bits),
            ("nkey", &self.nkey),
            ("pad", &self.pad),
            ("iters", &self.iters),
            ("threads", &self.threads),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        flags.out = self.out.clone();
        flags.trace = self.trace.clone();
        flags.force = self.force.then_some(true);
        flags.no_timing = self.no_timing.then_some(true);
        Ok(base.merge(flags))
    }
}

fn configure_threads(o: &Overrides) -> Result<()> {
    if let Some(t) = o.threads {
        if t == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(preset: Preset, o: &Overrides) -> Result<()> {
    let preset = o.apply(preset)?;
    configure_threads(o)?;
    let outcome = run_experiment(&preset, !o.no_timing.unwrap_or(false))?;
    match &o.out {
        Some(path) => emit_csv(&outcome.rows, path)?,
        None => write_results(&outcome.rows, std::io::stdout().lock())?,
    }
    if let Some(path) = &o.trace {
        emit_trace_csv(&outcome.traces, path)?;
    }
    Ok(())
}

fn oracle(preset: Option<String>, o: &Overrides) -> Result<()> {
    let presets = match (preset, o.mechanism) {
        (Some(name), _) => vec![o.apply(Preset::named(&name)?)?],
        (None, Some(m)) => vec![o.apply(Preset::for_mechanism(m))?],
        (None, None) => all_presets()?.into_iter().map(|p| o.apply(p)).collect::<Result<_>>()?,
    };
    let mut out = std::io::stdout().lock();
    let io = |source| HarnessError::Io { path: "<stdout>".into(), source };
    writeln!(out, "preset,mechanism,target,epsilon,certified,outputs").map_err(io)?;
    for r in oracle_table(&presets)? {
        let certified = r.certified.map_or_else(|| "configured".to_string(), fmt_g);
        let outputs = r.outputs.map_or_else(String::new, |n| n.to_string());
        writeln!(out, "{},{},{},{},{certified},{outputs}", r.preset, r.mechanism, r.target, fmt_g(r.epsilon))
            .map_err(io)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit(settings) => {
            let o = settings.overrides()?;
            let m = o.mechanism.ok_or_else(|| {
                HarnessError::Config("audit needs a mechanism (--mechanism or in the config file)".into())
            })?;
            run(Preset::for_mechanism(m), &o)
        }
        Command::Experiment { list: true, .. } => {
            for name in kvaudit_harness::PRESET_NAMES {
                let p = Preset::named(name)?;
                println!("{name}\t{} {} ({} target)", p.mechanism, p.procedure, p.target);
            }
            Ok(())
        }
        Command::Experiment { preset, settings, .. } => {
            let name =
                preset.ok_or_else(|| HarnessError::Config("experiment needs a preset name (or --list)".into()))?;
            run(Preset::named(&name)?, &settings.overrides()?)
        }
        Command::Oracle { preset, settings } => oracle(preset, &settings.overrides()?),
        Command::Selftest => {
            for c in selftest()? {
                println!("ok   {} ({})", c.name, c.detail);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kvaudit: {e}");
            if let HarnessError::SelfTest(_) = e {
                if let Ok(checks) = kvaudit_harness::selftest::run_checks() {
                    for c in checks.iter().filter(|c| !c.passed) {
                        eprintln!("FAIL {} ({})", c.name, c.detail);
                    }
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
