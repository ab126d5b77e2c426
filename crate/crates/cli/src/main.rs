use clap::{Parser, Subcommand};
use qpurify_cli::commands::{self, SweepConfig, IDENTITY_TOL};
use qpurify_cli::config::{parse_complex, ConfigMap, RunConfig, DEFAULT_CONFIG};
use qpurify_cli::{exit, CliError};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

/// Repeated-measurement purification of a qubit.
#[derive(Parser, Debug)]
#[command(name = "qpurify", version)]
struct Cli {
    /// key = value file; the built-in default config is used when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path, or "stdout"
    #[arg(long, global = true, default_value = "stdout")]
    out: String,
    /// Overrides every check tolerance (and the identity-test threshold)
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra key=value overrides, applied after the config file
    #[arg(long = "set", short = 'D', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-step CSV of one trajectory
    Run,
    /// Closed form vs iteration vs joint-system oracles
    Check,
    /// Metric over a grid of up to three parameters
    Sweep {
        /// name:min:max:count[:lin|log]; replaces axis1..axis3 of the config
        #[arg(long)]
        axis: Vec<String>,
        /// max_fid_u1, argmax_n, final_purity, yield or fid_u1
        #[arg(long, value_delimiter = ',')]
        metric: Vec<String>,
    },
    /// Partial-fraction nested sums vs brute-force enumeration
    IdentityTest {
        #[arg(long, default_value_t = 4)]
        l_max: usize,
        #[arg(long, default_value_t = 15)]
        k_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Evaluate at these points instead ("re,im; re,im; ..."), with k = k_max
        #[arg(long)]
        points: Option<String>,
    },
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn load(cli: &Cli) -> Result<ConfigMap, CliError> {
    let mut map = match &cli.config {
        Some(p) => ConfigMap::load(p)?,
        None => ConfigMap::parse(DEFAULT_CONFIG)?,
    };
    for s in &cli.set {
        map.apply(s)?;
    }
    if let Some(seed) = cli.seed {
        map.set("seed", &seed.to_string())?;
    }
    if let Some(tol) = cli.tol {
        map.set("tol", &format!("{tol:?}"))?;
    }
    Ok(map)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut out = out;
    match &cli.command {
        Command::Run => {
            let cfg = RunConfig::from_map(&load(cli)?)?;
            commands::run(&cfg, &mut out)?;
        }
        Command::Check => {
            let cfg = RunConfig::from_map(&load(cli)?)?;
            let lines = commands::check(&cfg, cfg.tol)?;
            let n_closed = cfg.n_steps.min(qpurify_core::closedform::CLOSED_FORM_MAX_N);
            if !commands::write_check(&lines, n_closed, &mut out)? {
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::Sweep { axis, metric } => {
            let map = load(cli)?;
            let sw = SweepConfig::resolve(&map, axis, metric)?;
            commands::sweep(&map, &sw, &mut out)?;
        }
        Command::IdentityTest {
            l_max,
            k_max,
            trials,
            points,
        } => {
            let tol = cli.tol.unwrap_or(IDENTITY_TOL);
            if let Some(pts) = points {
                let xs: Vec<_> = pts
                    .split(';')
                    .map(|p| parse_complex("points", p.trim()))
                    .collect::<Result<_, _>>()?;
                let (brute, closed, dev) = commands::identity_at(&xs, *k_max)?;
                writeln!(out, "points={} k={k_max}", xs.len())?;
                writeln!(out, "brute={brute} closed={closed} rel_dev={dev:.3e}")?;
                let ok = dev < tol;
                writeln!(out, "identity-test: {}", if ok { "PASS" } else { "FAIL" })?;
                return Ok(if ok {
                    Outcome::Ok
                } else {
                    Outcome::CheckFailed
                });
            }
            let seed = cli.seed.unwrap_or(0);
            let r = commands::identity_test(*l_max, *k_max, *trials, seed, tol)?;
            writeln!(
                out,
                "l_max={l_max} k_max={k_max} trials={trials} seed={seed}"
            )?;
            if let Some((l, k, v)) = r.worst {
                writeln!(out, "worst: l={l} k={k} value={v}")?;
            }
            writeln!(out, "max_rel_dev={:.3e} tol={:.1e}", r.max_rel_dev, r.tol)?;
            writeln!(
                out,
                "identity-test: {}",
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
            if !r.passed() {
                return Ok(Outcome::CheckFailed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = (|| -> Result<Outcome, CliError> {
        let mut sink: Box<dyn Write> = match cli.out.as_str() {
            "stdout" | "-" => Box::new(BufWriter::new(std::io::stdout().lock())),
            path => Box::new(BufWriter::new(std::fs::File::create(path)?)),
        };
        let outcome = execute(&cli, &mut sink)?;
        sink.flush()?;
        Ok(outcome)
    })();
    match result {
        Ok(Outcome::Ok) => ExitCode::from(exit::OK as u8),
        Ok(Outcome::CheckFailed) => ExitCode::from(exit::CHECK_FAILED as u8),
        Err(e) => {
            eprintln!("qpurify: {e}");
            ExitCode::from(exit::USAGE as u8)
        }
    }
}
