//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when no rate below
//! one can be certified, 3 when a simulated trajectory breaks its bound.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use thiserror::Error;

use crate::certifier::{certify, CertifyError, CertifyOptions};
use crate::iqc::IqcKind;
use crate::model::{FunctionClass, ModelError, StepSizeInterval};
use crate::simulator::{run_trials, trial_seeds, Policy, SimError, Trial};
use crate::sweep::{self, format_sig12, SweepConfig, SweepError, XAxis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_CERTIFICATE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Simulate(#[from] SimError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

#[derive(Debug, Parser)]
#[command(
    name = "ratecert",
    version,
    about = "Certified convergence rates for gradient descent with varying step sizes"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Number of step sizes sampled from the interval
    #[arg(long, global = true, default_value_t = 10)]
    pub grid: usize,
    /// Bisection tolerance on the rate
    #[arg(long = "rho-tol", global = true, default_value_t = 1e-4)]
    pub rho_tol: f64,
    /// Output file (CSV for sweeps and simulations, JSON for certify)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write an SVG chart of a sweep to this path
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Master seed for simulations
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// File of key=value lines presetting any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective settings and exit
    #[arg(long = "show-config", global = true)]
    pub show_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify one instance
    #[command(args_override_self = true)]
    Certify(CertifyArgs),
    /// Certified rate against the condition number
    #[command(name = "sweep-kappa", args_override_self = true)]
    SweepKappa(SweepKappaArgs),
    /// Certified rate against the interval constant c
    #[command(name = "sweep-c", args_override_self = true)]
    SweepC(SweepCArgs),
    /// Check a certificate on random quadratic problems
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    /// Strong convexity modulus
    #[arg(long, default_value_t = 1.0, conflicts_with = "kappa")]
    pub m: f64,
    /// Gradient Lipschitz constant
    #[arg(long = "L", default_value_t = 10.0, conflicts_with = "kappa")]
    pub l: f64,
    /// Shorthand for m = 1, L = kappa
    #[arg(long)]
    pub kappa: Option<f64>,
}

impl ClassArgs {
    fn function_class(&self) -> Result<FunctionClass, ModelError> {
        match self.kappa {
            Some(k) => FunctionClass::from_kappa(k),
            None => FunctionClass::new(self.m, self.l),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct IntervalArgs {
    /// Step sizes range over [1/(cL), c/L]
    #[arg(long, default_value_t = 1.0, conflicts_with_all = ["c1", "c2"])]
    pub c: f64,
    /// Lower constant of the interval [1/(c1 L), c2/L]
    #[arg(long)]
    pub c1: Option<f64>,
    /// Upper constant of the interval [1/(c1 L), c2/L]
    #[arg(long)]
    pub c2: Option<f64>,
}

impl IntervalArgs {
    fn interval(&self, fc: &FunctionClass) -> Result<StepSizeInterval, ModelError> {
        if self.c1.is_some() || self.c2.is_some() {
            StepSizeInterval::from_c_pair(fc, self.c1.unwrap_or(1.0), self.c2.unwrap_or(1.0))
        } else {
            StepSizeInterval::from_c(fc, self.c)
        }
    }
}

fn parse_iqc(s: &str) -> Result<IqcKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[command(flatten)]
    pub interval: IntervalArgs,
    /// Multiplier family: sector, wob1 or zf:<k>
    #[arg(long, default_value = "sector", value_parser = parse_iqc)]
    pub iqc: IqcKind,
    /// Print the certificate as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepKappaArgs {
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "kappa-min", default_value_t = 1.0)]
    pub kappa_min: f64,
    #[arg(long = "kappa-max", default_value_t = 100.0)]
    pub kappa_max: f64,
    #[arg(long = "kappa-count", default_value_t = 25)]
    pub kappa_count: usize,
    /// Space the condition numbers linearly instead of logarithmically
    #[arg(long)]
    pub linear: bool,
    #[arg(long, default_value = "sector", value_parser = parse_iqc)]
    pub iqc: IqcKind,
}

#[derive(Debug, Clone, Args)]
pub struct SweepCArgs {
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[arg(long = "c-min", default_value_t = 1.0)]
    pub c_min: f64,
    #[arg(long = "c-max", default_value_t = 2.0)]
    pub c_max: f64,
    #[arg(long = "c-count", default_value_t = 21)]
    pub c_count: usize,
    #[arg(long, default_value = "sector", value_parser = parse_iqc)]
    pub iqc: IqcKind,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[command(flatten)]
    pub interval: IntervalArgs,
    #[arg(long, default_value = "sector", value_parser = parse_iqc)]
    pub iqc: IqcKind,
    /// uniform, endpoints, alternating, constant:<alpha> or adversarial
    #[arg(long, default_value = "uniform", value_parser = parse_policy)]
    pub policy: Policy,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Problem dimension
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

/// Runs the CLI on the process streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    match execute(&args, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let merged = merge_config(args)?;
    let cli = match Cli::try_parse_from(&merged) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write_out(out, text.as_bytes())?;
                    Ok(EXIT_OK)
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{text}");
                    Ok(EXIT_USAGE)
                }
                _ => {
                    let _ = write!(err, "{text}");
                    Ok(EXIT_USAGE)
                }
            };
        }
    };
    if cli.show_config {
        show_config(&merged, out)?;
        return Ok(EXIT_OK);
    }
    let opts = CertifyOptions {
        rho_tol: cli.rho_tol,
        ..CertifyOptions::default()
    };
    match &cli.command {
        None => Err(CliError::Usage(
            "a subcommand is required (try --help)".into(),
        )),
        Some(Command::Certify(a)) => cmd_certify(&cli, a, &opts, out),
        Some(Command::SweepKappa(a)) => cmd_sweep_kappa(&cli, a, &opts, out),
        Some(Command::SweepC(a)) => cmd_sweep_c(&cli, a, &opts, out),
        Some(Command::Simulate(a)) => cmd_simulate(&cli, a, &opts, out, err),
    }
}

fn write_out(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes).map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes to `--out` when given, to stdout otherwise.
fn emit(target: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match target {
        Some(p) => write_file(p, bytes),
        None => write_out(out, bytes),
    }
}

fn cmd_certify(
    cli: &Cli,
    a: &CertifyArgs,
    opts: &CertifyOptions,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let fc = a.class.function_class()?;
    let iv = a.interval.interval(&fc)?;
    let cert = certify(&fc, &iv, cli.grid, a.iqc, opts)?;
    let json = serde_json::to_string_pretty(&cert).expect("certificates serialize");
    if let Some(p) = &cli.out {
        write_file(p, json.as_bytes())?;
    }
    let text = if a.json {
        format!("{json}\n")
    } else {
        match (&cert.rho_star, &cert.witness) {
            (Some(rho), Some(w)) => {
                let mut s = String::new();
                s += &format!("rho_star         {rho:.6}\n");
                s += &format!("cond_p           {:.6}\n", cert.cond_p.unwrap_or(f64::NAN));
                s += &format!("lambda           {:.6e}\n", w.lambda);
                s += &format!("slack            {:.3e}\n", w.slack);
                s += &format!(
                    "grid             {} points on [{:.6}, {:.6}]\n",
                    cert.grid.len(),
                    iv.lo(),
                    iv.hi()
                );
                s += &format!("iqc              {}\n", cert.iqc);
                s += &format!("bisection_iters  {}\n", cert.bisection_iters);
                s
            }
            _ => format!(
                "no certificate: no rate below {} is feasible for kappa = {}, step sizes in [{:.6}, {:.6}]\n",
                opts.rho_hi,
                fc.kappa(),
                iv.lo(),
                iv.hi()
            ),
        }
    };
    write_out(out, text.as_bytes())?;
    Ok(if cert.is_certified() {
        EXIT_OK
    } else {
        EXIT_NO_CERTIFICATE
    })
}

fn emit_sweep(
    cli: &Cli,
    rows: &[sweep::SweepRow],
    axis: XAxis,
    title: &str,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut csv = Vec::new();
    sweep::write_csv(rows, &mut csv)?;
    emit(cli.out.as_deref(), out, &csv)?;
    if let Some(p) = &cli.svg {
        write_file(p, sweep::render_svg(rows, axis, title).as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep_kappa(
    cli: &Cli,
    a: &SweepKappaArgs,
    opts: &CertifyOptions,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    if !(a.kappa_min >= 1.0
        && a.kappa_max >= a.kappa_min
        && a.kappa_max.is_finite()
        && a.kappa_count >= 1)
    {
        return Err(CliError::Usage(format!(
            "need 1 <= kappa-min <= kappa-max and kappa-count >= 1, got [{}, {}] with {} points",
            a.kappa_min, a.kappa_max, a.kappa_count
        )));
    }
    let kappas = if a.linear {
        sweep::lin_space(a.kappa_min, a.kappa_max, a.kappa_count)
    } else {
        sweep::log_space(a.kappa_min, a.kappa_max, a.kappa_count)
    };
    let cfg = SweepConfig {
        grid_size: cli.grid,
        iqc: a.iqc,
        options: *opts,
    };
    let rows = sweep::sweep_kappa(a.c, &kappas, &cfg)?;
    let title = format!("c = {}, {} IQC", a.c, a.iqc);
    emit_sweep(cli, &rows, XAxis::Kappa, &title, out)
}

fn cmd_sweep_c(
    cli: &Cli,
    a: &SweepCArgs,
    opts: &CertifyOptions,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    if !(a.c_min >= 1.0 && a.c_max <= 2.5 && a.c_min <= a.c_max && a.c_count >= 1) {
        return Err(CliError::Usage(format!(
            "need 1 <= c-min <= c-max <= 2.5 and c-count >= 1, got [{}, {}] with {} points",
            a.c_min, a.c_max, a.c_count
        )));
    }
    let cs = sweep::lin_space(a.c_min, a.c_max, a.c_count);
    let cfg = SweepConfig {
        grid_size: cli.grid,
        iqc: a.iqc,
        options: *opts,
    };
    let rows = sweep::sweep_c(a.kappa, &cs, &cfg)?;
    let title = format!("kappa = {}, {} IQC", a.kappa, a.iqc);
    emit_sweep(cli, &rows, XAxis::C, &title, out)
}

fn cmd_simulate(
    cli: &Cli,
    a: &SimulateArgs,
    opts: &CertifyOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    if a.dim == 0 {
        return Err(CliError::Usage("dim must be at least 1".into()));
    }
    let fc = a.class.function_class()?;
    let iv = a.interval.interval(&fc)?;
    let cert = certify(&fc, &iv, cli.grid, a.iqc, opts)?;
    if !cert.is_certified() {
        let _ = writeln!(err, "no certificate: nothing to validate");
        return Ok(EXIT_NO_CERTIFICATE);
    }
    let trials: Vec<Trial> = trial_seeds(cli.seed, a.trials)
        .map(|seed| Trial {
            seed,
            dim: a.dim,
            policy: a.policy,
            steps: a.steps,
        })
        .collect();
    let reports = run_trials(&trials, &iv, &cert)?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Sweep(SweepError::Csv(e));
    w.write_record(["trial", "seed", "max_ratio", "violated"])
        .map_err(csv_err)?;
    for (i, r) in reports.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.seed.to_string(),
            format_sig12(r.max_ratio),
            r.violated.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    emit(cli.out.as_deref(), out, &bytes)?;

    let violations = reports.iter().filter(|r| r.violated).count();
    let worst = reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let _ = writeln!(
        err,
        "{} trials, rho_star = {:.6}, max ratio {:.6}, {violations} violations",
        reports.len(),
        cert.rho_star.unwrap_or(f64::NAN),
        worst
    );
    Ok(if violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        entries.push((k, v.trim().to_string()));
    }
    Ok(entries)
}

const CONFLICTS: &[(&[&str], &[&str])] = &[(&["c"], &["c1", "c2"]), (&["kappa"], &["m", "L"])];

struct FlagInfo {
    takes_value: bool,
}

fn flags_of(cmd: &clap::Command) -> Vec<(String, FlagInfo)> {
    cmd.get_arguments()
        .filter_map(|a| {
            a.get_long().map(|l| {
                (
                    l.to_string(),
                    FlagInfo {
                        takes_value: a.get_action().takes_values(),
                    },
                )
            })
        })
        .collect()
}

/// Prepends flags from `--config` so that explicit arguments take precedence.
fn merge_config(args: &[String]) -> Result<Vec<String>, CliError> {
    let mut config_path = None;
    let mut explicit = HashSet::new();
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        if let Some(flag) = a.strip_prefix("--") {
            let (key, inline) = match flag.split_once('=') {
                Some((k, v)) => (k, Some(v.to_string())),
                None => (flag, None),
            };
            if key == "config" {
                config_path = inline.or_else(|| iter.next().cloned());
            }
            explicit.insert(key.to_string());
        }
    }
    let Some(path) = config_path else {
        return Ok(args.to_vec());
    };
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let entries = parse_config(&text)?;

    let root = Cli::command();
    let sub_names: Vec<String> = root
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let sub_pos = args
        .iter()
        .skip(1)
        .position(|a| sub_names.contains(a))
        .map(|p| p + 1);
    let mut known = flags_of(&root);
    let mut everywhere: HashSet<String> = known.iter().map(|(k, _)| k.clone()).collect();
    for s in root.get_subcommands() {
        everywhere.extend(flags_of(s).into_iter().map(|(k, _)| k));
    }
    if let Some(p) = sub_pos {
        let sub = root.find_subcommand(&args[p]).expect("subcommand exists");
        known.extend(flags_of(sub));
    }

    let mut injected = Vec::new();
    for (k, v) in entries {
        if !everywhere.contains(&k) {
            return Err(CliError::Usage(format!("unknown config key '{k}'")));
        }
        if k == "config" || explicit.contains(&k) {
            continue;
        }
        let blocked = CONFLICTS.iter().any(|(a, b)| {
            (a.contains(&k.as_str()) && b.iter().any(|x| explicit.contains(*x)))
                || (b.contains(&k.as_str()) && a.iter().any(|x| explicit.contains(*x)))
        });
        if blocked {
            continue;
        }
        let Some((_, info)) = known.iter().find(|(name, _)| *name == k) else {
            continue;
        };
        if info.takes_value {
            injected.push(format!("--{k}={v}"));
        } else {
            match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{k}")),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "config key '{k}' expects true or false, got '{v}'"
                    )))
                }
            }
        }
    }

    let mut merged = vec![args[0].clone()];
    match sub_pos {
        Some(p) => {
            merged.push(args[p].clone());
            merged.extend(injected);
            merged.extend(args[1..p].iter().cloned());
            merged.extend(args[p + 1..].iter().cloned());
        }
        None => {
            merged.extend(injected);
            merged.extend(args[1..].iter().cloned());
        }
    }
    Ok(merged)
}

/// Prints `key=value` for every setting, after config and command line are applied.
fn show_config(merged: &[String], out: &mut dyn Write) -> Result<(), CliError> {
    let root = Cli::command();
    let matches = root
        .clone()
        .try_get_matches_from(merged)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut lines = Vec::new();
    let mut push = |cmd: &clap::Command, m: Option<&clap::ArgMatches>| {
        for arg in cmd.get_arguments() {
            let Some(long) = arg.get_long() else { continue };
            if matches!(long, "help" | "version" | "config" | "show-config")
                || !seen.insert(long.to_string())
            {
                continue;
            }
            let id = arg.get_id().as_str();
            let value = match m.and_then(|m| m.get_raw(id)) {
                Some(vals) => vals
                    .map(|v| v.to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join(","),
                None if matches!(arg.get_action(), ArgAction::SetTrue) => "false".into(),
                None => arg
                    .get_default_values()
                    .iter()
                    .map(|v| v.to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join(","),
            };
            lines.push(format!("{long}={value}"));
        }
    };
    match matches.subcommand() {
        Some((name, sub_m)) => {
            let sub = root
                .find_subcommand(name)
                .expect("parsed subcommand exists");
            push(&root, Some(sub_m));
            push(sub, Some(sub_m));
        }
        None => {
            push(&root, Some(&matches));
            for sub in root.get_subcommands() {
                push(sub, None);
            }
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    write_out(out, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("ratecert").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_parsing() {
        let e = parse_config("# comment\n grid = 5\n--iqc=wob1\n\n").unwrap();
        assert_eq!(
            e,
            vec![("grid".into(), "5".into()), ("iqc".into(), "wob1".into())]
        );
        assert!(parse_config("grid 5").is_err());
        assert!(parse_config("=5").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(
            run_capture(&["certify", "--m", "1", "--L", "0.5"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            run_capture(&["certify", "--c", "1.2", "--c1", "1.1"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_capture(&["certify", "--iqc", "circle"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn show_config_lists_defaults() {
        let (code, out, _) = run_capture(&["--show-config"]);
        assert_eq!(code, EXIT_OK);
        for line in [
            "grid=10",
            "rho-tol=0.0001",
            "iqc=sector",
            "steps=200",
            "policy=uniform",
            "c=1",
        ] {
            assert!(out.lines().any(|l| l == line), "missing {line} in\n{out}");
        }
        let (_, out, _) = run_capture(&["certify", "--grid", "4", "--show-config"]);
        assert!(out.lines().any(|l| l == "grid=4"));
        assert!(out.lines().any(|l| l == "json=false"));
    }

    #[test]
    fn config_presets_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "grid = 3\nc = 1.5\npolicy = endpoints\njson = true\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let (_, out, _) = run_capture(&["certify", "--config", p, "--show-config"]);
        assert!(out.lines().any(|l| l == "grid=3"), "{out}");
        assert!(out.lines().any(|l| l == "c=1.5"));
        assert!(out.lines().any(|l| l == "json=true"));
        let (_, out, _) = run_capture(&[
            "certify",
            "--config",
            p,
            "--grid",
            "7",
            "--c1",
            "1.2",
            "--show-config",
        ]);
        assert!(out.lines().any(|l| l == "grid=7"), "{out}");
        assert!(out.lines().any(|l| l == "c1=1.2"));
        assert!(out.lines().any(|l| l == "c=1"));

        fs::write(&path, "colour = blue\n").unwrap();
        assert_eq!(run_capture(&["certify", "--config", p]).0, EXIT_USAGE);
        assert_eq!(
            run_capture(&["certify", "--config", "/nonexistent/x.cfg"]).0,
            EXIT_USAGE
        );
    }
}
