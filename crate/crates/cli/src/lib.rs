//! Command-line front end for the `tessellate` experiments.
//!
//! Every command writes a JSON envelope with a reproducible `payload`
//! (version, resolved configuration, report) and a `metadata` block for
//! timestamps and thread counts. Sweeps can also write CSV.
//!
//! Exit codes: 0 success, 2 property violation, 3 statistical
//! disagreement, 64 bad flags or configuration, 65 hyperplane budget guard.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};
use serde_json::Value;

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

use config::Resolver;
use error::{CliError, CliResult};
use runner::PoolRunner;

/// Flags handled by the driver rather than the commands.
const DRIVER_FLAGS: [&str; 4] = ["out", "config", "threads", "csv"];

fn value(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("VALUE").help(help).num_args(1)
}

fn adversary_args(c: Command) -> Command {
    c.arg(value("c3", "weight of the w*^2/delta^2 branch of k"))
        .arg(value("c4", "weight of the (m w*/lambda)^(2/3) branch of k"))
        .arg(value("eta-factor", "sign margin as a fraction of the shift threshold"))
        .arg(value("dykstra-iters", "iteration cap of the feasibility solver"))
        .arg(value("dykstra-tol", "residual tolerance of the feasibility solver"))
        .arg(value("width-samples", "Gaussian samples for width estimates"))
}

fn phase_args(c: Command) -> Command {
    adversary_args(
        c.arg(value("trials", "trials per grid point"))
            .arg(value("mesh-factor", "net mesh as a multiple of delta"))
            .arg(value("random-fill", "random points added to each net"))
            .arg(value("max-points", "net size above which pairs are subsampled"))
            .arg(value("net-check", "spherical | euclidean"))
            .arg(value("mode", "reduced | full trial evaluation"))
            .arg(value("csv", "also write the sweep as CSV to this path")),
    )
}

fn desk_args(c: Command) -> Command {
    c.arg(value("c0", "arccos-chord constant fixing the lift height"))
        .arg(value("eps", "radius of the thin ball (defaults to delta/2)"))
        .arg(value("n", "dimension of the thin ball"))
}

pub fn command() -> Command {
    Command::new("tessellate")
        .version(report::VERSION)
        .about("Random hyperplane tessellation experiments")
        .subcommand_required(true)
        .arg(value("seed", "64-bit master seed").global(true))
        .arg(value("out", "write the JSON report here instead of stdout").global(true))
        .arg(value("config", "flat key=value file with the same keys as the flags").global(true))
        .arg(value("threads", "worker threads (default: available cores)").global(true))
        .subcommand(
            Command::new("lemmas")
                .about("Check the arccos-chord, lift-height and folded-normal quantile inequalities")
                .arg(value("grid-step", "grid step for the arccos ratio, at most 1e-3"))
                .arg(value("sweep", "random (r, lambda) draws"))
                .arg(value("c0", "constant the arccos ratio is compared with"))
                .arg(value("quantile-m", "m for the k/m quantile grid")),
        )
        .subcommand(
            Command::new("width")
                .about("Monte Carlo Gaussian width or complexity of a set")
                .arg(value("set", "set description, e.g. ball:n=3,r=1"))
                .arg(value("samples", "number of Gaussian directions"))
                .arg(value("mode", "complexity | width")),
        )
        .subcommand(
            Command::new("check")
                .about("Check delta-uniformity of random tessellations on a net of a set")
                .arg(value("set", "set description"))
                .arg(value("delta", "distortion budget"))
                .arg(value("m", "number of hyperplanes"))
                .arg(value("lambda", "shift scale; 0 for homogeneous hyperplanes"))
                .arg(value("trials", "independent batches"))
                .arg(value("mesh", "net mesh"))
                .arg(value("random-fill", "random points added to the net"))
                .arg(value("max-points", "net size above which pairs are subsampled")),
        )
        .subcommand(adversary_args(desk_args(
            Command::new("witness")
                .about("Construct witness pairs against random affine tessellations of the thin cylinder")
                .arg(value("delta", "Euclidean budget"))
                .arg(value("m", "number of hyperplanes"))
                .arg(value("k", "witness size (default from the width recipe)"))
                .arg(value("trials", "independent batches"))
                .arg(value("dm-probes", "probes of the random-section inclusion check (0 skips it)"))
                .arg(value("dm-probe-fraction", "probe radius as a fraction of w*")),
        )))
        .subcommand(phase_args(desk_args(
            Command::new("phase")
                .about("Pass-rate curve over an m grid and the located transition")
                .arg(value("family", "counterexample | control"))
                .arg(value("delta", "Euclidean budget (spherical budget for the control)"))
                .arg(value("k-sub", "subspace dimension of the control"))
                .arg(value("grid", "comma-separated m values")),
        )))
        .subcommand(
            Command::new("fit")
                .about("Fit log(m_mid / w*^2) against log(1/budget) over phase reports")
                .arg(value("inputs", "comma-separated phase report paths"))
                .arg(value("axis", "budget | delta")),
        )
        .subcommand(phase_args(
            Command::new("control-compare")
                .about("Exponent fits for the counterexample and the subsphere control")
                .arg(value("deltas", "comma-separated budgets"))
                .arg(value("c0", "arccos-chord constant fixing the lift height"))
                .arg(value("k-sub", "subspace dimension of the control"))
                .arg(value("counter-grid", "m grid for the counterexample"))
                .arg(value("control-grid", "m grid for the control")),
        ))
}

/// A finished command.
pub struct Run {
    pub command: String,
    pub payload: Value,
    pub envelope: Value,
    pub csv: Option<String>,
    pub status: Option<CliError>,
    pub out: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

impl Run {
    pub fn exit_code(&self) -> i32 {
        self.status.as_ref().map_or(0, CliError::exit_code)
    }
}

fn command_flags(m: &ArgMatches) -> BTreeMap<String, String> {
    let mut flags = BTreeMap::new();
    for id in m.ids() {
        let id = id.as_str();
        if DRIVER_FLAGS.contains(&id) || m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        if let Some(v) = m.get_one::<String>(id) {
            flags.insert(id.to_string(), v.clone());
        }
    }
    flags
}

fn driver_value(m: &ArgMatches, id: &str) -> Option<String> {
    m.try_get_one::<String>(id).ok().flatten().cloned()
}

/// Runs a parsed command without printing or writing anything.
pub fn execute(matches: &ArgMatches) -> CliResult<Run> {
    let (name, sub) = matches.subcommand().ok_or_else(|| CliError::Usage("missing command".into()))?;
    let threads = match driver_value(sub, "threads") {
        Some(t) => Some(
            t.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("`threads` is not a positive integer: `{t}`")))?,
        ),
        None => None,
    };
    let runner = PoolRunner::new(threads)?;
    let file = Resolver::read_file(driver_value(sub, "config").map(PathBuf::from).as_deref())?;
    let r = Resolver::new(command_flags(sub), file);
    let start = Instant::now();
    let out = match name {
        "lemmas" => commands::lemmas(r)?,
        "width" => commands::width(r)?,
        "check" => commands::check(r, &runner)?,
        "witness" => commands::witness(r, &runner)?,
        "phase" => commands::phase(r, &runner)?,
        "fit" => commands::fit(r)?,
        "control-compare" => commands::control_compare(r, &runner)?,
        other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
    };
    let payload = report::payload(name, out.config, out.report);
    let envelope = report::envelope(payload.clone(), runner.threads(), start.elapsed().as_secs_f64());
    Ok(Run {
        command: name.to_string(),
        payload,
        envelope,
        csv: out.csv,
        status: out.status,
        out: driver_value(sub, "out").map(PathBuf::from),
        csv_path: driver_value(sub, "csv").map(PathBuf::from),
    })
}

fn emit(run: &Run) -> CliResult<()> {
    let text = report::to_text(&run.envelope);
    match &run.out {
        Some(p) => report::write_text(p, &text)?,
        None => print!("{text}"),
    }
    if let (Some(p), Some(csv)) = (&run.csv_path, &run.csv) {
        report::write_text(p, csv)?;
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command, writes
/// its outputs and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&matches).and_then(|run| emit(&run).map(|_| run)) {
        Ok(run) => {
            if let Some(s) = &run.status {
                eprintln!("tessellate {}: {s}", run.command);
            }
            run.exit_code()
        }
        Err(e) => {
            eprintln!("tessellate: {e}");
            e.exit_code()
        }
    }
}
