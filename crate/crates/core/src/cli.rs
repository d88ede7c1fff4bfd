//! Command-line front end. Exit codes: 0 success, 1 model or analysis
//! error, 2 usage or I/O failure. Diagnostics go to standard error and
//! artifacts only to the `-o` path.

use crate::analysis::{check, TargetProfile};
use crate::diag::{self, has_errors, Diagnostic};
use crate::frontend::{import_comm_matrix, parse, parse_comm_matrix, serialize, SourceFile};
use crate::model::Project;
use crate::sim::{random_inputs, InputProfile, Overflow, SimOptions, Simulator};
use crate::transform::{
    cluster_by_clock, export_manifest, flatten_to_ccd, mtd_to_dataflow, parse_refinement_map, refine_types,
    ClusterOptions, TransformError,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODEL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "automode", version, about = "Check, simulate, transform and deploy automotive function models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every static analysis applicable to the model's level.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Target profile for the rate rules: osek, strict or permissive.
        #[arg(long, env = "AUTOMODE_PROFILE", default_value = "osek")]
        profile: String,
    },
    /// Simulate the system component and write the observed trace.
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Input trace (CSV). Without it inputs are drawn from --seed.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// Number of ticks; defaults to the length of the input trace.
        #[arg(long)]
        ticks: Option<usize>,
        /// Comma-separated flows to observe: root ports or block.port.
        #[arg(long, value_delimiter = ',')]
        observe: Vec<String>,
        /// Component to simulate instead of the system.
        #[arg(long)]
        root: Option<String>,
        /// Seed for generated inputs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability of an absent generated input message.
        #[arg(long, default_value_t = 0.0)]
        absent: f64,
        /// Wrap implementation-type overflow instead of failing.
        #[arg(long)]
        wrap: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply one model transformation.
    Transform {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum)]
        step: Step,
        /// MTD component to convert (mtd2dfd).
        #[arg(long)]
        component: Option<String>,
        /// Add the mode flow as an output port (mtd2dfd).
        #[arg(long)]
        expose_mode_port: bool,
        /// SSD levels to dissolve (flatten).
        #[arg(long, default_value_t = 0)]
        depth: usize,
        /// Type refinement map file (refine).
        #[arg(long)]
        map: Option<PathBuf>,
        /// Add delays on slow-to-fast flows (cluster).
        #[arg(long)]
        insert_delays: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a partial FAA model from a communication matrix.
    Import {
        #[arg(long)]
        comm_matrix: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check the deployment and write the manifest.
    Deploy {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Technical architecture file.
        #[arg(long)]
        ta: PathBuf,
        /// Deployment mapping file.
        #[arg(long)]
        map: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Step {
    Mtd2dfd,
    Flatten,
    Refine,
    Cluster,
}

/// Failure of one command, mapped to an exit code.
enum Failure {
    Usage(String),
    Model(Vec<Diagnostic>),
    Message(String),
}

impl From<TransformError> for Failure {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::InvalidSource(d) | TransformError::UncheckedDeployment(d) => Failure::Model(d),
            other => Failure::Message(other.to_string()),
        }
    }
}

type Outcome = Result<Vec<Diagnostic>, Failure>;

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(std::io::stdout(), "{e}");
            }
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Check { files, profile } => cmd_check(&files, &profile),
        Command::Simulate { files, inputs, ticks, observe, root, seed, absent, wrap, output } => {
            let overflow = if wrap { Overflow::Wrap } else { Overflow::Trap };
            let opts = SimOptions { overflow, observe };
            cmd_simulate(&files, inputs.as_deref(), ticks, root.as_deref(), seed, absent, opts, &output)
        }
        Command::Transform { files, step, component, expose_mode_port, depth, map, insert_delays, output } => {
            let args = StepArgs { step, component, expose_mode_port, depth, map, insert_delays };
            cmd_transform(&files, &args, &output)
        }
        Command::Import { comm_matrix, output } => cmd_import(&comm_matrix, &output),
        Command::Deploy { files, ta, map, output } => cmd_deploy(&files, &ta, &map, &output),
    };
    match outcome {
        Ok(diags) => {
            let _ = write!(err, "{}", diag::render(&diags));
            if has_errors(&diags) {
                EXIT_MODEL
            } else {
                EXIT_OK
            }
        }
        Err(Failure::Model(diags)) => {
            let _ = write!(err, "{}", diag::render(&diags));
            EXIT_MODEL
        }
        Err(Failure::Message(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_MODEL
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load(files: &[PathBuf]) -> Result<Project, Failure> {
    let sources = files
        .iter()
        .map(|f| Ok(SourceFile::new(f.to_string_lossy(), read(f)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    parse(&sources).map_err(Failure::Model)
}

fn profile(name: &str) -> Result<TargetProfile, Failure> {
    TargetProfile::by_name(name)
        .ok_or_else(|| Failure::Usage(format!("unknown profile '{name}' (expected osek, strict or permissive)")))
}

fn cmd_check(files: &[PathBuf], profile_name: &str) -> Outcome {
    let prof = profile(profile_name)?;
    let p = load(files)?;
    Ok(check(&p, &prof))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    files: &[PathBuf],
    inputs: Option<&Path>,
    ticks: Option<usize>,
    root: Option<&str>,
    seed: u64,
    absent: f64,
    opts: SimOptions,
    output: &Path,
) -> Outcome {
    let p = load(files)?;
    let an = crate::analysis::analyze(&p).map_err(Failure::Model)?;
    let mut sim = Simulator::new(&p, &an, root, opts).map_err(|e| Failure::Message(e.to_string()))?;
    let trace = match inputs {
        Some(path) => sim.parse_inputs(&read(path)?).map_err(|e| Failure::Message(e.to_string()))?,
        None => {
            let n = ticks.ok_or_else(|| Failure::Usage("--ticks is required without --inputs".into()))?;
            let prof = InputProfile { absent, ..InputProfile::default() };
            random_inputs(&p, root, n, seed, prof).map_err(|e| Failure::Message(e.to_string()))?
        }
    };
    let n = ticks.unwrap_or(trace.len());
    let out = sim.run(&trace, n).map_err(|e| Failure::Message(e.to_string()))?;
    write_out(output, &out.to_csv())?;
    Ok(an.warnings)
}

struct StepArgs {
    step: Step,
    component: Option<String>,
    expose_mode_port: bool,
    depth: usize,
    map: Option<PathBuf>,
    insert_delays: bool,
}

fn cmd_transform(files: &[PathBuf], a: &StepArgs, output: &Path) -> Outcome {
    let p = load(files)?;
    let (q, diags) = match a.step {
        Step::Mtd2dfd => {
            let c =
                a.component.as_deref().ok_or_else(|| Failure::Usage("--component is required for mtd2dfd".into()))?;
            (mtd_to_dataflow(&p, c, a.expose_mode_port)?, Vec::new())
        }
        Step::Flatten => (flatten_to_ccd(&p, a.depth)?, Vec::new()),
        Step::Refine => {
            let path = a.map.as_deref().ok_or_else(|| Failure::Usage("--map is required for refine".into()))?;
            let map =
                parse_refinement_map(&read(path)?).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))?;
            refine_types(&p, &map)?
        }
        Step::Cluster => cluster_by_clock(&p, ClusterOptions { insert_delays: a.insert_delays })?,
    };
    let text = serialize(&q).map_err(|e| Failure::Model(e.0))?;
    write_out(output, &text)?;
    Ok(diags)
}

fn cmd_import(csv: &Path, output: &Path) -> Outcome {
    let rows = parse_comm_matrix(&read(csv)?).map_err(|e| Failure::Message(format!("{}: {e}", csv.display())))?;
    let (p, diags) = import_comm_matrix(&rows).map_err(|e| Failure::Message(format!("{}: {e}", csv.display())))?;
    let text = serialize(&p).map_err(|e| Failure::Model(e.0))?;
    write_out(output, &text)?;
    Ok(diags)
}

fn cmd_deploy(files: &[PathBuf], ta: &Path, map: &Path, output: &Path) -> Outcome {
    let mut all = files.to_vec();
    all.push(ta.to_path_buf());
    all.push(map.to_path_buf());
    let p = load(&all)?;
    let manifest = export_manifest(&p)?;
    write_out(output, &manifest.render())?;
    Ok(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let mut err = Vec::new();
        let code = run(std::iter::once("automode").chain(args.iter().copied()), &mut err);
        (code, String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["check", "--bogus", "x.amd"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["check", "/nonexistent/model.amd"]).0, EXIT_USAGE);
    }

    #[test]
    fn unknown_profile_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("m.amd");
        std::fs::write(&f, "project P; level FDA; component C { in x : int; out y : int; function { y = x; } }")
            .unwrap();
        let (code, err) = run_args(&["check", f.to_str().unwrap(), "--profile", "nope"]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        assert_eq!(run_args(&["check", f.to_str().unwrap()]).0, EXIT_OK);
    }
}
