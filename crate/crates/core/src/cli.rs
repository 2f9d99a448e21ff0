//! Command-line front end. [`run`] takes the argument list and output
//! streams explicitly so it can be driven from tests.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::audit::{self, classify_biases, parse_spec, render_outcome, render_report, AuditQuery, AuditSpec, Format, QueryMode};
use crate::error::Error;
use crate::graph::{NodeId, NodeSet};
use crate::independence::d_separated;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BIAS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "causal-audit", version, about = "Causal bias audits over DAGs, selection diagrams and discrete SCMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether X and Z are d-separated given a set.
    Dsep {
        file: PathBuf,
        x: String,
        z: String,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Identify P(Z | do(X)) by the backdoor criterion.
    Identify {
        file: PathBuf,
        x: String,
        z: String,
        #[arg(long = "max-set")]
        max_set: Option<usize>,
    },
    /// Check the selection backdoor criterion for an adjustment set.
    Selection {
        file: PathBuf,
        x: String,
        z: String,
        #[arg(long, value_delimiter = ',')]
        adjust: Vec<String>,
    },
    /// Check whether the effect transports across a selection diagram.
    Transport {
        file: PathBuf,
        x: String,
        z: String,
        #[arg(long = "max-set")]
        max_set: Option<usize>,
    },
    /// Compare P(Z=z | do(X=x)) with P(Z=z | X=x) in the file's model.
    Quantify {
        file: PathBuf,
        /// Treatment assignment, `X=x`.
        treatment: String,
        /// Outcome event, `Z=z`.
        outcome: String,
        #[arg(long, value_delimiter = ',')]
        adjust: Vec<String>,
    },
    /// Run every query of a spec and report bias labels.
    Audit {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Human)]
        format: FormatArg,
        /// Exit with status 1 when any bias label is reported.
        #[arg(long = "fail-on-bias")]
        fail_on_bias: bool,
    },
    /// Work with the bundled fixture corpus.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Subcommand, Debug)]
enum FixturesAction {
    /// Check every fixture against its expected verdicts.
    Run {
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Human,
    Machine,
}

/// Runs one invocation; `args` includes the program name. Returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Reads and parses a spec, tagging errors with the file name.
fn load(path: &PathBuf) -> Result<AuditSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_spec(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn node(spec: &AuditSpec, name: &str) -> Result<NodeId, String> {
    if spec.graph.contains(name) {
        Ok(NodeId::from(name))
    } else {
        Err(Error::UnknownNode(name.to_owned()).to_string())
    }
}

fn node_list(spec: &AuditSpec, names: &[String]) -> Result<NodeSet, String> {
    names.iter().map(|n| node(spec, n.trim())).collect()
}

fn assignment(s: &str) -> Result<(&str, &str), String> {
    s.split_once('=')
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| format!("expected VAR=value, got `{s}`"))
}

/// Runs a single query against the spec and prints its block.
fn single(
    mut spec: AuditSpec,
    query: AuditQuery,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    spec.queries = vec![query];
    let report = classify_biases(&spec);
    let outcome = &report.verdicts[0];
    if let Some(e) = &outcome.error {
        let _ = writeln!(err, "error: {e}");
        return Ok(EXIT_INPUT);
    }
    let _ = write!(out, "{}", render_outcome(outcome));
    Ok(EXIT_OK)
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    match cmd {
        Command::Dsep { file, x, z, given } => {
            let spec = load(&file)?;
            let xs = NodeSet::from([node(&spec, &x)?]);
            let zs = NodeSet::from([node(&spec, &z)?]);
            let given = node_list(&spec, &given)?;
            let sep = d_separated(&spec.graph, &xs, &zs, &given).map_err(|e| e.to_string())?;
            let _ = writeln!(out, "d-separated: {}", sep.separated);
            if let Some(w) = sep.witness {
                let _ = writeln!(out, "open path: {w}");
            }
            Ok(EXIT_OK)
        }
        Command::Identify { file, x, z, max_set } => {
            let spec = load(&file)?;
            let query = AuditQuery {
                x: node(&spec, &x)?,
                z: node(&spec, &z)?,
                adjustment: None,
                max_set,
                mode: QueryMode::Identify,
                context: None,
            };
            single(spec, query, out, err)
        }
        Command::Selection { file, x, z, adjust } => {
            let spec = load(&file)?;
            let query = AuditQuery {
                x: node(&spec, &x)?,
                z: node(&spec, &z)?,
                adjustment: Some(node_list(&spec, &adjust)?),
                max_set: None,
                mode: QueryMode::Selection { measured: None, population: None },
                context: None,
            };
            single(spec, query, out, err)
        }
        Command::Transport { file, x, z, max_set } => {
            let spec = load(&file)?;
            let query = AuditQuery {
                x: node(&spec, &x)?,
                z: node(&spec, &z)?,
                adjustment: None,
                max_set,
                mode: QueryMode::Transport,
                context: None,
            };
            single(spec, query, out, err)
        }
        Command::Quantify { file, treatment, outcome, adjust } => {
            let spec = load(&file)?;
            let (x, xv) = assignment(&treatment)?;
            let (z, zv) = assignment(&outcome)?;
            let query = AuditQuery {
                x: node(&spec, x)?,
                z: node(&spec, z)?,
                adjustment: if adjust.is_empty() { None } else { Some(node_list(&spec, &adjust)?) },
                max_set: None,
                mode: QueryMode::Quantify { x_value: xv.to_owned(), z_value: zv.to_owned() },
                context: None,
            };
            single(spec, query, out, err)
        }
        Command::Audit { file, format, fail_on_bias } => {
            let spec = load(&file)?;
            let report = classify_biases(&spec);
            let format = match format {
                FormatArg::Human => Format::Human,
                FormatArg::Machine => Format::Machine,
            };
            let text = render_report(&report, format);
            let _ = write!(out, "{text}");
            if format == Format::Machine {
                let _ = writeln!(out);
            }
            if let Err(e) = report.check_invariants() {
                let _ = writeln!(err, "internal error: {e}");
                return Ok(EXIT_INTERNAL);
            }
            for o in report.verdicts.iter().filter(|o| o.error.is_some()) {
                let _ = writeln!(err, "query {} ({}): {}", o.index + 1, o.query, o.error.as_deref().unwrap_or_default());
            }
            if report.has_errors() {
                return Ok(EXIT_INPUT);
            }
            if fail_on_bias && !report.bias_labels.is_empty() {
                return Ok(EXIT_BIAS);
            }
            Ok(EXIT_OK)
        }
        Command::Fixtures { action: FixturesAction::Run { only } } => {
            let results = audit::corpus::run_all(only.as_deref()).map_err(|e| e.to_string())?;
            let mut failed = 0;
            for r in &results {
                if r.passed() {
                    let _ = writeln!(out, "PASS {}", r.name);
                } else {
                    failed += 1;
                    let _ = writeln!(out, "FAIL {}", r.name);
                    for f in &r.failures {
                        let _ = writeln!(out, "     {f}");
                    }
                }
            }
            let _ = writeln!(out, "{}/{} fixtures passed", results.len() - failed, results.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_BIAS })
        }
    }
}
