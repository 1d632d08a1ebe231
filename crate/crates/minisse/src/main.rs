//! `minisse` — find and classify typestate errors in MiniC programs.
//!
//! Thin argument layer over [`minisse::driver`]: each subcommand builds a
//! [`RunConfig`], runs the pipeline, prints verdicts or the requested view
//! on stdout, and reserves stderr for warnings and debug output. Exit
//! codes: 0 completed without findings, 1 at least one confirmed BUG,
//! 2 pipeline error, 3 inconclusive (TO/ME) without a BUG.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use minisse::driver::{self, Format, Mode, RunConfig, RunOutput};
use minisse::symexec::DEFAULT_SOLVER_BUDGET;

#[derive(Parser)]
#[command(
    name = "minisse",
    version,
    about = "Slice-then-execute checker for state-machine errors in MiniC"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find machine errors reachable from the entry, bounded and sound
    /// per reported bug (every BUG replays concretely).
    Find {
        /// MiniC source file.
        #[arg(long)]
        source: PathBuf,
        /// Machine specification file.
        #[arg(long)]
        machine: PathBuf,
        /// Entry function to analyze from.
        #[arg(long)]
        entry: String,
        /// Body entries allowed per loop before a path is cut.
        #[arg(long, default_value_t = 2)]
        loop_bound: u32,
        /// Bit width of `int` (8, 16, or 32).
        #[arg(long, default_value_t = 32, value_parser = parse_width)]
        int_width: u32,
        /// Cells in each synthesized points-to region.
        #[arg(long, default_value_t = 16)]
        ptr_elems: u32,
        /// Work units granted per constraint-solver query.
        #[arg(long, default_value_t = DEFAULT_SOLVER_BUDGET)]
        solver_budget: u64,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Write the exploration tree as DOT to stderr.
        #[arg(long)]
        dump_tree: bool,
    },
    /// Classify candidate error reports as BUG, FP, TO, or ME by
    /// unbounded exploration of the report-specific slice.
    Classify {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        entry: String,
        /// Candidate reports: JSON lines or a JSON array, with `machine`,
        /// `target`, and `error_state` (as `minisse metal` emits).
        #[arg(long)]
        report: PathBuf,
        /// Bit width of `int` (8, 16, or 32).
        #[arg(long, default_value_t = 32, value_parser = parse_width)]
        int_width: u32,
        /// Cells in each synthesized points-to region.
        #[arg(long, default_value_t = 16)]
        ptr_elems: u32,
        /// Work units granted per constraint-solver query.
        #[arg(long, default_value_t = DEFAULT_SOLVER_BUDGET)]
        solver_budget: u64,
        /// Wall-clock limit in seconds.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Write the exploration tree as DOT to stderr.
        #[arg(long)]
        dump_tree: bool,
    },
    /// Print the flow-insensitive state-set over-approximation per source
    /// line, then its candidate reports as JSON lines.
    Metal {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        entry: String,
    },
    /// Print the program sliced to the machine's checks.
    Slice {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        entry: String,
        /// Restrict to these tracked objects (repeatable).
        #[arg(long = "target")]
        targets: Vec<String>,
    },
    /// Print the Andersen points-to map.
    Pointsto {
        #[arg(long)]
        source: PathBuf,
    },
    /// Print the program with machine state variables and fires inserted.
    Instrument {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        /// Restrict to these tracked objects (repeatable).
        #[arg(long = "target")]
        targets: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Text => Format::Text,
        }
    }
}

fn parse_width(s: &str) -> Result<u32, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        "32" => Ok(32),
        _ => Err("int width must be 8, 16, or 32".into()),
    }
}

fn config_from(cmd: Cmd) -> RunConfig {
    match cmd {
        Cmd::Find {
            source,
            machine,
            entry,
            loop_bound,
            int_width,
            ptr_elems,
            solver_budget,
            timeout,
            format,
            dump_tree,
        } => RunConfig {
            source,
            machine,
            entry: Some(entry),
            mode: Mode::Find,
            loop_bound,
            int_width,
            ptr_elems,
            solver_budget,
            timeout: Duration::from_secs(timeout),
            format: format.into(),
            dump_tree,
            ..RunConfig::default()
        },
        Cmd::Classify {
            source,
            machine,
            entry,
            report,
            int_width,
            ptr_elems,
            solver_budget,
            timeout,
            format,
            dump_tree,
        } => RunConfig {
            source,
            machine,
            entry: Some(entry),
            mode: Mode::Classify { report },
            int_width,
            ptr_elems,
            solver_budget,
            timeout: Duration::from_secs(timeout),
            format: format.into(),
            dump_tree,
            ..RunConfig::default()
        },
        Cmd::Metal { source, machine, entry } => RunConfig {
            source,
            machine,
            entry: Some(entry),
            mode: Mode::Metal,
            ..RunConfig::default()
        },
        Cmd::Slice { source, machine, entry, targets } => RunConfig {
            source,
            machine,
            entry: Some(entry),
            mode: Mode::Slice { targets },
            ..RunConfig::default()
        },
        Cmd::Pointsto { source } => RunConfig {
            source,
            mode: Mode::Pointsto,
            ..RunConfig::default()
        },
        Cmd::Instrument { source, machine, targets } => RunConfig {
            source,
            machine,
            mode: Mode::Instrument { targets },
            ..RunConfig::default()
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = config_from(cli.cmd);
    match driver::run(&config) {
        Ok(RunOutput::Verdicts(report)) => {
            for w in &report.summary.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(dot) = &report.tree_dot {
                eprintln!("{dot}");
            }
            print!("{}", driver::emit(&report, config.format));
            ExitCode::from(driver::exit_code(&report) as u8)
        }
        Ok(RunOutput::Text { body, warnings }) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            print!("{body}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("minisse: {e}");
            ExitCode::from(2)
        }
    }
}
