use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use nomwyv::parser::SourceFile;
use nomwyv::pipeline::{
    render_check_json, render_check_text, render_run_json, render_run_text, render_subtype_text,
    run_check, run_check_dir, run_fuzz_command, run_graph, run_program, run_subtype, CheckOutcome,
    GraphKind, OutputFormat, PipelineOptions, EXIT_PARSE,
};

#[derive(Parser)]
#[command(
    name = "nomwyv",
    about = "Typechecker and interpreter for a nominal, decidable dependent object calculus",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sdg,
    Nominal,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, check separation, typecheck, and verify asserts.
    Check {
        /// A `.nwyv` file, or a directory of them.
        path: PathBuf,
        /// Disable the expansion pre-pass on subtype obligations.
        #[arg(long)]
        no_expand: bool,
        /// Unfolding budget for avoidance.
        #[arg(long, default_value_t = 16)]
        avoid_fuel: u32,
        /// Print failing subtype derivations.
        #[arg(long)]
        trace: bool,
        /// Prepend declarations from a prelude file.
        #[arg(long)]
        prelude: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Answer a single subtype query against a file's declarations.
    Subtype {
        file: PathBuf,
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
        #[arg(long)]
        no_expand: bool,
        #[arg(long)]
        trace: bool,
        /// Also report the energy measures of both sides.
        #[arg(long)]
        explain: bool,
        #[arg(long)]
        prelude: Option<PathBuf>,
    },
    /// Check a program and evaluate its main expression.
    #[command(group(ArgGroup::new("budget").required(true).args(["fuel", "no_fuel"])))]
    Run {
        file: PathBuf,
        /// Evaluation depth budget.
        #[arg(long)]
        fuel: Option<u64>,
        /// Evaluate without a budget (diverging programs diverge).
        #[arg(long)]
        no_fuel: bool,
        #[arg(long)]
        no_expand: bool,
        #[arg(long, default_value_t = 16)]
        avoid_fuel: u32,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        prelude: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Export the subtype dependency graph or the nominal subtyping graph
    /// in Graphviz DOT form.
    Graph {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Sdg)]
        kind: Kind,
        #[arg(long)]
        prelude: Option<PathBuf>,
    },
    /// Generate separated programs and compare the subtype engine with the
    /// bounded oracle.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
    },
}

fn colorize(text: String) -> String {
    let want_color = match std::env::var("NOMWYV_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stdout().is_terminal(),
    };
    if !want_color {
        return text;
    }
    text.replace(": error[", ": \x1b[31merror\x1b[0m[")
        .replace(": warning[", ": \x1b[33mwarning\x1b[0m[")
}

fn options(
    no_expand: bool,
    avoid_fuel: u32,
    trace: bool,
    prelude: Option<PathBuf>,
    eval_fuel: Option<u64>,
) -> PipelineOptions {
    PipelineOptions {
        expansion: !no_expand,
        avoid_fuel,
        eval_fuel,
        trace,
        prelude,
    }
}

fn emit(outcome: &CheckOutcome, file: &str, trace: bool, format: OutputFormat) {
    match format {
        OutputFormat::Text => print!("{}", colorize(render_check_text(outcome, file, trace))),
        OutputFormat::Json => println!("{}", render_check_json(outcome, file)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check {
            path,
            no_expand,
            avoid_fuel,
            trace,
            prelude,
            format,
        } => {
            let opts = options(no_expand, avoid_fuel, trace, prelude, None);
            if path.is_dir() {
                let (text, code) = run_check_dir(&path, &opts);
                print!("{}", colorize(text));
                code
            } else {
                match SourceFile::read(&path) {
                    Ok(src) => {
                        let outcome = run_check(&src, &opts);
                        let fmt = match format {
                            Format::Text => OutputFormat::Text,
                            Format::Json => OutputFormat::Json,
                        };
                        emit(&outcome, &src.path, trace, fmt);
                        outcome.exit_code()
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        EXIT_PARSE
                    }
                }
            }
        }
        Command::Subtype {
            file,
            lhs,
            rhs,
            no_expand,
            trace,
            explain,
            prelude,
        } => {
            let opts = options(no_expand, 16, trace, prelude, None);
            match SourceFile::read(&file) {
                Ok(src) => {
                    let report = run_subtype(&src, &opts, &lhs, &rhs, explain);
                    print!(
                        "{}",
                        colorize(render_subtype_text(&report, &src.path, trace))
                    );
                    report.exit_code()
                }
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    EXIT_PARSE
                }
            }
        }
        Command::Run {
            file,
            fuel,
            no_fuel,
            no_expand,
            avoid_fuel,
            trace,
            prelude,
            format,
        } => {
            let eval_fuel = if no_fuel { None } else { fuel };
            let opts = options(no_expand, avoid_fuel, trace, prelude, eval_fuel);
            match SourceFile::read(&file) {
                Ok(src) => {
                    let outcome = run_program(&src, &opts);
                    match format {
                        Format::Text => {
                            print!("{}", colorize(render_run_text(&outcome, &src.path, trace)))
                        }
                        Format::Json => println!("{}", render_run_json(&outcome, &src.path)),
                    }
                    outcome.exit_code()
                }
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    EXIT_PARSE
                }
            }
        }
        Command::Graph {
            file,
            kind,
            prelude,
        } => {
            let opts = options(false, 16, false, prelude, None);
            let kind = match kind {
                Kind::Sdg => GraphKind::Sdg,
                Kind::Nominal => GraphKind::Nominal,
            };
            match SourceFile::read(&file) {
                Ok(src) => match run_graph(&src, &opts, kind) {
                    Ok(dot) => {
                        print!("{dot}");
                        0
                    }
                    Err(diags) => {
                        for d in diags {
                            eprintln!("{}", colorize(d.render(&src.path)));
                        }
                        EXIT_PARSE
                    }
                },
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    EXIT_PARSE
                }
            }
        }
        Command::Fuzz { seed, cases } => {
            let report = run_fuzz_command(seed, cases);
            println!("{}", report.render());
            if report.disagreements > 0 {
                1
            } else {
                0
            }
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
