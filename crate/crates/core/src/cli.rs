//! The `dyadic` command line: argument parsing and subcommand dispatch.
//!
//! [`run`] does all the work and returns the exit code with the text meant
//! for stdout and stderr, so the binary is a thin wrapper and tests can call
//! it directly.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{Analysis, VariableClass};
use crate::chase::{run_chase, ChaseBudget, ChaseResult};
use crate::decomposition::{decompose, DecompositionError};
use crate::model::{ConjunctiveQuery, Constant, Ontology};
use crate::parser::{
    parse_program_with, parse_query, serialize_program, ParseError, ParseOptions, Program,
};
use crate::qa::{
    cert_eval_dyadic, certain_answers_dyadic, complete_database, BoundedChaseReasoner, CReasoner,
    QaError, TerminatingChaseReasoner,
};
use crate::recognizers::{
    classify_all, has_termination_certificate, BaseClass, ClassName, UnsupportedClass,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "dyadic",
    version,
    about = "Classify, decompose, chase and query existential rule sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Chase budget: maximum number of atoms.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_atoms: Option<u64>,
    /// Chase budget: maximum level.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_level: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report membership in every supported class.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also print affected positions, variable kinds and atom splits.
        #[arg(long)]
        explain: bool,
    },
    /// Write the hg and main halves of the rule set.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        class: String,
        /// Defaults to the directory of the input file.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Chase the facts of the file with its rules.
    Chase {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Drop both budgets. Needs a termination certificate or --force.
        #[arg(long)]
        unlimited: bool,
        /// Allow --unlimited without a termination certificate.
        #[arg(long)]
        force: bool,
    },
    /// Answer a query through the dyadic decomposition.
    Answer {
        file: PathBuf,
        /// 0-based index of a query in the file, or an inline query.
        #[arg(long)]
        query: String,
        #[arg(long)]
        class: String,
        #[arg(long, value_enum, default_value_t = Oracle::Chase)]
        oracle: Oracle,
        /// Comma-separated constants; decide membership of this tuple only.
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print the database completed with the hg rules.
    Complete {
        file: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long, value_enum, default_value_t = Oracle::Chase)]
        oracle: Oracle,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    /// Unbounded chase; needs a chase-terminating class.
    Chase,
    /// Chase within the budget; fails when the budget runs out.
    Bounded,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("unsupported class {}", .0.0)]
    UnsupportedClass(#[from] UnsupportedClass),
    #[error("no termination certificate; pass --force to chase without a budget")]
    NoTerminationCertificate,
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Qa(#[from] QaError),
}

impl CliError {
    /// Name of the underlying module error.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Parse(e) => match e {
                ParseError::SyntaxError { .. } => "SyntaxError",
                ParseError::ArityMismatch { .. } => "ArityMismatch",
                ParseError::NullInInput { .. } => "NullInInput",
                ParseError::ReservedPredicate { .. } => "ReservedPredicate",
            },
            CliError::UnsupportedClass(_) => "UnsupportedClass",
            CliError::NoTerminationCertificate => "NoTerminationCertificate",
            CliError::Decomposition(e) => match e {
                DecompositionError::NotASubset(_) => "NotASubset",
                DecompositionError::NotInDyadicClass(_) => "NotInDyadicClass",
                DecompositionError::NotHeadGround(_) => "NotHeadGround",
                DecompositionError::Model(_) => "ModelError",
            },
            CliError::Qa(e) => match e {
                QaError::ReasonerInexact(_) => "ReasonerInexact",
                QaError::UnsupportedClass { .. } => "UnsupportedClass",
                QaError::NotADyadicPair { .. } => "NotADyadicPair",
                QaError::NotInDyadicClass(_) => "NotInDyadicClass",
                QaError::ReservedPredicateInQuery(_) => "ReservedPredicateInQuery",
                QaError::ArityMismatch { .. } => "ArityMismatch",
                QaError::Decomposition(_) => "DecompositionError",
            },
        }
    }

    /// 1 for usage, input and parse errors, 3 when the ontology is outside
    /// the requested dyadic class, 4 when the reasoner cannot be exact, 2
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Io { .. }
            | CliError::Parse(_)
            | CliError::UnsupportedClass(_) => 1,
            CliError::Decomposition(DecompositionError::NotInDyadicClass(_))
            | CliError::Qa(QaError::NotInDyadicClass(_)) => 3,
            CliError::Qa(QaError::ReasonerInexact(_)) => 4,
            _ => 2,
        }
    }
}

/// Exit code and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome {
                        code: 0,
                        stdout: text,
                        stderr: String::new(),
                    }
                }
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(&cli) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {}: {e}\n", e.name()),
        },
    }
}

struct Input {
    program: Program,
    hash: String,
    path: PathBuf,
}

fn read_input(path: &Path, options: ParseOptions) -> Result<Input, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))?;
    Ok(Input {
        program: parse_program_with(&text, options)?,
        hash: hex::encode(Sha256::digest(&bytes)),
        path: path.to_path_buf(),
    })
}

fn header(input: &Input) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool_version".into(), json!(TOOL_VERSION));
    m.insert("input_hash".into(), json!(input.hash));
    m
}

fn to_json(m: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn budget(cli: &Cli) -> ChaseBudget {
    let d = ChaseBudget::default();
    ChaseBudget {
        max_atoms: cli.max_atoms.map(|n| n as usize).or(d.max_atoms),
        max_level: cli.max_level.or(d.max_level),
    }
}

fn reasoner(cli: &Cli, oracle: Oracle) -> Box<dyn CReasoner> {
    match oracle {
        Oracle::Chase => Box::new(TerminatingChaseReasoner),
        Oracle::Bounded => Box::new(BoundedChaseReasoner {
            budget: budget(cli),
        }),
    }
}

fn base_class(name: &str) -> Result<BaseClass, CliError> {
    Ok(name.parse::<ClassName>()?.base())
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let relaxed = ParseOptions {
        allow_reserved: true,
    };
    match &cli.command {
        Command::Classify {
            file,
            json,
            explain,
        } => classify(&read_input(file, relaxed)?, *json, *explain),
        Command::Decompose {
            file,
            class,
            out_dir,
            json,
        } => decompose_cmd(
            &read_input(file, ParseOptions::default())?,
            base_class(class)?,
            out_dir.as_deref(),
            *json,
        ),
        Command::Chase {
            file,
            json,
            unlimited,
            force,
        } => {
            let input = read_input(file, relaxed)?;
            let budget = if *unlimited {
                if !*force && !has_termination_certificate(&input.program.ontology) {
                    return Err(CliError::NoTerminationCertificate);
                }
                ChaseBudget::unlimited()
            } else {
                budget(cli)
            };
            let result = run_chase(&input.program.database, &input.program.ontology, budget);
            Ok(chase_output(&input, &result, *json))
        }
        Command::Answer {
            file,
            query,
            class,
            oracle,
            check,
            json,
        } => {
            let input = read_input(file, ParseOptions::default())?;
            let class = base_class(class)?;
            let query = select_query(&input.program, query)?;
            let reasoner = reasoner(cli, *oracle);
            let (db, onto) = (&input.program.database, &input.program.ontology);
            let mut out = header(&input);
            out.insert("query".into(), json!(query.to_string()));
            out.insert(
                "class".into(),
                json!(ClassName::DyadicOf(class).to_string()),
            );
            out.insert("oracle".into(), json!(reasoner.name()));
            let text = match check {
                Some(check) => {
                    let tuple = parse_tuple(check);
                    let verdict =
                        cert_eval_dyadic(&query, db, onto, &tuple, class, reasoner.as_ref())?;
                    out.insert(
                        "check".into(),
                        json!(tuple.iter().map(Constant::name).collect::<Vec<_>>()),
                    );
                    out.insert("result".into(), json!(verdict));
                    format!("{verdict}\n")
                }
                None => {
                    let answers =
                        certain_answers_dyadic(&query, db, onto, class, reasoner.as_ref())?;
                    if query.is_boolean() {
                        out.insert("result".into(), json!(answers.holds()));
                        format!("{}\n", answers.holds())
                    } else {
                        let rows: Vec<Vec<&str>> = answers
                            .iter()
                            .map(|t| t.iter().map(Constant::name).collect())
                            .collect();
                        out.insert("answers".into(), json!(rows));
                        answers.to_string()
                    }
                }
            };
            Ok(if *json { to_json(out) } else { text })
        }
        Command::Complete {
            file,
            class,
            oracle,
            out,
        } => {
            let input = read_input(file, ParseOptions::default())?;
            let class = base_class(class)?;
            let pair = decompose(&input.program.ontology, class)?;
            let reasoner = reasoner(cli, *oracle);
            let done = complete_database(
                &input.program.database,
                &pair,
                class.into(),
                reasoner.as_ref(),
            )?;
            let mut text = format!(
                "% completed {} with {} added facts in {} passes\n",
                input.path.display(),
                done.added.len(),
                done.iterations
            );
            text.push_str(&serialize_program(&Program {
                database: done.d_plus,
                ..Program::default()
            }));
            match out {
                Some(path) => {
                    write_file(path, &text)?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn select_query(program: &Program, selector: &str) -> Result<ConjunctiveQuery, CliError> {
    if let Ok(i) = selector.trim().parse::<usize>() {
        return program.queries.get(i).cloned().ok_or_else(|| {
            CliError::Usage(format!(
                "query index {i} out of range ({} queries in file)",
                program.queries.len()
            ))
        });
    }
    Ok(parse_query(selector)?)
}

fn parse_tuple(text: &str) -> Vec<Constant> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            let s = s
                .strip_prefix('"')
                .and_then(|r| r.strip_suffix('"'))
                .unwrap_or(s);
            Constant::new(s)
        })
        .collect()
}

fn classify(input: &Input, as_json: bool, explain: bool) -> Result<String, CliError> {
    let onto = &input.program.ontology;
    let report = classify_all(onto);
    let analysis = Analysis::new(onto);
    if as_json {
        let mut out = header(input);
        let classes: Map<String, Value> = report
            .iter()
            .map(|(c, v)| {
                (
                    c.to_string(),
                    serde_json::to_value(v).expect("verdicts serialize"),
                )
            })
            .collect();
        out.insert("classes".into(), Value::Object(classes));
        if explain {
            out.insert("explain".into(), explain_json(&analysis));
        }
        return Ok(to_json(out));
    }
    let mut s = String::new();
    for (c, v) in &report {
        match &v.witness {
            Some(w) if !v.member => writeln!(s, "{c}: no ({w})"),
            _ => writeln!(s, "{c}: {}", if v.member { "yes" } else { "no" }),
        }
        .expect("writing to a String");
    }
    if explain {
        s.push_str(&explain_text(&analysis));
    }
    Ok(s)
}

fn var_list<'a>(vs: impl IntoIterator<Item = &'a crate::model::Variable>) -> Vec<String> {
    vs.into_iter().map(ToString::to_string).collect()
}

fn kinds(analysis: &Analysis<'_>, rule: usize, pick: fn(&VariableClass) -> bool) -> Vec<String> {
    var_list(
        analysis
            .classes(rule)
            .iter()
            .filter(|(_, k)| pick(k))
            .map(|(v, _)| v),
    )
}

fn explain_json(analysis: &Analysis<'_>) -> Value {
    let affected: Map<String, Value> = analysis
        .affected()
        .affected()
        .map(|(p, s)| (p.to_string(), json!(var_list(s))))
        .collect();
    let rules: Vec<Value> = analysis
        .ontology()
        .rules()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let split = analysis.split(i);
            json!({
                "id": r.id(),
                "rule": r.to_string(),
                "harmless": kinds(analysis, i, VariableClass::is_harmless),
                "harmful": kinds(analysis, i, |k| k.is_harmful() && !k.is_dangerous()),
                "dangerous": kinds(analysis, i, VariableClass::is_dangerous),
                "p_atoms": split.p_atoms.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "s_atoms": split.s_atoms.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "bridge": var_list(analysis.bridge(i)),
            })
        })
        .collect();
    json!({ "affected": affected, "rules": rules })
}

fn explain_text(analysis: &Analysis<'_>) -> String {
    let mut s = String::from("\naffected positions:\n");
    for (p, set) in analysis.affected().affected() {
        let _ = writeln!(s, "  {p}: {{{}}}", var_list(set).join(","));
    }
    for (i, r) in analysis.ontology().rules().iter().enumerate() {
        let split = analysis.split(i);
        let atoms = |v: &[crate::model::Atom]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "{}: {r}", r.id());
        let _ = writeln!(
            s,
            "  harmless: {}",
            kinds(analysis, i, VariableClass::is_harmless).join(",")
        );
        let _ = writeln!(
            s,
            "  harmful: {}",
            kinds(analysis, i, |k| k.is_harmful() && !k.is_dangerous()).join(",")
        );
        let _ = writeln!(
            s,
            "  dangerous: {}",
            kinds(analysis, i, VariableClass::is_dangerous).join(",")
        );
        let _ = writeln!(s, "  p-atoms: {}", atoms(&split.p_atoms));
        let _ = writeln!(s, "  s-atoms: {}", atoms(&split.s_atoms));
        let _ = writeln!(s, "  bridge: {}", var_list(analysis.bridge(i)).join(","));
    }
    s
}

fn ontology_file(ontology: &Ontology) -> String {
    serialize_program(&Program {
        ontology: ontology.clone(),
        ..Program::default()
    })
}

fn decompose_cmd(
    input: &Input,
    class: BaseClass,
    out_dir: Option<&Path>,
    as_json: bool,
) -> Result<String, CliError> {
    let pair = decompose(&input.program.ontology, class)?;
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => input
            .path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    let stem = input
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let hg_path = dir.join(format!("{stem}.hg.dtgd"));
    let main_path = dir.join(format!("{stem}.main.dtgd"));
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    write_file(&hg_path, &ontology_file(&pair.sigma_hg))?;
    write_file(&main_path, &ontology_file(&pair.sigma_c))?;

    let mut manifest = header(input);
    manifest.insert(
        "class".into(),
        json!(ClassName::DyadicOf(class).to_string()),
    );
    manifest.insert("hg".into(), json!(file_name(&hg_path)));
    manifest.insert("main".into(), json!(file_name(&main_path)));
    let aux: Map<String, Value> = pair
        .aux_registry
        .iter()
        .map(|(rule, p)| {
            (
                rule.clone(),
                json!({ "predicate": p.name(), "arity": p.arity() }),
            )
        })
        .collect();
    manifest.insert("aux_registry".into(), Value::Object(aux));
    let manifest = to_json(manifest);
    write_file(&manifest_path, &manifest)?;

    Ok(if as_json {
        manifest
    } else {
        format!(
            "{} hg rules -> {}\n{} main rules -> {}\nmanifest -> {}\n",
            pair.sigma_hg.len(),
            hg_path.display(),
            pair.sigma_c.len(),
            main_path.display(),
            manifest_path.display()
        )
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn chase_output(input: &Input, result: &ChaseResult, as_json: bool) -> String {
    if as_json {
        let mut out = header(input);
        let (atoms, levels): (Vec<String>, Vec<u32>) = result
            .atoms_with_levels()
            .map(|(a, l)| (a.to_string(), l))
            .unzip();
        out.insert("atoms".into(), json!(atoms));
        out.insert("levels".into(), json!(levels));
        out.insert("status".into(), json!(result.status().to_string()));
        return to_json(out);
    }
    let mut s = String::new();
    for (a, l) in result.atoms_with_levels() {
        let _ = writeln!(s, "{a}. % level {l}");
    }
    let _ = writeln!(s, "% status: {}", result.status());
    s
}
