//! `wsub`: subset extraction and validation for wikibase-style dumps.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, malformed dumps under
//! `--fail-fast`), 2 usage or configuration errors (bad flags, unparsable
//! schemas or matcher files, unknown labels), 3 superstep budget exceeded.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wsub::dumpio::{
    document_line, graph_from_docs, maybe_gzip, write_graph, DumpFormat, DumpReader,
    EntityDocument, ErrorPolicy,
};
use wsub::pregel::{pregel_subset, pregel_validate, PregelError, PregelOptions};
use wsub::shexmatch::shex_match_stream;
use wsub::slurp::{slurp_subset, SlurpOptions};
use wsub::subsets::{entity_statement_matches, parse_matchers, MatchExpression};
use wsub::wgraph::{Datatype, EntityId, Statement, WikibaseGraph};
use wsub::wshex::{maximal_assignment, parse_schema, ShapeLabel, WShExSchema};

#[derive(Parser)]
#[command(
    name = "wsub",
    version,
    about = "Subset and validate wikibase-style dumps"
)]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Print a one-line JSON run summary to stderr
    #[arg(long, global = true)]
    summary: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a schema file and list its labels
    ParseSchema {
        /// Schema file (`-` for stdin)
        schema: String,
    },
    /// Validate a dump against a schema and report per-node verdicts
    Validate {
        /// Schema file
        #[arg(long)]
        schema: PathBuf,
        /// Shape label to start from (defaults to the schema's `Start =`)
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_enum, default_value_t = Engine::Recursive)]
        engine: Engine,
        #[arg(long, value_enum, default_value_t = Format::Wbjl)]
        format: Format,
        /// Stop at the first malformed dump line instead of skipping it
        #[arg(long)]
        fail_fast: bool,
        /// Superstep budget for the message-passing engine
        #[arg(long)]
        max_supersteps: Option<usize>,
        /// Input dump (`-` for stdin; gzip detected automatically)
        #[arg(default_value = "-")]
        input: String,
    },
    /// Extract a subset of a dump
    Subset {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Entity id list file for `--mode entities` (one id per line)
        #[arg(long)]
        ids: Option<PathBuf>,
        /// Matcher file for `--mode match` (one `name(arg,..)` per line)
        #[arg(long)]
        matchers: Option<PathBuf>,
        /// Datatype given to bare numeric literals in matcher files
        #[arg(long, default_value = "integer")]
        literal_datatype: String,
        /// Schema file for the schema-driven modes
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Shape label to start from (defaults to the schema's `Start =`)
        #[arg(long)]
        start: Option<String>,
        /// Slurp every label of the schema instead of one start label
        #[arg(long)]
        all_shapes: bool,
        /// Keep everything the slurp search visited, not just what the
        /// accepted derivation consumed
        #[arg(long)]
        visited: bool,
        /// Emit matched statements with their full qualifier sets
        #[arg(long)]
        full_qualifiers: bool,
        #[arg(long, value_enum, default_value_t = Format::Wbjl)]
        format: Format,
        /// Stop at the first malformed dump line instead of skipping it
        #[arg(long)]
        fail_fast: bool,
        /// Superstep budget for `--mode pregel`
        #[arg(long)]
        max_supersteps: Option<usize>,
        /// Output file (`-` for stdout)
        #[arg(short, long, default_value = "-")]
        output: String,
        /// Input dump (`-` for stdin; gzip detected automatically)
        #[arg(default_value = "-")]
        input: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    /// Whole-graph fixpoint evaluation
    Recursive,
    /// Vertex-centric message passing
    Pregel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Statements mentioning listed entities
    Entities,
    /// Statements accepted by a matcher file
    Match,
    /// Entities whose own statements match a reference-erased schema
    ShexMatch,
    /// Statements consumed by conforming derivations
    Slurp,
    /// Statements consumed by message-passing validation
    Pregel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Wbjl,
    WikidataJson,
}

impl From<Format> for DumpFormat {
    fn from(f: Format) -> DumpFormat {
        match f {
            Format::Wbjl => DumpFormat::Wbjl,
            Format::WikidataJson => DumpFormat::WikidataJson,
        }
    }
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn runtime(e: impl fmt::Display) -> Self {
        CliError {
            code: 1,
            msg: e.to_string(),
        }
    }

    fn usage(e: impl fmt::Display) -> Self {
        CliError {
            code: 2,
            msg: e.to_string(),
        }
    }

    fn budget(e: impl fmt::Display) -> Self {
        CliError {
            code: 3,
            msg: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WSUB_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if cli.workers > 0 {
        // Ignore "already initialized": only possible in in-process tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    let raw: Box<dyn Read> = if path == "-" {
        Box::new(io::stdin())
    } else {
        Box::new(File::open(path).map_err(|e| CliError::runtime(format!("{path}: {e}")))?)
    };
    let plain = maybe_gzip(raw).map_err(CliError::runtime)?;
    Ok(Box::new(BufReader::new(plain)))
}

fn open_output(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let f = File::create(path).map_err(|e| CliError::runtime(format!("{path}: {e}")))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn load_schema(path: &Path) -> Result<WShExSchema, CliError> {
    let text = read_text(path)?;
    parse_schema(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Resolve the label to start from: the flag wins over the schema's
/// `Start =` declaration.
fn resolve_start(flag: &Option<String>, schema: &WShExSchema) -> Result<ShapeLabel, CliError> {
    let label = match flag {
        Some(s) => ShapeLabel::new(s.as_str()),
        None => schema.start().cloned().ok_or_else(|| {
            CliError::usage("no start label: pass --start or declare `Start =` in the schema")
        })?,
    };
    if !schema.contains(&label) {
        return Err(CliError::usage(format!(
            "start label {label} is not declared in the schema"
        )));
    }
    Ok(label)
}

fn policy(fail_fast: bool) -> ErrorPolicy {
    if fail_fast {
        ErrorPolicy::Fail
    } else {
        ErrorPolicy::Skip
    }
}

fn load_graph(
    input: &str,
    format: DumpFormat,
    policy: ErrorPolicy,
) -> Result<(WikibaseGraph, u64), CliError> {
    let reader = open_input(input)?;
    let mut docs = Vec::new();
    for doc in DumpReader::new(reader, format, policy) {
        docs.push(doc.map_err(CliError::runtime)?);
    }
    let read = docs.len() as u64;
    Ok((graph_from_docs(docs), read))
}

fn emit_summary(enabled: bool, value: serde_json::Value) {
    if enabled {
        eprintln!("{value}");
    }
}

fn pregel_cli_error(e: PregelError) -> CliError {
    match e {
        PregelError::Budget { .. } => CliError::budget(e),
        _ => CliError::usage(e),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ParseSchema { schema } => {
            let text = if schema == "-" {
                let mut buf = String::new();
                io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(CliError::runtime)?;
                buf
            } else {
                read_text(Path::new(&schema))?
            };
            let parsed =
                parse_schema(&text).map_err(|e| CliError::usage(format!("{schema}: {e}")))?;
            let mut out = io::stdout().lock();
            if let Some(start) = parsed.start() {
                writeln!(out, "start\t{start}").map_err(CliError::runtime)?;
            }
            for l in parsed.labels() {
                writeln!(out, "label\t{l}").map_err(CliError::runtime)?;
            }
            emit_summary(
                cli.summary,
                serde_json::json!({
                    "labels": parsed.labels().len(),
                    "start": parsed.start().map(|l| l.to_string()),
                }),
            );
            Ok(())
        }
        Command::Validate {
            schema,
            start,
            engine,
            format,
            fail_fast,
            max_supersteps,
            input,
        } => {
            let schema = load_schema(&schema)?;
            let (g, entities_read) = load_graph(&input, format.into(), policy(fail_fast))?;
            let mut out = io::stdout().lock();
            match engine {
                Engine::Recursive => {
                    let tau = maximal_assignment(&g, &schema);
                    let filter = match &start {
                        Some(s) => Some(resolve_start(&Some(s.clone()), &schema)?),
                        None => None,
                    };
                    let mut pairs = 0u64;
                    for (n, l) in &tau {
                        if filter.as_ref().is_some_and(|f| f != l) {
                            continue;
                        }
                        pairs += 1;
                        writeln!(out, "{n}\t{l}").map_err(CliError::runtime)?;
                    }
                    emit_summary(
                        cli.summary,
                        serde_json::json!({
                            "engine": "recursive",
                            "entities_read": entities_read,
                            "nodes": g.entity_nodes().len(),
                            "conforming_pairs": pairs,
                        }),
                    );
                }
                Engine::Pregel => {
                    let start = resolve_start(&start, &schema)?;
                    let opts = PregelOptions {
                        max_supersteps,
                        capture_trace: false,
                    };
                    let outcome =
                        pregel_validate(&g, &schema, &start, &opts).map_err(pregel_cli_error)?;
                    let mut ok = 0u64;
                    for ((n, l), s) in &outcome.statuses {
                        if s.kind() == "ok" {
                            ok += 1;
                        }
                        writeln!(out, "{n}\t{l}\t{}", s.kind()).map_err(CliError::runtime)?;
                    }
                    emit_summary(
                        cli.summary,
                        serde_json::json!({
                            "engine": "pregel",
                            "entities_read": entities_read,
                            "nodes": g.entity_nodes().len(),
                            "supersteps": outcome.supersteps,
                            "ok_pairs": ok,
                        }),
                    );
                }
            }
            Ok(())
        }
        Command::Subset {
            mode,
            ids,
            matchers,
            literal_datatype,
            schema,
            start,
            all_shapes,
            visited,
            full_qualifiers,
            format,
            fail_fast,
            max_supersteps,
            output,
            input,
        } => {
            let format: DumpFormat = format.into();
            let policy = policy(fail_fast);
            let need_schema = || -> Result<WShExSchema, CliError> {
                let path = schema
                    .as_ref()
                    .ok_or_else(|| CliError::usage("this mode needs --schema"))?;
                load_schema(path)
            };
            match mode {
                Mode::Entities => {
                    let path = ids
                        .as_ref()
                        .ok_or_else(|| CliError::usage("--mode entities needs --ids"))?;
                    let entities = parse_id_file(&read_text(path)?)
                        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                    stream_filter(
                        &input,
                        &output,
                        format,
                        policy,
                        cli.summary,
                        "entities",
                        |s| entity_statement_matches(s, &entities),
                    )
                }
                Mode::Match => {
                    let path = matchers
                        .as_ref()
                        .ok_or_else(|| CliError::usage("--mode match needs --matchers"))?;
                    let dt = parse_datatype(&literal_datatype)?;
                    let expr: MatchExpression = parse_matchers(&read_text(path)?, dt)
                        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                    stream_filter(&input, &output, format, policy, cli.summary, "match", |s| {
                        expr.matches(s)
                    })
                }
                Mode::ShexMatch => {
                    let schema = need_schema()?;
                    let reader = open_input(&input)?;
                    let mut out = open_output(&output)?;
                    let docs = DumpReader::new(reader, format, policy)
                        .map(|r| r.map_err(CliError::runtime));
                    let summary = shex_match_stream(docs, &schema, |doc| {
                        out.write_all(document_line(&doc).as_bytes())
                            .and_then(|()| out.write_all(b"\n"))
                            .map_err(CliError::runtime)
                    })?;
                    out.flush().map_err(CliError::runtime)?;
                    let by_label: serde_json::Map<String, serde_json::Value> = summary
                        .matched_by_label
                        .iter()
                        .map(|(l, n)| (l.to_string(), (*n).into()))
                        .collect();
                    emit_summary(
                        cli.summary,
                        serde_json::json!({
                            "mode": "shex-match",
                            "entities_read": summary.entities_read,
                            "entities_matched": summary.entities_matched,
                            "statements_emitted": summary.statements_emitted,
                            "matched_by_label": by_label,
                        }),
                    );
                    Ok(())
                }
                Mode::Slurp => {
                    let schema = need_schema()?;
                    let labels: Vec<ShapeLabel> = if all_shapes {
                        schema.labels().to_vec()
                    } else {
                        vec![resolve_start(&start, &schema)?]
                    };
                    let (g, entities_read) = load_graph(&input, format, policy)?;
                    let opts = SlurpOptions {
                        visited,
                        full_qualifiers,
                    };
                    let subset =
                        slurp_subset(&g, &schema, &labels, opts).map_err(CliError::usage)?;
                    let mut out = open_output(&output)?;
                    write_graph(&subset.graph, &mut out).map_err(CliError::runtime)?;
                    out.flush().map_err(CliError::runtime)?;
                    emit_summary(
                        cli.summary,
                        serde_json::json!({
                            "mode": "slurp",
                            "entities_read": entities_read,
                            "nodes": subset.nodes.len(),
                            "statements": subset.graph.statements().len(),
                        }),
                    );
                    Ok(())
                }
                Mode::Pregel => {
                    let schema = need_schema()?;
                    let start = resolve_start(&start, &schema)?;
                    let (g, entities_read) = load_graph(&input, format, policy)?;
                    let opts = PregelOptions {
                        max_supersteps,
                        capture_trace: false,
                    };
                    let (subset, outcome) =
                        pregel_subset(&g, &schema, &start, &opts).map_err(pregel_cli_error)?;
                    let mut out = open_output(&output)?;
                    write_graph(&subset.graph, &mut out).map_err(CliError::runtime)?;
                    out.flush().map_err(CliError::runtime)?;
                    emit_summary(
                        cli.summary,
                        serde_json::json!({
                            "mode": "pregel",
                            "entities_read": entities_read,
                            "supersteps": outcome.supersteps,
                            "ok_nodes": subset.ok_nodes.len(),
                            "statements": subset.graph.statements().len(),
                        }),
                    );
                    Ok(())
                }
            }
        }
    }
}

/// One entity id per line; `#` comments and blank lines ignored.
fn parse_id_file(text: &str) -> Result<BTreeSet<EntityId>, String> {
    let mut out = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let id = line
            .parse::<EntityId>()
            .map_err(|e| format!("line {}: {e}", idx + 1))?;
        out.insert(id);
    }
    Ok(out)
}

fn parse_datatype(tag: &str) -> Result<Datatype, CliError> {
    let dt = Datatype::from_tag(tag);
    if dt.as_str() != tag {
        return Err(CliError::usage(format!("unknown datatype tag `{tag}`")));
    }
    Ok(dt)
}

/// Single-pass statement filter: each document is trimmed to its selected
/// statements and emitted when any survive. Memory use is one document.
fn stream_filter(
    input: &str,
    output: &str,
    format: DumpFormat,
    policy: ErrorPolicy,
    summary: bool,
    mode: &str,
    keep: impl Fn(&Statement) -> bool,
) -> Result<(), CliError> {
    let reader = open_input(input)?;
    let mut out = open_output(output)?;
    let mut entities_read = 0u64;
    let mut entities_emitted = 0u64;
    let mut statements_emitted = 0u64;
    for doc in DumpReader::new(reader, format, policy) {
        let doc = doc.map_err(CliError::runtime)?;
        entities_read += 1;
        let kept: Vec<Statement> = doc.statements.iter().filter(|s| keep(s)).cloned().collect();
        if kept.is_empty() {
            continue;
        }
        entities_emitted += 1;
        statements_emitted += kept.len() as u64;
        let trimmed = EntityDocument::new(doc.id, kept);
        out.write_all(document_line(&trimmed).as_bytes())
            .and_then(|()| out.write_all(b"\n"))
            .map_err(CliError::runtime)?;
    }
    out.flush().map_err(CliError::runtime)?;
    emit_summary(
        summary,
        serde_json::json!({
            "mode": mode,
            "entities_read": entities_read,
            "entities_emitted": entities_emitted,
            "statements_emitted": statements_emitted,
        }),
    );
    Ok(())
}
