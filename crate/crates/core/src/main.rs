use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use semtrace_core::retrieval::LinkSource;
use semtrace_core::service::api::{self, ReviewRequest, RunRequest, SemanticQuery};
use semtrace_core::service::http::search_request_from_query;
use semtrace_core::service::{to_json, Config, IngestRequest, ServiceError, Store};
use semtrace_core::textindex::DocKind;
use semtrace_core::{ExpansionPolicy, Ontology};

#[derive(Parser)]
#[command(
    name = "semtrace",
    version,
    about = "Semantic analysis of railway test scripts, logs and requirements"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory; overrides the config file and SEMTRACE_DATA_DIR.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect an ontology file or the store's ontology.
    #[command(subcommand)]
    Ontology(OntologyCommand),
    /// Index, annotate and store documents (files or directories).
    Ingest(IngestArgs),
    /// Recognize entities and infer triples in a text (`-` for stdin).
    Annotate { file: Option<PathBuf> },
    /// Run a script against the mock system and print its log.
    RunScript(RunArgs),
    /// Full-text search with Solr-style parameters.
    Search(SearchArgs),
    /// Expand a concept, or a `subject predicate object` pattern.
    Expand {
        #[arg(num_args = 1..=3, required = true)]
        terms: Vec<String>,
        #[arg(long)]
        policy: Option<ExpansionPolicy>,
    },
    /// Documents whose triples match the expanded pattern (`?` is a wildcard).
    SemanticSearch {
        subject: String,
        predicate: String,
        object: String,
        #[arg(long)]
        policy: Option<ExpansionPolicy>,
        /// requirement, test, log or a single document kind.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Failed logs most similar to a failed log.
    Similar {
        log_id: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Requirement-by-test traceability matrix as CSV.
    Trace(TraceArgs),
    /// Mark a traceability cell for review.
    Review {
        requirement: String,
        test: String,
        /// Remove the mark instead.
        #[arg(long)]
        clear: bool,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Subcommand)]
enum OntologyCommand {
    Validate { file: Option<PathBuf> },
    Tree { file: Option<PathBuf> },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Document kind; inferred from the extension when absent (.req, .ts, .log).
    #[arg(long)]
    kind: Option<DocKind>,
    /// Document id (single file only); the file stem by default.
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    title: Option<String>,
    /// Linked document id; repeatable.
    #[arg(long)]
    link: Vec<String>,
    /// Extra `key=value` field; repeatable.
    #[arg(long)]
    field: Vec<String>,
    #[arg(long)]
    replace: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Script file, or the id of a stored script.
    script: String,
    /// Check forced to fail, as `subject verb object` or attribute path; repeatable.
    #[arg(long)]
    fail: Vec<String>,
    #[arg(long)]
    start: Option<u64>,
    #[arg(long)]
    stride: Option<u64>,
    /// Log id; `<script id>-log` by default.
    #[arg(long)]
    id: Option<String>,
    /// Write the log here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also ingest the log into the store.
    #[arg(long)]
    ingest: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(default_value = "*:*")]
    q: String,
    /// Comma-separated returned fields.
    #[arg(long)]
    fl: Option<String>,
    /// Facet field; repeatable.
    #[arg(long)]
    facet: Vec<String>,
    /// `field:value` filter; repeatable.
    #[arg(long)]
    fq: Vec<String>,
}

#[derive(Args)]
struct TraceArgs {
    /// Coverage from shared triples (default).
    #[arg(long, conflicts_with = "explicit")]
    semantic: bool,
    /// Coverage from explicit document links.
    #[arg(long)]
    explicit: bool,
    /// Requirement files/directory, or comma-separated stored ids.
    requirements: Option<String>,
    /// Test files/directory, or comma-separated stored ids.
    tests: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                eprint!("{}", to_json(&e.body()));
            } else {
                eprintln!("error[{}]: {e}", e.kind());
            }
            ExitCode::FAILURE
        }
    }
}

fn config(cli: &Cli) -> Result<Config, ServiceError> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) {
    if json {
        print!("{}", to_json(value));
    } else {
        print!("{}", text(value));
    }
}

fn read_input(path: Option<&Path>) -> Result<String, ServiceError> {
    match path {
        Some(p) if p != Path::new("-") => {
            Ok(std::fs::read_to_string(p)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))?)
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn run(cli: Cli) -> Result<(), ServiceError> {
    let json = cli.json;
    let config = config(&cli)?;
    match cli.command {
        Command::Ontology(cmd) => ontology(cmd, &config, json),
        Command::Ingest(args) => ingest(args, &config, json),
        Command::Annotate { file } => {
            let store = Store::open(&config)?;
            let text = read_input(file.as_deref())?;
            emit(json, &api::annotate(store.ontology(), &text), |a| {
                let mut out = String::new();
                for s in &a.spans {
                    out.push_str(&format!(
                        "{}..{}\t{}\t{} ({})\n",
                        s.start,
                        s.end,
                        s.surface,
                        s.entity,
                        s.kind.as_str()
                    ));
                }
                for t in &a.triples {
                    out.push_str(&format!(
                        "({}, {}, {})\t{}\n",
                        t.subject,
                        t.predicate,
                        t.object,
                        t.provenance.as_str()
                    ));
                }
                out
            });
            Ok(())
        }
        Command::RunScript(args) => run_script(args, &config, json),
        Command::Search(args) => {
            let store = Store::open(&config)?;
            let mut pairs = vec![("q".to_string(), args.q)];
            pairs.extend(args.fl.map(|f| ("fl".to_string(), f)));
            pairs.extend(args.facet.into_iter().map(|f| ("facet.field".to_string(), f)));
            pairs.extend(args.fq.into_iter().map(|f| ("fq".to_string(), f)));
            let resp = api::search(&store, &search_request_from_query(&pairs)?)?;
            emit(json, &resp, |r| {
                let mut out = String::new();
                for h in &r.hits {
                    out.push_str(&format!("{:.4}\t{}\n", h.score, h.id));
                }
                for (field, counts) in &r.facets {
                    out.push_str(&format!("facet {field}:"));
                    for (v, n) in counts {
                        out.push_str(&format!(" {v}={n}"));
                    }
                    out.push('\n');
                }
                out
            });
            Ok(())
        }
        Command::Expand { terms, policy } => {
            let store = Store::open(&config)?;
            let policy = policy.unwrap_or(store.policy);
            match terms.as_slice() {
                [term] => {
                    let e = api::expand_concept(store.ontology(), term, policy)?;
                    emit(json, &e, |e| e.labels.iter().map(|l| format!("{l}\n")).collect());
                }
                [s, p, o] => {
                    let q = SemanticQuery {
                        subject: Some(s.clone()),
                        predicate: Some(p.clone()),
                        object: Some(o.clone()),
                        policy: Some(policy),
                        kind: None,
                    };
                    emit(json, &api::expand_triple(&store, &q), |e| {
                        e.patterns.iter().map(|p| format!("{p}\n")).collect()
                    });
                }
                _ => {
                    return Err(ServiceError::BadRequest(
                        "expand takes a term or `subject predicate object`".into(),
                    ))
                }
            }
            Ok(())
        }
        Command::SemanticSearch {
            subject,
            predicate,
            object,
            policy,
            kind,
        } => {
            let store = Store::open(&config)?;
            let q = SemanticQuery {
                subject: Some(subject),
                predicate: Some(predicate),
                object: Some(object),
                policy,
                kind,
            };
            emit(json, &api::semantic_search(&store, &q)?, |r| {
                r.hits
                    .iter()
                    .map(|h| {
                        format!(
                            "{}\t{}\t{} patterns, {} triples\n",
                            h.doc_id,
                            h.kind,
                            h.matched_patterns.len(),
                            h.matched_triples.len()
                        )
                    })
                    .collect()
            });
            Ok(())
        }
        Command::Similar { log_id, k } => {
            let store = Store::open(&config)?;
            emit(json, &api::similar(&store, &log_id, k)?, |v| {
                let mut out = String::new();
                for r in &v.results {
                    out.push_str(&format!("{:.4}\t{}\n", r.score, r.doc_id));
                    for t in &r.only_candidate {
                        out.push_str(&format!("\t+ ({}, {}, {})\n", t.subject, t.predicate, t.object));
                    }
                    for t in &r.only_query {
                        out.push_str(&format!("\t- ({}, {}, {})\n", t.subject, t.predicate, t.object));
                    }
                }
                out
            });
            Ok(())
        }
        Command::Trace(args) => trace(args, &config, json),
        Command::Review {
            requirement,
            test,
            clear,
        } => {
            let mut store = Store::open(&config)?;
            let req = ReviewRequest {
                requirement,
                test,
                review: !clear,
            };
            emit(json, &api::review(&mut store, &req)?, |r| {
                let state = if r.review { "marked" } else { "cleared" };
                format!("{state} {} / {}\n", r.requirement, r.test)
            });
            Ok(())
        }
        Command::Serve { host, port } => {
            let mut config = config;
            if let Some(h) = host {
                config.host = h;
            }
            if let Some(p) = port {
                config.port = p;
            }
            config.validate()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(semtrace_core::service::http::serve(&config))
        }
    }
}

#[derive(Serialize)]
struct OntologySummary {
    valid: bool,
    classes: usize,
    relations: usize,
    individuals: usize,
    axioms: usize,
}

fn load_ontology(file: Option<&Path>, config: &Config) -> Result<Ontology, ServiceError> {
    match file {
        Some(f) => Ok(Ontology::load(&read_input(Some(f))?)?),
        None => Ok(Store::open(config)?.ontology().clone()),
    }
}

fn ontology(cmd: OntologyCommand, config: &Config, json: bool) -> Result<(), ServiceError> {
    match cmd {
        OntologyCommand::Validate { file } => {
            let ont = load_ontology(file.as_deref(), config)?;
            let summary = OntologySummary {
                valid: true,
                classes: ont.classes().count(),
                relations: ont.relations().count(),
                individuals: ont.individuals().count(),
                axioms: ont.axioms().len(),
            };
            emit(json, &summary, |s| {
                format!(
                    "ok: {} classes, {} relations, {} individuals, {} axioms\n",
                    s.classes, s.relations, s.individuals, s.axioms
                )
            });
        }
        OntologyCommand::Tree { file } => {
            let ont = load_ontology(file.as_deref(), config)?;
            emit(json, &api::ontology_tree(&ont), |tree| {
                fn walk(out: &mut String, nodes: &[api::TreeNode], depth: usize) {
                    for n in nodes {
                        out.push_str(&"  ".repeat(depth));
                        out.push_str(&n.label);
                        if !n.equivalents.is_empty() {
                            out.push_str(&format!(" = {}", n.equivalents.join(" = ")));
                        }
                        if n.kind == semtrace_core::ontology::EntityKind::Individual {
                            out.push_str(" (individual)");
                        }
                        out.push('\n');
                        walk(out, &n.children, depth + 1);
                    }
                }
                let mut out = String::new();
                walk(&mut out, tree, 0);
                out
            });
        }
    }
    Ok(())
}

fn kind_from_extension(path: &Path) -> Option<DocKind> {
    match path.extension()?.to_str()? {
        "req" => Some(DocKind::Requirement),
        "ts" | "script" => Some(DocKind::TestScript),
        "log" => Some(DocKind::Log),
        "desc" => Some(DocKind::TestDescription),
        _ => None,
    }
}

/// Files of a directory (sorted, hidden files skipped) or the path itself.
fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, ServiceError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|f| f.is_file() && !f.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
                .collect();
            files.sort();
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no such file", p.display())).into(),
            );
        }
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn file_request(path: &Path, kind: Option<DocKind>) -> Result<IngestRequest, ServiceError> {
    let kind = kind.or_else(|| kind_from_extension(path)).ok_or_else(|| {
        ServiceError::BadRequest(format!(
            "{}: cannot infer the document kind, pass --kind",
            path.display()
        ))
    })?;
    let body = read_input(Some(path))?;
    let mut req = IngestRequest::new(kind, body);
    let has_log_id = kind == DocKind::Log && req.body.lines().any(|l| l.trim_start().starts_with("// log-id:"));
    if !has_log_id {
        req.id = Some(stem(path));
    }
    Ok(req)
}

fn ingest(args: IngestArgs, config: &Config, json: bool) -> Result<(), ServiceError> {
    let files = expand_paths(&args.paths)?;
    if args.id.is_some() && files.len() != 1 {
        return Err(ServiceError::BadRequest("--id needs exactly one file".into()));
    }
    let mut fields = std::collections::BTreeMap::new();
    for f in &args.field {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| ServiceError::BadRequest(format!("--field `{f}` is not key=value")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut store = Store::open(config)?;
    let mut reports = Vec::new();
    for file in &files {
        let mut req = file_request(file, args.kind)?;
        if args.id.is_some() {
            req.id = args.id.clone();
        }
        req.title = args.title.clone();
        req.links = args.link.clone();
        req.fields = fields.clone();
        req.replace = args.replace;
        reports.push(api::ingest(&mut store, req)?);
    }
    emit(json, &reports, |rs| {
        let mut out = String::new();
        for r in rs {
            out.push_str(&format!(
                "ingested {} ({}): {} keywords, {} asserted + {} derived triples\n",
                r.doc_id,
                r.kind.as_str(),
                r.keywords,
                r.triples_asserted,
                r.triples_derived
            ));
            for w in &r.warnings {
                out.push_str(&format!("  warning: {w}\n"));
            }
        }
        out
    });
    Ok(())
}

fn run_script(args: RunArgs, config: &Config, json: bool) -> Result<(), ServiceError> {
    let mut store = Store::open(config)?;
    let path = Path::new(&args.script);
    let mut req = RunRequest {
        fail: args.fail,
        start: args.start,
        stride: args.stride,
        log_id: args.id,
        ingest: args.ingest,
        ..RunRequest::default()
    };
    if path.is_file() {
        req.script = Some(read_input(Some(path))?);
        req.script_id = Some(stem(path));
    } else {
        req.script_id = Some(args.script.clone());
    }
    let outcome = api::run(&mut store, &req)?;
    if let Some(out) = &args.out {
        write_file(out, &outcome.text)?;
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if json {
        print!("{}", to_json(&outcome));
    } else if args.out.is_none() {
        print!("{}", outcome.text);
    } else {
        eprintln!("{}: {}", outcome.log.id, outcome.log.verdict.as_str());
    }
    Ok(())
}

/// Stored ids, or files ingested into a scratch copy of the store.
fn trace_side(spec: Option<String>, scratch: &mut Store, test_side: bool) -> Result<Option<Vec<String>>, ServiceError> {
    let Some(spec) = spec else {
        return Ok(None);
    };
    let path = PathBuf::from(&spec);
    if !path.exists() {
        return Ok(Some(
            spec.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        ));
    }
    let mut ids = Vec::new();
    for file in expand_paths(&[path])? {
        let default_kind = if test_side {
            kind_from_extension(&file)
                .filter(|k| k.is_test())
                .unwrap_or(DocKind::TestDescription)
        } else {
            DocKind::Requirement
        };
        let mut req = file_request(&file, Some(default_kind))?;
        let id = req.id.clone().unwrap_or_default();
        let unchanged = scratch
            .document(&id)
            .is_some_and(|d| d.kind == req.kind && d.body == req.body);
        if !unchanged {
            req.replace = true;
            scratch.ingest(req)?;
        }
        ids.push(id);
    }
    Ok(Some(ids))
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)
}

fn trace(args: TraceArgs, config: &Config, json: bool) -> Result<(), ServiceError> {
    let store = Store::open(config)?;
    let mode = if args.explicit {
        LinkSource::ExplicitLinks
    } else {
        LinkSource::Semantic
    };
    let mut scratch = store.detached();
    let reqs = trace_side(args.requirements, &mut scratch, false)?;
    let tests = trace_side(args.tests, &mut scratch, true)?;
    let matrix = api::traceability(&scratch, mode, reqs, tests)?;
    let rendered = if json { to_json(&matrix) } else { matrix.to_csv() };
    match &args.out {
        Some(out) => write_file(out, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}
