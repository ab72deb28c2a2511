//! The `momf` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::api::{csv_to_json, serve, ServeConfig};
use crate::campaign::{Campaign, CampaignConfig, CampaignError, ExportKind, Mode};
use crate::datastore::{FilterExpr, Query, SchemaTemplate, Store, StoreError, StoreOptions};

#[derive(Debug, Parser)]
#[command(name = "momf", version, about = "Governed tables and multi-fidelity optimization campaigns")]
struct Cli {
    /// Root for table journals; defaults to $MOMF_DATA_DIR, then ./momf-data.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Overrides the campaign seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create, inspect and query tables.
    #[command(subcommand)]
    Table(TableCmd),
    /// Validate and append CSV rows to a table.
    Ingest {
        #[arg(long)]
        table: String,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        form: Option<String>,
        #[arg(long, default_value = "cli")]
        actor: String,
    },
    /// Run, resume and export campaigns.
    #[command(subcommand)]
    Campaign(CampaignCmd),
    /// Benchmark registry.
    #[command(subcommand)]
    Benchmarks(BenchCmd),
    /// Serve the REST API until interrupted.
    Serve {
        /// Defaults to $MOMF_BIND, then 127.0.0.1:8080.
        #[arg(long)]
        bind: Option<String>,
        /// `token,role,org` lines; defaults to $MOMF_TOKENS.
        #[arg(long)]
        tokens: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum TableCmd {
    /// Create a table from a JSON schema template.
    Create {
        #[arg(long)]
        template: PathBuf,
    },
    Metadata { name: String },
    Query(QueryArgs),
}

#[derive(Debug, Args)]
struct QueryArgs {
    name: String,
    /// Comma-separated column list.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// JSON filter expression, or `@path` to read one from a file.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    num_rows: Option<usize>,
    #[arg(long)]
    cursor: Option<String>,
}

#[derive(Debug, Subcommand)]
enum CampaignCmd {
    /// Run a benchmark campaign to completion and write its bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue from a bundle's snapshot, optionally with more iterations.
    Resume {
        #[arg(long)]
        from: PathBuf,
        #[arg(long, default_value_t = 0)]
        iterations: usize,
        /// Defaults to the bundle being resumed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one CSV table of a bundle.
    Export {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        which: ExportKind,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCmd {
    List,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(_) | StoreError::Injected | StoreError::Csv(_) => runtime(e.to_string()),
            _ => usage(e.to_string()),
        }
    }
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(_) => usage(e.to_string()),
            _ => runtime(e.to_string()),
        }
    }
}

type Out<'a> = &'a mut dyn Write;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, stdout: Out, stderr: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn data_dir(cli: &Cli) -> PathBuf {
    cli.data_dir
        .clone()
        .or_else(|| std::env::var_os("MOMF_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("momf-data"))
}

fn open_store(cli: &Cli) -> Result<Store, Failure> {
    Store::open(StoreOptions { data_dir: Some(data_dir(cli).join("tables")), ..StoreOptions::default() })
        .map_err(|e| runtime(e.to_string()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Out, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| runtime(e.to_string()))
}

fn emit_json(out: Out, value: &serde_json::Value) -> Result<(), Failure> {
    emit(out, &format!("{}\n", serde_json::to_string_pretty(value).expect("values serialize")))
}

fn dispatch(cli: Cli, out: Out) -> Result<(), Failure> {
    match &cli.command {
        Command::Table(cmd) => table(&cli, cmd, out),
        Command::Ingest { table, csv, form, actor } => {
            let file = fs::File::open(csv).map_err(|e| usage(format!("{}: {e}", csv.display())))?;
            let store = open_store(&cli)?;
            let source = csv.display().to_string();
            let report = store.import_csv(table, file, form.as_deref(), actor, &source)?;
            if cli.json {
                emit_json(out, &serde_json::to_value(&report).expect("reports serialize"))?;
            } else {
                let mut text = format!("{} accepted, {} rejected\n", report.accepted, report.rejected);
                for (row, violations) in &report.violations {
                    for v in violations {
                        text.push_str(&format!("  row {row}: {}: {} ({})\n", v.field, v.message, v.rule));
                    }
                }
                emit(out, &text)?;
            }
            if report.accepted == 0 {
                return Err(runtime("no rows accepted"));
            }
            Ok(())
        }
        Command::Campaign(cmd) => campaign(&cli, cmd, out),
        Command::Benchmarks(BenchCmd::List) => {
            let defs = momf_core::benchmarks::registry();
            if cli.json {
                let list: Vec<_> = defs
                    .iter()
                    .map(|b| {
                        json!({
                            "name": b.name, "dim": b.dim, "any_dim": b.any_dim, "objectives": b.objectives,
                            "bounds": b.bounds, "directions": b.directions,
                            "optima": b.optima.iter().map(|o| json!({"objective": o.objective, "x": o.x, "value": o.value})).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                return emit_json(out, &json!({ "benchmarks": list }));
            }
            let mut text = format!("{:<24} {:>3} {:>3}  optima\n", "name", "d", "m");
            for b in &defs {
                let optima: Vec<String> = b.optima.iter().map(|o| format!("f{}={}", o.objective + 1, o.value)).collect();
                text.push_str(&format!("{:<24} {:>3} {:>3}  {}\n", b.name, b.dim, b.objectives, optima.join(" ")));
            }
            emit(out, &text)
        }
        Command::Serve { bind, tokens } => {
            let mut config = ServeConfig::from_env().map_err(usage)?;
            if let Some(b) = bind {
                config.bind = b.parse().map_err(|e| usage(format!("--bind {b:?}: {e}")))?;
            }
            if tokens.is_some() {
                config.token_file = tokens.clone();
            }
            config.data_dir = Some(data_dir(&cli));
            let _ = tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
                .try_init();
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| runtime(e.to_string()))?;
            rt.block_on(serve(config)).map_err(runtime)
        }
    }
}

fn table(cli: &Cli, cmd: &TableCmd, out: Out) -> Result<(), Failure> {
    match cmd {
        TableCmd::Create { template } => {
            let text = read(template)?;
            let template: SchemaTemplate =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", template.display())))?;
            let name = open_store(cli)?.create_table(template)?;
            if cli.json {
                emit_json(out, &json!({ "name": name }))
            } else {
                emit(out, &format!("created {name}\n"))
            }
        }
        TableCmd::Metadata { name } => {
            let meta = open_store(cli)?.metadata(name)?;
            if cli.json {
                return emit_json(out, &serde_json::to_value(&meta).expect("metadata serializes"));
            }
            let mut text = format!("{} ({:?}, {} rows)\n", meta.name, meta.archetype, meta.row_count);
            for c in &meta.columns {
                text.push_str(&format!(
                    "  {:<20} {:<10} {:<10} {}{}\n",
                    c.name,
                    format!("{:?}", c.dtype).to_lowercase(),
                    c.unit.as_deref().unwrap_or("-"),
                    if c.nullable { "nullable" } else { "required" },
                    c.ontology_tag.as_deref().map(|t| format!(" [{t}]")).unwrap_or_default(),
                ));
            }
            emit(out, &text)
        }
        TableCmd::Query(q) => {
            if q.num_rows == Some(0) {
                return Err(usage("--num-rows must be positive"));
            }
            let filter = match &q.filter {
                Some(f) => {
                    let text = match f.strip_prefix('@') {
                        Some(path) => read(Path::new(path))?,
                        None => f.clone(),
                    };
                    let value: serde_json::Value =
                        serde_json::from_str(&text).map_err(|e| usage(format!("--filter: {e}")))?;
                    Some(FilterExpr::from_json(&value).map_err(|e| usage(format!("--filter: {e}")))?)
                }
                None => None,
            };
            let query = Query { columns: q.columns.clone(), filter, num_rows: q.num_rows, cursor: q.cursor.clone() };
            let rows = open_store(cli)?.query(&q.name, &query)?;
            if cli.json {
                emit_json(out, &serde_json::to_value(&rows).expect("rows serialize"))
            } else {
                emit(out, &rows.to_csv())
            }
        }
    }
}

const BUNDLE: [&str; 2] = ["summary.json", "snapshot.json"];

/// Every file of a campaign bundle, rendered before anything touches disk.
fn bundle(c: &Campaign) -> Result<Vec<(String, String)>, Failure> {
    let mut files = Vec::new();
    for kind in ExportKind::ALL {
        files.push((format!("{}.csv", kind.as_str()), c.export_csv(kind)?));
    }
    let summary = serde_json::to_string_pretty(&c.summary()?).expect("summaries serialize");
    files.push((BUNDLE[0].into(), format!("{summary}\n")));
    files.push((BUNDLE[1].into(), c.snapshot()));
    Ok(files)
}

fn write_bundle(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn report(cli: &Cli, c: &Campaign, dir: &Path, out: Out) -> Result<(), Failure> {
    let s = c.summary()?;
    if cli.json {
        return emit_json(out, &json!({ "out": dir.display().to_string(), "summary": s }));
    }
    let mut text = format!(
        "{} after {} iterations, {} evaluations, cost {}\nfinal hv {}\n",
        s.phase, s.iterations, s.evaluations, s.total_cost, s.final_hv
    );
    let best: Vec<String> = s.best.iter().map(f64::to_string).collect();
    text.push_str(&format!("best {}\n", best.join(" ")));
    if let Some(x) = &s.best_x {
        let x: Vec<String> = x.iter().map(f64::to_string).collect();
        text.push_str(&format!("at x = {}\n", x.join(" ")));
    }
    text.push_str(&format!("wrote {}\n", dir.display()));
    emit(out, &text)
}

fn load_snapshot(from: &Path) -> Result<Campaign, Failure> {
    let text = read(&from.join(BUNDLE[1]))?;
    Campaign::from_snapshot(&text).map_err(|e| usage(format!("{}: {e}", from.display())))
}

fn campaign(cli: &Cli, cmd: &CampaignCmd, out: Out) -> Result<(), Failure> {
    match cmd {
        CampaignCmd::Run { config, out: dir } => {
            let text = read(config)?;
            let mut cfg = CampaignConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if cfg.mode != Mode::Benchmark {
                return Err(usage("campaign run drives benchmark campaigns; serve the API for dataset mode"));
            }
            let mut c = Campaign::new(cfg, None)?;
            c.run()?;
            write_bundle(dir, &bundle(&c)?)?;
            report(cli, &c, dir, out)
        }
        CampaignCmd::Resume { from, iterations, out: dir } => {
            let mut c = load_snapshot(from)?;
            if c.config().mode != Mode::Benchmark {
                return Err(usage("only benchmark campaigns can be resumed from the command line"));
            }
            c.extend(*iterations);
            c.run()?;
            let dir = dir.as_deref().unwrap_or(from);
            write_bundle(dir, &bundle(&c)?)?;
            report(cli, &c, dir, out)
        }
        CampaignCmd::Export { from, which } => {
            let c = load_snapshot(from)?;
            let text = c.export_csv(*which)?;
            if cli.json {
                let mut v = csv_to_json(&text);
                v["which"] = json!(which.as_str());
                emit_json(out, &v)
            } else {
                emit(out, &text)
            }
        }
    }
}
