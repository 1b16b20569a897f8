use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sea_core::context;
use sea_core::db::{BuildConfig, ContextDatabase};
use sea_core::evaluation::{self, GroundTruth, MetricsReport};
use sea_core::llm::{BackendSpec, Engine, MatchMode, ResponseCache};
use sea_core::pipeline::{self, RefineConfig, Report, StaticReport};
use sea_core::resolve::{ResolverMode, ScopeMode};

#[derive(Parser)]
#[command(name = "sea", version, about = "Indirect-call target analysis for C projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a project and write its context database.
    Preprocess {
        root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Source file extensions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "c,h")]
        ext: Vec<String>,
    },
    /// Static candidate sets for every indirect call.
    Resolve {
        db: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "cascade")]
        resolver: ResolverMode,
        #[arg(long, default_value = "subtree")]
        scope: ScopeMode,
    },
    /// Prune static candidates with caller/callee matching.
    Refine {
        db: PathBuf,
        static_report: Option<PathBuf>,
        #[command(flatten)]
        refine: RefineArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Preprocess, resolve and refine in one go.
    Analyze {
        root: PathBuf,
        #[command(flatten)]
        refine: RefineArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score a refined or static report against ground truth.
    Evaluate {
        predictions: PathBuf,
        truth: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Row label in `sea report`; defaults to the predictions file stem.
        #[arg(long)]
        label: Option<String>,
    },
    /// Print a table over one or more metrics files.
    Report {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
    /// Dump the contexts gathered for an icall, and for a candidate callee.
    Context {
        db: PathBuf,
        #[arg(long)]
        icall: String,
        #[arg(long)]
        callee: Option<String>,
        #[arg(long, default_value_t = context::DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
}

#[derive(Args)]
struct RefineArgs {
    /// JSON file with refinement settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mock:always-yes | mock:always-no | mock:token-overlap | remote:<url>
    #[arg(long)]
    backend: Option<BackendSpec>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    mode: Option<MatchMode>,
    #[arg(long)]
    scope: Option<ScopeMode>,
    #[arg(long)]
    resolver: Option<ResolverMode>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    include_summaries: bool,
}

impl RefineArgs {
    fn config(&self) -> Result<RefineConfig> {
        let mut c = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("{}: invalid configuration", p.display()))?,
            None => RefineConfig::default(),
        };
        if let Some(b) = &self.backend {
            c.llm.backend = b.clone();
        }
        if let Some(m) = self.mode {
            c.ablation_mode = m;
        }
        if let Some(s) = self.scope {
            c.scope_mode = s;
        }
        if let Some(r) = self.resolver {
            c.resolver_mode = r;
        }
        if let Some(m) = &self.model {
            c.llm.model_name = m.clone();
        }
        if let Some(t) = self.temperature {
            c.llm.temperature = t;
        }
        if let Some(n) = self.runs {
            c.llm.runs_per_query = n;
        }
        c.include_summaries_in_report |= self.include_summaries;
        c.validate()?;
        Ok(c)
    }

    fn engine(&self, config: &RefineConfig) -> Result<Engine> {
        let cache = match &self.cache {
            Some(p) => ResponseCache::open(p)?,
            None => ResponseCache::in_memory(),
        };
        Ok(Engine::new(config.llm.clone(), cache)?)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_db(path: &Path) -> Result<ContextDatabase> {
    ContextDatabase::from_json(&read(path)?).with_context(|| format!("{}: not a context database", path.display()))
}

fn finish_refine(report: &Report, engine: &Engine, output: &Path) -> Result<ExitCode> {
    write(output, &report.to_json()?)?;
    let s = engine.cache_stats();
    eprintln!(
        "{} icalls, {} of {} edges kept; {} completions ({} cache hits)",
        report.totals.icalls,
        report.totals.kept_edges,
        report.totals.scoped_edges,
        s.hits + s.misses,
        s.hits
    );
    for e in &report.errors {
        eprintln!("warning: {} -> {}: {}", e.icall_id, e.callee, e.message);
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Preprocess { root, output, ext } => {
            let db = ContextDatabase::build(&root, &BuildConfig { extensions: ext })?;
            for w in &db.warnings {
                eprintln!("warning: {w}");
            }
            write(&output, &db.to_json()?)?;
            eprintln!(
                "{} functions, {} address-taken, {} indirect calls",
                db.function_map.len(),
                db.address_taken.len(),
                db.icalls.len()
            );
        }
        Command::Resolve { db, output, resolver, scope } => {
            let database = load_db(&db)?;
            let report = StaticReport::build(&db.display().to_string(), &database, resolver, scope);
            write(&output, &sea_core::canonical_json(&report)?)?;
        }
        Command::Refine { db, static_report, refine, output } => {
            let config = refine.config()?;
            let engine = refine.engine(&config)?;
            let database = load_db(&db)?;
            let (project, resolutions) = match static_report {
                Some(p) => {
                    let s: StaticReport = serde_json::from_str(&read(&p)?)
                        .with_context(|| format!("{}: not a static report", p.display()))?;
                    (s.project, s.icalls.into_iter().map(|(id, e)| (id, e.resolution)).collect())
                }
                None => (db.display().to_string(), sea_core::resolve::resolve_all(&database, config.resolver_mode)),
            };
            let report = pipeline::refine_all(&project, &database, &resolutions, &engine, &config)?;
            return finish_refine(&report, &engine, &output);
        }
        Command::Analyze { root, refine, output } => {
            let config = refine.config()?;
            let engine = refine.engine(&config)?;
            let report = pipeline::analyze_project(&root, &config, &engine)?;
            return finish_refine(&report, &engine, &output);
        }
        Command::Evaluate { predictions, truth, output, label } => {
            let (project, preds) = evaluation::load_predictions(&read(&predictions)?)?;
            let (truth, notes) = GroundTruth::from_json(&read(&truth)?)?;
            for n in notes {
                eprintln!("warning: {n}");
            }
            let label = label.unwrap_or_else(|| {
                predictions.file_stem().map_or("analysis".into(), |s| s.to_string_lossy().into_owned())
            });
            let report = evaluation::evaluate(&label, &project, &preds, &truth);
            write(&output, &report.to_json()?)?;
            if report.is_empty() {
                eprintln!("error: no icall with ground truth was analyzed");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { metrics } => {
            let reports = metrics
                .iter()
                .map(|p| MetricsReport::from_json(&read(p)?).with_context(|| format!("{}: not a metrics file", p.display())))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", evaluation::render_table(&reports));
        }
        Command::Context { db, icall, callee, max_depth } => {
            let database = load_db(&db)?;
            let Some(record) = database.icalls.get(&icall) else { bail!("no indirect call `{icall}`") };
            let mut out = json!({
                "icall": icall,
                "caller_local": context::caller_local_context(record, &database),
                "caller_global": context::caller_global_context(record, &database),
            });
            if let Some(c) = callee {
                out["callee_local"] = serde_json::to_value(context::callee_local_context(&c, &database)?)?;
                out["callee_sites"] = serde_json::to_value(context::callee_site_contexts(&c, &database, max_depth))?;
            }
            print!("{}", sea_core::canonical_json(&out)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
