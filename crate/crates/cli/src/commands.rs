//! Command-line subcommands.
//!
//! Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.
//! `equiv` exits 1 when the formulas are distinguished.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use specloop_core::backend::{BackendSpec, MockSpec, DEFAULT_RUNS, DEFAULT_TEMPERATURE};
use specloop_core::eval::{self, EvalOptions, LoadOptions, Mode};
use specloop_core::ltl::{self, Bound};
use specloop_core::session::{FinalChoice, SessionError, SessionState, Settings, SubTranslation};

use crate::api::ApiError;
use crate::config::{Config, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "specloop", version, about = "Interactive natural language to LTL translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate one sentence and print the final formula.
    Translate(TranslateArgs),
    /// Run the HTTP API (and the web UI when `static_dir` is configured).
    Serve(ServeArgs),
    /// Score a JSON-lines benchmark and write a report.
    Eval(EvalArgs),
    /// Compare two formulas up to a lasso bound.
    Equiv(EquivArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rule file replacing the built-in rules of the `mock` backend.
    #[arg(long)]
    pub mock_rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[arg(long)]
    pub nl: String,
    /// Template id or path to a template file.
    #[arg(long, default_value = "minimal")]
    pub prompt: String,
    #[arg(long, default_value = "mock")]
    pub backend: String,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub num_runs: usize,
    /// Fixed sub-translation, as `fragment := formula`; repeatable.
    #[arg(long, value_parser = parse_given)]
    pub given: Vec<(String, String)>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Initial,
    ScriptedInteractive,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines dataset; the bundled expert benchmark when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "mock")]
    pub backend: String,
    #[arg(long, default_value = "minimal")]
    pub template: String,
    #[arg(long, value_enum, default_value_t = EvalMode::Initial)]
    pub mode: EvalMode,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub num_runs: usize,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = Bound::default().max_prefix)]
    pub max_prefix: usize,
    #[arg(long, default_value_t = Bound::default().max_loop)]
    pub max_loop: usize,
    /// Accept gold formulas over atoms other than a..e.
    #[arg(long)]
    pub any_atoms: bool,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    pub f: String,
    pub g: String,
    #[arg(long, default_value_t = Bound::default().max_prefix)]
    pub max_prefix: usize,
    #[arg(long, default_value_t = Bound::default().max_loop)]
    pub max_loop: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn parse_given(s: &str) -> Result<(String, String), String> {
    let (fragment, formula) = s.split_once(":=").ok_or("expected `fragment := formula`")?;
    let (fragment, formula) = (fragment.trim(), formula.trim());
    if fragment.is_empty() || formula.is_empty() {
        return Err("expected `fragment := formula`".into());
    }
    Ok((fragment.to_string(), formula.to_string()))
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> ApiError {
        ApiError::new("invalid_config", e.to_string())
    }
}

pub fn load_config(common: &Common) -> Result<Config, ConfigError> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(rules) = &common.mock_rules {
        let rules = std::path::absolute(rules).unwrap_or_else(|_| rules.clone());
        config.backends.retain(|b| b.id() != "mock");
        config.backends.push(BackendSpec::Mock(MockSpec {
            id: "mock".into(),
            display_name: None,
            rules: Some(rules),
            latency_ms: None,
        }));
    }
    Ok(config)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Alternative {
    pub formula_text: String,
    pub votes: usize,
    pub confidence: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TranslateReport {
    pub nl: String,
    pub backend_id: String,
    pub template_id: String,
    pub prompt: String,
    #[serde(rename = "final")]
    pub final_: FinalChoice,
    pub final_alternatives: Vec<Alternative>,
    pub sub_translations: Vec<SubTranslation>,
}

pub fn translate_report(args: &TranslateArgs) -> Result<TranslateReport, ApiError> {
    let config = load_config(&args.common)?;
    let mut bench = config.workbench()?;
    let template =
        bench.templates.resolve(&args.prompt).map_err(|e| ApiError::new("unknown_template", e.to_string()))?;
    let template_id = template.id.clone();
    bench.templates.insert(template);

    let settings = Settings {
        backend_id: args.backend.clone(),
        template_id: template_id.clone(),
        temperature: args.temperature,
        runs: args.num_runs,
    };
    bench.check_settings(&settings)?;
    let mut state = SessionState::new(&args.nl, settings)?;
    for (fragment, formula) in &args.given {
        state.add(fragment, formula)?;
    }
    let prompt = state.prompt(&bench.templates)?;
    state.translate(&bench)?;

    let result = state.last_result.as_ref().ok_or(SessionError::NoResult)?;
    let final_alternatives = result
        .final_alternatives
        .iter()
        .map(|c| Alternative { formula_text: c.text.clone(), votes: c.votes, confidence: c.confidence })
        .collect();
    Ok(TranslateReport {
        nl: state.nl.clone(),
        backend_id: args.backend.clone(),
        template_id,
        prompt,
        final_: state.final_.clone().ok_or(SessionError::NoResult)?,
        final_alternatives,
        sub_translations: state.sub_translations.clone(),
    })
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn translate(args: &TranslateArgs) -> ExitCode {
    match (translate_report(args), args.format) {
        (Ok(report), Format::Json) => print_json(&report),
        (Ok(report), Format::Text) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", report.final_.formula_text);
            let _ = writeln!(out, "confidence: {:.2}", report.final_.confidence);
            for alt in &report.final_alternatives {
                let _ = writeln!(out, "alternative: {} ({:.2})", alt.formula_text, alt.confidence);
            }
            for sub in &report.sub_translations {
                let confidence = sub.confidence.map(|c| format!("{c:.2}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(out, "  {:?} := {}  [{confidence}]", sub.fragment, sub.formula_text);
            }
        }
        (Err(e), Format::Json) => {
            print_json(&e);
            return ExitCode::FAILURE;
        }
        (Err(e), Format::Text) => {
            eprintln!("error [{}]: {}", e.code, e.message);
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let mut config = load_config(&args.common)?;
    if let Some(bind) = &args.bind {
        config.bind = bind.clone();
    }
    if let Some(port) = args.port {
        config.port = port;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(&config))
}

fn run_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let config = load_config(&args.common)?;
    let bench = config.workbench()?;
    let text = match &args.dataset {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?
        }
        None => eval::EXPERT_BENCHMARK.to_string(),
    };
    let dataset = eval::load_dataset(&text, LoadOptions { restrict_atoms: !args.any_atoms })?;
    anyhow::ensure!(!dataset.instances.is_empty(), "dataset has no instances");
    let settings = Settings {
        backend_id: args.backend.clone(),
        template_id: args.template.clone(),
        temperature: args.temperature,
        runs: args.num_runs,
    };
    bench.check_settings(&settings)?;
    let options = EvalOptions {
        settings,
        mode: match args.mode {
            EvalMode::Initial => Mode::Initial,
            EvalMode::ScriptedInteractive => Mode::ScriptedInteractive,
        },
        bound: Bound { max_prefix: args.max_prefix, max_loop: args.max_loop },
        workers: args.workers.max(1),
    };
    let report = eval::run_benchmark(&dataset, &bench, &options);
    let json = report.to_json();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?
        }
        None => print!("{json}"),
    }
    eprintln!(
        "semantic {}/{}, syntactic {}/{}, errors {}, placeholders skipped {}",
        report.correct_semantic,
        report.total,
        report.correct_syntactic,
        report.total,
        report.errors,
        report.placeholders_skipped
    );
    Ok(())
}

fn equiv(args: &EquivArgs) -> anyhow::Result<bool> {
    let f = ltl::parse(&args.f).map_err(|e| anyhow::anyhow!("first formula: {e}"))?;
    let g = ltl::parse(&args.g).map_err(|e| anyhow::anyhow!("second formula: {e}"))?;
    let bound = Bound { max_prefix: args.max_prefix, max_loop: args.max_loop };
    let verdict = ltl::equivalent(&f, &g, bound)?;
    match args.format {
        Format::Json => print_json(&json!({"status": verdict.status, "witness": verdict.witness, "bound": bound})),
        Format::Text => match &verdict.witness {
            None => println!("equivalent up to prefix {} / loop {}", bound.max_prefix, bound.max_loop),
            Some(w) => {
                let side = if ltl::evaluate(&f, w).unwrap_or(false) { "first" } else { "second" };
                println!("distinguished: {w} satisfies only the {side} formula");
            }
        },
    }
    Ok(verdict.is_equivalent())
}

fn report_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::FAILURE
}

pub fn run(cli: Cli) -> ExitCode {
    match &cli.command {
        Command::Translate(args) => translate(args),
        Command::Serve(args) => serve(args).map_or_else(report_error, |()| ExitCode::SUCCESS),
        Command::Eval(args) => run_eval(args).map_or_else(report_error, |()| ExitCode::SUCCESS),
        Command::Equiv(args) => match equiv(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                report_error(e);
                ExitCode::from(2)
            }
        },
    }
}

pub fn default_log_filter(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Serve(_) => "info",
        Command::Eval(_) => "error",
        _ => "warn",
    }
}
