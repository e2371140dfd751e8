//! Batch accuracy evaluation over a JSON-lines benchmark.
//!
//! Each line is one object `{nl, gold, tags?, id?, provenance?,
//! publishedVerdict?, script?}`. A line `{"placeholder": true}` stands for
//! an instance whose text is not available; it is counted and skipped.
//!
//! A prediction is judged twice: syntactically (same minimal-parens print)
//! and semantically (bounded equivalence). Reports carry no timestamps and
//! list instances in dataset order, so equal inputs give byte-equal output.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{equivalent, parse, print, Bound, Formula, PrintMode};
use crate::session::{SessionError, SessionState, Settings, Workbench};

/// Atoms allowed in the expert benchmark.
pub const BENCHMARK_ATOMS: [&str; 5] = ["a", "b", "c", "d", "e"];
pub const MAX_LOOPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dataset line {line}: {reason}")]
pub struct DatasetError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PublishedVerdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOp {
    /// Edit the fragment, or add it when absent.
    Set,
    Delete,
}

/// One user action of a scripted interactive run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub op: StepOp,
    pub fragment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkInstance {
    #[serde(default)]
    pub id: Option<String>,
    pub nl: String,
    pub gold: Formula,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub provenance: Option<String>,
    #[serde(default)]
    pub published_verdict: Option<PublishedVerdict>,
    /// Steps applied after each unsuccessful translate, one list per loop.
    #[serde(default)]
    pub script: Vec<Vec<ScriptStep>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub instances: Vec<BenchmarkInstance>,
    /// Lines standing for instances whose text is unavailable.
    pub placeholders: usize,
}

#[derive(Deserialize)]
struct Placeholder {
    #[serde(default)]
    placeholder: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Reject gold formulas using atoms outside `a`..`e`.
    pub restrict_atoms: bool,
}

impl Default for LoadOptions {
    fn default() -> LoadOptions {
        LoadOptions { restrict_atoms: true }
    }
}

pub fn load_dataset(text: &str, options: LoadOptions) -> Result<Dataset, DatasetError> {
    let mut dataset = Dataset::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |reason: String| DatasetError { line: line_no, reason };
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
        if serde_json::from_value::<Placeholder>(value.clone()).map(|p| p.placeholder).unwrap_or(false) {
            dataset.placeholders += 1;
            continue;
        }
        let instance: BenchmarkInstance = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
        if instance.nl.trim().is_empty() {
            return Err(err("empty `nl`".into()));
        }
        if options.restrict_atoms {
            if let Some(atom) = instance.gold.atoms().into_iter().find(|a| !BENCHMARK_ATOMS.contains(&a.as_str())) {
                return Err(err(format!("gold uses atom `{atom}` outside a..e")));
            }
        }
        dataset.instances.push(instance);
    }
    Ok(dataset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One translate, no interaction.
    Initial,
    /// Up to three translates, applying the instance script in between.
    ScriptedInteractive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SyntacticMatch,
    SemanticMatch,
    Mismatch,
    /// Equivalence could not be decided (alphabet over the cap).
    Undecided,
    Error,
}

impl Verdict {
    pub fn is_semantic_correct(self) -> bool {
        matches!(self, Verdict::SyntacticMatch | Verdict::SemanticMatch)
    }
}

pub fn judge(predicted: &Formula, gold: &Formula, bound: Bound) -> Verdict {
    if print(predicted, PrintMode::Minimal) == print(gold, PrintMode::Minimal) {
        return Verdict::SyntacticMatch;
    }
    match equivalent(predicted, gold, bound) {
        Ok(v) if v.is_equivalent() => Verdict::SemanticMatch,
        Ok(_) => Verdict::Mismatch,
        Err(_) => Verdict::Undecided,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalOptions {
    pub settings: Settings,
    pub mode: Mode,
    pub bound: Bound,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions { settings: Settings::default(), mode: Mode::Initial, bound: Bound::default(), workers: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub nl: String,
    pub gold: String,
    pub predicted: Option<String>,
    pub verdict: Verdict,
    pub loops: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_verdict: Option<PublishedVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TagSplit {
    pub total: usize,
    pub correct_semantic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub mode: Mode,
    pub backend_id: String,
    pub template_id: String,
    pub bound: Bound,
    pub total: usize,
    pub correct_syntactic: usize,
    pub correct_semantic: usize,
    pub errors: usize,
    pub placeholders_skipped: usize,
    /// Mean number of translates over semantically correct instances.
    pub mean_loops_correct: Option<f64>,
    pub by_tag: std::collections::BTreeMap<String, TagSplit>,
    pub per_instance: Vec<InstanceReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Instances carrying a published verdict, and how many of those our
    /// semantic verdict agrees with.
    pub fn published_agreement(&self) -> (usize, usize) {
        let compared: Vec<_> = self.per_instance.iter().filter_map(|r| r.published_verdict.map(|p| (r, p))).collect();
        let agree = compared
            .iter()
            .filter(|(r, p)| r.verdict.is_semantic_correct() == (*p == PublishedVerdict::Correct))
            .count();
        (compared.len(), agree)
    }
}

fn apply_step(state: &mut SessionState, step: &ScriptStep) -> Result<(), SessionError> {
    match step.op {
        StepOp::Delete => state.delete(&step.fragment),
        StepOp::Set => {
            let formula = step.formula.as_deref().unwrap_or_default();
            if state.find(&step.fragment).is_some() {
                state.edit(&step.fragment, formula)
            } else {
                state.add(&step.fragment, formula)
            }
        }
    }
}

fn evaluate_instance(instance: &BenchmarkInstance, bench: &Workbench, options: &EvalOptions) -> InstanceReport {
    let mut report = InstanceReport {
        id: instance.id.clone(),
        nl: instance.nl.clone(),
        gold: print(&instance.gold, PrintMode::Minimal),
        predicted: None,
        verdict: Verdict::Error,
        loops: 0,
        error: None,
        tags: instance.tags.clone(),
        published_verdict: instance.published_verdict,
    };
    let max_loops = match options.mode {
        Mode::Initial => 1,
        Mode::ScriptedInteractive => MAX_LOOPS,
    };
    let mut state = match SessionState::new(&instance.nl, options.settings.clone()) {
        Ok(s) => s,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    for loop_no in 1..=max_loops {
        report.loops = loop_no;
        if let Err(e) = state.translate(bench) {
            report.verdict = Verdict::Error;
            report.error = Some(e.to_string());
            return report;
        }
        let shown = state.final_.as_ref().expect("translated session shows a final formula");
        let predicted = parse(&shown.formula_text).expect("aggregated finals parse");
        report.predicted = Some(shown.formula_text.clone());
        report.error = None;
        report.verdict = judge(&predicted, &instance.gold, options.bound);
        if report.verdict.is_semantic_correct() {
            break;
        }
        let Some(steps) = instance.script.get(loop_no - 1) else { break };
        if loop_no == max_loops {
            break;
        }
        for step in steps {
            if let Err(e) = apply_step(&mut state, step) {
                report.error = Some(format!("script step failed: {e}"));
                return report;
            }
        }
    }
    report
}

pub fn run_benchmark(dataset: &Dataset, bench: &Workbench, options: &EvalOptions) -> EvalReport {
    let n = dataset.instances.len();
    let slots: Mutex<Vec<Option<InstanceReport>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    let workers = options.workers.clamp(1, n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = evaluate_instance(&dataset.instances[i], bench, options);
                slots.lock().expect("report slots")[i] = Some(r);
            });
        }
    });
    let per_instance: Vec<InstanceReport> =
        slots.into_inner().expect("report slots").into_iter().map(|r| r.expect("every instance ran")).collect();

    let correct: Vec<&InstanceReport> = per_instance.iter().filter(|r| r.verdict.is_semantic_correct()).collect();
    let mut by_tag = std::collections::BTreeMap::<String, TagSplit>::new();
    for r in &per_instance {
        for tag in &r.tags {
            let split = by_tag.entry(tag.clone()).or_insert(TagSplit { total: 0, correct_semantic: 0 });
            split.total += 1;
            split.correct_semantic += usize::from(r.verdict.is_semantic_correct());
        }
    }
    EvalReport {
        mode: options.mode,
        backend_id: options.settings.backend_id.clone(),
        template_id: options.settings.template_id.clone(),
        bound: options.bound,
        total: n,
        correct_syntactic: per_instance.iter().filter(|r| r.verdict == Verdict::SyntacticMatch).count(),
        correct_semantic: correct.len(),
        errors: per_instance.iter().filter(|r| r.verdict == Verdict::Error).count(),
        placeholders_skipped: dataset.placeholders,
        mean_loops_correct: (!correct.is_empty())
            .then(|| correct.iter().map(|r| r.loops as f64).sum::<f64>() / correct.len() as f64),
        by_tag,
        per_instance,
    }
}

/// The expert benchmark shipped with the crate.
pub const EXPERT_BENCHMARK: &str = include_str!("../assets/data/expert_benchmark.jsonl");
