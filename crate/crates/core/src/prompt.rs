//! Few-shot prompt templates and interactive prompt assembly.
//!
//! # Template file format (version 1)
//!
//! ```text
//! #! language: ltl            optional metadata lines, never sent to a model
//! #! stop: FINISH
//! <header: any number of lines>
//! Natural Language: <sentence>
//! Given translations: {"fragment": "formula", ...}
//! Explanation: <text, may continue on following lines>
//! Explanation dictionary: {"fragment": "formula", ...}
//! So, the final LTL translation is: <formula>
//! FINISH
//! <next example ...>
//! ```
//!
//! The header runs up to the first `Natural Language:` line. Every example
//! lists the five markers in this order and ends with the stop token on a
//! line of its own. For `language: ltl` (the default) each final
//! translation must parse.

use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::dict;
use crate::ltl;

pub const NATURAL_LANGUAGE: &str = "Natural Language:";
pub const GIVEN_TRANSLATIONS: &str = "Given translations:";
pub const EXPLANATION: &str = "Explanation:";
pub const EXPLANATION_DICTIONARY: &str = "Explanation dictionary:";
pub const FINAL_TRANSLATION: &str = "So, the final LTL translation is:";
pub const DEFAULT_STOP_TOKEN: &str = "FINISH";

const MARKERS: [&str; 5] =
    [NATURAL_LANGUAGE, GIVEN_TRANSLATIONS, EXPLANATION, EXPLANATION_DICTIONARY, FINAL_TRANSLATION];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template has no header before the first example")]
    MissingHeader,
    #[error("template has no examples")]
    NoExamples,
    #[error("example {example}: expected `{marker}`")]
    MissingMarker { example: usize, marker: &'static str },
    #[error("example {example}: text after the last stop token `{stop}`")]
    Unterminated { example: usize, stop: String },
    #[error("example {example}: malformed dictionary entry `{entry}`")]
    MalformedDictionary { example: usize, entry: String },
    #[error("example {example}: final translation does not parse: {source}")]
    UnparsableFinal { example: usize, source: ltl::ParseError },
    #[error("bad metadata line `{0}`")]
    BadMetadata(String),
    #[error("unknown template `{0}`")]
    Unknown(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("natural-language input is empty")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FewShotExample {
    pub natural_language: String,
    pub given_translations: IndexMap<String, String>,
    pub explanation: String,
    pub explanation_dictionary: IndexMap<String, String>,
    pub final_translation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptTemplate {
    pub id: String,
    /// `ltl` templates have their final translations validated.
    pub language: String,
    pub header: String,
    pub examples: Vec<FewShotExample>,
    pub stop_token: String,
}

impl PromptTemplate {
    /// Parses a template document.
    pub fn load(id: impl Into<String>, source: &str) -> Result<PromptTemplate, TemplateError> {
        let mut language = "ltl".to_string();
        let mut stop_token = DEFAULT_STOP_TOKEN.to_string();
        let mut lines = source.lines().peekable();
        while let Some(line) = lines.next_if(|l| l.starts_with("#!")) {
            let (key, value) = line[2..].split_once(':').ok_or_else(|| TemplateError::BadMetadata(line.to_string()))?;
            match key.trim() {
                "language" => language = value.trim().to_string(),
                "stop" => stop_token = value.trim().to_string(),
                _ => return Err(TemplateError::BadMetadata(line.to_string())),
            }
        }

        let mut header = Vec::new();
        while let Some(line) = lines.next_if(|l| !l.starts_with(NATURAL_LANGUAGE)) {
            header.push(line);
        }
        let header = header.join("\n").trim().to_string();
        let body: Vec<&str> = lines.collect();
        if header.is_empty() {
            return Err(if body.is_empty() { TemplateError::NoExamples } else { TemplateError::MissingHeader });
        }

        let mut examples = Vec::new();
        let mut block = Vec::new();
        for line in body {
            if line.trim() == stop_token {
                let example = parse_example(examples.len() + 1, &block, &language)?;
                examples.push(example);
                block.clear();
            } else {
                block.push(line);
            }
        }
        if block.iter().any(|l| !l.trim().is_empty()) {
            return Err(TemplateError::Unterminated { example: examples.len() + 1, stop: stop_token });
        }
        if examples.is_empty() {
            return Err(TemplateError::NoExamples);
        }
        Ok(PromptTemplate { id: id.into(), language, header, examples, stop_token })
    }

    pub fn load_file(path: &Path) -> Result<PromptTemplate, TemplateError> {
        let text = fs::read_to_string(path).map_err(|source| TemplateError::Io { path: path.to_path_buf(), source })?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        PromptTemplate::load(id, &text)
    }

    /// The template document, including metadata. `load` inverts it.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if self.language != "ltl" {
            out.push_str(&format!("#! language: {}\n", self.language));
        }
        if self.stop_token != DEFAULT_STOP_TOKEN {
            out.push_str(&format!("#! stop: {}\n", self.stop_token));
        }
        out.push_str(&self.body());
        out
    }

    /// Header and examples as sent to a model.
    fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header);
        out.push('\n');
        for ex in &self.examples {
            out.push_str(&format!("{NATURAL_LANGUAGE} {}\n", ex.natural_language));
            out.push_str(&format!("{GIVEN_TRANSLATIONS} {}\n", render_map(&ex.given_translations)));
            out.push_str(&format!("{EXPLANATION} {}\n", ex.explanation));
            out.push_str(&format!("{EXPLANATION_DICTIONARY} {}\n", render_map(&ex.explanation_dictionary)));
            out.push_str(&format!("{FINAL_TRANSLATION} {}\n", ex.final_translation));
            out.push_str(&self.stop_token);
            out.push('\n');
        }
        out
    }

    /// Builds the interactive prompt: header, examples, then the query with
    /// its given translations, ending at the explanation marker for the
    /// model to continue.
    pub fn compute_prompt<'a>(
        &self,
        natural_language: &str,
        given: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<String, PromptError> {
        let nl = natural_language.split_whitespace().collect::<Vec<_>>().join(" ");
        if nl.is_empty() {
            return Err(PromptError::EmptyInput);
        }
        let mut out = self.body();
        out.push_str(&format!("{NATURAL_LANGUAGE} {nl}\n"));
        out.push_str(&format!("{GIVEN_TRANSLATIONS} {}\n", dict::render(given)));
        out.push_str(EXPLANATION);
        Ok(out)
    }
}

fn render_map(map: &IndexMap<String, String>) -> String {
    dict::render(map.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

fn parse_example(index: usize, lines: &[&str], language: &str) -> Result<FewShotExample, TemplateError> {
    // Collect the text following each marker, in order; continuation lines
    // belong to the most recent marker.
    let mut fields: Vec<String> = Vec::new();
    for line in lines {
        let next = MARKERS.get(fields.len());
        match next {
            Some(marker) if line.starts_with(marker) && !starts_with_later_marker(line, fields.len()) => {
                fields.push(line[marker.len()..].trim().to_string());
            }
            _ => {
                if line.trim().is_empty() && fields.len() != 3 {
                    continue;
                }
                let in_explanation = fields.len() == 3;
                match fields.last_mut() {
                    Some(last) if in_explanation => {
                        last.push('\n');
                        last.push_str(line);
                    }
                    _ => {
                        return Err(TemplateError::MissingMarker {
                            example: index,
                            marker: MARKERS.get(fields.len()).copied().unwrap_or(DEFAULT_STOP_TOKEN),
                        })
                    }
                }
            }
        }
    }
    if fields.len() < MARKERS.len() {
        return Err(TemplateError::MissingMarker { example: index, marker: MARKERS[fields.len()] });
    }
    let strict_dict = |text: &str| -> Result<IndexMap<String, String>, TemplateError> {
        let parsed = dict::parse(text);
        if let Some(bad) = parsed.skipped.first() {
            return Err(TemplateError::MalformedDictionary { example: index, entry: bad.text.clone() });
        }
        Ok(parsed.entries.into_iter().collect())
    };
    let final_translation = fields[4].clone();
    if language == "ltl" {
        ltl::parse(&final_translation).map_err(|source| TemplateError::UnparsableFinal { example: index, source })?;
    }
    Ok(FewShotExample {
        natural_language: fields[0].clone(),
        given_translations: strict_dict(&fields[1])?,
        explanation: fields[2].trim().to_string(),
        explanation_dictionary: strict_dict(&fields[3])?,
        final_translation,
    })
}

// `Explanation:` is a prefix of `Explanation dictionary:`.
fn starts_with_later_marker(line: &str, current: usize) -> bool {
    MARKERS[current + 1..].iter().any(|m| m.starts_with(MARKERS[current]) && line.starts_with(m))
}

/// Templates shipped with the crate, as `(id, document)`.
pub const BUILTIN: [(&str, &str); 4] = [
    ("minimal", include_str!("../assets/prompts/minimal.txt")),
    ("indistribution", include_str!("../assets/prompts/indistribution.txt")),
    ("stl", include_str!("../assets/prompts/stl.txt")),
    ("smart", include_str!("../assets/prompts/smart.txt")),
];

/// A set of templates addressable by id.
#[derive(Debug, Clone, Default)]
pub struct TemplateStore {
    templates: IndexMap<String, PromptTemplate>,
}

impl TemplateStore {
    pub fn builtin() -> TemplateStore {
        let mut store = TemplateStore::default();
        for (id, text) in BUILTIN {
            store.insert(PromptTemplate::load(id, text).expect("shipped templates are valid"));
        }
        store
    }

    /// Loads every `*.txt` file in `dir`; the file stem is the id.
    pub fn load_dir(dir: &Path) -> Result<TemplateStore, TemplateError> {
        let io = |source| TemplateError::Io { path: dir.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        paths.sort();
        let mut store = TemplateStore::default();
        for path in paths {
            store.insert(PromptTemplate::load_file(&path)?);
        }
        Ok(store)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates.get(id).ok_or_else(|| TemplateError::Unknown(id.to_string()))
    }

    /// Looks `id_or_path` up by id, falling back to reading it as a file.
    pub fn resolve(&self, id_or_path: &str) -> Result<PromptTemplate, TemplateError> {
        if let Some(t) = self.templates.get(id_or_path) {
            return Ok(t.clone());
        }
        let path = Path::new(id_or_path);
        if path.is_file() {
            return PromptTemplate::load_file(path);
        }
        Err(TemplateError::Unknown(id_or_path.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }
}
