//! Interactive translation of natural language into LTL.
//!
//! The crate holds the formula layer ([`ltl`]), few-shot prompt templates
//! ([`prompt`]), completion backends ([`backend`]), completion parsing and
//! vote aggregation ([`response`], [`aggregate`]), the interactive session
//! state machine ([`session`]) and the benchmark harness ([`eval`]).

pub mod aggregate;
pub mod backend;
pub mod dict;
pub mod eval;
pub mod ltl;
pub mod prompt;
pub mod response;
pub mod session;

pub use aggregate::{aggregate, AggregatedResult, FragmentResult, ScoredCandidate};
pub use backend::{BackendError, BackendRegistry, CompletionBackend, CompletionBatch, CompletionRequest};
pub use ltl::{equivalent, evaluate, parse, print, Bound, EquivVerdict, Formula, LassoTrace, PrintMode};
pub use prompt::{PromptTemplate, TemplateStore};
pub use response::{parse_completion, ParsedCompletion};
pub use session::{SessionError, SessionManager, SessionState, SessionStore, Settings, Workbench};
