//! Chat providers, prompt assembly and the generation loop.

mod generate;
mod improve;
pub mod prompts;
mod provider;

use thiserror::Error;

use crate::diagnostics::Diagnostic;

pub use generate::{
    generate, refine, FailureReason, GenerationConfig, GenerationSession, IterationRecord, SessionStatus,
};
pub use improve::{
    argmax, optimize_input, optimize_output, parse_scores, self_evaluate_select, OutputOptimization,
    SelfEvaluation, SELF_EVAL_REASKS,
};
pub use prompts::{build_initial_prompt, Criteria};
pub use provider::{
    build_provider, parse_response, request_body, ChatMessage, ChatProvider, FnProvider, HttpProvider,
    ProviderConfig, ProviderError, ProviderKind, Role, ScriptedProvider, ScriptedReply,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("process description is empty")]
    EmptyDescription,
    #[error("feedback is empty")]
    EmptyFeedback,
    #[error("session has no accepted model")]
    NotSucceeded,
    #[error("self-evaluation needs at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{0}")]
    Diagnostic(Diagnostic),
}
