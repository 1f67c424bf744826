//! Prompt texts. The fixed parts ship as plain-text assets under
//! `assets/prompts/`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::GenerationConfig;
use super::provider::ChatMessage;
use super::LlmError;
use crate::diagnostics::Diagnostic;

pub const ROLE: &str = include_str!("../../assets/prompts/role.txt");
pub const KNOWLEDGE: &str = include_str!("../../assets/prompts/knowledge.txt");
pub const FEW_SHOT: &str = include_str!("../../assets/prompts/few_shot.txt");
pub const NEGATIVE: &str = include_str!("../../assets/prompts/negative.txt");
pub const CRITERIA_GENERAL: &str = include_str!("../../assets/prompts/criteria_general.txt");
pub const CRITERIA_CONFORMANCE: &str = include_str!("../../assets/prompts/criteria_conformance.txt");
pub const INPUT_OPTIMIZATION: &str = include_str!("../../assets/prompts/input_optimization.txt");
pub const OUTPUT_OPTIMIZATION: &str = include_str!("../../assets/prompts/output_optimization.txt");

/// Line that precedes the process description in the generation prompt.
pub const DESCRIPTION_MARKER: &str = "Now generate the process model for the following process description:";
/// Line that precedes the label list in the generation prompt.
pub const LABELS_MARKER: &str = "Use exactly the following activity labels";
/// Opening of the self-evaluation prompt.
pub const SELF_EVAL_OPENING: &str = "Several candidate POWL models were generated";
/// Line that precedes the description in the input-optimization prompt.
pub const INPUT_DESCRIPTION_MARKER: &str = "Process description:";

/// Returns `labels` in an order fixed by `seed`.
pub fn shuffled_labels(labels: &[String], seed: u64) -> Vec<String> {
    let mut out = labels.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// System message with the role, then one user message holding knowledge,
/// examples, pitfalls, the description and the optional label list.
pub fn build_initial_prompt(description: &str, cfg: &GenerationConfig) -> Result<Vec<ChatMessage>, LlmError> {
    let description = description.trim();
    if description.is_empty() {
        return Err(LlmError::EmptyDescription);
    }
    let mut user = String::new();
    user.push_str(KNOWLEDGE.trim_end());
    for ex in &cfg.few_shot {
        user.push_str("\n\n");
        user.push_str(ex.trim_end());
    }
    user.push_str("\n\n");
    user.push_str(cfg.negative.trim_end());
    let _ = write!(user, "\n\n{DESCRIPTION_MARKER}\n{description}");
    if let Some(labels) = cfg.label_constraint.as_ref().filter(|l| !l.is_empty()) {
        let _ = writeln!(
            user,
            "\n\n{LABELS_MARKER}, each written exactly as given. The order of this list carries no meaning:"
        );
        for l in shuffled_labels(labels, cfg.seed) {
            let _ = writeln!(user, "- {l}");
        }
        user.truncate(user.trim_end().len());
    }
    Ok(vec![ChatMessage::system(ROLE.trim_end()), ChatMessage::user(user)])
}

fn bullet_list(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(|d| format!("- {d}")).collect::<Vec<_>>().join("\n")
}

/// Follow-up after a rejected script.
pub fn error_prompt(diagnostics: &[Diagnostic]) -> String {
    format!(
        "Your code could not be accepted. It produced the following errors:\n{}\n\n\
         Fix these errors and return the complete corrected script in a single python code block. \
         The model must still be assigned to 'final_model'.",
        bullet_list(diagnostics)
    )
}

pub fn feedback_prompt(feedback: &str, current_script: &str) -> String {
    format!(
        "Here is feedback on the current process model:\n{}\n\n\
         The current model is:\n```python\n{}\n```\n\n\
         Revise the model according to the feedback. Return the complete revised script in a single \
         python code block, assigning the model to 'final_model'.",
        feedback.trim(),
        current_script.trim_end()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criteria {
    General,
    Conformance,
}

impl Criteria {
    pub fn text(self) -> &'static str {
        match self {
            Criteria::General => CRITERIA_GENERAL,
            Criteria::Conformance => CRITERIA_CONFORMANCE,
        }
    }
}

pub fn self_eval_prompt(description: &str, scripts: &[String], criteria: Criteria) -> String {
    let k = scripts.len();
    let mut s = format!(
        "{SELF_EVAL_OPENING} for the process description below. \
         Evaluate each candidate and assign it an overall quality score.\n\n\
         Process description:\n{}\n",
        description.trim()
    );
    for (i, script) in scripts.iter().enumerate() {
        let _ = write!(s, "\nR{}:\n```python\n{}\n```\n", i + 1, script.trim_end());
    }
    let _ = write!(
        s,
        "\n{}\n\nScore every candidate with a number between 0 and 1. Finish your answer with exactly {k} lines, \
         one per candidate, in the form 'R<i>: <score>' (for example 'R1: 0.75').",
        criteria.text().trim_end()
    );
    s
}

pub fn self_eval_reask(k: usize) -> String {
    format!(
        "Your answer did not contain a score for every candidate. Reply with exactly {k} lines of the form \
         'R<i>: <score>' for i = 1..{k}, with each score between 0 and 1, and nothing else."
    )
}

pub fn input_optimization_prompt(description: &str) -> String {
    format!("{}\n\n{INPUT_DESCRIPTION_MARKER}\n{}", INPUT_OPTIMIZATION.trim_end(), description.trim())
}
