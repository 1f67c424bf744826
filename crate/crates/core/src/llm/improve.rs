//! Self-evaluation, input optimization and output optimization.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::generate::{GenerationSession, SessionStatus};
use super::prompts::{input_optimization_prompt, self_eval_prompt, self_eval_reask, Criteria, OUTPUT_OPTIMIZATION};
use super::provider::{ChatMessage, ChatProvider};
use super::LlmError;
use crate::diagnostics::{Diagnostic, DiagnosticCode, Severity};
use crate::dsl::{self, render};
use crate::powl::{auto_fix_reuse, structural_equal, Node};

/// Re-asks after an unparseable self-evaluation reply.
pub const SELF_EVAL_REASKS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfEvaluation {
    pub scores: Vec<f64>,
    /// 0-based index of the winner.
    pub selected: usize,
    pub requests: u32,
}

fn score_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^[\s*#>`_-]*R\s*(\d+)[\s*_`]*[:=][\s*_`]*(\d+(?:\.\d+)?|\.\d+)[\s*_`]*(?:/\s*1(?:\.0+)?)?")
            .expect("valid regex")
    })
}

/// Scans the reply line by line for `R<i>: <score>`. A later line for the
/// same candidate overrides an earlier one. Returns `None` unless every
/// candidate 1..=k has a score in [0, 1].
pub fn parse_scores(reply: &str, k: usize) -> Option<Vec<f64>> {
    let mut scores = vec![None; k];
    for line in reply.lines() {
        let Some(c) = score_line().captures(line) else { continue };
        let (Ok(i), Ok(v)) = (c[1].parse::<usize>(), c[2].parse::<f64>()) else { continue };
        if (1..=k).contains(&i) && (0.0..=1.0).contains(&v) {
            scores[i - 1] = Some(v);
        }
    }
    scores.into_iter().collect()
}

/// Highest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Asks the provider to score each candidate (labelled R1..Rk) and picks
/// the best.
pub fn self_evaluate_select(
    description: &str,
    candidates: &[Node],
    criteria: Criteria,
    provider: &dyn ChatProvider,
) -> Result<SelfEvaluation, LlmError> {
    if candidates.len() < 2 {
        return Err(LlmError::TooFewCandidates(candidates.len()));
    }
    let k = candidates.len();
    let scripts: Vec<String> = candidates.iter().map(render).collect();
    let mut conversation = vec![ChatMessage::user(self_eval_prompt(description, &scripts, criteria))];
    for ask in 0..=SELF_EVAL_REASKS {
        let reply = provider.complete(&conversation)?;
        if let Some(scores) = parse_scores(&reply, k) {
            let selected = argmax(&scores);
            return Ok(SelfEvaluation { scores, selected, requests: ask + 1 });
        }
        conversation.push(ChatMessage::assistant(reply));
        conversation.push(ChatMessage::user(self_eval_reask(k)));
    }
    Err(LlmError::Diagnostic(Diagnostic::new(
        DiagnosticCode::UnparseableEvaluation,
        format!("no score line for each of the {k} candidates after {SELF_EVAL_REASKS} re-asks"),
        "",
    )))
}

/// Rewrites a description to be richer and more explicit. Returns the
/// trimmed reply as is.
pub fn optimize_input(description: &str, provider: &dyn ChatProvider) -> Result<String, LlmError> {
    if description.trim().is_empty() {
        return Err(LlmError::EmptyDescription);
    }
    let reply = provider.complete(&[ChatMessage::user(input_optimization_prompt(description))])?;
    let out = reply.trim();
    if out.is_empty() {
        return Err(LlmError::Diagnostic(Diagnostic::new(
            DiagnosticCode::EmptyResponse,
            "the optimized description is empty",
            "",
        )));
    }
    Ok(out.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputOptimization {
    /// Conversation sends, including the successful one.
    pub sends: u32,
    /// False when the reply describes the same model.
    pub changed: bool,
    pub auto_fixed: bool,
}

/// Asks the provider to improve its own accepted model. A reply with
/// critical diagnostics is answered by sending the identical conversation
/// again, without error details, up to `retry_limit` sends in total. On
/// exhaustion the session is left untouched and `OPTIMIZATION_FAILED` is
/// returned.
pub fn optimize_output(
    session: &mut GenerationSession,
    provider: &dyn ChatProvider,
    retry_limit: u32,
) -> Result<OutputOptimization, LlmError> {
    let original = session.model_or_err()?.clone();
    let mut conversation = session.conversation.clone();
    conversation.push(ChatMessage::user(OUTPUT_OPTIMIZATION.trim_end()));
    let mut last = Vec::new();
    for send in 1..=retry_limit.max(1) {
        let reply = provider.complete(&conversation)?;
        match dsl::interpret(&reply) {
            Err(report) => last = report.into_diagnostics(),
            Ok(ev) => {
                let fix = ev.report.has_severity(Severity::Adjustable);
                let model = if fix { auto_fix_reuse(&ev.model).0 } else { ev.model };
                let changed = !structural_equal(&original, &model);
                conversation.push(ChatMessage::assistant(reply.clone()));
                session.conversation = conversation;
                session.script = dsl::extract_code(&reply).ok();
                session.model = Some(model);
                if fix {
                    session.auto_fixed = true;
                    session.status = SessionStatus::SucceededWithAutofix;
                }
                return Ok(OutputOptimization { sends: send, changed, auto_fixed: fix });
            }
        }
    }
    let detail = last.iter().map(|d| d.code.as_str()).collect::<Vec<_>>().join(", ");
    Err(LlmError::Diagnostic(Diagnostic::new(
        DiagnosticCode::OptimizationFailed,
        format!("no acceptable model after {} sends (last errors: {detail}); original model kept", retry_limit.max(1)),
        "",
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::generate::{generate, GenerationConfig};
    use crate::llm::provider::{FnProvider, ScriptedProvider};
    use crate::powl::PowlNode;

    const VALID: &str = "```python\na = gen.activity('A')\nb = gen.activity('B')\n\
                         final_model = gen.partial_order(dependencies=[(a, b)])\n```";
    const IMPROVED: &str = "```python\na = gen.activity('A')\nb = gen.activity('B')\n\
                            final_model = gen.partial_order(dependencies=[(a,), (b,)])\n```";
    const BROKEN: &str = "final_model = gen.nope()";

    fn cands() -> Vec<Node> {
        ["A", "B"].map(|l| PowlNode::activity(l).unwrap()).to_vec()
    }

    #[test]
    fn score_parsing_corpus() {
        assert_eq!(parse_scores("R1: 0.6\nR2: 0.9", 2), Some(vec![0.6, 0.9]));
        let prose = "Let me look at each one.\nR1 is decent.\n\n**R1:** 0.7\n- R2: .85\nOverall R2 wins.";
        assert_eq!(parse_scores(prose, 2), Some(vec![0.7, 0.85]));
        assert_eq!(parse_scores("r1 = 1\nR2: 0/1\n", 2), Some(vec![1.0, 0.0]));
        assert_eq!(parse_scores("R1: 0.5", 2), None);
        assert_eq!(parse_scores("R1: 7\nR2: 0.5", 2), None);
        assert_eq!(parse_scores("R1: 0.2\nR2: 0.3\nR1: 0.9", 2), Some(vec![0.9, 0.3]));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.6, 0.9]), 1);
        assert_eq!(argmax(&[0.8, 0.8]), 0);
        assert_eq!(argmax(&[0.1, 0.8, 0.8]), 1);
    }

    #[test]
    fn selects_by_score() {
        let p = ScriptedProvider::texts(["R1: 0.6\nR2: 0.9"]);
        let r = self_evaluate_select("d", &cands(), Criteria::General, &p).unwrap();
        assert_eq!((r.scores.clone(), r.selected, r.requests), (vec![0.6, 0.9], 1, 1));
        let prompt = &p.requests()[0][0].content;
        assert!(prompt.contains("**Behavior Accuracy:**") && prompt.contains("R2:\n```python"));
    }

    #[test]
    fn tie_selects_first() {
        let p = ScriptedProvider::texts(["R1: 0.8\nR2: 0.8"]);
        assert_eq!(self_evaluate_select("d", &cands(), Criteria::Conformance, &p).unwrap().selected, 0);
    }

    #[test]
    fn reasks_then_gives_up() {
        let p = ScriptedProvider::texts(["I like both.", "R1: 0.3\nR2: 0.1"]);
        let r = self_evaluate_select("d", &cands(), Criteria::General, &p).unwrap();
        assert_eq!((r.selected, r.requests), (0, 2));

        let p = ScriptedProvider::texts(["no scores here"]);
        match self_evaluate_select("d", &cands(), Criteria::General, &p) {
            Err(LlmError::Diagnostic(d)) => assert_eq!(d.code, DiagnosticCode::UnparseableEvaluation),
            r => panic!("{r:?}"),
        }
        assert_eq!(p.calls(), 1 + SELF_EVAL_REASKS as usize);
    }

    #[test]
    fn needs_two_candidates() {
        let p = ScriptedProvider::texts(["R1: 1"]);
        assert!(matches!(
            self_evaluate_select("d", &cands()[..1], Criteria::General, &p),
            Err(LlmError::TooFewCandidates(1))
        ));
        assert_eq!(p.calls(), 0);
    }

    #[test]
    fn input_optimization_echo() {
        let echo = FnProvider::new("echo", |m: &[ChatMessage]| {
            let c = &m[0].content;
            Ok(c[c.find("Process description:\n").unwrap() + 21..].to_string())
        });
        let desc = "Orders are received and then shipped.";
        assert_eq!(optimize_input(desc, &echo).unwrap(), desc);

        let p = ScriptedProvider::texts(["  richer text \n"]);
        assert_eq!(optimize_input(desc, &p).unwrap(), "richer text");
        let sent = &p.requests()[0][0].content;
        assert!(sent.contains("**Detail Enhancement:**"));
        assert!(sent.contains("there is an exclusive choice between performing X or skipping it"));
        assert!(sent.ends_with(desc));
    }

    fn session(p: &ScriptedProvider) -> GenerationSession {
        generate("A then B", p, &GenerationConfig::default()).unwrap()
    }

    #[test]
    fn unchanged_model_accepted() {
        let p = ScriptedProvider::texts([VALID]);
        let mut s = session(&p);
        let before = s.model.clone().unwrap();
        let r = optimize_output(&mut s, &p, 5).unwrap();
        assert_eq!((r.sends, r.changed), (1, false));
        assert!(structural_equal(&before, s.model.as_ref().unwrap()));
        assert!(s.conversation[s.conversation.len() - 2].content.contains("**only where genuinely beneficial**"));
    }

    #[test]
    fn resends_identical_conversation() {
        let p = ScriptedProvider::texts([VALID, BROKEN, BROKEN, IMPROVED]);
        let mut s = session(&p);
        let r = optimize_output(&mut s, &p, 5).unwrap();
        assert_eq!((r.sends, r.changed), (3, true));
        let reqs = p.requests();
        let sends = &reqs[1..];
        assert_eq!(sends.len(), 3);
        let bytes: Vec<String> = sends.iter().map(|c| serde_json::to_string(c).unwrap()).collect();
        assert!(bytes.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(sends[0].last().unwrap().content, OUTPUT_OPTIMIZATION.trim_end());
    }

    #[test]
    fn exhaustion_keeps_original() {
        let p = ScriptedProvider::texts([VALID, BROKEN]);
        let mut s = session(&p);
        let before_conv = s.conversation.clone();
        let before = s.model.clone().unwrap();
        match optimize_output(&mut s, &p, 5) {
            Err(LlmError::Diagnostic(d)) => assert_eq!(d.code, DiagnosticCode::OptimizationFailed),
            r => panic!("{r:?}"),
        }
        assert_eq!(p.calls(), 1 + 5);
        assert!(structural_equal(&before, s.model.as_ref().unwrap()));
        assert_eq!(s.conversation, before_conv);
        assert_eq!(s.status, SessionStatus::Succeeded);
    }

    #[test]
    fn adjustable_reply_is_fixed_at_once() {
        let reuse = "a = gen.activity('A')\nb = gen.activity('B')\n\
                     final_model = gen.xor(gen.partial_order(dependencies=[(a, b)]), a)";
        let p = ScriptedProvider::texts([VALID, reuse]);
        let mut s = session(&p);
        let r = optimize_output(&mut s, &p, 5).unwrap();
        assert!(r.auto_fixed && r.changed);
        assert_eq!(s.status, SessionStatus::SucceededWithAutofix);
    }
}
