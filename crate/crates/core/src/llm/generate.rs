use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::prompts::{self, build_initial_prompt, error_prompt, feedback_prompt};
use super::provider::{ChatMessage, ChatProvider};
use super::LlmError;
use crate::diagnostics::{Diagnostic, Severity};
use crate::dsl::{self, render};
use crate::powl::{auto_fix_reuse, opt_node, validate, Node};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Attempts that may end with only adjustable diagnostics before the
    /// reply is repaired automatically.
    pub adjustable_iteration_threshold: u32,
    pub total_iteration_limit: u32,
    /// Required activity labels, listed in the prompt in seeded random order.
    pub label_constraint: Option<Vec<String>>,
    pub seed: u64,
    #[serde(skip)]
    pub few_shot: Vec<String>,
    #[serde(skip)]
    pub negative: String,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            adjustable_iteration_threshold: 10,
            total_iteration_limit: 15,
            label_constraint: None,
            seed: 0,
            few_shot: vec![prompts::FEW_SHOT.to_string()],
            negative: prompts::NEGATIVE.to_string(),
        }
    }
}

impl GenerationConfig {
    pub fn check(&self) -> Result<(), LlmError> {
        if self.total_iteration_limit == 0 || self.total_iteration_limit < self.adjustable_iteration_threshold {
            return Err(LlmError::Config(format!(
                "total_iteration_limit ({}) must be positive and at least adjustable_iteration_threshold ({})",
                self.total_iteration_limit, self.adjustable_iteration_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Succeeded,
    SucceededWithAutofix,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum FailureReason {
    IterationLimit,
    Provider(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 for the initial generation, n for the n-th refinement.
    pub round: u32,
    /// 1-based within the round.
    pub attempt: u32,
    pub script: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    /// Provider round trip plus local checking.
    pub wall_secs: f64,
    #[serde(default)]
    pub provider_secs: f64,
    #[serde(default)]
    pub auto_fixed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationSession {
    pub description: String,
    pub conversation: Vec<ChatMessage>,
    pub iterations: Vec<IterationRecord>,
    #[serde(with = "opt_node")]
    pub model: Option<Node>,
    /// Script the accepted model was read from.
    pub script: Option<String>,
    pub status: SessionStatus,
    pub auto_fixed: bool,
    pub failure: Option<FailureReason>,
    pub rounds: u32,
}

impl GenerationSession {
    pub fn succeeded(&self) -> bool {
        self.status != SessionStatus::Failed
    }

    /// Attempts used in the latest round.
    pub fn last_round_iterations(&self) -> u32 {
        self.iterations.iter().filter(|r| r.round == self.rounds).count() as u32
    }

    pub fn model_or_err(&self) -> Result<&Node, LlmError> {
        self.model.as_ref().filter(|_| self.succeeded()).ok_or(LlmError::NotSucceeded)
    }
}

enum Verdict {
    Accept(Node, bool),
    Retry,
}

/// Sends the conversation until a script is accepted or the round's budget
/// is spent. Critical diagnostics (alone or mixed with adjustable ones) are
/// fed back on every attempt. Adjustable-only replies are fed back up to the
/// threshold attempt; after it they are repaired and accepted.
fn run_round(session: &mut GenerationSession, provider: &dyn ChatProvider, cfg: &GenerationConfig) {
    for attempt in 1..=cfg.total_iteration_limit {
        let started = Instant::now();
        let reply = provider.complete(&session.conversation);
        let provider_secs = started.elapsed().as_secs_f64();
        let reply = match reply {
            Ok(r) => r,
            Err(e) => {
                log::warn!("provider {} failed: {e}", provider.name());
                session.iterations.push(IterationRecord {
                    round: session.rounds,
                    attempt,
                    script: None,
                    diagnostics: Vec::new(),
                    wall_secs: started.elapsed().as_secs_f64(),
                    provider_secs,
                    auto_fixed: false,
                });
                session.fail(FailureReason::Provider(e.to_string()));
                return;
            }
        };
        session.conversation.push(ChatMessage::assistant(reply.clone()));
        let script = dsl::extract_code(&reply).ok();
        let (verdict, diagnostics) = match dsl::interpret(&reply) {
            Err(report) => (Verdict::Retry, report.into_diagnostics()),
            Ok(ev) if !ev.report.has_severity(Severity::Adjustable) => {
                (Verdict::Accept(ev.model, false), ev.report.into_diagnostics())
            }
            Ok(ev) if attempt > cfg.adjustable_iteration_threshold => {
                let (fixed, n) = auto_fix_reuse(&ev.model);
                log::info!("auto-fixed {n} reused submodels on attempt {attempt}");
                debug_assert!(validate(&fixed).is_empty());
                (Verdict::Accept(fixed, true), ev.report.into_diagnostics())
            }
            Ok(ev) => (Verdict::Retry, ev.report.into_diagnostics()),
        };
        let record = IterationRecord {
            round: session.rounds,
            attempt,
            script: script.clone(),
            diagnostics: diagnostics.clone(),
            wall_secs: 0.0,
            provider_secs,
            auto_fixed: matches!(verdict, Verdict::Accept(_, true)),
        };
        match verdict {
            Verdict::Accept(model, fixed) => {
                session.iterations.push(IterationRecord { wall_secs: started.elapsed().as_secs_f64(), ..record });
                session.model = Some(model);
                session.script = script;
                session.failure = None;
                session.auto_fixed = fixed;
                session.status = if fixed { SessionStatus::SucceededWithAutofix } else { SessionStatus::Succeeded };
                return;
            }
            Verdict::Retry => {
                let blocking: Vec<Diagnostic> =
                    diagnostics.into_iter().filter(|d| d.severity != Severity::Warning).collect();
                session.iterations.push(IterationRecord { wall_secs: started.elapsed().as_secs_f64(), ..record });
                if attempt < cfg.total_iteration_limit {
                    session.conversation.push(ChatMessage::user(error_prompt(&blocking)));
                }
            }
        }
    }
    session.fail(FailureReason::IterationLimit);
}

impl GenerationSession {
    fn fail(&mut self, reason: FailureReason) {
        self.status = SessionStatus::Failed;
        self.failure = Some(reason);
        self.model = None;
        self.script = None;
        self.auto_fixed = false;
    }
}

/// Generates a model for `description`, feeding diagnostics back until a
/// script is accepted or the attempt budget is spent. Provider failures end
/// the session with [`FailureReason::Provider`]; only precondition
/// violations are returned as errors.
pub fn generate(
    description: &str,
    provider: &dyn ChatProvider,
    cfg: &GenerationConfig,
) -> Result<GenerationSession, LlmError> {
    cfg.check()?;
    let conversation = build_initial_prompt(description, cfg)?;
    let mut session = GenerationSession {
        description: description.trim().to_string(),
        conversation,
        iterations: Vec::new(),
        model: None,
        script: None,
        status: SessionStatus::Failed,
        auto_fixed: false,
        failure: None,
        rounds: 0,
    };
    run_round(&mut session, provider, cfg);
    Ok(session)
}

/// Asks for a revision of the accepted model. The round gets a fresh attempt
/// budget; if it fails the session ends up failed without a model.
pub fn refine(
    session: &mut GenerationSession,
    feedback: &str,
    provider: &dyn ChatProvider,
    cfg: &GenerationConfig,
) -> Result<(), LlmError> {
    if feedback.trim().is_empty() {
        return Err(LlmError::EmptyFeedback);
    }
    cfg.check()?;
    let current = render(session.model_or_err()?);
    session.conversation.push(ChatMessage::user(feedback_prompt(feedback, &current)));
    session.rounds += 1;
    run_round(session, provider, cfg);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::DiagnosticCode;
    use crate::llm::provider::{ScriptedProvider, ScriptedReply};
    use crate::powl::{structural_equal, PowlNode};

    const VALID: &str = "```python\na = gen.activity('A')\nb = gen.activity('B')\n\
                         final_model = gen.partial_order(dependencies=[(a, b)])\n```";
    const UNKNOWN_FN: &str = "```python\na = gen.activity('A')\nfinal_model = gen.sequence(a)\n```";
    const REUSE: &str = "```python\na = gen.activity('A')\nb = gen.activity('B')\n\
                         final_model = gen.xor(gen.partial_order(dependencies=[(a, b)]), a)\n```";
    const BROKEN: &str = "```python\nfinal_model = gen.activity('A'\n```";

    fn run(replies: &[&str]) -> (GenerationSession, ScriptedProvider) {
        let p = ScriptedProvider::texts(replies.iter().copied());
        let s = generate("A then B", &p, &GenerationConfig::default()).unwrap();
        (s, p)
    }

    fn error_prompts(s: &GenerationSession) -> usize {
        s.conversation.iter().filter(|m| m.content.starts_with("Your code could not be accepted")).count()
    }

    #[test]
    fn valid_first_time() {
        let (s, p) = run(&[VALID]);
        assert_eq!(s.status, SessionStatus::Succeeded);
        assert_eq!(s.iterations.len(), 1);
        assert_eq!(p.calls(), 1);
        let expected = PowlNode::sequence(vec![PowlNode::activity("A").unwrap(), PowlNode::activity("B").unwrap()]);
        assert!(structural_equal(s.model.as_ref().unwrap(), &expected.unwrap()));
    }

    #[test]
    fn two_critical_then_valid() {
        let (s, _) = run(&[UNKNOWN_FN, UNKNOWN_FN, VALID]);
        assert_eq!(s.status, SessionStatus::Succeeded);
        assert_eq!(s.iterations.len(), 3);
        assert_eq!(error_prompts(&s), 2);
        assert!(s.iterations[0].diagnostics.iter().any(|d| d.code == DiagnosticCode::UnknownFunction));
        let prompt = &s.conversation[3].content;
        assert!(prompt.contains("UNKNOWN_FUNCTION"), "{prompt}");
    }

    #[test]
    fn persistent_reuse_is_fixed_on_attempt_eleven() {
        let (s, p) = run(&[REUSE]);
        assert_eq!(s.status, SessionStatus::SucceededWithAutofix);
        assert_eq!(s.iterations.len(), 11);
        assert_eq!(p.calls(), 11);
        assert!(s.auto_fixed && s.iterations[10].auto_fixed);
        assert!(s.iterations[..10].iter().all(|r| !r.auto_fixed));
        assert!(validate(s.model.as_ref().unwrap()).is_empty());
    }

    #[test]
    fn persistent_parse_error_fails_at_limit() {
        let (s, p) = run(&[BROKEN]);
        assert_eq!(s.status, SessionStatus::Failed);
        assert_eq!(s.failure, Some(FailureReason::IterationLimit));
        assert_eq!(s.iterations.len(), 15);
        assert_eq!(p.calls(), 15);
        assert!(s.model.is_none());
        assert_eq!(error_prompts(&s), 14);
    }

    #[test]
    fn mixed_diagnostics_count_as_critical() {
        let mixed = "```python\na = gen.activity('A')\nfinal_model = gen.xor(a, a, gen.sequence(a))\n```";
        let (s, _) = run(&[mixed]);
        assert_eq!(s.status, SessionStatus::Failed);
        assert_eq!(s.iterations.len(), 15);
    }

    #[test]
    fn adjustable_then_valid_does_not_autofix() {
        let (s, _) = run(&[REUSE, VALID]);
        assert_eq!(s.status, SessionStatus::Succeeded);
        assert!(!s.auto_fixed);
        assert!(s.iterations[0].diagnostics.iter().any(|d| d.code == DiagnosticCode::SubmodelReuse));
    }

    #[test]
    fn provider_error_fails_session() {
        let p = ScriptedProvider::new(vec![ScriptedReply::Error { error: "503".into() }]);
        let s = generate("d", &p, &GenerationConfig::default()).unwrap();
        assert_eq!(s.status, SessionStatus::Failed);
        assert!(matches!(s.failure, Some(FailureReason::Provider(ref m)) if m.contains("503")));
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn replaying_requests_is_deterministic() {
        let (_, p1) = run(&[UNKNOWN_FN, VALID]);
        let (_, p2) = run(&[UNKNOWN_FN, VALID]);
        assert_eq!(p1.requests(), p2.requests());
    }

    #[test]
    fn refine_makes_activity_skippable() {
        let p = ScriptedProvider::texts([
            VALID,
            "```python\na = gen.activity('A')\nb = gen.activity('B')\nskip_a = gen.xor(a, None)\n\
             final_model = gen.partial_order(dependencies=[(skip_a, b)])\n```",
        ]);
        let cfg = GenerationConfig::default();
        let mut s = generate("A then B", &p, &cfg).unwrap();
        refine(&mut s, "make activity A skippable", &p, &cfg).unwrap();
        assert_eq!(s.status, SessionStatus::Succeeded);
        assert_eq!(s.rounds, 1);
        let m = s.model.as_ref().unwrap();
        let PowlNode::PartialOrder(po) = &**m else { panic!("{m:?}") };
        let has_skippable_a = po.nodes().iter().any(|n| {
            matches!(&**n, PowlNode::Xor(ch) if ch.iter().any(|c| matches!(&**c, PowlNode::Silent))
                && ch.iter().any(|c| matches!(&**c, PowlNode::Activity(l) if l.as_str() == "A")))
        });
        assert!(has_skippable_a);
        let feedback_msg = &s.conversation[3].content;
        assert!(feedback_msg.contains("make activity A skippable") && feedback_msg.contains("gen.activity('A')"));
    }

    #[test]
    fn empty_feedback_never_calls_provider() {
        let p = ScriptedProvider::texts([VALID]);
        let cfg = GenerationConfig::default();
        let mut s = generate("d", &p, &cfg).unwrap();
        assert!(matches!(refine(&mut s, "  \n", &p, &cfg), Err(LlmError::EmptyFeedback)));
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn two_refinements_keep_history_in_order() {
        let p = ScriptedProvider::texts([VALID]);
        let cfg = GenerationConfig::default();
        let mut s = generate("d", &p, &cfg).unwrap();
        refine(&mut s, "first round", &p, &cfg).unwrap();
        refine(&mut s, "second round", &p, &cfg).unwrap();
        let users: Vec<&str> = s.conversation.iter().map(|m| m.content.as_str()).collect();
        let first = users.iter().position(|c| c.contains("first round")).unwrap();
        let second = users.iter().position(|c| c.contains("second round")).unwrap();
        assert!(first < second);
        assert_eq!(s.conversation.len(), 2 + 1 + 2 + 2);
        assert_eq!(s.rounds, 2);
    }

    #[test]
    fn failed_refine_drops_model() {
        let p = ScriptedProvider::texts([VALID, BROKEN]);
        let cfg = GenerationConfig::default();
        let mut s = generate("d", &p, &cfg).unwrap();
        refine(&mut s, "change", &p, &cfg).unwrap();
        assert_eq!(s.status, SessionStatus::Failed);
        assert!(s.model.is_none());
        assert_eq!(s.last_round_iterations(), 15);
        assert!(matches!(refine(&mut s, "again", &p, &cfg), Err(LlmError::NotSucceeded)));
    }

    #[test]
    fn session_json_round_trip() {
        let (s, _) = run(&[VALID]);
        let back: GenerationSession = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert!(structural_equal(back.model.as_ref().unwrap(), s.model.as_ref().unwrap()));
        assert_eq!(back.conversation, s.conversation);
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = GenerationConfig { total_iteration_limit: 5, ..Default::default() };
        let p = ScriptedProvider::texts([VALID]);
        assert!(matches!(generate("d", &p, &cfg), Err(LlmError::Config(_))));
    }
}
