//! Forward-chaining production rules that turn learner facts into a lesson plan.
//!
//! Rules never assert facts, so a single pass over the rulebook reaches the
//! fixed point. Conflicting plan-settings are resolved by priority, then by
//! number of conditions, then by rulebook position.

mod inference;
mod planner;
mod rulebook;

use thiserror::Error;

pub use inference::{Inference, infer, infer_traced, rule_fires};
pub use planner::{
    DEFAULT_HINT_BUDGET, DEFAULT_POSTTEST_MIX, DEFAULT_PRETEST_MIX, FactPhase, Flow, LessonPlan,
    default_variant, learner_facts, plan_concept, resolve_flow, weakest_prerequisite,
};
pub use rulebook::{
    ACTION_NAMES, Action, ArgKind, Comparator, Condition, Fact, FlowKind, Pattern, Rule, Rulebook,
    Scalar, Setting, VOCABULARY, parse_rulebook, signature,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpertError {
    #[error("malformed rulebook document: {0}")]
    Parse(String),
    #[error("rule `{rule}` uses unknown predicate `{predicate}`")]
    UnknownPredicate { rule: String, predicate: String },
    #[error("rule `{rule}` uses unknown action `{action}`")]
    UnknownAction { rule: String, action: String },
    #[error("rule `{0}` needs at least one condition and one action")]
    EmptyRule(String),
    #[error("rule id `{0}` appears more than once")]
    DuplicateRuleId(String),
    #[error("rule `{rule}`: {detail}")]
    BadCondition { rule: String, detail: String },
    #[error("rule `{rule}`: {detail}")]
    BadAction { rule: String, detail: String },
}
