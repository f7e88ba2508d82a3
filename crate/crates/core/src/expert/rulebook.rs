//! Rule language: facts, condition patterns, actions and the rulebook document format.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ExpertError;
use crate::assessment::{KnowledgeBand, LevelMix, Phase};
use crate::profiler::LearningStyle;

/// A fact or pattern argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Style(LearningStyle),
    Band(KnowledgeBand),
    Str(String),
}

impl Scalar {
    /// Ordering between two scalars of the same kind; `None` across kinds.
    pub fn compare(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Num(a), Scalar::Num(b)) => a.partial_cmp(b),
            (Scalar::Style(a), Scalar::Style(b)) => Some(a.cmp(b)),
            (Scalar::Band(a), Scalar::Band(b)) => Some(a.cmp(b)),
            (Scalar::Str(a), Scalar::Str(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Num(n) => write!(f, "{n}"),
            Scalar::Style(s) => write!(f, "{s}"),
            Scalar::Band(b) => write!(f, "{b:?}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

/// Argument kinds used by the fact vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Style,
    Number,
    Band,
    Text,
}

/// The closed fact vocabulary: predicate name and argument kinds.
pub const VOCABULARY: &[(&str, &[ArgKind])] = &[
    ("dominant_style", &[ArgKind::Style]),
    ("style_score", &[ArgKind::Style, ArgKind::Number]),
    ("effectiveness", &[ArgKind::Style, ArgKind::Number]),
    ("prior_band", &[ArgKind::Text, ArgKind::Band]),
    ("overall_band", &[ArgKind::Band]),
    ("attempt_count", &[ArgKind::Text, ArgKind::Number]),
    ("prereq_band", &[ArgKind::Text, ArgKind::Band]),
    ("misconception", &[ArgKind::Text]),
    ("phase", &[ArgKind::Text]),
    ("pretest_band", &[ArgKind::Band]),
];

pub fn signature(predicate: &str) -> Option<&'static [ArgKind]> {
    VOCABULARY
        .iter()
        .find(|(name, _)| *name == predicate)
        .map(|(_, kinds)| *kinds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<Scalar>,
}

impl Fact {
    pub fn new(predicate: &str, args: Vec<Scalar>) -> Fact {
        Fact {
            predicate: predicate.to_string(),
            args,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    fn parse(s: &str) -> Option<Comparator> {
        Some(match s {
            "=" | "==" => Comparator::Eq,
            "!=" | "≠" => Comparator::Ne,
            "<" => Comparator::Lt,
            "<=" | "≤" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" | "≥" => Comparator::Ge,
            _ => return None,
        })
    }

    pub fn holds(self, ordering: Ordering) -> bool {
        match self {
            Comparator::Eq => ordering == Ordering::Equal,
            Comparator::Ne => ordering != Ordering::Equal,
            Comparator::Lt => ordering == Ordering::Less,
            Comparator::Le => ordering != Ordering::Greater,
            Comparator::Gt => ordering == Ordering::Greater,
            Comparator::Ge => ordering != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Pattern {
    Any,
    Value(Scalar),
}

/// One fact test. Leading arguments must equal the fact's; the last one is
/// checked with `comparator`. `*` matches anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub predicate: String,
    pub args: Vec<Pattern>,
    pub comparator: Comparator,
}

impl Condition {
    pub fn matches(&self, fact: &Fact) -> bool {
        if fact.predicate != self.predicate || fact.args.len() != self.args.len() {
            return false;
        }
        let last = self.args.len().saturating_sub(1);
        self.args.iter().zip(&fact.args).enumerate().all(|(i, (pattern, value))| {
            let Pattern::Value(expected) = pattern else {
                return true;
            };
            let comparator = if i == last { self.comparator } else { Comparator::Eq };
            value
                .compare(expected)
                .is_some_and(|ordering| comparator.holds(ordering))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Skip,
    Present,
    Repeat,
    Remediate,
    Remove,
}

/// A plan-setting emitted by a fired rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action")]
pub enum Action {
    SetVariant {
        style: LearningStyle,
    },
    SetQuestionCount {
        phase: Phase,
        n: u32,
    },
    SetLevelMix {
        phase: Phase,
        mix: LevelMix,
    },
    SetFlow {
        flow: FlowKind,
        /// Remediation target; without one the weakest prerequisite is used.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
    SetHintBudget {
        n: u32,
    },
    FlagForTeacher {
        reason: String,
    },
}

pub const ACTION_NAMES: &[&str] = &[
    "SetVariant",
    "SetQuestionCount",
    "SetLevelMix",
    "SetFlow",
    "SetHintBudget",
    "FlagForTeacher",
];

/// The plan field an action writes. Two actions conflict iff they share a setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    Variant,
    QuestionCount(Phase),
    LevelMix(Phase),
    Flow,
    HintBudget,
    TeacherFlag,
}

impl Action {
    pub fn setting(&self) -> Setting {
        match self {
            Action::SetVariant { .. } => Setting::Variant,
            Action::SetQuestionCount { phase, .. } => Setting::QuestionCount(*phase),
            Action::SetLevelMix { phase, .. } => Setting::LevelMix(*phase),
            Action::SetFlow { .. } => Setting::Flow,
            Action::SetHintBudget { .. } => Setting::HintBudget,
            Action::FlagForTeacher { .. } => Setting::TeacherFlag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub priority: i64,
    pub conditions: Vec<Condition>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rulebook {
    pub id: String,
    pub rules: Vec<Rule>,
}

impl Rulebook {
    pub fn empty(id: &str) -> Rulebook {
        Rulebook {
            id: id.to_string(),
            rules: Vec::new(),
        }
    }

    pub fn from_json(doc: &str) -> Result<Rulebook, ExpertError> {
        parse_rulebook(doc)
    }

    /// Serializes back into the document format accepted by [`parse_rulebook`].
    pub fn to_document(&self) -> Value {
        let rules: Vec<Value> = self
            .rules
            .iter()
            .map(|rule| {
                let conditions: Vec<Value> = rule
                    .conditions
                    .iter()
                    .map(|c| {
                        let args: Vec<Value> = c
                            .args
                            .iter()
                            .map(|p| match p {
                                Pattern::Any => Value::from("*"),
                                Pattern::Value(s) => serde_json::to_value(s).expect("scalar"),
                            })
                            .collect();
                        serde_json::json!({
                            "predicate": c.predicate,
                            "args": args,
                            "comparator": c.comparator,
                        })
                    })
                    .collect();
                serde_json::json!({
                    "id": rule.id,
                    "priority": rule.priority,
                    "conditions": conditions,
                    "actions": rule.actions,
                })
            })
            .collect();
        serde_json::json!({ "id": self.id, "rules": rules })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRulebook {
    id: String,
    rules: Vec<RawRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    id: String,
    #[serde(default)]
    priority: i64,
    #[serde(default)]
    conditions: Vec<RawCondition>,
    #[serde(default)]
    actions: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    predicate: String,
    #[serde(default)]
    args: Vec<Value>,
    #[serde(default)]
    comparator: Option<String>,
}

/// Parses and checks a rulebook document against the fact vocabulary.
pub fn parse_rulebook(doc: &str) -> Result<Rulebook, ExpertError> {
    let raw: RawRulebook =
        serde_json::from_str(doc).map_err(|e| ExpertError::Parse(e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut rules = Vec::with_capacity(raw.rules.len());
    for rule in raw.rules {
        if !seen.insert(rule.id.clone()) {
            return Err(ExpertError::DuplicateRuleId(rule.id));
        }
        if rule.conditions.is_empty() || rule.actions.is_empty() {
            return Err(ExpertError::EmptyRule(rule.id));
        }
        let conditions = rule
            .conditions
            .into_iter()
            .map(|c| parse_condition(&rule.id, c))
            .collect::<Result<Vec<_>, _>>()?;
        let actions = rule
            .actions
            .into_iter()
            .map(|a| parse_action(&rule.id, a))
            .collect::<Result<Vec<_>, _>>()?;
        rules.push(Rule {
            id: rule.id,
            priority: rule.priority,
            conditions,
            actions,
        });
    }
    Ok(Rulebook { id: raw.id, rules })
}

fn parse_condition(rule: &str, raw: RawCondition) -> Result<Condition, ExpertError> {
    let kinds = signature(&raw.predicate).ok_or_else(|| ExpertError::UnknownPredicate {
        rule: rule.to_string(),
        predicate: raw.predicate.clone(),
    })?;
    let bad = |detail: String| ExpertError::BadCondition {
        rule: rule.to_string(),
        detail,
    };
    if raw.args.len() != kinds.len() {
        return Err(bad(format!(
            "{} takes {} arguments, got {}",
            raw.predicate,
            kinds.len(),
            raw.args.len()
        )));
    }
    let comparator = match raw.comparator.as_deref() {
        None => Comparator::Eq,
        Some(s) => Comparator::parse(s).ok_or_else(|| bad(format!("unknown comparator `{s}`")))?,
    };
    let args = raw
        .args
        .iter()
        .zip(kinds)
        .map(|(value, kind)| parse_pattern(value, *kind).ok_or_else(|| bad(format!("`{value}` is not a valid {kind:?} argument of {}", raw.predicate))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Condition {
        predicate: raw.predicate,
        args,
        comparator,
    })
}

fn parse_pattern(value: &Value, kind: ArgKind) -> Option<Pattern> {
    if value.as_str() == Some("*") {
        return Some(Pattern::Any);
    }
    let scalar = match kind {
        ArgKind::Number => Scalar::Num(value.as_f64().filter(|n| n.is_finite())?),
        ArgKind::Text => Scalar::Str(value.as_str()?.to_string()),
        ArgKind::Style => Scalar::Style(serde_json::from_value(value.clone()).ok()?),
        ArgKind::Band => Scalar::Band(serde_json::from_value(value.clone()).ok()?),
    };
    Some(Pattern::Value(scalar))
}

fn parse_action(rule: &str, raw: Value) -> Result<Action, ExpertError> {
    let name = raw
        .get("action")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    if !ACTION_NAMES.contains(&name.as_str()) {
        return Err(ExpertError::UnknownAction {
            rule: rule.to_string(),
            action: name,
        });
    }
    let bad = |detail: String| ExpertError::BadAction {
        rule: rule.to_string(),
        detail,
    };
    let action: Action = serde_json::from_value(raw).map_err(|e| bad(e.to_string()))?;
    match &action {
        Action::SetQuestionCount { n: 0, .. } => {
            return Err(bad(format!("{name} needs n >= 1")));
        }
        Action::SetLevelMix { mix, .. } if mix.total() == 0 => {
            return Err(bad("level mix must contain at least one question".into()));
        }
        Action::SetFlow {
            flow,
            target: Some(_),
        } if *flow != FlowKind::Remediate => {
            return Err(bad("only remediate takes a target".into()));
        }
        _ => {}
    }
    Ok(action)
}
