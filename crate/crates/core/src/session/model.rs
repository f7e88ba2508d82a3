use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::events::{Channel, Event, EventPayload, FlowDecision, Message};
use crate::assessment::{self, KnowledgeBand, Phase, TestInstance};
use crate::expert::LessonPlan;
use crate::profiler::{LearningStyle, StyleVector};

/// Initial effectiveness of every style.
pub const INITIAL_EFFECTIVENESS: f64 = 0.5;

/// Where a learner is in the course.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", content = "concept")]
pub enum SessionState {
    AwaitingProfile,
    ConceptPretest(String),
    ConceptLearning(String),
    ConceptPosttest(String),
    CourseComplete,
}

impl SessionState {
    pub fn concept(&self) -> Option<&str> {
        match self {
            SessionState::ConceptPretest(c)
            | SessionState::ConceptLearning(c)
            | SessionState::ConceptPosttest(c) => Some(c),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SessionState::AwaitingProfile => "AwaitingProfile",
            SessionState::ConceptPretest(_) => "ConceptPretest",
            SessionState::ConceptLearning(_) => "ConceptLearning",
            SessionState::ConceptPosttest(_) => "ConceptPosttest",
            SessionState::CourseComplete => "CourseComplete",
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.concept() {
            Some(c) => write!(f, "{}({c})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Whether `from -> to` is one of the legal session transitions.
pub fn is_legal_transition(from: &SessionState, to: &SessionState) -> bool {
    use SessionState::*;
    match (from, to) {
        (AwaitingProfile, ConceptPretest(_)) => true,
        (ConceptPretest(a), ConceptLearning(b)) => a == b,
        // Skipping or removing a concept passes through its post-test state.
        (ConceptPretest(a), ConceptPosttest(b)) => a == b,
        (ConceptPretest(a), ConceptPretest(b)) => a != b,
        (ConceptLearning(a), ConceptPosttest(b)) => a == b,
        (ConceptPosttest(_), ConceptPretest(_)) => true,
        (ConceptPosttest(_), CourseComplete) => true,
        _ => false,
    }
}

/// A test handed to the learner and not yet graded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveTest {
    pub test_id: String,
    pub concept: String,
    pub phase: Phase,
    pub instance: TestInstance,
    pub variant_style: LearningStyle,
    pub hint_budget: u32,
    #[serde(default)]
    pub hints_used: BTreeMap<String, u32>,
}

impl ActiveTest {
    pub fn hints_remaining(&self) -> u32 {
        self.hint_budget
            .saturating_sub(self.hints_used.values().sum::<u32>())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptState {
    pub band: Option<KnowledgeBand>,
    /// Raw score of the most recent post-test.
    pub last_score: Option<f64>,
    /// Raw score of the pre-test of the attempt in progress.
    pub pretest_score: Option<f64>,
    /// Failed post-tests so far.
    pub attempts: u32,
    pub used_questions: BTreeSet<String>,
    pub last_variant: Option<LearningStyle>,
    pub tried_variants: BTreeSet<LearningStyle>,
    /// Learning was skipped; the concept no longer blocks the sequence.
    #[serde(default)]
    pub skipped: bool,
    pub removed: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("event {found} out of sequence, expected {expected}")]
    OutOfSequence { expected: u64, found: u64 },
    #[error("event {seq} ({kind}) does not apply to the current model: {detail}")]
    Inapplicable {
        seq: u64,
        kind: &'static str,
        detail: String,
    },
}

/// Everything the tutor knows about one learner. Derived from `event_log`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerModel {
    pub learner_id: String,
    pub pack_id: String,
    pub style_vector: Option<StyleVector>,
    pub effectiveness: BTreeMap<LearningStyle, f64>,
    pub concept_state: BTreeMap<String, ConceptState>,
    pub misconceptions: BTreeSet<String>,
    pub state: SessionState,
    pub plan: Option<LessonPlan>,
    pub active_test: Option<ActiveTest>,
    pub inbox: Vec<Message>,
    pub annotations: Vec<Message>,
    pub tests_issued: u64,
    #[serde(default)]
    pub event_log: Vec<Event>,
}

impl LearnerModel {
    pub fn new(learner_id: &str, pack_id: &str) -> LearnerModel {
        LearnerModel {
            learner_id: learner_id.to_string(),
            pack_id: pack_id.to_string(),
            style_vector: None,
            effectiveness: LearningStyle::ALL
                .iter()
                .map(|s| (*s, INITIAL_EFFECTIVENESS))
                .collect(),
            concept_state: BTreeMap::new(),
            misconceptions: BTreeSet::new(),
            state: SessionState::AwaitingProfile,
            plan: None,
            active_test: None,
            inbox: Vec::new(),
            annotations: Vec::new(),
            tests_issued: 0,
            event_log: Vec::new(),
        }
    }

    /// Rebuilds a model by folding a recorded log.
    pub fn replay(
        learner_id: &str,
        pack_id: &str,
        events: impl IntoIterator<Item = Event>,
    ) -> Result<LearnerModel, ReplayError> {
        let mut model = LearnerModel::new(learner_id, pack_id);
        for event in events {
            let expected = model.event_log.len() as u64 + 1;
            if event.seq != expected {
                return Err(ReplayError::OutOfSequence {
                    expected,
                    found: event.seq,
                });
            }
            model
                .apply(&event.payload)
                .map_err(|detail| ReplayError::Inapplicable {
                    seq: event.seq,
                    kind: event.payload.kind(),
                    detail,
                })?;
            model.event_log.push(event);
        }
        Ok(model)
    }

    /// Applies and appends an event, returning a reference to it.
    pub(crate) fn record(&mut self, payload: EventPayload, timestamp_ms: u64) -> &Event {
        // Engine-produced events are consistent by construction.
        self.apply(&payload)
            .unwrap_or_else(|e| panic!("engine produced inapplicable {}: {e}", payload.kind()));
        let seq = self.event_log.len() as u64 + 1;
        self.event_log.push(Event {
            seq,
            timestamp_ms,
            payload,
        });
        self.event_log.last().expect("just pushed")
    }

    pub fn concept(&self, id: &str) -> Option<&ConceptState> {
        self.concept_state.get(id)
    }

    pub fn band_of(&self, concept: &str) -> Option<KnowledgeBand> {
        self.concept(concept).and_then(|c| c.band)
    }

    pub fn effectiveness(&self, style: LearningStyle) -> f64 {
        self.effectiveness
            .get(&style)
            .copied()
            .unwrap_or(INITIAL_EFFECTIVENESS)
    }

    /// Band of the mean of all recorded post-test scores.
    pub fn overall_band(&self) -> Option<KnowledgeBand> {
        let scores: Vec<f64> = self
            .concept_state
            .values()
            .filter_map(|c| c.last_score)
            .collect();
        if scores.is_empty() {
            return None;
        }
        assessment::band(scores.iter().sum::<f64>() / scores.len() as f64).ok()
    }

    fn apply(&mut self, payload: &EventPayload) -> Result<(), String> {
        match payload {
            EventPayload::Profiled {
                pack_id,
                style_vector,
                ..
            } => {
                if pack_id != &self.pack_id {
                    return Err(format!("profiled against pack `{pack_id}`"));
                }
                self.style_vector = Some(*style_vector);
            }
            EventPayload::PlanIssued { plan } => {
                self.plan = Some(plan.clone());
            }
            EventPayload::TestIssued { test } => {
                let state = self.concept_state.entry(test.concept.clone()).or_default();
                for q in &test.instance.questions {
                    if !state.used_questions.insert(q.clone()) {
                        return Err(format!("question `{q}` issued twice"));
                    }
                }
                self.tests_issued += 1;
                self.active_test = Some(test.clone());
            }
            EventPayload::HintServed {
                test_id, question, ..
            } => {
                let test = self
                    .active_test
                    .as_mut()
                    .filter(|t| &t.test_id == test_id)
                    .ok_or_else(|| format!("no active test `{test_id}`"))?;
                *test.hints_used.entry(question.clone()).or_default() += 1;
            }
            EventPayload::TestGraded {
                test_id,
                concept,
                phase,
                report,
                ..
            } => {
                if self.active_test.as_ref().map(|t| &t.test_id) != Some(test_id) {
                    return Err(format!("test `{test_id}` is not active"));
                }
                self.active_test = None;
                self.misconceptions = report.misconceptions.iter().cloned().collect();
                let state = self.concept_state.entry(concept.clone()).or_default();
                match phase {
                    Phase::Pretest => state.pretest_score = Some(report.raw_score),
                    Phase::Posttest => {
                        state.band = Some(report.band);
                        state.last_score = Some(report.raw_score);
                    }
                }
            }
            EventPayload::ModelUpdated { style, after, .. } => {
                if !(0.0..=1.0).contains(after) {
                    return Err(format!("effectiveness {after} outside [0, 1]"));
                }
                self.effectiveness.insert(*style, *after);
            }
            EventPayload::FlowDecided {
                concept,
                decision,
                from,
                to,
                variant,
                mastered_band,
                failed_attempt,
            } => {
                if from != &self.state {
                    return Err(format!("transition from {from} but state is {}", self.state));
                }
                if !is_legal_transition(from, to) {
                    return Err(format!("illegal transition {from} -> {to}"));
                }
                if let Some(concept) = concept {
                    let state = self.concept_state.entry(concept.clone()).or_default();
                    if let Some(style) = variant {
                        state.last_variant = Some(*style);
                        state.tried_variants.insert(*style);
                        if let Some(plan) = self.plan.as_mut().filter(|p| &p.concept == concept) {
                            plan.variant_style = *style;
                        }
                    }
                    if let Some(band) = mastered_band {
                        state.band = Some(*band);
                    }
                    if *failed_attempt {
                        state.attempts += 1;
                    }
                    match decision {
                        FlowDecision::Remove => state.removed = true,
                        FlowDecision::Skip => state.skipped = true,
                        _ => {}
                    }
                }
                if to.concept() != from.concept() {
                    self.plan = None;
                }
                self.state = to.clone();
            }
            EventPayload::TeacherFlagged { .. } => {}
            EventPayload::MessagePosted { message } => match message.channel {
                Channel::ToLearner => self.inbox.push(message.clone()),
                Channel::ToModel => self.annotations.push(message.clone()),
            },
            EventPayload::MessageRead { message_id } => {
                let message = self
                    .inbox
                    .iter_mut()
                    .find(|m| &m.id == message_id)
                    .ok_or_else(|| format!("no inbox message `{message_id}`"))?;
                message.read = true;
            }
        }
        Ok(())
    }

    /// The model without its log, as written to the snapshot file.
    pub fn snapshot(&self) -> Snapshot {
        let mut model = self.clone();
        model.event_log.clear();
        Snapshot {
            events_applied: self.event_log.len() as u64,
            model,
        }
    }
}

/// Derived cache of a learner model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub events_applied: u64,
    pub model: LearnerModel,
}
