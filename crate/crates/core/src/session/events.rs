//! Event records appended to a learner's log. The log is the source of truth;
//! every model field is derived by folding these events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{ActiveTest, SessionState};
use crate::assessment::{GradeReport, KnowledgeBand, Phase};
use crate::expert::LessonPlan;
use crate::profiler::{LearningStyle, StyleVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    ToLearner,
    ToModel,
}

/// A teacher message. `ToModel` messages only annotate the learner model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub to: String,
    pub channel: Channel,
    pub body: String,
    pub read: bool,
    pub timestamp_ms: u64,
}

/// Why the session moved between states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "target", rename_all = "snake_case")]
pub enum FlowDecision {
    /// Profiling finished, the course starts.
    Start,
    /// The concept was already mastered, learning is skipped.
    Skip,
    /// Present the learning content.
    Present,
    /// Present again although the pre-test would allow skipping.
    Repeat,
    /// Send the learner back to a weaker concept first.
    Remediate(String),
    /// Drop the concept from this learner's sequence.
    Remove,
    /// The learner asked for the post-test.
    BeginPosttest,
    /// Post-test passed, move on.
    Advance,
    /// Post-test failed, try the concept again.
    Retry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventPayload {
    Profiled {
        pack_id: String,
        responses: BTreeMap<String, i32>,
        style_vector: StyleVector,
    },
    PlanIssued {
        plan: LessonPlan,
    },
    TestIssued {
        test: ActiveTest,
    },
    HintServed {
        test_id: String,
        question: String,
        hint_index: u32,
    },
    TestGraded {
        test_id: String,
        concept: String,
        phase: Phase,
        answers: BTreeMap<String, String>,
        report: GradeReport,
    },
    ModelUpdated {
        concept: String,
        style: LearningStyle,
        pre_score: f64,
        post_score: f64,
        before: f64,
        after: f64,
    },
    FlowDecided {
        concept: Option<String>,
        decision: FlowDecision,
        from: SessionState,
        to: SessionState,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variant: Option<LearningStyle>,
        /// Band recorded for the concept without a post-test (skips).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mastered_band: Option<KnowledgeBand>,
        #[serde(default)]
        failed_attempt: bool,
    },
    TeacherFlagged {
        concept: String,
        attempts: u32,
        reason: String,
    },
    MessagePosted {
        message: Message,
    },
    MessageRead {
        message_id: String,
    },
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::Profiled { .. } => "Profiled",
            EventPayload::PlanIssued { .. } => "PlanIssued",
            EventPayload::TestIssued { .. } => "TestIssued",
            EventPayload::HintServed { .. } => "HintServed",
            EventPayload::TestGraded { .. } => "TestGraded",
            EventPayload::ModelUpdated { .. } => "ModelUpdated",
            EventPayload::FlowDecided { .. } => "FlowDecided",
            EventPayload::TeacherFlagged { .. } => "TeacherFlagged",
            EventPayload::MessagePosted { .. } => "MessagePosted",
            EventPayload::MessageRead { .. } => "MessageRead",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// A clock that ticks one millisecond per reading from a fixed origin.
#[derive(Debug, Default)]
pub struct StepClock {
    next: std::sync::atomic::AtomicU64,
}

impl StepClock {
    pub fn starting_at(origin: u64) -> StepClock {
        StepClock {
            next: std::sync::atomic::AtomicU64::new(origin),
        }
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> u64 {
        self.next.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
    }
}
