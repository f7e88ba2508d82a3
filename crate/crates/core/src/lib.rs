//! Adaptive tutoring engine: a learning-style profiler, a course content
//! model, a forward-chaining rule planner, banded assessment and an
//! event-sourced learner session.

pub mod assessment;
pub mod content;
pub mod expert;
pub mod fixtures;
pub mod profiler;
pub mod session;

pub use assessment::{GradeReport, KnowledgeBand, LevelMix, Phase, TestSpec};
pub use content::{Concept, CoursePack};
pub use expert::{LessonPlan, Rulebook};
pub use profiler::{Instrument, LearningStyle, StyleVector};
pub use session::{LearnerModel, SessionState, Tutor, TutorConfig};
