//! Per-learner session: the profiling → pre-test → learning → post-test loop,
//! the try-and-error modeler and event-sourced persistence.

mod engine;
mod events;
mod model;
pub mod modeler;
mod records;

pub use engine::{
    HintOutcome, PretestOutcome, SeedMode, SessionError, Submission, Tutor, TutorConfig,
    VariantPolicy, pretest_gate,
};
pub use events::{
    Channel, Clock, Event, EventPayload, FlowDecision, Message, StepClock, SystemClock,
};
pub use model::{
    ActiveTest, ConceptState, INITIAL_EFFECTIVENESS, LearnerModel, ReplayError, SessionState,
    Snapshot, is_legal_transition,
};
pub use records::{RecordError, RecordStore, encode_event, parse_event_log, valid_learner_id};
