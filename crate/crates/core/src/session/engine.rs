use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::events::{Channel, Clock, EventPayload, FlowDecision, Message, SystemClock};
use super::model::{ActiveTest, LearnerModel, SessionState};
use super::modeler::{self, ModelerError, blend_choice};
use crate::assessment::{
    self, AssessmentError, GradeReport, KnowledgeBand, Phase, TestSpec, select_questions,
};
use crate::content::{Concept, CoursePack};
use crate::expert::{
    Action, FactPhase, Flow, LessonPlan, Rulebook, infer, learner_facts, plan_concept,
    resolve_flow, weakest_prerequisite,
};
use crate::profiler::{self, Instrument, LearningStyle, ProfilerError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("operation needs state {expected} but the learner is in {actual}")]
    InvalidState {
        expected: String,
        actual: SessionState,
    },
    #[error("learner record belongs to pack `{found}`, not `{expected}`")]
    UnknownPack { expected: String, found: String },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("no active test `{0}`")]
    UnknownTest(String),
    #[error("question `{0}` is not part of the active test")]
    UnknownQuestion(String),
    #[error("hint budget of this test is used up")]
    HintBudgetExhausted,
    #[error("question `{0}` has no further hints")]
    NoMoreHints(String),
    #[error("no inbox message `{0}`")]
    UnknownMessage(String),
    #[error(transparent)]
    Profiler(#[from] ProfilerError),
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error(transparent)]
    Modeler(#[from] ModelerError),
}

/// How question-selection seeds are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedMode {
    /// Seeds derived from (base, learner, concept, attempt, phase); reproducible.
    Fixed(u64),
    /// Fresh entropy per test.
    Entropy,
}

/// Which content variant the tutor presents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantPolicy {
    /// Rules, blend and try-and-error rotation.
    Adaptive,
    /// Always the same style.
    Fixed(LearningStyle),
    /// A uniformly drawn style, derived from the seed and presentation.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TutorConfig {
    pub seed_mode: SeedMode,
    pub variant_policy: VariantPolicy,
}

impl Default for TutorConfig {
    fn default() -> Self {
        TutorConfig {
            seed_mode: SeedMode::Entropy,
            variant_policy: VariantPolicy::Adaptive,
        }
    }
}

/// What the pre-test request produced.
#[derive(Debug, Clone, PartialEq)]
pub enum PretestOutcome {
    /// A pre-test to take.
    Test(ActiveTest),
    /// The plan routed the learner elsewhere before any test.
    Redirected(SessionState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub phase: Phase,
    pub report: GradeReport,
    pub state: SessionState,
    /// Correct choice per question, released once a post-test is graded.
    pub solutions: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HintOutcome {
    pub hint: String,
    pub remaining_budget: u32,
}

/// The default pre-test gate. Returns the flow and whether the variant
/// should rotate to an untried style.
pub fn pretest_gate(
    report: &GradeReport,
    mastery_band: KnowledgeBand,
    weakest_prerequisite: Option<&str>,
) -> (Flow, bool) {
    if report.band == KnowledgeBand::Excellent {
        (Flow::Skip, false)
    } else if report.band >= mastery_band {
        (Flow::Present, false)
    } else if let Some(prereq) = weakest_prerequisite {
        (Flow::Remediate(prereq.to_string()), false)
    } else {
        (Flow::Present, true)
    }
}

/// The tutoring engine for one course pack. Learner models are passed in by
/// the caller, which is responsible for serializing access per learner.
pub struct Tutor {
    pack: Arc<CoursePack>,
    rules: Arc<Rulebook>,
    instrument: Arc<Instrument>,
    config: TutorConfig,
    clock: Arc<dyn Clock>,
}

impl Tutor {
    pub fn new(
        pack: Arc<CoursePack>,
        rules: Arc<Rulebook>,
        instrument: Arc<Instrument>,
        config: TutorConfig,
    ) -> Tutor {
        Tutor {
            pack,
            rules,
            instrument,
            config,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Tutor {
        self.clock = clock;
        self
    }

    pub fn pack(&self) -> &CoursePack {
        &self.pack
    }

    pub fn rules(&self) -> &Rulebook {
        &self.rules
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn config(&self) -> TutorConfig {
        self.config
    }

    pub fn new_learner(&self, learner_id: &str) -> LearnerModel {
        LearnerModel::new(learner_id, &self.pack.id)
    }

    fn record(&self, model: &mut LearnerModel, payload: EventPayload) {
        model.record(payload, self.clock.now_ms());
    }

    fn concept(&self, id: &str) -> Result<&Concept, SessionError> {
        self.pack
            .concept(id)
            .ok_or_else(|| SessionError::UnknownConcept(id.to_string()))
    }

    fn expect_state(model: &LearnerModel, expected: &SessionState) -> Result<(), SessionError> {
        if &model.state != expected {
            return Err(SessionError::InvalidState {
                expected: expected.to_string(),
                actual: model.state.clone(),
            });
        }
        Ok(())
    }

    /// First concept in prerequisite order that is not removed, skipped or mastered.
    pub fn next_concept(&self, model: &LearnerModel) -> Option<&Concept> {
        self.next_concept_with(model, None)
    }

    fn next_concept_with(
        &self,
        model: &LearnerModel,
        graded: Option<(&str, KnowledgeBand)>,
    ) -> Option<&Concept> {
        self.pack.ordered_concepts().find(|c| {
            let state = model.concept(&c.id);
            let band = match graded {
                Some((id, band)) if id == c.id => Some(band),
                _ => model.band_of(&c.id),
            };
            !state.is_some_and(|s| s.removed || s.skipped)
                && band.is_none_or(|b| b < self.pack.mastery_band)
        })
    }

    fn next_state(&self, model: &LearnerModel) -> SessionState {
        self.next_state_with(model, None)
    }

    fn next_state_with(&self, model: &LearnerModel, graded: Option<(&str, KnowledgeBand)>) -> SessionState {
        match self.next_concept_with(model, graded) {
            Some(c) => SessionState::ConceptPretest(c.id.clone()),
            None => SessionState::CourseComplete,
        }
    }

    /// Where a returning learner resumes.
    pub fn start_session(&self, model: &LearnerModel) -> Result<SessionState, SessionError> {
        if model.pack_id != self.pack.id {
            return Err(SessionError::UnknownPack {
                expected: self.pack.id.clone(),
                found: model.pack_id.clone(),
            });
        }
        Ok(model.state.clone())
    }

    /// Scores the questionnaire and opens the first concept.
    pub fn submit_profile(
        &self,
        model: &mut LearnerModel,
        responses: &HashMap<String, i32>,
    ) -> Result<SessionState, SessionError> {
        Self::expect_state(model, &SessionState::AwaitingProfile)?;
        let style_vector = profiler::score_questionnaire(&self.instrument, responses)?;
        self.record(
            model,
            EventPayload::Profiled {
                pack_id: self.pack.id.clone(),
                responses: responses.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                style_vector,
            },
        );
        let to = self.next_state(model);
        self.transition(model, None, FlowDecision::Start, to, None, None, false);
        Ok(model.state.clone())
    }

    #[allow(clippy::too_many_arguments)]
    fn transition(
        &self,
        model: &mut LearnerModel,
        concept: Option<&str>,
        decision: FlowDecision,
        to: SessionState,
        variant: Option<LearningStyle>,
        mastered_band: Option<KnowledgeBand>,
        failed_attempt: bool,
    ) {
        let from = model.state.clone();
        self.record(
            model,
            EventPayload::FlowDecided {
                concept: concept.map(str::to_string),
                decision,
                from,
                to,
                variant,
                mastered_band,
                failed_attempt,
            },
        );
    }

    fn derive_seed(&self, parts: &[&str]) -> u64 {
        let base = match self.config.seed_mode {
            SeedMode::Fixed(base) => base,
            SeedMode::Entropy => return rand::random(),
        };
        let mut hasher = Sha256::new();
        hasher.update(base.to_le_bytes());
        for part in parts {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    fn selection_seed(&self, model: &LearnerModel, concept: &str, phase: Phase) -> u64 {
        let attempt = model.concept(concept).map(|s| s.attempts).unwrap_or(0);
        let phase = match phase {
            Phase::Pretest => "pretest",
            Phase::Posttest => "posttest",
        };
        self.derive_seed(&[&model.learner_id, concept, &attempt.to_string(), phase])
    }

    /// Applies the configured variant policy on top of the adaptive choice.
    fn policy_variant(&self, model: &LearnerModel, concept: &str, adaptive: LearningStyle) -> LearningStyle {
        match self.config.variant_policy {
            VariantPolicy::Adaptive => adaptive,
            VariantPolicy::Fixed(style) => style,
            VariantPolicy::Random(seed) => {
                let mut hasher = Sha256::new();
                hasher.update(seed.to_le_bytes());
                hasher.update(model.learner_id.as_bytes());
                hasher.update([0]);
                hasher.update(concept.as_bytes());
                hasher.update(model.event_log.len().to_le_bytes());
                let digest = hasher.finalize();
                LearningStyle::ALL[digest[0] as usize % LearningStyle::ALL.len()]
            }
        }
    }

    /// Plans `concept` for the learner without recording anything.
    pub fn plan(&self, model: &LearnerModel, concept: &Concept) -> LessonPlan {
        let mut plan = plan_concept(model, &self.pack, concept, &self.rules);
        plan.variant_style = self.policy_variant(model, &concept.id, plan.variant_style);
        plan
    }

    fn issue_test(
        &self,
        model: &mut LearnerModel,
        concept: &Concept,
        spec: &TestSpec,
        variant_style: LearningStyle,
        hint_budget: u32,
    ) -> Result<ActiveTest, SessionError> {
        let used = model
            .concept(&concept.id)
            .map(|s| s.used_questions.clone())
            .unwrap_or_default();
        let seed = self.selection_seed(model, &concept.id, spec.phase);
        let instance = select_questions(concept, spec, &used, seed)?;
        let phase = match spec.phase {
            Phase::Pretest => "pre",
            Phase::Posttest => "post",
        };
        Ok(ActiveTest {
            test_id: format!("t{}-{}-{phase}", model.tests_issued + 1, concept.id),
            concept: concept.id.clone(),
            phase: spec.phase,
            instance,
            variant_style,
            hint_budget,
            hints_used: BTreeMap::new(),
        })
    }

    /// Plans the current concept and hands out its pre-test. A repeated call
    /// returns the pre-test already in progress.
    pub fn issue_pretest(
        &self,
        model: &mut LearnerModel,
        concept_id: &str,
    ) -> Result<PretestOutcome, SessionError> {
        let concept = self.concept(concept_id)?;
        Self::expect_state(model, &SessionState::ConceptPretest(concept_id.to_string()))?;
        if let Some(test) = model
            .active_test
            .as_ref()
            .filter(|t| t.concept == concept_id && t.phase == Phase::Pretest)
        {
            return Ok(PretestOutcome::Test(test.clone()));
        }

        let plan = self.plan(model, concept);
        let test = match plan.flow {
            Flow::Present | Flow::Repeat => Some(self.issue_test(
                model,
                concept,
                &plan.pretest,
                plan.variant_style,
                plan.hint_budget,
            )?),
            _ => None,
        };
        let flow = plan.flow.clone();
        let flag = plan.teacher_flag.clone();
        self.record(model, EventPayload::PlanIssued { plan });
        if let Some(reason) = flag {
            let attempts = model.concept(concept_id).map(|s| s.attempts).unwrap_or(0);
            self.record(
                model,
                EventPayload::TeacherFlagged {
                    concept: concept_id.to_string(),
                    attempts,
                    reason,
                },
            );
        }
        match test {
            Some(test) => {
                self.record(model, EventPayload::TestIssued { test: test.clone() });
                Ok(PretestOutcome::Test(test))
            }
            None => {
                self.route(model, concept_id, &flow, None, None);
                Ok(PretestOutcome::Redirected(model.state.clone()))
            }
        }
    }

    /// Moves the learner out of `ConceptPretest(concept)` according to `flow`.
    fn route(
        &self,
        model: &mut LearnerModel,
        concept: &str,
        flow: &Flow,
        variant: Option<LearningStyle>,
        pretest_band: Option<KnowledgeBand>,
    ) {
        let posttest = SessionState::ConceptPosttest(concept.to_string());
        match flow {
            Flow::Present | Flow::Repeat => {
                let decision = if *flow == Flow::Repeat {
                    FlowDecision::Repeat
                } else {
                    FlowDecision::Present
                };
                let variant = variant
                    .or_else(|| model.plan.as_ref().map(|p| p.variant_style))
                    .unwrap_or(LearningStyle::ALL[0]);
                let to = SessionState::ConceptLearning(concept.to_string());
                self.transition(model, Some(concept), decision, to, Some(variant), None, false);
            }
            Flow::Skip | Flow::Remove => {
                let decision = if *flow == Flow::Skip {
                    FlowDecision::Skip
                } else {
                    FlowDecision::Remove
                };
                let band = pretest_band.filter(|_| *flow == Flow::Skip);
                self.transition(model, Some(concept), decision, posttest, None, band, false);
                let to = self.next_state(model);
                self.transition(model, Some(concept), FlowDecision::Advance, to, None, None, false);
            }
            Flow::Remediate(target) => {
                let to = SessionState::ConceptPretest(target.clone());
                self.transition(
                    model,
                    Some(concept),
                    FlowDecision::Remediate(target.clone()),
                    to,
                    None,
                    None,
                    false,
                );
            }
        }
    }

    /// Decides what follows a graded pre-test: rule overrides first, then the default gate.
    fn gate(&self, model: &mut LearnerModel, concept: &Concept, report: &GradeReport) {
        let facts = learner_facts(model, &self.pack, concept, FactPhase::Gate(report.band));
        let actions = infer(&facts, &self.rules);
        let mut rule_flow = None;
        let mut rule_variant = None;
        for action in &actions {
            match action {
                Action::SetFlow { flow, target } => {
                    rule_flow = Some(resolve_flow(
                        model,
                        &self.pack,
                        &concept.id,
                        flow,
                        target.as_deref(),
                    ));
                }
                Action::SetVariant { style } => rule_variant = Some(*style),
                _ => {}
            }
        }
        let weakest = weakest_prerequisite(model, &self.pack, &concept.id);
        let (default_flow, rotate) = pretest_gate(report, self.pack.mastery_band, weakest.as_deref());
        let flow = rule_flow.unwrap_or(default_flow);

        let planned = model
            .plan
            .as_ref()
            .map(|p| p.variant_style)
            .unwrap_or(LearningStyle::ALL[0]);
        let tried = model
            .concept(&concept.id)
            .map(|s| s.tried_variants.clone())
            .unwrap_or_default();
        let adaptive = match (rule_variant, rotate) {
            (Some(style), _) => style,
            (None, true) if !tried.contains(&planned) => planned,
            (None, true) => blend_choice(model, |s| !tried.contains(&s)),
            (None, false) => planned,
        };
        let variant = if rule_variant.is_some() || rotate {
            self.policy_variant(model, &concept.id, adaptive)
        } else {
            planned
        };
        self.route(model, &concept.id, &flow, Some(variant), Some(report.band));
    }

    /// Hands out the post-test once the learner has studied the concept.
    pub fn issue_posttest(
        &self,
        model: &mut LearnerModel,
        concept_id: &str,
    ) -> Result<ActiveTest, SessionError> {
        let concept = self.concept(concept_id)?;
        if let Some(test) = model
            .active_test
            .as_ref()
            .filter(|t| t.concept == concept_id && t.phase == Phase::Posttest)
        {
            return Ok(test.clone());
        }
        Self::expect_state(model, &SessionState::ConceptLearning(concept_id.to_string()))?;
        // The post-test is re-planned with what the pre-test revealed; the
        // variant already presented stays.
        let fresh = self.plan(model, concept);
        let plan = match model.plan.clone() {
            Some(current) if current.concept == concept_id => LessonPlan {
                posttest: fresh.posttest,
                hint_budget: fresh.hint_budget,
                fired_rules: fresh.fired_rules,
                ..current
            },
            _ => fresh,
        };
        let test = self.issue_test(model, concept, &plan.posttest, plan.variant_style, plan.hint_budget)?;
        self.record(model, EventPayload::PlanIssued { plan });
        self.transition(
            model,
            Some(concept_id),
            FlowDecision::BeginPosttest,
            SessionState::ConceptPosttest(concept_id.to_string()),
            None,
            None,
            false,
        );
        self.record(model, EventPayload::TestIssued { test: test.clone() });
        Ok(test)
    }

    /// Serves the next hint for a question of the active test.
    pub fn request_hint(
        &self,
        model: &mut LearnerModel,
        test_id: &str,
        question_id: &str,
    ) -> Result<HintOutcome, SessionError> {
        let test = model
            .active_test
            .as_ref()
            .filter(|t| t.test_id == test_id)
            .ok_or_else(|| SessionError::UnknownTest(test_id.to_string()))?;
        if !test.instance.questions.iter().any(|q| q == question_id) {
            return Err(SessionError::UnknownQuestion(question_id.to_string()));
        }
        if test.hints_remaining() == 0 {
            return Err(SessionError::HintBudgetExhausted);
        }
        let (_, question) = self
            .pack
            .find_question(question_id)
            .ok_or_else(|| SessionError::UnknownQuestion(question_id.to_string()))?;
        let used = test.hints_used.get(question_id).copied().unwrap_or(0);
        let hint = question
            .hints
            .get(used as usize)
            .cloned()
            .ok_or_else(|| SessionError::NoMoreHints(question_id.to_string()))?;
        let remaining_budget = test.hints_remaining() - 1;
        let test_id = test.test_id.clone();
        self.record(
            model,
            EventPayload::HintServed {
                test_id,
                question: question_id.to_string(),
                hint_index: used,
            },
        );
        Ok(HintOutcome {
            hint,
            remaining_budget,
        })
    }

    /// Grades the active test and advances the session.
    pub fn submit_answers(
        &self,
        model: &mut LearnerModel,
        test_id: &str,
        answers: &BTreeMap<String, String>,
    ) -> Result<Submission, SessionError> {
        let test = model
            .active_test
            .clone()
            .filter(|t| t.test_id == test_id)
            .ok_or_else(|| SessionError::UnknownTest(test_id.to_string()))?;
        let concept = self.concept(&test.concept)?;
        let report = assessment::grade(
            concept,
            &test.instance,
            answers,
            test.variant_style,
            &test.hints_used,
        )?;
        let answers: BTreeMap<String, String> = test
            .instance
            .questions
            .iter()
            .map(|q| (q.clone(), answers[q].clone()))
            .collect();
        self.record(
            model,
            EventPayload::TestGraded {
                test_id: test.test_id.clone(),
                concept: concept.id.clone(),
                phase: test.phase,
                answers,
                report: report.clone(),
            },
        );
        let solutions = match test.phase {
            Phase::Pretest => {
                self.gate(model, concept, &report);
                None
            }
            Phase::Posttest => {
                self.complete_posttest(model, &concept.id, &report)?;
                Some(
                    test.instance
                        .questions
                        .iter()
                        .filter_map(|q| concept.question(q))
                        .map(|q| (q.id.clone(), q.correct_choice().id.clone()))
                        .collect(),
                )
            }
        };
        Ok(Submission {
            phase: test.phase,
            report,
            state: model.state.clone(),
            solutions,
        })
    }

    /// Records the outcome of a graded post-test: updates effectiveness, then
    /// advances on mastery or sends the learner round again.
    pub fn complete_posttest(
        &self,
        model: &mut LearnerModel,
        concept_id: &str,
        report: &GradeReport,
    ) -> Result<SessionState, SessionError> {
        Self::expect_state(model, &SessionState::ConceptPosttest(concept_id.to_string()))?;
        let state = model.concept(concept_id).cloned().unwrap_or_default();
        let variant = state
            .last_variant
            .or_else(|| model.plan.as_ref().map(|p| p.variant_style))
            .unwrap_or(LearningStyle::ALL[0]);
        let pre_score = state.pretest_score.unwrap_or(report.raw_score);
        self.modeler_update(model, concept_id, variant, pre_score, report.raw_score)?;

        let band = Some(report.band);
        if report.band >= self.pack.mastery_band {
            let to = self.next_state_with(model, Some((concept_id, report.band)));
            self.transition(model, Some(concept_id), FlowDecision::Advance, to, None, band, false);
        } else {
            let to = SessionState::ConceptPretest(concept_id.to_string());
            self.transition(
                model,
                Some(concept_id),
                FlowDecision::Retry,
                to,
                None,
                band,
                true,
            );
            let attempts = model.concept(concept_id).map(|s| s.attempts).unwrap_or(0);
            let threshold = self.pack.flag_after_attempts.max(1);
            if attempts > 0 && attempts.is_multiple_of(threshold) {
                self.record(
                    model,
                    EventPayload::TeacherFlagged {
                        concept: concept_id.to_string(),
                        attempts,
                        reason: format!("{attempts} failed post-tests"),
                    },
                );
            }
        }
        Ok(model.state.clone())
    }

    /// Folds one learning outcome into the style's effectiveness.
    pub fn modeler_update(
        &self,
        model: &mut LearnerModel,
        concept: &str,
        style: LearningStyle,
        pre_score: f64,
        post_score: f64,
    ) -> Result<(), SessionError> {
        let before = model.effectiveness(style);
        let after = modeler::updated_effectiveness(before, pre_score, post_score)?;
        self.record(
            model,
            EventPayload::ModelUpdated {
                concept: concept.to_string(),
                style,
                pre_score,
                post_score,
                before,
                after,
            },
        );
        Ok(())
    }

    /// Style of the variant the learner studies or last studied for a
    /// concept. Concepts not studied yet, reached through a link, use the
    /// variant their plan would pick.
    pub fn content_style(
        &self,
        model: &LearnerModel,
        concept_id: &str,
    ) -> Result<LearningStyle, SessionError> {
        let concept = self.concept(concept_id)?;
        if let Some(style) = model.concept(concept_id).and_then(|s| s.last_variant) {
            return Ok(style);
        }
        if model.style_vector.is_none() {
            return Err(SessionError::InvalidState {
                expected: "a profiled learner".into(),
                actual: model.state.clone(),
            });
        }
        Ok(self.plan(model, concept).variant_style)
    }

    /// Records a teacher message for the learner.
    pub fn post_message(
        &self,
        model: &mut LearnerModel,
        channel: Channel,
        body: &str,
    ) -> Message {
        let timestamp_ms = self.clock.now_ms();
        let count = model.inbox.len() + model.annotations.len() + 1;
        let message = Message {
            id: format!("m{count}"),
            to: model.learner_id.clone(),
            channel,
            body: body.to_string(),
            read: false,
            timestamp_ms,
        };
        model.record(
            EventPayload::MessagePosted {
                message: message.clone(),
            },
            timestamp_ms,
        );
        message
    }

    pub fn mark_read(&self, model: &mut LearnerModel, message_id: &str) -> Result<(), SessionError> {
        if !model.inbox.iter().any(|m| m.id == message_id) {
            return Err(SessionError::UnknownMessage(message_id.to_string()));
        }
        self.record(
            model,
            EventPayload::MessageRead {
                message_id: message_id.to_string(),
            },
        );
        Ok(())
    }
}
