//! Response documents. Tests are rendered without correctness flags or
//! misconception tags; those only appear in grade reports.

use serde::Serialize;

use adaptutor_core::assessment::{KnowledgeBand, Phase};
use adaptutor_core::content::{Block, BlockKind, Concept, CoursePack, Dimension, Level, LinkTarget, classify_link};
use adaptutor_core::expert::Flow;
use adaptutor_core::profiler::{LearningStyle, StyleVector};
use adaptutor_core::session::{ActiveTest, SessionState};
use adaptutor_core::LearnerModel;

#[derive(Debug, Serialize)]
pub struct ChoiceView<'a> {
    pub id: &'a str,
    pub body: &'a str,
}

#[derive(Debug, Serialize)]
pub struct QuestionView<'a> {
    pub id: &'a str,
    pub section: &'a str,
    pub level: Level,
    pub dimension: Dimension,
    pub points: f64,
    pub body: &'a str,
    pub choices: Vec<ChoiceView<'a>>,
    pub hints_available: usize,
    pub hints_used: u32,
}

#[derive(Debug, Serialize)]
pub struct TestView<'a> {
    pub test_id: &'a str,
    pub concept: &'a str,
    pub phase: Phase,
    pub variant_style: LearningStyle,
    pub hint_budget: u32,
    pub hints_remaining: u32,
    pub questions: Vec<QuestionView<'a>>,
}

pub fn test_view<'a>(pack: &'a CoursePack, test: &'a ActiveTest) -> TestView<'a> {
    let questions = test
        .instance
        .questions
        .iter()
        .filter_map(|qid| pack.find_question(qid).map(|(_, q)| q))
        .map(|q| QuestionView {
            id: &q.id,
            section: &q.section,
            level: q.level,
            dimension: q.dimension,
            points: q.points,
            body: &q.body,
            choices: q
                .choices
                .iter()
                .map(|c| ChoiceView {
                    id: &c.id,
                    body: &c.body,
                })
                .collect(),
            hints_available: q.hints.len(),
            hints_used: test.hints_used.get(&q.id).copied().unwrap_or(0),
        })
        .collect();
    TestView {
        test_id: &test.test_id,
        concept: &test.concept,
        phase: test.phase,
        variant_style: test.variant_style,
        hint_budget: test.hint_budget,
        hints_remaining: test.hints_remaining(),
        questions,
    }
}

#[derive(Debug, Serialize)]
pub struct ConceptProgress<'a> {
    pub id: &'a str,
    pub title: &'a str,
    pub prerequisites: &'a [String],
    pub band: Option<KnowledgeBand>,
    pub band_label: Option<&'static str>,
    pub attempts: u32,
    pub mastered: bool,
    pub skipped: bool,
    pub removed: bool,
}

#[derive(Debug, Serialize)]
pub struct PlanView<'a> {
    pub concept: &'a str,
    pub variant_style: LearningStyle,
    pub flow: &'a Flow,
    pub hint_budget: u32,
    pub pretest_questions: u32,
    pub posttest_questions: u32,
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub mastered: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct StateView<'a> {
    pub learner_id: &'a str,
    pub state: &'a SessionState,
    pub style_vector: Option<StyleVector>,
    pub concepts: Vec<ConceptProgress<'a>>,
    pub progress: Progress,
    pub plan: Option<PlanView<'a>>,
    pub active_test: Option<TestView<'a>>,
    pub unread_messages: usize,
}

pub fn state_view<'a>(pack: &'a CoursePack, model: &'a LearnerModel) -> StateView<'a> {
    let concepts: Vec<ConceptProgress> = pack
        .ordered_concepts()
        .map(|c| {
            let state = model.concept(&c.id);
            let band = state.and_then(|s| s.band);
            ConceptProgress {
                id: &c.id,
                title: &c.title,
                prerequisites: pack.prerequisites_of(&c.id),
                band,
                band_label: band.map(KnowledgeBand::label),
                attempts: state.map(|s| s.attempts).unwrap_or(0),
                mastered: band.is_some_and(|b| b >= pack.mastery_band),
                skipped: state.is_some_and(|s| s.skipped),
                removed: state.is_some_and(|s| s.removed),
            }
        })
        .collect();
    let progress = Progress {
        mastered: concepts.iter().filter(|c| c.mastered).count(),
        total: concepts.len(),
    };
    StateView {
        learner_id: &model.learner_id,
        state: &model.state,
        style_vector: model.style_vector,
        concepts,
        progress,
        plan: model.plan.as_ref().map(|p| PlanView {
            concept: &p.concept,
            variant_style: p.variant_style,
            flow: &p.flow,
            hint_budget: p.hint_budget,
            pretest_questions: p.pretest.count,
            posttest_questions: p.posttest.count,
        }),
        active_test: model.active_test.as_ref().map(|t| test_view(pack, t)),
        unread_messages: model.inbox.iter().filter(|m| !m.read).count(),
    }
}

#[derive(Debug, Serialize)]
pub struct LinkView {
    pub raw: String,
    pub target: &'static str,
    pub href: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct BlockView<'a> {
    pub kind: BlockKind,
    pub body: &'a str,
    pub links: Vec<LinkView>,
}

#[derive(Debug, Serialize)]
pub struct ContentView<'a> {
    pub concept: &'a str,
    pub title: &'a str,
    pub variant_style: LearningStyle,
    pub blocks: Vec<BlockView<'a>>,
}

/// Resolves concept links to the learner's content route for that concept.
pub fn content_view<'a>(
    pack: &CoursePack,
    learner: &str,
    concept: &'a Concept,
    style: LearningStyle,
) -> ContentView<'a> {
    let block = |b: &'a Block| BlockView {
        kind: b.kind,
        body: &b.body,
        links: b
            .links
            .iter()
            .map(|raw| match classify_link(raw) {
                LinkTarget::External(url) => LinkView {
                    raw: raw.clone(),
                    target: "external",
                    href: url.to_string(),
                    title: None,
                },
                LinkTarget::Concept(id) => LinkView {
                    raw: raw.clone(),
                    target: "concept",
                    href: format!("/learners/{learner}/concepts/{id}/content"),
                    title: pack.concept(id).map(|c| c.title.clone()),
                },
            })
            .collect(),
    };
    ContentView {
        concept: &concept.id,
        title: &concept.title,
        variant_style: style,
        blocks: concept.variant(style).blocks.iter().map(block).collect(),
    }
}
