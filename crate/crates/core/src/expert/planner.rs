use serde::{Deserialize, Serialize};

use super::inference::infer_traced;
use super::rulebook::{Action, Fact, FlowKind, Rulebook, Scalar};
use crate::assessment::{KnowledgeBand, LevelMix, Phase, TestSpec};
use crate::content::{Concept, CoursePack};
use crate::profiler::{LearningStyle, dominant_style};
use crate::session::LearnerModel;
use crate::session::modeler::blend_choice;

pub const DEFAULT_PRETEST_MIX: LevelMix = LevelMix { l1: 2, l2: 1, l3: 1 };
pub const DEFAULT_POSTTEST_MIX: LevelMix = LevelMix { l1: 2, l2: 2, l3: 2 };
pub const DEFAULT_HINT_BUDGET: u32 = 2;

/// Concept-level routing chosen by the planner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    Skip,
    Present,
    Repeat,
    Remediate(String),
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LessonPlan {
    pub concept: String,
    pub variant_style: LearningStyle,
    pub pretest: TestSpec,
    pub posttest: TestSpec,
    pub flow: Flow,
    pub hint_budget: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_flag: Option<String>,
    #[serde(default)]
    pub fired_rules: Vec<String>,
}

/// When the facts are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactPhase {
    /// Before the pre-test, while planning the concept.
    Plan,
    /// After the pre-test, deciding whether to present.
    Gate(KnowledgeBand),
}

/// Facts describing `model` with respect to `concept`.
pub fn learner_facts(
    model: &LearnerModel,
    pack: &CoursePack,
    concept: &Concept,
    phase: FactPhase,
) -> Vec<Fact> {
    let mut facts = Vec::new();
    let text = |s: &str| Scalar::Str(s.to_string());
    if let Some(vector) = &model.style_vector {
        facts.push(Fact::new(
            "dominant_style",
            vec![Scalar::Style(dominant_style(vector))],
        ));
        for (style, score) in vector.iter() {
            facts.push(Fact::new(
                "style_score",
                vec![Scalar::Style(style), Scalar::Num(score)],
            ));
        }
    }
    for style in LearningStyle::ALL {
        facts.push(Fact::new(
            "effectiveness",
            vec![Scalar::Style(style), Scalar::Num(model.effectiveness(style))],
        ));
    }
    let state = model.concept(&concept.id);
    if let Some(band) = state.and_then(|s| s.band) {
        facts.push(Fact::new("prior_band", vec![text(&concept.id), Scalar::Band(band)]));
    }
    if let Some(band) = model.overall_band() {
        facts.push(Fact::new("overall_band", vec![Scalar::Band(band)]));
    }
    let attempts = state.map(|s| s.attempts).unwrap_or(0);
    facts.push(Fact::new(
        "attempt_count",
        vec![text(&concept.id), Scalar::Num(f64::from(attempts))],
    ));
    for prereq in pack.prerequisites_of(&concept.id) {
        if model.concept(prereq).is_some_and(|s| s.removed) {
            continue;
        }
        // An unstudied prerequisite counts as weak.
        let band = model.band_of(prereq).unwrap_or(KnowledgeBand::Weak);
        facts.push(Fact::new("prereq_band", vec![text(prereq), Scalar::Band(band)]));
    }
    for tag in &model.misconceptions {
        facts.push(Fact::new("misconception", vec![text(tag)]));
    }
    match phase {
        FactPhase::Plan => facts.push(Fact::new("phase", vec![text("plan")])),
        FactPhase::Gate(band) => {
            facts.push(Fact::new("phase", vec![text("gate")]));
            facts.push(Fact::new("pretest_band", vec![Scalar::Band(band)]));
        }
    }
    facts
}

/// The prerequisite furthest below the pack's mastery band, if any.
pub fn weakest_prerequisite(model: &LearnerModel, pack: &CoursePack, concept: &str) -> Option<String> {
    pack.prerequisites_of(concept)
        .iter()
        .filter(|p| !model.concept(p).is_some_and(|s| s.removed || s.skipped))
        .filter(|p| model.band_of(p).is_none_or(|b| b < pack.mastery_band))
        .min_by_key(|p| model.band_of(p))
        .cloned()
}

/// Turns a `SetFlow` action into a concrete flow.
pub fn resolve_flow(
    model: &LearnerModel,
    pack: &CoursePack,
    concept: &str,
    kind: &FlowKind,
    target: Option<&str>,
) -> Flow {
    match kind {
        FlowKind::Skip => Flow::Skip,
        FlowKind::Present => Flow::Present,
        FlowKind::Repeat => Flow::Repeat,
        FlowKind::Remove => Flow::Remove,
        FlowKind::Remediate => {
            let explicit = target
                .filter(|t| *t != concept && pack.concept(t).is_some())
                .map(str::to_string);
            explicit
                .or_else(|| weakest_prerequisite(model, pack, concept))
                .map(Flow::Remediate)
                .unwrap_or(Flow::Present)
        }
    }
}

/// Variant to present by default: highest blend, avoiding the last variant
/// after a failure while untried styles remain.
pub fn default_variant(model: &LearnerModel, concept: &str) -> LearningStyle {
    let state = model.concept(concept);
    let failed = state.is_some_and(|s| s.attempts > 0);
    match state {
        Some(s) if failed && s.tried_variants.len() < LearningStyle::ALL.len() => {
            blend_choice(model, |style| !s.tried_variants.contains(&style))
        }
        _ => blend_choice(model, |_| true),
    }
}

/// Plans one concept for a profiled learner. Settings no rule provides fall back to defaults.
pub fn plan_concept(
    model: &LearnerModel,
    pack: &CoursePack,
    concept: &Concept,
    rules: &Rulebook,
) -> LessonPlan {
    let facts = learner_facts(model, pack, concept, FactPhase::Plan);
    let inference = infer_traced(&facts, rules);

    let mut variant = None;
    let mut counts = [None, None];
    let mut mixes = [None, None];
    let mut flow = Flow::Present;
    let mut hint_budget = DEFAULT_HINT_BUDGET;
    let mut teacher_flag = None;
    for action in &inference.actions {
        match action {
            Action::SetVariant { style } => variant = Some(*style),
            Action::SetQuestionCount { phase, n } => counts[*phase as usize] = Some(*n),
            Action::SetLevelMix { phase, mix } => mixes[*phase as usize] = Some(*mix),
            Action::SetFlow { flow: kind, target } => {
                flow = resolve_flow(model, pack, &concept.id, kind, target.as_deref());
            }
            Action::SetHintBudget { n } => hint_budget = *n,
            Action::FlagForTeacher { reason } => teacher_flag = Some(reason.clone()),
        }
    }

    let fallback = default_variant(model, &concept.id);
    let mut variant_style = variant.unwrap_or(fallback);
    // Never repeat a variant that just failed while untried ones remain.
    if let Some(state) = model.concept(&concept.id)
        && state.attempts > 0
        && state.last_variant == Some(variant_style)
        && state.tried_variants.len() < LearningStyle::ALL.len()
    {
        variant_style = fallback;
    }

    let spec = |phase: Phase, default: LevelMix| {
        let i = phase as usize;
        let mix = match (mixes[i], counts[i]) {
            (Some(mix), _) => mix,
            (None, Some(n)) => default.rescaled(n),
            (None, None) => default,
        };
        TestSpec::new(phase, mix)
    };

    LessonPlan {
        concept: concept.id.clone(),
        variant_style,
        pretest: spec(Phase::Pretest, DEFAULT_PRETEST_MIX),
        posttest: spec(Phase::Posttest, DEFAULT_POSTTEST_MIX),
        flow,
        hint_budget,
        teacher_flag,
        fired_rules: inference.fired,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::{load_course_pack, tests as fixtures};
    use crate::profiler::StyleVector;

    fn setup() -> (CoursePack, LearnerModel) {
        let mut pack = fixtures::pack(vec![fixtures::concept("a"), fixtures::concept("b")]);
        pack.prerequisites.insert("b".into(), vec!["a".into()]);
        let pack = load_course_pack(pack).unwrap();
        let mut model = LearnerModel::new("l", "p");
        model.style_vector = Some(StyleVector::new([80.0, 20.0, 20.0, 60.0, 20.0]).unwrap());
        (pack, model)
    }

    fn rules(doc: &str) -> Rulebook {
        Rulebook::from_json(doc).unwrap()
    }

    #[test]
    fn defaults_without_rules() {
        let (pack, model) = setup();
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &Rulebook::empty("none"));
        assert_eq!(plan.variant_style, LearningStyle::SensationSeeking);
        assert_eq!(plan.pretest.level_mix, DEFAULT_PRETEST_MIX);
        assert_eq!(plan.posttest.level_mix, DEFAULT_POSTTEST_MIX);
        assert_eq!(plan.pretest.count, 4);
        assert_eq!(plan.flow, Flow::Present);
        assert_eq!(plan.hint_budget, DEFAULT_HINT_BUDGET);
        assert!(plan.teacher_flag.is_none());
        assert!(plan.fired_rules.is_empty());
    }

    #[test]
    fn measured_effectiveness_moves_the_variant() {
        let (pack, mut model) = setup();
        model.effectiveness.insert(LearningStyle::ConscientiousAchiever, 0.9);
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &Rulebook::empty("none"));
        assert_eq!(plan.variant_style, LearningStyle::ConscientiousAchiever);
    }

    #[test]
    fn third_attempt_flags_the_teacher() {
        let (pack, mut model) = setup();
        model.concept_state.entry("a".into()).or_default().attempts = 3;
        let book = rules(
            r#"{"id":"r","rules":[{"id":"flag","priority":5,
              "conditions":[{"predicate":"attempt_count","args":["*",3],"comparator":">="}],
              "actions":[{"action":"FlagForTeacher","reason":"stuck"},
                         {"action":"SetFlow","flow":"present"}]}]}"#,
        );
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &book);
        assert_eq!(plan.teacher_flag.as_deref(), Some("stuck"));
        assert_eq!(plan.flow, Flow::Present);
        assert_eq!(plan.fired_rules, vec!["flag".to_string()]);
    }

    #[test]
    fn count_alone_rescales_the_default_mix() {
        let (pack, model) = setup();
        let book = rules(
            r#"{"id":"r","rules":[{"id":"short","priority":1,
              "conditions":[{"predicate":"phase","args":["plan"]}],
              "actions":[{"action":"SetQuestionCount","phase":"posttest","n":3}]}]}"#,
        );
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &book);
        assert_eq!(plan.posttest.level_mix, LevelMix::new(1, 1, 1));
        assert_eq!(plan.posttest.count, 3);
        assert_eq!(plan.pretest.level_mix, DEFAULT_PRETEST_MIX);
    }

    #[test]
    fn explicit_mix_beats_count() {
        let (pack, model) = setup();
        let book = rules(
            r#"{"id":"r","rules":[{"id":"both","priority":1,
              "conditions":[{"predicate":"phase","args":["plan"]}],
              "actions":[{"action":"SetQuestionCount","phase":"pretest","n":9},
                         {"action":"SetLevelMix","phase":"pretest","mix":{"L1":1,"L2":1,"L3":0}}]}]}"#,
        );
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &book);
        assert_eq!(plan.pretest.level_mix, LevelMix::new(1, 1, 0));
        assert_eq!(plan.pretest.count, 2);
    }

    #[test]
    fn failed_variant_is_not_reused() {
        let (pack, mut model) = setup();
        let state = model.concept_state.entry("a".into()).or_default();
        state.attempts = 1;
        state.last_variant = Some(LearningStyle::SensationSeeking);
        state.tried_variants.insert(LearningStyle::SensationSeeking);
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &Rulebook::empty("none"));
        assert_eq!(plan.variant_style, LearningStyle::ConscientiousAchiever);

        // A rule asking for the failed style is overridden while untried ones remain.
        let book = rules(
            r#"{"id":"r","rules":[{"id":"ss","priority":1,
              "conditions":[{"predicate":"dominant_style","args":["SS"]}],
              "actions":[{"action":"SetVariant","style":"SS"}]}]}"#,
        );
        let plan = plan_concept(&model, &pack, pack.concept("a").unwrap(), &book);
        assert_eq!(plan.variant_style, LearningStyle::ConscientiousAchiever);
    }

    #[test]
    fn misconceptions_and_prerequisites_become_facts() {
        let (pack, mut model) = setup();
        model.misconceptions.insert("a-m1-slip".into());
        let facts = learner_facts(&model, &pack, pack.concept("b").unwrap(), FactPhase::Plan);
        let rendered: Vec<String> = facts.iter().map(ToString::to_string).collect();
        assert!(rendered.contains(&"misconception(a-m1-slip)".to_string()));
        assert!(rendered.contains(&"prereq_band(a, Weak)".to_string()));
        assert!(rendered.contains(&"dominant_style(SS)".to_string()));
        assert!(rendered.contains(&"phase(plan)".to_string()));

        model.concept_state.entry("a".into()).or_default().band = Some(KnowledgeBand::VeryGood);
        let facts = learner_facts(&model, &pack, pack.concept("b").unwrap(), FactPhase::Gate(KnowledgeBand::Average));
        let rendered: Vec<String> = facts.iter().map(ToString::to_string).collect();
        assert!(rendered.contains(&"prereq_band(a, VeryGood)".to_string()));
        assert!(rendered.contains(&"pretest_band(Average)".to_string()));
    }

    #[test]
    fn remediation_target_resolution() {
        let (pack, mut model) = setup();
        assert_eq!(
            resolve_flow(&model, &pack, "b", &FlowKind::Remediate, None),
            Flow::Remediate("a".into())
        );
        assert_eq!(
            resolve_flow(&model, &pack, "b", &FlowKind::Remediate, Some("b")),
            Flow::Remediate("a".into())
        );
        model.concept_state.entry("a".into()).or_default().band = Some(KnowledgeBand::Good);
        assert_eq!(resolve_flow(&model, &pack, "b", &FlowKind::Remediate, None), Flow::Present);
        assert_eq!(
            resolve_flow(&model, &pack, "b", &FlowKind::Remediate, Some("a")),
            Flow::Remediate("a".into())
        );
    }
}
