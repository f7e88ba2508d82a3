//! Course packs: concepts, weighted sections, per-style variants and the question bank.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::KnowledgeBand;
use crate::profiler::LearningStyle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContentError {
    #[error("malformed course pack document: {0}")]
    Parse(String),
    #[error("{kind} id `{id}` is declared more than once")]
    DuplicateId { kind: &'static str, id: String },
    #[error("course pack declares no concepts")]
    NoConcepts,
    #[error("concept `{0}` declares no sections")]
    NoSections(String),
    #[error("prerequisites form a cycle through {0:?}")]
    CyclicPrerequisites(Vec<String>),
    #[error("`{referrer}` refers to unknown concept `{target}`")]
    UnknownConcept { referrer: String, target: String },
    #[error("concept `{concept}` has no variant for style {style}")]
    MissingVariant { concept: String, style: LearningStyle },
    #[error("variant {style} of concept `{concept}` has no blocks")]
    EmptyVariant { concept: String, style: LearningStyle },
    #[error("concept `{concept}`: key section `{section}` is not a declared section")]
    UnknownKeySection { concept: String, section: String },
    #[error("concept `{concept}`: section `{section}` lacks a positive weight for {style}")]
    BadWeight {
        concept: String,
        section: String,
        style: LearningStyle,
    },
    #[error("concept `{concept}`: key section `{section}` is not strictly heaviest under {style}")]
    KeySectionNotMaximal {
        concept: String,
        section: String,
        style: LearningStyle,
    },
    #[error("concept `{concept}`: no question covers section `{section}`")]
    UncoveredSection { concept: String, section: String },
    #[error("concept `{concept}` variant {style} links to unknown concept `{target}`")]
    DanglingLink {
        concept: String,
        style: LearningStyle,
        target: String,
    },
    #[error("question `{question}`: {reason}")]
    InvalidQuestion { question: String, reason: String },
}

/// Difficulty level, ordered easiest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
    L3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::L1, Level::L2, Level::L3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The two evaluation dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    /// Understanding of the lesson concept.
    Conceptual,
    /// Understanding of the lesson topic.
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub id: String,
    pub body: String,
    #[serde(default)]
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misconception_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub section: String,
    pub level: Level,
    pub dimension: Dimension,
    pub points: f64,
    pub body: String,
    pub choices: Vec<Choice>,
    #[serde(default)]
    pub hints: Vec<String>,
}

impl Question {
    pub fn choice(&self, id: &str) -> Option<&Choice> {
        self.choices.iter().find(|c| c.id == id)
    }

    pub fn correct_choice(&self) -> &Choice {
        // Exactly one correct choice is a load-time invariant.
        self.choices.iter().find(|c| c.correct).expect("validated question")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub id: String,
    pub title: String,
    pub weights: BTreeMap<LearningStyle, f64>,
}

impl Section {
    pub fn weight(&self, style: LearningStyle) -> f64 {
        self.weights[&style]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Text,
    ImageRef,
    VideoRef,
    Exercise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub kind: BlockKind,
    pub body: String,
    #[serde(default)]
    pub links: Vec<String>,
}

/// A hypertext link target inside a content block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkTarget<'a> {
    Concept(&'a str),
    External(url::Url),
}

/// Classifies a raw link: absolute URLs are external, anything else names a concept.
pub fn classify_link(link: &str) -> LinkTarget<'_> {
    match url::Url::parse(link) {
        Ok(url) if !url.cannot_be_a_base() || url.scheme() == "mailto" => LinkTarget::External(url),
        _ => LinkTarget::Concept(link),
    }
}

/// Content rendered for one learning style. The style is the key it is stored under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentVariant {
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concept {
    pub id: String,
    pub title: String,
    pub sections: Vec<Section>,
    pub key_section: String,
    pub variants: BTreeMap<LearningStyle, ContentVariant>,
    pub questions: Vec<Question>,
}

impl Concept {
    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.id == id)
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn variant(&self, style: LearningStyle) -> &ContentVariant {
        &self.variants[&style]
    }

    /// Grading weight of a question's section under `style`.
    pub fn question_weight(&self, question: &Question, style: LearningStyle) -> f64 {
        self.section(&question.section)
            .map(|s| s.weight(style))
            .unwrap_or(0.0)
    }
}

fn default_mastery_band() -> KnowledgeBand {
    KnowledgeBand::Good
}

fn default_flag_after() -> u32 {
    3
}

/// A validated, immutable course pack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoursePack {
    pub id: String,
    pub title: String,
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub prerequisites: BTreeMap<String, Vec<String>>,
    /// Lowest band that counts as mastery.
    #[serde(default = "default_mastery_band")]
    pub mastery_band: KnowledgeBand,
    /// Failed post-tests after which the teacher is flagged.
    #[serde(default = "default_flag_after")]
    pub flag_after_attempts: u32,
    #[serde(skip)]
    order: Vec<usize>,
}

impl CoursePack {
    pub fn from_json(doc: &str) -> Result<CoursePack, ContentError> {
        let raw: CoursePack =
            serde_json::from_str(doc).map_err(|e| ContentError::Parse(e.to_string()))?;
        load_course_pack(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("course pack serializes")
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.id == id)
    }

    pub fn prerequisites_of(&self, id: &str) -> &[String] {
        self.prerequisites.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Concepts in prerequisite order; independent concepts keep declaration order.
    pub fn ordered_concepts(&self) -> impl Iterator<Item = &Concept> {
        self.order.iter().map(|&i| &self.concepts[i])
    }

    /// Finds the question with `id` and the concept that owns it.
    pub fn find_question(&self, id: &str) -> Option<(&Concept, &Question)> {
        self.concepts
            .iter()
            .find_map(|c| c.question(id).map(|q| (c, q)))
    }
}

/// Validates a parsed pack document and computes its topological order.
pub fn load_course_pack(mut pack: CoursePack) -> Result<CoursePack, ContentError> {
    if pack.concepts.is_empty() {
        return Err(ContentError::NoConcepts);
    }
    let mut concept_ids = BTreeSet::new();
    for concept in &pack.concepts {
        if !concept_ids.insert(concept.id.as_str()) {
            return Err(ContentError::DuplicateId {
                kind: "concept",
                id: concept.id.clone(),
            });
        }
    }
    let mut question_ids = BTreeSet::new();
    for concept in &pack.concepts {
        for question in &concept.questions {
            if !question_ids.insert(question.id.as_str()) {
                return Err(ContentError::DuplicateId {
                    kind: "question",
                    id: question.id.clone(),
                });
            }
        }
    }
    for (concept, prereqs) in &pack.prerequisites {
        for id in std::iter::once(concept).chain(prereqs) {
            if !concept_ids.contains(id.as_str()) {
                return Err(ContentError::UnknownConcept {
                    referrer: format!("prerequisites of {concept}"),
                    target: id.clone(),
                });
            }
        }
    }
    for concept in &pack.concepts {
        validate_concept(concept, &concept_ids)?;
    }
    pack.order = topological_order(&pack)?;
    Ok(pack)
}

fn validate_concept(concept: &Concept, concept_ids: &BTreeSet<&str>) -> Result<(), ContentError> {
    let cid = &concept.id;
    if concept.sections.is_empty() {
        return Err(ContentError::NoSections(cid.clone()));
    }
    let mut section_ids = BTreeSet::new();
    for section in &concept.sections {
        if !section_ids.insert(section.id.as_str()) {
            return Err(ContentError::DuplicateId {
                kind: "section",
                id: section.id.clone(),
            });
        }
        for style in LearningStyle::ALL {
            match section.weights.get(&style) {
                Some(w) if w.is_finite() && *w > 0.0 => {}
                _ => {
                    return Err(ContentError::BadWeight {
                        concept: cid.clone(),
                        section: section.id.clone(),
                        style,
                    });
                }
            }
        }
    }
    let key = concept
        .section(&concept.key_section)
        .ok_or_else(|| ContentError::UnknownKeySection {
            concept: cid.clone(),
            section: concept.key_section.clone(),
        })?;
    for style in LearningStyle::ALL {
        let key_weight = key.weight(style);
        if let Some(rival) = concept
            .sections
            .iter()
            .find(|s| s.id != key.id && s.weight(style) >= key_weight)
        {
            return Err(ContentError::KeySectionNotMaximal {
                concept: cid.clone(),
                section: rival.id.clone(),
                style,
            });
        }
    }
    for style in LearningStyle::ALL {
        let variant = concept
            .variants
            .get(&style)
            .ok_or_else(|| ContentError::MissingVariant {
                concept: cid.clone(),
                style,
            })?;
        if variant.blocks.is_empty() {
            return Err(ContentError::EmptyVariant {
                concept: cid.clone(),
                style,
            });
        }
        for link in variant.blocks.iter().flat_map(|b| &b.links) {
            if let LinkTarget::Concept(target) = classify_link(link)
                && !concept_ids.contains(target)
            {
                return Err(ContentError::DanglingLink {
                    concept: cid.clone(),
                    style,
                    target: target.to_string(),
                });
            }
        }
    }
    for question in &concept.questions {
        validate_question(question, &section_ids)?;
    }
    for section in &concept.sections {
        if !concept.questions.iter().any(|q| q.section == section.id) {
            return Err(ContentError::UncoveredSection {
                concept: cid.clone(),
                section: section.id.clone(),
            });
        }
    }
    Ok(())
}

fn validate_question(question: &Question, section_ids: &BTreeSet<&str>) -> Result<(), ContentError> {
    let invalid = |reason: String| ContentError::InvalidQuestion {
        question: question.id.clone(),
        reason,
    };
    if !section_ids.contains(question.section.as_str()) {
        return Err(invalid(format!("unknown section `{}`", question.section)));
    }
    if !(question.points.is_finite() && question.points > 0.0) {
        return Err(invalid("points must be positive".into()));
    }
    let correct = question.choices.iter().filter(|c| c.correct).count();
    if correct != 1 {
        return Err(invalid(format!("{correct} choices marked correct, expected 1")));
    }
    let mut choice_ids = BTreeSet::new();
    for choice in &question.choices {
        if !choice_ids.insert(choice.id.as_str()) {
            return Err(ContentError::DuplicateId {
                kind: "choice",
                id: format!("{}/{}", question.id, choice.id),
            });
        }
        if choice.correct && choice.misconception_tag.is_some() {
            return Err(invalid(format!(
                "correct choice `{}` carries a misconception tag",
                choice.id
            )));
        }
    }
    Ok(())
}

/// Kahn's algorithm, always releasing the earliest-declared ready concept.
fn topological_order(pack: &CoursePack) -> Result<Vec<usize>, ContentError> {
    let index: HashMap<&str, usize> = pack
        .concepts
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let n = pack.concepts.len();
    let mut indegree = vec![0usize; n];
    let mut dependents = vec![Vec::new(); n];
    for (concept, prereqs) in &pack.prerequisites {
        let c = index[concept.as_str()];
        for p in prereqs.iter().collect::<BTreeSet<_>>() {
            let p = index[p.as_str()];
            indegree[c] += 1;
            dependents[p].push(c);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(next) = ready.pop_first() {
        order.push(next);
        for &d in &dependents[next] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    if order.len() < n {
        let cycle = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| pack.concepts[i].id.clone())
            .collect();
        return Err(ContentError::CyclicPrerequisites(cycle));
    }
    Ok(order)
}

/// The full (section, style) weight table of a concept.
pub fn section_weight_table(concept: &Concept) -> BTreeMap<(String, LearningStyle), f64> {
    concept
        .sections
        .iter()
        .flat_map(|s| {
            s.weights
                .iter()
                .map(move |(style, w)| ((s.id.clone(), *style), *w))
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn weights(w: f64) -> BTreeMap<LearningStyle, f64> {
        LearningStyle::ALL.iter().map(|s| (*s, w)).collect()
    }

    pub(crate) fn question(id: &str, section: &str, level: Level) -> Question {
        Question {
            id: id.into(),
            section: section.into(),
            level,
            dimension: Dimension::Conceptual,
            points: 10.0,
            body: format!("question {id}"),
            choices: vec![
                Choice {
                    id: "a".into(),
                    body: "right".into(),
                    correct: true,
                    misconception_tag: None,
                },
                Choice {
                    id: "b".into(),
                    body: "wrong".into(),
                    correct: false,
                    misconception_tag: Some(format!("{id}-slip")),
                },
            ],
            hints: vec!["first hint".into(), "second hint".into()],
        }
    }

    pub(crate) fn concept(id: &str) -> Concept {
        let variants = LearningStyle::ALL
            .iter()
            .map(|s| {
                (
                    *s,
                    ContentVariant {
                        blocks: vec![Block {
                            kind: BlockKind::Text,
                            body: format!("{id} for {s}"),
                            links: vec![],
                        }],
                    },
                )
            })
            .collect();
        Concept {
            id: id.into(),
            title: id.to_uppercase(),
            sections: vec![
                Section {
                    id: "main".into(),
                    title: "Main".into(),
                    weights: weights(3.0),
                },
                Section {
                    id: "side".into(),
                    title: "Side".into(),
                    weights: weights(1.0),
                },
            ],
            key_section: "main".into(),
            variants,
            questions: vec![
                question(&format!("{id}-m1"), "main", Level::L1),
                question(&format!("{id}-s1"), "side", Level::L2),
            ],
        }
    }

    pub(crate) fn pack(concepts: Vec<Concept>) -> CoursePack {
        CoursePack {
            id: "p".into(),
            title: "Pack".into(),
            concepts,
            prerequisites: BTreeMap::new(),
            mastery_band: KnowledgeBand::Good,
            flag_after_attempts: 3,
            order: vec![],
        }
    }

    #[test]
    fn two_concept_pack_loads() {
        let pack = load_course_pack(pack(vec![concept("a"), concept("b")])).unwrap();
        assert_eq!(pack.concepts.len(), 2);
    }

    #[test]
    fn two_cycle_is_rejected() {
        let mut p = pack(vec![concept("a"), concept("b")]);
        p.prerequisites.insert("a".into(), vec!["b".into()]);
        p.prerequisites.insert("b".into(), vec!["a".into()]);
        assert!(matches!(
            load_course_pack(p),
            Err(ContentError::CyclicPrerequisites(c)) if c == ["a", "b"]
        ));
    }

    #[test]
    fn key_section_must_be_maximal() {
        let mut c = concept("a");
        c.sections[0]
            .weights
            .insert(LearningStyle::ConscientiousAchiever, 5.0);
        c.sections[1]
            .weights
            .insert(LearningStyle::ConscientiousAchiever, 9.0);
        assert_eq!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::KeySectionNotMaximal {
                concept: "a".into(),
                section: "side".into(),
                style: LearningStyle::ConscientiousAchiever,
            })
        );
    }

    #[test]
    fn equal_weight_is_not_strictly_maximal() {
        let mut c = concept("a");
        c.sections[1].weights = weights(3.0);
        assert!(matches!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::KeySectionNotMaximal { .. })
        ));
    }

    #[test]
    fn missing_variant_is_rejected() {
        let mut c = concept("a");
        c.variants.remove(&LearningStyle::DeepLearningAchiever);
        assert_eq!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::MissingVariant {
                concept: "a".into(),
                style: LearningStyle::DeepLearningAchiever
            })
        );
    }

    #[test]
    fn uncovered_section_is_rejected() {
        let mut c = concept("a");
        c.questions.retain(|q| q.section == "main");
        assert_eq!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::UncoveredSection {
                concept: "a".into(),
                section: "side".into()
            })
        );
    }

    #[test]
    fn dangling_concept_link_is_rejected_but_urls_pass() {
        let mut c = concept("a");
        let block = &mut c.variants.get_mut(&LearningStyle::SensationSeeking).unwrap().blocks[0];
        block.links = vec!["https://example.org/cpu".into(), "a".into()];
        assert!(load_course_pack(pack(vec![c.clone()])).is_ok());
        c.variants.get_mut(&LearningStyle::SensationSeeking).unwrap().blocks[0]
            .links
            .push("nowhere".into());
        assert_eq!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::DanglingLink {
                concept: "a".into(),
                style: LearningStyle::SensationSeeking,
                target: "nowhere".into()
            })
        );
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        assert!(matches!(
            load_course_pack(pack(vec![concept("a"), concept("a")])),
            Err(ContentError::DuplicateId { kind: "concept", .. })
        ));
    }

    #[test]
    fn question_invariants() {
        let mut c = concept("a");
        c.questions[0].choices[1].correct = true;
        assert!(matches!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::InvalidQuestion { .. })
        ));
        let mut c = concept("a");
        c.questions[0].points = 0.0;
        assert!(matches!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::InvalidQuestion { .. })
        ));
        let mut c = concept("a");
        c.questions[0].choices[0].misconception_tag = Some("oops".into());
        assert!(matches!(
            load_course_pack(pack(vec![c])),
            Err(ContentError::InvalidQuestion { .. })
        ));
    }

    #[test]
    fn unknown_prerequisite_is_rejected() {
        let mut p = pack(vec![concept("a")]);
        p.prerequisites.insert("a".into(), vec!["ghost".into()]);
        assert!(matches!(
            load_course_pack(p),
            Err(ContentError::UnknownConcept { target, .. }) if target == "ghost"
        ));
    }

    #[test]
    fn topological_order_is_stable() {
        let mut p = pack(vec![concept("c"), concept("a"), concept("b"), concept("d")]);
        // c needs b; d needs a.
        p.prerequisites.insert("c".into(), vec!["b".into()]);
        p.prerequisites.insert("d".into(), vec!["a".into()]);
        let p = load_course_pack(p).unwrap();
        let order: Vec<_> = p.ordered_concepts().map(|c| c.id.as_str()).collect();
        assert_eq!(order, ["a", "b", "c", "d"]);
    }

    #[test]
    fn singleton_section_is_trivially_maximal() {
        let mut c = concept("a");
        c.sections.truncate(1);
        c.questions.retain(|q| q.section == "main");
        let pack = load_course_pack(pack(vec![c])).unwrap();
        let table = section_weight_table(&pack.concepts[0]);
        assert_eq!(table.len(), 5);
        assert!(table.keys().all(|(s, _)| s == "main"));
    }

    #[test]
    fn round_trip_preserves_structure() {
        let mut p = pack(vec![concept("a"), concept("b")]);
        p.prerequisites.insert("b".into(), vec!["a".into()]);
        let loaded = load_course_pack(p).unwrap();
        let reloaded = CoursePack::from_json(&loaded.to_json()).unwrap();
        assert_eq!(loaded, reloaded);
    }

    #[test]
    fn link_classification() {
        assert!(matches!(classify_link("intro-cpu"), LinkTarget::Concept("intro-cpu")));
        assert!(matches!(classify_link("https://x.org/a"), LinkTarget::External(_)));
    }

    fn arb_weights(n_sections: usize) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (
            0..n_sections,
            prop::collection::vec(prop::collection::vec(0.1f64..10.0, 5), n_sections),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn key_section_is_argmax_for_every_style(
            (key, mut raw) in (1usize..6).prop_flat_map(arb_weights)
        ) {
            // Lift the key section strictly above every rival.
            for style in 0..5 {
                let top = raw.iter().map(|w| w[style]).fold(0.0, f64::max);
                raw[key][style] = top + 1.0;
            }
            let mut c = concept("r");
            c.sections = raw
                .iter()
                .enumerate()
                .map(|(i, w)| Section {
                    id: format!("s{i}"),
                    title: format!("S{i}"),
                    weights: LearningStyle::ALL.iter().map(|s| (*s, w[s.index()])).collect(),
                })
                .collect();
            c.key_section = format!("s{key}");
            c.questions = (0..raw.len()).map(|i| question(&format!("q{i}"), &format!("s{i}"), Level::L1)).collect();
            let loaded = load_course_pack(pack(vec![c])).unwrap();
            let table = section_weight_table(&loaded.concepts[0]);
            for style in LearningStyle::ALL {
                // Brute-force argmax over the table.
                let best = (0..raw.len())
                    .max_by(|a, b| {
                        table[&(format!("s{a}"), style)].total_cmp(&table[&(format!("s{b}"), style)])
                    })
                    .unwrap();
                prop_assert_eq!(format!("s{best}"), loaded.concepts[0].key_section.clone());
            }
        }
    }
}
