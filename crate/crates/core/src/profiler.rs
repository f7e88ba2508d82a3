//! Learning-style questionnaire: instrument format, scoring and the dominant style.
//!
//! An [`Instrument`] is a list of Likert items, each keyed to one of the five
//! learning styles. Responses are normalized per item and averaged per style
//! onto a 0-100 scale, producing a [`StyleVector`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five learning styles, in canonical order.
///
/// The derived `Ord` is the canonical order and is used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LearningStyle {
    /// Sensation seeking: learns by doing, trial and error.
    #[serde(rename = "SS")]
    SensationSeeking,
    /// Goal-oriented achiever.
    #[serde(rename = "GOA")]
    GoalOrientedAchiever,
    /// Emotionally intelligent achiever.
    #[serde(rename = "EIA")]
    EmotionallyIntelligentAchiever,
    /// Conscientious achiever.
    #[serde(rename = "CA")]
    ConscientiousAchiever,
    /// Deep learning achiever.
    #[serde(rename = "DLA")]
    DeepLearningAchiever,
}

impl LearningStyle {
    pub const ALL: [LearningStyle; 5] = [
        LearningStyle::SensationSeeking,
        LearningStyle::GoalOrientedAchiever,
        LearningStyle::EmotionallyIntelligentAchiever,
        LearningStyle::ConscientiousAchiever,
        LearningStyle::DeepLearningAchiever,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LearningStyle::SensationSeeking => "SS",
            LearningStyle::GoalOrientedAchiever => "GOA",
            LearningStyle::EmotionallyIntelligentAchiever => "EIA",
            LearningStyle::ConscientiousAchiever => "CA",
            LearningStyle::DeepLearningAchiever => "DLA",
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LearningStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LearningStyle {
    type Err = ProfilerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearningStyle::ALL
            .into_iter()
            .find(|style| style.code() == s)
            .ok_or_else(|| ProfilerError::UnknownStyle(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfilerError {
    #[error("malformed instrument document: {0}")]
    Parse(String),
    #[error("unknown learning style `{0}`")]
    UnknownStyle(String),
    #[error("no item targets style {0}")]
    MissingStyleCoverage(LearningStyle),
    #[error("item id `{0}` appears more than once")]
    DuplicateItemId(String),
    #[error("scale bounds must satisfy min < max (got {min}..{max})")]
    BadScaleBounds { min: i32, max: i32 },
    #[error("no response for item `{0}`")]
    MissingResponse(String),
    #[error("response {value} to item `{item}` is outside the scale")]
    OutOfRangeResponse { item: String, value: i32 },
    #[error("style score {score} for {style} is outside [0, 100]")]
    ScoreOutOfRange { style: LearningStyle, score: f64 },
}

fn default_scale_min() -> i32 {
    1
}

fn default_scale_max() -> i32 {
    5
}

/// One questionnaire item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub prompt: String,
    pub style: LearningStyle,
    #[serde(default)]
    pub reverse_scored: bool,
}

/// A validated questionnaire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instrument {
    pub id: String,
    #[serde(default = "default_scale_min")]
    pub scale_min: i32,
    #[serde(default = "default_scale_max")]
    pub scale_max: i32,
    pub items: Vec<Item>,
}

impl Instrument {
    /// Parses and validates an instrument document.
    pub fn from_json(doc: &str) -> Result<Instrument, ProfilerError> {
        let raw: Instrument =
            serde_json::from_str(doc).map_err(|e| ProfilerError::Parse(e.to_string()))?;
        validate_instrument(raw)
    }

    pub fn item(&self, id: &str) -> Option<&Item> {
        self.items.iter().find(|item| item.id == id)
    }
}

/// Checks the instrument invariants and hands the instrument back unchanged.
pub fn validate_instrument(doc: Instrument) -> Result<Instrument, ProfilerError> {
    if doc.scale_min >= doc.scale_max {
        return Err(ProfilerError::BadScaleBounds {
            min: doc.scale_min,
            max: doc.scale_max,
        });
    }
    let mut seen = BTreeSet::new();
    for item in &doc.items {
        if !seen.insert(item.id.as_str()) {
            return Err(ProfilerError::DuplicateItemId(item.id.clone()));
        }
    }
    for style in LearningStyle::ALL {
        if !doc.items.iter().any(|item| item.style == style) {
            return Err(ProfilerError::MissingStyleCoverage(style));
        }
    }
    Ok(doc)
}

/// Per-style questionnaire scores on a 0-100 scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleVector {
    scores: [f64; 5],
}

impl StyleVector {
    pub fn new(scores: [f64; 5]) -> Result<StyleVector, ProfilerError> {
        for style in LearningStyle::ALL {
            let score = scores[style.index()];
            if !(0.0..=100.0).contains(&score) {
                return Err(ProfilerError::ScoreOutOfRange { style, score });
            }
        }
        Ok(StyleVector { scores })
    }

    pub fn score(&self, style: LearningStyle) -> f64 {
        self.scores[style.index()]
    }

    pub fn scores(&self) -> [f64; 5] {
        self.scores
    }

    pub fn iter(&self) -> impl Iterator<Item = (LearningStyle, f64)> + '_ {
        LearningStyle::ALL.into_iter().map(|s| (s, self.score(s)))
    }
}

impl Serialize for StyleVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<LearningStyle, f64> = self.iter().collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StyleVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<LearningStyle, f64>::deserialize(deserializer)?;
        let mut scores = [0.0; 5];
        for style in LearningStyle::ALL {
            scores[style.index()] = *map
                .get(&style)
                .ok_or_else(|| serde::de::Error::custom(format!("missing style {style}")))?;
        }
        StyleVector::new(scores).map_err(serde::de::Error::custom)
    }
}

/// Scores a complete set of responses.
///
/// Each item contributes `(r - min) / (max - min)`, or `(max - r) / (max - min)`
/// when reverse scored; a style's score is 100 times the mean over its items.
pub fn score_questionnaire(
    instrument: &Instrument,
    responses: &HashMap<String, i32>,
) -> Result<StyleVector, ProfilerError> {
    let span = f64::from(instrument.scale_max - instrument.scale_min);
    let mut sums = [0.0f64; 5];
    let mut counts = [0usize; 5];
    for item in &instrument.items {
        let value = *responses
            .get(&item.id)
            .ok_or_else(|| ProfilerError::MissingResponse(item.id.clone()))?;
        if value < instrument.scale_min || value > instrument.scale_max {
            return Err(ProfilerError::OutOfRangeResponse {
                item: item.id.clone(),
                value,
            });
        }
        let raw = if item.reverse_scored {
            instrument.scale_max - value
        } else {
            value - instrument.scale_min
        };
        sums[item.style.index()] += f64::from(raw) / span;
        counts[item.style.index()] += 1;
    }
    let mut scores = [0.0; 5];
    for (i, score) in scores.iter_mut().enumerate() {
        // Validated instruments cover every style.
        if counts[i] > 0 {
            *score = 100.0 * sums[i] / counts[i] as f64;
        }
    }
    StyleVector::new(scores)
}

/// Index of the maximal value, earliest wins on ties.
pub(crate) fn argmax_style(values: impl Fn(LearningStyle) -> f64) -> LearningStyle {
    let mut best = LearningStyle::ALL[0];
    let mut best_value = values(best);
    for style in &LearningStyle::ALL[1..] {
        let value = values(*style);
        if value > best_value {
            best = *style;
            best_value = value;
        }
    }
    best
}

/// The highest-scoring style, ties resolved by canonical order.
pub fn dominant_style(vector: &StyleVector) -> LearningStyle {
    argmax_style(|s| vector.score(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn item(id: &str, style: LearningStyle, reverse: bool) -> Item {
        Item {
            id: id.to_string(),
            prompt: format!("prompt {id}"),
            style,
            reverse_scored: reverse,
        }
    }

    fn two_per_style() -> Instrument {
        let items = LearningStyle::ALL
            .iter()
            .flat_map(|s| {
                [
                    item(&format!("{s}-a"), *s, false),
                    item(&format!("{s}-b"), *s, false),
                ]
            })
            .collect();
        Instrument {
            id: "t".into(),
            scale_min: 1,
            scale_max: 5,
            items,
        }
    }

    fn uniform(instrument: &Instrument, value: i32) -> HashMap<String, i32> {
        instrument.items.iter().map(|i| (i.id.clone(), value)).collect()
    }

    // Straight re-implementation used as an oracle.
    fn brute_force(instrument: &Instrument, responses: &HashMap<String, i32>) -> [f64; 5] {
        let mut out = [0.0; 5];
        for style in LearningStyle::ALL {
            let values: Vec<f64> = instrument
                .items
                .iter()
                .filter(|i| i.style == style)
                .map(|i| {
                    let r = responses[&i.id] as f64;
                    let (lo, hi) = (instrument.scale_min as f64, instrument.scale_max as f64);
                    if i.reverse_scored {
                        (hi - r) / (hi - lo)
                    } else {
                        (r - lo) / (hi - lo)
                    }
                })
                .collect();
            out[style.index()] = 100.0 * values.iter().sum::<f64>() / values.len() as f64;
        }
        out
    }

    #[test]
    fn ten_item_document_is_valid() {
        let doc = serde_json::to_string(&two_per_style()).unwrap();
        let instrument = Instrument::from_json(&doc).unwrap();
        assert_eq!(instrument.items.len(), 10);
    }

    #[test]
    fn missing_style_coverage_is_rejected() {
        let mut instrument = two_per_style();
        instrument.items.retain(|i| {
            matches!(
                i.style,
                LearningStyle::SensationSeeking | LearningStyle::GoalOrientedAchiever
            )
        });
        assert_eq!(
            validate_instrument(instrument),
            Err(ProfilerError::MissingStyleCoverage(
                LearningStyle::EmotionallyIntelligentAchiever
            ))
        );
    }

    #[test]
    fn duplicate_item_ids_are_rejected() {
        let mut instrument = two_per_style();
        instrument.items[0].id = "q1".into();
        instrument.items[1].id = "q1".into();
        assert_eq!(
            validate_instrument(instrument),
            Err(ProfilerError::DuplicateItemId("q1".into()))
        );
    }

    #[test]
    fn bad_scale_bounds_are_rejected() {
        let mut instrument = two_per_style();
        instrument.scale_min = 5;
        assert!(matches!(
            validate_instrument(instrument),
            Err(ProfilerError::BadScaleBounds { min: 5, max: 5 })
        ));
    }

    #[test]
    fn unknown_style_string_fails_to_parse() {
        let doc = r#"{"id":"x","items":[{"id":"a","prompt":"p","style":"XYZ"}]}"#;
        assert!(matches!(Instrument::from_json(doc), Err(ProfilerError::Parse(_))));
    }

    #[test]
    fn midpoint_responses_score_fifty() {
        let instrument = two_per_style();
        let v = score_questionnaire(&instrument, &uniform(&instrument, 3)).unwrap();
        assert!(v.iter().all(|(_, s)| s == 50.0));
    }

    #[test]
    fn maximal_responses_score_hundred() {
        let instrument = two_per_style();
        let v = score_questionnaire(&instrument, &uniform(&instrument, 5)).unwrap();
        assert!(v.iter().all(|(_, s)| s == 100.0));
    }

    #[test]
    fn reverse_item_balances_normal_item() {
        let mut instrument = two_per_style();
        instrument.items[1].reverse_scored = true; // second SS item
        let responses = uniform(&instrument, 5);
        let v = score_questionnaire(&instrument, &responses).unwrap();
        assert_eq!(v.score(LearningStyle::SensationSeeking), 50.0);
        assert_eq!(
            v.score(LearningStyle::SensationSeeking),
            brute_force(&instrument, &responses)[0]
        );
    }

    #[test]
    fn missing_and_out_of_range_responses() {
        let instrument = two_per_style();
        let mut responses = uniform(&instrument, 3);
        responses.remove("SS-a");
        assert_eq!(
            score_questionnaire(&instrument, &responses),
            Err(ProfilerError::MissingResponse("SS-a".into()))
        );
        let mut responses = uniform(&instrument, 3);
        responses.insert("CA-b".into(), 6);
        assert_eq!(
            score_questionnaire(&instrument, &responses),
            Err(ProfilerError::OutOfRangeResponse {
                item: "CA-b".into(),
                value: 6
            })
        );
    }

    #[test]
    fn dominant_style_examples() {
        let v = StyleVector::new([50.0; 5]).unwrap();
        assert_eq!(dominant_style(&v), LearningStyle::SensationSeeking);
        let v = StyleVector::new([10.0, 90.0, 20.0, 20.0, 20.0]).unwrap();
        assert_eq!(dominant_style(&v), LearningStyle::GoalOrientedAchiever);
        let v = StyleVector::new([70.0, 70.0, 30.0, 30.0, 30.0]).unwrap();
        assert_eq!(dominant_style(&v), LearningStyle::SensationSeeking);
    }

    #[test]
    fn style_codes_round_trip() {
        for style in LearningStyle::ALL {
            assert_eq!(style.code().parse::<LearningStyle>().unwrap(), style);
            let json = serde_json::to_string(&style).unwrap();
            assert_eq!(json, format!("\"{}\"", style.code()));
        }
    }

    fn arb_instrument() -> impl Strategy<Value = (Instrument, HashMap<String, i32>)> {
        (1i32..4, 2i32..6, prop::collection::vec((0usize..5, any::<bool>()), 0..15)).prop_flat_map(
            |(lo, width, extra)| {
                let hi = lo + width;
                let mut items: Vec<Item> = LearningStyle::ALL
                    .iter()
                    .map(|s| item(&format!("base-{s}"), *s, false))
                    .collect();
                for (n, (s, rev)) in extra.into_iter().enumerate() {
                    items.push(item(&format!("x{n}"), LearningStyle::ALL[s], rev));
                }
                let instrument = Instrument {
                    id: "p".into(),
                    scale_min: lo,
                    scale_max: hi,
                    items,
                };
                let n = instrument.items.len();
                (Just(instrument), prop::collection::vec(lo..=hi, n))
            },
        )
        .prop_map(|(instrument, values)| {
            let responses = instrument
                .items
                .iter()
                .zip(values)
                .map(|(i, v)| (i.id.clone(), v))
                .collect();
            (instrument, responses)
        })
    }

    proptest! {
        #[test]
        fn scoring_matches_brute_force((instrument, responses) in arb_instrument()) {
            let v = score_questionnaire(&instrument, &responses).unwrap();
            let expected = brute_force(&instrument, &responses);
            for style in LearningStyle::ALL {
                prop_assert!((v.score(style) - expected[style.index()]).abs() < 1e-9);
            }
        }

        #[test]
        fn reversing_with_mirrored_response_is_identity(
            (instrument, responses) in arb_instrument(),
            pick in any::<prop::sample::Index>(),
        ) {
            let idx = pick.index(instrument.items.len());
            let mut flipped = instrument.clone();
            flipped.items[idx].reverse_scored = !flipped.items[idx].reverse_scored;
            let mut mirrored = responses.clone();
            let id = &instrument.items[idx].id;
            mirrored.insert(id.clone(), instrument.scale_min + instrument.scale_max - responses[id]);
            let a = score_questionnaire(&instrument, &responses).unwrap();
            let b = score_questionnaire(&flipped, &mirrored).unwrap();
            for style in LearningStyle::ALL {
                prop_assert!((a.score(style) - b.score(style)).abs() < 1e-9);
            }
        }

        #[test]
        fn scoring_is_pure((instrument, responses) in arb_instrument()) {
            let a = score_questionnaire(&instrument, &responses).unwrap();
            let b = score_questionnaire(&instrument, &responses).unwrap();
            for style in LearningStyle::ALL {
                prop_assert_eq!(a.score(style).to_bits(), b.score(style).to_bits());
            }
        }

        #[test]
        fn shifting_one_style_leaves_others(
            shift in 1i32..3,
            base in prop::collection::vec(1i32..=3, 4),
        ) {
            // Four SS items on a 1-5 scale, one item for every other style.
            let mut items: Vec<Item> = (0..4).map(|n| item(&format!("s{n}"), LearningStyle::SensationSeeking, false)).collect();
            for s in &LearningStyle::ALL[1..] {
                items.push(item(&format!("o-{s}"), *s, false));
            }
            let instrument = Instrument { id: "t".into(), scale_min: 1, scale_max: 5, items };
            let mut responses: HashMap<String, i32> = instrument.items.iter().map(|i| (i.id.clone(), 2)).collect();
            for (n, b) in base.iter().enumerate() {
                responses.insert(format!("s{n}"), *b);
            }
            let before = score_questionnaire(&instrument, &responses).unwrap();
            for n in 0..4 {
                *responses.get_mut(&format!("s{n}")).unwrap() += shift;
            }
            let after = score_questionnaire(&instrument, &responses).unwrap();
            let delta = after.score(LearningStyle::SensationSeeking) - before.score(LearningStyle::SensationSeeking);
            prop_assert!((delta - 100.0 * shift as f64 / 4.0).abs() < 1e-9);
            for s in &LearningStyle::ALL[1..] {
                prop_assert_eq!(before.score(*s), after.score(*s));
            }
        }

        #[test]
        fn dominant_style_survives_monotone_transforms(scores in prop::array::uniform5(0.0f64..=100.0)) {
            let v = StyleVector::new(scores).unwrap();
            let squashed = StyleVector::new(scores.map(|x| (x / 100.0).powi(3) * 100.0)).unwrap();
            let shifted = StyleVector::new(scores.map(|x| x * 0.5 + 10.0)).unwrap();
            prop_assert_eq!(dominant_style(&v), dominant_style(&squashed));
            prop_assert_eq!(dominant_style(&v), dominant_style(&shifted));
        }
    }
}
