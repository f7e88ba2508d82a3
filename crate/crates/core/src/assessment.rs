//! Test assembly, weighted grading and knowledge banding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{Concept, Dimension, Level, Question};
use crate::profiler::LearningStyle;

/// Fraction of a question's points lost per hint used.
pub const HINT_PENALTY: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessmentError {
    #[error("score {0} is outside [0, 100]")]
    OutOfRange(f64),
    #[error("level mix sums to {mix_total} but the test asks for {count} questions")]
    InvalidSpec { count: u32, mix_total: u32 },
    #[error("question bank of `{concept}` cannot satisfy the test: {detail}")]
    BankExhausted { concept: String, detail: String },
    #[error("question `{0}` was not answered")]
    UnansweredQuestion(String),
    #[error("question `{question}` has no choice `{choice}`")]
    UnknownChoice { question: String, choice: String },
    #[error("question `{0}` is not part of this concept")]
    UnknownQuestion(String),
    #[error("question `{question}` reports {used} hints but only {available} exist")]
    TooManyHints {
        question: String,
        used: u32,
        available: usize,
    },
}

/// Mastery categories, ordered weakest first so that `Excellent` is the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KnowledgeBand {
    Weak,
    Average,
    Good,
    VeryGood,
    Excellent,
}

impl KnowledgeBand {
    pub const ALL: [KnowledgeBand; 5] = [
        KnowledgeBand::Weak,
        KnowledgeBand::Average,
        KnowledgeBand::Good,
        KnowledgeBand::VeryGood,
        KnowledgeBand::Excellent,
    ];

    /// Human-facing label.
    pub fn label(self) -> &'static str {
        match self {
            KnowledgeBand::Excellent => "Excellent",
            KnowledgeBand::VeryGood => "Very good",
            KnowledgeBand::Good => "Good",
            KnowledgeBand::Average => "Average",
            KnowledgeBand::Weak => "Weak",
        }
    }
}

impl fmt::Display for KnowledgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a 0-100 score onto its band. Scores are rounded half-up first.
pub fn band(score: f64) -> Result<KnowledgeBand, AssessmentError> {
    if !(0.0..=100.0).contains(&score) {
        return Err(AssessmentError::OutOfRange(score));
    }
    let rounded = (score + 0.5).floor() as u32;
    Ok(match rounded {
        86.. => KnowledgeBand::Excellent,
        71..=85 => KnowledgeBand::VeryGood,
        51..=70 => KnowledgeBand::Good,
        31..=50 => KnowledgeBand::Average,
        _ => KnowledgeBand::Weak,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pretest,
    Posttest,
}

/// Question counts per difficulty level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelMix {
    #[serde(rename = "L1", default)]
    pub l1: u32,
    #[serde(rename = "L2", default)]
    pub l2: u32,
    #[serde(rename = "L3", default)]
    pub l3: u32,
}

impl LevelMix {
    pub fn new(l1: u32, l2: u32, l3: u32) -> LevelMix {
        LevelMix { l1, l2, l3 }
    }

    pub fn total(&self) -> u32 {
        self.l1 + self.l2 + self.l3
    }

    pub fn get(&self, level: Level) -> u32 {
        self.as_array()[level.index()]
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn from_array(counts: [u32; 3]) -> LevelMix {
        LevelMix::new(counts[0], counts[1], counts[2])
    }

    /// Redistributes `count` questions proportionally to this mix (largest remainder,
    /// ties to the easier level).
    pub fn rescaled(&self, count: u32) -> LevelMix {
        let total = self.total();
        if total == 0 {
            return LevelMix::new(count, 0, 0);
        }
        let shares = self
            .as_array()
            .map(|c| f64::from(c) * f64::from(count) / f64::from(total));
        let mut counts = shares.map(|s| s.floor() as u32);
        let mut leftover = count - counts.iter().sum::<u32>();
        let mut by_remainder: Vec<usize> = (0..3).collect();
        by_remainder.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for i in by_remainder {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            leftover -= 1;
        }
        LevelMix::from_array(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSpec {
    pub phase: Phase,
    pub count: u32,
    pub level_mix: LevelMix,
}

impl TestSpec {
    pub fn new(phase: Phase, level_mix: LevelMix) -> TestSpec {
        TestSpec {
            phase,
            count: level_mix.total(),
            level_mix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInstance {
    pub questions: Vec<String>,
    pub seed: u64,
}

/// Draws a test from the concept's bank.
///
/// The returned questions avoid `used`, touch every section, and match the
/// level mix exactly. Candidates are shuffled with `seed` and the section
/// assignment is found by backtracking, so the search is complete: an error
/// means no valid test exists.
pub fn select_questions(
    concept: &Concept,
    spec: &TestSpec,
    used: &BTreeSet<String>,
    seed: u64,
) -> Result<TestInstance, AssessmentError> {
    if spec.count == 0 || spec.level_mix.total() != spec.count {
        return Err(AssessmentError::InvalidSpec {
            count: spec.count,
            mix_total: spec.level_mix.total(),
        });
    }
    let exhausted = |detail: String| AssessmentError::BankExhausted {
        concept: concept.id.clone(),
        detail,
    };
    let mut candidates: Vec<&Question> = concept
        .questions
        .iter()
        .filter(|q| !used.contains(&q.id))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);

    if (spec.count as usize) < concept.sections.len() {
        return Err(exhausted(format!(
            "{} questions cannot cover {} sections",
            spec.count,
            concept.sections.len()
        )));
    }
    for level in Level::ALL {
        let available = candidates.iter().filter(|q| q.level == level).count();
        let wanted = spec.level_mix.get(level) as usize;
        if available < wanted {
            return Err(exhausted(format!(
                "{wanted} unused {level:?} questions needed, {available} left"
            )));
        }
    }

    // One question per section, within the per-level quota.
    let per_section: Vec<Vec<usize>> = concept
        .sections
        .iter()
        .map(|s| {
            (0..candidates.len())
                .filter(|&i| candidates[i].section == s.id)
                .collect()
        })
        .collect();
    let mut quota = spec.level_mix.as_array();
    let mut assigned = vec![None; per_section.len()];
    if !cover_sections(&candidates, &per_section, &mut quota, &mut assigned) {
        return Err(exhausted(
            "no unused questions cover every section within the level mix".into(),
        ));
    }

    let mut chosen: BTreeSet<usize> = assigned.into_iter().flatten().collect();
    for (i, q) in candidates.iter().enumerate() {
        let slot = &mut quota[q.level.index()];
        if *slot > 0 && !chosen.contains(&i) {
            chosen.insert(i);
            *slot -= 1;
        }
    }
    let mut picked: Vec<usize> = chosen.into_iter().collect();
    // Easier questions first, shuffle order within a level.
    picked.sort_by_key(|&i| (candidates[i].level, i));
    Ok(TestInstance {
        questions: picked.into_iter().map(|i| candidates[i].id.clone()).collect(),
        seed,
    })
}

fn cover_sections(
    candidates: &[&Question],
    per_section: &[Vec<usize>],
    quota: &mut [u32; 3],
    assigned: &mut [Option<usize>],
) -> bool {
    // Most constrained open section first.
    let next = (0..per_section.len())
        .filter(|&s| assigned[s].is_none())
        .min_by_key(|&s| {
            per_section[s]
                .iter()
                .filter(|&&i| quota[candidates[i].level.index()] > 0)
                .count()
        });
    let Some(section) = next else {
        return true;
    };
    let mut tried_levels = [false; 3];
    for &i in &per_section[section] {
        let level = candidates[i].level.index();
        // Questions of the same section and level are interchangeable here.
        if quota[level] == 0 || tried_levels[level] {
            continue;
        }
        tried_levels[level] = true;
        quota[level] -= 1;
        assigned[section] = Some(i);
        if cover_sections(candidates, per_section, quota, assigned) {
            return true;
        }
        assigned[section] = None;
        quota[level] += 1;
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub raw_score: f64,
    pub band: KnowledgeBand,
    pub per_dimension: BTreeMap<Dimension, f64>,
    pub per_section: BTreeMap<String, f64>,
    pub misconceptions: Vec<String>,
    /// Score points (0-100 scale) lost to hint penalties.
    pub hint_penalty_applied: f64,
}

#[derive(Default)]
struct Tally {
    earned: f64,
    possible: f64,
}

impl Tally {
    fn percent(&self) -> f64 {
        if self.possible > 0.0 {
            (100.0 * self.earned / self.possible).clamp(0.0, 100.0)
        } else {
            0.0
        }
    }
}

/// Credit multiplier after `hints` hints.
pub fn hint_factor(hints: u32) -> f64 {
    (1.0 - HINT_PENALTY * f64::from(hints)).max(0.0)
}

/// Grades an answer sheet using the section weights of `style`.
pub fn grade(
    concept: &Concept,
    instance: &TestInstance,
    answers: &BTreeMap<String, String>,
    style: LearningStyle,
    hints_used: &BTreeMap<String, u32>,
) -> Result<GradeReport, AssessmentError> {
    let mut overall = Tally::default();
    let mut penalty = 0.0;
    let mut dimensions: BTreeMap<Dimension, Tally> = BTreeMap::new();
    let mut sections: BTreeMap<String, Tally> = BTreeMap::new();
    let mut misconceptions = Vec::new();

    for qid in &instance.questions {
        let question = concept
            .question(qid)
            .ok_or_else(|| AssessmentError::UnknownQuestion(qid.clone()))?;
        let answer = answers
            .get(qid)
            .ok_or_else(|| AssessmentError::UnansweredQuestion(qid.clone()))?;
        let choice = question
            .choice(answer)
            .ok_or_else(|| AssessmentError::UnknownChoice {
                question: qid.clone(),
                choice: answer.clone(),
            })?;
        let hints = hints_used.get(qid).copied().unwrap_or(0);
        if hints as usize > question.hints.len() {
            return Err(AssessmentError::TooManyHints {
                question: qid.clone(),
                used: hints,
                available: question.hints.len(),
            });
        }

        let weight = concept.question_weight(question, style);
        let possible = question.points * weight;
        let earned = if choice.correct {
            possible * hint_factor(hints)
        } else {
            if let Some(tag) = &choice.misconception_tag {
                misconceptions.push(tag.clone());
            }
            0.0
        };
        if choice.correct {
            penalty += possible - earned;
        }
        for tally in [
            &mut overall,
            dimensions.entry(question.dimension).or_default(),
            sections.entry(question.section.clone()).or_default(),
        ] {
            tally.earned += earned;
            tally.possible += possible;
        }
    }

    let raw_score = overall.percent();
    let hint_penalty_applied = if overall.possible > 0.0 {
        100.0 * penalty / overall.possible
    } else {
        0.0
    };
    Ok(GradeReport {
        raw_score,
        band: band(raw_score)?,
        per_dimension: dimensions.into_iter().map(|(d, t)| (d, t.percent())).collect(),
        per_section: sections.into_iter().map(|(s, t)| (s, t.percent())).collect(),
        misconceptions,
        hint_penalty_applied,
    })
}
