use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use adaptutor_core::content::Level;
use adaptutor_core::profiler::Instrument;
use adaptutor_core::session::ActiveTest;
use adaptutor_core::{CoursePack, LearningStyle, Phase};

pub fn difficulty_penalty(level: Level) -> f64 {
    match level {
        Level::L1 => 0.0,
        Level::L2 => 0.15,
        Level::L3 => 0.3,
    }
}

/// A synthetic learner whose correctness depends on the presented variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimLearner {
    pub index: usize,
    pub true_style: LearningStyle,
    pub aptitude: f64,
    pub style_sensitivity: f64,
    pub noise: f64,
    pub seed: u64,
}

/// Two uniform draws in [0, 1) shared by every policy that shows the learner
/// the same question at the same point of the course.
fn draws(seed: u64, question: &str, phase: Phase, attempt: u32) -> (f64, f64) {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((question.len() as u64).to_le_bytes());
    hasher.update(question.as_bytes());
    hasher.update([matches!(phase, Phase::Posttest) as u8]);
    hasher.update(attempt.to_le_bytes());
    let digest = hasher.finalize();
    let unit = |bytes: &[u8]| {
        let v = u64::from_le_bytes(bytes.try_into().expect("8 bytes"));
        (v >> 11) as f64 / (1u64 << 53) as f64
    };
    (unit(&digest[..8]), unit(&digest[8..16]))
}

impl SimLearner {
    /// Probability of a correct answer. `noise_draw` is already scaled.
    pub fn p_correct(&self, level: Level, matched: bool, noise_draw: f64) -> f64 {
        let boost = if matched { self.style_sensitivity } else { 0.0 };
        (self.aptitude + boost - difficulty_penalty(level) + noise_draw).clamp(0.0, 1.0)
    }

    /// Likert answers that lean toward the true style without always naming it.
    pub fn questionnaire(&self, instrument: &Instrument) -> HashMap<String, i32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, hi) = (instrument.scale_min, instrument.scale_max);
        instrument
            .items
            .iter()
            .map(|item| {
                let agree = if item.style == self.true_style {
                    rng.random_range((hi - 2).max(lo)..=hi)
                } else {
                    rng.random_range(lo..=(hi - 1).max(lo))
                };
                let value = if item.reverse_scored { lo + hi - agree } else { agree };
                (item.id.clone(), value)
            })
            .collect()
    }

    /// Fills in a test. Pre-tests come before any study, so no variant matches.
    /// Wrong answers pick a distractor, which carries its misconception tag.
    pub fn answer(&self, pack: &CoursePack, test: &ActiveTest, attempt: u32) -> BTreeMap<String, String> {
        let matched = test.phase == Phase::Posttest && test.variant_style == self.true_style;
        test.instance
            .questions
            .iter()
            .filter_map(|qid| pack.find_question(qid).map(|(_, q)| q))
            .map(|q| {
                let (u, v) = draws(self.seed, &q.id, test.phase, attempt);
                let noise_draw = self.noise * (2.0 * v - 1.0);
                let choice = if u < self.p_correct(q.level, matched, noise_draw) {
                    q.correct_choice()
                } else {
                    let wrong: Vec<_> = q.choices.iter().filter(|c| !c.correct).collect();
                    wrong[(v * wrong.len() as f64) as usize % wrong.len()]
                };
                (q.id.clone(), choice.id.clone())
            })
            .collect()
    }
}

/// Population parameters shared by every learner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSpec {
    pub size: usize,
    pub style_sensitivity: f64,
    pub noise: f64,
    pub aptitude_min: f64,
    pub aptitude_max: f64,
}

impl PopulationSpec {
    pub fn new(size: usize, style_sensitivity: f64) -> PopulationSpec {
        PopulationSpec {
            size,
            style_sensitivity,
            noise: 0.05,
            aptitude_min: 0.3,
            aptitude_max: 0.6,
        }
    }

    /// Draws the learners. Sensitivity is not drawn, so populations that
    /// differ only in sensitivity share styles, aptitudes and seeds.
    pub fn generate(&self, seed: u64) -> Vec<SimLearner> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.size)
            .map(|index| {
                let true_style = LearningStyle::ALL[rng.random_range(0..LearningStyle::ALL.len())];
                let aptitude = if self.aptitude_max > self.aptitude_min {
                    rng.random_range(self.aptitude_min..self.aptitude_max)
                } else {
                    self.aptitude_min
                };
                SimLearner {
                    index,
                    true_style,
                    aptitude,
                    style_sensitivity: self.style_sensitivity,
                    noise: self.noise,
                    seed: rng.random(),
                }
            })
            .collect()
    }
}
