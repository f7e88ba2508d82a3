use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use adaptutor_core::session::{
    EventPayload, PretestOutcome, SeedMode, SessionError, SessionState, StepClock, Tutor,
    TutorConfig, VariantPolicy,
};
use adaptutor_core::{CoursePack, Instrument, LearnerModel, LearningStyle, Rulebook};

use crate::learner::{PopulationSpec, SimLearner};
use crate::stats::{PairedDifference, mean};

/// Upper bound on engine calls per learner and policy.
const MAX_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Policy {
    /// The engine's own variant choice.
    Adaptive,
    /// One style for everybody.
    Fixed(LearningStyle),
    /// A uniformly drawn style per presentation.
    Random,
    /// The learner's true style, which no real tutor knows.
    Oracle,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Adaptive => "adaptive",
            Policy::Fixed(_) => "fixed",
            Policy::Random => "random",
            Policy::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("population must hold at least one learner")]
    EmptyPopulation,
    #[error("learner {learner} under {policy}: {source}")]
    Engine {
        learner: usize,
        policy: &'static str,
        #[source]
        source: SessionError,
    },
    #[error("learner {learner} under {policy} did not finish within {MAX_STEPS} steps")]
    Stalled { learner: usize, policy: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub population: PopulationSpec,
    pub seed: u64,
    pub policies: Vec<Policy>,
}

impl ExperimentConfig {
    /// All four policies; the fixed one uses the first style.
    pub fn new(population: usize, style_sensitivity: f64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            population: PopulationSpec::new(population, style_sensitivity),
            seed,
            policies: vec![
                Policy::Adaptive,
                Policy::Fixed(LearningStyle::ALL[0]),
                Policy::Random,
                Policy::Oracle,
            ],
        }
    }
}

/// Outcome of one learner under one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerRun {
    /// Mean over concepts of the first post-test score minus the pre-test
    /// score it was compared with; 0 when no post-test was taken.
    pub gain: f64,
    pub posttests: usize,
    pub mean_attempts: f64,
    pub bands: Vec<Option<adaptutor_core::KnowledgeBand>>,
    pub removed: usize,
}

/// The documents every run shares.
#[derive(Clone)]
pub struct Course {
    pub pack: Arc<CoursePack>,
    pub rules: Arc<Rulebook>,
    pub instrument: Arc<Instrument>,
}

impl Course {
    fn tutor(&self, variant_policy: VariantPolicy, seed: u64) -> Tutor {
        Tutor::new(
            self.pack.clone(),
            self.rules.clone(),
            self.instrument.clone(),
            TutorConfig {
                seed_mode: SeedMode::Fixed(seed),
                variant_policy,
            },
        )
        .with_clock(Arc::new(StepClock::starting_at(0)))
    }
}

fn drive(tutor: &Tutor, learner: &SimLearner, policy: Policy) -> Result<LearnerModel, SimError> {
    let engine = |source| SimError::Engine {
        learner: learner.index,
        policy: policy.name(),
        source,
    };
    let mut model = tutor.new_learner(&format!("sim-{:05}", learner.index));
    tutor
        .submit_profile(&mut model, &learner.questionnaire(tutor.instrument()))
        .map_err(engine)?;
    for _ in 0..MAX_STEPS {
        let test = match model.state.clone() {
            SessionState::CourseComplete => return Ok(model),
            SessionState::ConceptPretest(c) => match tutor.issue_pretest(&mut model, &c) {
                Ok(PretestOutcome::Test(test)) => test,
                Ok(PretestOutcome::Redirected(_)) => continue,
                Err(e) => return Err(engine(e)),
            },
            SessionState::ConceptLearning(c) => tutor.issue_posttest(&mut model, &c).map_err(engine)?,
            SessionState::AwaitingProfile | SessionState::ConceptPosttest(_) => {
                unreachable!("the engine never rests in {}", model.state)
            }
        };
        let attempt = model.concept(&test.concept).map_or(0, |s| s.attempts);
        let sheet = learner.answer(tutor.pack(), &test, attempt);
        tutor
            .submit_answers(&mut model, &test.test_id, &sheet)
            .map_err(engine)?;
    }
    Err(SimError::Stalled {
        learner: learner.index,
        policy: policy.name(),
    })
}

/// Runs one learner through the whole course under `policy`.
pub fn run_learner(
    course: &Course,
    learner: &SimLearner,
    policy: Policy,
    seed: u64,
) -> Result<LearnerRun, SimError> {
    let variant_policy = match policy {
        Policy::Adaptive => VariantPolicy::Adaptive,
        Policy::Fixed(style) => VariantPolicy::Fixed(style),
        Policy::Random => VariantPolicy::Random(seed),
        Policy::Oracle => VariantPolicy::Fixed(learner.true_style),
    };
    let tutor = course.tutor(variant_policy, seed);
    let model = drive(&tutor, learner, policy)?;

    let mut first_gain: BTreeMap<&str, f64> = BTreeMap::new();
    for event in &model.event_log {
        if let EventPayload::ModelUpdated {
            concept,
            pre_score,
            post_score,
            ..
        } = &event.payload
        {
            first_gain.entry(concept).or_insert(post_score - pre_score);
        }
    }
    let gains: Vec<f64> = first_gain.values().copied().collect();
    let concepts: Vec<_> = course.pack.ordered_concepts().map(|c| model.concept(&c.id)).collect();
    Ok(LearnerRun {
        gain: mean(&gains),
        posttests: gains.len(),
        mean_attempts: mean(
            &concepts
                .iter()
                .map(|s| s.map_or(0.0, |s| f64::from(s.attempts)))
                .collect::<Vec<_>>(),
        ),
        bands: concepts.iter().map(|s| s.and_then(|s| s.band)).collect(),
        removed: concepts.iter().filter(|s| s.is_some_and(|s| s.removed)).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<LearningStyle>,
    pub mean_gain: f64,
    pub mean_attempts: f64,
    /// Final band per concept, keyed by band label or `Unassessed`.
    pub band_distribution: BTreeMap<String, usize>,
    pub removed_concepts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub treatment: &'static str,
    pub baseline: &'static str,
    pub difference: PairedDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerRecord {
    pub index: usize,
    pub seed: u64,
    pub true_style: LearningStyle,
    pub aptitude: f64,
    pub gains: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub pack_id: String,
    pub rulebook_id: String,
    pub config: ExperimentConfig,
    pub policies: Vec<PolicySummary>,
    pub comparisons: Vec<Comparison>,
    pub learners: Vec<LearnerRecord>,
}

/// Every learner takes the course once per policy, each time from a fresh
/// record. Answers share random draws across policies, so differences come
/// from the presented variants and what follows from them.
pub fn run_experiment(course: &Course, config: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    if config.population.size == 0 {
        return Err(SimError::EmptyPopulation);
    }
    let learners = config.population.generate(config.seed);
    let mut runs: Vec<Vec<LearnerRun>> = Vec::with_capacity(config.policies.len());
    for &policy in &config.policies {
        runs.push(
            learners
                .iter()
                .map(|l| run_learner(course, l, policy, config.seed))
                .collect::<Result<_, _>>()?,
        );
    }

    let policies = config
        .policies
        .iter()
        .zip(&runs)
        .map(|(&policy, runs)| {
            let mut bands = BTreeMap::new();
            for band in runs.iter().flat_map(|r| &r.bands) {
                let label = band.map_or("Unassessed", |b| b.label());
                *bands.entry(label.to_string()).or_insert(0) += 1;
            }
            PolicySummary {
                policy: policy.name(),
                style: match policy {
                    Policy::Fixed(s) => Some(s),
                    _ => None,
                },
                mean_gain: mean(&runs.iter().map(|r| r.gain).collect::<Vec<_>>()),
                mean_attempts: mean(&runs.iter().map(|r| r.mean_attempts).collect::<Vec<_>>()),
                band_distribution: bands,
                removed_concepts: runs.iter().map(|r| r.removed).sum(),
            }
        })
        .collect();

    let gains = |name: &str| -> Option<Vec<f64>> {
        let i = config.policies.iter().position(|p| p.name() == name)?;
        Some(runs[i].iter().map(|r| r.gain).collect())
    };
    let comparisons = [
        ("adaptive", "random"),
        ("adaptive", "fixed"),
        ("oracle", "adaptive"),
    ]
    .into_iter()
    .filter_map(|(treatment, baseline)| {
        Some(Comparison {
            treatment,
            baseline,
            difference: PairedDifference::new(&gains(treatment)?, &gains(baseline)?),
        })
    })
    .collect();

    let learners = learners
        .iter()
        .map(|l| LearnerRecord {
            index: l.index,
            seed: l.seed,
            true_style: l.true_style,
            aptitude: l.aptitude,
            gains: config
                .policies
                .iter()
                .zip(&runs)
                .map(|(p, runs)| (p.name(), runs[l.index].gain))
                .collect(),
        })
        .collect();

    Ok(ExperimentReport {
        pack_id: course.pack.id.clone(),
        rulebook_id: course.rules.id.clone(),
        config: config.clone(),
        policies,
        comparisons,
        learners,
    })
}

impl ExperimentReport {
    pub fn policy(&self, name: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == name)
    }

    pub fn comparison(&self, treatment: &str, baseline: &str) -> Option<&PairedDifference> {
        self.comparisons
            .iter()
            .find(|c| c.treatment == treatment && c.baseline == baseline)
            .map(|c| &c.difference)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Plain-text table of the policy means and paired differences.
    pub fn summary(&self) -> String {
        let pop = &self.config.population;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pack {}  rules {}  population {}  sensitivity {}  noise {}  seed {}",
            self.pack_id, self.rulebook_id, pop.size, pop.style_sensitivity, pop.noise, self.config.seed
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:>10} {:>14} {:>8}", "policy", "mean gain", "attempts/conc", "removed");
        for p in &self.policies {
            let name = match p.style {
                Some(s) => format!("{}({s})", p.policy),
                None => p.policy.to_string(),
            };
            let _ = writeln!(
                out,
                "{name:<10} {:>10.3} {:>14.3} {:>8}",
                p.mean_gain, p.mean_attempts, p.removed_concepts
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<22} {:>10} {:>24} {:>6}", "paired difference", "mean", "95% CI", "zero?");
        for c in &self.comparisons {
            let d = &c.difference;
            let ci = match d.ci95 {
                Some((lo, hi)) => format!("[{lo:.3}, {hi:.3}]"),
                None => "n/a".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<22} {:>10.3} {:>24} {:>6}",
                format!("{} - {}", c.treatment, c.baseline),
                d.mean,
                ci,
                if d.includes_zero() { "in" } else { "out" }
            );
        }
        out
    }
}
