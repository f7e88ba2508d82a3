#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use adaptutor_core::fixtures;
use adaptutor_core::session::{ActiveTest, SeedMode, StepClock, Tutor, TutorConfig, VariantPolicy};
use adaptutor_core::{CoursePack, Instrument, Rulebook};

pub fn demo_tutor(seed: u64) -> Tutor {
    tutor_with(
        fixtures::demo_pack().unwrap(),
        fixtures::default_rules().unwrap(),
        seed,
    )
}

pub fn tutor_with(pack: CoursePack, rules: Rulebook, seed: u64) -> Tutor {
    Tutor::new(
        Arc::new(pack),
        Arc::new(rules),
        Arc::new(fixtures::demo_instrument().unwrap()),
        TutorConfig {
            seed_mode: SeedMode::Fixed(seed),
            variant_policy: VariantPolicy::Adaptive,
        },
    )
    .with_clock(Arc::new(StepClock::starting_at(1_000)))
}

/// Agrees fully with every item of one style and neutrally with the rest.
pub fn responses_favoring(instrument: &Instrument, style: &str) -> HashMap<String, i32> {
    instrument
        .items
        .iter()
        .map(|item| {
            let v = if item.style.code() == style {
                if item.reverse_scored { 1 } else { 5 }
            } else {
                3
            };
            (item.id.clone(), v)
        })
        .collect()
}

/// Answers every question, correctly where `correct(question_index)` holds.
pub fn answer_sheet(
    pack: &CoursePack,
    test: &ActiveTest,
    correct: impl Fn(usize) -> bool,
) -> BTreeMap<String, String> {
    test.instance
        .questions
        .iter()
        .enumerate()
        .map(|(i, qid)| {
            let (_, q) = pack.find_question(qid).unwrap();
            let choice = if correct(i) {
                q.correct_choice()
            } else {
                q.choices.iter().find(|c| !c.correct).unwrap()
            };
            (qid.clone(), choice.id.clone())
        })
        .collect()
}

/// Drives one learner through the course from a byte script. Each test uses
/// one byte: its value is the chance of a correct answer, out of 255.
pub fn run_script(
    tutor: &Tutor,
    learner: &str,
    script: &[u8],
    max_steps: usize,
) -> (
    adaptutor_core::LearnerModel,
    Option<adaptutor_core::session::SessionError>,
) {
    use adaptutor_core::session::{PretestOutcome, SessionState};

    let styles = ["SS", "GOA", "EIA", "CA", "DLA"];
    let mut model = tutor.new_learner(learner);
    let mut bytes = script.iter().copied().cycle();
    let mut next = move || bytes.next().unwrap_or(128);
    let responses = responses_favoring(tutor.instrument(), styles[next() as usize % 5]);
    if let Err(e) = tutor.submit_profile(&mut model, &responses) {
        return (model, Some(e));
    }
    let mut answer = |model: &mut adaptutor_core::LearnerModel, test: ActiveTest| {
        let b = next();
        if b % 7 == 0 {
            let _ = tutor.request_hint(model, &test.test_id, &test.instance.questions[0]);
        }
        let sheet = answer_sheet(tutor.pack(), &test, |i| {
            (usize::from(b).wrapping_mul(31 * i + 17) % 255) < usize::from(b)
        });
        tutor.submit_answers(model, &test.test_id, &sheet).map(|_| ())
    };
    for _ in 0..max_steps {
        let result = match model.state.clone() {
            SessionState::CourseComplete => break,
            SessionState::ConceptPretest(c) => match tutor.issue_pretest(&mut model, &c) {
                Ok(PretestOutcome::Test(test)) => answer(&mut model, test),
                Ok(PretestOutcome::Redirected(_)) => Ok(()),
                Err(e) => Err(e),
            },
            SessionState::ConceptLearning(c) => match tutor.issue_posttest(&mut model, &c) {
                Ok(test) => answer(&mut model, test),
                Err(e) => Err(e),
            },
            other => panic!("driver left in {other}"),
        };
        if let Err(e) = result {
            return (model, Some(e));
        }
    }
    (model, None)
}
