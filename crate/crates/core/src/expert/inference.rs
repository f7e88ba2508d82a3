use std::collections::BTreeMap;

use super::rulebook::{Action, Fact, Rule, Rulebook, Setting};

/// Result of one inference pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// One winning action per setting, ordered by setting.
    pub actions: Vec<Action>,
    /// Ids of every rule whose conditions held, in rulebook order.
    pub fired: Vec<String>,
    /// Number of rule evaluations performed.
    pub evaluations: usize,
}

pub fn rule_fires(rule: &Rule, facts: &[Fact]) -> bool {
    rule.conditions
        .iter()
        .all(|condition| facts.iter().any(|fact| condition.matches(fact)))
}

/// Evaluates every rule once against `facts` and resolves conflicting settings.
///
/// Among fired rules writing the same setting the winner has the highest
/// priority, then the most conditions, then the earliest position. Inside a
/// single rule the first action for a setting counts.
pub fn infer_traced(facts: &[Fact], rules: &Rulebook) -> Inference {
    // Current holder of each setting, keyed by (priority, conditions, position).
    let mut winners: BTreeMap<Setting, ((i64, usize, usize), &Action)> = BTreeMap::new();
    let mut fired = Vec::new();
    let mut evaluations = 0;
    for (position, rule) in rules.rules.iter().enumerate() {
        evaluations += 1;
        if !rule_fires(rule, facts) {
            continue;
        }
        fired.push(rule.id.clone());
        let key = (rule.priority, rule.conditions.len(), position);
        for action in &rule.actions {
            winners
                .entry(action.setting())
                .and_modify(|current| {
                    if beats(key, current.0) {
                        *current = (key, action);
                    }
                })
                .or_insert((key, action));
        }
    }
    Inference {
        actions: winners.into_values().map(|(_, a)| a.clone()).collect(),
        fired,
        evaluations,
    }
}

fn beats(challenger: (i64, usize, usize), holder: (i64, usize, usize)) -> bool {
    (challenger.0, challenger.1) > (holder.0, holder.1)
}

/// The winning actions for `facts`.
pub fn infer(facts: &[Fact], rules: &Rulebook) -> Vec<Action> {
    infer_traced(facts, rules).actions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assessment::{KnowledgeBand, LevelMix, Phase};
    use crate::expert::rulebook::{Comparator, Condition, FlowKind, Pattern, Scalar};
    use crate::profiler::LearningStyle;
    use proptest::prelude::*;

    fn dominant(style: LearningStyle) -> Fact {
        Fact::new("dominant_style", vec![Scalar::Style(style)])
    }

    fn when_dominant(id: &str, priority: i64, style: LearningStyle, actions: Vec<Action>) -> Rule {
        Rule {
            id: id.into(),
            priority,
            conditions: vec![Condition {
                predicate: "dominant_style".into(),
                args: vec![Pattern::Value(Scalar::Style(style))],
                comparator: Comparator::Eq,
            }],
            actions,
        }
    }

    #[test]
    fn empty_rulebook_is_vacuous() {
        let facts = [dominant(LearningStyle::SensationSeeking)];
        assert!(infer(&facts, &Rulebook::empty("e")).is_empty());
    }

    #[test]
    fn single_match() {
        let book = Rulebook {
            id: "b".into(),
            rules: vec![when_dominant(
                "ss",
                1,
                LearningStyle::SensationSeeking,
                vec![Action::SetVariant {
                    style: LearningStyle::SensationSeeking,
                }],
            )],
        };
        let out = infer(&[dominant(LearningStyle::SensationSeeking)], &book);
        assert_eq!(
            out,
            [Action::SetVariant {
                style: LearningStyle::SensationSeeking
            }]
        );
    }

    #[test]
    fn higher_priority_wins() {
        let book = Rulebook {
            id: "b".into(),
            rules: vec![
                when_dominant(
                    "low",
                    5,
                    LearningStyle::SensationSeeking,
                    vec![Action::SetVariant {
                        style: LearningStyle::GoalOrientedAchiever,
                    }],
                ),
                when_dominant(
                    "high",
                    9,
                    LearningStyle::SensationSeeking,
                    vec![Action::SetVariant {
                        style: LearningStyle::DeepLearningAchiever,
                    }],
                ),
            ],
        };
        let out = infer_traced(&[dominant(LearningStyle::SensationSeeking)], &book);
        assert_eq!(
            out.actions,
            [Action::SetVariant {
                style: LearningStyle::DeepLearningAchiever
            }]
        );
        assert_eq!(out.fired, ["low", "high"]);
        assert_eq!(out.evaluations, 2);
    }

    #[test]
    fn specificity_then_position() {
        let mut specific = when_dominant(
            "specific",
            1,
            LearningStyle::SensationSeeking,
            vec![Action::SetHintBudget { n: 4 }],
        );
        specific.conditions.push(Condition {
            predicate: "phase".into(),
            args: vec![Pattern::Any],
            comparator: Comparator::Eq,
        });
        let first = when_dominant(
            "first",
            1,
            LearningStyle::SensationSeeking,
            vec![Action::SetHintBudget { n: 1 }],
        );
        let second = when_dominant(
            "second",
            1,
            LearningStyle::SensationSeeking,
            vec![Action::SetHintBudget { n: 2 }],
        );
        let facts = [
            dominant(LearningStyle::SensationSeeking),
            Fact::new("phase", vec![Scalar::Str("plan".into())]),
        ];
        let book = Rulebook {
            id: "b".into(),
            rules: vec![first.clone(), specific, second.clone()],
        };
        assert_eq!(infer(&facts, &book), [Action::SetHintBudget { n: 4 }]);
        let book = Rulebook {
            id: "b".into(),
            rules: vec![first, second],
        };
        assert_eq!(infer(&facts, &book), [Action::SetHintBudget { n: 1 }]);
    }

    // ---- randomized oracle ----

    fn fact_pool() -> Vec<Fact> {
        let mut pool: Vec<Fact> = LearningStyle::ALL.iter().map(|s| dominant(*s)).collect();
        for band in KnowledgeBand::ALL {
            pool.push(Fact::new("overall_band", vec![Scalar::Band(band)]));
        }
        for n in 0..4 {
            pool.push(Fact::new(
                "attempt_count",
                vec![Scalar::Str("c".into()), Scalar::Num(n as f64)],
            ));
        }
        for tag in ["a", "b", "c"] {
            pool.push(Fact::new("misconception", vec![Scalar::Str(tag.into())]));
        }
        pool
    }

    fn arb_condition() -> impl Strategy<Value = Condition> {
        let comparators = prop::sample::select(vec![
            Comparator::Eq,
            Comparator::Ne,
            Comparator::Lt,
            Comparator::Le,
            Comparator::Gt,
            Comparator::Ge,
        ]);
        prop_oneof![
            (0usize..5, comparators.clone()).prop_map(|(s, c)| Condition {
                predicate: "dominant_style".into(),
                args: vec![Pattern::Value(Scalar::Style(LearningStyle::ALL[s]))],
                comparator: c,
            }),
            (0usize..5, comparators.clone()).prop_map(|(b, c)| Condition {
                predicate: "overall_band".into(),
                args: vec![Pattern::Value(Scalar::Band(KnowledgeBand::ALL[b]))],
                comparator: c,
            }),
            (0u32..4, comparators).prop_map(|(n, c)| Condition {
                predicate: "attempt_count".into(),
                args: vec![Pattern::Any, Pattern::Value(Scalar::Num(f64::from(n)))],
                comparator: c,
            }),
            prop::sample::select(vec!["a", "b", "c", "*"]).prop_map(|t| Condition {
                predicate: "misconception".into(),
                args: vec![if t == "*" {
                    Pattern::Any
                } else {
                    Pattern::Value(Scalar::Str(t.into()))
                }],
                comparator: Comparator::Eq,
            }),
        ]
    }

    fn arb_action() -> impl Strategy<Value = Action> {
        prop_oneof![
            (0usize..5).prop_map(|s| Action::SetVariant {
                style: LearningStyle::ALL[s]
            }),
            (1u32..8).prop_map(|n| Action::SetQuestionCount {
                phase: Phase::Pretest,
                n
            }),
            (1u32..4, 0u32..3).prop_map(|(a, b)| Action::SetLevelMix {
                phase: Phase::Posttest,
                mix: LevelMix::new(a, b, 1)
            }),
            prop::sample::select(vec![FlowKind::Skip, FlowKind::Present, FlowKind::Remove])
                .prop_map(|flow| Action::SetFlow { flow, target: None }),
            (0u32..5).prop_map(|n| Action::SetHintBudget { n }),
        ]
    }

    fn arb_rulebook() -> impl Strategy<Value = Rulebook> {
        prop::collection::vec(
            (
                0i64..4,
                prop::collection::vec(arb_condition(), 1..4),
                prop::collection::vec(arb_action(), 1..4),
            ),
            0..12,
        )
        .prop_map(|rules| Rulebook {
            id: "rand".into(),
            rules: rules
                .into_iter()
                .enumerate()
                .map(|(i, (priority, conditions, actions))| Rule {
                    id: format!("r{i}"),
                    priority,
                    conditions,
                    actions,
                })
                .collect(),
        })
    }

    /// Enumerates every fired (rule, action) pair and sorts each setting's
    /// candidates by the documented key.
    fn oracle(facts: &[Fact], book: &Rulebook) -> Vec<Action> {
        let mut candidates: Vec<(Setting, i64, usize, usize, usize, Action)> = Vec::new();
        for (pos, rule) in book.rules.iter().enumerate() {
            let fired = rule
                .conditions
                .iter()
                .all(|c| facts.iter().any(|f| c.matches(f)));
            if fired {
                for (k, action) in rule.actions.iter().enumerate() {
                    candidates.push((
                        action.setting(),
                        rule.priority,
                        rule.conditions.len(),
                        pos,
                        k,
                        action.clone(),
                    ));
                }
            }
        }
        candidates.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(b.1.cmp(&a.1))
                .then(b.2.cmp(&a.2))
                .then(a.3.cmp(&b.3))
                .then(a.4.cmp(&b.4))
        });
        candidates.dedup_by(|later, earlier| later.0 == earlier.0);
        candidates.into_iter().map(|c| c.5).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_brute_force_oracle(
            book in arb_rulebook(),
            picks in prop::collection::vec(any::<prop::sample::Index>(), 0..8),
            perm_seed in any::<u64>(),
        ) {
            let pool = fact_pool();
            let facts: Vec<Fact> = picks.iter().map(|i| pool[i.index(pool.len())].clone()).collect();
            let traced = infer_traced(&facts, &book);
            prop_assert_eq!(&traced.actions, &oracle(&facts, &book));
            prop_assert!(traced.evaluations <= book.rules.len());

            let mut shuffled = facts.clone();
            use rand::{SeedableRng, seq::SliceRandom};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            prop_assert_eq!(infer(&shuffled, &book), traced.actions);
        }
    }
}
