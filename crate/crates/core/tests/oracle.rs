#[path = "support/brute.rs"]
mod brute;

use std::collections::HashSet;

use conceptprobe_core::raven::edit::set_attribute;
use conceptprobe_core::raven::model::Attribute;
use conceptprobe_core::raven::oracle::{candidate_rules, induce_rules, is_well_posed, solve, solve_candidates, Verdict};
use conceptprobe_core::raven::rules::check_row;
use conceptprobe_core::raven::suites::{iid_specs, probe_specs};
use conceptprobe_core::raven::{sample_problem, Problem, Strategy};
use proptest::prelude::*;


const ENTITY_LEVEL: [Attribute; 4] = [Attribute::Shape, Attribute::Size, Attribute::Color, Attribute::Angle];

fn mixed_problems(n: usize) -> Vec<Problem> {
    let mut specs = probe_specs();
    specs.extend(iid_specs(Strategy::FairBisection));
    specs.extend(iid_specs(Strategy::BiasedPerturbation));
    (0..n)
        .map(|i| sample_problem(&specs[i % specs.len()], 1000 + i as u64).unwrap())
        .collect()
}

#[test]
fn induced_rulesets_equal_brute_force_enumeration() {
    for p in mixed_problems(100) {
        let fast: HashSet<_> = induce_rules(&p.matrix.context, p.layout()).into_iter().collect();
        let slow: HashSet<_> = brute::induce(&p.matrix.context).into_iter().collect();
        assert_eq!(fast, slow, "{}", p.id);
    }
}

#[test]
fn induced_rulesets_hold_on_the_first_two_rows() {
    for p in mixed_problems(60) {
        for rs in induce_rules(&p.matrix.context, p.layout()) {
            assert_eq!(check_row(&rs, &p.matrix.row(0)), Ok(true));
            assert_eq!(check_row(&rs, &p.matrix.row(1)), Ok(true));
        }
    }
}

#[test]
fn solve_agrees_with_exhaustive_filtering() {
    for p in mixed_problems(500) {
        let expected = Verdict::from_admitted(brute::admitted(&p.matrix.context, &p.answers));
        assert_eq!(solve(&p), expected, "{}", p.id);
        assert_eq!(expected, Verdict::Unique(p.correct_index), "{}", p.id);
    }
}

#[test]
fn generator_output_is_well_posed_and_loses_it_without_ground_truth() {
    for p in mixed_problems(40) {
        assert!(is_well_posed(&p.matrix, &p.answers));
        let mut answers = p.answers.clone();
        answers.remove(p.correct_index);
        assert!(!is_well_posed(&p.matrix, &answers));
    }
}

#[test]
fn second_valid_completion_breaks_well_posedness() {
    // Edit the ground truth on an entity attribute the context leaves
    // unconstrained: the edited panel is another consistent completion.
    // Position and number edits are excluded since they move each other.
    let mut rng = conceptprobe_core::seed::rng(17);
    let mut built = 0;
    for p in mixed_problems(200) {
        let unconstrained: Vec<_> = candidate_rules(&p.matrix.context, p.layout())
            .into_iter()
            .filter(|(a, rules)| rules.is_empty() && ENTITY_LEVEL.contains(a))
            .map(|(a, _)| a)
            .collect();
        let gt = &p.matrix.ground_truth;
        let twin = unconstrained.iter().find_map(|&a| {
            a.domain(p.layout())
                .into_iter()
                .filter(|&v| Some(v) != gt.value(a))
                .find_map(|v| set_attribute(gt, a, v, &mut rng))
                .filter(|t| !p.answers.contains(t))
        });
        let Some(twin) = twin else { continue };
        let mut answers = p.answers.clone();
        let victim = (p.correct_index + 1) % answers.len();
        answers[victim] = twin;
        assert!(!is_well_posed(&p.matrix, &answers), "{}", p.id);
        assert!(matches!(solve_candidates(&p.matrix.context, &answers), Verdict::Ambiguous(_)));
        built += 1;
    }
    assert!(built >= 20, "only {built} problems had an unconstrained attribute");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdict_follows_candidate_permutation(seed in any::<u64>(), spec_index in 0usize..29, perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let spec = &probe_specs()[spec_index];
        let p = sample_problem(spec, seed).unwrap();
        let mut order: Vec<usize> = (0..p.answers.len()).collect();
        order.shuffle(&mut conceptprobe_core::seed::rng(perm_seed));
        let permuted: Vec<_> = order.iter().map(|&i| p.answers[i].clone()).collect();
        let new_index = order.iter().position(|&i| i == p.correct_index).unwrap();
        prop_assert_eq!(solve_candidates(&p.matrix.context, &permuted), Verdict::Unique(new_index));
        prop_assert_eq!(solve(&p), solve(&p));
    }
}
