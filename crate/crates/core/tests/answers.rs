use std::collections::BTreeMap;

use conceptprobe_core::raven::answers::{
    editable_attributes, features, gen_biased, gen_fair, majority_vote_attack, Choice, CANDIDATES,
};
use conceptprobe_core::raven::edit::{build_panel, random_mask, Look};
use conceptprobe_core::raven::exploit::{exploitability, Attack, ExploitError};
use conceptprobe_core::raven::model::{LayoutKind, Panel, Value};
use conceptprobe_core::raven::suites::iid_specs;
use conceptprobe_core::raven::{concept_suite, Strategy};
use conceptprobe_core::seed::rng;
use proptest::prelude::*;

fn random_panel(seed: u64) -> Panel {
    let mut r = rng(seed);
    let layout = LayoutKind::ALL[(seed % 5) as usize];
    let mask = layout.arrangement().map(|arr| random_mask(arr, &mut r));
    let main = Look::random(&mut r);
    let inner = Look::random(&mut r);
    build_panel(layout, main, mask, Some(inner))
}

/// Straight recount of the attack: score = number of features on which the
/// candidate holds a value no other value outnumbers.
fn recount(candidates: &[Panel]) -> usize {
    let rows: Vec<Vec<Value>> = candidates.iter().map(features).collect();
    let scores: Vec<usize> = rows
        .iter()
        .map(|row| {
            (0..row.len())
                .filter(|&f| {
                    let mine = rows.iter().filter(|r| r[f] == row[f]).count();
                    rows.iter().all(|r| rows.iter().filter(|s| s[f] == r[f]).count() <= mine)
                })
                .count()
        })
        .collect();
    let best = *scores.iter().max().unwrap();
    scores.iter().position(|&s| s == best).unwrap()
}

fn is_modal_everywhere(candidates: &[Panel], index: usize, attrs: &[conceptprobe_core::raven::model::Attribute]) -> bool {
    attrs.iter().all(|&a| {
        let mut counts: BTreeMap<Option<Value>, usize> = BTreeMap::new();
        for c in candidates {
            *counts.entry(c.value(a)).or_default() += 1;
        }
        let top = *counts.values().max().unwrap();
        counts[&candidates[index].value(a)] == top
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn biased_distractors_are_one_edit_away(seed in any::<u64>()) {
        let correct = random_panel(seed);
        let set = gen_biased(&correct, seed).unwrap();
        let attrs = editable_attributes(correct.layout());
        prop_assert_eq!(&set.candidates[set.correct_index], &correct);
        for (i, c) in set.candidates.iter().enumerate() {
            if i != set.correct_index {
                // Number and position are two views of one occupancy edit.
                let diff: std::collections::BTreeSet<_> = attrs
                    .iter()
                    .filter(|&&a| c.value(a) != correct.value(a))
                    .map(|a| a.coordinate())
                    .collect();
                prop_assert_eq!(diff.len(), 1, "{:?}", diff);
            }
        }
    }

    #[test]
    fn attack_matches_recount(seed in any::<u64>(), fair in any::<bool>()) {
        let correct = random_panel(seed);
        let set = if fair { gen_fair(&correct, seed) } else { gen_biased(&correct, seed) }.unwrap();
        prop_assert_eq!(majority_vote_attack(&set.candidates).chosen, Choice::Index(recount(&set.candidates)));
    }

    #[test]
    fn fair_sets_are_distinct_and_contain_correct(seed in any::<u64>()) {
        let correct = random_panel(seed);
        let set = gen_fair(&correct, seed).unwrap();
        prop_assert_eq!(set.candidates.len(), CANDIDATES);
        prop_assert_eq!(&set.candidates[set.correct_index], &correct);
        for i in 0..CANDIDATES {
            for j in i + 1..CANDIDATES {
                prop_assert_ne!(&set.candidates[i], &set.candidates[j]);
            }
        }
    }
}

#[test]
fn biased_correct_panel_holds_every_mode() {
    let n = 1000;
    let modal = (0..n)
        .filter(|&seed| {
            let correct = random_panel(seed);
            let set = gen_biased(&correct, seed).unwrap();
            is_modal_everywhere(&set.candidates, set.correct_index, &editable_attributes(correct.layout()))
        })
        .count();
    assert!(modal as f64 / n as f64 >= 0.95, "{modal}/{n}");
}

#[test]
fn fair_correct_panel_is_rarely_the_strict_winner() {
    let n = 1000;
    let strict = (0..n)
        .filter(|&seed| {
            let set = gen_fair(&random_panel(seed), seed).unwrap();
            let scores = majority_vote_attack(&set.candidates).scores;
            let mine = scores[set.correct_index];
            scores.iter().enumerate().all(|(i, &s)| i == set.correct_index || s < mine)
        })
        .count();
    assert!(strict as f64 / n as f64 <= 0.25, "{strict}/{n}");
}

#[test]
fn correct_index_is_uniform() {
    // Chi-square goodness of fit, 7 degrees of freedom, 1% critical value.
    let n = 10_000u64;
    let mut counts = [0u64; CANDIDATES];
    for seed in 0..n {
        counts[gen_fair(&random_panel(seed), seed).unwrap().correct_index] += 1;
    }
    let expected = n as f64 / CANDIDATES as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 18.475, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn exploitability_by_strategy() {
    let biased = concept_suite(&iid_specs(Strategy::BiasedPerturbation), 15, 21).unwrap();
    let fair = concept_suite(&iid_specs(Strategy::FairBisection), 15, 21).unwrap();
    let b = exploitability(&biased, Attack::MajorityVote).unwrap();
    let f = exploitability(&fair, Attack::MajorityVote).unwrap();
    assert!(b.rate() > 0.9, "{}", b.rate());
    assert!((0.02..=0.3).contains(&f.rate()), "{}", f.rate());
    let direct = fair
        .iter()
        .filter(|p| Choice::Index(recount(&p.answers)) == Choice::Index(p.correct_index))
        .count();
    assert_eq!(f.hits, direct);
}

#[test]
fn exploitability_report_shape() {
    let mut one = concept_suite(&iid_specs(Strategy::BiasedPerturbation)[..1], 20, 4).unwrap();
    one.retain(|p| Attack::MajorityVote.choose(p) == Choice::Index(p.correct_index));
    one.truncate(1);
    let report = exploitability(&one, Attack::MajorityVote).unwrap();
    assert_eq!(report.rate(), 1.0);
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "concept_tag,n,attack,rate");
    assert_eq!(lines[1], "all,1,majority-vote,1.000000");
    // Family tag and full tag rows.
    assert_eq!(lines.len(), 4);
    assert!(matches!(exploitability(&[], Attack::MajorityVote), Err(ExploitError::EmptyDataset)));
}
