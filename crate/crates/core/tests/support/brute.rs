//! Exhaustive reference for rule induction and adjudication.
//!
//! Builds the rule space from the raw relation/parameter grid (not from
//! `Rule::all_for`), enumerates every combination of one rule or nothing per
//! attribute, and filters with `check_row`.

#![allow(dead_code)]

use conceptprobe_core::raven::model::{Attribute, LayoutKind, Panel};
use conceptprobe_core::raven::rules::{check_row, Relation, Rule, RuleSet};

pub fn rule_space(attribute: Attribute) -> Vec<Rule> {
    let mut out = Vec::new();
    for relation in Relation::ALL {
        for param in -2i8..=2 {
            if let Ok(rule) = Rule::new(relation, attribute, param) {
                out.push(rule);
            }
        }
    }
    out
}

/// Some in-domain value completes the row prefix under `rule`.
fn prefix_completable(rule: &Rule, layout: LayoutKind, prefix: &[Panel]) -> bool {
    let (Some(a), Some(b)) = (prefix[0].value(rule.attribute), prefix[1].value(rule.attribute)) else {
        return false;
    };
    rule.attribute.domain(layout).into_iter().any(|v| rule.holds_values(layout, [a, b, v]))
}

fn ruleset(layout: LayoutKind, rules: &[Rule]) -> RuleSet {
    let free = layout
        .attributes()
        .into_iter()
        .filter(|a| !rules.iter().any(|r| r.attribute == *a))
        .collect();
    RuleSet::new(layout, rules.to_vec(), free).expect("one rule per attribute")
}

/// Rulesets holding on rows 1 and 2 whose rules can all complete row 3.
///
/// The product is built one attribute at a time; partial rulesets that
/// already fail are dropped, which is exact because a ruleset holds iff each
/// of its rules does.
pub fn induce(context: &[Panel]) -> Vec<RuleSet> {
    let layout = context[0].layout();
    let row = |i: usize| [context[i].clone(), context[i + 1].clone(), context[i + 2].clone()];
    let (r1, r2) = (row(0), row(3));
    let consistent = |rules: &[Rule]| {
        let rs = ruleset(layout, rules);
        check_row(&rs, &r1) == Ok(true)
            && check_row(&rs, &r2) == Ok(true)
            && rules.iter().all(|r| prefix_completable(r, layout, &context[6..8]))
    };
    let mut acc: Vec<Vec<Rule>> = vec![Vec::new()];
    for attribute in layout.attributes() {
        let mut next = Vec::new();
        for partial in &acc {
            next.push(partial.clone());
            for rule in rule_space(attribute) {
                let mut extended = partial.clone();
                extended.push(rule);
                if consistent(&extended) {
                    next.push(extended);
                }
            }
        }
        acc = next;
    }
    acc.iter().map(|rules| ruleset(layout, rules)).collect()
}

/// Candidates completing row 3 under some ruleset that binds every
/// attribute bound by any induced ruleset.
pub fn admitted(context: &[Panel], candidates: &[Panel]) -> Vec<usize> {
    let induced = induce(context);
    let covered: Vec<Attribute> = context[0]
        .layout()
        .attributes()
        .into_iter()
        .filter(|a| induced.iter().any(|rs| rs.rule_for(*a).is_some()))
        .collect();
    let maximal: Vec<&RuleSet> = induced
        .iter()
        .filter(|rs| covered.iter().all(|a| rs.rule_for(*a).is_some()))
        .collect();
    (0..candidates.len())
        .filter(|&i| {
            let row = [context[6].clone(), context[7].clone(), candidates[i].clone()];
            maximal.iter().any(|rs| check_row(rs, &row) == Ok(true))
        })
        .collect()
}
