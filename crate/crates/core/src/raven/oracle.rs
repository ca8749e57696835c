//! Rule-induction oracle.
//!
//! The hypothesis space is one rule (or "free") per attribute defined on the
//! layout, using every rule from [`Rule::all_for`]. A rule is *induced* when
//! it holds on rows 1 and 2 and admits the first two panels of row 3.
//!
//! Adjudication uses the maximal rulesets only: those binding an induced rule
//! on every attribute that has one. A candidate is admitted by a maximal
//! ruleset when every rule holds on row 3 completed with it. Because
//! attributes are independent, a candidate is admitted by *some* maximal
//! ruleset iff, for every attribute with induced rules, at least one of those
//! rules holds. The verdict is `Unique(i)` when exactly candidate `i` is
//! admitted, `Ambiguous` when several are, `NoneConsistent` otherwise.
//! Attributes with no induced rule are never compared.

use serde::{Deserialize, Serialize};

use super::model::{Attribute, LayoutKind, Panel};
use super::rules::{Rule, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unique(usize),
    Ambiguous(Vec<usize>),
    NoneConsistent,
}

impl Verdict {
    pub fn from_admitted(admitted: Vec<usize>) -> Verdict {
        match admitted.len() {
            0 => Verdict::NoneConsistent,
            1 => Verdict::Unique(admitted[0]),
            _ => Verdict::Ambiguous(admitted),
        }
    }
}

fn rows(context: &[Panel]) -> Option<[[Panel; 3]; 2]> {
    if context.len() != 8 {
        return None;
    }
    let row = |i: usize| [context[i].clone(), context[i + 1].clone(), context[i + 2].clone()];
    Some([row(0), row(3)])
}

fn shared_layout(context: &[Panel], layout: LayoutKind) -> bool {
    context.iter().all(|p| p.layout() == layout)
}

/// Induced rules per attribute, in canonical attribute order.
pub fn candidate_rules(context: &[Panel], layout: LayoutKind) -> Vec<(Attribute, Vec<Rule>)> {
    let Some([r1, r2]) = rows(context) else { return Vec::new() };
    if !shared_layout(context, layout) {
        return Vec::new();
    }
    let prefix = &context[6..8];
    layout
        .attributes()
        .into_iter()
        .map(|a| {
            let rules = Rule::all_for(a)
                .into_iter()
                .filter(|r| r.holds(&r1) && r.holds(&r2) && r.admits_prefix(prefix))
                .collect();
            (a, rules)
        })
        .collect()
}

fn product(options: &[(Attribute, Vec<Option<Rule>>)], layout: LayoutKind) -> Vec<RuleSet> {
    let mut acc: Vec<Vec<Option<Rule>>> = vec![Vec::new()];
    for (_, opts) in options {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(*o);
                    next
                })
            })
            .collect();
    }
    acc.into_iter()
        .map(|choice| {
            let mut rules = Vec::new();
            let mut free = Vec::new();
            for ((a, _), c) in options.iter().zip(choice) {
                match c {
                    Some(r) => rules.push(r),
                    None => free.push(*a),
                }
            }
            RuleSet { layout, rules, free }
        })
        .collect()
}

/// Every ruleset (one induced rule or free per attribute) consistent with
/// rows 1–2 and the row-3 prefix.
pub fn induce_rules(context: &[Panel], layout: LayoutKind) -> Vec<RuleSet> {
    let per_attr = candidate_rules(context, layout);
    if per_attr.is_empty() {
        return Vec::new();
    }
    let options: Vec<(Attribute, Vec<Option<Rule>>)> = per_attr
        .into_iter()
        .map(|(a, rules)| {
            let mut opts: Vec<Option<Rule>> = rules.into_iter().map(Some).collect();
            opts.push(None);
            (a, opts)
        })
        .collect();
    product(&options, layout)
}

/// Rulesets binding an induced rule on every attribute that has one.
pub fn maximal_rulesets(context: &[Panel], layout: LayoutKind) -> Vec<RuleSet> {
    let per_attr = candidate_rules(context, layout);
    if per_attr.is_empty() {
        return Vec::new();
    }
    let options: Vec<(Attribute, Vec<Option<Rule>>)> = per_attr
        .into_iter()
        .map(|(a, rules)| {
            if rules.is_empty() {
                (a, vec![None])
            } else {
                (a, rules.into_iter().map(Some).collect())
            }
        })
        .collect();
    product(&options, layout)
}

/// Solves from the eight context panels and the candidate list.
pub fn solve_candidates(context: &[Panel], candidates: &[Panel]) -> Verdict {
    let Some(layout) = context.first().map(Panel::layout) else {
        return Verdict::NoneConsistent;
    };
    let per_attr = candidate_rules(context, layout);
    if per_attr.is_empty() {
        return Verdict::NoneConsistent;
    }
    let admitted = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.layout() == layout)
        .filter(|(_, c)| {
            let row = [context[6].clone(), context[7].clone(), (*c).clone()];
            per_attr
                .iter()
                .filter(|(_, rules)| !rules.is_empty())
                .all(|(_, rules)| rules.iter().any(|r| r.holds(&row)))
        })
        .map(|(i, _)| i)
        .collect();
    Verdict::from_admitted(admitted)
}

pub fn solve(problem: &super::Problem) -> Verdict {
    solve_candidates(&problem.matrix.context, &problem.answers)
}

/// True iff the oracle picks exactly the matrix's ground truth.
pub fn is_well_posed(matrix: &super::RavenMatrix, answers: &[Panel]) -> bool {
    if answers.len() != super::answers::CANDIDATES {
        return false;
    }
    let Some(correct) = answers.iter().position(|a| *a == matrix.ground_truth) else {
        return false;
    };
    solve_candidates(&matrix.context, answers) == Verdict::Unique(correct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raven::edit::{build_panel, Look};
    use crate::raven::model::{Angle, Shape};
    use crate::raven::rules::Relation;

    fn center(shape: Shape, size: u8, color: u8) -> Panel {
        build_panel(LayoutKind::Center, Look { shape, size, color, angle: Angle::default() }, None, None)
    }

    /// Sides increase along each row, size and color fixed per row.
    fn sides_context() -> (Vec<Panel>, Panel) {
        let rows = [(2u8, 7u8), (4, 3), (1, 5)];
        let mut panels = Vec::new();
        for (size, color) in rows {
            for shape in [Shape::Triangle, Shape::Square, Shape::Pentagon] {
                panels.push(center(shape, size, color));
            }
        }
        let truth = panels.pop().unwrap();
        (panels, truth)
    }

    #[test]
    fn induces_side_progression_rules() {
        let (context, _) = sides_context();
        let induced = induce_rules(&context, LayoutKind::Center);
        let expected = vec![
            Rule::progression(Attribute::Shape, 1).unwrap(),
            Rule::constant(Attribute::Size),
            Rule::constant(Attribute::Color),
        ];
        assert!(induced.iter().any(|rs| rs.rules == expected));
        for rs in &induced {
            assert!(rs.rules.iter().all(|r| r.relation != Relation::Arithmetic || r.attribute == Attribute::Color));
        }
    }

    #[test]
    fn identical_context_induces_all_constant() {
        let p = center(Shape::Circle, 3, 3);
        let context = vec![p.clone(); 8];
        let induced = induce_rules(&context, LayoutKind::Center);
        let all_constant: Vec<Rule> = LayoutKind::Center.attributes().into_iter().map(Rule::constant).collect();
        assert!(induced.iter().any(|rs| rs.rules == all_constant));
        assert_eq!(maximal_rulesets(&context, LayoutKind::Center).len(), 1);
    }

    #[test]
    fn side_progression_is_unique_and_duplicates_are_ambiguous() {
        let (context, truth) = sides_context();
        let mut answers = vec![
            center(Shape::Pentagon, 3, 5),
            center(Shape::Hexagon, 1, 5),
            center(Shape::Square, 1, 5),
            center(Shape::Pentagon, 1, 6),
            center(Shape::Circle, 1, 5),
            truth.clone(),
            center(Shape::Triangle, 1, 5),
            center(Shape::Pentagon, 0, 5),
        ];
        assert_eq!(solve_candidates(&context, &answers), Verdict::Unique(5));
        answers[0] = truth.clone();
        assert_eq!(solve_candidates(&context, &answers), Verdict::Ambiguous(vec![0, 5]));
        answers.retain(|a| *a != truth);
        assert_eq!(solve_candidates(&context, &answers), Verdict::NoneConsistent);
    }
}
