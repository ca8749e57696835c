//! Row-wise relations and their semantics.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::{Attribute, LayoutKind, Panel, Value};

pub const PROGRESSION_DELTAS: [i8; 4] = [-2, -1, 1, 2];
pub const ARITHMETIC_SIGNS: [i8; 2] = [1, -1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Constant,
    Progression,
    Arithmetic,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Constant, Relation::Progression, Relation::Arithmetic];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Constant => "constant",
            Relation::Progression => "progression",
            Relation::Arithmetic => "arithmetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("{attribute} would take value {value}, outside its domain")]
    OutOfRange { attribute: Attribute, value: Value },
    #[error("{0} is not defined on the given panels")]
    UndefinedAttribute(Attribute),
    #[error("{relation:?} needs {needed} prior panels, got {got}")]
    MissingPrior { relation: Relation, needed: usize, got: usize },
    #[error("panel layout {found} does not match ruleset layout {expected}")]
    LayoutMismatch { expected: LayoutKind, found: LayoutKind },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
}

/// One relation bound to one attribute.
///
/// `param` is the step for progressions (−2, −1, +1, +2), the sign for
/// arithmetic (+1 adds / unions, −1 subtracts / takes the difference) and 0
/// for constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    pub relation: Relation,
    pub attribute: Attribute,
    pub param: i8,
}

impl Rule {
    pub fn new(relation: Relation, attribute: Attribute, param: i8) -> Result<Rule, RuleError> {
        if !attribute.supports(relation) {
            return Err(RuleError::InvalidRule(format!(
                "{} cannot be applied to {attribute}",
                relation.name()
            )));
        }
        let ok = match relation {
            Relation::Constant => param == 0,
            Relation::Progression => PROGRESSION_DELTAS.contains(&param),
            Relation::Arithmetic => ARITHMETIC_SIGNS.contains(&param),
        };
        if !ok {
            return Err(RuleError::InvalidRule(format!(
                "parameter {param} is not valid for {}",
                relation.name()
            )));
        }
        Ok(Rule { relation, attribute, param })
    }

    pub fn constant(attribute: Attribute) -> Rule {
        Rule { relation: Relation::Constant, attribute, param: 0 }
    }

    pub fn progression(attribute: Attribute, delta: i8) -> Result<Rule, RuleError> {
        Rule::new(Relation::Progression, attribute, delta)
    }

    pub fn arithmetic(attribute: Attribute, sign: i8) -> Result<Rule, RuleError> {
        Rule::new(Relation::Arithmetic, attribute, sign)
    }

    /// Every valid rule on `attribute`.
    pub fn all_for(attribute: Attribute) -> Vec<Rule> {
        let mut out = vec![Rule::constant(attribute)];
        if attribute.supports(Relation::Progression) {
            out.extend(PROGRESSION_DELTAS.iter().map(|&d| Rule {
                relation: Relation::Progression,
                attribute,
                param: d,
            }));
        }
        if attribute.supports(Relation::Arithmetic) {
            out.extend(ARITHMETIC_SIGNS.iter().map(|&s| Rule {
                relation: Relation::Arithmetic,
                attribute,
                param: s,
            }));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        Rule::new(self.relation, self.attribute, self.param).is_ok()
    }

    /// Whether the rule holds across a complete row.
    pub fn holds(&self, row: &[Panel; 3]) -> bool {
        let values: Option<Vec<Value>> = row.iter().map(|p| p.value(self.attribute)).collect();
        match values {
            Some(v) => self.holds_values(row[0].layout(), [v[0], v[1], v[2]]),
            None => false,
        }
    }

    /// Same as [`Rule::holds`] on raw attribute values.
    pub fn holds_values(&self, layout: LayoutKind, v: [Value; 3]) -> bool {
        if !v.iter().all(|&x| self.attribute.in_domain(layout, x)) {
            return false;
        }
        match self.relation {
            Relation::Constant => v[0] == v[1] && v[1] == v[2],
            Relation::Progression => {
                next_value(self, layout, &v[..1]).ok() == Some(v[1])
                    && next_value(self, layout, &v[1..2]).ok() == Some(v[2])
            }
            Relation::Arithmetic => next_value(self, layout, &v[..2]).ok() == Some(v[2]),
        }
    }

    /// Whether the first two panels of a row are compatible with the rule
    /// and it yields an in-domain value for the third.
    pub fn admits_prefix(&self, prefix: &[Panel]) -> bool {
        if prefix.len() != 2 || apply_rule(self, prefix).is_err() {
            return false;
        }
        match self.relation {
            Relation::Constant | Relation::Progression => {
                apply_rule(self, &prefix[..1]).ok() == prefix[1].value(self.attribute)
            }
            Relation::Arithmetic => true,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.relation {
            Relation::Constant => write!(f, "Constant({})", self.attribute),
            _ => write!(f, "{:?}({},{:+})", self.relation, self.attribute, self.param),
        }
    }
}

fn rotate(mask: Value, by: i32, len: u8) -> Value {
    let n = i32::from(len);
    let k = by.rem_euclid(n);
    let full = (1 << n) - 1;
    ((mask << k) | (mask >> (n - k))) & full
}

/// Value the next panel of a row must take for `rule.attribute`.
///
/// `prior` holds the first one or two panels of the row. Constants repeat the
/// last value; progressions add the step to the last value (masks rotate by
/// the step); arithmetic combines the first two values (masks: union for +,
/// difference for −).
pub fn apply_rule(rule: &Rule, prior: &[Panel]) -> Result<Value, RuleError> {
    let last = prior.last().ok_or(RuleError::MissingPrior {
        relation: rule.relation,
        needed: 1,
        got: 0,
    })?;
    let values = prior
        .iter()
        .map(|p| p.value(rule.attribute).ok_or(RuleError::UndefinedAttribute(rule.attribute)))
        .collect::<Result<Vec<_>, _>>()?;
    next_value(rule, last.layout(), &values)
}

/// [`apply_rule`] on raw attribute values.
pub fn next_value(rule: &Rule, layout: LayoutKind, prior: &[Value]) -> Result<Value, RuleError> {
    let attribute = rule.attribute;
    if !attribute.applies_to(layout) {
        return Err(RuleError::UndefinedAttribute(attribute));
    }
    let &last = prior.last().ok_or(RuleError::MissingPrior {
        relation: rule.relation,
        needed: 1,
        got: 0,
    })?;
    let next = match rule.relation {
        Relation::Constant => last,
        Relation::Progression => match (attribute, layout.arrangement()) {
            (Attribute::Position, Some(arr)) => rotate(last, i32::from(rule.param), arr.len()),
            _ => last + Value::from(rule.param),
        },
        Relation::Arithmetic => {
            if prior.len() < 2 {
                return Err(RuleError::MissingPrior {
                    relation: rule.relation,
                    needed: 2,
                    got: prior.len(),
                });
            }
            let first = prior[prior.len() - 2];
            match (attribute, rule.param > 0) {
                (Attribute::Position, true) => first | last,
                (Attribute::Position, false) => first & !last,
                (_, true) => first + last,
                (_, false) => first - last,
            }
        }
    };
    if !attribute.in_domain(layout, next) {
        return Err(RuleError::OutOfRange { attribute, value: next });
    }
    Ok(next)
}

/// Row relations for one problem: at most one rule per attribute, plus the
/// attributes left to vary freely.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleSet {
    pub layout: LayoutKind,
    pub rules: Vec<Rule>,
    pub free: Vec<Attribute>,
}

impl RuleSet {
    pub fn new(layout: LayoutKind, mut rules: Vec<Rule>, mut free: Vec<Attribute>) -> Result<RuleSet, RuleError> {
        rules.sort_by_key(|r| r.attribute);
        free.sort();
        free.dedup();
        for pair in rules.windows(2) {
            if pair[0].attribute == pair[1].attribute {
                return Err(RuleError::InvalidRule(format!(
                    "two rules on {}",
                    pair[0].attribute
                )));
            }
        }
        for r in &rules {
            if !r.is_valid() {
                return Err(RuleError::InvalidRule(r.to_string()));
            }
            if !r.attribute.applies_to(layout) {
                return Err(RuleError::InvalidRule(format!(
                    "{} is not defined for layout {layout}",
                    r.attribute
                )));
            }
            if free.contains(&r.attribute) {
                return Err(RuleError::InvalidRule(format!(
                    "{} is both ruled and free",
                    r.attribute
                )));
            }
        }
        Ok(RuleSet { layout, rules, free })
    }

    pub fn rule_for(&self, attribute: Attribute) -> Option<&Rule> {
        self.rules.iter().find(|r| r.attribute == attribute)
    }

    pub fn ruled_attributes(&self) -> Vec<Attribute> {
        self.rules.iter().map(|r| r.attribute).collect()
    }
}

/// True iff every rule holds across `row`; free attributes are ignored.
pub fn check_row(ruleset: &RuleSet, row: &[Panel; 3]) -> Result<bool, RuleError> {
    if let Some(p) = row.iter().find(|p| p.layout() != ruleset.layout) {
        return Err(RuleError::LayoutMismatch { expected: ruleset.layout, found: p.layout() });
    }
    Ok(ruleset.rules.iter().all(|r| r.holds(row)))
}
