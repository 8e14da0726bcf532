//! The black-box classifier: a total, deterministic map from grid points to
//! labels.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, DomainError, Label, Point};
use crate::rule::{parse_rule, ParseError, Rule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("table classifier is not total: no entry for {0}")]
    MissingPoint(Point),
    #[error("table classifier has two entries for {0}")]
    DuplicatePoint(Point),
    #[error("classifier rule `{text}`: {source}")]
    Rule { text: String, source: ParseError },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Classifier section of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Table { entries: Vec<TableEntry> },
    RuleList { rules: Vec<String>, default: Label },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub point: Point,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classifier {
    /// Explicit label for every grid point.
    Table(HashMap<Point, Label>),
    /// First matching rule wins; `default` when none matches.
    RuleList { rules: Vec<Rule>, default: Label },
}

impl Classifier {
    /// Label of `x`. `x` must be a grid point of the classifier's domain.
    pub fn classify(&self, x: &Point) -> &Label {
        match self {
            Classifier::Table(table) => table
                .get(x)
                .expect("table classifiers are total over their grid"),
            Classifier::RuleList { rules, default } => {
                for rule in rules {
                    if rule.covers(x) {
                        return rule.consequent();
                    }
                }
                default
            }
        }
    }

    /// Materializes this classifier as a table over the domain grid.
    pub fn to_table(&self, domain: &Domain) -> Classifier {
        Classifier::Table(
            domain
                .grid()
                .points()
                .iter()
                .map(|p| (p.clone(), self.classify(p).clone()))
                .collect(),
        )
    }

    pub fn to_spec(&self, domain: &Domain) -> ClassifierSpec {
        match self {
            Classifier::Table(table) => ClassifierSpec::Table {
                entries: domain
                    .grid()
                    .points()
                    .iter()
                    .map(|p| TableEntry {
                        point: p.clone(),
                        label: table[p].clone(),
                    })
                    .collect(),
            },
            Classifier::RuleList { rules, default } => ClassifierSpec::RuleList {
                rules: rules.iter().map(Rule::to_string).collect(),
                default: default.clone(),
            },
        }
    }
}

/// Builds a classifier from its scenario description, checking totality and
/// every feature and label reference.
pub fn load_classifier(spec: &ClassifierSpec, domain: &Domain) -> Result<Classifier, ClassifierError> {
    match spec {
        ClassifierSpec::Table { entries } => {
            let mut table = HashMap::with_capacity(entries.len());
            for entry in entries {
                domain.space().check_point(&entry.point)?;
                let label = domain.labels().resolve(entry.label.as_str())?;
                if table.insert(entry.point.clone(), label).is_some() {
                    return Err(ClassifierError::DuplicatePoint(entry.point.clone()));
                }
            }
            if let Some(missing) = domain.grid().points().iter().find(|p| !table.contains_key(*p)) {
                return Err(ClassifierError::MissingPoint(missing.clone()));
            }
            Ok(Classifier::Table(table))
        }
        ClassifierSpec::RuleList { rules, default } => {
            let rules = rules
                .iter()
                .map(|text| {
                    parse_rule(text, domain.space(), domain.labels()).map_err(|source| {
                        ClassifierError::Rule {
                            text: text.clone(),
                            source,
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let default = domain.labels().resolve(default.as_str())?;
            Ok(Classifier::RuleList { rules, default })
        }
    }
}
