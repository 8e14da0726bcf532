//! The interactive process: query, classify, explain the whole history,
//! recompute commitments, and report what changed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, ExplanationSeq, History, Label, LabelMask, Pair, Point};
use crate::entailment::{CommitmentMap, EntailmentKind, EntailmentRelation};
use crate::explainer::ExplainError;
use crate::rule::DecisionSet;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error(transparent)]
    OffGrid(#[from] DomainError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

/// Commitment changes between consecutive steps.
///
/// `added` and `retracted` are disjoint, `kept ∪ added` is the current
/// commitment set and `retracted` is drawn from the previous one. Each list
/// is in grid order, then label order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub added: Vec<Pair>,
    pub retracted: Vec<Pair>,
    pub kept: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alert {
    /// Two or more labels committed at `point`.
    Inconsistency { point: Point, labels: Vec<Label> },
    /// `old_label` at `point` is no longer committed.
    Retraction {
        point: Point,
        old_label: Label,
        new_labels: Vec<Label>,
    },
    /// The explanation at `index` differs from the previous step's.
    StabilityViolation { index: usize },
    /// The history pair at `index` is not entailed any more.
    ReflexivityBreach { index: usize },
}

/// What one query produced. Field names are part of the transcript format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    /// 1-based.
    pub step: usize,
    pub x: Point,
    pub y: Label,
    /// Rule texts of every explanation in the current sequence.
    pub explanations: Vec<Vec<String>>,
    pub delta: Delta,
    pub alerts: Vec<Alert>,
}

impl StepReport {
    pub fn inconsistencies(&self) -> impl Iterator<Item = &Alert> {
        self.alerts
            .iter()
            .filter(|a| matches!(a, Alert::Inconsistency { .. }))
    }

    pub fn retractions(&self) -> impl Iterator<Item = &Alert> {
        self.alerts.iter().filter(|a| matches!(a, Alert::Retraction { .. }))
    }
}

/// Session snapshot for listings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionSummary {
    pub scenario: String,
    pub entailment: EntailmentKind,
    pub step: usize,
    pub history: History,
    pub explanations: Vec<DecisionSet>,
}

/// One committed point with its labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub point: Point,
    pub labels: Vec<Label>,
}

/// An append-only interaction with one scenario.
#[derive(Debug, Clone)]
pub struct SessionState {
    scenario: Arc<Scenario>,
    relation: EntailmentRelation,
    history: History,
    explanations: ExplanationSeq,
    commitments: CommitmentMap,
    reports: Vec<StepReport>,
}

impl SessionState {
    pub fn start(scenario: Arc<Scenario>) -> Self {
        let relation = scenario.relation();
        let commitments = CommitmentMap::empty(scenario.domain().clone());
        SessionState {
            scenario,
            relation,
            history: History::new(),
            explanations: ExplanationSeq::new(),
            commitments,
            reports: Vec::new(),
        }
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn step(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn explanations(&self) -> &ExplanationSeq {
        &self.explanations
    }

    pub fn commitments(&self) -> &CommitmentMap {
        &self.commitments
    }

    pub fn reports(&self) -> &[StepReport] {
        &self.reports
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            scenario: self.scenario.name().to_string(),
            entailment: self.relation.kind(),
            step: self.step(),
            history: self.history.clone(),
            explanations: self.explanations.0.clone(),
        }
    }

    pub fn commitment_list(&self) -> Vec<Commitment> {
        self.commitments
            .entries()
            .into_iter()
            .map(|(point, labels)| Commitment { point, labels })
            .collect()
    }

    /// Asks the classifier about `x` and advances the session. On error the
    /// state is unchanged.
    pub fn query(&mut self, x: &Point) -> Result<&StepReport, SessionError> {
        let domain = self.scenario.domain().clone();
        domain.space().check_point(x)?;
        let y = self.scenario.classifier().classify(x).clone();
        let mut history = self.history.clone();
        history.push(Pair::new(x.clone(), y.clone()));
        let explanations = self.scenario.explainer().explain(&history)?;
        let commitments = self.relation.commitments(&explanations);

        let grid = domain.grid();
        let labels = domain.labels();
        let pairs_of = |i: usize, mask: LabelMask| {
            labels
                .decode(mask)
                .into_iter()
                .map(move |l| Pair::new(grid.point(i).clone(), l))
        };
        let mut delta = Delta::default();
        let mut inconsistencies = Vec::new();
        let mut retractions = Vec::new();
        for i in 0..grid.len() {
            let old = self.commitments.mask_at(i);
            let new = commitments.mask_at(i);
            delta.added.extend(pairs_of(i, new & !old));
            delta.retracted.extend(pairs_of(i, old & !new));
            delta.kept.extend(pairs_of(i, old & new));
            if new.count_ones() > 1 {
                inconsistencies.push(Alert::Inconsistency {
                    point: grid.point(i).clone(),
                    labels: labels.decode(new),
                });
            }
            for old_label in labels.decode(old & !new) {
                retractions.push(Alert::Retraction {
                    point: grid.point(i).clone(),
                    old_label,
                    new_labels: labels.decode(new),
                });
            }
        }
        let mut alerts = inconsistencies;
        alerts.extend(retractions);
        alerts.extend(
            self.explanations
                .0
                .iter()
                .zip(&explanations.0)
                .enumerate()
                .filter(|(_, (before, after))| before != after)
                .map(|(index, _)| Alert::StabilityViolation { index }),
        );
        alerts.extend(
            history
                .pairs()
                .iter()
                .enumerate()
                .filter(|(_, pair)| !commitments.entails_pair(pair))
                .map(|(index, _)| Alert::ReflexivityBreach { index }),
        );

        let report = StepReport {
            step: history.len(),
            x: x.clone(),
            y,
            explanations: explanations.0.iter().map(DecisionSet::texts).collect(),
            delta,
            alerts,
        };
        self.history = history;
        self.explanations = explanations;
        self.commitments = commitments;
        self.reports.push(report);
        Ok(self.reports.last().expect("just pushed"))
    }

    /// Reports so far, one compact JSON object per line.
    pub fn transcript(&self) -> String {
        transcript_jsonl(&self.reports)
    }
}

/// Runs `queries` against a fresh session.
pub fn replay(scenario: Arc<Scenario>, queries: &[Point]) -> Result<Vec<StepReport>, SessionError> {
    let mut session = SessionState::start(scenario);
    for x in queries {
        session.query(x)?;
    }
    Ok(session.reports)
}

pub fn transcript_jsonl(reports: &[StepReport]) -> String {
    let mut out = String::new();
    for report in reports {
        out.push_str(&serde_json::to_string(report).expect("step reports serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_transcript(text: &str) -> Result<Vec<StepReport>, serde_json::Error> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
