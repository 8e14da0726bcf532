//! Explainers map a history of input-output pairs to a sequence of
//! explanations of the same length.
//!
//! Three kinds are provided:
//!
//! - [`Explainer::Lifted`] applies a pointwise explainer to every pair
//!   independently, so it never revisits an earlier explanation.
//! - [`Explainer::Scripted`] looks the whole history up in a script and may
//!   return a sequence that rewrites earlier explanations.
//! - [`Explainer::HistoryAware`] picks the explanation of step `t` by looking
//!   up the prefix ending at `t`, falling back to a pointwise explainer.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Classifier;
use crate::domain::{Domain, DomainError, ExplanationSeq, History, Label, Pair, Point};
use crate::rule::{DecisionSet, Op, ParseError, Predicate, Rule};

/// Failure to produce an explanation at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("script miss: no scripted explanations for history {}", fmt_history(.history))]
    ScriptMiss { history: History },
    #[error("no pointwise explanation for {pair}")]
    PointwiseMiss { pair: Pair },
    #[error("not the classifier's output: {point} is classified {actual}, not {label}")]
    NotClassifierOutput {
        point: Point,
        label: Label,
        actual: Label,
    },
}

fn fmt_history(history: &History) -> String {
    let pairs: Vec<String> = history.pairs().iter().map(Pair::to_string).collect();
    format!("[{}]", pairs.join(", "))
}

/// Invalid explainer description.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainerSpecError {
    #[error("script entry {index}: history has {history} pairs but {explanations} explanations")]
    ScriptLength {
        index: usize,
        history: usize,
        explanations: usize,
    },
    #[error("script entry {index}: history must not be empty")]
    EmptyHistory { index: usize },
    #[error("script entry {index}: history already scripted")]
    DuplicateHistory { index: usize },
    #[error("pointwise table has two entries for {0}")]
    DuplicatePair(Pair),
    #[error("explanation rule `{text}`: {source}")]
    Rule { text: String, source: ParseError },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A deterministic map from one pair to one explanation.
#[derive(Debug)]
pub enum Pointwise {
    /// Greedy maximal box of points sharing the classifier's output.
    SufficientBox(SufficientBox),
    /// Explicit explanations per pair, with an optional fallback.
    Table {
        entries: Vec<(Pair, DecisionSet)>,
        index: HashMap<Pair, usize>,
        default: Option<DecisionSet>,
    },
    /// The same explanation for every pair.
    Constant(DecisionSet),
}

impl Pointwise {
    pub fn table(
        entries: Vec<(Pair, DecisionSet)>,
        default: Option<DecisionSet>,
    ) -> Result<Self, ExplainerSpecError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (pair, _)) in entries.iter().enumerate() {
            if index.insert(pair.clone(), i).is_some() {
                return Err(ExplainerSpecError::DuplicatePair(pair.clone()));
            }
        }
        Ok(Pointwise::Table {
            entries,
            index,
            default,
        })
    }

    pub fn explain_pair(&self, pair: &Pair) -> Result<DecisionSet, ExplainError> {
        match self {
            Pointwise::SufficientBox(sb) => sb.explain(pair),
            Pointwise::Table {
                entries,
                index,
                default,
            } => index
                .get(pair)
                .map(|&i| entries[i].1.clone())
                .or_else(|| default.clone())
                .ok_or_else(|| ExplainError::PointwiseMiss { pair: pair.clone() }),
            Pointwise::Constant(set) => Ok(set.clone()),
        }
    }
}

/// Memoizing wrapper around [`sufficient_box_explain`].
#[derive(Debug)]
pub struct SufficientBox {
    domain: Arc<Domain>,
    classifier: Arc<Classifier>,
    cache: Mutex<HashMap<Pair, DecisionSet>>,
}

impl SufficientBox {
    pub fn new(domain: Arc<Domain>, classifier: Arc<Classifier>) -> Self {
        SufficientBox {
            domain,
            classifier,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn explain(&self, pair: &Pair) -> Result<DecisionSet, ExplainError> {
        if let Some(hit) = self.cache.lock().unwrap().get(pair) {
            return Ok(hit.clone());
        }
        let set = sufficient_box_explain(&self.classifier, &self.domain, &pair.point, &pair.label)?;
        self.cache.lock().unwrap().insert(pair.clone(), set.clone());
        Ok(set)
    }
}

/// Explanations for whole histories.
#[derive(Debug, Clone, Default)]
pub struct Script {
    entries: Vec<(History, ExplanationSeq)>,
    index: HashMap<History, usize>,
}

impl Script {
    pub fn new(entries: Vec<(History, ExplanationSeq)>) -> Result<Self, ExplainerSpecError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (history, explanations)) in entries.iter().enumerate() {
            if history.is_empty() {
                return Err(ExplainerSpecError::EmptyHistory { index: i });
            }
            if history.len() != explanations.len() {
                return Err(ExplainerSpecError::ScriptLength {
                    index: i,
                    history: history.len(),
                    explanations: explanations.len(),
                });
            }
            if index.insert(history.clone(), i).is_some() {
                return Err(ExplainerSpecError::DuplicateHistory { index: i });
            }
        }
        Ok(Script { entries, index })
    }

    pub fn entries(&self) -> &[(History, ExplanationSeq)] {
        &self.entries
    }

    pub fn lookup(&self, history: &History) -> Option<&ExplanationSeq> {
        self.index.get(history).map(|&i| &self.entries[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainerKind {
    LiftedPointwise,
    Scripted,
    HistoryAwareScripted,
}

#[derive(Debug)]
pub enum Explainer {
    Lifted(Pointwise),
    Scripted(Script),
    HistoryAware {
        steps: Vec<(History, DecisionSet)>,
        index: HashMap<History, usize>,
        fallback: Option<Pointwise>,
    },
}

impl Explainer {
    /// The explainer that applies `e` to each pair of the history.
    pub fn lift(e: Pointwise) -> Self {
        Explainer::Lifted(e)
    }

    pub fn history_aware(
        steps: Vec<(History, DecisionSet)>,
        fallback: Option<Pointwise>,
    ) -> Result<Self, ExplainerSpecError> {
        let mut index = HashMap::with_capacity(steps.len());
        for (i, (history, _)) in steps.iter().enumerate() {
            if history.is_empty() {
                return Err(ExplainerSpecError::EmptyHistory { index: i });
            }
            if index.insert(history.clone(), i).is_some() {
                return Err(ExplainerSpecError::DuplicateHistory { index: i });
            }
        }
        Ok(Explainer::HistoryAware {
            steps,
            index,
            fallback,
        })
    }

    pub fn kind(&self) -> ExplainerKind {
        match self {
            Explainer::Lifted(_) => ExplainerKind::LiftedPointwise,
            Explainer::Scripted(_) => ExplainerKind::Scripted,
            Explainer::HistoryAware { .. } => ExplainerKind::HistoryAwareScripted,
        }
    }

    /// Explanations for `h`, one per pair.
    pub fn explain(&self, h: &History) -> Result<ExplanationSeq, ExplainError> {
        match self {
            Explainer::Lifted(e) => h
                .pairs()
                .iter()
                .map(|pair| e.explain_pair(pair))
                .collect::<Result<Vec<_>, _>>()
                .map(ExplanationSeq),
            Explainer::Scripted(script) => {
                if h.is_empty() {
                    return Ok(ExplanationSeq::new());
                }
                script
                    .lookup(h)
                    .cloned()
                    .ok_or_else(|| ExplainError::ScriptMiss { history: h.clone() })
            }
            Explainer::HistoryAware {
                steps,
                index,
                fallback,
            } => {
                let mut out = Vec::with_capacity(h.len());
                for t in 0..h.len() {
                    let prefix = h.prefix(t + 1);
                    let set = match index.get(&prefix) {
                        Some(&i) => steps[i].1.clone(),
                        None => match fallback {
                            Some(e) => e.explain_pair(&h.pairs()[t])?,
                            None => return Err(ExplainError::ScriptMiss { history: prefix }),
                        },
                    };
                    out.push(set);
                }
                Ok(ExplanationSeq(out))
            }
        }
    }

    /// Histories this explainer is guaranteed to accept: the scripted ones
    /// for a full-history script, nothing otherwise.
    pub fn scripted_histories(&self) -> Vec<History> {
        match self {
            Explainer::Scripted(script) => script.entries.iter().map(|(h, _)| h.clone()).collect(),
            Explainer::HistoryAware {
                steps, fallback, ..
            } if fallback.is_none() => steps.iter().map(|(h, _)| h.clone()).collect(),
            _ => Vec::new(),
        }
    }

    /// Every explanation named by this explainer's configuration, in order of
    /// first appearance.
    pub fn mentioned_explanations(&self) -> Vec<DecisionSet> {
        let mut out: Vec<DecisionSet> = Vec::new();
        let mut push = |set: &DecisionSet| {
            if !out.contains(set) {
                out.push(set.clone());
            }
        };
        let pointwise = |e: &Pointwise, push: &mut dyn FnMut(&DecisionSet)| match e {
            Pointwise::Table { entries, default, .. } => {
                entries.iter().for_each(|(_, s)| push(s));
                if let Some(d) = default {
                    push(d);
                }
            }
            Pointwise::Constant(s) => push(s),
            Pointwise::SufficientBox(_) => {}
        };
        match self {
            Explainer::Lifted(e) => pointwise(e, &mut push),
            Explainer::Scripted(script) => script
                .entries
                .iter()
                .flat_map(|(_, seq)| seq.explanations())
                .for_each(&mut push),
            Explainer::HistoryAware {
                steps, fallback, ..
            } => {
                steps.iter().for_each(|(_, s)| push(s));
                if let Some(e) = fallback {
                    pointwise(e, &mut push);
                }
            }
        }
        out
    }

    pub fn to_spec(&self) -> ExplainerSpec {
        match self {
            Explainer::Lifted(e) => ExplainerSpec::LiftedPointwise {
                pointwise: pointwise_spec(e),
            },
            Explainer::Scripted(script) => ExplainerSpec::Scripted {
                script: script
                    .entries
                    .iter()
                    .map(|(h, seq)| ScriptEntry {
                        history: history_spec(h),
                        explanations: seq.explanations().iter().map(DecisionSet::texts).collect(),
                    })
                    .collect(),
            },
            Explainer::HistoryAware {
                steps, fallback, ..
            } => ExplainerSpec::HistoryAwareScripted {
                steps: steps
                    .iter()
                    .map(|(h, set)| StepEntry {
                        history: history_spec(h),
                        explanation: set.texts(),
                    })
                    .collect(),
                fallback: fallback.as_ref().map(pointwise_spec),
            },
        }
    }
}

fn history_spec(h: &History) -> Vec<(Point, Label)> {
    h.pairs()
        .iter()
        .map(|p| (p.point.clone(), p.label.clone()))
        .collect()
}

fn pointwise_spec(e: &Pointwise) -> PointwiseSpec {
    match e {
        Pointwise::SufficientBox(_) => PointwiseSpec::SufficientBox,
        Pointwise::Table {
            entries, default, ..
        } => PointwiseSpec::Table {
            entries: entries
                .iter()
                .map(|(pair, set)| PointwiseEntry {
                    point: pair.point.clone(),
                    label: pair.label.clone(),
                    explanation: set.texts(),
                })
                .collect(),
            default: default.as_ref().map(DecisionSet::texts),
        },
        Pointwise::Constant(set) => PointwiseSpec::Constant {
            explanation: set.texts(),
        },
    }
}

/// Grows a per-feature interval box around `x` while every grid point in the
/// box is classified `y`, and returns it as the single rule `box -> y`.
///
/// Features are visited in declaration order; for each, the lower bound is
/// pushed down one grid step at a time as far as it goes, then the upper
/// bound is pushed up. Bounds at the edge of the grid are omitted from the
/// itemset, so a box spanning the whole grid yields the empty itemset.
pub fn sufficient_box_explain(
    c: &Classifier,
    domain: &Domain,
    x: &Point,
    y: &Label,
) -> Result<DecisionSet, ExplainError> {
    let actual = c.classify(x);
    if actual != y {
        return Err(ExplainError::NotClassifierOutput {
            point: x.clone(),
            label: y.clone(),
            actual: actual.clone(),
        });
    }
    let features = domain.space().features();
    let start: Vec<usize> = features
        .iter()
        .zip(x.values())
        .map(|(f, &v)| f.position(v).expect("point on grid"))
        .collect();
    let mut lo = start.clone();
    let mut hi = start;

    for axis in 0..features.len() {
        while lo[axis] > 0 && slab_is_uniform(c, domain, &lo, &hi, axis, lo[axis] - 1, y) {
            lo[axis] -= 1;
        }
        while hi[axis] + 1 < features[axis].len()
            && slab_is_uniform(c, domain, &lo, &hi, axis, hi[axis] + 1, y)
        {
            hi[axis] += 1;
        }
    }

    let mut itemset = Vec::new();
    for (axis, feature) in features.iter().enumerate() {
        let last = feature.len() - 1;
        let (l, h) = (lo[axis], hi[axis]);
        let pred = |op, pos| Predicate::new(domain.space(), &feature.name, op, feature.value_at(pos));
        if l == h && last > 0 {
            itemset.push(pred(Op::Eq, l).expect("feature of the space"));
            continue;
        }
        if l > 0 {
            itemset.push(pred(Op::Ge, l).expect("feature of the space"));
        }
        if h < last {
            itemset.push(pred(Op::Le, h).expect("feature of the space"));
        }
    }
    Ok([Rule::new(itemset, y.clone())].into_iter().collect())
}

/// Whether every point of the box with `axis` pinned to `pos` is classified `y`.
fn slab_is_uniform(
    c: &Classifier,
    domain: &Domain,
    lo: &[usize],
    hi: &[usize],
    axis: usize,
    pos: usize,
    y: &Label,
) -> bool {
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    lo[axis] = pos;
    hi[axis] = pos;
    box_points(domain, &lo, &hi).all(|p| c.classify(&p) == y)
}

/// Grid points of the box `lo..=hi` (positions per axis), lexicographically.
pub(crate) fn box_points<'a>(
    domain: &'a Domain,
    lo: &[usize],
    hi: &[usize],
) -> impl Iterator<Item = Point> + 'a {
    let features = domain.space().features();
    let lo = lo.to_vec();
    let hi = hi.to_vec();
    let mut cursor = Some(lo.clone());
    std::iter::from_fn(move || {
        let current = cursor.take()?;
        let point = Point(
            features
                .iter()
                .zip(&current)
                .map(|(f, &p)| f.value_at(p))
                .collect(),
        );
        let mut next = current;
        let mut axis = next.len();
        while axis > 0 {
            axis -= 1;
            if next[axis] < hi[axis] {
                next[axis] += 1;
                cursor = Some(next);
                break;
            }
            next[axis] = lo[axis];
        }
        Some(point)
    })
}

/// Explainer section of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExplainerSpec {
    LiftedPointwise {
        pointwise: PointwiseSpec,
    },
    Scripted {
        script: Vec<ScriptEntry>,
    },
    HistoryAwareScripted {
        steps: Vec<StepEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fallback: Option<PointwiseSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointwiseSpec {
    SufficientBox,
    Table {
        entries: Vec<PointwiseEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Vec<String>>,
    },
    Constant {
        explanation: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseEntry {
    pub point: Point,
    pub label: Label,
    pub explanation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub history: Vec<(Point, Label)>,
    pub explanations: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEntry {
    pub history: Vec<(Point, Label)>,
    pub explanation: Vec<String>,
}

fn load_set(texts: &[String], domain: &Domain) -> Result<DecisionSet, ExplainerSpecError> {
    texts
        .iter()
        .map(|text| {
            crate::rule::parse_rule(text, domain.space(), domain.labels()).map_err(|source| {
                ExplainerSpecError::Rule {
                    text: text.clone(),
                    source,
                }
            })
        })
        .collect()
}

fn load_pair(point: &Point, label: &Label, domain: &Domain) -> Result<Pair, ExplainerSpecError> {
    domain.space().check_point(point)?;
    let label = domain.labels().resolve(label.as_str())?;
    Ok(Pair::new(point.clone(), label))
}

fn load_history(pairs: &[(Point, Label)], domain: &Domain) -> Result<History, ExplainerSpecError> {
    pairs
        .iter()
        .map(|(p, l)| load_pair(p, l, domain))
        .collect::<Result<Vec<_>, _>>()
        .map(History)
}

fn load_pointwise(
    spec: &PointwiseSpec,
    domain: &Arc<Domain>,
    classifier: &Arc<Classifier>,
) -> Result<Pointwise, ExplainerSpecError> {
    match spec {
        PointwiseSpec::SufficientBox => Ok(Pointwise::SufficientBox(SufficientBox::new(
            domain.clone(),
            classifier.clone(),
        ))),
        PointwiseSpec::Table { entries, default } => {
            let entries = entries
                .iter()
                .map(|e| Ok((load_pair(&e.point, &e.label, domain)?, load_set(&e.explanation, domain)?)))
                .collect::<Result<Vec<_>, ExplainerSpecError>>()?;
            let default = default.as_ref().map(|d| load_set(d, domain)).transpose()?;
            Pointwise::table(entries, default)
        }
        PointwiseSpec::Constant { explanation } => {
            Ok(Pointwise::Constant(load_set(explanation, domain)?))
        }
    }
}

/// Builds an explainer from its scenario description.
pub fn load_explainer(
    spec: &ExplainerSpec,
    domain: &Arc<Domain>,
    classifier: &Arc<Classifier>,
) -> Result<Explainer, ExplainerSpecError> {
    match spec {
        ExplainerSpec::LiftedPointwise { pointwise } => {
            Ok(Explainer::lift(load_pointwise(pointwise, domain, classifier)?))
        }
        ExplainerSpec::Scripted { script } => {
            let entries = script
                .iter()
                .map(|entry| {
                    let history = load_history(&entry.history, domain)?;
                    let explanations = entry
                        .explanations
                        .iter()
                        .map(|texts| load_set(texts, domain))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok((history, ExplanationSeq(explanations)))
                })
                .collect::<Result<Vec<_>, ExplainerSpecError>>()?;
            Ok(Explainer::Scripted(Script::new(entries)?))
        }
        ExplainerSpec::HistoryAwareScripted { steps, fallback } => {
            let steps = steps
                .iter()
                .map(|entry| {
                    Ok((
                        load_history(&entry.history, domain)?,
                        load_set(&entry.explanation, domain)?,
                    ))
                })
                .collect::<Result<Vec<_>, ExplainerSpecError>>()?;
            let fallback = fallback
                .as_ref()
                .map(|f| load_pointwise(f, domain, classifier))
                .transpose()?;
            Explainer::history_aware(steps, fallback)
        }
    }
}
