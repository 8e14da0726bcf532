//! Bounded checkers for properties of consequence relations.
//!
//! A consequence relation here goes from finite sequences over a universe
//! `S` to single elements of `S`. The checkers enumerate every premise
//! sequence of length `1..=max_len` (or a seeded random sample of them),
//! look for a violating instance, and report the first one found in
//! enumeration order together with how many instances were examined and how
//! many violated the property.
//!
//! A verdict never claims more than it checked: success is reported as
//! [`Status::HoldsUpToBound`]. For [`Property::NonMonotonicity`] the search
//! is for a witness, so [`Status::Fails`] means a witness *was found*, i.e.
//! the relation is non-monotonic.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Classifier;
use crate::domain::{Domain, History, Label, Pair, Point};
use crate::entailment::{CommitmentMap, EntailmentRelation};
use crate::explainer::{ExplainError, Explainer};
use crate::rule::DecisionSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("witness element is not in the universe")]
    ForeignElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Consistency,
    Reflexivity,
    CautiousMonotonicity,
    Cut,
    NonMonotonicity,
    RespectsSpecificity,
    InteractionStability,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Consistency,
        Property::Reflexivity,
        Property::CautiousMonotonicity,
        Property::Cut,
        Property::NonMonotonicity,
        Property::RespectsSpecificity,
        Property::InteractionStability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Consistency => "consistency",
            Property::Reflexivity => "reflexivity",
            Property::CautiousMonotonicity => "cautious_monotonicity",
            Property::Cut => "cut",
            Property::NonMonotonicity => "non_monotonicity",
            Property::RespectsSpecificity => "respects_specificity",
            Property::InteractionStability => "interaction_stability",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Property::ALL.iter().map(|p| p.as_str()).collect();
                format!("unknown property `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    HoldsUpToBound,
    Fails,
}

/// Random sampling of premise sequences instead of exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

/// How far a check searches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBound {
    /// Longest premise sequence examined.
    pub max_len: usize,
    /// Points the universe (or the entailment targets) is drawn from;
    /// `None` means a check-specific default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    /// Input-output universes pair every point with every label instead of
    /// only the classifier's output.
    #[serde(default)]
    pub unrestricted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<Sampling>,
}

impl SearchBound {
    pub fn exhaustive(max_len: usize) -> Self {
        SearchBound {
            max_len,
            points: None,
            unrestricted: false,
            sample: None,
        }
    }

    pub fn with_points(mut self, points: Vec<Point>) -> Self {
        self.points = Some(points);
        self
    }

    pub fn unrestricted(mut self) -> Self {
        self.unrestricted = true;
        self
    }

    pub fn sampled(mut self, count: usize, seed: u64) -> Self {
        self.sample = Some(Sampling { count, seed });
        self
    }
}

/// A concrete violating instance. Element types: `E` for members of the
/// premise sequence, `T` for the conclusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness<E, T = E> {
    /// The sequence commits to several labels at `point`.
    Inconsistency {
        sequence: Vec<E>,
        point: Point,
        labels: Vec<Label>,
    },
    /// `sequence` does not yield its own element at `index`.
    Reflexivity { sequence: Vec<E>, index: usize },
    /// `sequence` yields `extra` and `target`, `sequence + extra` loses `target`.
    CautiousMonotonicity { sequence: Vec<E>, extra: E, target: T },
    /// `sequence` yields `extra`, `sequence + extra` yields `target`, `sequence` does not.
    Cut { sequence: Vec<E>, extra: E, target: T },
    /// `sequence` yields `target`, `sequence + extra` does not.
    NonMonotonicity { sequence: Vec<E>, extra: E, target: T },
    /// `extra` is more specific than `sequence` and entails `target`, but
    /// `sequence + extra` does not.
    Specificity { sequence: Vec<E>, extra: E, target: T },
    /// Explaining the first `prefix_len` pairs alone gives a different
    /// explanation at `index` than explaining the whole history.
    InteractionStability {
        history: Vec<E>,
        prefix_len: usize,
        index: usize,
    },
}

/// Outcome of a bounded check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict<E, T = E> {
    pub property: Property,
    pub status: Status,
    pub bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness<E, T>>,
    /// Candidate instances examined.
    pub examined: u64,
    /// Examined instances that violated the property.
    pub violations: u64,
}

impl<E, T> Verdict<E, T> {
    pub fn holds(&self) -> bool {
        self.status == Status::HoldsUpToBound
    }
}

struct Tally<E, T> {
    property: Property,
    bound: usize,
    witness: Option<Witness<E, T>>,
    examined: u64,
    violations: u64,
}

impl<E, T> Tally<E, T> {
    fn new(property: Property, bound: usize) -> Self {
        Tally {
            property,
            bound,
            witness: None,
            examined: 0,
            violations: 0,
        }
    }

    fn violation(&mut self, witness: impl FnOnce() -> Witness<E, T>) {
        self.violations += 1;
        if self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> Verdict<E, T> {
        Verdict {
            property: self.property,
            status: if self.witness.is_some() {
                Status::Fails
            } else {
                Status::HoldsUpToBound
            },
            bound: self.bound,
            witness: self.witness,
            examined: self.examined,
            violations: self.violations,
        }
    }
}

/// Premise sequences (as universe indices) a bound selects.
pub fn premise_sequences(universe_len: usize, bound: &SearchBound) -> Vec<Vec<usize>> {
    if universe_len == 0 || bound.max_len == 0 {
        return Vec::new();
    }
    match bound.sample {
        Some(Sampling { count, seed }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let len = rng.random_range(1..=bound.max_len);
                    (0..len).map(|_| rng.random_range(0..universe_len)).collect()
                })
                .collect()
        }
        None => {
            let mut out = Vec::new();
            for len in 1..=bound.max_len {
                let mut current = vec![0usize; len];
                loop {
                    out.push(current.clone());
                    let mut i = len;
                    loop {
                        if i == 0 {
                            break;
                        }
                        i -= 1;
                        current[i] += 1;
                        if current[i] < universe_len {
                            break;
                        }
                        current[i] = 0;
                    }
                    if current.iter().all(|&c| c == 0) {
                        break;
                    }
                }
            }
            out
        }
    }
}

/// A relation from sequences over a finite universe to its elements.
pub trait ConsequenceRelation {
    type Elem: Clone + PartialEq;

    fn universe(&self) -> &[Self::Elem];

    /// For the premises (universe indices), whether each universe element follows.
    fn consequences(&self, premises: &[usize]) -> Result<Vec<bool>, CheckError>;

    fn judge(&self, premises: &[usize], conclusion: usize) -> Result<bool, CheckError> {
        Ok(self.consequences(premises)?[conclusion])
    }

    /// Judges on elements rather than indices.
    fn judge_elems(&self, premises: &[Self::Elem], conclusion: &Self::Elem) -> Result<bool, CheckError> {
        let index = |e: &Self::Elem| {
            self.universe()
                .iter()
                .position(|u| u == e)
                .ok_or(CheckError::ForeignElement)
        };
        let premises = premises.iter().map(index).collect::<Result<Vec<_>, _>>()?;
        self.judge(&premises, index(conclusion)?)
    }
}

/// Caches consequence vectors per premise sequence during one check.
struct Memo<'a, R: ConsequenceRelation + ?Sized> {
    relation: &'a R,
    cache: HashMap<Vec<usize>, Vec<bool>>,
}

impl<'a, R: ConsequenceRelation + ?Sized> Memo<'a, R> {
    fn new(relation: &'a R) -> Self {
        Memo {
            relation,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, premises: &[usize]) -> Result<&[bool], CheckError> {
        if !self.cache.contains_key(premises) {
            let value = self.relation.consequences(premises)?;
            self.cache.insert(premises.to_vec(), value);
        }
        Ok(&self.cache[premises])
    }
}

fn elems<E: Clone>(universe: &[E], indices: &[usize]) -> Vec<E> {
    indices.iter().map(|&i| universe[i].clone()).collect()
}

/// Every sequence yields each of its own elements.
pub fn check_reflexivity<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    bound: &SearchBound,
) -> Result<Verdict<R::Elem>, CheckError> {
    let universe = cr.universe();
    let mut tally = Tally::new(Property::Reflexivity, bound.max_len);
    let mut memo = Memo::new(cr);
    for seq in premise_sequences(universe.len(), bound) {
        let cons = memo.get(&seq)?.to_vec();
        for (index, &element) in seq.iter().enumerate() {
            tally.examined += 1;
            if !cons[element] {
                tally.violation(|| Witness::Reflexivity {
                    sequence: elems(universe, &seq),
                    index,
                });
            }
        }
    }
    Ok(tally.finish())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Extension {
    CautiousMonotonicity,
    Cut,
    NonMonotonicity,
}

/// Shared loop over `(sequence, extra, target)` instances.
fn check_extension<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    bound: &SearchBound,
    which: Extension,
) -> Result<Verdict<R::Elem>, CheckError> {
    let universe = cr.universe();
    let n = universe.len();
    let property = match which {
        Extension::CautiousMonotonicity => Property::CautiousMonotonicity,
        Extension::Cut => Property::Cut,
        Extension::NonMonotonicity => Property::NonMonotonicity,
    };
    let mut tally = Tally::new(property, bound.max_len);
    let mut memo = Memo::new(cr);
    for seq in premise_sequences(n, bound) {
        let cons = memo.get(&seq)?.to_vec();
        let mut extended = seq.clone();
        extended.push(0);
        for extra in 0..n {
            tally.examined += n as u64;
            let relevant = match which {
                Extension::CautiousMonotonicity | Extension::Cut => cons[extra],
                Extension::NonMonotonicity => cons.iter().any(|&c| c),
            };
            if !relevant {
                continue;
            }
            *extended.last_mut().unwrap() = extra;
            let ext = memo.get(&extended)?.to_vec();
            for target in 0..n {
                let violated = match which {
                    Extension::CautiousMonotonicity => cons[target] && !ext[target],
                    Extension::Cut => ext[target] && !cons[target],
                    Extension::NonMonotonicity => cons[target] && !ext[target],
                };
                if violated {
                    let witness = || {
                        let sequence = elems(universe, &seq);
                        let extra = universe[extra].clone();
                        let target = universe[target].clone();
                        match which {
                            Extension::CautiousMonotonicity => Witness::CautiousMonotonicity {
                                sequence,
                                extra,
                                target,
                            },
                            Extension::Cut => Witness::Cut {
                                sequence,
                                extra,
                                target,
                            },
                            Extension::NonMonotonicity => Witness::NonMonotonicity {
                                sequence,
                                extra,
                                target,
                            },
                        }
                    };
                    tally.violation(witness);
                }
            }
        }
    }
    Ok(tally.finish())
}

/// If `seq` yields `extra` and `target`, so does `seq + extra`.
pub fn check_cautious_monotonicity<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    bound: &SearchBound,
) -> Result<Verdict<R::Elem>, CheckError> {
    check_extension(cr, bound, Extension::CautiousMonotonicity)
}

/// If `seq` yields `extra` and `seq + extra` yields `target`, so does `seq`.
pub fn check_cut<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    bound: &SearchBound,
) -> Result<Verdict<R::Elem>, CheckError> {
    check_extension(cr, bound, Extension::Cut)
}

/// Searches for `seq`, `extra`, `target` with `seq` yielding `target` and
/// `seq + extra` not. `Fails` means such a witness exists.
pub fn find_nonmonotonicity_witness<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    bound: &SearchBound,
) -> Result<Verdict<R::Elem>, CheckError> {
    check_extension(cr, bound, Extension::NonMonotonicity)
}

/// Replays the judge on a stored witness. Returns `true` when the premises
/// hold and the conclusion fails exactly as the witness claims.
pub fn reverify<R: ConsequenceRelation + ?Sized>(
    cr: &R,
    witness: &Witness<R::Elem>,
) -> Result<bool, CheckError> {
    let extended = |sequence: &[R::Elem], extra: &R::Elem| {
        let mut v = sequence.to_vec();
        v.push(extra.clone());
        v
    };
    Ok(match witness {
        Witness::Reflexivity { sequence, index } => match sequence.get(*index) {
            Some(e) => !cr.judge_elems(sequence, e)?,
            None => false,
        },
        Witness::CautiousMonotonicity {
            sequence,
            extra,
            target,
        } => {
            cr.judge_elems(sequence, extra)?
                && cr.judge_elems(sequence, target)?
                && !cr.judge_elems(&extended(sequence, extra), target)?
        }
        Witness::Cut {
            sequence,
            extra,
            target,
        } => {
            cr.judge_elems(sequence, extra)?
                && cr.judge_elems(&extended(sequence, extra), target)?
                && !cr.judge_elems(sequence, target)?
        }
        Witness::NonMonotonicity {
            sequence,
            extra,
            target,
        } => cr.judge_elems(sequence, target)? && !cr.judge_elems(&extended(sequence, extra), target)?,
        _ => false,
    })
}

/// A relation given by a plain judging function.
pub struct FnRelation<S, F> {
    universe: Vec<S>,
    judge: F,
}

impl<S, F> FnRelation<S, F>
where
    S: Clone + PartialEq,
    F: Fn(&[S], &S) -> bool,
{
    pub fn new(universe: Vec<S>, judge: F) -> Self {
        FnRelation { universe, judge }
    }
}

impl<S, F> ConsequenceRelation for FnRelation<S, F>
where
    S: Clone + PartialEq,
    F: Fn(&[S], &S) -> bool,
{
    type Elem = S;

    fn universe(&self) -> &[S] {
        &self.universe
    }

    fn consequences(&self, premises: &[usize]) -> Result<Vec<bool>, CheckError> {
        let seq = elems(&self.universe, premises);
        Ok(self.universe.iter().map(|s| (self.judge)(&seq, s)).collect())
    }
}

/// The input-output relation: a history yields `(x, y)` when its
/// explanations entail it.
pub struct IoRelation<'a> {
    explainer: &'a Explainer,
    relation: &'a EntailmentRelation,
    universe: Vec<Pair>,
}

impl<'a> IoRelation<'a> {
    pub fn new(explainer: &'a Explainer, relation: &'a EntailmentRelation, universe: Vec<Pair>) -> Self {
        IoRelation {
            explainer,
            relation,
            universe,
        }
    }

    fn map(&self, premises: &[usize]) -> Result<CommitmentMap, CheckError> {
        let history = History(elems(&self.universe, premises));
        let seq = self.explainer.explain(&history)?;
        Ok(self.relation.commitments(&seq))
    }
}

impl ConsequenceRelation for IoRelation<'_> {
    type Elem = Pair;

    fn universe(&self) -> &[Pair] {
        &self.universe
    }

    fn consequences(&self, premises: &[usize]) -> Result<Vec<bool>, CheckError> {
        let map = self.map(premises)?;
        Ok(self.universe.iter().map(|p| map.entails_pair(p)).collect())
    }
}

/// The explanation-level relation: a sequence yields `E` when it entails
/// everything `E` entails on its own.
pub struct ExpRelation<'a> {
    relation: &'a EntailmentRelation,
    pool: Vec<DecisionSet>,
    singletons: Vec<CommitmentMap>,
}

impl<'a> ExpRelation<'a> {
    pub fn new(relation: &'a EntailmentRelation, pool: Vec<DecisionSet>) -> Self {
        let singletons = pool.iter().map(|e| relation.singleton(e)).collect();
        ExpRelation {
            relation,
            pool,
            singletons,
        }
    }
}

impl ConsequenceRelation for ExpRelation<'_> {
    type Elem = DecisionSet;

    fn universe(&self) -> &[DecisionSet] {
        &self.pool
    }

    fn consequences(&self, premises: &[usize]) -> Result<Vec<bool>, CheckError> {
        let seq = elems(&self.pool, premises);
        let map = self.relation.commitments_of(&seq);
        Ok(self.singletons.iter().map(|s| s.is_subsumed_by(&map)).collect())
    }
}

/// Pairs `(x, C(x))` for the given points.
pub fn classifier_consistent_pairs(c: &Classifier, points: &[Point]) -> Vec<Pair> {
    points
        .iter()
        .map(|p| Pair::new(p.clone(), c.classify(p).clone()))
        .collect()
}

/// Every point paired with every label.
pub fn all_label_pairs(domain: &Domain, points: &[Point]) -> Vec<Pair> {
    points
        .iter()
        .flat_map(|p| {
            domain
                .labels()
                .labels()
                .iter()
                .map(move |l| Pair::new(p.clone(), l.clone()))
        })
        .collect()
}

/// Input-output universe over `points`, classifier-consistent unless
/// `unrestricted`.
pub fn io_universe(c: &Classifier, domain: &Domain, points: &[Point], unrestricted: bool) -> Vec<Pair> {
    if unrestricted {
        all_label_pairs(domain, points)
    } else {
        classifier_consistent_pairs(c, points)
    }
}

/// All histories of length `1..=max_len` over `universe`, shortest first.
pub fn histories_up_to(universe: &[Pair], max_len: usize) -> Vec<History> {
    premise_sequences(universe.len(), &SearchBound::exhaustive(max_len))
        .into_iter()
        .map(|seq| History(elems(universe, &seq)))
        .collect()
}

/// Grid indices the entailment-level checks inspect.
fn target_indices(domain: &Domain, bound: &SearchBound) -> Vec<usize> {
    match &bound.points {
        Some(points) => points
            .iter()
            .filter_map(|p| domain.grid().index_of(p))
            .collect(),
        None => (0..domain.grid().len()).collect(),
    }
}

/// No examined sequence from `pool` commits to two labels at one target
/// point. One instance per sequence.
pub fn check_consistency(
    rel: &EntailmentRelation,
    pool: &[DecisionSet],
    bound: &SearchBound,
) -> Verdict<DecisionSet, Pair> {
    let domain = rel.domain();
    let targets = target_indices(domain, bound);
    let mut tally = Tally::new(Property::Consistency, bound.max_len);
    for seq in premise_sequences(pool.len(), bound) {
        tally.examined += 1;
        let sequence = elems(pool, &seq);
        let map = rel.commitments_of(&sequence);
        if let Some(&i) = targets.iter().find(|&&i| map.mask_at(i).count_ones() > 1) {
            tally.violation(|| Witness::Inconsistency {
                sequence,
                point: domain.grid().point(i).clone(),
                labels: domain.labels().decode(map.mask_at(i)),
            });
        }
    }
    tally.finish()
}

/// Consistency of the input-output relation: no history over `universe`
/// yields two labels at one target point. One instance per history.
pub fn check_io_consistency(
    explainer: &Explainer,
    rel: &EntailmentRelation,
    universe: &[Pair],
    bound: &SearchBound,
) -> Result<Verdict<Pair>, CheckError> {
    let domain = rel.domain();
    let targets = target_indices(domain, bound);
    let mut tally = Tally::new(Property::Consistency, bound.max_len);
    for seq in premise_sequences(universe.len(), bound) {
        tally.examined += 1;
        let history = History(elems(universe, &seq));
        let map = rel.commitments(&explainer.explain(&history)?);
        if let Some(&i) = targets.iter().find(|&&i| map.mask_at(i).count_ones() > 1) {
            tally.violation(|| Witness::Inconsistency {
                sequence: history.0.clone(),
                point: domain.grid().point(i).clone(),
                labels: domain.labels().decode(map.mask_at(i)),
            });
        }
    }
    Ok(tally.finish())
}

/// Consistent, and whenever `E` is more specific than `seq`, `seq + E`
/// keeps everything `E` entails. Instances are `(seq, E)`.
pub fn check_respects_specificity(
    rel: &EntailmentRelation,
    pool: &[DecisionSet],
    bound: &SearchBound,
) -> Verdict<DecisionSet, Pair> {
    let domain = rel.domain();
    let targets = target_indices(domain, bound);
    let singletons: Vec<CommitmentMap> = pool.iter().map(|e| rel.singleton(e)).collect();
    let mut tally = Tally::new(Property::RespectsSpecificity, bound.max_len);
    for seq in premise_sequences(pool.len(), bound) {
        let sequence = elems(pool, &seq);
        let map = rel.commitments_of(&sequence);
        if let Some(&i) = targets.iter().find(|&&i| map.mask_at(i).count_ones() > 1) {
            tally.examined += 1;
            tally.violation(|| Witness::Inconsistency {
                sequence: sequence.clone(),
                point: domain.grid().point(i).clone(),
                labels: domain.labels().decode(map.mask_at(i)),
            });
            continue;
        }
        let cover = map.cover();
        for (e, single) in pool.iter().zip(&singletons) {
            tally.examined += 1;
            if !single.cover().is_subset(&cover) {
                continue;
            }
            let ext = rel.extend(&map, single);
            let lost = targets
                .iter()
                .find(|&&i| single.mask_at(i) & !ext.mask_at(i) != 0);
            if let Some(&i) = lost {
                let missing = single.mask_at(i) & !ext.mask_at(i);
                tally.violation(|| Witness::Specificity {
                    sequence: sequence.clone(),
                    extra: e.clone(),
                    target: Pair::new(
                        domain.grid().point(i).clone(),
                        domain.labels().decode(missing)[0].clone(),
                    ),
                });
            }
        }
    }
    tally.finish()
}

/// Non-monotonicity of entailment itself: `seq` entails `(x, y)` and
/// `seq + E` does not. Instances are `(seq, E, x, y)` over target points
/// and all labels; `Fails` means a witness was found.
pub fn find_entailment_nonmonotonicity(
    rel: &EntailmentRelation,
    pool: &[DecisionSet],
    bound: &SearchBound,
) -> Verdict<DecisionSet, Pair> {
    let domain = rel.domain();
    let labels = domain.labels();
    let targets = target_indices(domain, bound);
    let singletons: Vec<CommitmentMap> = pool.iter().map(|e| rel.singleton(e)).collect();
    let mut tally = Tally::new(Property::NonMonotonicity, bound.max_len);
    for seq in premise_sequences(pool.len(), bound) {
        let sequence = elems(pool, &seq);
        let map = rel.commitments_of(&sequence);
        for (e, single) in pool.iter().zip(&singletons) {
            let ext = rel.extend(&map, single);
            for &i in &targets {
                tally.examined += labels.len() as u64;
                let lost = map.mask_at(i) & !ext.mask_at(i);
                for label in labels.decode(lost) {
                    tally.violation(|| Witness::NonMonotonicity {
                        sequence: sequence.clone(),
                        extra: e.clone(),
                        target: Pair::new(domain.grid().point(i).clone(), label),
                    });
                }
            }
        }
    }
    tally.finish()
}

/// Explaining a prefix of a history gives the same explanations as the
/// corresponding prefix of the whole history's explanations. One instance
/// per `(history, prefix length)`.
pub fn check_interaction_stability(
    explainer: &Explainer,
    histories: &[History],
) -> Result<Verdict<Pair>, CheckError> {
    let bound = histories.iter().map(History::len).max().unwrap_or(0);
    let mut tally = Tally::new(Property::InteractionStability, bound);
    for history in histories {
        let full = explainer.explain(history)?;
        for prefix_len in 1..history.len() {
            tally.examined += 1;
            let partial = explainer.explain(&history.prefix(prefix_len))?;
            let changed = (0..prefix_len).find(|&i| partial.0.get(i) != full.0.get(i));
            if let Some(index) = changed {
                tally.violation(|| Witness::InteractionStability {
                    history: history.0.clone(),
                    prefix_len,
                    index,
                });
            }
        }
    }
    Ok(tally.finish())
}

/// Replays an entailment-level witness. Returns `true` when it still
/// exhibits the violation it claims.
pub fn reverify_entailment(rel: &EntailmentRelation, witness: &Witness<DecisionSet, Pair>) -> bool {
    let extended = |sequence: &[DecisionSet], extra: &DecisionSet| {
        let mut v = sequence.to_vec();
        v.push(extra.clone());
        rel.commitments_of(&v)
    };
    match witness {
        Witness::Inconsistency {
            sequence,
            point,
            labels,
        } => labels.len() > 1 && rel.commitments_of(sequence).labels_at(point) == *labels,
        Witness::NonMonotonicity {
            sequence,
            extra,
            target,
        } => rel.commitments_of(sequence).entails_pair(target) && !extended(sequence, extra).entails_pair(target),
        Witness::Specificity {
            sequence,
            extra,
            target,
        } => {
            let single = rel.singleton(extra);
            single.cover().is_subset(&rel.commitments_of(sequence).cover())
                && single.entails_pair(target)
                && !extended(sequence, extra).entails_pair(target)
        }
        _ => false,
    }
}

/// Replays an input-output inconsistency or an interaction-stability witness.
pub fn reverify_explainer(
    explainer: &Explainer,
    rel: &EntailmentRelation,
    witness: &Witness<Pair>,
) -> Result<bool, CheckError> {
    Ok(match witness {
        Witness::Inconsistency {
            sequence,
            point,
            labels,
        } => {
            let map = rel.commitments(&explainer.explain(&History(sequence.clone()))?);
            labels.len() > 1 && map.labels_at(point) == *labels
        }
        Witness::InteractionStability {
            history,
            prefix_len,
            index,
        } => {
            let history = History(history.clone());
            let full = explainer.explain(&history)?;
            let partial = explainer.explain(&history.prefix(*prefix_len))?;
            index < prefix_len && partial.0.get(*index) != full.0.get(*index)
        }
        _ => false,
    })
}
