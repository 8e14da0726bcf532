//! Entailment from explanation sequences to input-output pairs.
//!
//! A sequence of explanations *commits* to label `y` at input `x` when it
//! entails `(x, y)`. Two relations are implemented:
//!
//! - **Naive union**: classify with the union of all rules of all
//!   explanations. Monotonic, and happy to commit to two labels at once.
//! - **Most sceptically specific** (MSS): inside one decision set only the
//!   applicable rules with minimal coverage count, and ties between labels
//!   commit to nothing. Across the sequence, an explanation whose covered
//!   inputs are a subset of what the sequence so far covers overrides it
//!   wherever it commits; otherwise conflicting commitments cancel and the
//!   rest is unioned.
//!
//! Both relations are evaluated by tabulating a [`CommitmentMap`] over the
//! whole grid.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, ExplanationSeq, History, Label, LabelMask, Pair, Point, PointSet};
use crate::explainer::{ExplainError, Explainer};
use crate::rule::DecisionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntailmentKind {
    NaiveUnion,
    MostScepticallySpecific,
}

impl EntailmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntailmentKind::NaiveUnion => "naive_union",
            EntailmentKind::MostScepticallySpecific => "most_sceptically_specific",
        }
    }
}

impl fmt::Display for EntailmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EntailmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive_union" => Ok(EntailmentKind::NaiveUnion),
            "most_sceptically_specific" | "mss" => Ok(EntailmentKind::MostScepticallySpecific),
            other => Err(format!(
                "unknown entailment `{other}` (expected naive_union or most_sceptically_specific)"
            )),
        }
    }
}

/// Labels committed to at every grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentMap {
    domain: Arc<Domain>,
    masks: Vec<LabelMask>,
}

impl CommitmentMap {
    pub fn empty(domain: Arc<Domain>) -> Self {
        let masks = vec![0; domain.grid().len()];
        CommitmentMap { domain, masks }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn masks(&self) -> &[LabelMask] {
        &self.masks
    }

    pub fn mask_at(&self, index: usize) -> LabelMask {
        self.masks[index]
    }

    /// Labels committed to at `x`, in label declaration order. Off-grid
    /// points have none.
    pub fn labels_at(&self, x: &Point) -> Vec<Label> {
        match self.domain.grid().index_of(x) {
            Some(i) => self.domain.labels().decode(self.masks[i]),
            None => Vec::new(),
        }
    }

    pub fn entails(&self, x: &Point, y: &Label) -> bool {
        match (self.domain.grid().index_of(x), self.domain.labels().bit(y)) {
            (Some(i), Some(bit)) => self.masks[i] & bit != 0,
            _ => false,
        }
    }

    pub fn entails_pair(&self, pair: &Pair) -> bool {
        self.entails(&pair.point, &pair.label)
    }

    /// Points with at least one committed label.
    pub fn cover(&self) -> PointSet {
        let mut set = self.domain.grid().empty_set();
        for (i, &m) in self.masks.iter().enumerate() {
            if m != 0 {
                set.insert(i);
            }
        }
        set
    }

    /// Grid indices committed to two or more labels.
    pub fn conflicts(&self) -> impl Iterator<Item = usize> + '_ {
        self.masks
            .iter()
            .enumerate()
            .filter(|(_, m)| m.count_ones() > 1)
            .map(|(i, _)| i)
    }

    pub fn is_consistent(&self) -> bool {
        self.conflicts().next().is_none()
    }

    /// Every entailment of `self` is one of `other`.
    pub fn is_subsumed_by(&self, other: &CommitmentMap) -> bool {
        self.masks
            .iter()
            .zip(&other.masks)
            .all(|(&a, &b)| a & !b == 0)
    }

    /// Every committed `(point, label)` pair, in grid then label order.
    pub fn pairs(&self) -> Vec<Pair> {
        let grid = self.domain.grid();
        let labels = self.domain.labels();
        let mut out = Vec::new();
        for (i, &m) in self.masks.iter().enumerate() {
            if m != 0 {
                for label in labels.decode(m) {
                    out.push(Pair::new(grid.point(i).clone(), label));
                }
            }
        }
        out
    }

    /// Non-empty points with their labels, in grid order.
    pub fn entries(&self) -> Vec<(Point, Vec<Label>)> {
        let grid = self.domain.grid();
        let labels = self.domain.labels();
        self.masks
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0)
            .map(|(i, &m)| (grid.point(i).clone(), labels.decode(m)))
            .collect()
    }
}

/// An entailment relation bound to a domain.
#[derive(Debug, Clone)]
pub struct EntailmentRelation {
    kind: EntailmentKind,
    domain: Arc<Domain>,
}

impl EntailmentRelation {
    pub fn new(kind: EntailmentKind, domain: Arc<Domain>) -> Self {
        EntailmentRelation { kind, domain }
    }

    pub fn kind(&self) -> EntailmentKind {
        self.kind
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// What a single explanation commits to on its own.
    pub fn singleton(&self, e: &DecisionSet) -> CommitmentMap {
        match self.kind {
            EntailmentKind::NaiveUnion => self.naive_singleton(e),
            EntailmentKind::MostScepticallySpecific => self.specific_singleton(e),
        }
    }

    /// Tabulates the relation for `seq` over the whole grid.
    pub fn commitments(&self, seq: &ExplanationSeq) -> CommitmentMap {
        self.commitments_of(seq.explanations())
    }

    pub fn commitments_of(&self, seq: &[DecisionSet]) -> CommitmentMap {
        let mut acc = CommitmentMap::empty(self.domain.clone());
        for e in seq {
            acc = self.extend(&acc, &self.singleton(e));
        }
        acc
    }

    /// Commitments of `seq + E` from those of `seq` and of `(E)`.
    pub fn extend(&self, seq: &CommitmentMap, next: &CommitmentMap) -> CommitmentMap {
        let masks = match self.kind {
            EntailmentKind::NaiveUnion => seq
                .masks
                .iter()
                .zip(&next.masks)
                .map(|(&a, &b)| a | b)
                .collect(),
            EntailmentKind::MostScepticallySpecific => {
                if next.cover().is_subset(&seq.cover()) {
                    // More specific: the new explanation wins where it commits.
                    seq.masks
                        .iter()
                        .zip(&next.masks)
                        .map(|(&old, &new)| if new != 0 { new } else { old })
                        .collect()
                } else {
                    seq.masks
                        .iter()
                        .zip(&next.masks)
                        .map(|(&old, &new)| {
                            if old != 0 && new != 0 && old != new {
                                0
                            } else {
                                old | new
                            }
                        })
                        .collect()
                }
            }
        };
        CommitmentMap {
            domain: self.domain.clone(),
            masks,
        }
    }

    fn naive_singleton(&self, e: &DecisionSet) -> CommitmentMap {
        let grid = self.domain.grid();
        let labels = self.domain.labels();
        let mut map = CommitmentMap::empty(self.domain.clone());
        for rule in e.rules() {
            let bit = labels.bit(rule.consequent()).expect("rule label in label set");
            for i in rule.coverage(grid).ones() {
                map.masks[i] |= bit;
            }
        }
        map
    }

    /// Only the applicable rules whose coverage is minimal under inclusion
    /// decide; disagreement among them commits to nothing.
    fn specific_singleton(&self, e: &DecisionSet) -> CommitmentMap {
        let grid = self.domain.grid();
        let labels = self.domain.labels();
        let rules: Vec<_> = e.rules().collect();
        let covers: Vec<PointSet> = rules.iter().map(|r| r.coverage(grid)).collect();
        let bits: Vec<LabelMask> = rules
            .iter()
            .map(|r| labels.bit(r.consequent()).expect("rule label in label set"))
            .collect();
        // strictly_inside[j] lists the rules whose coverage is a proper subset of rule j's.
        let strictly_inside: Vec<Vec<usize>> = (0..rules.len())
            .map(|j| {
                (0..rules.len())
                    .filter(|&k| k != j && covers[k].is_subset(&covers[j]) && covers[k] != covers[j])
                    .collect()
            })
            .collect();
        let mut map = CommitmentMap::empty(self.domain.clone());
        for i in 0..grid.len() {
            let mut mask = 0;
            for j in 0..rules.len() {
                if !covers[j].contains(i) {
                    continue;
                }
                if strictly_inside[j].iter().any(|&k| covers[k].contains(i)) {
                    continue;
                }
                mask |= bits[j];
            }
            if mask.count_ones() == 1 {
                map.masks[i] = mask;
            }
        }
        map
    }

    pub fn entails(&self, seq: &ExplanationSeq, x: &Point, y: &Label) -> bool {
        self.commitments(seq).entails(x, y)
    }

    /// Some label is entailed at `x`.
    pub fn covers_seq(&self, seq: &ExplanationSeq, x: &Point) -> bool {
        !self.commitments(seq).labels_at(x).is_empty()
    }

    /// Inputs covered by `a` are all covered by `b`.
    pub fn more_specific(&self, a: &ExplanationSeq, b: &ExplanationSeq) -> bool {
        self.commitments(a).cover().is_subset(&self.commitments(b).cover())
    }

    /// `seq` entails everything the single explanation `e` entails.
    pub fn derive_exp(&self, seq: &ExplanationSeq, e: &DecisionSet) -> bool {
        self.singleton(e).is_subsumed_by(&self.commitments(seq))
    }

    /// Input-output consequence: the explanations of `h` entail `(x, y)`.
    pub fn derive_io(
        &self,
        ex: &Explainer,
        h: &History,
        x: &Point,
        y: &Label,
    ) -> Result<bool, ExplainError> {
        Ok(self.entails(&ex.explain(h)?, x, y))
    }

    /// Pairs `h` entails through its explanations for which no member of
    /// `pool` both follows from those explanations and entails the pair on
    /// its own. A non-empty result exhibits that going through a single
    /// explanation loses consequences.
    pub fn commutation_gap(
        &self,
        ex: &Explainer,
        h: &History,
        pool: &[DecisionSet],
    ) -> Result<Vec<Pair>, ExplainError> {
        let seq = ex.explain(h)?;
        let combined = self.commitments(&seq);
        let witnesses: Vec<CommitmentMap> = pool
            .iter()
            .filter(|e| self.derive_exp(&seq, e))
            .map(|e| self.singleton(e))
            .collect();
        Ok(combined
            .pairs()
            .into_iter()
            .filter(|pair| !witnesses.iter().any(|w| w.entails_pair(pair)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Feature, FeatureSpace, LabelSet, DEFAULT_GRID_CAP};
    use crate::explainer::Script;

    fn domain() -> Arc<Domain> {
        let space = FeatureSpace::new(vec![
            Feature::new("f", -20, 20, 1),
            Feature::new("g", -20, 20, 1),
        ])
        .unwrap();
        let labels = LabelSet::new(vec![Label::new("0"), Label::new("1")]).unwrap();
        Domain::new(space, labels, DEFAULT_GRID_CAP).unwrap()
    }

    fn set(d: &Domain, texts: &[&str]) -> DecisionSet {
        DecisionSet::parse(texts, d.space(), d.labels()).unwrap()
    }

    fn seq(sets: &[&DecisionSet]) -> ExplanationSeq {
        ExplanationSeq(sets.iter().map(|s| (*s).clone()).collect())
    }

    fn p(f: i64, g: i64) -> Point {
        Point(vec![f, g])
    }

    fn l(y: &str) -> Label {
        Label::new(y)
    }

    struct Fixture {
        d: Arc<Domain>,
        e0: DecisionSet,
        e1: DecisionSet,
    }

    fn fixture() -> Fixture {
        let d = domain();
        let e0 = set(&d, &["f > 0 -> 1"]);
        let e1 = set(&d, &["f > 10 & g > 3 -> 0"]);
        Fixture { d, e0, e1 }
    }

    #[test]
    fn naive_union_commits_and_conflicts() {
        let Fixture { d, e0, e1 } = fixture();
        let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, d);
        assert!(naive.entails(&seq(&[&e0]), &p(20, 5), &l("1")));
        let both = seq(&[&e0, &e1]);
        assert!(naive.entails(&both, &p(20, 5), &l("0")));
        assert!(naive.entails(&both, &p(20, 5), &l("1")));
        let map = naive.commitments(&both);
        assert_eq!(map.labels_at(&p(20, 5)), vec![l("0"), l("1")]);
        assert!(!map.is_consistent());
    }

    #[test]
    fn specific_override_resolves_the_conflict() {
        let Fixture { d, e0, e1 } = fixture();
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d);
        let both = seq(&[&e0, &e1]);
        assert!(mss.entails(&both, &p(20, 5), &l("0")));
        assert!(!mss.entails(&both, &p(20, 5), &l("1")));
        let map = mss.commitments(&both);
        assert_eq!(map.labels_at(&p(20, 5)), vec![l("0")]);
        assert_eq!(map.labels_at(&p(5, 0)), vec![l("1")]);
        assert!(map.is_consistent());
    }

    #[test]
    fn empty_sequence_entails_nothing() {
        let Fixture { d, .. } = fixture();
        for kind in [EntailmentKind::NaiveUnion, EntailmentKind::MostScepticallySpecific] {
            let rel = EntailmentRelation::new(kind, d.clone());
            let empty = ExplanationSeq::new();
            assert!(!rel.entails(&empty, &p(0, 0), &l("0")));
            assert!(!rel.covers_seq(&empty, &p(5, 0)));
            assert!(rel.commitments(&empty).masks().iter().all(|&m| m == 0));
        }
    }

    #[test]
    fn cover_and_specificity() {
        let Fixture { d, e0, e1 } = fixture();
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
        assert!(mss.covers_seq(&seq(&[&e0]), &p(5, 0)));
        assert!(mss.more_specific(&seq(&[&e1]), &seq(&[&e0])));
        assert!(!mss.more_specific(&seq(&[&e0]), &seq(&[&e1])));
        assert!(mss.more_specific(&seq(&[&e0]), &seq(&[&e0])));
        let g = set(&d, &["g > 0 -> 1"]);
        assert!(!mss.more_specific(&seq(&[&e0]), &seq(&[&g])));
        // (5,-5) is covered by f > 0 but not by g > 0.
        assert!(mss.covers_seq(&seq(&[&e0]), &p(5, -5)));
        assert!(!mss.covers_seq(&seq(&[&g]), &p(5, -5)));
    }

    #[test]
    fn equally_specific_conflict_is_uncovered() {
        let Fixture { d, .. } = fixture();
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
        let a = set(&d, &["f > 0 -> 1"]);
        let b = set(&d, &["g > 0 -> 0"]);
        let ab = seq(&[&a, &b]);
        assert!(!mss.covers_seq(&ab, &p(5, 5)));
        assert!(mss.entails(&ab, &p(5, -5), &l("1")));
        assert!(mss.entails(&ab, &p(-5, 5), &l("0")));
        // Inside one decision set, incomparable conflicting rules cancel too.
        let inner = set(&d, &["f > 0 -> 1", "g > 0 -> 0"]);
        assert!(!mss.covers_seq(&seq(&[&inner]), &p(5, 5)));
        // ...but a nested rule wins inside its parent.
        let nested = set(&d, &["f > 0 -> 1", "f > 10 & g > 3 -> 0"]);
        assert_eq!(mss.commitments(&seq(&[&nested])).labels_at(&p(20, 5)), vec![l("0")]);
    }

    #[test]
    fn derive_exp_examples() {
        let Fixture { d, e0, e1 } = fixture();
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
        let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, d);
        let both = seq(&[&e0, &e1]);
        assert!(!mss.derive_exp(&both, &e0));
        assert!(mss.derive_exp(&both, &e1));
        assert!(naive.derive_exp(&both, &e0));
        assert!(mss.derive_exp(&both, &DecisionSet::new()));
        assert!(naive.derive_exp(&ExplanationSeq::new(), &DecisionSet::new()));
    }

    fn example_script(fx: &Fixture) -> Explainer {
        let pair = |f, g, y: &str| Pair::new(p(f, g), l(y));
        Explainer::Scripted(
            Script::new(vec![
                (History(vec![pair(5, 0, "1")]), seq(&[&fx.e0])),
                (
                    History(vec![pair(5, 0, "1"), pair(20, 5, "0")]),
                    seq(&[&fx.e0, &fx.e1]),
                ),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn derive_io_examples() {
        let fx = fixture();
        let ex = example_script(&fx);
        let h = History(vec![Pair::new(p(5, 0), l("1"))]);
        let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, fx.d.clone());
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, fx.d.clone());
        assert!(naive.derive_io(&ex, &h, &p(20, 5), &l("1")).unwrap());
        for rel in [&naive, &mss] {
            assert!(rel.derive_io(&ex, &h, &p(5, 0), &l("1")).unwrap());
        }
        let unscripted = History(vec![Pair::new(p(0, 0), l("1"))]);
        assert!(matches!(
            mss.derive_io(&ex, &unscripted, &p(0, 0), &l("1")),
            Err(ExplainError::ScriptMiss { .. })
        ));
    }

    #[test]
    fn single_explanations_do_not_always_suffice() {
        let fx = fixture();
        let ex = example_script(&fx);
        let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, fx.d.clone());
        let h = History(vec![
            Pair::new(p(5, 0), l("1")),
            Pair::new(p(20, 5), l("0")),
        ]);
        assert!(mss.derive_io(&ex, &h, &p(5, 0), &l("1")).unwrap());
        let gap = mss
            .commutation_gap(&ex, &h, &[fx.e0.clone(), fx.e1.clone()])
            .unwrap();
        assert!(gap.contains(&Pair::new(p(5, 0), l("1"))));
        assert!(!gap.contains(&Pair::new(p(20, 5), l("0"))));
        // Under the union reading E0 itself follows, so nothing is lost.
        let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, fx.d.clone());
        assert!(naive
            .commutation_gap(&ex, &h, &[fx.e0.clone(), fx.e1.clone()])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("naive_union".parse(), Ok(EntailmentKind::NaiveUnion));
        assert_eq!(
            "most_sceptically_specific".parse(),
            Ok(EntailmentKind::MostScepticallySpecific)
        );
        assert!("whatever".parse::<EntailmentKind>().is_err());
    }
}
