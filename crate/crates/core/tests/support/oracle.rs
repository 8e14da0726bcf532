//! Direct tabulation of both entailment relations, point by point, with
//! plain sets. Shares only rule matching with the library.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use xnmr_core::{DecisionSet, Label, Point, Rule};

pub type Table = BTreeMap<Point, BTreeSet<Label>>;

fn covered(rule: &Rule, points: &[Point]) -> BTreeSet<Point> {
    points.iter().filter(|p| rule.covers(p)).cloned().collect()
}

/// Union of the labels of every rule covering each point.
pub fn naive(seq: &[DecisionSet], points: &[Point]) -> Table {
    points
        .iter()
        .map(|x| {
            let labels = seq
                .iter()
                .flat_map(|e| e.rules())
                .filter(|r| r.covers(x))
                .map(|r| r.consequent().clone())
                .collect();
            (x.clone(), labels)
        })
        .collect()
}

/// One decision set alone: among rules covering `x`, those with no covering
/// rule of strictly smaller extension decide, and only unanimously.
pub fn specific_singleton(e: &DecisionSet, points: &[Point]) -> Table {
    let rules: Vec<(&Rule, BTreeSet<Point>)> = e.rules().map(|r| (r, covered(r, points))).collect();
    let inside: Vec<Vec<usize>> = rules
        .iter()
        .map(|(_, c)| {
            (0..rules.len())
                .filter(|&k| rules[k].1.is_subset(c) && rules[k].1.len() < c.len())
                .collect()
        })
        .collect();
    points
        .iter()
        .map(|x| {
            let deciding: BTreeSet<Label> = (0..rules.len())
                .filter(|&j| rules[j].1.contains(x))
                .filter(|&j| !inside[j].iter().any(|&k| rules[k].1.contains(x)))
                .map(|j| rules[j].0.consequent().clone())
                .collect();
            let labels = if deciding.len() == 1 { deciding } else { BTreeSet::new() };
            (x.clone(), labels)
        })
        .collect()
}

fn domain_of(t: &Table) -> BTreeSet<Point> {
    t.iter()
        .filter(|(_, ls)| !ls.is_empty())
        .map(|(p, _)| p.clone())
        .collect()
}

/// Most sceptically specific entailment by recursion on the sequence: the
/// last explanation overrides where it speaks if its committed region lies
/// inside the prefix's; otherwise disagreements are dropped and the rest is
/// merged. Singleton tables are memoized per decision set.
pub struct Specific {
    points: Vec<Point>,
    singles: HashMap<DecisionSet, Table>,
}

impl Specific {
    pub fn new(points: Vec<Point>) -> Self {
        Specific {
            points,
            singles: HashMap::new(),
        }
    }

    pub fn table(&mut self, seq: &[DecisionSet]) -> Table {
        let Some((last, prefix)) = seq.split_last() else {
            return self.points.iter().map(|p| (p.clone(), BTreeSet::new())).collect();
        };
        let before = self.table(prefix);
        if !self.singles.contains_key(last) {
            let t = specific_singleton(last, &self.points);
            self.singles.insert(last.clone(), t);
        }
        let now = &self.singles[last];
        let narrower = domain_of(now).is_subset(&domain_of(&before));
        self.points
            .iter()
            .map(|x| {
                let a = &before[x];
                let b = &now[x];
                let labels = if narrower {
                    if b.is_empty() {
                        a.clone()
                    } else {
                        b.clone()
                    }
                } else if !a.is_empty() && !b.is_empty() && a != b {
                    BTreeSet::new()
                } else {
                    a.union(b).cloned().collect()
                };
                (x.clone(), labels)
            })
            .collect()
    }
}
