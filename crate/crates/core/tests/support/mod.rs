#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use xnmr_core::{DecisionSet, Domain, Feature, FeatureSpace, Label, LabelSet, Point, DEFAULT_GRID_CAP};

pub fn p(f: i64, g: i64) -> Point {
    Point(vec![f, g])
}

pub fn l(y: &str) -> Label {
    Label::new(y)
}

pub fn square_domain(radius: i64) -> Arc<Domain> {
    let space = FeatureSpace::new(vec![
        Feature::new("f", -radius, radius, 1),
        Feature::new("g", -radius, radius, 1),
    ])
    .unwrap();
    let labels = LabelSet::new(vec![l("0"), l("1")]).unwrap();
    Domain::new(space, labels, DEFAULT_GRID_CAP).unwrap()
}

pub fn set(domain: &Domain, rules: &[&str]) -> DecisionSet {
    let texts: Vec<String> = rules.iter().map(|s| s.to_string()).collect();
    DecisionSet::parse(&texts, domain.space(), domain.labels()).unwrap()
}

pub fn e0(domain: &Domain) -> DecisionSet {
    set(domain, &["f > 0 -> 1"])
}

pub fn e1(domain: &Domain) -> DecisionSet {
    set(domain, &["f > 10 & g > 3 -> 0"])
}

/// The six-explanation pool: the two example explanations and four fixtures.
pub fn pool6(domain: &Domain) -> Vec<DecisionSet> {
    vec![
        e0(domain),
        e1(domain),
        set(domain, &["g > 0 -> 0"]),
        set(domain, &["f < 0 -> 0", "g < -5 -> 1"]),
        set(domain, &["f > 10 & g <= 0 -> 1", "f > 10 & g > 0 -> 0"]),
        set(domain, &["f > 5 -> 1", "f > 5 & g == 0 -> 0"]),
    ]
}

/// All sequences of length `1..=max_len` over `0..n`, shortest first.
pub fn sequences(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for i in 0..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
