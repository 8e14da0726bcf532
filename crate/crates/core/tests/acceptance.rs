//! Acceptance criteria, one line each. Run with `--nocapture` to see the
//! table.

mod support;

use std::sync::Arc;
use std::time::{Duration, Instant};

use support::{e0, e1, l, oracle, p, pool6, sequences};
use xnmr_core::explainer::Script;
use xnmr_core::properties::{
    check_cautious_monotonicity, check_consistency, check_cut, check_interaction_stability,
    classifier_consistent_pairs, find_entailment_nonmonotonicity, histories_up_to, reverify, IoRelation,
};
use xnmr_core::session::SessionState;
use xnmr_core::{
    transcript_jsonl, Alert, EntailmentKind, EntailmentRelation, ExplanationSeq, Explainer, History, Pair, Point,
    Scenario, SearchBound, Status, Witness,
};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

/// Criteria that cannot be met as stated; the reason is in the decisions
/// ledger. They must still fail, so a change in behaviour is noticed.
const RECORDED_FAILURES: &[&str] = &["monotone baselines"];

fn run(name: &'static str, limit_secs: Option<u64>, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = body();
    let elapsed = start.elapsed();
    let limit = limit_secs.map(Duration::from_secs);
    let in_time = limit.is_none_or(|l| elapsed < l);
    Outcome {
        name,
        pass: pass && in_time,
        detail: if in_time {
            detail
        } else {
            format!("{detail}; over time limit")
        },
        elapsed,
        limit,
    }
}

fn bundled(name: &str) -> Arc<Scenario> {
    Arc::new(Scenario::bundled(name).unwrap().unwrap())
}

fn naive_inconsistency() -> (bool, String) {
    let mut s = SessionState::start(bundled("example2-naive"));
    s.query(&p(5, 0)).unwrap();
    let report = s.query(&p(20, 5)).unwrap().clone();
    let labels = s.commitments().labels_at(&p(20, 5));
    let alert = report.alerts.contains(&Alert::Inconsistency {
        point: p(20, 5),
        labels: vec![l("0"), l("1")],
    });
    (
        labels == vec![l("0"), l("1")] && alert,
        format!("(20,5) -> {labels:?}, inconsistency alert: {alert}"),
    )
}

fn mss_resolution() -> (bool, String) {
    let mut s = SessionState::start(bundled("example2-mss"));
    s.query(&p(5, 0)).unwrap();
    let report = s.query(&p(20, 5)).unwrap().clone();
    let labels = s.commitments().labels_at(&p(20, 5));
    let retraction = report.alerts.contains(&Alert::Retraction {
        point: p(20, 5),
        old_label: l("1"),
        new_labels: vec![l("0")],
    });
    let inconsistencies = report.inconsistencies().count();
    (
        labels == vec![l("0")] && retraction && inconsistencies == 0,
        format!("(20,5) -> {labels:?}, retraction: {retraction}, inconsistencies: {inconsistencies}"),
    )
}

fn nonmonotonicity_witness() -> (bool, String) {
    let d = support::square_domain(20);
    let rel = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
    let pool = vec![e0(&d), e1(&d)];
    let bound = SearchBound::exhaustive(2).with_points(vec![p(5, 0), p(20, 5)]);
    let v = find_entailment_nonmonotonicity(&rel, &pool, &bound);
    let expected = Witness::NonMonotonicity {
        sequence: vec![e0(&d)],
        extra: e1(&d),
        target: Pair::new(p(20, 5), l("1")),
    };
    (
        v.status == Status::Fails && v.witness.as_ref() == Some(&expected),
        serde_json::to_string(&v.witness).unwrap(),
    )
}

fn exp_reflexivity_failure() -> (bool, String) {
    let d = support::square_domain(20);
    let seq = ExplanationSeq(vec![e0(&d), e1(&d)]);
    let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone()).derive_exp(&seq, &e0(&d));
    let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, d.clone()).derive_exp(&seq, &e0(&d));
    (!mss && naive, format!("specific: {mss}, union: {naive}"))
}

fn cautious_monotonicity_violation() -> (bool, String) {
    let scenario = bundled("example3");
    let rel = scenario.relation();
    let points = vec![p(5, 0), p(20, 5), p(20, -10)];
    let universe = classifier_consistent_pairs(scenario.classifier(), &points);
    let cr = IoRelation::new(scenario.explainer(), &rel, universe);
    let v = check_cautious_monotonicity(&cr, &SearchBound::exhaustive(2)).unwrap();
    let Some(w @ Witness::CautiousMonotonicity { target, .. }) = &v.witness else {
        return (false, format!("no witness ({:?})", v.status));
    };
    let replayed = reverify(&cr, w).unwrap();
    (
        v.status == Status::Fails && target.point == p(20, -10) && replayed,
        format!("{}, replayed: {replayed}", serde_json::to_string(w).unwrap()),
    )
}

fn interaction_stability() -> (bool, String) {
    let scenario = bundled("sufficient-box");
    let subgrid: Vec<Point> = (9..=13).flat_map(|f| (2..=6).map(move |g| p(f, g))).collect();
    let universe = classifier_consistent_pairs(scenario.classifier(), &subgrid);
    let histories = histories_up_to(&universe, 3);
    let stable = check_interaction_stability(scenario.explainer(), &histories).unwrap();

    let d = scenario.domain();
    let h1 = History(vec![Pair::new(p(5, 0), l("1"))]);
    let h2 = History(vec![Pair::new(p(5, 0), l("1")), Pair::new(p(20, 5), l("0"))]);
    let rewritten = support::set(d, &["f > 5 -> 1"]);
    let mutating = Explainer::Scripted(
        Script::new(vec![
            (h1, ExplanationSeq(vec![e0(d)])),
            (h2.clone(), ExplanationSeq(vec![rewritten, e1(d)])),
        ])
        .unwrap(),
    );
    let unstable = check_interaction_stability(&mutating, &[h2]).unwrap();
    let index = match &unstable.witness {
        Some(Witness::InteractionStability { index, .. }) => Some(*index),
        _ => None,
    };
    (
        stable.status == Status::HoldsUpToBound && stable.violations == 0 && index == Some(0),
        format!(
            "sufficient box: {} histories, {} prefixes, {} violations; mutating script fails at index {index:?}",
            histories.len(),
            stable.examined,
            stable.violations
        ),
    )
}

fn mss_consistency_sweep() -> (bool, String) {
    let d = support::square_domain(20);
    let pool = pool6(&d);
    let bound = SearchBound::exhaustive(3);
    let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
    let naive = EntailmentRelation::new(EntailmentKind::NaiveUnion, d.clone());
    let specific = check_consistency(&mss, &pool, &bound);
    let union = check_consistency(&naive, &pool, &bound);
    let example_pair = naive.commitments_of(&[e0(&d), e1(&d)]).labels_at(&p(20, 5));
    (
        specific.violations == 0 && union.violations >= 1 && example_pair.len() == 2,
        format!(
            "{} sequences; specific: {} violations, union: {} violations, (E0,E1) at (20,5) under union: {example_pair:?}",
            specific.examined, specific.violations, union.violations
        ),
    )
}

fn oracle_equivalence() -> (bool, String) {
    let d = support::square_domain(20);
    let pool = pool6(&d);
    let points = d.grid().points().to_vec();
    let mss = EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d.clone());
    let mut tabulate = oracle::Specific::new(points.clone());
    let mut disagreements = 0usize;
    let mut checked = 0usize;
    for seq in sequences(pool.len(), 3) {
        let explanations: Vec<_> = seq.iter().map(|&i| pool[i].clone()).collect();
        let map = mss.commitments_of(&explanations);
        let table = tabulate.table(&explanations);
        for x in &points {
            checked += 1;
            let expected: Vec<_> = table[x].iter().cloned().collect();
            if map.labels_at(x) != expected {
                disagreements += 1;
            }
        }
    }
    (
        disagreements == 0,
        format!("{checked} (sequence, point) cases, {disagreements} disagreements"),
    )
}

fn monotone_baselines() -> (bool, String) {
    let scenario = bundled("pool6");
    assert_eq!(scenario.entailment(), EntailmentKind::NaiveUnion);
    let rel = scenario.relation();
    let universe = classifier_consistent_pairs(scenario.classifier(), scenario.queries());
    let cr = IoRelation::new(scenario.explainer(), &rel, universe);
    let bound = SearchBound::exhaustive(3);
    let cm = check_cautious_monotonicity(&cr, &bound).unwrap();
    let cut = check_cut(&cr, &bound).unwrap();
    let cut_witness = cut
        .witness
        .as_ref()
        .map(|w| {
            format!(
                " first cut witness {} (replayed: {})",
                serde_json::to_string(w).unwrap(),
                reverify(&cr, w).unwrap()
            )
        })
        .unwrap_or_default();
    (
        cm.violations == 0 && cut.violations == 0,
        format!(
            "cautious monotonicity: {} violations; cut: {} violations;{cut_witness}",
            cm.violations, cut.violations
        ),
    )
}

fn determinism() -> (bool, String) {
    let mut lines = 0;
    for name in Scenario::bundled_names() {
        let queries = bundled(name).queries().to_vec();
        let a = transcript_jsonl(&xnmr_core::replay(bundled(name), &queries).unwrap());
        let b = transcript_jsonl(&xnmr_core::replay(bundled(name), &queries).unwrap());
        if a != b || a.is_empty() {
            return (false, format!("{name} differs between replays"));
        }
        lines += a.lines().count();
    }
    (
        true,
        format!("{} scenarios, {lines} report lines identical", Scenario::bundled_names().len()),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        run("example-1/2 naive inconsistency", Some(1), naive_inconsistency),
        run("example-2 specificity resolution", Some(1), mss_resolution),
        run("non-monotonicity witness", Some(1), nonmonotonicity_witness),
        run("exp-level reflexivity failure", Some(1), exp_reflexivity_failure),
        run("cautious monotonicity violation", Some(10), cautious_monotonicity_violation),
        run("interaction stability", Some(30), interaction_stability),
        run("specific consistency sweep", Some(60), mss_consistency_sweep),
        run("oracle equivalence", Some(60), oracle_equivalence),
        run("monotone baselines", Some(60), monotone_baselines),
        run("determinism", None, determinism),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let recorded = RECORDED_FAILURES.contains(&o.name);
        let tag = match (o.pass, recorded) {
            (true, _) => "PASS",
            (false, true) => "FAIL (recorded)",
            (false, false) => "FAIL",
        };
        let limit = o.limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        println!(
            "{tag:<16} {:<36} {:>8.1?}{limit}  {}",
            o.name, o.elapsed, o.detail
        );
        if o.pass == recorded {
            unexpected.push(o.name);
        }
    }
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:?}");
}
