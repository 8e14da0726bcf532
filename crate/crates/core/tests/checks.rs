mod support;

use std::sync::Arc;

use support::{e0, e1, l, p, square_domain};
use xnmr_core::explainer::Pointwise;
use xnmr_core::properties::{
    check_consistency, check_cut, check_reflexivity, check_respects_specificity, classifier_consistent_pairs,
    find_entailment_nonmonotonicity, find_nonmonotonicity_witness, io_universe, reverify, reverify_entailment,
    ExpRelation, IoRelation,
};
use xnmr_core::{
    CheckRequest, DecisionSet, EntailmentKind, EntailmentRelation, Explainer, Pair, Point, Property, Scenario,
    SearchBound, Status, Witness,
};

fn bundled(name: &str) -> Arc<Scenario> {
    Arc::new(Scenario::bundled(name).unwrap().unwrap())
}

fn relations() -> (EntailmentRelation, EntailmentRelation) {
    let d = square_domain(20);
    (
        EntailmentRelation::new(EntailmentKind::NaiveUnion, d.clone()),
        EntailmentRelation::new(EntailmentKind::MostScepticallySpecific, d),
    )
}

#[test]
fn union_of_the_example_pair_is_inconsistent_at_x1() {
    let (naive, _) = relations();
    let d = naive.domain().clone();
    let bound = SearchBound::exhaustive(3).with_points(vec![p(5, 0), p(20, 5)]);
    let v = check_consistency(&naive, &[e0(&d), e1(&d)], &bound);
    assert_eq!(
        v.witness,
        Some(Witness::Inconsistency {
            sequence: vec![e0(&d), e1(&d)],
            point: p(20, 5),
            labels: vec![l("0"), l("1")],
        })
    );
    assert!(reverify_entailment(&naive, v.witness.as_ref().unwrap()));
    // Sequences of length <= 3 over two elements: 14, of which only the
    // two constant ones of each length are consistent.
    assert_eq!(v.examined, 2 + 4 + 8);
    assert_eq!(v.violations, 14 - 2 * 3);
}

#[test]
fn specificity_keeps_the_example_pool_consistent() {
    let (_, mss) = relations();
    let d = mss.domain().clone();
    let v = check_consistency(&mss, &[e0(&d), e1(&d)], &SearchBound::exhaustive(3));
    assert_eq!(v.status, Status::HoldsUpToBound);
    let v = check_respects_specificity(&mss, &[e0(&d), e1(&d)], &SearchBound::exhaustive(3));
    assert_eq!(v.status, Status::HoldsUpToBound);
}

#[test]
fn empty_explanation_pool_is_trivially_fine() {
    for rel in [relations().0, relations().1] {
        let pool = vec![DecisionSet::new()];
        let bound = SearchBound::exhaustive(3);
        assert!(check_consistency(&rel, &pool, &bound).holds());
        assert!(find_entailment_nonmonotonicity(&rel, &pool, &bound).holds());
    }
}

#[test]
fn entailment_nonmonotonicity_over_the_whole_grid() {
    let (naive, mss) = relations();
    let d = mss.domain().clone();
    let pool = [e0(&d), e1(&d)];
    let v = find_entailment_nonmonotonicity(&mss, &pool, &SearchBound::exhaustive(2));
    // First lost pair in grid order: the corner of the f > 10 & g > 3 box.
    assert_eq!(
        v.witness,
        Some(Witness::NonMonotonicity {
            sequence: vec![e0(&d)],
            extra: e1(&d),
            target: Pair::new(p(11, 4), l("1")),
        })
    );
    assert!(find_entailment_nonmonotonicity(&naive, &pool, &SearchBound::exhaustive(2)).holds());
}

#[test]
fn sufficient_box_io_relation_is_reflexive() {
    let scenario = bundled("sufficient-box");
    assert_eq!(scenario.entailment(), EntailmentKind::NaiveUnion);
    let subgrid: Vec<Point> = (9..=13).flat_map(|f| (2..=6).map(move |g| p(f, g))).collect();
    let universe = classifier_consistent_pairs(scenario.classifier(), &subgrid);
    let rel = scenario.relation();
    let cr = IoRelation::new(scenario.explainer(), &rel, universe);
    let v = check_reflexivity(&cr, &SearchBound::exhaustive(2)).unwrap();
    assert_eq!(v.status, Status::HoldsUpToBound);
    assert_eq!(v.examined, 25 + 2 * 625);
}

#[test]
fn specific_exp_relation_is_not_reflexive() {
    let (naive, mss) = relations();
    let d = mss.domain().clone();
    let cr = ExpRelation::new(&mss, vec![e0(&d), e1(&d)]);
    let v = check_reflexivity(&cr, &SearchBound::exhaustive(2)).unwrap();
    assert_eq!(
        v.witness,
        Some(Witness::Reflexivity {
            sequence: vec![e0(&d), e1(&d)],
            index: 0
        })
    );
    assert!(reverify(&cr, v.witness.as_ref().unwrap()).unwrap());
    let union = ExpRelation::new(&naive, vec![e0(&d), e1(&d)]);
    assert!(check_reflexivity(&union, &SearchBound::exhaustive(3)).unwrap().holds());
}

#[test]
fn example3_cut_fails_in_both_universes() {
    let scenario = bundled("example3");
    let rel = scenario.relation();
    let points = vec![p(5, 0), p(20, 5), p(20, -10)];
    let u = |f, g, y| Pair::new(p(f, g), l(y));

    // Re-appending the broad explanation after the narrower one restores
    // its verdict at (20,-10).
    let restricted = io_universe(scenario.classifier(), scenario.domain(), &points, false);
    let cr = IoRelation::new(scenario.explainer(), &rel, restricted);
    let v = check_cut(&cr, &SearchBound::exhaustive(2)).unwrap();
    assert_eq!(
        v.witness,
        Some(Witness::Cut {
            sequence: vec![u(5, 0, "0"), u(20, 5, "0")],
            extra: u(5, 0, "0"),
            target: u(20, -10, "0"),
        })
    );
    assert!(reverify(&cr, v.witness.as_ref().unwrap()).unwrap());

    let unrestricted = io_universe(scenario.classifier(), scenario.domain(), &points, true);
    let cr = IoRelation::new(scenario.explainer(), &rel, unrestricted);
    let v = check_cut(&cr, &SearchBound::exhaustive(2)).unwrap();
    assert_eq!(
        v.witness,
        Some(Witness::Cut {
            sequence: vec![u(5, 0, "0")],
            extra: u(20, 5, "0"),
            target: u(20, -10, "1"),
        })
    );
}

#[test]
fn union_with_point_exact_explanations_satisfies_cut() {
    let scenario = bundled("pool6");
    let d = scenario.domain().clone();
    let universe = classifier_consistent_pairs(scenario.classifier(), scenario.queries());
    let entries = universe
        .iter()
        .map(|pair| {
            let rule = format!(
                "f == {} & g == {} -> {}",
                pair.point.0[0], pair.point.0[1], pair.label
            );
            (pair.clone(), support::set(&d, &[rule.as_str()]))
        })
        .collect();
    let explainer = Explainer::lift(Pointwise::table(entries, None).unwrap());
    let rel = EntailmentRelation::new(EntailmentKind::NaiveUnion, d);
    let cr = IoRelation::new(&explainer, &rel, universe);
    let bound = SearchBound::exhaustive(3);
    assert!(check_cut(&cr, &bound).unwrap().holds());
    assert!(find_nonmonotonicity_witness(&cr, &bound).unwrap().holds());
}

#[test]
fn sampled_checks_are_reproducible() {
    let scenario = bundled("pool6");
    let mut req = CheckRequest::new(Property::Cut, 3);
    req.samples = Some(40);
    req.seed = Some(11);
    let a = scenario.run_check(&req).unwrap();
    let b = scenario.run_check(&req).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.verdict.examined(), 40 * 36);
}

#[test]
fn dispatch_rejects_mismatched_levels() {
    let scenario = bundled("example1");
    let mut req = CheckRequest::new(Property::RespectsSpecificity, 2);
    req.level = Some(xnmr_core::Level::Io);
    assert!(scenario.run_check(&req).is_err());
    assert!(scenario.run_check(&CheckRequest::new(Property::Cut, 0)).is_err());
}
