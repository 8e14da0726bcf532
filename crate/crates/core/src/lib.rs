//! Interactive explanations of a black-box classifier, treated as a
//! non-monotonic reasoning system.
//!
//! A user queries a classifier point by point; an explainer answers each
//! query with a set of decision rules; an entailment relation turns the
//! accumulated explanations into commitments about the whole grid. The
//! [`properties`] module checks the resulting consequence relations against
//! bounded versions of the classical non-monotonic reasoning postulates.

pub mod classifier;
pub mod domain;
pub mod entailment;
pub mod explainer;
pub mod properties;
pub mod rule;
pub mod scenario;
pub mod session;

pub use classifier::{load_classifier, Classifier, ClassifierError, ClassifierSpec};
pub use domain::{
    Domain, DomainError, ExplanationSeq, Feature, FeatureSpace, History, Label, LabelMask, LabelSet,
    Pair, Point, PointSet, DEFAULT_GRID_CAP,
};
pub use entailment::{CommitmentMap, EntailmentKind, EntailmentRelation};
pub use explainer::{
    load_explainer, ExplainError, Explainer, ExplainerKind, ExplainerSpec, ExplainerSpecError, Pointwise,
    PointwiseSpec,
};
pub use properties::{
    CheckError, ConsequenceRelation, Property, SearchBound, Status, Verdict, Witness,
};
pub use scenario::{AnyVerdict, CheckReport, CheckRequest, Level, Scenario, ScenarioError, ScenarioFile};
pub use session::{replay, transcript_jsonl, Alert, Delta, SessionError, SessionState, StepReport};
pub use rule::{parse_rule, DecisionSet, Op, ParseError, Predicate, Rule};
