//! Scenario files: a complete, self-contained experimental configuration
//! (grid, labels, classifier, explainer, entailment relation) plus an
//! optional query script and property-check requests.
//!
//! Loading validates every cross-reference and canonicalizes rule texts, so
//! `load(serialize(load(f)))` equals `load(f)`.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{load_classifier, Classifier, ClassifierError, ClassifierSpec};
use crate::domain::{Domain, DomainError, Feature, FeatureSpace, Label, LabelSet, Pair, Point, DEFAULT_GRID_CAP};
use crate::entailment::{EntailmentKind, EntailmentRelation};
use crate::explainer::{load_explainer, Explainer, ExplainerKind, ExplainerSpec, ExplainerSpecError};
use crate::properties::{
    check_consistency, check_cautious_monotonicity, check_cut, check_interaction_stability,
    check_io_consistency, check_reflexivity, check_respects_specificity, find_entailment_nonmonotonicity,
    find_nonmonotonicity_witness, histories_up_to, io_universe, reverify, reverify_entailment,
    reverify_explainer, CheckError, ExpRelation, IoRelation, Property, Sampling, SearchBound, Status, Verdict,
};
use crate::rule::{parse_rule, DecisionSet, ParseError};

const BUNDLED: &[(&str, &str)] = &[
    ("example1", include_str!("../scenarios/example1.json")),
    ("example2-naive", include_str!("../scenarios/example2-naive.json")),
    ("example2-mss", include_str!("../scenarios/example2-mss.json")),
    ("example3", include_str!("../scenarios/example3.json")),
    ("pool6", include_str!("../scenarios/pool6.json")),
    ("sufficient-box", include_str!("../scenarios/sufficient-box.json")),
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Explainer(#[from] ExplainerSpecError),
    #[error("pool rule `{text}`: {source}")]
    PoolRule { text: String, source: ParseError },
    #[error("property {property} cannot be checked at level {level}")]
    UnsupportedLevel { property: Property, level: Level },
    #[error("bound must be at least 1")]
    ZeroBound,
    #[error("no universe points: give `points`, or a scenario `universe` or `queries`")]
    EmptyUniverse,
    #[error(transparent)]
    Check(#[from] CheckError),
}

impl ScenarioError {
    /// Whether the failure lies in the scenario content rather than in
    /// locating or reading it.
    pub fn is_validation(&self) -> bool {
        !matches!(self, ScenarioError::NotFound(_) | ScenarioError::Io { .. })
    }
}

/// Which consequence relation a check runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Entailment from explanation sequences to input-output pairs.
    Entail,
    /// Input-output pairs derived through the explainer.
    Io,
    /// Explanations derived from explanation sequences.
    Exp,
    /// The explainer itself.
    Explainer,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Entail => "entail",
            Level::Io => "io",
            Level::Exp => "exp",
            Level::Explainer => "explainer",
        }
    }

    pub fn default_for(property: Property) -> Level {
        match property {
            Property::Consistency | Property::NonMonotonicity | Property::RespectsSpecificity => Level::Entail,
            Property::Reflexivity | Property::CautiousMonotonicity | Property::Cut => Level::Io,
            Property::InteractionStability => Level::Explainer,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Level::Entail, Level::Io, Level::Exp, Level::Explainer]
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown level `{s}` (expected entail, io, exp or explainer)"))
    }
}

fn default_bound() -> usize {
    2
}

/// A property check to run against a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub property: Property,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    /// Longest premise sequence.
    #[serde(default = "default_bound")]
    pub bound: usize,
    /// Universe points for input-output checks, target points for
    /// entailment checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unrestricted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Status the scenario author expects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Status>,
}

impl CheckRequest {
    pub fn new(property: Property, bound: usize) -> Self {
        CheckRequest {
            property,
            level: None,
            bound,
            points: None,
            unrestricted: false,
            samples: None,
            seed: None,
            expect: None,
        }
    }

    pub fn level(&self) -> Level {
        self.level.unwrap_or_else(|| Level::default_for(self.property))
    }
}

/// On-disk scenario schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub features: Vec<Feature>,
    pub labels: Vec<Label>,
    pub classifier: ClassifierSpec,
    pub explainer: ExplainerSpec,
    pub entailment: EntailmentKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<Point>,
    /// Default points for input-output universes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<Vec<Point>>,
    /// Explanations entailment-level checks draw from; defaults to every
    /// explanation the explainer mentions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckRequest>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    name: String,
    description: Option<String>,
    domain: Arc<Domain>,
    classifier: Arc<Classifier>,
    explainer: Arc<Explainer>,
    entailment: EntailmentKind,
    queries: Vec<Point>,
    universe: Option<Vec<Point>>,
    pool: Vec<DecisionSet>,
    explicit_pool: bool,
    checks: Vec<CheckRequest>,
}

/// Scenario metadata for listings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub features: Vec<Feature>,
    pub labels: Vec<Label>,
    pub explainer: &'static str,
    pub entailment: EntailmentKind,
    pub queries: Vec<Point>,
    pub checks: Vec<CheckRequest>,
}

/// Any of the verdict shapes a check can produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum AnyVerdict {
    Pairs(Verdict<Pair>),
    Entailment(Verdict<DecisionSet, Pair>),
    Explanations(Verdict<DecisionSet>),
}

impl AnyVerdict {
    pub fn status(&self) -> Status {
        match self {
            AnyVerdict::Pairs(v) => v.status,
            AnyVerdict::Entailment(v) => v.status,
            AnyVerdict::Explanations(v) => v.status,
        }
    }

    pub fn property(&self) -> Property {
        match self {
            AnyVerdict::Pairs(v) => v.property,
            AnyVerdict::Entailment(v) => v.property,
            AnyVerdict::Explanations(v) => v.property,
        }
    }

    pub fn examined(&self) -> u64 {
        match self {
            AnyVerdict::Pairs(v) => v.examined,
            AnyVerdict::Entailment(v) => v.examined,
            AnyVerdict::Explanations(v) => v.examined,
        }
    }

    pub fn violations(&self) -> u64 {
        match self {
            AnyVerdict::Pairs(v) => v.violations,
            AnyVerdict::Entailment(v) => v.violations,
            AnyVerdict::Explanations(v) => v.violations,
        }
    }
}

/// A verdict together with what it was checked against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub entailment: EntailmentKind,
    pub level: Level,
    #[serde(flatten)]
    pub verdict: AnyVerdict,
    /// Outcome of replaying the witness, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Status>,
}

impl CheckReport {
    pub fn status(&self) -> Status {
        self.verdict.status()
    }

    pub fn holds(&self) -> bool {
        self.status() == Status::HoldsUpToBound
    }

    /// False only when an expectation was given and not met.
    pub fn as_expected(&self) -> bool {
        self.expected.is_none_or(|e| e == self.status())
    }
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let space = FeatureSpace::new(file.features)?;
        let labels = LabelSet::new(file.labels)?;
        let domain = Domain::new(space, labels, DEFAULT_GRID_CAP)?;
        let classifier = Arc::new(load_classifier(&file.classifier, &domain)?);
        let explainer = Arc::new(load_explainer(&file.explainer, &domain, &classifier)?);
        for p in file.queries.iter().chain(file.universe.iter().flatten()) {
            domain.space().check_point(p)?;
        }
        for check in &file.checks {
            for p in check.points.iter().flatten() {
                domain.space().check_point(p)?;
            }
        }
        let explicit_pool = file.pool.is_some();
        let pool = match &file.pool {
            Some(sets) => sets
                .iter()
                .map(|texts| {
                    texts
                        .iter()
                        .map(|text| {
                            parse_rule(text, domain.space(), domain.labels()).map_err(|source| {
                                ScenarioError::PoolRule {
                                    text: text.clone(),
                                    source,
                                }
                            })
                        })
                        .collect::<Result<DecisionSet, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => explainer.mentioned_explanations(),
        };
        Ok(Scenario {
            name: file.name,
            description: file.description,
            domain,
            classifier,
            explainer,
            entailment: file.entailment,
            queries: file.queries,
            universe: file.universe,
            pool,
            explicit_pool,
            checks: file.checks,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Scenario::from_file(serde_json::from_str(text)?)
    }

    pub fn load_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| match source.kind() {
            io::ErrorKind::NotFound => ScenarioError::NotFound(path.to_path_buf()),
            _ => ScenarioError::Io {
                path: path.to_path_buf(),
                source,
            },
        })?;
        Scenario::from_json(&text)
    }

    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(name, _)| *name).collect()
    }

    /// A scenario shipped with the library, if `name` is one.
    pub fn bundled(name: &str) -> Option<Result<Self, ScenarioError>> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::from_json(text))
    }

    /// A bundled scenario by name, otherwise a scenario file by path.
    pub fn resolve(name_or_path: &str) -> Result<Self, ScenarioError> {
        match Scenario::bundled(name_or_path) {
            Some(result) => result,
            None => Scenario::load_path(Path::new(name_or_path)),
        }
    }

    /// The same scenario under a different entailment relation.
    pub fn with_entailment(&self, kind: EntailmentKind) -> Self {
        Scenario {
            entailment: kind,
            ..self.clone()
        }
    }

    /// Canonical file form.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            description: self.description.clone(),
            features: self.domain.space().features().to_vec(),
            labels: self.domain.labels().labels().to_vec(),
            classifier: self.classifier.to_spec(&self.domain),
            explainer: self.explainer.to_spec(),
            entailment: self.entailment,
            queries: self.queries.clone(),
            universe: self.universe.clone(),
            pool: self
                .explicit_pool
                .then(|| self.pool.iter().map(DecisionSet::texts).collect()),
            checks: self.checks.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario files serialize")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn classifier(&self) -> &Arc<Classifier> {
        &self.classifier
    }

    pub fn explainer(&self) -> &Arc<Explainer> {
        &self.explainer
    }

    pub fn entailment(&self) -> EntailmentKind {
        self.entailment
    }

    pub fn relation(&self) -> EntailmentRelation {
        EntailmentRelation::new(self.entailment, self.domain.clone())
    }

    pub fn queries(&self) -> &[Point] {
        &self.queries
    }

    pub fn pool(&self) -> &[DecisionSet] {
        &self.pool
    }

    pub fn checks(&self) -> &[CheckRequest] {
        &self.checks
    }

    pub fn info(&self) -> ScenarioInfo {
        ScenarioInfo {
            name: self.name.clone(),
            description: self.description.clone(),
            features: self.domain.space().features().to_vec(),
            labels: self.domain.labels().labels().to_vec(),
            explainer: match self.explainer.kind() {
                ExplainerKind::LiftedPointwise => "lifted_pointwise",
                ExplainerKind::Scripted => "scripted",
                ExplainerKind::HistoryAwareScripted => "history_aware_scripted",
            },
            entailment: self.entailment,
            queries: self.queries.clone(),
            checks: self.checks.clone(),
        }
    }

    /// Points an input-output universe is built from.
    fn universe_points(&self, req: &CheckRequest) -> Result<Vec<Point>, ScenarioError> {
        let points = req
            .points
            .clone()
            .or_else(|| self.universe.clone())
            .unwrap_or_else(|| self.queries.clone());
        if points.is_empty() {
            return Err(ScenarioError::EmptyUniverse);
        }
        Ok(points)
    }

    /// Runs one check request.
    pub fn run_check(&self, req: &CheckRequest) -> Result<CheckReport, ScenarioError> {
        if req.bound == 0 {
            return Err(ScenarioError::ZeroBound);
        }
        for p in req.points.iter().flatten() {
            self.domain.space().check_point(p)?;
        }
        let level = req.level();
        let unsupported = ScenarioError::UnsupportedLevel {
            property: req.property,
            level,
        };
        let bound = SearchBound {
            max_len: req.bound,
            points: req.points.clone(),
            unrestricted: req.unrestricted,
            sample: req.samples.map(|count| Sampling {
                count,
                seed: req.seed.unwrap_or(0),
            }),
        };
        let rel = self.relation();
        let explainer = self.explainer.as_ref();

        let (verdict, reverified) = match level {
            Level::Entail => {
                let v = match req.property {
                    Property::Consistency => check_consistency(&rel, &self.pool, &bound),
                    Property::RespectsSpecificity => check_respects_specificity(&rel, &self.pool, &bound),
                    Property::NonMonotonicity => find_entailment_nonmonotonicity(&rel, &self.pool, &bound),
                    _ => return Err(unsupported),
                };
                let replay = v.witness.as_ref().map(|w| reverify_entailment(&rel, w));
                (AnyVerdict::Entailment(v), replay)
            }
            Level::Io => {
                let points = self.universe_points(req)?;
                let universe = io_universe(&self.classifier, &self.domain, &points, req.unrestricted);
                if req.property == Property::Consistency {
                    let targets = SearchBound {
                        points: None,
                        ..bound.clone()
                    };
                    let v = check_io_consistency(explainer, &rel, &universe, &targets)?;
                    let replay = match &v.witness {
                        Some(w) => Some(reverify_explainer(explainer, &rel, w)?),
                        None => None,
                    };
                    (AnyVerdict::Pairs(v), replay)
                } else {
                    let cr = IoRelation::new(explainer, &rel, universe);
                    let v = match req.property {
                        Property::Reflexivity => check_reflexivity(&cr, &bound)?,
                        Property::CautiousMonotonicity => check_cautious_monotonicity(&cr, &bound)?,
                        Property::Cut => check_cut(&cr, &bound)?,
                        Property::NonMonotonicity => find_nonmonotonicity_witness(&cr, &bound)?,
                        _ => return Err(unsupported),
                    };
                    let replay = match &v.witness {
                        Some(w) => Some(reverify(&cr, w)?),
                        None => None,
                    };
                    (AnyVerdict::Pairs(v), replay)
                }
            }
            Level::Exp => {
                let cr = ExpRelation::new(&rel, self.pool.clone());
                let v = match req.property {
                    Property::Reflexivity => check_reflexivity(&cr, &bound)?,
                    Property::CautiousMonotonicity => check_cautious_monotonicity(&cr, &bound)?,
                    Property::Cut => check_cut(&cr, &bound)?,
                    Property::NonMonotonicity => find_nonmonotonicity_witness(&cr, &bound)?,
                    _ => return Err(unsupported),
                };
                let replay = match &v.witness {
                    Some(w) => Some(reverify(&cr, w)?),
                    None => None,
                };
                (AnyVerdict::Explanations(v), replay)
            }
            Level::Explainer => {
                if req.property != Property::InteractionStability {
                    return Err(unsupported);
                }
                let scripted = explainer.scripted_histories();
                let histories = if req.points.is_none() && !scripted.is_empty() {
                    scripted
                } else {
                    let points = self.universe_points(req)?;
                    let universe = io_universe(&self.classifier, &self.domain, &points, req.unrestricted);
                    histories_up_to(&universe, req.bound)
                };
                let v = check_interaction_stability(explainer, &histories)?;
                let replay = match &v.witness {
                    Some(w) => Some(reverify_explainer(explainer, &rel, w)?),
                    None => None,
                };
                (AnyVerdict::Pairs(v), replay)
            }
        };
        Ok(CheckReport {
            scenario: self.name.clone(),
            entailment: self.entailment,
            level,
            verdict,
            reverified,
            expected: req.expect,
        })
    }

    /// Runs every check the scenario file requests.
    pub fn run_checks(&self) -> Result<Vec<CheckReport>, ScenarioError> {
        self.checks.iter().map(|c| self.run_check(c)).collect()
    }
}
