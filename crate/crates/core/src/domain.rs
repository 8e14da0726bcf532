//! Domain vocabulary: feature spaces, grid points, labels, histories and
//! explanation sequences.
//!
//! Inputs live on a finite integer grid so that every definition quantified
//! over all inputs can be decided by enumeration.

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule::DecisionSet;

/// Default upper bound on the number of grid points a feature space may span.
pub const DEFAULT_GRID_CAP: u64 = 1_000_000;

/// Label sets are stored as bitmasks, one bit per declared label.
pub const MAX_LABELS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("feature space must declare at least one feature")]
    NoFeatures,
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("feature `{name}`: min {min} exceeds max {max}")]
    EmptyRange { name: String, min: i64, max: i64 },
    #[error("feature `{name}`: step must be positive, got {step}")]
    NonPositiveStep { name: String, step: i64 },
    #[error("feature `{name}`: step {step} does not divide the range {min}..={max}")]
    StepMismatch {
        name: String,
        min: i64,
        max: i64,
        step: i64,
    },
    #[error("grid has {cardinality} points, above the cap of {cap}")]
    GridTooLarge { cardinality: u128, cap: u64 },
    #[error("label set needs at least two labels, got {0}")]
    TooFewLabels(usize),
    #[error("label set holds at most {MAX_LABELS} labels, got {0}")]
    TooManyLabels(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("point {point} has {got} coordinates, expected {expected}")]
    Arity {
        point: Point,
        got: usize,
        expected: usize,
    },
    #[error("point {point} is off the grid at feature `{feature}`")]
    OffGrid { point: Point, feature: String },
}

/// One grid axis: `min, min + step, ..., max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub min: i64,
    pub max: i64,
    pub step: i64,
}

impl Feature {
    pub fn new(name: impl Into<String>, min: i64, max: i64, step: i64) -> Self {
        Feature {
            name: name.into(),
            min,
            max,
            step,
        }
    }

    /// Number of grid values along this axis. Validated axes are never empty.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1) as usize
    }

    /// Position of `value` on this axis, if it is a grid value.
    pub fn position(&self, value: i64) -> Option<usize> {
        if value < self.min || value > self.max || (value - self.min) % self.step != 0 {
            return None;
        }
        Some(((value - self.min) / self.step) as usize)
    }

    pub fn value_at(&self, position: usize) -> i64 {
        self.min + position as i64 * self.step
    }

    fn validate(&self) -> Result<(), DomainError> {
        if self.step <= 0 {
            return Err(DomainError::NonPositiveStep {
                name: self.name.clone(),
                step: self.step,
            });
        }
        if self.min > self.max {
            return Err(DomainError::EmptyRange {
                name: self.name.clone(),
                min: self.min,
                max: self.max,
            });
        }
        if (self.max - self.min) % self.step != 0 {
            return Err(DomainError::StepMismatch {
                name: self.name.clone(),
                min: self.min,
                max: self.max,
                step: self.step,
            });
        }
        Ok(())
    }
}

/// An ordered list of integer features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct FeatureSpace {
    features: Vec<Feature>,
}

impl FeatureSpace {
    pub fn new(features: Vec<Feature>) -> Result<Self, DomainError> {
        if features.is_empty() {
            return Err(DomainError::NoFeatures);
        }
        for (i, feature) in features.iter().enumerate() {
            feature.validate()?;
            if features[..i].iter().any(|f| f.name == feature.name) {
                return Err(DomainError::DuplicateFeature(feature.name.clone()));
            }
        }
        Ok(FeatureSpace { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Product of the axis lengths. Saturates instead of overflowing.
    pub fn cardinality(&self) -> u128 {
        self.features
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
    }

    /// Validates `values` as a grid point of this space.
    pub fn point(&self, values: Vec<i64>) -> Result<Point, DomainError> {
        let point = Point(values);
        self.check_point(&point)?;
        Ok(point)
    }

    pub fn check_point(&self, point: &Point) -> Result<(), DomainError> {
        if point.0.len() != self.features.len() {
            return Err(DomainError::Arity {
                point: point.clone(),
                got: point.0.len(),
                expected: self.features.len(),
            });
        }
        for (feature, &value) in self.features.iter().zip(&point.0) {
            if feature.position(value).is_none() {
                return Err(DomainError::OffGrid {
                    point: point.clone(),
                    feature: feature.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, point: &Point) -> bool {
        self.check_point(point).is_ok()
    }

    /// Every grid point exactly once, in lexicographic feature order
    /// (the first feature varies slowest).
    pub fn grid_points(&self, cap: u64) -> Result<Vec<Point>, DomainError> {
        let cardinality = self.cardinality();
        if cardinality > cap as u128 {
            return Err(DomainError::GridTooLarge { cardinality, cap });
        }
        let mut points = Vec::with_capacity(cardinality as usize);
        let mut odometer = vec![0usize; self.features.len()];
        loop {
            points.push(Point(
                self.features
                    .iter()
                    .zip(&odometer)
                    .map(|(f, &p)| f.value_at(p))
                    .collect(),
            ));
            let mut axis = self.features.len();
            loop {
                if axis == 0 {
                    return Ok(points);
                }
                axis -= 1;
                odometer[axis] += 1;
                if odometer[axis] < self.features[axis].len() {
                    break;
                }
                odometer[axis] = 0;
            }
        }
    }
}

impl<'de> Deserialize<'de> for FeatureSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let features = Vec::<Feature>::deserialize(deserializer)?;
        FeatureSpace::new(features).map_err(serde::de::Error::custom)
    }
}

/// A grid point: one integer per feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for Point {
    fn from(values: Vec<i64>) -> Self {
        Point(values)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub fn new(id: impl Into<String>) -> Self {
        Label(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Bitmask over the indices of a [`LabelSet`].
pub type LabelMask = u64;

/// The declared, finite output set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct LabelSet {
    labels: Vec<Label>,
}

impl LabelSet {
    pub fn new(labels: Vec<Label>) -> Result<Self, DomainError> {
        if labels.len() < 2 {
            return Err(DomainError::TooFewLabels(labels.len()));
        }
        if labels.len() > MAX_LABELS {
            return Err(DomainError::TooManyLabels(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(DomainError::DuplicateLabel(label.0.clone()));
            }
        }
        Ok(LabelSet { labels })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn resolve(&self, id: &str) -> Result<Label, DomainError> {
        self.labels
            .iter()
            .find(|l| l.0 == id)
            .cloned()
            .ok_or_else(|| DomainError::UnknownLabel(id.to_string()))
    }

    pub fn bit(&self, label: &Label) -> Option<LabelMask> {
        self.index_of(label).map(|i| 1 << i)
    }

    /// Labels whose bits are set in `mask`, in declaration order.
    pub fn decode(&self, mask: LabelMask) -> Vec<Label> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, l)| l.clone())
            .collect()
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let labels = Vec::<Label>::deserialize(deserializer)?;
        LabelSet::new(labels).map_err(serde::de::Error::custom)
    }
}

/// A set of grid points, indexed by grid position.
pub type PointSet = FixedBitSet;

/// A feature space with its points materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    space: FeatureSpace,
    points: Vec<Point>,
}

impl Grid {
    pub fn new(space: FeatureSpace, cap: u64) -> Result<Self, DomainError> {
        let points = space.grid_points(cap)?;
        Ok(Grid { space, points })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &Point {
        &self.points[index]
    }

    /// Mixed-radix position of a grid point.
    pub fn index_of(&self, point: &Point) -> Option<usize> {
        let features = self.space.features();
        if point.0.len() != features.len() {
            return None;
        }
        let mut index = 0usize;
        for (feature, &value) in features.iter().zip(&point.0) {
            index = index * feature.len() + feature.position(value)?;
        }
        Some(index)
    }

    pub fn empty_set(&self) -> PointSet {
        FixedBitSet::with_capacity(self.points.len())
    }
}

/// Feature grid plus output labels: the shared carrier of every
/// classifier, explainer and entailment relation in a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    grid: Grid,
    labels: LabelSet,
}

impl Domain {
    pub fn new(space: FeatureSpace, labels: LabelSet, cap: u64) -> Result<Arc<Self>, DomainError> {
        Ok(Arc::new(Domain {
            grid: Grid::new(space, cap)?,
            labels,
        }))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &FeatureSpace {
        self.grid.space()
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }
}

/// An input together with an output.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub point: Point,
    pub label: Label,
}

impl Pair {
    pub fn new(point: Point, label: Label) -> Self {
        Pair { point, label }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.point, self.label)
    }
}

/// The finite sequence of input-output pairs an explainer has seen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History(pub Vec<Pair>);

impl History {
    pub fn new() -> Self {
        History(Vec::new())
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, pair: Pair) {
        self.0.push(pair);
    }

    pub fn prefix(&self, len: usize) -> History {
        History(self.0[..len].to_vec())
    }
}

impl From<Vec<Pair>> for History {
    fn from(pairs: Vec<Pair>) -> Self {
        History(pairs)
    }
}

/// An ordered sequence of explanations. Order is significant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ExplanationSeq(pub Vec<DecisionSet>);

impl ExplanationSeq {
    pub fn new() -> Self {
        ExplanationSeq(Vec::new())
    }

    pub fn explanations(&self) -> &[DecisionSet] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<DecisionSet>> for ExplanationSeq {
    fn from(explanations: Vec<DecisionSet>) -> Self {
        ExplanationSeq(explanations)
    }
}
