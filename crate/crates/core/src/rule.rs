//! The rule language: predicates, rules and decision sets, with a small
//! parser and a canonical serializer.
//!
//! ```text
//! rule    := itemset "->" label
//! itemset := ε | pred ("&" pred)*
//! pred    := name op int
//! op      := "<" | "<=" | ">" | ">=" | "==" | "!="
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::domain::{ExplanationSeq, FeatureSpace, Grid, Label, LabelSet, Point, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Lt, Op::Le, Op::Gt, Op::Ge, Op::Eq, Op::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Eq => "==",
            Op::Ne => "!=",
        }
    }

    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Op::Lt => lhs < rhs,
            Op::Le => lhs <= rhs,
            Op::Gt => lhs > rhs,
            Op::Ge => lhs >= rhs,
            Op::Eq => lhs == rhs,
            Op::Ne => lhs != rhs,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `feature op threshold`, bound to a feature of a particular space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    index: usize,
    feature: String,
    op: Op,
    threshold: i64,
}

impl Predicate {
    pub fn new(
        space: &FeatureSpace,
        feature: &str,
        op: Op,
        threshold: i64,
    ) -> Result<Self, ParseError> {
        let index = space
            .feature_index(feature)
            .ok_or_else(|| ParseError::UnknownFeature {
                name: feature.to_string(),
                position: 0,
            })?;
        Ok(Predicate {
            index,
            feature: feature.to_string(),
            op,
            threshold,
        })
    }

    pub fn feature(&self) -> &str {
        &self.feature
    }

    pub fn feature_index(&self) -> usize {
        self.index
    }

    pub fn op(&self) -> Op {
        self.op
    }

    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    pub fn holds(&self, point: &Point) -> bool {
        self.op.eval(point.0[self.index], self.threshold)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature, self.op, self.threshold)
    }
}

/// True iff every predicate of the conjunction holds at `point`.
pub fn satisfies(point: &Point, itemset: &[Predicate]) -> bool {
    itemset.iter().all(|p| p.holds(point))
}

/// An itemset (conjunction of predicates) implying a label. The itemset is
/// kept sorted by feature, then operator, then threshold, without repeats.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    itemset: Vec<Predicate>,
    consequent: Label,
}

impl Rule {
    pub fn new(mut itemset: Vec<Predicate>, consequent: Label) -> Self {
        itemset.sort();
        itemset.dedup();
        Rule {
            itemset,
            consequent,
        }
    }

    pub fn itemset(&self) -> &[Predicate] {
        &self.itemset
    }

    pub fn consequent(&self) -> &Label {
        &self.consequent
    }

    pub fn covers(&self, point: &Point) -> bool {
        satisfies(point, &self.itemset)
    }

    /// Grid points satisfying the itemset.
    pub fn coverage(&self, grid: &Grid) -> PointSet {
        let mut set = grid.empty_set();
        for (i, p) in grid.points().iter().enumerate() {
            if self.covers(p) {
                set.insert(i);
            }
        }
        set
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.itemset.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{p}")?;
        }
        if !self.itemset.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "-> {}", self.consequent)
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A finite set of rules. No default class and no tie-breaking: a point
/// no rule covers gets no label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct DecisionSet {
    rules: BTreeSet<Rule>,
}

impl DecisionSet {
    pub fn new() -> Self {
        DecisionSet::default()
    }

    pub fn rules(&self) -> impl ExactSizeIterator<Item = &Rule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn insert(&mut self, rule: Rule) -> bool {
        self.rules.insert(rule)
    }

    /// Parses each text as a rule.
    pub fn parse<S: AsRef<str>>(
        texts: &[S],
        space: &FeatureSpace,
        labels: &LabelSet,
    ) -> Result<Self, ParseError> {
        texts
            .iter()
            .map(|t| parse_rule(t.as_ref(), space, labels))
            .collect()
    }

    /// Canonical rule texts, in set order.
    pub fn texts(&self) -> Vec<String> {
        self.rules.iter().map(Rule::to_string).collect()
    }
}

impl FromIterator<Rule> for DecisionSet {
    fn from_iter<I: IntoIterator<Item = Rule>>(iter: I) -> Self {
        DecisionSet {
            rules: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for DecisionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("}")
    }
}

/// Points satisfying at least one rule's itemset, over every explanation of
/// the sequence. Rule-level granularity: labels play no part.
pub fn coverage(explanations: &ExplanationSeq, grid: &Grid) -> PointSet {
    let mut set = grid.empty_set();
    for rule in explanations.explanations().iter().flat_map(DecisionSet::rules) {
        set.union_with(&rule.coverage(grid));
    }
    set
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown feature `{name}` at column {position}")]
    UnknownFeature { name: String, position: usize },
    #[error("unknown label `{label}` at column {position}")]
    UnknownLabel { label: String, position: usize },
    #[error("threshold `{text}` at column {position} is not an integer")]
    NonIntegerThreshold { text: String, position: usize },
}

impl ParseError {
    fn syntax(position: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Word(&'a str),
    Int(i64, &'a str),
    /// Numeric text that is not an integer (e.g. `1.5`).
    Number(&'a str),
    Op(Op),
    And,
    Arrow,
}

impl Token<'_> {
    fn describe(&self) -> String {
        match self {
            Token::Word(w) => format!("`{w}`"),
            Token::Int(_, text) => format!("`{text}`"),
            Token::Number(n) => format!("`{n}`"),
            Token::Op(op) => format!("`{op}`"),
            Token::And => "`&`".into(),
            Token::Arrow => "`->`".into(),
        }
    }
}

/// Tokens paired with their 1-based starting column.
fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        let next = bytes.get(i + 1).copied();
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'&' => {
                tokens.push((col, Token::And));
                i += 1;
            }
            b'-' if next == Some(b'>') => {
                tokens.push((col, Token::Arrow));
                i += 2;
            }
            b'<' | b'>' => {
                let (op, width) = match (c, next) {
                    (b'<', Some(b'=')) => (Op::Le, 2),
                    (b'<', _) => (Op::Lt, 1),
                    (b'>', Some(b'=')) => (Op::Ge, 2),
                    _ => (Op::Gt, 1),
                };
                tokens.push((col, Token::Op(op)));
                i += width;
            }
            b'=' | b'!' => {
                if next != Some(b'=') {
                    return Err(ParseError::syntax(
                        col,
                        format!("expected `{}=`", c as char),
                    ));
                }
                let op = if c == b'=' { Op::Eq } else { Op::Ne };
                tokens.push((col, Token::Op(op)));
                i += 2;
            }
            b'-' | b'+' | b'0'..=b'9' => {
                let start = i;
                i += 1;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                if let Ok(v) = word.parse::<i64>() {
                    tokens.push((col, Token::Int(v, word)));
                } else if word.parse::<f64>().is_ok() {
                    tokens.push((col, Token::Number(word)));
                } else if word.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                    // Labels may be numeric-looking identifiers such as `0a`.
                    tokens.push((col, Token::Word(word)));
                } else {
                    return Err(ParseError::syntax(col, format!("malformed number `{word}`")));
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((col, Token::Word(&text[start..i])));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(col, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(tokens)
}

/// Parses `text` into a rule over `space` with a consequent from `labels`.
pub fn parse_rule(text: &str, space: &FeatureSpace, labels: &LabelSet) -> Result<Rule, ParseError> {
    let tokens = tokenize(text)?;
    let end = text.len() + 1;
    let mut pos = 0;
    let mut itemset = Vec::new();

    if !matches!(tokens.first(), Some((_, Token::Arrow))) {
        loop {
            itemset.push(parse_predicate(&tokens, &mut pos, space, end)?);
            match tokens.get(pos) {
                Some((_, Token::And)) => pos += 1,
                Some((_, Token::Arrow)) => break,
                Some((col, tok)) => {
                    return Err(ParseError::syntax(
                        *col,
                        format!("expected `&` or `->`, found {}", tok.describe()),
                    ))
                }
                None => return Err(ParseError::syntax(end, "expected `->`")),
            }
        }
    }
    // Arrow
    pos += 1;

    let label = match tokens.get(pos) {
        // Numeric labels keep their text as written (`01` is not `1`).
        Some((col, Token::Word(w) | Token::Int(_, w))) => (*col, w.to_string()),
        Some((col, tok)) => {
            return Err(ParseError::syntax(
                *col,
                format!("expected a label, found {}", tok.describe()),
            ))
        }
        None => return Err(ParseError::syntax(end, "expected a label after `->`")),
    };
    pos += 1;
    if let Some((col, tok)) = tokens.get(pos) {
        return Err(ParseError::syntax(
            *col,
            format!("unexpected {} after the label", tok.describe()),
        ));
    }
    let consequent = labels
        .resolve(&label.1)
        .map_err(|_| ParseError::UnknownLabel {
            label: label.1,
            position: label.0,
        })?;
    Ok(Rule::new(itemset, consequent))
}

fn parse_predicate(
    tokens: &[(usize, Token<'_>)],
    pos: &mut usize,
    space: &FeatureSpace,
    end: usize,
) -> Result<Predicate, ParseError> {
    let (name_col, name) = match tokens.get(*pos) {
        Some((col, Token::Word(w))) => (*col, *w),
        Some((col, tok)) => {
            return Err(ParseError::syntax(
                *col,
                format!("expected a feature name, found {}", tok.describe()),
            ))
        }
        None => return Err(ParseError::syntax(end, "expected a feature name")),
    };
    *pos += 1;
    let op = match tokens.get(*pos) {
        Some((_, Token::Op(op))) => *op,
        Some((col, tok)) => {
            return Err(ParseError::syntax(
                *col,
                format!("expected a comparison operator, found {}", tok.describe()),
            ))
        }
        None => return Err(ParseError::syntax(end, "expected a comparison operator")),
    };
    *pos += 1;
    let threshold = match tokens.get(*pos) {
        Some((_, Token::Int(v, _))) => *v,
        Some((col, Token::Number(n))) => {
            return Err(ParseError::NonIntegerThreshold {
                text: n.to_string(),
                position: *col,
            })
        }
        Some((col, tok)) => {
            return Err(ParseError::syntax(
                *col,
                format!("expected an integer threshold, found {}", tok.describe()),
            ))
        }
        None => return Err(ParseError::syntax(end, "expected an integer threshold")),
    };
    *pos += 1;
    let index = space
        .feature_index(name)
        .ok_or_else(|| ParseError::UnknownFeature {
            name: name.to_string(),
            position: name_col,
        })?;
    Ok(Predicate {
        index,
        feature: name.to_string(),
        op,
        threshold,
    })
}
