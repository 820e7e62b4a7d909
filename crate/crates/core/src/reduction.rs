//! Set Cover as a source of decision-variant instances.
//!
//! A set-cover instance `(U, S, k)` with `k < |S|` becomes an interview
//! instance with one binary question per set plus a `private` question, and
//! three candidate families, with `Ω = 2·|U|·|S|`:
//!
//! * one *element* type per `u ∈ U`: answers 1 to the sets containing `u`,
//!   unfit, quantity `Ω`;
//! * one *set* type per `C ∈ S`: answers 1 to its own question and to
//!   `private`, unfit, quantity 1;
//! * one *null* type answering 0 everywhere, fit, quantity `Ω²`.
//!
//! The only privacy rule is `(private, 1, a, 1)` with
//! `a = (|S| - k) / (|U|·Ω + Ω² + |S| - k)`, and the thresholds are `x = 0`,
//! `y = Ω² / (Ω² + |S|)`. An interview satisfying them exists exactly when
//! `k` sets cover `U`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures;
use crate::model::{CandidateType, CdpcThresholds, Instance, InterviewTree, ModelError, PrivacyRule, Question};
use crate::rational::Rational;

pub const PRIVATE_QUESTION: &str = "private";
/// Binary answers, in declaration order.
pub const ANSWER_ONE: usize = 0;
pub const ANSWER_ZERO: usize = 1;

/// Largest family size the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_SETS: usize = 25;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("malformed set-cover document: {0}")]
    Malformed(String),
    #[error("element {0:?} appears twice in the universe")]
    DuplicateElement(String),
    #[error("set {set} contains {element:?}, which is not in the universe")]
    UnknownElement { set: usize, element: String },
    #[error("the sets do not cover element {0:?} of the universe")]
    UniverseNotCovered(String),
    #[error("k = {k} exceeds the number of sets {sets}")]
    KTooLarge { k: usize, sets: usize },
    #[error("brute force limited to {BRUTE_FORCE_MAX_SETS} sets, got {0}")]
    TooManySets(usize),
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("instance is not in decision mode")]
    NotDecisionMode,
    #[error("private question {0:?} has no answer \"1\"")]
    NoAnswerOne(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Set-cover instance `(U, S, k)`. Sets are stored as universe indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScInstance {
    universe: Vec<String>,
    sets: Vec<BTreeSet<usize>>,
    k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScDoc {
    pub universe: Vec<String>,
    pub sets: Vec<Vec<String>>,
    pub k: usize,
}

/// Constants of the transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScTransformParams {
    pub omega: u64,
    pub a: Rational,
    pub b: Rational,
    pub x: Rational,
    pub y: Rational,
}

impl ScInstance {
    /// Validates and normalizes: the empty set and repeated sets are dropped,
    /// and `k` is capped at the remaining number of sets (which keeps the
    /// answer unchanged).
    pub fn new<S: AsRef<str>>(
        universe: &[S],
        sets: &[Vec<S>],
        k: usize,
    ) -> Result<Self, ReductionError> {
        let universe: Vec<String> = universe.iter().map(|u| u.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, u) in universe.iter().enumerate() {
            if index.insert(u.clone(), i).is_some() {
                return Err(ReductionError::DuplicateElement(u.clone()));
            }
        }
        if k > sets.len() {
            return Err(ReductionError::KTooLarge { k, sets: sets.len() });
        }
        let mut normalized: Vec<BTreeSet<usize>> = Vec::new();
        let mut covered = vec![false; universe.len()];
        for (si, set) in sets.iter().enumerate() {
            let mut members = BTreeSet::new();
            for e in set {
                let &i = index.get(e.as_ref()).ok_or_else(|| ReductionError::UnknownElement {
                    set: si,
                    element: e.as_ref().to_string(),
                })?;
                members.insert(i);
                covered[i] = true;
            }
            if !members.is_empty() && !normalized.contains(&members) {
                normalized.push(members);
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(ReductionError::UniverseNotCovered(universe[i].clone()));
        }
        let k = k.min(normalized.len());
        Ok(ScInstance { universe, sets: normalized, k })
    }

    /// Builds from bitmasks over a universe `0..n` (element ids are decimal).
    pub fn from_masks(n: usize, masks: &[u64], k: usize) -> Result<Self, ReductionError> {
        let universe: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let sets: Vec<Vec<String>> = masks
            .iter()
            .map(|&m| (0..n).filter(|&i| m >> i & 1 == 1).map(|i| universe[i].clone()).collect())
            .collect();
        Self::new(&universe, &sets, k)
    }

    pub fn from_doc(doc: &ScDoc) -> Result<Self, ReductionError> {
        Self::new(&doc.universe, &doc.sets, doc.k)
    }

    pub fn parse(document: &str) -> Result<Self, ReductionError> {
        let doc: ScDoc =
            serde_json::from_str(document).map_err(|e| ReductionError::Malformed(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn to_doc(&self) -> ScDoc {
        ScDoc {
            universe: self.universe.clone(),
            sets: self.sets.iter().map(|s| self.set_elements(s)).collect(),
            k: self.k,
        }
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// True when `k = |S|`: taking every set is a cover.
    pub fn is_trivial(&self) -> bool {
        self.k == self.sets.len()
    }

    fn set_elements(&self, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&i| self.universe[i].clone()).collect()
    }

    /// Question id of a set, e.g. `s{1,2,4}`.
    pub fn set_label(&self, set: usize) -> String {
        format!("s{{{}}}", self.set_elements(&self.sets[set]).join(","))
    }

    /// Index of the set with exactly these elements.
    pub fn set_index<S: AsRef<str>>(&self, elements: &[S]) -> Option<usize> {
        let wanted: BTreeSet<usize> = elements
            .iter()
            .map(|e| self.universe.iter().position(|u| u == e.as_ref()))
            .collect::<Option<_>>()?;
        self.sets.iter().position(|s| *s == wanted)
    }

    /// Transformation constants (`k < |S|` assumed by the formulas).
    pub fn params(&self) -> ScTransformParams {
        let u = self.universe.len() as i64;
        let s = self.sets.len() as i64;
        let k = self.k as i64;
        let omega = 2 * u * s;
        ScTransformParams {
            omega: omega as u64,
            a: Rational::new(s - k, u * omega + omega * omega + s - k),
            b: Rational::ONE,
            x: Rational::ZERO,
            y: Rational::new(omega * omega, omega * omega + s),
        }
    }

    fn covers(&self, chosen: &[usize]) -> bool {
        let mut covered = vec![false; self.universe.len()];
        for &s in chosen {
            for &e in &self.sets[s] {
                covered[e] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }
}

/// Maps a set-cover instance to a decision-mode interview instance.
///
/// When `k = |S|` the answer is trivially positive and the fixed positive
/// hiring instance is returned. Elements that belong to exactly the same sets
/// would produce identical answer patterns; they are merged into one type
/// whose quantity is the sum, which leaves every ratio unchanged.
pub fn transform_sc(sc: &ScInstance) -> Instance {
    if sc.is_trivial() {
        return fixtures::hiring_cdpc().with_meta("trivial", "k = |S|");
    }
    let p = sc.params();
    let n_sets = sc.sets.len();
    let binary = || vec!["1".to_string(), "0".to_string()];
    let mut questions: Vec<Question> =
        (0..n_sets).map(|i| Question { id: sc.set_label(i), answers: binary() }).collect();
    questions.push(Question { id: PRIVATE_QUESTION.to_string(), answers: binary() });
    let private = n_sets;

    let mut types: Vec<CandidateType> = Vec::new();
    let mut pattern_index: HashMap<Vec<usize>, usize> = HashMap::new();
    for e in 0..sc.universe.len() {
        let mut answers: Vec<usize> = sc
            .sets
            .iter()
            .map(|s| if s.contains(&e) { ANSWER_ONE } else { ANSWER_ZERO })
            .collect();
        answers.push(ANSWER_ZERO);
        match pattern_index.get(&answers) {
            Some(&i) => types[i].quantity += p.omega,
            None => {
                pattern_index.insert(answers.clone(), types.len());
                types.push(CandidateType { answers, fitness: Rational::ZERO, quantity: p.omega });
            }
        }
    }
    types.push(CandidateType {
        answers: vec![ANSWER_ZERO; n_sets + 1],
        fitness: Rational::ONE,
        quantity: p.omega * p.omega,
    });
    for s in 0..n_sets {
        let mut answers = vec![ANSWER_ZERO; n_sets + 1];
        answers[s] = ANSWER_ONE;
        answers[private] = ANSWER_ONE;
        types.push(CandidateType { answers, fitness: Rational::ZERO, quantity: 1 });
    }
    let rule = PrivacyRule { question: private, answer: ANSWER_ONE, low: p.a, high: p.b };
    let m = questions.len();
    Instance::new(questions, types, vec![rule], m, Some(CdpcThresholds { x: p.x, y: p.y }))
        .expect("transformation output is a valid instance")
        .with_meta("omega", p.omega.to_string())
        .with_meta("a", p.a.to_string())
        .with_meta("b", p.b.to_string())
        .with_meta("x", p.x.to_string())
        .with_meta("y", p.y.to_string())
        .with_meta("sc_k", sc.k.to_string())
}

/// The chain interview over a cover: ask the cover's sets in the given
/// order; an answer of 1 ends the interview, an answer of 0 moves on.
pub fn strategy_tree(sc: &ScInstance, cover: &[usize]) -> Result<InterviewTree, ReductionError> {
    if cover.len() > sc.k {
        return Err(ReductionError::InvalidCover(format!(
            "{} sets exceed k = {}",
            cover.len(),
            sc.k
        )));
    }
    if let Some(&bad) = cover.iter().find(|&&s| s >= sc.sets.len()) {
        return Err(ReductionError::InvalidCover(format!("no set #{bad}")));
    }
    let distinct: BTreeSet<usize> = cover.iter().copied().collect();
    if distinct.len() != cover.len() {
        return Err(ReductionError::InvalidCover("repeated set".into()));
    }
    if !sc.covers(cover) {
        return Err(ReductionError::InvalidCover("sets do not cover the universe".into()));
    }
    if cover.is_empty() {
        return Ok(InterviewTree::Leaf);
    }
    Ok(cover.iter().rev().fold(InterviewTree::Leaf, |rest, &s| {
        InterviewTree::ask(s, vec![(ANSWER_ONE, InterviewTree::Leaf), (ANSWER_ZERO, rest)])
    }))
}

/// [`strategy_tree`] with the cover given as element lists.
pub fn strategy_tree_for_sets<S: AsRef<str>>(
    sc: &ScInstance,
    cover: &[Vec<S>],
) -> Result<InterviewTree, ReductionError> {
    let indices = cover
        .iter()
        .map(|c| {
            sc.set_index(c).ok_or_else(|| ReductionError::InvalidCover("set not in S".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    strategy_tree(sc, &indices)
}

/// Exhaustive oracle: is there a cover with at most `k` sets? The witness is
/// the lexicographically first cover of minimum size.
pub fn sc_bruteforce(sc: &ScInstance) -> Result<(bool, Option<Vec<usize>>), ReductionError> {
    let n = sc.sets.len();
    if n > BRUTE_FORCE_MAX_SETS {
        return Err(ReductionError::TooManySets(n));
    }
    for size in 0..=sc.k {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if sc.covers(&combo) {
                return Ok((true, Some(combo)));
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    Ok((false, None))
}

/// Advances to the next `combo.len()`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Builds optimization-variant rules `(p, "1", a, b)` for each private
/// question `p`.
pub fn rules_for_private<S: AsRef<str>>(
    questions: &[Question],
    private: &[S],
    a: Rational,
    b: Rational,
) -> Result<Vec<PrivacyRule>, ReductionError> {
    private
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let question = questions
                .iter()
                .position(|q| q.id == p)
                .ok_or_else(|| ModelError::UndeclaredQuestion(p.to_string()))?;
            let answer = questions[question]
                .answers
                .iter()
                .position(|a| a == "1")
                .ok_or_else(|| ReductionError::NoAnswerOne(p.to_string()))?;
            Ok(PrivacyRule { question, answer, low: a, high: b })
        })
        .collect()
}

/// Converts a decision-mode instance to the optimization variant: fitness
/// is already 0/1, the rules carry over unchanged, the question limit becomes
/// the number of questions, and the thresholds move into metadata.
pub fn cdpc_to_gcopc(inst: &Instance) -> Result<Instance, ReductionError> {
    let t = inst.cdpc().ok_or(ReductionError::NotDecisionMode)?;
    let m = inst.n_questions();
    let mut meta: BTreeMap<String, String> = inst.meta().clone();
    meta.insert("cdpc_x".into(), t.x.to_string());
    meta.insert("cdpc_y".into(), t.y.to_string());
    let mut out = Instance::new(
        inst.questions().to_vec(),
        inst.candidate_types().to_vec(),
        inst.privacy_rules().to_vec(),
        m,
        None,
    )?;
    for (k, v) in meta {
        out = out.with_meta(k, v);
    }
    Ok(out)
}
