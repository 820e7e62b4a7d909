use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use super::population::PopulationView;
use crate::rational::{Frac, Rational};

/// Total population times the fitness scale must stay below this so that
/// every cross-multiplied comparison fits in `u128`.
const MAGNITUDE_LIMIT: u128 = 1 << 62;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("instance declares no questions")]
    NoQuestions,
    #[error("instance declares no candidate types")]
    NoCandidates,
    #[error("question {0:?} is declared twice")]
    DuplicateQuestion(String),
    #[error("question {0:?} must declare at least two answers")]
    TooFewAnswers(String),
    #[error("question {0:?} declares more than 255 answers")]
    TooManyAnswers(String),
    #[error("question {question:?} declares answer {answer:?} twice")]
    DuplicateAnswer { question: String, answer: String },
    #[error("undeclared question {0:?}")]
    UndeclaredQuestion(String),
    #[error("undeclared answer {answer:?} for question {question:?}")]
    UndeclaredAnswer { question: String, answer: String },
    #[error("candidate type {index} gives no answer to question {question:?}")]
    MissingAnswer { index: usize, question: String },
    #[error("candidate type {0} has zero quantity")]
    ZeroQuantity(usize),
    #[error("candidate type {index} has fitness {fitness} outside [0, 1]")]
    FitnessOutOfRange { index: usize, fitness: Rational },
    #[error("candidate types {first} and {second} have identical answers")]
    DuplicateType { first: usize, second: usize },
    #[error("privacy rule {index} has bounds out of order: need 0 <= {low} <= {high} <= 1")]
    BoundsOutOfOrder { index: usize, low: Rational, high: Rational },
    #[error("thresholds out of order: need 0 <= x = {x} <= y = {y} <= 1")]
    ThresholdsOutOfOrder { x: Rational, y: Rational },
    #[error("question limit {limit} exceeds the number of questions {questions}")]
    QuestionLimitTooLarge { limit: usize, questions: usize },
    #[error("candidate type {0} has non-binary fitness in a threshold-mode instance")]
    NonBinaryFitness(usize),
    #[error("quantities and fitness denominators are too large for exact comparison")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub answers: Vec<String>,
}

/// One way of answering every question, shared by `quantity` candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateType {
    /// Answer index per question, in question declaration order.
    pub answers: Vec<usize>,
    pub fitness: Rational,
    pub quantity: u64,
}

/// The share of the remaining population giving `answer` to `question` must
/// stay within `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivacyRule {
    pub question: usize,
    pub answer: usize,
    pub low: Rational,
    pub high: Rational,
}

/// Decision-mode thresholds: every leaf needs fit ratio `<= x` or `>= y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdpcThresholds {
    pub x: Rational,
    pub y: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleViolation {
    pub rule: usize,
    pub ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyCheck {
    pub ok: bool,
    pub violations: Vec<RuleViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RuleBounds {
    low_num: u128,
    low_den: u128,
    high_num: u128,
    high_den: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    questions: Vec<Question>,
    types: Vec<CandidateType>,
    rules: Vec<PrivacyRule>,
    question_limit: usize,
    cdpc: Option<CdpcThresholds>,
    meta: BTreeMap<String, String>,
    // Derived, question-major answer table.
    columns: Vec<Vec<u8>>,
    fit_weight: Vec<u128>,
    fit_scale: u128,
    bounds: Vec<RuleBounds>,
    question_lookup: HashMap<String, usize>,
}

impl Instance {
    pub fn new(
        questions: Vec<Question>,
        types: Vec<CandidateType>,
        rules: Vec<PrivacyRule>,
        question_limit: usize,
        cdpc: Option<CdpcThresholds>,
    ) -> Result<Self, ModelError> {
        if questions.is_empty() {
            return Err(ModelError::NoQuestions);
        }
        if types.is_empty() {
            return Err(ModelError::NoCandidates);
        }
        let mut question_lookup = HashMap::new();
        for (qi, q) in questions.iter().enumerate() {
            if question_lookup.insert(q.id.clone(), qi).is_some() {
                return Err(ModelError::DuplicateQuestion(q.id.clone()));
            }
            if q.answers.len() < 2 {
                return Err(ModelError::TooFewAnswers(q.id.clone()));
            }
            if q.answers.len() > u8::MAX as usize {
                return Err(ModelError::TooManyAnswers(q.id.clone()));
            }
            let mut seen = HashSet::new();
            for a in &q.answers {
                if !seen.insert(a) {
                    return Err(ModelError::DuplicateAnswer {
                        question: q.id.clone(),
                        answer: a.clone(),
                    });
                }
            }
        }
        let m = questions.len();
        let mut seen_types: HashMap<&[usize], usize> = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            if t.answers.len() != m {
                let question = questions
                    .get(t.answers.len().min(m - 1))
                    .map(|q| q.id.clone())
                    .unwrap_or_default();
                return Err(ModelError::MissingAnswer { index: i, question });
            }
            for (qi, &a) in t.answers.iter().enumerate() {
                if a >= questions[qi].answers.len() {
                    return Err(ModelError::UndeclaredAnswer {
                        question: questions[qi].id.clone(),
                        answer: format!("#{a}"),
                    });
                }
            }
            if t.quantity == 0 {
                return Err(ModelError::ZeroQuantity(i));
            }
            if t.fitness < Rational::ZERO || t.fitness > Rational::ONE {
                return Err(ModelError::FitnessOutOfRange { index: i, fitness: t.fitness });
            }
            if let Some(&first) = seen_types.get(t.answers.as_slice()) {
                return Err(ModelError::DuplicateType { first, second: i });
            }
            seen_types.insert(&t.answers, i);
        }
        for (i, r) in rules.iter().enumerate() {
            if r.question >= m {
                return Err(ModelError::UndeclaredQuestion(format!("#{}", r.question)));
            }
            if r.answer >= questions[r.question].answers.len() {
                return Err(ModelError::UndeclaredAnswer {
                    question: questions[r.question].id.clone(),
                    answer: format!("#{}", r.answer),
                });
            }
            if !(Rational::ZERO <= r.low && r.low <= r.high && r.high <= Rational::ONE) {
                return Err(ModelError::BoundsOutOfOrder { index: i, low: r.low, high: r.high });
            }
        }
        if let Some(t) = cdpc {
            if !(Rational::ZERO <= t.x && t.x <= t.y && t.y <= Rational::ONE) {
                return Err(ModelError::ThresholdsOutOfOrder { x: t.x, y: t.y });
            }
            for (i, ty) in types.iter().enumerate() {
                if ty.fitness != Rational::ZERO && ty.fitness != Rational::ONE {
                    return Err(ModelError::NonBinaryFitness(i));
                }
            }
        }
        if question_limit > m {
            return Err(ModelError::QuestionLimitTooLarge { limit: question_limit, questions: m });
        }

        let total: u128 = types.iter().map(|t| t.quantity as u128).sum();
        let mut fit_scale: u128 = 1;
        for t in &types {
            fit_scale = num_integer::lcm(fit_scale, t.fitness.denom() as u128);
            if total.checked_mul(fit_scale).is_none_or(|v| v >= MAGNITUDE_LIMIT) {
                return Err(ModelError::Overflow);
            }
        }
        let fit_weight = types
            .iter()
            .map(|t| {
                t.quantity as u128 * t.fitness.numer() as u128 * (fit_scale / t.fitness.denom() as u128)
            })
            .collect();
        let columns = (0..m)
            .map(|qi| types.iter().map(|t| t.answers[qi] as u8).collect())
            .collect();
        let bounds = rules
            .iter()
            .map(|r| RuleBounds {
                low_num: r.low.numer() as u128,
                low_den: r.low.denom() as u128,
                high_num: r.high.numer() as u128,
                high_den: r.high.denom() as u128,
            })
            .collect();

        Ok(Instance {
            questions,
            types,
            rules,
            question_limit,
            cdpc,
            meta: BTreeMap::new(),
            columns,
            fit_weight,
            fit_scale,
            bounds,
            question_lookup,
        })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub(crate) fn set_meta(&mut self, meta: BTreeMap<String, String>) {
        self.meta = meta;
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn candidate_types(&self) -> &[CandidateType] {
        &self.types
    }

    pub fn privacy_rules(&self) -> &[PrivacyRule] {
        &self.rules
    }

    pub fn question_limit(&self) -> usize {
        self.question_limit
    }

    pub fn cdpc(&self) -> Option<CdpcThresholds> {
        self.cdpc
    }

    /// Number of candidate types (`n`).
    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    /// Number of questions (`m`).
    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn n_answers(&self, question: usize) -> usize {
        self.questions[question].answers.len()
    }

    pub fn question_index(&self, id: &str) -> Option<usize> {
        self.question_lookup.get(id).copied()
    }

    pub fn answer_index(&self, question: usize, id: &str) -> Option<usize> {
        self.questions.get(question)?.answers.iter().position(|a| a == id)
    }

    #[inline]
    pub fn answer_of(&self, candidate: usize, question: usize) -> usize {
        self.columns[question][candidate] as usize
    }

    /// The whole candidate population.
    pub fn root(&self) -> PopulationView {
        let total = self.types.iter().map(|t| t.quantity).sum();
        PopulationView::from_parts((0..self.types.len() as u32).collect(), total)
    }

    /// Builds a view over an explicit member set; `None` when empty.
    pub fn view_of(&self, members: impl IntoIterator<Item = usize>) -> Option<PopulationView> {
        let mut members: Vec<u32> = members.into_iter().map(|i| i as u32).collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return None;
        }
        let total = members.iter().map(|&i| self.types[i as usize].quantity).sum();
        Some(PopulationView::from_parts(members, total))
    }

    /// Members of `pop` answering `answer` to `question`; `None` when no
    /// member matches.
    pub fn restrict(
        &self,
        pop: &PopulationView,
        question: usize,
        answer: usize,
    ) -> Option<PopulationView> {
        let col = &self.columns[question];
        let mut members = Vec::new();
        let mut total = 0u64;
        for &i in pop.members() {
            if col[i as usize] as usize == answer {
                members.push(i);
                total += self.types[i as usize].quantity;
            }
        }
        (!members.is_empty()).then(|| PopulationView::from_parts(members, total))
    }

    /// Partition of `pop` by the answer to `question`: one entry per
    /// realizable answer, in answer declaration order.
    pub fn split(&self, pop: &PopulationView, question: usize) -> Vec<(usize, PopulationView)> {
        let col = &self.columns[question];
        let k = self.questions[question].answers.len();
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
        let mut totals = vec![0u64; k];
        for &i in pop.members() {
            let a = col[i as usize] as usize;
            members[a].push(i);
            totals[a] += self.types[i as usize].quantity;
        }
        members
            .into_iter()
            .zip(totals)
            .enumerate()
            .filter(|(_, (m, _))| !m.is_empty())
            .map(|(a, (m, t))| (a, PopulationView::from_parts(m, t)))
            .collect()
    }

    /// Number of realizable answers to `question` within `pop`.
    pub fn realizable_answers(&self, pop: &PopulationView, question: usize) -> usize {
        let col = &self.columns[question];
        let mut seen = [false; 256];
        let mut count = 0;
        for &i in pop.members() {
            let a = col[i as usize] as usize;
            if !seen[a] {
                seen[a] = true;
                count += 1;
            }
        }
        count
    }

    pub(crate) fn fit_frac(&self, pop: &PopulationView) -> Frac {
        let weight: u128 = pop.members().iter().map(|&i| self.fit_weight[i as usize]).sum();
        Frac::new(weight, pop.total_quantity() as u128 * self.fit_scale)
    }

    /// `max(fit, 1 - fit)` of the population, as a hot-path fraction.
    pub(crate) fn extreme_frac(&self, pop: &PopulationView) -> Frac {
        let f = self.fit_frac(pop);
        Frac::new(f.num.max(f.den - f.num), f.den)
    }

    /// Quantity-weighted mean fitness of the population.
    pub fn fit_ratio(&self, pop: &PopulationView) -> Rational {
        self.fit_frac(pop).to_rational()
    }

    /// `max(fit, 1 - fit)`.
    pub fn extreme(&self, pop: &PopulationView) -> Rational {
        self.extreme_frac(pop).to_rational()
    }

    fn answer_count(&self, pop: &PopulationView, question: usize, answer: usize) -> u64 {
        let col = &self.columns[question];
        pop.members()
            .iter()
            .filter(|&&i| col[i as usize] as usize == answer)
            .map(|&i| self.types[i as usize].quantity)
            .sum()
    }

    /// Share of the population giving `answer` to `question`.
    pub fn answer_ratio(&self, pop: &PopulationView, question: usize, answer: usize) -> Rational {
        let count = self.answer_count(pop, question, answer);
        Rational::from_u128(count as u128, pop.total_quantity() as u128)
            .expect("population totals fit in 64 bits")
    }

    fn rule_holds(&self, rule: usize, count: u64, total: u64) -> bool {
        let b = self.bounds[rule];
        let (c, t) = (count as u128, total as u128);
        b.low_num * t <= c * b.low_den && c * b.high_den <= b.high_num * t
    }

    /// True when every privacy rule holds on `pop`.
    pub fn privacy_ok(&self, pop: &PopulationView) -> bool {
        let total = pop.total_quantity();
        self.rules.iter().enumerate().all(|(ri, r)| {
            self.rule_holds(ri, self.answer_count(pop, r.question, r.answer), total)
        })
    }

    /// Checks every privacy rule and lists the failing ones with their ratios.
    pub fn privacy_check(&self, pop: &PopulationView) -> PrivacyCheck {
        let total = pop.total_quantity();
        let violations: Vec<RuleViolation> = self
            .rules
            .iter()
            .enumerate()
            .filter_map(|(ri, r)| {
                let count = self.answer_count(pop, r.question, r.answer);
                (!self.rule_holds(ri, count, total)).then(|| RuleViolation {
                    rule: ri,
                    ratio: Rational::from_u128(count as u128, total as u128)
                        .expect("population totals fit in 64 bits"),
                })
            })
            .collect();
        PrivacyCheck { ok: violations.is_empty(), violations }
    }

    /// Rules already violated by the full population.
    pub fn root_violations(&self) -> Vec<RuleViolation> {
        self.privacy_check(&self.root()).violations
    }

    /// A question is feasible at `pop` when every realizable answer leaves a
    /// population satisfying all privacy rules. Returns the split when so.
    pub fn feasible_split(
        &self,
        pop: &PopulationView,
        question: usize,
    ) -> Option<Vec<(usize, PopulationView)>> {
        let children = self.split(pop, question);
        children.iter().all(|(_, c)| self.privacy_ok(c)).then_some(children)
    }

    /// Copy with a different question limit.
    pub fn with_question_limit(&self, limit: usize) -> Result<Self, ModelError> {
        if limit > self.questions.len() {
            return Err(ModelError::QuestionLimitTooLarge {
                limit,
                questions: self.questions.len(),
            });
        }
        let mut out = self.clone();
        out.question_limit = limit;
        Ok(out)
    }
}
