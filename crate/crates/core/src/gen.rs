//! Seeded random instance generator.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CandidateType, Instance, ModelError, PrivacyRule, Question};
use crate::rational::Rational;

/// Give up after this many duplicate answer vectors.
const MAX_COLLISIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("gave up after {MAX_COLLISIONS} duplicate candidate types; widen the question or answer ranges")]
    TooManyCollisions,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Inclusive integer range, written `lo..hi` or a single number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub lo: usize,
    pub hi: usize,
}

impl SizeRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        SizeRange { lo, hi }
    }

    pub fn exactly(n: usize) -> Self {
        SizeRange { lo: n, hi: n }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl FromStr for SizeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        match s.split_once("..") {
            Some((lo, hi)) => Ok(SizeRange::new(parse(lo)?, parse(hi.trim_start_matches('='))?)),
            None => parse(s).map(SizeRange::exactly),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitnessMode {
    /// Each type is entirely fit or entirely unfit, with equal odds.
    Binary,
    /// Each type's fit share is drawn uniformly from {0, 1/100, ..., 1}.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_types: SizeRange,
    pub n_questions: SizeRange,
    pub answers_per_question: SizeRange,
    pub private_count: SizeRange,
    pub question_limit: SizeRange,
    pub quantity_per_type: u64,
    pub fitness_mode: FitnessMode,
    /// Half-width of each rule's interval around the full-population ratio.
    pub privacy_slack: Rational,
    pub seed: u64,
}

impl Default for GenParams {
    /// The large-instance regime: 2000-4000 types, 150-300 questions.
    fn default() -> Self {
        GenParams {
            n_types: SizeRange::new(2000, 4000),
            n_questions: SizeRange::new(150, 300),
            answers_per_question: SizeRange::new(2, 5),
            private_count: SizeRange::new(4, 9),
            question_limit: SizeRange::new(10, 15),
            quantity_per_type: 100,
            fitness_mode: FitnessMode::Uniform,
            privacy_slack: Rational::new(1, 10),
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidParams(msg));
        for (name, r) in [
            ("n_types", self.n_types),
            ("n_questions", self.n_questions),
            ("answers_per_question", self.answers_per_question),
            ("private_count", self.private_count),
            ("question_limit", self.question_limit),
        ] {
            if r.lo > r.hi {
                return bad(format!("{name} range {r} is empty"));
            }
        }
        if self.n_types.lo == 0 || self.n_questions.lo == 0 {
            return bad("need at least one type and one question".into());
        }
        if self.answers_per_question.lo < 2 || self.answers_per_question.hi > 255 {
            return bad("answers per question must lie in 2..255".into());
        }
        if self.quantity_per_type == 0 {
            return bad("quantity per type must be positive".into());
        }
        if !(Rational::ZERO < self.privacy_slack && self.privacy_slack <= Rational::HALF) {
            return bad(format!("privacy slack {} must lie in (0, 1/2]", self.privacy_slack));
        }
        Ok(())
    }
}

/// Draws a random instance; identical parameters give identical instances.
pub fn generate(params: &GenParams) -> Result<Instance, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_questions = params.n_questions.draw(&mut rng);
    let n_types = params.n_types.draw(&mut rng);
    let limit = params.question_limit.draw(&mut rng).min(n_questions);
    let answer_counts: Vec<usize> =
        (0..n_questions).map(|_| params.answers_per_question.draw(&mut rng)).collect();
    let questions: Vec<Question> = answer_counts
        .iter()
        .enumerate()
        .map(|(i, &k)| Question {
            id: format!("q{i}"),
            answers: (0..k).map(|a| format!("a{a}")).collect(),
        })
        .collect();

    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(n_types);
    let mut types = Vec::with_capacity(n_types);
    let mut collisions = 0;
    while types.len() < n_types {
        let answers: Vec<usize> = answer_counts.iter().map(|&k| rng.gen_range(0..k)).collect();
        if !seen.insert(answers.clone()) {
            collisions += 1;
            if collisions > MAX_COLLISIONS {
                return Err(GenError::TooManyCollisions);
            }
            continue;
        }
        let fitness = match params.fitness_mode {
            FitnessMode::Binary => {
                if rng.gen_bool(0.5) {
                    Rational::ONE
                } else {
                    Rational::ZERO
                }
            }
            FitnessMode::Uniform => Rational::new(rng.gen_range(0..=100), 100),
        };
        types.push(CandidateType { answers, fitness, quantity: params.quantity_per_type });
    }

    let pairs: Vec<(usize, usize)> = answer_counts
        .iter()
        .enumerate()
        .flat_map(|(q, &k)| (0..k).map(move |a| (q, a)))
        .collect();
    let private_count = params.private_count.draw(&mut rng).min(pairs.len());
    let mut chosen: Vec<usize> = sample(&mut rng, pairs.len(), private_count).into_vec();
    chosen.sort_unstable();

    // Rules are filled in after the instance exists so the base ratios can be
    // computed with the population machinery.
    let draft = Instance::new(questions.clone(), types.clone(), Vec::new(), limit, None)?;
    let root = draft.root();
    let rules = chosen
        .into_iter()
        .map(|i| {
            let (question, answer) = pairs[i];
            let base = draft.answer_ratio(&root, question, answer);
            let low = std::cmp::max(Rational::ZERO, base - params.privacy_slack);
            let high = std::cmp::min(Rational::ONE, base + params.privacy_slack);
            PrivacyRule { question, answer, low, high }
        })
        .collect();
    Ok(Instance::new(questions, types, rules, limit, None)?
        .with_meta("generator_seed", params.seed.to_string()))
}
