//! The hiring example: ten candidate types over nationality, programming,
//! experience and education, 900 candidates in total.

use crate::model::{CandidateType, CdpcThresholds, Instance, InterviewTree, PrivacyRule, Question};
use crate::rational::Rational;

pub const NATIONALITY: usize = 0;
pub const PROGRAMMING: usize = 1;
pub const EXPERIENCE: usize = 2;
pub const EDUCATION: usize = 3;

fn questions() -> Vec<Question> {
    let q = |id: &str, answers: &[&str]| Question {
        id: id.to_string(),
        answers: answers.iter().map(|a| a.to_string()).collect(),
    };
    vec![
        q("Nationality", &["local", "foreign"]),
        q("Programming", &["High", "Low"]),
        q("Experience", &["Yes", "No"]),
        q("Education", &["Master's", "Bachelor's", "None"]),
    ]
}

fn candidate_types() -> Vec<CandidateType> {
    // (nationality, programming, experience, education, fit, quantity)
    let rows: [(usize, usize, usize, usize, bool, u64); 10] = [
        (0, 0, 0, 0, true, 100),
        (0, 1, 0, 0, false, 100),
        (0, 1, 1, 0, true, 100),
        (0, 1, 1, 1, false, 100),
        (0, 1, 1, 2, false, 50),
        (1, 0, 0, 1, true, 100),
        (1, 1, 0, 1, false, 100),
        (1, 0, 1, 0, true, 100),
        (1, 0, 1, 1, false, 100),
        (1, 0, 1, 2, false, 50),
    ];
    rows.iter()
        .map(|&(n, p, x, e, fit, quantity)| CandidateType {
            answers: vec![n, p, x, e],
            fitness: if fit { Rational::ONE } else { Rational::ZERO },
            quantity,
        })
        .collect()
}

/// The share of locals must stay within [2/5, 3/5].
pub fn nationality_rule() -> PrivacyRule {
    PrivacyRule {
        question: NATIONALITY,
        answer: 0,
        low: Rational::new(2, 5),
        high: Rational::new(3, 5),
    }
}

/// Optimization form with the nationality rule and at most two questions.
pub fn hiring() -> Instance {
    Instance::new(questions(), candidate_types(), vec![nationality_rule()], 2, None)
        .expect("fixture is valid")
}

/// Decision form used as the fixed positive image of trivial set-cover
/// instances: every leaf must be pure (`x = 0`, `y = 1`).
pub fn hiring_cdpc() -> Instance {
    Instance::new(
        questions(),
        candidate_types(),
        vec![nationality_rule()],
        4,
        Some(CdpcThresholds { x: Rational::ZERO, y: Rational::ONE }),
    )
    .expect("fixture is valid")
}

/// Experience first; Programming after "Yes", Education after "No".
pub fn hiring_tree() -> InterviewTree {
    InterviewTree::ask(
        EXPERIENCE,
        vec![
            (0, InterviewTree::ask(PROGRAMMING, vec![(0, InterviewTree::Leaf), (1, InterviewTree::Leaf)])),
            (
                1,
                InterviewTree::ask(
                    EDUCATION,
                    vec![(0, InterviewTree::Leaf), (1, InterviewTree::Leaf), (2, InterviewTree::Leaf)],
                ),
            ),
        ],
    )
}
