//! Pieces shared by the exact, greedy and genetic solvers.

use thiserror::Error;

use crate::model::{Instance, PopulationView, RuleViolation};
use crate::rational::Frac;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("the full population already violates {} privacy rule(s); no feasible interview exists", .0.len())]
    RootInfeasible(Vec<RuleViolation>),
    #[error("instance has no decision thresholds")]
    MissingThresholds,
}

pub(crate) fn check_root(inst: &Instance) -> Result<(), SolveError> {
    let violations = inst.root_violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SolveError::RootInfeasible(violations))
    }
}

/// One candidate question at a node, scored by the goodness the interview
/// would have if it stopped right after asking it.
pub(crate) struct ScoredQuestion {
    pub question: usize,
    pub score: Frac,
    pub children: Vec<(usize, PopulationView)>,
}

impl ScoredQuestion {
    pub fn is_vacuous(&self) -> bool {
        self.children.len() < 2
    }
}

/// Scores every question in `candidates` at `pop` and sorts them best first:
/// descending score, single-answer (vacuous) splits after real splits of the
/// same score, then declaration order.
pub(crate) fn ranked_questions(
    inst: &Instance,
    pop: &PopulationView,
    candidates: impl Iterator<Item = usize>,
) -> Vec<ScoredQuestion> {
    let parent = inst.extreme_frac(pop);
    let mut scored: Vec<ScoredQuestion> = candidates
        .map(|question| {
            let children = inst.split(pop, question);
            let score = if children.len() < 2 {
                parent
            } else {
                children.iter().map(|(_, c)| inst.extreme_frac(c)).min().unwrap_or(parent)
            };
            ScoredQuestion { question, score, children }
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.is_vacuous().cmp(&b.is_vacuous()))
            .then(a.question.cmp(&b.question))
    });
    scored
}
