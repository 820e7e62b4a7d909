//! One-step lookahead tree builder.
//!
//! At each node the unused questions are ranked by the goodness the interview
//! would have if it ended right after them; the first question whose every
//! realizable answer keeps all privacy rules satisfied is asked. When no
//! question is safe the path ends.

use crate::model::{Instance, InterviewTree, PopulationView};
use crate::solve::{check_root, ranked_questions, SolveError};

pub fn solve_greedy(inst: &Instance) -> Result<InterviewTree, SolveError> {
    check_root(inst)?;
    let mut used = vec![false; inst.n_questions()];
    Ok(greedy_from(inst, &inst.root(), &mut used, inst.question_limit()))
}

/// Greedy completion of the subtree rooted at `pop`. `used` marks questions
/// already asked on the path (restored before returning).
pub fn greedy_from(
    inst: &Instance,
    pop: &PopulationView,
    used: &mut [bool],
    depth_left: usize,
) -> InterviewTree {
    if depth_left == 0 {
        return InterviewTree::Leaf;
    }
    let remaining = (0..inst.n_questions()).filter(|&q| !used[q]);
    let ranked = ranked_questions(inst, pop, remaining);
    let Some(choice) = ranked
        .into_iter()
        .find(|s| s.children.iter().all(|(_, c)| inst.privacy_ok(c)))
    else {
        return InterviewTree::Leaf;
    };
    used[choice.question] = true;
    let branches = choice
        .children
        .iter()
        .map(|(a, child)| (*a, greedy_from(inst, child, used, depth_left - 1)))
        .collect();
    used[choice.question] = false;
    InterviewTree::ask(choice.question, branches)
}
