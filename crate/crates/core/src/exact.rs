//! Exhaustive max-min interview search with alpha-beta pruning.
//!
//! The value of a node is the better of stopping there (the population's
//! `max(fit, 1 - fit)`) and asking some feasible unused question, where a
//! question is worth the minimum value over its realizable answers. Only
//! questions that actually split the population are considered; asking a
//! question every remaining candidate answers identically never helps.
//!
//! Max layer: the stop option seeds alpha, then questions are tried in
//! descending one-step score. Min layer: answers in ascending population size.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::greedy::solve_greedy;
use crate::model::{Instance, InterviewTree, PopulationView};
use crate::rational::{Frac, Rational};
use crate::solve::{check_root, ranked_questions, SolveError};
use crate::verify::fast_goodness;

/// Optional limits on a search. Caps, when present, must be positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchBudget {
    pub time_cap: Option<Duration>,
    pub node_cap: Option<u64>,
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Alpha-beta cutoffs. Disabling them does not change the value found.
    pub pruning: bool,
    /// Transposition table keyed by (population, remaining depth).
    pub memo: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { pruning: true, memo: false }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub tree: InterviewTree,
    pub goodness: Rational,
    /// False when a budget cap fired; the tree is then the best found so far.
    pub optimal: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone)]
pub struct CdpcDecision {
    pub accepted: bool,
    pub witness: Option<InterviewTree>,
    pub nodes: u64,
}

/// Above every attainable value.
const TOP: Frac = Frac { num: 2, den: 1 };

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Exact,
    Lower,
    Upper,
}

struct MemoEntry {
    value: Frac,
    bound: Bound,
    tree: Option<InterviewTree>,
}

type MemoKey = (Vec<u32>, usize);

struct Search<'a> {
    inst: &'a Instance,
    options: ExactOptions,
    budget: SearchBudget,
    started: Instant,
    nodes: u64,
    exhausted: bool,
    memo: HashMap<MemoKey, MemoEntry>,
    failures: HashMap<Vec<u32>, usize>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, options: ExactOptions, budget: SearchBudget) -> Self {
        Search {
            inst,
            options,
            budget,
            started: Instant::now(),
            nodes: 0,
            exhausted: false,
            memo: HashMap::new(),
            failures: HashMap::new(),
        }
    }

    fn tick(&mut self) {
        self.nodes += 1;
        if let Some(cap) = self.budget.node_cap {
            if self.nodes > cap {
                self.exhausted = true;
            }
        }
        if let Some(cap) = self.budget.time_cap {
            if self.nodes.is_multiple_of(256) && self.started.elapsed() > cap {
                self.exhausted = true;
            }
        }
    }

    /// Splitting, privacy-feasible questions at `pop`, best first, with their
    /// children in ascending population size.
    fn options_at(&self, pop: &PopulationView, used: &[bool]) -> Vec<(usize, Vec<(usize, PopulationView)>)> {
        let inst = self.inst;
        ranked_questions(inst, pop, (0..inst.n_questions()).filter(|&q| !used[q]))
            .into_iter()
            .filter(|s| !s.is_vacuous())
            .filter(|s| s.children.iter().all(|(_, c)| inst.privacy_ok(c)))
            .map(|s| {
                let mut children = s.children;
                children.sort_by_key(|(a, c)| (c.total_quantity(), *a));
                (s.question, children)
            })
            .collect()
    }

    /// Fail-soft alpha-beta. The returned tree, when present, has goodness at
    /// least the returned value; it is always present when the value exceeds
    /// `alpha`.
    fn max_node(
        &mut self,
        pop: &PopulationView,
        used: &mut [bool],
        depth_left: usize,
        mut alpha: Frac,
        beta: Frac,
    ) -> (Frac, Option<InterviewTree>) {
        self.tick();
        let pruning = self.options.pruning;
        let stop = self.inst.extreme_frac(pop);
        if depth_left == 0 || (pruning && (stop >= beta || stop == Frac::ONE)) {
            return (stop, Some(InterviewTree::Leaf));
        }

        let key = if self.options.memo {
            let key = (pop.members().to_vec(), depth_left);
            if let Some(e) = self.memo.get(&key) {
                let usable = match e.bound {
                    Bound::Exact => true,
                    Bound::Lower => e.value >= beta,
                    Bound::Upper => e.value <= alpha,
                };
                if usable {
                    return (e.value, e.tree.clone());
                }
            }
            Some(key)
        } else {
            None
        };
        let alpha_in = alpha;

        let mut best = stop;
        let mut best_tree = Some(InterviewTree::Leaf);
        if pruning {
            alpha = alpha.max(best);
        }
        for (question, children) in self.options_at(pop, used) {
            if self.exhausted {
                break;
            }
            used[question] = true;
            let mut worst = TOP;
            let mut subtrees = Vec::with_capacity(children.len());
            let mut complete = true;
            for (answer, child) in &children {
                let (child_alpha, child_beta) =
                    if pruning { (alpha, beta.min(worst)) } else { (Frac::ZERO, TOP) };
                let (v, t) = self.max_node(child, used, depth_left - 1, child_alpha, child_beta);
                if self.exhausted {
                    complete = false;
                    break;
                }
                worst = worst.min(v);
                match t {
                    Some(t) => subtrees.push((*answer, t)),
                    None => complete = false,
                }
                if pruning && worst <= alpha {
                    complete = false;
                    break;
                }
            }
            used[question] = false;
            if self.exhausted {
                break;
            }
            if worst > best {
                best = worst;
                best_tree = complete.then(|| InterviewTree::ask(question, subtrees));
                if pruning {
                    alpha = alpha.max(best);
                    if best >= beta || best == Frac::ONE {
                        break;
                    }
                }
            }
        }

        if let Some(key) = key {
            if !self.exhausted {
                let bound = if !pruning {
                    Bound::Exact
                } else if best <= alpha_in {
                    Bound::Upper
                } else if best >= beta {
                    Bound::Lower
                } else {
                    Bound::Exact
                };
                self.memo.insert(key, MemoEntry { value: best, bound, tree: best_tree.clone() });
            }
        }
        (best, best_tree)
    }

    /// AND-OR search for an interview whose every leaf is accepted.
    fn witness(
        &mut self,
        pop: &PopulationView,
        used: &mut [bool],
        depth_left: usize,
        accept: &dyn Fn(&Instance, &PopulationView) -> bool,
    ) -> Option<InterviewTree> {
        self.tick();
        if accept(self.inst, pop) {
            return Some(InterviewTree::Leaf);
        }
        if depth_left == 0 || self.exhausted {
            return None;
        }
        if self.options.memo {
            if let Some(&d) = self.failures.get(pop.members()) {
                if d >= depth_left {
                    return None;
                }
            }
        }
        for (question, children) in self.options_at(pop, used) {
            used[question] = true;
            let mut subtrees = Vec::with_capacity(children.len());
            for (answer, child) in &children {
                match self.witness(child, used, depth_left - 1, accept) {
                    Some(t) => subtrees.push((*answer, t)),
                    None => break,
                }
            }
            used[question] = false;
            if subtrees.len() == children.len() {
                return Some(InterviewTree::ask(question, subtrees));
            }
            if self.exhausted {
                return None;
            }
        }
        if self.options.memo && !self.exhausted {
            let entry = self.failures.entry(pop.members().to_vec()).or_insert(0);
            *entry = (*entry).max(depth_left);
        }
        None
    }
}

pub fn solve_exact(inst: &Instance, budget: SearchBudget) -> Result<ExactSolution, SolveError> {
    solve_exact_with(inst, budget, ExactOptions::default())
}

pub fn solve_exact_with(
    inst: &Instance,
    budget: SearchBudget,
    options: ExactOptions,
) -> Result<ExactSolution, SolveError> {
    check_root(inst)?;
    let mut search = Search::new(inst, options, budget);
    let root = inst.root();
    let mut used = vec![false; inst.n_questions()];
    let (value, tree) = search.max_node(&root, &mut used, inst.question_limit(), Frac::ZERO, TOP);
    if search.exhausted {
        let mut tree = tree.unwrap_or(InterviewTree::Leaf);
        let mut goodness = fast_goodness(&tree, inst, &root);
        let greedy = solve_greedy(inst)?;
        let greedy_goodness = fast_goodness(&greedy, inst, &root);
        if greedy_goodness > goodness {
            tree = greedy;
            goodness = greedy_goodness;
        }
        return Ok(ExactSolution {
            tree,
            goodness: goodness.to_rational(),
            optimal: false,
            nodes: search.nodes,
        });
    }
    let tree = tree.expect("root value always exceeds the initial alpha");
    debug_assert!(fast_goodness(&tree, inst, &root) == value);
    Ok(ExactSolution { tree, goodness: value.to_rational(), optimal: true, nodes: search.nodes })
}

/// Searches for an interview whose every leaf has fit ratio `<= x` or
/// `>= y` while every privacy rule holds, stopping at the first witness.
pub fn decide_cdpc(inst: &Instance) -> Result<CdpcDecision, SolveError> {
    decide_cdpc_with(inst, ExactOptions::default())
}

pub fn decide_cdpc_with(inst: &Instance, options: ExactOptions) -> Result<CdpcDecision, SolveError> {
    let t = inst.cdpc().ok_or(SolveError::MissingThresholds)?;
    if !inst.root_violations().is_empty() {
        return Ok(CdpcDecision { accepted: false, witness: None, nodes: 0 });
    }
    let x = Frac::from_rational(t.x);
    let y = Frac::from_rational(t.y);
    let accept = move |inst: &Instance, pop: &PopulationView| {
        let fit = inst.fit_frac(pop);
        fit <= x || fit >= y
    };
    let mut search = Search::new(inst, options, SearchBudget::unlimited());
    let mut used = vec![false; inst.n_questions()];
    let witness = search.witness(&inst.root(), &mut used, inst.question_limit(), &accept);
    Ok(CdpcDecision { accepted: witness.is_some(), witness, nodes: search.nodes })
}

/// Like [`decide_cdpc`] but for an arbitrary goodness target: is there a
/// feasible interview with goodness at least `target`?
pub fn achieves_goodness(inst: &Instance, target: Rational) -> Result<Option<InterviewTree>, SolveError> {
    check_root(inst)?;
    let target = Frac::from_rational(target);
    let accept = move |inst: &Instance, pop: &PopulationView| inst.extreme_frac(pop) >= target;
    let mut search = Search::new(inst, ExactOptions::default(), SearchBudget::unlimited());
    let mut used = vec![false; inst.n_questions()];
    Ok(search.witness(&inst.root(), &mut used, inst.question_limit(), &accept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{CandidateType, CdpcThresholds, PrivacyRule, Question};
    use crate::reduction::{transform_sc, ScInstance};
    use crate::verify::{decide_cdpc_tree, goodness, verify_gcopc};

    fn sc_example() -> ScInstance {
        ScInstance::new(&["1", "2", "3", "4"], &[vec!["1", "2", "4"], vec!["1", "3"], vec!["2"]], 2)
            .unwrap()
    }

    #[test]
    fn hiring_example_reaches_one() {
        let inst = fixtures::hiring();
        let sol = solve_exact(&inst, SearchBudget::unlimited()).unwrap();
        assert!(sol.optimal);
        assert_eq!(sol.goodness, Rational::ONE);
        let report = verify_gcopc(&sol.tree, &inst).unwrap();
        assert!(report.feasible);
        assert_eq!(report.goodness, Rational::ONE);
    }

    #[test]
    fn single_type_needs_no_questions() {
        let q = Question { id: "q".into(), answers: vec!["a".into(), "b".into()] };
        let t = CandidateType { answers: vec![1], fitness: Rational::new(1, 3), quantity: 7 };
        let inst = Instance::new(vec![q], vec![t], vec![], 1, None).unwrap();
        let sol = solve_exact(&inst, SearchBudget::unlimited()).unwrap();
        assert_eq!(sol.tree, InterviewTree::Leaf);
        assert_eq!(sol.goodness, Rational::new(2, 3));
    }

    #[test]
    fn options_do_not_change_the_value() {
        let inst = fixtures::hiring_cdpc();
        let inst = crate::reduction::cdpc_to_gcopc(&inst).unwrap();
        let reference = solve_exact(&inst, SearchBudget::unlimited()).unwrap().goodness;
        for (pruning, memo) in [(false, false), (false, true), (true, true)] {
            let sol = solve_exact_with(&inst, SearchBudget::unlimited(), ExactOptions { pruning, memo })
                .unwrap();
            assert_eq!(sol.goodness, reference, "pruning {pruning}, memo {memo}");
            assert_eq!(goodness(&sol.tree, &inst).unwrap(), reference);
        }
    }

    #[test]
    fn exhausted_budget_is_flagged() {
        let inst = transform_sc(&sc_example());
        let inst = crate::reduction::cdpc_to_gcopc(&inst).unwrap();
        let sol = solve_exact(&inst, SearchBudget { time_cap: None, node_cap: Some(1) }).unwrap();
        assert!(!sol.optimal);
        assert_eq!(goodness(&sol.tree, &inst).unwrap(), sol.goodness);
        assert!(verify_gcopc(&sol.tree, &inst).unwrap().feasible);
        let greedy = goodness(&solve_greedy(&inst).unwrap(), &inst).unwrap();
        assert!(sol.goodness >= greedy);
    }

    #[test]
    fn set_cover_example_is_accepted() {
        let inst = transform_sc(&sc_example());
        for memo in [false, true] {
            let d = decide_cdpc_with(&inst, ExactOptions { pruning: true, memo }).unwrap();
            assert!(d.accepted);
            let witness = d.witness.unwrap();
            assert!(decide_cdpc_tree(&witness, &inst).unwrap());
            // Any witness is a chain over a cover of size two.
            assert_eq!(witness.depth(), 2);
        }
    }

    #[test]
    fn uncoverable_budget_is_rejected() {
        let sc = ScInstance::new(&["1", "2"], &[vec!["1"], vec!["2"]], 1).unwrap();
        let d = decide_cdpc(&transform_sc(&sc)).unwrap();
        assert!(!d.accepted);
        assert!(d.witness.is_none());
    }

    #[test]
    fn leaf_that_already_qualifies_is_a_witness() {
        let base = fixtures::hiring();
        let inst = Instance::new(
            base.questions().to_vec(),
            base.candidate_types().to_vec(),
            vec![],
            2,
            Some(CdpcThresholds { x: Rational::HALF, y: Rational::ONE }),
        )
        .unwrap();
        let d = decide_cdpc(&inst).unwrap();
        assert_eq!(d.witness, Some(InterviewTree::Leaf));
        assert_eq!(d.nodes, 1);
    }

    #[test]
    fn infeasible_root_rejects_the_decision() {
        let base = fixtures::hiring_cdpc();
        let strict = PrivacyRule { high: Rational::new(2, 5), ..fixtures::nationality_rule() };
        let inst = Instance::new(
            base.questions().to_vec(),
            base.candidate_types().to_vec(),
            vec![strict],
            4,
            base.cdpc(),
        )
        .unwrap();
        assert!(!decide_cdpc(&inst).unwrap().accepted);
        assert!(matches!(
            solve_exact(&inst, SearchBudget::unlimited()),
            Err(SolveError::RootInfeasible(_))
        ));
        assert!(matches!(decide_cdpc(&fixtures::hiring()), Err(SolveError::MissingThresholds)));
    }

    #[test]
    fn goodness_targets() {
        let inst = fixtures::hiring();
        let tree = achieves_goodness(&inst, Rational::ONE).unwrap().unwrap();
        assert_eq!(goodness(&tree, &inst).unwrap(), Rational::ONE);
        let one_question = inst.with_question_limit(1).unwrap();
        let best = solve_exact(&one_question, SearchBudget::unlimited()).unwrap().goodness;
        assert!(achieves_goodness(&one_question, best).unwrap().is_some());
        let above = best + Rational::new(1, 1000);
        assert!(above > Rational::ONE || achieves_goodness(&one_question, above).unwrap().is_none());
    }
}
