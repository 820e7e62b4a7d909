//! Genetic search over feasible interview trees.
//!
//! Every tree produced here (initial individuals, offspring, mutants) keeps
//! all privacy rules satisfied at every leaf: questions are only placed where
//! each realizable answer stays in bounds, and grafted subtrees are cut back
//! wherever they would not.
//!
//! One generation: the N survivors are paired at random, each pair produces
//! two offspring by independent crossovers, offspring are mutated, and a
//! random-pairing tournament over the 2N pool keeps N. The best individual
//! ever seen is reinserted in place of the worst survivor when the tournament
//! drops it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greedy::{greedy_from, solve_greedy};
use crate::model::{Instance, InterviewTree, PopulationView};
use crate::rational::{Frac, Rational};
use crate::solve::{check_root, SolveError};
use crate::verify::fast_goodness;

#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub mutation_rate: f64,
    /// Question draws allowed per node before the path ends in a leaf.
    pub repair_attempts: usize,
    /// Seed the population with the greedy tree and let half the mutations
    /// graft greedy completions.
    pub reinforced: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            iterations: 400,
            mutation_rate: 0.2,
            repair_attempts: 100,
            reinforced: false,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn reinforced(seed: u64) -> Self {
        GaConfig { reinforced: true, seed, ..Self::default() }
    }

    pub fn basic(seed: u64) -> Self {
        GaConfig { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(GaError::InvalidConfig(format!(
                "population size must be even and at least 2, got {}",
                self.population_size
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(GaError::InvalidConfig(format!(
                "mutation rate must lie in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaRunRecord {
    pub best_tree: InterviewTree,
    pub best_goodness: Rational,
    /// Best-so-far goodness after initialization (iteration 0) and after
    /// every generation.
    pub history: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone)]
struct Individual {
    tree: InterviewTree,
    goodness: Frac,
    nodes: usize,
    id: u64,
}

impl Individual {
    /// Higher goodness, then fewer nodes, then earlier creation.
    fn beats(&self, other: &Individual) -> bool {
        self.goodness
            .cmp(&other.goodness)
            .then(other.nodes.cmp(&self.nodes))
            .then(other.id.cmp(&self.id))
            .is_gt()
    }
}

fn used_mask(inst: &Instance, path: &[usize]) -> Vec<bool> {
    let mut used = vec![false; inst.n_questions()];
    for &q in path {
        used[q] = true;
    }
    used
}

/// Draws up to `attempts` distinct unused questions uniformly and returns the
/// first that splits `pop` with every realizable answer privacy-safe.
fn draw_feasible_question<R: Rng>(
    inst: &Instance,
    pop: &PopulationView,
    used: &[bool],
    attempts: usize,
    rng: &mut R,
) -> Option<(usize, Vec<(usize, PopulationView)>)> {
    let mut pool: Vec<usize> = (0..inst.n_questions()).filter(|&q| !used[q]).collect();
    let draws = attempts.min(pool.len());
    for i in 0..draws {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
        let q = pool[i];
        let children = inst.split(pop, q);
        if children.len() >= 2 && children.iter().all(|(_, c)| inst.privacy_ok(c)) {
            return Some((q, children));
        }
    }
    None
}

fn grow_random<R: Rng>(
    inst: &Instance,
    pop: &PopulationView,
    used: &mut [bool],
    depth_left: usize,
    attempts: usize,
    rng: &mut R,
) -> InterviewTree {
    if depth_left == 0 {
        return InterviewTree::Leaf;
    }
    let Some((q, children)) = draw_feasible_question(inst, pop, used, attempts, rng) else {
        return InterviewTree::Leaf;
    };
    used[q] = true;
    let branches = children
        .iter()
        .map(|(a, c)| (*a, grow_random(inst, c, used, depth_left - 1, attempts, rng)))
        .collect();
    used[q] = false;
    InterviewTree::ask(q, branches)
}

/// Random feasible subtree for `pop`, growing to a depth drawn uniformly from
/// `1..=depth_budget`.
fn random_subtree<R: Rng>(
    inst: &Instance,
    pop: &PopulationView,
    used: &mut [bool],
    depth_budget: usize,
    attempts: usize,
    rng: &mut R,
) -> InterviewTree {
    if depth_budget == 0 {
        return InterviewTree::Leaf;
    }
    let depth = rng.gen_range(1..=depth_budget);
    grow_random(inst, pop, used, depth, attempts, rng)
}

/// A random feasible interview over the whole population. Assumes the full
/// population satisfies the privacy rules.
pub fn random_tree<R: Rng>(
    inst: &Instance,
    depth_budget: usize,
    rng: &mut R,
    config: &GaConfig,
) -> InterviewTree {
    let mut used = vec![false; inst.n_questions()];
    let depth_budget = depth_budget.min(inst.question_limit());
    random_subtree(inst, &inst.root(), &mut used, depth_budget, config.repair_attempts, rng)
}

/// Re-roots `tree` onto `pop`: nodes repeating a question already on the path
/// and nodes that no longer split are contracted to the matching branch,
/// nodes that would break a privacy rule become leaves, and nodes past the
/// depth limit are truncated.
fn graft(
    inst: &Instance,
    tree: &InterviewTree,
    pop: &PopulationView,
    used: &mut [bool],
    depth_left: usize,
) -> InterviewTree {
    let InterviewTree::Ask { question, .. } = tree else {
        return InterviewTree::Leaf;
    };
    let q = *question;
    let follow = |a: usize| tree.branch(a).unwrap_or(&InterviewTree::Leaf);
    if used[q] {
        let a = inst.answer_of(pop.members()[0] as usize, q);
        return graft(inst, follow(a), pop, used, depth_left);
    }
    if depth_left == 0 {
        return InterviewTree::Leaf;
    }
    let children = inst.split(pop, q);
    if children.len() == 1 {
        return graft(inst, follow(children[0].0), pop, used, depth_left);
    }
    if !children.iter().all(|(_, c)| inst.privacy_ok(c)) {
        return InterviewTree::Leaf;
    }
    used[q] = true;
    let branches = children
        .iter()
        .map(|(a, c)| (*a, graft(inst, follow(*a), c, used, depth_left - 1)))
        .collect();
    used[q] = false;
    InterviewTree::ask(q, branches)
}

fn crossover_inner<R: Rng>(
    inst: &Instance,
    a: &Individual,
    b: &Individual,
    rng: &mut R,
    config: &GaConfig,
) -> InterviewTree {
    let fitter = if b.beats(a) { &b.tree } else { &a.tree };
    let limit = inst.question_limit();
    if limit == 0 {
        return fitter.clone();
    }
    let mut used = vec![false; inst.n_questions()];
    for q in a.tree.questions_used().into_iter().chain(b.tree.questions_used()) {
        used[q] = true;
    }
    let root = inst.root();
    let Some((q, children)) =
        draw_feasible_question(inst, &root, &used, config.repair_attempts, rng)
    else {
        return fitter.clone();
    };
    let mut path = used_mask(inst, &[q]);
    let branches = children
        .iter()
        .map(|(ans, c)| {
            let parent = if rng.gen_bool(0.5) { &a.tree } else { &b.tree };
            (*ans, graft(inst, parent, c, &mut path, limit - 1))
        })
        .collect();
    InterviewTree::ask(q, branches)
}

fn individual(inst: &Instance, tree: InterviewTree, id: u64) -> Individual {
    let goodness = fast_goodness(&tree, inst, &inst.root());
    Individual { nodes: tree.node_count(), tree, goodness, id }
}

/// Offspring rooted at a question neither parent uses, each root branch
/// grafted from a randomly chosen parent. Falls back to a copy of the fitter
/// parent when no unused question is feasible at the root.
pub fn crossover<R: Rng>(
    parent_a: &InterviewTree,
    parent_b: &InterviewTree,
    inst: &Instance,
    rng: &mut R,
    config: &GaConfig,
) -> InterviewTree {
    let a = individual(inst, parent_a.clone(), 0);
    let b = individual(inst, parent_b.clone(), 1);
    crossover_inner(inst, &a, &b, rng, config)
}

struct NodeSlot {
    /// Branch positions from the root.
    route: Vec<usize>,
    questions: Vec<usize>,
    population: PopulationView,
}

fn collect_levels(
    inst: &Instance,
    tree: &InterviewTree,
    pop: PopulationView,
    route: &mut Vec<usize>,
    questions: &mut Vec<usize>,
    levels: &mut Vec<Vec<NodeSlot>>,
) {
    let depth = route.len();
    if levels.len() <= depth {
        levels.push(Vec::new());
    }
    levels[depth].push(NodeSlot { route: route.clone(), questions: questions.clone(), population: pop.clone() });
    if let InterviewTree::Ask { question, branches } = tree {
        questions.push(*question);
        for (pos, (a, sub)) in branches.iter().enumerate() {
            if let Some(child) = inst.restrict(&pop, *question, *a) {
                route.push(pos);
                collect_levels(inst, sub, child, route, questions, levels);
                route.pop();
            }
        }
        questions.pop();
    }
}

fn replace_at(tree: &mut InterviewTree, route: &[usize], replacement: InterviewTree) {
    match route.split_first() {
        None => *tree = replacement,
        Some((&pos, rest)) => {
            if let InterviewTree::Ask { branches, .. } = tree {
                replace_at(&mut branches[pos].1, rest, replacement);
            }
        }
    }
}

fn mutate_always<R: Rng>(
    tree: &InterviewTree,
    inst: &Instance,
    rng: &mut R,
    config: &GaConfig,
) -> InterviewTree {
    let mut levels = Vec::new();
    collect_levels(inst, tree, inst.root(), &mut Vec::new(), &mut Vec::new(), &mut levels);
    let depth = rng.gen_range(0..levels.len());
    let slot = &levels[depth][rng.gen_range(0..levels[depth].len())];
    let mut used = used_mask(inst, &slot.questions);
    let depth_left = inst.question_limit().saturating_sub(depth);
    let replacement = if config.reinforced && rng.gen_bool(0.5) {
        greedy_from(inst, &slot.population, &mut used, depth_left)
    } else {
        random_subtree(inst, &slot.population, &mut used, depth_left, config.repair_attempts, rng)
    };
    let mut out = tree.clone();
    replace_at(&mut out, &slot.route, replacement);
    out
}

/// With probability `mutation_rate`, replaces the subtree at a random node
/// (uniform depth, then uniform node at that depth) by a random feasible
/// subtree, or, in reinforced mode with probability 1/2, by the greedy
/// completion from that node.
pub fn mutate<R: Rng>(
    tree: &InterviewTree,
    inst: &Instance,
    rng: &mut R,
    config: &GaConfig,
) -> InterviewTree {
    if config.mutation_rate > 0.0 && rng.gen_bool(config.mutation_rate) {
        mutate_always(tree, inst, rng, config)
    } else {
        tree.clone()
    }
}

pub fn run_ga(inst: &Instance, config: &GaConfig) -> Result<GaRunRecord, GaError> {
    run_ga_observed(inst, config, |_, _| {})
}

/// [`run_ga`] with a callback receiving `(iteration, population)` after each
/// generation, for checking invariants from tests.
pub fn run_ga_observed(
    inst: &Instance,
    config: &GaConfig,
    mut observe: impl FnMut(usize, &[&InterviewTree]),
) -> Result<GaRunRecord, GaError> {
    config.validate()?;
    check_root(inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let limit = inst.question_limit();
    let n = config.population_size;
    let mut next_id = 0u64;

    let mut trees = Vec::with_capacity(n);
    if config.reinforced {
        let greedy = solve_greedy(inst)?;
        let mutated = mutate_always(&greedy, inst, &mut rng, config);
        trees.push(greedy);
        trees.push(mutated);
    }
    while trees.len() < n {
        trees.push(random_tree(inst, limit, &mut rng, config));
    }
    let mut population: Vec<Individual> = trees
        .into_par_iter()
        .enumerate()
        .map(|(i, t)| individual(inst, t, i as u64))
        .collect();
    next_id += n as u64;

    let mut best = population
        .iter()
        .fold(None::<&Individual>, |acc, ind| match acc {
            Some(b) if !ind.beats(b) => Some(b),
            _ => Some(ind),
        })
        .expect("population is non-empty")
        .clone();
    let mut history = vec![(0, best.goodness.to_rational())];
    observe(0, &population.iter().map(|i| &i.tree).collect::<Vec<_>>());

    for iteration in 1..=config.iterations {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut offspring = Vec::with_capacity(n);
        for pair in order.chunks(2) {
            let (a, b) = (&population[pair[0]], &population[pair[1]]);
            for _ in 0..2 {
                let child = crossover_inner(inst, a, b, &mut rng, config);
                offspring.push(mutate(&child, inst, &mut rng, config));
            }
        }
        let first_id = next_id;
        next_id += offspring.len() as u64;
        let offspring: Vec<Individual> = offspring
            .into_par_iter()
            .enumerate()
            .map(|(i, t)| individual(inst, t, first_id + i as u64))
            .collect();

        let mut pool: Vec<Individual> = population.into_iter().chain(offspring).collect();
        pool.shuffle(&mut rng);
        let mut survivors: Vec<Individual> = Vec::with_capacity(n);
        let mut pool = pool.into_iter();
        while let (Some(x), Some(y)) = (pool.next(), pool.next()) {
            survivors.push(if y.beats(&x) { y } else { x });
        }

        for ind in &survivors {
            if ind.beats(&best) {
                best = ind.clone();
            }
        }
        if !survivors.iter().any(|i| i.id == best.id) {
            let worst = (0..survivors.len())
                .reduce(|w, i| if survivors[w].beats(&survivors[i]) { i } else { w })
                .expect("survivors are non-empty");
            survivors[worst] = best.clone();
        }
        population = survivors;
        history.push((iteration, best.goodness.to_rational()));
        observe(iteration, &population.iter().map(|i| &i.tree).collect::<Vec<_>>());
    }

    Ok(GaRunRecord { best_goodness: best.goodness.to_rational(), best_tree: best.tree, history })
}
