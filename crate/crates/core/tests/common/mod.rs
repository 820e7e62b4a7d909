//! Shared fixtures and independent oracles for the integration tests. The
//! oracles recompute every ratio from the raw candidate table with big
//! rationals and search exhaustively, without pruning or shared helpers.
#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use privtree::model::{
    CandidateType, CdpcThresholds, Instance, InterviewTree, PopulationView, PrivacyRule, Question,
};
use privtree::rational::Rational;
use proptest::prelude::*;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(r.numer()), BigInt::from(r.denom()))
}

pub fn big_int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Members as plain type indices.
pub type Group = Vec<usize>;

pub fn total(inst: &Instance, g: &Group) -> u64 {
    g.iter().map(|&i| inst.candidate_types()[i].quantity).sum()
}

pub fn fit(inst: &Instance, g: &Group) -> BigRational {
    let ts = inst.candidate_types();
    let weighted = g
        .iter()
        .fold(BigRational::zero(), |acc, &i| acc + big_int(ts[i].quantity) * big(ts[i].fitness));
    weighted / big_int(total(inst, g))
}

pub fn extreme(inst: &Instance, g: &Group) -> BigRational {
    let f = fit(inst, g);
    let c = BigRational::one() - &f;
    if f > c {
        f
    } else {
        c
    }
}

pub fn ratio(inst: &Instance, g: &Group, question: usize, answer: usize) -> BigRational {
    let ts = inst.candidate_types();
    let hits: u64 = g.iter().filter(|&&i| ts[i].answers[question] == answer).map(|&i| ts[i].quantity).sum();
    big_int(hits) / big_int(total(inst, g))
}

pub fn safe(inst: &Instance, g: &Group) -> bool {
    inst.privacy_rules().iter().all(|r| {
        let v = ratio(inst, g, r.question, r.answer);
        big(r.low) <= v && v <= big(r.high)
    })
}

/// Non-empty parts of `g` by answer to `q`, in answer order.
pub fn parts(inst: &Instance, g: &Group, q: usize) -> Vec<(usize, Group)> {
    let ts = inst.candidate_types();
    (0..inst.questions()[q].answers.len())
        .map(|a| (a, g.iter().copied().filter(|&i| ts[i].answers[q] == a).collect::<Group>()))
        .filter(|(_, p)| !p.is_empty())
        .collect()
}

pub fn everyone(inst: &Instance) -> Group {
    (0..inst.n_types()).collect()
}

fn best_value(inst: &Instance, g: &Group, used: &mut Vec<bool>, depth: usize) -> BigRational {
    let mut best = extreme(inst, g);
    if depth == 0 {
        return best;
    }
    for q in 0..inst.n_questions() {
        if used[q] {
            continue;
        }
        let ps = parts(inst, g, q);
        if !ps.iter().all(|(_, p)| safe(inst, p)) {
            continue;
        }
        used[q] = true;
        let worst = ps
            .iter()
            .map(|(_, p)| best_value(inst, p, used, depth - 1))
            .min()
            .expect("at least one part");
        used[q] = false;
        if worst > best {
            best = worst;
        }
    }
    best
}

/// Optimal goodness by exhaustive max-min search.
pub fn oracle_optimum(inst: &Instance) -> BigRational {
    best_value(inst, &everyone(inst), &mut vec![false; inst.n_questions()], inst.question_limit())
}

fn exists(
    inst: &Instance,
    g: &Group,
    used: &mut Vec<bool>,
    depth: usize,
    accept: &dyn Fn(&Group) -> bool,
) -> bool {
    if accept(g) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    for q in 0..inst.n_questions() {
        if used[q] {
            continue;
        }
        let ps = parts(inst, g, q);
        if !ps.iter().all(|(_, p)| safe(inst, p)) {
            continue;
        }
        used[q] = true;
        let ok = ps.iter().all(|(_, p)| exists(inst, p, used, depth - 1, accept));
        used[q] = false;
        if ok {
            return true;
        }
    }
    false
}

/// Whether a tree meeting the decision thresholds exists.
pub fn oracle_decide(inst: &Instance) -> bool {
    let t = inst.cdpc().expect("decision instance");
    let root = everyone(inst);
    if !safe(inst, &root) {
        return false;
    }
    let (x, y) = (big(t.x), big(t.y));
    let accept = |g: &Group| {
        let f = fit(inst, g);
        f <= x || f >= y
    };
    exists(inst, &root, &mut vec![false; inst.n_questions()], inst.question_limit(), &accept)
}

/// Every node of a tree with its population, pre-order.
pub fn node_groups(inst: &Instance, tree: &InterviewTree) -> Vec<(Group, Vec<Group>)> {
    fn go(
        inst: &Instance,
        tree: &InterviewTree,
        g: Group,
        out: &mut Vec<(Group, Vec<Group>)>,
    ) {
        match tree {
            InterviewTree::Leaf => out.push((g, Vec::new())),
            InterviewTree::Ask { question, .. } => {
                let ps = parts(inst, &g, *question);
                out.push((g, ps.iter().map(|(_, p)| p.clone()).collect()));
                for (a, p) in ps {
                    go(inst, tree.branch(a).unwrap_or(&InterviewTree::Leaf), p, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(inst, tree, everyone(inst), &mut out);
    out
}

pub fn members(pop: &PopulationView) -> Group {
    pop.member_indices().collect()
}

/// Parameters for a small random instance.
#[derive(Debug, Clone)]
pub struct Shape {
    pub answers: Vec<usize>,
    pub patterns: Vec<Vec<usize>>,
    pub fitness: Vec<i64>,
    pub fitness_den: i64,
    pub quantities: Vec<u64>,
    pub rules: Vec<(usize, usize, i64)>,
    pub limit: usize,
}

fn all_patterns(answers: &[usize]) -> Vec<Vec<usize>> {
    answers.iter().fold(vec![Vec::new()], |acc, &k| {
        acc.into_iter()
            .flat_map(|p| {
                (0..k).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect()
    })
}

/// Small instances: 1-4 questions with 2-3 answers, up to `max_types`
/// distinct types, rules centred on the full-population ratio so that the
/// root is always feasible. `binary` restricts fitness to 0/1.
pub fn shape_strategy(max_types: usize, binary: bool) -> impl Strategy<Value = Shape> {
    proptest::collection::vec(2usize..=3, 1..=4).prop_flat_map(move |answers| {
        let pats = all_patterns(&answers);
        let n_max = max_types.min(pats.len());
        let m = answers.len();
        let den = if binary { 1 } else { 4 };
        (
            Just(answers.clone()),
            proptest::sample::subsequence(pats, 1..=n_max),
            proptest::collection::vec(0..=den, n_max),
            proptest::collection::vec(1u64..=20, n_max),
            proptest::collection::vec((0..m, 0usize..3, 1i64..=5), 0..=2),
            0..=m,
        )
            .prop_map(move |(answers, patterns, fitness, quantities, rules, limit)| {
                let rules = rules
                    .into_iter()
                    .map(|(q, a, s)| (q, a % answers[q], s))
                    .collect();
                Shape { answers, patterns, fitness, fitness_den: den, quantities, rules, limit }
            })
    })
}

pub fn build(shape: &Shape, cdpc: Option<CdpcThresholds>) -> Instance {
    let questions: Vec<Question> = shape
        .answers
        .iter()
        .enumerate()
        .map(|(i, &k)| Question {
            id: format!("q{i}"),
            answers: (0..k).map(|a| format!("a{a}")).collect(),
        })
        .collect();
    let types: Vec<CandidateType> = shape
        .patterns
        .iter()
        .enumerate()
        .map(|(i, p)| CandidateType {
            answers: p.clone(),
            fitness: Rational::new(shape.fitness[i], shape.fitness_den),
            quantity: shape.quantities[i],
        })
        .collect();
    let bare = Instance::new(questions.clone(), types.clone(), vec![], shape.limit, None).unwrap();
    let root = bare.root();
    let rules = shape
        .rules
        .iter()
        .map(|&(question, answer, slack)| {
            let base = bare.answer_ratio(&root, question, answer);
            let s = Rational::new(slack, 10);
            PrivacyRule {
                question,
                answer,
                low: std::cmp::max(Rational::ZERO, base - s),
                high: std::cmp::min(Rational::ONE, base + s),
            }
        })
        .collect();
    Instance::new(questions, types, rules, shape.limit, cdpc).unwrap()
}

/// An arbitrary well-formed tree, feasible or not: a random question per
/// node, never repeated on a path, depth within the limit.
pub fn arbitrary_tree(inst: &Instance, choices: &[usize]) -> InterviewTree {
    fn go(
        inst: &Instance,
        choices: &[usize],
        cursor: &mut usize,
        used: &mut Vec<bool>,
        depth: usize,
    ) -> InterviewTree {
        let pick = choices.get(*cursor).copied().unwrap_or(0);
        *cursor += 1;
        let free: Vec<usize> = (0..inst.n_questions()).filter(|&q| !used[q]).collect();
        if depth == 0 || free.is_empty() || pick % 3 == 0 {
            return InterviewTree::Leaf;
        }
        let q = free[pick % free.len()];
        used[q] = true;
        let branches = (0..inst.questions()[q].answers.len())
            .map(|a| (a, go(inst, choices, cursor, used, depth - 1)))
            .collect();
        used[q] = false;
        InterviewTree::ask(q, branches)
    }
    go(inst, choices, &mut 0, &mut vec![false; inst.n_questions()], inst.question_limit())
}
