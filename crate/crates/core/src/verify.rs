//! Polynomial-time certificate checking: enumerate the realizable leaves of
//! an interview, check privacy at the leaves and compute goodness.
//!
//! Checking privacy at the leaves is enough: a parent's ratio for any answer
//! is the quantity-weighted average of its children's ratios, so it lies
//! inside any interval that contains all of them.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Instance, InterviewTree, PopulationView};
use crate::rational::{Frac, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("tree references undeclared question #{0}")]
    UndeclaredQuestion(usize),
    #[error("tree references undeclared answer #{answer} of question #{question}")]
    UndeclaredAnswer { question: usize, answer: usize },
    #[error("question #{question} has two branches for answer #{answer}")]
    DuplicateBranch { question: usize, answer: usize },
    #[error("question #{0} is asked twice on one path")]
    RepeatedQuestion(usize),
    #[error("tree depth {depth} exceeds the question limit {limit}")]
    TooDeep { depth: usize, limit: usize },
    #[error("instance has no decision thresholds")]
    MissingThresholds,
}

pub type Path = Vec<(usize, usize)>;

#[derive(Debug, Clone)]
pub struct LeafRecord {
    pub path: Path,
    pub population: PopulationView,
    pub fit: Rational,
    /// `max(fit, 1 - fit)`.
    pub extreme: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafViolation {
    pub path: Path,
    pub rule: usize,
    pub ratio: Rational,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub feasible: bool,
    pub goodness: Rational,
    pub leaf_count: usize,
    /// Every failing (leaf, rule) pair, leaves in lexicographic path order.
    pub violations: Vec<LeafViolation>,
    pub depth: usize,
    /// Ask nodes whose population answers the question in only one way.
    pub redundant_nodes: usize,
}

impl VerifyReport {
    /// The first offending rule of each violating leaf.
    pub fn first_per_leaf(&self) -> Vec<&LeafViolation> {
        let mut out: Vec<&LeafViolation> = Vec::new();
        for v in &self.violations {
            if out.last().is_none_or(|last| last.path != v.path) {
                out.push(v);
            }
        }
        out
    }
}

fn check_structure(
    tree: &InterviewTree,
    inst: &Instance,
    asked: &mut Vec<usize>,
) -> Result<(), VerifyError> {
    if let InterviewTree::Ask { question, branches } = tree {
        let q = *question;
        if q >= inst.n_questions() {
            return Err(VerifyError::UndeclaredQuestion(q));
        }
        if asked.contains(&q) {
            return Err(VerifyError::RepeatedQuestion(q));
        }
        for (i, (a, _)) in branches.iter().enumerate() {
            if *a >= inst.n_answers(q) {
                return Err(VerifyError::UndeclaredAnswer { question: q, answer: *a });
            }
            if i > 0 && branches[i - 1].0 == *a {
                return Err(VerifyError::DuplicateBranch { question: q, answer: *a });
            }
        }
        asked.push(q);
        for (_, sub) in branches {
            check_structure(sub, inst, asked)?;
        }
        asked.pop();
    }
    Ok(())
}

/// Structural validation shared by every verifier entry point.
pub fn validate_tree(tree: &InterviewTree, inst: &Instance) -> Result<(), VerifyError> {
    check_structure(tree, inst, &mut Vec::new())?;
    let depth = tree.depth();
    if depth > inst.question_limit() {
        return Err(VerifyError::TooDeep { depth, limit: inst.question_limit() });
    }
    Ok(())
}

struct Walk<'a> {
    inst: &'a Instance,
    leaves: Vec<LeafRecord>,
    redundant: usize,
}

impl Walk<'_> {
    fn visit(
        &mut self,
        tree: &InterviewTree,
        pop: PopulationView,
        path: &mut Path,
    ) -> Result<(), VerifyError> {
        match tree {
            InterviewTree::Leaf => {
                let fit = self.inst.fit_ratio(&pop);
                self.leaves.push(LeafRecord {
                    path: path.clone(),
                    extreme: fit.extreme(),
                    fit,
                    population: pop,
                });
            }
            InterviewTree::Ask { question, .. } => {
                let children = self.inst.split(&pop, *question);
                if children.len() == 1 {
                    self.redundant += 1;
                }
                for (answer, child) in children {
                    let sub = tree.branch(answer).unwrap_or(&InterviewTree::Leaf);
                    path.push((*question, answer));
                    self.visit(sub, child, path)?;
                    path.pop();
                }
            }
        }
        Ok(())
    }
}

fn walk(tree: &InterviewTree, inst: &Instance) -> Result<(Vec<LeafRecord>, usize), VerifyError> {
    validate_tree(tree, inst)?;
    let mut w = Walk { inst, leaves: Vec::new(), redundant: 0 };
    w.visit(tree, inst.root(), &mut Vec::new())?;
    Ok((w.leaves, w.redundant))
}

/// One record per realizable leaf, in lexicographic path order. Branches
/// whose population would be empty contribute nothing; a realizable answer
/// without a branch ends the interview there.
pub fn leaves(tree: &InterviewTree, inst: &Instance) -> Result<Vec<LeafRecord>, VerifyError> {
    walk(tree, inst).map(|(l, _)| l)
}

/// Minimum over leaves of `max(fit, 1 - fit)`.
pub fn goodness(tree: &InterviewTree, inst: &Instance) -> Result<Rational, VerifyError> {
    let leaves = leaves(tree, inst)?;
    Ok(leaves.iter().map(|l| l.extreme).min().unwrap_or(Rational::ONE))
}

/// Full certificate check for the optimization variant.
pub fn verify_gcopc(tree: &InterviewTree, inst: &Instance) -> Result<VerifyReport, VerifyError> {
    let (leaves, redundant_nodes) = walk(tree, inst)?;
    let mut violations = Vec::new();
    for leaf in &leaves {
        for v in inst.privacy_check(&leaf.population).violations {
            violations.push(LeafViolation { path: leaf.path.clone(), rule: v.rule, ratio: v.ratio });
        }
    }
    Ok(VerifyReport {
        feasible: violations.is_empty(),
        goodness: leaves.iter().map(|l| l.extreme).min().unwrap_or(Rational::ONE),
        leaf_count: leaves.len(),
        violations,
        depth: tree.depth(),
        redundant_nodes,
    })
}

/// Decision-variant check: feasible, and every leaf has fit `<= x` or `>= y`
/// (both bounds inclusive).
pub fn decide_cdpc_tree(tree: &InterviewTree, inst: &Instance) -> Result<bool, VerifyError> {
    let t = inst.cdpc().ok_or(VerifyError::MissingThresholds)?;
    let report = verify_gcopc(tree, inst)?;
    if !report.feasible {
        return Ok(false);
    }
    Ok(leaves(tree, inst)?.iter().all(|l| l.fit <= t.x || l.fit >= t.y))
}

/// Privacy checked at every node rather than only at the leaves. Kept as an
/// independent route for cross-checking the leaf-only verifier.
pub fn privacy_ok_at_every_node(tree: &InterviewTree, inst: &Instance) -> Result<bool, VerifyError> {
    fn go(tree: &InterviewTree, inst: &Instance, pop: &PopulationView) -> bool {
        if !inst.privacy_ok(pop) {
            return false;
        }
        match tree {
            InterviewTree::Leaf => true,
            InterviewTree::Ask { question, .. } => {
                inst.split(pop, *question).into_iter().all(|(a, child)| {
                    go(tree.branch(a).unwrap_or(&InterviewTree::Leaf), inst, &child)
                })
            }
        }
    }
    validate_tree(tree, inst)?;
    Ok(go(tree, inst, &inst.root()))
}

/// Goodness of a tree known to be well formed, without building leaf
/// records. Used by the search heuristics.
pub(crate) fn fast_goodness(tree: &InterviewTree, inst: &Instance, pop: &PopulationView) -> Frac {
    match tree {
        InterviewTree::Leaf => inst.extreme_frac(pop),
        InterviewTree::Ask { question, .. } => inst
            .split(pop, *question)
            .iter()
            .map(|(a, child)| match tree.branch(*a) {
                Some(sub) => fast_goodness(sub, inst, child),
                None => inst.extreme_frac(child),
            })
            .min()
            .unwrap_or(Frac::ONE),
    }
}

/// Serializable view of a report: rationals as `p/q` plus a decimal
/// rendering, paths as question/answer ids.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub feasible: bool,
    pub goodness: Rational,
    pub goodness_decimal: String,
    pub leaf_count: usize,
    pub depth: usize,
    pub redundant_nodes: usize,
    pub violations: Vec<ViolationDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdpc_accepted: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationDoc {
    pub path: Vec<(String, String)>,
    pub question: String,
    pub answer: String,
    pub ratio: Rational,
    pub ratio_decimal: String,
    pub low: Rational,
    pub high: Rational,
}

impl ReportDoc {
    pub fn new(report: &VerifyReport, inst: &Instance, cdpc_accepted: Option<bool>) -> Self {
        let qs = inst.questions();
        ReportDoc {
            feasible: report.feasible,
            goodness: report.goodness,
            goodness_decimal: report.goodness.decimal4(),
            leaf_count: report.leaf_count,
            depth: report.depth,
            redundant_nodes: report.redundant_nodes,
            violations: report
                .violations
                .iter()
                .map(|v| {
                    let r = inst.privacy_rules()[v.rule];
                    ViolationDoc {
                        path: v
                            .path
                            .iter()
                            .map(|&(q, a)| (qs[q].id.clone(), qs[q].answers[a].clone()))
                            .collect(),
                        question: qs[r.question].id.clone(),
                        answer: qs[r.question].answers[r.answer].clone(),
                        ratio: v.ratio,
                        ratio_decimal: v.ratio.decimal4(),
                        low: r.low,
                        high: r.high,
                    }
                })
                .collect(),
            cdpc_accepted,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, EDUCATION, EXPERIENCE, NATIONALITY, PROGRAMMING};
    use crate::model::{CandidateType, CdpcThresholds, Question};

    fn leaf_rows(inst: &Instance, tree: &InterviewTree) -> Vec<Vec<usize>> {
        leaves(tree, inst)
            .unwrap()
            .iter()
            .map(|l| l.population.member_indices().map(|i| i + 1).collect())
            .collect()
    }

    #[test]
    fn hiring_tree_leaves_pair_local_and_foreign_rows() {
        let inst = fixtures::hiring();
        let tree = fixtures::hiring_tree();
        let mut rows = leaf_rows(&inst, &tree);
        rows.sort();
        assert_eq!(rows, vec![vec![1, 6], vec![2, 7], vec![3, 8], vec![4, 9], vec![5, 10]]);
        for leaf in leaves(&tree, &inst).unwrap() {
            assert_eq!(inst.answer_ratio(&leaf.population, NATIONALITY, 0), Rational::HALF);
            assert_eq!(leaf.extreme, Rational::ONE);
        }
    }

    #[test]
    fn hiring_tree_report() {
        let inst = fixtures::hiring();
        let report = verify_gcopc(&fixtures::hiring_tree(), &inst).unwrap();
        assert!(report.feasible);
        assert_eq!(report.goodness, Rational::ONE);
        assert_eq!(report.leaf_count, 5);
        assert_eq!(report.depth, 2);
        assert_eq!(report.redundant_nodes, 0);
        assert!(privacy_ok_at_every_node(&fixtures::hiring_tree(), &inst).unwrap());
    }

    #[test]
    fn leaf_only_tree_covers_the_root() {
        let inst = fixtures::hiring();
        let ls = leaves(&InterviewTree::Leaf, &inst).unwrap();
        assert_eq!(ls.len(), 1);
        assert_eq!(ls[0].population, inst.root());
        assert_eq!(goodness(&InterviewTree::Leaf, &inst).unwrap(), Rational::new(5, 9));
    }

    #[test]
    fn perfectly_mixed_leaf_scores_one_half() {
        let q = Question { id: "q".into(), answers: vec!["a".into(), "b".into()] };
        let t = |a, f| CandidateType { answers: vec![a], fitness: Rational::integer(f), quantity: 5 };
        let inst = Instance::new(vec![q], vec![t(0, 1), t(1, 0)], vec![], 1, None).unwrap();
        assert_eq!(goodness(&InterviewTree::Leaf, &inst).unwrap(), Rational::HALF);
        let report = verify_gcopc(&InterviewTree::Leaf, &inst).unwrap();
        assert!(report.feasible);
    }

    #[test]
    fn violations_are_listed_per_leaf() {
        let inst = fixtures::hiring().with_question_limit(1).unwrap();
        let tree = InterviewTree::ask(EDUCATION, vec![]);
        let report = verify_gcopc(&tree, &inst).unwrap();
        assert!(!report.feasible);
        let ratios: Vec<Rational> = report.violations.iter().map(|v| v.ratio).collect();
        // Master's 3/4 local, Bachelor's 1/4 local, None 1/2 is fine.
        assert_eq!(ratios, vec![Rational::new(3, 4), Rational::new(1, 4)]);
        assert_eq!(report.first_per_leaf().len(), 2);
        assert_eq!(report.violations[0].path, vec![(EDUCATION, 0)]);
        assert!(!privacy_ok_at_every_node(&tree, &inst).unwrap());
    }

    #[test]
    fn missing_branch_is_an_implicit_leaf() {
        let inst = fixtures::hiring();
        let explicit = InterviewTree::ask(
            EXPERIENCE,
            vec![(0, InterviewTree::Leaf), (1, InterviewTree::Leaf)],
        );
        let implicit = InterviewTree::ask(EXPERIENCE, vec![]);
        assert_eq!(leaf_rows(&inst, &explicit), leaf_rows(&inst, &implicit));
    }

    #[test]
    fn single_branch_nodes_are_redundant() {
        let inst = fixtures::hiring_cdpc();
        // Experienced candidates with a Master's are rows 1 and 2, both local.
        let tree = InterviewTree::ask(
            EXPERIENCE,
            vec![(
                0,
                InterviewTree::ask(EDUCATION, vec![(0, InterviewTree::ask(NATIONALITY, vec![]))]),
            )],
        );
        assert_eq!(verify_gcopc(&tree, &inst).unwrap().redundant_nodes, 1);
        assert_eq!(verify_gcopc(&fixtures::hiring_tree(), &inst).unwrap().redundant_nodes, 0);
    }

    #[test]
    fn structural_errors() {
        let inst = fixtures::hiring();
        let repeat = InterviewTree::ask(
            EXPERIENCE,
            vec![(0, InterviewTree::ask(EXPERIENCE, vec![]))],
        );
        assert_eq!(leaves(&repeat, &inst).unwrap_err(), VerifyError::RepeatedQuestion(EXPERIENCE));
        let deep = InterviewTree::ask(
            EXPERIENCE,
            vec![(0, InterviewTree::ask(PROGRAMMING, vec![(0, InterviewTree::ask(EDUCATION, vec![]))]))],
        );
        assert_eq!(
            goodness(&deep, &inst).unwrap_err(),
            VerifyError::TooDeep { depth: 3, limit: 2 }
        );
        let bad_q = InterviewTree::ask(9, vec![]);
        assert_eq!(verify_gcopc(&bad_q, &inst).unwrap_err(), VerifyError::UndeclaredQuestion(9));
        let bad_a = InterviewTree::ask(EXPERIENCE, vec![(5, InterviewTree::Leaf)]);
        assert!(matches!(
            verify_gcopc(&bad_a, &inst).unwrap_err(),
            VerifyError::UndeclaredAnswer { answer: 5, .. }
        ));
        let dup = InterviewTree::Ask {
            question: EXPERIENCE,
            branches: vec![(0, InterviewTree::Leaf), (0, InterviewTree::Leaf)],
        };
        assert!(matches!(verify_gcopc(&dup, &inst).unwrap_err(), VerifyError::DuplicateBranch { .. }));
        assert_eq!(
            decide_cdpc_tree(&InterviewTree::Leaf, &inst).unwrap_err(),
            VerifyError::MissingThresholds
        );
    }

    #[test]
    fn decision_thresholds_are_inclusive() {
        let inst = fixtures::hiring_cdpc();
        assert!(decide_cdpc_tree(&fixtures::hiring_tree(), &inst).unwrap());
        assert!(!decide_cdpc_tree(&InterviewTree::Leaf, &inst).unwrap());
        let loose = Instance::new(
            inst.questions().to_vec(),
            inst.candidate_types().to_vec(),
            vec![],
            4,
            Some(CdpcThresholds { x: Rational::new(4, 9), y: Rational::ONE }),
        )
        .unwrap();
        assert!(decide_cdpc_tree(&InterviewTree::Leaf, &loose).unwrap());
    }

    #[test]
    fn report_doc_renders_decimals() {
        let inst = fixtures::hiring();
        let report = verify_gcopc(&fixtures::hiring_tree(), &inst).unwrap();
        let doc = ReportDoc::new(&report, &inst, None);
        let json = serde_json::to_value(&doc).unwrap();
        assert_eq!(json["goodness"], "1/1");
        assert_eq!(json["goodness_decimal"], "1.0000");
        assert!(json.get("cdpc_accepted").is_none());
    }
}
