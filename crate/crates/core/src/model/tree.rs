use std::collections::BTreeSet;

/// An adaptive interview. Internal nodes ask a question; each branch is keyed
/// by an answer index and branches are kept sorted by answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InterviewTree {
    Leaf,
    Ask {
        question: usize,
        branches: Vec<(usize, InterviewTree)>,
    },
}

impl InterviewTree {
    pub fn ask(question: usize, mut branches: Vec<(usize, InterviewTree)>) -> Self {
        branches.sort_by_key(|(a, _)| *a);
        InterviewTree::Ask { question, branches }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, InterviewTree::Leaf)
    }

    /// Number of Ask nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            InterviewTree::Leaf => 0,
            InterviewTree::Ask { branches, .. } => {
                1 + branches.iter().map(|(_, t)| t.depth()).max().unwrap_or(0)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            InterviewTree::Leaf => 1,
            InterviewTree::Ask { branches, .. } => {
                1 + branches.iter().map(|(_, t)| t.node_count()).sum::<usize>()
            }
        }
    }

    pub fn branch(&self, answer: usize) -> Option<&InterviewTree> {
        match self {
            InterviewTree::Leaf => None,
            InterviewTree::Ask { branches, .. } => branches
                .binary_search_by_key(&answer, |(a, _)| *a)
                .ok()
                .map(|i| &branches[i].1),
        }
    }

    /// Every question asked anywhere in the tree.
    pub fn questions_used(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_questions(&mut out);
        out
    }

    fn collect_questions(&self, out: &mut BTreeSet<usize>) {
        if let InterviewTree::Ask { question, branches } = self {
            out.insert(*question);
            for (_, t) in branches {
                t.collect_questions(out);
            }
        }
    }
}
