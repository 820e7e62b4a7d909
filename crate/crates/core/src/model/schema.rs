//! JSON formats for instances and interview trees.
//!
//! Instance:
//! `{"questions":[{"id","answers"}], "candidate_types":[{"answers":{q:a},
//! "fitness","quantity"}], "privacy_rules":[{"question","answer","low","high"}],
//! "question_limit", "cdpc":{"x","y"}?, "meta":{..}?}`
//!
//! Tree: `{"ask":{"question":q,"branches":{answer:subtree}}}` or `{"leaf":true}`.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::instance::{CandidateType, CdpcThresholds, Instance, ModelError, PrivacyRule, Question};
use super::tree::InterviewTree;
use crate::rational::Rational;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionDoc {
    pub id: String,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateDoc {
    pub answers: IndexMap<String, String>,
    pub fitness: Rational,
    pub quantity: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    pub question: String,
    pub answer: String,
    pub low: Rational,
    pub high: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdDoc {
    pub x: Rational,
    pub y: Rational,
}

/// Serialized form of an [`Instance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub questions: Vec<QuestionDoc>,
    pub candidate_types: Vec<CandidateDoc>,
    #[serde(default)]
    pub privacy_rules: Vec<RuleDoc>,
    pub question_limit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdpc: Option<ThresholdDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl InstanceDoc {
    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let questions: Vec<Question> = self
            .questions
            .into_iter()
            .map(|q| Question { id: q.id, answers: q.answers })
            .collect();
        let lookup = |qid: &str| -> Result<usize, ModelError> {
            questions
                .iter()
                .position(|q| q.id == qid)
                .ok_or_else(|| ModelError::UndeclaredQuestion(qid.to_string()))
        };
        let answer_lookup = |qi: usize, aid: &str| -> Result<usize, ModelError> {
            questions[qi].answers.iter().position(|a| a == aid).ok_or_else(|| {
                ModelError::UndeclaredAnswer {
                    question: questions[qi].id.clone(),
                    answer: aid.to_string(),
                }
            })
        };

        let mut types = Vec::with_capacity(self.candidate_types.len());
        for (index, doc) in self.candidate_types.into_iter().enumerate() {
            let mut answers = vec![usize::MAX; questions.len()];
            for (qid, aid) in &doc.answers {
                let qi = lookup(qid)?;
                answers[qi] = answer_lookup(qi, aid)?;
            }
            if let Some(qi) = answers.iter().position(|&a| a == usize::MAX) {
                return Err(ModelError::MissingAnswer { index, question: questions[qi].id.clone() });
            }
            types.push(CandidateType { answers, fitness: doc.fitness, quantity: doc.quantity });
        }

        let mut rules = Vec::with_capacity(self.privacy_rules.len());
        for r in &self.privacy_rules {
            let question = lookup(&r.question)?;
            let answer = answer_lookup(question, &r.answer)?;
            rules.push(PrivacyRule { question, answer, low: r.low, high: r.high });
        }
        let cdpc = self.cdpc.map(|t| CdpcThresholds { x: t.x, y: t.y });
        let mut instance = Instance::new(questions, types, rules, self.question_limit, cdpc)?;
        instance.set_meta(self.meta);
        Ok(instance)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let questions = inst.questions();
        InstanceDoc {
            questions: questions
                .iter()
                .map(|q| QuestionDoc { id: q.id.clone(), answers: q.answers.clone() })
                .collect(),
            candidate_types: inst
                .candidate_types()
                .iter()
                .map(|t| CandidateDoc {
                    answers: t
                        .answers
                        .iter()
                        .enumerate()
                        .map(|(qi, &a)| (questions[qi].id.clone(), questions[qi].answers[a].clone()))
                        .collect(),
                    fitness: t.fitness,
                    quantity: t.quantity,
                })
                .collect(),
            privacy_rules: inst
                .privacy_rules()
                .iter()
                .map(|r| RuleDoc {
                    question: questions[r.question].id.clone(),
                    answer: questions[r.question].answers[r.answer].clone(),
                    low: r.low,
                    high: r.high,
                })
                .collect(),
            question_limit: inst.question_limit(),
            cdpc: inst.cdpc().map(|t| ThresholdDoc { x: t.x, y: t.y }),
            meta: inst.meta().clone(),
        }
    }
}

/// Parses and validates an instance document. The second element lists
/// load-time warnings (privacy rules the full population already violates).
pub fn parse_instance(document: &str) -> Result<(Instance, Vec<String>), ModelError> {
    let doc: InstanceDoc =
        serde_json::from_str(document).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let instance = doc.into_instance()?;
    let warnings = instance
        .root_violations()
        .into_iter()
        .map(|v| {
            let r = instance.privacy_rules()[v.rule];
            let q = &instance.questions()[r.question];
            format!(
                "root population violates privacy rule {} ({} = {}): ratio {} outside [{}, {}]",
                v.rule, q.id, q.answers[r.answer], v.ratio, r.low, r.high
            )
        })
        .collect();
    Ok((instance, warnings))
}

pub fn serialize_instance(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from_instance(inst))
        .expect("instance documents always serialize")
}

pub fn tree_to_json(tree: &InterviewTree, inst: &Instance) -> Value {
    match tree {
        InterviewTree::Leaf => json!({ "leaf": true }),
        InterviewTree::Ask { question, branches } => {
            let q = &inst.questions()[*question];
            let mut map = Map::new();
            for (a, sub) in branches {
                map.insert(q.answers[*a].clone(), tree_to_json(sub, inst));
            }
            json!({ "ask": { "question": q.id, "branches": Value::Object(map) } })
        }
    }
}

pub fn tree_from_json(value: &Value, inst: &Instance) -> Result<InterviewTree, ModelError> {
    let malformed = |msg: &str| ModelError::Malformed(format!("tree: {msg}"));
    let obj = value.as_object().ok_or_else(|| malformed("node must be an object"))?;
    if obj.len() != 1 {
        return Err(malformed("node must have exactly one of \"ask\" or \"leaf\""));
    }
    if let Some(leaf) = obj.get("leaf") {
        return match leaf {
            Value::Bool(true) => Ok(InterviewTree::Leaf),
            _ => Err(malformed("\"leaf\" must be true")),
        };
    }
    let ask = obj
        .get("ask")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("expected {\"ask\": {...}}"))?;
    let qid = ask
        .get("question")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("ask node needs a string \"question\""))?;
    let question =
        inst.question_index(qid).ok_or_else(|| ModelError::UndeclaredQuestion(qid.to_string()))?;
    let branches = ask
        .get("branches")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("ask node needs an object \"branches\""))?;
    let mut out = Vec::with_capacity(branches.len());
    for (aid, sub) in branches {
        let answer = inst.answer_index(question, aid).ok_or_else(|| {
            ModelError::UndeclaredAnswer { question: qid.to_string(), answer: aid.clone() }
        })?;
        out.push((answer, tree_from_json(sub, inst)?));
    }
    Ok(InterviewTree::ask(question, out))
}

pub fn parse_tree(document: &str, inst: &Instance) -> Result<InterviewTree, ModelError> {
    let value: Value =
        serde_json::from_str(document).map_err(|e| ModelError::Malformed(e.to_string()))?;
    tree_from_json(&value, inst)
}

pub fn serialize_tree(tree: &InterviewTree, inst: &Instance) -> String {
    serde_json::to_string_pretty(&tree_to_json(tree, inst)).expect("tree documents always serialize")
}
