//! Domain types: instances, candidate types, privacy rules, population views
//! and interview trees, plus the JSON instance/tree formats.

mod instance;
mod population;
mod schema;
mod tree;

pub use instance::{
    CandidateType, CdpcThresholds, Instance, ModelError, PrivacyCheck, PrivacyRule, Question,
    RuleViolation,
};
pub use population::PopulationView;
pub use schema::{
    parse_instance, parse_tree, serialize_instance, serialize_tree, tree_from_json, tree_to_json,
    InstanceDoc,
};
pub use tree::InterviewTree;
