//! Recommendation policies and their training.

pub mod features;
pub mod logistic;
pub mod oracle;
pub mod policy;

pub use features::{featurize, FeatureVector};
pub use logistic::{encode_credit, objective, train_logistic, Hyperparameters, PolicyModel, TrainOutcome};
pub use oracle::{oracle_incremental_score, oracle_scores};
pub use policy::{act, argmax, popularity, train_agent, Agent, AgentKind, AgentModel, AgentSpec};
