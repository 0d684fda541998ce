//! Evaluation harness for prompting strategies on dialogue understanding
//! tasks: dialogue state tracking, next-action prediction, emotion
//! recognition and response selection.
//!
//! The pipeline is: load a dataset into [`Dialogue`]s, explode them into
//! [`TaskInstance`]s, render a prompt for a [`PromptStrategy`], complete it
//! through an [`llm::Client`], parse the reply, and score the resulting
//! [`PredictionRecord`]s.

pub mod analysis;
pub mod datasets;
pub mod error;
pub mod llm;
pub mod metrics;
pub mod parsing;
pub mod prompts;
pub mod report;
pub mod runner;
pub mod types;

pub use analysis::{classify_error, compare_runs, Comparison, ErrorCase, ErrorType};
pub use datasets::{load_dataset, to_task_instances, Dataset, DatasetDescriptor, DatasetName, Split};
pub use error::{Error, Result};
pub use metrics::{accuracy, format_percent, joint_goal_accuracy, weighted_f1, MetricKind};
pub use parsing::{canonicalize_value, parse_belief_state, AliasTable, AnswerParser};
pub use prompts::{render_prompt, select_exemplars, Exemplar, PromptStrategy, StrategyName, Triggers};
pub use report::{format_report, Layout, MetricReport, TableFormat};
pub use runner::{rescore, run_experiment, ExperimentConfig, ExperimentOutput};
pub use types::{
    Answer, BeliefState, Dialogue, PredictionRecord, RecordStatus, Schema, Speaker, TaskInstance, TaskKind, Utterance,
};
