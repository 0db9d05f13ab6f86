//! ROC-AUC and its macro/micro aggregates.

mod auc;
mod reference;

pub use auc::{binary_auc, evaluate, macro_auc, micro_auc, EvalBatch, Excluded, MetricsReport};
pub use reference::{reference, reference_table, ReferenceRow};
