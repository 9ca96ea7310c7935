//! Supervised and clustering scores, Bhattacharyya preference analysis and
//! report rendering over prediction records.

mod bc;
mod clustering;
mod records;
mod report;
mod supervised;

pub use bc::{analyze_bc, argument_contribution, bhattacharyya, BcConfig, BcEntry, BcReport, Contribution, Sample};
pub use clustering::{cluster_pair_scores, clustering_scores, ClusterScores};
pub use records::{
    model_records, read_predictions, read_predictions_file, records_with, write_predictions, write_predictions_file,
    ArgumentPrediction, Label, PredictionRecord,
};
pub use report::{bc_table, clustering_table, supervised_table};
pub use supervised::{f1, supervised_scores, Prf, SupervisedConfig, SupervisedReport, ADJUNCT_PREFIX};
