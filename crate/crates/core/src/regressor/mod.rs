//! Six-head toxicity regressor producing in-domain attribute probabilities.

mod features;
mod model;

pub use features::{featurize, FeaturizerConfig};
pub use model::{
    constant_mean_rmse, stratified_split, train_regressor, EpochLog, Regressor, RegressorConfig,
};
