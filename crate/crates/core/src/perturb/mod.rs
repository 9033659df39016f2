//! Feature selection from attribution maps and imputation of masked features.

mod impute;
mod select;

pub use impute::{impute_grid, impute_tabular, Imputer, ImputerKind, NoiseScale};
pub use select::{
    mask_by_ratio, mask_by_threshold, morf_order, rank_features, ratio_count, Order, SelectionKind, SelectionRule,
};
