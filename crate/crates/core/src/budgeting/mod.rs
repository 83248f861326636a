//! Per-class plane budgets and parameter initialization.

mod budget;
mod init;
mod kmeans;
mod silhouette;

pub use budget::{
    auto_plane_budget, scan_classes, scan_plane_budget, BudgetScan, PlaneBudget, DEFAULT_CAP, SILHOUETTE_SAMPLE,
    SILHOUETTE_THRESHOLD,
};
pub use init::{init_auto, init_kmeans, init_logreg, init_random, initialize, InitSpec, InitStrategy, Initialization};
pub use kmeans::{kmeans, KMeansResult};
pub use silhouette::{distance_matrix, silhouette, silhouette_from_distances};
