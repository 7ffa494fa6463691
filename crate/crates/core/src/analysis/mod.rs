//! Distribution analysis: training-distribution reports, power-law fits,
//! growth diagnostics, parameter sweeps and synthetic datasets.

pub mod distribution;
pub mod growth;
pub mod power_law;
pub mod regression;
pub mod sweep;
pub mod synthetic;

pub use distribution::{
    data_distribution, expected_exposure, image_data_distribution, simulate_training_distribution,
    theoretical_train_distribution, ClassDistribution, ClassRow, DistributionReport,
};
pub use growth::{geometric_grid, growth_diagnostic, GrowthDiagnostic};
pub use power_law::{fit_power_law, fit_power_law_points, fit_rank_power_law, PowerLawFit};
pub use regression::{fit_line, LineFit};
pub use sweep::{sweep, CellStats, SweepCell, SweepGrid, SweepMetric, DEFAULT_ALPHAS, DEFAULT_THRESHOLDS};
pub use synthetic::{
    dataset_from_class_counts, generate_synthetic, power_law_image_counts, InstanceLaw, SyntheticSpec,
};
