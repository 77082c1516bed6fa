//! Multiple stochastic integrals against normalized empirical measures in a
//! triangular-array scheme, their Gaussian limits, and the diagram calculus
//! tying the two together.
//!
//! Everything measure-theoretic is generic over a [`Scalar`]; the aliases
//! below fix the two supported precisions.

pub mod diagrams;
pub mod empirical;
pub mod error;
pub mod integrands;
pub mod model;
pub mod scalar;
pub mod wiener;

pub use diagrams::{
    averaged_contraction, b_coeff, colored_diagram_count, contract, contract_integrated,
    diagram_count, diagram_terms, enumerate_colored, enumerate_diagrams, exact_cross_moment,
    exact_mean, f_bilinear, f_bilinear_limit, f_bilinear_with, set_partition_count, ColoredDiagram,
    Diagram, DiagramTerm,
};
pub use empirical::{
    cell_probabilities, draw_counts, draw_points, empirical_integral,
    empirical_integral_bruteforce, k_schedule, truncated_chaos, CellCounts, PointSample, SeedInfo,
};
pub use error::{Error, Result};
pub use integrands::{
    CellwiseFunction, ChaosVector, Grid, PatternTable, StepFunction, TensorPowerFunction,
};
pub use model::{ControlMeasure, Interval, Measure, Schedule, ScheduleReport, Window};
pub use scalar::{compensated_sum, KahanSum, Scalar};
pub use wiener::{
    chaos_series, chaos_variance, hermite, sample_gaussian_cells, wiener_integral,
    GaussianCellRealization,
};

pub type Interval64 = Interval<f64>;
pub type ControlMeasure64 = ControlMeasure<f64>;
pub type Window64 = Window<f64>;
pub type Schedule64 = Schedule<f64>;
pub type Grid64 = Grid<f64>;
pub type Cellwise64 = CellwiseFunction<f64>;
pub type StepFunction64 = StepFunction<f64>;
pub type TensorPower64 = TensorPowerFunction<f64>;
pub type ChaosVector64 = ChaosVector<f64>;
pub type CellCounts64 = CellCounts<f64>;
pub type PointSample64 = PointSample<f64>;
pub type Gaussian64 = GaussianCellRealization<f64>;

pub type Interval32 = Interval<f32>;
pub type ControlMeasure32 = ControlMeasure<f32>;
pub type Window32 = Window<f32>;
pub type Schedule32 = Schedule<f32>;
pub type Grid32 = Grid<f32>;
pub type Cellwise32 = CellwiseFunction<f32>;
pub type StepFunction32 = StepFunction<f32>;
pub type TensorPower32 = TensorPowerFunction<f32>;
pub type ChaosVector32 = ChaosVector<f32>;
pub type CellCounts32 = CellCounts<f32>;
pub type PointSample32 = PointSample<f32>;
pub type Gaussian32 = GaussianCellRealization<f32>;
