pub mod bounds;
pub mod decoder;
pub mod estimator;
pub mod experiments;
pub mod linalg;
pub mod powerflow;
pub mod scalar;
pub mod special;

pub use scalar::Real;

// Double-precision instantiations of the generic types.
pub type Matrix = linalg::Matrix<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
pub type DecodeProblem = decoder::DecodeProblem<f64>;
pub type DecodeSolution = decoder::DecodeSolution<f64>;
pub type Mode = decoder::Mode<f64>;
pub type SparseErrorSpec = decoder::SparseErrorSpec<f64>;
pub type PowerNetwork = powerflow::PowerNetwork<f64>;
pub type StateVector = powerflow::StateVector<f64>;
pub type EstimatorConfig = estimator::EstimatorConfig<f64>;
pub type EstimateResult = estimator::EstimateResult<f64>;
