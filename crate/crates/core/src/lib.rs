//! Tensor-density calculus on curved spacetimes, with numerical checks of
//! the divergence identities, Killing-vector machinery and the curved-space
//! Gauss law on structured grids.

pub mod calculus;
pub mod channel;
pub mod density;
pub mod error;
pub mod expr;
pub mod grid;
pub mod integrate;
pub mod metric;
pub mod physics;
pub mod tensor;

pub use calculus::{DivergenceRoute, Geometry, Tolerance};
pub use channel::{Analytic, Backend, DerivativeChannel, GridScalar, Sampled};
pub use density::ChartMap;
pub use error::{Error, Result};
pub use expr::Expr;
pub use grid::{CoordinateChart, FdOrder, GridSpec, SampledField};
pub use integrate::{Quadrature, RegionSpec};
pub use metric::{MetricField, MetricPointData, Preset, Signature};
pub use physics::StressEnergyField;
pub use tensor::{Slot, TensorDensityField, VectorField};
