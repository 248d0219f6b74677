//! Numerical engine for the exponential change `*L = L·exp(β/L)` of a Finsler
//! metric by an h-vector `b_i(x, y)`.
//!
//! Every closed-form quantity is checked against exact forward-mode jets of
//! the changed metric function itself.

pub mod closed_forms;
pub mod diffkit;
pub mod difference;
pub mod error;
pub mod fundamentals;
pub mod metrics;
pub mod projectivity;
pub mod tensor;

pub use error::{GeometryError, Result};

pub use closed_forms::{change_scalars, starred_closed_forms, ChangeScalars, StarredTensors};
pub use difference::{difference_tensor, ChangePoint, DifferenceTensor, Transcription};
pub use fundamentals::{base_tensors, spray_connections, BaseTensors, ConnectionBundle, CovariantDerivs};
pub use metrics::{hexp_apply, make_hvector, make_metric, ChartSpec, HVectorField, MetricFunction};
