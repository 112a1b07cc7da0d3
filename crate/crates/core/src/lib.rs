//! Numerical projective tractor calculus on closed-form model geometries.
//!
//! The core is generic over the scalar type (`f32`/`f64`) through
//! [`Scalar`]; concrete aliases for `f64` are exported at the crate root.

pub mod affine;
pub mod chart;
pub mod check;
pub mod error;
pub mod field;
pub mod jet;
pub mod linalg;
pub mod models;
pub mod orientation;
pub mod quaternion;
pub mod report;
pub mod sasaki;
pub mod scalar;
pub mod strat;
pub mod suites;
pub mod tensor;
pub mod tractor;

pub use affine::{Connection, CurvaturePack};
pub use chart::Chart;
pub use error::{GeomError, Result};
pub use field::TensorField;
pub use jet::Jet;
pub use scalar::Scalar;
pub use tensor::{TensorJet, Variance};
pub use tractor::{Scale, TractorField, TractorKind};

pub type Jet64 = Jet<f64>;
pub type Jet32 = Jet<f32>;
pub type TensorJet64 = TensorJet<f64>;
pub type Field64 = TensorField<f64>;
pub type Connection64 = Connection<f64>;
pub type Scale64 = Scale<f64>;
pub type Tractor64 = TractorField<f64>;
