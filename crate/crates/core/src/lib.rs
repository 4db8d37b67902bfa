//! Gauss maps of conformal minimal immersions in S²×ℝ.
//!
//! S²×ℝ is realised as `ℝ³ \ {0}` with the conformally flat metric
//! `|x|⁻²(dx₁² + dx₂² + dx₃²)`. Sampled conformal immersions `X = (F, h)` on a
//! grid chart are differentiated with central Wirtinger differences; the
//! crate computes their normal, Gauss map `g` and the auxiliary maps `η`, `p`,
//! `r`, evaluates the minimality identities as residual fields, recovers a
//! minimal immersion from its Gauss map up to a vertical translation and the
//! antipodal map, and generates the standard example families (totally
//! geodesic spheres, vertical cylinders, helicoids and unduloids).

pub mod calculus;
pub mod double_double;
pub mod error;
pub mod families;
pub mod gauss;
pub mod io;
pub mod linalg;
pub mod minimality;
pub mod model;
pub mod reconstruct;
pub mod scalar;

pub use double_double::DoubleDouble;
pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelPoint64 = model::ModelPoint<f64>;
pub type Isometry64 = model::Isometry<f64>;
pub type ExtComplex64 = model::ExtComplex<f64>;
pub type GridChart64 = calculus::GridChart<f64>;
pub type ScalarField64 = calculus::ScalarField<f64>;
pub type ExtComplexField64 = calculus::ExtComplexField<f64>;
pub type Immersion64 = gauss::Immersion<f64>;
pub type GaussData64 = gauss::GaussData<f64>;
pub type FamilySpec64 = families::FamilySpec<f64>;
pub type Reconstruction64 = reconstruct::Reconstruction<f64>;
