//! Recovery of the undeformed shape of bent, slender 2D bodies from a single
//! binary mask, and nearest-prototype classification of the straightened
//! profiles.

pub mod classify;
mod error;
pub mod dataset;
pub mod evaluate;
pub mod geometry;
pub mod io;
pub mod morph;
mod scalar;
pub mod neutral;
pub mod roundtrip;
pub mod segment;
pub mod synth;

pub use error::{Error, IoError, Result};
pub use scalar::Real;

pub type Point64 = geometry::Point<f64>;
pub type Point32 = geometry::Point<f32>;
pub type Contour64 = geometry::Contour<f64>;
pub type Contour32 = geometry::Contour<f32>;
pub type PolyCurve64 = geometry::PolyCurve2D<f64>;
pub type PolyCurve32 = geometry::PolyCurve2D<f32>;
pub type Shape64 = neutral::StraightenedShape<f64>;
pub type Shape32 = neutral::StraightenedShape<f32>;
pub type NeutralResult64 = neutral::NeutralResult<f64>;
pub type NeutralResult32 = neutral::NeutralResult<f32>;
pub type Field64 = morph::ScalarField<f64>;
pub type Field32 = morph::ScalarField<f32>;
pub type MorphResult64 = morph::MorphResult<f64>;
pub type MorphResult32 = morph::MorphResult<f32>;
pub type Profile64 = classify::ProfileCurve<f64>;
pub type Profile32 = classify::ProfileCurve<f32>;
pub type Ensemble64 = classify::Ensemble<f64>;
pub type Ensemble32 = classify::Ensemble<f32>;
