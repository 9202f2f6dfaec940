//! Contours, masks and arc-length polynomial curves.

mod contour;
mod mask;
mod point;
mod polyfit;
mod spatial;

pub use contour::{
    condition_chain, condition_contour, extract_contour, neighbor_counts, single_body,
    trace_boundary, Contour, MIN_COMPONENT_PIXELS,
};
pub use mask::{BinaryMask, NEIGHBORS8};
pub use point::{cumulative_chord, polyline_length, resample_polyline, signed_area, Point};
pub use spatial::PointGrid;
pub use polyfit::{
    choose_degree, choose_degree_for, fit_polycurve, residual_rms, DegreeChoice, Fit,
    FrameSample, PolyCurve2D, DEGREE_RMS_TOLERANCE, MAX_DEGREE, MIN_DEGREE,
};
