//! Correction of measured centrifugal-compressor performance to reference
//! inlet conditions, with reference-map fitting and deviation reporting.
//!
//! Pipeline: [`performance::analyze_point`] turns a measured operating point
//! into polytropic head, power and efficiency; [`correction::correct_point`]
//! transforms that result to reference inlet pressure, temperature and
//! composition; [`refmap`] fits and queries reference maps and computes
//! head and power deviations. [`campaign`] holds configuration, CSV ingestion,
//! synthetic campaigns and reports.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod correction;
pub mod performance;
pub mod refmap;
pub mod roots;
pub mod thermo;
