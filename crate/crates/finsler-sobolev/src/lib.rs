//! Numerical toolkit for Finslerian Sobolev spaces on sphere bundles: a zoo
//! of low-dimensional Finsler metrics, spray geodesics and tiered forward
//! distances, sphere-bundle quadrature, H_k^p norms, constructive
//! approximation (truncation, mollification, partitions of unity), and the
//! experiment drivers behind the integrability and sharpness counterexamples.

pub mod approx;
pub mod bundle;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geodesics;
pub mod metric;
pub mod report;
pub mod sobolev;
