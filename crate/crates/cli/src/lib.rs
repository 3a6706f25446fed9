//! Scenario harness for the acmf-core solver: configuration files, the
//! diagnostics pipeline, interface extraction, and on-disk output formats.

pub mod config;
pub mod diagnostics;
pub mod mc_tables;
pub mod mesh;
pub mod runner;
pub mod snapshot;
pub mod sweep;
pub mod vtk;
