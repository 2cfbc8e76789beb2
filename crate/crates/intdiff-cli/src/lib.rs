//! Library backing the `intdiff` command-line tool: configuration parsing,
//! the Monte-Carlo experiment runner, CSV serialization, and SVG plotting.
//! The binary in `main.rs` is a thin argument-handling shell over these
//! modules, which keeps every behavior reachable from integration tests.

// Validation tests are written `!(x > 0.0)` rather than `x <= 0.0` so that
// NaN arguments fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;
pub mod svg;
