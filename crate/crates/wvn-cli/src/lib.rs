//! Config parsing, experiment dispatch and result files for the `wvn` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;
pub mod run;
