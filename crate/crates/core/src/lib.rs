// Negated float comparisons in this crate treat NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod bench;
pub mod cli;
pub mod evalsim;
pub mod geo;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod segmentation;
pub mod synth;
