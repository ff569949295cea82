//! HMM-based statistical parametric speech synthesis for Costa Rican Spanish.
//!
//! Pipeline: [`corpus`] ingestion, [`textproc`] phonetization, [`features`]
//! analysis, [`hmm`]/[`train`] embedded Baum-Welch training, [`generate`]
//! maximum-likelihood trajectory generation and the [`vocoder`]. The
//! [`eval`] module aggregates listening-test responses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod generate;
pub mod hmm;
pub mod textproc;
pub mod train;
pub mod vocoder;
