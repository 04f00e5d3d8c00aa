//! Desk-scale toolkit around the dichotomy between k-fold sum sets and
//! k-fold product sets of integers.
//!
//! Positive integers embed into the prime-exponent lattice, where product
//! sets become sumsets ([`lattice`]). On top of that sit combinatorial
//! set kernels ([`setops`]), numerical estimation of Lambda_q constants of
//! integer sets ([`lambda`]), an executable graph-regularization pipeline
//! ([`regularize`]), evaluators for the admissible-pair bound calculus
//! ([`bounds`]) and an experiment harness ([`harness`]).

pub mod bounds;
pub mod config;
pub mod harness;
pub mod lambda;
pub mod lattice;
pub mod regularize;
pub mod setops;

pub use config::Config;
pub use lattice::{ExpSet, ExponentVector, PrimeBasis};
pub use setops::{BipartiteGraph, IntSet};
