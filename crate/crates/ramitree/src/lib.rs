//! Exact computations with finite quotients `G(n)` of the Grigorchuk family
//! of groups acting on the binary rooted tree, and a verifier for the
//! ramification structures those quotients carry.

pub mod cli;
pub mod engine;
pub mod omega;
pub mod ramify;
pub mod treeauto;
