//! Markov chain kernels for the mixture weight.

pub mod chain;
pub mod da;
pub mod imh;
pub mod proposal;
pub mod truncnorm;

pub use chain::{log_posterior_kernel, run_chain, ChainPath, ChainRunner, KernelKind};
pub use da::{coin_probability, da_step, draw_allocations};
pub use imh::{imh_step, ImhState, ImhStep};
pub use proposal::{build_proposal, ratio_bound_diagnostic, IndependenceProposal, Proposal, ProposalKind};
pub use truncnorm::TruncatedNormal;
