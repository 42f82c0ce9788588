pub mod cli;
pub mod diagnostics;
pub mod diffusion;
pub mod error;
pub mod metrics;
pub mod model;
pub mod posterior;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod special;
