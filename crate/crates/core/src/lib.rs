pub mod env;
pub mod geometry;
pub mod nn;
pub mod sac;
