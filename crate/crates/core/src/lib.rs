pub mod dynamics;
pub mod env;
pub mod mobility;
pub mod neural;
pub mod physics;
pub mod seed;
pub mod moppo;
pub mod evolve;
pub mod harness;
pub mod metrics;
