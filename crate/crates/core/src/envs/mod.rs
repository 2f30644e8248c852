//! The five simulations. Each module exposes pure reward functions alongside
//! a [`Simulation`](crate::sim::Simulation) implementation.

pub mod aws;
pub mod dbr;
pub mod opc;
pub mod wfc;
pub mod wrm;
