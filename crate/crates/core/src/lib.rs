//! Vibrational control of mechanical systems through the kinetic metric.
//!
//! The crate is `no_std` (with `alloc`). It covers the reduced Hamiltonian
//! dynamics driven by a control signal, the geometry of the foliation by
//! leaves `Q × {u}`, the time reparametrization that turns impulsive
//! controls into graph-completed systems, the stability tests built on it,
//! and the vibration controllers that realize selections of the
//! convexified dynamics.

#![no_std]
// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod linalg;
pub mod metric;
pub mod ode;
pub mod reparam;
pub mod sampling;
pub mod stability;

pub use error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
