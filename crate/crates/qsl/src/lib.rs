//! Classical simulation of quantum signal learning with Bell, homodyne and
//! heterodyne readout.
//!
//! A classical field acting on bosonic modes displaces them by a random
//! α ∈ ℂⁿ drawn from a [`signals::DisplacementLaw`]. The readout channels in
//! [`channels`] add Gaussian noise to α; [`estimators`] invert that noise to
//! recover properties of the law; [`ot`] holds the transport and testing
//! bounds; [`harness`] runs the hypothesis-test sweeps.

pub mod rng;
pub mod signals;
pub mod stats;
pub mod channels;
pub mod io;
pub mod estimators;
pub mod ot;
pub mod harness;
pub mod cli;
