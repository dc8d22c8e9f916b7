//! Giant atom coupled to a Su-Schrieffer-Heeger photonic chain: exact
//! diagonalization, closed-form bound states and zero modes, effective
//! momentum-space couplings, and a command-line driver emitting CSV/JSON.

pub mod analytic;
pub mod commands;
pub mod config;
pub mod effective;
pub mod lattice;
pub mod output;
pub mod spectral;
