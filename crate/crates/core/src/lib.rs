//! Quasiclassical dynamics of quantized nonlinear lattices under the
//! coherent-state factorization ansatz.
//!
//! The crate covers three model families on small rings: the generalized
//! discrete self-trapping (GDST) lattice, the modified DNLS (MDNLS) lattice,
//! and the XXZ spin chain obtained from the fermionic polaron model by a
//! Jordan-Wigner transformation. For each model it provides the factorized
//! equations of motion under normal (NO) and symmetric (SO) operator
//! ordering, an adaptive integrator with conservation audits, observables
//! (Q-function, Poisson distributions, self-trapping diagnostics, fermion
//! expectations), the Riemannian geometry of the coherent-state manifolds,
//! and an exact truncated-Fock-space propagator used to gauge the ansatz
//! through the correlation index.
//!
//! The crate is `no_std` + `alloc`; all IO lives in the companion CLI crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod lattice;
pub mod observables;

pub use error::{Error, Result};
pub use lattice::{
    BosonLatticeState, CouplingMatrix, GdstParams, MdnlsParams, Ordering, SoCoefficients,
    SpinLatticeState, XxzParams,
};

pub use num_complex::Complex64;
