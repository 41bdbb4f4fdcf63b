//! Exact dynamics of finite spin-bath qubit models and the master equations
//! they generate.
//!
//! The crate has three layers:
//!
//! * [`matkit`]: a small dense complex linear-algebra kernel (vectorization,
//!   Kronecker products, Hermitian eigendecomposition, matrix exponentials,
//!   partial traces) sized for qubit superoperators and brute-force
//!   finite-bath references.
//! * [`tlsmap`]: the generic engine turning a qubit dynamical map into a
//!   time-local master equation with a minimal dissipator: generator
//!   extraction, Choi matrices, pseudo-Kraus decompositions, the canonical
//!   Hamiltonian, master-equation propagation, and steady states.
//! * [`centralspin`], [`rtn`], [`thermo`]: two exactly solvable models (a
//!   dissipative central spin and random-telegraph-noise dephasing) in closed
//!   form, with brute-force and Monte Carlo references, and the
//!   quantum-thermodynamic observables built on them (heat current, ergotropy,
//!   charging power).
//!
//! A command-line runner that emits CSV time series lives in the companion
//! `spinbath-cli` crate, and a guided tour with runnable examples lives in
//! the `book/` directory of the workspace (its code blocks are compiled and
//! executed as documentation tests).

pub mod centralspin;
pub mod matkit;
pub mod rtn;
pub mod thermo;
pub mod tlsmap;

#[cfg(doctest)]
mod book;
