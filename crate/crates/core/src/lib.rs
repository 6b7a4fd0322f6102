//! Dominance analysis toolkit for single-input single-output LTI systems and
//! Lur'e feedback interconnections.
//!
//! The crate decides and certifies p-dominance (the property that a system's
//! asymptotic behavior is at most p-dimensional) through two independent
//! routes that cross-validate each other:
//!
//! * time domain: inertia-constrained Lyapunov certificates and dissipativity
//!   certificates ([`dominance`]),
//! * frequency domain: shifted Nyquist loci, winding numbers, and the circle
//!   criterion ([`frequency`]),
//!
//! backed by nonlinear simulation and attractor classification ([`simulate`]).
//!
//! With the default `parallel` feature, grid evaluations and trajectory
//! batches run on rayon; disabling it yields a dependency-free sequential
//! build with identical results.

pub mod dominance;
pub mod exec;
pub mod frequency;
pub mod lti;
pub mod numerics;
pub mod simulate;

pub use num_complex::Complex64;
