//! Spectral simulation and verification tools for linear and nonlinear wave
//! equations on the integer lattices `Z^d`, `d = 1..=5`.
//!
//! Infinite-lattice functions are represented on a periodic box of side `2N`
//! ([`lattice::LatticeField`]). Linear evolution is exact in Fourier space
//! ([`propagator`]), nonlinear evolution uses Strang splitting
//! ([`dynamics`]), and the exact-rational pieces (decay budgets, Newton
//! polygons, Strichartz exponent plans) live in [`phase`], [`newton`] and
//! [`plan`].

pub mod bessel;
pub mod budget;
pub mod dynamics;
pub mod lattice;
pub mod newton;
pub mod phase;
pub mod plan;
pub mod poly;
pub mod propagator;
pub mod scattering;
pub mod spectral;
pub mod sum;
pub mod taylor;
mod transform;

pub use num_complex::Complex64;
