//! Lagrangian fixed-point solver for incompressible flows with added stress.
//!
//! The crate works on the periodic torus `[0, L)^d` (`d = 2` or `3`) with a
//! pseudo-spectral discretization. It is organized bottom-up:
//!
//! * [`grid`]: periodic grids, sampled fields, time paths, FFTs, spectral
//!   derivatives, off-grid interpolation and the field snapshot format.
//! * [`operators`]: heat semigroup, Riesz transforms, the Leray projector,
//!   the Duhamel operators for velocity and velocity gradient, degree-0
//!   Fourier multipliers and their commutators with transport.
//! * [`lagrangian`]: flow maps `X = id + chi`, inversion, composition, label
//!   gradients and chord-arc diagnostics.
//! * [`dynamics`]: constitutive laws `F(g, tau)` (Oldroyd-B, ideal MHD, custom)
//!   and the per-label stress ODE integrator.
//! * [`norms`]: sampled Hölder, Lebesgue and time-path norms, and the composite
//!   norms used to measure contraction.
//! * [`solver`]: the Lagrangian nonlinearities, the fixed-point map, Picard
//!   iteration and the linearized maps.
//! * [`verify`]: an independent Eulerian reference solver and the numerical
//!   bound checks.
//!
//! The guide in `book/` walks through each layer with runnable listings.

pub mod data;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod lagrangian;
pub mod linalg;
pub mod norms;
pub mod operators;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, InterpKind, Path, Rank, TimeGrid};
