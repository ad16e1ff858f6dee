//! Semi-analytical pricing of credit default swaps with counterparty
//! adjustments under a correlated first-passage structural default model.
//!
//! Default of an issuer is the first time its barrier-normalized log-asset
//! distance (a driftless Brownian motion) hits zero. Joint survival
//! probabilities and CVA/DVA boundary integrals are computed from the
//! transition density of the killed diffusion:
//!
//! - in 1D from closed forms ([`analytic`]),
//! - in 2D on a wedge, by eigenfunction expansion and by the method of
//!   images ([`greens2d`]),
//! - in 3D on a spherical-triangle cone, by combining a radial Bessel kernel
//!   with a finite-element eigenbasis of the angular Laplace-Beltrami
//!   operator ([`mesh`], [`fem`], [`greens3d`]).
//!
//! A Monte Carlo engine ([`mc`]) provides unbiased estimators for every
//! quantity the semi-analytic engines produce and is used throughout the
//! test suite as the independent oracle.

pub mod analytic;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod greens2d;
pub mod greens3d;
pub mod math;
pub mod mc;
pub mod mesh;
pub mod model;

pub use error::{Error, Result};
