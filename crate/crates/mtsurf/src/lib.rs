//! Geometry of marginally trapped spacelike surfaces in de Sitter 4-space.
//!
//! De Sitter 4-space is the unit quadric S⁴₁ = { x ∈ ℝ⁵₁ : ⟨x,x⟩ = 1 } of
//! 5-dimensional Minkowski space with signature (+,+,+,+,−). A spacelike
//! surface immersed in S⁴₁ is *marginally trapped* when its mean curvature
//! vector is lightlike. This crate computes, verifies and deforms such
//! surfaces on rectangular charts:
//!
//! * [`minkowski`]: exact-signature linear algebra for ℝ⁵₁, its
//!   complexification, SO(4,1) membership and the 5×5 matrix exponential;
//! * [`grid`]: rectangular charts, complex finite differences, quadrature
//!   and convergence-order estimation;
//! * [`catalog`]: closed-form generator surfaces used as ground truth
//!   (the flat homogeneous torus family and a degenerate graph surface);
//! * [`chart`]: 2-jets of an immersion (analytic or finite-difference
//!   backend) and the adapted Lorentzian normal frame;
//! * [`invariants`]: second-fundamental data, curvatures, Hopf
//!   differentials and the Gauss/Codazzi/Ricci compatibility residuals;
//! * [`null_gauss`]: the null Gauss map into the conformal 3-sphere, its
//!   canonical lift, the conformal invariants κ and s, Willmore energy,
//!   classification and congruence testing;
//! * [`deform`]: frame matrices, their reductive split, the S¹ associated
//!   family and the Calapso–Bianchi family by extended-frame integration,
//!   and verification of the transformation laws;
//! * [`report`] / [`io`]: residual reports, classification records and
//!   CSV/JSON export.

pub mod catalog;
pub mod chart;
pub mod deform;
pub mod error;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod minkowski;
pub mod null_gauss;
pub mod report;
pub mod tol;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
