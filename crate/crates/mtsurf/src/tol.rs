//! Centralized tolerances and numerical-method constants.
//!
//! Thresholds that classify geometric properties in floating point live
//! here with their rationale, so no operation carries ad-hoc magic numbers.
//! Scale-aware tolerances are written as relative factors; the call sites
//! multiply by the natural quadratic scale of the data.

/// Null-cone membership: |<x,x>| <= NULL_MEMBERSHIP_REL * ||x||²_euclid.
/// Scale-invariant and compatible with second-order finite-difference noise.
pub const NULL_MEMBERSHIP_REL: f64 = 1e-9;

/// Quadric membership |<f,f> - 1| <= QUADRIC_MEMBERSHIP_REL * ||f||²_euclid
/// for sampled surfaces. Same rationale as null membership.
pub const QUADRIC_MEMBERSHIP_REL: f64 = 1e-9;

/// Tabulated input positions must satisfy the quadric to this absolute level
/// before finite differences are meaningful.
pub const TABULATED_QUADRIC_ABS: f64 = 1e-8;

/// Marginally trapped flag: max |h1 - h2| < MARGINAL_REL * (1 + |h1| + |h2|).
pub const MARGINAL_REL: f64 = 1e-8;

/// Normal-bundle re-orientation: no sign flip when the frame is already in
/// the h1 = h2 gauge to this relative level.
pub const MARGINAL_FLIP_REL: f64 = 1e-6;

/// Flat normal bundle flag: max |Im sigma_zbar| below this.
pub const FLAT_NORMAL_BUNDLE_MAX: f64 = 1e-7;

/// Parallel mean curvature flag, analytic backend: max |h_z + sigma h|.
pub const PARALLEL_H_ANALYTIC: f64 = 1e-7;

/// Parallel mean curvature flag, FD backend: factor on the squared grid
/// spacing (second-order differencing noise floor).
pub const PARALLEL_H_FD_FACTOR: f64 = 10.0;

/// Default non-isotropy threshold: flag non-isotropic when min |Q| exceeds
/// this. Exposed as an option; there is no universal floating-point value
/// for "never zero".
pub const NON_ISOTROPIC_MIN_Q: f64 = 1e-6;

/// Isotropy gate for the canonical lift: |q| below this at any point is an
/// isotropy error.
pub const CANONICAL_LIFT_MIN_Q: f64 = 1e-9;

/// Willmore classification: max |delta| below this means delta == 0.
pub const WILLMORE_DELTA_MAX: f64 = 1e-8;

/// Constrained-Willmore classification: max |d(delta)/dzbar| below this
/// (holomorphic delta), analytic backend.
pub const CONSTRAINED_WILLMORE_HOLO: f64 = 1e-7;

/// Isothermic classification: spread of the phase of q over the grid.
pub const ISOTHERMIC_PHASE_TOL: f64 = 1e-7;

/// Time-orientation / isometry certificates: SO(4,1) membership residual.
pub const SO41_CERTIFICATE: f64 = 1e-12;

/// Lie-algebra membership residual ||Aᵀη + ηA|| for assembled frame matrices.
pub const LIE_ALGEBRA_RESIDUAL: f64 = 1e-12;

/// Commutator check for the closed-form flat-torus generator.
pub const TORUS_COMMUTATOR: f64 = 1e-12;

/// Maurer-Cartan residual gate before extended-frame integration.
pub const MAURER_CARTAN_GATE: f64 = 1e-8;

/// Budget on the rows-first vs columns-first frame discrepancy; beyond this
/// the integration is reported as failed.
pub const PATH_DISCREPANCY_BUDGET: f64 = 1e-5;

/// Closedness check for the hyperbolic-angle integration in the
/// normal-frame parallelization (rows-then-columns vs columns-then-rows).
pub const BETA_CLOSEDNESS: f64 = 1e-7;

/// Condition-number ceiling for the dual-section linear solve.
pub const DUAL_SECTION_COND_MAX: f64 = 1e12;

/// Calapso normalization: residual non-constancy of q allowed after the
/// coordinate rotation.
pub const CALAPSO_Q_CONSTANCY: f64 = 1e-7;

/// RK4 substeps per grid cell for extended-frame integration. At 64x64 over
/// [0,2pi)² this keeps the global error near 1e-9, under the tightest frame
/// tolerance (closed-form reproduction at 1e-8; the RK4 error scales as the
/// fourth power of the substep).
pub const RK_SUBSTEPS: usize = 32;

/// Step for 4th-order derivative stencils applied to analytic closures.
/// Truncation ~ step⁴/90 · |f⁽⁶⁾|, roundoff ~ 5.33 eps |f| / step²; 5e-3
/// balances both near 5e-11 for O(1) closures.
pub const CLOSURE_FD_STEP: f64 = 5e-3;

/// Residual level treated as the roundoff floor when measuring convergence
/// orders; errors below it make the order estimate meaningless.
pub const ORDER_FLOOR: f64 = 1e-13;
