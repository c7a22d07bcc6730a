//! Scalar invariant fields of a marginally trapped surface and the
//! Gauss/Codazzi/Ricci compatibility residuals, with curvature and
//! holomorphicity diagnostics.
//!
//! Derivatives of derived scalar fields are taken from the best available
//! source: exact closures supplied by the generator, 4th-order stencils on
//! analytic closures, or grid finite differences (always used for sampled
//! and deformed surfaces).

use crate::chart::{self, Backend, JetGrid, SecondFundamental};
use crate::error::Error;
use crate::grid::{self, closure_fd, Field, GridSpec};
use crate::report::ResidualReport;
use crate::tol;
use crate::{Result, C64};

/// Property flags with the residuals that justified them.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFlags {
    pub marginally_trapped: bool,
    pub marginal_residual: f64,
    pub flat_normal_bundle: bool,
    pub flat_normal_residual: f64,
    pub parallel_mean_curvature: bool,
    pub parallel_h_residual: f64,
    pub non_isotropic: bool,
    pub min_abs_q: f64,
    pub max_abs_q: f64,
    pub min_abs_big_q: f64,
}

/// Per-point scalar invariants.
#[derive(Clone)]
pub struct InvariantField {
    pub grid: GridSpec,
    pub backend: Backend,
    pub u: Field<f64>,
    pub xi1: Field<C64>,
    pub xi2: Field<C64>,
    pub sigma: Field<C64>,
    pub h1: Field<f64>,
    pub h2: Field<f64>,
    /// Mean curvature function h = ½(h₁+h₂).
    pub h: Field<f64>,
    /// Phase of ξ₁−ξ₂ (wrapped to (−π,π]; derivative work is branch-free).
    pub theta: Field<f64>,
    /// Hopf differential coefficient q = ξ₁−ξ₂.
    pub q: Field<C64>,
    /// Quartic differential coefficient Q = ξ₁²−ξ₂².
    pub big_q: Field<C64>,
    /// δ-differential coefficient δ = h·(ξ₁−ξ₂).
    pub delta: Field<C64>,
    pub k_gauss: Field<f64>,
    pub k_normal: Field<f64>,
    pub flags: SurfaceFlags,
}

/// z̄-derivatives needed by the compatibility equations, curvature routes
/// and holomorphicity diagnostics.
#[derive(Clone)]
pub struct BasicDerivs {
    pub u_zzbar: Field<C64>,
    pub xi1_zbar: Field<C64>,
    pub xi2_zbar: Field<C64>,
    pub sigma_zbar: Field<C64>,
    pub h1_z: Field<C64>,
    pub h2_z: Field<C64>,
    pub h_z: Field<C64>,
    /// Cells to exclude from residual norms along non-periodic edges: the
    /// full stencil reach of the deepest derivative chain (3 for the FD
    /// backend, where scalars already sit 2 stencils away from positions).
    pub report_margin: usize,
}

/// z-derivatives feeding the conformal-invariant (κ, s) machinery.
#[derive(Clone)]
pub struct LiftDerivs {
    pub u_z: Field<C64>,
    pub u_zz: Field<C64>,
    pub q_z: Field<C64>,
    pub q_zbar: Field<C64>,
    pub q_zz: Field<C64>,
    pub q_zbzb: Field<C64>,
    pub sigma_z: Field<C64>,
    pub xi1_z: Field<C64>,
    pub xi2_z: Field<C64>,
    pub h_z: Field<C64>,
}

/// Pipeline options: thresholds with no canonical quantitative value.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Non-isotropy requires min |Q| above this.
    pub non_isotropic_min_q: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            non_isotropic_min_q: tol::NON_ISOTROPIC_MIN_Q,
        }
    }
}

/// Backend-aware parallel-mean-curvature threshold.
pub fn parallel_h_tolerance(backend: Backend, spacing: f64) -> f64 {
    match backend {
        Backend::Analytic => tol::PARALLEL_H_ANALYTIC,
        Backend::FiniteDifference => tol::PARALLEL_H_FD_FACTOR * spacing * spacing,
    }
}

// ---------------------------------------------------------------------------
// derivative machinery

enum Route {
    Exact,
    Closure,
    Grid,
}

struct DerivEngine<'a> {
    jet: &'a JetGrid,
    probe: Option<crate::catalog::ScalarDerivs>,
}

/// Which derived scalar is being differentiated.
#[derive(Clone, Copy, PartialEq)]
enum Scalar {
    U,
    Xi1,
    Xi2,
    Sigma,
    H1,
    H2,
    H,
}

impl<'a> DerivEngine<'a> {
    fn new(jet: &'a JetGrid) -> Self {
        let probe = jet.source.as_ref().map(|s| {
            s.surface
                .scalar_derivs_at(jet.grid.x(0), jet.grid.y(0))
        });
        DerivEngine { jet, probe }
    }

    fn sign(&self) -> f64 {
        self.jet.source.as_ref().map_or(1.0, |s| s.n1_sign)
    }

    fn sample(&self, which: Scalar, x: f64, y: f64) -> C64 {
        let src = self.jet.source.as_ref().expect("sampler requires an analytic source");
        let p = chart::point_scalars(src.surface.as_ref(), x, y, src.n1_sign);
        match which {
            Scalar::U => C64::new(p.u, 0.0),
            Scalar::Xi1 => p.xi1,
            Scalar::Xi2 => p.xi2,
            Scalar::Sigma => p.sigma,
            Scalar::H1 => C64::new(p.h1, 0.0),
            Scalar::H2 => C64::new(p.h2, 0.0),
            Scalar::H => C64::new(0.5 * (p.h1 + p.h2), 0.0),
        }
    }

    fn grid_field(&self, which: Scalar, sf: &SecondFundamental) -> Field<C64> {
        match which {
            Scalar::U => grid::complexify(&sf.u),
            Scalar::Xi1 => sf.xi1.clone(),
            Scalar::Xi2 => sf.xi2.clone(),
            Scalar::Sigma => sf.sigma.clone(),
            Scalar::H1 => grid::complexify(&sf.h1),
            Scalar::H2 => grid::complexify(&sf.h2),
            Scalar::H => grid::complexify(&sf.h1.zip_map(&sf.h2, |a, b| 0.5 * (a + b))),
        }
    }

    /// Exact closure value of the requested first derivative, when the
    /// generator provides it. The n1 gauge sign flips ξ₁-, σ- and h-type
    /// derivatives together with their fields.
    fn exact_dz(&self, which: Scalar, x: f64, y: f64) -> Option<C64> {
        let src = self.jet.source.as_ref()?;
        let sd = src.surface.scalar_derivs_at(x, y);
        let s = src.n1_sign;
        match which {
            Scalar::U => sd.u_z,
            Scalar::Xi1 => sd.xi1_z.map(|v| v * s),
            Scalar::Xi2 => sd.xi2_z,
            Scalar::Sigma => sd.sigma_z.map(|v| v * s),
            // the closure h_z refers to the marginal-gauge mean curvature;
            // it serves h, h1 and h2 only when the surface is marginal
            Scalar::H1 | Scalar::H2 | Scalar::H => sd.h_z.map(|v| v * s),
        }
    }

    fn exact_dzbar(&self, which: Scalar, x: f64, y: f64) -> Option<C64> {
        let src = self.jet.source.as_ref()?;
        let sd = src.surface.scalar_derivs_at(x, y);
        let s = src.n1_sign;
        match which {
            Scalar::U => sd.u_z.map(|v| v.conj()),
            Scalar::Xi1 => sd.xi1_zbar.map(|v| v * s),
            Scalar::Xi2 => sd.xi2_zbar,
            Scalar::Sigma => sd.sigma_zbar.map(|v| v * s),
            // h real: h_z̄ = conj(h_z)
            Scalar::H1 | Scalar::H2 | Scalar::H => sd.h_z.map(|v| v.conj() * s),
        }
    }

    fn route(&self, which: Scalar, marginal_ok: bool) -> Route {
        if self.jet.source.is_none() {
            return Route::Grid;
        }
        let p = self.probe.as_ref().unwrap();
        let have = match which {
            Scalar::U => p.u_z.is_some(),
            Scalar::Xi1 => p.xi1_zbar.is_some() || p.xi1_z.is_some(),
            Scalar::Xi2 => p.xi2_zbar.is_some() || p.xi2_z.is_some(),
            Scalar::Sigma => p.sigma_z.is_some(),
            Scalar::H1 | Scalar::H2 | Scalar::H => p.h_z.is_some() && marginal_ok,
        };
        if have {
            Route::Exact
        } else {
            Route::Closure
        }
    }

    /// First derivative field; `zbar` picks ∂z̄ over ∂z.
    fn d1(&self, which: Scalar, sf: &SecondFundamental, zbar: bool, marginal_ok: bool) -> Field<C64> {
        let g = self.jet.grid;
        match self.route(which, marginal_ok) {
            Route::Exact => {
                let exact_has = |x: f64, y: f64| {
                    if zbar {
                        self.exact_dzbar(which, x, y)
                    } else {
                        self.exact_dz(which, x, y)
                    }
                };
                if exact_has(g.x(0), g.y(0)).is_some() {
                    return Field::from_fn(&g, |i, j| exact_has(g.x(i), g.y(j)).unwrap());
                }
                // exact data exists only for the other parity: conjugate trick
                // works for real scalars; otherwise fall through to closures.
                self.closure_d1(which, zbar)
            }
            Route::Closure => self.closure_d1(which, zbar),
            Route::Grid => {
                let f = self.grid_field(which, sf);
                if zbar {
                    grid::dzbar(&f, &g)
                } else {
                    grid::dz(&f, &g)
                }
            }
        }
    }

    fn closure_d1(&self, which: Scalar, zbar: bool) -> Field<C64> {
        let g = self.jet.grid;
        let st = tol::CLOSURE_FD_STEP;
        Field::from_fn(&g, |i, j| {
            let (x, y) = (g.x(i), g.y(j));
            let fx = closure_fd::d1(|t| self.sample(which, t, y), x, st);
            let fy = closure_fd::d1(|t| self.sample(which, x, t), y, st);
            if zbar {
                (fx + C64::i() * fy) * 0.5
            } else {
                (fx - C64::i() * fy) * 0.5
            }
        })
    }

    /// Mixed derivative ∂z∂z̄ = ¼(∂xx + ∂yy).
    fn dzzbar(&self, which: Scalar, sf: &SecondFundamental) -> Field<C64> {
        let g = self.jet.grid;
        if self.jet.source.is_some() {
            if which == Scalar::U && self.probe.as_ref().is_some_and(|p| p.u_zzbar.is_some()) {
                if let Some(src) = self.jet.source.as_ref() {
                    return Field::from_fn(&g, |i, j| {
                        src.surface
                            .scalar_derivs_at(g.x(i), g.y(j))
                            .u_zzbar
                            .unwrap()
                    });
                }
            }
            let st = tol::CLOSURE_FD_STEP;
            Field::from_fn(&g, |i, j| {
                let (x, y) = (g.x(i), g.y(j));
                let fxx = closure_fd::d2(|t| self.sample(which, t, y), x, st);
                let fyy = closure_fd::d2(|t| self.sample(which, x, t), y, st);
                (fxx + fyy) * 0.25
            })
        } else {
            let f = self.grid_field(which, sf);
            grid::dzbar(&grid::dz(&f, &g), &g)
        }
    }

    /// Second derivative ∂z∂z = ¼(∂xx − 2i∂xy − ∂yy).
    fn dzz(&self, which: Scalar, sf: &SecondFundamental) -> Field<C64> {
        let g = self.jet.grid;
        if self.jet.source.is_some() {
            if which == Scalar::U && self.probe.as_ref().is_some_and(|p| p.u_zz.is_some()) {
                if let Some(src) = self.jet.source.as_ref() {
                    return Field::from_fn(&g, |i, j| {
                        src.surface.scalar_derivs_at(g.x(i), g.y(j)).u_zz.unwrap()
                    });
                }
            }
            let st = tol::CLOSURE_FD_STEP;
            Field::from_fn(&g, |i, j| {
                let (x, y) = (g.x(i), g.y(j));
                let fxx = closure_fd::d2(|t| self.sample(which, t, y), x, st);
                let fyy = closure_fd::d2(|t| self.sample(which, x, t), y, st);
                let fxy = closure_fd::dxy(|a, b| self.sample(which, a, b), x, y, st);
                (fxx - fyy - 2.0 * C64::i() * fxy) * 0.25
            })
        } else {
            let f = self.grid_field(which, sf);
            grid::dz(&grid::dz(&f, &g), &g)
        }
    }

    /// ∂z of a first-derivative field (used for q_zz/q_z̄z̄): exact closures
    /// are differentiated by stencils, everything else by grid FD of the
    /// supplied field.
    fn dz_of_deriv(
        &self,
        which: Scalar,
        zbar_inner: bool,
        outer_zbar: bool,
        fallback: &Field<C64>,
    ) -> Field<C64> {
        let g = self.jet.grid;
        let available = self.jet.source.is_some()
            && if zbar_inner {
                self.exact_dzbar(which, g.x(0), g.y(0)).is_some()
            } else {
                self.exact_dz(which, g.x(0), g.y(0)).is_some()
            };
        if available {
            let st = tol::CLOSURE_FD_STEP;
            let eval = |x: f64, y: f64| -> C64 {
                if zbar_inner {
                    self.exact_dzbar(which, x, y).unwrap()
                } else {
                    self.exact_dz(which, x, y).unwrap()
                }
            };
            Field::from_fn(&g, |i, j| {
                let (x, y) = (g.x(i), g.y(j));
                let fx = closure_fd::d1(|t| eval(t, y), x, st);
                let fy = closure_fd::d1(|t| eval(x, t), y, st);
                if outer_zbar {
                    (fx + C64::i() * fy) * 0.5
                } else {
                    (fx - C64::i() * fy) * 0.5
                }
            })
        } else if outer_zbar {
            grid::dzbar(fallback, &g)
        } else {
            grid::dz(fallback, &g)
        }
    }
}

/// Compute the z̄-derivative bundle for compatibility and curvature work.
pub fn basic_derivatives(jet: &JetGrid, sf: &SecondFundamental) -> BasicDerivs {
    let eng = DerivEngine::new(jet);
    let marginal = is_marginal_quick(sf);
    let _ = eng.sign();
    BasicDerivs {
        u_zzbar: eng.dzzbar(Scalar::U, sf),
        xi1_zbar: eng.d1(Scalar::Xi1, sf, true, marginal),
        xi2_zbar: eng.d1(Scalar::Xi2, sf, true, marginal),
        sigma_zbar: eng.d1(Scalar::Sigma, sf, true, marginal),
        h1_z: eng.d1(Scalar::H1, sf, false, marginal),
        h2_z: eng.d1(Scalar::H2, sf, false, marginal),
        h_z: eng.d1(Scalar::H, sf, false, marginal),
        report_margin: report_margin(jet),
    }
}

/// Margin for residual norms: periodic charts need none; analytic open
/// charts lose one cell to first-order grid stencils of derived fields;
/// the FD backend loses the composed stencil reach (positions -> jets ->
/// scalars -> derivatives).
pub fn report_margin(jet: &JetGrid) -> usize {
    if jet.grid.periodic_x && jet.grid.periodic_y {
        0
    } else if jet.backend == Backend::FiniteDifference {
        3
    } else {
        1
    }
}

/// Compute the z-derivative bundle used by the κ/s machinery.
pub fn lift_derivatives(jet: &JetGrid, sf: &SecondFundamental) -> LiftDerivs {
    let eng = DerivEngine::new(jet);
    let marginal = is_marginal_quick(sf);
    let xi1_z = eng.d1(Scalar::Xi1, sf, false, marginal);
    let xi2_z = eng.d1(Scalar::Xi2, sf, false, marginal);
    let xi1_zbar = eng.d1(Scalar::Xi1, sf, true, marginal);
    let xi2_zbar = eng.d1(Scalar::Xi2, sf, true, marginal);
    let q_z = xi1_z.zip_map(&xi2_z, |a, b| a - b);
    let q_zbar = xi1_zbar.zip_map(&xi2_zbar, |a, b| a - b);
    // q_zz = ∂z q_z, q_z̄z̄ = ∂z̄ q_z̄: stencil the exact closures when both
    // ξ-derivative closures exist, otherwise grid-differentiate the fields
    let g = jet.grid;
    let have_xi_z = jet.source.is_some()
        && eng.exact_dz(Scalar::Xi1, g.x(0), g.y(0)).is_some()
        && eng.exact_dz(Scalar::Xi2, g.x(0), g.y(0)).is_some();
    let q_zz = if have_xi_z {
        let a = eng.dz_of_deriv(Scalar::Xi1, false, false, &q_z);
        let b = eng.dz_of_deriv(Scalar::Xi2, false, false, &q_z);
        a.zip_map(&b, |x, y| x - y)
    } else {
        eng.dz_of_deriv(Scalar::Xi1, false, false, &q_z) // falls back to grid dz(q_z)
    };
    let have_xi_zbar = jet.source.is_some()
        && eng.exact_dzbar(Scalar::Xi1, g.x(0), g.y(0)).is_some()
        && eng.exact_dzbar(Scalar::Xi2, g.x(0), g.y(0)).is_some();
    let q_zbzb = if have_xi_zbar {
        let a = eng.dz_of_deriv(Scalar::Xi1, true, true, &q_zbar);
        let b = eng.dz_of_deriv(Scalar::Xi2, true, true, &q_zbar);
        a.zip_map(&b, |x, y| x - y)
    } else {
        eng.dz_of_deriv(Scalar::Xi1, true, true, &q_zbar)
    };
    LiftDerivs {
        u_z: eng.d1(Scalar::U, sf, false, marginal),
        u_zz: eng.dzz(Scalar::U, sf),
        q_z,
        q_zbar,
        q_zz,
        q_zbzb,
        sigma_z: eng.d1(Scalar::Sigma, sf, false, marginal),
        xi1_z,
        xi2_z,
        h_z: eng.d1(Scalar::H, sf, false, marginal),
    }
}

fn is_marginal_quick(sf: &SecondFundamental) -> bool {
    let mut worst = 0.0f64;
    for k in 0..sf.h1.data.len() {
        let (h1, h2) = (sf.h1.data[k], sf.h2.data[k]);
        let r = (h1 - h2).abs() / (1.0 + h1.abs() + h2.abs());
        worst = worst.max(r);
    }
    worst < tol::MARGINAL_REL
}

// ---------------------------------------------------------------------------
// operations

/// Gaussian curvature by both routes:
/// route A: K = −2e⁻²ᵘ u_z̄z; route B: K = 1 − e⁻⁴ᵘ(|ξ₁|²−|ξ₂|²).
pub fn gaussian_curvature(
    sf: &SecondFundamental,
    basic: &BasicDerivs,
) -> (Field<f64>, Field<f64>, f64) {
    let route_a = sf
        .u
        .zip_map(&basic.u_zzbar, |u, uzz| -2.0 * (-2.0 * u).exp() * uzz.re);
    let mut route_b = sf.u.clone();
    for k in 0..route_b.data.len() {
        let e4u = (4.0 * sf.u.data[k]).exp();
        route_b.data[k] =
            1.0 - (sf.xi1.data[k].norm_sqr() - sf.xi2.data[k].norm_sqr()) / e4u;
    }
    let mut disc = 0.0f64;
    for k in 0..route_a.data.len() {
        disc = disc.max((route_a.data[k] - route_b.data[k]).abs());
    }
    (route_a, route_b, disc)
}

/// Normal curvature by both routes:
/// route A: K⊥ = −e⁻²ᵘ Im σ_z̄; route B: K⊥ = −e⁻²ᵘ Im(ξ₁ξ̄₂).
pub fn normal_curvature(
    sf: &SecondFundamental,
    basic: &BasicDerivs,
) -> (Field<f64>, Field<f64>, f64) {
    let route_a = sf
        .u
        .zip_map(&basic.sigma_zbar, |u, s| -(-2.0 * u).exp() * s.im);
    let mut route_b = sf.u.clone();
    for k in 0..route_b.data.len() {
        let e2u = (2.0 * sf.u.data[k]).exp();
        route_b.data[k] = -(sf.xi1.data[k] * sf.xi2.data[k].conj()).im / e2u;
    }
    let mut disc = 0.0f64;
    for k in 0..route_a.data.len() {
        disc = disc.max((route_a.data[k] - route_b.data[k]).abs());
    }
    (route_a, route_b, disc)
}

/// Mean curvature function h = ½(h₁+h₂), the marginal residual |h₁−h₂| and
/// the marginally-trapped flag.
pub fn mean_curvature_data(sf: &SecondFundamental) -> (Field<f64>, Field<f64>, bool) {
    let h = sf.h1.zip_map(&sf.h2, |a, b| 0.5 * (a + b));
    let res = sf.h1.zip_map(&sf.h2, |a, b| (a - b).abs());
    let mut flag = true;
    for k in 0..res.data.len() {
        let scale = 1.0 + sf.h1.data[k].abs() + sf.h2.data[k].abs();
        if res.data[k] >= tol::MARGINAL_REL * scale {
            flag = false;
            break;
        }
    }
    (h, res, flag)
}

/// Coefficient of ∇⊥H along N₁+N₂: h_z + σh, with the parallel-H flag.
/// Requires the marginally trapped gauge.
pub fn normal_derivative_h(
    field: &InvariantField,
    basic: &BasicDerivs,
) -> Result<(Field<C64>, bool, f64)> {
    if !field.flags.marginally_trapped {
        return Err(Error::State(
            "normal_derivative_H requires a marginally trapped surface".into(),
        ));
    }
    let grid = field.grid;
    let coeff = Field::from_fn(&grid, |i, j| {
        basic.h_z.at(i, j) + field.sigma.at(i, j) * field.h.at(i, j)
    });
    let m = chart::margin(&grid);
    let mut worst = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_interior(i, j, m) {
                worst = worst.max(coeff.at(i, j).norm());
            }
        }
    }
    let tolv = parallel_h_tolerance(field.backend, grid.spacing());
    Ok((coeff, worst < tolv, worst))
}

/// The four compatibility residuals (marginal gauge not assumed):
/// Gauss: 2u_z̄z + e²ᵘ − e⁻²ᵘ(|ξ₁|²−|ξ₂|²) + e²ᵘ(h₁²−h₂²)
/// Codazzi-1: e²ᵘ(h₁,z + σh₂) − ξ₁,z̄ − ξ₂σ̄
/// Codazzi-2: e²ᵘ(h₂,z + σh₁) − ξ₂,z̄ − ξ₁σ̄
/// Ricci: Im σ_z̄ − e⁻²ᵘ Im(ξ₁ξ̄₂)
pub fn compatibility_residuals(
    sf: &SecondFundamental,
    basic: &BasicDerivs,
    grid: &GridSpec,
) -> ResidualReport {
    let mut gauss = Field::<f64>::zeros(grid);
    let mut cod1 = Field::<f64>::zeros(grid);
    let mut cod2 = Field::<f64>::zeros(grid);
    let mut ricci = Field::<f64>::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let u = sf.u.at(i, j);
            let (e2u, em2u) = ((2.0 * u).exp(), (-2.0 * u).exp());
            let (xi1, xi2) = (sf.xi1.at(i, j), sf.xi2.at(i, j));
            let (h1, h2) = (sf.h1.at(i, j), sf.h2.at(i, j));
            let sg = sf.sigma.at(i, j);
            let g = 2.0 * basic.u_zzbar.at(i, j).re + e2u
                - em2u * (xi1.norm_sqr() - xi2.norm_sqr())
                + e2u * (h1 * h1 - h2 * h2);
            *gauss.at_mut(i, j) = g.abs();
            let c1 = (basic.h1_z.at(i, j) + sg * h2) * e2u
                - basic.xi1_zbar.at(i, j)
                - xi2 * sg.conj();
            *cod1.at_mut(i, j) = c1.norm();
            let c2 = (basic.h2_z.at(i, j) + sg * h1) * e2u
                - basic.xi2_zbar.at(i, j)
                - xi1 * sg.conj();
            *cod2.at_mut(i, j) = c2.norm();
            let r = basic.sigma_zbar.at(i, j).im - em2u * (xi1 * xi2.conj()).im;
            *ricci.at_mut(i, j) = r.abs();
        }
    }
    let m = basic.report_margin.max(chart::margin(grid));
    let mut rep = ResidualReport::default();
    let sp = grid.spacing();
    let (mx, mn) = grid::norms_with_margin(&gauss, grid, m);
    rep.push("gauss", mx, mn, sp);
    let (mx, mn) = grid::norms_with_margin(&cod1, grid, m);
    rep.push("codazzi_1", mx, mn, sp);
    let (mx, mn) = grid::norms_with_margin(&cod2, grid, m);
    rep.push("codazzi_2", mx, mn, sp);
    let (mx, mn) = grid::norms_with_margin(&ricci, grid, m);
    rep.push("ricci", mx, mn, sp);
    rep
}

/// Holomorphicity residuals ‖∂z̄q‖, ‖∂z̄Q‖, ‖∂z̄δ‖ and the equivalence
/// checks of the classification lemmas.
pub struct HopfReport {
    pub residuals: ResidualReport,
    /// q holomorphic ⟺ flat normal bundle (meaningful when q ≢ 0).
    pub q_holomorphic: bool,
    /// δ (and Q) holomorphic ⟺ parallel mean curvature (non-isotropic case).
    pub delta_holomorphic: bool,
    pub big_q_holomorphic: bool,
}

pub fn hopf_differentials(
    field: &InvariantField,
    basic: &BasicDerivs,
) -> HopfReport {
    let grid = field.grid;
    let q_zbar = basic.xi1_zbar.zip_map(&basic.xi2_zbar, |a, b| a - b);
    let mut bigq_zbar = Field::<C64>::zeros(&grid);
    let mut delta_zbar = Field::<C64>::zeros(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x1, x2) = (field.xi1.at(i, j), field.xi2.at(i, j));
            *bigq_zbar.at_mut(i, j) =
                2.0 * (x1 * basic.xi1_zbar.at(i, j) - x2 * basic.xi2_zbar.at(i, j));
            // δ = h q, h real: ∂z̄δ = h_z̄ q + h ∂z̄q
            *delta_zbar.at_mut(i, j) = basic.h_z.at(i, j).conj() * field.q.at(i, j)
                + q_zbar.at(i, j) * field.h.at(i, j);
        }
    }
    let m = basic.report_margin.max(chart::margin(&grid));
    let sp = grid.spacing();
    let mut rep = ResidualReport::default();
    let (qmx, qmn) = grid::norms_with_margin(&q_zbar.map(|v| v.norm()), &grid, m);
    rep.push("q_dzbar", qmx, qmn, sp);
    let (bmx, bmn) = grid::norms_with_margin(&bigq_zbar.map(|v| v.norm()), &grid, m);
    rep.push("big_q_dzbar", bmx, bmn, sp);
    let (dmx, dmn) = grid::norms_with_margin(&delta_zbar.map(|v| v.norm()), &grid, m);
    rep.push("delta_dzbar", dmx, dmn, sp);
    HopfReport {
        residuals: rep,
        q_holomorphic: qmx < tol::CONSTRAINED_WILLMORE_HOLO,
        delta_holomorphic: dmx < tol::CONSTRAINED_WILLMORE_HOLO,
        big_q_holomorphic: bmx < tol::CONSTRAINED_WILLMORE_HOLO,
    }
}

/// Full invariant pipeline on a framed jet grid.
pub fn analyze(jet: &JetGrid, opts: &Options) -> Result<(InvariantField, BasicDerivs)> {
    let sf = chart::second_fundamental_data(jet)?;
    let basic = basic_derivatives(jet, &sf);
    let grid = jet.grid;
    let (h, marg_res, marginally_trapped) = mean_curvature_data(&sf);
    let q = sf.xi1.zip_map(&sf.xi2, |a, b| a - b);
    // Q = q·(ξ₁+ξ₂) from the shared fields, so the algebraic identity with
    // q holds bit-exactly
    let sum = sf.xi1.zip_map(&sf.xi2, |a, b| a + b);
    let big_q = q.zip_map(&sum, |a, b| a * b);
    let delta = q.zip_map(&grid::complexify(&h), |a, b| a * b);
    let theta = q.map(|v| v.arg());
    let (_ka, kb, _) = gaussian_curvature(&sf, &basic);
    let (_na, nb, _) = normal_curvature(&sf, &basic);

    let mut marginal_residual = 0.0f64;
    for &v in &marg_res.data {
        marginal_residual = marginal_residual.max(v);
    }
    let m = basic.report_margin.max(chart::margin(&grid));
    let mut flat_res = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_interior(i, j, m) {
                flat_res = flat_res.max(basic.sigma_zbar.at(i, j).im.abs());
            }
        }
    }
    let mut min_q = f64::INFINITY;
    let mut max_q = 0.0f64;
    let mut min_bq = f64::INFINITY;
    for k in 0..q.data.len() {
        min_q = min_q.min(q.data[k].norm());
        max_q = max_q.max(q.data[k].norm());
        min_bq = min_bq.min(big_q.data[k].norm());
    }
    // parallel-H residual (only meaningful in the marginal gauge)
    let mut parallel_res = 0.0f64;
    if marginally_trapped {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.is_interior(i, j, m) {
                    let v = basic.h_z.at(i, j) + sf.sigma.at(i, j) * h.at(i, j);
                    parallel_res = parallel_res.max(v.norm());
                }
            }
        }
    } else {
        parallel_res = f64::NAN;
    }
    let ph_tol = parallel_h_tolerance(jet.backend, grid.spacing());
    let flags = SurfaceFlags {
        marginally_trapped,
        marginal_residual,
        flat_normal_bundle: flat_res < tol::FLAT_NORMAL_BUNDLE_MAX,
        flat_normal_residual: flat_res,
        parallel_mean_curvature: marginally_trapped && parallel_res < ph_tol,
        parallel_h_residual: parallel_res,
        non_isotropic: min_bq > opts.non_isotropic_min_q,
        min_abs_q: min_q,
        max_abs_q: max_q,
        min_abs_big_q: min_bq,
    };
    Ok((
        InvariantField {
            grid,
            backend: jet.backend,
            u: sf.u.clone(),
            xi1: sf.xi1.clone(),
            xi2: sf.xi2.clone(),
            sigma: sf.sigma.clone(),
            h1: sf.h1.clone(),
            h2: sf.h2.clone(),
            h,
            theta,
            q,
            big_q,
            delta,
            k_gauss: kb,
            k_normal: nb,
            flags,
        },
        basic,
    ))
}

impl InvariantField {
    pub fn second_fundamental(&self) -> SecondFundamental {
        SecondFundamental {
            u: self.u.clone(),
            xi1: self.xi1.clone(),
            xi2: self.xi2.clone(),
            sigma: self.sigma.clone(),
            h1: self.h1.clone(),
            h2: self.h2.clone(),
        }
    }

    /// Max absolute difference of every scalar field against another
    /// invariant field (same layout); used by the isometry-invariance and
    /// verification paths.
    pub fn max_field_difference(&self, other: &InvariantField) -> f64 {
        let mut worst = 0.0f64;
        let cmp_r = |a: &Field<f64>, b: &Field<f64>, w: &mut f64| {
            for k in 0..a.data.len() {
                *w = w.max((a.data[k] - b.data[k]).abs());
            }
        };
        let cmp_c = |a: &Field<C64>, b: &Field<C64>, w: &mut f64| {
            for k in 0..a.data.len() {
                *w = w.max((a.data[k] - b.data[k]).norm());
            }
        };
        cmp_r(&self.u, &other.u, &mut worst);
        cmp_c(&self.xi1, &other.xi1, &mut worst);
        cmp_c(&self.xi2, &other.xi2, &mut worst);
        cmp_c(&self.sigma, &other.sigma, &mut worst);
        cmp_r(&self.h1, &other.h1, &mut worst);
        cmp_r(&self.h2, &other.h2, &mut worst);
        cmp_r(&self.h, &other.h, &mut worst);
        cmp_c(&self.q, &other.q, &mut worst);
        cmp_c(&self.big_q, &other.big_q, &mut worst);
        cmp_c(&self.delta, &other.delta, &mut worst);
        cmp_r(&self.k_gauss, &other.k_gauss, &mut worst);
        cmp_r(&self.k_normal, &other.k_normal, &mut worst);
        worst
    }
}
