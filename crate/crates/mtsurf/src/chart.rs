//! 2-jets of a conformal spacelike immersion on a rectangular chart and the
//! adapted positively oriented Lorentzian normal frame.
//!
//! Two backends fill the jets: closed-form generators from the catalog
//! (exact at every chart point) and second-order finite differences on a
//! tabulated position grid. Downstream residual reports exclude a one-cell
//! margin along non-periodic axes, where one-sided stencils pollute the
//! convergence order.

use crate::catalog::{AnalyticSurface, SurfaceDefinition};
use crate::error::Error;
use crate::grid::{self, Field, GridSpec};
use crate::minkowski::{complex_bilinear_inner, inner_cr, lorentz_inner, CVec5, Mat5, Vec5};
use crate::tol;
use crate::{Result, C64};
use std::sync::Arc;

/// Which machinery produced the jets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Analytic,
    FiniteDifference,
}

/// Analytic generator attached to a jet grid, plus the sign applied to N₁
/// by the marginally-trapped gauge (so scalar closures stay consistent).
#[derive(Clone)]
pub struct AnalyticSource {
    pub surface: Arc<dyn AnalyticSurface>,
    pub n1_sign: f64,
}

/// Per-grid-point 2-jet of the immersion plus the adapted normal frame.
#[derive(Clone)]
pub struct JetGrid {
    pub grid: GridSpec,
    pub backend: Backend,
    pub f: Field<Vec5>,
    pub fz: Field<CVec5>,
    pub fzbar: Field<CVec5>,
    pub fzz: Field<CVec5>,
    pub fzzbar: Field<CVec5>,
    pub n1: Field<Vec5>,
    pub n2: Field<Vec5>,
    pub dzn1: Field<CVec5>,
    pub dzn2: Field<CVec5>,
    pub frame_built: bool,
    pub source: Option<AnalyticSource>,
}

/// Second-fundamental data extracted from a framed jet grid.
#[derive(Clone)]
pub struct SecondFundamental {
    pub u: Field<f64>,
    pub xi1: Field<C64>,
    pub xi2: Field<C64>,
    pub sigma: Field<C64>,
    pub h1: Field<f64>,
    pub h2: Field<f64>,
}

/// Conformality diagnostics: isotropy of f_z and spacelikeness of the chart.
#[derive(Debug, Clone)]
pub struct ConformalityReport {
    pub isotropy_max: f64,
    pub isotropy_mean: f64,
    pub spacelike_min: f64,
    pub spacing: f64,
}

/// Outcome of the normal-frame construction.
#[derive(Debug, Clone)]
pub struct FrameBuildReport {
    /// Whether the marginally-trapped gauge flipped the sign of N₁.
    pub n1_flipped: bool,
    /// Max euclidean jump of N₁ across the periodic wrap seam (continuity
    /// indicator on multiply connected charts), when a seam exists.
    pub seam_jump: Option<f64>,
}

/// Outcome of the normal-frame parallelization.
pub struct ParallelizeOutcome {
    pub jet: JetGrid,
    pub beta: Field<f64>,
    /// Max |σ′| after the gauge.
    pub sigma_residual: f64,
    /// Path-independence of the β integral (rows-first vs columns-first).
    pub closedness: f64,
}

pub(crate) fn margin(grid: &GridSpec) -> usize {
    if grid.periodic_x && grid.periodic_y {
        0
    } else {
        1
    }
}

/// Sample an analytic definition on a grid.
///
/// The generator supplies exact jets and the adapted frame; membership in
/// the quadric is validated scale-aware and the worst point reported.
pub fn sample_analytic_surface(def: &SurfaceDefinition, grid: &GridSpec) -> Result<JetGrid> {
    let surface = def
        .analytic()
        .ok_or_else(|| Error::Validation("analytic backend needs an analytic definition".into()))?
        .clone();
    let mut worst = 0.0f64;
    let mut worst_at = (0usize, 0usize);
    let mut f = Field::zeros(grid);
    let mut fz = Field::zeros(grid);
    let mut fzz = Field::zeros(grid);
    let mut fzzbar = Field::zeros(grid);
    let mut n1 = Field::zeros(grid);
    let mut n2 = Field::zeros(grid);
    let mut dzn1 = Field::zeros(grid);
    let mut dzn2 = Field::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let jet = surface.jet_at(grid.x(i), grid.y(j));
            let scale = jet.f.norm_euclid().powi(2).max(1.0);
            let dev = (lorentz_inner(&jet.f, &jet.f) - 1.0).abs() / scale;
            if dev > worst {
                worst = dev;
                worst_at = (i, j);
            }
            *f.at_mut(i, j) = jet.f;
            *fz.at_mut(i, j) = jet.fz;
            *fzz.at_mut(i, j) = jet.fzz;
            *fzzbar.at_mut(i, j) = jet.fzzbar;
            *n1.at_mut(i, j) = jet.n1;
            *n2.at_mut(i, j) = jet.n2;
            *dzn1.at_mut(i, j) = jet.dzn1;
            *dzn2.at_mut(i, j) = jet.dzn2;
        }
    }
    if worst > tol::QUADRIC_MEMBERSHIP_REL {
        let (i, j) = worst_at;
        return Err(Error::Validation(format!(
            "definition leaves the quadric: |<f,f>-1|/||f||² = {worst:.3e} at ({i},{j}) x={:.4} y={:.4}",
            grid.x(i),
            grid.y(j)
        )));
    }
    let fzbar = fz.map(|v| v.conj());
    Ok(JetGrid {
        grid: *grid,
        backend: Backend::Analytic,
        f,
        fz,
        fzbar,
        fzz,
        fzzbar,
        n1,
        n2,
        dzn1,
        dzn2,
        frame_built: true,
        source: Some(AnalyticSource {
            surface,
            n1_sign: 1.0,
        }),
    })
}

/// Build jets from tabulated positions by second-order central differences
/// (∂z = ½(∂x − i∂y)); the mixed jet composes the two first-order operators.
pub fn jets_by_finite_difference(positions: &Field<Vec5>, grid: &GridSpec) -> Result<JetGrid> {
    if grid.nx < 5 || grid.ny < 5 {
        return Err(Error::Domain(format!(
            "finite differences need at least 5 points per axis, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    if positions.nx != grid.nx || positions.ny != grid.ny {
        return Err(Error::GridMismatch(format!(
            "positions are {}x{}, grid is {}x{}",
            positions.nx, positions.ny, grid.nx, grid.ny
        )));
    }
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = positions.at(i, j);
            if (lorentz_inner(&p, &p) - 1.0).abs()
                > tol::TABULATED_QUADRIC_ABS * p.norm_euclid().powi(2).max(1.0)
            {
                return Err(Error::Validation(format!(
                    "tabulated position off the quadric at ({i},{j}): <f,f> = {:.8}",
                    lorentz_inner(&p, &p)
                )));
            }
        }
    }
    let fc = positions.map(|v| v.complexify());
    let fz = grid::dz(&fc, grid);
    let fzz = grid::dz(&fz, grid);
    let fzzbar = grid::dzbar(&fz, grid);
    let fzbar = fz.map(|v| v.conj());
    Ok(JetGrid {
        grid: *grid,
        backend: Backend::FiniteDifference,
        f: positions.clone(),
        fz,
        fzbar,
        fzz,
        fzzbar,
        n1: Field::zeros(grid),
        n2: Field::zeros(grid),
        dzn1: Field::zeros(grid),
        dzn2: Field::zeros(grid),
        frame_built: false,
        source: None,
    })
}

/// Conformal parameter u = ½ log⟨f_z, f_z̄⟩ (the hermitian pairing of f_z
/// with itself, real and positive for spacelike charts).
pub fn conformal_factor(jet: &JetGrid) -> Result<Field<f64>> {
    let grid = &jet.grid;
    let mut u = Field::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let pairing = complex_bilinear_inner(&jet.fz.at(i, j), &jet.fzbar.at(i, j)).re;
            if pairing <= 0.0 {
                return Err(Error::NotSpacelike {
                    i,
                    j,
                    x: grid.x(i),
                    y: grid.y(j),
                    value: pairing,
                });
            }
            *u.at_mut(i, j) = 0.5 * pairing.ln();
        }
    }
    Ok(u)
}

/// Isotropy max |⟨f_z,f_z⟩| and spacelikeness min ⟨f_z,f_z̄⟩ over the
/// interior (margins excluded on non-periodic axes).
pub fn conformality_residual(jet: &JetGrid) -> ConformalityReport {
    let grid = &jet.grid;
    let m = margin(grid);
    let mut iso_max = 0.0f64;
    let mut iso_sum = 0.0f64;
    let mut count = 0usize;
    let mut space_min = f64::INFINITY;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_interior(i, j, m) {
                continue;
            }
            let iso = complex_bilinear_inner(&jet.fz.at(i, j), &jet.fz.at(i, j)).norm();
            iso_max = iso_max.max(iso);
            iso_sum += iso;
            count += 1;
            let sp = complex_bilinear_inner(&jet.fz.at(i, j), &jet.fzbar.at(i, j)).re;
            space_min = space_min.min(sp);
        }
    }
    ConformalityReport {
        isotropy_max: iso_max,
        isotropy_mean: if count > 0 { iso_sum / count as f64 } else { 0.0 },
        spacelike_min: space_min,
        spacing: grid.spacing(),
    }
}

/// Unit tangent columns F₁ = √2 e⁻ᵘ Re f_z, F₂ = −√2 e⁻ᵘ Im f_z of the
/// adapted-frame normalization f_z = (eᵘ/√2)(F₁ − iF₂).
pub fn tangent_columns(fz: &CVec5) -> Result<(Vec5, Vec5)> {
    let e2u = complex_bilinear_inner(fz, &fz.conj()).re;
    if e2u <= 0.0 {
        return Err(Error::Geometry("tangent direction is not spacelike".into()));
    }
    let s = std::f64::consts::SQRT_2 / e2u.sqrt();
    Ok((fz.re() * s, fz.im() * (-s)))
}

/// Full adapted frame (f, F₁, F₂, N₁, N₂) at one grid point.
pub fn adapted_frame_at(jet: &JetGrid, i: usize, j: usize) -> Result<Mat5> {
    if !jet.frame_built {
        return Err(Error::State("normal frame not built".into()));
    }
    let (f1, f2) = tangent_columns(&jet.fz.at(i, j))?;
    Ok(Mat5 {
        cols: [jet.f.at(i, j), f1, f2, jet.n1.at(i, j), jet.n2.at(i, j)],
    })
}

/// η-orthogonal projection of v off the spacelike span {f, F₁, F₂}.
fn project_to_normal_space(v: &Vec5, f: &Vec5, f1: &Vec5, f2: &Vec5) -> Vec5 {
    let mut w = *v;
    for basis in [f, f1, f2] {
        let c = lorentz_inner(&w, basis) / lorentz_inner(basis, basis);
        w = w - *basis * c;
    }
    w
}

/// Eigen-split of the 2×2 Lorentzian Gram of (w1,w2): returns the unit
/// spacelike and unit future timelike directions of the normal plane.
fn lorentz_plane_frame(w1: &Vec5, w2: &Vec5) -> Result<(Vec5, Vec5)> {
    let a = lorentz_inner(w1, w1);
    let b = lorentz_inner(w1, w2);
    let c = lorentz_inner(w2, w2);
    let det = a * c - b * b;
    if det >= 0.0 {
        return Err(Error::Geometry(format!(
            "normal space is not of signature (1,1): gram det = {det:.3e}"
        )));
    }
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    let lam_plus = 0.5 * (a + c + disc);
    let lam_minus = 0.5 * (a + c - disc);
    let eigvec = |lam: f64| -> (f64, f64) {
        // pick the better-conditioned row of (G - lam I)
        if (a - lam).abs() > (c - lam).abs() {
            (b, lam - a)
        } else {
            (lam - c, b)
        }
    };
    let (s1, s2) = eigvec(lam_plus);
    let (t1, t2) = eigvec(lam_minus);
    let s = *w1 * s1 + *w2 * s2;
    let t = *w1 * t1 + *w2 * t2;
    let s_sq = lorentz_inner(&s, &s);
    let t_sq = lorentz_inner(&t, &t);
    if s_sq <= 0.0 || t_sq >= 0.0 {
        return Err(Error::Geometry(
            "normal plane eigen-split failed to produce (spacelike, timelike)".into(),
        ));
    }
    let mut t = t * (1.0 / (-t_sq).sqrt());
    if t.0[4] < 0.0 {
        t = -t;
    }
    let s = s * (1.0 / s_sq.sqrt());
    Ok((s, t))
}

/// Construct the positively oriented normal frame: N₂ timelike unit future
/// pointing, N₁ spacelike unit, both orthogonal to f and f_z, orientation
/// fixed by det(f, F₁, F₂, N₁, N₂) > 0. Continuity is kept by seeding each
/// point's normal-plane basis from the previously framed neighbor (column 0
/// first, then along each row). If the surface is marginally trapped in the
/// h₁ = −h₂ gauge, N₁ is flipped globally so that h₁ = h₂.
pub fn build_positively_oriented_normal_frame(
    jet: &JetGrid,
) -> Result<(JetGrid, FrameBuildReport)> {
    let grid = jet.grid;
    let mut out = jet.clone();
    let mut n1 = Field::<Vec5>::zeros(&grid);
    let mut n2 = Field::<Vec5>::zeros(&grid);

    {
        let build_point = |n1: &mut Field<Vec5>,
                               n2: &mut Field<Vec5>,
                               i: usize,
                               j: usize,
                               seeds: Option<(Vec5, Vec5)>|
         -> Result<()> {
            let f = out.f.at(i, j);
            let (f1, f2) = tangent_columns(&out.fz.at(i, j))?;
            let (w1, w2) = match seeds {
                Some((s1, s2)) => (
                    project_to_normal_space(&s1, &f, &f1, &f2),
                    project_to_normal_space(&s2, &f, &f1, &f2),
                ),
                None => {
                    // pivoted completion: the two basis vectors with the
                    // largest residuals off the tangent space
                    let mut best: Vec<(f64, Vec5)> = (0..5)
                        .map(|k| {
                            let r = project_to_normal_space(&Vec5::basis(k), &f, &f1, &f2);
                            (r.norm_euclid(), r)
                        })
                        .collect();
                    best.sort_by(|a, b| b.0.total_cmp(&a.0));
                    (best[0].1, best[1].1)
                }
            };
            let (s, t) = lorentz_plane_frame(&w1, &w2)?;
            let mut s = s;
            let frame = Mat5 {
                cols: [f, f1, f2, s, t],
            };
            if frame.det() < 0.0 {
                s = -s;
            }
            *n1.at_mut(i, j) = s;
            *n2.at_mut(i, j) = t;
            Ok(())
        };

        build_point(&mut n1, &mut n2, 0, 0, None)?;
        for j in 1..grid.ny {
            let seeds = (n1.at(0, j - 1), n2.at(0, j - 1));
            build_point(&mut n1, &mut n2, 0, j, Some(seeds))?;
        }
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let seeds = (n1.at(i - 1, j), n2.at(i - 1, j));
                build_point(&mut n1, &mut n2, i, j, Some(seeds))?;
            }
        }
    }

    // marginally trapped gauge: flip N1 when the frame came out in the
    // h1 = -h2 convention
    let u = conformal_factor(&out)?;
    let mut anti = 0.0f64;
    let mut marg = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let e2u = (2.0 * u.at(i, j)).exp();
            let h1 = inner_cr(&out.fzzbar.at(i, j), &n1.at(i, j)).re / e2u;
            let h2 = -inner_cr(&out.fzzbar.at(i, j), &n2.at(i, j)).re / e2u;
            anti += (h1 + h2) * (h1 + h2);
            marg += (h1 - h2) * (h1 - h2);
            scale = scale.max(h1.abs() + h2.abs());
        }
    }
    let already_marginal = marg.sqrt() <= tol::MARGINAL_FLIP_REL * (1.0 + scale);
    let flipped = !already_marginal && anti < marg && scale > 0.0;
    if flipped {
        n1 = n1.map(|v| -v);
    }

    out.n1 = n1;
    out.n2 = n2;
    out.dzn1 = grid::dz(&out.n1.map(|v| v.complexify()), &grid);
    out.dzn2 = grid::dz(&out.n2.map(|v| v.complexify()), &grid);
    out.frame_built = true;
    if let Some(src) = &mut out.source {
        if flipped {
            src.n1_sign = -src.n1_sign;
        }
    }

    let seam_jump = if grid.periodic_x && grid.nx > 1 {
        let mut worst = 0.0f64;
        for j in 0..grid.ny {
            worst = worst.max((out.n1.at(0, j) - out.n1.at(grid.nx - 1, j)).norm_euclid());
        }
        Some(worst)
    } else {
        None
    };
    Ok((
        out,
        FrameBuildReport {
            n1_flipped: flipped,
            seam_jump,
        },
    ))
}

/// Extract (u, ξ₁, ξ₂, σ, h₁, h₂): ξ₁ = ⟨f_zz,N₁⟩, ξ₂ = −⟨f_zz,N₂⟩,
/// h₁ = e⁻²ᵘ⟨f_z̄z,N₁⟩, h₂ = −e⁻²ᵘ⟨f_z̄z,N₂⟩, σ = −⟨∂zN₁,N₂⟩.
pub fn second_fundamental_data(jet: &JetGrid) -> Result<SecondFundamental> {
    if !jet.frame_built {
        return Err(Error::State(
            "second_fundamental_data: normal frame not built".into(),
        ));
    }
    let grid = &jet.grid;
    let u = conformal_factor(jet)?;
    let mut xi1 = Field::zeros(grid);
    let mut xi2 = Field::zeros(grid);
    let mut sigma = Field::zeros(grid);
    let mut h1 = Field::zeros(grid);
    let mut h2 = Field::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let e2u = (2.0 * u.at(i, j)).exp();
            *xi1.at_mut(i, j) = inner_cr(&jet.fzz.at(i, j), &jet.n1.at(i, j));
            *xi2.at_mut(i, j) = -inner_cr(&jet.fzz.at(i, j), &jet.n2.at(i, j));
            *h1.at_mut(i, j) = inner_cr(&jet.fzzbar.at(i, j), &jet.n1.at(i, j)).re / e2u;
            *h2.at_mut(i, j) = -inner_cr(&jet.fzzbar.at(i, j), &jet.n2.at(i, j)).re / e2u;
            *sigma.at_mut(i, j) = -inner_cr(&jet.dzn1.at(i, j), &jet.n2.at(i, j));
        }
    }
    Ok(SecondFundamental {
        u,
        xi1,
        xi2,
        sigma,
        h1,
        h2,
    })
}

/// Gauge the normal frame parallel (σ′ ≈ 0) on a flat normal bundle by
/// integrating dβ = σdz + σ̄dz̄ from the grid origin (column 0 upward, then
/// rows rightward) and applying the hyperbolic rotation that cancels σ.
/// Closedness is verified by re-integrating rows-first.
pub fn parallelize_normal_frame(
    sf: &SecondFundamental,
    jet: &JetGrid,
) -> Result<ParallelizeOutcome> {
    let grid = jet.grid;
    // flat-normal-bundle gate by the Ricci right-hand side (no derivatives)
    let mut kperp = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let e2u = (2.0 * sf.u.at(i, j)).exp();
            let v = (sf.xi1.at(i, j) * sf.xi2.at(i, j).conj()).im / e2u;
            kperp = kperp.max(v.abs());
        }
    }
    if kperp > tol::FLAT_NORMAL_BUNDLE_MAX {
        return Err(Error::NonIntegrable(format!(
            "normal bundle is not flat: max e^{{-2u}} |Im(xi1 conj(xi2))| = {kperp:.3e}"
        )));
    }
    // dβ = σdz + σ̄dz̄: β_x = 2 Re σ, β_y = -2 Im σ
    let gx = sf.sigma.map(|s| 2.0 * s.re);
    let gy = sf.sigma.map(|s| -2.0 * s.im);
    let beta_cols = integrate_scalar_one_form(&gx, &gy, &grid, true);
    let beta_rows = integrate_scalar_one_form(&gx, &gy, &grid, false);
    let mut closedness = 0.0f64;
    for k in 0..beta_cols.data.len() {
        closedness = closedness.max((beta_cols.data[k] - beta_rows.data[k]).abs());
    }
    let beta = beta_cols;

    // rotate by -β so that σ′ = σ - β_z vanishes; the frame derivatives
    // rotate by the chain rule, with β_z taken as the numerical gradient of
    // the integrated potential (so the reported σ′ honestly measures how
    // well dβ matches σdz + σ̄dz̄ on the grid). β is a potential, not a
    // periodic field, so its gradient ignores periodic wrap.
    let mut open = grid;
    open.periodic_x = false;
    open.periodic_y = false;
    let beta_z = grid::dz(&grid::complexify(&beta), &open);
    let mut out = jet.clone();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let b = beta.at(i, j);
            let (ch, sh) = (b.cosh(), b.sinh());
            let n1 = jet.n1.at(i, j);
            let n2 = jet.n2.at(i, j);
            let n1p = n1 * ch - n2 * sh;
            let n2p = n1 * (-sh) + n2 * ch;
            *out.n1.at_mut(i, j) = n1p;
            *out.n2.at_mut(i, j) = n2p;
            let bz = beta_z.at(i, j);
            let d1 = jet.dzn1.at(i, j);
            let d2 = jet.dzn2.at(i, j);
            *out.dzn1.at_mut(i, j) = d1 * ch + d2 * (-sh) - n2p.complexify() * bz;
            *out.dzn2.at_mut(i, j) = d1 * (-sh) + d2 * ch - n1p.complexify() * bz;
        }
    }
    // a grid-integrated gauge invalidates exact scalar closures
    let beta_max = beta.data.iter().fold(0.0f64, |m, &b| m.max(b.abs()));
    if beta_max > 1e-14 {
        out.source = None;
    }
    let sf2 = second_fundamental_data(&out)?;
    let mut sigma_residual = 0.0f64;
    let m = margin(&grid).max(1);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if i >= m && i + m < grid.nx && j >= m && j + m < grid.ny {
                sigma_residual = sigma_residual.max(sf2.sigma.at(i, j).norm());
            }
        }
    }
    Ok(ParallelizeOutcome {
        jet: out,
        beta,
        sigma_residual,
        closedness,
    })
}

/// Cumulative trapezoid integration of the one-form gx dx + gy dy from the
/// grid origin; `columns_first` selects the seed path.
pub fn integrate_scalar_one_form(
    gx: &Field<f64>,
    gy: &Field<f64>,
    grid: &GridSpec,
    columns_first: bool,
) -> Field<f64> {
    let mut out = Field::<f64>::zeros(grid);
    let (hx, hy) = (grid.hx(), grid.hy());
    if columns_first {
        for j in 1..grid.ny {
            let v = out.at(0, j - 1) + 0.5 * hy * (gy.at(0, j - 1) + gy.at(0, j));
            *out.at_mut(0, j) = v;
        }
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let v = out.at(i - 1, j) + 0.5 * hx * (gx.at(i - 1, j) + gx.at(i, j));
                *out.at_mut(i, j) = v;
            }
        }
    } else {
        for i in 1..grid.nx {
            let v = out.at(i - 1, 0) + 0.5 * hx * (gx.at(i - 1, 0) + gx.at(i, 0));
            *out.at_mut(i, 0) = v;
        }
        for i in 0..grid.nx {
            for j in 1..grid.ny {
                let v = out.at(i, j - 1) + 0.5 * hy * (gy.at(i, j - 1) + gy.at(i, j));
                *out.at_mut(i, j) = v;
            }
        }
    }
    out
}

/// Transport the whole adapted jet by an ambient isometry Φ. A
/// time-orientation-preserving Φ carries positively oriented frames to
/// positively oriented frames, so the frame columns map along.
pub fn isometry_apply(jet: &JetGrid, phi: &Mat5) -> Result<JetGrid> {
    if !phi.preserves_time_orientation() {
        return Err(Error::CausalOrientation(
            "isometry_apply: transformation reverses time orientation".into(),
        ));
    }
    let mut out = jet.clone();
    out.f = jet.f.map(|v| phi.mul_vec(&v));
    out.fz = jet.fz.map(|v| phi.mul_cvec(&v));
    out.fzbar = jet.fzbar.map(|v| phi.mul_cvec(&v));
    out.fzz = jet.fzz.map(|v| phi.mul_cvec(&v));
    out.fzzbar = jet.fzzbar.map(|v| phi.mul_cvec(&v));
    out.n1 = jet.n1.map(|v| phi.mul_vec(&v));
    out.n2 = jet.n2.map(|v| phi.mul_vec(&v));
    out.dzn1 = jet.dzn1.map(|v| phi.mul_cvec(&v));
    out.dzn2 = jet.dzn2.map(|v| phi.mul_cvec(&v));
    // derived scalars are isometry invariants of the surface: keep closures
    Ok(out)
}

/// Pointwise derived scalars from an analytic generator, in the same gauge
/// as the grid fields (n1_sign accounts for the marginal flip).
#[derive(Debug, Clone, Copy)]
pub struct PointScalars {
    pub u: f64,
    pub xi1: C64,
    pub xi2: C64,
    pub h1: f64,
    pub h2: f64,
    pub sigma: C64,
}

pub fn point_scalars(surface: &dyn AnalyticSurface, x: f64, y: f64, n1_sign: f64) -> PointScalars {
    let j = surface.jet_at(x, y);
    let e2u = complex_bilinear_inner(&j.fz, &j.fz.conj()).re;
    let u = 0.5 * e2u.ln();
    PointScalars {
        u,
        xi1: inner_cr(&j.fzz, &j.n1) * n1_sign,
        xi2: -inner_cr(&j.fzz, &j.n2),
        h1: inner_cr(&j.fzzbar, &j.n1).re / e2u * n1_sign,
        h2: -inner_cr(&j.fzzbar, &j.n2).re / e2u,
        sigma: -inner_cr(&j.dzn1, &j.n2) * n1_sign,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{
        degenerate_graph_surface, flat_homogeneous_torus, DegenerateSurfaceParams,
        FlatTorusParams, Profile,
    };
    use crate::grid::convergence_order;

    fn torus_def(h: f64) -> SurfaceDefinition {
        flat_homogeneous_torus(FlatTorusParams { h }).unwrap()
    }

    #[test]
    fn analytic_jets_satisfy_invariants() {
        let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let f = jet.f.at(i, j);
                assert!((lorentz_inner(&f, &f) - 1.0).abs() < 1e-10);
                let n1 = jet.n1.at(i, j);
                let n2 = jet.n2.at(i, j);
                assert!((lorentz_inner(&n1, &n1) - 1.0).abs() < 1e-10);
                assert!((lorentz_inner(&n2, &n2) + 1.0).abs() < 1e-10);
                assert!(lorentz_inner(&n1, &n2).abs() < 1e-10);
                assert!(n2.0[4] > 0.0);
            }
        }
        let rep = conformality_residual(&jet);
        assert!(rep.isotropy_max < 1e-10, "isotropy {}", rep.isotropy_max);
        assert!(rep.spacelike_min > 0.9);
    }

    #[test]
    fn conformal_factor_flat_torus_is_zero() {
        let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
        let jet = sample_analytic_surface(&torus_def(0.5), &grid).unwrap();
        let u = conformal_factor(&jet).unwrap();
        let worst = u.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(worst < 1e-11, "u max {worst}");
    }

    #[test]
    fn conformal_factor_drops_by_log2_under_w_eq_2z() {
        // w = 2z means z(w) = w/2
        let def = torus_def(1.0);
        let re = crate::catalog::reparametrized(
            &def,
            crate::catalog::HoloMap::Affine {
                a: C64::new(0.5, 0.0),
                b: C64::new(0.0, 0.0),
            },
        )
        .unwrap();
        let grid = GridSpec::open_square(0.1, 0.1, 1.0, 8);
        let jet = sample_analytic_surface(&re, &grid).unwrap();
        let u = conformal_factor(&jet).unwrap();
        for &v in &u.data {
            assert!((v + (2.0f64).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn fd_jets_converge_second_order_to_analytic() {
        let def = torus_def(1.0);
        let surface = def.analytic().unwrap().clone();
        let errs: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&n| {
                // non-periodic chart: the generator is not 2pi-periodic
                let grid = GridSpec::open_square(0.0, 0.0, 2.0, n);
                let pos = Field::from_fn(&grid, |i, j| surface.jet_at(grid.x(i), grid.y(j)).f);
                let jet = jets_by_finite_difference(&pos, &grid).unwrap();
                let mut worst = 0.0f64;
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        if grid.is_interior(i, j, 1) {
                            let exact = surface.jet_at(grid.x(i), grid.y(j)).fz;
                            worst = worst.max((jet.fz.at(i, j) - exact).norm_euclid());
                        }
                    }
                }
                worst
            })
            .collect();
        let o1 = convergence_order(errs[0], errs[1]).unwrap();
        let o2 = convergence_order(errs[1], errs[2]).unwrap();
        assert!(o1 > 1.8 && o1 < 2.2, "order {o1} errs {errs:?}");
        assert!(o2 > 1.8 && o2 < 2.2, "order {o2} errs {errs:?}");
    }

    #[test]
    fn constant_grid_has_zero_derivatives() {
        let grid = GridSpec::open_square(0.0, 0.0, 1.0, 8);
        let pos = Field::from_fn(&grid, |_, _| Vec5::basis(0));
        let jet = jets_by_finite_difference(&pos, &grid).unwrap();
        for v in &jet.fz.data {
            assert!(v.norm_euclid() < 1e-14);
        }
        for v in &jet.fzz.data {
            assert!(v.norm_euclid() < 1e-14);
        }
    }

    #[test]
    fn fd_resolution_gate() {
        let grid = GridSpec::open_square(0.0, 0.0, 1.0, 4);
        let pos = Field::from_fn(&grid, |_, _| Vec5::basis(0));
        assert!(matches!(
            jets_by_finite_difference(&pos, &grid),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rebuilt_frame_matches_generator_at_origin() {
        let grid = GridSpec::open_square(0.0, 0.0, 2.0, 12);
        let def = torus_def(1.0);
        let jet = sample_analytic_surface(&def, &grid).unwrap();
        let mut stripped = jet.clone();
        stripped.frame_built = false;
        stripped.n1 = Field::zeros(&grid);
        stripped.n2 = Field::zeros(&grid);
        let (rebuilt, rep) = build_positively_oriented_normal_frame(&stripped).unwrap();
        assert!(!rep.n1_flipped);
        assert!((rebuilt.n1.at(0, 0) - Vec5::basis(3)).norm_euclid() < 1e-10);
        assert!((rebuilt.n2.at(0, 0) - Vec5::basis(4)).norm_euclid() < 1e-10);
        // frames agree with the generator up to the normal boost gauge, so
        // the future null line N1+N2 agrees after normalization
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let a = crate::minkowski::null_line_normalize(
                    &(rebuilt.n1.at(i, j) + rebuilt.n2.at(i, j)),
                )
                .unwrap();
                let b =
                    crate::minkowski::null_line_normalize(&(jet.n1.at(i, j) + jet.n2.at(i, j)))
                        .unwrap();
                assert!((a - b).norm_euclid() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_gauge_boost_preserves_null_line() {
        let grid = GridSpec::open_square(0.0, 0.0, 1.5, 8);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let (i, j) = (3, 5);
        let (n1, n2) = (jet.n1.at(i, j), jet.n2.at(i, j));
        let s = 0.37f64;
        let b1 = n1 * s.cosh() + n2 * s.sinh();
        let b2 = n1 * s.sinh() + n2 * s.cosh();
        let a = crate::minkowski::null_line_normalize(&(n1 + n2)).unwrap();
        let b = crate::minkowski::null_line_normalize(&(b1 + b2)).unwrap();
        assert!((a - b).norm_euclid() < 1e-12);
    }

    #[test]
    fn second_fundamental_flat_torus() {
        let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let sf = second_fundamental_data(&jet).unwrap();
        for k in 0..grid.len() {
            assert!((sf.xi1.data[k] - 1.0).norm() < 1e-10);
            assert!(sf.xi2.data[k].norm() < 1e-10);
            assert!((sf.h1.data[k] - 1.0).abs() < 1e-10);
            assert!((sf.h2.data[k] - 1.0).abs() < 1e-10);
            assert!(sf.sigma.data[k].norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_has_equal_xi() {
        let grid = GridSpec::open_square(-0.6, -0.6, 1.2, 12);
        let def = degenerate_graph_surface(DegenerateSurfaceParams {
            profile: Profile::SinX { amplitude: 0.1 },
        })
        .unwrap();
        let jet = sample_analytic_surface(&def, &grid).unwrap();
        let sf = second_fundamental_data(&jet).unwrap();
        for k in 0..grid.len() {
            assert!((sf.xi1.data[k] - sf.xi2.data[k]).norm() < 1e-11);
            assert!((sf.h1.data[k] - sf.h2.data[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn parallelize_identity_on_torus() {
        let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let sf = second_fundamental_data(&jet).unwrap();
        let out = parallelize_normal_frame(&sf, &jet).unwrap();
        let bmax = out.beta.data.iter().fold(0.0f64, |m, &b| m.max(b.abs()));
        assert!(bmax < 1e-10, "beta {bmax}");
        assert!(out.sigma_residual < 1e-9);
    }

    #[test]
    fn parallelize_recovers_twisted_frame() {
        // twist the torus frame by beta = 0.1 x, then undo it
        let grid = GridSpec::open_square(0.0, 0.0, 2.0, 32);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let mut twisted = jet.clone();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let b = 0.1 * grid.x(i);
                let bz = C64::new(0.05, 0.0); // d(0.1x)/dz
                let (ch, sh) = (b.cosh(), b.sinh());
                let n1 = jet.n1.at(i, j);
                let n2 = jet.n2.at(i, j);
                let n1t = n1 * ch + n2 * sh;
                let n2t = n1 * sh + n2 * ch;
                *twisted.n1.at_mut(i, j) = n1t;
                *twisted.n2.at_mut(i, j) = n2t;
                let d1 = jet.dzn1.at(i, j);
                let d2 = jet.dzn2.at(i, j);
                *twisted.dzn1.at_mut(i, j) = d1 * ch + d2 * sh + n2t.complexify() * bz;
                *twisted.dzn2.at_mut(i, j) = d1 * sh + d2 * ch + n1t.complexify() * bz;
            }
        }
        twisted.source = None;
        let sf = second_fundamental_data(&twisted).unwrap();
        // interior sigma of the twisted frame is the constant 0.05
        assert!((sf.sigma.at(10, 10) - 0.05).norm() < 1e-8);
        let out = parallelize_normal_frame(&sf, &twisted).unwrap();
        assert!(out.sigma_residual < 1e-8, "sigma' {}", out.sigma_residual);
        assert!(out.closedness < 1e-10);
    }

    #[test]
    fn parallelize_rejects_curved_normal_bundle() {
        // synthetic data with Im(xi1 conj(xi2)) != 0
        let grid = GridSpec::open_square(0.0, 0.0, 1.0, 8);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let mut sf = second_fundamental_data(&jet).unwrap();
        sf.xi2 = sf.xi2.map(|_| C64::new(0.0, 0.5));
        assert!(matches!(
            parallelize_normal_frame(&sf, &jet),
            Err(Error::NonIntegrable(_))
        ));
    }

    #[test]
    fn isometry_transport_preserves_frame_relations() {
        let grid = GridSpec::open_square(0.0, 0.0, 1.0, 8);
        let jet = sample_analytic_surface(&torus_def(1.0), &grid).unwrap();
        let phi = Mat5::boost34(0.6);
        let moved = isometry_apply(&jet, &phi).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let n2 = moved.n2.at(i, j);
                assert!((lorentz_inner(&n2, &n2) + 1.0).abs() < 1e-11);
                assert!(n2.0[4] > 0.0);
            }
        }
    }
}
