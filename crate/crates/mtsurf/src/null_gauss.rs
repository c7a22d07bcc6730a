//! The null Gauss map into the conformal 3-sphere, its canonical lift, the
//! conformal invariants κ and s by two independent routes, Willmore energy,
//! Moebius covariance, classification and congruence testing.
//!
//! All V⊥-valued quantities are identified with scalars: a section of the
//! orthogonal complement of the central sphere congruence is b·f, pairings
//! reduce to products of the scalar coefficients (⟨f,f⟩ = 1), and the
//! connection D acts as the plain derivative of the coefficient.

use crate::catalog::HoloMap;
use crate::chart::{self, JetGrid};
use crate::error::Error;
use crate::grid::{self, Field, GridSpec};
use crate::invariants::{BasicDerivs, InvariantField, LiftDerivs};
use crate::minkowski::{
    complex_bilinear_inner, inner_cr, lorentz_inner, null_line_normalize,
    so41_membership_residual, CVec5, Mat5, Vec5,
};
use crate::report::{Classification, ClassificationThresholds, CongruenceReport, ResidualReport};
use crate::tol;
use crate::{Result, C64};

/// Canonical lift Y of the null Gauss map with its 2-jet and the dual
/// section N of the central sphere congruence.
pub struct MoebiusFrame {
    pub y: Field<Vec5>,
    pub y_z: Field<CVec5>,
    pub y_zbar: Field<CVec5>,
    pub y_zz: Field<CVec5>,
    pub y_zzbar: Field<CVec5>,
    pub n_dual: Field<Vec5>,
    /// Max deviation of ⟨Y_z,Y_z̄⟩ from ½ over the grid.
    pub pairing_residual: f64,
    /// Worst of the five defining relations of N over the grid.
    pub n_residual: f64,
    /// Worst condition estimate of the per-point dual-section solve.
    pub cond_max: f64,
}

/// Conformal invariants of the null Gauss map on a chart.
pub struct ConformalInvariants {
    pub grid: GridSpec,
    /// κ = e^{u+iθ}/√2 (scalar identification).
    pub kappa: Field<C64>,
    /// Schwartzian, route B (from the invariant data; always available).
    pub s: Field<C64>,
    /// Schwartzian, route A: 2⟨Y_zz, N⟩ (needs the Moebius frame).
    pub s_route_a: Option<Field<C64>>,
    /// Max |s_A − s_B| when both routes were computed.
    pub route_discrepancy: Option<f64>,
    /// w = (u−iθ)_z by branch-free logarithmic derivatives of q.
    pub w: Field<C64>,
    /// w_z = (u−iθ)_zz.
    pub w_z: Field<C64>,
    /// Euclidean-lift representative of the null Gauss line (last comp. 1).
    pub g: Field<Vec5>,
}

fn require_nonisotropic(field: &InvariantField) -> Result<()> {
    if field.flags.min_abs_q <= tol::CANONICAL_LIFT_MIN_Q {
        // name the offending point
        let grid = field.grid;
        let mut worst = (0usize, 0usize, f64::INFINITY);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = field.q.at(i, j).norm();
                if v < worst.2 {
                    worst = (i, j, v);
                }
            }
        }
        return Err(Error::Isotropy {
            i: worst.0,
            j: worst.1,
            x: grid.x(worst.0),
            y: grid.y(worst.1),
            value: worst.2,
        });
    }
    Ok(())
}

/// G = null-line normalization of N₁+N₂ per point.
pub fn null_gauss_map(jet: &JetGrid) -> Result<Field<Vec5>> {
    if !jet.frame_built {
        return Err(Error::State("null_gauss_map: normal frame not built".into()));
    }
    let grid = jet.grid;
    let mut g = Field::zeros(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            *g.at_mut(i, j) = null_line_normalize(&(jet.n1.at(i, j) + jet.n2.at(i, j)))?;
        }
    }
    Ok(g)
}

/// Second z-derivatives of X = N₁+N₂ from the structure equations, using
/// the derivative bundles for the scalar coefficients.
struct XJets {
    x: Field<Vec5>,
    x_z: Field<CVec5>,
    x_zz: Field<CVec5>,
    x_zzbar: Field<CVec5>,
}

fn x_jets(
    jet: &JetGrid,
    field: &InvariantField,
    basic: &BasicDerivs,
    lift: &LiftDerivs,
) -> XJets {
    let grid = jet.grid;
    let mut x = Field::zeros(&grid);
    let mut x_z = Field::zeros(&grid);
    let mut x_zz = Field::zeros(&grid);
    let mut x_zzbar = Field::zeros(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let n1 = jet.n1.at(i, j);
            let n2 = jet.n2.at(i, j);
            let d1 = jet.dzn1.at(i, j);
            let d2 = jet.dzn2.at(i, j);
            let fz = jet.fz.at(i, j);
            let fzb = jet.fzbar.at(i, j);
            let fzz = jet.fzz.at(i, j);
            let fzzb = jet.fzzbar.at(i, j);
            let fzbzb = fzz.conj();
            let em2u = (-2.0 * field.u.at(i, j)).exp();
            let (x1, x2) = (field.xi1.at(i, j), field.xi2.at(i, j));
            let (h1, h2) = (field.h1.at(i, j), field.h2.at(i, j));
            let sg = field.sigma.at(i, j);
            let (h1z, h2z) = (basic.h1_z.at(i, j), basic.h2_z.at(i, j));
            let (x1z, x2z) = (lift.xi1_z.at(i, j), lift.xi2_z.at(i, j));
            let (x1zb, x2zb) = (basic.xi1_zbar.at(i, j), basic.xi2_zbar.at(i, j));
            let uz = lift.u_z.at(i, j);
            let (sgz, sgzb) = (lift.sigma_z.at(i, j), basic.sigma_zbar.at(i, j));

            *x.at_mut(i, j) = n1 + n2;
            *x_z.at_mut(i, j) = d1 + d2;

            // ∂z∂zN₁ = −h₁_z f_z − h₁ f_zz − e⁻²ᵘ(ξ₁_z − 2u_zξ₁) f_z̄
            //          − e⁻²ᵘξ₁ f_zz̄ + σ_z N₂ + σ ∂zN₂
            let dd1 = fz * (-h1z)
                + fzz * (-h1)
                + fzb * (-(em2u * (x1z - 2.0 * uz * x1)))
                + fzzb * (-(em2u * x1))
                + n2.complexify() * sgz
                + d2 * sg;
            let dd2 = fz * h2z
                + fzz * h2
                + fzb * (em2u * (x2z - 2.0 * uz * x2))
                + fzzb * (em2u * x2)
                + n1.complexify() * sgz
                + d1 * sg;
            *x_zz.at_mut(i, j) = dd1 + dd2;

            // ∂z̄∂zN₁ and ∂z̄∂zN₂
            let md1 = fz * (-h1z.conj())
                + fzzb * (-h1)
                + fzb * (-(em2u * (x1zb - 2.0 * uz.conj() * x1)))
                + fzbzb * (-(em2u * x1))
                + n2.complexify() * sgzb
                + d2.conj() * sg;
            let md2 = fz * h2z.conj()
                + fzzb * h2
                + fzb * (em2u * (x2zb - 2.0 * uz.conj() * x2))
                + fzbzb * (em2u * x2)
                + n1.complexify() * sgzb
                + d1.conj() * sg;
            *x_zzbar.at_mut(i, j) = md1 + md2;
        }
    }
    XJets {
        x,
        x_z,
        x_zz,
        x_zzbar,
    }
}

/// Canonical lift Y = eᵘ/(√2|ξ₂−ξ₁|)·(N₁+N₂), with jets by the chart
/// backend (structure-equation chains for the frame part, grid or closure
/// derivatives for the scalar factor).
pub fn canonical_lift(
    jet: &JetGrid,
    field: &InvariantField,
    basic: &BasicDerivs,
    lift: &LiftDerivs,
) -> Result<CanonicalLift> {
    require_nonisotropic(field)?;
    let grid = jet.grid;
    let xj = x_jets(jet, field, basic, lift);
    // ρ = e^u / (√2 |q|)
    let rho = Field::from_fn(&grid, |i, j| {
        field.u.at(i, j).exp() / (std::f64::consts::SQRT_2 * field.q.at(i, j).norm())
    });
    // ρ_z/ρ = u_z − Re(q_z/q) written complex: |q|_z = (q_z q̄ + q conj(q_z̄))/(2|q|)
    let rho_z = Field::from_fn(&grid, |i, j| {
        let q = field.q.at(i, j);
        let qz = lift.q_z.at(i, j);
        let qzb = lift.q_zbar.at(i, j);
        let n2 = q.norm_sqr();
        let dlog_absq = (qz * q.conj() + q * qzb.conj()) / (2.0 * n2);
        (lift.u_z.at(i, j) - dlog_absq) * rho.at(i, j)
    });
    // second derivatives of ρ by grid differences of the ρ_z field (exact
    // for the constant-coefficient generators)
    let rho_zz = grid::dz(&rho_z, &grid);
    let rho_zzbar = grid::dzbar(&rho_z, &grid);

    let mut y = Field::zeros(&grid);
    let mut y_z = Field::zeros(&grid);
    let mut y_zz = Field::zeros(&grid);
    let mut y_zzbar = Field::zeros(&grid);
    let mut pairing_residual = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let r = rho.at(i, j);
            let rz = rho_z.at(i, j);
            let x = xj.x.at(i, j).complexify();
            let xz = xj.x_z.at(i, j);
            *y.at_mut(i, j) = xj.x.at(i, j) * r;
            let yz = x * rz + xz * r;
            *y_z.at_mut(i, j) = yz;
            *y_zz.at_mut(i, j) = x * rho_zz.at(i, j) + xz * (2.0 * rz) + xj.x_zz.at(i, j) * r;
            *y_zzbar.at_mut(i, j) = x * rho_zzbar.at(i, j)
                + xz.conj() * rz
                + xz * rz.conj()
                + xj.x_zzbar.at(i, j) * r;
            let pair = complex_bilinear_inner(&yz, &yz.conj());
            pairing_residual = pairing_residual.max((pair - 0.5).norm());
        }
    }
    Ok(CanonicalLift {
        y,
        y_z: y_z.clone(),
        y_zbar: y_z.map(|v| v.conj()),
        y_zz,
        y_zzbar,
        pairing_residual,
    })
}

pub struct CanonicalLift {
    pub y: Field<Vec5>,
    pub y_z: Field<CVec5>,
    pub y_zbar: Field<CVec5>,
    pub y_zz: Field<CVec5>,
    pub y_zzbar: Field<CVec5>,
    pub pairing_residual: f64,
}

/// Solve a small real linear system by Gaussian elimination with partial
/// pivoting; returns None when singular.
fn solve_small(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let mut p = k;
        for r in k + 1..n {
            if a[r][k].abs() > a[p][k].abs() {
                p = r;
            }
        }
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            let (head, tail) = a.split_at_mut(r);
            for (c, v) in tail[0].iter_mut().enumerate().take(n).skip(k) {
                *v -= f * head[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k][c] * x[c];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

fn inverse_small(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut rhs = vec![0.0; n];
        rhs[col] = 1.0;
        let x = solve_small(&mut m, &mut rhs)?;
        for r in 0..n {
            inv[r][col] = x[r];
        }
    }
    Some(inv)
}

fn norm1_small(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|c| (0..n).map(|r| a[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The unique dual section N with ⟨N,N⟩ = ⟨N,Y_z⟩ = ⟨N,Y_z̄⟩ = 0 and
/// ⟨Y,N⟩ = −1, solved per point in span{Y, Re Y_z, Im Y_z, Y_zz̄}.
pub struct DualSection {
    pub n: Field<Vec5>,
    pub residual_max: f64,
    pub cond_max: f64,
}

pub fn dual_section_n(l: &CanonicalLift) -> Result<DualSection> {
    let nx = l.y.nx;
    let ny = l.y.ny;
    let mut n_field: Field<Vec5> = Field {
        nx,
        ny,
        data: vec![Vec5::ZERO; nx * ny],
    };
    let mut residual_max = 0.0f64;
    let mut cond_max = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            let y = l.y.at(i, j);
            let yz = l.y_z.at(i, j);
            let re_yz = yz.re();
            let im_yz = yz.im();
            let w = l.y_zzbar.at(i, j);
            let wr = w.re();
            // conditioning of the span via the 4×4 Gram matrix
            let basis = [y, re_yz, im_yz, wr];
            let mut gram = vec![vec![0.0; 4]; 4];
            for (r, br) in basis.iter().enumerate() {
                for (c, bc) in basis.iter().enumerate() {
                    gram[r][c] = lorentz_inner(br, bc);
                }
            }
            let cond = match inverse_small(&gram) {
                Some(inv) => norm1_small(&gram) * norm1_small(&inv),
                None => f64::INFINITY,
            };
            cond_max = cond_max.max(cond);
            if cond > tol::DUAL_SECTION_COND_MAX {
                return Err(Error::Degeneracy(format!(
                    "dual section solve ill-conditioned at ({i},{j}): cond ~ {cond:.3e}"
                )));
            }
            // N0 = b1 Re Y_z + b2 Im Y_z + d Y_zz̄ from the three linear
            // conditions Re⟨N,Y_z⟩ = Im⟨N,Y_z⟩ = 0, ⟨Y,N⟩ = −1
            let p = |a: &Vec5, b: &Vec5| lorentz_inner(a, b);
            let mut m = vec![
                vec![p(&re_yz, &re_yz), p(&im_yz, &re_yz), p(&wr, &re_yz)],
                vec![p(&re_yz, &im_yz), p(&im_yz, &im_yz), p(&wr, &im_yz)],
                vec![p(&re_yz, &y), p(&im_yz, &y), p(&wr, &y)],
            ];
            let mut rhs = vec![0.0, 0.0, -1.0];
            let sol = solve_small(&mut m, &mut rhs).ok_or_else(|| {
                Error::Degeneracy(format!("dual section solve singular at ({i},{j})"))
            })?;
            let n0 = re_yz * sol[0] + im_yz * sol[1] + wr * sol[2];
            let a = lorentz_inner(&n0, &n0) / 2.0;
            let n = n0 + y * a;
            *n_field.at_mut(i, j) = n;
            // residuals of the five defining relations
            let r1 = lorentz_inner(&n, &n).abs();
            let r2 = inner_cr(&yz, &n).norm();
            let r3 = inner_cr(&yz.conj(), &n).norm();
            let r4 = (lorentz_inner(&y, &n) + 1.0).abs();
            residual_max = residual_max.max(r1).max(r2).max(r3).max(r4);
        }
    }
    Ok(DualSection {
        n: n_field,
        residual_max,
        cond_max,
    })
}

/// Build the full Moebius frame (canonical lift + dual section).
pub fn moebius_frame(
    jet: &JetGrid,
    field: &InvariantField,
    basic: &BasicDerivs,
    lift: &LiftDerivs,
) -> Result<MoebiusFrame> {
    let l = canonical_lift(jet, field, basic, lift)?;
    let d = dual_section_n(&l)?;
    Ok(MoebiusFrame {
        y: l.y,
        y_z: l.y_z,
        y_zbar: l.y_zbar,
        y_zz: l.y_zz,
        y_zzbar: l.y_zzbar,
        n_dual: d.n,
        pairing_residual: l.pairing_residual,
        n_residual: d.residual_max,
        cond_max: d.cond_max,
    })
}

/// κ and s. Route A (s = 2⟨Y_zz,N⟩) is used when a Moebius frame is given;
/// route B evaluates 2[h(ξ₁−ξ₂) − ((u−iθ)_z)² − (u−iθ)_zz] with θ-derivatives
/// taken branch-free from logarithmic derivatives of q.
pub fn conformal_invariants(
    jet: &JetGrid,
    field: &InvariantField,
    lift: &LiftDerivs,
    frame: Option<&MoebiusFrame>,
) -> Result<ConformalInvariants> {
    if !field.flags.marginally_trapped {
        return Err(Error::State(
            "conformal invariants need a marginally trapped surface".into(),
        ));
    }
    require_nonisotropic(field)?;
    let grid = field.grid;
    let s2 = std::f64::consts::SQRT_2;
    let kappa = Field::from_fn(&grid, |i, j| {
        let q = field.q.at(i, j);
        (q / q.norm()) * (field.u.at(i, j).exp() / s2)
    });
    // w = (u−iθ)_z = u_z − ½(q_z/q − conj(q_z̄/q))
    let w = Field::from_fn(&grid, |i, j| {
        let q = field.q.at(i, j);
        let dlq = lift.q_z.at(i, j) / q;
        let dlqb = (lift.q_zbar.at(i, j) / q).conj();
        lift.u_z.at(i, j) - 0.5 * (dlq - dlqb)
    });
    // w_z = u_zz − ½[(q_zz/q − (q_z/q)²) − conj(q_z̄z̄/q − (q_z̄/q)²)]
    let w_z = Field::from_fn(&grid, |i, j| {
        let q = field.q.at(i, j);
        let dlq = lift.q_z.at(i, j) / q;
        let dlqb = lift.q_zbar.at(i, j) / q;
        let t1 = lift.q_zz.at(i, j) / q - dlq * dlq;
        let t2 = (lift.q_zbzb.at(i, j) / q - dlqb * dlqb).conj();
        lift.u_zz.at(i, j) - 0.5 * (t1 - t2)
    });
    let s_b = Field::from_fn(&grid, |i, j| {
        let hq = field.q.at(i, j) * field.h.at(i, j);
        let wv = w.at(i, j);
        2.0 * (hq - wv * wv - w_z.at(i, j))
    });
    let (s_route_a, route_discrepancy) = match frame {
        Some(fr) => {
            let sa = Field::from_fn(&grid, |i, j| {
                2.0 * inner_cr(&fr.y_zz.at(i, j), &fr.n_dual.at(i, j))
            });
            let mut disc = 0.0f64;
            for k in 0..sa.data.len() {
                disc = disc.max((sa.data[k] - s_b.data[k]).norm());
            }
            (Some(sa), Some(disc))
        }
        None => (None, None),
    };
    let g = null_gauss_map(jet)?;
    Ok(ConformalInvariants {
        grid,
        kappa,
        s: s_b,
        s_route_a,
        route_discrepancy,
        w,
        w_z,
        g,
    })
}

/// κ_z̄z̄ computed analytically from the logarithmic-derivative fields:
/// κ_z̄z̄ = (conj(w)² + conj(w_z))·κ.
pub fn kappa_zbzb(inv: &ConformalInvariants) -> Field<C64> {
    Field {
        nx: inv.kappa.nx,
        ny: inv.kappa.ny,
        data: inv
            .kappa
            .data
            .iter()
            .zip(inv.w.data.iter().zip(inv.w_z.data.iter()))
            .map(|(&k, (&w, &wz))| (w.conj() * w.conj() + wz.conj()) * k)
            .collect(),
    }
}

/// Residual of the fundamental equation κ_z̄z̄ + (s̄/2)κ = Re(conj(δ)·κ),
/// plus the reality check max |Im(conj(δ)·κ)|.
pub fn fundamental_equation_residual(
    inv: &ConformalInvariants,
    delta: &Field<C64>,
) -> ResidualReport {
    let grid = inv.grid;
    let kzz = kappa_zbzb(inv);
    let mut res = Field::<f64>::zeros(&grid);
    let mut imag = Field::<f64>::zeros(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = inv.kappa.at(i, j);
            let rhs_c = delta.at(i, j).conj() * k;
            let lhs = kzz.at(i, j) + 0.5 * inv.s.at(i, j).conj() * k;
            *res.at_mut(i, j) = (lhs - rhs_c.re).norm();
            *imag.at_mut(i, j) = rhs_c.im.abs();
        }
    }
    let m = margin_of(&grid);
    let mut rep = ResidualReport::default();
    let (mx, mn) = grid::norms_with_margin(&res, &grid, m);
    rep.push("fundamental_equation", mx, mn, grid.spacing());
    let (mx, mn) = grid::norms_with_margin(&imag, &grid, m);
    rep.push("delta_kappa_imag", mx, mn, grid.spacing());
    rep
}

fn margin_of(grid: &GridSpec) -> usize {
    if grid.periodic_x && grid.periodic_y {
        0
    } else {
        1
    }
}

/// Conformal Gauss and Codazzi residuals:
/// s_z̄/2 − 3⟨κ̄_z,κ⟩ − ⟨κ̄,κ_z⟩ and Im(κ_z̄z̄ + (s̄/2)κ), with the scalar
/// identification ⟨a,b⟩ = a·b. When a Moebius frame is supplied the three
/// vector structure residuals are reported as well (the dual-section
/// z-derivative is grid-differenced).
pub fn conformal_gauss_codazzi_residuals(
    inv: &ConformalInvariants,
    u_z: &Field<C64>,
    frame: Option<(&JetGrid, &MoebiusFrame)>,
) -> ResidualReport {
    let grid = inv.grid;
    let m = margin_of(&grid);
    let s_zbar = grid::dzbar(&inv.s, &grid);
    let kzz = kappa_zbzb(inv);
    let mut gauss = Field::<f64>::zeros(&grid);
    let mut codazzi = Field::<f64>::zeros(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = inv.kappa.at(i, j);
            let w = inv.w.at(i, j);
            let uz = u_z.at(i, j);
            // κ_z = ((u+iθ)_z)κ = (2u_z − w)κ and κ̄_z = wκ̄
            let kap_z = (2.0 * uz - w) * k;
            let kapbar_z = w * k.conj();
            let g = 0.5 * s_zbar.at(i, j) - 3.0 * kapbar_z * k - k.conj() * kap_z;
            *gauss.at_mut(i, j) = g.norm();
            let c = kzz.at(i, j) + 0.5 * inv.s.at(i, j).conj() * k;
            *codazzi.at_mut(i, j) = c.im.abs();
        }
    }
    let mut rep = ResidualReport::default();
    let sp = grid.spacing();
    let (mx, mn) = grid::norms_with_margin(&gauss, &grid, m);
    rep.push("conformal_gauss", mx, mn, sp);
    let (mx, mn) = grid::norms_with_margin(&codazzi, &grid, m);
    rep.push("conformal_codazzi", mx, mn, sp);

    if let Some((jet, fr)) = frame {
        let mut s1 = Field::<f64>::zeros(&grid);
        let mut s2r = Field::<f64>::zeros(&grid);
        let mut s3 = Field::<f64>::zeros(&grid);
        let n_z = grid::dz(&fr.n_dual.map(|v| v.complexify()), &grid);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = inv.kappa.at(i, j);
                let kk = k.norm_sqr();
                let y = fr.y.at(i, j).complexify();
                let f = jet.f.at(i, j).complexify();
                // (i) Y_zz + (s/2)Y − κ·f
                let r1 = fr.y_zz.at(i, j) + y * (0.5 * inv.s.at(i, j)) - f * k;
                *s1.at_mut(i, j) = r1.norm_euclid();
                // (ii) Y_z̄z + ⟨κ,κ̄⟩Y − N/2
                let r2 = fr.y_zzbar.at(i, j) + y * C64::new(kk, 0.0)
                    - fr.n_dual.at(i, j).complexify() * C64::new(0.5, 0.0);
                *s2r.at_mut(i, j) = r2.norm_euclid();
                // (iii) N_z + 2⟨κ,κ̄⟩Y_z + sY_z̄ − 2(∂z̄κ)·f
                let kap_zbar = inv.w.at(i, j).conj() * k;
                let r3 = n_z.at(i, j)
                    + fr.y_z.at(i, j) * C64::new(2.0 * kk, 0.0)
                    + fr.y_zbar.at(i, j) * inv.s.at(i, j)
                    - f * (2.0 * kap_zbar);
                *s3.at_mut(i, j) = r3.norm_euclid();
            }
        }
        let mm = m.max(1);
        let (mx, mn) = grid::norms_with_margin(&s1, &grid, mm);
        rep.push("structure_i", mx, mn, sp);
        let (mx, mn) = grid::norms_with_margin(&s2r, &grid, mm);
        rep.push("structure_ii", mx, mn, sp);
        let (mx, mn) = grid::norms_with_margin(&s3, &grid, mm);
        rep.push("structure_iii", mx, mn, sp);
    }
    rep
}

/// Willmore energy W = ∫ |κ|² dx dy over the chart.
pub fn willmore_energy(inv: &ConformalInvariants, grid: &GridSpec) -> f64 {
    let integrand = inv.kappa.map(|k| k.norm_sqr());
    grid::quadrature(&integrand, grid)
}

/// Transform (κ, s) under a holomorphic coordinate change z = z(w) per the
/// covariance laws κ′ = κ (dz/dw)^{3/2} (conj dz/dw)^{−1/2} and
/// s′ = s (dz/dw)² + S_w(z). The input fields hold the base-chart values
/// sampled at the image points z(w); the half-integer power branch is
/// continued from the grid origin along column 0 and then along rows.
pub struct TransformedInvariants {
    pub kappa: Field<C64>,
    pub s: Field<C64>,
    /// Max branch jump across a periodic wrap seam, when one exists.
    pub branch_seam: Option<f64>,
}

pub fn transform_invariants(
    kappa: &Field<C64>,
    s: &Field<C64>,
    map: &HoloMap,
    grid: &GridSpec,
) -> Result<TransformedInvariants> {
    // continued square root of dz/dw
    let mut p = Field::<C64>::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let w = C64::new(grid.x(i), grid.y(j));
            let d = map.dz(w);
            if d.norm() < 1e-14 {
                return Err(Error::Domain(format!(
                    "coordinate map derivative vanishes at ({},{})",
                    grid.x(i),
                    grid.y(j)
                )));
            }
            let mut r = d.sqrt();
            let reference = if i == 0 && j == 0 {
                None
            } else if i == 0 {
                Some(p.at(0, j - 1))
            } else {
                Some(p.at(i - 1, j))
            };
            if let Some(prev) = reference {
                if (r + prev).norm() < (r - prev).norm() {
                    r = -r;
                }
            }
            *p.at_mut(i, j) = r;
        }
    }
    let branch_seam = if grid.periodic_x && grid.nx > 1 {
        let mut worst = 0.0f64;
        for j in 0..grid.ny {
            worst = worst.max((p.at(0, j) - p.at(grid.nx - 1, j)).norm());
        }
        Some(worst)
    } else {
        None
    };
    let mut kappa_out = Field::<C64>::zeros(grid);
    let mut s_out = Field::<C64>::zeros(grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let w = C64::new(grid.x(i), grid.y(j));
            let d = map.dz(w);
            let r = p.at(i, j);
            *kappa_out.at_mut(i, j) = kappa.at(i, j) * r * r * r / r.conj();
            *s_out.at_mut(i, j) = s.at(i, j) * d * d + map.schwarzian(w);
        }
    }
    Ok(TransformedInvariants {
        kappa: kappa_out,
        s: s_out,
        branch_seam,
    })
}

/// Classify the null Gauss map: Willmore (δ ≡ 0), constrained Willmore
/// (δ holomorphic ⟺ parallel H), isothermic (q has constant phase).
pub fn classify_gauss_map(
    field: &InvariantField,
    delta_holo_residual: f64,
) -> Result<Classification> {
    let thresholds = ClassificationThresholds {
        marginal_rel: tol::MARGINAL_REL,
        flat_normal_bundle_max: tol::FLAT_NORMAL_BUNDLE_MAX,
        parallel_h_max: crate::invariants::parallel_h_tolerance(
            field.backend,
            field.grid.spacing(),
        ),
        non_isotropic_min_q: tol::NON_ISOTROPIC_MIN_Q,
        willmore_delta_max: tol::WILLMORE_DELTA_MAX,
        constrained_willmore_holo: tol::CONSTRAINED_WILLMORE_HOLO,
        isothermic_phase: tol::ISOTHERMIC_PHASE_TOL,
    };
    if field.flags.max_abs_q <= tol::CANONICAL_LIFT_MIN_Q {
        return Err(Error::GaussMapConstant(field.flags.max_abs_q));
    }
    let mut delta_max = 0.0f64;
    for &d in &field.delta.data {
        delta_max = delta_max.max(d.norm());
    }
    let willmore = delta_max < tol::WILLMORE_DELTA_MAX;
    let constrained = delta_holo_residual < tol::CONSTRAINED_WILLMORE_HOLO;
    // isothermic: the phase of q is constant over the chart
    let q0 = field.q.data[0];
    let mut phase_spread = 0.0f64;
    for &q in &field.q.data {
        if q.norm() > 0.0 && q0.norm() > 0.0 {
            phase_spread = phase_spread.max((q * q0.conj()).arg().abs());
        }
    }
    let isothermic = phase_spread < tol::ISOTHERMIC_PHASE_TOL;
    Ok(Classification {
        marginally_trapped: field.flags.marginally_trapped,
        flat_normal_bundle: field.flags.flat_normal_bundle,
        parallel_mean_curvature: field.flags.parallel_mean_curvature,
        non_isotropic: field.flags.non_isotropic,
        gauss_map_constant: false,
        willmore: Some(willmore),
        constrained_willmore: Some(constrained),
        isothermic: Some(isothermic),
        thresholds,
    })
}

/// Congruence test: candidate Φ from the adapted frames at the grid origin
/// (after an equivariant balancing boost of the normal gauge when h and q
/// are both nonzero there), then the max euclidean distance between Φ·f_A
/// and ±f_B over the grid; the antipodal match is tried as well.
pub fn congruence_test(
    jet_a: &JetGrid,
    jet_b: &JetGrid,
    tolerance: f64,
) -> Result<CongruenceReport> {
    if !jet_a.grid.same_layout(&jet_b.grid) {
        return Err(Error::GridMismatch(
            "congruence test requires identical grids".into(),
        ));
    }
    let fa = balanced_frame_at_origin(jet_a)?;
    let fb = balanced_frame_at_origin(jet_b)?;
    // general inverse: finite-difference frames are only approximately
    // eta-orthogonal, and the identity case must recover Phi = I exactly
    let phi = fb * fa.inverse()?;
    let mut dist_plus = 0.0f64;
    let mut dist_minus = 0.0f64;
    let grid = jet_a.grid;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let mapped = phi.mul_vec(&jet_a.f.at(i, j));
            let target = jet_b.f.at(i, j);
            dist_plus = dist_plus.max((mapped - target).norm_euclid());
            dist_minus = dist_minus.max((mapped + target).norm_euclid());
        }
    }
    let antipodal = dist_minus < dist_plus;
    let residual = dist_plus.min(dist_minus);
    let mut rows = [[0.0; 5]; 5];
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = phi.get(r, c);
        }
    }
    Ok(CongruenceReport {
        congruent: residual < tolerance,
        residual,
        antipodal,
        so41_residual: so41_membership_residual(&phi),
        time_orientation_preserving: phi.preserves_time_orientation(),
        tolerance,
        phi: rows,
    })
}

fn balanced_frame_at_origin(jet: &JetGrid) -> Result<Mat5> {
    let frame = chart::adapted_frame_at(jet, 0, 0)?;
    // pointwise h and |q| at the origin
    let e2u = complex_bilinear_inner(&jet.fz.at(0, 0), &jet.fzbar.at(0, 0)).re;
    let h1 = inner_cr(&jet.fzzbar.at(0, 0), &jet.n1.at(0, 0)).re / e2u;
    let h2 = -inner_cr(&jet.fzzbar.at(0, 0), &jet.n2.at(0, 0)).re / e2u;
    let h = 0.5 * (h1 + h2);
    let q = inner_cr(&jet.fzz.at(0, 0), &jet.n1.at(0, 0))
        + inner_cr(&jet.fzz.at(0, 0), &jet.n2.at(0, 0));
    if h.abs() < 1e-12 || q.norm() < 1e-12 {
        return Ok(frame);
    }
    let beta = 0.5 * (h.abs() / q.norm()).ln();
    Ok(frame * Mat5::boost34(beta))
}
