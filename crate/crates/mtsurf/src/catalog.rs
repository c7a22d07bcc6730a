//! Closed-form generator surfaces used as ground truth.
//!
//! Two families are built in: the flat homogeneous marginally trapped torus
//! (constant frame matrices, frame by matrix exponential) and a degenerate
//! graph surface with identically vanishing Hopf differential and constant
//! null Gauss map. A reparametrization wrapper composes any analytic
//! generator with a holomorphic coordinate change.

use crate::error::Error;
use crate::grid::{Field, GridSpec};
use crate::minkowski::{expm, CMat5, CVec5, Mat5, Vec5};
use crate::tol;
use crate::{Result, C64};
use std::sync::Arc;

/// Exact 2-jet of an immersion at one point, with the adapted positively
/// oriented normal frame and its z-derivatives.
#[derive(Debug, Clone, Copy)]
pub struct PointJet {
    pub f: Vec5,
    pub fz: CVec5,
    pub fzz: CVec5,
    pub fzzbar: CVec5,
    pub n1: Vec5,
    pub n2: Vec5,
    pub dzn1: CVec5,
    pub dzn2: CVec5,
}

/// Closed-form derivatives of the derived scalar fields, where known.
/// `None` components fall back to high-order stencils on the closures.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarDerivs {
    pub u_z: Option<C64>,
    pub u_zz: Option<C64>,
    pub u_zzbar: Option<C64>,
    pub xi1_z: Option<C64>,
    pub xi2_z: Option<C64>,
    pub xi1_zbar: Option<C64>,
    pub xi2_zbar: Option<C64>,
    pub sigma_z: Option<C64>,
    pub sigma_zbar: Option<C64>,
    pub h_z: Option<C64>,
}

/// A surface given by closed-form jets at arbitrary chart points.
pub trait AnalyticSurface: Send + Sync {
    fn jet_at(&self, x: f64, y: f64) -> PointJet;

    /// Exact derivative data for derived scalars, when available.
    fn scalar_derivs_at(&self, _x: f64, _y: f64) -> ScalarDerivs {
        ScalarDerivs::default()
    }
}

/// Surface input for the chart builder: a closed-form generator or a
/// tabulated position grid.
pub enum SurfaceDefinition {
    Analytic {
        name: String,
        surface: Arc<dyn AnalyticSurface>,
    },
    Tabulated {
        name: String,
        grid: GridSpec,
        positions: Field<Vec5>,
    },
}

impl SurfaceDefinition {
    pub fn name(&self) -> &str {
        match self {
            SurfaceDefinition::Analytic { name, .. } => name,
            SurfaceDefinition::Tabulated { name, .. } => name,
        }
    }

    pub fn analytic(&self) -> Option<&Arc<dyn AnalyticSurface>> {
        match self {
            SurfaceDefinition::Analytic { surface, .. } => Some(surface),
            SurfaceDefinition::Tabulated { .. } => None,
        }
    }
}

/// Parameters of the flat homogeneous marginally trapped torus.
#[derive(Debug, Clone, Copy)]
pub struct FlatTorusParams {
    /// Constant mean curvature function h (h = 0 gives a stationary surface).
    pub h: f64,
}

/// The flat homogeneous torus: invariant data
/// (u, ξ₁, ξ₂, σ, h₁, h₂) = (0, 1, 0, 0, h, h), frame F(z) = exp(Az + Bz̄)
/// with constant commuting A, B, and analytic jets from powers of A and B.
pub struct FlatTorus {
    pub h: f64,
    a: CMat5,
    b: CMat5,
    /// Real generator along x: A + B.
    px: Mat5,
    /// Real generator along y: i(A − B).
    py: Mat5,
    a_e0: CVec5,
    aa_e0: CVec5,
    ba_e0: CVec5,
    a_e3: CVec5,
    a_e4: CVec5,
}

/// Frame matrix A of the structure equations F_z = F·A for invariant data
/// (u, ξ₁, ξ₂, σ, h) and tangent-rotation normalization
/// f_z = (eᵘ/√2)(F₁ − iF₂). The off-diagonal coefficients are
/// aᵢ = (eᵘh + e⁻ᵘξᵢ)/√2, bᵢ = (−eᵘh + e⁻ᵘξᵢ)/√2.
pub fn frame_matrix(u: f64, u_z: C64, xi1: C64, xi2: C64, sigma: C64, h: f64) -> CMat5 {
    let s2 = std::f64::consts::SQRT_2;
    let eu = u.exp();
    let emu = (-u).exp();
    let i = C64::i();
    let a1 = (eu * h + emu * xi1) / s2;
    let b1 = (-eu * h + emu * xi1) / s2;
    let a2 = (eu * h + emu * xi2) / s2;
    let b2 = (-eu * h + emu * xi2) / s2;
    let e = C64::new(eu / s2, 0.0);
    let z = C64::new(0.0, 0.0);
    let mut m = CMat5::zero();
    let rows = [
        [z, -e, i * e, z, z],
        [e, z, i * u_z, -a1, a2],
        [-i * e, -i * u_z, z, -i * b1, i * b2],
        [z, a1, i * b1, z, sigma],
        [z, a2, i * b2, sigma, z],
    ];
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m.set(r, c, v);
        }
    }
    m
}

impl FlatTorus {
    pub fn new(params: FlatTorusParams) -> Result<FlatTorus> {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let a = frame_matrix(0.0, zero, one, zero, zero, params.h);
        let b = a.conj();
        let comm = a.commutator(&b).norm_max();
        if comm > tol::TORUS_COMMUTATOR {
            return Err(Error::InternalConsistency(format!(
                "flat torus generators do not commute: ||[A,B]|| = {comm:.3e}"
            )));
        }
        let px = (a + b).re();
        let py = ((a - b) * C64::i()).re();
        let e0 = Vec5::basis(0).complexify();
        let e3 = Vec5::basis(3).complexify();
        let e4 = Vec5::basis(4).complexify();
        let a_e0 = a.mul_cvec(&e0);
        Ok(FlatTorus {
            h: params.h,
            a,
            b,
            px,
            py,
            a_e0,
            aa_e0: a.mul_cvec(&a_e0),
            ba_e0: b.mul_cvec(&a_e0),
            a_e3: a.mul_cvec(&e3),
            a_e4: a.mul_cvec(&e4),
        })
    }

    /// Frame F(x,y) = exp(x(A+B)) · exp(y·i(A−B)); the factors commute.
    pub fn frame_at(&self, x: f64, y: f64) -> Mat5 {
        expm(&(self.px * x)) * expm(&(self.py * y))
    }

    pub fn coefficient_matrices(&self) -> (CMat5, CMat5) {
        (self.a, self.b)
    }
}

impl AnalyticSurface for FlatTorus {
    fn jet_at(&self, x: f64, y: f64) -> PointJet {
        let f = self.frame_at(x, y);
        PointJet {
            f: f.col(0),
            fz: f.mul_cvec(&self.a_e0),
            fzz: f.mul_cvec(&self.aa_e0),
            fzzbar: f.mul_cvec(&self.ba_e0),
            n1: f.col(3),
            n2: f.col(4),
            dzn1: f.mul_cvec(&self.a_e3),
            dzn2: f.mul_cvec(&self.a_e4),
        }
    }

    fn scalar_derivs_at(&self, _x: f64, _y: f64) -> ScalarDerivs {
        let z = Some(C64::new(0.0, 0.0));
        ScalarDerivs {
            u_z: z,
            u_zz: z,
            u_zzbar: z,
            xi1_z: z,
            xi2_z: z,
            xi1_zbar: z,
            xi2_zbar: z,
            sigma_z: z,
            sigma_zbar: z,
            h_z: z,
        }
    }
}

/// Construct the flat homogeneous torus generator.
pub fn flat_homogeneous_torus(params: FlatTorusParams) -> Result<SurfaceDefinition> {
    let t = FlatTorus::new(params)?;
    Ok(SurfaceDefinition::Analytic {
        name: format!("flat_torus(h={})", params.h),
        surface: Arc::new(t),
    })
}

/// Scalar profile placed in the x₃ = x₄ slot of the degenerate surface.
#[derive(Debug, Clone, Copy)]
pub enum Profile {
    Zero,
    /// t(x,y) = amplitude · sin x.
    SinX { amplitude: f64 },
}

impl Profile {
    /// (t, t_z, t_zz, t_zz̄, t_zzz̄) at a point; the profile is real-valued.
    fn jets(&self, x: f64) -> (f64, C64, C64, C64, C64) {
        match *self {
            Profile::Zero => {
                let z = C64::new(0.0, 0.0);
                (0.0, z, z, z, z)
            }
            Profile::SinX { amplitude: a } => {
                let s = a * x.sin();
                let c = a * x.cos();
                (
                    s,
                    C64::new(c / 2.0, 0.0),
                    C64::new(-s / 4.0, 0.0),
                    C64::new(-s / 4.0, 0.0),
                    C64::new(-c / 8.0, 0.0),
                )
            }
        }
    }
}

/// Parameters of the degenerate (q ≡ 0) graph surface.
#[derive(Debug, Clone, Copy)]
pub struct DegenerateSurfaceParams {
    pub profile: Profile,
}

/// Degenerate surface f = (p(x,y), t(x,y), t(x,y)): p is the stereographic
/// conformal chart of the unit 2-sphere in the (x₀,x₁,x₂)-block and the
/// profile t sits in the x₃ = x₄ slot, so (0,0,0,1,1) is a constant null
/// normal. The surface is marginally trapped with q ≡ 0, K = 1 and constant
/// null Gauss map.
pub struct DegenerateGraph {
    pub profile: Profile,
}

/// 3-component complex vector helpers for the sphere block.
#[derive(Clone, Copy)]
struct C3([C64; 3]);

impl C3 {
    fn add(self, o: C3) -> C3 {
        C3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
    fn scale(self, s: C64) -> C3 {
        C3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
    fn conj(self) -> C3 {
        C3([self.0[0].conj(), self.0[1].conj(), self.0[2].conj()])
    }
    fn dot_re(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}

struct SphereJets {
    p: [f64; 3],
    pz: C3,
    pzz: C3,
    e2u: f64,
}

fn sphere_jets(x: f64, y: f64) -> SphereJets {
    let w = C64::new(x, y);
    let wb = w.conj();
    let d = 1.0 + (w * wb).re;
    let d2 = d * d;
    let d3 = d2 * d;
    let i = C64::i();
    let p = [
        ((w + wb) / d).re,
        ((-i * (w - wb)) / d).re,
        ((1.0 - (w * wb).re) / d),
    ];
    let pz = C3([
        (1.0 - wb * wb) / d2,
        -i * (1.0 + wb * wb) / d2,
        -2.0 * wb / d2,
    ]);
    let pzz = C3([
        -2.0 * wb * (1.0 - wb * wb) / d3,
        2.0 * i * wb * (1.0 + wb * wb) / d3,
        4.0 * wb * wb / d3,
    ]);
    SphereJets {
        p,
        pz,
        pzz,
        e2u: 2.0 / d2,
    }
}

impl DegenerateGraph {
    /// V = t·p + (t_x p_x + t_y p_y)/|p_x|² and its z-derivative; V spans the
    /// non-null direction of the normal plane together with n = (0,0,0,1,1).
    fn v_and_vz(&self, x: f64, y: f64) -> ([f64; 3], C3) {
        let s = sphere_jets(x, y);
        let (t, tz, tzz, tzzb, _) = self.profile.jets(x);
        let tzb = tz.conj();
        let pzb = s.pz.conj();
        let pzzb = C3([
            C64::new(-s.e2u * s.p[0], 0.0),
            C64::new(-s.e2u * s.p[1], 0.0),
            C64::new(-s.e2u * s.p[2], 0.0),
        ]);
        // T = 2 (t_z̄ p_z + t_z p_z̄), real 3-vector
        let tt = s.pz.scale(2.0 * tzb).add(pzb.scale(2.0 * tz));
        // T_z uses p_z̄z = p_zz̄ = −e^{2u} p in the last term
        let tt_z = s
            .pz
            .scale(2.0 * tzzb) // t_z̄z = t_zz̄ for real t
            .add(s.pzz.scale(2.0 * tzb))
            .add(pzb.scale(2.0 * tzz))
            .add(pzzb.scale(2.0 * tz));
        let e2u = s.e2u;
        let u_z = -C64::new(x, -y) / (1.0 + x * x + y * y); // -w̄/(1+|w|²)
        let pc = C3([
            C64::new(s.p[0], 0.0),
            C64::new(s.p[1], 0.0),
            C64::new(s.p[2], 0.0),
        ]);
        let v = [
            t * s.p[0] + tt.0[0].re / e2u / 2.0,
            t * s.p[1] + tt.0[1].re / e2u / 2.0,
            t * s.p[2] + tt.0[2].re / e2u / 2.0,
        ];
        let v_z = pc
            .scale(tz)
            .add(s.pz.scale(C64::new(t, 0.0)))
            .add(tt.scale(-u_z / e2u))
            .add(tt_z.scale(C64::new(1.0 / (2.0 * e2u), 0.0)));
        (v, v_z)
    }
}

impl AnalyticSurface for DegenerateGraph {
    fn jet_at(&self, x: f64, y: f64) -> PointJet {
        let s2 = std::f64::consts::SQRT_2;
        let s = sphere_jets(x, y);
        let (t, tz, tzz, tzzb, _) = self.profile.jets(x);
        let f = Vec5([s.p[0], s.p[1], s.p[2], t, t]);
        let fz = CVec5([s.pz.0[0], s.pz.0[1], s.pz.0[2], tz, tz]);
        let fzz = CVec5([s.pzz.0[0], s.pzz.0[1], s.pzz.0[2], tzz, tzz]);
        let fzzbar = CVec5([
            C64::new(-s.e2u * s.p[0], 0.0),
            C64::new(-s.e2u * s.p[1], 0.0),
            C64::new(-s.e2u * s.p[2], 0.0),
            tzzb,
            tzzb,
        ]);
        let (v, v_z) = self.v_and_vz(x, y);
        let v2 = C3::dot_re(v, v);
        // n' = w0 - (|V|²/2) n with w0 = (-V, 1/2, -1/2); N₁,₂ = (n ± n')/√2
        let nprime = [
            -v[0],
            -v[1],
            -v[2],
            0.5 - v2 / 2.0,
            -0.5 - v2 / 2.0,
        ];
        let n1 = Vec5([
            nprime[0] / s2,
            nprime[1] / s2,
            nprime[2] / s2,
            (1.0 + nprime[3]) / s2,
            (1.0 + nprime[4]) / s2,
        ]);
        let n2 = Vec5([
            -nprime[0] / s2,
            -nprime[1] / s2,
            -nprime[2] / s2,
            (1.0 - nprime[3]) / s2,
            (1.0 - nprime[4]) / s2,
        ]);
        // n'_z = (-V_z, 0, 0) - (V·V_z) n
        let vdotvz = v_z.0[0] * v[0] + v_z.0[1] * v[1] + v_z.0[2] * v[2];
        let nprime_z = CVec5([-v_z.0[0], -v_z.0[1], -v_z.0[2], -vdotvz, -vdotvz]);
        let dzn1 = nprime_z * (1.0 / s2);
        let dzn2 = -dzn1;
        PointJet {
            f,
            fz,
            fzz,
            fzzbar,
            n1,
            n2,
            dzn1,
            dzn2,
        }
    }

    fn scalar_derivs_at(&self, x: f64, y: f64) -> ScalarDerivs {
        let d = 1.0 + x * x + y * y;
        let wb = C64::new(x, -y);
        let u_z = -wb / d;
        let u_zz = wb * wb / (d * d);
        let u_zzbar = C64::new(-1.0 / (d * d), 0.0);
        // h = e^{-2u}(t_zz̄ + e^{2u} t)/√2 with e^{2u} = 2/d²
        let e2u = 2.0 / (d * d);
        let (t, tz, _, tzzb, tzzzb) = self.profile.jets(x);
        let s2 = std::f64::consts::SQRT_2;
        let h_z = (-u_z * 2.0 * tzzb / e2u + tzzzb / e2u + tz) / s2;
        let _ = t;
        // Codazzi with σ = 0: ξᵢ,z̄ = e^{2u} h_z
        let xi_zbar = h_z * e2u;
        ScalarDerivs {
            u_z: Some(u_z),
            u_zz: Some(u_zz),
            u_zzbar: Some(u_zzbar),
            xi1_z: None,
            xi2_z: None,
            xi1_zbar: Some(xi_zbar),
            xi2_zbar: Some(xi_zbar),
            sigma_z: Some(C64::new(0.0, 0.0)),
            sigma_zbar: Some(C64::new(0.0, 0.0)),
            h_z: Some(h_z),
        }
    }
}

/// Construct the degenerate graph surface generator.
pub fn degenerate_graph_surface(params: DegenerateSurfaceParams) -> Result<SurfaceDefinition> {
    Ok(SurfaceDefinition::Analytic {
        name: "degenerate_graph".into(),
        surface: Arc::new(DegenerateGraph {
            profile: params.profile,
        }),
    })
}

/// A holomorphic coordinate change z = z(w) with derivative data.
#[derive(Debug, Clone, Copy)]
pub enum HoloMap {
    /// z = a·w + b.
    Affine { a: C64, b: C64 },
    /// z = w + ε·sin w (non-Moebius test map; z′ ≠ 0 for |ε| < 1).
    SinPerturb { eps: f64 },
}

impl HoloMap {
    pub fn z(&self, w: C64) -> C64 {
        match *self {
            HoloMap::Affine { a, b } => a * w + b,
            HoloMap::SinPerturb { eps } => w + eps * w.sin(),
        }
    }
    pub fn dz(&self, w: C64) -> C64 {
        match *self {
            HoloMap::Affine { a, .. } => a,
            HoloMap::SinPerturb { eps } => 1.0 + eps * w.cos(),
        }
    }
    pub fn d2z(&self, w: C64) -> C64 {
        match *self {
            HoloMap::Affine { .. } => C64::new(0.0, 0.0),
            HoloMap::SinPerturb { eps } => -eps * w.sin(),
        }
    }
    pub fn d3z(&self, w: C64) -> C64 {
        match *self {
            HoloMap::Affine { .. } => C64::new(0.0, 0.0),
            HoloMap::SinPerturb { eps } => -eps * w.cos(),
        }
    }
    /// Schwartzian derivative S_w(z) = z‴/z′ − (3/2)(z″/z′)².
    pub fn schwarzian(&self, w: C64) -> C64 {
        let d1 = self.dz(w);
        let r = self.d2z(w) / d1;
        self.d3z(w) / d1 - 1.5 * r * r
    }
}

/// Analytic surface composed with a holomorphic coordinate change.
pub struct Reparametrized {
    pub base: Arc<dyn AnalyticSurface>,
    pub map: HoloMap,
}

impl AnalyticSurface for Reparametrized {
    fn jet_at(&self, x: f64, y: f64) -> PointJet {
        let w = C64::new(x, y);
        let z = self.map.z(w);
        let zp = self.map.dz(w);
        let zpp = self.map.d2z(w);
        let base = self.base.jet_at(z.re, z.im);
        PointJet {
            f: base.f,
            fz: base.fz * zp,
            fzz: base.fzz * (zp * zp) + base.fz * zpp,
            fzzbar: base.fzzbar * (zp * zp.conj()),
            n1: base.n1,
            n2: base.n2,
            dzn1: base.dzn1 * zp,
            dzn2: base.dzn2 * zp,
        }
    }

    fn scalar_derivs_at(&self, x: f64, y: f64) -> ScalarDerivs {
        let w = C64::new(x, y);
        let z = self.map.z(w);
        let zp = self.map.dz(w);
        let zpp = self.map.d2z(w);
        let zppp = self.map.d3z(w);
        let base = self.base.scalar_derivs_at(z.re, z.im);
        let basej = self.base.jet_at(z.re, z.im);
        // ξᵢ on the base chart, needed for the ξ̃ᵢ product rule.
        let xi1 = crate::minkowski::inner_cr(&basej.fzz, &basej.n1);
        let xi2 = -crate::minkowski::inner_cr(&basej.fzz, &basej.n2);
        let lp = zpp / zp; // (log z′)′
        ScalarDerivs {
            // ũ = u∘z + ln|z′|
            u_z: base.u_z.map(|uz| uz * zp + 0.5 * lp),
            u_zz: match (base.u_z, base.u_zz) {
                (Some(uz), Some(uzz)) => Some(
                    uzz * zp * zp + uz * zpp + 0.5 * (zppp / zp - lp * lp),
                ),
                _ => None,
            },
            u_zzbar: base.u_zzbar.map(|v| v * (zp * zp.conj())),
            // ξ̃ᵢ = ξᵢ·z′²
            xi1_z: base.xi1_z.map(|v| v * zp * zp * zp + 2.0 * xi1 * zp * zpp),
            xi2_z: base.xi2_z.map(|v| v * zp * zp * zp + 2.0 * xi2 * zp * zpp),
            xi1_zbar: base.xi1_zbar.map(|v| v * zp * zp * zp.conj()),
            xi2_zbar: base.xi2_zbar.map(|v| v * zp * zp * zp.conj()),
            // σ̃ = σ·z′
            sigma_z: match (base.sigma_z, sigma_value(&basej)) {
                (Some(sz), s) => Some(sz * zp * zp + s * zpp),
                _ => None,
            },
            sigma_zbar: base.sigma_zbar.map(|v| v * zp * zp.conj()),
            h_z: base.h_z.map(|v| v * zp),
        }
    }
}

fn sigma_value(j: &PointJet) -> C64 {
    -crate::minkowski::inner_cr(&j.dzn1, &j.n2)
}

/// Reparametrize an analytic definition by a holomorphic map.
pub fn reparametrized(def: &SurfaceDefinition, map: HoloMap) -> Result<SurfaceDefinition> {
    match def {
        SurfaceDefinition::Analytic { name, surface } => Ok(SurfaceDefinition::Analytic {
            name: format!("{name}~reparam"),
            surface: Arc::new(Reparametrized {
                base: surface.clone(),
                map,
            }),
        }),
        SurfaceDefinition::Tabulated { .. } => Err(Error::Domain(
            "reparametrization requires an analytic definition".into(),
        )),
    }
}

/// Manifest-driven catalog dispatch.
pub fn custom_surface(id: &str, params: &serde_json::Value) -> Result<SurfaceDefinition> {
    match id {
        "flat_torus" => {
            let h = params
                .get("h")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::Manifest("flat_torus requires a numeric parameter 'h'".into()))?;
            flat_homogeneous_torus(FlatTorusParams { h })
        }
        "degenerate" => {
            let amplitude = params
                .get("amplitude")
                .and_then(|v| v.as_f64())
                .unwrap_or(0.0);
            let profile = if amplitude == 0.0 {
                Profile::Zero
            } else {
                Profile::SinX { amplitude }
            };
            degenerate_graph_surface(DegenerateSurfaceParams { profile })
        }
        other => Err(Error::Manifest(format!("unknown catalog id '{other}'"))),
    }
}
