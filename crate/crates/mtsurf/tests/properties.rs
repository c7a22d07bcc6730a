//! Cross-module property and edge-case tests: error paths named by the
//! operation contracts, algebraic identities between the differentials and
//! integrator self-consistency.

use mtsurf::catalog::{
    degenerate_graph_surface, flat_homogeneous_torus, DegenerateSurfaceParams, FlatTorusParams,
    Profile,
};
use mtsurf::chart;
use mtsurf::deform::{self, DeformParam};
use mtsurf::error::Error;
use mtsurf::grid::{Field, GridSpec};
use mtsurf::invariants::{self, Options};
use mtsurf::minkowski::{lorentz_inner, so41_membership_residual, Vec5};
use mtsurf::{tol, C64};

fn torus_jet(h: f64, grid: GridSpec) -> chart::JetGrid {
    let def = flat_homogeneous_torus(FlatTorusParams { h }).unwrap();
    chart::sample_analytic_surface(&def, &grid).unwrap()
}

#[test]
fn flat_torus_solves_sinh_gordon_trivially() {
    // both sides of the sinh-Gordon compatibility 2u_z̄z = -e^{2u} + e^{-2u}
    // vanish identically on the flat solution
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
    let jet = torus_jet(1.0, grid);
    let (field, basic) = invariants::analyze(&jet, &Options::default()).unwrap();
    for k in 0..field.u.data.len() {
        let lhs = 2.0 * basic.u_zzbar.data[k].re;
        let rhs = -(2.0 * field.u.data[k]).exp() + (-2.0 * field.u.data[k]).exp();
        assert!(lhs.abs() < 1e-10, "2 u_zzbar = {lhs}");
        assert!(rhs.abs() < 1e-10, "-e^2u + e^-2u = {rhs}");
    }
}

#[test]
fn non_isotropy_flag_implies_nonvanishing_q() {
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 12);
    let jet = torus_jet(1.0, grid);
    let (field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    assert!(field.flags.non_isotropic);
    assert!(field.flags.min_abs_big_q > tol::NON_ISOTROPIC_MIN_Q);
    assert!(field.flags.min_abs_q > 0.0);
}

#[test]
fn normal_derivative_h_requires_marginal_gauge() {
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 12);
    let jet = torus_jet(1.0, grid);
    let (mut field, basic) = invariants::analyze(&jet, &Options::default()).unwrap();
    field.flags.marginally_trapped = false;
    assert!(matches!(
        invariants::normal_derivative_h(&field, &basic),
        Err(Error::State(_))
    ));
}

#[test]
fn non_conformal_parametrization_is_flagged() {
    // sample the torus on an anisotropically stretched coordinate grid:
    // the chart is smooth but no longer conformal, so the isotropy
    // residual is far above any FD noise floor
    let def = flat_homogeneous_torus(FlatTorusParams { h: 1.0 }).unwrap();
    let surface = def.analytic().unwrap().clone();
    let grid = GridSpec::open_square(0.0, 0.0, 1.5, 24);
    let pos = Field::from_fn(&grid, |i, j| {
        surface.jet_at(1.3 * grid.x(i), grid.y(j)).f
    });
    let jet = chart::jets_by_finite_difference(&pos, &grid).unwrap();
    let rep = chart::conformality_residual(&jet);
    assert!(
        rep.isotropy_max > 1e-2,
        "stretched chart not flagged: {}",
        rep.isotropy_max
    );
    assert!(rep.spacelike_min > 0.0);
}

#[test]
fn non_marginally_trapped_round_sphere_chart() {
    // a round 2-sphere of radius sin(rho) inside the x4 = 0 equator:
    // its mean curvature vector is spacelike, so |h1| != |h2| and the
    // marginally-trapped flag must stay off
    let def = degenerate_graph_surface(DegenerateSurfaceParams {
        profile: Profile::Zero,
    })
    .unwrap();
    let sphere = def.analytic().unwrap().clone();
    let rho = 0.7f64;
    let (s, c) = (rho.sin(), rho.cos());
    let grid = GridSpec::open_square(-0.5, -0.5, 1.0, 24);
    let pos = Field::from_fn(&grid, |i, j| {
        let p = sphere.jet_at(grid.x(i), grid.y(j)).f;
        Vec5([s * p.0[0], s * p.0[1], s * p.0[2], c, 0.0])
    });
    for p in &pos.data {
        assert!((lorentz_inner(p, p) - 1.0).abs() < 1e-12);
    }
    let jet = chart::jets_by_finite_difference(&pos, &grid).unwrap();
    let (framed, _) = chart::build_positively_oriented_normal_frame(&jet).unwrap();
    let sf = chart::second_fundamental_data(&framed).unwrap();
    let (_h, residual, marginal) = invariants::mean_curvature_data(&sf);
    assert!(!marginal, "spacelike-H sphere flagged marginally trapped");
    let interior_max = {
        let mut m = 0.0f64;
        for j in 3..grid.ny - 3 {
            for i in 3..grid.nx - 3 {
                m = m.max(residual.at(i, j));
            }
        }
        m
    };
    assert!(
        interior_max > 1e-2,
        "marginal residual should be bounded away from zero, got {interior_max}"
    );
}

#[test]
fn first_structure_equation_residual() {
    // <f_zz - 2u_z f_z - xi1 N1 - xi2 N2, v> vanishes for v in
    // {f, f_z, f_zbar, N1, N2}
    use mtsurf::minkowski::{complex_bilinear_inner, inner_cr};
    for (jet, tolv) in [
        (
            torus_jet(1.0, GridSpec::periodic_square(2.0 * std::f64::consts::PI, 12)),
            1e-10,
        ),
        (
            {
                let def = degenerate_graph_surface(DegenerateSurfaceParams {
                    profile: Profile::SinX { amplitude: 0.1 },
                })
                .unwrap();
                chart::sample_analytic_surface(&def, &GridSpec::open_square(-0.5, -0.5, 1.0, 12))
                    .unwrap()
            },
            1e-9,
        ),
    ] {
        let (field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
        let sf = field.second_fundamental();
        let lift = invariants::lift_derivatives(&jet, &sf);
        let grid = jet.grid;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let rem = jet.fzz.at(i, j)
                    - jet.fz.at(i, j) * (2.0 * lift.u_z.at(i, j))
                    - jet.n1.at(i, j).complexify() * field.xi1.at(i, j)
                    - jet.n2.at(i, j).complexify() * field.xi2.at(i, j);
                assert!(inner_cr(&rem, &jet.f.at(i, j)).norm() < tolv);
                assert!(complex_bilinear_inner(&rem, &jet.fz.at(i, j)).norm() < tolv);
                assert!(complex_bilinear_inner(&rem, &jet.fzbar.at(i, j)).norm() < tolv);
                assert!(inner_cr(&rem, &jet.n1.at(i, j)).norm() < tolv);
                assert!(inner_cr(&rem, &jet.n2.at(i, j)).norm() < tolv);
            }
        }
    }
}

#[test]
fn differential_identities_hold_pointwise() {
    // Q = q · (ξ₁+ξ₂) and δ = h·q exactly, by construction from shared
    // fields
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 12);
    let jet = torus_jet(0.5, grid);
    let (field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    for k in 0..field.q.data.len() {
        let q = field.q.data[k];
        let sum = field.xi1.data[k] + field.xi2.data[k];
        assert_eq!(field.big_q.data[k], q * sum);
        assert_eq!(field.delta.data[k], q * field.h.data[k]);
    }
}

#[test]
fn reorthogonalization_does_not_distort_the_trajectory() {
    // halving the substep changes the frames by no more than the local
    // truncation budget while group membership stays at the projection
    // floor
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
    let jet = torus_jet(1.0, grid);
    let (field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    let sf = field.second_fundamental();
    let lift = invariants::lift_derivatives(&jet, &sf);
    let coeff = deform::assemble_frame_matrix(&field, &lift).unwrap();
    let split = deform::reductive_split(&coeff);
    let alpha = deform::alpha_family(
        &split,
        DeformParam::Lambda(C64::new(0.0, 1.0)),
        &field,
        &lift,
    )
    .unwrap();
    let initial = chart::adapted_frame_at(&jet, 0, 0).unwrap();
    let coarse = deform::integrate_extended_frame(&alpha, &grid, initial, 16).unwrap();
    let fine = deform::integrate_extended_frame(&alpha, &grid, initial, 32).unwrap();
    let mut diff = 0.0f64;
    for k in 0..coarse.frames.data.len() {
        diff = diff.max((coarse.frames.data[k] - fine.frames.data[k]).norm_max());
        assert!(so41_membership_residual(&coarse.frames.data[k]) < 1e-10);
    }
    // the coarse trajectory carries the coarse truncation error only
    assert!(diff < 1e-5, "step halving moved the trajectory by {diff}");
    assert!(diff > 0.0);
}

#[test]
fn deformed_surfaces_pass_compatibility_at_relaxed_tolerance() {
    // every deformed surface satisfies Gauss/Codazzi/Ricci one order looser
    // than the analytic base
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 32);
    let jet = torus_jet(1.0, grid);
    let (field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    let sf = field.second_fundamental();
    let lift = invariants::lift_derivatives(&jet, &sf);
    let d = deform::deform(
        &jet,
        &field,
        &lift,
        DeformParam::Lambda(C64::new(0.0, 1.0)),
        tol::RK_SUBSTEPS,
        &Options::default(),
    )
    .unwrap();
    let dsf = d.field.second_fundamental();
    let dbasic = invariants::basic_derivatives(&d.jet, &dsf);
    let rep = invariants::compatibility_residuals(&dsf, &dbasic, &grid);
    for e in &rep.entries {
        assert!(e.max < 1e-9, "{}: {:.3e}", e.name, e.max);
    }
}

#[test]
fn integrator_rejects_incompatible_coefficients() {
    // corrupt the invariant data so the Maurer-Cartan gate trips
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
    let jet = torus_jet(1.0, grid);
    let (mut field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            *field.h.at_mut(i, j) += 0.05 * grid.x(i).sin();
        }
    }
    let sf = field.second_fundamental();
    let lift = invariants::lift_derivatives(&jet, &sf);
    let coeff = deform::assemble_frame_matrix(&field, &lift).unwrap();
    let split = deform::reductive_split(&coeff);
    let alpha = deform::alpha_family(
        &split,
        DeformParam::Lambda(C64::new(1.0, 0.0)),
        &field,
        &lift,
    )
    .unwrap();
    let initial = chart::adapted_frame_at(&jet, 0, 0).unwrap();
    assert!(matches!(
        deform::integrate_extended_frame(&alpha, &grid, initial, 4),
        Err(Error::NonIntegrable(_))
    ));
}

#[test]
fn calapso_rejects_nonconstant_q() {
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 12);
    let jet = torus_jet(1.0, grid);
    let (mut field, _) = invariants::analyze(&jet, &Options::default()).unwrap();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            *field.q.at_mut(i, j) += C64::new(1e-3 * grid.x(i), 0.0);
        }
    }
    let sf = field.second_fundamental();
    let lift = invariants::lift_derivatives(&jet, &sf);
    let coeff = deform::assemble_frame_matrix(&field, &lift).unwrap();
    let split = deform::reductive_split(&coeff);
    assert!(matches!(
        deform::alpha_family(&split, DeformParam::Calapso(1.0), &field, &lift),
        Err(Error::Normalization(_))
    ));
}

#[test]
fn off_quadric_definition_is_rejected() {
    use mtsurf::catalog::{AnalyticSurface, PointJet, SurfaceDefinition};
    use mtsurf::minkowski::CVec5;
    struct OffQuadric;
    impl AnalyticSurface for OffQuadric {
        fn jet_at(&self, _x: f64, _y: f64) -> PointJet {
            PointJet {
                f: Vec5([1.1, 0.0, 0.0, 0.0, 0.0]), // <f,f> = 1.21
                fz: CVec5::ZERO,
                fzz: CVec5::ZERO,
                fzzbar: CVec5::ZERO,
                n1: Vec5::basis(3),
                n2: Vec5::basis(4),
                dzn1: CVec5::ZERO,
                dzn2: CVec5::ZERO,
            }
        }
    }
    let def = SurfaceDefinition::Analytic {
        name: "off-quadric".into(),
        surface: std::sync::Arc::new(OffQuadric),
    };
    let grid = GridSpec::open_square(0.0, 0.0, 1.0, 6);
    match chart::sample_analytic_surface(&def, &grid) {
        Err(Error::Validation(msg)) => assert!(msg.contains("quadric"), "{msg}"),
        other => panic!("expected validation error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn timelike_chart_is_rejected() {
    use mtsurf::catalog::{AnalyticSurface, PointJet, SurfaceDefinition};
    use mtsurf::minkowski::CVec5;
    struct Timelike;
    impl AnalyticSurface for Timelike {
        fn jet_at(&self, _x: f64, _y: f64) -> PointJet {
            PointJet {
                f: Vec5::basis(0),
                fz: Vec5::basis(4).complexify(), // <f_z, conj f_z> = -1
                fzz: CVec5::ZERO,
                fzzbar: CVec5::ZERO,
                n1: Vec5::basis(3),
                n2: Vec5::basis(4),
                dzn1: CVec5::ZERO,
                dzn2: CVec5::ZERO,
            }
        }
    }
    let def = SurfaceDefinition::Analytic {
        name: "timelike".into(),
        surface: std::sync::Arc::new(Timelike),
    };
    let grid = GridSpec::open_square(0.0, 0.0, 1.0, 6);
    let jet = chart::sample_analytic_surface(&def, &grid).unwrap();
    assert!(matches!(
        chart::conformal_factor(&jet),
        Err(Error::NotSpacelike { .. })
    ));
}

#[test]
fn degenerate_span_fails_the_dual_section_solve() {
    use mtsurf::minkowski::CVec5;
    use mtsurf::null_gauss::{dual_section_n, CanonicalLift};
    let grid = GridSpec::open_square(0.0, 0.0, 1.0, 3);
    // Y_zz̄ inside span{Y, Y_z}: the 4x4 Gram is singular
    let y = Field::from_fn(&grid, |_, _| Vec5([0.0, 0.0, 0.0, 1.0, 1.0]));
    let y_z = Field::from_fn(&grid, |_, _| {
        (Vec5::basis(1).complexify() + Vec5::basis(2).complexify() * C64::i()) * C64::new(0.5, 0.0)
    });
    let lift = CanonicalLift {
        y: y.clone(),
        y_z: y_z.clone(),
        y_zbar: y_z.map(|v: CVec5| v.conj()),
        y_zz: Field::from_fn(&grid, |_, _| CVec5::ZERO),
        y_zzbar: y.map(|v| v.complexify() * C64::new(2.0, 0.0)),
        pairing_residual: 0.0,
    };
    assert!(matches!(
        dual_section_n(&lift),
        Err(Error::Degeneracy(_))
    ));
}

#[test]
fn transform_rejects_vanishing_map_derivative() {
    use mtsurf::catalog::HoloMap;
    use mtsurf::null_gauss::transform_invariants;
    let grid = GridSpec::open_square(0.0, 0.0, 1.0, 4);
    let kappa = Field::from_fn(&grid, |_, _| C64::new(1.0, 0.0));
    let s = Field::from_fn(&grid, |_, _| C64::new(2.0, 0.0));
    let degenerate_map = HoloMap::Affine {
        a: C64::new(0.0, 0.0),
        b: C64::new(0.0, 0.0),
    };
    assert!(matches!(
        transform_invariants(&kappa, &s, &degenerate_map, &grid),
        Err(Error::Domain(_))
    ));
}

#[test]
fn stationary_torus_is_willmore_and_deformable() {
    // h = 0: δ ≡ 0, zero mean curvature, the lambda family still applies
    // (parallel H trivially) and preserves the invariants
    let grid = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 16);
    let jet = torus_jet(0.0, grid);
    let (field, basic) = invariants::analyze(&jet, &Options::default()).unwrap();
    assert!(field.flags.parallel_mean_curvature);
    let hopf = invariants::hopf_differentials(&field, &basic);
    let cls =
        mtsurf::null_gauss::classify_gauss_map(&field, hopf.residuals.max_of("delta_dzbar"))
            .unwrap();
    assert_eq!(cls.willmore, Some(true));
    let sf = field.second_fundamental();
    let lift = invariants::lift_derivatives(&jet, &sf);
    let d = deform::deform(
        &jet,
        &field,
        &lift,
        DeformParam::Lambda(C64::new(0.0, 1.0)),
        16,
        &Options::default(),
    )
    .unwrap();
    for k in 0..d.field.h.data.len() {
        assert!(d.field.h.data[k].abs() < 1e-8);
    }
}
