//! Subcommand implementations: analyze, deform, verify, generate.

use crate::manifest::{
    parse_param, BackendChoice, FamilyChoice, Manifest, NormalGauge, PipelineOptions,
};
use mtsurf::catalog::SurfaceDefinition;
use mtsurf::chart::{self, Backend, JetGrid};
use mtsurf::deform::{self, DeformParam};
use mtsurf::error::Error;
use mtsurf::grid::{Field, GridSpec};
use mtsurf::invariants::{self, BasicDerivs, InvariantField};
use mtsurf::null_gauss::{self};
use mtsurf::report::{Classification, ClassificationThresholds, ResidualReport};
use mtsurf::{io, tol, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything the pipeline produced for one surface.
pub struct Pipeline {
    pub jet: JetGrid,
    pub field: InvariantField,
    pub basic: BasicDerivs,
    pub frame_flipped: bool,
    pub parallel_gauge: Option<(f64, f64)>, // (sigma residual, closedness)
}

fn backend_tolerance(backend: Backend, grid: &GridSpec, opts: &PipelineOptions) -> f64 {
    opts.tolerance.unwrap_or(match backend {
        Backend::Analytic => 1e-8,
        Backend::FiniteDifference => 10.0 * grid.spacing() * grid.spacing(),
    })
}

/// Build jets + frame + invariants from a manifest surface.
pub fn run_pipeline(
    def: &SurfaceDefinition,
    grid: &GridSpec,
    backend: BackendChoice,
    opts: &PipelineOptions,
) -> Result<Pipeline> {
    let jet = match (backend, def) {
        (BackendChoice::Analytic, SurfaceDefinition::Analytic { .. }) => {
            chart::sample_analytic_surface(def, grid)?
        }
        (BackendChoice::Analytic, SurfaceDefinition::Tabulated { .. }) => {
            return Err(Error::Manifest(
                "analytic backend requires a catalog surface, not tabulated CSV".into(),
            ))
        }
        (BackendChoice::Fd, SurfaceDefinition::Tabulated {
            grid: g,
            positions,
            ..
        }) => {
            if !(g.nx == grid.nx && g.ny == grid.ny) {
                return Err(Error::GridMismatch(format!(
                    "tabulated input is {}x{}, manifest grid is {}x{}",
                    g.nx, g.ny, grid.nx, grid.ny
                )));
            }
            let jet = chart::jets_by_finite_difference(positions, grid)?;
            let (framed, _) = chart::build_positively_oriented_normal_frame(&jet)?;
            framed
        }
        (BackendChoice::Fd, SurfaceDefinition::Analytic { surface, .. }) => {
            // tabulate the generator and difference it
            let positions = Field::from_fn(grid, |i, j| surface.jet_at(grid.x(i), grid.y(j)).f);
            let jet = chart::jets_by_finite_difference(&positions, grid)?;
            let (framed, _) = chart::build_positively_oriented_normal_frame(&jet)?;
            framed
        }
    };
    let mut frame_flipped = false;
    let mut parallel_gauge = None;
    let mut jet = jet;
    if opts.normal_gauge == NormalGauge::Parallel {
        let sf = chart::second_fundamental_data(&jet)?;
        let out = chart::parallelize_normal_frame(&sf, &jet)?;
        parallel_gauge = Some((out.sigma_residual, out.closedness));
        jet = out.jet;
    }
    if !jet.frame_built {
        let (framed, rep) = chart::build_positively_oriented_normal_frame(&jet)?;
        jet = framed;
        frame_flipped = rep.n1_flipped;
    }
    let iopts = invariants::Options {
        non_isotropic_min_q: opts.non_isotropic_min_q,
    };
    let (field, basic) = invariants::analyze(&jet, &iopts)?;
    Ok(Pipeline {
        jet,
        field,
        basic,
        frame_flipped,
        parallel_gauge,
    })
}

#[derive(Serialize)]
struct AnalyzeReport {
    tool_version: String,
    manifest_sha256: String,
    backend: String,
    grid: GridSpec,
    tolerance: f64,
    passed: bool,
    isotropy_max: f64,
    spacelike_min: f64,
    marginally_trapped: bool,
    flat_normal_bundle: bool,
    parallel_mean_curvature: bool,
    non_isotropic: bool,
    willmore_energy: Option<f64>,
    s_route_discrepancy: Option<f64>,
    n1_flipped: bool,
    parallel_gauge: Option<(f64, f64)>,
    residuals: ResidualReport,
}

/// `analyze`: writes invariants.csv, classification.json, residuals.json;
/// exit 0 iff all gated residuals sit below the configured tolerance.
pub fn cmd_analyze(
    manifest: &Manifest,
    manifest_hash: &str,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<bool> {
    std::fs::create_dir_all(out_dir)?;
    let grid = manifest.grid_spec()?;
    let def = manifest.surface_definition(base_dir)?;
    let p = run_pipeline(&def, &grid, manifest.backend, &manifest.options)?;
    let tolerance = backend_tolerance(p.jet.backend, &grid, &manifest.options);

    let conf = chart::conformality_residual(&p.jet);
    let sf = p.field.second_fundamental();
    let mut residuals = invariants::compatibility_residuals(&sf, &p.basic, &grid);
    let hopf = invariants::hopf_differentials(&p.field, &p.basic);
    residuals = residuals.merged(hopf.residuals.clone());
    residuals = residuals.merged(deform::gauss_transform_harmonicity_residual(
        &p.jet, &p.field, &p.basic,
    ));

    let mut willmore_energy = None;
    let mut s_route_disc = None;
    if p.field.flags.marginally_trapped && p.field.flags.non_isotropic {
        let lift = invariants::lift_derivatives(&p.jet, &sf);
        let frame = null_gauss::moebius_frame(&p.jet, &p.field, &p.basic, &lift).ok();
        let inv = null_gauss::conformal_invariants(&p.jet, &p.field, &lift, frame.as_ref())?;
        s_route_disc = inv.route_discrepancy;
        residuals = residuals.merged(null_gauss::fundamental_equation_residual(
            &inv,
            &p.field.delta,
        ));
        residuals = residuals.merged(null_gauss::conformal_gauss_codazzi_residuals(
            &inv,
            &lift.u_z,
            frame.as_ref().map(|f| (&p.jet, f)),
        ));
        willmore_energy = Some(null_gauss::willmore_energy(&inv, &grid));
        io::write_conformal_csv(&out_dir.join("conformal.csv"), &inv)?;
    }

    // classification (a constant Gauss map is a verdict, not a failure)
    let classification = match null_gauss::classify_gauss_map(
        &p.field,
        hopf.residuals.max_of("delta_dzbar"),
    ) {
        Ok(c) => c,
        Err(Error::GaussMapConstant(_)) => Classification {
            marginally_trapped: p.field.flags.marginally_trapped,
            flat_normal_bundle: p.field.flags.flat_normal_bundle,
            parallel_mean_curvature: p.field.flags.parallel_mean_curvature,
            non_isotropic: false,
            gauss_map_constant: true,
            willmore: None,
            constrained_willmore: None,
            isothermic: None,
            thresholds: default_thresholds(&p.field),
        },
        Err(e) => return Err(e),
    };

    // verdict: compatibility residuals and chart isotropy below tolerance
    let gate = ["gauss", "codazzi_1", "codazzi_2", "ricci"];
    let mut passed = conf.isotropy_max <= tolerance;
    for g in gate {
        passed &= residuals.max_of(g) <= tolerance;
    }

    io::write_invariants_csv(&out_dir.join("invariants.csv"), &p.field)?;
    io::write_json(&out_dir.join("classification.json"), &classification)?;
    io::write_json(
        &out_dir.join("residuals.json"),
        &AnalyzeReport {
            tool_version: TOOL_VERSION.into(),
            manifest_sha256: manifest_hash.into(),
            backend: format!("{:?}", p.jet.backend),
            grid,
            tolerance,
            passed,
            isotropy_max: conf.isotropy_max,
            spacelike_min: conf.spacelike_min,
            marginally_trapped: p.field.flags.marginally_trapped,
            flat_normal_bundle: p.field.flags.flat_normal_bundle,
            parallel_mean_curvature: p.field.flags.parallel_mean_curvature,
            non_isotropic: p.field.flags.non_isotropic,
            willmore_energy,
            s_route_discrepancy: s_route_disc,
            n1_flipped: p.frame_flipped,
            parallel_gauge: p.parallel_gauge,
            residuals,
        },
    )?;
    Ok(passed)
}

fn default_thresholds(field: &InvariantField) -> ClassificationThresholds {
    ClassificationThresholds {
        marginal_rel: tol::MARGINAL_REL,
        flat_normal_bundle_max: tol::FLAT_NORMAL_BUNDLE_MAX,
        parallel_h_max: invariants::parallel_h_tolerance(field.backend, field.grid.spacing()),
        non_isotropic_min_q: tol::NON_ISOTROPIC_MIN_Q,
        willmore_delta_max: tol::WILLMORE_DELTA_MAX,
        constrained_willmore_holo: tol::CONSTRAINED_WILLMORE_HOLO,
        isothermic_phase: tol::ISOTHERMIC_PHASE_TOL,
    }
}

#[derive(Serialize)]
struct DeformOutcome {
    tool_version: String,
    manifest_sha256: String,
    family: String,
    parameter: [f64; 2],
    law: Option<mtsurf::report::LawReport>,
    fundamental_residual: f64,
    conformal_gauss: f64,
    conformal_codazzi: f64,
    path_discrepancy: Option<f64>,
    orthogonality_residual: Option<f64>,
    maurer_cartan: Option<f64>,
    passed: bool,
}

/// Validate the family preconditions, naming the first violated flag.
fn validate_family(field: &InvariantField, family: FamilyChoice) -> Result<()> {
    let flags = &field.flags;
    if !flags.marginally_trapped {
        return Err(Error::State(
            "deformation precondition violated: marginally_trapped".into(),
        ));
    }
    if !flags.non_isotropic {
        return Err(Error::State(
            "deformation precondition violated: non_isotropic".into(),
        ));
    }
    match family {
        FamilyChoice::Lambda | FamilyChoice::Extended => {
            if !flags.parallel_mean_curvature {
                return Err(Error::State(
                    "deformation precondition violated: parallel_mean_curvature".into(),
                ));
            }
        }
        FamilyChoice::Calapso => {
            if !flags.flat_normal_bundle {
                return Err(Error::State(
                    "deformation precondition violated: flat_normal_bundle".into(),
                ));
            }
        }
    }
    Ok(())
}

/// `deform`: per requested parameter, integrate (or synthesize) the family
/// member and write its surface CSV, invariant CSV and law-verification
/// JSON. Preconditions are validated before integrating.
pub fn cmd_deform(
    manifest: &Manifest,
    manifest_hash: &str,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<bool> {
    if manifest.deformations.is_empty() {
        return Err(Error::Manifest("no deformation requests in manifest".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let grid = manifest.grid_spec()?;
    let def = manifest.surface_definition(base_dir)?;
    let p = run_pipeline(&def, &grid, manifest.backend, &manifest.options)?;
    let tolerance = manifest.options.tolerance.unwrap_or(1e-6);
    let sf = p.field.second_fundamental();
    let lift = invariants::lift_derivatives(&p.jet, &sf);
    // base invariants for the law checks
    let base_inv = {
        for req in &manifest.deformations {
            validate_family(&p.field, req.family)?;
        }
        null_gauss::conformal_invariants(&p.jet, &p.field, &lift, None)?
    };
    // Calapso normalization constant c from q at the origin
    let q0 = p.field.q.at(0, 0);
    let mut qdev = 0.0f64;
    for &q in &p.field.q.data {
        qdev = qdev.max((q - q0).norm());
    }
    if qdev > tol::CALAPSO_Q_CONSTANCY {
        return Err(Error::Normalization(format!(
            "law verification requires q ≡ c dz²; non-constancy {qdev:.3e}"
        )));
    }
    let c = q0.re;

    let iopts = invariants::Options {
        non_isotropic_min_q: manifest.options.non_isotropic_min_q,
    };
    let mut all_passed = true;
    for (ri, req) in manifest.deformations.iter().enumerate() {
        for (vi, value) in req.values.iter().enumerate() {
            let param = parse_param(req.family, value)?;
            let tag = format!("{}_{ri}_{vi}", param.family_name());
            let outcome = match param {
                DeformParam::Lambda(_) | DeformParam::Calapso(_) => {
                    let d = deform::deform(
                        &p.jet,
                        &p.field,
                        &lift,
                        param,
                        manifest.options.substeps,
                        &iopts,
                    )?;
                    let dsf = d.field.second_fundamental();
                    let dlift = invariants::lift_derivatives(&d.jet, &dsf);
                    let dinv =
                        null_gauss::conformal_invariants(&d.jet, &d.field, &dlift, None)?;
                    let mut law = deform::verify_transformation_laws(
                        &p.field, &base_inv, &d.field, &dinv, param, c,
                    );
                    law.isotropy_residual = chart::conformality_residual(&d.jet).isotropy_max;
                    let fund =
                        null_gauss::fundamental_equation_residual(&dinv, &d.field.delta);
                    let gc = null_gauss::conformal_gauss_codazzi_residuals(
                        &dinv, &dlift.u_z, None,
                    );
                    io::write_surface_csv(
                        &out_dir.join(format!("surface_{tag}.csv")),
                        &grid,
                        &d.jet.f,
                    )?;
                    io::write_invariants_csv(
                        &out_dir.join(format!("invariants_{tag}.csv")),
                        &d.field,
                    )?;
                    let mc = deform::maurer_cartan_residual(&deform::assemble_frame_matrix(
                        &d.field, &dlift,
                    )?);
                    let passed = law.kappa_law <= tolerance
                        && law.s_law <= tolerance
                        && law.delta_law <= tolerance
                        && law.h_law <= tolerance
                        && law.marginally_trapped;
                    DeformOutcome {
                        tool_version: TOOL_VERSION.into(),
                        manifest_sha256: manifest_hash.into(),
                        family: param.family_name().into(),
                        parameter: param.as_pair(),
                        law: Some(law),
                        fundamental_residual: fund.max_of("fundamental_equation"),
                        conformal_gauss: gc.max_of("conformal_gauss"),
                        conformal_codazzi: gc.max_of("conformal_codazzi"),
                        path_discrepancy: Some(d.frames.path_discrepancy),
                        orthogonality_residual: Some(d.frames.orthogonality_residual),
                        maurer_cartan: Some(mc.max_of("maurer_cartan")),
                        passed,
                    }
                }
                DeformParam::Extended(lam) => {
                    let ext = deform::synthesize_extended_invariants(
                        &base_inv, &p.field, lam, c,
                    )?;
                    let fund =
                        null_gauss::fundamental_equation_residual(&ext.inv, &ext.delta);
                    let gc = null_gauss::conformal_gauss_codazzi_residuals(
                        &ext.inv, &lift.u_z, None,
                    );
                    io::write_conformal_csv(
                        &out_dir.join(format!("conformal_{tag}.csv")),
                        &ext.inv,
                    )?;
                    let passed = fund.max_of("fundamental_equation") <= tolerance
                        && gc.max_of("conformal_gauss") <= tolerance
                        && gc.max_of("conformal_codazzi") <= tolerance;
                    DeformOutcome {
                        tool_version: TOOL_VERSION.into(),
                        manifest_sha256: manifest_hash.into(),
                        family: "extended".into(),
                        parameter: param.as_pair(),
                        law: None,
                        fundamental_residual: fund.max_of("fundamental_equation"),
                        conformal_gauss: gc.max_of("conformal_gauss"),
                        conformal_codazzi: gc.max_of("conformal_codazzi"),
                        path_discrepancy: None,
                        orthogonality_residual: None,
                        maurer_cartan: None,
                        passed,
                    }
                }
            };
            all_passed &= outcome.passed;
            io::write_json(&out_dir.join(format!("laws_{tag}.json")), &outcome)?;
        }
    }
    Ok(all_passed)
}

#[derive(Serialize)]
struct VerifyReport {
    tool_version: String,
    manifest_sha256: String,
    congruence: mtsurf::report::CongruenceReport,
    /// Max differences of gauge-invariant scalars (u, K, K⊥, |Q|, h·q).
    invariant_differences: InvariantDiffs,
}

#[derive(Serialize)]
struct InvariantDiffs {
    u: f64,
    k_gauss: f64,
    k_normal: f64,
    abs_big_q: f64,
    delta: f64,
}

/// `verify`: congruence test between two surface CSVs on the manifest grid.
pub fn cmd_verify(
    manifest: &Manifest,
    manifest_hash: &str,
    path_a: &Path,
    path_b: &Path,
    out_dir: &Path,
    tol_override: Option<f64>,
) -> Result<bool> {
    std::fs::create_dir_all(out_dir)?;
    let (ga, pa) = io::read_surface_csv(path_a)?;
    let (gb, pb) = io::read_surface_csv(path_b)?;
    if !ga.same_layout(&gb) {
        return Err(Error::GridMismatch(format!(
            "{} is {}x{}, {} is {}x{}",
            path_a.display(),
            ga.nx,
            ga.ny,
            path_b.display(),
            gb.nx,
            gb.ny
        )));
    }
    let mut grid = ga;
    grid.periodic_x = manifest.grid.periodic[0];
    grid.periodic_y = manifest.grid.periodic[1];
    let build = |positions: &Field<mtsurf::minkowski::Vec5>| -> Result<(JetGrid, InvariantField)> {
        let jet = chart::jets_by_finite_difference(positions, &grid)?;
        let (framed, _) = chart::build_positively_oriented_normal_frame(&jet)?;
        let iopts = invariants::Options {
            non_isotropic_min_q: manifest.options.non_isotropic_min_q,
        };
        let (field, _) = invariants::analyze(&framed, &iopts)?;
        Ok((framed, field))
    };
    let (ja, fa) = build(&pa)?;
    let (jb, fb) = build(&pb)?;
    let tolerance = tol_override
        .or(manifest.options.tolerance)
        .unwrap_or(100.0 * grid.spacing() * grid.spacing());
    let congruence = null_gauss::congruence_test(&ja, &jb, tolerance)?;
    let diff = |x: &Field<f64>, y: &Field<f64>| -> f64 {
        x.data
            .iter()
            .zip(y.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let diffs = InvariantDiffs {
        u: diff(&fa.u, &fb.u),
        k_gauss: diff(&fa.k_gauss, &fb.k_gauss),
        k_normal: diff(&fa.k_normal, &fb.k_normal),
        abs_big_q: diff(
            &fa.big_q.map(|v| v.norm()),
            &fb.big_q.map(|v| v.norm()),
        ),
        delta: {
            let da = fa.delta.clone();
            let db = fb.delta.clone();
            da.data
                .iter()
                .zip(db.data.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
        },
    };
    let passed = congruence.congruent;
    io::write_json(
        &out_dir.join("congruence.json"),
        &VerifyReport {
            tool_version: TOOL_VERSION.into(),
            manifest_sha256: manifest_hash.into(),
            congruence,
            invariant_differences: diffs,
        },
    )?;
    Ok(passed)
}

/// `generate`: sample the catalog surface and write its positions CSV.
pub fn cmd_generate(manifest: &Manifest, base_dir: &Path, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let grid = manifest.grid_spec()?;
    let def = manifest.surface_definition(base_dir)?;
    let positions = match &def {
        SurfaceDefinition::Analytic { surface, .. } => {
            Field::from_fn(&grid, |i, j| surface.jet_at(grid.x(i), grid.y(j)).f)
        }
        SurfaceDefinition::Tabulated { positions, .. } => positions.clone(),
    };
    let path = out_dir.join("surface.csv");
    io::write_surface_csv(&path, &grid, &positions)?;
    Ok(path)
}
