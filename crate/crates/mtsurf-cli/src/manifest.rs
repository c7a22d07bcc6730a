//! The JSON manifest driving every subcommand.

use mtsurf::catalog::{self, SurfaceDefinition};
use mtsurf::error::Error;
use mtsurf::grid::GridSpec;
use mtsurf::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub surface: SurfaceSource,
    pub grid: GridConfig,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub options: PipelineOptions,
    #[serde(default)]
    pub deformations: Vec<DeformRequest>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Exactly one surface source: a catalog id with parameters, or a CSV path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub origin: [f64; 2],
    pub extent: [f64; 2],
    pub resolution: [usize; 2],
    #[serde(default)]
    pub periodic: [bool; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Analytic,
    Fd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Residual gate for the analyze verdict; `None` picks a backend-aware
    /// default (1e-8 analytic, 10·h² finite differences).
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Non-isotropy threshold on min |Q|.
    #[serde(default = "default_min_q")]
    pub non_isotropic_min_q: f64,
    /// Normal-frame gauge: keep the frame as built, or parallelize on flat
    /// normal bundles.
    #[serde(default)]
    pub normal_gauge: NormalGauge,
    /// RK4 substeps per grid cell for extended-frame integration.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_min_q() -> f64 {
    mtsurf::tol::NON_ISOTROPIC_MIN_Q
}

fn default_substeps() -> usize {
    mtsurf::tol::RK_SUBSTEPS
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            tolerance: None,
            non_isotropic_min_q: default_min_q(),
            normal_gauge: NormalGauge::default(),
            substeps: default_substeps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalGauge {
    #[default]
    AsBuilt,
    Parallel,
}

/// One deformation family request with a nonempty parameter list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformRequest {
    pub family: FamilyChoice,
    /// λ values as [re, im] pairs for lambda/extended; plain reals for
    /// calapso.
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyChoice {
    Lambda,
    Calapso,
    Extended,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Manifest, String)> {
        let bytes = std::fs::read(path)?;
        let manifest: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        use sha2::Digest;
        let hash = format!("{:x}", sha2::Sha256::digest(&bytes));
        Ok((manifest, hash))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.surface.catalog, &self.surface.csv) {
            (Some(_), Some(_)) => Err(Error::Manifest(
                "surface must name exactly one source, got both catalog and csv".into(),
            )),
            (None, None) => Err(Error::Manifest(
                "surface must name exactly one source (catalog or csv)".into(),
            )),
            _ => {
                for d in &self.deformations {
                    if d.values.is_empty() {
                        return Err(Error::Manifest(format!(
                            "deformation request '{:?}' has an empty parameter list",
                            d.family
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.grid.origin[0],
            self.grid.origin[1],
            self.grid.extent[0],
            self.grid.extent[1],
            self.grid.resolution[0],
            self.grid.resolution[1],
            self.grid.periodic[0],
            self.grid.periodic[1],
        )
    }

    /// Materialize the surface definition (catalog generators or CSV
    /// positions).
    pub fn surface_definition(&self, base_dir: &Path) -> Result<SurfaceDefinition> {
        if let Some(entry) = &self.surface.catalog {
            return catalog::custom_surface(&entry.id, &entry.params);
        }
        let rel = self.surface.csv.as_ref().unwrap();
        let path = if rel.is_absolute() {
            rel.clone()
        } else {
            base_dir.join(rel)
        };
        let (mut grid, positions) = mtsurf::io::read_surface_csv(&path)?;
        // the manifest owns the periodicity flags
        grid.periodic_x = self.grid.periodic[0];
        grid.periodic_y = self.grid.periodic[1];
        Ok(SurfaceDefinition::Tabulated {
            name: path.display().to_string(),
            grid,
            positions,
        })
    }
}

/// Parse one deformation parameter value.
pub fn parse_param(family: FamilyChoice, v: &serde_json::Value) -> Result<mtsurf::deform::DeformParam> {
    use mtsurf::deform::DeformParam;
    use mtsurf::C64;
    let complex = |v: &serde_json::Value| -> Result<C64> {
        if let Some(arr) = v.as_array() {
            if arr.len() == 2 {
                let re = arr[0].as_f64();
                let im = arr[1].as_f64();
                if let (Some(re), Some(im)) = (re, im) {
                    return Ok(C64::new(re, im));
                }
            }
        }
        if let Some(x) = v.as_f64() {
            return Ok(C64::new(x, 0.0));
        }
        Err(Error::Manifest(format!(
            "expected a complex value as [re, im] (or a real), got {v}"
        )))
    };
    match family {
        FamilyChoice::Lambda => Ok(DeformParam::Lambda(complex(v)?)),
        FamilyChoice::Extended => Ok(DeformParam::Extended(complex(v)?)),
        FamilyChoice::Calapso => v
            .as_f64()
            .map(DeformParam::Calapso)
            .ok_or_else(|| Error::Manifest(format!("calapso parameter must be a real, got {v}"))),
    }
}
