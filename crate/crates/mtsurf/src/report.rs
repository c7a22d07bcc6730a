//! Residual reports, classification records and verdict structures.

use serde::{Deserialize, Serialize};

/// One named residual: max and mean norms over the (interior) grid, the
/// grid spacing, and the measured convergence order when two resolutions
/// were compared.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub spacing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
}

/// A set of named residual norms.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn push(&mut self, name: &str, max: f64, mean: f64, spacing: f64) {
        self.entries.push(ResidualEntry {
            name: name.into(),
            max,
            mean,
            spacing,
            order: None,
        });
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn max_of(&self, name: &str) -> f64 {
        self.get(name).map(|e| e.max).unwrap_or(f64::NAN)
    }

    pub fn merged(mut self, other: ResidualReport) -> ResidualReport {
        self.entries.extend(other.entries);
        self
    }

    /// True when every entry's max is below the tolerance.
    pub fn all_below(&self, tolerance: f64) -> bool {
        self.entries.iter().all(|e| e.max <= tolerance)
    }

    /// Fill `order` fields by comparing against the same residuals measured
    /// on a grid with half the spacing.
    pub fn with_orders_from(mut self, finer: &ResidualReport) -> ResidualReport {
        for e in &mut self.entries {
            if let Some(f) = finer.get(&e.name) {
                e.order = crate::grid::convergence_order(e.max, f.max);
            }
        }
        self
    }
}

/// Classification of a marginally trapped surface and its null Gauss map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub marginally_trapped: bool,
    pub flat_normal_bundle: bool,
    pub parallel_mean_curvature: bool,
    pub non_isotropic: bool,
    /// q ≡ 0: the null Gauss map is constant and the conformal-invariant
    /// classification below does not apply.
    pub gauss_map_constant: bool,
    pub willmore: Option<bool>,
    pub constrained_willmore: Option<bool>,
    pub isothermic: Option<bool>,
    pub thresholds: ClassificationThresholds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationThresholds {
    pub marginal_rel: f64,
    pub flat_normal_bundle_max: f64,
    pub parallel_h_max: f64,
    pub non_isotropic_min_q: f64,
    pub willmore_delta_max: f64,
    pub constrained_willmore_holo: f64,
    pub isothermic_phase: f64,
}

/// Result of the congruence test between two framed surfaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CongruenceReport {
    pub congruent: bool,
    /// Max euclidean distance between Phi f_A and ±f_B over the grid.
    pub residual: f64,
    /// Whether the antipodal match −f_B was the better one.
    pub antipodal: bool,
    pub so41_residual: f64,
    pub time_orientation_preserving: bool,
    pub tolerance: f64,
    /// The candidate isometry, rows of the 5×5 matrix.
    pub phi: [[f64; 5]; 5],
}

/// Per-law residuals of a deformation-family verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawReport {
    pub family: String,
    pub parameter: [f64; 2],
    pub kappa_law: f64,
    pub s_law: f64,
    pub delta_law: f64,
    pub h_law: f64,
    pub u_preserved: f64,
    pub xi1_law: Option<f64>,
    pub xi2_law: Option<f64>,
    pub isotropy_residual: f64,
    pub min_abs_q: f64,
    pub marginally_trapped: bool,
    pub flat_normal_bundle: bool,
}
