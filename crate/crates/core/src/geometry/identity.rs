//! Synthetic identities: a grid mask plus the guide points of every crease.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::guides::{
    jitter_in_place, quantize, sample_bezier_guides, sample_principal_guides, CurveRole,
    GuidePointSet, Margin, PRINCIPAL_DEGREES,
};
use super::mask::{sample_grid_mask, GridMask};
use super::GeometryError;
use crate::seed::{derive_rng, rng_from_seed};

pub const IDENTITY_SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_VERSION: &str = concat!("crease-core/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    /// Range of the per-identity perturbation margin `m`.
    pub margin_range: (f64, f64),
    /// Principal crease degrees, drawn uniformly.
    pub degrees: Vec<usize>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            margin_range: (Margin::MIN, Margin::MAX),
            degrees: PRINCIPAL_DEGREES.to_vec(),
        }
    }
}

impl IdentityConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let (lo, hi) = self.margin_range;
        Margin::new(lo)?;
        Margin::new(hi)?;
        if lo > hi {
            return Err(GeometryError::MarginOutOfRange(lo));
        }
        if self.degrees.is_empty() {
            return Err(GeometryError::InvalidDegree(0));
        }
        for &d in &self.degrees {
            if !PRINCIPAL_DEGREES.contains(&d) {
                return Err(GeometryError::InvalidDegree(d));
            }
        }
        Ok(())
    }
}

/// Set on records produced by control-point diversity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentRef {
    pub id: String,
    pub variant_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    pub generator_version: String,
    pub perturb_margin: f64,
    pub parent: Option<ParentRef>,
    pub mask: GridMask,
    pub curves: Vec<GuidePointSet>,
}

/// Draws `m`, a grid mask and one guide set per mask slot, in that order.
/// Principal rows come first (top to bottom), then non-prominent cells.
pub fn sample_identity<R: Rng + ?Sized>(
    rng: &mut R,
    config: &IdentityConfig,
    id: &str,
    seed: u64,
) -> Result<IdentityRecord, GeometryError> {
    config.validate()?;
    let (lo, hi) = config.margin_range;
    let m = quantize((lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi));
    let margin = Margin::new(m)?;
    let mask = sample_grid_mask(rng);

    let mut curves = Vec::new();
    for row in mask.principal_rows() {
        let degree = config.degrees[rng.random_range(0..config.degrees.len())];
        curves.push(sample_principal_guides(rng, row, margin, degree)?);
    }
    for (row, cell) in mask.active_cells() {
        curves.push(sample_bezier_guides(rng, row, cell, margin)?);
    }
    Ok(IdentityRecord {
        schema_version: IDENTITY_SCHEMA_VERSION,
        id: id.to_string(),
        seed,
        generator_version: GENERATOR_VERSION.to_string(),
        perturb_margin: m,
        parent: None,
        mask,
        curves,
    })
}

impl IdentityRecord {
    /// Regenerates the identity owned by `seed`.
    pub fn generate(id: &str, seed: u64, config: &IdentityConfig) -> Result<Self, GeometryError> {
        sample_identity(&mut rng_from_seed(seed), config, id, seed)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.mask.validate()?;
        let m = self.perturb_margin;
        if !(Margin::MIN..=Margin::MAX).contains(&m) {
            return Err(GeometryError::MarginOutOfRange(m));
        }
        let mut principal: Vec<usize> = Vec::new();
        let mut cells: Vec<(usize, usize)> = Vec::new();
        for c in &self.curves {
            c.validate(m)?;
            match c.role {
                CurveRole::Principal => principal.push(c.row),
                CurveRole::NonProminent => cells.push((c.row, c.cell.unwrap_or(usize::MAX))),
            }
        }
        principal.sort_unstable();
        cells.sort_unstable();
        let want_p: Vec<usize> = self.mask.principal_rows().collect();
        let want_c: Vec<(usize, usize)> = self.mask.active_cells().collect();
        if principal != want_p || cells != want_c {
            return Err(GeometryError::Inconsistent(format!(
                "curves {principal:?}/{cells:?} do not match mask {}",
                self.mask.key()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, GeometryError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let record: Self = serde_json::from_str(text)?;
        if record.schema_version != IDENTITY_SCHEMA_VERSION {
            return Err(GeometryError::Schema(record.schema_version));
        }
        Ok(record)
    }

    /// Control-point diversity variant using the stream derived from this
    /// record's seed and `variant_index`.
    pub fn cpd_variant_seeded(
        &self,
        variant_index: u32,
        magnitude: f64,
    ) -> Result<IdentityRecord, GeometryError> {
        let mut rng = derive_rng(self.seed, &["cpd", &variant_index.to_string()]);
        cpd_variant(self, &mut rng, magnitude, variant_index)
    }
}

/// Re-perturbs every guide point of every curve by `U(-magnitude, magnitude)`
/// in x and y, keeping the mask untouched.
///
/// Points stay inside the owning row or cell grown by the parent's margin
/// and keep their strict x-ordering.
pub fn cpd_variant<R: Rng + ?Sized>(
    parent: &IdentityRecord,
    rng: &mut R,
    magnitude: f64,
    variant_index: u32,
) -> Result<IdentityRecord, GeometryError> {
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(GeometryError::InvalidMagnitude(magnitude));
    }
    let mut child = parent.clone();
    for curve in child.curves.iter_mut() {
        jitter_in_place(rng, curve, magnitude, parent.perturb_margin);
    }
    child.id = format!("{}-cpd{variant_index:02}", parent.id);
    child.parent = Some(ParentRef {
        id: parent.id.clone(),
        variant_index,
    });
    Ok(child)
}
