//! Turns two focus-measure maps into complementary per-pixel weights.

use crate::error::{ensure_same_dims, FusionError, Result};
use crate::grid::{window_sum, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    /// Even region size r; decisions sum over an `(r+1) x (r+1)` region.
    pub region_size: usize,
    /// Sigmoid steepness.
    pub steepness: f64,
    /// Divide both measure maps by their joint maximum before differencing.
    pub joint_scale: bool,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            region_size: 4,
            steepness: 10.0,
            joint_scale: true,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        check_region_size(self.region_size)?;
        check_steepness(self.steepness)
    }
}

fn check_region_size(r: usize) -> Result<()> {
    if !r.is_multiple_of(2) {
        return Err(FusionError::InvalidInput(format!(
            "region size must be even, got {r}"
        )));
    }
    Ok(())
}

fn check_steepness(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(FusionError::InvalidInput(format!(
            "steepness must be positive, got {eta}"
        )));
    }
    Ok(())
}

/// `M = D_A - D_B`, optionally after dividing both by their joint maximum.
pub fn difference_map(
    da: &ScalarField,
    db: &ScalarField,
    cfg: &WeightConfig,
) -> Result<ScalarField> {
    ensure_same_dims(da.dims(), db.dims())?;
    let scale = if cfg.joint_scale {
        let joint = da.max().max(db.max());
        if joint > 0.0 {
            joint
        } else {
            1.0
        }
    } else {
        1.0
    };
    if scale == 1.0 {
        da.zip_map(db, |a, b| a - b)
    } else {
        da.zip_map(db, |a, b| a / scale - b / scale)
    }
}

/// Sum of `m` over the `(r+1) x (r+1)` region centred on each pixel.
pub fn regional_sum(m: &ScalarField, region_size: usize) -> Result<ScalarField> {
    check_region_size(region_size)?;
    Ok(window_sum(m, region_size / 2))
}

/// Sigmoid weights `(1 / (1 + e^{-eta M}), 1 / (1 + e^{eta M}))`.
///
/// The pair sums to one at every pixel and swapping the sign of `M` swaps
/// the two fields exactly.
pub fn weight_fields(m_bar: &ScalarField, steepness: f64) -> Result<(ScalarField, ScalarField)> {
    check_steepness(steepness)?;
    let wa = m_bar.map(|m| 1.0 / (1.0 + (-steepness * m).exp()));
    let wb = m_bar.map(|m| 1.0 / (1.0 + (steepness * m).exp()));
    Ok((wa, wb))
}

/// Weights for image A and image B from their measure maps.
pub fn weights_from_measures(
    da: &ScalarField,
    db: &ScalarField,
    cfg: &WeightConfig,
) -> Result<(ScalarField, ScalarField)> {
    cfg.validate()?;
    let m = difference_map(da, db, cfg)?;
    let m_bar = regional_sum(&m, cfg.region_size)?;
    weight_fields(&m_bar, cfg.steepness)
}
