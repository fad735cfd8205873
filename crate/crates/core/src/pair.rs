use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialModel;

/// The bivariate law `(X, Y) = (S₁, ρS₁ + √(1-ρ²) S₂)` for a spherical
/// `(S₁, S₂)` with radius distributed as `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticalPair {
    rho: f64,
    model: RadialModel,
}

impl EllipticalPair {
    pub fn new(rho: f64, model: RadialModel) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho, model })
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(rho, RadialModel::gaussian())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn model(&self) -> &RadialModel {
        &self.model
    }

    /// `ψ = arccos ρ`, the angle between the two projection directions.
    pub fn psi(&self) -> f64 {
        self.rho.acos()
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {rho}")))
    }
}
