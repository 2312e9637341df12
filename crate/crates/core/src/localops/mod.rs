//! Element-local HHO objects: DOF layout, interpolator, U-product, gradient,
//! Stokes and Darcy potentials, divergence and the stabilised bilinear forms.

pub mod coefficients;
pub mod context;
pub mod dofs;
pub mod operators;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

pub use coefficients::{friction_coefficient, CoefficientField, Friction, Medium, RegimeCensus, DEFAULT_EPSILON};
pub use context::{ElementContext, FaceContext};
pub use dofs::{LocalDofLayout, LocalDofVector};
pub use operators::{build_local_operators, load_vector, LocalOperatorSet};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;

/// Discretisation parameters shared by every element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub k: usize,
    pub stab_scale_stokes: f64,
    pub stab_scale_darcy: f64,
    pub epsilon: f64,
    /// Orthonormalise bases; defaults to `k >= 2` when unset.
    pub orthonormal: Option<bool>,
    /// Quadrature degree for sources and interpolation; defaults to 2k + 5.
    pub rhs_quad_degree: Option<usize>,
}

impl Default for DiscretisationConfig {
    fn default() -> Self {
        Self::new(1)
    }
}

impl DiscretisationConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            stab_scale_stokes: 3.0,
            stab_scale_darcy: 0.3,
            epsilon: DEFAULT_EPSILON,
            orthonormal: None,
            rhs_quad_degree: None,
        }
    }

    /// Scalings tuned for strongly heterogeneous media: 1 for Stokes and 10^-(k+1) for Darcy.
    pub fn degree_scaled(k: usize) -> Self {
        Self { stab_scale_stokes: 1.0, stab_scale_darcy: 10f64.powi(-(k as i32 + 1)), ..Self::new(k) }
    }

    pub fn orthonormal_bases(&self) -> bool {
        self.orthonormal.unwrap_or(self.k >= 2)
    }

    pub fn operator_quad_degree(&self) -> usize {
        2 * self.k + 3
    }

    pub fn rhs_quad_degree(&self) -> usize {
        self.rhs_quad_degree.unwrap_or(2 * self.k + 5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 6 {
            return Err(Error::InvalidParameter { name: "k", reason: format!("{} exceeds the supported maximum 6", self.k) });
        }
        for (name, v) in [("stab_scale_stokes", self.stab_scale_stokes), ("stab_scale_darcy", self.stab_scale_darcy)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("{v} must be positive") });
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter { name: "epsilon", reason: format!("{} must lie in (0, 1)", self.epsilon) });
        }
        if let Some(d) = self.rhs_quad_degree {
            if d < 2 * self.k {
                return Err(Error::InvalidParameter { name: "rhs_quad_degree", reason: format!("{d} is below 2k") });
            }
        }
        Ok(())
    }
}

/// Builds the context and operators of one element.
pub fn element_operators(
    mesh: &PolygonalMesh,
    element: usize,
    coeffs: &CoefficientField,
    cfg: &DiscretisationConfig,
) -> Result<(ElementContext, LocalOperatorSet)> {
    let ctx = ElementContext::new(mesh, element, cfg)?;
    let ops = build_local_operators(
        &ctx,
        coeffs.mu[element],
        coeffs.nu[element],
        coeffs.friction[element],
        mesh.lambda(element),
        cfg,
    )?;
    Ok((ctx, ops))
}
