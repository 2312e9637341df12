//! Element-wise viscosity, inverse permeability and friction coefficient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;

/// Default threshold used to regularise the friction coefficient.
pub const DEFAULT_EPSILON: f64 = 1e-14;

/// Friction coefficient Cf_T = nu_T h_T^2 / mu_T and its thresholded value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Friction {
    /// Raw value; `+inf` when mu_T = 0.
    pub cf: f64,
    /// Thresholded value, always in [eps, 1/eps].
    pub cf_hat: f64,
}

impl Friction {
    /// Cf < 1; a value of exactly 1 is Darcy-dominated.
    pub fn stokes_dominated(&self) -> bool {
        self.cf_hat < 1.0
    }

    /// min(1, Cf^-1), weight of the Stokes stabilisation.
    pub fn stokes_cutoff(&self) -> f64 {
        (1.0 / self.cf_hat).min(1.0)
    }

    /// min(1, Cf), weight of the Darcy stabilisation.
    pub fn darcy_cutoff(&self) -> f64 {
        self.cf_hat.min(1.0)
    }
}

pub fn friction_coefficient(mu: f64, nu: f64, h: f64, epsilon: f64) -> Result<Friction> {
    if !(mu >= 0.0 && nu >= 0.0 && mu.is_finite() && nu.is_finite()) {
        return Err(Error::InvalidCoefficients(format!("mu = {mu}, nu = {nu} must be finite and non-negative")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidCoefficients(format!("element diameter {h} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidCoefficients(format!("threshold {epsilon} must lie in (0, 1)")));
    }
    if mu <= epsilon && nu == 0.0 {
        return Err(Error::InvalidCoefficients("mu and nu both vanish".into()));
    }
    let cf = if mu == 0.0 { f64::INFINITY } else { nu * h * h / mu };
    let cf_hat = if mu > epsilon { cf.max(epsilon) } else { 1.0 / epsilon };
    Ok(Friction { cf, cf_hat })
}

/// Viscosity and inverse permeability of one subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub mu: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub friction: Vec<Friction>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeCensus {
    pub stokes_dominated: usize,
    pub darcy_dominated: usize,
}

impl std::fmt::Display for RegimeCensus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} Stokes-dominated, {} Darcy-dominated", self.stokes_dominated, self.darcy_dominated)
    }
}

impl CoefficientField {
    pub fn uniform(mesh: &PolygonalMesh, mu: f64, nu: f64, epsilon: f64) -> Result<Self> {
        let media = mesh.elements.iter().map(|e| (e.subdomain, Medium { mu, nu })).collect();
        Self::from_subdomains(mesh, &media, epsilon)
    }

    /// Piecewise-constant coefficients keyed by element subdomain label.
    pub fn from_subdomains(mesh: &PolygonalMesh, media: &BTreeMap<u32, Medium>, epsilon: f64) -> Result<Self> {
        let n = mesh.n_elements();
        let mut field = Self {
            mu: Vec::with_capacity(n),
            nu: Vec::with_capacity(n),
            friction: Vec::with_capacity(n),
            epsilon,
        };
        for e in &mesh.elements {
            let m = media
                .get(&e.subdomain)
                .ok_or_else(|| Error::Config(format!("no coefficients for subdomain {} (element {})", e.subdomain, e.id)))?;
            field.mu.push(m.mu);
            field.nu.push(m.nu);
            field.friction.push(
                friction_coefficient(m.mu, m.nu, e.diameter, epsilon)
                    .map_err(|err| Error::InvalidCoefficients(format!("element {}: {err}", e.id)))?,
            );
        }
        Ok(field)
    }

    pub fn census(&self) -> RegimeCensus {
        let stokes = self.friction.iter().filter(|f| f.stokes_dominated()).count();
        RegimeCensus { stokes_dominated: stokes, darcy_dominated: self.friction.len() - stokes }
    }

    /// (min mu, max mu, max nu).
    pub fn bounds(&self) -> (f64, f64, f64) {
        let min_mu = self.mu.iter().copied().fold(f64::INFINITY, f64::min);
        let max_mu = self.mu.iter().copied().fold(0.0, f64::max);
        let max_nu = self.nu.iter().copied().fold(0.0, f64::max);
        (min_mu, max_mu, max_nu)
    }

    /// True when mu vanishes on every element.
    pub fn is_pure_darcy(&self) -> bool {
        self.mu.iter().all(|&m| m == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, Rectangle};

    #[test]
    fn balanced_element_is_stokes_dominated() {
        let f = friction_coefficient(1.0, 1.0, 0.5, DEFAULT_EPSILON).unwrap();
        assert_eq!(f.cf, 0.25);
        assert!(f.stokes_dominated());
    }

    #[test]
    fn vanishing_viscosity_is_thresholded() {
        let f = friction_coefficient(0.0, 1.0, 0.5, DEFAULT_EPSILON).unwrap();
        assert_eq!(f.cf_hat, 1e14);
        assert!(f.cf.is_infinite());
        assert!(!f.stokes_dominated());
        assert_eq!(f.stokes_cutoff(), 1e-14);
    }

    #[test]
    fn vanishing_permeability_is_thresholded() {
        let f = friction_coefficient(1.0, 0.0, 0.5, DEFAULT_EPSILON).unwrap();
        assert_eq!(f.cf_hat, 1e-14);
        assert!(f.stokes_dominated());
        assert_eq!(f.darcy_cutoff(), 1e-14);
    }

    #[test]
    fn unit_friction_is_darcy_dominated() {
        let f = friction_coefficient(1.0, 4.0, 0.5, DEFAULT_EPSILON).unwrap();
        assert_eq!(f.cf_hat, 1.0);
        assert!(!f.stokes_dominated());
    }

    #[test]
    fn degenerate_coefficients_rejected() {
        assert!(friction_coefficient(0.0, 0.0, 0.5, DEFAULT_EPSILON).is_err());
        assert!(friction_coefficient(1e-15, 0.0, 0.5, DEFAULT_EPSILON).is_err());
        assert!(friction_coefficient(-1.0, 1.0, 0.5, DEFAULT_EPSILON).is_err());
        assert!(friction_coefficient(1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn truth_values_agree_with_raw_coefficient() {
        for &(mu, nu, h) in &[(1.0, 0.0, 0.1), (1.0, 3.0, 0.5), (0.0, 2.0, 0.1), (2.0, 8.0, 0.5), (1e-3, 1.0, 0.01)] {
            let f = friction_coefficient(mu, nu, h, DEFAULT_EPSILON).unwrap();
            assert_eq!(f.stokes_dominated(), f.cf < 1.0);
        }
    }

    #[test]
    fn missing_subdomain_is_config_error() {
        let mut m = generate_cartesian(2, Rectangle::unit()).unwrap();
        m.relabel_subdomains(|c| u32::from(c.x > 0.5));
        let media = BTreeMap::from([(0, Medium { mu: 1.0, nu: 0.0 })]);
        assert!(matches!(CoefficientField::from_subdomains(&m, &media, DEFAULT_EPSILON), Err(Error::Config(_))));
        let media = BTreeMap::from([(0, Medium { mu: 1.0, nu: 0.0 }), (1, Medium { mu: 0.0, nu: 1.0 })]);
        let c = CoefficientField::from_subdomains(&m, &media, DEFAULT_EPSILON).unwrap();
        assert_eq!(c.census(), RegimeCensus { stokes_dominated: 2, darcy_dominated: 2 });
    }
}
