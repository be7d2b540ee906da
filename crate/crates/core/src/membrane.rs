//! Clamped square membrane: small-deflection plate mechanics and the
//! parallel-plate capacitance between the top electrode and the polysilicon
//! bottom electrode.
//!
//! Sign convention: positive pressure (contact minus backpressure) pushes the
//! plate toward the bottom electrode and increases capacitance.

use crate::error::{Error, Result};

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Center deflection coefficient of a clamped square plate under uniform
/// load: `w0 = ALPHA * p * a^4 / D`.
pub const CLAMPED_SQUARE_ALPHA: f64 = 0.00126;

/// Fraction of the electrode gap at which the small-deflection model is
/// considered invalid.
pub const CONTACT_FRACTION: f64 = 0.9;

/// Default tensor-product midpoint grid per axis.
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneGeometry {
    /// Plate side length `a` (m).
    pub side_length: f64,
    /// Plate thickness (m).
    pub thickness: f64,
    /// Undeflected electrode gap (m).
    pub gap0: f64,
    /// Electrode area as a fraction of plate area, centered square.
    pub electrode_coverage: f64,
}

impl Default for MembraneGeometry {
    fn default() -> Self {
        Self {
            side_length: 100e-6,
            thickness: 3e-6,
            gap0: 600e-9,
            electrode_coverage: 1.0,
        }
    }
}

impl MembraneGeometry {
    pub fn validate(&self) -> Result<()> {
        positive("side_length", self.side_length)?;
        positive("thickness", self.thickness)?;
        positive("gap0", self.gap0)?;
        if !(self.electrode_coverage > 0.0 && self.electrode_coverage <= 1.0) {
            return Err(Error::param("electrode_coverage", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn electrode_area(&self) -> f64 {
        self.electrode_coverage * self.side_length * self.side_length
    }

    /// Capacitance of the undeflected plate, `eps0 * A / gap0`.
    pub fn rest_capacitance(&self) -> f64 {
        EPSILON_0 * self.electrode_area() / self.gap0
    }
}

/// Effective elastic constants of the oxide/nitride/aluminium stack.
/// The defaults are uncalibrated placeholders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            youngs_modulus: 70e9,
            poisson_ratio: 0.25,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        positive("youngs_modulus", self.youngs_modulus)?;
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::param("poisson_ratio", "must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// Deflected shape of the plate: a center deflection scaled by a fixed
/// clamped-edge shape function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionProfile {
    /// Center deflection (m), positive toward the bottom electrode.
    pub center_deflection: f64,
}

impl DeflectionProfile {
    pub const FLAT: DeflectionProfile = DeflectionProfile {
        center_deflection: 0.0,
    };

    /// Normalized shape `w(u, v) / w_center` on the unit square.
    ///
    /// Cosine-product approximation of the clamped plate: zero value and zero
    /// normal slope on every edge, unity at the center.
    pub fn shape(u: f64, v: f64) -> f64 {
        use std::f64::consts::TAU;
        0.25 * (1.0 - (TAU * u).cos()) * (1.0 - (TAU * v).cos())
    }

    /// Deflection (m) at normalized coordinates `(u, v)`.
    pub fn at(&self, u: f64, v: f64) -> f64 {
        self.center_deflection * Self::shape(u, v)
    }
}

/// `D = E t^3 / (12 (1 - nu^2))` in N·m.
pub fn flexural_rigidity(geometry: &MembraneGeometry, material: &MaterialParams) -> f64 {
    let t = geometry.thickness;
    let nu = material.poisson_ratio;
    material.youngs_modulus * t * t * t / (12.0 * (1.0 - nu * nu))
}

/// Linear small-deflection response to a uniform net pressure (Pa).
pub fn deflect(
    geometry: &MembraneGeometry,
    material: &MaterialParams,
    net_pressure: f64,
) -> Result<DeflectionProfile> {
    let d = flexural_rigidity(geometry, material);
    let a2 = geometry.side_length * geometry.side_length;
    let w0 = CLAMPED_SQUARE_ALPHA * net_pressure * a2 * a2 / d;
    let limit = CONTACT_FRACTION * geometry.gap0;
    if !(w0.abs() < limit) {
        return Err(Error::MembraneContact {
            deflection: w0,
            limit,
        });
    }
    Ok(DeflectionProfile {
        center_deflection: w0,
    })
}

/// Capacitance (F) of the deflected plate on the default quadrature grid.
pub fn capacitance(geometry: &MembraneGeometry, profile: &DeflectionProfile) -> Result<f64> {
    capacitance_with_grid(geometry, profile, DEFAULT_QUADRATURE_POINTS)
}

/// `C = eps0 * ∬ dA / (gap0 - w)` over the electrode, midpoint rule with
/// `points` × `points` cells.
pub fn capacitance_with_grid(
    geometry: &MembraneGeometry,
    profile: &DeflectionProfile,
    points: usize,
) -> Result<f64> {
    if points == 0 {
        return Err(Error::param("points", "quadrature grid must be non-empty"));
    }
    // the peak gap change is at the centre, which a midpoint grid never samples
    if profile.center_deflection >= geometry.gap0 {
        return Err(Error::MembraneContact {
            deflection: profile.center_deflection,
            limit: geometry.gap0,
        });
    }
    let side = geometry.electrode_coverage.sqrt();
    let lo = 0.5 * (1.0 - side);
    let h = side / points as f64;
    // Separable shape: precompute the 1-D factor once per axis.
    let factors: Vec<f64> = (0..points)
        .map(|i| {
            let u = lo + (i as f64 + 0.5) * h;
            1.0 - (std::f64::consts::TAU * u).cos()
        })
        .collect();
    let w_scale = 0.25 * profile.center_deflection;
    let mut sum = 0.0;
    for &fu in &factors {
        let mut row = 0.0;
        for &fv in &factors {
            let gap = geometry.gap0 - w_scale * fu * fv;
            if gap <= 0.0 {
                return Err(Error::MembraneContact {
                    deflection: profile.center_deflection,
                    limit: geometry.gap0,
                });
            }
            row += 1.0 / gap;
        }
        sum += row;
    }
    let cell_area = h * h * geometry.side_length * geometry.side_length;
    Ok(EPSILON_0 * sum * cell_area)
}

/// First-order sensitivity `dC/dw_center` at zero deflection:
/// `eps0 / gap0^2 * ∬ shape dA`, the shape integral taken in closed form.
pub fn linear_sensitivity(geometry: &MembraneGeometry) -> f64 {
    use std::f64::consts::PI;
    let s = geometry.electrode_coverage.sqrt();
    // ∫ (1 - cos 2πu) du over the centered electrode span [(1-s)/2, (1+s)/2]
    let axis = s + ((PI * (1.0 - s)).sin() - (PI * (1.0 + s)).sin()) / (2.0 * PI);
    let shape_integral = 0.25 * axis * axis * geometry.side_length * geometry.side_length;
    EPSILON_0 * shape_integral / (geometry.gap0 * geometry.gap0)
}

/// A sensing element: geometry, material and quadrature resolution bundled
/// for the pressure → capacitance chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membrane {
    pub geometry: MembraneGeometry,
    pub material: MaterialParams,
    pub quadrature_points: usize,
}

impl Default for Membrane {
    fn default() -> Self {
        Self {
            geometry: MembraneGeometry::default(),
            material: MaterialParams::default(),
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        }
    }
}

impl Membrane {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.material.validate()?;
        if self.quadrature_points == 0 {
            return Err(Error::param("quadrature_points", "must be >= 1"));
        }
        Ok(())
    }

    pub fn capacitance_at(&self, net_pressure: f64) -> Result<f64> {
        let profile = deflect(&self.geometry, &self.material, net_pressure)?;
        capacitance_with_grid(&self.geometry, &profile, self.quadrature_points)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be positive and finite"))
    }
}
