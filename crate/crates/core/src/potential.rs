//! The Herglotz potential `φ` attached to a weighted node set.
//!
//! Line:   `φ(z) = Σ v_n (1/(γ_n − z) − γ_n/(1 + γ_n²))`, Herglotz in the
//! upper half-plane.
//!
//! Circle: `φ(z) = (i/2) Σ v_n (γ_n + z)/(γ_n − z)`, Herglotz in the unit
//! disk. On the circle, with `z = e^{iθ}`, this equals
//! `−½ Σ v_n cot((θ − θ_n)/2)` and is real.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::{Geometry, WeightedNodeSet};
use crate::sum::pairwise;

/// Tolerance on `| |z| − 1 |` for the tangential derivative.
pub const ON_CIRCLE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PotentialVariant {
    LinePotential,
    CirclePotential,
}

#[derive(Clone, Debug)]
pub struct PotentialContext {
    nodes: WeightedNodeSet,
    variant: PotentialVariant,
    // −Σ v_n γ_n/(1 + γ_n²); zero for the circle variant.
    offset: f64,
}

impl PotentialContext {
    /// Picks the variant matching the node geometry.
    pub fn new(nodes: WeightedNodeSet) -> Result<Self> {
        let variant = match nodes.geometry() {
            Geometry::Line => PotentialVariant::LinePotential,
            Geometry::Circle => PotentialVariant::CirclePotential,
            Geometry::General => {
                return Err(Error::GeometryMismatch {
                    expected: "line or circle",
                })
            }
        };
        Self::with_variant(nodes, variant)
    }

    pub fn with_variant(nodes: WeightedNodeSet, variant: PotentialVariant) -> Result<Self> {
        let offset = match (variant, nodes.geometry()) {
            (PotentialVariant::LinePotential, Geometry::Line) => {
                let g = nodes.gamma();
                let v = nodes.weights();
                -pairwise(nodes.len(), |n| v[n] * g[n].re / (1.0 + g[n].re * g[n].re))
            }
            (PotentialVariant::CirclePotential, Geometry::Circle) => 0.0,
            (PotentialVariant::LinePotential, _) => {
                return Err(Error::GeometryMismatch { expected: "line" })
            }
            (PotentialVariant::CirclePotential, _) => {
                return Err(Error::GeometryMismatch { expected: "circle" })
            }
        };
        Ok(PotentialContext {
            nodes,
            variant,
            offset,
        })
    }

    pub fn nodes(&self) -> &WeightedNodeSet {
        &self.nodes
    }

    pub fn variant(&self) -> PotentialVariant {
        self.variant
    }

    pub fn is_line(&self) -> bool {
        self.variant == PotentialVariant::LinePotential
    }

    /// The constant `−Σ v_n γ_n/(1 + γ_n²)` of the line potential, which is
    /// also `lim φ(x)` as `|x| → ∞`.
    pub(crate) fn line_offset(&self) -> f64 {
        self.offset
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        self.nodes.check_off_nodes(z)?;
        let g = self.nodes.gamma();
        let v = self.nodes.weights();
        let n = self.nodes.len();
        Ok(match self.variant {
            PotentialVariant::LinePotential => pairwise(n, |k| v[k] / (g[k] - z)) + self.offset,
            PotentialVariant::CirclePotential => {
                let s: Complex64 = pairwise(n, |k| v[k] * (g[k] + z) / (g[k] - z));
                Complex64::i() * s * 0.5
            }
        })
    }

    /// Line: the complex derivative `Σ v_n/(γ_n − z)²`.
    /// Circle: the tangential derivative `dφ/dθ = Σ v_n/|γ_n − z|²` at
    /// `z = e^{iθ}`, returned with zero imaginary part.
    pub fn phi_derivative(&self, z: Complex64) -> Result<Complex64> {
        self.nodes.check_off_nodes(z)?;
        let g = self.nodes.gamma();
        let v = self.nodes.weights();
        let n = self.nodes.len();
        match self.variant {
            PotentialVariant::LinePotential => {
                Ok(pairwise(n, |k| v[k] / ((g[k] - z) * (g[k] - z))))
            }
            PotentialVariant::CirclePotential => {
                if (z.norm() - 1.0).abs() > ON_CIRCLE_TOL {
                    return Err(Error::NotOnCircle(format!("{z}")));
                }
                let d: f64 = pairwise(n, |k| v[k] / (g[k] - z).norm_sqr());
                Ok(Complex64::new(d, 0.0))
            }
        }
    }

    /// `Im φ(z)` on the Herglotz domain (upper half-plane or open disk).
    pub fn herglotz_check(&self, z: Complex64) -> Result<f64> {
        let inside = match self.variant {
            PotentialVariant::LinePotential => z.im > 0.0,
            PotentialVariant::CirclePotential => z.norm() < 1.0,
        };
        if !inside {
            return Err(Error::OutOfDomain(format!("{z}")));
        }
        Ok(self.phi(z)?.im)
    }
}
