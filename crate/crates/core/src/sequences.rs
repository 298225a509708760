//! Weighted node sets `(Γ, v)`: validation, admissibility and kernel weights.
//!
//! A node set carries its geometry tag. Line nodes are stored with an exact
//! zero imaginary part and circle nodes are projected onto the unit circle
//! after validation, so every downstream routine can rely on the tag.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::pairwise;

/// Relative distinctness tolerance, scaled by `max(1, max |γ_n|)`.
pub const DEFAULT_DEDUP_REL: f64 = 1e-12;
/// Allowed `| |γ_n| − 1 |` for circle nodes.
pub const CIRCLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Line,
    Circle,
    General,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Line => "line",
            Geometry::Circle => "circle",
            Geometry::General => "general",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Distinct nodes `γ_n` with strictly positive weights `v_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedNodeSet {
    gamma: Vec<Complex64>,
    v: Vec<f64>,
    geometry: Geometry,
    dedup_tol: f64,
}

impl WeightedNodeSet {
    /// Validates and stores a node set with the default distinctness tolerance.
    pub fn new(geometry: Geometry, gamma: Vec<Complex64>, v: Vec<f64>) -> Result<Self> {
        Self::with_dedup_rel(geometry, gamma, v, DEFAULT_DEDUP_REL)
    }

    pub fn with_dedup_rel(
        geometry: Geometry,
        mut gamma: Vec<Complex64>,
        v: Vec<f64>,
        dedup_rel: f64,
    ) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Empty);
        }
        if v.len() != gamma.len() {
            return Err(Error::LengthMismatch {
                what: "v",
                got: v.len(),
                expected: gamma.len(),
            });
        }
        if !(dedup_rel > 0.0) {
            return Err(Error::Input("dedup tolerance must be positive".into()));
        }
        if gamma.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::NonFinite("gamma"));
        }
        for (index, &value) in v.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("v"));
            }
            if value <= 0.0 {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }

        let scale = gamma.iter().map(|g| g.norm()).fold(1.0_f64, f64::max);
        let dedup_tol = dedup_rel * scale;

        match geometry {
            Geometry::Line => {
                for (index, g) in gamma.iter_mut().enumerate() {
                    if g.im.abs() > dedup_tol {
                        return Err(Error::GeometryViolation {
                            index,
                            point: format!("{g}"),
                            geometry: "line",
                        });
                    }
                    g.im = 0.0;
                }
            }
            Geometry::Circle => {
                for (index, g) in gamma.iter_mut().enumerate() {
                    let r = g.norm();
                    if (r - 1.0).abs() > CIRCLE_TOL {
                        return Err(Error::GeometryViolation {
                            index,
                            point: format!("{g}"),
                            geometry: "circle",
                        });
                    }
                    if (r - 1.0).abs() > 4.0 * f64::EPSILON {
                        *g /= r;
                    }
                }
            }
            Geometry::General => {}
        }

        let set = WeightedNodeSet {
            gamma,
            v,
            geometry,
            dedup_tol,
        };
        set.check_distinct()?;
        Ok(set)
    }

    /// Real nodes on the line.
    pub fn line(points: &[f64], v: Vec<f64>) -> Result<Self> {
        let gamma = points.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(Geometry::Line, gamma, v)
    }

    /// Circle nodes `e^{iθ_n}` given by their angles.
    pub fn circle_from_angles(angles: &[f64], v: Vec<f64>) -> Result<Self> {
        let gamma = angles
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        Self::new(Geometry::Circle, gamma, v)
    }

    fn check_distinct(&self) -> Result<()> {
        let n = self.gamma.len();
        let tol = self.dedup_tol;
        let dup = |first: usize, second: usize| {
            let distance = (self.gamma[first] - self.gamma[second]).norm();
            if distance <= tol {
                Err(Error::DuplicateNode {
                    first: first.min(second),
                    second: first.max(second),
                    distance,
                    tol,
                })
            } else {
                Ok(())
            }
        };
        match self.geometry {
            Geometry::Line => {
                let order = self.sorted_order();
                for w in order.windows(2) {
                    dup(w[0], w[1])?;
                }
            }
            Geometry::Circle => {
                let order = self.sorted_order();
                for w in order.windows(2) {
                    dup(w[0], w[1])?;
                }
                if n > 1 {
                    dup(order[n - 1], order[0])?;
                }
            }
            Geometry::General => {
                for i in 0..n {
                    for j in i + 1..n {
                        dup(i, j)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Absolute exclusion radius around every node.
    pub fn dedup_tol(&self) -> f64 {
        self.dedup_tol
    }

    /// Largest pairwise distance between nodes.
    pub fn diameter(&self) -> f64 {
        diameter(&self.gamma)
    }

    /// Node indices in increasing order of real part (line) or angle in
    /// `(−π, π]` (circle). General sets keep input order.
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        match self.geometry {
            Geometry::Line => order.sort_by(|&a, &b| self.gamma[a].re.total_cmp(&self.gamma[b].re)),
            Geometry::Circle => {
                order.sort_by(|&a, &b| self.gamma[a].arg().total_cmp(&self.gamma[b].arg()))
            }
            Geometry::General => {}
        }
        order
    }

    /// Node angles `arg γ_n ∈ (−π, π]`, in node order.
    pub fn angles(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g.arg()).collect()
    }

    /// `Σ v_n / (1 + |γ_n|²)`.
    pub fn admissibility_sum(&self) -> f64 {
        pairwise(self.len(), |n| self.v[n] / (1.0 + self.gamma[n].norm_sqr()))
    }

    /// Σ v_n.
    pub fn total_weight(&self) -> f64 {
        pairwise(self.len(), |n| self.v[n])
    }

    /// Errors with [`Error::PointOnGamma`] if `z` lies inside the exclusion
    /// zone of some node.
    pub fn check_off_nodes(&self, z: Complex64) -> Result<()> {
        for (index, g) in self.gamma.iter().enumerate() {
            let distance = (z - g).norm();
            if distance <= self.dedup_tol {
                return Err(Error::PointOnGamma { index, distance });
            }
        }
        Ok(())
    }

    /// `Σ v_n / |z − γ_n|²`, finite exactly on the star set.
    pub fn star_value(&self, z: Complex64) -> Result<f64> {
        self.check_off_nodes(z)?;
        Ok(pairwise(self.len(), |n| {
            self.v[n] / (z - self.gamma[n]).norm_sqr()
        }))
    }

    /// `(Σ v_n / |λ − γ_n|²)⁻¹`, the squared inverse norm of the kernel at λ.
    pub fn kernel_weight(&self, lambda: Complex64) -> Result<f64> {
        Ok(1.0 / self.star_value(lambda)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: NodeSetJson = serde_json::from_str(text)?;
        raw.into_node_set()
    }

    pub fn to_json(&self) -> NodeSetJson {
        NodeSetJson {
            geometry: self.geometry,
            gamma: self
                .gamma
                .iter()
                .map(|g| PointJson::Pair([g.re, g.im]))
                .collect(),
            v: self.v.clone(),
        }
    }
}

pub(crate) fn diameter(points: &[Complex64]) -> f64 {
    let mut d = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Wraps an angle difference into `(−π, π]`.
pub(crate) fn wrap_angle(t: f64) -> f64 {
    let mut r = t % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A point in the JSON schema: `[re, im]`, or a bare real.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PointJson {
    Pair([f64; 2]),
    Real(f64),
}

impl PointJson {
    pub fn to_complex(&self) -> Complex64 {
        match *self {
            PointJson::Pair([re, im]) => Complex64::new(re, im),
            PointJson::Real(x) => Complex64::new(x, 0.0),
        }
    }
}

/// `{"geometry": "line" | "circle" | "general", "gamma": [...], "v": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeSetJson {
    pub geometry: Geometry,
    pub gamma: Vec<PointJson>,
    pub v: Vec<f64>,
}

impl NodeSetJson {
    pub fn into_node_set(self) -> Result<WeightedNodeSet> {
        self.into_node_set_with(DEFAULT_DEDUP_REL)
    }

    pub fn into_node_set_with(self, dedup_rel: f64) -> Result<WeightedNodeSet> {
        if self.geometry != Geometry::Line {
            if let Some(i) = self
                .gamma
                .iter()
                .position(|p| matches!(p, PointJson::Real(_)))
            {
                return Err(Error::Input(format!(
                    "gamma[{i}]: bare reals are only accepted for line geometry"
                )));
            }
        }
        let gamma = self.gamma.iter().map(PointJson::to_complex).collect();
        WeightedNodeSet::with_dedup_rel(self.geometry, gamma, self.v, dedup_rel)
    }
}
