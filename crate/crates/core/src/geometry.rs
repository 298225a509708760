//! Cross ratios and the line/circle localization test.
//!
//! A unitary transform forces `Γ ∪ Λ` onto a single circle or straight line.
//! [`localize`] fits the circle or line through three well-separated seed
//! points and measures how far every other point lies from it;
//! [`cross_ratio_square`] gives the pointwise version of the same statement,
//! since four points are concyclic or collinear exactly when their cross
//! ratio is real.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::sequences::{diameter, WeightedNodeSet};

/// Seeds with `area / |p1 − p0|² ` below this are treated as collinear.
pub const COLLINEAR_REL: f64 = 1e-10;
/// Default localization tolerance per unit of data diameter.
pub const LOCALIZE_TOL_REL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Locus {
    /// `point` is the foot of the perpendicular from the origin; `direction`
    /// has unit modulus and is normalized to `Re > 0` (or `+i` for vertical
    /// lines).
    Line {
        point: Complex64,
        direction: Complex64,
    },
    Circle {
        center: Complex64,
        radius: f64,
    },
    Indeterminate {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocusClassification {
    #[serde(flatten)]
    pub kind: Locus,
    /// Largest distance from a point to the fitted line, or largest
    /// `| |z − center| − radius |` for the fitted circle.
    pub max_deviation: f64,
}

impl LocusClassification {
    pub fn is_indeterminate(&self) -> bool {
        matches!(self.kind, Locus::Indeterminate { .. })
    }
}

/// `((λ_j − γ_m)(λ_l − γ_n) / ((λ_j − γ_n)(λ_l − γ_m)))²`.
///
/// Coincident inputs are reported by their argument positions `0..4`.
pub fn cross_ratio_square(
    lambda_j: Complex64,
    lambda_l: Complex64,
    gamma_n: Complex64,
    gamma_m: Complex64,
) -> Result<Complex64> {
    let p = [lambda_j, lambda_l, gamma_n, gamma_m];
    for a in 0..4 {
        for b in a + 1..4 {
            if p[a] == p[b] {
                return Err(Error::DegenerateQuadruple(a, b));
            }
        }
    }
    let r =
        (lambda_j - gamma_m) * (lambda_l - gamma_n) / ((lambda_j - gamma_n) * (lambda_l - gamma_m));
    Ok(r * r)
}

/// The quadruple with the largest `|Im cross_ratio_square|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossRatioDefect {
    pub imag: f64,
    /// `(j, l, n, m)`: two indices into `Λ`, then two into `Γ`.
    pub quadruple: (usize, usize, usize, usize),
}

/// Searches quadruples `(λ_j, λ_l, γ_n, γ_m)` for the largest imaginary part
/// of the squared cross ratio. With `pinned = Some(j)` only quadruples using
/// `λ_j` are scanned. Quadruples with coincident points are skipped.
pub fn cross_ratio_defect(
    lambdas: &[Complex64],
    gammas: &[Complex64],
    pinned: Option<usize>,
) -> Option<CrossRatioDefect> {
    let mut best: Option<CrossRatioDefect> = None;
    let js: Vec<usize> = match pinned {
        Some(j) => vec![j],
        None => (0..lambdas.len()).collect(),
    };
    for &j in &js {
        for l in 0..lambdas.len() {
            if l == j {
                continue;
            }
            for n in 0..gammas.len() {
                for m in n + 1..gammas.len() {
                    let Ok(cr) = cross_ratio_square(lambdas[j], lambdas[l], gammas[n], gammas[m])
                    else {
                        continue;
                    };
                    let imag = cr.im.abs();
                    if imag.is_finite() && best.is_none_or(|b| imag > b.imag) {
                        best = Some(CrossRatioDefect {
                            imag,
                            quadruple: (j, l, n, m),
                        });
                    }
                }
            }
        }
    }
    best
}

fn lex_less(a: Complex64, b: Complex64) -> bool {
    a.re < b.re || (a.re == b.re && a.im < b.im)
}

/// Twice the signed triangle area `(p1 − p0) × (p2 − p0)`.
fn cross(p0: Complex64, p1: Complex64, p2: Complex64) -> f64 {
    ((p1 - p0).conj() * (p2 - p0)).im
}

/// Classifies `points` as lying on one line or one circle within `tol`.
///
/// The seeds do not depend on input order: `p0` is the lexicographically
/// smallest point, `p1` the point farthest from `p0`, and `p2` the point
/// spanning the largest triangle with them. Ties keep the earlier candidate
/// under the same lexicographic order.
pub fn localize(points: &[Complex64], tol: f64) -> Result<LocusClassification> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|p| !p.re.is_finite() || !p.im.is_finite())
    {
        return Err(Error::NonFinite("points"));
    }
    let pick = |score: &dyn Fn(Complex64) -> f64| -> Complex64 {
        let mut best = points[0];
        let mut best_score = score(best);
        for &p in &points[1..] {
            let s = score(p);
            if s > best_score || (s == best_score && lex_less(p, best)) {
                best = p;
                best_score = s;
            }
        }
        best
    };
    let p0 = points
        .iter()
        .copied()
        .fold(points[0], |a, p| if lex_less(p, a) { p } else { a });
    let p1 = pick(&|p| (p - p0).norm());
    let span = (p1 - p0).norm();
    if span == 0.0 {
        return Err(Error::DegenerateQuadruple(0, 1));
    }
    let p2 = pick(&|p| cross(p0, p1, p).abs());
    let area = 0.5 * cross(p0, p1, p2).abs();

    let (locus, deviation): (Locus, Box<dyn Fn(Complex64) -> f64>) =
        if area / (span * span) < COLLINEAR_REL {
            let d = (p1 - p0) / span;
            let d = if d.re > 0.0 || (d.re == 0.0 && d.im > 0.0) {
                d
            } else {
                -d
            };
            // Foot of the perpendicular from the origin.
            let foot = p0 - d * (p0 * d.conj()).re;
            let dev = move |p: Complex64| ((p - p0) * d.conj()).im.abs();
            (
                Locus::Line {
                    point: foot,
                    direction: d,
                },
                Box::new(dev),
            )
        } else {
            let a = p1 - p0;
            let b = p2 - p0;
            let z = (b * a.norm_sqr() - a * b.norm_sqr())
                / Complex64::new(0.0, 2.0 * (a.conj() * b).im);
            let center = p0 + z;
            let radius = z.norm();
            let dev = move |p: Complex64| ((p - center).norm() - radius).abs();
            (Locus::Circle { center, radius }, Box::new(dev))
        };

    let mut max_deviation = 0.0_f64;
    let mut worst = 0;
    for (k, &p) in points.iter().enumerate() {
        let d = deviation(p);
        if d > max_deviation {
            max_deviation = d;
            worst = k;
        }
    }
    let kind = if max_deviation > tol {
        let shape = match locus {
            Locus::Line { .. } => "line",
            _ => "circle",
        };
        Locus::Indeterminate {
            reason: format!(
                "point {worst} lies {max_deviation:e} from the {shape} through the seed points (tol {tol:e})"
            ),
        }
    } else {
        locus
    };
    Ok(LocusClassification {
        kind,
        max_deviation,
    })
}

/// Runs [`localize`] over `Γ ∪ Λ` with tolerance `1e-9 ×` the diameter of
/// the combined set.
pub fn certify_localization(nodes: &WeightedNodeSet, ls: &LevelSet) -> Result<LocusClassification> {
    let points = union(nodes, ls);
    let tol = LOCALIZE_TOL_REL * diameter(&points);
    localize(&points, tol)
}

pub fn certify_localization_with(
    nodes: &WeightedNodeSet,
    ls: &LevelSet,
    tol: f64,
) -> Result<LocusClassification> {
    localize(&union(nodes, ls), tol)
}

fn union(nodes: &WeightedNodeSet, ls: &LevelSet) -> Vec<Complex64> {
    nodes.gamma().iter().chain(ls.lambdas()).copied().collect()
}
