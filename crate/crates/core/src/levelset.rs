//! Level sets `Λ(α) = {λ : φ(λ) = α}` and the partial-fraction form of
//! `1/(α − φ)`.
//!
//! On the line `φ` increases from `−∞` to `+∞` across every gap between
//! consecutive nodes, and from `α*` to `+∞` (left of the hull) or from `−∞`
//! to `α*` (right of the hull), where `α* = lim_{|x|→∞} φ(x)`. So `Λ(α)` has
//! `N` points unless `α = α*`, where the outer root escapes to infinity and
//! `N − 1` remain. On the circle `φ(e^{iθ})` increases from `−∞` to `+∞` on
//! every arc, so there are always `N` points.
//!
//! Each root is found inside its bracket by bisection followed by
//! safeguarded Newton, and is stored relative to the nearer bracketing node
//! (`λ = γ_a + δ` on the line, `λ = γ_a e^{iδ}` on the circle). Differences
//! `λ − γ_n` are then formed from node differences plus `δ`, which keeps
//! them accurate to a few ulps even when `λ` sits very close to a node.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialContext;
use crate::sequences::{wrap_angle, Geometry, WeightedNodeSet};
use crate::sum::pairwise;

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Stop when `|φ(λ) − α| ≤ level_tol · (1 + |α|)`.
    pub level_tol: f64,
    /// `α` is exceptional when `|α − α*| ≤ exc_tol_rel · (1 + |α*|)`.
    pub exc_tol_rel: f64,
    pub max_iter: usize,
    /// Bisect until the bracket is this fraction of its initial width.
    pub bisect_frac: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            level_tol: 1e-12,
            exc_tol_rel: 1e-9,
            max_iter: 200,
            bisect_frac: 1e-3,
        }
    }
}

/// `λ = γ_node + offset` (line) or `λ = γ_node · e^{i·offset}` (circle).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Anchor {
    node: usize,
    offset: f64,
}

/// The points `λ_j` of a level set with their weights `w_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    alpha: f64,
    geometry: Geometry,
    node_count: usize,
    lambdas: Vec<Complex64>,
    weights: Vec<f64>,
    exceptional: bool,
    anchors: Vec<Option<Anchor>>,
}

impl LevelSet {
    /// A target set given explicitly. Weights default to
    /// [`WeightedNodeSet::kernel_weight`] at each point.
    pub fn from_points(
        nodes: &WeightedNodeSet,
        alpha: f64,
        lambdas: Vec<Complex64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        for (j, &l) in lambdas.iter().enumerate() {
            if !l.re.is_finite() || !l.im.is_finite() {
                return Err(Error::NonFinite("lambda"));
            }
            if let Err(Error::PointOnGamma { index, .. }) = nodes.check_off_nodes(l) {
                return Err(Error::Overlap {
                    lambda: j,
                    node: index,
                });
            }
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != lambdas.len() {
                    return Err(Error::LengthMismatch {
                        what: "weights",
                        got: w.len(),
                        expected: lambdas.len(),
                    });
                }
                if let Some(index) = w.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::NonPositiveWeight {
                        index,
                        value: w[index],
                    });
                }
                w
            }
            None => lambdas
                .iter()
                .map(|&l| nodes.kernel_weight(l))
                .collect::<Result<_>>()?,
        };
        Ok(LevelSet {
            alpha,
            geometry: nodes.geometry(),
            node_count: nodes.len(),
            anchors: vec![None; lambdas.len()],
            lambdas,
            weights,
            exceptional: false,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exceptional(&self) -> bool {
        self.exceptional
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    fn check_nodes(&self, nodes: &WeightedNodeSet) -> Result<()> {
        if nodes.len() != self.node_count {
            return Err(Error::ShapeMismatch {
                got: nodes.len(),
                expected: self.node_count,
            });
        }
        Ok(())
    }

    /// `λ_j − γ_n` for every node `n`.
    pub fn differences(&self, nodes: &WeightedNodeSet, j: usize) -> Result<Vec<Complex64>> {
        self.check_nodes(nodes)?;
        let g = nodes.gamma();
        Ok(match self.anchors[j] {
            None => g.iter().map(|&gn| self.lambdas[j] - gn).collect(),
            Some(Anchor { node, offset }) => match self.geometry {
                Geometry::Circle => {
                    let t = nodes.angles();
                    (0..nodes.len())
                        .map(|n| chord(t[node] - t[n] + offset, t[node] + offset + t[n]))
                        .collect()
                }
                _ => {
                    let a = g[node].re;
                    g.iter()
                        .map(|gn| Complex64::new((a - gn.re) + offset, 0.0))
                        .collect()
                }
            },
        })
    }

    /// `φ(λ_j) − α`, evaluated from the accurate differences.
    pub fn residual(&self, ctx: &PotentialContext, j: usize) -> Result<f64> {
        let nodes = ctx.nodes();
        let d = self.differences(nodes, j)?;
        let v = nodes.weights();
        let g = nodes.gamma();
        let phi = if ctx.is_line() {
            pairwise(d.len(), |n| -v[n] / d[n].re) + ctx.line_offset()
        } else {
            // (i/2) v (γ + λ)/(γ − λ) with γ − λ = −d and γ + λ = 2γ + d.
            pairwise(d.len(), |n| {
                (Complex64::i() * 0.5 * v[n] * (2.0 * g[n] + d[n]) / (-d[n])).re
            })
        };
        Ok(phi - self.alpha)
    }

    /// `φ′(λ_j)` on the line, `dφ/dθ(λ_j)` on the circle, from the accurate
    /// differences.
    pub fn potential_derivative(&self, nodes: &WeightedNodeSet, j: usize) -> Result<f64> {
        let d = self.differences(nodes, j)?;
        let v = nodes.weights();
        Ok(pairwise(d.len(), |n| v[n] / d[n].norm_sqr()))
    }

    /// A copy with `λ_j` replaced by `point`; its weight is recomputed and the
    /// set is no longer treated as a solved level set.
    pub fn with_point(&self, nodes: &WeightedNodeSet, j: usize, point: Complex64) -> Result<Self> {
        let mut lambdas = self.lambdas.clone();
        lambdas[j] = point;
        let mut weights = self.weights.clone();
        weights[j] = nodes.kernel_weight(point).map_err(|_| Error::Overlap {
            lambda: j,
            node: nearest(nodes, point),
        })?;
        let mut anchors = self.anchors.clone();
        anchors[j] = None;
        Ok(LevelSet {
            lambdas,
            weights,
            anchors,
            exceptional: false,
            ..self.clone()
        })
    }
}

fn nearest(nodes: &WeightedNodeSet, z: Complex64) -> usize {
    nodes
        .gamma()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `e^{iθ} − e^{it}` from `u = θ − t` and `s = θ + t`.
fn chord(u: f64, s: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * (0.5 * u).sin()) * Complex64::from_polar(1.0, 0.5 * s)
}

struct Eval {
    g: f64,
    dg: f64,
    mag: f64,
}

/// Root of an increasing function on `(lo, hi)`. The endpoints are never
/// evaluated, so they may be poles.
///
/// Once `|g| ≤ tol`, up to two more Newton steps polish the root toward the
/// rounding floor `4ε·Σ|terms|`.
fn find_root(
    eval: impl Fn(f64) -> Eval,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    opts: &SolverOptions,
) -> f64 {
    let at_floor = |e: &Eval| e.g.abs() <= 4.0 * EPS * e.mag;
    let width0 = hi - lo;
    let mut x = 0.5 * (lo + hi);
    let mut e = eval(x);
    let mut best = (e.g.abs(), x);
    let mut iters = 0;
    let mut polish = 0;
    loop {
        if at_floor(&e) {
            return x;
        }
        if e.g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        iters += 1;
        if hi - lo < opts.bisect_frac * width0 || iters >= opts.max_iter {
            break;
        }
        x = 0.5 * (lo + hi);
        e = eval(x);
        if e.g.abs() < best.0 {
            best = (e.g.abs(), x);
        }
    }
    while iters < opts.max_iter && polish < 2 {
        iters += 1;
        if e.g.abs() <= tol {
            polish += 1;
        }
        let mut next = x - e.g / e.dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || next <= lo || next >= hi {
            break;
        }
        x = next;
        e = eval(x);
        if e.g.abs() < best.0 {
            best = (e.g.abs(), x);
        }
        if at_floor(&e) {
            return x;
        }
        if e.g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    best.1
}

fn line_eval(x_diff: &[f64], v: &[f64], shift: f64, mag0: f64, delta: f64) -> Eval {
    // φ(γ_a + δ) − α = Σ −v_n/(d_n + δ) + shift, with d_n = γ_a − γ_n.
    let n = v.len();
    let g = pairwise(n, |k| -v[k] / (x_diff[k] + delta)) + shift;
    let dg = pairwise(n, |k| {
        let d = x_diff[k] + delta;
        v[k] / (d * d)
    });
    let mag = pairwise(n, |k| (v[k] / (x_diff[k] + delta)).abs()) + mag0;
    Eval { g, dg, mag }
}

fn circle_eval(t_diff: &[f64], v: &[f64], alpha: f64, delta: f64) -> Eval {
    // φ(e^{i(θ_a + δ)}) − α = −½ Σ v_n cot((e_n + δ)/2) − α, e_n = θ_a − θ_n.
    let n = v.len();
    let g = pairwise(n, |k| {
        let h = 0.5 * (t_diff[k] + delta);
        -0.5 * v[k] * h.cos() / h.sin()
    }) - alpha;
    let dg = pairwise(n, |k| {
        let s = (0.5 * (t_diff[k] + delta)).sin();
        0.25 * v[k] / (s * s)
    });
    let mag = pairwise(n, |k| {
        let h = 0.5 * (t_diff[k] + delta);
        (0.5 * v[k] * h.cos() / h.sin()).abs()
    }) + alpha.abs();
    Eval { g, dg, mag }
}

/// Solves `φ(λ) = α` with default options.
pub fn solve_level_set(ctx: &PotentialContext, alpha: f64) -> Result<LevelSet> {
    solve_level_set_with(ctx, alpha, &SolverOptions::default())
}

pub fn solve_level_set_with(
    ctx: &PotentialContext,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<LevelSet> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    let (anchors, exceptional) = if ctx.is_line() {
        solve_line(ctx, alpha, opts)
    } else {
        (solve_circle(ctx, alpha, opts), false)
    };
    let nodes = ctx.nodes();
    let g = nodes.gamma();
    let mut ls = LevelSet {
        alpha,
        geometry: nodes.geometry(),
        node_count: nodes.len(),
        lambdas: anchors
            .iter()
            .map(|a| match nodes.geometry() {
                Geometry::Circle => g[a.node] * Complex64::from_polar(1.0, a.offset),
                _ => Complex64::new(g[a.node].re + a.offset, 0.0),
            })
            .collect(),
        weights: Vec::new(),
        exceptional,
        anchors: anchors.into_iter().map(Some).collect(),
    };
    let v = nodes.weights();
    ls.weights = (0..ls.len())
        .map(|j| {
            let d = ls.differences(nodes, j)?;
            Ok(1.0 / pairwise(d.len(), |n| v[n] / d[n].norm_sqr()))
        })
        .collect::<Result<_>>()?;
    Ok(ls)
}

fn solve_line(ctx: &PotentialContext, alpha: f64, opts: &SolverOptions) -> (Vec<Anchor>, bool) {
    let nodes = ctx.nodes();
    let order = nodes.sorted_order();
    let x: Vec<f64> = nodes.gamma().iter().map(|g| g.re).collect();
    let v = nodes.weights();
    let n = nodes.len();
    let astar = ctx.line_offset();
    let shift = astar - alpha;
    let mag0 = astar.abs() + alpha.abs();
    let tol = opts.level_tol * (1.0 + alpha.abs());
    let exceptional = (alpha - astar).abs() <= opts.exc_tol_rel * (1.0 + astar.abs());

    let diffs = |a: usize| -> Vec<f64> { x.iter().map(|&xn| x[a] - xn).collect() };
    let root_from = |a: usize, lo: f64, hi: f64| -> Anchor {
        let d = diffs(a);
        let offset = find_root(|t| line_eval(&d, v, shift, mag0, t), lo, hi, tol, opts);
        Anchor { node: a, offset }
    };

    let lo_node = order[0];
    let hi_node = order[n - 1];
    let span = x[hi_node] - x[lo_node];
    let scale = span.max(1.0);

    let mut roots = Vec::with_capacity(n);

    if !exceptional && alpha > astar {
        // Left of the hull: φ climbs from α* to +∞.
        let d = diffs(lo_node);
        let (lo, hi) = expand(|t| line_eval(&d, v, shift, mag0, t).g, -scale, -1.0);
        roots.push(root_from(lo_node, lo, hi));
    }

    for w in order.windows(2) {
        let (left, right) = (w[0], w[1]);
        let gap = x[right] - x[left];
        let mid = line_eval(&diffs(left), v, shift, mag0, 0.5 * gap);
        if mid.g == 0.0 {
            roots.push(Anchor {
                node: left,
                offset: 0.5 * gap,
            });
        } else if mid.g > 0.0 {
            roots.push(root_from(left, 0.0, 0.75 * gap));
        } else {
            roots.push(root_from(right, -0.75 * gap, 0.0));
        }
    }

    if !exceptional && alpha < astar {
        // Right of the hull: φ climbs from −∞ to α*.
        let d = diffs(hi_node);
        let (lo, hi) = expand(|t| line_eval(&d, v, shift, mag0, t).g, scale, 1.0);
        roots.push(root_from(hi_node, lo, hi));
    }

    (roots, exceptional)
}

/// Brackets the sign change of an increasing `g` on a half-line starting at
/// the pole `0`. `start` is the first probe, `dir` the direction (±1).
fn expand(g: impl Fn(f64) -> f64, start: f64, dir: f64) -> (f64, f64) {
    let mut s = start.abs();
    let mut inner = 0.0;
    // Moving away from the pole the sign flips once: from + to − going left,
    // from − to + going right.
    let past = |val: f64| if dir < 0.0 { val < 0.0 } else { val > 0.0 };
    while !past(g(dir * s)) && s.is_finite() {
        inner = s;
        s *= 2.0;
    }
    // The root may sit exactly on the last probe that was not past it, so the
    // inner end is pulled halfway back toward the pole.
    let (a, b) = (dir * s, dir * 0.5 * inner);
    (a.min(b), a.max(b))
}

fn solve_circle(ctx: &PotentialContext, alpha: f64, opts: &SolverOptions) -> Vec<Anchor> {
    let nodes = ctx.nodes();
    let order = nodes.sorted_order();
    let t = nodes.angles();
    let v = nodes.weights();
    let n = nodes.len();
    let tol = opts.level_tol * (1.0 + alpha.abs());

    let diffs = |a: usize| -> Vec<f64> { t.iter().map(|&tn| t[a] - tn).collect() };

    (0..n)
        .map(|k| {
            let left = order[k];
            let right = order[(k + 1) % n];
            let len = if n == 1 {
                2.0 * std::f64::consts::PI
            } else {
                let l = wrap_angle(t[right] - t[left]);
                if l <= 0.0 {
                    l + 2.0 * std::f64::consts::PI
                } else {
                    l
                }
            };
            let dl = diffs(left);
            let mid = circle_eval(&dl, v, alpha, 0.5 * len);
            if mid.g == 0.0 {
                return Anchor {
                    node: left,
                    offset: 0.5 * len,
                };
            }
            let (node, d, lo, hi) = if mid.g > 0.0 {
                (left, dl, 0.0, 0.75 * len)
            } else {
                (right, diffs(right), -0.75 * len, 0.0)
            };
            let offset = find_root(|x| circle_eval(&d, v, alpha, x), lo, hi, tol, opts);
            Anchor { node, offset }
        })
        .collect()
}

/// `α* = lim_{|x|→∞} φ(x) = −Σ v_n γ_n/(1 + γ_n²)` on the line; `None` on
/// the circle, which has no exceptional value.
pub fn exceptional_alpha(ctx: &PotentialContext) -> Option<f64> {
    ctx.is_line().then(|| ctx.line_offset())
}

/// A point mass `w` at `λ` in the representing measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// `1/(α − φ(z)) = b + c z + Σ_j w_j (1/(λ_j − z) − λ_j/(1 + λ_j²))`.
///
/// The representing measure of a finite node set has no continuous part, so
/// only the constant, the linear term and the atoms appear. `c` is nonzero
/// only at the exceptional value, where it equals `1/Σ v_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HerglotzDecomposition {
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub atoms: Vec<Atom>,
}

impl HerglotzDecomposition {
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        // w(1/(λ − z) − λ/(1 + λ²)) = w(1 + λz)/((λ − z)(1 + λ²)), which stays
        // accurate for far-out atoms with large mass.
        let atoms: Complex64 = pairwise(self.atoms.len(), |j| {
            let Atom {
                location: l,
                mass: w,
            } = self.atoms[j];
            w * (1.0 + l * z) / ((l - z) * (1.0 + l * l))
        });
        self.b + self.c * z + atoms
    }
}

const B_IMAG_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;

pub fn herglotz_decompose(ctx: &PotentialContext, alpha: f64) -> Result<HerglotzDecomposition> {
    let ls = solve_level_set(ctx, alpha)?;
    herglotz_from_level_set(ctx, &ls)
}

/// Builds the decomposition from an already solved level set and verifies
/// the identity at a handful of probe points.
pub fn herglotz_from_level_set(
    ctx: &PotentialContext,
    ls: &LevelSet,
) -> Result<HerglotzDecomposition> {
    if !ctx.is_line() {
        return Err(Error::GeometryMismatch { expected: "line" });
    }
    let alpha = ls.alpha();
    let c = if ls.exceptional() {
        1.0 / ctx.nodes().total_weight()
    } else {
        0.0
    };
    let mut dec = HerglotzDecomposition {
        alpha,
        b: 0.0,
        c,
        atoms: ls
            .lambdas()
            .iter()
            .zip(ls.weights())
            .map(|(l, &w)| Atom {
                location: l.re,
                mass: w,
            })
            .collect(),
    };
    let lhs = |z: Complex64| -> Result<Complex64> { Ok(1.0 / (alpha - ctx.phi(z)?)) };

    let i = Complex64::i();
    let at_i = lhs(i)?;
    let b = at_i - dec.evaluate(i);
    if b.im.abs() > B_IMAG_TOL * (1.0 + at_i.norm() + b.re.abs()) {
        return Err(Error::DecompositionResidual {
            residual: b.im.abs(),
            tol: B_IMAG_TOL,
        });
    }
    dec.b = b.re;

    let xs: Vec<f64> = ctx.nodes().gamma().iter().map(|g| g.re).collect();
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let mid = 0.5 * (lo + hi);
    let span = (hi - lo).max(1.0);
    let probes = [
        Complex64::new(0.0, 2.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(mid, 0.25 * span),
        Complex64::new(lo, 0.5),
        Complex64::new(hi, 0.5),
        Complex64::new(mid, 10.0 * span),
    ];
    for z in probes {
        let l = lhs(z)?;
        let residual = (l - dec.evaluate(z)).norm() / (1.0 + l.norm());
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::DecompositionResidual {
                residual,
                tol: RESIDUAL_TOL,
            });
        }
    }
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(pts: &[f64], v: &[f64]) -> PotentialContext {
        PotentialContext::new(WeightedNodeSet::line(pts, v.to_vec()).unwrap()).unwrap()
    }

    fn circle(angles: &[f64], v: &[f64]) -> PotentialContext {
        PotentialContext::new(WeightedNodeSet::circle_from_angles(angles, v.to_vec()).unwrap())
            .unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn single_node() {
        let ctx = line(&[0.0], &[1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        assert_eq!(ls.len(), 1);
        assert!((ls.lambdas()[0].re + 1.0).abs() < 1e-15);
        assert!((ls.weights()[0] - 1.0).abs() < 1e-15);
        assert!(!ls.exceptional());

        // α < α* = 0 puts the root on the right.
        let ls = solve_level_set(&ctx, -2.0).unwrap();
        assert!((ls.lambdas()[0].re - 0.5).abs() < 1e-15);

        let ls = solve_level_set(&ctx, 0.0).unwrap();
        assert!(ls.exceptional());
        assert!(ls.is_empty());
    }

    #[test]
    fn two_point_alpha_one() {
        // φ(x) = −2x/(x² − 1) = 1  ⇔  x² + 2x − 1 = 0.
        let ctx = line(&[-1.0, 1.0], &[1.0, 1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        let expect = [-1.0 - 2f64.sqrt(), -1.0 + 2f64.sqrt()];
        assert_eq!(ls.len(), 2);
        for (l, e) in ls.lambdas().iter().zip(expect) {
            assert!((l.re - e).abs() < 1e-14, "{l} vs {e}");
            assert_eq!(l.im, 0.0);
        }
        // w = 1/φ′(λ) with φ′(λ) = 2(λ² + 1)/(λ² − 1)².
        for (w, e) in ls.weights().iter().zip(expect) {
            let e2 = e * e;
            let want = (e2 - 1.0).powi(2) / (2.0 * (e2 + 1.0));
            assert!(close(*w, want, 1e-14), "{w} vs {want}");
        }
    }

    #[test]
    fn two_point_exceptional() {
        let ctx = line(&[-1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(exceptional_alpha(&ctx), Some(0.0));
        let ls = solve_level_set(&ctx, 0.0).unwrap();
        assert!(ls.exceptional());
        assert_eq!(ls.len(), 1);
        assert!(ls.lambdas()[0].norm() < 1e-15);
        assert!(close(ls.weights()[0], 0.5, 1e-15));
        // Scan: no sign change of φ beyond the hull, so no other root.
        for k in 1..2000 {
            let x = 1.0 + k as f64 * 0.05;
            assert!(ctx.phi(Complex64::new(x, 0.0)).unwrap().re < 0.0);
            assert!(ctx.phi(Complex64::new(-x, 0.0)).unwrap().re > 0.0);
        }
    }

    #[test]
    fn exceptional_alpha_examples() {
        assert_eq!(exceptional_alpha(&line(&[0.0], &[1.0])), Some(0.0));
        let ctx = line(&[1.0], &[2.0]);
        let astar = exceptional_alpha(&ctx).unwrap();
        assert_eq!(astar, -1.0);
        // φ(x) → α* like −Σv/x: extrapolate x φ(x) linearly in 1/x.
        for k in 3..=6 {
            let x = 10f64.powi(k);
            let phi = ctx.phi(Complex64::new(x, 0.0)).unwrap().re;
            assert!((phi - astar).abs() < 3.0 / x);
        }
        let circ = circle(&[0.0, 2.0], &[1.0, 1.0]);
        assert_eq!(exceptional_alpha(&circ), None);
    }

    #[test]
    fn cube_roots_of_unity_at_zero() {
        let angles: Vec<f64> = (0..3).map(|k| 2.0 * PI * k as f64 / 3.0).collect();
        let ctx = circle(&angles, &[2.0 / 3.0; 3]);
        let ls = solve_level_set(&ctx, 0.0).unwrap();
        assert_eq!(ls.len(), 3);
        assert!(!ls.exceptional());
        for l in ls.lambdas() {
            assert!((l.powu(3) + 1.0).norm() < 1e-14, "{l}");
            assert!((l.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_circle_node() {
        let ctx = circle(&[0.0], &[2.0]);
        for alpha in [-3.0, 0.0, 0.4, 10.0] {
            let ls = solve_level_set(&ctx, alpha).unwrap();
            assert_eq!(ls.len(), 1);
            // I(z) = z here, so φ = α at z = β = (α − i)/(α + i).
            let beta = Complex64::new(alpha, -1.0) / Complex64::new(alpha, 1.0);
            assert!((ls.lambdas()[0] - beta).norm() < 1e-14);
        }
    }

    #[test]
    fn far_outer_root_near_exceptional() {
        let ctx = line(&[-1.0, 1.0], &[1.0, 1.0]);
        // α = 1e-6: outer root near −2/α.
        let ls = solve_level_set(&ctx, 1e-6).unwrap();
        assert_eq!(ls.len(), 2);
        let outer = ls.lambdas()[0].re;
        assert!((outer + 2e6).abs() < 1.0, "{outer}");
        for j in 0..2 {
            assert!(ls.residual(&ctx, j).unwrap().abs() < 1e-12);
        }
        // Just inside the exceptional band.
        let ls = solve_level_set(&ctx, 5e-10).unwrap();
        assert!(ls.exceptional());
    }

    #[test]
    fn decomposition_single_node() {
        // z/(z + 1) = 1 − 1/(z + 1) = 1/2 + [1/(−1 − z) + 1/2].
        let ctx = line(&[0.0], &[1.0]);
        let dec = herglotz_decompose(&ctx, 1.0).unwrap();
        assert_eq!(dec.c, 0.0);
        assert_eq!(dec.atoms.len(), 1);
        assert!((dec.atoms[0].location + 1.0).abs() < 1e-15);
        assert!((dec.atoms[0].mass - 1.0).abs() < 1e-15);
        assert!((dec.b - 0.5).abs() < 1e-14, "{}", dec.b);
    }

    #[test]
    fn decomposition_two_point() {
        let ctx = line(&[-1.0, 1.0], &[1.0, 1.0]);
        let dec = herglotz_decompose(&ctx, 1.0).unwrap();
        assert_eq!(dec.c, 0.0);
        for a in &dec.atoms {
            let l2 = a.location * a.location;
            let m = (l2 - 1.0).powi(2) / (2.0 * (l2 + 1.0));
            assert!(close(a.mass, m, 1e-13));
        }
        // b from the partial fractions of (x² − 1)/(x² + 2x − 1) at infinity:
        // the LHS → 1 and the atoms tend to −Σ w λ/(1+λ²).
        let tail: f64 = dec
            .atoms
            .iter()
            .map(|a| a.mass * a.location / (1.0 + a.location.powi(2)))
            .sum();
        assert!((dec.b - (1.0 + tail)).abs() < 1e-13);

        let dec = herglotz_decompose(&ctx, 0.0).unwrap();
        assert!(close(dec.c, 0.5, 1e-15));
        // Fit of 1/(0 − φ(iy))/(iy) as y → ∞ recovers c.
        let y = 1e7;
        let z = Complex64::new(0.0, y);
        let fit = (1.0 / (-ctx.phi(z).unwrap()) / z).re;
        assert!((fit - 0.5).abs() < 1e-6);
    }

    #[test]
    fn decomposition_rejects_circle() {
        let ctx = circle(&[0.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(
            herglotz_decompose(&ctx, 0.0),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn decomposition_detects_a_missing_atom() {
        let ctx = line(&[-1.0, 1.0], &[1.0, 1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        let partial = LevelSet::from_points(ctx.nodes(), 1.0, vec![ls.lambdas()[1]], None).unwrap();
        assert!(matches!(
            herglotz_from_level_set(&ctx, &partial),
            Err(Error::DecompositionResidual { .. })
        ));
    }

    #[test]
    fn explicit_points_validate() {
        let nodes = WeightedNodeSet::line(&[0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            LevelSet::from_points(&nodes, 0.0, vec![Complex64::new(1.0, 0.0)], None),
            Err(Error::Overlap { lambda: 0, node: 1 })
        ));
        assert!(matches!(
            LevelSet::from_points(&nodes, 0.0, vec![Complex64::new(0.5, 0.0)], Some(vec![0.0])),
            Err(Error::NonPositiveWeight { .. })
        ));
        let ls = LevelSet::from_points(&nodes, 0.0, vec![Complex64::new(0.5, 0.0)], None).unwrap();
        assert!(close(ls.weights()[0], 1.0 / 8.0, 1e-15));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn line_ctx(max: usize) -> impl Strategy<Value = PotentialContext> {
            (1usize..max)
                .prop_flat_map(|n| {
                    (
                        prop::collection::vec(-10.0..10.0f64, n),
                        prop::collection::vec(0.01..5.0f64, n),
                    )
                })
                .prop_filter_map("distinct", |(p, v)| {
                    WeightedNodeSet::line(&p, v)
                        .ok()
                        .and_then(|s| PotentialContext::new(s).ok())
                })
        }

        fn circle_ctx(max: usize) -> impl Strategy<Value = PotentialContext> {
            (1usize..max)
                .prop_flat_map(|n| {
                    (
                        prop::collection::vec(-PI..PI, n),
                        prop::collection::vec(0.01..5.0f64, n),
                    )
                })
                .prop_filter_map("distinct", |(a, v)| {
                    WeightedNodeSet::circle_from_angles(&a, v)
                        .ok()
                        .and_then(|s| PotentialContext::new(s).ok())
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn line_interlacing_and_weights(ctx in line_ctx(24), alpha in -30.0..30.0f64) {
                let ls = solve_level_set(&ctx, alpha).unwrap();
                let n = ctx.nodes().len();
                prop_assert_eq!(ls.len(), if ls.exceptional() { n - 1 } else { n });

                let mut merged: Vec<(f64, bool)> = ctx.nodes().gamma().iter().map(|g| (g.re, true)).collect();
                merged.extend(ls.lambdas().iter().map(|l| (l.re, false)));
                merged.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in merged.windows(2) {
                    prop_assert!(w[0].1 != w[1].1, "no alternation: {:?}", merged);
                    prop_assert!(w[0].0 < w[1].0);
                }

                for j in 0..ls.len() {
                    let r = ls.residual(&ctx, j).unwrap();
                    // Residual at the root finder's rounding floor.
                    let d = ls.differences(ctx.nodes(), j).unwrap();
                    let mag: f64 = d.iter().zip(ctx.nodes().weights()).map(|(d, v)| v / d.norm()).sum::<f64>()
                        + alpha.abs() + ctx.line_offset().abs();
                    prop_assert!(r.abs() <= (1e-12 * (1.0 + alpha.abs())).max(8.0 * EPS * mag), "{r}");

                    let w = ls.weights()[j];
                    let kw = ctx.nodes().kernel_weight(ls.lambdas()[j]).unwrap();
                    let dphi = ls.potential_derivative(ctx.nodes(), j).unwrap();
                    prop_assert!(close(w * dphi, 1.0, 1e-12));
                    // The plain evaluation loses relative accuracy ~ ε|λ|/dist(λ, Γ).
                    let dist = d.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(close(kw, w, 1e-10f64.max(16.0 * EPS * ls.lambdas()[j].norm() / dist)));
                }
            }

            #[test]
            fn circle_count_and_weights(ctx in circle_ctx(24), alpha in -30.0..30.0f64) {
                let ls = solve_level_set(&ctx, alpha).unwrap();
                prop_assert_eq!(ls.len(), ctx.nodes().len());
                prop_assert!(!ls.exceptional());
                // Angular alternation around the circle.
                let mut merged: Vec<(f64, bool)> = ctx.nodes().gamma().iter().map(|g| (g.arg(), true)).collect();
                merged.extend(ls.lambdas().iter().map(|l| (l.arg(), false)));
                merged.sort_by(|a, b| a.0.total_cmp(&b.0));
                let m = merged.len();
                for i in 0..m {
                    prop_assert!(merged[i].1 != merged[(i + 1) % m].1);
                }
                for j in 0..ls.len() {
                    let d = ls.differences(ctx.nodes(), j).unwrap();
                    let mag: f64 = d.iter().zip(ctx.nodes().weights()).map(|(d, v)| v / d.norm()).sum::<f64>() + alpha.abs();
                    let r = ls.residual(&ctx, j).unwrap();
                    prop_assert!(r.abs() <= (1e-12 * (1.0 + alpha.abs())).max(16.0 * EPS * mag), "{r}");
                    prop_assert!((ls.lambdas()[j].norm() - 1.0).abs() < 1e-15);
                    let dphi = ls.potential_derivative(ctx.nodes(), j).unwrap();
                    prop_assert!(close(ls.weights()[j] * dphi, 1.0, 1e-12));
                }
            }

            #[test]
            fn roots_move_right_as_alpha_grows(ctx in line_ctx(16), a in -20.0..20.0f64, b in -20.0..20.0f64) {
                let (a1, a2) = if a < b { (a, b) } else { (b, a) };
                prop_assume!(a2 - a1 > 1e-6);
                let l1 = solve_level_set(&ctx, a1).unwrap();
                let l2 = solve_level_set(&ctx, a2).unwrap();
                prop_assume!(!l1.exceptional() && !l2.exceptional());
                // Match gap roots by the gap they sit in.
                let xs: Vec<f64> = {
                    let mut x: Vec<f64> = ctx.nodes().gamma().iter().map(|g| g.re).collect();
                    x.sort_by(f64::total_cmp);
                    x
                };
                for w in xs.windows(2) {
                    let pick = |ls: &LevelSet| ls.lambdas().iter().map(|l| l.re).find(|&l| l > w[0] && l < w[1]).unwrap();
                    prop_assert!(pick(&l1) < pick(&l2));
                }
            }

            #[test]
            fn kernels_at_level_points_are_orthogonal(ctx in line_ctx(16), alpha in -20.0..20.0f64) {
                let ls = solve_level_set(&ctx, alpha).unwrap();
                let v = ctx.nodes().weights();
                for j in 0..ls.len() {
                    for k in 0..j {
                        let dj = ls.differences(ctx.nodes(), j).unwrap();
                        let dk = ls.differences(ctx.nodes(), k).unwrap();
                        // Σ v_n (λ − μ)/((μ − γ_n)(λ − γ_n)), normalized by the kernel norms.
                        let lm = ls.lambdas()[j].re - ls.lambdas()[k].re;
                        let s: f64 = (0..v.len()).map(|n| v[n] * lm / (dk[n].re * dj[n].re)).sum();
                        let scale = (ls.weights()[j] * ls.weights()[k]).sqrt() / lm.abs();
                        prop_assert!((s * scale).abs() < 1e-9, "{}", s * scale);
                    }
                }
            }

            #[test]
            fn decomposition_identity(ctx in line_ctx(16), alpha in -20.0..20.0f64, zs in prop::collection::vec((-15.0..15.0f64, 0.1..10.0f64), 20)) {
                let dec = herglotz_decompose(&ctx, alpha).unwrap();
                for (re, im) in zs {
                    let z = Complex64::new(re, im);
                    let lhs = 1.0 / (alpha - ctx.phi(z).unwrap());
                    prop_assert!((lhs - dec.evaluate(z)).norm() <= 1e-9 * (1.0 + lhs.norm()));
                }
            }
        }
    }
}
