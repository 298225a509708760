//! Inner functions, model-space kernels and Clark bases on the circle.
//!
//! For a circle node set the potential `φ` maps the disk to the upper
//! half-plane, so `I = (φ − i)/(φ + i)` is a finite Blaschke product of
//! degree `N`. Its level sets `I = β` (`β` unimodular, `β ≠ 1`) are exactly
//! the level sets `φ = α` with `β = (α − i)/(α + i)`, and the model-space
//! kernels `κ_λ(z) = (1 − conj(I(λ)) I(z))/(1 − conj(λ) z)` over such a level
//! set are mutually orthogonal in `H²`. [`InnerFunction::clark_basis`]
//! checks that orthogonality by trapezoid quadrature of the boundary
//! integral `(1/2π) ∫ κ_{λ_j} conj(κ_{λ_k}) dθ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::{solve_level_set_with, LevelSet, SolverOptions};
use crate::potential::PotentialContext;
use crate::sequences::Geometry;
use crate::sum::pairwise;

/// Allowed `| |β| − 1 |`.
pub const BETA_UNIMODULAR_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `β = (α − i)/(α + i)`, a point of the unit circle other than `1`.
pub fn alpha_to_beta(alpha: f64) -> Complex64 {
    Complex64::new(alpha, -1.0) / Complex64::new(alpha, 1.0)
}

/// `α = i(1 + β)/(1 − β)`, real for unimodular `β`.
pub fn beta_to_alpha(beta: Complex64) -> Result<f64> {
    if !beta.re.is_finite()
        || !beta.im.is_finite()
        || (beta.norm() - 1.0).abs() > BETA_UNIMODULAR_TOL
    {
        return Err(Error::BetaNotUnimodular(format!("{beta}")));
    }
    if beta == Complex64::new(1.0, 0.0) {
        return Err(Error::BetaEqualsOne);
    }
    Ok((I * (1.0 + beta) / (1.0 - beta)).re)
}

/// `φ = i(1 + I)/(1 − I)`.
pub fn phi_from_inner(inner: Complex64) -> Result<Complex64> {
    if inner == Complex64::new(1.0, 0.0) {
        return Err(Error::AtOne);
    }
    Ok(I * (1.0 + inner) / (1.0 - inner))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClarkOptions {
    /// Initial number of quadrature points; `64·N` when `None`.
    pub initial_points: Option<usize>,
    /// Doubling stops once no Gram entry moves by more than
    /// `change_tol · max(1, max |G|)`.
    pub change_tol: f64,
    pub max_points: usize,
    /// Off-diagonal bound for [`ClarkBasis::is_diagonal`].
    pub diagonal_tol: f64,
    pub solver: SolverOptions,
}

impl Default for ClarkOptions {
    fn default() -> Self {
        ClarkOptions {
            initial_points: None,
            change_tol: 1e-8,
            max_points: 1 << 20,
            diagonal_tol: 1e-9,
            solver: SolverOptions::default(),
        }
    }
}

/// `I(z) = (φ(z) − i)/(φ(z) + i)` for a circle potential.
#[derive(Clone, Debug)]
pub struct InnerFunction {
    ctx: PotentialContext,
}

impl InnerFunction {
    pub fn new(ctx: PotentialContext) -> Result<Self> {
        if ctx.is_line() || ctx.nodes().geometry() != Geometry::Circle {
            return Err(Error::GeometryMismatch { expected: "circle" });
        }
        Ok(InnerFunction { ctx })
    }

    pub fn context(&self) -> &PotentialContext {
        &self.ctx
    }

    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        let phi = self.ctx.phi(z)?;
        Ok((phi - I) / (phi + I))
    }

    /// `(1 − conj(I(ζ)) I(z))/(1 − conj(ζ) z)`.
    ///
    /// For `z = ζ` on the circle (off `Γ`) this is the limit
    /// `|I′(ζ)| = 2 (dφ/dθ)/(1 + φ²)`.
    pub fn model_kernel(&self, zeta: Complex64, z: Complex64) -> Result<Complex64> {
        let den = 1.0 - zeta.conj() * z;
        if den == Complex64::zero()
            || (z == zeta && (zeta.norm() - 1.0).abs() <= 4.0 * f64::EPSILON)
        {
            if z != zeta {
                return Err(Error::SingularPair);
            }
            let phi = self.ctx.phi(zeta)?.re;
            let dphi = self.ctx.phi_derivative(zeta)?.re;
            return Ok(Complex64::new(2.0 * dphi / (1.0 + phi * phi), 0.0));
        }
        let num = 1.0 - self.value(zeta)?.conj() * self.value(z)?;
        Ok(num / den)
    }

    pub fn clark_basis(&self, beta: Complex64) -> Result<ClarkBasis> {
        self.clark_basis_with(beta, &ClarkOptions::default())
    }

    /// Clark points `I(λ) = β` via the level set `φ = beta_to_alpha(β)`,
    /// with the quadrature Gram of their kernels.
    pub fn clark_basis_with(&self, beta: Complex64, opts: &ClarkOptions) -> Result<ClarkBasis> {
        let alpha = beta_to_alpha(beta)?;
        let ls = solve_level_set_with(&self.ctx, alpha, &opts.solver)?;
        let n = self.ctx.nodes().len();
        let start = opts.initial_points.unwrap_or(64 * n).max(1);
        let (quadrature_gram, points, last_change) = self.quadrature_gram(&ls, start, opts)?;
        let l2_gram = self.l2_gram(&ls)?;
        let scale = 2.0 / (1.0 + alpha * alpha);
        let closed_diagonal = ls.weights().iter().map(|w| scale / w).collect();
        Ok(ClarkBasis {
            beta,
            alpha,
            level_set: ls,
            quadrature_gram,
            l2_gram,
            closed_diagonal,
            quadrature_points: points,
            last_change,
            diagonal_tol: opts.diagonal_tol,
        })
    }

    /// `κ_{λ_j}(z)` for every Clark point, written without the cancelling
    /// numerator `1 − conj(β) I(z)`:
    ///
    /// `κ_λ(z) = −2λ Σ_n v_n γ_n/((γ_n − λ)(γ_n − z)) / ((α − i)(φ(z) + i))`,
    ///
    /// with the limit `2iλ/((γ_m − λ)(α − i))` at `z = γ_m`.
    fn clark_kernels(
        &self,
        ls: &LevelSet,
        diffs: &[Vec<Complex64>],
        z: Complex64,
        out: &mut [Complex64],
    ) {
        let nodes = self.ctx.nodes();
        let g = nodes.gamma();
        let v = nodes.weights();
        let am = Complex64::new(ls.alpha(), -1.0);
        let on_node = g
            .iter()
            .position(|&gm| (gm - z).norm() <= nodes.dedup_tol());
        if let Some(m) = on_node {
            for (j, k) in out.iter_mut().enumerate() {
                // γ_m − λ_j = −d_{jm}.
                *k = 2.0 * I * ls.lambdas()[j] / (-diffs[j][m] * am);
            }
            return;
        }
        let phi: Complex64 = I * 0.5 * pairwise(g.len(), |n| v[n] * (g[n] + z) / (g[n] - z));
        let denom = am * (phi + I);
        for (j, k) in out.iter_mut().enumerate() {
            let d = &diffs[j];
            let s: Complex64 = pairwise(g.len(), |n| v[n] * g[n] / (-d[n] * (g[n] - z)));
            *k = -2.0 * ls.lambdas()[j] * s / denom;
        }
    }

    /// Sums `κ_j(z) conj(κ_k(z))` over `z = e^{2πi(offset + stride·m)/total}`.
    fn accumulate(
        &self,
        ls: &LevelSet,
        diffs: &[Vec<Complex64>],
        total: usize,
        offset: usize,
        stride: usize,
        sum: &mut DMatrix<Complex64>,
    ) {
        let n = ls.len();
        let mut k = vec![Complex64::zero(); n];
        let mut m = offset;
        while m < total {
            let z = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / total as f64);
            self.clark_kernels(ls, diffs, z, &mut k);
            for a in 0..n {
                for b in 0..n {
                    sum[(a, b)] += k[a] * k[b].conj();
                }
            }
            m += stride;
        }
    }

    /// Trapezoid Gram with `M = start, 2·start, …` points until consecutive
    /// estimates agree. Returns the final Gram, its `M`, and the last change.
    fn quadrature_gram(
        &self,
        ls: &LevelSet,
        start: usize,
        opts: &ClarkOptions,
    ) -> Result<(DMatrix<Complex64>, usize, f64)> {
        let nodes = self.ctx.nodes();
        let diffs: Vec<Vec<Complex64>> = (0..ls.len())
            .map(|j| ls.differences(nodes, j))
            .collect::<Result<_>>()?;
        let n = ls.len();
        let mut m = start;
        let mut sum = DMatrix::zeros(n, n);
        self.accumulate(ls, &diffs, m, 0, 1, &mut sum);
        let mut gram = sum.map(|x| x / m as f64);
        loop {
            // The 2M grid is the M grid plus the odd-indexed midpoints.
            self.accumulate(ls, &diffs, 2 * m, 1, 2, &mut sum);
            m *= 2;
            let next = sum.map(|x| x / m as f64);
            let change = (&next - &gram).iter().map(|x| x.norm()).fold(0.0, f64::max);
            let size = next.iter().map(|x| x.norm()).fold(1.0, f64::max);
            gram = next;
            if change <= opts.change_tol * size {
                return Ok((gram, m, change));
            }
            if 2 * m > opts.max_points {
                return Err(Error::QuadratureUnresolved { change, points: m });
            }
        }
    }

    /// `(|1 − β|²/2) Σ_n v_n/(conj(λ_j − γ_n)(λ_k − γ_n))`: the kernel Gram
    /// of `𝓗(Γ, v)` carried to the model space.
    fn l2_gram(&self, ls: &LevelSet) -> Result<DMatrix<Complex64>> {
        let nodes = self.ctx.nodes();
        let v = nodes.weights();
        let diffs: Vec<Vec<Complex64>> = (0..ls.len())
            .map(|j| ls.differences(nodes, j))
            .collect::<Result<_>>()?;
        let scale = 2.0 / (1.0 + ls.alpha() * ls.alpha());
        let n = ls.len();
        Ok(DMatrix::from_fn(n, n, |a, b| {
            scale * pairwise(v.len(), |k| v[k] / (diffs[a][k].conj() * diffs[b][k]))
        }))
    }
}

/// `I(z)` for the circle potential in `h`.
pub fn inner_value(h: &InnerFunction, z: Complex64) -> Result<Complex64> {
    h.value(z)
}

/// A Clark level set with its Gram diagnostics.
#[derive(Clone, Debug)]
pub struct ClarkBasis {
    pub beta: Complex64,
    pub alpha: f64,
    pub level_set: LevelSet,
    /// `(1/M) Σ_m κ_j(z_m) conj(κ_k(z_m))`.
    pub quadrature_gram: DMatrix<Complex64>,
    pub l2_gram: DMatrix<Complex64>,
    /// `|I′(λ_j)| = 2/((1 + α²) w_j)`.
    pub closed_diagonal: Vec<f64>,
    pub quadrature_points: usize,
    /// Largest entry change at the final doubling.
    pub last_change: f64,
    pub diagonal_tol: f64,
}

impl ClarkBasis {
    pub fn points(&self) -> &[Complex64] {
        self.level_set.lambdas()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let g = &self.quadrature_gram;
        let mut worst = 0.0_f64;
        for a in 0..g.nrows() {
            for b in 0..g.ncols() {
                if a != b {
                    worst = worst.max(g[(a, b)].norm());
                }
            }
        }
        worst
    }

    /// Largest `|G_jj − |I′(λ_j)|| / |I′(λ_j)|` over the quadrature diagonal.
    pub fn diagonal_rel_error(&self) -> f64 {
        self.closed_diagonal
            .iter()
            .enumerate()
            .map(|(j, d)| (self.quadrature_gram[(j, j)] - d).norm() / d)
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference between the quadrature and `ℓ²` Grams.
    pub fn l2_agreement(&self) -> f64 {
        (&self.quadrature_gram - &self.l2_gram)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_off_diagonal() <= self.diagonal_tol
    }
}
