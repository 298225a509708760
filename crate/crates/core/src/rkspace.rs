//! The space `𝓗(Γ, v)` of functions `f(z) = Σ_n a_n v_n/(z − γ_n)` with
//! `‖f‖² = Σ_n |a_n|² v_n`.
//!
//! Its reproducing kernel at `z` has coefficients `a_n = 1/conj(z − γ_n)`:
//!
//! ```text
//! k_z(ζ) = Σ_n v_n / (conj(z − γ_n)(ζ − γ_n)).
//! ```
//!
//! The normalized kernels `√w_j k_{λ_j}` over a level set are the rows of the
//! scaled transform read as vectors in `𝓗`, so they form an orthonormal
//! basis exactly when the transform is unitary. A certified basis gives
//! sampling on `Λ`: `f = Σ_j f(λ_j) w_j k_{λ_j}` and
//! `‖f‖² = Σ_j w_j |f(λ_j)|²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::potential::PotentialContext;
use crate::sequences::{Geometry, WeightedNodeSet};
use crate::sum::pairwise;
use crate::transform::{identity_deviation, UNIT_TOL_REL};

/// Coefficients `a_n` of an element of `𝓗(Γ, v)`, aligned with `Γ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceElement {
    coeffs: Vec<Complex64>,
}

impl SpaceElement {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite("coeffs"));
        }
        Ok(SpaceElement { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// The kernel `k_z` as an element of the space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelVector {
    anchor: Complex64,
    element: SpaceElement,
}

impl KernelVector {
    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    pub fn element(&self) -> &SpaceElement {
        &self.element
    }
}

/// `𝓗(Γ, v)` over a fixed node set.
#[derive(Clone, Debug)]
pub struct KernelSpace {
    nodes: WeightedNodeSet,
}

impl KernelSpace {
    pub fn new(nodes: WeightedNodeSet) -> Self {
        KernelSpace { nodes }
    }

    pub fn nodes(&self) -> &WeightedNodeSet {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    fn check_len(&self, f: &SpaceElement) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                got: f.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// An element with the given coefficients.
    pub fn element(&self, coeffs: Vec<Complex64>) -> Result<SpaceElement> {
        let f = SpaceElement::new(coeffs)?;
        self.check_len(&f)?;
        Ok(f)
    }

    /// `f(z) = Σ_n a_n v_n/(z − γ_n)`.
    pub fn evaluate(&self, f: &SpaceElement, z: Complex64) -> Result<Complex64> {
        self.check_len(f)?;
        self.nodes.check_off_nodes(z)?;
        let g = self.nodes.gamma();
        let v = self.nodes.weights();
        Ok(pairwise(self.dim(), |n| f.coeffs[n] * v[n] / (z - g[n])))
    }

    /// `⟨f, g⟩ = Σ_n a_n conj(b_n) v_n`.
    pub fn inner(&self, f: &SpaceElement, g: &SpaceElement) -> Result<Complex64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let v = self.nodes.weights();
        Ok(pairwise(self.dim(), |n| {
            f.coeffs[n] * g.coeffs[n].conj() * v[n]
        }))
    }

    pub fn norm(&self, f: &SpaceElement) -> Result<f64> {
        self.check_len(f)?;
        let v = self.nodes.weights();
        Ok(pairwise(self.dim(), |n| f.coeffs[n].norm_sqr() * v[n]).sqrt())
    }

    pub fn kernel_vector(&self, z: Complex64) -> Result<KernelVector> {
        self.nodes.check_off_nodes(z)?;
        let coeffs = self
            .nodes
            .gamma()
            .iter()
            .map(|&g| 1.0 / (z - g).conj())
            .collect();
        Ok(KernelVector {
            anchor: z,
            element: SpaceElement { coeffs },
        })
    }

    /// `k_z(ζ)`.
    pub fn kernel(&self, z: Complex64, zeta: Complex64) -> Result<Complex64> {
        kernel(&self.nodes, z, zeta)
    }

    /// `f(λ_j)` for every point of the level set, using the level set's
    /// accurate differences `λ_j − γ_n`.
    pub fn samples(&self, f: &SpaceElement, ls: &LevelSet) -> Result<Vec<Complex64>> {
        self.check_len(f)?;
        let v = self.nodes.weights();
        (0..ls.len())
            .map(|j| {
                let d = ls.differences(&self.nodes, j)?;
                Ok(pairwise(d.len(), |n| f.coeffs[n] * v[n] / d[n]))
            })
            .collect()
    }

    /// Rows `√(w_j v_n)/conj(λ_j − γ_n)`: the normalized kernels
    /// `√w_j k_{λ_j}` in the orthonormal coordinates `a_n √v_n`.
    fn normalized_kernels(&self, ls: &LevelSet) -> Result<DMatrix<Complex64>> {
        let v = self.nodes.weights();
        let w = ls.weights();
        let mut k = DMatrix::zeros(ls.len(), self.dim());
        for j in 0..ls.len() {
            let d = ls.differences(&self.nodes, j)?;
            for n in 0..self.dim() {
                k[(j, n)] = (w[j] * v[n]).sqrt() / d[n].conj();
            }
        }
        Ok(k)
    }

    /// Deviation of `{√w_j k_{λ_j}}` from an orthonormal basis.
    ///
    /// The larger of two Frobenius deviations: the Gram matrix
    /// `⟨√w_j k_{λ_j}, √w_k k_{λ_k}⟩` from `I` (orthonormality), and the frame
    /// operator `Σ_j w_j k_{λ_j} ⊗ k_{λ_j}` from the identity on `𝓗`
    /// (completeness). An orthonormal family that misses a direction, as at
    /// the exceptional value, fails only the second.
    pub fn basis_certificate(&self, ls: &LevelSet) -> Result<f64> {
        let k = self.normalized_kernels(ls)?;
        let gram = &k * k.adjoint();
        let frame = k.transpose() * k.map(|x| x.conj());
        Ok(identity_deviation(gram).max(identity_deviation(frame)))
    }

    /// Certifies the kernel basis at `1e-9 · max(|Λ|, |Γ|)`.
    pub fn sampling_basis<'a>(&'a self, ls: &'a LevelSet) -> Result<SamplingBasis<'a>> {
        let certificate = self.basis_certificate(ls)?;
        let tol = UNIT_TOL_REL * ls.len().max(self.dim()) as f64;
        if !(certificate <= tol) {
            return Err(Error::BasisNotCertified {
                deviation: certificate,
                tol,
            });
        }
        Ok(SamplingBasis {
            space: self,
            ls,
            certificate,
        })
    }
}

/// `k_z(ζ) = Σ_n v_n/((conj(z) − conj(γ_n))(ζ − γ_n))`.
pub fn kernel(nodes: &WeightedNodeSet, z: Complex64, zeta: Complex64) -> Result<Complex64> {
    nodes.check_off_nodes(z)?;
    nodes.check_off_nodes(zeta)?;
    let g = nodes.gamma();
    let v = nodes.weights();
    Ok(pairwise(nodes.len(), |n| {
        v[n] / ((z - g[n]).conj() * (zeta - g[n]))
    }))
}

/// `Σ_j f(λ_j) w_j k_{λ_j}(z)` after certifying the kernel basis.
pub fn reconstruct(
    space: &KernelSpace,
    samples: &[Complex64],
    ls: &LevelSet,
    z: Complex64,
) -> Result<Complex64> {
    space.sampling_basis(ls)?.reconstruct(samples, z)
}

/// A level set whose normalized kernels passed [`KernelSpace::basis_certificate`].
#[derive(Clone, Copy, Debug)]
pub struct SamplingBasis<'a> {
    space: &'a KernelSpace,
    ls: &'a LevelSet,
    certificate: f64,
}

impl SamplingBasis<'_> {
    pub fn certificate(&self) -> f64 {
        self.certificate
    }

    pub fn level_set(&self) -> &LevelSet {
        self.ls
    }

    fn check_samples(&self, samples: &[Complex64]) -> Result<()> {
        if samples.len() != self.ls.len() {
            return Err(Error::LengthMismatch {
                what: "samples",
                got: samples.len(),
                expected: self.ls.len(),
            });
        }
        if samples
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(Error::NonFinite("samples"));
        }
        Ok(())
    }

    /// `Σ_j f(λ_j) w_j k_{λ_j}(z)`.
    pub fn reconstruct(&self, samples: &[Complex64], z: Complex64) -> Result<Complex64> {
        self.check_samples(samples)?;
        let nodes = self.space.nodes();
        nodes.check_off_nodes(z)?;
        let g = nodes.gamma();
        let v = nodes.weights();
        let w = self.ls.weights();
        let mut total = Complex64::zero();
        for (j, s) in samples.iter().enumerate() {
            let d = self.ls.differences(nodes, j)?;
            let k = pairwise(d.len(), |n| v[n] / (d[n].conj() * (z - g[n])));
            total += s * w[j] * k;
        }
        Ok(total)
    }

    /// The coefficients of `Σ_j f(λ_j) w_j k_{λ_j}` as an element.
    pub fn reconstruct_element(&self, samples: &[Complex64]) -> Result<SpaceElement> {
        self.check_samples(samples)?;
        let nodes = self.space.nodes();
        let w = self.ls.weights();
        let mut coeffs = vec![Complex64::zero(); nodes.len()];
        for (j, s) in samples.iter().enumerate() {
            let d = self.ls.differences(nodes, j)?;
            for (a, dn) in coeffs.iter_mut().zip(&d) {
                *a += s * w[j] / dn.conj();
            }
        }
        Ok(SpaceElement { coeffs })
    }

    /// `Σ_j w_j |f(λ_j)|²`, which equals `‖f‖²` for a certified basis.
    pub fn sampled_norm_sqr(&self, samples: &[Complex64]) -> Result<f64> {
        self.check_samples(samples)?;
        let w = self.ls.weights();
        Ok(pairwise(samples.len(), |j| w[j] * samples[j].norm_sqr()))
    }
}

fn require_line(ctx: &PotentialContext) -> Result<()> {
    if ctx.nodes().geometry() != Geometry::Line {
        return Err(Error::GeometryMismatch { expected: "line" });
    }
    Ok(())
}

/// `E_α(z) = (α − φ(z)) Π_n (z − γ_n)`, evaluated in that factored form.
/// At `z = γ_k` the removable value `v_k Π_{m≠k} (γ_k − γ_m)` is returned.
pub fn generating_function(ctx: &PotentialContext, alpha: f64, z: Complex64) -> Result<Complex64> {
    require_line(ctx)?;
    let nodes = ctx.nodes();
    let g = nodes.gamma();
    if let Some(k) = g.iter().position(|&gk| gk == z) {
        let rest: Complex64 = g
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != k)
            .map(|(_, &gm)| z - gm)
            .product();
        return Ok(nodes.weights()[k] * rest);
    }
    let phi = ctx.phi(z)?;
    let p: Complex64 = g.iter().map(|&gn| z - gn).product();
    Ok((alpha - phi) * p)
}

/// `E_α′(λ_j)` by the product rule,
/// `E′ = −φ′ P + (α − φ) P′` with `P = Π (z − γ_n)`, from the level set's
/// accurate differences.
pub fn generating_derivative(ctx: &PotentialContext, ls: &LevelSet, j: usize) -> Result<f64> {
    require_line(ctx)?;
    let nodes = ctx.nodes();
    let d = ls.differences(nodes, j)?;
    let p: f64 = d.iter().map(|x| x.re).product();
    Ok(p * derivative_over_product(ctx, ls, j, &d)?)
}

/// `E_α′(λ_j)/P(λ_j) = −φ′(λ_j) + (α − φ(λ_j)) Σ_n 1/(λ_j − γ_n)`.
fn derivative_over_product(
    ctx: &PotentialContext,
    ls: &LevelSet,
    j: usize,
    d: &[Complex64],
) -> Result<f64> {
    let nodes = ctx.nodes();
    let dphi = ls.potential_derivative(nodes, j)?;
    let gap = -ls.residual(ctx, j)?;
    let log_dp = pairwise(d.len(), |n| 1.0 / d[n].re);
    Ok(-dphi + gap * log_dp)
}

/// `g_j(z) = E_α(z)/(E_α′(λ_j)(z − λ_j))`, with `g_j(λ_j) = 1`.
///
/// Computed as `(α − φ(z)) Π_n (z − γ_n)/(λ_j − γ_n)` divided by
/// `(E′(λ_j)/P(λ_j))(z − λ_j)`, so the node products never form on their own.
pub fn biorthogonal(
    ctx: &PotentialContext,
    ls: &LevelSet,
    j: usize,
    z: Complex64,
) -> Result<Complex64> {
    require_line(ctx)?;
    let lambda = ls.lambdas()[j];
    if z == lambda {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let nodes = ctx.nodes();
    let d = ls.differences(nodes, j)?;
    let scale = derivative_over_product(ctx, ls, j, &d)?;
    if nodes.gamma().contains(&z) {
        let e = generating_function(ctx, ls.alpha(), z)?;
        let p: f64 = d.iter().map(|x| x.re).product();
        return Ok(e / (p * scale * (z - lambda)));
    }
    let g = nodes.gamma();
    let ratio: Complex64 = g.iter().zip(&d).map(|(&gn, dn)| (z - gn) / dn).product();
    let phi = ctx.phi(z)?;
    Ok((ls.alpha() - phi) * ratio / (scale * (z - lambda)))
}

/// `g_j(λ_k)` using the level set's accurate differences at both points.
pub fn biorthogonal_at(ctx: &PotentialContext, ls: &LevelSet, j: usize, k: usize) -> Result<f64> {
    require_line(ctx)?;
    if j == k {
        return Ok(1.0);
    }
    let nodes = ctx.nodes();
    let dj = ls.differences(nodes, j)?;
    let dk = ls.differences(nodes, k)?;
    let scale = derivative_over_product(ctx, ls, j, &dj)?;
    let ratio: f64 = dk.iter().zip(&dj).map(|(a, b)| a.re / b.re).product();
    let gap = -ls.residual(ctx, k)?;
    let sep = ls.lambdas()[k].re - ls.lambdas()[j].re;
    Ok(gap * ratio / (scale * sep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::solve_level_set;
    use crate::transform;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn line_space(pts: &[f64], v: &[f64]) -> (KernelSpace, PotentialContext) {
        let nodes = WeightedNodeSet::line(pts, v.to_vec()).unwrap();
        (
            KernelSpace::new(nodes.clone()),
            PotentialContext::new(nodes).unwrap(),
        )
    }

    #[test]
    fn evaluate_small_cases() {
        let (s, _) = line_space(&[0.0], &[1.0]);
        let f = s.element(vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(s.evaluate(&f, c(2.0, 0.0)).unwrap(), c(0.5, 0.0));
        assert_eq!(s.norm(&f).unwrap(), 1.0);

        let (s, _) = line_space(&[-1.0, 1.0], &[1.0, 1.0]);
        let f = s.element(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(s.evaluate(&f, c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
        assert!(matches!(
            s.evaluate(&f, c(1.0, 0.0)),
            Err(Error::PointOnGamma { index: 1, .. })
        ));

        let e0 = s.element(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let e1 = s.element(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(s.inner(&e0, &e1).unwrap(), c(0.0, 0.0));
        let short = SpaceElement::new(vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(
            s.inner(&e0, &short),
            Err(Error::ShapeMismatch {
                got: 1,
                expected: 2
            })
        );
    }

    #[test]
    fn single_node_kernel() {
        let (s, _) = line_space(&[0.0], &[1.0]);
        let (z, zeta) = (c(0.3, 1.2), c(-2.0, 0.7));
        let k = s.kernel(z, zeta).unwrap();
        assert!((k - 1.0 / (z.conj() * zeta)).norm() < 1e-15);
    }

    #[test]
    fn reproducing_identity_two_nodes_by_hand() {
        // ⟨f, k_z⟩ = Σ a_n conj(1/conj(z − γ_n)) v_n = Σ a_n v_n/(z − γ_n).
        let (s, _) = line_space(&[-1.0, 1.0], &[2.0, 0.5]);
        let f = s.element(vec![c(0.4, -1.0), c(2.0, 0.3)]).unwrap();
        let z = c(0.2, 0.9);
        let by_hand = c(0.4, -1.0) * 2.0 / (z + 1.0) + c(2.0, 0.3) * 0.5 / (z - 1.0);
        let kz = s.kernel_vector(z).unwrap();
        assert!((s.inner(&f, kz.element()).unwrap() - by_hand).norm() < 1e-15);
        assert!((s.evaluate(&f, z).unwrap() - by_hand).norm() < 1e-15);
    }

    #[test]
    fn kernel_diagonal_is_star_value() {
        let (s, _) = line_space(&[-2.0, 0.5, 3.0], &[1.0, 0.2, 4.0]);
        let z = c(0.7, -0.4);
        let k = s.kernel(z, z).unwrap();
        assert!((k.re - s.nodes().star_value(z).unwrap()).abs() < 1e-14);
        assert!(k.im.abs() < 1e-15);
    }

    #[test]
    fn certificate_trivial_and_two_point() {
        let (s, ctx) = line_space(&[0.0], &[1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        assert!(s.basis_certificate(&ls).unwrap() < 1e-15);

        let (s, ctx) = line_space(&[-1.0, 1.0], &[1.0, 1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        assert!(s.basis_certificate(&ls).unwrap() <= 1e-10);
    }

    #[test]
    fn certificate_exceptional_is_incomplete() {
        let (s, ctx) = line_space(&[-1.0, 1.0], &[1.0, 1.0]);
        let ls = solve_level_set(&ctx, 0.0).unwrap();
        // One unit kernel in a 2-dimensional space: the frame operator is a
        // rank-one projection, at distance 1 from the identity.
        let cert = s.basis_certificate(&ls).unwrap();
        assert!((cert - 1.0).abs() < 1e-14, "{cert}");
        assert!(matches!(
            s.sampling_basis(&ls),
            Err(Error::BasisNotCertified { .. })
        ));
    }

    #[test]
    fn kernel_samples_reconstruct_kernel() {
        let (s, ctx) = line_space(&[-1.0, 1.0], &[1.0, 1.0]);
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        let basis = s.sampling_basis(&ls).unwrap();
        let k1 = s.kernel_vector(ls.lambdas()[0]).unwrap();
        let samples = s.samples(k1.element(), &ls).unwrap();
        // k_{λ_1}(λ_1) = 1/w_1 and k_{λ_1}(λ_2) = 0.
        assert!((samples[0].re * ls.weights()[0] - 1.0).abs() < 1e-14);
        assert!(samples[1].norm() < 1e-14);
        let z = c(0.3, 0.8);
        let got = basis.reconstruct(&samples, z).unwrap();
        let want = s.evaluate(k1.element(), z).unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn generating_function_examples() {
        let (_, ctx) = line_space(&[0.0], &[1.0]);
        for z in [c(0.5, 0.0), c(-3.0, 2.0)] {
            assert!((generating_function(&ctx, 1.0, z).unwrap() - (z + 1.0)).norm() < 1e-14);
        }
        assert!(generating_function(&ctx, 1.0, c(-1.0, 0.0)).unwrap().norm() < 1e-15);

        let (_, ctx) = line_space(&[-1.0, 1.0], &[1.0, 1.0]);
        for z in [c(0.5, 0.0), c(2.0, -1.0), c(1.0, 0.0)] {
            let e = generating_function(&ctx, 1.0, z).unwrap();
            assert!((e - (z * z + 2.0 * z - 1.0)).norm() < 1e-14, "{z} {e}");
            let e0 = generating_function(&ctx, 0.0, z).unwrap();
            assert!((e0 - 2.0 * z).norm() < 1e-14, "{z} {e0}");
        }
        let ls = solve_level_set(&ctx, 1.0).unwrap();
        for (j, &l) in ls.lambdas().iter().enumerate() {
            assert!(generating_function(&ctx, 1.0, l).unwrap().norm() < 1e-14);
            // d/dz (z² + 2z − 1) = 2z + 2.
            let de = generating_derivative(&ctx, &ls, j).unwrap();
            assert!((de - (2.0 * l.re + 2.0)).abs() < 1e-13, "{de}");
        }
    }

    #[test]
    fn generating_function_rejects_circle() {
        let nodes = WeightedNodeSet::circle_from_angles(&[0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let ctx = PotentialContext::new(nodes).unwrap();
        assert!(matches!(
            generating_function(&ctx, 0.0, c(0.0, 0.0)),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn biorthogonality_small_instance() {
        let (_, ctx) = line_space(&[-2.0, -0.3, 0.4, 1.7, 2.9], &[1.0, 0.5, 2.0, 0.8, 1.3]);
        let ls = solve_level_set(&ctx, -0.6).unwrap();
        for j in 0..ls.len() {
            for k in 0..ls.len() {
                let g = biorthogonal_at(&ctx, &ls, j, k).unwrap();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10, "{j} {k} {g}");
            }
        }
    }

    #[test]
    fn biorthogonal_matches_scaled_kernel() {
        // w_j k_{λ_j}(z) = g_j(z) P(λ_j)/P(z) for real λ_j.
        let (s, ctx) = line_space(&[-2.0, -0.3, 0.4, 1.7], &[1.0, 0.5, 2.0, 0.8]);
        let ls = solve_level_set(&ctx, 0.25).unwrap();
        let g = s.nodes().gamma();
        for j in 0..ls.len() {
            let l = ls.lambdas()[j];
            for z in [c(0.1, 0.5), c(-1.0, -2.0), c(3.5, 0.0), g[2]] {
                let gz = biorthogonal(&ctx, &ls, j, z).unwrap();
                let pl: Complex64 = g.iter().map(|&gn| l - gn).product();
                if g.contains(&z) {
                    // At a node, compare with E(γ_k)/(E′(λ_j)(γ_k − λ_j)).
                    let e = generating_function(&ctx, ls.alpha(), z).unwrap();
                    let de = generating_derivative(&ctx, &ls, j).unwrap();
                    let want = e / (de * (z - l));
                    assert!((gz - want).norm() < 1e-13 * want.norm(), "{gz} {want}");
                    continue;
                }
                let pz: Complex64 = g.iter().map(|&gn| z - gn).product();
                let lhs = ls.weights()[j] * s.kernel(l, z).unwrap();
                assert!(
                    (lhs - gz * pl / pz).norm() < 1e-12 * lhs.norm().max(1.0),
                    "{lhs} {}",
                    gz * pl / pz
                );
            }
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (2usize..10).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0..10.0f64, n),
                prop::collection::vec(0.01..5.0f64, n),
                -20.0..20.0f64,
            )
        })
    }

    proptest! {
        #[test]
        fn reproducing_property(
            (pts, v, _) in instance(),
            coeff in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 10),
            z in (-12.0..12.0f64, -5.0..5.0f64),
        ) {
            let Ok(nodes) = WeightedNodeSet::line(&pts, v) else { return Ok(()); };
            let s = KernelSpace::new(nodes);
            let z = c(z.0, z.1);
            prop_assume!(s.nodes().check_off_nodes(z).is_ok());
            prop_assume!(s.nodes().gamma().iter().all(|g| (z - g).norm() > 1e-3));
            let f = s.element(coeff[..s.dim()].iter().map(|&(a, b)| c(a, b)).collect()).unwrap();
            let fz = s.evaluate(&f, z).unwrap();
            let via = s.inner(&f, s.kernel_vector(z).unwrap().element()).unwrap();
            let scale: f64 = (0..s.dim()).map(|n| (f.coeffs()[n] * s.nodes().weights()[n] / (z - s.nodes().gamma()[n])).norm()).sum();
            prop_assert!((fz - via).norm() <= 1e-12 * scale.max(fz.norm()));
        }

        #[test]
        fn kernel_hermitian(
            (pts, v, _) in instance(),
            z in (-12.0..12.0f64, -5.0..5.0f64),
            w in (-12.0..12.0f64, -5.0..5.0f64),
        ) {
            let Ok(nodes) = WeightedNodeSet::line(&pts, v) else { return Ok(()); };
            let (z, w) = (c(z.0, z.1), c(w.0, w.1));
            prop_assume!(nodes.gamma().iter().all(|g| (z - g).norm() > 1e-3 && (w - g).norm() > 1e-3));
            let a = kernel(&nodes, z, w).unwrap();
            let b = kernel(&nodes, w, z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
            // Finite everywhere off the exclusion zone.
            prop_assert!(nodes.star_value(z).unwrap().is_finite());
        }

        #[test]
        fn certificate_matches_transform((pts, v, alpha) in instance()) {
            let Ok(nodes) = WeightedNodeSet::line(&pts, v) else { return Ok(()); };
            let ctx = PotentialContext::new(nodes.clone()).unwrap();
            let ls = solve_level_set(&ctx, alpha).unwrap();
            let s = KernelSpace::new(nodes.clone());
            let cert = s.basis_certificate(&ls).unwrap();
            let rep = transform::build(&nodes, &ls).unwrap().unitarity_report();
            prop_assert!((cert - rep.col_gram_dev).abs() <= 1e-12, "{cert} {}", rep.col_gram_dev);
        }

        #[test]
        fn parseval_and_reconstruction(
            (pts, v, alpha) in instance(),
            coeff in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 10),
            z in (-12.0..12.0f64, -5.0..5.0f64),
        ) {
            let Ok(nodes) = WeightedNodeSet::line(&pts, v) else { return Ok(()); };
            let ctx = PotentialContext::new(nodes.clone()).unwrap();
            let ls = solve_level_set(&ctx, alpha).unwrap();
            prop_assume!(!ls.exceptional());
            let s = KernelSpace::new(nodes);
            let basis = s.sampling_basis(&ls).unwrap();
            let f = s.element(coeff[..s.dim()].iter().map(|&(a, b)| c(a, b)).collect()).unwrap();
            let samples = s.samples(&f, &ls).unwrap();
            let norm2 = s.norm(&f).unwrap().powi(2);
            prop_assert!((basis.sampled_norm_sqr(&samples).unwrap() - norm2).abs() <= 1e-10 * norm2);
            let z = c(z.0, z.1);
            prop_assume!(s.nodes().gamma().iter().all(|g| (z - g).norm() > 1e-2));
            let got = basis.reconstruct(&samples, z).unwrap();
            let want = s.evaluate(&f, z).unwrap();
            let scale = s.norm(&f).unwrap() * s.nodes().star_value(z).unwrap().sqrt();
            prop_assert!((got - want).norm() <= 1e-9 * scale, "{got} {want}");
        }
    }
}
