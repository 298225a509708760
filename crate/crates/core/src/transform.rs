//! The discrete Hilbert transform `H_v(Γ, Λ)` as a dense matrix and its
//! unitarity certificate.
//!
//! With standardized coordinates `x_n = a_n √v_n` and `y_j = b_j √w_j`, the
//! map `ℓ²_v → ℓ²_w` becomes the ordinary matrix
//! `U_{jn} = √(w_j v_n)/(λ_j − γ_n)`, and the transform is unitary exactly
//! when `U` is.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::sequences::{Geometry, WeightedNodeSet};

/// Unitarity threshold per matrix dimension.
pub const UNIT_TOL_REL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TransformMatrix {
    entries: DMatrix<Complex64>,
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
    scaled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Unitary,
    IsometryOnly,
    CoisometryOnly,
    NotIsometric,
    DimensionMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitarityReport {
    /// `‖U*U − I‖_F`: failure of the columns (images of `e^{(n)}`) to be
    /// orthonormal.
    pub col_gram_dev: f64,
    /// `‖UU* − I‖_F`: failure of the rows (normalized kernels at `λ_j`) to be
    /// orthonormal.
    pub row_gram_dev: f64,
    pub dims: (usize, usize),
    pub verdict: Verdict,
    pub tolerance: f64,
}

impl UnitarityReport {
    pub fn is_unitary(&self) -> bool {
        self.verdict == Verdict::Unitary
    }
}

/// The scaled matrix `√(w_j v_n)/(λ_j − γ_n)`.
pub fn build(nodes: &WeightedNodeSet, ls: &LevelSet) -> Result<TransformMatrix> {
    assemble(nodes, ls, true)
}

/// The raw matrix `v_n/(λ_j − γ_n)`.
pub fn build_raw(nodes: &WeightedNodeSet, ls: &LevelSet) -> Result<TransformMatrix> {
    assemble(nodes, ls, false)
}

fn assemble(nodes: &WeightedNodeSet, ls: &LevelSet, scaled: bool) -> Result<TransformMatrix> {
    let v = nodes.weights();
    let w = ls.weights();
    let mut entries = DMatrix::zeros(ls.len(), nodes.len());
    for j in 0..ls.len() {
        let d = ls.differences(nodes, j)?;
        for (n, dn) in d.iter().enumerate() {
            if dn.norm() <= nodes.dedup_tol() {
                return Err(Error::Overlap { lambda: j, node: n });
            }
            let num = if scaled { (w[j] * v[n]).sqrt() } else { v[n] };
            entries[(j, n)] = num / dn;
        }
    }
    Ok(TransformMatrix {
        entries,
        row_weights: w.to_vec(),
        col_weights: v.to_vec(),
        scaled,
    })
}

/// `H_{w}(Λ, Γ)`, the transform with the roles of the two sequences swapped,
/// built from the same differences (`γ_n − λ_j = −(λ_j − γ_n)`).
pub fn build_reverse(nodes: &WeightedNodeSet, ls: &LevelSet) -> Result<TransformMatrix> {
    let forward = build(nodes, ls)?;
    let v = nodes.weights();
    let w = ls.weights();
    let mut entries = DMatrix::zeros(nodes.len(), ls.len());
    for j in 0..ls.len() {
        for n in 0..nodes.len() {
            // U_{jn} = √(w_j v_n)/d, so the reverse entry is −U_{jn}.
            entries[(n, j)] = -forward.entries[(j, n)];
        }
    }
    Ok(TransformMatrix {
        entries,
        row_weights: v.to_vec(),
        col_weights: w.to_vec(),
        scaled: true,
    })
}

impl TransformMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    /// The scaled form of this matrix.
    pub fn scaled(&self) -> DMatrix<Complex64> {
        if self.scaled {
            return self.entries.clone();
        }
        let mut u = self.entries.clone();
        for j in 0..self.rows() {
            for n in 0..self.cols() {
                u[(j, n)] *= (self.row_weights[j] / self.col_weights[n]).sqrt();
            }
        }
        u
    }

    /// `b_j = Σ_n a_n v_n/(λ_j − γ_n)`, taking `a ∈ ℓ²_v` to `b ∈ ℓ²_w`.
    pub fn apply(&self, a: &[Complex64]) -> Result<Vec<Complex64>> {
        if a.len() != self.cols() {
            return Err(Error::ShapeMismatch {
                got: a.len(),
                expected: self.cols(),
            });
        }
        let mut out = Vec::with_capacity(self.rows());
        for j in 0..self.rows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &an) in a.iter().enumerate() {
                let e = self.entries[(j, n)];
                acc += if self.scaled {
                    e * an * (self.col_weights[n] / self.row_weights[j]).sqrt()
                } else {
                    e * an
                };
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The transform in standardized coordinates: `y = U x`.
    pub fn apply_standardized(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols() {
            return Err(Error::ShapeMismatch {
                got: x.len(),
                expected: self.cols(),
            });
        }
        let u = self.scaled();
        Ok((0..self.rows())
            .map(|j| (0..self.cols()).map(|n| u[(j, n)] * x[n]).sum())
            .collect())
    }

    /// `U*U`, indexed by the source nodes.
    pub fn col_gram(&self) -> DMatrix<Complex64> {
        let u = self.scaled();
        u.adjoint() * &u
    }

    /// `UU*`, indexed by the target nodes.
    pub fn row_gram(&self) -> DMatrix<Complex64> {
        let u = self.scaled();
        &u * u.adjoint()
    }

    pub fn unitarity_report(&self) -> UnitarityReport {
        self.unitarity_report_with(UNIT_TOL_REL)
    }

    /// Verdict thresholds at `tol_rel · max(rows, cols)`.
    pub fn unitarity_report_with(&self, tol_rel: f64) -> UnitarityReport {
        let (r, c) = (self.rows(), self.cols());
        let col_gram_dev = identity_deviation(self.col_gram());
        let row_gram_dev = identity_deviation(self.row_gram());
        let tolerance = tol_rel * r.max(c) as f64;
        let iso = col_gram_dev <= tolerance;
        let coiso = row_gram_dev <= tolerance;
        let verdict = match (iso, coiso) {
            (true, true) => Verdict::Unitary,
            (true, false) => Verdict::IsometryOnly,
            (false, true) => Verdict::CoisometryOnly,
            (false, false) if r != c => Verdict::DimensionMismatch,
            (false, false) => Verdict::NotIsometric,
        };
        UnitarityReport {
            col_gram_dev,
            row_gram_dev,
            dims: (r, c),
            verdict,
            tolerance,
        }
    }

    /// For each row `j`, `|(UU*)_{jj} − 1| = | Σ_n |U_{jn}|² − 1 |`: how far
    /// the normalized kernel at `λ_j` is from unit length.
    pub fn row_norm_deviations(&self) -> Vec<f64> {
        let u = self.scaled();
        u.row_iter()
            .map(|r| (r.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs())
            .collect()
    }

    /// For each row `j`, `max_k |(UU* − I)_{jk}|`.
    pub fn row_deviations(&self) -> Vec<f64> {
        let mut g = self.row_gram();
        for i in 0..g.nrows() {
            g[(i, i)] -= Complex64::new(1.0, 0.0);
        }
        g.row_iter()
            .map(|r| r.iter().map(|x| x.norm()).fold(0.0, f64::max))
            .collect()
    }

    /// Writes scaled entries as `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let u = self.scaled();
        writeln!(out, "row,col,re,im")?;
        for j in 0..self.rows() {
            for n in 0..self.cols() {
                let e = u[(j, n)];
                writeln!(out, "{j},{n},{},{}", e.re, e.im)?;
            }
        }
        Ok(())
    }
}

/// `‖G − I‖_F` for a square Gram matrix.
pub(crate) fn identity_deviation(mut g: DMatrix<Complex64>) -> f64 {
    for i in 0..g.nrows().min(g.ncols()) {
        g[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    g.norm()
}

/// `‖U* + H̃_w(Λ, Γ)‖_F` where `H̃` is the scaled reverse transform. On the
/// line both sequences are real and the adjoint is exactly the negated
/// reverse transform.
pub fn adjoint_identity_check(nodes: &WeightedNodeSet, ls: &LevelSet) -> Result<f64> {
    if nodes.geometry() != Geometry::Line {
        return Err(Error::GeometryMismatch { expected: "line" });
    }
    let u = build(nodes, ls)?.scaled();
    let rev = build_reverse(nodes, ls)?;
    Ok((u.adjoint() + rev.entries()).norm())
}
