//! Finite dictionaries of boundary functions supported in a patch,
//! orthonormalized in H^{1/2}.

use faer::{Mat, Side};

use crate::dn::fractional::FractionalSpace;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPatch, Mesh};
use crate::linalg::generalized_sym_eigen;

#[derive(Clone, Debug, PartialEq)]
pub enum DictionaryKind {
    /// cos kθ, sin kθ for 0 <= k <= kmax on a full circle.
    Fourier { kmax: usize },
    /// Lowest Dirichlet Laplace–Beltrami modes of the patch.
    PatchModes { count: usize },
}

/// Columns are nodal boundary functions vanishing outside the patch.
#[derive(Clone, Debug)]
pub struct Dictionary {
    pub kind: DictionaryKind,
    pub patch_id: String,
    pub columns: Vec<Vec<f64>>,
    /// Whether the columns are H^{1/2}-orthonormal.
    pub orthonormal: bool,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Raw (non-orthonormalized) dictionary.
    pub fn raw(mesh: &Mesh, patch: &BoundaryPatch, kind: DictionaryKind) -> Result<Self> {
        let columns = match &kind {
            DictionaryKind::Fourier { kmax } => {
                if mesh.dim != 2 || !patch.is_full() {
                    return Err(Error::Unsupported(
                        "the Fourier dictionary needs a two-dimensional full-boundary patch".into(),
                    ));
                }
                let ang: Vec<f64> = mesh
                    .boundary_nodes
                    .iter()
                    .map(|&i| {
                        let p = crate::linalg::sub(&mesh.nodes[i], &patch.center);
                        p[1].atan2(p[0])
                    })
                    .collect();
                let mut cols = vec![vec![1.0; ang.len()]];
                for k in 1..=*kmax {
                    cols.push(ang.iter().map(|t| (k as f64 * t).cos()).collect());
                    cols.push(ang.iter().map(|t| (k as f64 * t).sin()).collect());
                }
                cols
            }
            DictionaryKind::PatchModes { count } => patch_modes(mesh, patch, *count)?,
        };
        Ok(Dictionary { kind, patch_id: patch.id.clone(), columns, orthonormal: false })
    }

    /// H^{1/2}-orthonormalized dictionary (Cholesky of the Gram matrix).
    pub fn build(mesh: &Mesh, patch: &BoundaryPatch, kind: DictionaryKind, space: &FractionalSpace) -> Result<Self> {
        let mut d = Self::raw(mesh, patch, kind)?;
        d.orthonormalize(space)?;
        Ok(d)
    }

    pub fn orthonormalize(&mut self, space: &FractionalSpace) -> Result<()> {
        let g = space.gram_plus(&self.columns);
        let k = g.nrows();
        let diag_max = (0..k).map(|i| g[(i, i)]).fold(0.0, f64::max);
        let llt = g
            .llt(Side::Lower)
            .map_err(|_| Error::Gram("dictionary is rank deficient".into()))?;
        let l = llt.L();
        let diag_min = (0..k).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if diag_min < 1e-12 * diag_max {
            return Err(Error::Gram("dictionary is numerically rank deficient".into()));
        }
        // new columns E = D L^{-T}: solve L eᵀ rows by forward substitution
        let nb = self.columns.first().map_or(0, |c| c.len());
        let mut out = vec![vec![0.0; nb]; k];
        for j in 0..k {
            for node in 0..nb {
                let mut s = self.columns[j][node];
                for m in 0..j {
                    s -= l[(j, m)] * out[m][node];
                }
                out[j][node] = s / l[(j, j)];
            }
        }
        self.columns = out;
        self.orthonormal = true;
        Ok(())
    }

    pub fn gram(&self, space: &FractionalSpace) -> Mat<f64> {
        space.gram_plus(&self.columns)
    }
}

/// Lowest `count` eigenvectors of the boundary Laplace–Beltrami operator
/// with zero values at boundary nodes outside the patch.
fn patch_modes(mesh: &Mesh, patch: &BoundaryPatch, count: usize) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..mesh.n_boundary()).filter(|&k| patch.node_mask[k]).collect();
    if idx.len() < count {
        return Err(Error::Gram(format!(
            "patch {} has {} nodes, fewer than the {count} requested dictionary functions",
            patch.id,
            idx.len()
        )));
    }
    let (m, s) = crate::dn::fractional::boundary_matrices(mesh);
    let sub = |a: &Mat<f64>| Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])]);
    let (_, v) = generalized_sym_eigen(&sub(&s), &sub(&m))?;
    let mut cols = Vec::with_capacity(count);
    for k in 0..count {
        let mut f = vec![0.0; mesh.n_boundary()];
        // fix the sign so the mode is deterministic
        let mut sign = 1.0;
        let mut best = 0.0;
        for (l, &node) in idx.iter().enumerate() {
            if v[(l, k)].abs() > best + 1e-12 {
                best = v[(l, k)].abs();
                sign = v[(l, k)].signum();
            }
            f[node] = v[(l, k)];
        }
        for x in f.iter_mut() {
            *x *= sign;
        }
        cols.push(f);
    }
    Ok(cols)
}
