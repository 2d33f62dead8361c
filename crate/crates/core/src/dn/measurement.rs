use faer::Mat;
use serde::Serialize;

use crate::dn::dictionary::Dictionary;
use crate::dn::fractional::FractionalSpace;
use crate::dn::trace::FluxTrace;
use crate::dn::LinearizedOperator;
use crate::error::{Error, Result};
use crate::linalg::{generalized_sym_eigen, symmetrize};
use crate::table::{num, Table};

/// A linearized DN operator sampled on a dictionary supported in S.
#[derive(Clone, Debug)]
pub struct BoundaryOperatorSample {
    pub lambda: f64,
    pub description: String,
    pub patch_id: String,
    /// A[i][j] = ⟨Λ dⱼ, dᵢ⟩.
    pub matrix: Mat<f64>,
    /// H^{1/2} Gram of the dictionary.
    pub gram_plus: Mat<f64>,
    /// Dual-of-dictionary H^{-1/2} Gram: the inverse of `gram_plus`.
    pub gram_minus: Mat<f64>,
    pub responses: Vec<FluxTrace>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    lambda: f64,
    background: &'a str,
    patch: &'a str,
    dictionary_size: usize,
    layout: &'a str,
}

fn invert_spd(g: &Mat<f64>) -> Result<Mat<f64>> {
    let n = g.nrows();
    let (vals, v) = crate::linalg::sym_eigen(g)?;
    if vals.first().copied().unwrap_or(0.0) <= 1e-14 * vals.last().copied().unwrap_or(1.0) {
        return Err(Error::Gram("dictionary Gram matrix is singular".into()));
    }
    Ok(Mat::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)] / vals[k]).sum()))
}

/// Applies the operator to every dictionary column.
pub fn sample_operator(
    op: &LinearizedOperator<'_>,
    dict: &Dictionary,
    space: &FractionalSpace,
) -> Result<BoundaryOperatorSample> {
    if dict.is_empty() {
        return Err(Error::Gram("empty dictionary".into()));
    }
    let responses = op.apply_many(&dict.columns)?;
    let k = dict.len();
    let matrix = Mat::from_fn(k, k, |i, j| responses[j].pair(&dict.columns[i]));
    let gram_plus = dict.gram(space);
    let gram_minus = if dict.orthonormal { Mat::identity(k, k) } else { invert_spd(&gram_plus)? };
    Ok(BoundaryOperatorSample {
        lambda: op.lambda,
        description: op.description.clone(),
        patch_id: dict.patch_id.clone(),
        matrix,
        gram_plus,
        gram_minus,
        responses,
    })
}

impl BoundaryOperatorSample {
    /// Operator norm from the dictionary span (H^{1/2}) to its dual.
    pub fn operator_norm(&self) -> Result<f64> {
        norm_of(&self.matrix, &self.gram_plus, &self.gram_minus)
    }

    /// The matrix as a table (columns d0, d1, ...) plus a JSON sidecar.
    pub fn table(&self) -> (Table, String) {
        let k = self.matrix.ncols();
        let names: Vec<String> = (0..k).map(|j| format!("d{j}")).collect();
        let mut t = Table::new(&names.iter().map(String::as_str).collect::<Vec<_>>());
        for i in 0..self.matrix.nrows() {
            t.push((0..k).map(|j| num(self.matrix[(i, j)])).collect());
        }
        let side = Sidecar {
            lambda: self.lambda,
            background: &self.description,
            patch: &self.patch_id,
            dictionary_size: self.matrix.nrows(),
            layout: "row i, column j holds <Lambda d_j, d_i>",
        };
        (t, serde_json::to_string_pretty(&side).unwrap_or_default())
    }
}

fn norm_of(da: &Mat<f64>, gp: &Mat<f64>, gm: &Mat<f64>) -> Result<f64> {
    let lhs = symmetrize(&(da.transpose() * gm * da));
    let (vals, _) = generalized_sym_eigen(&lhs, gp)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// ‖Λ¹ − Λ²‖ from the H^{1/2} dictionary span to H^{-1/2}(S): square root of
/// the largest generalized eigenvalue of ΔAᵀ G₋ ΔA v = μ G₊ v.
pub fn measurement_functional(s1: &BoundaryOperatorSample, s2: &BoundaryOperatorSample) -> Result<f64> {
    if s1.matrix.nrows() != s2.matrix.nrows() || s1.patch_id != s2.patch_id {
        return Err(Error::Mismatch("operator samples use different dictionaries".into()));
    }
    let da = &s1.matrix - &s2.matrix;
    norm_of(&da, &s1.gram_plus, &s1.gram_minus)
}
