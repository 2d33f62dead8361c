//! Sparse and dense linear algebra glue around `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatMut, Side};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize(a: &Point) -> Point {
    let n = norm(a);
    if n == 0.0 {
        *a
    } else {
        scale(a, 1.0 / n)
    }
}

/// Small symmetric matrices (n = 2 or 3) stored as full 3x3 arrays; unused
/// entries stay zero.
pub type Mat3 = [[f64; 3]; 3];

pub fn identity3(dim: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

#[inline]
pub fn mat_vec(m: &Mat3, v: &Point, dim: usize) -> Point {
    let mut out = [0.0; 3];
    for i in 0..dim {
        for j in 0..dim {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

pub fn det(m: &Mat3, dim: usize) -> f64 {
    match dim {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

pub fn inverse(m: &Mat3, dim: usize) -> Option<Mat3> {
    let d = det(m, dim);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut r = [[0.0; 3]; 3];
    if dim == 2 {
        r[0][0] = m[1][1] / d;
        r[0][1] = -m[0][1] / d;
        r[1][0] = -m[1][0] / d;
        r[1][1] = m[0][0] / d;
    } else {
        for i in 0..3 {
            for j in 0..3 {
                let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / d;
            }
        }
    }
    Some(r)
}

/// Smallest eigenvalue of a symmetric 2x2 or 3x3 matrix (closed form).
pub fn min_sym_eigenvalue(m: &Mat3, dim: usize) -> f64 {
    if dim == 2 {
        let tr = m[0][0] + m[1][1];
        let dt = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (0.25 * tr * tr - dt).max(0.0).sqrt();
        return 0.5 * tr - disc;
    }
    // trigonometric solution of the characteristic cubic
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (det(&b, 3) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Compressed sparse row matrix with sorted, duplicate-free columns per row.
#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr { nrows, ncols, indptr, indices, values }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[s..e].binary_search(&j) {
            Ok(k) => self.values[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// y = Aᵀ x
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut trips = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trips.push((j, i, v));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, trips)
    }

    /// Bilinear form xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    /// Linear combination a·self + b·other (same shape).
    pub fn combine(&self, a: f64, other: &Csr, b: f64) -> Csr {
        let mut trips = Vec::with_capacity(self.values.len() + other.values.len());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trips.push((i, j, a * v));
            }
            for (j, v) in other.row(i) {
                trips.push((i, j, b * v));
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, trips)
    }

    /// Dense copy of a principal submatrix indexed by `idx`.
    pub fn dense_submatrix(&self, idx: &[usize]) -> Mat<f64> {
        let mut local = vec![usize::MAX; self.ncols];
        for (k, &g) in idx.iter().enumerate() {
            local[g] = k;
        }
        let mut m = Mat::<f64>::zeros(idx.len(), idx.len());
        for (k, &g) in idx.iter().enumerate() {
            for (j, v) in self.row(g) {
                let l = local[j];
                if l != usize::MAX {
                    m[(k, l)] += v;
                }
            }
        }
        m
    }
}

/// Sparse LU factorization of a principal submatrix of a [`Csr`].
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    /// Factor A restricted to rows/cols `idx` (global -> local by position).
    pub fn factor_sub(a: &Csr, idx: &[usize]) -> Result<Self> {
        let mut local = vec![usize::MAX; a.ncols];
        for (k, &g) in idx.iter().enumerate() {
            local[g] = k;
        }
        let mut trips = Vec::new();
        for (k, &g) in idx.iter().enumerate() {
            for (j, v) in a.row(g) {
                let l = local[j];
                if l != usize::MAX {
                    trips.push(Triplet::new(k, l, v));
                }
            }
        }
        let n = idx.len();
        if n == 0 {
            return Err(Error::Solver("empty system".into()));
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(SparseLu { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        debug_assert_eq!(rhs.len(), self.n);
        let m = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        self.lu.solve_in_place(m);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(
                "non-finite solution; the discrete operator is singular or nearly so".into(),
            ));
        }
        Ok(())
    }

    /// Solves for several right-hand sides stored column-major in `rhs`.
    pub fn solve_many(&self, rhs: &mut [f64], ncols: usize) -> Result<()> {
        let m = MatMut::from_column_major_slice_mut(rhs, self.n, ncols);
        self.lu.solve_in_place(m);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(
                "non-finite solution; the discrete operator is singular or nearly so".into(),
            ));
        }
        Ok(())
    }
}

/// Generalized symmetric-definite eigenproblem S v = λ M v with M-orthonormal
/// eigenvectors (columns of the returned matrix), eigenvalues ascending.
pub fn generalized_sym_eigen(s: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = m.nrows();
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| Error::Gram("mass matrix is not positive definite".into()))?;
    let l = llt.L().to_owned();
    // C = L⁻¹ S L⁻ᵀ
    let linv = lower_inverse(&l);
    let c = &linv * s * linv.transpose();
    let c = symmetrize(&c);
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Gram(format!("eigen decomposition failed: {e:?}")))?;
    let q = evd.U().to_owned();
    let vals: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let v = linv.transpose() * q;
    Ok((vals, v))
}

pub fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn lower_inverse(l: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut inv = Mat::<f64>::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Eigen decomposition of a symmetric dense matrix, ascending eigenvalues.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let a = symmetrize(a);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Gram(format!("eigen decomposition failed: {e:?}")))?;
    let n = a.nrows();
    Ok(((0..n).map(|i| evd.S()[i]).collect(), evd.U().to_owned()))
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(a: &Mat<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    match sym_eigen(&ata) {
        Ok((vals, _)) => vals.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}

/// Ordinary least squares for small systems via normal equations with
/// Cholesky; returns coefficients.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut ata = Mat::<f64>::zeros(p, p);
    let mut atb = vec![0.0; p];
    for (r, &b) in rows.iter().zip(rhs) {
        for i in 0..p {
            atb[i] += r[i] * b;
            for j in 0..p {
                ata[(i, j)] += r[i] * r[j];
            }
        }
    }
    let llt = ata.llt(Side::Lower).ok()?;
    let mut x = Mat::<f64>::from_fn(p, 1, |i, _| atb[i]);
    llt.solve_in_place(x.as_mut());
    let out: Vec<f64> = (0..p).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}
