//! Dense symmetric eigendecomposition and the cone projections used by the
//! solver and the universe-size estimator.
//!
//! Small matrices (order <= [`JACOBI_MAX_ORDER`]) go through cyclic Jacobi
//! rotations; larger ones through `faer`'s Householder tridiagonalization
//! followed by an implicit tridiagonal eigensolver. Both paths run
//! single-threaded so results are reproducible bit for bit.

use faer::dyn_stack::{GlobalPodBuffer, PodStack};
use faer::linalg::evd::{compute_hermitian_evd, compute_hermitian_evd_req, ComputeVectors};
use faer::{Mat, Parallelism};

use crate::error::{Error, Result};

/// Orthonormality tolerance on `U^T U - I` (max norm).
pub const TOL_ORTH: f64 = 1e-9;
/// Relative reconstruction tolerance on `A - U diag(w) U^T` (max norm).
pub const TOL_RECON: f64 = 1e-8;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the full Frobenius norm.
pub const JACOBI_REL_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 64;
pub const JACOBI_MAX_ORDER: usize = 64;

/// Real symmetric matrix in dense row-major storage. Every mutator writes
/// both `(i, j)` and `(j, i)`, so the two triangles never drift apart.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = 1.0;
        }
        m
    }

    /// Builds from the upper triangle `f(i, j)`, `i <= j`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Wraps a row-major square matrix; the two triangles are averaged.
    pub fn from_dense(order: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::ShapeMismatch(format!(
                "{} values for an order-{order} matrix",
                data.len()
            )));
        }
        for i in 0..order {
            for j in i + 1..order {
                let avg = 0.5 * (data[i * order + j] + data[j * order + i]);
                data[i * order + j] = avg;
                data[j * order + i] = avg;
            }
        }
        Ok(Self { order, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] += v;
        if i != j {
            self.data[j * self.order + i] += v;
        }
    }

    /// Row-major view of the full square.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius inner product `<A, B>`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.order, other.order);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        assert_eq!(self.order, other.order);
        Self {
            order: self.order,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.order, other.order);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn from_full_unchecked(order: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), order * order);
        Self { order, data }
    }
}

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    /// Column-major: eigenvector `k` occupies `vectors[k*n..(k+1)*n]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.order();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `sum_k f(w_k) u_k u_k^T` over eigenpairs with `f(w_k) != 0`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.order();
        let picked: Vec<(usize, f64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &w)| (k, f(w)))
            .filter(|&(_, s)| s != 0.0)
            .collect();
        if picked.is_empty() || n == 0 {
            return SymmetricMatrix::zeros(n);
        }
        let rank = picked.len();
        let u = Mat::<f64>::from_fn(n, rank, |i, c| self.vectors[picked[c].0 * n + i]);
        let us = Mat::<f64>::from_fn(n, rank, |i, c| picked[c].1 * self.vectors[picked[c].0 * n + i]);
        let mut out = Mat::<f64>::zeros(n, n);
        faer::linalg::matmul::matmul(
            out.as_mut(),
            u.as_ref(),
            us.as_ref().transpose(),
            None,
            1.0,
            Parallelism::None,
        );
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (out.read(i, j) + out.read(j, i));
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymmetricMatrix::from_full_unchecked(n, data)
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|w| w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Jacobi up to [`JACOBI_MAX_ORDER`], tridiagonal beyond.
    #[default]
    Auto,
    Jacobi,
    Tridiagonal,
}

pub fn eig_sym(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    eig_sym_with(a, EigenMethod::Auto)
}

pub fn eig_sym_with(a: &SymmetricMatrix, method: EigenMethod) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let method = match method {
        EigenMethod::Auto if a.order() <= JACOBI_MAX_ORDER => EigenMethod::Jacobi,
        EigenMethod::Auto => EigenMethod::Tridiagonal,
        m => m,
    };
    let (values, vectors) = match method {
        EigenMethod::Jacobi => jacobi(a)?,
        _ => tridiagonal(a),
    };
    Ok(sorted_descending(values, vectors))
}

fn sorted_descending(values: Vec<f64>, vectors: Vec<f64>) -> EigenDecomposition {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut sv = Vec::with_capacity(n);
    let mut svec = Vec::with_capacity(n * n);
    for &k in &idx {
        sv.push(values[k]);
        svec.extend_from_slice(&vectors[k * n..(k + 1) * n]);
    }
    EigenDecomposition {
        values: sv,
        vectors: svec,
    }
}

/// Cyclic Jacobi; returns unsorted eigenvalues and column-major vectors.
fn jacobi(a: &SymmetricMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.order();
    let mut m = a.as_slice().to_vec();
    // v is row-major here; column k is eigenvector k
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total = a.frobenius();
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > JACOBI_REL_TOL * total {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            vectors[k * n + i] = v[i * n + k];
        }
    }
    Ok((values, vectors))
}

fn tridiagonal(a: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.order();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let view = faer::mat::from_row_major_slice::<f64, _, _>(a.as_slice(), n, n);
    let mut s = faer::Col::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let params = Default::default();
    let req = compute_hermitian_evd_req::<f64>(n, ComputeVectors::Yes, Parallelism::None, params)
        .expect("workspace size overflow");
    let mut buf = GlobalPodBuffer::new(req);
    compute_hermitian_evd(
        view,
        s.as_mut(),
        Some(u.as_mut()),
        Parallelism::None,
        PodStack::new(&mut buf),
        params,
    );
    let values = (0..n).map(|k| s.read(k)).collect();
    let mut vectors = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            vectors[k * n + i] = u.read(i, k);
        }
    }
    (values, vectors)
}

/// Projection onto the positive semidefinite cone.
pub fn proj_psd(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(eig_sym(a)?.reconstruct_with(|w| w.max(0.0)))
}

/// Projection onto the negative semidefinite cone.
pub fn proj_nsd(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(eig_sym(a)?.reconstruct_with(|w| w.min(0.0)))
}

/// Entrywise `max(a_ij, 0)`.
pub fn proj_nonneg(a: &SymmetricMatrix) -> SymmetricMatrix {
    SymmetricMatrix::from_full_unchecked(a.order(), a.as_slice().iter().map(|v| v.max(0.0)).collect())
}

/// Both cone projections from a single decomposition.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub psd: SymmetricMatrix,
    pub nsd: SymmetricMatrix,
    pub values: Vec<f64>,
}

pub fn spectral_split(a: &SymmetricMatrix) -> Result<SpectralSplit> {
    let eig = eig_sym(a)?;
    Ok(SpectralSplit {
        psd: eig.reconstruct_with(|w| w.max(0.0)),
        nsd: eig.reconstruct_with(|w| w.min(0.0)),
        values: eig.values,
    })
}
