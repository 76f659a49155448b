//! Small dense complex Hermitian linear algebra and density operators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DichotomyError, Result};

pub type C64 = Complex64;

const JACOBI_MAX_SWEEPS: usize = 80;
/// Eigenvalues at or below this are treated as exact zeros (numerical rank).
pub const RANK_FLOOR: f64 = 1e-14;
const CLAMP_NEGATIVE: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const FULL_RANK_MIN: f64 = 1e-12;
const CLUSTER_ABS_FLOOR: f64 = 1e-14;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(DichotomyError::BadShape { dim: n, entries: data.len() });
        }
        Ok(CMat { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { n: self.n, data }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { n: self.n, data }
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let (n, m) = (self.n, other.n);
        let nm = n * m;
        let mut out = CMat::zeros(nm);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * nm + j * m + l] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

/// Hermitian matrix; symmetrized as (A + A†)/2 on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexHermitian {
    mat: CMat,
}

impl ComplexHermitian {
    pub fn new(mat: CMat) -> Self {
        let n = mat.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            out.data[i * n + i] = C64::new(mat.get(i, i).re, 0.0);
            for j in (i + 1)..n {
                let v = (mat.get(i, j) + mat.get(j, i).conj()) * 0.5;
                out.data[i * n + j] = v;
                out.data[j * n + i] = v.conj();
            }
        }
        ComplexHermitian { mat: out }
    }

    pub fn from_rows(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        if n == 0 {
            return Err(DichotomyError::Domain("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in re.iter().enumerate() {
            if row.len() != n {
                return Err(DichotomyError::BadShape { dim: n, entries: row.len() * n });
            }
            for (j, &x) in row.iter().enumerate() {
                let y = match im {
                    Some(rows) => *rows
                        .get(i)
                        .and_then(|r| r.get(j))
                        .ok_or(DichotomyError::BadShape { dim: n, entries: rows.len() })?,
                    None => 0.0,
                };
                data.push(C64::new(x, y));
            }
        }
        Ok(Self::new(CMat { n, data }))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMat::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        ComplexHermitian { mat: m }
    }

    pub fn zeros(n: usize) -> Self {
        ComplexHermitian { mat: CMat::zeros(n) }
    }

    pub fn identity(n: usize) -> Self {
        ComplexHermitian { mat: CMat::identity(n) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat.get(i, j)
    }

    pub fn as_cmat(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn add(&self, other: &Self) -> Self {
        ComplexHermitian { mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ComplexHermitian { mat: self.mat.sub(&other.mat) }
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexHermitian { mat: self.mat.scale(s) }
    }

    pub fn kron(&self, other: &Self) -> Self {
        ComplexHermitian { mat: self.mat.kron(&other.mat) }
    }

    /// B A B† for Hermitian-preserving conjugation.
    pub fn conjugate_by(&self, b: &CMat) -> Self {
        Self::new(b.mul(&self.mat).mul(&b.adjoint()))
    }

    /// Re Tr(A B).
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.get(i, j) * other.get(j, i)).re;
            }
        }
        s
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j).norm() <= tol))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.frobenius()
    }

    /// Frobenius norm of the commutator [A, B].
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        let ab = self.mat.mul(&other.mat);
        let ba = other.mat.mul(&self.mat);
        ab.sub(&ba).frobenius()
    }
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: CMat,
    /// Index groups of (numerically) equal eigenvalues.
    pub clusters: Vec<Vec<usize>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// U f(Λ) U†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexHermitian {
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.rebuild(&fv)
    }

    pub fn rebuild(&self, values: &[f64]) -> ComplexHermitian {
        let n = self.dim();
        let u = &self.vectors;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for (k, &v) in values.iter().enumerate() {
                    if v != 0.0 {
                        s += u.get(i, k) * u.get(j, k).conj() * v;
                    }
                }
                out.set(i, j, s);
                out.set(j, i, s.conj());
            }
        }
        ComplexHermitian::new(out)
    }

    /// Projector onto the span of the given eigenvector indices.
    pub fn projector(&self, idx: &[usize]) -> ComplexHermitian {
        let mut vals = vec![0.0; self.dim()];
        for &k in idx {
            vals[k] = 1.0;
        }
        self.rebuild(&vals)
    }

    /// Eigenvalues as seen by the other operator: |⟨u_i|v_j⟩|².
    pub fn overlaps(&self, other: &EigenDecomposition) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.vectors.get(k, i).conj() * other.vectors.get(k, j);
                }
                *o = s.norm_sqr();
            }
        }
        out
    }
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
pub fn eigh(a: &ComplexHermitian) -> Result<EigenDecomposition> {
    eigh_with_tol(a, 1e-12, 1e-9)
}

pub fn eigh_with_tol(a: &ComplexHermitian, tol: f64, cluster_tol: f64) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.mat.clone();
    let mut v = CMat::identity(n);
    let norm = m.frobenius();
    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let mag = apq.norm();
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // relative threshold keeps small eigenvalues accurate
                if mag == 0.0 || mag <= 1e-17 * (app.abs() * aqq.abs()).sqrt() || mag <= 1e-300 {
                    continue;
                }
                rotated = true;
                let phase = apq.conj() / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, phase) · [[c, s], [-s, c]] on (p, q)
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = phase * (-s);
                let gqq = phase * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, mkp * gpp + mkq * gqp);
                    m.set(k, q, mkp * gpq + mkq * gqq);
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * gpp + vkq * gqp);
                    v.set(k, q, vkp * gpq + vkq * gqq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, gpp.conj() * mpk + gqp.conj() * mqk);
                    m.set(q, k, gpq.conj() * mpk + gqq.conj() * mqk);
                }
                m.set(p, q, C64::new(0.0, 0.0));
                m.set(q, p, C64::new(0.0, 0.0));
                let dp = m.get(p, p).re;
                let dq = m.get(q, q).re;
                m.set(p, p, C64::new(dp, 0.0));
                m.set(q, q, C64::new(dq, 0.0));
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
    }
    let residual = off(&m);
    if residual > tol * norm.max(1e-300) && residual > 1e-300 {
        return Err(DichotomyError::NoConvergence { sweeps, off: residual });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMat::zeros(n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new_j, v.get(k, old_j));
        }
    }
    let clusters = cluster_sorted(&values, cluster_tol, CLUSTER_ABS_FLOOR * norm);
    Ok(EigenDecomposition { values, vectors, clusters })
}

fn cluster_sorted(values: &[f64], rel: f64, abs: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if let Some(last) = clusters.last_mut() {
            let prev = values[*last.last().unwrap()];
            if (prev - v).abs() <= rel * prev.abs().max(v.abs()) + abs {
                last.push(i);
                continue;
            }
        }
        clusters.push(vec![i]);
    }
    clusters
}

/// Unit-trace positive semidefinite operator with cached spectrum.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: ComplexHermitian,
    eigen: EigenDecomposition,
}

impl DensityOperator {
    pub fn new(matrix: ComplexHermitian) -> Result<Self> {
        let eig = eigh(&matrix)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -CLAMP_NEGATIVE {
            return Err(DichotomyError::NotPositive(min));
        }
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let clamped: Vec<f64> =
            eig.values.iter().map(|&v| if v <= RANK_FLOOR * top.max(1.0) { 0.0 } else { v }).collect();
        let tr: f64 = clamped.iter().sum();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(DichotomyError::BadTrace(tr));
        }
        Ok(Self::from_spectrum(EigenDecomposition {
            values: clamped.iter().map(|v| v / tr).collect(),
            vectors: eig.vectors,
            clusters: eig.clusters,
        }))
    }

    /// Builds from an eigendecomposition whose values are already a probability vector.
    fn from_spectrum(eigen: EigenDecomposition) -> Self {
        let matrix = eigen.rebuild(&eigen.values);
        let norm = matrix.frobenius();
        let clusters = cluster_sorted(&eigen.values, 1e-9, CLUSTER_ABS_FLOOR * norm);
        DensityOperator { matrix, eigen: EigenDecomposition { clusters, ..eigen } }
    }

    /// Diagonal state; the vector is normalized exactly.
    pub fn from_diag(p: &[f64]) -> Result<Self> {
        if p.is_empty() {
            return Err(DichotomyError::Domain("empty probability vector".into()));
        }
        if let Some(&bad) = p.iter().find(|&&x| !(x >= -CLAMP_NEGATIVE) || !x.is_finite()) {
            return Err(DichotomyError::NotPositive(bad));
        }
        let tr: f64 = p.iter().map(|v| v.max(0.0)).sum();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(DichotomyError::BadTrace(tr));
        }
        let n = p.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| p[j].partial_cmp(&p[i]).unwrap());
        let mut vectors = CMat::zeros(n);
        for (col, &row) in order.iter().enumerate() {
            vectors.set(row, col, C64::new(1.0, 0.0));
        }
        let values = order.iter().map(|&i| p[i].max(0.0) / tr).collect();
        Ok(Self::from_spectrum(EigenDecomposition { values, vectors, clusters: vec![] }))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_diag(&vec![1.0 / d as f64; d]).expect("uniform vector is a state")
    }

    /// Pure state |ψ⟩⟨ψ| from an unnormalized vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(DichotomyError::Domain("zero vector".into()));
        }
        let n = psi.len();
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, psi[i] * psi[j].conj() / (norm * norm));
            }
        }
        Self::new(ComplexHermitian::new(m))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexHermitian {
        &self.matrix
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigen.values.last().unwrap()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen.values[0]
    }

    pub fn rank(&self) -> usize {
        self.eigen.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// ρ^p on the support (zero eigenvalues stay zero for every p; p = 0 gives the support projector).
    pub fn power(&self, p: f64) -> ComplexHermitian {
        self.eigen.map(|v| if v > 0.0 { v.powf(p) } else { 0.0 })
    }

    pub fn sqrt(&self) -> ComplexHermitian {
        self.eigen.map(|v| v.max(0.0).sqrt())
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        Self::new(self.matrix.kron(&other.matrix))
    }

    pub fn commutes_with(&self, other: &Self, tol: f64) -> bool {
        self.matrix.commutator_norm(&other.matrix) <= tol
    }

    /// Diagonal entries if the matrix is diagonal in the computational basis.
    pub fn as_diagonal(&self, tol: f64) -> Option<Vec<f64>> {
        self.matrix.is_diagonal(tol).then(|| self.matrix.diagonal())
    }
}

/// Ordered pair (ρ, σ) with σ of full rank.
#[derive(Clone, Debug)]
pub struct Dichotomy {
    first: DensityOperator,
    second: DensityOperator,
}

impl Dichotomy {
    pub fn new(first: DensityOperator, second: DensityOperator) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(DichotomyError::DimensionMismatch(first.dim(), second.dim()));
        }
        let lmin = second.lambda_min();
        if lmin <= FULL_RANK_MIN {
            return Err(DichotomyError::NotFullRank(lmin));
        }
        Ok(Dichotomy { first, second })
    }

    pub fn classical(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(DensityOperator::from_diag(p)?, DensityOperator::from_diag(q)?)
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.first
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.second
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    /// (σ, ρ); requires ρ of full rank.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(self.second.clone(), self.first.clone())
    }

    pub fn is_commuting(&self) -> bool {
        self.first.commutes_with(&self.second, 1e-10)
    }

    /// Joint classical representation for commuting pairs: probability vectors in σ's eigenbasis.
    pub fn joint_distributions(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.is_commuting() {
            return None;
        }
        let es = self.second.eigen();
        let u = &es.vectors;
        let rho = self.first.matrix().conjugate_by(&u.adjoint());
        // within a degenerate σ-block ρ may still be non-diagonal: diagonalize block-wise
        let mut p = Vec::with_capacity(self.dim());
        let mut q = Vec::with_capacity(self.dim());
        for cl in &es.clusters {
            let k = cl.len();
            let mut block = CMat::zeros(k);
            for (a, &i) in cl.iter().enumerate() {
                for (b, &j) in cl.iter().enumerate() {
                    block.set(a, b, rho.get(i, j));
                }
            }
            let e = eigh(&ComplexHermitian::new(block)).ok()?;
            for (a, &i) in cl.iter().enumerate() {
                p.push(e.values[a].max(0.0));
                q.push(es.values[i]);
            }
        }
        let tp: f64 = p.iter().sum();
        Some((p.iter().map(|v| v / tp).collect(), q))
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        Self::new(self.first.kron(&other.first)?, self.second.kron(&other.second)?)
    }
}

/// Σ Π X Π over the eigenspace projectors of `basis_of`.
pub fn pinch(x: &ComplexHermitian, basis_of: &DensityOperator) -> Result<ComplexHermitian> {
    if x.dim() != basis_of.dim() {
        return Err(DichotomyError::DimensionMismatch(x.dim(), basis_of.dim()));
    }
    let e = basis_of.eigen();
    let u = &e.vectors;
    let n = x.dim();
    // work in the eigenbasis, zero inter-cluster blocks, rotate back
    let y = x.conjugate_by(&u.adjoint());
    let mut label = vec![0usize; n];
    for (c, cl) in e.clusters.iter().enumerate() {
        for &i in cl {
            label[i] = c;
        }
    }
    let mut z = CMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if label[i] == label[j] {
                z.set(i, j, y.get(i, j));
            }
        }
    }
    Ok(ComplexHermitian::new(z).conjugate_by(u))
}

pub fn pinch_state(rho: &DensityOperator, basis_of: &DensityOperator) -> Result<DensityOperator> {
    DensityOperator::new(pinch(rho.matrix(), basis_of)?)
}

pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(DichotomyError::DimensionMismatch(a.dim(), b.dim()));
    }
    let e = eigh(&a.matrix().sub(b.matrix()))?;
    Ok((0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>()).min(1.0))
}

/// (Tr √(√a b √a))².
pub fn fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(DichotomyError::DimensionMismatch(a.dim(), b.dim()));
    }
    let sa = a.sqrt();
    let inner = b.matrix().conjugate_by(sa.as_cmat());
    let e = eigh(&inner)?;
    let tr: f64 = e.values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((tr * tr).min(1.0))
}

/// e^{−βH}/Z with the spectrum shifted by its minimum.
pub fn gibbs_state(h: &ComplexHermitian, beta: f64) -> Result<DensityOperator> {
    if !beta.is_finite() {
        return Err(DichotomyError::Domain(format!("inverse temperature {beta}")));
    }
    let e = eigh(h)?;
    let shift = if beta >= 0.0 {
        *e.values.last().unwrap()
    } else {
        e.values[0]
    };
    let w: Vec<f64> = e.values.iter().map(|&v| (-beta * (v - shift)).exp()).collect();
    let z: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| x / z).collect();
    let matrix = e.rebuild(&probs);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&i, &j| probs[j].partial_cmp(&probs[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| probs[i]).collect();
    let n = probs.len();
    let mut vectors = CMat::zeros(n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new_j, e.vectors.get(k, old_j));
        }
    }
    let clusters = cluster_sorted(&values, 1e-9, CLUSTER_ABS_FLOOR);
    Ok(DensityOperator { matrix, eigen: EigenDecomposition { values, vectors, clusters } })
}

/// ln k! for k = 0..=n.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// One type class of an iid tensor power, stored in the log domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeClass {
    pub counts: Vec<usize>,
    pub log_multiplicity: f64,
    /// ln Π p_i^{k_i} for each distribution supplied.
    pub log_values: Vec<f64>,
}

impl TypeClass {
    pub fn multiplicity(&self) -> f64 {
        self.log_multiplicity.exp()
    }

    pub fn value(&self) -> f64 {
        self.log_values[0].exp()
    }

    /// ln of the total probability mass of the class under distribution `k`.
    pub fn log_mass(&self, k: usize) -> f64 {
        self.log_multiplicity + self.log_values[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeClassSpectrum {
    pub n: usize,
    pub classes: Vec<TypeClass>,
}

impl TypeClassSpectrum {
    pub fn total_mass(&self, k: usize) -> f64 {
        self.classes.iter().map(|c| c.log_mass(k).exp()).sum()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

const MAX_CLASSES: usize = 5_000_000;

/// Eigenvalues of p^{⊗n} aggregated by type class.
pub fn tensor_power_commuting(p: &[f64], n: usize) -> Result<TypeClassSpectrum> {
    tensor_power_joint(&[p], n)
}

/// Joint type classes of several distributions on the same alphabet.
pub fn tensor_power_joint(dists: &[&[f64]], n: usize) -> Result<TypeClassSpectrum> {
    let d = dists.first().map(|p| p.len()).unwrap_or(0);
    if d == 0 || n == 0 {
        return Err(DichotomyError::Domain("need a non-empty distribution and n >= 1".into()));
    }
    if let Some(p) = dists.iter().find(|p| p.len() != d) {
        return Err(DichotomyError::DimensionMismatch(d, p.len()));
    }
    // C(n+d-1, d-1) compositions
    let mut count = 1.0f64;
    for i in 1..d {
        count *= (n + i) as f64 / i as f64;
    }
    if count > MAX_CLASSES as f64 {
        return Err(DichotomyError::TooLarge(format!("{count:.0} type classes for d={d}, n={n}")));
    }
    let lf = log_factorials(n);
    let logs: Vec<Vec<f64>> =
        dists.iter().map(|p| p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect()).collect();
    let mut classes = Vec::with_capacity(count as usize);
    let mut k = vec![0usize; d];
    compositions(n, 0, &mut k, &mut |k: &[usize]| {
        let log_mult = lf[n] - k.iter().map(|&c| lf[c]).sum::<f64>();
        let log_values = logs
            .iter()
            .map(|lp| k.iter().zip(lp).map(|(&c, &l)| if c == 0 { 0.0 } else { c as f64 * l }).sum())
            .collect();
        classes.push(TypeClass { counts: k.to_vec(), log_multiplicity: log_mult, log_values });
    });
    Ok(TypeClassSpectrum { n, classes })
}

fn compositions(rem: usize, pos: usize, k: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    let d = k.len();
    if pos == d - 1 {
        k[pos] = rem;
        f(k);
        return;
    }
    for c in (0..=rem).rev() {
        k[pos] = c;
        compositions(rem - c, pos + 1, k, f);
    }
}

/// JSON matrix layout `{"dim": d, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_hermitian(h: &ComplexHermitian) -> Self {
        let n = h.dim();
        let re = (0..n).map(|i| (0..n).map(|j| h.get(i, j).re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| h.get(i, j).im).collect()).collect();
        MatrixJson { dim: n, re, im: Some(im) }
    }

    pub fn to_hermitian(&self) -> Result<ComplexHermitian> {
        if self.re.len() != self.dim {
            return Err(DichotomyError::BadShape { dim: self.dim, entries: self.re.len() * self.dim });
        }
        ComplexHermitian::from_rows(&self.re, self.im.as_deref())
    }
}
