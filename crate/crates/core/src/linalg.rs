//! Small dense complex matrices: compressions `eUe`, their SVD and polar factors.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{FoelnerError, Result};

pub const MAX_SVD_DIM: usize = 256;
pub const MAX_SWEEPS: usize = 200;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square `k x k` complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SmallMatrix {
    k: usize,
    data: Vec<Complex64>,
}

impl SmallMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            data: vec![ZERO; k * k],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(FoelnerError::BadDimension(k));
        }
        Ok(Self {
            k,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.k);
        for i in 0..self.k {
            for j in 0..self.k {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.k).map(|i| self[(i, i)]).sum()
    }

    /// `τ_k(M) = Tr(M) / k`.
    pub fn normalized_trace(&self) -> Complex64 {
        self.trace() / self.k as f64
    }

    /// Squared Frobenius norm `Tr(M*M)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `‖M‖²_{τ_k} = τ_k(M*M)`.
    pub fn tau_norm_sq(&self) -> f64 {
        self.frobenius_sq() / self.k as f64
    }

    pub fn tau_norm(&self) -> f64 {
        self.tau_norm_sq().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.k)) <= tol
    }

    /// Operator norm, the largest singular value.
    pub fn op_norm(&self) -> Result<f64> {
        Ok(svd_small(self)?.sigma.first().copied().unwrap_or(0.0))
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.k).map(|i| self[(i, j)]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.k.max(1)).map(<[_]>::to_vec).collect()
    }
}

impl Index<(usize, usize)> for SmallMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.k + c]
    }
}

impl IndexMut<(usize, usize)> for SmallMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.k + c]
    }
}

impl Mul for &SmallMatrix {
    type Output = SmallMatrix;

    fn mul(self, rhs: &SmallMatrix) -> SmallMatrix {
        assert_eq!(self.k, rhs.k, "dimension mismatch");
        let k = self.k;
        let mut out = SmallMatrix::zeros(k);
        for i in 0..k {
            for l in 0..k {
                let a = self[(i, l)];
                if a == ZERO {
                    continue;
                }
                for j in 0..k {
                    out.data[i * k + j] += a * rhs.data[l * k + j];
                }
            }
        }
        out
    }
}

impl Sub for &SmallMatrix {
    type Output = SmallMatrix;

    fn sub(self, rhs: &SmallMatrix) -> SmallMatrix {
        assert_eq!(self.k, rhs.k, "dimension mismatch");
        SmallMatrix {
            k: self.k,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for SmallMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Serialize for SmallMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.k))?;
        for row in self.rows() {
            let pairs: Vec<[f64; 2]> = row.iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&pairs)?;
        }
        seq.end()
    }
}

/// `A = U · diag(sigma) · V*` with `sigma` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: SmallMatrix,
    pub sigma: Vec<f64>,
    pub v: SmallMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> SmallMatrix {
        let us = &self.u * &SmallMatrix::diagonal(&self.sigma);
        &us * &self.v.adjoint()
    }
}

fn dot_conj(cols: &[Vec<Complex64>], p: usize, q: usize) -> Complex64 {
    cols[p]
        .iter()
        .zip(&cols[q])
        .map(|(x, y)| x.conj() * y)
        .sum()
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Cyclic one-sided Jacobi SVD.
///
/// Columns of `G = A V` are rotated pairwise until mutually orthogonal; then
/// `sigma_j = ‖g_j‖` and `u_j = g_j / sigma_j`. Left vectors for zero singular
/// values are completed against the standard basis.
pub fn svd_small(a: &SmallMatrix) -> Result<Svd> {
    let k = a.dim();
    if k == 0 || k > MAX_SVD_DIM {
        return Err(FoelnerError::BadDimension(k));
    }
    let mut g: Vec<Vec<Complex64>> = (0..k).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..k)
        .map(|j| (0..k).map(|i| if i == j { ONE } else { ZERO }).collect())
        .collect();
    let tol = 1e-15;

    let mut converged = k == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let alpha = norm_sq(&g[p]);
                let beta = norm_sq(&g[q]);
                let gamma = dot_conj(&g, p, q);
                let mag = gamma.norm();
                if mag <= tol * (alpha * beta).sqrt() || mag == 0.0 {
                    continue;
                }
                rotated = true;
                // Strip the phase so the 2x2 Gram block is real symmetric.
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut g, &mut v] {
                    for i in 0..k {
                        let xp = m[p][i];
                        let xq = m[q][i] * phase.conj();
                        m[p][i] = xp * c - xq * s;
                        m[q][i] = xp * s + xq * c;
                    }
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(FoelnerError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..k).collect();
    let sig: Vec<f64> = g.iter().map(|c| norm_sq(c).sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]).then(i.cmp(&j)));

    let scale = sig
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    let mut v_cols = Vec::with_capacity(k);
    for &j in &order {
        sigma.push(sig[j]);
        v_cols.push(v[j].clone());
        if sig[j] > 1e-14 * scale {
            u_cols.push(g[j].iter().map(|z| z / sig[j]).collect());
        } else {
            u_cols.push(Vec::new());
        }
    }
    complete_basis(&mut u_cols, k);

    let mut u = SmallMatrix::zeros(k);
    let mut vm = SmallMatrix::zeros(k);
    for j in 0..k {
        for i in 0..k {
            u[(i, j)] = u_cols[j][i];
            vm[(i, j)] = v_cols[j][i];
        }
    }
    Ok(Svd { u, sigma, v: vm })
}

/// Fill empty columns with unit vectors orthogonal to the others (deterministic).
fn complete_basis(cols: &mut [Vec<Complex64>], k: usize) {
    let mut candidate = 0;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(candidate < k, "basis completion ran out of candidates");
            let mut e = vec![ZERO; k];
            e[candidate] = ONE;
            candidate += 1;
            // Two passes of Gram-Schmidt against every filled column.
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let proj: Complex64 = other.iter().zip(&e).map(|(o, x)| o.conj() * x).sum();
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let n = norm_sq(&e).sqrt();
            if n > 1e-6 {
                cols[j] = e.into_iter().map(|z| z / n).collect();
                break;
            }
        }
    }
}

/// Polar factor of `A` and `‖A - W‖_{τ_k} = sqrt((1/k) Σ (1 - σ_i)^2)`.
///
/// `W = U V*` minimizes the normalized Hilbert-Schmidt distance to `A` over
/// all unitaries.
pub fn nearest_unitary(a: &SmallMatrix) -> Result<(SmallMatrix, f64)> {
    let svd = svd_small(a)?;
    let w = &svd.u * &svd.v.adjoint();
    let k = a.dim() as f64;
    let dist = (svd.sigma.iter().map(|s| (1.0 - s).powi(2)).sum::<f64>() / k).sqrt();
    Ok((w, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(k: usize, rng: &mut impl Rng) -> SmallMatrix {
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            })
            .collect();
        SmallMatrix::from_rows(&rows).unwrap()
    }

    fn check_svd(a: &SmallMatrix) {
        let svd = svd_small(a).unwrap();
        let k = a.dim();
        assert!(svd.reconstruct().max_abs_diff(a) <= 1e-10 * k as f64);
        assert!(svd.u.is_unitary(1e-10), "U not unitary");
        assert!(svd.v.is_unitary(1e-10), "V not unitary");
        assert!(svd.sigma.windows(2).all(|p| p[0] >= p[1]));
        assert!(svd.sigma.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn identity_svd() {
        let svd = svd_small(&SmallMatrix::identity(4)).unwrap();
        assert_eq!(svd.sigma, vec![1.0; 4]);
        assert!(svd.u.max_abs_diff(&SmallMatrix::identity(4)) < 1e-15);
        assert!(svd.v.max_abs_diff(&SmallMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn diagonal_svd() {
        let svd = svd_small(&SmallMatrix::diagonal(&[0.5, 2.0])).unwrap();
        assert!((svd.sigma[0] - 2.0).abs() < 1e-15);
        assert!((svd.sigma[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_svds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [1, 2, 3, 5, 8, 17] {
            for _ in 0..5 {
                check_svd(&random_matrix(k, &mut rng));
            }
        }
    }

    #[test]
    fn rank_deficient_svd() {
        let a = SmallMatrix::from_real_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        check_svd(&a);
        check_svd(&SmallMatrix::zeros(3));
        let sub = SmallMatrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        check_svd(&sub);
    }

    #[test]
    fn oversized_matrix_rejected() {
        assert!(matches!(
            svd_small(&SmallMatrix::zeros(257)),
            Err(FoelnerError::BadDimension(257))
        ));
    }

    #[test]
    fn scalar_polar_factor() {
        let a = SmallMatrix::from_real_rows(&[vec![0.5]]).unwrap();
        let (w, d) = nearest_unitary(&a).unwrap();
        assert!((w[(0, 0)] - ONE).norm() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unitary_is_its_own_polar_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (u, _) = nearest_unitary(&random_matrix(4, &mut rng)).unwrap();
        let (w, d) = nearest_unitary(&u).unwrap();
        assert!(w.max_abs_diff(&u) < 1e-10);
        assert!(d < 1e-12);
    }

    #[test]
    fn distance_matches_direct_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in [2, 3, 6] {
            let a = random_matrix(k, &mut rng);
            let (w, d) = nearest_unitary(&a).unwrap();
            assert!(w.is_unitary(1e-10));
            assert!(((&a - &w).tau_norm() - d).abs() < 1e-10);
        }
    }

    #[test]
    fn appending_unit_singular_values_shrinks_distance() {
        let base = [0.2, 0.7, 1.3];
        let (_, d0) = nearest_unitary(&SmallMatrix::diagonal(&base)).unwrap();
        let mut ext = base.to_vec();
        ext.extend([1.0, 1.0]);
        let (_, d1) = nearest_unitary(&SmallMatrix::diagonal(&ext)).unwrap();
        assert!(d1 <= d0);
    }

    #[test]
    fn serializes_as_pairs() {
        let m = SmallMatrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            "[[[0.0,0.0],[0.0,0.0]],[[1.0,0.0],[0.0,0.0]]]"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn svd_reconstructs(seed in any::<u64>(), k in 1usize..7) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                check_svd(&random_matrix(k, &mut rng));
            }
        }
    }
}
