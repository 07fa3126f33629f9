//! Index-based variant of the frame machinery for inner loops of searches.
//!
//! Columns are dense vectors over the ball of radius `column_radius`, and each
//! unitary becomes a lookup table. Results agree with the sparse path.

use num_complex::Complex64;

use super::{Frame, GroupAlgebraElement, L2Vec, RANK_TOLERANCE};
use crate::error::{FoelnerError, Result};
use crate::group::{Ball, GroupDescriptor};
use crate::linalg::SmallMatrix;

#[derive(Debug, Clone)]
pub struct DenseSpace {
    ball: Ball,
    column_radius: usize,
    inner_len: usize,
}

impl DenseSpace {
    pub fn new(
        descriptor: GroupDescriptor,
        ambient_radius: usize,
        column_radius: usize,
    ) -> Result<Self> {
        if column_radius + 1 > ambient_radius {
            return Err(FoelnerError::Headroom {
                support: column_radius,
                operator: 1,
                ambient: ambient_radius,
            });
        }
        let ball = descriptor.ball(ambient_radius);
        let inner_len = ball.prefix_len(column_radius);
        Ok(Self {
            ball,
            column_radius,
            inner_len,
        })
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.ball.descriptor()
    }

    pub fn ambient_radius(&self) -> usize {
        self.ball.radius()
    }

    pub fn column_radius(&self) -> usize {
        self.column_radius
    }

    /// Number of coordinates of a column.
    pub fn dim(&self) -> usize {
        self.inner_len
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn unitary(&self, u: &GroupAlgebraElement) -> Result<DenseUnitary> {
        let (g, lam) = u.single_unitary().ok_or(FoelnerError::NotUnitary)?;
        u.check_headroom(self.column_radius, self.ambient_radius())?;
        let elements = self.ball.elements();
        let table = elements[..self.inner_len]
            .iter()
            .map(|h| {
                let gh = g.multiply(h)?;
                Ok(self.ball.index_of(&gh).filter(|&i| i < self.inner_len))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseUnitary {
            element: u.clone(),
            lambda: lam,
            trace: u.trace(),
            table,
        })
    }
}

/// `λ L_g` as a map from column coordinates to column coordinates.
///
/// `None` marks an image that leaves the column ball; it meets no column.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    element: GroupAlgebraElement,
    lambda: Complex64,
    trace: Complex64,
    table: Vec<Option<usize>>,
}

impl DenseUnitary {
    pub fn element(&self) -> &GroupAlgebraElement {
        &self.element
    }

    pub fn trace(&self) -> Complex64 {
        self.trace
    }
}

/// `k` orthonormal columns stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFrame {
    k: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseFrame {
    /// Orthonormalizes `raw` with the same rank test as the sparse path.
    pub fn orthonormalize(space: &DenseSpace, raw: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = space.dim();
        if raw.is_empty() {
            return Err(FoelnerError::EmptySet("frame needs at least one column"));
        }
        let k = raw.len();
        let mut data = Vec::with_capacity(k * dim);
        for col in &raw {
            if col.len() != dim {
                return Err(FoelnerError::BadDimension(col.len()));
            }
            data.extend_from_slice(col);
        }
        let mut f = Self { k, dim, data };
        for j in 0..k {
            f.orthonormalize_column(j)?;
        }
        Ok(f)
    }

    /// Re-orthonormalizes column `j` against columns `0..j`.
    fn orthonormalize_column(&mut self, j: usize) -> Result<()> {
        let dim = self.dim;
        let (done, rest) = self.data.split_at_mut(j * dim);
        let v = &mut rest[..dim];
        let original: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if original == 0.0 {
            return Err(FoelnerError::RankDeficient { column: j });
        }
        for _ in 0..2 {
            for q in done.chunks_exact(dim) {
                let proj: Complex64 = v.iter().zip(q).map(|(a, b)| a * b.conj()).sum();
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= proj * b;
                }
            }
        }
        let residual: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if residual <= RANK_TOLERANCE * original {
            return Err(FoelnerError::RankDeficient { column: j });
        }
        let s = 1.0 / residual.sqrt();
        for a in v.iter_mut() {
            *a *= s;
        }
        Ok(())
    }

    pub fn from_frame(space: &DenseSpace, frame: &Frame) -> Result<Self> {
        if frame.descriptor() != space.descriptor() {
            return Err(FoelnerError::DescriptorMismatch {
                left: space.descriptor(),
                right: frame.descriptor(),
            });
        }
        if frame.support_radius() > space.column_radius {
            return Err(FoelnerError::RealizationRadius {
                support: frame.support_radius(),
                radius: space.column_radius,
            });
        }
        let dim = space.dim();
        let mut data = vec![Complex64::default(); frame.rank() * dim];
        for (j, col) in frame.columns().iter().enumerate() {
            for (w, &z) in col.iter() {
                let i = space.ball.index_of(w).expect("inside column ball");
                data[j * dim + i] = z;
            }
        }
        Ok(Self {
            k: frame.rank(),
            dim,
            data,
        })
    }

    pub fn to_frame(&self, space: &DenseSpace) -> Result<Frame> {
        let elements = space.ball.elements();
        let cols = (0..self.k)
            .map(|j| {
                L2Vec::from_terms(
                    space.descriptor(),
                    self.column(j)
                        .iter()
                        .enumerate()
                        .map(|(i, &z)| (elements[i].clone(), z)),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Frame::new(cols, space.ambient_radius())
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    /// Replaces column `j` by `v` and re-orthonormalizes columns `j..k`.
    pub fn replace_column(&mut self, j: usize, v: &[Complex64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(FoelnerError::BadDimension(v.len()));
        }
        self.data[j * self.dim..(j + 1) * self.dim].copy_from_slice(v);
        for i in j..self.k {
            self.orthonormalize_column(i)?;
        }
        Ok(())
    }

    /// `A[q][p] = ⟨U ξ_p, ξ_q⟩`.
    pub fn compress(&self, u: &DenseUnitary) -> SmallMatrix {
        let k = self.k;
        let mut a = SmallMatrix::zeros(k);
        for p in 0..k {
            let xp = self.column(p);
            for q in 0..k {
                let xq = self.column(q);
                let mut acc = Complex64::default();
                for (i, t) in u.table.iter().enumerate() {
                    if let Some(t) = *t {
                        acc += xp[i] * xq[t].conj();
                    }
                }
                a[(q, p)] = u.lambda * acc;
            }
        }
        a
    }

    /// `√2 · √(1 - τ_k(A*A))`.
    pub fn commutator_ratio(&self, u: &DenseUnitary) -> f64 {
        let a = self.compress(u);
        (2.0 * (1.0 - a.tau_norm_sq()).max(0.0)).sqrt()
    }

    pub fn trace_defect(&self, u: &DenseUnitary) -> f64 {
        (u.trace - self.compress(u).normalized_trace()).norm()
    }

    /// `max_U max(commutator ratio, trace defect)`.
    pub fn objective(&self, us: &[DenseUnitary]) -> f64 {
        us.iter()
            .map(|u| {
                let a = self.compress(u);
                let ratio = (2.0 * (1.0 - a.tau_norm_sq()).max(0.0)).sqrt();
                let defect = (u.trace - a.normalized_trace()).norm();
                ratio.max(defect)
            })
            .fold(0.0, f64::max)
    }
}
