//! Finitely supported vectors in `ℓ²(G)` and the left regular representation.
//!
//! Operators are applied only when the result stays inside the ambient ball
//! (support radius + operator radius <= ambient radius), so every inner product
//! and Hilbert-Schmidt quantity computed downstream is exact rather than clipped.

mod dense;
mod frame;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{FoelnerError, Result};
use crate::group::{GroupDescriptor, Word};

pub use dense::{DenseFrame, DenseSpace, DenseUnitary};
pub use frame::{
    commutator_ratio, compress, gram_schmidt, trace_defect, CommutatorRatio, Frame, GRAM_TOLERANCE,
    RANK_TOLERANCE,
};

/// Amplitudes at or below this magnitude are dropped.
pub const PRUNE_EPS: f64 = 1e-15;

/// Tolerance for recognising a coefficient of modulus one.
const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct L2Vec {
    descriptor: GroupDescriptor,
    amplitudes: BTreeMap<Word, Complex64>,
    support_radius: usize,
}

impl L2Vec {
    pub fn zero(descriptor: GroupDescriptor) -> Self {
        Self {
            descriptor,
            amplitudes: BTreeMap::new(),
            support_radius: 0,
        }
    }

    /// The basis vector `δ_w`.
    pub fn delta(w: &Word) -> Self {
        let mut v = Self::zero(w.descriptor());
        v.support_radius = w.len();
        v.amplitudes.insert(w.clone(), Complex64::new(1.0, 0.0));
        v
    }

    pub fn from_terms(
        descriptor: GroupDescriptor,
        terms: impl IntoIterator<Item = (Word, Complex64)>,
    ) -> Result<Self> {
        let mut v = Self::zero(descriptor);
        for (w, z) in terms {
            v.add_at(w, z)?;
        }
        v.prune();
        Ok(v)
    }

    fn check(&self, w: &Word) -> Result<()> {
        if w.descriptor() != self.descriptor {
            return Err(FoelnerError::DescriptorMismatch {
                left: self.descriptor,
                right: w.descriptor(),
            });
        }
        Ok(())
    }

    fn check_vec(&self, other: &L2Vec) -> Result<()> {
        if other.descriptor != self.descriptor {
            return Err(FoelnerError::DescriptorMismatch {
                left: self.descriptor,
                right: other.descriptor,
            });
        }
        Ok(())
    }

    fn add_at(&mut self, w: Word, z: Complex64) -> Result<()> {
        self.check(&w)?;
        *self.amplitudes.entry(w).or_insert(Complex64::new(0.0, 0.0)) += z;
        Ok(())
    }

    fn prune(&mut self) {
        self.amplitudes.retain(|_, z| z.norm() > PRUNE_EPS);
        self.support_radius = self.amplitudes.keys().map(Word::len).max().unwrap_or(0);
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn get(&self, w: &Word) -> Complex64 {
        self.amplitudes.get(w).copied().unwrap_or_default()
    }

    pub fn amplitudes(&self) -> &BTreeMap<Word, Complex64> {
        &self.amplitudes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Largest word length in the support (0 for the zero vector).
    pub fn support_radius(&self) -> usize {
        self.support_radius
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨u, v⟩ = Σ u(w) conj(v(w))`, linear in the first argument.
    pub fn inner(&self, other: &L2Vec) -> Result<Complex64> {
        self.check_vec(other)?;
        let (small, large, flip) = if self.amplitudes.len() <= other.amplitudes.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, z) in &small.amplitudes {
            if let Some(y) = large.amplitudes.get(w) {
                acc += if flip { y * z.conj() } else { z * y.conj() };
            }
        }
        Ok(acc)
    }

    pub fn scaled(&self, c: Complex64) -> L2Vec {
        let mut out = self.clone();
        for z in out.amplitudes.values_mut() {
            *z *= c;
        }
        out.prune();
        out
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &L2Vec) -> Result<()> {
        self.check_vec(other)?;
        for (w, z) in &other.amplitudes {
            *self
                .amplitudes
                .entry(w.clone())
                .or_insert(Complex64::new(0.0, 0.0)) += c * z;
        }
        self.prune();
        Ok(())
    }

    pub fn normalized(&self) -> Option<L2Vec> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

impl Serialize for L2Vec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.amplitudes.len()))?;
        for (w, z) in &self.amplitudes {
            map.serialize_entry(&w.to_string(), &[z.re, z.im])?;
        }
        map.end()
    }
}

/// Finite sum `Σ λ_g L_g` acting on `ℓ²(G)` by left translation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement {
    descriptor: GroupDescriptor,
    coefficients: BTreeMap<Word, Complex64>,
    operator_radius: usize,
}

impl GroupAlgebraElement {
    /// The unitary `L_g`.
    pub fn unitary(g: &Word) -> Self {
        Self {
            descriptor: g.descriptor(),
            coefficients: BTreeMap::from([(g.clone(), Complex64::new(1.0, 0.0))]),
            operator_radius: g.len(),
        }
    }

    pub fn from_terms(
        descriptor: GroupDescriptor,
        terms: impl IntoIterator<Item = (Word, Complex64)>,
    ) -> Result<Self> {
        let mut coefficients: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (w, z) in terms {
            if w.descriptor() != descriptor {
                return Err(FoelnerError::DescriptorMismatch {
                    left: descriptor,
                    right: w.descriptor(),
                });
            }
            *coefficients.entry(w).or_default() += z;
        }
        coefficients.retain(|_, z| z.norm() > PRUNE_EPS);
        let operator_radius = coefficients.keys().map(Word::len).max().unwrap_or(0);
        Ok(Self {
            descriptor,
            coefficients,
            operator_radius,
        })
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn coefficients(&self) -> &BTreeMap<Word, Complex64> {
        &self.coefficients
    }

    pub fn operator_radius(&self) -> usize {
        self.operator_radius
    }

    /// `Some((g, λ))` iff the element is `λ L_g` with `|λ| = 1`.
    pub fn single_unitary(&self) -> Option<(&Word, Complex64)> {
        if self.coefficients.len() != 1 {
            return None;
        }
        let (g, &z) = self.coefficients.iter().next()?;
        ((z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL).then_some((g, z))
    }

    pub fn is_single_unitary(&self) -> bool {
        self.single_unitary().is_some()
    }

    /// `τ(x)`: the coefficient of the identity.
    pub fn trace(&self) -> Complex64 {
        self.coefficients
            .get(&self.descriptor.identity())
            .copied()
            .unwrap_or_default()
    }

    /// `x* = Σ conj(λ_g) L_{g^{-1}}`.
    pub fn adjoint(&self) -> Self {
        Self::from_terms(
            self.descriptor,
            self.coefficients
                .iter()
                .map(|(g, z)| (g.inverse(), z.conj())),
        )
        .expect("same descriptor")
    }

    pub fn check_headroom(&self, support: usize, ambient: usize) -> Result<()> {
        if support + self.operator_radius > ambient {
            return Err(FoelnerError::Headroom {
                support,
                operator: self.operator_radius,
                ambient,
            });
        }
        Ok(())
    }

    /// `Σ_g λ_g L_g v`, refusing rather than truncating when the result could
    /// leave the ball of radius `ambient`.
    pub fn apply(&self, v: &L2Vec, ambient: usize) -> Result<L2Vec> {
        if v.descriptor != self.descriptor {
            return Err(FoelnerError::DescriptorMismatch {
                left: self.descriptor,
                right: v.descriptor,
            });
        }
        self.check_headroom(v.support_radius, ambient)?;
        let mut out = L2Vec::zero(self.descriptor);
        for (g, lam) in &self.coefficients {
            for (h, z) in &v.amplitudes {
                *out.amplitudes
                    .entry(g.multiply(h)?)
                    .or_insert(Complex64::new(0.0, 0.0)) += lam * z;
            }
        }
        out.prune();
        Ok(out)
    }
}

impl fmt::Display for GroupAlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficients.is_empty() {
            return write!(f, "0");
        }
        for (i, (g, z)) in self.coefficients.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *z != Complex64::new(1.0, 0.0) {
                if z.im == 0.0 {
                    write!(f, "{}*", z.re)?;
                } else {
                    write!(f, "({}{:+}i)*", z.re, z.im)?;
                }
            }
            write!(f, "L_{g}")?;
        }
        Ok(())
    }
}
