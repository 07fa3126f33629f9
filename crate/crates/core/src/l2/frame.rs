use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{GroupAlgebraElement, L2Vec};
use crate::error::{FoelnerError, Result};
use crate::group::{GroupDescriptor, Word};
use crate::linalg::SmallMatrix;

/// Maximum entrywise deviation of a frame's Gram matrix from the identity.
pub const GRAM_TOLERANCE: f64 = 1e-10;

/// A column whose squared residual after orthogonalization falls below this
/// fraction of its squared norm is treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Orthonormal columns `ξ_1, ..., ξ_k` spanning the range of a rank-`k` projection.
///
/// Every column is supported in the ball of radius `ambient_radius - 1`, so any
/// standard generator can be applied without leaving the ambient ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    #[serde(serialize_with = "crate::serde_display")]
    descriptor: GroupDescriptor,
    ambient_radius: usize,
    columns: Vec<L2Vec>,
}

impl Frame {
    pub fn new(columns: Vec<L2Vec>, ambient_radius: usize) -> Result<Self> {
        let frame = Self::unchecked(columns, ambient_radius)?;
        let gram = frame.gram()?;
        let deviation = gram.max_abs_diff(&SmallMatrix::identity(frame.rank()));
        if !(deviation <= GRAM_TOLERANCE) {
            return Err(FoelnerError::NotOrthonormal { deviation });
        }
        Ok(frame)
    }

    fn unchecked(columns: Vec<L2Vec>, ambient_radius: usize) -> Result<Self> {
        let first = columns
            .first()
            .ok_or(FoelnerError::EmptySet("frame needs at least one column"))?;
        let descriptor = first.descriptor();
        for c in &columns {
            if c.descriptor() != descriptor {
                return Err(FoelnerError::DescriptorMismatch {
                    left: descriptor,
                    right: c.descriptor(),
                });
            }
            if c.support_radius() + 1 > ambient_radius {
                return Err(FoelnerError::Headroom {
                    support: c.support_radius(),
                    operator: 1,
                    ambient: ambient_radius,
                });
            }
        }
        Ok(Self {
            descriptor,
            ambient_radius,
            columns,
        })
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn ambient_radius(&self) -> usize {
        self.ambient_radius
    }

    pub fn columns(&self) -> &[L2Vec] {
        &self.columns
    }

    pub fn support_radius(&self) -> usize {
        self.columns
            .iter()
            .map(L2Vec::support_radius)
            .max()
            .unwrap_or(0)
    }

    /// Union of the column supports.
    pub fn support(&self) -> BTreeSet<Word> {
        self.columns
            .iter()
            .flat_map(|c| c.amplitudes().keys().cloned())
            .collect()
    }

    /// `G[i][j] = ⟨ξ_j, ξ_i⟩`.
    pub fn gram(&self) -> Result<SmallMatrix> {
        let k = self.rank();
        let mut g = SmallMatrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] = self.columns[j].inner(&self.columns[i])?;
            }
        }
        Ok(g)
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("frame serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
pub fn gram_schmidt(raw: Vec<L2Vec>, ambient_radius: usize) -> Result<Frame> {
    let mut done: Vec<L2Vec> = Vec::with_capacity(raw.len());
    for (j, col) in raw.into_iter().enumerate() {
        let original = col.norm_sq();
        if original == 0.0 {
            return Err(FoelnerError::RankDeficient { column: j });
        }
        let mut v = col;
        for _ in 0..2 {
            for q in &done {
                let proj = v.inner(q)?;
                v.axpy(-proj, q)?;
            }
        }
        if v.norm_sq() <= RANK_TOLERANCE * original {
            return Err(FoelnerError::RankDeficient { column: j });
        }
        done.push(v.normalized().expect("nonzero residual"));
    }
    Frame::new(done, ambient_radius)
}

/// `A[q][p] = ⟨U ξ_p, ξ_q⟩`, the matrix of `eUe` in the frame basis.
pub fn compress(u: &GroupAlgebraElement, e: &Frame) -> Result<SmallMatrix> {
    let images = apply_all(u, e)?;
    compress_with(&images, e)
}

fn apply_all(u: &GroupAlgebraElement, e: &Frame) -> Result<Vec<L2Vec>> {
    if u.descriptor() != e.descriptor() {
        return Err(FoelnerError::DescriptorMismatch {
            left: u.descriptor(),
            right: e.descriptor(),
        });
    }
    e.columns
        .iter()
        .map(|c| u.apply(c, e.ambient_radius))
        .collect()
}

fn compress_with(images: &[L2Vec], e: &Frame) -> Result<SmallMatrix> {
    let k = e.rank();
    let mut a = SmallMatrix::zeros(k);
    for p in 0..k {
        for q in 0..k {
            a[(q, p)] = images[p].inner(&e.columns[q])?;
        }
    }
    Ok(a)
}

/// `‖[U, e]‖_HS / ‖e‖_HS` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorRatio {
    /// From `‖Ue - eU‖²_HS = Σ_h ‖(Ue - eU) δ_h‖²` over the group basis.
    pub direct: f64,
    /// `√2 · √(1 - τ_k(A*A))` with `A = eUe`.
    pub closed_form: f64,
}

impl CommutatorRatio {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.closed_form).abs()
    }
}

/// Commutator ratio for a single unitary `U = λ L_g`.
pub fn commutator_ratio(u: &GroupAlgebraElement, e: &Frame) -> Result<CommutatorRatio> {
    let (g, lam) = u.single_unitary().ok_or(FoelnerError::NotUnitary)?;
    let images = apply_all(u, e)?;
    let a = compress_with(&images, e)?;
    let closed_form = (2.0 * (1.0 - a.tau_norm_sq()).max(0.0)).sqrt();

    // Column amplitudes keyed by basis element: ξ_i(h) for each i.
    let mut by_word: HashMap<&Word, Vec<(usize, Complex64)>> = HashMap::new();
    for (i, col) in e.columns.iter().enumerate() {
        for (w, &z) in col.iter() {
            by_word.entry(w).or_default().push((i, z));
        }
    }
    let g_inv = g.inverse();
    let mut domain: BTreeSet<Word> = BTreeSet::new();
    for w in by_word.keys() {
        domain.insert((*w).clone());
        domain.insert(g_inv.multiply(w)?);
    }

    let mut total = 0.0;
    let mut acc: BTreeMap<Word, Complex64> = BTreeMap::new();
    for h in &domain {
        acc.clear();
        // U e δ_h = Σ_i conj(ξ_i(h)) U ξ_i
        if let Some(entries) = by_word.get(h) {
            for &(i, z) in entries {
                for (w, y) in images[i].iter() {
                    *acc.entry(w.clone()).or_default() += z.conj() * y;
                }
            }
        }
        // e U δ_h = λ Σ_i conj(ξ_i(gh)) ξ_i
        let gh = g.multiply(h)?;
        if let Some(entries) = by_word.get(&gh) {
            for &(i, z) in entries {
                for (w, y) in e.columns[i].iter() {
                    *acc.entry(w.clone()).or_default() -= lam * z.conj() * y;
                }
            }
        }
        total += acc.values().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let direct = (total / e.rank() as f64).sqrt();
    Ok(CommutatorRatio {
        direct,
        closed_form,
    })
}

/// `|τ(U) - τ_k(eUe)|`.
pub fn trace_defect(u: &GroupAlgebraElement, e: &Frame) -> Result<f64> {
    let a = compress(u, e)?;
    Ok((u.trace() - a.normalized_trace()).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> GroupDescriptor {
        GroupDescriptor::free(2).unwrap()
    }

    fn w(s: &str) -> Word {
        f2().parse_word(s).unwrap()
    }

    fn delta(s: &str) -> L2Vec {
        L2Vec::delta(&w(s))
    }

    fn la() -> GroupAlgebraElement {
        GroupAlgebraElement::unitary(&w("a1"))
    }

    fn le() -> GroupAlgebraElement {
        GroupAlgebraElement::unitary(&w("e"))
    }

    #[test]
    fn gram_schmidt_examples() {
        let f = gram_schmidt(vec![delta("e"), delta("a1")], 3).unwrap();
        assert_eq!(f.columns(), &[delta("e"), delta("a1")]);

        let mut sum = delta("e");
        sum.axpy(Complex64::new(1.0, 0.0), &delta("a1")).unwrap();
        let f = gram_schmidt(vec![delta("e"), sum], 3).unwrap();
        assert!(f.columns()[1].inner(&delta("a1")).unwrap().re > 1.0 - 1e-15);
        assert_eq!(f.columns()[1].support_len(), 1);

        let scaled = delta("e").scaled(Complex64::new(1.0 + 1e-12, 0.0));
        assert_eq!(
            gram_schmidt(vec![delta("e"), scaled], 3).unwrap_err(),
            FoelnerError::RankDeficient { column: 1 }
        );
    }

    #[test]
    fn frame_rejects_bad_input() {
        assert!(matches!(
            Frame::new(vec![delta("a1.a1")], 2),
            Err(FoelnerError::Headroom { .. })
        ));
        assert!(matches!(
            Frame::new(vec![delta("e"), delta("e")], 2),
            Err(FoelnerError::NotOrthonormal { .. })
        ));
        assert!(Frame::new(vec![], 2).is_err());
    }

    #[test]
    fn compress_examples() {
        let f1 = Frame::new(vec![delta("e")], 1).unwrap();
        assert_eq!(compress(&la(), &f1).unwrap(), SmallMatrix::zeros(1));

        let f2 = Frame::new(vec![delta("e"), delta("a1")], 2).unwrap();
        let a = compress(&la(), &f2).unwrap();
        let expected = SmallMatrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(a, expected);
        assert_eq!(compress(&le(), &f2).unwrap(), SmallMatrix::identity(2));
    }

    #[test]
    fn commutator_examples() {
        let f1 = Frame::new(vec![delta("e")], 1).unwrap();
        let r = commutator_ratio(&la(), &f1).unwrap();
        assert!((r.closed_form - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.direct - 2f64.sqrt()).abs() < 1e-15);
        let r = commutator_ratio(&le(), &f1).unwrap();
        assert_eq!((r.direct, r.closed_form), (0.0, 0.0));
        let mix = GroupAlgebraElement::from_terms(
            f2(),
            [
                (w("e"), Complex64::new(0.5, 0.0)),
                (w("a1"), Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(
            commutator_ratio(&mix, &f1).unwrap_err(),
            FoelnerError::NotUnitary
        );
    }

    #[test]
    fn commutator_with_phase() {
        let phase =
            GroupAlgebraElement::from_terms(f2(), [(w("a2"), Complex64::from_polar(1.0, 1.1))])
                .unwrap();
        let s = Complex64::new(0.6, 0.0);
        let col =
            L2Vec::from_terms(f2(), [(w("e"), s), (w("a2"), Complex64::new(0.0, 0.8))]).unwrap();
        let f = gram_schmidt(vec![col, delta("A1")], 2).unwrap();
        let r = commutator_ratio(&phase, &f).unwrap();
        assert!(r.discrepancy() < 1e-12, "{r:?}");
    }

    #[test]
    fn defect_examples() {
        let f1 = Frame::new(vec![delta("e")], 1).unwrap();
        assert_eq!(trace_defect(&le(), &f1).unwrap(), 0.0);
        assert_eq!(trace_defect(&la(), &f1).unwrap(), 0.0);
        // (L_e + L_a)/... is not unitary but the defect is still defined.
        let f2f = Frame::new(vec![delta("e"), delta("a1")], 2).unwrap();
        let neg =
            GroupAlgebraElement::from_terms(f2(), [(w("e"), Complex64::new(-1.0, 0.0))]).unwrap();
        assert_eq!(trace_defect(&neg, &f2f).unwrap(), 0.0);
    }

    #[test]
    fn headroom_enforced_in_compress() {
        let f = Frame::new(vec![delta("a1")], 2).unwrap();
        let lab = GroupAlgebraElement::unitary(&w("a1.a2"));
        assert!(matches!(
            compress(&lab, &f),
            Err(FoelnerError::Headroom { .. })
        ));
    }

    #[test]
    fn fingerprint_is_stable() {
        let f = Frame::new(vec![delta("e"), delta("a1")], 2).unwrap();
        assert_eq!(f.fingerprint(), f.clone().fingerprint());
        let g = Frame::new(vec![delta("a1"), delta("e")], 2).unwrap();
        assert_ne!(f.fingerprint(), g.fingerprint());
    }
}
