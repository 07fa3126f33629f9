//! Marked groups: free groups `F_n` and free abelian groups `Z^d`.
//!
//! Words are always stored in normal form (freely reduced letter sequences,
//! or exponent vectors), so structural equality is group equality. Enumeration
//! order everywhere is shortlex with `a1 < A1 < a2 < A2 < ...`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{FoelnerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Free,
    FreeAbelian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub kind: GroupKind,
    pub rank: u32,
}

impl GroupDescriptor {
    pub fn new(kind: GroupKind, rank: u32) -> Result<Self> {
        if rank == 0 {
            return Err(FoelnerError::InvalidDescriptor(
                "rank must be at least 1".into(),
            ));
        }
        Ok(Self { kind, rank })
    }

    pub fn free(rank: u32) -> Result<Self> {
        Self::new(GroupKind::Free, rank)
    }

    pub fn abelian(rank: u32) -> Result<Self> {
        Self::new(GroupKind::FreeAbelian, rank)
    }

    pub fn is_free(&self) -> bool {
        self.kind == GroupKind::Free
    }

    pub fn require_free(&self) -> Result<()> {
        if self.is_free() {
            Ok(())
        } else {
            Err(FoelnerError::NotFreeGroup(*self))
        }
    }

    pub fn check_letter(&self, letter: Letter) -> Result<()> {
        if letter.generator == 0 || letter.generator > self.rank {
            Err(FoelnerError::GeneratorOutOfRange {
                index: letter.generator,
                rank: self.rank,
            })
        } else {
            Ok(())
        }
    }

    pub fn identity(&self) -> Word {
        let repr = match self.kind {
            GroupKind::Free => Repr::Free(Vec::new()),
            GroupKind::FreeAbelian => Repr::Abelian(vec![0; self.rank as usize]),
        };
        Word { desc: *self, repr }
    }

    /// The word `a_i` (1-based).
    pub fn generator(&self, index: u32) -> Result<Word> {
        self.letter_word(Letter::new(index, false))
    }

    /// Standard generators `a_1, ..., a_n`.
    pub fn standard_generators(&self) -> Vec<Word> {
        (1..=self.rank)
            .map(|i| self.generator(i).expect("index in range"))
            .collect()
    }

    /// All letters in canonical order `a1, A1, a2, A2, ...`.
    pub fn letters(&self) -> Vec<Letter> {
        (1..=self.rank)
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect()
    }

    pub fn letter_word(&self, letter: Letter) -> Result<Word> {
        self.reduce(&[letter])
    }

    /// Normal form of an arbitrary letter sequence.
    pub fn reduce(&self, letters: &[Letter]) -> Result<Word> {
        for &l in letters {
            self.check_letter(l)?;
        }
        let repr = match self.kind {
            GroupKind::Free => {
                let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
                for &l in letters {
                    if stack.last().is_some_and(|&top| top == l.inverse()) {
                        stack.pop();
                    } else {
                        stack.push(l);
                    }
                }
                Repr::Free(stack)
            }
            GroupKind::FreeAbelian => {
                let mut exps = vec![0i64; self.rank as usize];
                for &l in letters {
                    exps[(l.generator - 1) as usize] += if l.inverse { -1 } else { 1 };
                }
                Repr::Abelian(exps)
            }
        };
        Ok(Word { desc: *self, repr })
    }

    /// Element of `Z^d` from its exponent vector.
    pub fn abelian_word(&self, exponents: &[i64]) -> Result<Word> {
        if self.kind != GroupKind::FreeAbelian {
            return Err(FoelnerError::InvalidDescriptor(format!(
                "{self} has no exponent-vector elements"
            )));
        }
        if exponents.len() != self.rank as usize {
            return Err(FoelnerError::InvalidDescriptor(format!(
                "expected {} exponents, got {}",
                self.rank,
                exponents.len()
            )));
        }
        Ok(Word {
            desc: *self,
            repr: Repr::Abelian(exponents.to_vec()),
        })
    }

    /// Parse the textual word syntax: `e`, `a1.A2.a1`, or `(2,-1)` for free abelian groups.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        let err = || FoelnerError::Parse {
            what: "word",
            input: text.to_string(),
        };
        if text == "e" || text.is_empty() {
            return Ok(self.identity());
        }
        if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            let exps = inner
                .split(',')
                .map(|s| s.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| err())?;
            return self.abelian_word(&exps);
        }
        let letters = text
            .split('.')
            .map(|tok| tok.parse::<Letter>())
            .collect::<Result<Vec<_>>>()?;
        self.reduce(&letters)
    }

    /// Ball of radius `radius` in the Cayley graph for the standard generators.
    pub fn ball(&self, radius: usize) -> Ball {
        let mut elements = match self.kind {
            GroupKind::Free => {
                let letters = self.letters();
                let mut all = vec![self.identity()];
                let mut shell = vec![Vec::<Letter>::new()];
                for _ in 0..radius {
                    let mut next = Vec::with_capacity(shell.len() * letters.len());
                    // Extending a shortlex-sorted shell letter by letter keeps it sorted.
                    for w in &shell {
                        for &l in &letters {
                            if w.last().is_some_and(|&t| t == l.inverse()) {
                                continue;
                            }
                            let mut v = w.clone();
                            v.push(l);
                            next.push(v);
                        }
                    }
                    all.extend(next.iter().map(|v| Word {
                        desc: *self,
                        repr: Repr::Free(v.clone()),
                    }));
                    shell = next;
                }
                all
            }
            GroupKind::FreeAbelian => {
                let mut out = Vec::new();
                let mut cur = vec![0i64; self.rank as usize];
                abelian_fill(&mut out, &mut cur, 0, radius as i64, *self);
                out.sort();
                out
            }
        };
        elements.dedup();
        Ball::from_sorted(*self, radius, elements)
    }

    /// `|ball(r)|` for the standard generators, without enumeration.
    pub fn ball_size(&self, radius: usize) -> u128 {
        match self.kind {
            GroupKind::Free => {
                if radius == 0 {
                    return 1;
                }
                let n = self.rank as u128;
                if n == 1 {
                    return 2 * radius as u128 + 1;
                }
                let q = 2 * n - 1;
                1 + 2 * n * (q.pow(radius as u32) - 1) / (2 * n - 2)
            }
            GroupKind::FreeAbelian => {
                // Lattice points with l1 norm <= r in d dimensions.
                let d = self.rank as usize;
                let r = radius;
                let binom = |n: usize, k: usize| -> u128 {
                    if k > n {
                        return 0;
                    }
                    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
                };
                (0..=d.min(r))
                    .map(|k| (1u128 << k) * binom(d, k) * binom(r, k))
                    .sum()
            }
        }
    }
}

fn abelian_fill(
    out: &mut Vec<Word>,
    cur: &mut [i64],
    pos: usize,
    budget: i64,
    desc: GroupDescriptor,
) {
    if pos == cur.len() {
        out.push(Word {
            desc,
            repr: Repr::Abelian(cur.to_vec()),
        });
        return;
    }
    for x in -budget..=budget {
        cur[pos] = x;
        abelian_fill(out, cur, pos + 1, budget - x.abs(), desc);
    }
    cur[pos] = 0;
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupKind::Free => write!(f, "free:{}", self.rank),
            GroupKind::FreeAbelian => write!(f, "abelian:{}", self.rank),
        }
    }
}

impl FromStr for GroupDescriptor {
    type Err = FoelnerError;

    fn from_str(s: &str) -> Result<Self> {
        let err = || FoelnerError::Parse {
            what: "group descriptor",
            input: s.to_string(),
        };
        let (kind, rank) = s.trim().split_once(':').ok_or_else(err)?;
        let rank: u32 = rank.parse().map_err(|_| err())?;
        match kind {
            "free" => Self::free(rank),
            "abelian" => Self::abelian(rank),
            _ => Err(err()),
        }
    }
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: u32,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(generator: u32, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inverse(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// Position in the letter order `a1 < A1 < a2 < A2 < ...`.
    pub fn key(self) -> u32 {
        2 * (self.generator.saturating_sub(1)) + self.inverse as u32
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.inverse { 'A' } else { 'a' };
        write!(f, "{c}{}", self.generator)
    }
}

impl FromStr for Letter {
    type Err = FoelnerError;

    fn from_str(s: &str) -> Result<Self> {
        let err = || FoelnerError::Parse {
            what: "letter",
            input: s.to_string(),
        };
        let s = s.trim();
        let mut chars = s.chars();
        let inverse = match chars.next() {
            Some('a') => false,
            Some('A') => true,
            _ => return Err(err()),
        };
        let generator: u32 = chars.as_str().parse().map_err(|_| err())?;
        if generator == 0 {
            return Err(err());
        }
        Ok(Letter::new(generator, inverse))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Repr {
    Free(Vec<Letter>),
    Abelian(Vec<i64>),
}

/// A group element in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    desc: GroupDescriptor,
    repr: Repr,
}

impl Word {
    pub fn descriptor(&self) -> GroupDescriptor {
        self.desc
    }

    pub fn is_identity(&self) -> bool {
        match &self.repr {
            Repr::Free(l) => l.is_empty(),
            Repr::Abelian(x) => x.iter().all(|&v| v == 0),
        }
    }

    /// Word length: letter count, or l1 norm of the exponent vector.
    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Free(l) => l.len(),
            Repr::Abelian(x) => x.iter().map(|v| v.unsigned_abs() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    /// Letters of the canonical spelling (for `Z^d`: `a1^x1 a2^x2 ...`).
    pub fn letters(&self) -> Vec<Letter> {
        match &self.repr {
            Repr::Free(l) => l.clone(),
            Repr::Abelian(x) => x
                .iter()
                .enumerate()
                .flat_map(|(i, &v)| {
                    std::iter::repeat_n(Letter::new(i as u32 + 1, v < 0), v.unsigned_abs() as usize)
                })
                .collect(),
        }
    }

    pub fn exponents(&self) -> Option<&[i64]> {
        match &self.repr {
            Repr::Abelian(x) => Some(x),
            Repr::Free(_) => None,
        }
    }

    pub fn first_letter(&self) -> Option<Letter> {
        match &self.repr {
            Repr::Free(l) => l.first().copied(),
            Repr::Abelian(_) => self.letters().first().copied(),
        }
    }

    fn check_same(&self, other: &Word) -> Result<()> {
        if self.desc != other.desc {
            Err(FoelnerError::DescriptorMismatch {
                left: self.desc,
                right: other.desc,
            })
        } else {
            Ok(())
        }
    }

    /// The reduced product `self * other`.
    pub fn multiply(&self, other: &Word) -> Result<Word> {
        self.check_same(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Free(u), Repr::Free(v)) => {
                // Both inputs are reduced, so cancellation only happens at the seam.
                let mut cancel = 0;
                while cancel < u.len()
                    && cancel < v.len()
                    && u[u.len() - 1 - cancel] == v[cancel].inverse()
                {
                    cancel += 1;
                }
                let mut out = Vec::with_capacity(u.len() + v.len() - 2 * cancel);
                out.extend_from_slice(&u[..u.len() - cancel]);
                out.extend_from_slice(&v[cancel..]);
                Repr::Free(out)
            }
            (Repr::Abelian(x), Repr::Abelian(y)) => {
                Repr::Abelian(x.iter().zip(y).map(|(a, b)| a + b).collect())
            }
            _ => unreachable!("descriptor equality implies matching representation"),
        };
        Ok(Word {
            desc: self.desc,
            repr,
        })
    }

    pub fn inverse(&self) -> Word {
        let repr = match &self.repr {
            Repr::Free(l) => Repr::Free(l.iter().rev().map(|x| x.inverse()).collect()),
            Repr::Abelian(x) => Repr::Abelian(x.iter().map(|v| -v).collect()),
        };
        Word {
            desc: self.desc,
            repr,
        }
    }

    /// Whether the reduced word starts with `letter`. Defined for free groups only.
    pub fn begins_with(&self, letter: Letter) -> Result<bool> {
        match &self.repr {
            Repr::Free(l) => {
                self.desc.check_letter(letter)?;
                Ok(l.first() == Some(&letter))
            }
            Repr::Abelian(_) => Err(FoelnerError::NotFreeGroup(self.desc)),
        }
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    /// Shortlex: length first, then lexicographic on canonical letters.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| match (&self.repr, &other.repr) {
                (Repr::Free(u), Repr::Free(v)) => u.cmp(v),
                _ => self.letters().cmp(&other.letters()),
            })
            .then_with(|| self.desc.cmp(&other.desc))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Free(l) if l.is_empty() => write!(f, "e"),
            Repr::Free(l) => {
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            Repr::Abelian(x) => {
                write!(f, "(")?;
                for (i, v) in x.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// All words of length at most `radius`, in shortlex order.
#[derive(Debug, Clone)]
pub struct Ball {
    descriptor: GroupDescriptor,
    radius: usize,
    elements: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl Ball {
    fn from_sorted(descriptor: GroupDescriptor, radius: usize, elements: Vec<Word>) -> Self {
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self {
            descriptor,
            radius,
            elements,
            index,
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        self.descriptor
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.index.contains_key(w)
    }

    /// Number of elements of length at most `r` (a prefix, since the order is shortlex).
    pub fn prefix_len(&self, r: usize) -> usize {
        self.elements.partition_point(|w| w.len() <= r)
    }
}

impl Serialize for Ball {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            group: String,
            radius: usize,
            elements: &'a [Word],
        }
        Repr {
            group: self.descriptor.to_string(),
            radius: self.radius,
            elements: &self.elements,
        }
        .serialize(s)
    }
}

/// Shortlex list of the first `count` reduced words beginning with `letter`.
pub fn words_beginning_with(
    desc: GroupDescriptor,
    letter: Letter,
    count: usize,
) -> Result<Vec<Word>> {
    desc.require_free()?;
    desc.check_letter(letter)?;
    let letters = desc.letters();
    let mut out = Vec::with_capacity(count);
    let mut shell = vec![vec![letter]];
    while out.len() < count {
        for w in &shell {
            if out.len() == count {
                break;
            }
            out.push(Word {
                desc,
                repr: Repr::Free(w.clone()),
            });
        }
        let mut next = Vec::with_capacity(shell.len() * (letters.len() - 1));
        for w in &shell {
            for &l in &letters {
                if w.last().is_some_and(|&t| t == l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        shell = next;
    }
    Ok(out)
}
