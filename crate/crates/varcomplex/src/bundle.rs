//! Coordinates of a fibred manifold and the symmetric multi-indices that
//! label jet variables.
//!
//! A [`BundleSpec`] fixes an ordered list of base coordinates `x^lambda` and
//! fibre coordinates `y^i`. Everything else in the crate (expressions, forms,
//! operators) is interpreted relative to one bundle. The struct is cheap to
//! clone; the coordinate lists live behind an `Arc`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BundleError {
    #[error("bundle needs at least one base and one fibre coordinate")]
    Empty,
    #[error("coordinate name `{0}` declared twice")]
    DuplicateName(String),
    #[error("invalid coordinate name `{0}`: must be alphanumeric and start with a letter")]
    BadName(String),
    #[error("base index {index} out of range for a {dim}-dimensional base")]
    BaseIndexOutOfRange { index: usize, dim: usize },
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct BundleInner {
    base: Vec<String>,
    fiber: Vec<String>,
}

/// Ordered base and fibre coordinate names of a fibred bundle `Y -> X`.
#[derive(Clone, Debug)]
pub struct BundleSpec {
    inner: Arc<BundleInner>,
}

impl PartialEq for BundleSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}
impl Eq for BundleSpec {}

impl PartialOrd for BundleSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BundleSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.inner.cmp(&other.inner)
    }
}
impl std::hash::Hash for BundleSpec {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.inner.hash(state)
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric()),
        _ => false,
    }
}

impl BundleSpec {
    /// Builds a bundle from base and fibre coordinate names.
    ///
    /// Names must be unique across both lists so that the expression grammar
    /// can resolve identifiers without context.
    pub fn new<S: Into<String>>(
        base: impl IntoIterator<Item = S>,
        fiber: impl IntoIterator<Item = S>,
    ) -> Result<Self, BundleError> {
        let base: Vec<String> = base.into_iter().map(Into::into).collect();
        let fiber: Vec<String> = fiber.into_iter().map(Into::into).collect();
        if base.is_empty() || fiber.is_empty() {
            return Err(BundleError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in base.iter().chain(fiber.iter()) {
            if !valid_name(name) {
                return Err(BundleError::BadName(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(BundleError::DuplicateName(name.clone()));
            }
        }
        Ok(BundleSpec {
            inner: Arc::new(BundleInner { base, fiber }),
        })
    }

    /// Number of base coordinates (`n`).
    pub fn base_dim(&self) -> usize {
        self.inner.base.len()
    }

    /// Number of fibre coordinates (`m`).
    pub fn fiber_dim(&self) -> usize {
        self.inner.fiber.len()
    }

    pub fn base_name(&self, lambda: usize) -> &str {
        &self.inner.base[lambda]
    }

    pub fn fiber_name(&self, i: usize) -> &str {
        &self.inner.fiber[i]
    }

    pub fn base_names(&self) -> &[String] {
        &self.inner.base
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.inner.fiber
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.inner.base.iter().position(|b| b == name)
    }

    pub fn fiber_index(&self, name: &str) -> Option<usize> {
        self.inner.fiber.iter().position(|f| f == name)
    }

    /// The empty multi-index sized for this bundle.
    pub fn empty_index(&self) -> MultiIndex {
        MultiIndex::empty(self.base_dim())
    }
}

/// Symmetric multi-index over the base coordinates: a multiset of base
/// directions recording which partial derivatives a jet variable carries.
///
/// Stored as a count per base position, so the representation never depends
/// on insertion order. Ordering is graded-lexicographic: first by total order
/// `|Lambda|`, then by the count vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    counts: Vec<u32>,
}

impl MultiIndex {
    pub fn empty(base_dim: usize) -> Self {
        MultiIndex {
            counts: vec![0; base_dim],
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        MultiIndex { counts }
    }

    /// Multi-index `lambda_1 + lambda_2 + ...` built from a list of base
    /// positions (repeats allowed).
    pub fn from_positions(base_dim: usize, positions: &[usize]) -> Result<Self, BundleError> {
        let mut mi = MultiIndex::empty(base_dim);
        for &p in positions {
            mi = mi.add(p)?;
        }
        Ok(mi)
    }

    /// Total order `|Lambda|`.
    pub fn order(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn base_dim(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, lambda: usize) -> u32 {
        self.counts.get(lambda).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `lambda + Lambda`: raises the count of direction `lambda` by one.
    pub fn add(&self, lambda: usize) -> Result<Self, BundleError> {
        if lambda >= self.counts.len() {
            return Err(BundleError::BaseIndexOutOfRange {
                index: lambda,
                dim: self.counts.len(),
            });
        }
        let mut counts = self.counts.clone();
        counts[lambda] += 1;
        Ok(MultiIndex { counts })
    }

    /// Removes one occurrence of `lambda`; `None` if absent.
    pub fn remove(&self, lambda: usize) -> Option<Self> {
        if self.count(lambda) == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[lambda] -= 1;
        Some(MultiIndex { counts })
    }

    /// Base positions with multiplicity, lowest direction first.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for (lambda, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                out.push(lambda);
            }
        }
        out
    }

    /// Smallest base direction present, if any.
    pub fn smallest_direction(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c > 0)
    }

    /// Largest base direction present, if any.
    pub fn largest_direction(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    /// Subscript string in declaration order, e.g. `txx` for `t + x + x`.
    pub fn subscript(&self, bundle: &BundleSpec) -> String {
        let mut s = String::new();
        for (lambda, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                s.push_str(bundle.base_name(lambda));
            }
        }
        s
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.counts.cmp(&other.counts))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        let mut first = true;
        for (lambda, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                if !first {
                    write!(f, ",")?;
                }
                write!(f, "{lambda}")?;
                first = false;
            }
        }
        write!(f, ")")
    }
}

/// A jet coordinate `y^i_Lambda`; the empty multi-index denotes the fibre
/// coordinate `y^i` itself.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub fiber: usize,
    pub index: MultiIndex,
}

impl JetVar {
    pub fn new(fiber: usize, index: MultiIndex) -> Self {
        JetVar { fiber, index }
    }

    pub fn base(fiber: usize, base_dim: usize) -> Self {
        JetVar {
            fiber,
            index: MultiIndex::empty(base_dim),
        }
    }

    /// `y^i_{lambda + Lambda}`.
    pub fn raise(&self, lambda: usize) -> Result<Self, BundleError> {
        Ok(JetVar {
            fiber: self.fiber,
            index: self.index.add(lambda)?,
        })
    }

    pub fn display_name(&self, bundle: &BundleSpec) -> String {
        if self.index.is_empty() {
            bundle.fiber_name(self.fiber).to_string()
        } else {
            format!(
                "{}_{}",
                bundle.fiber_name(self.fiber),
                self.index.subscript(bundle)
            )
        }
    }
}
