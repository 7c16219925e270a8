//! Vertex sets, vertex functions and linear functionals.
//!
//! Everything here is indexed by the dense vertex index a [`Graph`] assigns
//! at load time. Functions are stored densely; "default zero outside the
//! support" is simply the zero entries.

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Graph;

/// Dense vertex index.
pub type Vertex = usize;

/// A finite set of vertices, kept sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct VertexSet(Vec<Vertex>);

impl VertexSet {
    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    /// All vertices `0..n`.
    pub fn all(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn singleton(x: Vertex) -> Self {
        VertexSet(vec![x])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: Vertex) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.len() <= other.0.len() && self.iter().all(|x| other.contains(x))
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&x| !other.contains(x)).collect()
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for x in self.iter() {
            mask[x] = true;
        }
        mask
    }

    pub fn max(&self) -> Option<Vertex> {
        self.0.last().copied()
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        let mut v: Vec<Vertex> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = Vertex;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, Vertex>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

/// A real-valued function on the vertices of a graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn zeros(n: usize) -> Self {
        VertexFunction(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        VertexFunction(vec![value; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }

    pub fn indicator(n: usize, set: &VertexSet) -> Self {
        let mut f = Self::zeros(n);
        for x in set {
            f.0[x] = 1.0;
        }
        f
    }

    pub fn delta(n: usize, x: Vertex) -> Self {
        let mut f = Self::zeros(n);
        f.0[x] = 1.0;
        f
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> VertexSet {
        (0..self.len()).filter(|&x| self.0[x] != 0.0).collect()
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Self {
        VertexFunction(self.0.iter().map(|&v| op(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "vertex function length mismatch");
        VertexFunction(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        )
    }

    /// Pointwise minimum `f ∧ h`.
    pub fn min(&self, other: &Self) -> Self {
        self.zip_with(other, f64::min)
    }

    /// Pointwise maximum `f ∨ h`.
    pub fn max(&self, other: &Self) -> Self {
        self.zip_with(other, f64::max)
    }

    /// Pointwise product `f ⊙ h`.
    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// Zero outside `set`.
    pub fn restrict(&self, set: &VertexSet) -> Self {
        let mut out = Self::zeros(self.len());
        for x in set {
            out.0[x] = self.0[x];
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Largest value minus smallest value.
    pub fn spread(&self) -> f64 {
        let hi = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        if self.0.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }
}

impl Index<Vertex> for VertexFunction {
    type Output = f64;

    fn index(&self, x: Vertex) -> &f64 {
        &self.0[x]
    }
}

impl IndexMut<Vertex> for VertexFunction {
    fn index_mut(&mut self, x: Vertex) -> &mut f64 {
        &mut self.0[x]
    }
}

/// A finitely supported linear functional `ℓ(ψ) = Σ_x coeffs(x) ψ(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Functional {
    coeffs: Vec<f64>,
}

impl Functional {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Functional { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        Functional::new(vec![0.0; n])
    }

    /// Point evaluation at `x`.
    pub fn delta(n: usize, x: Vertex) -> Self {
        let mut coeffs = vec![0.0; n];
        coeffs[x] = 1.0;
        Functional::new(coeffs)
    }

    /// `ℓ_f(ψ) = Σ f ψ m`, i.e. coefficients `f(x)·m(x)`.
    pub fn from_m_density(g: &Graph, f: &VertexFunction) -> Self {
        Functional::new((0..g.len()).map(|x| f[x] * g.m(x)).collect())
    }

    /// The killing functional, coefficients `c(x)`.
    pub fn killing(g: &Graph) -> Self {
        Functional::new(g.killing().to_vec())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn pair(&self, psi: &VertexFunction) -> f64 {
        self.coeffs
            .iter()
            .zip(psi.values())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add(&self, other: &Functional) -> Functional {
        Functional::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// First vertex with a negative coefficient, if any.
    pub fn first_negative(&self) -> Option<Vertex> {
        self.coeffs.iter().position(|&v| v < 0.0)
    }
}

/// Nested finite vertex sets `N₁ ⊆ N₂ ⊆ …`.
///
/// On a locally finite graph every finite set carries a cutoff in the form
/// domain, so breadth-first balls play the role of a special nest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exhaustion {
    sets: Vec<VertexSet>,
}

impl Exhaustion {
    pub fn new(sets: Vec<VertexSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParameter(
                "exhaustion needs at least one level".into(),
            ));
        }
        for (level, pair) in sets.windows(2).enumerate() {
            if !pair[0].is_subset(&pair[1]) {
                return Err(Error::NotNested { level });
            }
        }
        Ok(Exhaustion { sets })
    }

    /// Balls `B_0(root), …, B_max_radius(root)`, stopping early once a ball
    /// stops growing.
    pub fn balls(g: &Graph, root: Vertex, max_radius: usize) -> Result<Self> {
        let dist = g.hop_distances(root)?;
        let mut sets = Vec::new();
        for r in 0..=max_radius {
            let ball: VertexSet = (0..g.len()).filter(|&x| dist[x] <= r).collect();
            let stalled = sets
                .last()
                .is_some_and(|prev: &VertexSet| prev.len() == ball.len());
            if stalled {
                break;
            }
            sets.push(ball);
        }
        Exhaustion::new(sets)
    }

    /// Balls around `root` until they stop growing, followed by the full
    /// vertex set if the graph is disconnected.
    pub fn covering_balls(g: &Graph, root: Vertex) -> Result<Self> {
        let mut ex = Exhaustion::balls(g, root, g.len())?;
        if ex.last().len() < g.len() {
            ex.sets.push(VertexSet::all(g.len()));
        }
        Ok(ex)
    }

    pub fn levels(&self) -> &[VertexSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn first(&self) -> &VertexSet {
        &self.sets[0]
    }

    pub fn last(&self) -> &VertexSet {
        &self.sets[self.sets.len() - 1]
    }

    /// Whether the last level is the whole vertex set of `g`.
    pub fn covers(&self, g: &Graph) -> bool {
        self.last().len() == g.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_set_is_sorted_and_deduplicated() {
        let s: VertexSet = [3, 1, 3, 2].into_iter().collect();
        assert_eq!(s.as_slice(), &[1, 2, 3]);
        assert!(s.contains(2));
        assert!(!s.contains(0));
        assert!(VertexSet::singleton(2).is_subset(&s));
    }

    #[test]
    fn spread_and_norm() {
        let f = VertexFunction::from_vec(vec![-1.0, 3.0, 0.5]);
        assert_eq!(f.spread(), 4.0);
        assert_eq!(f.sup_norm(), 3.0);
        assert_eq!(f.support().as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn exhaustion_rejects_non_nested_levels() {
        let err = Exhaustion::new(vec![VertexSet::singleton(0), VertexSet::singleton(1)]);
        assert!(matches!(err, Err(Error::NotNested { level: 0 })));
    }
}
