//! Components, invariant sets, the form kernel and the recurrent/transient
//! split of a finite graph.
//!
//! On a finite graph a set is invariant exactly when no edge leaves it, and
//! the kernel of the form is spanned by indicators of components without
//! killing. Both are decided combinatorially here.

use serde::Serialize;

use crate::function::{VertexFunction, VertexSet};
use crate::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Recurrent,
    Transient,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    /// Union of the recurrent components.
    pub recurrent_part: VertexSet,
    pub components: Vec<VertexSet>,
    pub kernel_basis: Vec<VertexFunction>,
    /// One verdict per entry of `components`.
    pub verdicts: Vec<Verdict>,
}

impl Classification {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }

    /// The single verdict of an irreducible graph.
    pub fn verdict(&self) -> Option<Verdict> {
        match self.verdicts.as_slice() {
            [v] => Some(*v),
            _ => None,
        }
    }
}

/// Connected components under `b > 0` adjacency, ordered by smallest vertex.
pub fn components(g: &Graph) -> Vec<VertexSet> {
    components_within(g, &g.all())
}

/// Components of the subgraph induced on `set`.
pub fn components_within(g: &Graph, set: &VertexSet) -> Vec<VertexSet> {
    let inside = set.mask(g.len());
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    for start in set {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(x) = stack.pop() {
            comp.push(x);
            for &(y, _) in g.neighbors(x) {
                if inside[y] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        out.push(comp.into_iter().collect());
    }
    out
}

pub fn is_invariant(g: &Graph, set: &VertexSet) -> bool {
    g.inner_boundary(set).is_empty()
}

pub fn is_irreducible(g: &Graph) -> bool {
    components(g).len() <= 1
}

fn is_killed(g: &Graph, comp: &VertexSet) -> bool {
    comp.iter().any(|x| g.c(x) > 0.0)
}

/// Indicators of the components carrying no killing.
pub fn kernel_basis(g: &Graph) -> Vec<VertexFunction> {
    components(g)
        .into_iter()
        .filter(|comp| !is_killed(g, comp))
        .map(|comp| VertexFunction::indicator(g.len(), &comp))
        .collect()
}

pub fn classify_finite(g: &Graph) -> Classification {
    let components = components(g);
    let verdicts: Vec<Verdict> = components
        .iter()
        .map(|comp| {
            if is_killed(g, comp) {
                Verdict::Transient
            } else {
                Verdict::Recurrent
            }
        })
        .collect();
    let recurrent_part = components
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| **v == Verdict::Recurrent)
        .fold(VertexSet::empty(), |acc, (comp, _)| acc.union(comp));
    let kernel_basis = components
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| **v == Verdict::Recurrent)
        .map(|(comp, _)| VertexFunction::indicator(g.len(), comp))
        .collect();
    Classification {
        recurrent_part,
        components,
        kernel_basis,
        verdicts,
    }
}
