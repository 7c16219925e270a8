//! Weighted graphs with vertex measure and killing.
//!
//! A [`Graph`] carries symmetric edge weights `b`, a strictly positive vertex
//! measure `m` and a nonnegative killing coefficient `c`. The killing is
//! stored as the combined coefficient `c(x) = V(x)·m(x)`, so the form
//! `Σ b (f(x) − f(y))² + Σ c f²` and the formal operator
//! `2 Σ b (f(x) − f(y)) + c(x) f(x)` agree under counting-measure pairing.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Vertex, VertexFunction, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    ids: Vec<String>,
    index: HashMap<String, Vertex>,
    m: Vec<f64>,
    c: Vec<f64>,
    edges: Vec<Edge>,
    // Sorted by neighbor index.
    adj: Vec<Vec<(Vertex, f64)>>,
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, Vertex>,
    m: Vec<f64>,
    c: Vec<f64>,
    edges: Vec<Edge>,
    seen: HashSet<(Vertex, Vertex)>,
}

impl GraphBuilder {
    pub fn vertex(&mut self, id: impl Into<String>, m: f64, c: f64) -> Result<Vertex> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateVertex(id));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidMeasure { id, value: m });
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidKilling { id, value: c });
        }
        let x = self.ids.len();
        self.index.insert(id.clone(), x);
        self.ids.push(id);
        self.m.push(m);
        self.c.push(c);
        Ok(x)
    }

    pub fn edge(&mut self, u: &str, v: &str, b: f64) -> Result<()> {
        let ux = *self
            .index
            .get(u)
            .ok_or_else(|| Error::UnknownVertex(u.into()))?;
        let vx = *self
            .index
            .get(v)
            .ok_or_else(|| Error::UnknownVertex(v.into()))?;
        self.edge_by_index(ux, vx, b)
    }

    pub fn edge_by_index(&mut self, u: Vertex, v: Vertex, b: f64) -> Result<()> {
        for x in [u, v] {
            if x >= self.ids.len() {
                return Err(Error::UnknownVertex(format!("#{x}")));
            }
        }
        if u == v {
            return Err(Error::SelfLoop(self.ids[u].clone()));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidWeight {
                u: self.ids[u].clone(),
                v: self.ids[v].clone(),
                value: b,
            });
        }
        if !self.seen.insert((u.min(v), u.max(v))) {
            return Err(Error::DuplicateEdge(
                self.ids[u].clone(),
                self.ids[v].clone(),
            ));
        }
        self.edges.push(Edge { u, v, b });
        Ok(())
    }

    pub fn build(self) -> Result<Graph> {
        let n = self.ids.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.b));
            adj[e.v].push((e.u, e.b));
        }
        for row in &mut adj {
            row.sort_by_key(|&(y, _)| y);
        }
        let g = Graph {
            ids: self.ids,
            index: self.index,
            m: self.m,
            c: self.c,
            edges: self.edges,
            adj,
        };
        if let Some(x) = (0..n).find(|&x| !g.degree(x).is_finite()) {
            return Err(Error::InvalidWeight {
                u: g.ids[x].clone(),
                v: "*".into(),
                value: g.degree(x),
            });
        }
        Ok(g)
    }
}

#[derive(Deserialize, Serialize)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Deserialize, Serialize)]
struct VertexDoc {
    id: String,
    #[serde(default = "unit")]
    m: f64,
    #[serde(default)]
    c: f64,
}

#[derive(Deserialize, Serialize)]
struct EdgeDoc {
    u: String,
    v: String,
    b: f64,
}

fn unit() -> f64 {
    1.0
}

impl Graph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Parses and validates a graph document
    /// `{"vertices":[{"id","m","c"}],"edges":[{"u","v","b"}]}`.
    pub fn from_json(source: &str) -> Result<Graph> {
        let doc: GraphDoc =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        let mut builder = Graph::builder();
        for v in doc.vertices {
            builder.vertex(v.id, v.m, v.c)?;
        }
        for e in doc.edges {
            builder.edge(&e.u, &e.v, e.b)?;
        }
        builder.build()
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            vertices: (0..self.len())
                .map(|x| VertexDoc {
                    id: self.ids[x].clone(),
                    m: self.m[x],
                    c: self.c[x],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    u: self.ids[e.u].clone(),
                    v: self.ids[e.v].clone(),
                    b: e.b,
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("graph documents always serialize")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, x: Vertex) -> &str {
        &self.ids[x]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex(&self, id: &str) -> Result<Vertex> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.into()))
    }

    pub fn m(&self, x: Vertex) -> f64 {
        self.m[x]
    }

    pub fn c(&self, x: Vertex) -> f64 {
        self.c[x]
    }

    pub fn measure(&self) -> &[f64] {
        &self.m
    }

    pub fn killing(&self) -> &[f64] {
        &self.c
    }

    pub fn has_killing(&self) -> bool {
        self.c.iter().any(|&c| c > 0.0)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: Vertex) -> &[(Vertex, f64)] {
        &self.adj[x]
    }

    /// `b(x, y)`, zero for non-adjacent pairs.
    pub fn weight(&self, x: Vertex, y: Vertex) -> f64 {
        let row = &self.adj[x];
        match row.binary_search_by_key(&y, |&(z, _)| z) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    /// Weighted degree `Σ_y b(x, y)`.
    pub fn degree(&self, x: Vertex) -> f64 {
        self.adj[x].iter().map(|&(_, b)| b).sum()
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::all(self.len())
    }

    pub fn zeros(&self) -> VertexFunction {
        VertexFunction::zeros(self.len())
    }

    pub fn ones(&self) -> VertexFunction {
        VertexFunction::constant(self.len(), 1.0)
    }

    pub fn check_function(&self, f: &VertexFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn check_set(&self, set: &VertexSet) -> Result<()> {
        match set.max() {
            Some(x) if x >= self.len() => Err(Error::UnknownVertex(format!("#{x}"))),
            _ => Ok(()),
        }
    }

    /// Hop distances from `root`; unreachable vertices get `usize::MAX`.
    pub fn hop_distances(&self, root: Vertex) -> Result<Vec<usize>> {
        if root >= self.len() {
            return Err(Error::UnknownVertex(format!("#{root}")));
        }
        let mut dist = vec![usize::MAX; self.len()];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// All vertices within hop distance `r` of `root`.
    pub fn ball(&self, root: Vertex, r: usize) -> Result<VertexSet> {
        let dist = self.hop_distances(root)?;
        Ok((0..self.len()).filter(|&x| dist[x] <= r).collect())
    }

    /// Vertices of `set` that have a neighbor outside `set`.
    pub fn inner_boundary(&self, set: &VertexSet) -> VertexSet {
        let mask = set.mask(self.len());
        set.iter()
            .filter(|&x| self.adj[x].iter().any(|&(y, _)| !mask[y]))
            .collect()
    }

    /// The subgraph induced on `set`, with ids, measure and killing kept and
    /// vertices renumbered in increasing index order.
    pub fn induced_subgraph(&self, set: &VertexSet) -> Result<Graph> {
        self.check_set(set)?;
        let mask = set.mask(self.len());
        let mut builder = Graph::builder();
        let mut local = vec![usize::MAX; self.len()];
        for x in set {
            local[x] = builder.vertex(self.ids[x].clone(), self.m[x], self.c[x])?;
        }
        for e in &self.edges {
            if mask[e.u] && mask[e.v] {
                builder.edge_by_index(local[e.u], local[e.v], e.b)?;
            }
        }
        builder.build()
    }

    /// Copy with killing `c + α·m`: the graph realization of `E_α`.
    pub fn with_killing_shift(&self, alpha: f64) -> Graph {
        let mut g = self.clone();
        for x in 0..g.len() {
            g.c[x] += alpha * g.m[x];
        }
        g
    }

    pub fn with_killing(&self, c: Vec<f64>) -> Result<Graph> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        if let Some(x) = c.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidKilling {
                id: self.ids[x].clone(),
                value: c[x],
            });
        }
        let mut g = self.clone();
        g.c = c;
        Ok(g)
    }

    pub fn with_measure(&self, m: Vec<f64>) -> Result<Graph> {
        if m.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: m.len(),
            });
        }
        if let Some(x) = m.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidMeasure {
                id: self.ids[x].clone(),
                value: m[x],
            });
        }
        let mut g = self.clone();
        g.m = m;
        Ok(g)
    }

    /// Function from `(id, value)` pairs; unlisted vertices are zero.
    pub fn function_from_pairs<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<VertexFunction> {
        let mut f = self.zeros();
        for (id, v) in pairs {
            f[self.vertex(id)?] = v;
        }
        Ok(f)
    }

    pub fn set_from_ids<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<VertexSet> {
        ids.into_iter().map(|id| self.vertex(id)).collect()
    }
}

/// Generator families for fixtures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `0 − 1 − … − (n−1)`, unit weights.
    Path { n: usize },
    /// Path closed into a ring; needs `n ≥ 3`.
    Cycle { n: usize },
    /// Rooted tree in breadth-first numbering: root `0`, every vertex above
    /// depth `depth` has `branching` children. Unit weights.
    Tree { branching: usize, depth: usize },
    /// `0 − 1 − … − (n−1)` with `b(k, k+1) = growth^k`.
    Ray { n: usize, growth: f64 },
}

/// Generates `family` with unit measure and no killing.
pub fn generate(family: Family) -> Result<Graph> {
    generate_with(family, 1.0, 0.0)
}

/// Generates `family` with uniform measure `m` and killing `c`.
pub fn generate_with(family: Family, m: f64, c: f64) -> Result<Graph> {
    let mut builder = Graph::builder();
    let add_vertices = |builder: &mut GraphBuilder, n: usize| -> Result<()> {
        for k in 0..n {
            builder.vertex(k.to_string(), m, c)?;
        }
        Ok(())
    };
    match family {
        Family::Path { n } => {
            if n == 0 {
                return Err(Error::InvalidParameter("path needs n ≥ 1".into()));
            }
            add_vertices(&mut builder, n)?;
            for k in 1..n {
                builder.edge_by_index(k - 1, k, 1.0)?;
            }
        }
        Family::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidParameter("cycle needs n ≥ 3".into()));
            }
            add_vertices(&mut builder, n)?;
            for k in 0..n {
                builder.edge_by_index(k, (k + 1) % n, 1.0)?;
            }
        }
        Family::Tree { branching, depth } => {
            if branching < 2 || depth < 1 {
                return Err(Error::InvalidParameter(
                    "tree needs branching ≥ 2 and depth ≥ 1".into(),
                ));
            }
            let count = (0..=depth as u32)
                .try_fold(0usize, |acc, k| {
                    branching.checked_pow(k).and_then(|p| acc.checked_add(p))
                })
                .ok_or_else(|| Error::InvalidParameter("tree is too large".into()))?;
            add_vertices(&mut builder, count)?;
            for child in 1..count {
                builder.edge_by_index((child - 1) / branching, child, 1.0)?;
            }
        }
        Family::Ray { n, growth } => {
            if n == 0 || !(growth > 0.0 && growth.is_finite()) {
                return Err(Error::InvalidParameter(
                    "ray needs n ≥ 1 and growth > 0".into(),
                ));
            }
            add_vertices(&mut builder, n)?;
            for k in 1..n {
                builder.edge_by_index(k - 1, k, growth.powi(k as i32 - 1))?;
            }
        }
    }
    builder.build()
}
