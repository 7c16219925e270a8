#![allow(dead_code)]

use dirform::{Graph, VertexFunction, VertexSet};
use rand::Rng;

/// Random graph with `1..=max_n` vertices, `b ∈ (0, 2]`, `c ∈ [0, 1]`,
/// `m ∈ (0, 2]` and edge density `p`.
pub fn random_graph(rng: &mut impl Rng, max_n: usize, p: f64) -> Graph {
    let n = rng.gen_range(1..=max_n);
    let mut b = Graph::builder();
    for x in 0..n {
        let m = 2.0 - rng.gen_range(0.0..2.0);
        let c = rng.gen_range(0.0..=1.0);
        b.vertex(x.to_string(), m, c).unwrap();
    }
    for x in 0..n {
        for y in x + 1..n {
            if rng.gen_bool(p) {
                b.edge_by_index(x, y, 2.0 - rng.gen_range(0.0..2.0))
                    .unwrap();
            }
        }
    }
    b.build().unwrap()
}

/// Connected random graph: a random spanning tree plus extra edges.
pub fn random_connected(
    rng: &mut impl Rng,
    min_n: usize,
    max_n: usize,
    p: f64,
    killing: bool,
) -> Graph {
    let n = rng.gen_range(min_n..=max_n);
    let mut b = Graph::builder();
    for x in 0..n {
        let m = 2.0 - rng.gen_range(0.0..2.0);
        let c = if killing {
            rng.gen_range(0.0..=1.0)
        } else {
            0.0
        };
        b.vertex(x.to_string(), m, c).unwrap();
    }
    let mut present = std::collections::HashSet::new();
    for y in 1..n {
        let x = rng.gen_range(0..y);
        present.insert((x, y));
        b.edge_by_index(x, y, 2.0 - rng.gen_range(0.0..2.0))
            .unwrap();
    }
    for x in 0..n {
        for y in x + 1..n {
            if !present.contains(&(x, y)) && rng.gen_bool(p) {
                b.edge_by_index(x, y, 2.0 - rng.gen_range(0.0..2.0))
                    .unwrap();
            }
        }
    }
    b.build().unwrap()
}

pub fn random_function(rng: &mut impl Rng, n: usize, scale: f64) -> VertexFunction {
    VertexFunction::from_vec((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub fn random_nonnegative(rng: &mut impl Rng, n: usize, scale: f64) -> VertexFunction {
    VertexFunction::from_vec((0..n).map(|_| rng.gen_range(0.0..scale)).collect())
}

pub fn random_subset(rng: &mut impl Rng, n: usize, p: f64) -> VertexSet {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

/// `‖f‖_p` with respect to `m`; `p = ∞` is the sup norm.
pub fn lp_norm(g: &Graph, f: &VertexFunction, p: f64) -> f64 {
    if p.is_infinite() {
        return f.sup_norm();
    }
    (0..g.len())
        .map(|x| g.m(x) * f[x].abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

pub fn sup_diff(a: &VertexFunction, b: &VertexFunction) -> f64 {
    a.sub(b).sup_norm()
}
