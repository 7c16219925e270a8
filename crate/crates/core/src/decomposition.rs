//! Main part, killing part and reflected energy; ideal and extension checks
//! between finite forms; the two-point counterexample.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{energy, energy_phi, killing_energy, PhiMode};
use crate::function::{Exhaustion, VertexFunction};
use crate::potentials::LimitStatus;
use crate::Graph;

#[derive(Clone, Debug, Serialize)]
pub struct MainPart {
    pub value: f64,
    pub status: LimitStatus,
    /// `E_φ(f)` for each plateau cutoff.
    pub history: Vec<f64>,
}

/// Plateau cutoff for level `i`: 1 on `N_i`, 1/2 on `N_{i+1} ∖ N_i`, 0 elsewhere.
pub fn plateau_cutoff(g: &Graph, ex: &Exhaustion, level: usize) -> VertexFunction {
    let mut phi = g.zeros();
    if let Some(next) = ex.levels().get(level + 1) {
        for x in next {
            phi[x] = 0.5;
        }
    }
    for x in &ex.levels()[level] {
        phi[x] = 1.0;
    }
    phi
}

/// `E^(M)(f) = sup_φ E_φ(f)` along the plateau cutoffs of `ex`.
pub fn main_part(g: &Graph, ex: &Exhaustion, f: &VertexFunction, tol: f64) -> Result<MainPart> {
    g.check_function(f)?;
    let mut history: Vec<f64> = Vec::new();
    let mut settled = 0;
    let mut last_delta = f64::INFINITY;
    for level in 0..ex.len() {
        g.check_set(&ex.levels()[level])?;
        let phi = plateau_cutoff(g, ex, level);
        let value = energy_phi(g, &phi, f, PhiMode::ByFormula)?;
        if let Some(&prev) = history.last() {
            last_delta = value - prev;
            settled = if last_delta.abs() < tol {
                settled + 1
            } else {
                0
            };
        }
        history.push(value);
        if phi.values().iter().all(|&p| p == 1.0) {
            return Ok(MainPart {
                value,
                status: LimitStatus::Exact,
                history,
            });
        }
        if settled >= 2 {
            return Ok(MainPart {
                value,
                status: LimitStatus::Converged {
                    levels_used: level + 1,
                    last_delta,
                },
                history,
            });
        }
    }
    Ok(MainPart {
        value: *history.last().expect("exhaustions have at least one level"),
        status: LimitStatus::NotConverged { last_delta },
        history,
    })
}

/// `E^(k)(f) = Σ c f²`.
pub fn killing_part(g: &Graph, f: &VertexFunction) -> f64 {
    killing_energy(g, f)
}

/// `E^ref = E^(M) + E^(k)`, with the main part evaluated along covering
/// balls so the plateau reaches `φ ≡ 1`.
pub fn reflected_energy(g: &Graph, f: &VertexFunction) -> Result<f64> {
    g.check_function(f)?;
    if g.is_empty() {
        return Ok(0.0);
    }
    let ex = Exhaustion::covering_balls(g, 0)?;
    Ok(main_part(g, &ex, f, 0.0)?.value + killing_part(g, f))
}

/// A quadratic form given by a graph energy on an explicit finite-dimensional
/// domain, and `+∞` off it.
#[derive(Clone, Debug)]
pub struct FiniteForm {
    graph: Graph,
    basis: Vec<VertexFunction>,
    orthonormal: Vec<VertexFunction>,
}

const MEMBERSHIP_TOL: f64 = 1e-9;
const GRAM_TOL: f64 = 1e-12;

impl FiniteForm {
    pub fn new(graph: Graph, basis: Vec<VertexFunction>) -> Result<FiniteForm> {
        for f in &basis {
            graph.check_function(f)?;
        }
        let mut orthonormal: Vec<VertexFunction> = Vec::with_capacity(basis.len());
        let mut gram = 1.0;
        for f in &basis {
            let mut v = f.clone();
            for q in &orthonormal {
                v = v.sub(&q.scale(q.dot(&v)));
            }
            let norm2 = v.dot(&v);
            gram *= norm2;
            if gram <= GRAM_TOL {
                return Err(Error::DependentBasis(gram));
            }
            orthonormal.push(v.scale(1.0 / norm2.sqrt()));
        }
        Ok(FiniteForm {
            graph,
            basis,
            orthonormal,
        })
    }

    /// The form with domain all functions, spanned by the point indicators.
    pub fn full(graph: Graph) -> FiniteForm {
        let n = graph.len();
        let basis = (0..n).map(|x| VertexFunction::delta(n, x)).collect();
        FiniteForm::new(graph, basis).expect("point indicators are orthonormal")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn basis(&self) -> &[VertexFunction] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Distance from `f` to the domain.
    pub fn residual(&self, f: &VertexFunction) -> f64 {
        let mut v = f.clone();
        for q in &self.orthonormal {
            v = v.sub(&q.scale(q.dot(&v)));
        }
        v.dot(&v).sqrt()
    }

    pub fn contains(&self, f: &VertexFunction) -> bool {
        self.residual(f) < MEMBERSHIP_TOL * (1.0 + f.dot(f).sqrt())
    }

    /// `E(f)` on the domain, `+∞` off it.
    pub fn value(&self, f: &VertexFunction) -> f64 {
        if self.contains(f) {
            energy(&self.graph, f)
        } else {
            f64::INFINITY
        }
    }

    fn same_vertices(&self, other: &FiniteForm) -> Result<()> {
        if self.graph.ids() == other.graph.ids() {
            Ok(())
        } else {
            Err(Error::MismatchedVertexSets)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdealCheck {
    pub holds: bool,
    /// `(f, g, f⊙g)` with `f` from the smaller domain, `g` from the larger
    /// one, and the product outside the smaller domain.
    pub witness: Option<(VertexFunction, VertexFunction, VertexFunction)>,
}

/// Whether `D(A)` is an algebraic ideal in `D(B)`: products of basis
/// elements stay in `D(A)`. Bilinearity of the pointwise product makes basis
/// pairs sufficient.
pub fn ideal_check(a: &FiniteForm, b: &FiniteForm) -> Result<IdealCheck> {
    a.same_vertices(b)?;
    for f in a.basis() {
        for g in b.basis() {
            let product = f.mul(g);
            if !a.contains(&product) {
                return Ok(IdealCheck {
                    holds: false,
                    witness: Some((f.clone(), g.clone(), product)),
                });
            }
        }
    }
    Ok(IdealCheck {
        holds: true,
        witness: None,
    })
}

/// Whether `B` extends `A`: `D(A) ⊆ D(B)` and the energies agree on `D(A)`.
/// Agreement is checked on basis elements and their pairwise sums, which
/// pins down the bilinear forms by polarization.
pub fn is_extension(a: &FiniteForm, b: &FiniteForm) -> Result<bool> {
    a.same_vertices(b)?;
    if !a.basis().iter().all(|f| b.contains(f)) {
        return Ok(false);
    }
    let agree = |f: &VertexFunction| {
        let (ea, eb) = (energy(a.graph(), f), energy(b.graph(), f));
        (ea - eb).abs() <= 1e-9 * (1.0 + ea.abs())
    };
    let basis = a.basis();
    for (i, f) in basis.iter().enumerate() {
        if !agree(f) {
            return Ok(false);
        }
        for g in &basis[i + 1..] {
            if !agree(&f.add(g)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether `B` is a Silverstein extension of `A`.
pub fn is_silverstein_extension(a: &FiniteForm, b: &FiniteForm) -> Result<bool> {
    Ok(is_extension(a, b)? && ideal_check(a, b)?.holds)
}

/// Indices of forms in `family` that are Silverstein extensions of `form`
/// with a strictly larger domain.
pub fn strictly_larger_silverstein_extensions(
    form: &FiniteForm,
    family: &[&FiniteForm],
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, other) in family.iter().enumerate() {
        if other.dim() > form.dim() && is_silverstein_extension(form, other)? {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessEntry {
    pub form: String,
    pub one_in_domain: bool,
    pub strictly_larger_extensions: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    /// `E(1_a)`
    pub e_indicator_a: f64,
    /// `E₁(1)`
    pub e1_one: f64,
    /// `E₂(1_a − 1)`
    pub e2_indicator_a_minus_one: f64,
    pub e1_extends_e: bool,
    pub e2_extends_e: bool,
    pub e1_ideal: bool,
    pub e2_ideal: bool,
    pub e1_extends_e2: bool,
    pub e2_extends_e1: bool,
    /// A maximal Silverstein extension `Ẽ` would be recurrent (`Ẽ(1) ≤ E₁(1)`)
    /// and force `E(1_a) = Ẽ(1_a − 1) ≤ E₂(1_a − 1)`; this is whether that
    /// inequality fails.
    pub maximal_extension_excluded: bool,
    pub periodic_ideal: IdealCheck,
    pub periodic_extends: bool,
    pub silverstein_uniqueness: Vec<UniquenessEntry>,
}

impl CounterexampleReport {
    /// Every asserted value and flag matches the expected arithmetic.
    pub fn certified(&self) -> bool {
        self.e_indicator_a == 1.0
            && self.e1_one == 0.0
            && self.e2_indicator_a_minus_one == 0.0
            && self.e1_extends_e
            && self.e2_extends_e
            && self.e1_ideal
            && self.e2_ideal
            && !self.e1_extends_e2
            && !self.e2_extends_e1
            && self.maximal_extension_excluded
            && !self.periodic_ideal.holds
            && self.periodic_extends
            && self
                .silverstein_uniqueness
                .iter()
                .all(|u| !u.one_in_domain || u.strictly_larger_extensions.is_empty())
    }
}

fn two_point(b: Option<f64>, c: [f64; 2]) -> Graph {
    let mut builder = Graph::builder();
    builder.vertex("a", 1.0, c[0]).expect("valid vertex");
    builder.vertex("b", 1.0, c[1]).expect("valid vertex");
    if let Some(b) = b {
        builder.edge("a", "b", b).expect("valid edge");
    }
    builder.build().expect("valid graph")
}

/// The forms `E` (`f(a)²` if `f(b) = 0`), `E₁` (`(f(a) − f(b))²`) and `E₂`
/// (`f(a)²`) on `{a, b}`.
pub fn two_point_forms() -> (FiniteForm, FiniteForm, FiniteForm) {
    let e = FiniteForm::new(
        two_point(None, [1.0, 0.0]),
        vec![VertexFunction::delta(2, 0)],
    )
    .expect("valid basis");
    // Ordered-pair doubling: b = 1/2 gives (f(a) − f(b))².
    let e1 = FiniteForm::full(two_point(Some(0.5), [0.0, 0.0]));
    let e2 = FiniteForm::full(two_point(None, [1.0, 0.0]));
    (e, e1, e2)
}

/// `E` with periodic domain `{f(a) = f(b)}` and its full-domain extension.
pub fn periodic_forms() -> (FiniteForm, FiniteForm) {
    let g = two_point(None, [1.0, 1.0]);
    let e = FiniteForm::new(g.clone(), vec![g.ones()]).expect("valid basis");
    (e, FiniteForm::full(g))
}

pub fn counterexample_suite() -> Result<CounterexampleReport> {
    let (e, e1, e2) = two_point_forms();
    let one = e.graph().ones();
    let ind_a = VertexFunction::delta(2, 0);

    let e_indicator_a = e.value(&ind_a);
    let e1_one = e1.value(&one);
    let e2_indicator_a_minus_one = e2.value(&ind_a.sub(&one));

    let (pe, pfull) = periodic_forms();
    let named: [(&str, &FiniteForm); 3] = [("E", &e), ("E1", &e1), ("E2", &e2)];
    let family: Vec<&FiniteForm> = named.iter().map(|(_, f)| *f).collect();
    let mut silverstein_uniqueness = Vec::new();
    for (name, form) in &named {
        let larger = strictly_larger_silverstein_extensions(form, &family)?;
        silverstein_uniqueness.push(UniquenessEntry {
            form: name.to_string(),
            one_in_domain: form.contains(&one),
            strictly_larger_extensions: larger
                .into_iter()
                .map(|i| named[i].0.to_string())
                .collect(),
        });
    }

    Ok(CounterexampleReport {
        e_indicator_a,
        e1_one,
        e2_indicator_a_minus_one,
        e1_extends_e: is_extension(&e, &e1)?,
        e2_extends_e: is_extension(&e, &e2)?,
        e1_ideal: ideal_check(&e, &e1)?.holds,
        e2_ideal: ideal_check(&e, &e2)?.holds,
        e1_extends_e2: is_extension(&e2, &e1)?,
        e2_extends_e1: is_extension(&e1, &e2)?,
        maximal_extension_excluded: e_indicator_a > e2_indicator_a_minus_one,
        periodic_ideal: ideal_check(&pe, &pfull)?,
        periodic_extends: is_extension(&pe, &pfull)?,
        silverstein_uniqueness,
    })
}
