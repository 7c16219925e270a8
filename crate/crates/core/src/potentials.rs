//! Potentials, resolvents, réduites and capacities.
//!
//! Every solve works on a finite support set `N` with the Dirichlet
//! convention: functions vanish outside `N`, and vertices of `N` with
//! neighbors outside see those edges only through `deg(x)`. The restricted
//! matrix `A_N` is a symmetric M-matrix; it is positive definite exactly when
//! every component of `N` carries killing or has an edge leaving `N`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{energy, laplacian, laplacian_at};
use crate::function::{Exhaustion, Functional, Vertex, VertexFunction, VertexSet};
use crate::linalg::{self, SymMatrix};
use crate::structure::components_within;
use crate::Graph;

/// Residual bound for restricted solves, relative to `‖ℓ‖∞ + ‖A_N‖∞‖u‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Fails if some component of `set` lies in the kernel of the restricted
/// form.
pub fn check_transient(g: &Graph, set: &VertexSet) -> Result<()> {
    let boundary = g.inner_boundary(set).mask(g.len());
    for comp in components_within(g, set) {
        let leaks = comp.iter().any(|x| boundary[x] || g.c(x) > 0.0);
        if !leaks {
            return Err(Error::SingularRestriction {
                vertex: g.id(comp.as_slice()[0]).to_string(),
            });
        }
    }
    Ok(())
}

fn scatter(g: &Graph, set: &VertexSet, local: &[f64]) -> VertexFunction {
    let mut u = g.zeros();
    for (i, x) in set.iter().enumerate() {
        u[x] = local[i];
    }
    u
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn matrix_norm(a: &SymMatrix) -> f64 {
    (0..a.dim())
        .map(|i| a.diag(i).abs() + a.row(i).iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `G^N ℓ`: the solution of `Σ L̃u ψ = ℓ(ψ)` for all `ψ` supported in `N`,
/// with `u = 0` outside `N`.
pub fn restricted_potential(
    g: &Graph,
    set: &VertexSet,
    ell: &Functional,
) -> Result<VertexFunction> {
    g.check_set(set)?;
    if ell.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            got: ell.len(),
        });
    }
    check_transient(g, set)?;
    let a = SymMatrix::restricted(g, set, None);
    let rhs: Vec<f64> = set.iter().map(|x| ell.coeffs()[x]).collect();
    let sol = linalg::solve(g, set.as_slice(), &a, &rhs)?;
    let au = a.mul(&sol);
    let residual = au
        .iter()
        .zip(&rhs)
        .fold(0.0, |m, (l, r)| f64::max(m, (l - r).abs()));
    let scale = max_abs(&rhs) + matrix_norm(&a) * max_abs(&sol);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::Solver(format!(
            "restricted solve residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(scatter(g, set, &sol))
}

/// `G_α f` on `N`: solves `(A_N + α·m) u = f·m`.
pub fn resolvent(
    g: &Graph,
    set: &VertexSet,
    alpha: f64,
    f: &VertexFunction,
) -> Result<VertexFunction> {
    check_alpha(alpha)?;
    g.check_function(f)?;
    restricted_potential(
        &g.with_killing_shift(alpha),
        set,
        &Functional::from_m_density(g, f),
    )
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitStatus {
    /// The exhaustion reached the whole vertex set.
    Exact,
    Converged {
        levels_used: usize,
        last_delta: f64,
    },
    NotConverged {
        last_delta: f64,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct LimitConfig {
    /// Sup-norm increment over the probe set below which a level counts as
    /// settled; two settled levels in a row declare convergence.
    pub tol: f64,
    /// Allowed decrease between levels, relative to `1 + |u|`.
    pub monotone_tol: f64,
}

impl LimitConfig {
    pub fn new(tol: f64) -> Self {
        LimitConfig {
            tol,
            monotone_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialResult {
    pub u: VertexFunction,
    pub status: LimitStatus,
    /// Largest decrease observed between consecutive levels (0 if monotone).
    pub monotonicity_witness: f64,
    /// Max over the probe set of `u_N` at each level.
    pub probe_history: Vec<f64>,
}

/// Checks `next ≥ prev − tol·(1 + |next|)` and returns the largest decrease.
pub(crate) fn monotone_step(
    g: &Graph,
    prev: &VertexFunction,
    next: &VertexFunction,
    level: usize,
    tol: f64,
) -> Result<f64> {
    let mut witness = 0.0f64;
    for x in 0..g.len() {
        let drop = prev[x] - next[x];
        if drop > tol * (1.0 + next[x].abs()) {
            return Err(Error::NonMonotone {
                level,
                vertex: g.id(x).to_string(),
                decrease: drop,
            });
        }
        witness = witness.max(drop);
    }
    Ok(witness)
}

/// `G^r ℓ = sup_N G^N ℓ` for a nonnegative functional, computed level by
/// level along `ex`.
pub fn extended_potential(
    g: &Graph,
    ex: &Exhaustion,
    ell: &Functional,
    config: &LimitConfig,
    probe: &VertexSet,
) -> Result<PotentialResult> {
    if let Some(x) = ell.first_negative() {
        return Err(Error::NonPositiveFunctional {
            vertex: g.id(x).to_string(),
            value: ell.coeffs()[x],
        });
    }
    g.check_set(probe)?;
    let mut prev: Option<VertexFunction> = None;
    let mut witness = 0.0f64;
    let mut history = Vec::new();
    let mut settled = 0;
    let mut last_delta = f64::INFINITY;
    for (level, set) in ex.levels().iter().enumerate() {
        g.check_set(set)?;
        let u = restricted_potential(g, set, ell)?;
        history.push(probe.iter().map(|x| u[x]).fold(f64::NEG_INFINITY, f64::max));
        if let Some(p) = &prev {
            witness = witness.max(monotone_step(g, p, &u, level, config.monotone_tol)?);
            last_delta = probe
                .iter()
                .map(|x| (u[x] - p[x]).abs())
                .fold(0.0, f64::max);
            settled = if last_delta < config.tol {
                settled + 1
            } else {
                0
            };
        }
        if set.len() == g.len() {
            return Ok(PotentialResult {
                u,
                status: LimitStatus::Exact,
                monotonicity_witness: witness,
                probe_history: history,
            });
        }
        if settled >= 2 {
            return Ok(PotentialResult {
                u,
                status: LimitStatus::Converged {
                    levels_used: level + 1,
                    last_delta,
                },
                monotonicity_witness: witness,
                probe_history: history,
            });
        }
        prev = Some(u);
    }
    Ok(PotentialResult {
        u: prev.expect("exhaustions have at least one level"),
        status: LimitStatus::NotConverged { last_delta },
        monotonicity_witness: witness,
        probe_history: history,
    })
}

/// `G^r_α f` for `f ≥ 0`: [`extended_potential`] of `E_α` applied to `ℓ_f`.
pub fn extended_resolvent(
    g: &Graph,
    ex: &Exhaustion,
    alpha: f64,
    f: &VertexFunction,
    config: &LimitConfig,
    probe: &VertexSet,
) -> Result<PotentialResult> {
    check_alpha(alpha)?;
    g.check_function(f)?;
    extended_potential(
        &g.with_killing_shift(alpha),
        ex,
        &Functional::from_m_density(g, f),
        config,
        probe,
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `max (obstacle − h)₊` on the constraint set.
    pub feasibility: f64,
    /// `max (−L̃h)₊` on the support set.
    pub dual: f64,
    /// `max |(h − obstacle)·L̃h|` on the constraint set.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.feasibility.max(self.dual).max(self.complementarity)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ObstacleConfig {
    pub omega: f64,
    pub max_sweeps: usize,
    /// PSOR stops once a sweep moves no entry by more than this (relative).
    pub sweep_tol: f64,
    pub kkt_tol: f64,
    pub max_polish: usize,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig {
            omega: 1.5,
            max_sweeps: 100_000,
            sweep_tol: 1e-10,
            kkt_tol: 1e-9,
            max_polish: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Reduite {
    pub h: VertexFunction,
    pub capacity: f64,
    pub kkt: KktResiduals,
    pub sweeps: usize,
    pub polish_iterations: usize,
    /// `Σ L̃h·h`, equal to the capacity at the minimizer.
    pub dual_capacity: f64,
    /// When the obstacle is nonnegative and superharmonic on `N`: whether
    /// `obstacle·1_U ≤ h ≤ obstacle` holds.
    pub dominated_by_obstacle: Option<bool>,
}

/// The réduite `h_U`: minimizer of `E` over functions supported in `N` with
/// `f ≥ obstacle` on `U`, and its energy (the capacity).
pub fn reduite(
    g: &Graph,
    set: &VertexSet,
    window: &VertexSet,
    obstacle: &VertexFunction,
) -> Result<Reduite> {
    reduite_with(g, set, window, obstacle, &ObstacleConfig::default())
}

pub fn reduite_with(
    g: &Graph,
    set: &VertexSet,
    window: &VertexSet,
    obstacle: &VertexFunction,
    config: &ObstacleConfig,
) -> Result<Reduite> {
    g.check_set(set)?;
    g.check_set(window)?;
    g.check_function(obstacle)?;
    let in_set = set.mask(g.len());
    if let Some(x) = window.iter().find(|&x| !in_set[x] && obstacle[x] > 0.0) {
        return Err(Error::Infeasible {
            vertex: g.id(x).to_string(),
        });
    }
    let constrained = window.mask(g.len());
    let boundary = g.inner_boundary(set).mask(g.len());

    // Components needing no lift keep h = 0.
    let mut active = Vec::new();
    for comp in components_within(g, set) {
        let lifted = comp.iter().any(|x| constrained[x] && obstacle[x] > 0.0);
        if !lifted {
            continue;
        }
        if !comp.iter().any(|x| boundary[x] || g.c(x) > 0.0) {
            return Err(Error::NonCoercive {
                vertex: g.id(comp.as_slice()[0]).to_string(),
            });
        }
        active.extend(comp.iter());
    }
    let active: VertexSet = active.into_iter().collect();
    let a = SymMatrix::restricted(g, &active, None);
    let lower: Vec<Option<f64>> = active
        .iter()
        .map(|x| constrained[x].then_some(obstacle[x]))
        .collect();

    let (u, sweeps) = psor(&a, &lower, config);
    let (u, polish_iterations) = active_set_polish(g, &active, &a, &lower, u, config)?;

    let h = scatter(g, &active, &u);
    let lap = laplacian(g, &h, set);
    let kkt = kkt_residuals(&h, &lap, set, window, obstacle);
    let scale = 1.0 + obstacle.sup_norm() * (1.0 + matrix_norm(&a));
    if kkt.max() > config.kkt_tol * scale {
        return Err(Error::MaxIterations {
            iterations: polish_iterations,
            residuals: kkt,
            best: Box::new(h),
        });
    }

    let admissible = obstacle.is_nonnegative()
        && set
            .iter()
            .all(|x| laplacian_at(g, obstacle, x) >= -config.kkt_tol * scale);
    let dominated_by_obstacle = admissible.then(|| {
        let slack = config.kkt_tol * scale;
        (0..g.len()).all(|x| {
            let lower = if constrained[x] { obstacle[x] } else { 0.0 };
            h[x] >= lower - slack && h[x] <= obstacle[x] + slack
        })
    });

    Ok(Reduite {
        capacity: energy(g, &h),
        dual_capacity: lap.dot(&h),
        h,
        kkt,
        sweeps,
        polish_iterations,
        dominated_by_obstacle,
    })
}

fn kkt_residuals(
    h: &VertexFunction,
    lap: &VertexFunction,
    set: &VertexSet,
    window: &VertexSet,
    obstacle: &VertexFunction,
) -> KktResiduals {
    let mut kkt = KktResiduals::default();
    for x in set {
        kkt.dual = kkt.dual.max(-lap[x]);
    }
    for x in window {
        kkt.feasibility = kkt.feasibility.max(obstacle[x] - h[x]);
        if set.contains(x) {
            kkt.complementarity = kkt
                .complementarity
                .max(((h[x] - obstacle[x]) * lap[x]).abs());
        }
    }
    kkt
}

/// Projected SOR for `min uᵀAu` subject to `u_i ≥ lower_i`.
fn psor(a: &SymMatrix, lower: &[Option<f64>], config: &ObstacleConfig) -> (Vec<f64>, usize) {
    let n = a.dim();
    let mut u: Vec<f64> = lower
        .iter()
        .map(|l| l.map_or(0.0, |v| v.max(0.0)))
        .collect();
    for sweep in 1..=config.max_sweeps {
        let mut moved = 0.0f64;
        for i in 0..n {
            let gs = -a.row(i).iter().map(|&(j, v)| v * u[j]).sum::<f64>() / a.diag(i);
            let mut next = (1.0 - config.omega) * u[i] + config.omega * gs;
            if let Some(l) = lower[i] {
                next = next.max(l);
            }
            moved = moved.max((next - u[i]).abs());
            u[i] = next;
        }
        if moved <= config.sweep_tol * (1.0 + max_abs(&u)) {
            return (u, sweep);
        }
    }
    (u, config.max_sweeps)
}

/// Primal-dual active-set iteration started from `u`: pin the active
/// constraints, solve the remaining equality system exactly, and update the
/// active set from the multipliers until it is stable.
fn active_set_polish(
    g: &Graph,
    active: &VertexSet,
    a: &SymMatrix,
    lower: &[Option<f64>],
    mut u: Vec<f64>,
    config: &ObstacleConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let labels: Vec<Vertex> = active.iter().collect();
    let select = |u: &[f64]| -> Vec<bool> {
        let multiplier = a.mul(u);
        (0..n)
            .map(|i| match lower[i] {
                Some(l) => multiplier[i] + a.diag(i) * (l - u[i]) > 0.0,
                None => false,
            })
            .collect()
    };
    let mut pinned = select(&u);
    for iteration in 1..=config.max_polish {
        let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                if pinned[i] {
                    lower[i].expect("pinned entries are constrained")
                } else {
                    0.0
                }
            })
            .collect();
        if !free.is_empty() {
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| {
                    -a.row(i)
                        .iter()
                        .filter(|&&(j, _)| pinned[j])
                        .map(|&(j, v)| v * next[j])
                        .sum::<f64>()
                })
                .collect();
            let sub = a.principal(&free);
            let sub_labels: Vec<Vertex> = free.iter().map(|&i| labels[i]).collect();
            let sol = linalg::solve(g, &sub_labels, &sub, &rhs)?;
            for (k, &i) in free.iter().enumerate() {
                next[i] = sol[k];
            }
        }
        u = next;
        let updated = select(&u);
        if updated == pinned {
            return Ok((u, iteration));
        }
        pinned = updated;
    }
    Ok((u, config.max_polish))
}

/// Energy of the réduite.
pub fn capacity(
    g: &Graph,
    set: &VertexSet,
    window: &VertexSet,
    obstacle: &VertexFunction,
) -> Result<f64> {
    reduite(g, set, window, obstacle).map(|r| r.capacity)
}

/// Minimum principle: if `u ≥ 0` is a supersolution (`L̃u ≥ ℓ` on `N`),
/// then `u ≥ G^N ℓ`. Errors if `u` is not a supersolution; otherwise
/// returns whether the domination holds.
pub fn minimality_check(
    g: &Graph,
    set: &VertexSet,
    ell: &Functional,
    u: &VertexFunction,
) -> Result<bool> {
    g.check_function(u)?;
    if let Some(x) = ell.first_negative() {
        return Err(Error::NonPositiveFunctional {
            vertex: g.id(x).to_string(),
            value: ell.coeffs()[x],
        });
    }
    if let Some(x) = (0..g.len()).find(|&x| u[x] < 0.0) {
        return Err(Error::NegativeInput {
            vertex: g.id(x).to_string(),
            value: u[x],
        });
    }
    let tol = 1e-9 * (1.0 + ell.sup_norm());
    for x in set {
        let value = laplacian_at(g, u, x);
        if value < ell.coeffs()[x] - tol {
            return Err(Error::NotSupersolution {
                vertex: g.id(x).to_string(),
                value,
                required: ell.coeffs()[x],
            });
        }
    }
    let potential = restricted_potential(g, set, ell)?;
    Ok((0..g.len()).all(|x| u[x] >= potential[x] - 1e-9 * (1.0 + potential[x].abs())))
}
