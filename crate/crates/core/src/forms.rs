//! Energies, the bilinear form and the formal Laplacian.
//!
//! Sums over edges run over **ordered** pairs, so every edge is counted
//! twice:
//!
//! ```text
//! E(f)   = Σ_{x,y} b(x,y) (f(x) − f(y))² + Σ_x c(x) f(x)²
//! L̃f(x) = 2 Σ_y b(x,y) (f(x) − f(y)) + c(x) f(x)
//! ```
//!
//! With this convention `E(f, ψ) = Σ_x L̃f(x) ψ(x)` for finitely supported
//! `ψ`, and the restricted matrix of `E` is `2·deg + c` on the diagonal and
//! `−2b` off it. Most graph libraries sum over unordered edges instead; values
//! here are twice theirs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::{VertexFunction, VertexSet};
use crate::linalg::{self, SymMatrix};
use crate::structure;
use crate::Graph;

/// Jump part `Σ_{x,y} b(x,y)(f(x) − f(y))²` over ordered pairs.
pub fn jump_energy(g: &Graph, f: &VertexFunction) -> f64 {
    g.edges()
        .iter()
        .map(|e| 2.0 * e.b * (f[e.u] - f[e.v]).powi(2))
        .sum()
}

/// Killing part `Σ_x c(x) f(x)²`.
pub fn killing_energy(g: &Graph, f: &VertexFunction) -> f64 {
    (0..g.len()).map(|x| g.c(x) * f[x] * f[x]).sum()
}

pub fn energy(g: &Graph, f: &VertexFunction) -> f64 {
    jump_energy(g, f) + killing_energy(g, f)
}

pub fn bilinear(g: &Graph, f: &VertexFunction, h: &VertexFunction) -> f64 {
    let jump: f64 = g
        .edges()
        .iter()
        .map(|e| 2.0 * e.b * (f[e.u] - f[e.v]) * (h[e.u] - h[e.v]))
        .sum();
    jump + (0..g.len()).map(|x| g.c(x) * f[x] * h[x]).sum::<f64>()
}

/// `L̃f(x)` at a single vertex.
pub fn laplacian_at(g: &Graph, f: &VertexFunction, x: usize) -> f64 {
    let jump: f64 = g.neighbors(x).iter().map(|&(y, b)| b * (f[x] - f[y])).sum();
    2.0 * jump + g.c(x) * f[x]
}

/// `L̃f` on `window`, zero elsewhere.
pub fn laplacian(g: &Graph, f: &VertexFunction, window: &VertexSet) -> VertexFunction {
    let mut out = g.zeros();
    for x in window {
        out[x] = laplacian_at(g, f, x);
    }
    out
}

/// As [`laplacian`], but treats `f` as known only on `defined` and fails if
/// a window vertex has a neighbor outside it.
pub fn laplacian_on_defined(
    g: &Graph,
    f: &VertexFunction,
    defined: &VertexSet,
    window: &VertexSet,
) -> Result<VertexFunction> {
    let known = defined.mask(g.len());
    for x in window {
        let missing = std::iter::once(x)
            .chain(g.neighbors(x).iter().map(|&(y, _)| y))
            .find(|&y| !known[y]);
        if let Some(y) = missing {
            return Err(Error::UndefinedValue {
                vertex: g.id(y).to_string(),
            });
        }
    }
    Ok(laplacian(g, f, window))
}

/// A 1-Lipschitz map `C: ℝ → ℝ` with `C(0) = 0`.
#[derive(Clone)]
pub enum NormalContraction {
    /// `x ↦ (x ∨ 0) ∧ 1`
    UnitCutoff,
    Abs,
    /// `x ↦ (x ∧ n) ∨ (−n)`
    Clamp(f64),
    /// `x ↦ (x ∨ −ε) ∧ (1 + ε)`: monotone, identity on `[0, 1]`, values in
    /// `[−ε, 1 + ε]`.
    EpsCutoff(f64),
    PositivePart,
    /// `x ↦ (x − α)₊ − (x + α)₋`
    Shrink(f64),
    Custom(CustomContraction),
}

#[derive(Clone)]
pub struct CustomContraction {
    name: String,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// Sample grid used to validate custom contractions.
const LIPSCHITZ_GRID: std::ops::RangeInclusive<i32> = -2000..=2000;
const LIPSCHITZ_STEP: f64 = 0.01;

impl NormalContraction {
    pub fn builtins() -> Vec<NormalContraction> {
        vec![
            NormalContraction::UnitCutoff,
            NormalContraction::Abs,
            NormalContraction::Clamp(0.5),
            NormalContraction::EpsCutoff(0.1),
            NormalContraction::PositivePart,
            NormalContraction::Shrink(0.25),
        ]
    }

    /// Wraps `map` after checking `C(0) = 0` and the Lipschitz bound on a
    /// grid over `[−20, 20]`.
    pub fn custom(
        name: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<NormalContraction> {
        let name = name.into();
        if map(0.0) != 0.0 {
            return Err(Error::NotContraction(name));
        }
        let points: Vec<f64> = LIPSCHITZ_GRID.map(|k| k as f64 * LIPSCHITZ_STEP).collect();
        let lipschitz = points
            .windows(2)
            .all(|w| (map(w[1]) - map(w[0])).abs() <= (w[1] - w[0]) * (1.0 + 1e-12));
        if !lipschitz {
            return Err(Error::NotContraction(name));
        }
        Ok(NormalContraction::Custom(CustomContraction {
            name,
            map: Arc::new(map),
        }))
    }

    /// Parses `unit_cutoff`, `abs`, `positive_part`, `clamp(n)`,
    /// `eps_cutoff(e)` and `shrink(a)`.
    pub fn parse(spec: &str) -> Result<NormalContraction> {
        let bad = || Error::InvalidParameter(format!("unknown contraction `{spec}`"));
        let spec = spec.trim();
        match spec {
            "unit_cutoff" => return Ok(NormalContraction::UnitCutoff),
            "abs" => return Ok(NormalContraction::Abs),
            "positive_part" => return Ok(NormalContraction::PositivePart),
            _ => {}
        }
        let (name, rest) = spec.split_once('(').ok_or_else(bad)?;
        let arg: f64 = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if !(arg >= 0.0 && arg.is_finite()) {
            return Err(bad());
        }
        match name {
            "clamp" => Ok(NormalContraction::Clamp(arg)),
            "eps_cutoff" => Ok(NormalContraction::EpsCutoff(arg)),
            "shrink" => Ok(NormalContraction::Shrink(arg)),
            _ => Err(bad()),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            NormalContraction::UnitCutoff => x.clamp(0.0, 1.0),
            NormalContraction::Abs => x.abs(),
            NormalContraction::Clamp(n) => x.min(*n).max(-n),
            NormalContraction::EpsCutoff(eps) => x.max(-eps).min(1.0 + eps),
            NormalContraction::PositivePart => x.max(0.0),
            NormalContraction::Shrink(a) => (x - a).max(0.0) - (x + a).min(0.0).abs(),
            NormalContraction::Custom(c) => (c.map)(x),
        }
    }
}

impl fmt::Display for NormalContraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalContraction::UnitCutoff => write!(f, "unit_cutoff"),
            NormalContraction::Abs => write!(f, "abs"),
            NormalContraction::Clamp(n) => write!(f, "clamp({n})"),
            NormalContraction::EpsCutoff(e) => write!(f, "eps_cutoff({e})"),
            NormalContraction::PositivePart => write!(f, "positive_part"),
            NormalContraction::Shrink(a) => write!(f, "shrink({a})"),
            NormalContraction::Custom(c) => write!(f, "{}", c.name),
        }
    }
}

impl fmt::Debug for NormalContraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn apply_contraction(contraction: &NormalContraction, f: &VertexFunction) -> VertexFunction {
    f.map(|v| contraction.apply(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiMode {
    /// `E(φf) − E(φf², φ)`
    ByDefinition,
    /// `Σ_{x,y} φ(x)φ(y) b(x,y)(f(x) − f(y))²`
    ByFormula,
}

/// The truncated energy `E_φ(f)` for a cutoff `0 ≤ φ ≤ 1`.
pub fn energy_phi(
    g: &Graph,
    phi: &VertexFunction,
    f: &VertexFunction,
    mode: PhiMode,
) -> Result<f64> {
    if let Some(x) = (0..g.len()).find(|&x| !(0.0..=1.0).contains(&phi[x])) {
        return Err(Error::PhiOutOfRange {
            vertex: g.id(x).to_string(),
            value: phi[x],
        });
    }
    Ok(match mode {
        PhiMode::ByDefinition => {
            let phi_f = phi.mul(f);
            let phi_f2 = phi_f.mul(f);
            energy(g, &phi_f) - bilinear(g, &phi_f2, phi)
        }
        PhiMode::ByFormula => g
            .edges()
            .iter()
            .map(|e| 2.0 * phi[e.u] * phi[e.v] * e.b * (f[e.u] - f[e.v]).powi(2))
            .sum(),
    })
}

#[derive(Clone, Debug)]
pub struct ApproximatingForm {
    pub value: f64,
    pub minimizer: VertexFunction,
}

/// `q^(α,U)(f) = inf_g { E(g) + α Σ_{x∈U} m(x)(g(x) − f(x))² }`, solved
/// exactly through `(A + α M_U) g = α M_U f`.
///
/// Components that meet `U` are solved; on the others `g = 0` is optimal.
pub fn approximating_form_minimizer(
    g: &Graph,
    alpha: f64,
    window: &VertexSet,
    f: &VertexFunction,
) -> Result<ApproximatingForm> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    g.check_set(window)?;
    let in_window = window.mask(g.len());
    let active: VertexSet = structure::components(g)
        .into_iter()
        .filter(|comp| comp.iter().any(|x| in_window[x]))
        .flat_map(|comp| comp.as_slice().to_vec())
        .collect();
    let shift: Vec<f64> = (0..g.len())
        .map(|x| if in_window[x] { alpha * g.m(x) } else { 0.0 })
        .collect();
    let a = SymMatrix::restricted(g, &active, Some(&shift));
    let rhs: Vec<f64> = active.iter().map(|x| shift[x] * f[x]).collect();
    let labels = active.as_slice();
    let solution = linalg::solve(g, labels, &a, &rhs)?;
    let mut minimizer = g.zeros();
    for (i, x) in active.iter().enumerate() {
        minimizer[x] = solution[i];
    }
    let penalty: f64 = window
        .iter()
        .map(|x| shift[x] * (minimizer[x] - f[x]).powi(2))
        .sum();
    Ok(ApproximatingForm {
        value: energy(g, &minimizer) + penalty,
        minimizer,
    })
}

pub fn approximating_form(
    g: &Graph,
    alpha: f64,
    window: &VertexSet,
    f: &VertexFunction,
) -> Result<f64> {
    approximating_form_minimizer(g, alpha, window, f).map(|a| a.value)
}
