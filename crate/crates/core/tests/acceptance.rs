//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use dirform::decomposition::{counterexample_suite, killing_part, main_part};
use dirform::forms::{
    apply_contraction, approximating_form, bilinear, energy, laplacian, NormalContraction,
};
use dirform::harmonic::{
    classify_exhaustion, conservation_defect, ClassifyConfig, ConservationConfig,
    ConservationVerdict, ExhaustionVerdict,
};
use dirform::potentials::{
    capacity, minimality_check, reduite, resolvent, restricted_potential, LimitStatus,
};
use dirform::{generate, Exhaustion, Family, Functional, Graph, VertexFunction, VertexSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn contraction_suite() -> Outcome {
    let mut rng = rng(1);
    let mut violations = 0;
    let mut checks = 0;
    for _ in 0..200 {
        let g = random_graph(&mut rng, 30, 0.2);
        let f = random_function(&mut rng, g.len(), 2.0);
        let h = random_function(&mut rng, g.len(), 2.0);
        let (ef, eh) = (energy(&g, &f), energy(&g, &h));
        for c in NormalContraction::builtins() {
            checks += 1;
            if energy(&g, &apply_contraction(&c, &f)) > ef + 1e-9 {
                violations += 1;
            }
        }
        let bound = ef.sqrt() + eh.sqrt() + 1e-9;
        let product_bound = f.sup_norm() * eh.sqrt() + h.sup_norm() * ef.sqrt() + 1e-9;
        for (value, limit) in [
            (energy(&g, &f.min(&h)).sqrt(), bound),
            (energy(&g, &f.max(&h)).sqrt(), bound),
            (energy(&g, &f.mul(&h)).sqrt(), product_bound),
        ] {
            checks += 1;
            if value > limit {
                violations += 1;
            }
        }
    }
    ensure!(
        violations == 0,
        "{violations} violations in {checks} checks"
    );
    Ok(format!("{checks} checks, 0 violations"))
}

fn duality() -> Outcome {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let g = random_graph(&mut rng, 30, 0.25);
        let f = random_function(&mut rng, g.len(), 3.0);
        let psi = random_function(&mut rng, g.len(), 3.0);
        let lhs = bilinear(&g, &f, &psi);
        let lap = laplacian(&g, &f, &g.all());
        let rhs = lap.dot(&psi);
        let scale: f64 = lhs
            .abs()
            .max((0..g.len()).map(|x| (lap[x] * psi[x]).abs()).sum::<f64>())
            .max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    ensure!(worst < 1e-10, "worst relative gap {worst:e}");
    Ok(format!("500 cases, worst relative gap {worst:.2e}"))
}

fn resolvent_laws() -> Outcome {
    let mut rng = rng(3);
    let (mut markov, mut identity, mut lp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30, 0.2);
        let all = g.all();
        let f = random_function(&mut rng, g.len(), 2.0);
        for alpha in [0.1, 1.0, 10.0] {
            let u = resolvent(&g, &all, alpha, &g.ones())
                .map_err(|e| e.to_string())?
                .scale(alpha);
            for x in 0..g.len() {
                markov = markov.max(-u[x]).max(u[x] - 1.0);
            }
            let af = resolvent(&g, &all, alpha, &f)
                .map_err(|e| e.to_string())?
                .scale(alpha);
            for p in [1.0, 2.0, f64::INFINITY] {
                lp = lp.max(lp_norm(&g, &af, p) - lp_norm(&g, &f, p) * (1.0 + 1e-12));
            }
        }
        for (alpha, beta) in [(1.0, 2.0), (0.1, 10.0)] {
            let ga = resolvent(&g, &all, alpha, &f).map_err(|e| e.to_string())?;
            let gb = resolvent(&g, &all, beta, &f).map_err(|e| e.to_string())?;
            let gagb = resolvent(&g, &all, alpha, &gb).map_err(|e| e.to_string())?;
            identity = identity.max(sup_diff(&ga.sub(&gb), &gagb.scale(beta - alpha)));
        }
    }
    ensure!(markov <= 1e-12, "Markov bound violated by {markov:e}");
    ensure!(identity < 1e-8, "resolvent identity residual {identity:e}");
    ensure!(lp <= 0.0, "L^p contraction violated by {lp:e}");
    Ok(format!("100 graphs, identity residual {identity:.2e}"))
}

fn finite_conservation() -> Outcome {
    let mut rng = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30, 0.2);
        let k = VertexFunction::from_vec((0..g.len()).map(|x| g.c(x) / g.m(x)).collect());
        for alpha in [0.1, 1.0, 10.0] {
            let one = resolvent(&g, &g.all(), alpha, &g.ones()).map_err(|e| e.to_string())?;
            let gk = resolvent(&g, &g.all(), alpha, &k).map_err(|e| e.to_string())?;
            worst = worst.max(g.ones().sub(&one.scale(alpha)).sub(&gk).sup_norm());

            let ex = Exhaustion::covering_balls(&g, 0).map_err(|e| e.to_string())?;
            let report =
                conservation_defect(&g, &ex, alpha, &g.all(), &ConservationConfig::new(1e-8))
                    .map_err(|e| e.to_string())?;
            ensure!(
                report.status == LimitStatus::Exact,
                "exhaustion did not reach the graph"
            );
            ensure!(
                report.verdict == ConservationVerdict::CompleteAtInfinity,
                "finite graph reported {:?}",
                report.verdict
            );
            worst = worst.max(report.max_defect().abs());
        }
    }
    ensure!(worst < 1e-9, "defect {worst:e}");
    Ok(format!("100 graphs x 3 alphas, max defect {worst:.2e}"))
}

fn capacity_closed_forms() -> Outcome {
    let p3 = generate(Family::Path { n: 3 }).unwrap();
    let root = VertexSet::singleton(0);
    let ind = VertexFunction::delta(3, 0);
    let n: VertexSet = [0, 1].into_iter().collect();
    let eq = reduite(&p3, &n, &root, &ind).map_err(|e| e.to_string())?;
    let target = [1.0, 0.5, 0.0];
    for (x, t) in target.iter().enumerate() {
        ensure!(
            (eq.h[x] - t).abs() < 1e-8,
            "equilibrium at {x}: {}",
            eq.h[x]
        );
    }
    let cap = capacity(&p3, &n, &root, &ind).map_err(|e| e.to_string())?;
    ensure!((cap - 1.0).abs() < 1e-8, "Dirichlet capacity {cap}");

    let killed = p3.with_killing(vec![0.0, 0.0, 2.0]).unwrap();
    let r = reduite(&killed, &killed.all(), &root, &ind).map_err(|e| e.to_string())?;
    let target = [1.0, 2.0 / 3.0, 1.0 / 3.0];
    for (x, t) in target.iter().enumerate() {
        ensure!(
            (r.h[x] - t).abs() < 1e-8,
            "killed réduite at {x}: {}",
            r.h[x]
        );
    }
    ensure!(
        (r.capacity - 2.0 / 3.0).abs() < 1e-8,
        "killed capacity {}",
        r.capacity
    );
    Ok("P3 equilibrium (1, 1/2, 0) cap 1; killed path (1, 2/3, 1/3) cap 2/3".into())
}

fn recurrence_classification() -> Outcome {
    let radius = 32;
    let z = generate(Family::Path { n: 2 * radius + 1 }).unwrap();
    let ex = Exhaustion::balls(&z, radius, radius - 1).map_err(|e| e.to_string())?;
    let c = classify_exhaustion(&z, &ex, radius, &ClassifyConfig::new(1e-8))
        .map_err(|e| e.to_string())?;
    ensure!(
        c.capacities.len() == radius,
        "expected {radius} levels, got {}",
        c.capacities.len()
    );
    for (i, cap) in c.capacities.iter().enumerate() {
        let r = (i + 1) as f64;
        ensure!(
            (cap - 4.0 / r).abs() < 1e-9,
            "Z: cap_{} = {cap}, expected {}",
            i + 1,
            4.0 / r
        );
    }
    ensure!(
        c.verdict == ExhaustionVerdict::Recurrent,
        "Z verdict {:?}",
        c.verdict
    );

    let depth = 14;
    let tree = generate(Family::Tree {
        branching: 2,
        depth,
    })
    .unwrap();
    let ex = Exhaustion::balls(&tree, 0, depth - 1).map_err(|e| e.to_string())?;
    let c = classify_exhaustion(&tree, &ex, 0, &ClassifyConfig::new(1e-4))
        .map_err(|e| e.to_string())?;
    for (i, cap) in c.capacities.iter().enumerate() {
        // Level k of the tree has 2^(k+1) unit edges in parallel; the
        // ordered-pair energy doubles the effective conductance.
        let resistance: f64 = (0..=i).map(|k| 1.0 / 2f64.powi(k as i32 + 1)).sum();
        let oracle = 2.0 / resistance;
        ensure!(
            (cap - oracle).abs() < 1e-6,
            "tree: cap_{} = {cap}, oracle {oracle}",
            i + 1
        );
    }
    ensure!(
        matches!(c.verdict, ExhaustionVerdict::Transient { .. }),
        "tree verdict {:?}",
        c.verdict
    );
    Ok(format!(
        "Z: {radius} levels cap_r = 4/r, recurrent; binary tree depth {depth}: transient"
    ))
}

/// `w(x) = φ(x)/φ(∞)` for the α-harmonic `φ` on the ray with `φ(0) = 1`.
fn ray_defect_oracle(beta: f64, alpha: f64, len: usize) -> Vec<f64> {
    let b = |k: usize| beta.powi(k as i32);
    let mut phi = vec![1.0, 1.0 + alpha / (2.0 * b(0))];
    for k in 1..len {
        let next =
            phi[k] + (2.0 * b(k - 1) * (phi[k] - phi[k - 1]) + alpha * phi[k]) / (2.0 * b(k));
        phi.push(next);
    }
    let limit = *phi.last().unwrap();
    phi.iter().map(|p| p / limit).collect()
}

fn stochastic_completeness() -> Outcome {
    let unit = generate(Family::Ray {
        n: 200,
        growth: 1.0,
    })
    .unwrap();
    let geometric = generate(Family::Ray {
        n: 200,
        growth: 4.0,
    })
    .unwrap();
    let mut worst_gap = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        let config = ConservationConfig::new(1e-8);
        let ex = Exhaustion::balls(&unit, 0, 63).map_err(|e| e.to_string())?;
        let probe = unit.ball(0, 2).unwrap();
        let r =
            conservation_defect(&unit, &ex, alpha, &probe, &config).map_err(|e| e.to_string())?;
        ensure!(
            r.verdict == ConservationVerdict::CompleteAtInfinity,
            "unit ray, alpha {alpha}: {:?}",
            r.verdict
        );
        ensure!(r.max_defect() < 1e-6, "unit ray defect {}", r.max_defect());

        let ex = Exhaustion::balls(&geometric, 0, 63).map_err(|e| e.to_string())?;
        let r = conservation_defect(&geometric, &ex, alpha, &probe, &config)
            .map_err(|e| e.to_string())?;
        ensure!(
            matches!(r.verdict, ConservationVerdict::Incomplete { .. }),
            "geometric ray, alpha {alpha}: {:?}",
            r.verdict
        );
        let oracle = ray_defect_oracle(4.0, alpha, 60);
        for (id, w) in &r.defect {
            let x: usize = id.parse().unwrap();
            let gap = (w - oracle[x]).abs();
            ensure!(
                gap < 1e-5,
                "geometric ray, alpha {alpha}, vertex {x}: {w} vs oracle {}",
                oracle[x]
            );
            worst_gap = worst_gap.max(gap);
        }
    }
    Ok(format!("unit ray complete, beta=4 ray incomplete for alpha in {{0.5, 1, 2}}; oracle gap {worst_gap:.2e}"))
}

fn decomposition() -> Outcome {
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30, 0.2);
        let f = random_function(&mut rng, g.len(), 2.0);
        let ex = Exhaustion::covering_balls(&g, 0).map_err(|e| e.to_string())?;
        let main = main_part(&g, &ex, &f, 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max((main.value + killing_part(&g, &f) - energy(&g, &f)).abs());
    }
    ensure!(
        worst < 1e-9,
        "main + killing differs from energy by {worst:e}"
    );
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30, 0.2);
        let big = random_function(&mut rng, g.len(), 2.0);
        let small = big.zip_with(&random_function(&mut rng, g.len(), 1.0), |a, t| a * t);
        let (ks, kb) = (killing_part(&g, &small), killing_part(&g, &big));
        ensure!(ks <= kb + 1e-12, "killing part not monotone: {ks} > {kb}");
    }
    Ok(format!(
        "100 graphs, sum gap {worst:.2e}; 100 ordered pairs monotone"
    ))
}

fn counterexamples() -> Outcome {
    let r = counterexample_suite().map_err(|e| e.to_string())?;
    ensure!(r.e_indicator_a == 1.0, "E(1_a) = {}", r.e_indicator_a);
    ensure!(r.e1_one == 0.0, "E1(1) = {}", r.e1_one);
    ensure!(
        r.e2_indicator_a_minus_one == 0.0,
        "E2(1_a - 1) = {}",
        r.e2_indicator_a_minus_one
    );
    ensure!(r.e1_ideal && r.e2_ideal, "ideal checks failed");
    ensure!(r.e1_extends_e && r.e2_extends_e, "extension checks failed");
    ensure!(
        r.maximal_extension_excluded,
        "maximal extension not excluded"
    );
    ensure!(!r.periodic_ideal.holds, "periodic domain reported as ideal");
    let (f, g, p) = r
        .periodic_ideal
        .witness
        .clone()
        .ok_or("periodic check has no witness")?;
    ensure!(
        f.values() == [1.0, 1.0] && g.values() == [1.0, 0.0] && p.values() == [1.0, 0.0],
        "unexpected periodic witness {f:?} {g:?} {p:?}"
    );
    ensure!(r.certified(), "report not certified");
    Ok("E(1_a)=1, E1(1)=0, E2(1_a-1)=0, ideals hold; periodic witness ((1,1),(1,0),(1,0))".into())
}

fn minimum_principle() -> Outcome {
    let mut rng = rng(10);
    for _ in 0..100 {
        let g = random_connected(&mut rng, 2, 30, 0.1, true);
        let n = random_subset(&mut rng, g.len(), 0.7);
        let ell = Functional::new(random_nonnegative(&mut rng, g.len(), 1.0).into_vec());
        let extra = Functional::new(random_nonnegative(&mut rng, g.len(), 1.0).into_vec());
        let base = restricted_potential(&g, &n, &ell.add(&extra)).map_err(|e| e.to_string())?;
        let u = base.add(&g.ones().scale(rng.gen_range(0.0..1.0)));
        ensure!(
            minimality_check(&g, &n, &ell, &u).map_err(|e| e.to_string())?,
            "minimality check failed"
        );
        let potential = restricted_potential(&g, &n, &ell).map_err(|e| e.to_string())?;
        for x in 0..g.len() {
            ensure!(u[x] >= potential[x] - 1e-9, "u below G^N ell at {x}");
        }
    }

    let mut competitors = 0;
    for _ in 0..10 {
        let g = random_connected(&mut rng, 3, 20, 0.15, true);
        let window = random_subset(&mut rng, g.len(), 0.3);
        let obstacle = random_nonnegative(&mut rng, g.len(), 1.0);
        let r = reduite(&g, &g.all(), &window, &obstacle).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let mut candidate = r.h.add(&random_function(&mut rng, g.len(), 0.5));
            for x in &window {
                candidate[x] = candidate[x].max(obstacle[x]);
            }
            competitors += 1;
            let e = energy(&g, &candidate);
            ensure!(
                e >= r.capacity - 1e-9,
                "competitor energy {e} below capacity {}",
                r.capacity
            );
        }
    }
    Ok(format!(
        "100 supersolution triples; réduite beats {competitors} competitors"
    ))
}

fn approximating_forms() -> Outcome {
    let mut single = Graph::builder();
    single.vertex("x", 1.0, 1.0).unwrap();
    let single = single.build().unwrap();
    let alphas: Vec<f64> = (-2..=8).map(|k| 10f64.powi(k)).collect();
    for &alpha in &alphas {
        let value = approximating_form(&single, alpha, &single.all(), &single.ones())
            .map_err(|e| e.to_string())?;
        let oracle = alpha / (1.0 + alpha);
        ensure!(
            (value - oracle).abs() <= 1e-12 * oracle,
            "single vertex, alpha {alpha}: {value} vs {oracle}"
        );
    }

    let mut rng = rng(11);
    let mut fixtures = vec![(
        generate(Family::Path { n: 3 }).unwrap(),
        VertexFunction::delta(3, 0),
    )];
    for _ in 0..20 {
        let g = random_graph(&mut rng, 15, 0.3);
        let f = random_function(&mut rng, g.len(), 1.0);
        fixtures.push((g, f));
    }
    let mut worst_gap = 0.0f64;
    for (g, f) in &fixtures {
        let e = energy(g, f);
        let mut prev = 0.0;
        for &alpha in &alphas {
            let value = approximating_form(g, alpha, &g.all(), f).map_err(|e| e.to_string())?;
            ensure!(
                value >= prev - 1e-12 * (1.0 + prev),
                "not monotone at alpha {alpha}: {value} < {prev}"
            );
            ensure!(
                value <= e * (1.0 + 1e-12) + 1e-15,
                "exceeds energy at alpha {alpha}"
            );
            prev = value;
        }
        let gap = if e > 0.0 { (e - prev) / e } else { 0.0 };
        worst_gap = worst_gap.max(gap);
    }
    ensure!(
        worst_gap < 1e-3,
        "relative gap at alpha 1e8 is {worst_gap:e}"
    );
    Ok(format!(
        "alpha/(1+alpha) oracle exact; {} fixtures monotone, gap {worst_gap:.2e}",
        fixtures.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("contraction suite", contraction_suite),
        ("duality", duality),
        ("resolvent laws", resolvent_laws),
        ("finite-graph conservation", finite_conservation),
        ("capacity closed forms", capacity_closed_forms),
        ("recurrence classification", recurrence_classification),
        (
            "stochastic completeness at infinity",
            stochastic_completeness,
        ),
        ("decomposition", decomposition),
        ("counterexample suite", counterexamples),
        ("minimum principle", minimum_principle),
        ("approximating forms", approximating_forms),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} ({ms} ms)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {detail} ({ms} ms)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
