//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use curvflow::fem::{self, Assembler, SparseSymMatrix, StiffnessOptions};
use curvflow::flow::{self, FlowConfig, FlowResult, FlowStatus, FlowVariant, SolverKind};
use curvflow::geom::{self, Vec3};
use curvflow::metrics;
use curvflow::oracle::{compare_discrete, AnalyticCase, AnalyticShape, ComparisonReport};
use curvflow::shapes::{generate, ShapeSpec};
use curvflow::solver::{factorize, solve_cg, SolverError};
use curvflow::TriMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dumbbell() -> &'static TriMesh {
    static MESH: OnceLock<TriMesh> = OnceLock::new();
    MESH.get_or_init(|| generate(&ShapeSpec::dumbbell()).unwrap())
}

/// 512 normalized cMCF steps on the dumbbell, shared by several criteria.
fn dumbbell_cmcf() -> &'static (FlowResult, Duration) {
    static RUN: OnceLock<(FlowResult, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let r = flow::run(dumbbell(), &FlowConfig::new(FlowVariant::Cmcf, 1e-3, 512), |_, _| {})
            .unwrap();
        (r, start.elapsed())
    })
}

fn sphere_tracking() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for variant in FlowVariant::ALL {
        let case = AnalyticCase::new(AnalyticShape::Sphere, variant);
        let coarse = compare_discrete(case, &ShapeSpec::icosphere(3, 1.0), 1e-3, 100).unwrap();
        let fine = compare_discrete(case, &ShapeSpec::icosphere(4, 1.0), 1e-3, 100).unwrap();
        let reduction = 1.0 - fine.max_rel_error / coarse.max_rel_error;
        // Diagnostic only: error against the exact solution of the
        // time-discrete recursion isolates the spatial error.
        let (sc, sf) = (spatial_error(&coarse), spatial_error(&fine));
        let case_ok = coarse.passed()
            && coarse.vertex_count == 642
            && reduction >= 0.30
            && coarse.elapsed < Duration::from_secs(10)
            && fine.elapsed < Duration::from_secs(10);
        ok &= case_ok;
        lines.push(format!(
            "{variant}: err {:.2e} -> {:.2e} ({:+.0}%) [vs time-discrete {:.1e} -> {:.1e}], {:.2}s/{:.2}s",
            coarse.max_rel_error,
            fine.max_rel_error,
            -100.0 * reduction,
            sc,
            sf,
            coarse.elapsed.as_secs_f64(),
            fine.elapsed.as_secs_f64()
        ));
    }
    ensure(ok, lines.join("; "))
}

/// Largest relative deviation from `r⁺ = r / (1 + 2δ/r²)` (mcf, cmcf) or
/// `r⁺ = r / (1 + 2δ)` (heat): the sphere under semi-implicit Euler with an
/// exact Laplacian.
fn spatial_error(report: &ComparisonReport) -> f64 {
    let dt = report.dt;
    let mut r = 1.0f64;
    let mut worst: f64 = 0.0;
    for row in &report.rows[1..] {
        r = match report.case.flow {
            FlowVariant::Heat => r / (1.0 + 2.0 * dt),
            _ => r / (1.0 + 2.0 * dt / (r * r)),
        };
        worst = worst.max((row.measured - r).abs() / r);
    }
    worst
}

fn cylinder_tracking() -> Check {
    let spec = ShapeSpec::cylinder(1.0, 6.0, 80, 64, true);
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for variant in FlowVariant::ALL {
        let case = AnalyticCase::new(AnalyticShape::Cylinder, variant);
        let r: ComparisonReport = compare_discrete(case, &spec, 1e-3, 200).unwrap();
        let speed = r.initial_speed.unwrap();
        let speed_ok = (speed + 1.0).abs() <= 0.05;
        ok &= r.passed() && speed_ok;
        lines.push(format!(
            "{variant}: err {:.2e}, r'(0) {:.4}",
            r.max_rel_error, speed
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    lines.push(format!("{} verts, {:.1}s", generate(&spec).unwrap().vertex_count(), elapsed.as_secs_f64()));
    ensure(ok, lines.join("; "))
}

fn catenoid_stationary() -> Check {
    let spec = AnalyticShape::Catenoid.default_spec();
    let mut lines = Vec::new();
    let mut ok = true;
    for variant in FlowVariant::ALL {
        let case = AnalyticCase::new(AnalyticShape::Catenoid, variant);
        let r = compare_discrete(case, &spec, 1e-3, 100).unwrap();
        ok &= r.passed();
        lines.push(format!("{variant}: {:.2e}", r.max_displacement));
    }
    ensure(ok, format!("max displacement/diag {}", lines.join(", ")))
}

fn dumbbell_dichotomy() -> Check {
    let mesh = dumbbell();
    let start = Instant::now();
    let mcf = flow::run(mesh, &FlowConfig::new(FlowVariant::Mcf, 1e-3, 512), |_, _| {}).unwrap();
    let heat = flow::run(mesh, &FlowConfig::new(FlowVariant::Heat, 1e-3, 512), |_, _| {}).unwrap();
    let (cmcf, cmcf_time) = dumbbell_cmcf();
    let elapsed = start.elapsed() + *cmcf_time;
    let mcf_ok = matches!(mcf.state.status(), FlowStatus::Singular { step, .. } if *step <= 32);
    let heat_ok = heat.state.status() == &FlowStatus::Finished && heat.state.step_index() == 512;
    let cmcf_ok = cmcf.state.status() == &FlowStatus::Finished && cmcf.state.step_index() == 512;
    ensure(
        mcf_ok && heat_ok && cmcf_ok && elapsed < Duration::from_secs(120),
        format!(
            "{} verts; mcf {}; heat {}; cmcf {}; {:.1}s",
            mesh.vertex_count(),
            mcf.state.status(),
            heat.state.status(),
            cmcf.state.status(),
            elapsed.as_secs_f64()
        ),
    )
}

fn cmcf_limit() -> Check {
    let (r, _) = dumbbell_cmcf();
    let x = r.state.positions();
    let weights = fem::lumped_mass(x, r.state.rest().faces());
    let rbar = metrics::mean_radius(x, &weights);
    let var = metrics::sphericity_variance(x, &weights);
    let sph = var / (rbar * rbar);
    let records = &r.records;
    let tail = &records[records.len() - 52..];
    let qc_final = records.last().unwrap().qc_error;
    let qc_monotone = tail.windows(2).all(|w| w[1].qc_error <= w[0].qc_error + 1e-3);
    let delta = records.last().unwrap().convergence_delta;
    // Unit area: the length scale is 1.
    ensure(
        r.records.len() == 513 && sph < 1e-3 && qc_final < 1.15 && qc_monotone && delta < 1e-4,
        format!(
            "sphericity/r² {sph:.2e}, qc {qc_final:.4} (tail monotone: {qc_monotone}), delta {delta:.2e}"
        ),
    )
}

fn stiffness_reuse() -> Check {
    let mesh = generate(&ShapeSpec::icosphere(3, 1.0)).unwrap();
    let mut state =
        flow::FlowState::new(&mesh, &FlowConfig::new(FlowVariant::Cmcf, 1e-3, 64)).unwrap();
    let l0: Vec<u64> = state.stiffness0().values().iter().map(|v| v.to_bits()).collect();
    let mut identical = true;
    while state.status().is_running() {
        state.step();
        identical &= Arc::ptr_eq(state.stiffness(), state.stiffness0());
        identical &= state
            .stiffness()
            .values()
            .iter()
            .map(|v| v.to_bits())
            .eq(l0.iter().copied());
    }
    let mut worst: f64 = 0.0;
    for spec in [ShapeSpec::icosphere(3, 1.0), ShapeSpec::dumbbell(), ShapeSpec::catenoid(32, 16)] {
        let m = generate(&spec).unwrap();
        let l = fem::assemble_stiffness(&m).unwrap();
        let scale = l.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for alpha in [0.5, 2.0, 10.0] {
            let ls = fem::assemble_stiffness(&m.map_positions(|p| geom::scale(p, alpha))).unwrap();
            for (a, b) in l.values().iter().zip(ls.values()) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    ensure(
        identical && worst <= 1e-12,
        format!("64 cmcf steps bit-identical: {identical}; scaled-copy max rel diff {worst:.1e}"),
    )
}

fn perturbed(mesh: &TriMesh, rng: &mut ChaCha8Rng, amount: f64) -> Vec<Vec3> {
    mesh.vertices()
        .iter()
        .map(|p| {
            let d = [
                rng.gen_range(-amount..amount),
                rng.gen_range(-amount..amount),
                rng.gen_range(-amount..amount),
            ];
            geom::add(*p, d)
        })
        .collect()
}

fn energy_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let base = [
        generate(&ShapeSpec::icosphere(2, 1.0)).unwrap(),
        generate(&ShapeSpec::cylinder(1.0, 3.0, 24, 12, true)).unwrap(),
        generate(&ShapeSpec::catenoid(24, 12)).unwrap(),
    ];
    let mut worst_sum: f64 = 0.0;
    let mut worst_conformal: f64 = 0.0;
    for k in 0..100 {
        let m = &base[k % base.len()];
        let rest = m.with_positions(perturbed(m, &mut rng, 0.02)).unwrap();
        let current = perturbed(&rest, &mut rng, 0.05);
        let e = metrics::energy_decomposition(&rest, &current).unwrap();
        let l0 = fem::assemble_stiffness(&rest).unwrap();
        let dirichlet = fem::dirichlet_energy(&l0, &current).unwrap();
        worst_sum = worst_sum.max((e.area_tilde + e.conformal_tilde - dirichlet).abs() / dirichlet);
        let alpha = rng.gen_range(0.1..10.0);
        let scaled: Vec<Vec3> = rest.vertices().iter().map(|p| geom::scale(*p, alpha)).collect();
        let s = metrics::energy_decomposition(&rest, &scaled).unwrap();
        worst_conformal = worst_conformal.max(s.conformal_tilde.abs() / s.total);
    }
    let mut worst_density: f64 = 0.0;
    for _ in 0..10_000 {
        let l1: f64 = rng.gen_range(0.1..10.0);
        let l2: f64 = rng.gen_range(0.1..10.0);
        let d = l1 * l1 * l2 * l2;
        let t = l1 * l1 + l2 * l2;
        let (ea, ec) = metrics::energy_densities(d, t);
        worst_density = worst_density.max((ea + ec - t / 2.0).abs() / (t / 2.0));
    }
    ensure(
        worst_sum <= 1e-10 && worst_conformal <= 1e-12 && worst_density <= 1e-12,
        format!(
            "sum {worst_sum:.1e}, conformal {worst_conformal:.1e}, per-triangle {worst_density:.1e}"
        ),
    )
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = generate(&ShapeSpec::catenoid(10, 4)).unwrap();
    let mesh = base.with_positions(perturbed(&base, &mut rng, 0.03)).unwrap();
    let l0 = fem::assemble_stiffness(&mesh).unwrap();
    let x = perturbed(&mesh, &mut rng, 0.1);
    let g = fem::dirichlet_gradient(&l0, &x).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let dir: Vec<Vec3> = (0..x.len())
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let shift = |s: f64| -> Vec<Vec3> {
            x.iter().zip(&dir).map(|(p, d)| geom::add(*p, geom::scale(*d, s))).collect()
        };
        let fd = (fem::dirichlet_energy(&l0, &shift(h)).unwrap()
            - fem::dirichlet_energy(&l0, &shift(-h)).unwrap())
            / (2.0 * h);
        let exact: f64 = g.iter().zip(&dir).map(|(a, b)| geom::dot(*a, *b)).sum();
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    ensure(
        mesh.vertex_count() == 50 && worst <= 1e-6,
        format!("{} vertices, worst relative error {worst:.1e}", mesh.vertex_count()),
    )
}

fn energy_monotonicity() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    let sphere = generate(&ShapeSpec::icosphere(3, 1.0)).unwrap();
    for (name, mesh) in [("icosphere", &sphere), ("dumbbell", dumbbell())] {
        let raw = flow::run(
            mesh,
            &FlowConfig::new(FlowVariant::Cmcf, 1e-3, 100).unnormalized(),
            |_, _| {},
        )
        .unwrap();
        let worst_raw = worst_increase(raw.records.iter().map(|r| r.dirichlet_energy), 0);
        let normalized = if name == "dumbbell" {
            dumbbell_cmcf().0.records.clone()
        } else {
            flow::run(mesh, &FlowConfig::new(FlowVariant::Cmcf, 1e-3, 512), |_, _| {})
                .unwrap()
                .records
        };
        let worst_norm =
            worst_increase(normalized.iter().map(|r| r.normalized_dirichlet_energy()), 5);
        // Diagnostic only: each solve still dissipates, i.e. the energy of the
        // raw solve output never exceeds that of the unit-area input to it.
        let in_step = normalized
            .windows(2)
            .map(|w| {
                let before = if w[0].step == 0 {
                    w[0].dirichlet_energy
                } else {
                    w[0].normalized_dirichlet_energy()
                };
                (w[1].dirichlet_energy - before) / before
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let peak = normalized
            .iter()
            .max_by(|a, b| a.normalized_dirichlet_energy().total_cmp(&b.normalized_dirichlet_energy()))
            .unwrap();
        ok &= worst_raw <= 1e-10 && worst_norm <= 1e-8;
        lines.push(format!(
            "{name}: raw {worst_raw:.1e}, unit-area {worst_norm:.1e} [E/A peaks at {:.3} on step {}; in-step {in_step:.1e}]",
            peak.normalized_dirichlet_energy(),
            peak.step
        ));
    }
    ensure(ok, format!("worst relative increase {}", lines.join("; ")))
}

/// Largest relative step-to-step increase, ignoring steps before `burn_in`.
fn worst_increase(values: impl Iterator<Item = f64>, burn_in: usize) -> f64 {
    let v: Vec<f64> = values.collect();
    v.windows(2)
        .enumerate()
        .filter(|(k, _)| *k >= burn_in)
        .map(|(_, w)| (w[1] - w[0]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn solver_semantics() -> Check {
    let dense = |rows: Vec<Vec<f64>>| SparseSymMatrix::from_dense(&rows);
    let indefinite = [
        dense(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
        dense(vec![vec![-1.0, 0.0], vec![0.0, 1.0]]),
        dense(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
        dense(vec![
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -3.0],
            vec![0.0, -3.0, 2.0],
        ]),
        // Singular: rank one.
        dense(vec![vec![1.0, 1.0], vec![1.0, 1.0]]),
    ];
    let mut refused = 0;
    for a in &indefinite {
        let b: Vec<[f64; 1]> = (0..a.dim()).map(|i| [1.0 + i as f64]).collect();
        let direct = matches!(factorize(a), Err(SolverError::NotPositiveDefinite { .. }));
        let cg = match solve_cg(a, &b, 1e-12, 100) {
            Err(SolverError::Breakdown { .. }) | Err(SolverError::MaxIterations { .. }) => true,
            // Only acceptable if it genuinely solves the system.
            Ok(x) => {
                let ax = a.mul_rows(&x);
                ax.iter().zip(&b).all(|(p, q)| (p[0] - q[0]).abs() < 1e-10)
            }
            Err(_) => false,
        };
        if direct && cg {
            refused += 1;
        }
    }

    // SPD corpus: flow systems from several meshes and step sizes.
    let mut worst: f64 = 0.0;
    let tol = 1e-10;
    for spec in [ShapeSpec::icosphere(3, 1.0), ShapeSpec::dumbbell(), ShapeSpec::cylinder(1.0, 6.0, 40, 32, true)] {
        let m = generate(&spec).unwrap();
        let asm = Assembler::new(&m);
        let d = asm.mass(m.vertices()).unwrap();
        let l = asm.stiffness(m.vertices(), StiffnessOptions::default()).unwrap();
        for dt in [1e-4, 1e-3, 1e-2] {
            let a = d.combine(1.0, &l, -dt);
            let b = d.mul_rows(m.vertices());
            let x = factorize(&a).unwrap().solve(&b).unwrap();
            let y = solve_cg(&a, &b, tol, 100_000).unwrap();
            for c in 0..3 {
                let norm: f64 = x.iter().map(|r| r[c] * r[c]).sum::<f64>().sqrt();
                let diff: f64 = x.iter().zip(&y).map(|(p, q)| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(diff / norm);
            }
        }
    }
    // Whole-flow agreement.
    let m = generate(&ShapeSpec::icosphere(3, 1.0)).unwrap();
    let direct = flow::run(&m, &FlowConfig::new(FlowVariant::Cmcf, 1e-3, 10), |_, _| {}).unwrap();
    let mut cfg = FlowConfig::new(FlowVariant::Cmcf, 1e-3, 10);
    cfg.solver = SolverKind::cg();
    let cg = flow::run(&m, &cfg, |_, _| {}).unwrap();
    let flow_diff = direct
        .state
        .positions()
        .iter()
        .zip(cg.state.positions())
        .map(|(a, b)| geom::norm(geom::sub(*a, *b)))
        .fold(0.0, f64::max);
    let bound = tol.max(1e-8);
    ensure(
        refused == indefinite.len() && worst <= bound && flow_diff <= bound,
        format!(
            "{refused}/{} indefinite systems refused; direct vs cg {worst:.1e} (systems), {flow_diff:.1e} (10 flow steps)",
            indefinite.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("sphere radius tracking", sphere_tracking),
        ("cylinder radius tracking", cylinder_tracking),
        ("catenoid stationarity", catenoid_stationary),
        ("dumbbell singularity dichotomy", dumbbell_dichotomy),
        ("cmcf limit on the dumbbell", cmcf_limit),
        ("stiffness reuse and scale invariance", stiffness_reuse),
        ("energy identities", energy_identities),
        ("dirichlet gradient check", gradient_check),
        ("energy monotonicity", energy_monotonicity),
        ("solver failure semantics", solver_semantics),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
