//! Cross-checks of assembly, metrics and flows against independent
//! per-element computations and symmetry arguments.

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvflow::fem::{assemble_mass, assemble_stiffness, dirichlet_energy};
use curvflow::flow::{self, FlowConfig, FlowVariant};
use curvflow::io::{parse_mesh, write_mesh, MeshFormat, PlyEncoding, SaveOptions};
use curvflow::metrics::{energy_decomposition, qc_error, stretch_spectrum};
use curvflow::shapes::{generate, ShapeSpec};
use curvflow::{TriMesh, Vec3};

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn bumpy_sphere(subdiv: u32, amplitude: f64, seed: u64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = generate(&ShapeSpec::icosphere(subdiv, 1.0)).unwrap();
    let scale: Vec<f64> = (0..base.vertex_count())
        .map(|_| 1.0 + amplitude * rng.gen_range(-1.0..1.0))
        .collect();
    let positions = base
        .vertices()
        .iter()
        .zip(&scale)
        .map(|(p, s)| [p[0] * s, p[1] * s, p[2] * s])
        .collect();
    base.with_positions(positions).unwrap()
}

/// `∫_T |∇u|²` summed over columns, from the first fundamental form of
/// each triangle rather than cotangents.
fn brute_dirichlet(mesh: &TriMesh, u: &[Vec3]) -> f64 {
    let x = mesh.vertices();
    let mut total = 0.0;
    for &[a, b, c] in mesh.faces() {
        let e1 = sub(x[b], x[a]);
        let e2 = sub(x[c], x[a]);
        let (g11, g12, g22) = (dot(e1, e1), dot(e1, e2), dot(e2, e2));
        let det = g11 * g22 - g12 * g12;
        let area = 0.5 * det.sqrt();
        for k in 0..3 {
            let d1 = u[b][k] - u[a][k];
            let d2 = u[c][k] - u[a][k];
            // dᵀ G⁻¹ d
            total += area * (g22 * d1 * d1 - 2.0 * g12 * d1 * d2 + g11 * d2 * d2) / det;
        }
    }
    total
}

/// `∫_T u²` for each column, exact for linear `u`.
fn brute_mass(mesh: &TriMesh, u: &[f64]) -> f64 {
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(f, &[a, b, c])| {
            let (ua, ub, uc) = (u[a], u[b], u[c]);
            mesh.face_area(f) / 12.0 * (ua * ua + ub * ub + uc * uc + (ua + ub + uc).powi(2))
        })
        .sum()
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect()
}

#[test]
fn stiffness_matches_elementwise_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..4 {
        let mesh = bumpy_sphere(2, 0.2, seed);
        let l = assemble_stiffness(&mesh).unwrap();
        let u = random_field(mesh.vertex_count(), &mut rng);
        let quad = 2.0 * dirichlet_energy(&l, &u).unwrap();
        assert_relative_eq!(quad, brute_dirichlet(&mesh, &u), max_relative = 1e-10);
    }
}

#[test]
fn mass_matches_elementwise_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mesh = bumpy_sphere(2, 0.2, 3);
    let d = assemble_mass(&mesh);
    for _ in 0..4 {
        let u: Vec<f64> = (0..mesh.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let du = d.mul_vec(&u);
        let quad: f64 = u.iter().zip(&du).map(|(a, b)| a * b).sum();
        assert_relative_eq!(quad, brute_mass(&mesh, &u), max_relative = 1e-12);
    }
}

fn rotation(axis: Vec3, angle: f64) -> [Vec3; 3] {
    let n = dot(axis, axis).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn apply(r: &[Vec3; 3], scale: f64, shift: Vec3, p: Vec3) -> Vec3 {
    let q = [dot(r[0], p), dot(r[1], p), dot(r[2], p)];
    [scale * q[0] + shift[0], scale * q[1] + shift[1], scale * q[2] + shift[2]]
}

fn max_diff(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| (0..3).map(move |k| (p[k] - q[k]).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metrics_ignore_similarities(
        seed in 0u64..1000,
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0,
        angle in -3.0f64..3.0,
        scale in 0.2f64..5.0,
        shift in prop::array::uniform3(-10.0f64..10.0),
    ) {
        let rest = bumpy_sphere(1, 0.15, seed);
        let current = bumpy_sphere(1, 0.15, seed + 1).vertices().to_vec();
        let r = rotation([ax, ay, az], angle);
        let moved: Vec<Vec3> = current.iter().map(|&p| apply(&r, scale, shift, p)).collect();

        let q0 = qc_error(&stretch_spectrum(&rest, &current).unwrap());
        let q1 = qc_error(&stretch_spectrum(&rest, &moved).unwrap());
        prop_assert!((q0 - q1).abs() <= 1e-9 * q0, "{q0} vs {q1}");

        let e0 = energy_decomposition(&rest, &current).unwrap();
        let e1 = energy_decomposition(&rest, &moved).unwrap();
        let s2 = scale * scale;
        prop_assert!((e1.total - s2 * e0.total).abs() <= 1e-9 * s2 * e0.total);
        prop_assert!((e1.area - s2 * e0.area).abs() <= 1e-9 * s2 * e0.area);
    }

    #[test]
    fn energy_split_sums_to_dirichlet(seed in 0u64..1000, amp in 0.0f64..0.3) {
        let rest = bumpy_sphere(1, 0.1, seed);
        let current = bumpy_sphere(1, amp, seed + 7).vertices().to_vec();
        let l = assemble_stiffness(&rest).unwrap();
        let e = energy_decomposition(&rest, &current).unwrap();
        let direct = dirichlet_energy(&l, &current).unwrap();
        prop_assert!((e.area_tilde + e.conformal_tilde - e.total).abs() <= 1e-12 * e.total);
        prop_assert!((e.total - direct).abs() <= 1e-10 * direct, "{} vs {direct}", e.total);
        prop_assert!(e.conformal_tilde >= -1e-12);
    }

    #[test]
    fn assembly_follows_relabeling(seed in 0u64..1000) {
        let mesh = bumpy_sphere(1, 0.2, seed);
        let n = mesh.vertex_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut positions = vec![[0.0; 3]; n];
        for (old, &new) in perm.iter().enumerate() {
            positions[new] = mesh.vertices()[old];
        }
        let faces = mesh.faces().iter().map(|f| f.map(|v| perm[v])).collect();
        let relabeled = TriMesh::new(positions, faces).unwrap();

        let (l0, l1) = (assemble_stiffness(&mesh).unwrap(), assemble_stiffness(&relabeled).unwrap());
        let (d0, d1) = (assemble_mass(&mesh), assemble_mass(&relabeled));
        for i in 0..n {
            for &j in mesh_neighbours(&mesh, i).iter() {
                prop_assert!((l0.get(i, j) - l1.get(perm[i], perm[j])).abs() <= 1e-12);
                prop_assert!((d0.get(i, j) - d1.get(perm[i], perm[j])).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_is_scale_free_and_mass_scales_quadratically(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let mesh = bumpy_sphere(1, 0.2, seed);
        let big = mesh.map_positions(|p| [scale * p[0], scale * p[1], scale * p[2]]);
        let (l0, l1) = (assemble_stiffness(&mesh).unwrap(), assemble_stiffness(&big).unwrap());
        let (d0, d1) = (assemble_mass(&mesh), assemble_mass(&big));
        for (a, b) in l0.values().iter().zip(l1.values()) {
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
        for (a, b) in d0.values().iter().zip(d1.values()) {
            prop_assert!((scale * scale * a - b).abs() <= 1e-12 * b.abs());
        }
    }
}

fn mesh_neighbours(mesh: &TriMesh, i: usize) -> Vec<usize> {
    let mut out = vec![i];
    for f in mesh.faces() {
        if f.contains(&i) {
            out.extend(f.iter().copied().filter(|&v| v != i));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[test]
fn flows_commute_with_rigid_motions() {
    let mesh = bumpy_sphere(2, 0.25, 5);
    let r = rotation([0.3, -0.5, 0.8], 1.1);
    let moved = mesh.map_positions(|p| apply(&r, 1.0, [0.0; 3], p));
    for variant in FlowVariant::ALL {
        // Normalization recenters at the origin, so rotation about the origin
        // must commute with the whole pipeline.
        let cfg = FlowConfig::new(variant, 1e-3, 20);
        let a = flow::run(&mesh, &cfg, |_, _| {}).unwrap();
        let b = flow::run(&moved, &cfg, |_, _| {}).unwrap();
        let rotated: Vec<Vec3> = a.state.positions().iter().map(|&p| apply(&r, 1.0, [0.0; 3], p)).collect();
        let err = max_diff(&rotated, b.state.positions());
        assert!(err < 1e-10, "{variant}: {err}");
        assert_relative_eq!(
            a.records.last().unwrap().qc_error,
            b.records.last().unwrap().qc_error,
            max_relative = 1e-9
        );

        // Unnormalized flows commute with translations too.
        let cfg = FlowConfig::new(variant, 1e-3, 20).unnormalized();
        let shift = [2.0, -1.0, 0.5];
        let shifted = mesh.map_positions(|p| apply(&r, 1.0, shift, p));
        let a = flow::run(&moved, &cfg, |_, _| {}).unwrap();
        let b = flow::run(&shifted, &cfg, |_, _| {}).unwrap();
        let back: Vec<Vec3> = b.state.positions().iter().map(|&p| sub(p, shift)).collect();
        let err = max_diff(a.state.positions(), &back);
        assert!(err < 1e-10, "{variant} translated: {err}");
    }
}

/// All three flows take the same first step; they separate at second order
/// in the step size.
#[test]
fn flows_agree_to_first_order() {
    let mesh = bumpy_sphere(2, 0.25, 9);
    let two_steps = |variant, dt| {
        let cfg = FlowConfig::new(variant, dt, 2).unnormalized();
        let mut first = Vec::new();
        let result = flow::run(&mesh, &cfg, |s, _| {
            if s.step_index() == 1 {
                first = s.positions().to_vec();
            }
        })
        .unwrap();
        (first, result.state.positions().to_vec())
    };
    let mut gaps = Vec::new();
    for dt in [5e-4, 2.5e-4, 1.25e-4] {
        let (m1, m2) = two_steps(FlowVariant::Mcf, dt);
        let (h1, h2) = two_steps(FlowVariant::Heat, dt);
        let (c1, c2) = two_steps(FlowVariant::Cmcf, dt);
        assert_eq!(m1, h1);
        assert_eq!(m1, c1);
        let moved = max_diff(&m2, mesh.vertices());
        let gap = max_diff(&m2, &h2).max(max_diff(&m2, &c2)).max(max_diff(&h2, &c2));
        assert!(gap < 0.1 * moved, "dt {dt}: gap {gap} vs displacement {moved}");
        gaps.push(gap);
    }
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.0).contains(&ratio), "gap ratio {ratio} from {gaps:?}");
    }
}

#[test]
fn mesh_formats_round_trip_exactly() {
    let meshes = [
        bumpy_sphere(2, 0.3, 1),
        generate(&ShapeSpec::catenoid(12, 6)).unwrap(),
        generate(&ShapeSpec::cylinder(0.7, 2.0, 9, 5, true)).unwrap(),
    ];
    let options = [
        (MeshFormat::Obj, SaveOptions::default()),
        (MeshFormat::Off, SaveOptions::default()),
        (MeshFormat::Ply, SaveOptions::default()),
        (
            MeshFormat::Ply,
            SaveOptions {
                ply_encoding: PlyEncoding::BinaryLittleEndian,
                write_normals: true,
            },
        ),
    ];
    for mesh in &meshes {
        for (format, opts) in &options {
            let mut buf = Vec::new();
            write_mesh(mesh, &mut buf, *format, opts).unwrap();
            let back = parse_mesh(&buf, *format).unwrap();
            assert_eq!(back.faces(), mesh.faces(), "{format:?}");
            assert_eq!(back.vertices(), mesh.vertices(), "{format:?}");
            assert_eq!(back.boundary_tags(), mesh.boundary_tags());
        }
    }
}
