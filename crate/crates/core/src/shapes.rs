//! Parametric test surfaces: subdivided icospheres and surfaces of
//! revolution about the z axis (cylinders, catenoids, dumbbells and
//! arbitrary profiles).
//!
//! Rotational shapes are built ring by ring along a profile curve; adjacent
//! rings are stitched by merging their vertex angles, and a profile endpoint
//! on the axis becomes a single pole vertex. Vertex indices follow the
//! profile order, which is what [`mid_ring_radius`] relies on.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::mesh::{MeshError, TriMesh};

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("invalid shape spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn spec_err<T>(msg: impl Into<String>) -> Result<T, ShapeError> {
    Err(ShapeError::Spec(msg.into()))
}

/// Two spherical bulbs joined by a thin neck, blended with a C¹ smooth
/// maximum on the squared radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumbbellProfile {
    pub bulb_radius: f64,
    /// Distance of each bulb center from the origin along z.
    pub bulb_center: f64,
    pub neck_radius: f64,
    /// Width of the smooth-maximum blend, in squared-radius units.
    pub blend: f64,
}

impl Default for DumbbellProfile {
    fn default() -> Self {
        DumbbellProfile {
            bulb_radius: 1.0,
            bulb_center: 1.5,
            neck_radius: 0.2,
            blend: 0.1,
        }
    }
}

impl DumbbellProfile {
    pub fn half_length(&self) -> f64 {
        self.bulb_center + self.bulb_radius
    }

    /// Radius of the surface at height `z`.
    pub fn radius(&self, z: f64) -> f64 {
        let (rb, c, n) = (self.bulb_radius, self.bulb_center, self.neck_radius);
        let u = z.abs() - c;
        let bulb = rb * rb - u * u;
        // The neck level stays flat through the middle and drops away well
        // inside the bulbs, so the poles are governed by the bulbs alone.
        let w = z.abs() - (c - rb);
        let neck = if w <= 0.0 { n * n } else { n * n - 10.0 * w * w };
        smooth_max(bulb, neck, self.blend).max(0.0).sqrt()
    }
}

/// Polynomial smooth maximum: C¹, equal to `max(a, b)` once `|a - b| ≥ k`.
fn smooth_max(a: f64, b: f64, k: f64) -> f64 {
    let h = (0.5 + 0.5 * (a - b) / k).clamp(0.0, 1.0);
    b + (a - b) * h + k * h * (1.0 - h)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Icosphere {
        subdivisions: u32,
        radius: f64,
    },
    /// Cylinder about z centered at the origin; `n_z` axial segments.
    Cylinder {
        radius: f64,
        height: f64,
        n_theta: usize,
        n_z: usize,
        caps: bool,
    },
    /// `r(z) = cosh(z)` for `|z| ≤ half_height`, open at both ends.
    Catenoid {
        half_height: f64,
        n_theta: usize,
        n_z: usize,
    },
    Dumbbell {
        profile: DumbbellProfile,
        n_theta: usize,
        n_rings: usize,
    },
    /// Profile samples `(rho, z)`; endpoints with `rho == 0` become poles.
    Revolution {
        profile: Vec<[f64; 2]>,
        n_theta: usize,
    },
}

const MAX_VERTICES: usize = 20_000_000;

impl ShapeSpec {
    pub fn icosphere(subdivisions: u32, radius: f64) -> Self {
        ShapeSpec::Icosphere {
            subdivisions,
            radius,
        }
    }

    pub fn cylinder(radius: f64, height: f64, n_theta: usize, n_z: usize, caps: bool) -> Self {
        ShapeSpec::Cylinder {
            radius,
            height,
            n_theta,
            n_z,
            caps,
        }
    }

    pub fn catenoid(n_theta: usize, n_z: usize) -> Self {
        ShapeSpec::Catenoid {
            half_height: 1.0,
            n_theta,
            n_z,
        }
    }

    pub fn dumbbell() -> Self {
        ShapeSpec::Dumbbell {
            profile: DumbbellProfile::default(),
            n_theta: 64,
            n_rings: 160,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ShapeSpec::Icosphere { .. } => "icosphere",
            ShapeSpec::Cylinder { .. } => "cylinder",
            ShapeSpec::Catenoid { .. } => "catenoid",
            ShapeSpec::Dumbbell { .. } => "dumbbell",
            ShapeSpec::Revolution { .. } => "revolution",
        }
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                spec_err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        let budget = |verts: usize| {
            if verts <= MAX_VERTICES {
                Ok(())
            } else {
                spec_err("shape would exceed the vertex budget")
            }
        };
        match self {
            ShapeSpec::Icosphere {
                subdivisions,
                radius,
            } => {
                positive("radius", *radius)?;
                if *subdivisions > 10 {
                    return spec_err("icosphere subdivision level must be at most 10");
                }
            }
            ShapeSpec::Cylinder {
                radius,
                height,
                n_theta,
                n_z,
                ..
            } => {
                positive("radius", *radius)?;
                positive("height", *height)?;
                check_samples(*n_theta, *n_z)?;
                budget(n_theta.saturating_mul(n_z.saturating_add(1)))?;
                let spacing = height / *n_z as f64;
                budget(cap_ring_count(*radius, spacing).saturating_mul(*n_theta))?;
            }
            ShapeSpec::Catenoid {
                half_height,
                n_theta,
                n_z,
            } => {
                positive("half height", *half_height)?;
                if *half_height > 20.0 {
                    return spec_err("catenoid half height must be at most 20");
                }
                check_samples(*n_theta, *n_z)?;
                budget(n_theta.saturating_mul(n_z.saturating_add(1)))?;
            }
            ShapeSpec::Dumbbell {
                profile,
                n_theta,
                n_rings,
            } => {
                positive("bulb radius", profile.bulb_radius)?;
                positive("neck radius", profile.neck_radius)?;
                positive("blend", profile.blend)?;
                positive("bulb center", profile.bulb_center)?;
                if profile.neck_radius >= profile.bulb_radius {
                    return spec_err("neck radius must be smaller than the bulb radius");
                }
                if profile.bulb_center < profile.bulb_radius {
                    return spec_err("bulbs must not overlap the origin");
                }
                check_samples(*n_theta, *n_rings)?;
                budget(n_theta.saturating_mul(*n_rings))?;
            }
            ShapeSpec::Revolution { profile, n_theta } => {
                if profile.len() < 2 {
                    return spec_err("profile needs at least two samples");
                }
                if *n_theta < 3 {
                    return spec_err("at least 3 angular samples are required");
                }
                budget(n_theta.saturating_mul(profile.len()))?;
                for (k, &[rho, z]) in profile.iter().enumerate() {
                    let end = k == 0 || k + 1 == profile.len();
                    if !rho.is_finite() || !z.is_finite() {
                        return spec_err("profile samples must be finite");
                    }
                    if rho < 0.0 || (!end && rho == 0.0) {
                        return spec_err("interior profile samples must have positive radius");
                    }
                }
                if profile.len() == 2 && profile.iter().all(|p| p[0] == 0.0) {
                    return spec_err("profile collapses onto the axis");
                }
                if profile.windows(2).any(|w| w[0] == w[1]) {
                    return spec_err("consecutive profile samples coincide");
                }
            }
        }
        Ok(())
    }
}

fn check_samples(n_theta: usize, n_axial: usize) -> Result<(), ShapeError> {
    if n_theta < 3 {
        return spec_err("at least 3 angular samples are required");
    }
    if n_axial < 1 {
        return spec_err("at least 2 axial samples are required");
    }
    Ok(())
}

fn cap_ring_count(radius: f64, spacing: f64) -> usize {
    ((radius / spacing).round() as usize).max(1)
}

/// Generates a validated mesh.
pub fn generate(spec: &ShapeSpec) -> Result<TriMesh, ShapeError> {
    spec.validate()?;
    match spec {
        ShapeSpec::Icosphere {
            subdivisions,
            radius,
        } => icosphere(*subdivisions, *radius),
        _ => {
            let rings = rings_for(spec);
            let (vertices, faces, _) = revolve(&rings);
            Ok(TriMesh::new(vertices, faces)?)
        }
    }
}

/// Radius measured on the ring nearest the axial midpoint of a rotational
/// shape, or the mean distance to the vertex centroid for an icosphere.
pub fn mid_ring_radius(mesh: &TriMesh, spec: &ShapeSpec) -> Result<f64, ShapeError> {
    mid_ring_radius_of(mesh.vertices(), spec)
}

/// [`mid_ring_radius`] on evolved positions sharing the generated layout.
pub fn mid_ring_radius_of(positions: &[Vec3], spec: &ShapeSpec) -> Result<f64, ShapeError> {
    let range = mid_ring_range(spec)?;
    match range {
        None => {
            let n = positions.len() as f64;
            let c = positions
                .iter()
                .fold([0.0; 3], |acc, p| geom::add(acc, *p));
            let c = geom::scale(c, 1.0 / n);
            Ok(positions.iter().map(|p| geom::norm(geom::sub(*p, c))).sum::<f64>() / n)
        }
        Some(range) => {
            let ring = positions
                .get(range)
                .ok_or_else(|| ShapeError::Spec("positions do not match the spec layout".into()))?;
            let n = ring.len() as f64;
            let cx = ring.iter().map(|p| p[0]).sum::<f64>() / n;
            let cy = ring.iter().map(|p| p[1]).sum::<f64>() / n;
            Ok(ring.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n)
        }
    }
}

/// Vertex index range of the ring nearest the axial midpoint; `None` for an
/// icosphere.
pub fn mid_ring_range(spec: &ShapeSpec) -> Result<Option<std::ops::Range<usize>>, ShapeError> {
    spec.validate()?;
    if let ShapeSpec::Icosphere { .. } = spec {
        return Ok(None);
    }
    let rings = rings_for(spec);
    let zmin = rings.iter().map(|r| r.z).fold(f64::INFINITY, f64::min);
    let zmax = rings.iter().map(|r| r.z).fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (zmin + zmax);
    let mut start = 0;
    let mut best: Option<(f64, std::ops::Range<usize>)> = None;
    for r in &rings {
        let count = if r.rho == 0.0 { 1 } else { r.count };
        if r.rho > 0.0 {
            let d = (r.z - mid).abs();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, start..start + count));
            }
        }
        start += count;
    }
    Ok(best.map(|(_, r)| r))
}

fn icosphere(subdivisions: u32, radius: f64) -> Result<TriMesh, ShapeError> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(unit)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize| {
                *midpoints.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    vertices.push(unit(geom::add(vertices[i], vertices[j])));
                    vertices.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| geom::scale(v, radius)).collect();
    Ok(TriMesh::new(vertices, faces)?)
}

fn unit(v: Vec3) -> Vec3 {
    geom::scale(v, 1.0 / geom::norm(v))
}

/// One profile sample: a ring of `count` vertices at `(rho, z)`, or a pole
/// when `rho == 0`.
#[derive(Debug, Clone, Copy)]
struct Ring {
    rho: f64,
    z: f64,
    count: usize,
    phase: f64,
}

fn ring(rho: f64, z: f64, count: usize, parity: usize) -> Ring {
    let phase = if parity % 2 == 1 { PI / count as f64 } else { 0.0 };
    Ring {
        rho,
        z,
        count,
        phase,
    }
}

fn rings_for(spec: &ShapeSpec) -> Vec<Ring> {
    let mut rings = Vec::new();
    match *spec {
        ShapeSpec::Icosphere { .. } => unreachable!("icosphere is not rotational"),
        ShapeSpec::Cylinder {
            radius,
            height,
            n_theta,
            n_z,
            caps,
        } => {
            let spacing = height / n_z as f64;
            let m = cap_ring_count(radius, spacing);
            let cap_count = |k: usize| ((n_theta as f64 * k as f64 / m as f64).round() as usize).max(3);
            let (z0, z1) = (-0.5 * height, 0.5 * height);
            if caps {
                rings.push(ring(0.0, z0, 1, 0));
                for k in 1..m {
                    rings.push(ring(radius * k as f64 / m as f64, z0, cap_count(k), rings.len()));
                }
            }
            for j in 0..=n_z {
                let z = if j == n_z { z1 } else { z0 + spacing * j as f64 };
                rings.push(ring(radius, z, n_theta, rings.len()));
            }
            if caps {
                for k in (1..m).rev() {
                    rings.push(ring(radius * k as f64 / m as f64, z1, cap_count(k), rings.len()));
                }
                rings.push(ring(0.0, z1, 1, 0));
            }
        }
        ShapeSpec::Catenoid {
            half_height,
            n_theta,
            n_z,
        } => {
            for j in 0..=n_z {
                let z = -half_height + 2.0 * half_height * j as f64 / n_z as f64;
                rings.push(ring(z.cosh(), z, n_theta, j));
            }
        }
        ShapeSpec::Dumbbell {
            profile,
            n_theta,
            n_rings,
        } => {
            // Rings equally spaced in arc length along the profile.
            let half = profile.half_length();
            const SAMPLES: usize = 20_000;
            let pts: Vec<[f64; 2]> = (0..=SAMPLES)
                .map(|k| {
                    let z = -half + 2.0 * half * k as f64 / SAMPLES as f64;
                    [profile.radius(z), z]
                })
                .collect();
            let mut arc = vec![0.0; pts.len()];
            for k in 1..pts.len() {
                let d = [pts[k][0] - pts[k - 1][0], pts[k][1] - pts[k - 1][1]];
                arc[k] = arc[k - 1] + d[0].hypot(d[1]);
            }
            let total = arc[SAMPLES];
            let ds = total / (n_rings + 1) as f64;
            rings.push(ring(0.0, -half, 1, 0));
            let mut seg = 0;
            for j in 1..=n_rings {
                let target = ds * j as f64;
                while arc[seg + 1] < target {
                    seg += 1;
                }
                let t = (target - arc[seg]) / (arc[seg + 1] - arc[seg]);
                let z = pts[seg][1] + t * (pts[seg + 1][1] - pts[seg][1]);
                let rho = profile.radius(z);
                let count = ((TAU * rho / ds).round() as usize).clamp(6, n_theta);
                rings.push(ring(rho, z, count, j));
            }
            rings.push(ring(0.0, half, 1, 0));
        }
        ShapeSpec::Revolution {
            ref profile,
            n_theta,
        } => {
            for (k, &[rho, z]) in profile.iter().enumerate() {
                let count = if rho == 0.0 { 1 } else { n_theta };
                rings.push(ring(rho, z, count, k));
            }
        }
    }
    rings
}

/// Builds vertices and consistently oriented faces from a ring sequence.
/// Faces follow `∂θ × ∂s`, which points outward when the profile runs
/// counter-clockwise in the (rho, z) half-plane.
fn revolve(rings: &[Ring]) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<usize>) {
    let mut vertices = Vec::new();
    let mut starts = Vec::with_capacity(rings.len());
    for r in rings {
        starts.push(vertices.len());
        if r.rho == 0.0 {
            vertices.push([0.0, 0.0, r.z]);
        } else {
            for j in 0..r.count {
                let theta = r.phase + TAU * j as f64 / r.count as f64;
                vertices.push([r.rho * theta.cos(), r.rho * theta.sin(), r.z]);
            }
        }
    }
    let mut faces = Vec::new();
    for k in 0..rings.len().saturating_sub(1) {
        let (ra, rb) = (rings[k], rings[k + 1]);
        let (sa, sb) = (starts[k], starts[k + 1]);
        match (ra.rho == 0.0, rb.rho == 0.0) {
            (true, true) => {}
            (true, false) => {
                for j in 0..rb.count {
                    faces.push([sa, sb + (j + 1) % rb.count, sb + j]);
                }
            }
            (false, true) => {
                for i in 0..ra.count {
                    faces.push([sa + i, sa + (i + 1) % ra.count, sb]);
                }
            }
            (false, false) => {
                let angle = |r: &Ring, i: usize| r.phase + TAU * i as f64 / r.count as f64;
                let (mut i, mut j) = (0, 0);
                while i < ra.count || j < rb.count {
                    let advance_a =
                        j == rb.count || (i < ra.count && angle(&ra, i + 1) <= angle(&rb, j + 1));
                    let a = sa + i % ra.count;
                    let b = sb + j % rb.count;
                    if advance_a {
                        faces.push([a, sa + (i + 1) % ra.count, b]);
                        i += 1;
                    } else {
                        faces.push([a, sb + (j + 1) % rb.count, b]);
                        j += 1;
                    }
                }
            }
        }
    }
    (vertices, faces, starts)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ShapeError> {
    v.parse()
        .map_err(|_| ShapeError::Spec(format!("invalid value `{v}` for `{key}`")))
}

fn parse_flag(key: &str, v: &str) -> Result<bool, ShapeError> {
    match v {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => spec_err(format!("invalid value `{v}` for `{key}`")),
    }
}

impl FromStr for ShapeSpec {
    type Err = ShapeError;

    /// Parses inline specs such as `icosphere:3`, `icosphere:subdiv=3,r=2`,
    /// `cylinder:r=1,h=6,nt=64,nz=48,caps=1`, `catenoid:nt=64,nz=32`,
    /// `dumbbell:default` or `revolution:nt=32,profile=0:-1/1:0/0:1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let mut spec = match kind {
            "icosphere" => ShapeSpec::icosphere(3, 1.0),
            "cylinder" => ShapeSpec::cylinder(1.0, 6.0, 80, 64, true),
            "catenoid" => ShapeSpec::catenoid(64, 32),
            "dumbbell" => ShapeSpec::dumbbell(),
            "revolution" => ShapeSpec::Revolution {
                profile: Vec::new(),
                n_theta: 32,
            },
            other => return spec_err(format!("unknown shape kind `{other}`")),
        };
        for item in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            if item == "default" {
                continue;
            }
            let (key, value) = match item.split_once('=') {
                Some(kv) => kv,
                None if kind == "icosphere" => ("subdiv", item),
                None => return spec_err(format!("expected key=value, got `{item}`")),
            };
            match (&mut spec, key) {
                (ShapeSpec::Icosphere { subdivisions, .. }, "subdiv") => {
                    *subdivisions = parse_num(key, value)?
                }
                (ShapeSpec::Icosphere { radius, .. }, "r") => *radius = parse_num(key, value)?,
                (ShapeSpec::Cylinder { radius, .. }, "r") => *radius = parse_num(key, value)?,
                (ShapeSpec::Cylinder { height, .. }, "h") => *height = parse_num(key, value)?,
                (ShapeSpec::Cylinder { n_theta, .. }, "nt") => *n_theta = parse_num(key, value)?,
                (ShapeSpec::Cylinder { n_z, .. }, "nz") => *n_z = parse_num(key, value)?,
                (ShapeSpec::Cylinder { caps, .. }, "caps") => *caps = parse_flag(key, value)?,
                (ShapeSpec::Catenoid { half_height, .. }, "zmax") => {
                    *half_height = parse_num(key, value)?
                }
                (ShapeSpec::Catenoid { n_theta, .. }, "nt") => *n_theta = parse_num(key, value)?,
                (ShapeSpec::Catenoid { n_z, .. }, "nz") => *n_z = parse_num(key, value)?,
                (ShapeSpec::Dumbbell { n_theta, .. }, "nt") => *n_theta = parse_num(key, value)?,
                (ShapeSpec::Dumbbell { n_rings, .. }, "nz") => *n_rings = parse_num(key, value)?,
                (ShapeSpec::Dumbbell { profile, .. }, "bulb") => {
                    profile.bulb_radius = parse_num(key, value)?
                }
                (ShapeSpec::Dumbbell { profile, .. }, "center") => {
                    profile.bulb_center = parse_num(key, value)?
                }
                (ShapeSpec::Dumbbell { profile, .. }, "neck") => {
                    profile.neck_radius = parse_num(key, value)?
                }
                (ShapeSpec::Dumbbell { profile, .. }, "blend") => {
                    profile.blend = parse_num(key, value)?
                }
                (ShapeSpec::Revolution { n_theta, .. }, "nt") => *n_theta = parse_num(key, value)?,
                (ShapeSpec::Revolution { profile, .. }, "profile") => {
                    *profile = value
                        .split('/')
                        .map(|pair| {
                            let (rho, z) = pair
                                .split_once(':')
                                .ok_or_else(|| ShapeError::Spec(format!("expected rho:z, got `{pair}`")))?;
                            Ok([parse_num("rho", rho)?, parse_num("z", z)?])
                        })
                        .collect::<Result<_, ShapeError>>()?
                }
                _ => return spec_err(format!("unknown parameter `{key}` for {kind}")),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeSpec::Icosphere {
                subdivisions,
                radius,
            } => write!(f, "icosphere:subdiv={subdivisions},r={radius:?}"),
            ShapeSpec::Cylinder {
                radius,
                height,
                n_theta,
                n_z,
                caps,
            } => write!(
                f,
                "cylinder:r={radius:?},h={height:?},nt={n_theta},nz={n_z},caps={}",
                u8::from(*caps)
            ),
            ShapeSpec::Catenoid {
                half_height,
                n_theta,
                n_z,
            } => write!(f, "catenoid:zmax={half_height:?},nt={n_theta},nz={n_z}"),
            ShapeSpec::Dumbbell {
                profile,
                n_theta,
                n_rings,
            } => write!(
                f,
                "dumbbell:bulb={:?},center={:?},neck={:?},blend={:?},nt={n_theta},nz={n_rings}",
                profile.bulb_radius, profile.bulb_center, profile.neck_radius, profile.blend
            ),
            ShapeSpec::Revolution { profile, n_theta } => {
                let pts: Vec<String> = profile.iter().map(|[r, z]| format!("{r:?}:{z:?}")).collect();
                write!(f, "revolution:nt={n_theta},profile={}", pts.join("/"))
            }
        }
    }
}
