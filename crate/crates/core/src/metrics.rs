//! Per-step measurements of an evolving surface.
//!
//! Everything here compares the current positions against the rest mesh
//! through the per-triangle stretch spectrum: the singular values of the
//! linear map taking each rest triangle to its current image, both flattened
//! isometrically into the plane.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::fem::SparseSymMatrix;
use crate::geom::{self, Vec3};
use crate::io::fmt_f64;
use crate::mesh::TriMesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("rest triangle {face} is degenerate")]
    DegenerateRest { face: usize },
    #[error("triangle {face} collapsed to a point")]
    DegenerateTriangle { face: usize },
}

/// Per-triangle stretch magnitudes `λ₁ ≥ λ₂ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchSpectrum {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Squared Frobenius norm of each Jacobian, `λ₁² + λ₂²`.
    pub trace: Vec<f64>,
    /// Signed-free determinant `λ₁λ₂ = current area / rest area`.
    pub det: Vec<f64>,
    pub rest_area: Vec<f64>,
}

impl StretchSpectrum {
    pub fn len(&self) -> usize {
        self.lambda1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda1.is_empty()
    }

    /// Faces whose image has collapsed (`λ₂ = 0`).
    pub fn degenerate_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.lambda2
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 0.0)
            .map(|(i, _)| i)
    }
}

/// Triangle edges `p1 − p0`, `p2 − p0` written in an orthonormal frame of the
/// triangle's plane: `[[a_x, b_x], [a_y, b_y]]` with `a_y = 0`.
fn flatten(p: [Vec3; 3]) -> [[f64; 2]; 2] {
    let a = geom::sub(p[1], p[0]);
    let b = geom::sub(p[2], p[0]);
    let la = geom::norm(a);
    if la == 0.0 {
        return [[0.0, geom::norm(b)], [0.0, 0.0]];
    }
    let bx = geom::dot(a, b) / la;
    let by = geom::norm(geom::cross(a, b)) / la;
    [[la, bx], [0.0, by]]
}

/// Singular values of `[[a, b], [c, d]]`, larger first.
pub fn singular_values_2x2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = m;
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    (q + r, (q - r).abs())
}

pub fn stretch_spectrum(rest: &TriMesh, current: &[Vec3]) -> Result<StretchSpectrum, MetricsError> {
    if current.len() != rest.vertex_count() {
        return Err(MetricsError::DimensionMismatch {
            expected: rest.vertex_count(),
            actual: current.len(),
        });
    }
    let x0 = rest.vertices();
    let nf = rest.face_count();
    let mut s = StretchSpectrum {
        lambda1: Vec::with_capacity(nf),
        lambda2: Vec::with_capacity(nf),
        trace: Vec::with_capacity(nf),
        det: Vec::with_capacity(nf),
        rest_area: Vec::with_capacity(nf),
    };
    for (fi, &[i, j, k]) in rest.faces().iter().enumerate() {
        let r = flatten([x0[i], x0[j], x0[k]]);
        let c = flatten([current[i], current[j], current[k]]);
        let rest_det = r[0][0] * r[1][1];
        if !(rest_det > 0.0) {
            return Err(MetricsError::DegenerateRest { face: fi });
        }
        // J = C R⁻¹ with R upper triangular.
        let inv = [
            [1.0 / r[0][0], -r[0][1] / rest_det],
            [0.0, 1.0 / r[1][1]],
        ];
        let jac = [
            [
                c[0][0] * inv[0][0],
                c[0][0] * inv[0][1] + c[0][1] * inv[1][1],
            ],
            [0.0, c[1][1] * inv[1][1]],
        ];
        let (l1, l2) = singular_values_2x2(jac);
        let det = jac[0][0] * jac[1][1];
        let trace = jac[0][0] * jac[0][0] + jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1];
        s.lambda1.push(l1);
        s.lambda2.push(if det == 0.0 { 0.0 } else { l2 });
        s.trace.push(trace);
        s.det.push(det);
        s.rest_area.push(0.5 * rest_det);
    }
    Ok(s)
}

/// Rest-area-weighted mean of `λ₁/λ₂`; infinite once any triangle collapses.
pub fn qc_error(spectrum: &StretchSpectrum) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((l1, l2), a) in spectrum
        .lambda1
        .iter()
        .zip(&spectrum.lambda2)
        .zip(&spectrum.rest_area)
    {
        if *l2 == 0.0 {
            return f64::INFINITY;
        }
        num += a * (l1 / l2);
        den += a;
    }
    num / den
}

/// Weighted mean position.
pub fn barycenter(positions: &[Vec3], weights: &[f64]) -> Vec3 {
    let total: f64 = weights.iter().sum();
    let sum = positions
        .iter()
        .zip(weights)
        .fold([0.0; 3], |acc, (p, w)| geom::add(acc, geom::scale(*p, *w)));
    geom::scale(sum, 1.0 / total)
}

/// Weighted variance of the distance to the weighted barycenter.
pub fn sphericity_variance(positions: &[Vec3], weights: &[f64]) -> f64 {
    let c = barycenter(positions, weights);
    let total: f64 = weights.iter().sum();
    let dist: Vec<f64> = positions.iter().map(|p| geom::norm(geom::sub(*p, c))).collect();
    let mean = dist.iter().zip(weights).map(|(d, w)| d * w).sum::<f64>() / total;
    dist.iter()
        .zip(weights)
        .map(|(d, w)| w * (d - mean) * (d - mean))
        .sum::<f64>()
        / total
}

/// Weighted mean distance to the weighted barycenter.
pub fn mean_radius(positions: &[Vec3], weights: &[f64]) -> f64 {
    let c = barycenter(positions, weights);
    let total: f64 = weights.iter().sum();
    positions
        .iter()
        .zip(weights)
        .map(|(p, w)| w * geom::norm(geom::sub(*p, c)))
        .sum::<f64>()
        / total
}

/// Mass-weighted L² norm of `next − prev`.
pub fn convergence_delta(
    prev: &[Vec3],
    next: &[Vec3],
    mass: &SparseSymMatrix,
) -> Result<f64, MetricsError> {
    let n = mass.dim();
    for len in [prev.len(), next.len()] {
        if len != n {
            return Err(MetricsError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let d: Vec<Vec3> = prev.iter().zip(next).map(|(a, b)| geom::sub(*b, *a)).collect();
    let md = mass.mul_rows(&d);
    let sq: f64 = d.iter().zip(&md).map(|(a, b)| geom::dot(*a, *b)).sum();
    Ok(sq.max(0.0).sqrt())
}

/// Modified area and conformal energy densities for one triangle given
/// `d = λ₁²λ₂²` and `T = λ₁² + λ₂²`; they sum to `T/2`.
pub fn energy_densities(d: f64, t: f64) -> (f64, f64) {
    (2.0 * d / t, (t * t - 4.0 * d) / (2.0 * t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDecomposition {
    /// `Ẽ_A`.
    pub area_tilde: f64,
    /// `Ẽ_C`.
    pub conformal_tilde: f64,
    /// `Ẽ_A + Ẽ_C`, the Dirichlet energy of the map.
    pub total: f64,
    /// Unmodified area energy `E_A`, the current area.
    pub area: f64,
    /// Unmodified conformal energy `E_C`; infinite once a triangle collapses.
    pub conformal: f64,
}

pub fn energy_decomposition(
    rest: &TriMesh,
    current: &[Vec3],
) -> Result<EnergyDecomposition, MetricsError> {
    Ok(energies_of(&stretch_spectrum(rest, current)?)?)
}

pub fn energies_of(spectrum: &StretchSpectrum) -> Result<EnergyDecomposition, MetricsError> {
    let mut e = EnergyDecomposition {
        area_tilde: 0.0,
        conformal_tilde: 0.0,
        total: 0.0,
        area: 0.0,
        conformal: 0.0,
    };
    for (fi, ((&t, &det), &a)) in spectrum
        .trace
        .iter()
        .zip(&spectrum.det)
        .zip(&spectrum.rest_area)
        .enumerate()
    {
        if t == 0.0 {
            return Err(MetricsError::DegenerateTriangle { face: fi });
        }
        let d = det * det;
        let (ea, ec) = energy_densities(d, t);
        e.area_tilde += a * ea;
        e.conformal_tilde += a * ec;
        e.total += a * 0.5 * t;
        e.area += a * det.abs();
        e.conformal += if det == 0.0 {
            f64::INFINITY
        } else {
            0.5 * a * (t * t - 4.0 * d) / det.abs()
        };
    }
    Ok(e)
}

/// Flow status as recorded in a metrics row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Running,
    Converged,
    Finished,
    Singular,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Running => "running",
            RecordStatus::Converged => "converged",
            RecordStatus::Finished => "finished",
            RecordStatus::Singular => "singular",
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "running" => RecordStatus::Running,
            "converged" => RecordStatus::Converged,
            "finished" => RecordStatus::Finished,
            "singular" => RecordStatus::Singular,
            other => return Err(format!("unknown status `{other}`")),
        })
    }
}

/// One row of the per-step metrics table.
///
/// Area and energies are taken on the positions produced by the solve,
/// before unit-area rescaling; divide the energy by the area for the
/// energy of the rescaled surface. `convergence_delta` compares stored
/// (rescaled) positions, and `sphericity_variance` is measured on the
/// surface rescaled to unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub step: usize,
    pub flow_time: f64,
    pub area: f64,
    pub convergence_delta: f64,
    pub qc_error: f64,
    pub sphericity_variance: f64,
    pub dirichlet_energy: f64,
    pub area_energy_tilde: f64,
    pub conformal_energy_tilde: f64,
    pub min_triangle_area_ratio: f64,
    pub status: RecordStatus,
}

impl MetricRecord {
    /// Dirichlet energy of the surface rescaled to unit area.
    pub fn normalized_dirichlet_energy(&self) -> f64 {
        self.dirichlet_energy / self.area
    }
}

/// Inputs for [`measure`].
pub struct Sample<'a> {
    pub rest: &'a TriMesh,
    pub stiffness0: &'a SparseSymMatrix,
    /// Positions produced by the solve, before rescaling.
    pub raw: &'a [Vec3],
    /// Stored positions before and after the step.
    pub prev: &'a [Vec3],
    pub next: &'a [Vec3],
    /// Mass matrix at `next`.
    pub mass: &'a SparseSymMatrix,
    pub step: usize,
    pub flow_time: f64,
    pub status: RecordStatus,
}

pub fn measure(s: &Sample<'_>) -> Result<MetricRecord, MetricsError> {
    let faces = s.rest.faces();
    let spectrum = stretch_spectrum(s.rest, s.raw)?;
    let energies = energies_of(&spectrum)?;
    let area = crate::mesh::surface_area_of(s.raw, faces);
    let weights = crate::fem::lumped_mass(s.raw, faces);
    let dirichlet = crate::fem::dirichlet_energy(s.stiffness0, s.raw).map_err(|_| {
        MetricsError::DimensionMismatch {
            expected: s.stiffness0.dim(),
            actual: s.raw.len(),
        }
    })?;
    Ok(MetricRecord {
        step: s.step,
        flow_time: s.flow_time,
        area,
        convergence_delta: convergence_delta(s.prev, s.next, s.mass)?,
        qc_error: qc_error(&spectrum),
        sphericity_variance: sphericity_variance(s.raw, &weights) / area,
        dirichlet_energy: dirichlet,
        area_energy_tilde: energies.area_tilde,
        conformal_energy_tilde: energies.conformal_tilde,
        min_triangle_area_ratio: crate::fem::min_area_ratio(s.raw, faces),
        status: s.status,
    })
}

pub const CSV_COLUMNS: [&str; 11] = [
    "step",
    "flow_time",
    "area",
    "convergence_delta",
    "qc_error",
    "sphericity_variance",
    "dirichlet_energy",
    "tildeEA",
    "tildeEC",
    "min_tri_area_ratio",
    "status",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing header row")]
    MissingHeader,
    #[error("header does not match the metrics schema: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

pub fn write_csv_header(out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))
}

pub fn write_csv_row(out: &mut impl Write, r: &MetricRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        fmt_f64(r.flow_time),
        fmt_f64(r.area),
        fmt_f64(r.convergence_delta),
        fmt_f64(r.qc_error),
        fmt_f64(r.sphericity_variance),
        fmt_f64(r.dirichlet_energy),
        fmt_f64(r.area_energy_tilde),
        fmt_f64(r.conformal_energy_tilde),
        fmt_f64(r.min_triangle_area_ratio),
        r.status
    )
}

pub fn write_csv(out: &mut impl Write, records: &[MetricRecord]) -> std::io::Result<()> {
    write_csv_header(out)?;
    for r in records {
        write_csv_row(out, r)?;
    }
    Ok(())
}

/// Parses a metrics table. Blank lines are skipped; the header is mandatory.
pub fn parse_csv(input: impl BufRead) -> Result<Vec<MetricRecord>, CsvError> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(CsvError::MissingHeader),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let names: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if names != CSV_COLUMNS {
        return Err(CsvError::Header(header));
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = |message: String| CsvError::Row {
            line: line_no,
            message,
        };
        let cells: Vec<&str> = line.trim().split(',').map(str::trim).collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(row(format!(
                "expected {} fields, found {}",
                CSV_COLUMNS.len(),
                cells.len()
            )));
        }
        let num = |k: usize| -> Result<f64, CsvError> {
            cells[k]
                .parse::<f64>()
                .map_err(|_| row(format!("{}: invalid number `{}`", CSV_COLUMNS[k], cells[k])))
        };
        out.push(MetricRecord {
            step: cells[0]
                .parse()
                .map_err(|_| row(format!("step: invalid integer `{}`", cells[0])))?,
            flow_time: num(1)?,
            area: num(2)?,
            convergence_delta: num(3)?,
            qc_error: num(4)?,
            sphericity_variance: num(5)?,
            dirichlet_energy: num(6)?,
            area_energy_tilde: num(7)?,
            conformal_energy_tilde: num(8)?,
            min_triangle_area_ratio: num(9)?,
            status: cells[10].parse().map_err(row)?,
        });
    }
    Ok(out)
}
