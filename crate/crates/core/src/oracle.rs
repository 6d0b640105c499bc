//! Closed-form radius evolutions and the harness that checks discrete flows
//! against them.
//!
//! With unit initial radius, a sphere under MCF satisfies `r′ = −2/r`, an
//! infinite cylinder `r′ = −1/r`, and a catenoid is minimal so it does not
//! move. Heat flow keeps the initial Laplacian, giving `r′ = −2r` and
//! `r′ = −r`; cMCF keeps the initial stiffness but rescales the mass, which
//! turns the cylinder into `r′ = −1` and leaves the sphere on the MCF curve.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::flow::{self, BoundaryMode, FlowConfig, FlowError, FlowStatus, FlowVariant};
use crate::geom;
use crate::io::fmt_f64;
use crate::shapes::{self, ShapeError, ShapeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalyticShape {
    Catenoid,
    Sphere,
    Cylinder,
}

impl AnalyticShape {
    pub const ALL: [AnalyticShape; 3] = [
        AnalyticShape::Catenoid,
        AnalyticShape::Sphere,
        AnalyticShape::Cylinder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalyticShape::Catenoid => "catenoid",
            AnalyticShape::Sphere => "sphere",
            AnalyticShape::Cylinder => "cylinder",
        }
    }

    /// Mesh used by default for this shape.
    pub fn default_spec(self) -> ShapeSpec {
        match self {
            AnalyticShape::Catenoid => ShapeSpec::catenoid(64, 32),
            AnalyticShape::Sphere => ShapeSpec::icosphere(3, 1.0),
            AnalyticShape::Cylinder => ShapeSpec::cylinder(1.0, 6.0, 80, 64, true),
        }
    }

    /// Steps compared at δ = 1e-3 by default.
    pub fn default_steps(self) -> usize {
        match self {
            AnalyticShape::Cylinder => 200,
            _ => 100,
        }
    }

    /// Frozen pass tolerance: relative radius error for the sphere and
    /// cylinder, displacement over bounding-box diagonal for the catenoid.
    pub fn tolerance(self) -> f64 {
        match self {
            AnalyticShape::Catenoid => 1e-3,
            AnalyticShape::Sphere => 0.02,
            AnalyticShape::Cylinder => 0.05,
        }
    }

    /// Whether a generated mesh of this kind models the shape.
    pub fn accepts(self, spec: &ShapeSpec) -> bool {
        matches!(
            (self, spec),
            (AnalyticShape::Catenoid, ShapeSpec::Catenoid { .. })
                | (AnalyticShape::Sphere, ShapeSpec::Icosphere { .. })
                | (AnalyticShape::Cylinder, ShapeSpec::Cylinder { .. })
        )
    }
}

impl fmt::Display for AnalyticShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalyticShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "catenoid" => Ok(AnalyticShape::Catenoid),
            "sphere" => Ok(AnalyticShape::Sphere),
            "cylinder" => Ok(AnalyticShape::Cylinder),
            other => Err(format!(
                "unknown case `{other}` (expected catenoid, sphere or cylinder)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("t = {t} is outside the validity horizon [0, {t_max})")]
    OutOfHorizon { t: f64, t_max: f64 },
    #[error("{spec} does not model a {shape}")]
    ShapeMismatch { shape: AnalyticShape, spec: String },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// One cell of the shape × flow table, with unit initial radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnalyticCase {
    pub shape: AnalyticShape,
    pub flow: FlowVariant,
}

impl AnalyticCase {
    pub fn new(shape: AnalyticShape, flow: FlowVariant) -> Self {
        AnalyticCase { shape, flow }
    }

    /// All nine cells, shape-major.
    pub fn all() -> Vec<AnalyticCase> {
        AnalyticShape::ALL
            .iter()
            .flat_map(|&s| FlowVariant::ALL.iter().map(move |&f| AnalyticCase::new(s, f)))
            .collect()
    }

    /// Time at which the radius reaches zero.
    pub fn t_max(&self) -> f64 {
        use AnalyticShape::*;
        use FlowVariant::*;
        match (self.shape, self.flow) {
            (Catenoid, _) | (_, Heat) => f64::INFINITY,
            (Sphere, Mcf | Cmcf) => 0.25,
            (Cylinder, Mcf) => 0.5,
            (Cylinder, Cmcf) => 1.0,
        }
    }

    pub fn radius(&self, t: f64) -> Result<f64, OracleError> {
        let t_max = self.t_max();
        if !(t >= 0.0 && t < t_max) {
            return Err(OracleError::OutOfHorizon { t, t_max });
        }
        use AnalyticShape::*;
        use FlowVariant::*;
        Ok(match (self.shape, self.flow) {
            (Catenoid, _) => 1.0,
            (Sphere, Mcf | Cmcf) => (1.0 - 4.0 * t).sqrt(),
            (Sphere, Heat) => (-2.0 * t).exp(),
            (Cylinder, Mcf) => (1.0 - 2.0 * t).sqrt(),
            (Cylinder, Heat) => (-t).exp(),
            (Cylinder, Cmcf) => 1.0 - t,
        })
    }

    /// `dr/dt` at `t = 0`, shared by all three flows of a shape.
    pub fn initial_speed(&self) -> f64 {
        match self.shape {
            AnalyticShape::Catenoid => 0.0,
            AnalyticShape::Sphere => -2.0,
            AnalyticShape::Cylinder => -1.0,
        }
    }
}

impl fmt::Display for AnalyticCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.shape, self.flow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub step: usize,
    pub t: f64,
    pub measured: f64,
    pub analytic: f64,
    pub rel_error: f64,
    /// Largest vertex displacement from the input, over the bounding-box
    /// diagonal.
    pub displacement: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub case: AnalyticCase,
    pub spec: String,
    pub vertex_count: usize,
    pub dt: f64,
    pub steps: usize,
    pub rows: Vec<ComparisonRow>,
    pub max_rel_error: f64,
    pub max_displacement: f64,
    /// `(r(δ) − r(0)) / δ` from the first step.
    pub initial_speed: Option<f64>,
    pub tolerance: f64,
    pub status: FlowStatus,
    pub elapsed: Duration,
}

impl ComparisonReport {
    /// The quantity checked against the tolerance.
    pub fn error(&self) -> f64 {
        match self.case.shape {
            AnalyticShape::Catenoid => self.max_displacement,
            _ => self.max_rel_error,
        }
    }

    pub fn passed(&self) -> bool {
        !self.status.is_singular() && self.rows.len() == self.steps + 1 && self.error() <= self.tolerance
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "case,step,t,measured,analytic,rel_error,displacement")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.case,
                r.step,
                fmt_f64(r.t),
                fmt_f64(r.measured),
                fmt_f64(r.analytic),
                fmt_f64(r.rel_error),
                fmt_f64(r.displacement)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let metric = match self.case.shape {
            AnalyticShape::Catenoid => "max displacement/diag",
            _ => "max rel radius error",
        };
        format!(
            "{:<14} {} {metric} {:.3e} (tol {:.1e}), {} verts, δ={}, {} steps, {}, {:.2}s",
            self.case.to_string(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.error(),
            self.tolerance,
            self.vertex_count,
            self.dt,
            self.steps,
            self.status,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs `case.flow` on `spec` without renormalization and tracks the
/// measured radius against the closed form. A catenoid runs with fixed
/// boundary rings.
pub fn compare_discrete(
    case: AnalyticCase,
    spec: &ShapeSpec,
    dt: f64,
    steps: usize,
) -> Result<ComparisonReport, OracleError> {
    if !case.shape.accepts(spec) {
        return Err(OracleError::ShapeMismatch {
            shape: case.shape,
            spec: spec.to_string(),
        });
    }
    let t_end = dt * steps as f64;
    if t_end >= case.t_max() {
        return Err(OracleError::OutOfHorizon {
            t: t_end,
            t_max: case.t_max(),
        });
    }
    let start = Instant::now();
    let mesh = shapes::generate(spec)?;
    let diag = mesh.bounding_box_diagonal();
    let x0 = mesh.vertices().to_vec();
    let mut config = FlowConfig::new(case.flow, dt, steps).unnormalized();
    if case.shape == AnalyticShape::Catenoid {
        config.boundary_mode = BoundaryMode::Fixed;
    }

    let mut rows = Vec::with_capacity(steps + 1);
    let mut failure = None;
    let result = flow::run(&mesh, &config, |state, _| {
        if failure.is_some() {
            return;
        }
        let t = state.flow_time();
        let x = state.positions();
        let measured = match shapes::mid_ring_radius_of(x, spec) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let analytic = case.radius(t).expect("inside the horizon");
        let displacement = x
            .iter()
            .zip(&x0)
            .map(|(a, b)| geom::norm(geom::sub(*a, *b)))
            .fold(0.0, f64::max)
            / diag;
        rows.push(ComparisonRow {
            step: state.step_index(),
            t,
            measured,
            analytic,
            rel_error: (measured - analytic).abs() / analytic,
            displacement,
        });
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let initial_speed = (rows.len() > 1).then(|| (rows[1].measured - rows[0].measured) / dt);
    Ok(ComparisonReport {
        case,
        spec: spec.to_string(),
        vertex_count: mesh.vertex_count(),
        dt,
        steps,
        max_rel_error: rows.iter().map(|r| r.rel_error).fold(0.0, f64::max),
        max_displacement: rows.iter().map(|r| r.displacement).fold(0.0, f64::max),
        rows,
        initial_speed,
        tolerance: case.shape.tolerance(),
        status: result.state.status().clone(),
        elapsed: start.elapsed(),
    })
}

/// Runs [`compare_discrete`] with the shape's default mesh and horizon.
pub fn compare_default(case: AnalyticCase, dt: f64) -> Result<ComparisonReport, OracleError> {
    compare_discrete(case, &case.shape.default_spec(), dt, case.shape.default_steps())
}

/// Empirical order from errors at mesh sizes `h` and `h / ratio`.
pub fn refinement_order(coarse_error: f64, fine_error: f64, ratio: f64) -> f64 {
    (coarse_error / fine_error).ln() / ratio.ln()
}
