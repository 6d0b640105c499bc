//! Semi-implicit surface flows.
//!
//! Every variant solves `(D − δL) x⁺ = D x` once per step and differs only in
//! which matrices are refreshed:
//!
//! | variant | mass `D`        | stiffness `L`   |
//! |---------|-----------------|-----------------|
//! | `mcf`   | every step      | every step      |
//! | `cmcf`  | every step      | fixed at `t = 0`|
//! | `heat`  | fixed at `t = 0`| fixed at `t = 0`|
//!
//! A failed Cholesky pivot or a collapsed triangle does not raise an error:
//! the state becomes [`FlowStatus::Singular`] and keeps the last valid
//! positions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::fem::{self, Assembler, FemError, SparseSymMatrix, StiffnessOptions};
use crate::geom::{self, Vec3};
use crate::mesh::{TriMesh, DEGENERATE_AREA_RATIO};
use crate::metrics::{self, MetricRecord, MetricsError, RecordStatus, Sample};
use crate::solver::{self, Factorization, SolverError, SymbolicCholesky};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowVariant {
    Mcf,
    Heat,
    Cmcf,
}

impl FlowVariant {
    pub const ALL: [FlowVariant; 3] = [FlowVariant::Mcf, FlowVariant::Heat, FlowVariant::Cmcf];

    pub fn as_str(self) -> &'static str {
        match self {
            FlowVariant::Mcf => "mcf",
            FlowVariant::Heat => "heat",
            FlowVariant::Cmcf => "cmcf",
        }
    }
}

impl fmt::Display for FlowVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlowVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mcf" => Ok(FlowVariant::Mcf),
            "heat" => Ok(FlowVariant::Heat),
            "cmcf" => Ok(FlowVariant::Cmcf),
            other => Err(format!("unknown flow `{other}` (expected mcf, heat or cmcf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    #[default]
    None,
    Fixed,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::None => "none",
            BoundaryMode::Fixed => "fixed",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(BoundaryMode::None),
            "fixed" => Ok(BoundaryMode::Fixed),
            other => Err(format!("unknown boundary mode `{other}` (expected none or fixed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    Cg { tol: f64, max_iter: usize },
}

impl SolverKind {
    pub fn cg() -> Self {
        SolverKind::Cg {
            tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub variant: FlowVariant,
    /// Time step δ.
    pub dt: f64,
    pub steps: usize,
    /// Rescale to unit area after every step.
    pub normalize_area: bool,
    /// Translate the barycenter to the origin after every step.
    pub recenter: bool,
    pub boundary_mode: BoundaryMode,
    /// MCF only: pin vertices whose triangles have all collapsed instead of
    /// stopping.
    pub freeze_collapsed: bool,
    /// Clamp negative cotangent weights at zero when reassembling `L`.
    pub clamp_cotangents: bool,
    /// Steps whose positions are kept in [`FlowResult::snapshots`].
    pub snapshot_schedule: Vec<usize>,
    /// Stop once the largest per-vertex displacement falls below this;
    /// zero disables the test.
    pub stop_eps: f64,
    pub solver: SolverKind,
}

impl FlowConfig {
    pub fn new(variant: FlowVariant, dt: f64, steps: usize) -> Self {
        FlowConfig {
            variant,
            dt,
            steps,
            normalize_area: true,
            recenter: true,
            boundary_mode: BoundaryMode::None,
            freeze_collapsed: false,
            clamp_cotangents: false,
            snapshot_schedule: Vec::new(),
            stop_eps: 0.0,
            solver: SolverKind::Direct,
        }
    }

    /// Same configuration without renormalization or recentering, so flow
    /// time matches the raw evolution.
    pub fn unnormalized(mut self) -> Self {
        self.normalize_area = false;
        self.recenter = false;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FlowError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.stop_eps >= 0.0 && self.stop_eps.is_finite()) {
            return Err(FlowError::Config(format!(
                "stop_eps must be non-negative, got {}",
                self.stop_eps
            )));
        }
        if let SolverKind::Cg { tol, max_iter } = self.solver {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(FlowError::Config(
                    "cg needs a positive tolerance and iteration budget".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Powers of two up to `steps`: 1, 2, 4, …
pub fn pow2_schedule(steps: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |s| s.checked_mul(2))
        .take_while(|&s| s <= steps)
        .collect()
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SingularCause {
    NotPositiveDefinite { pivot: usize, value: f64 },
    DegenerateTriangle { face: usize, area: f64 },
    CgBreakdown,
    CgMaxIterations,
    NonFinite,
}

impl fmt::Display for SingularCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularCause::NotPositiveDefinite { pivot, value } => {
                write!(f, "system not positive definite (pivot {value:e} at vertex {pivot})")
            }
            SingularCause::DegenerateTriangle { face, area } => {
                write!(f, "triangle {face} degenerate (area {area:e})")
            }
            SingularCause::CgBreakdown => f.write_str("conjugate gradients found negative curvature"),
            SingularCause::CgMaxIterations => f.write_str("conjugate gradients did not converge"),
            SingularCause::NonFinite => f.write_str("solution is not finite"),
        }
    }
}

impl From<SolverError> for SingularCause {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NotPositiveDefinite { pivot, value } => {
                SingularCause::NotPositiveDefinite { pivot, value }
            }
            SolverError::Breakdown { .. } => SingularCause::CgBreakdown,
            SolverError::MaxIterations { .. } => SingularCause::CgMaxIterations,
            SolverError::DimensionMismatch { .. } => unreachable!("system sized from the mesh"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowStatus {
    Running,
    Converged { step: usize },
    /// `step` is the step that could not be taken.
    Singular { step: usize, cause: SingularCause },
    Finished,
}

impl FlowStatus {
    pub fn is_running(&self) -> bool {
        matches!(self, FlowStatus::Running)
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, FlowStatus::Singular { .. })
    }

    pub fn record_status(&self) -> RecordStatus {
        match self {
            FlowStatus::Running => RecordStatus::Running,
            FlowStatus::Converged { .. } => RecordStatus::Converged,
            FlowStatus::Singular { .. } => RecordStatus::Singular,
            FlowStatus::Finished => RecordStatus::Finished,
        }
    }
}

impl fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowStatus::Running => f.write_str("running"),
            FlowStatus::Converged { step } => write!(f, "converged at step {step}"),
            FlowStatus::Singular { step, cause } => write!(f, "singular at step {step}: {cause}"),
            FlowStatus::Finished => f.write_str("finished"),
        }
    }
}

/// The evolving surface and the matrices it carries between steps.
#[derive(Debug, Clone)]
pub struct FlowState {
    config: FlowConfig,
    rest: TriMesh,
    assembler: Assembler,
    positions: Vec<Vec3>,
    /// Positions before the last step, and the raw solve output of the last
    /// step before rescaling.
    prev_positions: Vec<Vec3>,
    raw_positions: Vec<Vec3>,
    step: usize,
    flow_time: f64,
    mass0: SparseSymMatrix,
    stiffness0: Arc<SparseSymMatrix>,
    mass: SparseSymMatrix,
    stiffness: Arc<SparseSymMatrix>,
    symbolic: Option<Arc<SymbolicCholesky>>,
    heat_factor: Option<Factorization>,
    /// Vertices held in place by the boundary mode or by tags on the mesh.
    pinned: Vec<bool>,
    /// Largest per-vertex displacement of the last step.
    last_displacement: f64,
    status: FlowStatus,
    warnings: Vec<String>,
}

impl FlowState {
    pub fn new(mesh: &TriMesh, config: &FlowConfig) -> Result<Self, FlowError> {
        config.validate()?;
        let mut warnings = Vec::new();
        let assembler = Assembler::new(mesh);
        let x = mesh.vertices().to_vec();
        let mass0 = assembler.mass(&x)?;
        let stiffness0 = Arc::new(assembler.stiffness(
            &x,
            StiffnessOptions {
                clamp_cotangents: config.clamp_cotangents,
                skip_degenerate: false,
            },
        )?);

        let mut pinned = mesh.frozen_tags().to_vec();
        if mesh.has_boundary() {
            match config.boundary_mode {
                BoundaryMode::None => warnings.push(
                    "mesh has a boundary but boundary mode is none; boundary vertices move freely"
                        .into(),
                ),
                BoundaryMode::Fixed => {
                    for (p, &b) in pinned.iter_mut().zip(mesh.boundary_tags()) {
                        *p |= b;
                    }
                }
            }
        }
        if pinned.iter().any(|&p| p) && (config.normalize_area || config.recenter) {
            warnings.push(
                "pinned vertices present: unit-area rescaling and recentering are skipped".into(),
            );
        }
        if config.freeze_collapsed && config.variant != FlowVariant::Mcf {
            warnings.push(format!(
                "freeze_collapsed only applies to mcf; ignored for {}",
                config.variant
            ));
        }

        let status = if config.steps == 0 {
            FlowStatus::Finished
        } else {
            FlowStatus::Running
        };
        Ok(FlowState {
            config: config.clone(),
            rest: mesh.clone(),
            prev_positions: x.clone(),
            raw_positions: x.clone(),
            positions: x,
            assembler,
            step: 0,
            flow_time: 0.0,
            mass: mass0.clone(),
            mass0,
            stiffness: Arc::clone(&stiffness0),
            stiffness0,
            symbolic: None,
            heat_factor: None,
            pinned,
            last_displacement: 0.0,
            status,
            warnings,
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn rest(&self) -> &TriMesh {
        &self.rest
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn prev_positions(&self) -> &[Vec3] {
        &self.prev_positions
    }

    /// Solve output of the last step, before rescaling and recentering.
    pub fn raw_positions(&self) -> &[Vec3] {
        &self.raw_positions
    }

    /// The current surface as a mesh.
    pub fn mesh(&self) -> TriMesh {
        self.rest
            .with_positions(self.positions.clone())
            .expect("positions match the mesh")
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn flow_time(&self) -> f64 {
        self.flow_time
    }

    pub fn status(&self) -> &FlowStatus {
        &self.status
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn stiffness0(&self) -> &Arc<SparseSymMatrix> {
        &self.stiffness0
    }

    pub fn mass0(&self) -> &SparseSymMatrix {
        &self.mass0
    }

    /// Stiffness matrix used by the most recent step.
    pub fn stiffness(&self) -> &Arc<SparseSymMatrix> {
        &self.stiffness
    }

    /// Mass matrix used by the most recent step.
    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    pub fn last_displacement(&self) -> f64 {
        self.last_displacement
    }

    fn rescales(&self) -> bool {
        !self.pinned.iter().any(|&p| p)
    }

    fn singular(&mut self, cause: SingularCause) {
        self.status = FlowStatus::Singular {
            step: self.step + 1,
            cause,
        };
    }

    /// Advances one step. Does nothing unless the status is running.
    pub fn step(&mut self) {
        if !self.status.is_running() {
            return;
        }
        let x = &self.positions;
        let variant = self.config.variant;
        let mut pinned = self.pinned.clone();

        let freeze = self.config.freeze_collapsed && variant == FlowVariant::Mcf;
        if variant != FlowVariant::Heat {
            if freeze {
                pin_collapsed(x, self.assembler.faces(), &mut pinned);
            } else if let Some((face, area)) = fem::first_degenerate(x, self.assembler.faces()) {
                self.singular(SingularCause::DegenerateTriangle { face, area });
                return;
            }
        }

        let (mass, stiffness) = match variant {
            FlowVariant::Heat => (self.mass0.clone(), Arc::clone(&self.stiffness0)),
            FlowVariant::Cmcf => match self.assembler.mass(x) {
                Ok(d) => (d, Arc::clone(&self.stiffness0)),
                Err(e) => panic!("mass assembly on a sized mesh: {e}"),
            },
            FlowVariant::Mcf => {
                let d = self.assembler.mass(x).expect("sized mesh");
                let options = StiffnessOptions {
                    clamp_cotangents: self.config.clamp_cotangents,
                    skip_degenerate: freeze,
                };
                match self.assembler.stiffness(x, options) {
                    Ok(l) => (d, Arc::new(l)),
                    Err(FemError::DegenerateTriangle { face, area }) => {
                        self.singular(SingularCause::DegenerateTriangle { face, area });
                        return;
                    }
                    Err(e) => panic!("stiffness assembly on a sized mesh: {e}"),
                }
            }
        };

        let mut system = mass.combine(1.0, &stiffness, -self.config.dt);
        let mut rhs = mass.mul_rows(x);
        if pinned.iter().any(|&p| p) {
            eliminate(&mut system, &mut rhs, x, &pinned);
        }

        let solved = match self.config.solver {
            SolverKind::Direct => {
                let symbolic = self
                    .symbolic
                    .get_or_insert_with(|| SymbolicCholesky::analyze(system.pattern()));
                if variant == FlowVariant::Heat && !freeze {
                    if self.heat_factor.is_none() {
                        match Factorization::new(symbolic, &system) {
                            Ok(f) => self.heat_factor = Some(f),
                            Err(e) => {
                                self.singular(e.into());
                                return;
                            }
                        }
                    }
                    self.heat_factor.as_ref().unwrap().solve(&rhs)
                } else {
                    Factorization::new(symbolic, &system).and_then(|f| f.solve(&rhs))
                }
            }
            SolverKind::Cg { tol, max_iter } => solver::solve_cg(&system, &rhs, tol, max_iter),
        };
        let mut next = match solved {
            Ok(next) => next,
            Err(e) => {
                self.singular(e.into());
                return;
            }
        };
        for (i, p) in pinned.iter().enumerate() {
            if *p {
                next[i] = x[i];
            }
        }
        if !next.iter().flatten().all(|c| c.is_finite()) {
            self.singular(SingularCause::NonFinite);
            return;
        }

        let raw = next.clone();
        if self.rescales() && (self.config.normalize_area || self.config.recenter) {
            let faces = self.assembler.faces();
            let weights = fem::lumped_mass(&next, faces);
            let c = metrics::barycenter(&next, &weights);
            let s = if self.config.normalize_area {
                1.0 / crate::mesh::surface_area_of(&next, faces).sqrt()
            } else {
                1.0
            };
            let origin = if self.config.recenter { [0.0; 3] } else { c };
            for p in &mut next {
                *p = geom::add(origin, geom::scale(geom::sub(*p, c), s));
            }
        }

        self.last_displacement = x
            .iter()
            .zip(&next)
            .map(|(a, b)| geom::norm(geom::sub(*b, *a)))
            .fold(0.0, f64::max);
        self.prev_positions = std::mem::replace(&mut self.positions, next);
        self.raw_positions = raw;
        self.mass = mass;
        self.stiffness = stiffness;
        self.step += 1;
        self.flow_time += self.config.dt;

        if self.config.stop_eps > 0.0 && self.last_displacement < self.config.stop_eps {
            self.status = FlowStatus::Converged { step: self.step };
        } else if self.step >= self.config.steps {
            self.status = FlowStatus::Finished;
        }
    }

    /// Metrics of the current state. At step 0 the displacement is zero.
    pub fn record(&self) -> Result<MetricRecord, FlowError> {
        let mass_now = self.assembler.mass(&self.positions)?;
        Ok(metrics::measure(&Sample {
            rest: &self.rest,
            stiffness0: &self.stiffness0,
            raw: &self.raw_positions,
            prev: &self.prev_positions,
            next: &self.positions,
            mass: &mass_now,
            step: self.step,
            flow_time: self.flow_time,
            status: self.status.record_status(),
        })?)
    }
}

/// Pins every vertex all of whose incident triangles are degenerate.
fn pin_collapsed(x: &[Vec3], faces: &[[usize; 3]], pinned: &mut [bool]) {
    let threshold = DEGENERATE_AREA_RATIO * fem::mean_area(x, faces);
    let mut live = vec![false; x.len()];
    for &f in faces {
        let a = crate::mesh::face_area(x, f);
        if a >= threshold && a > 0.0 {
            for v in f {
                live[v] = true;
            }
        }
    }
    for (p, l) in pinned.iter_mut().zip(live) {
        *p |= !l;
    }
}

/// Symmetric elimination of pinned rows: their rows and columns become the
/// identity (scaled by the original diagonal) and the removed couplings move
/// to the right-hand side.
fn eliminate(system: &mut SparseSymMatrix, rhs: &mut [Vec3], x: &[Vec3], pinned: &[bool]) {
    let pattern = Arc::clone(system.pattern());
    let values = system.values_mut();
    for j in 0..pattern.dim() {
        if !pinned[j] {
            continue;
        }
        for (slot, &i) in pattern.row_range(j).zip(pattern.row(j)) {
            if i == j {
                continue;
            }
            let a = values[slot];
            if !pinned[i] {
                rhs[i] = geom::sub(rhs[i], geom::scale(x[j], a));
            }
            values[slot] = 0.0;
            let sym = pattern.find(i, j).expect("symmetric pattern");
            values[sym] = 0.0;
        }
        let d = values[pattern.diag_index(j)];
        rhs[j] = geom::scale(x[j], d);
    }
}

/// Final state, one metrics row per completed step (row 0 is the input),
/// and the scheduled snapshots.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: FlowState,
    pub records: Vec<MetricRecord>,
    pub snapshots: Vec<(usize, Vec<Vec3>)>,
}

/// Runs a flow to completion. `observer` sees the state and its metrics
/// after the input and after every completed step.
pub fn run(
    mesh: &TriMesh,
    config: &FlowConfig,
    mut observer: impl FnMut(&FlowState, &MetricRecord),
) -> Result<FlowResult, FlowError> {
    let mut state = FlowState::new(mesh, config)?;
    let mut records = Vec::with_capacity(config.steps + 1);
    let mut snapshots = Vec::new();
    let snap = |state: &FlowState, snapshots: &mut Vec<(usize, Vec<Vec3>)>| {
        if config.snapshot_schedule.contains(&state.step_index()) {
            snapshots.push((state.step_index(), state.positions().to_vec()));
        }
    };
    let first = state.record()?;
    observer(&state, &first);
    records.push(first);
    snap(&state, &mut snapshots);
    while state.status().is_running() {
        let before = state.step_index();
        state.step();
        if state.step_index() == before {
            break;
        }
        let record = state.record()?;
        observer(&state, &record);
        records.push(record);
        snap(&state, &mut snapshots);
    }
    Ok(FlowResult {
        state,
        records,
        snapshots,
    })
}
