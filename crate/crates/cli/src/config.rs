//! Flow run configuration shared by flags, TOML config files and manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use curvflow::flow::{BoundaryMode, FlowConfig, FlowVariant, SolverKind};
use curvflow::io::MeshFormat;
use curvflow::ShapeSpec;

use crate::error::CliError;
use crate::FlowArgs;

/// Every field mirrors a `flow` flag. Absent fields take the flag defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    pub flow: Option<String>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub normalize: Option<bool>,
    pub recenter: Option<bool>,
    pub boundary: Option<String>,
    pub freeze_collapsed: Option<bool>,
    pub clamp_cotangents: Option<bool>,
    pub snapshots: Option<String>,
    pub format: Option<String>,
    pub solver: Option<String>,
    pub stop_eps: Option<f64>,
    pub name: Option<String>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

impl RunConfig {
    /// Reads a TOML config, or the `config` section of a JSON manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str::<ManifestConfig>(&text)
                .map(|m| m.config)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        if other.input.is_some() || other.shape.is_some() {
            self.input = other.input;
            self.shape = other.shape;
        }
        take!(flow, dt, steps, normalize, recenter, boundary, freeze_collapsed,
              clamp_cotangents, snapshots, format, solver, stop_eps, name);
        self
    }

    pub fn from_args(args: &FlowArgs) -> Result<Self, CliError> {
        Ok(RunConfig {
            input: args.input.clone(),
            shape: args.shape.clone(),
            flow: args.flow.clone(),
            dt: args.dt,
            steps: args.steps,
            normalize: args.normalize.as_deref().map(on_off).transpose()?,
            recenter: args.recenter.as_deref().map(on_off).transpose()?,
            boundary: args.boundary.clone(),
            freeze_collapsed: args.freeze_collapsed.then_some(true),
            clamp_cotangents: args.clamp_cotangents.then_some(true),
            snapshots: args.snapshots.clone(),
            format: args.format.clone(),
            solver: args.solver.clone(),
            stop_eps: args.stop_eps,
            name: args.name.clone(),
        })
    }
}

fn on_off(s: &str) -> Result<bool, CliError> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(CliError::Usage(format!("expected on or off, got `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Shape(ShapeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    Pow2,
    Every(usize),
    List(Vec<usize>),
    None,
}

impl Snapshots {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("invalid --snapshots `{s}` (pow2, every:K, list:A,B,... or none)"));
        if s == "pow2" {
            Ok(Snapshots::Pow2)
        } else if s == "none" {
            Ok(Snapshots::None)
        } else if let Some(k) = s.strip_prefix("every:") {
            match k.parse() {
                Ok(k) if k > 0 => Ok(Snapshots::Every(k)),
                _ => Err(bad()),
            }
        } else if let Some(list) = s.strip_prefix("list:") {
            list.split(',')
                .map(|t| t.trim().parse().map_err(|_| bad()))
                .collect::<Result<Vec<usize>, _>>()
                .map(Snapshots::List)
        } else {
            Err(bad())
        }
    }

    pub fn schedule(&self, steps: usize) -> Vec<usize> {
        let mut s = match self {
            Snapshots::Pow2 => curvflow::flow::pow2_schedule(steps),
            Snapshots::Every(k) => (1..=steps / k).map(|i| i * k).collect(),
            Snapshots::List(l) => l.iter().copied().filter(|&i| i <= steps).collect(),
            Snapshots::None => Vec::new(),
        };
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub source: Source,
    pub flow: FlowConfig,
    pub format: MeshFormat,
    pub name: String,
    /// The configuration with every default filled in, as echoed in the
    /// manifest.
    pub echo: RunConfig,
}

pub fn resolve(cfg: RunConfig) -> Result<Resolved, CliError> {
    let source = match (&cfg.input, &cfg.shape) {
        (Some(p), None) => Source::File(p.clone()),
        (None, Some(s)) => Source::Shape(s.parse().map_err(|e: curvflow::shapes::ShapeError| {
            CliError::Usage(e.to_string())
        })?),
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --input or --shape, not both".into())),
        (None, None) => return Err(CliError::Usage("one of --input or --shape is required".into())),
    };
    let variant: FlowVariant = cfg
        .flow
        .as_deref()
        .ok_or_else(|| CliError::Usage("--flow is required".into()))?
        .parse()
        .map_err(CliError::Usage)?;
    let dt = cfg.dt.ok_or_else(|| CliError::Usage("--dt is required".into()))?;
    let steps = cfg.steps.unwrap_or(512);
    let boundary: BoundaryMode = cfg.boundary.as_deref().unwrap_or("none").parse().map_err(CliError::Usage)?;
    let snapshots_text = cfg.snapshots.clone().unwrap_or_else(|| "pow2".into());
    let snapshots = Snapshots::parse(&snapshots_text)?;
    let format_text = cfg.format.clone().unwrap_or_else(|| "obj".into());
    let format: MeshFormat = format_text.parse().map_err(|e: String| CliError::Usage(e))?;
    let solver_text = cfg.solver.clone().unwrap_or_else(|| "direct".into());
    let solver = match solver_text.as_str() {
        "direct" => SolverKind::Direct,
        "cg" => SolverKind::cg(),
        other => return Err(CliError::Usage(format!("unknown solver `{other}` (direct or cg)"))),
    };
    let name = match &cfg.name {
        Some(n) => n.clone(),
        None => match &source {
            Source::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "mesh".into()),
            Source::Shape(s) => s.kind().to_string(),
        },
    };
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(CliError::Usage(format!("invalid output name `{name}`")));
    }

    let mut flow = FlowConfig::new(variant, dt, steps);
    flow.normalize_area = cfg.normalize.unwrap_or(true);
    flow.recenter = cfg.recenter.unwrap_or(true);
    flow.boundary_mode = boundary;
    flow.freeze_collapsed = cfg.freeze_collapsed.unwrap_or(false);
    flow.clamp_cotangents = cfg.clamp_cotangents.unwrap_or(false);
    flow.snapshot_schedule = snapshots.schedule(steps);
    flow.stop_eps = cfg.stop_eps.unwrap_or(0.0);
    flow.solver = solver;
    flow.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let echo = RunConfig {
        input: cfg.input.clone(),
        shape: match &source {
            Source::Shape(s) => Some(s.to_string()),
            Source::File(_) => None,
        },
        flow: Some(variant.to_string()),
        dt: Some(dt),
        steps: Some(steps),
        normalize: Some(flow.normalize_area),
        recenter: Some(flow.recenter),
        boundary: Some(boundary.to_string()),
        freeze_collapsed: Some(flow.freeze_collapsed),
        clamp_cotangents: Some(flow.clamp_cotangents),
        snapshots: Some(snapshots_text),
        format: Some(format.to_string()),
        solver: Some(solver_text),
        stop_eps: Some(flow.stop_eps),
        name: Some(name.clone()),
    };
    Ok(Resolved {
        source,
        flow,
        format,
        name,
        echo,
    })
}
