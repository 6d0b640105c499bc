use std::fs::File;
use std::io::BufWriter;
use std::process::ExitCode;

use curvflow::flow::{self, FlowStatus};
use curvflow::io::{self, MeshFormat};
use curvflow::metrics;
use curvflow::shapes;

use crate::config::{resolve, RunConfig, Source};
use crate::error::CliError;
use crate::manifest::{self, RunManifest, Singularity};
use crate::FlowArgs;

pub fn run(args: FlowArgs) -> Result<ExitCode, CliError> {
    let flags = RunConfig::from_args(&args)?;
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?.overlay(flags),
        None => flags,
    };
    let run = resolve(cfg)?;
    let started = manifest::now();

    let (mesh, input_sha256) = match &run.source {
        Source::File(path) => {
            let format = MeshFormat::from_path(path).ok_or_else(|| {
                CliError::Usage(format!("{}: unknown mesh extension (obj, off, ply)", path.display()))
            })?;
            let mesh = io::load_mesh(path, format).map_err(CliError::mesh(path))?;
            (mesh, Some(manifest::hash_file(path)?.0))
        }
        Source::Shape(spec) => (shapes::generate(spec)?, None),
    };

    let out = &args.out;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let csv_path = args
        .metrics_csv
        .clone()
        .unwrap_or_else(|| out.join(format!("{}_metrics.csv", run.name)));

    let result = flow::run(&mesh, &run.flow, |_, _| {})?;
    let state = &result.state;

    let mut outputs = Vec::new();
    for (step, positions) in &result.snapshots {
        let path = out.join(format!("{}_step{step:05}.{}", run.name, run.format.extension()));
        let snapshot = mesh
            .with_positions(positions.clone())
            .map_err(|e| CliError::Other(e.to_string()))?;
        io::save_mesh(&snapshot, &path, run.format).map_err(CliError::mesh(&path))?;
        outputs.push(manifest::output_entry(&path, out)?);
    }

    {
        let file = File::create(&csv_path).map_err(CliError::io(&csv_path))?;
        let mut w = BufWriter::new(file);
        metrics::write_csv(&mut w, &result.records).map_err(CliError::io(&csv_path))?;
        std::io::Write::flush(&mut w).map_err(CliError::io(&csv_path))?;
    }
    outputs.push(manifest::output_entry(&csv_path, out)?);

    let singular = match state.status() {
        FlowStatus::Singular { step, cause } => Some(Singularity {
            step: *step,
            cause: cause.to_string(),
        }),
        _ => None,
    };
    let manifest = RunManifest {
        tool: "curvflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: run.echo.clone(),
        input_sha256,
        vertices: mesh.vertex_count(),
        faces: mesh.face_count(),
        started,
        finished: manifest::now(),
        status: state.status().record_status().to_string(),
        steps_completed: state.step_index(),
        flow_time: state.flow_time(),
        singular,
        warnings: state.warnings().to_vec(),
        outputs,
    };
    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path)?;

    for w in state.warnings() {
        eprintln!("warning: {w}");
    }
    println!(
        "{} on {} ({} vertices): {} after {} steps; {} snapshots; metrics {}",
        run.flow.variant,
        run.name,
        mesh.vertex_count(),
        state.status(),
        state.step_index(),
        result.snapshots.len(),
        csv_path.display()
    );
    Ok(if state.status().is_singular() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
