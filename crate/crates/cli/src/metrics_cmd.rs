use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use curvflow::io::{self, fmt_f64, MeshFormat};
use curvflow::{fem, metrics, TriMesh};

use crate::error::CliError;
use crate::MetricsArgs;

const COLUMNS: &str = "mesh,qc_error,sphericity_variance,dirichlet_energy,tildeEA,tildeEC,EA,EC,area";

fn load(path: &Path) -> Result<TriMesh, CliError> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        CliError::Usage(format!("{}: unknown mesh extension (obj, off, ply)", path.display()))
    })?;
    io::load_mesh(path, format).map_err(CliError::mesh(path))
}

pub fn run(args: MetricsArgs) -> Result<ExitCode, CliError> {
    let reference = load(&args.reference)?;
    let mut rows = vec![COLUMNS.to_string()];
    for path in &args.meshes {
        let mesh = load(path)?;
        if mesh.faces() != reference.faces() {
            return Err(CliError::Schema(format!(
                "{}: connectivity differs from the reference mesh",
                path.display()
            )));
        }
        rows.push(row(&reference, &mesh, path)?);
    }
    let mut text = rows.join("\n");
    text.push('\n');
    match &args.csv {
        Some(p) => std::fs::write(p, text).map_err(CliError::io(p))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::io("<stdout>"))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn row(reference: &TriMesh, mesh: &TriMesh, path: &Path) -> Result<String, CliError> {
    let x = mesh.vertices();
    let spectrum = metrics::stretch_spectrum(reference, x).map_err(|e| CliError::Other(e.to_string()))?;
    let e = metrics::energies_of(&spectrum).map_err(|e| CliError::Other(e.to_string()))?;
    let area = mesh.surface_area();
    let weights = fem::lumped_mass(x, mesh.faces());
    let sphericity = metrics::sphericity_variance(x, &weights) / area;
    let name = path.to_string_lossy().replace(',', "_");
    Ok(format!(
        "{name},{},{},{},{},{},{},{},{}",
        fmt_f64(metrics::qc_error(&spectrum)),
        fmt_f64(sphericity),
        fmt_f64(e.total),
        fmt_f64(e.area_tilde),
        fmt_f64(e.conformal_tilde),
        fmt_f64(e.area),
        fmt_f64(e.conformal),
        fmt_f64(area)
    ))
}
