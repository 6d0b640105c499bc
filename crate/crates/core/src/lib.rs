//! Mean-curvature flow, heat flow and conformalized mean-curvature flow on
//! triangle meshes.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`] holds the indexed triangle mesh, its validation and topology.
//! * [`io`] reads and writes OBJ, OFF and PLY files.
//! * [`shapes`] generates the synthetic test surfaces.
//! * [`fem`] assembles the hat-basis mass and cotangent stiffness matrices.
//! * [`solver`] factors and solves the sparse symmetric systems.
//! * [`flow`] runs the semi-implicit flows.
//! * [`metrics`] measures conformality, sphericity, convergence and energies.
//! * [`oracle`] compares discrete flows against closed-form radius evolutions.

pub mod fem;
pub mod flow;
pub mod geom;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod oracle;
pub mod shapes;
pub mod solver;

pub use fem::{SparseSymMatrix, SparsityPattern};
pub use flow::{FlowConfig, FlowResult, FlowState, FlowStatus, FlowVariant};
pub use geom::Vec3;
pub use mesh::{MeshError, MeshTopology, TriMesh};
pub use metrics::{MetricRecord, StretchSpectrum};
pub use shapes::ShapeSpec;
