//! Hat-basis finite-element matrices over a triangle mesh.
//!
//! The mass matrix is the consistent (Galerkin) one: off-diagonal entries are
//! `(|T¹ij| + |T²ij|) / 12` and diagonal entries are the row sums of the
//! off-diagonals. The stiffness matrix holds the cotangent weights
//! `(cot β¹ij + cot β²ij) / 2` off the diagonal and the negated row sum on it,
//! so every row sums to zero and `-xᵀLx` is the Dirichlet form.
//!
//! Assembly walks the faces in index order and scatters each 3×3 element
//! block into precomputed value slots, so every entry is accumulated in the
//! same order on every run.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::mesh::{TriMesh, DEGENERATE_AREA_RATIO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("triangle {face} is degenerate (area {area:e})")]
    DegenerateTriangle { face: usize, area: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Symmetric CSR sparsity pattern storing both halves and the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    diag: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern from sorted per-row column lists. Each row must contain its
    /// diagonal and the lists must be structurally symmetric.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.push(i);
            row.sort_unstable();
            row.dedup();
            diag.push(cols.len() + row.binary_search(&i).expect("diagonal present"));
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        SparsityPattern {
            n,
            row_ptr,
            cols,
            diag,
        }
    }

    /// Vertex adjacency plus diagonal.
    pub fn from_faces(n: usize, faces: &[[usize; 3]]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for f in faces {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        rows[f[a]].push(f[b]);
                    }
                }
            }
        }
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn diag_index(&self, i: usize) -> usize {
        self.diag[i]
    }

    /// Storage index of entry `(i, j)`, if it is in the pattern.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }
}

/// Symmetric sparse matrix over mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseSymMatrix { pattern, values }
    }

    pub fn identity(pattern: Arc<SparsityPattern>) -> Self {
        let mut m = Self::zeros(pattern);
        for i in 0..m.dim() {
            let d = m.pattern.diag_index(i);
            m.values[d] = 1.0;
        }
        m
    }

    /// Builds a matrix from a dense square array, keeping the nonzeros of
    /// both halves (symmetrized pattern) and the full diagonal.
    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let n = dense.len();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| dense[i][j] != 0.0 || dense[j][i] != 0.0)
                    .collect()
            })
            .collect();
        let pattern = Arc::new(SparsityPattern::from_rows(rows));
        let mut m = Self::zeros(pattern);
        for i in 0..n {
            for k in m.pattern.row_range(i) {
                let j = m.pattern.cols[k];
                m.values[k] = dense[i][j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.pattern.row_range(i) {
                row[self.pattern.cols[k]] = self.values[k];
            }
        }
        d
    }

    /// `a·self + b·other`; both must share one pattern.
    pub fn combine(&self, a: f64, other: &SparseSymMatrix, b: f64) -> SparseSymMatrix {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "matrices must share a sparsity pattern"
        );
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        SparseSymMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.pattern
                    .row_range(i)
                    .map(|k| self.values[k] * x[self.pattern.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// Columnwise product with an `n × K` block stored by rows.
    pub fn mul_rows<const K: usize>(&self, x: &[[f64; K]]) -> Vec<[f64; K]> {
        (0..self.dim())
            .map(|i| {
                let mut acc = [0.0; K];
                for k in self.pattern.row_range(i) {
                    let (a, xj) = (self.values[k], &x[self.pattern.cols[k]]);
                    for c in 0..K {
                        acc[c] += a * xj[c];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.pattern.row_range(i).map(|k| self.values[k]).sum())
            .collect()
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.values[self.pattern.diag_index(i)].abs())
            .fold(0.0, f64::max)
    }

    /// Writes `i j value` triplets, one per stored entry.
    pub fn write_coo(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# {} {} {}", self.dim(), self.dim(), self.pattern.nnz())?;
        for i in 0..self.dim() {
            for k in self.pattern.row_range(i) {
                writeln!(out, "{} {} {:.16e}", i, self.pattern.cols[k], self.values[k])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StiffnessOptions {
    /// Clamps every cotangent at zero. Off by default: negative weights are
    /// part of what makes traditional MCF break down.
    pub clamp_cotangents: bool,
    /// Drops degenerate triangles instead of failing.
    pub skip_degenerate: bool,
}

/// Scatters element matrices into a fixed pattern.
#[derive(Debug, Clone)]
pub struct Assembler {
    pattern: Arc<SparsityPattern>,
    faces: Vec<[usize; 3]>,
    slots: Vec<[usize; 9]>,
}

impl Assembler {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.vertex_count();
        let pattern = Arc::new(SparsityPattern::from_faces(n, mesh.faces()));
        let slots = mesh
            .faces()
            .iter()
            .map(|f| {
                let mut s = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = pattern.find(f[a], f[b]).expect("face entry in pattern");
                    }
                }
                s
            })
            .collect();
        Assembler {
            pattern,
            faces: mesh.faces().to_vec(),
            slots,
        }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    fn check(&self, positions: &[Vec3]) -> Result<(), FemError> {
        if positions.len() != self.pattern.dim() {
            return Err(FemError::DimensionMismatch {
                expected: self.pattern.dim(),
                actual: positions.len(),
            });
        }
        Ok(())
    }

    pub fn mass(&self, positions: &[Vec3]) -> Result<SparseSymMatrix, FemError> {
        self.check(positions)?;
        let mut m = SparseSymMatrix::zeros(Arc::clone(&self.pattern));
        for (f, s) in self.faces.iter().zip(&self.slots) {
            let area = geom::triangle_area(positions[f[0]], positions[f[1]], positions[f[2]]);
            let (diag, off) = (area / 6.0, area / 12.0);
            for a in 0..3 {
                for b in 0..3 {
                    m.values[s[3 * a + b]] += if a == b { diag } else { off };
                }
            }
        }
        Ok(m)
    }

    pub fn stiffness(
        &self,
        positions: &[Vec3],
        options: StiffnessOptions,
    ) -> Result<SparseSymMatrix, FemError> {
        self.check(positions)?;
        let threshold = DEGENERATE_AREA_RATIO * mean_area(positions, &self.faces);
        let mut m = SparseSymMatrix::zeros(Arc::clone(&self.pattern));
        for (fi, (f, s)) in self.faces.iter().zip(&self.slots).enumerate() {
            let p = [positions[f[0]], positions[f[1]], positions[f[2]]];
            let area = geom::triangle_area(p[0], p[1], p[2]);
            if !(area >= threshold) || area == 0.0 {
                if options.skip_degenerate {
                    continue;
                }
                return Err(FemError::DegenerateTriangle { face: fi, area });
            }
            for k in 0..3 {
                // Corner k is opposite the edge (i, j).
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let mut c = geom::cot(geom::sub(p[i], p[k]), geom::sub(p[j], p[k]));
                if options.clamp_cotangents {
                    c = c.max(0.0);
                }
                let w = 0.5 * c;
                m.values[s[3 * i + j]] += w;
                m.values[s[3 * j + i]] += w;
                m.values[s[3 * i + i]] -= w;
                m.values[s[3 * j + j]] -= w;
            }
        }
        Ok(m)
    }
}

pub fn mean_area(positions: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    crate::mesh::surface_area_of(positions, faces) / faces.len() as f64
}

/// Smallest triangle area divided by the mean triangle area.
pub fn min_area_ratio(positions: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    let areas: Vec<f64> = faces
        .iter()
        .map(|&f| crate::mesh::face_area(positions, f))
        .collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    areas.iter().cloned().fold(f64::INFINITY, f64::min) / mean
}

/// First triangle whose area falls below the degeneracy threshold.
pub fn first_degenerate(positions: &[Vec3], faces: &[[usize; 3]]) -> Option<(usize, f64)> {
    let threshold = DEGENERATE_AREA_RATIO * mean_area(positions, faces);
    faces.iter().enumerate().find_map(|(fi, &f)| {
        let a = crate::mesh::face_area(positions, f);
        (!(a >= threshold) || a == 0.0).then_some((fi, a))
    })
}

/// Row sums of the consistent mass matrix: a third of each incident area.
pub fn lumped_mass(positions: &[Vec3], faces: &[[usize; 3]]) -> Vec<f64> {
    let mut m = vec![0.0; positions.len()];
    for &f in faces {
        let a = crate::mesh::face_area(positions, f) / 3.0;
        for v in f {
            m[v] += a;
        }
    }
    m
}

pub fn assemble_mass(mesh: &TriMesh) -> SparseSymMatrix {
    Assembler::new(mesh)
        .mass(mesh.vertices())
        .expect("positions match the mesh")
}

pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseSymMatrix, FemError> {
    Assembler::new(mesh).stiffness(mesh.vertices(), StiffnessOptions::default())
}

/// `½ Σ_c xᵀ(−L)x` over the three coordinate columns.
pub fn dirichlet_energy(stiffness: &SparseSymMatrix, positions: &[Vec3]) -> Result<f64, FemError> {
    let g = dirichlet_gradient(stiffness, positions)?;
    Ok(0.5 * positions.iter().zip(&g).map(|(x, y)| geom::dot(*x, *y)).sum::<f64>())
}

/// `(−L)x` columnwise: the gradient of [`dirichlet_energy`].
pub fn dirichlet_gradient(
    stiffness: &SparseSymMatrix,
    positions: &[Vec3],
) -> Result<Vec<Vec3>, FemError> {
    if positions.len() != stiffness.dim() {
        return Err(FemError::DimensionMismatch {
            expected: stiffness.dim(),
            actual: positions.len(),
        });
    }
    Ok(stiffness
        .mul_rows(positions)
        .into_iter()
        .map(|v| geom::scale(v, -1.0))
        .collect())
}
