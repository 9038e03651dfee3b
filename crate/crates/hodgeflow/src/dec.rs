//! Cochains, exterior derivative, diagonal Hodge stars, codifferentials for
//! the absolute and relative complexes, and Whitney reconstruction.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::SimplicialManifold;

/// Which cochain complex a value lives in.
///
/// `Absolute` is the full primal complex (Neumann side); `Relative` is the
/// subcomplex of cochains vanishing on boundary simplices (Dirichlet side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexTag {
    Absolute,
    Relative,
}

/// A real-valued k-cochain. Values are indexed by all k-simplices; relative
/// cochains carry zeros on boundary simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: u8,
    pub complex: ComplexTag,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(degree: u8, complex: ComplexTag, len: usize) -> Self {
        Self { degree, complex, values: vec![0.0; len] }
    }

    pub fn from_values(degree: u8, complex: ComplexTag, values: Vec<f64>) -> Self {
        Self { degree, complex, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn compatible(&self, other: &Cochain) -> Result<()> {
        if self.degree != other.degree
            || self.complex != other.complex
            || self.values.len() != other.values.len()
        {
            return Err(Error::Mismatch(format!(
                "degree {}/{} complex {:?}/{:?} len {}/{}",
                self.degree,
                other.degree,
                self.complex,
                other.complex,
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(())
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &Cochain) {
        self.compatible(other).expect("cochain mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scaled(&self, c: f64) -> Cochain {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Euclidean (unweighted) max entry, for quick zero checks.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Add for &Cochain {
    type Output = Cochain;
    fn add(self, rhs: &Cochain) -> Cochain {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}
impl std::ops::Sub for &Cochain {
    type Output = Cochain;
    fn sub(self, rhs: &Cochain) -> Cochain {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// The assembled discrete exterior calculus operators for one mesh.
///
/// Owns the mesh; immutable after construction, all methods are pure.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub mesh: SimplicialManifold,
    /// Diagonal mass weights per degree: dual area, dual/primal length
    /// ratio, inverse triangle area.
    pub star: [Vec<f64>; 3],
    /// Canonical edge displacement vectors (lo vertex to hi vertex).
    pub edge_vectors: Vec<Vector3<f64>>,
}

/// Assemble the operator bundle for a validated mesh.
pub fn build_operators(mesh: SimplicialManifold) -> Result<OperatorBundle> {
    let star0 = mesh.dual_vertex_areas.clone();
    let star1: Vec<f64> = mesh
        .dual_edge_lengths
        .iter()
        .zip(&mesh.edge_lengths)
        .map(|(d, p)| d / p)
        .collect();
    let star2: Vec<f64> = mesh.tri_areas.iter().map(|a| 1.0 / a).collect();
    for (k, s) in [&star0, &star1, &star2].into_iter().enumerate() {
        for (i, &w) in s.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "non-positive mass weight at degree {k}, simplex {i}"
                )));
            }
        }
    }
    let edge_vectors = mesh
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| {
            let _ = e;
            let mut d = mesh.vertices[b] - mesh.vertices[a];
            if let Some([lx, ly]) = mesh.periodic {
                d.x -= lx * (d.x / lx).round();
                d.y -= ly * (d.y / ly).round();
            }
            d
        })
        .collect();
    Ok(OperatorBundle { mesh, star: [star0, star1, star2], edge_vectors })
}

impl OperatorBundle {
    pub fn zero_cochain(&self, degree: u8, complex: ComplexTag) -> Cochain {
        Cochain::zeros(degree, complex, self.mesh.simplex_count(degree))
    }

    /// True if simplex `i` of degree `k` lies on the boundary.
    fn on_boundary(&self, k: u8, i: usize) -> bool {
        match k {
            0 => self.mesh.is_boundary_vertex[i],
            1 => self.mesh.is_boundary_edge[i],
            _ => false,
        }
    }

    /// Zero out boundary entries (projection onto the relative subcomplex).
    pub fn restrict_relative(&self, a: &Cochain) -> Cochain {
        let mut out = a.clone();
        out.complex = ComplexTag::Relative;
        for i in 0..out.values.len() {
            if self.on_boundary(a.degree, i) {
                out.values[i] = 0.0;
            }
        }
        out
    }

    /// Forget the relative tag (inclusion into the absolute complex).
    pub fn include_absolute(&self, a: &Cochain) -> Cochain {
        let mut out = a.clone();
        out.complex = ComplexTag::Absolute;
        out
    }

    /// Exterior derivative. The relative complex is closed under d, so the
    /// same incidence sums apply with the tag carried through.
    pub fn d(&self, a: &Cochain) -> Cochain {
        match a.degree {
            0 => {
                let mut out = Cochain::zeros(1, a.complex, self.mesh.num_edges());
                for (e, &[i, j]) in self.mesh.edges.iter().enumerate() {
                    out.values[e] = a.values[j] - a.values[i];
                }
                if a.complex == ComplexTag::Relative {
                    return self.restrict_relative(&out);
                }
                out
            }
            1 => {
                let mut out = Cochain::zeros(2, a.complex, self.mesh.num_triangles());
                for (t, te) in self.mesh.tri_edges.iter().enumerate() {
                    out.values[t] = te.iter().map(|&(e, s)| s * a.values[e]).sum();
                }
                out
            }
            _ => panic!("d undefined on degree {}", a.degree),
        }
    }

    /// Codifferential: mass adjoint of d on the absolute complex; its
    /// restriction to interior simplices on the relative complex.
    pub fn codif(&self, a: &Cochain) -> Cochain {
        let out = match a.degree {
            1 => {
                let mut out = Cochain::zeros(0, a.complex, self.mesh.num_vertices());
                for (e, &[i, j]) in self.mesh.edges.iter().enumerate() {
                    let w = self.star[1][e] * a.values[e];
                    out.values[i] -= w;
                    out.values[j] += w;
                }
                for (v, o) in out.values.iter_mut().enumerate() {
                    *o /= self.star[0][v];
                }
                out
            }
            2 => {
                let mut out = Cochain::zeros(1, a.complex, self.mesh.num_edges());
                for (t, te) in self.mesh.tri_edges.iter().enumerate() {
                    for &(e, s) in te {
                        out.values[e] += s * self.star[2][t] * a.values[t];
                    }
                }
                for (e, o) in out.values.iter_mut().enumerate() {
                    *o /= self.star[1][e];
                }
                out
            }
            _ => panic!("codifferential undefined on degree {}", a.degree),
        };
        if a.complex == ComplexTag::Relative {
            self.restrict_relative(&out)
        } else {
            out
        }
    }

    /// Mass inner product.
    pub fn inner_product(&self, a: &Cochain, b: &Cochain) -> Result<f64> {
        a.compatible(b)?;
        let s = &self.star[a.degree as usize];
        Ok(s.iter()
            .zip(a.values.iter().zip(&b.values))
            .map(|(w, (x, y))| w * (x * y))
            .sum())
    }

    /// Mass norm.
    pub fn norm(&self, a: &Cochain) -> f64 {
        self.inner_product(a, a).expect("same cochain").sqrt()
    }

    /// Whitney (lowest-order edge element) reconstruction of a 1-cochain,
    /// evaluated at triangle barycenters.
    pub fn whitney_sharp(&self, omega: &Cochain) -> Vec<Vector3<f64>> {
        assert_eq!(omega.degree, 1, "whitney_sharp expects a 1-cochain");
        let mut out = Vec::with_capacity(self.mesh.num_triangles());
        for t in 0..self.mesh.num_triangles() {
            let g = &self.mesh.tri_bary_grads[t];
            let mut u = Vector3::zeros();
            for (k, &(e, s)) in self.mesh.tri_edges[t].iter().enumerate() {
                // local edge k runs corner k -> corner k+1; at the barycenter
                // every barycentric coordinate is 1/3
                u += (g[(k + 1) % 3] - g[k]) * (s * omega.values[e] / 3.0);
            }
            out.push(u);
        }
        out
    }

    /// Discretize a per-triangle vector field into a 1-cochain: midpoint-rule
    /// line integral along each edge, averaging the adjacent triangle values.
    pub fn whitney_flat(&self, field: &[Vector3<f64>]) -> Cochain {
        assert_eq!(field.len(), self.mesh.num_triangles());
        let mut out = self.zero_cochain(1, ComplexTag::Absolute);
        for (e, tris) in self.mesh.edge_tris.iter().enumerate() {
            let mut u = Vector3::zeros();
            for &t in tris {
                u += field[t];
            }
            u /= tris.len() as f64;
            out.values[e] = u.dot(&self.edge_vectors[e]);
        }
        out
    }

    /// Outward normal component of a per-triangle field on each boundary
    /// edge (indexed like `mesh.boundary_edges`).
    pub fn normal_flux(&self, field: &[Vector3<f64>]) -> Vec<f64> {
        self.mesh
            .boundary_edges
            .iter()
            .map(|&e| self.mesh.edge_normals[e].dot(&field[self.mesh.edge_tris[e][0]]))
            .collect()
    }

    /// Gradient recovery for a per-triangle field: area-weighted vertex
    /// averaging followed by a per-triangle P1 gradient of each component.
    /// First-order consistent on smooth fields.
    pub fn recovered_gradients(&self, field: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
        assert_eq!(field.len(), self.mesh.num_triangles());
        let n = self.mesh.num_vertices();
        let mut vert = vec![Vector3::zeros(); n];
        let mut wsum = vec![0.0f64; n];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let w = self.mesh.tri_areas[t];
            for &v in tri {
                vert[v] += field[t] * w;
                wsum[v] += w;
            }
        }
        for v in 0..n {
            if wsum[v] > 0.0 {
                vert[v] /= wsum[v];
            }
        }
        (0..self.mesh.num_triangles())
            .map(|t| {
                let tri = self.mesh.triangles[t];
                let g = &self.mesh.tri_bary_grads[t];
                let mut m = Matrix3::zeros();
                for k in 0..3 {
                    m += vert[tri[k]] * g[k].transpose();
                }
                m
            })
            .collect()
    }
}
