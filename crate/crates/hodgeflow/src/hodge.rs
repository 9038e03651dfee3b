//! Boundary-conditioned Laplacians, harmonic fields, the
//! Hodge–Morrey–Friedrichs decomposition, Leray projection, the Hodge–Dirac
//! operator, and pressure recovery.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::dec::{Cochain, ComplexTag, OperatorBundle};
use crate::error::{Error, Result};

/// Boundary condition selecting the complex a Laplacian acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    AbsoluteNeumann,
    RelativeDirichlet,
}

impl BoundaryCondition {
    pub fn complex(self) -> ComplexTag {
        match self {
            BoundaryCondition::AbsoluteNeumann => ComplexTag::Absolute,
            BoundaryCondition::RelativeDirichlet => ComplexTag::Relative,
        }
    }
}

/// Eigendecomposition of the PSD operator -Laplacian on one degree.
///
/// Eigenfields are mass-orthonormal, eigenvalues ascending, the leading
/// `harmonic_dim` of them below the zero threshold.
#[derive(Debug, Clone)]
pub struct LaplacianHandle {
    pub bc: BoundaryCondition,
    pub degree: u8,
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<Cochain>,
    pub harmonic_dim: usize,
    pub zero_threshold: f64,
}

/// Apply -Laplacian = d codif + codif d on the handle's complex.
pub fn neg_laplacian(bundle: &OperatorBundle, a: &Cochain) -> Cochain {
    let mut out = match a.degree {
        0 => bundle.codif(&bundle.d(a)),
        1 => {
            let mut x = bundle.codif(&bundle.d(a));
            x.axpy(1.0, &bundle.d(&bundle.codif(a)));
            x
        }
        2 => bundle.d(&bundle.codif(a)),
        _ => panic!("bad degree"),
    };
    out.complex = a.complex;
    out
}

/// Indices of the simplices carrying the complex's degrees of freedom.
fn dof_indices(bundle: &OperatorBundle, degree: u8, complex: ComplexTag) -> Vec<usize> {
    let n = bundle.mesh.simplex_count(degree);
    match (complex, degree) {
        (ComplexTag::Absolute, _) | (_, 2) => (0..n).collect(),
        (ComplexTag::Relative, 0) => (0..n)
            .filter(|&v| !bundle.mesh.is_boundary_vertex[v])
            .collect(),
        (ComplexTag::Relative, 1) => (0..n)
            .filter(|&e| !bundle.mesh.is_boundary_edge[e])
            .collect(),
        _ => unreachable!(),
    }
}

/// Build the dense mass-symmetrized operator B = S^{1/2} A S^{-1/2}
/// restricted to the complex's degrees of freedom.
fn symmetrized_matrix(
    bundle: &OperatorBundle,
    degree: u8,
    complex: ComplexTag,
    dofs: &[usize],
) -> Mat<f64> {
    let star = &bundle.star[degree as usize];
    let n = dofs.len();
    let mut b = Mat::<f64>::zeros(n, n);
    for (j, &dj) in dofs.iter().enumerate() {
        let mut e = Cochain::zeros(degree, complex, bundle.mesh.simplex_count(degree));
        e.values[dj] = 1.0 / star[dj].sqrt();
        let ae = neg_laplacian(bundle, &e);
        for (i, &di) in dofs.iter().enumerate() {
            b[(i, j)] = ae.values[di] * star[di].sqrt();
        }
    }
    // kill rounding asymmetry before the symmetric eigensolver
    for j in 0..n {
        for i in 0..j {
            let s = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = s;
            b[(j, i)] = s;
        }
    }
    b
}

/// Eigendecomposition of -Laplacian at degree `k` under the given boundary
/// condition, with the harmonic kernel identified by threshold
/// 1e-8 * lambda_max and a required spectral gap factor of 100.
pub fn laplacian(
    bundle: &OperatorBundle,
    k: u8,
    bc: BoundaryCondition,
) -> Result<LaplacianHandle> {
    if k > 2 {
        return Err(Error::InvalidParameter(format!("degree {k}")));
    }
    let complex = bc.complex();
    let dofs = dof_indices(bundle, k, complex);
    if dofs.is_empty() {
        return Ok(LaplacianHandle {
            bc,
            degree: k,
            eigenvalues: Vec::new(),
            eigenfields: Vec::new(),
            harmonic_dim: 0,
            zero_threshold: 0.0,
        });
    }
    let b = symmetrized_matrix(bundle, k, complex, &dofs);
    let evd = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("symmetric eigensolver: {e:?}")))?;
    let star = &bundle.star[k as usize];
    let n = dofs.len();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|i| {
            let lam = evd.S()[i];
            let mut full = vec![0.0; bundle.mesh.simplex_count(k)];
            for (r, &dr) in dofs.iter().enumerate() {
                // undo the similarity transform: eigenvector of A is S^{-1/2} v
                full[dr] = evd.U()[(r, i)] / star[dr].sqrt();
            }
            (lam, full)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let lambda_max = pairs.last().unwrap().0;
    if pairs.iter().any(|p| p.0 < -1e-10 * lambda_max.max(1.0)) {
        return Err(Error::Solver(format!(
            "negative Ritz value {} for PSD operator",
            pairs[0].0
        )));
    }
    let zero_threshold = 1e-8 * lambda_max;
    let harmonic_dim = pairs.iter().take_while(|p| p.0 < zero_threshold).count();
    if harmonic_dim < pairs.len() {
        let first_kept = pairs[harmonic_dim].0;
        if harmonic_dim > 0 && first_kept < 100.0 * zero_threshold {
            return Err(Error::SpectralGap(format!(
                "first nonzero eigenvalue {first_kept} too close to threshold {zero_threshold}; refine the mesh"
            )));
        }
    }
    // Harmonic eigenvalues are snapped to exact zero so that downstream
    // spectral functions (heat kernel, pseudo-inverses) fix them exactly.
    let eigenvalues: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| if i < harmonic_dim { 0.0 } else { p.0.max(0.0) })
        .collect();
    let eigenfields: Vec<Cochain> = pairs
        .into_iter()
        .map(|(_, v)| Cochain::from_values(k, complex, v))
        .collect();
    Ok(LaplacianHandle { bc, degree: k, eigenvalues, eigenfields, harmonic_dim, zero_threshold })
}

impl LaplacianHandle {
    /// Mass-orthonormal basis of the harmonic space.
    pub fn harmonic_basis(&self) -> &[Cochain] {
        &self.eigenfields[..self.harmonic_dim]
    }

    /// Smallest nonzero eigenvalue, if any.
    pub fn lambda_1(&self) -> Option<f64> {
        self.eigenvalues.get(self.harmonic_dim).copied()
    }

    /// Projection onto the harmonic space.
    pub fn harmonic_project(&self, bundle: &OperatorBundle, a: &Cochain) -> Cochain {
        let mut out = Cochain::zeros(a.degree, a.complex, a.values.len());
        for h in self.harmonic_basis() {
            let c = masked_inner(bundle, a, h);
            out.axpy(c, h);
        }
        out.complex = a.complex;
        out
    }

    /// Projection onto the orthogonal complement of the harmonic space.
    pub fn perp_project(&self, bundle: &OperatorBundle, a: &Cochain) -> Cochain {
        let mut out = a.clone();
        for h in self.harmonic_basis() {
            let c = masked_inner(bundle, a, h);
            out.axpy(-c, h);
        }
        out
    }

    /// Solve -Laplacian u = perp(source), u orthogonal to harmonics.
    /// Absolute-complex sources for a Dirichlet handle are first
    /// mass-projected onto the relative subspace.
    pub fn potential(&self, bundle: &OperatorBundle, eta: &Cochain) -> Result<Cochain> {
        if eta.degree != self.degree {
            return Err(Error::Mismatch(format!(
                "potential: degree {} vs handle degree {}",
                eta.degree, self.degree
            )));
        }
        let src = if self.bc == BoundaryCondition::RelativeDirichlet
            && eta.complex == ComplexTag::Absolute
        {
            bundle.restrict_relative(eta)
        } else {
            eta.clone()
        };
        let mut u = Cochain::zeros(self.degree, self.bc.complex(), src.values.len());
        for i in self.harmonic_dim..self.eigenfields.len() {
            let c = masked_inner(bundle, &src, &self.eigenfields[i]);
            u.axpy(c / self.eigenvalues[i], &self.eigenfields[i]);
        }
        Ok(u)
    }
}

/// Mass inner product ignoring complex tags (degrees must match); lets
/// absolute sources pair against relative eigenfields.
fn masked_inner(bundle: &OperatorBundle, a: &Cochain, b: &Cochain) -> f64 {
    assert_eq!(a.degree, b.degree);
    let s = &bundle.star[a.degree as usize];
    s.iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * (x * y))
        .sum()
}

/// The three-term Hodge-Morrey split plus the Friedrichs refinement of the
/// harmonic part.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Relative-exact part (range of the relative d).
    pub p1: Cochain,
    /// Absolute-coexact part (range of the codifferential).
    pub p2: Cochain,
    /// Harmonic-field part (d = 0 and codif = 0, no boundary condition).
    pub p3: Cochain,
    /// Neumann-harmonic component of p3.
    pub p3n: Cochain,
    /// Exact-harmonic remainder p3 - p3n.
    pub p3ex: Cochain,
    pub residual: f64,
}

/// Holds the eigendecompositions needed by the decomposition operators at
/// one degree; build once, reuse across fields.
#[derive(Debug, Clone)]
pub struct Decomposer {
    pub neumann: LaplacianHandle,
    pub dirichlet: LaplacianHandle,
}

impl Decomposer {
    pub fn new(bundle: &OperatorBundle, k: u8) -> Result<Self> {
        Ok(Self {
            neumann: laplacian(bundle, k, BoundaryCondition::AbsoluteNeumann)?,
            dirichlet: laplacian(bundle, k, BoundaryCondition::RelativeDirichlet)?,
        })
    }

    /// Hodge-Morrey decomposition of an absolute k-cochain into
    /// relative-exact, coexact, and harmonic parts, with the Friedrichs
    /// split of the harmonic part filled in.
    pub fn hodge_morrey(
        &self,
        bundle: &OperatorBundle,
        omega: &Cochain,
    ) -> Result<DecompositionResult> {
        if omega.complex != ComplexTag::Absolute || omega.degree != self.neumann.degree {
            return Err(Error::Mismatch("hodge_morrey expects an absolute cochain of the decomposer degree".into()));
        }
        let k = omega.degree;
        // relative-exact part via the Dirichlet potential
        let p1 = if k == 0 {
            bundle.zero_cochain(0, ComplexTag::Absolute)
        } else {
            let u_d = self.dirichlet.potential(bundle, omega)?;
            bundle.include_absolute(&bundle.d(&bundle.codif(&u_d)))
        };
        // coexact part via the Neumann potential
        let p2 = if k == 2 {
            bundle.zero_cochain(2, ComplexTag::Absolute)
        } else {
            let u_n = self.neumann.potential(bundle, omega)?;
            bundle.codif(&bundle.d(&u_n))
        };
        let mut p3 = omega.clone();
        p3.axpy(-1.0, &p1);
        p3.axpy(-1.0, &p2);
        let mut sum = p1.clone();
        sum.axpy(1.0, &p2);
        sum.axpy(1.0, &p3);
        sum.axpy(-1.0, omega);
        let residual = bundle.norm(&sum);
        let p3n = self.neumann.harmonic_project(bundle, &p3);
        let mut p3ex = p3.clone();
        p3ex.axpy(-1.0, &p3n);
        Ok(DecompositionResult { p1, p2, p3, p3n, p3ex, residual })
    }
}

/// Friedrichs refinement on an existing result: p3n is the projection of p3
/// onto the Neumann harmonic space, p3ex the remainder.
pub fn friedrichs_split(
    bundle: &OperatorBundle,
    result: &mut DecompositionResult,
    neumann: &LaplacianHandle,
) {
    result.p3n = neumann.harmonic_project(bundle, &result.p3);
    result.p3ex = result.p3.clone();
    result.p3ex.axpy(-1.0, &result.p3n);
}

/// Cached factorization for the Leray projection and pressure recovery:
/// one deflated Cholesky factorization of the 0-form operator.
#[derive(Debug)]
pub struct LerayProjector {
    chol: faer::linalg::solvers::Llt<f64>,
    /// S^{1/2} of the 0-form mass, for moving between cochain and
    /// symmetrized coordinates.
    sqrt_star0: Vec<f64>,
    /// Unit-norm symmetrized constant direction (the deflated kernel).
    kernel_dir: Vec<f64>,
}

impl LerayProjector {
    pub fn new(bundle: &OperatorBundle) -> Result<Self> {
        let n = bundle.mesh.num_vertices();
        let dofs: Vec<usize> = (0..n).collect();
        let mut b = symmetrized_matrix(bundle, 0, ComplexTag::Absolute, &dofs);
        let sqrt_star0: Vec<f64> = bundle.star[0].iter().map(|s| s.sqrt()).collect();
        let total: f64 = bundle.star[0].iter().sum();
        let kernel_dir: Vec<f64> = sqrt_star0.iter().map(|s| s / total.sqrt()).collect();
        // rank-one deflation of the constant kernel makes B positive definite
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] += kernel_dir[i] * kernel_dir[j];
            }
        }
        let chol = b
            .llt(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky of the deflated 0-form operator: {e:?}")))?;
        Ok(Self { chol, sqrt_star0, kernel_dir })
    }

    /// Mean-zero solution of codif d phi = codif omega.
    pub fn poisson_potential(&self, bundle: &OperatorBundle, omega: &Cochain) -> Cochain {
        assert_eq!(omega.degree, 1);
        let rhs_c = bundle.codif(omega);
        let n = rhs_c.values.len();
        let mut rhs = Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            rhs[(i, 0)] = rhs_c.values[i] * self.sqrt_star0[i];
        }
        let x = self.chol.solve(&rhs);
        // remove any kernel-direction component, then return to cochain
        // coordinates and enforce the zero mass-mean exactly
        let kdot: f64 = (0..n).map(|i| x[(i, 0)] * self.kernel_dir[i]).sum();
        let mut phi = Cochain::zeros(0, ComplexTag::Absolute, n);
        for i in 0..n {
            phi.values[i] = (x[(i, 0)] - kdot * self.kernel_dir[i]) / self.sqrt_star0[i];
        }
        let total: f64 = bundle.star[0].iter().sum();
        let mean: f64 = bundle.star[0].iter().zip(&phi.values).map(|(w, v)| w * v).sum::<f64>() / total;
        for v in &mut phi.values {
            *v -= mean;
        }
        phi
    }

    /// Leray projection: omega minus the exact part d phi.
    pub fn project(&self, bundle: &OperatorBundle, omega: &Cochain) -> Cochain {
        let phi = self.poisson_potential(bundle, omega);
        let mut out = omega.clone();
        out.axpy(-1.0, &bundle.d(&phi));
        out
    }

    /// Mean-zero pressure with d p = (Leray - 1) divvv.
    pub fn pressure(&self, bundle: &OperatorBundle, divvv: &Cochain) -> Cochain {
        self.poisson_potential(bundle, divvv).scaled(-1.0)
    }
}

/// One-shot Leray projection; prefer [`LerayProjector`] for repeated use.
pub fn leray_project(bundle: &OperatorBundle, omega: &Cochain) -> Result<Cochain> {
    Ok(LerayProjector::new(bundle)?.project(bundle, omega))
}

/// Mean-zero pressure recovered from the nonlinear-term representative:
/// d p = (Leray - 1) divvv, a single deflated Poisson solve.
pub fn pressure_recover(
    bundle: &OperatorBundle,
    _v: &Cochain,
    divvv: &Cochain,
) -> Result<Cochain> {
    Ok(LerayProjector::new(bundle)?.pressure(bundle, divvv))
}

/// A graded cochain: one absolute cochain per degree 0, 1, 2.
#[derive(Debug, Clone)]
pub struct GradedCochain {
    pub parts: [Cochain; 3],
}

impl GradedCochain {
    pub fn zeros(bundle: &OperatorBundle) -> Self {
        Self {
            parts: [
                bundle.zero_cochain(0, ComplexTag::Absolute),
                bundle.zero_cochain(1, ComplexTag::Absolute),
                bundle.zero_cochain(2, ComplexTag::Absolute),
            ],
        }
    }

    pub fn axpy(&mut self, c: f64, other: &GradedCochain) {
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            a.axpy(c, b);
        }
    }
}

/// Graded mass inner product.
pub fn graded_inner(bundle: &OperatorBundle, a: &GradedCochain, b: &GradedCochain) -> f64 {
    a.parts
        .iter()
        .zip(&b.parts)
        .map(|(x, y)| bundle.inner_product(x, y).unwrap())
        .sum()
}

pub fn graded_norm(bundle: &OperatorBundle, a: &GradedCochain) -> f64 {
    graded_inner(bundle, a, a).sqrt()
}

/// Hodge-Dirac operator d + codif on graded cochains.
pub fn dirac_apply(bundle: &OperatorBundle, omega: &GradedCochain) -> GradedCochain {
    let [c0, c1, c2] = &omega.parts;
    let mut out1 = bundle.d(c0);
    out1.axpy(1.0, &bundle.codif(c2));
    GradedCochain { parts: [bundle.codif(c1), out1, bundle.d(c1)] }
}

/// Neumann-Laplacian eigendecompositions for all three degrees; the graded
/// backbone for Dirac inversion, Sobolev norms, and the heat flow.
#[derive(Debug, Clone)]
pub struct SpectralSuite {
    pub handles: [LaplacianHandle; 3],
}

impl SpectralSuite {
    pub fn new(bundle: &OperatorBundle) -> Result<Self> {
        Ok(Self {
            handles: [
                laplacian(bundle, 0, BoundaryCondition::AbsoluteNeumann)?,
                laplacian(bundle, 1, BoundaryCondition::AbsoluteNeumann)?,
                laplacian(bundle, 2, BoundaryCondition::AbsoluteNeumann)?,
            ],
        })
    }

    /// Graded harmonic projection.
    pub fn harmonic_project(&self, bundle: &OperatorBundle, a: &GradedCochain) -> GradedCochain {
        GradedCochain {
            parts: [
                self.handles[0].harmonic_project(bundle, &a.parts[0]),
                self.handles[1].harmonic_project(bundle, &a.parts[1]),
                self.handles[2].harmonic_project(bundle, &a.parts[2]),
            ],
        }
    }

    /// Inverse of the Dirac operator on the orthogonal complement of the
    /// graded harmonic space: D^{-1} = D (-Laplacian)^+.
    pub fn dirac_inverse(
        &self,
        bundle: &OperatorBundle,
        omega: &GradedCochain,
    ) -> Result<GradedCochain> {
        let h = self.harmonic_project(bundle, omega);
        let scale = graded_norm(bundle, omega);
        if graded_norm(bundle, &h) > 1e-8 * scale.max(1e-300) {
            return Err(Error::InvalidParameter(
                "dirac_inverse requires a cochain with no harmonic part".into(),
            ));
        }
        let u = GradedCochain {
            parts: [
                self.handles[0].potential(bundle, &omega.parts[0])?,
                self.handles[1].potential(bundle, &omega.parts[1])?,
                self.handles[2].potential(bundle, &omega.parts[2])?,
            ],
        };
        Ok(dirac_apply(bundle, &u))
    }

    /// Hodge-Sobolev norm of order m: the spectral norm of D^m on the
    /// non-harmonic part plus the mass norm of the harmonic part.
    pub fn hodge_sobolev_norm(
        &self,
        bundle: &OperatorBundle,
        omega: &GradedCochain,
        m: i32,
    ) -> f64 {
        assert!((-4..=4).contains(&m), "order m out of range");
        let mut perp = 0.0f64;
        let mut harm = 0.0f64;
        for (k, h) in self.handles.iter().enumerate() {
            for (i, phi) in h.eigenfields.iter().enumerate() {
                let c = masked_inner(bundle, &omega.parts[k], phi);
                if i < h.harmonic_dim {
                    harm += c * c;
                } else {
                    perp += h.eigenvalues[i].powi(m) * c * c;
                }
            }
        }
        perp.sqrt() + harm.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::build_operators;
    use crate::mesh::{MeshKind, SimplicialManifold};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bundle(kind: MeshKind) -> OperatorBundle {
        build_operators(SimplicialManifold::generate(kind).unwrap()).unwrap()
    }

    fn random_cochain(b: &OperatorBundle, k: u8, rng: &mut impl Rng) -> Cochain {
        let mut c = b.zero_cochain(k, ComplexTag::Absolute);
        for v in &mut c.values {
            *v = rng.gen_range(-1.0..1.0);
        }
        c
    }

    /// GF(2) rank of a 0/1 incidence matrix, rows = higher simplices.
    fn gf2_rank(mut rows: Vec<Vec<bool>>) -> usize {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..ncols {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && row[col] {
                        for (a, b) in row.iter_mut().zip(&pivot) {
                            *a ^= *b;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// Simplicial cohomology ranks over GF(2) for the absolute or relative
    /// complex (valid Betti oracle: orientable surfaces have no 2-torsion).
    fn betti_oracle(m: &SimplicialManifold, relative: bool) -> [usize; 3] {
        let keep_v: Vec<usize> = (0..m.num_vertices())
            .filter(|&v| !relative || !m.is_boundary_vertex[v])
            .collect();
        let keep_e: Vec<usize> = (0..m.num_edges())
            .filter(|&e| !relative || !m.is_boundary_edge[e])
            .collect();
        let vidx: std::collections::HashMap<usize, usize> =
            keep_v.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let eidx: std::collections::HashMap<usize, usize> =
            keep_e.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        // d0: rows = kept edges, cols = kept vertices
        let d0: Vec<Vec<bool>> = keep_e
            .iter()
            .map(|&e| {
                let mut row = vec![false; keep_v.len()];
                for &v in &m.edges[e] {
                    if let Some(&i) = vidx.get(&v) {
                        row[i] = true;
                    }
                }
                row
            })
            .collect();
        // d1: rows = triangles, cols = kept edges
        let d1: Vec<Vec<bool>> = (0..m.num_triangles())
            .map(|t| {
                let mut row = vec![false; keep_e.len()];
                for &(e, _) in &m.tri_edges[t] {
                    if let Some(&i) = eidx.get(&e) {
                        row[i] = true;
                    }
                }
                row
            })
            .collect();
        let r0 = gf2_rank(d0);
        let r1 = gf2_rank(d1);
        [
            keep_v.len() - r0,
            keep_e.len() - r0 - r1,
            m.num_triangles() - r1,
        ]
    }

    #[test]
    fn betti_numbers_match_homology_oracle() {
        for kind in [
            MeshKind::Disk { rings: 3, sectors: 12 },
            MeshKind::Annulus { rings: 2, sectors: 12 },
            MeshKind::Torus { nx: 6, ny: 6 },
            MeshKind::Sphere { subdiv: 1 },
        ] {
            let b = bundle(kind);
            for bc in [BoundaryCondition::AbsoluteNeumann, BoundaryCondition::RelativeDirichlet] {
                let oracle = betti_oracle(&b.mesh, bc == BoundaryCondition::RelativeDirichlet);
                for k in 0..=2u8 {
                    let h = laplacian(&b, k, bc).unwrap();
                    assert_eq!(
                        h.harmonic_dim, oracle[k as usize],
                        "{kind:?} {bc:?} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn known_betti_tables() {
        let disk = bundle(MeshKind::Disk { rings: 3, sectors: 12 });
        let annulus = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let torus = bundle(MeshKind::Torus { nx: 6, ny: 6 });
        let abs = BoundaryCondition::AbsoluteNeumann;
        let rel = BoundaryCondition::RelativeDirichlet;
        for (b, k, bc, dim) in [
            (&disk, 1u8, abs, 0usize),
            (&annulus, 1, abs, 1),
            (&torus, 1, abs, 2),
            (&disk, 1, rel, 0),
            (&annulus, 1, rel, 1),
            (&disk, 0, abs, 1),
            (&annulus, 0, abs, 1),
        ] {
            assert_eq!(laplacian(b, k, bc).unwrap().harmonic_dim, dim);
        }
    }

    #[test]
    fn harmonic_basis_closed_and_coclosed() {
        let b = bundle(MeshKind::Annulus { rings: 3, sectors: 16 });
        let h = laplacian(&b, 1, BoundaryCondition::AbsoluteNeumann).unwrap();
        assert_eq!(h.harmonic_basis().len(), 1);
        let field = &h.harmonic_basis()[0];
        assert!(b.norm(&b.d(field)) <= 1e-8);
        assert!(b.norm(&b.codif(field)) <= 1e-8);
        // circulation around the inner boundary loop is nonzero
        let loops = b.mesh.boundary_loops();
        let inner = loops
            .iter()
            .min_by(|a, bl| {
                let ra = b.mesh.vertices[a[0]].norm();
                let rb = b.mesh.vertices[bl[0]].norm();
                ra.partial_cmp(&rb).unwrap()
            })
            .unwrap();
        let mut circ = 0.0;
        for w in 0..inner.len() {
            let (a, c) = (inner[w], inner[(w + 1) % inner.len()]);
            let key = if a < c { [a, c] } else { [c, a] };
            let e = b.mesh.edges.iter().position(|&x| x == key).unwrap();
            let sign = if a < c { 1.0 } else { -1.0 };
            circ += sign * field.values[e];
        }
        assert!(circ.abs() > 1e-3, "circulation {circ}");
    }

    #[test]
    fn torus_period_matrix_nondegenerate() {
        let b = bundle(MeshKind::Torus { nx: 8, ny: 8 });
        let h = laplacian(&b, 1, BoundaryCondition::AbsoluteNeumann).unwrap();
        assert_eq!(h.harmonic_dim, 2);
        // two generating loops: constant-y loop (x-direction) and constant-x
        // loop (y-direction), made of grid edges
        let nx = 8;
        let loop_edges = |horizontal: bool| -> Vec<(usize, f64)> {
            (0..nx)
                .map(|i| {
                    let (a, c) = if horizontal {
                        (i, (i + 1) % nx)
                    } else {
                        (i * nx, ((i + 1) % nx) * nx)
                    };
                    let key = if a < c { [a, c] } else { [c, a] };
                    let e = b.mesh.edges.iter().position(|&x| x == key).unwrap();
                    (e, if a < c { 1.0 } else { -1.0 })
                })
                .collect()
        };
        let mut periods = [[0.0f64; 2]; 2];
        for (li, l) in [loop_edges(true), loop_edges(false)].iter().enumerate() {
            for (hi, field) in h.harmonic_basis().iter().enumerate() {
                periods[li][hi] = l.iter().map(|&(e, s)| s * field.values[e]).sum();
            }
        }
        let det = periods[0][0] * periods[1][1] - periods[0][1] * periods[1][0];
        assert!(det.abs() > 1e-6, "period matrix {periods:?}");
    }

    #[test]
    fn potential_solves_projected_equation() {
        let b = bundle(MeshKind::Annulus { rings: 3, sectors: 14 });
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for bc in [BoundaryCondition::AbsoluteNeumann, BoundaryCondition::RelativeDirichlet] {
            let h = laplacian(&b, 1, bc).unwrap();
            let eta = random_cochain(&b, 1, &mut rng);
            let u = h.potential(&b, &eta).unwrap();
            let mut res = neg_laplacian(&b, &u);
            let src = if bc == BoundaryCondition::RelativeDirichlet {
                b.restrict_relative(&eta)
            } else {
                eta.clone()
            };
            res.axpy(-1.0, &h.perp_project(&b, &src));
            assert!(b.norm(&res) <= 1e-9 * b.norm(&eta), "{bc:?}: {}", b.norm(&res));
            // harmonic source gives zero potential
            if h.harmonic_dim > 0 {
                let u0 = h.potential(&b, &h.harmonic_basis()[0].clone()).unwrap();
                assert!(b.norm(&u0) <= 1e-9);
            }
        }
    }

    #[test]
    fn hodge_morrey_orthogonal_and_complete() {
        let b = bundle(MeshKind::Annulus { rings: 3, sectors: 14 });
        let dec = Decomposer::new(&b, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let omega = random_cochain(&b, 1, &mut rng);
            let r = dec.hodge_morrey(&b, &omega).unwrap();
            let n2 = b.inner_product(&omega, &omega).unwrap();
            assert!(r.residual <= 1e-10 * n2.sqrt());
            for (x, y) in [(&r.p1, &r.p2), (&r.p1, &r.p3), (&r.p2, &r.p3)] {
                assert!(b.inner_product(x, y).unwrap().abs() <= 1e-9 * n2);
            }
            // component characterizations
            assert!(b.norm(&b.d(&r.p3)) <= 1e-7 * n2.sqrt());
            let codif_interior = b.restrict_relative(&b.codif(&r.p3));
            assert!(b.norm(&codif_interior) <= 1e-7 * n2.sqrt());
            // Friedrichs pieces
            let mut s = r.p3n.clone();
            s.axpy(1.0, &r.p3ex);
            s.axpy(-1.0, &r.p3);
            assert!(s.max_abs() <= f64::EPSILON * r.p3.max_abs().max(1.0));
        }
    }

    #[test]
    fn hodge_morrey_known_inputs() {
        let b = bundle(MeshKind::Annulus { rings: 3, sectors: 14 });
        let dec = Decomposer::new(&b, 1).unwrap();
        // relative-exact input: d of a boundary-vanishing function
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut f = b.zero_cochain(0, ComplexTag::Absolute);
        for (v, x) in f.values.iter_mut().enumerate() {
            if !b.mesh.is_boundary_vertex[v] {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        let omega = b.d(&f);
        let r = dec.hodge_morrey(&b, &omega).unwrap();
        let n = b.norm(&omega);
        let mut diff = r.p1.clone();
        diff.axpy(-1.0, &omega);
        assert!(b.norm(&diff) <= 1e-9 * n, "p1 misses relative-exact input");
        assert!(b.norm(&r.p2) <= 1e-9 * n);
        assert!(b.norm(&r.p3) <= 1e-9 * n);
        // harmonic input reproduces as p3 = p3n
        let hfield = dec.neumann.harmonic_basis()[0].clone();
        let r = dec.hodge_morrey(&b, &hfield).unwrap();
        let n = b.norm(&hfield);
        assert!(b.norm(&r.p1) <= 1e-8 * n);
        assert!(b.norm(&r.p2) <= 1e-8 * n);
        let mut diff = r.p3n.clone();
        diff.axpy(-1.0, &hfield);
        assert!(b.norm(&diff) <= 1e-8 * n);
        assert!(b.norm(&r.p3ex) <= 1e-8 * n);
    }

    #[test]
    fn projection_algebra() {
        let b = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let dec = Decomposer::new(&b, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let omega = random_cochain(&b, 1, &mut rng);
            let n = b.norm(&omega);
            let r = dec.hodge_morrey(&b, &omega).unwrap();
            let parts = [&r.p1, &r.p2, &r.p3];
            for (i, &pi) in parts.iter().enumerate() {
                let ri = dec.hodge_morrey(&b, pi).unwrap();
                let again = [&ri.p1, &ri.p2, &ri.p3];
                for (j, &pj) in again.iter().enumerate() {
                    let mut diff = pj.clone();
                    if i == j {
                        diff.axpy(-1.0, pi);
                    }
                    assert!(
                        b.norm(&diff) <= 1e-8 * n,
                        "P{} of P{} residual {}",
                        j + 1,
                        i + 1,
                        b.norm(&diff)
                    );
                }
            }
            // range annihilation
            let alpha = random_cochain(&b, 0, &mut rng);
            let da = b.d(&alpha);
            let rda = dec.hodge_morrey(&b, &da).unwrap();
            assert!(b.norm(&rda.p2) <= 1e-8 * b.norm(&da));
            let beta = random_cochain(&b, 2, &mut rng);
            let cb = b.codif(&beta);
            let rcb = dec.hodge_morrey(&b, &cb).unwrap();
            assert!(b.norm(&rcb.p1) <= 1e-8 * b.norm(&cb));
        }
    }

    #[test]
    fn leray_projection_properties() {
        let b = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let proj = LerayProjector::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let omega = random_cochain(&b, 1, &mut rng);
            let n = b.norm(&omega);
            let p = proj.project(&b, &omega);
            assert!(b.norm(&b.codif(&p)) <= 1e-9 * n, "not divergence-free");
            let pp = proj.project(&b, &p);
            let mut diff = pp.clone();
            diff.axpy(-1.0, &p);
            assert!(b.norm(&diff) <= 1e-10 * n, "not idempotent");
        }
        // exact forms are annihilated; coclosed forms are fixed
        let phi = random_cochain(&b, 0, &mut rng);
        let dphi = b.d(&phi);
        assert!(b.norm(&proj.project(&b, &dphi)) <= 1e-9 * b.norm(&dphi));
        let beta = random_cochain(&b, 2, &mut rng);
        let cb = b.codif(&beta);
        let mut diff = proj.project(&b, &cb);
        diff.axpy(-1.0, &cb);
        assert!(b.norm(&diff) <= 1e-9 * b.norm(&cb));
    }

    #[test]
    fn leray_matches_decomposition() {
        let b = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let dec = Decomposer::new(&b, 1).unwrap();
        let proj = LerayProjector::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let omega = random_cochain(&b, 1, &mut rng);
        let r = dec.hodge_morrey(&b, &omega).unwrap();
        let mut expect = r.p3n.clone();
        expect.axpy(1.0, &r.p2);
        let mut diff = proj.project(&b, &omega);
        diff.axpy(-1.0, &expect);
        assert!(b.norm(&diff) <= 1e-8 * b.norm(&omega), "{}", b.norm(&diff));
    }

    #[test]
    fn dirac_square_is_neg_laplacian() {
        let b = bundle(MeshKind::Disk { rings: 3, sectors: 12 });
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let omega = GradedCochain {
                parts: [
                    random_cochain(&b, 0, &mut rng),
                    random_cochain(&b, 1, &mut rng),
                    random_cochain(&b, 2, &mut rng),
                ],
            };
            let d2 = dirac_apply(&b, &dirac_apply(&b, &omega));
            let lap = GradedCochain {
                parts: [
                    neg_laplacian(&b, &omega.parts[0]),
                    neg_laplacian(&b, &omega.parts[1]),
                    neg_laplacian(&b, &omega.parts[2]),
                ],
            };
            let mut diff = d2.clone();
            diff.axpy(-1.0, &lap);
            let scale = graded_norm(&b, &lap).max(1.0);
            assert!(graded_norm(&b, &diff) <= 1e-12 * scale);
        }
    }

    #[test]
    fn dirac_symmetric_and_inverse() {
        let b = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let suite = SpectralSuite::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..5 {
            let x = GradedCochain {
                parts: [
                    random_cochain(&b, 0, &mut rng),
                    random_cochain(&b, 1, &mut rng),
                    random_cochain(&b, 2, &mut rng),
                ],
            };
            let y = GradedCochain {
                parts: [
                    random_cochain(&b, 0, &mut rng),
                    random_cochain(&b, 1, &mut rng),
                    random_cochain(&b, 2, &mut rng),
                ],
            };
            let lhs = graded_inner(&b, &dirac_apply(&b, &x), &y);
            let rhs = graded_inner(&b, &x, &dirac_apply(&b, &y));
            let scale = graded_norm(&b, &x) * graded_norm(&b, &y);
            assert!((lhs - rhs).abs() <= 1e-12 * scale);

            // inverse on the non-harmonic part
            let mut xp = x.clone();
            xp.axpy(-1.0, &suite.harmonic_project(&b, &x));
            let inv = suite.dirac_inverse(&b, &dirac_apply(&b, &xp)).unwrap();
            let mut diff = inv;
            diff.axpy(-1.0, &xp);
            assert!(
                graded_norm(&b, &diff) <= 1e-9 * graded_norm(&b, &xp),
                "{}",
                graded_norm(&b, &diff)
            );
        }
        // harmonic input rejected
        let h = suite.handles[1].harmonic_basis()[0].clone();
        let mut omega = GradedCochain::zeros(&b);
        omega.parts[1] = h;
        assert!(suite.dirac_inverse(&b, &omega).is_err());
    }

    #[test]
    fn dirac_norm_equivalence() {
        let b = bundle(MeshKind::Annulus { rings: 2, sectors: 12 });
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let mut omega = GradedCochain::zeros(&b);
            omega.parts[1] = random_cochain(&b, 1, &mut rng);
            let dn = graded_norm(&b, &dirac_apply(&b, &omega));
            let split = b.norm(&b.d(&omega.parts[1])) + b.norm(&b.codif(&omega.parts[1]));
            if dn > 1e-12 {
                let ratio = split / dn;
                assert!((1.0 / 2.0f64.sqrt()..=2.0f64.sqrt() + 1e-12).contains(&ratio), "{ratio}");
            }
        }
    }

    #[test]
    fn hodge_sobolev_norm_spectral_identities() {
        let b = bundle(MeshKind::Disk { rings: 3, sectors: 12 });
        let suite = SpectralSuite::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let omega = GradedCochain {
            parts: [
                random_cochain(&b, 0, &mut rng),
                random_cochain(&b, 1, &mut rng),
                random_cochain(&b, 2, &mut rng),
            ],
        };
        // m = 0 splits into perp + harmonic mass norms
        let m0 = suite.hodge_sobolev_norm(&b, &omega, 0);
        let h = suite.harmonic_project(&b, &omega);
        let mut perp = omega.clone();
        perp.axpy(-1.0, &h);
        let expect = graded_norm(&b, &perp) + graded_norm(&b, &h);
        assert!((m0 - expect).abs() <= 1e-10 * expect);
        // eigenfield of eigenvalue lambda: m = 2 norm is lambda * mass norm
        let h1 = &suite.handles[1];
        let i = h1.harmonic_dim + 3;
        let mut ef = GradedCochain::zeros(&b);
        ef.parts[1] = h1.eigenfields[i].clone();
        let lam = h1.eigenvalues[i];
        let m2 = suite.hodge_sobolev_norm(&b, &ef, 2);
        assert!((m2 - lam).abs() <= 1e-8 * lam);
        // duality pairing bound
        let phi = GradedCochain {
            parts: [
                random_cochain(&b, 0, &mut rng),
                random_cochain(&b, 1, &mut rng),
                random_cochain(&b, 2, &mut rng),
            ],
        };
        for m in [1, 2] {
            let pair = graded_inner(&b, &perp, &phi).abs();
            let hp = suite.harmonic_project(&b, &phi);
            let mut php = phi.clone();
            php.axpy(-1.0, &hp);
            let bound = suite.hodge_sobolev_norm(&b, &perp, m)
                * suite.hodge_sobolev_norm(&b, &php, -m)
                + graded_norm(&b, &h) * graded_norm(&b, &hp)
                + graded_norm(&b, &perp) * graded_norm(&b, &hp);
            assert!(pair <= bound * (1.0 + 1e-9) + 1e-9, "m={m}: {pair} vs {bound}");
        }
    }

    #[test]
    fn spectral_gap_error_is_reported_not_panicked() {
        // a single triangle has trivial topology; just confirm the handle
        // builds and any gap failure comes back as an error value
        let verts = vec![
            nalgebra::Vector3::new(0.0, 0.0, 0.0),
            nalgebra::Vector3::new(1.0, 0.0, 0.0),
            nalgebra::Vector3::new(0.4, 0.8, 0.0),
        ];
        let m = SimplicialManifold::new(verts, vec![[0, 1, 2]], None).unwrap();
        let b = build_operators(m).unwrap();
        match laplacian(&b, 1, BoundaryCondition::AbsoluteNeumann) {
            Ok(h) => assert_eq!(h.harmonic_dim, 0),
            Err(Error::SpectralGap(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }
}
