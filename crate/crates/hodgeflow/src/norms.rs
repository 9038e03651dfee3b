//! Lebesgue, first-order Sobolev, and ball-mean-difference Besov estimators,
//! plus coarea strip diagnostics and tangential/normal strip truncations.
//!
//! Mesh-based norms operate on cochains through the Whitney reconstruction;
//! the Besov machinery operates on scalar samples over rectangular planar
//! grids ([`GridFunction`]), where finite differences are unambiguous.

use nalgebra::Vector3;

use crate::dec::{Cochain, ComplexTag, OperatorBundle};
use crate::error::{Error, Result};
use crate::mesh::{cutoff_profile, SimplicialManifold, StripCutoff};

/// Which quadrature produced a norm value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    Mass,
    Quadrature,
    Bmd,
    Spectral,
}

/// A computed norm together with the parameters that defined it.
#[derive(Debug, Clone)]
pub struct NormReport {
    pub value: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub m: Option<u32>,
    pub method: NormMethod,
}

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {p}, need >= 1")))
    }
}

/// `(sum w |x|^p)^(1/p)` over (measure, value) pairs; `p = inf` is the max.
fn weighted_lp(pairs: impl Iterator<Item = (f64, f64)>, p: f64) -> f64 {
    if p.is_infinite() {
        pairs.fold(0.0, |m, (_, x)| m.max(x.abs()))
    } else {
        pairs
            .fold(0.0, |acc, (w, x)| acc + w * x.abs().powf(p))
            .powf(1.0 / p)
    }
}

/// L^p norm of a cochain via per-cell quadrature: Whitney magnitudes on
/// triangles for 1-forms, dual-cell sums for 0- and 2-forms.
pub fn lp_norm(bundle: &OperatorBundle, omega: &Cochain, p: f64) -> Result<NormReport> {
    check_exponent(p, "p")?;
    let mesh = &bundle.mesh;
    let value = match omega.degree {
        0 => weighted_lp(
            mesh.dual_vertex_areas
                .iter()
                .zip(&omega.values)
                .map(|(&w, &x)| (w, x)),
            p,
        ),
        1 => {
            let field = bundle.whitney_sharp(omega);
            weighted_lp(
                mesh.tri_areas
                    .iter()
                    .zip(&field)
                    .map(|(&a, u)| (a, u.norm())),
                p,
            )
        }
        2 => weighted_lp(
            mesh.tri_areas
                .iter()
                .zip(&omega.values)
                .map(|(&a, &x)| (a, x / a)),
            p,
        ),
        k => return Err(Error::Unsupported(format!("degree {k} cochain"))),
    };
    Ok(NormReport { value, p, q: None, s: None, m: None, method: NormMethod::Quadrature })
}

/// First-order Sobolev surrogate for absolute 1-cochains:
/// `||w||_p + ||dw||_p + ||codif w||_p`.
pub fn w1p_norm(bundle: &OperatorBundle, omega: &Cochain, p: f64) -> Result<NormReport> {
    if omega.degree != 1 || omega.complex != ComplexTag::Absolute {
        return Err(Error::Mismatch("w1p_norm expects an absolute 1-cochain".into()));
    }
    check_exponent(p, "p")?;
    let a = lp_norm(bundle, omega, p)?.value;
    let b = lp_norm(bundle, &bundle.d(omega), p)?.value;
    let c = lp_norm(bundle, &bundle.codif(omega), p)?.value;
    Ok(NormReport {
        value: a + b + c,
        p,
        q: None,
        s: None,
        m: Some(1),
        method: NormMethod::Quadrature,
    })
}

/// Scalar samples on a uniform rectangular grid over a planar domain.
///
/// The domain is the set of nodes with `mask = true`; everything outside is
/// treated as off-domain when clipping difference stencils.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: (f64, f64),
    /// Row-major, `ny` rows of `nx` values.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridFunction {
    /// Sample `f(x, y)` on the full `nx x ny` node grid.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        spacing: f64,
        origin: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(origin.0 + i as f64 * spacing, origin.1 + j as f64 * spacing));
            }
        }
        GridFunction { nx, ny, spacing, origin, values, mask: vec![true; nx * ny] }
    }

    /// Sample on the closed unit square with `n` nodes per side.
    pub fn unit_square(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(n >= 2);
        Self::from_fn(n, n, 1.0 / (n - 1) as f64, (0.0, 0.0), f)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn in_domain(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.mask[j as usize * self.nx + i as usize]
    }

    /// Grid L^p norm over the domain: trapezoid node quadrature, half
    /// weights on the outer grid rows and columns.
    pub fn lp(&self, p: f64) -> f64 {
        let cell = self.spacing * self.spacing;
        let edge_w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        weighted_lp(
            (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| (i, j))).filter_map(
                |(i, j)| {
                    self.mask[j * self.nx + i].then(|| {
                        (cell * edge_w(i, self.nx) * edge_w(j, self.ny), self.at(i, j))
                    })
                },
            ),
            p,
        )
    }

    /// Pointwise product with another function on the same grid.
    pub fn product(&self, other: &GridFunction) -> GridFunction {
        assert_eq!((self.nx, self.ny), (other.nx, other.ny));
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v *= o;
        }
        for (m, o) in out.mask.iter_mut().zip(&other.mask) {
            *m = *m && *o;
        }
        out
    }
}

const LN2: f64 = core::f64::consts::LN_2;

/// L^p and BMD seminorm parts of the Besov estimator; see [`bmd_besov`].
pub fn bmd_parts(
    f: &GridFunction,
    s: f64,
    p: f64,
    q: f64,
    m_diff: u32,
) -> Result<(f64, f64)> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    if !(s > 0.0 && (s as f64) < m_diff as f64 && m_diff <= 3) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < s < m <= 3, got s = {s}, m = {m_diff}"
        )));
    }
    // Dyadic scales t = 2^-j restricted to resolvable ones, t > 4 h.
    let levels: Vec<f64> = (1..)
        .map(|j| 0.5f64.powi(j))
        .take_while(|&t| t > 4.0 * f.spacing)
        .collect();
    if levels.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "grid spacing {} too coarse for any dyadic scale below 1",
            f.spacing
        )));
    }
    let m = m_diff as i64;
    // Binomial weights of the m-th forward difference.
    let binom: Vec<f64> = match m_diff {
        1 => vec![-1.0, 1.0],
        2 => vec![1.0, -2.0, 1.0],
        _ => vec![-1.0, 3.0, -3.0, 1.0],
    };
    let cell = f.spacing * f.spacing;
    let n_nodes = f.nx * f.ny;
    let mut per_level = Vec::with_capacity(levels.len());
    let mut acc = vec![0.0f64; n_nodes];
    for &t in &levels {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let rad = (t / f.spacing).floor() as i64;
        // Offset-outer accumulation: for each admissible h, add |D_h^m f(x)|
        // into every x whose full stencil stays in-domain. The admissibility
        // test |h|^2 <= t^2 is written on the physical offsets so it is
        // reproducible independently of loop structure.
        let full = f.mask.iter().all(|&m| m);
        for dj in -rad..=rad {
            for di in -rad..=rad {
                if (di * di + dj * dj) as f64 * f.spacing * f.spacing > t * t
                    || (di == 0 && dj == 0)
                {
                    continue;
                }
                if full {
                    // Rectangle fast path: the stencil stays in bounds iff
                    // both coordinates stay in bounds for k = 0..m, which is
                    // a contiguous index range per row.
                    let (i_lo, i_hi) = if di >= 0 {
                        (0, f.nx as i64 - m * di)
                    } else {
                        (-m * di, f.nx as i64)
                    };
                    let (j_lo, j_hi) = if dj >= 0 {
                        (0, f.ny as i64 - m * dj)
                    } else {
                        (-m * dj, f.ny as i64)
                    };
                    let stride = dj * f.nx as i64 + di;
                    for j in j_lo..j_hi.max(j_lo) {
                        let row = j * f.nx as i64;
                        for i in i_lo..i_hi.max(i_lo) {
                            let base = row + i;
                            let mut diff = 0.0;
                            for (k, &w) in binom.iter().enumerate() {
                                diff += w * f.values[(base + k as i64 * stride) as usize];
                            }
                            acc[base as usize] += diff.abs();
                        }
                    }
                    continue;
                }
                for j in 0..f.ny as i64 {
                    for i in 0..f.nx as i64 {
                        if !f.mask[(j * f.nx as i64 + i) as usize] {
                            continue;
                        }
                        let mut diff = 0.0;
                        let mut ok = true;
                        for k in 0..=m {
                            let (x, y) = (i + k * di, j + k * dj);
                            if !f.in_domain(x, y) {
                                ok = false;
                                break;
                            }
                            diff += binom[k as usize] * f.at(x as usize, y as usize);
                        }
                        if ok {
                            acc[(j * f.nx as i64 + i) as usize] += diff.abs();
                        }
                    }
                }
            }
        }
        // Inner L^1_h with measure dh / t^n, n = 2, then outer L^p_x.
        let scale = cell / (t * t);
        let xp = weighted_lp(
            acc.iter()
                .zip(&f.mask)
                .filter(|(_, &m)| m)
                .map(|(&a, _)| (cell, a * scale)),
            p,
        );
        per_level.push(xp);
    }
    let semi = if q.is_infinite() {
        levels
            .iter()
            .zip(&per_level)
            .fold(0.0f64, |m, (&t, &x)| m.max(t.powf(-s) * x))
    } else {
        levels
            .iter()
            .zip(&per_level)
            .fold(0.0f64, |a, (&t, &x)| a + LN2 * (t.powf(-s) * x).powf(q))
            .powf(1.0 / q)
    };
    Ok((f.lp(p), semi))
}

/// Besov norm estimator through the ball-mean-difference characterization:
/// `||f||_p` plus the L^q(dt/t) aggregate over dyadic scales of
/// `t^-s || ||D_h^m f||_{L^1_h(dh/t^n, V^m(x,t))} ||_{L^p_x}`, where the
/// window `V^m(x, t)` keeps the whole m-step difference stencil in-domain.
pub fn bmd_besov(
    f: &GridFunction,
    s: f64,
    p: f64,
    q: f64,
    m_diff: u32,
) -> Result<NormReport> {
    let (lp, semi) = bmd_parts(f, s, p, q, m_diff)?;
    Ok(NormReport {
        value: lp + semi,
        p,
        q: Some(q),
        s: Some(s),
        m: Some(m_diff),
        method: NormMethod::Bmd,
    })
}

/// One strip row of a [`CoareaReport`].
#[derive(Debug, Clone, Copy)]
pub struct CoareaRow {
    pub r: f64,
    pub strip_area: f64,
    /// `|M_<r| / (|dM| r)`, the coarea area comparison.
    pub area_ratio: f64,
    /// Averaged strip norm `||f||_{L^p(M_<r, avg)}`.
    pub strip_norm: f64,
}

#[derive(Debug, Clone)]
pub struct CoareaReport {
    pub rows: Vec<CoareaRow>,
    /// Averaged boundary trace norm `||f||_{L^p(dM, avg)}`.
    pub boundary_norm: f64,
    pub perimeter: f64,
}

/// Strip-averaged L^p norms of a 0-cochain over `M_<r` for each `r`, plus
/// the averaged boundary trace norm. Triangles enter a strip by barycenter
/// distance; `f` is averaged per triangle and per boundary edge.
pub fn coarea_report(
    mesh: &SimplicialManifold,
    f: &[f64],
    p: f64,
    r_list: &[f64],
) -> Result<CoareaReport> {
    check_exponent(p, "p")?;
    if !mesh.has_boundary() {
        return Err(Error::Unsupported("coarea_report requires a boundary".into()));
    }
    if f.len() != mesh.num_vertices() {
        return Err(Error::Mismatch(format!(
            "expected {} vertex values, got {}",
            mesh.num_vertices(),
            f.len()
        )));
    }
    let dist = mesh.distance_to_boundary();
    let perimeter = mesh.boundary_length();
    let tri_dist: Vec<f64> = mesh
        .triangles
        .iter()
        .map(|t| (dist[t[0]] + dist[t[1]] + dist[t[2]]) / 3.0)
        .collect();
    let tri_val: Vec<f64> = mesh
        .triangles
        .iter()
        .map(|t| (f[t[0]] + f[t[1]] + f[t[2]]) / 3.0)
        .collect();
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let in_strip: Vec<usize> =
            (0..mesh.num_triangles()).filter(|&t| tri_dist[t] < r).collect();
        if in_strip.is_empty() {
            return Err(Error::InvalidParameter(format!("empty strip at r = {r}")));
        }
        let strip_area: f64 = in_strip.iter().map(|&t| mesh.tri_areas[t]).sum();
        let strip_norm = if p.is_infinite() {
            in_strip.iter().fold(0.0f64, |m, &t| m.max(tri_val[t].abs()))
        } else {
            (in_strip
                .iter()
                .map(|&t| mesh.tri_areas[t] * tri_val[t].abs().powf(p))
                .sum::<f64>()
                / strip_area)
                .powf(1.0 / p)
        };
        rows.push(CoareaRow { r, strip_area, area_ratio: strip_area / (perimeter * r), strip_norm });
    }
    let boundary_norm = if p.is_infinite() {
        mesh.boundary_edges.iter().fold(0.0f64, |m, &e| {
            let [a, b] = mesh.edges[e];
            m.max((0.5 * (f[a] + f[b])).abs())
        })
    } else {
        (mesh
            .boundary_edges
            .iter()
            .map(|&e| {
                let [a, b] = mesh.edges[e];
                mesh.edge_lengths[e] * (0.5 * (f[a] + f[b])).abs().powf(p)
            })
            .sum::<f64>()
            / perimeter)
            .powf(1.0 / p)
    };
    Ok(CoareaReport { rows, boundary_norm, perimeter })
}

/// One row of the product-estimate table: the measured ratio of the
/// left-hand side to the right-hand side of the strip-cutoff product bound.
#[derive(Debug, Clone)]
pub struct ProductRatioRow {
    pub r: f64,
    pub g_label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Evaluate the product bound
/// `||f_r g||_{B^{1/p}_{p,1}} <= C ( ||f_r||_{B^{1/p}_{inf,1}} ||g||_{L^p(M_<4r)}
///   + ||f_r||_inf ||g||_{B^{1/p}_{p,1}} )`
/// on the half-space model grid (unit square, boundary at `y = 0`, distance
/// to boundary is `y`), with `f_r` the quintic strip cutoff profile.
pub fn product_estimate_check(
    n: usize,
    r_list: &[f64],
    p: f64,
    g_samples: &[(String, GridFunction)],
) -> Result<Vec<ProductRatioRow>> {
    check_exponent(p, "p")?;
    if p.is_infinite() {
        return Err(Error::InvalidParameter("product estimate needs finite p".into()));
    }
    let s = 1.0 / p;
    let mut g_besov = Vec::with_capacity(g_samples.len());
    for (_, g) in g_samples {
        if (g.nx, g.ny) != (n, n) {
            return Err(Error::Mismatch("g sample grid does not match n".into()));
        }
        g_besov.push(bmd_besov(g, s, p, 1.0, 1)?.value);
    }
    let mut rows = Vec::new();
    for &r in r_list {
        let fr = GridFunction::unit_square(n, |_, y| cutoff_profile(y, r));
        let fr_besov_inf = bmd_besov(&fr, s, f64::INFINITY, 1.0, 1)?.value;
        let fr_sup = fr.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for ((label, g), &gb) in g_samples.iter().zip(&g_besov) {
            // ||g||_{L^p} restricted to the wide strip y < 4r.
            let mut g_strip = g.clone();
            for j in 0..n {
                let y = j as f64 * g.spacing;
                if y >= 4.0 * r {
                    for i in 0..n {
                        g_strip.mask[j * n + i] = false;
                    }
                }
            }
            let lhs = bmd_besov(&fr.product(g), s, p, 1.0, 1)?.value;
            let rhs = fr_besov_inf * g_strip.lp(p) + fr_sup * gb;
            rows.push(ProductRatioRow { r, g_label: label.clone(), lhs, rhs, ratio: lhs / rhs });
        }
    }
    Ok(rows)
}

/// Split a 1-cochain into tangential and normal parts near the boundary:
/// `n_r X` reconstructs `psi_r <X, nu> nu` with `nu` the nearest boundary
/// edge normal, and `t_r X = X - n_r X` so the sum is exact by construction.
pub fn strip_truncate(
    bundle: &OperatorBundle,
    cutoff: &StripCutoff,
    x: &Cochain,
) -> Result<(Cochain, Cochain)> {
    let mesh = &bundle.mesh;
    if !mesh.has_boundary() {
        return Err(Error::Unsupported("strip_truncate requires a boundary".into()));
    }
    if x.degree != 1 || x.complex != ComplexTag::Absolute {
        return Err(Error::Mismatch("strip_truncate expects an absolute 1-cochain".into()));
    }
    let boundary_mids: Vec<Vector3<f64>> = mesh
        .boundary_edges
        .iter()
        .map(|&e| {
            let [a, b] = mesh.edges[e];
            (mesh.vertices[a] + mesh.vertices[b]) * 0.5
        })
        .collect();
    let field = bundle.whitney_sharp(x);
    let mut normal_field = vec![Vector3::zeros(); mesh.num_triangles()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let psi = (cutoff.psi[tri[0]] + cutoff.psi[tri[1]] + cutoff.psi[tri[2]]) / 3.0;
        if psi == 0.0 {
            continue;
        }
        let bary = (mesh.tri_corners[t][0] + mesh.tri_corners[t][1] + mesh.tri_corners[t][2])
            / 3.0;
        let nearest = boundary_mids
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (bary - **a).norm_squared().total_cmp(&(bary - **b).norm_squared())
            })
            .map(|(i, _)| mesh.boundary_edges[i])
            .expect("boundary edge set is nonempty");
        let nu = mesh.edge_normals[nearest];
        normal_field[t] = nu * (psi * field[t].dot(&nu));
    }
    let n_r = bundle.whitney_flat(&normal_field);
    let mut t_r = x.clone();
    t_r.axpy(-1.0, &n_r);
    Ok((t_r, n_r))
}
