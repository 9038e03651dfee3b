//! The absolute-Neumann heat semigroup by spectral calculus, with
//! semigroup, commutation, smoothing, Kodaira, and Duhamel diagnostics.

use rand::Rng;

use crate::dec::{Cochain, OperatorBundle};
use crate::error::{Error, Result};
use crate::hodge::{neg_laplacian, LaplacianHandle, LerayProjector};

/// Eigenpairs of -Laplacian backing the heat flow on one degree.
///
/// `eigenvalues` ascending, `eigenfields` mass-orthonormal; the leading
/// `harmonic_dim` eigenvalues sit below the kernel threshold. When
/// truncated, applying the flow drops the unresolved tail, with relative
/// error at most exp(-lambda_cut t) on it.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    pub degree: u8,
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<Cochain>,
    pub harmonic_dim: usize,
    pub residuals: Vec<f64>,
    /// Total dimension of the underlying space (= eigenfield count unless
    /// truncated).
    pub full_dim: usize,
}

/// Extract (and verify) the spectral data of an absolute-Neumann handle,
/// keeping the lowest `n_modes` eigenpairs if given.
pub fn spectral_decompose(
    bundle: &OperatorBundle,
    handle: &LaplacianHandle,
    n_modes: Option<usize>,
) -> Result<SpectralCache> {
    if handle.bc != crate::hodge::BoundaryCondition::AbsoluteNeumann {
        return Err(Error::InvalidParameter(
            "heat flow requires an absolute-Neumann handle".into(),
        ));
    }
    let full_dim = handle.eigenfields.len();
    let keep = n_modes.unwrap_or(full_dim).min(full_dim);
    let lambda_max = handle.eigenvalues.last().copied().unwrap_or(0.0);
    let mut residuals = Vec::with_capacity(keep);
    for i in 0..keep {
        let mut r = neg_laplacian(bundle, &handle.eigenfields[i]);
        r.axpy(-handle.eigenvalues[i], &handle.eigenfields[i]);
        let res = bundle.norm(&r);
        if res > 1e-8 * lambda_max.max(1.0) {
            return Err(Error::Solver(format!(
                "eigenpair {i} residual {res} exceeds spectral tolerance"
            )));
        }
        residuals.push(res);
    }
    Ok(SpectralCache {
        degree: handle.degree,
        eigenvalues: handle.eigenvalues[..keep].to_vec(),
        eigenfields: handle.eigenfields[..keep].to_vec(),
        harmonic_dim: handle.harmonic_dim,
        residuals,
        full_dim,
    })
}

impl SpectralCache {
    /// Smallest nonzero eigenvalue.
    pub fn lambda_1(&self) -> Option<f64> {
        self.eigenvalues.get(self.harmonic_dim).copied()
    }

    /// Spectral coefficients of a cochain in the cached eigenbasis.
    pub fn coefficients(&self, bundle: &OperatorBundle, omega: &Cochain) -> Vec<f64> {
        self.eigenfields
            .iter()
            .map(|phi| {
                bundle.star[self.degree as usize]
                    .iter()
                    .zip(omega.values.iter().zip(&phi.values))
                    .map(|(w, (x, y))| w * (x * y))
                    .sum()
            })
            .collect()
    }

    /// Rebuild a cochain from spectral coefficients.
    pub fn synthesize(&self, coeffs: &[f64]) -> Cochain {
        let mut out = self.eigenfields[0].scaled(0.0);
        for (c, phi) in coeffs.iter().zip(&self.eigenfields) {
            out.axpy(*c, phi);
        }
        out
    }
}

/// Heat flow S(t) = sum_i exp(-lambda_i t) <<omega, phi_i>> phi_i.
pub fn heat_apply(
    cache: &SpectralCache,
    bundle: &OperatorBundle,
    omega: &Cochain,
    t: f64,
) -> Result<Cochain> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative heat time {t}")));
    }
    let mut coeffs = cache.coefficients(bundle, omega);
    for (c, lam) in coeffs.iter_mut().zip(&cache.eigenvalues) {
        *c *= (-lam * t).exp();
    }
    Ok(cache.synthesize(&coeffs))
}

/// Projection onto the Neumann harmonic space (the Kodaira limit of the
/// heat flow).
pub fn harmonic_part(cache: &SpectralCache, bundle: &OperatorBundle, omega: &Cochain) -> Cochain {
    let coeffs = cache.coefficients(bundle, omega);
    let mut out = omega.scaled(0.0);
    for i in 0..cache.harmonic_dim {
        out.axpy(coeffs[i], &cache.eigenfields[i]);
    }
    out
}

/// Residuals of the heat flow commuting with d, the codifferential, and the
/// Leray projection.
#[derive(Debug, Clone, Copy)]
pub struct CommutationReport {
    pub d_residual: f64,
    pub codif_residual: f64,
    pub leray_residual: f64,
}

/// Commutation residuals for a 1-cochain: caches for degrees 0, 1, 2 drive
/// the flows on the derivative images.
pub fn commutation_check(
    bundle: &OperatorBundle,
    caches: &[SpectralCache; 3],
    proj: &LerayProjector,
    omega: &Cochain,
    t: f64,
) -> Result<CommutationReport> {
    assert_eq!(omega.degree, 1);
    let st = heat_apply(&caches[1], bundle, omega, t)?;
    let mut d_res = bundle.d(&st);
    d_res.axpy(-1.0, &heat_apply(&caches[2], bundle, &bundle.d(omega), t)?);
    let mut c_res = bundle.codif(&st);
    c_res.axpy(-1.0, &heat_apply(&caches[0], bundle, &bundle.codif(omega), t)?);
    let mut l_res = proj.project(bundle, &st);
    l_res.axpy(-1.0, &heat_apply(&caches[1], bundle, &proj.project(bundle, omega), t)?);
    Ok(CommutationReport {
        d_residual: bundle.norm(&d_res),
        codif_residual: bundle.norm(&c_res),
        leray_residual: bundle.norm(&l_res),
    })
}

/// A spectrally rough input: random signs with coefficients lambda^{-1/2}
/// on the nonzero modes, so each dyadic eigenvalue octave carries unit
/// energy (the discrete stand-in for white-noise data).
pub fn rough_field(cache: &SpectralCache, rng: &mut impl Rng) -> Cochain {
    let mut coeffs = vec![0.0; cache.eigenvalues.len()];
    for i in cache.harmonic_dim..cache.eigenvalues.len() {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        coeffs[i] = sign / cache.eigenvalues[i].sqrt();
    }
    cache.synthesize(&coeffs)
}

/// Fitted log-log slope of t -> ||(-Lap)^{m/2} S(t) omega|| over `t_grid`,
/// with the per-point values. Requires at least 4 usable points.
pub fn smoothing_exponent(
    cache: &SpectralCache,
    bundle: &OperatorBundle,
    omega: &Cochain,
    m: u32,
    t_grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    let coeffs = cache.coefficients(bundle, omega);
    let mut points = Vec::new();
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        let mut v = 0.0;
        for i in cache.harmonic_dim..coeffs.len() {
            let lam = cache.eigenvalues[i];
            v += lam.powi(m as i32) * (-2.0 * lam * t).exp() * coeffs[i] * coeffs[i];
        }
        let val = v.sqrt();
        if val > 0.0 {
            points.push((t, val));
        }
    }
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "only {} usable grid points for the slope fit",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok((slope, points))
}

/// ||S(T) omega - harmonic projection of omega||: decays like exp(-lambda_1 T).
pub fn kodaira_limit(
    cache: &SpectralCache,
    bundle: &OperatorBundle,
    omega: &Cochain,
    t_final: f64,
) -> Result<f64> {
    if t_final <= 0.0 {
        return Err(Error::InvalidParameter("kodaira_limit needs T > 0".into()));
    }
    let mut r = heat_apply(cache, bundle, omega, t_final)?;
    r.axpy(-1.0, &harmonic_part(cache, bundle, omega));
    Ok(bundle.norm(&r))
}

/// Residual of the Duhamel reconstruction
/// W(s) = S(3(s - eps)) W(eps) + int_eps^s S(3(s - sigma)) N(sigma) dsigma
/// with composite-Simpson quadrature on `quad_points` nodes (odd, >= 3).
pub fn duhamel_check(
    cache: &SpectralCache,
    bundle: &OperatorBundle,
    w_family: &dyn Fn(f64) -> Cochain,
    n_family: &dyn Fn(f64) -> Cochain,
    s: f64,
    eps: f64,
    quad_points: usize,
) -> Result<f64> {
    if !(0.0 < eps && eps <= s) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < eps <= s, got eps = {eps}, s = {s}"
        )));
    }
    if quad_points < 3 || quad_points % 2 == 0 {
        return Err(Error::InvalidParameter(
            "Simpson quadrature needs an odd node count >= 3".into(),
        ));
    }
    let w_s = w_family(s);
    let mut recon = heat_apply(cache, bundle, &w_family(eps), 3.0 * (s - eps))?;
    if s > eps {
        let h = (s - eps) / (quad_points - 1) as f64;
        for i in 0..quad_points {
            let sigma = eps + h * i as f64;
            let weight = if i == 0 || i == quad_points - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let term = heat_apply(cache, bundle, &n_family(sigma), 3.0 * (s - sigma))?;
            recon.axpy(weight, &term);
        }
    }
    recon.axpy(-1.0, &w_s);
    Ok(bundle.norm(&recon))
}
