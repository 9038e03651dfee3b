//! Spectral Neumann heat flow on the annulus: smoothing rates for rough
//! data, the long-time Kodaira limit, and commutation with d, the
//! codifferential, and the Leray projection.

use hodgeflow::dec::build_operators;
use hodgeflow::heat::{
    commutation_check, kodaira_limit, rough_field, smoothing_exponent, spectral_decompose,
};
use hodgeflow::hodge::{laplacian, BoundaryCondition, LerayProjector};
use hodgeflow::mesh::{MeshKind, SimplicialManifold};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mesh = SimplicialManifold::generate(MeshKind::Annulus { rings: 10, sectors: 56 }).unwrap();
    let bundle = build_operators(mesh).unwrap();
    let bc = BoundaryCondition::AbsoluteNeumann;
    let caches = [
        spectral_decompose(&bundle, &laplacian(&bundle, 0, bc).unwrap(), None).unwrap(),
        spectral_decompose(&bundle, &laplacian(&bundle, 1, bc).unwrap(), None).unwrap(),
        spectral_decompose(&bundle, &laplacian(&bundle, 2, bc).unwrap(), None).unwrap(),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let omega = rough_field(&caches[1], &mut rng);
    let t_grid: Vec<f64> = (0..6).map(|j| 0.02 * 0.5f64.powi(j)).collect();
    for m in [1u32, 2] {
        let (slope, _) = smoothing_exponent(&caches[1], &bundle, &omega, m, &t_grid).unwrap();
        println!("smoothing slope m={m}: {slope:.3} (expect about {})", -(m as f64) / 2.0);
    }

    let lambda1 = caches[1].lambda_1().unwrap();
    for factor in [5.0, 20.0] {
        let t_final = factor / lambda1;
        let residual = kodaira_limit(&caches[1], &bundle, &omega, t_final).unwrap();
        let bound = (-lambda1 * t_final).exp() * bundle.norm(&omega);
        println!("Kodaira at T={factor}/lambda1: residual {residual:.3e} <= bound {bound:.3e}");
    }

    let proj = LerayProjector::new(&bundle).unwrap();
    let report = commutation_check(&bundle, &caches, &proj, &omega, 0.01).unwrap();
    println!(
        "commutation residuals at t=0.01: d {:.2e}, codif {:.2e}, Leray {:.2e}",
        report.d_residual, report.codif_residual, report.leray_residual
    );
}
