//! Norm estimators: L^p and W^{1,p} surrogates on cochains, the
//! ball-mean-difference Besov norm on grid functions, the coarea strip
//! report, and the boundary-strip product estimate.

use hodgeflow::dec::build_operators;
use hodgeflow::euler::rotational_flow;
use hodgeflow::mesh::{MeshKind, SimplicialManifold};
use hodgeflow::norms::{
    bmd_besov, coarea_report, lp_norm, product_estimate_check, w1p_norm, GridFunction,
};

fn main() {
    let mesh = SimplicialManifold::generate(MeshKind::Disk { rings: 10, sectors: 40 }).unwrap();
    let bundle = build_operators(mesh).unwrap();
    let v = rotational_flow(&bundle, &|r| r).unwrap();
    for p in [2.0, 3.0, f64::INFINITY] {
        let lp = lp_norm(&bundle, &v, p).unwrap().value;
        println!("rigid rotation L^{p} = {lp:.4}");
    }
    println!("rigid rotation W^{{1,3}} surrogate = {:.4}", w1p_norm(&bundle, &v, 3.0).unwrap().value);

    let tau = std::f64::consts::TAU;
    let smooth = GridFunction::unit_square(65, |x, y| (tau * x).sin() * (tau * y).cos());
    let kink = GridFunction::unit_square(65, |x, y| (x - y).abs());
    for (label, g) in [("smooth", &smooth), ("kink", &kink)] {
        let b = bmd_besov(g, 1.0 / 3.0, 3.0, 1.0, 1).unwrap().value;
        println!("BMD Besov B^(1/3)_(3,1) of {label}: {b:.4}");
    }

    // strip averages converge to the boundary trace as the strip narrows
    let f: Vec<f64> = bundle.mesh.vertices.iter().map(|p| 1.0 + p.x * p.x).collect();
    let report = coarea_report(&bundle.mesh, &f, 2.0, &[0.2, 0.1, 0.05]).unwrap();
    for row in &report.rows {
        println!(
            "strip r={:.2}: averaged norm {:.4}, area ratio {:.3}",
            row.r, row.strip_norm, row.area_ratio
        );
    }
    println!("boundary trace norm: {:.4}", report.boundary_norm);

    let g_samples = vec![
        ("const".to_string(), GridFunction::unit_square(64, |_, _| 1.0)),
        ("smooth".to_string(), GridFunction::unit_square(64, |x, y| (tau * x).sin() * (tau * y).cos())),
    ];
    println!("product estimate ratios (bounded uniformly in r):");
    for row in product_estimate_check(64, &[0.2, 0.1, 0.05], 3.0, &g_samples).unwrap() {
        println!("  r={:.2} g={}: ratio {:.3}", row.r, row.g_label, row.ratio);
    }
}
