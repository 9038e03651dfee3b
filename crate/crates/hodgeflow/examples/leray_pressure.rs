//! Pressure recovery for two exact steady flows: rigid rotation on the unit
//! disk (pressure r^2/2 - 1/4 after mean centering) and the Taylor-Green
//! vortex on the torus (pressure -(cos 2x + cos 2y)/4).

use hodgeflow::dec::{build_operators, OperatorBundle};
use hodgeflow::euler::{nonlinear_term, rotational_flow, taylor_green};
use hodgeflow::hodge::pressure_recover;
use hodgeflow::mesh::{MeshKind, SimplicialManifold};

fn pressure_error(
    bundle: &OperatorBundle,
    recovered: &[f64],
    exact: impl Fn(f64, f64) -> f64,
) -> f64 {
    // compare after removing the mean of both candidates (pressure is only
    // determined up to a constant), weighting vertices by dual cells
    let w = &bundle.star[0];
    let total: f64 = w.iter().sum();
    let exact_vals: Vec<f64> = bundle.mesh.vertices.iter().map(|v| exact(v.x, v.y)).collect();
    let mean = |vals: &[f64]| vals.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total;
    let (mr, me) = (mean(recovered), mean(&exact_vals));
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..recovered.len() {
        num += w[i] * ((recovered[i] - mr) - (exact_vals[i] - me)).powi(2);
        den += w[i] * (exact_vals[i] - me).powi(2);
    }
    (num / den).sqrt()
}

fn main() {
    for (rings, sectors) in [(10, 40), (20, 80)] {
        let mesh =
            SimplicialManifold::generate(MeshKind::Disk { rings, sectors }).unwrap();
        let h = mesh.h();
        let bundle = build_operators(mesh).unwrap();
        let v = rotational_flow(&bundle, &|r| r).unwrap();
        let rep = nonlinear_term(&bundle, &v).unwrap().cochain;
        let p = pressure_recover(&bundle, &v, &rep).unwrap();
        let err = pressure_error(&bundle, &p.values, |x, y| 0.5 * (x * x + y * y) - 0.25);
        println!("disk {rings}x{sectors} (h={h:.3}): rigid-rotation pressure error {:.2}%", 100.0 * err);
    }

    for n in [32, 64] {
        let mesh = SimplicialManifold::generate(MeshKind::Torus { nx: n, ny: n }).unwrap();
        let bundle = build_operators(mesh).unwrap();
        let v = taylor_green(&bundle).unwrap();
        let rep = nonlinear_term(&bundle, &v).unwrap().cochain;
        let p = pressure_recover(&bundle, &v, &rep).unwrap();
        let err = pressure_error(&bundle, &p.values, |x, y| {
            -0.25 * ((2.0 * x).cos() + (2.0 * y).cos())
        });
        println!("torus {n}x{n}: Taylor-Green pressure error {:.2}%", 100.0 * err);
    }
}
