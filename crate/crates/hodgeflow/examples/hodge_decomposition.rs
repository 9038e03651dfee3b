//! Split a random 1-cochain on the annulus into relative-exact, coexact,
//! and harmonic parts, then refine the harmonic part into its Neumann and
//! exact components.

use hodgeflow::dec::{build_operators, Cochain, ComplexTag};
use hodgeflow::hodge::Decomposer;
use hodgeflow::mesh::{MeshKind, SimplicialManifold};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mesh = SimplicialManifold::generate(MeshKind::Annulus { rings: 6, sectors: 32 }).unwrap();
    let bundle = build_operators(mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let omega = Cochain::from_values(
        1,
        ComplexTag::Absolute,
        (0..bundle.mesh.num_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );

    let dec = Decomposer::new(&bundle, 1).unwrap();
    let parts = dec.hodge_morrey(&bundle, &omega).unwrap();

    println!("input                  |.|  {:.6}", bundle.norm(&omega));
    println!("relative exact   d(rel)    {:.6}", bundle.norm(&parts.p1));
    println!("coexact          codif     {:.6}", bundle.norm(&parts.p2));
    println!("harmonic fields            {:.6}", bundle.norm(&parts.p3));
    println!("  Neumann harmonic         {:.6}", bundle.norm(&parts.p3n));
    println!("  exact harmonic           {:.6}", bundle.norm(&parts.p3ex));
    println!("reconstruction residual    {:.3e}", parts.residual);

    // pairwise orthogonality in the mass inner product
    for (a, b, label) in [
        (&parts.p1, &parts.p2, "p1.p2"),
        (&parts.p1, &parts.p3, "p1.p3"),
        (&parts.p2, &parts.p3, "p2.p3"),
    ] {
        let pairing = bundle.inner_product(a, b).unwrap();
        println!("orthogonality {label}        {pairing:.3e}");
    }

    // Pythagoras across the three parts
    let sq = |c: &Cochain| bundle.norm(c).powi(2);
    let sum = sq(&parts.p1) + sq(&parts.p2) + sq(&parts.p3);
    println!("|omega|^2 - sum of parts   {:.3e}", sq(&omega) - sum);
}
