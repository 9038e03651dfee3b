//! Experiment drivers behind the `hodgeflow` binary: each CLI subcommand
//! maps to one `cmd_*` function that consumes a [`RunConfig`] and produces a
//! [`Table`] rendered to CSV or JSON. Runs are deterministic: the same
//! config yields byte-identical output, and every table header carries the
//! config hash.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{FieldSpec, OutputFormat, RunConfig};
use crate::dec::{build_operators, Cochain, ComplexTag, OperatorBundle};
use crate::error::{Error, Result};
use crate::euler::{
    energy_ledger, rotational_flow, taylor_green, FlowTrace, TimeCutoff,
};
use crate::heat::{commutation_check, rough_field, smoothing_exponent, spectral_decompose};
use crate::hodge::{laplacian, BoundaryCondition, Decomposer, LerayProjector};
use crate::norms::{bmd_besov, coarea_report, product_estimate_check, GridFunction};

/// One output table; the row cells are pre-rendered strings so CSV and JSON
/// agree bit for bit on the numbers they show.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fixed-width scientific notation keeps output byte-stable across runs.
pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

impl Table {
    fn new(command: &str, config: &RunConfig, columns: &[&str]) -> Self {
        Table {
            command: command.to_string(),
            config_hash: config.hash(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render_csv(&self) -> String {
        let mut out = format!(
            "# hodgeflow {} | config_hash={} | units: lengths in mesh units, norms in L2 mass scale\n",
            self.command, self.config_hash
        );
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(r.iter().map(|c| serde_json::Value::String(c.clone())))
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
    }

    /// Render in the configured format and write `<out_dir>/<command>.<ext>`.
    pub fn write(&self, config: &RunConfig) -> Result<PathBuf> {
        let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!(
            "{}.{}",
            self.command.replace('-', "_"),
            config.format.extension()
        ));
        let text = match config.format {
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Json => self.render_json(),
        };
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Exit-code contract: 0 success, 2 config error, 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver(_) | Error::SpectralGap(_) | Error::Mismatch(_) => 3,
        _ => 2,
    }
}

fn input_field(config: &RunConfig, bundle: &OperatorBundle) -> Result<Cochain> {
    match config.field {
        FieldSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let values = (0..bundle.mesh.num_edges())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            Ok(Cochain::from_values(1, ComplexTag::Absolute, values))
        }
        FieldSpec::RigidRotation => rotational_flow(bundle, &|r| r),
        FieldSpec::TaylorGreen => taylor_green(bundle),
    }
}

pub fn cmd_mesh_info(config: &RunConfig) -> Result<Table> {
    let mesh = config.mesh.build()?;
    let mut t = Table::new(
        "mesh-info",
        config,
        &[
            "vertices",
            "edges",
            "triangles",
            "euler_characteristic",
            "boundary_loops",
            "h",
            "area",
            "boundary_length",
        ],
    );
    t.push(vec![
        mesh.num_vertices().to_string(),
        mesh.num_edges().to_string(),
        mesh.num_triangles().to_string(),
        mesh.euler_characteristic().to_string(),
        mesh.boundary_loops().len().to_string(),
        fmt(mesh.h()),
        fmt(mesh.total_area()),
        fmt(mesh.boundary_length()),
    ]);
    Ok(t)
}

pub fn cmd_betti(config: &RunConfig) -> Result<Table> {
    let bundle = build_operators(config.mesh.build()?)?;
    let mut t = Table::new("betti", config, &["boundary_condition", "b0", "b1", "b2"]);
    for (name, bc) in [
        ("absolute", BoundaryCondition::AbsoluteNeumann),
        ("relative", BoundaryCondition::RelativeDirichlet),
    ] {
        let mut betti = Vec::new();
        for k in 0..3u8 {
            betti.push(laplacian(&bundle, k, bc)?.harmonic_basis().len().to_string());
        }
        t.push(vec![name.to_string(), betti[0].clone(), betti[1].clone(), betti[2].clone()]);
    }
    Ok(t)
}

pub fn cmd_decompose(config: &RunConfig) -> Result<Table> {
    let bundle = build_operators(config.mesh.build()?)?;
    let omega = input_field(config, &bundle)?;
    let dec = Decomposer::new(&bundle, 1)?;
    let parts = dec.hodge_morrey(&bundle, &omega)?;
    let mut t = Table::new("decompose", config, &["quantity", "value", "pass"]);
    let norm = |c: &Cochain| bundle.norm(c);
    for (name, c) in [
        ("input_norm", &omega),
        ("relative_exact_norm", &parts.p1),
        ("coexact_norm", &parts.p2),
        ("harmonic_norm", &parts.p3),
        ("neumann_harmonic_norm", &parts.p3n),
        ("exact_harmonic_norm", &parts.p3ex),
    ] {
        t.push(vec![name.to_string(), fmt(norm(c)), String::new()]);
    }
    let scale = norm(&omega).max(1e-300);
    let mut cross = 0.0f64;
    for (a, b) in [(&parts.p1, &parts.p2), (&parts.p1, &parts.p3), (&parts.p2, &parts.p3)] {
        cross = cross.max(bundle.inner_product(a, b)?.abs() / scale.powi(2));
    }
    t.push(vec![
        "max_cross_pairing".to_string(),
        fmt(cross),
        (cross <= config.tol).to_string(),
    ]);
    let rel = parts.residual / scale;
    t.push(vec![
        "reconstruction_residual".to_string(),
        fmt(rel),
        (rel <= config.tol).to_string(),
    ]);
    Ok(t)
}

pub fn cmd_heat_sweep(config: &RunConfig) -> Result<Table> {
    let bundle = build_operators(config.mesh.build()?)?;
    let caches = [
        spectral_decompose(&bundle, &laplacian(&bundle, 0, BoundaryCondition::AbsoluteNeumann)?, config.modes)?,
        spectral_decompose(&bundle, &laplacian(&bundle, 1, BoundaryCondition::AbsoluteNeumann)?, config.modes)?,
        spectral_decompose(&bundle, &laplacian(&bundle, 2, BoundaryCondition::AbsoluteNeumann)?, config.modes)?,
    ];
    let proj = LerayProjector::new(&bundle)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = rough_field(&caches[1], &mut rng);
    let mut t = Table::new("heat-sweep", config, &["kind", "m", "t", "value"]);
    let mut grid = config.t_list.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    for m in [1u32, 2] {
        let (slope, points) = smoothing_exponent(&caches[1], &bundle, &omega, m, &grid)?;
        t.push(vec!["slope".into(), m.to_string(), String::new(), fmt(slope)]);
        for (time, value) in points {
            t.push(vec!["smoothed_norm".into(), m.to_string(), fmt(time), fmt(value)]);
        }
    }
    let t_mid = grid[grid.len() / 2];
    let report = commutation_check(&bundle, &caches, &proj, &omega, t_mid)?;
    for (kind, value) in [
        ("commutation_d", report.d_residual),
        ("commutation_codif", report.codif_residual),
        ("commutation_leray", report.leray_residual),
    ] {
        t.push(vec![kind.into(), String::new(), fmt(t_mid), fmt(value)]);
    }
    Ok(t)
}

pub fn cmd_onsager(config: &RunConfig) -> Result<Table> {
    let bundle = build_operators(config.mesh.build()?)?;
    let cache = spectral_decompose(
        &bundle,
        &laplacian(&bundle, 1, BoundaryCondition::AbsoluteNeumann)?,
        config.modes,
    )?;
    let v0 = input_field(config, &bundle)?;
    let trace = FlowTrace::steady(&v0, 1.0, 9)?;
    let cutoff = TimeCutoff::spanning(&trace.times)?;
    let mut eps_list = config.eps_list.clone();
    eps_list.sort_by(|a, b| b.partial_cmp(a).expect("finite grid"));
    let rows = energy_ledger(&bundle, &cache, &trace, &cutoff, &eps_list)?;
    let mut t = Table::new(
        "onsager",
        config,
        &["t0", "eps", "energy_pairing", "commutator_pairing", "A_sup", "weak_residual", "pass"],
    );
    for row in rows {
        // a steady trace must land the energy pairing at quadrature zero
        let pass = row.energy_pairing.abs() <= config.tol.max(1e-10);
        t.push(vec![
            fmt(row.t0),
            fmt(row.eps),
            fmt(row.energy_pairing),
            fmt(row.commutator_pairing),
            fmt(row.a_sup),
            fmt(row.weak_residual),
            pass.to_string(),
        ]);
    }
    Ok(t)
}

pub fn cmd_besov(config: &RunConfig) -> Result<Table> {
    let mut t = Table::new("besov", config, &["section", "label", "x", "value", "aux"]);
    let n = 65;
    let tau = std::f64::consts::TAU;
    let grids: Vec<(&str, GridFunction)> = vec![
        ("smooth_sine", GridFunction::unit_square(n, |x, y| (tau * x).sin() * (tau * y).cos())),
        ("diagonal_kink", GridFunction::unit_square(n, |x, y| (x - y).abs())),
        ("linear_ramp", GridFunction::unit_square(n, |_, y| y)),
    ];
    for (label, g) in &grids {
        for (s, p, q, m) in [(1.0 / 3.0, 3.0, 1.0, 1u32), (0.8, 2.0, 2.0, 2)] {
            let report = bmd_besov(g, s, p, q, m)?;
            t.push(vec![
                "bmd".into(),
                format!("{label}_s{s:.3}_p{p}_q{q}_m{m}"),
                String::new(),
                fmt(report.value),
                String::new(),
            ]);
        }
    }
    let mesh = config.mesh.build()?;
    if mesh.has_boundary() {
        let f: Vec<f64> = mesh.vertices.iter().map(|v| 1.0 + v.x * v.x).collect();
        let report = coarea_report(&mesh, &f, 2.0, &config.r_list)?;
        for row in &report.rows {
            t.push(vec![
                "coarea".into(),
                "strip_norm".into(),
                fmt(row.r),
                fmt(row.strip_norm),
                fmt(row.area_ratio),
            ]);
        }
        t.push(vec![
            "coarea".into(),
            "boundary_norm".into(),
            String::new(),
            fmt(report.boundary_norm),
            fmt(report.perimeter),
        ]);
    }
    let gn = 64;
    let g_samples = vec![
        ("const".to_string(), GridFunction::unit_square(gn, |_, _| 1.0)),
        ("smooth".to_string(), GridFunction::unit_square(gn, |x, y| (tau * x).sin() * (tau * y).cos())),
    ];
    for row in product_estimate_check(gn, &config.r_list, 3.0, &g_samples)? {
        t.push(vec![
            "product".into(),
            row.g_label.clone(),
            fmt(row.r),
            fmt(row.lhs),
            fmt(row.ratio),
        ]);
    }
    Ok(t)
}
