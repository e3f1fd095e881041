//! Command-line front end: configuration, sweeps and CSV/JSON emission.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical or
//! I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use molgate_core::config::RunConfig;
use molgate_core::dressed::{logical_pairs, CatalysisField, DressedContext, PacketGeometry};
use molgate_core::gate::{
    constraint_check, cphase_metrics, fidelity_surface, kappa_separation_exponent,
    operating_intensities, peak_point, product_state_fidelity, ConstraintParams, SurfaceRequest,
};
use molgate_core::half_int::HalfInt;
use molgate_core::lattice::{energy_gap, motional_overlap, LatticeGeometry};
use molgate_core::molecular::{track_curves, BasisTables};
use molgate_core::report;
use molgate_core::threelevel::{
    dressed_hamiltonian_exact, dressed_hamiltonian_perturbative, kappa_asymptotic, ThreeLevelError,
};

#[derive(Parser)]
#[command(
    name = "molgate",
    about = "Molecular hyperfine potentials and dipole-dipole CPHASE gate metrics for trapped 87Rb",
    version
)]
struct Cli {
    /// Path to a JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON products.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 selects the hardware concurrency.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Dotted-path configuration overrides, e.g. field.delta.value=20000
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tracked Born-Oppenheimer potential and decay curves over a kr grid.
    Potentials,
    /// CPHASE fidelity metrics over (Δ, kΔz) with a JSON peak summary.
    Surface,
    /// State-dependent lattice potentials, overlap tables and leakage geometry.
    Lattice,
    /// Three-level model report: perturbative vs exact dressing and κ.
    Threelevel,
    /// Intensity/detuning self-consistency margins and gate speed.
    Constraints,
}

enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) | CliError::Io(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    base.with_overrides(&cli.overrides)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.workers > 0 {
        // best effort: a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match cli.command {
        Command::Potentials => cmd_potentials(&cfg, &cli.out),
        Command::Surface => cmd_surface(&cfg, &cli.out),
        Command::Lattice => cmd_lattice(&cfg, &cli.out),
        Command::Threelevel => cmd_threelevel(&cfg, &cli.out),
        Command::Constraints => cmd_constraints(&cfg, &cli.out),
    }
}

fn cmd_potentials(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let tables = BasisTables::new(cfg.atom_spec());
    let n = cfg.potentials.points;
    let ratio = cfg.potentials.kr_max / cfg.potentials.kr_min;
    let grid: Vec<f64> = (0..n)
        .map(|k| cfg.potentials.kr_min * ratio.powf(k as f64 / (n - 1) as f64))
        .collect();
    let tracked = track_curves(&tables, &grid).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_out(
        out,
        "potentials.csv",
        &report::potentials_csv(cfg.canonical_hash(), &tracked),
    )
}

fn cmd_surface(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let deltas: Vec<f64> = match &cfg.geometry.delta_scan {
        Some(s) => s.values(),
        None => vec![cfg.field.delta.value],
    };
    let kdzs: Vec<f64> = match &cfg.geometry.kdz_scan {
        Some(s) => s.values(),
        None => vec![cfg.geometry.kdz.value],
    };
    let tables = Arc::new(BasisTables::new(cfg.atom_spec()));
    let mut ctx = DressedContext::new(tables, cfg.model.include_ground_offset);
    ctx.adiabatic_cutoff = cfg.model.adiabatic_cutoff;
    let req = SurfaceRequest {
        deltas: &deltas,
        kdzs: &kdzs,
        eta: cfg.geometry.eta.value,
        rabi: cfg.field.rabi.value,
        recoil: cfg.lattice.recoil.value,
        include_leakage: cfg.model.include_leakage,
        speed_factor: cfg.lattice.speed_factor.value,
        quad: cfg.quadrature_spec(),
    };
    let points = fidelity_surface(&ctx, &req);
    let hash = cfg.canonical_hash();
    write_out(out, "surface.csv", &report::surface_csv(hash, &points))?;
    let peak = peak_point(&points);
    write_out(
        out,
        "surface_summary.json",
        &report::surface_summary_json(hash, &points, peak),
    )
}

fn cmd_lattice(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.atom_spec();
    let hash = cfg.canonical_hash();
    let eta = cfg.geometry.eta.value;
    let recoil = cfg.lattice.recoil.value;
    let f_high = spec.f_high();
    let h = HalfInt::from_twice;

    // potentials at the configured operating separation
    let geom = LatticeGeometry::from_separation(&spec, cfg.geometry.kdz.value, eta, recoil)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let kz: Vec<f64> = (0..=400)
        .map(|k| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / 400.0)
        .collect();
    write_out(
        out,
        "lattice_potentials.csv",
        &report::lattice_potentials_csv(hash, &spec, &geom, &kz),
    )?;

    // overlap/gap tables versus separation
    let scan: Vec<f64> = match &cfg.geometry.kdz_scan {
        Some(s) => s.values(),
        None => (1..=60).map(|k| 0.01 * k as f64).collect(),
    };
    let mut rows = Vec::new();
    for &kdz in &scan {
        let g = LatticeGeometry::from_separation(&spec, kdz, eta, recoil)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let logical_up = g
            .well_parameters(&spec, f_high, HalfInt::ONE)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let logical_dn = g
            .well_parameters(&spec, f_high, -HalfInt::ONE)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let mid = g
            .well_parameters(&spec, spec.f_low(), HalfInt::ZERO)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let stretched = g
            .well_parameters(&spec, f_high, h(f_high.twice()))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let anti_stretched = g
            .well_parameters(&spec, f_high, h(-f_high.twice()))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        // vibrational channel in the relative coordinate of the pair
        let rel_init = logical_up
            .relative_coordinate()
            .displaced(logical_up.center - logical_dn.center);
        let rel_final = stretched
            .relative_coordinate()
            .displaced(stretched.center - anti_stretched.center)
            .excited(1);
        let gap = energy_gap(&logical_up, &anti_stretched.excited(1), &spec, &g)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        rows.push(report::OverlapRow {
            kdz,
            mid: motional_overlap(&logical_up, &mid),
            self_site: motional_overlap(&logical_up, &logical_dn.displaced(logical_dn.center)),
            stretched: motional_overlap(&logical_up, &stretched),
            vibrational: motional_overlap(&rel_init, &rel_final),
            gap,
        });
    }
    write_out(
        out,
        "lattice_overlaps.csv",
        &report::lattice_overlaps_csv(hash, &rows),
    )?;

    // worst-overlap 0.1 crossing and the vibrational degeneracy
    let overlap_sq_at = |kdz: f64| -> Result<f64, CliError> {
        let g = LatticeGeometry::from_separation(&spec, kdz, eta, recoil)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let a = g
            .well_parameters(&spec, f_high, HalfInt::ONE)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let b = g
            .well_parameters(&spec, f_high, h(f_high.twice()))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(motional_overlap(&a, &b).powi(2))
    };
    let crossing = bisect_scan(0.05, 1.2, 120, |k| Ok(overlap_sq_at(k)? - 0.1))?;
    let gap_at = |kdz: f64| -> Result<f64, CliError> {
        let g = LatticeGeometry::from_separation(&spec, kdz, eta, recoil)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let a = g
            .well_parameters(&spec, f_high, HalfInt::ONE)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let b = g
            .well_parameters(&spec, f_high, h(-f_high.twice()))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        energy_gap(&a, &b.excited(1), &spec, &g).map_err(|e| CliError::Numerical(e.to_string()))
    };
    let degeneracy = bisect_scan(0.05, 0.5, 90, gap_at)?;
    write_out(
        out,
        "lattice_summary.json",
        &report::lattice_summary_json(hash, crossing, degeneracy),
    )
}

/// First sign change of f over a scan, refined by bisection.
fn bisect_scan(
    lo: f64,
    hi: f64,
    steps: usize,
    f: impl Fn(f64) -> Result<f64, CliError>,
) -> Result<Option<f64>, CliError> {
    let mut prev = (lo, f(lo)?);
    for k in 1..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let y = f(x)?;
        if prev.1 == 0.0 {
            return Ok(Some(prev.0));
        }
        if prev.1 * y < 0.0 {
            let (mut a, mut b) = (prev.0, x);
            let mut fa = prev.1;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = (x, y);
    }
    Ok(None)
}

fn cmd_threelevel(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.threelevel_params();
    let hash = cfg.canonical_hash();
    let perturbative =
        dressed_hamiltonian_perturbative(&params).map_err(|e| CliError::Config(e.to_string()))?;
    let (exact, diagnostic) = match dressed_hamiltonian_exact(&params, cfg.threelevel.include_ee) {
        Ok(h) => (h, None),
        Err(ThreeLevelError::CondonResonance) => {
            // report the perturbative side with the resonance flagged
            let diag =
                "exact elimination singular: catalysis resonant with a molecular level".to_string();
            (perturbative, Some(diag))
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let metrics = cphase_metrics(&exact.matrix, params.rabi, 0.0);
    let kappa9 = kappa_asymptotic(&params);
    let worst = if metrics.tau.is_finite() {
        product_state_fidelity(&exact.matrix, metrics.tau)
    } else {
        0.0
    };
    write_out(
        out,
        "threelevel.json",
        &report::threelevel_report_json(
            hash,
            &perturbative,
            &exact,
            &metrics,
            kappa9,
            worst,
            metrics.separable,
            diagnostic,
        ),
    )
}

fn cmd_constraints(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = cfg.atom_spec();
    let tables = Arc::new(BasisTables::new(spec));
    let mut ctx = DressedContext::new(tables, cfg.model.include_ground_offset);
    ctx.adiabatic_cutoff = cfg.model.adiabatic_cutoff;
    let field = CatalysisField {
        delta: cfg.field.delta.value,
        rabi: cfg.field.rabi.value,
    };
    let geom = PacketGeometry {
        eta: cfg.geometry.eta.value,
        kdz: cfg.geometry.kdz.value,
    };
    let quad = cfg.quadrature_spec();
    let logical = logical_pairs(&spec);
    let result = ctx
        .evaluate(&logical, &logical, &[field.delta], &geom, &quad)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let m = &result.matrices[0];
    let xi = (m[0] + m[15] - m[5] - m[10]).re; // per Ω², i.e. ξ directly

    let lattice = LatticeGeometry::from_separation(
        &spec,
        cfg.geometry.kdz.value,
        cfg.geometry.eta.value,
        cfg.lattice.recoil.value,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let omega = lattice
        .well_parameters(&spec, spec.f_high(), HalfInt::ONE)
        .map_err(|e| CliError::Numerical(e.to_string()))?
        .omega;
    let (ic, il) = operating_intensities(xi, omega, cfg.lattice.speed_factor.value);
    let params = ConstraintParams {
        il_over_i0: il,
        ic_over_i0: ic,
        delta_l: cfg.constraints.delta_lattice.value,
        delta_c: cfg.field.delta.value,
        omega_osc: omega,
        e_r: cfg.lattice.recoil.value,
        eta: cfg.geometry.eta.value,
    };
    let rep = constraint_check(&params, xi, spec.gamma_hz, cfg.constraints.margin_required);
    write_out(
        out,
        "constraints.json",
        &report::constraints_json(cfg.canonical_hash(), xi, &rep, ic, il),
    )?;
    // the κ separation law on a short far-separation scan, for reference
    let kdzs: Vec<f64> = (0..6).map(|k| 1.0 + 0.4 * k as f64).collect();
    let req = SurfaceRequest {
        deltas: &[field.delta],
        kdzs: &kdzs,
        eta: cfg.geometry.eta.value,
        rabi: cfg.field.rabi.value,
        recoil: cfg.lattice.recoil.value,
        include_leakage: false,
        speed_factor: cfg.lattice.speed_factor.value,
        quad,
    };
    let pts = fidelity_surface(&ctx, &req);
    let fit: Vec<(f64, f64)> = pts
        .iter()
        .filter_map(|p| {
            p.metrics
                .as_ref()
                .ok()
                .filter(|m| m.kappa.is_finite() && m.kappa > 0.0)
                .map(|m| (p.kdz, m.kappa))
        })
        .collect();
    if fit.len() >= 4 {
        let slope = kappa_separation_exponent(&fit);
        println!("kappa separation exponent over kdz in [1.0, 3.0]: {slope:.3}");
    }
    Ok(())
}
