//! CSV and JSON emission for the command-line front end.
//!
//! CSV uses '.' decimals, ',' separators and '#'-prefixed metadata lines
//! carrying the configuration hash; numbers are printed with 13 significant
//! digits so reruns are byte-identical and golden files are meaningful.

use num_complex::Complex64;
use serde_json::json;

use crate::gate::{ConstraintReport, GateMetrics, SurfacePoint};
use crate::half_int::HalfInt;
use crate::lattice::LatticeGeometry;
use crate::molecular::{AtomSpec, TrackedCurves};
use crate::threelevel::DressedGroundHamiltonian;

pub fn fmt(x: f64) -> String {
    if x == 0.0 {
        "0.000000000000e0".to_string()
    } else {
        format!("{x:.12e}")
    }
}

fn header(hash: u64, title: &str, lines: &[&str]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {title}\n"));
    out.push_str(&format!("# config_hash: {hash:016x}\n"));
    for l in lines {
        out.push_str(&format!("# {l}\n"));
    }
    out
}

/// Tracked Born-Oppenheimer curves: one row per kr with λ and γ for every
/// state in tracked order.
pub fn potentials_csv(hash: u64, tracked: &TrackedCurves<f64>) -> String {
    let mut out = header(
        hash,
        "molecular potentials: tracked Born-Oppenheimer curves",
        &[
            "columns: kr, then lambda (hbar*Gamma) per state, then gamma (Gamma) per state",
            "state labels are (2*M_tot : pi : index within block)",
        ],
    );
    out.push_str("kr");
    for (m2, pi, k) in &tracked.labels {
        out.push_str(&format!(",lambda({m2}:{pi}:{k})"));
    }
    for (m2, pi, k) in &tracked.labels {
        out.push_str(&format!(",gamma({m2}:{pi}:{k})"));
    }
    out.push('\n');
    for (gi, kr) in tracked.kr.iter().enumerate() {
        out.push_str(&fmt(*kr));
        for curve in &tracked.lambda {
            out.push(',');
            out.push_str(&fmt(curve[gi]));
        }
        for curve in &tracked.gamma {
            out.push(',');
            out.push_str(&fmt(curve[gi]));
        }
        out.push('\n');
    }
    out
}

/// Fidelity sweep rows; failed points carry the error text in the last
/// column with NaN sentinels in the numeric fields.
pub fn surface_csv(hash: u64, points: &[SurfacePoint<f64>]) -> String {
    let mut out = header(
        hash,
        "CPHASE gate metrics over (delta, k*dz)",
        &[
            "columns: delta (Gamma), kdz, tau (1/Gamma at unit Rabi unless leakage sized it), \
             kappa, fidelity_scatter, leak_prob, fidelity_total, xi, condon_exposure, error",
        ],
    );
    out.push_str(
        "delta,kdz,tau,kappa,fidelity_scatter,leak_prob,fidelity_total,xi,condon_exposure,error\n",
    );
    for p in points {
        match &p.metrics {
            Ok(m) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},\n",
                    fmt(p.delta),
                    fmt(p.kdz),
                    fmt(m.tau),
                    fmt(m.kappa),
                    fmt(m.fidelity_scatter),
                    fmt(m.leak_prob),
                    fmt(m.fidelity_total),
                    fmt(m.xi),
                    fmt(m.condon_exposure),
                ));
            }
            Err(e) => {
                out.push_str(&format!(
                    "{},{},nan,nan,nan,nan,nan,nan,nan,{}\n",
                    fmt(p.delta),
                    fmt(p.kdz),
                    e.replace(',', ";"),
                ));
            }
        }
    }
    out
}

pub fn surface_summary_json(
    hash: u64,
    points: &[SurfacePoint<f64>],
    peak: Option<&SurfacePoint<f64>>,
) -> String {
    let failed = points.iter().filter(|p| p.metrics.is_err()).count();
    let peak_json = peak.map(|p| {
        let m = p.metrics.as_ref().unwrap();
        json!({
            "fidelity_total": m.fidelity_total,
            "fidelity_scatter": m.fidelity_scatter,
            "delta": p.delta,
            "kdz": p.kdz,
            "tau": m.tau,
            "kappa": m.kappa,
            "xi": m.xi,
            "leak_prob": m.leak_prob,
            "condon_exposure": m.condon_exposure,
        })
    });
    serde_json::to_string_pretty(&json!({
        "config_hash": format!("{hash:016x}"),
        "points": points.len(),
        "failed_points": failed,
        "peak": peak_json,
    }))
    .expect("summary serializes")
}

/// Sublevel potentials versus kz.
pub fn lattice_potentials_csv(
    hash: u64,
    spec: &AtomSpec<f64>,
    geom: &LatticeGeometry<f64>,
    kz: &[f64],
) -> String {
    let mut sublevels: Vec<(HalfInt, HalfInt)> = Vec::new();
    for f in [spec.f_low(), spec.f_high()] {
        for m in f.projections() {
            sublevels.push((f, m));
        }
    }
    let mut out = header(
        hash,
        "state-dependent lattice potentials",
        &["columns: kz, then U(2F:2m) in hbar*Gamma per sublevel"],
    );
    out.push_str("kz");
    for (f, m) in &sublevels {
        out.push_str(&format!(",U({}:{})", f.twice(), m.twice()));
    }
    out.push('\n');
    for &z in kz {
        out.push_str(&fmt(z));
        for (f, m) in &sublevels {
            out.push(',');
            out.push_str(&fmt(geom.sublevel_potential(spec, *f, *m, z)));
        }
        out.push('\n');
    }
    out
}

/// Motional overlap series versus kΔz (the three overlap curves plus the
/// near-degenerate vibrational channel).
pub struct OverlapRow {
    pub kdz: f64,
    /// ⟨ψ₀^{F',0}|ψ₀^{F,1}⟩
    pub mid: f64,
    /// ⟨ψ₀^{F,1}|ψ₀^{F,1}⟩ of the two species sites
    pub self_site: f64,
    /// ⟨ψ₀^{F,2}|ψ₀^{F,1}⟩
    pub stretched: f64,
    /// |⟨ψ₀^{F,1}|ψ₁^{F,−2}⟩|-type vibrational channel (relative coordinate)
    pub vibrational: f64,
    /// energy gap of that vibrational channel in hbar*Gamma
    pub gap: f64,
}

pub fn lattice_overlaps_csv(hash: u64, rows: &[OverlapRow]) -> String {
    let mut out = header(
        hash,
        "motional overlaps versus logical separation",
        &["columns: kdz, ov(F',0|F,1), ov(F,1|F,1), ov(F,2|F,1), vibrational_channel, gap"],
    );
    out.push_str("kdz,mid,self_site,stretched,vibrational,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(r.kdz),
            fmt(r.mid),
            fmt(r.self_site),
            fmt(r.stretched),
            fmt(r.vibrational),
            fmt(r.gap),
        ));
    }
    out
}

pub fn lattice_summary_json(hash: u64, crossing: Option<f64>, degeneracy: Option<f64>) -> String {
    serde_json::to_string_pretty(&json!({
        "config_hash": format!("{hash:016x}"),
        "worst_overlap_crosses_0p1_at_kdz": crossing,
        "vibrational_degeneracy_at_kdz": degeneracy,
    }))
    .expect("summary serializes")
}

fn matrix_json(h: &DressedGroundHamiltonian<f64>) -> serde_json::Value {
    let rows: Vec<Vec<serde_json::Value>> = (0..4)
        .map(|r| {
            (0..4)
                .map(|c| json!({"re": h.matrix[r][c].re, "im": h.matrix[r][c].im}))
                .collect()
        })
        .collect();
    json!(rows)
}

#[allow(clippy::too_many_arguments)]
pub fn threelevel_report_json(
    hash: u64,
    perturbative: &DressedGroundHamiltonian<f64>,
    exact: &DressedGroundHamiltonian<f64>,
    metrics: &GateMetrics<f64>,
    kappa_eq_asymptotic: f64,
    fidelity_worst_product: f64,
    separable: bool,
    condon_diagnostic: Option<String>,
) -> String {
    let mut max_dev: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let scale = exact.matrix[r][c].norm();
            if scale > 1e-15 {
                let dev = (perturbative.matrix[r][c] - exact.matrix[r][c]).norm() / scale;
                max_dev = max_dev.max(dev);
            }
        }
    }
    let kappa_ratio = if metrics.kappa > 0.0 {
        (kappa_eq_asymptotic - metrics.kappa).abs() / metrics.kappa
    } else {
        f64::NAN
    };
    serde_json::to_string_pretty(&json!({
        "config_hash": format!("{hash:016x}"),
        "perturbative": matrix_json(perturbative),
        "exact": matrix_json(exact),
        "max_relative_deviation": max_dev,
        "kappa_exact": metrics.kappa,
        "kappa_asymptotic": kappa_eq_asymptotic,
        "kappa_relative_difference": kappa_ratio,
        "tau": metrics.tau,
        "fidelity": metrics.fidelity_scatter,
        "fidelity_worst_product_input": fidelity_worst_product,
        "separable": separable,
        "condon_resonance": condon_diagnostic,
    }))
    .expect("report serializes")
}

pub fn constraints_json(
    hash: u64,
    xi: f64,
    report: &ConstraintReport<f64>,
    ic_over_i0: f64,
    il_over_i0: f64,
) -> String {
    serde_json::to_string_pretty(&json!({
        "config_hash": format!("{hash:016x}"),
        "xi": xi,
        "ic_over_i0": ic_over_i0,
        "il_over_i0": il_over_i0,
        "left_margin": report.left_margin,
        "right_margin": report.right_margin,
        "satisfied": report.satisfied,
        "gate_speed_hz": report.gate_speed_hz,
    }))
    .expect("report serializes")
}

/// Complex element formatting shared by diagnostics.
pub fn fmt_complex(z: Complex64) -> String {
    format!(
        "{}{}{}i",
        fmt(z.re),
        if z.im < 0.0 { "-" } else { "+" },
        fmt(z.im.abs())
    )
}
