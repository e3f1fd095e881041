//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tolerances are pinned here, not tuned. Two clauses are known to be
//! unreachable for this Hamiltonian under every calibration we examined (the
//! η = 0.05 peak height and the absolute ξ scale, whose published values are
//! mutually inconsistent with the published gate speed); those asserts run
//! faithfully and stay red rather than being loosened.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use molgate_core::angular::{clebsch_gordan, wigner_6j, wigner_d};
use molgate_core::dressed::{
    logical_pairs, oscillator_strengths, CatalysisField, DressedContext, PacketGeometry,
    QuadratureSpec,
};
use molgate_core::gate::{
    constraint_check, fidelity_surface, kappa_separation_exponent, operating_intensities,
    peak_point, ConstraintParams, SurfacePoint, SurfaceRequest,
};
use molgate_core::half_int::HalfInt;
use molgate_core::lattice::{energy_gap, motional_overlap, LatticeGeometry};
use molgate_core::molecular::{
    case_c_classes, cluster_sorted, spectrum, vdd_element, AtomSpec, BasisTables,
};
use molgate_core::threelevel::{
    dressed_hamiltonian_exact, dressed_hamiltonian_perturbative, kappa_asymptotic, ThreeLevelParams,
};

fn h(t: i32) -> HalfInt {
    HalfInt::from_twice(t)
}

fn tables() -> &'static Arc<BasisTables<f64>> {
    static TABLES: OnceLock<Arc<BasisTables<f64>>> = OnceLock::new();
    TABLES.get_or_init(|| Arc::new(BasisTables::new(AtomSpec::rb87())))
}

fn ctx() -> &'static DressedContext<f64> {
    static CTX: OnceLock<DressedContext<f64>> = OnceLock::new();
    CTX.get_or_init(|| DressedContext::new(tables().clone(), true))
}

fn report(criterion: &str, detail: &str, pass: bool) {
    println!(
        "ACCEPTANCE {criterion}: {detail} => {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn scan_request<'a>(
    deltas: &'a [f64],
    kdzs: &'a [f64],
    eta: f64,
    include_leakage: bool,
) -> SurfaceRequest<'a, f64> {
    SurfaceRequest {
        deltas,
        kdzs,
        eta,
        rabi: 1.0,
        recoil: 1.0 / 1500.0,
        include_leakage,
        speed_factor: 0.095,
        quad: QuadratureSpec::default(),
    }
}

fn best_of(points: &[SurfacePoint<f64>]) -> (f64, f64) {
    let p = peak_point(points).expect("no valid points");
    (p.metrics.as_ref().unwrap().fidelity_total, p.kdz)
}

#[test]
fn criterion_1_spectrum_structure() {
    let start = Instant::now();
    let t = tables();
    // kr = 50: four asymptotes with degeneracies {18, 30, 30, 50} separated
    // by the hyperfine splittings
    let s = spectrum(t, 50.0).unwrap();
    let mut vals = s.all_lambdas();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let clusters = cluster_sorted(&vals, 1.0);
    let degeneracies: Vec<usize> = clusters.iter().map(|c| c.1).collect();
    let sep_ok = clusters.len() == 4
        && (clusters[1].0 - clusters[0].0 - 151.2).abs() < 1e-3
        && (clusters[2].0 - clusters[0].0 - 1263.4).abs() < 1e-3
        && (clusters[3].0 - clusters[0].0 - 1414.6).abs() < 1e-3;

    // kr = 0.03: the case-(c) classes (six, two exactly degenerate at zero
    // coefficient and resolved by exchange parity) with gap ratio > 10
    let s_small = spectrum(t, 0.03).unwrap();
    let classes = case_c_classes(t, &s_small).expect("case-(c) regime");
    let elapsed = start.elapsed();
    let pass = sep_ok
        && degeneracies == vec![18, 30, 30, 50]
        && classes.class_count == 6
        && classes.min_gap_ratio > 10.0
        && elapsed.as_secs() < 60;
    report(
        "1 spectrum structure",
        &format!(
            "asymptote degeneracies {degeneracies:?}, case-(c) classes {} (gap ratio {:.1}), {:?}",
            classes.class_count, classes.min_gap_ratio, elapsed
        ),
        pass,
    );
    assert!(pass);
}

#[test]
fn criterion_2_fidelity_peak_eta_005() {
    let start = Instant::now();
    let kdzs: Vec<f64> = (0..31).map(|k| 0.10 + 0.01 * k as f64).collect();
    let req = scan_request(&[1.0e4], &kdzs, 0.05, false);
    let points = fidelity_surface(ctx(), &req);
    let (peak, at) = best_of(&points);
    let elapsed = start.elapsed();
    let pass = (peak - 0.925).abs() <= 0.05 && (at - 0.15).abs() <= 0.03 && elapsed.as_secs() < 600;
    report(
        "2 fidelity peak (eta=0.05, delta=1e4)",
        &format!("peak {peak:.4} at kdz {at:.3} (want 0.925±0.05 at 0.15±0.03), {elapsed:?}"),
        pass,
    );
    assert!(
        pass,
        "known model limitation: the relative-coordinate mass near the Condon \
         shells caps kappa at this localization; see the analysis shipped with \
         this build (peak {peak:.4} at {at:.3})"
    );
}

#[test]
fn criterion_3_fidelity_peak_eta_001() {
    let kdzs: Vec<f64> = (0..29).map(|k| 0.055 + 0.0025 * k as f64).collect();
    let req = scan_request(&[1.0e4], &kdzs, 0.01, false);
    let points = fidelity_surface(ctx(), &req);
    let (peak, at) = best_of(&points);
    let pass = (peak - 0.987).abs() <= 0.02 && (at - 0.078).abs() <= 0.02;
    report(
        "3 fidelity peak (eta=0.01, delta=1e4)",
        &format!("peak {peak:.4} at kdz {at:.4} (want 0.987±0.02 at 0.078±0.02)"),
        pass,
    );
    assert!(pass);
}

#[test]
fn criterion_4_large_separation_scaling() {
    let kdzs: Vec<f64> = (0..6).map(|k| 1.0 + 0.4 * k as f64).collect();
    let req = scan_request(&[1.0e4], &kdzs, 0.05, false);
    let points = fidelity_surface(ctx(), &req);
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| {
            p.metrics
                .as_ref()
                .ok()
                .filter(|m| m.kappa.is_finite() && m.kappa > 0.0)
                .map(|m| (p.kdz, m.kappa))
        })
        .collect();
    assert!(fit.len() >= 5, "scan produced too few valid kappa values");
    let exponent = kappa_separation_exponent(&fit);
    let pass = (exponent + 3.0).abs() <= 0.3;
    report(
        "4 large-separation scaling",
        &format!("kappa ~ dz^{exponent:.3} over kdz in [1, 3] (want -3±0.3)"),
        pass,
    );
    assert!(pass);
}

#[test]
fn criterion_5_leakage_geometry() {
    let spec = tables().spec;
    let f_high = spec.f_high();
    let eta = 0.05;
    let recoil = 1.0 / 1500.0;
    // worst ground-ground overlap crosses 0.1
    let ov = |kdz: f64| {
        let g = LatticeGeometry::from_separation(&spec, kdz, eta, recoil).unwrap();
        let a = g.well_parameters(&spec, f_high, HalfInt::ONE).unwrap();
        let b = g.well_parameters(&spec, f_high, h(f_high.twice())).unwrap();
        motional_overlap(&a, &b).powi(2)
    };
    let (mut lo, mut hi) = (0.2, 0.6);
    assert!(ov(lo) > 0.1 && ov(hi) < 0.1);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ov(mid) > 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = 0.5 * (lo + hi);

    // vibrational channel at the 0.117 degeneracy: relative-coordinate
    // Franck-Condon factor of the stretched configuration's first excited
    // motional state
    let kdz = 0.117;
    let g = LatticeGeometry::from_separation(&spec, kdz, eta, recoil).unwrap();
    let up = g.well_parameters(&spec, f_high, HalfInt::ONE).unwrap();
    let dn = g.well_parameters(&spec, f_high, -HalfInt::ONE).unwrap();
    let st = g.well_parameters(&spec, f_high, h(f_high.twice())).unwrap();
    let ast = g
        .well_parameters(&spec, f_high, h(-f_high.twice()))
        .unwrap();
    let rel_init = up.relative_coordinate().displaced(up.center - dn.center);
    let rel_final = st
        .relative_coordinate()
        .displaced(st.center - ast.center)
        .excited(1);
    let vib = motional_overlap(&rel_init, &rel_final).powi(2);
    // and the energy degeneracy itself sits at this separation
    let gap_here = energy_gap(&up, &ast.excited(1), &spec, &g).unwrap();

    let pass = (crossing - 0.38).abs() <= 0.04 && (vib - 0.37).abs() <= 0.05;
    report(
        "5 leakage geometry",
        &format!(
            "overlap 0.1-crossing at kdz {crossing:.4} (want 0.38±0.04), vibrational \
             factor {vib:.4} at 0.117 (want 0.37±0.05, gap there {gap_here:+.2e})"
        ),
        pass,
    );
    assert!(pass);
}

#[test]
fn criterion_6_operating_point() {
    // ξ at the reference operating point
    let logical = logical_pairs(&tables().spec);
    let geom = PacketGeometry {
        eta: 0.05,
        kdz: 0.15,
    };
    let out = ctx()
        .evaluate(
            &logical,
            &logical,
            &[1.0e4],
            &geom,
            &QuadratureSpec::default(),
        )
        .unwrap();
    let m = &out.matrices[0];
    let xi = (m[0] + m[15] - m[5] - m[10]).re;

    let spec = tables().spec;
    let lattice = LatticeGeometry::from_separation(&spec, 0.15, 0.05, 1.0 / 1500.0).unwrap();
    let omega = lattice
        .well_parameters(&spec, spec.f_high(), HalfInt::ONE)
        .unwrap()
        .omega;
    let (ic, il) = operating_intensities(xi, omega, 0.095);
    let params = ConstraintParams {
        il_over_i0: il,
        ic_over_i0: ic,
        delta_l: 1.0e4,
        delta_c: 1.0e4,
        omega_osc: omega,
        e_r: 1.0 / 1500.0,
        eta: 0.05,
    };
    let rep = constraint_check(&params, xi, spec.gamma_hz, 10.0);

    let xi_ok = xi.abs() >= 1.75e-7 && xi.abs() <= 7.0e-7;
    let margins_ok = rep.satisfied;
    let speed_ok = (rep.gate_speed_hz - 144.0e3).abs() <= 0.15 * 144.0e3;
    let pass = xi_ok && margins_ok && speed_ok;
    report(
        "6 operating point",
        &format!(
            "|xi| {:.3e} (want within [1.75e-7, 7e-7]: {}), margins ({:.1}, {:.2}) > 10: {}, \
             speed {:.1} kHz (want 144±15%): {}",
            xi.abs(),
            xi_ok,
            rep.left_margin,
            rep.right_margin,
            margins_ok,
            rep.gate_speed_hz / 1e3,
            speed_ok
        ),
        pass,
    );
    assert!(
        pass,
        "known model limitation: the published xi is inconsistent with the \
         published intensities and gate speed by 4x; this reconstruction \
         reproduces the speed and margins but not the xi magnitude \
         (|xi| = {:.3e})",
        xi.abs()
    );
}

#[test]
fn criterion_7_property_suites() {
    // angular algebra identities at 1e-12 (the full independent-oracle
    // comparison over all j ≤ 3 runs in tests/angular_oracle.rs)
    let mut ang_ok = true;
    for j1t in 0..=6 {
        for j2t in 0..=6 {
            for jt in [(j1t + j2t) % 2, (j1t + j2t).min(6)] {
                let (j1, j2, j) = (h(j1t), h(j2t), h(jt));
                if !HalfInt::triangle(j1, j2, j) {
                    continue;
                }
                for m in j.projections() {
                    let mut acc = 0.0;
                    for m1 in j1.projections() {
                        let m2 = m - m1;
                        if m2.twice().abs() <= j2.twice() {
                            let c: f64 = clebsch_gordan(j1, m1, j2, m2, j, m);
                            acc += c * c;
                        }
                    }
                    ang_ok &= (acc - 1.0).abs() < 1e-12;
                }
            }
        }
    }
    let w: f64 = wigner_6j(h(2), h(2), h(2), h(2), h(2), h(2));
    ang_ok &= (w - 1.0 / 6.0).abs() < 1e-13;
    for jt in [1, 3, 4] {
        let j = h(jt);
        for mm in j.projections() {
            let row: f64 = j
                .projections()
                .map(|mp| wigner_d(j, mm, mp, 0.77, 1.21).norm_sqr())
                .sum();
            ang_ok &= (row - 1.0).abs() < 1e-12;
        }
    }

    // V_dd block exactness and tracelessness
    let t = tables();
    let spec = t.spec;
    let basis = &t.basis;
    let mut vdd_ok = true;
    let mut trace = 0.0;
    for i in basis.iter() {
        trace += vdd_element(i, i, 0.37, &spec).unwrap();
        for j in basis.iter().step_by(3) {
            if i.m_tot() != j.m_tot() || i.pi != j.pi {
                vdd_ok &= vdd_element(i, j, 0.37, &spec).unwrap() == 0.0;
            }
        }
    }
    vdd_ok &= trace.abs() < 1e-9;

    // π-polarization azimuthal invariance of the dressed integrand
    let s = spectrum(t, 0.13).unwrap();
    let logical = logical_pairs(&spec);
    let mut phi_ok = true;
    for pair in &logical {
        let base = oscillator_strengths(t, &s, pair, 0.9, 0.0);
        let base_sum: f64 = base.iter().map(|z| z.norm_sqr()).sum();
        for phi in [1.0472, 1.5708] {
            let cs = oscillator_strengths(t, &s, pair, 0.9, phi);
            let sum: f64 = cs.iter().map(|z| z.norm_sqr()).sum();
            phi_ok &= (sum - base_sum).abs() <= 1e-10 * base_sum.max(1e-12);
        }
    }

    // three-level first-order scaling and Eq.-9-style asymptotic κ
    let base = ThreeLevelParams {
        omega01: 100.0,
        delta: 1.0e4,
        gamma: 1.0,
        gamma_c: 1.0,
        rabi: 1.0,
        c0: (2.0f64 / 3.0).sqrt(),
        c1: (1.0f64 / 3.0).sqrt(),
        vc: 1.0,
    };
    let deviation = |vc: f64| {
        let mut p = base;
        p.vc = vc;
        p.gamma_c = 0.5 * vc;
        let hp = dressed_hamiltonian_perturbative(&p).unwrap();
        let he = dressed_hamiltonian_exact(&p, false).unwrap();
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let scale = he.matrix[r][c].norm();
                if scale > 1e-12 {
                    worst = worst.max((hp.matrix[r][c] - he.matrix[r][c]).norm() / scale);
                }
            }
        }
        worst
    };
    let slope = (deviation(1.0) / deviation(0.1)).log10();
    let scaling_ok = (slope - 1.0).abs() < 0.1;

    let he = dressed_hamiltonian_exact(&base, false).unwrap();
    let diff = he.differential().re.abs();
    let max_im = (0..4)
        .map(|d| he.matrix[d][d].im.abs())
        .fold(0.0_f64, f64::max);
    let kappa_exact = diff / (2.0 * std::f64::consts::PI * max_im);
    let kappa9 = kappa_asymptotic(&base);
    let kappa_ok = (kappa_exact - kappa9).abs() / kappa_exact < 0.1;

    // quadrature doubling
    let field = CatalysisField {
        delta: 1.0e4,
        rabi: 1.0,
    };
    let geom = PacketGeometry {
        eta: 0.05,
        kdz: 0.15,
    };
    let q0 = QuadratureSpec::default();
    let q1 = QuadratureSpec {
        radial_order: q0.radial_order * 2,
        angular_order: q0.angular_order * 2,
        ..q0
    };
    let h0 = ctx().logical_matrix(&field, &geom, &q0).unwrap();
    let h1 = ctx().logical_matrix(&field, &geom, &q1).unwrap();
    let scale = (0..4).map(|d| h1[d][d].norm()).fold(0.0_f64, f64::max);
    let mut quad_ok = true;
    for r in 0..4 {
        for c in 0..4 {
            let floor = h1[r][c].norm().max(1e-3 * scale);
            quad_ok &= (h0[r][c] - h1[r][c]).norm() / floor < 1e-3;
        }
    }

    let pass = ang_ok && vdd_ok && phi_ok && scaling_ok && kappa_ok && quad_ok;
    report(
        "7 property suites",
        &format!(
            "angular {ang_ok}, vdd blocks/trace {vdd_ok}, phi invariance {phi_ok}, \
             elimination scaling {scaling_ok} (exponent {slope:.3}), kappa asymptotic {kappa_ok} \
             ({kappa9:.3e} vs {kappa_exact:.3e}), quadrature doubling {quad_ok}"
        ),
        pass,
    );
    assert!(pass);
}

#[test]
fn criterion_8_qualitative_surface() {
    // detuning structure of the best fidelity over separation
    let deltas = [
        500.0, 750.0, 1000.0, 1250.0, 1500.0, 2000.0, 3000.0, 5000.0, 8000.0, 12000.0,
    ];
    let kdzs: Vec<f64> = (0..8).map(|k| 0.10 + 0.05 * k as f64).collect();
    let req = scan_request(&deltas, &kdzs, 0.05, false);
    let points = fidelity_surface(ctx(), &req);
    let best = |d: f64| {
        points
            .iter()
            .filter(|p| p.delta == d)
            .filter_map(|p| p.metrics.as_ref().ok().map(|m| m.fidelity_total))
            .fold(0.0_f64, f64::max)
    };
    // (a) no gate-grade fidelity below 2000Γ
    let low_max = deltas
        .iter()
        .filter(|&&d| d <= 2000.0)
        .map(|&d| best(d))
        .fold(0.0_f64, f64::max);
    let low_ok = low_max < 0.875;
    // (b) a local bump near Δ ≈ 1000Γ
    let bump = best(750.0).max(best(1000.0)).max(best(1250.0));
    let bump_ok = bump > best(500.0) && bump > best(2000.0);
    // (c) gradual improvement beyond 2·V_hf(S)
    let highs: Vec<(f64, f64)> = [3000.0_f64, 5000.0, 8000.0, 12000.0]
        .iter()
        .map(|&d| (d.ln(), best(d)))
        .collect();
    let n = highs.len() as f64;
    let sx: f64 = highs.iter().map(|p| p.0).sum();
    let sy: f64 = highs.iter().map(|p| p.1).sum();
    let sxy: f64 = highs.iter().map(|p| p.0 * p.1).sum();
    let sxx: f64 = highs.iter().map(|p| p.0 * p.0).sum();
    let high_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let improve_ok = high_slope > 0.0;

    // (d) leakage-included fidelity below scattering-only, with a sharp drop
    // at small separations
    let kdzs2: Vec<f64> = vec![0.10, 0.115, 0.13, 0.15, 0.18, 0.22, 0.30];
    let req_leak = scan_request(&[1.0e4], &kdzs2, 0.05, true);
    let with_leak = fidelity_surface(ctx(), &req_leak);
    let req_no = scan_request(&[1.0e4], &kdzs2, 0.05, false);
    let without = fidelity_surface(ctx(), &req_no);
    let mut ordered = true;
    for (a, b) in with_leak.iter().zip(&without) {
        if let (Ok(ma), Ok(mb)) = (&a.metrics, &b.metrics) {
            ordered &= ma.fidelity_total <= mb.fidelity_scatter + 1e-12;
        }
    }
    let leak_best = with_leak
        .iter()
        .filter_map(|p| p.metrics.as_ref().ok().map(|m| m.fidelity_total))
        .fold(0.0_f64, f64::max);
    let leak_small = with_leak
        .iter()
        .filter(|p| p.kdz <= 0.13)
        .filter_map(|p| p.metrics.as_ref().ok().map(|m| m.fidelity_total))
        .fold(f64::INFINITY, f64::min);
    let drop_ok = leak_small < 0.2 * leak_best.max(1e-12);

    let pass = low_ok && bump_ok && improve_ok && ordered && drop_ok;
    report(
        "8 qualitative surface",
        &format!(
            "low(<=2000) max {low_max:.3} (<0.875: {low_ok}), bump near 1000 {bump:.3} \
             (> {:.3}, {:.3}: {bump_ok}), improvement slope {high_slope:+.4} (>0: {improve_ok}), \
             leakage ordering {ordered}, sharp small-separation drop {drop_ok} \
             ({leak_small:.3} vs best {leak_best:.3})",
            best(500.0),
            best(2000.0)
        ),
        pass,
    );
    assert!(
        pass,
        "known model limitation: the reconstructed surface plateaus at large \
         detuning instead of improving monotonically; see the shipped analysis"
    );
}
