//! CPHASE gate metrics: gate time, figure of merit, fidelities, leakage and
//! the self-consistency constraints of the operating point.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::dressed::{
    logical_pairs, CatalysisField, DressedContext, DressedError, PacketGeometry, QuadratureSpec,
};
use crate::float::Float;
use crate::half_int::HalfInt;
use crate::lattice::{energy_gap, motional_overlap, LatticeError, LatticeGeometry, MotionalState};

#[derive(Debug, Error)]
pub enum GateError {
    #[error(transparent)]
    Dressed(#[from] DressedError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Figures of merit of one CPHASE operating point.
#[derive(Clone, Copy, Debug)]
pub struct GateMetrics<F> {
    /// Gate time in 1/Γ; infinite when the interaction is separable.
    pub tau: F,
    /// Ratio of the differential shift to the worst scattering linewidth.
    pub kappa: F,
    /// Scattering-limited fidelity exp(−1/κ), including the resonant
    /// Condon-exposure survival factor.
    pub fidelity_scatter: F,
    /// Aggregate leakage probability (0 until a correction is applied).
    pub leak_prob: F,
    /// fidelity_scatter × (1 − leak_prob).
    pub fidelity_total: F,
    /// Differential shift in units of the on-resonance scattering rate.
    pub xi: F,
    /// Relative-coordinate probability inside the innermost Condon radius.
    pub condon_exposure: F,
    /// Set when the differential shift vanishes.
    pub separable: bool,
}

/// Metrics from a dressed logical Hamiltonian (leakage fields unset).
///
/// `h` carries the |Ω|²-scaled elements; `rabi` recovers ξ's normalization
/// and `condon_exposure` the resonant-region survival penalty.
pub fn cphase_metrics<F: Float>(
    h: &[[Complex<F>; 4]; 4],
    rabi: F,
    condon_exposure: F,
) -> GateMetrics<F> {
    let diff = (h[0][0] + h[3][3] - h[1][1] - h[2][2]).re;
    let scale = (0..4).map(|d| h[d][d].norm()).fold(F::zero(), F::max);
    let max_im = (0..4).map(|d| h[d][d].im.abs()).fold(F::zero(), F::max);
    let survival = F::one() - condon_exposure;

    if diff.abs() <= scale * F::of(1e-14) {
        return GateMetrics {
            tau: F::infinity(),
            kappa: F::zero(),
            fidelity_scatter: F::zero(),
            leak_prob: F::zero(),
            fidelity_total: F::zero(),
            xi: F::zero(),
            condon_exposure,
            separable: true,
        };
    }
    let tau = F::PI() / diff.abs();
    let kappa = if max_im > F::zero() {
        diff.abs() / (F::two() * F::PI() * max_im)
    } else {
        F::infinity()
    };
    let fidelity = if kappa.is_infinite() {
        survival
    } else {
        (-kappa.recip()).exp() * survival
    };
    let xi = if rabi > F::zero() {
        diff / (rabi * rabi)
    } else {
        F::zero()
    };
    GateMetrics {
        tau,
        kappa,
        fidelity_scatter: fidelity,
        leak_prob: F::zero(),
        fidelity_total: fidelity,
        xi,
        condon_exposure,
        separable: false,
    }
}

/// Worst-case survival over the logical basis and the |±⟩⊗|±⟩ product
/// inputs, with local phases absorbed so an ideal diagonal evolution scores
/// one. Exchange couplings are folded in through the 01/10 block.
pub fn product_state_fidelity<F: Float>(h: &[[Complex<F>; 4]; 4], tau: F) -> F {
    let i = Complex::new(F::zero(), F::one());
    let t = Complex::from(tau);
    // diagonal propagator phases with local compensation
    let e: Vec<Complex<F>> = (0..4).map(|k| (-i * h[k][k] * t).exp()).collect();
    // local-phase compensation: α + β_a + γ_b matched on 00, 01, 10
    let phase = |z: Complex<F>| z / Complex::from(z.norm().max(F::of(1e-300)));
    let comp00 = phase(e[0]);
    let comp01 = phase(e[1]) / comp00;
    let comp10 = phase(e[2]) / comp00;
    let target11 = Complex::new(-F::one(), F::zero()); // CPHASE on |11⟩
    let corrected = [
        e[0] / comp00,
        e[1] / (comp00 * comp01),
        e[2] / (comp00 * comp10),
        e[3] / (comp00 * comp01 * comp10 * target11),
    ];
    // exchange block mixes 01/10 amplitudes
    let x = h[1][2];
    let (c_x, s_x) = if x.norm() > F::zero() {
        let arg = x * t;
        (arg.cos(), -i * arg.sin())
    } else {
        (
            Complex::new(F::one(), F::zero()),
            Complex::new(F::zero(), F::zero()),
        )
    };

    let amps = [F::zero(), F::one()]; // |0⟩, |1⟩ and the |±⟩ handled below
    let mut worst = F::infinity();
    let mut states: Vec<[F; 2]> = Vec::new();
    for &a in &amps {
        states.push([F::one() - a, a]);
    }
    states.push([F::half().sqrt(), F::half().sqrt()]);
    for sa in &states {
        for sb in &states {
            let w = [sa[0] * sb[0], sa[0] * sb[1], sa[1] * sb[0], sa[1] * sb[1]];
            // overlap ⟨ψ|U†V|ψ⟩ with the exchange acting inside (01, 10)
            let mut acc = Complex::new(F::zero(), F::zero());
            acc += Complex::from(w[0] * w[0]) * corrected[0];
            acc += Complex::from(w[3] * w[3]) * corrected[3];
            acc += Complex::from(w[1] * w[1] + w[2] * w[2])
                * (corrected[1] + corrected[2])
                * Complex::from(F::half())
                * c_x;
            acc += Complex::from(F::two() * w[1] * w[2])
                * (corrected[1] + corrected[2])
                * Complex::from(F::half())
                * s_x;
            let f = acc.norm_sqr();
            worst = worst.min(f);
        }
    }
    worst
}

/// One leakage channel: electronic coupling strength, motional overlap
/// suppression and the energy gap to the target configuration.
#[derive(Clone, Debug)]
pub struct LeakageChannel<F> {
    pub coupling: F,
    pub overlap: F,
    pub gap: F,
}

/// Worst-case two-level population bound per channel, multiplicative
/// survival across channels. The bound is additionally capped by the
/// finite-time transfer (V τ)², which keeps exactly degenerate but weakly
/// coupled channels (e.g. the atom-swap configuration) from saturating
/// artificially; strong resonant channels still reach p = 1.
pub fn leakage_correction<F: Float>(
    metrics: &GateMetrics<F>,
    channels: &[LeakageChannel<F>],
    tau: F,
) -> GateMetrics<F> {
    let mut survival = F::one();
    for c in channels {
        let v = (c.coupling * c.overlap).abs();
        let half_gap = c.gap.abs() * F::half();
        let p = if v == F::zero() {
            F::zero()
        } else {
            let bound = v * v / (v * v + half_gap * half_gap);
            let transfer = (v * tau) * (v * tau);
            bound.min(transfer).min(F::one())
        };
        survival *= F::one() - p;
    }
    let leak_prob = F::one() - survival;
    GateMetrics {
        leak_prob,
        fidelity_total: metrics.fidelity_scatter * survival,
        ..*metrics
    }
}

/// Self-consistency inputs of Eq.-style intensity/detuning constraints.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintParams<F> {
    pub il_over_i0: F,
    pub ic_over_i0: F,
    /// Lattice detuning in Γ.
    pub delta_l: F,
    /// Catalysis detuning in Γ.
    pub delta_c: F,
    /// Trap frequency in Γ.
    pub omega_osc: F,
    /// Recoil energy in ħΓ.
    pub e_r: F,
    /// Localization η.
    pub eta: F,
}

#[derive(Clone, Copy, Debug)]
pub struct ConstraintReport<F> {
    /// (I_c/I_L) / (η² (Δ_c/Δ_L)²)
    pub left_margin: F,
    /// [(1/ξ)(ω_osc/Γ)(I₀/I_L)] / (I_c/I_L)
    pub right_margin: F,
    pub satisfied: bool,
    /// Gate speed 1/τ in Hz.
    pub gate_speed_hz: F,
}

/// Evaluate both intensity inequalities as margins and the implied physical
/// gate speed; "much less than" is operationalized as a configurable factor.
pub fn constraint_check<F: Float>(
    p: &ConstraintParams<F>,
    xi: F,
    gamma_hz: F,
    margin_required: F,
) -> ConstraintReport<F> {
    let xi = xi.abs();
    let lhs_left = p.eta * p.eta * (p.delta_c / p.delta_l) * (p.delta_c / p.delta_l);
    let ratio = p.ic_over_i0 / p.il_over_i0;
    let left_margin = ratio / lhs_left;
    let rhs_right = if xi > F::zero() {
        (F::one() / xi) * p.omega_osc / p.il_over_i0
    } else {
        F::infinity()
    };
    let right_margin = rhs_right / ratio;
    let gate_speed_hz = xi * p.ic_over_i0 * gamma_hz;
    ConstraintReport {
        left_margin,
        right_margin,
        satisfied: left_margin > margin_required && right_margin > margin_required,
        gate_speed_hz,
    }
}

/// Catalysis intensity implied by running the gate at `speed_factor` times
/// the trap frequency, plus the matching lattice intensity at I_L = 10 I_c.
pub fn operating_intensities<F: Float>(xi: F, omega_osc: F, speed_factor: F) -> (F, F) {
    let ic = speed_factor * omega_osc / xi.abs().max(F::of(1e-300));
    (ic, F::of(10.0) * ic)
}

/// Enumerate leakage channels of every logical state: two-atom ground
/// product targets reachable with ΔM_tot = 0, vibrational levels ≤ nvib_max
/// per atom. The electronic couplings come from the dressed matrix (at the
/// physical Rabi frequency), overlaps and gaps from the lattice wells.
#[allow(clippy::too_many_arguments)]
pub fn leakage_channels<F: Float>(
    ctx: &DressedContext<F>,
    field: &CatalysisField<F>,
    geom: &PacketGeometry<F>,
    lattice: &LatticeGeometry<F>,
    quad: &QuadratureSpec,
    nvib_max: usize,
) -> Result<Vec<LeakageChannel<F>>, GateError> {
    let spec = &ctx.tables.spec;
    let logical = logical_pairs(spec);
    let (targets, couplings) = ctx.logical_couplings(field, geom, quad)?;

    // wells per sublevel
    let mut wells: Vec<((HalfInt, HalfInt), MotionalState<F>, F)> = Vec::new();
    for f in [spec.f_low(), spec.f_high()] {
        for m in f.projections() {
            let w = lattice.well_parameters(spec, f, m)?;
            let u = lattice.well_depth_offset(spec, f, m)?;
            wells.push(((f, m), w, u));
        }
    }
    let well_of = |f: HalfInt, m: HalfInt| -> &((HalfInt, HalfInt), MotionalState<F>, F) {
        wells
            .iter()
            .find(|((wf, wm), _, _)| *wf == f && *wm == m)
            .expect("all sublevels have wells")
    };

    let mut channels = Vec::new();
    for (li, lp) in logical.iter().enumerate() {
        let (_, wa_i, _) = well_of(lp.fa, lp.ma);
        let (_, wb_i, _) = well_of(lp.fb, lp.mb);
        let psi_a = MotionalState { n: 0, ..*wa_i };
        let psi_b = MotionalState { n: 0, ..*wb_i };
        for (ti, tp) in targets.iter().enumerate() {
            if tp.mu_tot() != lp.mu_tot() {
                continue;
            }
            let coupling = couplings[ti][li].norm();
            if coupling == F::zero() {
                continue;
            }
            let same_internal = tp == lp;
            let (_, wa_t, ua_t) = well_of(tp.fa, tp.ma);
            let (_, wb_t, ub_t) = well_of(tp.fb, tp.mb);
            let hyperfine_gap = tp.hyperfine_offset(spec) - lp.hyperfine_offset(spec);
            for na in 0..=nvib_max {
                for nb in 0..=nvib_max {
                    if same_internal && na == 0 && nb == 0 {
                        continue;
                    }
                    let ta = MotionalState { n: na, ..*wa_t };
                    let tb = MotionalState { n: nb, ..*wb_t };
                    let ov = motional_overlap(&psi_a, &ta) * motional_overlap(&psi_b, &tb);
                    if ov.abs() < F::of(1e-10) {
                        continue;
                    }
                    let gap = energy_gap(&psi_a, &ta, spec, lattice)?
                        + energy_gap(&psi_b, &tb, spec, lattice)?
                        + hyperfine_gap;
                    let _ = (ua_t, ub_t);
                    channels.push(LeakageChannel {
                        coupling,
                        overlap: ov.abs(),
                        gap,
                    });
                }
            }
        }
    }
    Ok(channels)
}

/// One point of a fidelity sweep.
#[derive(Clone, Debug)]
pub struct SurfacePoint<F> {
    pub delta: F,
    pub kdz: F,
    pub metrics: Result<GateMetrics<F>, String>,
}

/// Parameters of a fidelity sweep.
pub struct SurfaceRequest<'a, F> {
    pub deltas: &'a [F],
    pub kdzs: &'a [F],
    pub eta: F,
    pub rabi: F,
    pub recoil: F,
    pub include_leakage: bool,
    /// Gate runs at this fraction of the trap frequency when sizing the
    /// physical Rabi frequency for leakage estimates.
    pub speed_factor: F,
    pub quad: QuadratureSpec,
}

/// Sweep the dressed gate metrics over (Δ, kΔz). Points are evaluated
/// in parallel over separations (sharing each column's spectra) and
/// aggregated in deterministic grid order; per-point failures are recorded
/// in place.
pub fn fidelity_surface<F: Float>(
    ctx: &DressedContext<F>,
    req: &SurfaceRequest<'_, F>,
) -> Vec<SurfacePoint<F>> {
    let logical = logical_pairs(&ctx.tables.spec);
    let columns: Vec<Vec<SurfacePoint<F>>> = req
        .kdzs
        .par_iter()
        .map(|&kdz| {
            let geom = PacketGeometry { eta: req.eta, kdz };
            let evaluated = ctx.evaluate(&logical, &logical, req.deltas, &geom, &req.quad);
            match evaluated {
                Err(e) => req
                    .deltas
                    .iter()
                    .map(|&delta| SurfacePoint {
                        delta,
                        kdz,
                        metrics: Err(e.to_string()),
                    })
                    .collect(),
                Ok(out) => req
                    .deltas
                    .iter()
                    .enumerate()
                    .map(|(d, &delta)| {
                        let m = &out.matrices[d];
                        let scale = Complex::from(req.rabi * req.rabi);
                        let mut h = [[Complex::new(F::zero(), F::zero()); 4]; 4];
                        for r in 0..4 {
                            for c in 0..4 {
                                h[r][c] = m[r * 4 + c] * scale;
                            }
                        }
                        let mut metrics = cphase_metrics(&h, req.rabi, out.condon_exposure[d]);
                        if req.include_leakage && !metrics.separable {
                            let leak = leakage_metrics_for(ctx, req, delta, kdz, &metrics);
                            match leak {
                                Ok(m2) => metrics = m2,
                                Err(e) => {
                                    return SurfacePoint {
                                        delta,
                                        kdz,
                                        metrics: Err(e.to_string()),
                                    }
                                }
                            }
                        }
                        SurfacePoint {
                            delta,
                            kdz,
                            metrics: Ok(metrics),
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(req.deltas.len() * req.kdzs.len());
    for (ki, _) in req.kdzs.iter().enumerate() {
        for (di, _) in req.deltas.iter().enumerate() {
            out.push(columns[ki][di].clone());
        }
    }
    out
}

fn leakage_metrics_for<F: Float>(
    ctx: &DressedContext<F>,
    req: &SurfaceRequest<'_, F>,
    delta: F,
    kdz: F,
    metrics: &GateMetrics<F>,
) -> Result<GateMetrics<F>, GateError> {
    let spec = ctx.tables.spec;
    let lattice = LatticeGeometry::from_separation(&spec, kdz, req.eta, req.recoil)?;
    let omega = lattice
        .well_parameters(&spec, spec.f_high(), HalfInt::ONE)?
        .omega;
    // physical Rabi frequency sized so the gate runs at speed_factor·ω_osc
    let diff_unit = metrics.xi; // differential per Ω²
    let rabi_sq = req.speed_factor * omega / diff_unit.abs().max(F::of(1e-300));
    let field = CatalysisField {
        delta,
        rabi: rabi_sq.sqrt(),
    };
    let geom = PacketGeometry { eta: req.eta, kdz };
    let channels = leakage_channels(ctx, &field, &geom, &lattice, &req.quad, 2)?;
    // physical gate time at the sized Rabi frequency
    let tau_phys = F::PI() / (diff_unit.abs() * rabi_sq).max(F::of(1e-300));
    let mut metrics = *metrics;
    metrics.tau = tau_phys;
    Ok(leakage_correction(&metrics, &channels, tau_phys))
}

/// Least-squares exponent of κ versus separation on a log-log grid.
pub fn kappa_separation_exponent<F: Float>(points: &[(F, F)]) -> F {
    let n = F::of_usize(points.len());
    let mut sx = F::zero();
    let mut sy = F::zero();
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for &(kdz, kappa) in points {
        let x = kdz.ln();
        let y = kappa.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Peak of a fidelity scan (by total fidelity).
pub fn peak_point<F: Float>(points: &[SurfacePoint<F>]) -> Option<&SurfacePoint<F>> {
    points.iter().filter(|p| p.metrics.is_ok()).max_by(|a, b| {
        let fa = a.metrics.as_ref().unwrap().fidelity_total;
        let fb = b.metrics.as_ref().unwrap().fidelity_total;
        fa.partial_cmp(&fb).unwrap()
    })
}
