//! Two interacting three-level atoms: dressed ground-state Hamiltonians and
//! gate figures of merit.
//!
//! Each atom carries a ground doublet {|0⟩, |1⟩} split by ω₀₁ and one excited
//! level |e⟩ addressed by a catalysis field of Rabi frequency Ω detuned by Δ.
//! Dipole-dipole coupling of strength V_c (with collective decay Γ_c) mixes
//! the symmetrized singly-excited pair states. Everything is expressed in
//! natural units ħ = 1 with energies and rates in units of the atomic
//! linewidth Γ.
//!
//! Two routes to the dressed 4×4 ground-state Hamiltonian coexist: the
//! first-order perturbative closed form, and exact adiabatic elimination of
//! the excited block. The closed form is kept exactly as derived so it can be
//! cross-checked rather than silently corrected; the elimination retains an
//! exchange path (|01⟩ → |0e⟩ → |e1⟩ → |01⟩) that the closed form drops, so
//! the two differ at first order in V_c with a coefficient suppressed by
//! ω₀₁/Δ.

use num_complex::Complex;
use thiserror::Error;

use crate::float::Float;
use crate::linalg::{solve_complex, LinalgError};

#[derive(Debug, Error)]
pub enum ThreeLevelError {
    #[error("parameter validation failed: {0}")]
    InvalidParams(String),
    #[error(
        "excited block is singular at this detuning (catalysis resonant with a molecular level)"
    )]
    CondonResonance,
}

/// Model parameters, energies and rates in units of Γ.
#[derive(Clone, Copy, Debug)]
pub struct ThreeLevelParams<F> {
    /// Ground-state splitting ω₀₁.
    pub omega01: F,
    /// Catalysis detuning Δ.
    pub delta: F,
    /// Atomic linewidth Γ (unity in natural units).
    pub gamma: F,
    /// Collective decay Γ_c.
    pub gamma_c: F,
    /// Rabi frequency Ω at unit oscillator strength.
    pub rabi: F,
    /// Oscillator amplitude of |0⟩ → |e⟩ (real).
    pub c0: F,
    /// Oscillator amplitude of |1⟩ → |e⟩ (real).
    pub c1: F,
    /// Dipole-dipole coupling strength V_c.
    pub vc: F,
}

impl<F: Float> ThreeLevelParams<F> {
    pub fn validate(&self) -> Result<(), ThreeLevelError> {
        if self.gamma <= F::zero() {
            return Err(ThreeLevelError::InvalidParams(
                "gamma must be positive".into(),
            ));
        }
        if self.gamma_c.abs() > self.gamma * (F::one() + F::of(1e-12)) {
            return Err(ThreeLevelError::InvalidParams(
                "|gamma_c| must not exceed gamma".into(),
            ));
        }
        let s = self.c0 * self.c0 + self.c1 * self.c1;
        if s > F::one() + F::of(1e-9) {
            return Err(ThreeLevelError::InvalidParams(
                "oscillator strengths must satisfy c0^2 + c1^2 <= 1".into(),
            ));
        }
        Ok(())
    }

    /// Collective linewidths [Γ_{0+}, Γ_{0-}, Γ_{1+}, Γ_{1-}].
    fn linewidths(&self) -> [F; 4] {
        [
            self.gamma + self.c0 * self.c0 * self.gamma_c,
            self.gamma - self.c0 * self.c0 * self.gamma_c,
            self.gamma + self.c1 * self.c1 * self.gamma_c,
            self.gamma - self.c1 * self.c1 * self.gamma_c,
        ]
    }
}

/// Dressed ground-state Hamiltonian on (|00⟩, |01⟩, |10⟩, |11⟩), light part
/// only; the bare ω₀₁ ladder is separable and excluded.
#[derive(Clone, Copy, Debug)]
pub struct DressedGroundHamiltonian<F> {
    pub matrix: [[Complex<F>; 4]; 4],
}

impl<F: Float> DressedGroundHamiltonian<F> {
    pub fn e00(&self) -> Complex<F> {
        self.matrix[0][0]
    }
    pub fn e01(&self) -> Complex<F> {
        self.matrix[1][1]
    }
    pub fn e10(&self) -> Complex<F> {
        self.matrix[2][2]
    }
    pub fn e11(&self) -> Complex<F> {
        self.matrix[3][3]
    }
    pub fn exchange(&self) -> Complex<F> {
        self.matrix[1][2]
    }

    /// E₀₀ + E₁₁ − E₀₁ − E₁₀, the differential shift driving the CPHASE.
    pub fn differential(&self) -> Complex<F> {
        self.e00() + self.e11() - self.e01() - self.e10()
    }
}

/// Complex light shift Λ(δ, Γ̃) = |Ω|²/(4(δ + iΓ̃/2)).
pub fn lambda_shift<F: Float>(delta: F, linewidth: F, rabi: F) -> Complex<F> {
    let num = rabi * rabi / F::of(4.0);
    let den = Complex::new(delta, linewidth * F::half());
    Complex::new(num, F::zero()) / den
}

/// Molecular detunings (δ_{1g}, δ_{2g}, δ_{3g}, δ_{4g}) for ground channel g.
pub fn molecular_detunings<F: Float>(p: &ThreeLevelParams<F>, g: usize) -> [F; 4] {
    let cg2 = if g == 0 { p.c0 * p.c0 } else { p.c1 * p.c1 };
    let shift = cg2 * p.vc;
    [
        shift + p.delta,
        -shift + p.delta,
        shift + p.delta + p.omega01,
        -shift + p.delta + p.omega01,
    ]
}

/// First-order dressed Hamiltonian, matrix elements in closed form.
pub fn dressed_hamiltonian_perturbative<F: Float>(
    p: &ThreeLevelParams<F>,
) -> Result<DressedGroundHamiltonian<F>, ThreeLevelError> {
    p.validate()?;
    let [g0p, g0m, g1p, g1m] = p.linewidths();
    let d0 = molecular_detunings(p, 0);
    let d1 = molecular_detunings(p, 1);
    let (c02, c12) = (p.c0 * p.c0, p.c1 * p.c1);
    let two = Complex::from(F::two());
    let half = Complex::from(F::half());

    let e00 = two * Complex::from(c02) * lambda_shift(d0[1], g0p, p.rabi);
    let e11 = two * Complex::from(c12) * lambda_shift(d1[3], g1p, p.rabi);
    let a = Complex::from(c02) * lambda_shift(d1[0], g1m, p.rabi);
    let b = Complex::from(c02) * lambda_shift(d1[1], g1p, p.rabi);
    let c = Complex::from(c12) * lambda_shift(d0[2], g0m, p.rabi);
    let d = Complex::from(c12) * lambda_shift(d0[3], g0p, p.rabi);
    let e01 = (a + b + c + d) * half;
    let exch = (b - a + d - c) * half;

    let z = Complex::new(F::zero(), F::zero());
    Ok(DressedGroundHamiltonian {
        matrix: [
            [e00, z, z, z],
            [z, e01, exch, z],
            [z, exch, e01, z],
            [z, z, z, e11],
        ],
    })
}

/// Exact adiabatic elimination of the excited block.
///
/// The non-Hermitian pair Hamiltonian is assembled on
/// {|00⟩, |01⟩, |10⟩, |11⟩, |0e⟩₊, |0e⟩₋, |1e⟩₊, |1e⟩₋} (plus |ee⟩ when
/// `include_ee` is set) and the ground block is dressed per degenerate ground
/// manifold: H′ = H_ge (E_g − H_ee)⁻¹ H_eg. Couplings between ground states
/// of different bare energy are dropped (secular approximation), matching the
/// structure of the perturbative result.
pub fn dressed_hamiltonian_exact<F: Float>(
    p: &ThreeLevelParams<F>,
    include_ee: bool,
) -> Result<DressedGroundHamiltonian<F>, ThreeLevelError> {
    p.validate()?;
    let nq = if include_ee { 5 } else { 4 };
    let [g0p, g0m, g1p, g1m] = p.linewidths();
    let (c0, c1) = (p.c0, p.c1);
    let u = Complex::new(p.vc, -p.gamma_c * F::half());
    let zero = Complex::new(F::zero(), F::zero());

    // Excited block on {0e+, 0e-, 1e+, 1e-, [ee]}, column-major.
    let mut hq = vec![zero; nq * nq];
    let set = |hq: &mut Vec<Complex<F>>, r: usize, c: usize, v: Complex<F>| {
        hq[c * nq + r] = v;
    };
    set(
        &mut hq,
        0,
        0,
        Complex::new(c0 * c0 * p.vc - p.delta, -g0p * F::half()),
    );
    set(
        &mut hq,
        1,
        1,
        Complex::new(-(c0 * c0 * p.vc) - p.delta, -g0m * F::half()),
    );
    set(
        &mut hq,
        2,
        2,
        Complex::new(c1 * c1 * p.vc - p.delta + p.omega01, -g1p * F::half()),
    );
    set(
        &mut hq,
        3,
        3,
        Complex::new(-(c1 * c1 * p.vc) - p.delta + p.omega01, -g1m * F::half()),
    );
    let upp = u * Complex::from(c0 * c1);
    set(&mut hq, 0, 2, upp);
    set(&mut hq, 2, 0, upp);
    set(&mut hq, 1, 3, -upp);
    set(&mut hq, 3, 1, -upp);
    if include_ee {
        set(&mut hq, 4, 4, Complex::new(-F::two() * p.delta, -p.gamma));
        // |ee⟩ couples to the superradiant states with √2-enhanced Rabi
        let wee0 = Complex::from(-p.rabi * c0 / F::two().sqrt());
        let wee1 = Complex::from(-p.rabi * c1 / F::two().sqrt());
        set(&mut hq, 4, 0, wee0);
        set(&mut hq, 0, 4, wee0);
        set(&mut hq, 4, 2, wee1);
        set(&mut hq, 2, 4, wee1);
    }

    // Laser couplings ⟨q|H|g⟩, real amplitudes on the excited basis.
    let s2 = F::two().sqrt();
    let q2 = F::two() * s2;
    let mut h_eg = [[F::zero(); 4]; 4];
    h_eg[0][0] = -p.rabi * c0 / s2; // |00⟩ → |0e⟩₊
    h_eg[3][2] = -p.rabi * c1 / s2; // |11⟩ → |1e⟩₊
    h_eg[1][0] = -p.rabi * c1 / q2;
    h_eg[1][1] = -p.rabi * c1 / q2;
    h_eg[1][2] = -p.rabi * c0 / q2;
    h_eg[1][3] = p.rabi * c0 / q2;
    h_eg[2][0] = -p.rabi * c1 / q2;
    h_eg[2][1] = p.rabi * c1 / q2;
    h_eg[2][2] = -p.rabi * c0 / q2;
    h_eg[2][3] = -p.rabi * c0 / q2;

    let e_g = [F::zero(), p.omega01, p.omega01, F::two() * p.omega01];

    let mut out = [[zero; 4]; 4];
    let classes: [&[usize]; 3] = [&[0], &[1, 2], &[3]];
    for class in classes {
        let e_ref = e_g[class[0]];
        for &j in class {
            // x = (E_ref − H_QQ)⁻¹ h_j
            let mut mat = vec![zero; nq * nq];
            for r in 0..nq {
                for c in 0..nq {
                    let d = if r == c { Complex::from(e_ref) } else { zero };
                    mat[c * nq + r] = d - hq[c * nq + r];
                }
            }
            let mut x = vec![zero; nq];
            for q in 0..4 {
                x[q] = Complex::from(h_eg[j][q]);
            }
            match solve_complex(&mut mat, &mut x, nq) {
                Ok(()) => {}
                Err(LinalgError::Singular) => return Err(ThreeLevelError::CondonResonance),
                Err(e) => {
                    return Err(ThreeLevelError::InvalidParams(format!(
                        "elimination failed: {e}"
                    )))
                }
            }
            for &it in class {
                let mut acc = zero;
                for q in 0..4 {
                    acc += Complex::from(h_eg[it][q]) * x[q];
                }
                out[it][j] = acc;
            }
        }
    }

    Ok(DressedGroundHamiltonian { matrix: out })
}

/// Asymptotic figure of merit κ, valid for |Δ| ≫ ω₀₁ ≫ |V_c| with Γ_c = Γ.
pub fn kappa_asymptotic<F: Float>(p: &ThreeLevelParams<F>) -> F {
    let (c02, c12) = (p.c0 * p.c0, p.c1 * p.c1);
    let r = F::two() * p.omega01 / p.delta;
    let inf = F::infinity();
    let arg1 = if c02 > F::zero() {
        (c02 + c12 * (r - F::one())) / (c02 * (c02 + F::one()))
    } else {
        inf
    };
    let arg2 = if c12 > F::zero() {
        (c02 * (r + F::one()) - c12) / (c12 * (c12 + F::one()))
    } else {
        inf
    };
    let m = arg1.min(arg2);
    if !m.is_finite() {
        return F::zero();
    }
    (p.vc * (c02 - c12) / (F::PI() * p.gamma) * m).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn base_params() -> ThreeLevelParams<f64> {
        ThreeLevelParams {
            omega01: 100.0,
            delta: 1.0e4,
            gamma: 1.0,
            gamma_c: 1.0,
            rabi: 1.0,
            c0: (2.0f64 / 3.0).sqrt(),
            c1: (1.0f64 / 3.0).sqrt(),
            vc: 1.0,
        }
    }

    #[test]
    fn generic_scalar_f32() {
        let v: num_complex::Complex<f32> = lambda_shift(1.0f32, 1.0, 1.0);
        assert!((v - num_complex::Complex::new(0.2f32, -0.1)).norm() < 1e-6);
        let p = ThreeLevelParams::<f32> {
            omega01: 100.0,
            delta: 1.0e4,
            gamma: 1.0,
            gamma_c: 0.5,
            rabi: 1.0,
            c0: (2.0f32 / 3.0).sqrt(),
            c1: (1.0f32 / 3.0).sqrt(),
            vc: 1.0,
        };
        let h = dressed_hamiltonian_perturbative(&p).unwrap();
        assert!(h.e00().re > 0.0);
    }

    #[test]
    fn lambda_shift_closed_form() {
        let v: C64 = lambda_shift(1.0, 1.0, 1.0);
        assert!((v - C64::new(0.2, -0.1)).norm() < 1e-15);
        let v: C64 = lambda_shift(5.0, 1.0, 0.0);
        assert_eq!(v, C64::new(0.0, 0.0));
        // far-detuned limit: Re → Ω²/(4δ), Im → 0
        let v: C64 = lambda_shift(1.0e9, 1.0, 1.0);
        assert!((v.re - 0.25e-9).abs() < 1e-22);
        assert!(v.im.abs() < 1e-18);
    }

    #[test]
    fn detunings_direct_substitution() {
        let mut p = base_params();
        p.c0 = 1.0;
        p.c1 = 0.0;
        p.vc = 2.0;
        p.delta = 10.0;
        p.omega01 = 100.0;
        assert_eq!(molecular_detunings(&p, 0), [12.0, 8.0, 112.0, 108.0]);
        // V_c = 0 collapses the pairs
        p.vc = 0.0;
        assert_eq!(molecular_detunings(&p, 0), [10.0, 10.0, 110.0, 110.0]);
        // sign flip swaps members of each pair
        p.vc = 2.0;
        let plus = molecular_detunings(&p, 0);
        p.vc = -2.0;
        let minus = molecular_detunings(&p, 0);
        assert_eq!(plus[0], minus[1]);
        assert_eq!(plus[2], minus[3]);
    }

    #[test]
    fn separable_limit_vanishing_coupling() {
        let mut p = base_params();
        p.vc = 0.0;
        p.gamma_c = 0.0;
        for h in [
            dressed_hamiltonian_perturbative(&p).unwrap(),
            dressed_hamiltonian_exact(&p, false).unwrap(),
        ] {
            assert!(h.exchange().norm() < 1e-15, "exchange must vanish");
            assert!(h.differential().norm() < 1e-15, "E00+E11-2E01 must vanish");
        }
        let hp = dressed_hamiltonian_perturbative(&p).unwrap();
        let he = dressed_hamiltonian_exact(&p, false).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!((hp.matrix[r][c] - he.matrix[r][c]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dark_state_channel() {
        let mut p = base_params();
        p.c0 = 0.8;
        p.c1 = 0.0;
        let h = dressed_hamiltonian_perturbative(&p).unwrap();
        assert_eq!(h.e11(), C64::new(0.0, 0.0));
        // with c1 = 0 both surviving channels sit at the bare detuning
        let expect = C64::from(p.c0 * p.c0) * lambda_shift(p.delta, p.gamma, p.rabi);
        assert!((h.e01() - expect).norm() < 1e-15);
    }

    #[test]
    fn exact_symmetry_under_exchange() {
        let p = base_params();
        let h = dressed_hamiltonian_exact(&p, false).unwrap();
        assert!((h.e01() - h.e10()).norm() < 1e-15);
        assert!((h.matrix[1][2] - h.matrix[2][1]).norm() < 1e-15);
        for d in 0..4 {
            assert!(h.matrix[d][d].im <= 0.0, "diagonal decay must be negative");
        }
    }

    #[test]
    fn perturbative_matches_exact_at_first_order() {
        // Γ_c rides along with V_c: both are facets of the same dipole-dipole
        // coupling, so the expansion parameter is the full complex strength.
        let deviation = |vc: f64| -> f64 {
            let mut p = base_params();
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
        let d1 = deviation(1e-3 * 100.0);
        let d2 = deviation(1e-2 * 100.0);
        let slope = (d2 / d1).log10();
        assert!(
            (slope - 1.0).abs() < 0.1,
            "deviation should scale linearly: d1={d1:.3e}, d2={d2:.3e}, exponent {slope:.3}"
        );
    }

    #[test]
    fn exact_departs_from_perturbative_at_strong_coupling() {
        let mut p = base_params();
        p.vc = p.omega01;
        p.delta = 500.0;
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
        assert!(worst > 0.1, "deviation at V_c = ω₀₁ only {worst:.3e}");
    }

    #[test]
    fn superradiant_subradiant_linewidths() {
        let mut p = base_params();
        p.omega01 = 1e12;
        p.gamma_c = 0.85;
        p.vc = 2.0;
        // At ω₀₁ → ∞ the ± sectors of the excited block decouple and their
        // eigen-decays approach Γ ± c_g² Γ_c.
        let c02 = p.c0 * p.c0;
        let c12 = p.c1 * p.c1;
        let u = C64::new(p.vc, -p.gamma_c * 0.5);
        for sign in [1.0, -1.0] {
            let a = C64::new(
                sign * c02 * p.vc - p.delta,
                -(p.gamma + sign * c02 * p.gamma_c) * 0.5,
            );
            let d = C64::new(
                sign * c12 * p.vc - p.delta + p.omega01,
                -(p.gamma + sign * c12 * p.gamma_c) * 0.5,
            );
            let b = u * C64::from(sign * p.c0 * p.c1);
            let disc = ((a - d) * (a - d) * C64::from(0.25) + b * b).sqrt();
            let l1 = (a + d) * C64::from(0.5) - disc;
            let l2 = (a + d) * C64::from(0.5) + disc;
            let mut decays = [-2.0 * l1.im, -2.0 * l2.im];
            decays.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut expect = [
                p.gamma + sign * c02 * p.gamma_c,
                p.gamma + sign * c12 * p.gamma_c,
            ];
            expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (dv, e) in decays.iter().zip(&expect) {
                assert!((dv - e).abs() < 1e-10, "decay {dv} vs {e}");
            }
        }
    }

    #[test]
    fn kappa_prefactor_zeroes() {
        let mut p = base_params();
        p.c0 = (0.5f64).sqrt();
        p.c1 = (0.5f64).sqrt();
        assert_eq!(kappa_asymptotic(&p), 0.0);
        let mut p = base_params();
        p.vc = 0.0;
        assert_eq!(kappa_asymptotic(&p), 0.0);
    }

    #[test]
    fn kappa_asymptotic_matches_exact_regime() {
        // Δ/ω₀₁ = 100, ω₀₁/V_c = 100, c0² = 2/3, c1² = 1/3, Γ_c = Γ
        let p = base_params();
        let kappa9 = kappa_asymptotic(&p);
        let he = dressed_hamiltonian_exact(&p, false).unwrap();
        let diff = he.differential().re.abs();
        let max_im = (0..4)
            .map(|d| he.matrix[d][d].im.abs())
            .fold(0.0_f64, f64::max);
        let kappa_exact = diff / (2.0 * std::f64::consts::PI * max_im);
        let rel = (kappa_exact - kappa9).abs() / kappa_exact;
        assert!(
            rel < 0.1,
            "kappa asymptotic {kappa9:.6e} vs exact {kappa_exact:.6e}, rel dev {rel:.3}"
        );
    }

    #[test]
    fn ee_inclusion_is_higher_order() {
        let p = base_params();
        let h0 = dressed_hamiltonian_exact(&p, false).unwrap();
        let h1 = dressed_hamiltonian_exact(&p, true).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let scale = h0.matrix[r][c].norm().max(1e-12);
                assert!(
                    (h0.matrix[r][c] - h1.matrix[r][c]).norm() / scale < 1e-3,
                    "|ee> inclusion should be a small correction at low saturation"
                );
            }
        }
    }
}
