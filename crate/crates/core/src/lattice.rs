//! State-dependent lin-θ-lin optical lattice along ẑ.
//!
//! Two counterpropagating beams with linear polarizations at relative angle θ
//! decompose into σ± standing waves I±(z) = sin²(kz ∓ θ/2). Blue detuning
//! traps atoms near intensity minima; the light shift of sublevel (F, m) is
//!
//! U_{F,m}(z) ∝ I₊(z) W₊(F, m) + I₋(z) W₋(F, m),
//!
//! with W_q(F, m) = Σ_{F'} R(F,F')² ⟨F m; 1 q|F' m+q⟩² the hyperfine-reduced
//! D1 coupling weights. For J = 1/2 this reduces to a scalar plus vector
//! shift; the two logical partner states of opposite species see identical
//! potentials and share a well, while the stretched m = ±F↑ states sit at the
//! exact σ∓ nodes.
//!
//! The separation knob is the distance between the two logical wells,
//! kΔz = arctan(tan θ / 2), and the overall depth is calibrated so the
//! logical well reproduces a requested localization η = k z₀, equivalently
//! ħω_osc = E_R/η². Lengths are in 1/k, energies in ħΓ, frequencies in Γ.

use thiserror::Error;

use crate::angular::clebsch_gordan;
use crate::float::Float;
use crate::half_int::HalfInt;
use crate::molecular::{hf_dipole_factor, AtomSpec};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("sublevel potential has no trapping minimum")]
    NoMinimum,
    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),
}

/// Lattice geometry and depth calibration.
#[derive(Clone, Copy, Debug)]
pub struct LatticeGeometry<F> {
    /// Polarization angle θ between the beam polarizations.
    pub theta: F,
    /// Maximum light shift U₀ in ħΓ, defined through ħω_osc = 2√(2U₀E_R/3)
    /// of the logical well.
    pub u0: F,
    /// Recoil energy E_R in ħΓ.
    pub recoil: F,
    /// Internal potential scale multiplying the weight sums.
    scale: F,
}

/// Harmonic level of one sublevel's well.
#[derive(Clone, Copy, Debug)]
pub struct MotionalState<F> {
    pub f: HalfInt,
    pub mf: HalfInt,
    /// Vibrational quantum number.
    pub n: usize,
    /// Well center in units of 1/k.
    pub center: F,
    /// Trap frequency in Γ.
    pub omega: F,
    /// Ground-state rms width k·z₀ of this well.
    pub z0: F,
}

/// Polarization coupling weight W_q(F, m) for q = +1, −1, 0, built from the
/// hyperfine-reduced D1 dipole couplings.
pub fn sublevel_weight<F: Float>(spec: &AtomSpec<F>, f: HalfInt, mf: HalfInt, q_twice: i32) -> F {
    let q = HalfInt::from_twice(q_twice);
    let one = HalfInt::ONE;
    let mut w = F::zero();
    for fp in [spec.f_low(), spec.f_high()] {
        let r: F = hf_dipole_factor(spec.nuclear_spin, f, fp);
        let cg: F = clebsch_gordan(f, mf, one, q, fp, mf + q);
        w += r * r * cg * cg;
    }
    w
}

impl<F: Float> LatticeGeometry<F> {
    /// Geometry fixed by the logical well separation kΔz and localization η;
    /// the depth is calibrated so the logical well has ħω = E_R/η².
    pub fn from_separation(
        spec: &AtomSpec<F>,
        kdz: F,
        eta: F,
        recoil: F,
    ) -> Result<Self, LatticeError> {
        if !(kdz > F::zero()) || !(eta > F::zero()) || !(recoil > F::zero()) {
            return Err(LatticeError::InvalidGeometry(
                "kdz, eta and recoil must be positive".into(),
            ));
        }
        if kdz >= F::FRAC_PI_2() {
            return Err(LatticeError::InvalidGeometry(
                "separation exceeds a quarter lattice period".into(),
            ));
        }
        let theta = (F::two() * kdz.tan()).atan();
        let mut geom = LatticeGeometry {
            theta,
            u0: F::zero(),
            recoil,
            scale: F::one(),
        };
        // curvature of the logical well at unit scale fixes the depth
        let f_high = spec.f_high();
        let trial = geom.well_parameters(spec, f_high, HalfInt::ONE)?;
        let omega_target = recoil / (eta * eta);
        // ħω ∝ √scale
        let ratio = omega_target / trial.omega;
        geom.scale = ratio * ratio;
        let omega_check = geom.well_parameters(spec, f_high, HalfInt::ONE)?.omega;
        geom.u0 = F::of(3.0) * omega_check * omega_check / (F::of(8.0) * recoil);
        Ok(geom)
    }

    /// Logical well separation kΔz implied by the polarization angle.
    pub fn logical_separation(&self) -> F {
        (self.theta.tan() * F::half()).atan()
    }

    /// σ± intensities at position kz.
    fn intensities(&self, kz: F) -> (F, F) {
        let sp = (kz - self.theta * F::half()).sin();
        let sm = (kz + self.theta * F::half()).sin();
        (sp * sp, sm * sm)
    }

    /// Light-shift potential of sublevel (F, m) at position kz, in ħΓ.
    pub fn sublevel_potential(&self, spec: &AtomSpec<F>, f: HalfInt, mf: HalfInt, kz: F) -> F {
        let (ip, im) = self.intensities(kz);
        let wp = sublevel_weight(spec, f, mf, 2);
        let wm = sublevel_weight(spec, f, mf, -2);
        self.scale * (ip * wp + im * wm)
    }

    /// dU/d(kz) and d²U/d(kz)², analytic.
    fn derivatives(&self, spec: &AtomSpec<F>, f: HalfInt, mf: HalfInt, kz: F) -> (F, F) {
        let wp = sublevel_weight(spec, f, mf, 2);
        let wm = sublevel_weight(spec, f, mf, -2);
        let ap = F::two() * kz - self.theta;
        let am = F::two() * kz + self.theta;
        let d1 = self.scale * (wp * ap.sin() + wm * am.sin());
        let d2 = F::two() * self.scale * (wp * ap.cos() + wm * am.cos());
        (d1, d2)
    }

    /// Locate the trapping well of a sublevel and its harmonic parameters.
    pub fn well_parameters(
        &self,
        spec: &AtomSpec<F>,
        f: HalfInt,
        mf: HalfInt,
    ) -> Result<MotionalState<F>, LatticeError> {
        // coarse scan of one period, then derivative bisection
        let n_scan = 720;
        let mut best = (F::infinity(), F::zero());
        for i in 0..n_scan {
            let kz = -F::FRAC_PI_2() + F::PI() * F::of_usize(i) / F::of_usize(n_scan);
            let u = self.sublevel_potential(spec, f, mf, kz);
            if u < best.0 {
                best = (u, kz);
            }
        }
        let span = F::PI() / F::of_usize(n_scan);
        let (mut a, mut b) = (best.1 - span, best.1 + span);
        let (da, _) = self.derivatives(spec, f, mf, a);
        let (db, _) = self.derivatives(spec, f, mf, b);
        if da > F::zero() || db < F::zero() {
            // flat potential (no vector structure and θ = π/2 edge cases)
            return Err(LatticeError::NoMinimum);
        }
        for _ in 0..200 {
            let mid = (a + b) * F::half();
            let (dm, _) = self.derivatives(spec, f, mf, mid);
            if dm <= F::zero() {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < F::of(1e-15) {
                break;
            }
        }
        let center = (a + b) * F::half();
        let (_, curv) = self.derivatives(spec, f, mf, center);
        if !(curv > F::zero()) {
            return Err(LatticeError::NoMinimum);
        }
        // ħω = √(2 E_R U'') with U'' in ħΓ per (kz)²
        let omega = (F::two() * self.recoil * curv).sqrt();
        let z0 = (self.recoil / omega).sqrt();
        Ok(MotionalState {
            f,
            mf,
            n: 0,
            center,
            omega,
            z0,
        })
    }

    /// Well minimum energy of a sublevel, in ħΓ.
    pub fn well_depth_offset(
        &self,
        spec: &AtomSpec<F>,
        f: HalfInt,
        mf: HalfInt,
    ) -> Result<F, LatticeError> {
        let w = self.well_parameters(spec, f, mf)?;
        Ok(self.sublevel_potential(spec, f, mf, w.center))
    }
}

impl<F: Float> MotionalState<F> {
    pub fn excited(&self, n: usize) -> Self {
        MotionalState { n, ..*self }
    }

    /// Same oscillator displaced to a new center.
    pub fn displaced(&self, center: F) -> Self {
        MotionalState { center, ..*self }
    }

    /// Rescale to the relative-coordinate oscillator of a pair of identical
    /// wells (width × √2).
    pub fn relative_coordinate(&self) -> Self {
        MotionalState {
            z0: self.z0 * F::two().sqrt(),
            ..*self
        }
    }
}

/// Overlap ⟨ψ_{n_a}(center_a, ω_a) | ψ_{n_b}(center_b, ω_b)⟩ of displaced
/// harmonic-oscillator eigenstates with possibly unequal frequencies,
/// evaluated from the Hermite expansion and Gaussian moments.
pub fn motional_overlap<F: Float>(a: &MotionalState<F>, b: &MotionalState<F>) -> F {
    let alpha = F::one() / (F::two() * a.z0 * a.z0);
    let beta = F::one() / (F::two() * b.z0 * b.z0);
    let d = b.center - a.center;

    let p = alpha + beta;
    let mu = beta * d / p;
    let q = alpha * beta * d * d / (F::two() * p);

    // Hermite coefficient rows H_n(x) = Σ_k c_k x^k
    fn hermite_coeffs<F: Float>(n: usize) -> Vec<F> {
        let mut h0 = vec![F::zero(); n + 1];
        h0[0] = F::one();
        if n == 0 {
            return h0;
        }
        let mut h1 = vec![F::zero(); n + 1];
        h1[1] = F::two();
        for m in 1..n {
            let mut h2 = vec![F::zero(); n + 1];
            for k in 0..=m {
                if h1[k] != F::zero() {
                    h2[k + 1] += F::two() * h1[k];
                }
            }
            for k in 0..=n {
                if h0[k] != F::zero() {
                    h2[k] -= F::two() * F::of_usize(m) * h0[k];
                }
            }
            h0 = h1;
            h1 = h2;
        }
        h1
    }

    // shift a polynomial: p(t + s) from p(x)
    fn shift_poly<F: Float>(c: &[F], s: F) -> Vec<F> {
        let n = c.len();
        let mut out = vec![F::zero(); n];
        // binomial expansion per source power
        let mut binom = vec![vec![F::zero(); n]; n];
        for (k, row) in binom.iter_mut().enumerate() {
            row[0] = F::one();
            for j in 1..=k {
                row[j] = row[j - 1] * F::of_usize(k - j + 1) / F::of_usize(j);
            }
        }
        for (k, &ck) in c.iter().enumerate() {
            if ck == F::zero() {
                continue;
            }
            let mut s_pow = F::one();
            for j in (0..=k).rev() {
                // term c_k C(k, j) s^{k-j} t^j, iterate j descending so the
                // running power of s grows with k - j
                out[j] += ck * binom[k][k - j] * s_pow;
                s_pow *= s;
            }
        }
        out
    }

    // H_{n_a}(√α (t + μ)) and H_{n_b}(√β (t + μ − d)) as polynomials in t
    let scale_poly = |c: Vec<F>, w: F| -> Vec<F> {
        c.into_iter()
            .enumerate()
            .map(|(k, ck)| ck * w.powi(k as i32))
            .collect()
    };
    let ha = shift_poly(
        &scale_poly(hermite_coeffs::<F>(a.n), alpha.sqrt() * F::one()),
        mu,
    );
    let hb = shift_poly(&scale_poly(hermite_coeffs::<F>(b.n), beta.sqrt()), mu - d);

    // product polynomial
    let mut prod = vec![F::zero(); a.n + b.n + 1];
    for (i, &ca) in ha.iter().enumerate() {
        if ca == F::zero() {
            continue;
        }
        for (j, &cb) in hb.iter().enumerate() {
            if cb != F::zero() {
                prod[i + j] += ca * cb;
            }
        }
    }

    // Gaussian moments ∫ t^k e^{-p t²/2} dt
    let base = (F::two() * F::PI() / p).sqrt();
    let mut integral = F::zero();
    let mut moment = base; // k = 0
    let mut k = 0usize;
    while k < prod.len() {
        integral += prod[k] * moment;
        // next even moment: M_{k+2} = (k+1)/p · M_k
        moment = moment * F::of_usize(k + 1) / p;
        k += 2;
    }

    // normalizations (α/π)^{1/4} / √(2ⁿ n!)
    let norm = |w: F, n: usize| -> F {
        let mut fact = F::one();
        for j in 1..=n {
            fact *= F::of_usize(j);
        }
        (w / F::PI()).powf(F::of(0.25)) / (F::two().powi(n as i32) * fact).sqrt()
    };

    norm(alpha, a.n) * norm(beta, b.n) * (-q).exp() * integral
}

/// Energy difference (well minimum + (n + 1/2) ħω) between two motional
/// states, in ħΓ.
pub fn energy_gap<F: Float>(
    a: &MotionalState<F>,
    b: &MotionalState<F>,
    spec: &AtomSpec<F>,
    geom: &LatticeGeometry<F>,
) -> Result<F, LatticeError> {
    let ua = geom.well_depth_offset(spec, a.f, a.mf)?;
    let ub = geom.well_depth_offset(spec, b.f, b.mf)?;
    let ea = ua + (F::of_usize(a.n) + F::half()) * a.omega;
    let eb = ub + (F::of_usize(b.n) + F::half()) * b.omega;
    Ok(eb - ea)
}

/// Magnetic dipole-dipole shift −(2μ_e²/r³) P₂(cosθ) σ_{αz}σ_{βz} for a pair
/// of logical single-atom states, with σ_z projected onto g_F m_F.
pub fn vd_shift<F: Float>(
    spec: &AtomSpec<F>,
    a: (HalfInt, HalfInt),
    b: (HalfInt, HalfInt),
    theta: F,
    r: F,
    mu_e_sq: F,
) -> F {
    let f_high_val = spec.f_high().value::<F>();
    let g = |f: HalfInt| {
        if f == spec.f_high() {
            F::one() / f_high_val
        } else {
            -F::one() / f_high_val
        }
    };
    let sz_a = g(a.0) * a.1.value::<F>();
    let sz_b = g(b.0) * b.1.value::<F>();
    let c = theta.cos();
    let p2 = (F::of(3.0) * c * c - F::one()) * F::half();
    -F::two() * mu_e_sq / (r * r * r) * p2 * sz_a * sz_b
}
