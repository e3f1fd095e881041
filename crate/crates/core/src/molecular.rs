//! Molecular hyperfine structure of the S₁/₂ + P₁/₂ manifold.
//!
//! One atom of the pair occupies the ground S₁/₂ level and the other the
//! excited P₁/₂ level; both carry hyperfine structure F = I ± 1/2. The basis
//! states are symmetrized under exchange of the two atomic orbitals with
//! parity π = ±1, and all magnetic quantum numbers refer to the body-fixed
//! internuclear axis. The resonant dipole-dipole interaction conserves the
//! total projection M_tot and π, so the Hamiltonian block-diagonalizes and
//! each block is diagonalized independently as a function of the separation.
//!
//! Lengths are expressed through the dimensionless kr, energies in ħΓ and
//! decay rates in Γ.

use std::collections::HashMap;

use thiserror::Error;

use crate::angular::{clebsch_gordan, wigner_6j};
use crate::float::Float;
use crate::half_int::HalfInt;
use crate::linalg::{symmetric_eigen, LinalgError};

#[derive(Debug, Error)]
pub enum MolecularError {
    #[error("internuclear separation must be positive, got {0}")]
    NonPositiveSeparation(f64),
    #[error("eigensolver failed on block (2*M_tot={m_tot_twice}, pi={pi}): {source}")]
    Eigensolver {
        m_tot_twice: i32,
        pi: i8,
        source: LinalgError,
    },
}

/// Normalization of the dimensionless dipole operator D that drives the
/// laser coupling and the cooperative decay.
///
/// `BareCg` treats each F → F' channel with unit reduced strength, so matrix
/// elements are plain Clebsch-Gordan coefficients; per-sublevel π strengths
/// then differ between hyperfine levels, which is what gives the logical
/// states a first-order differential light shift. `HyperfineReduced` weights
/// each channel by the 6j recoupling factor of the physical dipole; for
/// J = 1/2 the π strengths of all sublevels are then equal and the
/// first-order differential cancels exactly. The dipole-dipole interaction
/// itself always carries the recoupling factors of its closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DipoleWeighting {
    BareCg,
    HyperfineReduced,
}

/// Atomic constants. Energies in ħΓ; `gamma_hz` is Γ/2π in Hz and only feeds
/// SI conversions at the interfaces.
#[derive(Clone, Copy, Debug)]
pub struct AtomSpec<F> {
    pub nuclear_spin: HalfInt,
    /// Ground hyperfine splitting V_hf(S₁/₂).
    pub vhf_ground: F,
    /// Excited hyperfine splitting V_hf(P₁/₂).
    pub vhf_excited: F,
    /// Γ/2π in Hz.
    pub gamma_hz: F,
    /// Near-field strength constant: 2d²k³ in units of ħΓ.
    pub dd_coefficient: F,
    /// Channel normalization of the laser/decay dipole operator.
    pub dipole_weighting: DipoleWeighting,
}

impl<F: Float> AtomSpec<F> {
    /// ⁸⁷Rb driven on the D1 line.
    pub fn rb87() -> Self {
        AtomSpec {
            nuclear_spin: HalfInt::from_twice(3),
            vhf_ground: F::of(1263.4),
            vhf_excited: F::of(151.2),
            gamma_hz: F::of(5.41e6),
            dd_coefficient: F::of(1.5),
            dipole_weighting: DipoleWeighting::BareCg,
        }
    }

    /// Per-channel strength factor of the laser/decay dipole operator.
    pub fn channel_factor(&self, f: HalfInt, fp: HalfInt) -> F {
        match self.dipole_weighting {
            DipoleWeighting::BareCg => F::one(),
            DipoleWeighting::HyperfineReduced => hf_dipole_factor(self.nuclear_spin, f, fp),
        }
    }

    pub fn f_low(&self) -> HalfInt {
        self.nuclear_spin - HalfInt::HALF
    }

    pub fn f_high(&self) -> HalfInt {
        self.nuclear_spin + HalfInt::HALF
    }
}

/// One exchange-symmetrized S+P pair state |S(F m_F), P(F' m_F'); π⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SymmetrizedPairState {
    pub f: HalfInt,
    pub mf: HalfInt,
    pub fp: HalfInt,
    pub mfp: HalfInt,
    pub pi: i8,
}

impl SymmetrizedPairState {
    pub fn m_tot(&self) -> HalfInt {
        self.mf + self.mfp
    }
}

/// All symmetrized basis states, ordered by (M_tot, π, F, F', m_F).
pub fn build_basis<F: Float>(spec: &AtomSpec<F>) -> Vec<SymmetrizedPairState> {
    let fs = [spec.f_low(), spec.f_high()];
    let mut states = Vec::new();
    for &f in &fs {
        for &fp in &fs {
            for mf in f.projections() {
                for mfp in fp.projections() {
                    for pi in [1i8, -1i8] {
                        states.push(SymmetrizedPairState { f, mf, fp, mfp, pi });
                    }
                }
            }
        }
    }
    states.sort_by_key(|s| {
        (
            s.m_tot().twice(),
            s.pi,
            s.f.twice(),
            s.fp.twice(),
            s.mf.twice(),
        )
    });
    states
}

/// Hyperfine recoupling factor of the dimensionless raising operator:
/// ⟨P₁/₂ F' m'|D†_q|S₁/₂ F m⟩ = R(F, F') ⟨F m, 1 q|F' m'⟩.
pub fn hf_dipole_factor<F: Float>(nuclear_spin: HalfInt, f: HalfInt, fp: HalfInt) -> F {
    let half = HalfInt::HALF;
    let one = HalfInt::ONE;
    let sixj: F = wigner_6j(half, fp, nuclear_spin, f, half, one);
    let phase_twice = f.twice() + nuclear_spin.twice() + 3;
    assert!(phase_twice % 2 == 0, "phase must be integral");
    let sign = if (phase_twice / 2).rem_euclid(2) == 0 {
        F::one()
    } else {
        -F::one()
    };
    sign * F::of_i32(f.twice() + 1).sqrt() * sixj
}

/// Angular brackets entering the dipole-dipole and cooperative-decay
/// elements: the anisotropic tensor part Σ_q c c − 3 c₀ c₀ always carries the
/// hyperfine recoupling factors of the closed-form interaction, while the
/// isotropic decay part uses the channel factors of the dipole-operator
/// normalization. Projection selection rules emerge from the coefficients.
fn dd_brackets<F: Float>(
    i: &SymmetrizedPairState,
    j: &SymmetrizedPairState,
    spec: &AtomSpec<F>,
) -> (F, F) {
    let one = HalfInt::ONE;
    let nuclear_spin = spec.nuclear_spin;
    let rr = hf_dipole_factor::<F>(nuclear_spin, i.f, j.fp)
        * hf_dipole_factor::<F>(nuclear_spin, j.f, i.fp);
    let cc = spec.channel_factor(i.f, j.fp) * spec.channel_factor(j.f, i.fp);
    let mut iso = F::zero();
    for qt in [-2, 0, 2] {
        let q = HalfInt::from_twice(qt);
        let c1: F = clebsch_gordan(j.f, j.mf, one, q, i.fp, i.mfp);
        let c2: F = clebsch_gordan(i.f, i.mf, one, q, j.fp, j.mfp);
        iso += c1 * c2;
    }
    let z1: F = clebsch_gordan(j.f, j.mf, one, HalfInt::ZERO, i.fp, i.mfp);
    let z2: F = clebsch_gordan(i.f, i.mf, one, HalfInt::ZERO, j.fp, j.mfp);
    (rr * (iso - F::of(3.0) * z1 * z2), cc * iso)
}

/// Dipole-dipole matrix element ⟨j|V_dd|i⟩ at separation kr, in ħΓ.
pub fn vdd_element<F: Float>(
    i: &SymmetrizedPairState,
    j: &SymmetrizedPairState,
    kr: F,
    spec: &AtomSpec<F>,
) -> Result<F, MolecularError> {
    if kr <= F::zero() {
        return Err(MolecularError::NonPositiveSeparation(
            kr.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if i.pi != j.pi {
        return Ok(F::zero());
    }
    let (aniso, _) = dd_brackets::<F>(i, j, spec);
    let pi = F::of_i32(i.pi as i32);
    Ok(pi * spec.dd_coefficient / (kr * kr * kr) * aniso)
}

/// Cooperative-decay matrix element ⟨j|Γ_dd|i⟩, r-independent, in Γ.
pub fn gamma_dd_element<F: Float>(
    i: &SymmetrizedPairState,
    j: &SymmetrizedPairState,
    spec: &AtomSpec<F>,
) -> F {
    if i.pi != j.pi {
        return F::zero();
    }
    let (_, iso) = dd_brackets::<F>(i, j, spec);
    let pi = F::of_i32(i.pi as i32);
    pi * F::half() * iso
}

/// One (M_tot, π) symmetry block: global state indices plus the constant
/// matrices entering H(r) = diag(hf) + c(r)·A and Γ_dd.
pub struct Block<F> {
    pub m_tot_twice: i32,
    pub pi: i8,
    pub idx: Vec<usize>,
    pub hf: Vec<F>,
    /// Angular dipole-dipole matrix (with the π sign), column-major n×n.
    pub a: Vec<F>,
    /// Cooperative decay matrix in Γ, column-major n×n.
    pub g: Vec<F>,
}

/// Precomputed basis, block partition and per-block constant matrices.
pub struct BasisTables<F> {
    pub spec: AtomSpec<F>,
    pub basis: Vec<SymmetrizedPairState>,
    pub blocks: Vec<Block<F>>,
    pub index_of: HashMap<SymmetrizedPairState, usize>,
    /// Dense lookup for hot paths, keyed by (f, m, f', m', π) offsets.
    fast_index: Vec<usize>,
}

/// Hyperfine energy of a pair state relative to the (F_low, F'_low) asymptote.
pub fn asymptote_energy<F: Float>(spec: &AtomSpec<F>, s: &SymmetrizedPairState) -> F {
    let mut e = F::zero();
    if s.f == spec.f_high() {
        e += spec.vhf_ground;
    }
    if s.fp == spec.f_high() {
        e += spec.vhf_excited;
    }
    e
}

impl<F: Float> BasisTables<F> {
    pub fn new(spec: AtomSpec<F>) -> Self {
        let basis = build_basis(&spec);
        let index_of: HashMap<_, _> = basis.iter().enumerate().map(|(k, s)| (*s, k)).collect();

        let mut blocks: Vec<Block<F>> = Vec::new();
        let mut start = 0usize;
        while start < basis.len() {
            let key = (basis[start].m_tot().twice(), basis[start].pi);
            let mut end = start;
            while end < basis.len() && (basis[end].m_tot().twice(), basis[end].pi) == key {
                end += 1;
            }
            let idx: Vec<usize> = (start..end).collect();
            let n = idx.len();
            let mut hf = vec![F::zero(); n];
            let mut a = vec![F::zero(); n * n];
            let mut g = vec![F::zero(); n * n];
            for (col, &jg) in idx.iter().enumerate() {
                hf[col] = asymptote_energy(&spec, &basis[jg]);
                for (row, &ig) in idx.iter().enumerate() {
                    let (aniso, iso) = dd_brackets::<F>(&basis[ig], &basis[jg], &spec);
                    let pi = F::of_i32(basis[ig].pi as i32);
                    a[col * n + row] = pi * aniso;
                    g[col * n + row] = pi * F::half() * iso;
                }
            }
            blocks.push(Block {
                m_tot_twice: key.0,
                pi: key.1,
                idx,
                hf,
                a,
                g,
            });
            start = end;
        }

        let dim_high = spec.f_high().multiplicity();
        let mut fast_index = vec![usize::MAX; 2 * 2 * 2 * dim_high * dim_high];
        for (k, s) in basis.iter().enumerate() {
            let key = Self::fast_key(&spec, s);
            fast_index[key] = k;
        }

        BasisTables {
            spec,
            basis,
            blocks,
            index_of,
            fast_index,
        }
    }

    fn fast_key(spec: &AtomSpec<F>, s: &SymmetrizedPairState) -> usize {
        let dim_high = spec.f_high().multiplicity();
        let fi = usize::from(s.f == spec.f_high());
        let fpi = usize::from(s.fp == spec.f_high());
        let pii = usize::from(s.pi > 0);
        let mi = ((s.mf.twice() + s.f.twice()) / 2) as usize;
        let mpi = ((s.mfp.twice() + s.fp.twice()) / 2) as usize;
        (((fi * 2 + fpi) * 2 + pii) * dim_high + mi) * dim_high + mpi
    }

    /// Global index of a basis state, no hashing.
    #[inline]
    pub fn index_fast(&self, s: &SymmetrizedPairState) -> usize {
        self.fast_index[Self::fast_key(&self.spec, s)]
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// Eigen-data of one block at a given separation.
pub struct BlockSpectrum<F> {
    /// Born-Oppenheimer eigenvalues relative to the lowest asymptote, ascending.
    pub lambda: Vec<F>,
    /// Amplitude decay rates γ_e = Γ/2 + ⟨e|Γ_dd|e⟩.
    pub gamma: Vec<F>,
    /// Eigenvectors, column-major in the block-local basis.
    pub vecs: Vec<F>,
}

/// Spectrum of all blocks at one separation.
pub struct MolecularSpectrum<F> {
    pub kr: F,
    pub blocks: Vec<BlockSpectrum<F>>,
}

impl<F: Float> MolecularSpectrum<F> {
    /// Flat (block, in-block index, λ, γ) iteration in deterministic order.
    pub fn iter_states(&self) -> impl Iterator<Item = (usize, usize, F, F)> + '_ {
        self.blocks.iter().enumerate().flat_map(|(b, bs)| {
            bs.lambda
                .iter()
                .zip(&bs.gamma)
                .enumerate()
                .map(move |(k, (&l, &g))| (b, k, l, g))
        })
    }

    pub fn all_lambdas(&self) -> Vec<F> {
        self.iter_states().map(|(_, _, l, _)| l).collect()
    }
}

/// Relative threshold under which eigenvalues count as degenerate for the
/// decay-rate assignment.
const DEGENERACY_RTOL: f64 = 1e-9;

/// Diagonalize every (M_tot, π) block at separation kr.
pub fn spectrum<F: Float>(
    tables: &BasisTables<F>,
    kr: F,
) -> Result<MolecularSpectrum<F>, MolecularError> {
    if kr <= F::zero() {
        return Err(MolecularError::NonPositiveSeparation(
            kr.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let c = tables.spec.dd_coefficient / (kr * kr * kr);
    let mut blocks = Vec::with_capacity(tables.blocks.len());
    for block in &tables.blocks {
        let n = block.idx.len();
        let mut h = vec![F::zero(); n * n];
        for col in 0..n {
            for row in 0..n {
                h[col * n + row] = c * block.a[col * n + row];
            }
            h[col * n + col] += block.hf[col];
        }
        let (lambda, mut vecs) =
            symmetric_eigen(&h, n).map_err(|source| MolecularError::Eigensolver {
                m_tot_twice: block.m_tot_twice,
                pi: block.pi,
                source,
            })?;

        // Decay rates: diagonalize Γ_dd within each degenerate λ subspace so
        // the reported (λ, γ) pairs do not depend on eigenvector gauge.
        let scale = lambda.iter().fold(F::one(), |m, &x| m.max(x.abs()));
        let tol = F::of(DEGENERACY_RTOL) * scale;
        let mut gamma = vec![F::zero(); n];
        let mut s = 0usize;
        while s < n {
            let mut e = s + 1;
            while e < n && (lambda[e] - lambda[e - 1]).abs() <= tol {
                e += 1;
            }
            let m = e - s;
            if m == 1 {
                let mut acc = F::zero();
                for col in 0..n {
                    let mut gv = F::zero();
                    for row in 0..n {
                        gv += block.g[col * n + row] * vecs[s * n + row];
                    }
                    acc += vecs[s * n + col] * gv;
                }
                gamma[s] = F::half() + acc;
            } else {
                // project Γ_dd onto the degenerate subspace and rediagonalize
                let mut sub = vec![F::zero(); m * m];
                for a_i in 0..m {
                    for b_i in 0..m {
                        let mut acc = F::zero();
                        for col in 0..n {
                            let mut gv = F::zero();
                            for row in 0..n {
                                gv += block.g[col * n + row] * vecs[(s + b_i) * n + row];
                            }
                            acc += vecs[(s + a_i) * n + col] * gv;
                        }
                        sub[b_i * m + a_i] = acc;
                    }
                }
                let (gvals, gvecs) =
                    symmetric_eigen(&sub, m).map_err(|source| MolecularError::Eigensolver {
                        m_tot_twice: block.m_tot_twice,
                        pi: block.pi,
                        source,
                    })?;
                let mut rotated = vec![F::zero(); m * n];
                for new in 0..m {
                    for row in 0..n {
                        let mut acc = F::zero();
                        for old in 0..m {
                            acc += vecs[(s + old) * n + row] * gvecs[new * m + old];
                        }
                        rotated[new * n + row] = acc;
                    }
                }
                for new in 0..m {
                    gamma[s + new] = F::half() + gvals[new];
                    for row in 0..n {
                        vecs[(s + new) * n + row] = rotated[new * n + row];
                    }
                }
            }
            s = e;
        }

        blocks.push(BlockSpectrum {
            lambda,
            gamma,
            vecs,
        });
    }
    Ok(MolecularSpectrum { kr, blocks })
}

/// Continuously tracked potential curves over a kr grid.
///
/// Within each block, curves follow maximal eigenvector overlap from one grid
/// point to the next; the label order is the block-sorted order at the first
/// grid point.
pub struct TrackedCurves<F> {
    pub kr: Vec<F>,
    /// (2·M_tot, π, in-block index) per curve, in emission order.
    pub labels: Vec<(i32, i8, usize)>,
    /// lambda[curve][grid point]
    pub lambda: Vec<Vec<F>>,
    /// gamma[curve][grid point]
    pub gamma: Vec<Vec<F>>,
    /// Minimum adjacent-step eigenvector overlap met while tracking.
    pub min_overlap: F,
}

pub fn track_curves<F: Float>(
    tables: &BasisTables<F>,
    grid: &[F],
) -> Result<TrackedCurves<F>, MolecularError> {
    assert!(!grid.is_empty());
    let n_states = tables.dimension();
    let mut labels = Vec::with_capacity(n_states);
    for block in &tables.blocks {
        for k in 0..block.idx.len() {
            labels.push((block.m_tot_twice, block.pi, k));
        }
    }
    let mut lambda = vec![Vec::with_capacity(grid.len()); n_states];
    let mut gamma = vec![Vec::with_capacity(grid.len()); n_states];
    let mut min_overlap = F::one();

    let mut prev: Option<MolecularSpectrum<F>> = None;
    // per-block permutation from curve number to current spectrum column
    let mut perms: Vec<Vec<usize>> = tables
        .blocks
        .iter()
        .map(|b| (0..b.idx.len()).collect())
        .collect();

    for &kr in grid {
        let spec_r = spectrum(tables, kr)?;
        if let Some(prev_s) = &prev {
            for (b, block) in tables.blocks.iter().enumerate() {
                let n = block.idx.len();
                let old = &prev_s.blocks[b];
                let new = &spec_r.blocks[b];
                // greedy maximal-overlap assignment, old column → new column
                let mut taken = vec![false; n];
                let mut assign = vec![usize::MAX; n];
                for old_col in 0..n {
                    let mut best = (F::of(-1.0), usize::MAX);
                    for new_col in 0..n {
                        if taken[new_col] {
                            continue;
                        }
                        let mut dot = F::zero();
                        for row in 0..n {
                            dot += old.vecs[old_col * n + row] * new.vecs[new_col * n + row];
                        }
                        let ov = dot.abs();
                        if ov > best.0 {
                            best = (ov, new_col);
                        }
                    }
                    assign[old_col] = best.1;
                    taken[best.1] = true;
                    min_overlap = min_overlap.min(best.0);
                }
                let perm = &mut perms[b];
                let old_perm = perm.clone();
                for curve in 0..n {
                    perm[curve] = assign[old_perm[curve]];
                }
            }
        }
        let mut flat = 0usize;
        for (b, block) in tables.blocks.iter().enumerate() {
            for k in 0..block.idx.len() {
                let col = perms[b][k];
                lambda[flat].push(spec_r.blocks[b].lambda[col]);
                gamma[flat].push(spec_r.blocks[b].gamma[col]);
                flat += 1;
            }
        }
        prev = Some(spec_r);
    }

    Ok(TrackedCurves {
        kr: grid.to_vec(),
        labels,
        lambda,
        gamma,
        min_overlap,
    })
}

/// Hund's case-(c) classification of a small-separation spectrum.
pub struct CaseCClasses<F> {
    /// (mean, multiplicity) of each energy cluster, ascending.
    pub energy_clusters: Vec<(F, usize)>,
    /// Smallest inter-cluster gap divided by the largest adjacent
    /// intra-cluster spread.
    pub min_gap_ratio: F,
    /// Exchange-parity composition (π = +1, π = −1) of the flat middle
    /// cluster, which holds the two classes degenerate at zero coefficient.
    pub middle_by_parity: (usize, usize),
    /// Number of case-(c) classes: energy clusters plus one when the middle
    /// cluster resolves into both parity sectors.
    pub class_count: usize,
}

/// Identify the case-(c) classes of a dipole-dominated spectrum.
///
/// Clusters are split at gaps larger than 1/16 of the full eigenvalue span.
/// Returns `None` when the spectrum does not produce an odd cluster count
/// with a flat middle group (i.e. the separation is not in the case-(c)
/// regime).
pub fn case_c_classes<F: Float>(
    tables: &BasisTables<F>,
    s: &MolecularSpectrum<F>,
) -> Option<CaseCClasses<F>> {
    let mut entries: Vec<(F, i8)> = Vec::with_capacity(tables.dimension());
    for (b, block) in tables.blocks.iter().enumerate() {
        for &l in &s.blocks[b].lambda {
            entries.push((l, block.pi));
        }
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let span = entries.last()?.0 - entries.first()?.0;
    let min_gap = span / F::of(16.0);

    let mut boundaries = vec![0usize];
    for i in 1..entries.len() {
        if entries[i].0 - entries[i - 1].0 > min_gap {
            boundaries.push(i);
        }
    }
    boundaries.push(entries.len());

    let mut clusters = Vec::new();
    let mut spreads = Vec::new();
    for w in boundaries.windows(2) {
        let members = &entries[w[0]..w[1]];
        let mean = members.iter().map(|e| e.0).sum::<F>() / F::of_usize(members.len());
        clusters.push((mean, members.len()));
        spreads.push(members.last().unwrap().0 - members.first().unwrap().0);
    }
    if clusters.len() % 2 == 0 {
        return None;
    }

    let mut min_ratio = F::infinity();
    for k in 1..boundaries.len() - 1 {
        let gap = entries[boundaries[k]].0 - entries[boundaries[k] - 1].0;
        let local_spread = spreads[k - 1].max(spreads[k]).max(F::of(1e-9));
        min_ratio = min_ratio.min(gap / local_spread);
    }

    let mid = clusters.len() / 2;
    let (lo, hi) = (boundaries[mid], boundaries[mid + 1]);
    let plus = entries[lo..hi].iter().filter(|e| e.1 == 1).count();
    let minus = (hi - lo) - plus;
    let class_count = clusters.len() + usize::from(plus > 0 && minus > 0);

    Some(CaseCClasses {
        energy_clusters: clusters,
        min_gap_ratio: min_ratio,
        middle_by_parity: (plus, minus),
        class_count,
    })
}

/// Group sorted values into clusters split where the gap between neighbours
/// exceeds `min_gap`. Returns (cluster mean, multiplicity) pairs.
pub fn cluster_sorted<F: Float>(values: &[F], min_gap: F) -> Vec<(F, usize)> {
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    let mut start = 0usize;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > min_gap {
            let members = &values[start..i];
            let mean = members.iter().copied().sum::<F>() / F::of_usize(members.len());
            out.push((mean, members.len()));
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb() -> AtomSpec<f64> {
        AtomSpec::rb87()
    }

    #[test]
    fn basis_counts_and_order() {
        let spec = rb();
        let basis = build_basis(&spec);
        assert_eq!(basis.len(), 128);
        let mut sorted = basis.clone();
        sorted.sort_by_key(|s| {
            (
                s.m_tot().twice(),
                s.pi,
                s.f.twice(),
                s.fp.twice(),
                s.mf.twice(),
            )
        });
        assert_eq!(basis, sorted);
        // per-asymptote multiplicities (F, F') = (1,1), (1,2), (2,1), (2,2)
        let count = |f: i32, fp: i32| {
            basis
                .iter()
                .filter(|s| s.f.twice() == 2 * f && s.fp.twice() == 2 * fp)
                .count()
        };
        assert_eq!(count(1, 1), 18);
        assert_eq!(count(1, 2), 30);
        assert_eq!(count(2, 1), 30);
        assert_eq!(count(2, 2), 50);
    }

    #[test]
    fn basis_counting_rule_other_spins() {
        // (2F+1)(2F'+1) × 2 summed over both hyperfine levels of both atoms
        let mut spec = rb();
        spec.nuclear_spin = HalfInt::from_int(1); // multiplicities 2 + 4
        assert_eq!(build_basis(&spec).len(), 72);
        spec.nuclear_spin = HalfInt::HALF; // multiplicities 1 + 3
        assert_eq!(build_basis(&spec).len(), 32);
    }

    #[test]
    fn vdd_selection_rules_are_exact_zeros() {
        let spec = rb();
        let basis = build_basis(&spec);
        let kr = 0.7;
        for i in basis.iter().step_by(7) {
            for j in basis.iter().step_by(5) {
                let v = vdd_element(i, j, kr, &spec).unwrap();
                if i.m_tot() != j.m_tot() || i.pi != j.pi {
                    assert_eq!(v, 0.0, "off-block element must vanish identically");
                }
            }
        }
    }

    #[test]
    fn vdd_r_cubed_scaling_and_symmetry() {
        let spec = rb();
        let basis = build_basis(&spec);
        let mut nonzero = 0usize;
        for i in basis.iter().step_by(11) {
            for j in basis.iter().step_by(13) {
                let v1 = vdd_element(i, j, 1.0, &spec).unwrap();
                let v2 = vdd_element(i, j, 2.0, &spec).unwrap();
                assert!((v2 - v1 / 8.0).abs() <= 1e-15 + 1e-12 * v1.abs());
                let vt = vdd_element(j, i, 1.0, &spec).unwrap();
                assert!((v1 - vt).abs() < 1e-13, "V_dd must be symmetric");
                if v1.abs() > 1e-12 {
                    nonzero += 1;
                }
            }
        }
        assert!(nonzero > 3, "sampled elements were all zero");
        assert!(vdd_element(&basis[0], &basis[0], 0.0, &spec).is_err());
    }

    #[test]
    fn vdd_printed_angular_form() {
        // The recoupling-factor route must reproduce the closed form
        // (-1)^{F_i+F_j} √((2F_i+1)(2F_j+1)) {F'_i I 1/2; 1/2 1 F_j}
        // {F'_j I 1/2; 1/2 1 F_i} × [Σ_q c c − 3 c₀ c₀].
        let spec = rb();
        let basis = build_basis(&spec);
        let half = HalfInt::HALF;
        let one = HalfInt::ONE;
        let ii = spec.nuclear_spin;
        for i in basis.iter().step_by(9) {
            for j in basis.iter().step_by(17) {
                if i.pi != j.pi {
                    continue;
                }
                let phase_t = i.f.twice() + j.f.twice();
                let sign = if (phase_t / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let dim = (((i.f.twice() + 1) * (j.f.twice() + 1)) as f64).sqrt();
                let w1: f64 = wigner_6j(i.fp, ii, half, half, one, j.f);
                let w2: f64 = wigner_6j(j.fp, ii, half, half, one, i.f);
                let mut bracket = 0.0;
                for qt in [-2i32, 0, 2] {
                    let q = HalfInt::from_twice(qt);
                    let c1: f64 = clebsch_gordan(j.f, j.mf, one, q, i.fp, i.mfp);
                    let c2: f64 = clebsch_gordan(i.f, i.mf, one, q, j.fp, j.mfp);
                    bracket += c1 * c2;
                }
                let z1: f64 = clebsch_gordan(j.f, j.mf, one, HalfInt::ZERO, i.fp, i.mfp);
                let z2: f64 = clebsch_gordan(i.f, i.mf, one, HalfInt::ZERO, j.fp, j.mfp);
                let a_printed = sign * dim * w1 * w2 * (bracket - 3.0 * z1 * z2);
                let expect = (i.pi as f64) * spec.dd_coefficient * a_printed;
                let got = vdd_element(i, j, 1.0, &spec).unwrap();
                assert!(
                    (got - expect).abs() < 1e-12,
                    "angular forms disagree: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn gamma_dd_properties() {
        let spec = rb();
        let basis = build_basis(&spec);
        for i in basis.iter() {
            let d = gamma_dd_element(i, i, &spec);
            assert!(d.abs() <= 0.5 + 1e-12, "diagonal bound violated: {d}");
        }
        for i in basis.iter().step_by(7) {
            for j in basis.iter().step_by(11) {
                let a = gamma_dd_element(i, j, &spec);
                let b = gamma_dd_element(j, i, &spec);
                assert!((a - b).abs() < 1e-13);
                if i.m_tot() != j.m_tot() {
                    assert_eq!(a, 0.0);
                }
            }
        }
    }

    #[test]
    fn mirror_m_tot_blocks_share_spectra() {
        let tables = BasisTables::new(rb());
        let s = spectrum(&tables, 0.21).unwrap();
        for (b, block) in tables.blocks.iter().enumerate() {
            if block.m_tot_twice <= 0 {
                continue;
            }
            let partner = tables
                .blocks
                .iter()
                .position(|o| o.m_tot_twice == -block.m_tot_twice && o.pi == block.pi)
                .expect("mirror block exists");
            for (a, b_val) in s.blocks[b].lambda.iter().zip(&s.blocks[partner].lambda) {
                assert!((a - b_val).abs() < 1e-10, "mirror eigenvalues differ");
            }
        }
    }

    #[test]
    fn spectrum_asymptotes_at_large_separation() {
        let tables = BasisTables::new(rb());
        let s = spectrum(&tables, 50.0).unwrap();
        let mut vals = s.all_lambdas();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let clusters = cluster_sorted(&vals, 1.0);
        assert_eq!(clusters.len(), 4, "four hyperfine asymptotes");
        let degeneracies: Vec<usize> = clusters.iter().map(|c| c.1).collect();
        assert_eq!(degeneracies, vec![18, 30, 30, 50]);
        let spec = rb();
        assert!((clusters[1].0 - clusters[0].0 - spec.vhf_excited).abs() < 1e-3);
        assert!((clusters[2].0 - clusters[0].0 - spec.vhf_ground).abs() < 1e-3);
        assert!((clusters[3].0 - clusters[0].0 - spec.vhf_ground - spec.vhf_excited).abs() < 1e-3);
    }

    #[test]
    fn spectrum_case_c_classes_at_small_separation() {
        // At kr = 0.03 the dipole-dipole coupling dominates the hyperfine
        // splitting and the spectrum collapses onto the case-(c) classes with
        // coefficients {±2/3, ±1/3, 0, 0}·(2d²/r³). The two flat classes are
        // exactly degenerate in energy and are told apart by exchange parity,
        // for six classes over five energy clusters.
        let tables = BasisTables::new(rb());
        let s = spectrum(&tables, 0.03).unwrap();
        let classes = case_c_classes(&tables, &s).expect("class identification");
        assert_eq!(classes.energy_clusters.len(), 5);
        let counts: Vec<usize> = classes.energy_clusters.iter().map(|c| c.1).collect();
        assert_eq!(counts, vec![16, 32, 32, 32, 16]);
        assert!(
            classes.min_gap_ratio > 10.0,
            "inter/intra gap ratio {} too small",
            classes.min_gap_ratio
        );
        assert_eq!(classes.middle_by_parity, (16, 16));
        assert_eq!(classes.class_count, 6);
        // cluster means in units of 2d²/r³ approach the case-(c) coefficients
        let c3 = tables.spec.dd_coefficient / 0.03f64.powi(3);
        let offsets: Vec<f64> = classes.energy_clusters.iter().map(|c| c.0 / c3).collect();
        for (got, want) in offsets
            .iter()
            .zip([-2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0])
        {
            assert!(
                (got - want).abs() < 0.05,
                "case-(c) coefficient {got:.4} vs {want:.4}"
            );
        }
    }

    #[test]
    fn trace_is_r_independent() {
        let tables = BasisTables::new(rb());
        let far: f64 = spectrum(&tables, 1e4).unwrap().all_lambdas().iter().sum();
        for kr in [0.03, 0.1, 0.5, 2.0] {
            let tr: f64 = spectrum(&tables, kr).unwrap().all_lambdas().iter().sum();
            let scale = 128.0 * 1500.0;
            assert!(
                (tr - far).abs() < 1e-8 * scale,
                "trace drifts at kr={kr}: {tr} vs {far}"
            );
        }
    }

    #[test]
    fn decay_rates_bounded_and_symmetric_at_infinity() {
        let tables = BasisTables::new(rb());
        // bound is set by the operator norm of Γ_dd over all blocks
        let max_g = tables
            .blocks
            .iter()
            .map(|blk| {
                let n = blk.idx.len();
                let (vals, _) = crate::linalg::symmetric_eigen(&blk.g, n).unwrap();
                vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0_f64, f64::max);
        for kr in [0.05, 0.3, 5.0] {
            let s = spectrum(&tables, kr).unwrap();
            for (_, _, _, g) in s.iter_states() {
                assert!(g >= 0.5 - max_g - 1e-9 && g <= 0.5 + max_g + 1e-9);
            }
        }
        // r → ∞: distribution of γ_e symmetric about Γ/2
        let s = spectrum(&tables, 1e5).unwrap();
        let mut dev: Vec<f64> = s.iter_states().map(|(_, _, _, g)| g - 0.5).collect();
        dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = dev.len();
        for k in 0..n / 2 {
            assert!(
                (dev[k] + dev[n - 1 - k]).abs() < 1e-8,
                "gamma distribution asymmetric: {} vs {}",
                dev[k],
                dev[n - 1 - k]
            );
        }
    }

    #[test]
    fn eigenvectors_orthonormal_per_block() {
        let tables = BasisTables::new(rb());
        let s = spectrum(&tables, 0.15).unwrap();
        for bs in &s.blocks {
            let n = bs.lambda.len();
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n)
                        .map(|r| bs.vecs[a * n + r] * bs.vecs[b * n + r])
                        .sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn curves_track_continuously() {
        let tables = BasisTables::new(rb());
        let grid: Vec<f64> = (0..80)
            .map(|k| 0.02 * (50.0f64 / 0.02).powf(k as f64 / 79.0))
            .collect();
        let tracked = track_curves(&tables, &grid).unwrap();
        assert_eq!(tracked.lambda.len(), 128);
        assert!(
            tracked.min_overlap > 0.5,
            "adiabatic continuation lost a curve: min overlap {}",
            tracked.min_overlap
        );
    }
}
