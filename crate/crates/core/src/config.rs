//! Run configuration with explicit units, validation and canonical hashing.
//!
//! The JSON schema annotates every physical quantity with its unit string;
//! parsing rejects unit mismatches instead of silently reinterpreting
//! numbers. Defaults reproduce the ⁸⁷Rb operating point used throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dressed::QuadratureSpec;
use crate::half_int::HalfInt;
use crate::molecular::{AtomSpec, DipoleWeighting};
use crate::threelevel::ThreeLevelParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse configuration: {0}")]
    Parse(String),
    #[error("{field}: expected unit '{expected}', found '{found}'")]
    UnitMismatch {
        field: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("override '{0}' is malformed (expected dotted.path=value)")]
    BadOverride(String),
}

/// A number carrying its unit.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    fn new(value: f64, unit: &str) -> Self {
        Quantity {
            value,
            unit: unit.to_string(),
        }
    }

    fn expect(&self, field: &'static str, unit: &'static str) -> Result<f64, ConfigError> {
        if self.unit == unit {
            Ok(self.value)
        } else {
            Err(ConfigError::UnitMismatch {
                field,
                expected: unit,
                found: self.unit.clone(),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ScanRange {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomSection {
    pub nuclear_spin_twice: i32,
    pub vhf_ground: Quantity,
    pub vhf_excited: Quantity,
    pub gamma: Quantity,
    pub dd_coefficient: Quantity,
    /// "bare-cg" or "hyperfine-reduced"
    pub dipole_weighting: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldSection {
    pub delta: Quantity,
    pub rabi: Quantity,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeometrySection {
    pub eta: Quantity,
    pub kdz: Quantity,
    pub kdz_scan: Option<ScanRange>,
    pub delta_scan: Option<ScanRange>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticeSection {
    pub recoil: Quantity,
    pub speed_factor: Quantity,
    pub mu_e_sq: Quantity,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadratureSection {
    pub radial_order: usize,
    pub angular_order: usize,
    pub tol: f64,
    pub max_depth: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelSection {
    pub include_ground_offset: bool,
    pub adiabatic_cutoff: bool,
    pub include_leakage: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunSection {
    /// 0 selects the hardware concurrency.
    pub workers: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PotentialsSection {
    pub kr_min: f64,
    pub kr_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ThreeLevelSection {
    pub omega01: Quantity,
    pub delta: Quantity,
    pub gamma: Quantity,
    pub gamma_c: Quantity,
    pub rabi: Quantity,
    pub c0_sq: f64,
    pub c1_sq: f64,
    pub vc: Quantity,
    pub include_ee: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConstraintsSection {
    pub delta_lattice: Quantity,
    pub margin_required: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub atom: AtomSection,
    pub field: FieldSection,
    pub geometry: GeometrySection,
    pub lattice: LatticeSection,
    pub quadrature: QuadratureSection,
    pub model: ModelSection,
    pub run: RunSection,
    pub potentials: PotentialsSection,
    pub threelevel: ThreeLevelSection,
    pub constraints: ConstraintsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            atom: AtomSection {
                nuclear_spin_twice: 3,
                vhf_ground: Quantity::new(1263.4, "hbar*Gamma"),
                vhf_excited: Quantity::new(151.2, "hbar*Gamma"),
                gamma: Quantity::new(5.41e6, "Hz"),
                dd_coefficient: Quantity::new(1.5, "hbar*Gamma*k^-3"),
                dipole_weighting: "bare-cg".into(),
            },
            field: FieldSection {
                delta: Quantity::new(1.0e4, "Gamma"),
                rabi: Quantity::new(1.0, "Gamma"),
            },
            geometry: GeometrySection {
                eta: Quantity::new(0.05, "dimensionless"),
                kdz: Quantity::new(0.15, "dimensionless"),
                kdz_scan: Some(ScanRange {
                    start: 0.10,
                    stop: 0.40,
                    points: 31,
                }),
                delta_scan: None,
            },
            lattice: LatticeSection {
                recoil: Quantity::new(1.0 / 1500.0, "hbar*Gamma"),
                speed_factor: Quantity::new(0.095, "dimensionless"),
                mu_e_sq: Quantity::new(1.0, "arbitrary"),
            },
            quadrature: QuadratureSection {
                radial_order: 8,
                angular_order: 32,
                tol: 1e-3,
                max_depth: 12,
            },
            model: ModelSection {
                include_ground_offset: true,
                adiabatic_cutoff: true,
                include_leakage: false,
            },
            run: RunSection { workers: 0 },
            potentials: PotentialsSection {
                kr_min: 0.02,
                kr_max: 50.0,
                points: 400,
            },
            threelevel: ThreeLevelSection {
                omega01: Quantity::new(100.0, "Gamma"),
                delta: Quantity::new(1.0e4, "Gamma"),
                gamma: Quantity::new(1.0, "Gamma"),
                gamma_c: Quantity::new(1.0, "Gamma"),
                rabi: Quantity::new(1.0, "Gamma"),
                c0_sq: 2.0 / 3.0,
                c1_sq: 1.0 / 3.0,
                vc: Quantity::new(1.0, "hbar*Gamma"),
                include_ee: false,
            },
            constraints: ConstraintsSection {
                delta_lattice: Quantity::new(1.0e4, "Gamma"),
                margin_required: 10.0,
            },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Apply `path.to.field=value` overrides on the JSON representation.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(self).expect("config serializes");
        for ov in overrides {
            let (path, raw) = ov
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(ov.clone()))?;
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut cursor = &mut value;
            let parts: Vec<&str> = path.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                if i + 1 == parts.len() {
                    match cursor.get_mut(part) {
                        Some(slot) => *slot = parsed.clone(),
                        None => return Err(ConfigError::BadOverride(ov.clone())),
                    }
                } else {
                    cursor = cursor
                        .get_mut(part)
                        .ok_or_else(|| ConfigError::BadOverride(ov.clone()))?;
                }
            }
        }
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.atom
            .vhf_ground
            .expect("atom.vhf_ground", "hbar*Gamma")?;
        self.atom
            .vhf_excited
            .expect("atom.vhf_excited", "hbar*Gamma")?;
        self.atom.gamma.expect("atom.gamma", "Hz")?;
        self.atom
            .dd_coefficient
            .expect("atom.dd_coefficient", "hbar*Gamma*k^-3")?;
        self.field.delta.expect("field.delta", "Gamma")?;
        self.field.rabi.expect("field.rabi", "Gamma")?;
        self.geometry.eta.expect("geometry.eta", "dimensionless")?;
        self.geometry.kdz.expect("geometry.kdz", "dimensionless")?;
        self.lattice.recoil.expect("lattice.recoil", "hbar*Gamma")?;
        self.lattice
            .speed_factor
            .expect("lattice.speed_factor", "dimensionless")?;
        self.constraints
            .delta_lattice
            .expect("constraints.delta_lattice", "Gamma")?;

        if self.atom.nuclear_spin_twice < 3 {
            return Err(ConfigError::Invalid(
                "atom.nuclear_spin_twice must be at least 3 (I ≥ 3/2) for the logical encoding"
                    .into(),
            ));
        }
        if self.atom.vhf_ground.value <= 0.0 || self.atom.vhf_excited.value <= 0.0 {
            return Err(ConfigError::Invalid(
                "hyperfine splittings must be positive".into(),
            ));
        }
        match self.atom.dipole_weighting.as_str() {
            "bare-cg" | "hyperfine-reduced" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "atom.dipole_weighting must be 'bare-cg' or 'hyperfine-reduced', got '{other}'"
                )))
            }
        }
        if self.field.delta.value <= 0.0 {
            return Err(ConfigError::Invalid(
                "field.delta must be positive (blue detuning only)".into(),
            ));
        }
        if self.geometry.eta.value <= 0.0 || self.geometry.kdz.value < 0.0 {
            return Err(ConfigError::Invalid(
                "geometry must have eta > 0, kdz ≥ 0".into(),
            ));
        }
        for (name, scan) in [
            ("geometry.kdz_scan", &self.geometry.kdz_scan),
            ("geometry.delta_scan", &self.geometry.delta_scan),
        ] {
            if let Some(s) = scan {
                if s.points == 0 || s.stop < s.start {
                    return Err(ConfigError::Invalid(format!("{name} is empty or reversed")));
                }
            }
        }
        if self.potentials.points < 2
            || self.potentials.kr_min <= 0.0
            || self.potentials.kr_max <= self.potentials.kr_min
        {
            return Err(ConfigError::Invalid("potentials grid is invalid".into()));
        }
        if self.quadrature.radial_order < 2 || self.quadrature.angular_order < 4 {
            return Err(ConfigError::Invalid("quadrature orders too small".into()));
        }
        if self.threelevel.c0_sq + self.threelevel.c1_sq > 1.0 + 1e-9 {
            return Err(ConfigError::Invalid(
                "threelevel oscillator strengths must satisfy c0²+c1² ≤ 1".into(),
            ));
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON, for golden-file headers.
    pub fn canonical_hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    pub fn atom_spec(&self) -> AtomSpec<f64> {
        AtomSpec {
            nuclear_spin: HalfInt::from_twice(self.atom.nuclear_spin_twice),
            vhf_ground: self.atom.vhf_ground.value,
            vhf_excited: self.atom.vhf_excited.value,
            gamma_hz: self.atom.gamma.value,
            dd_coefficient: self.atom.dd_coefficient.value,
            dipole_weighting: if self.atom.dipole_weighting == "bare-cg" {
                DipoleWeighting::BareCg
            } else {
                DipoleWeighting::HyperfineReduced
            },
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            radial_order: self.quadrature.radial_order,
            angular_order: self.quadrature.angular_order,
            tol: self.quadrature.tol,
            max_depth: self.quadrature.max_depth,
        }
    }

    pub fn threelevel_params(&self) -> ThreeLevelParams<f64> {
        ThreeLevelParams {
            omega01: self.threelevel.omega01.value,
            delta: self.threelevel.delta.value,
            gamma: self.threelevel.gamma.value,
            gamma_c: self.threelevel.gamma_c.value,
            rabi: self.threelevel.rabi.value,
            c0: self.threelevel.c0_sq.sqrt(),
            c1: self.threelevel.c1_sq.sqrt(),
            vc: self.threelevel.vc.value,
        }
    }
}
