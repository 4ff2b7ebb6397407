use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stilde_core::circuit::{random_circuit, CircuitRecord};
use stilde_core::lattice::{build_torus, make_annulus_pair_on};
use stilde_core::model::{add_trivial_ancillas, build_toric_code, stack_models};
use stilde_core::oracle::DEFAULT_CAP;
use stilde_core::{AnnulusPair, Circuit, StabilizerModel};

use crate::fail::Fail;

/// Everything a run needs. Every field has a default, so `{}` is a valid
/// config: the ℤ₂ toric code at L = 24 on annuli (7, 2) five apart.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub geometry: GeometrySpec,
    pub circuit: Option<CircuitSpec>,
    pub witness: Option<WitnessSpec>,
    pub oracle: OracleSpec,
    pub seed: u64,
    pub strict_geometry: bool,
    /// Twist-identity samples per circuit.
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// One toric-code layer per entry, `ℤ_d` each.
    pub groups: Vec<u32>,
    pub l: usize,
    pub ancillas: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { groups: vec![2], l: 24, ancillas: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    pub r_ann: u32,
    pub t: u32,
    pub separation: u32,
    /// Cut height relative to the pair center, doubled coordinates.
    pub cut: i64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self { r_ann: 7, t: 2, separation: 5, cut: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum CircuitSpec {
    Random { depth: usize, seed: u64 },
    File { file: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    pub scenario: String,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub cap: u128,
    pub samples: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, samples: 20 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Fail> {
        let text = std::fs::read_to_string(path).map_err(|e| Fail::validation(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Fail::validation(format!("{}: {e}", path.display())))?;
        // relative circuit files resolve against the config's directory
        if let Some(CircuitSpec::File { file }) = &mut cfg.circuit {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Fail> {
        let m = &self.model;
        if m.groups.is_empty() || m.groups.iter().any(|&d| d < 2) {
            return Err(Fail::validation(format!("model.groups must be nonempty with every d >= 2, got {:?}", m.groups)));
        }
        if m.l < 3 {
            return Err(Fail::validation(format!("model.l must be at least 3, got {}", m.l)));
        }
        if let Some(CircuitSpec::File { file }) = &self.circuit {
            if !file.exists() {
                return Err(Fail::validation(format!("circuit file {} does not exist", file.display())));
            }
        }
        if self.oracle.cap == 0 {
            return Err(Fail::validation("oracle.cap must be positive".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        if self.samples == 0 {
            100
        } else {
            self.samples
        }
    }

    pub fn build_model(&self) -> Result<StabilizerModel, Fail> {
        let lat = build_torus(self.model.l)?;
        let mut layers = self.model.groups.iter().map(|&d| build_toric_code(&lat, d));
        let mut model = layers.next().expect("validated nonempty")?;
        for layer in layers {
            model = stack_models(&model, &layer?)?;
        }
        Ok(add_trivial_ancillas(&model, self.model.ancillas)?)
    }

    pub fn build_pair(&self, model: &StabilizerModel) -> Result<AnnulusPair, Fail> {
        let g = &self.geometry;
        let pair = make_annulus_pair_on(model.layout(), self.model.l, g.r_ann, g.t, g.separation)?;
        if g.cut == 0 {
            Ok(pair)
        } else {
            Ok(pair.with_cut(model.layout(), g.cut)?)
        }
    }

    /// The configured circuit, or the identity when none is given.
    pub fn build_circuit(&self, model: &StabilizerModel) -> Result<Circuit, Fail> {
        match &self.circuit {
            None => Ok(Circuit::identity(model.system())),
            Some(CircuitSpec::Random { depth, seed }) => Ok(random_circuit(model.system(), model.layout(), *depth, *seed)?),
            Some(CircuitSpec::File { file }) => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| Fail::validation(format!("{}: {e}", file.display())))?;
                let rec: CircuitRecord = serde_json::from_str(&text)
                    .map_err(|e| Fail::validation(format!("{}: {e}", file.display())))?;
                Ok(Circuit::from_record(model.system(), &rec)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.model.groups, vec![2]);
        assert_eq!((cfg.geometry.r_ann, cfg.geometry.t, cfg.geometry.separation), (7, 2, 5));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"model": {"group": [2]}}"#).is_err());
    }

    #[test]
    fn circuit_spec_forms() {
        let cfg: RunConfig = serde_json::from_str(r#"{"circuit": {"depth": 2, "seed": 4}}"#).unwrap();
        assert!(matches!(cfg.circuit, Some(CircuitSpec::Random { depth: 2, seed: 4 })));
        let cfg: RunConfig = serde_json::from_str(r#"{"circuit": {"file": "w.json"}}"#).unwrap();
        assert!(matches!(cfg.circuit, Some(CircuitSpec::File { .. })));
    }

    #[test]
    fn bad_groups_fail_validation() {
        let cfg: RunConfig = serde_json::from_str(r#"{"model": {"groups": [1]}}"#).unwrap();
        assert_eq!(cfg.validate().unwrap_err().code, 2);
    }
}
