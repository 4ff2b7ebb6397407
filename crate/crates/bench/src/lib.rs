//! Benchmark fixtures shared by the criterion targets.

use stilde_core::lattice::{build_torus, make_annulus_pair};
use stilde_core::model::build_toric_code;
use stilde_core::{AnnulusPair, StabilizerModel};

/// `ℤ_d` toric code on an `l × l` torus with annuli `(r, t)` at separation `sep`.
pub fn toric_fixture(l: usize, d: u32, r: u32, t: u32, sep: u32) -> (StabilizerModel, AnnulusPair) {
    let lat = build_torus(l).expect("torus");
    let model = build_toric_code(&lat, d).expect("toric code");
    let pair = make_annulus_pair(&lat, r, t, sep).expect("annulus pair");
    (model, pair)
}
