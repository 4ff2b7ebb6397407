use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use stilde_core::circuit::invariance_experiment;
use stilde_core::commutant::{check_stability, logical_quotient};
use stilde_core::lattice::{build_torus, validate_geometry, GeometryReport};
use stilde_core::model::{build_planar_toric_patch, build_toric_code, check_model};
use stilde_core::oracle::{dense_expectation, dense_ground_state, dense_lto_check, dense_twist_pairing};
use stilde_core::twist::{reconstruct_group, stilde_equivalent, stilde_matrix, twist_pairing, STildeRecord};
use stilde_core::witness::{bell_scenario, ghz_scenario, product_scenario, toric_scenario, CertifyOptions, WitnessScenario};
use stilde_core::{AnnulusPair, AnnulusSpec, Error, Region, STilde, StabilizerModel, WeylOp, WeylSum};

use crate::config::RunConfig;
use crate::fail::Fail;
use crate::output::{write_stilde_csv, Envelope};

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, command: &str, geometry: Option<&GeometryReport>, result: impl Serialize) -> Result<(), Fail> {
        Envelope::new(command, &self.cfg, geometry, result)?.emit(self.out.as_deref())
    }

    /// Model, pair and both annulus descriptors from the config.
    fn setup(&self) -> Result<(StabilizerModel, AnnulusPair, AnnulusSpec, AnnulusSpec), Fail> {
        let model = self.cfg.build_model()?;
        let pair = self.cfg.build_pair(&model)?;
        let (l, r) = specs(&pair)?;
        Ok((model, pair, l, r))
    }

    fn geometry(&self, pair: &AnnulusPair, model: &StabilizerModel, range: u32) -> Result<GeometryReport, Fail> {
        let g = validate_geometry(pair, range, model.interaction_range());
        if self.cfg.strict_geometry && !g.strict_pass {
            return Err(Fail::validation(format!("strict geometry check failed: {}", g.notes.join("; "))));
        }
        Ok(g)
    }
}

fn specs(pair: &AnnulusPair) -> Result<(AnnulusSpec, AnnulusSpec), Fail> {
    match (pair.left, pair.right) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Fail::validation("pair has no annulus descriptors".into())),
    }
}

fn compute_stilde(model: &StabilizerModel, pair: &AnnulusPair, l: &AnnulusSpec, r: &AnnulusSpec) -> Result<STilde, Fail> {
    let al = logical_quotient(model, l)?;
    let ar = logical_quotient(model, r)?;
    Ok(stilde_matrix(&*model.state()?, &al, &ar, pair)?)
}

#[derive(Serialize)]
struct SmatrixResult {
    stilde: STildeRecord,
    group: Option<Vec<u64>>,
    group_error: Option<String>,
    stability: stilde_core::StabilityReport,
    geometry: GeometryReport,
}

pub fn smatrix(ctx: &Ctx) -> Result<(), Fail> {
    let (model, pair, l, r) = ctx.setup()?;
    let geometry = ctx.geometry(&pair, &model, 0)?;
    let s = compute_stilde(&model, &pair, &l, &r)?;
    let (group, group_error) = match reconstruct_group(&s) {
        Ok(g) => (Some(g.invariant_factors), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let stability = check_stability(&model, &l, l.t, l.t + 1)?;
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir)?;
        write_stilde_csv(&s, &dir.join("smatrix.csv"))?;
    }
    let res = SmatrixResult { stilde: s.to_record(), group, group_error, stability, geometry: geometry.clone() };
    ctx.emit("smatrix", Some(&geometry), res)
}

/// Reads a bare S̃ record or any envelope holding one under `result.stilde`.
fn load_stilde(path: &Path) -> Result<STilde, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail::validation(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Fail::validation(format!("{}: {e}", path.display())))?;
    let inner = v.pointer("/result/stilde").cloned().unwrap_or(v);
    let rec: STildeRecord =
        serde_json::from_value(inner).map_err(|e| Fail::validation(format!("{}: not an S̃ record: {e}", path.display())))?;
    Ok(STilde::from_record(&rec)?)
}

#[derive(Serialize)]
struct ReconstructResult {
    group: Vec<u64>,
    order: u128,
    other_group: Option<Vec<u64>>,
    verdict: Option<String>,
}

pub fn reconstruct(ctx: &Ctx, stilde: Option<&Path>, other: Option<&Path>) -> Result<(), Fail> {
    let (s, geometry) = match stilde {
        Some(p) => (load_stilde(p)?, None),
        None => {
            let (model, pair, l, r) = ctx.setup()?;
            let g = ctx.geometry(&pair, &model, 0)?;
            (compute_stilde(&model, &pair, &l, &r)?, Some(g))
        }
    };
    let g = reconstruct_group(&s)?;
    let (other_group, verdict) = match other {
        None => (None, None),
        Some(p) => {
            let o = load_stilde(p)?;
            let og = reconstruct_group(&o)?;
            let verdict = if stilde_equivalent(&s, &o) {
                "isomorphic".to_string()
            } else {
                let sep = [&s, &o]
                    .iter()
                    .filter_map(|m| m.provenance.iter().find(|(k, _)| k == "separation"))
                    .filter_map(|(_, v)| v.parse::<f64>().ok())
                    .fold(f64::INFINITY, f64::min);
                format!("distinct; any connecting circuit has range >= dist(C_u, C_d)/10 = {}", sep / 10.0)
            };
            (Some(og.invariant_factors), Some(verdict))
        }
    };
    let res = ReconstructResult { order: g.order(), group: g.invariant_factors, other_group, verdict };
    ctx.emit("reconstruct", geometry.as_ref(), res)
}

pub fn perturb(ctx: &Ctx) -> Result<(), Fail> {
    let (model, pair, _, _) = ctx.setup()?;
    let w = ctx.cfg.build_circuit(&model)?;
    let geometry = ctx.geometry(&pair, &model, w.range())?;
    let rep = invariance_experiment(&model, &pair, &w, ctx.cfg.samples(), ctx.cfg.seed)?;
    let broken = rep.cones_separated && rep.twist_identity_failures > 0;
    let equivalent = rep.stilde_equivalent;
    let failures = rep.twist_identity_failures;
    ctx.emit("perturb", Some(&geometry), &rep)?;
    if !equivalent {
        return Err(Fail::violation("S̃ changed under the circuit".into()));
    }
    if broken {
        return Err(Fail::violation(format!("twist identity failed on {failures} samples with separated cones")));
    }
    Ok(())
}

#[derive(Serialize)]
struct WitnessEntry {
    name: String,
    report: stilde_core::WitnessReport,
}

pub fn witness(ctx: &Ctx, name: Option<&str>, n: Option<usize>) -> Result<(), Fail> {
    let spec = ctx.cfg.witness.as_ref();
    let name = name.or(spec.map(|w| w.scenario.as_str())).unwrap_or("all");
    let n = n.or(spec.and_then(|w| w.n));
    let build = |name: &str| -> Result<WitnessScenario, Error> {
        match name {
            "ghz" => ghz_scenario(n.unwrap_or(10)),
            "bell-poles" => bell_scenario(n.unwrap_or(12)),
            "toric" => toric_scenario(n.unwrap_or(18), 2, 6, 1, 3),
            "product-state" => product_scenario(n.unwrap_or(14)),
            other => Err(Error::InvalidInput(format!(
                "unknown witness scenario {other:?}; expected ghz, bell-poles, toric, product-state or all"
            ))),
        }
    };
    let names: Vec<&str> = if name == "all" { vec!["ghz", "bell-poles", "toric", "product-state"] } else { vec![name] };
    let opts = CertifyOptions { dense_cap: ctx.cfg.oracle.cap, ..CertifyOptions::default() };
    let mut entries = Vec::new();
    for nm in names {
        let sc = build(nm)?;
        entries.push(WitnessEntry { name: sc.name.clone(), report: sc.run(&opts)? });
    }
    ctx.emit("witness", None, entries)
}

fn random_sum_on(model: &StabilizerModel, sites: &[usize], rng: &mut ChaCha8Rng) -> WeylSum {
    let sys = model.system();
    let inside: Vec<usize> = (0..model.terms().len())
        .filter(|&k| model.terms()[k].support().iter().all(|x| sites.contains(x)))
        .collect();
    let mut s = WeylSum::zero(sys);
    for _ in 0..3 {
        // products of terms have nonzero expectation, random strings mostly vanish
        let mut op = WeylOp::identity(sys);
        if rng.gen_bool(0.5) {
            for _ in 0..3 {
                if let Some(&k) = inside.choose(rng) {
                    op = &op * model.terms()[k].generator();
                }
            }
        }
        if let Some(&x) = sites.choose(rng) {
            let d = sys.dim(x) as i64;
            let single = WeylOp::single(sys, x, rng.gen_range(0..d), rng.gen_range(0..d));
            if rng.gen_bool(0.5) {
                op = &op * &single;
            }
        }
        s.add_term(stilde_core::Cyclo::one(), &op);
    }
    s
}

/// Left and right overlapping halves, cut horizontally at the median row.
fn half_pair(model: &StabilizerModel) -> Result<AnnulusPair, Fail> {
    let layout = model.layout();
    let n = model.num_sites();
    let pos: Vec<(i64, i64)> = (0..n).map(|s| layout.position(s)).collect();
    let (xmin, xmax) = (pos.iter().map(|p| p.0).min().unwrap_or(0), pos.iter().map(|p| p.0).max().unwrap_or(0));
    let mut ys: Vec<i64> = pos.iter().map(|p| p.1).collect();
    ys.sort_unstable();
    let ymid = ys.get(n / 2).copied().unwrap_or(0);
    let xmid = (xmin + xmax) / 2;
    let pick = |f: &dyn Fn((i64, i64)) -> bool| Region::from_mask(pos.iter().map(|&p| f(p)).collect());
    Ok(AnnulusPair::custom(
        layout,
        pick(&|p| p.0 <= xmid + 1),
        pick(&|p| p.0 >= xmid - 1),
        pick(&|p| p.1 <= ymid),
    )?)
}

#[derive(Serialize)]
struct OracleRow {
    kind: String,
    symbolic_re: f64,
    symbolic_im: f64,
    dense_re: f64,
    dense_im: f64,
    agree: bool,
}

#[derive(Serialize)]
struct OracleResult {
    model: String,
    hilbert_dim: String,
    rows: Vec<OracleRow>,
    disagreements: usize,
    lto: stilde_core::oracle::LtoReport,
}

fn oracle_model(ctx: &Ctx, scenario: Option<&str>) -> Result<(StabilizerModel, AnnulusPair), Fail> {
    match scenario {
        None => {
            let model = ctx.cfg.build_model()?;
            let pair = match ctx.cfg.build_pair(&model) {
                Ok(p) => p,
                Err(_) => half_pair(&model)?,
            };
            Ok((model, pair))
        }
        Some("torus3") => {
            let m = build_toric_code(&build_torus(3)?, 2)?;
            let p = half_pair(&m)?;
            Ok((m, p))
        }
        Some("patch") => {
            let m = build_planar_toric_patch(3, 3, 2)?;
            let p = half_pair(&m)?;
            Ok((m, p))
        }
        Some(name) => {
            let sc = match name {
                "ghz" => ghz_scenario(10)?,
                "bell-poles" => bell_scenario(12)?,
                "product-state" => product_scenario(14)?,
                other => {
                    return Err(Fail::validation(format!(
                        "unknown oracle scenario {other:?}; expected torus3, patch, ghz, bell-poles or product-state"
                    )))
                }
            };
            Ok((sc.model, sc.pair))
        }
    }
}

pub fn oracle(ctx: &Ctx, scenario: Option<&str>) -> Result<(), Fail> {
    let cap = ctx.cfg.oracle.cap;
    let (model, pair) = oracle_model(ctx, scenario)?;
    let psi = dense_ground_state(&model, cap)?;
    let state = model.state()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut rows = Vec::new();
    let mut push = |kind: &str, a: Complex64, b: Complex64| {
        rows.push(OracleRow {
            kind: kind.into(),
            symbolic_re: a.re,
            symbolic_im: a.im,
            dense_re: b.re,
            dense_im: b.im,
            agree: (a - b).norm() < 1e-9,
        })
    };
    for _ in 0..ctx.cfg.oracle.samples {
        let p = random_sum_on(&model, pair.left_region.sites(), &mut rng);
        let q = random_sum_on(&model, pair.right_region.sites(), &mut rng);
        for o in [&p, &q] {
            push("expectation", state.expectation_sum(o).to_complex(), dense_expectation(&psi, o));
        }
        push(
            "twist_pairing",
            twist_pairing(&state, &p, &q, &pair)?.to_complex(),
            dense_twist_pairing(&psi, &p, &q, &pair.m_prime),
        );
    }
    let lto = dense_lto_check(&model, cap)?;
    let disagreements = rows.iter().filter(|r| !r.agree).count();
    let lto_pass = lto.pass;
    let res = OracleResult {
        model: model.name().to_string(),
        hilbert_dim: model.system().hilbert_dim().to_string(),
        rows,
        disagreements,
        lto,
    };
    ctx.emit("oracle", None, res)?;
    if disagreements > 0 {
        return Err(Fail::violation(format!("{disagreements} dense/symbolic disagreements")));
    }
    if !lto_pass {
        return Err(Fail::violation("LTO check failed on the dense instance".into()));
    }
    Ok(())
}

pub fn check(ctx: &Ctx) -> Result<(), Fail> {
    let model = ctx.cfg.build_model()?;
    let rep = check_model(&model, ctx.cfg.oracle.cap);
    let ok = rep.commuting && rep.frustration_free && rep.lto_small_instance != Some(false);
    ctx.emit("check", None, &rep)?;
    if !ok {
        return Err(Fail::violation("model check failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct AlgebraResult {
    left: stilde_core::commutant::LogicalAlgebraRecord,
    right: stilde_core::commutant::LogicalAlgebraRecord,
}

pub fn algebra(ctx: &Ctx) -> Result<(), Fail> {
    let (model, pair, l, r) = ctx.setup()?;
    let geometry = ctx.geometry(&pair, &model, 0)?;
    let res = AlgebraResult {
        left: logical_quotient(&model, &l)?.to_record(),
        right: logical_quotient(&model, &r)?.to_record(),
    };
    ctx.emit("algebra", Some(&geometry), res)
}
