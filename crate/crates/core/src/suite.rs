//! The acceptance checks, shared by `qham suite all` and the acceptance test
//! target. Every check draws from streams of the configured seed, so a report
//! depends only on the configuration.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cob::{
    compose, functoriality_check, generator, glue_realizing_quivers, n_functor, parse_expression, random_morphism,
    verify_relations, CobMorphism,
};
use crate::config::{RunConfig, QP_BRACKET_CONSTANT};
use crate::deformation::{
    bivector_limit_norms, family_bivector, family_bivector_fd, mult_map, mult_residual_norms, random_chart_algebra,
    trivector_norms, GPoint, SlopeReport,
};
use crate::error::Result;
use crate::implosion::{
    alcove_faces, b_faces, chamber_faces, omega_tau, stratum_family_form, stratum_inventory, tau_of, ImplodedSpace,
};
use crate::lie::LieGroupModel;
use crate::multivector::psi_identity_residual;
use crate::qp::{
    double_action_pushforward, double_bundle, eq1_bundle, eq1_candidate, measure_bracket_constant, pg_bundle,
    sample_regular_point, verify_quasi_poisson,
};
use crate::quiver::{
    contract_edge, contractible_edges, glue, level_set_residual, moment_jacobian_rank, normalize, random_quiver,
    sample_level_set, stabilizer_propagate, Matching,
};
use crate::rng::sample_rng;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub details: Value,
}

/// Full report of `suite all`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub config: RunConfig,
    pub criteria: Vec<CriterionReport>,
    pub pass: bool,
}

pub const CRITERION_NAMES: [&str; 11] = [
    "psi identity",
    "quasi-Poisson identity",
    "deformation limit",
    "chart smoothness",
    "stratum family limit",
    "stratum inventories",
    "freeness",
    "dimension laws",
    "homotopy invariance",
    "tqft relations",
    "eq1 candidate",
];

fn model(id: &str) -> LieGroupModel {
    LieGroupModel::from_id(id).expect("built-in model")
}

/// Stream index for sample `i` of criterion `k`.
fn stream(k: usize, i: usize) -> u64 {
    (k as u64) << 32 | i as u64
}

/// Runs criterion `id` (1 to 11).
pub fn run_criterion(id: usize, cfg: &RunConfig) -> Result<CriterionReport> {
    let (pass, details) = match id {
        1 => psi_identity(cfg)?,
        2 => quasi_poisson(cfg)?,
        3 => deformation_limit(cfg)?,
        4 => chart_smoothness(cfg)?,
        5 => stratum_limit(cfg)?,
        6 => inventories()?,
        7 => freeness(cfg)?,
        8 => dimension_laws(cfg)?,
        9 => homotopy(cfg)?,
        10 => tqft(cfg)?,
        11 => eq1(cfg)?,
        _ => return Err(crate::QhamError::Domain(format!("no criterion {id}"))),
    };
    Ok(CriterionReport {
        id,
        name: CRITERION_NAMES[id - 1].to_string(),
        pass,
        details,
    })
}

pub fn run_all(cfg: &RunConfig) -> Result<SuiteReport> {
    let criteria = (1..=CRITERION_NAMES.len())
        .map(|i| run_criterion(i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        schema: 1,
        config: cfg.clone(),
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    })
}

fn psi_identity(cfg: &RunConfig) -> Result<(bool, Value)> {
    let mut res = BTreeMap::new();
    for id in ["su2", "su3", "so3", "prod:su2,su2"] {
        res.insert(id, psi_identity_residual(&model(id))?);
    }
    let tol = cfg.tolerances.psi;
    let pass = res.values().all(|r| *r < tol);
    Ok((pass, json!({"residuals": res, "tolerance": tol})))
}

fn quasi_poisson(cfg: &RunConfig) -> Result<(bool, Value)> {
    let tol = &cfg.tolerances;
    let mut reports = Vec::new();
    for (k, (id, n, scale)) in [("su2", 100, 0.8), ("su3", 50, 0.5)].into_iter().enumerate() {
        let b = pg_bundle(&model(id));
        let pts: Vec<DVector<f64>> = (0..n)
            .map(|i| b.space().random_chart_point(&mut sample_rng(cfg.seed, stream(20 + k, i)), scale))
            .collect();
        reports.push(verify_quasi_poisson(&b, &pts, cfg.fd_step, QP_BRACKET_CONSTANT, tol.qp, Some(cfg.seed))?);
    }
    // phi_G vanishes on SU(2); its constant is read off the SU(2) double.
    let d2 = eq1_bundle(&double_bundle(&model("su2")));
    let mut c_su2 = Vec::new();
    for i in 0..3 {
        let x = d2.space().random_chart_point(&mut sample_rng(cfg.seed, stream(22, i)), 0.4);
        if let Some(c) = measure_bracket_constant(&d2, &x, cfg.fd_step)? {
            c_su2.push(c);
        }
    }
    let b3 = pg_bundle(&model("su3"));
    let mut c_su3 = Vec::new();
    for i in 0..5 {
        let x = b3.space().random_chart_point(&mut sample_rng(cfg.seed, stream(21, i)), 0.5);
        if let Some(c) = measure_bracket_constant(&b3, &x, cfg.fd_step)? {
            c_su3.push(c);
        }
    }
    let all: Vec<f64> = c_su2.iter().chain(&c_su3).cloned().collect();
    let spread = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - all.iter().cloned().fold(f64::INFINITY, f64::min);
    let consistent = !c_su2.is_empty() && !c_su3.is_empty() && spread < tol.c_consistency;
    let pass = consistent && reports.iter().all(|r| r.pass);
    Ok((
        pass,
        json!({
            "c": QP_BRACKET_CONSTANT,
            "c_su2_double": c_su2,
            "c_su3": c_su3,
            "c_spread": spread,
            "c_tolerance": tol.c_consistency,
            "reports": reports,
        }),
    ))
}

fn deformation_limit(cfg: &RunConfig) -> Result<(bool, Value)> {
    let grid = &cfg.t_grid;
    let mut bivector = Vec::new();
    let mut trivector = Vec::new();
    let mut fd_worst: f64 = 0.0;
    for (k, id) in ["su2", "su3"].into_iter().enumerate() {
        let m = model(id);
        let rows: Vec<_> = (0..20)
            .into_par_iter()
            .map(|i| -> Result<_> {
                let idx = stream(30 + k, i);
                let x = random_chart_algebra(&m, &mut sample_rng(cfg.seed, idx));
                let b = SlopeReport::new(id, Some(idx), grid, bivector_limit_norms(&m, &x, grid)?, 0.9, 1.1);
                let t = SlopeReport::new(id, Some(idx), grid, trivector_norms(&m, &x, grid)?, 0.9, f64::INFINITY);
                let mut fd: f64 = 0.0;
                for t in grid.iter().filter(|t| **t >= 1e-3) {
                    fd = fd.max((family_bivector(&m, &x, *t)? - family_bivector_fd(&m, &x, *t)?).norm());
                }
                Ok((b, t, fd))
            })
            .collect::<Result<_>>()?;
        for (b, t, fd) in rows {
            bivector.push(b);
            trivector.push(t);
            fd_worst = fd_worst.max(fd);
        }
    }
    let biv_pass = bivector.iter().all(|r| r.pass);
    let tri_pass = trivector.iter().all(|r| r.pass);
    let fd_pass = fd_worst < cfg.tolerances.family_fd;
    let slopes: Vec<Option<f64>> = bivector.iter().map(|r| r.slope).collect();
    Ok((
        biv_pass && tri_pass && fd_pass,
        json!({
            "bivector_slope_window": [0.9, 1.1],
            "bivector_pass": biv_pass,
            "bivector_slopes": slopes,
            "trivector_pass": tri_pass,
            "trivector": trivector,
            "fd_max_discrepancy": fd_worst,
            "fd_tolerance": cfg.tolerances.family_fd,
            "fd_pass": fd_pass,
            "bivector": bivector,
        }),
    ))
}

fn chart_smoothness(cfg: &RunConfig) -> Result<(bool, Value)> {
    let grid = &cfg.t_grid;
    let mut reports = Vec::new();
    let mut exact = true;
    for (k, id) in ["su2", "su3"].into_iter().enumerate() {
        let m = model(id);
        for i in 0..20 {
            let idx = stream(40 + k, i);
            let mut rng = sample_rng(cfg.seed, idx);
            let x = random_chart_algebra(&m, &mut rng);
            let y = random_chart_algebra(&m, &mut rng);
            reports.push(SlopeReport::new(id, Some(idx), grid, mult_residual_norms(&m, &x, &y, grid)?, 1.9, f64::INFINITY));
            let sum = mult_map(&m, &GPoint::Algebra { x: x.clone() }, &GPoint::Algebra { x: y.clone() })?;
            exact &= sum == GPoint::Algebra { x: &x + &y };
        }
    }
    let pass = exact && reports.iter().all(|r| r.pass);
    Ok((pass, json!({"t_zero_exact": exact, "reports": reports})))
}

fn stratum_limit(cfg: &RunConfig) -> Result<(bool, Value)> {
    let grid = &cfg.t_grid;
    let mut rows = Vec::new();
    let mut pass = true;
    for (k, id) in ["su2", "su3"].into_iter().enumerate() {
        let m = model(id);
        for (i, f) in alcove_faces(&m)?.into_iter().filter(|f| f.contains_origin_in_closure).enumerate() {
            let mut rng = sample_rng(cfg.seed, stream(50 + k, i));
            let (y1, z1, y2, z2) = (
                m.random_algebra(&mut rng, 1.0),
                m.random_algebra(&mut rng, 1.0),
                m.random_algebra(&mut rng, 1.0),
                m.random_algebra(&mut rng, 1.0),
            );
            let x = &f.representative_point;
            let at0 = stratum_family_form(&m, &f, x, 0.0, (&y1, &z1), (&y2, &z2))?;
            let exact = at0 == omega_tau(&m, x, (&y1, &z1), (&y2, &z2));
            let norms = grid
                .iter()
                .map(|t| Ok((stratum_family_form(&m, &f, x, *t, (&y1, &z1), (&y2, &z2))? - at0).abs()))
                .collect::<Result<Vec<f64>>>()?;
            let report = SlopeReport::new(id, None, grid, norms, 0.9, f64::INFINITY);
            pass &= exact && report.pass;
            rows.push(json!({"face": f.id, "t_zero_exact": exact, "report": report}));
        }
    }
    Ok((pass, json!({ "faces": rows })))
}

fn inventories() -> Result<(bool, Value)> {
    let su2 = model("su2");
    let mut d: Vec<(usize, String)> = stratum_inventory(&su2, ImplodedSpace::DoubleImplosion)?
        .into_iter()
        .map(|s| (s.dim, s.target.unwrap_or_default()))
        .collect();
    d.sort();
    let d_ok = d.iter().map(|s| s.0).collect::<Vec<_>>() == vec![0, 0, 4]
        && d.iter().filter(|s| s.1 == "EMPTY").count() == 1
        && d.iter().any(|s| s.0 == 0 && s.1 == "EMPTY");
    let mut c: Vec<usize> = stratum_inventory(&su2, ImplodedSpace::CotangentImplosion)?
        .iter()
        .map(|s| s.dim)
        .collect();
    c.sort();
    let c_ok = c == vec![0, 4];

    let su3 = model("su3");
    let mut formula_ok = true;
    for s in stratum_inventory(&su3, ImplodedSpace::DoubleImplosion)?
        .iter()
        .chain(stratum_inventory(&su3, ImplodedSpace::CotangentImplosion)?.iter())
    {
        formula_ok &= s.dim == su3.dim() - s.face.dim_commutator + s.face.dim;
    }
    let mut counts = BTreeMap::new();
    let mut bijection_ok = true;
    for (name, m) in [("su2", &su2), ("su3", &su3)] {
        let alcove = alcove_faces(m)?;
        let chamber = chamber_faces(m)?;
        let b = b_faces(m)?;
        let mut images = Vec::new();
        for f in &alcove {
            if let Some(t) = tau_of(m, f)? {
                bijection_ok &= t.dim == f.dim && t.dim_commutator == f.dim_commutator;
                images.push(t.id);
            }
        }
        images.sort();
        images.dedup();
        bijection_ok &= images.len() == chamber.len() && alcove.len() == chamber.len() + b.len();
        counts.insert(name, json!({"alcove": alcove.len(), "chamber": chamber.len(), "b": b.len()}));
    }
    let pass = d_ok && c_ok && formula_ok && bijection_ok;
    Ok((
        pass,
        json!({
            "su2_double_implosion": d,
            "su2_cotangent_implosion": c,
            "su3_dimension_formulas": formula_ok,
            "face_counts": counts,
            "bijection": bijection_ok,
        }),
    ))
}

fn freeness(cfg: &RunConfig) -> Result<(bool, Value)> {
    let m = model("su2");
    let tol = &cfg.tolerances;
    let rows: Vec<Value> = (0..20)
        .into_par_iter()
        .map(|i| -> Result<Value> {
            let mut rng = sample_rng(cfg.seed, stream(70, i));
            let q = random_quiver(&mut rng, 8);
            let inv = q.validate()?;
            let mut stab: f64 = 0.0;
            let mut level: f64 = 0.0;
            let mut identity = true;
            let mut rank_ok = true;
            for _ in 0..5 {
                let p = sample_level_set(&q, &m, &mut rng, None)?;
                let s = stabilizer_propagate(&q, &m, &p)?;
                identity &= s.is_identity;
                stab = stab.max(s.residual);
                level = level.max(level_set_residual(&q, &m, &p)?);
                rank_ok &= moment_jacobian_rank(&q, &m, &p, tol.jacobian_rank)? == 3 * inv.n_interior;
            }
            let pass = identity && stab < tol.freeness && level < tol.level_set && rank_ok;
            Ok(json!({
                "quiver": q, "n_interior": inv.n_interior, "identity": identity,
                "stabilizer_residual": stab, "level_set_residual": level, "rank_ok": rank_ok, "pass": pass,
            }))
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r["pass"] == json!(true));
    Ok((pass, json!({ "quivers": rows })))
}

fn dimension_laws(cfg: &RunConfig) -> Result<(bool, Value)> {
    let mut formula_failures = 0;
    for i in 0..200 {
        let q = random_quiver(&mut sample_rng(cfg.seed, stream(80, i)), 8);
        let inv = q.validate()?;
        if inv.dim_units != 2 * (inv.genus + inv.m as i64 + inv.n as i64 - 1) {
            formula_failures += 1;
        }
    }
    let mut glued = 0;
    let mut gluing_failures = 0;
    let mut i = 0;
    while glued < 50 {
        let q1 = random_quiver(&mut sample_rng(cfg.seed, stream(81, i)), 8);
        let q2 = random_quiver(&mut sample_rng(cfg.seed, stream(82, i)), 8);
        i += 1;
        let (b1, b2) = (q1.boundary_split()?, q2.boundary_split()?);
        if b1.outgoing.is_empty() || b1.outgoing.len() != b2.incoming.len() {
            continue;
        }
        let matching: Matching = b1.outgoing.iter().cloned().zip(b2.incoming.iter().cloned()).collect();
        let g = glue(&q1, &q2, &matching)?.validate()?;
        let d = b1.outgoing.len() as i64;
        if g.dim_units != q1.validate()?.dim_units + q2.validate()?.dim_units - 2 * d {
            gluing_failures += 1;
        }
        glued += 1;
    }
    Ok((
        formula_failures == 0 && gluing_failures == 0,
        json!({
            "quivers": 200, "formula_failures": formula_failures,
            "glued_pairs": glued, "pairs_drawn": i, "gluing_failures": gluing_failures,
        }),
    ))
}

fn homotopy(cfg: &RunConfig) -> Result<(bool, Value)> {
    let mut done = 0;
    let mut failures = 0;
    let mut normalize_failures = 0;
    let mut i = 0;
    while done < 200 {
        let mut rng = sample_rng(cfg.seed, stream(90, i));
        i += 1;
        let q = random_quiver(&mut rng, 8);
        let (n, steps) = normalize(&q)?;
        if steps > q.edges.len() || normalize(&n)? != (n.clone(), 0) {
            normalize_failures += 1;
        }
        let edges = contractible_edges(&q)?;
        if edges.is_empty() {
            continue;
        }
        let e = &edges[rng.gen_range(0..edges.len())];
        let a = q.validate()?;
        let b = contract_edge(&q, e)?.validate()?;
        if (a.m, a.n, a.genus, a.dim_units) != (b.m, b.n, b.genus, b.dim_units) {
            failures += 1;
        }
        done += 1;
    }
    Ok((
        failures == 0 && normalize_failures == 0,
        json!({
            "contractions": done, "quivers_drawn": i,
            "invariant_failures": failures, "normalize_failures": normalize_failures,
        }),
    ))
}

fn random_pair(cfg: &RunConfig, k: usize, i: usize) -> (CobMorphism, CobMorphism) {
    let mut rng = sample_rng(cfg.seed, stream(k, i));
    let (a, b, c) = (rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..4));
    (random_morphism(&mut rng, a, b, 2), random_morphism(&mut rng, b, c, 2))
}

fn tqft(cfg: &RunConfig) -> Result<(bool, Value)> {
    let m = model(&cfg.group);
    let dim_g = m.dim() as i64;
    let relations = verify_relations()?;
    let mut identity_ok = true;
    let mut functor_ok = true;
    let mut cross_ok = true;
    let mut open_components = 0;
    let check_cross = |mor: &CobMorphism, open: &mut usize, ok: &mut bool| -> Result<()> {
        for c in n_functor(mor, &m).components {
            if let Some(q) = &c.realizing_quiver {
                *open += 1;
                *ok &= Some(q.validate()?.dim_n(m.dim())) == c.dim;
            }
        }
        Ok(())
    };
    for i in 0..50 {
        let (m1, m2) = random_pair(cfg, 100, i);
        identity_ok &= compose(&CobMorphism::identity(m1.target), &m1)? == m1;
        identity_ok &= compose(&m1, &CobMorphism::identity(m1.source))? == m1;
        functor_ok &= functoriality_check(&m1, &m2, &m)?.pass;
        let comp = compose(&m2, &m1)?;
        for mor in [&m1, &m2, &comp] {
            check_cross(mor, &mut open_components, &mut cross_ok)?;
        }
        if let Some(g) = glue_realizing_quivers(&m1, &m2) {
            g?.validate()?;
        }
    }
    let torus_rep = functoriality_check(&generator("copants")?, &generator("pants")?, &m)?;
    let torus = &torus_rep.components[0];
    let torus_ok = torus_rep.pass && torus.genus == 1 && torus.functor_dim == Some(4 * dim_g);
    let cup = n_functor(&generator("cup")?, &m).components[0].dim;
    let cap = n_functor(&generator("cap")?, &m).components[0].dim;
    let points_ok = cup == Some(0) && cap == Some(0);
    let unit = parse_expression("cap * id 1 ; pants")? == generator("cyl")?;
    let pass = relations.pass && identity_ok && functor_ok && cross_ok && torus_ok && points_ok && unit;
    Ok((
        pass,
        json!({
            "relations": relations,
            "identity_law": identity_ok,
            "functoriality": functor_ok,
            "pants_after_copants": torus_rep,
            "cup_dim": cup, "cap_dim": cap,
            "open_components_checked": open_components,
            "realizing_quiver_dims": cross_ok,
        }),
    ))
}

fn eq1(cfg: &RunConfig) -> Result<(bool, Value)> {
    let tol = &cfg.tolerances;
    let m = model("su2");
    let d = double_bundle(&m);
    let rows: Vec<(f64, f64)> = (0..20)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = sample_rng(cfg.seed, stream(110, i));
            let p = sample_regular_point(&d, &mut rng, tol.omega_condition)?;
            let cand = eq1_candidate(&d, &p, tol.omega_condition)?;
            let mut inv: f64 = 0.0;
            for _ in 0..10 {
                let (g, h) = (m.random_group(&mut rng), m.random_group(&mut rng));
                let q = d.space().act(&[g, h.clone()], &p)?;
                let moved = eq1_candidate(&d, &q, f64::INFINITY)?.coefficient;
                let t = double_action_pushforward(&m, &h);
                inv = inv.max((moved - &t * &cand.coefficient * t.transpose()).norm());
            }
            Ok((cand.antisymmetry_residual, inv))
        })
        .collect::<Result<_>>()?;
    let anti = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let inv = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let pass = anti < tol.eq1_antisymmetry && inv < tol.eq1_invariance;
    Ok((
        pass,
        json!({
            "points": rows.len(),
            "max_antisymmetry": anti, "antisymmetry_tolerance": tol.eq1_antisymmetry,
            "max_invariance": inv, "invariance_tolerance": tol.eq1_invariance,
        }),
    ))
}
