use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use besicovitch::invariants::run_invariants;
use besicovitch::metrics::{
    almost_periods, besicovitch_distance, fourier_bohr_many, stepanov_distance, sup_distance, AveragingScheme,
};
use besicovitch::partition::{build_partition, PartitionFamily, PartitionOptions};
use besicovitch::perturb::{
    build_perturbation, lemma41_density, lemma41_witness, verify_level_density, PerturbOptions, SeriesRecord,
};
use besicovitch::schema::SchemeSpec;
use besicovitch::select::build_selection;
use besicovitch::{FuncExpr, MetricSpace, MultiMap, SetExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    point_metric, AlmostPeriodInputs, MetricsInputs, PartitionInputs, PartitionSettings, PerturbInputs, RunConfig,
    SelectInputs, VerifyInputs,
};
use crate::output::{to_json, Cell, Csv, Outputs};
use crate::RunError;

/// One checked inequality.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: String,
    pub inequality: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Certificate {
    fn below(name: &str, inequality: &str, measured: f64, bound: f64) -> Self {
        Certificate { name: name.into(), inequality: inequality.into(), measured, bound, passed: measured < bound }
    }

    fn at_most(name: &str, inequality: &str, measured: f64, bound: f64) -> Self {
        Certificate { name: name.into(), inequality: inequality.into(), measured, bound, passed: measured <= bound }
    }

    fn at_least(name: &str, inequality: &str, measured: f64, bound: f64) -> Self {
        Certificate { name: name.into(), inequality: inequality.into(), measured, bound, passed: measured >= bound }
    }
}

pub struct ScenarioResult {
    pub results: Value,
    pub certificates: Vec<Certificate>,
}

type Res<T> = std::result::Result<T, RunError>;

fn inputs<T: serde::de::DeserializeOwned>(cfg: &RunConfig) -> Res<T> {
    serde_json::from_value(cfg.inputs.clone()).map_err(|e| RunError::Input(format!("inputs: {e}")))
}

fn scheme(cfg: &RunConfig) -> Res<AveragingScheme> {
    let s = cfg.scheme.as_ref().ok_or_else(|| RunError::Input("\"scheme\" is required".into()))?;
    s.build().map_err(RunError::input)
}

fn space(cfg: &RunConfig) -> Res<MetricSpace> {
    let s = cfg.space.as_ref().ok_or_else(|| RunError::Input("\"space\" is required".into()))?;
    s.build().map_err(RunError::input)
}

fn optional_scheme(s: &Option<SchemeSpec>) -> Res<Option<AveragingScheme>> {
    s.as_ref().map(|s| s.build().map_err(RunError::input)).transpose()
}

fn check_dim(f: &FuncExpr, dim: usize, what: &str) -> Res<()> {
    if f.dim() != dim {
        return Err(RunError::Input(format!("{what} has dimension {} but the space has {dim}", f.dim())));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Res<Vec<u8>> {
    to_json(v).map_err(|e| RunError::Numerical { stage: "output".into(), message: e.to_string() })
}

pub fn metrics(cfg: &RunConfig, out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: MetricsInputs = inputs(cfg)?;
    let (space, scheme) = (space(cfg)?, scheme(cfg)?);
    let basis = inp.basis.build().map_err(RunError::input)?;
    let f = inp.f.build(&basis).map_err(RunError::input)?;
    let g = inp.g.build(&basis).map_err(RunError::input)?;
    check_dim(&f, space.dim, "f")?;
    check_dim(&g, space.dim, "g")?;
    let lambdas = inp.lambdas.iter().map(|l| l.value().map_err(RunError::input)).collect::<Res<Vec<f64>>>()?;
    let stage = |name: &'static str| move |e| RunError::stage(name, e);
    let db = besicovitch_distance(&f, &g, inp.p, &space, &scheme).map_err(stage("besicovitch"))?;
    let ds = stepanov_distance(&f, &g, inp.p, &space, &scheme).map_err(stage("stepanov"))?;
    let sup = sup_distance(&f, &g, &space, &scheme).map_err(stage("sup"))?;
    let coefs = if lambdas.is_empty() {
        Vec::new()
    } else {
        fourier_bohr_many(&f, &lambdas, &scheme).map_err(stage("fourier_bohr"))?
    };

    let mut certs = vec![Certificate::at_most("besicovitch_below_stepanov", "D_B <= D_S + 1e-6", db.value, ds.value + 1e-6)];
    if let Some(e) = &inp.expect {
        let want = e.value.value().map_err(RunError::input)?;
        certs.push(Certificate::below("expected_value", "|D_B - expected| < tol", (db.value - want).abs(), e.tol));
    }
    let mut csv = Csv::new(&["b", "average", "estimate_kind"]);
    for &(b, a) in &db.per_horizon {
        csv.row(&[Cell::F(b), Cell::F(a), Cell::S("horizon".into())]);
    }
    let b_max = db.per_horizon.last().map_or(f64::NAN, |p| p.0);
    csv.row(&[Cell::F(b_max), Cell::F(db.value), Cell::S("windowed_max".into())]);
    out.add("trace.csv", csv.into_bytes());
    Ok(ScenarioResult {
        results: json!({
            "p": inp.p,
            "besicovitch": db,
            "stepanov": ds,
            "sup": sup,
            "fourier_bohr": coefs,
        }),
        certificates: certs,
    })
}

pub fn almost(cfg: &RunConfig, out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: AlmostPeriodInputs = inputs(cfg)?;
    let scheme = scheme(cfg)?;
    let basis = inp.basis.build().map_err(RunError::input)?;
    let f = inp.f.build(&basis).map_err(RunError::input)?;
    if let Some(s) = &cfg.space {
        check_dim(&f, s.dim, "f")?;
    }
    let ap = almost_periods(&f, inp.eps, inp.metric, inp.tau_max, inp.tau_step, &scheme)
        .map_err(|e| RunError::stage("almost_periods", e))?;
    let mut csv = Csv::new(&["tau", "distance", "accepted"]);
    for &(tau, d) in &ap.scanned {
        csv.row(&[Cell::F(tau), Cell::F(d), Cell::U(usize::from(d < inp.eps))]);
    }
    out.add("almost_periods.csv", csv.into_bytes());
    let certs = vec![Certificate::at_most(
        "relatively_dense",
        "largest gap between accepted shifts <= tau_max",
        ap.witness.unwrap_or(f64::INFINITY),
        inp.tau_max,
    )];
    Ok(ScenarioResult {
        results: json!({
            "eps": inp.eps,
            "metric": inp.metric,
            "scanned": ap.scanned.len(),
            "accepted": ap.accepted,
            "witness": ap.witness,
        }),
        certificates: certs,
    })
}

pub fn perturb(cfg: &RunConfig, out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: PerturbInputs = inputs(cfg)?;
    let scheme = scheme(cfg)?;
    let basis = inp.basis.build().map_err(RunError::input)?;
    let family = inp.family.iter().map(|e| e.build(&basis).map_err(RunError::input)).collect::<Res<Vec<_>>>()?;
    if family.is_empty() {
        return Err(RunError::Input("family must be non-empty".into()));
    }
    for f in &family {
        check_dim(f, 1, "family member")?;
    }
    let probe = optional_scheme(&inp.probe_scheme)?;
    match (inp.eps, &inp.b, inp.depth) {
        (Some(eps), None, None) => perturb_single(&inp, eps, &family, &scheme, probe.as_ref(), out),
        (None, Some(b), Some(depth)) => {
            let b = b.value().map_err(RunError::input)?;
            perturb_series(&inp, b, depth, &family, &scheme, probe, cfg.seed.unwrap_or(0), out)
        }
        _ => Err(RunError::Input("perturb needs either \"eps\" or both \"b\" and \"J\"".into())),
    }
}

fn perturb_single(
    inp: &PerturbInputs,
    eps: f64,
    family: &[FuncExpr],
    scheme: &AveragingScheme,
    probe: Option<&AveragingScheme>,
    out: &mut Outputs,
) -> Res<ScenarioResult> {
    let w = lemma41_witness(family, eps, inp.delta_amp, probe.unwrap_or(scheme), 1e-6)
        .map_err(|e| RunError::stage("tau0", e))?;
    let mut kappas = Vec::new();
    for f in family {
        let k = lemma41_density(f, inp.delta_amp, w.alpha, w.params.delta, scheme)
            .map_err(|e| RunError::stage("density", e))?;
        kappas.push(k);
    }
    let worst = kappas.iter().map(|k| k.value).fold(f64::NEG_INFINITY, f64::max);
    let record = SeriesRecord {
        b: TAU / w.alpha,
        depth: 0,
        amplitudes: vec![inp.delta_amp],
        alpha: vec![w.alpha],
        delta: vec![w.params.delta],
        tau0: vec![w.tau0.tau0],
    };
    out.add("series.json", json(&record)?);
    let mut csv = Csv::new(&["stage", "kappa_estimate", "bound"]);
    csv.row(&[Cell::U(0), Cell::F(worst), Cell::F(eps)]);
    out.add("certificate.csv", csv.into_bytes());
    let certs = vec![Certificate::below("level_density", "kappa(|f + Delta sin(alpha t)| < delta) < eps + tol", worst, eps + inp.tol)];
    Ok(ScenarioResult {
        results: json!({ "params": w.params, "alpha": w.alpha, "tau0": w.tau0, "kappa": kappas }),
        certificates: certs,
    })
}

#[allow(clippy::too_many_arguments)]
fn perturb_series(
    inp: &PerturbInputs,
    b: f64,
    depth: usize,
    family: &[FuncExpr],
    scheme: &AveragingScheme,
    probe: Option<AveragingScheme>,
    seed: u64,
    out: &mut Outputs,
) -> Res<ScenarioResult> {
    let opts = PerturbOptions { probe_scheme: probe, ..Default::default() };
    let built = build_perturbation(family, inp.delta_amp, b, depth, scheme, &opts)
        .map_err(|e| RunError::stage("perturbation", e))?;
    let series = Arc::new(built.series);
    let basis = family[0].basis().map_err(RunError::input)?;
    let zero = FuncExpr::constant(&basis, &[0.0]).map_err(RunError::input)?;
    let g = zero.perturbed(series.clone()).map_err(RunError::input)?;
    let sup = sup_distance(&g, &zero, &MetricSpace::euclidean(1), scheme).map_err(|e| RunError::stage("sup", e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fractions: Vec<f64> = (0..inp.period_checks).map(|_| rng.gen_range(0.0..1.0)).collect();
    let drift = series.period_drift(&fractions);

    let mut certs = vec![
        Certificate::below("sup_norm", "max |g| on the grid < Delta", sup.value, inp.delta_amp),
        Certificate::at_most("periodicity", "|g(t + b) - g(t)| <= 1e-12", drift, 1e-12),
    ];
    let amps = series.amplitudes();
    for j in 0..depth {
        let tail: f64 = amps[j + 1..].iter().sum();
        let thr = series.stages()[j].threshold;
        certs.push(Certificate::at_most(&format!("budget_{j}"), "sum_{k>j} Delta_k <= delta_j", tail, thr));
    }
    let mut csv = Csv::new(&["stage", "kappa_estimate", "bound"]);
    let mut kappas = Vec::new();
    for j in 0..=depth {
        let mut worst = f64::NEG_INFINITY;
        for f in family {
            let k = verify_level_density(f, &series, j, scheme).map_err(|e| RunError::stage("density", e))?;
            worst = worst.max(k.value);
            kappas.push(json!({ "stage": j, "estimate": k }));
        }
        let bound = 0.5f64.powi(j as i32 + 1);
        csv.row(&[Cell::U(j), Cell::F(worst), Cell::F(bound)]);
        certs.push(Certificate::below(
            &format!("level_density_{j}"),
            "kappa(|f_j + g_j| < delta_j) < 2^{-j-1} + tol",
            worst,
            bound + inp.tol,
        ));
    }
    out.add("series.json", json(&series.to_record())?);
    out.add("certificate.csv", csv.into_bytes());
    Ok(ScenarioResult {
        results: json!({
            "series": series.to_record(),
            "stages": built.reports,
            "sup": sup,
            "period_drift": drift,
            "kappa": kappas,
        }),
        certificates: certs,
    })
}

fn partition_options(s: &PartitionSettings) -> Res<PartitionOptions> {
    Ok(PartitionOptions {
        depth: s.depth,
        resid_target: s.resid_target,
        max_centers: s.max_centers,
        period: s.period.as_ref().map(|p| p.value().map_err(RunError::input)).transpose()?,
        perturb: PerturbOptions { probe_scheme: optional_scheme(&s.probe_scheme)?, ..Default::default() },
    })
}

/// Set expressions as a node table; shared subtrees and the level sets
/// `T'_j` (tag `level` with a `center`) appear once.
fn set_table(p: &PartitionFamily) -> Value {
    let centers: HashMap<usize, usize> =
        p.primes.iter().enumerate().map(|(j, s)| (Arc::as_ptr(s) as usize, j)).collect();
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut nodes: Vec<Value> = Vec::new();
    fn visit(
        s: &Arc<SetExpr>,
        centers: &HashMap<usize, usize>,
        ids: &mut HashMap<usize, usize>,
        nodes: &mut Vec<Value>,
    ) -> usize {
        let key = Arc::as_ptr(s) as usize;
        if let Some(&id) = ids.get(&key) {
            return id;
        }
        let node = match &**s {
            SetExpr::Level { threshold, relation, .. } => match centers.get(&key) {
                Some(j) => json!({ "tag": "level", "center": j }),
                None => json!({ "tag": "level", "threshold": threshold, "relation": relation }),
            },
            SetExpr::Union(a, b) => json!({ "tag": "union", "of": [visit(a, centers, ids, nodes), visit(b, centers, ids, nodes)] }),
            SetExpr::Intersect(a, b) => {
                json!({ "tag": "intersect", "of": [visit(a, centers, ids, nodes), visit(b, centers, ids, nodes)] })
            }
            SetExpr::Diff(a, b) => {
                json!({ "tag": "diff", "left": visit(a, centers, ids, nodes), "right": visit(b, centers, ids, nodes) })
            }
            SetExpr::Complement(a) => json!({ "tag": "complement", "of": visit(a, centers, ids, nodes) }),
            SetExpr::FullLine => json!({ "tag": "full_line" }),
            SetExpr::Empty => json!({ "tag": "empty" }),
        };
        let id = nodes.len();
        nodes.push(node);
        ids.insert(key, id);
        id
    }
    let roots: Vec<usize> = p.sets.iter().map(|s| visit(s, &centers, &mut ids, &mut nodes)).collect();
    json!({ "nodes": nodes, "roots": roots })
}

pub fn partition(cfg: &RunConfig, out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: PartitionInputs = inputs(cfg)?;
    let (space_spec, scheme) = (cfg.space.as_ref().ok_or_else(|| RunError::Input("\"space\" is required".into()))?, scheme(cfg)?);
    let space = space(cfg)?;
    let basis = inp.basis.build().map_err(RunError::input)?;
    let f = inp.f.build(&basis).map_err(RunError::input)?;
    check_dim(&f, space.dim, "f")?;
    let metric = point_metric(space_spec);
    let opts = partition_options(&inp.options)?;
    let p = build_partition(&f, inp.eps, &metric, &scheme, &opts).map_err(|e| RunError::stage("partition", e))?;

    let mut csv = Csv::new(&["t", "member_index", "dist_to_center"]);
    let (mut decided, mut far, mut overlaps, mut mismatched) = (0usize, 0usize, 0usize, 0usize);
    let (mut outside, mut separated) = (0usize, 0usize);
    let mut memo = HashMap::new();
    for t in inp.samples.times() {
        let v = f.eval(t).map_err(|e| RunError::stage("sampling", e))?;
        memo.clear();
        let mut members = Vec::new();
        for (j, s) in p.sets.iter().enumerate() {
            if s.contains_memo(t, &mut memo).map_err(|e| RunError::stage("sampling", e))? {
                members.push(j);
            }
        }
        if members.len() > 1 {
            overlaps += 1;
        }
        let located = p.locate(t).map_err(|e| RunError::stage("sampling", e))?;
        if located != members.first().copied() {
            mismatched += 1;
        }
        match members.first() {
            Some(&j) => {
                decided += 1;
                let d = metric.dist(&v, &p.points[j]);
                if d >= inp.eps {
                    far += 1;
                }
                csv.row(&[Cell::F(t), Cell::U(j), Cell::F(d)]);
            }
            None => {
                outside += 1;
                let d = p.points.iter().map(|x| metric.dist(&v, x)).fold(f64::INFINITY, f64::min);
                if d > inp.eps / 3.0 {
                    separated += 1;
                }
                csv.row(&[Cell::F(t), Cell::Empty, Cell::F(d)]);
            }
        }
    }
    out.add("samples.csv", csv.into_bytes());

    let sep_rate = if outside == 0 { 1.0 } else { separated as f64 / outside as f64 };
    let curve_rise = p.residual_curve.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let certs = vec![
        Certificate::at_most("approximation", "samples in T_j with rho(f(t), x_j) >= eps", far as f64, 0.0),
        Certificate::at_most("disjointness", "samples in more than one T_j", overlaps as f64, 0.0),
        Certificate::at_most("locate_agreement", "samples where locate disagrees with membership", mismatched as f64, 0.0),
        Certificate::below("residual", "upper density of the uncovered times < resid_target", p.residual.value, inp.options.resid_target),
        Certificate::at_least("separation", "share of outside samples with min_j rho > eps/3", sep_rate, inp.separation_rate),
        Certificate::at_most("residual_monotone", "largest rise of the residual curve", curve_rise, 0.01),
    ];
    let levels: Vec<Value> = p
        .perturbations
        .iter()
        .enumerate()
        .map(|(j, g)| json!({ "center": j, "offset": -2.0 * inp.eps / 3.0, "series": g.to_record() }))
        .collect();
    let doc = json!({
        "eps": p.eps,
        "centers": p.points,
        "residual": p.residual.value,
        "residual_estimate": p.residual,
        "residual_curve": p.residual_curve,
        "b": p.b,
        "levels": levels,
        "sets": set_table(&p),
        "module_generators": p.module_report.generators(),
    });
    out.add("partition.json", json(&doc)?);
    Ok(ScenarioResult {
        results: json!({
            "centers": p.len(),
            "residual": p.residual.value,
            "samples": inp.samples.count,
            "decided": decided,
            "outside": outside,
            "separated": separated,
        }),
        certificates: certs,
    })
}

pub fn select(cfg: &RunConfig, out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: SelectInputs = inputs(cfg)?;
    let (space, scheme) = (space(cfg)?, scheme(cfg)?);
    let basis = inp.basis.build().map_err(RunError::input)?;
    let trajectories =
        inp.trajectories.iter().map(|e| e.build(&basis).map_err(RunError::input)).collect::<Res<Vec<_>>>()?;
    let g = inp.g.build(&basis).map_err(RunError::input)?;
    check_dim(&g, space.dim, "g")?;
    let d = space.dim;
    let map = MultiMap::new(trajectories, space.clone()).map_err(RunError::input)?;
    let opts = partition_options(&inp.options)?;
    let r = build_selection(&map, &g, inp.eps, inp.n_max, &scheme, &opts).map_err(|e| RunError::stage("selection", e))?;

    let mut header = vec!["t".to_string()];
    if d == 1 {
        header.push("selected_value".into());
    } else {
        header.extend((0..d).map(|c| format!("selected_value_{c}")));
    }
    header.extend(["dist_to_F".into(), "dist_g_to_F".into()]);
    let mut csv = Csv::with_header(header);
    for t in inp.samples.times() {
        let stage = |e| RunError::stage("sampling", e);
        let s = r.selection.eval(t).map_err(stage)?;
        let gv = g.eval(t).map_err(stage)?;
        let mut row = vec![Cell::F(t)];
        row.extend(s.iter().map(|x| Cell::F(*x)));
        row.push(Cell::F(map.dist_to(t, &s).map_err(stage)?));
        row.push(Cell::F(map.dist_to(t, &gv).map_err(stage)?));
        csv.row(&row);
    }
    out.add("trace.csv", csv.into_bytes());

    let mut certs = Vec::new();
    for log in &r.chain_log {
        if let Some(bound) = log.step_bound {
            certs.push(Certificate::below(
                &format!("chain_step_{}", log.depth),
                "max rho(f(n-1; t), f(n; t)) < 2 (gamma_{n-1} + gamma_n) eps",
                log.max_step,
                bound,
            ));
        }
    }
    let c = &r.certificate;
    certs.push(Certificate::below(
        "membership",
        "density of dist(f(t), F(t)) >= gamma_1 eps + tail_bound",
        c.membership.value,
        inp.tol,
    ));
    certs.push(Certificate::below("nearness", "density of rho(f, g) >= rho(g, F) + eps", c.nearness.value, inp.tol));
    let cells: Vec<Value> = r.final_cells().map(|c| json!({ "indices": c.indices, "point": c.point })).collect();
    let doc = json!({
        "eps": r.eps,
        "depth": r.depth,
        "cells": cells,
        "certificate": {
            "tail_bound": c.tail_bound,
            "membership_threshold": c.membership_threshold,
            "membership_exceedance": c.membership.value,
            "nearness_exceedance": c.nearness.value,
        },
        "gammas": r.gammas.gammas,
        "chain_log": r.chain_log,
        "module_generators": r.module_report.generators(),
    });
    out.add("selection.json", json(&doc)?);
    Ok(ScenarioResult {
        results: json!({
            "tail_bound": c.tail_bound,
            "membership": c.membership,
            "nearness": c.nearness,
            "chain_log": r.chain_log,
            "partition_sizes": r.partitions.iter().map(|p| p.len()).collect::<Vec<_>>(),
        }),
        certificates: certs,
    })
}

pub fn verify(cfg: &RunConfig, _out: &mut Outputs) -> Res<ScenarioResult> {
    let inp: VerifyInputs = if cfg.inputs.is_null() { VerifyInputs { seeds: 1 } } else { inputs(cfg)? };
    let base = cfg.seed.unwrap_or(0);
    let mut runs = Vec::new();
    let mut certs = Vec::new();
    for k in 0..inp.seeds as u64 {
        let seed = base.wrapping_add(k);
        let outcomes = run_invariants(seed).map_err(|e| RunError::stage("invariants", e))?;
        for o in &outcomes {
            certs.push(Certificate {
                name: format!("{}_seed_{seed}", o.name),
                inequality: o.detail.clone(),
                measured: if o.passed { 0.0 } else { 1.0 },
                bound: 0.0,
                passed: o.passed,
            });
        }
        runs.push(json!({ "seed": seed, "outcomes": outcomes }));
    }
    Ok(ScenarioResult { results: json!({ "runs": runs }), certificates: certs })
}
