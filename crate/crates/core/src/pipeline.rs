//! Jobs behind the `ncrat` command line. Each job takes parsed inputs and
//! returns a JSON report together with an outcome; the binary maps outcomes
//! to exit codes (0 certified, 2 negative certificate, 1 error).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::expr::RationalExpr;
use crate::fock::{
    chebyshev_vacuum_check, dual_system_check, expr_commutator_ranks, expr_to_series,
    fundamental_equality_check, shift_span_dimension, EvalOptions, FockBasis,
};
use crate::hankel::{
    certify_finite_rank, certify_finite_rank_numeric, classical_rationality, ClassicalStatus,
    RankMode, RankReport,
};
use crate::realize::{
    corner_identity_check, haagerup_check, haagerup_matrix_check, neumann_reconstruct, RealizeError,
};
use crate::scalar::{parse_q, q_to_f64, Q};
use crate::series::{SeriesJson, SeriesTable};
use crate::wfa::{
    learn_from_hankel, learn_from_hankel_numeric, LinearRepresentation, RepresentationJson,
    WfaError,
};
use crate::word::{enumerate_words, Letter, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Certified,
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::Negative => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Certified
        } else {
            Outcome::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobReport {
    pub outcome: Outcome,
    pub report: Value,
}

impl JobReport {
    fn new(outcome: Outcome, report: Value) -> Self {
        JobReport { outcome, report }
    }
}

pub fn error_report(command: &str, err: &anyhow::Error) -> Value {
    json!({ "command": command, "status": "error", "error": format!("{err:#}") })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_series(path: &Path) -> Result<SeriesTable> {
    let j: SeriesJson = read_json(path)?;
    SeriesTable::try_from(&j).with_context(|| format!("invalid series in {}", path.display()))
}

pub fn load_representation(path: &Path) -> Result<LinearRepresentation> {
    let j: RepresentationJson = read_json(path)?;
    LinearRepresentation::try_from(&j)
        .with_context(|| format!("invalid representation in {}", path.display()))
}

fn scalar_of(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => Ok(parse_q(s)?),
        Value::Number(n) if n.is_i64() => Ok(Q::from_integer(n.as_i64().expect("i64").into())),
        Value::Object(o) => match (o.get("num"), o.get("den")) {
            (Some(Value::String(n)), Some(Value::String(d))) => {
                Ok(crate::scalar::parse_pair(n, d)?)
            }
            _ => bail!("expected {{\"num\", \"den\"}} strings, got {v}"),
        },
        _ => bail!("expected an integer or a rational string, got {v}"),
    }
}

/// A coefficient list: a JSON array of integers or rational strings
/// (`"3/4"`), or an object with such an array under `"coeffs"`.
pub fn parse_coeffs(v: &Value) -> Result<Vec<Q>> {
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("coeffs") {
            Some(Value::Array(a)) => a,
            _ => bail!("missing \"coeffs\" array"),
        },
        _ => bail!("expected an array of coefficients"),
    };
    arr.iter().map(scalar_of).collect()
}

pub fn load_coeffs(path: &Path) -> Result<Vec<Q>> {
    parse_coeffs(&read_json(path)?)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn rank_report(z: &SeriesTable, k_max: usize, mode: RankMode, rel_tol: f64) -> Result<RankReport> {
    Ok(match mode {
        RankMode::Exact => certify_finite_rank(z, k_max)?,
        RankMode::Numeric => certify_finite_rank_numeric(z, k_max, rel_tol)?,
    })
}

pub fn rank(z: &SeriesTable, k_max: usize, mode: RankMode, rel_tol: f64) -> Result<JobReport> {
    let r = rank_report(z, k_max, mode, rel_tol)?;
    let mut report = to_value(&r);
    report["command"] = json!("rank");
    Ok(JobReport::new(Outcome::from_ok(r.is_stabilized()), report))
}

pub fn minimize(r: &LinearRepresentation) -> Result<JobReport> {
    let m = r.minimize();
    Ok(JobReport::new(
        Outcome::Certified,
        json!({
            "command": "minimize",
            "input_dim": r.dim(),
            "dim": m.dim(),
            "minimal": m.dim() == r.dim(),
            "representation": RepresentationJson::from(&m),
        }),
    ))
}

pub fn learn(z: &SeriesTable, k: usize, mode: RankMode, rel_tol: f64) -> Result<JobReport> {
    let learned = match mode {
        RankMode::Exact => learn_from_hankel(z, k).map(|r| (r, Value::Null)),
        RankMode::Numeric => {
            learn_from_hankel_numeric(z, k, rel_tol).map(|(r, fit)| (r, to_value(&fit)))
        }
    };
    match learned {
        Ok((r, fit)) => {
            let mut report = json!({
                "command": "learn",
                "status": "learned",
                "mode": mode,
                "dim": r.dim(),
                "representation": RepresentationJson::from(&r),
            });
            if !fit.is_null() {
                report["fit"] = fit;
            }
            Ok(JobReport::new(Outcome::Certified, report))
        }
        Err(e @ (WfaError::NotLowRank { .. } | WfaError::Inconsistent { .. })) => {
            Ok(JobReport::new(
                Outcome::Negative,
                json!({ "command": "learn", "status": "rejected", "mode": mode, "reason": e.to_string() }),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn coefficient_map(rec: &crate::fock::FockVector<f64>) -> BTreeMap<String, f64> {
    rec.terms().map(|(w, x)| (w.to_string(), *x)).collect()
}

pub fn realize(r: &LinearRepresentation, n: usize, m_max: usize, tol: f64) -> Result<JobReport> {
    let basis = FockBasis::new(r.d(), n)?;
    match neumann_reconstruct(r, &basis, m_max, tol) {
        Ok(rec) => {
            let ok = rec.report.converged;
            Ok(JobReport::new(
                Outcome::from_ok(ok),
                json!({
                    "command": "realize",
                    "status": if ok { "converged" } else { "tail_above_tol" },
                    "report": rec.report,
                    "coefficients": coefficient_map(&rec.vector),
                }),
            ))
        }
        Err(RealizeError::NotConverging { c }) => Ok(JobReport::new(
            Outcome::Negative,
            json!({ "command": "realize", "status": "not_converging", "c_prime": c }),
        )),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Serialize)]
struct CheckSummary {
    name: &'static str,
    checked: usize,
    failures: Vec<String>,
    ok: bool,
}

fn summarize(name: &'static str, results: Vec<(String, bool)>) -> CheckSummary {
    let failures: Vec<String> = results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(what, _)| what.clone())
        .collect();
    CheckSummary {
        name,
        checked: results.len(),
        ok: failures.is_empty(),
        failures,
    }
}

fn letters(d: usize) -> impl Iterator<Item = Letter> {
    (1..=d as u16).map(Letter::new)
}

/// Exact operator identities on `F_N`: `Û_v = e_v` for `|v| ≤ N`, the dual
/// system for `k < N`, the action of `[r_i^*, U_v]` on every interior column,
/// and the corner identity for `|v| ≤ min(N, 4)`.
pub fn fock_verify(d: usize, n: usize) -> Result<JobReport> {
    let basis = FockBasis::new(d, n)?;
    let words = enumerate_words(d, n);
    let mut checks = Vec::new();
    checks.push(summarize(
        "chebyshev_vacuum",
        words
            .iter()
            .map(|v| Ok((v.to_string(), chebyshev_vacuum_check(v, &basis)?)))
            .collect::<Result<_>>()?,
    ));
    let mut dual = Vec::new();
    for i in letters(d) {
        for j in letters(d) {
            for k in 0..n {
                dual.push((
                    format!("i={i} j={j} k={k}"),
                    dual_system_check(i, j, k, &basis)?,
                ));
            }
        }
    }
    checks.push(summarize("dual_system", dual));
    let mut action = Vec::new();
    for i in letters(d) {
        for v in &words {
            action.push((
                format!("i={i} v={v}"),
                fundamental_equality_check(i, v, &basis)?,
            ));
        }
    }
    checks.push(summarize("commutator_action", action));
    checks.push(summarize(
        "corner_identity",
        enumerate_words(d, n.min(4))
            .iter()
            .map(|v| Ok((v.to_string(), corner_identity_check(v, &basis)?)))
            .collect::<Result<_>>()?,
    ));
    let ok = checks.iter().all(|c| c.ok);
    Ok(JobReport::new(
        Outcome::from_ok(ok),
        json!({ "command": "fock-verify", "d": d, "N": n, "ok": ok, "checks": checks }),
    ))
}

pub fn kronecker1d(coeffs: &[Q]) -> Result<JobReport> {
    let a = classical_rationality(coeffs)?;
    let mut report = to_value(&a);
    report["command"] = json!("kronecker1d");
    if let Some(rec) = &a.recursion {
        report["recursion"] = json!(rec.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    }
    Ok(JobReport::new(
        Outcome::from_ok(a.status == ClassicalStatus::Stabilized),
        report,
    ))
}

/// Both norm checks for a homogeneous family; `n` defaults to `m + 4`.
pub fn haagerup(family: &SeriesTable, n: Option<usize>) -> Result<JobReport> {
    let alpha: Vec<(Word, Q)> = family
        .terms()
        .map(|(w, c)| (w.clone(), c.clone()))
        .collect();
    let m = alpha.first().map_or(0, |(w, _)| w.len());
    let basis = FockBasis::new(family.d(), n.unwrap_or(m + 4))?;
    let scalar = haagerup_check(&alpha, &basis)?;
    let matrix = haagerup_matrix_check(&alpha, &basis)?;
    let ok = scalar.ok && matrix.ok;
    Ok(JobReport::new(
        Outcome::from_ok(ok),
        json!({ "command": "haagerup", "ok": ok, "scalar": scalar, "matrix": matrix }),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub d: usize,
    /// Fock truncation for the reconstruction and commutator stages.
    pub n: usize,
    /// Degree of the coefficient table.
    pub l: usize,
    pub k_max: usize,
    pub tol: f64,
    pub rel_tol: f64,
    pub m_max: usize,
    pub residual_tol: f64,
    pub budget: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            d: 2,
            n: 12,
            l: 10,
            k_max: 4,
            tol: 1e-8,
            rel_tol: crate::hankel::DEFAULT_REL_TOL,
            m_max: 40,
            residual_tol: 1e-6,
            budget: EvalOptions::default().budget,
        }
    }
}

fn stage(
    report: &mut serde_json::Map<String, Value>,
    name: &str,
    ok: bool,
    mut body: Value,
) -> bool {
    body["ok"] = json!(ok);
    report.insert(name.to_string(), body);
    ok
}

/// Expression → series → Hankel certificate → learned representation →
/// Neumann reconstruction → commutator ranks. The status is the conjunction of
/// the stage statuses; stages after a failed one are skipped.
pub fn pipeline(expr: &RationalExpr, p: &PipelineParams) -> Result<JobReport> {
    let opts = EvalOptions {
        budget: p.budget,
        tol: p.tol,
    };
    let mut stages = serde_json::Map::new();
    let finish = |stages: serde_json::Map<String, Value>, ok: bool| {
        JobReport::new(
            Outcome::from_ok(ok),
            json!({
                "command": "pipeline",
                "expr": expr.to_string(),
                "d": p.d,
                "N": p.n,
                "L": p.l,
                "status": if ok { "certified" } else { "failed" },
                "stages": stages,
            }),
        )
    };

    let series = expr_to_series(expr, p.d, p.l, &opts)?;
    let ok = series.exact || series.error_bound <= p.tol;
    if !stage(&mut stages, "series", ok, to_value(&series)) {
        return Ok(finish(stages, false));
    }
    let z = &series.table;

    // singular values below the table error cannot be resolved
    let (mode, rel_tol) = if series.exact {
        (RankMode::Exact, 0.0)
    } else {
        (RankMode::Numeric, p.rel_tol.max(100.0 * series.error_bound))
    };
    let cert = rank_report(z, p.k_max, mode, rel_tol)?;
    let mut body = to_value(&cert);
    body["rel_tol"] = json!(rel_tol);
    if !stage(&mut stages, "hankel", cert.is_stabilized(), body) {
        return Ok(finish(stages, false));
    }
    let (rank, depth) = (
        cert.rank.expect("stabilized"),
        cert.at_depth.expect("stabilized"),
    );

    let learned = match mode {
        RankMode::Exact => learn_from_hankel(z, depth).map(|r| (r, 0.0)),
        RankMode::Numeric => {
            learn_from_hankel_numeric(z, depth, rel_tol).map(|(r, f)| (r, f.max_error))
        }
    };
    let (rep, fit_error) = match learned {
        Ok(x) => x,
        Err(e) => {
            stage(
                &mut stages,
                "learn",
                false,
                json!({ "error": e.to_string() }),
            );
            return Ok(finish(stages, false));
        }
    };
    let ok = rep.dim() == rank;
    let body = json!({
        "dim": rep.dim(),
        "fit_error": fit_error,
        "representation": RepresentationJson::from(&rep),
    });
    if !stage(&mut stages, "learn", ok, body) {
        return Ok(finish(stages, false));
    }

    let basis = FockBasis::new(p.d, p.n)?;
    let rec = match neumann_reconstruct(&rep, &basis, p.m_max, p.tol) {
        Ok(rec) => rec,
        Err(RealizeError::NotConverging { c }) => {
            stage(
                &mut stages,
                "realize",
                false,
                json!({ "c_prime": c, "error": "not converging" }),
            );
            return Ok(finish(stages, false));
        }
        Err(e) => return Err(e.into()),
    };
    let bound = p.n.saturating_sub(2).min(p.l);
    let series_residual = z
        .terms()
        .map(|(w, _)| w)
        .chain(rec.vector.terms().map(|(w, _)| w))
        .filter(|w| w.len() <= bound)
        .map(|w| (rec.vector.coeff(w) - q_to_f64(&z.coeff(w))).abs())
        .fold(0.0, f64::max);
    let ok = rec.report.converged && series_residual < p.residual_tol;
    let mut body = to_value(&rec.report);
    body["series_residual"] = json!(series_residual);
    if !stage(&mut stages, "realize", ok, body) {
        return Ok(finish(stages, false));
    }

    // exact ranks are cheap for polynomials; inverse columns need one solve each
    let comm_n = if expr.has_inverse() {
        (p.n / 2).max(2)
    } else {
        p.n
    };
    let ranks = expr_commutator_ranks(expr, p.d, comm_n, p.rel_tol, &opts)?;
    let stable = ranks.iter().all(|r| r.stable);
    let mut body = json!({ "N": comm_n, "ranks": ranks });
    let mut ok = stable;
    if !expr.has_inverse() {
        let span = shift_span_dimension(expr, p.d, comm_n)?;
        ok &= span.span_dim == rank;
        body["shift_span"] = to_value(&span);
    }
    let ok = stage(&mut stages, "commutators", ok, body);
    Ok(finish(stages, ok))
}
