use cardy_core::bdr::{
    assemble, check_det, check_quadruple, check_triple, coboundary_lines, suspect_edges, BdrJson, LineClass,
};
use cardy_core::brane::{
    check_additivity, check_adjoint, check_cardy, check_centrality, check_sewing, generator_labels, BraneLabel,
    BraneSystemJson,
};
use cardy_core::family::{
    check_cocycle, check_sheet_measure, from_potential, idempotent_frames, monodromy, sheet_measure,
    transition_permutations, AlgebraFamily, FamilyJson, SpectralCoverGraph,
};
use cardy_core::frobenius::AlgebraJson;
use cardy_core::nerve::{CechNerve, CechNerveJson, ChartId};
use cardy_core::scalar::{to_json_matrix, to_json_vec};
use cardy_core::spectral::{lift_label, phi_classify, realize, SpectralBrane};
use cardy_core::twisted::{
    azumaya_extract, psi, solve_iso, verify_iso, TwistRepresentatives, TwistedBundle, TwistedJson,
};
use cardy_core::two_vector::Equivalence;
use cardy_core::{CheckRecord, CheckReport, Error, Semisimplicity};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::{load_json, InputError, Report, RunConfig};

fn failed(report: &str, check: &str, err: &Error) -> CheckReport {
    let mut r = CheckReport::new(report);
    r.push(CheckRecord::new(check, false, f64::INFINITY).with_detail(err.to_string()));
    r
}

fn outcome(report: &str, check: &str, r: cardy_core::Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| failed(report, check, &e))
}

fn echo(cmd: &[&str], paths: &[&Path]) -> Vec<String> {
    cmd.iter()
        .map(|s| s.to_string())
        .chain(paths.iter().map(|p| p.display().to_string()))
        .collect()
}

fn finish(mut report: Report, start: Instant, cfg: &RunConfig) -> Report {
    if cfg.timing {
        report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report
}

/// Validate an algebra, list its metric, and decompose it into idempotents.
pub fn algebra(path: &Path, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let json: AlgebraJson = load_json(path)?;
    let a = json.to_algebra().map_err(|e| InputError::new(path, e))?;
    let mut report = Report::new(echo(&["algebra"], &[path]), cfg);
    report.push(a.validate(&cfg.tol));
    report.set("dim", a.dim());
    report.set("metric", to_json_matrix(&a.metric()));
    let mut ss = CheckReport::new("semisimplicity");
    match a.semisimplicity(&cfg.tol, cfg.seed) {
        Semisimplicity::Semisimple(basis) => {
            let residual = a.idempotent_residual(&basis.idempotents);
            ss.push(CheckRecord::new("semisimple", true, 0.0));
            ss.push(CheckRecord::new(
                "idempotents",
                residual <= cfg.tol.eps_structural,
                residual,
            ));
            let ids: Vec<_> = basis.idempotents.iter().map(|e| to_json_vec(e)).collect();
            report.set("idempotents", ids);
            report.set("weights", to_json_vec(&basis.weights));
        }
        Semisimplicity::NotSemisimple { reason, min_gap } => {
            ss.push(CheckRecord::new("semisimple", false, min_gap).with_detail(reason));
        }
    }
    report.push(ss);
    Ok(finish(report, start, cfg))
}

/// Cardy, sewing, centrality, adjoint and additivity over every declared label pair.
pub fn branes(path: &Path, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let json: BraneSystemJson = load_json(path)?;
    let sec = json.sector.to_sector(&cfg.tol).map_err(|e| InputError::new(path, e))?;
    for (k, l) in json.labels.iter().enumerate() {
        if l.n() != sec.n() {
            return Err(InputError {
                path: path.to_path_buf(),
                pointer: Some(format!("/labels/{k}")),
                message: format!("label has {} entries but the sector has {}", l.n(), sec.n()),
            });
        }
    }
    let labels = &json.labels;
    let (tol, seed) = (cfg.tol, cfg.seed);
    let mut report = Report::new(echo(&["branes"], &[path]), cfg);
    let pairs: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|a| (0..labels.len()).map(move |b| (a, b)))
        .collect();
    let per_pair: Vec<Vec<CheckReport>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&labels[i], &labels[j]);
            vec![
                outcome("cardy", "cardy", check_cardy(&sec, a, b, &tol)),
                outcome("sewing", "sewing", check_sewing(&sec, a, b, &tol, seed)),
                outcome("centrality", "centrality", check_centrality(&sec, a, b, &tol, seed)),
                outcome("additivity", "additivity", check_additivity(&sec, a, b, a, &tol, seed)),
            ]
        })
        .collect();
    let per_label: Vec<CheckReport> = labels
        .par_iter()
        .map(|a| outcome("adjoint", "adjoint", check_adjoint(&sec, a, &tol, seed)))
        .collect();
    for r in per_pair.into_iter().flatten().chain(per_label) {
        report.push(r);
    }
    match generator_labels(&sec, labels) {
        Ok((_, r)) => report.push(r),
        Err(e) => report.push(failed("generators", "generators", &e)),
    }
    let dims: Vec<Vec<usize>> = labels
        .iter()
        .map(|a| labels.iter().map(|b| a.hom_dim(b)).collect())
        .collect();
    report.set("hom_dims", dims);
    Ok(finish(report, start, cfg))
}

#[derive(Debug, Clone, Serialize)]
struct MonodromyResult {
    charts: Vec<String>,
    permutation: String,
}

fn loop_ids(loops: &[Vec<ChartId>]) -> Vec<Vec<String>> {
    loops.iter().map(|l| l.iter().map(ChartId::as_key).collect()).collect()
}

/// Algebra family, sheet cover, cocycle and sheet-measure checks, and the
/// monodromy of every requested loop. `None` when a stage fails.
fn run_family(
    json: &FamilyJson,
    path: &Path,
    pointer: &str,
    cfg: &RunConfig,
    report: &mut Report,
) -> Result<Option<(AlgebraFamily, SpectralCoverGraph)>, InputError> {
    let at = |e: Error| InputError {
        path: path.to_path_buf(),
        pointer: Some(pointer.to_string()),
        message: e.to_string(),
    };
    let (fam, nerve) = json.to_family(&cfg.tol).map_err(at)?;
    let loops = loop_ids(&json.loops);
    for (k, l) in loops.iter().enumerate() {
        if let Some(bad) = l.iter().find(|id| nerve.cech().index_of(id).is_none()) {
            return Err(InputError {
                path: path.to_path_buf(),
                pointer: Some(format!("{pointer}/loops/{k}")),
                message: format!("unknown chart id {bad}"),
            });
        }
    }
    let points = nerve.charts().iter().map(|c| c.samples.len()).sum::<usize>();
    let f = match from_potential(&fam, nerve, &cfg.tol) {
        Ok(f) => f,
        Err(e) => {
            let mut r = failed("family", "wdvv", &e);
            if let Error::WdvvViolation { points, residual } = &e {
                r.records[0].residual = *residual;
                r.records[0].location = points.first().cloned();
            }
            report.push(r);
            return Ok(None);
        }
    };
    let mut fr = CheckReport::new("family");
    fr.push(CheckRecord::new("wdvv", true, 0.0).with_detail(format!("{points} sample points")));
    report.push(fr);
    let frames = match idempotent_frames(&f, &cfg.tol, cfg.seed) {
        Ok(x) => x,
        Err(e) => {
            report.push(failed("cover", "idempotent_frames", &e));
            return Ok(None);
        }
    };
    let cover = match transition_permutations(&frames, f.nerve()) {
        Ok(c) => c,
        Err(e) => {
            report.push(failed("cover", "transitions", &e));
            return Ok(None);
        }
    };
    report.push(check_cocycle(&cover));
    match sheet_measure(&f, &cover) {
        Ok(m) => report.push(check_sheet_measure(&f, &cover, &m, &cfg.tol)),
        Err(e) => report.push(failed("sheet_measure", "sheet_measure", &e)),
    }
    let nerve = cover.nerve();
    let transitions: std::collections::BTreeMap<String, String> = nerve
        .edges()
        .iter()
        .zip(cover.transitions())
        .map(|(&(a, b), p)| (nerve.edge_label(a, b), p.to_string()))
        .collect();
    report.set("sheets", cover.sheets());
    report.set("transitions", transitions);
    let mut mono = Vec::new();
    for (k, l) in loops.into_iter().enumerate() {
        let p = monodromy(&cover, &l).map_err(|e| InputError {
            path: path.to_path_buf(),
            pointer: Some(format!("{pointer}/loops/{k}")),
            message: e.to_string(),
        })?;
        mono.push(MonodromyResult {
            charts: l,
            permutation: p.to_string(),
        });
    }
    report.set("monodromy", mono);
    Ok(Some((f, cover)))
}

pub fn family(path: &Path, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let json: FamilyJson = load_json(path)?;
    let mut report = Report::new(echo(&["family"], &[path]), cfg);
    run_family(&json, path, "", cfg, &mut report)?;
    Ok(finish(report, start, cfg))
}

fn bdr_checks(c: &cardy_core::bdr::BdrCocycle, nerve: &CechNerve, report: &mut Report) {
    report.push(check_det(c));
    let mut eq = CheckReport::new("bdr_equivalence");
    for (&(a, b), e) in c.edges() {
        let rec = match e.rank.is_equivalence() {
            Equivalence::Equivalence { .. } => CheckRecord::new("equivalence", true, 0.0),
            Equivalence::NotEquivalence(o) => CheckRecord::new("equivalence", false, 1.0).with_detail(format!("{o:?}")),
        };
        eq.push(rec.at(format!("edge {}", nerve.edge_label(a, b))));
    }
    report.push(eq);
    report.push(check_triple(c, nerve));
    report.push(check_quadruple(c, nerve));
    let suspects: Vec<String> = suspect_edges(c, nerve)
        .into_iter()
        .map(|(a, b)| nerve.edge_label(a, b))
        .collect();
    report.set("suspect_edges", suspects);
}

pub fn bdr(path: &Path, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let json: BdrJson = load_json(path)?;
    let (c, nerve) = json.to_cocycle().map_err(|e| InputError::new(path, e))?;
    let mut report = Report::new(echo(&["bdr"], &[path]), cfg);
    bdr_checks(&c, &nerve, &mut report);
    Ok(finish(report, start, cfg))
}

/// A twisted bundle file, with `nerve_ref` resolved relative to the file.
pub fn load_bundle(path: &Path) -> Result<TwistedBundle, InputError> {
    let json: TwistedJson = load_json(path)?;
    let nerve = match (&json.nerve, &json.nerve_ref) {
        (None, Some(r)) => {
            let p = path.parent().unwrap_or(Path::new(".")).join(r);
            let nj: CechNerveJson = load_json(&p)?;
            Some(nj.to_nerve().map_err(|e| InputError::new(&p, e))?)
        }
        _ => None,
    };
    json.to_bundle(nerve.as_ref()).map_err(|e| InputError::new(path, e))
}

#[derive(Debug, Clone)]
pub enum TwistedOp {
    Validate(PathBuf),
    Tensor(PathBuf, PathBuf),
    Dual(PathBuf),
    Hom(PathBuf, PathBuf),
    Iso(PathBuf, PathBuf),
    Azumaya(PathBuf),
    Psi { bundle: PathBuf, reps: Vec<PathBuf> },
}

fn twist_json(b: &TwistedBundle) -> serde_json::Value {
    TwistedJson::from_bundle(b)
        .lambda
        .into_iter()
        .map(|(k, v)| (k, json!(v)))
        .collect()
}

fn same_nerve(path: &Path, a: &TwistedBundle, b: &TwistedBundle) -> Result<(), InputError> {
    if a.nerve() != b.nerve() {
        return Err(InputError::new(path, "bundles live on different nerves"));
    }
    Ok(())
}

fn derived(report: &mut Report, b: &TwistedBundle, cfg: &RunConfig) {
    report.push(b.validate(&cfg.tol));
    report.set("bundle", TwistedJson::from_bundle(b));
}

pub fn twisted(op: &TwistedOp, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let report = match op {
        TwistedOp::Validate(p) => {
            let e = load_bundle(p)?;
            let mut r = Report::new(echo(&["twisted", "validate"], &[p]), cfg);
            r.push(e.validate(&cfg.tol));
            r.set("rank", e.rank());
            r.set("twist", twist_json(&e));
            r
        }
        TwistedOp::Tensor(p, q) | TwistedOp::Hom(p, q) => {
            let (e, f) = (load_bundle(p)?, load_bundle(q)?);
            same_nerve(q, &e, &f)?;
            let is_tensor = matches!(op, TwistedOp::Tensor(..));
            let name = if is_tensor { "tensor" } else { "hom" };
            let out = if is_tensor { e.tensor(&f) } else { e.hom(&f) }.map_err(|err| InputError::new(q, err))?;
            let mut r = Report::new(echo(&["twisted", name], &[p, q]), cfg);
            derived(&mut r, &out, cfg);
            r
        }
        TwistedOp::Dual(p) => {
            let e = load_bundle(p)?;
            let mut r = Report::new(echo(&["twisted", "dual"], &[p]), cfg);
            derived(&mut r, &e.dual(), cfg);
            r
        }
        TwistedOp::Iso(p, q) => {
            let (e, f) = (load_bundle(p)?, load_bundle(q)?);
            same_nerve(q, &e, &f)?;
            let mut r = Report::new(echo(&["twisted", "iso"], &[p, q]), cfg);
            match solve_iso(&e, &f, &cfg.tol, cfg.seed) {
                Ok(w) => {
                    r.push(verify_iso(&e, &f, &w, &cfg.tol));
                    let u: Vec<_> = w.u.iter().map(to_json_matrix).collect();
                    r.set("witness", u);
                }
                Err(err) => r.push(failed("isomorphism", "witness", &err)),
            }
            r
        }
        TwistedOp::Azumaya(p) => {
            let a = load_bundle(p)?;
            let mut r = Report::new(echo(&["twisted", "azumaya"], &[p]), cfg);
            match azumaya_extract(&a, &cfg.tol, cfg.seed) {
                Ok(x) => {
                    r.push(x.report);
                    r.set("bundle", TwistedJson::from_bundle(&x.bundle));
                }
                Err(err) => r.push(failed("azumaya_extract", "extract", &err)),
            }
            r
        }
        TwistedOp::Psi { bundle, reps } => {
            let e = load_bundle(bundle)?;
            let mut list = Vec::new();
            for p in reps {
                let l = load_bundle(p)?;
                same_nerve(p, &e, &l)?;
                list.push(l);
            }
            let reps_set = TwistRepresentatives::new(list).map_err(|err| InputError::new(bundle, err))?;
            let mut paths: Vec<&Path> = vec![bundle];
            paths.extend(reps.iter().map(PathBuf::as_path));
            let mut r = Report::new(echo(&["twisted", "psi"], &paths), cfg);
            let mut closed = CheckReport::new("representatives");
            closed.push(CheckRecord::new(
                "closed_under_dual",
                reps_set.closed_under_dual(&cfg.tol),
                0.0,
            ));
            r.push(closed);
            match psi(&e, &reps_set, &cfg.tol) {
                Ok(out) => {
                    let mut ord = CheckReport::new("psi");
                    let gap = out.twist().gap(&cardy_core::twisted::TwistClass::trivial(out.nerve()));
                    ord.push(CheckRecord::new("ordinary", gap <= cfg.tol.eps_structural, gap));
                    r.push(ord);
                    derived(&mut r, &out, cfg);
                }
                Err(err) => r.push(failed("psi", "representative", &err)),
            }
            r
        }
    };
    Ok(finish(report, start, cfg))
}

/// Family file plus the labels to lift and per-chart, per-sheet line classes `h`
/// from which coherent BDR line data `h_i^α − h_{u(i)}^β` is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineJson {
    pub family: FamilyJson,
    #[serde(default)]
    pub labels: Vec<BraneLabel>,
    #[serde(default)]
    pub line_classes: Option<Vec<Vec<LineClass>>>,
}

#[derive(Debug, Clone, Serialize)]
struct LabelResult {
    dims: Vec<usize>,
    components: usize,
    component_ranks: Vec<usize>,
}

pub fn pipeline(path: &Path, cfg: &RunConfig) -> Result<Report, InputError> {
    let start = Instant::now();
    let json: PipelineJson = load_json(path)?;
    let mut report = Report::new(echo(&["pipeline"], &[path]), cfg);
    let Some((_, cover)) = run_family(&json.family, path, "/family", cfg, &mut report)? else {
        return Ok(finish(report, start, cfg));
    };
    let (m, n) = (cover.nerve().chart_count(), cover.sheets());
    let h = json
        .line_classes
        .clone()
        .unwrap_or_else(|| vec![vec![LineClass::trivial(0); n]; m]);
    let width = h.first().and_then(|r| r.first()).map_or(0, LineClass::rank);
    if h.len() != m || h.iter().any(|r| r.len() != n || r.iter().any(|l| l.rank() != width)) {
        return Err(InputError {
            path: path.to_path_buf(),
            pointer: Some("/line_classes".into()),
            message: format!("expected {m} charts x {n} sheets of classes with {width} generators"),
        });
    }
    match assemble(&cover, &coboundary_lines(&cover, &h)) {
        Ok(c) => bdr_checks(&c, cover.nerve(), &mut report),
        Err(e) => report.push(failed("bdr", "assemble", &e)),
    }

    let mut branes: Vec<SpectralBrane> = Vec::new();
    let mut labels = Vec::new();
    let mut lift = CheckReport::new("brane_lift");
    for (k, l) in json.labels.iter().enumerate() {
        if l.n() != n {
            return Err(InputError {
                path: path.to_path_buf(),
                pointer: Some(format!("/labels/{k}")),
                message: format!("label has {} entries but the cover has {n} sheets", l.n()),
            });
        }
        let loc = format!("label {:?}", l.dims);
        let lifted = match lift_label(std::slice::from_ref(l), &cover) {
            Ok(x) => x,
            Err(e) => {
                lift.push(
                    CheckRecord::new("lift", false, f64::INFINITY)
                        .at(loc)
                        .with_detail(e.to_string()),
                );
                continue;
            }
        };
        lift.push(CheckRecord::new("lift", true, 0.0).at(loc.clone()));
        match realize(&lifted, &[], &cfg.tol, cfg.seed) {
            Ok(b) => {
                for (c, bundle) in b.bundles.iter().enumerate() {
                    if let Some(bundle) = bundle {
                        let mut v = bundle.validate(&cfg.tol);
                        v.name = format!("twisted_bundle {:?} component {c}", l.dims);
                        report.push(v);
                    }
                }
                labels.push(LabelResult {
                    dims: l.dims.clone(),
                    components: lifted.components.len(),
                    component_ranks: lifted.component_ranks.clone(),
                });
                branes.push(b);
            }
            Err(e) => lift.push(
                CheckRecord::new("realize", false, f64::INFINITY)
                    .at(loc)
                    .with_detail(e.to_string()),
            ),
        }
    }
    report.push(lift);
    if !branes.is_empty() {
        let cls = phi_classify(&branes, &cfg.tol, cfg.seed);
        let mut r = CheckReport::new("phi_classify");
        r.push(CheckRecord::new("well_defined", cls.well_defined, 0.0));
        r.push(CheckRecord::new("injective", cls.injective, 0.0));
        r.push(CheckRecord::new("multiset_separated", cls.multiset_separated, 0.0));
        report.push(r);
        report.set("classification", cls);
    }
    report.set("labels", labels);
    Ok(finish(report, start, cfg))
}
