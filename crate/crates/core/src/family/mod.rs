//! Frobenius-manifold families sampled over a finite chart nerve, their
//! idempotent frames, and the spectral cover they determine.

mod polynomial;

pub use polynomial::{Polynomial, TermJson};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusAlgebra, Tensor3};
use crate::linalg::{self, max_abs_diff_slice};
use crate::nerve::{CechNerve, ChartId};
use crate::permutation::Permutation;
use crate::report::{CheckRecord, CheckReport};
use crate::scalar::{
    c, from_json_matrix, from_json_vec, is_finite, to_json_matrix, to_json_vec, CMat, JsonC64, Tolerance, C64, ZERO,
};

/// Two sample coordinates are the same point when they agree to this relative precision.
pub const SAMPLE_MATCH: f64 = 1e-12;

/// A match is accepted only if the second-nearest candidate is at least this many times farther.
pub const TRACKING_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub id: String,
    pub samples: Vec<Vec<C64>>,
}

/// Chart nerve with sample points; overlaps are located by coordinate equality.
#[derive(Debug, Clone, PartialEq)]
pub struct Nerve {
    charts: Vec<Chart>,
    cech: CechNerve,
    /// For each edge `(a, b)`, the pairs `(sample in a, sample in b)` at the same point.
    edge_points: Vec<Vec<(usize, usize)>>,
}

fn same_point(x: &[C64], y: &[C64]) -> bool {
    x.len() == y.len()
        && x.iter()
            .zip(y)
            .all(|(a, b)| (a - b).norm() <= SAMPLE_MATCH * (1.0 + a.norm().max(b.norm())))
}

impl Nerve {
    pub fn new(
        charts: Vec<Chart>,
        edges: Vec<(usize, usize)>,
        triangles: Vec<[usize; 3]>,
        quadruples: Vec<[usize; 4]>,
    ) -> Result<Self> {
        let ids = charts.iter().map(|ch| ch.id.clone()).collect();
        let cech = CechNerve::new(ids, edges, triangles, quadruples)?;
        let dim = charts.iter().flat_map(|ch| ch.samples.first()).map(Vec::len).next();
        for ch in &charts {
            if ch.samples.is_empty() {
                return Err(Error::InvalidNerve(format!("chart {} has no sample points", ch.id)));
            }
            if ch.samples.iter().any(|s| Some(s.len()) != dim) {
                return Err(Error::InvalidNerve(format!(
                    "chart {} has samples of mixed dimension",
                    ch.id
                )));
            }
            if ch.samples.iter().flatten().any(|z| !is_finite(*z)) {
                return Err(Error::NonFinite(format!("samples of chart {}", ch.id)));
            }
        }
        let shared = |a: usize, b: usize| -> Vec<(usize, usize)> {
            let mut out = Vec::new();
            for (i, x) in charts[a].samples.iter().enumerate() {
                for (j, y) in charts[b].samples.iter().enumerate() {
                    if same_point(x, y) {
                        out.push((i, j));
                    }
                }
            }
            out
        };
        let mut edge_points = Vec::new();
        for &(a, b) in cech.edges() {
            let pts = shared(a, b);
            if pts.is_empty() {
                return Err(Error::InvalidNerve(format!(
                    "charts {} and {} share no sample point",
                    charts[a].id, charts[b].id
                )));
            }
            edge_points.push(pts);
        }
        let common = |simplex: &[usize]| {
            charts[simplex[0]].samples.iter().any(|x| {
                simplex[1..]
                    .iter()
                    .all(|&b| charts[b].samples.iter().any(|y| same_point(x, y)))
            })
        };
        for t in cech.triangles() {
            if !common(t) {
                return Err(Error::InvalidNerve(format!(
                    "triangle {} has no common sample point",
                    cech.simplex_label(t)
                )));
            }
        }
        for q in cech.quadruples() {
            if !common(q) {
                return Err(Error::InvalidNerve(format!(
                    "quadruple {} has no common sample point",
                    cech.simplex_label(q)
                )));
            }
        }
        Ok(Nerve {
            charts,
            cech,
            edge_points,
        })
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn cech(&self) -> &CechNerve {
        &self.cech
    }

    pub fn edge_points(&self, edge: usize) -> &[(usize, usize)] {
        &self.edge_points[edge]
    }

    /// Dimension of the sample coordinates.
    pub fn sample_dim(&self) -> usize {
        self.charts
            .first()
            .and_then(|ch| ch.samples.first())
            .map_or(0, Vec::len)
    }

    pub fn point_label(&self, chart: usize, sample: usize) -> String {
        format!("{}#{}", self.charts[chart].id, sample)
    }

    /// `charts` arcs around a circle in coordinate `coord` of a `dim`-dimensional
    /// base, each with `samples` points including both endpoints. Consecutive
    /// arcs share an endpoint; there are no triangles.
    pub fn circle(center: C64, radius: f64, charts: usize, samples: usize, dim: usize, coord: usize) -> Result<Self> {
        if charts < 3 || samples < 2 || coord >= dim {
            return Err(Error::InvalidNerve(
                "circle needs ≥ 3 charts, ≥ 2 samples per chart".into(),
            ));
        }
        let point = |chart: usize, s: usize| {
            // endpoints are computed from the same index so neighbours agree exactly
            let (k, frac) = if s + 1 == samples {
                ((chart + 1) % charts, 0.0)
            } else {
                (chart, s as f64 / (samples - 1) as f64)
            };
            let angle = TAU * (k as f64 + frac) / charts as f64;
            let mut v = vec![ZERO; dim];
            v[coord] = center + C64::from_polar(radius, angle);
            v
        };
        let list = (0..charts)
            .map(|k| Chart {
                id: k.to_string(),
                samples: (0..samples).map(|s| point(k, s)).collect(),
            })
            .collect();
        let edges = (0..charts).map(|k| (k, (k + 1) % charts)).collect();
        Self::new(list, edges, vec![], vec![])
    }

    /// Triangulated disk: `charts` sectors around `center`, each sampled from the
    /// center out along its first ray and then along its arc. All charts share
    /// the center, so every pair, triple and quadruple is an overlap;
    /// consecutive sectors also share a rim point.
    pub fn fan(center: C64, radius: f64, charts: usize, samples: usize, dim: usize, coord: usize) -> Result<Self> {
        if charts < 3 || samples < 2 || coord >= dim {
            return Err(Error::InvalidNerve(
                "fan needs ≥ 3 charts, ≥ 2 samples per segment".into(),
            ));
        }
        let at = |z: C64| {
            let mut v = vec![ZERO; dim];
            v[coord] = z;
            v
        };
        let rim = |k: usize, frac: f64| {
            let k = if frac == 0.0 { k % charts } else { k };
            center + C64::from_polar(radius, TAU * (k as f64 + frac) / charts as f64)
        };
        let list = (0..charts)
            .map(|k| {
                let mut pts = Vec::new();
                for s in 0..samples {
                    let r = s as f64 / (samples - 1) as f64;
                    pts.push(at(center + (rim(k, 0.0) - center) * r));
                }
                for s in 1..samples {
                    let frac = s as f64 / (samples - 1) as f64;
                    pts.push(at(if s + 1 == samples {
                        rim(k + 1, 0.0)
                    } else {
                        rim(k, frac)
                    }));
                }
                Chart {
                    id: k.to_string(),
                    samples: pts,
                }
            })
            .collect();
        let full = CechNerve::complete(charts);
        Self::new(
            list,
            full.edges().to_vec(),
            full.triangles().to_vec(),
            full.quadruples().to_vec(),
        )
    }
}

/// `{"charts": [{"id", "samples": [[coords]]}], "edges": [[a, b]], "triangles": [...], "quadruples": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerveJson {
    pub charts: Vec<ChartJson>,
    #[serde(default)]
    pub edges: Vec<[ChartId; 2]>,
    #[serde(default)]
    pub triangles: Vec<[ChartId; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quadruples: Vec<[ChartId; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartJson {
    pub id: ChartId,
    pub samples: Vec<Vec<JsonC64>>,
}

impl NerveJson {
    pub fn to_nerve(&self) -> Result<Nerve> {
        let charts: Vec<Chart> = self
            .charts
            .iter()
            .map(|ch| Chart {
                id: ch.id.as_key(),
                samples: ch.samples.iter().map(|s| from_json_vec(s)).collect(),
            })
            .collect();
        let lookup = |id: &ChartId| -> Result<usize> {
            let key = id.as_key();
            charts
                .iter()
                .position(|ch| ch.id == key)
                .ok_or_else(|| Error::InvalidNerve(format!("unknown chart id {key}")))
        };
        let edges = self
            .edges
            .iter()
            .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let triangles = self
            .triangles
            .iter()
            .map(|t| Ok([lookup(&t[0])?, lookup(&t[1])?, lookup(&t[2])?]))
            .collect::<Result<Vec<_>>>()?;
        let quadruples = self
            .quadruples
            .iter()
            .map(|q| Ok([lookup(&q[0])?, lookup(&q[1])?, lookup(&q[2])?, lookup(&q[3])?]))
            .collect::<Result<Vec<_>>>()?;
        Nerve::new(charts, edges, triangles, quadruples)
    }
}

impl From<&Nerve> for NerveJson {
    fn from(n: &Nerve) -> Self {
        let id = |i: usize| ChartId::Name(n.charts[i].id.clone());
        let cech = &n.cech;
        NerveJson {
            charts: n
                .charts
                .iter()
                .map(|ch| ChartJson {
                    id: ChartId::Name(ch.id.clone()),
                    samples: ch.samples.iter().map(|s| to_json_vec(s)).collect(),
                })
                .collect(),
            edges: cech.edges().iter().map(|&(a, b)| [id(a), id(b)]).collect(),
            triangles: cech
                .triangles()
                .iter()
                .map(|t| [id(t[0]), id(t[1]), id(t[2])])
                .collect(),
            quadruples: cech
                .quadruples()
                .iter()
                .map(|q| [id(q[0]), id(q[1]), id(q[2]), id(q[3])])
                .collect(),
        }
    }
}

/// Potential `Φ(t)` with a constant flat metric and a unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    potential: Polynomial,
    metric: CMat,
    metric_inv: CMat,
    unit_direction: usize,
    /// `∂a∂b∂c Φ` for `a ≤ b ≤ c`.
    third: Vec<((usize, usize, usize), Polynomial)>,
}

impl PotentialFamily {
    pub fn new(potential: Polynomial, metric: CMat, unit_direction: usize, tol: &Tolerance) -> Result<Self> {
        let n = potential.nvars();
        if n == 0 {
            return Err(Error::InvalidInput("family needs at least one flat coordinate".into()));
        }
        if metric.nrows() != n || metric.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "metric is {}x{}, expected {n}x{n}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        if unit_direction >= n {
            return Err(Error::InvalidInput(format!(
                "unit_direction {unit_direction} out of range"
            )));
        }
        if linalg::max_abs_diff(&metric, &metric.transpose()) > tol.eps_structural * (1.0 + linalg::max_abs(&metric)) {
            return Err(Error::InvalidInput("metric is not symmetric".into()));
        }
        let (lo, hi) = linalg::singular_extremes(&metric);
        if hi == 0.0 || lo / hi <= tol.eps_rank {
            return Err(Error::Degenerate {
                smallest: lo,
                largest: hi,
            });
        }
        let metric_inv = linalg::inverse(&metric).ok_or(Error::Degenerate {
            smallest: lo,
            largest: hi,
        })?;
        let mut third = Vec::new();
        for a in 0..n {
            let da = potential.derivative(a);
            for b in a..n {
                let dab = da.derivative(b);
                for c in b..n {
                    third.push(((a, b, c), dab.derivative(c)));
                }
            }
        }
        Ok(PotentialFamily {
            potential,
            metric,
            metric_inv,
            unit_direction,
            third,
        })
    }

    pub fn n(&self) -> usize {
        self.potential.nvars()
    }

    pub fn potential(&self) -> &Polynomial {
        &self.potential
    }

    pub fn metric(&self) -> &CMat {
        &self.metric
    }

    pub fn unit_direction(&self) -> usize {
        self.unit_direction
    }

    /// `c_abc(t) = ∂a∂b∂c Φ(t)`.
    pub fn three_tensor(&self, t: &[C64]) -> Tensor3 {
        let mut out = Tensor3::zeros(self.n());
        for &((a, b, c), ref p) in &self.third {
            let v = p.eval(t);
            for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                out.set(i, j, k, v);
            }
        }
        out
    }
}

/// Raise the last index of a 3-tensor with `g⁻¹` and take `θ = g(e, ·)`.
fn algebra_from_cubic(c3: &Tensor3, metric: &CMat, metric_inv: &CMat, unit: usize) -> Result<FrobeniusAlgebra> {
    let n = c3.dim();
    let constants = Tensor3::from_fn(n, |a, b, k| (0..n).map(|l| c3.get(a, b, l) * metric_inv[(l, k)]).sum());
    let mut e = vec![ZERO; n];
    e[unit] = c(1.0, 0.0);
    let trace = (0..n).map(|k| metric[(unit, k)]).collect();
    FrobeniusAlgebra::new(constants, e, trace)
}

enum PointFailure {
    NonUnit,
    Wdvv(f64),
}

fn classify(alg: &FrobeniusAlgebra, tol: &Tolerance) -> Option<PointFailure> {
    let report = alg.validate(tol);
    let failed = |name: &str| report.records.iter().find(|r| r.name == name && !r.passed());
    if failed("unit").is_some() {
        return Some(PointFailure::NonUnit);
    }
    if let Some(r) = report.first_failure() {
        return Some(PointFailure::Wdvv(r.residual));
    }
    None
}

/// Pointwise algebra from a raw symmetric 3-tensor; the WDVV check applied at a single point.
pub fn pointwise_algebra(
    c3: &Tensor3,
    metric: &CMat,
    unit_direction: usize,
    tol: &Tolerance,
) -> Result<FrobeniusAlgebra> {
    let n = c3.dim();
    if metric.nrows() != n || metric.ncols() != n || unit_direction >= n {
        return Err(Error::ShapeMismatch(
            "metric or unit direction does not match the tensor".into(),
        ));
    }
    let (lo, hi) = linalg::singular_extremes(metric);
    let inv = linalg::inverse(metric).ok_or(Error::Degenerate {
        smallest: lo,
        largest: hi,
    })?;
    let alg = algebra_from_cubic(c3, metric, &inv, unit_direction)?;
    match classify(&alg, tol) {
        None => Ok(alg),
        Some(PointFailure::NonUnit) => Err(Error::NonUnit {
            points: vec!["point".into()],
        }),
        Some(PointFailure::Wdvv(residual)) => Err(Error::WdvvViolation {
            points: vec!["point".into()],
            residual,
        }),
    }
}

/// Frobenius algebras at every sample point of a nerve, all in one shared basis.
#[derive(Debug, Clone)]
pub struct AlgebraFamily {
    nerve: Nerve,
    /// `[chart][sample]`.
    algebras: Vec<Vec<FrobeniusAlgebra>>,
}

impl AlgebraFamily {
    pub fn new(nerve: Nerve, algebras: Vec<Vec<FrobeniusAlgebra>>, tol: &Tolerance) -> Result<Self> {
        if algebras.len() != nerve.charts.len()
            || algebras
                .iter()
                .zip(&nerve.charts)
                .any(|(a, ch)| a.len() != ch.samples.len())
        {
            return Err(Error::ShapeMismatch("one algebra per sample point is required".into()));
        }
        let n = algebras.iter().flatten().next().map_or(0, FrobeniusAlgebra::dim);
        for (a, row) in algebras.iter().enumerate() {
            for (s, alg) in row.iter().enumerate() {
                if alg.dim() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "algebra at {} has dimension {}, expected {n}",
                        nerve.point_label(a, s),
                        alg.dim()
                    )));
                }
                if let Some(r) = alg.validate(tol).first_failure() {
                    return Err(Error::InvalidInput(format!(
                        "algebra at {} fails {} (residual {:.3e})",
                        nerve.point_label(a, s),
                        r.name,
                        r.residual
                    )));
                }
            }
        }
        Ok(AlgebraFamily { nerve, algebras })
    }

    /// Evaluate `f` at every sample coordinate.
    pub fn from_fn<F>(nerve: Nerve, tol: &Tolerance, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> Result<FrobeniusAlgebra> + Sync,
    {
        let algebras = nerve
            .charts
            .par_iter()
            .map(|ch| ch.samples.iter().map(|t| f(t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(nerve, algebras, tol)
    }

    pub fn nerve(&self) -> &Nerve {
        &self.nerve
    }

    pub fn dim(&self) -> usize {
        self.algebras.iter().flatten().next().map_or(0, FrobeniusAlgebra::dim)
    }

    pub fn algebra(&self, chart: usize, sample: usize) -> &FrobeniusAlgebra {
        &self.algebras[chart][sample]
    }
}

/// Build the family of a potential on a nerve, checking the unit and WDVV at every point.
pub fn from_potential(p: &PotentialFamily, nerve: Nerve, tol: &Tolerance) -> Result<AlgebraFamily> {
    if nerve.sample_dim() != p.n() {
        return Err(Error::ShapeMismatch(format!(
            "samples have {} coordinates, potential has {}",
            nerve.sample_dim(),
            p.n()
        )));
    }
    let points: Vec<(usize, usize)> = nerve
        .charts
        .iter()
        .enumerate()
        .flat_map(|(a, ch)| (0..ch.samples.len()).map(move |s| (a, s)))
        .collect();
    let results: Vec<Result<(FrobeniusAlgebra, Option<PointFailure>)>> = points
        .par_iter()
        .map(|&(a, s)| {
            let t = &nerve.charts[a].samples[s];
            let c3 = p.three_tensor(t);
            if c3.to_nested().iter().flatten().flatten().any(|z| !is_finite(*z)) {
                return Err(Error::NonFinite(format!(
                    "third derivatives at {}",
                    nerve.point_label(a, s)
                )));
            }
            let alg = algebra_from_cubic(&c3, &p.metric, &p.metric_inv, p.unit_direction)?;
            let failure = classify(&alg, tol);
            Ok((alg, failure))
        })
        .collect();

    let mut non_unit = Vec::new();
    let mut wdvv = Vec::new();
    let mut worst: f64 = 0.0;
    let mut algebras: Vec<Vec<FrobeniusAlgebra>> = nerve.charts.iter().map(|_| Vec::new()).collect();
    for (&(a, s), r) in points.iter().zip(results) {
        let (alg, failure) = r?;
        match failure {
            Some(PointFailure::NonUnit) => non_unit.push(nerve.point_label(a, s)),
            Some(PointFailure::Wdvv(res)) => {
                worst = worst.max(res);
                wdvv.push(nerve.point_label(a, s));
            }
            None => {}
        }
        algebras[a].push(alg);
    }
    if !non_unit.is_empty() {
        return Err(Error::NonUnit { points: non_unit });
    }
    if !wdvv.is_empty() {
        return Err(Error::WdvvViolation {
            points: wdvv,
            residual: worst,
        });
    }
    Ok(AlgebraFamily { nerve, algebras })
}

/// Idempotent tracks on one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFrames {
    /// `[sample][sheet]` idempotent coordinates.
    pub idempotents: Vec<Vec<Vec<C64>>>,
    /// `[sample][sheet]` values `θ(e_i)`.
    pub weights: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    pub charts: Vec<ChartFrames>,
}

fn distance(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

/// Nearest-neighbour bijection `i ↦ j` from `from[i]` to `to[j]`, or `None`
/// if some match lacks the margin or two tracks claim the same target.
pub fn match_with_margin(from: &[Vec<C64>], to: &[Vec<C64>]) -> Option<Permutation> {
    let n = from.len();
    if to.len() != n {
        return None;
    }
    let mut images = Vec::with_capacity(n);
    for x in from {
        let mut d: Vec<(f64, usize)> = to.iter().enumerate().map(|(j, y)| (distance(x, y), j)).collect();
        d.sort_by(|p, q| p.0.total_cmp(&q.0));
        if n > 1 && !(d[1].0 >= TRACKING_MARGIN * d[0].0 && d[1].0 > 0.0) {
            return None;
        }
        images.push(d[0].1);
    }
    Permutation::new(images).ok()
}

/// Per-chart idempotent tracks: canonical order at the first sample, nearest-neighbour after.
pub fn idempotent_frames(f: &AlgebraFamily, tol: &Tolerance, seed: u64) -> Result<Frames> {
    let charts = f
        .algebras
        .par_iter()
        .enumerate()
        .map(|(a, row)| {
            let chart = &f.nerve.charts[a].id;
            let bases = row
                .iter()
                .enumerate()
                .map(|(s, alg)| {
                    alg.idempotent_basis(tol, seed).map_err(|e| match e {
                        Error::NotSemisimple { reason, .. } => Error::NotSemisimpleAtPoint {
                            chart: chart.clone(),
                            sample: s,
                            reason,
                        },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut idempotents = Vec::with_capacity(bases.len());
            let mut weights = Vec::with_capacity(bases.len());
            for (s, basis) in bases.into_iter().enumerate() {
                if s == 0 {
                    idempotents.push(basis.idempotents);
                    weights.push(basis.weights);
                    continue;
                }
                let prev: &Vec<Vec<C64>> = &idempotents[s - 1];
                let perm = match_with_margin(prev, &basis.idempotents).ok_or_else(|| Error::AmbiguousTracking {
                    chart: chart.clone(),
                    sample: s - 1,
                })?;
                let n = perm.len();
                idempotents.push((0..n).map(|i| basis.idempotents[perm.apply(i)].clone()).collect());
                weights.push((0..n).map(|i| basis.weights[perm.apply(i)]).collect());
            }
            Ok(ChartFrames { idempotents, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Frames { charts })
}

/// Sheet permutations on every overlap of a nerve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoverGraph {
    nerve: CechNerve,
    sheets: usize,
    frames: Option<Frames>,
    /// Aligned with `nerve.edges()`: `u_{αβ}` with `e_i^α = e_{u(i)}^β`.
    transitions: Vec<Permutation>,
}

impl SpectralCoverGraph {
    /// Cover given directly by its transition permutations.
    pub fn from_transitions(nerve: CechNerve, sheets: usize, transitions: Vec<Permutation>) -> Result<Self> {
        if transitions.len() != nerve.edges().len() {
            return Err(Error::ShapeMismatch(format!(
                "{} transitions for {} edges",
                transitions.len(),
                nerve.edges().len()
            )));
        }
        if let Some(p) = transitions.iter().find(|p| p.len() != sheets) {
            return Err(Error::ShapeMismatch(format!(
                "permutation {p} does not act on {sheets} sheets"
            )));
        }
        Ok(SpectralCoverGraph {
            nerve,
            sheets,
            frames: None,
            transitions,
        })
    }

    pub fn nerve(&self) -> &CechNerve {
        &self.nerve
    }

    pub fn sheets(&self) -> usize {
        self.sheets
    }

    pub fn frames(&self) -> Option<&Frames> {
        self.frames.as_ref()
    }

    pub fn transitions(&self) -> &[Permutation] {
        &self.transitions
    }

    /// Replace the permutation stored on an edge; used to build corrupted covers.
    pub fn set_transition(&mut self, edge: usize, p: Permutation) -> Result<()> {
        if p.len() != self.sheets || edge >= self.transitions.len() {
            return Err(Error::ShapeMismatch("transition does not fit the cover".into()));
        }
        self.transitions[edge] = p;
        Ok(())
    }

    /// `u_{αβ}`, inverted if the edge is stored as `(β, α)`.
    pub fn transition(&self, a: usize, b: usize) -> Option<Permutation> {
        self.nerve.find_edge(a, b).map(|e| {
            let p = &self.transitions[e.index];
            if e.forward {
                p.clone()
            } else {
                p.inverse()
            }
        })
    }

    /// Sheet `(chart, i)` of the track along its chart.
    pub fn track(&self, chart: usize, sheet: usize) -> Option<Vec<&[C64]>> {
        let frames = self.frames.as_ref()?;
        Some(
            frames.charts[chart]
                .idempotents
                .iter()
                .map(|s| s[sheet].as_slice())
                .collect(),
        )
    }
}

/// Match frames on each overlap's first shared sample point.
pub fn transition_permutations(frames: &Frames, nerve: &Nerve) -> Result<SpectralCoverGraph> {
    if frames.charts.len() != nerve.charts.len() {
        return Err(Error::ShapeMismatch("frames do not cover every chart".into()));
    }
    let sheets = frames
        .charts
        .first()
        .and_then(|ch| ch.idempotents.first())
        .map_or(0, Vec::len);
    let mut transitions = Vec::with_capacity(nerve.cech.edges().len());
    for (k, &(a, b)) in nerve.cech.edges().iter().enumerate() {
        let (sa, sb) = nerve.edge_points[k][0];
        let from = &frames.charts[a].idempotents[sa];
        let to = &frames.charts[b].idempotents[sb];
        let p = match_with_margin(from, to).ok_or_else(|| Error::AmbiguousMatching {
            from: nerve.charts[a].id.clone(),
            to: nerve.charts[b].id.clone(),
        })?;
        transitions.push(p);
    }
    Ok(SpectralCoverGraph {
        nerve: nerve.cech.clone(),
        sheets,
        frames: Some(frames.clone()),
        transitions,
    })
}

/// `u_{βγ} ∘ u_{αβ} = u_{αγ}` on every triangle.
pub fn check_cocycle(cover: &SpectralCoverGraph) -> CheckReport {
    let mut report = CheckReport::new("sheet_cocycle");
    let nerve = &cover.nerve;
    for t in nerve.triangles() {
        let [a, b, c] = *t;
        let loc = format!("triangle {}", nerve.simplex_label(t));
        let (Some(ab), Some(bc), Some(ac)) = (cover.transition(a, b), cover.transition(b, c), cover.transition(a, c))
        else {
            report.push(
                CheckRecord::new("triangle_law", false, f64::INFINITY)
                    .at(loc)
                    .with_detail("missing edge"),
            );
            continue;
        };
        let lhs = ab.then(&bc);
        let mismatched = (0..lhs.len()).filter(|&i| lhs.apply(i) != ac.apply(i)).count();
        let mut rec = CheckRecord::new("triangle_law", mismatched == 0, mismatched as f64).at(loc);
        if mismatched > 0 {
            rec = rec.with_detail(format!("{lhs} vs {ac}"));
        }
        report.push(rec);
    }
    report
}

/// Composite sheet permutation around a closed loop of chart indices. The
/// closing step from the last chart back to the first is implied.
pub fn monodromy_indices(cover: &SpectralCoverGraph, charts: &[usize]) -> Result<Permutation> {
    let mut p = Permutation::identity(cover.sheets);
    let Some(&first) = charts.first() else {
        return Ok(p);
    };
    let mut steps: Vec<(usize, usize)> = charts.windows(2).map(|w| (w[0], w[1])).collect();
    let last = *charts.last().unwrap_or(&first);
    if last != first {
        steps.push((last, first));
    }
    for (a, b) in steps {
        if a == b {
            continue;
        }
        let u = cover
            .transition(a, b)
            .ok_or_else(|| Error::MissingEdge(cover.nerve.edge_label(a, b)))?;
        p = p.then(&u);
    }
    Ok(p)
}

/// Monodromy of a loop given by chart ids.
pub fn monodromy(cover: &SpectralCoverGraph, charts: &[String]) -> Result<Permutation> {
    let idx = charts
        .iter()
        .map(|id| {
            cover
                .nerve
                .index_of(id)
                .ok_or_else(|| Error::InvalidInput(format!("unknown chart id {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    monodromy_indices(cover, &idx)
}

/// `θ(e_i)` along every sheet track: `[chart][sheet][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetMeasure {
    pub values: Vec<Vec<Vec<C64>>>,
}

pub fn sheet_measure(f: &AlgebraFamily, cover: &SpectralCoverGraph) -> Result<SheetMeasure> {
    let frames = cover
        .frames
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("cover carries no idempotent frames".into()))?;
    let values = frames
        .charts
        .iter()
        .enumerate()
        .map(|(a, ch)| {
            (0..cover.sheets)
                .map(|i| {
                    ch.idempotents
                        .iter()
                        .enumerate()
                        .map(|(s, es)| f.algebras[a][s].apply_trace(&es[i]))
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(SheetMeasure { values })
}

/// `Σ_i θ(e_i) = θ(e)` pointwise, and values agree across overlaps under `u_{αβ}`.
pub fn check_sheet_measure(
    f: &AlgebraFamily,
    cover: &SpectralCoverGraph,
    m: &SheetMeasure,
    tol: &Tolerance,
) -> CheckReport {
    let mut report = CheckReport::new("sheet_measure");
    let mut sum_res: f64 = 0.0;
    for (a, sheets) in m.values.iter().enumerate() {
        for s in 0..f.algebras[a].len() {
            let alg = &f.algebras[a][s];
            let total: C64 = sheets.iter().map(|v| v[s]).sum();
            sum_res = sum_res.max(crate::scalar::relative_gap(total, alg.apply_trace(alg.unit())));
        }
    }
    report.push(CheckRecord::new(
        "sum_over_sheets",
        sum_res <= tol.eps_structural,
        sum_res,
    ));
    let mut overlap_res: f64 = 0.0;
    for (k, &(a, b)) in cover.nerve.edges().iter().enumerate() {
        let u = &cover.transitions[k];
        for &(sa, sb) in f.nerve.edge_points(k) {
            let x: Vec<C64> = (0..cover.sheets).map(|i| m.values[a][i][sa]).collect();
            let y: Vec<C64> = (0..cover.sheets).map(|i| m.values[b][u.apply(i)][sb]).collect();
            overlap_res = overlap_res.max(max_abs_diff_slice(&x, &y));
        }
    }
    report.push(CheckRecord::new(
        "overlap_consistency",
        overlap_res <= tol.eps_structural,
        overlap_res,
    ));
    report
}

/// JSON family file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyJson {
    pub n: usize,
    pub potential: Vec<TermJson>,
    pub metric: Vec<Vec<JsonC64>>,
    pub unit_direction: usize,
    pub nerve: NerveJson,
    /// Loops (as chart-id sequences) whose monodromy should be reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loops: Vec<Vec<ChartId>>,
}

impl FamilyJson {
    pub fn to_family(&self, tol: &Tolerance) -> Result<(PotentialFamily, Nerve)> {
        let poly = Polynomial::from_json(self.n, &self.potential)?;
        let metric = from_json_matrix(&self.metric, Some(self.n))?;
        let fam = PotentialFamily::new(poly, metric, self.unit_direction, tol)?;
        Ok((fam, self.nerve.to_nerve()?))
    }

    pub fn from_parts(p: &PotentialFamily, nerve: &Nerve, loops: Vec<Vec<ChartId>>) -> Self {
        FamilyJson {
            n: p.n(),
            potential: p.potential.to_json(),
            metric: to_json_matrix(&p.metric),
            unit_direction: p.unit_direction,
            nerve: nerve.into(),
            loops,
        }
    }
}

/// `Φ = ½ t₁² t₂ + t₂⁴/24` with `g = antidiag(1, 1)`: the algebra `ℂ[x]/(x² − t₂)`.
pub fn square_root_family(tol: &Tolerance) -> PotentialFamily {
    let p = Polynomial::from_terms(2, [(vec![2, 1], c(0.5, 0.0)), (vec![0, 4], c(1.0 / 24.0, 0.0))])
        .expect("valid polynomial");
    let g = CMat::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
    PotentialFamily::new(p, g, 0, tol).expect("valid family")
}

/// Random potential with unit `∂₀`: the cubic terms in `t₀` give `c_0ab = g_ab`
/// for a random symmetric metric, plus random monomials of degree 3 to
/// `max_degree` in the other coordinates. Associative for `n ≤ 2`; for larger
/// `n` the WDVV equations generally fail.
pub fn random_potential<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: u32, tol: &Tolerance) -> PotentialFamily {
    assert!(n >= 1 && max_degree >= 3, "need n ≥ 1 and degree ≥ 3");
    let g = loop {
        let a = linalg::random_matrix(rng, n, n);
        let g = (&a + a.transpose()) * c(0.5, 0.0);
        let (lo, hi) = linalg::singular_extremes(&g);
        if lo > 0.05 * hi {
            break g;
        }
    };
    let mono = |exps: &[(usize, u32)]| {
        let mut m = vec![0u32; n];
        for &(k, e) in exps {
            m[k] += e;
        }
        m
    };
    let mut terms = vec![(mono(&[(0, 3)]), g[(0, 0)] / 6.0)];
    for a in 1..n {
        terms.push((mono(&[(0, 2), (a, 1)]), g[(0, a)] * 0.5));
        for b in a..n {
            let coeff = if a == b { g[(a, a)] * 0.5 } else { g[(a, b)] };
            terms.push((mono(&[(0, 1), (a, 1), (b, 1)]), coeff));
        }
    }
    if n > 1 {
        // every monomial in t₁..t_{n−1} of total degree 3..=max_degree, with probability ½
        let mut stack = vec![(1usize, vec![0u32; n])];
        while let Some((k, m)) = stack.pop() {
            let deg: u32 = m.iter().sum();
            if k == n {
                if deg >= 3 && rng.random_bool(0.5) {
                    terms.push((m, linalg::random_scalar(rng)));
                }
                continue;
            }
            for e in 0..=(max_degree - deg) {
                let mut next = m.clone();
                next[k] = e;
                stack.push((k + 1, next));
            }
        }
    }
    let p = Polynomial::from_terms(n, terms).expect("well-formed monomials");
    PotentialFamily::new(p, g, 0, tol).expect("metric is well conditioned")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ONE;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn circle(samples: usize) -> Nerve {
        Nerve::circle(ZERO, 1.0, 8, samples, 2, 1).unwrap()
    }

    #[test]
    fn cubic_potential_gives_the_field() {
        let p = Polynomial::from_terms(1, [(vec![3], c(1.0 / 6.0, 0.0))]).unwrap();
        let fam = PotentialFamily::new(p, CMat::identity(1, 1), 0, &tol()).unwrap();
        let nerve = Nerve::new(
            vec![Chart {
                id: "a".into(),
                samples: vec![vec![c(0.3, 0.0)], vec![c(-2.0, 1.0)]],
            }],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let f = from_potential(&fam, nerve, &tol()).unwrap();
        for s in 0..2 {
            let alg = f.algebra(0, s);
            assert_eq!(alg.multiply(&[ONE], &[ONE]), vec![ONE]);
            assert_eq!(alg.trace(), &[ONE]);
        }
    }

    #[test]
    fn square_root_family_tracks_closed_form() {
        // arc t = e^{iφ}, φ ∈ [0, π/2]
        let samples: Vec<Vec<C64>> = (0..8)
            .map(|k| vec![ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * k as f64 / 7.0)])
            .collect();
        let nerve = Nerve::new(
            vec![Chart {
                id: "arc".into(),
                samples: samples.clone(),
            }],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let f = from_potential(&square_root_family(&tol()), nerve, &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), 3).unwrap();
        let track = &frames.charts[0].idempotents;
        // pick the sign of √t that the first sample chose, then follow the principal branch
        let sign = if (track[0][0][1] - c(0.5, 0.0)).norm() < 1e-8 {
            1.0
        } else {
            -1.0
        };
        for (s, t) in samples.iter().enumerate() {
            let r = t[1].sqrt();
            let expected = [c(0.5, 0.0), 0.5 * sign / r];
            assert!(max_abs_diff_slice(&track[s][0], &expected) < 1e-10, "sample {s}");
            let other = [c(0.5, 0.0), -0.5 * sign / r];
            assert!(max_abs_diff_slice(&track[s][1], &other) < 1e-10, "sample {s}");
        }
    }

    #[test]
    fn circle_monodromy_swaps_sheets() {
        let f = from_potential(&square_root_family(&tol()), circle(5), &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), 0).unwrap();
        let cover = transition_permutations(&frames, f.nerve()).unwrap();
        let ids: Vec<String> = (0..8).map(|i| i.to_string()).collect();
        assert_eq!(monodromy(&cover, &ids).unwrap().to_string(), "(1 2)");
        let twice: Vec<String> = ids.iter().chain(&ids).cloned().collect();
        assert!(monodromy(&cover, &twice).unwrap().is_identity());
        assert!(monodromy(&cover, &ids[..1]).unwrap().is_identity());
        let m = sheet_measure(&f, &cover).unwrap();
        assert!(check_sheet_measure(&f, &cover, &m, &tol()).passed());
    }

    #[test]
    fn crossing_the_branch_point_is_not_semisimple() {
        let samples = (0..5).map(|k| vec![ZERO, c(k as f64 - 2.0, 0.0)]).collect();
        let nerve = Nerve::new(
            vec![Chart {
                id: "x".into(),
                samples,
            }],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let f = from_potential(&square_root_family(&tol()), nerve, &tol()).unwrap();
        match idempotent_frames(&f, &tol(), 0) {
            Err(Error::NotSemisimpleAtPoint { chart, sample, .. }) => assert_eq!((chart.as_str(), sample), ("x", 2)),
            other => panic!("expected NotSemisimpleAtPoint, got {other:?}"),
        }
    }

    #[test]
    fn fan_cover_satisfies_cocycle_and_corruption_is_located() {
        let nerve = Nerve::fan(c(2.0, 0.5), 1.0, 3, 4, 2, 1).unwrap();
        let f = from_potential(&square_root_family(&tol()), nerve, &tol()).unwrap();
        let frames = idempotent_frames(&f, &tol(), 1).unwrap();
        let mut cover = transition_permutations(&frames, f.nerve()).unwrap();
        assert!(check_cocycle(&cover).passed());
        let swapped = cover.transitions()[0].then(&Permutation::new(vec![1, 0]).unwrap());
        cover.set_transition(0, swapped).unwrap();
        let report = check_cocycle(&cover);
        assert!(!report.passed());
        assert_eq!(
            report.first_failure().unwrap().location.as_deref(),
            Some("triangle 0,1,2")
        );
    }

    #[test]
    fn constant_family_has_constant_tracks_and_identity_transitions() {
        let nerve = Nerve::circle(ZERO, 1.0, 4, 3, 1, 0).unwrap();
        let weights = [c(2.0, 0.0), c(3.0, 0.0)];
        let f = AlgebraFamily::from_fn(nerve, &tol(), |_| FrobeniusAlgebra::diagonal(&weights)).unwrap();
        let frames = idempotent_frames(&f, &tol(), 0).unwrap();
        let cover = transition_permutations(&frames, f.nerve()).unwrap();
        assert!(cover.transitions().iter().all(Permutation::is_identity));
        let m = sheet_measure(&f, &cover).unwrap();
        let mut firsts: Vec<f64> = m.values[0].iter().map(|v| v[0].re).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, vec![2.0, 3.0]);
        assert!(m.values.iter().flatten().all(|v| v.iter().all(|z| *z == v[0])));
    }

    #[test]
    fn non_unit_direction_is_reported() {
        let p = Polynomial::from_terms(2, [(vec![2, 1], c(0.5, 0.0)), (vec![0, 4], c(1.0 / 24.0, 0.0))]).unwrap();
        let g = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let fam = PotentialFamily::new(p, g, 1, &tol()).unwrap();
        assert!(matches!(
            from_potential(&fam, circle(3), &tol()),
            Err(Error::NonUnit { .. })
        ));
    }

    #[test]
    fn family_json_round_trip() {
        let fam = square_root_family(&tol());
        let nerve = circle(3);
        let j = FamilyJson::from_parts(&fam, &nerve, vec![]);
        let text = serde_json::to_string(&j).unwrap();
        let back: FamilyJson = serde_json::from_str(&text).unwrap();
        let (fam2, nerve2) = back.to_family(&tol()).unwrap();
        assert_eq!(fam2.potential(), fam.potential());
        assert_eq!(nerve2.cech(), nerve.cech());
    }
}
