//! BDR 2-vector-bundle cocycles at the level of isomorphism classes: each
//! overlap carries a matrix of ranks and, where the rank is nonzero, a line
//! class in a free abelian group written additively.

use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::family::SpectralCoverGraph;
use crate::nerve::{CechNerve, CechNerveJson, ChartId};
use crate::report::{CheckRecord, CheckReport};
use crate::two_vector::DimMatrix;

/// Exponent vector over the declared generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineClass(pub Vec<i64>);

impl LineClass {
    pub fn trivial(generators: usize) -> Self {
        LineClass(vec![0; generators])
    }

    pub fn generator(generators: usize, k: usize) -> Self {
        let mut v = vec![0; generators];
        v[k] = 1;
        LineClass(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }
}

impl Add for &LineClass {
    type Output = LineClass;

    fn add(self, rhs: &LineClass) -> LineClass {
        assert_eq!(self.0.len(), rhs.0.len(), "line classes over different generators");
        LineClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LineClass {
    type Output = LineClass;

    fn sub(self, rhs: &LineClass) -> LineClass {
        self + &-rhs
    }
}

impl Neg for &LineClass {
    type Output = LineClass;

    fn neg(self) -> LineClass {
        LineClass(self.0.iter().map(|a| -a).collect())
    }
}

/// Data on one ordered overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct BdrEdge {
    pub rank: DimMatrix,
    /// `lines[i][j]` is present exactly where `rank(i, j) > 0`.
    pub lines: Vec<Vec<Option<LineClass>>>,
}

/// Entry of a matrix of bundles up to iso: line class ↦ multiplicity.
type Entry = BTreeMap<LineClass, u64>;

impl BdrEdge {
    fn entries(&self) -> Vec<Vec<Entry>> {
        (0..self.rank.rows())
            .map(|i| {
                (0..self.rank.cols())
                    .map(|j| {
                        let r = self.rank.get(i, j);
                        let mut e = Entry::new();
                        if r > 0 {
                            e.insert(self.lines[i][j].clone().expect("validated"), r);
                        }
                        e
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of a monomial edge (a permutation matrix of lines).
    fn inverse(&self) -> Option<BdrEdge> {
        let perm = self.rank.as_permutation()?;
        let n = perm.len();
        let mut lines = vec![vec![None; n]; n];
        for (i, &j) in perm.iter().enumerate() {
            lines[j][i] = self.lines[i][j].as_ref().map(|l| -l);
        }
        let mut inv = vec![0; n];
        for (i, &j) in perm.iter().enumerate() {
            inv[j] = i;
        }
        Some(BdrEdge {
            rank: DimMatrix::permutation(&inv),
            lines,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdrCocycle {
    n: usize,
    generators: usize,
    edges: BTreeMap<(usize, usize), BdrEdge>,
}

impl BdrCocycle {
    pub fn new(n: usize, generators: usize, edges: BTreeMap<(usize, usize), BdrEdge>) -> Result<Self> {
        for (&(a, b), e) in &edges {
            if e.rank.rows() != n || e.rank.cols() != n {
                return Err(Error::ShapeMismatch(format!("rank matrix on {a}->{b} is not {n}x{n}")));
            }
            if e.lines.len() != n || e.lines.iter().any(|r| r.len() != n) {
                return Err(Error::ShapeMismatch(format!("line matrix on {a}->{b} is not {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    match (&e.lines[i][j], e.rank.get(i, j)) {
                        (None, r) if r > 0 => {
                            return Err(Error::MissingLine {
                                edge: format!("{a}->{b}"),
                                sheet: i,
                            })
                        }
                        (Some(l), _) if l.rank() != generators => {
                            return Err(Error::ShapeMismatch(format!(
                                "line class {:?} on {a}->{b} has {} exponents, expected {generators}",
                                l.0,
                                l.rank()
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(BdrCocycle { n, generators, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), BdrEdge> {
        &self.edges
    }

    pub fn edge_mut(&mut self, a: usize, b: usize) -> Option<&mut BdrEdge> {
        self.edges.get_mut(&(a, b))
    }

    /// Data on `a → b`, inverting a stored `b → a` when it is monomial.
    pub fn edge(&self, a: usize, b: usize) -> Option<Cow<'_, BdrEdge>> {
        if let Some(e) = self.edges.get(&(a, b)) {
            return Some(Cow::Borrowed(e));
        }
        self.edges.get(&(b, a)).and_then(BdrEdge::inverse).map(Cow::Owned)
    }
}

/// Permuted-diagonal matrices from sheet permutations: `R[i][u(i)] = 1`, `L[i][u(i)] = ℒ_i`.
/// `lines[edge][sheet]` follows the edge order of the cover's nerve.
pub fn assemble(cover: &SpectralCoverGraph, lines: &[Vec<LineClass>]) -> Result<BdrCocycle> {
    let n = cover.sheets();
    let nerve = cover.nerve();
    let generators = lines.iter().flatten().next().map_or(0, LineClass::rank);
    let mut edges = BTreeMap::new();
    for (k, (&(a, b), u)) in nerve.edges().iter().zip(cover.transitions()).enumerate() {
        let row = lines.get(k);
        let mut l = vec![vec![None; n]; n];
        for i in 0..n {
            let class = row.and_then(|r| r.get(i)).ok_or_else(|| Error::MissingLine {
                edge: nerve.edge_label(a, b),
                sheet: i,
            })?;
            l[i][u.apply(i)] = Some(class.clone());
        }
        edges.insert(
            (a, b),
            BdrEdge {
                rank: DimMatrix::permutation(u.images()),
                lines: l,
            },
        );
    }
    BdrCocycle::new(n, generators, edges)
}

/// Coherent line data `ℒ_i^{αβ} = h_i^α − h_{u(i)}^β` from per-chart, per-sheet classes `h`.
pub fn coboundary_lines(cover: &SpectralCoverGraph, h: &[Vec<LineClass>]) -> Vec<Vec<LineClass>> {
    cover
        .nerve()
        .edges()
        .iter()
        .zip(cover.transitions())
        .map(|(&(a, b), u)| (0..cover.sheets()).map(|i| &h[a][i] - &h[b][u.apply(i)]).collect())
        .collect()
}

/// `det R^{αβ} ∈ {±1}` on every stored edge.
pub fn check_det(c: &BdrCocycle) -> CheckReport {
    let mut report = CheckReport::new("bdr_det");
    for (&(a, b), e) in &c.edges {
        let det = e.rank.determinant().unwrap_or(0);
        report.push(
            CheckRecord::new("det", det.abs() == 1, (det.abs() - 1).unsigned_abs() as f64)
                .at(format!("edge {a}->{b}"))
                .with_detail(format!("det = {det}")),
        );
    }
    report
}

fn tensor(x: &Entry, y: &Entry) -> Entry {
    let mut out = Entry::new();
    for (l, m) in x {
        for (k, n) in y {
            *out.entry(l + k).or_insert(0) += m * n;
        }
    }
    out
}

fn product(x: &[Vec<Entry>], y: &[Vec<Entry>]) -> Vec<Vec<Entry>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut acc = Entry::new();
                    for j in 0..n {
                        for (l, m) in tensor(&x[i][j], &y[j][k]) {
                            *acc.entry(l).or_insert(0) += m;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn rank_of(m: &[Vec<Entry>]) -> Vec<Vec<u64>> {
    m.iter().map(|r| r.iter().map(|e| e.values().sum()).collect()).collect()
}

fn mismatches(x: &[Vec<Entry>], y: &[Vec<Entry>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, (rx, ry)) in x.iter().zip(y).enumerate() {
        for (j, (ex, ey)) in rx.iter().zip(ry).enumerate() {
            if ex != ey {
                out.push((i, j));
            }
        }
    }
    out
}

fn describe(e: &Entry) -> String {
    let parts: Vec<String> = e.iter().map(|(l, m)| format!("{m}x{:?}", l.0)).collect();
    format!("{{{}}}", parts.join(", "))
}

/// `E^{αβ} E^{βγ} ≅ E^{αγ}`: exact rank products and matching line classes.
pub fn check_triple(c: &BdrCocycle, nerve: &CechNerve) -> CheckReport {
    let mut report = CheckReport::new("bdr_triple");
    for t in nerve.triangles() {
        let [a, b, g] = *t;
        let loc = format!("triangle {}", nerve.simplex_label(t));
        let (Some(ab), Some(bg), Some(ag)) = (c.edge(a, b), c.edge(b, g), c.edge(a, g)) else {
            report.push(
                CheckRecord::new("rank_product", false, f64::INFINITY)
                    .at(loc)
                    .with_detail("missing edge data"),
            );
            continue;
        };
        let lhs = product(&ab.entries(), &bg.entries());
        let rhs = ag.entries();
        let (lr, rr) = (rank_of(&lhs), rank_of(&rhs));
        let rank_bad = lr
            .iter()
            .flatten()
            .zip(rr.iter().flatten())
            .filter(|(x, y)| x != y)
            .count();
        let mut rec = CheckRecord::new("rank_product", rank_bad == 0, rank_bad as f64).at(loc.clone());
        if rank_bad > 0 {
            rec = rec.with_detail(format!("{lr:?} vs {rr:?}"));
        }
        report.push(rec);
        let bad = mismatches(&lhs, &rhs);
        let mut rec = CheckRecord::new("line_classes", bad.is_empty(), bad.len() as f64);
        if let Some(&(i, j)) = bad.first() {
            rec = rec.at(format!("{loc} sheet {i}")).with_detail(format!(
                "entry ({i}, {j}): {} vs {}",
                describe(&lhs[i][j]),
                describe(&rhs[i][j])
            ));
        } else {
            rec = rec.at(loc);
        }
        report.push(rec);
    }
    report
}

/// Every route from `α` to `δ` through a quadruple overlap gives the same class of `E^{αδ}`.
pub fn check_quadruple(c: &BdrCocycle, nerve: &CechNerve) -> CheckReport {
    let mut report = CheckReport::new("bdr_quadruple");
    for q in nerve.quadruples() {
        let [a, b, g, d] = *q;
        let loc = format!("quadruple {}", nerve.simplex_label(q));
        let get = |x: usize, y: usize| c.edge(x, y).map(|e| e.entries());
        let edges = [get(a, b), get(b, g), get(g, d), get(b, d), get(a, g), get(a, d)];
        let [Some(ab), Some(bg), Some(gd), Some(bd), Some(ag), Some(ad)] = edges else {
            report.push(
                CheckRecord::new("square", false, f64::INFINITY)
                    .at(loc)
                    .with_detail("missing edge data"),
            );
            continue;
        };
        let routes = [
            ("αβ·βγ·γδ", product(&product(&ab, &bg), &gd)),
            ("αβ·βδ", product(&ab, &bd)),
            ("αγ·γδ", product(&ag, &gd)),
        ];
        let mut bad = 0usize;
        let mut detail = None;
        for (name, m) in &routes {
            let miss = mismatches(m, &ad);
            if !miss.is_empty() && detail.is_none() {
                let (i, j) = miss[0];
                detail = Some(format!("route {name} differs from αδ at ({i}, {j})"));
            }
            bad += miss.len();
        }
        let mut rec = CheckRecord::new("square", bad == 0, bad as f64).at(loc);
        if let Some(d) = detail {
            rec = rec.with_detail(d);
        }
        report.push(rec);
    }
    report
}

/// Edges common to every triangle that fails `check_triple`; a single corrupted
/// edge shows up as the unique suspect when it lies on at least two triangles.
pub fn suspect_edges(c: &BdrCocycle, nerve: &CechNerve) -> Vec<(usize, usize)> {
    let report = check_triple(c, nerve);
    let mut suspects: Option<Vec<(usize, usize)>> = None;
    for (t, recs) in nerve.triangles().iter().zip(report.records.chunks(2)) {
        if recs.iter().all(CheckRecord::passed) {
            continue;
        }
        let [a, b, g] = *t;
        let sides = [(a.min(b), a.max(b)), (b.min(g), b.max(g)), (a.min(g), a.max(g))];
        suspects = Some(match suspects {
            None => sides.to_vec(),
            Some(s) => s.into_iter().filter(|e| sides.contains(e)).collect(),
        });
    }
    suspects.unwrap_or_default()
}

/// `{"n", "generators", "nerve", "edges": [{"from", "to", "rank": [[..]], "lines": [[null | [exponents]]]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BdrJson {
    pub n: usize,
    pub generators: usize,
    pub nerve: CechNerveJson,
    pub edges: Vec<BdrEdgeJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BdrEdgeJson {
    pub from: ChartId,
    pub to: ChartId,
    pub rank: Vec<Vec<u64>>,
    pub lines: Vec<Vec<Option<LineClass>>>,
}

impl BdrJson {
    pub fn to_cocycle(&self) -> Result<(BdrCocycle, CechNerve)> {
        let nerve = self.nerve.to_nerve()?;
        let lookup = |id: &ChartId| {
            nerve
                .index_of(&id.as_key())
                .ok_or_else(|| Error::InvalidNerve(format!("unknown chart id {}", id.as_key())))
        };
        let mut edges = BTreeMap::new();
        for e in &self.edges {
            let (a, b) = (lookup(&e.from)?, lookup(&e.to)?);
            if e.rank.len() != self.n || e.rank.iter().any(|r| r.len() != self.n) {
                return Err(Error::ShapeMismatch(format!(
                    "rank matrix on {} is not {n}x{n}",
                    nerve.edge_label(a, b),
                    n = self.n
                )));
            }
            edges.insert(
                (a, b),
                BdrEdge {
                    rank: DimMatrix::from_rows(self.n, self.n, &e.rank),
                    lines: e.lines.clone(),
                },
            );
        }
        Ok((BdrCocycle::new(self.n, self.generators, edges)?, nerve))
    }

    pub fn from_cocycle(c: &BdrCocycle, nerve: &CechNerve) -> Self {
        let id = |i: usize| ChartId::Name(nerve.id(i).to_string());
        BdrJson {
            n: c.n,
            generators: c.generators,
            nerve: nerve.into(),
            edges: c
                .edges
                .iter()
                .map(|(&(a, b), e)| BdrEdgeJson {
                    from: id(a),
                    to: id(b),
                    rank: e.rank.to_rows(),
                    lines: e.lines.clone(),
                })
                .collect(),
        }
    }
}
