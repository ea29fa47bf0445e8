//! Branes lifted to the spectral cover: sheet ranks, the sheet nerve of the
//! cover, and the map from branes to twisted bundles over it.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::brane::BraneLabel;
use crate::error::{Error, Result};
use crate::family::SpectralCoverGraph;
use crate::nerve::CechNerve;
use crate::scalar::Tolerance;
use crate::twisted::{azumaya_extract, solve_iso, AzumayaExtraction, TwistedBundle};

/// Nerve of the cover itself: one chart `(α, i)` per sheet of each base chart,
/// glued along `(α, i) ~ (β, u_{αβ}(i))`. A base triangle or quadruple lifts
/// wherever the sheet permutations close up on it.
pub fn sheet_nerve(cover: &SpectralCoverGraph) -> CechNerve {
    let base = cover.nerve();
    let n = cover.sheets();
    let node = |a: usize, i: usize| a * n + i;
    let ids = (0..base.chart_count())
        .flat_map(|a| (0..n).map(move |i| (a, i)))
        .map(|(a, i)| format!("{}:{}", base.id(a), i))
        .collect();
    let mut edges = Vec::new();
    for (&(a, b), u) in base.edges().iter().zip(cover.transitions()) {
        for i in 0..n {
            edges.push((node(a, i), node(b, u.apply(i))));
        }
    }
    // sheet reached from chart simplex[0]'s sheet i, if all pairwise transports agree
    let lift = |simplex: &[usize], i: usize| -> Option<Vec<usize>> {
        let first = simplex[0];
        let sheets: Vec<usize> = simplex
            .iter()
            .map(|&b| {
                if b == first {
                    Some(i)
                } else {
                    cover.transition(first, b).map(|u| u.apply(i))
                }
            })
            .collect::<Option<_>>()?;
        for x in 0..simplex.len() {
            for y in x + 1..simplex.len() {
                let u = cover.transition(simplex[x], simplex[y])?;
                if u.apply(sheets[x]) != sheets[y] {
                    return None;
                }
            }
        }
        Some(simplex.iter().zip(&sheets).map(|(&a, &s)| node(a, s)).collect())
    };
    let mut triangles = Vec::new();
    for t in base.triangles() {
        for i in 0..n {
            if let Some(v) = lift(t, i) {
                triangles.push([v[0], v[1], v[2]]);
            }
        }
    }
    let mut quadruples = Vec::new();
    for q in base.quadruples() {
        for i in 0..n {
            if let Some(v) = lift(q, i) {
                quadruples.push([v[0], v[1], v[2], v[3]]);
            }
        }
    }
    CechNerve::new(ids, edges, triangles, quadruples).expect("lifted nerve is well formed")
}

/// A brane label spread over the sheets of a cover.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedLabel {
    pub sheets: usize,
    /// `[chart][sheet]` rank `d(a, i)`.
    pub dims: Vec<Vec<usize>>,
    /// Sheet-nerve chart indices of each connected component, in order of first chart.
    pub components: Vec<Vec<usize>>,
    pub component_ranks: Vec<usize>,
    #[serde(skip)]
    pub sheet_nerve: CechNerve,
}

impl LiftedLabel {
    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// Rank function on the sheet nerve.
    pub fn rank_function(&self) -> Vec<usize> {
        self.dims.iter().flatten().copied().collect()
    }

    /// Multiset of block dimensions of one chart's endomorphism algebra.
    pub fn block_multiset(&self) -> Vec<usize> {
        let mut v = self.dims.first().cloned().unwrap_or_default();
        v.sort_unstable();
        v
    }

    /// Sub-nerve on one component, keeping the sheet-nerve chart ids.
    pub fn component_nerve(&self, c: usize) -> CechNerve {
        if self.is_connected() {
            return self.sheet_nerve.clone();
        }
        let nodes = &self.components[c];
        let local = |x: usize| nodes.iter().position(|&y| y == x);
        let ids = nodes.iter().map(|&x| self.sheet_nerve.id(x).to_string()).collect();
        let edges = self
            .sheet_nerve
            .edges()
            .iter()
            .filter_map(|&(a, b)| Some((local(a)?, local(b)?)))
            .collect();
        let triangles = self
            .sheet_nerve
            .triangles()
            .iter()
            .filter_map(|t| Some([local(t[0])?, local(t[1])?, local(t[2])?]))
            .collect();
        let quadruples = self
            .sheet_nerve
            .quadruples()
            .iter()
            .filter_map(|q| Some([local(q[0])?, local(q[1])?, local(q[2])?, local(q[3])?]))
            .collect();
        CechNerve::new(ids, edges, triangles, quadruples).expect("sub-nerve of a valid nerve")
    }
}

/// Lift per-chart labels (or one label used on every chart) to the cover.
pub fn lift_label(labels: &[BraneLabel], cover: &SpectralCoverGraph) -> Result<LiftedLabel> {
    let base = cover.nerve();
    let m = base.chart_count();
    let n = cover.sheets();
    let labels: Vec<&BraneLabel> = match labels.len() {
        1 => vec![&labels[0]; m],
        k if k == m => labels.iter().collect(),
        k => return Err(Error::ShapeMismatch(format!("{k} labels for {m} charts"))),
    };
    if let Some(l) = labels.iter().find(|l| l.n() != n) {
        return Err(Error::ShapeMismatch(format!(
            "label {:?} does not have one entry per sheet ({n})",
            l.dims
        )));
    }
    for (&(a, b), u) in base.edges().iter().zip(cover.transitions()) {
        for i in 0..n {
            let (left, right) = (labels[a].dims[i], labels[b].dims[u.apply(i)]);
            if left != right {
                return Err(Error::InconsistentDims {
                    from: base.id(a).to_string(),
                    to: base.id(b).to_string(),
                    sheet: i,
                    image: u.apply(i),
                    left,
                    right,
                });
            }
        }
    }
    let sheet_nerve = sheet_nerve(cover);
    let comp = sheet_nerve.components();
    let count = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut components = vec![Vec::new(); count];
    for (x, &c) in comp.iter().enumerate() {
        components[c].push(x);
    }
    let dims: Vec<Vec<usize>> = labels.iter().map(|l| l.dims.clone()).collect();
    let component_ranks = components
        .iter()
        .map(|nodes| dims[nodes[0] / n][nodes[0] % n])
        .collect();
    Ok(LiftedLabel {
        sheets: n,
        dims,
        components,
        component_ranks,
        sheet_nerve,
    })
}

/// `𝔼_a` with `END(𝔼_a) ≅ Γ̃_aa` on a connected cover. `conj` is the algebra
/// bundle on the sheet nerve (rank `d²`); `None` means identity gluing.
pub fn brane_to_twisted(
    l: &LiftedLabel,
    conj: Option<&TwistedBundle>,
    tol: &Tolerance,
    seed: u64,
) -> Result<AzumayaExtraction> {
    if !l.is_connected() {
        return Err(Error::Disconnected(l.components.len()));
    }
    component_bundle(l, 0, conj, tol, seed)
}

fn component_bundle(
    l: &LiftedLabel,
    c: usize,
    conj: Option<&TwistedBundle>,
    tol: &Tolerance,
    seed: u64,
) -> Result<AzumayaExtraction> {
    let d = l.component_ranks[c];
    let nerve = l.component_nerve(c);
    let trivial;
    let a = match conj {
        Some(a) => a,
        None => {
            trivial = TwistedBundle::trivial(&nerve, d * d);
            &trivial
        }
    };
    if a.nerve() != &nerve {
        return Err(Error::InvalidNerve(
            "algebra bundle does not live on the sheet nerve".into(),
        ));
    }
    if a.rank() != d * d {
        return Err(Error::ShapeMismatch(format!(
            "algebra bundle has rank {}, expected {}",
            a.rank(),
            d * d
        )));
    }
    azumaya_extract(a, tol, seed)
}

/// A lifted label with one bundle per component (`None` where the rank is zero).
#[derive(Debug, Clone)]
pub struct SpectralBrane {
    pub label: LiftedLabel,
    pub bundles: Vec<Option<TwistedBundle>>,
}

/// Extract a bundle on every component; `conj[c]` as in [`brane_to_twisted`].
pub fn realize(l: &LiftedLabel, conj: &[Option<TwistedBundle>], tol: &Tolerance, seed: u64) -> Result<SpectralBrane> {
    let bundles = (0..l.components.len())
        .map(|c| {
            if l.component_ranks[c] == 0 {
                return Ok(None);
            }
            let a = conj.get(c).and_then(Option::as_ref);
            Ok(Some(component_bundle(l, c, a, tol, seed)?.bundle))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralBrane {
        label: l.clone(),
        bundles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    /// Brane indices grouped by the rank function of `Γ_aa` over the cover.
    pub label_classes: Vec<Vec<usize>>,
    /// Brane indices grouped by bundle class modulo twisted lines.
    pub bundle_classes: Vec<Vec<usize>>,
    /// Every label class lands in a single bundle class.
    pub well_defined: bool,
    /// Distinct label classes land in distinct bundle classes.
    pub injective: bool,
    /// Branes with different block-dimension multisets have different bundle classes.
    pub multiset_separated: bool,
}

/// `E ~ F` iff they have the same components and ranks and `END(E) ≅ END(F)`
/// on each, i.e. `E ≅ F ⊗ 𝕃` for a twisted line `𝕃`.
pub fn same_bundle_class(p: &SpectralBrane, q: &SpectralBrane, tol: &Tolerance, seed: u64) -> bool {
    if p.label.components != q.label.components || p.label.component_ranks != q.label.component_ranks {
        return false;
    }
    p.bundles.iter().zip(&q.bundles).all(|(x, y)| match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => x.nerve() == y.nerve() && solve_iso(&x.end(), &y.end(), tol, seed).is_ok(),
        _ => false,
    })
}

fn group_by(count: usize, mut same: impl FnMut(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..count {
        match classes.iter_mut().find(|c| same(c[0], x)) {
            Some(c) => c.push(x),
            None => classes.push(vec![x]),
        }
    }
    classes
}

pub fn phi_classify(branes: &[SpectralBrane], tol: &Tolerance, seed: u64) -> Classification {
    let label_classes = group_by(branes.len(), |a, b| {
        branes[a].label.rank_function() == branes[b].label.rank_function()
    });
    let bundle_classes = group_by(branes.len(), |a, b| {
        same_bundle_class(&branes[a], &branes[b], tol, seed)
    });
    let class_of: BTreeMap<usize, usize> = bundle_classes
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.iter().map(move |&x| (x, k)))
        .collect();
    let image: Vec<Vec<usize>> = label_classes
        .iter()
        .map(|c| {
            let mut v: Vec<usize> = c.iter().map(|x| class_of[x]).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let well_defined = image.iter().all(|v| v.len() == 1);
    let mut injective = true;
    for x in 0..image.len() {
        for y in x + 1..image.len() {
            if image[x].iter().any(|k| image[y].contains(k)) {
                injective = false;
            }
        }
    }
    let mut multiset_separated = true;
    for a in 0..branes.len() {
        for b in a + 1..branes.len() {
            if branes[a].label.block_multiset() != branes[b].label.block_multiset() && class_of[&a] == class_of[&b] {
                multiset_separated = false;
            }
        }
    }
    Classification {
        label_classes,
        bundle_classes,
        well_defined,
        injective,
        multiset_separated,
    }
}
