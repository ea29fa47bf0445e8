//! Finite combinatorial nerve of an open cover: charts with oriented pairwise
//! overlaps and the triple and quadruple overlaps that carry cocycle laws.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CechNerve {
    ids: Vec<String>,
    edges: Vec<(usize, usize)>,
    triangles: Vec<[usize; 3]>,
    quadruples: Vec<[usize; 4]>,
}

/// Where an unordered overlap is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef {
    pub index: usize,
    /// `false` when the stored orientation is the reverse of the one asked for.
    pub forward: bool,
}

impl CechNerve {
    pub fn new(
        ids: Vec<String>,
        edges: Vec<(usize, usize)>,
        triangles: Vec<[usize; 3]>,
        quadruples: Vec<[usize; 4]>,
    ) -> Result<Self> {
        let m = ids.len();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != m {
            return Err(Error::InvalidNerve("duplicate chart ids".into()));
        }
        let in_range = |v: &[usize]| v.iter().all(|&i| i < m);
        let distinct = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        };
        let mut seen = BTreeMap::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            if !in_range(&[a, b]) || a == b {
                return Err(Error::InvalidNerve(format!("edge {k} ({a}, {b}) is invalid")));
            }
            if seen.insert((a.min(b), a.max(b)), k).is_some() {
                return Err(Error::InvalidNerve(format!("edge ({a}, {b}) listed twice")));
            }
        }
        for t in &triangles {
            if !in_range(t) || !distinct(t) {
                return Err(Error::InvalidNerve(format!("triangle {t:?} is invalid")));
            }
        }
        for q in &quadruples {
            if !in_range(q) || !distinct(q) {
                return Err(Error::InvalidNerve(format!("quadruple {q:?} is invalid")));
            }
        }
        Ok(CechNerve {
            ids,
            edges,
            triangles,
            quadruples,
        })
    }

    /// Charts named `0..m`.
    pub fn anonymous(
        charts: usize,
        edges: Vec<(usize, usize)>,
        triangles: Vec<[usize; 3]>,
        quadruples: Vec<[usize; 4]>,
    ) -> Result<Self> {
        Self::new(
            (0..charts).map(|i| i.to_string()).collect(),
            edges,
            triangles,
            quadruples,
        )
    }

    /// Full simplex on `m` charts: every pair, triple and quadruple, in increasing order.
    pub fn complete(m: usize) -> Self {
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        let mut quadruples = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                edges.push((i, j));
                for k in j + 1..m {
                    triangles.push([i, j, k]);
                    for l in k + 1..m {
                        quadruples.push([i, j, k, l]);
                    }
                }
            }
        }
        Self::anonymous(m, edges, triangles, quadruples).expect("complete nerve is valid")
    }

    pub fn chart_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, chart: usize) -> &str {
        &self.ids[chart]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn quadruples(&self) -> &[[usize; 4]] {
        &self.quadruples
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<EdgeRef> {
        self.edges.iter().enumerate().find_map(|(index, &(x, y))| {
            if (x, y) == (a, b) {
                Some(EdgeRef { index, forward: true })
            } else if (x, y) == (b, a) {
                Some(EdgeRef { index, forward: false })
            } else {
                None
            }
        })
    }

    pub fn edge_label(&self, a: usize, b: usize) -> String {
        format!("{}->{}", self.ids[a], self.ids[b])
    }

    pub fn simplex_label(&self, charts: &[usize]) -> String {
        let parts: Vec<&str> = charts.iter().map(|&i| self.ids[i].as_str()).collect();
        parts.join(",")
    }

    pub fn neighbours(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(x, y)| {
            if x == a {
                Some(y)
            } else if y == a {
                Some(x)
            } else {
                None
            }
        })
    }

    /// Breadth-first spanning forest: `(parent, child)` pairs in visiting
    /// order, plus the root of each component.
    pub fn spanning_forest(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let m = self.chart_count();
        let mut visited = vec![false; m];
        let mut roots = Vec::new();
        let mut tree = Vec::new();
        for root in 0..m {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            roots.push(root);
            let mut queue = VecDeque::from([root]);
            while let Some(a) = queue.pop_front() {
                let mut next: Vec<usize> = self.neighbours(a).filter(|&b| !visited[b]).collect();
                next.sort_unstable();
                next.dedup();
                for b in next {
                    if !visited[b] {
                        visited[b] = true;
                        tree.push((a, b));
                        queue.push_back(b);
                    }
                }
            }
        }
        (roots, tree)
    }

    /// Component index of every chart.
    pub fn components(&self) -> Vec<usize> {
        let (roots, tree) = self.spanning_forest();
        let mut comp = vec![usize::MAX; self.chart_count()];
        for (k, &r) in roots.iter().enumerate() {
            comp[r] = k;
        }
        for (a, b) in tree {
            comp[b] = comp[a];
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.spanning_forest().0.len()
    }
}

/// Chart ids in JSON may be strings or integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartId {
    Int(i64),
    Name(String),
}

impl ChartId {
    pub fn as_key(&self) -> String {
        match self {
            ChartId::Int(i) => i.to_string(),
            ChartId::Name(s) => s.clone(),
        }
    }
}

/// `{"charts": m | [ids], "edges": [[a,b]], "triangles": [[a,b,c]], "quadruples": [[a,b,c,d]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CechNerveJson {
    pub charts: ChartList,
    #[serde(default)]
    pub edges: Vec<[ChartId; 2]>,
    #[serde(default)]
    pub triangles: Vec<[ChartId; 3]>,
    #[serde(default)]
    pub quadruples: Vec<[ChartId; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartList {
    Count(usize),
    Ids(Vec<ChartId>),
}

impl CechNerveJson {
    pub fn to_nerve(&self) -> Result<CechNerve> {
        let ids: Vec<String> = match &self.charts {
            ChartList::Count(m) => (0..*m).map(|i| i.to_string()).collect(),
            ChartList::Ids(v) => v.iter().map(ChartId::as_key).collect(),
        };
        let lookup = |c: &ChartId| -> Result<usize> {
            let key = c.as_key();
            ids.iter()
                .position(|x| *x == key)
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
        CechNerve::new(ids, edges, triangles, quadruples)
    }
}

impl From<&CechNerve> for CechNerveJson {
    fn from(n: &CechNerve) -> Self {
        let id = |i: usize| ChartId::Name(n.ids[i].clone());
        CechNerveJson {
            charts: ChartList::Ids(n.ids.iter().cloned().map(ChartId::Name).collect()),
            edges: n.edges.iter().map(|&(a, b)| [id(a), id(b)]).collect(),
            triangles: n.triangles.iter().map(|t| [id(t[0]), id(t[1]), id(t[2])]).collect(),
            quadruples: n
                .quadruples
                .iter()
                .map(|q| [id(q[0]), id(q[1]), id(q[2]), id(q[3])])
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_nerve_counts() {
        let n = CechNerve::complete(4);
        assert_eq!(n.edges().len(), 6);
        assert_eq!(n.triangles().len(), 4);
        assert_eq!(n.quadruples().len(), 1);
        assert_eq!(n.component_count(), 1);
    }

    #[test]
    fn edge_lookup_reports_orientation() {
        let n = CechNerve::anonymous(3, vec![(0, 1), (2, 1)], vec![], vec![]).unwrap();
        assert_eq!(
            n.find_edge(1, 2),
            Some(EdgeRef {
                index: 1,
                forward: false
            })
        );
        assert_eq!(n.find_edge(0, 2), None);
        assert_eq!(n.components(), vec![0, 0, 0]);
    }

    #[test]
    fn invalid_nerves_are_rejected() {
        assert!(CechNerve::anonymous(2, vec![(0, 0)], vec![], vec![]).is_err());
        assert!(CechNerve::anonymous(2, vec![(0, 1), (1, 0)], vec![], vec![]).is_err());
        assert!(CechNerve::anonymous(2, vec![], vec![[0, 1, 2]], vec![]).is_err());
    }

    #[test]
    fn json_accepts_named_and_counted_charts() {
        let j: CechNerveJson = serde_json::from_str(r#"{"charts": ["a", "b", 7], "edges": [["a", 7]]}"#).unwrap();
        let n = j.to_nerve().unwrap();
        assert_eq!(n.edges(), &[(0, 2)]);
        let j: CechNerveJson = serde_json::from_str(r#"{"charts": 3, "triangles": [[0, 1, 2]]}"#).unwrap();
        assert_eq!(j.to_nerve().unwrap().triangles(), &[[0, 1, 2]]);
        let j: CechNerveJson = serde_json::from_str(r#"{"charts": 2, "edges": [[0, 5]]}"#).unwrap();
        assert!(j.to_nerve().is_err());
    }
}
