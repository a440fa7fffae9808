//! Vertex disaggregation: plans, the disaggregated graph `G_D`, its Laplacian
//! `A_D`, the prolongation `P` and its scaled variant `D_s P`.
//!
//! Vertices of `G_D` are numbered group by group: the `d_1` disaggregates of
//! the first split, then the `d_2` of the second, and so on, followed by the
//! untouched vertices in increasing original order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_laplacian, is_connected, LaplacianMatrix, WeightedGraph};

/// The local graph placed among the `d` disaggregates of one split vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTemplate {
    Cycle,
    Clique,
    Path,
    /// Explicit local edges `(p, q, weight)` on vertices `0..d`.
    Custom(Vec<(usize, usize, f64)>),
}

impl LocalTemplate {
    /// Local edges with their default weights. A two-vertex cycle is a single edge.
    pub fn edges(&self, d: usize) -> Vec<(usize, usize, f64)> {
        match self {
            LocalTemplate::Path => (1..d).map(|i| (i - 1, i, 1.0)).collect(),
            LocalTemplate::Cycle if d <= 2 => (1..d).map(|i| (i - 1, i, 1.0)).collect(),
            LocalTemplate::Cycle => (0..d).map(|i| (i, (i + 1) % d, 1.0)).collect(),
            LocalTemplate::Clique => (0..d)
                .flat_map(|i| ((i + 1)..d).map(move |j| (i, j, 1.0)))
                .collect(),
            LocalTemplate::Custom(edges) => edges.clone(),
        }
    }

    /// The local graph on `d` vertices; errors unless it is valid and connected.
    pub fn graph(&self, d: usize) -> Result<WeightedGraph> {
        let g = WeightedGraph::new(d, self.edges(d))
            .map_err(|e| Error::InvalidPlan(format!("local template: {e}")))?;
        if !is_connected(&g) {
            return Err(Error::InvalidPlan(format!(
                "local template {self} is disconnected on {d} vertices"
            )));
        }
        Ok(g)
    }

    /// Laplacian of the template topology with every weight set to one.
    pub fn unit_laplacian(&self, d: usize) -> Result<LaplacianMatrix> {
        let g = self.graph(d)?;
        let unit = WeightedGraph::new(d, g.edges().iter().map(|e| (e.i, e.j, 1.0)))?;
        Ok(build_laplacian(&unit))
    }
}

impl fmt::Display for LocalTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalTemplate::Cycle => write!(f, "cycle"),
            LocalTemplate::Clique => write!(f, "clique"),
            LocalTemplate::Path => write!(f, "path"),
            LocalTemplate::Custom(e) => write!(f, "custom({} edges)", e.len()),
        }
    }
}

impl FromStr for LocalTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(LocalTemplate::Cycle),
            "clique" => Ok(LocalTemplate::Clique),
            "path" => Ok(LocalTemplate::Path),
            other => Err(Error::Domain(format!("unknown template `{other}`"))),
        }
    }
}

/// One vertex split: `vertex` becomes `d` disaggregates joined by `template`.
///
/// `assignment` maps every neighbour of `vertex` (i.e. every external edge)
/// to the disaggregate that inherits the edge. `internal_weights` lists one
/// weight per template edge; when empty the template's own weights apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub vertex: usize,
    pub d: usize,
    pub template: LocalTemplate,
    pub assignment: BTreeMap<usize, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub internal_weights: Vec<f64>,
}

impl Split {
    /// Assigns the external edges of `vertex` to disaggregates round-robin in edge-id order.
    pub fn round_robin(
        g: &WeightedGraph,
        vertex: usize,
        d: usize,
        template: LocalTemplate,
    ) -> Self {
        let assignment = g
            .incident(vertex)
            .enumerate()
            .map(|(k, (_, u, _))| (u, k % d))
            .collect();
        Split {
            vertex,
            d,
            template,
            assignment,
            internal_weights: Vec::new(),
        }
    }

    /// Local edges with the weights that go into `A_D`.
    pub fn weighted_local_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut edges = self.template.edges(self.d);
        if !self.internal_weights.is_empty() {
            for (e, &w) in edges.iter_mut().zip(&self.internal_weights) {
                e.2 = w;
            }
        }
        edges
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DisaggregationPlan {
    pub splits: Vec<Split>,
}

impl DisaggregationPlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// `n_d = sum d_k`.
    pub fn disaggregate_count(&self) -> usize {
        self.splits.iter().map(|s| s.d).sum()
    }

    /// `N = n - m + n_d` for a graph on `n` vertices.
    pub fn disaggregated_size(&self, n: usize) -> usize {
        n - self.splits.len() + self.disaggregate_count()
    }

    /// The same plan with every internal edge weight set to `w`.
    pub fn with_uniform_internal_weight(&self, w: f64) -> Self {
        let mut plan = self.clone();
        for s in &mut plan.splits {
            s.internal_weights = vec![w; s.template.edges(s.d).len()];
        }
        plan
    }

    fn validate_shape(&self, n: usize) -> Result<()> {
        let mut targets = HashSet::new();
        for s in &self.splits {
            if s.vertex >= n {
                return Err(Error::InvalidPlan(format!(
                    "split target {} is outside [0, {n})",
                    s.vertex
                )));
            }
            if !targets.insert(s.vertex) {
                return Err(Error::InvalidPlan(format!(
                    "vertex {} is split twice",
                    s.vertex
                )));
            }
            if s.d < 2 {
                return Err(Error::InvalidPlan(format!(
                    "vertex {} has multiplicity {}; use d >= 2 or leave it unsplit",
                    s.vertex, s.d
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        self.validate_shape(g.n())?;
        for s in &self.splits {
            let local = s.template.graph(s.d)?;
            if !s.internal_weights.is_empty() {
                if s.internal_weights.len() != local.edge_count() {
                    return Err(Error::InvalidPlan(format!(
                        "vertex {}: {} internal weights for {} template edges",
                        s.vertex,
                        s.internal_weights.len(),
                        local.edge_count()
                    )));
                }
                if let Some(w) = s
                    .internal_weights
                    .iter()
                    .find(|w| !(w.is_finite() && **w > 0.0))
                {
                    return Err(Error::InvalidPlan(format!(
                        "vertex {}: internal weight {w} is not positive",
                        s.vertex
                    )));
                }
            }
            let neighbours: HashSet<usize> = g.incident(s.vertex).map(|(_, u, _)| u).collect();
            for (&u, &slot) in &s.assignment {
                if !neighbours.contains(&u) {
                    return Err(Error::InvalidPlan(format!(
                        "vertex {}: assignment names {u}, which is not a neighbour",
                        s.vertex
                    )));
                }
                if slot >= s.d {
                    return Err(Error::InvalidPlan(format!(
                        "vertex {}: disaggregate index {slot} is outside [0, {})",
                        s.vertex, s.d
                    )));
                }
            }
            if let Some(u) = neighbours.iter().find(|u| !s.assignment.contains_key(u)) {
                return Err(Error::InvalidPlan(format!(
                    "vertex {}: external edge to {u} is unassigned",
                    s.vertex
                )));
            }
        }
        Ok(())
    }
}

/// How many disaggregates a vertex above the degree threshold receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplicityRule {
    /// `ceil(deg / threshold)`.
    Auto,
    /// `ceil(deg / c)`.
    CeilDiv(f64),
    Fixed(usize),
}

impl MultiplicityRule {
    fn multiplicity(&self, degree: f64, threshold: f64) -> usize {
        match *self {
            MultiplicityRule::Auto => (degree / threshold).ceil() as usize,
            MultiplicityRule::CeilDiv(c) => (degree / c).ceil() as usize,
            MultiplicityRule::Fixed(d) => d,
        }
    }
}

impl FromStr for MultiplicityRule {
    type Err = Error;

    /// Accepts `auto`, `ceil:<c>` and `fixed:<d>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown multiplicity rule `{s}`"));
        match s.split_once(':') {
            None if s == "auto" => Ok(MultiplicityRule::Auto),
            Some(("ceil", c)) => {
                let c: f64 = c.parse().map_err(|_| bad())?;
                if !(c.is_finite() && c > 0.0) {
                    return Err(bad());
                }
                Ok(MultiplicityRule::CeilDiv(c))
            }
            Some(("fixed", d)) => Ok(MultiplicityRule::Fixed(d.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Splits every vertex whose weighted degree exceeds `threshold`.
///
/// The multiplicity is capped by the number of incident edges; a vertex whose
/// capped multiplicity falls below two is left alone.
pub fn plan_from_threshold(
    g: &WeightedGraph,
    threshold: f64,
    rule: MultiplicityRule,
    template: LocalTemplate,
) -> Result<DisaggregationPlan> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Domain(format!(
            "degree threshold {threshold} must be positive"
        )));
    }
    if !is_connected(g) {
        return Err(Error::Disconnected);
    }
    let degrees = g.degrees();
    let mut splits = Vec::new();
    for (v, &deg) in degrees.iter().enumerate() {
        if deg <= threshold {
            continue;
        }
        let edge_count = g.incident(v).count();
        let d = rule.multiplicity(deg, threshold).min(edge_count);
        if d >= 2 {
            splits.push(Split::round_robin(g, v, d, template.clone()));
        }
    }
    Ok(DisaggregationPlan { splits })
}

/// Where a vertex of `G_D` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexOrigin {
    Disaggregate { group: usize, slot: usize },
    Kept { vertex: usize },
}

/// A vertex of some disaggregated graph named by original-graph data, so
/// graphs reached by different split orders can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    Original(usize),
    Disaggregate { vertex: usize, slot: usize },
}

/// Partition of the edges of `G_D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeClass {
    /// Both endpoints untouched.
    Kept,
    /// One endpoint untouched, the other a disaggregate of `group`.
    Attached { group: usize },
    /// Disaggregates of two different groups.
    Bridge { groups: (usize, usize) },
    /// An edge of the local template of `group`.
    Internal { group: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitGroup {
    pub vertex: usize,
    pub d: usize,
    pub offset: usize,
    /// Ids into `G_D`'s edge list, in template-edge order.
    pub internal_edges: Vec<usize>,
}

/// `G_D`, `A_D`, `P`, `D_s` and the bookkeeping that ties them to `G`.
#[derive(Debug, Clone)]
pub struct DisaggregatedSystem {
    original: WeightedGraph,
    plan: DisaggregationPlan,
    a: LaplacianMatrix,
    gd: WeightedGraph,
    ad: LaplacianMatrix,
    p: DMatrix<f64>,
    ds: DVector<f64>,
    origin: Vec<VertexOrigin>,
    kept: Vec<usize>,
    groups: Vec<SplitGroup>,
    edge_class: Vec<EdgeClass>,
}

pub fn apply(g: &WeightedGraph, plan: &DisaggregationPlan) -> Result<DisaggregatedSystem> {
    plan.validate(g)?;
    let n = g.n();
    let big_n = plan.disaggregated_size(n);

    let mut group_of = vec![None; n];
    let mut groups = Vec::with_capacity(plan.splits.len());
    let mut origin = Vec::with_capacity(big_n);
    let mut offset = 0;
    for (k, s) in plan.splits.iter().enumerate() {
        group_of[s.vertex] = Some(k);
        groups.push(SplitGroup {
            vertex: s.vertex,
            d: s.d,
            offset,
            internal_edges: Vec::new(),
        });
        origin.extend((0..s.d).map(|slot| VertexOrigin::Disaggregate { group: k, slot }));
        offset += s.d;
    }
    let mut image = vec![usize::MAX; n];
    let mut kept = Vec::with_capacity(n - groups.len());
    for v in (0..n).filter(|&v| group_of[v].is_none()) {
        image[v] = origin.len();
        kept.push(origin.len());
        origin.push(VertexOrigin::Kept { vertex: v });
    }

    let endpoint = |x: usize, other: usize| match group_of[x] {
        Some(k) => groups[k].offset + plan.splits[k].assignment[&other],
        None => image[x],
    };
    let mut edges = Vec::with_capacity(g.edge_count());
    let mut edge_class = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        edges.push((endpoint(e.i, e.j), endpoint(e.j, e.i), e.w));
        edge_class.push(match (group_of[e.i], group_of[e.j]) {
            (None, None) => EdgeClass::Kept,
            (Some(k), None) | (None, Some(k)) => EdgeClass::Attached { group: k },
            (Some(k), Some(l)) => EdgeClass::Bridge { groups: (k, l) },
        });
    }
    for (k, s) in plan.splits.iter().enumerate() {
        for (p, q, w) in s.weighted_local_edges() {
            groups[k].internal_edges.push(edges.len());
            edges.push((groups[k].offset + p, groups[k].offset + q, w));
            edge_class.push(EdgeClass::Internal { group: k });
        }
    }
    let gd = WeightedGraph::new(big_n, edges)?;

    let p = prolongation(plan, n)?;
    let ds = DVector::from_iterator(
        big_n,
        origin.iter().map(|o| match *o {
            VertexOrigin::Disaggregate { group, .. } => 1.0 / (groups[group].d as f64).sqrt(),
            VertexOrigin::Kept { .. } => 1.0,
        }),
    );

    Ok(DisaggregatedSystem {
        a: build_laplacian(g),
        ad: build_laplacian(&gd),
        original: g.clone(),
        plan: plan.clone(),
        gd,
        p,
        ds,
        origin,
        kept,
        groups,
        edge_class,
    })
}

/// The `N x n` 0/1 prolongation: column `k` of a split vertex holds `d_k` ones.
pub fn prolongation(plan: &DisaggregationPlan, n: usize) -> Result<DMatrix<f64>> {
    plan.validate_shape(n)?;
    let big_n = plan.disaggregated_size(n);
    let mut p = DMatrix::zeros(big_n, n);
    let mut row = 0;
    let mut split = vec![false; n];
    for s in &plan.splits {
        split[s.vertex] = true;
        for _ in 0..s.d {
            p[(row, s.vertex)] = 1.0;
            row += 1;
        }
    }
    for v in (0..n).filter(|&v| !split[v]) {
        p[(row, v)] = 1.0;
        row += 1;
    }
    Ok(p)
}

/// `D_s P`, whose columns are orthonormal.
pub fn scaled_prolongation(sys: &DisaggregatedSystem) -> DMatrix<f64> {
    DMatrix::from_diagonal(&sys.ds) * &sys.p
}

/// `P phi - s 1_N` with `s = (1/N) sum_k (d_k - 1) phi_k`; orthogonal to `1_N`.
pub fn lift_eigvec(sys: &DisaggregatedSystem, phi: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_original_len(phi)?;
    let shift = sys
        .groups
        .iter()
        .map(|g| (g.d as f64 - 1.0) * phi[g.vertex])
        .sum::<f64>()
        / sys.size() as f64;
    Ok(sys.p.clone() * phi - DVector::from_element(sys.size(), shift))
}

/// `P phi - s 1_N` with `s` chosen so the result is `D_D`-orthogonal to `1_N`.
pub fn lift_eigvec_normalized(
    sys: &DisaggregatedSystem,
    phi: &DVector<f64>,
) -> Result<DVector<f64>> {
    sys.check_original_len(phi)?;
    let lifted = &sys.p * phi;
    let deg = sys.ad.matrix().diagonal();
    let shift = lifted.dot(&deg) / deg.sum();
    Ok(lifted - DVector::from_element(sys.size(), shift))
}

/// One step of a one-vertex-at-a-time disaggregation.
#[derive(Debug, Clone)]
pub struct SequentialStep {
    /// The graph before this step.
    pub before: WeightedGraph,
    /// Index of the split vertex in `before`.
    pub target: usize,
    pub system: DisaggregatedSystem,
    /// Labels of the vertices of the graph after this step.
    pub labels: Vec<VertexLabel>,
}

/// Applies the splits of `plan` one at a time, in plan order.
///
/// Step `i` disaggregates the `i`-th target inside the graph produced by the
/// previous steps; every external edge keeps the disaggregate it was given in
/// `plan`, so the last graph equals `apply(g, plan)` up to vertex order.
pub fn apply_sequential(
    g: &WeightedGraph,
    plan: &DisaggregationPlan,
) -> Result<Vec<SequentialStep>> {
    plan.validate(g)?;
    let mut current = g.clone();
    let mut labels: Vec<VertexLabel> = (0..g.n()).map(VertexLabel::Original).collect();
    let mut steps = Vec::with_capacity(plan.splits.len());
    for s in &plan.splits {
        let target = labels
            .iter()
            .position(|l| *l == VertexLabel::Original(s.vertex))
            .expect("split targets are distinct");
        let mut assignment = BTreeMap::new();
        for (_, u, _) in current.incident(target) {
            let neighbour = match labels[u] {
                VertexLabel::Original(v) => v,
                VertexLabel::Disaggregate { vertex, .. } => vertex,
            };
            assignment.insert(u, s.assignment[&neighbour]);
        }
        let local = DisaggregationPlan {
            splits: vec![Split {
                vertex: target,
                assignment,
                ..s.clone()
            }],
        };
        let system = apply(&current, &local)?;
        let next_labels = system
            .origin
            .iter()
            .map(|o| match *o {
                VertexOrigin::Disaggregate { slot, .. } => VertexLabel::Disaggregate {
                    vertex: s.vertex,
                    slot,
                },
                VertexOrigin::Kept { vertex } => labels[vertex],
            })
            .collect();
        let next = system.gd.clone();
        steps.push(SequentialStep {
            before: std::mem::replace(&mut current, next),
            target,
            system,
            labels: next_labels,
        });
        labels = steps.last().expect("just pushed").labels.clone();
    }
    Ok(steps)
}

impl DisaggregatedSystem {
    fn check_original_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.original_size() {
            return Err(Error::DimensionMismatch {
                expected: self.original_size(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn original(&self) -> &WeightedGraph {
        &self.original
    }

    pub fn plan(&self) -> &DisaggregationPlan {
        &self.plan
    }

    /// `A`, the Laplacian of the original graph.
    pub fn a(&self) -> &LaplacianMatrix {
        &self.a
    }

    /// `G_D`.
    pub fn gd(&self) -> &WeightedGraph {
        &self.gd
    }

    /// `A_D`.
    pub fn ad(&self) -> &LaplacianMatrix {
        &self.ad
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Diagonal of `D_s`.
    pub fn ds(&self) -> &DVector<f64> {
        &self.ds
    }

    pub fn origin(&self) -> &[VertexOrigin] {
        &self.origin
    }

    pub fn groups(&self) -> &[SplitGroup] {
        &self.groups
    }

    pub fn edge_classes(&self) -> &[EdgeClass] {
        &self.edge_class
    }

    /// `G_D` indices of the untouched vertices, in original order.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// `n`.
    pub fn original_size(&self) -> usize {
        self.original.n()
    }

    /// `N`.
    pub fn size(&self) -> usize {
        self.gd.n()
    }

    pub fn split_count(&self) -> usize {
        self.groups.len()
    }

    pub fn labels(&self) -> Vec<VertexLabel> {
        self.origin
            .iter()
            .map(|o| match *o {
                VertexOrigin::Disaggregate { group, slot } => VertexLabel::Disaggregate {
                    vertex: self.groups[group].vertex,
                    slot,
                },
                VertexOrigin::Kept { vertex } => VertexLabel::Original(vertex),
            })
            .collect()
    }

    /// `G_D` index of disaggregate `slot` of split `group`.
    pub fn disaggregate_index(&self, group: usize, slot: usize) -> usize {
        self.groups[group].offset + slot
    }

    /// Total weight of the local graph of `group`, `w_total(G_a^k)`.
    pub fn local_total_weight(&self, group: usize) -> f64 {
        self.groups[group]
            .internal_edges
            .iter()
            .map(|&e| self.gd.edges()[e].w)
            .sum()
    }

    /// `Ã_D = D_s^{-1} A_D D_s^{-1}`.
    pub fn scaled_laplacian(&self) -> DMatrix<f64> {
        let inv = self.ds.map(|x| 1.0 / x);
        let mut m = self.ad.matrix().clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= inv[i] * inv[j];
            }
        }
        m
    }

    /// `A_0`: the block of `A_D` on the untouched vertices.
    pub fn block_kept(&self) -> DMatrix<f64> {
        self.ad
            .matrix()
            .select_rows(&self.kept)
            .select_columns(&self.kept)
    }

    /// `A_{0n}`: minus the coupling block between untouched vertices and disaggregates.
    pub fn block_coupling(&self) -> DMatrix<f64> {
        let split: Vec<usize> = (0..self.plan.disaggregate_count()).collect();
        -self
            .ad
            .matrix()
            .select_rows(&self.kept)
            .select_columns(&split)
    }

    /// `A_n`: the block of `A_D` on the disaggregates.
    pub fn block_split(&self) -> DMatrix<f64> {
        let split: Vec<usize> = (0..self.plan.disaggregate_count()).collect();
        self.ad.matrix().select_rows(&split).select_columns(&split)
    }

    /// Rebuilds the system with new internal weights, one list per split group
    /// in template-edge order.
    pub fn with_internal_weights(&self, weights: &[Vec<f64>]) -> Result<Self> {
        if weights.len() != self.groups.len() {
            return Err(Error::DimensionMismatch {
                expected: self.groups.len(),
                found: weights.len(),
            });
        }
        let mut plan = self.plan.clone();
        for (s, w) in plan.splits.iter_mut().zip(weights) {
            s.internal_weights = w.clone();
        }
        apply(&self.original, &plan)
    }

    /// Current internal weights, one list per split group.
    pub fn internal_weights(&self) -> Vec<Vec<f64>> {
        self.groups
            .iter()
            .map(|g| {
                g.internal_edges
                    .iter()
                    .map(|&e| self.gd.edges()[e].w)
                    .collect()
            })
            .collect()
    }
}
