//! Seeded random graphs and disaggregation plans shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use disagg::{DisaggregationPlan, LocalTemplate, Split, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus independent extra edges, weights in `[0.1, 10)`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    let density = rng.gen_range(0.05..0.35);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, rng.gen_range(0.1..10.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) && !edges.iter().any(|e| (e.0, e.1) == (i, j)) {
                edges.push((i, j, rng.gen_range(0.1..10.0)));
            }
        }
    }
    WeightedGraph::new(n, edges).expect("valid random graph")
}

/// A connected random local graph on `d` vertices with positive weights.
pub fn random_custom(rng: &mut ChaCha8Rng, d: usize) -> LocalTemplate {
    let mut edges = Vec::new();
    for v in 1..d {
        edges.push((rng.gen_range(0..v), v, rng.gen_range(0.5..4.0)));
    }
    for i in 0..d {
        for j in i + 1..d {
            if rng.gen_bool(0.3) && !edges.iter().any(|e| (e.0.min(e.1), e.0.max(e.1)) == (i, j)) {
                edges.push((i, j, rng.gen_range(0.5..4.0)));
            }
        }
    }
    LocalTemplate::Custom(edges)
}

pub fn random_template(rng: &mut ChaCha8Rng, d: usize) -> LocalTemplate {
    match rng.gen_range(0..4) {
        0 => LocalTemplate::Cycle,
        1 => LocalTemplate::Clique,
        2 => LocalTemplate::Path,
        _ => random_custom(rng, d),
    }
}

/// Splits `v` into `d` disaggregates with a random template, a random slot
/// per neighbour and (half the time) random internal weights.
pub fn random_split(rng: &mut ChaCha8Rng, g: &WeightedGraph, v: usize, d: usize) -> Split {
    let template = random_template(rng, d);
    let assignment: BTreeMap<usize, usize> = g
        .incident(v)
        .map(|(_, u, _)| (u, rng.gen_range(0..d)))
        .collect();
    let internal_weights = if rng.gen_bool(0.5) {
        (0..template.edges(d).len())
            .map(|_| rng.gen_range(0.1..10.0))
            .collect()
    } else {
        Vec::new()
    };
    Split {
        vertex: v,
        d,
        template,
        assignment,
        internal_weights,
    }
}

/// Up to `m_max` distinct split vertices, each with `d` in `[2, d_max]`.
pub fn random_plan(
    rng: &mut ChaCha8Rng,
    g: &WeightedGraph,
    m_max: usize,
    d_max: usize,
) -> DisaggregationPlan {
    let m = rng.gen_range(1..=m_max.min(g.n()));
    let mut vertices: Vec<usize> = (0..g.n()).collect();
    vertices.shuffle(rng);
    let splits = vertices[..m]
        .iter()
        .map(|&v| {
            let d = rng.gen_range(2..=d_max);
            random_split(rng, g, v, d)
        })
        .collect();
    DisaggregationPlan { splits }
}

/// Two or three splits, the first two at the ends of one edge so that `G_D`
/// has edges joining two split groups.
pub fn adjacent_hubs_plan(
    rng: &mut ChaCha8Rng,
    g: &WeightedGraph,
    d_max: usize,
) -> DisaggregationPlan {
    let e = g.edges()[rng.gen_range(0..g.edge_count())];
    let mut targets = vec![e.i, e.j];
    if rng.gen_bool(0.5) {
        let extra = rng.gen_range(0..g.n());
        if !targets.contains(&extra) {
            targets.push(extra);
        }
    }
    let splits = targets
        .into_iter()
        .map(|v| {
            let d = rng.gen_range(2..=d_max);
            random_split(rng, g, v, d)
        })
        .collect();
    DisaggregationPlan { splits }
}

/// Random connected graph with `n` in `n_range` and a random plan (m <= 3, d <= 5).
pub fn instance(seed: u64, lo: usize, hi: usize) -> (WeightedGraph, DisaggregationPlan) {
    let mut r = rng(seed);
    let n = r.gen_range(lo..=hi);
    let g = random_graph(&mut r, n);
    let plan = random_plan(&mut r, &g, 3, 5);
    (g, plan)
}

/// Random connected graph with a single split (d <= 5).
pub fn single_split_instance(
    seed: u64,
    lo: usize,
    hi: usize,
) -> (WeightedGraph, DisaggregationPlan) {
    let mut r = rng(seed);
    let n = r.gen_range(lo..=hi);
    let g = random_graph(&mut r, n);
    let v = r.gen_range(0..n);
    let d = r.gen_range(2..=5);
    let plan = DisaggregationPlan {
        splits: vec![random_split(&mut r, &g, v, d)],
    };
    (g, plan)
}

/// Random graph with two or three splits, two of them adjacent.
pub fn hub_instance(seed: u64, lo: usize, hi: usize) -> (WeightedGraph, DisaggregationPlan) {
    let mut r = rng(seed);
    let n = r.gen_range(lo..=hi);
    let g = random_graph(&mut r, n);
    let plan = adjacent_hubs_plan(&mut r, &g, 5);
    (g, plan)
}

/// Star `K_{1,leaves}` with unit weights, centre 0.
pub fn star(leaves: usize) -> WeightedGraph {
    WeightedGraph::new(leaves + 1, (1..=leaves).map(|v| (0, v, 1.0))).unwrap()
}
