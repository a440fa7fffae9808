//! Chung-Lu random graphs with a power-law expected degree sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{is_connected, WeightedGraph};

pub const MAX_ATTEMPTS: usize = 100;

/// Expected degrees `w_i = w_min (n / (i + 1))^{1/(gamma - 1)}`, so the degree
/// tail decays like `k^{-gamma}`.
pub fn expected_degrees(n: usize, gamma: f64) -> Vec<f64> {
    let w_min = (n as f64).ln() + 3.0;
    let exponent = 1.0 / (gamma - 1.0);
    (0..n)
        .map(|i| w_min * (n as f64 / (i + 1) as f64).powf(exponent))
        .collect()
}

/// Unit-weight Chung-Lu graph: edge `{i, j}` appears with probability
/// `min(1, w_i w_j / sum(w))`. Resamples (continuing the same stream) until
/// the graph is connected.
pub fn generate_powerlaw(n: usize, gamma: f64, seed: u64) -> Result<WeightedGraph> {
    if n < 4 {
        return Err(Error::Domain(format!(
            "power-law graph needs n >= 4, got {n}"
        )));
    }
    if !(gamma > 2.0 && gamma < 3.0) {
        return Err(Error::Domain(format!("exponent {gamma} outside (2, 3)")));
    }
    let w = expected_degrees(n, gamma);
    let total: f64 = w.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = (w[i] * w[j] / total).min(1.0);
                if rng.gen::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = WeightedGraph::new(n, edges)?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!(
        "no connected sample after {MAX_ATTEMPTS} attempts (n = {n}, gamma = {gamma})"
    )))
}
