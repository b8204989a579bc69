//! Seeded random 1-port topologies.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::campaign::CampaignConfig;
use crate::error::{Error, Result};
use crate::topology::Digraph;

/// RNG for circuit `index` of a campaign seeded with `seed`.
pub fn circuit_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random digraph with terminals `a`, `b` and interior nodes `n1..nk`.
///
/// The graph starts as a random `a`-`b` path and grows by open ears (paths
/// of new nodes between two distinct existing nodes), so every node lies on
/// an `a`-`b` path. Extra chords are then drawn without duplicating an
/// existing node pair; with `enforce_w1` off a node already joined to `b`
/// may receive a parallel branch to `b`. Orientations and branch order are
/// random.
pub fn generate_random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &CampaignConfig,
) -> Result<Digraph> {
    let (lo, hi) = cfg.node_range;
    if lo > hi {
        return Err(Error::Config(format!("empty node range [{lo}, {hi}]")));
    }
    let k = rng.gen_range(lo..=hi);
    let n = k + 2;
    let (a, b) = (0usize, 1usize);
    let mut labels = vec!["a".to_owned(), "b".to_owned()];
    labels.extend((1..=k).map(|i| format!("n{i}")));

    let mut interior: Vec<usize> = (2..n).collect();
    interior.shuffle(rng);
    let mut adjacent = vec![vec![false; n]; n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut add = |x: usize, y: usize, edges: &mut Vec<(usize, usize)>| {
        adjacent[x][y] = true;
        adjacent[y][x] = true;
        edges.push((x, y));
    };

    let first = if k == 0 { 0 } else { rng.gen_range(1..=k) };
    let mut path = vec![a];
    path.extend_from_slice(&interior[..first]);
    path.push(b);
    for w in path.windows(2) {
        add(w[0], w[1], &mut edges);
    }
    let mut used = path;
    let mut rest = &interior[first..];
    while !rest.is_empty() {
        let len = rng.gen_range(1..=rest.len().min(3));
        let ends: Vec<usize> = used.choose_multiple(rng, 2).copied().collect();
        let mut ear = vec![ends[0]];
        ear.extend_from_slice(&rest[..len]);
        ear.push(ends[1]);
        for w in ear.windows(2) {
            add(w[0], w[1], &mut edges);
        }
        used.extend_from_slice(&rest[..len]);
        rest = &rest[len..];
    }

    let (f_lo, f_hi) = cfg.branch_factor;
    let want_lo = (f_lo * k as f64).floor() as usize;
    let want_hi = (f_hi * k as f64).floor() as usize;
    let want = rng.gen_range(want_lo..=want_hi.max(want_lo));
    let mut candidates = Vec::new();
    for (x, row) in adjacent.iter().enumerate() {
        for (y, &adj) in row.iter().enumerate().skip(x + 1) {
            let parallel_to_b = !cfg.enforce_w1 && (x == b || y == b) && x != a;
            if !adj || parallel_to_b {
                candidates.push((x, y));
            }
        }
    }
    candidates.shuffle(rng);
    edges.extend(candidates.into_iter().take(want));

    edges.shuffle(rng);
    let branches = edges
        .into_iter()
        .map(|(x, y)| if rng.gen_bool(0.5) { (x, y) } else { (y, x) })
        .collect();
    Digraph::from_indices(labels, a, b, branches)
}
