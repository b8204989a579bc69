//! Independent reference solvers for integration tests.
//!
//! Nothing here touches the Newton solver: potentials come from scalar
//! bisection, node by node, swept until the whole network settles.

#![allow(dead_code)]

use alphanet_core::{ConductanceLaw, Digraph};

/// Root of a monotone scalar function on `[lo, hi]` by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "root not bracketed on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Node potentials with `a` held at `v_in` and `b` at zero.
///
/// Each sweep re-solves KCL at every interior node for its own potential with
/// the neighbours frozen. The network current is strictly increasing in each
/// node potential, so every local problem has one root inside `[0, v_in]`.
pub fn potentials(g: &Digraph, law: &ConductanceLaw, v_in: f64) -> Vec<f64> {
    let n = g.node_count();
    let mut phi = vec![0.5 * v_in; n];
    phi[g.terminal_a()] = v_in;
    phi[g.terminal_b()] = 0.0;
    let incident: Vec<Vec<usize>> = (0..n)
        .map(|k| {
            g.branches()
                .iter()
                .flat_map(|&(p, q)| {
                    let mut out = Vec::new();
                    if p == k && q != k {
                        out.push(q);
                    }
                    if q == k && p != k {
                        out.push(p);
                    }
                    out
                })
                .collect()
        })
        .collect();
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for &k in g.interior() {
            let nbrs = &incident[k];
            let snapshot: Vec<f64> = nbrs.iter().map(|&j| phi[j]).collect();
            let kcl = |x: f64| snapshot.iter().map(|&pj| law.current(x - pj)).sum::<f64>();
            let x = bisect(kcl, 0.0, v_in);
            change = change.max((x - phi[k]).abs());
            phi[k] = x;
        }
        if change <= 1e-15 * v_in {
            break;
        }
    }
    phi
}

/// Current entering at `a` for given potentials.
pub fn input_current(g: &Digraph, law: &ConductanceLaw, phi: &[f64]) -> f64 {
    let a = g.terminal_a();
    g.branches()
        .iter()
        .map(|&(p, q)| {
            if p == a {
                law.current(phi[p] - phi[q])
            } else if q == a {
                law.current(phi[q] - phi[p])
            } else {
                0.0
            }
        })
        .sum()
}

/// Middle potential of the divider under `2 i(v) = i(v_in - v)`.
pub fn divider_potential(law: &ConductanceLaw, v_in: f64) -> f64 {
    bisect(|v| 2.0 * law.current(v) - law.current(v_in - v), 0.0, v_in)
}
