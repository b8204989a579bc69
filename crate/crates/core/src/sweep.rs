//! Potentials as functions of the exponent and of a term coefficient:
//! monotonicity over an exponent grid, two-step connections of three and
//! four alpha-circuits, and the coefficient scan between two one-term laws.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::ConductanceLaw;
use crate::solver::{solve, OperatingPoint, SolverConfig};
use crate::superposition::TIE_FRACTION;
use crate::topology::{classify_branches, Digraph};

/// Default exponent grid for monotonicity checks.
pub const DEFAULT_ALPHAS: [f64; 7] = [1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    NonMonotonic,
}

/// Classifies a sampled sequence; steps within `deadband` are ignored and a
/// total range below it is constant.
pub fn classify_sequence(values: &[f64], deadband: f64) -> Monotonicity {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if max - min < deadband {
        return Monotonicity::Constant;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let significant: Vec<f64> = diffs
        .iter()
        .copied()
        .filter(|d| d.abs() > deadband)
        .collect();
    let steps = if significant.is_empty() {
        diffs
    } else {
        significant
    };
    let up = steps.iter().any(|&d| d > 0.0);
    let down = steps.iter().any(|&d| d < 0.0);
    match (up, down) {
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (false, false) => Monotonicity::Constant,
        (true, true) => Monotonicity::NonMonotonic,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweep {
    pub v_in: f64,
    /// Exponents that solved, ascending.
    pub alphas: Vec<f64>,
    /// `potentials[i][k]`: potential of node `k` at `alphas[i]`.
    pub potentials: Vec<Vec<f64>>,
    /// `s''` branch indices, in the column order of `s2_voltages`.
    pub s2_branches: Vec<usize>,
    pub s2_voltages: Vec<Vec<f64>>,
    pub node_flags: Vec<Monotonicity>,
    pub s2_flags: Vec<Monotonicity>,
    pub phi_values: Vec<f64>,
    /// Exponents whose solve failed, with the error text.
    pub failures: Vec<(f64, String)>,
}

impl AlphaSweep {
    /// Nodes whose potential is not monotone on the grid.
    pub fn non_monotonic_nodes(&self) -> Vec<usize> {
        self.node_flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Monotonicity::NonMonotonic)
            .map(|(k, _)| k)
            .collect()
    }

    /// Long-format CSV: `alpha,node,potential`.
    pub fn write_csv<W: Write>(&self, g: &Digraph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "node", "potential"])?;
        for (alpha, row) in self.alphas.iter().zip(&self.potentials) {
            for (k, v) in row.iter().enumerate() {
                w.write_record([alpha.to_string(), g.label(k).to_owned(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_grid(alphas: &[f64], min_len: usize) -> Result<()> {
    if alphas.len() < min_len {
        return Err(Error::Config(format!(
            "need at least {min_len} exponents, got {}",
            alphas.len()
        )));
    }
    if alphas.iter().any(|&a| !(a >= 1.0 && a.is_finite())) {
        return Err(Error::Config("exponents must be finite and >= 1".into()));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("exponents must be strictly ascending".into()));
    }
    Ok(())
}

/// Solves the unit-coefficient alpha-circuit at every grid point and
/// classifies every potential and every `s''` voltage.
pub fn sweep_alpha(
    g: &Digraph,
    alphas: &[f64],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<AlphaSweep> {
    check_grid(alphas, 3)?;
    let solved: Vec<(f64, Result<OperatingPoint>)> = alphas
        .par_iter()
        .map(|&a| {
            (
                a,
                ConductanceLaw::power(1.0, a).and_then(|l| solve(g, &l, v_in, cfg)),
            )
        })
        .collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (a, r) in solved {
        match r {
            Ok(op) => ok.push((a, op)),
            Err(e) => failures.push((a, e.to_string())),
        }
    }
    if ok.len() < 3 {
        return Err(Error::Config(format!(
            "only {} grid points solved",
            ok.len()
        )));
    }
    let cls = classify_branches(g);
    let b = g.terminal_b();
    let deadband = TIE_FRACTION * v_in;
    let potentials: Vec<Vec<f64>> = ok
        .iter()
        .map(|(_, op)| op.node_potentials.clone())
        .collect();
    let s2_voltages: Vec<Vec<f64>> = potentials
        .iter()
        .map(|p| cls.k_s_double_prime.iter().map(|&k| p[k] - p[b]).collect())
        .collect();
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let node_flags = (0..g.node_count())
        .map(|k| classify_sequence(&column(&potentials, k), deadband))
        .collect();
    let s2_flags = (0..cls.s_double_prime.len())
        .map(|j| classify_sequence(&column(&s2_voltages, j), deadband))
        .collect();
    let phi_values = ok
        .iter()
        .map(|(a, op)| op.input_current / v_in.powf(*a))
        .collect();
    Ok(AlphaSweep {
        v_in,
        alphas: ok.iter().map(|(a, _)| *a).collect(),
        potentials,
        s2_branches: cls.s_double_prime.clone(),
        s2_voltages,
        node_flags,
        s2_flags,
        phi_values,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityClass {
    /// All non-constant `s''` voltages move the same way.
    pub similar: bool,
    /// Every `s''` voltage is constant on the grid.
    pub all_constant: bool,
    pub per_branch: Vec<(usize, Monotonicity)>,
}

pub fn classify_monotonicity(sweep: &AlphaSweep) -> MonotonicityClass {
    let per_branch: Vec<(usize, Monotonicity)> = sweep
        .s2_branches
        .iter()
        .copied()
        .zip(sweep.s2_flags.iter().copied())
        .collect();
    let moving: Vec<Monotonicity> = sweep
        .s2_flags
        .iter()
        .copied()
        .filter(|f| *f != Monotonicity::Constant)
        .collect();
    let similar = moving
        .iter()
        .all(|&f| f != Monotonicity::NonMonotonic && f == moving[0]);
    MonotonicityClass {
        similar,
        all_constant: moving.is_empty(),
        per_branch,
    }
}

/// Strict bracketing of `v` by `x` and `y` with interior margin `delta`;
/// when `x` and `y` tie, `v` must tie with them.
fn bracketed(v: f64, x: f64, y: f64, tie: f64, delta: f64) -> bool {
    let (lo, hi) = (x.min(y), x.max(y));
    if hi - lo < tie {
        (v - lo).abs() <= tie.max(delta) || (v - hi).abs() <= tie.max(delta)
    } else {
        v > lo + delta && v < hi - delta
    }
}

/// Strictly monotone (either way) or all tied.
fn chain_ordered(values: &[f64], tie: f64) -> bool {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.iter().all(|d| d.abs() < tie)
        || diffs.iter().all(|&d| d >= tie)
        || diffs.iter().all(|&d| d <= -tie)
}

fn unit_laws(alphas: &[f64]) -> Result<Vec<ConductanceLaw>> {
    alphas
        .iter()
        .map(|&a| ConductanceLaw::power(1.0, a))
        .collect()
}

fn solve_all(
    g: &Digraph,
    laws: &[ConductanceLaw],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<Vec<OperatingPoint>> {
    laws.par_iter().map(|l| solve(g, l, v_in, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchBracket3 {
    pub branch: usize,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    /// Voltage in the connection of the first and third circuits.
    pub v13: f64,
    pub bracketed: bool,
    pub chain_ordered: bool,
    /// `|v13 - v2| / |v3 - v1|`; `None` when `v1` and `v3` tie.
    pub closeness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P3Report {
    pub alphas: [f64; 3],
    pub v_in: f64,
    pub branches: Vec<BranchBracket3>,
    pub all_bracketed: bool,
    pub all_chain_ordered: bool,
    /// Input current of the first-and-third connection.
    pub f13: f64,
    /// Separate input current of the middle circuit.
    pub f_alpha2: f64,
    /// Input current of the full three-term connection.
    pub f_full: f64,
    /// `sum F_alpha` over all three.
    pub g: f64,
    /// `f_full - (f13 + f_alpha2)`: change when the middle circuit joins.
    pub completion_change: f64,
    pub completion_relative: f64,
    pub eta_full: f64,
}

/// Connects the outer two of three ascending exponents first and checks that
/// every `s''` voltage of that connection lies between the outer separate
/// voltages, and how close it lands to the middle one.
pub fn bracketing_check_p3(
    g: &Digraph,
    alphas: [f64; 3],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<P3Report> {
    check_grid(&alphas, 3)?;
    let laws = unit_laws(&alphas)?;
    let outer = laws[0].merged(&laws[2]);
    let full = outer.merged(&laws[1]);
    let mut all = laws.clone();
    all.extend([outer, full]);
    let ops = solve_all(g, &all, v_in, cfg)?;
    let (sep, conn, full_op) = (&ops[..3], &ops[3], &ops[4]);

    let cls = classify_branches(g);
    let b = g.terminal_b();
    let tie = TIE_FRACTION * v_in;
    let rel = |op: &OperatingPoint, k: usize| op.node_potentials[k] - op.node_potentials[b];
    let branches: Vec<BranchBracket3> = cls
        .s_double_prime
        .iter()
        .zip(&cls.k_s_double_prime)
        .map(|(&s, &k)| {
            let (v1, v2, v3, v13) = (
                rel(&sep[0], k),
                rel(&sep[1], k),
                rel(&sep[2], k),
                rel(conn, k),
            );
            let spread = (v3 - v1).abs();
            BranchBracket3 {
                branch: s,
                v1,
                v2,
                v3,
                v13,
                bracketed: bracketed(v13, v1, v3, tie, tie),
                chain_ordered: chain_ordered(&[v1, v2, v3], tie),
                closeness: (spread >= tie).then(|| (v13 - v2).abs() / spread),
            }
        })
        .collect();
    let f13 = conn.input_current;
    let f_alpha2 = sep[1].input_current;
    let g_sum: f64 = sep.iter().map(|o| o.input_current).sum();
    let f_full = full_op.input_current;
    let completion_change = f_full - (f13 + f_alpha2);
    Ok(P3Report {
        alphas,
        v_in,
        all_bracketed: branches.iter().all(|x| x.bracketed),
        all_chain_ordered: branches.iter().all(|x| x.chain_ordered),
        branches,
        f13,
        f_alpha2,
        f_full,
        g: g_sum,
        completion_change,
        completion_relative: completion_change.abs() / f_full,
        eta_full: (f_full - g_sum).abs() / f_full,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P4Report {
    pub alphas: [f64; 4],
    pub v_in: f64,
    /// `|v_k(1+4) - v_k(2+3)|` per node.
    pub intermediate_distance: Vec<f64>,
    pub max_intermediate_distance: f64,
    /// Whether each intermediate `s''` voltage lies within the outer
    /// separate voltages `[v(alpha_1), v(alpha_4)]`.
    pub intermediates_interior: bool,
    /// Per node, whether `v_k(alpha_1..alpha_4)` is strictly ordered (or
    /// tied).
    pub node_chain_ordered: Vec<bool>,
    pub f14: f64,
    pub f23: f64,
    pub f_full: f64,
    pub g: f64,
    /// `|f_full - g| / f_full`
    pub eta_full: f64,
    /// `|f_full - (f14 + f23)| / f_full`
    pub eta_intermediates: f64,
}

/// Builds the `alpha_1 + alpha_4` and `alpha_2 + alpha_3` connections and
/// compares them with each other and with the full connection.
pub fn bracketing_check_p4(
    g: &Digraph,
    alphas: [f64; 4],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<P4Report> {
    check_grid(&alphas, 4)?;
    let laws = unit_laws(&alphas)?;
    let l14 = laws[0].merged(&laws[3]);
    let l23 = laws[1].merged(&laws[2]);
    let full = l14.merged(&l23);
    let mut all = laws.clone();
    all.extend([l14, l23, full]);
    let ops = solve_all(g, &all, v_in, cfg)?;
    let (sep, o14, o23, ofull) = (&ops[..4], &ops[4], &ops[5], &ops[6]);
    let tie = TIE_FRACTION * v_in;

    let intermediate_distance: Vec<f64> = o14
        .node_potentials
        .iter()
        .zip(&o23.node_potentials)
        .map(|(x, y)| (x - y).abs())
        .collect();
    let node_chain_ordered = (0..g.node_count())
        .map(|k| {
            chain_ordered(
                &sep.iter().map(|o| o.node_potentials[k]).collect::<Vec<_>>(),
                tie,
            )
        })
        .collect();
    let cls = classify_branches(g);
    let b = g.terminal_b();
    let intermediates_interior = cls.k_s_double_prime.iter().all(|&k| {
        let v1 = sep[0].node_potentials[k] - sep[0].node_potentials[b];
        let v4 = sep[3].node_potentials[k] - sep[3].node_potentials[b];
        [o14, o23].iter().all(|o| {
            let v = o.node_potentials[k] - o.node_potentials[b];
            bracketed(v, v1, v4, tie, 0.0)
        })
    });
    let g_sum: f64 = sep.iter().map(|o| o.input_current).sum();
    let f_full = ofull.input_current;
    Ok(P4Report {
        alphas,
        v_in,
        max_intermediate_distance: intermediate_distance.iter().copied().fold(0.0, f64::max),
        intermediate_distance,
        intermediates_interior,
        node_chain_ordered,
        f14: o14.input_current,
        f23: o23.input_current,
        f_full,
        g: g_sum,
        eta_full: (f_full - g_sum).abs() / f_full,
        eta_intermediates: (f_full - o14.input_current - o23.input_current).abs() / f_full,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DPoint {
    pub d: f64,
    pub node_potentials: Vec<f64>,
    /// `max_k |v_k(D) - v_k(alpha_1 only)|`
    pub distance_to_first: f64,
    /// `max_k |v_k(D) - v_k(alpha_2 only)|`
    pub distance_to_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DContinuity {
    pub alpha1: f64,
    pub alpha2: f64,
    pub v_in: f64,
    pub points: Vec<DPoint>,
    /// Distance to the first circuit shrinks as `D` falls over `D <= 1`.
    pub lower_tail_monotone: bool,
    /// Distance to the second circuit shrinks as `D` grows over `D >= 1`.
    pub upper_tail_monotone: bool,
}

/// Scans `f = v^alpha1 + D v^alpha2` over `d_values`. `D = 0` drops the
/// second term. Positive values must span at least four decades.
pub fn d_continuity(
    g: &Digraph,
    alpha1: f64,
    alpha2: f64,
    d_values: &[f64],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<DContinuity> {
    if d_values.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
        return Err(Error::Config("coefficients must be finite and >= 0".into()));
    }
    let mut ds = d_values.to_vec();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    let positive: Vec<f64> = ds.iter().copied().filter(|&d| d > 0.0).collect();
    match (positive.first(), positive.last()) {
        (Some(lo), Some(hi)) if hi / lo >= 1e4 * (1.0 - 1e-12) => {}
        _ => {
            return Err(Error::Config(
                "coefficient grid must span at least four decades".into(),
            ))
        }
    }
    let first = ConductanceLaw::power(1.0, alpha1)?;
    let second = ConductanceLaw::power(1.0, alpha2)?;
    let ref1 = solve(g, &first, v_in, cfg)?;
    let ref2 = solve(g, &second, v_in, cfg)?;
    let dist = |p: &[f64], r: &OperatingPoint| {
        p.iter()
            .zip(&r.node_potentials)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let points = ds
        .par_iter()
        .map(|&d| {
            let law = if d == 0.0 {
                first.clone()
            } else {
                first.merged(&ConductanceLaw::power(d, alpha2)?)
            };
            let op = solve(g, &law, v_in, cfg)?;
            Ok(DPoint {
                d,
                distance_to_first: dist(&op.node_potentials, &ref1),
                distance_to_second: dist(&op.node_potentials, &ref2),
                node_potentials: op.node_potentials,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let floor = 1e-13 * v_in;
    let shrinking = |seq: &[f64]| seq.windows(2).all(|w| w[0] < w[1] || w[1] <= floor);
    let lower: Vec<f64> = points
        .iter()
        .filter(|p| p.d <= 1.0)
        .map(|p| p.distance_to_first)
        .collect();
    // reversed so that the sequence runs from large D down to D = 1
    let upper: Vec<f64> = points
        .iter()
        .rev()
        .filter(|p| p.d >= 1.0)
        .map(|p| p.distance_to_second)
        .collect();
    Ok(DContinuity {
        alpha1,
        alpha2,
        v_in,
        lower_tail_monotone: shrinking(&lower),
        upper_tail_monotone: shrinking(&upper),
        points,
    })
}
