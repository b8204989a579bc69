//! Exit criteria. Runs every check at its pinned tolerance, prints one
//! PASS/FAIL line each and exits non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use alphanet_core::campaign::{campaign_circuit, run_campaign, CampaignConfig, CampaignResult};
use alphanet_core::superposition::IDENTITY_TOL;
use alphanet_core::sweep::{
    bracketing_check_p3, bracketing_check_p4, d_continuity, sweep_alpha, Monotonicity,
};
use alphanet_core::{
    double_inequality_violations, evaluate_bounds, fixtures, solve, superpose, BoundId,
    ConductanceLaw, Digraph, SolverConfig,
};

type Outcome = Result<String, String>;

const CLOSED_FORM_TOL: f64 = 1e-10;
const SOLVE_BUDGET: Duration = Duration::from_millis(1);
const DIVIDER_TOL: f64 = 1e-9;
const CONNECTION_TOL: f64 = 1e-8;
const BRACKET_MARGIN: f64 = 1e-10;
const CAMPAIGN_BUDGET: Duration = Duration::from_secs(60);
const TELLEGEN_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;
const IDEAL_ETA: f64 = 1e-12;
const POTENTIAL_DRIFT: f64 = 1e-12;
const CURRENT_SCALE_TOL: f64 = 1e-10;
const RANDOM_CIRCUITS: usize = 100;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn unit(alpha: f64) -> ConductanceLaw {
    ConductanceLaw::power(1.0, alpha).unwrap()
}

fn random_circuits() -> Vec<Digraph> {
    let cc = CampaignConfig::default();
    (0..RANDOM_CIRCUITS)
        .map(|i| campaign_circuit(&cc, i).unwrap())
        .collect()
}

struct Campaign {
    result: CampaignResult,
    elapsed: Duration,
}

fn campaign() -> &'static Campaign {
    static CAMPAIGN: OnceLock<Campaign> = OnceLock::new();
    CAMPAIGN.get_or_init(|| {
        let cc = CampaignConfig {
            num_circuits: 1000,
            exponent_pairs: vec![(1.0, 2.0), (1.0, 3.0), (2.0, 5.0)],
            v_in_values: vec![0.1, 1.0, 10.0],
            ..CampaignConfig::default()
        };
        let start = Instant::now();
        let result = run_campaign(&cc).unwrap();
        Campaign {
            result,
            elapsed: start.elapsed(),
        }
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn analytic_exactness() -> Outcome {
    let g1 = fixtures::single_branch();
    let g2 = fixtures::chain();
    let mut slowest = Duration::ZERO;
    let mut worst: f64 = 0.0;
    for (d, alpha) in [(1.0, 1.0), (2.0, 3.0), (0.25, 2.5), (7.0, 5.0)] {
        let law = ConductanceLaw::power(d, alpha).unwrap();
        for v_in in [0.1, 1.0, 3.0] {
            let (op, t) = timed(|| solve(&g1, &law, v_in, &cfg()).unwrap());
            slowest = slowest.max(t);
            worst = worst.max((op.input_current - d * v_in.powf(alpha)).abs());
            let (op, t) = timed(|| solve(&g2, &law, v_in, &cfg()).unwrap());
            slowest = slowest.max(t);
            worst = worst.max((op.potential(1) - v_in / 2.0).abs());
        }
    }
    let detail = format!("max error {worst:.1e}, slowest solve {slowest:?}");
    if worst <= CLOSED_FORM_TOL && slowest < SOLVE_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let g = fixtures::divider();
    let mut worst: f64 = 0.0;
    for alpha in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let op = solve(&g, &unit(alpha), 1.0, &cfg()).map_err(|e| e.to_string())?;
        worst = worst.max((op.potential(1) - 1.0 / (1.0 + 2f64.powf(1.0 / alpha))).abs());
    }
    let v = common::bisect(
        |v| 2.0 * (v + v.powi(3)) - (1.0 - v) - (1.0 - v).powi(3),
        0.0,
        1.0,
    );
    let sup = superpose(&g, &[unit(1.0), unit(3.0)], 1.0, &cfg()).map_err(|e| e.to_string())?;
    let err = (sup.connected.potential(1) - v).abs();
    let detail = format!("closed-form error {worst:.1e}, connection error {err:.1e} (v = {v:.6})");
    if worst <= DIVIDER_TOL && err <= CONNECTION_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wing_pattern() -> Outcome {
    let g = fixtures::divider();
    let rep = superpose(&g, &[unit(1.0), unit(3.0)], 1.0, &cfg())
        .map_err(|e| e.to_string())?
        .report;
    let low = (rep.f_alpha_cnct[0] - rep.f_alpha[0]) / rep.f_alpha[0];
    let high = (rep.f_alpha_cnct[1] - rep.f_alpha[1]) / rep.f_alpha[1];
    let eta = rep.eta.unwrap();
    let detail = format!(
        "low wing {:+.1}%, high wing {:+.1}%, total {:.2}%",
        100.0 * low,
        100.0 * high,
        100.0 * eta
    );
    if low > 0.0 && high < 0.0 && eta < low.abs() && eta < high.abs() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bracket_campaign() -> Outcome {
    let c = campaign();
    let s = &c.result.summary;
    let detail = format!(
        "{} of {} instances bracket-violating, {} solver failures, {:.2?}",
        s.violations["eq4"], s.instances, s.solver_failures, c.elapsed
    );
    if s.violations["eq4"] == 0 && s.solver_failures == 0 && c.elapsed < CAMPAIGN_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn count_bound(id: BoundId) -> (usize, usize) {
    let recs = &campaign().result.records;
    let applicable = recs
        .iter()
        .filter_map(|r| r.bounds.get(id))
        .filter(|e| e.applicable);
    let (mut n, mut bad) = (0, 0);
    for e in applicable {
        n += 1;
        if !e.holds {
            bad += 1;
        }
    }
    (bad, n)
}

fn wing_change_bound() -> Outcome {
    let (bad, n) = count_bound(BoundId::Stmt2);
    let detail = format!("{bad} of {n} similarly-monotonic instances violate");
    if bad == 0 && n > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn error_bounds() -> Outcome {
    let ids = [
        BoundId::B10,
        BoundId::B11,
        BoundId::B12,
        BoundId::B15,
        BoundId::B25B26Max,
        BoundId::B21,
    ];
    let counts: Vec<(BoundId, usize, usize)> = ids
        .iter()
        .map(|&id| {
            let (bad, n) = count_bound(id);
            (id, bad, n)
        })
        .collect();
    let detail = counts
        .iter()
        .map(|(id, bad, n)| format!("{} {bad}/{n}", id.as_str()))
        .collect::<Vec<_>>()
        .join(", ");
    if counts.iter().all(|&(_, bad, n)| bad == 0 && n > 0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tellegen() -> Outcome {
    let recs = &campaign().result.records;
    let cross = recs.iter().map(|r| r.tellegen_residual).fold(0.0, f64::max);
    let identity = recs.iter().map(|r| r.eq29_residual).fold(0.0, f64::max);
    let detail = format!(
        "worst cross-pairing {cross:.1e}, worst identity {identity:.1e} over {} instances",
        recs.len()
    );
    if cross <= TELLEGEN_TOL && identity <= IDENTITY_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn energy() -> Outcome {
    let recs = &campaign().result.records;
    let worst = recs.iter().map(|r| r.energy_residual).fold(0.0, f64::max);
    let detail = format!("worst relative mismatch {worst:.1e}");
    if worst <= ENERGY_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn small_signal_limit() -> Outcome {
    let mut decreasing = 0;
    let mut ideal = 0;
    let mut failures = Vec::new();
    let mut single_term_worst: f64 = 0.0;
    for (i, g) in random_circuits().iter().enumerate() {
        let eta = |v_in: f64| {
            superpose(g, &[unit(1.0), unit(3.0)], v_in, &cfg()).map(|s| s.report.eta.unwrap_or(0.0))
        };
        let (e2, e1, e0) = (eta(0.01).unwrap(), eta(0.1).unwrap(), eta(1.0).unwrap());
        if e0 <= IDEAL_ETA {
            ideal += 1;
            if e1 > IDEAL_ETA || e2 > IDEAL_ETA {
                failures.push(i);
            }
        } else if e2 < e1 && e1 < e0 {
            decreasing += 1;
        } else {
            failures.push(i);
        }
        let single = [
            ConductanceLaw::power(1.0, 2.5).unwrap(),
            ConductanceLaw::power(3.0, 2.5).unwrap(),
        ];
        let rep = superpose(g, &single, 1.0, &cfg())
            .map_err(|e| e.to_string())?
            .report;
        single_term_worst = single_term_worst.max(rep.eta.unwrap_or(0.0));
    }
    let detail = format!(
        "{decreasing} strictly decreasing, {ideal} ideal, failing {failures:?}, single-term eta {single_term_worst:.1e}"
    );
    if failures.is_empty() && single_term_worst <= IDEAL_ETA {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn coefficient_scaling() -> Outcome {
    let mut graphs = vec![
        fixtures::divider(),
        fixtures::bridge(),
        fixtures::coupled_bridge(),
    ];
    graphs.extend(random_circuits().into_iter().take(20));
    let laws = [
        unit(2.0),
        ConductanceLaw::new([(1.0, 1.0), (1.0, 3.0)]).unwrap(),
    ];
    let (mut drift, mut current): (f64, f64) = (0.0, 0.0);
    for g in &graphs {
        for law in &laws {
            let base = solve(g, law, 1.0, &cfg()).map_err(|e| e.to_string())?;
            for c in [1e-3, 1e3] {
                let op =
                    solve(g, &law.scaled(c).unwrap(), 1.0, &cfg()).map_err(|e| e.to_string())?;
                for (x, y) in op.node_potentials.iter().zip(&base.node_potentials) {
                    drift = drift.max((x - y).abs());
                }
                let scale = c * base.input_current;
                current = current.max((op.input_current - scale).abs() / scale);
                for (x, y) in op.branch_currents.iter().zip(&base.branch_currents) {
                    current = current.max((x - c * y).abs() / scale);
                }
            }
        }
    }
    let detail = format!("potential drift {drift:.1e}, current error {current:.1e}");
    if drift <= POTENTIAL_DRIFT && current <= CURRENT_SCALE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn multi_exponent_procedures() -> Outcome {
    let circuits = random_circuits();
    let mut unbracketed = Vec::new();
    let mut unordered = Vec::new();
    for (i, g) in circuits.iter().enumerate() {
        let p3 = bracketing_check_p3(g, [1.0, 2.0, 3.0], 1.0, &cfg()).map_err(|e| e.to_string())?;
        if !p3.all_bracketed {
            unbracketed.push(i);
        }
        let p4 =
            bracketing_check_p4(g, [1.0, 2.0, 3.0, 4.0], 1.0, &cfg()).map_err(|e| e.to_string())?;
        if !p4.node_chain_ordered.iter().all(|&b| b) {
            unordered.push(i);
        }
    }
    let grid = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
    let mut tails = Vec::new();
    let mut scan_set = vec![
        fixtures::divider(),
        fixtures::bridge(),
        fixtures::coupled_bridge(),
    ];
    scan_set.extend(circuits.into_iter().take(20));
    for (i, g) in scan_set.iter().enumerate() {
        let scan = d_continuity(g, 1.0, 3.0, &grid, 1.0, &cfg()).map_err(|e| e.to_string())?;
        if !(scan.lower_tail_monotone && scan.upper_tail_monotone) {
            tails.push(i);
        }
    }
    let detail = format!(
        "unbracketed {unbracketed:?}, unordered {unordered:?}, non-monotone tails {tails:?} ({RANDOM_CIRCUITS} circuits)"
    );
    if unbracketed.is_empty() && unordered.is_empty() && tails.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn opposite_monotone_fixture() -> Outcome {
    let g = fixtures::bridge();
    let sweep = sweep_alpha(&g, &[1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0], 1.0, &cfg())
        .map_err(|e| e.to_string())?;
    let c = sweep.node_flags[g.node_index("c").unwrap()];
    let d = sweep.node_flags[g.node_index("d").unwrap()];
    let mut failed = Vec::new();
    for (m, n) in [(1.0, 2.0), (1.0, 3.0), (2.0, 5.0)] {
        for v_in in [0.1, 1.0, 10.0] {
            let sup =
                superpose(&g, &[unit(m), unit(n)], v_in, &cfg()).map_err(|e| e.to_string())?;
            let bounds = evaluate_bounds(&g, &sup).map_err(|e| e.to_string())?;
            failed.extend(
                bounds
                    .violations()
                    .map(|e| format!("{}@({m},{n},{v_in})", e.id.as_str())),
            );
            if !double_inequality_violations(&sup, BRACKET_MARGIN).is_empty() {
                failed.push(format!("bracket@({m},{n},{v_in})"));
            }
        }
    }
    let detail = format!("v_c {c:?}, v_d {d:?}, failed {failed:?}");
    if c == Monotonicity::Decreasing && d == Monotonicity::Increasing && failed.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("closed-form single branch and chain", analytic_exactness),
        (
            "divider against closed form and bisection",
            oracle_equivalence,
        ),
        (
            "wing currents move oppositely, total moves least",
            wing_pattern,
        ),
        (
            "connected voltages bracketed by separate ones",
            bracket_campaign,
        ),
        ("total change within largest wing change", wing_change_bound),
        ("error bounds dominate their quantities", error_bounds),
        ("cross-pairing power balance and identity", tellegen),
        ("input power equals dissipated power", energy),
        (
            "relative error shrinks with input voltage",
            small_signal_limit,
        ),
        ("coefficient scaling", coefficient_scaling),
        (
            "three- and four-exponent procedures, coefficient scan",
            multi_exponent_procedures,
        ),
        (
            "opposite monotonicity fixture keeps every bound",
            opposite_monotone_fixture,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2}. {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
