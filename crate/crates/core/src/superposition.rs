//! Comparison of a node-wise connection of alpha-circuits with the parallel
//! connection of the same circuits, and the error bounds relating the two.
//!
//! Notation: `F` is the input current of the connection, `G` the sum of the
//! separate input currents, `eta = |F - G| / F`. With two participants the
//! first is called `m` and the second `n`; `v(m)`, `v(n)` are voltages in
//! the separate circuits and plain `v` those of the connection. Every bound
//! carries the coefficients `D_m`, `D_n` so none of them assumes unit
//! coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::ConductanceLaw;
use crate::solver::{solve, wing_current, OperatingPoint, SolverConfig};
use crate::topology::{classify_branches, sum_laws, BranchClassification, Digraph};

/// Voltages closer than this fraction of `v_in` are treated as equal when
/// partitioning branches.
pub const TIE_FRACTION: f64 = 1e-10;

/// Relative floating-point slack allowed when checking that a bound
/// dominates its quantity.
pub const ROUNDOFF_SLACK: f64 = 1e-10;

/// Required relative agreement of the two sides of the cross-power identity.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Below this current scale `eta` is reported as undefined.
pub const ETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "F>G")]
    FGreater,
    #[serde(rename = "G>F")]
    GGreater,
    #[serde(rename = "F=G")]
    Equal,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::FGreater => "F>G",
            Case::GGreater => "G>F",
            Case::Equal => "F=G",
        }
    }
}

/// Branch partition by the separate solutions: `first` where
/// `v(m) < v(n)`, `second` where `v(n) < v(m)`, `ties` otherwise.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub s2_first: Vec<usize>,
    pub s2_second: Vec<usize>,
    pub s2_ties: Vec<usize>,
    pub s_first: Vec<usize>,
    pub s_second: Vec<usize>,
    pub s_ties: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionReport {
    pub v_in: f64,
    pub coefficients: Vec<f64>,
    pub exponents: Vec<f64>,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    /// `None` when `F` is below [`ETA_FLOOR`].
    pub eta: Option<f64>,
    #[serde(rename = "F_alpha")]
    pub f_alpha: Vec<f64>,
    #[serde(rename = "F_alpha_cnct")]
    pub f_alpha_cnct: Vec<f64>,
    /// Connected-state power of each participant minus its separate power.
    pub delta_p: Vec<f64>,
    #[serde(rename = "P_F")]
    pub p_f: f64,
    #[serde(rename = "P_G")]
    pub p_g: f64,
    pub case: Case,
    /// Whether the two wing currents moved in opposite directions.
    pub sign_opposition: Option<bool>,
    pub partition: Option<Partition>,
    /// True when one of the `s''` partition cells is empty.
    pub similarly_monotonic: Option<bool>,
    /// Set when some node reaches `b` through parallel branches; the bound
    /// derivations assume this does not happen.
    pub parallel_b_branches: bool,
}

impl SuperpositionReport {
    pub fn is_two_participant(&self) -> bool {
        self.exponents.len() == 2
    }
}

/// Report plus the solutions it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    pub report: SuperpositionReport,
    pub participants: Vec<ConductanceLaw>,
    pub classification: BranchClassification,
    pub connected: OperatingPoint,
    pub separate: Vec<OperatingPoint>,
}

fn single_term(law: &ConductanceLaw) -> Result<(f64, f64)> {
    match law.terms() {
        [t] => Ok((t.coeff, t.exponent)),
        _ => Err(Error::InvalidLaw(format!(
            "participant {law} must have exactly one term"
        ))),
    }
}

fn sgn(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Splits branches into `v(m) < v(n)`, `v(n) < v(m)` and ties.
fn split(
    idx: impl Iterator<Item = (usize, f64, f64)>,
    tie: f64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (mut first, mut second, mut ties) = (Vec::new(), Vec::new(), Vec::new());
    for (s, vm, vn) in idx {
        if (vm - vn).abs() < tie {
            ties.push(s);
        } else if vm < vn {
            first.push(s);
        } else {
            second.push(s);
        }
    }
    (first, second, ties)
}

/// Solves every participant separately and their connection once.
pub fn superpose(
    g: &Digraph,
    participants: &[ConductanceLaw],
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<Superposition> {
    if participants.len() < 2 {
        return Err(Error::InvalidLaw(
            "superposition needs at least two participants".into(),
        ));
    }
    let terms = participants
        .iter()
        .map(single_term)
        .collect::<Result<Vec<_>>>()?;
    let cls = classify_branches(g);
    let total = sum_laws(participants)?;
    let connected = solve(g, &total, v_in, cfg)?;
    let separate = participants
        .iter()
        .map(|l| solve(g, l, v_in, cfg))
        .collect::<Result<Vec<_>>>()?;

    let f = connected.input_current;
    let f_alpha: Vec<f64> = separate.iter().map(|op| op.input_current).collect();
    let g_sum: f64 = f_alpha.iter().sum();
    let f_alpha_cnct = participants
        .iter()
        .map(|l| wing_current(&connected, &cls, l))
        .collect::<Result<Vec<_>>>()?;
    let delta_p: Vec<f64> = participants
        .iter()
        .zip(&separate)
        .map(|(l, sep)| {
            let connected_power: f64 = connected
                .branch_voltages
                .iter()
                .map(|&v| v * l.current(v))
                .sum();
            connected_power - sep.dissipated_power()
        })
        .collect();

    let eta = (f.abs() >= ETA_FLOOR).then(|| (f - g_sum).abs() / f);
    let case = match sgn(f - g_sum, 0.0) {
        1 => Case::FGreater,
        -1 => Case::GGreater,
        _ => Case::Equal,
    };

    let tie = TIE_FRACTION * v_in;
    let (sign_opposition, partition, similarly_monotonic) = if participants.len() == 2 {
        let slack = ROUNDOFF_SLACK * f.abs();
        let dm = sgn(f_alpha_cnct[0] - f_alpha[0], slack);
        let dn = sgn(f_alpha_cnct[1] - f_alpha[1], slack);
        let opposition = dm != 0 && dm == -dn;

        let (m, n) = (&separate[0], &separate[1]);
        let b = g.terminal_b();
        let (s2_first, s2_second, s2_ties) = split(
            cls.s_double_prime
                .iter()
                .zip(&cls.k_s_double_prime)
                .map(|(&s, &k)| {
                    (
                        s,
                        m.node_potentials[k] - m.node_potentials[b],
                        n.node_potentials[k] - n.node_potentials[b],
                    )
                }),
            tie,
        );
        let (s_first, s_second, s_ties) = split(
            (0..g.branch_count())
                .map(|s| (s, m.branch_voltages[s].abs(), n.branch_voltages[s].abs())),
            tie,
        );
        let similar = s2_first.is_empty() || s2_second.is_empty();
        (
            Some(opposition),
            Some(Partition {
                s2_first,
                s2_second,
                s2_ties,
                s_first,
                s_second,
                s_ties,
            }),
            Some(similar),
        )
    } else {
        (None, None, None)
    };

    let report = SuperpositionReport {
        v_in,
        coefficients: terms.iter().map(|t| t.0).collect(),
        exponents: terms.iter().map(|t| t.1).collect(),
        f,
        g: g_sum,
        eta,
        f_alpha,
        f_alpha_cnct,
        delta_p,
        p_f: v_in * f,
        p_g: v_in * g_sum,
        case,
        sign_opposition,
        partition,
        similarly_monotonic,
        parallel_b_branches: !cls.w_is_one(),
    };
    Ok(Superposition {
        report,
        participants: participants.to_vec(),
        classification: cls,
        connected,
        separate,
    })
}

impl Superposition {
    fn pair(&self) -> Option<PairView<'_>> {
        if self.participants.len() != 2 {
            return None;
        }
        let (dm, m) = single_term(&self.participants[0]).ok()?;
        let (dn, n) = single_term(&self.participants[1]).ok()?;
        Some(PairView {
            sup: self,
            dm,
            m,
            dn,
            n,
        })
    }

    /// Voltages `(v, v(m), v(n))` of each `s''` branch relative to `b`.
    fn s2_voltages(&self) -> Vec<(usize, f64, f64, f64)> {
        let b = self.connected.terminal_b;
        let rel = |op: &OperatingPoint, k: usize| op.node_potentials[k] - op.node_potentials[b];
        self.classification
            .s_double_prime
            .iter()
            .zip(&self.classification.k_s_double_prime)
            .map(|(&s, &k)| {
                (
                    s,
                    rel(&self.connected, k),
                    rel(&self.separate[0], k),
                    rel(&self.separate[1], k),
                )
            })
            .collect()
    }
}

struct PairView<'a> {
    sup: &'a Superposition,
    dm: f64,
    m: f64,
    dn: f64,
    n: f64,
}

impl PairView<'_> {
    fn pm(&self, v: f64) -> f64 {
        self.dm * v.abs().powf(self.m)
    }

    fn pn(&self, v: f64) -> f64 {
        self.dn * v.abs().powf(self.n)
    }

    /// `D_m |v|^(m+1)`, the power one m-element dissipates at drop `v`.
    fn wm(&self, v: f64) -> f64 {
        self.dm * v.abs().powf(self.m + 1.0)
    }

    fn wn(&self, v: f64) -> f64 {
        self.dn * v.abs().powf(self.n + 1.0)
    }

    fn partition(&self) -> &Partition {
        self.sup
            .report
            .partition
            .as_ref()
            .expect("two-participant reports carry a partition")
    }
}

/// One evaluated inequality: `dominated <= rhs` is expected whenever
/// `applicable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    Stmt2,
    B10,
    B11,
    B12,
    B15,
    B25,
    B26,
    B25B26Max,
    B21,
    TellegenIdentityResidual,
}

impl BoundId {
    pub const ALL: [BoundId; 10] = [
        BoundId::Stmt2,
        BoundId::B10,
        BoundId::B11,
        BoundId::B12,
        BoundId::B15,
        BoundId::B25,
        BoundId::B26,
        BoundId::B25B26Max,
        BoundId::B21,
        BoundId::TellegenIdentityResidual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Stmt2 => "stmt2",
            BoundId::B10 => "b10",
            BoundId::B11 => "b11",
            BoundId::B12 => "b12",
            BoundId::B15 => "b15",
            BoundId::B25 => "b25",
            BoundId::B26 => "b26",
            BoundId::B25B26Max => "b25_26_max",
            BoundId::B21 => "b21",
            BoundId::TellegenIdentityResidual => "tellegen_identity_residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub id: BoundId,
    pub rhs: f64,
    pub dominated: f64,
    pub applicable: bool,
    pub holds: bool,
}

impl BoundEntry {
    /// `scale` sets the roundoff slack of the comparison.
    fn new(id: BoundId, rhs: f64, dominated: f64, applicable: bool, scale: f64) -> Self {
        let holds = !applicable || dominated <= rhs + ROUNDOFF_SLACK * scale.abs();
        Self {
            id,
            rhs,
            dominated,
            applicable,
            holds,
        }
    }

    fn not_applicable(id: BoundId, rhs: f64, dominated: f64) -> Self {
        Self {
            id,
            rhs,
            dominated,
            applicable: false,
            holds: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub entries: Vec<BoundEntry>,
}

impl BoundSet {
    pub fn get(&self, id: BoundId) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| !e.holds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statement2Check {
    pub applicable: bool,
    /// `|F - G|`
    pub lhs: f64,
    /// Largest change of a wing current under connection.
    pub rhs: f64,
    pub holds: bool,
    pub sign_opposition: bool,
}

/// The total input current changes no more than the larger wing current.
/// Applicable when all `s''` voltages move the same way between `m` and `n`.
pub fn statement2_check(sup: &Superposition) -> Statement2Check {
    let rep = &sup.report;
    let lhs = (rep.f - rep.g).abs();
    if !rep.is_two_participant() {
        return Statement2Check {
            applicable: false,
            lhs,
            rhs: f64::NAN,
            holds: true,
            sign_opposition: false,
        };
    }
    let rhs = (rep.f_alpha_cnct[0] - rep.f_alpha[0])
        .abs()
        .max((rep.f_alpha_cnct[1] - rep.f_alpha[1]).abs());
    let applicable = rep.similarly_monotonic == Some(true);
    let holds = !applicable || lhs <= rhs + ROUNDOFF_SLACK * rep.f.abs();
    Statement2Check {
        applicable,
        lhs,
        rhs,
        holds,
        sign_opposition: rep.sign_opposition.unwrap_or(false),
    }
}

/// Bound built from sums split by the `s''` partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBound {
    pub applicable: bool,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statement3Check {
    pub applicable: bool,
    pub lhs: f64,
    /// `sum_{first} D_m[v^m - v^m(m)] + sum_{second} D_n[v^n - v^n(n)]`
    pub positive_part: f64,
    /// `sum_{second} D_m[v^m - v^m(m)] + sum_{first} D_n[v^n - v^n(n)]`
    pub negative_part: f64,
    pub bound15: f64,
    pub bound15_holds: bool,
    /// Wing-change comparison, valid when the total m- and n-sums have
    /// opposite signs.
    pub wing_form: ConditionalBound,
    /// Grouping by partition cell, valid when the two cell sums have
    /// opposite signs.
    pub grouping: ConditionalBound,
}

pub fn statement3_check(sup: &Superposition) -> Statement3Check {
    let rep = &sup.report;
    let lhs = (rep.f - rep.g).abs();
    let na = ConditionalBound {
        applicable: false,
        rhs: f64::NAN,
        holds: true,
    };
    let Some(p) = sup.pair() else {
        return Statement3Check {
            applicable: false,
            lhs,
            positive_part: f64::NAN,
            negative_part: f64::NAN,
            bound15: f64::NAN,
            bound15_holds: true,
            wing_form: na,
            grouping: na,
        };
    };
    let part = p.partition();
    let (mut a1, mut a2, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0);
    for (s, v, vm, vn) in sup.s2_voltages() {
        let dm = p.pm(v) - p.pm(vm);
        let dn = p.pn(v) - p.pn(vn);
        if part.s2_first.contains(&s) {
            a1 += dm;
            b1 += dn;
        } else if part.s2_second.contains(&s) {
            a2 += dm;
            b2 += dn;
        }
    }
    let slack = ROUNDOFF_SLACK * rep.f.abs();
    let positive_part = a1 + b2;
    let negative_part = a2 + b1;
    let bound15 = positive_part.max(negative_part.abs());
    let opposite = |x: f64, y: f64| sgn(x, slack) * sgn(y, slack) < 0;

    let wing_form = if opposite(a1 + a2, b1 + b2) {
        let rhs = (a1 + a2).abs().max((b1 + b2).abs());
        ConditionalBound {
            applicable: true,
            rhs,
            holds: lhs <= rhs + slack,
        }
    } else {
        na
    };
    let grouping = if opposite(a1 + b1, a2 + b2) {
        let rhs = (a1 + b1).abs().max((a2 + b2).abs());
        ConditionalBound {
            applicable: true,
            rhs,
            holds: lhs <= rhs + slack,
        }
    } else {
        na
    };
    Statement3Check {
        applicable: true,
        lhs,
        positive_part,
        negative_part,
        bound15,
        bound15_holds: lhs <= bound15 + slack,
        wing_form,
        grouping,
    }
}

/// `b10`, `b11`, `b12`: bounds from the `s''` voltages of the separate
/// circuits only.
///
/// `b10` is `max{sum D_m[v^m(n) - v^m(m)], sum D_n[v^n(m) - v^n(n)]}` with
/// both arguments as written; under `v(m) < v(n)` the second is negative.
/// The denominator of `b11` lower-bounds `F` by taking, per branch, the
/// smaller of `v(m)` and `v(n)`. `b12 = b10 / (G - b10)`.
pub fn bounds_s2(sup: &Superposition) -> [BoundEntry; 3] {
    let rep = &sup.report;
    let err = (rep.f - rep.g).abs();
    let eta = rep.eta.unwrap_or(f64::NAN);
    let Some(p) = sup.pair() else {
        return [
            BoundEntry::not_applicable(BoundId::B10, f64::NAN, err),
            BoundEntry::not_applicable(BoundId::B11, f64::NAN, eta),
            BoundEntry::not_applicable(BoundId::B12, f64::NAN, eta),
        ];
    };
    let (mut arg_m, mut arg_n, mut f_lower) = (0.0, 0.0, 0.0);
    for (_, _, vm, vn) in sup.s2_voltages() {
        arg_m += p.pm(vn) - p.pm(vm);
        arg_n += p.pn(vm) - p.pn(vn);
        let lo = vm.min(vn);
        f_lower += p.pm(lo) + p.pn(lo);
    }
    let b10 = arg_m.max(arg_n);
    let b11 = b10 / f_lower;
    let applicable = rep.similarly_monotonic == Some(true) && rep.eta.is_some();
    let b12_ok = applicable && b10 < rep.g;
    let b12 = if b10 < rep.g {
        b10 / (rep.g - b10)
    } else {
        f64::INFINITY
    };
    [
        BoundEntry::new(BoundId::B10, b10, err, applicable, rep.f),
        BoundEntry::new(BoundId::B11, b11, eta, applicable && f_lower > 0.0, 1.0),
        if b12_ok {
            BoundEntry::new(BoundId::B12, b12, eta, true, 1.0)
        } else {
            BoundEntry::not_applicable(BoundId::B12, b12, eta)
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBounds {
    pub b25: BoundEntry,
    pub b26: BoundEntry,
    /// `max{b25, b26}` against `|P_F - P_G|`, whichever case occurred.
    pub combined: BoundEntry,
    pub b21: BoundEntry,
    pub delta_p_m: f64,
    pub delta_p_n: f64,
    /// Observation only: whether the power changes have opposite signs.
    pub delta_p_opposite: bool,
}

/// Bounds on `|P_F - P_G| = v_in |F - G|` from all branch voltages of the
/// separate circuits, split by the `s` partition.
pub fn bounds_power(sup: &Superposition) -> PowerBounds {
    let rep = &sup.report;
    let err = (rep.p_f - rep.p_g).abs();
    let eta = rep.eta.unwrap_or(f64::NAN);
    let Some(p) = sup.pair() else {
        let na = |id| BoundEntry::not_applicable(id, f64::NAN, err);
        return PowerBounds {
            b25: na(BoundId::B25),
            b26: na(BoundId::B26),
            combined: na(BoundId::B25B26Max),
            b21: BoundEntry::not_applicable(BoundId::B21, f64::NAN, eta),
            delta_p_m: f64::NAN,
            delta_p_n: f64::NAN,
            delta_p_opposite: false,
        };
    };
    let part = p.partition();
    let (m, n) = (&sup.separate[0], &sup.separate[1]);
    let (mut b25, mut b26) = (0.0, 0.0);
    for &s in &part.s_first {
        let (vm, vn) = (m.branch_voltages[s], n.branch_voltages[s]);
        b25 += p.wm(vn) - p.wm(vm);
        b26 += p.wn(vn) - p.wn(vm);
    }
    for &s in &part.s_second {
        let (vm, vn) = (m.branch_voltages[s], n.branch_voltages[s]);
        b25 += p.wn(vm) - p.wn(vn);
        b26 += p.wm(vm) - p.wm(vn);
    }
    let scale = rep.p_f;
    let b25e = BoundEntry::new(BoundId::B25, b25, err, rep.case != Case::GGreater, scale);
    let b26e = BoundEntry::new(BoundId::B26, b26, err, rep.case == Case::GGreater, scale);
    let bound = b25.max(b26);
    let combined = BoundEntry::new(BoundId::B25B26Max, bound, err, true, scale);
    let b21 = if bound < rep.p_g && rep.eta.is_some() {
        BoundEntry::new(BoundId::B21, bound / (rep.p_g - bound), eta, true, 1.0)
    } else {
        BoundEntry::not_applicable(BoundId::B21, f64::INFINITY, eta)
    };
    let (dpm, dpn) = (rep.delta_p[0], rep.delta_p[1]);
    let slack = ROUNDOFF_SLACK * scale.abs();
    PowerBounds {
        b25: b25e,
        b26: b26e,
        combined,
        b21,
        delta_p_m: dpm,
        delta_p_n: dpn,
        delta_p_opposite: sgn(dpm, slack) * sgn(dpn, slack) < 0,
    }
}

fn check_same_graph(g: &Digraph, op: &OperatingPoint) -> Result<()> {
    if op.branch_voltages.len() != g.branch_count()
        || op.node_potentials.len() != g.node_count()
        || op.terminal_a != g.terminal_a()
        || op.terminal_b != g.terminal_b()
    {
        return Err(Error::TopologyMismatch(
            "operating point was not solved on this digraph".into(),
        ));
    }
    Ok(())
}

/// `| -v_in^(1) i_in^(2) + sum_s v_s^(1) i_s^(2) |` for voltages and currents
/// taken from two realizations of the same digraph.
pub fn tellegen_check(
    g: &Digraph,
    voltages_from: &OperatingPoint,
    currents_from: &OperatingPoint,
) -> Result<f64> {
    check_same_graph(g, voltages_from)?;
    check_same_graph(g, currents_from)?;
    let cross: f64 = voltages_from
        .branch_voltages
        .iter()
        .zip(&currents_from.branch_currents)
        .map(|(v, i)| v * i)
        .sum();
    Ok((-voltages_from.v_in * currents_from.input_current + cross).abs())
}

/// Power scale used to normalise [`tellegen_check`] residuals.
pub fn tellegen_scale(voltages_from: &OperatingPoint, currents_from: &OperatingPoint) -> f64 {
    voltages_from.v_in
        * voltages_from
            .input_current
            .abs()
            .max(currents_from.input_current.abs())
}

/// Largest normalised residual over every ordered pairing of the separate
/// circuits and the connection.
pub fn tellegen_cross_residual(g: &Digraph, sup: &Superposition) -> Result<f64> {
    let ops: Vec<&OperatingPoint> = sup
        .separate
        .iter()
        .chain(std::iter::once(&sup.connected))
        .collect();
    let mut worst = 0.0_f64;
    for (i, x) in ops.iter().enumerate() {
        for (j, y) in ops.iter().enumerate() {
            if i != j {
                worst = worst.max(tellegen_check(g, x, y)? / tellegen_scale(x, y));
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TellegenIdentity {
    /// `v_in (F - G)`
    pub lhs: f64,
    /// `sum_s v_s [i_m(v_s) - i_s(m) + i_n(v_s) - i_s(n)]`
    pub rhs: f64,
    pub residual: f64,
    /// `residual / (v_in max(F, G))`
    pub relative: f64,
}

/// Cross-power identity: the power mismatch of the connection against the
/// parallel circuits, written through connected branch voltages.
pub fn tellegen_identity(g: &Digraph, sup: &Superposition) -> Result<TellegenIdentity> {
    check_same_graph(g, &sup.connected)?;
    let rep = &sup.report;
    let mut rhs = 0.0;
    for (s, &v) in sup.connected.branch_voltages.iter().enumerate() {
        let mut term = 0.0;
        for (law, sep) in sup.participants.iter().zip(&sup.separate) {
            check_same_graph(g, sep)?;
            term += law.current(v) - sep.branch_currents[s];
        }
        rhs += v * term;
    }
    let lhs = rep.v_in * (rep.f - rep.g);
    let residual = (lhs - rhs).abs();
    let scale = rep.v_in * rep.f.abs().max(rep.g.abs());
    Ok(TellegenIdentity {
        lhs,
        rhs,
        residual,
        relative: residual / scale.max(f64::MIN_POSITIVE),
    })
}

/// Every bound and identity, each paired with the quantity it must dominate.
pub fn evaluate_bounds(g: &Digraph, sup: &Superposition) -> Result<BoundSet> {
    let rep = &sup.report;
    let s2 = statement2_check(sup);
    let s3 = statement3_check(sup);
    let err = (rep.f - rep.g).abs();
    let mut entries = vec![BoundEntry {
        id: BoundId::Stmt2,
        rhs: s2.rhs,
        dominated: s2.lhs,
        applicable: s2.applicable,
        holds: s2.holds,
    }];
    entries.extend(bounds_s2(sup));
    entries.push(BoundEntry {
        id: BoundId::B15,
        rhs: s3.bound15,
        dominated: err,
        applicable: s3.applicable,
        holds: s3.bound15_holds,
    });
    let pb = bounds_power(sup);
    entries.extend([pb.b25, pb.b26, pb.combined, pb.b21]);
    let ti = tellegen_identity(g, sup)?;
    entries.push(BoundEntry {
        id: BoundId::TellegenIdentityResidual,
        rhs: IDENTITY_TOL,
        dominated: ti.relative,
        applicable: true,
        holds: ti.relative <= IDENTITY_TOL,
    });
    Ok(BoundSet { entries })
}

/// One `s''` branch whose connected voltage is not strictly between its two
/// separate voltages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketViolation {
    pub branch: usize,
    pub v_m: f64,
    pub v: f64,
    pub v_n: f64,
}

/// Checks `min{v(m), v(n)} < v < max{v(m), v(n)}` on every `s''` branch
/// whose separate voltages differ, with the interior margin `margin * v_in`.
/// Branches whose separate voltages tie must also tie with `v`: a connected
/// voltage equal to only one of them counts as a violation.
pub fn double_inequality_violations(sup: &Superposition, margin: f64) -> Vec<BracketViolation> {
    if sup.participants.len() != 2 {
        return Vec::new();
    }
    let v_in = sup.report.v_in;
    let tie = TIE_FRACTION * v_in;
    let delta = margin * v_in;
    sup.s2_voltages()
        .into_iter()
        .filter(|&(_, v, vm, vn)| {
            let (lo, hi) = (vm.min(vn), vm.max(vn));
            if hi - lo < tie {
                (v - lo).abs() > tie.max(delta) && (v - hi).abs() > tie.max(delta)
            } else {
                !(v > lo + delta && v < hi - delta)
            }
        })
        .map(|(branch, v, v_m, v_n)| BracketViolation {
            branch,
            v_m,
            v,
            v_n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Digraph {
        Digraph::new(&["a", "n1", "b"], "a", "b", &[("a", "n1"), ("n1", "b")]).unwrap()
    }

    fn laws(pairs: &[(f64, f64)]) -> Vec<ConductanceLaw> {
        pairs
            .iter()
            .map(|&(d, a)| ConductanceLaw::power(d, a).unwrap())
            .collect()
    }

    #[test]
    fn ideal_chain_has_zero_error_and_zero_bounds() {
        let g = chain();
        let sup = superpose(
            &g,
            &laws(&[(1.0, 1.0), (1.0, 3.0)]),
            1.0,
            &SolverConfig::default(),
        )
        .unwrap();
        let rep = &sup.report;
        assert!(rep.eta.unwrap() < 1e-15);
        assert_eq!(rep.similarly_monotonic, Some(true));
        let part = rep.partition.as_ref().unwrap();
        assert!(part.s2_first.is_empty() && part.s2_second.is_empty());
        let s2 = statement2_check(&sup);
        assert!(s2.applicable && s2.holds);
        assert!(s2.lhs < 1e-15 && s2.rhs < 1e-15);
        let [b10, ..] = bounds_s2(&sup);
        assert!(b10.rhs.abs() < 1e-15 && b10.holds);
        let ti = tellegen_identity(&g, &sup).unwrap();
        assert!(ti.lhs.abs() < 1e-15 && ti.rhs.abs() < 1e-15);
        assert!(evaluate_bounds(&g, &sup).unwrap().all_hold());
    }

    #[test]
    fn duplicated_participant_is_exact() {
        let g = Digraph::new(
            &["a", "n1", "n2", "b"],
            "a",
            "b",
            &[
                ("a", "n1"),
                ("a", "n2"),
                ("n1", "n2"),
                ("n1", "b"),
                ("n2", "b"),
                ("a", "b"),
            ],
        )
        .unwrap();
        let sup = superpose(
            &g,
            &laws(&[(0.5, 2.5), (0.5, 2.5)]),
            3.0,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!((sup.report.f - sup.report.g).abs() <= 1e-12 * sup.report.f);
        assert!(sup.report.eta.unwrap() <= 1e-12);
        assert!(double_inequality_violations(&sup, TIE_FRACTION).is_empty());
    }

    #[test]
    fn needs_two_single_term_participants() {
        let g = chain();
        let cfg = SolverConfig::default();
        assert!(superpose(&g, &laws(&[(1.0, 1.0)]), 1.0, &cfg).is_err());
        let two_term = ConductanceLaw::new([(1.0, 1.0), (1.0, 2.0)]).unwrap();
        assert!(superpose(&g, &[two_term, laws(&[(1.0, 3.0)])[0].clone()], 1.0, &cfg).is_err());
    }

    #[test]
    fn three_participants_mark_pair_theory_not_applicable() {
        let g = Digraph::new(
            &["a", "n1", "b"],
            "a",
            "b",
            &[("a", "n1"), ("n1", "b"), ("n1", "b")],
        )
        .unwrap();
        let sup = superpose(
            &g,
            &laws(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]),
            1.0,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(sup.report.partition.is_none());
        let set = evaluate_bounds(&g, &sup).unwrap();
        for id in [
            BoundId::Stmt2,
            BoundId::B10,
            BoundId::B15,
            BoundId::B25B26Max,
            BoundId::B21,
        ] {
            assert!(!set.get(id).unwrap().applicable, "{id:?}");
        }
        assert!(set.get(BoundId::TellegenIdentityResidual).unwrap().holds);
        let sum: f64 = sup.report.f_alpha_cnct.iter().sum();
        assert!((sum - sup.report.f).abs() < 1e-12);
    }

    #[test]
    fn tellegen_rejects_other_graph() {
        let cfg = SolverConfig::default();
        let law = ConductanceLaw::power(1.0, 2.0).unwrap();
        let g = chain();
        let h = Digraph::new(&["a", "b"], "a", "b", &[("a", "b")]).unwrap();
        let op = solve(&g, &law, 1.0, &cfg).unwrap();
        let oq = solve(&h, &law, 1.0, &cfg).unwrap();
        assert!(matches!(
            tellegen_check(&g, &op, &oq),
            Err(Error::TopologyMismatch(_))
        ));
        assert!(tellegen_check(&g, &op, &op).unwrap() < 1e-15);
    }
}
