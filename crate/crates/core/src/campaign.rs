//! Runs every superposition check over seeded random topologies and
//! aggregates the outcome.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{circuit_rng, generate_random_circuit};
use crate::law::ConductanceLaw;
use crate::solver::SolverConfig;
use crate::superposition::{
    double_inequality_violations, evaluate_bounds, statement2_check, superpose,
    tellegen_cross_residual, tellegen_identity, BoundId, BoundSet, Case, TIE_FRACTION,
};
use crate::topology::Digraph;

/// Tolerance on the normalised cross-power residual.
pub const TELLEGEN_TOL: f64 = 1e-9;
/// Tolerance on `|v_in i_in - sum v_s i_s|` relative to `v_in i_in`.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub num_circuits: usize,
    /// Inclusive range of interior node counts.
    pub node_range: (usize, usize),
    /// Inclusive range of extra branches per interior node.
    pub branch_factor: (f64, f64),
    pub exponent_pairs: Vec<(f64, f64)>,
    pub v_in_values: Vec<f64>,
    /// Forbid parallel branches into `b`.
    pub enforce_w1: bool,
    pub solver: SolverConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            num_circuits: 1000,
            node_range: (1, 8),
            branch_factor: (0.0, 2.0),
            exponent_pairs: vec![(1.0, 3.0)],
            v_in_values: vec![1.0],
            enforce_w1: true,
            solver: SolverConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_circuits == 0 {
            return Err(Error::Config("num_circuits must be >= 1".into()));
        }
        if self.node_range.0 > self.node_range.1 {
            return Err(Error::Config("node_range is empty".into()));
        }
        let (lo, hi) = self.branch_factor;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(
                "branch_factor must satisfy 0 <= min <= max".into(),
            ));
        }
        if self.exponent_pairs.is_empty() || self.v_in_values.is_empty() {
            return Err(Error::Config(
                "exponent_pairs and v_in_values must be nonempty".into(),
            ));
        }
        for &(m, n) in &self.exponent_pairs {
            if m == n {
                return Err(Error::Config(format!(
                    "exponent pair ({m}, {n}) must differ"
                )));
            }
            ConductanceLaw::power(1.0, m)?;
            ConductanceLaw::power(1.0, n)?;
        }
        if self
            .v_in_values
            .iter()
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::Config("v_in values must be finite and > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything checked for one circuit, exponent pair and input voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub circuit_index: usize,
    pub nodes: usize,
    pub branches: usize,
    pub m: f64,
    pub n: f64,
    pub v_in: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub eta: Option<f64>,
    #[serde(rename = "F_alpha")]
    pub f_alpha: [f64; 2],
    #[serde(rename = "F_alpha_cnct")]
    pub f_alpha_cnct: [f64; 2],
    pub case: Case,
    pub similarly_monotonic: bool,
    pub sign_opposition: bool,
    pub delta_p_opposite: bool,
    pub bounds: BoundSet,
    pub double_inequality_violations: usize,
    pub tellegen_residual: f64,
    pub eq29_residual: f64,
    /// Worst relative energy mismatch among the three solutions.
    pub energy_residual: f64,
    /// `|F - sum F_alpha_cnct| / F`
    pub additivity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverFailure {
    pub circuit_index: usize,
    pub m: f64,
    pub n: f64,
    pub v_in: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaQuantiles {
    pub m: f64,
    pub n: f64,
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub f_greater: usize,
    pub g_greater: usize,
    pub equal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub instances: usize,
    pub solver_failures: usize,
    /// Violation counts keyed by check name.
    pub violations: BTreeMap<String, usize>,
    /// Applicable-instance counts keyed by bound name.
    pub applicable: BTreeMap<String, usize>,
    pub eta_quantiles: Vec<EtaQuantiles>,
    pub case_counts: CaseCounts,
    pub similarly_monotonic_fraction: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub records: Vec<InstanceRecord>,
    pub failures: Vec<SolverFailure>,
    pub summary: CampaignSummary,
}

/// Checks that must never fail, independent of the bound derivations.
pub const GUARANTEED_CHECKS: [&str; 4] = ["eq4", "tellegen", "eq29", "energy"];

/// Runs all checks for one instance.
pub fn check_instance(
    g: &Digraph,
    circuit_index: usize,
    (m, n): (f64, f64),
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<InstanceRecord> {
    let participants = [
        ConductanceLaw::power(1.0, m)?,
        ConductanceLaw::power(1.0, n)?,
    ];
    let sup = superpose(g, &participants, v_in, cfg)?;
    let bounds = evaluate_bounds(g, &sup)?;
    let rep = &sup.report;
    let energy_residual = sup
        .separate
        .iter()
        .chain(std::iter::once(&sup.connected))
        .map(|op| (op.input_power() - op.dissipated_power()).abs() / op.input_power().abs())
        .fold(0.0, f64::max);
    let cnct_sum: f64 = rep.f_alpha_cnct.iter().sum();
    let pb = crate::superposition::bounds_power(&sup);
    Ok(InstanceRecord {
        circuit_index,
        nodes: g.node_count(),
        branches: g.branch_count(),
        m,
        n,
        v_in,
        f: rep.f,
        g: rep.g,
        eta: rep.eta,
        f_alpha: [rep.f_alpha[0], rep.f_alpha[1]],
        f_alpha_cnct: [rep.f_alpha_cnct[0], rep.f_alpha_cnct[1]],
        case: rep.case,
        similarly_monotonic: rep.similarly_monotonic == Some(true),
        sign_opposition: statement2_check(&sup).sign_opposition,
        delta_p_opposite: pb.delta_p_opposite,
        double_inequality_violations: double_inequality_violations(&sup, TIE_FRACTION).len(),
        tellegen_residual: tellegen_cross_residual(g, &sup)?,
        eq29_residual: tellegen_identity(g, &sup)?.relative,
        energy_residual,
        additivity_residual: (rep.f - cnct_sum).abs() / rep.f,
        bounds,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(cfg: &CampaignConfig, records: &[InstanceRecord], failures: usize) -> CampaignSummary {
    let mut violations: BTreeMap<String, usize> = BTreeMap::new();
    let mut applicable: BTreeMap<String, usize> = BTreeMap::new();
    for name in GUARANTEED_CHECKS {
        violations.insert(name.into(), 0);
    }
    for id in BoundId::ALL {
        violations.insert(id.as_str().into(), 0);
        applicable.insert(id.as_str().into(), 0);
    }
    let mut cases = CaseCounts::default();
    for r in records {
        let mut bump = |k: &str, hit: bool| {
            if hit {
                *violations.get_mut(k).expect("key inserted above") += 1;
            }
        };
        bump("eq4", r.double_inequality_violations > 0);
        bump("tellegen", r.tellegen_residual > TELLEGEN_TOL);
        bump("eq29", r.eq29_residual > crate::superposition::IDENTITY_TOL);
        bump("energy", r.energy_residual > ENERGY_TOL);
        for e in &r.bounds.entries {
            bump(e.id.as_str(), !e.holds);
            if e.applicable {
                *applicable
                    .get_mut(e.id.as_str())
                    .expect("key inserted above") += 1;
            }
        }
        match r.case {
            Case::FGreater => cases.f_greater += 1,
            Case::GGreater => cases.g_greater += 1,
            Case::Equal => cases.equal += 1,
        }
    }
    let eta_quantiles = cfg
        .exponent_pairs
        .iter()
        .map(|&(m, n)| {
            let mut etas: Vec<f64> = records
                .iter()
                .filter(|r| r.m == m && r.n == n)
                .filter_map(|r| r.eta)
                .collect();
            etas.sort_by(f64::total_cmp);
            let q = |p| {
                if etas.is_empty() {
                    f64::NAN
                } else {
                    quantile(&etas, p)
                }
            };
            EtaQuantiles {
                m,
                n,
                count: etas.len(),
                min: q(0.0),
                q25: q(0.25),
                median: q(0.5),
                q75: q(0.75),
                max: q(1.0),
            }
        })
        .collect();
    let similar = records.iter().filter(|r| r.similarly_monotonic).count();
    CampaignSummary {
        instances: records.len(),
        solver_failures: failures,
        passed: violations.values().all(|&v| v == 0),
        violations,
        applicable,
        eta_quantiles,
        case_counts: cases,
        similarly_monotonic_fraction: if records.is_empty() {
            0.0
        } else {
            similar as f64 / records.len() as f64
        },
    }
}

/// Circuit `index` of a campaign.
pub fn campaign_circuit(cfg: &CampaignConfig, index: usize) -> Result<Digraph> {
    generate_random_circuit(&mut circuit_rng(cfg.seed, index as u64), cfg)
}

/// Runs every check on every circuit, exponent pair and input voltage.
/// Solver failures are recorded and skipped; results are in circuit order
/// regardless of scheduling.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let per_circuit: Vec<(Vec<InstanceRecord>, Vec<SolverFailure>)> = (0..cfg.num_circuits)
        .into_par_iter()
        .map(|i| {
            let g = campaign_circuit(cfg, i)?;
            let mut recs = Vec::new();
            let mut fails = Vec::new();
            for &(m, n) in &cfg.exponent_pairs {
                for &v_in in &cfg.v_in_values {
                    match check_instance(&g, i, (m, n), v_in, &cfg.solver) {
                        Ok(r) => recs.push(r),
                        Err(e) => fails.push(SolverFailure {
                            circuit_index: i,
                            m,
                            n,
                            v_in,
                            message: e.to_string(),
                        }),
                    }
                }
            }
            Ok((recs, fails))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_circuit {
        records.extend(r);
        failures.extend(f);
    }
    let summary = summarize(cfg, &records, failures.len());
    Ok(CampaignResult {
        config: cfg.clone(),
        records,
        failures,
        summary,
    })
}

pub const CSV_COLUMNS: [&str; 22] = [
    "seed",
    "circuit_index",
    "nodes",
    "branches",
    "m",
    "n",
    "v_in",
    "F",
    "G",
    "eta",
    "case",
    "similarly_monotonic",
    "stmt2_holds",
    "b10",
    "b11",
    "b12",
    "b15",
    "b25",
    "b26",
    "b21",
    "tellegen_residual",
    "eq29_residual",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| x.to_string())
}

impl CampaignResult {
    /// One row per instance, columns as in [`CSV_COLUMNS`]. Bounds that do
    /// not apply are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.records {
            let entry = |id| r.bounds.get(id).expect("every bound is evaluated");
            let applicable = |id| {
                let e = entry(id);
                e.applicable.then_some(e.rhs)
            };
            let stmt2 = entry(BoundId::Stmt2);
            w.write_record([
                self.config.seed.to_string(),
                r.circuit_index.to_string(),
                r.nodes.to_string(),
                r.branches.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.v_in.to_string(),
                r.f.to_string(),
                r.g.to_string(),
                opt(r.eta),
                r.case.as_str().to_owned(),
                r.similarly_monotonic.to_string(),
                if stmt2.applicable {
                    stmt2.holds.to_string()
                } else {
                    "NA".to_owned()
                },
                opt(applicable(BoundId::B10)),
                opt(applicable(BoundId::B11)),
                opt(applicable(BoundId::B12)),
                opt(applicable(BoundId::B15)),
                entry(BoundId::B25).rhs.to_string(),
                entry(BoundId::B26).rhs.to_string(),
                opt(applicable(BoundId::B21)),
                r.tellegen_residual.to_string(),
                r.eq29_residual.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
