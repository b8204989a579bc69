use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphanet_core::campaign::{run_campaign, CampaignConfig, TELLEGEN_TOL};
use alphanet_core::netlist::read_netlist;
use alphanet_core::superposition::{tellegen_scale, ROUNDOFF_SLACK};
use alphanet_core::sweep::{
    bracketing_check_p3, bracketing_check_p4, classify_monotonicity, d_continuity, sweep_alpha,
    DEFAULT_ALPHAS,
};
use alphanet_core::{
    double_inequality_violations, evaluate_bounds, fixtures, parse_participants, solve,
    statement2_check, statement3_check, superpose, tellegen_check, ConductanceLaw, Digraph,
    OperatingPoint, SolverConfig,
};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "alphanet",
    version,
    about = "Power-law resistive 1-port analysis"
)]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Scaled KCL residual accepted by the Newton solver.
    #[arg(long, global = true, default_value_t = SolverConfig::default().residual_tol)]
    tol: f64,
    #[arg(long, global = true, default_value_t = SolverConfig::default().max_iter)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            residual_tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Operating point of one realization.
    Solve {
        netlist: String,
        /// Law as `D:alpha[,D:alpha...]`.
        #[arg(long)]
        law: ConductanceLaw,
        #[arg(long)]
        vin: f64,
        /// Per-branch voltages and currents.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Connection of single-term realizations versus their parallel sum.
    Superpose {
        netlist: String,
        /// Participants as `D:alpha;D:alpha[;...]`.
        #[arg(long)]
        laws: String,
        #[arg(long)]
        vin: f64,
        /// Per-branch separate and connected voltages at `b`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Every error bound for a two-participant connection.
    Bounds {
        netlist: String,
        #[arg(long)]
        laws: String,
        #[arg(long)]
        vin: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Node potentials across exponents.
    Sweep {
        netlist: String,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        vin: f64,
        /// Long format: alpha,node,potential.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Connect the outer two of three exponents and check the bracket.
    P3 {
        netlist: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1.0, 2.0, 3.0])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        vin: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the outer-pair and inner-pair connections of four exponents.
    P4 {
        netlist: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1.0, 2.0, 3.0, 4.0])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        vin: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Scan `v^alpha1 + D v^alpha2` over D.
    Dscan {
        netlist: String,
        #[arg(long, default_value_t = 1.0)]
        alpha1: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha2: f64,
        #[arg(long = "d-values", value_delimiter = ',', default_values_t = [0.0, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3])]
        d_values: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        vin: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random-topology property campaign.
    Campaign {
        /// JSON config; defaults apply to omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// One row per instance.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Cross-pair voltages of one law with currents of another.
    Tellegen {
        netlist: String,
        #[arg(long)]
        law1: ConductanceLaw,
        #[arg(long)]
        law2: ConductanceLaw,
        #[arg(long, default_value_t = 1.0)]
        vin: f64,
    },
}

/// Accepts a JSON netlist path or the name of a built-in circuit.
fn load_graph(arg: &str) -> anyhow::Result<Digraph> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(read_netlist(path)?);
    }
    fixtures::by_name(arg).with_context(|| {
        format!(
            "no netlist file `{arg}` and no built-in circuit of that name (built-ins: {})",
            fixtures::NAMES.join(", ")
        )
    })
}

fn emit<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn operating_point_csv(g: &Digraph, op: &OperatingPoint, path: &Path) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["branch", "from", "to", "voltage", "current"])?;
    for (s, &(p, q)) in g.branches().iter().enumerate() {
        w.write_record([
            s.to_string(),
            g.label(p).to_string(),
            g.label(q).to_string(),
            op.branch_voltages[s].to_string(),
            op.branch_currents[s].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn fixed<const N: usize>(alphas: &[f64]) -> anyhow::Result<[f64; N]> {
    match <[f64; N]>::try_from(alphas) {
        Ok(a) => Ok(a),
        Err(_) => bail!("expected exactly {N} exponents, got {}", alphas.len()),
    }
}

#[derive(Serialize)]
struct SuperposeOutput<'a> {
    report: &'a alphanet_core::SuperpositionReport,
    statement2: alphanet_core::superposition::Statement2Check,
    statement3: Option<alphanet_core::superposition::Statement3Check>,
    double_inequality_violations: Vec<alphanet_core::superposition::BracketViolation>,
}

#[derive(Serialize)]
struct TellegenOutput {
    /// `sum_s v_s(law1) i_s(law2)`
    residual_12: f64,
    /// `sum_s v_s(law2) i_s(law1)`
    residual_21: f64,
    scale_12: f64,
    scale_21: f64,
    relative: f64,
    tolerance: f64,
    holds: bool,
}

/// Returns whether every property the command checks holds.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = cli.solver.config();
    match cli.command {
        Command::Solve {
            netlist,
            law,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let op = solve(&g, &law, vin, &cfg)?;
            if let Some(path) = csv {
                operating_point_csv(&g, &op, &path)?;
            }
            emit(&op)?;
            Ok(true)
        }
        Command::Superpose {
            netlist,
            laws,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let sup = superpose(&g, &parse_participants(&laws)?, vin, &cfg)?;
            let violations = double_inequality_violations(&sup, ROUNDOFF_SLACK);
            let s2 = statement2_check(&sup);
            let s3 = sup
                .report
                .is_two_participant()
                .then(|| statement3_check(&sup));
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                let k = sup.participants.len();
                let mut header = vec!["branch".to_string(), "connected".to_string()];
                header.extend(sup.participants.iter().map(|l| format!("separate[{l}]")));
                w.write_record(&header)?;
                for &s in &sup.classification.s_double_prime {
                    let mut row = vec![s.to_string(), sup.connected.branch_voltages[s].to_string()];
                    row.extend((0..k).map(|i| sup.separate[i].branch_voltages[s].to_string()));
                    w.write_record(&row)?;
                }
                w.flush()?;
            }
            let ok = violations.is_empty() && s2.holds && s3.is_none_or(|c| c.bound15_holds);
            emit(&SuperposeOutput {
                report: &sup.report,
                statement2: s2,
                statement3: s3,
                double_inequality_violations: violations,
            })?;
            Ok(ok)
        }
        Command::Bounds {
            netlist,
            laws,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let sup = superpose(&g, &parse_participants(&laws)?, vin, &cfg)?;
            let set = evaluate_bounds(&g, &sup)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                w.write_record(["id", "rhs", "dominated", "applicable", "holds"])?;
                for e in &set.entries {
                    w.write_record([
                        e.id.as_str().to_string(),
                        e.rhs.to_string(),
                        e.dominated.to_string(),
                        e.applicable.to_string(),
                        e.holds.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            emit(&set)?;
            Ok(set.all_hold())
        }
        Command::Sweep {
            netlist,
            alphas,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let sweep = sweep_alpha(&g, &alphas, vin, &cfg)?;
            let class = classify_monotonicity(&sweep);
            if let Some(path) = csv {
                let file = File::create(&path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                sweep.write_csv(&g, file)?;
            }
            let ok = sweep.non_monotonic_nodes().is_empty() && sweep.failures.is_empty();
            emit(&serde_json::json!({ "sweep": sweep, "monotonicity": class }))?;
            Ok(ok)
        }
        Command::P3 {
            netlist,
            alphas,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let rep = bracketing_check_p3(&g, fixed::<3>(&alphas)?, vin, &cfg)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                w.write_record([
                    "branch",
                    "v1",
                    "v2",
                    "v3",
                    "v13",
                    "bracketed",
                    "chain_ordered",
                ])?;
                for b in &rep.branches {
                    w.write_record([
                        b.branch.to_string(),
                        b.v1.to_string(),
                        b.v2.to_string(),
                        b.v3.to_string(),
                        b.v13.to_string(),
                        b.bracketed.to_string(),
                        b.chain_ordered.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            emit(&rep)?;
            Ok(rep.all_bracketed && rep.all_chain_ordered)
        }
        Command::P4 {
            netlist,
            alphas,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let rep = bracketing_check_p4(&g, fixed::<4>(&alphas)?, vin, &cfg)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                w.write_record(["node", "intermediate_distance", "chain_ordered"])?;
                for (k, (d, ordered)) in rep
                    .intermediate_distance
                    .iter()
                    .zip(&rep.node_chain_ordered)
                    .enumerate()
                {
                    w.write_record([g.label(k).to_string(), d.to_string(), ordered.to_string()])?;
                }
                w.flush()?;
            }
            emit(&rep)?;
            Ok(rep.intermediates_interior && rep.node_chain_ordered.iter().all(|&b| b))
        }
        Command::Dscan {
            netlist,
            alpha1,
            alpha2,
            d_values,
            vin,
            csv,
        } => {
            let g = load_graph(&netlist)?;
            let scan = d_continuity(&g, alpha1, alpha2, &d_values, vin, &cfg)?;
            if let Some(path) = csv {
                let mut w = csv_writer(&path)?;
                w.write_record(["d", "distance_to_first", "distance_to_second"])?;
                for p in &scan.points {
                    w.write_record([
                        p.d.to_string(),
                        p.distance_to_first.to_string(),
                        p.distance_to_second.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            emit(&scan)?;
            Ok(scan.lower_tail_monotone && scan.upper_tail_monotone)
        }
        Command::Campaign { config, csv } => {
            let mut campaign = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    CampaignConfig::from_json(&text)?
                }
                None => CampaignConfig::default(),
            };
            campaign.solver = cfg;
            let result = run_campaign(&campaign)?;
            if let Some(path) = csv {
                let file = File::create(&path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                result.write_csv(file)?;
            }
            emit(&serde_json::json!({
                "config": result.config,
                "summary": result.summary,
                "failures": result.failures,
            }))?;
            Ok(result.summary.passed)
        }
        Command::Tellegen {
            netlist,
            law1,
            law2,
            vin,
        } => {
            let g = load_graph(&netlist)?;
            let op1 = solve(&g, &law1, vin, &cfg)?;
            let op2 = solve(&g, &law2, vin, &cfg)?;
            let residual_12 = tellegen_check(&g, &op1, &op2)?;
            let residual_21 = tellegen_check(&g, &op2, &op1)?;
            let scale_12 = tellegen_scale(&op1, &op2);
            let scale_21 = tellegen_scale(&op2, &op1);
            let relative = (residual_12.abs() / scale_12).max(residual_21.abs() / scale_21);
            let out = TellegenOutput {
                residual_12,
                residual_21,
                scale_12,
                scale_21,
                relative,
                tolerance: TELLEGEN_TOL,
                holds: relative <= TELLEGEN_TOL,
            };
            emit(&out)?;
            Ok(out.holds)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
