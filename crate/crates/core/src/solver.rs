//! DC operating point of a realization (digraph + element law) driven by a
//! fixed input voltage.
//!
//! Unknowns are the interior node potentials. The system is solved by damped
//! Newton starting from the linear-network solution; if that stalls, the
//! exponents are continued from 1 to their targets and Newton is re-run at
//! each stage.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::ConductanceLaw;
use crate::topology::{BranchClassification, Digraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Infinity-norm bound on KCL residuals relative to the input current.
    pub residual_tol: f64,
    /// Bound on the last Newton correction relative to `v_in`. Catches nodes
    /// hung on conductors so weak that their currents vanish in the residual.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Step contraction used by the line search.
    pub damping: f64,
    pub homotopy_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            step_tol: 1e-12,
            max_iter: 200,
            damping: 0.5,
            homotopy_steps: 8,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(Error::Config("residual_tol must be > 0".into()));
        }
        if self.step_tol.is_nan() || self.step_tol <= 0.0 {
            return Err(Error::Config("step_tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config("damping must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Solved state of one realization at one input voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v_in: f64,
    pub law: ConductanceLaw,
    pub terminal_a: usize,
    pub terminal_b: usize,
    pub node_potentials: Vec<f64>,
    /// `v_tail - v_head` per branch.
    pub branch_voltages: Vec<f64>,
    /// Tail-to-head current per branch.
    pub branch_currents: Vec<f64>,
    /// Current delivered into terminal `a`, summed over the branches at `a`.
    pub input_current: f64,
    /// Scaled infinity-norm of the KCL residual at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl OperatingPoint {
    /// `sum_s v_s i_s`.
    pub fn dissipated_power(&self) -> f64 {
        self.branch_voltages
            .iter()
            .zip(&self.branch_currents)
            .map(|(v, i)| v * i)
            .sum()
    }

    pub fn input_power(&self) -> f64 {
        self.v_in * self.input_current
    }

    /// Potential of node `k` relative to `b`.
    pub fn potential(&self, k: usize) -> f64 {
        self.node_potentials[k]
    }
}

struct Network<'a> {
    g: &'a Digraph,
    law: &'a ConductanceLaw,
    v_in: f64,
}

impl Network<'_> {
    fn potentials(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut v = vec![0.0; self.g.node_count()];
        v[self.g.terminal_a()] = self.v_in;
        for (i, &k) in self.g.interior().iter().enumerate() {
            v[k] = x[i];
        }
        v
    }

    /// KCL residual (current leaving each interior node) and current scale.
    fn residual(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let v = self.potentials(x);
        let a = self.g.terminal_a();
        let mut r = DVector::zeros(x.len());
        let mut scale = 0.0;
        for &(t, h) in self.g.branches() {
            let i = self.law.current(v[t] - v[h]);
            if let Some(p) = self.g.interior_position(t) {
                r[p] += i;
            }
            if let Some(p) = self.g.interior_position(h) {
                r[p] -= i;
            }
            if t == a || h == a {
                scale += i.abs();
            }
        }
        (r, scale.max(f64::MIN_POSITIVE))
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let v = self.potentials(x);
        let n = x.len();
        let mut j = DMatrix::zeros(n, n);
        for &(t, h) in self.g.branches() {
            let gs = self.law.conductance(v[t] - v[h]);
            let pt = self.g.interior_position(t);
            let ph = self.g.interior_position(h);
            if let Some(p) = pt {
                j[(p, p)] += gs;
            }
            if let Some(q) = ph {
                j[(q, q)] += gs;
            }
            if let (Some(p), Some(q)) = (pt, ph) {
                j[(p, q)] -= gs;
                j[(q, p)] -= gs;
            }
        }
        j
    }

    /// Newton correction `J^-1 r`. The Jacobian is symmetric and diagonally
    /// dominant, so it is Jacobi-scaled to unit diagonal before factoring;
    /// branches whose conductance is many decades below the rest then keep
    /// their influence on the step.
    fn step(&self, x: &DVector<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
        let mut j = self.jacobian(x);
        let n = x.len();
        let d: DVector<f64> = DVector::from_fn(n, |i, _| {
            let jii = j[(i, i)];
            if jii > 0.0 {
                1.0 / jii.sqrt()
            } else {
                1.0
            }
        });
        for i in 0..n {
            if j[(i, i)] <= 0.0 {
                j[(i, i)] = 1.0;
            }
        }
        let scaled = DMatrix::from_fn(n, n, |p, q| d[p] * j[(p, q)] * d[q]);
        let rhs = r.component_mul(&d);
        let y = match scaled.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => scaled.lu().solve(&rhs)?,
        };
        let dx = y.component_mul(&d);
        dx.iter().all(|v| v.is_finite()).then_some(dx)
    }
}

struct NewtonOutcome {
    x: DVector<f64>,
    scaled: f64,
    iterations: usize,
    converged: bool,
}

fn inf_norm(r: &DVector<f64>) -> f64 {
    r.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn newton(net: &Network<'_>, mut x: DVector<f64>, cfg: &SolverConfig) -> NewtonOutcome {
    let (mut r, mut scale) = net.residual(&x);
    let step_tol = cfg.step_tol * net.v_in;
    let mut best = NewtonOutcome {
        x: x.clone(),
        scaled: inf_norm(&r) / scale,
        iterations: 0,
        converged: false,
    };
    for it in 1..=cfg.max_iter {
        let scaled = inf_norm(&r) / scale;
        let Some(dx) = net.step(&x, &r) else {
            return best;
        };
        if scaled <= cfg.residual_tol && inf_norm(&dx) <= step_tol {
            // one polishing step, kept only if it does not hurt
            let cand = &x - &dx;
            let (rc, sc) = net.residual(&cand);
            if inf_norm(&rc) / sc <= scaled {
                return NewtonOutcome {
                    x: cand,
                    scaled: inf_norm(&rc) / sc,
                    iterations: it,
                    converged: true,
                };
            }
            return NewtonOutcome {
                x,
                scaled,
                iterations: it,
                converged: true,
            };
        }
        let merit = r.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x - &dx * lambda;
            let (rc, sc) = net.residual(&cand);
            let finite = rc.iter().all(|v| v.is_finite());
            // at the round-off floor the 2-norm no longer decreases reliably
            if finite && (rc.norm() < merit || inf_norm(&rc) / sc <= cfg.residual_tol) {
                accepted = Some((cand, rc, sc));
                break;
            }
            lambda *= cfg.damping;
        }
        let Some((nx, nr, ns)) = accepted else {
            return best;
        };
        x = nx;
        r = nr;
        scale = ns;
        let scaled = inf_norm(&r) / scale;
        if scaled < best.scaled {
            best = NewtonOutcome {
                x: x.clone(),
                scaled,
                iterations: it,
                converged: false,
            };
        }
    }
    best
}

/// Interior potentials of the network with every element a unit linear
/// conductor.
fn linear_guess(g: &Digraph, v_in: f64) -> DVector<f64> {
    let lin = ConductanceLaw::power(1.0, 1.0).expect("unit law is valid");
    let net = Network { g, law: &lin, v_in };
    let x0 = DVector::zeros(g.interior().len());
    let (r, _) = net.residual(&x0);
    match net.step(&x0, &r) {
        Some(dx) => x0 - dx,
        None => DVector::from_element(g.interior().len(), 0.5 * v_in),
    }
}

fn continuation(
    g: &Digraph,
    law: &ConductanceLaw,
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<NewtonOutcome> {
    let mut x = linear_guess(g, v_in);
    let mut t = 0.0;
    let mut dt = 1.0 / cfg.homotopy_steps.max(1) as f64;
    let mut total_iters = 0;
    let mut best_residual = f64::INFINITY;
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        let stage = law.with_exponents(|e| 1.0 + next * (e - 1.0));
        let net = Network {
            g,
            law: &stage,
            v_in,
        };
        let out = newton(&net, x.clone(), cfg);
        total_iters += out.iterations;
        if out.converged {
            x = out.x;
            t = next;
        } else {
            best_residual = best_residual.min(out.scaled);
            dt *= 0.5;
            if dt < 1e-4 {
                return Err(Error::Convergence {
                    iterations: total_iters,
                    best_residual,
                });
            }
        }
    }
    let net = Network { g, law, v_in };
    let (r, s) = net.residual(&x);
    Ok(NewtonOutcome {
        scaled: inf_norm(&r) / s,
        x,
        iterations: total_iters,
        converged: true,
    })
}

/// Unique operating point of `g` with every branch obeying `law`, driven by
/// `v_in` at `a` with `b` grounded.
pub fn solve(
    g: &Digraph,
    law: &ConductanceLaw,
    v_in: f64,
    cfg: &SolverConfig,
) -> Result<OperatingPoint> {
    if !(v_in.is_finite() && v_in > 0.0) {
        return Err(Error::Domain(format!(
            "v_in must be finite and > 0, got {v_in}"
        )));
    }
    cfg.validate()?;
    let net = Network { g, law, v_in };
    let outcome = if g.interior().is_empty() {
        let x = DVector::zeros(0);
        NewtonOutcome {
            x,
            scaled: 0.0,
            iterations: 0,
            converged: true,
        }
    } else {
        let first = newton(&net, linear_guess(g, v_in), cfg);
        if first.converged {
            first
        } else {
            continuation(g, law, v_in, cfg)?
        }
    };
    Ok(assemble(&net, &outcome))
}

fn assemble(net: &Network<'_>, out: &NewtonOutcome) -> OperatingPoint {
    let g = net.g;
    let potentials = net.potentials(&out.x);
    let a = g.terminal_a();
    let mut branch_voltages = Vec::with_capacity(g.branch_count());
    let mut branch_currents = Vec::with_capacity(g.branch_count());
    let mut input_current = 0.0;
    for &(t, h) in g.branches() {
        let v = potentials[t] - potentials[h];
        let i = net.law.current(v);
        if t == a {
            input_current += i;
        } else if h == a {
            input_current -= i;
        }
        branch_voltages.push(v);
        branch_currents.push(i);
    }
    OperatingPoint {
        v_in: net.v_in,
        law: net.law.clone(),
        terminal_a: a,
        terminal_b: g.terminal_b(),
        node_potentials: potentials,
        branch_voltages,
        branch_currents,
        input_current,
        residual_norm: out.scaled,
        iterations: out.iterations,
    }
}

fn check_classification(op: &OperatingPoint, cls: &BranchClassification) -> Result<()> {
    if cls.s_double_prime.len() != cls.k_s_double_prime.len() {
        return Err(Error::ClassificationMismatch(
            "s'' and k_s'' lengths differ".into(),
        ));
    }
    let b = op.terminal_b;
    for (&s, &k) in cls.s_double_prime.iter().zip(&cls.k_s_double_prime) {
        if s >= op.branch_voltages.len() || k >= op.node_potentials.len() || k == b {
            return Err(Error::ClassificationMismatch(format!(
                "branch {s} / node {k} out of range"
            )));
        }
        let v_branch = op.branch_voltages[s].abs();
        let v_node = (op.node_potentials[k] - op.node_potentials[b]).abs();
        if (v_branch - v_node).abs() > 1e-9 * op.v_in.max(1.0) {
            return Err(Error::ClassificationMismatch(format!(
                "branch {s} voltage {v_branch} does not match node {k} potential {v_node}"
            )));
        }
    }
    Ok(())
}

/// `sum_{s''} law(v_{s''})`: input current from KCL at the grounded terminal.
pub fn input_current_via_b(
    op: &OperatingPoint,
    cls: &BranchClassification,
    law: &ConductanceLaw,
) -> Result<f64> {
    check_classification(op, cls)?;
    let b = op.node_potentials[op.terminal_b];
    Ok(cls
        .k_s_double_prime
        .iter()
        .map(|&k| law.current(op.node_potentials[k] - b))
        .sum())
}

/// Current carried into `b` by one participant of a connection, evaluated at
/// the connected-state voltages.
pub fn wing_current(
    op: &OperatingPoint,
    cls: &BranchClassification,
    component: &ConductanceLaw,
) -> Result<f64> {
    if !op.law.contains(component) {
        return Err(Error::Composition(format!(
            "{component} is not a part of {}",
            op.law
        )));
    }
    input_current_via_b(op, cls, component)
}

/// `phi(alpha) = F_alpha(1) / D`, so that `F_alpha(v) = D phi(alpha) v^alpha`.
pub fn phi(g: &Digraph, alpha: f64, cfg: &SolverConfig) -> Result<f64> {
    let law = ConductanceLaw::power(1.0, alpha)?;
    Ok(solve(g, &law, 1.0, cfg)?.input_current)
}
