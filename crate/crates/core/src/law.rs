//! Element characteristics: sums of odd-extended power terms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `coeff * sign(v) * |v|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::InvalidLaw(format!(
                "coefficient must be finite and > 0, got {coeff}"
            )));
        }
        if !(exponent.is_finite() && exponent >= 1.0) {
            return Err(Error::InvalidLaw(format!(
                "exponent must be finite and >= 1, got {exponent}"
            )));
        }
        Ok(Self { coeff, exponent })
    }

    #[inline]
    pub fn current(&self, v: f64) -> f64 {
        self.coeff * v.signum() * v.abs().powf(self.exponent)
    }

    #[inline]
    pub fn conductance(&self, v: f64) -> f64 {
        if self.exponent == 1.0 {
            self.coeff
        } else {
            self.coeff * self.exponent * v.abs().powf(self.exponent - 1.0)
        }
    }
}

/// Conductor characteristic `i = f(v) = sum_p D_p sign(v) |v|^alpha_p`.
///
/// Terms are kept sorted by strictly increasing exponent; adding a term whose
/// exponent is already present merges the coefficients. A one-term law
/// describes an alpha-circuit, a multi-term law an f-circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PowerTerm>", into = "Vec<PowerTerm>")]
pub struct ConductanceLaw {
    terms: Vec<PowerTerm>,
}

impl ConductanceLaw {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut law = Self { terms: Vec::new() };
        let mut any = false;
        for (coeff, exponent) in terms {
            law.push(PowerTerm::new(coeff, exponent)?);
            any = true;
        }
        if !any {
            return Err(Error::InvalidLaw("a law needs at least one term".into()));
        }
        Ok(law)
    }

    /// The alpha-law `D * v^alpha`.
    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        Self::new([(coeff, exponent)])
    }

    fn push(&mut self, term: PowerTerm) {
        match self
            .terms
            .binary_search_by(|t| t.exponent.total_cmp(&term.exponent))
        {
            Ok(i) => self.terms[i].coeff += term.coeff,
            Err(i) => self.terms.insert(i, term),
        }
    }

    /// Term-wise sum of two laws.
    pub fn merged(&self, other: &ConductanceLaw) -> ConductanceLaw {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(*t);
        }
        out
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn is_single_term(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn scaled(&self, c: f64) -> Result<ConductanceLaw> {
        ConductanceLaw::new(self.terms.iter().map(|t| (c * t.coeff, t.exponent)))
    }

    /// Same exponents with every term raised to `f(exponent)`; used by the
    /// exponent continuation in the solver.
    pub(crate) fn with_exponents(&self, f: impl Fn(f64) -> f64) -> ConductanceLaw {
        let mut out = ConductanceLaw { terms: Vec::new() };
        for t in &self.terms {
            out.push(PowerTerm {
                coeff: t.coeff,
                exponent: f(t.exponent),
            });
        }
        out
    }

    pub fn current(&self, v: f64) -> f64 {
        self.terms.iter().map(|t| t.current(v)).sum()
    }

    pub fn conductance(&self, v: f64) -> f64 {
        self.terms.iter().map(|t| t.conductance(v)).sum()
    }

    pub fn max_exponent(&self) -> f64 {
        self.terms.last().map_or(1.0, |t| t.exponent)
    }

    /// True when every term of `component` appears in `self` with a
    /// coefficient at least as large.
    pub fn contains(&self, component: &ConductanceLaw) -> bool {
        component.terms.iter().all(|c| {
            self.terms
                .iter()
                .any(|t| t.exponent == c.exponent && c.coeff <= t.coeff * (1.0 + 1e-12))
        })
    }
}

impl TryFrom<Vec<PowerTerm>> for ConductanceLaw {
    type Error = Error;

    fn try_from(terms: Vec<PowerTerm>) -> Result<Self> {
        Self::new(terms.into_iter().map(|t| (t.coeff, t.exponent)))
    }
}

impl From<ConductanceLaw> for Vec<PowerTerm> {
    fn from(law: ConductanceLaw) -> Self {
        law.terms
    }
}

impl fmt::Display for ConductanceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", t.coeff, t.exponent)?;
        }
        Ok(())
    }
}

/// Parses `"D:alpha[,D:alpha...]"`.
impl FromStr for ConductanceLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let (d, a) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidLaw(format!("expected D:alpha, got {part:?}")))?;
            let d: f64 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidLaw(format!("bad coefficient in {part:?}")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::InvalidLaw(format!("bad exponent in {part:?}")))?;
            terms.push((d, a));
        }
        ConductanceLaw::new(terms)
    }
}

/// Parses participants separated by `;`, e.g. `"1:1;1:3"`.
pub fn parse_participants(s: &str) -> Result<Vec<ConductanceLaw>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}
