//! JSON netlists: `{"nodes": [..], "a": "..", "b": "..", "branches": [["t","h"], ..]}`.
//! Branch array order defines the branch index.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Digraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub nodes: Vec<String>,
    pub a: String,
    pub b: String,
    pub branches: Vec<[String; 2]>,
}

impl From<&Digraph> for Netlist {
    fn from(g: &Digraph) -> Self {
        Netlist {
            nodes: g.labels().to_vec(),
            a: g.label(g.terminal_a()).to_owned(),
            b: g.label(g.terminal_b()).to_owned(),
            branches: g
                .branches()
                .iter()
                .map(|&(t, h)| [g.label(t).to_owned(), g.label(h).to_owned()])
                .collect(),
        }
    }
}

impl TryFrom<Netlist> for Digraph {
    type Error = Error;

    fn try_from(n: Netlist) -> Result<Self> {
        let branches: Vec<(String, String)> = n.branches.into_iter().map(|[t, h]| (t, h)).collect();
        Digraph::new(&n.nodes, &n.a, &n.b, &branches).map_err(|e| Error::Netlist(e.to_string()))
    }
}

pub fn parse_netlist(text: &str) -> Result<Digraph> {
    let n: Netlist = serde_json::from_str(text).map_err(|e| Error::Netlist(e.to_string()))?;
    n.try_into()
}

pub fn to_json(g: &Digraph) -> String {
    serde_json::to_string_pretty(&Netlist::from(g)).expect("netlists always serialize")
}

pub fn read_netlist(path: impl AsRef<Path>) -> Result<Digraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_netlist(&text).map_err(|e| Error::Netlist(format!("{}: {e}", path.display())))
}

pub fn write_netlist(path: impl AsRef<Path>, g: &Digraph) -> Result<()> {
    fs::write(path, to_json(g) + "\n")?;
    Ok(())
}
