//! The fixed 1-port digraph, branch classification at the terminals, and
//! node-to-node composition of same-topology realizations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::ConductanceLaw;

/// A 1-port topology with driven terminal `a` and grounded terminal `b`.
///
/// Branch `s` runs from `branches[s].0` (tail) to `branches[s].1` (head); its
/// voltage is `v_tail - v_head`. Every node lies on a simple `a`-`b` path,
/// which is checked at construction as biconnectivity of the graph with a
/// virtual `a`-`b` edge added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    labels: Vec<String>,
    a: usize,
    b: usize,
    branches: Vec<(usize, usize)>,
    interior: Vec<usize>,
    interior_pos: Vec<Option<usize>>,
}

impl Digraph {
    /// Builds a digraph from labels. Node indices follow `nodes` order.
    pub fn new<S: AsRef<str>>(nodes: &[S], a: &str, b: &str, branches: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = nodes.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.as_str(), i).is_some() {
                return Err(Error::InvalidTopology(format!(
                    "duplicate node label {l:?}"
                )));
            }
        }
        let lookup = |l: &str, what: &str| {
            index
                .get(l)
                .copied()
                .ok_or_else(|| Error::InvalidTopology(format!("{what}: unknown node {l:?}")))
        };
        let ai = lookup(a, "terminal a")?;
        let bi = lookup(b, "terminal b")?;
        let mut idx = Vec::with_capacity(branches.len());
        for (s, (t, h)) in branches.iter().enumerate() {
            idx.push((
                lookup(t.as_ref(), &format!("branch {s} tail"))?,
                lookup(h.as_ref(), &format!("branch {s} head"))?,
            ));
        }
        Self::from_indices(labels, ai, bi, idx)
    }

    pub fn from_indices(
        labels: Vec<String>,
        a: usize,
        b: usize,
        branches: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        if a >= n || b >= n {
            return Err(Error::InvalidTopology("terminal index out of range".into()));
        }
        if a == b {
            return Err(Error::InvalidTopology(
                "terminals a and b must differ".into(),
            ));
        }
        if branches.is_empty() {
            return Err(Error::InvalidTopology(
                "at least one branch is required".into(),
            ));
        }
        for (s, &(t, h)) in branches.iter().enumerate() {
            if t >= n || h >= n {
                return Err(Error::InvalidTopology(format!(
                    "branch {s} endpoint out of range"
                )));
            }
            if t == h {
                return Err(Error::InvalidTopology(format!(
                    "branch {s} is a self-loop at {:?}",
                    labels[t]
                )));
            }
        }
        check_on_ab_paths(n, a, b, &branches, &labels)?;

        let interior: Vec<usize> = (0..n).filter(|&k| k != a && k != b).collect();
        let mut interior_pos = vec![None; n];
        for (i, &k) in interior.iter().enumerate() {
            interior_pos[k] = Some(i);
        }
        Ok(Self {
            labels,
            a,
            b,
            branches,
            interior,
            interior_pos,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn terminal_a(&self) -> usize {
        self.a
    }

    pub fn terminal_b(&self) -> usize {
        self.b
    }

    pub fn branches(&self) -> &[(usize, usize)] {
        &self.branches
    }

    /// Nodes other than the terminals, in index order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub(crate) fn interior_position(&self, k: usize) -> Option<usize> {
        self.interior_pos[k]
    }

    /// Undirected branch multiset, used for isomorphism checks.
    fn edge_multiset(&self, map: impl Fn(usize) -> usize) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for &(t, h) in &self.branches {
            let (x, y) = (map(t), map(h));
            *m.entry((x.min(y), x.max(y))).or_insert(0) += 1;
        }
        m
    }
}

/// Rejects graphs where some node is not on a simple a-b path. Adding the
/// virtual edge a-b, that holds iff the multigraph is connected and has no
/// articulation point.
fn check_on_ab_paths(
    n: usize,
    a: usize,
    b: usize,
    branches: &[(usize, usize)],
    labels: &[String],
) -> Result<()> {
    let mut adj = vec![Vec::new(); n];
    for &(t, h) in branches.iter().chain(std::iter::once(&(a, b))) {
        adj[t].push(h);
        adj[h].push(t);
    }
    let reach = |removed: Option<usize>| -> usize {
        let start = if removed == Some(a) { b } else { a };
        let mut seen = vec![false; n];
        if let Some(r) = removed {
            seen[r] = true;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    };
    if reach(None) != n {
        return Err(Error::InvalidTopology("graph is not connected".into()));
    }
    if n >= 3 {
        for (x, label) in labels.iter().enumerate() {
            if reach(Some(x)) != n - 1 {
                return Err(Error::InvalidTopology(format!(
                    "node {:?} separates a dangling subgraph; every node must lie on an a-b path",
                    label
                )));
            }
        }
    }
    Ok(())
}

/// Branch sets at the terminals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchClassification {
    /// Branches incident to `b`.
    pub s_double_prime: Vec<usize>,
    /// Branches incident to `a`.
    pub s_prime: Vec<usize>,
    /// Far (non-`b`) end of each `s_double_prime` branch, aligned with it.
    pub k_s_double_prime: Vec<usize>,
    /// `(node, number of parallel branches joining it to b)`, by node index.
    pub w_s_double_prime: Vec<(usize, usize)>,
    pub has_ab_branch: bool,
}

impl BranchClassification {
    /// True when no node reaches `b` through more than one branch.
    pub fn w_is_one(&self) -> bool {
        self.w_s_double_prime.iter().all(|&(_, w)| w == 1)
    }
}

pub fn classify_branches(g: &Digraph) -> BranchClassification {
    let (a, b) = (g.a, g.b);
    let mut s_double_prime = Vec::new();
    let mut k_s_double_prime = Vec::new();
    let mut s_prime = Vec::new();
    let mut w: BTreeMap<usize, usize> = BTreeMap::new();
    let mut has_ab_branch = false;
    for (s, &(t, h)) in g.branches.iter().enumerate() {
        if t == b || h == b {
            let far = if t == b { h } else { t };
            s_double_prime.push(s);
            k_s_double_prime.push(far);
            *w.entry(far).or_insert(0) += 1;
            if far == a {
                has_ab_branch = true;
            }
        }
        if t == a || h == a {
            s_prime.push(s);
        }
    }
    BranchClassification {
        s_double_prime,
        s_prime,
        k_s_double_prime,
        w_s_double_prime: w.into_iter().collect(),
        has_ab_branch,
    }
}

/// Which realizations are joined and how their nodes correspond.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionPlan {
    pub participants: Vec<String>,
    /// `node_correspondence[i][k]` is the node of participant `i` joined to
    /// node `k` of participant 0. Entry 0 is the identity.
    pub node_correspondence: Vec<Vec<usize>>,
    /// Nodes (of participant 0) to short-circuit; `None` merges all of them.
    pub partial: Option<Vec<usize>>,
}

impl ConnectionPlan {
    /// Full merge of `count` realizations with identical node labelling.
    pub fn identity(count: usize, g: &Digraph) -> Self {
        let id: Vec<usize> = (0..g.node_count()).collect();
        Self {
            participants: (0..count).map(|i| format!("p{i}")).collect(),
            node_correspondence: vec![id; count],
            partial: None,
        }
    }

    pub fn is_full(&self) -> bool {
        self.partial.is_none()
    }

    /// Checks that every correspondence is a terminal-preserving bijection
    /// under which the participants' branch sets coincide. Branch
    /// orientation is a reference direction only and is not compared.
    pub fn check_isomorphic(&self, graphs: &[&Digraph]) -> Result<()> {
        if graphs.len() != self.participants.len() || self.node_correspondence.len() != graphs.len()
        {
            return Err(Error::TopologyMismatch(format!(
                "plan lists {} participants, {} graphs and {} correspondences",
                self.participants.len(),
                graphs.len(),
                self.node_correspondence.len()
            )));
        }
        let Some(reference) = graphs.first() else {
            return Err(Error::TopologyMismatch("no participants".into()));
        };
        let n = reference.node_count();
        for (i, (g, map)) in graphs.iter().zip(&self.node_correspondence).enumerate() {
            if g.node_count() != n || map.len() != n {
                return Err(Error::TopologyMismatch(format!(
                    "participant {i}: node count differs"
                )));
            }
            let mut hit = vec![false; n];
            for &k in map {
                if k >= n || std::mem::replace(&mut hit[k], true) {
                    return Err(Error::TopologyMismatch(format!(
                        "participant {i}: correspondence is not a bijection"
                    )));
                }
            }
            if map[reference.a] != g.a || map[reference.b] != g.b {
                return Err(Error::TopologyMismatch(format!(
                    "participant {i}: terminals not preserved"
                )));
            }
            let mut inverse = vec![0; n];
            for (k, &m) in map.iter().enumerate() {
                inverse[m] = k;
            }
            if g.edge_multiset(|k| inverse[k]) != reference.edge_multiset(|k| k) {
                return Err(Error::TopologyMismatch(format!(
                    "participant {i}: branch sets differ"
                )));
            }
        }
        if let Some(p) = &self.partial {
            if p.iter().any(|&k| k >= n) {
                return Err(Error::TopologyMismatch(
                    "partial merge lists an unknown node".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Node-to-node connection of same-topology realizations: the result has
/// the shared topology and the term-wise sum of the participants' laws.
pub fn f_connect(
    parts: &[(&Digraph, &ConductanceLaw)],
    plan: &ConnectionPlan,
) -> Result<ConductanceLaw> {
    let graphs: Vec<&Digraph> = parts.iter().map(|p| p.0).collect();
    plan.check_isomorphic(&graphs)?;
    if !plan.is_full() {
        return Err(Error::TopologyMismatch(
            "partial connections are representable but not solvable".into(),
        ));
    }
    sum_laws(parts.iter().map(|p| p.1))
}

/// Sum of laws on one shared digraph.
pub fn sum_laws<'a>(laws: impl IntoIterator<Item = &'a ConductanceLaw>) -> Result<ConductanceLaw> {
    let mut it = laws.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidLaw("nothing to connect".into()))?
        .clone();
    Ok(it.fold(first, |acc, l| acc.merged(l)))
}

/// Binary merge tree over participant indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeTree {
    Leaf(usize),
    Join(Box<MergeTree>, Box<MergeTree>),
}

impl MergeTree {
    pub fn join(l: MergeTree, r: MergeTree) -> MergeTree {
        MergeTree::Join(Box::new(l), Box::new(r))
    }

    pub fn pair(i: usize, j: usize) -> MergeTree {
        MergeTree::join(MergeTree::Leaf(i), MergeTree::Leaf(j))
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            MergeTree::Leaf(i) => out.push(*i),
            MergeTree::Join(l, r) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseConnection {
    /// Laws at the internal tree nodes in post-order (the root excluded).
    pub intermediates: Vec<ConductanceLaw>,
    pub total: ConductanceLaw,
}

/// Connects realizations in the order given by `schedule`.
pub fn stepwise_connect(
    laws: &[ConductanceLaw],
    schedule: &MergeTree,
) -> Result<StepwiseConnection> {
    if laws.len() < 3 {
        return Err(Error::IncompleteSchedule(format!(
            "stepwise connection needs at least 3 participants, got {}",
            laws.len()
        )));
    }
    let mut leaves = Vec::new();
    schedule.leaves(&mut leaves);
    let mut seen = vec![0usize; laws.len()];
    for &i in &leaves {
        if i >= laws.len() {
            return Err(Error::IncompleteSchedule(format!(
                "schedule names unknown participant {i}"
            )));
        }
        seen[i] += 1;
    }
    if let Some(i) = seen.iter().position(|&c| c != 1) {
        return Err(Error::IncompleteSchedule(format!(
            "participant {i} appears {} times in the schedule",
            seen[i]
        )));
    }

    fn walk(
        t: &MergeTree,
        laws: &[ConductanceLaw],
        out: &mut Vec<ConductanceLaw>,
    ) -> ConductanceLaw {
        match t {
            MergeTree::Leaf(i) => laws[*i].clone(),
            MergeTree::Join(l, r) => {
                let merged = walk(l, laws, out).merged(&walk(r, laws, out));
                out.push(merged.clone());
                merged
            }
        }
    }
    let mut intermediates = Vec::new();
    let total = walk(schedule, laws, &mut intermediates);
    intermediates.pop();
    Ok(StepwiseConnection {
        intermediates,
        total,
    })
}
