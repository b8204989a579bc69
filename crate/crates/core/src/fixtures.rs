//! Small named circuits used throughout the tests and the CLI.

use crate::topology::Digraph;

fn build(nodes: &[&str], branches: &[(&str, &str)]) -> Digraph {
    Digraph::new(nodes, "a", "b", branches).expect("fixture is a valid digraph")
}

/// One conductor between the terminals.
pub fn single_branch() -> Digraph {
    build(&["a", "b"], &[("a", "b")])
}

/// Two conductors in series: `a -> n1 -> b`.
pub fn chain() -> Digraph {
    build(&["a", "n1", "b"], &[("a", "n1"), ("n1", "b")])
}

/// `a -> n1` followed by two parallel conductors `n1 -> b`.
pub fn divider() -> Digraph {
    build(&["a", "n1", "b"], &[("a", "n1"), ("n1", "b"), ("n1", "b")])
}

/// Two mirrored halves in parallel. On the `c` side a single conductor and a
/// three-conductor series string both join `a` to `c`, and one conductor
/// joins `c` to `b`; the `d` side is the mirror image. As the exponent grows
/// the series strings stop mattering, so `v_c` falls and `v_d` rises.
pub fn bridge() -> Digraph {
    build(
        &["a", "c", "c1", "c2", "d", "d1", "d2", "b"],
        &[
            ("a", "c"),
            ("a", "c1"),
            ("c1", "c2"),
            ("c2", "c"),
            ("c", "b"),
            ("a", "d"),
            ("d", "b"),
            ("d", "d1"),
            ("d1", "d2"),
            ("d2", "b"),
        ],
    )
}

/// [`bridge`] without the symmetry: the `c` side string has four
/// conductors, and `c` and `d` are joined by a weak three-conductor string.
pub fn coupled_bridge() -> Digraph {
    build(
        &["a", "c", "c1", "c2", "c3", "d", "d1", "d2", "e1", "e2", "b"],
        &[
            ("a", "c"),
            ("a", "c1"),
            ("c1", "c2"),
            ("c2", "c3"),
            ("c3", "c"),
            ("c", "b"),
            ("a", "d"),
            ("d", "b"),
            ("d", "d1"),
            ("d1", "d2"),
            ("d2", "b"),
            ("c", "e1"),
            ("e1", "e2"),
            ("e2", "d"),
        ],
    )
}

pub fn by_name(name: &str) -> Option<Digraph> {
    Some(match name {
        "single" => single_branch(),
        "chain" => chain(),
        "divider" => divider(),
        "bridge" => bridge(),
        "coupled_bridge" => coupled_bridge(),
        _ => return None,
    })
}

pub const NAMES: [&str; 5] = ["single", "chain", "divider", "bridge", "coupled_bridge"];
