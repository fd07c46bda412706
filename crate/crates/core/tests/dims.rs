//! Dimension counts checked against a brute-force recount that rebuilds the
//! dependency rules from variable names alone.

use std::collections::{BTreeSet, HashSet};

use itertools::Itertools;
use serde::Deserialize;

use dssbound::reduce::{self, ClosureOracle};
use dssbound::{enumerate_universe, DssParams};

#[derive(Deserialize)]
struct Frozen {
    n: u8,
    k: u8,
    d: u8,
    variables: usize,
    unreduced_columns: u64,
    maximal_irreducible: usize,
    dimension_list: usize,
    orbit_representatives: usize,
}

fn frozen() -> Vec<Frozen> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/dims.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Full-helper-set instances only: `S`, `Yi`, and `Ui[j]` sent by `i` to
/// repair `j`.
struct Naive {
    names: Vec<String>,
    rules: Vec<(u64, u64)>,
}

impl Naive {
    fn new(names: Vec<String>, n: usize, k: usize) -> Self {
        let pos = |s: String| names.iter().position(|x| *x == s).unwrap();
        let bit = |s: String| 1u64 << pos(s);
        let mut rules = Vec::new();
        for i in 1..=n {
            rules.push((bit("S".into()), bit(format!("Y{i}"))));
            for j in (1..=n).filter(|&j| j != i) {
                rules.push((bit(format!("Y{i}")), bit(format!("U{i}[{j}]"))));
            }
            let incoming = (1..=n).filter(|&h| h != i).fold(0, |acc, h| acc | bit(format!("U{h}[{i}]")));
            rules.push((incoming, bit(format!("Y{i}"))));
        }
        for group in (1..=n).combinations(k) {
            let lhs = group.iter().fold(0, |acc, i| acc | bit(format!("Y{i}")));
            rules.push((lhs, bit("S".into())));
        }
        Naive { names, rules }
    }

    fn closure(&self, mut s: u64) -> u64 {
        loop {
            let next = self.rules.iter().fold(s, |acc, &(l, r)| if l & s == l { acc | r } else { acc });
            if next == s {
                return s;
            }
            s = next;
        }
    }

    fn irreducible(&self, s: u64) -> bool {
        (0..self.names.len())
            .filter(|b| s >> b & 1 == 1)
            .all(|b| self.closure(s & !(1 << b)) >> b & 1 == 0)
    }

    /// Applies a node relabeling to a set by renaming its members.
    fn relabel(&self, s: u64, images: &[usize]) -> u64 {
        let rename = |name: &str| -> String {
            let mut out = String::new();
            for c in name.chars() {
                match c.to_digit(10) {
                    Some(v) => out.push_str(&images[v as usize - 1].to_string()),
                    None => out.push(c),
                }
            }
            out
        };
        (0..self.names.len())
            .filter(|b| s >> b & 1 == 1)
            .map(|b| 1u64 << self.names.iter().position(|x| *x == rename(&self.names[b])).unwrap())
            .fold(0, |a, b| a | b)
    }
}

#[test]
fn frozen_counts_match_pipeline_and_brute_force() {
    for f in frozen() {
        let universe = enumerate_universe(&DssParams::shape(f.n, f.k, f.d).unwrap()).unwrap();
        assert_eq!(universe.len(), f.variables);
        assert_eq!((1u64 << universe.len()) - 1, f.unreduced_columns);

        let oracle = ClosureOracle::for_universe(&universe);
        let sets = reduce::irreducible_sets(&oracle, &universe).unwrap();
        let table = reduce::full_orbit_table(&universe).unwrap();
        assert_eq!(sets.maximal.len(), f.maximal_irreducible, "({},{},{})", f.n, f.k, f.d);
        assert_eq!(sets.dimension_list().len(), f.dimension_list, "({},{},{})", f.n, f.k, f.d);
        assert_eq!(table.reps().len(), f.orbit_representatives, "({},{},{})", f.n, f.k, f.d);

        let names = (0..universe.len()).map(|p| universe.name(p).to_string()).collect();
        let naive = Naive::new(names, f.n as usize, f.k as usize);
        let full = (1u64 << universe.len()) - 1;
        let mut maximal = 0;
        let mut nonmaximal = 0;
        let mut closed = HashSet::new();
        for s in 1..=full {
            let c = naive.closure(s);
            closed.insert(c);
            if naive.irreducible(s) {
                if c == full {
                    maximal += 1;
                } else {
                    nonmaximal += 1;
                }
            }
        }
        let perms: Vec<Vec<usize>> = (1..=f.n as usize).permutations(f.n as usize).collect();
        let orbits: BTreeSet<u64> = closed
            .iter()
            .map(|&c| perms.iter().map(|p| naive.relabel(c, p)).min().unwrap())
            .collect();
        assert_eq!(maximal, f.maximal_irreducible);
        assert_eq!(1 + nonmaximal, f.dimension_list);
        assert_eq!(orbits.len(), f.orbit_representatives);
    }
}
