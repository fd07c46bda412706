//! Explicit code tables: validation, exhaustive zero-error checking, and the
//! induced joint distribution of all storage-system variables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::pmf::JointPmf;
use super::{concatenation_entropy_under, SymmetryReport, ENTROPY_TOL};
use crate::entset::VarSet;
use crate::error::{Error, Result};
use crate::model::{enumerate_universe, DssParams, HelperSet, Node, Universe, VarId};
use crate::rational::{self, Rational};
use crate::reduce::{group_actions, induced_action, NodePermutation};

/// The (3,2,2) parity code: `S = (s1, s2)` with index `2 s1 + s2`,
/// `Y1 = s1`, `Y2 = s2`, `Y3 = s1 xor s2`, and every helper forwards its
/// stored bit.
pub const PARITY_322_JSON: &str = include_str!("../../tests/fixtures/parity_322.json");

/// Largest decoder table accepted.
const MAX_TABLE_LEN: usize = 1 << 24;

/// `Y_node = map[s]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageEncoder {
    pub node: Node,
    pub size: u32,
    pub map: Vec<u32>,
}

/// `U_{helper[failed, helpers]} = map[Y_helper]`. `helpers` may be omitted
/// when every surviving node helps (`d = n - 1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEncoder {
    pub helper: Node,
    pub failed: Node,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpers: Option<Vec<Node>>,
    pub size: u32,
    pub map: Vec<u32>,
}

/// `Y_failed = map[index]`, where `index` is the mixed-radix value of the
/// incoming repair symbols in ascending helper order, first helper most
/// significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairDecoder {
    pub failed: Node,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpers: Option<Vec<Node>>,
    pub map: Vec<u32>,
}

/// `S = map[index]` over the storage symbols of `nodes` (ascending, first
/// node most significant).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionDecoder {
    pub nodes: Vec<Node>,
    pub map: Vec<u32>,
}

/// A complete exact-repair code. Capacities in `params` are in bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTable {
    pub params: DssParams,
    pub source_size: u32,
    pub storage: Vec<StorageEncoder>,
    pub repair: Vec<RepairEncoder>,
    pub repair_decoders: Vec<RepairDecoder>,
    pub reconstruction_decoders: Vec<ReconstructionDecoder>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Violation {
    Reconstruction { nodes: Vec<Node>, source: u32 },
    Repair { failed: Node, helpers: Vec<Node>, source: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Reconstruction { nodes, source } => {
                write!(f, "reconstruction from K = {nodes:?} fails for source symbol {source}")
            }
            Violation::Repair {
                failed,
                helpers,
                source,
            } => write!(
                f,
                "repair of node {failed} from D = {helpers:?} fails for source symbol {source}"
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeReport {
    /// Every decoder is correct on every source symbol.
    pub admissible: bool,
    pub violations: Vec<Violation>,
    /// `log2 |S|`.
    pub rate_bits: f64,
    /// `log2 |Y_i|` per node.
    pub storage_bits: Vec<f64>,
    /// Largest `log2 |U|` over repair variables.
    pub repair_bits: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Every alphabet fits its capacity.
    pub within_capacity: bool,
}

fn helper_list(params: &DssParams, failed: Node, given: &Option<Vec<Node>>) -> Result<HelperSet> {
    let nodes = match given {
        Some(h) => h.clone(),
        None if params.d + 1 == params.n => params.nodes().filter(|&i| i != failed).collect(),
        None => {
            return Err(Error::CodeTable(format!(
                "helper set for failed node {failed} must be given when d < n - 1"
            )))
        }
    };
    let set = HelperSet::new(nodes.clone());
    if set.len() != nodes.len() || set.len() != params.d as usize || set.contains(failed) {
        return Err(Error::CodeTable(format!(
            "helper set {nodes:?} for failed node {failed} is not d = {} distinct other nodes",
            params.d
        )));
    }
    if set.iter().any(|i| i == 0 || i > params.n) {
        return Err(Error::CodeTable(format!("helper set {nodes:?} names unknown nodes")));
    }
    Ok(set)
}

fn check_symbols(what: &str, map: &[u32], len: usize, size: u32) -> Result<()> {
    if map.len() != len {
        return Err(Error::CodeTable(format!("{what}: table has {} entries, expected {len}", map.len())));
    }
    if let Some(v) = map.iter().find(|&&v| v >= size) {
        return Err(Error::CodeTable(format!("{what}: symbol {v} outside alphabet of size {size}")));
    }
    Ok(())
}

fn table_len(mut sizes: impl Iterator<Item = u32>) -> Result<usize> {
    sizes.try_fold(1usize, |acc, s| {
        acc.checked_mul(s as usize)
            .filter(|&v| v <= MAX_TABLE_LEN)
            .ok_or_else(|| Error::CodeTable("decoder table too large".into()))
    })
}

/// Validated lookup structure for a [`CodeTable`].
struct Compiled<'a> {
    code: &'a CodeTable,
    universe: Universe,
    storage: Vec<&'a StorageEncoder>,
    repair: HashMap<VarId, &'a RepairEncoder>,
    repair_dec: Vec<(Node, HelperSet, &'a RepairDecoder)>,
    recon_dec: Vec<&'a ReconstructionDecoder>,
}

impl<'a> Compiled<'a> {
    fn new(code: &'a CodeTable) -> Result<Self> {
        let params = &code.params;
        params.validate()?;
        let universe = enumerate_universe(params)?;
        if code.source_size == 0 {
            return Err(Error::CodeTable("empty source alphabet".into()));
        }
        let s = code.source_size as usize;

        let mut storage: Vec<Option<&StorageEncoder>> = vec![None; params.n as usize];
        for enc in &code.storage {
            let slot = (enc.node as usize)
                .checked_sub(1)
                .and_then(|i| storage.get_mut(i))
                .ok_or_else(|| Error::CodeTable(format!("storage encoder for unknown node {}", enc.node)))?;
            if slot.replace(enc).is_some() {
                return Err(Error::CodeTable(format!("duplicate storage encoder for node {}", enc.node)));
            }
            check_symbols(&format!("storage encoder {}", enc.node), &enc.map, s, enc.size)?;
        }
        let storage: Vec<&StorageEncoder> = storage
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.ok_or_else(|| Error::CodeTable(format!("missing storage encoder for node {}", i + 1))))
            .collect::<Result<_>>()?;
        let y_size = |node: Node| storage[node as usize - 1].size;

        let mut repair = HashMap::new();
        for enc in &code.repair {
            let helpers = helper_list(params, enc.failed, &enc.helpers)?;
            if !helpers.contains(enc.helper) {
                return Err(Error::CodeTable(format!(
                    "node {} is not a helper of failed node {}",
                    enc.helper, enc.failed
                )));
            }
            let var = VarId::repair(enc.helper, enc.failed, helpers);
            let what = format!("repair encoder {}", var.display(params.full_helper_sets()));
            check_symbols(&what, &enc.map, y_size(enc.helper) as usize, enc.size)?;
            if repair.insert(var, enc).is_some() {
                return Err(Error::CodeTable(format!("duplicate {what}")));
            }
        }
        if let Some(p) = universe.repair_positions().find(|&p| !repair.contains_key(universe.var(p))) {
            return Err(Error::CodeTable(format!("missing repair encoder {}", universe.name(p))));
        }

        let mut repair_dec = Vec::new();
        let mut seen = BTreeMap::new();
        for dec in &code.repair_decoders {
            if dec.failed == 0 || dec.failed > params.n {
                return Err(Error::CodeTable(format!("repair decoder for unknown node {}", dec.failed)));
            }
            let helpers = helper_list(params, dec.failed, &dec.helpers)?;
            let sizes = helpers
                .iter()
                .map(|i| repair[&VarId::repair(i, dec.failed, helpers.clone())].size);
            let what = format!("repair decoder for node {} from {:?}", dec.failed, helpers.as_slice());
            check_symbols(&what, &dec.map, table_len(sizes)?, y_size(dec.failed))?;
            if seen.insert((dec.failed, helpers.clone()), ()).is_some() {
                return Err(Error::CodeTable(format!("duplicate {what}")));
            }
            repair_dec.push((dec.failed, helpers, dec));
        }
        for failed in params.nodes() {
            for helpers in universe.helper_sets(failed) {
                if !seen.contains_key(&(failed, helpers.clone())) {
                    return Err(Error::CodeTable(format!(
                        "missing repair decoder for node {failed} from {:?}",
                        helpers.as_slice()
                    )));
                }
            }
        }

        let mut recon_dec = Vec::new();
        let mut seen = BTreeMap::new();
        for dec in &code.reconstruction_decoders {
            let set = HelperSet::new(dec.nodes.clone());
            if set.as_slice() != dec.nodes.as_slice()
                || dec.nodes.len() != params.k as usize
                || set.iter().any(|i| i == 0 || i > params.n)
                || set.as_slice().windows(2).any(|w| w[0] == w[1])
            {
                return Err(Error::CodeTable(format!(
                    "reconstruction set {:?} must be k = {} distinct nodes in ascending order",
                    dec.nodes, params.k
                )));
            }
            let what = format!("reconstruction decoder {:?}", dec.nodes);
            check_symbols(&what, &dec.map, table_len(dec.nodes.iter().map(|&i| y_size(i)))?, code.source_size)?;
            if seen.insert(dec.nodes.clone(), ()).is_some() {
                return Err(Error::CodeTable(format!("duplicate {what}")));
            }
            recon_dec.push(dec);
        }
        for ks in params.nodes().combinations(params.k as usize) {
            if !seen.contains_key(&ks) {
                return Err(Error::CodeTable(format!("missing reconstruction decoder {ks:?}")));
            }
        }

        Ok(Compiled {
            code,
            universe,
            storage,
            repair,
            repair_dec,
            recon_dec,
        })
    }

    fn storage_symbols(&self, s: u32) -> Vec<u32> {
        self.storage.iter().map(|e| e.map[s as usize]).collect()
    }

    fn repair_symbol(&self, var: &VarId, y: &[u32]) -> u32 {
        let VarId::Repair { helper, .. } = var else {
            unreachable!("repair variable expected")
        };
        self.repair[var].map[y[*helper as usize - 1] as usize]
    }

    fn check(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for s in 0..self.code.source_size {
            let y = self.storage_symbols(s);
            for (failed, helpers, dec) in &self.repair_dec {
                let mut index = 0usize;
                for i in helpers.iter() {
                    let var = VarId::repair(i, *failed, helpers.clone());
                    index = index * self.repair[&var].size as usize + self.repair_symbol(&var, &y) as usize;
                }
                if dec.map[index] != y[*failed as usize - 1] {
                    violations.push(Violation::Repair {
                        failed: *failed,
                        helpers: helpers.as_slice().to_vec(),
                        source: s,
                    });
                }
            }
            for dec in &self.recon_dec {
                let index = dec.nodes.iter().fold(0usize, |acc, &i| {
                    acc * self.storage[i as usize - 1].size as usize + y[i as usize - 1] as usize
                });
                if dec.map[index] != s {
                    violations.push(Violation::Reconstruction {
                        nodes: dec.nodes.clone(),
                        source: s,
                    });
                }
            }
        }
        violations
    }

    /// Uniform source pushed through the encoders, over the universe's variables.
    fn induced_pmf(&self) -> Result<JointPmf> {
        let u = &self.universe;
        let mut alphabets = vec![self.code.source_size];
        alphabets.extend(self.storage.iter().map(|e| e.size));
        alphabets.extend(u.repair_positions().map(|p| self.repair[u.var(p)].size));
        let outcomes = (0..self.code.source_size)
            .map(|s| {
                let y = self.storage_symbols(s);
                let mut o = vec![s];
                o.extend(&y);
                o.extend(u.repair_positions().map(|p| self.repair_symbol(u.var(p), &y)));
                o
            })
            .collect();
        JointPmf::uniform_over(alphabets, outcomes)
    }
}

impl CodeTable {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("code tables serialize")
    }

    /// Checks every table's shape against the parameters.
    pub fn validate(&self) -> Result<()> {
        Compiled::new(self).map(|_| ())
    }

    /// Joint distribution of `(S, Y, U)` in universe order for a uniform source.
    pub fn induced_pmf(&self) -> Result<(Universe, JointPmf)> {
        let c = Compiled::new(self)?;
        let pmf = c.induced_pmf()?;
        Ok((c.universe, pmf))
    }

    /// Every node stores the whole source `S` of `2^bits` symbols and every
    /// helper forwards its whole content: `alpha = beta = bits`.
    pub fn repetition(n: u8, k: u8, d: u8, bits: u32) -> Result<Self> {
        let params = DssParams::new(n, k, d, rational::int(bits as i64), rational::int(bits as i64))?;
        let size = 1u32
            .checked_shl(bits)
            .filter(|&s| s as usize <= MAX_TABLE_LEN)
            .ok_or_else(|| Error::CodeTable("source alphabet too large".into()))?;
        let identity: Vec<u32> = (0..size).collect();
        let universe = enumerate_universe(&params)?;
        let storage = params
            .nodes()
            .map(|node| StorageEncoder {
                node,
                size,
                map: identity.clone(),
            })
            .collect();
        let mut repair = Vec::new();
        let mut repair_decoders = Vec::new();
        for failed in params.nodes() {
            for helpers in universe.helper_sets(failed) {
                for helper in helpers.iter() {
                    repair.push(RepairEncoder {
                        helper,
                        failed,
                        helpers: Some(helpers.as_slice().to_vec()),
                        size,
                        map: identity.clone(),
                    });
                }
                // the first helper's symbol is the answer
                let len = table_len(helpers.iter().map(|_| size))?;
                let stride = len / size as usize;
                repair_decoders.push(RepairDecoder {
                    failed,
                    helpers: Some(helpers.as_slice().to_vec()),
                    map: (0..len).map(|i| (i / stride) as u32).collect(),
                });
            }
        }
        let mut reconstruction_decoders = Vec::new();
        for nodes in params.nodes().combinations(k as usize) {
            let len = table_len(nodes.iter().map(|_| size))?;
            let stride = len / size as usize;
            reconstruction_decoders.push(ReconstructionDecoder {
                nodes,
                map: (0..len).map(|i| (i / stride) as u32).collect(),
            });
        }
        Ok(CodeTable {
            params,
            source_size: size,
            storage,
            repair,
            repair_decoders,
            reconstruction_decoders,
        })
    }
}

/// Exhaustively runs every source symbol through every decoding path.
pub fn check_code(code: &CodeTable) -> Result<CodeReport> {
    let c = Compiled::new(code)?;
    let violations = c.check();
    let bits = |size: u32| (size as f64).log2();
    let storage_bits: Vec<f64> = c.storage.iter().map(|e| bits(e.size)).collect();
    let repair_bits = c.repair.values().map(|e| bits(e.size)).fold(0.0, f64::max);
    let alpha = rational::to_f64(&code.params.alpha);
    let beta = rational::to_f64(&code.params.beta);
    let within_capacity =
        storage_bits.iter().all(|&b| b <= alpha + ENTROPY_TOL) && repair_bits <= beta + ENTROPY_TOL;
    Ok(CodeReport {
        admissible: violations.is_empty(),
        violations,
        rate_bits: bits(code.source_size),
        storage_bits,
        repair_bits,
        alpha,
        beta,
        within_capacity,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeSymmetryReport {
    #[serde(flatten)]
    pub symmetry: SymmetryReport,
    /// `n!`, the number of independent copies concatenated.
    pub copies: u64,
    /// `n! log2 |S|`, the rate of the concatenated code.
    pub concatenated_rate: f64,
    /// Entropy of the concatenated source; equals `concatenated_rate`.
    pub concatenated_source_entropy: f64,
    /// `n! alpha` and `n! beta`, the capacities of the concatenated code.
    pub concatenated_alpha: f64,
    pub concatenated_beta: f64,
    /// Largest entropy of a concatenated storage or repair variable.
    pub concatenated_storage_entropy: f64,
    pub concatenated_repair_entropy: f64,
    /// The concatenated entropies respect the scaled rate and capacities.
    pub normalization_ok: bool,
}

/// Compares the concatenated joint entropy of storage nodes `gamma` and repair
/// variables `delta` with that of their images under `sigma`.
pub fn check_code_symmetry(code: &CodeTable, gamma: &[Node], delta: &[VarId], sigma: &NodePermutation) -> Result<CodeSymmetryReport> {
    let c = Compiled::new(code)?;
    if let Some(v) = c.check().first() {
        return Err(Error::Inadmissible(v.to_string()));
    }
    let u = &c.universe;
    let mut set = VarSet::EMPTY;
    for &i in gamma {
        if i == 0 || i > u.params().n {
            return Err(Error::Param(format!("unknown node {i}")));
        }
        set = set.with(u.storage(i));
    }
    for var in delta {
        match (var, u.position(var)) {
            (VarId::Repair { .. }, Some(p)) => set = set.with(p),
            _ => return Err(Error::Param(format!("{var:?} is not a repair variable of this code"))),
        }
    }
    let pmf = c.induced_pmf()?;
    let actions = group_actions(u)?;
    let moved = induced_action(sigma, u)?.apply_set(set);
    let lhs = concatenation_entropy_under(&pmf, &[set], &actions)?;
    let rhs = concatenation_entropy_under(&pmf, &[moved], &actions)?;

    let copies = actions.len() as u64;
    let scale = copies as f64;
    let concat = |p: usize| concatenation_entropy_under(&pmf, &[VarSet::single(p)], &actions);
    let concatenated_source_entropy = concat(u.source())?;
    let concatenated_storage_entropy = u.storage_positions().map(concat).collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let concatenated_repair_entropy = u.repair_positions().map(concat).collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let concatenated_rate = scale * (code.source_size as f64).log2();
    let concatenated_alpha = scale * rational::to_f64(&code.params.alpha);
    let concatenated_beta = scale * rational::to_f64(&code.params.beta);
    let tol = ENTROPY_TOL * scale;
    let normalization_ok = (concatenated_source_entropy - concatenated_rate).abs() <= tol
        && concatenated_storage_entropy <= concatenated_alpha + tol
        && concatenated_repair_entropy <= concatenated_beta + tol;
    Ok(CodeSymmetryReport {
        symmetry: SymmetryReport::new(lhs, rhs),
        copies,
        concatenated_rate,
        concatenated_source_entropy,
        concatenated_alpha,
        concatenated_beta,
        concatenated_storage_entropy,
        concatenated_repair_entropy,
        normalization_ok,
    })
}

/// The rate `log2 |S|` as an exact rational when `|S|` is a power of two.
pub fn exact_rate_bits(code: &CodeTable) -> Option<Rational> {
    let s = code.source_size;
    s.is_power_of_two().then(|| rational::int(s.trailing_zeros() as i64))
}
