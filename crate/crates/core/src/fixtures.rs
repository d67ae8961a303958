//! Query families, synthetic data and random acyclic instances.
//!
//! * `S_n`: `S(A1,…,A{n-1}) ⋈ R1(A1,B1) ⋈ … ⋈ R{n-1}(A{n-1},B{n-1})`
//! * `C_n`: `R1(A0,A1) ⋈ R2(A1,A2) ⋈ … ⋈ Rn(A{n-1},An)`
//! * `TC_n`: `n/3` triangles, consecutive ones sharing one attribute.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ghd::{Ghd, NodeId, NodeSpec};
use crate::query::{Database, Instance, Query, QueryError, Table};
use crate::relation::{Row, Value};
use crate::transform::TreeShape;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{family} needs {requirement}, got n = {n}")]
    BadSize {
        family: &'static str,
        requirement: &'static str,
        n: usize,
    },
    #[error("data generation needs domain ≥ 1, got {0}")]
    BadDomain(Value),
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Star,
    Chain,
    TriangleChain,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Star => "S_n",
            Family::Chain => "C_n",
            Family::TriangleChain => "TC_n",
        }
    }
}

/// Atoms of a family member as `(relation, attribute names)` pairs.
pub fn family_atoms(family: Family, n: usize) -> Result<Vec<(String, Vec<String>)>, FixtureError> {
    let bad = |requirement| FixtureError::BadSize {
        family: family.label(),
        requirement,
        n,
    };
    let a = |i: usize| format!("A{i}");
    match family {
        Family::Star => {
            if n < 2 {
                return Err(bad("n ≥ 2"));
            }
            let mut atoms = vec![("S".to_string(), (1..n).map(a).collect())];
            atoms.extend((1..n).map(|i| (format!("R{i}"), vec![a(i), format!("B{i}")])));
            Ok(atoms)
        }
        Family::Chain => {
            if n < 1 {
                return Err(bad("n ≥ 1"));
            }
            Ok((1..=n).map(|i| (format!("R{i}"), vec![a(i - 1), a(i)])).collect())
        }
        Family::TriangleChain => {
            if n == 0 || !n.is_multiple_of(3) {
                return Err(bad("a positive multiple of 3"));
            }
            let mut atoms = Vec::with_capacity(n);
            for j in 0..n / 3 {
                let (x, y, z) = (a(2 * j), a(2 * j + 1), a(2 * j + 2));
                atoms.push((format!("R{}", 3 * j + 1), vec![x.clone(), y.clone()]));
                atoms.push((format!("R{}", 3 * j + 2), vec![x, z.clone()]));
                atoms.push((format!("R{}", 3 * j + 3), vec![y, z]));
            }
            Ok(atoms)
        }
    }
}

pub fn fixture_query(family: Family, n: usize) -> Result<Query, FixtureError> {
    Ok(Query::new(&family_atoms(family, n)?)?)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DataMode {
    /// Every cell uniform in `[1, domain]`.
    Uniform,
    /// Every column is a prefix of its own random permutation of
    /// `1..=max(domain, rows)`, so no value repeats within a column.
    Matching,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct DataSpec {
    pub seed: u64,
    pub domain: Value,
    pub rows: usize,
    pub mode: DataMode,
}

/// One table per distinct relation of `q`, columns named after the
/// attributes of the relation's first atom.
pub fn gen_data(q: &Query, spec: &DataSpec) -> Result<Database, FixtureError> {
    if spec.domain < 1 {
        return Err(FixtureError::BadDomain(spec.domain));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut db = Database::new();
    let mut done = BTreeSet::new();
    for atom in q.atoms() {
        if !done.insert(atom.relation.clone()) {
            continue;
        }
        let columns: Vec<String> = atom.attrs.iter().map(|&a| q.attr_name(a).to_string()).collect();
        let rows: Vec<Row> = match spec.mode {
            DataMode::Uniform => (0..spec.rows)
                .map(|_| {
                    (0..columns.len())
                        .map(|_| rng.gen_range(1..=spec.domain))
                        .collect()
                })
                .collect(),
            DataMode::Matching => {
                let span = spec.domain.max(spec.rows as Value);
                let perms: Vec<Vec<Value>> = (0..columns.len())
                    .map(|_| {
                        let mut p: Vec<Value> = (1..=span).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect();
                (0..spec.rows)
                    .map(|i| perms.iter().map(|p| p[i]).collect())
                    .collect()
            }
        };
        db.insert(atom.relation.clone(), Table::new(columns, rows)?);
    }
    Ok(db)
}

/// A family member with uniform data.
pub fn gen_fixture(
    family: Family,
    n: usize,
    seed: u64,
    domain: Value,
    rows: usize,
) -> Result<Instance, FixtureError> {
    gen_fixture_with(
        family,
        n,
        &DataSpec {
            seed,
            domain,
            rows,
            mode: DataMode::Uniform,
        },
    )
}

pub fn gen_fixture_with(family: Family, n: usize, spec: &DataSpec) -> Result<Instance, FixtureError> {
    let q = fixture_query(family, n)?;
    let db = gen_data(&q, spec)?;
    Ok(Instance::new(q, db)?)
}

/// Random acyclic query of `n` atoms together with its width-1 join tree.
///
/// Atom 0 is the root. Every later atom picks an earlier atom as parent and
/// takes a nonempty subset of the parent's attributes plus fresh ones, for
/// an arity between 1 and 3. About one atom in five reuses an earlier
/// relation of the same arity, giving self-joins.
pub fn random_acyclic(n: usize, seed: u64) -> Result<(Query, Ghd), FixtureError> {
    if n == 0 {
        return Err(FixtureError::BadSize {
            family: "random acyclic",
            requirement: "n ≥ 1",
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_attr = 0usize;
    let mut fresh = |k: usize| -> Vec<String> {
        let names = (next_attr..next_attr + k).map(|i| format!("X{i}")).collect();
        next_attr += k;
        names
    };
    let mut atoms: Vec<(String, Vec<String>)> = Vec::with_capacity(n);
    let mut parents: Vec<Option<usize>> = Vec::with_capacity(n);
    let mut relations_by_arity: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..n {
        let (parent, attrs) = if i == 0 {
            (None, fresh(rng.gen_range(1..=3)))
        } else {
            let p = rng.gen_range(0..i);
            let mut shared = atoms[p].1.clone();
            shared.shuffle(&mut rng);
            shared.truncate(rng.gen_range(1..=shared.len()));
            let extra = rng.gen_range(0..=3 - shared.len());
            shared.extend(fresh(extra));
            (Some(p), shared)
        };
        let arity = attrs.len();
        let reuse = relations_by_arity
            .get(&arity)
            .filter(|names| !names.is_empty() && rng.gen_bool(0.2))
            .map(|names| names[rng.gen_range(0..names.len())].clone());
        let relation = reuse.unwrap_or_else(|| {
            let name = format!("R{i}");
            relations_by_arity.entry(arity).or_default().push(name.clone());
            name
        });
        atoms.push((relation, attrs));
        parents.push(parent);
    }
    let q = Query::new(&atoms)?;
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(NodeId(i));
        }
    }
    let specs = q
        .atoms()
        .iter()
        .zip(children)
        .map(|(atom, children)| NodeSpec {
            id: NodeId(atom.id.0),
            chi: atom.attr_set(),
            lambda: [atom.id].into(),
            children,
        })
        .collect();
    let ghd = Ghd::new(NodeId(0), specs).expect("parent links form a tree");
    Ok((q, ghd))
}

/// Width-1 query whose join tree is `shape`: node `v` holds the atom
/// `R<v>(X<v>, X<parent>)`, the root holds `R0(X0)`.
pub fn shape_query(shape: &TreeShape) -> (Query, Ghd) {
    let atoms: Vec<(String, Vec<String>)> = (0..shape.len())
        .map(|v| {
            let mut attrs = vec![format!("X{v}")];
            attrs.extend(shape.parent(v).map(|p| format!("X{p}")));
            (format!("R{v}"), attrs)
        })
        .collect();
    let q = Query::new(&atoms).expect("distinct relation names");
    let specs = q
        .atoms()
        .iter()
        .map(|atom| NodeSpec {
            id: NodeId(atom.id.0),
            chi: atom.attr_set(),
            lambda: [atom.id].into(),
            children: shape.children(atom.id.0).iter().map(|&c| NodeId(c)).collect(),
        })
        .collect();
    let ghd = Ghd::new(NodeId(0), specs).expect("shape is a tree");
    (q, ghd)
}

/// [`random_acyclic`] plus uniform data.
pub fn random_acyclic_instance(
    n: usize,
    seed: u64,
    domain: Value,
    rows: usize,
) -> Result<(Instance, Ghd), FixtureError> {
    let (q, ghd) = random_acyclic(n, seed)?;
    let db = gen_data(
        &q,
        &DataSpec {
            seed: seed ^ 0x5eed,
            domain,
            rows,
            mode: DataMode::Uniform,
        },
    )?;
    Ok((Instance::new(q, db)?, ghd))
}
