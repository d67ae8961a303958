//! Full conjunctive queries, their hypergraphs, stored data and the
//! brute-force join oracle.
//!
//! Query text: one atom per line, `Name(Attr1,Attr2,...)`, `#` starts a
//! comment line. Data: one TSV file per relation named `<Name>.tsv`, header
//! row of column names, integer cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::{Attr, Relation, RelationError, Row, Value};

/// Position of an atom within its query.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomId(pub usize);

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("query has no atoms")]
    Empty,
    #[error("atom {0} has no attributes")]
    NullaryAtom(String),
    #[error("atom {atom} repeats attribute {attr}")]
    RepeatedAttribute { atom: String, attr: String },
    #[error("query hypergraph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("relation {0} has no data")]
    MissingRelation(String),
    #[error("relation {relation} has arity {stored}, atom {atom} uses {used} attributes")]
    ArityMismatch {
        relation: String,
        atom: AtomId,
        stored: usize,
        used: usize,
    },
    #[error("{path}: {message}")]
    Data { path: String, message: String },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("oracle budget of {budget} rows exceeded")]
    OracleBudget { budget: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: AtomId,
    pub relation: String,
    pub attrs: Vec<Attr>,
}

impl Atom {
    pub fn attr_set(&self) -> BTreeSet<Attr> {
        self.attrs.iter().copied().collect()
    }
}

/// A connected full conjunctive query. Attributes are interned in order of
/// first appearance; atom ids follow the atom order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    attr_names: Vec<String>,
    atoms: Vec<Atom>,
}

impl Query {
    /// Builds a query from `(relation name, attribute names)` pairs.
    pub fn new<S: AsRef<str>>(atoms: &[(S, Vec<S>)]) -> Result<Self, QueryError> {
        if atoms.is_empty() {
            return Err(QueryError::Empty);
        }
        let mut attr_names: Vec<String> = Vec::new();
        let mut lookup: BTreeMap<String, Attr> = BTreeMap::new();
        let mut built = Vec::with_capacity(atoms.len());
        for (i, (rel, names)) in atoms.iter().enumerate() {
            let rel = rel.as_ref().to_string();
            if names.is_empty() {
                return Err(QueryError::NullaryAtom(rel));
            }
            let mut attrs = Vec::with_capacity(names.len());
            for name in names {
                let name = name.as_ref();
                let attr = *lookup.entry(name.to_string()).or_insert_with(|| {
                    attr_names.push(name.to_string());
                    Attr((attr_names.len() - 1) as u32)
                });
                if attrs.contains(&attr) {
                    return Err(QueryError::RepeatedAttribute {
                        atom: rel,
                        attr: name.to_string(),
                    });
                }
                attrs.push(attr);
            }
            built.push(Atom {
                id: AtomId(i),
                relation: rel,
                attrs,
            });
        }
        let q = Query {
            attr_names,
            atoms: built,
        };
        let components = q.component_count();
        if components != 1 {
            return Err(QueryError::Disconnected { components });
        }
        Ok(q)
    }

    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let mut atoms: Vec<(String, Vec<String>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| QueryError::Parse {
                line: lineno + 1,
                message: message.to_string(),
            };
            let open = line.find('(').ok_or_else(|| err("expected `(`"))?;
            let close = line.rfind(')').ok_or_else(|| err("expected `)`"))?;
            if close != line.len() - 1 || close < open {
                return Err(err("trailing text after `)`"));
            }
            let name = line[..open].trim();
            if !is_identifier(name) {
                return Err(err("invalid relation name"));
            }
            let attrs: Vec<String> = line[open + 1..close]
                .split(',')
                .map(|a| a.trim().to_string())
                .collect();
            if attrs.iter().any(|a| !is_identifier(a)) {
                return Err(err("invalid attribute name"));
            }
            atoms.push((name.to_string(), attrs));
        }
        Query::new(&atoms)
    }

    /// Renders the query in the text format accepted by [`Query::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            let names: Vec<&str> = atom.attrs.iter().map(|&a| self.attr_name(a)).collect();
            out.push_str(&format!("{}({})\n", atom.relation, names.join(",")));
        }
        out
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, id: AtomId) -> Option<&Atom> {
        self.atoms.get(id.0)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn attr_count(&self) -> usize {
        self.attr_names.len()
    }

    pub fn attrs(&self) -> impl Iterator<Item = Attr> + '_ {
        (0..self.attr_names.len() as u32).map(Attr)
    }

    pub fn attr_name(&self, attr: Attr) -> &str {
        &self.attr_names[attr.0 as usize]
    }

    pub fn attr_by_name(&self, name: &str) -> Option<Attr> {
        self.attr_names
            .iter()
            .position(|n| n == name)
            .map(|i| Attr(i as u32))
    }

    /// Distinct relation names, in first-appearance order.
    pub fn relation_names(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.atoms
            .iter()
            .map(|a| a.relation.as_str())
            .filter(|r| seen.insert(*r))
            .collect()
    }

    fn component_count(&self) -> usize {
        let n = self.atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut owner: BTreeMap<Attr, usize> = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            for &a in &atom.attrs {
                if let Some(&j) = owner.get(&a) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                } else {
                    owner.insert(a, i);
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: BTreeSet<Attr>,
    pub edges: Vec<(AtomId, BTreeSet<Attr>)>,
}

pub fn hypergraph_of(q: &Query) -> Hypergraph {
    let edges: Vec<(AtomId, BTreeSet<Attr>)> =
        q.atoms().iter().map(|a| (a.id, a.attr_set())).collect();
    let vertices = edges.iter().flat_map(|(_, e)| e.iter().copied()).collect();
    Hypergraph { vertices, edges }
}

/// A stored base relation: column names and integer rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: BTreeSet<Row>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: impl IntoIterator<Item = Row>) -> Result<Self, QueryError> {
        let mut set = BTreeSet::new();
        for row in rows {
            if row.len() != columns.len() {
                return Err(RelationError::Arity {
                    got: row.len(),
                    expected: columns.len(),
                    row,
                }
                .into());
            }
            set.insert(row);
        }
        Ok(Table { columns, rows: set })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str, origin: &str) -> Result<Self, QueryError> {
        let err = |message: String| QueryError::Data {
            path: origin.to_string(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| err("missing header row".into()))?;
        let columns: Vec<String> = header.split('\t').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Result<Row, _> = line.split('\t').map(|c| c.trim().parse::<Value>()).collect();
            let row = row.map_err(|e| err(format!("row {}: {e}", i + 2)))?;
            if row.len() != columns.len() {
                return Err(err(format!(
                    "row {} has {} cells, header has {}",
                    i + 2,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Table::new(columns, rows)
    }
}

/// Base relations by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    tables: BTreeMap<String, Table>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, table: Table) {
        self.tables.insert(name.into(), table);
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = (&str, &Table)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Loads `<dir>/<name>.tsv` for every relation the query references.
    pub fn load_dir(dir: &Path, q: &Query) -> Result<Self, QueryError> {
        let mut db = Database::new();
        for name in q.relation_names() {
            let path = dir.join(format!("{name}.tsv"));
            let text = fs::read_to_string(&path).map_err(|e| QueryError::Data {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            db.insert(name, Table::parse_tsv(&text, &path.display().to_string())?);
        }
        Ok(db)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), QueryError> {
        fs::create_dir_all(dir)?;
        for (name, table) in &self.tables {
            fs::write(dir.join(format!("{name}.tsv")), table.to_tsv())?;
        }
        Ok(())
    }
}

/// A query together with the data it ranges over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub query: Query,
    pub db: Database,
}

impl Instance {
    /// Checks that every referenced relation exists with a matching arity.
    pub fn new(query: Query, db: Database) -> Result<Self, QueryError> {
        for atom in query.atoms() {
            let table = db
                .get(&atom.relation)
                .ok_or_else(|| QueryError::MissingRelation(atom.relation.clone()))?;
            if table.columns.len() != atom.attrs.len() {
                return Err(QueryError::ArityMismatch {
                    relation: atom.relation.clone(),
                    atom: atom.id,
                    stored: table.columns.len(),
                    used: atom.attrs.len(),
                });
            }
        }
        Ok(Instance { query, db })
    }

    /// The atom's relation, with columns renamed to the atom's attributes.
    pub fn atom_relation(&self, id: AtomId) -> Relation {
        let atom = self.query.atom(id).expect("atom id out of range");
        let table = self.db.get(&atom.relation).expect("checked by Instance::new");
        Relation::from_parts(
            format!("{}#{}", atom.relation, id.0),
            atom.attrs.clone(),
            table.rows.clone(),
        )
    }

    /// IN: total size of the distinct base relations the query reads.
    pub fn input_size(&self) -> usize {
        self.query
            .relation_names()
            .iter()
            .map(|n| self.db.get(n).map_or(0, |t| t.rows.len()))
            .sum()
    }

    /// Output schema shared by every engine: all attributes in id order.
    pub fn output_schema(&self) -> Vec<Attr> {
        self.query.attrs().collect()
    }

    /// Renders a relation over this query's attributes as TSV.
    pub fn relation_tsv(&self, r: &Relation) -> String {
        let names: Vec<String> = r
            .schema()
            .iter()
            .map(|&a| self.query.attr_name(a).to_string())
            .collect();
        Table {
            columns: names,
            rows: r.rows().clone(),
        }
        .to_tsv()
    }
}

/// Full join by backtracking over atoms: each atom extends a partial
/// assignment with every consistent row. Output columns follow attribute id
/// order.
pub fn oracle_join(inst: &Instance) -> Relation {
    oracle_join_bounded(inst, usize::MAX).expect("unbounded oracle cannot exceed its budget")
}

/// As [`oracle_join`], failing once more than `budget` output rows appear.
pub fn oracle_join_bounded(inst: &Instance, budget: usize) -> Result<Relation, QueryError> {
    let q = &inst.query;
    let tables: Vec<(&Atom, Vec<&Row>)> = q
        .atoms()
        .iter()
        .map(|a| {
            let t = inst.db.get(&a.relation).expect("checked by Instance::new");
            (a, t.rows.iter().collect())
        })
        .collect();
    let mut assignment: Vec<Option<Value>> = vec![None; q.attr_count()];
    let mut out: BTreeSet<Row> = BTreeSet::new();

    fn extend(
        depth: usize,
        tables: &[(&Atom, Vec<&Row>)],
        assignment: &mut Vec<Option<Value>>,
        out: &mut BTreeSet<Row>,
        budget: usize,
    ) -> bool {
        if depth == tables.len() {
            out.insert(assignment.iter().map(|v| v.expect("all bound")).collect());
            return out.len() <= budget;
        }
        let (atom, rows) = &tables[depth];
        for row in rows {
            let consistent = atom
                .attrs
                .iter()
                .zip(row.iter())
                .all(|(a, v)| assignment[a.0 as usize].is_none_or(|bound| bound == *v));
            if !consistent {
                continue;
            }
            let fresh: Vec<usize> = atom
                .attrs
                .iter()
                .map(|a| a.0 as usize)
                .filter(|&i| assignment[i].is_none())
                .collect();
            for (a, v) in atom.attrs.iter().zip(row.iter()) {
                assignment[a.0 as usize] = Some(*v);
            }
            let ok = extend(depth + 1, tables, assignment, out, budget);
            for i in fresh {
                assignment[i] = None;
            }
            if !ok {
                return false;
            }
        }
        true
    }

    if !extend(0, &tables, &mut assignment, &mut out, budget) {
        return Err(QueryError::OracleBudget { budget });
    }
    Ok(Relation::from_parts(
        "oracle".to_string(),
        inst.output_schema(),
        out,
    ))
}
