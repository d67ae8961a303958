//! Relations over interned attributes and the serial relational operators.
//!
//! Rows are kept in a `BTreeSet`, so iteration order is deterministic and set
//! semantics come for free. All operators are pure.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Domain value of a single cell.
pub type Value = i64;

/// A tuple. Its length always equals the arity of the owning schema.
pub type Row = Vec<Value>;

/// Interned attribute symbol. Ids are assigned in first-appearance order by
/// [`crate::query::Query`], so the order is deterministic.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Attr(pub u32);

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("row {row:?} has arity {got}, schema expects {expected}")]
    Arity {
        row: Row,
        got: usize,
        expected: usize,
    },
    #[error("attribute {0} appears twice in one schema")]
    DuplicateAttribute(Attr),
    #[error("schemas differ: {left:?} vs {right:?}")]
    SchemaMismatch { left: Vec<Attr>, right: Vec<Attr> },
    #[error("row {row:?} occurs {count} times, above the declared bound {bound}")]
    DuplicateBound { row: Row, count: usize, bound: usize },
    #[error("duplicate bound must be positive")]
    ZeroDuplicateBound,
}

/// A named set of rows over an ordered schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    schema: Vec<Attr>,
    rows: BTreeSet<Row>,
}

impl Relation {
    pub fn new(
        name: impl Into<String>,
        schema: Vec<Attr>,
        rows: impl IntoIterator<Item = Row>,
    ) -> Result<Self, RelationError> {
        check_schema(&schema)?;
        let arity = schema.len();
        let mut set = BTreeSet::new();
        for row in rows {
            if row.len() != arity {
                return Err(RelationError::Arity {
                    got: row.len(),
                    expected: arity,
                    row,
                });
            }
            set.insert(row);
        }
        Ok(Relation {
            name: name.into(),
            schema,
            rows: set,
        })
    }

    pub fn empty(name: impl Into<String>, schema: Vec<Attr>) -> Self {
        Relation {
            name: name.into(),
            schema,
            rows: BTreeSet::new(),
        }
    }

    /// The relation over no attributes holding the single empty tuple. It is
    /// the identity of natural join.
    pub fn unit(name: impl Into<String>) -> Self {
        Relation {
            name: name.into(),
            schema: Vec::new(),
            rows: std::iter::once(Vec::new()).collect(),
        }
    }

    pub(crate) fn from_parts(name: String, schema: Vec<Attr>, rows: BTreeSet<Row>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == schema.len()));
        Relation { name, schema, rows }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn schema(&self) -> &[Attr] {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    pub fn rows(&self) -> &BTreeSet<Row> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, row: &[Value]) -> bool {
        self.rows.contains(row)
    }

    pub fn position(&self, attr: Attr) -> Option<usize> {
        self.schema.iter().position(|&a| a == attr)
    }

    pub fn attr_set(&self) -> BTreeSet<Attr> {
        self.schema.iter().copied().collect()
    }

    /// Natural join on shared attributes. The output schema is `self`'s
    /// schema followed by the attributes of `other` not already present.
    pub fn join(&self, other: &Relation) -> Relation {
        let shared: Vec<(usize, usize)> = self
            .schema
            .iter()
            .enumerate()
            .filter_map(|(i, a)| other.position(*a).map(|j| (i, j)))
            .collect();
        let extra: Vec<usize> = (0..other.arity())
            .filter(|j| !shared.iter().any(|&(_, sj)| sj == *j))
            .collect();
        let mut schema = self.schema.clone();
        schema.extend(extra.iter().map(|&j| other.schema[j]));

        let mut index: HashMap<Vec<Value>, Vec<&Row>> = HashMap::new();
        for row in &other.rows {
            let key = shared.iter().map(|&(_, j)| row[j]).collect();
            index.entry(key).or_default().push(row);
        }
        let mut rows = BTreeSet::new();
        for left in &self.rows {
            let key: Vec<Value> = shared.iter().map(|&(i, _)| left[i]).collect();
            if let Some(matches) = index.get(&key) {
                for right in matches {
                    let mut out = left.clone();
                    out.extend(extra.iter().map(|&j| right[j]));
                    rows.insert(out);
                }
            }
        }
        Relation::from_parts(join_name(&self.name, &other.name), schema, rows)
    }

    /// `self ⋉ other`: rows of `self` whose projection on the shared
    /// attributes occurs in `other`.
    pub fn semijoin(&self, other: &Relation) -> Relation {
        let shared: Vec<(usize, usize)> = self
            .schema
            .iter()
            .enumerate()
            .filter_map(|(i, a)| other.position(*a).map(|j| (i, j)))
            .collect();
        let keys: HashSet<Vec<Value>> = other
            .rows
            .iter()
            .map(|row| shared.iter().map(|&(_, j)| row[j]).collect())
            .collect();
        let rows = self
            .rows
            .iter()
            .filter(|row| {
                let key: Vec<Value> = shared.iter().map(|&(i, _)| row[i]).collect();
                keys.contains(&key)
            })
            .cloned()
            .collect();
        Relation::from_parts(self.name.clone(), self.schema.clone(), rows)
    }

    /// Set intersection. `other` may list the same attributes in another
    /// order; its rows are realigned to `self`'s schema.
    pub fn intersect(&self, other: &Relation) -> Result<Relation, RelationError> {
        let aligned = other.aligned_to(&self.schema)?;
        let rows = self.rows.intersection(&aligned).cloned().collect();
        Ok(Relation::from_parts(
            self.name.clone(),
            self.schema.clone(),
            rows,
        ))
    }

    /// Rows of `self` rewritten to follow `schema`, which must be a
    /// permutation of `self`'s schema.
    pub fn aligned_to(&self, schema: &[Attr]) -> Result<BTreeSet<Row>, RelationError> {
        if schema == self.schema.as_slice() {
            return Ok(self.rows.clone());
        }
        let positions: Option<Vec<usize>> = schema.iter().map(|a| self.position(*a)).collect();
        match positions {
            Some(pos) if schema.len() == self.schema.len() => Ok(self
                .rows
                .iter()
                .map(|row| pos.iter().map(|&p| row[p]).collect())
                .collect()),
            _ => Err(RelationError::SchemaMismatch {
                left: schema.to_vec(),
                right: self.schema.clone(),
            }),
        }
    }

    /// Projection onto `attrs` (each must be in the schema), with duplicate
    /// elimination.
    pub fn project(&self, attrs: &[Attr]) -> Result<Relation, RelationError> {
        check_schema(attrs)?;
        let positions: Option<Vec<usize>> = attrs.iter().map(|a| self.position(*a)).collect();
        let positions = positions.ok_or_else(|| RelationError::SchemaMismatch {
            left: attrs.to_vec(),
            right: self.schema.clone(),
        })?;
        let rows = self
            .rows
            .iter()
            .map(|row| positions.iter().map(|&p| row[p]).collect())
            .collect();
        Ok(Relation::from_parts(self.name.clone(), attrs.to_vec(), rows))
    }

    /// Same rows under renamed attributes (positional).
    pub fn renamed(&self, name: impl Into<String>, schema: Vec<Attr>) -> Result<Relation, RelationError> {
        check_schema(&schema)?;
        if schema.len() != self.arity() {
            return Err(RelationError::SchemaMismatch {
                left: schema,
                right: self.schema.clone(),
            });
        }
        Ok(Relation::from_parts(name.into(), schema, self.rows.clone()))
    }

    /// True when both relations hold the same rows over the same attribute
    /// set, regardless of column order.
    pub fn same_contents(&self, other: &Relation) -> bool {
        self.attr_set() == other.attr_set()
            && other
                .aligned_to(&self.schema)
                .map(|rows| rows == self.rows)
                .unwrap_or(false)
    }
}

fn join_name(a: &str, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else if b.is_empty() {
        a.to_string()
    } else {
        format!("{a}*{b}")
    }
}

fn check_schema(schema: &[Attr]) -> Result<(), RelationError> {
    let mut seen = BTreeSet::new();
    for &a in schema {
        if !seen.insert(a) {
            return Err(RelationError::DuplicateAttribute(a));
        }
    }
    Ok(())
}

/// Natural join of a nonempty list, folded left to right. An empty list
/// yields the unit relation.
pub fn serial_join(rs: &[Relation]) -> Relation {
    let mut iter = rs.iter();
    match iter.next() {
        None => Relation::unit(""),
        Some(first) => iter.fold(first.clone(), |acc, r| acc.join(r)),
    }
}

pub fn serial_semijoin(s: &Relation, r: &Relation) -> Relation {
    s.semijoin(r)
}

pub fn serial_intersect(r: &Relation, s: &Relation) -> Result<Relation, RelationError> {
    r.intersect(s)
}

/// Rows with repetitions allowed, and a known bound on how often any row
/// repeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiset {
    schema: Vec<Attr>,
    rows: Vec<Row>,
    dup_bound: usize,
}

impl Multiset {
    pub fn new(schema: Vec<Attr>, rows: Vec<Row>, dup_bound: usize) -> Result<Self, RelationError> {
        check_schema(&schema)?;
        if dup_bound == 0 {
            return Err(RelationError::ZeroDuplicateBound);
        }
        let mut counts: HashMap<&Row, usize> = HashMap::new();
        for row in &rows {
            if row.len() != schema.len() {
                return Err(RelationError::Arity {
                    row: row.clone(),
                    got: row.len(),
                    expected: schema.len(),
                });
            }
            let c = counts.entry(row).or_default();
            *c += 1;
            if *c > dup_bound {
                return Err(RelationError::DuplicateBound {
                    row: row.clone(),
                    count: *c,
                    bound: dup_bound,
                });
            }
        }
        Ok(Multiset {
            schema,
            rows,
            dup_bound,
        })
    }

    pub fn schema(&self) -> &[Attr] {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn dup_bound(&self) -> usize {
        self.dup_bound
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(schema: &[u32], rows: &[&[Value]]) -> Relation {
        Relation::new(
            "t",
            schema.iter().map(|&a| Attr(a)).collect(),
            rows.iter().map(|r| r.to_vec()),
        )
        .unwrap()
    }

    #[test]
    fn join_single_match() {
        let r = rel(&[0, 1], &[&[1, 2]]);
        let s = rel(&[1, 2], &[&[2, 3]]);
        let j = serial_join(&[r, s]);
        assert_eq!(j.schema(), &[Attr(0), Attr(1), Attr(2)]);
        assert_eq!(j.rows().iter().cloned().collect::<Vec<_>>(), vec![vec![1, 2, 3]]);
    }

    #[test]
    fn join_disjoint_schemas_is_cartesian() {
        let r = rel(&[0], &[&[1], &[2]]);
        let s = rel(&[1], &[&[1], &[2], &[3]]);
        assert_eq!(serial_join(&[r, s]).len(), 6);
    }

    #[test]
    fn join_with_empty_is_empty() {
        let r = rel(&[0, 1], &[&[1, 2]]);
        let s = rel(&[1, 2], &[]);
        assert!(serial_join(&[r, s]).is_empty());
    }

    #[test]
    fn semijoin_filters_dangling() {
        let s = rel(&[0, 1], &[&[1, 2], &[3, 4]]);
        let r = rel(&[1, 2], &[&[2, 9]]);
        let out = serial_semijoin(&s, &r);
        assert_eq!(out.rows().iter().cloned().collect::<Vec<_>>(), vec![vec![1, 2]]);
    }

    #[test]
    fn semijoin_edge_cases() {
        let s = rel(&[0, 1], &[&[1, 2], &[3, 4]]);
        let full = rel(&[1], &[&[2], &[4], &[7]]);
        assert_eq!(serial_semijoin(&s, &full), s);
        let empty = rel(&[1], &[]);
        assert!(serial_semijoin(&s, &empty).is_empty());
        let unrelated = rel(&[5], &[&[1]]);
        assert_eq!(serial_semijoin(&s, &unrelated), s);
        let unrelated_empty = rel(&[5], &[]);
        assert!(serial_semijoin(&s, &unrelated_empty).is_empty());
    }

    #[test]
    fn intersect_basic_and_reordered() {
        let r = rel(&[0], &[&[1], &[2]]);
        let s = rel(&[0], &[&[2], &[3]]);
        assert_eq!(serial_intersect(&r, &s).unwrap().rows().len(), 1);
        assert_eq!(serial_intersect(&r, &r).unwrap(), r);

        let a = rel(&[0, 1], &[&[1, 2], &[3, 4]]);
        let b = rel(&[1, 0], &[&[2, 1], &[9, 9]]);
        let i = serial_intersect(&a, &b).unwrap();
        assert_eq!(i.rows().iter().cloned().collect::<Vec<_>>(), vec![vec![1, 2]]);
    }

    #[test]
    fn intersect_rejects_schema_mismatch() {
        let r = rel(&[0], &[&[1]]);
        let s = rel(&[1], &[&[1]]);
        assert!(matches!(
            serial_intersect(&r, &s),
            Err(RelationError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn arity_and_duplicate_attribute_checks() {
        assert!(matches!(
            Relation::new("r", vec![Attr(0)], vec![vec![1, 2]]),
            Err(RelationError::Arity { .. })
        ));
        assert!(matches!(
            Relation::new("r", vec![Attr(0), Attr(0)], Vec::<Row>::new()),
            Err(RelationError::DuplicateAttribute(_))
        ));
    }

    #[test]
    fn multiset_enforces_bound() {
        let rows = vec![vec![1], vec![1], vec![2]];
        assert!(Multiset::new(vec![Attr(0)], rows.clone(), 2).is_ok());
        assert!(matches!(
            Multiset::new(vec![Attr(0)], rows, 1),
            Err(RelationError::DuplicateBound { count: 2, .. })
        ));
        assert_eq!(
            Multiset::new(vec![Attr(0)], vec![], 0),
            Err(RelationError::ZeroDuplicateBound)
        );
    }

    #[test]
    fn project_dedups() {
        let r = rel(&[0, 1], &[&[1, 2], &[1, 3]]);
        assert_eq!(r.project(&[Attr(0)]).unwrap().len(), 1);
    }

    #[test]
    fn unit_is_join_identity() {
        let r = rel(&[0, 1], &[&[1, 2], &[1, 3]]);
        assert_eq!(Relation::unit("").join(&r).rows(), r.rows());
    }
}
