use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fingerprint, hash_row, CostLedger, MachineConfig, SimError};
use crate::relation::{serial_join, Attr, Multiset, Relation, Row};

fn groups(r: &Relation, size: usize) -> Vec<Relation> {
    r.rows()
        .iter()
        .chunks(size)
        .into_iter()
        .map(|chunk| {
            Relation::from_parts(
                r.name().to_string(),
                r.schema().to_vec(),
                chunk.cloned().collect(),
            )
        })
        .collect()
}

/// Distributed join of `rs` in one round.
///
/// Each relation is cut into contiguous groups of at most `⌊M/z⌋` tuples and
/// one reducer is used per combination of groups, so every combination of
/// input tuples meets in exactly one reducer.
pub fn mr_join(rs: &[Relation], cfg: &MachineConfig, ledger: &mut CostLedger) -> Result<Relation, SimError> {
    let round = join_round(rs, None, cfg, ledger)?;
    let name = rs.iter().map(Relation::name).join("*");
    Ok(Relation::from_parts(name, round.schema, round.rows.into_iter().collect()))
}

/// `π_attrs(R1 ⋈ … ⋈ Rz)`. Reducers project their local join results; when
/// the projection drops attributes, the same row may come out of several
/// reducers, so the output goes through [`mr_dedup`] with the reducer count
/// as duplicate bound.
pub fn mr_join_project(
    rs: &[Relation],
    attrs: &[Attr],
    cfg: &MachineConfig,
    ledger: &mut CostLedger,
) -> Result<Relation, SimError> {
    let round = join_round(rs, Some(attrs), cfg, ledger)?;
    let full: BTreeSet<Attr> = rs.iter().flat_map(|r| r.schema().iter().copied()).collect();
    let kept: BTreeSet<Attr> = attrs.iter().copied().collect();
    let name = rs.iter().map(Relation::name).join("*");
    if kept == full {
        return Ok(Relation::from_parts(name, round.schema, round.rows.into_iter().collect()));
    }
    let multiset = Multiset::new(round.schema, round.rows, round.reducers.max(1))?;
    Ok(mr_dedup(&multiset, cfg, ledger)?.with_name(name))
}

struct JoinRound {
    schema: Vec<Attr>,
    rows: Vec<Row>,
    reducers: usize,
}

fn join_round(
    rs: &[Relation],
    project: Option<&[Attr]>,
    cfg: &MachineConfig,
    ledger: &mut CostLedger,
) -> Result<JoinRound, SimError> {
    if rs.is_empty() {
        return Err(SimError::Config("join of no relations".into()));
    }
    let z = rs.len();
    let cap = cfg.memory / z;
    if cap == 0 {
        return Err(SimError::Config(format!(
            "memory {} cannot hold one tuple from each of {z} relations",
            cfg.memory
        )));
    }
    let grouped: Vec<Vec<Relation>> = rs.iter().map(|r| groups(r, cap)).collect();
    let counts: Vec<usize> = grouped.iter().map(Vec::len).collect();
    let tuples_in: usize = (0..z)
        .map(|i| {
            rs[i].len()
                * counts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, g)| *g)
                    .product::<usize>()
        })
        .sum();
    let reducers: usize = counts.iter().product();
    let joined_schema = serial_join(&rs.iter().map(|r| Relation::empty("", r.schema().to_vec())).collect::<Vec<_>>())
        .schema()
        .to_vec();
    let schema = project.map_or_else(|| joined_schema.clone(), <[Attr]>::to_vec);

    let mut max_load = 0;
    let mut rows: Vec<Row> = Vec::new();
    if reducers > 0 {
        for combo in grouped.iter().map(|g| g.iter()).multi_cartesian_product() {
            let load: usize = combo.iter().map(|r| r.len()).sum();
            max_load = max_load.max(load);
            if load > cfg.memory {
                return Err(ledger.abort(tuples_in, reducers, load, cfg.memory));
            }
            let local: Vec<Relation> = combo.into_iter().cloned().collect();
            let joined = serial_join(&local);
            debug_assert_eq!(joined.schema(), joined_schema.as_slice());
            match project {
                None => rows.extend(joined.rows().iter().cloned()),
                Some(attrs) => rows.extend(joined.project(attrs)?.rows().iter().cloned()),
            }
        }
    }
    ledger.record(tuples_in, rows.len(), reducers, max_load);
    Ok(JoinRound {
        schema,
        rows,
        reducers,
    })
}

/// Duplicate elimination for a multiset in which no row occurs more than
/// `k` times.
///
/// The first round sends each row to reducer `(h(row), r)` with `h` a seeded
/// hash over `min(|S|², cap)` buckets and `r` uniform in `[0, k²)`. Later
/// rounds merge reducers of the same bucket `⌊√M⌋` at a time until one
/// reducer per bucket remains. Every reducer drops the duplicates it sees.
pub fn mr_dedup(s: &Multiset, cfg: &MachineConfig, ledger: &mut CostLedger) -> Result<Relation, SimError> {
    let n = s.len();
    let k = s.dup_bound();
    if n == 0 {
        ledger.record(0, 0, 0, 0);
        return Ok(Relation::empty("dedup", s.schema().to_vec()));
    }
    let buckets = (n as u128 * n as u128).min(cfg.bucket_cap as u128) as u64;
    let space = (k as u128 * k as u128).min(u64::MAX as u128) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(fingerprint(cfg.seed, s.rows()));

    let mut reducers: BTreeMap<(u64, u64), Vec<&Row>> = BTreeMap::new();
    for row in s.rows() {
        let bucket = hash_row(cfg.seed, row) % buckets;
        let slot = rng.gen_range(0..space);
        reducers.entry((bucket, slot)).or_default().push(row);
    }
    let mut survivors = level(reducers, n, cfg, ledger)?;

    let mut width = space;
    if width > 1 {
        let fan_in = (cfg.memory as f64).sqrt().floor() as u64;
        if fan_in < 2 {
            return Err(SimError::Config(format!(
                "memory {} is too small to merge duplicate groups",
                cfg.memory
            )));
        }
        while width > 1 {
            let received: usize = survivors.values().map(BTreeSet::len).sum();
            let mut merged: BTreeMap<(u64, u64), Vec<&Row>> = BTreeMap::new();
            for ((bucket, slot), rows) in &survivors {
                merged
                    .entry((*bucket, slot / fan_in))
                    .or_default()
                    .extend(rows.iter().copied());
            }
            survivors = level(merged, received, cfg, ledger)?;
            width = width.div_ceil(fan_in);
        }
    }
    let rows: BTreeSet<Row> = survivors
        .into_values()
        .flat_map(|rows| rows.into_iter().cloned())
        .collect();
    Ok(Relation::from_parts("dedup".into(), s.schema().to_vec(), rows))
}

/// Runs one round of local duplicate elimination.
fn level<'a>(
    reducers: BTreeMap<(u64, u64), Vec<&'a Row>>,
    received: usize,
    cfg: &MachineConfig,
    ledger: &mut CostLedger,
) -> Result<BTreeMap<(u64, u64), BTreeSet<&'a Row>>, SimError> {
    let max_load = reducers.values().map(Vec::len).max().unwrap_or(0);
    if max_load > cfg.memory {
        return Err(ledger.abort(received, reducers.len(), max_load, cfg.memory));
    }
    let count = reducers.len();
    let out: BTreeMap<_, BTreeSet<&Row>> = reducers
        .into_iter()
        .map(|(key, rows)| (key, rows.into_iter().collect()))
        .collect();
    let emitted = out.values().map(BTreeSet::len).sum();
    ledger.record(received, emitted, count, max_load);
    Ok(out)
}

/// `s ⋉ r`: both sides are cut into groups of at most `⌊M/2⌋` tuples, one
/// reducer per pair of groups emits its local semijoin, and the resulting
/// multiset (each row at most once per `r` group) goes through
/// [`mr_dedup`].
pub fn mr_semijoin(
    s: &Relation,
    r: &Relation,
    cfg: &MachineConfig,
    ledger: &mut CostLedger,
) -> Result<Relation, SimError> {
    if s.is_empty() || r.is_empty() {
        ledger.record(0, 0, 0, 0);
        return Ok(Relation::empty(s.name(), s.schema().to_vec()));
    }
    let cap = cfg.memory / 2;
    let s_groups = groups(s, cap);
    let r_groups = groups(r, cap);
    let reducers = s_groups.len() * r_groups.len();
    let tuples_in = s.len() * r_groups.len() + r.len() * s_groups.len();
    let mut emitted: Vec<Row> = Vec::new();
    let mut max_load = 0;
    for sg in &s_groups {
        for rg in &r_groups {
            let load = sg.len() + rg.len();
            max_load = max_load.max(load);
            if load > cfg.memory {
                return Err(ledger.abort(tuples_in, reducers, load, cfg.memory));
            }
            emitted.extend(sg.semijoin(rg).rows().iter().cloned());
        }
    }
    ledger.record(tuples_in, emitted.len(), reducers, max_load);
    let multiset = Multiset::new(s.schema().to_vec(), emitted, r_groups.len())?;
    let out = mr_dedup(&multiset, cfg, ledger)?;
    Ok(out.with_name(s.name()))
}

/// `r ∩ s` in one round: every tuple is hashed on all attributes to one of
/// `min(max(|R|,|S|)², cap)` reducers.
pub fn mr_intersect(
    r: &Relation,
    s: &Relation,
    cfg: &MachineConfig,
    ledger: &mut CostLedger,
) -> Result<Relation, SimError> {
    let aligned = s.aligned_to(r.schema())?;
    let larger = r.len().max(s.len()).max(1) as u128;
    let buckets = (larger * larger).min(cfg.bucket_cap as u128) as u64;
    let mut reducers: BTreeMap<u64, (Vec<&Row>, Vec<&Row>)> = BTreeMap::new();
    for row in r.rows() {
        reducers.entry(hash_row(cfg.seed, row) % buckets).or_default().0.push(row);
    }
    for row in &aligned {
        reducers.entry(hash_row(cfg.seed, row) % buckets).or_default().1.push(row);
    }
    let tuples_in = r.len() + s.len();
    let max_load = reducers.values().map(|(a, b)| a.len() + b.len()).max().unwrap_or(0);
    if max_load > cfg.memory {
        return Err(ledger.abort(tuples_in, reducers.len(), max_load, cfg.memory));
    }
    let mut rows = BTreeSet::new();
    for (left, right) in reducers.values() {
        let right: BTreeSet<&Row> = right.iter().copied().collect();
        rows.extend(left.iter().filter(|row| right.contains(*row)).map(|row| (*row).clone()));
    }
    ledger.record(tuples_in, rows.len(), reducers.len(), max_load);
    Ok(Relation::from_parts(r.name().to_string(), r.schema().to_vec(), rows))
}
