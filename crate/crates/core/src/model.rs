//! TP relations, tuples, intervals and facts: ingestion, validation,
//! snapshotting and synthetic-data generation.
//!
//! Time is a signed 64-bit chronon index and every interval is half-open
//! `[ts, te)`. A relation is *duplicate-free*: two tuples carrying the same
//! fact never have overlapping intervals. The join engines assume this
//! invariant, so it is enforced on every construction path.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lineage::ProbMap;

/// A chronon index. Only comparison and successor arithmetic are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimePoint(pub i64);

impl TimePoint {
    pub fn succ(self) -> TimePoint {
        TimePoint(self.0 + 1)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Half-open interval `[ts, te)` with `ts < te`; empty intervals are never
/// materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    ts: TimePoint,
    te: TimePoint,
}

impl Interval {
    /// Panics if `ts >= te`. Use [`Interval::checked`] for untrusted input.
    pub fn new(ts: TimePoint, te: TimePoint) -> Interval {
        assert!(ts < te, "empty interval [{ts},{te})");
        Interval { ts, te }
    }

    pub fn checked(ts: TimePoint, te: TimePoint) -> Option<Interval> {
        (ts < te).then_some(Interval { ts, te })
    }

    /// Convenience constructor over raw chronons.
    pub fn of(ts: i64, te: i64) -> Interval {
        Interval::new(TimePoint(ts), TimePoint(te))
    }

    pub fn ts(&self) -> TimePoint {
        self.ts
    }

    pub fn te(&self) -> TimePoint {
        self.te
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        self.ts <= t && t < self.te
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.ts < other.te && other.ts < self.te
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let ts = self.ts.max(other.ts);
        let te = self.te.min(other.te);
        Interval::checked(ts, te)
    }

    /// Interval length in chronons; always positive.
    pub fn duration(&self) -> i64 {
        self.te.0 - self.ts.0
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.ts, self.te)
    }
}

/// An attribute value. Columns are typed at load; a column holds either
/// integers or strings, never a mix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(Arc<str>),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => v.fmt(f),
            Value::Str(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

/// Ordered, uniquely named fact columns of a relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema(Arc<[Column]>);

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Schema> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|prev| prev.name == c.name) {
                return Err(Error::DuplicateVar(format!("column {}", c.name)));
            }
        }
        Ok(Schema(columns.into()))
    }

    /// Shorthand: `("Loc", Str)` pairs.
    pub fn of(cols: &[(&str, ColumnType)]) -> Schema {
        Schema(
            cols.iter()
                .map(|(name, ty)| Column {
                    name: (*name).to_string(),
                    ty: *ty,
                })
                .collect(),
        )
    }

    pub fn columns(&self) -> &[Column] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|c| c.name == name)
    }
}

/// The non-temporal attribute values of a tuple. Cheap to clone; facts are
/// compared by ordered value equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact(Arc<[Value]>);

impl Fact {
    pub fn new(values: Vec<Value>) -> Fact {
        Fact(values.into())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    /// Comma-joined rendering used in window dumps and error messages.
    pub fn render(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// One TP tuple: fact, lineage variable, validity interval and marginal
/// probability in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct TpTuple {
    pub fact: Fact,
    pub var: Arc<str>,
    pub interval: Interval,
    pub p: f64,
}

/// A duplicate-free set of TP tuples over one schema. Immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct TpRelation {
    schema: Schema,
    tuples: Vec<TpTuple>,
}

impl TpRelation {
    /// Validates all relation invariants: fact arity, probability range,
    /// unique variables and duplicate-freeness.
    pub fn new(schema: Schema, tuples: Vec<TpTuple>) -> Result<TpRelation> {
        let rel = TpRelation { schema, tuples };
        rel.validate()?;
        Ok(rel)
    }

    fn validate(&self) -> Result<()> {
        let mut seen_vars: HashMap<&str, ()> = HashMap::with_capacity(self.tuples.len());
        for t in &self.tuples {
            if t.fact.values().len() != self.schema.len() {
                return Err(Error::Load {
                    path: "<memory>".into(),
                    line: 0,
                    message: format!(
                        "tuple {} has {} fact values, schema has {} columns",
                        t.var,
                        t.fact.values().len(),
                        self.schema.len()
                    ),
                });
            }
            for (v, c) in t.fact.values().iter().zip(self.schema.columns()) {
                let ok = matches!(
                    (v, c.ty),
                    (Value::Int(_), ColumnType::Int) | (Value::Str(_), ColumnType::Str)
                );
                if !ok {
                    return Err(Error::ConditionType(format!(
                        "value `{v}` of tuple {} does not match the type of column {}",
                        t.var, c.name
                    )));
                }
            }
            if !(t.p > 0.0 && t.p <= 1.0) {
                return Err(Error::ProbabilityRange {
                    var: t.var.to_string(),
                    p: t.p,
                });
            }
            if t.var.is_empty() {
                return Err(Error::DuplicateVar("<empty>".to_string()));
            }
            if seen_vars.insert(&t.var, ()).is_some() {
                return Err(Error::DuplicateVar(t.var.to_string()));
            }
        }
        self.check_duplicate_free()
    }

    /// Same-fact tuples must have pairwise disjoint intervals. Sorting by
    /// (fact, ts) reduces the check to adjacent pairs.
    fn check_duplicate_free(&self) -> Result<()> {
        let mut idx: Vec<usize> = (0..self.tuples.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ta, tb) = (&self.tuples[a], &self.tuples[b]);
            ta.fact
                .cmp(&tb.fact)
                .then(ta.interval.ts().cmp(&tb.interval.ts()))
        });
        for w in idx.windows(2) {
            let (a, b) = (&self.tuples[w[0]], &self.tuples[w[1]]);
            if a.fact == b.fact && a.interval.overlaps(&b.interval) {
                return Err(Error::DuplicateFree {
                    first: a.var.to_string(),
                    second: b.var.to_string(),
                    fact: a.fact.render(),
                });
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[TpTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Tuples valid at `t` (i.e. `ts <= t < te`), in relation order.
    pub fn snapshot(&self, t: TimePoint) -> Vec<&TpTuple> {
        self.tuples
            .iter()
            .filter(|tp| tp.interval.contains(t))
            .collect()
    }

    /// Marginal probability of every base variable, for lineage valuation.
    pub fn prob_map_into(&self, pm: &mut ProbMap) {
        for t in &self.tuples {
            pm.insert(t.var.clone(), t.p);
        }
    }

    /// Loads a relation from the TSV format described in [`self::tsv`].
    pub fn load(path: impl AsRef<Path>) -> Result<TpRelation> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_tsv(&text, path)
    }

    /// Parses TSV text; `origin` is used in error messages only.
    pub fn parse_tsv(text: &str, origin: impl AsRef<Path>) -> Result<TpRelation> {
        let origin = origin.as_ref();
        let err = |line: usize, message: String| Error::Load {
            path: origin.to_path_buf(),
            line,
            message,
        };

        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header line".to_string()))?;
        let fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if fields.len() < 4 || fields[fields.len() - 4..] != ["var", "ts", "te", "p"] {
            return Err(err(
                1,
                "header must end with: var<TAB>ts<TAB>te<TAB>p".to_string(),
            ));
        }
        let mut columns = Vec::new();
        for spec in &fields[..fields.len() - 4] {
            let (name, ty) = spec
                .split_once(':')
                .ok_or_else(|| err(1, format!("column `{spec}` lacks a :str or :int type")))?;
            let ty = match ty {
                "str" => ColumnType::Str,
                "int" => ColumnType::Int,
                other => return Err(err(1, format!("unknown column type `{other}`"))),
            };
            columns.push(Column {
                name: name.to_string(),
                ty,
            });
        }
        let schema = Schema::new(columns)?;

        let mut tuples = Vec::new();
        for (i, raw) in lines {
            let line_no = i + 1;
            let row: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
            if row.len() != schema.len() + 4 {
                return Err(err(
                    line_no,
                    format!("expected {} fields, found {}", schema.len() + 4, row.len()),
                ));
            }
            let mut values = Vec::with_capacity(schema.len());
            for (field, col) in row.iter().zip(schema.columns()) {
                values.push(match col.ty {
                    ColumnType::Str => Value::str(field),
                    ColumnType::Int => Value::Int(field.parse().map_err(|_| {
                        err(line_no, format!("column {}: `{field}` is not an integer", col.name))
                    })?),
                });
            }
            let base = schema.len();
            let var: Arc<str> = Arc::from(row[base]);
            let ts: i64 = row[base + 1]
                .parse()
                .map_err(|_| err(line_no, format!("ts `{}` is not an integer", row[base + 1])))?;
            let te: i64 = row[base + 2]
                .parse()
                .map_err(|_| err(line_no, format!("te `{}` is not an integer", row[base + 2])))?;
            let p: f64 = row[base + 3]
                .parse()
                .map_err(|_| err(line_no, format!("p `{}` is not a number", row[base + 3])))?;
            let interval = Interval::checked(TimePoint(ts), TimePoint(te))
                .ok_or_else(|| err(line_no, format!("empty interval [{ts},{te})")))?;
            tuples.push(TpTuple {
                fact: Fact::new(values),
                var,
                interval,
                p,
            });
        }
        TpRelation::new(schema, tuples)
    }

    /// Serializes back to the load format.
    pub fn write_tsv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut header: Vec<String> = self
            .schema
            .columns()
            .iter()
            .map(|c| {
                let ty = match c.ty {
                    ColumnType::Int => "int",
                    ColumnType::Str => "str",
                };
                format!("{}:{ty}", c.name)
            })
            .collect();
        header.extend(["var", "ts", "te", "p"].map(String::from));
        writeln!(out, "{}", header.join("\t"))?;
        for t in &self.tuples {
            let mut row: Vec<String> = t.fact.values().iter().map(|v| v.to_string()).collect();
            row.push(t.var.to_string());
            row.push(t.interval.ts().to_string());
            row.push(t.interval.te().to_string());
            row.push(format!("{}", t.p));
            writeln!(out, "{}", row.join("\t"))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("in-memory write");
        fs::write(path, buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Derives a second relation by re-placing every interval at a start
    /// point drawn from the empirical distribution of this relation's start
    /// points, keeping interval lengths and facts. Deterministic under
    /// `seed`; tuples get fresh `{prefix}{n}` variables.
    ///
    /// Same-fact placements must stay disjoint, so each fact is placed as a
    /// unit: random draws first, a scan of the start pool as fallback, and
    /// the whole fact retried when a tuple cannot be placed.
    pub fn generate_shifted(&self, seed: u64, prefix: &str) -> Result<TpRelation> {
        const TUPLE_ATTEMPTS: usize = 32;
        const FACT_ROUNDS: usize = 32;
        if self.is_empty() {
            return Err(Error::EmptyRelation("generate_shifted"));
        }
        let pool: Vec<i64> = self.tuples.iter().map(|t| t.interval.ts().0).collect();
        let mut scan_pool = pool.clone();
        scan_pool.sort_unstable();
        scan_pool.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut by_fact: Vec<(Fact, Vec<usize>)> = Vec::new();
        let mut fact_index: HashMap<Fact, usize> = HashMap::new();
        for (i, t) in self.tuples.iter().enumerate() {
            let slot = *fact_index.entry(t.fact.clone()).or_insert_with(|| {
                by_fact.push((t.fact.clone(), Vec::new()));
                by_fact.len() - 1
            });
            by_fact[slot].1.push(i);
        }

        let fits = |occupied: &[Interval], cand: &Interval| {
            let pos = occupied.partition_point(|iv| iv.ts() < cand.ts());
            (pos == 0 || !occupied[pos - 1].overlaps(cand))
                && (pos == occupied.len() || !occupied[pos].overlaps(cand))
        };

        let mut intervals: Vec<Option<Interval>> = vec![None; self.len()];
        for (_, idxs) in &by_fact {
            let mut done = false;
            'round: for _ in 0..FACT_ROUNDS {
                let mut occupied: Vec<Interval> = Vec::with_capacity(idxs.len());
                let mut chosen = Vec::with_capacity(idxs.len());
                for &i in idxs {
                    let len = self.tuples[i].interval.duration();
                    let mut found = None;
                    for _ in 0..TUPLE_ATTEMPTS {
                        let ts = pool[rng.gen_range(0..pool.len())];
                        let cand = Interval::of(ts, ts + len);
                        if fits(&occupied, &cand) {
                            found = Some(cand);
                            break;
                        }
                    }
                    if found.is_none() {
                        found = scan_pool
                            .iter()
                            .map(|&ts| Interval::of(ts, ts + len))
                            .find(|cand| fits(&occupied, cand));
                    }
                    let Some(cand) = found else { continue 'round };
                    let pos = occupied.partition_point(|iv| iv.ts() < cand.ts());
                    occupied.insert(pos, cand);
                    chosen.push(cand);
                }
                for (&i, cand) in idxs.iter().zip(chosen) {
                    intervals[i] = Some(cand);
                }
                done = true;
                break;
            }
            if !done {
                return Err(Error::GenerationFailed(FACT_ROUNDS));
            }
        }

        let tuples = self
            .tuples
            .iter()
            .enumerate()
            .map(|(i, t)| TpTuple {
                fact: t.fact.clone(),
                var: Arc::from(format!("{prefix}{}", i + 1)),
                interval: intervals[i].expect("every fact placed"),
                p: t.p,
            })
            .collect();
        TpRelation::new(self.schema.clone(), tuples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visits() -> TpRelation {
        let text = "Name:str\tLoc:str\tvar\tts\tte\tp\n\
                    Ann\tZAK\ta1\t2\t8\t0.7\n\
                    Jim\tWEN\ta2\t7\t10\t0.8\n";
        TpRelation::parse_tsv(text, "visits.tsv").unwrap()
    }

    fn hotels() -> TpRelation {
        let text = "Hotel:str\tLoc:str\tvar\tts\tte\tp\n\
                    hotel3\tSOR\tb1\t1\t4\t0.9\n\
                    hotel2\tZAK\tb2\t5\t8\t0.6\n\
                    hotel1\tZAK\tb3\t4\t6\t0.7\n";
        TpRelation::parse_tsv(text, "hotels.tsv").unwrap()
    }

    #[test]
    fn load_round_trip() {
        let rel = visits();
        assert_eq!(rel.len(), 2);
        assert_eq!(rel.tuples()[0].fact.render(), "Ann,ZAK");
        assert_eq!(rel.tuples()[0].interval, Interval::of(2, 8));
        assert_eq!(rel.tuples()[0].p, 0.7);

        let mut buf = Vec::new();
        rel.write_tsv(&mut buf).unwrap();
        let again = TpRelation::parse_tsv(std::str::from_utf8(&buf).unwrap(), "rt").unwrap();
        assert_eq!(again.len(), 2);
        assert_eq!(again.tuples()[1].var.as_ref(), "a2");
    }

    #[test]
    fn load_empty_data_section() {
        let rel = TpRelation::parse_tsv("X:str\tvar\tts\tte\tp\n", "empty.tsv").unwrap();
        assert!(rel.is_empty());
    }

    #[test]
    fn load_rejects_same_fact_overlap() {
        let text = "X:str\tvar\tts\tte\tp\nX\tv1\t1\t5\t0.5\nX\tv2\t3\t7\t0.5\n";
        let e = TpRelation::parse_tsv(text, "dup.tsv").unwrap_err();
        match e {
            Error::DuplicateFree { first, second, .. } => {
                assert_eq!((first.as_str(), second.as_str()), ("v1", "v2"));
            }
            other => panic!("expected duplicate-free violation, got {other}"),
        }
    }

    #[test]
    fn load_rejects_bad_rows() {
        let bad_p = "X:str\tvar\tts\tte\tp\nX\tv1\t1\t5\t1.5\n";
        assert!(matches!(
            TpRelation::parse_tsv(bad_p, "p").unwrap_err(),
            Error::ProbabilityRange { .. }
        ));
        let bad_ts = "X:str\tvar\tts\tte\tp\nX\tv1\tone\t5\t0.5\n";
        assert!(matches!(
            TpRelation::parse_tsv(bad_ts, "ts").unwrap_err(),
            Error::Load { line: 2, .. }
        ));
        let dup_var = "X:str\tvar\tts\tte\tp\nX\tv1\t1\t5\t0.5\nY\tv1\t9\t12\t0.5\n";
        assert!(matches!(
            TpRelation::parse_tsv(dup_var, "var").unwrap_err(),
            Error::DuplicateVar(_)
        ));
        let empty_iv = "X:str\tvar\tts\tte\tp\nX\tv1\t5\t5\t0.5\n";
        assert!(matches!(
            TpRelation::parse_tsv(empty_iv, "iv").unwrap_err(),
            Error::Load { line: 2, .. }
        ));
    }

    #[test]
    fn snapshot_half_open() {
        let b = hotels();
        let at5: Vec<&str> = b.snapshot(TimePoint(5)).iter().map(|t| &*t.var).collect();
        assert_eq!(at5, ["b2", "b3"]);
        assert!(b.snapshot(TimePoint(8)).is_empty());
        let a = visits();
        let at7: Vec<&str> = a.snapshot(TimePoint(7)).iter().map(|t| &*t.var).collect();
        assert_eq!(at7, ["a1", "a2"]);
    }

    #[test]
    fn shifted_is_deterministic_and_length_preserving() {
        let a = visits();
        let s1 = a.generate_shifted(42, "g").unwrap();
        let s2 = a.generate_shifted(42, "g").unwrap();
        assert_eq!(s1.len(), a.len());
        for (x, y) in s1.tuples().iter().zip(s2.tuples()) {
            assert_eq!(x.interval, y.interval);
            assert_eq!(x.var, y.var);
        }
        let mut lens: Vec<i64> = s1.tuples().iter().map(|t| t.interval.duration()).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![3, 6]);
        // Fresh variables, original facts.
        assert_eq!(s1.tuples()[0].var.as_ref(), "g1");
        assert_eq!(s1.tuples()[0].fact, a.tuples()[0].fact);
    }

    #[test]
    fn shifted_rejects_empty_input() {
        let rel = TpRelation::parse_tsv("X:str\tvar\tts\tte\tp\n", "empty.tsv").unwrap();
        assert!(matches!(
            rel.generate_shifted(1, "g"),
            Err(Error::EmptyRelation(_))
        ));
    }

    #[test]
    fn shifted_places_crowded_facts() {
        // One fact whose lengths nearly fill the start range: random draws
        // alone dead-end here, the fact-level retry must not.
        let text = "X:str\tvar\tts\tte\tp\n\
                    X\tv1\t0\t50\t0.5\nX\tv2\t50\t100\t0.5\nX\tv3\t100\t140\t0.5\n";
        let rel = TpRelation::parse_tsv(text, "tight.tsv").unwrap();
        for seed in 0..32 {
            let s = rel.generate_shifted(seed, "g").unwrap();
            assert_eq!(s.len(), 3);
        }
    }
}
