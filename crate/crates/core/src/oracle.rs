//! Black-box functions and point samplers.
//!
//! An oracle maps exact points to exact values or reports the point as
//! undefined (pole, missing square root, absent table row). Oracles are
//! immutable and `Sync`; random state always belongs to the caller.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{self, Expr, ExprError, Scope, Var};
use crate::scalar::{FieldDesc, Scalar, ScalarError};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("table row {row}: {msg}")]
    Table { row: usize, msg: String },
    #[error("bad table header: {0}")]
    Header(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Number of `x` and `y` coordinates of a two-block point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arity {
    pub num_x: usize,
    pub num_y: usize,
}

impl Arity {
    pub fn new(num_x: usize, num_y: usize) -> Self {
        Self { num_x, num_y }
    }

    pub fn total(&self) -> usize {
        self.num_x + self.num_y
    }

    fn scope(&self) -> Scope {
        Scope {
            num_x: self.num_x,
            num_y: self.num_y,
            allow_t: false,
        }
    }
}

/// Anything that can be evaluated at exact points.
pub trait Oracle: Send + Sync {
    fn field(&self) -> FieldDesc;
    fn arity(&self) -> usize;
    /// `None` when the function is undefined at `point`.
    fn eval(&self, point: &[Scalar]) -> Option<Scalar>;
    /// All points where the oracle is defined, if that set is finite and known.
    fn domain(&self) -> Option<Vec<Vec<Scalar>>> {
        None
    }
}

/// Finite function given by its rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTable {
    field: FieldDesc,
    arity: Arity,
    rows: Vec<(Vec<Scalar>, Scalar)>,
    index: HashMap<Vec<Scalar>, usize>,
}

impl SampleTable {
    pub fn new(field: FieldDesc, arity: Arity) -> Self {
        Self {
            field,
            arity,
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, point: Vec<Scalar>, value: Scalar) -> Result<(), OracleError> {
        let row = self.rows.len() + 1;
        if point.len() != self.arity.total() {
            return Err(OracleError::ArityMismatch {
                expected: self.arity.total(),
                got: point.len(),
            });
        }
        if point.iter().chain([&value]).any(|s| s.field() != self.field) {
            return Err(OracleError::Table {
                row,
                msg: format!("entry outside {}", self.field),
            });
        }
        if self.index.contains_key(&point) {
            return Err(OracleError::Table {
                row,
                msg: "duplicate point".into(),
            });
        }
        self.index.insert(point.clone(), self.rows.len());
        self.rows.push((point, value));
        Ok(())
    }

    pub fn get(&self, point: &[Scalar]) -> Option<&Scalar> {
        self.index.get(point).map(|&i| &self.rows[i].1)
    }

    pub fn rows(&self) -> &[(Vec<Scalar>, Scalar)] {
        &self.rows
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn field(&self) -> FieldDesc {
        self.field
    }

    /// Reads `x1,..,xm[,y1,..,yk],value` CSV. Arity comes from the header.
    pub fn read_csv<R: Read>(reader: R, field: FieldDesc) -> Result<Self, OracleError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let arity = parse_header(rdr.headers()?)?;
        let mut table = Self::new(field, arity);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let cell = |s: &str| {
                Scalar::parse(field, s).map_err(|e| OracleError::Table {
                    row,
                    msg: e.to_string(),
                })
            };
            let mut cells = rec.iter().map(cell).collect::<Result<Vec<_>, _>>()?;
            if cells.len() != arity.total() + 1 {
                return Err(OracleError::Table {
                    row,
                    msg: format!("expected {} fields, got {}", arity.total() + 1, cells.len()),
                });
            }
            let value = cells.pop().expect("nonempty row");
            table.insert(cells, value)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path, field: FieldDesc) -> Result<Self, OracleError> {
        Self::read_csv(std::fs::File::open(path)?, field)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.arity.num_x).map(|i| format!("x{i}")).collect();
        header.extend((1..=self.arity.num_y).map(|i| format!("y{i}")));
        header.push("value".into());
        w.write_record(&header)?;
        for (p, v) in &self.rows {
            w.write_record(p.iter().chain([v]).map(|s| s.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_header(h: &csv::StringRecord) -> Result<Arity, OracleError> {
    let names: Vec<&str> = h.iter().collect();
    let Some((&"value", coords)) = names.split_last() else {
        return Err(OracleError::Header("last column must be `value`".into()));
    };
    let num_x = coords.iter().take_while(|c| c.starts_with('x')).count();
    let num_y = coords.len() - num_x;
    let expected = (1..=num_x)
        .map(|i| format!("x{i}"))
        .chain((1..=num_y).map(|i| format!("y{i}")));
    for (got, want) in coords.iter().zip(expected) {
        if *got != want {
            return Err(OracleError::Header(format!("expected column `{want}`, found `{got}`")));
        }
    }
    Ok(Arity::new(num_x, num_y))
}

/// Reads a point list: CSV with header `x1,..,xm` (or `y1,..`), one point
/// per row.
pub fn read_points_csv<R: Read>(reader: R, field: FieldDesc) -> Result<Vec<Vec<Scalar>>, OracleError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let width = rdr.headers()?.len();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(OracleError::Table {
                row: i + 1,
                msg: format!("expected {width} fields, got {}", rec.len()),
            });
        }
        let point = rec
            .iter()
            .map(|s| {
                Scalar::parse(field, s).map_err(|e| OracleError::Table {
                    row: i + 1,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(point);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum Source {
    Expression(Expr),
    Table(SampleTable),
}

/// A function of `(x, y)` given by an expression or a table.
#[derive(Debug, Clone)]
pub struct FunctionOracle {
    source: Source,
    arity: Arity,
    field: FieldDesc,
}

impl FunctionOracle {
    /// Parses `text`. Without an explicit arity, the highest `x` and `y`
    /// indices that appear decide it.
    pub fn from_expression(text: &str, arity: Option<Arity>, field: FieldDesc) -> Result<Self, OracleError> {
        let arity = match arity {
            Some(a) => a,
            None => {
                let wide = Scope {
                    num_x: usize::MAX,
                    num_y: usize::MAX,
                    allow_t: false,
                };
                let (num_x, num_y) = expr::parse(text, wide)?.var_extent();
                Arity::new(num_x, num_y)
            }
        };
        let e = expr::parse(text, arity.scope())?;
        Ok(Self {
            source: Source::Expression(e),
            arity,
            field,
        })
    }

    pub fn from_table(table: SampleTable) -> Self {
        Self {
            arity: table.arity(),
            field: table.field(),
            source: Source::Table(table),
        }
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn xy_arity(&self) -> Arity {
        self.arity
    }

    pub fn is_table(&self) -> bool {
        matches!(self.source, Source::Table(_))
    }

    /// The one-variable-block function `x -> f(x, y0)`.
    pub fn fix_y(&self, y0: Vec<Scalar>) -> Slice<'_> {
        assert_eq!(y0.len(), self.arity.num_y, "y arity");
        Slice {
            base: self,
            fixed: y0,
            fixed_is_y: true,
        }
    }

    /// The one-variable-block function `y -> f(x0, y)`.
    pub fn fix_x(&self, x0: Vec<Scalar>) -> Slice<'_> {
        assert_eq!(x0.len(), self.arity.num_x, "x arity");
        Slice {
            base: self,
            fixed: x0,
            fixed_is_y: false,
        }
    }

    pub fn try_eval(&self, point: &[Scalar]) -> Result<Option<Scalar>, OracleError> {
        if point.len() != self.arity.total() {
            return Err(OracleError::ArityMismatch {
                expected: self.arity.total(),
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    fn eval_unchecked(&self, point: &[Scalar]) -> Option<Scalar> {
        match &self.source {
            Source::Expression(e) => {
                let nx = self.arity.num_x;
                e.eval(self.field, &|v| match v {
                    Var::X(i) => point.get(i).cloned(),
                    Var::Y(i) => point.get(nx + i).cloned(),
                    Var::T => None,
                })
            }
            Source::Table(t) => t.get(point).cloned(),
        }
    }
}

impl Oracle for FunctionOracle {
    fn field(&self) -> FieldDesc {
        self.field
    }

    fn arity(&self) -> usize {
        self.arity.total()
    }

    fn eval(&self, point: &[Scalar]) -> Option<Scalar> {
        assert_eq!(point.len(), self.arity.total(), "oracle arity");
        self.eval_unchecked(point)
    }

    fn domain(&self) -> Option<Vec<Vec<Scalar>>> {
        match &self.source {
            Source::Table(t) => Some(t.rows().iter().map(|(p, _)| p.clone()).collect()),
            Source::Expression(_) => None,
        }
    }
}

/// A function oracle with one coordinate block held fixed.
#[derive(Debug, Clone)]
pub struct Slice<'a> {
    base: &'a FunctionOracle,
    fixed: Vec<Scalar>,
    fixed_is_y: bool,
}

impl Slice<'_> {
    fn full_point(&self, free: &[Scalar]) -> Vec<Scalar> {
        if self.fixed_is_y {
            free.iter().chain(&self.fixed).cloned().collect()
        } else {
            self.fixed.iter().chain(free).cloned().collect()
        }
    }
}

impl Oracle for Slice<'_> {
    fn field(&self) -> FieldDesc {
        self.base.field
    }

    fn arity(&self) -> usize {
        if self.fixed_is_y {
            self.base.arity.num_x
        } else {
            self.base.arity.num_y
        }
    }

    fn eval(&self, point: &[Scalar]) -> Option<Scalar> {
        assert_eq!(point.len(), self.arity(), "slice arity");
        self.base.eval_unchecked(&self.full_point(point))
    }

    fn domain(&self) -> Option<Vec<Vec<Scalar>>> {
        let nx = self.base.arity.num_x;
        let rows = self.base.domain()?;
        Some(
            rows.into_iter()
                .filter_map(|p| {
                    let (x, y) = p.split_at(nx);
                    if self.fixed_is_y {
                        (y == self.fixed.as_slice()).then(|| x.to_vec())
                    } else {
                        (x == self.fixed.as_slice()).then(|| y.to_vec())
                    }
                })
                .collect(),
        )
    }
}

/// Wraps a closure as an oracle.
pub struct ClosureOracle<F> {
    field: FieldDesc,
    arity: usize,
    f: F,
}

impl<F> ClosureOracle<F>
where
    F: Fn(&[Scalar]) -> Option<Scalar> + Send + Sync,
{
    pub fn new(field: FieldDesc, arity: usize, f: F) -> Self {
        Self { field, arity, f }
    }
}

impl<F> Oracle for ClosureOracle<F>
where
    F: Fn(&[Scalar]) -> Option<Scalar> + Send + Sync,
{
    fn field(&self) -> FieldDesc {
        self.field
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, point: &[Scalar]) -> Option<Scalar> {
        (self.f)(point)
    }
}

/// How sample points are produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplerKind {
    /// Integers in `[-range, range]` (uniform residues over a prime field).
    UniformIntegers { range: u64 },
    /// `p/q` with `|p| <= range`, `1 <= q <= range` (uniform residues over a
    /// prime field).
    UniformRationals { range: u64 },
    /// Every integer point of `[lo, hi]^arity`, first coordinate slowest.
    IntegerGrid { lo: i64, hi: i64 },
    /// A fixed list, returned in order.
    UserList(Vec<Vec<Scalar>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub arity: usize,
    pub field: FieldDesc,
}

impl Sampler {
    pub fn new(kind: SamplerKind, arity: usize, field: FieldDesc) -> Self {
        Self { kind, arity, field }
    }

    /// Number of points, if finite.
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            SamplerKind::IntegerGrid { lo, hi } => {
                let side = usize::try_from((hi - lo + 1).max(0)).ok()?;
                u32::try_from(self.arity).ok().and_then(|a| side.checked_pow(a))
            }
            SamplerKind::UserList(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn stream(&self, seed: u64) -> PointStream {
        PointStream {
            sampler: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cursor: 0,
        }
    }

    /// The first `count` points of the stream for `seed` (fewer if finite).
    pub fn draw(&self, seed: u64, count: usize) -> Vec<Vec<Scalar>> {
        self.stream(seed).take(count).collect()
    }
}

/// Stateful iterator over a sampler's points.
#[derive(Debug, Clone)]
pub struct PointStream {
    sampler: Sampler,
    rng: ChaCha8Rng,
    cursor: usize,
}

impl PointStream {
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Iterator for PointStream {
    type Item = Vec<Scalar>;

    fn next(&mut self) -> Option<Vec<Scalar>> {
        let field = self.sampler.field;
        let arity = self.sampler.arity;
        let point = match &self.sampler.kind {
            SamplerKind::UniformIntegers { range } => (0..arity)
                .map(|_| Scalar::random(field, &mut self.rng, *range))
                .collect(),
            SamplerKind::UniformRationals { range } => {
                (0..arity).map(|_| random_ratio(field, &mut self.rng, *range)).collect()
            }
            SamplerKind::IntegerGrid { lo, hi } => {
                if self.cursor >= self.sampler.len()? {
                    return None;
                }
                let side = (hi - lo + 1) as usize;
                let mut rest = self.cursor;
                let mut coords = vec![Scalar::zero(field); arity];
                for c in coords.iter_mut().rev() {
                    *c = Scalar::from_i64(field, lo + (rest % side) as i64);
                    rest /= side;
                }
                coords
            }
            SamplerKind::UserList(points) => points.get(self.cursor)?.clone(),
        };
        self.cursor += 1;
        Some(point)
    }
}

fn random_ratio<R: Rng + ?Sized>(field: FieldDesc, rng: &mut R, range: u64) -> Scalar {
    match field {
        FieldDesc::Rationals => {
            let range = range.min(i64::MAX as u64) as i64;
            let num = rng.gen_range(-range..=range);
            let den = rng.gen_range(1..=range.max(1));
            Scalar::from_ratio(field, &num.into(), &den.into()).expect("positive denominator")
        }
        FieldDesc::PrimeField(_) => Scalar::random(field, rng, range),
    }
}

/// Independent seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
