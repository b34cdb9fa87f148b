//! Evaluation matrices on graph samples and exact elimination.
//!
//! Row `i` of an evaluation matrix holds the first `n` basis monomials
//! evaluated at the `i`-th graph point `(x_i, f(x_i))`, so kernel vectors are
//! exactly the coefficient vectors of polynomials vanishing on the sample.
//!
//! Rational matrices are scaled to integers (row- or column-wise, whichever
//! keeps the kernel recoverable) and eliminated fraction-free; prime-field
//! matrices are eliminated directly on residues. The same generic routines
//! also run over polynomial rings, which is how the reconstruction pipeline
//! gets its symbolic minors.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::poly::{BasisOrdering, Monomial, Poly};
use crate::scalar::{inv_mod, FieldDesc, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("expected points with {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("cofactor vector needs an (n-1) x n matrix, got {rows} x {cols}")]
    ShapeMismatch { rows: usize, cols: usize },
    #[error("basis prefix length must be at least 1")]
    EmptyPrefix,
    #[error("ordering has no graph variable t")]
    MissingT,
    #[error("sample and ordering use different fields")]
    FieldMismatch,
}

/// One point `(x, f(x))` of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphPoint {
    pub point: Vec<Scalar>,
    pub value: Scalar,
}

impl GraphPoint {
    pub fn new(point: Vec<Scalar>, value: Scalar) -> Self {
        Self { point, value }
    }

    /// Coordinates `(x_1, ..., x_m, t)` for polynomial evaluation.
    pub fn coords(&self) -> Vec<Scalar> {
        let mut c = self.point.clone();
        c.push(self.value.clone());
        c
    }
}

/// A finite piece of a graph. Pairs are kept distinct: pushing a pair that is
/// already present is a no-op.
#[derive(Debug, Clone)]
pub struct GraphSample {
    field: FieldDesc,
    arity: usize,
    points: Vec<GraphPoint>,
    seen: HashSet<GraphPoint>,
}

impl GraphSample {
    pub fn new(field: FieldDesc, arity: usize) -> Self {
        Self {
            field,
            arity,
            points: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn from_points(
        field: FieldDesc,
        arity: usize,
        points: impl IntoIterator<Item = GraphPoint>,
    ) -> Result<Self, KernelError> {
        let mut s = Self::new(field, arity);
        for p in points {
            s.push(p)?;
        }
        Ok(s)
    }

    /// Adds a pair; returns `false` if it was already present.
    pub fn push(&mut self, p: GraphPoint) -> Result<bool, KernelError> {
        if p.point.len() != self.arity {
            return Err(KernelError::ArityMismatch {
                expected: self.arity,
                got: p.point.len(),
            });
        }
        if p.point.iter().chain([&p.value]).any(|s| s.field() != self.field) {
            return Err(KernelError::FieldMismatch);
        }
        if !self.seen.insert(p.clone()) {
            return Ok(false);
        }
        self.points.push(p);
        Ok(true)
    }

    pub fn contains(&self, p: &GraphPoint) -> bool {
        self.seen.contains(p)
    }

    pub fn points(&self) -> &[GraphPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn field(&self) -> FieldDesc {
        self.field
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn check(&self, ordering: &BasisOrdering) -> Result<(), KernelError> {
        if !ordering.has_t {
            return Err(KernelError::MissingT);
        }
        if ordering.point_arity() != self.arity {
            return Err(KernelError::ArityMismatch {
                expected: ordering.point_arity(),
                got: self.arity,
            });
        }
        Ok(())
    }
}

/// Dense matrix of exact scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalMatrix {
    field: FieldDesc,
    ncols: usize,
    rows: Vec<Vec<Scalar>>,
}

impl EvalMatrix {
    pub fn from_rows(field: FieldDesc, ncols: usize, rows: Vec<Vec<Scalar>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Self { field, ncols, rows }
    }

    pub fn rows(&self) -> &[Vec<Scalar>] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn field(&self) -> FieldDesc {
        self.field
    }

    /// `M v` (used to check kernel membership).
    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(v)
                    .fold(Scalar::zero(self.field), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// Exact rank and a kernel basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankKernel {
    pub rank: usize,
    /// One vector per free column, normalized to 1 in that column.
    pub kernel: Vec<Vec<Scalar>>,
}

/// Result of the minimal-index search on a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CValue {
    /// Smallest `n` whose basis prefix has a nontrivial kernel, with the
    /// (unique up to scale) witness normalized to leading coefficient 1.
    Bounded { n: usize, witness: Poly },
    /// No vanishing polynomial within the searched prefix.
    Unbounded,
}

impl CValue {
    pub fn n(&self) -> Option<usize> {
        match self {
            CValue::Bounded { n, .. } => Some(*n),
            CValue::Unbounded => None,
        }
    }

    pub fn witness(&self) -> Option<&Poly> {
        match self {
            CValue::Bounded { witness, .. } => Some(witness),
            CValue::Unbounded => None,
        }
    }
}

/// Outcome of greedy point selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointSelection {
    Selected(Vec<GraphPoint>),
    Degenerate,
}

// ---------------------------------------------------------------------------
// Coefficient domains for fraction-free elimination.

/// An integral domain with exact division, as needed by Bareiss-style
/// elimination.
pub(crate) trait Domain {
    type Elem: Clone;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// `a / b`, where `b` is known to divide `a`.
    fn exact_div(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Removes a common factor from the two multipliers of a cross-elimination.
    fn reduce_pair(&self, a: Self::Elem, b: Self::Elem) -> (Self::Elem, Self::Elem) {
        (a, b)
    }
    /// Divides the concatenation `u ++ w` by its content.
    fn normalize(&self, _u: &mut [Self::Elem], _w: &mut [Self::Elem]) {}
}

pub(crate) struct Integers;

impl Domain for Integers {
    type Elem = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn exact_div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        let (q, r) = a.div_rem(b);
        assert!(r.is_zero(), "inexact division in fraction-free elimination");
        q
    }
    fn reduce_pair(&self, a: BigInt, b: BigInt) -> (BigInt, BigInt) {
        let g = a.gcd(&b);
        if g.is_one() {
            (a, b)
        } else {
            (a / &g, b / &g)
        }
    }
    fn normalize(&self, u: &mut [BigInt], w: &mut [BigInt]) {
        let mut g = BigInt::zero();
        for x in u.iter().chain(w.iter()) {
            if !x.is_zero() {
                g = g.gcd(x);
                if g.is_one() {
                    return;
                }
            }
        }
        if g.is_zero() {
            return;
        }
        for x in u.iter_mut().chain(w.iter_mut()) {
            *x = &*x / &g;
        }
    }
}

pub(crate) struct Residues(pub u64);

impl Domain for Residues {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.0
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.0 - b) % self.0
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.0 - a) % self.0
    }
    fn exact_div(&self, a: &u64, b: &u64) -> u64 {
        a * inv_mod(*b, self.0) % self.0
    }
}

/// Polynomials of one ordering; used for determinants with polynomial entries.
pub(crate) struct PolyRing {
    pub ordering: BasisOrdering,
    pub field: FieldDesc,
}

impl Domain for PolyRing {
    type Elem = Poly;

    fn zero(&self) -> Poly {
        Poly::zero(self.ordering, self.field)
    }
    fn one(&self) -> Poly {
        Poly::constant(self.ordering, Scalar::one(self.field))
    }
    fn is_zero(&self, a: &Poly) -> bool {
        a.is_zero()
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        a.try_mul(b).expect("polynomial product within ordering")
    }
    fn sub(&self, a: &Poly, b: &Poly) -> Poly {
        a.try_sub(b).expect("same ordering")
    }
    fn neg(&self, a: &Poly) -> Poly {
        a.neg()
    }
    fn exact_div(&self, a: &Poly, b: &Poly) -> Poly {
        a.exact_div(b).expect("exact polynomial division in elimination")
    }
}

/// Determinant by Bareiss elimination with row pivoting.
pub(crate) fn bareiss_det<D: Domain>(d: &D, mut a: Vec<Vec<D::Elem>>) -> D::Elem {
    let n = a.len();
    if n == 0 {
        return d.one();
    }
    let mut negate = false;
    let mut prev = d.one();
    for k in 0..n - 1 {
        if d.is_zero(&a[k][k]) {
            match (k + 1..n).find(|&i| !d.is_zero(&a[i][k])) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return d.zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = d.sub(&d.mul(&a[i][j], &a[k][k]), &d.mul(&a[i][k], &a[k][j]));
                a[i][j] = d.exact_div(&num, &prev);
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        d.neg(&det)
    } else {
        det
    }
}

/// `delta_i = (-1)^i det(M without column i)` for one-based `i`, where `M`
/// has one more column than rows.
pub(crate) fn signed_minors<D: Domain>(d: &D, rows: &[Vec<D::Elem>], ncols: usize) -> Vec<D::Elem> {
    (0..ncols)
        .map(|skip| {
            let minor: Vec<Vec<D::Elem>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let det = bareiss_det(d, minor);
            // one-based index skip + 1 is odd when skip is even
            if skip % 2 == 0 {
                d.neg(&det)
            } else {
                det
            }
        })
        .collect()
}

/// Fraction-free Gauss-Jordan. Returns pivot columns and the common pivot
/// value; afterwards every pivot row has that value in its pivot column and
/// zeros in the other pivot columns.
pub(crate) fn fraction_free_rref<D: Domain>(d: &D, a: &mut [Vec<D::Elem>], ncols: usize) -> (Vec<usize>, D::Elem) {
    let nrows = a.len();
    let mut prev = d.one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(i) = (r..nrows).find(|&i| !d.is_zero(&a[i][c])) else {
            continue;
        };
        a.swap(r, i);
        let p = a[r][c].clone();
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            for (x, pr) in row.iter_mut().zip(&pivot_row) {
                let num = d.sub(&d.mul(&p, x), &d.mul(&f, pr));
                *x = d.exact_div(&num, &prev);
            }
        }
        prev = p;
        pivots.push(c);
        r += 1;
    }
    (pivots, prev)
}

struct Reduced<E> {
    pivot: usize,
    vec: Vec<E>,
    combo: Vec<E>,
}

/// A growing list of vectors kept in echelon form. Each pushed vector is
/// either independent of the earlier ones (and joins the basis) or yields an
/// explicit dependency among all vectors pushed so far.
pub(crate) struct IncrementalSpace<D: Domain> {
    dom: D,
    basis: Vec<Reduced<D::Elem>>,
    pushed: usize,
}

impl<D: Domain> IncrementalSpace<D> {
    pub fn new(dom: D) -> Self {
        Self {
            dom,
            basis: Vec::new(),
            pushed: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Multiplies coordinate `i` of every stored vector by `f`, as if that
    /// coordinate had been scaled in all vectors pushed so far.
    pub fn scale_coordinate(&mut self, i: usize, f: &D::Elem) {
        for b in &mut self.basis {
            b.vec[i] = self.dom.mul(&b.vec[i], f);
        }
    }

    /// Returns `None` if `v` is independent, otherwise coefficients `w` (one
    /// per pushed vector, including `v`) with `sum w_i v_i = 0` and the last
    /// coefficient nonzero. Dependent vectors are not stored.
    pub fn push(&mut self, mut v: Vec<D::Elem>) -> Option<Vec<D::Elem>> {
        let d = &self.dom;
        let idx = self.pushed;
        self.pushed += 1;
        let mut combo = vec![d.zero(); idx + 1];
        combo[idx] = d.one();
        for b in &self.basis {
            if d.is_zero(&v[b.pivot]) {
                continue;
            }
            let (a, c) = d.reduce_pair(b.vec[b.pivot].clone(), v[b.pivot].clone());
            for (x, y) in v.iter_mut().zip(&b.vec) {
                if d.is_zero(y) {
                    *x = d.mul(&a, x);
                } else {
                    *x = d.sub(&d.mul(&a, x), &d.mul(&c, y));
                }
            }
            for (k, x) in combo.iter_mut().enumerate() {
                match b.combo.get(k) {
                    Some(y) if !d.is_zero(y) => *x = d.sub(&d.mul(&a, x), &d.mul(&c, y)),
                    _ => *x = d.mul(&a, x),
                }
            }
            d.normalize(&mut v, &mut combo);
        }
        match v.iter().position(|x| !d.is_zero(x)) {
            None => {
                self.pushed -= 1;
                Some(combo)
            }
            Some(pivot) => {
                self.basis.push(Reduced { pivot, vec: v, combo });
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Conversions between scalar matrices and elimination domains.

fn lcm_of_denominators<'a>(xs: impl Iterator<Item = &'a Scalar>) -> BigInt {
    xs.fold(BigInt::one(), |acc, s| {
        acc.lcm(s.as_rational().expect("rational scalar").denom())
    })
}

/// Scales a rational vector to integers; returns the integers and the factor.
fn to_integers(v: &[Scalar]) -> (Vec<BigInt>, BigInt) {
    let l = lcm_of_denominators(v.iter());
    let ints = v
        .iter()
        .map(|s| {
            let r = s.as_rational().expect("rational scalar");
            r.numer() * (&l / r.denom())
        })
        .collect();
    (ints, l)
}

fn to_residues(v: &[Scalar]) -> Vec<u64> {
    v.iter().map(|s| s.residue().expect("residue scalar")).collect()
}

fn residue_scalar(p: u64, v: u64) -> Scalar {
    Scalar::Residue { value: v, modulus: p }
}

fn int_scalar(v: &BigInt) -> Scalar {
    Scalar::from_bigint(FieldDesc::Rationals, v)
}

// ---------------------------------------------------------------------------
// Public operations.

/// Values of `monomials` at the graph point.
pub fn graph_row(monomials: &[Monomial], p: &GraphPoint, field: FieldDesc) -> Vec<Scalar> {
    let coords = p.coords();
    let mut powers: Vec<Vec<Scalar>> = coords.iter().map(|c| vec![Scalar::one(field), c.clone()]).collect();
    monomials
        .iter()
        .map(|m| {
            m.exponents()
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .fold(Scalar::one(field), |acc, (var, &e)| {
                    let table = &mut powers[var];
                    while table.len() <= e as usize {
                        let next = table.last().unwrap() * &coords[var];
                        table.push(next);
                    }
                    acc * table[e as usize].clone()
                })
        })
        .collect()
}

/// `|sample| x n` matrix of the first `n` basis monomials at the sample.
pub fn build_matrix(sample: &GraphSample, ordering: &BasisOrdering, n: usize) -> Result<EvalMatrix, KernelError> {
    sample.check(ordering)?;
    let monomials = ordering.enumerate(n);
    let rows = sample
        .points()
        .iter()
        .map(|p| graph_row(&monomials, p, sample.field()))
        .collect();
    Ok(EvalMatrix::from_rows(sample.field(), monomials.len(), rows))
}

/// Exact rank and kernel basis by fraction-free Gauss-Jordan elimination.
pub fn rank_kernel(mat: &EvalMatrix) -> RankKernel {
    let n = mat.ncols();
    match mat.field() {
        FieldDesc::Rationals => {
            let mut a: Vec<Vec<BigInt>> = mat.rows().iter().map(|r| to_integers(r).0).collect();
            let (pivots, det) = fraction_free_rref(&Integers, &mut a, n);
            let kernel = kernel_from_rref(&a, &pivots, n, FieldDesc::Rationals, |v| {
                Scalar::from_ratio(FieldDesc::Rationals, v, &det).expect("nonzero pivot")
            });
            RankKernel {
                rank: pivots.len(),
                kernel,
            }
        }
        FieldDesc::PrimeField(p) => {
            let mut a: Vec<Vec<u64>> = mat.rows().iter().map(|r| to_residues(r)).collect();
            let (pivots, det) = fraction_free_rref(&Residues(p), &mut a, n);
            let det_inv = inv_mod(det, p);
            let kernel = kernel_from_rref(&a, &pivots, n, mat.field(), |v| residue_scalar(p, v * det_inv % p));
            RankKernel {
                rank: pivots.len(),
                kernel,
            }
        }
    }
}

/// Kernel basis from a fraction-free reduced form: for free column `f`,
/// `v_f = d` and `v_{pivot(r)} = -a[r][f]`, all divided by `d`. `over_det`
/// performs that division.
fn kernel_from_rref<E>(
    a: &[Vec<E>],
    pivots: &[usize],
    ncols: usize,
    field: FieldDesc,
    over_det: impl Fn(&E) -> Scalar,
) -> Vec<Vec<Scalar>> {
    let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
    (0..ncols)
        .filter(|c| !pivot_set.contains(c))
        .map(|f| {
            let mut v = vec![Scalar::zero(field); ncols];
            v[f] = Scalar::one(field);
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -over_det(&a[r][f]);
            }
            v
        })
        .collect()
}

/// Signed maximal minors `(delta_1, ..., delta_n)` of an `(n-1) x n` matrix.
/// The vector lies in the kernel and is nonzero exactly when the rank is
/// `n - 1`.
pub fn cofactor_vector(mat: &EvalMatrix) -> Result<Vec<Scalar>, KernelError> {
    let n = mat.ncols();
    if mat.nrows() + 1 != n {
        return Err(KernelError::ShapeMismatch {
            rows: mat.nrows(),
            cols: n,
        });
    }
    Ok(match mat.field() {
        FieldDesc::Rationals => {
            let (rows, scales): (Vec<_>, Vec<_>) = mat.rows().iter().map(|r| to_integers(r)).unzip();
            let scale: BigInt = scales.iter().product();
            signed_minors(&Integers, &rows, n)
                .iter()
                .map(|v| Scalar::from_ratio(FieldDesc::Rationals, v, &scale).expect("nonzero scale"))
                .collect()
        }
        FieldDesc::PrimeField(p) => {
            let rows: Vec<Vec<u64>> = mat.rows().iter().map(|r| to_residues(r)).collect();
            signed_minors(&Residues(p), &rows, n)
                .into_iter()
                .map(|v| residue_scalar(p, v))
                .collect()
        }
    })
}

/// Signed maximal minors of an `(n-1) x n` matrix of polynomials.
pub fn poly_cofactor_vector(
    rows: &[Vec<Poly>],
    ordering: BasisOrdering,
    field: FieldDesc,
) -> Result<Vec<Poly>, KernelError> {
    let n = rows.len() + 1;
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(KernelError::ShapeMismatch {
            rows: rows.len(),
            cols: bad.len(),
        });
    }
    Ok(signed_minors(&PolyRing { ordering, field }, rows, n))
}

/// `P = sum_i delta_i e_i` built from the matrix of the first `n` basis
/// monomials at `points` (which must number `n - 1`). It vanishes wherever
/// the whole graph is annihilated at index `n`, and is zero iff the points
/// give rank below `n - 1`.
pub fn cofactor_polynomial(
    points: &[GraphPoint],
    ordering: &BasisOrdering,
    field: FieldDesc,
    n: usize,
) -> Result<Poly, KernelError> {
    if n == 0 {
        return Err(KernelError::EmptyPrefix);
    }
    let monomials = ordering.enumerate(n);
    let rows = points.iter().map(|p| graph_row(&monomials, p, field)).collect();
    let delta = cofactor_vector(&EvalMatrix::from_rows(field, monomials.len(), rows))?;
    Ok(Poly::from_basis_coeffs(*ordering, field, &delta))
}

/// Greedy scan for `n - 1` sample points whose evaluation rows on the first
/// `n` basis monomials are independent. The first rank-increasing point wins.
pub fn select_points(sample: &GraphSample, ordering: &BasisOrdering, n: usize) -> Result<PointSelection, KernelError> {
    sample.check(ordering)?;
    if n == 0 {
        return Err(KernelError::EmptyPrefix);
    }
    let want = n - 1;
    let monomials = ordering.enumerate(n);
    let mut chosen = Vec::with_capacity(want);
    let mut accept = |indep: bool, p: &GraphPoint| {
        if indep {
            chosen.push(p.clone());
        }
    };
    match sample.field() {
        FieldDesc::Rationals => {
            let mut space = IncrementalSpace::new(Integers);
            for p in sample.points() {
                if space.rank() == want {
                    break;
                }
                let row = to_integers(&graph_row(&monomials, p, sample.field())).0;
                accept(space.push(row).is_none(), p);
            }
        }
        FieldDesc::PrimeField(q) => {
            let mut space = IncrementalSpace::new(Residues(q));
            for p in sample.points() {
                if space.rank() == want {
                    break;
                }
                let row = to_residues(&graph_row(&monomials, p, sample.field()));
                accept(space.push(row).is_none(), p);
            }
        }
    }
    Ok(if chosen.len() == want {
        PointSelection::Selected(chosen)
    } else {
        PointSelection::Degenerate
    })
}

/// `c(F)` for a finite sample: the smallest `n <= n_max` such that some
/// nonzero combination of `e_1..e_n` vanishes on every sample pair.
///
/// Columns are added one at a time to an incremental echelon form, so the
/// search costs a single elimination. Over the rationals each row carries
/// its own integer scale, grown on demand as new columns bring new
/// denominators; row scaling leaves column dependencies unchanged.
pub fn c_of_sample(sample: &GraphSample, ordering: &BasisOrdering, n_max: usize) -> Result<CValue, KernelError> {
    sample.check(ordering)?;
    if n_max == 0 {
        return Err(KernelError::EmptyPrefix);
    }
    let field = sample.field();
    let coords: Vec<Vec<Scalar>> = sample.points().iter().map(GraphPoint::coords).collect();
    let column = |m: &Monomial| -> Vec<Scalar> { coords.iter().map(|c| m.eval(c, field)).collect() };

    let found: Option<Vec<Scalar>> = match field {
        FieldDesc::Rationals => {
            let mut space = IncrementalSpace::new(Integers);
            let mut row_scale = vec![BigInt::one(); coords.len()];
            let mut hit = None;
            for m in ordering.iter().take(n_max) {
                let mut col = Vec::with_capacity(coords.len());
                for (i, s) in column(&m).iter().enumerate() {
                    let r = s.as_rational().expect("rational scalar");
                    if !row_scale[i].is_multiple_of(r.denom()) {
                        let grown = row_scale[i].lcm(r.denom());
                        space.scale_coordinate(i, &(&grown / &row_scale[i]));
                        row_scale[i] = grown;
                    }
                    col.push(r.numer() * (&row_scale[i] / r.denom()));
                }
                if let Some(w) = space.push(col) {
                    hit = Some(w.iter().map(int_scalar).collect());
                    break;
                }
            }
            hit
        }
        FieldDesc::PrimeField(p) => {
            let mut space = IncrementalSpace::new(Residues(p));
            let mut hit = None;
            for m in ordering.iter().take(n_max) {
                if let Some(w) = space.push(to_residues(&column(&m))) {
                    hit = Some(w.into_iter().map(|v| residue_scalar(p, v)).collect());
                    break;
                }
            }
            hit
        }
    };
    Ok(match found {
        None => CValue::Unbounded,
        Some(coeffs) => {
            let lead_inv = coeffs
                .last()
                .expect("nonempty")
                .inv()
                .expect("last coefficient nonzero");
            let normalized: Vec<Scalar> = coeffs.iter().map(|c| c * &lead_inv).collect();
            CValue::Bounded {
                n: normalized.len(),
                witness: Poly::from_basis_coeffs(*ordering, field, &normalized),
            }
        }
    })
}

/// Scales a nonzero vector so its last nonzero entry is 1.
pub fn normalize_last(v: &[Scalar]) -> Option<Vec<Scalar>> {
    let lead = v.iter().rev().find(|s| !s.is_zero())?;
    let inv = lead.inv().ok()?;
    Some(v.iter().map(|s| s * &inv).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: FieldDesc = FieldDesc::Rationals;

    fn q(v: i64) -> Scalar {
        Scalar::from_i64(Q, v)
    }

    fn qrow(vs: &[i64]) -> Vec<Scalar> {
        vs.iter().map(|&v| q(v)).collect()
    }

    fn gp(x: &[i64], t: i64) -> GraphPoint {
        GraphPoint::new(qrow(x), q(t))
    }

    fn sample(points: &[(i64, i64)]) -> GraphSample {
        GraphSample::from_points(Q, 1, points.iter().map(|&(x, t)| gp(&[x], t))).unwrap()
    }

    fn graph1() -> BasisOrdering {
        BasisOrdering::graph(1, Some(1))
    }

    #[test]
    fn build_matrix_examples() {
        let m = build_matrix(&sample(&[(1, 1), (2, 2)]), &graph1(), 3).unwrap();
        assert_eq!(m.rows(), &[qrow(&[1, 1, 1]), qrow(&[1, 2, 2])]);
        let m = build_matrix(&sample(&[]), &graph1(), 3).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (0, 3));
        let m = build_matrix(&sample(&[(0, 0)]), &graph1(), 3).unwrap();
        assert_eq!(m.rows(), &[qrow(&[1, 0, 0])]);
        let two = GraphSample::new(Q, 2);
        assert_eq!(
            build_matrix(&two, &graph1(), 3),
            Err(KernelError::ArityMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn duplicate_pairs_are_dropped() {
        let mut s = sample(&[(1, 1)]);
        assert!(!s.push(gp(&[1], 1)).unwrap());
        assert!(s.push(gp(&[1], 2)).unwrap());
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn rank_kernel_examples() {
        let m = EvalMatrix::from_rows(Q, 3, vec![qrow(&[1, 1, 1]), qrow(&[1, 2, 2])]);
        let rk = rank_kernel(&m);
        assert_eq!(rk.rank, 2);
        assert_eq!(rk.kernel, vec![qrow(&[0, -1, 1])]);

        let id = EvalMatrix::from_rows(Q, 3, vec![qrow(&[1, 0, 0]), qrow(&[0, 1, 0]), qrow(&[0, 0, 1])]);
        let rk = rank_kernel(&id);
        assert_eq!((rk.rank, rk.kernel.len()), (3, 0));

        let z = EvalMatrix::from_rows(Q, 3, vec![qrow(&[0, 0, 0]); 2]);
        let rk = rank_kernel(&z);
        assert_eq!((rk.rank, rk.kernel.len()), (0, 3));
    }

    #[test]
    fn rank_kernel_with_fractions() {
        let half = Scalar::parse(Q, "1/2").unwrap();
        let third = Scalar::parse(Q, "1/3").unwrap();
        let m = EvalMatrix::from_rows(
            Q,
            3,
            vec![vec![half.clone(), third.clone(), q(1)], vec![q(1), q(2), q(3)]],
        );
        let rk = rank_kernel(&m);
        assert_eq!(rk.rank, 2);
        for v in &rk.kernel {
            assert!(m.apply(v).iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn cofactor_examples() {
        let m = EvalMatrix::from_rows(Q, 3, vec![qrow(&[1, 1, 1]), qrow(&[1, 2, 2])]);
        assert_eq!(cofactor_vector(&m).unwrap(), qrow(&[0, 1, -1]));
        let m = EvalMatrix::from_rows(Q, 2, vec![qrow(&[5, 7])]);
        assert_eq!(cofactor_vector(&m).unwrap(), qrow(&[-7, 5]));
        let m = EvalMatrix::from_rows(Q, 3, vec![qrow(&[1, 1, 1]); 2]);
        assert_eq!(cofactor_vector(&m).unwrap(), qrow(&[0, 0, 0]));
        let m = EvalMatrix::from_rows(Q, 2, vec![qrow(&[1, 1]); 2]);
        assert_eq!(
            cofactor_vector(&m),
            Err(KernelError::ShapeMismatch { rows: 2, cols: 2 })
        );
    }

    #[test]
    fn cofactor_undoes_row_scaling() {
        let r = |s: &str| Scalar::parse(Q, s).unwrap();
        let m = EvalMatrix::from_rows(
            Q,
            3,
            vec![vec![r("1/2"), r("1/3"), r("1")], vec![r("2/5"), r("1"), r("-3/7")]],
        );
        // delta_1 = -(1/3 * -3/7 - 1 * 1) = 8/7
        assert_eq!(cofactor_vector(&m).unwrap()[0], r("8/7"));
    }

    #[test]
    fn select_points_examples() {
        let s = sample(&[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(
            select_points(&s, &graph1(), 3).unwrap(),
            PointSelection::Selected(vec![gp(&[0], 0), gp(&[1], 1)])
        );
        assert_eq!(
            select_points(&s, &graph1(), 1).unwrap(),
            PointSelection::Selected(vec![])
        );
        let one = sample(&[(3, 3)]);
        assert_eq!(select_points(&one, &graph1(), 3).unwrap(), PointSelection::Degenerate);
    }

    #[test]
    fn select_points_skips_redundant_rows() {
        // On the prefix (1, x1, x2) the second pair repeats the first row.
        let ord = BasisOrdering::graph(2, Some(1));
        let pts = [gp(&[1, 1], 0), gp(&[1, 1], 5), gp(&[2, 3], 0)];
        let s = GraphSample::from_points(Q, 2, pts.clone()).unwrap();
        assert_eq!(
            select_points(&s, &ord, 3).unwrap(),
            PointSelection::Selected(vec![pts[0].clone(), pts[2].clone()])
        );
    }

    #[test]
    fn c_of_sample_examples() {
        let ord = graph1();
        let c = c_of_sample(&sample(&[(0, 0), (1, 1), (2, 2)]), &ord, 10).unwrap();
        assert_eq!(c.n(), Some(3));
        assert_eq!(c.witness().unwrap().serialize(), "t - x1");

        let c = c_of_sample(&sample(&[(0, 0)]), &ord, 10).unwrap();
        assert_eq!(c.n(), Some(2));
        assert_eq!(c.witness().unwrap().serialize(), "x1");

        let c = c_of_sample(&sample(&[]), &ord, 10).unwrap();
        assert_eq!(c.n(), Some(1));
        assert_eq!(c.witness().unwrap().serialize(), "1");

        let c = c_of_sample(&sample(&[(0, 0), (1, 1), (2, 2)]), &ord, 2).unwrap();
        assert_eq!(c, CValue::Unbounded);
    }

    #[test]
    fn c_of_sample_rational_values() {
        // f(x) = 1/(1+x^2): annihilated by x^2 t + t - 1, leading index 7
        let ord = graph1();
        let pts = (-4..=4).map(|x| {
            let v = Scalar::from_ratio(Q, &BigInt::from(1), &BigInt::from(1 + x * x)).unwrap();
            GraphPoint::new(vec![q(x)], v)
        });
        let s = GraphSample::from_points(Q, 1, pts).unwrap();
        let c = c_of_sample(&s, &ord, 50).unwrap();
        assert_eq!(c.n(), Some(7));
        assert_eq!(c.witness().unwrap().serialize(), "x1^2*t + t - 1");
    }

    #[test]
    fn poly_cofactors_match_scalar_cofactors() {
        let ord = BasisOrdering::plain(0, 1);
        let y = Poly::var(ord, Q, 0);
        let one = Poly::constant(ord, q(1));
        let rows = vec![
            vec![one.clone(), y.clone(), y.pow(2).unwrap()],
            vec![y.clone(), one.clone(), y.clone()],
        ];
        let delta = poly_cofactor_vector(&rows, ord, Q).unwrap();
        for yv in -3..=3 {
            let at = |p: &Poly| p.eval(&[q(yv)]).unwrap();
            let m = EvalMatrix::from_rows(Q, 3, rows.iter().map(|r| r.iter().map(at).collect()).collect());
            let expect = cofactor_vector(&m).unwrap();
            assert_eq!(delta.iter().map(at).collect::<Vec<_>>(), expect);
        }
    }

    // Reference determinant by cofactor expansion along the first row.
    fn laplace_det(a: &[Vec<u64>], p: u64) -> u64 {
        let n = a.len();
        if n == 0 {
            return 1;
        }
        let mut acc = 0u64;
        for j in 0..n {
            if a[0][j] == 0 {
                continue;
            }
            let minor: Vec<Vec<u64>> = a[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
                .collect();
            let term = a[0][j] * laplace_det(&minor, p) % p;
            acc = if j % 2 == 0 {
                (acc + term) % p
            } else {
                (acc + p - term) % p
            };
        }
        acc
    }

    const P: u64 = 10007;

    /// Random `(n-1) x n` matrix over F_P of rank at most `r`.
    fn low_rank(n: usize, r: usize, seed: &[u64]) -> Vec<Vec<u64>> {
        let mut it = seed.iter().cycle().copied();
        let left: Vec<Vec<u64>> = (0..n - 1)
            .map(|_| (0..r).map(|_| it.next().unwrap() % P).collect())
            .collect();
        let right: Vec<Vec<u64>> = (0..r)
            .map(|_| (0..n).map(|_| it.next().unwrap() % P).collect())
            .collect();
        left.iter()
            .map(|row| {
                (0..n)
                    .map(|j| (0..r).fold(0, |acc, k| (acc + row[k] * right[k][j]) % P))
                    .collect()
            })
            .collect()
    }

    fn to_matrix(a: &[Vec<u64>], n: usize) -> EvalMatrix {
        let f = FieldDesc::PrimeField(P);
        EvalMatrix::from_rows(
            f,
            n,
            a.iter()
                .map(|r| r.iter().map(|&v| residue_scalar(P, v)).collect())
                .collect(),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn cofactors_agree_with_laplace_and_kernel(
            n in 1usize..=9,
            deficit in 0usize..3,
            seed in prop::collection::vec(any::<u64>(), 90),
        ) {
            let r = (n - 1).saturating_sub(deficit);
            let a = low_rank(n, r, &seed);
            let m = to_matrix(&a, n);
            let delta = cofactor_vector(&m).unwrap();
            for (i, d) in delta.iter().enumerate() {
                let minor: Vec<Vec<u64>> = a
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect())
                    .collect();
                let det = laplace_det(&minor, P);
                let want = if i % 2 == 0 { (P - det) % P } else { det };
                prop_assert_eq!(d.residue(), Some(want));
            }
            prop_assert!(m.apply(&delta).iter().all(Scalar::is_zero));
            let rk = rank_kernel(&m);
            let nonzero = delta.iter().any(|d| !d.is_zero());
            prop_assert_eq!(nonzero, rk.rank == n - 1);
            if rk.rank == n - 1 {
                prop_assert_eq!(rk.kernel.len(), 1);
                prop_assert_eq!(normalize_last(&delta), normalize_last(&rk.kernel[0]));
            }
            for v in &rk.kernel {
                prop_assert!(m.apply(v).iter().all(Scalar::is_zero));
            }
        }

        #[test]
        fn rational_kernel_is_exact(rows in prop::collection::vec(prop::collection::vec((-9i64..=9, 1i64..=5), 5), 0..6)) {
            let rows: Vec<Vec<Scalar>> = rows
                .iter()
                .map(|r| r.iter().map(|&(a, b)| Scalar::from_ratio(Q, &a.into(), &b.into()).unwrap()).collect())
                .collect();
            let m = EvalMatrix::from_rows(Q, 5, rows);
            let rk = rank_kernel(&m);
            prop_assert_eq!(rk.rank + rk.kernel.len(), 5);
            for v in &rk.kernel {
                prop_assert!(m.apply(v).iter().all(Scalar::is_zero));
            }
        }
    }

    /// Graph of `(a0 + a1 x + a2 x^2) / (b0 + b1 x)` at the given abscissae.
    fn rational_graph(num: &[i64; 3], den: &[i64; 2], xs: &[i64]) -> Vec<GraphPoint> {
        xs.iter()
            .filter_map(|&x| {
                let d = den[0] + den[1] * x;
                if d == 0 {
                    return None;
                }
                let n = num[0] + num[1] * x + num[2] * x * x;
                Some(GraphPoint::new(
                    vec![q(x)],
                    Scalar::from_ratio(Q, &n.into(), &d.into()).unwrap(),
                ))
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn c_is_monotone_and_unique_at_c(
            num in prop::array::uniform3(-5i64..=5),
            den in prop::array::uniform2(-5i64..=5),
            xs in prop::collection::vec(-30i64..=30, 1..14),
            cut in 0usize..14,
        ) {
            prop_assume!(den != [0, 0]);
            let ord = graph1();
            let pts = rational_graph(&num, &den, &xs);
            let big = GraphSample::from_points(Q, 1, pts.clone()).unwrap();
            let small = GraphSample::from_points(Q, 1, pts.into_iter().take(cut)).unwrap();
            let c_big = c_of_sample(&big, &ord, 40).unwrap();
            let c_small = c_of_sample(&small, &ord, 40).unwrap();
            let (Some(nb), Some(ns)) = (c_big.n(), c_small.n()) else {
                return Err(TestCaseError::fail("graph of degree (2,1) must be annihilated within 40"));
            };
            prop_assert!(ns <= nb);

            let w = c_big.witness().unwrap();
            prop_assert_eq!(w.leading_index().unwrap(), nb);
            for p in big.points() {
                prop_assert!(w.eval(&p.coords()).unwrap().is_zero());
            }
            let rk = rank_kernel(&build_matrix(&big, &ord, nb).unwrap());
            prop_assert_eq!(rk.kernel.len(), 1);
        }

        #[test]
        fn selected_points_reproduce_an_annihilator(
            num in prop::array::uniform3(-5i64..=5),
            den in prop::array::uniform2(-5i64..=5),
            xs in prop::collection::vec(-30i64..=30, 1..14),
        ) {
            prop_assume!(den != [0, 0]);
            let ord = graph1();
            let s = GraphSample::from_points(Q, 1, rational_graph(&num, &den, &xs)).unwrap();
            let n = c_of_sample(&s, &ord, 40).unwrap().n().unwrap();
            let PointSelection::Selected(chosen) = select_points(&s, &ord, n).unwrap() else {
                return Err(TestCaseError::fail("rank n-1 is attained at n = c"));
            };
            prop_assert_eq!(chosen.len(), n - 1);
            let p = cofactor_polynomial(&chosen, &ord, Q, n).unwrap();
            prop_assert!(!p.is_zero());
            for pt in s.points() {
                prop_assert!(p.eval(&pt.coords()).unwrap().is_zero());
            }
        }
    }
}
