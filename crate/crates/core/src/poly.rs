//! Sparse multivariate polynomials over an enumerated monomial basis.
//!
//! Variables are ordered `x1..xm, y1..yk, t`. The basis `e_1, e_2, ...` lists
//! admissible monomials by ascending total degree; inside a degree block the
//! exponent vectors are sorted lexicographically with the larger exponent on
//! an earlier variable first (graded lex, `x1 > x2 > ... > t`). A cap on the
//! exponent of `t` removes monomials and the remaining ones are renumbered.
//! For one `x` and `t` with cap 1 the basis starts `1, x, t, x^2, xt, x^3, x^2t`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{self, Expr, ExprError, Scope, Var};
use crate::scalar::{FieldDesc, Scalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("polynomials live in different orderings or fields")]
    OrderingMismatch,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("monomial exceeds the t-degree cap")]
    CapExceeded,
    #[error("polynomial is not exactly divisible")]
    NotDivisible,
    #[error("polynomial involves more than one variable")]
    NotUnivariate,
    #[error(transparent)]
    Syntax(#[from] ExprError),
    #[error("not a polynomial at position {pos}: {msg}")]
    NotPolynomial { pos: usize, msg: String },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Variable layout and `t` cap of a polynomial space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisOrdering {
    pub num_x_vars: usize,
    pub num_y_vars: usize,
    pub has_t: bool,
    /// Maximum exponent of `t`; `None` is unbounded. Ignored without `t`.
    pub t_cap: Option<u32>,
}

impl BasisOrdering {
    pub fn new(num_x_vars: usize, num_y_vars: usize, has_t: bool, t_cap: Option<u32>) -> Self {
        Self {
            num_x_vars,
            num_y_vars,
            has_t,
            t_cap: if has_t { t_cap } else { None },
        }
    }

    /// Graph space over `x1..xm` and `t`.
    pub fn graph(num_x_vars: usize, t_cap: Option<u32>) -> Self {
        Self::new(num_x_vars, 0, true, t_cap)
    }

    /// Polynomials in `x` and `y` only.
    pub fn plain(num_x_vars: usize, num_y_vars: usize) -> Self {
        Self::new(num_x_vars, num_y_vars, false, None)
    }

    pub fn num_vars(&self) -> usize {
        self.num_x_vars + self.num_y_vars + usize::from(self.has_t)
    }

    /// Number of coordinates of a point (everything except `t`).
    pub fn point_arity(&self) -> usize {
        self.num_x_vars + self.num_y_vars
    }

    pub fn t_index(&self) -> Option<usize> {
        self.has_t.then(|| self.point_arity())
    }

    pub fn var_name(&self, i: usize) -> String {
        if i < self.num_x_vars {
            format!("x{}", i + 1)
        } else if i < self.point_arity() {
            format!("y{}", i - self.num_x_vars + 1)
        } else {
            "t".to_string()
        }
    }

    fn var_position(&self, v: Var) -> Option<usize> {
        match v {
            Var::X(i) if i < self.num_x_vars => Some(i),
            Var::Y(i) if i < self.num_y_vars => Some(self.num_x_vars + i),
            Var::T => self.t_index(),
            _ => None,
        }
    }

    pub fn scope(&self) -> Scope {
        Scope {
            num_x: self.num_x_vars,
            num_y: self.num_y_vars,
            allow_t: self.has_t,
        }
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        if m.0.len() != self.num_vars() {
            return false;
        }
        match (self.t_index(), self.t_cap) {
            (Some(ti), Some(cap)) => m.0[ti] <= cap,
            _ => true,
        }
    }

    /// Highest total degree with any admissible monomial, if finite.
    fn max_degree(&self) -> Option<u32> {
        let free = self.point_arity();
        if free > 0 {
            None
        } else if self.has_t {
            self.t_cap
        } else {
            Some(0)
        }
    }

    /// The basis in enumeration order (finite only for variable-free spaces).
    pub fn iter(&self) -> BasisIter {
        BasisIter {
            ordering: *self,
            degree: 0,
            block: Vec::new(),
            at: 0,
        }
    }

    /// The first `count` basis monomials (fewer if the basis is finite).
    pub fn enumerate(&self, count: usize) -> Vec<Monomial> {
        self.iter().take(count).collect()
    }

    /// Number of admissible exponent vectors over variables `start..` with
    /// total degree `deg`.
    fn count_tail(&self, start: usize, deg: u32) -> u128 {
        let nv = self.num_vars();
        if start >= nv {
            return u128::from(deg == 0);
        }
        match self.t_index() {
            Some(_) => {
                let free = (nv - 1 - start) as u32;
                let cap = self.t_cap.unwrap_or(u32::MAX).min(deg);
                (0..=cap).map(|j| count_free(free, deg - j)).sum()
            }
            None => count_free((nv - start) as u32, deg),
        }
    }

    /// One-based basis index of `m`, or `None` if `m` is not admissible.
    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        if !self.admits(m) {
            return None;
        }
        let deg = m.degree();
        let mut idx: u128 = (0..deg).map(|d| self.count_tail(0, d)).sum();
        let mut rem = deg;
        let cap = self.t_cap.unwrap_or(u32::MAX);
        for (i, &e) in m.0.iter().enumerate() {
            for f in (e + 1)..=rem {
                if Some(i) == self.t_index() && f > cap {
                    break;
                }
                idx += self.count_tail(i + 1, rem - f);
            }
            rem -= e;
        }
        usize::try_from(idx + 1).ok()
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Exponent vectors of `vars` unconstrained variables with total degree `deg`.
fn count_free(vars: u32, deg: u32) -> u128 {
    if vars == 0 {
        u128::from(deg == 0)
    } else {
        binomial(deg + vars - 1, vars - 1)
    }
}

/// Iterator over the basis of a [`BasisOrdering`].
pub struct BasisIter {
    ordering: BasisOrdering,
    degree: u32,
    block: Vec<Monomial>,
    at: usize,
}

impl BasisIter {
    fn fill_block(&mut self) -> bool {
        loop {
            if let Some(max) = self.ordering.max_degree() {
                if self.degree > max {
                    return false;
                }
            }
            let mut block = Vec::new();
            let mut cur = vec![0u32; self.ordering.num_vars()];
            push_block(&mut block, &mut cur, 0, self.degree);
            block.retain(|m| self.ordering.admits(m));
            self.degree += 1;
            if !block.is_empty() {
                self.block = block;
                self.at = 0;
                return true;
            }
        }
    }
}

fn push_block(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, i: usize, rem: u32) {
    if i + 1 >= cur.len() {
        if cur.is_empty() {
            if rem == 0 {
                out.push(Monomial(Vec::new()));
            }
            return;
        }
        cur[i] = rem;
        out.push(Monomial(cur.clone()));
        return;
    }
    for e in (0..=rem).rev() {
        cur[i] = e;
        push_block(out, cur, i + 1, rem - e);
    }
    cur[i] = 0;
}

impl Iterator for BasisIter {
    type Item = Monomial;

    fn next(&mut self) -> Option<Monomial> {
        if self.at >= self.block.len() && !self.fill_block() {
            return None;
        }
        self.at += 1;
        Some(self.block[self.at - 1].clone())
    }
}

/// Exponent vector over the variables of an ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(num_vars: usize) -> Self {
        Monomial(vec![0; num_vars])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Value at `point` (one coordinate per variable).
    pub fn eval(&self, point: &[Scalar], field: FieldDesc) -> Scalar {
        self.0
            .iter()
            .zip(point)
            .filter(|(e, _)| **e > 0)
            .fold(Scalar::one(field), |acc, (e, v)| acc * v.pow(*e))
    }

    fn write(&self, ordering: &BasisOrdering, f: &mut impl fmt::Write) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_char('*')?;
            }
            first = false;
            f.write_str(&ordering.var_name(i))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Basis order: ascending index.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse polynomial; no stored coefficient is zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    ordering: BasisOrdering,
    field: FieldDesc,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero(ordering: BasisOrdering, field: FieldDesc) -> Self {
        Self {
            ordering,
            field,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ordering: BasisOrdering, c: Scalar) -> Self {
        let mut p = Self::zero(ordering, c.field());
        p.add_term(Monomial::one(ordering.num_vars()), c);
        p
    }

    pub fn monomial(ordering: BasisOrdering, m: Monomial, c: Scalar) -> Result<Self, PolyError> {
        if !ordering.admits(&m) {
            return Err(PolyError::CapExceeded);
        }
        let mut p = Self::zero(ordering, c.field());
        p.add_term(m, c);
        Ok(p)
    }

    /// The basis element `e_index` (one-based).
    pub fn basis_element(ordering: BasisOrdering, field: FieldDesc, index: usize) -> Option<Self> {
        let m = ordering.iter().nth(index.checked_sub(1)?)?;
        Some(Self::monomial(ordering, m, Scalar::one(field)).expect("admissible"))
    }

    /// The variable at position `i` of the ordering.
    pub fn var(ordering: BasisOrdering, field: FieldDesc, i: usize) -> Self {
        let mut m = Monomial::one(ordering.num_vars());
        m.0[i] = 1;
        Self::monomial(ordering, m, Scalar::one(field)).expect("degree one is admissible")
    }

    /// Coefficients `c_j` of `sum c_j e_j` for `j = 1..=coeffs.len()`.
    pub fn from_basis_coeffs(ordering: BasisOrdering, field: FieldDesc, coeffs: &[Scalar]) -> Self {
        let mut p = Self::zero(ordering, field);
        for (m, c) in ordering.iter().zip(coeffs) {
            p.add_term(m, c.clone());
        }
        p
    }

    pub fn ordering(&self) -> &BasisOrdering {
        &self.ordering
    }

    pub fn field(&self) -> FieldDesc {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending basis order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(|| Scalar::zero(self.field))
    }

    fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// Leading term in basis order.
    pub fn leading_term(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms.iter().next_back()
    }

    /// `max { i : e_i^*(q) != 0 }`.
    pub fn leading_index(&self) -> Result<usize, PolyError> {
        let (m, _) = self.leading_term().ok_or(PolyError::ZeroPolynomial)?;
        Ok(self.ordering.index_of(m).expect("stored monomials are admissible"))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn t_degree(&self) -> u32 {
        self.ordering.t_index().map_or(0, |ti| self.degree_in(ti))
    }

    /// Value at a point with one coordinate per variable (`t` last).
    pub fn eval(&self, point: &[Scalar]) -> Result<Scalar, PolyError> {
        if point.len() != self.ordering.num_vars() {
            return Err(PolyError::ArityMismatch {
                expected: self.ordering.num_vars(),
                got: point.len(),
            });
        }
        if let Some(bad) = point.iter().find(|s| s.field() != self.field) {
            return Err(ScalarError::FieldMismatch(self.field, bad.field()).into());
        }
        Ok(self.terms.iter().fold(Scalar::zero(self.field), |acc, (m, c)| {
            acc + c * &m.eval(point, self.field)
        }))
    }

    fn check_compatible(&self, other: &Poly) -> Result<(), PolyError> {
        if self.ordering != other.ordering || self.field != other.field {
            return Err(PolyError::OrderingMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_compatible(other)?;
        let mut out = Poly::zero(self.ordering, self.field);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                if !self.ordering.admits(&m) {
                    return Err(PolyError::CapExceeded);
                }
                out.add_term(m, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Scalar::one(self.field))
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        let mut out = Poly::zero(self.ordering, self.field);
        if c.is_zero() {
            return out;
        }
        out.terms = self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect();
        out
    }

    pub fn pow(&self, e: u32) -> Result<Poly, PolyError> {
        let mut acc = Poly::constant(self.ordering, Scalar::one(self.field));
        for _ in 0..e {
            acc = acc.try_mul(self)?;
        }
        Ok(acc)
    }

    /// Coefficients of `t^0, t^1, ...` as `t`-free polynomials.
    pub fn split_t(&self) -> Vec<Poly> {
        let Some(ti) = self.ordering.t_index() else {
            return vec![self.clone()];
        };
        let mut parts = vec![Poly::zero(self.ordering, self.field); self.t_degree() as usize + 1];
        for (m, c) in &self.terms {
            let mut base = m.clone();
            let k = std::mem::replace(&mut base.0[ti], 0);
            parts[k as usize].add_term(base, c.clone());
        }
        parts
    }

    /// With `self = a0 + a1 t`, returns `den * a0 + a1 * num`.
    pub fn substitute_t(&self, num: &Poly, den: &Poly) -> Result<Poly, PolyError> {
        self.check_compatible(num)?;
        self.check_compatible(den)?;
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        if self.t_degree() > 1 || num.t_degree() > 0 || den.t_degree() > 0 {
            return Err(PolyError::CapExceeded);
        }
        let mut parts = self.split_t().into_iter();
        let a0 = parts.next().expect("at least one part");
        let a1 = parts.next().unwrap_or_else(|| Poly::zero(self.ordering, self.field));
        den.try_mul(&a0)?.try_add(&a1.try_mul(num)?)
    }

    /// Moves the polynomial into `target`, sending variable `i` to position
    /// `positions[i]`.
    pub fn reembed(&self, target: BasisOrdering, positions: &[usize]) -> Result<Poly, PolyError> {
        assert_eq!(positions.len(), self.ordering.num_vars());
        let mut out = Poly::zero(target, self.field);
        for (m, c) in &self.terms {
            let mut e = vec![0; target.num_vars()];
            for (i, &k) in m.0.iter().enumerate() {
                e[positions[i]] += k;
            }
            let m = Monomial(e);
            if !target.admits(&m) {
                return Err(PolyError::CapExceeded);
            }
            out.add_term(m, c.clone());
        }
        Ok(out)
    }

    /// Exact quotient `self / divisor` by leading-term division in the basis
    /// order; fails unless the remainder is zero.
    pub fn exact_div(&self, divisor: &Poly) -> Result<Poly, PolyError> {
        self.check_compatible(divisor)?;
        let (lm, lc) = divisor.leading_term().ok_or(PolyError::ZeroDenominator)?;
        let lc_inv = lc.inv()?;
        let mut rem = self.clone();
        let mut quot = Poly::zero(self.ordering, self.field);
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return Err(PolyError::NotDivisible);
            }
            let qm = m.div(lm);
            let qc = c * &lc_inv;
            for (dm, dc) in &divisor.terms {
                rem.add_term(dm.mul(&qm), -(dc * &qc));
            }
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    /// Dense coefficients in variable `var` if no other variable occurs.
    pub fn as_univariate(&self, var: usize) -> Option<Vec<Scalar>> {
        let mut out = vec![Scalar::zero(self.field); self.degree_in(var) as usize + 1];
        for (m, c) in &self.terms {
            if m.0.iter().enumerate().any(|(i, &e)| i != var && e > 0) {
                return None;
            }
            out[m.0[var] as usize] = c.clone();
        }
        Some(out)
    }

    pub fn from_univariate(ordering: BasisOrdering, field: FieldDesc, var: usize, coeffs: &[Scalar]) -> Self {
        let mut p = Poly::zero(ordering, field);
        for (k, c) in coeffs.iter().enumerate() {
            let mut m = Monomial::one(ordering.num_vars());
            m.0[var] = k as u32;
            p.add_term(m, c.clone());
        }
        p
    }

    /// Monic gcd of two polynomials in the single variable `var`.
    pub fn univariate_gcd(&self, other: &Poly, var: usize) -> Result<Poly, PolyError> {
        self.check_compatible(other)?;
        let mut a = self.as_univariate(var).ok_or(PolyError::NotUnivariate)?;
        let mut b = other.as_univariate(var).ok_or(PolyError::NotUnivariate)?;
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = dense_rem(&a, &b);
            a = b;
            b = r;
        }
        if let Some(lead) = a.last().cloned() {
            let inv = lead.inv()?;
            for c in &mut a {
                *c = &*c * &inv;
            }
        }
        Ok(Poly::from_univariate(self.ordering, self.field, var, &a))
    }

    /// Parses polynomial text in `ordering`. Division is allowed only by
    /// nonzero constants and `sqrt` is rejected.
    pub fn parse(text: &str, ordering: BasisOrdering, field: FieldDesc) -> Result<Poly, PolyError> {
        let e = expr::parse(text, ordering.scope())?;
        from_expr(&e, ordering, field)
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

fn trim(v: &mut Vec<Scalar>) {
    while v.last().is_some_and(Scalar::is_zero) {
        v.pop();
    }
}

fn dense_rem(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let mut r = a.to_vec();
    let lead_inv = b.last().expect("nonzero divisor").inv().expect("nonzero lead");
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let q = r.last().unwrap() * &lead_inv;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&q * bc);
        }
        r.pop();
        trim(&mut r);
    }
    r
}

fn from_expr(e: &Expr, ordering: BasisOrdering, field: FieldDesc) -> Result<Poly, PolyError> {
    let rec = |e: &Expr| from_expr(e, ordering, field);
    Ok(match e {
        Expr::Int(v) => Poly::constant(ordering, Scalar::from_bigint(field, v)),
        Expr::Var(v) => {
            let i = ordering.var_position(*v).expect("scope checked by parser");
            Poly::var(ordering, field, i)
        }
        Expr::Neg(a) => rec(a)?.neg(),
        Expr::Add(a, b) => rec(a)?.try_add(&rec(b)?)?,
        Expr::Sub(a, b) => rec(a)?.try_sub(&rec(b)?)?,
        Expr::Mul(a, b) => rec(a)?.try_mul(&rec(b)?)?,
        Expr::Pow(a, k) => rec(a)?.pow(*k)?,
        Expr::Div(a, b, pos) => {
            let d = rec(b)?;
            let not_const = || PolyError::NotPolynomial {
                pos: *pos,
                msg: "division by a non-constant".into(),
            };
            if d.total_degree() > 0 {
                return Err(not_const());
            }
            let c = d.coeff(&Monomial::one(ordering.num_vars()));
            let inv = c.inv().map_err(|_| PolyError::NotPolynomial {
                pos: *pos,
                msg: "division by zero".into(),
            })?;
            rec(a)?.scale(&inv)
        }
        Expr::Sqrt(_, pos) => {
            return Err(PolyError::NotPolynomial {
                pos: *pos,
                msg: "sqrt is not polynomial".into(),
            })
        }
    })
}

/// Canonical text: terms in descending basis order, e.g. `x1^2*t + t - x1`.
/// Prime-field coefficients print as symmetric representatives so that
/// `p - 1` reads as `-1`; parsing maps them back to the same residues.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative_repr();
            let abs = if neg { -c } else { c.clone() };
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let is_const = m.degree() == 0;
            if is_const {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                m.write(&self.ordering, f)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: FieldDesc = FieldDesc::Rationals;

    fn names(o: &BasisOrdering, ms: &[Monomial]) -> Vec<String> {
        ms.iter()
            .map(|m| {
                let mut s = String::new();
                m.write(o, &mut s).unwrap();
                if s.is_empty() {
                    "1".into()
                } else {
                    s
                }
            })
            .collect()
    }

    fn rat(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(Q, &n.into(), &d.into()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let o = BasisOrdering::graph(1, None);
        assert_eq!(
            names(&o, &o.enumerate(10)),
            ["1", "x1", "t", "x1^2", "x1*t", "t^2", "x1^3", "x1^2*t", "x1*t^2", "t^3"]
        );
        let o = BasisOrdering::graph(1, Some(1));
        assert_eq!(
            names(&o, &o.enumerate(7)),
            ["1", "x1", "t", "x1^2", "x1*t", "x1^3", "x1^2*t"]
        );
        let o = BasisOrdering::graph(0, Some(1));
        assert_eq!(names(&o, &o.enumerate(5)), ["1", "t"]);
        let o = BasisOrdering::plain(0, 0);
        assert_eq!(o.enumerate(3).len(), 1);
    }

    #[test]
    fn leading_index_examples() {
        let o = BasisOrdering::graph(1, Some(1));
        let p = |s: &str| Poly::parse(s, o, Q).unwrap();
        assert_eq!(p("t - x1").leading_index().unwrap(), 3);
        assert_eq!(p("(1 + x1^2)*t - x1").leading_index().unwrap(), 7);
        assert_eq!(p("1").leading_index().unwrap(), 1);
        assert_eq!(p("0").leading_index(), Err(PolyError::ZeroPolynomial));
    }

    #[test]
    fn enumeration_is_graded_injective_and_ranked() {
        let orderings = [
            BasisOrdering::graph(1, None),
            BasisOrdering::graph(1, Some(1)),
            BasisOrdering::graph(2, Some(2)),
            BasisOrdering::graph(3, Some(1)),
            BasisOrdering::new(1, 1, true, Some(1)),
            BasisOrdering::new(2, 1, true, None),
            BasisOrdering::plain(3, 0),
            BasisOrdering::graph(0, None),
        ];
        for o in orderings {
            let ms = o.enumerate(500);
            let set: std::collections::HashSet<_> = ms.iter().collect();
            assert_eq!(set.len(), ms.len());
            for (i, w) in ms.windows(2).enumerate() {
                assert!(w[0].degree() <= w[1].degree());
                assert_eq!(w[0].cmp(&w[1]), Ordering::Less, "{o:?} at {i}");
            }
            for (i, m) in ms.iter().enumerate() {
                assert!(o.admits(m));
                assert_eq!(o.index_of(m), Some(i + 1), "{o:?} {m:?}");
            }
            for i in 1..=200.min(ms.len()) {
                let e = Poly::basis_element(o, Q, i).unwrap();
                assert_eq!(e.leading_index().unwrap(), i);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let o = BasisOrdering::graph(1, Some(1));
        let p = |s: &str| Poly::parse(s, o, Q).unwrap();
        assert!(p("t - x1").eval(&[rat(5, 1), rat(5, 1)]).unwrap().is_zero());
        // (5/4)(2/5) - 1/2 = 0
        assert!(p("(1 + x1^2)*t - x1").eval(&[rat(1, 2), rat(2, 5)]).unwrap().is_zero());
        assert!(p("1").eval(&[rat(3, 7), rat(-1, 1)]).unwrap().is_one());
        assert!(matches!(
            p("1").eval(&[rat(1, 1)]),
            Err(PolyError::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn substitution_and_products() {
        let o = BasisOrdering::graph(1, Some(1));
        let p = |s: &str| Poly::parse(s, o, Q).unwrap();
        let got = p("x1 + t").substitute_t(&p("x1"), &p("1 + x1^2")).unwrap();
        assert_eq!(got, p("x1^3 + 2*x1"));
        assert_eq!(p("t").substitute_t(&p("x1"), &p("1 + x1^2")).unwrap(), p("x1"));
        assert!(p("x1^2 + t").try_mul(&p("0")).unwrap().is_zero());
        assert_eq!(p("t").substitute_t(&p("x1"), &p("0")), Err(PolyError::ZeroDenominator));
        assert_eq!(p("t").try_mul(&p("t")), Err(PolyError::CapExceeded));
        let other = Poly::parse("t", BasisOrdering::graph(2, Some(1)), Q).unwrap();
        assert_eq!(p("t").try_add(&other), Err(PolyError::OrderingMismatch));
    }

    #[test]
    fn serialization_examples() {
        let o = BasisOrdering::graph(1, Some(1));
        let p = |s: &str| Poly::parse(s, o, Q).unwrap();
        assert_eq!(p("t - x1").to_string(), "t - x1");
        assert_eq!(p("0").to_string(), "0");
        let q = p("(1 + x1^2)*t - x1");
        assert_eq!(q.num_terms(), 3);
        let m = |e: &[u32]| Monomial(e.to_vec());
        assert!(q.coeff(&m(&[2, 1])).is_one());
        assert!(q.coeff(&m(&[0, 1])).is_one());
        assert_eq!(q.coeff(&m(&[1, 0])), rat(-1, 1));
        assert_eq!(q.to_string(), "x1^2*t + t - x1");
        assert_eq!(p("-3/4*x1 + 1/2").to_string(), "-3/4*x1 + 1/2");
        let fp = FieldDesc::prime(101).unwrap();
        let r = Poly::parse("t^2 - x1^2 - 1", BasisOrdering::graph(1, Some(2)), fp).unwrap();
        assert_eq!(r.to_string(), "t^2 - x1^2 - 1");
    }

    #[test]
    fn parse_rejects_non_polynomials() {
        let o = BasisOrdering::graph(1, Some(1));
        assert!(matches!(
            Poly::parse("1/x1", o, Q),
            Err(PolyError::NotPolynomial { pos: 2, .. })
        ));
        assert!(matches!(
            Poly::parse("sqrt(x1)", o, Q),
            Err(PolyError::NotPolynomial { .. })
        ));
        assert!(matches!(
            Poly::parse("x1 +", o, Q),
            Err(PolyError::Syntax(ExprError::Syntax { pos: 4, .. }))
        ));
        assert_eq!(Poly::parse("t^2", o, Q), Err(PolyError::CapExceeded));
    }

    #[test]
    fn exact_division_and_gcd() {
        let o = BasisOrdering::plain(1, 1);
        let p = |s: &str| Poly::parse(s, o, Q).unwrap();
        let a = p("(x1 + y1)*(x1^2 - 3*y1 + 1)");
        assert_eq!(a.exact_div(&p("x1 + y1")).unwrap(), p("x1^2 - 3*y1 + 1"));
        assert_eq!(p("x1^2 + 1").exact_div(&p("x1 + 1")), Err(PolyError::NotDivisible));
        let g = p("(y1 - 2)*(y1^2 + 1)*3")
            .univariate_gcd(&p("(y1 - 2)*(y1 + 5)"), 1)
            .unwrap();
        assert_eq!(g, p("y1 - 2"));
        assert_eq!(p("x1*y1").univariate_gcd(&p("y1"), 1), Err(PolyError::NotUnivariate));
    }

    fn arb_poly(o: BasisOrdering) -> impl Strategy<Value = Poly> {
        prop::collection::vec((1usize..40, -20i64..20, 1i64..6), 0..8).prop_map(move |terms| {
            let mut p = Poly::zero(o, Q);
            for (idx, n, d) in terms {
                let m = o.iter().nth(idx - 1).unwrap();
                p.add_term(m, rat(n, d));
            }
            p
        })
    }

    fn arb_point() -> impl Strategy<Value = Vec<Scalar>> {
        prop::collection::vec((-30i64..30, 1i64..5).prop_map(|(n, d)| rat(n, d)), 3)
    }

    proptest! {
        #[test]
        fn eval_is_a_ring_homomorphism(
            a in arb_poly(BasisOrdering::new(1, 1, true, None)),
            b in arb_poly(BasisOrdering::new(1, 1, true, None)),
            pt in arb_point(),
        ) {
            let ea = a.eval(&pt).unwrap();
            let eb = b.eval(&pt).unwrap();
            prop_assert_eq!(a.try_mul(&b).unwrap().eval(&pt).unwrap(), &ea * &eb);
            prop_assert_eq!(a.try_add(&b).unwrap().eval(&pt).unwrap(), &ea + &eb);
        }

        #[test]
        fn serialize_round_trips(p in arb_poly(BasisOrdering::new(1, 1, true, Some(1)))) {
            let back = Poly::parse(&p.serialize(), *p.ordering(), Q).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn exact_division_inverts_multiplication(
            a in arb_poly(BasisOrdering::plain(1, 1)),
            b in arb_poly(BasisOrdering::plain(1, 1)),
        ) {
            prop_assume!(!b.is_zero());
            let prod = a.try_mul(&b).unwrap();
            prop_assert_eq!(prod.exact_div(&b).unwrap(), a);
        }
    }

    #[test]
    fn serialize_round_trips_over_prime_field() {
        let fp = FieldDesc::prime(crate::scalar::DEFAULT_PRIME).unwrap();
        let o = BasisOrdering::new(2, 1, true, None);
        let p = Poly::parse("3*x1^2*t - 5*y1 + 1073741824*x2 - 2147483646", o, fp).unwrap();
        assert_eq!(Poly::parse(&p.serialize(), o, fp).unwrap(), p);
    }
}
