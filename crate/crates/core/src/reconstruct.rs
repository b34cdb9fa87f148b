//! Global rational representations of separately regular functions.
//!
//! For `f(x, y)` whose slices are rational, the pipeline finds the generic
//! slice index `n`, picks a reference `y0` and `n - 1` probe abscissae,
//! reconstructs each `y`-slice `f(x_j, .)` as `p_j / q_j`, and takes the
//! signed maximal minors of the probe matrix symbolically in `y`. Summing
//! the minors against the basis gives `Q(x, y, t) = Q1(x, y) t - P(x, y)`
//! vanishing on the graph, hence `f = P / Q1`.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annihilator::{
    default_sampler, find_annihilator_with, AnnihilatorError, NotFound, SearchConfig, SearchOutcome,
};
use crate::kernel::{cofactor_polynomial, poly_cofactor_vector, GraphPoint, KernelError};
use crate::oracle::{derive_seed, FunctionOracle, Oracle, Sampler, SamplerKind};
use crate::poly::{BasisOrdering, Monomial, Poly, PolyError};
use crate::scalar::{FieldDesc, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReconstructError {
    #[error("no slice admits an annihilator within the search limits")]
    AllUnbounded,
    #[error("no usable probe tuple in {attempts} attempts")]
    DegenerateProbe { attempts: usize },
    #[error("representation fails at point {point:?}")]
    VerificationFailed { point: Vec<Scalar> },
    #[error("denominator nonzero at only {nonzero} of {trials} verification points")]
    DenominatorVanishes { nonzero: usize, trials: usize },
    #[error("joint search found no annihilator: {0:?}")]
    NotFound(NotFound),
    #[error("annihilator does not involve t, so it gives no representation")]
    NoGraphVariable,
    #[error("need a function of both x and y variables")]
    NotTwoArgument,
    #[error(transparent)]
    Annihilator(#[from] AnnihilatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructConfig {
    /// Settings for every annihilator search (slices and joint).
    pub search: SearchConfig,
    pub num_slices: usize,
    pub probe_retries: usize,
    /// Fresh `(x, y)` points checked against the final representation.
    pub verify_points: usize,
    /// Smallest accepted fraction of verification points where `Q != 0`.
    pub min_nonvanishing: Ratio<u64>,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            num_slices: 25,
            probe_retries: 50,
            verify_points: 100,
            min_nonvanishing: Ratio::new(9, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceEntry {
    pub y: Vec<Scalar>,
    /// `None` when the slice search found nothing.
    pub c: Option<usize>,
    /// The slice search stopped on an oracle failure.
    pub oracle_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SliceProfile {
    pub entries: Vec<SliceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepVerification {
    pub trials: usize,
    pub failures: usize,
    /// Points where the denominator is nonzero.
    pub nonvanishing: usize,
}

/// `f = numerator / denominator`, as polynomials in `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalRep {
    pub numerator: Poly,
    pub denominator: Poly,
    pub verification: RepVerification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    pub rep: RationalRep,
    /// Generic slice index.
    pub n: usize,
    pub y0: Vec<Scalar>,
    pub probes: Vec<Vec<Scalar>>,
    pub probe_attempts: usize,
    pub profile: SliceProfile,
}

fn uniform_integers(arity: usize, field: FieldDesc, range: u64) -> Sampler {
    Sampler::new(SamplerKind::UniformIntegers { range }, arity, field)
}

/// Default dense set `A`: rationals with numerator and denominator bounded by
/// the search range.
/// Distinct x or y blocks of a table's points, shuffled by `seed`.
fn table_projection(oracle: &FunctionOracle, take_y: bool, seed: u64) -> Option<Sampler> {
    let nx = oracle.xy_arity().num_x;
    let mut seen = HashSet::new();
    let mut blocks: Vec<Vec<Scalar>> = oracle
        .domain()?
        .into_iter()
        .map(|p| if take_y { p[nx..].to_vec() } else { p[..nx].to_vec() })
        .filter(|b| seen.insert(b.clone()))
        .collect();
    blocks.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xd1 + take_y as u64)));
    let arity = if take_y { oracle.xy_arity().num_y } else { nx };
    Some(Sampler::new(SamplerKind::UserList(blocks), arity, oracle.field()))
}

/// Uniform rationals, or the table's distinct x blocks.
pub fn default_a_sampler(oracle: &FunctionOracle, cfg: &ReconstructConfig) -> Sampler {
    table_projection(oracle, false, cfg.search.seed).unwrap_or_else(|| {
        Sampler::new(
            SamplerKind::UniformRationals {
                range: cfg.search.range,
            },
            oracle.xy_arity().num_x,
            oracle.field(),
        )
    })
}

/// Uniform integers, or the table's distinct y blocks.
pub fn default_y_sampler(oracle: &FunctionOracle, cfg: &ReconstructConfig) -> Sampler {
    table_projection(oracle, true, cfg.search.seed)
        .unwrap_or_else(|| uniform_integers(oracle.xy_arity().num_y, oracle.field(), cfg.search.range))
}

/// Runs the annihilator search on `x -> f(x, y)` for `num_slices` distinct
/// `y` from `y_sampler`. Slices are searched in parallel; entries keep the
/// sampling order.
pub fn slice_scan(
    oracle: &FunctionOracle,
    y_sampler: &Sampler,
    num_slices: usize,
    cfg: &SearchConfig,
) -> Result<SliceProfile, ReconstructError> {
    let arity = oracle.xy_arity();
    let x_ordering = BasisOrdering::graph(arity.num_x, Some(1));
    let x_sampler = uniform_integers(arity.num_x, oracle.field(), cfg.range);
    let mut ys: Vec<Vec<Scalar>> = Vec::with_capacity(num_slices);
    for y in y_sampler
        .stream(derive_seed(cfg.seed, 2))
        .take(num_slices.saturating_mul(10))
    {
        if ys.len() == num_slices {
            break;
        }
        if !ys.contains(&y) {
            ys.push(y);
        }
    }
    let entries = ys
        .into_par_iter()
        .enumerate()
        .map(|(i, y)| {
            let slice = oracle.fix_y(y.clone());
            let slice_cfg = SearchConfig {
                seed: derive_seed(cfg.seed, 1000 + i as u64),
                ..cfg.clone()
            };
            let sampler = if oracle.is_table() {
                default_sampler(&slice, &slice_cfg)
            } else {
                x_sampler.clone()
            };
            match find_annihilator_with(&slice, &x_ordering, &slice_cfg, &sampler) {
                Ok(SearchOutcome::Found(r)) => Ok(SliceEntry {
                    y,
                    c: Some(r.c),
                    oracle_failure: false,
                }),
                Ok(SearchOutcome::NotFound(_)) => Ok(SliceEntry {
                    y,
                    c: None,
                    oracle_failure: false,
                }),
                Err(AnnihilatorError::OracleFailure { .. }) => Ok(SliceEntry {
                    y,
                    c: None,
                    oracle_failure: true,
                }),
                Err(e) => Err(ReconstructError::from(e)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SliceProfile { entries })
}

/// Most frequent bounded `c` (ties go to the smaller value) and the indices
/// of the entries attaining it.
pub fn select_mode(profile: &SliceProfile) -> Result<(usize, Vec<usize>), ReconstructError> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for c in profile.entries.iter().filter_map(|e| e.c) {
        *counts.entry(c).or_default() += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (&c, &k) in &counts {
        if best.is_none_or(|(_, bk)| k > bk) {
            best = Some((c, k));
        }
    }
    let (n, _) = best.ok_or(ReconstructError::AllUnbounded)?;
    let idx = profile
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.c == Some(n))
        .map(|(i, _)| i)
        .collect();
    Ok((n, idx))
}

/// Reconstruction of `f` from its slices. `a_sampler` supplies the
/// probe abscissae; it may be any Zariski-dense set on which the
/// `y`-slices are rational.
pub fn reconstruct_separately_regular(
    oracle: &FunctionOracle,
    a_sampler: &Sampler,
    y_sampler: &Sampler,
    cfg: &ReconstructConfig,
) -> Result<Reconstruction, ReconstructError> {
    let arity = oracle.xy_arity();
    if arity.num_x == 0 || arity.num_y == 0 {
        return Err(ReconstructError::NotTwoArgument);
    }
    cfg.search.validate()?;
    let field = oracle.field();
    let (m, k) = (arity.num_x, arity.num_y);
    let seed = cfg.search.seed;

    let profile = slice_scan(oracle, y_sampler, cfg.num_slices, &cfg.search)?;
    let (n, b) = select_mode(&profile)?;
    let y0 = profile.entries[b[0]].y.clone();

    let x_ordering = BasisOrdering::graph(m, Some(1));
    let y_ordering = BasisOrdering::new(0, k, true, Some(1));
    let y_ring = BasisOrdering::plain(0, k);
    let joint = BasisOrdering::new(m, k, true, Some(1));
    let y_sampler_ints = uniform_integers(k, field, cfg.search.range);
    let basis = x_ordering.enumerate(n);
    let y_slice_positions: Vec<usize> = (0..k).chain([0]).collect();
    let ref_slice = oracle.fix_y(y0.clone());
    let mut a_stream = a_sampler.stream(derive_seed(seed, 3));

    for attempt in 1..=cfg.probe_retries {
        // n - 1 distinct abscissae with f(x_j, y0) defined
        let mut probes: Vec<GraphPoint> = Vec::new();
        let mut draws = 0;
        while probes.len() + 1 < n && draws < 10 * n {
            let Some(x) = a_stream.next() else { break };
            draws += 1;
            if probes.iter().any(|p| p.point == x) {
                continue;
            }
            if let Some(v) = ref_slice.eval(&x) {
                probes.push(GraphPoint::new(x, v));
            }
        }
        if probes.len() + 1 < n {
            break;
        }
        if cofactor_polynomial(&probes, &x_ordering, field, n)?.is_zero() {
            continue;
        }

        let mut rows = Vec::with_capacity(n - 1);
        for (j, probe) in probes.iter().enumerate() {
            let slice = oracle.fix_x(probe.point.clone());
            let slice_cfg = SearchConfig {
                seed: derive_seed(seed, 10_000 + (attempt * 1000 + j) as u64),
                ..cfg.search.clone()
            };
            let sampler = if oracle.is_table() {
                default_sampler(&slice, &slice_cfg)
            } else {
                y_sampler_ints.clone()
            };
            let found = match find_annihilator_with(&slice, &y_ordering, &slice_cfg, &sampler) {
                Ok(SearchOutcome::Found(r)) => r,
                Ok(SearchOutcome::NotFound(_)) | Err(AnnihilatorError::OracleFailure { .. }) => break,
                Err(e) => return Err(e.into()),
            };
            let Some((p, q)) = t_split(&found.annihilator, y_ring, &y_slice_positions)? else {
                break;
            };
            rows.push(probe_row(&basis, &probe.point, &p, &q, m)?);
        }
        if rows.len() + 1 < n {
            continue;
        }

        let mut delta = poly_cofactor_vector(&rows, y_ring, field)?;
        remove_common_factor(&mut delta, k)?;
        let mut annihilator = Poly::zero(joint, field);
        let x_positions: Vec<usize> = (0..m).chain([m + k]).collect();
        let y_positions: Vec<usize> = (m..m + k).collect();
        for (d, e) in delta.iter().zip(&basis) {
            let ei = Poly::monomial(x_ordering, e.clone(), Scalar::one(field))?.reembed(joint, &x_positions)?;
            let di = d.reembed(joint, &y_positions)?;
            annihilator = annihilator.try_add(&di.try_mul(&ei)?)?;
        }
        let plain = BasisOrdering::plain(m, k);
        let positions: Vec<usize> = (0..m + k).chain([0]).collect();
        let Some((num, den)) = t_split(&annihilator, plain, &positions)? else {
            continue;
        };
        let (num, den) = normalize_pair(num, den);
        let rep = verify_rep(oracle, num, den, cfg, derive_seed(seed, 4))?;
        return Ok(Reconstruction {
            rep,
            n,
            y0,
            probes: probes.into_iter().map(|p| p.point).collect(),
            probe_attempts: attempt,
            profile,
        });
    }
    Err(ReconstructError::DegenerateProbe {
        attempts: cfg.probe_retries,
    })
}

/// Row of the probe matrix for abscissa `x`: `e_i(x, p/q)` times `q`.
fn probe_row(basis: &[Monomial], x: &[Scalar], p: &Poly, q: &Poly, m: usize) -> Result<Vec<Poly>, PolyError> {
    basis
        .iter()
        .map(|e| {
            let (xe, te) = e.exponents().split_at(m);
            let scale = xe
                .iter()
                .zip(x)
                .fold(Scalar::one(p.field()), |acc, (&k, xi)| acc * xi.pow(k));
            let part = if te[0] == 1 { p } else { q };
            Ok(part.scale(&scale))
        })
        .collect()
}

/// `a0 + a1 t` as `(-a0, a1)` moved into `target`; `None` if `a1 = 0`.
fn t_split(q: &Poly, target: BasisOrdering, positions: &[usize]) -> Result<Option<(Poly, Poly)>, PolyError> {
    let mut parts = q.split_t().into_iter();
    let a0 = parts.next().expect("at least one part");
    let Some(a1) = parts.next().filter(|a| !a.is_zero()) else {
        return Ok(None);
    };
    Ok(Some((
        a0.neg().reembed(target, positions)?,
        a1.reembed(target, positions)?,
    )))
}

/// Divides out the common factor of the cofactors: their gcd when there is a
/// single `y` variable, their common monomial otherwise.
fn remove_common_factor(delta: &mut [Poly], k: usize) -> Result<(), PolyError> {
    let nonzero: Vec<&Poly> = delta.iter().filter(|d| !d.is_zero()).collect();
    let Some(first) = nonzero.first() else {
        return Ok(());
    };
    let common = if k == 1 {
        let mut g = (*first).clone();
        for d in &nonzero[1..] {
            g = g.univariate_gcd(d, 0)?;
        }
        g
    } else {
        let mut mins: Vec<u32> = first.terms().next().expect("nonzero").0.exponents().to_vec();
        for d in &nonzero {
            for (mono, _) in d.terms() {
                for (lo, &e) in mins.iter_mut().zip(mono.exponents()) {
                    *lo = (*lo).min(e);
                }
            }
        }
        Poly::monomial(*first.ordering(), Monomial(mins), Scalar::one(first.field()))?
    };
    for d in delta.iter_mut() {
        *d = d.exact_div(&common)?;
    }
    Ok(())
}

/// Scales `(P, Q)` jointly: integer coprime coefficients with `Q`'s leading
/// coefficient positive over the rationals, `Q` monic over a prime field.
pub fn normalize_pair(num: Poly, den: Poly) -> (Poly, Poly) {
    let Some((_, lead)) = den.leading_term() else {
        return (num, den);
    };
    let factor = match lead.field() {
        FieldDesc::PrimeField(_) => lead.inv().expect("nonzero leading coefficient"),
        FieldDesc::Rationals => {
            let coeffs: Vec<_> = num
                .terms()
                .chain(den.terms())
                .map(|(_, c)| c.as_rational().expect("rational").clone())
                .collect();
            let l = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let g = coeffs
                .iter()
                .fold(BigInt::zero(), |acc, c| acc.gcd(&(c.numer() * (&l / c.denom()))));
            let sign = if lead.as_rational().expect("rational").is_negative() {
                -BigInt::one()
            } else {
                BigInt::one()
            };
            Scalar::from_ratio(FieldDesc::Rationals, &(sign * l), &g).expect("nonzero content")
        }
    };
    (num.scale(&factor), den.scale(&factor))
}

/// Checks `Q f = P` at fresh integer points.
fn verify_rep(
    oracle: &FunctionOracle,
    numerator: Poly,
    denominator: Poly,
    cfg: &ReconstructConfig,
    seed: u64,
) -> Result<RationalRep, ReconstructError> {
    let sampler = default_sampler(oracle, &cfg.search);
    let limit = cfg.verify_points.saturating_mul(cfg.search.failure_budget).max(1);
    let (mut trials, mut nonvanishing, mut undefined) = (0, 0, 0);
    for p in sampler.stream(seed) {
        if trials == cfg.verify_points {
            break;
        }
        let Some(v) = oracle.eval(&p) else {
            undefined += 1;
            if undefined > limit {
                return Err(AnnihilatorError::OracleFailure {
                    undefined,
                    attempts: trials + undefined,
                }
                .into());
            }
            continue;
        };
        trials += 1;
        let qv = denominator.eval(&p)?;
        if !qv.is_zero() {
            nonvanishing += 1;
        }
        if qv * v != numerator.eval(&p)? {
            return Err(ReconstructError::VerificationFailed { point: p });
        }
    }
    if Ratio::new(nonvanishing as u64, trials.max(1) as u64) < cfg.min_nonvanishing {
        return Err(ReconstructError::DenominatorVanishes {
            nonzero: nonvanishing,
            trials,
        });
    }
    Ok(RationalRep {
        numerator,
        denominator,
        verification: RepVerification {
            trials,
            failures: 0,
            nonvanishing,
        },
    })
}

/// Baseline: one annihilator search over `(x, y, t)` jointly.
pub fn direct_reconstruct(oracle: &FunctionOracle, cfg: &ReconstructConfig) -> Result<RationalRep, ReconstructError> {
    let arity = oracle.xy_arity();
    let (m, k) = (arity.num_x, arity.num_y);
    let joint = BasisOrdering::new(m, k, true, Some(1));
    let sampler = uniform_integers(arity.total(), oracle.field(), cfg.search.range);
    let search_cfg = SearchConfig {
        seed: derive_seed(cfg.search.seed, 5),
        ..cfg.search.clone()
    };
    let found = match find_annihilator_with(oracle, &joint, &search_cfg, &sampler)? {
        SearchOutcome::Found(r) => r,
        SearchOutcome::NotFound(nf) => return Err(ReconstructError::NotFound(nf)),
    };
    let positions: Vec<usize> = (0..m + k).chain([0]).collect();
    let (num, den) = t_split(&found.annihilator, BasisOrdering::plain(m, k), &positions)?
        .ok_or(ReconstructError::NoGraphVariable)?;
    let (num, den) = normalize_pair(num, den);
    verify_rep(oracle, num, den, cfg, derive_seed(cfg.search.seed, 6))
}
