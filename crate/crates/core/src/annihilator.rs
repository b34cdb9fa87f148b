//! Minimal-annihilator search for black-box functions.
//!
//! The sample grows geometrically; each round recomputes `c` on the whole
//! sample. Once `c` and its normalized witness have been identical for a
//! window of rounds, the witness is checked at fresh points and accepted if
//! it vanishes at all of them.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{c_of_sample, CValue, GraphPoint, GraphSample, KernelError};
use crate::oracle::{derive_seed, Oracle, PointStream, Sampler, SamplerKind};
use crate::poly::{BasisOrdering, Poly};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnihilatorError {
    #[error("oracle undefined at {undefined} of {attempts} drawn points")]
    OracleFailure { undefined: usize, attempts: usize },
    #[error("oracle takes {oracle} coordinates but the ordering expects {ordering}")]
    ArityMismatch { oracle: usize, ordering: usize },
    #[error("the zero polynomial is not an annihilator")]
    ZeroPolynomial,
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Search parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Largest basis prefix searched.
    pub n_max: usize,
    pub initial_samples: usize,
    /// Sample size multiplier per round; must exceed 1.
    pub growth: Ratio<u64>,
    /// Rounds with identical `c` and witness required before verifying.
    pub window: usize,
    pub verify_trials: usize,
    /// Integer sample range `[-N, N]`.
    pub range: u64,
    pub seed: u64,
    /// Undefined oracle points tolerated per requested point.
    pub failure_budget: usize,
    pub max_rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_max: 200,
            initial_samples: 16,
            growth: Ratio::from_integer(2),
            window: 3,
            verify_trials: 32,
            range: 1_000_000,
            seed: 0,
            failure_budget: 10,
            max_rounds: 10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), AnnihilatorError> {
        let bad = |m: &str| Err(AnnihilatorError::Config(m.into()));
        if self.n_max == 0 {
            return bad("n_max must be positive");
        }
        if self.initial_samples == 0 {
            return bad("initial sample count must be positive");
        }
        if self.growth <= Ratio::from_integer(1) {
            return bad("growth factor must exceed 1");
        }
        if self.window < 2 {
            return bad("stabilization window must be at least 2");
        }
        if self.verify_trials == 0 {
            return bad("verification needs at least one trial");
        }
        if self.max_rounds < self.window {
            return bad("max_rounds must be at least the window");
        }
        Ok(())
    }

    fn next_size(&self, size: usize) -> usize {
        let grown = (Ratio::from_integer(size as u64) * self.growth).ceil().to_integer() as usize;
        grown.max(size + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub trials: usize,
    pub failures: usize,
    /// Total degree of the checked polynomial.
    pub degree_bound: u32,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnihilatorResult {
    pub c: usize,
    /// Leading coefficient 1.
    pub annihilator: Poly,
    pub sample_size_used: usize,
    pub rounds: usize,
    pub verification: Verification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotFoundReason {
    /// No vanishing polynomial within `n_max` basis elements.
    ExceedsNMax,
    /// The sampler ran dry before any graph point was defined.
    SamplesExhausted,
    /// `c` kept changing (or verification kept failing) through the last round.
    NotStable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotFound {
    pub reason: NotFoundReason,
    pub sample_size: usize,
    /// Last bounded `c` seen, if any.
    pub last_c: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(AnnihilatorResult),
    NotFound(NotFound),
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&AnnihilatorResult> {
        match self {
            SearchOutcome::Found(r) => Some(r),
            SearchOutcome::NotFound(_) => None,
        }
    }
}

/// Default sampler for an oracle: its shuffled domain when finite, uniform
/// integers otherwise.
pub fn default_sampler<O: Oracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Sampler {
    let field = oracle.field();
    match oracle.domain() {
        Some(mut points) => {
            points.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xd0)));
            Sampler::new(SamplerKind::UserList(points), oracle.arity(), field)
        }
        None => Sampler::new(SamplerKind::UniformIntegers { range: cfg.range }, oracle.arity(), field),
    }
}

pub fn find_annihilator<O: Oracle + ?Sized>(
    oracle: &O,
    ordering: &BasisOrdering,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, AnnihilatorError> {
    find_annihilator_with(oracle, ordering, cfg, &default_sampler(oracle, cfg))
}

/// Pulls graph points from a stream, skipping undefined and repeated ones.
struct GraphFeed<'a, O: ?Sized> {
    oracle: &'a O,
    stream: PointStream,
    budget: usize,
    exhausted: bool,
}

impl<O: Oracle + ?Sized> GraphFeed<'_, O> {
    /// Adds up to `count` new points to `sample`; returns how many were added.
    fn fill(&mut self, sample: &mut GraphSample, count: usize) -> Result<usize, AnnihilatorError> {
        let limit = count.saturating_mul(self.budget).max(count);
        let (mut added, mut undefined, mut attempts) = (0, 0, 0);
        while added < count {
            if attempts >= count + limit {
                if undefined > limit {
                    return Err(AnnihilatorError::OracleFailure { undefined, attempts });
                }
                self.exhausted = true;
                break;
            }
            let Some(x) = self.stream.next() else {
                self.exhausted = true;
                break;
            };
            attempts += 1;
            match self.oracle.eval(&x) {
                None => {
                    undefined += 1;
                    if undefined > limit {
                        return Err(AnnihilatorError::OracleFailure { undefined, attempts });
                    }
                }
                Some(v) => {
                    if sample.push(GraphPoint::new(x, v))? {
                        added += 1;
                    }
                }
            }
        }
        Ok(added)
    }
}

/// Like [`find_annihilator`], drawing sample points from `sampler`.
pub fn find_annihilator_with<O: Oracle + ?Sized>(
    oracle: &O,
    ordering: &BasisOrdering,
    cfg: &SearchConfig,
    sampler: &Sampler,
) -> Result<SearchOutcome, AnnihilatorError> {
    cfg.validate()?;
    if oracle.arity() != ordering.point_arity() || sampler.arity != oracle.arity() {
        return Err(AnnihilatorError::ArityMismatch {
            oracle: oracle.arity(),
            ordering: ordering.point_arity(),
        });
    }
    let mut feed = GraphFeed {
        oracle,
        stream: sampler.stream(derive_seed(cfg.seed, 1)),
        budget: cfg.failure_budget,
        exhausted: false,
    };
    let mut sample = GraphSample::new(oracle.field(), oracle.arity());
    let mut target = cfg.initial_samples;
    let mut history: Vec<CValue> = Vec::new();
    let mut last_c = None;

    for round in 1..=cfg.max_rounds {
        let missing = target.saturating_sub(sample.len());
        feed.fill(&mut sample, missing)?;
        if sample.is_empty() {
            return Ok(not_found(NotFoundReason::SamplesExhausted, &sample, None));
        }
        let c = c_of_sample(&sample, ordering, cfg.n_max)?;
        let CValue::Bounded { n, witness } = &c else {
            return Ok(not_found(NotFoundReason::ExceedsNMax, &sample, last_c));
        };
        last_c = Some(*n);
        history.push(c.clone());

        // A fully consumed finite sampler cannot change the sample any more.
        let stable = feed.exhausted
            || (history.len() >= cfg.window && history[history.len() - cfg.window..].iter().all(|h| *h == c));
        if stable {
            let verification = verify_from_feed(witness, &mut feed, &mut sample, cfg.verify_trials)?;
            if verification.passed() {
                return Ok(SearchOutcome::Found(AnnihilatorResult {
                    c: *n,
                    annihilator: witness.clone(),
                    sample_size_used: sample.len(),
                    rounds: round,
                    verification,
                }));
            }
        }
        if feed.exhausted {
            break;
        }
        target = cfg.next_size(sample.len());
    }
    Ok(not_found(NotFoundReason::NotStable, &sample, last_c))
}

fn not_found(reason: NotFoundReason, sample: &GraphSample, last_c: Option<usize>) -> SearchOutcome {
    SearchOutcome::NotFound(NotFound {
        reason,
        sample_size: sample.len(),
        last_c,
    })
}

/// Checks `q` at fresh points of the feed. On failure all fresh points join
/// the sample so the next round accounts for them.
fn verify_from_feed<O: Oracle + ?Sized>(
    q: &Poly,
    feed: &mut GraphFeed<'_, O>,
    sample: &mut GraphSample,
    trials: usize,
) -> Result<Verification, AnnihilatorError> {
    let mut fresh = GraphSample::new(sample.field(), sample.arity());
    for p in sample.points() {
        fresh.push(p.clone())?;
    }
    let before = fresh.len();
    feed.fill(&mut fresh, trials)?;
    let new = &fresh.points()[before..];
    let failures = new
        .iter()
        .filter(|p| !q.eval(&p.coords()).expect("arity checked").is_zero())
        .count();
    if failures > 0 {
        for p in new {
            sample.push(p.clone())?;
        }
    }
    Ok(Verification {
        trials: fresh.len() - before,
        failures,
        degree_bound: q.total_degree(),
    })
}

/// Randomized identity test: evaluates `q(x, f(x))` at `trials` defined
/// points with integer coordinates in `[-range, range]`. A nonzero identity
/// of total degree `d` survives one trial with probability at most
/// `d / (2 range + 1)`.
pub fn verify_identity<O: Oracle + ?Sized, R: Rng + ?Sized>(
    q: &Poly,
    oracle: &O,
    trials: usize,
    range: u64,
    rng: &mut R,
) -> Result<Verification, AnnihilatorError> {
    let field = oracle.field();
    let points = std::iter::repeat_with(|| (0..oracle.arity()).map(|_| Scalar::random(field, rng, range)).collect());
    verify_on_points(q, oracle, trials, points, 10)
}

/// [`verify_identity`] over an arbitrary point source. Undefined points are
/// skipped, up to `budget` per requested trial.
pub fn verify_on_points<O: Oracle + ?Sized>(
    q: &Poly,
    oracle: &O,
    trials: usize,
    points: impl IntoIterator<Item = Vec<Scalar>>,
    budget: usize,
) -> Result<Verification, AnnihilatorError> {
    if q.is_zero() {
        return Err(AnnihilatorError::ZeroPolynomial);
    }
    if oracle.arity() != q.ordering().point_arity() {
        return Err(AnnihilatorError::ArityMismatch {
            oracle: oracle.arity(),
            ordering: q.ordering().point_arity(),
        });
    }
    let limit = trials.saturating_mul(budget).max(1);
    let (mut done, mut failures, mut undefined, mut attempts) = (0, 0, 0, 0);
    for x in points {
        if done == trials {
            break;
        }
        attempts += 1;
        match oracle.eval(&x) {
            None => {
                undefined += 1;
                if undefined > limit {
                    return Err(AnnihilatorError::OracleFailure { undefined, attempts });
                }
            }
            Some(v) => {
                done += 1;
                let pt = GraphPoint::new(x, v);
                if !q.eval(&pt.coords()).expect("arity checked").is_zero() {
                    failures += 1;
                }
            }
        }
    }
    Ok(Verification {
        trials: done,
        failures,
        degree_bound: q.total_degree(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Arity, FunctionOracle, SampleTable};
    use crate::scalar::FieldDesc;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    const Q: FieldDesc = FieldDesc::Rationals;

    fn expr(text: &str) -> FunctionOracle {
        FunctionOracle::from_expression(text, Some(Arity::new(1, 0)), Q).unwrap()
    }

    fn found(o: &impl Oracle, ord: &BasisOrdering, cfg: &SearchConfig) -> AnnihilatorResult {
        match find_annihilator(o, ord, cfg).unwrap() {
            SearchOutcome::Found(r) => r,
            other => panic!("expected an annihilator, got {other:?}"),
        }
    }

    fn pythagorean(count: i64) -> Sampler {
        let pts = (1..=count)
            .map(|m| vec![Scalar::from_ratio(Q, &BigInt::from(m * m - 1), &BigInt::from(2 * m)).unwrap()])
            .collect();
        Sampler::new(SamplerKind::UserList(pts), 1, Q)
    }

    #[test]
    fn identity_function() {
        let r = found(&expr("x1"), &BasisOrdering::graph(1, Some(1)), &SearchConfig::default());
        assert_eq!(r.c, 3);
        assert_eq!(r.annihilator.serialize(), "t - x1");
        assert!(r.verification.passed());
        assert_eq!(r.verification.trials, 32);
    }

    #[test]
    fn rational_function() {
        let r = found(
            &expr("x1/(1+x1^2)"),
            &BasisOrdering::graph(1, Some(1)),
            &SearchConfig::default(),
        );
        assert_eq!(r.c, 7);
        assert_eq!(r.annihilator.serialize(), "x1^2*t + t - x1");
    }

    #[test]
    fn constant_function() {
        let r = found(&expr("5"), &BasisOrdering::graph(1, Some(1)), &SearchConfig::default());
        assert_eq!(r.c, 3);
        assert_eq!(r.annihilator.serialize(), "t - 5");
    }

    #[test]
    fn square_root_at_pythagorean_points() {
        let o = expr("sqrt(x1^2+1)");
        let ord = BasisOrdering::graph(1, Some(2));
        let cfg = SearchConfig::default();
        let out = find_annihilator_with(&o, &ord, &cfg, &pythagorean(400)).unwrap();
        let r = out.found().expect("annihilator");
        assert_eq!(r.c, 6);
        assert_eq!(r.annihilator.serialize(), "t^2 - x1^2 - 1");
    }

    #[test]
    fn square_root_mod_p() {
        let fp = FieldDesc::PrimeField(1_000_003);
        let o = FunctionOracle::from_expression("sqrt(x1^2+1)", None, fp).unwrap();
        let r = found(&o, &BasisOrdering::graph(1, Some(2)), &SearchConfig::default());
        assert_eq!(r.c, 6);
        assert_eq!(r.annihilator.serialize(), "t^2 - x1^2 - 1");
    }

    #[test]
    fn transcendental_table_is_not_found() {
        let mut t = SampleTable::new(Q, Arity::new(1, 0));
        for i in 0..40 {
            t.insert(
                vec![Scalar::from_i64(Q, i)],
                Scalar::from_bigint(Q, &BigInt::from(2).pow(i as u32)),
            )
            .unwrap();
        }
        let o = FunctionOracle::from_table(t);
        let cfg = SearchConfig {
            n_max: 40,
            ..SearchConfig::default()
        };
        let out = find_annihilator(&o, &BasisOrdering::graph(1, Some(1)), &cfg).unwrap();
        let SearchOutcome::NotFound(nf) = out else {
            panic!("expected NotFound, got {out:?}")
        };
        assert_eq!(nf.reason, NotFoundReason::ExceedsNMax);
        assert_eq!(nf.sample_size, 40);
    }

    #[test]
    fn all_undefined_is_an_oracle_failure() {
        let o = expr("1/(x1-x1)");
        let err = find_annihilator(&o, &BasisOrdering::graph(1, Some(1)), &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, AnnihilatorError::OracleFailure { .. }));
    }

    #[test]
    fn small_n_max_is_not_found() {
        let cfg = SearchConfig {
            n_max: 6,
            ..SearchConfig::default()
        };
        let out = find_annihilator(&expr("x1/(1+x1^2)"), &BasisOrdering::graph(1, Some(1)), &cfg).unwrap();
        assert!(matches!(
            out,
            SearchOutcome::NotFound(NotFound {
                reason: NotFoundReason::ExceedsNMax,
                ..
            })
        ));
    }

    #[test]
    fn verify_examples() {
        let ord = BasisOrdering::graph(1, Some(1));
        let o = expr("x1");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let good = Poly::parse("t - x1", ord, Q).unwrap();
        let v = verify_identity(&good, &o, 64, 1_000_000, &mut rng).unwrap();
        assert_eq!((v.trials, v.failures), (64, 0));
        let bad = Poly::parse("t", ord, Q).unwrap();
        let v = verify_identity(&bad, &o, 64, 1_000_000, &mut rng).unwrap();
        assert!(v.failures >= 1 && !v.passed());
        assert_eq!(
            verify_identity(&Poly::zero(ord, Q), &o, 4, 10, &mut rng),
            Err(AnnihilatorError::ZeroPolynomial)
        );
    }

    #[test]
    fn config_is_validated() {
        let cfg = SearchConfig {
            growth: Ratio::from_integer(1),
            ..SearchConfig::default()
        };
        assert!(matches!(
            find_annihilator(&expr("x1"), &BasisOrdering::graph(1, Some(1)), &cfg),
            Err(AnnihilatorError::Config(_))
        ));
        assert_eq!(SearchConfig::default().next_size(16), 32);
        let slow = SearchConfig {
            growth: Ratio::new(11, 10),
            ..SearchConfig::default()
        };
        assert_eq!(slow.next_size(3), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn results_are_seed_independent_and_monotone(
            coeffs in prop::collection::vec(-4i64..=4, 1..4),
            seed_a in any::<u64>(),
            seed_b in any::<u64>(),
        ) {
            // f(x) = (1 + x^2) / (c0 + c1 x + ...), shifted to avoid a zero denominator
            let den: Vec<String> = coeffs.iter().enumerate().map(|(i, c)| format!("({c})*x1^{i}")).collect();
            let text = format!("(1 + x1^2) / (7 + {})", den.join(" + "));
            let o = expr(&text);
            let ord = BasisOrdering::graph(1, Some(1));
            let run = |seed: u64, initial: usize| {
                let cfg = SearchConfig { seed, initial_samples: initial, ..SearchConfig::default() };
                find_annihilator(&o, &ord, &cfg).unwrap().found().cloned()
            };
            let (a, b) = (run(seed_a, 16).unwrap(), run(seed_b, 16).unwrap());
            prop_assert_eq!(a.c, b.c);
            prop_assert_eq!(&a.annihilator, &b.annihilator);
            prop_assert_eq!(a.annihilator.leading_index().unwrap(), a.c);
            let bigger = run(seed_a, 40).unwrap();
            prop_assert!(a.c <= bigger.c);
        }

        #[test]
        fn polynomial_oracles_give_t_minus_q(coeffs in prop::collection::vec(-5i64..=5, 1..5)) {
            let ord = BasisOrdering::graph(1, Some(1));
            let text: Vec<String> = coeffs.iter().enumerate().map(|(i, c)| format!("({c})*x1^{i}")).collect();
            let o = expr(&text.join(" + "));
            let r = find_annihilator(&o, &ord, &SearchConfig::default()).unwrap().found().cloned().unwrap();
            let q0 = Poly::parse(&text.join(" + "), ord, Q).unwrap();
            let t = Poly::parse("t", ord, Q).unwrap();
            let expected = t.try_sub(&q0).unwrap();
            let lead = expected.leading_term().unwrap().1.inv().unwrap();
            let expected = expected.scale(&lead);
            prop_assert_eq!(r.c, expected.leading_index().unwrap());
            prop_assert_eq!(r.annihilator, expected);
        }
    }
}
