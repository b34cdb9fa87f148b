//! Command execution and report rendering.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sepreg_core::annihilator::{default_sampler, verify_on_points};
use sepreg_core::oracle::{derive_seed, read_points_csv};
use sepreg_core::reconstruct::{default_a_sampler, default_y_sampler, select_mode, slice_scan};
use sepreg_core::{
    direct_reconstruct, find_annihilator_with, reconstruct_separately_regular, verify_identity, Arity, BasisOrdering,
    FieldDesc, FunctionOracle, NotFoundReason, Oracle, Poly, ReconstructConfig, ReconstructError, SampleTable, Sampler,
    SamplerKind, Scalar, SearchConfig, SearchOutcome, SliceProfile, Verification,
};

use crate::args::{Command, Common, Output};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_FOUND: u8 = 2;
pub const EXIT_VERIFICATION_FAILED: u8 = 3;

pub struct Report {
    pub code: u8,
    pub rendered: String,
}

enum ASampler {
    Default,
    Integers,
    Uniform,
    File(PathBuf, Vec<Vec<Scalar>>),
}

impl ASampler {
    fn label(&self, default: &str) -> String {
        match self {
            ASampler::Default => default.to_string(),
            ASampler::Integers => "integers".into(),
            ASampler::Uniform => "uniform".into(),
            ASampler::File(p, _) => format!("file:{}", p.display()),
        }
    }

    fn sampler(&self, arity: usize, field: FieldDesc, range: u64) -> Result<Option<Sampler>> {
        Ok(match self {
            ASampler::Default => None,
            ASampler::Integers => Some(Sampler::new(SamplerKind::UniformIntegers { range }, arity, field)),
            ASampler::Uniform => Some(Sampler::new(SamplerKind::UniformRationals { range }, arity, field)),
            ASampler::File(path, points) => {
                if let Some(bad) = points.iter().find(|p| p.len() != arity) {
                    bail!(
                        "{}: points have {} coordinates, expected {arity}",
                        path.display(),
                        bad.len()
                    );
                }
                Some(Sampler::new(SamplerKind::UserList(points.clone()), arity, field))
            }
        })
    }
}

/// Everything a run depends on, validated.
struct RunConfig {
    field: FieldDesc,
    oracle: FunctionOracle,
    arity: Arity,
    t_cap: u32,
    search: SearchConfig,
    a_sampler: ASampler,
    output: Output,
    echo: serde_json::Map<String, Value>,
}

impl RunConfig {
    /// `min_x`/`min_y` lift inferred variable counts (a constant expression
    /// still gets one `x`).
    fn build(command: &str, c: &Common, min_x: usize, min_y: usize) -> Result<Self> {
        let field = FieldDesc::from_str(&c.field).with_context(|| format!("bad --field {:?}", c.field))?;
        let growth = Ratio::<u64>::from_str(&c.grow).map_err(|_| anyhow::anyhow!("bad --grow {:?}", c.grow))?;
        if c.t_cap == 0 {
            bail!("--t-cap must be at least 1");
        }
        let search = SearchConfig {
            n_max: c.n_max,
            initial_samples: c.samples,
            growth,
            window: c.window,
            verify_trials: c.verify_trials,
            range: c.range,
            seed: c.seed,
            ..SearchConfig::default()
        };
        search.validate()?;

        let (oracle, source) = match (&c.expr, &c.table) {
            (Some(text), _) => {
                let inferred = FunctionOracle::from_expression(text, None, field)?.xy_arity();
                let arity = Arity::new(
                    c.x_vars.unwrap_or(inferred.num_x.max(min_x)),
                    c.y_vars.unwrap_or(inferred.num_y.max(min_y)),
                );
                let oracle = FunctionOracle::from_expression(text, Some(arity), field)?;
                (oracle, ("expr", Value::from(text.as_str())))
            }
            (None, Some(path)) => {
                let table = SampleTable::load(path, field).with_context(|| format!("reading {}", path.display()))?;
                let a = table.arity();
                if c.x_vars.is_some_and(|m| m != a.num_x) || c.y_vars.is_some_and(|k| k != a.num_y) {
                    bail!("table header has {} x and {} y columns", a.num_x, a.num_y);
                }
                let shown = path.display().to_string();
                (FunctionOracle::from_table(table), ("table", Value::from(shown)))
            }
            (None, None) => bail!("one of --expr or --table is required"),
        };
        let arity = oracle.xy_arity();

        let a_sampler = match c.a_sampler.as_deref() {
            None => ASampler::Default,
            Some("integers") => ASampler::Integers,
            Some("uniform") => ASampler::Uniform,
            Some(spec) => match spec.strip_prefix("file:") {
                Some(path) => {
                    let path = PathBuf::from(path);
                    let file = std::fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
                    let points = read_points_csv(file, field)?;
                    ASampler::File(path, points)
                }
                None => bail!("bad --a-sampler {spec:?}: expected integers, uniform or file:<path>"),
            },
        };

        let mut echo = serde_json::Map::new();
        echo.insert("command".into(), command.into());
        echo.insert("field".into(), field.to_string().into());
        echo.insert(source.0.into(), source.1);
        echo.insert("x_vars".into(), arity.num_x.into());
        echo.insert("y_vars".into(), arity.num_y.into());
        echo.insert("t_cap".into(), c.t_cap.into());
        echo.insert("n_max".into(), c.n_max.into());
        echo.insert("samples".into(), c.samples.into());
        echo.insert("grow".into(), growth.to_string().into());
        echo.insert("window".into(), c.window.into());
        echo.insert("verify_trials".into(), c.verify_trials.into());
        echo.insert("range".into(), c.range.into());
        echo.insert("seed".into(), c.seed.into());
        echo.insert(
            "output".into(),
            match c.output {
                Output::Json => "json",
                Output::Text => "text",
            }
            .into(),
        );
        Ok(Self {
            field,
            oracle,
            arity,
            t_cap: c.t_cap,
            search,
            a_sampler,
            output: c.output,
            echo,
        })
    }

    fn require_two_blocks(&self) -> Result<()> {
        if self.arity.num_x == 0 || self.arity.num_y == 0 {
            bail!(
                "needs a function of x and y, got {} x and {} y variables",
                self.arity.num_x,
                self.arity.num_y
            );
        }
        Ok(())
    }

    fn basis_json(&self, ordering: &BasisOrdering) -> Value {
        let vars: Vec<String> = (0..ordering.num_vars()).map(|i| ordering.var_name(i)).collect();
        json!({
            "variables": vars,
            "order": "graded lexicographic, earlier variables dominate",
            "t_cap": ordering.t_cap,
        })
    }

    fn finish(mut self, code: u8, result: Value, text: String) -> Report {
        let rendered = match self.output {
            Output::Text => text,
            Output::Json => {
                let config = Value::Object(std::mem::take(&mut self.echo));
                serde_json::to_string_pretty(&json!({ "config": config, "result": result }))
                    .expect("json serialization")
            }
        };
        Report { code, rendered }
    }
}

fn scalars(v: &[Scalar]) -> Value {
    v.iter().map(|s| Value::from(s.to_string())).collect()
}

fn show_point(v: &[Scalar]) -> String {
    let parts: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn verification_json(v: &Verification) -> Value {
    json!({ "trials": v.trials, "failures": v.failures, "degree_bound": v.degree_bound })
}

pub fn execute(command: Command) -> Result<Report> {
    match command {
        Command::Annihilate(c) => annihilate(RunConfig::build("annihilate", &c, 1, 0)?),
        Command::Reconstruct { common, slices, direct } => {
            let mut cfg = RunConfig::build("reconstruct", &common, 1, 1)?;
            cfg.echo.insert("slices".into(), slices.into());
            cfg.echo.insert("direct".into(), direct.into());
            reconstruct(cfg, slices, direct)
        }
        Command::SliceScan { common, slices } => {
            let mut cfg = RunConfig::build("slice-scan", &common, 1, 1)?;
            cfg.echo.insert("slices".into(), slices.into());
            scan(cfg, slices)
        }
        Command::Verify { common, relation } => {
            let mut cfg = RunConfig::build("verify", &common, 1, 0)?;
            cfg.echo.insert("relation".into(), relation.as_str().into());
            verify(cfg, &relation)
        }
    }
}

fn annihilate(mut cfg: RunConfig) -> Result<Report> {
    let Arity { num_x, num_y } = cfg.arity;
    let ordering = BasisOrdering::new(num_x, num_y, true, Some(cfg.t_cap));
    let default_label = if cfg.oracle.is_table() {
        "table-domain"
    } else {
        "integers"
    };
    cfg.echo
        .insert("a_sampler".into(), cfg.a_sampler.label(default_label).into());
    cfg.echo.insert("basis".into(), cfg.basis_json(&ordering));
    let sampler = match cfg.a_sampler.sampler(cfg.arity.total(), cfg.field, cfg.search.range)? {
        Some(s) => s,
        None => default_sampler(&cfg.oracle, &cfg.search),
    };
    match find_annihilator_with(&cfg.oracle, &ordering, &cfg.search, &sampler)? {
        SearchOutcome::Found(r) => {
            let poly = r.annihilator.serialize();
            let text = format!(
                "c = {}\nannihilator: {poly}\nsamples: {} ({} rounds)\nverification: {} trials, {} failures",
                r.c, r.sample_size_used, r.rounds, r.verification.trials, r.verification.failures
            );
            let result = json!({
                "kind": "annihilator",
                "status": "found",
                "c": r.c,
                "poly": poly,
                "sample_size": r.sample_size_used,
                "rounds": r.rounds,
                "verification": verification_json(&r.verification),
            });
            Ok(cfg.finish(EXIT_OK, result, text))
        }
        SearchOutcome::NotFound(nf) => {
            let reason = match nf.reason {
                NotFoundReason::ExceedsNMax => "exceeds_n_max",
                NotFoundReason::SamplesExhausted => "samples_exhausted",
                NotFoundReason::NotStable => "not_stable",
            };
            let text = format!("no annihilator found ({reason}) after {} samples", nf.sample_size);
            let result = json!({
                "kind": "annihilator",
                "status": "not_found",
                "reason": reason,
                "sample_size": nf.sample_size,
                "last_c": nf.last_c,
            });
            Ok(cfg.finish(EXIT_NOT_FOUND, result, text))
        }
    }
}

fn profile_json(profile: &SliceProfile, mode: Option<usize>) -> Value {
    profile
        .entries
        .iter()
        .map(|e| {
            json!({
                "y": scalars(&e.y),
                "c": e.c,
                "exceptional": e.oracle_failure || e.c != mode,
            })
        })
        .collect()
}

fn profile_text(profile: &SliceProfile) -> String {
    profile
        .entries
        .iter()
        .map(|e| {
            let c = e.c.map_or("unbounded".to_string(), |c| c.to_string());
            let flag = if e.oracle_failure { " (oracle failure)" } else { "" };
            format!("  y = {}: c = {c}{flag}", show_point(&e.y))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn reconstruct(mut cfg: RunConfig, slices: usize, direct: bool) -> Result<Report> {
    let Arity { num_x, num_y } = cfg.arity;
    cfg.require_two_blocks()?;
    let default_label = if cfg.oracle.is_table() {
        "table-domain"
    } else {
        "uniform"
    };
    cfg.echo
        .insert("a_sampler".into(), cfg.a_sampler.label(default_label).into());
    cfg.echo.insert(
        "basis".into(),
        cfg.basis_json(&BasisOrdering::new(num_x, num_y, true, Some(1))),
    );
    let rcfg = ReconstructConfig {
        search: cfg.search.clone(),
        num_slices: slices,
        verify_points: cfg.search.verify_trials,
        ..ReconstructConfig::default()
    };
    let method = if direct { "direct" } else { "slices" };
    let outcome = if direct {
        direct_reconstruct(&cfg.oracle, &rcfg).map(|rep| (rep, None))
    } else {
        let a = match cfg.a_sampler.sampler(num_x, cfg.field, cfg.search.range)? {
            Some(s) => s,
            None => default_a_sampler(&cfg.oracle, &rcfg),
        };
        let y = default_y_sampler(&cfg.oracle, &rcfg);
        reconstruct_separately_regular(&cfg.oracle, &a, &y, &rcfg).map(|r| (r.rep.clone(), Some(r)))
    };
    match outcome {
        Ok((rep, details)) => {
            let (num, den) = (rep.numerator.serialize(), rep.denominator.serialize());
            let v = &rep.verification;
            let mut result = json!({
                "kind": "rational_rep",
                "status": "found",
                "method": method,
                "numerator": num,
                "denominator": den,
                "verification": {
                    "trials": v.trials,
                    "failures": v.failures,
                    "nonvanishing": v.nonvanishing,
                },
            });
            let mut text = format!(
                "P = {num}\nQ = {den}\nverification: {} trials, {} failures",
                v.trials, v.failures
            );
            if let Some(r) = details {
                let obj = result.as_object_mut().expect("object");
                let b_size = r.profile.entries.iter().filter(|e| e.c == Some(r.n)).count();
                obj.insert("n".into(), r.n.into());
                obj.insert("b_size".into(), b_size.into());
                obj.insert("y0".into(), scalars(&r.y0));
                obj.insert("probes".into(), r.probes.iter().map(|p| scalars(p)).collect());
                obj.insert("probe_attempts".into(), r.probe_attempts.into());
                obj.insert("slice_profile".into(), profile_json(&r.profile, Some(r.n)));
                let probes: Vec<String> = r.probes.iter().map(|p| show_point(p)).collect();
                text.push_str(&format!(
                    "\nn = {}, |B| = {b_size} of {}\ny0 = {}\nprobes: {}",
                    r.n,
                    r.profile.entries.len(),
                    show_point(&r.y0),
                    probes.join(" ")
                ));
            }
            Ok(cfg.finish(EXIT_OK, result, text))
        }
        Err(ReconstructError::VerificationFailed { point }) => {
            let result = json!({
                "kind": "rational_rep",
                "status": "verification_failed",
                "method": method,
                "point": scalars(&point),
            });
            let text = format!("verification failed at {}", show_point(&point));
            Ok(cfg.finish(EXIT_VERIFICATION_FAILED, result, text))
        }
        Err(e @ (ReconstructError::NotFound(_) | ReconstructError::AllUnbounded)) => {
            let result = json!({
                "kind": "rational_rep",
                "status": "not_found",
                "method": method,
                "reason": e.to_string(),
            });
            Ok(cfg.finish(EXIT_NOT_FOUND, result, format!("no representation found: {e}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn scan(mut cfg: RunConfig, slices: usize) -> Result<Report> {
    cfg.require_two_blocks()?;
    cfg.echo.insert(
        "basis".into(),
        cfg.basis_json(&BasisOrdering::graph(cfg.arity.num_x, Some(1))),
    );
    let rcfg = ReconstructConfig {
        search: cfg.search.clone(),
        ..ReconstructConfig::default()
    };
    let profile = slice_scan(&cfg.oracle, &default_y_sampler(&cfg.oracle, &rcfg), slices, &cfg.search)?;
    let mode = select_mode(&profile).ok();
    let n = mode.as_ref().map(|(n, _)| *n);
    let b_size = mode.as_ref().map_or(0, |(_, b)| b.len());
    let result = json!({
        "kind": "profile",
        "n": n,
        "b_size": b_size,
        "slice_profile": profile_json(&profile, n),
    });
    let head = match n {
        Some(n) => format!("n = {n}, |B| = {b_size} of {}", profile.entries.len()),
        None => "every slice is unbounded".into(),
    };
    let text = format!("{head}\n{}", profile_text(&profile));
    Ok(cfg.finish(EXIT_OK, result, text))
}

fn verify(mut cfg: RunConfig, relation: &str) -> Result<Report> {
    let Arity { num_x, num_y } = cfg.arity;
    let ordering = BasisOrdering::new(num_x, num_y, true, None);
    cfg.echo.insert("basis".into(), cfg.basis_json(&ordering));
    let q = Poly::parse(relation, ordering, cfg.field).with_context(|| format!("parsing relation {relation:?}"))?;
    let v = match cfg.oracle.domain() {
        Some(points) => verify_on_points(&q, &cfg.oracle, points.len(), points, cfg.search.failure_budget)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.search.seed, 7));
            verify_identity(&q, &cfg.oracle, cfg.search.verify_trials, cfg.search.range, &mut rng)?
        }
    };
    let passed = v.passed() && v.trials > 0;
    let result = json!({
        "kind": "verify",
        "passed": passed,
        "relation": q.serialize(),
        "verification": verification_json(&v),
    });
    let text = format!(
        "{}: {} trials, {} failures",
        if passed { "passed" } else { "failed" },
        v.trials,
        v.failures
    );
    let code = if passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED };
    Ok(cfg.finish(code, result, text))
}
