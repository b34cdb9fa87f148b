//! Fixtures shared by the benchmarks.

use sepreg_core::oracle::{Arity, FunctionOracle, Oracle, Sampler, SamplerKind};
use sepreg_core::{FieldDesc, GraphPoint, GraphSample};

/// Graph sample of `expr` (one `x` variable) at `count` uniform integer
/// points where it is defined.
pub fn graph_sample(expr: &str, field: FieldDesc, count: usize, seed: u64) -> GraphSample {
    let oracle = FunctionOracle::from_expression(expr, Some(Arity::new(1, 0)), field).expect("expression");
    let points = Sampler::new(SamplerKind::UniformIntegers { range: 1_000_000 }, 1, field)
        .stream(seed)
        .filter_map(|x| oracle.eval(&x).map(|v| GraphPoint::new(x, v)))
        .take(count);
    GraphSample::from_points(field, 1, points).expect("sample")
}

pub fn two_argument(expr: &str, field: FieldDesc) -> FunctionOracle {
    FunctionOracle::from_expression(expr, Some(Arity::new(1, 1)), field).expect("expression")
}
