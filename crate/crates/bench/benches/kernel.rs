use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sepreg_bench::graph_sample;
use sepreg_core::kernel::{c_of_sample, cofactor_vector, graph_row, select_points};
use sepreg_core::{BasisOrdering, EvalMatrix, FieldDesc, PointSelection};

const FUNCTIONS: [&str; 3] = ["x1/(1+x1^2)", "(x1^3-2)/(x1^2+x1+5)", "(x1^4+x1)/(3*x1^4-x1^2+7)"];

fn c_value(c: &mut Criterion) {
    let ord = BasisOrdering::graph(1, Some(1));
    let mut group = c.benchmark_group("c_of_sample");
    for field in [FieldDesc::Rationals, FieldDesc::PrimeField(2_147_483_647)] {
        for f in FUNCTIONS {
            let sample = graph_sample(f, field, 64, 1);
            group.bench_with_input(BenchmarkId::new(field.to_string(), f), &sample, |b, s| {
                b.iter(|| c_of_sample(s, &ord, 200).unwrap());
            });
        }
    }
    group.finish();
}

fn cofactors(c: &mut Criterion) {
    let ord = BasisOrdering::graph(1, Some(1));
    let mut group = c.benchmark_group("cofactor_vector");
    for field in [FieldDesc::Rationals, FieldDesc::PrimeField(2_147_483_647)] {
        for f in FUNCTIONS {
            let sample = graph_sample(f, field, 64, 2);
            let n = c_of_sample(&sample, &ord, 200).unwrap().n().unwrap();
            let PointSelection::Selected(points) = select_points(&sample, &ord, n).unwrap() else {
                panic!("degenerate sample for {f}");
            };
            let monomials = ord.enumerate(n);
            let rows = points.iter().map(|p| graph_row(&monomials, p, field)).collect();
            let mat = EvalMatrix::from_rows(field, n, rows);
            group.bench_with_input(BenchmarkId::new(field.to_string(), f), &mat, |b, m| {
                b.iter(|| cofactor_vector(m).unwrap());
            });
        }
    }
    group.finish();
}

criterion_group!(benches, c_value, cofactors);
criterion_main!(benches);
