//! Wall-time benchmarks for the data-parallel hot paths, comparing the
//! default rayon pool against a single-thread pool over the same inputs.
//!
//! Build without the `parallel` feature to benchmark the plain sequential
//! fallback instead (the single-thread variants disappear because there is
//! no pool to pin).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use varcomplex::cohomlab::{
    operator_matrix, property_suite, BicomplexOp, MatrixPosition, TruncationSpec,
};
use varcomplex::BundleSpec;

fn bench_matrix_assembly(c: &mut Criterion) {
    let bundle = BundleSpec::new(["t", "x"], ["u"]).unwrap();
    let spec = TruncationSpec::new(2, 2, 1);
    let mut group = c.benchmark_group("operator_matrix_dh");
    group.sample_size(10);

    group.bench_function(BenchmarkId::new("threads", "default"), |b| {
        b.iter(|| {
            operator_matrix(
                &bundle,
                BicomplexOp::DH,
                &spec,
                MatrixPosition::Bidegree {
                    contact: 1,
                    horizontal: 1,
                },
            )
            .unwrap()
        })
    });

    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function(BenchmarkId::new("threads", "1"), |b| {
            b.iter(|| {
                pool.install(|| {
                    operator_matrix(
                        &bundle,
                        BicomplexOp::DH,
                        &spec,
                        MatrixPosition::Bidegree {
                            contact: 1,
                            horizontal: 1,
                        },
                    )
                    .unwrap()
                })
            })
        });
    }
    group.finish();
}

fn bench_property_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("property_suite_64_cases");
    group.sample_size(10);

    group.bench_function(BenchmarkId::new("threads", "default"), |b| {
        b.iter(|| property_suite(1, 64).unwrap())
    });

    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function(BenchmarkId::new("threads", "1"), |b| {
            b.iter(|| pool.install(|| property_suite(1, 64).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matrix_assembly, bench_property_suite);
criterion_main!(benches);
