use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netmine_bench::synthetic;
use netmine_core::layout::fr_layout;
use netmine_core::significance::{null_threshold, NullConfig};
use netmine_core::stats::{chi_squared_overlay, geodesic_table_by_attribute};
use netmine_core::{build_cluster_graph, cluster_scope};

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster");
    for size in [150, 290, 1000] {
        let f = synthetic(size);
        group.bench_with_input(BenchmarkId::from_parameter(f.giant.len()), &f, |b, f| {
            b.iter(|| cluster_scope(&f.net, &f.giant, 7).unwrap())
        });
    }
    group.finish();
}

fn null_model(c: &mut Criterion) {
    let f = synthetic(290);
    let giant = f.net.induced_subgraph(f.giant.iter().copied()).unwrap();
    let mut group = c.benchmark_group("null_threshold");
    group.sample_size(10);
    group.bench_function("R=10", |b| {
        b.iter(|| null_threshold(&giant, NullConfig::new(10, 7)).unwrap())
    });
    group.finish();
}

fn layout(c: &mut Criterion) {
    let f = synthetic(290);
    let cg = build_cluster_graph(&f.net, &f.partition);
    c.bench_function("fr_layout/500", |b| {
        b.iter(|| fr_layout(&cg, 7, 500).unwrap())
    });
}

fn tables(c: &mut Criterion) {
    let f = synthetic(290);
    c.bench_function("geodesics/orientation", |b| {
        b.iter(|| geodesic_table_by_attribute(&f.net, &f.giant, "orientation").unwrap())
    });
    c.bench_function("chi_squared_overlay", |b| {
        b.iter(|| chi_squared_overlay(&f.net, &f.partition, "orientation").unwrap())
    });
}

criterion_group!(benches, clustering, null_model, layout, tables);
criterion_main!(benches);
