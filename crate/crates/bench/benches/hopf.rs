use criterion::{criterion_group, criterion_main, Criterion};
use hopfpath_core::forest_hopf::{antipode_tree, coproduct_tree, extraction_coproduct_tree};
use hopfpath_core::trees::enumerate_trees;

fn bench_coproducts(c: &mut Criterion) {
    let trees = enumerate_trees(4, 1).unwrap();
    c.bench_function("coproduct_all_trees_size4_d1", |b| {
        b.iter(|| {
            for t in &trees {
                std::hint::black_box(coproduct_tree(t));
            }
        })
    });
    c.bench_function("extraction_all_trees_size4_d1", |b| {
        b.iter(|| {
            for t in &trees {
                std::hint::black_box(extraction_coproduct_tree(t));
            }
        })
    });
    c.bench_function("antipode_all_trees_size4_d1", |b| {
        b.iter(|| {
            for t in &trees {
                std::hint::black_box(antipode_tree(t));
            }
        })
    });
}

criterion_group!(benches, bench_coproducts);
criterion_main!(benches);
