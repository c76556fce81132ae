//! The c^xx string determinants dominate the sweep. Compare the
//! incremental per-anchor evaluation in `all_pairs` against recomputing
//! every r x r determinant from scratch: the gap is what the QR-update
//! scheme buys.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use xxring::correlators::cxx_direct;
use xxring::{all_pairs, build_chain, ground_state_correlations, ChainModel, DisorderSpec};

fn determinant_sweep(c: &mut Criterion) {
    let l = 48usize;
    let chain = build_chain(ChainModel::Uncorrelated, l, DisorderSpec::power_law(2.0), 9)
        .expect("valid chain");
    let sol = ground_state_correlations(&chain).expect("solvable");

    let mut g = c.benchmark_group("cxx_sweep_L48");
    g.bench_function("incremental", |b| {
        b.iter(|| black_box(all_pairs(&sol, None).expect("complete sweep")))
    });
    g.bench_function("direct", |b| {
        b.iter(|| {
            let mut acc = 0.0f64;
            for i in 0..l {
                for j in i + 1..l {
                    acc += cxx_direct(&sol.g, i, j);
                }
            }
            black_box(acc)
        })
    });
    g.finish();
}

criterion_group!(benches, determinant_sweep);
criterion_main!(benches);
