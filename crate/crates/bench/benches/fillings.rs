//! Hot-path timings: exact area search, skeleton pushing, and the
//! rational filling-norm program on small fixed inputs.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dehn_core::filling::{vk_area, CellularTwoChain};
use dehn_core::geom::{build_grid_e2, PLChain, PLPiece};
use dehn_core::norm::filling_norm;
use dehn_core::push::{push_chain, PushConfig};
use dehn_core::{GroupModel, Word};

fn bench_vk_area(c: &mut Criterion) {
    let model = GroupModel::free_abelian(2);
    let words = [("commutator-2", "aabbAABB"), ("commutator-3", "aaabbbAAABBB")];
    for (name, text) in words {
        let w = Word::parse(text).unwrap();
        c.bench_function(&format!("vk_area {name}"), |b| {
            b.iter(|| vk_area(black_box(&w), model.presentation(), 1_000_000).unwrap())
        });
    }
}

fn bench_push(c: &mut Criterion) {
    let patch = build_grid_e2(4).unwrap();
    let square = PLChain {
        dim: 1,
        pieces: vec![PLPiece {
            coords: vec![
                [-1.0, -1.0, 0.0],
                [1.0, -1.0, 0.0],
                [1.0, 1.0, 0.0],
                [-1.0, 1.0, 0.0],
                [-1.0, -1.0, 0.0],
            ],
            multiplicity: 1,
        }],
    };
    let config = PushConfig::default();
    c.bench_function("push 2x2 loop into grid skeleton", |b| {
        b.iter(|| push_chain(black_box(&square), &patch, &config).unwrap())
    });
}

fn bench_filling_norm(c: &mut Criterion) {
    let patch = build_grid_e2(4).unwrap();
    let view = patch.two_complex_view();
    // a 2x2 block of cells: eight triangles, boundary of length 8
    let mut block = CellularTwoChain::default();
    let corners = [(-1.0, -1.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 0.0)];
    for t in 0..patch.triangles.len() as u32 {
        let p = patch.triangle_points(t);
        let (cx, cy) = (
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        );
        if corners.iter().any(|&(x, y)| cx > x && cx < x + 1.0 && cy > y && cy < y + 1.0) {
            block.set(t, 1);
        }
    }
    assert_eq!(block.l1_norm(), 8);
    let cycle = view.boundary(&block);
    c.bench_function("filling_norm of an 8-edge block boundary", |b| {
        b.iter(|| filling_norm(black_box(&cycle), &view).unwrap())
    });
}

criterion_group!(benches, bench_vk_area, bench_push, bench_filling_norm);
criterion_main!(benches);
