use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ising_gap::boundary::make_boundary;
use ising_gap::contour::{count_contours_through, epsilon_contours_at, trap_membership};
use ising_gap::simulate::simulate;
use ising_gap::{
    exact_gap, Bond, BoundaryKind, Configuration, GeneratorOperator, LatticeBox, Model, RateFamily, RateKind, Sign,
    Site, TrapEvent,
};

fn model(l: i64, kind: BoundaryKind) -> Model {
    let b = LatticeBox::new(l).unwrap();
    let w = make_boundary(&kind, &b).unwrap();
    Model::new(b, w).unwrap()
}

fn generator(c: &mut Criterion) {
    let m = model(4, BoundaryKind::Alternating);
    let gen = GeneratorOperator::new(&m, RateFamily::new(RateKind::Metropolis, 1.5).unwrap()).unwrap();
    let v = gen.kernel_vector();
    c.bench_function("apply_symmetric l=4", |b| b.iter(|| gen.apply_symmetric(black_box(&v))));
    let block = vec![v.clone(), v.clone(), v];
    c.bench_function("apply_symmetric_block3 l=4", |b| b.iter(|| gen.apply_symmetric_block(black_box(&block))));
}

fn gaps(c: &mut Criterion) {
    let m = model(3, BoundaryKind::Alternating);
    let gen = GeneratorOperator::new(&m, RateFamily::new(RateKind::Exponential, 1.5).unwrap()).unwrap();
    c.bench_function("exact_gap dense l=3", |b| b.iter(|| exact_gap(black_box(&gen)).unwrap().gap));
}

fn contours(c: &mut Criterion) {
    let bond = Bond::new(Site::new(0, 0), Site::new(1, 0)).unwrap().dual();
    c.bench_function("count_contours_through m=10", |b| b.iter(|| count_contours_through(black_box(bond), 10)));
    let lattice = LatticeBox::new(8).unwrap();
    let spins: Vec<Sign> = (0..64).map(|i| if (i * 37 + i / 8) % 3 == 0 { Sign::Plus } else { Sign::Minus }).collect();
    let sigma = Configuration::from_spins(&spins);
    c.bench_function("epsilon_contours_at l=8", |b| {
        b.iter(|| epsilon_contours_at(black_box(&sigma), Sign::Minus, &lattice))
    });
    let trap = TrapEvent::new(8, Sign::Minus, 0.9).unwrap();
    c.bench_function("trap_membership l=8", |b| b.iter(|| trap_membership(black_box(&sigma), &trap, &lattice)));
}

fn simulation(c: &mut Criterion) {
    let m = model(8, BoundaryKind::Free);
    let r = RateFamily::new(RateKind::HeatBath, 0.4).unwrap();
    let s0 = Configuration::uniform(64, Sign::Plus);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.bench_function("l=8 t=100", |b| b.iter(|| simulate(&m, r, s0, 100.0, 1).unwrap().num_events()));
    group.finish();
}

criterion_group!(benches, generator, gaps, contours, simulation);
criterion_main!(benches);
