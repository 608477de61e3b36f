use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use webbed::interp::{interpret, separate, Fuel};
use webbed::lambda::Term;
use webbed::webs::{graph_web, IWeb};
use webbed::Token;

fn web(atoms: &[&str]) -> IWeb {
    let atoms: Vec<Token> = atoms.iter().map(|a| Token::atom(a)).collect();
    Arc::new(graph_web(&atoms, vec![]).expect("graph web"))
}

fn combinators(c: &mut Criterion) {
    let w = web(&["0"]);
    let mut group = c.benchmark_group("interpret");
    group.sample_size(10);
    for (name, t) in [("I", Term::identity()), ("K", Term::k()), ("S", Term::s())] {
        for depth in [2, 3, 4] {
            let fuel = Fuel::new(depth, 2);
            group.bench_with_input(BenchmarkId::new(name, depth), &fuel, |b, &fuel| {
                b.iter(|| interpret(black_box(&t), &w, fuel).expect("interpret"))
            });
        }
    }
    group.finish();
}

fn separation(c: &mut Criterion) {
    let w = web(&["0"]);
    let mut group = c.benchmark_group("separate");
    group.sample_size(10);
    group.bench_function("I_vs_K", |b| {
        b.iter(|| separate(&Term::identity(), &Term::k(), &w, Fuel::new(4, 2)).expect("separate"))
    });
    group.bench_function("I_vs_Omega", |b| {
        b.iter(|| separate(&Term::identity(), &Term::omega(), &w, Fuel::new(6, 2)).expect("separate"))
    });
    group.finish();
}

criterion_group!(benches, combinators, separation);
criterion_main!(benches);
