//! Criterion benchmarks for the numerically hot paths: the error-exponent
//! optimization, both exhaustive solvers, and channel transmission.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mnac_core::codec::{CodebookSet, CodebookSpec, SignatureSet, TransmittedState};
use mnac_core::detector::{
    decode_messages_exhaustive, delta_n, detect_activity_exhaustive,
};
use mnac_core::exponent::{achievable_message_length, error_exponent_er, ExponentParams};
use mnac_core::rng;

fn bench_error_exponent(c: &mut Criterion) {
    let v = achievable_message_length(200, 50, 1.9, 0.2).unwrap();
    let params = ExponentParams::new(200, 50, 1.9, v).unwrap();
    c.bench_function("error_exponent_er n=200 k=50", |b| {
        b.iter(|| error_exponent_er(black_box(&params)).unwrap())
    });
}

fn bench_detection(c: &mut Criterion) {
    let sigs = SignatureSet::generate(16, 64, 10.0, 7).unwrap();
    let mut y = vec![0.0f64; 64];
    for u in [2u32, 5, 9, 12] {
        for (yi, s) in y.iter_mut().zip(sigs.signature(u)) {
            *yi += s;
        }
    }
    let mut noise = rng::stream(&[7, 99, 0]);
    let mut z = vec![0.0f64; 64];
    rng::fill_gaussian(&mut noise, 1.0, &mut z);
    for (yi, zi) in y.iter_mut().zip(&z) {
        *yi += zi;
    }
    let delta = delta_n(4.0).unwrap();
    c.bench_function("detect_exhaustive ell=16 budget=8", |b| {
        b.iter(|| detect_activity_exhaustive(black_box(&y), &sigs, 4.0, delta).unwrap())
    });
}

fn bench_decode(c: &mut Criterion) {
    // 4^6 = 4096 leaves.
    let spec = CodebookSpec::new(6, 48, 16, 4, 2.0).unwrap();
    let cb = CodebookSet::generate(spec, 11).unwrap();
    let state = TransmittedState::new(vec![1, 2, 3, 4, 1, 2]);
    let mut noise = rng::stream(&[11, 99, 0]);
    let out = mnac_core::channel::transmit(&cb, &state, 1.0, &mut noise).unwrap();
    let support: Vec<u32> = (0..6).collect();
    c.bench_function("decode_exhaustive 4096 leaves", |b| {
        b.iter(|| decode_messages_exhaustive(black_box(out.y_b()), &cb, &support).unwrap())
    });
}

fn bench_transmit(c: &mut Criterion) {
    let spec = CodebookSpec::new(32, 4096, 512, 4, 2.0).unwrap();
    let cb = CodebookSet::generate(spec, 13).unwrap();
    let state = TransmittedState::new((0..32).map(|u| (u % 5) as u32).collect());
    c.bench_function("transmit n=4096 ell=32", |b| {
        b.iter(|| {
            let mut noise = rng::stream(&[13, 99, 1]);
            mnac_core::channel::transmit(black_box(&cb), &state, 1.0, &mut noise).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_error_exponent,
    bench_detection,
    bench_decode,
    bench_transmit
);
criterion_main!(benches);
