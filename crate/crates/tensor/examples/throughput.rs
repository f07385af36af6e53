//! Prints rough matmul throughput for the shapes the models use most.
//! Run: cargo run -p paralign-tensor --example throughput --release

use std::time::Instant;

use paralign_tensor::Tensor;

fn bench(m: usize, k: usize, n: usize, reps: usize) {
    let a = Tensor::from_vec(m, k, (0..m * k).map(|i| (i as f64 * 0.37).sin() * 0.1).collect());
    let b = Tensor::from_vec(k, n, (0..k * n).map(|i| (i as f64 * 0.11).cos() * 0.1).collect());
    // Warm up.
    let mut sink = 0.0;
    for _ in 0..3 {
        sink += a.matmul(&b).data()[0];
    }
    let start = Instant::now();
    for _ in 0..reps {
        sink += a.matmul(&b).data()[0];
    }
    let dt = start.elapsed().as_secs_f64();
    let flops = 2.0 * (m * k * n * reps) as f64;
    println!(
        "{m}x{k} * {k}x{n}: {:>7.2} GFLOP/s  ({:.3} ms/op, sink {sink:.3})",
        flops / dt / 1e9,
        dt / reps as f64 * 1e3
    );
}

fn main() {
    bench(128, 128, 128, 400);
    bench(100, 128, 384, 200);
    bench(64, 320, 128, 200);
    bench(1, 128, 128, 4000);
    bench(1, 128, 408, 2000);
    bench(340, 128, 128, 150);
    bench(340, 128, 102, 150);
}
