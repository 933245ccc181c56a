// quick GEMM throughput probe
use ndarray::Array2;
use std::time::Instant;

#[test]
fn gemm_probe() {
    for &(m, k, n) in &[
        (64usize, 36usize, 7296usize),   // conv1 at 76x96
        (128, 576, 1824),                // RB conv at 38x48
        (256, 128, 7296),                // 1x1 head at 76x96
        (256, 256, 7296),
        (16, 36, 1824),                  // tiny net conv at 38x48
        (32, 144, 456),
    ] {
        let a = Array2::<f32>::from_elem((m, k), 0.5);
        let b = Array2::<f32>::from_elem((k, n), 0.25);
        let t0 = Instant::now();
        let mut iters = 0u32;
        let mut sink = 0.0f32;
        while t0.elapsed().as_secs_f64() < 0.5 {
            let c = a.dot(&b);
            sink += c[[0, 0]];
            iters += 1;
        }
        let secs = t0.elapsed().as_secs_f64();
        let gflops = (2.0 * m as f64 * k as f64 * n as f64 * iters as f64) / secs / 1e9;
        println!("GEMM {m}x{k}x{n}: {gflops:.1} GFLOP/s ({iters} iters, sink {sink})");
    }
}
