use std::time::Instant;
fn main() {
    let img = freqmix::corpus::synthetic_corpus(1, 512, 512, 3, 42).remove(0);
    let variants = freqmix::variants::make_variant_set(&img, &freqmix::variants::VariantConfig::default()).unwrap();
    let grid = freqmix::masks::frequency_distance_grid(512, 512).unwrap();
    let bank = freqmix::masks::make_basis_bank(&grid, 25).unwrap();
    for _ in 0..3 {
        let cfg = freqmix::optim::OptimizerConfig { steps: 30, ..Default::default() };
        let t0 = Instant::now();
        let trace = freqmix::optim::optimize_coefficients(&img, &variants, &bank, 0.3, &cfg).unwrap();
        let dt = t0.elapsed();
        println!("30 steps: {:.2} s -> {:.1} ms/step; est 300 steps {:.1} s",
            dt.as_secs_f64(), dt.as_secs_f64()*1000.0/30.0, dt.as_secs_f64()*10.0);
        let _ = trace;
    }
}
