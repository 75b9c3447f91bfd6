use dronepose_core::dataset::generate_samples;
use dronepose_core::models::Archetype;
use dronepose_core::pose::RegimePreset;
use std::time::Instant;

fn main() {
    let t = Instant::now();
    let samples = generate_samples(Archetype::ModelB, RegimePreset::Full, 100, 7).unwrap();
    let dt = t.elapsed();
    println!("100 samples in {:.2?} ({:.1} ms/sample)", dt, dt.as_secs_f64() * 10.0);
    let nnz = samples.iter().map(|s| s.sensor.intensity_counts.iter().filter(|&&c| c > 0).count()).sum::<usize>() as f64 / samples.len() as f64;
    println!("mean intensity nnz pixels: {:.0} / 19200 ({:.1}%)", nnz, nnz / 192.0);
    let hnz = samples.iter().map(|s| s.sensor.depth_hist.iter().filter(|&&h| h > 0).count()).sum::<usize>() as f64 / samples.len() as f64;
    println!("mean hist nnz cells: {:.0} / 18000 ({:.1}%)", hnz, hnz / 180.0);
}
