// Per-bit-position disagreement rates under noise.
use resokey::study::run_trial;
use resokey::vibration::{SceneConfig, ScenePreset};

fn main() {
    let preset = ScenePreset::default();
    let config = SceneConfig { noise_scale: 0.02, ..SceneConfig::default() };
    let n = 400u64;
    let mut flips = [0usize; 24];
    for seed in 0..n {
        let t = run_trial(seed, &preset, &config, None).unwrap();
        let w: Vec<u8> = t.wearable_bits.bytes().map(|b| b - b'0').collect();
        let d: Vec<u8> = t.device_bits.bytes().map(|b| b - b'0').collect();
        for i in 0..24 {
            if w[i] != d[i] { flips[i] += 1; }
        }
    }
    println!("R codes (bit pairs, flip % per bit):");
    for s in 0..6 {
        println!("  seg{}: {:.1}% {:.1}%", s + 1,
            100.0 * flips[2*s] as f64 / n as f64,
            100.0 * flips[2*s+1] as f64 / n as f64);
    }
    println!("A codes:");
    for s in 0..6 {
        println!("  seg{}: {:.1}% {:.1}%", s + 1,
            100.0 * flips[12+2*s] as f64 / n as f64,
            100.0 * flips[12+2*s+1] as f64 / n as f64);
    }
}
