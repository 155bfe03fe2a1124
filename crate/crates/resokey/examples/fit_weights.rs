// Fit the pattern-weight table so detected resonance codes come out uniform.
use resokey::pipeline::{extract_bits, ExtractionConfig};
use resokey::vibration::{random_scene_weighted, synthesize_collection, Observer, SceneConfig, ScenePreset};

fn main() {
    let preset = ScenePreset::default();
    let config = SceneConfig::default();
    let ex = ExtractionConfig::default();
    let n_scenes = 4000u64;
    let mut weights = [[0.25f64; 4]; 6];

    for iter in 0..8 {
        let mut counts = [[0usize; 4]; 6];
        let mut a_counts = [[0usize; 4]; 6];
        for seed in 0..n_scenes {
            let Ok((scene, _)) = random_scene_weighted(seed, &preset, &config, &weights) else {
                continue;
            };
            let scene = scene.noise_free();
            let trace = synthesize_collection(&scene, Observer::Device, 0).unwrap();
            let bits = extract_bits(&trace, &ex).unwrap();
            for s in 0..6 {
                let code = (bits.bit(2 * s), bits.bit(2 * s + 1));
                let idx = match code {
                    (0, 0) => 0,
                    (0, 1) => 1,
                    (1, 1) => 2,
                    (1, 0) => 3,
                    _ => unreachable!(),
                };
                counts[s][idx] += 1;
                let acode = (bits.bit(12 + 2 * s), bits.bit(12 + 2 * s + 1));
                let aidx = match acode {
                    (0, 0) => 0,
                    (0, 1) => 1,
                    (1, 1) => 2,
                    (1, 0) => 3,
                    _ => unreachable!(),
                };
                a_counts[s][aidx] += 1;
            }
        }
        let mut worst: f64 = 0.0;
        for s in 0..6 {
            let total: usize = counts[s].iter().sum();
            for c in 0..4 {
                let measured = counts[s][c] as f64 / total as f64;
                worst = worst.max((measured - 0.25).abs());
                let correction = (0.25 / measured.max(0.01)).powf(0.9);
                weights[s][c] = (weights[s][c] * correction).clamp(0.04, 0.62);
            }
            let sum: f64 = weights[s].iter().sum();
            for c in 0..4 {
                weights[s][c] /= sum;
            }
        }
        println!("iter {iter}: worst deviation {worst:.4}");
        if iter == 7 {
            println!("final weights:");
            for s in 0..6 {
                println!(
                    "    [{:.4}, {:.4}, {:.4}, {:.4}],",
                    weights[s][0], weights[s][1], weights[s][2], weights[s][3]
                );
            }
            println!("final detected R distribution:");
            for s in 0..6 {
                let total: usize = counts[s].iter().sum();
                let p: Vec<f64> = counts[s].iter().map(|&c| c as f64 / total as f64).collect();
                println!("    seg {s}: {:.3} {:.3} {:.3} {:.3}", p[0], p[1], p[2], p[3]);
            }
            println!("detected A distribution + entropy:");
            for s in 0..6 {
                let total: usize = a_counts[s].iter().sum();
                let p: Vec<f64> = a_counts[s]
                    .iter()
                    .map(|&c| c as f64 / total as f64)
                    .collect();
                let h: f64 = p
                    .iter()
                    .filter(|&&x| x > 0.0)
                    .map(|&x| -x * x.log2())
                    .sum();
                println!(
                    "    seg {s}: {:.3} {:.3} {:.3} {:.3}  H = {:.3}",
                    p[0], p[1], p[2], p[3], h
                );
            }
        }
    }
}
