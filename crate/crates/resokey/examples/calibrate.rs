// Fit the global noise scale against the overview bit-mismatch target.
use resokey::study::run_trial;
use resokey::vibration::{SceneConfig, ScenePreset};

fn main() {
    let preset = ScenePreset::default();
    let n = 1500u64;
    for scale in [0.0062, 0.0066, 0.0070, 0.0074] {
        let config = SceneConfig {
            noise_scale: scale,
            ..SceneConfig::default()
        };
        let mut raw = 0.0;
        let mut key = 0.0;
        let mut matched = 0usize;
        let mut paired = 0usize;
        let mut attempts = 0.0;
        for seed in 0..n {
            let t = run_trial(seed, &preset, &config, None).unwrap();
            raw += t.raw_bmr;
            key += t.key_bmr;
            matched += t.keys_matched as usize;
            paired += (t.paired && !t.fallback) as usize;
            attempts += t.attempts as f64;
        }
        let nf = n as f64;
        println!(
            "scale {scale:.3}: raw_bmr {:.4}  key_bmr {:.5}  match {:.4}  success {:.4}  attempts {:.3}",
            raw / nf, key / nf, matched as f64 / nf, paired as f64 / nf, attempts / nf
        );
    }
}
