use resokey::pipeline::{extract_extrema, ExtractionConfig};
use resokey::vibration::{natural_frequencies, random_scene_planned, synthesize_collection, Observer, SceneConfig, ScenePreset};

fn main() {
    let preset = ScenePreset::default();
    let config = SceneConfig::default();
    let ex = ExtractionConfig::default();
    let mut shown = 0;
    for seed in 0..400u64 {
        let (scene, plan) = random_scene_planned(seed, &preset, &config).unwrap();
        let scene = scene.noise_free();
        let trace = synthesize_collection(&scene, Observer::Device, 0).unwrap();
        let found = extract_extrema(&trace, &ex).unwrap();
        let naturals: Vec<f64> = natural_frequencies(&scene.system)
            .unwrap().iter().map(|w| w / (2.0 * std::f64::consts::PI)).collect();
        let missing: Vec<f64> = naturals.iter().copied()
            .filter(|&m| m < 37.5)
            .filter(|&m| !found.resonances.iter().any(|e| (e.frequency_hz - m).abs() < 5.0))
            .collect();
        if missing.is_empty() { continue; }
        shown += 1;
        if shown > 5 { break; }
        println!("== seed {seed} missing {missing:?}");
        println!("   modes {:?}", naturals.iter().map(|f| (f*10.0).round()/10.0).collect::<Vec<_>>());
        println!("   det res {:?}", found.resonances.iter().map(|e| ((e.frequency_hz*10.0).round()/10.0, (e.amplitude*1e4).round()/1e4)).collect::<Vec<_>>());
        println!("   det anti {:?}", found.antiresonances.iter().map(|e| ((e.frequency_hz*10.0).round()/10.0, (e.amplitude*1e4).round()/1e4)).collect::<Vec<_>>());
    }
}
