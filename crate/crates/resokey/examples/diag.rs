// Calibration diagnostic: planned-vs-detected statistics over many scenes.
use resokey::encoding::SegmentGrid;
use resokey::pipeline::{extract_extrema, ExtractionConfig};
use resokey::vibration::{
    natural_frequencies, random_scene_planned, Observer, SceneConfig,
    ScenePreset,
};

const GUARD: f64 = 0.25;

fn peak_shift_model(f: f64) -> f64 {
    0.43 - 0.0042 * f
}

fn dip_shift_model(f: f64) -> f64 {
    -0.68 + 0.0035 * f
}

fn main() {
    let preset = ScenePreset::default();
    let config = SceneConfig::default();
    let ex = ExtractionConfig::default();
    let grid = SegmentGrid::default();

    let mut peak_shifts: Vec<(f64, f64)> = Vec::new(); // (true freq, detected - true)
    let mut dip_shifts: Vec<(f64, f64)> = Vec::new();
    let mut res_code_match = 0usize;
    let mut res_code_total = 0usize;
    let mut dip_code_match = 0usize;
    let mut dip_code_total = 0usize;
    let mut spurious_res = 0usize;
    let mut missing_res = 0usize;
    let mut spurious_dip = 0usize;
    let mut seg_a_occupancy = [0usize; 6];
    let mut seg_r_occupancy = [0usize; 6];
    let mut missing_by_seg = [0usize; 6];
    let mut missing_pad = 0usize;
    let n_scenes = 400;

    for seed in 0..n_scenes {
        let (scene, plan) = random_scene_planned(seed, &preset, &config).unwrap();
        let scene = scene.noise_free();
        let trace = resokey::vibration::synthesize_collection(&scene, Observer::Device, 0).unwrap();
        let found = extract_extrema(&trace, &ex).unwrap();
        let naturals: Vec<f64> = natural_frequencies(&scene.system)
            .unwrap()
            .iter()
            .map(|w| w / (2.0 * std::f64::consts::PI))
            .collect();

        // Peak residuals: detected position minus intended (compensated)
        // position per true mode.
        for &m in &naturals {
            let intended = m + peak_shift_model(m);
            let nearest = found
                .resonances
                .iter()
                .map(|e| e.frequency_hz)
                .min_by(|a, b| ((a - m).abs()).partial_cmp(&(b - m).abs()).unwrap());
            if let Some(d) = nearest {
                if (d - m).abs() < 5.0 {
                    peak_shifts.push((m, d - intended));
                } else {
                    missing_res += 1;
                    let seg = ((m - 20.0) / 17.5) as usize;
                    missing_by_seg[seg.min(5)] += 1;
                    let is_designated = plan
                        .peaks_hz
                        .iter()
                        .zip(&plan.designated)
                        .any(|(&p, &d)| (p - m).abs() < 0.01 && d);
                    if !is_designated {
                        missing_pad += 1;
                    }
                }
            }
        }
        spurious_res += found.resonances.len().saturating_sub(naturals.len());

        // Dip residuals vs intended (compensated) targets.
        for &t in &plan.dip_targets_hz {
            let intended = t + dip_shift_model(t);
            let nearest = found
                .antiresonances
                .iter()
                .map(|e| e.frequency_hz)
                .min_by(|a, b| ((a - t).abs()).partial_cmp(&(b - t).abs()).unwrap());
            if let Some(d) = nearest {
                if (d - t).abs() < 5.0 {
                    dip_shifts.push((t, d - intended));
                }
            }
        }
        spurious_dip += found
            .antiresonances
            .len()
            .saturating_sub(plan.dip_targets_hz.len());

        // Code agreement: designated peaks and planned dips vs detected codes.
        let seg_of = |f: f64| grid.locate(f).map(|(s, _)| s).unwrap_or(99);
        let sub_of = |f: f64| grid.locate(f).map(|(_, c)| c).unwrap_or(9);
        for (i, &p) in plan.peaks_hz.iter().enumerate() {
            if !plan.designated[i] {
                continue;
            }
            let intended = p + peak_shift_model(p);
            res_code_total += 1;
            // Detected winner in this segment (highest amplitude).
            let win = found
                .resonances
                .iter()
                .filter(|e| seg_of(e.frequency_hz) == seg_of(intended))
                .max_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap());
            if let Some(w) = win {
                if sub_of(w.frequency_hz) == sub_of(intended) {
                    res_code_match += 1;
                }
            }
        }
        for &t in &plan.dip_targets_hz {
            let intended = t + dip_shift_model(t);
            dip_code_total += 1;
            let win = found
                .antiresonances
                .iter()
                .filter(|e| seg_of(e.frequency_hz) == seg_of(intended))
                .min_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap());
            if let Some(w) = win {
                if sub_of(w.frequency_hz) == sub_of(intended) {
                    dip_code_match += 1;
                }
            }
        }
        for e in &found.resonances {
            let s = seg_of(e.frequency_hz);
            if s < 6 {
                seg_r_occupancy[s] += 1;
            }
        }
        for e in &found.antiresonances {
            let s = seg_of(e.frequency_hz);
            if s < 6 {
                seg_a_occupancy[s] += 1;
            }
        }
    }

    let stats = |samples: &[(f64, f64)], name: &str| {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / n;
        // Linear fit: shift = a + b f
        let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
        let cov = samples.iter().map(|s| (s.0 - mx) * (s.1 - mean)).sum::<f64>() / n;
        let vx = samples.iter().map(|s| (s.0 - mx).powi(2)).sum::<f64>() / n;
        let b = cov / vx;
        let a = mean - b * mx;
        println!(
            "{name}: n={} mean={:+.3} sd={:.3} fit: {:+.3} {:+.5}*f",
            samples.len(),
            mean,
            var.sqrt(),
            a,
            b
        );
    };
    stats(&peak_shifts, "peak shift");
    stats(&dip_shifts, "dip shift");
    println!(
        "res code agreement {}/{} = {:.3}",
        res_code_match,
        res_code_total,
        res_code_match as f64 / res_code_total as f64
    );
    println!(
        "dip code agreement {}/{} = {:.3}",
        dip_code_match,
        dip_code_total,
        dip_code_match as f64 / dip_code_total as f64
    );
    println!(
        "spurious res/scene {:.3}  missing res {}  spurious dip/scene {:.3}",
        spurious_res as f64 / n_scenes as f64,
        missing_res,
        spurious_dip as f64 / n_scenes as f64
    );
    println!("missing by segment {:?}  of which pads {}", missing_by_seg, missing_pad);
    println!("R occupancy {:?}", seg_r_occupancy);
    println!("A occupancy {:?}", seg_a_occupancy);
}
