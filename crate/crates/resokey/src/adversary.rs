//! Eavesdropper models and their inference pipelines.
//!
//! Two physical-channel attackers: a microphone in the room and an
//! accelerometer resting on the same desk. The microphone hears the motor —
//! the subtle vibrations of the hand system move far too little air to rise
//! above ambient noise — so its observation carries the public sweep and
//! nothing scene-specific. The desk accelerometer picks up a distance-
//! attenuated copy of the object's motion, buried progressively in its own
//! sensor noise. Both attackers run exactly the legitimate extraction stack
//! on whatever they capture; every protocol parameter is public.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::pipeline::{extract_bits, ExtractionConfig};
use crate::vibration::{
    standard_normal, synthesize_collection, AccelTrace, Observer, TrialScene, COLLECTION_GUARD_S,
};

/// Physical channel the eavesdropper taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EavesdropperKind {
    /// Microphone capturing airborne sound.
    Acoustic,
    /// Accelerometer coupled through the desk.
    Accelerometer,
}

/// Desk-coupling strength at `distance` inches: exponential decay calibrated
/// so the attacker's per-bit mutual information with a legitimate device is
/// about 0.38 at 1 inch and drops below 0.15 by 3 inches.
pub const COUPLING_C0: f64 = 1.91;
pub const COUPLING_D0_INCHES: f64 = 1.15;

/// Eavesdropper placement and environment.
#[derive(Debug, Clone)]
pub struct EavesdropperConfig {
    pub kind: EavesdropperKind,
    pub distance_inches: f64,
    /// Sensor/ambient noise floor, as a fraction of the legitimate signal's
    /// RMS at the source.
    pub ambient_noise_level: f64,
}

impl EavesdropperConfig {
    pub fn acoustic(distance_inches: f64) -> Result<Self> {
        Self::new(EavesdropperKind::Acoustic, distance_inches, 0.35)
    }

    pub fn accelerometer(distance_inches: f64) -> Result<Self> {
        Self::new(EavesdropperKind::Accelerometer, distance_inches, 0.32)
    }

    pub fn new(kind: EavesdropperKind, distance_inches: f64, ambient_noise_level: f64) -> Result<Self> {
        if !(distance_inches > 0.0) {
            return Err(Error::InvalidScene(format!(
                "eavesdropper distance {distance_inches} must be positive"
            )));
        }
        Ok(Self {
            kind,
            distance_inches,
            ambient_noise_level,
        })
    }

    /// Desk coupling coefficient: monotonically nonincreasing in distance,
    /// capped at 1.
    pub fn coupling(&self) -> f64 {
        match self.kind {
            // Hand-system resonance moves too little air to register; the
            // acoustic channel carries no coupling to the mechanical system.
            EavesdropperKind::Acoustic => 0.0,
            EavesdropperKind::Accelerometer => {
                (COUPLING_C0 * (-self.distance_inches / COUPLING_D0_INCHES).exp()).min(1.0)
            }
        }
    }
}

/// What the eavesdropper's sensor records during one trial.
///
/// Acoustic: the motor's sweep carrier (no resonance shaping), spreading
/// loss over distance, plus ambient noise. Accelerometer: the coupling-
/// scaled system response plus sensor noise. Deterministic per scene seed;
/// the eavesdropper draws from its own noise streams.
pub fn observe(scene: &TrialScene, config: &EavesdropperConfig) -> Result<AccelTrace> {
    scene.validate()?;
    let fs = scene.sample_rate_hz;
    let mut samples = match config.kind {
        EavesdropperKind::Acoustic => {
            let trace = motor_carrier(scene)?;
            let spreading = 1.0 / config.distance_inches.max(1.0);
            trace.into_iter().map(|s| s * spreading).collect::<Vec<f64>>()
        }
        EavesdropperKind::Accelerometer => {
            let base = synthesize_collection(scene, Observer::Eavesdropper, 0)?;
            let coupling = config.coupling();
            base.samples.iter().map(|s| s * coupling).collect()
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    rng.set_stream(
        40 + match config.kind {
            EavesdropperKind::Acoustic => 0,
            EavesdropperKind::Accelerometer => 1,
        },
    );
    if config.ambient_noise_level > 0.0 {
        for s in samples.iter_mut() {
            *s += config.ambient_noise_level * standard_normal(&mut rng);
        }
    }
    AccelTrace::new(samples, fs, Observer::Eavesdropper)
}

/// The airborne sweep carrier on the eavesdropper's collection window: the
/// excitation's spectral envelope with no transfer-function shaping.
fn motor_carrier(scene: &TrialScene) -> Result<Vec<f64>> {
    let fs = scene.sample_rate_hz;
    let lead = COLLECTION_GUARD_S;
    let n = ((scene.excitation.duration_s + 2.0 * COLLECTION_GUARD_S) * fs).round() as usize;
    let half = n / 2;
    let f0 = scene.excitation.f_start_hz;
    let span = scene.excitation.f_end_hz - f0;
    let duration = scene.excitation.duration_s;

    let mut out = vec![0.0f64; n];
    for m in 1..=half {
        let f = m as f64 * fs / n as f64;
        let magnitude = crate::vibration::excitation_spectrum_magnitude(&scene.excitation, f);
        if magnitude == 0.0 {
            continue;
        }
        let phase = -2.0
            * std::f64::consts::PI
            * (lead * f + duration * (f - f0) * (f - f0) / (2.0 * span));
        let factor = if n % 2 == 0 && m == half { 1.0 } else { 2.0 };
        let y = Complex64::from_polar(magnitude * factor, phase);
        let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64);
        let mut cur = Complex64::new(1.0, 0.0);
        for slot in out.iter_mut() {
            *slot += y.re * cur.re - y.im * cur.im;
            cur *= rot;
        }
    }
    Ok(out)
}

/// Run the attacker's inference: the identical extraction stack the
/// legitimate devices use, with the public grid.
pub fn attack_pipeline(observation: &AccelTrace) -> Result<BitSequence> {
    extract_bits(observation, &ExtractionConfig::default())
}
