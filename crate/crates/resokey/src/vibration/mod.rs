//! Coupled hand-device vibration channel.
//!
//! The hand and the touched object form one chain of masses and springs: the
//! touched object sits against the desk (grounded end), the wrist carries the
//! wearable at the far end, and the motor in the object drives the chain with
//! a stepped frequency sweep. Both legitimate observers read the same system
//! response — the wearable attenuated by its wearing location — plus their
//! own sensor noise and sub-20 Hz motion artifacts, so the resonance
//! structure they extract is identical up to noise while the analytic
//! per-element frequency response functions remain available for study.

mod eigen;
mod scene;

pub use scene::{
    random_scene, random_scene_with, Posture, SceneConfig, ScenePreset, TouchObject,
    CALIBRATED_NOISE_SCALE,
};
#[doc(hidden)]
pub use scene::{random_scene_planned, random_scene_weighted, PlanDiagnostics};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default accelerometer sampling rate in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 250.0;
/// Default sweep band in Hz; the lower edge stays above hand-motion
/// frequencies, the upper edge below the Nyquist limit.
pub const DEFAULT_BAND: (f64, f64) = (20.0, 125.0);
/// Default sweep duration in seconds.
pub const DEFAULT_DURATION: f64 = 1.75;
/// Default uniform modal damping ratio; the undamped model would diverge at
/// resonance and make peak-picking ill-posed.
pub const DEFAULT_DAMPING: f64 = 0.03;
/// Motion artifacts live below this frequency.
pub const MOTION_ARTIFACT_CUTOFF_HZ: f64 = 20.0;

/// Mass/stiffness/damping description of the coupled oscillator chain.
///
/// `chain_stiffnesses[0]` grounds element 0; `chain_stiffnesses[i]` couples
/// element `i-1` to element `i`.
#[derive(Debug, Clone)]
pub struct MechSystem {
    masses: Vec<f64>,
    chain_stiffnesses: Vec<f64>,
    modal_damping_ratio: f64,
}

impl MechSystem {
    pub fn new(masses: Vec<f64>, chain_stiffnesses: Vec<f64>, modal_damping_ratio: f64) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::InvalidSystem(format!(
                "need at least 2 degrees of freedom, got {}",
                masses.len()
            )));
        }
        if masses.len() != chain_stiffnesses.len() {
            return Err(Error::InvalidSystem(format!(
                "{} masses but {} stiffnesses",
                masses.len(),
                chain_stiffnesses.len()
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidSystem("all masses must be positive".into()));
        }
        if chain_stiffnesses.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::InvalidSystem(
                "all stiffnesses must be positive".into(),
            ));
        }
        if !(modal_damping_ratio > 0.0 && modal_damping_ratio <= 0.2) {
            return Err(Error::InvalidSystem(format!(
                "modal damping ratio {modal_damping_ratio} outside (0, 0.2]"
            )));
        }
        Ok(Self {
            masses,
            chain_stiffnesses,
            modal_damping_ratio,
        })
    }

    /// The worked two-element example: k1 = 6, k2 = 3, m1 = 2, m2 = 1.
    pub fn two_element_example(damping: f64) -> Self {
        Self::new(vec![2.0, 1.0], vec![6.0, 3.0], damping).unwrap()
    }

    pub fn dof_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn chain_stiffnesses(&self) -> &[f64] {
        &self.chain_stiffnesses
    }

    pub fn modal_damping_ratio(&self) -> f64 {
        self.modal_damping_ratio
    }

    /// Assembled stiffness matrix: tridiagonal, symmetric positive definite
    /// for positive spring constants.
    pub fn stiffness_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dof_count();
        let k = &self.chain_stiffnesses;
        let mut out = eigen::zeros(n);
        for i in 0..n {
            out[i][i] = k[i] + if i + 1 < n { k[i + 1] } else { 0.0 };
            if i + 1 < n {
                out[i][i + 1] = -k[i + 1];
                out[i + 1][i] = -k[i + 1];
            }
        }
        out
    }

    /// Mass-normalized modal basis: natural angular frequencies (ascending)
    /// and mode shape columns `phi[dof][mode]` with `phi^T M phi = I`.
    fn modal_basis(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dof_count();
        let k = self.stiffness_matrix();
        let mut a = eigen::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[i][j] = k[i][j] / (self.masses[i] * self.masses[j]).sqrt();
            }
        }
        let (lambda, v) = eigen::symmetric_eigen(&a);
        let scale = lambda.last().copied().unwrap_or(0.0).abs();
        if lambda.iter().any(|&l| !(l > 1e-12 * scale.max(1e-300))) {
            return Err(Error::DegenerateSystem(
                "stiffness matrix is numerically singular".into(),
            ));
        }
        let omegas: Vec<f64> = lambda.iter().map(|l| l.sqrt()).collect();
        let mut phi = eigen::zeros(n);
        for dof in 0..n {
            for mode in 0..n {
                phi[dof][mode] = v[dof][mode] / self.masses[dof].sqrt();
            }
        }
        Ok((omegas, phi))
    }
}

/// Natural angular frequencies of the system, ascending (rad/s).
///
/// These solve `det(K - omega^2 M) = 0`; there are exactly as many as the
/// system has degrees of freedom.
pub fn natural_frequencies(system: &MechSystem) -> Result<Vec<f64>> {
    Ok(system.modal_basis()?.0)
}

/// Complex magnification factor: steady-state displacement at `response_dof`
/// under a unit sinusoidal force at `drive_dof`, divided by the static
/// displacement under the same unit force.
///
/// Uses the modal superposition with uniform modal damping, so magnitudes
/// stay finite at resonance. Symmetric in its two dof arguments.
pub fn frf(
    system: &MechSystem,
    drive_dof: usize,
    response_dof: usize,
    omega: f64,
) -> Result<Complex64> {
    let n = system.dof_count();
    if drive_dof >= n || response_dof >= n {
        return Err(Error::InvalidSystem(format!(
            "dof index out of range ({drive_dof}, {response_dof}) for {n}-dof system"
        )));
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidSystem(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    let (omegas, phi) = system.modal_basis()?;
    Ok(receptance_from_basis(
        &omegas,
        &phi,
        system.modal_damping_ratio,
        drive_dof,
        response_dof,
        omega,
    ) / static_receptance(&omegas, &phi, drive_dof, response_dof))
}

fn receptance_from_basis(
    omegas: &[f64],
    phi: &[Vec<f64>],
    zeta: f64,
    drive: usize,
    response: usize,
    omega: f64,
) -> Complex64 {
    let mut h = Complex64::new(0.0, 0.0);
    for (r, &wr) in omegas.iter().enumerate() {
        let residue = phi[response][r] * phi[drive][r];
        let denom = Complex64::new(wr * wr - omega * omega, 2.0 * zeta * wr * omega);
        h += residue / denom;
    }
    h
}

fn static_receptance(omegas: &[f64], phi: &[Vec<f64>], drive: usize, response: usize) -> f64 {
    omegas
        .iter()
        .enumerate()
        .map(|(r, &wr)| phi[response][r] * phi[drive][r] / (wr * wr))
        .sum()
}

/// Stepped-frequency sweep generated by an eccentric rotating mass motor.
///
/// The instantaneous force amplitude follows the centripetal law
/// `m d omega^2`; the sweep steps through 1 Hz increments, dwelling at each
/// step long enough for the steady state to dominate.
#[derive(Debug, Clone)]
pub struct SweepExcitation {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    pub eccentric_mass: f64,
    pub eccentric_offset: f64,
    pub dwell_per_step_s: f64,
    pub drive_dof: usize,
}

/// Sweep step granularity in Hz.
const SWEEP_STEP_HZ: f64 = 1.0;

impl SweepExcitation {
    pub fn new(f_start_hz: f64, f_end_hz: f64, duration_s: f64, drive_dof: usize) -> Result<Self> {
        if !(f_start_hz < f_end_hz) && f_start_hz != f_end_hz {
            return Err(Error::InvalidScene(format!(
                "sweep start {f_start_hz} Hz above end {f_end_hz} Hz"
            )));
        }
        if f_start_hz < DEFAULT_BAND.0 {
            return Err(Error::InvalidScene(format!(
                "sweep start {f_start_hz} Hz below the {} Hz motion-artifact floor",
                DEFAULT_BAND.0
            )));
        }
        if !(duration_s > 0.0) {
            return Err(Error::InvalidScene(format!(
                "sweep duration {duration_s} s must be positive"
            )));
        }
        let steps = Self::step_count(f_start_hz, f_end_hz);
        Ok(Self {
            f_start_hz,
            f_end_hz,
            duration_s,
            eccentric_mass: 1.0,
            eccentric_offset: 1.0,
            dwell_per_step_s: duration_s / steps as f64,
            drive_dof,
        })
    }

    fn step_count(f_start: f64, f_end: f64) -> usize {
        ((f_end - f_start) / SWEEP_STEP_HZ).floor() as usize + 1
    }

    pub fn steps(&self) -> usize {
        Self::step_count(self.f_start_hz, self.f_end_hz)
    }

    /// Frequency of sweep step `j` in Hz.
    pub fn step_frequency(&self, j: usize) -> f64 {
        (self.f_start_hz + j as f64 * SWEEP_STEP_HZ).min(self.f_end_hz)
    }

    /// Force amplitude at angular frequency `omega` (centripetal law).
    pub fn force_amplitude(&self, omega: f64) -> f64 {
        self.eccentric_mass * self.eccentric_offset * omega * omega
    }
}

/// Which sensor produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observer {
    Wearable,
    Device,
    Eavesdropper,
}

impl std::fmt::Display for Observer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observer::Wearable => write!(f, "wearable"),
            Observer::Device => write!(f, "device"),
            Observer::Eavesdropper => write!(f, "eavesdropper"),
        }
    }
}

/// Time series of accelerometer magnitude samples at a fixed rate.
#[derive(Debug, Clone)]
pub struct AccelTrace {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub observer: Observer,
}

impl AccelTrace {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, observer: Observer) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TraceTooShort { len: 0, min: 1 });
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::InvalidScene(format!(
                "sample rate {sample_rate_hz} Hz must be positive"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidScene("trace contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            observer,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Everything needed to run one simulated touch trial.
#[derive(Debug, Clone)]
pub struct TrialScene {
    pub system: MechSystem,
    pub excitation: SweepExcitation,
    pub wearable_dof: usize,
    pub device_dof: usize,
    pub sample_rate_hz: f64,
    pub noise_sigma_wearable: f64,
    pub noise_sigma_device: f64,
    pub motion_artifact_amplitude: f64,
    pub rng_seed: u64,
}

impl TrialScene {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz < 2.0 * self.excitation.f_end_hz {
            return Err(Error::InvalidScene(format!(
                "sample rate {} Hz below Nyquist for {} Hz sweep end",
                self.sample_rate_hz, self.excitation.f_end_hz
            )));
        }
        if self.wearable_dof == self.device_dof {
            return Err(Error::InvalidScene(
                "wearable and device must sit at different elements".into(),
            ));
        }
        let n = self.system.dof_count();
        if self.wearable_dof >= n || self.device_dof >= n || self.excitation.drive_dof >= n {
            return Err(Error::InvalidScene("dof index out of range".into()));
        }
        if self.excitation.duration_s < self.excitation.dwell_per_step_s {
            return Err(Error::InvalidScene(format!(
                "duration {} s shorter than one dwell step {} s",
                self.excitation.duration_s, self.excitation.dwell_per_step_s
            )));
        }
        Ok(())
    }

    /// A copy with all noise and motion artifacts disabled.
    pub fn noise_free(&self) -> TrialScene {
        let mut scene = self.clone();
        scene.noise_sigma_wearable = 0.0;
        scene.noise_sigma_device = 0.0;
        scene.motion_artifact_amplitude = 0.0;
        scene
    }
}

/// Per-observer noise stream identifiers; keeps traces independent across
/// observers while fully determined by the scene seed.
fn noise_stream(observer: Observer) -> u64 {
    match observer {
        Observer::Wearable => 1,
        Observer::Device => 2,
        Observer::Eavesdropper => 3,
    }
}

fn artifact_stream(observer: Observer) -> u64 {
    noise_stream(observer) + 16
}

/// Extra simulated time on each side of the requested window so shifted
/// windows still slice fully-computed signal.
const OFFSET_MARGIN_S: f64 = 0.15;
/// Extra tail so post-sweep modal ring-down decays inside the simulation
/// grid instead of wrapping into the head.
const RINGDOWN_MARGIN_S: f64 = 0.4;

/// Width of the raised-cosine taper below the sweep start and above the
/// sweep end in the excitation spectrum. A hard spectral edge would ring for
/// a long time; a 2 Hz (resp. 0.7 Hz) taper keeps the signal's time support
/// inside the simulated guard margins.
const LOW_EDGE_TAPER_HZ: f64 = 2.0;
const HIGH_EDGE_TAPER_HZ: f64 = 0.7;

/// Magnitude of the excitation spectrum at frequency `f`: the centripetal
/// `omega^2` force law across the sweep band, tapered at the edges, zero
/// elsewhere. Scaled so bin magnitudes sit near what a dwelling sweep
/// deposits per bin.
pub(crate) fn excitation_spectrum_magnitude(excitation: &SweepExcitation, f: f64) -> f64 {
    let f0 = excitation.f_start_hz;
    let f1 = excitation.f_end_hz;
    let taper = if f < f0 - LOW_EDGE_TAPER_HZ || f > f1 {
        0.0
    } else if f < f0 {
        let x = (f - (f0 - LOW_EDGE_TAPER_HZ)) / LOW_EDGE_TAPER_HZ;
        0.5 - 0.5 * (std::f64::consts::PI * x).cos()
    } else if f > f1 - HIGH_EDGE_TAPER_HZ {
        let x = (f1 - f) / HIGH_EDGE_TAPER_HZ;
        0.5 - 0.5 * (std::f64::consts::PI * x).cos()
    } else {
        1.0
    };
    let omega = 2.0 * std::f64::consts::PI * f;
    taper * excitation.force_amplitude(omega) / (2.0 * (f1 - f0))
}

/// The clean shared response on an extended grid around the sweep, starting
/// `head_s` before motor start. Identical for every attached observer.
///
/// Synthesis works in the frequency domain: the excitation occupies the
/// sweep band with a smooth centripetal-law envelope and a stepped group
/// delay (each 1 Hz step's energy arrives during its dwell slot), and each
/// bin is shaped by the drive-point acceleration transfer `-omega^2 H`. The
/// resulting magnitude spectrum is exactly the transfer shape times the
/// envelope — the idealized outcome the per-step dwell is engineered for —
/// while the time signal remains a stepped sweep with transient tails.
fn base_response(scene: &TrialScene, head_s: f64, total_len: usize) -> Result<Vec<f64>> {
    let fs = scene.sample_rate_hz;
    let (omegas, phi) = scene.system.modal_basis()?;
    let zeta = scene.system.modal_damping_ratio();
    let drive = scene.excitation.drive_dof;
    // The shared observation point: the sensing element both attached
    // accelerometers effectively read.
    let sense = scene.device_dof;
    if scene.excitation.steps() == 1 {
        // Single-frequency excitation: use the textbook steady-state
        // response directly.
        let f = scene.excitation.f_start_hz;
        let omega = 2.0 * std::f64::consts::PI * f;
        let h = receptance_from_basis(&omegas, &phi, zeta, drive, sense, omega);
        let phasor = -h * omega * omega * scene.excitation.force_amplitude(omega);
        let mut out = Vec::with_capacity(total_len);
        let mut phase = 0.0f64;
        for k in 0..total_len {
            let t = -head_s + k as f64 / fs;
            if t < 0.0 || t >= scene.excitation.duration_s {
                out.push(0.0);
                continue;
            }
            phase += omega / fs;
            out.push(phasor.norm() * (phase + phasor.arg()).sin());
        }
        return Ok(out);
    }

    let n = total_len;
    let half = n / 2;
    let f0 = scene.excitation.f_start_hz;
    let span = scene.excitation.f_end_hz - f0;
    let duration = scene.excitation.duration_s;

    let mut bins: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); half + 1];
    for (m, bin) in bins.iter_mut().enumerate().skip(1) {
        let f = m as f64 * fs / n as f64;
        let magnitude = excitation_spectrum_magnitude(&scene.excitation, f);
        if magnitude == 0.0 {
            continue;
        }
        // Chirp phase: group delay -psi'/(2 pi) runs linearly from motor
        // start to motor stop as the sweep emits this frequency.
        let phase = -2.0
            * std::f64::consts::PI
            * (head_s * f + duration * (f - f0) * (f - f0) / (2.0 * span));
        let omega = 2.0 * std::f64::consts::PI * f;
        let g = -omega * omega * receptance_from_basis(&omegas, &phi, zeta, drive, sense, omega);
        let mut y = Complex64::from_polar(magnitude, phase) * g;
        if n % 2 == 0 && m == half {
            // Nyquist bin of an even-length grid must stay real.
            y = Complex64::new(y.re, 0.0);
        }
        *bin = y;
    }

    // Inverse DFT using conjugate symmetry of a real signal, accumulating
    // each bin's sinusoid with an incremental rotation.
    let mut out = vec![0.0f64; n];
    for (m, y) in bins.iter().enumerate().skip(1) {
        if y.re == 0.0 && y.im == 0.0 {
            continue;
        }
        let factor = if n % 2 == 0 && m == half { 1.0 } else { 2.0 };
        let contribution = *y * factor;
        let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64);
        let mut cur = Complex64::new(1.0, 0.0);
        for slot in out.iter_mut() {
            *slot += contribution.re * cur.re - contribution.im * cur.im;
            cur *= rot;
        }
    }
    Ok(out)
}

/// Root-mean-square of the clean response over the sweep interval. Scene
/// generation normalizes the drive strength against this so noise sigmas
/// read as fractions of signal RMS.
pub(crate) fn clean_response_rms(scene: &TrialScene) -> Result<f64> {
    let fs = scene.sample_rate_hz;
    let head = OFFSET_MARGIN_S;
    let total = ((scene.excitation.duration_s + head + RINGDOWN_MARGIN_S) * fs).round() as usize;
    let base = base_response(scene, head, total)?;
    let start = (head * fs).round() as usize;
    let end = start + (scene.excitation.duration_s * fs).round() as usize;
    let ms = base[start..end].iter().map(|x| x * x).sum::<f64>() / (end - start) as f64;
    Ok(ms.sqrt())
}

/// Guard time recorded on each side of the sweep by the pairing protocol's
/// collection window, absorbing coarse clock offsets between the devices.
pub const COLLECTION_GUARD_S: f64 = 0.25;
/// Raised-cosine fade applied over the guard edges of a collection window.
/// An abrupt cut mid-ring would splatter the strong top-of-band content
/// across the whole analysis band.
pub const COLLECTION_FADE_S: f64 = 0.22;

/// Synthesize the accelerometer trace an observer records during the sweep.
///
/// Returns exactly `round(duration * sample_rate)` samples: the response of
/// the coupled system to the stepped sweep (exact linear filtering, so
/// resonant ring-down accumulates just like on hardware), plus white sensor
/// noise and a sub-20 Hz motion artifact, both observer-specific and
/// deterministic in the scene seed.
pub fn synthesize_trace(scene: &TrialScene, observer: Observer) -> Result<AccelTrace> {
    synthesize_trace_windowed(scene, observer, 0.0, 0.0, 0)
}

/// The guarded, edge-faded collection window the pairing protocol records,
/// shifted by this observer's clock offset in whole samples.
pub fn synthesize_collection(
    scene: &TrialScene,
    observer: Observer,
    offset_samples: i64,
) -> Result<AccelTrace> {
    let trace = synthesize_trace_windowed(
        scene,
        observer,
        COLLECTION_GUARD_S,
        COLLECTION_GUARD_S,
        offset_samples,
    )?;
    Ok(fade_edges(trace, COLLECTION_FADE_S))
}

/// Raised-cosine fade over the first and last `fade_s` seconds of a trace.
fn fade_edges(mut trace: AccelTrace, fade_s: f64) -> AccelTrace {
    let n = trace.samples.len();
    let ramp = ((fade_s * trace.sample_rate_hz).round() as usize).min(n / 2);
    for k in 0..ramp {
        let w = 0.5 - 0.5 * (std::f64::consts::PI * k as f64 / ramp as f64).cos();
        trace.samples[k] *= w;
        trace.samples[n - 1 - k] *= w;
    }
    trace
}

/// Trace synthesis with a collection window larger than the sweep.
///
/// The window spans `[-lead_s + offset, duration + tail_s + offset]` relative
/// to motor start, with the offset given in whole samples (coarse clock
/// error between the two devices). Every observer slices the same underlying
/// response signal, so while the sweep stays inside the window an offset
/// permutes window content without changing spectral magnitudes.
pub fn synthesize_trace_windowed(
    scene: &TrialScene,
    observer: Observer,
    lead_s: f64,
    tail_s: f64,
    offset_samples: i64,
) -> Result<AccelTrace> {
    scene.validate()?;
    let fs = scene.sample_rate_hz;
    let window_len = ((scene.excitation.duration_s + lead_s + tail_s) * fs).round() as usize;
    if window_len == 0 {
        return Err(Error::InvalidScene("empty collection window".into()));
    }
    if offset_samples.unsigned_abs() as f64 / fs > OFFSET_MARGIN_S {
        return Err(Error::InvalidScene(format!(
            "window offset {offset_samples} samples exceeds the simulated margin"
        )));
    }

    let head = lead_s + OFFSET_MARGIN_S;
    let total =
        ((scene.excitation.duration_s + head + tail_s + OFFSET_MARGIN_S + RINGDOWN_MARGIN_S) * fs)
            .round() as usize;
    let base = base_response(scene, head, total)?;
    let margin = (OFFSET_MARGIN_S * fs).round() as i64;
    let start = (margin + offset_samples) as usize;
    let mut samples = base[start..start + window_len].to_vec();

    let sigma = match observer {
        Observer::Wearable => scene.noise_sigma_wearable,
        Observer::Device => scene.noise_sigma_device,
        Observer::Eavesdropper => 0.0,
    };
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
        rng.set_stream(noise_stream(observer));
        for s in samples.iter_mut() {
            *s += sigma * standard_normal(&mut rng);
        }
    }
    if scene.motion_artifact_amplitude > 0.0 && observer != Observer::Eavesdropper {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
        rng.set_stream(artifact_stream(observer));
        let artifact = motion_artifact(
            window_len,
            fs,
            scene.motion_artifact_amplitude,
            &mut rng,
        );
        for (s, a) in samples.iter_mut().zip(artifact) {
            *s += a;
        }
    }

    AccelTrace::new(samples, fs, observer)
}

/// Standard normal via Box-Muller; two uniforms per call keeps the stream
/// layout simple and deterministic.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Low-frequency motion artifact: a leaky random walk pushed through a
/// cascade of one-pole low-pass filters at 7 Hz, scaled to the requested
/// RMS amplitude. Hand-motion energy concentrates at a few hertz; the
/// cascade keeps leakage into the 20 Hz analysis band negligible.
pub(crate) fn motion_artifact<R: Rng>(
    len: usize,
    sample_rate_hz: f64,
    amplitude: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut walk = Vec::with_capacity(len);
    let mut acc = 0.0f64;
    for _ in 0..len {
        acc = 0.995 * acc + standard_normal(rng);
        walk.push(acc);
    }
    let alpha = (-2.0 * std::f64::consts::PI * 7.0 / sample_rate_hz).exp();
    for _ in 0..6 {
        let mut y = 0.0;
        for s in walk.iter_mut() {
            y = alpha * y + (1.0 - alpha) * *s;
            *s = y;
        }
    }
    let rms = (walk.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    if rms > 0.0 {
        let scale = amplitude / rms;
        for s in walk.iter_mut() {
            *s *= scale;
        }
    }
    walk
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(zeta: f64) -> MechSystem {
        MechSystem::two_element_example(zeta)
    }

    #[test]
    fn rejects_invalid_systems() {
        assert!(MechSystem::new(vec![1.0], vec![1.0], 0.03).is_err());
        assert!(MechSystem::new(vec![1.0, -1.0], vec![1.0, 1.0], 0.03).is_err());
        assert!(MechSystem::new(vec![1.0, 1.0], vec![1.0, 0.0], 0.03).is_err());
        assert!(MechSystem::new(vec![1.0, 1.0], vec![1.0, 1.0], 0.0).is_err());
        assert!(MechSystem::new(vec![1.0, 1.0], vec![1.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn stiffness_matrix_of_example() {
        let sys = example(0.03);
        let k = sys.stiffness_matrix();
        assert_eq!(k, vec![vec![9.0, -3.0], vec![-3.0, 3.0]]);
    }

    #[test]
    fn natural_frequencies_of_worked_example() {
        // Closed form: det(K - w^2 M) = 0 with K=[[9,-3],[-3,3]], M=diag(2,1)
        // gives w^2 in {1.5, 6}.
        let sys = example(0.03);
        let freqs = natural_frequencies(&sys).unwrap();
        assert_eq!(freqs.len(), 2);
        assert!((freqs[0] - 1.5f64.sqrt()).abs() / 1.5f64.sqrt() < 1e-12);
        assert!((freqs[1] - 6.0f64.sqrt()).abs() / 6.0f64.sqrt() < 1e-12);
    }

    #[test]
    fn decoupled_limit_gives_independent_oscillators() {
        // As the coupling spring vanishes the frequencies approach
        // sqrt(k_i / m_i) for the two independent oscillators.
        let sys = MechSystem::new(vec![2.0, 1.0], vec![6.0, 1e-9], 0.03).unwrap();
        let freqs = natural_frequencies(&sys).unwrap();
        assert!((freqs[0] - (1e-9f64 / 1.0).sqrt()).abs() < 1e-6);
        assert!((freqs[1] - (6.0f64 / 2.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn uniform_scaling_preserves_frequencies() {
        let sys = example(0.03);
        let scaled = MechSystem::new(
            sys.masses().iter().map(|m| m * 7.3).collect(),
            sys.chain_stiffnesses().iter().map(|k| k * 7.3).collect(),
            0.03,
        )
        .unwrap();
        let a = natural_frequencies(&sys).unwrap();
        let b = natural_frequencies(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn frf_antiresonance_of_driven_second_element() {
        // Driving and observing element 1 (0-indexed), the response dips at
        // w = sqrt((k1+k2)/m1) = sqrt(4.5), the zero of the numerator
        // k1 + k2 - w^2 m1 in the two-dof closed form.
        let sys = example(0.005);
        let target = 4.5f64.sqrt();
        let step = 1e-3;
        let mut best = (f64::INFINITY, 0.0);
        let mut w = 1.5;
        while w < 3.0 {
            let mag = frf(&sys, 1, 1, w).unwrap().norm();
            if mag < best.0 {
                best = (mag, w);
            }
            w += step;
        }
        assert!(
            (best.1 - target).abs() <= step + 1e-12,
            "antiresonance at {} vs sqrt(4.5) = {}",
            best.1,
            target
        );
    }

    #[test]
    fn frf_peaks_at_both_natural_frequencies_at_every_dof() {
        let sys = example(0.03);
        let freqs = natural_frequencies(&sys).unwrap();
        for dof in 0..2 {
            for &w_r in &freqs {
                let here = frf(&sys, 1, dof, w_r).unwrap().norm();
                let below = frf(&sys, 1, dof, w_r * 0.97).unwrap().norm();
                let above = frf(&sys, 1, dof, w_r * 1.03).unwrap().norm();
                assert!(
                    here > below && here > above,
                    "no peak at dof {dof}, mode {w_r}"
                );
            }
        }
    }

    #[test]
    fn frf_reciprocity() {
        let sys = MechSystem::new(vec![2.0, 1.0, 3.0], vec![6.0, 3.0, 2.0], 0.04).unwrap();
        let mut w = 0.3;
        while w < 4.0 {
            let a = frf(&sys, 0, 2, w).unwrap();
            let b = frf(&sys, 2, 0, w).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
            w += 0.17;
        }
    }

    #[test]
    fn single_tone_scene_is_pure_sinusoid_with_centripetal_amplitude() {
        // One-step "sweep" at 41 Hz: the clean trace is a sinusoid whose
        // amplitude follows |frf| * m * d * w^2 and doubles with the
        // eccentric mass. 41 and 250 are coprime, so the sample grid covers
        // the sinusoid's phases densely and the max sample approaches the
        // true crest.
        let mut scene = scene_for_tests(41.0, 41.0);
        scene.noise_sigma_wearable = 0.0;
        scene.noise_sigma_device = 0.0;
        scene.motion_artifact_amplitude = 0.0;
        let trace = synthesize_trace(&scene, Observer::Device).unwrap();
        assert_eq!(trace.len(), (scene.excitation.duration_s * 250.0).round() as usize);

        let omega = 2.0 * std::f64::consts::PI * 41.0;
        let (omegas, phi) = scene.system.modal_basis().unwrap();
        let h = receptance_from_basis(
            &omegas,
            &phi,
            scene.system.modal_damping_ratio(),
            0,
            0,
            omega,
        );
        let expected = h.norm() * omega * omega * scene.excitation.force_amplitude(omega);
        let peak = trace.samples.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(
            (peak - expected).abs() < 2e-3 * expected,
            "peak {peak} vs expected {expected}"
        );

        let mut doubled = scene.clone();
        doubled.excitation.eccentric_mass *= 2.0;
        let trace2 = synthesize_trace(&doubled, Observer::Device).unwrap();
        for (a, b) in trace.samples.iter().zip(&trace2.samples) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn traces_are_deterministic_per_seed() {
        let scene = scene_for_tests(20.0, 60.0);
        let a = synthesize_trace(&scene, Observer::Wearable).unwrap();
        let b = synthesize_trace(&scene, Observer::Wearable).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synthesize_trace(&scene, Observer::Device).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn motion_artifact_energy_stays_below_cutoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let fs = 250.0;
        let n = 2048;
        let art = motion_artifact(n, fs, 1.0, &mut rng);
        // Direct DFT energy split at 20 Hz.
        let mut below = 0.0;
        let mut total = 0.0;
        for k in 1..n / 2 {
            let f = k as f64 * fs / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in art.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            let e = re * re + im * im;
            total += e;
            if f < MOTION_ARTIFACT_CUTOFF_HZ {
                below += e;
            }
        }
        assert!(below / total > 0.99, "only {} below 20 Hz", below / total);
    }

    fn scene_for_tests(f_start: f64, f_end: f64) -> TrialScene {
        let sys = MechSystem::new(
            vec![1.0, 0.8],
            vec![(2.0 * std::f64::consts::PI * 35.0).powi(2), 800.0],
            0.03,
        )
        .unwrap();
        TrialScene {
            system: sys,
            excitation: SweepExcitation::new(f_start, f_end, 1.75, 0).unwrap(),
            wearable_dof: 1,
            device_dof: 0,
            sample_rate_hz: 250.0,
            noise_sigma_wearable: 0.05,
            noise_sigma_device: 0.05,
            motion_artifact_amplitude: 0.3,
            rng_seed: 1234,
        }
    }
}
