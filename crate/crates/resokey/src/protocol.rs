//! The pairing protocol binding two devices.
//!
//! The touched device requests pairing and starts its motor; both sides
//! record the vibration, extract raw bits, and the wearable publishes the
//! reconciliation difference guarded by a keyed fingerprint. A confirmation
//! round proves both sides hold the same 12-bit secret without ever placing
//! secret bits on the air. When the difference exchange is blocked, both
//! sides fall back to their raw sequences, which pair only on an exact
//! match.
//!
//! # Wire format
//!
//! Every message is length-prefixed and versioned; fields are fixed-order
//! and bit fields pack most-significant-bit first:
//!
//! ```text
//! [ length: u16 BE ] [ version: u8 = 1 ] [ kind: u8 ] [ payload ... ]
//! ```
//!
//! `length` counts version, kind, and payload. Payloads:
//!
//! | kind | message      | payload                                        |
//! |------|--------------|------------------------------------------------|
//! | 0x01 | PairRequest  | empty                                          |
//! | 0x02 | VibrateStart | empty                                          |
//! | 0x03 | Delta        | 3 bytes: 23 delta bits, MSB first, low bit 0;  |
//! |      |              | then 8 bytes fingerprint                       |
//! | 0x04 | Confirm      | 8 bytes tag                                    |
//! | 0x05 | Abort        | 1 byte reason code                             |

use hmac::{Hmac, Mac};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::Sha256;

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::golay::{GolayCodec, CODEWORD_BITS};
use crate::pipeline::{extract_bits, ExtractionConfig};
use crate::reconcile::{receiver_reconcile, sender_reconcile};
use crate::vibration::{synthesize_collection, Observer, TrialScene};

const WIRE_VERSION: u8 = 1;
/// Fingerprint and confirmation tag length in bytes.
pub const TAG_BYTES: usize = 8;

/// Domain-separation labels for the keyed tags.
const LABEL_DELTA: &[u8] = b"delta-fp";
const LABEL_CONFIRM_WEARABLE: &[u8] = b"confirm-w";
const LABEL_CONFIRM_DEVICE: &[u8] = b"confirm-d";
const LABEL_FALLBACK_WEARABLE: &[u8] = b"confirm-fw";
const LABEL_FALLBACK_DEVICE: &[u8] = b"confirm-fd";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Wearable,
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    AwaitingVibration,
    Collecting,
    Reconciling,
    Confirming,
    Paired,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    FingerprintMismatch,
    KeyMismatch,
    FallbackMismatch,
    DosTimeout,
    ChannelExhausted,
}

impl FailureReason {
    fn code(self) -> u8 {
        match self {
            FailureReason::FingerprintMismatch => 1,
            FailureReason::KeyMismatch => 2,
            FailureReason::FallbackMismatch => 3,
            FailureReason::DosTimeout => 4,
            FailureReason::ChannelExhausted => 5,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            1 => FailureReason::FingerprintMismatch,
            2 => FailureReason::KeyMismatch,
            3 => FailureReason::FallbackMismatch,
            4 => FailureReason::DosTimeout,
            5 => FailureReason::ChannelExhausted,
            other => return Err(Error::WireFormat(format!("unknown abort reason {other}"))),
        })
    }
}

/// One side of the pairing exchange.
#[derive(Debug, Clone)]
pub struct PairingSession {
    pub role: Role,
    pub state: SessionState,
    pub attempts: u32,
    pub timeout_s: f64,
    pub raw_bits: Option<BitSequence>,
    pub secret_key: Option<BitSequence>,
}

impl PairingSession {
    pub fn new(role: Role, timeout_s: f64) -> Self {
        Self {
            role,
            state: SessionState::Idle,
            attempts: 0,
            timeout_s,
            raw_bits: None,
            secret_key: None,
        }
    }

    /// Blocked-reconciliation fallback: adopt the local raw sequence as the
    /// secret and move to confirmation. Pairing then succeeds only if the
    /// two raw sequences match exactly — there is no error correction on
    /// this path.
    pub fn dos_fallback(&mut self) -> Result<()> {
        let raw = self
            .raw_bits
            .clone()
            .ok_or_else(|| Error::ProtocolConfig("fallback before collection".into()))?;
        self.secret_key = Some(raw);
        self.state = SessionState::Confirming;
        Ok(())
    }
}

/// Protocol messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    PairRequest,
    VibrateStart,
    Delta {
        delta: BitSequence,
        fingerprint: [u8; TAG_BYTES],
    },
    Confirm {
        tag: [u8; TAG_BYTES],
    },
    Abort {
        reason: FailureReason,
    },
}

impl Message {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let kind = match self {
            Message::PairRequest => 0x01,
            Message::VibrateStart => 0x02,
            Message::Delta { delta, fingerprint } => {
                debug_assert_eq!(delta.len(), CODEWORD_BITS);
                payload.extend_from_slice(&delta.to_packed_bytes());
                payload.extend_from_slice(fingerprint);
                0x03
            }
            Message::Confirm { tag } => {
                payload.extend_from_slice(tag);
                0x04
            }
            Message::Abort { reason } => {
                payload.push(reason.code());
                0x05
            }
        };
        let len = (payload.len() + 2) as u16;
        let mut out = Vec::with_capacity(payload.len() + 4);
        out.extend_from_slice(&len.to_be_bytes());
        out.push(WIRE_VERSION);
        out.push(kind);
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::WireFormat("message shorter than header".into()));
        }
        let len = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
        if len + 2 != bytes.len() {
            return Err(Error::WireFormat(format!(
                "length prefix {len} does not match {} bytes",
                bytes.len()
            )));
        }
        if bytes[2] != WIRE_VERSION {
            return Err(Error::WireFormat(format!("unknown version {}", bytes[2])));
        }
        let payload = &bytes[4..];
        match bytes[3] {
            0x01 => Ok(Message::PairRequest),
            0x02 => Ok(Message::VibrateStart),
            0x03 => {
                if payload.len() != 3 + TAG_BYTES {
                    return Err(Error::WireFormat("bad delta payload length".into()));
                }
                let delta = BitSequence::from_packed_bytes(&payload[..3], CODEWORD_BITS)?;
                let mut fingerprint = [0u8; TAG_BYTES];
                fingerprint.copy_from_slice(&payload[3..]);
                Ok(Message::Delta { delta, fingerprint })
            }
            0x04 => {
                if payload.len() != TAG_BYTES {
                    return Err(Error::WireFormat("bad confirm payload length".into()));
                }
                let mut tag = [0u8; TAG_BYTES];
                tag.copy_from_slice(payload);
                Ok(Message::Confirm { tag })
            }
            0x05 => {
                if payload.len() != 1 {
                    return Err(Error::WireFormat("bad abort payload length".into()));
                }
                Ok(Message::Abort {
                    reason: FailureReason::from_code(payload[0])?,
                })
            }
            other => Err(Error::WireFormat(format!("unknown message kind {other}"))),
        }
    }
}

/// Keyed fingerprint: HMAC-SHA256 over a domain label and the message,
/// truncated to 64 bits. The key material is derived from the local secret,
/// which an attacker observing the channel does not hold.
pub fn fingerprint(key_material: &BitSequence, message: &BitSequence) -> [u8; TAG_BYTES] {
    keyed_tag(key_material, LABEL_DELTA, &message.to_packed_bytes())
}

fn keyed_tag(key_material: &BitSequence, label: &[u8], message: &[u8]) -> [u8; TAG_BYTES] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&key_material.to_packed_bytes())
        .expect("hmac accepts any key length");
    mac.update(label);
    mac.update(&[0x00]);
    mac.update(message);
    let digest = mac.finalize().into_bytes();
    let mut tag = [0u8; TAG_BYTES];
    tag.copy_from_slice(&digest[..TAG_BYTES]);
    tag
}

/// Mutual key confirmation over distinct direction labels; true iff both
/// sides verify. No key bits are transmitted — only keyed tags over fixed
/// public labels, so a reflected tag never verifies for the opposite
/// direction.
pub fn key_confirm(a: &PairingSession, b: &PairingSession) -> Result<bool> {
    if a.state != SessionState::Confirming || b.state != SessionState::Confirming {
        return Err(Error::ProtocolConfig(
            "key confirmation requires both sessions in the confirming state".into(),
        ));
    }
    let (wearable, device) = match (a.role, b.role) {
        (Role::Wearable, Role::Device) => (a, b),
        (Role::Device, Role::Wearable) => (b, a),
        _ => {
            return Err(Error::ProtocolConfig(
                "key confirmation requires one wearable and one device".into(),
            ))
        }
    };
    let (Some(kw), Some(kd)) = (&wearable.secret_key, &device.secret_key) else {
        return Err(Error::ProtocolConfig("confirming without keys".into()));
    };
    let tag_w = keyed_tag(kw, LABEL_CONFIRM_WEARABLE, &[]);
    let tag_d = keyed_tag(kd, LABEL_CONFIRM_DEVICE, &[]);
    let w_ok = keyed_tag(kd, LABEL_CONFIRM_WEARABLE, &[]) == tag_w;
    let d_ok = keyed_tag(kw, LABEL_CONFIRM_DEVICE, &[]) == tag_d;
    Ok(w_ok && d_ok)
}

/// Adversarial manipulation of the delta message in transit.
#[derive(Debug, Clone)]
pub enum Tamper {
    /// Flip one bit of the published difference.
    FlipDeltaBit(usize),
    /// Replace the difference wholesale (an impersonation attempt).
    ReplaceDelta(BitSequence),
}

/// Simulated data channel between the two devices: loss, targeted delta
/// suppression, and man-in-the-middle hooks. Every transmitted byte string
/// lands in the transcript — that is exactly what a passive eavesdropper
/// observes.
#[derive(Debug)]
pub struct ChannelModel {
    pub drop_probability: f64,
    /// Denial-of-service: suppress every Delta message.
    pub block_deltas: bool,
    pub tamper: Option<Tamper>,
    pub transcript: Vec<Vec<u8>>,
    rng: ChaCha8Rng,
}

impl ChannelModel {
    pub fn lossless(seed: u64) -> Self {
        Self {
            drop_probability: 0.0,
            block_deltas: false,
            tamper: None,
            transcript: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn lossy(seed: u64, drop_probability: f64) -> Self {
        Self {
            drop_probability,
            ..Self::lossless(seed)
        }
    }

    pub fn blocking_deltas(seed: u64) -> Self {
        Self {
            block_deltas: true,
            ..Self::lossless(seed)
        }
    }

    pub fn tampering(seed: u64, tamper: Tamper) -> Self {
        Self {
            tamper: Some(tamper),
            ..Self::lossless(seed)
        }
    }

    /// Transmit a message; returns what the far side receives, if anything.
    pub fn deliver(&mut self, message: &Message) -> Option<Message> {
        self.transcript.push(message.to_bytes());
        if self.drop_probability > 0.0 && self.rng.gen::<f64>() < self.drop_probability {
            return None;
        }
        if let Message::Delta { delta, fingerprint } = message {
            if self.block_deltas {
                return None;
            }
            if let Some(tamper) = &self.tamper {
                let tampered = match tamper {
                    Tamper::FlipDeltaBit(i) => {
                        let mut d = delta.clone();
                        d.flip(*i % d.len());
                        Message::Delta {
                            delta: d,
                            fingerprint: *fingerprint,
                        }
                    }
                    Tamper::ReplaceDelta(d) => Message::Delta {
                        delta: d.clone(),
                        fingerprint: *fingerprint,
                    },
                };
                self.transcript.push(tampered.to_bytes());
                return Some(tampered);
            }
        }
        Some(message.clone())
    }
}

/// Protocol timing and retry policy.
#[derive(Debug, Clone)]
pub struct PairingConfig {
    pub max_attempts: u32,
    pub delta_retries: u32,
    pub message_retries: u32,
    /// Overall timeout; defaults to twice the trial duration.
    pub timeout_s: f64,
    /// Device-side collection window offset relative to the wearable, in
    /// samples (coarse clock synchronization error).
    pub device_offset_samples: i64,
    pub extraction: ExtractionConfig,
}

impl PairingConfig {
    pub fn for_scene(scene: &TrialScene) -> Self {
        Self {
            max_attempts: 3,
            delta_retries: 3,
            message_retries: 3,
            timeout_s: 2.0 * scene.excitation.duration_s,
            device_offset_samples: 0,
            extraction: ExtractionConfig::default(),
        }
    }
}

/// Everything a trial run produces.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub paired: bool,
    pub fallback: bool,
    pub attempts: u32,
    pub failure: Option<FailureReason>,
    pub wearable_key: Option<BitSequence>,
    pub device_key: Option<BitSequence>,
    pub wearable_raw: Option<BitSequence>,
    pub device_raw: Option<BitSequence>,
    pub elapsed_s: f64,
    pub transcript: Vec<Vec<u8>>,
}

/// Cost model for the simulated clock.
const MESSAGE_TIME_S: f64 = 0.001;
const DELTA_RETRY_TIMER_S: f64 = 0.25;

/// Drive both sessions through a full pairing run.
///
/// Deterministic in the scene seed and channel seed: per attempt the motor
/// sweep re-runs with fresh sensor noise, both sides extract bits, the
/// wearable publishes the fingerprinted difference, and a mutual
/// confirmation round settles the outcome. Delta suppression degrades to
/// the exact-match raw fallback.
pub fn run_pairing(
    scene: &TrialScene,
    channel: &mut ChannelModel,
    config: &PairingConfig,
) -> Result<TrialOutcome> {
    scene.validate()?;
    let codec = GolayCodec::new();
    let mut wearable = PairingSession::new(Role::Wearable, config.timeout_s);
    let mut device = PairingSession::new(Role::Device, config.timeout_s);
    let mut elapsed = 0.0f64;
    let mut outcome_failure = None;

    let trial_time = scene.excitation.duration_s + 2.0 * crate::vibration::COLLECTION_GUARD_S;

    'attempts: while wearable.attempts < config.max_attempts {
        wearable.attempts += 1;
        device.attempts += 1;
        let attempt = wearable.attempts;

        // Fresh sensor noise per attempt; the mechanical system is the
        // same hand on the same object.
        let mut attempt_scene = scene.clone();
        attempt_scene.rng_seed = scene
            .rng_seed
            .wrapping_add((attempt as u64 - 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));

        // Pairing request and motor trigger.
        device.state = SessionState::Idle;
        wearable.state = SessionState::Idle;
        let mut handshake_ok = false;
        for _ in 0..=config.message_retries {
            elapsed += MESSAGE_TIME_S;
            if channel.deliver(&Message::PairRequest).is_none() {
                continue;
            }
            wearable.state = SessionState::AwaitingVibration;
            elapsed += MESSAGE_TIME_S;
            if channel.deliver(&Message::VibrateStart).is_none() {
                continue;
            }
            device.state = SessionState::AwaitingVibration;
            handshake_ok = true;
            break;
        }
        if !handshake_ok {
            outcome_failure = Some(FailureReason::ChannelExhausted);
            continue 'attempts;
        }

        // Vibration and collection.
        wearable.state = SessionState::Collecting;
        device.state = SessionState::Collecting;
        elapsed += trial_time;
        let wearable_trace = synthesize_collection(&attempt_scene, Observer::Wearable, 0)?;
        let device_trace = synthesize_collection(
            &attempt_scene,
            Observer::Device,
            config.device_offset_samples,
        )?;
        let wearable_raw = extract_bits(&wearable_trace, &config.extraction)?;
        let device_raw = extract_bits(&device_trace, &config.extraction)?;
        wearable.raw_bits = Some(wearable_raw.clone());
        device.raw_bits = Some(device_raw.clone());

        // Reconciliation: the wearable publishes the difference.
        wearable.state = SessionState::Reconciling;
        device.state = SessionState::Reconciling;
        let reconciliation = sender_reconcile(&codec, &wearable_raw)?;
        let delta_message = Message::Delta {
            delta: reconciliation.delta.clone(),
            fingerprint: keyed_tag(
                &reconciliation.secret_key,
                LABEL_DELTA,
                &reconciliation.delta.to_packed_bytes(),
            ),
        };

        let mut received_delta = None;
        for _ in 0..=config.delta_retries {
            elapsed += MESSAGE_TIME_S;
            if let Some(msg) = channel.deliver(&delta_message) {
                received_delta = Some(msg);
                break;
            }
            elapsed += DELTA_RETRY_TIMER_S;
            if elapsed > config.timeout_s + trial_time * attempt as f64 {
                break;
            }
        }

        let Some(Message::Delta { delta, fingerprint }) = received_delta else {
            // Difference exchange blocked: raw-sequence fallback on both
            // sides (each side's retry/timeout trips independently but
            // deterministically here).
            wearable.dos_fallback()?;
            device.dos_fallback()?;
            let confirmed = confirm_over_channel(
                &mut wearable,
                &mut device,
                channel,
                &mut elapsed,
                LABEL_FALLBACK_WEARABLE,
                LABEL_FALLBACK_DEVICE,
            );
            let paired = confirmed;
            if !paired {
                wearable.state = SessionState::Failed;
                device.state = SessionState::Failed;
            }
            return Ok(TrialOutcome {
                paired,
                fallback: true,
                attempts: wearable.attempts,
                failure: if paired {
                    Some(FailureReason::DosTimeout)
                } else {
                    Some(FailureReason::FallbackMismatch)
                },
                wearable_key: wearable.secret_key.clone(),
                device_key: device.secret_key.clone(),
                wearable_raw: Some(wearable_raw),
                device_raw: Some(device_raw),
                elapsed_s: elapsed,
                transcript: std::mem::take(&mut channel.transcript),
            });
        };

        // Device-side reconciliation and fingerprint verification.
        let device_key = receiver_reconcile(&codec, &device_raw, &delta)?;
        let expected = keyed_tag(&device_key, LABEL_DELTA, &delta.to_packed_bytes());
        if expected != fingerprint {
            elapsed += MESSAGE_TIME_S;
            channel.deliver(&Message::Abort {
                reason: FailureReason::FingerprintMismatch,
            });
            outcome_failure = Some(FailureReason::FingerprintMismatch);
            continue 'attempts;
        }
        wearable.secret_key = Some(reconciliation.secret_key.clone());
        device.secret_key = Some(device_key);
        wearable.state = SessionState::Confirming;
        device.state = SessionState::Confirming;

        // Mutual confirmation.
        let confirmed = confirm_over_channel(
            &mut wearable,
            &mut device,
            channel,
            &mut elapsed,
            LABEL_CONFIRM_WEARABLE,
            LABEL_CONFIRM_DEVICE,
        );
        if confirmed {
            wearable.state = SessionState::Paired;
            device.state = SessionState::Paired;
            return Ok(TrialOutcome {
                paired: true,
                fallback: false,
                attempts: wearable.attempts,
                failure: None,
                wearable_key: wearable.secret_key.clone(),
                device_key: device.secret_key.clone(),
                wearable_raw: Some(wearable_raw),
                device_raw: Some(device_raw),
                elapsed_s: elapsed,
                transcript: std::mem::take(&mut channel.transcript),
            });
        }
        elapsed += MESSAGE_TIME_S;
        channel.deliver(&Message::Abort {
            reason: FailureReason::KeyMismatch,
        });
        outcome_failure = Some(FailureReason::KeyMismatch);
    }

    wearable.state = SessionState::Failed;
    device.state = SessionState::Failed;
    Ok(TrialOutcome {
        paired: false,
        fallback: false,
        attempts: wearable.attempts,
        failure: outcome_failure,
        wearable_key: None,
        device_key: None,
        wearable_raw: wearable.raw_bits,
        device_raw: device.raw_bits,
        elapsed_s: elapsed,
        transcript: std::mem::take(&mut channel.transcript),
    })
}

/// Tag exchange in both directions over the channel; true iff both verify.
fn confirm_over_channel(
    wearable: &mut PairingSession,
    device: &mut PairingSession,
    channel: &mut ChannelModel,
    elapsed: &mut f64,
    label_wearable: &[u8],
    label_device: &[u8],
) -> bool {
    let (Some(kw), Some(kd)) = (wearable.secret_key.clone(), device.secret_key.clone()) else {
        return false;
    };
    // Device confirms first; the wearable answers only on success.
    *elapsed += MESSAGE_TIME_S;
    let Some(Message::Confirm { tag }) = channel.deliver(&Message::Confirm {
        tag: keyed_tag(&kd, label_device, &[]),
    }) else {
        return false;
    };
    if tag != keyed_tag(&kw, label_device, &[]) {
        return false;
    }
    *elapsed += MESSAGE_TIME_S;
    let Some(Message::Confirm { tag }) = channel.deliver(&Message::Confirm {
        tag: keyed_tag(&kw, label_wearable, &[]),
    }) else {
        return false;
    };
    tag == keyed_tag(&kd, label_wearable, &[])
}

/// True when a serialized transcript leaks a bit sequence: its packed bytes
/// at any byte offset, or its ASCII 0/1 rendering.
pub fn transcript_leaks(transcript: &[Vec<u8>], secret: &BitSequence) -> bool {
    let packed = secret.to_packed_bytes();
    let ascii = secret.to_string().into_bytes();
    transcript.iter().any(|msg| {
        msg.windows(packed.len()).any(|w| w == packed.as_slice())
            || (msg.len() >= ascii.len() && msg.windows(ascii.len()).any(|w| w == ascii.as_slice()))
    })
}
