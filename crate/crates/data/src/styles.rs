//! The 15 speaking-style classes and their acoustic signatures.

use paralign_tensor::Real;
use serde::{Deserialize, Serialize};

/// Speaking-style label with stable integer codes 0–14.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleLabel {
    Neutral = 0,
    Angry = 1,
    Disgusted = 2,
    Afraid = 3,
    Happy = 4,
    Sad = 5,
    Surprised = 6,
    Bored = 7,
    Confused = 8,
    Interested = 9,
    Sarcastic = 10,
    Laughing = 11,
    Projected = 12,
    Sleepy = 13,
    Whisper = 14,
}

pub const N_STYLES: usize = 15;

pub const ALL_STYLES: [StyleLabel; N_STYLES] = [
    StyleLabel::Neutral,
    StyleLabel::Angry,
    StyleLabel::Disgusted,
    StyleLabel::Afraid,
    StyleLabel::Happy,
    StyleLabel::Sad,
    StyleLabel::Surprised,
    StyleLabel::Bored,
    StyleLabel::Confused,
    StyleLabel::Interested,
    StyleLabel::Sarcastic,
    StyleLabel::Laughing,
    StyleLabel::Projected,
    StyleLabel::Sleepy,
    StyleLabel::Whisper,
];

impl StyleLabel {
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> StyleLabel {
        assert!(code < N_STYLES, "style code {code} out of range 0..{N_STYLES}");
        ALL_STYLES[code]
    }

    pub fn name(self) -> &'static str {
        match self {
            StyleLabel::Neutral => "neutral",
            StyleLabel::Angry => "angry",
            StyleLabel::Disgusted => "disgusted",
            StyleLabel::Afraid => "afraid",
            StyleLabel::Happy => "happy",
            StyleLabel::Sad => "sad",
            StyleLabel::Surprised => "surprised",
            StyleLabel::Bored => "bored",
            StyleLabel::Confused => "confused",
            StyleLabel::Interested => "interested",
            StyleLabel::Sarcastic => "sarcastic",
            StyleLabel::Laughing => "laughing",
            StyleLabel::Projected => "projected",
            StyleLabel::Sleepy => "sleepy",
            StyleLabel::Whisper => "whisper",
        }
    }

    pub fn from_name(name: &str) -> Option<StyleLabel> {
        ALL_STYLES.iter().copied().find(|s| s.name() == name)
    }

    /// The tag form used in text prompts, e.g. `<laughing>`.
    pub fn tag(self) -> String {
        format!("<{}>", self.name())
    }

    pub fn signature(self) -> &'static StyleSignature {
        &SIGNATURES[self.code()]
    }
}

/// Per-style acoustic parameters driving the synthesizer. The table is a
/// fixed artifact of the repository: every tuple is pairwise distinct, and
/// the four externally measurable axes (pitch scale, amplitude modulation,
/// noise floor, speaking rate) jointly separate all 15 classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StyleSignature {
    pub f0_multiplier: Real,
    pub vibrato_rate: Real,
    pub amplitude_mod_depth: Real,
    pub noise_level: Real,
    pub rate_multiplier: Real,
}

pub const SIGNATURES: [StyleSignature; N_STYLES] = [
    // neutral
    StyleSignature { f0_multiplier: 1.00, vibrato_rate: 0.0, amplitude_mod_depth: 0.00, noise_level: 0.002, rate_multiplier: 1.15 },
    // angry
    StyleSignature { f0_multiplier: 1.25, vibrato_rate: 0.0, amplitude_mod_depth: 0.45, noise_level: 0.020, rate_multiplier: 1.45 },
    // disgusted
    StyleSignature { f0_multiplier: 0.85, vibrato_rate: 2.5, amplitude_mod_depth: 0.25, noise_level: 0.012, rate_multiplier: 1.05 },
    // afraid
    StyleSignature { f0_multiplier: 1.30, vibrato_rate: 6.5, amplitude_mod_depth: 0.30, noise_level: 0.030, rate_multiplier: 1.50 },
    // happy
    StyleSignature { f0_multiplier: 1.20, vibrato_rate: 5.0, amplitude_mod_depth: 0.18, noise_level: 0.004, rate_multiplier: 1.30 },
    // sad
    StyleSignature { f0_multiplier: 0.80, vibrato_rate: 0.0, amplitude_mod_depth: 0.10, noise_level: 0.006, rate_multiplier: 1.00 },
    // surprised
    StyleSignature { f0_multiplier: 1.45, vibrato_rate: 0.0, amplitude_mod_depth: 0.12, noise_level: 0.008, rate_multiplier: 1.40 },
    // bored
    StyleSignature { f0_multiplier: 0.90, vibrato_rate: 0.0, amplitude_mod_depth: 0.05, noise_level: 0.004, rate_multiplier: 1.05 },
    // confused
    StyleSignature { f0_multiplier: 1.05, vibrato_rate: 3.0, amplitude_mod_depth: 0.12, noise_level: 0.010, rate_multiplier: 1.10 },
    // interested
    StyleSignature { f0_multiplier: 1.10, vibrato_rate: 4.0, amplitude_mod_depth: 0.08, noise_level: 0.006, rate_multiplier: 1.25 },
    // sarcastic
    StyleSignature { f0_multiplier: 0.95, vibrato_rate: 1.5, amplitude_mod_depth: 0.35, noise_level: 0.014, rate_multiplier: 1.18 },
    // laughing
    StyleSignature { f0_multiplier: 1.15, vibrato_rate: 7.5, amplitude_mod_depth: 0.55, noise_level: 0.016, rate_multiplier: 1.35 },
    // projected
    StyleSignature { f0_multiplier: 1.40, vibrato_rate: 0.0, amplitude_mod_depth: 0.40, noise_level: 0.008, rate_multiplier: 1.55 },
    // sleepy
    StyleSignature { f0_multiplier: 0.70, vibrato_rate: 0.0, amplitude_mod_depth: 0.06, noise_level: 0.012, rate_multiplier: 1.00 },
    // whisper
    StyleSignature { f0_multiplier: 0.90, vibrato_rate: 0.0, amplitude_mod_depth: 0.04, noise_level: 0.150, rate_multiplier: 1.20 },
];
