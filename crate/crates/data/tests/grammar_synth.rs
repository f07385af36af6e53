//! Transcript grammar and synthesizer contracts.

use std::collections::HashSet;

use paralign_data::grammar::{char_tone_index, gen_transcript, keyword};
use paralign_data::oracle::extract_features;
use paralign_data::styles::StyleLabel;
use paralign_data::synth::{synth_audio, synth_duration_s};

#[test]
fn seed_zero_transcript_is_stable() {
    let a = gen_transcript(0);
    let b = gen_transcript(0);
    assert_eq!(a, b, "same seed must regenerate the identical transcript");
    assert_ne!(gen_transcript(1), a, "different seeds should differ (seed 1)");
}

#[test]
fn transcripts_use_only_synthesizable_lowercase_characters() {
    for s in 0..10_000u64 {
        let t = gen_transcript(s);
        assert_eq!(t, t.to_lowercase());
        for c in t.chars() {
            assert!(
                char_tone_index(c).is_some(),
                "character {c:?} from transcript {t:?} is outside the alphabet"
            );
        }
    }
}

#[test]
fn transcript_lengths_stay_in_range() {
    let mut lengths = HashSet::new();
    for s in 0..10_000u64 {
        let t = gen_transcript(s);
        let words = t.split_whitespace().count();
        assert!((3..=10).contains(&words), "{t:?} has {words} words");
        assert!(t.len() <= 49, "{t:?} too long for the 4 s duration cap");
        assert!(t.len() >= 11, "{t:?} too short for the 0.5 s duration floor");
        lengths.insert(words);
    }
    assert!(lengths.len() >= 3, "grammar should produce varied lengths");
}

#[test]
fn vocabulary_is_bounded() {
    let mut words = HashSet::new();
    for s in 0..10_000u64 {
        for w in gen_transcript(s).split_whitespace() {
            words.insert(w.to_string());
        }
    }
    assert!(words.len() <= 64, "vocabulary should stay within 64 words, got {}", words.len());
}

#[test]
fn keyword_prefers_longest_then_first() {
    assert_eq!(keyword("i lost my cat"), "lost");
    assert_eq!(keyword("why is the dog so big"), "why");
    assert_eq!(keyword(""), "that");
}

#[test]
fn empty_transcript_gives_half_second_of_near_silence() {
    let wave = synth_audio("", StyleLabel::Neutral, 0, 7);
    assert_eq!(wave.len(), 8_000);
    for v in &wave {
        assert!(v.abs() < 1e-3, "near-silence sample {v} too loud");
    }
}

#[test]
#[should_panic(expected = "outside the synthesis alphabet")]
fn unknown_character_panics() {
    let _ = synth_audio("uh-oh", StyleLabel::Neutral, 0, 7);
}

#[test]
fn happy_and_sad_waveforms_differ_per_signature() {
    let transcript = "my cat fell off the wall";
    let happy = synth_audio(transcript, StyleLabel::Happy, 2, 11);
    let sad = synth_audio(transcript, StyleLabel::Sad, 2, 11);
    assert_ne!(happy.len(), sad.len(), "rates differ so lengths differ");

    let fh = extract_features(&happy);
    let fs = extract_features(&sad);
    // Signature table: happy f0×1.20 vs sad ×0.80; AM 0.18 vs 0.10; rate 1.30 vs 1.00.
    assert!(
        fh.f0_centroid > fs.f0_centroid,
        "happy f0 proxy {} should exceed sad {}",
        fh.f0_centroid,
        fs.f0_centroid
    );
    assert!(
        fh.am_depth > fs.am_depth,
        "happy AM depth {} should exceed sad {}",
        fh.am_depth,
        fs.am_depth
    );
    assert!(
        fh.rate_proxy > fs.rate_proxy,
        "happy rate proxy {} should exceed sad {}",
        fh.rate_proxy,
        fs.rate_proxy
    );
}

#[test]
fn synthesis_is_deterministic() {
    let a = synth_audio("i lost my cat", StyleLabel::Laughing, 3, 99);
    let b = synth_audio("i lost my cat", StyleLabel::Laughing, 3, 99);
    assert_eq!(a, b);
    let c = synth_audio("i lost my cat", StyleLabel::Laughing, 3, 100);
    assert_ne!(a, c, "different seed should change the noise floor");
}

#[test]
fn duration_matches_predicted_length() {
    for (t, style) in [
        ("i lost my cat", StyleLabel::Projected),
        ("the warm song was not in the door", StyleLabel::Sad),
        ("do we need the fish or the tree", StyleLabel::Whisper),
    ] {
        let wave = synth_audio(t, style, 1, 5);
        let predicted = synth_duration_s(t, style);
        let actual = wave.len() as f64 / 16_000.0;
        assert!((predicted - actual).abs() < 1e-9);
        assert!((0.5..=4.0).contains(&actual), "duration {actual} out of range");
    }
}
