use paralign_io::{load_checkpoint, save_checkpoint};
use paralign_lm::chat_seq::{apply_chat_template, Segment};
use paralign_lm::model::{ChatLM, LMConfig, MODEL_KIND};

fn small_config() -> LMConfig {
    LMConfig {
        n_layers: 2,
        d_lm: 32,
        n_heads: 2,
        d_ff: 64,
        context_len: 96,
        rotary_base: 10_000.0,
    }
}

#[test]
fn checkpoint_roundtrip_preserves_weights_bitwise() {
    let lm = ChatLM::new(small_config(), 41);
    let ckpt = lm.to_checkpoint();
    assert_eq!(ckpt.model_kind, MODEL_KIND);

    let back = ChatLM::from_checkpoint(&ckpt);
    assert_eq!(back.params().len(), lm.params().len());
    for (a, b) in lm.params().iter().zip(back.params().iter()) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.trainable, b.trainable);
        for (x, y) in a.tensor.data().iter().zip(b.tensor.data().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert_eq!(lm.fingerprint(), back.fingerprint());

    let seq = apply_chat_template(None, &[Segment::Text("probe".into())], Some("ok")).unwrap();
    let la = lm.forward_logits(&seq);
    let lb = back.forward_logits(&seq);
    for (x, y) in la.data().iter().zip(lb.data().iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn checkpoint_survives_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lm.ckpt");
    let lm = ChatLM::new(small_config(), 42);
    save_checkpoint(&lm.to_checkpoint(), &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let back = ChatLM::from_checkpoint(&loaded);
    assert_eq!(back.fingerprint(), lm.fingerprint());
    assert_eq!(back.config, lm.config);
}

#[test]
fn fingerprint_tracks_weights_and_seed() {
    let a = ChatLM::new(small_config(), 43);
    let b = ChatLM::new(small_config(), 43);
    let c = ChatLM::new(small_config(), 44);
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());

    let mut d = ChatLM::new(small_config(), 43);
    let mut data = d.params()[0].tensor.data().to_vec();
    data[0] += 1e-9;
    d.params_mut()[0].set_data(data);
    assert_ne!(a.fingerprint(), d.fingerprint());
}

#[test]
fn freezing_marks_every_parameter() {
    let mut lm = ChatLM::new(small_config(), 45);
    assert!(lm.params().iter().all(|p| p.trainable));
    lm.set_all_trainable(false);
    assert!(lm.params().iter().all(|p| !p.trainable));
    assert!(lm.params().iter().all(|p| !p.tensor.requires_grad()));

    // The flag travels through the checkpoint.
    let back = ChatLM::from_checkpoint(&lm.to_checkpoint());
    assert!(back.params().iter().all(|p| !p.trainable));
}

#[test]
#[should_panic]
fn wrong_model_kind_is_rejected() {
    let lm = ChatLM::new(small_config(), 46);
    let mut ckpt = lm.to_checkpoint();
    ckpt.model_kind = "something-else".into();
    let _ = ChatLM::from_checkpoint(&ckpt);
}
