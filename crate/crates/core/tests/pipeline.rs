use limitset::constructor::{synthesize, Certificate, SynthConfig, TargetCurve};
use limitset::verify::{self, VerifyOptions};

fn circle_cert(k: usize) -> Certificate {
    let c = TargetCurve::circle([1.0 / 3.0; 3], 0.15).unwrap();
    synthesize(&c, &SynthConfig { k, ..SynthConfig::default() }).unwrap()
}

#[test]
fn synthesis_is_deterministic() {
    let a = circle_cert(8).to_json().unwrap();
    let b = circle_cert(8).to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn saved_certificate_verifies_from_file_alone() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let cert = circle_cert(10);
    cert.save(&path).unwrap();
    let back = Certificate::load(&path).unwrap();
    assert_eq!(back, cert);
    let rep = verify::verify_certificate(&back, VerifyOptions::default()).unwrap();
    assert!(rep.pass, "{:?}", rep.failed_checks());
    assert!(rep.audit_replay_matches);
}

#[test]
fn edited_audit_is_noticed() {
    let mut cert = circle_cert(6);
    // claim a margin the data does not support
    cert.audit[0].margin = "1e9".into();
    let rep = verify::verify_certificate(&cert, VerifyOptions::default()).unwrap();
    assert!(!rep.pass);
    assert!(!rep.audit_replay_matches);
}

#[test]
fn corrupt_json_is_rejected_on_load() {
    let text = circle_cert(3).to_json().unwrap();
    let cut = &text[..text.len() / 2];
    assert!(Certificate::from_json(cut).is_err());
    let wrong = text.replacen("limitset-certificate/1", "limitset-certificate/0", 1);
    assert!(Certificate::from_json(&wrong).is_err());
}

#[test]
fn mutation_corpus_on_the_circle() {
    let cert = circle_cert(8);
    let ms = verify::mutation_corpus(&cert, 12, 5, VerifyOptions::default()).unwrap();
    for m in &ms {
        assert!(m.detected, "{} slipped through", m.description);
        assert!(!m.caught_by.is_empty());
    }
}
