use hra_core::dataset::{bundled_ann_results, bundled_table2, bundled_table4, TABLE2_CSV, TABLE4_CSV, TABLE6_CSV};
use hra_core::psf::{Mode, Multiplier, MultiplierConfig, PsfId};
use sha2::{Digest, Sha256};

fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// Guards the transcribed tables against accidental edits.
#[test]
fn bundled_tables_are_unchanged() {
    assert_eq!(
        sha256(TABLE2_CSV),
        "b5d9a7d37c5c9a6258906a8ba81ccf92968c79288009900c640ae35920f8737c"
    );
    assert_eq!(
        sha256(TABLE4_CSV),
        "142b409cf3aab3d4bea3e49a793a8a67e1de76aca3644593ca588a0068ca737c"
    );
    assert_eq!(
        sha256(TABLE6_CSV),
        "d71c9a692b44be2dbf019591388b726f4ce5976dae7e25d23c43e8880ea479b9"
    );
}

#[test]
fn bundled_tables_have_expected_shape() {
    let obs = bundled_table2();
    assert_eq!(obs.len(), 15);
    assert_eq!(obs.get("Ins 3").unwrap().observed_hep.value(), 0.15);
    let design = bundled_table4();
    assert_eq!(design.len(), 60);
    assert_eq!(design.factors(), &PsfId::ALL);
    let responses = design.responses().unwrap();
    assert!(responses.iter().all(|r| (0.0..=100.0).contains(r)));
    let published = bundled_ann_results();
    assert_eq!(published.len(), 15);
}

// Only the available-time table ships; the rest is site configuration.
#[test]
fn bundled_multipliers_hold_available_time_only() {
    let cfg = MultiplierConfig::bundled();
    let a = cfg.table(PsfId::AvailableTime).unwrap();
    assert_eq!(
        a.lookup("Expansive time", Mode::Action).unwrap(),
        Multiplier::Value(0.01)
    );
    assert_eq!(
        a.lookup("Inadequate Time", Mode::Diagnosis).unwrap(),
        Multiplier::FailureCertain
    );
    assert_eq!(
        a.lookup("Insufficient information", Mode::Action).unwrap(),
        Multiplier::Value(1.0)
    );
    for p in PsfId::ALL.into_iter().skip(1) {
        assert!(cfg.table(p).is_none(), "{p}");
    }
}
