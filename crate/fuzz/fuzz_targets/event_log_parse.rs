#![no_main]

use adaptutor_core::LearnerModel;
use adaptutor_core::session::{encode_event, parse_event_log};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(events) = parse_event_log(text) else { return };
    let encoded: String = events.iter().map(|e| encode_event(e) + "\n").collect();
    assert_eq!(parse_event_log(&encoded).expect("reparse"), events);
    // Replay may refuse the log but must not panic.
    let _ = LearnerModel::replay("fuzz", "pack", events);
});
