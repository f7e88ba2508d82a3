#![no_main]

use adaptutor_core::session::Snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(snapshot) = serde_json::from_slice::<Snapshot>(data) {
        let _ = snapshot.model.overall_band();
        let _ = snapshot.model.snapshot();
        let _ = serde_json::to_vec(&snapshot).expect("encode");
    }
});
