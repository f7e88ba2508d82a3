#![no_main]

use adaptutor_core::Instrument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instrument) = Instrument::from_json(text) {
        assert!(!instrument.items.is_empty());
    }
});
