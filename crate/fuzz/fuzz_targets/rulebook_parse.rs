#![no_main]

use adaptutor_core::Rulebook;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(book) = Rulebook::from_json(text) {
        let again = Rulebook::from_json(&book.to_document().to_string()).expect("reparse");
        assert_eq!(book, again);
    }
});
