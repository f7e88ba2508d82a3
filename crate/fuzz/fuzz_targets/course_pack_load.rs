#![no_main]

use adaptutor_core::CoursePack;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pack) = CoursePack::from_json(text) {
        // A pack that loaded once must load again from its own output.
        let again = CoursePack::from_json(&pack.to_json()).expect("reload");
        assert_eq!(pack, again);
        assert_eq!(pack.ordered_concepts().count(), pack.concepts.len());
    }
});
