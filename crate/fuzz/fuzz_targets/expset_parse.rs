#![no_main]

use libfuzzer_sys::fuzz_target;
use sumprod::lattice::{expset_from_text, expset_to_text};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(set) = expset_from_text(text) {
            // Round trip must be stable on anything that parses.
            let rendered = expset_to_text(&set);
            let again = expset_from_text(&rendered).expect("rendered text must parse");
            assert_eq!(set, again);
        }
    }
});
