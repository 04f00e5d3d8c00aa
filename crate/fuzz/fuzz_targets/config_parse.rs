#![no_main]

use libfuzzer_sys::fuzz_target;
use sumprod::Config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = Config::parse(text) {
            // Anything that parses must also validate cleanly.
            cfg.validate().expect("parsed config must be valid");
        }
    }
});
