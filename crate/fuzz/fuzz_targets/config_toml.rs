#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_core::lab::RunConfig;

fuzz_target!(|data: &[u8]| {
    let s = String::from_utf8_lossy(data);
    if let Ok(config) = RunConfig::from_toml_str(&s) {
        let _ = config.validate();
        // Accepted configs survive a write/read cycle unchanged.
        let again = RunConfig::from_toml_str(&config.to_toml_string()).unwrap();
        assert_eq!(config, again);
    }
});
