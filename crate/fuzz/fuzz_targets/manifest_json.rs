#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_core::lab::Manifest;

fuzz_target!(|data: &[u8]| {
    let s = String::from_utf8_lossy(data);
    if let Ok(manifest) = Manifest::from_json(&s) {
        let again = Manifest::from_json(&manifest.to_json()).unwrap();
        assert_eq!(manifest, again);
    }
});
