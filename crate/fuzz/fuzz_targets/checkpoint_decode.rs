#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_core::lab::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = Checkpoint::decode(data) {
        // A checksum-valid image is canonical.
        assert_eq!(ck.encode(), data);
    }
});
