#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_core::lab::{parse_series, Record};

fuzz_target!(|data: &[u8]| {
    let s = String::from_utf8_lossy(data);
    if let Ok(records) = parse_series(&s) {
        for r in records {
            assert_eq!(Record::parse(&r.to_line()).unwrap(), r);
        }
    }
});
