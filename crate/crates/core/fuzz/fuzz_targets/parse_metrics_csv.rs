#![no_main]

use curvflow::metrics::{parse_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_csv(data) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let again = parse_csv(&buf[..]).expect("re-parse written CSV");
        assert_eq!(again.len(), records.len());
    }
});
