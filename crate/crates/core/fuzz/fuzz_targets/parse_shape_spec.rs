#![no_main]

use curvflow::ShapeSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(spec) = data.parse::<ShapeSpec>() {
        let shown = spec.to_string();
        let again: ShapeSpec = shown.parse().expect("display output parses");
        assert_eq!(again, spec, "{shown}");
    }
});
