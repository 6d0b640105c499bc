#![no_main]

use curvflow::io::{parse_ply, parse_obj, write_obj};
use libfuzzer_sys::fuzz_target;

// Anything that parses must survive an OBJ round trip with the same topology.
fuzz_target!(|data: &[u8]| {
    if let Ok(mesh) = parse_ply(data) {
        let mut buf = Vec::new();
        write_obj(&mesh, &mut buf).unwrap();
        let again = parse_obj(&buf).expect("re-parse written OBJ");
        assert_eq!(again.faces(), mesh.faces());
        assert_eq!(again.vertex_count(), mesh.vertex_count());
    }
});
