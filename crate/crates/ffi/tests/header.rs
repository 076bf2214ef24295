use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/evonet.h");

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(HEADER).unwrap();
    let source = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    for line in source.lines().filter(|l| l.starts_with("pub unsafe extern \"C\" fn") || l.starts_with("pub extern \"C\" fn")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
    }
    assert!(header.contains("typedef struct EvonetDistribution EvonetDistribution;"));
    assert!(header.contains("EVONET_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", HEADER]).status() else {
        eprintln!("no C compiler available; skipped");
        return;
    };
    assert!(status.success());
}
