//! Generates include/qadam.h from the public extern "C" surface.

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let out = std::path::Path::new(&crate_dir).join("include/qadam.h");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("QADAM_H".into()),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        header: Some("/* C ABI for the qadam optimizer and wire codec. Generated; do not edit. */".into()),
        ..Default::default()
    };

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen failed")
        .write_to_file(out);

    println!("cargo:rerun-if-changed=src/lib.rs");
}
