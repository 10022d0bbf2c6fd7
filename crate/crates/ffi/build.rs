use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("DSS_H".into()),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig { prefix_with_name: true, ..Default::default() },
        ..Default::default()
    };
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include").join("dss.h"));
        }
        Err(e) => println!("cargo:warning=C header not regenerated: {e}"),
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
