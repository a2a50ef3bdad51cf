//! Regenerates include/unlearn_dp.h from the crate's public C surface.
//! The header is committed so that C consumers (and builds without the
//! cbindgen toolchain) can use the crate without running this step; when
//! generation succeeds the file is refreshed in place only if it changed.

use std::path::Path;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR is set");
    let header = Path::new(&crate_dir).join("include").join("unlearn_dp.h");

    let config = cbindgen::Config::from_root_or_default(&crate_dir);
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            std::fs::create_dir_all(header.parent().unwrap()).expect("create include/");
            bindings.write_to_file(&header);
        }
        Err(err) => {
            if header.exists() {
                println!(
                    "cargo:warning=cbindgen failed ({err}); keeping the committed header at {}",
                    header.display()
                );
            } else {
                panic!("cbindgen failed and no committed header exists: {err}");
            }
        }
    }
}
