fn main() {
    println!("cargo:rerun-if-changed=csrc/shim.c");
    cc::Build::new()
        .file("csrc/shim.c")
        .warnings(true)
        .compile("refjpeg_shim");
    println!("cargo:rustc-link-lib=jpeg");
}
