fn main() {
    for key in ["TARGET", "PROFILE"] {
        println!("cargo:rustc-env=BUILD_{key}={}", std::env::var(key).unwrap_or_default());
    }
    println!("cargo:rerun-if-changed=build.rs");
}
