fn main() {
    // Link the system LAPACK provider only when the `lapack` feature is on.
    if std::env::var_os("CARGO_FEATURE_LAPACK").is_some() {
        println!("cargo:rustc-link-lib=dylib=openblas");
    }
}
