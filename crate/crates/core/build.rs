fn main() {
    // Dense LU and condition estimates come from the system OpenBLAS (which bundles LAPACK).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
