use std::process::Command;

fn main() {
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_default();
    let pkg = std::env::var("CARGO_PKG_VERSION").unwrap_or_default();
    let version = if describe.is_empty() { pkg } else { format!("{pkg}-{describe}") };
    println!("cargo:rustc-env=DSS_VERSION={version}");
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=../../.git/index");
}
