#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const J0_JSON: &str =
    r#"{"rows":["a1","a2"],"cols":["b1","b2"],"data":[[0.3,0.2],[0.1,0.4]],"ordering":"B,A"}"#;
/// J0 with one entry raised so the total is 1.05.
pub const J0_UNNORMALIZED_JSON: &str =
    r#"{"rows":["a1","a2"],"cols":["b1","b2"],"data":[[0.3,0.2],[0.1,0.45]],"ordering":"B,A"}"#;
pub const PRODUCT_JSON: &str =
    r#"{"rows":["a1","a2"],"cols":["b1","b2"],"data":[[0.25,0.25],[0.25,0.25]],"ordering":"B,A"}"#;
pub const MALFORMED_JSON: &str = "{\"rows\": [\"a1\", \"a2\"],\n \"cols\": [";

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary with a clean environment for the `QUASIBAYES_` overrides.
pub fn run(args: &[&str]) -> Run {
    run_with_env(args, &[])
}

pub fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quasibayes"));
    for (k, _) in std::env::vars() {
        if k.starts_with("QUASIBAYES_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(env.iter().copied());
    let Output { status, stdout, stderr } = cmd.args(args).output().expect("binary runs");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8(stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(stderr).expect("utf-8 stderr"),
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).expect("write fixture");
    p
}

/// Writes the standard fixture files and returns their paths as strings.
pub struct Fixtures {
    pub dir: tempfile::TempDir,
    pub j0: String,
    pub j0_unnormalized: String,
    pub product: String,
    pub malformed: String,
}

impl Fixtures {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let s = |p: PathBuf| p.to_string_lossy().into_owned();
        Fixtures {
            j0: s(write(dir.path(), "j0.json", J0_JSON)),
            j0_unnormalized: s(write(dir.path(), "j0_unnormalized.json", J0_UNNORMALIZED_JSON)),
            product: s(write(dir.path(), "product.json", PRODUCT_JSON)),
            malformed: s(write(dir.path(), "malformed.json", MALFORMED_JSON)),
            dir,
        }
    }

    pub fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }
}
