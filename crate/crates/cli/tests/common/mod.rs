#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn ietnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ietnet"))
        .args(args)
        .env("IETNET_THREADS", "1")
        .output()
        .expect("binary runs")
}

/// Runs and panics with the captured streams unless the exit code matches.
pub fn expect(args: &[&str], code: i32) -> Output {
    let out = ietnet(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "ietnet {}\nstdout:\n{}\nstderr:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn ok(args: &[&str]) -> Output {
    expect(args, 0)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub const TINY_DATA: &[&str] = &["--seed", "5", "--train", "12", "--val", "12", "--test", "12", "--steps", "32"];

pub const TINY_MODEL: &[&str] = &[
    "--filters",
    "4",
    "--dilations",
    "1,2,4",
    "--batch-size",
    "6",
    "--micro-batch",
    "3",
    "--warmup-steps",
    "4",
    "--lr-max",
    "1e-2",
];

pub fn with<'a>(head: &[&'a str], tails: &[&[&'a str]]) -> Vec<&'a str> {
    let mut v = head.to_vec();
    for t in tails {
        v.extend_from_slice(t);
    }
    v
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
