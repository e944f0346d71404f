//! Helpers shared by the integration tests that drive the `spir` binary.

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

pub fn spir() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spir"))
}

pub fn run(args: &[&str]) -> Output {
    spir().args(args).output().expect("spir binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Value of a `key  value` row in a human-readable report.
pub fn field<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|line| {
        let rest = line.strip_prefix(key)?;
        rest.starts_with("  ").then(|| rest.trim())
    })
}

/// `spir serve` processes, killed on drop.
pub struct Servers {
    children: Vec<Child>,
    pub addrs: Vec<String>,
}

impl Servers {
    pub fn start(databases: usize, store: &Path, randomness: &Path) -> Servers {
        let mut servers = Servers {
            children: Vec::new(),
            addrs: Vec::new(),
        };
        for n in 1..=databases {
            let mut child = spir()
                .args(["serve", "--port", "0", "--node-index", &n.to_string()])
                .arg("--store")
                .arg(store)
                .arg("--randomness")
                .arg(randomness)
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .expect("server starts");
            let mut line = String::new();
            BufReader::new(child.stdout.take().expect("piped stdout"))
                .read_line(&mut line)
                .expect("server prints its address");
            let addr = line
                .trim()
                .strip_prefix("listening on ")
                .unwrap_or_else(|| panic!("unexpected server banner {line:?}"))
                .to_string();
            servers.children.push(child);
            servers.addrs.push(addr);
        }
        servers
    }

    pub fn list(&self) -> String {
        self.addrs.join(",")
    }
}

impl Drop for Servers {
    fn drop(&mut self) {
        for child in &mut self.children {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
