#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Output, Stdio};
use std::sync::OnceLock;
use std::time::Duration;

use tempfile::TempDir;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_ampacity-uq"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawning the CLI binary")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is UTF-8")
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited without a code")
}

pub fn path_str(p: &Path) -> String {
    p.to_str().expect("path is UTF-8").to_string()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

/// Shared end-to-end fixture: seven days of synthetic weather, fitted
/// error distributions and a four-entry database, built through the
/// real binary once per test process.
pub struct Fixture {
    dir: TempDir,
}

impl Fixture {
    pub fn measured_csv(&self) -> PathBuf {
        self.dir.path().join("synth/measured.csv")
    }

    pub fn forecast_csv(&self) -> PathBuf {
        self.dir.path().join("synth/forecast.csv")
    }

    pub fn dists_dir(&self) -> PathBuf {
        self.dir.path().join("dists")
    }

    pub fn db_path(&self) -> PathBuf {
        self.dir.path().join("db/ampacity_uq.dtru")
    }

    pub fn scratch(&self, name: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::create_dir_all(&p).expect("creating scratch dir");
        p
    }
}

pub fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = TempDir::new().expect("creating fixture dir");
        let root = dir.path();
        let synth = root.join("synth");
        let dists = root.join("dists");
        let dbdir = root.join("db");
        run_ok(&[
            "generate",
            "--seed",
            "11",
            "--days",
            "7",
            "--out",
            &path_str(&synth),
        ]);
        run_ok(&[
            "fit-errors",
            "--measured",
            &path_str(&synth.join("measured.csv")),
            "--forecast",
            &path_str(&synth.join("forecast.csv")),
            "--seed",
            "1",
            "--out",
            &path_str(&dists),
        ]);
        run_ok(&[
            "build-db",
            "--dists",
            &path_str(&dists),
            "--out",
            &path_str(&dbdir),
            "--seed",
            "7",
            "--samples",
            "2000",
            "--horizons",
            "nowcast,short_term",
            "--wind-speeds",
            "0.5,5.0",
            "--wind-angles",
            "90",
            "--conductors",
            "243-AL1/39",
            "--emissivities",
            "0.5",
        ]);
        Fixture { dir }
    })
}

/// Minimal HTTP/1.1 client over a raw socket; `connection: close` so
/// the whole response is read to EOF. Returns (status, body).
pub fn http_request(addr: &str, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).expect("connecting to service");
    stream
        .set_read_timeout(Some(Duration::from_secs(30)))
        .unwrap();
    stream
        .set_write_timeout(Some(Duration::from_secs(30)))
        .unwrap();
    let body = body.unwrap_or("");
    let request = format!(
        "{method} {path} HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len(),
    );
    stream.write_all(request.as_bytes()).unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).expect("reading response");
    let text = String::from_utf8_lossy(&raw).into_owned();
    let status = text
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("malformed response: {text:?}"));
    let body = text
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap_or_default();
    (status, body)
}

/// A `serve` child process; killed on drop.
pub struct ServeGuard {
    child: Child,
    stdout: BufReader<ChildStdout>,
    pub addr: String,
}

impl ServeGuard {
    /// Spawns `serve --listen 127.0.0.1:0 <extra>` and waits for the
    /// listen line so the bound port is known.
    pub fn spawn(extra: &[&str]) -> ServeGuard {
        let mut child = Command::new(bin())
            .args(["serve", "--listen", "127.0.0.1:0"])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawning serve");
        let mut stdout = BufReader::new(child.stdout.take().expect("child stdout"));
        let mut line = String::new();
        let addr = loop {
            line.clear();
            let n = stdout.read_line(&mut line).expect("reading serve stdout");
            if n == 0 {
                let mut err = String::new();
                if let Some(mut s) = child.stderr.take() {
                    let _ = s.read_to_string(&mut err);
                }
                let _ = child.kill();
                let _ = child.wait();
                panic!("serve exited before listening: {err}");
            }
            if let Some(rest) = line.trim().strip_prefix("listening on http://") {
                break rest.to_string();
            }
        };
        ServeGuard {
            child,
            stdout,
            addr,
        }
    }
}

impl Drop for ServeGuard {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
