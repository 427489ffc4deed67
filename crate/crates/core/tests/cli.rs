//! End-to-end tests of the vqakit binary: exit codes, configuration
//! precedence, manifests, and the HTTP annotator path against a local
//! stub server.

use std::io::{Read as _, Write as _};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vqakit"));
    // keep ambient VQAKIT_* variables out of the tests
    cmd.env_remove("VQAKIT_SEED").env_remove("VQAKIT_JOBS");
    cmd
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_annotations.jsonl")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().unwrap()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_code(&run(&mut bin()), 2);
}

#[test]
fn version_names_tool_and_format() {
    let out = run(bin().arg("--version"));
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("format 1"), "{text}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vqakit.toml");
    std::fs::write(&cfg, "seed = 1\nwarp_factor = 9\n").unwrap();
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["forge", "--annotations-a"])
        .arg(fixture())
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 2);
}

#[test]
fn out_of_range_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vqakit.toml");
    std::fs::write(&cfg, "max_share = 1.5\n").unwrap();
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["forge", "--annotations-a"])
        .arg(fixture())
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("max_share"),
        "error should name the offending key"
    );
}

#[test]
fn missing_input_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["forge", "--annotations-a"])
        .arg(dir.path().join("nope.jsonl"))
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 3);
}

#[test]
fn unreachable_annotator_endpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("images.txt"), "img0\n").unwrap();
    std::fs::write(dir.path().join("prompt.txt"), "Describe the image.").unwrap();
    // bind-then-drop leaves a port nothing is listening on
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = run(bin()
        .env("VQAKIT_MAX_RETRIES", "0")
        .args(["annotate", "--images"])
        .arg(dir.path().join("images.txt"))
        .arg("--prompt")
        .arg(dir.path().join("prompt.txt"))
        .arg("--endpoint")
        .arg(format!("http://127.0.0.1:{port}/v1"))
        .arg("--cache-dir")
        .arg(dir.path().join("cache"))
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 4);
}

fn forge_with(dir: &Path, name: &str, pre_args: &[&str], envs: &[(&str, &str)]) -> Vec<u8> {
    let out_path = dir.join(name);
    let mut cmd = bin();
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = run(cmd
        .args(pre_args)
        .args(["forge", "--annotations-a"])
        .arg(fixture())
        .arg("--out")
        .arg(&out_path));
    assert_code(&out, 0);
    std::fs::read(&out_path).unwrap()
}

#[test]
fn config_precedence_is_file_then_flags_then_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vqakit.toml");
    std::fs::write(&cfg, "seed = 5\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let direct5 = forge_with(dir.path(), "d5.jsonl", &["--seed", "5"], &[]);
    let direct7 = forge_with(dir.path(), "d7.jsonl", &["--seed", "7"], &[]);
    let direct9 = forge_with(dir.path(), "d9.jsonl", &["--seed", "9"], &[]);
    assert_ne!(direct5, direct7, "different seeds must change the output");
    assert_ne!(direct7, direct9);

    // file alone
    let from_file = forge_with(dir.path(), "f.jsonl", &["--config", cfg_s], &[]);
    assert_eq!(from_file, direct5);
    // flag beats file
    let from_flag = forge_with(dir.path(), "g.jsonl", &["--config", cfg_s, "--seed", "7"], &[]);
    assert_eq!(from_flag, direct7);
    // env beats both
    let from_env = forge_with(
        dir.path(),
        "h.jsonl",
        &["--config", cfg_s, "--seed", "7"],
        &[("VQAKIT_SEED", "9")],
    );
    assert_eq!(from_env, direct9);
}

#[test]
fn unknown_vqakit_env_variable_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .env("VQAKIT_WARP_FACTOR", "9")
        .args(["forge", "--annotations-a"])
        .arg(fixture())
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 2);
}

#[test]
fn manifest_tracks_inputs_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ann.jsonl");
    std::fs::copy(fixture(), &input).unwrap();

    let forge = |out_name: &str, extra: &[&str]| -> serde_json::Value {
        let out_path = dir.path().join(out_name);
        let out = run(bin()
            .args(["forge", "--annotations-a"])
            .arg(&input)
            .args(extra)
            .arg("--out")
            .arg(&out_path));
        assert_code(&out, 0);
        let manifest = std::fs::read_to_string(dir.path().join(format!("{out_name}.manifest.json"))).unwrap();
        serde_json::from_str(&manifest).unwrap()
    };

    let m1 = forge("a.jsonl", &[]);
    assert_eq!(m1["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m1["format_version"], 1);
    let digest = m1["inputs"][input.to_str().unwrap()].as_str().unwrap();
    assert_eq!(digest.len(), 64);

    // same inputs, same flags: identical digests and config hash
    let m2 = forge("b.jsonl", &[]);
    assert_eq!(m1["inputs"], m2["inputs"]);
    assert_eq!(m1["config_sha256"], m2["config_sha256"]);

    // a flag override lands in the resolved-config hash
    let m3 = forge("c.jsonl", &["--neg-ratio", "0.1"]);
    assert_eq!(m1["inputs"], m3["inputs"]);
    assert_ne!(m1["config_sha256"], m3["config_sha256"]);

    // touching the input changes its digest
    let mut bytes = std::fs::read(&input).unwrap();
    bytes.truncate(bytes.len() / 2);
    let keep = bytes.iter().rposition(|&b| b == b'\n').unwrap();
    bytes.truncate(keep + 1);
    std::fs::write(&input, bytes).unwrap();
    let m4 = forge("d.jsonl", &[]);
    assert_ne!(m1["inputs"], m4["inputs"]);
    assert_eq!(m1["config_sha256"], m4["config_sha256"]);
}

/// Minimal OpenAI-style stub: answers every chat completion with a fixed
/// JSON annotation, optionally failing the first `fail_first` requests.
fn start_stub(fail_first: usize) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let header_end = loop {
                let n = stream.read(&mut chunk).unwrap_or(0);
                if n == 0 {
                    break None;
                }
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                    break Some(pos + 4);
                }
            };
            let Some(header_end) = header_end else { continue };
            let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
            let content_length: usize = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            while buf.len() < header_end + content_length {
                let n = stream.read(&mut chunk).unwrap_or(0);
                if n == 0 {
                    break;
                }
                buf.extend_from_slice(&chunk[..n]);
            }
            let hit = counter.fetch_add(1, Ordering::SeqCst);
            let response = if hit < fail_first {
                "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 0\r\nconnection: close\r\n\r\n".to_string()
            } else {
                let annotation = r#"{\"objects\":[{\"label\":\"dog\",\"count\":2,\"semantic_category\":\"animal\",\"color\":\"brown\",\"position\":\"foreground\"}],\"scene\":{\"setting\":\"outdoor\",\"location\":\"park\"}}"#;
                let body = format!(
                    r#"{{"choices":[{{"message":{{"role":"assistant","content":"{annotation}"}}}}]}}"#
                );
                format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                )
            };
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://127.0.0.1:{port}/v1"), hits)
}

#[test]
fn annotate_retries_then_caches() {
    let dir = tempfile::tempdir().unwrap();
    let (endpoint, hits) = start_stub(1); // first request fails, retry succeeds
    std::fs::write(dir.path().join("images.txt"), "imgA\nimgB\n").unwrap();
    std::fs::write(dir.path().join("prompt.txt"), "Describe the image.").unwrap();
    let cache = dir.path().join("cache");

    let annotate = |out_name: &str| -> Output {
        run(bin()
            .args(["annotate", "--images"])
            .arg(dir.path().join("images.txt"))
            .arg("--prompt")
            .arg(dir.path().join("prompt.txt"))
            .arg("--endpoint")
            .arg(&endpoint)
            .arg("--cache-dir")
            .arg(&cache)
            .arg("--out")
            .arg(dir.path().join(out_name)))
    };

    let first = annotate("a1.jsonl");
    assert_code(&first, 0);
    // 2 images + 1 retried failure
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    let text = std::fs::read_to_string(dir.path().join("a1.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("\"dog\""));

    // a second run is served entirely from the cache
    let second = annotate("a2.jsonl");
    assert_code(&second, 0);
    assert_eq!(hits.load(Ordering::SeqCst), 3, "cache hit must not touch the network");
    assert_eq!(
        std::fs::read(dir.path().join("a1.jsonl")).unwrap(),
        std::fs::read(dir.path().join("a2.jsonl")).unwrap()
    );

    // and so is an offline run
    let offline = run(bin()
        .args(["annotate", "--offline", "--images"])
        .arg(dir.path().join("images.txt"))
        .arg("--prompt")
        .arg(dir.path().join("prompt.txt"))
        .arg("--cache-dir")
        .arg(&cache)
        .arg("--out")
        .arg(dir.path().join("a3.jsonl")));
    assert_code(&offline, 0);
    assert_eq!(
        std::fs::read(dir.path().join("a1.jsonl")).unwrap(),
        std::fs::read(dir.path().join("a3.jsonl")).unwrap()
    );
}

#[test]
fn offline_cache_miss_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("images.txt"), "imgZ\n").unwrap();
    std::fs::write(dir.path().join("prompt.txt"), "Describe the image.").unwrap();
    let out = run(bin()
        .args(["annotate", "--offline", "--images"])
        .arg(dir.path().join("images.txt"))
        .arg("--prompt")
        .arg(dir.path().join("prompt.txt"))
        .arg("--cache-dir")
        .arg(dir.path().join("empty-cache"))
        .arg("--out")
        .arg(dir.path().join("out.jsonl")));
    assert_code(&out, 4);
}

#[test]
fn attribute_campaign_via_exec_provider() {
    let dir = tempfile::tempdir().unwrap();
    // forge a small dataset first
    let dataset = dir.path().join("dataset.jsonl");
    let out = run(bin()
        .args(["forge", "--annotations-a"])
        .arg(fixture())
        .args(["--seed", "3", "--out"])
        .arg(&dataset));
    assert_code(&out, 0);

    // provider script: answer "yes" to every question in the dataset
    let script = dir.path().join("provider.sh");
    std::fs::write(
        &script,
        format!(
            "#!/bin/sh\n\
             sed -n 's/.*\"question_id\":\"\\([^\"]*\\)\".*/{{\"question_id\":\"\\1\",\"prediction\":\"yes\"}}/p' '{}' > \"$3\"\n",
            dataset.display()
        ),
    )
    .unwrap();
    let mut perms = std::fs::metadata(&script).unwrap().permissions();
    std::os::unix::fs::PermissionsExt::set_mode(&mut perms, 0o755);
    std::fs::set_permissions(&script, perms).unwrap();

    let out_path = dir.path().join("contrib.json");
    let out = run(bin()
        .args(["attribute", "--provider"])
        .arg(&script)
        .arg("--dataset")
        .arg(&dataset)
        .args(["--trials", "60", "--clusters", "8", "--stimuli", "20", "--seed", "5", "--out"])
        .arg(&out_path));
    assert_code(&out, 0);
    let map: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(map["categories"].as_object().unwrap().len() > 1);
    let ledger = std::fs::read_to_string(dir.path().join("contrib.json.ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 61, "header line plus 60 trials");
    assert!(dir.path().join("contrib.json.tsv").exists());
}
