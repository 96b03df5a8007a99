use std::path::Path;
use std::process::{Command, Output};

fn hkt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkt")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sample_fasta() -> Vec<u8> {
    let mut s = Vec::new();
    let mut x = 12345u64;
    for r in 0..5 {
        s.extend_from_slice(format!(">rec{r} sample\n").as_bytes());
        for line in 0..40 {
            for _ in 0..60 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = b"ACGT"[(x >> 62) as usize];
                s.push(if line % 7 == 3 { b.to_ascii_lowercase() } else { b });
            }
            s.push(b'\n');
        }
    }
    s
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pack_unpack_roundtrip_every_codec() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fa");
    std::fs::write(&a, sample_fasta()).unwrap();
    for codec in ["bwt", "mix", "lz", "raw"] {
        let c = dir.path().join(format!("a.{codec}.hkt"));
        let b = dir.path().join(format!("b.{codec}.fa"));
        let o = hkt(&["pack", p(&a), "-o", p(&c), "--nuc-codec", codec, "--block-size", "4096", "--threads", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = hkt(&["unpack", p(&c), "-o", p(&b)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{codec}");
    }
}

#[test]
fn pack_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fa");
    std::fs::write(&a, sample_fasta()).unwrap();
    let (c1, c2) = (dir.path().join("1.hkt"), dir.path().join("2.hkt"));
    assert!(hkt(&["pack", p(&a), "-o", p(&c1), "--nuc-codec", "mix", "--profile", "full", "--threads", "1"]).status.success());
    assert!(hkt(&["pack", p(&a), "-o", p(&c2), "--nuc-codec", "mix", "--profile", "full", "--threads", "4"]).status.success());
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
}

#[test]
fn corrupted_container_reports_checksum_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fa");
    std::fs::write(&a, sample_fasta()).unwrap();
    let c = dir.path().join("a.hkt");
    assert!(hkt(&["pack", p(&a), "-o", p(&c), "--nuc-codec", "raw"]).status.success());
    let mut bytes = std::fs::read(&c).unwrap();
    bytes[13 + 3] ^= 0x10;
    std::fs::write(&c, &bytes).unwrap();
    let o = hkt(&["unpack", p(&c), "-o", p(&dir.path().join("x.fa"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[checksum-mismatch]"), "{}", stderr(&o));
}

#[test]
fn usage_and_data_error_codes() {
    assert_eq!(hkt(&["pack"]).status.code(), Some(2));
    assert_eq!(hkt(&["pack", "x", "--nuc-codec", "gzip"]).status.code(), Some(2));
    assert_eq!(hkt(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, b"hello\n").unwrap();
    let o = hkt(&["pack", p(&bad), "-o", p(&dir.path().join("bad.hkt"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[unknown-format]"));
    let o = hkt(&["unpack", p(&dir.path().join("missing.hkt"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[io]"));
}

#[test]
fn list_and_slice() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fa");
    let fa = sample_fasta();
    std::fs::write(&a, &fa).unwrap();
    let c = dir.path().join("a.hkt");
    assert!(hkt(&["pack", p(&a), "-o", p(&c), "--block-size", "1000"]).status.success());

    let o = hkt(&["list", p(&c)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("records=5"));
    let nuc_blocks = text.lines().filter(|l| l.starts_with("block NUC ")).count();
    assert_eq!(nuc_blocks, 12);
    assert_eq!(text.lines().filter(|l| l.starts_with("record ")).count(), 5);

    // record 2 starts at symbol 4800, so 4990..6110 touches blocks 4, 5 and 6
    let o = hkt(&["slice", p(&c), "--record", "2", "--range", "190..1310", "--stats"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let seq: Vec<u8> = fa
        .split(|&b| b == b'\n')
        .skip(2 * 41 + 1)
        .take(40)
        .flatten()
        .copied()
        .collect();
    assert_eq!(o.stdout, [&seq[190..1310], b"\n"].concat());
    assert!(stderr(&o).contains("NUC=3 "), "{}", stderr(&o));

    let o = hkt(&["slice", p(&c), "--record", "9", "--range", "0..1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[range-out-of-bounds]"));
    assert_eq!(hkt(&["slice", p(&c), "--record", "0", "--range", "5..1"]).status.code(), Some(2));
}

#[test]
fn referential_roundtrip_and_wrong_reference() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("ref.fa");
    let t = dir.path().join("tgt.fa");
    let fa = sample_fasta();
    let mut tgt = fa.clone();
    tgt[500] = if tgt[500] == b'A' { b'C' } else { b'A' };
    std::fs::write(&r, &fa).unwrap();
    std::fs::write(&t, &tgt).unwrap();
    let c = dir.path().join("tgt.hkr");
    let o = hkt(&["refpack", p(&t), "--reference", p(&r), "-o", p(&c)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("bound_bits_per_symbol="));
    assert!(std::fs::metadata(&c).unwrap().len() < 600);
    let back = dir.path().join("back.fa");
    assert!(hkt(&["refunpack", p(&c), "--reference", p(&r), "-o", p(&back)]).status.success());
    assert_eq!(std::fs::read(&back).unwrap(), tgt);

    let o = hkt(&["refunpack", p(&c), "--reference", p(&t), "-o", p(&back)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[reference-mismatch]"));
}

#[test]
fn bench_reports_consistent_bpb() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.fa");
    std::fs::write(&a, sample_fasta()).unwrap();
    let o = hkt(&["bench", p(&a), "--repeat", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("bits/byte"));
    let kv = |k: &str| -> String {
        text.lines().find_map(|l| l.strip_prefix(k).and_then(|v| v.strip_prefix('='))).unwrap().to_string()
    };
    let n: f64 = kv("input_bytes").parse().unwrap();
    let s: f64 = kv("output_bytes").parse().unwrap();
    assert_eq!(n as usize, sample_fasta().len());
    assert_eq!(format!("{:.4}", 8.0 * s / n), kv("bpb"));
    assert_eq!(kv("repeats"), "3");
    assert!(kv("enc_ns_per_byte").parse::<f64>().unwrap() > 0.0);
}
