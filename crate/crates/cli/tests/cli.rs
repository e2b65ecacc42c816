use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hashtag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hashtag")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pattern(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 31 % 251) as u8).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_decode_repair_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("file.bin");
    let bytes = pattern(54_000);
    fs::write(&input, &bytes).unwrap();
    let dir = tmp.path().join("shards");

    let o = hashtag(&["encode", s(&input), "--out", s(&dir), "--locality", "2,2", "--subpacket-bytes", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("10 shards of 9000 bytes"));

    let out = tmp.path().join("out.bin");
    let o = hashtag(&["decode", s(&dir), "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), bytes);

    let shard1 = dir.join("shard_01.bin");
    let original = fs::read(&shard1).unwrap();
    for (strategy, expect) in [("local", "27000 bytes read"), ("msr", "24000 bytes read")] {
        fs::remove_file(&shard1).unwrap();
        let o = hashtag(&["repair", s(&dir), "--node", "1", "--strategy", strategy]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains(expect), "{}", stdout(&o));
        assert_eq!(fs::read(&shard1).unwrap(), original);
    }

    fs::remove_file(&shard1).unwrap();
    let o = hashtag(&["repair", s(&dir), "--node", "1", "--seek-cost", "9", "--rate", "1000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("repaired node 1 with local_only"), "{}", stdout(&o));

    fs::remove_file(dir.join("shard_09.bin")).unwrap();
    let o = hashtag(&["repair", s(&dir), "--node", "9"]);
    assert!(stdout(&o).contains("with reencode"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("file.bin");
    fs::write(&input, pattern(3000)).unwrap();
    let dir = tmp.path().join("shards");
    assert!(hashtag(&["encode", s(&input), "--out", s(&dir), "--subpacket-bytes", "5"]).status.success());

    let bad = hashtag(&["encode", s(&input), "--out", s(&dir), "--subpacket-bytes", "1024"]);
    assert_eq!(bad.status.code(), Some(1));

    let o = hashtag(&["repair", s(&dir), "--node", "1", "--strategy", "local"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not applicable"));

    let victim = dir.join("shard_02.bin");
    let mut b = fs::read(&victim).unwrap();
    b[0] ^= 0xff;
    fs::write(&victim, b).unwrap();
    let out = tmp.path().join("out.bin");
    assert_eq!(hashtag(&["decode", s(&dir), "--output", s(&out)]).status.code(), Some(2));
    assert_eq!(hashtag(&["verify", s(&dir)]).status.code(), Some(2));

    for n in [2, 3, 4, 5] {
        fs::remove_file(dir.join(format!("shard_0{n}.bin"))).unwrap();
    }
    let o = hashtag(&["decode", s(&dir), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("insufficient data"));
}

#[test]
fn verify_builtin_and_generated_codes() {
    let o = hashtag(&["verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MDS: FAILED"));

    let tmp = tempfile::tempdir().unwrap();
    let code = tmp.path().join("code.json");
    let o = hashtag(&["gen", "9", "6", "9", "--w", "5", "--poly", "41", "--seed", "7", "--out", s(&code)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = hashtag(&["verify", "--code", s(&code)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("MDS: ok (84/84 subsets)"));

    let o = hashtag(&["gen", "9", "6", "9", "--w", "2", "--poly", "7", "--max-tries", "20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no MDS code found after 20 tries"));
}

#[test]
fn plan_and_cost_output() {
    let o = hashtag(&["plan", "--node", "1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.ends_with("rows=1,2,3")).count(), 8);
    assert!(text.ends_with("bandwidth_subpackets=24 helpers=8 strategy=msr_base\n"));

    let o = hashtag(&["plan", "--node", "1", "--locality", "2,2", "--strategy", "local"]);
    assert!(stdout(&o).contains("bandwidth_subpackets=27 helpers=3 strategy=local_only"));

    let o = hashtag(&[
        "cost-compare", "--node", "1", "--locality", "2,2", "--subpacket-bytes", "10000000", "--seek-cost", "9",
        "--rate", "1000", "--json",
    ]);
    let text = stdout(&o);
    assert!(text.contains("\"winner\": \"local_plus_global\""), "{text}");
    assert!(text.contains("240000000"));

    let o = hashtag(&["cost-compare", "--node", "1", "--locality", "3,2", "--seek-cost", "0.0"]);
    let winner = stdout(&o).lines().find(|l| l.ends_with('*')).unwrap().to_string();
    assert!(winner.starts_with("local_only"), "{winner}");
}
