use std::process::Command;

fn iforms(args: &[&str], caps: Option<&str>) -> (String, String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_iforms"));
    cmd.args(args).env_remove("IFORMS_CAPS");
    if let Some(c) = caps {
        cmd.env("IFORMS_CAPS", c);
    }
    let out = cmd.output().unwrap();
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

#[test]
fn euler_example() {
    let (out, _, code) = iforms(&["euler", "u1^2/2"], None);
    assert_eq!(code, 0);
    assert_eq!(out, "-u2 * w0 ^ d[1](x)\nclass: nonzero\n");
}

#[test]
fn exit_codes() {
    assert_eq!(iforms(&["cartan-deg", "k", "d[1](x)"], None), ("0\n".into(), String::new(), 0));
    assert_eq!(iforms(&["eval", "d[1](q)"], None).2, 3);
    assert_eq!(iforms(&["eval", "(x"], None).2, 3);
    assert_eq!(iforms(&["-k", "2", "kappa", "1,1", "x"], None).2, 1);
    let (_, err, code) = iforms(&["euler", "u1^2"], Some("order=2"));
    assert_eq!(code, 2);
    assert!(err.contains("at least 3"), "{err}");
    assert_eq!(iforms(&["no-such-command"], None).2, 3);
}

#[test]
fn selftest_passes() {
    let (out, _, code) = iforms(&["selftest"], None);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("failed=0\n"));
}

#[test]
fn patch_files() {
    let dir = std::env::temp_dir().join(format!("iforms-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("plane.patch");
    std::fs::write(&path, "[coords]\nnames = x, y\n").unwrap();
    let p = path.to_str().unwrap();
    let (out, _, code) = iforms(&["--patch", p, "e1-dim", "--p", "0", "--q", "1", "--grade", "1"], None);
    assert_eq!(code, 0);
    assert!(out.contains("dimension=0\n"), "{out}");
    let (out, _, _) = iforms(&["--patch", p, "patch"], Some("degree=3"));
    assert_eq!(out, "[coords]\nnames = x, y\n\n[caps]\ndegree = 3\n");
    std::fs::write(&path, "[jet]\norder = four\n").unwrap();
    assert_eq!(iforms(&["--patch", p, "eval", "x"], None).2, 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn outputs_are_deterministic() {
    let args = ["-k", "2", "e1-dim", "--p", "1", "--q", "1", "--degrees", "1", "--grade=0,2", "--cap", "1"];
    let a = iforms(&args, None);
    let b = iforms(&args, None);
    assert_eq!(a, b);
    assert_eq!(a.2, 0);
}
