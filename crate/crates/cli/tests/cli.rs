use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn stdiff(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stdiff"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STDIFF_OUT_DIR")
        .output()
        .unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("identity_cosine.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(stdiff(&["run", config.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(stdiff(&["run", config.to_str().unwrap()], &b).status.code(), Some(0));
    let first = std::fs::read(a.join("identity_cosine.csv")).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, std::fs::read(b.join("identity_cosine.csv")).unwrap());
}

#[test]
fn failed_threshold_exits_two_and_bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("identity_cosine.toml"))
        .unwrap()
        .replace("acceptance.max_envelope = 6.6e-4", "acceptance.max_envelope = 1e-9");
    let strict = dir.path().join("strict.toml");
    std::fs::write(&strict, text).unwrap();
    assert_eq!(stdiff(&["run", strict.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "system.kind = \"identity\"\n").unwrap();
    let out = stdiff(&["run", broken.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing key"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_stdiff"))
        .args(["gauss", "--k", "1000", "--angles", "1/4"])
        .env("STDIFF_OUT_DIR", dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("gauss.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(1), Some("0.5"));
}

#[test]
fn gauss_reports_uncertified_irrationals() {
    let dir = tempfile::tempdir().unwrap();
    let ok = stdiff(&["gauss", "--k", "10000", "--angles", "1/3,sqrt2_minus_1"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let tight = stdiff(&["gauss", "--k", "100", "--tol", "1e-6", "--angles", "golden"], dir.path());
    assert_eq!(tight.status.code(), Some(2));
}

#[test]
fn constants_and_adaptive_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdiff(
        &["constants", "--operator", "hl", "--metric", "ultrametric", "--system", "doubling", "--samples", "200", "--k-cap", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.starts_with("operator,family_member,epsilon_or_p,ratio,stderr,truncation_desc\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 4);

    let out = stdiff(&["adaptive", "--kmax", "6", "--samples", "300", "--seed", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let schedule = std::fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
    assert_eq!(schedule.lines().count(), 7);
    let verification = std::fs::read_to_string(dir.path().join("verification.csv")).unwrap();
    assert!(verification.starts_with("x,k,lhs,rhs_bound,pass\n"));
    assert!(verification.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn sweep_covers_the_shipped_configs() {
    let dir = tempfile::tempdir().unwrap();
    let configs = configs();
    let out = stdiff(&["--threads", "1", "sweep", configs.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for id in ["doubling_martingale", "identity_cosine", "rotation_trig", "squares_irrational"] {
        assert!(dir.path().join(format!("{id}.csv")).exists());
    }
}
