use sobolab_core::config::RunConfig;
use sobolab_core::models::radial_density;
use sobolab_core::pipeline::{run, Stage};
use sobolab_core::space::io;
use sobolab_core::Error;

fn small_radial() -> RunConfig {
    let mut cfg = RunConfig::new(radial_density(2, 24.0, 1.0, 1.5).unwrap());
    cfg.window = Some((10.0, 24.0));
    cfg.threshold_a = Some(2.0);
    cfg.family = RunConfig::parse("generator = euclidean_grid\nn = 2\nextent = 1\nh = 1\nfamily = random_smooth:12")
        .unwrap()
        .family;
    cfg
}

#[test]
fn reports_carry_provenance_and_constants() {
    let cfg = small_radial();
    let hash = cfg.hash();
    let out = run(Stage::VerifySobolev, cfg).unwrap();
    let names: Vec<&str> = out.files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["patching.csv", "patching.json", "sobolev.csv", "sobolev.json"]);
    let v: serde_json::Value = serde_json::from_str(out.file("patching.json").unwrap()).unwrap();
    assert_eq!(v["tool"], "sobolab");
    assert_eq!(v["config_hash"], hash.as_str());
    assert_eq!(v["theorem"], "patching theorem");
    for key in ["Q1", "Q2", "S_c", "S_d", "C"] {
        assert!(v["constants"][key].as_f64().unwrap() > 0.0, "{key}");
    }
    assert!(out.all_pass());
}

#[test]
fn nash_stage_needs_growth_above_two() {
    let err = run(Stage::VerifyNash, small_radial()).unwrap_err();
    assert!(matches!(err, Error::EtaTooSmall { .. }));
}

#[test]
fn written_space_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(Stage::BuildSpace, small_radial()).unwrap();
    out.write(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("space.txt")).unwrap();
    let data = io::from_text(&text).unwrap();
    assert_eq!(data.vertices.len(), 49 * 49);
    let space = io::load(&dir.path().join("space.txt")).unwrap();
    assert_eq!(space.len(), 49 * 49);
}

#[test]
fn config_errors_name_line_and_key() {
    let err = RunConfig::parse("generator = euclidean_grid\nn = 2\nextent = 4\nh = 1\nkapa = 2\n").unwrap_err();
    match err {
        Error::Config { line, message } => {
            assert_eq!(line, 5);
            assert!(message.contains("kapa"));
        }
        e => panic!("{e}"),
    }
}
