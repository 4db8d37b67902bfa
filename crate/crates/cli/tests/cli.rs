use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use s2r_gauss::io::{FieldTable, Mesh};
use serde_json::Value;
use tempfile::TempDir;

fn s2r(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s2r"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out-dir", dir.to_str().unwrap()]);
    s2r(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn fields(path: &Path) -> FieldTable {
    FieldTable::read_csv(fs::File::open(path).unwrap()).unwrap()
}

fn mesh(path: &Path) -> Mesh {
    Mesh::read_obj(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

fn identity<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["identities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == name)
        .unwrap()
}

#[test]
fn generate_wide_helicoid() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "generate",
            "--family",
            "helicoid",
            "--beta",
            "4",
            "--chart",
            "0,1.5,0,6.2",
            "--res",
            "201x201",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = mesh(&dir.path().join("mesh.obj"));
    assert_eq!(m.vertices.len(), 40401);
    assert_eq!(m.faces.len(), 200 * 200);
    let t = fields(&dir.path().join("fields.csv"));
    assert_eq!((t.chart.nu, t.chart.nv), (201, 201));
    assert!(t.g.unwrap().inverted_count() > 0);
}

#[test]
fn generate_sphere_lies_on_unit_sphere() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["generate", "--family", "sphere", "--a", "0"]
        )),
        0
    );
    let x = fields(&dir.path().join("fields.csv")).immersion().unwrap();
    let ch = *x.chart();
    for (i, j) in ch.nodes() {
        assert!((x.point(i, j).norm() - 1.0).abs() <= 1e-12);
    }
    // the mesh carries 9 significant digits
    for v in mesh(&dir.path().join("mesh.obj")).vertices {
        assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn generate_cylinder_lies_in_its_plane() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["generate", "--family", "cylinder", "--normal", "0,1,0"]
        )),
        0
    );
    let x = fields(&dir.path().join("fields.csv")).immersion().unwrap();
    for (i, j) in x.chart().nodes() {
        assert!(x.point(i, j).y.abs() <= 1e-12);
    }
    for v in mesh(&dir.path().join("mesh.obj")).vertices {
        assert!(v[1].abs() <= 1e-12);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert_eq!(
            code(&run_in(
                d.path(),
                &["generate", "--family", "unduloid", "--res", "41"]
            )),
            0
        );
        assert_eq!(
            code(&run_in(
                d.path(),
                &["verify", "--family", "unduloid", "--res", "41"]
            )),
            0
        );
    }
    for f in ["mesh.obj", "fields.csv", "verify.json", "verify.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn verify_families() {
    for (family, class) in [
        ("helicoid", "generic"),
        ("unduloid", "generic"),
        ("sphere", "sphere"),
        ("cylinder", "cylinder"),
    ] {
        let dir = TempDir::new().unwrap();
        let out = run_in(dir.path(), &["verify", "--family", family]);
        assert_eq!(
            code(&out),
            0,
            "{family}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let r = json(&dir.path().join("verify.json"));
        assert_eq!(r["passed"], true);
        assert_eq!(r["classification"]["classification"], class, "{family}");
        let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
        assert_eq!(
            csv.lines().next(),
            Some("name,max_abs,rms,nodes,margin,scale,relative,tolerance,passed")
        );
        assert_eq!(csv.lines().count(), 12);
    }
}

#[test]
fn verify_generated_fields_and_flag_a_corrupted_height() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(dir.path(), &["generate", "--family", "helicoid"])),
        0
    );
    let good = dir.path().join("fields.csv");
    assert_eq!(
        code(&run_in(
            &dir.path().join("good"),
            &["verify", "--fields", good.to_str().unwrap()]
        )),
        0
    );

    let text = fs::read_to_string(&good).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let col = header.split(',').position(|c| c == "h").unwrap();
    let mut bad = format!("{header}\n");
    for line in lines {
        let mut cells: Vec<String> = line.split(',').map(String::from).collect();
        cells[col] = format!("{:e}", cells[col].parse::<f64>().unwrap() * 1.01);
        bad.push_str(&cells.join(","));
        bad.push('\n');
    }
    let bad_path = dir.path().join("bad.csv");
    fs::write(&bad_path, bad).unwrap();
    let out_dir = dir.path().join("bad");
    assert_eq!(
        code(&run_in(
            &out_dir,
            &["verify", "--fields", bad_path.to_str().unwrap()]
        )),
        1
    );
    let r = json(&out_dir.join("verify.json"));
    assert_eq!(r["passed"], false);
    assert_eq!(identity(&r, "covariant_minimality")["passed"], false);
    assert!(String::from_utf8_lossy(
        &run_in(
            &out_dir,
            &["verify", "--fields", bad_path.to_str().unwrap()]
        )
        .stdout
    )
    .contains("FAIL covariant_minimality"));
}

#[test]
fn verify_tolerance_override() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["verify", "--family", "helicoid", "--tol", "1e-12"]
        )),
        1
    );
    assert_eq!(json(&dir.path().join("verify.json"))["passed"], false);
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["verify", "--family", "helicoid", "--tol", "-1"]
        )),
        2
    );
}

#[test]
fn reconstruct_helicoid_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "reconstruct",
            "--family",
            "helicoid",
            "--beta",
            "4",
            "--r0",
            "0",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(&dir.path().join("reconstruct.json"));
    let c = r["congruence"].as_array().unwrap();
    assert_eq!(
        (&c[0]["candidate"], &c[0]["reference"]),
        (&"1".into(), &"source".into())
    );
    assert_eq!(c[0]["verdict"], "vertical_translation");
    assert_eq!(c[1]["verdict"], "antipodal_translation");
    for k in [1, 2] {
        let m = mesh(&dir.path().join(format!("candidate_{k}.obj")));
        // the derivative stencils of g_zz̄ remove two boundary layers
        assert_eq!(m.vertices.len(), 97 * 97);
        assert!(dir.path().join(format!("candidate_{k}.csv")).exists());
    }
}

#[test]
fn reconstruct_unduloid_candidates_are_antipodal() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["reconstruct", "--family", "unduloid", "--alpha", "8"]
        )),
        0
    );
    let r = json(&dir.path().join("reconstruct.json"));
    let mutual = r["congruence"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["reference"] == "candidate_1")
        .unwrap();
    assert_eq!(mutual["verdict"], "antipodal_translation");
    assert!(mutual["max_deviation"].as_f64().unwrap() <= mutual["tolerance"].as_f64().unwrap());
}

#[test]
fn reconstruct_from_a_field_table() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["generate", "--family", "unduloid", "--res", "61"]
        )),
        0
    );
    let f = dir.path().join("fields.csv");
    let out_dir = dir.path().join("rec");
    assert_eq!(
        code(&run_in(
            &out_dir,
            &["reconstruct", "--fields", f.to_str().unwrap()]
        )),
        0
    );
    let r = json(&out_dir.join("reconstruct.json"));
    assert_eq!(r["congruence"].as_array().unwrap().len(), 3);
}

#[test]
fn double_double_candidates_pass_verify() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "reconstruct",
            "--family",
            "helicoid",
            "--double-double",
            "--res",
            "201",
        ],
    );
    assert_eq!(code(&out), 0);
    for k in [1, 2] {
        let c = dir.path().join(format!("candidate_{k}.csv"));
        let out = run_in(
            &dir.path().join(format!("v{k}")),
            &["verify", "--fields", c.to_str().unwrap()],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn constant_gauss_map_is_degenerate_input() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("u,v,Reg,Img\n");
    for i in 0..11 {
        for j in 0..11 {
            text.push_str(&format!(
                "{},{},0.3,0.2\n",
                i as f64 / 10.0,
                j as f64 / 10.0
            ));
        }
    }
    let f = dir.path().join("const.csv");
    fs::write(&f, text).unwrap();
    assert_eq!(
        code(&run_in(
            dir.path(),
            &["reconstruct", "--fields", f.to_str().unwrap()]
        )),
        4
    );
    let r = json(&dir.path().join("reconstruct.json"));
    assert_eq!(r["classification"]["classification"], "cylinder");
    assert_eq!(r["passed"], false);
}

#[test]
fn chart_across_a_singular_curve_is_degenerate_input() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "reconstruct",
            "--family",
            "helicoid",
            "--chart",
            "0.3,0.4,0,0.1",
            "--res",
            "41",
        ],
    );
    assert_eq!(code(&out), 4);
    let r = json(&dir.path().join("reconstruct.json"));
    assert_eq!(r["classification"]["classification"], "generic");
    assert!(r["message"].as_str().unwrap().contains("singular"));
}

#[test]
fn exit_codes_for_bad_configuration_and_input() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&run_in(
            d,
            &["generate", "--family", "unduloid", "--alpha", "0.5"]
        )),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["generate", "--family", "helicoid", "--beta", "0"]
        )),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["generate", "--family", "cylinder", "--normal", "1,1,0"]
        )),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["generate", "--family", "sphere", "--chart", "1,0,0,1"]
        )),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["generate", "--family", "sphere", "--res", "3"]
        )),
        2
    );
    assert_eq!(code(&run_in(d, &["generate"])), 2);
    assert_eq!(
        code(&run_in(
            d,
            &["verify", "--fields", "/nonexistent/fields.csv"]
        )),
        2
    );
    assert_eq!(code(&run_in(d, &["report"])), 2);
    fs::write(d.join("junk.csv"), "u,v,h\n0,0,zero\n").unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &["verify", "--fields", d.join("junk.csv").to_str().unwrap()]
        )),
        3
    );
    fs::write(d.join("nog.csv"), "u,v,h\n").unwrap();
    assert_eq!(
        code(&run_in(
            d,
            &[
                "reconstruct",
                "--fields",
                d.join("nog.csv").to_str().unwrap()
            ]
        )),
        3
    );
    let f = d.join("fields.csv");
    assert_eq!(code(&run_in(d, &["generate", "--family", "sphere"])), 0);
    assert_eq!(
        code(&run_in(
            d,
            &["verify", "--fields", f.to_str().unwrap(), "--convergence"]
        )),
        2
    );
    // output directory below a regular file
    assert_eq!(
        code(&run_in(&f.join("sub"), &["generate", "--family", "sphere"])),
        2
    );
}

fn read_table(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn report_residual_tables_from_a_convergence_run() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "--family",
            "helicoid",
            "--chart",
            "0.25,0.45,0,0.2",
            "--convergence",
            "--res",
            "101",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(r["levels"].as_array().unwrap().len(), 3);
    assert_eq!(r["orders"].as_array().unwrap().len(), 11);
    let v = dir.path().join("verify.json");
    let plots = dir.path().join("plots");
    assert_eq!(
        code(&run_in(
            &plots,
            &["report", "--verify", v.to_str().unwrap()]
        )),
        0
    );
    for name in [
        "conformality",
        "covariant_minimality",
        "gauss_map_pde",
        "quotient_identity",
    ] {
        let text = fs::read_to_string(plots.join(format!("residual_{name}.csv"))).unwrap();
        assert!(text.lines().next().unwrap().starts_with("# "));
        let rows = read_table(&plots.join(format!("residual_{name}.csv")));
        assert_eq!(rows.len(), 3);
        assert!(
            rows.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1),
            "{name}: {rows:?}"
        );
    }
}

#[test]
fn report_curvature_profiles() {
    for (family, k_expected, tol) in [("sphere", 1.0, 1e-4), ("cylinder", 0.0, 1e-8)] {
        let dir = TempDir::new().unwrap();
        assert_eq!(
            code(&run_in(dir.path(), &["generate", "--family", family])),
            0
        );
        let f = dir.path().join("fields.csv");
        assert_eq!(
            code(&run_in(
                dir.path(),
                &["report", "--fields", f.to_str().unwrap()]
            )),
            0
        );
        for file in ["K_along_u.csv", "K_along_v.csv"] {
            let rows = read_table(&dir.path().join(file));
            assert!(rows.len() > 90);
            for (_, k) in rows {
                assert!((k - k_expected).abs() <= tol, "{family} {file}: K = {k}");
            }
        }
        let g = read_table(&dir.path().join("abs_g_along_u.csv"));
        assert_eq!(g.len(), 99);
    }
}
