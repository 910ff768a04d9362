use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use spatial_joint::distributions::StreamRng;
use spatial_joint::gibbs::run_chain;
use spatial_joint::harness::replicate_data;
use spatial_joint::io::{
    read_chain, read_dataset, read_truth, write_chain, write_dataset, write_truth, EdgeFormat, RunConfig,
};
use spatial_joint::model::{Chain, Dataset, Hyperparameters, SamplerConfig};
use spatial_joint::simulate::scenario;
use spatial_joint::Error;

fn small_dataset() -> Dataset {
    let mut cfg = scenario(4).unwrap();
    cfg.subjects = 6;
    cfg.nodes = 5;
    replicate_data(&cfg, 3, 0).unwrap().1
}

fn small_chain(data: &Dataset, config: SamplerConfig) -> Chain {
    let mut h = Hyperparameters::with_rank(2);
    h.iterations = 12;
    h.burnin = 4;
    h.seed = 9;
    run_chain(data, &h, config, &mut StreamRng::new(9, 0)).unwrap()
}

fn reason(e: Error) -> String {
    e.to_string()
}

#[test]
fn both_edge_layouts_round_trip_exactly() {
    let data = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    for (sub, fmt) in [("long", EdgeFormat::Long), ("mat", EdgeFormat::Matrices)] {
        let p = dir.path().join(sub);
        write_dataset(&p, &data, fmt).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), data);
    }
}

#[test]
fn long_and_matrix_layouts_agree_when_written_by_hand() {
    // Same networks typed in both layouts, with no manifest fingerprint.
    let dir = tempfile::tempdir().unwrap();
    let common = |p: &Path, layout: &str| {
        fs::create_dir_all(p).unwrap();
        fs::write(
            p.join("manifest.toml"),
            format!("format_version = 1\nsubjects = 2\nnodes = 3\naux = 0\nedge_format = \"{layout}\"\n"),
        )
        .unwrap();
        fs::write(p.join("coords.csv"), "id,x,y,z\n1,0,0,0\n2,1,0,0\n3,0,2,0.5\n").unwrap();
        fs::write(p.join("attributes.csv"), "z_1,z_2,z_3\n0.1,0.2,0.3\n-1,2e-3,4\n").unwrap();
        fs::write(p.join("predictor.csv"), "x\n0.5\n-1.25\n").unwrap();
    };
    let long = dir.path().join("long");
    common(&long, "long");
    fs::write(
        long.join("edges.csv"),
        "subject,u,v,value\n2,2,3,-0.7\n1,1,2,0.25\n1,1,3,1.5\n1,2,3,-3\n2,1,2,1e-9\n2,1,3,0\n",
    )
    .unwrap();
    let mat = dir.path().join("mat");
    common(&mat, "matrices");
    fs::create_dir_all(mat.join("networks")).unwrap();
    fs::write(mat.join("networks/subject_00001.csv"), "0,0.25,1.5\n0.25,0,-3\n1.5,-3,0\n").unwrap();
    fs::write(mat.join("networks/subject_00002.csv"), "0,1e-9,0\n1e-9,0,-0.7\n0,-0.7,0\n").unwrap();
    let a = read_dataset(&long).unwrap();
    let b = read_dataset(&mat).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.network_matrix(0)[(2, 1)], -3.0);
}

#[test]
fn asymmetric_matrix_names_the_entry() {
    let data = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data, EdgeFormat::Matrices).unwrap();
    let manifest = dir.path().join("manifest.toml");
    let text = fs::read_to_string(&manifest).unwrap();
    let text: String = text.lines().filter(|l| !l.starts_with("fingerprint")).map(|l| format!("{l}\n")).collect();
    fs::write(&manifest, text).unwrap();
    let file = dir.path().join("networks/subject_00002.csv");
    let mut rows: Vec<Vec<String>> =
        fs::read_to_string(&file).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect();
    rows[0][2] = "123.5".into();
    fs::write(&file, rows.iter().map(|r| r.join(",") + "\n").collect::<String>()).unwrap();
    let msg = reason(read_dataset(dir.path()).unwrap_err());
    assert!(msg.contains("subject 2, 1, 3"), "{msg}");
}

fn tamper(path: &Path, from: &str, to: &str) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from} not in {}", path.display());
    fs::write(path, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn corrupt_datasets_are_rejected_with_a_reason() {
    let data = small_dataset();
    type Corruption<'a> = (&'a str, Box<dyn Fn(&Path)>, &'a str);
    let cases: Vec<Corruption> = vec![
        (
            "version",
            Box::new(|p| tamper(&p.join("manifest.toml"), "format_version = 1", "format_version = 2")),
            "format version 2",
        ),
        ("unknown key", Box::new(|p| tamper(&p.join("manifest.toml"), "nodes =", "nodez =")), "nodez"),
        (
            "nan",
            Box::new(|p| {
                let f = p.join("predictor.csv");
                let text = fs::read_to_string(&f).unwrap();
                let mut lines: Vec<String> = text.lines().map(String::from).collect();
                lines[2] = "NaN".into();
                fs::write(&f, lines.join("\n") + "\n").unwrap();
            }),
            "NaN",
        ),
        ("lower entry", Box::new(|p| tamper(&p.join("edges.csv"), "\n1,1,2,", "\n1,2,1,")), "u < v"),
        (
            "missing",
            Box::new(|p| {
                let f = p.join("edges.csv");
                let text = fs::read_to_string(&f).unwrap();
                let mut lines: Vec<&str> = text.lines().collect();
                lines.remove(3);
                fs::write(&f, lines.join("\n") + "\n").unwrap();
            }),
            "missing entry (subject 1, 1, 4)",
        ),
        (
            "edited value",
            Box::new(|p| {
                let f = p.join("attributes.csv");
                let text = fs::read_to_string(&f).unwrap();
                let mut lines: Vec<String> = text.lines().map(String::from).collect();
                lines[1] = lines[1].replacen(|c: char| c.is_ascii_digit(), "7", 1);
                fs::write(&f, lines.join("\n") + "\n").unwrap();
            }),
            "fingerprint",
        ),
        ("missing file", Box::new(|p| fs::remove_file(p.join("coords.csv")).unwrap()), "coords.csv"),
    ];
    for (name, corrupt, needle) in cases {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data, EdgeFormat::Long).unwrap();
        corrupt(dir.path());
        let err = read_dataset(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{name}");
        let msg = reason(err);
        assert!(msg.contains(needle), "{name}: {msg}");
    }
}

fn assert_same_chain(a: &Chain, b: &Chain) {
    assert_eq!(a.states, b.states);
    assert_eq!(a.hyper, b.hyper);
    assert_eq!(a.config, b.config);
    assert_eq!(a.dataset_fingerprint, b.dataset_fingerprint);
    assert_eq!(a.stream, b.stream);
}

#[test]
fn chains_round_trip_bit_for_bit() {
    let data = small_dataset();
    for config in [SamplerConfig::spatial_joint(), SamplerConfig::non_spatial_joint(), SamplerConfig::network_only()] {
        let chain = small_chain(&data, config);
        let dir = tempfile::tempdir().unwrap();
        write_chain(dir.path(), &chain, Some(Path::new("somewhere/data"))).unwrap();
        let back = read_chain(dir.path()).unwrap();
        assert_same_chain(&back.chain, &chain);
        assert_eq!(back.dataset.as_deref(), Some(Path::new("somewhere/data")));
        if !config.spatial {
            assert!(back.chain.states.iter().all(|s| s.zeta == f64::INFINITY));
        }
    }
}

#[test]
fn edited_draws_are_detected() {
    let data = small_dataset();
    let chain = small_chain(&data, SamplerConfig::spatial_joint());
    let dir = tempfile::tempdir().unwrap();
    write_chain(dir.path(), &chain, None).unwrap();
    let draws = dir.path().join("draws.csv");
    let text = fs::read_to_string(&draws).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines.pop();
    fs::write(&draws, lines.join("\n") + "\n").unwrap();
    let msg = reason(read_chain(dir.path()).unwrap_err());
    assert!(msg.contains("hash"), "{msg}");
}

#[test]
fn truth_round_trips() {
    let mut cfg = scenario(2).unwrap();
    cfg.subjects = 4;
    cfg.nodes = 6;
    let (truth, data) = replicate_data(&cfg, 5, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.json");
    write_truth(&path, &truth, Some(data.fingerprint())).unwrap();
    let (back, fp) = read_truth(&path).unwrap();
    assert_eq!(back, truth);
    assert_eq!(fp, Some(data.fingerprint()));
}

#[test]
fn run_config_rejects_unknown_keys_and_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.toml");
    fs::write(&p, "format_version = 1\nseed = 4\nreplicates = 3\n[hyper]\nrank = 2\niterations = 50\nburnin = 10\n")
        .unwrap();
    let cfg = RunConfig::read(&p).unwrap();
    assert_eq!(cfg.seed, Some(4));
    assert_eq!(cfg.hyper.rank, Some(2));
    for bad in [
        "format_version = 1\nreplicate = 3\n",
        "format_version = 1\n[hyper]\nburnin = 900\n",
        "format_version = 1\nlevel = 1.5\n",
        "format_version = 3\n",
    ] {
        fs::write(&p, bad).unwrap();
        assert!(RunConfig::read(&p).is_err(), "{bad}");
    }
}

fn arb_dataset() -> impl Strategy<Value = (Dataset, bool)> {
    (1usize..4, 2usize..5, 0usize..3, any::<bool>()).prop_flat_map(|(n, v, q, long)| {
        let h = v * (v - 1) / 2;
        let finite = prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64];
        (proptest::collection::vec(finite.clone(), n * h + n * v + n + n * q + 3 * v), Just((n, v, q, long))).prop_map(
            |(vals, (n, v, q, long))| {
                let h = v * (v - 1) / 2;
                let mut it = vals.into_iter();
                let mut take = |k: usize| DVector::from_iterator(k, it.by_ref().take(k));
                let edges = (0..n).map(|_| take(h)).collect();
                let attrs = (0..n).map(|_| take(v)).collect();
                let x = take(n);
                let w = DMatrix::from_iterator(n, q, take(n * q).iter().copied());
                let coords = (0..v)
                    .map(|_| {
                        let c = take(3);
                        [c[0], c[1], c[2]]
                    })
                    .collect();
                (Dataset::from_edges(v, edges, attrs, x, w, coords).unwrap(), long)
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn arbitrary_finite_datasets_round_trip((data, long) in arb_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let fmt = if long { EdgeFormat::Long } else { EdgeFormat::Matrices };
        write_dataset(dir.path(), &data, fmt).unwrap();
        prop_assert_eq!(read_dataset(dir.path()).unwrap(), data);
    }
}
