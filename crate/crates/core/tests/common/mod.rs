#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nvsim::sequence::protocols::{self, Scan};
use nvsim::sequence::{compile, parse, sweep_assignment, CompileOptions, SequenceError, SequenceProgram};

pub fn corpus_dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(sub)
}

pub fn seq_files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir(sub))
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "seq"))
        .collect();
    v.sort();
    v
}

fn name(p: &Path) -> String {
    p.file_name().unwrap().to_string_lossy().into_owned()
}

/// Parse → print → parse for every valid file; returns (files, failures).
pub fn check_valid() -> (usize, Vec<String>) {
    let files = seq_files("valid");
    let mut bad = Vec::new();
    for p in &files {
        let text = std::fs::read_to_string(p).unwrap();
        let first = match parse(&text) {
            Ok(a) => a,
            Err(e) => {
                bad.push(format!("{}: {e}", name(p)));
                continue;
            }
        };
        match parse(&first.to_string()) {
            Ok(second) if second == first => {}
            Ok(_) => bad.push(format!("{}: reparsed AST differs", name(p))),
            Err(e) => bad.push(format!("{}: printed form fails: {e}", name(p))),
        }
        for w in first.sweeps() {
            for i in [0, w.points - 1] {
                let a = sweep_assignment(&first, &w.name, i).unwrap();
                let mut full = a.clone();
                for o in first.sweeps() {
                    full.entry(o.name.clone()).or_insert(o.value(0));
                }
                if let Err(e) = compile(&first, &full, &CompileOptions::default()) {
                    bad.push(format!("{}: compile at {}[{i}]: {e}", name(p), w.name));
                }
            }
        }
        if first.sweeps().is_empty() {
            if let Err(e) = compile(&first, &Default::default(), &CompileOptions::default()) {
                bad.push(format!("{}: compile: {e}", name(p)));
            }
        }
    }
    (files.len(), bad)
}

/// Every invalid file fails with the kind and position in `expected.txt`.
pub fn check_invalid() -> (usize, Vec<String>) {
    let manifest = std::fs::read_to_string(corpus_dir("invalid").join("expected.txt")).unwrap();
    let expected: Vec<(String, String, String)> = manifest
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split_whitespace().collect();
            (c[0].to_string(), c[1].to_string(), c[2].to_string())
        })
        .collect();
    let files = seq_files("invalid");
    let mut bad = Vec::new();
    for p in &files {
        let n = name(p);
        let Some((_, kind, pos)) = expected.iter().find(|e| e.0 == n) else {
            bad.push(format!("{n}: missing from expected.txt"));
            continue;
        };
        match parse(&std::fs::read_to_string(p).unwrap()) {
            Ok(_) => bad.push(format!("{n}: parsed")),
            Err(SequenceError::Parse { pos: got, kind: k, .. }) => {
                let got = format!("{}:{}", got.line, got.col);
                if format!("{k:?}") != *kind || got != *pos {
                    bad.push(format!("{n}: got {k:?} {got}, expected {kind} {pos}"));
                }
            }
            Err(e) => bad.push(format!("{n}: unpositioned error {e}")),
        }
    }
    (files.len(), bad)
}

pub fn generator_twins() -> Vec<(&'static str, SequenceProgram)> {
    vec![
        ("cw_odmr", protocols::cw_odmr(Scan::new(2.86e9, 2.88e9, 101)).unwrap()),
        ("pulsed_odmr", protocols::pulsed_odmr(Scan::new(2.86e9, 2.88e9, 101), Some(5e6)).unwrap()),
        ("rabi", protocols::rabi(Scan::new(0.0, 1e-6, 51), 2.832e9, None).unwrap()),
        ("ramsey_time", protocols::ramsey_vs_time(Scan::new(0.0, 10e-6, 200), 2.87e9, Some(25e6)).unwrap()),
        ("ramsey_freq", protocols::ramsey_vs_freq(Scan::new(2.86e9, 2.88e9, 201), 1e-6, None).unwrap()),
        ("t1", protocols::t1(Scan::new(1e-6, 3e-3, 30)).unwrap()),
        ("hahn_echo", protocols::hahn_echo(Scan::new(1e-6, 100e-6, 20), 2.87e9, None).unwrap()),
    ]
}

/// Generator output and its hand-written twin compile to identical
/// timelines at every sweep point.
pub fn check_twins() -> (usize, Vec<String>) {
    let o = CompileOptions::default();
    let mut bad = Vec::new();
    let twins = generator_twins();
    for (n, generated) in &twins {
        let path = corpus_dir("twins").join(format!("{n}.seq"));
        let hand = match parse(&std::fs::read_to_string(&path).unwrap()) {
            Ok(h) => h,
            Err(e) => {
                bad.push(format!("{n}: {e}"));
                continue;
            }
        };
        let w = &generated.sweeps()[0];
        for i in 0..w.points {
            let a = sweep_assignment(generated, &w.name, i).unwrap();
            let b = sweep_assignment(&hand, &w.name, i).unwrap();
            let (ta, tb) = (compile(generated, &a, &o).unwrap(), compile(&hand, &b, &o).unwrap());
            if ta != tb {
                bad.push(format!("{n}: timelines differ at point {i}"));
                break;
            }
        }
    }
    (twins.len(), bad)
}

/// Random program text from laser, wait, mw, readout and repeat statements.
pub fn random_program_text(rng: &mut impl rand::Rng) -> String {
    fn block(rng: &mut impl rand::Rng, depth: usize, out: &mut String, indent: usize) {
        let n = rng.random_range(1..=5);
        for _ in 0..n {
            let pad = " ".repeat(indent);
            let f = rng.random_range(2.80..2.94);
            match rng.random_range(0..10) {
                0 | 1 => out.push_str(&format!("{pad}laser {}ns\n", rng.random_range(20..600))),
                2 | 3 => out.push_str(&format!("{pad}wait {}ns\n", rng.random_range(0..1500))),
                4 | 5 => out.push_str(&format!(
                    "{pad}mw {}ns @ {f:.4}GHz amp {:.2}MHz phase {}deg\n",
                    rng.random_range(1..300),
                    rng.random_range(0.5..30.0),
                    rng.random_range(0..360)
                )),
                6 => {
                    out.push_str(&format!("{pad}mw {} @ {f:.4}GHz\n", if rng.random_bool(0.5) { "pi" } else { "pi/2" }))
                }
                7 | 8 => out.push_str(&format!("{pad}readout {}ns\n", rng.random_range(20..300))),
                _ if depth < 2 => {
                    out.push_str(&format!("{pad}repeat {} {{\n", rng.random_range(1..3)));
                    block(rng, depth + 1, out, indent + 2);
                    out.push_str(&format!("{pad}}}\n"));
                }
                _ => out.push_str(&format!("{pad}wait {}ns\n", rng.random_range(0..200))),
            }
        }
    }
    let mut s = String::new();
    if rng.random_bool(0.5) {
        s.push_str("laser 500ns\n");
    }
    block(rng, 0, &mut s, 0);
    s
}

/// Random NV parameters: field up to 10 mT in a random direction, strain up to
/// 5 MHz, hyperfine on or off.
pub fn random_nv(rng: &mut impl rand::Rng) -> nvsim::hamiltonian::NVParameters {
    let b = rng.random_range(0.0..1e-2);
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    let p = nvsim::hamiltonian::NVParameters::default()
        .with_field([b * r * phi.cos(), b * r * phi.sin(), b * z])
        .with_strain(rng.random_range(0.0..5e6));
    if rng.random_bool(0.3) {
        p.without_hyperfine()
    } else {
        p
    }
}

/// Random relaxation times with default optical rates.
pub fn random_relaxation(rng: &mut impl rand::Rng) -> nvsim::dynamics::RelaxationParams {
    let t1 = 10f64.powf(rng.random_range(-5.0..-2.5));
    nvsim::dynamics::RelaxationParams {
        t1,
        t2_star: (10f64.powf(rng.random_range(-7.0..-5.0))).min(t1),
        t2_echo: (10f64.powf(rng.random_range(-6.0..-4.0))).min(t1),
        echo_exponent: rng.random_range(1.0..3.0),
        ..Default::default()
    }
}
