use std::f64::consts::PI;

use sgmix::bench::{eval_test_function, uniform_design, TestFunction};

const FROZEN: &str = include_str!("data/test_functions_1024.csv");

#[test]
fn matches_frozen_table() {
    let mut lines = FROZEN.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "x");
    assert_eq!(header.len(), 13);
    let design = uniform_design(1024);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals[0], design[i]);
        for (name, want) in header[1..].iter().zip(&vals[1..]) {
            let got = eval_test_function(name, vals[0]).unwrap();
            assert!((got - want).abs() <= 1e-10, "{name}({}) = {got}, table {want}", vals[0]);
        }
        rows += 1;
    }
    assert_eq!(rows, 1024);
}

#[test]
fn hand_computed_values() {
    let cases = [
        ("step", 0.2, 0.2),
        ("step", 0.5, 0.8),
        ("wave", 0.0, 0.8),
        ("wave", 0.25, 0.4),
        ("blip", 0.3, 0.8),
        ("blip", 1.0, 0.32 + 0.3 * (-9.0f64).exp()),
        ("heavisine", 0.5, 0.3),
        ("doppler", 0.5, 0.5 * (2.1 * PI / 0.55).sin() + 0.5),
        ("angles", 0.15, 0.8),
        ("angles", 0.2, 0.2),
        ("angles", 0.7, 1.4),
        ("angles", 0.95, 0.4),
        ("parabolas", 0.05, 0.8),
        ("tshsine", 0.0, 0.5),
        ("corner", 0.5, 0.0),
        ("corner", 1.0, 0.0),
    ];
    for (name, x, want) in cases {
        let got = eval_test_function(name, x).unwrap();
        assert!((got - want).abs() < 1e-12, "{name}({x}) = {got}, want {want}");
    }
}

#[test]
fn spikes_peaks_dominate() {
    let f = |x| eval_test_function("spikes", x).unwrap();
    assert!((f(0.47) - 4.0).abs() < 1e-3);
    assert!((f(0.69) - 3.0).abs() < 1e-3);
    assert!(f(0.6) < 0.01);
}

#[test]
fn blocks_piecewise_constant() {
    let x = uniform_design(1024);
    let y: Vec<f64> = x.iter().map(|&v| eval_test_function("blocks", v).unwrap()).collect();
    let jumps = y.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(jumps <= 11, "{jumps} jumps");
}

#[test]
fn domain_and_names() {
    assert!(eval_test_function("blip", -0.1).is_err());
    assert!(eval_test_function("blip", 1.1).is_err());
    let err = eval_test_function("wobble", 0.5).unwrap_err().to_string();
    for f in TestFunction::ALL {
        assert!(err.contains(f.name()));
    }
    assert_eq!(eval_test_function(" Blip ", 0.3).unwrap(), 0.8);
}
