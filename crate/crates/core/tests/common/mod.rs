#![allow(dead_code)]

use noether_core::{Expr, Infinitesimal, Problem};

pub fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

pub fn ps(v: &[&str]) -> Vec<Expr> {
    v.iter().map(|s| p(s)).collect()
}

pub fn problem(name: &str, n: usize, m: usize, l: &str, phi: &[&str]) -> Problem {
    Problem::new(name, n, m, p(l), ps(phi), (0.0, 1.0)).unwrap()
}

pub fn inf(tau: &str, xi: &[&str], ups: &[&str], f: &str) -> Infinitesimal {
    Infinitesimal::new(p(tau), ps(xi), ps(ups), p(f)).unwrap()
}

pub fn ex3_1() -> (Problem, Infinitesimal) {
    (
        problem("ex3_1", 3, 2, "u1^2 + u2^2", &["u1", "u2", "u2*x2^2/2"]),
        inf("0", &["t", "t", "x2^2*t/2"], &["1", "1"], "2*(x1 + x2)"),
    )
}

pub fn ex4_1() -> (Problem, Infinitesimal) {
    (
        problem(
            "ex4_1",
            4,
            2,
            "u1^2 + u2^2",
            &["x3", "x4", "-x1*(x1^2 + x2^2) + u1", "-x2*(x1^2 + x2^2) + u2"],
        ),
        inf("0", &["-x2", "x1", "-x4", "x3"], &["-u2", "u1"], "0"),
    )
}

pub fn ex4_2() -> (Problem, Infinitesimal) {
    (
        problem("ex4_2", 4, 2, "u1^2 + u2^2", &["u1*(1 + x2)", "u1*x3", "u2", "u1*x3^2"]),
        inf("2*t", &["3*x1", "2*(1 + x2)", "x3", "3*x4"], &["-u1", "-u2"], "0"),
    )
}

pub fn martinet() -> (Problem, Infinitesimal) {
    (
        problem("martinet", 3, 2, "u1^2 + u2^2", &["u1", "u2", "u1*x2^2/2"]),
        inf("2*t", &["x1", "x2", "3*x3"], &["-u1", "-u2"], "0"),
    )
}

pub fn drift() -> (Problem, Infinitesimal) {
    (
        problem("drift", 2, 1, "u1^2", &["1 + x2^2", "u1"]),
        inf("-2*t", &["2*(t - 2*x1)", "-x2"], &["u1"], "0"),
    )
}

pub fn timeopt4() -> (Problem, Infinitesimal) {
    (
        problem("timeopt4", 4, 1, "1", &["1 + x2", "x3", "u1", "x3^2 - x2^2"]),
        inf("0", &["x1 - t", "x2", "x3", "2*x4"], &["u1"], "0"),
    )
}

pub fn timeopt3() -> (Problem, Infinitesimal) {
    (
        problem("timeopt3", 3, 1, "1", &["1 + x2^2 - x3^2", "x3", "u1"]),
        inf("0", &["2*(x1 - t)", "x2", "x3"], &["u1"], "0"),
    )
}

/// Every fixture with a closed-form control.
pub fn numeric() -> Vec<(Problem, Infinitesimal)> {
    vec![ex3_1(), ex4_1(), ex4_2(), martinet(), drift()]
}

pub fn all() -> Vec<(Problem, Infinitesimal)> {
    let mut v = numeric();
    v.push(timeopt4());
    v.push(timeopt3());
    v
}
