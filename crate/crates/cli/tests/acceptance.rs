//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with the measured quantities. Run with
//! `cargo test -p didcap-cli --test acceptance -- --nocapture` to see the
//! lines for passing criteria too.

use std::process::Command;
use std::time::Instant;

use didcap::info::BlockDistribution;
use didcap::lower::{
    first_term, genie_erasure, iud_lower_bound, lower_bound, second_term, MarkovInput,
};
use didcap::lownoise::{expansion, rate_function_f, taylor_coefficients, TaylorPoint};
use didcap::simrate::estimate_conditional_entropy_rate;
use didcap::state::{k_step_matrix, one_step_matrix, stationary_distribution};
use didcap::upper::{
    build_problem, check_not_stationary, objective_and_gradient, solve, trivializing_input,
    TrivializeOutcome,
};
use didcap::ChannelParams;

fn params(p_i: f64, p_d: f64) -> ChannelParams {
    ChannelParams::new(p_i, p_d).unwrap()
}

fn run_cli(args: &[&str]) -> (String, std::process::ExitStatus, f64) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_didcap"))
        .args(args)
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed().as_secs_f64();
    (
        String::from_utf8(out.stdout).expect("utf-8"),
        out.status,
        elapsed,
    )
}

fn verdict(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

#[test]
fn criterion_01_genie_values_via_cli() {
    let mut ok = true;
    let mut details = Vec::new();
    for (p, want) in [("0.1", 0.95f64), ("0.2", 0.9)] {
        let (text, status, secs) = run_cli(&["lower", "--p", p]);
        let genie: f64 = text
            .lines()
            .find(|l| l.contains(",genie,"))
            .and_then(|l| l.split(',').nth(4))
            .and_then(|v| v.parse().ok())
            .expect("genie row present");
        ok &= status.success() && genie == want && secs < 1.0;
        details.push(format!("p={p}: genie={genie} in {secs:.2}s"));
    }
    assert!(verdict("1 (genie values)", ok, &details.join("; ")));
}

#[test]
fn criterion_02_closed_forms_vs_enumeration() {
    let start = Instant::now();
    // 20-point grid over (p_i, p_d, alpha) for the first entropy term.
    let grid = [(0.05, 0.05), (0.1, 0.3), (0.3, 0.1), (0.5, 0.5), (0.7, 0.2)];
    let alphas = [0.1, 0.35, 0.5, 0.85];
    let mut worst_first = 0.0f64;
    for &(p_i, p_d) in &grid {
        for &alpha in &alphas {
            let cp = params(p_i, p_d);
            let closed = first_term(cp, alpha).unwrap();
            let oracle = first_term_enumeration(cp, alpha);
            worst_first = worst_first.max((closed - oracle).abs());
        }
    }
    // k-step closed form against repeated multiplication.
    let mut worst_power = 0.0f64;
    for &(p_i, p_d) in &grid {
        let cp = params(p_i, p_d);
        let one = one_step_matrix(cp);
        let mut acc = one;
        for k in 1..=20u32 {
            let closed = k_step_matrix(cp, k).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    worst_power = worst_power.max((closed.entry(a, b) - acc.entry(a, b)).abs());
                }
            }
            acc = one.mul(&acc);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_first < 1e-12 && worst_power < 1e-12 && secs < 5.0;
    assert!(verdict(
        "2 (closed forms vs enumeration)",
        pass,
        &format!(
            "first-term dev {worst_first:.2e}, matrix-power dev {worst_power:.2e}, {secs:.2}s"
        )
    ));
}

#[test]
fn criterion_03_conditional_rate_cross_validation() {
    let start = Instant::now();
    let mut ok = true;
    let mut worst_sigma = 0.0f64;
    let mut worst_hw = 0.0f64;
    for p in [0.05, 0.1, 0.2] {
        for alpha in [0.3, 0.5, 0.7] {
            let cp = params(p, p);
            let est = estimate_conditional_entropy_rate(
                cp,
                MarkovInput::new(alpha).unwrap(),
                1_000_000,
                10,
                0xD1D,
            )
            .unwrap();
            let (closed, _) = second_term(cp, alpha, 1e-13).unwrap();
            let dev = (est.mean - closed).abs();
            ok &= dev <= 2.0 * est.half_width && est.half_width < 1e-3;
            worst_sigma = worst_sigma.max(if est.half_width > 0.0 {
                dev / est.half_width
            } else {
                0.0
            });
            worst_hw = worst_hw.max(est.half_width);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    assert!(verdict(
        "3 (series vs Monte Carlo)",
        ok,
        &format!("worst dev {worst_sigma:.2}x half-width, worst hw {worst_hw:.1e}, {secs:.1}s")
    ));
}

#[test]
fn criterion_04_sandwich_and_window_monotonicity() {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [0.02, 0.05, 0.1, 0.2, 0.3] {
        let cp = params(p, p);
        let lb = lower_bound(cp, 1e-12).unwrap().value;
        let mut prev = f64::INFINITY;
        for l in 2..=6usize {
            let r = solve(&build_problem(cp, l, true).unwrap(), 1e-9).unwrap();
            if !(r.converged && lb <= r.value + 1e-8 && r.value <= prev + 1e-8) {
                ok = false;
                notes.push(format!(
                    "p={p} L={l}: lb={lb:.6} C_L={:.6} prev={prev:.6} conv={}",
                    r.value, r.converged
                ));
            }
            prev = r.value;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    assert!(verdict(
        "4 (sandwich and monotonicity)",
        ok,
        &if notes.is_empty() {
            format!("25 solves clean, {secs:.1}s")
        } else {
            notes.join("; ")
        }
    ));
}

#[test]
fn criterion_05_low_noise_tightness_window_two() {
    // Stated thresholds: C_2 - C_Mkv below 5e-3 at p = 0.02 and 2e-2 at
    // p = 0.05. The window-2 bound does not reach them (the gap at
    // window 2 scales linearly in p; the thresholds hold from window 5
    // up), so this criterion records the measured gaps and fails.
    let mut details = Vec::new();
    let mut pass = true;
    for (p, threshold) in [(0.02, 5e-3), (0.05, 2e-2)] {
        let cp = params(p, p);
        let lb = lower_bound(cp, 1e-12).unwrap().value;
        let c2 = solve(&build_problem(cp, 2, true).unwrap(), 1e-9)
            .unwrap()
            .value;
        let gap = c2 - lb;
        pass &= gap < threshold;
        let c5 = solve(&build_problem(cp, 5, true).unwrap(), 1e-9)
            .unwrap()
            .value;
        details.push(format!(
            "p={p}: C_2-lb={gap:.3e} (need <{threshold:.0e}); diagnostic C_5-lb={:.3e}",
            c5 - lb
        ));
    }
    assert!(verdict(
        "5 (low-noise tightness of C_2)",
        pass,
        &details.join("; ")
    ));
}

#[test]
fn criterion_06_trivialization() {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [0.1, 0.3] {
        let cp = params(p, p);
        for l in [2usize, 3, 4] {
            let TrivializeOutcome::Found(d) = trivializing_input(cp, l).unwrap() else {
                ok = false;
                notes.push(format!("p={p} L={l}: construction missing"));
                continue;
            };
            let prob = build_problem(cp, l, false).unwrap();
            let (obj, _) = objective_and_gradient(&prob, &d).unwrap();
            let nonstat = check_not_stationary(&d);
            let solved = solve(&build_problem(cp, l, true).unwrap(), 1e-9).unwrap();
            let good = (obj - 1.0).abs() < 1e-12 && nonstat && solved.value < 0.999;
            if !good {
                ok = false;
                notes.push(format!(
                    "p={p} L={l}: obj={obj} nonstat={nonstat} solve={}",
                    solved.value
                ));
            }
        }
    }
    assert!(verdict(
        "6 (trivialization without stationarity)",
        ok,
        &if notes.is_empty() {
            "two-string objective exactly 1, constrained solves below 0.999".into()
        } else {
            notes.join("; ")
        }
    ));
}

#[test]
fn criterion_07_expansion_order_claim() {
    let mut ok = true;
    let mut ratios = Vec::new();
    for p in [0.02, 0.01, 0.005, 0.0025] {
        let e = expansion(p, 1e-13).unwrap().value;
        let lb = iud_lower_bound(ChannelParams::symmetric(p).unwrap(), 1e-13).unwrap();
        let ratio = (e - lb).abs() / (p * p);
        ok &= ratio < 10.0;
        ratios.push(format!("p={p}: {ratio:.3}"));
    }
    assert!(verdict("7 (expansion order claim)", ok, &ratios.join("; ")));
}

#[test]
fn criterion_08_taylor_coefficients() {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [0.05, 0.1, 0.2] {
        let cp = ChannelParams::symmetric(p).unwrap();
        let c = taylor_coefficients(p, TaylorPoint::new(0.0, 0.0, 1.0).unwrap(), 1e-13).unwrap();
        let h = 1e-5;
        let f = |d1: f64, d2: f64| rate_function_f(d1, d2, cp, 1e-14).unwrap();
        let fd1 = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let fd2 = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        let rel1 = (c.a1 - fd1).abs() / fd1.abs().max(1e-12);
        let rel2 = (c.a2 - fd2).abs() / fd2.abs().max(1e-12);
        let good = rel1 < 1e-4 && rel2 < 1e-4 && c.b20 > 0.0;
        ok &= good;
        notes.push(format!(
            "p={p}: dA1={rel1:.1e} dA2={rel2:.1e} B20={:.3}",
            c.b20
        ));
    }
    assert!(verdict("8 (Taylor coefficients)", ok, &notes.join("; ")));
}

#[test]
fn criterion_09_structural_verification_via_cli() {
    let (text, status, secs) = run_cli(&["verify", "--suite", "all"]);
    let pass = status.success() && text.contains("verify: PASS") && secs < 60.0;
    assert!(verdict(
        "9 (structural verification suite)",
        pass,
        &format!("exit {:?} in {secs:.1}s", status.code())
    ));
}

#[test]
fn criterion_10_sweep_shapes() {
    let ps = "0.02,0.06,0.10,0.14,0.18,0.22,0.26,0.30,0.34,0.38";
    let (text, status, _) = run_cli(&[
        "sweep",
        "--p",
        ps,
        "--quantities",
        "lower,upper",
        "--L",
        "2",
    ]);
    assert!(status.success());
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut alphas = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let p: f64 = f[0].parse().unwrap();
        let v: f64 = f[4].parse().unwrap();
        match f[2] {
            "lower" => {
                lower.push((p, v));
                alphas.push((p, f[5].parse::<f64>().unwrap()));
            }
            "upper_L" => upper.push((p, v)),
            _ => {}
        }
    }
    let decreasing = |v: &[(f64, f64)]| v.windows(2).all(|w| w[1].1 < w[0].1 + 1e-12);
    let alpha_ok = alphas
        .iter()
        .filter(|(p, _)| *p < 0.1)
        .all(|(_, a)| (0.4..=0.6).contains(a));
    let pass = decreasing(&lower) && decreasing(&upper) && alpha_ok;
    assert!(verdict(
        "10 (sweep shapes)",
        pass,
        &format!(
            "lower decreasing {}, upper decreasing {}, alpha in band {}",
            decreasing(&lower),
            decreasing(&upper),
            alpha_ok
        )
    ));
}

/// Exact enumeration of the first entropy term from the joint of three
/// inputs, three states, and the two outputs they produce.
fn first_term_enumeration(cp: ChannelParams, alpha: f64) -> f64 {
    let pi_z = stationary_distribution(cp).unwrap();
    let m = one_step_matrix(cp);
    let mut joint = vec![0.0f64; 16];
    for xw in 0..8usize {
        let x = [(xw & 1) as u8, ((xw >> 1) & 1) as u8, ((xw >> 2) & 1) as u8];
        let mut px = 0.5;
        for i in 1..3 {
            px *= if x[i] != x[i - 1] { alpha } else { 1.0 - alpha };
        }
        for zw in 0..8usize {
            let z = [zw & 1, (zw >> 1) & 1, (zw >> 2) & 1];
            let pz = (if z[0] == 0 { pi_z.p0 } else { pi_z.p1 })
                * m.entry(z[1], z[0])
                * m.entry(z[2], z[1]);
            let y1 = x[1 - z[1]];
            let y2 = x[2 - z[2]];
            let key = usize::from(y2) | usize::from(y1) << 1 | usize::from(x[0]) << 2 | (z[0] << 3);
            joint[key] += px * pz;
        }
    }
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };
    let mut marg = vec![0.0f64; 8];
    for (key, &v) in joint.iter().enumerate() {
        marg[key >> 1] += v;
    }
    h(&joint) - h(&marg)
}

// A build-speed spot check tied to the enumeration guard: the largest
// window the figures use must assemble quickly.
#[test]
fn window_seven_builds_fast() {
    let start = Instant::now();
    let prob = build_problem(params(0.1, 0.1), 7, true).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 1.0, "build took {secs}s");
    assert_eq!(prob.window(), 7);
    // one objective evaluation at the i.u.d. point
    let u = BlockDistribution::uniform(8);
    let (v, _) = objective_and_gradient(&prob, &u).unwrap();
    assert!(v > 0.0 && v <= 1.0);
    let _ = genie_erasure(params(0.1, 0.1)).unwrap();
}
