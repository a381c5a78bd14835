//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with
//! `cargo test -p eigenacs-cli --release --test acceptance`, optionally
//! followed by `-- 3 6` to select criteria by number.

use std::path::Path;
use std::time::Instant;

use eigenacs_cli::commands::{build_system, SolveReport};
use eigenacs_cli::{compare, solve, with_threads, RunConfig};
use eigenacs_core::lstsq::SvdSolver;
use eigenacs_core::oracles::{buckling_oracle, lshape_fd_oracle, oracle_spectrum, BucklingFamily};
use eigenacs_core::population::overlap_matrix;
use eigenacs_core::{run_acs, FeatureBasis, MultiIndex, ProblemName, SpectrumReport};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn config(value: Value, out: &Path) -> RunConfig {
    let mut value = value;
    value["output"]["dir"] = json!(out);
    RunConfig::from_json(&value.to_string()).expect("valid config")
}

fn population(report: SolveReport) -> SpectrumReport {
    match report {
        SolveReport::Population(p) => p.spectrum,
        SolveReport::Single(_) => panic!("expected a population report"),
    }
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn monotonicity() -> Verdict {
    let start = Instant::now();
    let (mut runs, mut violations) = (0, 0);
    let dir = tempfile::tempdir().unwrap();
    for name in ProblemName::ALL {
        for seed in 0..20u64 {
            let mut cfg = config(
                json!({"problem": name.as_str(), "seed": seed, "basis": {"width": 200},
                       "collocation": {"n_interior": 400}}),
                dir.path(),
            );
            let (lo, hi) = cfg.problem.search_bounds;
            cfg.mu0 = lo + (hi - lo) * (seed as f64 + 0.5) / 20.0;
            let (_, sys) = build_system(&cfg).unwrap();
            let est = run_acs(&sys, cfg.mu0, &cfg.acs).unwrap();
            let h = &est.loss_history;
            let tol = 1e-9 * (1.0 + h[0]);
            violations += h.windows(2).filter(|w| w[1] > w[0] + tol).count();
            runs += 1;
        }
    }
    let t = start.elapsed().as_secs_f64();
    verdict(
        violations == 0 && t < 120.0,
        format!("{runs} runs, {violations} increases, {t:.1} s"),
    )
}

fn derivative_exactness() -> Verdict {
    let start = Instant::now();
    let basis = FeatureBasis::new(64, 2, 4.0 * std::f64::consts::PI, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = Mat::from_fn(100, 2, |_, _| rng.gen_range(-1.0..1.0));
    let shifted = |axis: usize, dx: f64| {
        let mut p = pts.clone();
        for i in 0..p.nrows() {
            p[(i, axis)] += dx;
        }
        p
    };
    let mut worst: f64 = 0.0;
    for order in 1..=4u32 {
        for kx in 0..=order {
            let (kx, ky) = (kx, order - kx);
            let exact = basis.eval(&pts, MultiIndex::dxy(kx, ky)).unwrap();
            // differentiate the next-lower analytic derivative along one axis
            let (axis, lower) = if kx > 0 { (0, MultiIndex::dxy(kx - 1, ky)) } else { (1, MultiIndex::dxy(kx, ky - 1)) };
            let f = |dx: f64| basis.eval(&shifted(axis, dx), lower).unwrap();
            let fd = if order <= 2 {
                let h = 1e-5;
                (f(h) - f(-h)) * (1.0 / (2.0 * h))
            } else {
                let h = 1e-3;
                (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) * (1.0 / (12.0 * h))
            };
            for j in 0..exact.ncols() {
                let scale = (0..exact.nrows()).map(|i| exact[(i, j)].abs()).fold(0.0, f64::max);
                let err = (0..exact.nrows()).map(|i| (fd[(i, j)] - exact[(i, j)]).abs()).fold(0.0, f64::max);
                worst = worst.max(err / scale);
            }
        }
    }
    verdict(
        worst < 1e-6,
        format!("max column relative error {worst:.2e}, {:.2} s", start.elapsed().as_secs_f64()),
    )
}

fn buckling_accuracy() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let families = [
        ("buckling_pin_pin", BucklingFamily::PinPin),
        ("buckling_fixed_free", BucklingFamily::FixedFree),
        ("buckling_fixed_fixed", BucklingFamily::FixedFixed),
        ("buckling_fixed_pin", BucklingFamily::FixedPin),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, family) in families {
        let oracle_mu = buckling_oracle(family, 1);
        let oracle = oracle_mu.sqrt();
        let (mut ok, mut slowest) = (0, 0.0f64);
        for seed in 0..20u64 {
            // single strand started within 20% of the mode, as in the locality property
            let mu0 = oracle_mu * ChaCha8Rng::seed_from_u64(seed).gen_range(0.8..1.2);
            let cfg = config(
                json!({"problem": name, "seed": seed, "basis": {"width": 500, "bandwidth": 1.0},
                       "collocation": {"n_interior": 300}}),
                dir.path(),
            );
            let t = Instant::now();
            let (_, sys) = build_system(&cfg).unwrap();
            let est = run_acs(&sys, mu0, &cfg.acs).unwrap();
            slowest = slowest.max(t.elapsed().as_secs_f64());
            if est.lambda_phys.is_some_and(|l| rel(l, oracle) <= 1e-3) {
                ok += 1;
            }
        }
        pass &= ok >= 18 && slowest < 1.0;
        parts.push(format!("{name} {ok}/20 (slowest {slowest:.2} s)"));
    }
    verdict(pass, parts.join(", "))
}

fn eigen_boundary() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "buckling_fixed_free", "basis": {"width": 500, "bandwidth": 1.0},
               "collocation": {"n_interior": 300}}),
        dir.path(),
    );
    let (_, sys) = build_system(&cfg).unwrap();
    let est = run_acs(&sys, cfg.mu0, &cfg.acs).unwrap();
    let p = sys.products(&est.weights);
    let b0 = p.b0w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let b1 = est.mu.abs() * p.b1w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let share = b1 / (b0 + b1);
    let err = rel(est.lambda_phys.unwrap_or(f64::NAN), std::f64::consts::FRAC_PI_2);
    verdict(
        sys.active_eigen_boundary_rows() > 0 && share > 0.1 && err <= 1e-3,
        format!(
            "{} eigen-dependent rows, mu*B1 share {share:.3}, lambda error {err:.2e}",
            sys.active_eigen_boundary_rows()
        ),
    )
}

fn helmholtz_square() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "helmholtz_square", "mode": "population", "seed": 7,
               "population": {"target_modes": 4}}),
        dir.path(),
    );
    let t = Instant::now();
    let spectrum = population(solve(&cfg).unwrap());
    let wall = t.elapsed().as_secs_f64();
    let oracle = oracle_spectrum(ProblemName::HelmholtzSquare, 8, None).unwrap().distinct_mus(1e-9);
    let mus = spectrum.mus();
    let errors: Vec<f64> = oracle[..4]
        .iter()
        .map(|&o| mus.iter().map(|&m| rel(m, o)).fold(f64::INFINITY, f64::min))
        .collect();
    let overlaps = overlap_matrix(&cfg.problem.domain, &spectrum.modes).unwrap();
    let worst_overlap = (0..overlaps.len())
        .flat_map(|i| (0..overlaps.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| overlaps[i][j])
        .fold(0.0, f64::max);
    let worst = errors.iter().copied().fold(0.0, f64::max);
    verdict(
        worst <= 5e-3 && worst_overlap < 1e-2 && wall < 60.0,
        format!(
            "{} modes, worst error on first 4 {worst:.2e}, max overlap {worst_overlap:.1e}, {wall:.1} s",
            mus.len()
        ),
    )
}

fn helmholtz_lshape() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let oracle = lshape_fd_oracle(1.0 / 32.0, 6).unwrap();
    let first = oracle.values[0].mu;
    let cfg = config(
        json!({"problem": "helmholtz_lshape", "mode": "population", "seed": 7,
               "population": {"target_modes": 4, "accept_residual_tol": 1e-2}}),
        dir.path(),
    );
    let spectrum = population(solve(&cfg).unwrap());
    let wall = t.elapsed().as_secs_f64();
    let good = spectrum.modes.iter().filter(|m| m.estimate.relative_residual <= 1e-2).count();
    let lowest = spectrum.mus().first().copied().unwrap_or(f64::NAN);
    let first_err = rel(lowest, first);
    let best_strand = spectrum
        .strands
        .iter()
        .map(|s| rel(s.mu, first))
        .filter(|e| e.is_finite())
        .fold(f64::INFINITY, f64::min);
    verdict(
        first_err <= 1e-2 && good >= 4 && wall < 300.0,
        format!(
            "oracle mu1 {first:.4}, lowest accepted {lowest:.4} (error {first_err:.2e}; best raw strand {best_strand:.2e}), \
             {good} modes with residual <= 1e-2, {wall:.1} s"
        ),
    )
}

fn plate() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "plate_ss", "mode": "population", "seed": 7,
               "basis": {"width": 500, "bandwidth": std::f64::consts::PI},
               "population": {"strands_per_generation": 32, "target_modes": 3}}),
        dir.path(),
    );
    let t = Instant::now();
    let spectrum = population(solve(&cfg).unwrap());
    let wall = t.elapsed().as_secs_f64();
    let oracle = oracle_spectrum(ProblemName::PlateSs, 3, None).unwrap().mus();
    let mus = spectrum.mus();
    let errors: Vec<f64> = oracle
        .iter()
        .map(|&o| mus.iter().map(|&m| rel(m, o)).fold(f64::INFINITY, f64::min))
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    verdict(
        worst <= 1e-2 && wall < 120.0,
        format!("errors {}, {wall:.1} s", sci(&errors)),
    )
}

fn speedup() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["buckling_pin_pin", "helmholtz_square"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(json!({"problem": name}), dir.path());
        let r = compare(&cfg).unwrap();
        pass &= r.speedup_ratio > 10.0;
        parts.push(format!(
            "{name} ratio {:.1} (ACS loss {:.2e} in {:.2} s; GD loss {:.2e}, reached {})",
            r.speedup_ratio, r.acs.final_loss, r.acs.wall_time_s, r.gd.final_loss, r.gd_reached_acs_loss
        ));
    }
    verdict(pass, parts.join("; "))
}

fn tikhonov_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = Mat::from_fn(80, 20, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 });
    let y: Vec<f64> = (0..80).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let svd = SvdSolver::new(g.as_ref()).unwrap();
    let w0 = svd.pinv_solve(&y, 1e-12);
    let norm0 = w0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gaps: Vec<f64> = [1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&gamma| {
            let w = svd.tikhonov_solve(&y, gamma);
            w.iter().zip(&w0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm0
        })
        .collect();
    verdict(
        gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-6,
        format!("relative gaps {}", sci(&gaps)),
    )
}

fn strip_wall_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "wall_time_s");
            map.values_mut().for_each(strip_wall_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_times),
        _ => {}
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        json!({"problem": "buckling_pin_pin", "mode": "population", "seed": 11,
               "basis": {"bandwidth": 8.0},
               "population": {"strands_per_generation": 8, "target_modes": 3}}),
        dir.path(),
    );
    let run = |threads| {
        with_threads(Some(threads), || solve(&cfg)).unwrap().unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        strip_wall_times(&mut v);
        v
    };
    let (one, two) = (run(1), run(2));
    let modes = one["spectrum"]["modes"].as_array().map_or(0, Vec::len);
    verdict(one == two && modes > 0, format!("1 vs 2 threads, {modes} modes, identical: {}", one == two))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("1 monotone loss", monotonicity),
        ("2 derivative exactness", derivative_exactness),
        ("3 buckling accuracy", buckling_accuracy),
        ("4 eigenvalue in boundary", eigen_boundary),
        ("5 helmholtz square", helmholtz_square),
        ("6 helmholtz L-shape", helmholtz_lshape),
        ("7 plate", plate),
        ("8 speedup", speedup),
        ("9 tikhonov consistency", tikhonov_consistency),
        ("10 determinism", determinism),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = criteria
        .into_iter()
        .filter(|(name, _)| only.is_empty() || only.iter().any(|o| name.split(' ').next() == Some(o.as_str())))
        .collect();
    let total = selected.len();
    let mut failed = 0;
    for (name, check) in selected {
        let v = std::panic::catch_unwind(check).unwrap_or_else(|_| verdict(false, "panicked".into()));
        failed += usize::from(!v.pass);
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {total} criteria passed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
