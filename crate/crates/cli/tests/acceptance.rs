//! Acceptance suite: every criterion at its stated tolerance, plus oracle
//! checks written independently of the library. One line per criterion.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use umdlab_core::burkholder::{sup_u_approx, wang_u, BurkholderParams, SupSearch};
use umdlab_core::fourier::{GridFunction, GridSpec, Spectrum};
use umdlab_core::jump::{parabolic_extension, simulate_jumps_seeded, BoundaryDatum, LevyMeasureAtomic};
use umdlab_core::mart::{adversarial_search, enumerate_paley_walsh, subordination_ratio, transform, FactorProcess};
use umdlab_core::rng;
use umdlab_core::space::{Exponent, NormedSpace};
use umdlab_core::stats::mean_with_se;
use umdlab_core::verify::{run_criterion, VerifySettings};
use umdlab_core::wiener::{stochastic_integral, StepIntegrand, WienerEnsemble};

type Oracle = (&'static str, Result<(), String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

/// The scalar formula typed out from scratch.
fn u_scalar(p: f64, x: f64, y: f64) -> f64 {
    let ps = p.max(p / (p - 1.0));
    p * (1.0 - 1.0 / ps).powf(p - 1.0) * (y.abs() - (ps - 1.0) * x.abs()) * (x.abs() + y.abs()).powf(p - 1.0)
}

fn oracle_u_formula() -> Result<(), String> {
    let v = wang_u(&BurkholderParams::sharp_hilbert(1, exp(3.0)).unwrap(), &[1.0], &[0.0]).unwrap();
    ensure((v + 8.0 / 3.0).abs() <= 1e-12, || format!("U(1,0) at p=3 is {v}, want -8/3"))?;
    let mut r = rng::stream(101, 0);
    for &p in &[1.2, 1.5, 2.5, 3.0, 4.0] {
        let params = BurkholderParams::sharp_hilbert(1, exp(p)).unwrap();
        for _ in 0..2000 {
            let (x, y) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            let (lib, ora) = (wang_u(&params, &[x], &[y]).unwrap(), u_scalar(p, x, y));
            ensure((lib - ora).abs() <= 1e-12 * (1.0 + ora.abs()), || format!("p={p} ({x},{y}): {lib} vs {ora}"))?;
        }
    }
    Ok(())
}

fn oracle_sup_on_diagonal() -> Result<(), String> {
    let params = BurkholderParams::sharp_hilbert(1, exp(2.0)).unwrap();
    for x in [0.3, 1.0, -2.0] {
        let s = sup_u_approx(&params, &[x], &[x], SupSearch { depth: 3, ..SupSearch::default() }).unwrap();
        ensure(s.value.abs() <= 1e-9, || format!("sup at x=y={x} is {}", s.value))?;
    }
    Ok(())
}

/// Exact p=2 ratio by direct enumeration, compared with the library path.
fn oracle_l2_enumeration() -> Result<(), String> {
    let depth = 8;
    let coef = |hist: &[f64]| 1.0 + 0.5 * (hist.iter().sum::<f64>() * 0.7).tanh();
    let fac = |hist: &[f64]| (hist.iter().sum::<f64>() * 0.9).cos();
    let (mut sf, mut sg) = (0.0, 0.0);
    for path in 0..1usize << depth {
        let eps: Vec<f64> = (0..depth).map(|n| if (path >> n) & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let (mut f, mut g) = (0.0, 0.0);
        for n in 0..depth {
            let d = eps[n] * coef(&eps[..n]);
            f += d;
            g += fac(&eps[..n]) * d;
        }
        sf += f * f;
        sg += g * g;
    }
    let ora = (sg / sf).sqrt();
    ensure(ora <= 1.0 + 1e-12, || format!("oracle ratio {ora} > 1"))?;
    let space = NormedSpace::scalar();
    let rule = |n: usize, h: &[f64], out: &mut [f64]| out[0] = coef(&h[..n - 1]);
    let f = enumerate_paley_walsh(&space, depth, &rule).unwrap();
    let frule = |n: usize, h: &[f64]| if n == 0 { 1.0 } else { fac(&h[..n - 1]) };
    let a = FactorProcess::from_rule(&f, &frule).unwrap();
    let lib = subordination_ratio(&f, &transform(&f, &a).unwrap(), depth, 2.0).unwrap().value;
    ensure((lib - ora).abs() <= 1e-12, || format!("library {lib} vs oracle {ora}"))?;
    let neg = FactorProcess::constant(f.n_paths(), depth, -1.0).unwrap();
    let r = subordination_ratio(&f, &transform(&f, &neg).unwrap(), depth, 3.0).unwrap().value;
    ensure((r - 1.0).abs() <= 1e-12, || format!("a = -1 ratio {r}"))
}

fn oracle_witness() -> Result<(), String> {
    let (p, depth) = (4.0, 8);
    let space = NormedSpace::scalar();
    let res = adversarial_search(&space, exp(p), depth, 500, 3).unwrap();
    let w = &res.witness;
    let f = enumerate_paley_walsh(&space, depth, w).unwrap();
    let a = FactorProcess::from_rule(&f, w).unwrap();
    let r = subordination_ratio(&f, &transform(&f, &a).unwrap(), depth, p).unwrap().value;
    ensure((r - res.best_ratio.value).abs() <= 1e-9 * r, || format!("witness re-evaluates to {r}, reported {}", res.best_ratio.value))?;
    ensure((1.0..=3.0).contains(&r), || format!("witness ratio {r} outside [1, 3]"))
}

fn oracle_poisson_count() -> Result<(), String> {
    let nu = LevyMeasureAtomic::new(vec![(vec![1.0], 1.5), (vec![-1.0], 1.5), (vec![0.5], 0.5), (vec![-0.5], 0.5)], true).unwrap();
    let (s, u) = (-0.4, 0.8);
    let lambda = 4.0 * (u - s);
    let counts: Vec<f64> = (0..20_000).map(|i| simulate_jumps_seeded(&nu, s, u, rng::mix(77, i)).unwrap().times.len() as f64).collect();
    let m = mean_with_se(&counts);
    ensure((m.value - lambda).abs() <= 4.0 * m.std_error, || format!("mean count {} vs {lambda} (se {})", m.value, m.std_error))?;
    let var = counts.iter().map(|c| (c - m.value).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    ensure((var / lambda - 1.0).abs() <= 0.05, || format!("count variance {var} vs {lambda}"))
}

fn oracle_extension() -> Result<(), String> {
    let atoms = vec![(vec![1.0], 0.5), (vec![-1.0], 0.5), (vec![2.0], 0.25), (vec![-2.0], 0.25)];
    let nu = LevyMeasureAtomic::new(atoms, true).unwrap();
    let spec = GridSpec::new(1, 64, 4.0 * std::f64::consts::PI, 1).unwrap();
    for k in [1.0, 3.0, 8.0] {
        let xi = k * std::f64::consts::PI / spec.half_period;
        let grid = GridFunction::from_real_fn(spec, |x| (xi * x[0]).cos());
        let datum = BoundaryDatum::from_grid(&grid).unwrap();
        let psi = (xi.cos() - 1.0) + 0.5 * ((2.0 * xi).cos() - 1.0);
        for (tau, x) in [(0.0, 0.3), (0.7, -1.1), (2.5, 5.0)] {
            let lib = parabolic_extension(&datum, &nu, tau, &[x]).unwrap()[0];
            let ora = (tau * psi).exp() * (xi * x).cos();
            ensure((lib - ora).abs() <= 1e-12, || format!("xi={xi} tau={tau} x={x}: {lib} vs {ora}"))?;
        }
    }
    Ok(())
}

fn oracle_dft() -> Result<(), String> {
    let spec = GridSpec::new(2, 16, 3.0, 1).unwrap();
    let plan = Spectrum::new(spec);
    let mut r = rng::stream(5, 0);
    let mut f = GridFunction::from_fn(spec, |_, out| out[0] = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let before: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
    plan.forward(&mut f);
    let after: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
    ensure((before - after).abs() <= 1e-12 * before, || format!("Parseval {before} vs {after}"))?;
    let target = 37;
    let xi = spec.frequency(target);
    let mut w = GridFunction::from_fn(spec, |x, out| {
        out[0] = Complex64::from_polar(1.0, xi.iter().zip(x).map(|(a, b)| a * b).sum());
    });
    plan.forward(&mut w);
    let root_n = (spec.points() as f64).sqrt();
    for (i, v) in w.values.iter().enumerate() {
        let want = if i == target { root_n } else { 0.0 };
        ensure((v.norm() - want).abs() <= 1e-10, || format!("plane wave bin {i}: |F| = {}", v.norm()))?;
    }
    Ok(())
}

fn oracle_scalar_variance() -> Result<(), String> {
    let horizon = 2.0;
    let ens = WienerEnsemble::new(40_000, horizon, 16, 1, 9).unwrap();
    let ws: Vec<f64> = (0..ens.n_paths).map(|i| ens.increments(i).iter().sum()).collect();
    let lib = stochastic_integral(&StepIntegrand::constant(horizon, DMatrix::from_element(1, 1, 1.0)).unwrap(), &ens).unwrap();
    for (a, b) in ws.iter().zip(&lib) {
        ensure((a - b[0]).abs() <= 1e-12, || format!("integral of 1 is {} vs W_T {a}", b[0]))?;
    }
    let sq: Vec<f64> = ws.iter().map(|w| w * w).collect();
    let m = mean_with_se(&sq);
    ensure((m.value - horizon).abs() <= 4.0 * m.std_error, || format!("E W_T^2 = {} vs {horizon}", m.value))
}

fn limit(id: u32) -> Option<Duration> {
    let secs = match id {
        1 => 60,
        4 | 8 => 120,
        6 => 180,
        7 => 300,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

fn oracles(id: u32) -> Vec<Oracle> {
    match id {
        1 => vec![("scalar formula", oracle_u_formula())],
        3 => vec![("sup on diagonal", oracle_sup_on_diagonal())],
        4 => vec![("exact l2 enumeration", oracle_l2_enumeration())],
        5 => vec![("witness re-evaluation", oracle_witness())],
        6 => vec![("poisson count", oracle_poisson_count()), ("extension of cosine", oracle_extension())],
        7 => vec![("dft parseval and plane wave", oracle_dft())],
        8 => vec![("scalar variance", oracle_scalar_variance())],
        _ => Vec::new(),
    }
}

fn verify_all(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_umdlab"))
        .args(["verify-all", "--seed", "11"])
        .env("LAB_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let settings = VerifySettings::default();
    let mut all = true;
    for id in 1..=8 {
        let start = Instant::now();
        let report = run_criterion(id, &settings);
        let elapsed = start.elapsed();
        let mut problems = Vec::new();
        let line = match &report {
            Ok(r) => {
                if !r.pass {
                    problems.push("criterion checks failed".to_string());
                }
                r.summary_line()
            }
            Err(e) => {
                problems.push(format!("error: {e}"));
                format!("criterion {id}: FAIL")
            }
        };
        if let Some(l) = limit(id) {
            if elapsed > l {
                problems.push(format!("runtime {:.1}s over {}s", elapsed.as_secs_f64(), l.as_secs()));
            }
        }
        let os = oracles(id);
        for (name, res) in &os {
            if let Err(e) = res {
                problems.push(format!("oracle {name}: {e}"));
            }
        }
        let ok = problems.is_empty();
        all &= ok;
        let line = if ok { line } else { line.replacen(": PASS", ": FAIL", 1) };
        println!("{line} [{} oracles, {:.1}s]", os.len(), elapsed.as_secs_f64());
        for p in problems {
            println!("    {p}");
        }
    }

    let start = Instant::now();
    let nine = verify_all("1").and_then(|a| verify_all("3").map(|b| (a, b)));
    match nine {
        Ok((a, b)) if a == b => println!(
            "criterion 9: PASS verify-all reports byte-identical across two runs ({} bytes, 1 vs 3 workers) [{:.1}s]",
            a.len(),
            start.elapsed().as_secs_f64()
        ),
        Ok((a, b)) => {
            all = false;
            println!("criterion 9: FAIL verify-all reports differ ({} vs {} bytes)", a.len(), b.len());
        }
        Err(e) => {
            all = false;
            println!("criterion 9: FAIL verify-all did not complete: {e}");
        }
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
