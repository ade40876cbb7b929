//! Acceptance criteria. Each test prints one `PASS` or `FAIL` line, written straight to stdout
//! so it shows without `--nocapture`, and then asserts.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use glmos::config::{RunConfig, VariantConfig};
use glmos::data::{Dataset, ScalingLevel, ScalingSpec};
use glmos::eval::{cross_validate, CvOptions, CvReport};
use glmos::glm::{gradient_hessian, neg_loglik, FitOptions};
use glmos::model::{fit_model, FittedModel, Method};
use glmos::transform::{nnls, weighted_isotonic, Direction};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let line = format!("{} criterion {id:>2} {title}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Full-data fits of every configured variant of both shipped datasets.
struct Fits {
    runs: Vec<(String, VariantConfig, FittedModel)>,
}

fn fits() -> &'static Fits {
    static FITS: OnceLock<Fits> = OnceLock::new();
    FITS.get_or_init(|| {
        let mut runs = Vec::new();
        for name in ["cmc", "breast_cancer"] {
            let (cfg, ds) = common::shipped(name);
            for v in cfg.variants_or_default() {
                let m = fit_model(&ds, &cfg.variant_specs(&v), v.method, &cfg.fit.options()).unwrap();
                runs.push((name.to_string(), v, m));
            }
        }
        Fits { runs }
    })
}

fn cv(cfg: &RunConfig, ds: &Dataset, v: &VariantConfig, seed: u64) -> CvReport {
    let specs = cfg.variant_specs(v);
    let opts = CvOptions {
        folds: cfg.cv.folds,
        seed,
        stratified: cfg.cv.stratified,
        metric: cfg.cv.metric,
    };
    let fit_opts = cfg.fit.options();
    cross_validate(ds, &v.name, &opts, |d| fit_model(d, &specs, v.method, &fit_opts)).unwrap()
}

fn variant<'a>(cfg: &'a RunConfig, name: &str) -> &'a VariantConfig {
    cfg.variants.iter().find(|v| v.name == name).unwrap()
}

#[test]
fn criterion_01_gradient_and_hessian() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let eta: Vec<f64> = (0..50).map(|_| rng.random_range(-4.0..4.0)).collect();
        let y: Vec<f64> = (0..50).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
        let (g, hess) = gradient_hessian(&eta, &y);
        for i in 0..50 {
            let mut up = eta.clone();
            let mut down = eta.clone();
            up[i] += h;
            down[i] -= h;
            let fd_g = (neg_loglik(&up, &y) - neg_loglik(&down, &y)) / (2.0 * h);
            // Second derivative as the central difference of the checked first derivative.
            let fd_h = (gradient_hessian(&up, &y).0[i] - gradient_hessian(&down, &y).0[i]) / (2.0 * h);
            worst = worst.max((g[i] - fd_g).abs() / fd_g.abs()).max((hess[i] - fd_h).abs() / fd_h.abs());
        }
    }
    let t = t0.elapsed();
    report(
        1,
        "gradient/Hessian vs finite differences",
        worst < 1e-6 && t < Duration::from_secs(1),
        &format!("max relative error {worst:.2e} over 100 cases (n=50), {}", secs(t)),
    );
}

#[test]
fn criterion_02_isotonic_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for case in 0..500 {
        let c = rng.random_range(1..=8);
        let t: Vec<f64> = (0..c).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..c).map(|_| rng.random_range(0.1..3.0)).collect();
        let up = case % 2 == 0;
        let dir = if up { Direction::Increasing } else { Direction::Decreasing };
        let fast = weighted_isotonic(&t, &w, dir);
        let slow = common::isotonic_oracle(&t, &w, up);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    let t = t0.elapsed();
    report(
        2,
        "weighted isotonic vs level-set oracle",
        worst <= 1e-10 && t < Duration::from_secs(5),
        &format!("max abs difference {worst:.2e} over 500 cases (C<=8), {}", secs(t)),
    );
}

#[test]
fn criterion_03_nnls_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(m + 2..m + 12);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
        let fit = nnls(&rows, &y, &w);
        let (a0, a) = common::nnls_oracle(&rows, &y, &w);
        worst = worst.max((fit.intercept - a0).abs());
        for (x, o) in fit.coefficients.iter().zip(&a) {
            worst = worst.max((x - o).abs());
        }
    }
    let t = t0.elapsed();
    report(
        3,
        "NNLS vs exhaustive active-set enumeration",
        worst <= 1e-8 && t < Duration::from_secs(5),
        &format!("max abs difference {worst:.2e} over 200 cases (m<=6), {}", secs(t)),
    );
}

#[test]
fn criterion_04_dummy_equivalence() {
    let t0 = Instant::now();
    let (_, ds) = common::shipped("breast_cancer");
    let specs = vec![ScalingSpec::new(ScalingLevel::NominalStep); ds.p()];
    let opts = FitOptions { max_cycles: 5000, tol: 1e-15, step_halving_max: 20 };
    let g = fit_model(&ds, &specs, Method::GlmOs, &opts).unwrap();
    let d = fit_model(&ds, &specs, Method::DummyLogistic, &opts).unwrap();
    let pg = g.predict_dataset(&ds).unwrap().fitted;
    let pd = d.predict_dataset(&ds).unwrap().fitted;
    let prob_diff = pg.iter().zip(&pd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // A category whose rows all share one outcome has its likelihood optimum at infinity;
    // both fits only report how far they walked, so those contrasts are not compared.
    let mut worst = 0.0_f64;
    let mut compared = 0;
    let mut skipped = Vec::new();
    for (k, (qg, qd)) in g.quantifications.iter().zip(&d.quantifications).enumerate() {
        let col = &ds.predictors[k];
        for c in 1..qg.v.len() {
            let rows: Vec<f64> = (0..ds.n())
                .filter(|&i| qg.members[c].contains(&col.raw[i]))
                .map(|i| ds.y[i])
                .collect();
            let one_outcome = rows.iter().all(|&y| y == rows[0]);
            if one_outcome {
                skipped.push(format!("{}={}", qg.name, qg.labels[c]));
                continue;
            }
            let a = g.beta[k] * (qg.v[c] - qg.v[0]);
            let b = d.beta[k] * (qd.v[c] - qd.v[0]);
            worst = worst.max((a - b).abs());
            compared += 1;
        }
    }
    let t = t0.elapsed();
    report(
        4,
        "nominal GLM-OS vs dummy-coded logistic regression",
        prob_diff <= 1e-6 && worst <= 1e-6 && t < Duration::from_secs(10),
        &format!(
            "max probability difference {prob_diff:.2e}; max contrast difference {worst:.2e} over {compared} contrasts; \
             not compared (single-outcome categories): {}; {}",
            skipped.join(" "),
            secs(t)
        ),
    );
}

#[test]
fn criterion_05_numeric_reduction() {
    let (_, ds) = common::shipped("cmc");
    let specs = vec![ScalingSpec::new(ScalingLevel::Numeric); ds.p()];
    let opts = FitOptions { max_cycles: 5000, tol: 1e-15, step_halving_max: 20 };
    let m = fit_model(&ds, &specs, Method::GlmOs, &opts).unwrap();
    let z: Vec<Vec<f64>> = ds
        .predictors
        .iter()
        .map(|c| common::zscore(&c.raw.iter().map(|s| s.parse().unwrap()).collect::<Vec<f64>>()))
        .collect();
    let x = DMatrix::from_fn(ds.n(), ds.p() + 1, |i, j| if j == 0 { 1.0 } else { z[j - 1][i] });
    let b = common::irls_oracle(&x, &ds.y);
    let oracle: Vec<f64> = (x * b).iter().map(|&e| common::sigmoid(e)).collect();
    let got = m.predict_dataset(&ds).unwrap().fitted;
    let diff = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    report(
        5,
        "all-numeric GLM-OS vs IRLS on z-scored predictors (CMC)",
        diff <= 1e-6,
        &format!("max probability difference {diff:.2e} after {} cycles", m.cycles),
    );
}

#[test]
fn criterion_06_descent() {
    let mut worst = f64::NEG_INFINITY;
    let mut events = 0;
    let mut consistent = true;
    for (_, _, m) in &fits().runs {
        for w in m.trace.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
        events += m.events.len();
        consistent &= m.events.iter().all(|e| e.cycle >= 1 && e.cycle <= m.cycles && e.variable <= m.beta.len());
    }
    report(
        6,
        "nonincreasing negloglik trace",
        worst <= 1e-12 && consistent,
        &format!(
            "{} fits, largest per-cycle increase {worst:.2e}, {events} safeguard events logged",
            fits().runs.len()
        ),
    );
}

#[test]
fn criterion_07_standardization() {
    let mut worst_mean = 0.0_f64;
    let mut worst_var = 0.0_f64;
    let mut checked = 0;
    for (_, _, m) in fits().runs.iter().filter(|(_, v, _)| v.method == Method::GlmOs) {
        for q in &m.quantifications {
            let n = q.counts.iter().sum::<usize>() as f64;
            let mean = q.v.iter().zip(&q.counts).map(|(v, &d)| v * d as f64).sum::<f64>() / n;
            let var = q.v.iter().zip(&q.counts).map(|(v, &d)| v * v * d as f64).sum::<f64>() / n;
            worst_mean = worst_mean.max(mean.abs());
            worst_var = worst_var.max((var - 1.0).abs());
            checked += 1;
        }
    }
    report(
        7,
        "standardization identities at convergence",
        worst_mean < 1e-8 && worst_var < 1e-8,
        &format!("{checked} quantifications, max |mean| {worst_mean:.2e}, max |variance - 1| {worst_var:.2e}"),
    );
}

#[test]
fn criterion_08_monotone_outputs() {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (data, v, m) in &fits().runs {
        for q in m.quantifications.iter().filter(|q| q.spec.level.is_monotone()) {
            let up = q.v.windows(2).all(|p| p[1] >= p[0] - 1e-12);
            let down = q.v.windows(2).all(|p| p[1] <= p[0] + 1e-12);
            if !(up || down) {
                bad.push(format!("{data}/{}/{}", v.name, q.name));
            }
            checked += 1;
        }
    }
    report(
        8,
        "monotone quantifications",
        bad.is_empty() && checked > 0,
        &format!("{checked} ordinal-step/spline-monotone vectors checked, violations: {bad:?}"),
    );
}

#[test]
fn criterion_09_cmc_table() {
    let t0 = Instant::now();
    let (cfg, ds) = common::shipped("cmc");
    let lin = cv(&cfg, &ds, variant(&cfg, "Logistic regression (linear)"), cfg.cv.seed);
    let non = cv(&cfg, &ds, variant(&cfg, "GLM-OS (nonmonotone)"), cfg.cv.seed);
    let mono = cv(&cfg, &ds, variant(&cfg, "GLM-OS (monotone)"), cfg.cv.seed);
    let t = t0.elapsed();
    let checks = [
        within(lin.ape, 0.205, 0.01),
        within(non.ape, 0.181, 0.01),
        within(mono.ape, 0.181, 0.01),
        within(non.epe, 0.187, 0.015),
        within(mono.epe, 0.186, 0.015),
        within(lin.mcr, 33.1, 2.0),
        within(non.mcr, 27.9, 2.0),
        within(mono.mcr, 27.9, 2.0),
        t < Duration::from_secs(120),
    ];
    let row = |r: &CvReport| format!("APE {:.4} EPE {:.4} (SE {:.4}) MCR {:.1}", r.ape, r.epe, r.se_epe, r.mcr);
    report(
        9,
        "CMC cross-validation table",
        checks.iter().all(|c| *c),
        &format!(
            "linear: {}; nonmonotone: {}; monotone: {}; {}",
            row(&lin),
            row(&non),
            row(&mono),
            secs(t)
        ),
    );
}

#[test]
fn criterion_10_breast_cancer_table() {
    let (cfg, ds) = common::shipped("breast_cancer");
    let non_v = variant(&cfg, "GLM-OS (nonmonotone)");
    let mixed_v = variant(&cfg, "GLM-OS (mixed scaling levels)");
    let non = cv(&cfg, &ds, non_v, cfg.cv.seed);
    let mixed = cv(&cfg, &ds, mixed_v, cfg.cv.seed);
    let four = cv(&cfg, &ds, variant(&cfg, "Logistic regression (4 variables linear)"), cfg.cv.seed);
    let wins = (1..=10u64)
        .filter(|&seed| cv(&cfg, &ds, mixed_v, seed).epe <= cv(&cfg, &ds, non_v, seed).epe)
        .count();
    let checks = [
        within(non.ape, 0.156, 0.01),
        within(non.epe, 0.195, 0.02),
        within(mixed.ape, 0.156, 0.01),
        within(mixed.epe, 0.180, 0.02),
        within(mixed.mcr, 26.4, 3.0),
        within(four.ape, 0.166, 0.01),
        wins >= 7,
    ];
    report(
        10,
        "breast-cancer cross-validation table",
        checks.iter().all(|c| *c),
        &format!(
            "nonmonotone APE {:.4} EPE {:.4}; mixed APE {:.4} EPE {:.4} MCR {:.1}; 4-linear APE {:.4}; \
             mixed EPE <= nonmonotone EPE in {wins}/10 seeds",
            non.ape, non.epe, mixed.ape, mixed.epe, mixed.mcr, four.ape
        ),
    );
}

#[test]
fn criterion_11_intercepts() {
    let intercept = |data: &str, name: &str| {
        fits()
            .runs
            .iter()
            .find(|(d, v, _)| d == data && v.name == name)
            .map(|(_, _, m)| m.intercept)
            .unwrap()
    };
    let cmc_non = intercept("cmc", "GLM-OS (nonmonotone)");
    let cmc_mono = intercept("cmc", "GLM-OS (monotone)");
    let bc_mixed = intercept("breast_cancer", "GLM-OS (mixed scaling levels)");
    let checks = [within(cmc_non, 0.30, 0.05), within(cmc_mono, 0.30, 0.05), within(bc_mixed, -1.24, 0.1)];
    report(
        11,
        "fitted intercepts",
        checks.iter().all(|c| *c),
        &format!(
            "CMC nonmonotone {cmc_non:.3} and monotone {cmc_mono:.3} (target 0.30 +/- 0.05); \
             breast-cancer mixed {bc_mixed:.3} (target -1.24 +/- 0.1)"
        ),
    );
}
