#![allow(dead_code, clippy::approx_constant)]

use std::path::Path;

use glassbox_qe::indicators::*;
use glassbox_qe::sim::*;
use glassbox_qe::stats::*;
use glassbox_qe::trace::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} (tol {tol:e})"))
    }
}

pub fn steps_trace(lps: &[f64]) -> DecodingTrace {
    DecodingTrace {
        segment_id: "s".into(),
        source_tokens: vec!["x".into(); lps.len()],
        hyp_tokens: (0..lps.len()).map(|i| format!("y{i}")).collect(),
        steps: lps.iter().map(|&lp| TokenDist::from_logprob(lp)).collect(),
        attention: None,
        passes: None,
        encoder_state_mean: None,
    }
}

pub fn pass_set(tps: &[f64]) -> StochasticPassSet {
    StochasticPassSet {
        n_passes: tps.len(),
        dropout_rate: 0.3,
        seed: 0,
        passes: tps
            .iter()
            .map(|&v| StochasticPass {
                score_lp: Some(vec![v]),
                ..StochasticPass::default()
            })
            .collect(),
    }
}

fn generated(hyps: &[&[&str]]) -> StochasticPassSet {
    StochasticPassSet {
        n_passes: hyps.len(),
        dropout_rate: 0.3,
        seed: 0,
        passes: hyps
            .iter()
            .map(|h| StochasticPass {
                gen_tokens: Some(h.iter().map(|s| s.to_string()).collect()),
                gen_lp: Some(vec![-0.1; h.len()]),
                ..StochasticPass::default()
            })
            .collect(),
    }
}

fn attention(rows: &[Vec<f64>]) -> AttentionTensor {
    AttentionTensor::from_nested(vec![vec![rows.to_vec()]], false).unwrap()
}

/// The arithmetic and reference examples of every formula, through the
/// public API.
pub fn formula_oracles() -> Check {
    let ln4 = 4f64.ln();
    let mut n = 0;
    let mut check = |what: &str, got: f64, want: f64, tol: f64| {
        n += 1;
        close(what, got, want, tol)
    };
    check("tp all ones", tp(&steps_trace(&[0.0, 0.0])).unwrap(), 0.0, 1e-9)?;
    check("tp", tp(&steps_trace(&[-0.2, -0.4, -0.6])).unwrap(), -0.4, 1e-9)?;

    let mut t = steps_trace(&[-ln4]);
    t.steps[0].full_probs = Some(vec![0.25; 4]);
    check("entropy uniform", softmax_entropy(&t).unwrap(), ln4, 1e-6)?;
    let mut t = steps_trace(&[0.0, -ln4]);
    t.steps[0].full_probs = Some(vec![1.0, 0.0, 0.0, 0.0]);
    t.steps[1].full_probs = Some(vec![0.25; 4]);
    check("entropy mean", softmax_entropy(&t).unwrap(), 0.693147, 1e-6)?;

    check("sent-std const", sent_std(&steps_trace(&[-1.0; 3])).unwrap(), 0.0, 1e-9)?;
    check("sent-std 0.1/0.9", sent_std(&steps_trace(&[0.1f64.ln(), 0.9f64.ln()])).unwrap(), 1.098612, 1e-6)?;
    check("sent-std", sent_std(&steps_trace(&[-0.2, -0.4, -0.6])).unwrap(), 0.163299, 1e-6)?;

    check("d-tp one pass", d_tp(&pass_set(&[-0.7])).unwrap(), -0.7, 1e-9)?;
    check("d-tp", d_tp(&pass_set(&[-0.4, -0.6])).unwrap(), -0.5, 1e-9)?;
    check("d-var identical", d_var(&pass_set(&[-0.3; 4])).unwrap(), 0.0, 1e-9)?;
    check("d-var", d_var(&pass_set(&[-0.4, -0.6])).unwrap(), 0.01, 1e-9)?;
    check("d-var shift", d_var(&pass_set(&[2.6, 2.4])).unwrap(), 0.01, 1e-9)?;
    // D-TP = -0.5 and D-Var = 0.25 from TPs {0, -1}.
    check("d-combo", d_combo(&pass_set(&[0.0, -1.0])).unwrap(), 3.0, 1e-9)?;
    if !matches!(d_combo(&pass_set(&[-0.2; 3])), Err(glassbox_qe::Error::DegenerateVariance(_))) {
        return Err("identical passes must be degenerate for D-Combo".into());
    }

    check("meteor disjoint", meteor_lite(&["a", "b"], &["c", "d"]), 0.0, 1e-9)?;
    check("meteor identical", meteor_lite(&["a", "b", "c"], &["a", "b", "c"]), 0.981481, 1e-6)?;
    check("meteor swapped", meteor_lite(&["b", "a"], &["a", "b"]), 0.5, 1e-9)?;
    let abc: &[&str] = &["a", "b", "c"];
    let same = generated(&[abc; 4]);
    check("lex-sim identical", d_lex_sim(&same).unwrap(), 0.981481, 1e-6)?;
    check("lex-sim disjoint", d_lex_sim(&generated(&[&["a"], &["b"], &["c"]])).unwrap(), 0.0, 1e-9)?;
    let pair = generated(&[&["a", "b", "c"], &["b", "a"]]);
    let sym = 0.5 * (meteor_lite(&["a", "b", "c"], &["b", "a"]) + meteor_lite(&["b", "a"], &["a", "b", "c"]));
    check("lex-sim pair", d_lex_sim(&pair).unwrap(), sym, 1e-12)?;

    check("tempered logits", tempered_max_logprob(&[2.0, 0.0], 2.0), -0.313262, 1e-6)?;
    check("tempered identity", tempered_max_logprob(&[1.0, 3.0, 0.5], 1.0), glassbox_qe::numeric::log_softmax(&[1.0, 3.0, 0.5])[1], 1e-12)?;
    check("tempered limit", tempered_max_logprob(&[2.0, 0.0, 1.0], 1e9), (1f64 / 3.0).ln(), 1e-6)?;

    let uniform = attention(&[vec![0.25; 4], vec![0.25; 4]]);
    check("att-ent uniform", att_ent(&uniform, 0, 0, EosPolicy::Include).unwrap(), ln4, 1e-9)?;
    let one_hot = attention(&[vec![1.0, 0.0, 0.0, 0.0]]);
    check("att-ent one-hot", att_ent(&one_hot, 0, 0, EosPolicy::Include).unwrap(), 0.0, 1e-9)?;
    let half = attention(&[vec![0.5, 0.5, 0.0, 0.0]]);
    check("att-ent half", att_ent(&half, 0, 0, EosPolicy::Include).unwrap(), 0.693147, 1e-6)?;
    check("aw-min singleton", aw_ent_min(&half, EosPolicy::Include).unwrap(), 0.693147, 1e-6)?;
    check("aw-avg uniform", aw_ent_avg(&uniform, EosPolicy::Include).unwrap(), ln4, 1e-9)?;
    let two = AttentionTensor::from_nested(
        vec![vec![vec![vec![0.5, 0.5, 0.0, 0.0]], vec![vec![0.25; 4]]]],
        false,
    )
    .unwrap();
    check("aw-avg two heads", aw_ent_avg(&two, EosPolicy::Include).unwrap(), 0.5 * (2f64.ln() + ln4), 1e-9)?;
    check("aw-min two heads", aw_ent_min(&two, EosPolicy::Include).unwrap(), 2f64.ln(), 1e-9)?;

    check("pearson 2x", pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0, 1e-9)?;
    check("pearson -x", pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(), -1.0, 1e-9)?;
    check("pearson", pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, 1e-9)?;

    let w = williams_test(0.4, 0.5, 0.5, 50).unwrap();
    check("williams tie t", w.t, 0.0, 1e-9)?;
    check("williams tie p", w.p, 1.0, 1e-6)?;
    let a = williams_test(0.3, 0.7, 0.5, 100).unwrap();
    let b = williams_test(0.3, 0.5, 0.7, 100).unwrap();
    check("williams antisymmetry", a.t, -b.t, 1e-9)?;
    check("williams p symmetry", a.p, b.p, 1e-6)?;
    check("williams t", a.t, 2.392_782_203_355_118, 1e-6)?;
    check("williams p", a.p, 0.018_646_785_771_320_99, 1e-6)?;
    let s = students_t(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
    check("t-test equal t", s.t, 0.0, 1e-9)?;
    check("t-test equal p", s.p, 1.0, 1e-6)?;
    let x = [0.3, 1.2, -0.4, 0.8];
    let y = [1.1, 0.2, 2.4, 1.9, 0.7];
    let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<_>>();
    let (p1, p2) = (students_t(&x, &y).unwrap(), students_t(&neg(&x), &neg(&y)).unwrap());
    check("t-test negation |t|", p1.t.abs(), p2.t.abs(), 1e-9)?;
    check("t-test negation p", p1.p, p2.p, 1e-6)?;

    let z = z_standardize(&[
        Annotation::new("a", "1", 50.0),
        Annotation::new("a", "2", 60.0),
        Annotation::new("a", "3", 70.0),
    ])
    .unwrap();
    check("z low", z[0].score, -1.224745, 1e-6)?;
    check("z mid", z[1].score, 0.0, 1e-9)?;
    check("z high", z[2].score, 1.224745, 1e-6)?;
    let agg = aggregate_da(&[
        Annotation::new("a", "s", 0.2),
        Annotation::new("b", "s", 0.4),
        Annotation::new("c", "s", 0.9),
        Annotation::new("a", "t", -1.0),
        Annotation::new("b", "t", 1.0),
    ]);
    check("aggregate", agg[0].1, 0.5, 1e-9)?;
    check("aggregate cancels", agg[1].1, 0.0, 1e-9)?;
    let qc = [
        (qc_range_filter(&[60.0, 62.0, 65.0], QC_RANGE_THRESHOLD), QcVerdict::Accept),
        (qc_range_filter(&[10.0, 50.0], QC_RANGE_THRESHOLD), QcVerdict::Flag),
        (qc_range_filter(&[10.0, 40.0], QC_RANGE_THRESHOLD), QcVerdict::Accept),
    ];
    if qc.iter().any(|(got, want)| got != want) {
        return Err(format!("qc verdicts {qc:?}"));
    }
    let (avg, sd) = annotator_consistency(&[vec![50.0, 60.0], vec![70.0, 90.0]]).unwrap();
    check("consistency avg", avg, 15.0, 1e-9)?;
    check("consistency std", sd, 5.0, 1e-9)?;

    // Sharpening a two-token column [0.7, 0.3] by two: softmax(2 ln p).
    let h1 = glassbox_qe::numeric::entropy(&[0.7, 0.3]);
    let sharp = glassbox_qe::numeric::softmax(&[2.0 * 0.7f64.ln(), 2.0 * 0.3f64.ln()]);
    check("entropy gamma 1", h1, 0.610864, 1e-6)?;
    check("entropy gamma 2", glassbox_qe::numeric::entropy(&sharp), 0.431577, 1e-6)?;

    let truth = build_truth(&SimConfig::default()).unwrap();
    let source = [5, 6, 7];
    let reference = greedy(&truth, &source).unwrap().tokens;
    check("quality fixed point", true_quality(&truth, &source, &reference).unwrap(), 0.981481, 1e-6)?;
    Ok(format!("{n} examples"))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = rng.random_range(0.1..100.0);
    let shift = rng.random_range(-50.0..50.0);
    (0..n).map(|_| shift + scale * rng.random_range(-1.0..1.0)).collect()
}

fn two_pass_mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (mean, x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

fn two_pass_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, vx) = two_pass_mean_var(x);
    let (my, vy) = two_pass_mean_var(y);
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    cov / (vx * vy).sqrt()
}

/// Streaming statistics against two-pass textbook versions on 1000 random
/// vectors of length 100.
pub fn naive_comparisons() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let x = random_vec(&mut rng, 100);
        let y: Vec<f64> = x.iter().map(|v| rng.random_range(-1.0..1.0) * 30.0 + 0.2 * v).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        let dr = (r - two_pass_pearson(&x, &y)).abs();

        let (_, var) = two_pass_mean_var(&x);
        let dv = (d_var(&pass_set(&x)).map_err(|e| e.to_string())? - var).abs() / var.max(1.0);

        let anns: Vec<Annotation> = x
            .iter()
            .enumerate()
            .map(|(i, s)| Annotation::new(format!("a{}", i % 2), i.to_string(), *s))
            .collect();
        let z = z_standardize(&anns).map_err(|e| e.to_string())?;
        let mut dz: f64 = 0.0;
        for k in 0..2 {
            let own: Vec<f64> = x.iter().skip(k).step_by(2).copied().collect();
            let (m, v) = two_pass_mean_var(&own);
            for (j, s) in own.iter().enumerate() {
                dz = dz.max((z[k + 2 * j].score - (s - m) / v.sqrt()).abs());
            }
        }
        let d = dr.max(dv).max(dz);
        worst = worst.max(d);
        if d > 1e-12 {
            return Err(format!("case {case}: pearson {dr:e}, d_var {dv:e}, z {dz:e}"));
        }
    }
    Ok(format!("worst difference {worst:e}"))
}

fn read_grid(name: &str) -> Vec<Vec<String>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn nums(s: &str) -> Vec<f64> {
    s.split(',').map(num).collect()
}

/// Williams and Student's t against the high-precision reference tables.
pub fn reference_grids() -> Check {
    let williams = read_grid("williams_grid.tsv");
    for row in &williams {
        let n = row[3].parse().unwrap();
        let got = williams_test(num(&row[0]), num(&row[1]), num(&row[2]), n).map_err(|e| e.to_string())?;
        close(&format!("williams {row:?} t"), got.t, num(&row[4]), 1e-6)?;
        close(&format!("williams {row:?} p"), got.p, num(&row[5]), 1e-6)?;
    }
    let students = read_grid("students_t_grid.tsv");
    for (i, row) in students.iter().enumerate() {
        let got = students_t(&nums(&row[0]), &nums(&row[1])).map_err(|e| e.to_string())?;
        close(&format!("students_t row {i} t"), got.t, num(&row[2]), 1e-6)?;
        close(&format!("students_t row {i} p"), got.p, num(&row[3]), 1e-6)?;
    }
    Ok(format!("{} Williams and {} Student's t cases", williams.len(), students.len()))
}

/// The t distribution against the reference CDF table.
pub fn t_cdf_grid() -> Check {
    let grid = read_grid("t_cdf_grid.tsv");
    for row in &grid {
        close(&format!("t_cdf{row:?}"), t_cdf(num(&row[1]), num(&row[0])), num(&row[2]), 1e-9)?;
    }
    Ok(format!("{} points", grid.len()))
}
