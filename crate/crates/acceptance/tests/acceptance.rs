//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coocsketch::build::{build_from_lines, BuildConfig, ShadowConfig};
use coocsketch::corpus::CorpusSchema;
use coocsketch::evaluate::{
    ndcg, run_accuracy_sweep, run_scaling_bench, spearman, NdcgConfig, Penalty, SweepConfig,
};
use coocsketch::interpret::Interpreter;
use coocsketch::oracle::{build_exact, ExactCounts};
use coocsketch::persist::{csr_file_size, load_csr, save_csr};
use coocsketch::ranking::tokens;
use coocsketch::sketch::{encode_pair, ShadowFilter};
use coocsketch::stats::{
    column_discriminatory_score, influence_score, min_max_discriminatory_tokens,
    token_discriminatory_score, ColumnStats, StatsAccumulator,
};
use coocsketch::synth::{sample_queries, sample_ranked_queries, SynthSpec};
use coocsketch::TokenKind;

const DEPTH: usize = 5;
const TOP_K: usize = 10;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "[{}] {id}. {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }

    fn info(&self, detail: String) {
        println!("       {detail}");
    }
}

struct Fixture {
    schema: CorpusSchema,
    lines: Vec<String>,
    exact: ExactCounts,
}

impl Fixture {
    fn refs(&self) -> Vec<&str> {
        self.lines.iter().map(String::as_str).collect()
    }
}

fn fixtures() -> Vec<Fixture> {
    (0..24)
        .map(|seed| {
            let (schema, lines) = SynthSpec::random(1000 + seed)
                .corpus()
                .expect("fixture corpus");
            let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
            let exact = build_exact(&refs, &schema).expect("fixture oracle");
            Fixture {
                schema,
                lines,
                exact,
            }
        })
        .collect()
}

/// Every (token, other column) combination present in the exact counts.
fn all_queries(exact: &ExactCounts) -> Vec<(String, String)> {
    let format = exact.format();
    let mut columns: Vec<&str> = exact
        .tokens()
        .into_iter()
        .filter_map(|t| format.split(t).map(|(c, _)| c))
        .collect();
    columns.sort_unstable();
    columns.dedup();
    let mut out = Vec::new();
    for t in exact.tokens() {
        let own = format.split(t).map(|(c, _)| c);
        for c in &columns {
            if Some(*c) != own {
                out.push((t.to_string(), c.to_string()));
            }
        }
    }
    out
}

fn roomy_config(pairs: usize, factor: f64) -> BuildConfig {
    BuildConfig {
        depth: DEPTH,
        width: ((pairs as f64 * factor).ceil() as usize).max(1),
        shadow: Some(ShadowConfig {
            false_positive_rate: 0.01,
            expected_items: Some(pairs as u64),
        }),
        ..BuildConfig::default()
    }
}

fn oracle_equivalence(report: &mut Report, fixtures: &[Fixture]) {
    let start = Instant::now();
    let mut lists = 0usize;
    let mut mismatches = 0usize;
    let (mut ndcg_sum, mut scored) = (0.0, 0usize);
    let cfg = NdcgConfig::new(TOP_K);
    for f in fixtures {
        let refs = f.refs();
        let out =
            build_from_lines(&refs, &f.schema, &roomy_config(f.exact.len(), 10.0)).expect("build");
        let shadow = out.shadow.expect("shadow");
        let mut acc = StatsAccumulator::new();
        for l in &refs {
            acc.push(&f.schema.parse_line(l).expect("parse"))
                .expect("stats");
        }
        let (_, dict) = acc.finish();
        let interp = Interpreter::new(&out.sketch, &shadow, &dict, &f.schema.format);
        for (token, column) in all_queries(&f.exact) {
            let want = f.exact.exact_top_k(&token, &column, TOP_K).expect("exact");
            let got = interp.sketch_top_k(&token, &column, TOP_K).expect("sketch");
            lists += 1;
            if got != want {
                mismatches += 1;
            }
            if !want.is_empty() {
                ndcg_sum += ndcg(&tokens(&want), &tokens(&got), &cfg).expect("ndcg");
                scored += 1;
            }
        }
    }
    let mean = ndcg_sum / scored as f64;
    let secs = start.elapsed().as_secs_f64();
    report.line(
        1,
        "oracle equivalence at d = 10 x distinct pairs, h = 5",
        mismatches == 0 && mean == 1.0 && secs < 60.0 && fixtures.len() >= 20,
        format!(
            "{} tables, {lists} top-{TOP_K} lists, {mismatches} mismatches, mean NDCG {mean} over {scored}, {secs:.1}s",
            fixtures.len()
        ),
    );
}

fn overestimation(report: &mut Report, fixtures: &[Fixture]) {
    let mut checked = 0usize;
    let mut violations = 0usize;
    for f in fixtures {
        let refs = f.refs();
        let out =
            build_from_lines(&refs, &f.schema, &roomy_config(f.exact.len(), 0.1)).expect("build");
        for (key, n) in f.exact.pairs() {
            checked += 1;
            if u64::from(out.sketch.query(key)) < n {
                violations += 1;
            }
        }
    }
    report.line(
        2,
        "no underestimates at d = distinct pairs / 10",
        violations == 0,
        format!("{checked} pairs checked, {violations} violations"),
    );
}

fn accuracy_and_space(report: &mut Report) {
    let start = Instant::now();
    let (schema, lines) = SynthSpec::mixed(100_000, 42).corpus().expect("corpus");
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let exact = build_exact(&refs, &schema).expect("oracle");
    let pairs = exact.len();
    let queries = sample_ranked_queries(&exact, 10, TOP_K, 42);
    let factors = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let widths: Vec<usize> = factors
        .iter()
        .map(|f| ((f * pairs as f64).ceil() as usize).max(1))
        .collect();
    let config = SweepConfig {
        dataset: "mixed-100k".into(),
        ..SweepConfig::default()
    };
    let results = run_accuracy_sweep(&refs, &schema, &widths, &queries, &config).expect("sweep");
    report.info(format!(
        "mixed corpus: {} rows, {pairs} distinct pairs, {} rank-defined queries, sweep {:.1}s",
        lines.len(),
        queries.len(),
        start.elapsed().as_secs_f64()
    ));
    for (f, r) in factors.iter().zip(&results) {
        report.info(format!(
            "d = {f:>5} x P = {:>7}: NDCG {:.4}, CSR {:>8} B ({:.2} B/pair), sparsity {:.2}%",
            r.width,
            r.mean_ndcg,
            r.sparse_size_bytes,
            r.sparse_size_bytes as f64 / pairs as f64,
            r.sparsity_pct
        ));
    }

    let trend_idx = [0usize, 3, 6, 9];
    let xs: Vec<f64> = trend_idx.iter().map(|&i| widths[i] as f64).collect();
    let ys: Vec<f64> = trend_idx.iter().map(|&i| results[i].mean_ndcg).collect();
    let rho = spearman(&xs, &ys);
    let top = results[9].mean_ndcg;
    report.line(
        3,
        "accuracy rises with width",
        (5e4..=2e5).contains(&(pairs as f64)) && queries.len() == 10 && rho > 0.0 && top >= 0.95,
        format!(
            "Spearman rho {rho:.3} over d in {{0.01, 0.1, 1, 10}} x P; NDCG at 10 x P = {top:.4}"
        ),
    );

    let budget = 16 * pairs / 5;
    match results.iter().position(|r| r.mean_ndcg >= 0.95) {
        Some(i) => {
            let r = &results[i];
            report.line(
                4,
                "CSR size <= 1/5 of a 16 B/pair dictionary at the smallest d with NDCG >= 0.95",
                r.sparse_size_bytes <= budget,
                format!(
                    "d = {} x P: CSR {} B vs budget {budget} B (ratio {:.2}x of dictionary), sparsity {:.2}%",
                    factors[i],
                    r.sparse_size_bytes,
                    r.sparse_size_bytes as f64 / (16 * pairs) as f64,
                    r.sparsity_pct
                ),
            );
        }
        None => report.line(
            4,
            "CSR size at NDCG >= 0.95",
            false,
            "no width reached NDCG 0.95".into(),
        ),
    }

    let uniform = sample_queries(&exact, 10, 42);
    let u = run_accuracy_sweep(
        &refs,
        &schema,
        &[widths[3], widths[6], widths[9]],
        &uniform,
        &config,
    )
    .expect("uniform sweep");
    report.info(format!(
        "uniformly sampled queries (ties included): NDCG {:.4} / {:.4} / {:.4} at d = 0.1 / 1 / 10 x P",
        u[0].mean_ndcg, u[1].mean_ndcg, u[2].mean_ndcg
    ));
}

fn parallel_build(report: &mut Report) {
    let lines = SynthSpec::mixed(1_000_000, 9)
        .fast_corpus()
        .expect("corpus");
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let schema = CorpusSchema::new(Default::default(), "ID");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows =
        run_scaling_bench(&refs, &schema, &[1, 2, 4, 8], DEPTH, 1 << 20, 0, 1).expect("bench");
    for r in &rows {
        report.info(format!(
            "{} threads: {:.0} ms, speedup {:.2}x, CSR {} B, identical {}",
            r.threads, r.build_ms, r.speedup, r.csr_bytes, r.identical
        ));
    }
    let identical = rows.iter().all(|r| r.identical);
    let speedup4 = rows[2].speedup;
    report.line(
        5,
        "1/2/4/8-thread builds byte-identical; speedup at 4 threads > 1.5x",
        identical && speedup4 > 1.5,
        format!(
            "{} rows, identical: {identical}, speedup at 4 threads {speedup4:.2}x on {cores} available core(s)",
            lines.len()
        ),
    );
}

fn column(name: &str, values: &[Option<&str>]) -> ColumnStats {
    let mut s = ColumnStats::new(name);
    for v in values {
        match v {
            Some(v) => s.record(v, TokenKind::Internal),
            None => s.record("EMT", TokenKind::Empty),
        }
    }
    s
}

fn scores(report: &mut Report, fixtures: &[Fixture]) {
    let mut problems = Vec::new();
    let mut check = |what: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-12 {
            problems.push(format!("{what}: {got} != {want}"));
        }
    };
    let n = 8.0;
    let full = column(
        "A",
        &[
            Some("x"),
            Some("y"),
            Some("z"),
            Some("w"),
            Some("u"),
            Some("v"),
            Some("s"),
            Some("t"),
        ],
    );
    let constant = column("B", &[Some("x"); 8]);
    let empty = column("C", &[None; 8]);
    let mixed = column(
        "D",
        &[
            Some("x"),
            Some("x"),
            Some("y"),
            None,
            Some("z"),
            Some("x"),
            None,
            Some("x"),
        ],
    );
    check("influence, no NULLs", influence_score(&full).unwrap(), 1.0);
    check("influence, all NULL", influence_score(&empty).unwrap(), 0.0);
    check(
        "influence, 2 of 8 NULL",
        influence_score(&mixed).unwrap(),
        0.75,
    );
    check(
        "discriminatory, all distinct",
        column_discriminatory_score(&full).unwrap(),
        1.0,
    );
    check(
        "discriminatory, one value",
        column_discriminatory_score(&constant).unwrap(),
        1.0 / n,
    );
    check(
        "discriminatory, 3 values of 8",
        column_discriminatory_score(&mixed).unwrap(),
        3.0 / n,
    );
    check(
        "token score, singleton",
        token_discriminatory_score(1, &full).unwrap(),
        (n - 1.0) / n,
    );
    check(
        "token score, whole column",
        token_discriminatory_score(8, &constant).unwrap(),
        0.0,
    );
    check(
        "token score, 4 of 8",
        token_discriminatory_score(4, &mixed).unwrap(),
        0.5,
    );

    let mut columns_checked = 0;
    for f in fixtures {
        let mut acc = StatsAccumulator::new();
        for l in f.refs() {
            acc.push(&f.schema.parse_line(l).unwrap()).unwrap();
        }
        for s in acc.finish().0 {
            let Ok((min, max)) = min_max_discriminatory_tokens(&s) else {
                continue;
            };
            columns_checked += 1;
            let hi = s.per_token_occurrences.values().max().copied().unwrap();
            let lo = s.per_token_occurrences.values().min().copied().unwrap();
            let all: Vec<f64> = s
                .per_token_occurrences
                .values()
                .map(|&c| token_discriminatory_score(c, &s).unwrap())
                .collect();
            let ok = min.occurrences == hi
                && max.occurrences == lo
                && all.iter().all(|&x| x >= min.score && x <= max.score);
            if !ok {
                problems.push(format!("argmin/argmax broken on column {}", s.column));
            }
        }
    }
    report.line(
        6,
        "influence and discriminatory scores",
        problems.is_empty(),
        if problems.is_empty() {
            format!("9 boundary values exact; argmin/argmax relation holds on {columns_checked} columns")
        } else {
            problems.join("; ")
        },
    );
}

fn bloom(report: &mut Report) {
    let n = 100_000u64;
    let mut filter = ShadowFilter::with_capacity(n, 0.01, 0).expect("filter");
    let mut key = Vec::new();
    for i in 0..n {
        encode_pair(&mut key, &format!("A!!v{i}"), &format!("B!!w{}", i * 31));
        filter.insert_bytes(&key);
    }
    let mut false_negatives = 0;
    for i in 0..n {
        encode_pair(&mut key, &format!("A!!v{i}"), &format!("B!!w{}", i * 31));
        false_negatives += usize::from(!filter.contains_bytes(&key));
    }
    let mut false_positives = 0;
    for i in 0..n {
        encode_pair(&mut key, &format!("A!!absent{i}"), &format!("C!!x{i}"));
        false_positives += usize::from(filter.contains_bytes(&key));
    }
    let rate = false_positives as f64 / n as f64;
    report.line(
        7,
        "shadow filter: no false negatives, FPR <= 2 x 1%",
        false_negatives == 0 && rate <= 0.02,
        format!(
            "{false_negatives} false negatives over {n}; FPR {:.3}% over {n} probes (m = {}, k = {})",
            100.0 * rate,
            filter.bit_len(),
            filter.hash_count()
        ),
    );
}

/// Straight-line DCG, kept apart from the library implementation.
fn reference_ndcg(baseline: &[&str], candidate: &[&str], k: usize, penalize: bool) -> f64 {
    let gain = |list: &[&str]| -> f64 {
        let mut total = 0.0;
        for (i, x) in list.iter().take(k).enumerate() {
            if let Some(j) = baseline.iter().take(k).position(|b| b == x) {
                let rel = (k - j) as f64;
                let p = if penalize {
                    1.0 / (1.0 + (i as f64 - j as f64).abs())
                } else {
                    1.0
                };
                total += rel * p / (2.0 + i as f64).log2();
            }
        }
        total
    };
    gain(candidate) / gain(baseline)
}

fn ndcg_suite(report: &mut Report) {
    let mut problems = Vec::new();
    let c3 = NdcgConfig::new(3);
    let abc = ["a", "b", "c"];
    let cases: [(&str, f64, f64); 6] = [
        ("identical", ndcg(&abc, &abc, &c3).unwrap(), 1.0),
        ("disjoint", ndcg(&abc, &["x", "y", "z"], &c3).unwrap(), 0.0),
        (
            "swap, penalized",
            ndcg(&abc, &["b", "a", "c"], &c3).unwrap(),
            0.513_747_754_776_790_4,
        ),
        (
            "swap, unpenalized",
            ndcg(
                &abc,
                &["b", "a", "c"],
                &NdcgConfig {
                    k: 3,
                    penalty: Penalty::None,
                },
            )
            .unwrap(),
            0.922_494_511_676_598_6,
        ),
        (
            "swap, reference DCG",
            ndcg(&abc, &["b", "a", "c"], &c3).unwrap(),
            reference_ndcg(&abc, &["b", "a", "c"], 3, true),
        ),
        (
            "tail swap, reference DCG",
            ndcg(
                &["a", "b", "c", "d", "e"],
                &["a", "b", "c", "e", "d"],
                &NdcgConfig::new(5),
            )
            .unwrap(),
            reference_ndcg(
                &["a", "b", "c", "d", "e"],
                &["a", "b", "c", "e", "d"],
                5,
                true,
            ),
        ),
    ];
    for (name, got, want) in cases {
        if (got - want).abs() > 1e-12 {
            problems.push(format!("{name}: {got} vs {want}"));
        }
    }
    report.line(
        8,
        "NDCG unit suite to 1e-12",
        problems.is_empty(),
        if problems.is_empty() {
            "6 cases agree".into()
        } else {
            problems.join("; ")
        },
    );
}

fn round_trip(report: &mut Report, fixtures: &[Fixture]) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0usize;
    let mut rejected_ok = 0usize;
    let mut damaged = 0usize;
    let mut key = Vec::new();
    for f in fixtures {
        let out = build_from_lines(&f.refs(), &f.schema, &roomy_config(f.exact.len(), 0.5))
            .expect("build");
        let bytes = save_csr(&out.sketch);
        assert_eq!(
            bytes.len(),
            csr_file_size(out.sketch.depth(), out.sketch.nnz())
        );
        let loaded = load_csr(&bytes).expect("load");
        let known: Vec<_> = f.exact.pairs().map(|(k, _)| k.clone()).collect();
        for _ in 0..1000 {
            if rng.random_bool(0.5) && !known.is_empty() {
                key = known[rng.random_range(0..known.len())].to_bytes();
            } else {
                let a: u32 = rng.random();
                encode_pair(&mut key, &format!("X!!{a}"), &format!("Y!!{}", a ^ 0x5555));
            }
            if out.sketch.query_bytes(&key) != loaded.query_bytes(&key) {
                mismatches += 1;
            }
        }

        let mut variants: Vec<Vec<u8>> = Vec::new();
        variants.push(bytes[..bytes.len() - 1].to_vec());
        variants.push(bytes[..bytes.len() / 2].to_vec());
        let mut extra = bytes.clone();
        extra.push(0);
        variants.push(extra);
        let mut magic = bytes.clone();
        magic[0] ^= 0xFF;
        variants.push(magic);
        let mut version = bytes.clone();
        version[8] = 2;
        variants.push(version);
        let mut depth = bytes.clone();
        depth[12] = depth[12].wrapping_add(1);
        variants.push(depth);
        for v in variants {
            damaged += 1;
            rejected_ok += usize::from(load_csr(&v).is_err());
        }
    }
    report.line(
        9,
        "CSR round trip and damage rejection",
        mismatches == 0 && rejected_ok == damaged,
        format!(
            "{} fixtures x 1000 keys, {mismatches} mismatches; {rejected_ok}/{damaged} damaged files rejected",
            fixtures.len()
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let fixtures = fixtures();
    let distinct: HashSet<usize> = fixtures.iter().map(|f| f.exact.len()).collect();
    report.info(format!(
        "{} random fixtures, distinct-pair counts {}..={}",
        fixtures.len(),
        distinct.iter().min().unwrap(),
        distinct.iter().max().unwrap()
    ));
    oracle_equivalence(&mut report, &fixtures);
    overestimation(&mut report, &fixtures);
    accuracy_and_space(&mut report);
    parallel_build(&mut report);
    scores(&mut report, &fixtures);
    bloom(&mut report);
    ndcg_suite(&mut report);
    round_trip(&mut report, &fixtures);
    if report.failures == 0 {
        println!("all acceptance criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{} acceptance criteria fail", report.failures);
        ExitCode::FAILURE
    }
}
