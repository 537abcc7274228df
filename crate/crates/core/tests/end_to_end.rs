use coocsketch::persist::{load_csr_file, load_shadow_file, save_csr_file, save_shadow_file};
use coocsketch::synth::{sample_queries, SynthColumn, SynthSpec};
use coocsketch::{
    build_exact, build_from_lines, BuildConfig, CoocSketch, Error, Interpreter, StatsAccumulator,
};
use proptest::prelude::*;

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        rows: 1_500,
        columns: vec![
            SynthColumn::categorical("a", 12, 1.1),
            SynthColumn::following("b", 9, 0, 0.6),
            SynthColumn::categorical("c", 30, 0.9),
            SynthColumn::numeric("n", 5),
        ],
        null_rate: 0.05,
        seed,
    }
}

#[test]
fn persisted_sketch_answers_like_the_oracle() {
    let (schema, lines) = spec(11).corpus().unwrap();
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let exact = build_exact(&refs, &schema).unwrap();
    let config = BuildConfig {
        width: 16 * exact.len(),
        threads: 3,
        ..BuildConfig::default()
    };
    let out = build_from_lines(&refs, &schema, &config).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (sk, sh) = (dir.path().join("s.csr"), dir.path().join("s.bloom"));
    save_csr_file(&out.sketch, &sk).unwrap();
    save_shadow_file(out.shadow.as_ref().unwrap(), &sh).unwrap();
    let sketch = load_csr_file(&sk).unwrap();
    let shadow = load_shadow_file(&sh).unwrap();
    assert_eq!(sketch.counts(), out.sketch.counts());

    let mut acc = StatsAccumulator::new();
    for l in &refs {
        acc.push(&schema.parse_line(l).unwrap()).unwrap();
    }
    let (_, dict) = acc.finish();
    let interp = Interpreter::new(&sketch, &shadow, &dict, &schema.format);
    let queries = sample_queries(&exact, 40, 3);
    assert_eq!(queries.len(), 40);
    for q in &queries {
        assert_eq!(
            interp.sketch_top_k(&q.token, &q.column, 10).unwrap(),
            exact.exact_top_k(&q.token, &q.column, 10).unwrap(),
            "{q:?}"
        );
    }
}

#[test]
fn aggregate_without_co_occurrence_is_no_data() {
    let lines = ["ID!!1 A!!x B!!EMT", "ID!!2 A!!y B!!z"];
    let schema = coocsketch::CorpusSchema::new(Default::default(), "ID");
    let out = build_from_lines(
        &lines,
        &schema,
        &BuildConfig {
            width: 256,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    let mut acc = StatsAccumulator::new();
    for l in lines {
        acc.push(&schema.parse_line(l).unwrap()).unwrap();
    }
    let (_, dict) = acc.finish();
    let shadow = out.shadow.unwrap();
    let interp = Interpreter::new(&out.sketch, &shadow, &dict, &schema.format);
    assert!(matches!(
        interp.aggregate_stats("A!!x", "B"),
        Err(Error::NoData(_))
    ));
    assert_eq!(interp.aggregate_stats("A!!y", "B").unwrap().max.count, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Sketches of any split of the corpus merge into the whole-corpus sketch.
    #[test]
    fn shard_merge_equals_whole(seed in 0u64..1_000, cut in 0usize..1_500) {
        let (schema, lines) = spec(seed).corpus().unwrap();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let config = BuildConfig { width: 2_048, shadow: None, ..BuildConfig::default() };
        let whole = build_from_lines(&refs, &schema, &config).unwrap().sketch;
        let left = build_from_lines(&refs[..cut], &schema, &config).unwrap().sketch;
        let right = build_from_lines(&refs[cut..], &schema, &config).unwrap().sketch;
        let merged: CoocSketch = left.merge(&right).unwrap();
        prop_assert_eq!(merged.counts(), whole.counts());
        prop_assert_eq!(merged.total_insertions(), whole.total_insertions());
    }
}

#[test]
fn sweep_trends_upward_over_seeds() {
    use coocsketch::evaluate::{run_accuracy_sweep, spearman, SweepConfig};
    let factors = [0.01, 0.1, 1.0, 10.0];
    let mut sums = [0.0; 4];
    for seed in 0..10 {
        let (schema, lines) = spec(100 + seed).corpus().unwrap();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let exact = build_exact(&refs, &schema).unwrap();
        let queries = sample_queries(&exact, 10, seed);
        let widths: Vec<usize> = factors
            .iter()
            .map(|f| ((f * exact.len() as f64) as usize).max(1))
            .collect();
        let results =
            run_accuracy_sweep(&refs, &schema, &widths, &queries, &SweepConfig::default()).unwrap();
        for (s, r) in sums.iter_mut().zip(&results) {
            assert!(r.error.is_none());
            assert!((0.0..=1.0).contains(&r.mean_ndcg));
            *s += r.mean_ndcg / 10.0;
        }
    }
    assert!(spearman(&factors, &sums) > 0.0, "{sums:?}");
    assert!(sums[3] >= 0.99, "{sums:?}");
}
