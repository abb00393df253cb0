use proptest::prelude::*;
use srp_cli::record::{append_records, read_records, RunRecord, SolverPath};
use srp_cli::report::summarize;
use srp_cli::{parse_list, NumList};

fn solver() -> impl Strategy<Value = SolverPath> {
    prop_oneof![Just(SolverPath::Exact), Just(SolverPath::MilpEmit), Just(SolverPath::Anneal)]
}

fn record() -> impl Strategy<Value = RunRecord> {
    (
        ("[a-zA-Z][a-zA-Z0-9 _,\"-]{0,12}", 0usize..9, 0usize..9, proptest::option::of(any::<u64>()), 0usize..5),
        (solver(), any::<bool>(), proptest::option::of(0usize..5000), proptest::option::of(0usize..5000)),
        (0.0f64..100.0, 0.0f64..100.0, proptest::option::of(-1e6f64..1e6), any::<bool>()),
        proptest::option::of("[ -~]{1,30}"),
    )
        .prop_map(|((network, m, k, seed, trial), (solver, dispatch, variables, constraints), (pre, sol, obj, flag), error)| {
            let (objective, feasible) = match (&error, obj) {
                (Some(_), _) => (None, None),
                (None, Some(o)) => (Some(o), Some(true)),
                (None, None) => (None, if flag { Some(false) } else { None }),
            };
            let counts = solver != SolverPath::Exact && error.is_none();
            RunRecord {
                network,
                m,
                k,
                seed,
                trial,
                solver,
                dispatch,
                variables: if counts { Some(variables.unwrap_or(1)) } else { variables },
                constraints,
                preprocess_seconds: pre,
                solve_seconds: sol,
                objective,
                feasible,
                error,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_log_round_trips(first in prop::collection::vec(record(), 0..6), second in prop::collection::vec(record(), 0..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        append_records(&path, &first).unwrap();
        append_records(&path, &second).unwrap();
        let all: Vec<RunRecord> = first.iter().chain(&second).cloned().collect();
        if all.is_empty() {
            // nothing written, not even a header
            prop_assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        } else {
            prop_assert_eq!(read_records(&path).unwrap(), all);
        }
    }

    #[test]
    fn summary_counts_every_run(records in prop::collection::vec(record(), 1..20)) {
        let rows = summarize(&records);
        prop_assert_eq!(rows.iter().map(|r| r.runs).sum::<usize>(), records.len());
        prop_assert_eq!(
            rows.iter().map(|r| r.errors).sum::<usize>(),
            records.iter().filter(|r| r.error.is_some()).count()
        );
        let keys: Vec<_> = rows.iter().map(|r| (r.network.clone(), r.m, r.k, r.solver, r.dispatch)).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn list_flags_expand_ranges(a in 0usize..50, len in 0usize..10, extra in 0usize..50) {
        let text = format!("{a}-{}, {extra}", a + len);
        let mut expect: Vec<usize> = (a..=a + len).collect();
        expect.push(extra);
        prop_assert_eq!(parse_list(&text).unwrap(), expect);
    }
}

#[test]
fn inconsistent_rows_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    let bad = RunRecord {
        network: "x".into(),
        m: 1,
        k: 1,
        seed: Some(1),
        trial: 0,
        solver: SolverPath::Exact,
        dispatch: false,
        variables: None,
        constraints: None,
        preprocess_seconds: 0.0,
        solve_seconds: 0.0,
        objective: Some(3.0),
        feasible: Some(false),
        error: None,
    };
    append_records(&path, &[bad]).unwrap();
    assert!(read_records(&path).is_err());
}

#[test]
fn malformed_lists_are_rejected() {
    for bad in ["", "a", "5-2", "1,,x", "-3"] {
        assert!(bad.parse::<NumList>().is_err(), "{bad:?}");
    }
}
