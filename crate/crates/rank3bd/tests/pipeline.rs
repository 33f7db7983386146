//! End-to-end flows through the public API: files in, invariants out.

use rank3bd::bratteli::{VertexId, WeightedBratteli};
use rank3bd::cohomology::{is_cocycle, sample_cocycles, verify_reduction};
use rank3bd::examples;
use rank3bd::kgraph::{tower_from_path, RankThreeGraph};
use rank3bd::ktheory::{push_a, reach, unit_class, KZeroClass};
use rank3bd::traces::{check_graph_trace, k0_pairing, lift_trace, restrict_trace, solve_traces, Normalization};
use rank3bd::Error;

#[test]
fn json_round_trip_preserves_the_diagram() {
    for (name, e) in examples::all() {
        let back = WeightedBratteli::from_json(&e.to_json()).unwrap();
        assert_eq!(back.to_json(), e.to_json(), "{name}");
        assert!(back.validate().is_empty(), "{name}");
    }
}

#[test]
fn file_errors_are_typed() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert!(matches!(WeightedBratteli::from_path(&missing), Err(Error::Io(_))));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"levels": [[{"name": "a", "weight": 1}]], "edges": [{"from": "b", "to": "a"}]}"#).unwrap();
    assert!(matches!(WeightedBratteli::from_path(&bad), Err(Error::Parse(_))));
}

#[test]
fn stationary_extension_is_consistent() {
    let e = examples::example3();
    let long = reach(&e, 9).unwrap().into_owned();
    let short = reach(&e, 5).unwrap().into_owned();
    assert_eq!(long.truncated(5).to_json(), short.to_json());
    assert!(long.validate().is_empty());
}

#[test]
fn traces_lift_to_graph_traces_on_lambda() {
    for (name, e) in examples::all() {
        let ext = reach(&e, 3).unwrap().into_owned();
        let sol = solve_traces(&ext, 3, Normalization::Unit).unwrap();
        let table = RankThreeGraph::new(ext.clone()).unwrap().truncate([1, 1, 1], 3).unwrap();
        let g = lift_trace(&ext, &table, &sol.particular).unwrap();
        if sol.particular.values.iter().flatten().all(|x| *x >= num_traits::Zero::zero()) {
            assert_eq!(check_graph_trace(&table.graph, &g), Ok(()), "{name}");
        }
        assert_eq!(restrict_trace(&ext, &table, &g), sol.particular, "{name}");
        // The corner unit pairs to one at every level.
        for n in 1..=3 {
            let p = k0_pairing(&ext, &sol.particular, &unit_class(&ext, n)).unwrap();
            assert!(p.b == num_traits::Zero::zero(), "{name}");
            if n == 1 {
                assert_eq!(p.a, rank3bd::arith::int(1), "{name}");
            }
        }
    }
}

#[test]
fn unit_class_pushes_to_parent_counts() {
    // Each edge carries (w(r), 0) to (w(s), 0), so a vertex collects one
    // copy of its own weight per parent.
    for (name, e) in examples::all() {
        let ext = reach(&e, 5).unwrap().into_owned();
        for n in 1..5 {
            let pushed = push_a(&ext, &unit_class(&ext, n), n + 1).unwrap();
            for s in ext.level_ids(n + 1) {
                let want = (ext.parents(s).len() as u64 * ext.weight(s)).into();
                assert_eq!(pushed.coords[s.index], (want, 0.into()), "{name} level {n}");
            }
        }
    }
}

#[test]
fn tower_cocycles_from_a_non_default_path() {
    let e = reach(&examples::example3(), 3).unwrap().into_owned();
    let path: Vec<VertexId> = ["bot1", "top2", "bot3"].iter().map(|n| e.find(n).unwrap()).collect();
    let t = tower_from_path(&e, &path, [1, 1, 2]).unwrap();
    t.verify_properties().unwrap();
    let s = sample_cocycles(t.graph(), 6, 10, 3).unwrap();
    for c in &s.cocycles {
        assert_eq!(is_cocycle(t.graph(), c), Ok(()));
        assert!(verify_reduction(&t, c).unwrap().holds());
    }
}

#[test]
fn classes_parse_against_vertex_names() {
    let e = examples::example3();
    let x = KZeroClass::parse(&e, "k0@2: top2=(2,-1); bot2=(0,3)").unwrap();
    assert_eq!(KZeroClass::parse(&e, &x.render(&e)).unwrap(), x);
    assert!(matches!(KZeroClass::parse(&e, "k0@2: v1=(1,0)"), Err(Error::Parse(_))));
}
