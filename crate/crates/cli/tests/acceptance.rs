//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `-- --nocapture` to see them). Criteria run
//! single-threaded inside each test; use `--test-threads=1` for clean
//! per-criterion timings.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphite_cli::formats::{parse_graph_dir, SplitSpec};
use graphite_cli::synth::{generate_synthetic, synthesize_raw, SynthParams};
use graphite_core::gnn::model::{aggregation_context, RunMode};
use graphite_core::gnn::tape::{Mat, Tape};
use graphite_core::gnn::train::{loss_and_grads, loss_only, train};
use graphite_core::gnn::{gate, GnnConfig, Metric, ModelParams};
use graphite_core::graph::Graph;
use graphite_core::homophily::{
    adjusted_homophily, edge_homophily, feature_homophily, full_report, full_report_transformed,
    share_homophily,
};
use graphite_core::transform::{
    check_theorem_efficient, check_theorem_naive, evaluate_assumptions, graphite_transform,
    verify_two_hop, TransformedGraph,
};

const POPULATION: usize = 1000;

/// Samples one gate-passing graph with node count in 10..=300.
fn gated_graph(rng: &mut ChaCha8Rng) -> Graph {
    for _ in 0..100 {
        let params = SynthParams {
            num_nodes: rng.gen_range(10..=300),
            num_features: rng.gen_range(4..=60),
            features_per_node: rng.gen_range(1..=6),
            own_pool_prob: rng.gen_range(0.5..0.95),
            avg_degree: rng.gen_range(1.5..8.0),
            p_cross: rng.gen_range(0.9..0.99),
            seed: rng.gen(),
        };
        let mut draw_rng = ChaCha8Rng::seed_from_u64(params.seed);
        let graph = synthesize_raw(&params, &mut draw_rng);
        if evaluate_assumptions(&graph).is_empty() {
            return graph;
        }
    }
    panic!("population sampler failed to satisfy the assumption gate");
}

fn population(seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..POPULATION).map(|_| gated_graph(&mut rng)).collect()
}

#[test]
fn criterion_1_feature_node_theorem_suite() {
    let started = Instant::now();
    let graphs = population(101);
    let mut failures = 0usize;
    for g in &graphs {
        let report = check_theorem_efficient(g);
        let used = {
            let mut seen = std::collections::BTreeSet::new();
            for u in 0..g.num_nodes() {
                seen.extend(g.features_of(u).iter().copied());
            }
            seen.len()
        };
        let ok = report.assumptions_held
            && report.homophily_increased()
            && report.nodes_added == used
            && report.edges_added == g.feature_nnz()
            && report.bound_satisfied;
        if !ok {
            failures += 1;
            eprintln!("criterion 1 failure: {report:?}");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(failures, 0, "criterion 1: {failures} failures");
    assert!(elapsed < 60.0, "criterion 1 took {elapsed:.1} s (budget 60 s)");
    println!(
        "criterion 1: PASS — feature-node transform strictly boosts share homophily with exact \
         node/edge counts on {}/{} gate-passing graphs ({elapsed:.1} s)",
        graphs.len(),
        graphs.len()
    );
}

#[test]
fn criterion_2_naive_booster_theorem_suite() {
    let started = Instant::now();
    let graphs = population(101);
    let mut failures = 0usize;
    for g in &graphs {
        let report = check_theorem_naive(g);
        // Independent pair-enumeration oracle.
        let mut qualifying = 0usize;
        for u in 0..g.num_nodes() {
            for v in (u + 1)..g.num_nodes() {
                if g.shares_feature(u, v).unwrap() && !g.has_edge(u, v) {
                    qualifying += 1;
                }
            }
        }
        let max_pairs = g.num_nodes() * (g.num_nodes() - 1) / 2;
        let ok = report.assumptions_held
            && report.homophily_increased()
            && report.edges_added == qualifying
            && report.edges_added <= max_pairs;
        if !ok {
            failures += 1;
            eprintln!("criterion 2 failure: {report:?}");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(failures, 0, "criterion 2: {failures} failures");
    assert!(elapsed < 120.0, "criterion 2 took {elapsed:.1} s (budget 120 s)");
    println!(
        "criterion 2: PASS — naive booster strictly boosts share homophily, added edges match \
         the pair-enumeration oracle on {}/{} graphs ({elapsed:.1} s)",
        graphs.len(),
        graphs.len()
    );
}

#[test]
fn criterion_3_two_hop_witness_suite() {
    let started = Instant::now();
    let graphs = population(101);
    let mut failures = 0usize;
    for g in &graphs {
        let (tg, _) = graphite_transform(g).expect("gate-passing graphs have features");
        if !verify_two_hop(g, &tg) {
            failures += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(failures, 0, "criterion 3: {failures} failures");
    println!(
        "criterion 3: PASS — two-hop witness present for every feature-sharing pair on \
         {}/{} transforms ({elapsed:.1} s)",
        graphs.len(),
        graphs.len()
    );
}

#[test]
fn criterion_4_hand_fixture_values() {
    const TOL: f64 = 1e-12;
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/g_fig");
    let g = parse_graph_dir(&dir, None).unwrap().graph;

    let report = full_report(&g);
    assert!((report.share_hom.value().unwrap() - 0.25).abs() < TOL);
    assert!((report.feature_hom.value().unwrap() - 0.125).abs() < TOL);
    assert!((report.adjusted_hom.value().unwrap() + 1.0).abs() < TOL);

    let (tg, _) = graphite_transform(&g).unwrap();
    let after = share_homophily(&tg, tg.base().edges()).unwrap();
    assert!((after - 8.0 / 11.0).abs() < TOL);

    let naive = check_theorem_naive(&g);
    assert!((naive.hom_after.unwrap() - 0.625).abs() < TOL);

    let expect_row = |node: usize, want: [f64; 3]| {
        for (k, w) in want.into_iter().enumerate() {
            assert!(
                (tg.x_star_row(node).get(k) - w).abs() < TOL,
                "x_star[{node},{k}]"
            );
        }
    };
    expect_row(5, [1.0, 0.0, 0.5]);
    expect_row(6, [0.0, 1.0, 1.0 / 3.0]);
    expect_row(7, [0.5, 0.5, 1.0]);
    println!(
        "criterion 4: PASS — hand fixture: share 0.25 -> 8/11 (feature nodes) and 5/8 (naive), \
         feature 0.125, adjusted -1, augmented rows exact to 1e-12"
    );
}

/// Independent dense evaluation of adjusted homophily from its definition:
/// integer degree mass per class, plain indicator edge homophily.
fn adjusted_dense_oracle(g: &Graph) -> Option<f64> {
    let edges = g.edges();
    if edges.is_empty() {
        return None;
    }
    let same = edges
        .iter()
        .filter(|&&(u, v)| g.label(u) == g.label(v))
        .count();
    let h_edge = same as f64 / edges.len() as f64;
    let mut mass = vec![0usize; g.num_classes()];
    for u in 0..g.num_nodes() {
        if let Some(c) = g.label(u) {
            mass[c] += g.degree(u);
        }
    }
    let two_e = (2 * edges.len()) as f64;
    let s: f64 = mass.iter().map(|&m| (m as f64 / two_e).powi(2)).sum();
    let denom = 1.0 - s;
    if denom < 1e-12 {
        return None;
    }
    Some((h_edge - s) / denom)
}

#[test]
fn criterion_5_metric_cross_validation() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut checked_share = 0usize;
    let mut checked_adjusted = 0usize;
    for _ in 0..500 {
        let n = rng.gen_range(2..=100);
        let num_features = rng.gen_range(1..=20);
        let num_classes = rng.gen_range(1..=4);
        let mut edges = vec![(0, 1)];
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(0.08) {
                    edges.push((u, v));
                }
            }
        }
        let mut feats = Vec::new();
        for u in 0..n {
            for _ in 0..rng.gen_range(0..=4) {
                feats.push((u, rng.gen_range(0..num_features)));
            }
        }
        let labels: Vec<(usize, usize)> =
            (0..n).map(|u| (u, rng.gen_range(0..num_classes))).collect();
        let g = Graph::build(n, &edges, &feats, &labels).unwrap().0;

        // Share homophily: generalized-min path vs set-intersection oracle.
        let sparse = share_homophily(&g, g.edges()).unwrap();
        let mut indicator = 0usize;
        for &(u, v) in g.edges() {
            let a: std::collections::HashSet<_> = g.features_of(u).iter().collect();
            if g.features_of(v).iter().any(|k| a.contains(k)) {
                indicator += 1;
            }
        }
        let oracle = indicator as f64 / g.num_edges() as f64;
        assert!(
            (sparse - oracle).abs() < 1e-12,
            "share mismatch: {sparse} vs {oracle}"
        );
        checked_share += 1;

        let lib = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap();
        let oracle = adjusted_dense_oracle(&g);
        match (lib, oracle) {
            (Some(a), Some(b)) => {
                assert!((a - b).abs() < 1e-12, "adjusted mismatch: {a} vs {b}");
                checked_adjusted += 1;
            }
            (None, None) => checked_adjusted += 1,
            (a, b) => panic!("adjusted definedness mismatch: {a:?} vs {b:?}"),
        }
    }
    assert_eq!(checked_share, 500);
    assert_eq!(checked_adjusted, 500);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 5: PASS — share homophily matches the set-intersection oracle and adjusted \
         homophily matches the dense definition on 500/500 random instances ({elapsed:.1} s)"
    );
}

fn random_labeled_graph(rng: &mut ChaCha8Rng, n: usize, num_features: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(0.2) {
                edges.push((u, v));
            }
        }
    }
    let mut feats = Vec::new();
    for u in 0..n {
        for _ in 0..rng.gen_range(1..=3) {
            feats.push((u, rng.gen_range(0..num_features)));
        }
    }
    let labels: Vec<(usize, usize)> = (0..n).map(|u| (u, rng.gen_range(0..2))).collect();
    Graph::build(n, &edges, &feats, &labels).unwrap().0
}

#[test]
fn criterion_6_gradient_checks() {
    let started = Instant::now();
    let mut max_rel: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let g = random_labeled_graph(&mut rng, 20, 6);
        let (tg, _) = graphite_transform(&g).unwrap();
        let config = GnnConfig {
            num_layers: 2,
            hidden_dim: 6,
            w0: 1.0,
            wx: 0.5,
            tau: 1.0,
            dropout: 0.0,
            learning_rate: 1e-3,
            steps: 0,
            seed,
            feature_mode: Default::default(),
        };
        let mut params = ModelParams::init(
            tg.num_used_features(),
            tg.base().num_classes(),
            &config,
            &mut rng,
        );
        for tensor in params.tensors_mut() {
            for v in &mut tensor.data {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        let nodes: Vec<usize> = (0..tg.num_graph_nodes()).collect();
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(0);
        let (_, grads) = loss_and_grads(
            &tg,
            &params,
            &config,
            &nodes,
            RunMode::Eval,
            &mut dropout_rng,
        )
        .unwrap();

        let total: usize = params.tensors().iter().map(|t| t.data.len()).sum();
        for _ in 0..50 {
            let flat = rng.gen_range(0..total);
            let mut offset = flat;
            let mut tensor_index = 0;
            for (ti, t) in params.tensors().iter().enumerate() {
                if offset < t.data.len() {
                    tensor_index = ti;
                    break;
                }
                offset -= t.data.len();
            }
            let ad = grads[tensor_index].data[offset];
            let probe = |delta: f64| {
                let mut p = params.clone();
                p.tensors_mut()[tensor_index].data[offset] += delta;
                loss_only(&tg, &p, &config, &nodes).unwrap()
            };
            let fd = (probe(1e-4) - probe(-1e-4)) / 2e-4;
            let rel = (ad - fd).abs() / ad.abs().max(fd.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        max_rel < 1e-4,
        "criterion 6: max relative gradient error {max_rel}"
    );
    println!(
        "criterion 6: PASS — reverse-mode gradients match central differences, max relative \
         error {max_rel:.2e} over 5 seeds x 50 parameters ({elapsed:.1} s)"
    );
}

#[test]
fn criterion_7_sparse_dense_forward_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut max_diff: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=50);
        let g = random_labeled_graph(&mut rng, n, 8);
        let Ok((tg, _)) = graphite_transform(&g) else {
            continue;
        };
        let m = rng.gen_range(1..=6);
        let total = tg.base().num_nodes();
        let num_graph = tg.num_graph_nodes();
        let w0 = rng.gen_range(0.1..2.0);
        let wx = rng.gen_range(0.05..1.5);
        let tau = rng.gen_range(0.2..2.0);
        let h = Mat::from_vec(
            total,
            m,
            (0..total * m).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        );
        let a = Mat::from_vec(1, 2 * m, (0..2 * m).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let b = rng.gen_range(-0.5..0.5);

        // Sparse path through the tape.
        let config = GnnConfig {
            hidden_dim: m,
            w0,
            wx,
            tau,
            ..GnnConfig::default()
        };
        let mut tape = Tape::new();
        let hv = tape.leaf(h.clone());
        let av = tape.leaf(a.clone());
        let bv = tape.leaf(Mat::from_vec(1, 1, vec![b]));
        let ctx = std::rc::Rc::new(aggregation_context(&tg, &config));
        let out = tape.gated_aggregate(hv, av, bv, ctx);
        let sparse = tape.value(out).clone();

        // Dense oracle: explicit gated, degree-normalized matrix product
        // with degrees recounted from the adjacency.
        let base = tg.base();
        let mut degrees = vec![w0; total];
        for u in 0..total {
            for &v in base.neighbors(u) {
                degrees[u] += if u < num_graph && v < num_graph { 1.0 } else { wx };
            }
        }
        let mut coef = vec![vec![0.0; total]; total];
        for u in 0..total {
            coef[u][u] = w0 * gate(h.row(u), h.row(u), &a.data, b, tau) / degrees[u];
        }
        for &(u, v) in base.edges() {
            let norm = (degrees[u] * degrees[v]).sqrt();
            if v < num_graph {
                coef[u][v] = gate(h.row(u), h.row(v), &a.data, b, tau) / norm;
                coef[v][u] = gate(h.row(v), h.row(u), &a.data, b, tau) / norm;
            } else {
                let alpha = gate(h.row(u), h.row(v), &a.data, b, tau);
                coef[u][v] = wx * alpha / norm;
                coef[v][u] = wx * alpha / norm;
            }
        }
        for u in 0..total {
            for k in 0..m {
                let mut want = 0.0;
                for w in 0..total {
                    want += coef[u][w] * h.get(w, k);
                }
                max_diff = max_diff.max((sparse.get(u, k) - want).abs());
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        max_diff < 1e-10,
        "criterion 7: max sparse/dense difference {max_diff}"
    );
    println!(
        "criterion 7: PASS — gated aggregation matches the dense matrix oracle, max difference \
         {max_diff:.2e} over 100 random draws ({elapsed:.1} s)"
    );
}

#[test]
fn criterion_8_desk_scale_ablation() {
    let started = Instant::now();
    let config = GnnConfig {
        num_layers: 3,
        hidden_dim: 32,
        w0: 1.0,
        wx: 1.0,
        tau: 1.0,
        dropout: 0.2,
        learning_rate: 3e-3,
        steps: 300,
        seed: 0,
        feature_mode: Default::default(),
    };
    let mut gaps = Vec::new();
    for seed in 0..10u64 {
        let graph = generate_synthetic(&SynthParams {
            seed,
            ..SynthParams::default()
        })
        .unwrap();
        let splits = SplitSpec::generate(&graph, (0.48, 0.32, 0.20), seed)
            .unwrap()
            .to_splits();
        let run_config = GnnConfig { seed, ..config.clone() };
        let (tg, _) = graphite_transform(&graph).unwrap();
        let (_, with) = train(&tg, &splits, &run_config, Metric::Accuracy).unwrap();
        let plain = TransformedGraph::from_plain(&graph);
        let (_, without) = train(&plain, &splits, &run_config, Metric::Accuracy).unwrap();
        gaps.push(with.test_metric - without.test_metric);
    }
    gaps.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = gaps[gaps.len() / 2];
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        median >= 0.05,
        "criterion 8: median accuracy gap {median:.4} below 5 points (gaps {gaps:?})"
    );
    assert!(elapsed < 600.0, "criterion 8 took {elapsed:.1} s (budget 600 s)");
    println!(
        "criterion 8: PASS — transformation lifts median test accuracy by {:.1} points over 10 \
         seeds (gaps {:?}, {elapsed:.1} s)",
        median * 100.0,
        gaps.iter().map(|g| (g * 100.0).round()).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_9_optional_real_dataset_check() {
    let Ok(dir) = std::env::var("GRAPHITE_ACTOR_DIR") else {
        println!(
            "criterion 9: SKIPPED — set GRAPHITE_ACTOR_DIR to a converted dataset directory \
             (7600 nodes / 33544 edges / 931 features / 5 classes) to enable"
        );
        return;
    };
    let parsed = parse_graph_dir(std::path::Path::new(&dir), Some(0.0)).unwrap();
    let g = &parsed.graph;
    assert_eq!(g.num_nodes(), 7600, "node count");
    assert_eq!(g.num_edges(), 33544, "edge count");
    assert_eq!(g.num_features(), 931, "feature count");
    assert_eq!(g.num_classes(), 5, "class count");

    let adjusted = adjusted_homophily(g, g.edges(), &g.degrees())
        .unwrap()
        .expect("defined on this dataset");
    assert!(
        (adjusted - 0.0028).abs() <= 0.0005,
        "adjusted homophily {adjusted} out of 0.0028 +/- 0.0005"
    );

    let before_feature = feature_homophily(g, g.edges()).unwrap();
    let (tg, _) = graphite_transform(g).unwrap();
    let report = full_report_transformed(&tg);
    let after_feature = report.feature_hom.value().unwrap();
    let after_adjusted = report.adjusted_hom.value().unwrap();
    assert!(
        after_feature > before_feature,
        "feature homophily must strictly increase: {before_feature} -> {after_feature}"
    );
    assert!(
        after_adjusted > adjusted,
        "adjusted homophily must strictly increase: {adjusted} -> {after_adjusted}"
    );
    println!(
        "criterion 9: PASS — dataset counts reproduced exactly; adjusted homophily {adjusted:.4}; \
         after the transform feature homophily {before_feature:.4} -> {after_feature:.4} and \
         adjusted {adjusted:.4} -> {after_adjusted:.4}"
    );
}

#[test]
fn criterion_10_full_scale_reproduction_out_of_scope() {
    // Absolute benchmark accuracies and the cross-architecture comparison
    // need GPU-scale training and are explicitly not reproduced here;
    // criteria 1-8 are the property-based substitute.
    let _ = (edge_homophily::<Graph>, check_theorem_efficient);
    println!(
        "criterion 10: PASS — full-scale benchmark accuracies are out of scope by design; \
         criteria 1-8 stand in as the property-based acceptance"
    );
}
