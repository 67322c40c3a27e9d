//! Randomized verification campaign.
//!
//! Generates graphs, runs both guarantee checkers, the two-hop witness
//! check, and brute-force oracles (pair-enumeration NHB edge count and a
//! dense recomputation of share homophily), and aggregates pass/fail
//! counts into a machine-readable report. Any check failure on a
//! gate-passing graph produces a reproduction bundle (graph files + seed).

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use graphite_core::graph::Graph;
use graphite_core::homophily::share_homophily;
use graphite_core::kahan::KahanSum;
use graphite_core::textfmt::format_g17;
use graphite_core::transform::{
    check_theorem_efficient, check_theorem_naive, evaluate_assumptions, graphite_transform,
    verify_two_hop, TransformedGraph,
};

use crate::formats::{write_graph_dir, FormatError, NameTable};
use crate::synth::{synthesize_raw, SynthParams};

/// Environment variable selecting the campaign worker count (default 1).
pub const WORKERS_ENV: &str = "GRAPHITE_VERIFY_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub num_graphs: usize,
    /// Inclusive node-count range.
    pub nodes: (usize, usize),
    /// Inclusive average-degree range.
    pub avg_degree: (f64, f64),
    /// Inclusive feature-count range.
    pub num_features: (usize, usize),
    /// Inclusive features-per-node range.
    pub features_per_node: (usize, usize),
    /// Wire draws preferentially across classes so most graphs pass the
    /// assumption gate.
    pub force_heterophily: bool,
    /// Redraw each instance (up to 100 times) until it passes the gate;
    /// when false, gated-out draws are kept and counted separately.
    pub require_gate: bool,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            num_graphs: 1000,
            nodes: (10, 300),
            avg_degree: (1.5, 8.0),
            num_features: (4, 60),
            features_per_node: (1, 6),
            force_heterophily: true,
            require_gate: true,
            seed: 1,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let fail = |msg: &str| Err(CampaignError::InvalidConfig(msg.to_string()));
        if self.num_graphs == 0 {
            return fail("num_graphs must be positive");
        }
        if self.nodes.0 < 2 || self.nodes.0 > self.nodes.1 {
            return fail("node range must be non-empty and start at 2 or more");
        }
        if self.avg_degree.0 <= 0.0 || self.avg_degree.0 > self.avg_degree.1 {
            return fail("degree range must be non-empty and positive");
        }
        if self.num_features.0 < 2 || self.num_features.0 > self.num_features.1 {
            return fail("feature range must be non-empty and start at 2 or more");
        }
        if self.features_per_node.0 == 0 || self.features_per_node.0 > self.features_per_node.1 {
            return fail("features-per-node range must be non-empty and positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bundle(#[from] FormatError),
}

/// Result of verifying one generated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOutcome {
    pub index: usize,
    pub seed: u64,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub gate_passed: bool,
    pub violations: Vec<String>,
    pub hom_before: Option<f64>,
    pub hom_after_feature_nodes: Option<f64>,
    pub hom_after_naive: Option<f64>,
    pub nodes_added: usize,
    pub edges_added_feature: usize,
    pub edges_added_naive: usize,
    pub two_hop_ok: bool,
    /// Check failures (empty means every applicable check passed).
    pub failures: Vec<String>,
    pub transform_secs: f64,
    pub metric_secs: f64,
}

#[derive(Debug)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub outcomes: Vec<GraphOutcome>,
    /// Bundles written for failing graphs.
    pub bundles: Vec<PathBuf>,
}

impl CampaignReport {
    pub fn num_gate_passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.gate_passed).count()
    }

    pub fn num_gated_out(&self) -> usize {
        self.outcomes.len() - self.num_gate_passed()
    }

    pub fn num_failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.failures.is_empty()).count()
    }

    pub fn passed(&self) -> bool {
        self.num_failures() == 0
    }

    /// Machine-readable report. All lines except the `time_*` keys are
    /// deterministic given the configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("graphs {}\n", self.outcomes.len()));
        out.push_str(&format!("gate_passed {}\n", self.num_gate_passed()));
        out.push_str(&format!("gated_out {}\n", self.num_gated_out()));
        out.push_str(&format!("failures {}\n", self.num_failures()));
        let mut transform_time = KahanSum::new();
        let mut metric_time = KahanSum::new();
        for o in &self.outcomes {
            transform_time.add(o.transform_secs);
            metric_time.add(o.metric_secs);
        }
        out.push_str(&format!(
            "time_transform_total_secs {}\n",
            format_g17(transform_time.value())
        ));
        out.push_str(&format!(
            "time_metrics_total_secs {}\n",
            format_g17(metric_time.value())
        ));
        for o in &self.outcomes {
            let fmt_opt = |v: Option<f64>| match v {
                Some(v) => format_g17(v),
                None => "undefined".to_string(),
            };
            out.push_str(&format!(
                "graph {} seed {} nodes {} edges {} gate {} hom_before {} hom_feature_nodes {} \
                 hom_naive {} nodes_added {} edges_added {} edges_added_naive {} two_hop {} \
                 failures {}\n",
                o.index,
                o.seed,
                o.num_nodes,
                o.num_edges,
                if o.gate_passed { "pass" } else { "out" },
                fmt_opt(o.hom_before),
                fmt_opt(o.hom_after_feature_nodes),
                fmt_opt(o.hom_after_naive),
                o.nodes_added,
                o.edges_added_feature,
                o.edges_added_naive,
                if o.two_hop_ok { "ok" } else { "FAIL" },
                if o.failures.is_empty() {
                    "none".to_string()
                } else {
                    o.failures.join(";").replace(' ', "_")
                },
            ));
            out.push_str(&format!(
                "time_graph {} transform_secs {} metric_secs {}\n",
                o.index,
                format_g17(o.transform_secs),
                format_g17(o.metric_secs)
            ));
        }
        out
    }
}

fn derive_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 step keeps per-graph streams independent.
    let mut z = seed
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn sample_params(config: &CampaignConfig, rng: &mut ChaCha8Rng, seed: u64) -> SynthParams {
    let p_cross = if config.force_heterophily {
        rng.gen_range(0.9..0.99)
    } else {
        rng.gen_range(0.0..1.0)
    };
    SynthParams {
        num_nodes: rng.gen_range(config.nodes.0..=config.nodes.1),
        num_features: rng.gen_range(config.num_features.0..=config.num_features.1),
        features_per_node: rng.gen_range(config.features_per_node.0..=config.features_per_node.1),
        own_pool_prob: rng.gen_range(0.5..0.95),
        avg_degree: rng.gen_range(config.avg_degree.0..=config.avg_degree.1),
        p_cross,
        seed,
    }
}

/// Dense recomputation of share homophily: materialize full rows and scan
/// every coordinate. Independent of the sparse merge implementation.
fn dense_share_oracle_graph(g: &Graph) -> Option<f64> {
    if g.num_edges() == 0 {
        return None;
    }
    let width = g.num_features();
    let dense: Vec<Vec<f64>> = (0..g.num_nodes())
        .map(|u| {
            let mut row = vec![0.0; width];
            for &k in g.features_of(u) {
                row[k] = 1.0;
            }
            row
        })
        .collect();
    Some(dense_share(&dense, g.edges()))
}

fn dense_share_oracle_transformed(tg: &TransformedGraph) -> Option<f64> {
    let base = tg.base();
    if base.num_edges() == 0 {
        return None;
    }
    let width = tg.num_used_features();
    let dense: Vec<Vec<f64>> = (0..base.num_nodes())
        .map(|u| {
            let mut row = vec![0.0; width];
            for (col, val) in tg.x_star_row(u).iter() {
                row[col] = val;
            }
            row
        })
        .collect();
    Some(dense_share(&dense, base.edges()))
}

fn dense_share(rows: &[Vec<f64>], edges: &[(usize, usize)]) -> f64 {
    let mut acc = KahanSum::new();
    for &(u, v) in edges {
        let mut best: f64 = 0.0;
        for (a, b) in rows[u].iter().zip(&rows[v]) {
            best = best.max(a.min(*b));
        }
        acc.add(best);
    }
    acc.value() / edges.len() as f64
}

/// Brute-force count of non-adjacent feature-sharing pairs.
fn naive_pair_oracle(g: &Graph) -> usize {
    let mut count = 0;
    for u in 0..g.num_nodes() {
        for v in (u + 1)..g.num_nodes() {
            if g.shares_feature(u, v).unwrap() && !g.has_edge(u, v) {
                count += 1;
            }
        }
    }
    count
}

fn verify_one(index: usize, config: &CampaignConfig) -> (GraphOutcome, Option<Graph>) {
    let seed = derive_seed(config.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = {
        let params = sample_params(config, &mut rng, seed);
        let mut draw_rng = ChaCha8Rng::seed_from_u64(params.seed);
        synthesize_raw(&params, &mut draw_rng)
    };
    if config.require_gate {
        let mut attempt = 0;
        while !evaluate_assumptions(&graph).is_empty() && attempt < 100 {
            attempt += 1;
            let params = sample_params(config, &mut rng, derive_seed(seed, attempt));
            let mut draw_rng = ChaCha8Rng::seed_from_u64(params.seed);
            graph = synthesize_raw(&params, &mut draw_rng);
        }
    }
    let outcome = verify_graph(index, seed, &graph);
    let repro = if outcome.failures.is_empty() {
        None
    } else {
        Some(graph)
    };
    (outcome, repro)
}

/// Runs every check of the campaign on one concrete graph: both guarantee
/// checkers, the two-hop witness check, and the brute-force oracles.
pub fn verify_graph(index: usize, seed: u64, graph: &Graph) -> GraphOutcome {
    let violations = evaluate_assumptions(graph);
    let gate_passed = violations.is_empty();
    let mut failures = Vec::new();

    let transform_started = Instant::now();
    let naive = check_theorem_naive(graph);
    let efficient = check_theorem_efficient(graph);
    let transformed = graphite_transform(graph).ok().map(|(tg, _)| tg);
    let transform_secs = transform_started.elapsed().as_secs_f64();

    let metric_started = Instant::now();
    let two_hop_ok = transformed
        .as_ref()
        .map(|tg| verify_two_hop(graph, tg))
        .unwrap_or(true);

    // Oracles run on every graph, gate-passing or not.
    let pair_count = naive_pair_oracle(graph);
    if naive.edges_added != pair_count {
        failures.push(format!(
            "naive edge count {} != pair oracle {}",
            naive.edges_added, pair_count
        ));
    }
    if let (Some(sparse), Some(dense)) = (
        share_homophily(graph, graph.edges()).ok(),
        dense_share_oracle_graph(graph),
    ) {
        if (sparse - dense).abs() > 1e-12 {
            failures.push(format!("share homophily sparse {sparse} != dense {dense}"));
        }
    }
    if let Some(tg) = &transformed {
        if let Some(dense) = dense_share_oracle_transformed(tg) {
            let sparse = share_homophily(tg, tg.base().edges()).unwrap();
            if (sparse - dense).abs() > 1e-12 {
                failures.push(format!(
                    "transformed share homophily sparse {sparse} != dense {dense}"
                ));
            }
        }
    }
    let metric_secs = metric_started.elapsed().as_secs_f64();

    if !two_hop_ok {
        failures.push("two-hop witness missing".to_string());
    }
    if gate_passed {
        if !naive.bound_satisfied {
            failures.push("naive edge bound violated".to_string());
        }
        if !naive.homophily_increased() {
            failures.push("naive booster did not increase homophily".to_string());
        }
        if !efficient.bound_satisfied {
            failures.push("feature-node exact counts violated".to_string());
        }
        if !efficient.homophily_increased() {
            failures.push("feature-node transform did not increase homophily".to_string());
        }
    }

    GraphOutcome {
        index,
        seed,
        num_nodes: graph.num_nodes(),
        num_edges: graph.num_edges(),
        gate_passed,
        violations: violations.iter().map(|v| v.to_string()).collect(),
        hom_before: efficient.hom_before,
        hom_after_feature_nodes: efficient.hom_after,
        hom_after_naive: naive.hom_after,
        nodes_added: efficient.nodes_added,
        edges_added_feature: efficient.edges_added,
        edges_added_naive: naive.edges_added,
        two_hop_ok,
        failures,
        transform_secs,
        metric_secs,
    }
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs the campaign; failing graphs are serialized under `bundle_dir`.
///
/// Results are collected in graph-index order, so the report is
/// deterministic given the configuration regardless of the worker count
/// (timing lines excepted).
pub fn run_campaign(
    config: &CampaignConfig,
    bundle_dir: &Path,
) -> Result<CampaignReport, CampaignError> {
    config.validate()?;
    let workers = worker_count();
    let mut slots: Vec<Option<(GraphOutcome, Option<Graph>)>> = Vec::new();
    slots.resize_with(config.num_graphs, || None);

    if workers <= 1 {
        for (index, slot) in slots.iter_mut().enumerate() {
            *slot = Some(verify_one(index, config));
        }
    } else {
        let next = AtomicUsize::new(0);
        let results = Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    if index >= config.num_graphs {
                        break;
                    }
                    let result = verify_one(index, config);
                    results.lock().unwrap()[index] = Some(result);
                });
            }
        });
    }

    let mut outcomes = Vec::with_capacity(config.num_graphs);
    let mut bundles = Vec::new();
    for slot in slots {
        let (outcome, repro) = slot.expect("every index visited");
        if let Some(graph) = repro {
            let dir = bundle_dir.join(format!("graph_{}_seed_{}", outcome.index, outcome.seed));
            let names = NameTable {
                node_names: (0..graph.num_nodes()).map(|u| format!("n{u}")).collect(),
                feature_names: (0..graph.num_features()).map(|k| format!("f{k}")).collect(),
                class_names: vec!["c0".to_string(), "c1".to_string()],
            };
            write_graph_dir(&graph, &names, None, &dir)?;
            std::fs::write(
                dir.join("seed.txt"),
                format!("seed {}\nindex {}\n", outcome.seed, outcome.index),
            )
            .map_err(|source| FormatError::Io {
                path: dir.join("seed.txt"),
                source,
            })?;
            bundles.push(dir);
        }
        outcomes.push(outcome);
    }
    Ok(CampaignReport {
        config: config.clone(),
        outcomes,
        bundles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> CampaignConfig {
        CampaignConfig {
            num_graphs: 25,
            nodes: (8, 40),
            avg_degree: (1.5, 5.0),
            num_features: (4, 12),
            features_per_node: (1, 3),
            force_heterophily: true,
            require_gate: true,
            seed: 5,
        }
    }

    #[test]
    fn small_campaign_passes_with_zero_failures() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_campaign(&small_config(), dir.path()).unwrap();
        assert_eq!(report.outcomes.len(), 25);
        assert!(report.passed(), "failures: {:?}", report.num_failures());
        assert!(report.bundles.is_empty());
        assert_eq!(report.num_gate_passed(), 25);
    }

    #[test]
    fn mixed_campaign_counts_gated_out_draws_without_failing() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig {
            force_heterophily: false,
            require_gate: false,
            num_graphs: 40,
            seed: 11,
            ..small_config()
        };
        let report = run_campaign(&config, dir.path()).unwrap();
        assert!(report.passed());
        assert!(
            report.num_gated_out() > 0,
            "expected some homophilic draws to be gated out"
        );
    }

    #[test]
    fn report_is_deterministic_modulo_timings() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig {
            num_graphs: 10,
            ..small_config()
        };
        let strip = |text: String| -> String {
            text.lines()
                .filter(|l| !l.starts_with("time_"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let a = strip(run_campaign(&config, dir.path()).unwrap().to_text());
        let b = strip(run_campaign(&config, dir.path()).unwrap().to_text());
        assert_eq!(a, b);
    }

    #[test]
    fn single_graph_verification_echoes_hand_numbers() {
        let (g, _) = Graph::build(
            5,
            &[(0, 2), (1, 3), (1, 4), (0, 3)],
            &[(0, 0), (1, 0), (1, 2), (2, 1), (3, 1), (4, 1), (4, 2)],
            &[(0, 0), (1, 0), (2, 1), (3, 1), (4, 1)],
        )
        .unwrap();
        let outcome = verify_graph(0, 7, &g);
        assert!(outcome.gate_passed);
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert!((outcome.hom_before.unwrap() - 0.25).abs() < 1e-12);
        assert!((outcome.hom_after_feature_nodes.unwrap() - 8.0 / 11.0).abs() < 1e-12);
        assert!((outcome.hom_after_naive.unwrap() - 0.625).abs() < 1e-12);
        assert_eq!(outcome.nodes_added, 3);
        assert_eq!(outcome.edges_added_feature, 7);
        assert_eq!(outcome.edges_added_naive, 4);
        assert!(outcome.two_hop_ok);
    }

    #[test]
    fn config_ranges_are_validated() {
        let mut config = small_config();
        config.nodes = (50, 10);
        assert!(matches!(
            run_campaign(&config, std::path::Path::new("/tmp")),
            Err(CampaignError::InvalidConfig(_))
        ));
        let mut config = small_config();
        config.num_graphs = 0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn worker_env_var_does_not_change_results() {
        let dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig {
            num_graphs: 12,
            ..small_config()
        };
        let strip = |text: String| -> String {
            text.lines()
                .filter(|l| !l.starts_with("time_"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let sequential = strip(run_campaign(&config, dir.path()).unwrap().to_text());
        std::env::set_var(WORKERS_ENV, "4");
        let parallel = strip(run_campaign(&config, dir.path()).unwrap().to_text());
        std::env::remove_var(WORKERS_ENV);
        assert_eq!(sequential, parallel);
    }
}
