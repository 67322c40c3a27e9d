//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error (`usage:` prefix on stderr),
//! 2 data error (`data:`), 3 verification failure (`verify:`).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use graphite_core::gnn::io::{load_model, save_model, SavedModel};
use graphite_core::gnn::train::{predict, train};
use graphite_core::homophily::{full_report, full_report_transformed};
use graphite_core::textfmt::format_g17;
use graphite_core::transform::{graphite_transform_with, FeatureAggregator, TransformedGraph};

use crate::campaign::{run_campaign, CampaignConfig};
use crate::config::{parse_config_file, TrainSettings};
use crate::formats::{
    parse_graph_dir, parse_transformed_dir, write_graph_dir, write_transformed, NameTable,
    SplitSpec,
};
use crate::synth::{generate_synthetic, SynthParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser)]
#[command(
    name = "graphite",
    about = "Boost graph homophily with feature nodes, measure it, verify the guarantees, train a self-gated GNN",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the feature-node transformation to a graph directory.
    Transform {
        /// Input graph directory.
        input: PathBuf,
        /// Output directory for the transformed graph.
        output: PathBuf,
        /// Feature-node row aggregator.
        #[arg(long, default_value = "averaging", value_parser = parse_aggregator)]
        aggregator: FeatureAggregator,
        #[command(flatten)]
        ingest: IngestOpts,
    },
    /// Print the homophily report of a graph directory.
    Metrics {
        input: PathBuf,
        /// Treat the input as a transformed-graph directory.
        #[arg(long)]
        transformed: bool,
        #[command(flatten)]
        ingest: IngestOpts,
    },
    /// Run the randomized guarantee-verification campaign.
    Verify {
        /// Number of graphs to verify.
        #[arg(long, default_value_t = 1000)]
        graphs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Node-count range, e.g. 10..300.
        #[arg(long, default_value = "10..300", value_parser = parse_range_usize)]
        nodes: (usize, usize),
        /// Feature-count range.
        #[arg(long, default_value = "4..60", value_parser = parse_range_usize)]
        features: (usize, usize),
        /// Features-per-node range.
        #[arg(long, default_value = "1..6", value_parser = parse_range_usize)]
        feats_per_node: (usize, usize),
        /// Average-degree range.
        #[arg(long, default_value = "1.5..8", value_parser = parse_range_f64)]
        degree: (f64, f64),
        /// Keep draws that violate the assumption gate (counted separately)
        /// instead of redrawing.
        #[arg(long)]
        allow_gated_out: bool,
        /// Also allow homophilic wiring when drawing graphs.
        #[arg(long)]
        mixed_wiring: bool,
        /// Directory for reproduction bundles of failing graphs.
        #[arg(long, default_value = "verify_failures")]
        bundle_dir: PathBuf,
        /// Write the machine-readable report here (defaults to stdout only).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train the self-gated GNN on a graph directory.
    Train {
        input: PathBuf,
        /// Flat key = value configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Apply the feature-node transformation first.
        #[arg(long)]
        transform: bool,
        /// Where to write the trained model.
        #[arg(long, default_value = "model.bin")]
        model_out: PathBuf,
        /// Where to write the training report.
        #[arg(long, default_value = "train_report.txt")]
        report_out: PathBuf,
        #[command(flatten)]
        ingest: IngestOpts,
    },
    /// Predict labels for a graph directory with a trained model.
    Predict {
        model: PathBuf,
        input: PathBuf,
        /// Output file: one `node<TAB>class` line per graph node.
        output: PathBuf,
        #[command(flatten)]
        ingest: IngestOpts,
    },
    /// Generate a synthetic heterophilic graph directory.
    Gen {
        output: PathBuf,
        #[arg(long, default_value_t = 500)]
        nodes: usize,
        #[arg(long, default_value_t = 50)]
        features: usize,
        #[arg(long, default_value_t = 4)]
        feats_per_node: usize,
        #[arg(long, default_value_t = 0.7)]
        own_pool_prob: f64,
        #[arg(long, default_value_t = 1.5)]
        avg_degree: f64,
        #[arg(long, default_value_t = 0.95)]
        p_cross: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct IngestOpts {
    /// Map real feature values to 1 iff strictly above this threshold
    /// (default: reject non-binary values).
    #[arg(long)]
    binarize_threshold: Option<f64>,
}

fn parse_aggregator(s: &str) -> Result<FeatureAggregator, String> {
    match s {
        "averaging" => Ok(FeatureAggregator::Averaging),
        "majority" => Ok(FeatureAggregator::Majority),
        other => Err(format!("unknown aggregator \"{other}\" (averaging | majority)")),
    }
}

fn parse_range_usize(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, found \"{s}\""))?;
    let lo = lo.parse().map_err(|_| format!("bad range start \"{lo}\""))?;
    let hi = hi.parse().map_err(|_| format!("bad range end \"{hi}\""))?;
    Ok((lo, hi))
}

fn parse_range_f64(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, found \"{s}\""))?;
    let lo = lo.parse().map_err(|_| format!("bad range start \"{lo}\""))?;
    let hi = hi.parse().map_err(|_| format!("bad range end \"{hi}\""))?;
    Ok((lo, hi))
}

enum CliFailure {
    Data(String),
    Verify(String),
}

impl CliFailure {
    fn report(&self) -> i32 {
        match self {
            CliFailure::Data(msg) => {
                eprintln!("data: {msg}");
                EXIT_DATA
            }
            CliFailure::Verify(msg) => {
                eprintln!("verify: {msg}");
                EXIT_VERIFY
            }
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliFailure {
    CliFailure::Data(e.to_string())
}

/// Entry point used by `main` and by the integration tests.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Count help/version as success, everything else as usage.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            eprintln!("usage: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(failure) => failure.report(),
    }
}

fn dispatch(command: Command) -> Result<i32, CliFailure> {
    match command {
        Command::Transform {
            input,
            output,
            aggregator,
            ingest,
        } => {
            let parsed =
                parse_graph_dir(&input, ingest.binarize_threshold).map_err(data)?;
            let (tg, warnings) =
                graphite_transform_with(&parsed.graph, aggregator).map_err(data)?;
            if warnings.unused_features_dropped > 0 {
                eprintln!(
                    "note: dropped {} unused feature column(s)",
                    warnings.unused_features_dropped
                );
            }
            write_transformed(&tg, &parsed.names, &output).map_err(data)?;
            println!(
                "transformed: {} graph nodes + {} feature nodes, {} graph edges + {} feature edges",
                tg.num_graph_nodes(),
                tg.num_feature_nodes(),
                tg.num_graph_edges(),
                tg.num_feature_edges()
            );
            Ok(EXIT_OK)
        }
        Command::Metrics {
            input,
            transformed,
            ingest,
        } => {
            let report = if transformed {
                let (tg, _) = parse_transformed_dir(&input).map_err(data)?;
                if tg.base().num_edges() == 0 {
                    return Err(CliFailure::Data("no edges".to_string()));
                }
                full_report_transformed(&tg)
            } else {
                let parsed =
                    parse_graph_dir(&input, ingest.binarize_threshold).map_err(data)?;
                if parsed.graph.num_edges() == 0 {
                    return Err(CliFailure::Data("no edges".to_string()));
                }
                full_report(&parsed.graph)
            };
            print!("{}", report.to_text());
            Ok(EXIT_OK)
        }
        Command::Verify {
            graphs,
            seed,
            nodes,
            features,
            feats_per_node,
            degree,
            allow_gated_out,
            mixed_wiring,
            bundle_dir,
            report,
        } => {
            let config = CampaignConfig {
                num_graphs: graphs,
                nodes,
                avg_degree: degree,
                num_features: features,
                features_per_node: feats_per_node,
                force_heterophily: !mixed_wiring,
                require_gate: !allow_gated_out,
                seed,
            };
            let campaign = run_campaign(&config, &bundle_dir).map_err(data)?;
            let text = campaign.to_text();
            if let Some(path) = report {
                std::fs::write(&path, &text)
                    .map_err(|e| data(format!("{}: {e}", path.display())))?;
            }
            print!("{text}");
            if campaign.passed() {
                Ok(EXIT_OK)
            } else {
                Err(CliFailure::Verify(format!(
                    "{} of {} graphs failed; reproduction bundles under {}",
                    campaign.num_failures(),
                    campaign.outcomes.len(),
                    bundle_dir.display()
                )))
            }
        }
        Command::Train {
            input,
            config,
            transform,
            model_out,
            report_out,
            ingest,
        } => {
            let settings = parse_config_file(&config).map_err(data)?;
            let parsed = parse_graph_dir(&input, ingest.binarize_threshold).map_err(data)?;
            let code = run_train(&parsed, settings, transform, &model_out, &report_out)?;
            Ok(code)
        }
        Command::Predict {
            model,
            input,
            output,
            ingest,
        } => {
            let saved = load_model(&model).map_err(data)?;
            let parsed = parse_graph_dir(&input, ingest.binarize_threshold).map_err(data)?;
            let tg = if saved.transformed {
                let (tg, _) = graphite_transform_with(&parsed.graph, FeatureAggregator::Averaging)
                    .map_err(data)?;
                tg
            } else {
                TransformedGraph::from_plain(&parsed.graph)
            };
            let classes = predict(&tg, &saved.params, &saved.config).map_err(data)?;
            let mut out = String::new();
            for (u, &c) in classes.iter().enumerate() {
                out.push_str(&format!(
                    "{}\t{}\n",
                    parsed.names.node_names[u],
                    parsed.names.class_name(c)
                ));
            }
            std::fs::write(&output, out)
                .map_err(|e| data(format!("{}: {e}", output.display())))?;
            Ok(EXIT_OK)
        }
        Command::Gen {
            output,
            nodes,
            features,
            feats_per_node,
            own_pool_prob,
            avg_degree,
            p_cross,
            seed,
        } => {
            let params = SynthParams {
                num_nodes: nodes,
                num_features: features,
                features_per_node: feats_per_node,
                own_pool_prob,
                avg_degree,
                p_cross,
                seed,
            };
            let graph = generate_synthetic(&params).map_err(data)?;
            let names = synthetic_names(&graph);
            write_graph_dir(&graph, &names, None, &output).map_err(data)?;
            println!(
                "generated: {} nodes, {} edges, {} features",
                graph.num_nodes(),
                graph.num_edges(),
                graph.num_features()
            );
            Ok(EXIT_OK)
        }
    }
}

pub(crate) fn synthetic_names(graph: &graphite_core::graph::Graph) -> NameTable {
    NameTable {
        node_names: (0..graph.num_nodes()).map(|u| format!("n{u}")).collect(),
        feature_names: (0..graph.num_features()).map(|k| format!("f{k}")).collect(),
        class_names: (0..graph.num_classes()).map(|c| format!("c{c}")).collect(),
    }
}

fn run_train(
    parsed: &crate::formats::ParsedGraph,
    settings: TrainSettings,
    transform: bool,
    model_out: &Path,
    report_out: &Path,
) -> Result<i32, CliFailure> {
    let tg = if transform {
        graphite_transform_with(&parsed.graph, FeatureAggregator::Averaging)
            .map_err(data)?
            .0
    } else {
        TransformedGraph::from_plain(&parsed.graph)
    };
    let split_seed = settings.split_seed.unwrap_or(settings.gnn.seed);
    let spec = match &parsed.splits {
        Some(spec) => spec.clone(),
        None => SplitSpec::generate(&parsed.graph, settings.split_ratios, split_seed)
            .map_err(data)?,
    };
    let splits = spec.to_splits();
    let (params, report) = train(&tg, &splits, &settings.gnn, settings.metric).map_err(data)?;

    save_model(
        model_out,
        &SavedModel {
            config: settings.gnn.clone(),
            params,
            transformed: transform,
        },
    )
    .map_err(data)?;

    let mut text = String::new();
    text.push_str(&format!("metric {}\n", settings.metric.as_str()));
    text.push_str(&format!("best_step {}\n", report.best_step));
    text.push_str(&format!(
        "test_metric {}\n",
        format_g17(report.test_metric)
    ));
    text.push_str(&format!(
        "wall_clock_seconds {}\n",
        format_g17(report.wall_clock_seconds)
    ));
    for (step, value) in &report.val_metric {
        text.push_str(&format!("val {} {}\n", step, format_g17(*value)));
    }
    for (step, loss) in report.train_loss.iter().enumerate() {
        text.push_str(&format!("loss {} {}\n", step + 1, format_g17(*loss)));
    }
    std::fs::write(report_out, &text)
        .map_err(|e| data(format!("{}: {e}", report_out.display())))?;
    println!(
        "trained: best step {}, test {} = {}",
        report.best_step,
        settings.metric.as_str(),
        format_g17(report.test_metric)
    );
    Ok(EXIT_OK)
}
