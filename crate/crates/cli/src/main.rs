use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use crosscut::suite;
use crosscut::{
    block_partition, cb_reduct, check_respects, decode, encode, enumerate_digraphs,
    find_isomorphism_with, respecting_element, roundtrip, BranchFamily, ClassCounts, EqStructure,
    Graph, IsoOptions, ReductionParams, UnaryStructure,
};

mod report;

use report::Report;

/// Exit codes: 0 success / isomorphic / pass, 1 non-isomorphic / fail,
/// 2 usage or malformed input.
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "crosscut",
    about = "Graphs encoded as structures of cross-cutting equivalence relations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamArgs {
    /// Class counts, comma separated (default: 2,3,4,... up to the depth)
    #[arg(long, value_parser = parse_counts)]
    counts: Option<Vec<u32>>,
    /// Working depth m (default: max(4, thresholds) or the counts length)
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a graph file as a structure file
    Encode {
        /// Graph JSON file
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Output path for the structure JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Decode a structure file back to a graph file
    Decode {
        /// Structure JSON file
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Output path for the graph JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Encode, decode, and compare exactly through the certificate
    Roundtrip {
        /// Graph JSON file (single-case mode)
        #[arg(long, required_unless_present = "exhaustive")]
        graph: Option<PathBuf>,
        /// Run every directed graph on --max-vertices vertices instead
        #[arg(long)]
        exhaustive: bool,
        /// Vertex count for the exhaustive enumeration
        #[arg(long, default_value_t = 3)]
        max_vertices: usize,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        json: bool,
    },
    /// Search for an isomorphism between two structure files
    CheckIso {
        left: PathBuf,
        right: PathBuf,
        /// Disable the invariant prechecks and candidate filter
        #[arg(long)]
        no_prune: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check that every relation subset meets to the product class count
    Crosscut {
        /// Structure JSON file
        #[arg(long)]
        structure: PathBuf,
        /// Class counts, comma separated
        #[arg(long, value_parser = parse_counts)]
        counts: Vec<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Partition class counts into blocks with strictly increasing products
    Blocks {
        /// Class counts, comma separated
        #[arg(long, value_parser = parse_counts)]
        counts: Vec<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Derive the two-class dichotomy structure of a unary-predicate file
    CbReduct {
        /// Unary structure JSON file
        #[arg(long)]
        structure: PathBuf,
        /// Output path for the structure JSON
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Build and verify a group element respecting a permutation
    Respect {
        /// Permutation of 0..k as images, comma separated
        #[arg(long, value_parser = parse_sigma)]
        sigma: Vec<usize>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run the full verification battery
    Suite {
        #[arg(long)]
        json: bool,
    },
}

fn parse_counts(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .map(|part| part.trim().parse::<u32>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_sigma(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// Resolves (counts, depth) overrides into reduction parameters for a
/// given vertex count.
fn resolve_params(args: &ParamArgs, vertices: usize) -> Result<ReductionParams> {
    match (&args.counts, args.depth) {
        (None, None) => Ok(ReductionParams::default_for(vertices)?),
        (None, Some(depth)) => Ok(ReductionParams::new(
            &ClassCounts::default_increasing(depth),
            vertices,
            depth,
        )?),
        (Some(raw), depth) => {
            let counts = ClassCounts::new(raw.clone(), true)?;
            let depth = depth.unwrap_or(counts.len());
            Ok(ReductionParams::new(&counts, vertices, depth)?)
        }
    }
}

fn params_fields(report: &mut Report, params: &ReductionParams) {
    report.field("counts", report::join(params.counts().values()));
    report.field("depth", params.depth());
    report.field("cutoff", params.cutoff());
    report.field("thresholds", report::join(params.thresholds()));
}

fn read_to_string(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(path) => {
            fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Encode {
            graph,
            params,
            output,
            json,
        } => {
            let graph = Graph::from_json(&read_to_string(&graph)?)?;
            let params = resolve_params(&params, graph.vertex_count())?;
            let (structure, _) = encode(&graph, &params)?;
            write_output(&output, &structure.to_json())?;
            let mut report = Report::new("encode", json);
            params_fields(&mut report, &params);
            report.field("vertices", graph.vertex_count());
            report.field("edges", graph.edge_count());
            report.field("size", structure.size());
            if let Some(path) = &output {
                report.field("output", path.display().to_string());
            }
            report.emit();
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode {
            structure,
            params,
            output,
            json,
        } => {
            let structure = EqStructure::from_json(&read_to_string(&structure)?)?;
            let singletons = structure
                .e_infinity()
                .class_members()
                .iter()
                .filter(|class| class.len() == 1)
                .count();
            let params = match (params.counts.as_ref(), params.depth) {
                (_, Some(depth)) if depth != structure.relation_count() => {
                    return Err(anyhow!(
                        "--depth {depth} does not match the {} relations in the file",
                        structure.relation_count()
                    ))
                }
                _ => resolve_params(
                    &ParamArgs {
                        counts: params.counts.clone(),
                        depth: Some(structure.relation_count()),
                    },
                    singletons,
                )?,
            };
            let graph = decode(&structure, &params)?;
            write_output(&output, &graph.to_json())?;
            let mut report = Report::new("decode", json);
            params_fields(&mut report, &params);
            report.field("size", structure.size());
            report.field("vertices", graph.vertex_count());
            report.field("edges", graph.edge_count());
            if let Some(path) = &output {
                report.field("output", path.display().to_string());
            }
            report.emit();
            Ok(ExitCode::SUCCESS)
        }
        Command::Roundtrip {
            graph,
            exhaustive,
            max_vertices,
            params,
            json,
        } => {
            if exhaustive {
                let resolved = resolve_params(&params, max_vertices)?;
                let mut failures = 0usize;
                let graphs = enumerate_digraphs(max_vertices);
                for graph in &graphs {
                    if !roundtrip(graph, &resolved)?.pass {
                        failures += 1;
                    }
                }
                let mut report = Report::new("roundtrip-exhaustive", json);
                params_fields(&mut report, &resolved);
                report.field("vertices", max_vertices);
                report.field("cases", graphs.len());
                report.field("failures", failures);
                report.field("verdict", if failures == 0 { "pass" } else { "fail" });
                report.emit();
                Ok(exit_verdict(failures == 0))
            } else {
                let path = graph.expect("clap enforces --graph without --exhaustive");
                let graph = Graph::from_json(&read_to_string(&path)?)?;
                let resolved = resolve_params(&params, graph.vertex_count())?;
                let outcome = roundtrip(&graph, &resolved)?;
                let mut report = Report::new("roundtrip", json);
                params_fields(&mut report, &resolved);
                report.field("vertices", graph.vertex_count());
                report.field("edges", graph.edge_count());
                report.field("size", outcome.structure_size);
                let histogram: Vec<String> = outcome
                    .class_histogram
                    .iter()
                    .map(|(size, count)| format!("{size}:{count}"))
                    .collect();
                report.field("einf_classes", histogram.join(" "));
                report.field("verdict", if outcome.pass { "pass" } else { "fail" });
                report.emit();
                Ok(exit_verdict(outcome.pass))
            }
        }
        Command::CheckIso {
            left,
            right,
            no_prune,
            json,
        } => {
            let left = EqStructure::from_json(&read_to_string(&left)?)?;
            let right = EqStructure::from_json(&read_to_string(&right)?)?;
            let options = IsoOptions {
                prune: !no_prune,
                ..IsoOptions::default()
            };
            let witness = find_isomorphism_with(&left, &right, options)?;
            let mut report = Report::new("check-iso", json);
            report.field("left_size", left.size());
            report.field("right_size", right.size());
            report.field("relations", left.relation_count());
            report.field("prune", !no_prune);
            report.field("isomorphic", witness.is_some());
            if let Some(witness) = &witness {
                report.field("witness", report::join(witness.mapping()));
            }
            report.emit();
            Ok(exit_verdict(witness.is_some()))
        }
        Command::Crosscut {
            structure,
            counts,
            json,
        } => {
            let structure = EqStructure::from_json(&read_to_string(&structure)?)?;
            let counts = ClassCounts::new(counts, false)?;
            let outcome = structure.check_cross_cutting(&counts)?;
            let mut report = Report::new("crosscut", json);
            report.field("counts", report::join(counts.values()));
            report.field("relations", structure.relation_count());
            report.field("size", structure.size());
            report.field("subsets_checked", outcome.subsets_checked);
            if let Some(failure) = &outcome.failure {
                report.field("failing_subset", report::join(&failure.subset));
                report.field("expected_classes", failure.expected);
                report.field("actual_classes", failure.actual);
            }
            report.field("verdict", if outcome.passed() { "pass" } else { "fail" });
            report.emit();
            Ok(exit_verdict(outcome.passed()))
        }
        Command::Blocks { counts, json } => {
            let counts = ClassCounts::new(counts, false)?;
            let partition = block_partition(&counts)?;
            let mut report = Report::new("blocks", json);
            report.field("counts", report::join(counts.values()));
            let blocks: Vec<String> = partition
                .blocks()
                .iter()
                .map(|(start, end)| format!("[{start},{end})"))
                .collect();
            report.field("blocks", blocks.join(" "));
            report.field("products", report::join(partition.products()));
            match partition.dropped() {
                Some((start, end)) => report.field("dropped", format!("[{start},{end})")),
                None => report.field("dropped", "none"),
            }
            report.emit();
            Ok(ExitCode::SUCCESS)
        }
        Command::CbReduct {
            structure,
            output,
            json,
        } => {
            let unary = UnaryStructure::from_json(&read_to_string(&structure)?)?;
            let reduct = cb_reduct(&unary);
            write_output(&output, &reduct.to_json())?;
            let mut report = Report::new("cb-reduct", json);
            report.field("size", unary.size());
            report.field("predicates", unary.predicate_count());
            let class_counts: Vec<usize> = (0..reduct.relation_count())
                .map(|n| reduct.relation_partition(n).class_count())
                .collect();
            report.field("class_counts", report::join(&class_counts));
            report.field("meet_classes", reduct.e_infinity().class_count());
            if let Some(path) = &output {
                report.field("output", path.display().to_string());
            }
            report.emit();
            Ok(ExitCode::SUCCESS)
        }
        Command::Respect {
            sigma,
            params,
            json,
        } => {
            let k = sigma.len();
            let resolved = match (&params.counts, params.depth) {
                (None, None) => ReductionParams::default_for(k)?,
                _ => resolve_params(&params, k)?,
            };
            let family: &BranchFamily = resolved.family();
            let element = respecting_element(family, &sigma)?;
            let checks = check_respects(family, &sigma, &element)?;
            let mut report = Report::new("respect", json);
            report.field("sigma", report::join(&sigma));
            params_fields(&mut report, &resolved);
            report.field(
                "element",
                element
                    .images()
                    .iter()
                    .map(|images| report::join(images))
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            report.field(
                "member_checks",
                format!(
                    "{} of {} ok",
                    checks.member_checks.iter().filter(|c| c.ok).count(),
                    checks.member_checks.len()
                ),
            );
            report.field(
                "pair_checks",
                format!(
                    "{} of {} ok",
                    checks.pair_checks.iter().filter(|c| c.ok).count(),
                    checks.pair_checks.len()
                ),
            );
            report.field("verdict", if checks.all_ok() { "pass" } else { "fail" });
            report.emit();
            Ok(exit_verdict(checks.all_ok()))
        }
        Command::Suite { json } => {
            let results = suite::run_all();
            if json {
                let mut report = Report::new("suite", true);
                for result in &results {
                    report.field(
                        &format!("criterion_{}", result.index),
                        format!(
                            "{}: {} — {}",
                            result.name,
                            if result.pass { "PASS" } else { "FAIL" },
                            result.detail
                        ),
                    );
                }
                let pass = suite::all_pass(&results);
                report.field("verdict", if pass { "pass" } else { "fail" });
                report.emit();
                Ok(exit_verdict(pass))
            } else {
                for result in &results {
                    println!("{}", result.line());
                }
                let pass = suite::all_pass(&results);
                println!("suite: {}", if pass { "pass" } else { "fail" });
                Ok(exit_verdict(pass))
            }
        }
    }
}

fn exit_verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
