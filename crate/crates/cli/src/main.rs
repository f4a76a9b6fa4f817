//! `netmine`: batch driver for clustering, significance testing, overlays,
//! layouts and distance tables on attribute-labeled networks.

mod steps;

use std::net::SocketAddr;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netmine_core::generate::{synthetic_epidemic, SyntheticSpec};
use netmine_core::io::{to_document, DatasetManifest};
use netmine_core::layout::DEFAULT_ITERATIONS;
use netmine_core::session::{NullCache, ScopeMode, SessionConfig};
use netmine_core::significance::{NullConfig, DEFAULT_REPLICATES, DEFAULT_SWAPS_PER_EDGE};
use netmine_core::stats::{GlobalReference, PathScope};
use netmine_core::{AttrValue, ClusterId, Direction};
use serde::Serialize;

use steps::{CliError, GroupSource, Result, Workspace, BASE_PARTITION};

#[derive(Parser)]
#[command(
    name = "netmine",
    version,
    about = "Cluster, test and lay out attribute-labeled networks"
)]
struct Cli {
    /// Directory holding the artifacts of a run.
    #[arg(
        long,
        global = true,
        env = "NETMINE_OUT",
        default_value = "netmine-out"
    )]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full workflow: ingest, cluster, null model, gates, overlay, layout, tables.
    Run(RunArgs),
    /// Ingest a dataset and list its connected components.
    Components {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Maximal-modularity clustering of the ingested network.
    Cluster {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Scope::Giant)]
        scope: Scope,
    },
    /// Gate and split clusters whose subgraph has significant structure.
    Refine {
        /// Cluster to refine; repeat for several. Every cluster when omitted.
        #[arg(long = "cluster")]
        clusters: Vec<ClusterId>,
        #[command(flatten)]
        null: NullArgs,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Greedily merge clusters down to `k`.
    Coarsen {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Modularity threshold from degree-preserving random graphs.
    Null {
        #[command(flatten)]
        null: NullArgs,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Chi-squared test of an attribute in every cluster.
    Test {
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Mean shortest-path tables between attribute classes or cluster groups.
    Geodesics {
        #[arg(long, value_enum)]
        by: GeodesicsBy,
        /// Attribute for `--by attribute`.
        #[arg(long)]
        attribute: Option<String>,
        /// JSON file mapping cluster ids to group labels, for `--by groups`.
        /// Without it, groups come from the overlay's category verdicts.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Paths::Union)]
        paths: Paths,
        #[command(flatten)]
        years: YearArgs,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Force-directed layout of the cluster metagraph, with SVG.
    Layout {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Dataset manifests to load at startup (ids d1, d2, ...).
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
    },
    /// Write the synthetic epidemic-like dataset and its ground truth.
    Synthetic {
        /// Target directory (not the artifact directory).
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    null: NullArgs,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long, value_enum, default_value_t = Scope::Giant)]
    scope: Scope,
    /// Also coarsen to this many clusters and report that level.
    #[arg(long)]
    coarsen_to: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    layout_iterations: usize,
    #[arg(long, value_enum, default_value_t = Paths::Union)]
    paths: Paths,
    #[command(flatten)]
    years: YearArgs,
}

#[derive(Args)]
struct NullArgs {
    /// Number of rewired replicates.
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SWAPS_PER_EDGE)]
    swaps_per_edge: usize,
    /// Seed of the null model (and of sub-clusterings).
    #[arg(long, default_value_t = 7)]
    null_seed: u64,
}

impl NullArgs {
    fn config(&self) -> Result<NullConfig> {
        if self.replicates == 0 {
            return Err(CliError::Validation(
                "--replicates must be at least 1".into(),
            ));
        }
        if self.swaps_per_edge == 0 {
            return Err(CliError::Validation(
                "--swaps-per-edge must be at least 1".into(),
            ));
        }
        Ok(NullConfig {
            replicates: self.replicates,
            seed: self.null_seed,
            swaps_per_edge: self.swaps_per_edge,
        })
    }
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    attribute: String,
    /// Category whose residuals drive shapes and automatic groups.
    #[arg(long)]
    category: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Reference::Include)]
    reference: Reference,
}

impl TestArgs {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Validation(format!(
                "--alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Args)]
struct PartitionArg {
    /// Partition artifact to work on.
    #[arg(long, default_value = BASE_PARTITION)]
    partition: String,
}

#[derive(Args)]
struct YearArgs {
    /// Restrict yearly tables to `FROM..TO` (inclusive).
    #[arg(long, value_parser = parse_years)]
    years: Option<RangeInclusive<i64>>,
    /// Leave out the latest year (for an incomplete final year).
    #[arg(long)]
    drop_last_year: bool,
}

fn parse_years(s: &str) -> std::result::Result<RangeInclusive<i64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected FROM..TO")?;
    let a: i64 = a.trim().parse().map_err(|_| format!("bad year `{a}`"))?;
    let b: i64 = b.trim().parse().map_err(|_| format!("bad year `{b}`"))?;
    if a > b {
        return Err("empty year range".into());
    }
    Ok(a..=b)
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Giant,
    All,
}

impl From<Scope> for ScopeMode {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Giant => ScopeMode::Giant,
            Scope::All => ScopeMode::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    Include,
    Exclude,
}

impl From<Reference> for GlobalReference {
    fn from(r: Reference) -> Self {
        match r {
            Reference::Include => GlobalReference::IncludeCluster,
            Reference::Exclude => GlobalReference::ExcludeCluster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Paths {
    Union,
    Whole,
}

impl From<Paths> for PathScope {
    fn from(p: Paths) -> Self {
        match p {
            Paths::Union => PathScope::UnionOfGroups,
            Paths::Whole => PathScope::WholeScope,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GeodesicsBy {
    Attribute,
    Groups,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Command::Synthetic { dir, seed } = &cli.command {
        return write_synthetic(dir, *seed);
    }
    if let Command::Serve {
        addr,
        datasets,
        replicates,
    } = &cli.command
    {
        return serve(*addr, datasets, *replicates);
    }
    let ws = Workspace::create(&cli.out)?;
    match cli.command {
        Command::Run(args) => run_pipeline(&ws, &args),
        Command::Components { manifest } => {
            let info = steps::ingest(&ws, &manifest)?;
            println!("nodes {} edges {}", info.nodes, info.edges);
            println!(
                "components {}: {}",
                info.components.len(),
                sizes_line(&info.components)
            );
            Ok(())
        }
        Command::Cluster { seed, scope } => {
            let p = steps::cluster(&ws, seed, scope.into())?;
            println!("k {} Q {}", p.k(), p.modularity());
            Ok(())
        }
        Command::Refine {
            clusters,
            null,
            partition,
        } => {
            let targets = (!clusters.is_empty()).then_some(clusters.as_slice());
            let report = steps::refine_step(
                &ws,
                &partition.partition,
                targets,
                null.config()?,
                &NullCache::new(),
            )?;
            for v in &report.verdicts {
                println!(
                    "cluster {}: {} (k_sub {}, Q_sub {})",
                    v.cluster,
                    if v.accepted {
                        "split"
                    } else {
                        "no significant substructure"
                    },
                    v.k_sub,
                    v.q_sub.map_or("-".into(), |q| q.to_string())
                );
            }
            Ok(())
        }
        Command::Coarsen { k, partition } => {
            let report = steps::coarsen_step(&ws, &partition.partition, k)?;
            println!("k {} Q {}", report.k, report.modularity);
            Ok(())
        }
        Command::Null { null, partition } => {
            let report = steps::null(&ws, &partition.partition, null.config()?, &NullCache::new())?;
            println!(
                "Q {} threshold {} significant {}",
                report.modularity, report.summary.threshold, report.significant
            );
            Ok(())
        }
        Command::Test { test, partition } => {
            test.validate()?;
            let artifact = steps::test_step(
                &ws,
                &partition.partition,
                &test.attribute,
                test.category.as_deref(),
                test.alpha,
                test.reference.into(),
            )?;
            let atypical = artifact
                .overlay
                .clusters
                .iter()
                .filter(|t| t.p_value < test.alpha)
                .count();
            println!(
                "{atypical} of {} clusters atypical at alpha {}",
                artifact.overlay.clusters.len(),
                test.alpha
            );
            Ok(())
        }
        Command::Geodesics {
            by,
            attribute,
            groups,
            paths,
            years,
            partition,
        } => {
            let range = steps::year_filter(&ws, years.years, years.drop_last_year)?;
            match by {
                GeodesicsBy::Attribute => {
                    let attribute = attribute.ok_or_else(|| {
                        CliError::Validation("--by attribute needs --attribute".into())
                    })?;
                    steps::geodesics_by_attribute(&ws, &partition.partition, &attribute, range)
                }
                GeodesicsBy::Groups => {
                    let source = groups
                        .as_deref()
                        .map_or(GroupSource::Overlay, GroupSource::File);
                    steps::geodesics_by_groups(
                        &ws,
                        &partition.partition,
                        source,
                        paths.into(),
                        range,
                    )
                    .map(|_| ())
                }
            }
        }
        Command::Layout {
            seed,
            iterations,
            partition,
        } => {
            if iterations == 0 {
                return Err(CliError::Validation(
                    "--iterations must be at least 1".into(),
                ));
            }
            steps::layout_step(&ws, &partition.partition, seed, iterations)?;
            Ok(())
        }
        Command::Serve { .. } | Command::Synthetic { .. } => unreachable!(),
    }
}

fn sizes_line(sizes: &[usize]) -> String {
    let shown: Vec<String> = sizes.iter().take(10).map(usize::to_string).collect();
    let more = if sizes.len() > 10 {
        format!(" (+{} more)", sizes.len() - 10)
    } else {
        String::new()
    };
    format!("{}{more}", shown.join(" "))
}

#[derive(Serialize)]
struct Summary {
    components: Vec<usize>,
    k: usize,
    modularity: f64,
    threshold: f64,
    significant: bool,
    atypical_clusters: usize,
    refinable_clusters: Vec<ClusterId>,
    coarse: Option<CoarseSummary>,
}

#[derive(Serialize)]
struct CoarseSummary {
    k: usize,
    modularity: f64,
    significant: Option<bool>,
    atypical_clusters: usize,
}

fn run_pipeline(ws: &Workspace, args: &RunArgs) -> Result<()> {
    let null_config = args.null.config()?;
    args.test.validate()?;
    if args.layout_iterations == 0 {
        return Err(CliError::Validation(
            "--layout-iterations must be at least 1".into(),
        ));
    }
    if args.coarsen_to == Some(0) {
        return Err(CliError::Validation(
            "--coarsen-to must be at least 1".into(),
        ));
    }
    let cache = NullCache::new();
    let info = steps::ingest(ws, &args.manifest)?;
    let p = steps::cluster(ws, args.seed, args.scope.into())?;
    let null = steps::null(ws, BASE_PARTITION, null_config, &cache)?;
    let refined = steps::refine_step(ws, BASE_PARTITION, None, null_config, &cache)?;
    let range = steps::year_filter(ws, args.years.years.clone(), args.years.drop_last_year)?;

    let mut levels = vec![BASE_PARTITION];
    let coarse_report = match args.coarsen_to {
        Some(k) if k < p.k() => {
            levels.push("partition_coarsened.json");
            Some(steps::coarsen_step(ws, BASE_PARTITION, k)?)
        }
        _ => None,
    };
    let mut atypical = Vec::new();
    for &level in &levels {
        let t = &args.test;
        let overlay = steps::test_step(
            ws,
            level,
            &t.attribute,
            t.category.as_deref(),
            t.alpha,
            t.reference.into(),
        )?;
        atypical.push(
            overlay
                .overlay
                .clusters
                .iter()
                .filter(|c| c.p_value < t.alpha)
                .count(),
        );
        steps::layout_step(ws, level, args.seed, args.layout_iterations)?;
        steps::geodesics_by_attribute(ws, level, &t.attribute, range.clone())?;
        if t.category.is_some() {
            steps::geodesics_by_groups(
                ws,
                level,
                GroupSource::Overlay,
                args.paths.into(),
                range.clone(),
            )?;
        }
    }

    let summary = Summary {
        components: info.components.clone(),
        k: p.k(),
        modularity: p.modularity(),
        threshold: null.summary.threshold,
        significant: null.significant,
        atypical_clusters: atypical[0],
        refinable_clusters: refined.applied.clone(),
        coarse: coarse_report.as_ref().map(|c| CoarseSummary {
            k: c.k,
            modularity: c.modularity,
            significant: c.significant,
            atypical_clusters: atypical[1],
        }),
    };
    ws.write("summary.json", to_document("summary", &summary))?;

    println!("nodes {} edges {}", info.nodes, info.edges);
    println!(
        "components {}: {}",
        info.components.len(),
        sizes_line(&info.components)
    );
    println!(
        "clusters {} Q {:.4} null threshold {:.4} ({} replicates) significant {}",
        p.k(),
        p.modularity(),
        null.summary.threshold,
        null_config.replicates,
        null.significant
    );
    println!(
        "atypical clusters for {}: {} of {}",
        args.test.attribute,
        atypical[0],
        p.k()
    );
    println!(
        "clusters with significant substructure: {} of {}",
        refined.applied.len(),
        p.k()
    );
    if let Some(c) = &coarse_report {
        println!(
            "coarsened to {} Q {:.4} significant {} atypical {}",
            c.k,
            c.modularity,
            c.significant.map_or("-".into(), |s| s.to_string()),
            atypical[1]
        );
    }
    Ok(())
}

fn serve(addr: SocketAddr, datasets: &[PathBuf], replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(CliError::Validation(
            "--replicates must be at least 1".into(),
        ));
    }
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    let state = netmine_server::AppState::new(netmine_server::ServerOptions {
        defaults: SessionConfig {
            replicates,
            ..SessionConfig::default()
        },
        ..Default::default()
    });
    for path in datasets {
        let id = state
            .load_dataset(path)
            .map_err(|e| CliError::Validation(format!("{}: {}", path.display(), e.message)))?;
        eprintln!("loaded {} as {id}", path.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime
        .block_on(netmine_server::serve(addr, state))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_synthetic(dir: &Path, seed: u64) -> Result<()> {
    let spec = SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    };
    let (net, truth) = synthetic_epidemic(&spec);
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };

    let attributes: Vec<&String> = net.schema().keys().collect();
    let mut nodes = String::from("id");
    for a in &attributes {
        nodes.push(',');
        nodes.push_str(a);
    }
    nodes.push('\n');
    for record in net.nodes() {
        nodes.push_str(&record.id);
        for a in &attributes {
            nodes.push(',');
            match record.attributes.get(*a) {
                Some(AttrValue::Categorical(s)) => nodes.push_str(s),
                Some(AttrValue::Integer(i)) => nodes.push_str(&i.to_string()),
                None => {}
            }
        }
        nodes.push('\n');
    }
    let mut edges = String::from("source,target,direction\n");
    for e in net.edges() {
        let direction = match e.direction {
            Direction::None => "",
            Direction::UToV => "uv",
            Direction::VToU => "vu",
        };
        edges.push_str(&format!("{},{},{direction}\n", net.id(e.u), net.id(e.v)));
    }
    let mut manifest = DatasetManifest::new("nodes.csv", "edges.csv");
    manifest.attributes = net.schema().clone();
    manifest.direction_column = Some("direction".into());
    manifest.year_attribute = Some("year".into());
    let manifest_json = netmine_core::io::canonical_json(
        &serde_json::to_value(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?,
    );

    write("nodes.csv", nodes)?;
    write("edges.csv", edges)?;
    write("manifest.json", manifest_json)?;
    write("truth.json", to_document("synthetic_truth", &truth))?;
    println!(
        "wrote {} nodes and {} edges to {}",
        truth.nodes,
        truth.edges,
        dir.display()
    );
    Ok(())
}
