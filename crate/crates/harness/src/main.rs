use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use conceptprobe::adapter::AdapterSpec;
use conceptprobe::dataset::{load_dataset, materialize, verify_dataset, write_dataset, Item, Recipe, Split};
use conceptprobe::eval::{run_eval, EvalOptions};
use conceptprobe::report::EvalReport;
use conceptprobe::service::{serve, ServiceConfig, DEFAULT_IMAGE_SIDE};
use conceptprobe::split::{run_split, SplitConfig};
use conceptprobe::data_root;
use conceptprobe_core::arc::concepts::{FamilyId, BOUNDARY_SUITE, TOP_BOTTOM_SUITE};
use conceptprobe_core::raven::exploit::{exploitability, Attack};
use conceptprobe_core::raven::model::{Attribute, LayoutKind};
use conceptprobe_core::raven::suites::{iid_specs, probe_specs, progression_specs, sameness_specs};
use conceptprobe_core::raven::{Background, ConceptSpec, Family, Strategy};

#[derive(Parser)]
#[command(name = "conceptprobe", version, about = "Concept-based abstraction benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset directory.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Build train/val/test datasets from a TOML config.
    Split {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a context-blind attack on a RAVEN dataset.
    Attack {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "majority-vote")]
        strategy: String,
        /// Write the per-tag CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a solver over a dataset.
    Eval(EvalArgs),
    /// Print the text table of one or more report CSVs. Each argument is
    /// `FILE` or `FILE:SLICE,SLICE` to keep only those slices of that file.
    Table {
        #[arg(required = true)]
        reports: Vec<String>,
    },
    /// Regenerate a dataset from its manifest and compare bytes.
    Verify {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Start the HTTP trial service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        suites: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIDE)]
        image_side: u32,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    Raven(GenRaven),
    Arc(GenArc),
}

#[derive(Args)]
struct GenRaven {
    /// sameness, progression or arithmetic.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated attributes.
    #[arg(long)]
    attrs: Option<String>,
    #[arg(long)]
    layout: Option<String>,
    /// Built-in spec list instead of one spec: probe, sameness, progression, iid.
    #[arg(long, conflicts_with_all = ["family", "attrs", "layout"])]
    suite: Option<String>,
    /// Problems per spec.
    #[arg(short, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// fair or biased.
    #[arg(long, default_value = "fair")]
    answers: String,
    /// free, constant or random.
    #[arg(long, default_value = "free")]
    background: String,
    #[arg(long, default_value = "probe")]
    split: String,
    /// Also write PGM sheets with this panel side.
    #[arg(long)]
    images: Option<u32>,
}

#[derive(Args)]
struct GenArc {
    #[arg(long)]
    family: Option<String>,
    /// probe, top-bottom or boundary.
    #[arg(long, conflicts_with = "family")]
    suite: Option<String>,
    #[arg(short, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "probe")]
    split: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Built-in name (oracle, reference, identity, random[:SEED],
    /// constant[:K], majority-vote), `batch:CMD`, or a shell command.
    #[arg(long)]
    adapter: String,
    /// Defaults to 1 for RAVEN and 3 for ARC.
    #[arg(long)]
    guesses: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seconds per problem.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    image_mode: bool,
    #[arg(long)]
    model: Option<String>,
    /// Per-problem result log; defaults to `<report>.results.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn out_dir(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| data_root().join(default_name))
}

fn parse_split(name: &str) -> anyhow::Result<Split> {
    Split::from_name(name).with_context(|| format!("unknown split {name}"))
}

fn raven_specs(a: &GenRaven) -> anyhow::Result<Vec<ConceptSpec>> {
    let strategy = Strategy::from_name(&a.answers).with_context(|| format!("unknown answers {}", a.answers))?;
    if let Some(suite) = &a.suite {
        let specs = match suite.as_str() {
            "probe" => probe_specs(),
            "sameness" => sameness_specs(),
            "progression" => progression_specs(),
            "iid" => iid_specs(strategy),
            other => bail!("unknown suite {other}"),
        };
        return Ok(specs.into_iter().map(|s| s.with_answers(strategy)).collect());
    }
    let family = a.family.as_deref().context("--family or --suite is required")?;
    let family = Family::from_name(family).with_context(|| format!("unknown family {family}"))?;
    let attrs = a
        .attrs
        .as_deref()
        .context("--attrs is required")?
        .split(',')
        .map(|s| Attribute::from_name(s.trim()).with_context(|| format!("unknown attribute {s}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let layout = a.layout.as_deref().unwrap_or("center");
    let layout = LayoutKind::from_name(layout).with_context(|| format!("unknown layout {layout}"))?;
    let background =
        Background::from_name(&a.background).with_context(|| format!("unknown background {}", a.background))?;
    let spec = ConceptSpec::new(family, &attrs, layout).with_background(background).with_answers(strategy);
    spec.validate()?;
    Ok(vec![spec])
}

fn gen_raven(a: GenRaven) -> anyhow::Result<()> {
    let specs = raven_specs(&a)?;
    let count = a.n * specs.len();
    let name = a.suite.clone().unwrap_or_else(|| specs[0].tag().replace('/', "_"));
    let dir = out_dir(a.out, &name);
    let ds = materialize(parse_split(&a.split)?, a.seed, Recipe::Raven { specs, offset: 0, count, image_side: a.images })?;
    write_dataset(&dir, &ds)?;
    println!("wrote {} problems to {}", ds.items.len(), dir.display());
    Ok(())
}

fn gen_arc(a: GenArc) -> anyhow::Result<()> {
    let plan: Vec<(FamilyId, usize)> = match (&a.family, a.suite.as_deref()) {
        (Some(f), _) => vec![(FamilyId::from_name(f).with_context(|| format!("unknown family {f}"))?, a.n)],
        (None, Some("probe")) => TOP_BOTTOM_SUITE.iter().chain(&BOUNDARY_SUITE).copied().collect(),
        (None, Some("top-bottom")) => TOP_BOTTOM_SUITE.to_vec(),
        (None, Some("boundary")) => BOUNDARY_SUITE.to_vec(),
        (None, Some(other)) => bail!("unknown suite {other}"),
        (None, None) => bail!("--family or --suite is required"),
    };
    let name = a.family.clone().or(a.suite.clone()).unwrap_or_default();
    let dir = out_dir(a.out, &format!("arc-{name}"));
    let ds = materialize(parse_split(&a.split)?, a.seed, Recipe::Arc { plan })?;
    write_dataset(&dir, &ds)?;
    println!("wrote {} tasks to {}", ds.items.len(), dir.display());
    Ok(())
}

fn attack(dataset: &Path, strategy: &str, csv: Option<PathBuf>) -> anyhow::Result<()> {
    let attack = Attack::from_name(strategy).with_context(|| format!("unknown attack {strategy}"))?;
    let ds = load_dataset(dataset)?;
    let problems: Vec<_> = ds
        .items
        .into_iter()
        .filter_map(|i| match i {
            Item::Raven(p) => Some(p),
            Item::Arc(_) => None,
        })
        .collect();
    let report = exploitability(&problems, attack)?;
    match csv {
        Some(path) => {
            std::fs::write(&path, report.to_csv())?;
            println!("{} rate {:.4} over {} problems", attack.name(), report.rate(), report.n);
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let spec = AdapterSpec::parse(&a.adapter)?;
    let guesses = a.guesses.unwrap_or(match ds.manifest.domain {
        conceptprobe::dataset::Domain::Raven => 1,
        conceptprobe::dataset::Domain::Arc => 3,
    });
    let mut opts = EvalOptions::new(guesses);
    opts.timeout = Duration::from_secs(a.timeout);
    opts.workers = a.workers;
    opts.image_mode = a.image_mode;
    opts.model = a.model;
    opts.audit_log = a.log.or_else(|| a.report.as_ref().map(|r| r.with_extension("results.jsonl")));
    let outcome = run_eval(&ds, Some(&a.dataset), &spec, &opts)?;
    if let Some(path) = &a.report {
        std::fs::write(path, outcome.report.to_csv())?;
        std::fs::write(path.with_extension("meta.json"), serde_json::to_string_pretty(&outcome.meta)?)?;
    }
    print!("{}", outcome.report.render_table());
    if outcome.meta.timeouts + outcome.meta.failures > 0 {
        println!("timeouts: {}, failures: {}", outcome.meta.timeouts, outcome.meta.failures);
    }
    Ok(())
}

fn table(reports: &[String]) -> anyhow::Result<()> {
    let mut merged = EvalReport::default();
    for arg in reports {
        let (path, slices) = match arg.rsplit_once(':') {
            Some((p, s)) if !Path::new(arg).exists() => (p, Some(s)),
            _ => (arg.as_str(), None),
        };
        let text = std::fs::read_to_string(path).with_context(|| path.to_string())?;
        let report = EvalReport::from_csv(&text)?;
        match slices {
            Some(s) => merged.merge(&report.select(&s.split(',').map(str::trim).collect::<Vec<_>>())),
            None => merged.merge(&report),
        }
    }
    print!("{}", merged.render_table());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Cmd::Gen(GenCmd::Raven(a)) => gen_raven(a),
        Cmd::Gen(GenCmd::Arc(a)) => gen_arc(a),
        Cmd::Split { config } => {
            let text = std::fs::read_to_string(&config).with_context(|| config.display().to_string())?;
            for dir in run_split(&SplitConfig::from_toml(&text)?, &data_root())? {
                println!("wrote {}", dir.display());
            }
            Ok(())
        }
        Cmd::Attack { dataset, strategy, csv } => attack(&dataset, &strategy, csv),
        Cmd::Eval(a) => eval(a),
        Cmd::Table { reports } => table(&reports),
        Cmd::Verify { dataset } => {
            let differing = verify_dataset(&dataset)?;
            if differing.is_empty() {
                println!("{}: byte-identical", dataset.display());
                Ok(())
            } else {
                for p in &differing {
                    println!("differs: {}", p.display());
                }
                bail!("{} file(s) differ", differing.len())
            }
        }
        Cmd::Serve { port, suites, image_side } => {
            let config = ServiceConfig {
                suites_dir: suites.unwrap_or_else(|| data_root().join("suites")),
                data_root: data_root(),
                image_side,
            };
            tokio::runtime::Runtime::new()?.block_on(serve(port, config))
        }
    }
}
