use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mutfuzz::campaign::Campaign;
use mutfuzz::config::{Annotations, CampaignConfig, FuzzerKind};
use mutfuzz::export;
use mutfuzz::manifest::import_external;
use mutfuzz::toolchain::{BuildConfig, Toolchain};
use mutfuzz_core::drivergen::DriverPlan;
use mutfuzz_core::layout::AbiProfile;
use mutfuzz_core::parser::Unit;
use mutfuzz_core::seedgen::{build_seed_files, hexdump, seed_file_name, SeedTable};
use mutfuzz_core::signature::signature_of;

#[derive(Parser)]
#[command(name = "mutfuzz", version, about = "Fuzzing-based mutation testing for C functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the sizes the host compiler uses for primitive types.
    ProbeAbi {
        #[arg(long, default_value = "cc")]
        cc: String,
    },
    /// Print the input layout of a function's driver.
    Layout(FunctionArgs),
    /// Print the seed files of a function as hex dumps.
    Seeds(FunctionArgs),
    /// Generate and prune mutants without fuzzing.
    Mutants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seconds of fuzzing per mutant.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        fuzzer: Option<FuzzerKind>,
        /// Replay killing inputs against the mutants left alive.
        #[arg(long)]
        reuse: bool,
    },
    /// Recompute the report of a finished campaign.
    Report {
        #[arg(long)]
        campaign: PathBuf,
    },
    /// Add externally generated mutant files to a prepared campaign.
    ImportMutants {
        #[arg(long)]
        campaign: PathBuf,
        /// Subject file the mutants were generated from.
        #[arg(long)]
        subject: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Process one mutant of a prepared campaign (used by `run`).
    #[command(hide = true)]
    Worker {
        #[arg(long)]
        campaign: PathBuf,
        #[arg(long)]
        mutant: String,
    },
}

#[derive(clap::Args)]
struct FunctionArgs {
    file: PathBuf,
    function: String,
    /// `native`, `lp64` or `ilp32`.
    #[arg(long, default_value = "native")]
    abi: String,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value = "cc")]
    cc: String,
}

fn abi_for(name: &str, tc: &Toolchain) -> Result<AbiProfile> {
    if name == "native" {
        let scratch = tempfile::tempdir()?;
        return Ok(tc.probe_abi(scratch.path())?);
    }
    AbiProfile::by_name(name).with_context(|| format!("unknown ABI `{name}`"))
}

fn plan_for(args: &FunctionArgs) -> Result<(DriverPlan, AbiProfile)> {
    let tc = Toolchain::new(BuildConfig { cc: args.cc.clone(), ..BuildConfig::default() });
    let abi = abi_for(&args.abi, &tc)?;
    let text = tc.preprocess(&args.file)?;
    let mut unit = Unit::parse_lenient(&text)?;
    let ann = match &args.annotations {
        Some(p) => Annotations::load(p)?,
        None => Annotations::default(),
    };
    let sig = signature_of(&mut unit, &args.function, ann.get(&args.function))?;
    Ok((DriverPlan::new(&unit.types, &sig, &abi)?, abi))
}

fn run_campaign(campaign: &Campaign, reuse: bool) -> Result<bool> {
    let ids = campaign.kept_ids();
    log::info!("fuzzing {} mutants with {} workers", ids.len(), campaign.cfg.workers);
    let exe = std::env::current_exe()?;
    let mut verdicts = campaign.schedule(&ids, campaign.cfg.workers, &exe);
    if reuse {
        let summary = campaign.reuse_inputs(&mut verdicts)?;
        println!(
            "reuse: {} replays, {} new kills in {:.2} s",
            summary.replays,
            summary.new_kills.len(),
            summary.wall_time_s
        );
    }
    write_report(campaign, &verdicts)?;
    Ok(verdicts.iter().all(|v| v.status != mutfuzz_core::triage::Status::Error))
}

fn write_report(campaign: &Campaign, verdicts: &[mutfuzz_core::triage::MutantVerdict]) -> Result<()> {
    let report = campaign.report(verdicts);
    export::write_all(&campaign.dir, &report, verdicts)?;
    let t = &report.totals;
    println!(
        "generated {} | stillborn {} | equivalent {} | duplicate {} | tested {}",
        t.generated, t.stillborn, t.tce_equivalent, t.tce_duplicate, t.tested
    );
    for (status, n) in &report.status_counts {
        println!("{:<24}{n}", status.as_str());
    }
    match report.mutation_score {
        Some(ms) => println!("mutation score: {ms:.2}%"),
        None => println!("mutation score: n/a"),
    }
    println!("report: {}", campaign.dir.join(export::REPORT_JSON).display());
    Ok(())
}

fn load_config(path: &Path) -> Result<CampaignConfig> {
    Ok(CampaignConfig::load(path)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::ProbeAbi { cc } => {
            let tc = Toolchain::new(BuildConfig { cc, ..BuildConfig::default() });
            println!("{:#?}", abi_for("native", &tc)?);
        }
        Cmd::Layout(args) => {
            let (plan, _) = plan_for(&args)?;
            println!("{} input bytes", plan.input_len);
            for s in &plan.segments {
                println!("{:>8} {:>8}  {:<16} {:?}", s.offset, s.size, s.param, s.fill);
            }
            for c in &plan.compare {
                println!("compare {} ({} bytes)", c.label, c.size);
            }
        }
        Cmd::Seeds(args) => {
            let (plan, abi) = plan_for(&args)?;
            for (k, seed) in build_seed_files(&plan, &SeedTable::default(), abi.int.size).iter().enumerate() {
                println!("{} ({} bytes)", seed_file_name(k), seed.len());
                print!("{}", hexdump(seed));
            }
        }
        Cmd::Mutants { config, out } => {
            let campaign = Campaign::prepare(load_config(&config)?, &out)?;
            let t = campaign.manifest.totals();
            for m in &campaign.manifest.mutants {
                println!("{}\t{:?}\t{}", m.spec.mutant_id, m.tce, m.spec.replacement);
            }
            println!("generated {} | kept {}", t.generated, t.tested);
        }
        Cmd::Run { config, out, budget, workers, fuzzer, reuse } => {
            let mut cfg = load_config(&config)?;
            if let Some(b) = budget {
                cfg.budget_s = b;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(f) = fuzzer {
                cfg.fuzzer = f;
            }
            cfg.reuse |= reuse;
            let reuse = cfg.reuse;
            let campaign = Campaign::prepare(cfg, &out)?;
            return run_campaign(&campaign, reuse);
        }
        Cmd::Report { campaign } => {
            let campaign = Campaign::open(&campaign)?;
            write_report(&campaign, &campaign.verdicts())?;
        }
        Cmd::ImportMutants { campaign, subject, files } => {
            let mut campaign = Campaign::open(&campaign)?;
            let text = campaign.toolchain.preprocess(&subject)?;
            let unit = Unit::parse_lenient(&text)?;
            let mut mutated = Vec::new();
            for f in &files {
                let body = campaign.toolchain.preprocess(f)?;
                mutated.push((f.display().to_string(), body));
            }
            let label = subject.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let (specs, skipped) = import_external(&unit, &label, &mutated);
            for (name, why) in &skipped {
                eprintln!("skipped {name}: {why}");
            }
            let mut by_function: std::collections::BTreeMap<String, Vec<_>> = Default::default();
            for s in specs {
                by_function.entry(s.function.clone()).or_default().push(s);
            }
            for (function, specs) in by_function {
                if campaign.manifest.functions.iter().all(|f| f.name != function || f.skipped.is_some()) {
                    bail!("function `{function}` is not part of the campaign");
                }
                let n = campaign.add_mutants(&function, specs)?;
                println!("{function}: imported {n} mutants");
            }
        }
        Cmd::Worker { campaign, mutant } => {
            let campaign = Campaign::open(&campaign)?;
            let v = campaign.run_mutant(&mutant)?;
            log::info!("{mutant}: {}", v.status.as_str());
        }
    }
    Ok(true)
}
