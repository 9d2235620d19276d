//! Campaign directory, per-mutant pipeline, false-positive filtering, input
//! reuse and the multi-process scheduler.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use mutfuzz_core::drivergen::{
    inject_mutant, parse_capture, subject_without_main, DriverError, DriverPlan, PASS,
};
use mutfuzz_core::fuzz::HavocConfig;
use mutfuzz_core::layout::AbiProfile;
use mutfuzz_core::lexer::{parse_char_literal, parse_int_literal, TokenKind};
use mutfuzz_core::metrics::CampaignReport;
use mutfuzz_core::mutgen::{generate_mutants, sha256_hex, MutantSpec, Operator};
use mutfuzz_core::parser::Unit;
use mutfuzz_core::seedgen::{build_seed_files, seed_file_name, SeedTable};
use mutfuzz_core::signature::{signature_of, FunctionSignature};
use mutfuzz_core::triage::{
    classify_execution, decide_status, Classification, KillingInput, MutantVerdict, Provenance, Status,
};

use crate::config::{Annotations, CampaignConfig, FuzzerKind};
use crate::exec;
use crate::fuzzer::{external_adapter, fuzz_loop, Decision, Finding, FindingDirs, FuzzConfig};
use crate::manifest::{FunctionEntry, Manifest, ManifestEntry, ManifestError};
use crate::rt;
use crate::tce;
use crate::toolchain::{BuildError, Toolchain};

pub const CONFIG_FILE: &str = "campaign.json";
pub const ORIGINAL_UNIT: &str = "unit.i";
pub const DRIVER_UNIT: &str = "unit.c";
pub const MUTANT_UNIT: &str = "unit_mut.c";
pub const VERDICT_FILE: &str = "verdict.json";
/// ABI profile resolved at preparation, reused by every worker.
pub const ABI_FILE: &str = "abi.json";

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("build failed for {context}: {source}")]
    BuildFailure { context: String, source: BuildError },
    #[error("{0}")]
    Setup(String),
    #[error("unknown mutant {0}")]
    UnknownMutant(String),
    #[error("mutant {mutant}: {source}")]
    Fuzz { mutant: String, source: crate::fuzzer::FuzzError },
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn setup<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CampaignError + '_ {
    move |e| CampaignError::Setup(format!("{what}: {e}"))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unhex(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 {
        return None;
    }
    (0..s.len() / 2).map(|i| u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()).collect()
}

/// PRNG seed of one mutant, independent of scheduling order.
pub fn mutant_seed(mutant_id: &str, campaign_seed: u64) -> u64 {
    let h = sha256_hex(mutant_id.as_bytes());
    u64::from_str_radix(&h[..16], 16).unwrap_or(0) ^ campaign_seed
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

/// Integer, character and floating literals of a function body, with their
/// neighbours, as little-endian byte strings for the havoc dictionary.
/// Floating literals are added negated too (`-180.0` lexes as a minus and a
/// literal) in both single and double precision.
pub fn literal_dictionary(unit: &Unit, function: &str) -> Vec<Vec<u8>> {
    let Some(body) = unit.function(function).and_then(|f| f.definition.as_ref()).map(|d| d.body_span) else {
        return Vec::new();
    };
    let mut values: Vec<i64> = Vec::new();
    let mut floats: Vec<f64> = Vec::new();
    for t in unit.tokens() {
        if t.start < body.start || t.end > body.end {
            continue;
        }
        let text = t.text(&unit.source);
        if t.kind == TokenKind::Float {
            if let Ok(f) = text.trim_end_matches(['f', 'F', 'l', 'L']).parse::<f64>() {
                for d in [f, -f, f + 1.0, f - 1.0, -f + 1.0, -f - 1.0] {
                    if !floats.contains(&d) {
                        floats.push(d);
                    }
                }
            }
            continue;
        }
        let v = match t.kind {
            TokenKind::Int => parse_int_literal(text).and_then(|(v, _)| i64::try_from(v).ok()),
            TokenKind::Char => parse_char_literal(text),
            _ => None,
        };
        if let Some(v) = v {
            for d in [v, v.wrapping_add(1), v.wrapping_sub(1)] {
                if !values.contains(&d) {
                    values.push(d);
                }
            }
        }
    }
    let mut out = Vec::new();
    for v in values.into_iter().take(64) {
        for w in [1usize, 2, 4, 8] {
            let fits = w == 8 || (v >= -(1i64 << (8 * w - 1)) && v < (1i64 << (8 * w)));
            if fits {
                out.push(v.to_le_bytes()[..w].to_vec());
            }
        }
    }
    for f in floats.into_iter().take(64) {
        out.push(f.to_le_bytes().to_vec());
        out.push((f as f32).to_le_bytes().to_vec());
    }
    out
}

/// Executables of one mutant.
#[derive(Debug, Clone)]
pub struct MutantBuild {
    pub dir: PathBuf,
    pub fuzz: PathBuf,
    pub fp: PathBuf,
}

/// Outcome of replaying one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpVerdict {
    Confirmed,
    Rejected,
}

/// Parsed unit, signature and plan of one function.
pub struct FunctionContext {
    pub unit: Unit,
    pub signature: FunctionSignature,
    pub plan: DriverPlan,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReuseSummary {
    pub wall_time_s: f64,
    pub replays: usize,
    pub new_kills: Vec<String>,
}

pub struct Campaign {
    pub dir: PathBuf,
    pub cfg: CampaignConfig,
    pub manifest: Manifest,
    pub toolchain: Toolchain,
    pub abi: AbiProfile,
    annotations: Annotations,
}

impl Campaign {
    fn rt_dir(dir: &Path) -> PathBuf {
        dir.join("rt")
    }

    fn rt_obj(&self) -> PathBuf {
        Self::rt_dir(&self.dir).join(rt::SOURCE_NAME).with_extension("o")
    }

    fn resolve_abi(cfg: &CampaignConfig, tc: &Toolchain, scratch: &Path) -> Result<AbiProfile, CampaignError> {
        let native = || tc.probe_abi(scratch).map_err(|source| CampaignError::BuildFailure { context: "ABI probe".into(), source });
        match cfg.abi.as_str() {
            "native" => native(),
            name => {
                let abi = AbiProfile::by_name(name).ok_or_else(|| CampaignError::Setup(format!("unknown ABI `{name}`")))?;
                if let Ok(host) = native() {
                    if (host.int, host.long, host.pointer, host.double) != (abi.int, abi.long, abi.pointer, abi.double) {
                        log::warn!("ABI profile `{name}` differs from the host; seed layouts may not match the drivers");
                    }
                }
                Ok(abi)
            }
        }
    }

    /// Steps before fuzzing: runtime, preprocessing, seeds, mutants and
    /// trivial-compiler-equivalence pruning.
    pub fn prepare(cfg: CampaignConfig, dir: &Path) -> Result<Campaign, CampaignError> {
        cfg.validate().map_err(setup("config"))?;
        std::fs::create_dir_all(dir)?;
        let dir = dir.canonicalize()?;
        let tc = Toolchain::new(cfg.build.clone());
        let rt_src = rt::write_runtime(&Self::rt_dir(&dir))?;
        tc.compile_runtime(&rt_src).map_err(|source| CampaignError::BuildFailure { context: "runtime".into(), source })?;
        let scratch = dir.join("tmp");
        std::fs::create_dir_all(&scratch)?;
        let abi = Self::resolve_abi(&cfg, &tc, &scratch)?;
        let annotations = cfg.annotations().map_err(setup("annotations"))?;
        let operators: Vec<Operator> = cfg.operators.iter().filter_map(|o| o.parse().ok()).collect();
        let table = SeedTable::default();

        let mut manifest = Manifest::default();
        let mut seen = HashSet::new();
        for subject in &cfg.subjects {
            let text = tc
                .preprocess(&subject.file)
                .map_err(|source| CampaignError::BuildFailure { context: subject.file.display().to_string(), source })?;
            let unit = Unit::parse_lenient(&text).map_err(setup(&subject.file.display().to_string()))?;
            let names: Vec<String> = if subject.functions.is_empty() {
                unit.functions.iter().filter(|f| f.definition.is_some() && f.name != "main").map(|f| f.name.clone()).collect()
            } else {
                subject.functions.clone()
            };
            let file_label = subject.file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            for name in names {
                if !seen.insert(name.clone()) {
                    return Err(CampaignError::Setup(format!("function `{name}` appears in two subjects")));
                }
                let mut entry = FunctionEntry { name: name.clone(), source: subject.file.clone(), skipped: None };
                let fdir = dir.join(&name);
                std::fs::create_dir_all(fdir.join("seeds"))?;
                std::fs::write(fdir.join(ORIGINAL_UNIT), &unit.source)?;
                std::fs::write(fdir.join(DRIVER_UNIT), subject_without_main(&unit))?;
                let mut u = unit.clone();
                let plan = signature_of(&mut u, &name, annotations.get(&name))
                    .map_err(|e| e.to_string())
                    .and_then(|sig| DriverPlan::new(&u.types, &sig, &abi).map_err(|e| e.to_string()));
                let plan = match plan {
                    Ok(p) => p,
                    Err(reason) => {
                        log::warn!("skipping {name}: {reason}");
                        entry.skipped = Some(reason);
                        manifest.functions.push(entry);
                        continue;
                    }
                };
                for (k, seed) in build_seed_files(&plan, &table, abi.int.size).iter().enumerate() {
                    std::fs::write(fdir.join("seeds").join(seed_file_name(k)), seed)?;
                }
                let mut mutants = generate_mutants(&unit, &name, &file_label).map_err(setup(&name))?;
                if !operators.is_empty() {
                    mutants.retain(|m| m.operator.is_some_and(|o| operators.contains(&o)));
                }
                let classes = tce::prune(&tc, &unit, &name, mutants, &scratch, cfg.workers)
                    .map_err(|source| CampaignError::BuildFailure { context: format!("TCE of {name}"), source })?;
                manifest.mutants.extend(classes.into_iter().map(|(spec, tce)| ManifestEntry { spec, tce }));
                manifest.functions.push(entry);
            }
        }
        manifest.write(&dir)?;
        let snapshot = serde_json::to_vec_pretty(&cfg).expect("serializable");
        std::fs::write(dir.join(CONFIG_FILE), snapshot)?;
        std::fs::write(dir.join(ABI_FILE), serde_json::to_vec_pretty(&abi).expect("serializable"))?;
        Ok(Campaign { dir, cfg, manifest, toolchain: tc, abi, annotations })
    }

    /// Adds externally generated mutants of a prepared function, classified
    /// by trivial compiler equivalence like generated ones.
    pub fn add_mutants(&mut self, function: &str, specs: Vec<MutantSpec>) -> Result<usize, CampaignError> {
        let ctx = self.function_context(function)?;
        let scratch = self.dir.join("tmp");
        let classes = tce::prune(&self.toolchain, &ctx.unit, function, specs, &scratch, self.cfg.workers)
            .map_err(|source| CampaignError::BuildFailure { context: format!("TCE of {function}"), source })?;
        let n = classes.len();
        self.manifest.mutants.extend(classes.into_iter().map(|(spec, tce)| ManifestEntry { spec, tce }));
        self.manifest.write(&self.dir)?;
        Ok(n)
    }

    pub fn open(dir: &Path) -> Result<Campaign, CampaignError> {
        let dir = dir.canonicalize()?;
        let cfg: CampaignConfig =
            serde_json::from_slice(&std::fs::read(dir.join(CONFIG_FILE))?).map_err(setup(CONFIG_FILE))?;
        let manifest = Manifest::read(&dir)?;
        let tc = Toolchain::new(cfg.build.clone());
        let scratch = dir.join("tmp");
        std::fs::create_dir_all(&scratch)?;
        let abi = serde_json::from_slice(&std::fs::read(dir.join(ABI_FILE))?).map_err(setup(ABI_FILE))?;
        let annotations = cfg.annotations().map_err(setup("annotations"))?;
        Ok(Campaign { dir, cfg, manifest, toolchain: tc, abi, annotations })
    }

    pub fn function_context(&self, function: &str) -> Result<FunctionContext, CampaignError> {
        let text = std::fs::read_to_string(self.dir.join(function).join(ORIGINAL_UNIT))?;
        let mut unit = Unit::parse_lenient(&text).map_err(setup(function))?;
        let signature = signature_of(&mut unit, function, self.annotations.get(function)).map_err(setup(function))?;
        let plan = DriverPlan::new(&unit.types, &signature, &self.abi)?;
        Ok(FunctionContext { unit, signature, plan })
    }

    pub fn spec(&self, mutant_id: &str) -> Result<&MutantSpec, CampaignError> {
        self.manifest.get(mutant_id).map(|m| &m.spec).ok_or_else(|| CampaignError::UnknownMutant(mutant_id.into()))
    }

    pub fn kept_ids(&self) -> Vec<String> {
        self.manifest.kept().map(|m| m.mutant_id.clone()).collect()
    }

    pub fn mutant_dir(&self, spec: &MutantSpec) -> PathBuf {
        self.dir.join(&spec.function).join(&spec.mutant_id)
    }

    pub fn verdict_path(&self, spec: &MutantSpec) -> PathBuf {
        self.mutant_dir(spec).join("verdict").join(VERDICT_FILE)
    }

    pub fn seeds(&self, function: &str) -> Result<Vec<Vec<u8>>, CampaignError> {
        let mut out = Vec::new();
        for k in 0.. {
            let p = self.dir.join(function).join("seeds").join(seed_file_name(k));
            if !p.exists() {
                break;
            }
            out.push(std::fs::read(p)?);
        }
        Ok(out)
    }

    fn build(&self, src: &Path, out: &Path, fdir: &Path, instrument: bool) -> Result<(), CampaignError> {
        let rt_dir = Self::rt_dir(&self.dir);
        let drivers = src.parent().unwrap_or(fdir);
        self.toolchain
            .build_driver(src, &[drivers, fdir, &rt_dir], &self.rt_obj(), out, instrument)
            .map_err(|source| CampaignError::BuildFailure { context: src.display().to_string(), source })
    }

    /// Writes the injected unit and both differential drivers and compiles
    /// them. Reuses executables from an earlier build.
    pub fn build_mutant(&self, spec: &MutantSpec, ctx: &FunctionContext) -> Result<MutantBuild, CampaignError> {
        let dir = self.mutant_dir(spec);
        let drivers = dir.join("drivers");
        for sub in ["drivers", "seeds", "crashes", "verdict"] {
            std::fs::create_dir_all(dir.join(sub))?;
        }
        let fuzz = drivers.join(format!("{}_fuzz", spec.mutant_id));
        let fp = drivers.join(format!("{}_fp", spec.mutant_id));
        if fuzz.exists() && fp.exists() {
            return Ok(MutantBuild { dir, fuzz, fp });
        }
        let injected = inject_mutant(&ctx.unit, Some(spec), &spec.function)?;
        std::fs::write(drivers.join(MUTANT_UNIT), injected)?;
        let fuzz_src = fuzz.with_extension("c");
        let fp_src = fp.with_extension("c");
        std::fs::write(&fuzz_src, ctx.plan.gen_fuzz_driver(MUTANT_UNIT))?;
        std::fs::write(&fp_src, ctx.plan.gen_fp_driver(MUTANT_UNIT))?;
        let fdir = self.dir.join(&spec.function);
        self.build(&fuzz_src, &fuzz, &fdir, true)?;
        self.build(&fp_src, &fp, &fdir, false)?;
        for (k, s) in self.seeds(&spec.function)?.iter().enumerate() {
            std::fs::write(dir.join("seeds").join(seed_file_name(k)), s)?;
        }
        Ok(MutantBuild { dir, fuzz, fp })
    }

    fn exec_timeout(&self) -> Duration {
        Duration::from_millis(self.cfg.exec_timeout_ms)
    }

    fn replay(&self, bin: &Path, input: &[u8], work: &Path, timeout: Duration) -> std::io::Result<exec::ExecResult> {
        let path = work.join("replay_input");
        std::fs::write(&path, input)?;
        exec::run(bin, [&path], &[(rt::COVERAGE_MAP_ENV, OsStr::new(""))], timeout)
    }

    /// Replays a candidate on the fuzz driver and on the false-positive
    /// driver. A kill stands only if it reproduces every time and the
    /// original agrees with itself; a timeout stands if the original alone finishes within
    /// the configured multiple of the execution timeout.
    pub fn fp_check(&self, build: &MutantBuild, input: &[u8], class: Classification) -> Result<FpVerdict, CampaignError> {
        let work = build.dir.join("verdict");
        let slack = self.exec_timeout().mul_f64(self.cfg.timeout_factor.max(1.0));
        if class == Classification::TimeoutCandidate {
            let r = self.replay(&build.fp, input, &work, slack)?;
            let ok = matches!(classify_execution(&r.stdout, r.exit), Ok(Classification::NoKill));
            return Ok(if ok { FpVerdict::Confirmed } else { FpVerdict::Rejected });
        }
        for _ in 0..self.cfg.reproduce_runs.max(1) {
            let again = self.replay(&build.fuzz, input, &work, slack)?;
            match classify_execution(&again.stdout, again.exit) {
                Ok(c) if c == class => {}
                _ => return Ok(FpVerdict::Rejected),
            }
        }
        for _ in 0..self.cfg.fp_repeats.max(1) {
            let r = self.replay(&build.fp, input, &work, slack)?;
            if !matches!(classify_execution(&r.stdout, r.exit), Ok(Classification::NoKill)) {
                return Ok(FpVerdict::Rejected);
            }
        }
        Ok(FpVerdict::Confirmed)
    }

    /// Captures the original's outputs for `input` and emits a regression
    /// test driver; returns its path relative to the campaign directory
    /// after checking that it passes.
    pub fn emit_test(
        &self,
        spec: &MutantSpec,
        ctx: &FunctionContext,
        build: &MutantBuild,
        input: &[u8],
        n: usize,
    ) -> Result<Result<String, String>, CampaignError> {
        let drivers = build.dir.join("drivers");
        let fdir = self.dir.join(&spec.function);
        let capture = drivers.join(format!("{}_capture", spec.mutant_id));
        if !capture.exists() {
            let src = capture.with_extension("c");
            std::fs::write(&src, ctx.plan.gen_capture_driver(DRIVER_UNIT))?;
            self.build(&src, &capture, &fdir, false)?;
        }
        let r = self.replay(&capture, input, &build.dir.join("verdict"), self.exec_timeout().mul_f64(2.0))?;
        let Some(observed) = parse_capture(&ctx.plan, &r.stdout) else {
            return Ok(Err(format!("capture driver produced no outputs ({:?})", r.exit)));
        };
        let test = drivers.join(format!("{}_test_{n}", spec.mutant_id));
        let src = test.with_extension("c");
        std::fs::write(&src, ctx.plan.gen_test_driver(DRIVER_UNIT, input, &observed)?)?;
        self.build(&src, &test, &fdir, false)?;
        let run = exec::run(&test, std::iter::empty::<&str>(), &[], self.exec_timeout().mul_f64(2.0))?;
        let passed = run.exit == mutfuzz_core::triage::ExitKind::Normal(0) && run.stdout.lines().any(|l| l == PASS);
        let rel = src.strip_prefix(&self.dir).unwrap_or(&src).display().to_string();
        Ok(if passed { Ok(rel) } else { Err(format!("test driver {rel} did not pass on the original")) })
    }

    fn fuzz_config(&self, spec: &MutantSpec, ctx: &FunctionContext, budget: Duration) -> FuzzConfig {
        let mut dictionary = literal_dictionary(&ctx.unit, &spec.function);
        let table = SeedTable::default();
        dictionary.extend(table.float32.iter().map(|v| v.to_le_bytes().to_vec()));
        dictionary.extend(table.float64.iter().map(|v| v.to_le_bytes().to_vec()));
        FuzzConfig {
            budget,
            exec_timeout: self.exec_timeout(),
            prng_seed: mutant_seed(&spec.mutant_id, self.cfg.seed),
            havoc: HavocConfig { dictionary, ..HavocConfig::default() },
        }
    }

    /// Generate, compile, fuzz, triage, filter and emit tests for one mutant.
    /// The verdict is persisted atomically.
    pub fn run_mutant(&self, mutant_id: &str) -> Result<MutantVerdict, CampaignError> {
        let spec = self.spec(mutant_id)?.clone();
        let ctx = self.function_context(&spec.function)?;
        let build = self.build_mutant(&spec, &ctx)?;
        let seeds = self.seeds(&spec.function)?;
        let budget = Duration::from_secs_f64(self.cfg.budget_s);
        let fcfg = self.fuzz_config(&spec, &ctx, budget);

        let mut confirmed: Vec<(Finding, Provenance)> = Vec::new();
        let mut rejected = 0usize;
        let mut failure: Option<CampaignError> = None;
        let (executions, original_crashes) = match self.cfg.fuzzer {
            FuzzerKind::Builtin => {
                let dirs = FindingDirs {
                    crashes: Some(build.dir.join("crashes")),
                    precondition_violations: Some(build.dir.join("precondition-violations")),
                };
                let work = build.dir.join("verdict");
                let outcome = fuzz_loop(&build.fuzz, &seeds, &fcfg, &dirs, &work, |f| {
                    match self.fp_check(&build, &f.input, f.classification) {
                        Ok(FpVerdict::Confirmed) => {
                            let p = if f.from_seed { Provenance::Seed } else { Provenance::Fuzzed };
                            confirmed.push((f.clone(), p));
                            Decision::Halt
                        }
                        Ok(FpVerdict::Rejected) => {
                            rejected += 1;
                            if rejected >= self.cfg.max_fp_candidates.max(1) {
                                Decision::Halt
                            } else {
                                Decision::Continue
                            }
                        }
                        Err(e) => {
                            failure = Some(e);
                            Decision::Halt
                        }
                    }
                })
                .map_err(|source| CampaignError::Fuzz { mutant: mutant_id.into(), source })?;
                (outcome.executions, outcome.original_crashes.len())
            }
            FuzzerKind::External => {
                let template = &self.cfg.external.as_ref().expect("validated").command;
                let out_dir = build.dir.join("external");
                let start = Instant::now();
                let inputs = external_adapter(template, &build.dir.join("seeds"), &out_dir, &build.fuzz, budget)
                    .map_err(|source| CampaignError::Fuzz { mutant: mutant_id.into(), source })?;
                let mut originals = 0;
                for (n, input) in inputs.iter().enumerate() {
                    let r = self.replay(&build.fuzz, input, &build.dir.join("verdict"), self.exec_timeout())?;
                    std::fs::write(build.dir.join("crashes").join(format!("{}.bin", n + 1)), input)?;
                    std::fs::write(build.dir.join("crashes").join(format!("{}.log", n + 1)), &r.stdout)?;
                    match classify_execution(&r.stdout, r.exit) {
                        Ok(c) if c.is_kill_candidate() => {
                            if self.fp_check(&build, input, c)? == FpVerdict::Confirmed {
                                let f = Finding {
                                    input: input.clone(),
                                    log: r.stdout,
                                    exit: r.exit,
                                    classification: c,
                                    at: start.elapsed(),
                                    from_seed: seeds.contains(input),
                                };
                                let p = if f.from_seed { Provenance::Seed } else { Provenance::Fuzzed };
                                confirmed.push((f, p));
                                break;
                            }
                            rejected += 1;
                        }
                        Ok(Classification::OriginalCrash | Classification::OriginalTimeout) => originals += 1,
                        _ => {}
                    }
                }
                (inputs.len() as u64, originals)
            }
        };
        if let Some(e) = failure {
            return Err(e);
        }

        let classes: Vec<Classification> = confirmed.iter().map(|(f, _)| f.classification).collect();
        let mut v = MutantVerdict::new(mutant_id, &spec.function, decide_status(&classes, rejected, original_crashes));
        v.executions = executions;
        v.false_positives = rejected as u32;
        v.original_crashes = original_crashes as u32;
        v.wall_time_to_first_kill = confirmed.first().map(|(f, _)| f.at.as_secs_f64());
        v.killing_inputs = confirmed
            .iter()
            .map(|(f, p)| KillingInput {
                input_hex: hex(&f.input),
                at_s: f.at.as_secs_f64(),
                provenance: *p,
                classification: f.classification,
            })
            .collect();
        if v.status.is_killed() && self.cfg.emit_tests {
            self.attach_test(&spec, &ctx, &build, &mut v)?;
        }
        self.write_verdict(&spec, &v)?;
        Ok(v)
    }

    fn attach_test(
        &self,
        spec: &MutantSpec,
        ctx: &FunctionContext,
        build: &MutantBuild,
        v: &mut MutantVerdict,
    ) -> Result<(), CampaignError> {
        let Some(input) = v.killing_inputs.first().and_then(|k| unhex(&k.input_hex)) else { return Ok(()) };
        match self.emit_test(spec, ctx, build, &input, v.test_drivers.len() + 1)? {
            Ok(path) => v.test_drivers.push(path),
            Err(msg) => v.note = Some(msg),
        }
        Ok(())
    }

    pub fn write_verdict(&self, spec: &MutantSpec, v: &MutantVerdict) -> Result<(), CampaignError> {
        let path = self.verdict_path(spec);
        std::fs::create_dir_all(path.parent().expect("verdict dir"))?;
        write_atomic(&path, &serde_json::to_vec_pretty(v).expect("serializable"))?;
        Ok(())
    }

    pub fn read_verdict(&self, mutant_id: &str) -> Option<MutantVerdict> {
        let spec = self.spec(mutant_id).ok()?;
        serde_json::from_slice(&std::fs::read(self.verdict_path(spec)).ok()?).ok()
    }

    /// All verdicts present on disk, sorted by mutant id.
    pub fn verdicts(&self) -> Vec<MutantVerdict> {
        let mut out: Vec<MutantVerdict> = self.kept_ids().iter().filter_map(|id| self.read_verdict(id)).collect();
        out.sort_by(|a, b| a.mutant_id.cmp(&b.mutant_id));
        out
    }

    /// Replays the confirmed killing inputs of each function against its
    /// mutants that are still alive. Verdicts are updated in place and on
    /// disk; killed verdicts are never touched.
    pub fn reuse_inputs(&self, verdicts: &mut [MutantVerdict]) -> Result<ReuseSummary, CampaignError> {
        let start = Instant::now();
        let mut summary = ReuseSummary::default();
        let mut by_function: BTreeMap<String, Vec<Vec<u8>>> = BTreeMap::new();
        for v in verdicts.iter().filter(|v| v.status.is_killed()) {
            let pool = by_function.entry(v.function.clone()).or_default();
            for k in &v.killing_inputs {
                if let Some(bytes) = unhex(&k.input_hex) {
                    pool.push(bytes);
                }
            }
        }
        for pool in by_function.values_mut() {
            let mut seen = HashSet::new();
            pool.retain(|b| seen.insert(sha256_hex(b)));
        }
        for v in verdicts.iter_mut() {
            if v.status.is_killed() || v.status == Status::Error {
                continue;
            }
            let Some(inputs) = by_function.get(&v.function) else { continue };
            let spec = self.spec(&v.mutant_id)?.clone();
            let ctx = self.function_context(&spec.function)?;
            let build = self.build_mutant(&spec, &ctx)?;
            for input in inputs {
                summary.replays += 1;
                let r = self.replay(&build.fuzz, input, &build.dir.join("verdict"), self.exec_timeout())?;
                let Ok(c) = classify_execution(&r.stdout, r.exit) else { continue };
                if !c.is_kill_candidate() {
                    continue;
                }
                if self.fp_check(&build, input, c)? == FpVerdict::Rejected {
                    continue;
                }
                let at = start.elapsed().as_secs_f64();
                v.status = decide_status(&[c], 0, 0);
                v.killing_inputs.push(KillingInput {
                    input_hex: hex(input),
                    at_s: at,
                    provenance: Provenance::Reused,
                    classification: c,
                });
                v.note = Some(format!("killed by a reused input after {at:.3} s of replay"));
                if self.cfg.emit_tests {
                    self.attach_test(&spec, &ctx, &build, v)?;
                }
                summary.new_kills.push(v.mutant_id.clone());
                break;
            }
            self.write_verdict(&spec, v)?;
        }
        summary.wall_time_s = start.elapsed().as_secs_f64();
        Ok(summary)
    }

    /// Runs every mutant in its own worker process, at most `workers` at a
    /// time. A worker that dies without a verdict is retried once; the
    /// mutant is then reported as ERROR.
    pub fn schedule(&self, ids: &[String], workers: usize, worker_exe: &Path) -> Vec<MutantVerdict> {
        let mut queue: VecDeque<(String, u32)> = ids.iter().map(|id| (id.clone(), 0)).collect();
        let mut running: Vec<(Child, String, u32, Instant)> = Vec::new();
        let mut done: Vec<MutantVerdict> = Vec::new();
        let hard_limit = Duration::from_secs_f64(self.cfg.budget_s * 1.5 + 120.0);
        while !queue.is_empty() || !running.is_empty() {
            while running.len() < workers.max(1) {
                let Some((id, attempt)) = queue.pop_front() else { break };
                if let Ok(spec) = self.spec(&id) {
                    let _ = std::fs::remove_file(self.verdict_path(spec));
                }
                let child = Command::new(worker_exe)
                    .args(["worker", "--campaign"])
                    .arg(&self.dir)
                    .args(["--mutant", &id])
                    .stdin(Stdio::null())
                    .stdout(Stdio::null())
                    .spawn();
                match child {
                    Ok(c) => running.push((c, id, attempt, Instant::now())),
                    Err(e) => {
                        let mut v = MutantVerdict::new(&id, self.function_of(&id), Status::Error);
                        v.note = Some(format!("cannot start worker: {e}"));
                        done.push(v);
                    }
                }
            }
            std::thread::sleep(Duration::from_millis(20));
            let mut i = 0;
            while i < running.len() {
                let (child, _, _, started) = &mut running[i];
                let finished = match child.try_wait() {
                    Ok(Some(status)) => Some(status.success()),
                    Ok(None) if started.elapsed() > hard_limit => {
                        let _ = child.kill();
                        let _ = child.wait();
                        Some(false)
                    }
                    Ok(None) => None,
                    Err(_) => Some(false),
                };
                let Some(ok) = finished else {
                    i += 1;
                    continue;
                };
                let (_, id, attempt, _) = running.swap_remove(i);
                match self.read_verdict(&id) {
                    Some(v) if ok => done.push(v),
                    _ if attempt == 0 => {
                        log::warn!("worker for {id} failed; retrying");
                        queue.push_back((id, 1));
                    }
                    _ => {
                        log::warn!("worker for {id} failed twice; marking ERROR");
                        let mut v = MutantVerdict::new(&id, self.function_of(&id), Status::Error);
                        v.note = Some("worker crashed twice".into());
                        done.push(v);
                    }
                }
            }
        }
        done.sort_by(|a, b| a.mutant_id.cmp(&b.mutant_id));
        done
    }

    fn function_of(&self, id: &str) -> &str {
        self.spec(id).map(|s| s.function.as_str()).unwrap_or("")
    }

    pub fn report(&self, verdicts: &[MutantVerdict]) -> CampaignReport {
        CampaignReport::build(self.manifest.totals(), verdicts, self.cfg.timeline_bin_s)
    }
}
