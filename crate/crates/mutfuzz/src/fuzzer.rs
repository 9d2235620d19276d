//! Fuzzing loops: the built-in engine driving a compiled driver, and an
//! adapter that runs an external fuzzer and collects its crashes.

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use mutfuzz_core::fuzz::{Engine, HavocConfig, Origin};
use mutfuzz_core::triage::{classify_execution, Classification, ExitKind};
use wait_timeout::ChildExt;

use crate::covmap::SharedMap;
use crate::exec::{self, kill_group};
use crate::rt::COVERAGE_MAP_ENV;

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error("cannot run driver {path}: {source}")]
    DriverSpawn { path: PathBuf, source: std::io::Error },
    #[error("no seed inputs")]
    SeedMissing,
    #[error("cannot start external fuzzer: {0}")]
    AdapterSpawn(String),
    #[error("external fuzzer left no output directory at {0}")]
    CrashDirMissing(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub budget: Duration,
    pub exec_timeout: Duration,
    pub prng_seed: u64,
    pub havoc: HavocConfig,
}

/// An execution the triage marked as interesting.
#[derive(Debug, Clone)]
pub struct Finding {
    pub input: Vec<u8>,
    pub log: String,
    pub exit: ExitKind,
    pub classification: Classification,
    pub at: Duration,
    pub from_seed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Halt,
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FuzzEvent {
    NewCoverage { pairs: usize },
    Candidate,
    OriginalCrash,
}

#[derive(Debug, Clone, Default)]
pub struct FuzzOutcome {
    pub candidates: Vec<Finding>,
    pub original_crashes: Vec<Finding>,
    pub executions: u64,
    pub pool_size: usize,
    pub coverage_pairs: usize,
    pub elapsed: Duration,
    pub timeline: Vec<(f64, FuzzEvent)>,
}

fn persist(dir: &Path, n: usize, f: &Finding) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{n}.bin")), &f.input)?;
    std::fs::write(dir.join(format!("{n}.log")), format!("{}\nexit: {:?}\nclass: {:?}\n", f.log, f.exit, f.classification))
}

/// Where findings are written; either may be absent.
#[derive(Debug, Clone, Default)]
pub struct FindingDirs {
    pub crashes: Option<PathBuf>,
    pub precondition_violations: Option<PathBuf>,
}

/// Runs the built-in engine until the budget is spent or `on_candidate`
/// says to halt. Every kill candidate is persisted and passed to the
/// callback; inputs that crash the original are recorded and skipped.
pub fn fuzz_loop(
    driver: &Path,
    seeds: &[Vec<u8>],
    cfg: &FuzzConfig,
    dirs: &FindingDirs,
    work: &Path,
    mut on_candidate: impl FnMut(&Finding) -> Decision,
) -> Result<FuzzOutcome, FuzzError> {
    if seeds.is_empty() {
        return Err(FuzzError::SeedMissing);
    }
    std::fs::create_dir_all(work)?;
    let mut map = SharedMap::create(work)?;
    let map_path = map.path();
    let input_path = work.join("cur_input");
    let mut engine = Engine::new(cfg.prng_seed, cfg.havoc.clone(), seeds.to_vec());
    let mut out = FuzzOutcome::default();
    let start = Instant::now();

    while start.elapsed() < cfg.budget {
        let (input, origin) = engine.next_input();
        std::fs::write(&input_path, &input)?;
        map.reset();
        let env: [(&str, &OsStr); 1] = [(COVERAGE_MAP_ENV, map_path.as_os_str())];
        let res = exec::run(driver, [&input_path], &env, cfg.exec_timeout)
            .map_err(|source| FuzzError::DriverSpawn { path: driver.into(), source })?;
        let now = start.elapsed();
        let new_pairs = engine.observe(&input, map.counters(), res.elapsed.as_micros() as u64, now.as_millis() as u64);
        if new_pairs > 0 {
            out.timeline.push((now.as_secs_f64(), FuzzEvent::NewCoverage { pairs: new_pairs }));
        }
        let classification = match classify_execution(&res.stdout, res.exit) {
            Ok(c) => c,
            Err(e) => {
                log::debug!("{}: {e}", driver.display());
                continue;
            }
        };
        let finding = || Finding {
            input: input.clone(),
            log: res.stdout.clone(),
            exit: res.exit,
            classification,
            at: now,
            from_seed: matches!(origin, Origin::Seed(_)),
        };
        match classification {
            Classification::OriginalCrash | Classification::OriginalTimeout => {
                let f = finding();
                if let Some(d) = &dirs.precondition_violations {
                    persist(d, out.original_crashes.len() + 1, &f)?;
                }
                out.timeline.push((now.as_secs_f64(), FuzzEvent::OriginalCrash));
                out.original_crashes.push(f);
            }
            c if c.is_kill_candidate() => {
                let f = finding();
                if let Some(d) = &dirs.crashes {
                    persist(d, out.candidates.len() + 1, &f)?;
                }
                out.timeline.push((now.as_secs_f64(), FuzzEvent::Candidate));
                let decision = on_candidate(&f);
                out.candidates.push(f);
                if decision == Decision::Halt {
                    break;
                }
            }
            _ => {}
        }
    }
    out.executions = engine.executions;
    out.pool_size = engine.pool.len();
    out.coverage_pairs = engine.coverage.pair_count();
    out.elapsed = start.elapsed();
    Ok(out)
}

/// Fills the `{seeds}`, `{out}` and `{target}` placeholders and splits the
/// result into words.
pub fn expand_template(template: &str, seeds: &Path, out: &Path, target: &Path) -> Result<Vec<String>, FuzzError> {
    let words = shlex::split(template).ok_or_else(|| FuzzError::AdapterSpawn(format!("cannot split `{template}`")))?;
    if words.is_empty() {
        return Err(FuzzError::AdapterSpawn("empty command".into()));
    }
    let fill = |w: &str| {
        w.replace("{seeds}", &seeds.to_string_lossy())
            .replace("{out}", &out.to_string_lossy())
            .replace("{target}", &target.to_string_lossy())
    };
    let words: Vec<String> = words.iter().map(|w| fill(w)).collect();
    if words.iter().any(|w| w.contains('{') && w.contains('}') && !w.contains("@@")) {
        let bad = words.iter().find(|w| w.contains('{')).cloned().unwrap_or_default();
        return Err(FuzzError::AdapterSpawn(format!("unknown placeholder in `{bad}`")));
    }
    Ok(words)
}

/// Files inside any directory named `crashes` below `out`, oldest first.
fn crash_files(out: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(rd) = std::fs::read_dir(&dir) else { continue };
        for e in rd.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if dir.file_name() == Some(OsStr::new("crashes"))
                && p.file_name().is_some_and(|n| !n.to_string_lossy().starts_with("README"))
            {
                found.push(p);
            }
        }
    }
    found.sort_by_key(|p| std::fs::metadata(p).and_then(|m| m.modified()).ok());
    found
}

/// Runs an external fuzzer until it reports a crash or the budget expires.
/// Returns the crashing inputs found.
pub fn external_adapter(
    template: &str,
    seeds_dir: &Path,
    out_dir: &Path,
    target: &Path,
    budget: Duration,
) -> Result<Vec<Vec<u8>>, FuzzError> {
    let words = expand_template(template, seeds_dir, out_dir, target)?;
    let mut cmd = Command::new(&words[0]);
    cmd.args(&words[1..]).stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::null());
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    let mut child = cmd.spawn().map_err(|e| FuzzError::AdapterSpawn(format!("{}: {e}", words[0])))?;
    let start = Instant::now();
    let poll = Duration::from_millis(100);
    loop {
        if !crash_files(out_dir).is_empty() {
            break;
        }
        let left = budget.saturating_sub(start.elapsed());
        if left.is_zero() {
            break;
        }
        if child.wait_timeout(poll.min(left))?.is_some() {
            break;
        }
    }
    kill_group(&mut child);
    let _ = child.wait();
    if !out_dir.exists() {
        return Err(FuzzError::CrashDirMissing(out_dir.into()));
    }
    Ok(crash_files(out_dir).iter().filter_map(|p| std::fs::read(p).ok()).collect())
}
