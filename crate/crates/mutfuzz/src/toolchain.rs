//! Compiler invocations: preprocessing, TCE objects, drivers and the ABI probe.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use mutfuzz_core::layout::{abi_probe_program, parse_abi_probe, AbiProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("cannot run `{cmd}`: {source}")]
    Spawn { cmd: String, source: std::io::Error },
    #[error("`{cmd}` failed:\n{stderr}")]
    Failed { cmd: String, stderr: String },
    #[error("unexpected ABI probe output: {0}")]
    Probe(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compiler settings shared by every build of one campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub cc: String,
    /// Flags for driver builds.
    pub cflags: Vec<String>,
    /// Instrumentation flags for fuzz drivers; `None` picks a default for `cc`.
    pub coverage_flags: Option<Vec<String>>,
    /// Sanitizer names, passed as `-fsanitize=<name>`.
    pub sanitizers: Vec<String>,
    pub include_paths: Vec<PathBuf>,
    pub defines: Vec<String>,
    /// Extra objects or `-l` flags appended to driver links.
    pub link: Vec<String>,
    /// Flags for trivial-compiler-equivalence objects.
    pub tce_flags: Vec<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            cc: "cc".into(),
            cflags: vec!["-O1".into(), "-w".into(), "-fno-stack-protector".into()],
            coverage_flags: None,
            sanitizers: Vec::new(),
            include_paths: Vec::new(),
            defines: Vec::new(),
            link: Vec::new(),
            tce_flags: vec!["-O2".into(), "-w".into()],
        }
    }
}

fn render(cmd: &Command) -> String {
    let mut s = cmd.get_program().to_string_lossy().into_owned();
    for a in cmd.get_args() {
        s.push(' ');
        s.push_str(&a.to_string_lossy());
    }
    s
}

fn run(mut cmd: Command, stdin: Option<&[u8]>) -> Result<Vec<u8>, BuildError> {
    let shown = render(&cmd);
    cmd.stdout(Stdio::piped()).stderr(Stdio::piped());
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() });
    let mut child = cmd.spawn().map_err(|source| BuildError::Spawn { cmd: shown.clone(), source })?;
    if let Some(data) = stdin {
        let mut pipe = child.stdin.take().expect("stdin piped");
        // A compiler that dies early closes the pipe; the exit status says why.
        let _ = pipe.write_all(data);
    }
    let out = child.wait_with_output().map_err(|source| BuildError::Spawn { cmd: shown.clone(), source })?;
    if !out.status.success() {
        return Err(BuildError::Failed { cmd: shown, stderr: String::from_utf8_lossy(&out.stderr).into_owned() });
    }
    Ok(out.stdout)
}

#[derive(Debug, Clone)]
pub struct Toolchain {
    pub cfg: BuildConfig,
}

impl Toolchain {
    pub fn new(cfg: BuildConfig) -> Toolchain {
        Toolchain { cfg }
    }

    pub fn is_gcc(&self) -> bool {
        let name = Path::new(&self.cfg.cc).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        name.contains("gcc") || (name == "cc" && !cc_is_clang(&self.cfg.cc))
    }

    pub fn coverage_flags(&self) -> Vec<String> {
        match &self.cfg.coverage_flags {
            Some(f) => f.clone(),
            None if self.is_gcc() => vec!["-fsanitize-coverage=trace-pc".into()],
            None => vec!["-fsanitize-coverage=trace-pc-guard".into()],
        }
    }

    fn cmd(&self) -> Command {
        let mut c = Command::new(&self.cfg.cc);
        for i in &self.cfg.include_paths {
            c.arg("-I").arg(i);
        }
        for d in &self.cfg.defines {
            c.arg(format!("-D{d}"));
        }
        c
    }

    fn sanitizer_flags(&self) -> Vec<String> {
        self.cfg.sanitizers.iter().map(|s| format!("-fsanitize={s}")).collect()
    }

    /// `cc -E -P` of one source file.
    pub fn preprocess(&self, file: &Path) -> Result<String, BuildError> {
        let mut c = self.cmd();
        c.args(["-E", "-P"]).arg(file);
        let out = run(c, None)?;
        Ok(String::from_utf8_lossy(&out).into_owned())
    }

    /// Object code of a C unit given as text, compiled with the TCE flags.
    pub fn tce_object(&self, source: &str, scratch: &Path) -> Result<Vec<u8>, BuildError> {
        let obj = tempfile::Builder::new().suffix(".o").tempfile_in(scratch)?;
        let mut c = self.cmd();
        c.args(&self.cfg.tce_flags).args(["-c", "-x", "c", "-", "-o"]).arg(obj.path());
        run(c, Some(source.as_bytes()))?;
        Ok(std::fs::read(obj.path())?)
    }

    /// Compiles the runtime once per campaign, without coverage.
    pub fn compile_runtime(&self, rt_source: &Path) -> Result<PathBuf, BuildError> {
        let obj = rt_source.with_extension("o");
        let mut c = self.cmd();
        c.args(&self.cfg.cflags).args(self.sanitizer_flags()).arg("-c").arg(rt_source).arg("-o").arg(&obj);
        run(c, None)?;
        Ok(obj)
    }

    /// Builds a driver executable; `instrument` adds the coverage flags.
    pub fn build_driver(
        &self,
        driver: &Path,
        include_dirs: &[&Path],
        rt_obj: &Path,
        out: &Path,
        instrument: bool,
    ) -> Result<(), BuildError> {
        let mut c = self.cmd();
        for d in include_dirs {
            c.arg("-I").arg(d);
        }
        c.args(&self.cfg.cflags).args(self.sanitizer_flags());
        if instrument {
            c.args(self.coverage_flags());
        }
        c.arg(driver).arg(rt_obj).arg("-o").arg(out).args(&self.cfg.link).arg("-lm");
        run(c, None)?;
        Ok(())
    }

    /// Measures the host ABI by compiling and running a probe program.
    pub fn probe_abi(&self, scratch: &Path) -> Result<AbiProfile, BuildError> {
        let dir = tempfile::tempdir_in(scratch)?;
        let src = dir.path().join("abi_probe.c");
        std::fs::write(&src, abi_probe_program())?;
        let bin = dir.path().join("abi_probe");
        let mut c = self.cmd();
        c.arg("-w").arg(&src).arg("-o").arg(&bin);
        run(c, None)?;
        let out = run(Command::new(&bin), None)?;
        let text = String::from_utf8_lossy(&out).into_owned();
        parse_abi_probe("native", &text).ok_or(BuildError::Probe(text))
    }
}

fn cc_is_clang(cc: &str) -> bool {
    Command::new(cc)
        .arg("--version")
        .output()
        .map(|o| String::from_utf8_lossy(&o.stdout).contains("clang"))
        .unwrap_or(false)
}

/// First of `clang`, `gcc`, `cc` that can be spawned.
pub fn find_compiler() -> Option<String> {
    ["clang", "gcc", "cc"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").stdout(Stdio::null()).stderr(Stdio::null()).status().is_ok())
        .map(String::from)
}
