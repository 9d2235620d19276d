//! Running a driver with a timeout and captured output.

use std::ffi::OsStr;
use std::io::{self, Read};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Once;
use std::thread;
use std::time::{Duration, Instant};

use mutfuzz_core::triage::ExitKind;
use wait_timeout::ChildExt;

/// Output beyond this many bytes per stream is dropped.
const OUTPUT_CAP: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ExecResult {
    pub exit: ExitKind,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut out = Vec::new();
        if let Some(mut r) = r {
            let mut buf = [0u8; 8192];
            while let Ok(n) = r.read(&mut buf) {
                if n == 0 {
                    break;
                }
                if out.len() < OUTPUT_CAP {
                    out.extend_from_slice(&buf[..n.min(OUTPUT_CAP - out.len())]);
                }
            }
        }
        out
    })
}

/// Kills the whole process group of `child`.
pub fn kill_group(child: &mut Child) {
    // SAFETY: plain syscall on a pid we spawned into its own group.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
}

pub fn exit_kind(status: std::process::ExitStatus) -> ExitKind {
    match (status.code(), status.signal()) {
        (Some(c), _) => ExitKind::Normal(c),
        (None, Some(s)) => ExitKind::Signaled(s),
        (None, None) => ExitKind::Normal(-1),
    }
}

/// Turns off address-space randomization for every child spawned from now
/// on; the personality flag is inherited across fork and exec. Drivers of
/// mutants that read out of bounds then see the same bytes on every replay.
fn fixed_layout_for_children() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        // SAFETY: personality(2) only changes flags of the calling process;
        // 0xffffffff queries the current value. Failure leaves ASLR on.
        unsafe {
            let current = libc::personality(0xffff_ffff);
            if current != -1 {
                libc::personality(current as libc::c_ulong | libc::ADDR_NO_RANDOMIZE as libc::c_ulong);
            }
        }
    });
}

/// Runs `program args...` in its own process group, without address-space
/// randomization.
pub fn run<I, S>(program: &Path, args: I, env: &[(&str, &OsStr)], timeout: Duration) -> io::Result<ExecResult>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let mut cmd = Command::new(program);
    cmd.args(args).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).process_group(0);
    for (k, v) in env {
        cmd.env(k, v);
    }
    fixed_layout_for_children();
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let exit = match child.wait_timeout(timeout)? {
        Some(status) => exit_kind(status),
        None => {
            kill_group(&mut child);
            let _ = child.wait();
            ExitKind::Timeout
        }
    };
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&err.join().unwrap_or_default()).into_owned();
    Ok(ExecResult { exit, stdout, stderr, elapsed })
}
