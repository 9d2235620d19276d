mod support;

use std::ffi::OsStr;
use std::time::Duration;

use mutfuzz::covmap::SharedMap;
use mutfuzz::exec;
use mutfuzz::rt::COVERAGE_MAP_ENV;
use mutfuzz_core::triage::{ExitKind, EXIT_UNREADABLE_INPUT, SIGABRT};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const DUAL_READ: &str = r#"
#include "mutfuzz_rt.h"
#include <stdio.h>
int main(int argc, char **argv) {
    unsigned char a[40], b[40];
    load_file(argc > 1 ? argv[1] : 0);
    get_value(a, 24, 0);
    get_value(a + 24, 16, 0);
    seek_data_index(0);
    get_value(b, 40, 0);
    print_bytes("first", a, 40);
    print_bytes("second", b, 40);
    return 0;
}
"#;

const HOT_LOOP: &str = r#"
#include "mutfuzz_rt.h"
static volatile int sink;
static void step(int i) { if (i & 1) sink += i; else sink -= i; }
int main(int argc, char **argv) {
    load_file(argc > 1 ? argv[1] : 0);
    for (int i = 0; i < 5000; i++) step(i);
    return 0;
}
"#;

const ABORTS: &str = r#"
#include "mutfuzz_rt.h"
int main(void) {
    log_checkpoint("Calling the original function");
    log_checkpoint("Calling the mutated function");
    log_checkpoint("Comparing result values:");
    log_checkpoint("Mutant killed");
    safe_abort();
    return 0;
}
"#;

fn bytes_of(line: &str) -> Vec<u8> {
    line.split_whitespace().skip(2).map(|h| u8::from_str_radix(h, 16).unwrap()).collect()
}

#[test]
fn reads_are_identical_after_a_seek() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "dual", DUAL_READ, false);
    let input = dir.path().join("input");
    let mut runner = TestRunner::new(Config { cases: 1000, ..Config::default() });
    runner
        .run(&prop::collection::vec(any::<u8>(), 0..64), |bytes| {
            std::fs::write(&input, &bytes).unwrap();
            let r = exec::run(&bin, [&input], &[], Duration::from_secs(5)).unwrap();
            let lines: Vec<&str> = r.stdout.lines().collect();
            prop_assert_eq!(r.exit, ExitKind::Normal(0));
            let (a, b) = (bytes_of(lines[0]), bytes_of(lines[1]));
            prop_assert_eq!(&a, &b);
            let n = bytes.len().min(40);
            prop_assert_eq!(&a[..n], &bytes[..n]);
            // Same content, same extension.
            let again = exec::run(&bin, [&input], &[], Duration::from_secs(5)).unwrap();
            prop_assert_eq!(again.stdout, r.stdout);
            Ok(())
        })
        .unwrap();
}

#[test]
fn unreadable_input_exits_with_the_reserved_code() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "dual", DUAL_READ, false);
    let r = exec::run(&bin, [dir.path().join("missing")], &[], Duration::from_secs(5)).unwrap();
    assert_eq!(r.exit, ExitKind::Normal(EXIT_UNREADABLE_INPUT));
}

#[test]
fn counters_saturate_in_the_shared_map() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "hot", HOT_LOOP, true);
    let mut map = SharedMap::create(dir.path()).unwrap();
    map.reset();
    let input = dir.path().join("input");
    std::fs::write(&input, b"x").unwrap();
    let path = map.path();
    let env: [(&str, &OsStr); 1] = [(COVERAGE_MAP_ENV, path.as_os_str())];
    let r = exec::run(&bin, [&input], &env, Duration::from_secs(5)).unwrap();
    assert_eq!(r.exit, ExitKind::Normal(0));
    let counters = map.counters();
    assert_eq!(counters.iter().copied().max(), Some(255));
    assert!(counters.iter().filter(|&&c| c > 0).count() > 2);
}

#[test]
fn killed_log_survives_abort() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "aborts", ABORTS, false);
    let r = exec::run(&bin, std::iter::empty::<&str>(), &[], Duration::from_secs(5)).unwrap();
    assert_eq!(r.exit, ExitKind::Signaled(SIGABRT));
    assert!(r.stdout.lines().any(|l| l == "Mutant killed"));
}
