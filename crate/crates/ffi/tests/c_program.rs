//! Compiles a small C program against the generated header and the static
//! library, then runs it. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "treepath.h"

int main(void) {
    double s = 0.0;
    if (tp_survival_limit(2, 0.75, &s) != TP_STATUS_OK) return 1;
    if (tp_survival_limit(2, 2.0, &s) != TP_STATUS_INVALID_PARAM) return 2;
    if (tp_last_error_message() == NULL) return 3;
    TpPmf *law = NULL;
    if (tp_theta_pmf(2, 1, 0.5, &law) != TP_STATUS_OK) return 4;
    double total = 0.0;
    for (size_t i = 0; i < tp_pmf_len(law); i++) {
        int64_t v; double m;
        tp_pmf_entry(law, i, &v, &m);
        total += m;
    }
    tp_pmf_free(law);
    printf("%s %.12f %.12f\n", tp_version(), s, total);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libtreepath_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}",
        out.status.code()
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        format!("{} 0.666666666667 1.000000000000", env!("CARGO_PKG_VERSION"))
    );
}
