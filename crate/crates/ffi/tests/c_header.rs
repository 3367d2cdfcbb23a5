//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "sphavg.h"

int main(void) {
    uint64_t n = 0;
    if (sph_sphere_count(5, 1, &n) != SPH_STATUS_OK || n != 10) return 10;
    if (sph_sphere_count(5, 1, NULL) != SPH_STATUS_ERR_NULL) return 11;
    if (strlen(sph_last_error()) == 0) return 12;

    SphSphere *s = NULL;
    if (sph_sphere_new(4, 9, &s) != SPH_STATUS_OK) return 20;
    size_t len = 0;
    sph_sphere_len(s, &len);
    int64_t p[4];
    if (sph_sphere_point(s, len - 1, p, 4) != SPH_STATUS_OK) return 21;
    if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3] != 9) return 22;
    sph_sphere_free(s);

    SphMultiplier *m = NULL;
    if (sph_multiplier_new(5, 9, &m) != SPH_STATUS_OK) return 30;
    double xi[5] = {0, 0, 0, 0, 0}, a = 0, c = 0, r = 0;
    sph_multiplier_a(m, xi, 5, &a);
    sph_multiplier_c(m, xi, 5, &c);
    sph_multiplier_residual(m, xi, 5, &r);
    sph_multiplier_free(m);
    if (a <= 0 || a - c - r > 1e-12 || c + r - a > 1e-12) return 31;

    char *json = NULL;
    if (sph_run_json("{\"command\":\"sphere\",\"d\":5,\"lambda2\":1,\"lambda2_max\":1,"
                     "\"p\":1.8,\"eta\":0.25,\"epsilon\":0.25,\"threshold_c\":0.1,"
                     "\"grid\":10,\"seed\":0,\"format\":\"json\"}", &json) != SPH_STATUS_OK) return 40;
    if (strstr(json, "\"count\": 10") == NULL) return 41;
    sph_string_free(json);
    if (sph_run_json("not json", &json) != SPH_STATUS_ERR_INVALID) return 42;

    printf("%s\n", sph_version());
    return 0;
}
"#;

fn cc() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = lib_dir.join("libsphavg_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "smoke program failed: {:?}", out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
