//! Compiles and runs a real C program against the generated header and the
//! static library, proving the ABI end to end from outside Rust.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include "scatlab.h"
#include <math.h>
#include <stdio.h>
#include <string.h>

static int expect(ScatStatus st, ScatStatus want, const char *what) {
    if (st != want) {
        char msg[256];
        scat_last_error(msg, sizeof msg);
        fprintf(stderr, "%s: status %d (%s)\n", what, (int)st, msg);
        return 1;
    }
    return 0;
}

int main(void) {
    int bad = 0;

    double c1 = 0.0;
    bad += expect(scat_c1_constant(0.0, 16, &c1), SCAT_STATUS_OK, "c1");
    if (fabs(c1 - 0.5) > 0.05) { fprintf(stderr, "c1 = %f\n", c1); bad++; }

    ScatPotential *v = NULL;
    bad += expect(scat_potential_bump(12, 0.0, 0.0, 0.0, 0.45, 0.5, 2, &v),
                  SCAT_STATUS_OK, "bump");

    ScatAmplitude *a = NULL;
    bad += expect(scat_amplitude_compute(v, 1.0, 1.0, 1, 0.0, 2, &a),
                  SCAT_STATUS_OK, "amplitude");

    double re = 0.0, im = 0.0;
    bad += expect(scat_amplitude_entry(a, 0, 0, 1, 0, 1, &re, &im),
                  SCAT_STATUS_OK, "entry");
    if (!(re != 0.0 || im != 0.0)) { fprintf(stderr, "entry is zero\n"); bad++; }

    bad += expect(scat_amplitude_entry(a, 0, 9, 1, 0, 1, &re, &im),
                  SCAT_STATUS_INVALID_ARGUMENT, "entry above truncation");
    char msg[256];
    size_t need = scat_last_error(msg, sizeof msg);
    if (need <= 1 || strlen(msg) == 0) { fprintf(stderr, "no error message\n"); bad++; }

    size_t l = 0;
    bad += expect(scat_truncation_degree(0.01, 0.0, 0.0, 1.0, &l), SCAT_STATUS_OK, "truncation");
    if (l != 7) { fprintf(stderr, "truncation degree %zu\n", l); bad++; }

    scat_amplitude_free(a);
    scat_potential_free(v);
    return bad == 0 ? 0 : 1;
}
"#;

fn static_lib_dir() -> PathBuf {
    // Test builds leave the static library next to the test binary in
    // target/<profile>/deps; plain builds uplift a copy one level up. Accept
    // either so the test passes after both `cargo test` and `cargo build`.
    let mut dir = std::env::current_exe().unwrap();
    dir.pop();
    if !dir.join("libscatlab_ffi.a").is_file() && dir.ends_with("deps") {
        dir.pop();
    }
    dir
}

#[test]
fn c_program_compiles_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let lib_dir = static_lib_dir();
    assert!(
        lib_dir.join("libscatlab_ffi.a").is_file(),
        "static library missing at {}",
        lib_dir.display()
    );

    let work = std::env::temp_dir().join(format!("scatlab-c-smoke-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&work);
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    let exe = work.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&lib_dir)
        .args(["-Wl,-Bstatic", "-lscatlab_ffi", "-Wl,-Bdynamic"])
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("cc not runnable");
    assert!(
        cc.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&cc.stderr)
    );

    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "C smoke test failed:\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
}
