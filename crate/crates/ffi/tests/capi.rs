//! Exercises the C ABI end to end: handle lifecycle, error codes, CSV
//! determinism, and a real C client compiled against the generated header.

use std::ffi::{CStr, CString};
use std::ptr;

use ris_ce_ffi::*;

fn preset_config(name: &str) -> *mut RisceConfig {
    let cname = CString::new(name).unwrap();
    let mut cfg: *mut RisceConfig = ptr::null_mut();
    let status = unsafe { risce_config_from_preset(cname.as_ptr(), &mut cfg) };
    assert_eq!(status, RisceStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn shrink_for_speed(cfg: *mut RisceConfig) {
    // Desk-size geometry and a short grid via the TOML round trip.
    let mut text_ptr: *mut libc::c_char = ptr::null_mut();
    unsafe {
        assert_eq!(risce_config_to_toml(cfg, &mut text_ptr), RisceStatus::Ok);
        let text = CStr::from_ptr(text_ptr).to_str().unwrap().to_string();
        risce_string_free(text_ptr);
        let text = text
            .replace("bs_antennas = 8", "bs_antennas = 4")
            .replace("ris_columns = 4", "ris_columns = 2")
            .replace("ris_rows = 8", "ris_rows = 4");
        let ctext = CString::new(text).unwrap();
        let mut smaller: *mut RisceConfig = ptr::null_mut();
        assert_eq!(
            risce_config_from_toml(ctext.as_ptr(), &mut smaller),
            RisceStatus::Ok
        );
        // Swap contents by freeing the old handle and copying the pointer:
        // the caller keeps using the returned handle.
        risce_config_free(cfg);
        CONFIG_SLOT.with(|slot| slot.set(smaller));
    }
}

thread_local! {
    static CONFIG_SLOT: std::cell::Cell<*mut RisceConfig> =
        const { std::cell::Cell::new(ptr::null_mut()) };
}

fn small_config() -> *mut RisceConfig {
    let cfg = preset_config("scenario1");
    shrink_for_speed(cfg);
    let cfg = CONFIG_SLOT.with(|slot| slot.replace(ptr::null_mut()));
    unsafe {
        assert_eq!(risce_config_set_trials(cfg, 6), RisceStatus::Ok);
        assert_eq!(risce_config_set_seed(cfg, 9), RisceStatus::Ok);
        let grid = [0.0f64, 20.0];
        let var = CString::new("k_db").unwrap();
        assert_eq!(
            risce_config_set_sweep(cfg, var.as_ptr(), grid.as_ptr(), grid.len()),
            RisceStatus::Ok
        );
    }
    cfg
}

#[test]
fn preset_roundtrip_and_free() {
    let cfg = preset_config("scenario2");
    let mut text: *mut libc::c_char = ptr::null_mut();
    unsafe {
        assert_eq!(risce_config_to_toml(cfg, &mut text), RisceStatus::Ok);
        let s = CStr::from_ptr(text).to_str().unwrap();
        assert!(s.contains("ris_rows = 16"));
        risce_string_free(text);
        risce_config_free(cfg);
    }
}

#[test]
fn unknown_preset_sets_error_message() {
    let cname = CString::new("scenario9").unwrap();
    let mut cfg: *mut RisceConfig = ptr::null_mut();
    let status = unsafe { risce_config_from_preset(cname.as_ptr(), &mut cfg) };
    assert_eq!(status, RisceStatus::ConfigError);
    assert!(cfg.is_null());
    let msg = unsafe { CStr::from_ptr(risce_last_error()) }
        .to_str()
        .unwrap();
    assert!(msg.contains("scenario9"), "{msg}");
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg: *mut RisceConfig = ptr::null_mut();
    unsafe {
        assert_eq!(
            risce_config_from_preset(ptr::null(), &mut cfg),
            RisceStatus::NullArgument
        );
        assert_eq!(
            risce_run_sweep(ptr::null(), ptr::null_mut()),
            RisceStatus::NullArgument
        );
        assert_eq!(risce_results_rows(ptr::null()), 0);
    }
}

#[test]
fn sweep_results_are_deterministic_and_accessible() {
    let cfg = small_config();
    unsafe {
        let mut res_a: *mut RisceResults = ptr::null_mut();
        let mut res_b: *mut RisceResults = ptr::null_mut();
        assert_eq!(risce_run_sweep(cfg, &mut res_a), RisceStatus::Ok);
        assert_eq!(risce_run_sweep(cfg, &mut res_b), RisceStatus::Ok);
        let rows = risce_results_rows(res_a);
        assert!(rows > 0);
        assert_eq!(rows, risce_results_rows(res_b));

        let mut csv_a: *mut libc::c_char = ptr::null_mut();
        let mut csv_b: *mut libc::c_char = ptr::null_mut();
        assert_eq!(risce_results_to_csv(res_a, &mut csv_a), RisceStatus::Ok);
        assert_eq!(risce_results_to_csv(res_b, &mut csv_b), RisceStatus::Ok);
        let text_a = CStr::from_ptr(csv_a).to_str().unwrap().to_string();
        let text_b = CStr::from_ptr(csv_b).to_str().unwrap().to_string();
        assert_eq!(text_a, text_b);
        assert!(text_a.starts_with("sweep_var,value,metric,variant"));
        risce_string_free(csv_a);
        risce_string_free(csv_b);

        // Row accessors.
        let mut numbers = RisceRowNumbers {
            value: -1.0,
            mean: -1.0,
            std_error: -1.0,
            trials: 0,
        };
        assert_eq!(
            risce_results_row_numbers(res_a, 0, &mut numbers),
            RisceStatus::Ok
        );
        assert_eq!(numbers.trials, 6);
        let metric = CStr::from_ptr(risce_results_metric(res_a, 0))
            .to_str()
            .unwrap();
        assert_eq!(metric, "NMSE");
        let variant = CStr::from_ptr(risce_results_variant(res_a, 0))
            .to_str()
            .unwrap();
        assert_eq!(variant, "mdft-1pt");
        assert_eq!(
            risce_results_row_numbers(res_a, rows, &mut numbers),
            RisceStatus::OutOfRange
        );

        // File output.
        let dir = std::env::temp_dir().join("ris_ce_ffi_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            risce_results_write_csv(res_a, cpath.as_ptr()),
            RisceStatus::Ok
        );
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text_a);

        risce_results_free(res_a);
        risce_results_free(res_b);
        risce_config_free(cfg);
    }
}

#[test]
fn certify_over_ffi() {
    unsafe {
        let mut res: *mut RisceResults = ptr::null_mut();
        assert_eq!(
            risce_certify(4, 3, 1.0, 10, 7, &mut res),
            RisceStatus::Ok
        );
        let rows = risce_results_rows(res);
        // 12 designs x 5 metrics + 4 gap rows.
        assert_eq!(rows, 12 * 5 + 4);
        risce_results_free(res);
    }
}

#[test]
fn c_client_compiles_and_runs() {
    // Compile a real C program against the generated header and the cdylib.
    let manifest = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let target_dir = manifest
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("target/debug");
    let lib = target_dir.join("libris_ce_ffi.so");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = match std::process::Command::new("cc").arg("--version").output() {
        Ok(out) if out.status.success() => "cc",
        _ => {
            eprintln!("skipping: no C compiler available");
            return;
        }
    };
    let dir = std::env::temp_dir().join("ris_ce_ffi_c_client");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "ris_ce.h"

int main(void) {
    RisceConfig *cfg = NULL;
    if (risce_config_from_preset("scenario1", &cfg) != RISCE_STATUS_OK) return 1;
    if (risce_config_set_trials(cfg, 2) != RISCE_STATUS_OK) return 2;
    RisceResults *res = NULL;
    RisceStatus status = risce_certify(3, 2, 1.0, 4, 1, &res);
    if (status != RISCE_STATUS_OK) return 3;
    size_t rows = risce_results_rows(res);
    char *csv = NULL;
    if (risce_results_to_csv(res, &csv) != RISCE_STATUS_OK) return 4;
    int ok = strncmp(csv, "sweep_var,", 10) == 0 && rows > 0;
    risce_string_free(csv);
    risce_results_free(res);
    risce_config_free(cfg);
    if (!ok) return 5;
    printf("rows=%zu\n", rows);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("client");
    let compile = std::process::Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&target_dir)
        .arg("-lris_ce_ffi")
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("compiler invocation");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = std::process::Command::new(&exe)
        .env("LD_LIBRARY_PATH", &target_dir)
        .output()
        .expect("client run");
    assert!(
        run.status.success(),
        "client failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("rows="), "{stdout}");
}
