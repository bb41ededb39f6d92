use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use credformer::data::{prepare_splits, synth_generate, Imputation, SplitSpec, SynthPreset};
use credformer::metrics;
use credformer::model::{AnyModel, Checkpoint, HybridModel, ModelConfig};
use credformer_ffi::*;

fn checkpoint() -> (Checkpoint, Vec<Vec<f64>>) {
    let (frame, _) = synth_generate(400, 6, 3, &SynthPreset::Linear.spec(6)).unwrap();
    let (_, prep) = prepare_splits(&frame, &SplitSpec::default(), Imputation::Median, None).unwrap();
    let mut cfg = ModelConfig::default();
    cfg.seed = 11;
    let model = HybridModel::new(cfg, 6).unwrap();
    let rows = (0..20).map(|i| frame.row(i).to_vec()).collect();
    let ckpt = Checkpoint {
        model: AnyModel::Hybrid(model),
        preprocessor: Some(prep),
    };
    (ckpt, rows)
}

fn last_error() -> String {
    let p = cf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(bytes: &[u8]) -> *mut CfModel {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cf_model_load_bytes(bytes.as_ptr(), bytes.len(), &mut h) }, CfStatus::Ok);
    h
}

#[test]
fn predictions_match_the_library_bit_exactly() {
    let (ckpt, rows) = checkpoint();
    let h = load(&ckpt.to_bytes().unwrap());
    assert_eq!(unsafe { cf_model_n_features(h) }, 6);
    let flat: Vec<f64> = rows.concat();
    let mut out = vec![0.0; rows.len()];
    let st = unsafe { cf_model_predict(h, flat.as_ptr(), rows.len(), 6, out.as_mut_ptr()) };
    assert_eq!(st, CfStatus::Ok);
    assert_eq!(out, ckpt.predict_raw(&rows).unwrap());
    assert!(cf_last_error().is_null());
    unsafe { cf_model_free(h) };
}

#[test]
fn nan_cells_are_imputed() {
    let (ckpt, rows) = checkpoint();
    let h = load(&ckpt.to_bytes().unwrap());
    let mut row = rows[0].clone();
    row[2] = f64::NAN;
    let mut out = [0.0];
    let st = unsafe { cf_model_predict(h, row.as_ptr(), 1, 6, out.as_mut_ptr()) };
    assert_eq!(st, CfStatus::Ok);
    assert!(out[0] > 0.0 && out[0] < 1.0);
    assert_eq!(out[0], ckpt.predict_raw(&[row]).unwrap()[0]);
    unsafe { cf_model_free(h) };
}

#[test]
fn file_roundtrip_through_save_and_load() {
    let (ckpt, rows) = checkpoint();
    let h = load(&ckpt.to_bytes().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.bin").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { cf_model_save(h, path.as_ptr()) }, CfStatus::Ok);
    let mut h2 = ptr::null_mut();
    assert_eq!(unsafe { cf_model_load(path.as_ptr(), &mut h2) }, CfStatus::Ok);
    let flat = rows.concat();
    let (mut a, mut b) = (vec![0.0; 20], vec![0.0; 20]);
    unsafe {
        cf_model_predict(h, flat.as_ptr(), 20, 6, a.as_mut_ptr());
        cf_model_predict(h2, flat.as_ptr(), 20, 6, b.as_mut_ptr());
        cf_model_free(h);
        cf_model_free(h2);
    }
    assert_eq!(a, b);
}

#[test]
fn errors_carry_status_and_message() {
    let mut h = ptr::null_mut();
    let missing = CString::new("/nonexistent/model.bin").unwrap();
    assert_eq!(unsafe { cf_model_load(missing.as_ptr(), &mut h) }, CfStatus::DataError);
    assert!(h.is_null());
    assert!(last_error().contains("nonexistent"));

    let junk = b"not a checkpoint at all";
    assert_eq!(
        unsafe { cf_model_load_bytes(junk.as_ptr(), junk.len(), &mut h) },
        CfStatus::DataError
    );
    assert_eq!(unsafe { cf_model_load(ptr::null(), &mut h) }, CfStatus::NullPointer);
    assert_eq!(
        unsafe { cf_model_load(missing.as_ptr(), ptr::null_mut()) },
        CfStatus::NullPointer
    );

    let (ckpt, rows) = checkpoint();
    let h = load(&ckpt.to_bytes().unwrap());
    let mut out = [0.0];
    let st = unsafe { cf_model_predict(h, rows[0].as_ptr(), 1, 5, out.as_mut_ptr()) };
    assert_eq!(st, CfStatus::DataError);
    assert!(last_error().contains("expects 6"));
    let inf = [f64::INFINITY; 6];
    assert_eq!(
        unsafe { cf_model_predict(h, inf.as_ptr(), 1, 6, out.as_mut_ptr()) },
        CfStatus::DataError
    );
    assert_eq!(
        unsafe { cf_model_predict(ptr::null(), inf.as_ptr(), 1, 6, out.as_mut_ptr()) },
        CfStatus::NullPointer
    );
    unsafe { cf_model_free(h) };
    unsafe { cf_model_free(ptr::null_mut()) };
    assert_eq!(unsafe { cf_model_n_features(ptr::null()) }, 0);
}

#[test]
fn metrics_match_the_library() {
    let scores = [0.1, 0.4, 0.35, 0.8, 0.4];
    let labels = [0u8, 0, 1, 1, 1];
    let mut v = 0.0;
    unsafe {
        assert_eq!(cf_auc(scores.as_ptr(), labels.as_ptr(), 5, &mut v), CfStatus::Ok);
        assert_eq!(v, metrics::auc(&scores, &labels).unwrap());
        assert_eq!(cf_ks(scores.as_ptr(), labels.as_ptr(), 5, &mut v), CfStatus::Ok);
        assert_eq!(v, metrics::ks(&scores, &labels).unwrap());
        assert_eq!(cf_accuracy(scores.as_ptr(), labels.as_ptr(), 5, 0.4, &mut v), CfStatus::Ok);
        assert_eq!(v, 0.6);
        let one_class = [1u8; 5];
        assert_eq!(cf_auc(scores.as_ptr(), one_class.as_ptr(), 5, &mut v), CfStatus::DataError);
        assert_eq!(cf_auc(ptr::null(), labels.as_ptr(), 5, &mut v), CfStatus::NullPointer);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libcredformer_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let (ckpt, _) = checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.bin");
    ckpt.save(&model).unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <math.h>
#include "credformer.h"
int main(int argc, char **argv) {
    CfModel *m = NULL;
    if (cf_model_load(argv[1], &m) != CF_STATUS_OK) { fprintf(stderr, "%s\n", cf_last_error()); return 1; }
    size_t f = cf_model_n_features(m);
    double row[64];
    for (size_t j = 0; j < f; j++) row[j] = NAN;
    double p = -1.0;
    if (cf_model_predict(m, row, 1, f, &p) != CF_STATUS_OK) return 2;
    if (cf_model_predict(m, row, 1, f + 1, &p) != CF_STATUS_DATA_ERROR) return 3;
    cf_model_free(m);
    printf("%zu %.17g %s\n", f, p, cf_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(&exe).arg(&model).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let parts: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(parts[0], "6");
    let expected = ckpt.predict_raw(&[vec![f64::NAN; 6]]).unwrap()[0];
    assert_eq!(parts[1].parse::<f64>().unwrap(), expected);
    assert_eq!(parts[2], env!("CARGO_PKG_VERSION"));
}
