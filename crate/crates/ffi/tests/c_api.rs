use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use tritree_ffi::*;

const CSV: &str = "x,c,y\n1,a,1.0\n2,a,1.5\n3,b,1.0\n4,b,8.0\n5,a,9.0\n6,b,8.5\nNA,a,5.0\n7,NA,9.5\n";

fn write_csv(dir: &Path) -> CString {
    let path = dir.join("d.csv");
    std::fs::write(&path, CSV).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tt_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn load(path: &CString) -> *mut TtDataset {
    let mut ds = ptr::null_mut();
    let status = tt_dataset_load_csv(path.as_ptr(), c"y".as_ptr(), TT_TASK_REGRESSION, c"c".as_ptr(), &mut ds);
    assert_eq!(status, TtStatus::Ok, "{}", last_error());
    ds
}

#[test]
fn train_predict_serialize() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(dir.path());
    unsafe {
        let ds = load(&path);
        assert_eq!((tt_dataset_n_rows(ds), tt_dataset_n_features(ds)), (8, 2));

        let mut tree = ptr::null_mut();
        assert_eq!(tt_tree_train(ds, TT_STRATEGY_TRINARY, 2, 1, &mut tree), TtStatus::Ok);
        assert_eq!(tt_tree_n_classes(tree), 0);
        let mut preds = vec![0.0; 8];
        assert_eq!(tt_tree_predict(tree, ds, preds.as_mut_ptr(), 8), TtStatus::Ok);
        assert_eq!(tt_tree_predict(tree, ds, preds.as_mut_ptr(), 3), TtStatus::BufferSize);
        assert!(last_error().contains("need 8"));

        let mut json = ptr::null_mut();
        assert_eq!(tt_tree_to_json(tree, &mut json), TtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(tt_tree_from_json(json, &mut back), TtStatus::Ok);
        let mut again = vec![0.0; 8];
        assert_eq!(tt_tree_predict(back, ds, again.as_mut_ptr(), 8), TtStatus::Ok);
        assert_eq!(preds, again);

        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(tt_tree_evaluate(tree, ds, &mut a), TtStatus::Ok);
        assert_eq!(tt_tree_evaluate(back, ds, &mut b), TtStatus::Ok);
        assert_eq!(a, b);

        let mut text = ptr::null_mut();
        assert_eq!(tt_tree_render(tree, &mut text), TtStatus::Ok);
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("split on"));

        let mut censored = ptr::null_mut();
        assert_eq!(tt_dataset_censor(ds, 0.5, 1, 0, &mut censored), TtStatus::Ok);
        assert_eq!(tt_dataset_n_rows(censored), 8);

        tt_string_free(text);
        tt_string_free(json);
        tt_tree_free(back);
        tt_tree_free(tree);
        tt_dataset_free(censored);
        tt_dataset_free(ds);
    }
}

#[test]
fn classification_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    std::fs::write(&path, "x,label\n1,no\n2,no\n3,yes\n4,yes\n").unwrap();
    let path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        let status = tt_dataset_load_csv(path.as_ptr(), c"label".as_ptr(), TT_TASK_CLASSIFICATION, ptr::null(), &mut ds);
        assert_eq!(status, TtStatus::Ok);
        let mut tree = ptr::null_mut();
        assert_eq!(tt_tree_train(ds, TT_STRATEGY_MIA, 1, 1, &mut tree), TtStatus::Ok);
        assert_eq!(tt_tree_n_classes(tree), 2);
        let mut probs = vec![0.0; 8];
        assert_eq!(tt_tree_predict_proba(tree, ds, probs.as_mut_ptr(), 8), TtStatus::Ok);
        assert_eq!(probs, [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        tt_tree_free(tree);
        tt_dataset_free(ds);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        let status =
            tt_dataset_load_csv(c"/nonexistent.csv".as_ptr(), c"y".as_ptr(), TT_TASK_REGRESSION, ptr::null(), &mut ds);
        assert_eq!(status, TtStatus::Io);
        assert!(ds.is_null());
        assert!(last_error().contains("nonexistent"));

        let status = tt_dataset_load_csv(ptr::null(), c"y".as_ptr(), TT_TASK_REGRESSION, ptr::null(), &mut ds);
        assert_eq!(status, TtStatus::NullPointer);

        let mut tree = ptr::null_mut();
        assert_eq!(tt_tree_from_json(c"{\"format\":1}".as_ptr(), &mut tree), TtStatus::TreeFormat);
        assert_eq!(tt_tree_train(ptr::null(), TT_STRATEGY_FC, 2, 1, &mut tree), TtStatus::NullPointer);

        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path());
        let ds = load(&path);
        assert_eq!(tt_tree_train(ds, 99, 2, 1, &mut tree), TtStatus::InvalidArgument);
        let mut bad = ptr::null_mut();
        assert_eq!(tt_dataset_censor(ds, 2.0, 0, 1, &mut bad), TtStatus::Config);
        tt_dataset_free(ds);

        tt_dataset_free(ptr::null_mut());
        tt_tree_free(ptr::null_mut());
        tt_string_free(ptr::null_mut());
    }
}

#[test]
fn bias_simulation() {
    let sc = TtBiasScenario {
        a: 0.0,
        b: 1.0,
        p: 0.5,
        q: 0.3,
        sigma: 0.1,
        n: 100,
        reps: 100,
        seed: 3,
    };
    let mut out = TtBiasResult::default();
    unsafe {
        assert_eq!(tt_bias_simulate(&sc, TT_STRATEGY_FC, &mut out), TtStatus::Ok);
        assert!((out.bound - 0.15).abs() < 1e-12);
        assert!(out.kappa_hat.is_nan());
        assert_eq!(out.used_reps, 100);
        assert_eq!(tt_bias_simulate(&sc, TT_STRATEGY_MAJORITY, &mut out), TtStatus::Ok);
        assert!((0.0..=1.0).contains(&out.kappa_hat));
        assert_eq!(tt_bias_simulate(&sc, TT_STRATEGY_TRINARY_MIA, &mut out), TtStatus::Config);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tritree.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "tt_last_error",
        "tt_dataset_load_csv",
        "tt_dataset_load_with_schema",
        "tt_dataset_censor",
        "tt_dataset_free",
        "tt_tree_train",
        "tt_tree_predict",
        "tt_tree_predict_proba",
        "tt_tree_evaluate",
        "tt_tree_to_json",
        "tt_tree_from_json",
        "tt_tree_render",
        "tt_tree_free",
        "tt_string_free",
        "tt_bias_simulate",
        "typedef struct TtTree TtTree;",
        "TT_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a small C program against the static library.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let staticlib = lib_dir.join("libtritree_ffi.a");
    if !staticlib.exists() {
        eprintln!("{} not built; skipping", staticlib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path());
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "tritree.h"
int main(int argc, char **argv) {
    TtDataset *ds = NULL;
    TtTree *tree = NULL;
    if (tt_dataset_load_csv(argv[1], "y", TT_TASK_REGRESSION, "c", &ds) != TT_STATUS_OK) return 2;
    if (tt_tree_train(ds, TT_STRATEGY_TRINARY_MIA, 3, 1, &tree) != TT_STATUS_OK) return 3;
    double preds[8];
    if (tt_tree_predict(tree, ds, preds, 8) != TT_STATUS_OK) return 4;
    if (tt_tree_predict(tree, ds, preds, 2) != TT_STATUS_BUFFER_SIZE) return 5;
    printf("%zu %g\n", tt_dataset_n_rows(ds), preds[0]);
    tt_tree_free(tree);
    tt_dataset_free(ds);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).arg(csv.to_str().unwrap()).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("8 "));
}
