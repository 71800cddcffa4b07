use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use anacp::feature_store::{self, generate_synthetic, SynthSpec};
use anacp_ffi::*;

fn last_error() -> String {
    let p = anacp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn small_config() -> AnacpConfig {
    let mut cfg = unsafe {
        let mut c = std::mem::MaybeUninit::<AnacpConfig>::uninit();
        assert_eq!(anacp_config_default(c.as_mut_ptr()), AnacpStatus::Ok);
        c.assume_init()
    };
    cfg.rp_dim = 64;
    cfg.heads = 2;
    cfg.replay = 20;
    cfg
}

fn synth_dir(dir: &Path) {
    let spec = SynthSpec {
        dim: 8,
        num_classes: 4,
        train_per_class: 30,
        test_per_class: 10,
        mean_scale: 6.0,
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec).unwrap();
    feature_store::write_feature_dir(dir, &data.train, &data.test, "synthetic", "gaussian").unwrap();
}

unsafe fn load_split(dir: &Path, split: &str) -> *mut AnacpDataset {
    let mut ds = ptr::null_mut();
    let split = CString::new(split).unwrap();
    assert_eq!(anacp_dataset_load_split(cstr(dir).as_ptr(), split.as_ptr(), &mut ds), AnacpStatus::Ok);
    ds
}

#[test]
fn learn_predict_save_load() {
    let tmp = tempfile::tempdir().unwrap();
    synth_dir(tmp.path());
    unsafe {
        let train = load_split(tmp.path(), "train");
        let test = load_split(tmp.path(), "test");
        let (mut n, mut d, mut c) = (0usize, 0usize, 0u32);
        assert_eq!(anacp_dataset_shape(test, &mut n, &mut d, &mut c), AnacpStatus::Ok);
        assert_eq!((n, d, c), (40, 8, 4));

        let cfg = small_config();
        let mut learner = ptr::null_mut();
        assert_eq!(anacp_learner_new(&cfg, d, &mut learner), AnacpStatus::Ok);

        let mut labels = vec![0u32; n];
        assert_eq!(
            anacp_learner_predict(learner, test, -1, labels.as_mut_ptr(), n),
            AnacpStatus::NotFitted
        );

        for task in [[0u32, 1], [2, 3]] {
            let mut part = ptr::null_mut();
            assert_eq!(anacp_dataset_select_classes(train, task.as_ptr(), 2, &mut part), AnacpStatus::Ok);
            assert_eq!(anacp_learner_learn_task(learner, part), AnacpStatus::Ok);
            anacp_dataset_free(part);
        }
        let mut tasks = 0;
        assert_eq!(anacp_learner_num_tasks(learner, &mut tasks), AnacpStatus::Ok);
        assert_eq!(tasks, 2);

        assert_eq!(anacp_learner_predict(learner, test, -1, labels.as_mut_ptr(), n), AnacpStatus::Ok);
        let truth = (*test_dataset_labels(tmp.path())).to_vec();
        let correct = labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / n as f64 > 0.9, "{correct}/{n}");

        let mut til = vec![0u32; n];
        assert_eq!(anacp_learner_predict(learner, test, 1, til.as_mut_ptr(), n), AnacpStatus::Ok);
        assert!(til.iter().all(|&c| c == 2 || c == 3));
        assert_eq!(
            anacp_learner_predict(learner, test, 5, til.as_mut_ptr(), n),
            AnacpStatus::InvalidArgument
        );
        assert!(last_error().contains("task"));
        assert_eq!(
            anacp_learner_predict(learner, test, -1, til.as_mut_ptr(), n - 1),
            AnacpStatus::InvalidArgument
        );

        let ckpt = tmp.path().join("learner.acpk");
        assert_eq!(anacp_learner_save(learner, cstr(&ckpt).as_ptr()), AnacpStatus::Ok);
        let mut restored = ptr::null_mut();
        assert_eq!(anacp_learner_load(cstr(&ckpt).as_ptr(), &mut restored), AnacpStatus::Ok);
        let mut again = vec![0u32; n];
        assert_eq!(anacp_learner_predict(restored, test, -1, again.as_mut_ptr(), n), AnacpStatus::Ok);
        assert_eq!(again, labels);

        anacp_learner_free(restored);
        anacp_learner_free(learner);
        anacp_dataset_free(train);
        anacp_dataset_free(test);
    }
}

fn test_dataset_labels(dir: &Path) -> Box<[u32]> {
    let (_, test, _) = feature_store::load_feature_dir(dir).unwrap();
    test.labels().into()
}

#[test]
fn run_stream_returns_json_report() {
    let tmp = tempfile::tempdir().unwrap();
    synth_dir(tmp.path());
    unsafe {
        let train = load_split(tmp.path(), "train");
        let test = load_split(tmp.path(), "test");
        let cfg = small_config();
        let mut json = ptr::null_mut();
        assert_eq!(anacp_run_stream(&cfg, train, test, 2, 0, &mut json), AnacpStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        anacp_string_free(json);
        let report: anacp::RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report.num_tasks, 2);
        assert_eq!(report.acc_matrix_cil.len(), 2);

        assert_eq!(anacp_run_stream(&cfg, train, test, 9, 0, &mut json), AnacpStatus::InvalidArgument);
        assert!(last_error().contains("tasks"), "{}", last_error());
        anacp_dataset_free(train);
        anacp_dataset_free(test);
    }
}

#[test]
fn raw_dataset_validation() {
    unsafe {
        let x = [0.0f32, 1.0, 2.0, 3.0];
        let y = [0u32, 5];
        let mut ds = ptr::null_mut();
        assert_eq!(anacp_dataset_from_raw(x.as_ptr(), y.as_ptr(), 2, 2, 2, &mut ds), AnacpStatus::InvalidArgument);
        assert!(ds.is_null());
        assert!(last_error().contains('5'));
        let y = [0u32, 1];
        assert_eq!(anacp_dataset_from_raw(x.as_ptr(), y.as_ptr(), 2, 2, 2, &mut ds), AnacpStatus::Ok);
        let mut rows = 0;
        assert_eq!(anacp_dataset_shape(ds, &mut rows, ptr::null_mut(), ptr::null_mut()), AnacpStatus::Ok);
        assert_eq!(rows, 2);
        anacp_dataset_free(ds);
        assert_eq!(
            anacp_dataset_from_raw(ptr::null(), y.as_ptr(), 2, 2, 2, &mut ds),
            AnacpStatus::NullPointer
        );
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        let missing = CString::new("/nonexistent/file.feat").unwrap();
        assert_eq!(anacp_dataset_load(missing.as_ptr(), &mut ds), AnacpStatus::Io);
        assert!(last_error().contains("/nonexistent/file.feat"));

        let tmp = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(tmp.path(), b"NOPE0000000000000000").unwrap();
        assert_eq!(anacp_dataset_load(cstr(tmp.path()).as_ptr(), &mut ds), AnacpStatus::Format);
        let mut learner = ptr::null_mut();
        assert_eq!(anacp_learner_load(cstr(tmp.path()).as_ptr(), &mut learner), AnacpStatus::Format);

        let mut cfg = small_config();
        cfg.heads = 0;
        assert_eq!(anacp_learner_new(&cfg, 4, &mut learner), AnacpStatus::InvalidArgument);
        assert_eq!(anacp_learner_new(ptr::null(), 4, &mut learner), AnacpStatus::NullPointer);

        let mut r = 0.0;
        assert_eq!(anacp_rel_error_reduction(90.10, 92.15, &mut r), AnacpStatus::Ok);
        assert!((r - 20.7).abs() < 0.05);
        assert_eq!(anacp_rel_error_reduction(100.0, 100.0, &mut r), AnacpStatus::InvalidArgument);

        anacp_dataset_free(ptr::null_mut());
        anacp_learner_free(ptr::null_mut());
        anacp_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/anacp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "anacp_learner_new",
        "anacp_learner_predict",
        "anacp_run_stream",
        "ANACP_STATUS_NOT_FITTED",
        "typedef struct AnacpLearner AnacpLearner",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    for (compiler, file) in [("cc", "check.c"), ("c++", "check.cpp")] {
        let src = tmp.path().join(file);
        std::fs::write(
            &src,
            "#include \"anacp.h\"\nint main(void) { AnacpConfig c; return anacp_config_default(&c) == ANACP_STATUS_OK ? 0 : 1; }\n",
        )
        .unwrap();
        let status = match Command::new(compiler)
            .arg("-fsyntax-only")
            .arg("-Wall")
            .arg("-Werror")
            .arg("-I")
            .arg(header.parent().unwrap())
            .arg(&src)
            .status()
        {
            Ok(s) => s,
            Err(_) => {
                eprintln!("{compiler} not found; skipping");
                continue;
            }
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
}
