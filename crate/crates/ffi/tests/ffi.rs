use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use planeclust_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pc_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn generate(family: &str, noise: &str) -> *mut PcDataset {
    let (f, n) = (CString::new(family).unwrap(), CString::new(noise).unwrap());
    let mut data = ptr::null_mut();
    assert_eq!(
        unsafe { pc_dataset_generate(f.as_ptr(), n.as_ptr(), 0, &mut data) },
        PcStatus::Ok
    );
    data
}

#[test]
fn fit_round_trip() {
    let data = generate("s1", "gaussian");
    unsafe {
        let n = pc_dataset_len(data);
        assert_eq!((n, pc_dataset_dim(data)), (150, 2));
        let params = pc_params_default(3);
        let mut fit = ptr::null_mut();
        assert_eq!(
            pc_fit(data, PcMethod::Rflkpc, &params, &mut fit),
            PcStatus::Ok
        );
        assert_eq!(last_error(), "");
        assert_eq!((pc_fit_k(fit), pc_fit_dim(fit), pc_fit_len(fit)), (3, 2, n));
        assert!(pc_fit_objective(fit).is_finite());
        assert!(pc_fit_iterations(fit) >= 1);

        let mut u = vec![0.0; n * 3];
        assert_eq!(
            pc_fit_membership(fit, u.as_mut_ptr(), u.len()),
            PcStatus::Ok
        );
        for row in u.chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut centers = [0.0; 6];
        assert_eq!(pc_fit_centers(fit, centers.as_mut_ptr(), 6), PcStatus::Ok);
        assert!(centers.iter().all(|c| (-0.5..1.5).contains(c)));

        let mut labels = vec![0usize; n];
        assert_eq!(pc_fit_labels(fit, labels.as_mut_ptr(), n), PcStatus::Ok);
        let mut truth = vec![0i64; n];
        assert_eq!(pc_dataset_labels(data, truth.as_mut_ptr(), n), PcStatus::Ok);
        let pred: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
        let mut scores = PcScores::default();
        assert_eq!(
            pc_scores(truth.as_ptr(), pred.as_ptr(), n, &mut scores),
            PcStatus::Ok
        );
        assert!(scores.acc > 0.95, "{scores:?}");

        pc_fit_free(fit);
        pc_dataset_free(data);
    }
}

#[test]
fn baselines_through_ffi() {
    let data = generate("s2", "clean");
    let params = pc_params_default(3);
    for method in [PcMethod::Kpc, PcMethod::Fkpc] {
        let mut fit = ptr::null_mut();
        assert_eq!(
            unsafe { pc_fit(data, method, &params, &mut fit) },
            PcStatus::Ok
        );
        assert_eq!(unsafe { pc_fit_len(fit) }, 150);
        unsafe { pc_fit_free(fit) };
    }
    unsafe { pc_dataset_free(data) };
}

#[test]
fn dataset_from_memory() {
    let points = [0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0];
    let labels = [5i64, 5, 5, 9, 9, -3];
    let mut data = ptr::null_mut();
    unsafe {
        assert_eq!(
            pc_dataset_new(points.as_ptr(), 6, 2, labels.as_ptr(), &mut data),
            PcStatus::Ok
        );
        let mut back = [0i64; 6];
        assert_eq!(pc_dataset_labels(data, back.as_mut_ptr(), 6), PcStatus::Ok);
        assert_eq!(back, [0, 0, 0, 1, 1, -1]);
        pc_dataset_free(data);

        assert_eq!(
            pc_dataset_new(points.as_ptr(), 6, 2, ptr::null(), &mut data),
            PcStatus::Ok
        );
        assert_eq!(
            pc_dataset_labels(data, back.as_mut_ptr(), 6),
            PcStatus::InvalidInput
        );
        pc_dataset_free(data);

        let bad = [0.0, f64::NAN];
        assert_eq!(
            pc_dataset_new(bad.as_ptr(), 1, 2, ptr::null(), &mut data),
            PcStatus::InvalidInput
        );
        assert!(data.is_null());
        assert!(last_error().contains("non-finite"));
    }
}

#[test]
fn csv_errors_carry_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n1,2\n3,?\n").unwrap();
    let p = CString::new(path.to_str().unwrap()).unwrap();
    let mut data = ptr::null_mut();
    assert_eq!(
        unsafe { pc_dataset_load_csv(p.as_ptr(), true, ptr::null(), &mut data) },
        PcStatus::Parse
    );
    assert!(last_error().contains("bad.csv:3:2"), "{}", last_error());

    std::fs::write(&path, "x,y,c\n1,2,0\n3,4,1\n").unwrap();
    let col = CString::new("c").unwrap();
    assert_eq!(
        unsafe { pc_dataset_load_csv(p.as_ptr(), true, col.as_ptr(), &mut data) },
        PcStatus::Ok
    );
    assert_eq!(unsafe { pc_dataset_dim(data) }, 2);
    unsafe { pc_dataset_free(data) };

    let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { pc_dataset_load_csv(missing.as_ptr(), true, ptr::null(), &mut data) },
        PcStatus::Io
    );
}

#[test]
fn null_and_invalid_arguments() {
    let mut data = ptr::null_mut();
    let mut fit = ptr::null_mut();
    let params = pc_params_default(2);
    unsafe {
        assert_eq!(
            pc_dataset_new(ptr::null(), 1, 1, ptr::null(), &mut data),
            PcStatus::NullPointer
        );
        assert_eq!(
            pc_fit(ptr::null(), PcMethod::Rflkpc, &params, &mut fit),
            PcStatus::NullPointer
        );
        assert_eq!(
            pc_dataset_generate(ptr::null(), ptr::null(), 0, &mut data),
            PcStatus::NullPointer
        );
        let f = CString::new("s9").unwrap();
        let n = CString::new("clean").unwrap();
        assert_eq!(
            pc_dataset_generate(f.as_ptr(), n.as_ptr(), 0, &mut data),
            PcStatus::InvalidInput
        );
        assert_eq!(
            pc_scores(ptr::null(), ptr::null(), 0, ptr::null_mut()),
            PcStatus::NullPointer
        );
        assert_eq!((pc_dataset_len(ptr::null()), pc_fit_k(ptr::null())), (0, 0));
        assert!(pc_fit_objective(ptr::null()).is_nan());
        pc_fit_free(ptr::null_mut());
        pc_dataset_free(ptr::null_mut());
    }
    let data = generate("toy", "clean");
    let mut p = pc_params_default(3);
    p.m = 1.0;
    assert_eq!(
        unsafe { pc_fit(data, PcMethod::Rflkpc, &p, &mut fit) },
        PcStatus::InvalidInput
    );
    assert!(fit.is_null());
    p = pc_params_default(500);
    assert_eq!(
        unsafe { pc_fit(data, PcMethod::Rflkpc, &p, &mut fit) },
        PcStatus::InvalidInput
    );
    unsafe { pc_dataset_free(data) };
}

#[test]
fn ffi_fit_matches_library() {
    use planeclust::datagen::{generate as gen, Family, Noise, SyntheticSpec};
    let data = generate("toy", "laplace");
    let mut params = pc_params_default(3);
    params.seed = 17;
    params.lambda = 0.1;
    let mut fit = ptr::null_mut();
    assert_eq!(
        unsafe { pc_fit(data, PcMethod::Rflkpc, &params, &mut fit) },
        PcStatus::Ok
    );
    let lib_data = gen(&SyntheticSpec::new(Family::Toy, Noise::Laplace, 0)).unwrap();
    let hp = planeclust::HyperParams {
        seed: 17,
        lambda: 0.1,
        ..planeclust::HyperParams::with_k(3)
    };
    let direct = planeclust::rflkpc::fit(&lib_data, &hp, None).unwrap();
    assert_eq!(
        unsafe { pc_fit_objective(fit) }.to_bits(),
        direct.final_objective().to_bits()
    );
    unsafe {
        pc_fit_free(fit);
        pc_dataset_free(data);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn header_compiles_and_static_library_links() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let src = manifest.join("tests/c/smoke.c");
    let lib = target_dir().join("libplaneclust_ffi.a");
    if !lib.exists() {
        eprintln!("skipping C link test: {} not built", lib.display());
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
