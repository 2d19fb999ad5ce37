use std::ffi::{CStr, CString};
use std::ptr;

use lissscan_ffi::*;

fn last_error() -> String {
    let p = ls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn info(d: *const LsDesign) -> (LsStatus, Option<LsDesignInfo>) {
    let mut out = std::mem::MaybeUninit::<LsDesignInfo>::uninit();
    let s = ls_design_info(d, out.as_mut_ptr());
    (s, (s == LsStatus::Ok).then(|| out.assume_init()))
}

fn normalized(r: f64) -> LsScannerConfig {
    LsScannerConfig {
        fx_res: r,
        fy_res: 1.0,
        qx: 20.0,
        qy: 20.0,
    }
}

#[test]
fn design_info_matches_library() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(ls_design_new(1.5, 7, LsRule::Proposed, &mut d), LsStatus::Ok);
        let info = info(d).1.unwrap();
        assert_eq!((info.fx_num, info.fx_den), (41, 28));
        assert_eq!(info.design_case, LsCase::Case1);
        assert_eq!(info.phix, 0.0);
        ls_design_free(d);

        assert_eq!(ls_design_new(1.5, 7, LsRule::Baseline, &mut d), LsStatus::Ok);
        let info = self::info(d).1.unwrap();
        assert_eq!((info.fx_num, info.fx_den), (11, 7));
        assert_eq!(info.design_case, LsCase::Baseline);
        ls_design_free(d);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(
            ls_design_new(4.0, 7, LsRule::Proposed, &mut d),
            LsStatus::InvalidArgument
        );
        assert!(d.is_null());
        assert!(last_error().starts_with("domain: "));

        assert_eq!(
            ls_design_new(1.5, 7, LsRule::Proposed, ptr::null_mut()),
            LsStatus::NullPointer
        );
        assert_eq!(last_error(), "output pointer is null");

        assert_eq!(info(ptr::null()).0, LsStatus::NullPointer);

        // a successful call clears the message
        assert_eq!(ls_design_new(1.5, 7, LsRule::Proposed, &mut d), LsStatus::Ok);
        assert!(ls_last_error_message().is_null());
        ls_design_free(d);
    }
}

#[test]
fn null_handles_are_tolerated_by_free_and_getters() {
    unsafe {
        ls_design_free(ptr::null_mut());
        ls_pattern_free(ptr::null_mut());
        ls_weight_map_free(ptr::null_mut());
        ls_params_free(ptr::null_mut());
        ls_optimize_result_free(ptr::null_mut());
        assert_eq!(ls_pattern_len(ptr::null()), 0);
        assert!(ls_optimize_result_loss(ptr::null()).is_nan());
        assert!(!ls_optimize_result_converged(ptr::null()));
    }
}

#[test]
fn pattern_fill_factor_and_range() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(ls_design_new(1.5, 7, LsRule::Proposed, &mut d), LsStatus::Ok);
        let cfg = normalized(1.5);
        let mut p = ptr::null_mut();
        assert_eq!(ls_pattern_sample(d, &cfg, 0, 1000, &mut p), LsStatus::Ok);
        assert_eq!(ls_pattern_len(p), 1000);

        let (mut fill, mut r_max) = (0.0, 0.0);
        assert_eq!(ls_fill_factor(p, 128, &mut fill, &mut r_max), LsStatus::Ok);
        assert!((fill - 1.8766).abs() < 1e-3, "{fill}");
        assert!((fill - (2.0 - r_max)).abs() < 1e-15);

        let mut range = 0.0;
        assert_eq!(ls_scanning_range(d, &cfg, &mut range), LsStatus::Ok);
        assert!((range - 0.7375).abs() < 1e-3, "{range}");

        // copy out and rebuild; the fill-factor must not change
        let n = ls_pattern_len(p);
        let (mut t, mut x, mut y) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            ls_pattern_copy(p, t.as_mut_ptr(), x.as_mut_ptr(), y.as_mut_ptr(), n),
            LsStatus::Ok
        );
        let mut q = ptr::null_mut();
        assert_eq!(
            ls_pattern_new(t.as_ptr(), x.as_ptr(), y.as_ptr(), n, 7, 1, &mut q),
            LsStatus::Ok
        );
        let mut fill2 = 0.0;
        assert_eq!(ls_fill_factor(q, 128, &mut fill2, ptr::null_mut()), LsStatus::Ok);
        assert_eq!(fill, fill2);

        ls_pattern_free(q);
        ls_pattern_free(p);
        ls_design_free(d);
    }
}

#[test]
fn degenerate_pattern_is_reported() {
    unsafe {
        let t: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let x: Vec<f64> = t.iter().map(|v| v.sin()).collect();
        let y = [0.0; 10];
        let mut p = ptr::null_mut();
        assert_eq!(
            ls_pattern_new(t.as_ptr(), x.as_ptr(), y.as_ptr(), 10, 1, 1, &mut p),
            LsStatus::Ok
        );
        let mut fill = 0.0;
        assert_eq!(
            ls_fill_factor(p, 16, &mut fill, ptr::null_mut()),
            LsStatus::DegeneratePattern
        );
        ls_pattern_free(p);
    }
}

#[test]
fn optimize_through_handles() {
    unsafe {
        let rect = LsRect {
            x0: 0.2,
            x1: 0.9,
            y0: 0.2,
            y1: 0.8,
        };
        let mut map = ptr::null_mut();
        assert_eq!(ls_weight_map_from_rects(&rect, 1, 32, &mut map), LsStatus::Ok);

        let xf = [2.0 * 13.0 / 14.0, 2.0, 2.0 * 15.0 / 14.0];
        let yf = [13.0 / 14.0, 1.0, 15.0 / 14.0];
        let cfg = normalized(2.0);
        let mut init = ptr::null_mut();
        let status = ls_params_random(
            xf.as_ptr(),
            3,
            yf.as_ptr(),
            3,
            2,
            7,
            &cfg,
            LsConstraint::Rms,
            5,
            &mut init,
        );
        assert_eq!(status, LsStatus::Ok);

        let mut opts = ls_optimize_options_default();
        assert_eq!(opts.max_iters, 200);
        opts.max_iters = 20;
        let mut res = ptr::null_mut();
        assert_eq!(ls_optimize(init, map, &opts, &mut res), LsStatus::Ok);

        let n = ls_optimize_result_trace_len(res);
        assert!(n >= 2);
        let mut trace = vec![0.0; n];
        assert_eq!(ls_optimize_result_trace(res, trace.as_mut_ptr(), n), LsStatus::Ok);
        let loss = ls_optimize_result_loss(res);
        assert!(loss < trace[0]);
        assert_eq!(loss, trace.iter().cloned().fold(f64::INFINITY, f64::min));
        assert!(ls_optimize_result_iterations(res) <= 20);

        let mut best = ptr::null_mut();
        assert_eq!(ls_optimize_result_params(res, &mut best), LsStatus::Ok);
        let mut p = ptr::null_mut();
        assert_eq!(ls_params_synthesize(best, 500, &mut p), LsStatus::Ok);
        assert_eq!(ls_pattern_len(p), 500);

        ls_pattern_free(p);
        ls_params_free(best);
        ls_optimize_result_free(res);
        ls_params_free(init);
        ls_weight_map_free(map);
    }
}

#[test]
fn weight_map_inputs_are_validated() {
    unsafe {
        let mut map = ptr::null_mut();
        let w = [0.0; 4];
        assert_eq!(ls_weight_map_new(w.as_ptr(), 2, &mut map), LsStatus::InvalidParams);
        let bad = LsRect {
            x0: 1.0,
            x1: 0.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert_ne!(ls_weight_map_from_rects(&bad, 1, 8, &mut map), LsStatus::Ok);

        let dir = std::env::temp_dir().join(format!("lissscan-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.csv");
        std::fs::write(&path, "1,0\n0,0\n").unwrap();
        let c = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(ls_weight_map_load(c.as_ptr(), &mut map), LsStatus::Ok);
        ls_weight_map_free(map);
        std::fs::write(&path, "1,0,0\n0,0,0\n").unwrap();
        assert_eq!(ls_weight_map_load(c.as_ptr(), &mut map), LsStatus::NonSquare);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

#[test]
fn multitone_round_trip_and_aliasing() {
    let omegas: [f64; 3] = [2.0, 2.7, 3.1];
    let (amps, phases) = ([0.4, 1.0, 0.25], [0.3, -1.2, 2.5]);
    let t: f64 = 1.0;
    let mut x = [0.0; 3];
    let mut xq = [0.0; 3];
    for (k, tk) in [0.0, t / 2.0, t].into_iter().enumerate() {
        for i in 0..3 {
            let arg = omegas[i] * tk + phases[i];
            x[k] += amps[i] * arg.cos();
            xq[k] += amps[i] * arg.sin();
        }
    }
    let mut out = LsMultitone::default();
    let s = unsafe { ls_solve_multitone(x.as_ptr(), xq.as_ptr(), omegas.as_ptr(), t, &mut out) };
    assert_eq!(s, LsStatus::Ok);
    for i in 0..3 {
        assert!((out.amps[i] - amps[i]).abs() < 1e-9);
        assert!((out.phases[i] - phases[i]).abs() < 1e-9);
    }

    // 4 pi apart with samples every T/2 = pi: indistinguishable
    let aliased = [1.0, 2.0, 1.0 + 4.0 * std::f64::consts::PI];
    let s = unsafe { ls_solve_multitone(x.as_ptr(), xq.as_ptr(), aliased.as_ptr(), 1.0, &mut out) };
    assert_eq!(s, LsStatus::IllConditioned);
    assert!(last_error().contains("tones 0 and 2"));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ls_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
