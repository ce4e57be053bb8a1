use std::ffi::{CStr, CString};
use std::ptr;

use whitext_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(wx_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn handles_round_trip() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(wx_grid_new(1, 512, -1.5, 2.5, &mut g), WxStatus::Ok);
        assert_eq!(wx_grid_len(g), 512);
        assert!((wx_grid_h(g) - 4.0 / 512.0).abs() < 1e-15);

        let spec = CString::new(r#"{"kind": "box", "lo": [0.0], "hi": [1.0]}"#).unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(wx_set_new(g, spec.as_ptr(), &mut s), WxStatus::Ok, "{}", last_error());
        assert_eq!(wx_set_len(s), 128);
        let (mut theta, mut delta) = (0.0, 0.0);
        assert_eq!(wx_set_regularity(s, &mut theta, &mut delta), WxStatus::Ok);
        assert!(theta >= 1.0 && delta > 0.0);

        let fspec = CString::new(r#"{"kind": "constant", "value": 2.0}"#).unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(wx_function_generate(s, fspec.as_ptr(), &mut f), WxStatus::Ok);

        let mut e = ptr::null_mut();
        assert_eq!(wx_extension_new(s, 2, 4, &mut e), WxStatus::Ok, "{}", last_error());
        assert!(wx_extension_cube_count(e) > 0);
        let mut ef = ptr::null_mut();
        assert_eq!(wx_extension_apply(e, f, &mut ef), WxStatus::Ok);

        let mut buf = vec![0.0; 512];
        let mut len = 0;
        assert_eq!(wx_function_values(ef, buf.as_mut_ptr(), buf.len(), &mut len), WxStatus::Ok);
        assert_eq!(len, 512);
        // Cells of S keep their values.
        assert_eq!(buf[200], 2.0);
        assert!(last_error().is_empty());

        let space = CString::new("besov").unwrap();
        let mut v = f64::NAN;
        assert_eq!(wx_trace_norm(f, s, space.as_ptr(), 0.5, 1, 2.0, 2.0, 1.0, &mut v), WxStatus::Ok);
        assert!((v - 2.0).abs() < 1e-9, "{v}");

        wx_function_free(ef);
        wx_function_free(f);
        wx_extension_free(e);
        wx_set_free(s);
        wx_grid_free(g);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(wx_grid_new(1, 16, 0.0, 1.0, ptr::null_mut()), WxStatus::NullPointer);
        assert_eq!(wx_grid_new(9, 16, 0.0, 1.0, &mut g), WxStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(wx_grid_new(1, 16, 0.0, 1.0, &mut g), WxStatus::Ok);
        let bad = CString::new("{not json").unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(wx_set_new(g, bad.as_ptr(), &mut s), WxStatus::Parse);

        let vals = [1.0; 16];
        let mut f = ptr::null_mut();
        assert_eq!(wx_function_new(g, vals.as_ptr(), 15, &mut f), WxStatus::InvalidArgument);
        assert_eq!(wx_function_new(g, vals.as_ptr(), 16, &mut f), WxStatus::Ok);
        let mut small = [0.0; 4];
        let mut len = 0;
        assert_eq!(wx_function_values(f, small.as_mut_ptr(), 4, &mut len), WxStatus::BufferTooSmall);
        assert_eq!(len, 16);
        let nan = [f64::NAN; 16];
        let mut f2 = ptr::null_mut();
        assert_ne!(wx_function_new(g, nan.as_ptr(), 16, &mut f2), WxStatus::Ok);

        assert_eq!(wx_grid_len(ptr::null()), 0);
        assert!(wx_grid_h(ptr::null()).is_nan());
        wx_grid_free(ptr::null_mut());
        wx_function_free(f);
        wx_grid_free(g);
    }
}

#[test]
fn verify_returns_a_json_report() {
    let cfg = CString::new(
        r#"
[sampling]
reproduction_orders = [1]
pointwise = 10
localization = 10
near_best_pairs = 1
local_cubes = 2
overlap_points = 50
derivative_cubes = 4
quadrature = false

[params]
s = [0.5]
k = [1]
p = [2.0]
q = [2.0]
u = [1.0]
u_equals_p = false

[[sets]]
name = "half_line"
spec = { kind = "half_space", axis = 0, offset = 0.0 }
grid = { n = 1, cells = 128, lo = -1.5, hi = 2.5 }
functions = [{ kind = "constant", value = 1.0 }]
"#,
    )
    .unwrap();
    unsafe {
        let mut report = ptr::null_mut();
        let mut failed = usize::MAX;
        assert_eq!(wx_verify(cfg.as_ptr(), &mut report, &mut failed), WxStatus::Ok, "{}", last_error());
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        wx_string_free(report);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed.as_array().unwrap().len() > 10);
        assert!(failed < usize::MAX);
        let junk = CString::new("sets = 3").unwrap();
        assert_eq!(wx_verify(junk.as_ptr(), &mut report, &mut failed), WxStatus::Parse);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(wx_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
