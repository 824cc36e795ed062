use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use taskcomm_ffi::*;

fn last_error() -> String {
    let p = tc_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn overhead_matches_reference_counts() {
    assert_eq!(tc_overhead_c_sc(4840, 1852), 8_963_680);
    assert_eq!(tc_overhead_c_tc(4840, 36), 174_240);
    let mpeg = tc_overhead_c_mpeg(922_746_880, 25.0);
    assert!((mpeg / 111_048_888.0 - 1.0).abs() < 1e-4);

    let mut r = 0.0;
    assert_eq!(unsafe { tc_overhead_reduction(174_240, 8_963_680, &mut r) }, TcStatus::Ok);
    assert!((r - (1.0 - 36.0 / 1852.0)).abs() < 1e-15);
    assert!(tc_last_error_message().is_null());
    assert_eq!(unsafe { tc_overhead_reduction(1, 0, &mut r) }, TcStatus::InvalidArgument);
    assert!(last_error().contains("zero"));
    assert_eq!(unsafe { tc_overhead_reduction(1, 2, ptr::null_mut()) }, TcStatus::NullPointer);
}

#[test]
fn gravity_feature_cases() {
    let mut u = 0.0;
    let upright = [0.0, 0.0, 1.0].repeat(50);
    assert_eq!(unsafe { tc_gravity_feature(upright.as_ptr(), 50, &mut u) }, TcStatus::Ok);
    assert!((u - 1.0).abs() < 1e-12);
    let flat = [1.0, 0.0, 0.0].repeat(50);
    assert_eq!(unsafe { tc_gravity_feature(flat.as_ptr(), 50, &mut u) }, TcStatus::Ok);
    assert!(u.abs() < 1e-12);
    let zeros = [0.0; 150];
    assert_ne!(unsafe { tc_gravity_feature(zeros.as_ptr(), 50, &mut u) }, TcStatus::Ok);
    assert_eq!(unsafe { tc_gravity_feature(ptr::null(), 50, &mut u) }, TcStatus::NullPointer);
}

#[test]
fn channel_transmit_noise_and_identity() {
    let n = 20_000;
    let clean: Vec<f64> = (0..2 * n).map(|i| if i % 3 == 0 { 1.0 } else { -0.5 }).collect();
    let mut rx = vec![0.0; 2 * n];
    let ok = unsafe { tc_channel_transmit(clean.as_ptr(), n, f64::INFINITY, 1, rx.as_mut_ptr()) };
    assert_eq!(ok, TcStatus::Ok);
    assert_eq!(rx, clean);

    assert_eq!(unsafe { tc_channel_transmit(clean.as_ptr(), n, 10.0, 1, rx.as_mut_ptr()) }, TcStatus::Ok);
    let p_signal = clean.iter().map(|v| v * v).sum::<f64>();
    let p_noise = rx.iter().zip(&clean).map(|(r, c)| (r - c).powi(2)).sum::<f64>();
    let snr = 10.0 * (p_signal / p_noise).log10();
    assert!((snr - 10.0).abs() < 0.2, "{snr}");

    let zeros = [0.0; 8];
    let mut sink = vec![0.0; 8];
    assert_eq!(
        unsafe { tc_channel_transmit(zeros.as_ptr(), 4, 10.0, 1, sink.as_mut_ptr()) },
        TcStatus::Channel
    );
}

#[test]
fn controller_handle_lifecycle() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tc_controller_new(3, &mut c) }, TcStatus::Ok);
    // sitting, sitting, standing x3 -> ACK at window 4
    let seq = [1, 1, 2, 2, 2, 2];
    let mut acks = Vec::new();
    for (i, &p) in seq.iter().enumerate() {
        let (mut e, mut fired) = (TcAckEvent::default(), false);
        assert_eq!(unsafe { tc_controller_observe(c, p, i, &mut e, &mut fired) }, TcStatus::Ok);
        if fired {
            acks.push(e);
        }
    }
    assert_eq!(acks, [TcAckEvent { t: 4, from: 1, to: 2 }]);

    let (mut e, mut fired) = (TcAckEvent::default(), false);
    assert_eq!(unsafe { tc_controller_observe(c, 2, 99, &mut e, &mut fired) }, TcStatus::Controller);
    assert_eq!(unsafe { tc_controller_observe(c, 7, 6, &mut e, &mut fired) }, TcStatus::InvalidArgument);
    unsafe { tc_controller_free(c) };
    unsafe { tc_controller_free(ptr::null_mut()) };

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { tc_controller_new(0, &mut bad) }, TcStatus::Controller);
    assert!(bad.is_null());
}

#[test]
fn forest_train_save_load_classify() {
    let u: Vec<f64> = (0..80).map(|i| [0.05, 0.6, 0.95, 0.85][i % 4] + 0.001 * (i / 4) as f64).collect();
    let labels: Vec<u32> = (0..80).map(|i| (i % 4) as u32).collect();
    let mut f = ptr::null_mut();
    let status = unsafe { tc_forest_train(u.as_ptr(), labels.as_ptr(), u.len(), 5, 4, 3, &mut f) };
    assert_eq!(status, TcStatus::Ok);
    let mut code = 9;
    assert_eq!(unsafe { tc_forest_classify(f, 0.0, &mut code) }, TcStatus::Ok);
    assert_eq!(code, 0);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("f.semw").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tc_forest_save(f, path.as_ptr()) }, TcStatus::Ok);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tc_forest_load(path.as_ptr(), &mut g) }, TcStatus::Ok);
    for x in [0.0, 0.3, 0.61, 0.9, 0.97] {
        let (mut a, mut b) = (0, 0);
        unsafe {
            tc_forest_classify(f, x, &mut a);
            tc_forest_classify(g, x, &mut b);
        }
        assert_eq!(a, b);
    }
    unsafe {
        tc_forest_free(f);
        tc_forest_free(g);
    }

    let missing = CString::new(dir.path().join("none.semw").to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tc_forest_load(missing.as_ptr(), &mut h) }, TcStatus::Io);
    std::fs::write(dir.path().join("junk.semw"), b"JUNKJUNKJUNK").unwrap();
    let junk = CString::new(dir.path().join("junk.semw").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tc_forest_load(junk.as_ptr(), &mut h) }, TcStatus::Format);
    assert!(last_error().contains("magic"), "{}", last_error());

    let bad_labels = [0u32, 4];
    let status = unsafe { tc_forest_train(u.as_ptr(), bad_labels.as_ptr(), 2, 1, 1, 0, &mut h) };
    assert_eq!(status, TcStatus::InvalidArgument);
}

#[test]
fn codec_encode_decode_round_trip() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tc_codec_init(5, &mut c) }, TcStatus::Ok);
    let pixels: Vec<u8> = (0..TC_SEGMENT_BYTES).map(|i| (i * 31 % 251) as u8).collect();
    let mut symbols = vec![0.0; 2 * TC_SYMBOLS_PER_FRAME];
    let mut gain = 0.0;
    let status = unsafe { tc_codec_encode(c, pixels.as_ptr(), pixels.len(), symbols.as_mut_ptr(), &mut gain) };
    assert_eq!(status, TcStatus::Ok);
    assert!(gain > 0.0);
    let power = symbols.iter().map(|v| v * v).sum::<f64>() / TC_SYMBOLS_PER_FRAME as f64;
    assert!((power - 1.0).abs() < 1e-12);

    // Decoding the clean symbols must match the library's own clean pass.
    let mut logits = [0.0; TC_NUM_ACTIVITIES];
    let mut activity = 9;
    let status = unsafe {
        tc_codec_decode(c, symbols.as_ptr(), TC_SYMBOLS_PER_FRAME, gain, logits.as_mut_ptr(), &mut activity)
    };
    assert_eq!(status, TcStatus::Ok);
    let frames = pixels
        .chunks_exact(TC_SEGMENT_BYTES / 16)
        .map(|f| taskcomm::codec::Frame::new(f.to_vec()).unwrap())
        .collect();
    let segment = taskcomm::codec::VideoSegment::new(0, frames).unwrap();
    let direct = taskcomm::codec::CodecModel::init(5).forward_clean(&segment).unwrap();
    assert_eq!(&logits[..], direct.logits.data());
    assert_eq!(activity as usize, taskcomm::codec::classify(&direct.logits).code());

    let status = unsafe { tc_codec_encode(c, pixels.as_ptr(), 100, symbols.as_mut_ptr(), &mut gain) };
    assert_eq!(status, TcStatus::Shape);
    let status = unsafe { tc_codec_decode(c, symbols.as_ptr(), 10, gain, logits.as_mut_ptr(), &mut activity) };
    assert_eq!(status, TcStatus::Shape);
    let status = unsafe { tc_codec_decode(c, symbols.as_ptr(), 4840, 0.0, logits.as_mut_ptr(), &mut activity) };
    assert_eq!(status, TcStatus::InvalidArgument);
    unsafe { tc_codec_free(c) };

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codec.semw");
    taskcomm::codec::CodecModel::init(5).save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { tc_codec_load(cpath.as_ptr(), &mut loaded) }, TcStatus::Ok);
    unsafe { tc_codec_free(loaded) };
}

#[test]
fn status_names_are_static() {
    let name = unsafe { CStr::from_ptr(tc_status_name(TcStatus::Format)) };
    assert_eq!(name.to_str().unwrap(), "format error");
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/taskcomm.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for name in [
        "TC_STATUS_OK",
        "TC_STATUS_PANIC",
        "typedef struct TcController TcController",
        "TcAckEvent",
        "tc_controller_observe",
        "tc_codec_encode",
        "tc_forest_load",
        "tc_last_error_message",
        "TC_SYMBOLS_PER_FRAME",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }

    // Syntax-check the header with the system C compiler when one exists.
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"taskcomm.h\"\nint main(void) { TcController *c = 0; \
         TcStatus s = tc_controller_new(3, &c); tc_controller_free(c); return s == TC_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
