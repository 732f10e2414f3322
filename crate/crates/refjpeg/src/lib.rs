//! Reference decoder for tests: the system libjpeg, called through a small C
//! shim. Kept out of the library crates so they stay pure Rust.

use std::ffi::CStr;
use std::os::raw::{c_char, c_int, c_uint, c_ulong};

extern "C" {
    fn refjpeg_decode(
        data: *const u8,
        len: c_ulong,
        out: *mut *mut u8,
        width: *mut c_uint,
        height: *mut c_uint,
        components: *mut c_int,
        msg: *mut c_char,
        msg_len: usize,
    ) -> c_int;
    fn refjpeg_free(p: *mut u8);
    fn refjpeg_coefficients(
        data: *const u8,
        len: c_ulong,
        comp: c_int,
        out: *mut *mut i16,
        blocks_w: *mut c_uint,
        blocks_h: *mut c_uint,
        msg: *mut c_char,
        msg_len: usize,
    ) -> c_int;
    fn refjpeg_free_coefficients(p: *mut i16);
}

/// A decoded image as interleaved RGB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefImage {
    pub width: usize,
    pub height: usize,
    /// Components in the file (1 for grayscale, 3 for YCbCr).
    pub components: usize,
    pub rgb: Vec<u8>,
}

/// Decode `bytes` with libjpeg's accurate integer IDCT and fancy upsampling.
pub fn decode(bytes: &[u8]) -> Result<RefImage, String> {
    let mut out = std::ptr::null_mut();
    let (mut w, mut h, mut comps) = (0, 0, 0);
    let mut msg = [0 as c_char; 256];
    // SAFETY: the shim reads only `bytes`, writes only the out-params, and
    // hands back a malloc'd buffer of w*h*3 bytes that we release below.
    let status = unsafe {
        refjpeg_decode(
            bytes.as_ptr(),
            bytes.len() as c_ulong,
            &mut out,
            &mut w,
            &mut h,
            &mut comps,
            msg.as_mut_ptr(),
            msg.len(),
        )
    };
    if status != 0 {
        // SAFETY: the shim always NUL-terminates via snprintf.
        let text = unsafe { CStr::from_ptr(msg.as_ptr()) };
        return Err(text.to_string_lossy().into_owned());
    }
    let len = w as usize * h as usize * 3;
    // SAFETY: on success `out` points to `len` initialised bytes.
    let rgb = unsafe { std::slice::from_raw_parts(out, len) }.to_vec();
    unsafe { refjpeg_free(out) };
    Ok(RefImage {
        width: w as usize,
        height: h as usize,
        components: comps as usize,
        rgb,
    })
}

/// Quantized coefficients of one component as libjpeg reads them: blocks in
/// raster order over the component's block grid, natural order within.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefCoefficients {
    pub blocks_w: usize,
    pub blocks_h: usize,
    pub blocks: Vec<[i16; 64]>,
}

pub fn coefficients(bytes: &[u8], component: usize) -> Result<RefCoefficients, String> {
    let mut out = std::ptr::null_mut();
    let (mut bw, mut bh) = (0, 0);
    let mut msg = [0 as c_char; 256];
    // SAFETY: as in `decode`; the buffer holds bw*bh*64 values.
    let status = unsafe {
        refjpeg_coefficients(
            bytes.as_ptr(),
            bytes.len() as c_ulong,
            component as c_int,
            &mut out,
            &mut bw,
            &mut bh,
            msg.as_mut_ptr(),
            msg.len(),
        )
    };
    if status != 0 {
        let text = unsafe { CStr::from_ptr(msg.as_ptr()) };
        return Err(text.to_string_lossy().into_owned());
    }
    let n = bw as usize * bh as usize;
    let flat = unsafe { std::slice::from_raw_parts(out, n * 64) };
    let blocks = flat
        .chunks_exact(64)
        .map(|c| <[i16; 64]>::try_from(c).unwrap())
        .collect();
    unsafe { refjpeg_free_coefficients(out) };
    Ok(RefCoefficients {
        blocks_w: bw as usize,
        blocks_h: bh as usize,
        blocks,
    })
}
