use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iterative radix-2 decimation-in-time FFT. `buf.len()` must be a power of
/// two.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(Error::FftSize(n));
    }
    let bits = n.trailing_zeros();
    if bits == 0 {
        return Ok(());
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let tw = Complex64::from_polar(1.0, step * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * tw;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

fn spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<Complex64>> {
    if !fft_size.is_power_of_two() {
        return Err(Error::FftSize(fft_size));
    }
    if frame.len() > fft_size {
        return Err(Error::Shape(format!(
            "frame of {} samples exceeds fft size {fft_size}",
            frame.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft_in_place(&mut buf)?;
    buf.truncate(fft_size / 2 + 1);
    Ok(buf)
}

/// Magnitudes of the non-negative frequency bins (`fft_size/2 + 1` values) of
/// the zero-padded frame.
pub fn fft_magnitude(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(frame, fft_size)?.iter().map(|c| c.norm()).collect())
}

/// Squared magnitudes of the non-negative frequency bins.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(frame, fft_size)?.iter().map(|c| c.norm_sqr()).collect())
}
