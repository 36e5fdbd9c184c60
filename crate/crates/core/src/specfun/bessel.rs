use crate::error::{domain, Result};

/// Spherical Bessel function of the first kind `j_l(x)` for `x >= 0`.
pub fn spherical_bessel(ell: usize, x: f64) -> Result<f64> {
    Ok(spherical_bessel_array(ell, x)?[ell])
}

/// `j_0(x), ..., j_lmax(x)` in one sweep.
///
/// Orders below the argument come from the upward recurrence, which is
/// stable there. Everything else is filled by Miller's backward recurrence
/// started well above `lmax` and normalised against `j_0` or `j_1`.
pub fn spherical_bessel_array(lmax: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() || x < 0.0 {
        return domain(format!("spherical Bessel argument {x} must be finite and >= 0"));
    }
    let mut out = vec![0.0; lmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = if x < 0.1 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
    } else {
        (s / x - c) / x
    };
    out[0] = j0;
    if lmax == 0 {
        return Ok(out);
    }
    out[1] = j1;

    // Orders up to `up_to` are below the argument: recur upward.
    let up_to = (x.floor() as usize).clamp(1, lmax);
    for l in 1..up_to {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    if up_to == lmax {
        return Ok(out);
    }

    // Miller: f_{n-1} = (2n+1)/x f_n - f_{n+1}, from f_{N+1} = 0, f_N = tiny.
    let top = lmax.max(x.ceil() as usize);
    let start = top + 20 + (10.0 * (top as f64).sqrt()) as usize;
    let mut f_next = 0.0;
    let mut f_cur = 1e-300;
    let mut back = vec![0.0; lmax + 1];
    for n in (1..=start).rev() {
        if n <= lmax {
            back[n] = f_cur;
        }
        let f_prev = (2 * n + 1) as f64 / x * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        if f_cur.abs() > 1e250 {
            // Rescale everything computed so far to stay finite.
            let k = 1e-250;
            f_cur *= k;
            f_next *= k;
            back.iter_mut().for_each(|b| *b *= k);
        }
    }
    back[0] = f_cur;
    let scale = if j0.abs() >= j1.abs() { j0 / back[0] } else { j1 / back[1] };
    for l in up_to + 1..=lmax {
        out[l] = back[l] * scale;
    }
    Ok(out)
}
