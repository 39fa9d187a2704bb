//! Quadrature helpers.

/// Cumulative Simpson integral over uniformly spaced samples.
///
/// `values` holds `f` at `2n + 1` equally spaced abscissae with spacing `h`.
/// The result has `n + 1` entries: the integral from the first abscissa to
/// every even-indexed one.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    debug_assert!(values.len() % 2 == 1, "Simpson needs an odd sample count");
    let mut out = Vec::with_capacity(values.len() / 2 + 1);
    let mut acc = 0.0;
    out.push(acc);
    for pair in values.windows(3).step_by(2) {
        acc += h / 3.0 * (pair[0] + 4.0 * pair[1] + pair[2]);
        out.push(acc);
    }
    out
}

/// Composite Simpson rule on an arbitrary increasing grid.
///
/// Each consecutive pair of intervals is treated with the non-uniform
/// three-point Simpson formula; a trailing odd interval uses the
/// three-point formula restricted to its last interval.
pub fn simpson_nonuniform(x: &[f64], f: &[f64]) -> f64 {
    assert_eq!(x.len(), f.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        total += simpson_panel(x[i], x[i + 1], x[i + 2], f[i], f[i + 1], f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // Last interval [x[n-2], x[n-1]] from the quadratic through the final three nodes.
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let (f0, f1, f2) = (f[n - 3], f[n - 2], f[n - 1]);
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        total += h2 / 6.0 * ((3.0 - h2 / (h1 + h2)) * f2 + (3.0 + h2 / h1) * f1 - h2 * h2 / (h1 * (h1 + h2)) * f0);
    }
    total
}

fn simpson_panel(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    let hs = h0 + h1;
    hs / 6.0 * ((2.0 - h1 / h0) * f0 + hs * hs / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: FnMut(f64) -> Result<f64, E>, E>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), E> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Adaptive Gauss–Kronrod (7/15) integration to absolute tolerance `tol`.
///
/// Intervals are bisected until their Kronrod/Gauss discrepancy falls below
/// a share of `tol` proportional to their length or `max_depth` is reached.
pub fn adaptive_gk<F, E>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let total_len = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut sum = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, lo, hi)?;
        let allowed = tol * (hi - lo) / total_len;
        if err <= allowed || depth >= max_depth {
            sum += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn cumulative_simpson_is_exact_for_cubics() {
        let h = 0.25;
        let vals: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        let cum = cumulative_simpson(&vals, h);
        assert_eq!(cum.len(), 5);
        for (k, c) in cum.iter().enumerate() {
            let x = 2.0 * k as f64 * h;
            assert!((c - x.powi(4) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nonuniform_simpson_quadratic_exact() {
        let x = [0.0, 0.1, 0.35, 0.4, 0.9, 1.0];
        let f: Vec<f64> = x.iter().map(|v| 3.0 * v * v - v + 2.0).collect();
        let exact = 1.0 - 0.5 + 2.0;
        assert!((simpson_nonuniform(&x, &f) - exact).abs() < 1e-13);
    }

    #[test]
    fn gauss_kronrod_exponential() {
        let v = adaptive_gk(|x| Ok::<_, Infallible>((-x).exp() * x), 0.0, 40.0, 1e-12, 30).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }
}
