/// `J_0(x), ..., J_n(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and >= 0");
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (n as f64).max(x);
    let mut m = top as usize + 20 + (40.0 * top).sqrt() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut vals = vec![0.0f64; m + 2];
    vals[m] = 1e-280;
    let mut k = m;
    while k >= 1 {
        vals[k - 1] = (2.0 * k as f64 / x) * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
        k -= 1;
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}
