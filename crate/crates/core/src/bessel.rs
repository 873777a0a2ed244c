//! Integer-order Bessel functions of the first kind.

/// `J_n(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ_{k≥1} J_{2k} = 1`.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(order, -x);
        return if order % 2 == 0 { v } else { -v };
    }
    let n = order as usize;
    // Start well beyond both the order and the argument so the dominant
    // solution has decayed below double precision.
    let start = {
        let m = n.max(x.ceil() as usize) + 20 + (40.0 * x.max(1.0).sqrt()) as usize;
        m + m % 2
    };
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    let mut norm = 0.0f64;
    let mut wanted = 0.0f64;
    for k in (1..=start).rev() {
        // cur = J_k, next = J_{k+1} (unnormalized)
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx == n {
            wanted = cur;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    if n == start {
        wanted = next;
    }
    norm += cur;
    wanted / norm
}

/// `J_n(x)` by its power series; accurate only for moderate `|x|`.
pub fn bessel_j_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let mut total = term;
    let q = -half * half;
    for m in 1..200 {
        term *= q / (m as f64 * (m + order) as f64);
        total += term;
        if term.abs() < 1e-17 * total.abs() {
            break;
        }
    }
    total
}
