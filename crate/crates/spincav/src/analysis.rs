//! Small numerical helpers for peak picking, fitting and 1-D searches.

/// Indices of strict interior local maxima (a flat top counts once, at its first index).
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

pub fn local_minima(v: &[f64]) -> Vec<usize> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    local_maxima(&neg)
}

/// Topographic prominence of the peak at `i`.
pub fn prominence(v: &[f64], i: usize) -> f64 {
    let p = v[i];
    let mut left_min = p;
    for k in (0..i).rev() {
        if v[k] > p {
            break;
        }
        left_min = left_min.min(v[k]);
    }
    let mut right_min = p;
    for &x in &v[i + 1..] {
        if x > p {
            break;
        }
        right_min = right_min.min(x);
    }
    p - left_min.max(right_min)
}

/// Local maxima whose prominence is at least `min_prominence`.
pub fn prominent_maxima(v: &[f64], min_prominence: f64) -> Vec<usize> {
    local_maxima(v).into_iter().filter(|&i| prominence(v, i) >= min_prominence).collect()
}

/// Vertex of the parabola through samples i-1, i, i+1: (time, value).
pub fn refine_peak(t: &[f64], v: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= v.len() {
        return (t[i], v[i]);
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let den = a - 2.0 * b + c;
    if den == 0.0 {
        return (t[i], b);
    }
    let off = 0.5 * (a - c) / den;
    let h = t[i + 1] - t[i];
    (t[i] + off * h, b - 0.25 * (a - c) * off)
}

/// Least-squares line y = slope*x + intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Maximum of a unimodal `f` on [a, b] by golden-section search, to abscissa tolerance `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Root of `f` in [a, b] given a sign change, to tolerance `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
