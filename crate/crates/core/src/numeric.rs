//! Shared numerical routines: Gaussian cell integration, dense linear
//! solves, bracketed root finding, and local polynomial interpolation of
//! grid minima.

use std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Probability mass of N(mean, sd) over each cell `[edges[i], edges[i+1]]`.
///
/// `edges` has one more entry than the returned vector; infinite outer
/// edges are allowed. Cells above the mean are computed from survival
/// functions so far-tail masses stay positive instead of cancelling to
/// zero.
pub fn gaussian_cell_masses(mean: f64, sd: f64, edges: &[f64]) -> Vec<f64> {
    debug_assert!(edges.len() >= 2);
    debug_assert!(sd > 0.0);
    let cdf = |e: f64| {
        if e == f64::NEG_INFINITY {
            0.0
        } else if e == f64::INFINITY {
            1.0
        } else {
            normal_cdf((e - mean) / sd)
        }
    };
    let sf = |e: f64| {
        if e == f64::NEG_INFINITY {
            1.0
        } else if e == f64::INFINITY {
            0.0
        } else {
            0.5 * libm::erfc((e - mean) / (sd * SQRT_2))
        }
    };
    let mut out = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mass = if a >= mean {
            sf(a) - sf(b)
        } else {
            cdf(b) - cdf(a)
        };
        out.push(mass.max(0.0));
    }
    out
}

/// Cell edges at midpoints of grid nodes. Outer edges extend half a
/// spacing beyond the end nodes when `finite_ends`, otherwise to ±∞.
pub fn midpoint_edges(points: &[f64], finite_ends: bool) -> Vec<f64> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n + 1);
    if n == 1 {
        return vec![f64::NEG_INFINITY, f64::INFINITY];
    }
    if finite_ends {
        edges.push(points[0] - 0.5 * (points[1] - points[0]));
    } else {
        edges.push(f64::NEG_INFINITY);
    }
    for i in 0..n - 1 {
        edges.push(0.5 * (points[i] + points[i + 1]));
    }
    if finite_ends {
        edges.push(points[n - 1] + 0.5 * (points[n - 1] - points[n - 2]));
    } else {
        edges.push(f64::INFINITY);
    }
    edges
}

/// Solves `A x = b` by partial-pivot Gaussian elimination.
///
/// `a` is row-major n×n and is consumed. Returns `None` on a (numerically)
/// singular pivot.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Bisection root finder on `[lo, hi]`; requires a sign change.
///
/// Stops when `|f| <= ftol` or the bracket shrinks below `xtol`, returning
/// the midpoint and its value.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut flo = f(lo);
    if flo == 0.0 {
        return (lo, 0.0);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return (hi, 0.0);
    }
    debug_assert!(flo.signum() != fhi.signum());
    let mut mid = 0.5 * (lo + hi);
    let mut fmid = f(mid);
    for _ in 0..max_iter {
        if fmid.abs() <= ftol || (hi - lo).abs() <= xtol {
            break;
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        fmid = f(mid);
    }
    (mid, fmid)
}

/// Minimum of an interpolating polynomial through `(xs, ys)` on `[lo, hi]`.
///
/// Fits by Newton divided differences on shifted/scaled abscissae, scans
/// densely, then refines by golden section. Used to place a grid argmin
/// between nodes; `xs` is small (3 or 5 points).
pub fn local_poly_argmin(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(xs.len() >= 3);
    let mid = 0.5 * (xs[0] + xs[xs.len() - 1]);
    let scale = 0.5 * (xs[xs.len() - 1] - xs[0]);
    if !(scale > 0.0) {
        return mid;
    }
    let t: Vec<f64> = xs.iter().map(|&x| (x - mid) / scale).collect();
    // Newton divided differences.
    let mut coef = ys.to_vec();
    for j in 1..t.len() {
        for i in (j..t.len()).rev() {
            coef[i] = (coef[i] - coef[i - 1]) / (t[i] - t[i - j]);
        }
    }
    let eval = |x: f64| {
        let u = (x - mid) / scale;
        let mut acc = coef[t.len() - 1];
        for i in (0..t.len() - 1).rev() {
            acc = acc * (u - t[i]) + coef[i];
        }
        acc
    };
    // Dense scan for a global bracket, then golden-section refinement.
    let n_scan = 256;
    let mut best_x = lo;
    let mut best_y = eval(lo);
    for k in 1..=n_scan {
        let x = lo + (hi - lo) * k as f64 / n_scan as f64;
        let y = eval(x);
        if y < best_y {
            best_y = y;
            best_x = x;
        }
    }
    let step = (hi - lo) / n_scan as f64;
    let (mut a, mut b) = ((best_x - step).max(lo), (best_x + step).min(hi));
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    while b - a > 1e-14 * scale.max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    0.5 * (a + b)
}

/// Sup-norm distance between two equally sized slices.
pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_symmetry() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.0) + normal_cdf(-1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_cells_sum_to_one_with_infinite_ends() {
        let edges = midpoint_edges(&[-2.0, -1.0, 0.0, 1.0, 2.0], false);
        let masses = gaussian_cell_masses(0.3, 1.1, &edges);
        let total: f64 = masses.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dense_solve_recovers_solution() {
        let a = vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = solve_dense(a, b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert_abs_diff_eq!(xi, ti, epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_dense_rejects_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let (x, _) = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, 1e-14, 200);
        assert_abs_diff_eq!(x, SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn poly_argmin_recovers_quartic_minimum() {
        // f(x) = (x - 0.3)^2 + 0.1 (x - 0.3)^4, minimum at 0.3.
        let f = |x: f64| (x - 0.3).powi(2) + 0.1 * (x - 0.3).powi(4);
        let xs: Vec<f64> = (-2..=2).map(|k| 0.29 + 0.05 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let xmin = local_poly_argmin(&xs, &ys, xs[1], xs[3]);
        assert_abs_diff_eq!(xmin, 0.3, epsilon = 1e-9);
    }
}
