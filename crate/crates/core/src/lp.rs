//! Phase-one simplex for equality-form feasibility: find `u >= 0` with
//! `A u = b`, or certify that none exists. Used by the trivializing-input
//! construction, whose balance equations may or may not admit a
//! nonnegative solution depending on the channel parameters.

const EPS: f64 = 1e-11;

/// Returns a nonnegative solution of `A u = b` or `None` if the system is
/// infeasible. Minimizes the sum of artificial variables with Bland's
/// rule, so it terminates on degenerate systems.
pub(crate) fn feasible_point(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let n = a[0].len();
    // Flip rows to make b nonnegative, then append an identity of
    // artificial columns; the tableau carries the phase-one objective in
    // its last row.
    let cols = n + m;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols] = sign * b[i];
    }
    // objective row: minimize sum of artificials = sum of rows
    for i in 0..m {
        for j in 0..=cols {
            let add = t[i][j];
            t[m][j] += add;
        }
    }
    for i in 0..m {
        t[m][n + i] = 0.0;
    }
    let mut basis: Vec<usize> = (n..cols).collect();

    // Bland's rule keeps the walk acyclic; the cap is a numeric backstop.
    for _ in 0..50_000 {
        // Entering variable: lowest index with positive reduced cost.
        let Some(enter) = (0..cols).find(|&j| t[m][j] > EPS) else {
            break;
        };
        // Ratio test, ties broken by lowest basis index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][cols] / t[i][enter];
                if ratio < best - EPS
                    || (ratio < best + EPS && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = leave?; // unbounded phase-one cannot happen, but stay safe
        let piv = t[leave][enter];
        for j in 0..=cols {
            t[leave][j] /= piv;
        }
        for i in 0..=m {
            if i != leave && t[i][enter].abs() > 0.0 {
                let f = t[i][enter];
                for j in 0..=cols {
                    let sub = f * t[leave][j];
                    t[i][j] -= sub;
                }
            }
        }
        basis[leave] = enter;
    }

    if (0..cols).any(|j| t[m][j] > EPS) {
        return None; // iteration cap hit before optimality
    }
    if t[m][cols].abs() > 1e-8 {
        return None; // artificials retain mass: infeasible
    }
    let mut u = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            u[basis[i]] = t[i][cols].max(0.0);
        } else if t[i][cols].abs() > 1e-8 {
            return None;
        }
    }
    Some(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_simple_feasible_system() {
        // x0 + x1 = 1, x0 - x1 = 0  ->  (0.5, 0.5)
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let u = feasible_point(&a, &[1.0, 0.0]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-9);
        assert!((u[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_sign_constraint() {
        // x0 + x1 = -1 has no nonnegative solution.
        let a = vec![vec![1.0, 1.0]];
        assert!(feasible_point(&a, &[-1.0]).is_none());
    }

    #[test]
    fn finds_point_in_underdetermined_system() {
        // one equation, three unknowns
        let a = vec![vec![1.0, 2.0, 3.0]];
        let u = feasible_point(&a, &[2.0]).unwrap();
        let r: f64 = u[0] + 2.0 * u[1] + 3.0 * u[2];
        assert!((r - 2.0).abs() < 1e-9);
        assert!(u.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn detects_conflicting_equations() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(feasible_point(&a, &[1.0, 2.0]).is_none());
    }
}
