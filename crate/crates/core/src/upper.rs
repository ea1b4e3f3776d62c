//! The window-`L` upper-bound family: exact objective over length-`(L+1)`
//! input block distributions, the stationary polytope, a log-barrier
//! interior-point maximizer in null-space coordinates, and the two-string
//! construction showing the bound trivializes without stationarity.
//!
//! The objective is
//! `H(Y_{n+L} | Y_{n+1}^{n+L-1}) - H(Y_{n+L} | Y_{n+1}^{n+L-1}, X_n^{n+L}, Z_n)`:
//! a concave entropy difference of the pushforward `W u` minus an affine
//! term `c . u`, maximized over stationary (optionally bit-symmetric)
//! block distributions `u`.

use crate::info::{stationarity_constraints, BlockDistribution, ConstraintSystem};
use crate::linalg::{cholesky_solve, null_space, Mat};
use crate::math::{complement, entropy_bits, LN_2};
use crate::state::{one_step_matrix, stationary_distribution, ChannelParams};
use crate::{Error, Result};

/// Enumeration guard; the pair enumeration is `4^(L+1)`.
const MAX_WINDOW: usize = 12;

/// A built instance of the window-`L` maximization.
#[derive(Debug, Clone)]
pub struct UpperBoundProblem {
    l: usize,
    params: ChannelParams,
    /// `2^L x 2^(L+1)`: maps the input block distribution to the joint
    /// law of the `L` outputs in the window.
    w: Mat,
    /// Prefix-collapsed `w` (top output marginalized): `2^(L-1) x 2^(L+1)`.
    w_prefix: Mat,
    /// Affine coefficients of the conditional entropy term.
    c: Vec<f64>,
    constraints: ConstraintSystem,
    bitsym: bool,
}

impl UpperBoundProblem {
    pub fn window(&self) -> usize {
        self.l
    }

    pub fn params(&self) -> ChannelParams {
        self.params
    }

    pub fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    /// Whether the bit-symmetry rows were included at build time.
    pub fn bit_symmetric(&self) -> bool {
        self.bitsym
    }

    pub fn conditional_coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Column `x` of the output map: the law of the window outputs for a
    /// point-mass input on block `x`.
    pub fn output_column(&self, x: u64) -> Vec<f64> {
        (0..self.w.rows).map(|y| self.w.at(y, x as usize)).collect()
    }
}

/// Builds the output map `W`, the conditional coefficients `c`, and the
/// constraint system (stationarity plus unity sum, bit-symmetry rows when
/// `bitsym` is set) for window parameter `l`.
pub fn build_problem(params: ChannelParams, l: usize, bitsym: bool) -> Result<UpperBoundProblem> {
    params.require_nondegenerate()?;
    if !(1..=MAX_WINDOW).contains(&l) {
        return Err(Error::SizeGuard(format!(
            "window parameter {l} outside 1..={MAX_WINDOW}"
        )));
    }
    let nx = 1usize << (l + 1);
    let ny = 1usize << l;
    let m = one_step_matrix(params);
    let init = stationary_distribution(params)?;
    let pi = [init.p0, init.p1];

    let mut w = Mat::zeros(ny, nx);
    let mut c = vec![0.0; nx];
    // per-(x, z_n) output law, reused for the conditional coefficients
    let mut q = vec![0.0f64; ny];
    for x in 0..nx {
        let xbit = |i: usize| (x >> i) & 1;
        for zn in 0..2usize {
            q.iter_mut().for_each(|v| *v = 0.0);
            // z-path continuation z_{n+1}..z_{n+L}
            for zp in 0..1usize << l {
                let mut weight = 1.0;
                let mut prev = zn;
                let mut y = 0usize;
                for i in 1..=l {
                    let zi = (zp >> (i - 1)) & 1;
                    weight *= m.entry(zi, prev);
                    prev = zi;
                    let yi = if zi == 0 { xbit(i) } else { xbit(i - 1) };
                    y |= yi << (i - 1);
                }
                q[y] += weight;
            }
            for (y, &p) in q.iter().enumerate() {
                *w.at_mut(y, x) += pi[zn] * p;
            }
            // H(Y_{n+L} | Y_{n+1}^{n+L-1}, x, z_n)
            let h_full = entropy_bits(&q);
            let h_prefix = if l > 1 {
                let half = ny >> 1;
                let folded: Vec<f64> = (0..half).map(|i| q[i] + q[i + half]).collect();
                entropy_bits(&folded)
            } else {
                0.0
            };
            c[x] += pi[zn] * (h_full - h_prefix);
        }
    }

    let half = ny >> 1;
    let mut w_prefix = Mat::zeros(half.max(1), nx);
    if l > 1 {
        for y in 0..half {
            for x in 0..nx {
                *w_prefix.at_mut(y, x) = w.at(y, x) + w.at(y + half, x);
            }
        }
    } else {
        for x in 0..nx {
            *w_prefix.at_mut(0, x) = 1.0;
        }
    }

    let mut constraints = stationarity_constraints(l + 1).with_unity_sum();
    if bitsym {
        constraints = constraints.with_bit_symmetry();
    }
    Ok(UpperBoundProblem {
        l,
        params,
        w,
        w_prefix,
        c,
        constraints,
        bitsym,
    })
}

/// The objective and its gradient at a block distribution `u`.
///
/// `u` must be a probability vector within `1e-8`; the linear constraint
/// families are deliberately not enforced here, so the objective can be
/// evaluated at non-stationary inputs such as the trivializing one.
pub fn objective_and_gradient(
    prob: &UpperBoundProblem,
    u: &BlockDistribution,
) -> Result<(f64, Vec<f64>)> {
    let nx = 1usize << (prob.l + 1);
    if u.block_len() != prob.l + 1 {
        return Err(Error::InfeasiblePoint(format!(
            "block length {} does not match window {}",
            u.block_len(),
            prob.l
        )));
    }
    let probs = u.probs();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 || probs.iter().any(|&p| p < -1e-8) {
        return Err(Error::InfeasiblePoint(
            "input is not a probability vector".into(),
        ));
    }
    let a = prob.w.matvec(probs);
    let b = prob.w_prefix.matvec(probs);
    let value = entropy_bits(&a)
        - entropy_bits(&b)
        - prob
            .c
            .iter()
            .zip(probs)
            .map(|(ci, ui)| ci * ui)
            .sum::<f64>();

    // d/du_x = -sum_y W[y][x] log2 a_y + sum_y' P[y'][x] log2 b_y' - c_x;
    // the +-1/ln2 normalization parts cancel because both column sums are 1.
    let log_a: Vec<f64> = a
        .iter()
        .map(|&v| if v > 0.0 { v.log2() } else { 0.0 })
        .collect();
    let log_b: Vec<f64> = b
        .iter()
        .map(|&v| if v > 0.0 { v.log2() } else { 0.0 })
        .collect();
    let ga = prob.w.tr_matvec(&log_a);
    let gb = prob.w_prefix.tr_matvec(&log_b);
    let grad: Vec<f64> = (0..nx).map(|x| -ga[x] + gb[x] - prob.c[x]).collect();
    Ok((value, grad))
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct BoundResult {
    /// The maximized objective in bits. On convergence this sits below
    /// the exact supremum by at most `2^(L+1)` times the final barrier
    /// parameter (about 1e-9 for the largest supported windows).
    pub value: f64,
    pub u_opt: BlockDistribution,
    /// Total Newton iterations across barrier stages.
    pub iterations: usize,
    /// Half the final Newton decrement: the value gap to the last
    /// barrier-stage optimum.
    pub kkt_residual: f64,
    /// Worst equality violation plus negative mass of the returned point.
    pub feasibility_residual: f64,
    pub converged: bool,
}

const MU_INITIAL: f64 = 1e-2;
const MU_FINAL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON_PER_STAGE: usize = 80;

/// Maximizes the concave objective over the constraint polytope.
///
/// The affine set is parametrized by an orthonormal null-space basis and
/// each log-barrier subproblem solved by damped Newton steps in the
/// reduced coordinates; the barrier parameter decreases tenfold per stage.
pub fn solve(prob: &UpperBoundProblem, tol: f64) -> Result<BoundResult> {
    let nx = 1usize << (prob.l + 1);
    let basis = null_space(prob.constraints.rows(), nx, 1e-11);
    let dim = basis.len();
    let mut n_mat = Mat::zeros(nx, dim);
    for (j, v) in basis.iter().enumerate() {
        for i in 0..nx {
            *n_mat.at_mut(i, j) = v[i];
        }
    }
    let wn = prob.w.matmul(&n_mat);
    let pn = prob.w_prefix.matmul(&n_mat);

    let mut u: Vec<f64> = vec![1.0 / nx as f64; nx];
    let mut iterations = 0usize;
    let mut converged = true;
    let mut kkt = f64::INFINITY;
    let mut best_u = u.clone();
    let mut best_value = f64::NEG_INFINITY;

    let mut mu = MU_INITIAL;
    while mu >= MU_FINAL * 0.999 {
        let mut stage_ok = false;
        for _ in 0..MAX_NEWTON_PER_STAGE {
            iterations += 1;
            let (phi, grad_u) = barrier_value_grad(prob, &u, mu);
            let grad_v = n_mat.tr_matvec(&grad_u);

            // reduced Hessian: -(1/ln2)(WN^T D_a WN - PN^T D_b PN)
            //                  - mu N^T diag(1/u^2) N
            let a = prob.w.matvec(&u);
            let b = prob.w_prefix.matvec(&u);
            let da: Vec<f64> = a
                .iter()
                .map(|&v| if v > 1e-300 { 1.0 / (v * LN_2) } else { 0.0 })
                .collect();
            let db: Vec<f64> = b
                .iter()
                .map(|&v| if v > 1e-300 { 1.0 / (v * LN_2) } else { 0.0 })
                .collect();
            let du: Vec<f64> = u.iter().map(|&v| mu / (v * v)).collect();
            let h_a = wn.gram_weighted(&da);
            let h_b = pn.gram_weighted(&db);
            let h_u = n_mat.gram_weighted(&du);
            let mut neg_h = Mat::zeros(dim, dim);
            for i in 0..dim * dim {
                neg_h.a[i] = h_a.a[i] - h_b.a[i] + h_u.a[i];
            }

            // Solve (-H) dv = grad_v; escalate a ridge if positivity fails.
            let mut dv = None;
            let mut ridge = 0.0;
            for _ in 0..6 {
                let mut sys = neg_h.clone();
                if ridge > 0.0 {
                    for i in 0..dim {
                        *sys.at_mut(i, i) += ridge;
                    }
                }
                if let Some(sol) = cholesky_solve(&mut sys, &grad_v) {
                    dv = Some(sol);
                    break;
                }
                ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
            }
            let Some(dv) = dv else {
                converged = false;
                break;
            };
            // Half the Newton decrement bounds the value gap to the stage
            // optimum; it is the stationarity measure that stays reliable
            // when the late-stage Hessian is ill-conditioned.
            let decrement: f64 = grad_v.iter().zip(&dv).map(|(g, d)| g * d).sum();
            kkt = decrement.abs() * 0.5;
            if kkt < NEWTON_TOL {
                stage_ok = true;
                break;
            }

            let du_full = n_mat.matvec(&dv);
            // longest step keeping u strictly positive
            let mut t_max = 1.0f64;
            for (ui, di) in u.iter().zip(&du_full) {
                if *di < 0.0 {
                    t_max = t_max.min(-ui / di * 0.995);
                }
            }
            let mut t = t_max.min(1.0);
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = u.iter().zip(&du_full).map(|(ui, di)| ui + t * di).collect();
                if cand.iter().all(|&v| v > 0.0) {
                    let (phi_c, _) = barrier_value_grad(prob, &cand, mu);
                    if phi_c >= phi + 0.25 * t * decrement {
                        u = cand;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // step collapsed; treat the stage as finished
                stage_ok = kkt < 1e-6;
                break;
            }
        }
        if !stage_ok {
            converged = false;
        }
        let (value, _) =
            objective_and_gradient(prob, &BlockDistribution::new(prob.l + 1, u.clone())?)?;
        if value > best_value {
            best_value = value;
            best_u = u.clone();
        }
        mu /= 10.0;
    }

    let u_dist = BlockDistribution::new(prob.l + 1, best_u.clone())?;
    let feasibility_residual = prob.constraints.residual(u_dist.probs());
    let converged =
        converged && kkt.is_finite() && kkt < tol.max(NEWTON_TOL) && feasibility_residual < 1e-10;
    if best_value.is_infinite() {
        return Err(Error::NoConvergence(
            "no feasible iterate produced a finite objective".into(),
        ));
    }
    Ok(BoundResult {
        value: best_value,
        u_opt: u_dist,
        iterations,
        kkt_residual: kkt,
        feasibility_residual,
        converged,
    })
}

/// Barrier objective `phi(u) + mu sum ln u` and its gradient in `u`.
fn barrier_value_grad(prob: &UpperBoundProblem, u: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let a = prob.w.matvec(u);
    let b = prob.w_prefix.matvec(u);
    let mut value = entropy_bits(&a) - entropy_bits(&b);
    for (ci, ui) in prob.c.iter().zip(u) {
        value -= ci * ui;
    }
    for &ui in u {
        value += mu * ui.ln();
    }
    let log_a: Vec<f64> = a
        .iter()
        .map(|&v| if v > 0.0 { v.log2() } else { 0.0 })
        .collect();
    let log_b: Vec<f64> = b
        .iter()
        .map(|&v| if v > 0.0 { v.log2() } else { 0.0 })
        .collect();
    let ga = prob.w.tr_matvec(&log_a);
    let gb = prob.w_prefix.tr_matvec(&log_b);
    let grad: Vec<f64> = (0..u.len())
        .map(|x| -ga[x] + gb[x] - prob.c[x] + mu / u[x])
        .collect();
    (value, grad)
}

/// Outcome of the trivializing-input construction.
#[derive(Debug, Clone)]
pub enum TrivializeOutcome {
    /// A probability-one-same-tail input achieving objective 1.
    Found(BlockDistribution),
    /// The balance system admits no nonnegative solution.
    Infeasible { detail: String },
}

/// Constructs a non-stationary input that drives the window objective to
/// one, eliminating the conditional term by freezing the last two input
/// symbols equal.
///
/// For `p_i = p_d` the closed form puts mass 1/2 on the block whose last
/// two symbols are 0 and which alternates before them, and 1/2 on its
/// complement. Otherwise the output-balance linear system (one equation
/// per window output prefix, zero constraints on the excluded blocks,
/// and the unity sum) is searched for a nonnegative solution.
pub fn trivializing_input(params: ChannelParams, l: usize) -> Result<TrivializeOutcome> {
    params.require_nondegenerate()?;
    if !(2..=MAX_WINDOW).contains(&l) {
        return Err(Error::SizeGuard(format!(
            "trivializing construction needs 2 <= L <= {MAX_WINDOW}"
        )));
    }
    let nx = 1usize << (l + 1);
    if params.p_i() == params.p_d() {
        // last two bits 0, alternating before: bit l-1-j = j mod 2
        let mut block = 0u64;
        for j in 1..l {
            if j % 2 == 1 {
                block |= 1 << (l - 1 - j);
            }
        }
        let mut probs = vec![0.0; nx];
        probs[block as usize] = 0.5;
        probs[complement(block, l + 1) as usize] = 0.5;
        return Ok(TrivializeOutcome::Found(BlockDistribution::new(
            l + 1,
            probs,
        )?));
    }

    // Unknowns: g0(x) on blocks ending 00, g1(x) on blocks ending 11,
    // with x the first l-1 symbols. Balance requires the two ends to
    // induce identical window-output laws.
    let half = 1usize << (l - 1);
    let mut rows = Vec::with_capacity(half + 1);
    let mut rhs = Vec::with_capacity(half + 1);
    let mut balance = vec![vec![0.0; 2 * half]; half];
    for x in 0..half {
        let d0 = window_output_law(params, (x as u64) & !(1 << (l - 1)), l);
        let d1 = window_output_law(params, x as u64 | (1 << (l - 1)), l);
        for y in 0..half {
            balance[y][x] += d0[y];
            balance[y][half + x] -= d1[y];
        }
    }
    for row in balance {
        rows.push(row);
        rhs.push(0.0);
    }
    rows.push(vec![1.0; 2 * half]);
    rhs.push(1.0);
    match crate::lp::feasible_point(&rows, &rhs) {
        Some(g) => {
            let total: f64 = g.iter().sum();
            let mut probs = vec![0.0; nx];
            for x in 0..half {
                probs[x] = g[x] / total; // bits l-1, l both 0
                probs[x | (1 << (l - 1)) | (1 << l)] = g[half + x] / total;
            }
            Ok(TrivializeOutcome::Found(BlockDistribution::new(
                l + 1,
                probs,
            )?))
        }
        None => Ok(TrivializeOutcome::Infeasible {
            detail: format!(
                "no nonnegative solution of the {}-equation balance system",
                half + 1
            ),
        }),
    }
}

/// Law of the `l-1` outputs `Y_{n+1}..Y_{n+l-1}` given the `l` input
/// symbols `X_n..X_{n+l-1}`, with the state entering stationary.
fn window_output_law(params: ChannelParams, x: u64, l: usize) -> Vec<f64> {
    let m = one_step_matrix(params);
    let init = stationary_distribution(params).expect("nondegenerate");
    let pi = [init.p0, init.p1];
    let steps = l - 1;
    let mut out = vec![0.0; 1usize << steps];
    let xbit = |i: usize| ((x >> i) & 1) as usize;
    for zp in 0..1usize << steps {
        let mut weight = 0.0;
        let mut y = 0usize;
        let mut prev = 0usize;
        for i in 1..=steps {
            let zi = (zp >> (i - 1)) & 1;
            if i == 1 {
                weight = pi[zi];
            } else {
                weight *= m.entry(zi, prev);
            }
            prev = zi;
            let yi = if zi == 0 { xbit(i) } else { xbit(i - 1) };
            y |= yi << (i - 1);
        }
        out[y] += weight;
    }
    out
}

/// True when the distribution violates some stationarity equation by
/// more than `1e-10`.
pub fn check_not_stationary(u: &BlockDistribution) -> bool {
    if u.block_len() < 2 {
        return false;
    }
    stationarity_constraints(u.block_len()).residual(u.probs()) > 1e-10
}
