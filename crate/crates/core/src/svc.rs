//! Smallest enclosing sphere in Gaussian-kernel feature space.
//!
//! The dual is `max W = Σ K(xᵢ,xᵢ)βᵢ − βᵀKβ` over the capped simplex
//! `{β : Σβ = 1, 0 ≤ βᵢ ≤ C}`. With a Gaussian kernel the diagonal is 1, so
//! `W = 1 − βᵀKβ` and the solver minimizes `f(β) = βᵀKβ`.
//!
//! The squared feature-space distance of any point to the sphere centre is
//!
//! ```text
//! R²(x) = 1 − 2 Σⱼ βⱼ exp(−q‖x − xⱼ‖²) + βᵀKβ
//! ```
//!
//! and at a training point this is `1 − gᵢ + βᵀKβ` with `g = 2Kβ` the gradient
//! of `f`. The KKT conditions of the sphere problem therefore reduce to
//! ordering conditions on the gradient, which is what the SMO loop drives to
//! tolerance.

use ndarray::Array2;

use crate::data::DistanceMatrix;
use crate::error::{EdsvcError, Result};

/// `exp(−q · sq_dist)`.
#[inline]
pub fn gaussian_kernel(sq_dist: f64, q: f64) -> f64 {
    (-q * sq_dist).exp()
}

/// Dense kernel matrix for width `q`.
pub fn kernel_matrix(dists: &DistanceMatrix, q: f64) -> Array2<f64> {
    dists.as_array().mapv(|d| gaussian_kernel(d, q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Largest allowed violation of the radius conditions, in R² units.
    pub kkt_tolerance: f64,
    /// Budget in full sweeps; one sweep is N pair updates.
    pub max_passes: usize,
    /// Absolute margin used to classify β as 0, C, or strictly between.
    pub beta_boundary_epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kkt_tolerance: 1e-6,
            max_passes: 10_000,
            beta_boundary_epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointRole {
    /// On the sphere surface.
    Support,
    /// Outside the sphere, multiplier at its cap.
    Bounded,
    /// Inside the sphere, zero multiplier.
    Interior,
}

/// A solved (or explicitly supplied) set of multipliers with everything derived from them.
#[derive(Debug, Clone)]
pub struct SphereModel {
    beta: Vec<f64>,
    q: f64,
    c_param: f64,
    sq_radius: f64,
    dual_objective: f64,
    self_kernel_term: f64,
    roles: Vec<PointRole>,
    /// Indices with βᵢ > 0, the only terms that enter R²(x).
    active: Vec<usize>,
    iterations: usize,
}

impl SphereModel {
    /// Builds a model from arbitrary multipliers, deriving R², W and roles.
    /// No optimality or feasibility is assumed, which makes this useful for
    /// inspecting KKT residuals of hand-made β.
    pub fn from_multipliers(
        beta: Vec<f64>,
        q: f64,
        c_param: f64,
        dists: &DistanceMatrix,
        beta_boundary_epsilon: f64,
    ) -> Result<Self> {
        if beta.len() != dists.n_points() {
            return Err(EdsvcError::LengthMismatch {
                left: beta.len(),
                right: dists.n_points(),
            });
        }
        let kernel = kernel_matrix(dists, q);
        let grad = gradient(&kernel, &beta);
        Ok(Self::assemble(beta, q, c_param, &grad, beta_boundary_epsilon, 0))
    }

    fn assemble(beta: Vec<f64>, q: f64, c_param: f64, grad: &[f64], eps: f64, iterations: usize) -> Self {
        let self_kernel_term = 0.5 * beta.iter().zip(grad).map(|(b, g)| b * g).sum::<f64>();
        let beta_sum: f64 = beta.iter().sum();
        let dual_objective = beta_sum - self_kernel_term;
        let roles: Vec<PointRole> = beta.iter().map(|&b| classify(b, c_param, eps)).collect();
        let radii: Vec<f64> = grad.iter().map(|g| (1.0 - g + self_kernel_term).max(0.0)).collect();
        let sq_radius = sphere_radius_from(&beta, &roles, &radii, c_param, eps);
        let active = beta
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > 0.0)
            .map(|(i, _)| i)
            .collect();
        SphereModel {
            beta,
            q,
            c_param,
            sq_radius,
            dual_objective,
            self_kernel_term,
            roles,
            active,
            iterations,
        }
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c_param(&self) -> f64 {
        self.c_param
    }

    /// R² of the sphere.
    pub fn sq_radius(&self) -> f64 {
        self.sq_radius
    }

    /// W at the stored multipliers.
    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    /// βᵀKβ.
    pub fn self_kernel_term(&self) -> f64 {
        self.self_kernel_term
    }

    pub fn roles(&self) -> &[PointRole] {
        &self.roles
    }

    pub fn n_points(&self) -> usize {
        self.beta.len()
    }

    pub fn active_indices(&self) -> &[usize] {
        &self.active
    }

    /// Pair updates performed by the solver (0 for models built from given multipliers).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn count_role(&self, role: PointRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    pub fn is_bounded(&self, i: usize) -> bool {
        self.roles[i] == PointRole::Bounded
    }

    /// R²(x) where `sq_dist_to(j)` returns ‖x − xⱼ‖². Only called for βⱼ > 0.
    pub fn sq_radius_with(&self, sq_dist_to: impl Fn(usize) -> f64) -> f64 {
        let kernel_sum: f64 = self
            .active
            .iter()
            .map(|&j| self.beta[j] * gaussian_kernel(sq_dist_to(j), self.q))
            .sum();
        (1.0 - 2.0 * kernel_sum + self.self_kernel_term).max(0.0)
    }
}

fn classify(beta: f64, c_param: f64, eps: f64) -> PointRole {
    // With C ≥ 1 the cap is implied by Σβ = 1 and never binds.
    if c_param < 1.0 && beta >= c_param - eps {
        PointRole::Bounded
    } else if beta > eps {
        PointRole::Support
    } else {
        PointRole::Interior
    }
}

fn gradient(kernel: &Array2<f64>, beta: &[f64]) -> Vec<f64> {
    kernel
        .rows()
        .into_iter()
        .map(|row| 2.0 * row.iter().zip(beta).map(|(k, b)| k * b).sum::<f64>())
        .collect()
}

/// Mean R²(xᵢ) over support vectors. If none are classified as such, falls
/// back to the point(s) whose β lies nearest the open interval (ε, C − ε),
/// taking the KKT-consistent extreme: the smallest radius among bounded
/// candidates, else the largest among interior ones.
fn sphere_radius_from(beta: &[f64], roles: &[PointRole], radii: &[f64], c_param: f64, eps: f64) -> f64 {
    let (sum, count) = roles
        .iter()
        .zip(radii)
        .filter(|(r, _)| **r == PointRole::Support)
        .fold((0.0, 0usize), |(s, c), (_, &r)| (s + r, c + 1));
    if count > 0 {
        return sum / count as f64;
    }
    let distance = |b: f64| {
        if b <= eps {
            eps - b
        } else {
            b - (c_param - eps)
        }
    };
    let best = beta.iter().map(|&b| distance(b)).fold(f64::INFINITY, f64::min);
    let tied = || (0..beta.len()).filter(|&i| distance(beta[i]) == best);
    if tied().any(|i| roles[i] == PointRole::Bounded) {
        tied()
            .filter(|&i| roles[i] == PointRole::Bounded)
            .map(|i| radii[i])
            .fold(f64::INFINITY, f64::min)
    } else {
        tied().map(|i| radii[i]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// R²(x) from the squared distances of `x` to every training point.
pub fn sq_radius_at(model: &SphereModel, dists_to_point: &[f64]) -> Result<f64> {
    if dists_to_point.len() != model.n_points() {
        return Err(EdsvcError::LengthMismatch {
            left: dists_to_point.len(),
            right: model.n_points(),
        });
    }
    Ok(model.sq_radius_with(|j| dists_to_point[j]))
}

/// Recomputes R² as the mean of R²(xᵢ) over support vectors, evaluating each
/// training point through [`sq_radius_at`].
pub fn sphere_sq_radius(model: &SphereModel, dists: &DistanceMatrix, beta_boundary_epsilon: f64) -> f64 {
    let radii: Vec<f64> = (0..model.n_points())
        .map(|i| model.sq_radius_with(|j| dists.get(i, j)))
        .collect();
    sphere_radius_from(&model.beta, &model.roles, &radii, model.c_param, beta_boundary_epsilon)
}

/// Largest violation of the role-appropriate radius condition:
/// interior points must satisfy R²(xᵢ) ≤ R², support vectors R²(xᵢ) = R²,
/// bounded vectors R²(xᵢ) ≥ R². Zero at an exact KKT point.
pub fn kkt_residual(model: &SphereModel, dists: &DistanceMatrix) -> f64 {
    let r2 = model.sq_radius;
    (0..model.n_points())
        .map(|i| {
            let ri = model.sq_radius_with(|j| dists.get(i, j));
            match model.roles[i] {
                PointRole::Interior => (ri - r2).max(0.0),
                PointRole::Support => (ri - r2).abs(),
                PointRole::Bounded => (r2 - ri).max(0.0),
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest C for which the capped simplex over `n_points` is non-empty in
/// floating point, i.e. the least `c` with `n·c ≥ 1`.
pub fn min_feasible_c(n_points: usize) -> f64 {
    let n = n_points as f64;
    let mut c = 1.0 / n;
    while n * c < 1.0 {
        c = c.next_up();
    }
    c
}

/// Solves the dual. See [`solve_wolfe_dual_traced`] for the per-sweep objective trace.
pub fn solve_wolfe_dual(dists: &DistanceMatrix, q: f64, c_param: f64, cfg: &SolverConfig) -> Result<SphereModel> {
    solve_wolfe_dual_traced(dists, q, c_param, cfg).map(|(m, _)| m)
}

/// SMO on the capped simplex.
///
/// Each update moves mass δ from `j` to `i`, which keeps Σβ fixed. `i` is the
/// index with the smallest gradient among those that can still grow (β < C);
/// `j` is chosen among those that can shrink (β > 0) by the second-order
/// gain `(gⱼ − gᵢ)² / η`, `η = 4(1 − Kᵢⱼ)`. The loop stops once
/// `max_{β>0} g − min_{β<C} g ≤ kkt_tolerance`.
///
/// Returns the model and W recorded at the end of every sweep of N updates
/// (plus the final value).
// `!(x > y)` comparisons below also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn solve_wolfe_dual_traced(
    dists: &DistanceMatrix,
    q: f64,
    c_param: f64,
    cfg: &SolverConfig,
) -> Result<(SphereModel, Vec<f64>)> {
    let n = dists.n_points();
    if !(q > 0.0 && q.is_finite()) {
        return Err(EdsvcError::InvalidParameter(format!(
            "kernel width q must be positive, got {q}"
        )));
    }
    if !(c_param > 0.0 && c_param.is_finite()) {
        return Err(EdsvcError::InvalidParameter(format!(
            "trade-off C must be positive, got {c_param}"
        )));
    }
    if !(cfg.kkt_tolerance > 0.0) || cfg.max_passes == 0 {
        return Err(EdsvcError::InvalidParameter(
            "kkt_tolerance and max_passes must be positive".into(),
        ));
    }
    let n_times_c = n as f64 * c_param;
    if n == 0 || n_times_c < 1.0 {
        return Err(EdsvcError::Infeasible {
            n_points: n,
            c_param,
            n_times_c,
        });
    }

    let kernel = kernel_matrix(dists, q);
    let mut beta = vec![1.0 / n as f64; n];
    for b in &mut beta {
        *b = b.min(c_param);
    }
    let mut grad = gradient(&kernel, &beta);
    let objective = |beta: &[f64], grad: &[f64]| {
        let f = 0.5 * beta.iter().zip(grad).map(|(b, g)| b * g).sum::<f64>();
        beta.iter().sum::<f64>() - f
    };
    let mut trace = vec![objective(&beta, &grad)];

    const TAU: f64 = 1e-12;
    let max_iters = cfg.max_passes.saturating_mul(n.max(1));
    let mut iter = 0usize;
    let mut gap;
    loop {
        // i: steepest descent direction for growing a multiplier.
        let mut i_up = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if beta[t] < c_param && grad[t] < g_min {
                g_min = grad[t];
                i_up = t;
            }
            if beta[t] > 0.0 && grad[t] > g_max {
                g_max = grad[t];
            }
        }
        gap = g_max - g_min;
        if i_up == usize::MAX || !(gap > cfg.kkt_tolerance) {
            break;
        }
        if iter >= max_iters {
            return Err(EdsvcError::NotConverged {
                iterations: iter,
                gap,
                best_beta: beta,
            });
        }

        let i = i_up;
        let k_row_i = kernel.row(i);
        let mut j = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for t in 0..n {
            if beta[t] > 0.0 && grad[t] > g_min {
                let b = grad[t] - g_min;
                let eta = (4.0 * (1.0 - k_row_i[t])).max(TAU);
                let gain = b * b / eta;
                if gain > best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        debug_assert!(j != usize::MAX && j != i);

        let eta = 4.0 * (1.0 - k_row_i[j]);
        let unconstrained = if eta > TAU {
            (grad[j] - grad[i]) / eta
        } else {
            f64::INFINITY
        };
        let room_i = c_param - beta[i];
        let room_j = beta[j];
        let delta;
        if unconstrained >= room_i && room_i <= room_j {
            delta = room_i;
            beta[i] = c_param;
            beta[j] -= delta;
            if beta[j] < 0.0 {
                beta[j] = 0.0;
            }
        } else if unconstrained >= room_j {
            delta = room_j;
            beta[i] += delta;
            beta[j] = 0.0;
            if beta[i] > c_param {
                beta[i] = c_param;
            }
        } else {
            delta = unconstrained;
            beta[i] += delta;
            beta[j] -= delta;
        }

        let k_row_j = kernel.row(j);
        let scale = 2.0 * delta;
        for t in 0..n {
            grad[t] += scale * (k_row_i[t] - k_row_j[t]);
        }

        iter += 1;
        if iter.is_multiple_of(n) {
            trace.push(objective(&beta, &grad));
        }
    }

    // Refresh the gradient to shed accumulated rounding before deriving R².
    let grad = gradient(&kernel, &beta);
    trace.push(objective(&beta, &grad));
    let model = SphereModel::assemble(beta, q, c_param, &grad, cfg.beta_boundary_epsilon, iter);
    log::trace!(
        "dual solved: q={q} C={c_param} iters={iter} gap={gap:e} W={}",
        model.dual_objective
    );
    Ok((model, trace))
}
