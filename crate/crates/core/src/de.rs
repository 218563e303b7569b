//! Density evolution for asymptotically long frames.
//!
//! Starting from `q_0 = p_0 = 1`, each iteration updates
//!
//! ```text
//! q_i = Σ_ℓ w_ℓ p_{i-1}^{ℓ-1}
//! p_i = 1 - e^{-x q_i} (1 + x q_i / 2),      x = ℓ̄ G (1 - ε)
//! ```
//!
//! where `q_i` is the probability a user edge is still unresolved and `p_i`
//! the probability a slot edge is. The weights `w_ℓ` are the node-perspective
//! `Λ_ℓ` by default; [`Perspective::Edge`] switches to `λ_ℓ = ℓ Λ_ℓ / ℓ̄`.
//! After the last iteration the user failure probability is
//! `P_ε = Σ Λ_ℓ p^ℓ`.

use serde::{Deserialize, Serialize};

use crate::dist::DegreeDistribution;
use crate::error::{invalid, Result};

pub const DEFAULT_DE_ITERS: usize = 100;

/// Which weights enter the user-node update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    /// `Λ_ℓ`, node-perspective weights. Spelled `paper` in configs and on
    /// the command line; `node` is accepted too.
    #[default]
    #[serde(rename = "paper", alias = "node")]
    Node,
    /// `ℓ Λ_ℓ / ℓ̄`, the usual edge-perspective form.
    Edge,
}

impl std::str::FromStr for Perspective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" | "node" => Ok(Self::Node),
            "edge" => Ok(Self::Edge),
            other => Err(format!(
                "unknown DE perspective {other:?} (expected paper or edge)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeOptions {
    pub max_iters: usize,
    /// Early exit once `|p_i - p_{i-1}| < tol`; zero runs all iterations.
    pub tol: f64,
    pub perspective: Perspective,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_DE_ITERS,
            tol: 0.0,
            perspective: Perspective::Node,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    /// `q_1 ..= q_I`.
    pub q_trace: Vec<f64>,
    /// `p_1 ..= p_I`.
    pub p_trace: Vec<f64>,
    pub p_eps: f64,
    pub iterations_run: usize,
    pub converged: bool,
}

impl DeResult {
    pub fn last_p(&self) -> f64 {
        *self.p_trace.last().expect("at least one iteration")
    }
}

/// Effective per-slot replica arrival rate `ℓ̄ G (1 - ε)`.
pub fn effective_load(load: f64, epsilon: f64, avg_degree: f64) -> f64 {
    avg_degree * load * (1.0 - epsilon)
}

/// Slot-side update in closed form: `1 - e^{-x}(1 + x/2)` with `x = ℓ̄G(1-ε)q`.
pub fn slot_update(q: f64, load: f64, epsilon: f64, avg_degree: f64) -> f64 {
    let x = effective_load(load, epsilon, avg_degree) * q;
    // 1 - e^{-x} - (x/2) e^{-x}, with expm1 to keep precision for small x
    (-(-x).exp_m1() - 0.5 * x * (-x).exp()).clamp(0.0, 1.0)
}

/// User-side update `Σ w_ℓ p^{ℓ-1}`.
pub fn user_update(p: f64, dist: &DegreeDistribution, perspective: Perspective) -> f64 {
    let lbar = dist.avg_degree();
    dist.terms()
        .iter()
        .map(|&(l, prob)| {
            let w = match perspective {
                Perspective::Node => prob,
                Perspective::Edge => l as f64 * prob / lbar,
            };
            w * p.powi(l as i32 - 1)
        })
        .sum()
}

fn check_inputs(load: f64, epsilon: f64) -> Result<()> {
    if !(load.is_finite() && load > 0.0) {
        return Err(invalid("load", format!("must be > 0, got {load}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(
            "epsilon",
            format!("epsilon out of [0,1]: {epsilon}"),
        ));
    }
    Ok(())
}

pub fn density_evolution(
    load: f64,
    epsilon: f64,
    dist: &DegreeDistribution,
    opts: &DeOptions,
) -> Result<DeResult> {
    check_inputs(load, epsilon)?;
    if opts.max_iters == 0 {
        return Err(invalid("max_iters", "must be at least 1"));
    }
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(invalid("tol", format!("must be >= 0, got {}", opts.tol)));
    }
    let lbar = dist.avg_degree();
    let mut q_trace = Vec::with_capacity(opts.max_iters);
    let mut p_trace = Vec::with_capacity(opts.max_iters);
    let mut p_prev = 1.0;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let q = user_update(p_prev, dist, opts.perspective).min(1.0);
        let p = slot_update(q, load, epsilon, lbar);
        q_trace.push(q);
        p_trace.push(p);
        let delta = (p - p_prev).abs();
        p_prev = p;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    let p_eps = dist.eval(p_prev);
    Ok(DeResult {
        iterations_run: p_trace.len(),
        q_trace,
        p_trace,
        p_eps,
        converged,
    })
}

/// Poisson probability that a slot holding a given replica has `t` replicas
/// in total: `x^{t-1} / (t-1)! e^{-x}` with `x = ℓ̄G(1-ε)`.
pub fn slot_edge_pmf(t: u32, load: f64, epsilon: f64, avg_degree: f64) -> f64 {
    assert!(t >= 1, "slot degree starts at 1");
    let x = effective_load(load, epsilon, avg_degree);
    let mut term = (-x).exp();
    for s in 1..t {
        term *= x / s as f64;
    }
    term
}

/// Slot-side update as the truncated series over slot degrees,
/// `Σ_{t ≤ t_max} τ(t) [1 - (1-q)^{t-1} - (t-1)/2 · q (1-q)^{t-2}]`.
///
/// Written with explicit powers of `1 - q` so `q = 1` needs no special case.
/// Used to cross-check [`slot_update`].
pub fn slot_update_series(
    q: f64,
    load: f64,
    epsilon: f64,
    avg_degree: f64,
    t_max: u32,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("must be in [0,1], got {q}")));
    }
    if t_max == 0 {
        return Err(invalid("t_max", "must be at least 1"));
    }
    let x = effective_load(load, epsilon, avg_degree);
    let r = 1.0 - q;
    let mut tau = (-x).exp();
    let mut sum = 0.0;
    // powers of r: r^{t-2} and r^{t-1}
    let mut r_pow_tm2 = 1.0;
    for t in 1..=t_max {
        if t > 1 {
            tau *= x / (t - 1) as f64;
        }
        let resolved = if t == 1 {
            1.0
        } else {
            let r_pow_tm1 = r_pow_tm2 * r;
            let v = r_pow_tm1 + 0.5 * (t - 1) as f64 * q * r_pow_tm2;
            r_pow_tm2 = r_pow_tm1;
            v
        };
        sum += tau * (1.0 - resolved);
    }
    Ok(sum)
}

/// Multi-receiver loss lower bound `[(1-ε) P_ε + ε]^k`.
pub fn plr_bound(p_eps: f64, epsilon: f64, k: u32) -> f64 {
    ((1.0 - epsilon) * p_eps + epsilon).powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lambda1() -> DegreeDistribution {
        DegreeDistribution::parse("x^2").unwrap()
    }

    fn lambda2() -> DegreeDistribution {
        DegreeDistribution::parse("0.5465x^2+0.1623x^3+0.2912x^8").unwrap()
    }

    #[test]
    fn reproduces_worked_example() {
        let r = density_evolution(1.2, 0.05, &lambda1(), &DeOptions::default()).unwrap();
        assert_eq!(r.iterations_run, 100);
        assert!(!r.converged);
        let p = &r.p_trace;
        for (got, want) in [
            (p[0], 0.7811),
            (p[1], 0.6815),
            (p[2], 0.6243),
            (p[99], 0.4902),
        ] {
            assert!((got - want).abs() < 5e-5, "{got} vs {want}");
        }
        assert!((r.p_eps - 0.2403).abs() < 5e-5, "{}", r.p_eps);
        assert!((r.p_eps - r.last_p().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn first_iteration_closed_form() {
        // q_1 = 1, x = 2 * 1.2 * 0.95 = 2.28
        let r = density_evolution(1.2, 0.05, &lambda1(), &DeOptions::default()).unwrap();
        let want = 1.0 - (-2.28f64).exp() * (1.0 + 1.14);
        assert!((r.p_trace[0] - want).abs() < 1e-15);
        assert_eq!(r.q_trace[0], 1.0);
    }

    #[test]
    fn vanishing_load_and_full_erasure() {
        let tiny = density_evolution(1e-12, 0.0, &lambda2(), &DeOptions::default()).unwrap();
        assert!(tiny.p_trace[0] < 1e-11);
        assert!(tiny.p_eps < 1e-20);
        let erased = density_evolution(2.0, 1.0, &lambda2(), &DeOptions::default()).unwrap();
        assert_eq!(erased.p_eps, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = lambda1();
        let o = DeOptions::default();
        assert!(density_evolution(0.0, 0.1, &d, &o).is_err());
        assert!(density_evolution(-1.0, 0.1, &d, &o).is_err());
        assert!(density_evolution(1.0, 1.5, &d, &o).is_err());
        assert!(density_evolution(1.0, -0.1, &d, &o).is_err());
        let zero_iters = DeOptions { max_iters: 0, ..o };
        assert!(density_evolution(1.0, 0.1, &d, &zero_iters).is_err());
    }

    #[test]
    fn early_exit_with_tolerance() {
        let opts = DeOptions {
            tol: 1e-12,
            ..DeOptions::default()
        };
        let r = density_evolution(0.3, 0.05, &lambda1(), &opts).unwrap();
        assert!(r.converged);
        assert!(r.iterations_run < 100);
        assert_eq!(r.q_trace.len(), r.p_trace.len());
    }

    #[test]
    fn edge_perspective_coincides_for_regular_degree() {
        let node = density_evolution(1.1, 0.1, &lambda1(), &DeOptions::default()).unwrap();
        let edge = density_evolution(
            1.1,
            0.1,
            &lambda1(),
            &DeOptions {
                perspective: Perspective::Edge,
                ..DeOptions::default()
            },
        )
        .unwrap();
        assert_eq!(node, edge);
    }

    #[test]
    fn edge_perspective_differs_for_irregular_degree() {
        let o = DeOptions::default();
        let e = DeOptions {
            perspective: Perspective::Edge,
            ..o
        };
        let a = density_evolution(0.9, 0.0, &lambda2(), &o).unwrap();
        let b = density_evolution(0.9, 0.0, &lambda2(), &e).unwrap();
        assert_ne!(a.p_trace[1], b.p_trace[1]);
    }

    #[test]
    fn pmf_examples() {
        assert!((slot_edge_pmf(1, 1.2, 0.05, 2.0) - 0.102_284).abs() < 1e-6);
        assert!(((-2.28f64).exp() - slot_edge_pmf(1, 1.2, 0.05, 2.0)).abs() < 1e-15);
        assert_eq!(slot_edge_pmf(1, 3.0, 1.0, 2.0), 1.0);
        assert_eq!(slot_edge_pmf(2, 3.0, 1.0, 2.0), 0.0);
        for x in [0.1, 1.0, 2.28, 5.0, 10.0] {
            let total: f64 = (1..=200).map(|t| slot_edge_pmf(t, x, 0.0, 1.0)).sum();
            assert!((total - 1.0).abs() < 1e-12, "x = {x}: {total}");
        }
    }

    #[test]
    fn series_examples() {
        let at_one = slot_update_series(1.0, 1.2, 0.05, 2.0, 200).unwrap();
        assert!((at_one - 0.78112).abs() < 1e-5, "{at_one}");
        assert_eq!(slot_update_series(0.0, 1.2, 0.05, 2.0, 200).unwrap(), 0.0);
        assert!(slot_update_series(1.5, 1.2, 0.05, 2.0, 200).is_err());
    }

    #[test]
    fn bound_examples() {
        assert!((plr_bound(0.2403, 0.05, 1) - 0.278285).abs() < 1e-6);
        assert!((plr_bound(0.2403, 0.05, 2) - 0.077443).abs() < 1e-6);
        for k in 1..5 {
            assert_eq!(plr_bound(0.0, 0.0, k), 0.0);
            assert_eq!(plr_bound(1.0, 0.3, k), 1.0);
        }
    }

    fn binomial_bound(p: f64, eps: f64, k: u32) -> f64 {
        let mut coeff = 1.0;
        let mut sum = 0.0;
        for i in 0..=k {
            if i > 0 {
                coeff *= (k - i + 1) as f64 / i as f64;
            }
            sum += coeff * ((1.0 - eps) * p).powi((k - i) as i32) * eps.powi(i as i32);
        }
        sum
    }

    proptest! {
        #[test]
        fn series_matches_closed_form(q in 0.0f64..=1.0, x in 0.0f64..=10.0) {
            let series = slot_update_series(q, x, 0.0, 1.0, 200).unwrap();
            prop_assert!((series - slot_update(q, x, 0.0, 1.0)).abs() < 1e-10);
        }

        #[test]
        fn trace_is_monotone(g in 1e-3f64..3.0, eps in 0.0f64..=1.0, edge in any::<bool>()) {
            let opts = DeOptions {
                perspective: if edge { Perspective::Edge } else { Perspective::Node },
                ..DeOptions::default()
            };
            let r = density_evolution(g, eps, &lambda2(), &opts).unwrap();
            prop_assert!(r.p_trace.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!(r.p_trace.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!((0.0..=1.0).contains(&r.p_eps));
        }

        #[test]
        fn bound_binomial_identity(p in 0.0f64..=1.0, eps in 0.0f64..=1.0, k in 1u32..=10) {
            prop_assert!((plr_bound(p, eps, k) - binomial_bound(p, eps, k)).abs() < 1e-12);
        }

        #[test]
        fn bound_monotonicity(p in 0.0f64..=1.0, eps in 0.0f64..0.99, k in 1u32..10) {
            let base = (1.0 - eps) * p + eps;
            if base > 0.0 && base < 1.0 {
                prop_assert!(plr_bound(p, eps, k + 1) < plr_bound(p, eps, k));
            }
            prop_assert!(plr_bound(p, eps + 0.01, k) >= plr_bound(p, eps, k));
        }
    }
}
