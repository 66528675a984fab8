//! Chain-structured hard instances.
//!
//! The building block is a smooth scalar chain function whose gradient can
//! extend the set of nonzero coordinates by at most one, plus its even-link
//! and odd-link components whose average recovers the full chain. Scaled
//! copies of these functions form the worst-case problems used by the
//! hard-instance certificates.

use crate::error::{Error, Result};
use crate::problem::{Constants, Objective};
use crate::rng::RngStream;
use crate::vector::RealVector;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Suboptimality bound per chain coordinate.
pub const DELTA_0: f64 = 12.0;
/// Smoothness constant of the chain functions.
pub const L_0: f64 = 152.0;
/// Uniform bound on the chain gradient's max-norm.
pub const G_INF: f64 = 23.0;

const SQRT_E: f64 = 1.6487212707001282; // e^(1/2)
const SQRT_2PI_E: f64 = 4.132731354122493; // sqrt(2*pi*e)

/// Smooth switch: 0 for z <= 1/2, exp(1 - 1/(2z-1)^2) beyond.
pub fn psi(z: f64) -> f64 {
    if z <= 0.5 {
        0.0
    } else {
        let t = 2.0 * z - 1.0;
        (1.0 - 1.0 / (t * t)).exp()
    }
}

pub fn psi_prime(z: f64) -> f64 {
    if z <= 0.5 {
        0.0
    } else {
        let t = 2.0 * z - 1.0;
        psi(z) * 4.0 / (t * t * t)
    }
}

/// Scaled Gaussian integral: sqrt(e) * int_{-inf}^z exp(-t^2/2) dt.
pub fn phi(z: f64) -> f64 {
    // = sqrt(2*pi*e) * NormalCDF(z); erfc form stays accurate for z << 0.
    SQRT_2PI_E * 0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn phi_prime(z: f64) -> f64 {
    SQRT_E * (-0.5 * z * z).exp()
}

/// Which links of the chain a component keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainComponent {
    /// The full chain function.
    Full,
    /// Twice the even links plus twice the head term.
    EvenLinks,
    /// Twice the odd links.
    OddLinks,
}

impl ChainComponent {
    /// (head coefficient, link weight for 1-based link index j)
    fn weights(self) -> (f64, fn(usize) -> f64) {
        match self {
            ChainComponent::Full => (1.0, |_| 1.0),
            ChainComponent::EvenLinks => (2.0, |j| if j % 2 == 0 { 2.0 } else { 0.0 }),
            ChainComponent::OddLinks => (0.0, |j| if j % 2 == 1 { 2.0 } else { 0.0 }),
        }
    }
}

/// Value of the chain component at x (d >= 2).
pub fn chain_value(component: ChainComponent, x: &RealVector) -> f64 {
    let d = x.dim();
    debug_assert!(d >= 2);
    let (head, weight) = component.weights();
    let mut total = -head * psi(1.0) * phi(x[0]);
    for j in 1..d {
        let w = weight(j);
        if w != 0.0 {
            let (a, b) = (x[j - 1], x[j]);
            total += w * (psi(-a) * phi(-b) - psi(a) * phi(b));
        }
    }
    total
}

/// Analytic gradient of the chain component at x.
pub fn chain_grad(component: ChainComponent, x: &RealVector) -> RealVector {
    let d = x.dim();
    debug_assert!(d >= 2);
    let (head, weight) = component.weights();
    let mut g = RealVector::zeros(d);
    g[0] = -head * psi(1.0) * phi_prime(x[0]);
    for j in 1..d {
        let w = weight(j);
        if w != 0.0 {
            let (a, b) = (x[j - 1], x[j]);
            // d/da [psi(-a)phi(-b) - psi(a)phi(b)]
            g[j - 1] += w * (-psi_prime(-a) * phi(-b) - psi_prime(a) * phi(b));
            // d/db [...]
            g[j] += w * (-psi(-a) * phi_prime(-b) - psi(a) * phi_prime(b));
        }
    }
    g
}

pub fn h_value(x: &RealVector) -> f64 {
    chain_value(ChainComponent::Full, x)
}

pub fn h_grad(x: &RealVector) -> RealVector {
    chain_grad(ChainComponent::Full, x)
}

pub fn h1_value(x: &RealVector) -> f64 {
    chain_value(ChainComponent::EvenLinks, x)
}

pub fn h1_grad(x: &RealVector) -> RealVector {
    chain_grad(ChainComponent::EvenLinks, x)
}

pub fn h2_value(x: &RealVector) -> f64 {
    chain_value(ChainComponent::OddLinks, x)
}

pub fn h2_grad(x: &RealVector) -> RealVector {
    chain_grad(ChainComponent::OddLinks, x)
}

/// How the chain components are assigned to workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    #[default]
    HomogeneousH,
    /// First half of the workers gets the even component, second half the odd
    /// component; the average is the full chain.
    SplitH1H2,
}

/// A scaled chain instance distributed over n workers.
///
/// Each worker's objective is (L lambda^2 / L_0) * component(x / lambda),
/// which is L-smooth with suboptimality bounded by L lambda^2 Delta_0 d / L_0.
pub struct ZeroChainProblem {
    d: usize,
    n: usize,
    lambda: f64,
    smoothness: f64,
    assignment: Assignment,
    b2: f64,
}

impl ZeroChainProblem {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn assignment(&self) -> Assignment {
        self.assignment
    }

    fn component_for(&self, worker: usize) -> ChainComponent {
        match self.assignment {
            Assignment::HomogeneousH => ChainComponent::Full,
            Assignment::SplitH1H2 => {
                if worker < self.n / 2 {
                    ChainComponent::EvenLinks
                } else {
                    ChainComponent::OddLinks
                }
            }
        }
    }

    fn value_scale(&self) -> f64 {
        self.smoothness * self.lambda * self.lambda / L_0
    }

    fn grad_scale(&self) -> f64 {
        self.smoothness * self.lambda / L_0
    }
}

impl Objective for ZeroChainProblem {
    fn as_any(&self) -> &dyn std::any::Any {
        self
    }

    fn name(&self) -> &'static str {
        "zero_chain"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn workers(&self) -> usize {
        self.n
    }

    fn local_value(&self, worker: usize, x: &RealVector) -> f64 {
        let scaled = x.scale(1.0 / self.lambda);
        self.value_scale() * chain_value(self.component_for(worker), &scaled)
    }

    fn local_grad(&self, worker: usize, x: &RealVector) -> RealVector {
        let scaled = x.scale(1.0 / self.lambda);
        let mut g = chain_grad(self.component_for(worker), &scaled);
        g.scale_in_place(self.grad_scale());
        g
    }

    fn global_value(&self, x: &RealVector) -> f64 {
        // The component average equals the full chain for both assignments.
        let scaled = x.scale(1.0 / self.lambda);
        self.value_scale() * chain_value(ChainComponent::Full, &scaled)
    }

    fn global_grad(&self, x: &RealVector) -> RealVector {
        let scaled = x.scale(1.0 / self.lambda);
        let mut g = chain_grad(ChainComponent::Full, &scaled);
        g.scale_in_place(self.grad_scale());
        g
    }

    fn supports_masked_oracle(&self) -> bool {
        true
    }

    fn constants(&self) -> Constants {
        Constants {
            smoothness: self.smoothness,
            suboptimality: self.smoothness * self.lambda * self.lambda * DELTA_0 * self.d as f64
                / L_0,
            sigma2: 0.0,
            b2: self.b2,
        }
    }
}

/// Builds a chain instance. `n` must be even for the split assignment.
pub fn gen_zero_chain(
    lambda: f64,
    d: usize,
    assignment: Assignment,
    n: usize,
    smoothness: f64,
) -> Result<ZeroChainProblem> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::invalid("lambda must be positive"));
    }
    if d < 2 {
        return Err(Error::invalid("chain length d must be at least 2"));
    }
    if n == 0 {
        return Err(Error::invalid("worker count must be positive"));
    }
    if assignment == Assignment::SplitH1H2 && n % 2 != 0 {
        return Err(Error::invalid(
            "split assignment requires an even worker count",
        ));
    }
    if smoothness <= 0.0 {
        return Err(Error::invalid("smoothness target must be positive"));
    }
    let mut problem = ZeroChainProblem {
        d,
        n,
        lambda,
        smoothness,
        assignment,
        b2: 0.0,
    };
    if assignment == Assignment::SplitH1H2 {
        problem.b2 = estimate_split_b2(&problem);
    }
    Ok(problem)
}

/// Max over probe points of the dissimilarity (1/n) sum ||grad_i - grad||^2.
fn estimate_split_b2(problem: &ZeroChainProblem) -> f64 {
    let mut rng = RngStream::new(0x5eed, "zero-chain/b2-probe");
    let mut worst = 0.0f64;
    for probe in 0..64 {
        let x = if probe == 0 {
            RealVector::zeros(problem.d)
        } else {
            RealVector::from_vec((0..problem.d).map(|_| 2.0 * rng.normal()).collect())
        };
        let global = problem.global_grad(&x);
        let mut acc = 0.0;
        for i in 0..problem.n {
            acc += problem.local_grad(i, &x).dist_sq(&global);
        }
        worst = worst.max(acc / problem.n as f64);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::fd_gradient_check;
    use crate::progress::prog;

    fn v(coords: &[f64]) -> RealVector {
        RealVector::from_vec(coords.to_vec())
    }

    fn random_point(rng: &mut RngStream, d: usize, truncate_at: usize, scale: f64) -> RealVector {
        let mut x = RealVector::zeros(d);
        for j in 0..truncate_at.min(d) {
            x[j] = scale * rng.normal();
        }
        x
    }

    #[test]
    fn psi_and_phi_anchor_values() {
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(0.5), 0.0);
        assert!((psi(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(psi_prime(0.25), 0.0);
        assert!((phi_prime(0.0) - SQRT_E).abs() < 1e-15);
        // phi(inf) = sqrt(2 pi e), phi(-inf) = 0.
        assert!((phi(40.0) - SQRT_2PI_E).abs() < 1e-12);
        assert!(phi(-40.0).abs() < 1e-12);
    }

    #[test]
    fn grad_at_origin_is_minus_sqrt_e_on_first_coordinate() {
        let g = h_grad(&RealVector::zeros(5));
        assert!((g[0] + SQRT_E).abs() < 1e-14, "g[0] = {}", g[0]);
        for j in 1..5 {
            assert_eq!(g[j], 0.0);
        }
    }

    #[test]
    fn gradients_pass_finite_differences() {
        let mut rng = RngStream::new(42, "zc/fd");
        for component in [
            ChainComponent::Full,
            ChainComponent::EvenLinks,
            ChainComponent::OddLinks,
        ] {
            for trial in 0..10 {
                let x = if trial == 0 {
                    RealVector::zeros(5)
                } else {
                    random_point(&mut rng, 5, 5, 1.5)
                };
                let err = fd_gradient_check(
                    |p| chain_value(component, p),
                    |p| chain_grad(component, p),
                    &x,
                    1e-5,
                )
                .unwrap();
                assert!(err <= 1e-5, "{component:?} fd error {err}");
            }
        }
    }

    #[test]
    fn average_of_components_is_full_chain() {
        let mut rng = RngStream::new(7, "zc/avg");
        for _ in 0..100 {
            let x = random_point(&mut rng, 8, 8, 2.0);
            let avg = 0.5 * (h1_value(&x) + h2_value(&x));
            assert!((avg - h_value(&x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_property_holds_on_truncated_points() {
        let mut rng = RngStream::new(9, "zc/chain");
        for _ in 0..200 {
            let d = 8;
            let p = rng.below(d);
            let x = random_point(&mut rng, d, p, 2.0);
            let px = prog(&x, 0.0);
            assert!(prog(&h_grad(&x), 0.0) <= px + 1);
            assert!(prog(&h1_grad(&x), 0.0) <= px + 1);
            assert!(prog(&h2_grad(&x), 0.0) <= px + 1);
        }
    }

    #[test]
    fn parity_stalling() {
        let mut rng = RngStream::new(10, "zc/parity");
        for _ in 0..100 {
            let d = 9;
            // Construct points with exact prog of each parity.
            for target in 1..d {
                let mut x = random_point(&mut rng, d, target, 2.0);
                x[target - 1] = 1.0 + rng.uniform();
                let p = prog(&x, 0.0);
                assert_eq!(p, target);
                if p % 2 == 1 {
                    assert!(prog(&h1_grad(&x), 0.0) <= p, "odd prog must stall h1");
                } else {
                    assert!(prog(&h2_grad(&x), 0.0) <= p, "even prog must stall h2");
                }
            }
        }
    }

    #[test]
    fn gradient_norm_bounds() {
        let mut rng = RngStream::new(11, "zc/bounds");
        for _ in 0..2000 {
            let x = RealVector::from_vec(
                (0..6).map(|_| 20.0 * rng.uniform() - 10.0).collect(),
            );
            assert!(h_grad(&x).norm_inf() <= G_INF);
        }
        // Lower bound on the gradient whenever the last coordinate is zero.
        for _ in 0..500 {
            let mut x = random_point(&mut rng, 6, 5, 3.0);
            x[5] = 0.0;
            assert!(h_grad(&x).norm_inf() >= 1.0);
        }
    }

    #[test]
    fn split_instance_matches_homogeneous_global() {
        let hom = gen_zero_chain(1.0, 6, Assignment::HomogeneousH, 4, L_0).unwrap();
        let split = gen_zero_chain(1.0, 6, Assignment::SplitH1H2, 4, L_0).unwrap();
        let mut rng = RngStream::new(12, "zc/split");
        for _ in 0..100 {
            let x = random_point(&mut rng, 6, 6, 2.0);
            let f_hom = hom.global_value(&x);
            let f_split = split.global_value(&x);
            // Split global value computed the slow way must also agree.
            let mut slow = 0.0;
            for i in 0..4 {
                slow += split.local_value(i, &x);
            }
            slow /= 4.0;
            assert!((f_hom - f_split).abs() <= 1e-12);
            assert!((slow - f_hom).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_requires_even_workers() {
        assert!(gen_zero_chain(1.0, 6, Assignment::SplitH1H2, 5, L_0).is_err());
        assert!(gen_zero_chain(1.0, 1, Assignment::HomogeneousH, 2, L_0).is_err());
        assert!(gen_zero_chain(0.0, 6, Assignment::HomogeneousH, 2, L_0).is_err());
    }

    #[test]
    fn scaled_instance_wires_constants() {
        let p = gen_zero_chain(0.5, 10, Assignment::HomogeneousH, 2, 304.0).unwrap();
        let c = p.constants();
        assert_eq!(c.smoothness, 304.0);
        // L lambda^2 Delta_0 d / L_0 = 304 * 0.25 * 12 * 10 / 152 = 60.
        assert!((c.suboptimality - 60.0).abs() < 1e-12);
        assert_eq!(c.b2, 0.0);
        // Value scaling: f(x) = (L lambda^2 / L_0) h(x / lambda).
        let x = v(&[0.7, -0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let expect = 304.0 * 0.25 / 152.0 * h_value(&x.scale(2.0));
        assert!((p.global_value(&x) - expect).abs() < 1e-12);
    }
}
