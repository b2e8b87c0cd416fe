//! Property suite run by `itd verify`: every check reports how many cases it
//! examined and the worst residual against its tolerance.

use implicit_td::algorithms::{
    project, StepSizeSchedule, TdLearnerState, TdStep, TdcLearnerState,
};
use implicit_td::environments::{
    baird_initial_weights, make_baird, make_random_mrp, make_random_walk, FeatureMap, MarkovRewardEnvironment,
    Transition,
};
use implicit_td::numerics::{
    solve_linear, stationary_distribution, symmetric_eigen, vector, Matrix, RngStream,
};
use implicit_td::oracle::{
    implicit_fixed_point_solve, monte_carlo_steady_matrices, steady_matrices_onpolicy, OracleBundle,
};
use serde::Serialize;

use crate::error::Result;
use crate::formats::to_json_string;

/// Deliberate defects for checking that the suite notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Implicit TD uses `α(1 + α‖e‖²)` instead of `α / (1 + α‖e‖²)`.
    FlipEffectiveStep,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub cases: u64,
    /// Largest residual seen; `null` in JSON when non-finite.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

struct Tally {
    name: &'static str,
    cases: u64,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally { name, cases: 0, worst: 0.0, tolerance }
    }

    fn observe(&mut self, residual: f64) {
        self.cases += 1;
        if residual.is_nan() || residual > self.worst {
            self.worst = if residual.is_nan() { f64::INFINITY } else { residual };
        }
    }

    /// Records by how much `value` exceeds `bound`, relative to the bound.
    fn at_most(&mut self, value: f64, bound: f64) {
        self.observe((value - bound).max(0.0) / bound.abs().max(1.0));
    }

    fn finish(self) -> CheckReport {
        CheckReport {
            name: self.name,
            passed: self.cases > 0 && self.worst <= self.tolerance,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

struct Fixture {
    env: MarkovRewardEnvironment,
    features: FeatureMap,
}

fn fixtures() -> Result<Vec<Fixture>> {
    let walk = make_random_walk(11, 0.9, 5)?;
    let mrp = make_random_mrp(100, 20, 0.9, &mut RngStream::new(2024, 0))?;
    let baird = make_baird();
    Ok([walk, mrp, baird].into_iter().map(|(env, features)| Fixture { env, features }).collect())
}

pub fn run_verification_suite() -> Result<VerificationReport> {
    run_verification_suite_with(Fault::None)
}

pub fn run_verification_suite_with(fault: Fault) -> Result<VerificationReport> {
    let fx = fixtures()?;
    let checks = vec![
        sherman_morrison(),
        implicit_contraction(),
        implicit_td0_fixed_point(fault)?,
        implicit_td_lambda_fixed_point(fault)?,
        implicit_tdc_fixed_point()?,
        effective_step_bounds(&fx, fault)?,
        trace_bound(&fx)?,
        projection_idempotent(),
        projection_non_expansive(),
        projection_bounded(),
        bounded_update(&fx, fault)?,
        fixed_point_residual(&fx)?,
        bellman_residual(&fx)?,
        rmspbe_at_fixed_point(&fx)?,
        steady_state_continuity(&fx)?,
        stationary_residual(&fx)?,
        lambda_min_unit_interval(&fx)?,
        monte_carlo_consistency(&fx)?,
        schedules_non_increasing(),
    ];
    Ok(VerificationReport { checks })
}

fn uniform_vec(rng: &mut RngStream, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| (rng.uniform() * 2.0 - 1.0) * scale).collect()
}

fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.uniform() * (hi.ln() - lo.ln())).exp()
}

fn two_state_features(rng: &mut RngStream, d: usize) -> FeatureMap {
    FeatureMap::new(Matrix::from_fn(2, d, |_, _| rng.uniform() * 2.0 - 1.0)).expect("2×d features")
}

/// `(I + α v vᵀ)(I − α v vᵀ / (1 + α‖v‖²)) = I`.
fn sherman_morrison() -> CheckReport {
    let mut t = Tally::new("sherman_morrison_identity", 1e-12);
    let mut rng = RngStream::new(0x5eed, 1);
    for _ in 0..1000 {
        let d = 1 + rng.below(10);
        let v = uniform_vec(&mut rng, d, 2.0);
        let alpha = log_uniform(&mut rng, 1e-3, 1e3);
        let vv = vector::norm_sq(&v);
        let m = Matrix::identity(d).add(&Matrix::outer(&v, &v).scale(alpha)).expect("square");
        let inv = Matrix::identity(d).sub(&Matrix::outer(&v, &v).scale(alpha / (1.0 + alpha * vv))).expect("square");
        let err = m.matmul(&inv).expect("square").max_abs_diff(&Matrix::identity(d));
        t.observe(err / (1.0 + alpha * vv));
    }
    t.finish()
}

/// Eigenvalues of `(I + α φφᵀ)⁻¹` lie in `(0, 1]`.
fn implicit_contraction() -> CheckReport {
    let mut t = Tally::new("implicit_operator_contraction", 1e-12);
    let mut rng = RngStream::new(0x5eed, 2);
    for _ in 0..1000 {
        let d = 1 + rng.below(10);
        let v = uniform_vec(&mut rng, d, 2.0);
        let alpha = log_uniform(&mut rng, 1e-3, 1e3);
        let vv = vector::norm_sq(&v);
        let inv = Matrix::identity(d).sub(&Matrix::outer(&v, &v).scale(alpha / (1.0 + alpha * vv))).expect("square");
        match symmetric_eigen(&inv) {
            Ok(eig) => {
                let top = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let bottom = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
                t.observe((top - 1.0).max(0.0) + if bottom > 0.0 { 0.0 } else { 1.0 });
            }
            Err(_) => t.observe(f64::INFINITY),
        }
    }
    t.finish()
}

/// Implicit TD(λ) step, optionally with the effective step inverted.
fn implicit_td_step(
    state: &mut TdLearnerState,
    tr: &Transition,
    features: &FeatureMap,
    alpha: f64,
    fault: Fault,
) -> Result<TdStep> {
    match fault {
        Fault::None => Ok(state.implicit_step(tr, features, alpha)?),
        Fault::FlipEffectiveStep => {
            let decay = state.lambda * state.gamma;
            let e: Vec<f64> = features.phi(tr.x).iter().zip(&state.e).map(|(p, q)| p + decay * q).collect();
            let flipped = alpha * (1.0 + alpha * vector::norm_sq(&e));
            let mut step = state.explicit_step(tr, features, flipped)?;
            step.alpha = alpha;
            Ok(step)
        }
    }
}

fn td_fixed_point_cases(name: &'static str, lambda_random: bool, fault: Fault, stream: u64) -> Result<CheckReport> {
    let mut t = Tally::new(name, 1e-10);
    let mut rng = RngStream::new(0x5eed, stream);
    for _ in 0..1000 {
        let d = 1 + rng.below(8);
        let features = two_state_features(&mut rng, d);
        let lambda = if lambda_random { rng.uniform() } else { 0.0 };
        let gamma = 0.05 + 0.9 * rng.uniform();
        let alpha = log_uniform(&mut rng, 1e-2, 1e2);
        let mut state = TdLearnerState::new(uniform_vec(&mut rng, d, 3.0), lambda, gamma)?;
        if lambda_random {
            state.e = uniform_vec(&mut rng, d, 1.0);
        }
        let tr = Transition { x: 0, r: rng.uniform() * 2.0 - 1.0, x_next: 1, rho: 1.0, terminal: false };
        let (w, e_prev) = (state.w.clone(), state.e.clone());
        implicit_td_step(&mut state, &tr, &features, alpha, fault)?;
        let e: Vec<f64> = features.phi(0).iter().zip(&e_prev).map(|(p, q)| p + lambda * gamma * q).collect();
        let target = tr.r + gamma * vector::dot(features.phi(1), &w) + lambda * gamma * vector::dot(&e_prev, &w);
        let drift: Vec<f64> = e.iter().map(|ei| alpha * target * ei).collect();
        let m = Matrix::identity(d).add(&Matrix::outer(&e, &e).scale(alpha))?;
        let rhs: Vec<f64> = w.iter().zip(&drift).map(|(a, b)| a + b).collect();
        let direct = solve_linear(&m, &rhs)?;
        t.observe(vector::distance(&state.w, &direct) / (1.0 + vector::norm_inf(&direct)));
    }
    Ok(t.finish())
}

fn implicit_td0_fixed_point(fault: Fault) -> Result<CheckReport> {
    td_fixed_point_cases("implicit_td0_equals_fixed_point", false, fault, 3)
}

fn implicit_td_lambda_fixed_point(fault: Fault) -> Result<CheckReport> {
    td_fixed_point_cases("implicit_td_lambda_equals_fixed_point", true, fault, 4)
}

fn implicit_tdc_fixed_point() -> Result<CheckReport> {
    let mut t = Tally::new("implicit_tdc_equals_fixed_point", 1e-10);
    let mut rng = RngStream::new(0x5eed, 5);
    for k in 0..1000 {
        let d = 1 + rng.below(8);
        let features = two_state_features(&mut rng, d);
        let gamma = 0.05 + 0.9 * rng.uniform();
        let alpha = log_uniform(&mut rng, 1e-2, 1e1);
        let beta = log_uniform(&mut rng, 1e-2, 1e1);
        let rho = [0.0, 1.0, 7.0, 3.0 * rng.uniform()][k % 4];
        let mut s = TdcLearnerState::new(uniform_vec(&mut rng, d, 3.0), uniform_vec(&mut rng, d, 3.0), gamma)?;
        let tr = Transition { x: 0, r: rng.uniform(), x_next: 1, rho, terminal: false };
        let (w, u) = (s.w.clone(), s.u.clone());
        s.implicit_step(&tr, &features, alpha, beta)?;
        let (p, q) = (features.phi(0), features.phi(1));
        let delta = tr.r + gamma * vector::dot(q, &w) - vector::dot(p, &w);
        let pu = vector::dot(p, &u);
        let bootstrap = tr.r + gamma * vector::dot(q, &w);
        let drift_w: Vec<f64> = p.iter().zip(q).map(|(pi, qi)| alpha * rho * (bootstrap * pi - gamma * pu * qi)).collect();
        let drift_u: Vec<f64> = p.iter().map(|pi| beta * rho * delta * pi).collect();
        let want_w = implicit_fixed_point_solve(&w, p, alpha * rho, &drift_w)?;
        let want_u = implicit_fixed_point_solve(&u, p, beta * rho, &drift_u)?;
        t.observe(vector::distance(&s.w, &want_w) / (1.0 + vector::norm_inf(&want_w)));
        t.observe(vector::distance(&s.u, &want_u) / (1.0 + vector::norm_inf(&want_u)));
    }
    Ok(t.finish())
}

/// Drives a TD(λ) learner for `n` steps, projecting onto `radius` when set,
/// and hands every step to `visit` with the pre-update weights.
#[allow(clippy::too_many_arguments)]
fn drive_td(
    fx: &Fixture,
    lambda: f64,
    schedule: StepSizeSchedule,
    radius: Option<f64>,
    implicit: bool,
    n: u64,
    seed: u64,
    fault: Fault,
    mut visit: impl FnMut(&TdStep, &[f64], &[f64], f64),
) -> Result<()> {
    let (env, features) = (&fx.env, &fx.features);
    let mut state = TdLearnerState::new(vec![0.0; features.d()], lambda, env.gamma())?;
    let mut rng = RngStream::new(seed, 0);
    let mut x = env.restart_state();
    for k in 1..=n {
        let tr = env.sample_transition(x, &mut rng);
        let alpha = schedule.value(k);
        let before = state.w.clone();
        let step = if implicit {
            implicit_td_step(&mut state, &tr, features, alpha, fault)?
        } else {
            state.explicit_step(&tr, features, alpha)?
        };
        if let Some(r) = radius {
            implicit_td::algorithms::project_in_place(&mut state.w, r);
        }
        visit(&step, &before, &state.w, alpha);
        x = if tr.terminal { env.restart_state() } else { tr.x_next };
    }
    Ok(())
}

fn effective_step_bounds(fx: &[Fixture], fault: Fault) -> Result<CheckReport> {
    let mut t = Tally::new("effective_step_bounds", 1e-12);
    for (k, f) in fx.iter().filter(|f| !f.env.is_off_policy()).enumerate() {
        for lambda in [0.0, 0.5] {
            let bound = f.features.max_row_norm() / (1.0 - lambda * f.env.gamma());
            let schedule = StepSizeSchedule::Constant { c: 1.5 };
            drive_td(f, lambda, schedule, Some(10.0), true, 100_000, 40 + k as u64, fault, |s, _, _, _| {
                t.at_most(s.effective_alpha, s.alpha);
                t.at_most(s.alpha / (1.0 + s.alpha * bound * bound), s.effective_alpha);
            })?;
        }
    }
    // implicit TDC on Baird: α' ∈ [α / (1 + α ρ_max ‖φ‖²_max), α], same for β'
    let baird = fx.iter().find(|f| f.env.is_off_policy()).expect("baird fixture");
    let mut s = TdcLearnerState::new(baird_initial_weights(), vec![0.0; 8], baird.env.gamma())?;
    let mut rng = RngStream::new(44, 0);
    let mut x = baird.env.restart_state();
    let cap = baird.env.rho_max() * baird.features.max_row_norm().powi(2);
    for _ in 0..100_000 {
        let tr = baird.env.sample_transition(x, &mut rng);
        let step = s.implicit_step(&tr, &baird.features, 0.025, 0.25)?;
        t.at_most(step.effective_alpha, step.alpha);
        t.at_most(step.effective_beta, step.beta);
        t.at_most(step.alpha / (1.0 + step.alpha * cap), step.effective_alpha);
        t.at_most(step.beta / (1.0 + step.beta * cap), step.effective_beta);
        x = tr.x_next;
    }
    Ok(t.finish())
}

fn trace_bound(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("eligibility_trace_bound", 1e-12);
    for (k, f) in fx.iter().filter(|f| !f.env.is_off_policy()).enumerate() {
        for lambda in [0.5, 0.9, 1.0] {
            let bound = f.features.max_row_norm() / (1.0 - lambda * f.env.gamma());
            let schedule = StepSizeSchedule::Polynomial { c: 1.0, s: 0.7 };
            drive_td(f, lambda, schedule, Some(10.0), true, 100_000, 50 + k as u64, Fault::None, |s, _, _, _| {
                t.at_most(s.trace_norm, bound);
            })?;
        }
    }
    Ok(t.finish())
}

fn projection_pairs(stream: u64) -> impl Iterator<Item = (Vec<f64>, Vec<f64>, f64)> {
    let mut rng = RngStream::new(0x5eed, stream);
    (0..10_000).map(move |_| {
        let d = 1 + rng.below(10);
        let scale = log_uniform(&mut rng, 1e-2, 1e3);
        let u = uniform_vec(&mut rng, d, scale);
        let v = uniform_vec(&mut rng, d, scale);
        (u, v, log_uniform(&mut rng, 1e-1, 1e2))
    })
}

fn projection_idempotent() -> CheckReport {
    let mut t = Tally::new("projection_idempotent", 1e-12);
    for (u, _, r) in projection_pairs(6) {
        let once = project(&u, r);
        t.observe(vector::distance(&project(&once, r), &once) / r);
    }
    t.finish()
}

fn projection_non_expansive() -> CheckReport {
    let mut t = Tally::new("projection_non_expansive", 1e-12);
    for (u, v, r) in projection_pairs(7) {
        t.at_most(vector::distance(&project(&u, r), &project(&v, r)), vector::distance(&u, &v));
    }
    t.finish()
}

fn projection_bounded() -> CheckReport {
    let mut t = Tally::new("projection_norm_bounded", 1e-12);
    for (u, _, r) in projection_pairs(8) {
        let p = project(&u, r);
        t.at_most(vector::norm(&p), r);
        if vector::norm(&u) <= r {
            t.observe(vector::distance(&p, &u));
        }
    }
    t.finish()
}

/// Projected runs with `‖φ‖ ≤ 1`: `|δ| ≤ G := r_max + 2R`, and one update
/// moves `w` by at most `α G / (1 − λγ)`.
fn bounded_update(fx: &[Fixture], fault: Fault) -> Result<CheckReport> {
    let mut t = Tally::new("bounded_update", 1e-12);
    for (k, f) in fx.iter().filter(|f| !f.env.is_off_policy()).enumerate() {
        let n = f.env.n_states();
        let r_max = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| f.env.reward(x, y).abs()).fold(0.0, f64::max);
        for (implicit, lambda, radius) in [(false, 0.0, 10.0), (true, 0.0, 10.0), (true, 0.5, 5.0), (false, 0.5, 50.0)] {
            let g = r_max + 2.0 * radius;
            let per_unit = g / (1.0 - lambda * f.env.gamma());
            let schedule = StepSizeSchedule::Constant { c: 1.5 };
            drive_td(f, lambda, schedule, Some(radius), implicit, 50_000, 60 + k as u64, fault, |s, before, after, alpha| {
                t.at_most(vector::norm(before), radius);
                t.at_most(s.delta.abs(), g);
                t.at_most(vector::distance(before, after), alpha * per_unit);
            })?;
        }
    }
    Ok(t.finish())
}

fn bundles(fx: &[Fixture], lambdas: &[f64]) -> Result<Vec<(usize, OracleBundle)>> {
    let mut out = Vec::new();
    for (i, f) in fx.iter().enumerate() {
        for &l in lambdas {
            if l > 0.0 && f.env.is_off_policy() {
                continue;
            }
            out.push((i, OracleBundle::compute(&f.env, &f.features, l)?));
        }
    }
    Ok(out)
}

fn fixed_point_residual(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("fixed_point_residual", 1e-8);
    for (_, o) in bundles(fx, &[0.0, 0.5, 0.9])? {
        t.observe(o.fixed_point_residual());
    }
    Ok(t.finish())
}

fn bellman_residual(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("bellman_residual", 1e-10);
    for (i, o) in bundles(fx, &[0.0])? {
        let env = &fx[i].env;
        let pv = env.target_transition().mul_vec(&o.v_star)?;
        let r = env.target_expected_reward();
        for x in (0..env.n_states()).filter(|&x| !env.is_absorbing(x)) {
            t.observe((o.v_star[x] - r[x] - env.gamma() * pv[x]).abs());
        }
    }
    Ok(t.finish())
}

fn rmspbe_at_fixed_point(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("rmspbe_vanishes_at_fixed_point", 1e-7);
    for (_, o) in bundles(fx, &[0.0])? {
        t.observe(o.rmspbe(&o.w_star)?);
    }
    Ok(t.finish())
}

fn steady_state_continuity(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("steady_state_lambda_continuity", 1e-9);
    for f in fx.iter().filter(|f| !f.env.is_off_policy()) {
        let a = steady_matrices_onpolicy(&f.env, &f.features, 0.0)?;
        let b = steady_matrices_onpolicy(&f.env, &f.features, 1e-12)?;
        t.observe(a.a.max_abs_diff(&b.a));
        t.observe(vector::norm_inf(&vector::sub(&a.b, &b.b)));
    }
    Ok(t.finish())
}

fn stationary_residual(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("stationary_distribution_residual", 1e-10);
    for f in fx {
        let chain = f.env.sampling_chain();
        let mu = stationary_distribution(&chain)?;
        let back = chain.vec_mul(&mu)?;
        t.observe(vector::norm_inf(&vector::sub(&back, &mu)));
        t.observe((mu.iter().sum::<f64>() - 1.0).abs());
    }
    Ok(t.finish())
}

fn lambda_min_unit_interval(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("lambda_min_in_unit_interval", 0.0);
    for f in fx.iter().filter(|f| !f.env.is_off_policy() && f.features.max_row_norm() <= 1.0 + 1e-12) {
        let o = OracleBundle::compute(&f.env, &f.features, 0.0)?;
        t.observe(if o.lambda_min > 0.0 && o.lambda_min < 1.0 { 0.0 } else { 1.0 });
    }
    Ok(t.finish())
}

/// `‖Â − A‖_F / sqrt(Σ SE²)` and the same for `b` over 10⁶ steps.
fn monte_carlo_consistency(fx: &[Fixture]) -> Result<CheckReport> {
    let mut t = Tally::new("monte_carlo_within_3_se", 3.0);
    for (k, f) in fx.iter().enumerate() {
        let o = OracleBundle::compute(&f.env, &f.features, 0.0)?;
        let mut rng = RngStream::new(0x5eed, 100 + k as u64);
        let mc = monte_carlo_steady_matrices(&f.env, &f.features, 1_000_000, 50, 1_000, &mut rng)?;
        let (ra, rb) = mc.discrepancy(&o.a, &o.b);
        t.observe(ra);
        t.observe(rb);
    }
    Ok(t.finish())
}

fn schedules_non_increasing() -> CheckReport {
    let mut t = Tally::new("schedules_positive_non_increasing", 0.0);
    let schedules = [
        StepSizeSchedule::Constant { c: 0.5 },
        StepSizeSchedule::Polynomial { c: 300.0, s: 1.0 },
        StepSizeSchedule::Polynomial { c: 1.0, s: 0.99 },
        StepSizeSchedule::Polynomial { c: 10.0, s: 2.0 / 3.0 },
        StepSizeSchedule::rescaled_harmonic(2.0, 0.01, 0.9),
    ];
    for s in schedules {
        let mut prev = f64::INFINITY;
        for n in 1..=100_000u64 {
            let v = s.value(n);
            t.observe(if v > 0.0 && v <= prev { 0.0 } else { 1.0 });
            prev = v;
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_is_caught_by_its_checks() {
        let mut good = Tally::new("x", 1e-12);
        good.at_most(1.0, 1.0);
        assert!(good.finish().passed);
        let fx = fixtures().unwrap();
        let clean = effective_step_bounds(&fx, Fault::None).unwrap();
        assert!(clean.passed, "{clean:?}");
        let broken = effective_step_bounds(&fx, Fault::FlipEffectiveStep).unwrap();
        assert!(!broken.passed);
        assert!(!implicit_td0_fixed_point(Fault::FlipEffectiveStep).unwrap().passed);
    }

    #[test]
    fn nan_residual_fails() {
        let mut t = Tally::new("x", 1.0);
        t.observe(f64::NAN);
        assert!(!t.finish().passed);
        assert!(!Tally::new("empty", 1.0).finish().passed);
    }
}
