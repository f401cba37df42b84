//! Whole-space oracles evaluated on a truncated mesh: the kernel-weighted
//! second moment, its integral recursion, and the Duhamel super-solution
//! inequality for the mean field.

use serde::{Deserialize, Serialize};

use super::classify::{fujita_classify, FujitaClass};
use super::TheoryVerdict;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernel::{kernel_1d, KernelConvention};
use crate::model::{DiffusionKind, ModelSpec};

/// Kernel mass on the mesh below which the truncation is reported.
const MASS_WARNING: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedMoment {
    /// `G(t) = ∫ K(t, x) v(x) dx`
    pub value: f64,
    /// `∫ K(t, x) dx` over the mesh.
    pub kernel_mass: f64,
    pub truncated: bool,
    pub coarse_mesh: bool,
}

/// `G(t) = ∫ K(t, x)·v(x) dx` by the nodal rule.
pub fn kernel_weighted_moment(v: &Field, t: f64, conv: KernelConvention) -> Result<WeightedMoment> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("kernel moment needs t > 0, got {t}")));
    }
    let g = v.grid();
    let dx = g.dx();
    let (mut value, mut mass) = (0.0, 0.0);
    for (x, &vi) in g.nodes().zip(v.values()) {
        let k = kernel_1d(t, x, conv);
        value += k * vi;
        mass += k;
    }
    value *= dx;
    mass *= dx;
    let truncated = mass < MASS_WARNING;
    let coarse_mesh = dx > conv.variance(t).sqrt() / 4.0;
    if truncated {
        log::warn!("kernel at t = {t} has only {mass:.6} of its mass on the mesh");
    }
    if coarse_mesh {
        log::warn!("mesh spacing {dx} under-resolves the kernel at t = {t}");
    }
    Ok(WeightedMoment {
        value,
        kernel_mass: mass,
        truncated,
        coarse_mesh,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    pub m: f64,
    pub d: u32,
    /// Fitted `C2 = ½·min_{t ≥ 1} t^d G(t)`.
    pub c2: f64,
    /// Largest `C4` with `t^d G(t) ≥ C2 + C4·∫_0^t s^{d/2} G^m(s) ds` at every sample `t ≥ 1`.
    pub c4: f64,
    pub holds: bool,
    /// Time by which `g` must blow up given the fitted constants, when finite.
    pub implied_horizon: Option<f64>,
}

/// Fits the constants of `t^d G(t) ≥ C2 + C4 ∫_0^t s^{d/2} G^m(s) ds` on a
/// sampled series and reports whether positive constants exist.
///
/// The integral is a trapezoid over the samples, starting from `s = 0`
/// where the weight `s^{d/2}` vanishes.
pub fn recursion_check(times: &[f64], g: &[f64], m: f64, d: u32) -> Result<RecursionReport> {
    if times.len() != g.len() || times.is_empty() {
        return Err(Error::invalid("recursion check needs equal, nonempty series"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::invalid("recursion times must be positive and increasing"));
    }
    if d == 0 || !(m > 0.0) {
        return Err(Error::invalid(format!("need d ≥ 1 and m > 0, got d={d}, m={m}")));
    }
    let half_d = d as f64 / 2.0;
    let weight = |t: f64, gv: f64| t.powf(half_d) * gv.max(0.0).powf(m);
    let mut integral = Vec::with_capacity(times.len());
    let (mut acc, mut prev_t, mut prev_w) = (0.0, 0.0, 0.0);
    for (&t, &gv) in times.iter().zip(g) {
        let w = weight(t, gv);
        acc += 0.5 * (t - prev_t) * (w + prev_w);
        integral.push(acc);
        (prev_t, prev_w) = (t, w);
    }
    let scaled: Vec<(f64, f64)> = times
        .iter()
        .zip(g)
        .zip(&integral)
        .filter(|((&t, _), _)| t >= 1.0)
        .map(|((&t, &gv), &i)| (t.powi(d as i32) * gv, i))
        .collect();
    if scaled.is_empty() {
        return Err(Error::invalid("recursion check needs samples with t ≥ 1"));
    }
    let c2 = 0.5 * scaled.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let c4 = scaled
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(y, i)| (y - c2) / i)
        .fold(f64::INFINITY, f64::min);
    let c4 = if c4.is_finite() { c4 } else { 0.0 };
    let holds = c2 > 0.0 && c4 > 0.0;
    // g' ≥ C4 t^k g^m with k = d/2 − dm and g(1) ≥ C2
    let implied_horizon = (holds && m > 1.0)
        .then(|| {
            let k = half_d - d as f64 * m;
            let budget = c2.powf(1.0 - m) / ((m - 1.0) * c4);
            if (k + 1.0).abs() < 1e-14 {
                Some(budget.exp())
            } else {
                let base = 1.0 + (k + 1.0) * budget;
                (base > 0.0).then(|| base.powf(1.0 / (k + 1.0)))
            }
        })
        .flatten();
    Ok(RecursionReport {
        m,
        d,
        c2,
        c4,
        holds,
        implied_horizon,
    })
}

/// Mean field `E u(x, t)` on the mesh at increasing record times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSeries {
    pub times: Vec<f64>,
    pub mean: Vec<Field>,
    pub stderr: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionPoint {
    pub t: f64,
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
    pub duhamel: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub p: f64,
    pub fujita: FujitaClass,
    pub points: Vec<SupersolutionPoint>,
    pub pass_fraction: f64,
    pub holds: bool,
    /// Expectation blowup predicted: the inequality holds and every
    /// nontrivial solution of the comparison problem blows up.
    pub verdict: TheoryVerdict,
}

fn hypotheses(model: &ModelSpec, u0: &Field) -> std::result::Result<f64, String> {
    let p = match model.drift.power() {
        Some((_, p)) if p > 1.0 => p,
        _ => return Err("drift must be a power c0·u^p with p > 1".into()),
    };
    if !model.drift.nonnegative_below_zero() {
        return Err("drift must be nonnegative for u ≤ 0".into());
    }
    let d = &model.diffusion;
    if !d.vanishes_at_zero() {
        return Err("diffusion must vanish at u = 0".into());
    }
    if let Some(m) = d.exponent() {
        if !(2.0 * m > 1.0) {
            return Err(format!("diffusion exponent m = {m} violates 2m > 1"));
        }
    } else if !matches!(d.kind, DiffusionKind::Zero) {
        return Err("diffusion must be bounded by a power of |u|".into());
    }
    if u0.min() < 0.0 {
        return Err("initial datum must be nonnegative".into());
    }
    Ok(p)
}

/// `∫ K(τ, x − y) w(y) dy` on the mesh; the identity when the kernel is
/// narrower than two cells.
fn smooth(w: &[f64], nodes: &[f64], dx: f64, tau: f64, x_index: usize, conv: KernelConvention) -> f64 {
    if tau <= 0.0 || conv.variance(tau).sqrt() < 2.0 * dx {
        return w[x_index];
    }
    let x = nodes[x_index];
    nodes.iter().zip(w).map(|(y, v)| kernel_1d(tau, x - y, conv) * v).sum::<f64>() * dx
}

/// Checks `E u(x, t) ≥ K(t)∗u0 + ∫_0^t K(t − s)∗(c0·(E u)^p) ds` at the middle
/// half of the mesh, allowing three standard errors and a relative
/// discretization tolerance `rel_tol`.
///
/// Refuses with [`Error::Hypothesis`] unless the model keeps solutions
/// nonnegative and `u0` is nonnegative. Blowup is only predicted for a
/// nontrivial `u0`.
pub fn expectation_supersolution_check(
    model: &ModelSpec,
    u0: &Field,
    series: &MeanFieldSeries,
    conv: KernelConvention,
    rel_tol: f64,
) -> Result<SupersolutionReport> {
    let p = hypotheses(model, u0).map_err(Error::Hypothesis)?;
    let c0 = model.drift.power().map(|(c, _)| c).unwrap_or(0.0);
    let nt = series.times.len();
    if series.mean.len() != nt || series.stderr.len() != nt || nt == 0 {
        return Err(Error::invalid("mean-field series lengths disagree"));
    }
    if series.times.windows(2).any(|w| !(w[1] > w[0])) || series.times[0] < 0.0 {
        return Err(Error::invalid("mean-field times must be nonnegative and increasing"));
    }
    let grid = *u0.grid();
    for f in &series.mean {
        grid.check(f)?;
    }
    let nodes: Vec<f64> = grid.nodes().collect();
    let dx = grid.dx();
    let n = nodes.len();

    // time levels including t = 0
    let mut levels: Vec<(f64, Vec<f64>)> = Vec::with_capacity(nt + 1);
    let start = if series.times[0] == 0.0 { 0 } else { 1 };
    if start == 1 {
        levels.push((0.0, u0.values().to_vec()));
    }
    for (t, f) in series.times.iter().zip(&series.mean) {
        levels.push((*t, f.values().to_vec()));
    }
    let source: Vec<Vec<f64>> = levels
        .iter()
        .map(|(_, w)| w.iter().map(|v| c0 * v.max(0.0).powf(p)).collect())
        .collect();

    let (lo, hi) = (n / 4, n - n / 4);
    let mut points = Vec::new();
    for (k, &t) in series.times.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let level = k + start;
        for i in lo..hi {
            let free = smooth(u0.values(), &nodes, dx, t, i, conv);
            let mut forced = 0.0;
            for j in 1..=level {
                let (s0, s1) = (levels[j - 1].0, levels[j].0);
                let a = smooth(&source[j - 1], &nodes, dx, t - s0, i, conv);
                let b = smooth(&source[j], &nodes, dx, t - s1, i, conv);
                forced += 0.5 * (s1 - s0) * (a + b);
            }
            let duhamel = free + forced;
            let mean = series.mean[k].values()[i];
            let stderr = series.stderr[k][i];
            let pass = mean + 3.0 * stderr >= duhamel * (1.0 - rel_tol);
            points.push(SupersolutionPoint { t, x: nodes[i], mean, stderr, duhamel, pass });
        }
    }
    let passed = points.iter().filter(|q| q.pass).count();
    let pass_fraction = if points.is_empty() { 0.0 } else { passed as f64 / points.len() as f64 };
    let holds = !points.is_empty() && passed == points.len();
    let fujita = fujita_classify(p, 1);
    let nontrivial = u0.sup_norm() > 0.0;
    let verdict = if holds && nontrivial && fujita.predicts_blowup_for_all() {
        TheoryVerdict::BlowupPredicted
    } else {
        TheoryVerdict::Indeterminate
    };
    Ok(SupersolutionReport {
        p,
        fujita,
        points,
        pass_fraction,
        holds,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::integrator::{Simulator, SolverConfig};
    use crate::model::{DiffusionSpec, DriftSpec};
    use crate::noise::NoiseModel;
    use std::f64::consts::PI;

    const HALF: KernelConvention = KernelConvention::HalfLaplacian;

    #[test]
    fn unit_density_gives_unit_moment() {
        let g = GridSpec::symmetric(20.0, 2000).unwrap();
        let w = kernel_weighted_moment(&Field::from_fn(g, |_| 1.0), 1.5, HALF).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9);
        assert!(!w.truncated && !w.coarse_mesh);
    }

    #[test]
    fn kernel_density_matches_closed_form() {
        let g = GridSpec::symmetric(20.0, 2000).unwrap();
        let (t, t0) = (1.0, 0.5);
        let v = Field::from_fn(g, |x| kernel_1d(t0, x, HALF));
        let w = kernel_weighted_moment(&v, t, HALF).unwrap();
        let exact = 1.0 / (2.0 * PI * (t + t0)).sqrt();
        assert!((w.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn truncation_is_flagged() {
        let g = GridSpec::symmetric(1.0, 100).unwrap();
        let w = kernel_weighted_moment(&Field::from_fn(g, |_| 1.0), 4.0, HALF).unwrap();
        assert!(w.truncated);
    }

    #[test]
    fn heat_flow_moment_decays_like_inverse_root() {
        // v = (K(t)∗1_{|y|<1})²; √t·G(t) stays bounded below on [1, 4]
        let g = GridSpec::symmetric(30.0, 3000).unwrap();
        let u0 = Field::from_fn(g, |y| if y.abs() < 1.0 { 1.0 } else { 0.0 });
        let times: Vec<f64> = (0..=12).map(|k| 1.0 + 0.25 * k as f64).collect();
        let gs: Vec<f64> = times
            .iter()
            .map(|&t| {
                let v = Field::from_fn(g, |x| {
                    crate::kernel::kernel_convolve(&u0, t, x, HALF).unwrap().value.powi(2)
                });
                kernel_weighted_moment(&v, t, HALF).unwrap().value
            })
            .collect();
        let min = times.iter().zip(&gs).map(|(t, g)| t.sqrt() * g).fold(f64::INFINITY, f64::min);
        assert!(min > 0.05, "{min}");
        let rec = recursion_check(&times, &gs, 1.2, 1).unwrap();
        assert!(rec.holds && rec.c2 > 0.0);
    }

    #[test]
    fn recursion_horizon_for_critical_power() {
        // G ≡ 1, d = 1, m = 1.5: k = −1, so the horizon is exp(budget)
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let gs = vec![1.0; times.len()];
        let r = recursion_check(&times, &gs, 1.5, 1).unwrap();
        assert!(r.holds);
        let budget = r.c2.powf(-0.5) / (0.5 * r.c4);
        assert!((r.implied_horizon.unwrap() - budget.exp()).abs() < 1e-9 * budget.exp());
        assert!(recursion_check(&[0.5], &[1.0], 1.5, 1).is_err());
    }

    fn deterministic_series(u0: &Field, model: ModelSpec, record: Vec<f64>) -> MeanFieldSeries {
        let t_end = *record.last().unwrap();
        let cfg = SolverConfig::new(2e-4, t_end, record.clone());
        let sim = Simulator::new(model, u0.clone(), NoiseModel::ScalarBrownian, cfg).unwrap();
        let run = sim.run(1, 0);
        MeanFieldSeries {
            times: record,
            mean: run.snapshots.iter().map(|s| s.field.clone()).collect(),
            stderr: run.snapshots.iter().map(|s| vec![0.0; s.field.len()]).collect(),
        }
    }

    #[test]
    fn deterministic_duhamel_holds_with_equality() {
        let g = GridSpec::symmetric(10.0, 400).unwrap();
        let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
        let model = ModelSpec { drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 }, diffusion: DiffusionSpec::zero() };
        let record: Vec<f64> = (0..=20).map(|k| k as f64 * 0.025).collect();
        let series = deterministic_series(&u0, model, record);
        let rep = expectation_supersolution_check(&model, &u0, &series, KernelConvention::Laplacian, 0.01).unwrap();
        assert!(rep.holds, "pass fraction {}", rep.pass_fraction);
        assert_eq!(rep.fujita, FujitaClass::BlowupAllNontrivial);
        assert_eq!(rep.verdict, TheoryVerdict::BlowupPredicted);
        let worst = rep
            .points
            .iter()
            .map(|q| (q.mean - q.duhamel).abs() / q.duhamel.max(1e-3))
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn refuses_without_positivity() {
        let g = GridSpec::symmetric(5.0, 50).unwrap();
        let u0 = Field::from_fn(g, |x| (-x * x).exp());
        let series = MeanFieldSeries { times: vec![0.0], mean: vec![u0.clone()], stderr: vec![vec![0.0; 50]] };
        let odd = ModelSpec { drift: DriftSpec::PowerOdd { c0: 1.0, p: 2.0 }, diffusion: DiffusionSpec::zero() };
        let err = expectation_supersolution_check(&odd, &u0, &series, HALF, 0.01).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
        let additive_like = ModelSpec { drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 }, diffusion: DiffusionSpec::linear(1.0) };
        assert!(expectation_supersolution_check(&additive_like, &u0, &series, HALF, 0.01).is_ok());
        let negative = u0.scaled(-1.0);
        assert!(matches!(
            expectation_supersolution_check(&additive_like, &negative, &series, HALF, 0.01),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn zero_datum_gives_zero_terms() {
        let g = GridSpec::symmetric(5.0, 50).unwrap();
        let zero = Field::zeros(g);
        let series = MeanFieldSeries {
            times: vec![0.0, 0.1, 0.2],
            mean: vec![zero.clone(); 3],
            stderr: vec![vec![0.0; 50]; 3],
        };
        let model = ModelSpec { drift: DriftSpec::PowerPos { c0: 1.0, p: 2.0 }, diffusion: DiffusionSpec::zero() };
        let rep = expectation_supersolution_check(&model, &zero, &series, HALF, 0.0).unwrap();
        assert!(rep.points.iter().all(|q| q.duhamel == 0.0 && q.mean == 0.0 && q.pass));
        assert_eq!(rep.verdict, TheoryVerdict::Indeterminate);
    }
}
