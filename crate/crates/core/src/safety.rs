//! Per-unit box bounds, the coupled feasibility check and the projection of
//! the reference currents onto the admissible set.
//!
//! The projection minimizes `0.5 * |u - u_des|^2` subject to `u_i` lying in
//! its admissible union and, unless relaxed, total power not exceeding wind.
//! Each unit's union has at most two intervals; for every choice of interval
//! per unit the restricted problem is convex (power is convex and increasing
//! in current) and is solved exactly by bisection on the coupling multiplier.
//! The best choice wins.

use serde::{Deserialize, Serialize};

use crate::cbf::{self, AdmissibleSet, CbfCoefficients, Interval};
use crate::config::{ControllerParams, ElectrolyzerParams};
use crate::error::{Error, Result};
use crate::plant::{self, ElectrolyzerState};

/// Above this many two-interval units only the lower-interval choice and the
/// independent-projection choice are searched.
pub const MAX_ENUMERATED_SPLITS: usize = 12;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: f64,
    pub upper: f64,
    pub ramp_cap: f64,
    pub voltage_cap: f64,
    pub current_cap: f64,
    pub power_cap: f64,
}

impl BoxBounds {
    pub fn is_empty(&self) -> bool {
        self.upper < self.lower
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lower, self.upper)
    }
}

/// Current box from the ramp limit around `u_prev` and the stack voltage,
/// current and power limits at the present temperature.
pub fn box_bounds(p: &ElectrolyzerParams, s: &ElectrolyzerState, u_prev: f64, dt: f64) -> Result<BoxBounds> {
    let r = plant::resistance(p, s.t_ele);
    if r <= 0.0 {
        return Err(Error::ModelValidity { t_ele: s.t_ele, value: r });
    }
    let ramp = p.delta_i_max * dt;
    let voltage_cap = (p.u_max() - p.u_rev) / r;
    let current_cap = plant::max_current(p, s.t_ele)?;
    let p_max = plant::max_power(p, s.t_ele)?;
    // Nonnegative root of r x^2 + u_rev x - p_max, in cancellation-free form.
    let power_cap = 2.0 * p_max / (p.u_rev + (p.u_rev * p.u_rev + 4.0 * r * p_max).sqrt());
    let ramp_cap = u_prev + ramp;
    Ok(BoxBounds {
        lower: (u_prev - ramp).max(0.0),
        upper: ramp_cap.min(voltage_cap).min(current_cap).min(power_cap),
        ramp_cap,
        voltage_cap,
        current_cap,
        power_cap,
    })
}

/// Everything the safety layer knows about one unit at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConstraints {
    pub bounds: BoxBounds,
    pub cbf: CbfCoefficients,
    pub set: AdmissibleSet,
}

pub fn unit_constraints(
    p: &ElectrolyzerParams,
    s: &ElectrolyzerState,
    u_prev: f64,
    t_a: f64,
    ctrl: &ControllerParams,
    tol: f64,
) -> Result<UnitConstraints> {
    let bounds = box_bounds(p, s, u_prev, ctrl.dt)?;
    let cbf = cbf::cbf_coefficients(p, s, t_a, ctrl.alpha, ctrl.dt);
    let set = cbf::nonneg_region(&cbf, bounds.interval(), tol);
    Ok(UnitConstraints { bounds, cbf, set })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub per_unit_nonempty: Vec<bool>,
    pub u_minus: Vec<Option<f64>>,
    /// Total power with every nonempty unit at its minimum admissible current (W).
    pub p_min_reach: f64,
    pub p_wind: f64,
    pub coupling_reachable: bool,
    pub relaxed: bool,
}

impl FeasibilityReport {
    pub fn all_nonempty(&self) -> bool {
        self.per_unit_nonempty.iter().all(|&b| b)
    }
}

pub fn feasibility_check(
    sets: &[AdmissibleSet],
    params: &[ElectrolyzerParams],
    states: &[ElectrolyzerState],
    p_wind: f64,
) -> FeasibilityReport {
    let u_minus: Vec<Option<f64>> = sets.iter().map(AdmissibleSet::u_minus).collect();
    let per_unit_nonempty: Vec<bool> = u_minus.iter().map(Option::is_some).collect();
    let p_min_reach = u_minus
        .iter()
        .zip(params.iter().zip(states))
        .filter_map(|(u, (p, s))| u.map(|u| plant::electrolyzer_power(p, s.t_ele, u)))
        .sum::<f64>();
    let holds = per_unit_nonempty.iter().all(|&b| b) && p_min_reach <= p_wind;
    FeasibilityReport {
        per_unit_nonempty,
        u_minus,
        p_min_reach,
        p_wind,
        coupling_reachable: holds,
        relaxed: !holds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionStage {
    /// Independent nearest-point projection; coupling slack or relaxed.
    Independent,
    /// Coupling bound active.
    Coupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub u: Vec<f64>,
    pub stage: ProjectionStage,
    /// `0.5 * |u - u_des|^2`.
    pub objective: f64,
    /// Total instantaneous power at `u` (W).
    pub p_total: f64,
    /// Coupling multiplier of the winning interval choice; 0 when inactive.
    pub multiplier: f64,
    pub choices_evaluated: usize,
    pub bisections: usize,
}

fn objective(u: &[f64], u_des: &[f64]) -> f64 {
    0.5 * u.iter().zip(u_des).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

fn total_power(u: &[f64], params: &[ElectrolyzerParams], states: &[ElectrolyzerState]) -> f64 {
    u.iter()
        .zip(params.iter().zip(states))
        .map(|(&u, (p, s))| plant::electrolyzer_power(p, s.t_ele, u))
        .sum()
}

/// Power model `a u + c u^2` of one unit at its present temperature.
#[derive(Clone, Copy)]
struct Quadratic {
    a: f64,
    c: f64,
}

impl Quadratic {
    fn power(&self, u: f64) -> f64 {
        (self.a + self.c * u) * u
    }
}

/// Result of one restricted problem.
struct Restricted {
    u: Vec<f64>,
    objective: f64,
    multiplier: f64,
    bisections: usize,
}

fn minimizer_at(lambda: f64, d: &[f64], q: &[Quadratic], ivs: &[Interval], out: &mut [f64]) {
    for i in 0..d.len() {
        let free = (d[i] - lambda * q[i].a) / (1.0 + 2.0 * lambda * q[i].c);
        out[i] = ivs[i].clamp(free);
    }
}

fn power_sum(u: &[f64], q: &[Quadratic]) -> f64 {
    u.iter().zip(q).map(|(&u, q)| q.power(u)).sum()
}

/// Exact minimizer over a product of intervals with the power budget,
/// or `None` when even the lower corner exceeds it.
fn solve_restricted(d: &[f64], q: &[Quadratic], ivs: &[Interval], budget: f64, tol_power: f64) -> Option<Restricted> {
    let n = d.len();
    let lows: Vec<f64> = ivs.iter().map(|iv| iv.lo).collect();
    if power_sum(&lows, q) > budget {
        return None;
    }
    let mut u = vec![0.0; n];
    minimizer_at(0.0, d, q, ivs, &mut u);
    if power_sum(&u, q) <= budget {
        let objective = objective(&u, d);
        return Some(Restricted {
            u,
            objective,
            multiplier: 0.0,
            bisections: 0,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut bisections = 0;
    loop {
        minimizer_at(hi, d, q, ivs, &mut u);
        if power_sum(&u, q) <= budget {
            break;
        }
        lo = hi;
        hi *= 2.0;
        bisections += 1;
        if !hi.is_finite() {
            u.copy_from_slice(&lows);
            let objective = objective(&u, d);
            return Some(Restricted {
                u,
                objective,
                multiplier: f64::INFINITY,
                bisections,
            });
        }
    }
    let mut best = u.clone();
    let mut scratch = vec![0.0; n];
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        bisections += 1;
        minimizer_at(mid, d, q, ivs, &mut scratch);
        let total = power_sum(&scratch, q);
        if total <= budget {
            hi = mid;
            best.copy_from_slice(&scratch);
            if budget - total <= tol_power {
                break;
            }
        } else {
            lo = mid;
        }
    }
    let objective = objective(&best, d);
    Some(Restricted {
        u: best,
        objective,
        multiplier: hi,
        bisections,
    })
}

/// Project `u_des` onto the admissible sets with the wind coupling.
///
/// The returned point never exceeds `p_wind` in total power when not
/// relaxed; `tol_power` only ends the multiplier search early once the
/// budget gap is below it.
pub fn project(
    u_des: &[f64],
    sets: &[AdmissibleSet],
    params: &[ElectrolyzerParams],
    states: &[ElectrolyzerState],
    p_wind: f64,
    relaxed: bool,
    tol_power: f64,
) -> Result<Projection> {
    let n = u_des.len();
    debug_assert!(sets.len() == n && params.len() == n && states.len() == n);
    let mut stage1 = Vec::with_capacity(n);
    for (unit, (set, &d)) in sets.iter().zip(u_des).enumerate() {
        stage1.push(set.nearest(d).ok_or(Error::EmptyAdmissibleSet { unit })?);
    }
    let p1 = total_power(&stage1, params, states);
    if relaxed || p1 <= p_wind {
        return Ok(Projection {
            objective: objective(&stage1, u_des),
            u: stage1,
            stage: ProjectionStage::Independent,
            p_total: p1,
            multiplier: 0.0,
            choices_evaluated: 1,
            bisections: 0,
        });
    }

    let q: Vec<Quadratic> = params
        .iter()
        .zip(states)
        .map(|(p, s)| Quadratic {
            a: p.u_rev,
            c: plant::resistance(p, s.t_ele),
        })
        .collect();
    let split: Vec<usize> = (0..n).filter(|&i| sets[i].intervals.len() > 1).collect();

    let choices: Vec<Vec<Interval>> = if split.len() <= MAX_ENUMERATED_SPLITS {
        (0u32..1 << split.len())
            .map(|mask| {
                let mut pick: Vec<Interval> = sets.iter().map(|s| s.intervals[0]).collect();
                for (bit, &i) in split.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        pick[i] = sets[i].intervals[1];
                    }
                }
                pick
            })
            .collect()
    } else {
        let lower: Vec<Interval> = sets.iter().map(|s| s.intervals[0]).collect();
        let nearest: Vec<Interval> = sets
            .iter()
            .zip(&stage1)
            .map(|(s, &u)| s.intervals[s.interval_of(u).unwrap_or(0)])
            .collect();
        vec![lower, nearest]
    };

    let mut best: Option<Restricted> = None;
    let mut evaluated = 0;
    let mut bisections = 0;
    for ivs in &choices {
        evaluated += 1;
        if let Some(r) = solve_restricted(u_des, &q, ivs, p_wind, tol_power) {
            bisections += r.bisections;
            if best.as_ref().is_none_or(|b| r.objective < b.objective) {
                best = Some(r);
            }
        }
    }
    let best = best.ok_or_else(|| {
        let lows: Vec<f64> = sets.iter().map(|s| s.intervals[0].lo).collect();
        Error::Infeasible {
            p_min: total_power(&lows, params, states),
            p_wind,
        }
    })?;
    Ok(Projection {
        p_total: total_power(&best.u, params, states),
        u: best.u,
        stage: ProjectionStage::Coupled,
        objective: best.objective,
        multiplier: best.multiplier,
        choices_evaluated: evaluated,
        bisections,
    })
}

/// Exhaustive grid minimizer: every interval is sampled at `grid_step`
/// spacing plus its endpoints, and the best grid point meeting the coupling
/// bound is returned. Exponential in the unit count; meant for `n <= 3`.
pub fn brute_force_project(
    u_des: &[f64],
    sets: &[AdmissibleSet],
    params: &[ElectrolyzerParams],
    states: &[ElectrolyzerState],
    p_wind: f64,
    relaxed: bool,
    grid_step: f64,
) -> Option<Vec<f64>> {
    let n = u_des.len();
    let grids: Vec<Vec<f64>> = sets
        .iter()
        .map(|set| {
            let mut g = Vec::new();
            for iv in &set.intervals {
                let count = (iv.width() / grid_step).floor() as usize;
                for k in 0..=count {
                    g.push(iv.lo + k as f64 * grid_step);
                }
                if g.last() != Some(&iv.hi) {
                    g.push(iv.hi);
                }
            }
            g
        })
        .collect();
    if grids.iter().any(Vec::is_empty) {
        return None;
    }
    let powers: Vec<Vec<f64>> = grids
        .iter()
        .enumerate()
        .map(|(i, g)| g.iter().map(|&u| plant::electrolyzer_power(&params[i], states[i].t_ele, u)).collect())
        .collect();
    let budget = if relaxed { f64::INFINITY } else { p_wind };
    let min_tail: Vec<f64> = (0..=n)
        .map(|i| powers[i..].iter().map(|p| p[0]).sum::<f64>())
        .collect();

    struct Search<'a> {
        grids: &'a [Vec<f64>],
        powers: &'a [Vec<f64>],
        min_tail: &'a [f64],
        d: &'a [f64],
        budget: f64,
        current: Vec<f64>,
        best: Option<(f64, Vec<f64>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, used: f64, cost: f64) {
            let n = self.d.len();
            if used + self.min_tail[i] > self.budget {
                return;
            }
            if let Some((b, _)) = &self.best {
                if cost >= *b {
                    return;
                }
            }
            if i + 1 == n {
                // Feasible grid points form a prefix because power increases with current.
                let g = &self.grids[i];
                let pw = &self.powers[i];
                let limit = pw.partition_point(|&p| used + p <= self.budget);
                if limit == 0 {
                    return;
                }
                let k = g[..limit].partition_point(|&x| x < self.d[i]);
                let mut pick = None;
                for j in [k.saturating_sub(1), k.min(limit - 1)] {
                    let dist = (g[j] - self.d[i]).abs();
                    if pick.is_none_or(|(_, bd)| dist < bd) {
                        pick = Some((j, dist));
                    }
                }
                let (j, dist) = pick.unwrap();
                let total = cost + 0.5 * dist * dist;
                if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                    self.current[i] = g[j];
                    self.best = Some((total, self.current.clone()));
                }
                return;
            }
            for j in 0..self.grids[i].len() {
                let x = self.grids[i][j];
                self.current[i] = x;
                let diff = x - self.d[i];
                self.visit(i + 1, used + self.powers[i][j], cost + 0.5 * diff * diff);
            }
        }
    }

    let mut search = Search {
        grids: &grids,
        powers: &powers,
        min_tail: &min_tail,
        d: u_des,
        budget,
        current: vec![0.0; n],
        best: None,
    };
    search.visit(0, 0.0, 0.0);
    search.best.map(|(_, u)| u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> ElectrolyzerParams {
        ElectrolyzerParams::reference()
    }

    #[test]
    fn ramp_and_voltage_caps() {
        let mut p = p();
        p.delta_i_max = 3.0;
        let b = box_bounds(&p, &ElectrolyzerState::fresh(25.0), 0.0, 1.0).unwrap();
        assert_eq!(b.lower, 0.0);
        assert_eq!(b.ramp_cap, 3.0);
        assert_eq!(b.upper, 3.0);
        assert_relative_eq!(b.voltage_cap, 15.772, epsilon = 1e-3);
        assert_relative_eq!(b.voltage_cap, plant::max_current(&p, 25.0).unwrap(), max_relative = 1e-15);

        let hot = box_bounds(&p, &ElectrolyzerState::fresh(60.0), 23.0, 1.0).unwrap();
        assert_eq!(hot.lower, 20.0);
        assert_relative_eq!(hot.upper, 24.345, epsilon = 1e-3);
    }

    #[test]
    fn power_cap_residual() {
        let p = p();
        for t in [20.0, 25.0, 40.0, 60.0, 80.0] {
            let b = box_bounds(&p, &ElectrolyzerState::fresh(t), 10.0, 1.0).unwrap();
            let r = plant::resistance(&p, t);
            let p_max = plant::max_power(&p, t).unwrap();
            let x = b.power_cap;
            assert_relative_eq!(p.u_rev * x + r * x * x, p_max, max_relative = 1e-9);
            assert_relative_eq!(x, b.current_cap, max_relative = 1e-12);
        }
        assert!(matches!(
            box_bounds(&p, &ElectrolyzerState::fresh(130.0), 0.0, 1.0),
            Err(Error::ModelValidity { .. })
        ));
    }

    fn single(lo: f64, hi: f64) -> AdmissibleSet {
        AdmissibleSet::single(Interval::new(lo, hi))
    }

    fn two(a: (f64, f64), b: (f64, f64)) -> AdmissibleSet {
        let mut s = single(a.0, a.1);
        s.intervals.push(Interval::new(b.0, b.1));
        s
    }

    #[test]
    fn feasibility_examples() {
        let params = vec![p(); 2];
        let states = vec![ElectrolyzerState::fresh(30.0); 2];
        let sets = vec![single(0.0, 5.0), single(0.0, 4.0)];
        let r = feasibility_check(&sets, &params, &states, 0.0);
        assert!(r.coupling_reachable && !r.relaxed);
        assert_eq!(r.p_min_reach, 0.0);

        let sets = vec![single(0.0, 5.0), AdmissibleSet::empty()];
        let r = feasibility_check(&sets, &params, &states, 1e9);
        assert!(!r.coupling_reachable && r.relaxed);
        assert_eq!(r.per_unit_nonempty, vec![true, false]);

        let sets = vec![single(2.0, 5.0), single(3.0, 4.0)];
        let reach = plant::electrolyzer_power(&params[0], 30.0, 2.0) + plant::electrolyzer_power(&params[1], 30.0, 3.0);
        let r = feasibility_check(&sets, &params, &states, reach - 1.0);
        assert!(!r.coupling_reachable);
        assert_eq!(r.p_min_reach, reach);
        assert!(feasibility_check(&sets, &params, &states, reach).coupling_reachable);
    }

    #[test]
    fn interior_and_clamp() {
        let params = vec![p(); 3];
        let states = vec![ElectrolyzerState::fresh(40.0); 3];
        let sets = vec![single(0.0, 10.0), single(1.0, 8.0), single(0.0, 12.0)];
        let d = [3.0, 4.0, 5.0];
        let out = project(&d, &sets, &params, &states, 1e6, false, 1e-6).unwrap();
        assert_eq!(out.u, d.to_vec());
        assert_eq!(out.stage, ProjectionStage::Independent);

        let out = project(&[7.0], &[single(2.0, 5.0)], &params[..1], &states[..1], 1e6, false, 1e-6).unwrap();
        assert_eq!(out.u, vec![5.0]);

        let err = project(&[7.0], &[AdmissibleSet::empty()], &params[..1], &states[..1], 1e6, false, 1e-6);
        assert!(matches!(err, Err(Error::EmptyAdmissibleSet { unit: 0 })));
    }

    #[test]
    fn binding_coupling_hits_budget() {
        let params = vec![p(); 3];
        let states: Vec<_> = [25.0, 40.0, 60.0].map(ElectrolyzerState::fresh).to_vec();
        let sets = vec![single(0.0, 12.0), single(0.0, 12.0), single(0.0, 12.0)];
        let d = [10.0, 10.0, 10.0];
        let wind = 1500.0;
        let out = project(&d, &sets, &params, &states, wind, false, 1e-9).unwrap();
        assert_eq!(out.stage, ProjectionStage::Coupled);
        assert!(out.p_total <= wind);
        assert!(wind - out.p_total <= 1e-6);
        // Cooler units have larger resistance and are cut deeper.
        assert!(out.u[0] < out.u[1] && out.u[1] < out.u[2]);

        let relaxed = project(&d, &sets, &params, &states, wind, true, 1e-9).unwrap();
        assert_eq!(relaxed.u, d.to_vec());
        assert!(relaxed.p_total > wind);
    }

    #[test]
    fn two_interval_choice_beats_lower_interval() {
        let params = vec![p(); 2];
        let states = vec![ElectrolyzerState::fresh(40.0); 2];
        // Unit 0 wants to sit high; giving up power on unit 1 is cheaper than
        // dropping unit 0 into its lower interval.
        let sets = vec![two((0.0, 1.0), (6.0, 9.0)), single(0.0, 9.0)];
        let d = [7.0, 6.0];
        let wind = plant::electrolyzer_power(&params[0], 40.0, 6.5) + plant::electrolyzer_power(&params[1], 40.0, 2.0);
        let out = project(&d, &sets, &params, &states, wind, false, 1e-9).unwrap();
        assert!(out.u[0] >= 6.0);
        let oracle = brute_force_project(&d, &sets, &params, &states, wind, false, 1e-3).unwrap();
        assert!(out.objective <= objective(&oracle, &d) + 1e-6);
    }

    #[test]
    fn brute_force_returns_u_minus_when_unique() {
        let params = vec![p(); 2];
        let states = vec![ElectrolyzerState::fresh(40.0); 2];
        let sets = vec![single(1.0, 3.0), single(2.0, 3.0)];
        let reach = plant::electrolyzer_power(&params[0], 40.0, 1.0) + plant::electrolyzer_power(&params[1], 40.0, 2.0);
        let got = brute_force_project(&[3.0, 3.0], &sets, &params, &states, reach, false, 1e-3).unwrap();
        assert_eq!(got, vec![1.0, 2.0]);
        let inner = brute_force_project(&[1.5, 2.5], &sets, &params, &states, 1e6, false, 0.5).unwrap();
        assert_eq!(inner, vec![1.5, 2.5]);
    }

    #[test]
    fn project_agrees_with_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let n = rng.random_range(1..=3);
            let params = vec![p(); n];
            let states: Vec<_> = (0..n).map(|_| ElectrolyzerState::fresh(rng.random_range(25.0..70.0))).collect();
            let sets: Vec<AdmissibleSet> = (0..n)
                .map(|_| {
                    let lo = rng.random_range(0.0..15.0);
                    let w = rng.random_range(0.0..0.6);
                    if rng.random_bool(0.3) {
                        let gap = rng.random_range(0.05..0.5);
                        two((lo, lo + w / 2.0), (lo + w / 2.0 + gap, lo + w + gap))
                    } else {
                        single(lo, lo + w)
                    }
                })
                .collect();
            let d: Vec<f64> = sets.iter().map(|s| s.u_minus().unwrap() + rng.random_range(-1.0..2.0)).collect();
            let lows: Vec<f64> = sets.iter().map(|s| s.u_minus().unwrap()).collect();
            let highs: Vec<f64> = sets.iter().map(|s| s.u_max().unwrap()).collect();
            let (pl, ph) = (total_power(&lows, &params, &states), total_power(&highs, &params, &states));
            let wind = pl + rng.random_range(0.0..1.0) * (ph - pl);
            let out = project(&d, &sets, &params, &states, wind, false, 1e-9).unwrap();
            assert!(out.p_total <= wind);
            for (u, s) in out.u.iter().zip(&sets) {
                assert!(s.contains(*u));
            }
            let oracle = brute_force_project(&d, &sets, &params, &states, wind, false, 1e-3).unwrap();
            assert!(out.objective <= objective(&oracle, &d) + 1e-6);
        }
    }
}
