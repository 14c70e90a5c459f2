//! Close-approach detection and collision probability.
//!
//! Screening samples the relative motion of every (protected, debris) pair on
//! a shared time grid, brackets the sign changes of the range rate, and
//! refines each candidate minimum by bisection to millisecond accuracy.
//! Probability uses the short-term encounter model: the relative position at
//! TCA projected on the encounter plane with an isotropic combined Gaussian,
//! integrated over the combined hard-body disc.

use serde::{Deserialize, Serialize};

use crate::orbit::{Propagator, StateVector};
use crate::session::{DangerousSituation, Maneuver, SpaceObject, Trajectory, Window};
use crate::{Error, Result};

/// One close approach between the protected object and a debris object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conjunction {
    pub debris_name: String,
    /// Inter-object distance at TCA, m.
    pub miss_distance: f64,
    /// Time of closest approach, days mjd2000.
    pub epoch: f64,
    /// Collision probability for this pass.
    pub probability: f64,
    /// True when the probability reaches the configured danger threshold.
    pub danger: bool,
}

/// Collision-probability model selector. A single method ships today; the
/// tag keeps the interface open for alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMethod {
    /// Isotropic 2-D Gaussian on the encounter plane integrated over the
    /// combined hard-body disc.
    #[default]
    EncounterPlaneGaussian,
}

/// Positional uncertainties feeding the probability integral. Objects with a
/// positive `pos_sigma` override these global defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbabilityModel {
    /// Protected-object 1-sigma per axis, m.
    pub sigma_protected: f64,
    /// Debris 1-sigma per axis, m.
    pub sigma_debris: f64,
    pub method: ProbabilityMethod,
}

impl Default for ProbabilityModel {
    fn default() -> Self {
        Self {
            sigma_protected: 100.0,
            sigma_debris: 100.0,
            method: ProbabilityMethod::EncounterPlaneGaussian,
        }
    }
}

impl ProbabilityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_protected > 0.0) || !(self.sigma_debris > 0.0) {
            return Err(Error::InvalidInput(
                "probability model sigmas must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Screening parameters: the distance cut, the danger flag threshold, and
/// the probability model defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    /// Conjunctions are reported below this miss distance, m.
    pub screen_distance: f64,
    /// A conjunction is flagged dangerous at or above this probability.
    pub danger_threshold: f64,
    pub model: ProbabilityModel,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            screen_distance: 2000.0,
            danger_threshold: 1e-4,
            model: ProbabilityModel::default(),
        }
    }
}

/// Combines every conjunction probability: 1 - prod(1 - p_i).
/// Order-independent up to floating-point rounding of the product.
pub fn total_collision_probability(probabilities: &[f64]) -> f64 {
    let complement: f64 = probabilities.iter().map(|p| 1.0 - p).product();
    (1.0 - complement).clamp(0.0, 1.0)
}

/// Probability that two objects with combined hard-body radius
/// `hard_body_radius` collide given the miss distance: the isotropic 2-D
/// Gaussian with per-axis variance sigma_p^2 + sigma_d^2 integrated over the
/// disc of the combined radius centered at the miss offset.
pub fn collision_probability(
    miss_distance: f64,
    hard_body_radius: f64,
    model: &ProbabilityModel,
) -> f64 {
    let ProbabilityMethod::EncounterPlaneGaussian = model.method;
    let sigma = (model.sigma_protected * model.sigma_protected
        + model.sigma_debris * model.sigma_debris)
        .sqrt();
    gaussian_disc_mass(miss_distance.abs(), hard_body_radius, sigma)
}

/// Mass of the isotropic 2-D N(0, sigma^2 I) over a disc of radius `r_disc`
/// whose center sits `offset` from the mean. Adaptive Simpson quadrature in
/// polar form with the exponentially scaled Bessel I0 to avoid overflow.
fn gaussian_disc_mass(offset: f64, r_disc: f64, sigma: f64) -> f64 {
    if r_disc <= 0.0 {
        return 0.0;
    }
    if sigma <= 0.0 {
        // Deterministic limit: all mass at the offset point.
        return if offset <= r_disc { 1.0 } else { 0.0 };
    }
    // The radial integrand is negligible more than ~10 sigma from the offset.
    let lo = (offset - 10.0 * sigma).max(0.0);
    let hi = (offset + 10.0 * sigma).min(r_disc);
    if hi <= lo {
        return 0.0;
    }
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let f = |r: f64| {
        let z = r - offset;
        r * inv_sigma2
            * (-0.5 * z * z * inv_sigma2).exp()
            * bessel_i0_scaled(r * offset * inv_sigma2)
    };
    // Pre-split so no panel is wider than ~a sigma; the integrand has a
    // single bump of that width.
    let panels = (((hi - lo) / sigma).ceil() as usize).clamp(8, 64);
    let step = (hi - lo) / panels as f64;
    let mut mass = 0.0;
    for k in 0..panels {
        let a = lo + k as f64 * step;
        let b = if k + 1 == panels { hi } else { a + step };
        mass += adaptive_simpson(&f, a, b, 1e-13 / panels as f64, 28);
    }
    mass.clamp(0.0, 1.0)
}

/// Exponentially scaled modified Bessel function of order zero,
/// I0(x) * exp(-x) for x >= 0. Polynomial approximations accurate to ~2e-7.
fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 3.75 {
        let t = x / 3.75;
        let t2 = t * t;
        let i0 = 1.0
            + t2 * (3.5156229
                + t2 * (3.0899424
                    + t2 * (1.2067492 + t2 * (0.2659732 + t2 * (0.0360768 + t2 * 0.0045813)))));
        i0 * (-x).exp()
    } else {
        let t = 3.75 / x;
        let poly = 0.39894228
            + t * (0.01328592
                + t * (0.00225319
                    + t * (-0.00157565
                        + t * (0.00916281
                            + t * (-0.02057706
                                + t * (0.02635537 + t * (-0.01647633 + t * 0.00392377)))))));
        poly / x.sqrt()
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (fa + 4.0 * fm + fb) * h / 6.0
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Refinement stops once the TCA bracket is this small (1 ms in days).
const TCA_TOLERANCE_DAYS: f64 = 1e-3 / crate::consts::SECONDS_PER_DAY;

/// Candidate minima whose estimated miss is farther than screen distance
/// plus this margin are discarded without refinement. The quadratic estimate
/// from grid samples is good to a few hundred meters, so 10 km is generous.
const REFINE_MARGIN: f64 = 10_000.0;

/// Per-situation screening cache: the shared scan grid and the debris states
/// along it, built once and reused for every candidate protected trajectory.
pub(crate) struct ScreenCache {
    window: Window,
    grid: Vec<f64>,
    protected_radius: f64,
    protected_sigma: f64,
    protected_period_days: f64,
    debris: Vec<DebrisEntry>,
}

struct DebrisEntry {
    name: String,
    propagator: Propagator,
    radius: f64,
    pos_sigma: f64,
    states: Vec<StateVector>,
}

impl ScreenCache {
    pub(crate) fn build(
        protected: &SpaceObject,
        debris: &[SpaceObject],
        window: Window,
    ) -> Result<Self> {
        protected.validate()?;
        if !(window.start < window.end) {
            return Err(Error::InvalidInput(format!(
                "window start {} must precede end {}",
                window.start, window.end
            )));
        }
        // Coarse sampling at one two-hundredth of the fastest period present;
        // range-rate sign changes between samples bracket every distance
        // minimum.
        let mut min_period = protected.elements.period();
        for d in debris {
            d.validate()?;
            min_period = min_period.min(d.elements.period());
        }
        let duration_s = window.duration_days() * crate::consts::SECONDS_PER_DAY;
        let steps = ((duration_s / (min_period / 200.0)).ceil() as usize).max(2);
        let dt_days = window.duration_days() / steps as f64;
        let grid: Vec<f64> = (0..=steps)
            .map(|j| {
                if j == steps {
                    window.end
                } else {
                    window.start + j as f64 * dt_days
                }
            })
            .collect();
        let debris = debris
            .iter()
            .map(|d| {
                let propagator = Propagator::new(&d.elements);
                DebrisEntry {
                    name: d.name.clone(),
                    states: grid.iter().map(|&t| propagator.state_at(t)).collect(),
                    propagator,
                    radius: d.radius,
                    pos_sigma: d.pos_sigma,
                }
            })
            .collect();
        Ok(ScreenCache {
            window,
            grid,
            protected_radius: protected.radius,
            protected_sigma: protected.pos_sigma,
            protected_period_days: protected.elements.period() / crate::consts::SECONDS_PER_DAY,
            debris,
        })
    }

    /// Screens one protected trajectory against every cached debris track.
    pub(crate) fn screen(
        &self,
        trajectory: &Trajectory,
        screening: &ScreeningConfig,
    ) -> Result<Vec<Conjunction>> {
        let protected_states: Vec<StateVector> =
            self.grid.iter().map(|&t| trajectory.state_at(t)).collect();
        let mut all = Vec::new();
        for entry in &self.debris {
            let minima = self.scan_pair(trajectory, entry, &protected_states, screening);
            let sigma_p = if self.protected_sigma > 0.0 {
                self.protected_sigma
            } else {
                screening.model.sigma_protected
            };
            let sigma_d = if entry.pos_sigma > 0.0 {
                entry.pos_sigma
            } else {
                screening.model.sigma_debris
            };
            let pair_model = ProbabilityModel {
                sigma_protected: sigma_p,
                sigma_debris: sigma_d,
                method: screening.model.method,
            };
            let hard_body = self.protected_radius + entry.radius;
            for (tca, miss) in minima {
                let probability = collision_probability(miss, hard_body, &pair_model);
                all.push(Conjunction {
                    debris_name: entry.name.clone(),
                    miss_distance: miss,
                    epoch: tca,
                    probability,
                    danger: probability >= screening.danger_threshold,
                });
            }
        }
        all.sort_by(|a, b| a.epoch.partial_cmp(&b.epoch).expect("finite epochs"));
        Ok(all)
    }

    /// Finds the sub-screen distance minima of one pair: bracket range-rate
    /// sign changes on the grid, estimate the bracket minimum from a locally
    /// linear relative motion model, refine survivors by bisection, then merge
    /// same-pass duplicates (within a tenth of the protected period, smaller
    /// miss wins).
    fn scan_pair(
        &self,
        trajectory: &Trajectory,
        entry: &DebrisEntry,
        protected_states: &[StateVector],
        screening: &ScreeningConfig,
    ) -> Vec<(f64, f64)> {
        let n = self.grid.len();
        let mut found: Vec<(f64, f64)> = Vec::new();
        let range_rate_dot = |j: usize| {
            let rel_r = protected_states[j].position - entry.states[j].position;
            let rel_v = protected_states[j].velocity - entry.states[j].velocity;
            (rel_r.dot(&rel_v), rel_r.norm_squared())
        };
        let mut current = range_rate_dot(0);
        for j in 0..n - 1 {
            let next = range_rate_dot(j + 1);
            let (g0, d2_0) = current;
            let (g1, _) = next;
            current = next;
            if !(g0 < 0.0 && g1 >= 0.0) {
                continue;
            }
            // Linear range-rate model inside the bracket: estimated minimum
            // of the squared distance at the interpolated root of g.
            let dt_s = (self.grid[j + 1] - self.grid[j]) * crate::consts::SECONDS_PER_DAY;
            let est_miss = if g1 > g0 {
                let to_root = dt_s * (-g0) / (g1 - g0);
                (d2_0 + g0 * to_root).max(0.0).sqrt()
            } else {
                d2_0.sqrt()
            };
            if est_miss > screening.screen_distance + REFINE_MARGIN {
                continue;
            }
            let (tca, miss) = refine_minimum(
                trajectory,
                &entry.propagator,
                self.grid[j],
                self.grid[j + 1],
            );
            if miss < screening.screen_distance && self.window.contains(tca) {
                found.push((tca, miss));
            }
        }
        // One conjunction per pass.
        let merge_window = self.protected_period_days / 10.0;
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (tca, miss) in found {
            match merged.last_mut() {
                Some((last_tca, last_miss)) if tca - *last_tca < merge_window => {
                    if miss < *last_miss {
                        *last_tca = tca;
                        *last_miss = miss;
                    }
                }
                _ => merged.push((tca, miss)),
            }
        }
        merged
    }
}

/// Bisection on the range rate to the millisecond bracket; returns the TCA
/// and the refined miss distance.
fn refine_minimum(
    trajectory: &Trajectory,
    debris: &Propagator,
    mut lo: f64,
    mut hi: f64,
) -> (f64, f64) {
    let g = |t: f64| {
        let p = trajectory.state_at(t);
        let d = debris.state_at(t);
        (p.position - d.position).dot(&(p.velocity - d.velocity))
    };
    let mut g_lo = g(lo);
    let mut g_hi = g(hi);
    while hi - lo > TCA_TOLERANCE_DAYS {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid < 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    // The range rate is essentially linear across the final bracket; its
    // interpolated root beats the bracket midpoint by orders of magnitude.
    let tca = if g_hi > g_lo {
        (lo + (hi - lo) * (-g_lo) / (g_hi - g_lo)).clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    let p = trajectory.state_at(tca);
    let d = debris.state_at(tca);
    (tca, (p.position - d.position).norm())
}

/// Screens the (possibly maneuvered) protected object against every debris
/// object over the window. Returns one conjunction per distance minimum below
/// the screening distance, sorted by epoch, TCA refined to one millisecond.
pub fn find_conjunctions(
    protected: &SpaceObject,
    maneuvers: &[Maneuver],
    debris: &[SpaceObject],
    window: Window,
    screening: &ScreeningConfig,
) -> Result<Vec<Conjunction>> {
    let cache = ScreenCache::build(protected, debris, window)?;
    let trajectory = Trajectory::new(protected.elements, maneuvers)?;
    cache.screen(&trajectory, screening)
}

/// Convenience wrapper screening a whole situation.
pub fn screen_situation(
    situation: &DangerousSituation,
    maneuvers: &[Maneuver],
    screening: &ScreeningConfig,
) -> Result<Vec<Conjunction>> {
    find_conjunctions(
        &situation.protected,
        maneuvers,
        &situation.debris,
        situation.window,
        screening,
    )
}
