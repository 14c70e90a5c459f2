//! Session simulation: space objects, impulsive maneuvers, piecewise-Keplerian
//! trajectories, and full-window evaluation into a [`SessionResult`].

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::conjunction::{self, Conjunction, ScreeningConfig};
use crate::orbit::{
    propagate_elements, state_to_elements, OrbitalElements, Propagator, StateVector,
};
use crate::reward::{total_reward, RewardBreakdown, RewardConfig};
use crate::{Error, Result};

/// An orbiting object: elements plus the physical radius and the 1-sigma
/// per-axis positional uncertainty used for collision probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceObject {
    pub name: String,
    #[serde(flatten)]
    pub elements: OrbitalElements,
    /// Hard-body radius, m.
    pub radius: f64,
    /// Positional uncertainty 1-sigma per axis, m (0 = use the configured
    /// global default).
    pub pos_sigma: f64,
}

impl SpaceObject {
    pub fn validate(&self) -> Result<()> {
        self.elements.validate()?;
        if !(self.radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "object {:?} radius must be positive, got {}",
                self.name, self.radius
            )));
        }
        if self.pos_sigma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "object {:?} pos_sigma must be non-negative",
                self.name
            )));
        }
        Ok(())
    }
}

/// Impulsive velocity increment at an epoch, inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ManeuverRepr", into = "ManeuverRepr")]
pub struct Maneuver {
    /// Velocity increment, m/s.
    pub dv: Vector3<f64>,
    /// Burn epoch, days mjd2000.
    pub epoch: f64,
}

/// Wire format: {"dvx", "dvy", "dvz", "epoch"}.
#[derive(Serialize, Deserialize)]
struct ManeuverRepr {
    dvx: f64,
    dvy: f64,
    dvz: f64,
    epoch: f64,
}

impl From<ManeuverRepr> for Maneuver {
    fn from(r: ManeuverRepr) -> Self {
        Maneuver {
            dv: Vector3::new(r.dvx, r.dvy, r.dvz),
            epoch: r.epoch,
        }
    }
}

impl From<Maneuver> for ManeuverRepr {
    fn from(m: Maneuver) -> Self {
        ManeuverRepr {
            dvx: m.dv.x,
            dvy: m.dv.y,
            dvz: m.dv.z,
            epoch: m.epoch,
        }
    }
}

/// Simulation window, days mjd2000.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, epoch: f64) -> bool {
        epoch >= self.start && epoch <= self.end
    }

    pub fn duration_days(&self) -> f64 {
        self.end - self.start
    }
}

/// A protected object, the debris set threatening it, and the window over
/// which the encounter plays out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DangerousSituation {
    pub window: Window,
    pub protected: SpaceObject,
    pub debris: Vec<SpaceObject>,
}

impl DangerousSituation {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.start < self.window.end) {
            return Err(Error::InvalidInput(format!(
                "window start {} must precede end {}",
                self.window.start, self.window.end
            )));
        }
        self.protected.validate()?;
        for d in &self.debris {
            d.validate()?;
        }
        Ok(())
    }
}

/// Signed element deviations (maneuvered minus nominal), angles wrapped to
/// (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    /// Semi-major axis, m.
    pub a: f64,
    pub e: f64,
    /// Inclination, rad.
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub mean_anomaly: f64,
}

/// Outcome of one simulated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    /// 1 - prod(1 - p_i) over all conjunctions.
    pub total_probability: f64,
    /// Sum of |dv| over the applied maneuvers, m/s.
    pub fuel: f64,
    /// Element deviations at the window end against the no-maneuver path.
    pub deviations: Deviations,
    pub conjunctions: Vec<Conjunction>,
    pub reward: RewardBreakdown,
}

/// Applies an impulsive burn: position unchanged, velocity incremented.
/// The maneuver epoch must equal the state epoch.
pub fn apply_maneuver(sv: &StateVector, m: &Maneuver) -> Result<StateVector> {
    if m.epoch != sv.epoch {
        return Err(Error::EpochMismatch {
            expected: sv.epoch,
            actual: m.epoch,
        });
    }
    Ok(StateVector {
        position: sv.position,
        velocity: sv.velocity + m.dv,
        epoch: sv.epoch,
    })
}

/// Wraps an angle difference into (-pi, pi].
pub(crate) fn wrap_angle_diff(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU);
    if y == 0.0 {
        PI
    } else {
        y - PI
    }
}

/// Element-wise differences `final_maneuvered - final_nominal`; both inputs
/// must share the same epoch. Angular deltas are wrapped to (-pi, pi].
pub fn deviations(
    final_maneuvered: &OrbitalElements,
    final_nominal: &OrbitalElements,
) -> Result<Deviations> {
    if final_maneuvered.epoch != final_nominal.epoch {
        return Err(Error::EpochMismatch {
            expected: final_nominal.epoch,
            actual: final_maneuvered.epoch,
        });
    }
    Ok(Deviations {
        a: final_maneuvered.a - final_nominal.a,
        e: final_maneuvered.e - final_nominal.e,
        i: wrap_angle_diff(final_maneuvered.i - final_nominal.i),
        raan: wrap_angle_diff(final_maneuvered.raan - final_nominal.raan),
        argp: wrap_angle_diff(final_maneuvered.argp - final_nominal.argp),
        mean_anomaly: wrap_angle_diff(final_maneuvered.mean_anomaly - final_nominal.mean_anomaly),
    })
}

#[derive(Debug, Clone)]
struct Segment {
    /// Epoch from which this segment's elements are in effect.
    valid_from: f64,
    propagator: Propagator,
}

/// Piecewise-Keplerian trajectory: the initial elements plus one segment per
/// applied impulse. Querying before the first burn (including backward in
/// time) uses the initial elements.
#[derive(Debug, Clone)]
pub struct Trajectory {
    segments: Vec<Segment>,
}

impl Trajectory {
    /// Builds the trajectory by applying the maneuvers in order. Maneuvers
    /// must be sorted by epoch (ties allowed); exact-zero impulses introduce
    /// no segment, so they leave the trajectory bit-identical.
    pub fn new(initial: OrbitalElements, maneuvers: &[Maneuver]) -> Result<Self> {
        let mut previous = f64::NEG_INFINITY;
        for m in maneuvers {
            if m.epoch < previous {
                return Err(Error::UnsortedManeuvers {
                    previous,
                    current: m.epoch,
                });
            }
            previous = m.epoch;
        }
        // The canonical inclination branch keeps post-burn segments (which
        // come out of state_to_elements) comparable with the initial one.
        let initial = initial.canonicalized();
        let mut segments = vec![Segment {
            valid_from: f64::NEG_INFINITY,
            propagator: Propagator::new(&initial),
        }];
        for m in maneuvers {
            if m.dv == Vector3::zeros() {
                continue;
            }
            let state = segments
                .last()
                .expect("at least the initial segment")
                .propagator
                .state_at(m.epoch);
            let burned = apply_maneuver(&state, m)?;
            segments.push(Segment {
                valid_from: m.epoch,
                propagator: Propagator::new(&state_to_elements(&burned)?),
            });
        }
        Ok(Trajectory { segments })
    }

    fn segment_at(&self, epoch: f64) -> &Propagator {
        let idx = self
            .segments
            .iter()
            .rposition(|s| s.valid_from <= epoch)
            .unwrap_or(0);
        &self.segments[idx].propagator
    }

    /// Osculating elements at `epoch`.
    pub fn elements_at(&self, epoch: f64) -> OrbitalElements {
        self.segment_at(epoch).elements_at(epoch)
    }

    /// Cartesian state at `epoch`.
    pub fn state_at(&self, epoch: f64) -> StateVector {
        self.segment_at(epoch).state_at(epoch)
    }
}

/// Per-situation snapshot reused across many candidate-maneuver evaluations:
/// the shared scan grid and the debris states cached along it. Immutable
/// after construction, safe to share across threads.
pub struct SessionContext {
    situation: DangerousSituation,
    nominal_end_elements: OrbitalElements,
    screen: conjunction::ScreenCache,
}

impl SessionContext {
    pub fn new(situation: &DangerousSituation) -> Result<Self> {
        situation.validate()?;
        let mut situation = situation.clone();
        situation.protected.elements = situation.protected.elements.canonicalized();
        let screen = conjunction::ScreenCache::build(
            &situation.protected,
            &situation.debris,
            situation.window,
        )?;
        Ok(SessionContext {
            nominal_end_elements: propagate_elements(
                &situation.protected.elements,
                situation.window.end,
            ),
            situation,
            screen,
        })
    }

    pub fn situation(&self) -> &DangerousSituation {
        &self.situation
    }

    pub fn window(&self) -> Window {
        self.situation.window
    }

    /// Nominal (no-maneuver) protected trajectory.
    pub fn nominal_trajectory(&self) -> Trajectory {
        Trajectory {
            segments: vec![Segment {
                valid_from: f64::NEG_INFINITY,
                propagator: Propagator::new(&self.situation.protected.elements),
            }],
        }
    }

    /// Simulates the session with the given maneuvers applied to the
    /// protected object and scores the outcome.
    pub fn run(
        &self,
        maneuvers: &[Maneuver],
        reward_cfg: &RewardConfig,
        screening: &ScreeningConfig,
    ) -> Result<SessionResult> {
        let window = self.situation.window;
        for m in maneuvers {
            if !window.contains(m.epoch) {
                return Err(Error::ManeuverOutsideWindow {
                    epoch: m.epoch,
                    start: window.start,
                    end: window.end,
                });
            }
        }
        let trajectory = Trajectory::new(self.situation.protected.elements, maneuvers)?;
        let conjunctions = self.screen.screen(&trajectory, screening)?;
        let total_probability = crate::conjunction::total_collision_probability(
            &conjunctions
                .iter()
                .map(|c| c.probability)
                .collect::<Vec<_>>(),
        );
        let fuel = maneuvers.iter().map(|m| m.dv.norm()).sum();
        let end_elements = trajectory.elements_at(window.end);
        let devs = deviations(&end_elements, &self.nominal_end_elements)?;
        let reward = total_reward(total_probability, fuel, &devs, reward_cfg);
        Ok(SessionResult {
            total_probability,
            fuel,
            deviations: devs,
            conjunctions,
            reward,
        })
    }
}

/// One-shot convenience wrapper: builds a [`SessionContext`] and runs a
/// single session. Optimizer loops should build the context once instead.
pub fn run_session(
    situation: &DangerousSituation,
    maneuvers: &[Maneuver],
    reward_cfg: &RewardConfig,
    screening: &ScreeningConfig,
) -> Result<SessionResult> {
    SessionContext::new(situation)?.run(maneuvers, reward_cfg, screening)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::{MU_EARTH, SECONDS_PER_DAY};
    use crate::orbit::{self, elements_to_state};
    use approx::assert_relative_eq;

    fn sample_elements() -> OrbitalElements {
        OrbitalElements {
            a: 7.5e6,
            e: 0.01,
            i: 0.9,
            raan: 1.3,
            argp: 0.4,
            mean_anomaly: 2.0,
            epoch: 6600.0,
        }
    }

    #[test]
    fn zero_burn_is_identity() {
        let sv = elements_to_state(&sample_elements());
        let m = Maneuver {
            dv: Vector3::zeros(),
            epoch: sv.epoch,
        };
        let out = apply_maneuver(&sv, &m).unwrap();
        assert_eq!(out.position, sv.position);
        assert_eq!(out.velocity, sv.velocity);
    }

    #[test]
    fn burn_requires_matching_epoch() {
        let sv = elements_to_state(&sample_elements());
        let m = Maneuver {
            dv: Vector3::new(0.1, 0.0, 0.0),
            epoch: sv.epoch + 0.1,
        };
        assert!(matches!(
            apply_maneuver(&sv, &m),
            Err(Error::EpochMismatch { .. })
        ));
    }

    #[test]
    fn prograde_burn_raises_semi_major_axis() {
        let el = OrbitalElements {
            e: 0.0,
            ..sample_elements()
        };
        let sv = elements_to_state(&el);
        let dv = sv.velocity.normalize() * 1.0;
        let burned = apply_maneuver(
            &sv,
            &Maneuver {
                dv,
                epoch: sv.epoch,
            },
        )
        .unwrap();
        let after = state_to_elements(&burned).unwrap();
        assert!(after.a > el.a);
    }

    #[test]
    fn velocity_reversal_preserves_vis_viva() {
        let sv = elements_to_state(&sample_elements());
        let m = Maneuver {
            dv: -2.0 * sv.velocity,
            epoch: sv.epoch,
        };
        let burned = apply_maneuver(&sv, &m).unwrap();
        let after = state_to_elements(&burned).unwrap();
        // Same speed and radius: same energy, hence same a; angular momentum
        // reversed.
        assert_relative_eq!(after.a, sample_elements().a, max_relative = 1e-12);
        let h_before = sv.position.cross(&sv.velocity);
        let h_after = burned.position.cross(&burned.velocity);
        assert_relative_eq!((h_before + h_after).norm(), 0.0, epsilon = 1e-3);
    }

    #[test]
    fn deviations_zero_for_identical_inputs() {
        let el = sample_elements();
        let d = deviations(&el, &el).unwrap();
        assert_eq!(d.a, 0.0);
        assert_eq!(d.mean_anomaly, 0.0);
    }

    #[test]
    fn deviation_in_a_is_signed() {
        let nominal = sample_elements();
        let shifted = OrbitalElements {
            a: nominal.a + 44.135,
            ..nominal
        };
        let d = deviations(&shifted, &nominal).unwrap();
        assert_relative_eq!(d.a, 44.135, epsilon = 1e-9);
    }

    #[test]
    fn angular_deviation_wraps_across_zero() {
        let nominal = OrbitalElements {
            raan: 0.001,
            ..sample_elements()
        };
        let maneuvered = OrbitalElements {
            raan: TAU - 0.001,
            ..nominal
        };
        let d = deviations(&maneuvered, &nominal).unwrap();
        assert_relative_eq!(d.raan, -0.002, epsilon = 1e-12);
    }

    #[test]
    fn deviations_reject_epoch_mismatch() {
        let a = sample_elements();
        let b = OrbitalElements {
            epoch: a.epoch + 1.0,
            ..a
        };
        assert!(deviations(&b, &a).is_err());
    }

    #[test]
    fn trajectory_rejects_unsorted_maneuvers() {
        let el = sample_elements();
        let ms = [
            Maneuver {
                dv: Vector3::new(0.1, 0.0, 0.0),
                epoch: 6600.2,
            },
            Maneuver {
                dv: Vector3::new(0.1, 0.0, 0.0),
                epoch: 6600.1,
            },
        ];
        assert!(matches!(
            Trajectory::new(el, &ms),
            Err(Error::UnsortedManeuvers { .. })
        ));
    }

    #[test]
    fn trajectory_zero_dv_is_bit_identical() {
        let el = sample_elements();
        let plain = Trajectory::new(el, &[]).unwrap();
        let with_zero = Trajectory::new(
            el,
            &[Maneuver {
                dv: Vector3::zeros(),
                epoch: 6600.3,
            }],
        )
        .unwrap();
        let t = 6600.7;
        assert_eq!(plain.state_at(t).position, with_zero.state_at(t).position);
        assert_eq!(plain.state_at(t).velocity, with_zero.state_at(t).velocity);
    }

    #[test]
    fn split_impulse_superposes() {
        let el = sample_elements();
        let dv = Vector3::new(0.2, -0.1, 0.05);
        let t_burn = 6600.25;
        let whole = Trajectory::new(el, &[Maneuver { dv, epoch: t_burn }]).unwrap();
        let halves = Trajectory::new(
            el,
            &[
                Maneuver {
                    dv: dv / 2.0,
                    epoch: t_burn,
                },
                Maneuver {
                    dv: dv / 2.0,
                    epoch: t_burn,
                },
            ],
        )
        .unwrap();
        let t = 6600.9;
        let d = (whole.state_at(t).position - halves.state_at(t).position).norm();
        assert!(d < 1e-9 * whole.state_at(t).position.norm());
    }

    #[test]
    fn trajectory_queries_before_first_burn_use_initial_elements() {
        let el = sample_elements();
        let traj = Trajectory::new(
            el,
            &[Maneuver {
                dv: Vector3::new(0.5, 0.0, 0.0),
                epoch: 6600.5,
            }],
        )
        .unwrap();
        let before = traj.state_at(6600.1);
        let reference = orbit::propagate(&el, 6600.1);
        assert_eq!(before.position, reference.position);
    }

    #[test]
    fn no_maneuver_session_is_neutral() {
        // Zero maneuvers: zero fuel and exactly zero deviations, including
        // the mean anomaly (the nominal path is its own reference).
        let golden = crate::fixtures::load_golden().unwrap();
        let result = run_session(
            &golden.situation,
            &[],
            &crate::reward::RewardConfig::default(),
            &crate::conjunction::ScreeningConfig::default(),
        )
        .unwrap();
        assert_eq!(result.fuel, 0.0);
        assert_eq!(result.deviations.a, 0.0);
        assert_eq!(result.deviations.e, 0.0);
        assert_eq!(result.deviations.i, 0.0);
        assert_eq!(result.deviations.raan, 0.0);
        assert_eq!(result.deviations.argp, 0.0);
        assert_eq!(result.deviations.mean_anomaly, 0.0);
    }

    #[test]
    fn fuel_adds_over_maneuvers() {
        let golden = crate::fixtures::load_golden().unwrap();
        let m1 = Maneuver {
            dv: Vector3::new(0.03, -0.02, 0.01),
            epoch: 6600.1,
        };
        let m2 = Maneuver {
            dv: Vector3::new(-0.05, 0.0, 0.04),
            epoch: 6600.4,
        };
        let result = run_session(
            &golden.situation,
            &[m1, m2],
            &crate::reward::RewardConfig::default(),
            &crate::conjunction::ScreeningConfig::default(),
        )
        .unwrap();
        assert!((result.fuel - (m1.dv.norm() + m2.dv.norm())).abs() < 1e-15);
    }

    #[test]
    fn maneuver_outside_window_is_rejected() {
        let golden = crate::fixtures::load_golden().unwrap();
        let m = Maneuver {
            dv: Vector3::new(0.1, 0.0, 0.0),
            epoch: golden.situation.window.end + 1.0,
        };
        let err = run_session(
            &golden.situation,
            &[m],
            &crate::reward::RewardConfig::default(),
            &crate::conjunction::ScreeningConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ManeuverOutsideWindow { .. }));
    }

    #[test]
    fn in_track_burn_changes_period() {
        // Check the segment bookkeeping end to end: a prograde burn half a
        // period in shifts the later phase against the nominal path.
        let el = OrbitalElements {
            e: 0.0,
            ..sample_elements()
        };
        let t_burn = el.epoch + el.period() / 2.0 / SECONDS_PER_DAY;
        let nominal = Trajectory::new(el, &[]).unwrap();
        let state = nominal.state_at(t_burn);
        let dv = state.velocity.normalize() * 0.5;
        let burned = Trajectory::new(el, &[Maneuver { dv, epoch: t_burn }]).unwrap();
        let t_probe = t_burn + 5.0 * el.period() / SECONDS_PER_DAY;
        let gap = (burned.state_at(t_probe).position - nominal.state_at(t_probe).position).norm();
        assert!(gap > 1_000.0, "expected a visible phase drift, got {gap} m");
        let _ = MU_EARTH;
    }
}
