//! Seeded random generation of dangerous situations: a protected object on a
//! near-circular low orbit and a set of debris whose trajectories cross its
//! path at randomized epochs.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conjunction::{find_conjunctions, ScreeningConfig};
use crate::consts::{MU_EARTH, SECONDS_PER_DAY};
use crate::orbit::{propagate, state_to_elements, OrbitalElements, StateVector};
use crate::session::{DangerousSituation, SpaceObject, Window};
use crate::{Error, Result};

/// Sampling distributions for situation generation. Ranges are inclusive
/// supports of uniform draws; sigmas are one standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_debris: usize,
    /// Reference epoch t0 of the protected object, days mjd2000. The window
    /// starts here, one orbital period before the first conjunction.
    pub epoch_start: f64,
    /// Protected semi-major axis support, m.
    pub a_range: (f64, f64),
    /// Protected eccentricity support.
    pub e_range: (f64, f64),
    /// Protected radius support, m.
    pub protected_radius_range: (f64, f64),
    /// Angle between the protected and debris orbital planes, rad.
    pub plane_angle_range: (f64, f64),
    /// Per-axis sigma of the first debris position offset at conjunction, m.
    pub first_offset_sigma: f64,
    /// Per-axis sigma for every other debris, m.
    pub other_offset_sigma: f64,
    /// Sigma of the debris speed around the protected speed, m/s.
    pub speed_sigma: f64,
    /// Debris radius support, m.
    pub debris_radius_range: (f64, f64),
    /// Positional uncertainty stamped on every generated object, m.
    pub pos_sigma: f64,
    /// Window length beyond the first conjunction, seconds.
    pub horizon_seconds: f64,
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_debris: 10,
            epoch_start: 6600.0,
            a_range: (7e6, 8e6),
            e_range: (0.0, 0.003),
            protected_radius_range: (0.3, 55.0),
            plane_angle_range: (0.5, 2.64),
            first_offset_sigma: 50.0,
            other_offset_sigma: 500.0,
            speed_sigma: 0.05,
            debris_radius_range: (0.05, 1.0),
            pos_sigma: 100.0,
            horizon_seconds: 86_400.0,
            rng_seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_debris == 0 {
            return Err(Error::InvalidInput("n_debris must be at least 1".into()));
        }
        for (name, (lo, hi)) in [
            ("a_range", self.a_range),
            ("e_range", self.e_range),
            ("protected_radius_range", self.protected_radius_range),
            ("plane_angle_range", self.plane_angle_range),
            ("debris_radius_range", self.debris_radius_range),
        ] {
            if !(lo <= hi) {
                return Err(Error::InvalidInput(format!("{name} bounds inverted")));
            }
        }
        if self.first_offset_sigma < 0.0 || self.other_offset_sigma < 0.0 {
            return Err(Error::InvalidInput(
                "offset sigmas must be non-negative".into(),
            ));
        }
        if !(self.horizon_seconds > 0.0) {
            return Err(Error::InvalidInput(
                "horizon_seconds must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn normal(rng: &mut impl Rng, mean: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        mean
    } else {
        Normal::new(mean, sigma).expect("finite sigma").sample(rng)
    }
}

/// The raw random draws behind one debris object, separated out so the coin
/// and the angle can be unit-tested directly.
#[derive(Debug, Clone, Copy)]
struct DebrisDraw {
    offset: Vector3<f64>,
    plane_angle: f64,
    prograde: bool,
    radius: f64,
}

fn sample_debris_draw(is_first: bool, cfg: &GeneratorConfig, rng: &mut impl Rng) -> DebrisDraw {
    let sigma = if is_first {
        cfg.first_offset_sigma
    } else {
        cfg.other_offset_sigma
    };
    DebrisDraw {
        offset: Vector3::new(
            normal(rng, 0.0, sigma),
            normal(rng, 0.0, sigma),
            normal(rng, 0.0, sigma),
        ),
        plane_angle: uniform(rng, cfg.plane_angle_range),
        prograde: rng.random_bool(0.5),
        radius: uniform(rng, cfg.debris_radius_range),
    }
}

const SPEED_RESAMPLE_CAP: usize = 100;

/// Builds one debris object crossing the protected trajectory at the epoch of
/// `protected_state`.
///
/// The debris position is the protected position plus a Gaussian offset; its
/// orbital plane contains that position and meets the protected plane at the
/// sampled angle; its velocity is tangent to the Earth (perpendicular to the
/// position) within its own plane, with speed drawn around the protected
/// speed and a fair-coin direction sign. Unbound speed draws are rejected.
pub fn construct_debris(
    protected_state: &StateVector,
    is_first: bool,
    cfg: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<SpaceObject> {
    let draw = sample_debris_draw(is_first, cfg, rng);
    construct_debris_from_draw(protected_state, &draw, cfg, rng)
}

fn construct_debris_from_draw(
    protected_state: &StateVector,
    draw: &DebrisDraw,
    cfg: &GeneratorConfig,
    rng: &mut impl Rng,
) -> Result<SpaceObject> {
    let position = protected_state.position + draw.offset;
    let normal_dir = debris_plane_normal(protected_state, position, draw.plane_angle)?;
    let r_hat = position.normalize();
    // In-plane direction perpendicular to the radius vector ("tangent to the
    // Earth"); unit because the normal is perpendicular to r_hat.
    let tangent = normal_dir.cross(&r_hat);
    let sign = if draw.prograde { 1.0 } else { -1.0 };

    let protected_speed = protected_state.velocity.norm();
    let radius_m = position.norm();
    let escape_speed = (2.0 * MU_EARTH / radius_m).sqrt();
    let mut speed = normal(rng, protected_speed, cfg.speed_sigma);
    let mut tries = 0;
    while speed >= escape_speed || speed <= 0.0 {
        tries += 1;
        if tries > SPEED_RESAMPLE_CAP {
            return Err(Error::InvalidInput(
                "could not draw a bound debris speed".into(),
            ));
        }
        speed = normal(rng, protected_speed, cfg.speed_sigma);
    }

    let state = StateVector {
        position,
        velocity: tangent * (sign * speed),
        epoch: protected_state.epoch,
    };
    Ok(SpaceObject {
        name: String::new(),
        elements: state_to_elements(&state)?,
        radius: draw.radius,
        pos_sigma: cfg.pos_sigma,
    })
}

/// Unit normal of the debris plane: perpendicular to the debris position (so
/// the position lies in the plane) and at exactly `angle` to the protected
/// plane normal. Built by rotating the in-circle projection of the protected
/// normal about the position direction, with the rotation angle adjusted so
/// the plane angle is exact despite the position offset.
fn debris_plane_normal(
    protected_state: &StateVector,
    debris_position: Vector3<f64>,
    angle: f64,
) -> Result<Vector3<f64>> {
    let protected_normal = protected_state
        .position
        .cross(&protected_state.velocity)
        .normalize();
    let r_hat = debris_position.normalize();
    let along = protected_normal.dot(&r_hat);
    let projected = protected_normal - along * r_hat;
    let planar = projected.norm();
    if planar < 1e-12 {
        return Err(Error::DegenerateState(
            "debris position aligned with the protected plane normal".into(),
        ));
    }
    let cos_rot = angle.cos() / planar;
    if cos_rot.abs() > 1.0 {
        return Err(Error::DegenerateState(format!(
            "plane angle {angle} unreachable from this geometry"
        )));
    }
    let m_hat = projected / planar;
    let theta = cos_rot.acos();
    Ok(Rotation3::from_axis_angle(&Unit::new_normalize(debris_position), theta) * m_hat)
}

const FIRST_DEBRIS_RETRY_CAP: usize = 64;

/// Generates the situation for stream `index` of the seeded family.
///
/// The protected object is sampled at t0 = `epoch_start`; the first debris
/// crosses its path one orbital period later (the collision warning lead
/// time); the window extends `horizon_seconds` past that first conjunction;
/// every other debris crosses at an epoch uniform over the remaining window.
pub fn generate_indexed(cfg: &GeneratorConfig, index: u64) -> Result<DangerousSituation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index);

    let two_pi = std::f64::consts::TAU;
    // Angles are drawn over the full circle; the inclination branch is then
    // folded to the canonical representation of the same orbit.
    let protected = SpaceObject {
        name: "PROTECTED".to_string(),
        elements: OrbitalElements {
            a: uniform(&mut rng, cfg.a_range),
            e: uniform(&mut rng, cfg.e_range),
            i: uniform(&mut rng, (0.0, two_pi)),
            raan: uniform(&mut rng, (0.0, two_pi)),
            argp: uniform(&mut rng, (0.0, two_pi)),
            mean_anomaly: uniform(&mut rng, (0.0, two_pi)),
            epoch: cfg.epoch_start,
        }
        .canonicalized(),
        radius: uniform(&mut rng, cfg.protected_radius_range),
        pos_sigma: cfg.pos_sigma,
    };

    let period_days = protected.elements.period() / SECONDS_PER_DAY;
    let t0 = cfg.epoch_start;
    let t_first = t0 + period_days;
    let window = Window {
        start: t0,
        end: t_first + cfg.horizon_seconds / SECONDS_PER_DAY,
    };

    let mut debris = Vec::with_capacity(cfg.n_debris);
    // First debris: retried until the screening actually sees a conjunction
    // (the offset can drift the TCA in rare geometries).
    let mut placed = false;
    for _ in 0..FIRST_DEBRIS_RETRY_CAP {
        let state = propagate(&protected.elements, t_first);
        let mut first = construct_debris(&state, true, cfg, &mut rng)?;
        first.name = "DEBRIS0".to_string();
        if first_debris_conjuncts(&protected, &first, t_first, period_days)? {
            debris.push(first);
            placed = true;
            break;
        }
    }
    if !placed {
        return Err(Error::InvalidInput(
            "failed to place the first debris on a conjunction course".into(),
        ));
    }

    for k in 1..cfg.n_debris {
        let t_k = uniform(&mut rng, (t_first, window.end));
        let state = propagate(&protected.elements, t_k);
        let mut obj = construct_debris(&state, false, cfg, &mut rng)?;
        obj.name = format!("DEBRIS{k}");
        debris.push(obj);
    }

    let situation = DangerousSituation {
        window,
        protected,
        debris,
    };
    situation.validate()?;
    Ok(situation)
}

/// Checks that the freshly placed first debris produces a screened
/// conjunction near its construction epoch.
fn first_debris_conjuncts(
    protected: &SpaceObject,
    first: &SpaceObject,
    t_first: f64,
    period_days: f64,
) -> Result<bool> {
    let slice = Window {
        start: t_first - period_days / 4.0,
        end: t_first + period_days / 4.0,
    };
    let found = find_conjunctions(
        protected,
        &[],
        std::slice::from_ref(first),
        slice,
        &ScreeningConfig::default(),
    )?;
    Ok(!found.is_empty())
}

/// Generates the situation of stream 0.
pub fn generate_situation(cfg: &GeneratorConfig) -> Result<DangerousSituation> {
    generate_indexed(cfg, 0)
}

/// Generates `count` situations on independent seeded streams (0..count).
pub fn generate_situations(cfg: &GeneratorConfig, count: usize) -> Result<Vec<DangerousSituation>> {
    (0..count as u64)
        .map(|i| generate_indexed(cfg, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = GeneratorConfig {
            n_debris: 4,
            rng_seed: 9,
            ..Default::default()
        };
        let a = generate_situation(&cfg).unwrap();
        let b = generate_situation(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_indexed(&cfg, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_parameters_stay_in_their_supports() {
        let cfg = GeneratorConfig {
            n_debris: 3,
            rng_seed: 4,
            ..Default::default()
        };
        for index in 0..200 {
            let s = generate_indexed(&cfg, index).unwrap();
            let p = &s.protected.elements;
            assert!(p.a >= cfg.a_range.0 && p.a < cfg.a_range.1);
            assert!(p.e >= cfg.e_range.0 && p.e < cfg.e_range.1);
            assert!(
                s.protected.radius >= cfg.protected_radius_range.0
                    && s.protected.radius < cfg.protected_radius_range.1
            );
            for d in &s.debris {
                assert!(d.radius >= cfg.debris_radius_range.0);
                assert!(d.radius < cfg.debris_radius_range.1);
                assert!(d.elements.e < 1.0);
            }
            // Window shape: one protected period of lead time plus a day.
            let period_days = p.period() / SECONDS_PER_DAY;
            assert_relative_eq!(
                s.window.end - s.window.start,
                period_days + 1.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn debris_plane_angle_is_exact() {
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let protected = OrbitalElements {
            a: 7.4e6,
            e: 0.002,
            i: 0.9,
            raan: 1.0,
            argp: 0.3,
            mean_anomaly: 1.7,
            epoch: 6600.0,
        };
        let state = propagate(&protected, 6600.1);
        let protected_normal = state.position.cross(&state.velocity).normalize();
        for _ in 0..200 {
            let draw = sample_debris_draw(false, &cfg, &mut rng);
            let debris = construct_debris_from_draw(&state, &draw, &cfg, &mut rng).unwrap();
            let dsv = crate::orbit::elements_to_state(&debris.elements);
            let debris_normal = dsv.position.cross(&dsv.velocity).normalize();
            let mut angle = debris_normal.dot(&protected_normal).clamp(-1.0, 1.0).acos();
            // The velocity sign flips the recovered normal.
            if (angle - draw.plane_angle).abs() > 1e-6 {
                angle = std::f64::consts::PI - angle;
            }
            assert!(
                (angle - draw.plane_angle).abs() < 1e-9,
                "angle {angle} vs drawn {}",
                draw.plane_angle
            );
        }
    }

    #[test]
    fn debris_velocity_is_tangent_to_earth() {
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let protected = OrbitalElements {
            a: 7.6e6,
            e: 0.001,
            i: 0.4,
            raan: 2.0,
            argp: 5.1,
            mean_anomaly: 0.2,
            epoch: 6600.0,
        };
        let state = propagate(&protected, 6600.2);
        for _ in 0..100 {
            let debris = construct_debris(&state, false, &cfg, &mut rng).unwrap();
            let dsv = crate::orbit::elements_to_state(&debris.elements);
            let cosine = dsv.position.normalize().dot(&dsv.velocity.normalize());
            assert!(cosine.abs() < 1e-9, "radial velocity component: {cosine}");
        }
    }

    #[test]
    fn debris_position_lies_in_its_plane() {
        // By construction the plane normal is perpendicular to the debris
        // position at the conjunction epoch.
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let protected = OrbitalElements {
            a: 7.2e6,
            e: 0.0025,
            i: 1.2,
            raan: 0.4,
            argp: 2.2,
            mean_anomaly: 4.0,
            epoch: 6600.0,
        };
        let state = propagate(&protected, 6600.15);
        for _ in 0..100 {
            let draw = sample_debris_draw(true, &cfg, &mut rng);
            let normal_dir =
                debris_plane_normal(&state, state.position + draw.offset, draw.plane_angle)
                    .unwrap();
            let r_hat = (state.position + draw.offset).normalize();
            assert!(normal_dir.dot(&r_hat).abs() < 1e-12);
            assert_relative_eq!(normal_dir.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn speed_sign_coin_is_fair() {
        let cfg = GeneratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut prograde = 0usize;
        let n = 1000;
        for _ in 0..n {
            if sample_debris_draw(false, &cfg, &mut rng).prograde {
                prograde += 1;
            }
        }
        let frequency = prograde as f64 / n as f64;
        assert!((frequency - 0.5).abs() < 0.05, "frequency {frequency}");
    }

    #[test]
    fn first_debris_offsets_match_the_spread() {
        // Kolmogorov-Smirnov test of the per-axis offset against N(0, 50) at
        // the 1% level; the offsets are recovered by comparing the debris
        // state at its construction epoch with the protected state.
        let cfg = GeneratorConfig {
            n_debris: 1,
            rng_seed: 77,
            ..Default::default()
        };
        let mut offsets: Vec<f64> = Vec::new();
        for index in 0..350 {
            let s = generate_indexed(&cfg, index).unwrap();
            let period_days = s.protected.elements.period() / SECONDS_PER_DAY;
            let t_first = s.window.start + period_days;
            let p = propagate(&s.protected.elements, t_first);
            let d = propagate(&s.debris[0].elements, t_first);
            let delta = d.position - p.position;
            offsets.extend_from_slice(&[delta.x, delta.y, delta.z]);
        }
        use statrs::distribution::{ContinuousCDF, Normal};
        let reference = Normal::new(0.0, cfg.first_offset_sigma).unwrap();
        let mut sorted = offsets.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let mut ks = 0.0f64;
        for (i, x) in sorted.iter().enumerate() {
            let cdf = reference.cdf(*x);
            let upper = (i as f64 + 1.0) / n - cdf;
            let lower = cdf - i as f64 / n;
            ks = ks.max(upper.max(lower));
        }
        // 1% critical value for the two-sided KS statistic.
        let critical = 1.63 / n.sqrt();
        assert!(ks < critical, "KS statistic {ks} over critical {critical}");
    }

    #[test]
    fn every_situation_has_a_first_conjunction() {
        let cfg = GeneratorConfig {
            n_debris: 2,
            rng_seed: 5,
            ..Default::default()
        };
        for index in 0..40 {
            let s = generate_indexed(&cfg, index).unwrap();
            let found = crate::conjunction::screen_situation(
                &s,
                &[],
                &crate::conjunction::ScreeningConfig::default(),
            )
            .unwrap();
            assert!(
                found.iter().any(|c| c.debris_name == "DEBRIS0"),
                "no first-debris conjunction in stream {index}"
            );
            // Distinct passes only: per-debris conjunctions are separated by
            // at least a tenth of the protected period.
            let min_gap = s.protected.elements.period() / SECONDS_PER_DAY / 10.0;
            for d in &s.debris {
                let epochs: Vec<f64> = found
                    .iter()
                    .filter(|c| c.debris_name == d.name)
                    .map(|c| c.epoch)
                    .collect();
                for pair in epochs.windows(2) {
                    assert!(pair[1] - pair[0] >= min_gap, "{}: {:?}", d.name, epochs);
                }
            }
        }
    }

    #[test]
    fn exact_overlay_fixture_has_sub_meter_miss() {
        // With zero offset spread the first debris passes exactly through a
        // propagated protected position.
        let cfg = GeneratorConfig {
            n_debris: 1,
            first_offset_sigma: 0.0,
            rng_seed: 3,
            ..Default::default()
        };
        let s = generate_situation(&cfg).unwrap();
        let period_days = s.protected.elements.period() / SECONDS_PER_DAY;
        let t_first = s.window.start + period_days;
        let found = crate::conjunction::screen_situation(
            &s,
            &[],
            &crate::conjunction::ScreeningConfig::default(),
        )
        .unwrap();
        let hit = found
            .iter()
            .find(|c| (c.epoch - t_first).abs() < 1e-6)
            .expect("conjunction at the construction epoch");
        assert!(hit.miss_distance < 1.0, "miss {}", hit.miss_distance);
    }
}
