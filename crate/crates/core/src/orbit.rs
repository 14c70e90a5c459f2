//! Two-body orbital mechanics: Kepler's equation, element/state conversions,
//! propagation, and the local orbital frame.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::consts::{MU_EARTH, SECONDS_PER_DAY};
use crate::{Error, Result};

/// Osculating Keplerian elements at a reference epoch.
///
/// Angles are radians; `a` is meters; `epoch` is days (mjd2000). The anomaly
/// is the mean anomaly and may be stored outside [0, 2pi) — consumers reduce
/// it modulo 2pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    /// Semi-major axis, m.
    pub a: f64,
    /// Eccentricity (0 <= e < 1 for the orbits handled here).
    pub e: f64,
    /// Inclination, rad.
    pub i: f64,
    /// Longitude of the ascending node, rad.
    pub raan: f64,
    /// Argument of periapsis, rad.
    pub argp: f64,
    /// Mean anomaly, rad.
    pub mean_anomaly: f64,
    /// Reference epoch, days mjd2000.
    pub epoch: f64,
}

impl OrbitalElements {
    /// Checks the type invariants: positive semi-major axis, elliptic
    /// eccentricity, finite angles and epoch.
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "semi-major axis must be positive and finite, got {}",
                self.a
            )));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::InvalidInput(format!(
                "eccentricity must satisfy 0 <= e < 1, got {}",
                self.e
            )));
        }
        for (name, v) in [
            ("i", self.i),
            ("raan", self.raan),
            ("argp", self.argp),
            ("mean_anomaly", self.mean_anomaly),
            ("epoch", self.epoch),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Mean motion n = sqrt(mu / a^3), rad/s.
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.a.powi(3)).sqrt()
    }

    /// Folds the representation to the canonical inclination branch
    /// i in [0, pi], the one `state_to_elements` produces.
    ///
    /// An element set with i in (pi, 2 pi) describes the same orbit as
    /// (2 pi - i) with the node and periapsis arguments advanced by pi
    /// (exact identity Rx(i) = Rz(pi) Rx(2 pi - i) Rz(pi)); comparing raw
    /// against recovered elements without folding would report a fictitious
    /// plane flip. Elements already on the canonical branch are returned
    /// unchanged, bit for bit.
    pub fn canonicalized(&self) -> OrbitalElements {
        let wrapped = self.i.rem_euclid(TAU);
        if wrapped <= PI {
            if wrapped == self.i {
                *self
            } else {
                OrbitalElements {
                    i: wrapped,
                    ..*self
                }
            }
        } else {
            OrbitalElements {
                i: TAU - wrapped,
                raan: (self.raan + PI).rem_euclid(TAU),
                argp: (self.argp + PI).rem_euclid(TAU),
                ..*self
            }
        }
    }

    /// Orbital period, seconds.
    pub fn period(&self) -> f64 {
        orbital_period(self.a)
    }
}

/// Cartesian state in the inertial Earth-centered frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Position, m.
    pub position: Vector3<f64>,
    /// Velocity, m/s.
    pub velocity: Vector3<f64>,
    /// Epoch, days mjd2000.
    pub epoch: f64,
}

impl StateVector {
    /// Specific orbital energy v^2/2 - mu/r, J/kg. Negative for bound orbits.
    pub fn specific_energy(&self) -> f64 {
        0.5 * self.velocity.norm_squared() - MU_EARTH / self.position.norm()
    }
}

/// Orbital period T = 2 pi sqrt(a^3 / mu), seconds.
pub fn orbital_period(a: f64) -> f64 {
    TAU * (a.powi(3) / MU_EARTH).sqrt()
}

const KEPLER_RESIDUAL: f64 = 1e-12;
// Stop once the Newton step is this small; quadratic convergence leaves the
// root accurate to machine precision, well inside the residual contract.
const KEPLER_STEP_TOLERANCE: f64 = 1e-13;
const KEPLER_MAX_ITER: usize = 50;

/// Solves Kepler's equation E - e sin E = M for the eccentric anomaly.
///
/// Newton iteration seeded with M for e < 0.8 and pi otherwise; the result
/// lies in the same 2pi-branch as the input mean anomaly and satisfies the
/// equation to 1e-12 rad.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidInput(format!(
            "eccentricity must satisfy 0 <= e < 1, got {e}"
        )));
    }
    // Reduce to [-pi, pi) and remember the branch; Kepler's equation is odd
    // in (M, E), so solve on [0, pi] and mirror.
    let branch = ((mean_anomaly + PI) / TAU).floor();
    let m_reduced = mean_anomaly - branch * TAU;
    let (m_abs, mirrored) = if m_reduced < 0.0 {
        (-m_reduced, true)
    } else {
        (m_reduced, false)
    };

    let mut ecc_anom = if e < 0.8 { m_abs } else { PI };
    let mut converged = false;
    for _ in 0..KEPLER_MAX_ITER {
        let (sin_e, cos_e) = ecc_anom.sin_cos();
        let f = ecc_anom - e * sin_e - m_abs;
        let step = f / (1.0 - e * cos_e);
        ecc_anom -= step;
        if step.abs() <= KEPLER_STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged || (ecc_anom - e * ecc_anom.sin() - m_abs).abs() > KEPLER_RESIDUAL {
        return Err(Error::KeplerNoConvergence {
            mean_anomaly,
            eccentricity: e,
        });
    }
    let signed = if mirrored { -ecc_anom } else { ecc_anom };
    Ok(signed + branch * TAU)
}

/// Rotation from the perifocal frame to the inertial frame: Rz(raan) Rx(i) Rz(argp).
fn perifocal_rotation(raan: f64, inclination: f64, argp: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), raan)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), inclination)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), argp)
}

/// A two-body propagator with the per-orbit constants (perifocal rotation,
/// mean motion) computed once; state queries in screening loops hit this
/// path millions of times.
#[derive(Debug, Clone)]
pub struct Propagator {
    elements: OrbitalElements,
    rotation: Rotation3<f64>,
    mean_motion: f64,
    ome2_sqrt: f64,
    speed_scale: f64,
}

impl Propagator {
    pub fn new(elements: &OrbitalElements) -> Self {
        Propagator {
            elements: *elements,
            rotation: perifocal_rotation(elements.raan, elements.i, elements.argp),
            mean_motion: elements.mean_motion(),
            ome2_sqrt: (1.0 - elements.e * elements.e).sqrt(),
            speed_scale: (MU_EARTH * elements.a).sqrt(),
        }
    }

    pub fn elements(&self) -> &OrbitalElements {
        &self.elements
    }

    /// Osculating elements advanced to `epoch`.
    pub fn elements_at(&self, epoch: f64) -> OrbitalElements {
        let dt_seconds = (epoch - self.elements.epoch) * SECONDS_PER_DAY;
        OrbitalElements {
            mean_anomaly: self.elements.mean_anomaly + self.mean_motion * dt_seconds,
            epoch,
            ..self.elements
        }
    }

    /// Cartesian state at `epoch`.
    pub fn state_at(&self, epoch: f64) -> StateVector {
        let el = &self.elements;
        let dt_seconds = (epoch - el.epoch) * SECONDS_PER_DAY;
        let mean_anomaly = el.mean_anomaly + self.mean_motion * dt_seconds;
        let ecc_anom = solve_kepler(mean_anomaly, el.e)
            .expect("Kepler iteration converges for validated elements (e < 1)");
        let (sin_e, cos_e) = ecc_anom.sin_cos();
        let radius = el.a * (1.0 - el.e * cos_e);

        // Perifocal coordinates: x toward periapsis, z along angular momentum.
        let pos_pf = Vector3::new(el.a * (cos_e - el.e), el.a * self.ome2_sqrt * sin_e, 0.0);
        let speed_factor = self.speed_scale / radius;
        let vel_pf = Vector3::new(
            -speed_factor * sin_e,
            speed_factor * self.ome2_sqrt * cos_e,
            0.0,
        );
        StateVector {
            position: self.rotation * pos_pf,
            velocity: self.rotation * vel_pf,
            epoch,
        }
    }
}

/// Converts osculating elements to a Cartesian state at the same epoch.
///
/// Panics on elements violating [`OrbitalElements::validate`]; validated
/// inputs cannot fail.
pub fn elements_to_state(el: &OrbitalElements) -> StateVector {
    Propagator::new(el).state_at(el.epoch)
}

/// Threshold below which eccentricity / inclination are treated as exactly
/// degenerate and the conventional angles are zeroed.
const DEGENERACY_EPS: f64 = 1e-11;

fn wrap_two_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped == TAU {
        0.0
    } else {
        wrapped
    }
}

/// Recovers osculating elements from a Cartesian state.
///
/// Angle conventions for degenerate orbits: for e below 1e-11 the argument of
/// periapsis is set to 0 and the anomaly is measured from the node; for
/// inclination below 1e-11 the node is placed on the x-axis (raan = 0).
pub fn state_to_elements(sv: &StateVector) -> Result<OrbitalElements> {
    let r = sv.position;
    let v = sv.velocity;
    let rm = r.norm();
    if rm == 0.0 {
        return Err(Error::DegenerateState("position at origin".into()));
    }
    let energy = 0.5 * v.norm_squared() - MU_EARTH / rm;
    if energy >= 0.0 {
        return Err(Error::UnboundOrbit { energy });
    }
    let a = -MU_EARTH / (2.0 * energy);

    let h = r.cross(&v);
    let hm = h.norm();
    if hm < 1e-9 * rm * v.norm().max(1.0) {
        return Err(Error::DegenerateState(
            "angular momentum vanishes (position parallel to velocity)".into(),
        ));
    }
    let h_unit = h / hm;

    let ecc_vec = v.cross(&h) / MU_EARTH - r / rm;
    let e = ecc_vec.norm();
    if e >= 1.0 {
        return Err(Error::UnboundOrbit { energy });
    }

    let inclination = (h.z / hm).clamp(-1.0, 1.0).acos();

    // Node direction: z-hat x h, or the x-axis for equatorial orbits.
    let node = Vector3::new(-h.y, h.x, 0.0);
    let (raan, node_unit) = if inclination < DEGENERACY_EPS || node.norm() == 0.0 {
        (0.0, Vector3::x())
    } else {
        (wrap_two_pi(node.y.atan2(node.x)), node.normalize())
    };
    let in_plane = h_unit.cross(&node_unit);

    let (argp, true_anomaly) = if e < DEGENERACY_EPS {
        // Circular: measure the anomaly from the node.
        let u = r.dot(&in_plane).atan2(r.dot(&node_unit));
        (0.0, u)
    } else {
        let e_unit = ecc_vec / e;
        let argp = ecc_vec.dot(&in_plane).atan2(ecc_vec.dot(&node_unit));
        let e_cross = h_unit.cross(&e_unit);
        let nu = r.dot(&e_cross).atan2(r.dot(&e_unit));
        (wrap_two_pi(argp), nu)
    };

    // True anomaly -> eccentric -> mean.
    let ecc_anom = ((1.0 - e * e).sqrt() * true_anomaly.sin()).atan2(e + true_anomaly.cos());
    let mean_anomaly = wrap_two_pi(ecc_anom - e * ecc_anom.sin());

    Ok(OrbitalElements {
        a,
        e,
        i: inclination,
        raan,
        argp,
        mean_anomaly,
        epoch: sv.epoch,
    })
}

/// Advances the mean anomaly to `to_epoch`; all other elements are constants
/// of two-body motion.
pub fn propagate_elements(el: &OrbitalElements, to_epoch: f64) -> OrbitalElements {
    let dt_seconds = (to_epoch - el.epoch) * SECONDS_PER_DAY;
    OrbitalElements {
        mean_anomaly: el.mean_anomaly + el.mean_motion() * dt_seconds,
        epoch: to_epoch,
        ..*el
    }
}

/// Two-body propagation: the state at `to_epoch` (backward propagation is
/// allowed).
pub fn propagate(el: &OrbitalElements, to_epoch: f64) -> StateVector {
    Propagator::new(el).state_at(to_epoch)
}

/// Right-handed local orbital basis evaluated from a state.
#[derive(Debug, Clone, Copy)]
pub struct OrbitFrame {
    /// Unit vector along the velocity.
    pub in_track: Vector3<f64>,
    /// In-plane unit vector perpendicular to the velocity, pointing away from
    /// the central body.
    pub radial_in_plane: Vector3<f64>,
    /// Unit vector along the orbital angular momentum.
    pub cross_track: Vector3<f64>,
}

/// Builds the {in-track, radial-in-plane, cross-track} basis at a state.
///
/// Errors if the velocity vanishes or position and velocity are parallel
/// (impossible for the bound e < 1 orbits this crate produces, guarded
/// anyway).
pub fn orbit_frame(sv: &StateVector) -> Result<OrbitFrame> {
    let vm = sv.velocity.norm();
    if vm == 0.0 {
        return Err(Error::DegenerateState(
            "zero velocity has no in-track direction".into(),
        ));
    }
    let h = sv.position.cross(&sv.velocity);
    let hm = h.norm();
    if hm < 1e-12 * sv.position.norm() * vm {
        return Err(Error::DegenerateState(
            "position parallel to velocity: orbital plane undefined".into(),
        ));
    }
    let in_track = sv.velocity / vm;
    let cross_track = h / hm;
    Ok(OrbitFrame {
        in_track,
        radial_in_plane: in_track.cross(&cross_track),
        cross_track,
    })
}
