//! Association-field interaction kernels between two oriented segments.
//!
//! `J` (excitation) is large when two segments lie on a common smooth path and
//! `W` (inhibition) is large when they are misaligned. Both are an angular
//! term times the distance decay `exp(-d / sigma)`.

use crate::error::{Error, Result};
use crate::math;
use crate::segment::EdgeSegment;

/// Learned association-field parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub a1: f64,
    pub a2: f64,
    /// Distance decay scale in pixels.
    pub sigma: f64,
}

impl FieldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::InvalidParams("a1 and a2 must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParams("sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Axial orientation in `[0, π)` of the line through both segment positions.
///
/// Uses image coordinates (rows grow downwards), so `(0,0) -> (3,3)` is π/4.
pub fn connecting_orientation(i: &EdgeSegment, j: &EdgeSegment) -> Result<f64> {
    if i.x == j.x && i.y == j.y {
        return Err(Error::CoincidentPositions(i.x, i.y));
    }
    let dx = j.x as f64 - i.x as f64;
    let dy = j.y as f64 - i.y as f64;
    Ok(math::fold_axial(math::atan2(dy, dx)))
}

/// Angular excitation `A_exc`.
pub fn angular_excitation(i: &EdgeSegment, j: &EdgeSegment, params: &FieldParams) -> Result<f64> {
    let oij = connecting_orientation(i, j)?;
    Ok(excitation_from_angles(i.o, j.o, oij, params))
}

/// Angular inhibition `A_inh`.
pub fn angular_inhibition(i: &EdgeSegment, j: &EdgeSegment, params: &FieldParams) -> Result<f64> {
    let oij = connecting_orientation(i, j)?;
    Ok(inhibition_from_angles(i.o, j.o, oij, params))
}

pub(crate) fn excitation_from_angles(oi: f64, oj: f64, oij: f64, p: &FieldParams) -> f64 {
    let end = math::cos(oi - oij).abs().min(math::cos(oj - oij).abs());
    let par = math::cos(oi - oj).abs();
    math::exp(p.a1 * end + p.a2 * par)
}

pub(crate) fn inhibition_from_angles(oi: f64, oj: f64, oij: f64, p: &FieldParams) -> f64 {
    let side = math::sin(oi - oij).abs().max(math::sin(oj - oij).abs());
    let cross = math::sin(oi - oj).abs();
    math::exp(p.a1 * side + p.a2 * cross)
}

/// `exp(-d / scale)` with Euclidean `d`.
pub fn distance_decay(i: &EdgeSegment, j: &EdgeSegment, scale: f64) -> f64 {
    math::exp(-i.distance(j) / scale)
}

/// Excitation `J(i, j) = A_exc(i, j) * A_d(i, j)`.
pub fn excitation(i: &EdgeSegment, j: &EdgeSegment, params: &FieldParams) -> Result<f64> {
    Ok(angular_excitation(i, j, params)? * distance_decay(i, j, params.sigma))
}

/// Inhibition `W(i, j) = A_inh(i, j) * A_d(i, j)`.
pub fn inhibition(i: &EdgeSegment, j: &EdgeSegment, params: &FieldParams) -> Result<f64> {
    Ok(angular_inhibition(i, j, params)? * distance_decay(i, j, params.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use proptest::prelude::*;

    const E: f64 = core::f64::consts::E;

    fn unit() -> FieldParams {
        FieldParams {
            a1: 1.0,
            a2: 1.0,
            sigma: 1.0,
        }
    }

    // Independent scalar route: |cos| and |sin| of angle differences via dot
    // and cross products of unit vectors.
    fn oracle(i: &EdgeSegment, j: &EdgeSegment, p: &FieldParams) -> (f64, f64, f64) {
        let v = |a: f64| (a.cos(), a.sin());
        let dot = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 + a.1 * b.1).abs();
        let cross = |a: (f64, f64), b: (f64, f64)| (a.0 * b.1 - a.1 * b.0).abs();
        let (dx, dy) = (j.x as f64 - i.x as f64, j.y as f64 - i.y as f64);
        let d = (dx * dx + dy * dy).sqrt();
        let c = (dx / d, dy / d);
        let (ui, uj) = (v(i.o), v(j.o));
        let exc = (p.a1 * dot(ui, c).min(dot(uj, c)) + p.a2 * dot(ui, uj)).exp();
        let inh = (p.a1 * cross(ui, c).max(cross(uj, c)) + p.a2 * cross(ui, uj)).exp();
        (exc, inh, (-d / p.sigma).exp())
    }

    #[test]
    fn connecting_orientation_cases() {
        let o = EdgeSegment::new(0, 0, 1.0, 0.0);
        let h = connecting_orientation(&o, &EdgeSegment::new(5, 0, 1.0, 0.0)).unwrap();
        let v = connecting_orientation(&o, &EdgeSegment::new(0, 5, 1.0, 0.0)).unwrap();
        let d = connecting_orientation(&o, &EdgeSegment::new(3, 3, 1.0, 0.0)).unwrap();
        assert_eq!(h, 0.0);
        assert!((v - PI / 2.0).abs() < 1e-15);
        assert!((d - PI / 4.0).abs() < 1e-15);
        // Direction-free: reversed pair gives the same axial angle.
        let back = connecting_orientation(&EdgeSegment::new(3, 3, 1.0, 0.0), &o).unwrap();
        assert!((back - d).abs() < 1e-15);
        assert!(matches!(
            connecting_orientation(&o, &o),
            Err(Error::CoincidentPositions(..))
        ));
    }

    #[test]
    fn collinear_and_flanking_values() {
        let i = EdgeSegment::new(0, 0, 1.0, 0.0);
        let j = EdgeSegment::new(4, 0, 1.0, 0.0);
        assert!((angular_excitation(&i, &j, &unit()).unwrap() - E * E).abs() < 1e-12);
        assert!((angular_inhibition(&i, &j, &unit()).unwrap() - 1.0).abs() < 1e-12);

        // Parallel segments stacked perpendicular to their orientation.
        let i = EdgeSegment::new(0, 0, 1.0, PI / 2.0);
        let j = EdgeSegment::new(4, 0, 1.0, PI / 2.0);
        assert!((angular_excitation(&i, &j, &unit()).unwrap() - E).abs() < 1e-12);
        assert!((angular_inhibition(&i, &j, &unit()).unwrap() - E).abs() < 1e-12);
    }

    #[test]
    fn distance_decay_values() {
        let i = EdgeSegment::new(0, 0, 1.0, 0.0);
        assert_eq!(distance_decay(&i, &i, 2.0), 1.0);
        let j = EdgeSegment::new(3, 0, 1.0, 0.0);
        assert!((distance_decay(&i, &j, 3.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((distance_decay(&i, &j, 1.5) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn perpendicular_arrangement_inhibition() {
        // o_i along the connecting line, o_j perpendicular to it.
        let p = FieldParams {
            a1: 0.7,
            a2: 1.3,
            sigma: 2.5,
        };
        let i = EdgeSegment::new(0, 0, 1.0, 0.0);
        let j = EdgeSegment::new(3, 0, 1.0, PI / 2.0);
        let w = inhibition(&i, &j, &p).unwrap();
        assert!((w - (p.a1 + p.a2).exp() * (-3.0 / p.sigma).exp()).abs() < 1e-12);
    }

    #[test]
    fn excitation_decays_with_distance() {
        let p = unit();
        let i = EdgeSegment::new(0, 0, 1.0, 0.3);
        let mut last = f64::INFINITY;
        for d in 1..40 {
            let j = EdgeSegment::new(d, 0, 1.0, 0.3);
            let jv = excitation(&i, &j, &p).unwrap();
            assert!(jv < last);
            last = jv;
        }
        assert!(last < 1e-15);
    }

    fn arb_pair() -> impl Strategy<Value = (EdgeSegment, EdgeSegment)> {
        (0u32..30, 0u32..30, 0.0..PI, 0u32..30, 0u32..30, 0.0..PI)
            .prop_filter("distinct", |(x1, y1, _, x2, y2, _)| (x1, y1) != (x2, y2))
            .prop_map(|(x1, y1, o1, x2, y2, o2)| {
                (EdgeSegment::new(x1, y1, 1.0, o1), EdgeSegment::new(x2, y2, 1.0, o2))
            })
    }

    fn arb_params() -> impl Strategy<Value = FieldParams> {
        (0.0..5.0f64, 0.0..5.0f64, 0.5..10.0f64).prop_map(|(a1, a2, sigma)| FieldParams {
            a1,
            a2,
            sigma,
        })
    }

    proptest! {
        #[test]
        fn matches_independent_evaluation((i, j) in arb_pair(), p in arb_params()) {
            let (exc, inh, dec) = oracle(&i, &j, &p);
            let got_exc = angular_excitation(&i, &j, &p).unwrap();
            let got_inh = angular_inhibition(&i, &j, &p).unwrap();
            prop_assert!((got_exc - exc).abs() <= 1e-9 * exc);
            prop_assert!((got_inh - inh).abs() <= 1e-9 * inh);
            prop_assert!((distance_decay(&i, &j, p.sigma) - dec).abs() <= 1e-12);
            // J and W are exactly the component products.
            prop_assert_eq!(excitation(&i, &j, &p).unwrap(), got_exc * distance_decay(&i, &j, p.sigma));
            prop_assert_eq!(inhibition(&i, &j, &p).unwrap(), got_inh * distance_decay(&i, &j, p.sigma));
        }

        #[test]
        fn symmetric_positive_axial((i, j) in arb_pair(), p in arb_params()) {
            let jij = excitation(&i, &j, &p).unwrap();
            let wij = inhibition(&i, &j, &p).unwrap();
            prop_assert!(jij > 0.0 && wij > 0.0);
            prop_assert!((jij - excitation(&j, &i, &p).unwrap()).abs() <= 1e-12 * jij);
            prop_assert!((wij - inhibition(&j, &i, &p).unwrap()).abs() <= 1e-12 * wij);
            let flipped = EdgeSegment { o: i.o + PI, ..i };
            prop_assert!((jij - excitation(&flipped, &j, &p).unwrap()).abs() <= 1e-9 * jij);
            prop_assert!((wij - inhibition(&flipped, &j, &p).unwrap()).abs() <= 1e-9 * wij);
        }

        #[test]
        fn collinear_maximizes_excitation((i, j) in arb_pair(), p in arb_params()) {
            let oij = connecting_orientation(&i, &j).unwrap();
            let best = (p.a1 + p.a2).exp();
            let aligned = excitation_from_angles(oij, oij, oij, &p);
            prop_assert!((aligned - best).abs() <= 1e-12 * best);
            prop_assert!(angular_excitation(&i, &j, &p).unwrap() <= best * (1.0 + 1e-12));
        }
    }
}
