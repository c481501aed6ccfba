//! Unary and pairwise CRF energies over a segment field.
//!
//! The unary probability of the "off" label is a convex combination of two
//! logistics, one in the descriptor strength and one in the net surround
//! modulation `omega1 * Exi - omega2 * Inh`:
//!
//! ```text
//! p_i(0) = alpha / (1 + exp(lambda * f_i + omega0))
//!        + (1 - alpha) / (1 + exp(omega1 * Exi_i - omega2 * Inh_i))
//! ```
//!
//! Energies are negative log-probabilities. Pairwise terms are Ising costs
//! `beta * mu(i, j)` paid when neighbours disagree; each unordered pair of
//! blanket neighbours contributes once.

use alloc::vec::Vec;

use crate::association::{self, FieldParams};
use crate::error::{Error, Result};
use crate::math;
use crate::segment::{self, EdgeSegment, SegmentField};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-12;

/// All model parameters: learned energy scalars and the structural `n`, `th0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub field: FieldParams,
    /// Weight of the descriptor logistic, in `[0, 1]`.
    pub alpha: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub beta: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Markov blanket window size (odd).
    pub n: usize,
    /// Extraction threshold on the soft map.
    pub th0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            field: FieldParams {
                a1: 2.0,
                a2: 1.0,
                sigma: 3.0,
            },
            alpha: 0.5,
            lambda: 10.0,
            omega0: -3.0,
            omega1: 1.0,
            omega2: 1.0,
            beta: 0.5,
            sigma1: 3.0,
            sigma2: 0.5,
            n: 5,
            th0: 0.1,
        }
    }
}

impl ModelParams {
    /// Parameters under which every extracted segment keeps label 1, so the
    /// pipeline output is exactly the thresholded map at `th0`.
    pub fn thresholding_equivalent(th0: f64) -> Self {
        ModelParams {
            alpha: 1.0,
            lambda: 20.0,
            omega0: 0.0,
            beta: 0.0,
            th0,
            ..ModelParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        let finite = [
            self.alpha,
            self.lambda,
            self.omega0,
            self.omega1,
            self.omega2,
            self.beta,
            self.sigma1,
            self.sigma2,
            self.th0,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams("alpha must lie in [0, 1]".into()));
        }
        if self.omega1 < 0.0 || self.omega2 < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidParams(
                "omega1, omega2 and beta must be non-negative".into(),
            ));
        }
        if self.sigma1 <= 0.0 || self.sigma2 <= 0.0 {
            return Err(Error::InvalidParams("sigma1 and sigma2 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.th0) {
            return Err(Error::InvalidParams("th0 must lie in [0, 1]".into()));
        }
        segment::check_window(self.n)
    }
}

fn sums(field: &SegmentField, i: usize, params: &ModelParams) -> Result<(f64, f64)> {
    let center = *field.segment(i)?;
    segment::check_window(params.n)?;
    let segs = field.segments();
    let (mut exi, mut inh) = (0.0, 0.0);
    let mut failure = None;
    field.for_each_in_window(&center, params.n, |j| {
        if j == i || failure.is_some() {
            return;
        }
        let other = &segs[j];
        match association::connecting_orientation(&center, other) {
            Ok(oij) => {
                let decay = association::distance_decay(&center, other, params.field.sigma);
                exi += other.f
                    * association::excitation_from_angles(center.o, other.o, oij, &params.field)
                    * decay;
                inh += other.f
                    * association::inhibition_from_angles(center.o, other.o, oij, &params.field)
                    * decay;
            }
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((exi, inh)),
    }
}

/// `Exi_i = sum_{j in N_i} f_j J(i, j)`.
pub fn excitation_sum(field: &SegmentField, i: usize, params: &ModelParams) -> Result<f64> {
    sums(field, i, params).map(|(e, _)| e)
}

/// `Inh_i = sum_{j in N_i} f_j W(i, j)`.
pub fn inhibition_sum(field: &SegmentField, i: usize, params: &ModelParams) -> Result<f64> {
    sums(field, i, params).map(|(_, w)| w)
}

/// `1 / (1 + exp(t))`, stable for large `|t|`.
fn falling_logistic(t: f64) -> f64 {
    if t > 0.0 {
        let e = math::exp(-t);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + math::exp(t))
    }
}

/// `p_i(0)` from the descriptor and the two surround sums, clamped.
pub fn probability_zero_from_sums(f: f64, exi: f64, inh: f64, params: &ModelParams) -> f64 {
    let strength = falling_logistic(params.lambda * f + params.omega0);
    let context = falling_logistic(params.omega1 * exi - params.omega2 * inh);
    let p = params.alpha * strength + (1.0 - params.alpha) * context;
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Probability that segment `i` takes label 0.
pub fn unary_probability_zero(field: &SegmentField, i: usize, params: &ModelParams) -> Result<f64> {
    let (exi, inh) = sums(field, i, params)?;
    Ok(probability_zero_from_sums(field.segments()[i].f, exi, inh, params))
}

/// `(-ln p, -ln (1 - p))` for a clamped `p = p_i(0)`.
pub fn energies_from_probability(p0: f64) -> [f64; 2] {
    [-math::ln(p0), -math::ln_1p(-p0)]
}

/// `(eps_i(0), eps_i(1))`.
pub fn unary_energies(field: &SegmentField, i: usize, params: &ModelParams) -> Result<[f64; 2]> {
    unary_probability_zero(field, i, params).map(energies_from_probability)
}

/// Pairwise modulation `mu(i, j) = A_exc * exp(-d / sigma1) * exp(-|f_j - f_i| / sigma2)`.
pub fn pairwise_mu(i: &EdgeSegment, j: &EdgeSegment, params: &ModelParams) -> Result<f64> {
    let exc = association::angular_excitation(i, j, &params.field)?;
    Ok(exc * association::distance_decay(i, j, params.sigma1) * math::exp(-(j.f - i.f).abs() / params.sigma2))
}

/// Ising energy: zero for equal labels, `beta * mu` otherwise.
pub fn pairwise_energy(
    i: &EdgeSegment,
    j: &EdgeSegment,
    xi: bool,
    xj: bool,
    params: &ModelParams,
) -> Result<f64> {
    if xi == xj {
        Ok(0.0)
    } else {
        Ok(params.beta * pairwise_mu(i, j, params)?)
    }
}

/// Cost paid when segments `i < j` take different labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub cost: f64,
}

/// Precomputed energies for one image, reusable across inferences.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfInstance {
    unary: Vec<[f64; 2]>,
    pairs: Vec<PairTerm>,
}

impl CrfInstance {
    /// Evaluates every unary pair and every blanket pair of `field`.
    pub fn build(field: &SegmentField, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if field.is_empty() {
            return Err(Error::EmptyField);
        }
        let segs = field.segments();
        let mut unary = Vec::with_capacity(segs.len());
        let mut pairs = Vec::new();
        let mut members = Vec::new();
        for (i, si) in segs.iter().enumerate() {
            let (exi, inh) = sums(field, i, params)?;
            unary.push(energies_from_probability(probability_zero_from_sums(
                si.f, exi, inh, params,
            )));
            members.clear();
            field.for_each_in_window(si, params.n, |j| {
                if j > i {
                    members.push(j);
                }
            });
            members.sort_unstable();
            for &j in &members {
                let cost = params.beta * pairwise_mu(si, &segs[j], params)?;
                pairs.push(PairTerm { i, j, cost });
            }
        }
        Ok(CrfInstance { unary, pairs })
    }

    /// Assembles an instance from raw energies.
    ///
    /// Pair costs may have any sign here, so arbitrary (including
    /// non-submodular) energies can be fed to the solver and its guard.
    pub fn from_parts(unary: Vec<[f64; 2]>, pairs: Vec<PairTerm>) -> Result<Self> {
        if unary.is_empty() {
            return Err(Error::EmptyField);
        }
        if unary.iter().flatten().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParams("unary energies must be finite".into()));
        }
        for p in &pairs {
            if p.i >= p.j || p.j >= unary.len() || !p.cost.is_finite() {
                return Err(Error::InvalidParams(alloc::format!(
                    "invalid pair term ({}, {}, {})",
                    p.i,
                    p.j,
                    p.cost
                )));
            }
        }
        Ok(CrfInstance { unary, pairs })
    }

    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    pub fn unary(&self) -> &[[f64; 2]] {
        &self.unary
    }

    pub fn pairs(&self) -> &[PairTerm] {
        &self.pairs
    }

    /// Sum of unary energies plus each disagreeing pair's cost, counted once.
    pub fn total_energy(&self, labels: &[bool]) -> Result<f64> {
        if labels.len() != self.unary.len() {
            return Err(Error::LabelLength {
                expected: self.unary.len(),
                got: labels.len(),
            });
        }
        let unary: f64 = self
            .unary
            .iter()
            .zip(labels)
            .map(|(e, &x)| e[x as usize])
            .sum();
        let pairwise: f64 = self
            .pairs
            .iter()
            .filter(|p| labels[p.i] != labels[p.j])
            .map(|p| p.cost)
            .sum();
        Ok(unary + pairwise)
    }

    /// `sum_i min(eps_i(0), eps_i(1))`, the part of the energy no cut can remove.
    pub fn unary_floor(&self) -> f64 {
        self.unary.iter().map(|e| e[0].min(e[1])).sum()
    }

    /// Checks `e(0,0) + e(1,1) <= e(0,1) + e(1,0)` for every pair term.
    pub fn submodularity_check(&self) -> Result<()> {
        match self.pairs.iter().find(|p| !(p.cost >= 0.0)) {
            Some(p) => Err(Error::NotSubmodular {
                i: p.i,
                j: p.j,
                cost: p.cost,
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const E: f64 = core::f64::consts::E;

    fn params_with(f: impl FnOnce(&mut ModelParams)) -> ModelParams {
        let mut p = ModelParams::default();
        f(&mut p);
        p
    }

    pub(crate) fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
        ModelParams {
            field: FieldParams {
                a1: rng.gen_range(0.0..5.0),
                a2: rng.gen_range(0.0..5.0),
                sigma: rng.gen_range(0.5..10.0),
            },
            alpha: rng.gen_range(0.0..=1.0),
            lambda: rng.gen_range(-20.0..20.0),
            omega0: rng.gen_range(-10.0..10.0),
            omega1: rng.gen_range(0.0..10.0),
            omega2: rng.gen_range(0.0..10.0),
            beta: rng.gen_range(0.0..5.0),
            sigma1: rng.gen_range(0.5..10.0),
            sigma2: rng.gen_range(0.05..2.0),
            n: [3, 5, 7, 9, 11][rng.gen_range(0..5)],
            th0: rng.gen_range(0.05..0.6),
        }
    }

    pub(crate) fn random_field(rng: &mut ChaCha8Rng, w: u32, h: u32, count: usize) -> SegmentField {
        let mut taken = BTreeSet::new();
        let mut segs = Vec::new();
        while segs.len() < count {
            let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
            if taken.insert((x, y)) {
                segs.push(EdgeSegment::new(x, y, rng.gen(), rng.gen_range(0.0..PI)));
            }
        }
        SegmentField::new(w, h, segs).unwrap()
    }

    // Independent re-derivations used as oracles below.
    fn oracle_j(i: &EdgeSegment, j: &EdgeSegment, p: &FieldParams) -> (f64, f64) {
        let (dx, dy) = (j.x as f64 - i.x as f64, j.y as f64 - i.y as f64);
        let d = dx.hypot(dy);
        let c = (dx / d, dy / d);
        let (ui, uj) = ((i.o.cos(), i.o.sin()), (j.o.cos(), j.o.sin()));
        let dot = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 + a.1 * b.1).abs();
        let crs = |a: (f64, f64), b: (f64, f64)| (a.0 * b.1 - a.1 * b.0).abs();
        let exc = (p.a1 * dot(ui, c).min(dot(uj, c)) + p.a2 * dot(ui, uj)).exp();
        let inh = (p.a1 * crs(ui, c).max(crs(uj, c)) + p.a2 * crs(ui, uj)).exp();
        let decay = (-d / p.sigma).exp();
        (exc * decay, inh * decay)
    }

    fn oracle_sums(field: &SegmentField, i: usize, p: &ModelParams) -> (f64, f64) {
        let segs = field.segments();
        let r = (p.n / 2) as i64;
        let (mut e, mut w) = (0.0, 0.0);
        for (j, sj) in segs.iter().enumerate() {
            let near = (sj.x as i64 - segs[i].x as i64).abs() <= r
                && (sj.y as i64 - segs[i].y as i64).abs() <= r;
            if j != i && near {
                let (jv, wv) = oracle_j(&segs[i], sj, &p.field);
                e += sj.f * jv;
                w += sj.f * wv;
            }
        }
        (e, w)
    }

    fn oracle_mu(i: &EdgeSegment, j: &EdgeSegment, p: &ModelParams) -> f64 {
        let (dx, dy) = (j.x as f64 - i.x as f64, j.y as f64 - i.y as f64);
        let d = dx.hypot(dy);
        let sigma_free = FieldParams { sigma: f64::INFINITY, ..p.field };
        let (exc, _) = oracle_j(i, j, &sigma_free);
        exc * (-d / p.sigma1).exp() * (-(j.f - i.f).abs() / p.sigma2).exp()
    }

    /// Slow double loop over blankets, each unordered pair once.
    fn oracle_energy(field: &SegmentField, p: &ModelParams, labels: &[bool]) -> f64 {
        let segs = field.segments();
        let mut total = 0.0;
        for i in 0..segs.len() {
            let (e, w) = oracle_sums(field, i, p);
            let a = 1.0 / (1.0 + (p.lambda * segs[i].f + p.omega0).exp());
            let b = 1.0 / (1.0 + (p.omega1 * e - p.omega2 * w).exp());
            let p0 = (p.alpha * a + (1.0 - p.alpha) * b).clamp(1e-12, 1.0 - 1e-12);
            total += if labels[i] { -(1.0 - p0).ln() } else { -p0.ln() };
        }
        let r = (p.n / 2) as i64;
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                let near = (segs[j].x as i64 - segs[i].x as i64).abs() <= r
                    && (segs[j].y as i64 - segs[i].y as i64).abs() <= r;
                if near && labels[i] != labels[j] {
                    total += p.beta * oracle_mu(&segs[i], &segs[j], p);
                }
            }
        }
        total
    }

    #[test]
    fn isolated_segment_has_zero_sums() {
        let field = SegmentField::new(10, 10, vec![EdgeSegment::new(5, 5, 1.0, 0.0)]).unwrap();
        let p = ModelParams::default();
        assert_eq!(excitation_sum(&field, 0, &p).unwrap(), 0.0);
        assert_eq!(inhibition_sum(&field, 0, &p).unwrap(), 0.0);
    }

    #[test]
    fn single_collinear_neighbour() {
        let field = SegmentField::new(
            10,
            10,
            vec![EdgeSegment::new(2, 5, 1.0, 0.0), EdgeSegment::new(4, 5, 1.0, 0.0)],
        )
        .unwrap();
        let p = params_with(|p| {
            p.field = FieldParams {
                a1: 1.0,
                a2: 1.0,
                sigma: 2.0,
            };
            p.n = 5;
        });
        // e^2 * e^-1
        assert!((excitation_sum(&field, 0, &p).unwrap() - E).abs() < 1e-12);
        assert!((inhibition_sum(&field, 0, &p).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn single_perpendicular_flanker() {
        // Flanker stacked above, both horizontal: connecting line is vertical.
        let field = SegmentField::new(
            10,
            10,
            vec![EdgeSegment::new(5, 5, 1.0, 0.0), EdgeSegment::new(5, 3, 0.5, 0.0)],
        )
        .unwrap();
        let p = params_with(|p| {
            p.field = FieldParams {
                a1: 1.0,
                a2: 1.0,
                sigma: 2.0,
            };
        });
        // max-sin = 1, sin(0) = 0 -> e^1; times f_j = 0.5 and e^-1.
        assert!((inhibition_sum(&field, 0, &p).unwrap() - 0.5).abs() < 1e-12);
        // min-cos = 0, |cos 0| = 1 -> e^1; same scaling.
        assert!((excitation_sum(&field, 0, &p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probability_reference_points() {
        let p = params_with(|p| {
            p.alpha = 1.0;
            p.lambda = 2.0;
            p.omega0 = -1.0;
        });
        assert_eq!(probability_zero_from_sums(0.5, 3.0, 0.0, &p), 0.5);
        let p = params_with(|p| p.alpha = 0.0);
        assert_eq!(probability_zero_from_sums(0.9, 0.0, 0.0, &p), 0.5);
        let p = params_with(|p| {
            p.alpha = 0.5;
            p.lambda = 2.0;
            p.omega0 = -1.0;
            p.omega1 = 1.0;
            p.omega2 = 1.0;
        });
        let p0 = probability_zero_from_sums(1.0, 2.0, 1.0, &p);
        assert!((p0 - 1.0 / (1.0 + E)).abs() < 1e-15);
        assert!((p0 - 0.26894).abs() < 1e-5);
    }

    #[test]
    fn energies_reference_points() {
        let [e0, e1] = energies_from_probability(0.5);
        assert!((e0 - 2f64.ln()).abs() < 1e-15 && (e1 - 2f64.ln()).abs() < 1e-15);
        let [e0, e1] = energies_from_probability(1.0 / (1.0 + E));
        assert!((e0 - 1.3133).abs() < 1e-4);
        assert!((e1 - 0.3133).abs() < 1e-4);
        assert!((e0 - (1.0 + E).ln()).abs() < 1e-12);
    }

    #[test]
    fn probability_is_clamped() {
        let p = params_with(|p| {
            p.alpha = 1.0;
            p.lambda = -1000.0;
        });
        let p0 = probability_zero_from_sums(1.0, 0.0, 0.0, &p);
        assert_eq!(p0, 1.0 - PROB_FLOOR);
        let [e0, e1] = energies_from_probability(p0);
        assert!(e0.is_finite() && e1.is_finite());
    }

    #[test]
    fn mu_hand_case() {
        let p = params_with(|p| {
            p.field.a1 = 1.0;
            p.field.a2 = 1.0;
            p.sigma1 = 3.0;
        });
        let i = EdgeSegment::new(0, 0, 0.7, 0.0);
        let j = EdgeSegment::new(3, 0, 0.7, 0.0);
        assert!((pairwise_mu(&i, &j, &p).unwrap() - E).abs() < 1e-12);
        // A large descriptor gap with a tiny sigma2 drives mu to zero.
        let tight = params_with(|p| p.sigma2 = 1e-3);
        let k = EdgeSegment::new(3, 0, 0.0, 0.0);
        let l = EdgeSegment::new(0, 0, 1.0, 0.0);
        let mu = pairwise_mu(&l, &k, &tight).unwrap();
        assert!(mu >= 0.0 && mu < 1e-300);
        assert!(matches!(pairwise_mu(&i, &i, &p), Err(Error::CoincidentPositions(..))));
    }

    #[test]
    fn pairwise_energy_cases() {
        let p = params_with(|p| p.beta = 2.0);
        let i = EdgeSegment::new(0, 0, 0.2, 0.4);
        let j = EdgeSegment::new(2, 1, 0.9, 1.4);
        assert_eq!(pairwise_energy(&i, &j, true, true, &p).unwrap(), 0.0);
        assert_eq!(pairwise_energy(&i, &j, false, false, &p).unwrap(), 0.0);
        let mu = pairwise_mu(&i, &j, &p).unwrap();
        assert_eq!(pairwise_energy(&i, &j, true, false, &p).unwrap(), 2.0 * mu);
        assert!(
            (pairwise_energy(&i, &j, false, true, &p).unwrap()
                - pairwise_energy(&j, &i, true, false, &p).unwrap())
            .abs()
                < 1e-12
        );
        // With mu = 0.5 and beta = 2 the cost is exactly 1.
        let inst = CrfInstance::from_parts(
            vec![[0.0, 0.0], [0.0, 0.0]],
            vec![PairTerm { i: 0, j: 1, cost: 2.0 * 0.5 }],
        )
        .unwrap();
        assert_eq!(inst.total_energy(&[true, false]).unwrap(), 1.0);
    }

    #[test]
    fn build_instance_shapes() {
        let p = ModelParams::default();
        let one = SegmentField::new(5, 5, vec![EdgeSegment::new(2, 2, 1.0, 0.0)]).unwrap();
        let inst = CrfInstance::build(&one, &p).unwrap();
        assert_eq!((inst.len(), inst.pairs().len()), (1, 0));

        let three = SegmentField::new(
            9,
            9,
            vec![
                EdgeSegment::new(3, 4, 1.0, 0.0),
                EdgeSegment::new(4, 4, 1.0, 0.0),
                EdgeSegment::new(5, 4, 1.0, 0.0),
            ],
        )
        .unwrap();
        let inst = CrfInstance::build(&three, &p).unwrap();
        assert_eq!((inst.len(), inst.pairs().len()), (3, 3));

        assert_eq!(
            CrfInstance::build(&SegmentField::empty(4, 4), &p),
            Err(Error::EmptyField)
        );
        let bad = params_with(|p| p.n = 4);
        assert_eq!(CrfInstance::build(&one, &bad), Err(Error::InvalidWindow(4)));
    }

    #[test]
    fn cached_values_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let field = random_field(&mut rng, 30, 30, 60);
            let p = random_params(&mut rng);
            let inst = CrfInstance::build(&field, &p).unwrap();
            for i in 0..field.len() {
                let (e, w) = oracle_sums(&field, i, &p);
                let got_e = excitation_sum(&field, i, &p).unwrap();
                let got_w = inhibition_sum(&field, i, &p).unwrap();
                assert!((got_e - e).abs() <= 1e-9 * (1.0 + e));
                assert!((got_w - w).abs() <= 1e-9 * (1.0 + w));
                assert_eq!(inst.unary()[i], unary_energies(&field, i, &p).unwrap());
            }
            let segs = field.segments();
            let mut expected = BTreeSet::new();
            for i in 0..segs.len() {
                for j in field.markov_blanket(i, p.n).unwrap().members {
                    expected.insert((i.min(j), i.max(j)));
                }
            }
            let got: BTreeSet<_> = inst.pairs().iter().map(|t| (t.i, t.j)).collect();
            assert_eq!(got, expected);
            assert_eq!(got.len(), inst.pairs().len());
            for t in inst.pairs() {
                let mu = oracle_mu(&segs[t.i], &segs[t.j], &p);
                assert!((t.cost - p.beta * mu).abs() <= 1e-9 * (1.0 + t.cost));
                assert!(t.cost >= 0.0);
            }
        }
    }

    #[test]
    fn total_energy_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let count = rng.gen_range(1..=50);
            let field = random_field(&mut rng, 16, 16, count);
            let p = random_params(&mut rng);
            let inst = CrfInstance::build(&field, &p).unwrap();
            let labels: Vec<bool> = (0..count).map(|_| rng.gen()).collect();
            let got = inst.total_energy(&labels).unwrap();
            let want = oracle_energy(&field, &p, &labels);
            assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn total_energy_edge_cases() {
        let inst = CrfInstance::from_parts(
            vec![[1.0, 2.0], [0.5, 0.25]],
            vec![PairTerm { i: 0, j: 1, cost: 3.0 }],
        )
        .unwrap();
        assert_eq!(inst.total_energy(&[false, false]).unwrap(), 1.5);
        assert_eq!(inst.total_energy(&[true, true]).unwrap(), 2.25);
        assert_eq!(inst.total_energy(&[false, true]).unwrap(), 1.0 + 0.25 + 3.0);
        assert_eq!(
            inst.total_energy(&[true]),
            Err(Error::LabelLength {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn submodularity_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let field = random_field(&mut rng, 20, 20, 30);
            let inst = CrfInstance::build(&field, &random_params(&mut rng)).unwrap();
            assert_eq!(inst.submodularity_check(), Ok(()));
        }
        let bad = CrfInstance::from_parts(
            vec![[0.0, 0.0]; 3],
            vec![
                PairTerm { i: 0, j: 1, cost: 1.0 },
                PairTerm { i: 1, j: 2, cost: -0.5 },
            ],
        )
        .unwrap();
        assert_eq!(
            bad.submodularity_check(),
            Err(Error::NotSubmodular {
                i: 1,
                j: 2,
                cost: -0.5
            })
        );
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(params_with(|p| p.alpha = 1.5).validate().is_err());
        assert!(params_with(|p| p.omega2 = -1.0).validate().is_err());
        assert!(params_with(|p| p.sigma2 = 0.0).validate().is_err());
        assert!(params_with(|p| p.field.sigma = -1.0).validate().is_err());
        assert!(params_with(|p| p.n = 6).validate().is_err());
        assert!(params_with(|p| p.th0 = 1.2).validate().is_err());
        // lambda and omega0 are unconstrained.
        assert!(params_with(|p| {
            p.lambda = -50.0;
            p.omega0 = 50.0
        })
        .validate()
        .is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unary_normalization(f in 0.0..=1.0f64, exi in 0.0..1e3f64, inh in 0.0..1e3f64, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_params(&mut rng);
                let [e0, e1] = energies_from_probability(probability_zero_from_sums(f, exi, inh, &p));
                prop_assert!(((-e0).exp() + (-e1).exp() - 1.0).abs() <= 1e-12);
            }

            #[test]
            fn descriptor_monotonicity(f1 in 0.0..=1.0f64, f2 in 0.0..=1.0f64, lambda in 0.01..20.0f64, omega0 in -10.0..10.0f64) {
                let p = params_with(|p| { p.alpha = 1.0; p.lambda = lambda; p.omega0 = omega0; });
                let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
                let a = energies_from_probability(probability_zero_from_sums(lo, 0.0, 0.0, &p));
                let b = energies_from_probability(probability_zero_from_sums(hi, 0.0, 0.0, &p));
                prop_assert!(a[0] <= b[0]);
                prop_assert!(a[1] >= b[1]);
            }

            #[test]
            fn excitation_monotonicity(e1 in 0.0..50.0f64, e2 in 0.0..50.0f64, inh in 0.0..50.0f64, omega1 in 0.01..10.0f64) {
                let p = params_with(|p| { p.alpha = 0.0; p.omega1 = omega1; });
                let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
                let a = energies_from_probability(probability_zero_from_sums(0.5, lo, inh, &p));
                let b = energies_from_probability(probability_zero_from_sums(0.5, hi, inh, &p));
                prop_assert!(a[0] <= b[0]);
            }
        }
    }
}
