//! Monodromy transport: continue the closed instanton cycle along loops in
//! complexified moduli space around the critical values, dragging the
//! contour so no special point ever crosses it, and classify the jump the
//! action acquires.

use crate::contour::{branch_value_at, instanton_geometry, walk_route, Piece, Route};
use crate::error::{Error, Result};
use crate::surface::{branch_points, disc, is_critical, Moduli, Sheet, SheetPoint};
use num_complex::Complex64;
use std::f64::consts::PI;

type C64 = Complex64;

/// Which critical value the loop encircles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    /// lambda -> lambda e^{2 pi i} around lambda = 0 (condition b)
    Lambda,
    /// (sqrt(lambda*) - sqrt(lambda)) winds once: condition d, "minus" point
    OneMinusSqrtLambda,
    /// winding around -sqrt(lambda*): condition d, "plus" point
    OnePlusSqrtLambda,
    /// epsilon -> epsilon e^{2 pi i} around epsilon = 0 (condition a)
    Epsilon,
    /// the combination rho = sqrt(1-h^2-eps) sqrt(1-lambda) - h sqrt(lambda)
    /// winds once around 0: the condition-d monodromy in the alternative
    /// grouping, whose jump carries the finite-field coefficient
    /// 2 (1 - h/sqrt(1-lambda)). Requires h > 0 and a base close enough to
    /// critical that no secondary zero is enclosed (rho_0 < 2 h sqrt(1-h^2)).
    CriticalDCombination,
}

/// A closed loop in moduli space.
#[derive(Debug, Clone, Copy)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub base: Moduli,
    pub steps: usize,
}

impl LoopSpec {
    pub fn new(kind: LoopKind, base: Moduli, steps: usize) -> LoopSpec {
        LoopSpec { kind, steps: steps.max(64), base }
    }

    /// The critical point of sqrt(lambda) for condition d at the base (h, eps).
    fn sqrt_lambda_star(&self) -> C64 {
        let one = C64::new(1.0, 0.0);
        ((one - self.base.h * self.base.h - self.base.epsilon) / (one - self.base.epsilon)).sqrt()
    }

    /// Moduli at loop parameter t in [0, 1].
    pub fn moduli_at(&self, t: f64) -> Moduli {
        let phase = C64::new(0.0, 2.0 * PI * t).exp();
        match self.kind {
            LoopKind::Lambda => Moduli::new(self.base.lambda * phase, self.base.h, self.base.epsilon),
            LoopKind::Epsilon => Moduli::new(self.base.lambda, self.base.h, self.base.epsilon * phase),
            LoopKind::OneMinusSqrtLambda => {
                let sls = self.sqrt_lambda_star();
                let sl0 = self.base.lambda.sqrt();
                let sl = sls + (sl0 - sls) * phase;
                Moduli::new(sl * sl, self.base.h, self.base.epsilon)
            }
            LoopKind::OnePlusSqrtLambda => {
                let sls = self.sqrt_lambda_star();
                let sl0 = self.base.lambda.sqrt();
                let sl = -sls + (sl0 + sls) * phase;
                Moduli::new(sl * sl, self.base.h, self.base.epsilon)
            }
            LoopKind::CriticalDCombination => {
                let one = C64::new(1.0, 0.0);
                let h = self.base.h;
                let beta2 = one - h * h - self.base.epsilon;
                let beta = beta2.sqrt();
                let rho0 = beta * (one - self.base.lambda).sqrt() - h * self.base.lambda.sqrt();
                let rho = rho0 * phase;
                // sqrt(lambda) from rho: u = (-h rho + beta sqrt(h^2+beta^2-rho^2))/(h^2+beta^2)
                let denom = h * h + beta2;
                let u = (-h * rho + beta * (denom - rho * rho).sqrt()) / denom;
                Moduli::new(u * u, self.base.h, self.base.epsilon)
            }
        }
    }

    /// Check the loop encloses exactly its own critical value and never
    /// touches the critical set along the way.
    pub fn validate(&self) -> Result<()> {
        let b = &self.base;
        let one = C64::new(1.0, 0.0);
        match self.kind {
            LoopKind::Lambda => {
                let lam_star = (one - b.h * b.h - b.epsilon) / (one - b.epsilon);
                if b.lambda.norm() >= lam_star.norm() {
                    return Err(Error::BadLoop(
                        "lambda loop would also enclose the condition-d value".into(),
                    ));
                }
            }
            LoopKind::Epsilon => {
                if b.epsilon.norm() == 0.0 {
                    return Err(Error::BadLoop("epsilon loop needs epsilon != 0".into()));
                }
                let one_m = (one - b.lambda).norm();
                let eps_star = ((one - b.lambda - b.h * b.h) / (one - b.lambda)).norm();
                if one_m > 0.0 && b.epsilon.norm() >= eps_star {
                    return Err(Error::BadLoop(
                        "epsilon loop would also enclose the condition-d value".into(),
                    ));
                }
            }
            LoopKind::OneMinusSqrtLambda => {
                let sls = self.sqrt_lambda_star();
                let sl0 = b.lambda.sqrt();
                let radius = (sl0 - sls).norm();
                // must not reach sqrt(lambda) = 0 (condition b) or the twin point
                if radius >= sls.norm() {
                    return Err(Error::BadLoop(
                        "condition-d loop would also enclose lambda = 0".into(),
                    ));
                }
                if radius >= (2.0 * sls).norm() {
                    return Err(Error::BadLoop(
                        "condition-d loop would also enclose the opposite critical point".into(),
                    ));
                }
            }
            LoopKind::OnePlusSqrtLambda => {
                // the sqrt(lambda)-plane circle around -sqrt(lambda*) necessarily
                // passes sqrt(lambda) = 0; lambda itself stays away from zero,
                // which is all the surface needs. Only the twin point matters.
                let sls = self.sqrt_lambda_star();
                let sl0 = b.lambda.sqrt();
                if (sl0 + sls).norm() >= (2.0 * sls).norm() {
                    return Err(Error::BadLoop(
                        "condition-d loop would also enclose the opposite critical point".into(),
                    ));
                }
            }
            LoopKind::CriticalDCombination => {
                let one = C64::new(1.0, 0.0);
                if b.h.norm() < 1e-9 {
                    return Err(Error::BadLoop(
                        "the combination loop needs h > 0 (at h = 0 use one_minus_sqrt_lambda)".into(),
                    ));
                }
                let beta = (one - b.h * b.h - b.epsilon).sqrt();
                let rho0 = (beta * (one - b.lambda).sqrt() - b.h * b.lambda.sqrt()).norm();
                let rho_second = (2.0 * b.h * beta).norm();
                if rho0 >= rho_second {
                    return Err(Error::BadLoop(format!(
                        "combination loop encloses a secondary zero: rho_0 = {rho0:.4} >= 2 h beta = {rho_second:.4}; move the base closer to the critical field"
                    )));
                }
            }
        }
        // no critical touch along the way (epsilon = 0 bases are themselves on
        // condition a, which the transported cycle never feels: skip it)
        for k in 0..=32 {
            let m = self.moduli_at(k as f64 / 32.0);
            if let Some(cond) = is_critical(&m) {
                if cond != crate::error::CriticalCondition::EpsilonZero {
                    return Err(Error::BadLoop(format!(
                        "loop touches the critical set at t = {}: condition {}",
                        k as f64 / 32.0,
                        cond.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How the transported action changed after a full loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpClass {
    SignFlip,
    Plus4PiI,
    Minus4PiI,
    SignFlipMinus2Scl,
    LogEpsilon,
    Unrecognized,
}

#[derive(Debug, Clone, Copy)]
pub struct MonodromyResult {
    pub value_before: C64,
    pub value_after: C64,
    pub jump: C64,
    pub classification: JumpClass,
}

/// Predicted additive jump 2 pi i x (logarithm coefficient) for the loop,
/// from the logarithmic structure of the closed-form action. For the
/// lambda loop the full transformation is value -> -value + jump.
pub fn predicted_jump(spec: &LoopSpec, m: &Moduli) -> C64 {
    let one = C64::new(1.0, 0.0);
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let c_eps = m.epsilon * m.lambda.sqrt() / (one - m.h * m.h).sqrt();
    match spec.kind {
        LoopKind::Epsilon => -two_pi_i * c_eps,
        LoopKind::Lambda => two_pi_i * c_eps,
        // the sqrt(lambda)-circle winds the inner-residue logarithm once and
        // the eps ln eps argument once; the q_+- residue logarithm does not
        // wind on this loop (its argument sweeps back), so the jump carries
        // no h-dependence here.
        LoopKind::OneMinusSqrtLambda => two_pi_i * (C64::new(2.0, 0.0) - c_eps),
        LoopKind::OnePlusSqrtLambda => -two_pi_i * (C64::new(2.0, 0.0) + c_eps),
        // the combination loop winds the q_+- logarithm too: the printed
        // finite-field coefficient
        LoopKind::CriticalDCombination => {
            let coef = C64::new(2.0, 0.0) * (one - m.h / (one - m.lambda).sqrt()) - c_eps;
            two_pi_i * coef
        }
    }
}

const R_CLEAR: f64 = 0.05;
const MAX_SEG: f64 = 0.12;
const ADVANCE_SUBSTEPS: usize = 3;

/// Deformable transport contour: the closed instanton cycle with its legs
/// held as explicit waypoint chains that get dragged by the moving special
/// points.
struct TransportContour {
    q_far: f64,
    eta: f64,
    degenerate: bool,
    tp_plus: C64,
    tp_minus: C64,
    /// legs: (-Q -> B), (B -> -Q), (Q -> A), (A -> Q)
    legs: [Vec<C64>; 4],
    prev_specials: Vec<C64>,
}

fn resample(chain: &[C64]) -> Vec<C64> {
    let mut out = vec![chain[0]];
    for k in 1..chain.len() {
        let a = chain[k - 1];
        let b = chain[k];
        let d = (b - a).norm();
        if d > MAX_SEG {
            let n = (d / MAX_SEG).ceil() as usize;
            for i in 1..n {
                out.push(a + (b - a) * (i as f64 / n as f64));
            }
        }
        out.push(b);
    }
    // drop waypoints that became nearly coincident
    let mut dedup = vec![out[0]];
    for w in out.into_iter().skip(1) {
        if (w - dedup.last().unwrap()).norm() > 1e-4 * MAX_SEG {
            dedup.push(w);
        }
    }
    dedup
}

impl TransportContour {
    fn new(m: &Moduli) -> Result<TransportContour> {
        let g = instanton_geometry(m)?;
        let q_far = C64::new(g.q_far, 0.0);
        let (a_pt, b_pt) = if g.degenerate {
            (C64::new(g.eta, 0.0), C64::new(-g.eta, 0.0))
        } else {
            let d = g.tp_plus / g.tp_plus.norm();
            (g.tp_plus + d * g.eta, g.tp_minus - d * g.eta)
        };
        let legs = [
            resample(&[-q_far, b_pt]),
            resample(&[b_pt, -q_far]),
            resample(&[q_far, a_pt]),
            resample(&[a_pt, q_far]),
        ];
        Ok(TransportContour {
            q_far: g.q_far,
            eta: g.eta,
            degenerate: g.degenerate,
            tp_plus: g.tp_plus,
            tp_minus: g.tp_minus,
            legs,
            prev_specials: Vec::new(),
        })
    }

    /// Move structural anchors to the new turning points, drag leg interiors
    /// away from approaching special points, re-resample.
    fn advance(&mut self, m: &Moduli) -> Result<()> {
        let bp = branch_points(m)?;
        let one = C64::new(1.0, 0.0);
        let qp = C64::new(0.0, 1.0) / (one - m.lambda).sqrt();
        // track the turning points continuously
        let (new_plus, new_minus) = if self.degenerate {
            (self.tp_plus, self.tp_minus)
        } else {
            let cand = [bp.inner, -bp.inner];
            let np = if (cand[0] - self.tp_plus).norm() <= (cand[1] - self.tp_plus).norm() {
                cand[0]
            } else {
                cand[1]
            };
            (np, -np)
        };
        let (a_new, b_new) = if self.degenerate {
            (C64::new(self.eta, 0.0), C64::new(-self.eta, 0.0))
        } else {
            let d = new_plus / new_plus.norm();
            (new_plus + d * self.eta, new_minus - d * self.eta)
        };
        // shift leg endpoints affinely
        let ends = [
            (C64::new(-self.q_far, 0.0), b_new),
            (b_new, C64::new(-self.q_far, 0.0)),
            (C64::new(self.q_far, 0.0), a_new),
            (a_new, C64::new(self.q_far, 0.0)),
        ];
        let specials: Vec<C64> = vec![
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            qp,
            -qp,
            bp.outer,
            -bp.outer,
            new_plus,
            new_minus,
        ];
        for (leg, (p_new, q_new)) in self.legs.iter_mut().zip(ends) {
            let n = leg.len();
            let p_old = leg[0];
            let q_old = leg[n - 1];
            let mut total = 0.0;
            let chord: Vec<f64> = {
                let mut acc = vec![0.0];
                for k in 1..n {
                    total += (leg[k] - leg[k - 1]).norm();
                    acc.push(total);
                }
                acc.iter().map(|c| if total > 0.0 { c / total } else { 0.0 }).collect()
            };
            for k in 0..n {
                let t = chord[k];
                leg[k] += (p_new - p_old) * (1.0 - t) + (q_new - q_old) * t;
            }
            // repulsion, skipping structural endpoints
            for _pass in 0..2 {
                for k in 1..(n - 1) {
                    let tangent = {
                        let d = leg[k + 1] - leg[k - 1];
                        if d.norm() > 0.0 {
                            d / d.norm()
                        } else {
                            C64::new(1.0, 0.0)
                        }
                    };
                    let normal = C64::new(0.0, 1.0) * tangent;
                    for (idx, z) in specials.iter().enumerate() {
                        // the turning points anchor the hairpins: legs keep
                        // only a soft clearance from them
                        let own = (z - leg[0]).norm() < 4.0 * self.eta
                            || (z - leg[n - 1]).norm() < 4.0 * self.eta;
                        if own {
                            continue;
                        }
                        let d = leg[k] - z;
                        if d.norm() >= R_CLEAR {
                            continue;
                        }
                        let dn = (d.conj() * normal).re;
                        let side = if dn.abs() > 1e-4 {
                            dn.signum()
                        } else {
                            // head-on: step to the side the point is leaving
                            let vel = if self.prev_specials.len() == specials.len() {
                                z - self.prev_specials[idx]
                            } else {
                                C64::new(0.0, 0.0)
                            };
                            let vn = (vel.conj() * normal).re;
                            if vn.abs() > 0.0 {
                                -vn.signum()
                            } else {
                                1.0
                            }
                        };
                        leg[k] = z + d - normal * dn + normal * (side * R_CLEAR);
                    }
                }
            }
            *leg = resample(leg);
            // segment-level pass: a special point can sit close to a segment
            // between two comfortably-cleared waypoints; split there and push
            // the new waypoint out
            for _pass in 0..3 {
                let mut changed = false;
                let mut out: Vec<C64> = vec![leg[0]];
                for k in 1..leg.len() {
                    let a = leg[k - 1];
                    let b = leg[k];
                    for (idx, z) in specials.iter().enumerate() {
                        let own = (z - leg[0]).norm() < 4.0 * self.eta
                            || (z - leg[leg.len() - 1]).norm() < 4.0 * self.eta;
                        if own {
                            continue;
                        }
                        let (d, t) = seg_dist(*z, a, b);
                        if d < 0.7 * R_CLEAR && t > 1e-6 && t < 1.0 - 1e-6 {
                            let foot = a + (b - a) * t;
                            let away = if d > 1e-9 {
                                (foot - z) / d
                            } else {
                                let vel = if self.prev_specials.len() == specials.len() {
                                    z - self.prev_specials[idx]
                                } else {
                                    C64::new(0.0, 0.0)
                                };
                                let tang = (b - a) / (b - a).norm();
                                let nrm = C64::new(0.0, 1.0) * tang;
                                let vn = (vel.conj() * nrm).re;
                                if vn > 0.0 {
                                    -nrm
                                } else {
                                    nrm
                                }
                            };
                            out.push(z + away * R_CLEAR);
                            changed = true;
                            break;
                        }
                    }
                    out.push(b);
                }
                *leg = out;
                if !changed {
                    break;
                }
            }
        }
        self.tp_plus = new_plus;
        self.tp_minus = new_minus;
        self.prev_specials = specials;
        Ok(())
    }

    fn route(&self) -> Route {
        let q_far = C64::new(self.q_far, 0.0);
        let w_far = 1.0 / q_far;
        let mut pieces = Vec::new();
        pieces.push(Piece::SegW(w_far, -w_far));
        for w in self.legs[0].windows(2) {
            pieces.push(Piece::Seg(w[0], w[1]));
        }
        if self.degenerate {
            pieces.push(Piece::NodeFlip);
        } else {
            pieces.extend(uturn(self.tp_minus, *self.legs[0].last().unwrap(), self.eta));
        }
        for w in self.legs[1].windows(2) {
            pieces.push(Piece::Seg(w[0], w[1]));
        }
        pieces.push(Piece::SegW(-w_far, w_far));
        for w in self.legs[2].windows(2) {
            pieces.push(Piece::Seg(w[0], w[1]));
        }
        if self.degenerate {
            pieces.push(Piece::NodeFlip);
        } else {
            pieces.extend(uturn(self.tp_plus, *self.legs[2].last().unwrap(), self.eta));
        }
        for w in self.legs[3].windows(2) {
            pieces.push(Piece::Seg(w[0], w[1]));
        }
        Route { pieces }
    }
}

fn seg_dist(z: C64, a: C64, b: C64) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return ((z - a).norm(), 0.0);
    }
    let t = ((z - a).conj() * ab).re / len2;
    let t = t.clamp(0.0, 1.0);
    ((z - (a + ab * t)).norm(), t)
}

fn uturn(center: C64, entry: C64, eta: f64) -> Vec<Piece> {
    let d = (entry - center) / (entry - center).norm();
    let e = d * eta;
    let ie = C64::new(0.0, 1.0) * e;
    vec![
        Piece::Seg(entry, entry + ie),
        Piece::Seg(entry + ie, center - e + ie),
        Piece::Seg(center - e + ie, center - e - ie),
        Piece::Seg(center - e - ie, entry - ie),
        Piece::Seg(entry - ie, entry),
    ]
}

/// Continue the cycle integral along the moduli loop. Returns initial and
/// final values with the matched classification.
pub fn transport(spec: &LoopSpec, tol: f64) -> Result<MonodromyResult> {
    spec.validate()?;
    let base = spec.base;
    let mut contour = TransportContour::new(&base)?;
    let start_q = C64::new(contour.q_far, 0.0);
    let mut s_ref = branch_value_at(&base, &SheetPoint { q: start_q, sheet: Sheet::One })?;
    let quad_tol = tol.clamp(1e-12, 1e-4);

    let mut value_before = C64::new(0.0, 0.0);
    let mut prev: Option<C64> = None;
    let mut prev_step = 0.0f64;
    let steps = spec.steps;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let m_t = spec.moduli_at(t);
        if k > 0 {
            // sub-step the drag so fast-moving special points cannot hop a leg
            let t_prev = (k - 1) as f64 / steps as f64;
            for sub in 1..=ADVANCE_SUBSTEPS {
                let ts = t_prev + (t - t_prev) * (sub as f64) / (ADVANCE_SUBSTEPS as f64);
                contour.advance(&spec.moduli_at(ts))?;
            }
            // branch continuity at the fixed far anchor
            let d_here = disc(&m_t, start_q).sqrt();
            s_ref = if (d_here - s_ref).norm() <= (d_here + s_ref).norm() { d_here } else { -d_here };
        }
        let route = contour.route();
        let (val, s_end, _err) = walk_route(&m_t, &route, s_ref, quad_tol)?;
        if (s_end - s_ref).norm() > 1e-4 * s_ref.norm().max(1e-300) {
            return Err(Error::TransportBroken { step: k, jump: (s_end - s_ref).norm() });
        }
        if k == 0 {
            value_before = val;
        }
        if let Some(p) = prev {
            let dv = (val - p).norm();
            let allowed = 0.75f64.max(6.0 * prev_step).max(1e3 * quad_tol);
            if dv > allowed {
                return Err(Error::TransportBroken { step: k, jump: dv });
            }
            prev_step = dv;
        }
        prev = Some(val);
    }
    let value_after = prev.unwrap();
    let jump = value_after - value_before;
    let classification = classify(spec, value_before, value_after, jump)?;
    Ok(MonodromyResult { value_before, value_after, jump, classification })
}

const CLASS_TOL: f64 = 1e-5;

fn classify(spec: &LoopSpec, before: C64, after: C64, jump: C64) -> Result<JumpClass> {
    let tol = CLASS_TOL.max(1e-5 * before.norm());
    Ok(match spec.kind {
        LoopKind::Lambda => {
            let flip_resid = (after + before).norm();
            if flip_resid <= tol {
                JumpClass::SignFlip
            } else {
                // Gamma -> -Gamma - 2 gamma_cl: compare against the exact
                // classical cycle (i * classical_action), either orientation
                let scl = crate::contour::classical_action(&spec.base, 1e-9)?;
                let two_i_scl = C64::new(0.0, 2.0) * scl;
                if (after + before - two_i_scl).norm() <= tol
                    || (after + before + two_i_scl).norm() <= tol
                {
                    JumpClass::SignFlipMinus2Scl
                } else {
                    JumpClass::Unrecognized
                }
            }
        }
        LoopKind::Epsilon => {
            // Gamma -> Gamma - 2 gamma_cl at the base moduli
            let scl = crate::contour::classical_action(&spec.base, 1e-9)?;
            let two_i_scl = C64::new(0.0, 2.0) * scl;
            if (jump + two_i_scl).norm() <= tol {
                JumpClass::LogEpsilon
            } else {
                JumpClass::Unrecognized
            }
        }
        LoopKind::OneMinusSqrtLambda | LoopKind::CriticalDCombination => {
            let pred = predicted_jump(spec, &spec.base);
            if (jump - pred).norm() <= tol {
                JumpClass::Plus4PiI
            } else {
                JumpClass::Unrecognized
            }
        }
        LoopKind::OnePlusSqrtLambda => {
            let pred = predicted_jump(spec, &spec.base);
            if (jump - pred).norm() <= tol {
                JumpClass::Minus4PiI
            } else {
                JumpClass::Unrecognized
            }
        }
    })
}

/// Multivalued quantity continued along the loop by small steps: the new
/// value is the previous one composed with the principal branch of the
/// ratio, which is single-valued for small enough steps.
#[derive(Clone, Copy)]
struct ContinuedSqrt {
    z: C64,
    val: C64,
}

impl ContinuedSqrt {
    fn start(z: C64) -> ContinuedSqrt {
        ContinuedSqrt { z, val: z.sqrt() }
    }
    fn step(&mut self, z_new: C64) -> C64 {
        self.val *= (z_new / self.z).sqrt();
        self.z = z_new;
        self.val
    }
}

#[derive(Clone, Copy)]
struct ContinuedLn {
    z: C64,
    val: C64,
}

impl ContinuedLn {
    fn start(z: C64) -> ContinuedLn {
        ContinuedLn { z, val: z.ln() }
    }
    fn step(&mut self, z_new: C64) -> C64 {
        self.val += (z_new / self.z).ln();
        self.z = z_new;
        self.val
    }
}

/// Analytic continuation of the closed-form action along the loop, keeping
/// every square root and logarithm branch continuous. The independent
/// oracle for the transported values: returns (S_before, S_after).
pub fn closed_form_continuation(spec: &LoopSpec) -> Result<(C64, C64)> {
    let steps = spec.steps.max(1024);
    let one = C64::new(1.0, 0.0);
    let h = spec.base.h;
    let assemble = |sl: C64, sb: C64, l1: Option<C64>, l2: C64, l3: C64, m: &Moduli| -> C64 {
        let c = m.epsilon * sl / (one - h * h).sqrt();
        let t1 = match l1 {
            Some(l) => -c * l,
            None => C64::new(0.0, 0.0),
        };
        t1 + 2.0 * l2 - (2.0 * h / sb) * l3
    };
    let m0 = spec.moduli_at(0.0);
    let with_eps = m0.epsilon.norm() > 0.0;
    let arg_a = |m: &Moduli| one - m.h * m.h - m.epsilon + m.epsilon * m.lambda;
    let arg_bp = |m: &Moduli| (one - m.h * m.h - m.epsilon) * (one - m.lambda);
    let arg1 = |m: &Moduli| {
        m.epsilon * m.lambda * (one - m.h * m.h - m.epsilon + m.epsilon * m.lambda - m.lambda)
    };
    let mut sl = ContinuedSqrt::start(m0.lambda);
    let mut aa = ContinuedSqrt::start(arg_a(&m0));
    let mut bb = ContinuedSqrt::start(arg_bp(&m0));
    let mut sb = ContinuedSqrt::start(one - m0.lambda);
    let mut l2 = ContinuedLn::start((aa.val - sl.val) / (aa.val + sl.val));
    let mut l3 = ContinuedLn::start((bb.val - h * sl.val) / (bb.val + h * sl.val));
    let mut l1 = if with_eps { Some(ContinuedLn::start(arg1(&m0))) } else { None };
    let before = assemble(
        sl.val,
        sb.val,
        l1.as_ref().map(|l| l.val),
        l2.val,
        l3.val,
        &m0,
    );
    let mut after = before;
    for k in 1..=steps {
        let m = spec.moduli_at(k as f64 / steps as f64);
        let s_l = sl.step(m.lambda);
        let s_a = aa.step(arg_a(&m));
        let s_b = bb.step(arg_bp(&m));
        let s_1ml = sb.step(one - m.lambda);
        let v2 = l2.step((s_a - s_l) / (s_a + s_l));
        let v3 = l3.step((s_b - h * s_l) / (s_b + h * s_l));
        let v1 = match &mut l1 {
            Some(l) => Some(l.step(arg1(&m))),
            None => None,
        };
        after = assemble(s_l, s_1ml, v1, v2, v3, &m);
    }
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_moduli_return_to_base() {
        let base = Moduli::real(0.5, 0.1, 0.0);
        for kind in [
            LoopKind::Lambda,
            LoopKind::OneMinusSqrtLambda,
            LoopKind::OnePlusSqrtLambda,
        ] {
            let spec = LoopSpec::new(kind, base, 64);
            let m1 = spec.moduli_at(1.0);
            assert!((m1.lambda - base.lambda).norm() < 1e-12, "{kind:?}");
        }
        let base_e = Moduli::real(0.5, 0.1, 0.05);
        let spec = LoopSpec::new(LoopKind::Epsilon, base_e, 64);
        assert!((spec.moduli_at(1.0).epsilon - base_e.epsilon).norm() < 1e-12);
    }

    #[test]
    fn predicted_jumps_match_printed_coefficients() {
        let base = Moduli::real(0.5, 0.0, 0.0);
        let spec = LoopSpec::new(LoopKind::OneMinusSqrtLambda, base, 64);
        let j = predicted_jump(&spec, &base);
        assert!((j - C64::new(0.0, 4.0 * PI)).norm() < 1e-12);

        // the plain sqrt(lambda)-circle keeps jump 4 pi i at any h; the
        // finite-field coefficient belongs to the combination loop
        let base_h = Moduli::real(0.5, 0.2, 0.0);
        let spec = LoopSpec::new(LoopKind::OneMinusSqrtLambda, base_h, 64);
        let j = predicted_jump(&spec, &base_h);
        assert!((j - C64::new(0.0, 4.0 * PI)).norm() < 1e-12);
        let base_c = Moduli::real(0.85, 0.2, 0.0);
        let spec = LoopSpec::new(LoopKind::CriticalDCombination, base_c, 64);
        let j = predicted_jump(&spec, &base_c);
        let coef = 2.0 * (1.0 - 0.2 / 0.15f64.sqrt());
        assert!((j - C64::new(0.0, 2.0 * PI * coef)).norm() < 1e-12);
        assert!(spec.validate().is_ok());
        // through-base circle at lambda = 0.5 would enclose the secondary zero
        let bad = LoopSpec::new(LoopKind::CriticalDCombination, Moduli::real(0.5, 0.2, 0.0), 64);
        assert!(bad.validate().is_err());

        let base_e = Moduli::real(0.5, 0.0, 0.05);
        let spec = LoopSpec::new(LoopKind::Epsilon, base_e, 64);
        let j = predicted_jump(&spec, &base_e);
        let c = 0.05 * 0.5f64.sqrt();
        assert!((j - C64::new(0.0, -2.0 * PI * c)).norm() < 1e-12);
    }

    #[test]
    fn invalid_loops_rejected() {
        // radius reaching other critical points
        let base = Moduli::real(0.97, 0.0, 0.0);
        let spec = LoopSpec::new(LoopKind::Lambda, base, 64);
        // lambda* = 1: |lambda| = 0.97 < 1 is fine; making h large pushes
        // lambda* below |lambda|:
        let bad = Moduli::real(0.97, 0.5, 0.0);
        let spec_bad = LoopSpec::new(LoopKind::Lambda, bad, 64);
        assert!(spec.validate().is_ok());
        assert!(spec_bad.validate().is_err());
        let eps_bad = Moduli::real(0.5, 0.1, 0.0);
        assert!(LoopSpec::new(LoopKind::Epsilon, eps_bad, 64).validate().is_err());
    }
}
