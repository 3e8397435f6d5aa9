//! Hopf invariants of maps S³ → S² given by a nonvanishing polynomial
//! triple, by two independent routes:
//!
//! * [`hopf_via_linking`]: trace the preimage circles of two regular values
//!   and sum their Gauss linking numbers;
//! * [`hopf_via_whitehead`]: estimate `∫ η ∧ Ω` as the helicity of the
//!   divergence-free field dual to Ω after stereographic projection, with
//!   η the Biot–Savart potential.
//!
//! Orientation: S³ is oriented as the boundary of the unit ball (outward
//! normal first) and S² likewise. A preimage curve of `q` is oriented so that
//! `(tangent, v1, v2)` is positive on S³ whenever `dp` takes `(v1, v2)` to a
//! positive basis of `T_q S²`. With these conventions both routes agree.
//! The self-dual factor is measured with the opposite orientation of S³
//! (see [`normalized_map`]).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mapcore::{CompiledTriple, GaussComponents, Half, TripleJet};
use crate::poly::PowerTable;
use crate::sphere::{
    axpy4, cross3, cross4, dist4, dot3, dot4, halton_sphere, hopf_box_to_sphere, norm3, norm4,
    scale4, sub4, SpherePoint, Stereographic, Vec3, Vec4, SPHERE_VOLUME,
};

/// `p(x) = T(r x) / |T(r x)|` on the unit sphere, for a Gauss triple `T` and
/// working radius `r`.
#[derive(Clone, Debug)]
pub struct SphereMap {
    triple: CompiledTriple,
    radius: f64,
    guard: f64,
    orientation: f64,
    label: String,
}

pub const DEFAULT_GUARD: f64 = 1e-12;

/// The normalized Gauss map of one half of `components` on the sphere of
/// radius `radius`.
///
/// The anti-self-dual half is measured with the standard orientation of S³
/// and the self-dual half with the reversed one. With plain Hopf invariants
/// the self-dual triple of `F∘r` (`r` orientation reversing) would have
/// invariant `-ρ(F)`; the reversal makes λ(F∘r) = ρ(F) and λ + ρ = μ, with
/// λ(zw) = 0 and λ(z·conj(w)) = 1.
pub fn normalized_map(components: &GaussComponents, half: Half, radius: f64, guard: f64) -> SphereMap {
    SphereMap {
        triple: CompiledTriple::new(components, half),
        radius,
        guard,
        orientation: match half {
            Half::SelfDual => -1.0,
            Half::AntiSelfDual => 1.0,
        },
        label: half.label().to_string(),
    }
}

impl SphereMap {
    /// A map measured with the standard orientation of S³.
    pub fn from_triple(triple: CompiledTriple, radius: f64, guard: f64, label: &str) -> Self {
        Self {
            triple,
            radius,
            guard,
            orientation: 1.0,
            label: label.to_string(),
        }
    }

    /// +1 for the standard orientation of S³, -1 for the reversed one.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = orientation.signum();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn power_table(&self) -> PowerTable {
        self.triple.power_table()
    }

    /// Triple value and Jacobian at `x ∈ S³` (derivatives with respect to `x`).
    pub fn jet_with(&self, table: &mut PowerTable, x: &Vec4) -> Result<TripleJet> {
        let mut jet = self.triple.jet_with(table, &scale4(x, self.radius));
        let n = jet.norm();
        if !(n >= self.guard) {
            return Err(Error::ZeroTriple { norm: n, point: *x });
        }
        for row in &mut jet.jac {
            *row = scale4(row, self.radius);
        }
        Ok(jet)
    }

    pub fn eval(&self, x: &Vec4) -> Result<Vec3> {
        let mut t = self.power_table();
        let jet = self.jet_with(&mut t, x)?;
        let n = jet.norm();
        Ok(jet.value.map(|c| c / n))
    }
}

// ---------------------------------------------------------------------------
// Preimage curves
// ---------------------------------------------------------------------------

/// Orthonormal `(a, b)` with `a × b = q`.
fn tangent_frame(q: &Vec3) -> (Vec3, Vec3) {
    let helper = if q[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = cross3(&helper, q);
    let a = a.map(|c| c / norm3(&a));
    let b = cross3(q, &a);
    (a, b)
}

/// Constraint system `G(x) = (p(x)·a, p(x)·b, |x|² - 1)` for `p(x) = q`.
struct Constraint<'a> {
    map: &'a SphereMap,
    q: Vec3,
    a: Vec3,
    b: Vec3,
}

struct ConstraintEval {
    residual: [f64; 3],
    rows: [Vec4; 3],
    along_q: f64,
}

impl<'a> Constraint<'a> {
    fn new(map: &'a SphereMap, q: Vec3) -> Self {
        let (a, b) = tangent_frame(&q);
        Self { map, q, a, b }
    }

    fn eval(&self, table: &mut PowerTable, x: &Vec4) -> Result<ConstraintEval> {
        let jet = self.map.jet_with(table, x)?;
        let n = jet.norm();
        let p = jet.value.map(|c| c / n);
        // d(p·e) = (eᵀ - (e·p) pᵀ) dT / |T|
        let row = |e: &Vec3| -> Vec4 {
            let ep = dot3(e, &p);
            let w: Vec3 = std::array::from_fn(|k| (e[k] - ep * p[k]) / n);
            std::array::from_fn(|i| w[0] * jet.jac[0][i] + w[1] * jet.jac[1][i] + w[2] * jet.jac[2][i])
        };
        Ok(ConstraintEval {
            residual: [dot3(&p, &self.a), dot3(&p, &self.b), dot4(x, x) - 1.0],
            rows: [row(&self.a), row(&self.b), scale4(x, 2.0)],
            along_q: dot3(&p, &self.q),
        })
    }
}

fn res_norm(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn gram3(rows: &[Vec4; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| dot4(&rows[i], &rows[j])))
}

fn solve3(m: &[[f64; 3]; 3], r: &[f64; 3]) -> Option<[f64; 3]> {
    let det = crate::sphere::det3(m);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let col = |k: usize| -> f64 {
        let mut c = *m;
        for i in 0..3 {
            c[i][k] = r[i];
        }
        crate::sphere::det3(&c) / det
    };
    Some([col(0), col(1), col(2)])
}

/// Condition number of the 3×4 constraint Jacobian (ratio of extreme
/// singular values), from the eigenvalues of its Gram matrix.
fn condition(rows: &[Vec4; 3]) -> f64 {
    let g = gram3(rows);
    let tr = g[0][0] + g[1][1] + g[2][2];
    let q = tr / 3.0;
    let p1 = g[0][1].powi(2) + g[0][2].powi(2) + g[1][2].powi(2);
    let p2 = (g[0][0] - q).powi(2) + (g[1][1] - q).powi(2) + (g[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p < 1e-300 {
        return 1.0;
    }
    let bm: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| (g[i][j] - if i == j { q } else { 0.0 }) / p));
    let r = (crate::sphere::det3(&bm) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    if e3 <= 0.0 {
        return f64::INFINITY;
    }
    (e1 / e3).sqrt()
}

/// Minimum-norm Newton iteration onto `G = 0`.
fn newton(
    c: &Constraint,
    table: &mut PowerTable,
    mut x: Vec4,
    tol: f64,
    max_iter: usize,
) -> Result<Option<(Vec4, ConstraintEval)>> {
    for _ in 0..max_iter {
        let ev = c.eval(table, &x)?;
        if res_norm(&ev.residual) < tol {
            return Ok(Some((x, ev)));
        }
        let Some(lam) = solve3(&gram3(&ev.rows), &ev.residual) else {
            return Ok(None);
        };
        for k in 0..3 {
            x = axpy4(&x, -lam[k], &ev.rows[k]);
        }
        if !x.iter().all(|t| t.is_finite()) || norm4(&x) > 10.0 {
            return Ok(None);
        }
    }
    let ev = c.eval(table, &x)?;
    Ok((res_norm(&ev.residual) < tol).then_some((x, ev)))
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub step: f64,
    pub newton_tol: f64,
    pub closure_tol: f64,
    pub max_steps: usize,
    pub max_condition: f64,
    /// Halton points used to look for seeds: `grid_density³`.
    pub grid_density: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            step: 0.02,
            newton_tol: 1e-10,
            closure_tol: 1e-6,
            max_steps: 1_000_000,
            max_condition: 1e8,
            grid_density: 32,
        }
    }
}

/// A closed polyline on S³ approximating one component of `p⁻¹(q)`,
/// ordered along its orientation. The closing segment runs from the last
/// point back to the first.
#[derive(Clone, Debug)]
pub struct SphereCurve {
    pub points: Vec<SpherePoint>,
    pub closed: bool,
    pub q: Vec3,
    /// Largest constraint residual over the points.
    pub max_residual: f64,
    pub max_condition: f64,
}

impl SphereCurve {
    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist4(a, b)).sum()
    }

    pub fn max_step(&self) -> f64 {
        self.segments().map(|(a, b)| dist4(a, b)).fold(0.0, f64::max)
    }

    /// Consecutive point pairs, including the closing pair.
    pub fn segments(&self) -> impl Iterator<Item = (&Vec4, &Vec4)> {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i].coords(), self.points[(i + 1) % n].coords()))
    }

    pub fn reversed(&self) -> SphereCurve {
        let mut c = self.clone();
        c.points.reverse();
        c
    }

    fn distance_to(&self, x: &Vec4) -> f64 {
        self.points
            .iter()
            .map(|p| dist4(p.coords(), x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Approximate solutions of `p(x) = q`: Newton from every Halton sample whose
/// image lies near `q`, deduplicated by clustering with radius `cluster`.
pub fn find_preimage_seeds(
    map: &SphereMap,
    q: &Vec3,
    grid_density: usize,
    cluster: f64,
) -> Result<Vec<SpherePoint>> {
    let c = Constraint::new(map, *q);
    let mut table = map.power_table();
    let grid = halton_sphere(grid_density.pow(3));
    let mut scored: Vec<(f64, Vec4)> = Vec::new();
    for s in &grid {
        let jet = map.jet_with(&mut table, s.coords())?;
        let n = jet.norm();
        let d = (0..3).map(|k| (jet.value[k] / n - q[k]).powi(2)).sum::<f64>().sqrt();
        scored.push((d, *s.coords()));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let keep = scored.iter().take_while(|(d, _)| *d < 0.35).count().max(64.min(scored.len()));
    let mut seeds: Vec<SpherePoint> = Vec::new();
    for (_, x0) in scored.into_iter().take(keep) {
        let Some((x, ev)) = newton(&c, &mut table, x0, 1e-11, 40)? else {
            continue;
        };
        if ev.along_q <= 0.0 || condition(&ev.rows) > 1e8 {
            continue;
        }
        let Some(sp) = SpherePoint::normalize(x) else { continue };
        if seeds.iter().all(|s| dist4(s.coords(), sp.coords()) > cluster) {
            seeds.push(sp);
        }
    }
    Ok(seeds)
}

fn oriented_tangent(rows: &[Vec4; 3]) -> Option<Vec4> {
    let t = cross4(rows);
    let n = norm4(&t);
    (n > 1e-300).then(|| scale4(&t, 1.0 / n))
}

/// Predictor–corrector continuation of the component of `p⁻¹(q)` through
/// `seed`.
pub fn trace_preimage(map: &SphereMap, q: &Vec3, seed: &SpherePoint, cfg: &TraceConfig) -> Result<SphereCurve> {
    let c = Constraint::new(map, *q);
    let mut table = map.power_table();
    let (x0, ev0) = newton(&c, &mut table, *seed.coords(), cfg.newton_tol, 40)?
        .ok_or(Error::RankDrop { condition: f64::INFINITY })?;
    if res_norm(&ev0.residual) > cfg.closure_tol {
        return Err(Error::RankDrop { condition: f64::INFINITY });
    }
    let mut max_cond = condition(&ev0.rows);
    if max_cond > cfg.max_condition {
        return Err(Error::RankDrop { condition: max_cond });
    }
    let mut tangent = oriented_tangent(&ev0.rows).ok_or(Error::RankDrop { condition: f64::INFINITY })?;
    let mut points = vec![x0];
    let mut max_res = res_norm(&ev0.residual);
    let mut x = x0;
    let mut arc = 0.0;
    let min_step = cfg.step * 1e-4;
    for _ in 0..cfg.max_steps {
        let mut h = cfg.step;
        let (y, ev, t_new) = loop {
            let pred = axpy4(&x, h, &tangent);
            if let Some((y, ev)) = newton(&c, &mut table, pred, cfg.newton_tol, 8)? {
                if let Some(t) = oriented_tangent(&ev.rows) {
                    // Reject steps that turn too sharply or jump branches.
                    if dot4(&t, &tangent) > 0.95 && ev.along_q > 0.0 && dist4(&y, &x) < 2.0 * h {
                        break (y, ev, t);
                    }
                }
            }
            h *= 0.5;
            if h < min_step {
                return Err(Error::RankDrop {
                    condition: condition(&c.eval(&mut table, &x)?.rows),
                });
            }
        };
        let cond = condition(&ev.rows);
        max_cond = max_cond.max(cond);
        if cond > cfg.max_condition {
            return Err(Error::RankDrop { condition: cond });
        }
        max_res = max_res.max(res_norm(&ev.residual));
        arc += dist4(&x, &y);
        x = y;
        tangent = t_new;
        let back = sub4(&x0, &x);
        if arc > 3.0 * h && norm4(&back) < 1.5 * cfg.step && dot4(&back, &tangent) > 0.0 {
            return Ok(SphereCurve {
                points: points.into_iter().filter_map(SpherePoint::normalize).collect(),
                closed: true,
                q: *q,
                max_residual: max_res,
                max_condition: max_cond,
            });
        }
        points.push(x);
    }
    Err(Error::MaxStepsExceeded(cfg.max_steps))
}

/// All components of `p⁻¹(q)`.
pub fn trace_all(map: &SphereMap, q: &Vec3, cfg: &TraceConfig) -> Result<Vec<SphereCurve>> {
    let seeds = find_preimage_seeds(map, q, cfg.grid_density, 3.0 * cfg.step)?;
    let mut curves: Vec<SphereCurve> = Vec::new();
    for s in seeds {
        if curves.iter().any(|c| c.distance_to(s.coords()) < 5.0 * cfg.step) {
            continue;
        }
        curves.push(trace_preimage(map, q, &s, cfg)?);
    }
    Ok(curves)
}

// ---------------------------------------------------------------------------
// Linking numbers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Linking {
    pub value: i64,
    pub raw: f64,
    pub residual: f64,
}

/// A projection pole far from every point of `curves`.
pub fn pick_pole(curves: &[&SphereCurve]) -> SpherePoint {
    let sample: Vec<&SpherePoint> = curves
        .iter()
        .flat_map(|c| {
            let stride = (c.points.len() / 200).max(1);
            c.points.iter().step_by(stride)
        })
        .collect();
    halton_sphere(512)
        .into_iter()
        .map(|cand| {
            let d = sample
                .iter()
                .map(|p| dist4(p.coords(), cand.coords()))
                .fold(f64::INFINITY, f64::min);
            (d, cand)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .expect("non-empty candidate set")
}

fn project(curve: &SphereCurve, st: &Stereographic) -> Result<Vec<Vec3>> {
    curve.points.iter().map(|p| st.forward(p)).collect()
}

/// Gauss linking integral of two closed polylines in ℝ³, midpoint rule per
/// segment pair.
pub fn gauss_linking_polylines(a: &[Vec3], b: &[Vec3]) -> f64 {
    let segs = |c: &[Vec3]| -> Vec<(Vec3, Vec3)> {
        let n = c.len();
        (0..n)
            .map(|i| {
                let (p, q) = (c[i], c[(i + 1) % n]);
                let mid = std::array::from_fn(|k| 0.5 * (p[k] + q[k]));
                let d = std::array::from_fn(|k| q[k] - p[k]);
                (mid, d)
            })
            .collect()
    };
    let sa = segs(a);
    let sb = segs(b);
    let mut total = 0.0;
    for (ma, da) in &sa {
        for (mb, db) in &sb {
            let r = [ma[0] - mb[0], ma[1] - mb[1], ma[2] - mb[2]];
            let d = norm3(&r);
            total += dot3(&cross3(da, db), &r) / (d * d * d);
        }
    }
    total / (4.0 * PI)
}

/// Linking number of two disjoint closed curves on S³, computed in ℝ³ after
/// stereographic projection from `pole` (or from a pole chosen far from both
/// curves).
pub fn linking_number(c1: &SphereCurve, c2: &SphereCurve, pole: Option<SpherePoint>) -> Result<Linking> {
    let stride = |c: &SphereCurve| (c.points.len() / 400).max(1);
    let mut min_d = f64::INFINITY;
    for p in c1.points.iter().step_by(stride(c1)) {
        min_d = min_d.min(c2.distance_to(p.coords()));
    }
    let limit = 10.0 * c1.max_step().max(c2.max_step());
    if min_d <= limit {
        return Err(Error::CurvesTooClose { distance: min_d });
    }
    let pole = pole.unwrap_or_else(|| pick_pole(&[c1, c2]));
    let st = Stereographic::new(pole);
    let raw = gauss_linking_polylines(&project(c1, &st)?, &project(c2, &st)?);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual > 0.3 {
        return Err(Error::PoorConditioning { residual });
    }
    Ok(Linking {
        value: value as i64,
        raw,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linking,
    Whitehead,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Diagnostics {
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub regular_values: Vec<Vec3>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curve_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pair_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Raw estimate with the near-diagonal cutoff halved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_half_cutoff: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HopfEstimate {
    pub value: i64,
    pub raw: f64,
    pub residual: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug)]
pub struct LinkingConfig {
    pub seed: u64,
    pub trace: TraceConfig,
    pub max_attempts: usize,
}

impl Default for LinkingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trace: TraceConfig::default(),
            max_attempts: 8,
        }
    }
}

pub fn random_s2<R: Rng>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// A pair of regular-value candidates at angle above 90°, drawn by rejection
/// from the uniform distribution on S² × S².
pub fn regular_value_pair<R: Rng>(rng: &mut R) -> (Vec3, Vec3) {
    let q1 = random_s2(rng);
    loop {
        let q2 = random_s2(rng);
        if dot3(&q1, &q2) < 0.0 {
            return (q1, q2);
        }
    }
}

/// Total linking, the curves over `q1` and `q2`, and the per-pair residuals.
pub type PairLinking = (Linking, Vec<SphereCurve>, Vec<SphereCurve>, Vec<f64>);

/// Linking-number estimate for one fixed pair of regular values.
pub fn hopf_linking_at(map: &SphereMap, q1: Vec3, q2: Vec3, cfg: &TraceConfig) -> Result<PairLinking> {
    let (c1, c2) = rayon::join(|| trace_all(map, &q1, cfg), || trace_all(map, &q2, cfg));
    let (c1, c2) = (c1?, c2?);
    let refs: Vec<&SphereCurve> = c1.iter().chain(&c2).collect();
    let pole = if refs.is_empty() { None } else { Some(pick_pole(&refs)) };
    let mut value = 0;
    let mut raw = 0.0;
    let mut residuals = Vec::new();
    for a in &c1 {
        for b in &c2 {
            let l = linking_number(a, b, pole)?;
            value += l.value;
            raw += l.raw;
            residuals.push(l.residual);
        }
    }
    let residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok((Linking { value, raw, residual }, c1, c2, residuals))
}

/// Hopf invariant as the linking number of two preimage sets.
pub fn hopf_via_linking(map: &SphereMap, cfg: &LinkingConfig) -> Result<HopfEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = cfg.trace.clone();
    let mut last_err = Error::RankDrop { condition: f64::INFINITY };
    for attempt in 1..=cfg.max_attempts {
        let (q1, q2) = regular_value_pair(&mut rng);
        match hopf_linking_at(map, q1, q2, &trace) {
            Ok((l, c1, c2, residuals)) => {
                let o = map.orientation();
                return Ok(HopfEstimate {
                    value: (o as i64) * l.value,
                    raw: o * l.raw,
                    residual: l.residual,
                    method: Method::Linking,
                    diagnostics: Diagnostics {
                        seed: cfg.seed,
                        regular_values: vec![q1, q2],
                        curve_counts: vec![c1.len(), c2.len()],
                        pair_residuals: residuals,
                        attempts: Some(attempt),
                        ..Default::default()
                    },
                });
            }
            Err(e @ Error::ZeroTriple { .. }) => return Err(e),
            Err(e @ Error::CurvesTooClose { .. }) | Err(e @ Error::PoorConditioning { .. }) => {
                // Refine and try a fresh pair.
                trace.step = (trace.step * 0.5).max(cfg.trace.step / 8.0);
                last_err = e;
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

// ---------------------------------------------------------------------------
// Whitehead integral
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct WhiteheadConfig {
    /// Number of point pairs contributing to the estimate.
    pub budget: u64,
    pub seed: u64,
    /// Near-diagonal cutoff in projected coordinates (the equator of the
    /// projection is the unit sphere, so the domain scale is 1).
    pub cutoff: f64,
    /// Cells of the importance grid along `(t, a, b)` of the Hopf box.
    pub grid: [usize; 3],
    /// Fraction of samples drawn uniformly on S³.
    pub uniform_fraction: f64,
    /// Independent batches; the standard error comes from their spread.
    pub batches: usize,
}

impl Default for WhiteheadConfig {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            seed: 0,
            cutoff: 1e-2,
            grid: [12, 24, 24],
            uniform_fraction: 0.2,
            batches: 32,
        }
    }
}

/// Samples of the field `B` dual to the pulled-back, area-normalized Ω.
struct FieldSampler<'a> {
    map: &'a SphereMap,
    st: Stereographic,
}

struct FieldSample {
    x: Vec3,
    b: Vec3,
    /// density of the sample in ℝ³
    density: f64,
}

impl<'a> FieldSampler<'a> {
    /// `(X, B(X))` for `s ∈ S³`.
    fn field(&self, table: &mut PowerTable, s: &SpherePoint) -> Result<(Vec3, Vec3)> {
        let x = self.st.forward(s)?;
        let jet = self.map.jet_with(table, s.coords())?;
        let omega = jet.omega();
        let jac = self.st.inverse_jacobian(&x);
        // β_jk = Σ_{a<b} Ω_ab (J_aj J_bk - J_bj J_ak)
        let beta = |j: usize, k: usize| -> f64 {
            crate::mapcore::MINOR_PAIRS
                .iter()
                .zip(&omega)
                .map(|(&(a, b), w)| w * (jac[j][a] * jac[k][b] - jac[j][b] * jac[k][a]))
                .sum::<f64>()
        };
        let norm = 1.0 / (4.0 * PI);
        Ok((x, [beta(1, 2) * norm, beta(2, 0) * norm, beta(0, 1) * norm]))
    }
}

/// Piecewise-constant sampling density on the Hopf box.
struct ImportanceGrid {
    dims: [usize; 3],
    cumulative: Vec<f64>,
    probs: Vec<f64>,
}

impl ImportanceGrid {
    fn build(sampler: &FieldSampler, dims: [usize; 3], uniform_fraction: f64) -> Result<Option<Self>> {
        let n = dims[0] * dims[1] * dims[2];
        let weights: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(
                || sampler.map.power_table(),
                |table, idx| -> Result<f64> {
                    let (i, j, k) = (idx / (dims[1] * dims[2]), (idx / dims[2]) % dims[1], idx % dims[2]);
                    let s = hopf_box_to_sphere(
                        (i as f64 + 0.5) / dims[0] as f64,
                        (j as f64 + 0.5) / dims[1] as f64,
                        (k as f64 + 0.5) / dims[2] as f64,
                    );
                    let s = SpherePoint::normalize(s).expect("unit vector");
                    let (x, b) = match sampler.field(table, &s) {
                        Err(Error::AtPole) => return Ok(0.0),
                        r => r?,
                    };
                    // |Ω| measured on S³: the projection scales lengths by λ.
                    let lam = Stereographic::conformal_factor(&x);
                    Ok(norm3(&b) / (lam * lam))
                },
            )
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Ok(None);
        }
        let probs: Vec<f64> = weights
            .iter()
            .map(|w| uniform_fraction / n as f64 + (1.0 - uniform_fraction) * w / total)
            .collect();
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Some(Self { dims, cumulative, probs }))
    }

    /// A point of S³ and its density with respect to the volume of S³.
    fn sample<R: Rng>(&self, rng: &mut R) -> (SpherePoint, f64) {
        let total = *self.cumulative.last().expect("non-empty grid");
        let r: f64 = rng.gen_range(0.0..total);
        let idx = self.cumulative.partition_point(|c| *c <= r).min(self.probs.len() - 1);
        let [nt, na, nb] = self.dims;
        let (i, j, k) = (idx / (na * nb), (idx / nb) % na, idx % nb);
        let t = (i as f64 + rng.gen::<f64>()) / nt as f64;
        let a = (j as f64 + rng.gen::<f64>()) / na as f64;
        let b = (k as f64 + rng.gen::<f64>()) / nb as f64;
        let s = SpherePoint::normalize(hopf_box_to_sphere(t, a, b)).expect("unit vector");
        let cell_volume = SPHERE_VOLUME / self.probs.len() as f64;
        (s, self.probs[idx] / total / cell_volume)
    }
}

#[derive(Clone, Copy, Default)]
struct BatchSums {
    sum: f64,
    sum_half: f64,
    pairs: u64,
}

fn stream_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch + 1);
    rng
}

/// Points per batch so that `batches` all-pairs blocks reach `budget` pairs.
fn points_per_batch(budget: u64, batches: usize) -> usize {
    let per = budget as f64 / batches as f64;
    ((1.0 + (1.0 + 8.0 * per).sqrt()) / 2.0).ceil().max(2.0) as usize
}

/// Whitehead's integral `∫ η ∧ Ω` on S³, evaluated as the helicity
/// `(1/4π) ∫∫ (x - y)·(B(x) × B(y)) / |x - y|³` in stereographic coordinates.
///
/// Each batch draws points independently from the importance density and
/// averages the kernel over all point pairs in the batch; batches use
/// independent RNG streams derived from `(seed, batch index)` and are reduced
/// in index order.
pub fn hopf_via_whitehead(map: &SphereMap, cfg: &WhiteheadConfig) -> Result<HopfEstimate> {
    if cfg.batches < 2 {
        return Err(Error::InvalidConfig("at least two batches are required".into()));
    }
    // The pole is placed off the grid's cell centers.
    let pole = SpherePoint::normalize(hopf_box_to_sphere(0.3271, 0.1234, 0.6917)).expect("unit vector");
    let sampler = FieldSampler {
        map,
        st: Stereographic::new(pole),
    };
    let per_batch = points_per_batch(cfg.budget, cfg.batches);
    let mut diagnostics = Diagnostics {
        seed: cfg.seed,
        cutoff: Some(cfg.cutoff),
        ..Default::default()
    };
    let Some(grid) = ImportanceGrid::build(&sampler, cfg.grid, cfg.uniform_fraction)? else {
        // Ω vanishes on the whole grid: treat the map as having Ω ≡ 0.
        diagnostics.samples = Some(0);
        diagnostics.standard_error = Some(0.0);
        diagnostics.raw_half_cutoff = Some(0.0);
        return Ok(HopfEstimate {
            value: 0,
            raw: 0.0,
            residual: 0.0,
            method: Method::Whitehead,
            diagnostics,
        });
    };
    let cutoff2 = cfg.cutoff * cfg.cutoff;
    let half2 = cutoff2 / 4.0;
    let batches: Vec<BatchSums> = (0..cfg.batches as u64)
        .into_par_iter()
        .map(|batch| -> Result<BatchSums> {
            let mut rng = stream_rng(cfg.seed, batch);
            let mut table = map.power_table();
            let mut pts: Vec<FieldSample> = Vec::with_capacity(per_batch);
            while pts.len() < per_batch {
                let (s, dens) = grid.sample(&mut rng);
                let (x, b) = match sampler.field(&mut table, &s) {
                    Err(Error::AtPole) => continue,
                    r => r?,
                };
                let lam = Stereographic::conformal_factor(&x);
                pts.push(FieldSample {
                    x,
                    b: b.map(|c| c / dens),
                    density: lam * lam * lam,
                });
            }
            let mut out = BatchSums::default();
            for i in 0..pts.len() {
                let (xi, bi, di) = (pts[i].x, pts[i].b, pts[i].density);
                let mut acc = 0.0;
                let mut acc_near = 0.0;
                for pj in &pts[i + 1..] {
                    let r = [xi[0] - pj.x[0], xi[1] - pj.x[1], xi[2] - pj.x[2]];
                    let d2 = dot3(&r, &r);
                    if d2 < half2 {
                        continue;
                    }
                    let c = cross3(&bi, &pj.b);
                    let k = (r[0] * c[0] + r[1] * c[1] + r[2] * c[2]) / (d2 * d2.sqrt() * pj.density);
                    if d2 < cutoff2 {
                        acc_near += k;
                    } else {
                        acc += k;
                    }
                }
                out.sum += acc / di;
                out.sum_half += (acc + acc_near) / di;
            }
            out.pairs = (pts.len() * (pts.len() - 1) / 2) as u64;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let scale = map.orientation() / (4.0 * PI);
    let means: Vec<f64> = batches.iter().map(|b| scale * b.sum / b.pairs as f64).collect();
    let nb = means.len() as f64;
    let raw = means.iter().sum::<f64>() / nb;
    let var = means.iter().map(|m| (m - raw).powi(2)).sum::<f64>() / (nb - 1.0);
    let stderr = (var / nb).sqrt();
    let raw_half = batches
        .iter()
        .map(|b| scale * b.sum_half / b.pairs as f64)
        .sum::<f64>()
        / nb;
    diagnostics.samples = Some(batches.iter().map(|b| b.pairs).sum());
    diagnostics.standard_error = Some(stderr);
    diagnostics.raw_half_cutoff = Some(raw_half);
    if stderr > 0.5 {
        return Err(Error::BudgetTooSmall { stderr });
    }
    let value = raw.round();
    Ok(HopfEstimate {
        value: value as i64,
        raw,
        residual: (raw - value).abs(),
        method: Method::Whitehead,
        diagnostics,
    })
}

/// Writes curves as CSV: header `x,y,u,v`, one row per point, a blank line
/// between curves.
pub fn curves_to_csv(curves: &[SphereCurve]) -> String {
    let mut out = String::from("x,y,u,v\n");
    for (k, c) in curves.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for p in &c.points {
            let [a, b, u, v] = *p.coords();
            out.push_str(&format!("{a},{b},{u},{v}\n"));
        }
    }
    out
}
