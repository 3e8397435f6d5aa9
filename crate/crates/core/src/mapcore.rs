//! Maps `F = (f, g): ℝ⁴ → ℝ²`, their Plücker minors, and the self-dual and
//! anti-self-dual Gauss triples built from them.
//!
//! With `p_ij = f_i g_j - f_j g_i` the 2×2 minors of `DF` in the coordinate
//! order `(x, y, u, v)`:
//!
//! ```text
//! A+ = p_xy + p_uv    B+ = p_xu - p_yv    C+ = p_xv + p_yu
//! A- = p_xy - p_uv    B- = p_xu + p_yv    C- = p_xv - p_yu
//! ```

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{CompiledPoly, Poly4, PowerTable, Var};
use crate::sphere::{dot4, halton_sphere, norm4, scale4, Vec4};

/// Index pairs of the six Plücker minors, in storage order.
pub const MINOR_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
pub const MINOR_NAMES: [&str; 6] = ["xy", "xu", "xv", "yu", "yv", "uv"];

const XY: usize = 0;
const XU: usize = 1;
const XV: usize = 2;
const YU: usize = 3;
const YV: usize = 4;
const UV: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct MapR4R2 {
    f: Poly4,
    g: Poly4,
    source_text: String,
}

impl MapR4R2 {
    /// Fails with [`Error::NonzeroConstantTerm`] unless `F(0) = 0`.
    pub fn new(f: Poly4, g: Poly4, source_text: impl Into<String>) -> Result<Self> {
        if f.constant_term() != 0.0 || g.constant_term() != 0.0 {
            return Err(Error::NonzeroConstantTerm);
        }
        Ok(Self {
            f,
            g,
            source_text: source_text.into(),
        })
    }

    pub fn f(&self) -> &Poly4 {
        &self.f
    }

    pub fn g(&self) -> &Poly4 {
        &self.g
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn with_source(mut self, source_text: impl Into<String>) -> Self {
        self.source_text = source_text.into();
        self
    }

    /// Same polynomials, compared without regard to the source text.
    pub fn same_map(&self, other: &MapR4R2) -> bool {
        self.f == other.f && self.g == other.g
    }
}

impl fmt::Display for MapR4R2 {
    /// Real-pair DSL form, `f = ...; g = ...`.
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "f = {}; g = {}", self.f, self.g)
    }
}

/// `F∘r` with `r(x, y, u, v) = (x, -y, u, v)`.
pub fn mirror(map: &MapR4R2) -> MapR4R2 {
    MapR4R2 {
        f: map.f.negate_var(Var::Y),
        g: map.g.negate_var(Var::Y),
        source_text: format!("mirror({})", map.source_text),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PluckerMinors(pub [Poly4; 6]);

impl PluckerMinors {
    pub fn get(&self, name: &str) -> Option<&Poly4> {
        MINOR_NAMES.iter().position(|n| *n == name).map(|i| &self.0[i])
    }
}

pub fn plucker_minors(map: &MapR4R2) -> PluckerMinors {
    let df = map.f.gradient();
    let dg = map.g.gradient();
    PluckerMinors(MINOR_PAIRS.map(|(i, j)| &df[i] * &dg[j] - &df[j] * &dg[i]))
}

/// Which of the two Gauss triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Half {
    /// `(A+, B+, C+)`, whose Hopf invariant is λ.
    SelfDual,
    /// `(A-, B-, C-)`, whose Hopf invariant is ρ.
    AntiSelfDual,
}

impl Half {
    pub fn label(self) -> &'static str {
        match self {
            Half::SelfDual => "plus",
            Half::AntiSelfDual => "minus",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussComponents {
    pub a_plus: Poly4,
    pub b_plus: Poly4,
    pub c_plus: Poly4,
    pub a_minus: Poly4,
    pub b_minus: Poly4,
    pub c_minus: Poly4,
}

impl GaussComponents {
    pub fn from_minors(m: &PluckerMinors) -> Self {
        let p = &m.0;
        Self {
            a_plus: &p[XY] + &p[UV],
            b_plus: &p[XU] - &p[YV],
            c_plus: &p[XV] + &p[YU],
            a_minus: &p[XY] - &p[UV],
            b_minus: &p[XU] + &p[YV],
            c_minus: &p[XV] - &p[YU],
        }
    }

    pub fn triple(&self, half: Half) -> [&Poly4; 3] {
        match half {
            Half::SelfDual => [&self.a_plus, &self.b_plus, &self.c_plus],
            Half::AntiSelfDual => [&self.a_minus, &self.b_minus, &self.c_minus],
        }
    }
}

pub fn gauss_components(map: &MapR4R2) -> GaussComponents {
    GaussComponents::from_minors(&plucker_minors(map))
}

/// A Gauss triple and its twelve partial derivatives, compiled for repeated
/// evaluation.
#[derive(Clone, Debug)]
pub struct CompiledTriple {
    value: [CompiledPoly; 3],
    grad: [[CompiledPoly; 4]; 3],
    max_exp: usize,
}

/// Value `T` and Jacobian `dT` (rows = components) of a triple at a point.
#[derive(Clone, Copy, Debug)]
pub struct TripleJet {
    pub value: [f64; 3],
    pub jac: [Vec4; 3],
}

impl TripleJet {
    pub fn norm(&self) -> f64 {
        let [a, b, c] = self.value;
        (a * a + b * b + c * c).sqrt()
    }

    /// The 2-form `(A dB∧dC + B dC∧dA + C dA∧dB) / |T|³` in the basis
    /// `dx∧dy, dx∧du, dx∧dv, dy∧du, dy∧dv, du∧dv`. This is the pull-back of
    /// the standard (area 4π) area form of S².
    pub fn omega(&self) -> [f64; 6] {
        let [a, b, c] = self.value;
        let [da, db, dc] = &self.jac;
        let n = self.norm();
        let inv = 1.0 / (n * n * n);
        MINOR_PAIRS.map(|(i, j)| {
            let bc = db[i] * dc[j] - db[j] * dc[i];
            let ca = dc[i] * da[j] - dc[j] * da[i];
            let ab = da[i] * db[j] - da[j] * db[i];
            (a * bc + b * ca + c * ab) * inv
        })
    }
}

impl CompiledTriple {
    pub fn new(components: &GaussComponents, half: Half) -> Self {
        let t = components.triple(half);
        let value = t.map(CompiledPoly::new);
        let grad = t.map(|p| p.gradient().map(|d| CompiledPoly::new(&d)));
        let max_exp = value.iter().map(CompiledPoly::max_exp).max().unwrap_or(0);
        Self {
            value,
            grad,
            max_exp,
        }
    }

    pub fn power_table(&self) -> PowerTable {
        PowerTable::new(self.max_exp)
    }

    pub fn jet_with(&self, table: &mut PowerTable, point: &Vec4) -> TripleJet {
        table.fill(point);
        TripleJet {
            value: std::array::from_fn(|k| self.value[k].eval_with(table)),
            jac: std::array::from_fn(|k| std::array::from_fn(|i| self.grad[k][i].eval_with(table))),
        }
    }

    pub fn jet(&self, point: &Vec4) -> TripleJet {
        let mut t = self.power_table();
        self.jet_with(&mut t, point)
    }
}

/// `DF` compiled: the eight first partials of `f` and `g`.
#[derive(Clone, Debug)]
pub struct CompiledJacobian {
    df: [CompiledPoly; 4],
    dg: [CompiledPoly; 4],
    max_exp: usize,
}

impl CompiledJacobian {
    pub fn new(map: &MapR4R2) -> Self {
        let df = map.f.gradient().map(|p| CompiledPoly::new(&p));
        let dg = map.g.gradient().map(|p| CompiledPoly::new(&p));
        let max_exp = df
            .iter()
            .chain(&dg)
            .map(CompiledPoly::max_exp)
            .max()
            .unwrap_or(0);
        Self { df, dg, max_exp }
    }

    pub fn power_table(&self) -> PowerTable {
        PowerTable::new(self.max_exp)
    }

    pub fn eval_with(&self, table: &mut PowerTable, point: &Vec4) -> [Vec4; 2] {
        table.fill(point);
        [
            std::array::from_fn(|i| self.df[i].eval_with(table)),
            std::array::from_fn(|i| self.dg[i].eval_with(table)),
        ]
    }

    pub fn eval(&self, point: &Vec4) -> [Vec4; 2] {
        let mut t = self.power_table();
        self.eval_with(&mut t, point)
    }
}

pub fn minors_of_rows(rows: &[Vec4; 2]) -> [f64; 6] {
    let [a, b] = rows;
    MINOR_PAIRS.map(|(i, j)| a[i] * b[j] - a[j] * b[i])
}

/// Both triples computed numerically from the minors of `DF(point)`.
pub fn triples_from_minors(p: &[f64; 6]) -> ([f64; 3], [f64; 3]) {
    (
        [p[XY] + p[UV], p[XU] - p[YV], p[XV] + p[YU]],
        [p[XY] - p[UV], p[XU] + p[YV], p[XV] - p[YU]],
    )
}

/// Relative defect of `A² + B² + C² = |∇f|²|∇g|² - (∇f·∇g)²`, with the
/// left side evaluated from the symbolic triples and the right side from the
/// numeric gradients. Points where both sides fall below 1e-30 are skipped.
pub fn gram_norm_defect(map: &MapR4R2, points: &[Vec4]) -> f64 {
    norm_defect_of(&gauss_components(map), map, points)
}

/// [`gram_norm_defect`] with the triples supplied separately from the map
/// whose gradients form the right-hand side.
pub fn norm_defect_of(comps: &GaussComponents, map: &MapR4R2, points: &[Vec4]) -> f64 {
    let plus = CompiledTriple::new(comps, Half::SelfDual);
    let minus = CompiledTriple::new(comps, Half::AntiSelfDual);
    let jac = CompiledJacobian::new(map);
    let mut worst = 0.0_f64;
    for pt in points {
        let [df, dg] = jac.eval(pt);
        let rhs = dot4(&df, &df) * dot4(&dg, &dg) - dot4(&df, &dg).powi(2);
        for t in [&plus, &minus] {
            let v = t.value.each_ref().map(|c| c.eval(pt));
            let lhs = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let scale = lhs.max(rhs);
            if scale < 1e-30 {
                continue;
            }
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RelationDefect {
    /// max |p_xy p_uv - p_xu p_yv + p_xv p_yu|
    pub absolute: f64,
    /// the same, divided pointwise by Σ p_ij² (points with Σ p_ij² < 1e-30 skipped)
    pub relative: f64,
}

pub fn plucker_relation_defect(map: &MapR4R2, points: &[Vec4]) -> RelationDefect {
    let jac = CompiledJacobian::new(map);
    let mut out = RelationDefect::default();
    for pt in points {
        let p = minors_of_rows(&jac.eval(pt));
        let rel = p[XY] * p[UV] - p[XU] * p[YV] + p[XV] * p[YU];
        let scale: f64 = p.iter().map(|t| t * t).sum();
        out.absolute = out.absolute.max(rel.abs());
        if scale >= 1e-30 {
            out.relative = out.relative.max(rel.abs() / scale);
        }
    }
    out
}

pub const DEFAULT_ISOLATION_SAMPLES: usize = 100_000;
pub const DEFAULT_ISOLATION_THRESHOLD: f64 = 1e-12;

/// Minimum of `Σ p_ij²` over a Halton sample of the sphere of the given
/// radius. Small values indicate a critical point of `F` near that sphere.
pub fn verify_isolated(map: &MapR4R2, radius: f64, n_samples: usize) -> f64 {
    let jac = CompiledJacobian::new(map);
    let mut table = jac.power_table();
    halton_sphere(n_samples.max(1))
        .iter()
        .map(|s| {
            let pt = scale4(s.coords(), radius);
            minors_of_rows(&jac.eval_with(&mut table, &pt))
                .iter()
                .map(|t| t * t)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn minors_at(jac: &CompiledJacobian, table: &mut PowerTable, pt: &Vec4) -> [f64; 6] {
    minors_of_rows(&jac.eval_with(table, pt))
}

fn sum_sq(p: &[f64; 6]) -> f64 {
    p.iter().map(|t| t * t).sum()
}

/// Orthonormal basis of the tangent space of the sphere at `x`.
fn tangent_basis(x: &Vec4) -> [Vec4; 3] {
    let n = scale4(x, 1.0 / norm4(x));
    let mut basis: Vec<Vec4> = Vec::with_capacity(3);
    for k in 0..4 {
        let mut w = [0.0; 4];
        w[k] = 1.0;
        w = crate::sphere::axpy4(&w, -dot4(&w, &n), &n);
        for b in &basis {
            w = crate::sphere::axpy4(&w, -dot4(&w, b), b);
        }
        let len = norm4(&w);
        if len > 1e-6 && basis.len() < 3 {
            basis.push(scale4(&w, 1.0 / len));
        }
    }
    [basis[0], basis[1], basis[2]]
}

/// Levenberg–Marquardt descent of `Σ p_ij²` on the sphere of radius `radius`
/// starting from `start`. Returns the final value.
fn descend_minors(jac: &CompiledJacobian, table: &mut PowerTable, start: Vec4, radius: f64, iters: usize) -> f64 {
    let mut x = start;
    let mut p = minors_at(jac, table, &x);
    let mut val = sum_sq(&p);
    let mut damping = 1e-3;
    let h = 1e-6 * radius;
    for _ in 0..iters {
        if val == 0.0 {
            break;
        }
        let t = tangent_basis(&x);
        // Columns: derivative of the minors along each tangent direction.
        let mut cols = [[0.0; 6]; 3];
        for (c, dir) in cols.iter_mut().zip(&t) {
            let fwd = minors_at(jac, table, &crate::sphere::axpy4(&x, h, dir));
            let bwd = minors_at(jac, table, &crate::sphere::axpy4(&x, -h, dir));
            for k in 0..6 {
                c[k] = (fwd[k] - bwd[k]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtp = [0.0; 3];
        for i in 0..3 {
            jtp[i] = (0..6).map(|k| cols[i][k] * p[k]).sum();
            for j in 0..3 {
                jtj[i][j] = (0..6).map(|k| cols[i][k] * cols[j][k]).sum();
            }
        }
        let trace = jtj[0][0] + jtj[1][1] + jtj[2][2];
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += damping * trace.max(1e-300);
            }
            let Some(delta) = solve_sym3(&m, &jtp) else {
                damping *= 10.0;
                continue;
            };
            let mut y = x;
            for (d, dir) in delta.iter().zip(&t) {
                y = crate::sphere::axpy4(&y, -d, dir);
            }
            let y = scale4(&y, radius / norm4(&y));
            let q = minors_at(jac, table, &y);
            let v = sum_sq(&q);
            if v < val {
                x = y;
                p = q;
                val = v;
                damping = (damping * 0.3).max(1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    val
}

fn solve_sym3(m: &[[f64; 3]; 3], r: &[f64; 3]) -> Option<[f64; 3]> {
    let det = crate::sphere::det3(m);
    if !det.is_finite() || det.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = *m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = crate::sphere::det3(&mk) / det;
    }
    Some(out)
}

/// Number of lowest samples that [`isolation_minimum`] refines locally.
pub const ISOLATION_REFINE_STARTS: usize = 16;

/// Like [`verify_isolated`], but additionally runs a local least-squares
/// descent from the lowest samples. Sampling alone cannot see a critical
/// curve or surface that slips between sample points; the descent drives
/// such values to (numerical) zero while leaving a genuinely positive
/// minimum positive.
pub fn isolation_minimum(map: &MapR4R2, radius: f64, n_samples: usize) -> f64 {
    let jac = CompiledJacobian::new(map);
    let mut table = jac.power_table();
    let mut scored: Vec<(f64, Vec4)> = halton_sphere(n_samples.max(1))
        .iter()
        .map(|s| {
            let pt = scale4(s.coords(), radius);
            (sum_sq(&minors_at(&jac, &mut table, &pt)), pt)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sampled = scored[0].0;
    scored
        .iter()
        .take(ISOLATION_REFINE_STARTS)
        .map(|(_, pt)| descend_minors(&jac, &mut table, *pt, radius, 100))
        .fold(sampled, f64::min)
}

/// Ω of the chosen triple at `point`; see [`TripleJet::omega`].
pub fn omega_pullback(half: Half, map: &MapR4R2, point: &Vec4) -> Result<[f64; 6]> {
    let jet = CompiledTriple::new(&gauss_components(map), half).jet(point);
    let n = jet.norm();
    if n < 1e-12 {
        return Err(Error::ZeroTriple {
            norm: n,
            point: *point,
        });
    }
    Ok(jet.omega())
}

/// Orthonormal basis of the plane orthogonal to the rows of `DF`, i.e. of
/// `ker DF`. Returns `None` if `DF` has rank < 2.
pub fn kernel_plane(rows: &[Vec4; 2]) -> Option<[Vec4; 2]> {
    let scale = norm4(&rows[0]).max(norm4(&rows[1]));
    if scale == 0.0 {
        return None;
    }
    let mut basis: Vec<Vec4> = Vec::with_capacity(4);
    for r in rows {
        let mut w = *r;
        for b in &basis {
            w = crate::sphere::axpy4(&w, -dot4(&w, b), b);
        }
        let len = norm4(&w);
        if len <= 1e-10 * scale {
            return None;
        }
        basis.push(scale4(&w, 1.0 / len));
    }
    let mut candidates: Vec<Vec4> = (0..4)
        .map(|k| {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            for b in &basis {
                e = crate::sphere::axpy4(&e, -dot4(&e, b), b);
            }
            e
        })
        .collect();
    candidates.sort_by(|a, b| norm4(b).total_cmp(&norm4(a)));
    for mut e in candidates {
        for b in &basis {
            e = crate::sphere::axpy4(&e, -dot4(&e, b), b);
        }
        let len = norm4(&e);
        if len > 1e-6 {
            basis.push(scale4(&e, 1.0 / len));
        }
        if basis.len() == 4 {
            break;
        }
    }
    Some([basis[2], basis[3]])
}

/// `(σ1 - σ2) / (σ1 + σ2)` for the derivative of `T/|T|` restricted to the
/// plane spanned by `plane`.
fn restricted_defect(jet: &TripleJet, plane: &[Vec4; 2]) -> f64 {
    let n = jet.norm();
    let dir = jet.value.map(|t| t / n);
    // d(T/|T|) = (I - dir dirᵀ) dT / |T|, applied to each plane vector.
    let cols: [[f64; 3]; 2] = plane.map(|k| {
        let dt: [f64; 3] = std::array::from_fn(|r| dot4(&jet.jac[r], &k));
        let along = dir[0] * dt[0] + dir[1] * dt[1] + dir[2] * dt[2];
        std::array::from_fn(|r| (dt[r] - along * dir[r]) / n)
    });
    let g11 = crate::sphere::dot3(&cols[0], &cols[0]);
    let g22 = crate::sphere::dot3(&cols[1], &cols[1]);
    let g12 = crate::sphere::dot3(&cols[0], &cols[1]);
    let half_tr = 0.5 * (g11 + g22);
    let disc = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
    let s1 = (half_tr + disc).max(0.0).sqrt();
    let s2 = (half_tr - disc).max(0.0).sqrt();
    if s1 + s2 == 0.0 {
        0.0
    } else {
        (s1 - s2) / (s1 + s2)
    }
}

/// Departure from (anti-)conformality of each Gauss factor along the fiber
/// through `point`: `(self-dual defect, anti-self-dual defect)`.
pub fn conformality_defect(map: &MapR4R2, point: &Vec4) -> Result<(f64, f64)> {
    let rows = CompiledJacobian::new(map).eval(point);
    let plane = kernel_plane(&rows).ok_or(Error::RankDeficient { point: *point })?;
    let comps = gauss_components(map);
    let mut out = [0.0; 2];
    for (k, half) in [Half::SelfDual, Half::AntiSelfDual].into_iter().enumerate() {
        let jet = CompiledTriple::new(&comps, half).jet(point);
        let n = jet.norm();
        if n < 1e-12 {
            return Err(Error::ZeroTriple {
                norm: n,
                point: *point,
            });
        }
        out[k] = restricted_defect(&jet, &plane);
    }
    Ok((out[0], out[1]))
}
