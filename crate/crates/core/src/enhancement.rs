//! λ(F), ρ(F), μ = λ + ρ and the cross-checks that accompany them.

use std::time::Instant;

use serde::Serialize;

use crate::dsl::brieskorn_exponents;
use crate::error::{Error, Result};
use crate::hopf::{
    hopf_via_linking, hopf_via_whitehead, normalized_map, HopfEstimate, LinkingConfig, TraceConfig,
    WhiteheadConfig, DEFAULT_GUARD,
};
use crate::mapcore::{
    gauss_components, gram_norm_defect, mirror, plucker_relation_defect, isolation_minimum, Half, MapR4R2,
    DEFAULT_ISOLATION_SAMPLES, DEFAULT_ISOLATION_THRESHOLD,
};
use crate::sphere::{halton_sphere, scale4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Linking,
    Whitehead,
    Both,
}

impl MethodChoice {
    pub fn uses_linking(self) -> bool {
        matches!(self, MethodChoice::Linking | MethodChoice::Both)
    }

    pub fn uses_whitehead(self) -> bool {
        matches!(self, MethodChoice::Whitehead | MethodChoice::Both)
    }
}

#[derive(Clone, Debug)]
pub struct EnhanceConfig {
    pub method: MethodChoice,
    /// Radius of the sphere around the origin on which the Gauss map is read.
    pub radius: f64,
    pub seed: u64,
    /// Whitehead point pairs.
    pub budget: u64,
    /// Curve tracing step.
    pub step: f64,
    pub cutoff: f64,
    pub isolation_samples: usize,
    pub isolation_threshold: f64,
    pub mirror_check: bool,
    /// Second radius for the radius-invariance check.
    pub compare_radius: Option<f64>,
    pub record_timings: bool,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            method: MethodChoice::Linking,
            radius: 1.0,
            seed: 0,
            budget: 10_000_000,
            step: 0.02,
            cutoff: 1e-2,
            isolation_samples: DEFAULT_ISOLATION_SAMPLES,
            isolation_threshold: DEFAULT_ISOLATION_THRESHOLD,
            mirror_check: true,
            compare_radius: None,
            record_timings: false,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {}", self.radius)));
        }
        if let Some(r) = self.compare_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("comparison radius must be positive, got {r}")));
            }
        }
        if self.budget < 10_000 {
            return Err(Error::InvalidConfig(format!("budget must be at least 10^4, got {}", self.budget)));
        }
        if !(self.step > 0.0 && self.step <= 0.2) {
            return Err(Error::InvalidConfig(format!("step must lie in (0, 0.2], got {}", self.step)));
        }
        Ok(())
    }

    fn linking(&self) -> LinkingConfig {
        LinkingConfig {
            seed: self.seed,
            trace: TraceConfig {
                step: self.step,
                ..TraceConfig::default()
            },
            ..LinkingConfig::default()
        }
    }

    fn whitehead(&self) -> WhiteheadConfig {
        WhiteheadConfig {
            budget: self.budget,
            seed: self.seed,
            cutoff: self.cutoff,
            ..WhiteheadConfig::default()
        }
    }
}

/// Estimates of one Hopf invariant from each enabled method.
#[derive(Clone, Debug)]
pub struct HalfEstimates {
    pub linking: Option<HopfEstimate>,
    pub whitehead: Option<HopfEstimate>,
}

impl HalfEstimates {
    /// The linking estimate when available, the Whitehead one otherwise.
    pub fn primary(&self) -> &HopfEstimate {
        self.linking
            .as_ref()
            .or(self.whitehead.as_ref())
            .expect("at least one method runs")
    }
}

pub fn estimate_half(map: &MapR4R2, half: Half, cfg: &EnhanceConfig, radius: f64) -> Result<HalfEstimates> {
    let comps = gauss_components(map);
    let sphere_map = normalized_map(&comps, half, radius, DEFAULT_GUARD);
    let linking = cfg
        .method
        .uses_linking()
        .then(|| hopf_via_linking(&sphere_map, &cfg.linking()))
        .transpose()?;
    let whitehead = cfg
        .method
        .uses_whitehead()
        .then(|| hopf_via_whitehead(&sphere_map, &cfg.whitehead()))
        .transpose()?;
    Ok(HalfEstimates { linking, whitehead })
}

fn ensure_isolated(map: &MapR4R2, cfg: &EnhanceConfig) -> Result<()> {
    let min = isolation_minimum(map, cfg.radius, cfg.isolation_samples);
    if min <= cfg.isolation_threshold {
        return Err(Error::NotIsolated {
            min,
            threshold: cfg.isolation_threshold,
        });
    }
    Ok(())
}

/// λ(F): Hopf invariant of the self-dual triple.
pub fn lambda_of(map: &MapR4R2, cfg: &EnhanceConfig) -> Result<HopfEstimate> {
    ensure_isolated(map, cfg)?;
    Ok(estimate_half(map, Half::SelfDual, cfg, cfg.radius)?.primary().clone())
}

/// ρ(F): Hopf invariant of the anti-self-dual triple.
pub fn rho_of(map: &MapR4R2, cfg: &EnhanceConfig) -> Result<HopfEstimate> {
    ensure_isolated(map, cfg)?;
    Ok(estimate_half(map, Half::AntiSelfDual, cfg, cfg.radius)?.primary().clone())
}

/// μ = λ + ρ.
pub fn mu_of(map: &MapR4R2, cfg: &EnhanceConfig) -> Result<i64> {
    Ok(lambda_of(map, cfg)?.value + rho_of(map, cfg)?.value)
}

/// Dimension of `C[z, w] / (z^(p-1), w^(q-1))`, the Milnor number of
/// `z^p - w^q`, by counting monomials outside the Jacobian ideal.
pub fn brieskorn_mu(p: u32, q: u32) -> u64 {
    assert!(p >= 1 && q >= 1, "exponents must be positive");
    let in_ideal = |i: u32, j: u32| i >= p - 1 || j >= q - 1;
    let mut count = 0;
    for i in 0..p {
        for j in 0..q {
            if !in_ideal(i, j) {
                count += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Timings {
    pub isolation_ms: f64,
    pub lambda_ms: f64,
    pub rho_ms: f64,
    pub checks_ms: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EnhancementReport {
    pub map_source: String,
    pub radius: f64,
    pub seed: u64,
    pub method: MethodChoice,
    pub lambda: Option<i64>,
    pub rho: Option<i64>,
    pub mu: Option<i64>,
    pub lambda_estimate: Option<HopfEstimate>,
    pub rho_estimate: Option<HopfEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_whitehead: Option<HopfEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_whitehead: Option<HopfEstimate>,
    pub mirror_lambda: Option<i64>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl EnhancementReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn isolated(&self) -> bool {
        self.check("isolated").is_some_and(|c| c.pass)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn agreement_check(name: &str, est: &HalfEstimates) -> Option<Check> {
    let (l, w) = (est.linking.as_ref()?, est.whitehead.as_ref()?);
    let gap = (w.raw - l.value as f64).abs();
    Some(Check::new(
        name,
        w.value == l.value && gap < 0.25,
        format!(
            "linking {} vs whitehead raw {:.4} (stderr {:.4})",
            l.value,
            w.raw,
            w.diagnostics.standard_error.unwrap_or(f64::NAN)
        ),
    ))
}

/// Runs λ, ρ and every applicable cross-check. Check failures are recorded in
/// the report; numerical failures of the Hopf computations are returned as
/// errors.
pub fn full_report(map: &MapR4R2, cfg: &EnhanceConfig) -> Result<EnhancementReport> {
    cfg.validate()?;
    let mut report = EnhancementReport {
        map_source: map.source_text().to_string(),
        radius: cfg.radius,
        seed: cfg.seed,
        method: cfg.method,
        lambda: None,
        rho: None,
        mu: None,
        lambda_estimate: None,
        rho_estimate: None,
        lambda_whitehead: None,
        rho_whitehead: None,
        mirror_lambda: None,
        checks: Vec::new(),
        warnings: Vec::new(),
        timings: None,
    };
    if cfg.radius != 1.0 && brieskorn_exponents(map.source_text()).is_none() {
        report.warnings.push(
            "for maps that are not quasi-homogeneous the Milnor radius may be smaller than the working radius"
                .into(),
        );
    }
    let mut timings = Timings::default();

    let t = Instant::now();
    let min = isolation_minimum(map, cfg.radius, cfg.isolation_samples);
    timings.isolation_ms = ms(t);
    let isolated = min > cfg.isolation_threshold;
    report.checks.push(Check::new(
        "isolated",
        isolated,
        format!(
            "min sum of squared minors on radius-{} sphere: {:.3e} (threshold {:.0e})",
            cfg.radius, min, cfg.isolation_threshold
        ),
    ));
    if !isolated {
        if cfg.record_timings {
            report.timings = Some(timings);
        }
        return Ok(report);
    }

    let t = Instant::now();
    let lam = estimate_half(map, Half::SelfDual, cfg, cfg.radius)?;
    timings.lambda_ms = ms(t);
    let t = Instant::now();
    let rho = estimate_half(map, Half::AntiSelfDual, cfg, cfg.radius)?;
    timings.rho_ms = ms(t);

    let (l, r) = (lam.primary().value, rho.primary().value);
    report.lambda = Some(l);
    report.rho = Some(r);
    report.mu = Some(l + r);

    let t = Instant::now();
    let points: Vec<_> = halton_sphere(256)
        .iter()
        .map(|s| scale4(s.coords(), cfg.radius))
        .collect();
    let norm = gram_norm_defect(map, &points);
    report.checks.push(Check::new(
        "norm-identity",
        norm < 1e-9,
        format!("max relative defect {norm:.3e}"),
    ));
    let rel = plucker_relation_defect(map, &points);
    report.checks.push(Check::new(
        "plucker-relation",
        rel.relative < 1e-9,
        format!("max relative defect {:.3e}", rel.relative),
    ));

    if let (Some(a), Some(b)) = (&lam.linking, &rho.linking) {
        let worst = a.residual.max(b.residual);
        report.checks.push(Check::new(
            "linking-residual",
            worst < 0.1,
            format!("max per-pair residual {worst:.3e}"),
        ));
    }
    report.checks.extend(agreement_check("method-agreement-lambda", &lam));
    report.checks.extend(agreement_check("method-agreement-rho", &rho));

    if let Some((p, q)) = brieskorn_exponents(map.source_text()) {
        let expected = brieskorn_mu(p, q) as i64;
        report.checks.push(Check::new(
            "brieskorn-mu",
            expected == l + r,
            format!("mu = {} vs dim C[z,w]/(z^{}, w^{}) = {}", l + r, p - 1, q - 1, expected),
        ));
    }

    if cfg.mirror_check {
        let mirrored = mirror(map);
        let m = estimate_half(&mirrored, Half::SelfDual, cfg, cfg.radius)?.primary().value;
        report.mirror_lambda = Some(m);
        report.checks.push(Check::new(
            "mirror",
            m + l == l + r,
            format!("lambda(mirror) + lambda = {} + {} vs mu = {}", m, l, l + r),
        ));
        report.checks.push(Check::new(
            "mirror-swap",
            m == r,
            format!("lambda(mirror) = {m} vs rho = {r}"),
        ));
    }

    if let Some(other) = cfg.compare_radius {
        let lo = estimate_half(map, Half::SelfDual, cfg, other)?.primary().value;
        let ro = estimate_half(map, Half::AntiSelfDual, cfg, other)?.primary().value;
        report.checks.push(Check::new(
            "radius-invariance",
            lo == l && ro == r,
            format!("radius {}: (lambda, rho) = ({l}, {r}); radius {other}: ({lo}, {ro})", cfg.radius),
        ));
    }
    timings.checks_ms = ms(t);

    report.lambda_estimate = Some(lam.primary().clone());
    report.rho_estimate = Some(rho.primary().clone());
    if cfg.method == MethodChoice::Both {
        report.lambda_whitehead = lam.whitehead;
        report.rho_whitehead = rho.whitehead;
    }
    if cfg.record_timings {
        report.timings = Some(timings);
    }
    Ok(report)
}
