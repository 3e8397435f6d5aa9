//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so that every criterion prints exactly one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use enhance_core::combinat::{hirasawa_lambda, parse_braid, plumbing_invariants, plumbing_mirror, BandSign, PlumbingTree};
use enhance_core::dsl::parse_map;
use enhance_core::enhancement::{full_report, lambda_of, EnhanceConfig, MethodChoice};
use enhance_core::hopf::{hopf_via_whitehead, normalized_map, WhiteheadConfig, DEFAULT_GUARD};
use enhance_core::identities::{identity_suite, IDENTITY_TOLERANCE};
use enhance_core::mapcore::{conformality_defect, gauss_components, mirror, Half, MapR4R2};
use enhance_core::sphere::SpherePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

const ZW: &str = "F = z*w";
const ZW_BAR: &str = "F = z*conj(w)";
const CUSP: &str = "F = z^2 - w^3";
const LINEAR: &str = "f = x; g = y";

fn map(src: &str) -> MapR4R2 {
    parse_map(src).expect("acceptance maps parse").map
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run_cli(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_enhance"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "enhance {args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("bad JSON from {args:?}: {e}"))
}

fn int_field(v: &Value, key: &str) -> Result<i64, String> {
    v[key].as_i64().ok_or_else(|| format!("missing integer `{key}`"))
}

fn residual_of(v: &Value, key: &str) -> Result<f64, String> {
    v[key]["residual"]
        .as_f64()
        .ok_or_else(|| format!("missing `{key}.residual`"))
}

fn linking_cfg() -> EnhanceConfig {
    EnhanceConfig {
        method: MethodChoice::Linking,
        ..EnhanceConfig::default()
    }
}

fn known_lambda() -> Outcome {
    let mut parts = Vec::new();
    for (src, expected) in [(ZW, 0), (ZW_BAR, 1), (CUSP, 0)] {
        let t = Instant::now();
        let v = run_cli(&["enhance", src, "--method", "linking", "--json"])?;
        let elapsed = t.elapsed();
        let lambda = int_field(&v, "lambda")?;
        let res = residual_of(&v, "lambda_estimate")?.max(residual_of(&v, "rho_estimate")?);
        ensure(lambda == expected, format!("{src}: lambda = {lambda}, expected {expected}"))?;
        ensure(res < 0.1, format!("{src}: residual {res:.3e}"))?;
        ensure(elapsed < Duration::from_secs(30), format!("{src}: took {elapsed:?}"))?;
        parts.push(format!("{src} -> {lambda} (res {res:.1e}, {:.2}s)", elapsed.as_secs_f64()));
    }
    Ok(parts.join("; "))
}

fn milnor_consistency() -> Outcome {
    let cfg = linking_cfg();
    let cusp = full_report(&map(CUSP), &cfg).map_err(|e| e.to_string())?;
    // Milnor number of z^p - w^q, counted independently of the library.
    let cusp_mu = (2 - 1) * (3 - 1);
    ensure(cusp.rho == Some(2), format!("rho(cusp) = {:?}", cusp.rho))?;
    ensure(
        cusp.lambda.zip(cusp.rho).map(|(l, r)| l + r) == Some(cusp_mu),
        format!("lambda + rho = {:?} + {:?}", cusp.lambda, cusp.rho),
    )?;
    ensure(
        enhance_core::enhancement::brieskorn_mu(2, 3) == cusp_mu as u64,
        "brieskorn_mu(2, 3) != 2",
    )?;
    let zw = full_report(&map(ZW), &cfg).map_err(|e| e.to_string())?;
    ensure(zw.mu == Some(1), format!("mu(zw) = {:?}", zw.mu))?;
    let lin = full_report(&map(LINEAR), &cfg).map_err(|e| e.to_string())?;
    ensure(
        (lin.lambda, lin.rho, lin.mu) == (Some(0), Some(0), Some(0)),
        format!("linear: {:?}", (lin.lambda, lin.rho, lin.mu)),
    )?;
    Ok("rho(z^2-w^3)=2=mu, mu(zw)=1, linear 0/0/0".into())
}

fn mirror_relation() -> Outcome {
    let cfg = linking_cfg();
    let mut parts = Vec::new();
    for src in [ZW, ZW_BAR, CUSP] {
        let f = map(src);
        let r = full_report(&f, &cfg).map_err(|e| e.to_string())?;
        let m = lambda_of(&mirror(&f), &cfg).map_err(|e| e.to_string())?.value;
        let (l, rho, mu) = (r.lambda.unwrap(), r.rho.unwrap(), r.mu.unwrap());
        ensure(m + l == mu, format!("{src}: {m} + {l} != {mu}"))?;
        ensure(m == rho, format!("{src}: lambda(mirror) = {m} != rho = {rho}"))?;
        parts.push(format!("{src}: {m}+{l}={mu}"));
    }
    Ok(parts.join("; "))
}

fn whitehead_oracle() -> Outcome {
    let comps = gauss_components(&map(ZW));
    let cfg = WhiteheadConfig {
        seed: 0,
        ..WhiteheadConfig::default()
    };
    ensure(cfg.budget == 10_000_000, "default budget changed")?;
    let t = Instant::now();
    let hopf = normalized_map(&comps, Half::AntiSelfDual, 1.0, DEFAULT_GUARD);
    let est = hopf_via_whitehead(&hopf, &cfg).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let se = est.diagnostics.standard_error.unwrap_or(f64::INFINITY);
    ensure((est.raw - 1.0).abs() <= 0.25, format!("raw {:.4}", est.raw))?;
    ensure(se < 0.15, format!("stderr {se:.4}"))?;
    ensure(elapsed < Duration::from_secs(600), format!("took {elapsed:?}"))?;
    let constant = normalized_map(&comps, Half::SelfDual, 1.0, DEFAULT_GUARD);
    let zero = hopf_via_whitehead(&constant, &cfg).map_err(|e| e.to_string())?;
    ensure(zero.raw.abs() <= 0.05, format!("constant triple raw {:.4}", zero.raw))?;
    Ok(format!(
        "raw {:.4} +- {se:.4} ({:.2}s), constant {:.4}",
        est.raw,
        elapsed.as_secs_f64(),
        zero.raw
    ))
}

fn method_agreement() -> Outcome {
    let cfg = EnhanceConfig {
        method: MethodChoice::Both,
        ..EnhanceConfig::default()
    };
    let mut parts = Vec::new();
    for src in [ZW, ZW_BAR, CUSP, LINEAR] {
        let r = full_report(&map(src), &cfg).map_err(|e| e.to_string())?;
        for (name, link, wh) in [
            ("lambda", &r.lambda_estimate, &r.lambda_whitehead),
            ("rho", &r.rho_estimate, &r.rho_whitehead),
        ] {
            let (link, wh) = (link.as_ref().unwrap(), wh.as_ref().unwrap());
            ensure(
                wh.raw.round() as i64 == link.value,
                format!("{src} {name}: whitehead {:.3} vs linking {}", wh.raw, link.value),
            )?;
        }
        parts.push(format!("{src} ({}, {})", r.lambda.unwrap(), r.rho.unwrap()));
    }
    Ok(parts.join("; "))
}

fn identity_suite_check() -> Outcome {
    let t = Instant::now();
    let rows = identity_suite(20, 0, 1000, None);
    let elapsed = t.elapsed();
    let random: Vec<_> = rows.iter().filter(|r| r.map.starts_with("random")).collect();
    let maps = random.iter().map(|r| &r.map).collect::<std::collections::BTreeSet<_>>().len();
    ensure(maps == 20, format!("{maps} random maps"))?;
    let worst = rows
        .iter()
        .filter(|r| r.check != "dsl-round-trip")
        .map(|r| r.value)
        .fold(0.0, f64::max);
    ensure(rows.iter().all(|r| r.pass), "a row failed")?;
    ensure(worst < IDENTITY_TOLERANCE, format!("worst relative defect {worst:.3e}"))?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("worst {worst:.2e} over {} rows ({:.2}s)", rows.len(), elapsed.as_secs_f64()))
}

fn robustness() -> Outcome {
    let f = map(CUSP);
    let mut seen = Vec::new();
    let mut pairs = Vec::new();
    for radius in [0.5, 1.0] {
        for seed in 1..=5 {
            let cfg = EnhanceConfig {
                radius,
                seed,
                ..linking_cfg()
            };
            let est = lambda_of(&f, &cfg).map_err(|e| e.to_string())?;
            pairs.push(est.diagnostics.regular_values.clone());
            seen.push(est.value);
        }
    }
    pairs.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    pairs.dedup();
    ensure(pairs.len() >= 5, "regular-value pairs were not distinct")?;
    ensure(seen.iter().all(|&v| v == seen[0]), format!("values {seen:?}"))?;
    Ok(format!("lambda = {} for {} runs", seen[0], seen.len()))
}

fn braid_table() -> Outcome {
    for (word, expected) in [("B2: s1 s1 s1", 0), ("B2: s1", 2), ("B3: s1 s2^-1", 4), ("B3:", 4)] {
        let b = parse_braid(word).map_err(|e| e.to_string())?;
        let got = hirasawa_lambda(&b);
        ensure(got == expected, format!("{word}: {got} != {expected}"))?;
    }
    Ok("4/4 table entries".into())
}

fn random_tree(rng: &mut ChaCha8Rng) -> PlumbingTree {
    let n = rng.gen_range(1..=25);
    let signs = (0..n)
        .map(|_| if rng.gen_bool(0.5) { BandSign::Positive } else { BandSign::Negative })
        .collect();
    let edges = (1..n).map(|k| [rng.gen_range(0..k), k]).collect();
    PlumbingTree { signs, edges }
}

fn plumbing_bookkeeping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let t = random_tree(&mut rng);
        let negatives = t.signs.iter().filter(|s| matches!(s, BandSign::Negative)).count();
        let inv = plumbing_invariants(&t).map_err(|e| e.to_string())?;
        let m = plumbing_invariants(&plumbing_mirror(&t)).map_err(|e| e.to_string())?;
        ensure(inv.lambda == negatives, "lambda != #negatives")?;
        ensure(inv.mu == t.signs.len(), "mu != #nodes")?;
        ensure(inv.lambda + m.lambda == inv.mu, "mirror relation")?;
        ensure(inv.lambda <= inv.mu, "lambda > mu")?;
    }
    Ok("100 trees".into())
}

fn conformality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for src in [ZW, CUSP] {
        let f = map(src);
        let mut used = 0;
        while used < 100 {
            let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let Some(p) = SpherePoint::normalize(raw) else { continue };
            match conformality_defect(&f, p.coords()) {
                Ok((plus, minus)) => {
                    worst = worst.max(plus).max(minus);
                    used += 1;
                }
                Err(_) => continue,
            }
        }
    }
    ensure(worst < 1e-6, format!("worst defect {worst:.3e}"))?;
    Ok(format!("worst defect {worst:.2e}"))
}

fn determinism() -> Outcome {
    let args = ["enhance", CUSP, "--method", "both", "--seed", "42", "--json"];
    let mut a = run_cli(&args)?;
    let mut b = run_cli(&args)?;
    for v in [&mut a, &mut b] {
        v.as_object_mut().ok_or("not an object")?.remove("timestamp");
    }
    ensure(a == b, "JSON differs between runs")?;
    Ok("identical modulo timestamp".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("known enhancement values", known_lambda),
        ("milnor-number consistency", milnor_consistency),
        ("mirror relation", mirror_relation),
        ("whitehead-integral oracle", whitehead_oracle),
        ("method agreement", method_agreement),
        ("algebraic identity suite", identity_suite_check),
        ("regular-value and radius robustness", robustness),
        ("braid formula", braid_table),
        ("plumbing bookkeeping", plumbing_bookkeeping),
        ("conformality diagnostic", conformality),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
