use crate::args::{ConstantsArgs, ExplicitArgs, FamilyArgs, LemmaArg, MethodArg, VerifyArgs};
use crate::report::{fmt_opt, render_csv, Failure, Report, EXIT_VERIFY};
use ldl_core::constants::{
    aggregate_lower_order, catalog_names, compute_many, export_csv, lookup, AggregateOptions, AggregateTarget,
    CatalogRow, FamilyLowerOrder,
};
use ldl_core::explicit_formula::{
    evaluate_s_multi, required_prime_limit, MomentSource, SDecomposition, SOptions, TestFunctionPair,
};
use ldl_core::families::{builtin, FamilySpec, LemmaVariant, MomentTable};
use ldl_core::primes::{sieve_primes, Method, Truncation};
use ldl_core::suites::{self, Suite, SuiteOptions};

use serde_json::{json, Map, Value};
use std::fmt::Write;

type Out = Result<Report, Failure>;

fn variant(l: LemmaArg) -> LemmaVariant {
    match l {
        LemmaArg::Printed => LemmaVariant::Printed,
        LemmaArg::Verified => LemmaVariant::Verified,
    }
}

/// Built-in name or `@path` to a JSON config; the second value is the
/// config text, which enters the manifest digest.
pub fn load_family(spec: &str) -> Result<(FamilySpec, Option<String>), Failure> {
    match spec.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
            Ok((FamilySpec::from_json(&text)?, Some(text)))
        }
        None => Ok((builtin(spec)?, None)),
    }
}

pub fn constants(a: &ConstantsArgs) -> Out {
    let names: Vec<&str> = if a.name == "all" {
        catalog_names()
    } else {
        lookup(&a.name)?;
        vec![a.name.as_str()]
    };
    let trunc = match (a.prime_limit, a.first_primes) {
        (Some(_), Some(_)) => return Err(Failure::usage("--prime-limit and --first-primes conflict")),
        (Some(x), None) => Some(Truncation::PrimeLimit(x)),
        (None, Some(n)) => Some(Truncation::FirstPrimes(n)),
        (None, None) => None,
    };
    // Family constants keep their point-count truncations in a full listing.
    let family_trunc = if a.name == "all" { None } else { trunc };
    let methods = match a.method {
        MethodArg::Default => vec![],
        MethodArg::Direct => vec![Method::DirectSum],
        MethodArg::Closed => vec![Method::ClosedForm],
        MethodArg::Integral => vec![Method::Integral],
        MethodArg::Series => vec![Method::MomentSeries],
        MethodArg::Both => vec![Method::DirectSum, Method::ClosedForm],
    };
    let results = compute_many(&names, trunc, family_trunc, &methods)?;
    let rows = results.iter().map(CatalogRow::new).collect::<ldl_core::Result<Vec<_>>>()?;
    let mut json_rows = Vec::new();
    let mut text = String::new();
    let mut truncations = Vec::new();
    for (r, row) in results.iter().zip(&rows) {
        let delta = row.reference_value.map(|v| r.value - v);
        json_rows.push(json!({
            "name": r.name,
            "value": r.value,
            "truncation": r.truncation,
            "last_prime": r.last_prime,
            "tail_bound": r.tail_bound,
            "method": r.method,
            "reference_value": row.reference_value,
            "reference_delta": delta,
            "reference_note": row.reference_note,
        }));
        let _ = writeln!(
            text,
            "{:<22} {:>+.10} tail {:.1e} {:<14} {:<22} delta {}",
            r.name,
            r.value,
            r.tail_bound,
            format!("{:?}", r.method),
            r.truncation.to_string(),
            delta.map(|d| format!("{d:+.2e}")).unwrap_or_else(|| "-".into())
        );
        let t = r.truncation.to_string();
        if !truncations.contains(&t) {
            truncations.push(t);
        }
    }
    Ok(Report { result: json!({ "rows": json_rows }), csv: export_csv(&rows)?, text, truncations, code: 0 })
}

fn moment_rows(fam: &FamilySpec, limit: u64, r_max: u32) -> Result<Vec<MomentTable>, Failure> {
    let mut rows = Vec::new();
    for &p in sieve_primes(limit.max(2))?.primes() {
        rows.push(MomentTable::compute(fam, p, r_max, r_max.max(1))?);
    }
    Ok(rows)
}

fn int_json(s: String) -> Value {
    s.parse::<i64>().map(Value::from).unwrap_or(Value::String(s))
}

fn aggregate_text(agg: &FamilyLowerOrder, text: &mut String) {
    let _ = writeln!(text, "aggregate {}: main term {} φ(0)", agg.family, agg.main_term);
    for p in &agg.pieces {
        let _ = writeln!(text, "  {:<9} main {:+.6} sieve {:+.6}", p.name, p.main, p.sieve);
    }
    let _ = writeln!(text, "  derived total {:+.6}", agg.derived_total);
    for t in &agg.bracket {
        let _ = writeln!(text, "  {:+} x {:<22} {:+.8} ({})", t.sign, t.name, t.value, t.truncation);
    }
    if let Some(b) = agg.bracket_total {
        let _ = writeln!(text, "  bracket total {b:+.6}");
    }
    let _ = writeln!(text, "  total {:+.6} (reference {})", agg.total, fmt_opt(agg.reference_total));
}

fn aggregate_csv(agg: &FamilyLowerOrder) -> anyhow::Result<String> {
    let mut rows =
        vec![vec!["family", "kind", "name", "sign", "main", "sieve", "value", "truncation", "reference_value"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()];
    let trunc = agg.atilde.as_ref().map(|a| a.truncation.to_string()).unwrap_or_default();
    for p in &agg.pieces {
        rows.push(vec![
            agg.family.clone(),
            "piece".into(),
            p.name.clone(),
            String::new(),
            format!("{:e}", p.main),
            format!("{:e}", p.sieve),
            format!("{:e}", p.total()),
            trunc.clone(),
            String::new(),
        ]);
    }
    for t in &agg.bracket {
        rows.push(vec![
            agg.family.clone(),
            "bracket".into(),
            t.name.clone(),
            format!("{}", t.sign),
            String::new(),
            String::new(),
            format!("{:e}", t.value),
            t.truncation.to_string(),
            fmt_opt(t.reference_value),
        ]);
    }
    rows.push(vec![
        agg.family.clone(),
        "total".into(),
        "total".into(),
        String::new(),
        String::new(),
        String::new(),
        format!("{:e}", agg.total),
        String::new(),
        fmt_opt(agg.reference_total),
    ]);
    render_csv(&rows)
}

pub fn family(a: &FamilyArgs) -> Result<(Report, Option<String>), Failure> {
    let cusp = a.family == "cusp";
    if cusp && (a.verify_closed_forms || !a.aggregate) {
        return Err(Failure::usage("the cusp target supports --aggregate only"));
    }
    let (fam, config) = if cusp { (None, None) } else { load_family(&a.family).map(|(f, c)| (Some(f), c))? };
    let mut result = Map::new();
    let mut text = String::new();
    let mut truncations = Vec::new();
    let mut csv = String::new();
    let mut code = 0;
    if let Some(fam) = &fam {
        result.insert("family".into(), fam.to_json());
        let rows = moment_rows(fam, a.prime_limit, a.moments)?;
        let mut crows = vec![{
            let mut h = vec!["p".to_string()];
            h.extend((0..=a.moments).map(|r| format!("A{r}")));
            h.extend((0..=a.moments.max(1)).map(|m| format!("A'{m}")));
            h.extend(["bad_count", "a_tilde", "nu", "h", "h_sieve", "truncation", "tail_bound"].map(String::from));
            h
        }];
        let mut jrows = Vec::new();
        for t in &rows {
            jrows.push(json!({
                "p": t.p,
                "moments": t.moments.iter().map(|m| int_json(m.to_string())).collect::<Vec<_>>(),
                "bad_moments": t.bad_moments.iter().map(|m| int_json(m.to_string())).collect::<Vec<_>>(),
                "bad_count": t.bad_count,
                "a_tilde": t.a_tilde,
                "nu": t.nu,
                "h": t.h,
                "h_sieve": t.h_sieve,
                "truncation": "exact",
                "tail_bound": 0.0,
            }));
            let mut c = vec![t.p.to_string()];
            c.extend(t.moments.iter().map(|m| m.to_string()));
            c.extend(t.bad_moments.iter().map(|m| m.to_string()));
            c.extend([
                t.bad_count.to_string(),
                format!("{:e}", t.a_tilde),
                t.nu.map(|n| n.to_string()).unwrap_or_default(),
                format!("{:e}", t.h),
                format!("{:e}", t.h_sieve),
                "exact".into(),
                "0".into(),
            ]);
            crows.push(c);
            let ms: Vec<String> = t.moments.iter().map(|m| m.to_string()).collect();
            let _ = writeln!(text, "p {:>6}  A {:<40} Ã {:+.6e}  H {:.6}", t.p, ms.join(" "), t.a_tilde, t.h);
        }
        result.insert("rows".into(), Value::Array(jrows));
        truncations.push(format!("per-prime rows p <= {}", a.prime_limit));
        csv = render_csv(&crows)?;
        if a.verify_closed_forms {
            let rep = suites::verify_closed_forms(fam, a.prime_limit, variant(a.lemma))?;
            let _ = writeln!(
                text,
                "closed forms ({:?}): {} comparisons, {} mismatches, {} without a closed form",
                rep.variant,
                rep.comparisons,
                rep.mismatches.len(),
                rep.missing.len()
            );
            for (p, r, side, count, closed) in &rep.mismatches {
                let _ = writeln!(text, "  mismatch p = {p}, r = {r} ({side:?}): count {count}, closed form {closed}");
            }
            if !rep.mismatches.is_empty() {
                code = EXIT_VERIFY;
            }
            result.insert("verification".into(), serde_json::to_value(&rep).map_err(anyhow::Error::from)?);
        }
    }
    if a.aggregate {
        let opts = AggregateOptions {
            prime_truncation: Truncation::FirstPrimes(a.first_primes),
            family_primes: a.family_primes,
            ..AggregateOptions::default()
        };
        let target = match &fam {
            Some(f) => AggregateTarget::Family(f.clone()),
            None => AggregateTarget::Cusp,
        };
        let agg = aggregate_lower_order(&target, &opts)?;
        truncations.push(opts.prime_truncation.to_string());
        if let Some(at) = &agg.atilde {
            truncations.push(format!("Ã point counts: {}", at.truncation));
        }
        aggregate_text(&agg, &mut text);
        csv = aggregate_csv(&agg)?;
        result.insert("aggregate".into(), serde_json::to_value(&agg).map_err(anyhow::Error::from)?);
    }
    Ok((Report { result: Value::Object(result), csv, text, truncations, code }, config))
}

fn decomposition_json(d: &SDecomposition) -> Value {
    let pieces: Map<String, Value> = d
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let coef = d.piece_coefficients.as_ref().map(|c| c[i]);
            (p.name.clone(), json!({ "main": p.main, "sieve": p.sieve, "total": p.total(), "coefficient": coef }))
        })
        .collect();
    json!({
        "family": d.family,
        "phi": { "name": d.phi, "sigma": d.sigma },
        "log_R": d.log_r,
        "R": d.log_r.exp(),
        "prime_limit": d.prime_limit,
        "counted_limit": d.counted_limit,
        "truncation": format!("p <= {}", d.prime_limit),
        "tail_bound": 0.0,
        "pieces": pieces,
        "total": d.total,
        "main_term_estimate": d.main_term_estimate,
        "lower_order_coefficient": d.lower_order_coefficient,
        "model": d.model,
    })
}

pub fn explicit(a: &ExplicitArgs) -> Result<(Report, Option<String>), Failure> {
    let phi = TestFunctionPair::parse(&a.phi)?;
    let (source, config) = if a.family == "cusp_model" {
        (MomentSource::CuspModel, None)
    } else {
        let (f, c) = load_family(&a.family)?;
        (MomentSource::Family(f), c)
    };
    let opts = SOptions { counted_primes: a.counted_primes };
    let mut out = Vec::new();
    let mut text = String::new();
    let mut truncations = Vec::new();
    let mut rows = vec!["family,phi,log_R,prime_limit,counted_limit,piece,main,sieve,total"
        .split(',')
        .map(String::from)
        .collect::<Vec<_>>()];
    let limit = match a.prime_limit {
        Some(x) => x,
        None => a
            .log_r
            .iter()
            .map(|&l| required_prime_limit(&phi, l))
            .collect::<ldl_core::Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(2),
    };
    for d in evaluate_s_multi(&source, &phi, &a.log_r, limit, &opts)? {
        let l = d.log_r;
        truncations.push(format!("p <= {} at log R = {l}", d.prime_limit));
        let _ = writeln!(
            text,
            "{} {} log R = {l}: primes <= {}, counted <= {}",
            d.family, d.phi, d.prime_limit, d.counted_limit
        );
        let head = |piece: &str, main: String, sieve: String, total: f64| {
            vec![
                d.family.clone(),
                d.phi.clone(),
                format!("{l}"),
                d.prime_limit.to_string(),
                d.counted_limit.to_string(),
                piece.to_string(),
                main,
                sieve,
                format!("{total:e}"),
            ]
        };
        for p in &d.pieces {
            let _ = writeln!(text, "  {:<9} {:+.10e}", p.name, p.total());
            rows.push(head(&p.name, format!("{:e}", p.main), format!("{:e}", p.sieve), p.total()));
        }
        rows.push(head("S", String::new(), String::new(), d.total));
        let _ = writeln!(text, "  S         {:+.10e}", d.total);
        if let Some(c) = d.lower_order_coefficient {
            let _ = writeln!(text, "  lower-order coefficient {c:+.6}");
            rows.push(head("lower_order_coefficient", String::new(), String::new(), c));
        }
        out.push(decomposition_json(&d));
    }
    Ok((
        Report { result: json!({ "decompositions": out }), csv: render_csv(&rows)?, text, truncations, code: 0 },
        config,
    ))
}

pub fn verify(a: &VerifyArgs) -> Out {
    let list = Suite::parse(&a.suite).ok_or_else(|| {
        Failure::usage(format!("unknown suite '{}': expected all, identities, appendixB, sieve or bias", a.suite))
    })?;
    let inject = std::env::var("LDL_INJECT_FAULT").map(|v| !v.is_empty() && v != "0").unwrap_or(false);
    let opts = SuiteOptions {
        prime_limit: a.prime_limit,
        variant: variant(a.lemma),
        inject_fault: inject,
        ..SuiteOptions::default()
    };
    let checks = suites::run(&list, &opts)?;
    let passed = checks.iter().all(|c| c.passed);
    let comparisons: u64 = checks.iter().map(|c| c.comparisons).sum();
    let mut text = String::new();
    let mut rows = vec!["suite,name,passed,comparisons,detail".split(',').map(String::from).collect::<Vec<_>>()];
    for c in &checks {
        let suite = serde_json::to_value(c.suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(
            text,
            "{} {suite}/{} ({} comparisons) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.comparisons,
            c.detail
        );
        rows.push(vec![suite, c.name.clone(), c.passed.to_string(), c.comparisons.to_string(), c.detail.clone()]);
    }
    let failures: Vec<&suites::Check> = checks.iter().filter(|c| !c.passed).collect();
    Ok(Report {
        result: json!({
            "passed": passed,
            "comparisons": comparisons,
            "checks": checks,
            "failures": failures,
            "fault_injected": inject,
        }),
        csv: render_csv(&rows)?,
        text,
        truncations: vec![format!("p <= {}", a.prime_limit)],
        code: if passed { 0 } else { EXIT_VERIFY },
    })
}
