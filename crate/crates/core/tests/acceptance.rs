//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use canonvdw::coloring::enumerate_colourings;
use canonvdw::polynomial::{bstar_family, h_value, weight_less, weight_vector};
use canonvdw::search::{extremal_colourings, RunReport, DEFAULT_NAIVE_CAP};
use canonvdw::witness::{
    collection_norm, generate, is_fully_rainbow, is_monochromatic, is_rainbow, scan_witness,
    validate_collection, FocusedCollection, FocusedMember, RejectReason,
};
use canonvdw::{
    canonical_number, find_witness, naive_canonical_number, verify_certificate, Certificate,
    DPolicy, FamilyRole, IntegralPolynomial, PolynomialFamily, SearchConfig, TypedColouring,
    WitnessQuery,
};

const N_LIMIT: usize = 10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&mut Ledger) -> Outcome);

/// Witnesses collected by earlier criteria for the certificate checks.
#[derive(Default)]
struct Ledger {
    certificates: Vec<(TypedColouring, Certificate)>,
}

fn family(lists: &[&[i64]]) -> PolynomialFamily {
    PolynomialFamily::from_coeffs(lists, FamilyRole::Mono).unwrap()
}

fn grid_families() -> Vec<(&'static str, PolynomialFamily)> {
    vec![
        ("{x}", family(&[&[1]])),
        ("{x,2x}", family(&[&[1], &[2]])),
        ("{x^2}", family(&[&[0, 1]])),
        ("{x,x^2}", family(&[&[1], &[0, 1]])),
    ]
}

fn grid() -> Vec<(String, SearchConfig)> {
    let mut out = Vec::new();
    for (name, fam) in grid_families() {
        for palette in [None, Some(2), Some(3)] {
            for policy in [DPolicy::Positive, DPolicy::Nonzero] {
                let mut cfg = SearchConfig::symmetric(fam.clone(), policy, N_LIMIT);
                cfg.max_classes = palette;
                let p = palette.map_or("unbounded".to_string(), |k| format!("mc{k}"));
                out.push((format!("{name}/{p}/{policy}"), cfg));
            }
        }
    }
    out
}

fn classical_config() -> SearchConfig {
    SearchConfig::mono_only(family(&[&[1], &[2]]), 2, 12)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Smallest N such that every 2-colouring of [N] has a monochromatic
/// three-term progression, by direct bitmask enumeration.
fn brute_force_two_colour_ap3(limit: usize) -> Option<usize> {
    (1..=limit).find(|&n| {
        (0u32..1 << n).all(|mask| {
            let colour = |i: usize| (mask >> i) & 1;
            (0..n).any(|a| {
                (1..n).any(|d| {
                    a + 2 * d < n && colour(a) == colour(a + d) && colour(a) == colour(a + 2 * d)
                })
            })
        })
    })
}

/// Every colouring of `[len]` must carry a certificate that replays.
fn certify_level(ledger: &mut Ledger, cfg: &SearchConfig, len: usize) -> Result<usize, String> {
    let query = cfg.query().map_err(|e| e.to_string())?;
    let mut count = 0;
    for c in enumerate_colourings(len, cfg.max_classes) {
        let cert = find_witness(&c, &query)
            .ok_or_else(|| format!("witness-free colouring {:?} at N={len}", c.coordinate(1)))?;
        verify_certificate(&c, &cert)
            .map_err(|r| format!("certificate rejected ({r}) for {:?}", c.coordinate(1)))?;
        ledger.certificates.push((c, cert));
        count += 1;
    }
    Ok(count)
}

fn classical_recovery(ledger: &mut Ledger) -> Outcome {
    let cfg = classical_config();
    let t = Instant::now();
    let pruned = canonical_number(&cfg).map_err(|e| e.to_string())?;
    let pruned_time = t.elapsed();
    let t = Instant::now();
    let naive = naive_canonical_number(&cfg, DEFAULT_NAIVE_CAP).map_err(|e| e.to_string())?;
    let naive_time = t.elapsed();
    ensure(pruned.canonical_number == Some(9), || {
        format!("pruned gave {:?}", pruned.canonical_number)
    })?;
    ensure(naive.canonical_number == Some(9), || {
        format!("naive gave {:?}", naive.canonical_number)
    })?;
    ensure(brute_force_two_colour_ap3(12) == Some(9), || {
        "bitmask oracle disagrees".into()
    })?;
    let limit = Duration::from_secs(1);
    ensure(pruned_time < limit && naive_time < limit, || {
        format!("too slow: pruned {pruned_time:?}, naive {naive_time:?}")
    })?;
    let witness_free = extremal_colourings(&cfg, 8, usize::MAX).map_err(|e| e.to_string())?;
    let query = cfg.query().map_err(|e| e.to_string())?;
    ensure(
        !witness_free.is_empty()
            && witness_free
                .iter()
                .all(|c| find_witness(c, &query).is_none()),
        || "extremal colourings of [8] fail the re-check".into(),
    )?;
    let certified = certify_level(ledger, &cfg, 9)?;
    Ok(format!(
        "W = 9 (pruned {pruned_time:.1?}, naive {naive_time:.1?}); {} witness-free colourings of [8]; {certified} colourings of [9] certified",
        witness_free.len()
    ))
}

fn trivial_pair(ledger: &mut Ledger) -> Outcome {
    let mut parts = Vec::new();
    for policy in [DPolicy::Positive, DPolicy::Nonzero] {
        let cfg = SearchConfig::symmetric(family(&[&[1]]), policy, N_LIMIT);
        let pruned = canonical_number(&cfg)
            .map_err(|e| e.to_string())?
            .canonical_number;
        let naive = naive_canonical_number(&cfg, DEFAULT_NAIVE_CAP)
            .map_err(|e| e.to_string())?
            .canonical_number;
        ensure(pruned == Some(2) && naive == Some(2), || {
            format!("{policy}: pruned {pruned:?}, naive {naive:?}")
        })?;
        certify_level(ledger, &cfg, 2)?;
        parts.push(format!("{policy}: 2"));
    }
    Ok(parts.join(", "))
}

fn oracle_equivalence(_: &mut Ledger) -> Outcome {
    let mut found = 0;
    let configs = grid();
    for (name, cfg) in &configs {
        let pruned = canonical_number(cfg).map_err(|e| format!("{name}: {e}"))?;
        let naive =
            naive_canonical_number(cfg, DEFAULT_NAIVE_CAP).map_err(|e| format!("{name}: {e}"))?;
        ensure(pruned.canonical_number == naive.canonical_number, || {
            format!(
                "{name}: pruned {:?} vs naive {:?}",
                pruned.canonical_number, naive.canonical_number
            )
        })?;
        ensure(pruned.level_counts == naive.level_counts, || {
            format!(
                "{name}: level counts {:?} vs {:?}",
                pruned.level_counts, naive.level_counts
            )
        })?;
        ensure(
            pruned.extremal_count_at_n_minus_1 == naive.extremal_count_at_n_minus_1,
            || format!("{name}: extremal counts differ"),
        )?;
        found += usize::from(pruned.canonical_number.is_some());
    }
    Ok(format!(
        "{} configs agree on canonical number and per-level counts ({found} resolved within N <= {N_LIMIT})",
        configs.len()
    ))
}

fn dichotomy(ledger: &mut Ledger) -> Outcome {
    let mut parts = Vec::new();
    for (name, mut cfg) in grid().into_iter().filter(|(_, c)| c.max_classes.is_none()) {
        let plain = canonical_number(&cfg).map_err(|e| e.to_string())?;
        let Some(n) = plain.canonical_number else {
            continue;
        };
        cfg.verify_prunes = true;
        let checked = canonical_number(&cfg).map_err(|e| e.to_string())?;
        ensure(checked.canonical_number == Some(n), || {
            format!("{name}: verified run disagrees")
        })?;
        ensure(checked.checks.all_passed(), || {
            format!("{name}: {:?}", checked.checks)
        })?;
        ensure(checked.checks.cuts_checked > 0, || {
            format!("{name}: no cuts were checked")
        })?;
        ensure(checked.level_counts.get(n) == Some(&0), || {
            format!("{name}: witness-free leaves at N={n}")
        })?;
        let certified = certify_level(ledger, &cfg, n)?;
        parts.push(format!(
            "{name}: N={n}, {} cuts verified, {certified} leaves certified",
            checked.checks.cuts_checked
        ));
    }
    ensure(!parts.is_empty(), || "no unbounded config resolved".into())?;
    Ok(parts.join("; "))
}

fn brute_force_h(polys: &[IntegralPolynomial], range: std::ops::RangeInclusive<i64>) -> i64 {
    let mut last = 0;
    for h in range {
        for pi in polys {
            for pj in polys {
                if pi == pj && pi.degree() < 2 {
                    continue;
                }
                if &pi.shift_difference(h).unwrap() == pj {
                    last = h;
                }
            }
        }
    }
    last
}

fn shift_threshold(_: &mut Ledger) -> Outcome {
    let cases: [(&str, &[&[i64]], i64); 3] = [
        ("{x^2+x, x^2+3x}", &[&[1, 1], &[3, 1]], 1),
        ("{x^2}", &[&[0, 1]], 0),
        ("{x,2x}", &[&[1], &[2]], 0),
    ];
    let mut parts = Vec::new();
    for (name, lists, expected) in cases {
        let fam = family(lists);
        let got = h_value(&fam).map_err(|e| e.to_string())?;
        let brute = brute_force_h(fam.polys(), 1..=100);
        ensure(got == expected && brute == expected, || {
            format!("{name}: closed form {got}, brute force {brute}, expected {expected}")
        })?;
        parts.push(format!("{name} -> {got}"));
    }
    Ok(parts.join(", "))
}

fn random_poly(rng: &mut ChaCha8Rng) -> IntegralPolynomial {
    let degree = rng.gen_range(1..=3);
    let mut coeffs: Vec<i64> = (0..degree).map(|_| rng.gen_range(-5..=5)).collect();
    while coeffs[degree - 1] == 0 {
        coeffs[degree - 1] = rng.gen_range(-5..=5);
    }
    IntegralPolynomial::new(coeffs)
}

fn random_rainbow_family(rng: &mut ChaCha8Rng) -> PolynomialFamily {
    let size = rng.gen_range(1..=4);
    let mut polys: Vec<IntegralPolynomial> = Vec::new();
    while polys.len() < size {
        let p = random_poly(rng);
        if !polys.contains(&p) {
            polys.push(p);
        }
    }
    let lowest = (0..size).min_by_key(|&i| polys[i].degree()).unwrap();
    polys.swap(0, lowest);
    PolynomialFamily::rainbow(polys).unwrap()
}

fn weight_descent(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut passed, mut nonempty) = (0, 0);
    for trial in 0..100 {
        let b = random_rainbow_family(&mut rng);
        let h = h_value(&b).map_err(|e| e.to_string())?;
        let star = bstar_family(&b, h, h + 3).map_err(|e| format!("trial {trial}: {e}"))?;
        if star.is_empty() {
            passed += 1;
            continue;
        }
        nonempty += 1;
        let (ws, wb) = (weight_vector(&star).unwrap(), weight_vector(&b).unwrap());
        ensure(weight_less(&ws, &wb), || {
            format!("trial {trial}: {b:?} gives {ws:?} not below {wb:?}")
        })?;
        passed += 1;
    }
    Ok(format!(
        "{passed}/100 families ({nonempty} with nonempty reduced family)"
    ))
}

fn random_colouring(rng: &mut ChaCha8Rng) -> TypedColouring {
    let len = rng.gen_range(1..=12);
    let m = rng.gen_range(1..=2);
    let palette = rng.gen_range(1..=len as u32 + 1);
    let rows = (0..len)
        .map(|_| (0..m).map(|_| rng.gen_range(0..palette)).collect())
        .collect();
    TypedColouring::new(rows, m, None).unwrap()
}

/// Every in-range tuple of `fam` on `[len]` for nonzero `d`.
fn all_tuples(fam: &PolynomialFamily, len: usize) -> Vec<Vec<i64>> {
    let n = len as i64;
    let mut out = Vec::new();
    for d in -n..=n {
        if d == 0 {
            continue;
        }
        for a in 1..=n {
            if let Some(t) = generate(fam, a, d) {
                if t.iter().all(|&e| (1..=n).contains(&e)) {
                    out.push(t);
                }
            }
        }
    }
    out
}

fn relabeling_and_monotonicity(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let families = grid_families();
    let (mut with_witness, mut mono_checked, mut rainbow_checked) = (0, 0, 0);
    for trial in 0..1000 {
        let c = random_colouring(&mut rng);
        let (_, fam) = &families[trial % families.len()];
        let policy = if trial % 2 == 0 {
            DPolicy::Nonzero
        } else {
            DPolicy::Positive
        };
        let query = WitnessQuery::new(Some(fam.clone()), Some(fam.clone()), 0, policy).unwrap();

        // injective renaming of the whole palette
        let mut perm: Vec<u32> = (0..=12).collect();
        perm.shuffle(&mut rng);
        let offset = rng.gen_range(0..1000);
        let renamed = c.map_labels(|_, l| perm[l as usize] * 3 + offset);
        let before = find_witness(&c, &query);
        let after = find_witness(&renamed, &query);
        ensure(before == after, || {
            format!("trial {trial}: outcome changed under renaming")
        })?;
        if let Some(cert) = &before {
            with_witness += 1;
            ensure(verify_certificate(&renamed, cert).is_ok(), || {
                format!("trial {trial}: certificate not portable")
            })?;
        }

        // coarsening: merge two labels everywhere
        let (x, y) = (rng.gen_range(0..=12u32), rng.gen_range(0..=12u32));
        let coarse = c.map_labels(|_, l| if l == x { y } else { l });
        // refinement: give random cells fresh labels
        let mut fresh = 100;
        let refined = c.map_labels(|_, l| {
            if rng.gen_bool(0.3) {
                fresh += 1;
                fresh
            } else {
                l
            }
        });
        for t in all_tuples(fam, c.len()) {
            if is_monochromatic(&c, &t).unwrap().is_some() {
                mono_checked += 1;
                ensure(is_monochromatic(&coarse, &t).unwrap().is_some(), || {
                    format!("trial {trial}: {t:?} lost monochromatic")
                })?;
            }
            if is_rainbow(&c, &t).unwrap() {
                rainbow_checked += 1;
                ensure(is_rainbow(&refined, &t).unwrap(), || {
                    format!("trial {trial}: {t:?} lost rainbow")
                })?;
            }
        }
        ensure(
            scan_witness(&c, &query).is_some() == before.is_some(),
            || format!("trial {trial}: scan mismatch"),
        )?;
    }
    Ok(format!(
        "1000 colourings ({with_witness} with witnesses); {mono_checked} monochromatic and {rainbow_checked} rainbow tuples preserved"
    ))
}

/// A valid collection of norm `(m + 1) n` focused at 1, with the focus's
/// labels chosen to clash with as many members of its own final label as
/// possible.
fn adversarial_collection(rng: &mut ChaCha8Rng) -> (TypedColouring, FocusedCollection, u32) {
    let pool: [&[&[i64]]; 5] = [
        &[&[1]],
        &[&[1], &[2]],
        &[&[1], &[0, 1]],
        &[&[2], &[3]],
        &[&[0, 1], &[1, 1]],
    ];
    let fam =
        PolynomialFamily::from_coeffs(pool[rng.gen_range(0..pool.len())], FamilyRole::Rainbow)
            .unwrap();
    let m = rng.gen_range(1..=3usize);
    let n = rng.gen_range(1..=3u32);
    let per_label = m + 1;
    let want = per_label * n as usize;
    let focus = 1i64;

    let mut ds: Vec<i64> = (1..=40).collect();
    ds.shuffle(rng);
    let mut used = BTreeSet::from([focus]);
    let mut members = Vec::new();
    for d in ds {
        if members.len() == want {
            break;
        }
        let t = generate(&fam, focus, d).unwrap();
        let elems = t[1..].to_vec();
        let distinct: BTreeSet<i64> = elems.iter().copied().collect();
        if distinct.len() != elems.len() || elems.iter().any(|e| *e < 1 || used.contains(e)) {
            continue;
        }
        used.extend(elems.iter().copied());
        members.push(FocusedMember { d, elements: elems });
    }
    assert_eq!(members.len(), want, "not enough disjoint focused sets");

    let len = *used.iter().max().unwrap() as usize;
    let mut next_label = 0u32;
    let mut rows: Vec<Vec<u32>> = (0..len)
        .map(|_| (0..m).map(|_| rng.gen_range(0..1000) + 10_000).collect())
        .collect();
    let mut finals: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=n)).collect();
    let mut groups: Vec<u32> = (0..want).map(|i| i as u32 / per_label as u32 + 1).collect();
    groups.shuffle(rng);
    for (member, &label) in members.iter().zip(&groups) {
        for &e in &member.elements {
            let row = &mut rows[e as usize - 1];
            for slot in row.iter_mut() {
                *slot = next_label;
                next_label += 1;
            }
            finals[e as usize - 1] = label;
        }
    }
    let focus_final = rng.gen_range(1..=n);
    finals[0] = focus_final;
    let mut same: Vec<&FocusedMember> = members
        .iter()
        .zip(&groups)
        .filter(|(_, &g)| g == focus_final)
        .map(|(mb, _)| mb)
        .collect();
    same.shuffle(rng);
    let focus_row: Vec<u32> = (0..m)
        .map(|j| {
            let victim = same[j % same.len()];
            let e = victim.elements[rng.gen_range(0..victim.elements.len())];
            rows[e as usize - 1][rng.gen_range(0..m)]
        })
        .collect();
    rows[0] = focus_row;

    let c = TypedColouring::new(rows, m, Some((n, finals))).unwrap();
    let collection = FocusedCollection {
        focus,
        family: fam,
        members,
    };
    (c, collection, focus_final)
}

fn pigeonhole(_: &mut Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut passed = 0;
    let mut tight = 0;
    for trial in 0..200 {
        let (c, collection, focus_final) = adversarial_collection(&mut rng);
        ensure(validate_collection(&c, &collection), || {
            format!("trial {trial}: invalid collection")
        })?;
        let report = collection_norm(&c, &collection).map_err(|e| e.to_string())?;
        let (m, n) = (c.m(), c.n().unwrap() as usize);
        ensure(report.norm == (m + 1) * n, || {
            format!("trial {trial}: norm {} != {}", report.norm, (m + 1) * n)
        })?;
        ensure(report.counts[focus_final as usize - 1] == m + 1, || {
            format!("trial {trial}: w_c != m + 1")
        })?;
        let mut survivors = 0;
        let mut same_label = 0;
        for mb in &collection.members {
            let mut with_focus = mb.elements.clone();
            with_focus.push(collection.focus);
            if is_rainbow(&c, &with_focus).unwrap() {
                survivors += 1;
                same_label +=
                    usize::from(is_fully_rainbow(&c, &mb.elements).unwrap() == Some(focus_final));
            }
        }
        ensure(survivors >= 1, || {
            format!("trial {trial}: no member unions rainbow with the focus")
        })?;
        ensure(same_label >= 1, || {
            format!("trial {trial}: no member of the focus's final label survives")
        })?;
        tight += usize::from(same_label == 1);
        passed += 1;
    }
    Ok(format!(
        "{passed}/200 collections ({tight} with a single survivor among the focus label's members)"
    ))
}

fn certificate_round_trip(ledger: &mut Ledger) -> Outcome {
    ensure(!ledger.certificates.is_empty(), || {
        "no certificates were collected".into()
    })?;
    for (c, cert) in &ledger.certificates {
        verify_certificate(c, cert).map_err(|r| format!("rejected: {r}"))?;
        let json = cert.to_json();
        let back: Certificate = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        ensure(&back == cert && back.to_json() == json, || {
            "JSON round trip changed the certificate".into()
        })?;

        let mut element = cert.clone();
        *element.elements.last_mut().unwrap() += 1;
        let mut shifted = cert.clone();
        shifted.a += 1;
        let mut digest = cert.clone();
        let flipped = if digest.digest.starts_with('0') {
            "1"
        } else {
            "0"
        };
        digest.digest.replace_range(0..1, flipped);
        for (what, mutated, expected) in [
            ("element", element, RejectReason::ElementMismatch),
            ("a", shifted, RejectReason::ElementMismatch),
            ("digest", digest, RejectReason::DigestMismatch),
        ] {
            let got = verify_certificate(c, &mutated);
            ensure(got == Err(expected), || {
                format!("{what} mutation gave {got:?}, expected {}", expected.code())
            })?;
        }
    }
    Ok(format!(
        "{} certificates accepted; 3 mutations each rejected with the right code",
        ledger.certificates.len()
    ))
}

fn determinism(_: &mut Ledger) -> Outcome {
    let mut configs = vec![("classical".to_string(), classical_config())];
    configs.extend(grid());
    for (name, base) in &configs {
        let mut reports = Vec::new();
        let mut extremal = Vec::new();
        for workers in [1, 2, 8] {
            let cfg = SearchConfig {
                workers,
                ..base.clone()
            };
            let result = canonical_number(&cfg).map_err(|e| e.to_string())?;
            reports.push(RunReport::new("pruned", &cfg, &result, false).to_json());
            let at = result
                .canonical_number
                .map_or(cfg.n_limit, |n| n - 1)
                .max(1);
            extremal.push(extremal_colourings(&cfg, at, 64).map_err(|e| e.to_string())?);
        }
        ensure(reports.windows(2).all(|w| w[0] == w[1]), || {
            format!("{name}: reports differ across worker counts")
        })?;
        ensure(extremal.windows(2).all(|w| w[0] == w[1]), || {
            format!("{name}: extremal colourings differ")
        })?;
    }
    Ok(format!(
        "{} configs byte-identical for 1, 2 and 8 workers",
        configs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("classical van der Waerden recovery", classical_recovery),
        ("trivial pair family", trivial_pair),
        ("pruned/naive oracle equivalence", oracle_equivalence),
        ("canonical dichotomy at desk scale", dichotomy),
        ("shift threshold closed form", shift_threshold),
        ("weight descent", weight_descent),
        (
            "relabeling invariance and monotonicity",
            relabeling_and_monotonicity,
        ),
        ("focused-collection pigeonhole", pigeonhole),
        ("certificate round trip", certificate_round_trip),
        ("determinism across worker counts", determinism),
    ];
    let mut ledger = Ledger::default();
    let mut failures = 0;
    panic::set_hook(Box::new(|_| {}));
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(|| check(&mut ledger))).unwrap_or_else(|e| {
                Err(e
                    .downcast_ref::<String>()
                    .cloned()
                    .unwrap_or_else(|| "panicked".into()))
            });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
