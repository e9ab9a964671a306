//! Acceptance suite: one criterion per function, one pass/fail line each.
//!
//! Run with `cargo test -p ordtree-cli --test acceptance` (the target has no
//! harness; it always prints every criterion line and exits nonzero when any
//! criterion fails).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordtree::{
    between, canonicalize, col, compare, compile_str, cross_tree_witness, enumerate_interval,
    initial_segment_witness, invariance_check, level_equiv, lower_isomorphic, point_from_json,
    point_to_json, random_point, random_point_below, signature, split_left_class, successor,
    to_json, tree_iso, truncate, validate, CodingTree, Point, Value, Violation, WitnessError,
};

/// Figure-class fixtures (the height-3 discrete class).
const FIG_CLASS: [&str; 4] = [
    "Z^3",
    "w*.Z^2 + Z^2",
    "w*.Z^2 + w*.Z + Z",
    "w*.Z^2 + w*.Z + w*",
];

/// The height-2 discrete class.
const Z2_CLASS: [&str; 3] = ["Z^2", "w*.Z + Z", "w*.Z + w*"];

/// The two-colour shuffle class.
const Q2_CLASS: [&str; 3] = ["Q_2(w*, Z)", "Q_2(w*, Z) + Z", "Q_2(w*, Z) + w*"];

fn all_fixtures() -> Vec<&'static str> {
    FIG_CLASS.iter().chain(&Z2_CLASS).chain(&Q2_CLASS).copied().collect()
}

/// Fixtures whose bottom level is entirely `Z` (every point has both
/// neighbours).
const Z_BOTTOM: [&str; 5] = ["Z^3", "w*.Z^2 + Z^2", "w*.Z^2 + w*.Z + Z", "Z^2", "w*.Z + Z"];

/// Dense-bottom fixtures (no point has a neighbour).
const DENSE_BOTTOM: [&str; 3] = ["Q", "Z.Q", "Qd.Q + Q"];

/// Fixtures with at least one dense-labelled level, the mutation sites for
/// criterion 10.
const DENSE_FIXTURES: [&str; 8] = [
    "Q_2(w*, Z)",
    "Q_2(w*, Z) + Z",
    "Q_2(w*, Z) + w*",
    "Q",
    "Z.Q",
    "Qd.Q + Q",
    "Q.Z",
    "Q_2(Q, Qd)",
];

fn t(expr: &str) -> CodingTree {
    compile_str(expr).unwrap_or_else(|e| panic!("{expr}: {e}"))
}

fn check(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn criterion_01_figure_fixtures() -> Result<(), String> {
    let expected_counts = [4usize, 7, 9, 10];
    let expected_labels: [&[&[&str]]; 4] = [
        &[&["Z"], &["Z"], &["Z"], &["1"]],
        &[&["w*"], &["Z", "Z"], &["Z", "Z"], &["1", "1"]],
        &[&["w*"], &["Z", "w*"], &["Z", "Z", "Z"], &["1", "1", "1"]],
        &[&["w*"], &["Z", "w*"], &["Z", "Z", "w*"], &["1", "1", "1", "1"]],
    ];
    let trees: Vec<CodingTree> = FIG_CLASS.iter().map(|e| t(e)).collect();
    for (k, tree) in trees.iter().enumerate() {
        check(
            tree.vertex_count() == expected_counts[k],
            &format!(
                "{}: {} vertices, expected {}",
                FIG_CLASS[k],
                tree.vertex_count(),
                expected_counts[k]
            ),
        )?;
        check(
            validate(tree).is_valid(),
            &format!("{}: {}", FIG_CLASS[k], validate(tree)),
        )?;
        let by_level: BTreeMap<u32, Vec<usize>> = tree.by_level();
        let mut got: Vec<Vec<String>> = by_level
            .values()
            .map(|ids| {
                let mut labels: Vec<String> =
                    ids.iter().map(|&id| tree.vertex(id).label.to_string()).collect();
                labels.sort();
                labels
            })
            .collect();
        got.reverse(); // top-down
        let want: Vec<Vec<String>> = expected_labels[k]
            .iter()
            .map(|level| level.iter().map(|s| s.to_string()).collect())
            .collect();
        check(got == want, &format!("{}: level labels {got:?}", FIG_CLASS[k]))?;
    }
    for a in &trees {
        for b in &trees {
            check(
                lower_isomorphic(a, b).map_err(|e| e.to_string())?,
                "figure trees must be pairwise lower isomorphic",
            )?;
            if !std::ptr::eq(a, b) {
                check(tree_iso(a, b).is_none(), "distinct figure trees must not be isomorphic")?;
            }
        }
    }
    Ok(())
}

fn class_criterion(class: &[&str], require_non_iso: bool) -> Result<(), String> {
    let trees: Vec<CodingTree> = class.iter().map(|e| t(e)).collect();
    for (i, a) in trees.iter().enumerate() {
        for (j, b) in trees.iter().enumerate() {
            check(
                lower_isomorphic(a, b).map_err(|e| e.to_string())?,
                &format!("{} vs {}: expected lower isomorphic", class[i], class[j]),
            )?;
            if require_non_iso && i != j {
                check(
                    tree_iso(a, b).is_none(),
                    &format!("{} vs {}: expected non-isomorphic", class[i], class[j]),
                )?;
            }
        }
    }
    Ok(())
}

fn criterion_02_z2_class() -> Result<(), String> {
    class_criterion(&Z2_CLASS, true)
}

fn criterion_03_q2_class() -> Result<(), String> {
    class_criterion(&Q2_CLASS, false)
}

fn criterion_04_lex_oracle() -> Result<(), String> {
    let z2 = t("Z^2");
    let mut pairs = 0;
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            for c in -3i64..=3 {
                for d in -3i64..=3 {
                    let p = Point::new(vec![Value::Int(a), Value::Int(b)]);
                    let q = Point::new(vec![Value::Int(c), Value::Int(d)]);
                    let got = compare(&z2, &p, &q).map_err(|e| e.to_string())?;
                    let want = (a, b).cmp(&(c, d));
                    check(got == want, &format!("({a},{b}) vs ({c},{d}): {got:?} != {want:?}"))?;
                    pairs += 1;
                }
            }
        }
    }
    check(pairs == 2401, &format!("expected 2401 pairs, ran {pairs}"))
}

fn criterion_05_total_order_laws() -> Result<(), String> {
    for expr in all_fixtures() {
        let tree = t(expr);
        let mut rng = ChaCha8Rng::seed_from_u64(0x05);
        for _ in 0..1000 {
            let p = ordtree::random_point_with(&tree, &mut rng, 5);
            let q = ordtree::random_point_with(&tree, &mut rng, 5);
            let r = ordtree::random_point_with(&tree, &mut rng, 5);
            let pq = compare(&tree, &p, &q).map_err(|e| e.to_string())?;
            let qp = compare(&tree, &q, &p).map_err(|e| e.to_string())?;
            check(pq == qp.reverse(), &format!("{expr}: antisymmetry"))?;
            check(
                (pq == Ordering::Equal) == (p == q),
                &format!("{expr}: trichotomy/equality"),
            )?;
            let qr = compare(&tree, &q, &r).map_err(|e| e.to_string())?;
            let pr = compare(&tree, &p, &r).map_err(|e| e.to_string())?;
            if pq != Ordering::Greater && qr != Ordering::Greater {
                check(pr != Ordering::Greater, &format!("{expr}: transitivity"))?;
            }
        }
    }
    Ok(())
}

fn criterion_06_witnesses() -> Result<(), String> {
    for expr in all_fixtures() {
        let tree = t(expr);
        for anchor in 0..20u64 {
            let f = random_point(&tree, 2 * anchor + 1, 4);
            let g = random_point(&tree, 2 * anchor + 2, 4);
            let mut witness =
                initial_segment_witness(&tree, &f, &g).map_err(|e| e.to_string())?;
            check(
                witness.map(&f).map_err(|e| e.to_string())? == g,
                &format!("{expr}: anchor must map to anchor"),
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(anchor);
            for _ in 0..1000 {
                let p = random_point_below(&tree, &f, &mut rng, 4);
                let q = random_point_below(&tree, &f, &mut rng, 4);
                let fp = witness.map(&p).map_err(|e| e.to_string())?;
                let fq = witness.map(&q).map_err(|e| e.to_string())?;
                let before = compare(&tree, &p, &q).map_err(|e| e.to_string())?;
                let after = compare(&tree, &fp, &fq).map_err(|e| e.to_string())?;
                check(
                    before == after,
                    &format!("{expr} anchor {anchor}: order not preserved"),
                )?;
                check(
                    witness.inverse(&fp).map_err(|e| e.to_string())? == p
                        && witness.inverse(&fq).map_err(|e| e.to_string())? == q,
                    &format!("{expr} anchor {anchor}: inverse round trip"),
                )?;
            }
        }
    }
    Ok(())
}

fn criterion_07_cross_tree() -> Result<(), String> {
    let fixtures = all_fixtures();
    let trees: Vec<CodingTree> = fixtures.iter().map(|e| t(e)).collect();
    for (i, a) in trees.iter().enumerate() {
        for (j, b) in trees.iter().enumerate() {
            if i == j {
                continue;
            }
            let equal = signature(a).map_err(|e| e.to_string())?
                == signature(b).map_err(|e| e.to_string())?;
            let f = random_point(a, 71, 4);
            let g = random_point(b, 72, 4);
            if equal {
                let mut witness =
                    cross_tree_witness(a, &f, b, &g).map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                for _ in 0..500 {
                    let p = random_point_below(a, &f, &mut rng, 4);
                    let q = random_point_below(a, &f, &mut rng, 4);
                    let fp = witness.map(&p).map_err(|e| e.to_string())?;
                    let fq = witness.map(&q).map_err(|e| e.to_string())?;
                    check(
                        compare(a, &p, &q).map_err(|e| e.to_string())?
                            == compare(b, &fp, &fq).map_err(|e| e.to_string())?,
                        &format!("{} -> {}: order not preserved", fixtures[i], fixtures[j]),
                    )?;
                    check(
                        witness.inverse(&fp).map_err(|e| e.to_string())? == p,
                        &format!("{} -> {}: inverse round trip", fixtures[i], fixtures[j]),
                    )?;
                }
            } else {
                match cross_tree_witness(a, &f, b, &g) {
                    Err(WitnessError::SignatureMismatch) => {}
                    other => {
                        return Err(format!(
                            "{} -> {}: expected SignatureMismatch, got {:?}",
                            fixtures[i],
                            fixtures[j],
                            other.map(|_| "witness")
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn criterion_08_invariance() -> Result<(), String> {
    for expr in all_fixtures() {
        let tree = t(expr);
        let f = random_point(&tree, 81, 4);
        let g = random_point(&tree, 82, 4);
        for i in 0..=tree.height() {
            let report =
                invariance_check(&tree, i, &f, &g, 200, 0x08).map_err(|e| e.to_string())?;
            check(report.checked == 200, &format!("{expr} level {i}: sample count"))?;
            check(
                report.is_clean(),
                &format!("{expr} level {i}: {:?}", report.violations),
            )?;
        }
        // refinement chain: coarser levels are implied by finer ones
        let mut rng = ChaCha8Rng::seed_from_u64(0x88);
        for _ in 0..200 {
            let p = ordtree::random_point_with(&tree, &mut rng, 4);
            let q = ordtree::random_point_with(&tree, &mut rng, 4);
            for i in 0..tree.height() {
                if level_equiv(&tree, &p, &q, i).map_err(|e| e.to_string())? {
                    check(
                        level_equiv(&tree, &p, &q, i + 1).map_err(|e| e.to_string())?,
                        &format!("{expr}: refinement chain broken at level {i}"),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn criterion_09_discreteness_density() -> Result<(), String> {
    // discrete bottoms: every sampled point has the unique adjacent successor
    for expr in Z_BOTTOM {
        let tree = t(expr);
        for seed in 0..1000 {
            let p = random_point(&tree, seed, 4);
            let s = successor(&tree, &p)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("{expr}: successor must exist"))?;
            check(
                compare(&tree, &p, &s).map_err(|e| e.to_string())? == Ordering::Less,
                &format!("{expr}: successor above"),
            )?;
            let interval = enumerate_interval(&tree, &p, &s).map_err(|e| e.to_string())?;
            check(interval.len() == 2, &format!("{expr}: successor adjacent"))?;
        }
    }
    // dense bottoms: no successor anywhere
    for expr in DENSE_BOTTOM {
        let tree = t(expr);
        for seed in 0..1000 {
            let p = random_point(&tree, seed, 4);
            check(
                successor(&tree, &p).map_err(|e| e.to_string())?.is_none(),
                &format!("{expr}: dense bottoms have no successor"),
            )?;
        }
    }
    // density with all colours reachable
    let mut rng = ChaCha8Rng::seed_from_u64(0x09);
    for _ in 0..1000 {
        let num = rng.random_range(-20i64..=20);
        let den = rng.random_range(1i64..=9);
        let width_num = rng.random_range(1i64..=9);
        let width_den = rng.random_range(1i64..=9);
        let a = ordtree::point::parse_rational(&format!("{num}/{den}")).unwrap();
        let b = &a + ordtree::point::parse_rational(&format!("{width_num}/{width_den}")).unwrap();
        for n in [2u32, 3, 5] {
            for c in 0..n {
                let x = between(&a, &b, c, n).map_err(|e| e.to_string())?;
                check(a < x && x < b, "between must land strictly inside")?;
                check(col(&x, n) == c, "between must hit the requested colour")?;
            }
        }
    }
    Ok(())
}

fn criterion_10_canonicalization() -> Result<(), String> {
    // compile outputs are fixpoints
    for expr in all_fixtures().iter().chain(DENSE_FIXTURES.iter()) {
        let tree = t(expr);
        check(
            canonicalize(&tree).map_err(|e| e.to_string())? == tree,
            &format!("{expr}: compile output must be a canonicalize fixpoint"),
        )?;
    }
    // 100 seeded splits of dense-labelled levels, merged back
    let mut rng = ChaCha8Rng::seed_from_u64(0x10);
    let mut produced = 0;
    while produced < 100 {
        let expr = DENSE_FIXTURES[rng.random_range(0..DENSE_FIXTURES.len())];
        let tree = t(expr);
        let dense_levels: Vec<u32> = tree
            .by_level()
            .into_iter()
            .filter(|(_, ids)| ids.iter().all(|&id| tree.vertex(id).label.is_dense()))
            .map(|(level, _)| level)
            .collect();
        if dense_levels.is_empty() {
            continue;
        }
        let level = dense_levels[rng.random_range(0..dense_levels.len())];
        let classes = tree
            .by_level()[&level]
            .iter()
            .map(|&id| tree.vertex(id).left_children().len())
            .min()
            .unwrap();
        let rank = rng.random_range(0..classes);
        let copies = rng.random_range(1..=3);
        let mutant =
            split_left_class(&tree, level, rank, copies).map_err(|e| e.to_string())?;
        let report = validate(&mutant);
        check(!report.is_valid(), &format!("{expr}: mutant must break the sibling rule"))?;
        check(
            report
                .violations
                .iter()
                .all(|v| matches!(v, Violation::IsomorphicLeftSiblings { .. })),
            &format!("{expr}: mutant must only break the sibling rule, got {report}"),
        )?;
        let fixed = canonicalize(&mutant).map_err(|e| e.to_string())?;
        check(
            validate(&fixed).is_valid(),
            &format!("{expr}: canonicalized mutant must validate"),
        )?;
        check(
            canonicalize(&fixed).map_err(|e| e.to_string())? == fixed,
            &format!("{expr}: canonicalize must be idempotent"),
        )?;
        check(
            signature(&fixed).map_err(|e| e.to_string())?
                == signature(&tree).map_err(|e| e.to_string())?,
            &format!("{expr}: canonicalization must preserve the signature"),
        )?;
        check(
            tree_iso(&fixed, &tree).is_some(),
            &format!("{expr}: merge must restore the original tree"),
        )?;
        produced += 1;
    }
    Ok(())
}

fn criterion_11_truncation() -> Result<(), String> {
    for expr in all_fixtures() {
        let tree = t(expr);
        for level in 0..=tree.height() {
            let cut = truncate(&tree, level).map_err(|e| e.to_string())?;
            check(
                validate(&cut).is_valid(),
                &format!("{expr} truncated at {level}: {}", validate(&cut)),
            )?;
        }
    }
    let z3 = t("Z^3");
    let cut = truncate(&z3, 1).map_err(|e| e.to_string())?;
    check(
        tree_iso(&cut, &t("Z^2")).is_some(),
        "the height-3 chain truncated at 1 must equal the height-2 chain",
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ordtree"))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = bin().args(args).output().expect("spawn ordtree");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_12_serialization_and_cli() -> Result<(), String> {
    // JSON round trips: trees and sampled points
    for expr in all_fixtures() {
        let tree = t(expr);
        let back = ordtree::from_json_str(&to_json(&tree).to_string())
            .map_err(|e| e.to_string())?;
        check(back == tree, &format!("{expr}: tree JSON round trip"))?;
        for seed in 0..20 {
            let p = random_point(&tree, seed, 4);
            let back = point_from_json(&point_to_json(&p)).map_err(|e| e.to_string())?;
            check(back == p, &format!("{expr}: point JSON round trip"))?;
        }
    }
    // exit codes mirror the class structure of criteria 1-3
    let classes: [&[&str]; 3] = [&FIG_CLASS, &Z2_CLASS, &Q2_CLASS];
    for class in classes {
        for a in class {
            for b in class {
                let (code, _) = run_cli(&["loweriso", a, b]);
                check(code == 0, &format!("loweriso {a} {b}: exit {code}"))?;
                if a != b {
                    let (code, _) = run_cli(&["iso", a, b]);
                    check(code == 1, &format!("iso {a} {b}: exit {code}"))?;
                }
            }
        }
    }
    for (a, b) in [("Z^3", "Z^2"), ("Z^2", "Q_2(w*, Z)"), ("Z^3", "Q_2(w*, Z) + Z")] {
        let (code, _) = run_cli(&["loweriso", a, b]);
        check(code == 1, &format!("loweriso {a} {b}: exit {code}"))?;
    }
    // seeded invocations are byte-identical
    let args = [
        "sample",
        "Q_2(w*, Z) + Z",
        "--seed",
        "11",
        "--count",
        "25",
        "--magnitude",
        "6",
    ];
    let (c1, out1) = run_cli(&args);
    let (c2, out2) = run_cli(&args);
    check(c1 == 0 && c2 == 0, "sample must succeed")?;
    check(out1 == out2, "seeded sample runs must be byte-identical")?;
    let wargs = [
        "witness",
        "Q_2(w*, Z)",
        "--f",
        "(1/2, 4)",
        "--g",
        "(0, 0)",
        "--probes",
        "50",
        "--seed",
        "3",
    ];
    let (c1, out1) = run_cli(&wargs);
    let (c2, out2) = run_cli(&wargs);
    check(c1 == 0 && c2 == 0, "witness probes must pass")?;
    check(out1 == out2, "seeded witness runs must be byte-identical")?;
    let (code, out) = run_cli(&["compare", "Z^2", "--p", "(0,0)", "--q", "(0,1)"]);
    check(code == 0 && out == b"Less\n", "compare (0,0) (0,1) must print Less")?;
    Ok(())
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Result<(), String>)> = vec![
        ("01 figure fixtures", Duration::from_secs(1), criterion_01_figure_fixtures),
        ("02 height-2 discrete class", Duration::from_secs(1), criterion_02_z2_class),
        ("03 two-colour shuffle class", Duration::from_secs(1), criterion_03_q2_class),
        ("04 lexicographic oracle", Duration::from_secs(1), criterion_04_lex_oracle),
        ("05 total-order laws", Duration::from_secs(10), criterion_05_total_order_laws),
        ("06 initial-segment witnesses", Duration::from_secs(60), criterion_06_witnesses),
        ("07 cross-tree witnesses", Duration::from_secs(60), criterion_07_cross_tree),
        ("08 invariant partitions", Duration::from_secs(30), criterion_08_invariance),
        ("09 discreteness and density", Duration::from_secs(10), criterion_09_discreteness_density),
        ("10 canonicalization", Duration::from_secs(10), criterion_10_canonicalization),
        ("11 truncation", Duration::from_secs(1), criterion_11_truncation),
        ("12 serialization and CLI", Duration::from_secs(5), criterion_12_serialization_and_cli),
    ];
    let mut failures = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(Ok(())) if elapsed <= budget => "PASS".to_string(),
            Ok(Ok(())) => format!("FAIL (exceeded {budget:?})"),
            Ok(Err(msg)) => format!("FAIL ({msg})"),
            Err(_) => "FAIL (panic)".to_string(),
        };
        if verdict != "PASS" {
            failures += 1;
        }
        println!("criterion {name}: {verdict} [{elapsed:.2?}]");
    }
    if failures > 0 {
        eprintln!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
