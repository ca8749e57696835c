//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

#[path = "../../core/tests/support/brute.rs"]
mod brute;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use conceptprobe::adapter::AdapterSpec;
use conceptprobe::dataset::{materialize, read_manifest, verify_dataset, write_dataset, Dataset, Item, Recipe, Split};
use conceptprobe::eval::{run_eval, EvalOptions};
use conceptprobe::report::EvalReport;
use conceptprobe::split::{build_split, SplitConfig};
use conceptprobe_core::arc::concepts::{reference_solve, FamilyId, BOUNDARY_SUITE, TOP_BOTTOM_SUITE};
use conceptprobe_core::arc::{score, ArcGrid, ArcTask};
use conceptprobe_core::raven::exploit::{exploitability, Attack};
use conceptprobe_core::raven::oracle::induce_rules;
use conceptprobe_core::raven::suites::{iid_specs, probe_specs};
use conceptprobe_core::raven::{Family, Problem, Strategy};
use sha2::{Digest, Sha256};

const BIAS_MIN: f64 = 0.90;
const BIAS_BUDGET: Duration = Duration::from_secs(60);
const FAIR_RANGE: (f64, f64) = (0.05, 0.25);
const MIN_GAP: f64 = 0.5;
const CHANCE: f64 = 0.125;
const RANDOM_TOLERANCE: f64 = 0.03;
const DESK_BUDGET: Duration = Duration::from_secs(300);

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn raven_set(split: Split, strategy: Strategy, count: usize, seed: u64) -> Dataset {
    let recipe = Recipe::Raven { specs: iid_specs(strategy), offset: 0, count, image_side: None };
    materialize(split, seed, recipe).expect("generation")
}

fn problems(ds: &Dataset) -> Vec<Problem> {
    ds.items
        .iter()
        .map(|i| match i {
            Item::Raven(p) => p.clone(),
            Item::Arc(_) => panic!("RAVEN dataset expected"),
        })
        .collect()
}

fn tasks(ds: &Dataset) -> Vec<ArcTask> {
    ds.items
        .iter()
        .map(|i| match i {
            Item::Arc(t) => t.clone(),
            Item::Raven(_) => panic!("ARC dataset expected"),
        })
        .collect()
}

fn accuracy(ds: &Dataset, adapter: &str, guesses: usize) -> EvalReport {
    run_eval(ds, None, &AdapterSpec::parse(adapter).unwrap(), &EvalOptions::new(guesses))
        .expect("evaluation")
        .report
}

fn bias_exploit() -> Outcome {
    let start = Instant::now();
    let ds = raven_set(Split::Test, Strategy::BiasedPerturbation, 1000, 2024);
    let rate = exploitability(&problems(&ds), Attack::MajorityVote).unwrap().rate();
    let took = start.elapsed();
    outcome(
        rate > BIAS_MIN && took < BIAS_BUDGET,
        format!("majority vote {rate:.3} on 1000 biased problems (> {BIAS_MIN}), {:.1}s (< 60s)", took.as_secs_f64()),
    )
}

fn fairness() -> Outcome {
    let fair = raven_set(Split::Test, Strategy::FairBisection, 1000, 2025);
    let biased = raven_set(Split::Test, Strategy::BiasedPerturbation, 1000, 2025);
    let f = exploitability(&problems(&fair), Attack::MajorityVote).unwrap().rate();
    let b = exploitability(&problems(&biased), Attack::MajorityVote).unwrap().rate();
    outcome(
        (FAIR_RANGE.0..=FAIR_RANGE.1).contains(&f) && b - f >= MIN_GAP,
        format!("fair {f:.3} in [{}, {}], gap {:.3} (>= {MIN_GAP})", FAIR_RANGE.0, FAIR_RANGE.1, b - f),
    )
}

fn well_posedness() -> Outcome {
    let ds = raven_set(Split::Test, Strategy::FairBisection, 700, 77);
    let ps = problems(&ds);
    let layouts: BTreeSet<_> = ps.iter().map(|p| p.layout()).collect();
    let families: BTreeSet<Family> = ps.iter().map(|p| p.concept_tags[0].family).collect();
    let oracle = accuracy(&ds, "oracle", 1).rows[0].accuracy;
    let mut agree = 0;
    for p in ps.iter().take(100) {
        let fast: HashSet<_> = induce_rules(&p.matrix.context, p.layout()).into_iter().collect();
        let slow: HashSet<_> = brute::induce(&p.matrix.context).into_iter().collect();
        agree += usize::from(fast == slow);
    }
    outcome(
        oracle == 1.0 && layouts.len() == 5 && families.len() == 3 && agree == 100,
        format!(
            "oracle {:.1}% on 700 problems ({} layouts, {} families); brute-force induction agrees on {agree}/100",
            100.0 * oracle,
            layouts.len(),
            families.len()
        ),
    )
}

fn header_cells(table: &str) -> Vec<String> {
    table.lines().next().unwrap_or("").split("  ").map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect()
}

fn suite_shape() -> Outcome {
    let specs = probe_specs();
    let probe = materialize(
        Split::Probe,
        11,
        Recipe::Raven { specs: specs.clone(), offset: 0, count: 10 * specs.len(), image_side: None },
    )
    .unwrap();
    let mut per_family: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_tag: BTreeMap<String, usize> = BTreeMap::new();
    for e in &probe.manifest.entries {
        *per_family.entry(e.concept_tags[0].clone()).or_default() += 1;
        *per_tag.entry(e.concept_tags[1].clone()).or_default() += 1;
    }
    let sameness = per_family.get("sameness").copied().unwrap_or(0);
    let progression = per_family.get("progression").copied().unwrap_or(0);
    let tagged = per_tag.len() == specs.len() && per_tag.values().all(|&n| n == 10);

    let test = raven_set(Split::Test, Strategy::FairBisection, 105, 12);
    // Overall column from the test set, concept columns from the probe suite.
    let mut report = accuracy(&test, "oracle", 1).select(&["test"]);
    report.merge(&accuracy(&probe, "oracle", 1).select(&["sameness", "progression"]));
    let table = report.render_table();
    let header = header_cells(&table);
    let expected = ["model", "test (n=105)", "sameness (n=210)", "progression (n=80)"];
    let columns = header == expected && table.lines().count() == 2;
    outcome(
        sameness == 210 && progression == 80 && tagged && columns,
        format!("{sameness} sameness + {progression} progression, 10 per tag; table header {header:?}"),
    )
}

fn arc_suite() -> Outcome {
    let plan: Vec<_> = TOP_BOTTOM_SUITE.iter().chain(&BOUNDARY_SUITE).copied().collect();
    let ds = materialize(Split::Probe, 5, Recipe::Arc { plan }).unwrap();
    let groups: Vec<&str> = ds.manifest.entries.iter().map(|e| e.concept_tags[0].as_str()).collect();
    let top = groups.iter().filter(|g| **g == "top-bottom").count();
    let boundary = groups.iter().filter(|g| **g == "boundary").count();
    let reference = accuracy(&ds, "reference", 3).rows[0].accuracy;
    let identity = accuracy(&ds, "identity", 3);
    let extraction: Vec<f64> = FamilyId::ALL
        .iter()
        .filter(|f| f.is_extraction())
        .filter_map(|f| identity.get("identity", f.name()).map(|r| r.accuracy))
        .collect();
    let identity_zero = !extraction.is_empty() && extraction.iter().all(|a| *a == 0.0);

    // Exactly one correct grid among three guesses scores 1 in every order;
    // three wrong ones score 0; a fourth guess is refused.
    let mut permutation_ok = true;
    for t in tasks(&ds) {
        let right = reference_solve(&t).remove(0).remove(0);
        let wrong_a = t.test[0].input.clone();
        let wrong_b = ArcGrid::from_rows(&[vec![(right.get(0, 0) + 1) % 10]]).unwrap();
        for order in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let pool = [right.clone(), wrong_a.clone(), wrong_b.clone()];
            let guesses: Vec<ArcGrid> = order.iter().map(|&i| pool[i].clone()).collect();
            permutation_ok &= score(&t, &[guesses]).ok() == Some(1.0);
        }
        let misses = if wrong_a == right { vec![wrong_b.clone()] } else { vec![wrong_a.clone(), wrong_b.clone()] };
        permutation_ok &= score(&t, &[misses]).ok() == Some(0.0);
        permutation_ok &= score(&t, &[vec![wrong_a.clone(), wrong_b.clone(), wrong_a.clone(), right]]).is_err();
    }
    outcome(
        top == 14 && boundary == 12 && reference == 1.0 && identity_zero && permutation_ok,
        format!(
            "{top} top/bottom + {boundary} boundary tasks; reference {reference:.2}; identity on extraction {extraction:?}; \
             guess permutations {}",
            if permutation_ok { "ok" } else { "broken" }
        ),
    )
}

fn tree_digest(dir: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(dir, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&f).unwrap());
    }
    hex::encode(h.finalize())
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let specs = probe_specs();
    let recipes = [
        ("raven", Recipe::Raven { specs: specs.clone(), offset: 0, count: 2 * specs.len(), image_side: Some(64) }),
        ("arc", Recipe::Arc { plan: TOP_BOTTOM_SUITE.iter().chain(&BOUNDARY_SUITE).copied().collect() }),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, recipe) in recipes {
        let a = root.path().join(format!("{name}-a"));
        let b = root.path().join(format!("{name}-b"));
        write_dataset(&a, &materialize(Split::Probe, 8, recipe).unwrap()).unwrap();
        let m = read_manifest(&a).unwrap();
        write_dataset(&b, &materialize(m.split, m.master_seed, m.recipe).unwrap()).unwrap();
        let (da, db) = (tree_digest(&a), tree_digest(&b));
        let clean = verify_dataset(&a).unwrap().is_empty();
        pass &= da == db && clean;
        details.push(format!("{name} {}", &da[..12]));
    }
    let pgms = std::fs::read_dir(root.path().join("raven-a/images")).unwrap().count();
    pass &= pgms == 2 * specs.len();
    outcome(pass, format!("regenerated trees hash equal ({}), {pgms} PGM sheets", details.join(", ")))
}

fn random_baseline() -> Outcome {
    let ds = raven_set(Split::Test, Strategy::FairBisection, 1000, 31);
    let acc = accuracy(&ds, "random:5", 1).rows[0].accuracy;
    outcome(
        (acc - CHANCE).abs() <= RANDOM_TOLERANCE,
        format!("random adapter {acc:.3} within {CHANCE} +/- {RANDOM_TOLERANCE} over 1000 problems"),
    )
}

fn scale() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let desk = raven_set(Split::Test, Strategy::FairBisection, 700, 4);
    write_dataset(dir.path(), &desk).unwrap();
    let loaded = conceptprobe::dataset::load_dataset(dir.path()).unwrap();
    let oracle = accuracy(&loaded, "oracle", 1).rows[0].accuracy;
    let desk_time = start.elapsed();

    let start = Instant::now();
    let config =
        SplitConfig::from_toml("master_seed = 70\n[counts]\ntrain = 42000\nval = 14000\ntest = 14000\n").unwrap();
    let counts: Vec<usize> = build_split(&config).unwrap().iter().map(|d| d.manifest.entries.len()).collect();
    let large_time = start.elapsed();
    outcome(
        counts == [42000, 14000, 14000] && desk_time < DESK_BUDGET && oracle == 1.0,
        format!(
            "70,000 problems ({counts:?}) in {:.1}s; 700-problem generate+write+load+eval in {:.1}s (< 300s)",
            large_time.as_secs_f64(),
            desk_time.as_secs_f64()
        ),
    )
}

fn main() {
    let checks: [Check; 8] = [
        ("bias exploit", bias_exploit),
        ("fairness", fairness),
        ("well-posedness", well_posedness),
        ("suite shape", suite_shape),
        ("ARC suite shape", arc_suite),
        ("determinism", determinism),
        ("random baseline", random_baseline),
        ("scale", scale),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
