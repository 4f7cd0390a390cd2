//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]` line;
//! run with `--nocapture` to see them.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use range_pta::cli::solve_program;
use range_pta::report::{precision_table, savings_cell};
use range_pta::{generate, parse_program, GenParams};
use range_pta_core::bitsets::ChunkArray;
use range_pta_core::hierarchy::ClassDecl;
use range_pta_core::solver::{compare, precision_histogram, Comparison, Histogram};
use range_pta_core::{
    AnySet, ChunkConfig, ClassHierarchy, FilterMode, Interval, PointsToSet, Program,
    RangedBitVector, SetKind, Solution,
};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "[{}] {n} {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{name}: {detail}");
}

const EXACT_KINDS: [SetKind; 5] = [
    SetKind::Naive,
    SetKind::Pure,
    SetKind::Hybrid,
    SetKind::Shared,
    SetKind::Sparse,
];

/// A 60-class shape sized for corpora of a few thousand statements.
fn small() -> GenParams {
    GenParams {
        classes: 60,
        max_depth: 6,
        interfaces: 6,
        allocs_max: 6,
        vars: 400,
        statements: 1500,
        fields: 12,
        arrays: 2,
        ..GenParams::default()
    }
}

/// 50 small corpora of 432 to 2000 statements with varying type-violation rates.
fn full_suite_params(seed: u64) -> GenParams {
    GenParams {
        statements: (400 + 32 * seed as usize).min(2000),
        violation_rate: (seed % 4) as f64 * 0.1,
        ..small()
    }
}

struct Corpus {
    name: String,
    text: String,
    program: Program,
}

fn build(name: String, params: &GenParams, seed: u64) -> Corpus {
    let text = generate(params, seed).unwrap();
    let program = parse_program(&text).unwrap();
    Corpus {
        name,
        text,
        program,
    }
}

fn full_suite() -> &'static [Corpus] {
    static SUITE: OnceLock<Vec<Corpus>> = OnceLock::new();
    SUITE.get_or_init(|| {
        (1..=50)
            .map(|s| build(format!("full-{s:02}"), &full_suite_params(s), s))
            .collect()
    })
}

fn default_suite() -> &'static [Corpus] {
    static SUITE: OnceLock<Vec<Corpus>> = OnceLock::new();
    SUITE.get_or_init(|| {
        (1..=20)
            .map(|s| build(format!("default-{s:02}"), &GenParams::default(), s))
            .collect()
    })
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_range-pta"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{cmd:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_corpus(dir: &Path, c: &Corpus) -> PathBuf {
    let path = dir.join(format!("{}.facts", c.name));
    std::fs::write(&path, &c.text).unwrap();
    path
}

// 1 -----------------------------------------------------------------------

#[test]
fn numbering_matches_parent_walk() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut classes_checked, mut max_allocs) = (0usize, 0usize);
    let mut mismatches = Vec::new();
    for round in 0..200 {
        let n = rng.random_range(1..=100usize);
        let parents: Vec<Option<usize>> = (0..n)
            .map(|c| (c > 0).then(|| rng.random_range(0..c)))
            .collect();
        let decls: Vec<ClassDecl> = (0..n)
            .map(|c| {
                let parent = parents[c].map(|p| format!("C{p}"));
                ClassDecl::new(&format!("C{c}"), parent.as_deref(), &[])
            })
            .collect();
        let h = ClassHierarchy::build(&decls, &[]).unwrap();
        let ids: Vec<_> = (0..n)
            .map(|c| h.lookup(&format!("C{c}")).unwrap())
            .collect();
        let alloc_count = rng.random_range(0..=500usize);
        max_allocs = max_allocs.max(alloc_count);
        let allocs: Vec<usize> = (0..alloc_count).map(|_| rng.random_range(0..n)).collect();
        let types: Vec<_> = allocs.iter().map(|&c| ids[c]).collect();
        let nr = h.number_allocations(&types).unwrap();

        let is_ancestor = |anc: usize, mut c: usize| loop {
            if c == anc {
                return true;
            }
            match parents[c] {
                Some(p) => c = p,
                None => return false,
            }
        };
        let mut intervals: Vec<Interval> = Vec::new();
        for (c, &t) in ids.iter().enumerate() {
            let want: BTreeSet<u32> = (0..alloc_count)
                .filter(|&s| is_ancestor(c, allocs[s]))
                .map(|s| nr.index_of(s))
                .collect();
            let iv = nr.interval(t).unwrap();
            let got: BTreeSet<u32> = if iv.is_empty() {
                BTreeSet::new()
            } else {
                (iv.lower()..=iv.upper()).collect()
            };
            if got != want {
                mismatches.push(format!("round {round} class C{c}"));
            }
            if !iv.is_empty() {
                intervals.push(iv);
            }
            classes_checked += 1;
        }
        for (i, a) in intervals.iter().enumerate() {
            for b in &intervals[i + 1..] {
                let laminar =
                    !a.intersects(*b) || a.contains_interval(*b) || b.contains_interval(*a);
                if !laminar {
                    mismatches.push(format!("round {round}: {a:?} and {b:?} cross"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "numbering",
        mismatches.is_empty() && secs < 10.0,
        &format!(
            "200 hierarchies, {classes_checked} classes, up to {max_allocs} allocs, {} mismatches, {secs:.2}s{}",
            mismatches.len(),
            mismatches.first().map_or(String::new(), |m| format!(" (first: {m})"))
        ),
    );
}

// 2 -----------------------------------------------------------------------

#[test]
fn worked_hierarchy_trace() {
    let mut text = String::from(
        "class Object\nclass A extends Object\nclass B extends A\nclass C extends A\nclass D extends Object\n",
    );
    let mut k = 0;
    for (ty, count) in [("Object", 2), ("A", 3), ("B", 1), ("C", 2), ("D", 4)] {
        for _ in 0..count {
            k += 1;
            text.push_str(&format!("alloc o{k} : {ty}\n"));
        }
    }
    let p = parse_program(&text).unwrap();
    let nr = p.number().unwrap();
    let h = &p.hierarchy;
    let shown = |name: &str| {
        let iv = nr.interval(h.lookup(name).unwrap()).unwrap();
        format!("{name}=[{},{}]", iv.lower(), iv.upper())
    };
    let got: Vec<String> = ["B", "C", "A", "D", "Object"]
        .iter()
        .map(|n| shown(n))
        .collect();
    let want = ["B=[6,6]", "C=[7,8]", "A=[3,8]", "D=[9,12]", "Object=[1,12]"];
    let order: Vec<&str> = nr.postorder().iter().map(|&t| h.name(t)).collect();
    let ok = got == want && order == ["B", "C", "A", "D", "Object"];
    verdict(
        2,
        "worked hierarchy",
        ok,
        &format!(
            "intervals {} ; postorder {}",
            got.join(" "),
            order.join(", ")
        ),
    );
}

// 3 -----------------------------------------------------------------------

fn random_interval(rng: &mut ChaCha8Rng, max: u32) -> Interval {
    let a = rng.random_range(1..=max);
    let span = rng.random_range(0..=max / 2);
    let b = (a + span).min(max);
    Interval::new(a, b).unwrap()
}

/// Vector over `iv` whose bits include random slack, via a universe vector.
fn random_vector(
    rng: &mut ChaCha8Rng,
    iv: Interval,
    cfg: ChunkConfig,
    max: u32,
) -> RangedBitVector {
    let mut v = RangedBitVector::new(iv, cfg);
    let mut wide = RangedBitVector::new(Interval::new(1, max + 64).unwrap(), cfg);
    let density = rng.random_range(0.0..1.0);
    for i in v.aligned_lower()..=v.aligned_upper() {
        if rng.random_bool(density) {
            wide.set(i);
        }
    }
    v.or(&wide).unwrap();
    v
}

#[test]
fn ranged_or_matches_bit_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut cases, mut mismatches, mut partial) = (0u32, 0u32, 0u32);
    for round in 0..12_000u32 {
        let cfg = ChunkConfig::new(if round % 2 == 0 { 8 } else { 64 }).unwrap();
        let max = if round % 3 == 0 { 40 } else { 400 };
        let (xi, yi) = (
            random_interval(&mut rng, max),
            random_interval(&mut rng, max),
        );
        let mut x = random_vector(&mut rng, xi, cfg, max);
        let y = random_vector(&mut rng, yi, cfg, max);
        let before: BTreeSet<u32> = x.iter().collect();
        let ybits: BTreeSet<u32> = y.iter().collect();
        let mut want = before.clone();
        if xi.intersects(yi) {
            want.extend(ybits.iter().filter(|&&i| x.in_aligned_span(i)));
            if !xi.contains_interval(yi) && !yi.contains_interval(xi) {
                partial += 1;
            }
        }
        let changed = x.or(&y).unwrap();
        let got: BTreeSet<u32> = x.iter().collect();
        if got != want || changed != (want != before) {
            mismatches += 1;
        }
        cases += 1;
    }
    let v = RangedBitVector::new(Interval::new(10, 20).unwrap(), ChunkConfig::new(8).unwrap());
    let shape_ok = v.chunk_count() == 2 && v.aligned_lower() == 8;
    verdict(
        3,
        "ranged or",
        mismatches == 0 && shape_ok && cases >= 10_000,
        &format!(
            "{cases} cases ({partial} partial overlaps), {mismatches} mismatches; [10,20] at 8 bits: {} chunks from {}",
            v.chunk_count(),
            v.aligned_lower()
        ),
    );
}

// 4 -----------------------------------------------------------------------

#[test]
fn exact_representations_emit_identical_solutions() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut diffs = Vec::new();
    for c in full_suite() {
        let corpus = write_corpus(dir.path(), c);
        let mut emitted = Vec::new();
        for kind in EXACT_KINDS {
            let sol = dir.path().join(format!("{}.{kind}.sol", c.name));
            run_ok(
                bin()
                    .args([
                        "solve",
                        "--set",
                        kind.name(),
                        "--filter",
                        "mask",
                        "--emit-solution",
                    ])
                    .arg(&sol)
                    .arg(&corpus),
            );
            emitted.push((kind, std::fs::read(&sol).unwrap()));
        }
        for (kind, bytes) in &emitted[1..] {
            if bytes != &emitted[0].1 {
                diffs.push(format!("{} {kind}", c.name));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "representation equivalence",
        diffs.is_empty() && secs < 60.0,
        &format!(
            "{} corpora x {} kinds via --emit-solution, {} diffs, {secs:.1}s",
            full_suite().len(),
            EXACT_KINDS.len(),
            diffs.len()
        ),
    );
}

// 5 -----------------------------------------------------------------------

/// Distance from `m` to the nearest bound of any interval.
fn boundary_distance(ranges: &[Interval], m: u32) -> u32 {
    ranges
        .iter()
        .flat_map(|iv| [iv.lower(), iv.upper()])
        .map(|b| b.abs_diff(m))
        .min()
        .unwrap_or(u32::MAX)
}

#[test]
fn intrinsic_filtering_is_confined_to_slack() {
    let cb = 64;
    let (mut superset_fail, mut extras, mut near, mut in_slack) = (Vec::new(), 0u64, 0u64, 0u64);
    let mut far_inside = 0u64;
    for c in full_suite() {
        let p = &c.program;
        let ranged = solve_program(p, SetKind::HybridRanged, FilterMode::Intrinsic, cb).unwrap();
        let mask = solve_program(p, SetKind::Hybrid, FilterMode::Mask, cb).unwrap();
        let diffs = match compare(&ranged, &mask).unwrap() {
            Comparison::Equal => Vec::new(),
            Comparison::ASupersetOfB(d) => d,
            other => {
                superset_fail.push(format!("{}: {}", c.name, other.label()));
                continue;
            }
        };
        let cx = ranged.context();
        for d in diffs {
            let ranges = cx.ranges(d.owner);
            for &(m, slack) in &d.extras {
                extras += 1;
                let close = boundary_distance(ranges, m) < cb;
                near += u64::from(close);
                in_slack += u64::from(slack);
                far_inside += u64::from(!close && cx.in_ranges(d.owner, m));
            }
        }
    }

    // Chunk-aligned intervals leave no slack, so the two modes must agree.
    let mut padded_diffs = Vec::new();
    for seed in 1..=10u64 {
        for pad in [8u32, 64] {
            let params = GenParams {
                pad_chunk: Some(pad),
                statements: 1000,
                violation_rate: 0.2,
                ..small()
            };
            let c = build(format!("padded-{pad}-{seed}"), &params, seed);
            let p = &c.program;
            let ranged =
                solve_program(p, SetKind::HybridRanged, FilterMode::Intrinsic, pad).unwrap();
            let mask = solve_program(p, SetKind::Hybrid, FilterMode::Mask, pad).unwrap();
            if ranged.canonical_text(&p.pag) != mask.canonical_text(&p.pag) {
                padded_diffs.push(c.name);
            }
        }
    }
    let confined = extras == near;
    let pct = if extras == 0 {
        100.0
    } else {
        near as f64 * 100.0 / extras as f64
    };
    verdict(
        5,
        "filter ordering and slack confinement",
        superset_fail.is_empty() && confined && padded_diffs.is_empty(),
        &format!(
            "superset on {}/{} corpora; {extras} extra members, {near} ({pct:.1}%) within {} of a destination bound, {in_slack} in destination slack, {far_inside} farther away but type compatible; padded corpora differing: {}/20",
            full_suite().len() - superset_fail.len(),
            full_suite().len(),
            cb - 1,
            padded_diffs.len()
        ),
    );
}

// 6 -----------------------------------------------------------------------

fn histogram_sum(hs: &[Histogram]) -> Histogram {
    let mut out = Histogram {
        counts: [0; 7],
        population: 0,
    };
    for h in hs {
        for (o, c) in out.counts.iter_mut().zip(h.counts) {
            *o += c;
        }
        out.population += h.population;
    }
    out
}

fn worst_delta(corpora: &[Corpus]) -> (f64, Vec<Histogram>, Vec<Histogram>) {
    let (mut worst, mut ha, mut hb) = (0.0f64, Vec::new(), Vec::new());
    for c in corpora {
        let p = &c.program;
        let a = solve_program(p, SetKind::HybridRanged, FilterMode::Intrinsic, 64).unwrap();
        let b = solve_program(p, SetKind::Hybrid, FilterMode::Mask, 64).unwrap();
        let (x, y) = (
            precision_histogram(&a, &p.pag),
            precision_histogram(&b, &p.pag),
        );
        for (u, v) in x.percentages().iter().zip(y.percentages()) {
            worst = worst.max((u - v).abs());
        }
        ha.push(x);
        hb.push(y);
    }
    (worst, ha, hb)
}

#[test]
fn precision_loss_is_small() {
    let (worst, ha, hb) = worst_delta(default_suite());
    println!(
        "{}",
        precision_table(
            "intrinsic",
            &histogram_sum(&ha),
            "type masking",
            &histogram_sum(&hb)
        )
    );
    let (worst_full, _, _) = worst_delta(full_suite());
    verdict(
        6,
        "precision delta",
        worst <= 1.0,
        &format!(
            "worst per-corpus bucket delta {worst:.3} points over {} default corpora (full suite, not graded: {worst_full:.3})",
            default_suite().len()
        ),
    );
}

// 7 -----------------------------------------------------------------------

#[test]
fn ranged_hybrid_uses_less_memory() {
    let mut ratios = Vec::new();
    for (classes, depth, allocs_max, vars, statements) in [
        (40, 5, 60, 400, 6000),
        (60, 6, 80, 600, 10000),
        (100, 6, 40, 800, 10000),
        (80, 8, 100, 500, 12000),
    ] {
        for seed in 1..=3u64 {
            let params = GenParams {
                classes,
                max_depth: depth,
                allocs_min: allocs_max / 2,
                allocs_max,
                vars,
                statements,
                exact_type_rate: 0.8,
                ..small()
            };
            let c = build(format!("deep-{depth}-{seed}"), &params, seed);
            let p = &c.program;
            let a = solve_program(p, SetKind::HybridRanged, FilterMode::Intrinsic, 64).unwrap();
            let b = solve_program(p, SetKind::Hybrid, FilterMode::Mask, 64).unwrap();
            ratios.push(a.footprint().total() as f64 / b.footprint().total() as f64);
        }
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let best = ratios.iter().cloned().fold(f64::MAX, f64::min);
    verdict(
        7,
        "memory ratio",
        worst <= 0.7,
        &format!(
            "ranged-hybrid/hybrid modeled footprint over {} deep corpora: {best:.3} to {worst:.3}",
            ratios.len()
        ),
    );
}

// 8 -----------------------------------------------------------------------

/// All-zero windows of eight chunks, from set bits and array geometry only.
fn zero_window_oracle(
    bits: impl Iterator<Item = u32>,
    lower: u32,
    chunks: u32,
    cfg: ChunkConfig,
) -> u64 {
    let cb = cfg.bits();
    let windows = chunks.div_ceil(8);
    let busy: BTreeSet<u32> = bits.map(|b| (b - lower) / cb / 8).collect();
    (0..windows)
        .filter(|w| !busy.contains(w))
        .map(|w| u64::from((chunks - w * 8).min(8)) * u64::from(cb / 8))
        .sum()
}

fn savings_oracle(sol: &Solution) -> u64 {
    let cfg = sol.config().chunk;
    let ranged = |r: &range_pta_core::ptsets::RangedPointsToSet| -> u64 {
        r.vectors()
            .iter()
            .map(|v| zero_window_oracle(v.iter(), v.aligned_lower(), v.chunk_count(), cfg))
            .sum()
    };
    sol.nodes()
        .map(|(_, s)| match s {
            AnySet::Pure(p) => zero_window_oracle(p.bits().iter(), 0, p.bits().chunk_count(), cfg),
            AnySet::Hybrid(h) => h
                .bits()
                .map_or(0, |b| zero_window_oracle(b.iter(), 0, b.chunk_count(), cfg)),
            AnySet::Ranged(r) => ranged(r),
            AnySet::HybridRanged(h) => h.ranged().map_or(0, ranged),
            other => panic!("no bit arrays in {}", other.kind()),
        })
        .sum()
}

#[test]
fn sparse_savings_match_window_oracle() {
    let kinds = [
        SetKind::Pure,
        SetKind::Hybrid,
        SetKind::Ranged,
        SetKind::HybridRanged,
    ];
    let (mut mismatches, mut nonzero) = (Vec::new(), 0);
    for seed in 1..=100u64 {
        let params = GenParams {
            classes: 20,
            max_depth: 5,
            vars: 120,
            statements: 400,
            violation_rate: 0.1,
            ..small()
        };
        let c = build(format!("savings-{seed}"), &params, seed);
        let kind = kinds[seed as usize % 4];
        let filter = match (seed % 3, kind.is_ranged()) {
            (0, _) => FilterMode::None,
            (_, true) => FilterMode::Intrinsic,
            (_, false) => FilterMode::Mask,
        };
        let cb = [8, 16, 32, 64][(seed as usize / 4) % 4];
        let sol = solve_program(&c.program, kind, filter, cb).unwrap();
        let got = sol.sparse_savings().unwrap();
        let want = savings_oracle(&sol);
        nonzero += usize::from(want > 0);
        if got != want {
            mismatches.push(format!("{} {kind} {filter} {cb}: {got} vs {want}", c.name));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let mut cells = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let c = &default_suite()[k];
        let path = write_corpus(dir.path(), c);
        let filter = if kind.is_ranged() {
            "intrinsic"
        } else {
            "mask"
        };
        let out = run_ok(
            bin()
                .args(["savings", "--set", kind.name(), "--filter", filter])
                .arg(&path),
        );
        let cell = out
            .lines()
            .find_map(|l| l.strip_prefix("total/saved (MB, modeled): "))
            .unwrap_or("")
            .to_string();
        let fl = if kind.is_ranged() {
            FilterMode::Intrinsic
        } else {
            FilterMode::Mask
        };
        let sol = solve_program(&c.program, *kind, fl, 64).unwrap();
        let want = savings_cell(sol.footprint().total(), savings_oracle(&sol));
        let shaped = cell.split_once('/').is_some_and(|(a, b)| {
            [a, b].iter().all(|x| {
                x.split_once('.').is_some_and(|(i, f)| {
                    !i.is_empty()
                        && i.bytes().all(|b| b.is_ascii_digit())
                        && f.len() == 1
                        && f.bytes().all(|b| b.is_ascii_digit())
                })
            })
        });
        if cell != want || !shaped {
            mismatches.push(format!("cli {kind}: `{cell}` vs `{want}`"));
        }
        cells.push(format!("{kind} {cell}"));
    }
    verdict(
        8,
        "sparse savings",
        mismatches.is_empty(),
        &format!(
            "100 solutions ({nonzero} with savings), {} mismatches; cli cells {}",
            mismatches.len(),
            cells.join(", ")
        ),
    );
}

// 9 -----------------------------------------------------------------------

/// CSV report with the timing column removed.
fn without_timing(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let col = rows[0].iter().position(|&h| h == "wall_ms").unwrap();
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|&(i, _)| i != col)
                .map(|(_, v)| *v)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut problems = Vec::new();
    for seed in [1u64, 42, 9000] {
        let gen = |name: &str| {
            let path = d.join(name);
            run_ok(
                bin()
                    .args([
                        "gen",
                        "--seed",
                        &seed.to_string(),
                        "--statements",
                        "1500",
                        "-o",
                    ])
                    .arg(&path),
            );
            std::fs::read(path).unwrap()
        };
        let (a, b) = (
            gen(&format!("a{seed}.facts")),
            gen(&format!("b{seed}.facts")),
        );
        let lib = generate(
            &GenParams {
                statements: 1500,
                ..GenParams::default()
            },
            seed,
        )
        .unwrap();
        if a != b || a != lib.as_bytes() {
            problems.push(format!("gen seed {seed}"));
        }
        let corpus = d.join(format!("a{seed}.facts"));
        for (set, filter) in [
            ("hybrid", "mask"),
            ("ranged-hybrid", "intrinsic"),
            ("shared", "mask"),
            ("sparse", "none"),
        ] {
            let solve = |tag: &str| {
                let sol = d.join(format!("{seed}-{set}-{tag}.sol"));
                let csv = run_ok(
                    bin()
                        .args([
                            "solve",
                            "--set",
                            set,
                            "--filter",
                            filter,
                            "--format",
                            "csv",
                            "--emit-solution",
                        ])
                        .arg(&sol)
                        .arg(&corpus),
                );
                (std::fs::read(sol).unwrap(), without_timing(&csv))
            };
            if solve("x") != solve("y") {
                problems.push(format!("solve seed {seed} {set}:{filter}"));
            }
        }
    }
    verdict(
        9,
        "determinism",
        problems.is_empty(),
        &format!(
            "3 seeds, gen twice plus library, 4 solve configs twice each; {} differences",
            problems.len()
        ),
    );
}

// 10 ----------------------------------------------------------------------

#[test]
fn extra_pass_changes_nothing() {
    let mut configs: Vec<(SetKind, FilterMode)> = SetKind::ALL
        .iter()
        .map(|&k| {
            (
                k,
                if k.is_ranged() {
                    FilterMode::Intrinsic
                } else {
                    FilterMode::Mask
                },
            )
        })
        .collect();
    configs.push((SetKind::HybridRanged, FilterMode::None));
    let (mut runs, mut unions, mut bad) = (0, 0u64, Vec::new());
    for c in full_suite() {
        for &(kind, filter) in &configs {
            for cb in [8, 64] {
                let sol = solve_program(&c.program, kind, filter, cb).unwrap();
                let n = sol.recheck(&c.program.pag);
                runs += 1;
                unions += n;
                if n != 0 {
                    bad.push(format!("{} {kind}:{filter}/{cb}", c.name));
                }
            }
        }
    }
    verdict(
        10,
        "fixpoint idempotence",
        unions == 0,
        &format!(
            "{runs} solutions, {unions} successful unions in the extra pass{}",
            bad.first()
                .map_or(String::new(), |b| format!(" (first: {b})"))
        ),
    );
}
