//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any of them fails.

use std::alloc::{GlobalAlloc, Layout, System};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simr_core::evaluation::{format_segments, histogram, BIN_WIDTH};
use simr_core::recognizer::{ambiguity_level, ambiguity_levels, filter_noise, find_chains};
use simr_core::*;

// Heap high-water tracking for the complexity check.
struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            if new_size >= layout.size() {
                let grow = new_size - layout.size();
                let now = CURRENT.fetch_add(grow, Ordering::Relaxed) + grow;
                PEAK.fetch_max(now, Ordering::Relaxed);
            } else {
                CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
            }
        }
        p
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Bytes allocated above the starting level at the peak of `f`.
fn peak_extra<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let base = CURRENT.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let out = f();
    (out, PEAK.load(Ordering::Relaxed) - base)
}

struct Outcome {
    pass: bool,
    detail: String,
}

/// Written to the raw stdout handle so the lines show without `--nocapture`.
fn report(id: u32, name: &str, started: Instant, o: &Outcome) {
    let _ = writeln!(
        std::io::stdout(),
        "criterion {id} {}: {name} ({:.1?}) {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed(),
        o.detail
    );
}

fn axes(text_x: &str, text_y: &str) -> (AxisMap, AxisMap) {
    let rules = TokenRules::default();
    (
        tokenize_cognate_mode(text_x, &rules).unwrap(),
        tokenize_cognate_mode(text_y, &rules).unwrap(),
    )
}

fn map_with_defaults(b: &SyntheticBitext) -> BitextMap {
    let (ax, ay) = axes(&b.text_x, &b.text_y);
    map_bitext(
        &ax,
        &ay,
        &SimrParams::default(),
        &SearchConfig::default(),
        &Predicate::cognates(0.71),
    )
    .unwrap()
}

fn rms_over(map: &BitextMap, gold: &GoldTBM, keep: impl Fn(&Point) -> bool) -> (f64, usize) {
    let kept: Vec<Point> = gold.tpcs().iter().copied().filter(|p| keep(p)).collect();
    let n = kept.len();
    let report = rms_perpendicular_error(map, &GoldTBM::new(kept).unwrap()).unwrap();
    (report.rms_error, n)
}

// ---------------------------------------------------------------- 1

/// Windows of `k` consecutive points in diagonal order that pass the three
/// chain filters, computed with exact integer ordering and a two-pass fit.
fn oracle_windows(pts: &[(i64, i64)], w: i64, h: i64, p: &SimrParams) -> Vec<Vec<(i64, i64)>> {
    let k = p.chain_size;
    let mut order = pts.to_vec();
    // x + y w/h, scaled by h to stay in integers.
    order.sort_by_key(|&(x, y)| (x * h + y * w, x, y));
    let mut out = Vec::new();
    if order.len() < k {
        return out;
    }
    for start in 0..=order.len() - k {
        let win = &order[start..start + k];
        let injective =
            (0..k).all(|i| (i + 1..k).all(|j| win[i].0 != win[j].0 && win[i].1 != win[j].1));
        if !injective {
            continue;
        }
        let n = k as f64;
        let mx = win.iter().map(|q| q.0 as f64).sum::<f64>() / n;
        let my = win.iter().map(|q| q.1 as f64).sum::<f64>() / n;
        let sxy: f64 = win
            .iter()
            .map(|q| (q.0 as f64 - mx) * (q.1 as f64 - my))
            .sum();
        let sxx: f64 = win.iter().map(|q| (q.0 as f64 - mx).powi(2)).sum();
        let b = sxy / sxx;
        let a = my - b * mx;
        let norm = (1.0 + b * b).sqrt();
        let dispersal = (win
            .iter()
            .map(|q| ((q.1 as f64 - a - b * q.0 as f64) / norm).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let angle = (b.atan() - (h as f64 / w as f64).atan()).abs();
        if dispersal <= p.max_point_dispersal && angle <= p.max_angle_deviation {
            out.push(win.to_vec());
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut accepted = 0;
    for _ in 0..500 {
        let w: i64 = rng.random_range(20..200);
        let h: i64 = rng.random_range(20..200);
        let n = rng.random_range(0..=12);
        let near_line = rng.random_bool(0.5);
        let pts: Vec<(i64, i64)> = (0..n)
            .map(|_| {
                let x = rng.random_range(0..=w);
                let y = if near_line {
                    (x * h / w + rng.random_range(-4..=4)).clamp(0, h)
                } else {
                    rng.random_range(0..=h)
                };
                (x, y)
            })
            .collect();
        let params = SimrParams {
            chain_size: rng.random_range(2..=6),
            max_point_dispersal: rng.random_range(0.3..12.0),
            max_angle_deviation: rng.random_range(1.0f64..45.0).to_radians(),
            max_point_ambiguity: 1,
        };
        let space = BitextSpace::new(w as usize, h as usize).unwrap();
        let points: Vec<Point> = pts
            .iter()
            .map(|&(x, y)| Point::new(x as f64, y as f64))
            .collect();
        let got: Vec<Vec<(i64, i64)>> = find_chains(&points, &params, &space)
            .iter()
            .map(|c| c.points.iter().map(|p| (p.x as i64, p.y as i64)).collect())
            .collect();
        let want = oracle_windows(&pts, w, h, &params);
        accepted += want.len();
        if got != want {
            mismatches += 1;
        }
    }

    let mut ambiguity_mismatches = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=50);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(0..8) as f64, rng.random_range(0..8) as f64))
            .collect();
        let brute: Vec<usize> = pts
            .iter()
            .map(|p| {
                let mut column = 0;
                let mut row = 0;
                for q in &pts {
                    if q.x == p.x {
                        column += 1;
                    }
                    if q.y == p.y {
                        row += 1;
                    }
                }
                column + row - 2
            })
            .collect();
        let single: Vec<usize> = pts.iter().map(|p| ambiguity_level(p, &pts)).collect();
        let threshold = rng.random_range(0..6);
        let params = SimrParams {
            max_point_ambiguity: threshold,
            ..SimrParams::default()
        };
        let kept: Vec<Point> = pts
            .iter()
            .zip(&brute)
            .filter(|(_, l)| **l <= threshold)
            .map(|(p, _)| *p)
            .collect();
        if single != brute || ambiguity_levels(&pts) != brute || filter_noise(&pts, &params) != kept
        {
            ambiguity_mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0 && ambiguity_mismatches == 0,
        detail: format!(
            "chain mismatches {mismatches}/500 ({accepted} oracle chains), ambiguity mismatches {ambiguity_mismatches}/500"
        ),
    }
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let params = SimrParams::default();
    let predicate = Predicate::cognates(1.0);
    let mut worst_rms: f64 = 0.0;
    let mut worst_dev: f64 = 0.0;
    for i in 0..20u64 {
        let len = 1000 + (i as usize) * 49_000 / 19;
        let text = random_text(len, 100 + i);
        let ax = tokenize_cognate_mode(&text, &TokenRules::default()).unwrap();
        let map = map_bitext(&ax, &ax, &params, &SearchConfig::default(), &predicate).unwrap();
        let gold = synthgen::generate(&text, &DistortionSpec::identity())
            .unwrap()
            .gold;
        worst_rms = worst_rms.max(rms_perpendicular_error(&map, &gold).unwrap().rms_error);
        for k in 0..1000 {
            let x = len as f64 * k as f64 / 999.0;
            worst_dev = worst_dev.max((map.interpolate(x) - x).abs());
        }
    }
    let limit = params.max_point_dispersal;
    Outcome {
        pass: worst_rms <= limit && worst_dev <= limit,
        detail: format!(
            "worst rms {worst_rms:.3}, worst |interpolate(x) - x| {worst_dev:.3}, limit {limit}"
        ),
    }
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let source = random_text(10_000, 3);
    let mut pass = true;
    let mut parts = Vec::new();
    for (rate, limit) in [(0.05, 5.0), (0.10, 10.0), (0.15, 20.0)] {
        let spec = DistortionSpec {
            substitution_rate: rate,
            rng_seed: 30,
            ..DistortionSpec::default()
        };
        let b = synthgen::generate(&source, &spec).unwrap();
        let rms = rms_perpendicular_error(&map_with_defaults(&b), &b.gold)
            .unwrap()
            .rms_error;
        pass &= rms <= limit;
        parts.push(format!("{rate:.2}: {rms:.2} <= {limit}"));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

// ------------------------------------------------------------ 4 and 5

/// Distortion shared by the omission and inversion checks, so their
/// reference runs have a non-zero error to compare against.
fn base_spec(seed: u64) -> DistortionSpec {
    DistortionSpec {
        substitution_rate: 0.10,
        length_jitter: 0.3,
        rng_seed: seed,
        ..DistortionSpec::default()
    }
}

fn criterion_4() -> Outcome {
    const POS: usize = 5000;
    const LEN: usize = 500;
    const MARGIN: f64 = 200.0;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let source = random_text(10_000, 400 + seed);
        let plain = synthgen::generate(&source, &base_spec(seed)).unwrap();
        let spec = DistortionSpec {
            omission_spans: vec![(POS, LEN)],
            ..base_spec(seed)
        };
        let cut = synthgen::generate(&source, &spec).unwrap();
        // The omitted block is absent from x, so on that axis it collapses to
        // x = POS. On the y axis it spans the distorted text of the block.
        let (gap_lo, gap_hi) = {
            let before = cut
                .gold
                .tpcs()
                .iter()
                .rev()
                .find(|p| p.x <= POS as f64)
                .unwrap();
            let after = cut.gold.tpcs().iter().find(|p| p.x > POS as f64).unwrap();
            (before.y, after.y)
        };
        let far = |p: &Point| {
            (p.x - POS as f64).abs() > MARGIN && (p.y < gap_lo - MARGIN || p.y > gap_hi + MARGIN)
        };
        let (with_gap, n) = rms_over(&map_with_defaults(&cut), &cut.gold, far);
        let reference = rms_perpendicular_error(&map_with_defaults(&plain), &plain.gold)
            .unwrap()
            .rms_error;
        assert!(n > 500);
        let ratio = with_gap / reference;
        worst = worst.max(ratio);
        pass &= with_gap <= 2.0 * reference;
    }
    Outcome {
        pass,
        detail: format!("worst ratio over 10 seeds {worst:.2} (limit 2)"),
    }
}

fn criterion_5() -> Outcome {
    let mut groups_plain = Vec::new();
    let mut groups_inverted = Vec::new();
    let mut non_monotonic = 0;
    for seed in 0..10u64 {
        let source = random_text(10_000, 500 + seed);
        let plain = synthgen::generate(&source, &base_spec(seed)).unwrap();
        let spec = DistortionSpec {
            inversion_rate: 0.1,
            ..base_spec(seed)
        };
        let inv = synthgen::generate(&source, &spec).unwrap();
        let map = map_with_defaults(&inv);
        non_monotonic += map.chains.iter().filter(|c| c.is_non_monotonic()).count();
        let r = rms_perpendicular_error(&map, &inv.gold).unwrap();
        groups_inverted.push((r.sum_of_squares(), inv.gold.len()));
        let r = rms_perpendicular_error(&map_with_defaults(&plain), &plain.gold).unwrap();
        groups_plain.push((r.sum_of_squares(), plain.gold.len()));
    }
    let plain = optimizer::pooled_rms(&groups_plain);
    let inverted = optimizer::pooled_rms(&groups_inverted);
    Outcome {
        pass: non_monotonic > 0 && inverted <= 2.0 * plain,
        detail: format!(
            "non-monotonic chains {non_monotonic}, rms {inverted:.2} vs inversion-free {plain:.2} (limit 2x)"
        ),
    }
}

// ---------------------------------------------------------------- 6

fn training_set() -> Vec<TrainingBitext> {
    (0..3u64)
        .map(|i| {
            let spec = DistortionSpec {
                inversion_rate: 0.05,
                ..base_spec(60 + i)
            };
            let b = synthgen::generate(&random_text(4000, 600 + i), &spec).unwrap();
            let (x, y) = axes(&b.text_x, &b.text_y);
            TrainingBitext { x, y, gold: b.gold }
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let objective = Objective::new(
        training_set(),
        Predicate::cognates(0.71),
        SearchConfig::default(),
    );
    let defaults = objective.evaluate(&SimrParams::default()).unwrap();
    let cfg = AnnealConfig {
        cooling_rate: 0.7,
        steps_per_temperature: 5,
        ..AnnealConfig::default()
    };
    let first = anneal(&cfg, &objective).unwrap();
    let second = anneal(&cfg, &objective).unwrap();
    let deterministic = first.history_tsv() == second.history_tsv();

    // One free axis, the rest pinned at the defaults.
    let d = SimrParams::default();
    let bounds = ParamBounds {
        chain_size: optimizer::Bound::new(3.0, 8.0, 1.0),
        max_point_dispersal: optimizer::Bound::fixed(d.max_point_dispersal),
        max_angle_deviation_deg: optimizer::Bound::fixed(d.angle_deg()),
        max_point_ambiguity: optimizer::Bound::fixed(d.max_point_ambiguity as f64),
    };
    let scan = (3..=8)
        .map(|k| {
            objective
                .evaluate(&SimrParams { chain_size: k, ..d })
                .unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    let collapsed = anneal(
        &AnnealConfig {
            bounds,
            ..AnnealConfig::default()
        },
        &objective,
    )
    .unwrap();

    Outcome {
        pass: first.best.objective <= defaults && collapsed.best.objective == scan && deterministic,
        detail: format!(
            "best {:.3} vs defaults {defaults:.3}; 1-D best {:.6} vs scan {scan:.6}; deterministic {deterministic}",
            first.best.objective, collapsed.best.objective
        ),
    }
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let sizes = [10_000usize, 40_000, 160_000];
    let mut times = Vec::new();
    let mut peaks = Vec::new();
    for &n in &sizes {
        let text = random_text(n, 7);
        let run = || {
            let ax = tokenize_cognate_mode(&text, &TokenRules::default()).unwrap();
            map_bitext(
                &ax,
                &ax,
                &SimrParams::default(),
                &SearchConfig::default(),
                &Predicate::cognates(1.0),
            )
            .unwrap()
        };
        let mut best = Duration::MAX;
        for _ in 0..3 {
            let t = Instant::now();
            std::hint::black_box(run());
            best = best.min(t.elapsed());
        }
        let (_, peak) = peak_extra(run);
        times.push(best.as_secs_f64());
        peaks.push(peak as f64);
    }
    let time_ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    let mem_ratios: Vec<f64> = peaks.windows(2).map(|w| w[1] / w[0]).collect();
    Outcome {
        pass: time_ratios.iter().all(|&r| r <= 6.0) && mem_ratios.iter().all(|&r| r <= 5.0),
        detail: format!(
            "time x{:.2}, x{:.2} (limit 6); memory x{:.2}, x{:.2} (limit 5)",
            time_ratios[0], time_ratios[1], mem_ratios[0], mem_ratios[1]
        ),
    }
}

// ---------------------------------------------------------------- 8

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * b.abs()
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();

    let square = BitextSpace::new(1000, 1000).unwrap();
    let diagonal = BitextMap::diagonal(square);
    let one = GoldTBM::new(vec![Point::new(500.0, 510.0)]).unwrap();
    let r = rms_perpendicular_error(&diagonal, &one).unwrap().rms_error;
    if !rel_close(r, 10.0 / 2f64.sqrt()) {
        failures.push(format!("single offset {r}"));
    }

    let gold: Vec<Point> = (1..=50)
        .map(|i| Point::new(i as f64 * 19.0, i as f64 * 19.0))
        .collect();
    let shifted: Vec<Point> = (1..=197)
        .map(|k| Point::new(k as f64 * 5.0, k as f64 * 5.0 + 14.14))
        .collect();
    let map = BitextMap::from_points(square, &shifted).unwrap();
    let r = rms_perpendicular_error(&map, &GoldTBM::new(gold.clone()).unwrap())
        .unwrap()
        .rms_error;
    if !rel_close(r, 14.14 / 2f64.sqrt()) {
        failures.push(format!("constant offset {r}"));
    }

    let on_map = GoldTBM::new(gold).unwrap();
    let r = rms_perpendicular_error(&diagonal, &on_map)
        .unwrap()
        .rms_error;
    if r != 0.0 {
        failures.push(format!("exact map {r}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let errors: Vec<f64> = (0..rng.random_range(1..300))
            .map(|_| rng.random_range(-120.0..120.0))
            .collect();
        let bins = histogram(&errors);
        let total: f64 = bins.iter().map(|b| b.fraction).sum();
        let count: usize = bins.iter().map(|b| b.count).sum();
        let shaped = bins
            .iter()
            .all(|b| b.upper - b.lower == BIN_WIDTH && (b.lower / BIN_WIDTH).fract() == 0.0)
            && bins.windows(2).all(|w| w[0].upper == w[1].lower);
        let placed = errors.iter().all(|e| {
            bins.iter()
                .filter(|b| b.lower <= *e && *e < b.upper)
                .count()
                == 1
        });
        if (total - 1.0).abs() > 1e-9 || count != errors.len() || !shaped || !placed {
            failures.push("histogram".into());
            break;
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "closed forms within 1e-6 relative, 200 histograms sum to 1".into()
        } else {
            failures.join("; ")
        },
    }
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        let spec = DistortionSpec {
            inversion_rate: 0.05,
            omission_spans: vec![(1500, 200)],
            ..base_spec(seed)
        };
        let b = synthgen::generate(&random_text(5000, 900 + seed), &spec).unwrap();
        let (sx, sy) = b.segments().unwrap();
        let (fx, fy) = (format_segments(&sx).unwrap(), format_segments(&sy).unwrap());
        match load_gold(&fx, &fy, &b.text_x, &b.text_y) {
            Ok(g) if g == b.gold => {}
            other => failures.push(format!("seed {seed} round trip: {other:?}")),
        }
        if sx.concat() != b.text_x || sy.concat() != b.text_y {
            failures.push(format!("seed {seed} reconstruction"));
        }

        let short = format_segments(&sy[..sy.len() - 1]).unwrap();
        if !matches!(
            load_gold(&fx, &short, &b.text_x, &b.text_y),
            Err(SimrError::SegmentCountMismatch { .. })
        ) {
            failures.push(format!("seed {seed} count mismatch not raised"));
        }
        let mut tampered = b.text_y.clone();
        tampered.push('!');
        if !matches!(
            load_gold(&fx, &fy, &b.text_x, &tampered),
            Err(SimrError::TextReconstructionMismatch { side: 'y' })
        ) {
            failures.push(format!("seed {seed} reconstruction mismatch not raised"));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "5 synthetic bitexts round-trip, mismatches rejected".into()
        } else {
            failures.join("; ")
        },
    }
}

#[test]
fn acceptance() {
    // Name, check, and an optional wall-clock budget in seconds.
    type Criterion = (&'static str, fn() -> Outcome, Option<f64>);
    let criteria: [Criterion; 9] = [
        ("recognizer oracle equivalence", criterion_1, Some(10.0)),
        ("identity bitext exactness", criterion_2, Some(30.0)),
        ("noise robustness", criterion_3, None),
        ("omission robustness", criterion_4, None),
        ("inversion tolerance", criterion_5, None),
        ("annealing sanity", criterion_6, None),
        ("complexity", criterion_7, None),
        ("metric fidelity", criterion_8, None),
        ("gold ingestion", criterion_9, None),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let mut outcome = check();
        if let Some(limit) = budget {
            let secs = started.elapsed().as_secs_f64();
            if secs >= *limit {
                outcome.pass = false;
                outcome
                    .detail
                    .push_str(&format!("; took {secs:.1} s, limit {limit} s"));
            }
        }
        report(i as u32 + 1, name, started, &outcome);
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
