//! End-to-end acceptance checks. Runs without the libtest harness and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::time::Instant;

use ltfi::analytics::{continuous_rate_ceiling, ctc_data_rate, default_table};
use ltfi::codec::{
    modulation_capacity, parse_payload, CodingScheme, CtcFrame, PAYLOAD_LEN,
};
use ltfi::demod::demodulate;
use ltfi::experiment::{
    knee, last_failing_power, random_frame, run_link_sweep, simulate_frame, trial_rng,
    ExperimentSpec, LinkPoint, LinkSetup,
};
use ltfi::multicell::{
    build_cluster_configurations, build_hex_deployment, decodable_fields, estimate_proximity,
    grid_evaluate, Codebook, GridConfig, ProximityObservation, RadioEnvironment, HEX_DIRECTIONS,
};
use ltfi::phy::Scenario;
use ltfi::x2::{fetch_codebook, handle_connection, ClientConfig, Message, ServerState, X2Server};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. capacity against an independent big-integer oracle

fn oracle_binomial(n: u32, k: u32) -> BigUint {
    // Pascal's triangle, additions only
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = vec![BigUint::from(1u32); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row[k as usize].clone()
}

fn oracle_floor_log2(m: &BigUint) -> u32 {
    let mut k = 0;
    let mut p = BigUint::from(2u32);
    while &p <= m {
        p <<= 1;
        k += 1;
    }
    k
}

fn capacity() -> Outcome {
    let mut cases = 0;
    for n in 0..=18 {
        for k in 0..=n {
            let c = modulation_capacity(n, k).map_err(|e| e.to_string())?;
            let m = oracle_binomial(n, k);
            ensure(c.alphabet_size == m, || format!("C({n},{k})"))?;
            ensure(c.bits_per_symbol == oracle_floor_log2(&m), || format!("K({n},{k})"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (n, k) pairs exact"))
}

// 2. exhaustive symbol roundtrip

fn codec_roundtrip() -> Outcome {
    let mut schemes = vec![CodingScheme::baseline(), CodingScheme::short_three_bit()];
    schemes.extend((0..=18).filter_map(|k| CodingScheme::extra_punctures(k).ok()));
    let mut values = 0u64;
    for s in &schemes {
        if s.bits_per_symbol() > 15 {
            continue;
        }
        for v in 0..(1u64 << s.bits_per_symbol()) {
            let sched = s.encode_symbol(v).map_err(|e| e.to_string())?;
            let back = s.decode_symbol(&sched.positions).map_err(|e| e.to_string())?;
            ensure(back == v, || format!("{s:?}: {v} -> {back}"))?;
            values += 1;
        }
    }
    Ok(format!("{} schemes, {values} values", schemes.len()))
}

// 3. proximity estimate with the published example codebook

fn example_codebook() -> Codebook {
    let rows: [(u16, [&[u32]; 6]); 2] = [
        (4, [&[3, 6], &[3, 4, 6], &[4, 5, 6], &[5, 6], &[2, 4, 5], &[2, 5]]),
        (5, [&[0, 1, 4], &[0, 1], &[1, 2], &[1, 2, 4], &[1], &[6]]),
    ];
    let mut entries = BTreeMap::new();
    for (cluster, row) in rows {
        for (j, cells) in row.iter().enumerate() {
            entries.insert((j as u8 + 1, cluster), cells.to_vec());
        }
    }
    Codebook::new(entries).expect("example rows are valid")
}

fn proximity_example() -> Outcome {
    let y = estimate_proximity(&ProximityObservation::from_fields([(2, 4), (3, 4)]), &example_codebook())
        .map_err(|e| e.to_string())?;
    ensure(y == BTreeSet::from([3, 4, 5, 6]), || format!("got {y:?}"))?;
    Ok(format!("Y = {y:?}"))
}

// 4. clean-channel loopback

fn loopback() -> Outcome {
    let setup = LinkSetup::default();
    let rx = setup.receiver_config().map_err(|e| e.to_string())?;
    let fe = setup.front_end(28).map_err(|e| e.to_string())?;
    let mut ok = 0;
    for i in 0..100 {
        let mut rng = trial_rng(4, 0, i);
        let frame = random_frame(&mut rng);
        let trial = simulate_frame(&setup, Scenario::Clear, -40.0, &fe, &frame, &mut rng)
            .map_err(|e| e.to_string())?;
        let decoded = demodulate(&trial.samples, &rx);
        let hit = decoded.iter().any(|d| {
            d.sync_index.abs_diff(trial.sent.sync_index) <= rx.window() as u64 / 2
                && d.symbols == trial.sent.symbols
                && d.fields.complete() == Some(frame)
        });
        ok += hit as usize;
    }
    ensure(ok == 100, || format!("{ok}/100 frames recovered"))?;
    Ok("100/100 frames bit-exact, FER = 0".into())
}

// 5. data-rate endpoints

fn data_rate() -> Outcome {
    let r1 = ctc_data_rate(80.0, 0.24, 1).map_err(|e| e.to_string())?;
    let r5 = ctc_data_rate(80.0, 0.24, 5).map_err(|e| e.to_string())?;
    let ceiling = continuous_rate_ceiling(9).map_err(|e| e.to_string())?;
    ensure(r1 == 50.0, || format!("24 %/k=1 gives {r1} bps"))?;
    ensure(r5 == 162.5 && (r5 - 160.0).abs() / 160.0 <= 0.02, || format!("24 %/k=5 gives {r5} bps"))?;
    ensure(ceiling == 750.0, || format!("ceiling {ceiling}"))?;
    let peak = default_table().iter().map(|p| p.rate_bps).fold(0.0, f64::max);
    ensure(peak >= 600.0, || format!("no configuration reaches 600 bps (best {peak})"))?;
    Ok(format!("50 / 162.5 bps, ceiling {ceiling} bps, table peak {peak} bps"))
}

// 6. FER knee around the ED threshold

fn sweep(scenario: Scenario, theta: i32, lo: f64, hi: f64, step: f64, reps: usize) -> Result<Vec<LinkPoint>, String> {
    let n = ((hi - lo) / step).round() as usize;
    let spec = ExperimentSpec {
        scenario,
        powers_dbm: (0..=n).map(|i| lo + i as f64 * step).collect(),
        theta,
        seed: 1,
        repetitions: reps,
    };
    run_link_sweep(&LinkSetup::default(), &spec).map_err(|e| e.to_string())
}

fn knees() -> Outcome {
    let setup = LinkSetup::default();
    let mut report = Vec::new();
    for (theta, target) in [(28, -60.5), (3, -92.0)] {
        let ed = setup.ed_map.map(theta).map_err(|e| e.to_string())?;
        let pts = sweep(Scenario::Clear, theta, ed - 5.0, ed + 5.0, 0.5, 100)?;
        let k = knee(&pts, 0.1).ok_or_else(|| format!("θ={theta}: FER never settles below 0.1"))?;
        let f = last_failing_power(&pts, 0.9).ok_or_else(|| format!("θ={theta}: FER never reaches 0.9"))?;
        ensure(k - f <= 3.0, || format!("θ={theta}: transition {f}..{k} dBm wider than 3 dB"))?;
        ensure(f >= ed - 3.0 && k <= ed + 3.0, || {
            format!("θ={theta}: transition {f}..{k} dBm not within 3 dB of ED {ed}")
        })?;
        ensure((k - target).abs() <= 1.5, || format!("θ={theta}: knee {k} dBm, want {target} ± 1.5"))?;
        report.push(format!("θ={theta} knee {k} dBm (last FER≥0.9 at {f})"));
    }
    Ok(report.join(", "))
}

// 7. half-duplex floor

fn apdl_floor() -> Outcome {
    let pts = sweep(Scenario::ApdlHigh, 28, -55.0, -40.0, 5.0, 200)?;
    let frames: usize = pts.iter().map(|p| p.rates.frames).sum();
    let errors: usize = pts.iter().map(|p| p.rates.frame_errors).sum();
    let fer = errors as f64 / frames as f64;
    ensure((0.15..=0.35).contains(&fer), || format!("floor FER {fer:.3}"))?;
    Ok(format!("pooled FER {fer:.3} over {frames} frames from -55 to -40 dBm"))
}

// 8. multicell grid

fn multicell() -> Outcome {
    let dep = build_hex_deployment(100, 50.0).map_err(|e| e.to_string())?;
    let plan = build_cluster_configurations(&dep).map_err(|e| e.to_string())?;
    let cb = &plan.codebook;
    let uncovered = cb.uncovered_edges(&dep).map_err(|e| e.to_string())?;
    ensure(uncovered.is_empty(), || format!("uncovered edges {uncovered:?}"))?;

    let env = RadioEnvironment::default();
    let cfg = GridConfig::default();
    let pts = grid_evaluate(&dep, cb, &env, &cfg).map_err(|e| e.to_string())?;
    let max = pts.iter().map(|p| p.n_detected).max().unwrap_or(0);
    ensure(max == 7, || format!("grid maximum {max}"))?;

    let lattice = dep.lattice().map_err(|e| e.to_string())?;
    let inside = |x: f64, y: f64| x.abs() <= cfg.half_side_m && y.abs() <= cfg.half_side_m;
    let mut near = 0;
    let mut triples = 0;
    for (&(q, r), &id) in &lattice {
        let full = HEX_DIRECTIONS.iter().all(|(dq, dr)| lattice.contains_key(&(q + dq, r + dr)));
        let c = dep.cell(id).unwrap();
        if full && inside(c.x, c.y) {
            for p in pts.iter().filter(|p| (p.x_m - c.x).hypot(p.y_m - c.y) <= 5.0) {
                ensure(p.n_detected == 7, || format!("{} cells at ({}, {})", p.n_detected, p.x_m, p.y_m))?;
                near += 1;
            }
        }
        // centroids of the six triangles around this cell; each is met from all three corners
        for k in 0..6 {
            let (a, b) = (HEX_DIRECTIONS[k], HEX_DIRECTIONS[(k + 1) % 6]);
            let (Some(&ia), Some(&ib)) = (lattice.get(&(q + a.0, r + a.1)), lattice.get(&(q + b.0, r + b.1))) else {
                continue;
            };
            let (pa, pb) = (dep.cell(ia).unwrap(), dep.cell(ib).unwrap());
            let (x, y) = ((c.x + pa.x + pb.x) / 3.0, (c.y + pa.y + pb.y) / 3.0);
            if !inside(x, y) {
                continue;
            }
            let y_set = estimate_proximity(&decodable_fields((x, y), &dep, cb, &env), cb)
                .map_err(|e| e.to_string())?;
            ensure(y_set == BTreeSet::from_iter([id, ia, ib]), || format!("{y_set:?} at ({x:.1}, {y:.1})"))?;
            triples += 1;
        }
    }
    ensure(near > 0 && triples > 0, || "no test points inside the grid".into())?;
    Ok(format!(
        "{} grid points, max 7, {near} points near sites all 7, {} triple points all 3, {} edges covered",
        pts.len(),
        triples / 3,
        dep.adjacent_pairs().map_err(|e| e.to_string())?.len()
    ))
}

// 9. CRC isolation

fn crc_isolation() -> Outcome {
    let frame = CtcFrame {
        network_id: Ipv4Addr::new(10, 20, 30, 40),
        clusters: [1, 2, 300, 4000, 50000, 65535],
    };
    let clean = frame.to_payload();
    ensure(parse_payload(&clean).complete() == Some(frame), || "clean payload fails".into())?;
    // field boundaries: 6-byte network field, then 4-byte cluster fields
    let field_of = |byte: usize| if byte < 6 { 0 } else { 1 + (byte - 6) / 4 };
    for bit in 0..PAYLOAD_LEN * 8 {
        let mut p = clean;
        p[bit / 8] ^= 0x80 >> (bit % 8);
        let parsed = parse_payload(&p);
        let mut ok = [parsed.network_id.is_some(), false, false, false, false, false, false];
        for (j, c) in parsed.clusters.iter().enumerate() {
            ok[j + 1] = c.is_some();
        }
        let bad: Vec<usize> = (0..7).filter(|&f| !ok[f]).collect();
        ensure(bad == [field_of(bit / 8)], || format!("bit {bit}: failing fields {bad:?}"))?;
    }
    Ok(format!("{} single-bit flips each caught by their own field only", PAYLOAD_LEN * 8))
}

// 10. X2 integrity

struct Pipe<'a> {
    input: &'a [u8],
}

impl std::io::Read for Pipe<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.input.read(buf)
    }
}

impl std::io::Write for Pipe<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn x2() -> Outcome {
    let net = Ipv4Addr::new(192, 0, 2, 1);
    let dep = build_hex_deployment(100, 50.0).map_err(|e| e.to_string())?;
    let cb = build_cluster_configurations(&dep).map_err(|e| e.to_string())?.codebook;
    let want = cb.canonical_bytes();
    let srv = X2Server::start("127.0.0.1:0", ServerState::new(net, cb.clone())).map_err(|e| e.to_string())?;
    let addr = srv.local_addr();
    let handles: Vec<_> = (0..10)
        .map(|i| std::thread::spawn(move || fetch_codebook(addr, &format!("ap-{i}"), net, &ClientConfig::default())))
        .collect();
    for h in handles {
        let got = h.join().map_err(|_| "client thread panicked".to_string())?.map_err(|e| e.to_string())?;
        ensure(got.canonical_bytes() == want, || "codebook bytes differ".into())?;
    }

    let state = ServerState::new(net, cb);
    let mut session = Message::Hello { ap_id: "f".into(), network_id: net }.encode();
    session.extend(Message::GetCodebook.encode());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100_000 {
        let input: Vec<u8> = if rng.random_bool(0.5) {
            (0..rng.random_range(0..48)).map(|_| rng.random()).collect()
        } else {
            let mut v = session.clone();
            let i = rng.random_range(0..v.len());
            v[i] = rng.random();
            v.truncate(rng.random_range(1..=v.len()));
            v
        };
        let result = std::panic::catch_unwind(|| handle_connection(&mut Pipe { input: &input }, &state));
        ensure(matches!(result, Ok(Ok(()))), || format!("handler failed on {input:?}"))?;
    }
    let after = fetch_codebook(addr, "after-fuzz", net, &ClientConfig::default()).map_err(|e| e.to_string())?;
    ensure(after.canonical_bytes() == want, || "server changed after fuzzing".into())?;
    srv.shutdown();
    Ok("10 concurrent clients byte-identical, 100000 fuzz inputs handled".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("capacity matches big-integer oracle", capacity),
        ("codec exhaustive roundtrip", codec_roundtrip),
        ("proximity example gives {3,4,5,6}", proximity_example),
        ("clean-channel loopback", loopback),
        ("data-rate endpoints", data_rate),
        ("FER knee around ED threshold", knees),
        ("apdl-high FER floor", apdl_floor),
        ("multicell grid and edge coverage", multicell),
        ("single-bit CRC isolation", crc_isolation),
        ("X2 integrity", x2),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS  {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
