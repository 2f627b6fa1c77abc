use std::io::{self, Read, Write};
use std::net::{Ipv4Addr, TcpListener, TcpStream};
use std::time::{Duration, Instant};

use ltfi::multicell::{build_cluster_configurations, build_hex_deployment, Codebook};
use ltfi::x2::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NET: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 7);

fn codebook() -> Codebook {
    let dep = build_hex_deployment(100, 50.0).unwrap();
    build_cluster_configurations(&dep).unwrap().codebook
}

fn server() -> X2Server {
    X2Server::start("127.0.0.1:0", ServerState::new(NET, codebook())).unwrap()
}

#[test]
fn fetch_matches_served_codebook() {
    let srv = server();
    let got = fetch_codebook(srv.local_addr(), "ap", NET, &ClientConfig::default()).unwrap();
    assert_eq!(&got, srv.state().codebook());
    assert_eq!(got.canonical_bytes(), srv.state().codebook().canonical_bytes());
    srv.shutdown();
}

#[test]
fn concurrent_clients_get_identical_bytes() {
    let srv = server();
    let addr = srv.local_addr();
    let handles: Vec<_> = (0..10)
        .map(|i| {
            std::thread::spawn(move || {
                fetch_codebook(addr, &format!("ap-{i}"), NET, &ClientConfig::default())
                    .unwrap()
                    .canonical_bytes()
            })
        })
        .collect();
    let want = srv.state().codebook().canonical_bytes();
    for h in handles {
        assert_eq!(h.join().unwrap(), want);
    }
    assert_eq!(srv.state().registrations().len(), 10);
}

#[test]
fn unreachable_server_fails_within_deadline() {
    // a port that was free a moment ago
    let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let cfg = ClientConfig {
        deadline: Duration::from_millis(600),
        io_timeout: Duration::from_millis(200),
        attempts: 50,
        ..ClientConfig::default()
    };
    let t = Instant::now();
    let err = fetch_codebook(addr, "ap", NET, &cfg).unwrap_err();
    assert!(matches!(err, X2Error::Connectivity { .. }), "{err}");
    assert!(t.elapsed() < Duration::from_millis(1500), "{:?}", t.elapsed());
}

#[test]
fn wrong_network_is_not_retried() {
    let srv = server();
    let err = fetch_codebook(srv.local_addr(), "ap", Ipv4Addr::new(1, 1, 1, 1), &ClientConfig::default())
        .unwrap_err();
    assert!(matches!(err, X2Error::Server { code: ErrorCode::NetworkMismatch, .. }));
}

#[test]
fn reports_are_stored_and_idempotent() {
    let srv = server();
    let mut c = X2Client::connect(srv.local_addr(), &ClientConfig::default()).unwrap();
    assert!(matches!(c.report(&[], &[1]), Err(X2Error::Server { code: ErrorCode::Auth, .. })));
    c.hello("ap-7", NET).unwrap();
    let cb = c.get_codebook().unwrap();
    let fields = [(1u8, 0u16)];
    let cells = cb.get(1, 0).unwrap().to_vec();
    for _ in 0..3 {
        assert_eq!(c.report(&fields, &cells).unwrap(), cells.len() as u32);
    }
    let regs = srv.state().registrations();
    assert_eq!(regs.len(), 1);
    assert_eq!(regs[0].cells.iter().copied().collect::<Vec<_>>(), cells);
    assert!(matches!(
        c.report(&fields, &[100_000]),
        Err(X2Error::Server { code: ErrorCode::UnknownCell, .. })
    ));
    // the rejected report leaves the mapping alone
    assert_eq!(srv.state().registration("ap-7").unwrap().cells.len(), cells.len());
}

#[test]
fn truncated_prefix_over_tcp_gets_malformed() {
    let srv = server();
    let mut s = TcpStream::connect(srv.local_addr()).unwrap();
    s.write_all(&[0, 0]).unwrap();
    s.shutdown(std::net::Shutdown::Write).unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    match read_frame(&mut &buf[..]).unwrap() {
        Incoming::Message(Message::Error { code, .. }) => assert_eq!(code, ErrorCode::Malformed),
        other => panic!("{other:?}"),
    }
}

struct Pipe<'a> {
    input: &'a [u8],
    written: usize,
}

impl Read for Pipe<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.input.read(buf)
    }
}

impl Write for Pipe<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.written += buf.len();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Random input: pure noise, random bodies behind a correct prefix, or a
/// valid session with bytes flipped.
fn fuzz_case(rng: &mut ChaCha8Rng, valid: &[u8]) -> Vec<u8> {
    match rng.random_range(0..3) {
        0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        1 => {
            let n = rng.random_range(0..40usize);
            let mut v = (n as u32).to_be_bytes().to_vec();
            v.push(if rng.random_bool(0.8) { PROTOCOL_VERSION } else { rng.random() });
            v.push(rng.random_range(0..9));
            v.extend((0..n.saturating_sub(2)).map(|_| rng.random::<u8>()));
            v
        }
        _ => {
            let mut v = valid.to_vec();
            for _ in 0..rng.random_range(1..4) {
                let i = rng.random_range(0..v.len());
                v[i] = rng.random();
            }
            v.truncate(rng.random_range(1..=v.len()));
            v
        }
    }
}

#[test]
fn handler_survives_random_input() {
    let state = ServerState::new(NET, codebook());
    let mut valid = Message::Hello { ap_id: "f".into(), network_id: NET }.encode();
    valid.extend(Message::GetCodebook.encode());
    valid.extend(Message::ReportProximity { fields: vec![(1, 0)], cells: vec![0, 1] }.encode());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100_000 {
        let input = fuzz_case(&mut rng, &valid);
        let mut pipe = Pipe { input: &input, written: 0 };
        handle_connection(&mut pipe, &state).unwrap();
    }
}

#[test]
fn tcp_server_survives_garbage_connections() {
    let srv = server();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let valid = Message::GetCodebook.encode();
    for _ in 0..200 {
        let mut s = TcpStream::connect(srv.local_addr()).unwrap();
        let _ = s.write_all(&fuzz_case(&mut rng, &valid));
        let _ = s.shutdown(std::net::Shutdown::Write);
        s.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
        let mut sink = Vec::new();
        let _ = s.read_to_end(&mut sink);
    }
    let got = fetch_codebook(srv.local_addr(), "after", NET, &ClientConfig::default()).unwrap();
    assert_eq!(&got, srv.state().codebook());
}
