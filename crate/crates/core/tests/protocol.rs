use std::io::{Read, Write};
use std::net::TcpListener;
use std::os::unix::net::UnixStream;
use std::thread;
use std::time::Duration;

use proptest::prelude::*;

use lmcompress::container::Archive;
use lmcompress::pipeline::{DecompressOptions, PredictorSource};
use lmcompress::protocol::wire::{read_message, write_message};
use lmcompress::protocol::{
    connect, connect_with_timeout, Endpoint, FixtureServer, Message, Opcode, PredictorClient,
    ServeOutcome, ServerState, PROTOCOL_VERSION,
};
use lmcompress::{compress, decompress, CompressOptions, Error, Predictor, PredictorSpec};

fn hello(model: &str) -> Message {
    Message::Hello {
        version: PROTOCOL_VERSION,
        alphabet_size: 256,
        model: model.into(),
    }
}

/// Runs a fixture server on one end of a socket pair.
fn fixture(server: FixtureServer) -> (UnixStream, thread::JoinHandle<ServeOutcome>) {
    let (a, b) = UnixStream::pair().unwrap();
    let handle = thread::spawn(move || server.serve(b).unwrap());
    (a, handle)
}

fn send(s: &mut UnixStream, m: &Message) {
    write_message(s, m).unwrap();
}

fn recv(s: &mut UnixStream) -> Option<Message> {
    read_message(s).unwrap()
}

fn expect_err_and_close(s: &mut UnixStream, code: u16) {
    match recv(s) {
        Some(Message::Err { code: c, .. }) => assert_eq!(c, code),
        other => panic!("expected ERR({code}), got {other:?}"),
    }
    assert_eq!(recv(s), None, "server must close after ERR");
}

#[test]
fn full_session_uses_every_client_opcode() {
    let (mut c, server) = fixture(FixtureServer::new(PredictorSpec::order0(256)));
    send(&mut c, &hello(""));
    let tag = match recv(&mut c) {
        Some(Message::Ready { version_tag }) => version_tag,
        other => panic!("{other:?}"),
    };
    assert_eq!(tag, "fixture/order0:S=256:v1");
    for _ in 0..2 {
        send(&mut c, &Message::BeginChunk);
        for sym in [97u32, 97, 98] {
            send(&mut c, &Message::Predict);
            match recv(&mut c) {
                Some(Message::Dist(f)) => assert_eq!(f.len(), 256),
                other => panic!("{other:?}"),
            }
            send(&mut c, &Message::Observe(sym));
        }
        send(&mut c, &Message::Predict);
        // after "aab": the add-one counts are a=3, b=2, others 1 of 259
        match recv(&mut c) {
            Some(Message::Dist(f)) => assert_eq!((f[97], f[98], f[0]), (758, 506, 254)),
            other => panic!("{other:?}"),
        }
        send(&mut c, &Message::Observe(0));
        send(&mut c, &Message::EndChunk);
    }
    send(&mut c, &Message::Bye);
    assert_eq!(server.join().unwrap(), ServeOutcome::Bye);
}

#[test]
fn handshake_then_bye() {
    let (mut c, server) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
    send(&mut c, &hello(""));
    assert!(matches!(recv(&mut c), Some(Message::Ready { .. })));
    send(&mut c, &Message::Bye);
    assert_eq!(server.join().unwrap(), ServeOutcome::Bye);
}

#[test]
fn unsupported_version_is_refused() {
    let (mut c, server) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
    send(
        &mut c,
        &Message::Hello {
            version: 2,
            alphabet_size: 256,
            model: String::new(),
        },
    );
    expect_err_and_close(&mut c, 1);
    assert_eq!(server.join().unwrap(), ServeOutcome::Rejected(1));
}

#[test]
fn unsupported_models_are_refused() {
    for (s, model) in [(256u32, "gpt-5"), (100, ""), (256, "order9")] {
        let (mut c, _) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
        send(
            &mut c,
            &Message::Hello {
                version: 1,
                alphabet_size: s,
                model: model.into(),
            },
        );
        expect_err_and_close(&mut c, 4);
    }
}

#[test]
fn malformed_frames_are_refused() {
    let cases: Vec<Vec<u8>> = vec![
        vec![0, 0, 0, 0, 0x42],                // unknown opcode
        vec![2, 0, 0, 0, 0x01, 1, 0],          // short HELLO
        vec![0xFF, 0xFF, 0xFF, 0x7F, 0x01],    // oversized frame
        vec![1, 0, 0, 0, 0x04, 9],             // PREDICT with a payload
    ];
    for (i, raw) in cases.into_iter().enumerate() {
        let (mut c, _) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
        c.write_all(&raw).unwrap();
        match recv(&mut c) {
            Some(Message::Err { code, .. }) => assert!(code == 3 || code == 4, "case {i}: {code}"),
            other => panic!("case {i}: {other:?}"),
        }
    }
    // symbol outside the alphabet
    let (mut c, _) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
    send(&mut c, &hello(""));
    recv(&mut c);
    send(&mut c, &Message::BeginChunk);
    send(&mut c, &Message::Predict);
    recv(&mut c);
    send(&mut c, &Message::Observe(256));
    expect_err_and_close(&mut c, 3);
}

fn client_message(op: Opcode) -> Message {
    match op {
        Opcode::Hello => hello(""),
        Opcode::Ready => Message::Ready { version_tag: "x".into() },
        Opcode::BeginChunk => Message::BeginChunk,
        Opcode::Predict => Message::Predict,
        Opcode::Dist => Message::Dist(vec![32768, 32768]),
        Opcode::Observe => Message::Observe(1),
        Opcode::EndChunk => Message::EndChunk,
        Opcode::Bye => Message::Bye,
        Opcode::Err => Message::Err { code: 5, message: "x".into() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Drives the server with arbitrary opcode sequences and checks every
    /// reply against the state machine: legal steps get exactly their
    /// reply, the first illegal one gets ERR(2) followed by close.
    #[test]
    fn arbitrary_sequences_never_desynchronize(ops in proptest::collection::vec(0usize..9, 1..40)) {
        let (mut c, server) = fixture(FixtureServer::new(PredictorSpec::order_k(1, 256)));
        let mut state = ServerState::Start;
        let mut rejected = false;
        for &i in &ops {
            let op = Opcode::ALL[i];
            send(&mut c, &client_message(op));
            match state.next(op) {
                Some(next) => {
                    match op {
                        Opcode::Hello => {
                            let r = recv(&mut c);
                            prop_assert!(matches!(r, Some(Message::Ready { .. })), "{:?}", r);
                        }
                        Opcode::Predict => {
                            let r = recv(&mut c);
                            prop_assert!(matches!(r, Some(Message::Dist(ref f)) if f.len() == 256), "{:?}", r);
                        }
                        Opcode::Bye => {
                            prop_assert_eq!(recv(&mut c), None);
                            break;
                        }
                        _ => {}
                    }
                    state = next;
                }
                None => {
                    match recv(&mut c) {
                        Some(Message::Err { code, .. }) => prop_assert_eq!(code, 2),
                        other => prop_assert!(false, "expected ERR(2), got {:?}", other),
                    }
                    prop_assert_eq!(recv(&mut c), None);
                    rejected = true;
                    break;
                }
            }
        }
        drop(c);
        let outcome = server.join().unwrap();
        if rejected {
            prop_assert_eq!(outcome, ServeOutcome::Rejected(2));
        }
    }
}

#[test]
fn every_illegal_transition_is_rejected() {
    // reach each state, then send each opcode it does not accept
    let prefixes: [(ServerState, Vec<Message>); 4] = [
        (ServerState::Start, vec![]),
        (ServerState::Idle, vec![hello("")]),
        (ServerState::Open, vec![hello(""), Message::BeginChunk]),
        (ServerState::Pending, vec![hello(""), Message::BeginChunk, Message::Predict]),
    ];
    let mut checked = 0;
    for (state, prefix) in &prefixes {
        for op in Opcode::ALL {
            if state.next(op).is_some() {
                continue;
            }
            let (mut c, server) = fixture(FixtureServer::new(PredictorSpec::uniform(256)));
            for m in prefix {
                send(&mut c, m);
                if matches!(m, Message::Hello { .. } | Message::Predict) {
                    recv(&mut c).unwrap();
                }
            }
            send(&mut c, &client_message(op));
            expect_err_and_close(&mut c, 2);
            assert_eq!(server.join().unwrap(), ServeOutcome::Rejected(2), "{state:?} {op:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, 4 * 9 - 6);
}

/// A server that answers the handshake and then replies to the first
/// PREDICT with `reply` (or hangs up when `None`).
fn scripted(reply: Option<Message>) -> PredictorClient<UnixStream> {
    let (a, mut b) = UnixStream::pair().unwrap();
    thread::spawn(move || {
        read_message(&mut b).unwrap();
        write_message(&mut b, &Message::Ready { version_tag: "scripted".into() }).unwrap();
        while let Ok(Some(m)) = read_message(&mut b) {
            if m == Message::Predict {
                if let Some(r) = reply {
                    write_message(&mut b, &r).unwrap();
                }
                return;
            }
        }
    });
    PredictorClient::handshake(a, 256, "").unwrap()
}

#[test]
fn client_rejects_bad_server_replies() {
    let mut zero = vec![256u32; 256];
    zero[0] = 0;
    zero[1] = 512;
    let cases = [
        (Some(Message::Dist(zero)), "zero frequency"),
        (Some(Message::Dist(vec![256; 255])), "255 symbols"),
        (Some(Message::Dist(vec![257; 256])), "sum"),
        (Some(Message::Ready { version_tag: "x".into() }), "expected DIST"),
        (Some(Message::Err { code: 5, message: "boom".into() }), "boom"),
        (None, "closed"),
    ];
    for (reply, needle) in cases {
        let mut client = scripted(reply);
        client.begin_chunk().unwrap();
        let err = client.predict().unwrap_err().to_string();
        assert!(err.contains(needle), "{err} lacks {needle:?}");
        // the session is poisoned rather than left out of step
        assert!(matches!(client.predict(), Err(Error::Protocol(_))));
        assert!(client.end_chunk().is_err());
    }
}

#[test]
fn client_refuses_local_misuse() {
    let mut client = scripted(None);
    assert!(matches!(client.predict(), Err(Error::ProtocolMisuse(_))));
    assert!(matches!(client.observe(1), Err(Error::ProtocolMisuse(_))));
    assert!(matches!(client.end_chunk(), Err(Error::ProtocolMisuse(_))));
    client.begin_chunk().unwrap();
    assert!(matches!(client.begin_chunk(), Err(Error::ProtocolMisuse(_))));
}

#[test]
fn handshake_errors() {
    let (a, b) = UnixStream::pair().unwrap();
    let server = FixtureServer::new(PredictorSpec::uniform(256));
    thread::spawn(move || server.serve(b));
    let err = PredictorClient::handshake(a, 3, "order0:S=256:v1").unwrap_err();
    assert!(matches!(err, Error::Handshake(_)), "{err}");
}

#[test]
fn silent_server_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let mut buf = [0u8; 64];
        let _ = s.read(&mut buf);
        thread::sleep(Duration::from_secs(5));
    });
    let endpoint = Endpoint::Tcp(addr.to_string());
    let err = connect_with_timeout(&endpoint, 256, "", Duration::from_millis(200)).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

fn chunks_of(archive: &[u8]) -> Vec<lmcompress::container::Chunk> {
    Archive::from_bytes(archive).unwrap().chunks
}

#[test]
fn loopback_server_matches_builtin_byte_for_byte() {
    let text = b"It was the best of times, it was the worst of times. ".repeat(300);
    for spec in [PredictorSpec::uniform(256), PredictorSpec::order0(256), PredictorSpec::order_k(2, 256)] {
        let (addr, _) = FixtureServer::new(spec.clone()).spawn_tcp("127.0.0.1:0").unwrap();
        let endpoint = Endpoint::Tcp(addr.to_string());
        let remote = CompressOptions {
            predictor: PredictorSource::Server { endpoint: endpoint.clone(), model: String::new() },
            jobs: 3,
            ..CompressOptions::default()
        };
        let (via_server, stats) = compress(&text, &remote).unwrap();
        assert_eq!(stats.predictor, PredictorSpec::external(256, format!("fixture/{spec}")));
        let (builtin, _) = compress(&text, &CompressOptions::with_predictor(spec.clone())).unwrap();
        assert_eq!(chunks_of(&via_server), chunks_of(&builtin));

        // identical apart from the predictor field
        let mut relabeled = Archive::from_bytes(&via_server).unwrap();
        relabeled.predictor = spec;
        assert_eq!(relabeled.to_bytes(), builtin);

        let back = decompress(&via_server, &DecompressOptions { server: Some(endpoint), jobs: 2 }).unwrap();
        assert_eq!(back, text);
    }
}

#[test]
fn decompress_checks_server_version_tag() {
    let text = b"abcabcabd".repeat(1000);
    let (a, _) = FixtureServer::new(PredictorSpec::order0(256))
        .with_version_tag("bundle-a")
        .spawn_tcp("127.0.0.1:0")
        .unwrap();
    let (b, _) = FixtureServer::new(PredictorSpec::order0(256))
        .with_version_tag("bundle-b")
        .spawn_tcp("127.0.0.1:0")
        .unwrap();
    let opts = CompressOptions {
        predictor: PredictorSource::Server { endpoint: Endpoint::Tcp(a.to_string()), model: String::new() },
        ..CompressOptions::default()
    };
    let (archive, _) = compress(&text, &opts).unwrap();
    let err = decompress(&archive, &DecompressOptions { server: Some(Endpoint::Tcp(b.to_string())), jobs: 1 }).unwrap_err();
    match err {
        Error::PredictorVersion { expected, found } => {
            assert!(expected.ends_with("bundle-a") && found.ends_with("bundle-b"));
        }
        other => panic!("{other}"),
    }
    let ok = decompress(&archive, &DecompressOptions { server: Some(Endpoint::Tcp(a.to_string())), jobs: 1 });
    assert_eq!(ok.unwrap(), text);
}

#[test]
fn connect_over_tcp_and_bye() {
    let (addr, _) = FixtureServer::new(PredictorSpec::uniform(256)).spawn_tcp("127.0.0.1:0").unwrap();
    let client = connect(&format!("tcp://{addr}").parse().unwrap(), 256, "").unwrap();
    assert_eq!(client.version_tag(), "fixture/uniform:S=256:v1");
    client.bye().unwrap();
}
