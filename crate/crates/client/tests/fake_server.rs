//! The client against a canned HTTP server, independent of the real service.

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpListener;
use wristgest_client::Client;
use wristgest_core::gesture::GestureClass;
use wristgest_core::pipeline::Action;

const EVENTS: &str = concat!(
    ": hello\n\n",
    "data: {\"seq\":0,\"t\":2.5,\"gesture\":\"pinch\",\"p\":0.9,\"probs\":[0.9,0.025,0.025,0.025,0.025],\"action\":\"zoom_in\"}\n\n",
    "data: {\"seq\":1,\"t\":4.5,\"gesture\":\"rub_up\",\"p\":0.8,\"probs\":[0.05,0.8,0.05,0.05,0.05],\"action\":\"rotate_right\"}\n\n",
);

/// Answers each connection by request path, then closes it.
async fn serve(listener: TcpListener) {
    loop {
        let (mut sock, _) = listener.accept().await.unwrap();
        tokio::spawn(async move {
            let mut buf = vec![0u8; 4096];
            let n = sock.read(&mut buf).await.unwrap();
            let req = String::from_utf8_lossy(&buf[..n]).to_string();
            let path = req.split_whitespace().nth(1).unwrap_or("/").to_string();
            let (status, ctype, body) = match path.as_str() {
                "/health" => ("200 OK", "text/plain", "ok".to_string()),
                "/state" => (
                    "200 OK",
                    "application/json",
                    r#"{"model_id":"m","epsilon":0.7,"uptime_s":1.0,"events_emitted":2,"detector_mode":"adaptive"}"#
                        .into(),
                ),
                "/config" => {
                    ("400 Bad Request", "application/json", r#"{"error":"epsilon must lie in (0, 1]"}"#.into())
                }
                "/events" => ("200 OK", "text/event-stream", EVENTS.to_string()),
                _ => ("404 Not Found", "text/plain", "nope".into()),
            };
            let head = format!(
                "HTTP/1.1 {status}\r\ncontent-type: {ctype}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                body.len()
            );
            sock.write_all(head.as_bytes()).await.unwrap();
            // Dribble the body out to exercise chunk reassembly.
            for piece in body.as_bytes().chunks(17) {
                sock.write_all(piece).await.unwrap();
                sock.flush().await.unwrap();
            }
        });
    }
}

async fn start() -> Client {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener));
    Client::new(format!("http://{addr}/"))
}

#[tokio::test]
async fn control_endpoints() {
    let c = start().await;
    assert_eq!(c.health().await.unwrap(), "ok");
    let s = c.state().await.unwrap();
    assert_eq!(s.events_emitted, 2);
    assert_eq!(s.detector_mode, "adaptive");
    let err = c.set_epsilon(1.5).await.unwrap_err();
    assert!(err.is_bad_request());
    assert!(err.to_string().contains("epsilon must lie in"), "{err}");
}

#[tokio::test]
async fn event_stream_decodes_every_event() {
    let c = start().await;
    let mut events = c.events().await.unwrap();
    let a = events.next().await.unwrap().unwrap();
    let b = events.next().await.unwrap().unwrap();
    assert!(events.next().await.is_none());
    assert_eq!((a.seq, a.gesture, a.action), (0, GestureClass::Pinch, Action::ZoomIn));
    assert_eq!((b.seq, b.gesture, b.action), (1, GestureClass::RubUp, Action::RotateRight));
    assert_eq!(b.probs, [0.05, 0.8, 0.05, 0.05, 0.05]);
}
