//! WebSocket endpoint: one posing session per connection.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::{Message as Frame, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};

use fatpad_core::pose::{PoseFingerprint, Rig};
use fatpad_core::session::{Session, SUBPROTOCOL};

pub fn router(rig: Arc<Rig>) -> Router {
    Router::new().route("/", get(status)).route("/ws", get(upgrade)).with_state(rig)
}

async fn status(State(rig): State<Arc<Rig>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "protocol": SUBPROTOCOL,
        "fingerprint": PoseFingerprint::of(&rig),
        "vertices": rig.mesh.vertex_count(),
        "handles": rig.map.handles.len(),
    }))
}

async fn upgrade(ws: WebSocketUpgrade, State(rig): State<Arc<Rig>>) -> Response {
    let ws = ws.protocols([SUBPROTOCOL]);
    if ws.selected_protocol().is_none() {
        return (StatusCode::BAD_REQUEST, format!("subprotocol {SUBPROTOCOL} required")).into_response();
    }
    ws.on_upgrade(move |socket| session(socket, rig))
}

async fn session(mut socket: WebSocket, rig: Arc<Rig>) {
    let mut s = Session::new(rig);
    while let Some(Ok(frame)) = socket.recv().await {
        let reply = match frame {
            Frame::Text(text) => s.handle_text(text.as_str()),
            Frame::Binary(_) => s.handle_text(""),
            Frame::Close(_) => break,
            Frame::Ping(_) | Frame::Pong(_) => continue,
        };
        if socket.send(Frame::Text(reply.to_json().into())).await.is_err() {
            break;
        }
    }
}

pub fn run(rig: Arc<Rig>, host: &str, port: u16) -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        let addr: SocketAddr = listener.local_addr()?;
        // tests and scripts read the bound port from this line
        println!("listening on ws://{addr}/ws");
        axum::serve(listener, router(rig)).await?;
        Ok(())
    })
}
