//! Message protocol of a live posing session ("fatpad.v1").
//!
//! Every frame is one JSON object tagged by `kind`. Clients send `load`,
//! `grab`, `move`, `release` and `undo`; the session answers each of them with
//! exactly one `load`, `highlight`, `meshDelta` or `error`. See
//! `docs/protocol.md` for the schemas.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fatpad::Region;
use crate::geometry::{from_array, to_array};
use crate::mesh::{TriMesh, VertexId};
use crate::pose::{PoseError, PoseFingerprint, PoseState, Rig, UndoOutcome};

pub const SUBPROTOCOL: &str = "fatpad.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HandleInfo {
    pub id: String,
    pub pad: String,
    pub region: Region,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum UndoKind {
    Reverted,
    Restored,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorCode {
    Malformed,
    UnexpectedKind,
    UnknownHandle,
    FixedVertex,
    NonFinite,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum Message {
    /// Client: request the scene. Server: the current mesh and handles.
    Load {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scene: Option<Scene>,
    },
    Grab {
        handle: String,
    },
    /// Exactly one of `position` (absolute target) or `delta`.
    Move {
        handle: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<[f64; 3]>,
    },
    Release {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        handle: Option<String>,
    },
    Undo,
    /// Pad of the grabbed handle and where the handle is now.
    Highlight {
        handle: String,
        pad: String,
        vertices: Vec<VertexId>,
        triangles: Vec<usize>,
        anchor: [f64; 3],
    },
    /// New positions of the vertices that changed, nothing else.
    MeshDelta {
        seq: u64,
        ids: Vec<VertexId>,
        positions: Vec<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        undo: Option<UndoKind>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scene {
    pub fingerprint: PoseFingerprint,
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub handles: Vec<HandleInfo>,
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Load { .. } => "load",
            Message::Grab { .. } => "grab",
            Message::Move { .. } => "move",
            Message::Release { .. } => "release",
            Message::Undo => "undo",
            Message::Highlight { .. } => "highlight",
            Message::MeshDelta { .. } => "meshDelta",
            Message::Error { .. } => "error",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Message::Error {
            code,
            message: message.into(),
        }
    }
}

impl From<PoseError> for Message {
    fn from(e: PoseError) -> Self {
        let code = match e {
            PoseError::UnknownHandle(_) => ErrorCode::UnknownHandle,
            PoseError::FixedVertex { .. } => ErrorCode::FixedVertex,
            PoseError::NonFinite(_) => ErrorCode::NonFinite,
            _ => ErrorCode::Internal,
        };
        Message::error(code, e.to_string())
    }
}

/// One connection's state. Messages are handled strictly in order.
#[derive(Debug)]
pub struct Session {
    pose: PoseState,
    grabbed: Option<String>,
    seq: u64,
}

impl Session {
    pub fn new(rig: Arc<Rig>) -> Self {
        Session {
            pose: PoseState::new(rig),
            grabbed: None,
            seq: 0,
        }
    }

    pub fn pose(&self) -> &PoseState {
        &self.pose
    }

    pub fn grabbed(&self) -> Option<&str> {
        self.grabbed.as_deref()
    }

    pub fn current_mesh(&self) -> TriMesh {
        self.pose.current_mesh()
    }

    /// Parse and handle one text frame. Bad input yields an error message
    /// and leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Message {
        match serde_json::from_str::<Message>(text) {
            Ok(m) => self.handle(m),
            Err(e) => Message::error(ErrorCode::Malformed, e.to_string()),
        }
    }

    pub fn handle(&mut self, msg: Message) -> Message {
        match msg {
            Message::Load { scene: None } => Message::Load {
                scene: Some(self.scene()),
            },
            Message::Grab { handle } => self.grab(handle),
            Message::Move { handle, position, delta } => self.move_handle(&handle, position, delta),
            Message::Release { handle } => {
                if let (Some(h), Some(g)) = (&handle, &self.grabbed) {
                    if h != g {
                        return Message::error(ErrorCode::UnknownHandle, format!("release of {h} while {g} is grabbed"));
                    }
                }
                self.pose.commit();
                self.grabbed = None;
                self.delta(Vec::new(), None)
            }
            Message::Undo => {
                let out = self.pose.undo();
                let kind = match out {
                    UndoOutcome::Reverted(_) => UndoKind::Reverted,
                    UndoOutcome::Restored(_) => UndoKind::Restored,
                    UndoOutcome::Empty => UndoKind::Empty,
                };
                self.delta(out.changed().to_vec(), Some(kind))
            }
            other => Message::error(ErrorCode::UnexpectedKind, format!("{} is sent by the server only", other.kind())),
        }
    }

    fn scene(&self) -> Scene {
        let rig = self.pose.rig();
        Scene {
            fingerprint: PoseFingerprint::of(rig),
            vertices: self.pose.current_positions().iter().map(to_array).collect(),
            triangles: rig.mesh.triangles().to_vec(),
            handles: rig
                .map
                .handles
                .iter()
                .map(|h| HandleInfo {
                    id: h.id.clone(),
                    pad: h.pad_id.clone(),
                    region: rig.map.pad_of(h).region,
                    position: to_array(&self.pose.handle_position(&h.id).expect("map handle")),
                })
                .collect(),
        }
    }

    fn grab(&mut self, handle: String) -> Message {
        let rig = self.pose.rig().clone();
        let Ok(h) = rig.map.handle(&handle) else {
            return PoseError::UnknownHandle(handle).into();
        };
        let pad = rig.map.pad_of(h);
        let triangles = rig
            .mesh
            .triangles()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.iter().all(|&v| pad.contains(v)))
            .map(|(i, _)| i)
            .collect();
        let anchor = to_array(&self.pose.handle_position(&handle).expect("map handle"));
        self.grabbed = Some(handle.clone());
        Message::Highlight {
            handle,
            pad: pad.id.clone(),
            vertices: pad.vertices.clone(),
            triangles,
            anchor,
        }
    }

    fn move_handle(&mut self, handle: &str, position: Option<[f64; 3]>, delta: Option<[f64; 3]>) -> Message {
        let r = match (position, delta) {
            (Some(p), None) => self.pose.move_handle(handle, from_array(p)),
            (None, Some(d)) => self.pose.move_handle_by(handle, from_array(d)),
            _ => return Message::error(ErrorCode::Malformed, "move needs exactly one of position or delta"),
        };
        match r {
            Ok(changed) => self.delta(changed, None),
            Err(e) => e.into(),
        }
    }

    fn delta(&mut self, ids: Vec<VertexId>, undo: Option<UndoKind>) -> Message {
        self.seq += 1;
        let cur = self.pose.current_positions();
        Message::MeshDelta {
            seq: self.seq,
            positions: ids.iter().map(|&v| to_array(&cur[v])).collect(),
            ids,
            undo,
        }
    }
}

/// Replay a log of client frames (one JSON message per line, blank lines
/// and server messages skipped) and return the final session.
pub fn replay_log(rig: Arc<Rig>, log: &str) -> Session {
    let mut s = Session::new(rig);
    for line in log.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Ok(m) = serde_json::from_str::<Message>(line) {
            if matches!(m, Message::Highlight { .. } | Message::MeshDelta { .. } | Message::Error { .. } | Message::Load { scene: Some(_) }) {
                continue;
            }
        }
        s.handle_text(line);
    }
    s
}
