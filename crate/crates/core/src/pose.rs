//! Interactive posing: handle moves deform a cage, the cage deforms the
//! mesh through Green Coordinates, and per-handle weights confine the result
//! to the handle's pad:
//!
//! `V' = V + (V_gc - V) · w`
//!
//! `V` is the base pose at the last commit and `V_gc - V` is the Green
//! Coordinates displacement of the cage change since that commit. Within an
//! interaction `w` is the max weight over the active handles of one cage;
//! the two cages contribute independently.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attenuation::WeightSet;
use crate::cage::Cage;
use crate::fatpad::{FatPadMap, Region};
use crate::geometry::{from_array, Vec3};
use crate::green::GcBinding;
use crate::mesh::{TriMesh, VertexId};

pub const DEFAULT_UNDO_DEPTH: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("unknown handle {0}")]
    UnknownHandle(String),
    #[error("handle {handle} is bound to fixed cage vertex {vertex}")]
    FixedVertex { handle: String, vertex: usize },
    #[error("non-finite target for handle {0}")]
    NonFinite(String),
    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),
    #[error("inconsistent rig: {0}")]
    Inconsistent(String),
    #[error("pose file: {0}")]
    Format(String),
}

/// Everything a pose session reads and never changes.
#[derive(Debug)]
pub struct Rig {
    pub mesh: TriMesh,
    pub map: FatPadMap,
    pub weights: WeightSet,
    cages: [Cage; 2],
    bindings: [GcBinding; 2],
    /// mesh vertex -> bound index, per cage
    bound_index: [HashMap<VertexId, usize>; 2],
    /// handle -> (cage slot, cage vertex)
    handle_slot: BTreeMap<String, (usize, usize)>,
}

fn slot(region: Region) -> usize {
    match region {
        Region::Upper => 0,
        Region::Lower => 1,
    }
}

impl Rig {
    /// Check that every artifact belongs to `mesh` and `map` and that each
    /// handle is bound in the cage of its region.
    pub fn new(mesh: TriMesh, map: FatPadMap, upper: Cage, lower: Cage, bindings: [GcBinding; 2], weights: WeightSet) -> Result<Rig, PoseError> {
        let bad = |m: String| Err(PoseError::Inconsistent(m));
        let hash = mesh.content_hash();
        if weights.mesh_fingerprint != hash || weights.map_hash != map.map_hash() {
            return Err(PoseError::FingerprintMismatch("weights were built for another mesh or map".into()));
        }
        let cages = [upper, lower];
        for (k, region) in Region::ALL.iter().enumerate() {
            if cages[k].region != *region {
                return bad(format!("cage slot {k} holds the {} cage", cages[k].region.as_str()));
            }
            let b = &bindings[k];
            if b.mesh_hash != hash {
                return Err(PoseError::FingerprintMismatch(format!("{} binding belongs to another mesh", region.as_str())));
            }
            if b.cage_hash != crate::green::cage_hash(&cages[k].vertices, &cages[k].triangles) {
                return Err(PoseError::FingerprintMismatch(format!("{} binding belongs to another cage", region.as_str())));
            }
        }
        let mut handle_slot = BTreeMap::new();
        for h in &map.handles {
            let s = slot(map.pad_of(h).region);
            let Some(&v) = cages[s].handle_binding.get(&h.id) else {
                return bad(format!("handle {} has no vertex in its cage", h.id));
            };
            if weights.matrix(&h.id).is_none() {
                return bad(format!("handle {} has no weights", h.id));
            }
            handle_slot.insert(h.id.clone(), (s, v));
        }
        let bound_index = [0, 1].map(|k| bindings[k].bound.iter().enumerate().map(|(i, &v)| (v, i)).collect());
        Ok(Rig {
            mesh,
            map,
            weights,
            cages,
            bindings,
            bound_index,
            handle_slot,
        })
    }

    pub fn cage(&self, region: Region) -> &Cage {
        &self.cages[slot(region)]
    }

    pub fn binding(&self, region: Region) -> &GcBinding {
        &self.bindings[slot(region)]
    }

    /// Region of the cage the handle drives.
    pub fn handle_region(&self, handle: &str) -> Option<Region> {
        self.handle_slot.get(handle).map(|&(s, _)| Region::ALL[s])
    }

    pub fn handle_cage_vertex(&self, handle: &str) -> Option<usize> {
        self.handle_slot.get(handle).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    base: Vec<Vec3>,
    cages: [Vec<Vec3>; 2],
}

/// What an undo did.
#[derive(Debug, Clone, PartialEq)]
pub enum UndoOutcome {
    /// Uncommitted edits were dropped.
    Reverted(Vec<VertexId>),
    /// The previous committed state was restored.
    Restored(Vec<VertexId>),
    /// Nothing to undo.
    Empty,
}

impl UndoOutcome {
    pub fn changed(&self) -> &[VertexId] {
        match self {
            UndoOutcome::Reverted(v) | UndoOutcome::Restored(v) => v,
            UndoOutcome::Empty => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoseState {
    rig: Arc<Rig>,
    base: Vec<Vec3>,
    current: Vec<Vec3>,
    cages: [Vec<Vec3>; 2],
    committed: [Vec<Vec3>; 2],
    active: BTreeSet<String>,
    /// per cage: vertex -> w·(V_gc - V) for the current interaction
    contrib: [BTreeMap<VertexId, Vec3>; 2],
    undo: VecDeque<Snapshot>,
    depth: usize,
}

impl PoseState {
    pub fn new(rig: Arc<Rig>) -> Self {
        Self::with_depth(rig, DEFAULT_UNDO_DEPTH)
    }

    pub fn with_depth(rig: Arc<Rig>, depth: usize) -> Self {
        let rest = rig.mesh.positions().to_vec();
        let cages = [rig.cages[0].vertices.clone(), rig.cages[1].vertices.clone()];
        PoseState {
            base: rest.clone(),
            current: rest,
            committed: cages.clone(),
            cages,
            rig,
            active: BTreeSet::new(),
            contrib: Default::default(),
            undo: VecDeque::new(),
            depth,
        }
    }

    pub fn rig(&self) -> &Arc<Rig> {
        &self.rig
    }

    pub fn base_positions(&self) -> &[Vec3] {
        &self.base
    }

    pub fn current_positions(&self) -> &[Vec3] {
        &self.current
    }

    pub fn cage_positions(&self, region: Region) -> &[Vec3] {
        &self.cages[slot(region)]
    }

    pub fn active_handles(&self) -> &BTreeSet<String> {
        &self.active
    }

    pub fn undo_len(&self) -> usize {
        self.undo.len()
    }

    pub fn current_mesh(&self) -> TriMesh {
        self.rig.mesh.with_positions(self.current.clone()).expect("same topology")
    }

    /// Anchor rest position plus the displacement of the handle's cage vertex.
    pub fn handle_position(&self, handle: &str) -> Result<Vec3, PoseError> {
        let &(s, v) = self.rig.handle_slot.get(handle).ok_or_else(|| PoseError::UnknownHandle(handle.into()))?;
        let h = self.rig.map.handle(handle).map_err(|_| PoseError::UnknownHandle(handle.into()))?;
        Ok(h.rest_position + (self.cages[s][v] - self.rig.cages[s].vertices[v]))
    }

    /// Move `handle` so its position becomes `target`. Returns the mesh
    /// vertices whose position changed.
    pub fn move_handle(&mut self, handle: &str, target: Vec3) -> Result<Vec<VertexId>, PoseError> {
        let from = self.handle_position(handle)?;
        self.move_handle_by(handle, target - from)
    }

    /// Move `handle` by `delta` from where it is now.
    pub fn move_handle_by(&mut self, handle: &str, delta: Vec3) -> Result<Vec<VertexId>, PoseError> {
        let &(s, v) = self.rig.handle_slot.get(handle).ok_or_else(|| PoseError::UnknownHandle(handle.into()))?;
        if self.rig.cages[s].is_fixed(v) {
            return Err(PoseError::FixedVertex {
                handle: handle.into(),
                vertex: v,
            });
        }
        if !delta.iter().all(|x| x.is_finite()) {
            return Err(PoseError::NonFinite(handle.into()));
        }
        self.cages[s][v] += delta;
        self.active.insert(handle.to_string());
        Ok(self.refresh(s))
    }

    /// Recompute the contribution of cage `s` and the affected vertices.
    fn refresh(&mut self, s: usize) -> Vec<VertexId> {
        let rig = &self.rig;
        let region = Region::ALL[s];
        let mut w: BTreeMap<VertexId, f64> = BTreeMap::new();
        for h in self.active.iter().filter(|h| rig.handle_region(h) == Some(region)) {
            for &(v, x) in &rig.weights.matrix(h).expect("checked in Rig::new").entries {
                if x > 0.0 {
                    let e = w.entry(v).or_insert(0.0);
                    *e = e.max(x);
                }
            }
        }
        let binding = &rig.bindings[s];
        let delta = binding.delta(&self.committed[s], &self.cages[s]);
        let index = &rig.bound_index[s];
        let items: Vec<(VertexId, f64)> = w.into_iter().collect();
        let new: BTreeMap<VertexId, Vec3> = items
            .par_iter()
            .filter_map(|&(v, x)| index.get(&v).map(|&k| (v, delta.at(k) * x)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        let old = std::mem::replace(&mut self.contrib[s], new);
        let touched: BTreeSet<VertexId> = old.keys().chain(self.contrib[s].keys()).copied().collect();
        let mut changed = Vec::new();
        for v in touched {
            let p = self.blend(v);
            if p != self.current[v] {
                self.current[v] = p;
                changed.push(v);
            }
        }
        changed
    }

    fn blend(&self, v: VertexId) -> Vec3 {
        let mut p = self.base[v];
        for c in &self.contrib {
            if let Some(d) = c.get(&v) {
                p += d;
            }
        }
        p
    }

    /// Make the current pose the new base.
    pub fn commit(&mut self) {
        if self.undo.len() == self.depth {
            self.undo.pop_front();
        }
        if self.depth > 0 {
            self.undo.push_back(Snapshot {
                base: self.base.clone(),
                cages: self.committed.clone(),
            });
        }
        self.base = self.current.clone();
        self.committed = self.cages.clone();
        self.active.clear();
        self.contrib = Default::default();
    }

    /// Drop uncommitted edits, or else restore the previous commit.
    pub fn undo(&mut self) -> UndoOutcome {
        if !self.active.is_empty() {
            self.cages = self.committed.clone();
            self.active.clear();
            self.contrib = Default::default();
            return UndoOutcome::Reverted(self.reset_current());
        }
        match self.undo.pop_back() {
            None => UndoOutcome::Empty,
            Some(snap) => {
                self.base = snap.base;
                self.cages = snap.cages.clone();
                self.committed = snap.cages;
                UndoOutcome::Restored(self.reset_current())
            }
        }
    }

    fn reset_current(&mut self) -> Vec<VertexId> {
        let changed: Vec<VertexId> = (0..self.current.len()).filter(|&v| self.current[v] != self.base[v]).collect();
        self.current.clone_from(&self.base);
        changed
    }
}

/// Mesh and map a pose file was recorded against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFingerprint {
    pub mesh: String,
    pub map: String,
}

impl PoseFingerprint {
    pub fn of(rig: &Rig) -> Self {
        PoseFingerprint {
            mesh: rig.mesh.content_hash(),
            map: rig.map.map_hash(),
        }
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// One handle move, relative to the handle's position at that point of the
/// script. `commit: false` keeps the next edit in the same interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseEdit {
    pub handle: String,
    pub displacement: [f64; 3],
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub commit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    pub fingerprint: PoseFingerprint,
    pub edits: Vec<PoseEdit>,
}

impl PoseFile {
    pub fn new(rig: &Rig) -> Self {
        PoseFile {
            fingerprint: PoseFingerprint::of(rig),
            edits: Vec::new(),
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, PoseError> {
        serde_json::from_slice(bytes).map_err(|e| PoseError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("pose file serializes")
    }
}

/// Replay `file` from the rest state, in order, committing after each edit
/// unless it says otherwise. A trailing uncommitted group is committed too.
pub fn apply_pose_script(rig: Arc<Rig>, file: &PoseFile) -> Result<PoseState, PoseError> {
    let want = PoseFingerprint::of(&rig);
    if file.fingerprint != want {
        return Err(PoseError::FingerprintMismatch(format!(
            "pose recorded for mesh {} / map {}, bundle has mesh {} / map {}",
            file.fingerprint.mesh, file.fingerprint.map, want.mesh, want.map
        )));
    }
    let mut state = PoseState::new(rig);
    for e in &file.edits {
        state.move_handle_by(&e.handle, from_array(e.displacement))?;
        if e.commit {
            state.commit();
        }
    }
    if !state.active.is_empty() {
        state.commit();
    }
    Ok(state)
}
