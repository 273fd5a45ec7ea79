//! JSON encodings of assemblages, certificates, measurements, states and
//! recipes. Complex numbers are `[re, im]` pairs, matrices are row-major
//! arrays of rows, and blocks are keyed by position label.

use crate::assemblage::{Assemblage, MeasurementSet, Povm};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Hermitian, C64};
use crate::realization::RealizationRecipe;
use crate::scenario::{DeterministicBox, Scenario};
use crate::witness::{WitnessBlock, WitnessCertificate};
use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn complex_from_json(v: &Value) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(c(re, im)),
            _ => Err(Error::Format(format!("complex entry must hold two numbers, got {v}"))),
        },
        _ => Err(Error::Format(format!("complex entry must be [re, im], got {v}"))),
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| Error::Format("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut cols = None;
    for row in rows {
        let row = row.as_array().ok_or_else(|| Error::Format("matrix row must be an array".into()))?;
        if *cols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Format("matrix rows differ in length".into()));
        }
        for z in row {
            entries.push(complex_from_json(z)?);
        }
    }
    Ok(CMatrix::from_row_iterator(n, cols.unwrap_or(0), entries))
}

pub fn hermitian_to_json(h: &Hermitian) -> Value {
    matrix_to_json(h.matrix())
}

pub fn hermitian_from_json(v: &Value) -> Result<Hermitian> {
    Ok(Hermitian::new(matrix_from_json(v)?)?)
}

pub fn vector_to_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(|&z| complex_to_json(z)).collect())
}

pub fn vector_from_json(v: &Value) -> Result<CVector> {
    let items = v.as_array().ok_or_else(|| Error::Format("vector must be an array".into()))?;
    let entries = items.iter().map(complex_from_json).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

pub fn serialize_cvector<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    vector_to_json(v).serialize(s)
}

pub fn serialize_opt_cvector<S: Serializer>(v: &Option<CVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&vector_to_json(v)),
        None => s.serialize_none(),
    }
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Format(format!("missing field \"{key}\"")))
}

fn blocks_to_json(s: &Scenario, blocks: &[Hermitian]) -> Value {
    let map: Map<String, Value> =
        s.positions().zip(blocks).map(|(p, b)| (s.position_label(&p), hermitian_to_json(b))).collect();
    Value::Object(map)
}

/// Blocks in canonical order; every position must appear exactly once.
fn blocks_from_json(s: &Scenario, v: &Value) -> Result<Vec<Hermitian>> {
    let map = v.as_object().ok_or_else(|| Error::Format("\"blocks\" must be an object".into()))?;
    let mut slots: Vec<Option<Hermitian>> = vec![None; s.num_positions()];
    for (label, m) in map {
        let pos = s.parse_position(label)?;
        let idx = s.index_of(&pos);
        if slots[idx].is_some() {
            return Err(Error::Format(format!("position {label} given twice")));
        }
        let h = Hermitian::new(matrix_from_json(m)?)
            .map_err(|source| Error::InvalidBlock { position: label.clone(), source })?;
        slots[idx] = Some(h);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| Error::Format(format!("missing block {}", s.position_label(&s.position_at(i))))))
        .collect()
}

pub fn scenario_from_json(v: &Value) -> Result<Scenario> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("scenario: {e}")))
}

pub fn assemblage_to_json(a: &Assemblage) -> Value {
    let mut obj = json!({
        "scenario": a.scenario(),
        "blocks": blocks_to_json(a.scenario(), a.blocks()),
    });
    if let Some(meta) = &a.meta {
        obj["meta"] = meta.clone();
    }
    obj
}

pub fn assemblage_from_json(v: &Value) -> Result<Assemblage> {
    let s = scenario_from_json(field(v, "scenario")?)?;
    let blocks = blocks_from_json(&s, field(v, "blocks")?)?;
    let mut a = Assemblage::new(s, blocks)?;
    a.meta = v.get("meta").cloned();
    Ok(a)
}

pub fn parse_assemblage(text: &str) -> Result<Assemblage> {
    assemblage_from_json(&serde_json::from_str(text)?)
}

pub fn witness_block_to_json(w: &WitnessBlock) -> Value {
    blocks_to_json(w.scenario(), w.blocks())
}

pub fn box_to_json(s: &Scenario, l: &DeterministicBox) -> Value {
    json!({ "index": s.box_index(l), "responses": l.responses })
}

pub fn box_from_json(s: &Scenario, v: &Value) -> Result<DeterministicBox> {
    let l = serde_json::from_value::<Vec<Vec<usize>>>(field(v, "responses")?.clone())
        .map(|responses| DeterministicBox { responses })
        .map_err(|e| Error::Format(format!("box responses: {e}")))?;
    if !s.is_box_consistent(&l) {
        return Err(Error::Format("box responses do not fit the scenario".into()));
    }
    Ok(l)
}

pub fn certificate_to_json(cert: &WitnessCertificate) -> Value {
    let s = cert.scenario();
    let mut obj = json!({
        "scenario": s,
        "z": witness_block_to_json(&cert.z),
        "epsilon": cert.epsilon,
        "floor": cert.floor,
        "argmin_box": box_to_json(s, &cert.argmin_box),
        "extreme_vector": vector_to_json(&cert.extreme_vector),
        "w": witness_block_to_json(&cert.w),
    });
    if let Some(meta) = &cert.meta {
        obj["meta"] = meta.clone();
    }
    obj
}

pub fn certificate_from_json(v: &Value) -> Result<WitnessCertificate> {
    let s = scenario_from_json(field(v, "scenario")?)?;
    let z = WitnessBlock::new(s.clone(), blocks_from_json(&s, field(v, "z")?)?)?;
    let w = WitnessBlock::new(s.clone(), blocks_from_json(&s, field(v, "w")?)?)?;
    let number = |key: &str| {
        field(v, key)?.as_f64().ok_or_else(|| Error::Format(format!("\"{key}\" must be a number")))
    };
    let argmin_box = box_from_json(&s, field(v, "argmin_box")?)?;
    Ok(WitnessCertificate {
        epsilon: number("epsilon")?,
        floor: number("floor")?,
        argmin_index: s.box_index(&argmin_box),
        argmin_box,
        extreme_vector: vector_from_json(field(v, "extreme_vector")?)?,
        z,
        w,
        meta: v.get("meta").cloned(),
    })
}

pub fn parse_certificate(text: &str) -> Result<WitnessCertificate> {
    certificate_from_json(&serde_json::from_str(text)?)
}

/// `parties[i][x][a]` as nested arrays of matrices.
pub fn measurements_to_json(m: &MeasurementSet) -> Value {
    Value::Array(
        (0..m.parties())
            .map(|i| {
                Value::Array(
                    m.party(i)
                        .iter()
                        .map(|povm| Value::Array(povm.iter().map(hermitian_to_json).collect()))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn measurements_from_json(v: &Value) -> Result<MeasurementSet> {
    let list = |v: &Value, what: &str| -> Result<Vec<Value>> {
        v.as_array().cloned().ok_or_else(|| Error::Format(format!("{what} must be an array")))
    };
    let parties = list(v, "measurements")?
        .iter()
        .map(|party| {
            list(party, "party")?
                .iter()
                .map(|povm| list(povm, "POVM")?.iter().map(hermitian_from_json).collect::<Result<Povm>>())
                .collect::<Result<Vec<Povm>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(parties)
}

/// A state given as `{"dims", "vector"}` or `{"dims", "density"}`.
#[derive(Debug, Clone)]
pub enum StateInput {
    Pure { dims: Vec<usize>, vector: CVector },
    Mixed { dims: Vec<usize>, density: Hermitian },
}

impl StateInput {
    pub fn dims(&self) -> &[usize] {
        match self {
            StateInput::Pure { dims, .. } | StateInput::Mixed { dims, .. } => dims,
        }
    }

    pub fn density(&self) -> Hermitian {
        match self {
            StateInput::Pure { vector, .. } => Hermitian::ket_projector(vector),
            StateInput::Mixed { density, .. } => density.clone(),
        }
    }
}

pub fn state_from_json(v: &Value) -> Result<StateInput> {
    let dims: Vec<usize> =
        serde_json::from_value(field(v, "dims")?.clone()).map_err(|e| Error::Format(format!("dims: {e}")))?;
    let total: usize = dims.iter().product();
    let state = if let Some(vec) = v.get("vector") {
        let vector = vector_from_json(vec)?;
        let norm = vector.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        StateInput::Pure { dims, vector }
    } else if let Some(rho) = v.get("density") {
        let density = hermitian_from_json(rho)?;
        crate::assemblage::check_density(&density)?;
        StateInput::Mixed { dims, density }
    } else {
        return Err(Error::Format("state needs \"vector\" or \"density\"".into()));
    };
    let found = match &state {
        StateInput::Pure { vector, .. } => vector.len(),
        StateInput::Mixed { density, .. } => density.dim(),
    };
    if found != total {
        return Err(Error::WrongDimension { expected: total, found });
    }
    Ok(state)
}

pub fn parse_state(text: &str) -> Result<StateInput> {
    state_from_json(&serde_json::from_str(text)?)
}

pub fn state_to_json(s: &StateInput) -> Value {
    match s {
        StateInput::Pure { dims, vector } => json!({ "dims": dims, "vector": vector_to_json(vector) }),
        StateInput::Mixed { dims, density } => json!({ "dims": dims, "density": hermitian_to_json(density) }),
    }
}

pub fn recipe_to_json(r: &RealizationRecipe) -> Value {
    json!({
        "state": { "dims": r.dims, "density": hermitian_to_json(&r.state) },
        "measurements": measurements_to_json(&r.measurements),
        "provenance": r.provenance,
        "tries": r.tries,
    })
}

pub fn recipe_from_json(v: &Value) -> Result<RealizationRecipe> {
    let state = state_from_json(field(v, "state")?)?;
    Ok(RealizationRecipe {
        dims: state.dims().to_vec(),
        state: state.density(),
        measurements: measurements_from_json(field(v, "measurements")?)?,
        provenance: field(v, "provenance")?.as_str().unwrap_or_default().to_string(),
        tries: field(v, "tries")?.as_u64().unwrap_or(0) as usize,
    })
}
