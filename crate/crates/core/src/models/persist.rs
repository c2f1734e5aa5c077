//! Model files: `BUSTIMEM`, format version, kind code, anchor count, then
//! named arrays of little-endian `f64`.

use std::io::Read;
use std::path::Path;

use super::additive::SplineBasis;
use super::lstm::{param_count, MinMax};
use super::*;

pub const MAGIC: &[u8; 8] = b"BUSTIMEM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Delay(DelayModel),
    Knn(KnnModel),
    Kr(KernelModel),
    Bam(AdditiveModel),
    Lstm(LstmModel),
    Oracle(OracleModel),
    Constant(ConstantModel),
}

impl TrainedModel {
    fn inner(&self) -> &dyn Predictor {
        match self {
            TrainedModel::Delay(m) => m,
            TrainedModel::Knn(m) => m,
            TrainedModel::Kr(m) => m,
            TrainedModel::Bam(m) => m,
            TrainedModel::Lstm(m) => m,
            TrainedModel::Oracle(m) => m,
            TrainedModel::Constant(m) => m,
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes = std::fs::read(path).map_err(|e| ModelError::Format(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            ModelError::Format(m) => ModelError::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn arrays(&self) -> Vec<(&'static str, Vec<f64>)> {
        let flat = |t: &[Vec<f64>]| t.iter().flatten().copied().collect::<Vec<f64>>();
        match self {
            TrainedModel::Delay(m) => vec![("mu", m.profile.mu.clone())],
            TrainedModel::Knn(m) => vec![("k", vec![m.k as f64]), ("times", flat(&m.times))],
            TrainedModel::Kr(m) => vec![("bandwidth", vec![m.bandwidth]), ("times", flat(&m.times))],
            TrainedModel::Bam(m) => vec![
                ("config", vec![m.config.knots as f64, m.config.lambda]),
                ("ranges", vec![m.tod_basis.lo, m.tod_basis.hi, m.dist_basis.lo, m.dist_basis.hi]),
                ("beta", m.beta.clone()),
                ("anchor_distances", m.anchor_distances.clone()),
            ],
            TrainedModel::Lstm(m) => vec![
                ("hidden", vec![m.hidden as f64]),
                ("scales", vec![m.tod_scale.lo, m.tod_scale.hi, m.time_scale.lo, m.time_scale.hi, m.dist_scale.lo, m.dist_scale.hi]),
                ("params", m.params.clone()),
                ("anchor_distances", m.anchor_distances.clone()),
            ],
            // trip ids travel as newline-joined UTF-8 bytes
            TrainedModel::Oracle(m) => vec![
                ("trip_ids", m.ids.join("\n").bytes().map(f64::from).collect()),
                ("tods", m.tods.clone()),
                ("times", flat(&m.times)),
            ],
            TrainedModel::Constant(m) => vec![("value", vec![m.value])],
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let arrays = self.arrays();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&kind_code(self.kind()).to_le_bytes());
        out.extend_from_slice(&(self.anchor_count() as u64).to_le_bytes());
        out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
        for (name, values) in arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a model file"));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let kind = kind_from_code(read_u32(&mut r)?)?;
        let n = read_u64(&mut r)? as usize;
        if n < 2 {
            return Err(bad("anchor count below 2"));
        }
        let count = read_u32(&mut r)?;
        let mut arrays = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            if len > r.len() {
                return Err(bad("truncated array name"));
            }
            let name = String::from_utf8(r[..len].to_vec()).map_err(|_| bad("array name is not UTF-8"))?;
            r = &r[len..];
            let len = read_u64(&mut r)? as usize;
            if len.checked_mul(8).is_none_or(|b| b > r.len()) {
                return Err(bad(&format!("array {name} is truncated")));
            }
            let values = r[..len * 8].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            r = &r[len * 8..];
            arrays.push((name, values));
        }
        if !r.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let a = Arrays(arrays);
        let model = match kind {
            ModelKind::Delay => TrainedModel::Delay(DelayModel { profile: MeanProfile { mu: a.exact("mu", n)? } }),
            ModelKind::Knn => {
                let k = a.count("k")?;
                let times = a.rows("times", n)?;
                if k == 0 || k > times.len() {
                    return Err(bad("k out of range"));
                }
                TrainedModel::Knn(KnnModel { k, times })
            }
            ModelKind::Kr => {
                let h = a.exact("bandwidth", 1)?[0];
                if !(h > 0.0) {
                    return Err(bad("bandwidth must be positive"));
                }
                TrainedModel::Kr(KernelModel { bandwidth: h, times: a.rows("times", n)? })
            }
            ModelKind::Bam => {
                let cfg = a.exact("config", 2)?;
                let knots = cfg[0] as usize;
                let r = a.exact("ranges", 4)?;
                let tod_basis = SplineBasis::new(r[0], r[1], knots);
                let dist_basis = SplineBasis::new(r[2], r[3], knots);
                let beta = a.exact("beta", 1 + tod_basis.size() + dist_basis.size())?;
                TrainedModel::Bam(AdditiveModel {
                    config: AdditiveConfig { knots, lambda: cfg[1] },
                    tod_basis,
                    dist_basis,
                    beta,
                    anchor_distances: a.exact("anchor_distances", n)?,
                })
            }
            ModelKind::Lstm => {
                let hidden = a.count("hidden")?;
                let s = a.exact("scales", 6)?;
                let mm = |lo: f64, hi: f64| MinMax { lo, hi };
                TrainedModel::Lstm(LstmModel {
                    hidden,
                    params: a.exact("params", param_count(hidden))?,
                    tod_scale: mm(s[0], s[1]),
                    time_scale: mm(s[2], s[3]),
                    dist_scale: mm(s[4], s[5]),
                    anchor_distances: a.exact("anchor_distances", n)?,
                })
            }
            ModelKind::Oracle => {
                let times = a.rows("times", n)?;
                let bytes: Vec<u8> = a.get("trip_ids")?.iter().map(|&b| b as u8).collect();
                let joined = String::from_utf8(bytes).map_err(|_| bad("trip_ids is not UTF-8"))?;
                let ids: Vec<String> = joined.split('\n').map(str::to_string).collect();
                if ids.len() != times.len() {
                    return Err(bad("trip_ids does not match the trip count"));
                }
                TrainedModel::Oracle(OracleModel { ids, tods: a.exact("tods", times.len())?, times })
            }
            ModelKind::Constant => TrainedModel::Constant(ConstantModel { value: a.exact("value", 1)?[0], anchors: n }),
        };
        Ok(model)
    }
}

impl Predictor for TrainedModel {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn anchor_count(&self) -> usize {
        self.inner().anchor_count()
    }

    fn predict(&self, q: &Query) -> Result<Prediction, ModelError> {
        self.inner().predict(q)
    }
}

fn kind_code(k: ModelKind) -> u32 {
    match k {
        ModelKind::Delay => 1,
        ModelKind::Knn => 2,
        ModelKind::Kr => 3,
        ModelKind::Bam => 4,
        ModelKind::Lstm => 5,
        ModelKind::Oracle => 6,
        ModelKind::Constant => 7,
    }
}

fn kind_from_code(c: u32) -> Result<ModelKind, ModelError> {
    Ok(match c {
        1 => ModelKind::Delay,
        2 => ModelKind::Knn,
        3 => ModelKind::Kr,
        4 => ModelKind::Bam,
        5 => ModelKind::Lstm,
        6 => ModelKind::Oracle,
        7 => ModelKind::Constant,
        _ => return Err(bad(&format!("unknown model kind code {c}"))),
    })
}

fn bad(msg: &str) -> ModelError {
    ModelError::Format(msg.to_string())
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<(), ModelError> {
    r.read_exact(buf).map_err(|_| bad("unexpected end of file"))
}

fn read_u32(r: &mut &[u8]) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut &[u8]) -> Result<u64, ModelError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

struct Arrays(Vec<(String, Vec<f64>)>);

impl Arrays {
    fn get(&self, name: &str) -> Result<&[f64], ModelError> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice()).ok_or_else(|| bad(&format!("missing array {name}")))
    }

    fn exact(&self, name: &str, len: usize) -> Result<Vec<f64>, ModelError> {
        let v = self.get(name)?;
        if v.len() != len {
            return Err(bad(&format!("array {name} has {} values, expected {len}", v.len())));
        }
        Ok(v.to_vec())
    }

    fn count(&self, name: &str) -> Result<usize, ModelError> {
        let v = self.exact(name, 1)?[0];
        if !(v >= 1.0 && v.fract() == 0.0) {
            return Err(bad(&format!("{name} must be a positive integer")));
        }
        Ok(v as usize)
    }

    fn rows(&self, name: &str, n: usize) -> Result<Vec<Vec<f64>>, ModelError> {
        let v = self.get(name)?;
        if v.is_empty() || v.len() % n != 0 {
            return Err(bad(&format!("array {name} is not a whole number of rows of {n}")));
        }
        Ok(v.chunks(n).map(<[f64]>::to_vec).collect())
    }
}
