//! Model files: `ASVM` container. Payload: feature dimension `d` (`u32`),
//! scaler minima and maxima (`d` `f64` each), kernel id (`u8`), degree
//! (`u32`), gamma, coef0, C (`f64`), machine count (`u32`), then per machine
//! positive and negative class (`u8`), offset `b` (`f64`), support-vector
//! count (`u32`) and for each support vector its multiplier (`f64`), label
//! (`u8`, 1 = +1) and `d` coordinates.

use std::path::Path;

use super::binary::BinarySvm;
use super::kernel::KernelSpec;
use super::multiclass::{PairMachine, Scaler, SvmModel};
use crate::container::{self, FormatError, Reader, Writer};
use crate::{Error, NUM_CLASSES};

pub const MAGIC: [u8; 4] = *b"ASVM";

pub fn to_bytes(model: &SvmModel) -> Vec<u8> {
    let mut w = Writer::new();
    let d = model.dim();
    w.u32(d as u32);
    w.f64s(&model.scaler.min);
    w.f64s(&model.scaler.max);
    let (degree, gamma, coef0) = match model.kernel {
        KernelSpec::Linear => (0, 0.0, 0.0),
        KernelSpec::Polynomial { degree, gamma, coef0 } => (degree, gamma, coef0),
        KernelSpec::Rbf { gamma } => (0, gamma, 0.0),
    };
    w.u8(model.kernel.id());
    w.u32(degree);
    w.f64(gamma);
    w.f64(coef0);
    w.f64(model.c);
    w.u32(model.machines.len() as u32);
    for m in &model.machines {
        w.u8(m.positive as u8);
        w.u8(m.negative as u8);
        w.f64(m.svm.b);
        w.u32(m.svm.alphas.len() as u32);
        for ((a, y), sv) in m.svm.alphas.iter().zip(&m.svm.labels).zip(&m.svm.support_vectors) {
            w.f64(*a);
            w.u8((*y > 0.0) as u8);
            w.f64s(sv);
        }
    }
    container::seal(MAGIC, &w.into_bytes())
}

pub fn from_bytes(bytes: &[u8]) -> Result<SvmModel, FormatError> {
    let payload = container::open(MAGIC, bytes)?;
    let mut r = Reader::new(payload);
    let d = r.u32()? as usize;
    let min = r.f64s(d)?;
    let max = r.f64s(d)?;
    let kind = r.u8()?;
    let degree = r.u32()?;
    let gamma = r.f64()?;
    let coef0 = r.f64()?;
    let kernel = match kind {
        0 => KernelSpec::Linear,
        1 => KernelSpec::Polynomial { degree, gamma, coef0 },
        2 => KernelSpec::Rbf { gamma },
        k => return Err(FormatError::Malformed(format!("unknown kernel id {k}"))),
    };
    kernel.validate().map_err(|e| FormatError::Malformed(e.to_string()))?;
    let c = r.f64()?;
    let count = r.u32()? as usize;
    if count > NUM_CLASSES * NUM_CLASSES {
        return Err(FormatError::Malformed(format!("implausible machine count {count}")));
    }
    let mut machines = Vec::with_capacity(count);
    for _ in 0..count {
        let positive = r.u8()? as usize;
        let negative = r.u8()? as usize;
        if positive >= NUM_CLASSES || negative >= NUM_CLASSES {
            return Err(FormatError::Malformed(format!("class pair ({positive}, {negative}) out of range")));
        }
        let b = r.f64()?;
        let n_sv = r.u32()? as usize;
        let mut svm = BinarySvm { support_vectors: Vec::new(), alphas: Vec::new(), labels: Vec::new(), b, kernel, c };
        for _ in 0..n_sv {
            svm.alphas.push(r.f64()?);
            svm.labels.push(match r.u8()? {
                1 => 1.0,
                0 => -1.0,
                v => return Err(FormatError::Malformed(format!("bad label byte {v}"))),
            });
            svm.support_vectors.push(r.f64s(d)?);
        }
        machines.push(PairMachine { positive, negative, svm });
    }
    r.finish()?;
    Ok(SvmModel { scaler: Scaler { min, max }, machines, kernel, c })
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<(), Error> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SvmModel, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(from_bytes(&bytes)?)
}
